//! Property-based invariants for the generator, allocators, and oracle.

use online_mms::experiments::{
    generate_instance, make_allocator, random_normalized_instance, GeneratorConfig, ItemOrder,
};
use online_mms::oracle::mms_all;
use online_mms::{run_stream, Kind, Scalar, DEFAULT_CAP};
use proptest::prelude::*;

fn kinds() -> impl Strategy<Value = Kind> {
    prop_oneof![Just(Kind::Goods), Just(Kind::Chores)]
}

fn orders() -> impl Strategy<Value = ItemOrder> {
    prop_oneof![Just(ItemOrder::Descending), Just(ItemOrder::Random)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_instances_are_normalized(
        n in 1usize..6,
        blocks in 1usize..6,
        kind in kinds(),
        order in orders(),
        seed in any::<u64>(),
    ) {
        let config = GeneratorConfig { n, m: n * blocks, kind, order };
        let instance = generate_instance(&config, seed).unwrap();
        prop_assert!(instance.is_normalized());
        prop_assert_eq!(instance.m(), n * blocks);
        for agent in 0..n {
            prop_assert!(instance.row(agent).iter().all(|v| !v.is_negative()));
        }
    }

    #[test]
    fn descending_instances_are_monotone(
        n in 1usize..6,
        blocks in 1usize..6,
        kind in kinds(),
        seed in any::<u64>(),
    ) {
        let config = GeneratorConfig { n, m: n * blocks, kind, order: ItemOrder::Descending };
        let instance = generate_instance(&config, seed).unwrap();
        for agent in 0..n {
            prop_assert!(instance.row(agent).windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn allocators_are_deterministic_and_well_formed(
        n in 2usize..5,
        m in 2usize..9,
        seed in any::<u64>(),
        which in 0usize..6,
    ) {
        let (name, kind) = [
            ("greedy-goods", Kind::Goods),
            ("alg2-monotone-goods", Kind::Goods),
            ("alg3-small-goods", Kind::Goods),
            ("greedy-chores", Kind::Chores),
            ("alg4-chores-n", Kind::Chores),
            ("alg6-sesqui", Kind::Chores),
        ][which];
        let instance = random_normalized_instance(kind, n, m, seed).unwrap();
        let alpha = Scalar::one() - Scalar::ratio(1, 1000);
        let run = || {
            let mut allocator = make_allocator(name, n, Some(&alpha)).unwrap();
            run_stream(allocator.as_mut(), &instance).unwrap()
        };
        let a = run();
        let b = run();
        prop_assert_eq!(a.owners(), b.owners());
        prop_assert_eq!(a.m(), m);
        prop_assert!(a.owners().iter().all(|&o| o < n));
    }

    #[test]
    fn generated_mms_shortcut_agrees_with_oracle(
        blocks in 1usize..5,
        kind in kinds(),
        order in orders(),
        seed in any::<u64>(),
    ) {
        let config = GeneratorConfig { n: 2, m: 2 * blocks, kind, order };
        let instance = generate_instance(&config, seed).unwrap();
        let mms = mms_all(&instance, DEFAULT_CAP).unwrap().mms;
        prop_assert_eq!(mms, vec![Scalar::one(); 2]);
    }

    #[test]
    fn oracle_respects_normalized_bounds(
        n in 2usize..4,
        m in 2usize..8,
        kind in kinds(),
        seed in any::<u64>(),
    ) {
        let instance = random_normalized_instance(kind, n, m, seed).unwrap();
        let mms = mms_all(&instance, DEFAULT_CAP).unwrap().mms;
        for value in &mms {
            match kind {
                Kind::Goods => prop_assert!(value <= &Scalar::one()),
                Kind::Chores => prop_assert!(value >= &Scalar::one() || m < n),
            }
        }
    }
}
