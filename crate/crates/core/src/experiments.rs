//! Random instance generation and the experiment harness.
//!
//! Instances are built by exact stick-breaking: each agent's endowment is n
//! unit blocks, each split into m/n pieces at sorted uniform cut points
//! with denominator 2^32. Every row sums to n exactly and — because the
//! blocks themselves form an n-partition worth exactly 1 per bundle —
//! every agent's MMS is exactly 1. Ratios are therefore computed directly
//! from bundle values, with oracle spot-checks left to the test suite.

use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chores::{
    ChoresN, GreedyChores, SesquiRoundRobin, SmallChores, SmallChoresConfig, SmallChoresTwo,
    Sqrt2Chores,
};
use crate::error::{Error, Result};
use crate::goods::{
    CappedGreedyGoods, GreedyGoods, MonotoneGoods, SmallGoods, SmallGoodsConfig, TwoAgentGoods,
};
use crate::instance::{Instance, Kind};
use crate::online::{run_stream, worst_ratio, OnlineAllocator};
use crate::scalar::Scalar;

const DENOM: i64 = 1 << 32;

/// Arrival order of the generated items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemOrder {
    /// Every agent's values non-increasing over time (monotone instance).
    #[serde(alias = "monotone")]
    Descending,
    /// One shared random arrival permutation.
    Random,
}

impl std::str::FromStr for ItemOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "descending" | "monotone" => Ok(ItemOrder::Descending),
            "random" => Ok(ItemOrder::Random),
            other => Err(Error::InvalidConfig(format!(
                "unknown order '{other}' (expected monotone|random)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub n: usize,
    /// Total item count; must be a multiple of n.
    pub m: usize,
    pub kind: Kind,
    pub order: ItemOrder,
}

impl GeneratorConfig {
    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::InvalidConfig("n and m must be positive".into()));
        }
        if self.m % self.n != 0 {
            return Err(Error::InvalidConfig(format!(
                "m = {} is not a multiple of n = {}",
                self.m, self.n
            )));
        }
        Ok(())
    }
}

/// Splits a unit interval into `pieces` parts at sorted uniform cut points
/// (resolution 2^32); the residue lands in the final piece so the parts sum
/// to exactly 1.
fn break_unit(rng: &mut ChaCha8Rng, pieces: usize) -> Vec<Scalar> {
    let mut cuts: Vec<u64> = (0..pieces - 1).map(|_| rng.next_u32() as u64).collect();
    cuts.sort_unstable();
    cuts.push(DENOM as u64);
    let mut out = Vec::with_capacity(pieces);
    let mut prev = 0u64;
    for c in cuts {
        out.push(Scalar::ratio((c - prev) as i64, DENOM));
        prev = c;
    }
    out
}

/// Generates one random normalized instance with MMS exactly 1 for every
/// agent. Deterministic in (config, seed).
pub fn generate_instance(config: &GeneratorConfig, seed: u64) -> Result<Instance> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_block = config.m / config.n;
    let mut rows: Vec<Vec<Scalar>> = Vec::with_capacity(config.n);
    for _ in 0..config.n {
        let mut row = Vec::with_capacity(config.m);
        for _ in 0..config.n {
            row.extend(break_unit(&mut rng, per_block));
        }
        rows.push(row);
    }
    // Items are formed by rank-matching: every agent's pieces are sorted
    // descending, and the j-th item carries each agent's j-th largest
    // piece. MMS depends only on each row's multiset, so the exact-1
    // property survives the re-sort.
    for row in &mut rows {
        row.sort_by(|a, b| b.cmp(a));
    }
    if config.order == ItemOrder::Random {
        // Shared arrival permutation of the rank-matched items.
        let mut perm: Vec<usize> = (0..config.m).collect();
        perm.shuffle(&mut rng);
        for row in &mut rows {
            let shuffled: Vec<Scalar> = perm.iter().map(|&j| row[j].clone()).collect();
            *row = shuffled;
        }
    }
    Instance::new(config.kind, rows, true)
}

/// Instantiates an allocator by its CLI name. `alpha` is required by the
/// small-item algorithms and ignored elsewhere; experiment allocators run
/// in lenient mode (oversized items allowed, guarantee void) so random
/// streams never abort.
pub fn make_allocator(
    name: &str,
    n: usize,
    alpha: Option<&Scalar>,
) -> Result<Box<dyn OnlineAllocator + Send>> {
    let need_alpha = || {
        alpha.cloned().ok_or_else(|| {
            Error::InvalidConfig(format!("algorithm '{name}' requires --alpha p/q"))
        })
    };
    Ok(match name {
        "greedy-goods" => Box::new(GreedyGoods::new(n)),
        "capped-greedy-goods" => Box::new(CappedGreedyGoods::new(n)?),
        "alg1-goods-2" => Box::new(TwoAgentGoods::new(n)?),
        "alg2-monotone-goods" => Box::new(MonotoneGoods::new(n)?),
        "alg3-small-goods" => Box::new(SmallGoods::new(n, SmallGoodsConfig::lenient(need_alpha()?)?)?),
        "greedy-chores" => Box::new(GreedyChores::new(n)),
        "alg4-chores-n" => Box::new(ChoresN::new(n)?),
        "alg5-chores-2" => Box::new(Sqrt2Chores::new(n)?),
        "alg6-sesqui" => Box::new(SesquiRoundRobin::new(n)?),
        "alg7-small-chores" => Box::new(SmallChores::new(n, SmallChoresConfig::lenient(need_alpha()?)?)?),
        "alg8-small-chores-2" => {
            if n != 2 {
                return Err(Error::InvalidConfig(format!(
                    "alg8-small-chores-2 requires n = 2, got {n}"
                )));
            }
            Box::new(SmallChoresTwo::new(SmallChoresConfig::lenient(need_alpha()?)?)?)
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown algorithm '{other}'"
            )))
        }
    })
}

/// The kind of instance an algorithm consumes.
pub fn algorithm_kind(name: &str) -> Result<Kind> {
    match name {
        "greedy-goods" | "capped-greedy-goods" | "alg1-goods-2" | "alg2-monotone-goods"
        | "alg3-small-goods" => Ok(Kind::Goods),
        "greedy-chores" | "alg4-chores-n" | "alg5-chores-2" | "alg6-sesqui"
        | "alg7-small-chores" | "alg8-small-chores-2" => Ok(Kind::Chores),
        other => Err(Error::InvalidConfig(format!("unknown algorithm '{other}'"))),
    }
}

/// All recognized algorithm names, goods first.
pub const ALGORITHM_NAMES: [&str; 11] = [
    "greedy-goods",
    "capped-greedy-goods",
    "alg1-goods-2",
    "alg2-monotone-goods",
    "alg3-small-goods",
    "greedy-chores",
    "alg4-chores-n",
    "alg5-chores-2",
    "alg6-sesqui",
    "alg7-small-chores",
    "alg8-small-chores-2",
];

/// One algorithm's aggregate over a batch of generated instances. Ratios
/// are exact rationals (MMS = 1 by construction); the summary statistics
/// are lossy f64 views for reporting.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub algorithm: String,
    pub kind: Kind,
    pub n: usize,
    pub m: usize,
    pub order: ItemOrder,
    pub trials: usize,
    pub seed: u64,
    pub ratios: Vec<Scalar>,
    pub avg: f64,
    pub min: f64,
    pub max: f64,
    /// Fraction of trials with a zero worst ratio (some agent got nothing
    /// of value; meaningful for goods).
    pub zero_fraction: f64,
    pub elapsed_ms: u128,
}

fn one_trial(
    name: &str,
    alpha: Option<&Scalar>,
    config: &GeneratorConfig,
    seed: u64,
    trial: usize,
) -> Result<Scalar> {
    let instance = generate_instance(config, seed ^ trial as u64)?;
    let mut allocator = make_allocator(name, config.n, alpha)?;
    let allocation = run_stream(allocator.as_mut(), &instance)?;
    let ones = vec![Scalar::one(); config.n];
    worst_ratio(&instance, &allocation, &ones)
}

fn aggregate(
    name: &str,
    config: &GeneratorConfig,
    trials: usize,
    seed: u64,
    ratios: Vec<Scalar>,
    elapsed_ms: u128,
) -> ExperimentReport {
    let floats: Vec<f64> = ratios.iter().map(Scalar::to_f64).collect();
    let zero = ratios.iter().filter(|r| r.is_zero()).count();
    ExperimentReport {
        algorithm: name.to_string(),
        kind: config.kind,
        n: config.n,
        m: config.m,
        order: config.order,
        trials,
        seed,
        avg: floats.iter().sum::<f64>() / floats.len() as f64,
        min: floats.iter().copied().fold(f64::INFINITY, f64::min),
        max: floats.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        zero_fraction: zero as f64 / ratios.len() as f64,
        ratios,
        elapsed_ms,
    }
}

/// Runs `trials` independent seeded matches of one algorithm against the
/// generator, in parallel. Per-trial seeds are `seed ^ trial`, so the
/// report is identical to the sequential variant.
#[cfg(feature = "parallel")]
pub fn run_experiment(
    name: &str,
    alpha: Option<&Scalar>,
    config: &GeneratorConfig,
    trials: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be positive".into()));
    }
    config.validate()?;
    if algorithm_kind(name)? != config.kind {
        return Err(Error::InvalidConfig(format!(
            "algorithm '{name}' does not run on {} instances",
            config.kind
        )));
    }
    let start = Instant::now();
    let ratios: Vec<Scalar> = (0..trials)
        .into_par_iter()
        .map(|t| one_trial(name, alpha, config, seed, t))
        .collect::<Result<_>>()?;
    Ok(aggregate(
        name,
        config,
        trials,
        seed,
        ratios,
        start.elapsed().as_millis(),
    ))
}

/// Single-threaded variant; byte-identical report apart from wall clock.
pub fn run_experiment_sequential(
    name: &str,
    alpha: Option<&Scalar>,
    config: &GeneratorConfig,
    trials: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be positive".into()));
    }
    config.validate()?;
    if algorithm_kind(name)? != config.kind {
        return Err(Error::InvalidConfig(format!(
            "algorithm '{name}' does not run on {} instances",
            config.kind
        )));
    }
    let start = Instant::now();
    let ratios: Vec<Scalar> = (0..trials)
        .map(|t| one_trial(name, alpha, config, seed, t))
        .collect::<Result<_>>()?;
    Ok(aggregate(
        name,
        config,
        trials,
        seed,
        ratios,
        start.elapsed().as_millis(),
    ))
}

/// Without the `parallel` feature the harness simply runs sequentially.
#[cfg(not(feature = "parallel"))]
pub fn run_experiment(
    name: &str,
    alpha: Option<&Scalar>,
    config: &GeneratorConfig,
    trials: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    run_experiment_sequential(name, alpha, config, trials, seed)
}

/// Writes the empirical CDF of the report's ratios as `ratio,cum_fraction`
/// CSV rows (sorted ascending, one row per trial).
pub fn export_cdf<W: Write>(report: &ExperimentReport, out: &mut W) -> Result<()> {
    if report.ratios.is_empty() {
        return Err(Error::InvalidConfig("empty report".into()));
    }
    let mut sorted = report.ratios.clone();
    sorted.sort();
    writeln!(out, "ratio,cum_fraction").map_err(|e| Error::InvalidValue(e.to_string()))?;
    let total = sorted.len() as f64;
    for (i, r) in sorted.iter().enumerate() {
        writeln!(out, "{},{}", r.to_f64(), (i + 1) as f64 / total)
            .map_err(|e| Error::InvalidValue(e.to_string()))?;
    }
    Ok(())
}

/// Random normalized instance with unconstrained piece sizes: the whole
/// mass n cut at m−1 sorted points. MMS is *not* pinned to 1; meant for
/// oracle-certified property tests.
pub fn random_normalized_instance(kind: Kind, n: usize, m: usize, seed: u64) -> Result<Instance> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidConfig("n and m must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = Scalar::from_int(n as i64);
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<Scalar> = break_unit(&mut rng, m)
            .into_iter()
            .map(|p| p * &scale)
            .collect();
        rows.push(row);
    }
    Instance::new(kind, rows, true)
}

/// Random normalized instance in which every entry is at most `alpha`.
/// Starts from the uniform value n/m (requires n/m ≤ alpha) and applies
/// random sum-preserving transfers that respect the cap, keeping rows
/// exactly normalized.
pub fn random_small_item_instance(
    kind: Kind,
    n: usize,
    m: usize,
    alpha: &Scalar,
    seed: u64,
) -> Result<Instance> {
    if n == 0 || m < 2 {
        return Err(Error::InvalidConfig("need n >= 1 and m >= 2".into()));
    }
    let uniform = Scalar::ratio(n as i64, m as i64);
    if &uniform > alpha {
        return Err(Error::InvalidConfig(format!(
            "n/m = {uniform} exceeds alpha = {alpha}; no such instance"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = vec![vec![uniform; m]; n];
    for row in &mut rows {
        for _ in 0..4 * m {
            let i = (rng.next_u32() as usize) % m;
            let j = (rng.next_u32() as usize) % m;
            if i == j {
                continue;
            }
            // Largest transfer keeping row[i] >= 0 and row[j] <= alpha,
            // scaled by a random fraction.
            let headroom = (alpha - &row[j]).min(row[i].clone());
            if headroom.is_zero() {
                continue;
            }
            let t = headroom * Scalar::ratio(rng.next_u32() as i64, DENOM);
            row[i] = &row[i] - &t;
            row[j] = &row[j] + &t;
        }
    }
    Instance::new(kind, rows, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{mms_all, DEFAULT_CAP};

    fn cfg(kind: Kind, n: usize, m: usize, order: ItemOrder) -> GeneratorConfig {
        GeneratorConfig { n, m, kind, order }
    }

    #[test]
    fn generated_rows_sum_exactly() {
        let config = cfg(Kind::Goods, 3, 12, ItemOrder::Random);
        let instance = generate_instance(&config, 7).unwrap();
        assert!(instance.is_normalized());
        assert_eq!(instance.m(), 12);
    }

    #[test]
    fn generated_mms_is_exactly_one() {
        let config = cfg(Kind::Goods, 3, 9, ItemOrder::Random);
        for seed in [0u64, 1, 42, 9999] {
            let instance = generate_instance(&config, seed).unwrap();
            let mms = mms_all(&instance, DEFAULT_CAP).unwrap().mms;
            assert_eq!(mms, vec![Scalar::one(); 3], "seed {seed}");
        }
    }

    #[test]
    fn trivial_split_gives_unit_items() {
        let config = cfg(Kind::Goods, 2, 2, ItemOrder::Random);
        let instance = generate_instance(&config, 3).unwrap();
        for agent in 0..2 {
            for item in 0..2 {
                assert_eq!(instance.value(agent, item), &Scalar::one());
            }
        }
    }

    #[test]
    fn descending_order_is_monotone_per_row() {
        let config = cfg(Kind::Chores, 4, 20, ItemOrder::Descending);
        let instance = generate_instance(&config, 11).unwrap();
        for agent in 0..4 {
            let row = instance.row(agent);
            assert!(row.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn same_seed_same_instance() {
        let config = cfg(Kind::Goods, 5, 25, ItemOrder::Random);
        let a = generate_instance(&config, 123).unwrap();
        let b = generate_instance(&config, 123).unwrap();
        for agent in 0..5 {
            assert_eq!(a.row(agent), b.row(agent));
        }
    }

    #[test]
    fn m_not_divisible_rejected() {
        let config = cfg(Kind::Goods, 3, 10, ItemOrder::Random);
        assert!(generate_instance(&config, 0).is_err());
    }

    #[test]
    fn kind_mismatch_rejected() {
        let config = cfg(Kind::Goods, 2, 4, ItemOrder::Random);
        let err = run_experiment_sequential("greedy-chores", None, &config, 5, 1);
        assert!(err.is_err());
    }

    #[test]
    fn single_trial_report_is_that_instance() {
        let config = cfg(Kind::Goods, 2, 6, ItemOrder::Random);
        let report = run_experiment_sequential("greedy-goods", None, &config, 1, 77).unwrap();
        assert_eq!(report.ratios.len(), 1);
        assert_eq!(report.avg, report.min);
        assert_eq!(report.avg, report.max);
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_matches_sequential() {
        let config = cfg(Kind::Chores, 3, 12, ItemOrder::Random);
        let par = run_experiment("alg4-chores-n", None, &config, 40, 5).unwrap();
        let seq = run_experiment_sequential("alg4-chores-n", None, &config, 40, 5).unwrap();
        assert_eq!(par.ratios, seq.ratios);
    }

    #[test]
    fn cdf_is_sorted_and_ends_at_one() {
        let config = cfg(Kind::Chores, 2, 8, ItemOrder::Random);
        let report = run_experiment_sequential("greedy-chores", None, &config, 25, 9).unwrap();
        let mut buffer = Vec::new();
        export_cdf(&report, &mut buffer).unwrap();
        let text = String::from_utf8(buffer).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "ratio,cum_fraction");
        assert_eq!(lines.len(), 26);
        assert!(lines[25].ends_with(",1"));
    }

    #[test]
    fn alpha_required_for_small_algorithms() {
        assert!(make_allocator("alg3-small-goods", 3, None).is_err());
        let a = Scalar::ratio(1, 2);
        assert!(make_allocator("alg3-small-goods", 3, Some(&a)).is_ok());
    }

    #[test]
    fn random_normalized_instance_sums() {
        for seed in 0..5u64 {
            let instance = random_normalized_instance(Kind::Goods, 3, 7, seed).unwrap();
            assert!(instance.is_normalized());
        }
    }

    #[test]
    fn random_small_item_instance_respects_alpha() {
        let alpha = Scalar::ratio(1, 2);
        let instance = random_small_item_instance(Kind::Goods, 2, 10, &alpha, 4).unwrap();
        assert!(instance.is_normalized());
        for agent in 0..2 {
            for v in instance.row(agent) {
                assert!(v <= &alpha);
                assert!(!v.is_negative());
            }
        }
    }
}
