//! The streaming allocation contract and the match runner.
//!
//! Items arrive one value-vector at a time; the allocator makes an
//! irrevocable assignment per item and never sees future items or the item
//! count. An adaptive adversary is the dual object: it observes each
//! decision before emitting the next item.

use crate::error::{Error, Result};
use crate::instance::{Allocation, Instance, Kind};
use crate::scalar::Scalar;

/// A deterministic online allocation policy. Constructed knowing `n` and
/// the item kind, never `m`.
pub trait OnlineAllocator {
    fn n(&self) -> usize;
    fn kind(&self) -> Kind;

    /// Consumes one item's value vector (length `n`) and returns the
    /// 0-based agent the item is irrevocably assigned to.
    fn decide(&mut self, item: &[Scalar]) -> Result<usize>;
}

/// A stateful item-stream generator that may condition each emission on
/// all previous allocation decisions.
pub trait AdaptiveAdversary {
    fn n(&self) -> usize;
    fn kind(&self) -> Kind;

    /// Feeds back the decision for the previously emitted item (None on the
    /// first call) and returns the next value vector, or None at
    /// end-of-stream.
    fn next_item(&mut self, last_decision: Option<usize>) -> Option<Vec<Scalar>>;

    /// Closed-form per-agent MMS of the realized instance, where the
    /// construction pins it down. Only meaningful after end-of-stream.
    fn mms_hint(&self) -> Option<Vec<Scalar>> {
        None
    }
}

/// Sum of an agent's row over its bundle.
pub fn bundle_value(instance: &Instance, allocation: &Allocation, agent: usize) -> Result<Scalar> {
    allocation.validate(instance)?;
    if agent >= instance.n() {
        return Err(Error::AgentOutOfRange {
            agent,
            n: instance.n(),
        });
    }
    let mut total = Scalar::zero();
    for (item, &owner) in allocation.owners().iter().enumerate() {
        if owner == agent {
            total += instance.value(agent, item);
        }
    }
    Ok(total)
}

/// Per-agent bundle values for all agents in one pass.
pub fn bundle_values(instance: &Instance, allocation: &Allocation) -> Result<Vec<Scalar>> {
    allocation.validate(instance)?;
    let mut totals = vec![Scalar::zero(); instance.n()];
    for (item, &owner) in allocation.owners().iter().enumerate() {
        totals[owner] += instance.value(owner, item);
    }
    Ok(totals)
}

/// Feeds the instance's columns to the allocator in arrival order.
pub fn run_stream(allocator: &mut dyn OnlineAllocator, instance: &Instance) -> Result<Allocation> {
    if allocator.n() != instance.n() {
        return Err(Error::DimensionMismatch(format!(
            "allocator built for n = {}, instance has n = {}",
            allocator.n(),
            instance.n()
        )));
    }
    if allocator.kind() != instance.kind() {
        return Err(Error::DimensionMismatch(format!(
            "allocator handles {}, instance is {}",
            allocator.kind(),
            instance.kind()
        )));
    }
    let mut owner = Vec::with_capacity(instance.m());
    for item in 0..instance.m() {
        let column = instance.column(item);
        let agent = allocator.decide(&column)?;
        if agent >= instance.n() {
            return Err(Error::AgentOutOfRange {
                agent,
                n: instance.n(),
            });
        }
        owner.push(agent);
    }
    Ok(Allocation::new(owner))
}

/// Alternates adversary emissions with allocator decisions until
/// end-of-stream, returning the realized instance and allocation.
pub fn play_match(
    allocator: &mut dyn OnlineAllocator,
    adversary: &mut dyn AdaptiveAdversary,
) -> Result<(Instance, Allocation)> {
    if allocator.n() != adversary.n() || allocator.kind() != adversary.kind() {
        return Err(Error::DimensionMismatch(format!(
            "allocator ({}, n = {}) incompatible with adversary ({}, n = {})",
            allocator.kind(),
            allocator.n(),
            adversary.kind(),
            adversary.n()
        )));
    }
    let n = adversary.n();
    let mut columns: Vec<Vec<Scalar>> = Vec::new();
    let mut owner: Vec<usize> = Vec::new();
    let mut last = None;
    while let Some(column) = adversary.next_item(last) {
        if column.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "adversary emitted a vector of length {}, expected {}",
                column.len(),
                n
            )));
        }
        let agent = allocator.decide(&column)?;
        if agent >= n {
            return Err(Error::AgentOutOfRange { agent, n });
        }
        columns.push(column);
        owner.push(agent);
        last = Some(agent);
    }
    let instance = Instance::from_columns(adversary.kind(), n, &columns)?;
    Ok((instance, Allocation::new(owner)))
}

/// Per-agent approximation ratios against the given MMS values. An agent
/// with MMS = 0 contributes the vacuous ratio 1 (see [`worst_ratio`]).
pub fn per_agent_ratios(
    instance: &Instance,
    allocation: &Allocation,
    mms: &[Scalar],
) -> Result<Vec<Scalar>> {
    if mms.len() != instance.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} MMS values for {} agents",
            mms.len(),
            instance.n()
        )));
    }
    let values = bundle_values(instance, allocation)?;
    Ok(values
        .into_iter()
        .zip(mms)
        .map(|(v, m)| if m.is_zero() { Scalar::one() } else { v / m })
        .collect())
}

/// Worst approximation guarantee of the allocation: minimum per-agent ratio
/// for goods, maximum for chores. Agents whose MMS is zero (only possible
/// for degenerate rows) are counted as exactly satisfied.
pub fn worst_ratio(
    instance: &Instance,
    allocation: &Allocation,
    mms: &[Scalar],
) -> Result<Scalar> {
    let ratios = per_agent_ratios(instance, allocation, mms)?;
    let worst = match instance.kind() {
        Kind::Goods => ratios.into_iter().reduce(Scalar::min),
        Kind::Chores => ratios.into_iter().reduce(Scalar::max),
    };
    worst.ok_or_else(|| Error::DimensionMismatch("no agents".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::goods::GreedyGoods;

    fn inst(kind: Kind, rows: Vec<Vec<Scalar>>) -> Instance {
        Instance::new(kind, rows, false).unwrap()
    }

    #[test]
    fn bundle_value_empty_is_zero_and_full_is_row_sum() {
        let instance = inst(
            Kind::Goods,
            vec![
                vec![Scalar::one(), Scalar::one()],
                vec![Scalar::ratio(1, 2), Scalar::ratio(3, 2)],
            ],
        );
        let alloc = Allocation::new(vec![0, 0]);
        assert_eq!(
            bundle_value(&instance, &alloc, 0).unwrap(),
            Scalar::from_int(2)
        );
        assert_eq!(bundle_value(&instance, &alloc, 1).unwrap(), Scalar::zero());
    }

    #[test]
    fn run_stream_empty_instance() {
        let instance = inst(Kind::Goods, vec![vec![], vec![]]);
        let mut alloc = GreedyGoods::new(2);
        let result = run_stream(&mut alloc, &instance).unwrap();
        assert_eq!(result.m(), 0);
    }

    #[test]
    fn run_stream_is_replay_deterministic() {
        let instance = inst(
            Kind::Goods,
            vec![
                vec![Scalar::ratio(1, 3), Scalar::ratio(2, 3), Scalar::one()],
                vec![Scalar::ratio(2, 3), Scalar::ratio(1, 3), Scalar::one()],
            ],
        );
        let a = run_stream(&mut GreedyGoods::new(2), &instance).unwrap();
        let b = run_stream(&mut GreedyGoods::new(2), &instance).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn worst_ratio_at_mms_is_one() {
        let instance = inst(
            Kind::Goods,
            vec![
                vec![Scalar::one(), Scalar::one()],
                vec![Scalar::one(), Scalar::one()],
            ],
        );
        let alloc = Allocation::new(vec![0, 1]);
        let mms = vec![Scalar::one(), Scalar::one()];
        assert_eq!(
            worst_ratio(&instance, &alloc, &mms).unwrap(),
            Scalar::one()
        );
    }

    #[test]
    fn worst_ratio_chores_takes_max() {
        let instance = inst(
            Kind::Chores,
            vec![
                vec![Scalar::ratio(15, 11), Scalar::zero()],
                vec![Scalar::zero(), Scalar::ratio(7, 11)],
            ],
        );
        let alloc = Allocation::new(vec![0, 1]);
        let mms = vec![Scalar::one(), Scalar::one()];
        assert_eq!(
            worst_ratio(&instance, &alloc, &mms).unwrap(),
            Scalar::ratio(15, 11)
        );
    }

    #[test]
    fn zero_mms_counts_as_satisfied() {
        let instance = inst(
            Kind::Goods,
            vec![vec![Scalar::one()], vec![Scalar::zero()]],
        );
        let alloc = Allocation::new(vec![0]);
        let mms = vec![Scalar::one(), Scalar::zero()];
        assert_eq!(
            worst_ratio(&instance, &alloc, &mms).unwrap(),
            Scalar::one()
        );
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let instance = inst(Kind::Chores, vec![vec![Scalar::one()], vec![Scalar::one()]]);
        let mut alloc = GreedyGoods::new(2);
        assert!(run_stream(&mut alloc, &instance).is_err());
    }
}
