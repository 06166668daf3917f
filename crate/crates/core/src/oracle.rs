//! Exact maximin-share computation by pruned exhaustive partition search,
//! plus allocation certification reports.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{Allocation, Instance, Kind};
use crate::online::bundle_values;
use crate::scalar::Scalar;

/// Largest `m` the search accepts unless the caller raises the cap.
pub const DEFAULT_CAP: usize = 16;

/// Per-agent MMS values with optional witness partitions.
#[derive(Debug, Clone)]
pub struct MmsResult {
    pub mms: Vec<Scalar>,
    /// For each agent, an item → bundle map achieving the optimum.
    pub witnesses: Vec<Allocation>,
}

/// Certification of one allocation against the exact per-agent MMS.
#[derive(Debug, Clone, Serialize)]
pub struct CertifyReport {
    pub values: Vec<Scalar>,
    pub mms: Vec<Scalar>,
    pub ratios: Vec<Scalar>,
    pub worst: Scalar,
    /// Agents whose MMS is zero; their ratio is reported as the vacuous 1.
    pub vacuous: Vec<usize>,
}

/// Scales one agent's row to integers over a common denominator so the
/// search works in `BigInt` arithmetic.
fn scaled_row(instance: &Instance, agent: usize) -> (Vec<BigInt>, BigInt) {
    let row = instance.row(agent);
    let mut lcm = BigInt::one();
    for v in row.iter() {
        lcm = lcm.lcm(&v.denom());
    }
    let weights = row
        .iter()
        .map(|v| v.numer() * (&lcm / v.denom()))
        .collect();
    (weights, lcm)
}

struct Search {
    weights: Vec<BigInt>,
    suffix: Vec<BigInt>,
    bundles: usize,
    kind: Kind,
    sums: Vec<BigInt>,
    assign: Vec<usize>,
    best: BigInt,
    best_assign: Vec<usize>,
}

impl Search {
    fn new(weights: Vec<BigInt>, bundles: usize, kind: Kind) -> Self {
        let m = weights.len();
        let mut suffix = vec![BigInt::zero(); m + 1];
        for i in (0..m).rev() {
            suffix[i] = &suffix[i + 1] + &weights[i];
        }
        let total = suffix[0].clone();
        let best = match kind {
            // Incumbent below any feasible objective so the first leaf wins.
            Kind::Goods => BigInt::from(-1),
            // Putting everything in one bundle is always feasible.
            Kind::Chores => &total + 1,
        };
        Search {
            weights,
            suffix,
            bundles,
            kind,
            sums: vec![BigInt::zero(); bundles],
            assign: vec![0; m],
            best,
            best_assign: vec![0; m],
        }
    }

    fn leaf(&mut self) {
        let obj = match self.kind {
            Kind::Goods => self.sums.iter().min(),
            Kind::Chores => self.sums.iter().max(),
        }
        .expect("bundles >= 1");
        let improves = match self.kind {
            Kind::Goods => *obj > self.best,
            Kind::Chores => *obj < self.best,
        };
        if improves {
            self.best = obj.clone();
            self.best_assign = self.assign.clone();
        }
    }

    fn prune(&self, item: usize) -> bool {
        match self.kind {
            Kind::Goods => {
                // Even pouring all remaining weight fractionally cannot lift
                // every bundle strictly above the incumbent.
                let target = &self.best + 1;
                let mut needed = BigInt::zero();
                for s in &self.sums {
                    if *s < target {
                        needed += &target - s;
                    }
                    if needed > self.suffix[item] {
                        return true;
                    }
                }
                needed > self.suffix[item]
            }
            // Sums only grow, so an incumbent-sized bundle is terminal.
            Kind::Chores => self.sums.iter().any(|s| *s >= self.best),
        }
    }

    fn dfs(&mut self, item: usize, open: usize) {
        if item == self.weights.len() {
            self.leaf();
            return;
        }
        if self.prune(item) {
            return;
        }
        // An item may open at most one new bundle; among open bundles,
        // equal sums are interchangeable, so try each sum once.
        let limit = (open + 1).min(self.bundles);
        for b in 0..limit {
            if b > 0 && b < open && self.sums[b] == self.sums[b - 1] {
                continue;
            }
            let w = self.weights[item].clone();
            if self.kind == Kind::Chores && &self.sums[b] + &w >= self.best {
                continue;
            }
            self.sums[b] += &w;
            self.assign[item] = b;
            self.dfs(item + 1, open.max(b + 1));
            self.sums[b] -= &w;
        }
    }
}

fn check_cap(m: usize, cap: usize) -> Result<()> {
    if m > cap {
        return Err(Error::CapacityExceeded { m, cap });
    }
    Ok(())
}

/// Exact MMS of one agent when the items are split into `bundles` parts,
/// together with a witness partition (item → bundle).
pub fn mms_exact(
    instance: &Instance,
    agent: usize,
    bundles: usize,
    cap: usize,
) -> Result<(Scalar, Allocation)> {
    if agent >= instance.n() {
        return Err(Error::AgentOutOfRange {
            agent,
            n: instance.n(),
        });
    }
    if bundles == 0 {
        return Err(Error::InvalidConfig("bundles must be >= 1".into()));
    }
    check_cap(instance.m(), cap)?;
    if instance.m() == 0 {
        return Ok((Scalar::zero(), Allocation::empty()));
    }

    let (weights, denom) = scaled_row(instance, agent);
    // Heavy items first: decisions near the root fix the most weight, which
    // makes both prunings bite early.
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].cmp(&weights[a]));
    let sorted: Vec<BigInt> = order.iter().map(|&i| weights[i].clone()).collect();

    let mut search = Search::new(sorted, bundles, instance.kind());
    search.dfs(0, 0);

    let mut owner = vec![0; instance.m()];
    for (pos, &original) in order.iter().enumerate() {
        owner[original] = search.best_assign[pos];
    }
    let value = if search.best.is_negative() {
        Scalar::zero()
    } else {
        Scalar::from_big(search.best, denom)
    };
    Ok((value, Allocation::new(owner)))
}

/// MMS of every agent with `bundles = n`.
pub fn mms_all(instance: &Instance, cap: usize) -> Result<MmsResult> {
    let mut mms = Vec::with_capacity(instance.n());
    let mut witnesses = Vec::with_capacity(instance.n());
    for agent in 0..instance.n() {
        let (value, witness) = mms_exact(instance, agent, instance.n(), cap)?;
        mms.push(value);
        witnesses.push(witness);
    }
    Ok(MmsResult { mms, witnesses })
}

/// MMS of the first `keep_agents` agents on the instance with `drop_items`
/// removed. Requires dropping exactly as many items as agents.
pub fn mms_reduced(
    instance: &Instance,
    keep_agents: usize,
    drop_items: &[usize],
) -> Result<Vec<Scalar>> {
    if keep_agents == 0 || keep_agents > instance.n() {
        return Err(Error::InvalidConfig(format!(
            "keep_agents = {} out of range for n = {}",
            keep_agents,
            instance.n()
        )));
    }
    let dropped_agents = instance.n() - keep_agents;
    let mut drop: Vec<usize> = drop_items.to_vec();
    drop.sort_unstable();
    drop.dedup();
    if drop.len() != drop_items.len() {
        return Err(Error::InvalidConfig("duplicate dropped item".into()));
    }
    if let Some(&bad) = drop.iter().find(|&&i| i >= instance.m()) {
        return Err(Error::InvalidConfig(format!(
            "dropped item {} out of range for m = {}",
            bad,
            instance.m()
        )));
    }
    if drop.len() != dropped_agents {
        return Err(Error::CardinalityMismatch {
            agents: dropped_agents,
            items: drop.len(),
        });
    }

    let kept_items: Vec<usize> = (0..instance.m())
        .filter(|i| drop.binary_search(i).is_err())
        .collect();
    let rows: Vec<Vec<Scalar>> = (0..keep_agents)
        .map(|a| {
            kept_items
                .iter()
                .map(|&i| instance.value(a, i).clone())
                .collect()
        })
        .collect();
    let reduced = Instance::new(instance.kind(), rows, false)?;

    (0..keep_agents)
        .map(|a| mms_exact(&reduced, a, keep_agents, DEFAULT_CAP).map(|(v, _)| v))
        .collect()
}

/// Exact per-agent values, MMS, and approximation ratios for one
/// allocation; the worst ratio is the minimum for goods and the maximum
/// for chores. Zero-MMS agents get the vacuous ratio 1 and are flagged.
pub fn certify(instance: &Instance, allocation: &Allocation, cap: usize) -> Result<CertifyReport> {
    allocation.validate(instance)?;
    let values = bundle_values(instance, allocation)?;
    let MmsResult { mms, .. } = mms_all(instance, cap)?;
    let mut vacuous = Vec::new();
    let ratios: Vec<Scalar> = values
        .iter()
        .zip(mms.iter())
        .enumerate()
        .map(|(agent, (v, m))| {
            if m.is_zero() {
                vacuous.push(agent);
                Scalar::one()
            } else {
                v / m
            }
        })
        .collect();
    let worst = match instance.kind() {
        Kind::Goods => ratios.iter().cloned().reduce(Scalar::min),
        Kind::Chores => ratios.iter().cloned().reduce(Scalar::max),
    }
    .ok_or_else(|| Error::DimensionMismatch("no agents".into()))?;
    Ok(CertifyReport {
        values,
        mms,
        ratios,
        worst,
        vacuous,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Kind;

    fn goods(rows: Vec<Vec<Scalar>>) -> Instance {
        Instance::new(Kind::Goods, rows, false).unwrap()
    }

    fn chores(rows: Vec<Vec<Scalar>>) -> Instance {
        Instance::new(Kind::Chores, rows, false).unwrap()
    }

    fn r(p: i64, q: i64) -> Scalar {
        Scalar::ratio(p, q)
    }

    /// The greedy-hardness instance with epsilon = 1/100: rows
    /// {0.48, 1.49, 0.03} and {0.49, 1.5, 0.01}.
    pub(crate) fn greedy_hardness_instance() -> Instance {
        goods(vec![
            vec![r(48, 100), r(149, 100), r(3, 100)],
            vec![r(49, 100), r(150, 100), r(1, 100)],
        ])
    }

    #[test]
    fn two_halves_and_a_whole() {
        let inst = goods(vec![vec![r(1, 2), r(1, 2), Scalar::one()]]);
        let (v, w) = mms_exact(&inst, 0, 2, DEFAULT_CAP).unwrap();
        assert_eq!(v, Scalar::one());
        // Witness reproduces the optimum.
        let bundles = [0usize, 1].map(|b| {
            w.owners()
                .iter()
                .enumerate()
                .filter(|(_, &o)| o == b)
                .map(|(i, _)| inst.value(0, i))
                .sum::<Scalar>()
        });
        assert_eq!(bundles.iter().cloned().reduce(Scalar::min).unwrap(), v);
    }

    #[test]
    fn hardness_agent_rows() {
        let inst = greedy_hardness_instance();
        let (a, _) = mms_exact(&inst, 0, 2, DEFAULT_CAP).unwrap();
        assert_eq!(a, r(51, 100));
        let (b, _) = mms_exact(&inst, 1, 2, DEFAULT_CAP).unwrap();
        assert_eq!(b, r(1, 2));
    }

    #[test]
    fn identical_unit_chores() {
        let n = 4;
        let inst = chores(vec![vec![Scalar::one(); n]; n]);
        for agent in 0..n {
            let (v, _) = mms_exact(&inst, agent, n, DEFAULT_CAP).unwrap();
            assert_eq!(v, Scalar::one());
        }
    }

    #[test]
    fn chores_two_small_two_large() {
        // Rows {4/11, 4/11, 7/11, 7/11}: pairing one small with one large
        // per bundle balances both at 1.
        let inst = chores(vec![vec![r(4, 11), r(4, 11), r(7, 11), r(7, 11)]]);
        let (v, _) = mms_exact(&inst, 0, 2, DEFAULT_CAP).unwrap();
        assert_eq!(v, Scalar::one());
    }

    #[test]
    fn all_zero_goods() {
        let inst = goods(vec![vec![Scalar::zero(); 3]; 2]);
        let result = mms_all(&inst, DEFAULT_CAP).unwrap();
        assert!(result.mms.iter().all(|v| v.is_zero()));
    }

    #[test]
    fn single_agent_gets_row_sum() {
        let inst = goods(vec![vec![r(1, 3), r(2, 3), r(5, 7)]]);
        let result = mms_all(&inst, DEFAULT_CAP).unwrap();
        assert_eq!(result.mms[0], inst.row_sum(0));
    }

    #[test]
    fn empty_instance() {
        let inst = goods(vec![vec![], vec![]]);
        let result = mms_all(&inst, DEFAULT_CAP).unwrap();
        assert_eq!(result.mms, vec![Scalar::zero(), Scalar::zero()]);
    }

    #[test]
    fn cap_is_enforced() {
        let inst = goods(vec![vec![Scalar::one(); 5]]);
        let err = mms_exact(&inst, 0, 2, 4).unwrap_err();
        assert!(matches!(err, Error::CapacityExceeded { m: 5, cap: 4 }));
        // Raising the cap unblocks the same call.
        assert!(mms_exact(&inst, 0, 2, 5).is_ok());
    }

    #[test]
    fn reduced_identity_matches_mms_all() {
        let inst = goods(vec![
            vec![r(1, 2), r(3, 4), r(3, 4)],
            vec![r(1, 4), r(1, 4), r(3, 2)],
        ]);
        let full = mms_all(&inst, DEFAULT_CAP).unwrap();
        let reduced = mms_reduced(&inst, 2, &[]).unwrap();
        assert_eq!(full.mms, reduced);
    }

    #[test]
    fn reduced_four_units() {
        let inst = goods(vec![vec![Scalar::one(); 4]; 2]);
        let full = mms_all(&inst, DEFAULT_CAP).unwrap();
        assert_eq!(full.mms[0], Scalar::from_int(2));
        let reduced = mms_reduced(&inst, 1, &[3]).unwrap();
        assert_eq!(reduced, vec![Scalar::from_int(3)]);
    }

    #[test]
    fn reduced_cardinality_mismatch() {
        let inst = goods(vec![vec![Scalar::one(); 4]; 2]);
        assert!(matches!(
            mms_reduced(&inst, 1, &[0, 1]).unwrap_err(),
            Error::CardinalityMismatch { .. }
        ));
    }

    #[test]
    fn certify_exact_split() {
        let inst = goods(vec![
            vec![Scalar::one(), Scalar::one()],
            vec![Scalar::one(), Scalar::one()],
        ]);
        let report = certify(&inst, &Allocation::new(vec![0, 1]), DEFAULT_CAP).unwrap();
        assert!(report.ratios.iter().all(|x| *x == Scalar::one()));
        assert_eq!(report.worst, Scalar::one());
        assert!(report.vacuous.is_empty());
    }

    #[test]
    fn certify_flags_zero_mms() {
        // One item, two bundles: some bundle is empty, so both agents have
        // MMS 0 and both ratios are vacuous.
        let inst = goods(vec![vec![Scalar::one()], vec![Scalar::zero()]]);
        let report = certify(&inst, &Allocation::new(vec![0]), DEFAULT_CAP).unwrap();
        assert_eq!(report.vacuous, vec![0, 1]);
        assert_eq!(report.worst, Scalar::one());
    }

    #[test]
    fn mms_bounds_hold_on_fixed_instances() {
        let g = goods(vec![
            vec![r(1, 2), r(1, 2), r(1, 2), r(1, 2)],
            vec![r(1, 5), r(2, 5), r(3, 5), r(4, 5)],
        ]);
        let res = mms_all(&g, DEFAULT_CAP).unwrap();
        for agent in 0..2 {
            assert!(res.mms[agent] <= g.row_sum(agent) / Scalar::from_int(2));
        }

        let c = chores(vec![
            vec![r(3, 11), r(1, 11), Scalar::one(), r(7, 11)],
            vec![r(1, 11), r(1, 11), r(8, 11), Scalar::one()],
        ]);
        let res = mms_all(&c, DEFAULT_CAP).unwrap();
        for agent in 0..2 {
            let max_item = c.row(agent).iter().cloned().reduce(Scalar::max).unwrap();
            assert!(res.mms[agent] >= c.row_sum(agent) / Scalar::from_int(2));
            assert!(res.mms[agent] >= max_item);
        }
    }
}
