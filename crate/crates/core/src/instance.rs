//! Instances and allocations.
//!
//! An instance is a valuation (or cost) matrix with one row per agent and
//! one column per item in arrival order. An allocation is a total map from
//! items to agents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Whether items are desirable (goods) or undesirable (chores).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Goods,
    Chores,
}

impl std::fmt::Display for Kind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Kind::Goods => write!(f, "goods"),
            Kind::Chores => write!(f, "chores"),
        }
    }
}

/// A valuation/cost matrix. Row `i` is agent `i`'s additive valuation over
/// the items; column `j` is item `j` in arrival order. When `normalized`
/// is set, every row sums to exactly `n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "InstanceRepr", into = "InstanceRepr")]
pub struct Instance {
    kind: Kind,
    n: usize,
    m: usize,
    values: Vec<Vec<Scalar>>,
    normalized: bool,
}

#[derive(Serialize, Deserialize)]
struct InstanceRepr {
    kind: Kind,
    n: usize,
    m: usize,
    values: Vec<Vec<Scalar>>,
    normalized: bool,
}

impl TryFrom<InstanceRepr> for Instance {
    type Error = Error;

    fn try_from(repr: InstanceRepr) -> Result<Self> {
        let inst = Instance::new(repr.kind, repr.values, repr.normalized)?;
        if inst.n != repr.n || inst.m != repr.m {
            return Err(Error::DimensionMismatch(format!(
                "declared {}x{} but matrix is {}x{}",
                repr.n, repr.m, inst.n, inst.m
            )));
        }
        Ok(inst)
    }
}

impl From<Instance> for InstanceRepr {
    fn from(inst: Instance) -> Self {
        InstanceRepr {
            kind: inst.kind,
            n: inst.n,
            m: inst.m,
            values: inst.values,
            normalized: inst.normalized,
        }
    }
}

impl Instance {
    /// Validates non-negativity, rectangular shape, and (when claimed) the
    /// exact row-sum normalization `v_i(M) = n`.
    pub fn new(kind: Kind, values: Vec<Vec<Scalar>>, normalized: bool) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::DimensionMismatch("no agents".into()));
        }
        let m = values[0].len();
        for (i, row) in values.iter().enumerate() {
            if row.len() != m {
                return Err(Error::DimensionMismatch(format!(
                    "row {} has {} entries, expected {}",
                    i,
                    row.len(),
                    m
                )));
            }
            if row.iter().any(|v| v.is_negative()) {
                return Err(Error::InvalidValue(format!("negative entry in row {}", i)));
            }
            if normalized {
                let sum: Scalar = row.iter().sum();
                if sum != Scalar::from_int(n as i64) {
                    return Err(Error::InvalidValue(format!(
                        "row {} sums to {}, expected {} for a normalized instance",
                        i, sum, n
                    )));
                }
            }
        }
        Ok(Instance {
            kind,
            n,
            m,
            values,
            normalized,
        })
    }

    /// Builds an instance from arrival-order columns, detecting whether the
    /// realized rows happen to satisfy the normalization exactly.
    pub fn from_columns(kind: Kind, n: usize, columns: &[Vec<Scalar>]) -> Result<Self> {
        let mut values = vec![Vec::with_capacity(columns.len()); n];
        for col in columns {
            if col.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "column of length {}, expected {}",
                    col.len(),
                    n
                )));
            }
            for (row, v) in values.iter_mut().zip(col) {
                row.push(v.clone());
            }
        }
        let target = Scalar::from_int(n as i64);
        let normalized = values
            .iter()
            .all(|row| row.iter().sum::<Scalar>() == target);
        Instance::new(kind, values, normalized)
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn value(&self, agent: usize, item: usize) -> &Scalar {
        &self.values[agent][item]
    }

    pub fn row(&self, agent: usize) -> &[Scalar] {
        &self.values[agent]
    }

    pub fn column(&self, item: usize) -> Vec<Scalar> {
        self.values.iter().map(|row| row[item].clone()).collect()
    }

    pub fn row_sum(&self, agent: usize) -> Scalar {
        self.values[agent].iter().sum()
    }
}

/// A partition of the items: `owner[j]` is the 0-based agent index that
/// item `j` was irrevocably assigned to. The JSON form uses 1-based agent
/// indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "AllocationRepr", into = "AllocationRepr")]
pub struct Allocation {
    owner: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct AllocationRepr {
    owner: Vec<usize>,
}

impl TryFrom<AllocationRepr> for Allocation {
    type Error = Error;

    fn try_from(repr: AllocationRepr) -> Result<Self> {
        let owner = repr
            .owner
            .iter()
            .map(|&o| {
                if o == 0 {
                    Err(Error::InvalidValue("owner indices are 1-based".into()))
                } else {
                    Ok(o - 1)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Allocation { owner })
    }
}

impl From<Allocation> for AllocationRepr {
    fn from(a: Allocation) -> Self {
        AllocationRepr {
            owner: a.owner.iter().map(|&o| o + 1).collect(),
        }
    }
}

impl Allocation {
    pub fn new(owner: Vec<usize>) -> Self {
        Allocation { owner }
    }

    pub fn empty() -> Self {
        Allocation { owner: Vec::new() }
    }

    pub fn m(&self) -> usize {
        self.owner.len()
    }

    /// 0-based owner of item `j`.
    pub fn owner(&self, item: usize) -> usize {
        self.owner[item]
    }

    pub fn owners(&self) -> &[usize] {
        &self.owner
    }

    /// Per-agent bundles of item indices, consistent with `owner`.
    pub fn bundles(&self, n: usize) -> Vec<Vec<usize>> {
        let mut bundles = vec![Vec::new(); n];
        for (item, &agent) in self.owner.iter().enumerate() {
            bundles[agent].push(item);
        }
        bundles
    }

    /// Checks that the allocation is a total partition compatible with the
    /// instance dimensions.
    pub fn validate(&self, instance: &Instance) -> Result<()> {
        if self.owner.len() != instance.m() {
            return Err(Error::DimensionMismatch(format!(
                "allocation covers {} items, instance has {}",
                self.owner.len(),
                instance.m()
            )));
        }
        for &agent in &self.owner {
            if agent >= instance.n() {
                return Err(Error::AgentOutOfRange {
                    agent,
                    n: instance.n(),
                });
            }
        }
        Ok(())
    }
}
