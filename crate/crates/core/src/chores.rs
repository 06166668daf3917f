//! Online allocators for chores: the greedy baseline, the n-agent
//! (2−1/n)-MMS algorithm, the two-agent √2 algorithm, the ordinal
//! Sesqui-Round-Robin schedule, and the two small-chore algorithms.

use crate::error::{Error, Result};
use crate::instance::Kind;
use crate::online::OnlineAllocator;
use crate::scalar::Scalar;

/// Assigns each item to the agent with minimum cost (ties to the smallest
/// index). Unboundedly bad baseline.
pub struct GreedyChores {
    n: usize,
}

impl GreedyChores {
    pub fn new(n: usize) -> Self {
        GreedyChores { n }
    }
}

impl OnlineAllocator for GreedyChores {
    fn n(&self) -> usize {
        self.n
    }

    fn kind(&self) -> Kind {
        Kind::Chores
    }

    fn decide(&mut self, item: &[Scalar]) -> Result<usize> {
        check_len(item, self.n)?;
        Ok(argmin(item.iter().enumerate()))
    }
}

/// Algorithm 4: the (2−1/n)-MMS allocator for normalized chores. Items go
/// to the active agent with minimum cost; an agent retires once its bundle
/// cost reaches 1 − 1/n; a sole active agent absorbs everything.
pub struct ChoresN {
    threshold: Scalar,
    active: Vec<bool>,
    active_count: usize,
    bundles: Vec<Scalar>,
}

impl ChoresN {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("n must be >= 1".into()));
        }
        Ok(ChoresN {
            threshold: Scalar::one() - Scalar::ratio(1, n as i64),
            active: vec![true; n],
            active_count: n,
            bundles: vec![Scalar::zero(); n],
        })
    }
}

impl OnlineAllocator for ChoresN {
    fn n(&self) -> usize {
        self.active.len()
    }

    fn kind(&self) -> Kind {
        Kind::Chores
    }

    fn decide(&mut self, item: &[Scalar]) -> Result<usize> {
        let n = self.active.len();
        check_len(item, n)?;
        if self.active_count == 1 {
            let sole = (0..n).find(|&i| self.active[i]).unwrap();
            self.bundles[sole] += &item[sole];
            return Ok(sole);
        }
        let winner = argmin((0..n).filter(|&i| self.active[i]).map(|i| (i, &item[i])));
        self.bundles[winner] += &item[winner];
        if self.bundles[winner] >= self.threshold {
            self.active[winner] = false;
            self.active_count -= 1;
        }
        Ok(winner)
    }
}

/// `a ≤ √2·b` decided exactly on nonnegative rationals via `a² ≤ 2b²`.
fn leq_sqrt2_times(a: &Scalar, b: &Scalar) -> bool {
    a * a <= Scalar::from_int(2) * b * b
}

/// Algorithm 5: the two-agent √2-MMS allocator for normalized chores.
///
/// Maintains per-agent MMS lower bounds `α_i = max(1, max arrived cost)`.
/// An arriving item may go only to agents whose bundle would stay within
/// `√2·α_i`; with both admissible the item goes to agent 1 whenever
/// `c_1(e) ≤ √2·c_2(e)`, else to agent 2. All √2 comparisons are exact
/// (squared form) because the known hard instances sit on rational
/// boundaries where floating point could flip a branch.
pub struct Sqrt2Chores {
    bundles: [Scalar; 2],
    alpha: [Scalar; 2],
    arrived: usize,
}

impl Sqrt2Chores {
    pub fn new(n: usize) -> Result<Self> {
        if n != 2 {
            return Err(Error::InvalidConfig(format!(
                "the two-agent chores algorithm requires n = 2, got {n}"
            )));
        }
        Ok(Sqrt2Chores {
            bundles: [Scalar::zero(), Scalar::zero()],
            alpha: [Scalar::one(), Scalar::one()],
            arrived: 0,
        })
    }
}

impl OnlineAllocator for Sqrt2Chores {
    fn n(&self) -> usize {
        2
    }

    fn kind(&self) -> Kind {
        Kind::Chores
    }

    fn decide(&mut self, item: &[Scalar]) -> Result<usize> {
        check_len(item, 2)?;
        self.arrived += 1;
        for i in 0..2 {
            if item[i] > self.alpha[i] {
                self.alpha[i] = item[i].clone();
            }
        }
        let admissible: Vec<usize> = (0..2)
            .filter(|&i| leq_sqrt2_times(&(&self.bundles[i] + &item[i]), &self.alpha[i]))
            .collect();
        let winner = match admissible.as_slice() {
            [] => {
                // The guarantee proof rules this out; reaching it means the
                // implementation (or the instance contract) is broken.
                return Err(Error::GuaranteeAlarm(format!(
                    "no admissible agent at item {}: bundles = [{}, {}], \
                     costs = [{}, {}], alpha = [{}, {}]",
                    self.arrived,
                    self.bundles[0],
                    self.bundles[1],
                    item[0],
                    item[1],
                    self.alpha[0],
                    self.alpha[1]
                )));
            }
            [sole] => *sole,
            _ => {
                if leq_sqrt2_times(&item[0], &item[1]) {
                    0
                } else {
                    1
                }
            }
        };
        self.bundles[winner] += &item[winner];
        Ok(winner)
    }
}

/// Algorithm 6: Sesqui Round Robin. Purely positional with period
/// `p = n + ⌈n/2⌉`: within each period the owners run 1..n and then fold
/// back n, n−1, ... so the high-indexed agents take two chores per period.
/// 5/3-MMS on monotone (descending-cost) instances.
pub struct SesquiRoundRobin {
    n: usize,
    period: usize,
    position: usize,
}

impl SesquiRoundRobin {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("n must be >= 1".into()));
        }
        Ok(SesquiRoundRobin {
            n,
            period: n + n.div_ceil(2),
            position: 0,
        })
    }

    /// Owner (0-based) of the j-th item (0-based).
    pub fn owner_at(&self, j: usize) -> usize {
        let q = j % self.period;
        if q < self.n {
            q
        } else {
            2 * self.n - 1 - q
        }
    }
}

impl OnlineAllocator for SesquiRoundRobin {
    fn n(&self) -> usize {
        self.n
    }

    fn kind(&self) -> Kind {
        Kind::Chores
    }

    fn decide(&mut self, item: &[Scalar]) -> Result<usize> {
        check_len(item, self.n)?;
        let owner = self.owner_at(self.position);
        self.position += 1;
        Ok(owner)
    }
}

/// Shared configuration for the small-chore allocators: the promised
/// per-item cost bound `0 < α ≤ 1`. As with small goods, `strict` controls
/// whether a violating arrival errors out or is allocated on faith.
#[derive(Debug, Clone)]
pub struct SmallChoresConfig {
    pub alpha: Scalar,
    pub strict: bool,
}

impl SmallChoresConfig {
    pub fn new(alpha: Scalar) -> Result<Self> {
        if alpha <= Scalar::zero() || alpha > Scalar::one() {
            return Err(Error::InvalidConfig(format!(
                "alpha must satisfy 0 < alpha <= 1, got {alpha}"
            )));
        }
        Ok(SmallChoresConfig {
            alpha,
            strict: true,
        })
    }

    pub fn lenient(alpha: Scalar) -> Result<Self> {
        let mut config = Self::new(alpha)?;
        config.strict = false;
        Ok(config)
    }

    fn check(&self, item: &[Scalar], index: usize) -> Result<()> {
        if !self.strict {
            return Ok(());
        }
        if let Some(agent) = (0..item.len()).find(|&i| item[i] > self.alpha) {
            return Err(Error::PreconditionViolation {
                agent,
                item: index,
                detail: format!(
                    "cost {} exceeds the small-chore bound {}",
                    item[agent], self.alpha
                ),
            });
        }
        Ok(())
    }
}

/// Algorithm 7: the (1+α)-MMS allocator for normalized chores with item
/// costs at most α. Greedy argmin over active agents, retirement at bundle
/// cost 1, sole survivor absorbs.
pub struct SmallChores {
    config: SmallChoresConfig,
    active: Vec<bool>,
    active_count: usize,
    bundles: Vec<Scalar>,
    arrived: usize,
}

impl SmallChores {
    pub fn new(n: usize, config: SmallChoresConfig) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("n must be >= 1".into()));
        }
        Ok(SmallChores {
            config,
            active: vec![true; n],
            active_count: n,
            bundles: vec![Scalar::zero(); n],
            arrived: 0,
        })
    }
}

impl OnlineAllocator for SmallChores {
    fn n(&self) -> usize {
        self.active.len()
    }

    fn kind(&self) -> Kind {
        Kind::Chores
    }

    fn decide(&mut self, item: &[Scalar]) -> Result<usize> {
        let n = self.active.len();
        check_len(item, n)?;
        let index = self.arrived;
        self.arrived += 1;
        self.config.check(item, index)?;
        if self.active_count == 1 {
            let sole = (0..n).find(|&i| self.active[i]).unwrap();
            self.bundles[sole] += &item[sole];
            return Ok(sole);
        }
        let winner = argmin((0..n).filter(|&i| self.active[i]).map(|i| (i, &item[i])));
        self.bundles[winner] += &item[winner];
        if self.bundles[winner] >= Scalar::one() {
            self.active[winner] = false;
            self.active_count -= 1;
        }
        Ok(winner)
    }
}

/// The approximation factor of the two-agent small-chore algorithm:
/// γ(α) = √(α² − 4α + 5) + α − 1, the root of (2−x)²/(2x−2) + α = x.
pub fn gamma(alpha: f64) -> f64 {
    (alpha * alpha - 4.0 * alpha + 5.0).sqrt() + alpha - 1.0
}

/// The branch threshold ρ(γ) = (2γ−2)/(2−γ).
pub fn rho(gamma: f64) -> f64 {
    (2.0 * gamma - 2.0) / (2.0 - gamma)
}

/// `a ≤ b` up to a 1e-12 relative tolerance, resolving boundary cases
/// toward acceptance.
fn leq_tol(a: f64, b: f64) -> bool {
    a - b <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Algorithm 8: the γ-MMS allocator for two agents with item costs at most
/// α. An item may go to an agent only if the bundle stays within γ; with
/// both admissible, agent 1 takes it whenever `c_1(e) ≤ ρ·c_2(e)`.
///
/// γ and ρ are irrational and carry no clean squared-comparison form, so
/// thresholds are evaluated in f64 with a 1e-12 relative tolerance; the
/// certification suite re-checks every outcome against the exact oracle.
pub struct SmallChoresTwo {
    config: SmallChoresConfig,
    gamma: f64,
    rho: f64,
    bundles: [Scalar; 2],
    arrived: usize,
}

impl SmallChoresTwo {
    pub fn new(config: SmallChoresConfig) -> Result<Self> {
        let g = gamma(config.alpha.to_f64());
        Ok(SmallChoresTwo {
            gamma: g,
            rho: rho(g),
            config,
            bundles: [Scalar::zero(), Scalar::zero()],
            arrived: 0,
        })
    }

    pub fn gamma_value(&self) -> f64 {
        self.gamma
    }
}

impl OnlineAllocator for SmallChoresTwo {
    fn n(&self) -> usize {
        2
    }

    fn kind(&self) -> Kind {
        Kind::Chores
    }

    fn decide(&mut self, item: &[Scalar]) -> Result<usize> {
        check_len(item, 2)?;
        let index = self.arrived;
        self.arrived += 1;
        self.config.check(item, index)?;
        let admissible: Vec<usize> = (0..2)
            .filter(|&i| leq_tol((&self.bundles[i] + &item[i]).to_f64(), self.gamma))
            .collect();
        let winner = match admissible.as_slice() {
            [] => {
                return Err(Error::GuaranteeAlarm(format!(
                    "no admissible agent at item {}: bundles = [{}, {}], \
                     costs = [{}, {}], gamma = {}",
                    index + 1,
                    self.bundles[0],
                    self.bundles[1],
                    item[0],
                    item[1],
                    self.gamma
                )));
            }
            [sole] => *sole,
            _ => {
                if leq_tol(item[0].to_f64(), self.rho * item[1].to_f64()) {
                    0
                } else {
                    1
                }
            }
        };
        self.bundles[winner] += &item[winner];
        Ok(winner)
    }
}

fn check_len(item: &[Scalar], n: usize) -> Result<()> {
    if item.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "item vector has length {}, expected {}",
            item.len(),
            n
        )));
    }
    Ok(())
}

/// First index attaining the minimum (iterator order breaks ties).
fn argmin<'a, I>(candidates: I) -> usize
where
    I: IntoIterator<Item = (usize, &'a Scalar)>,
{
    let mut best: Option<(usize, &Scalar)> = None;
    for (i, v) in candidates {
        match best {
            Some((_, bv)) if v >= bv => {}
            _ => best = Some((i, v)),
        }
    }
    best.expect("argmin of empty candidate set").0
}
