//! Online allocators for goods: two greedy baselines, the two-agent
//! 0.5-MMS algorithm, the monotone-arrival algorithm, and the small-good
//! algorithm.

use crate::error::{Error, Result};
use crate::instance::Kind;
use crate::online::OnlineAllocator;
use crate::scalar::Scalar;

/// Assigns each item to the agent valuing it most (ties to the smallest
/// index). No guarantee; baseline only.
pub struct GreedyGoods {
    n: usize,
}

impl GreedyGoods {
    pub fn new(n: usize) -> Self {
        GreedyGoods { n }
    }
}

impl OnlineAllocator for GreedyGoods {
    fn n(&self) -> usize {
        self.n
    }

    fn kind(&self) -> Kind {
        Kind::Goods
    }

    fn decide(&mut self, item: &[Scalar]) -> Result<usize> {
        check_len(item, self.n)?;
        Ok(argmax(item.iter().enumerate()))
    }
}

/// Two-agent greedy that stops feeding an agent once its bundle reaches
/// 1/2. Still unboundedly bad; baseline only.
pub struct CappedGreedyGoods {
    bundles: [Scalar; 2],
}

impl CappedGreedyGoods {
    pub fn new(n: usize) -> Result<Self> {
        if n != 2 {
            return Err(Error::InvalidConfig(format!(
                "capped greedy is defined for n = 2, got {n}"
            )));
        }
        Ok(CappedGreedyGoods {
            bundles: [Scalar::zero(), Scalar::zero()],
        })
    }
}

impl OnlineAllocator for CappedGreedyGoods {
    fn n(&self) -> usize {
        2
    }

    fn kind(&self) -> Kind {
        Kind::Goods
    }

    fn decide(&mut self, item: &[Scalar]) -> Result<usize> {
        check_len(item, 2)?;
        let half = Scalar::ratio(1, 2);
        let open: Vec<usize> = (0..2).filter(|&i| self.bundles[i] < half).collect();
        let winner = match open.len() {
            0 => 0,
            1 => open[0],
            _ => argmax(open.iter().map(|&i| (i, &item[i]))),
        };
        self.bundles[winner] += &item[winner];
        Ok(winner)
    }
}

/// Algorithm 1: the two-agent 0.5-MMS allocator for normalized goods.
///
/// While both agents are active, an item large to both (value at least 1/2
/// for each) goes to the agent with the currently smaller bundle, who is
/// then deactivated; otherwise the item goes greedily to the agent valuing
/// it more, deactivating that agent once its bundle reaches 1/2. A sole
/// active agent absorbs everything.
pub struct TwoAgentGoods {
    bundles: [Scalar; 2],
    active: [bool; 2],
}

impl TwoAgentGoods {
    pub fn new(n: usize) -> Result<Self> {
        if n != 2 {
            return Err(Error::InvalidConfig(format!(
                "the two-agent goods algorithm requires n = 2, got {n}"
            )));
        }
        Ok(TwoAgentGoods {
            bundles: [Scalar::zero(), Scalar::zero()],
            active: [true, true],
        })
    }

    fn sole_active(&self) -> Option<usize> {
        match self.active {
            [true, false] => Some(0),
            [false, true] => Some(1),
            _ => None,
        }
    }
}

impl OnlineAllocator for TwoAgentGoods {
    fn n(&self) -> usize {
        2
    }

    fn kind(&self) -> Kind {
        Kind::Goods
    }

    fn decide(&mut self, item: &[Scalar]) -> Result<usize> {
        check_len(item, 2)?;
        let half = Scalar::ratio(1, 2);
        if let Some(sole) = self.sole_active() {
            self.bundles[sole] += &item[sole];
            return Ok(sole);
        }
        let winner = if item[0] >= half && item[1] >= half {
            // Large to both: the poorer agent takes it and retires.
            let poorer = if self.bundles[0] <= self.bundles[1] { 0 } else { 1 };
            self.active[poorer] = false;
            poorer
        } else {
            let greedy = argmax(item.iter().enumerate());
            if &self.bundles[greedy] + &item[greedy] >= half {
                self.active[greedy] = false;
            }
            greedy
        };
        self.bundles[winner] += &item[winner];
        Ok(winner)
    }
}

/// Algorithm 2: the 0.5-MMS allocator for monotone (descending-arrival)
/// normalized goods.
///
/// Phase 1 hands each sufficiently large item to the lowest-indexed active
/// agent that finds it large (at least `(n − v_i(L))/(2|A|)` where `L` is
/// the set of phase-1 items), deactivating the receiver. The first item
/// that is large to nobody freezes per-agent thresholds `β_i` and starts
/// phase 2, where items go to the active agent maximizing `v_j(e)/β_j` and
/// agents retire once their bundle reaches `β_j` (never the last one).
pub struct MonotoneGoods {
    n: usize,
    active: Vec<bool>,
    active_count: usize,
    bundles: Vec<Scalar>,
    /// Each agent's value for the phase-1 ("large") items allocated so far.
    large_seen: Vec<Scalar>,
    /// Thresholds frozen at the phase transition; None while in phase 1.
    beta: Option<Vec<Scalar>>,
    last_deactivated: usize,
}

impl MonotoneGoods {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("n must be >= 1".into()));
        }
        Ok(MonotoneGoods {
            n,
            active: vec![true; n],
            active_count: n,
            bundles: vec![Scalar::zero(); n],
            large_seen: vec![Scalar::zero(); n],
            beta: None,
            last_deactivated: 0,
        })
    }

    /// `v_i(M \ L) / (2|A|)` — the phase-1 largeness threshold for agent i.
    fn phase1_threshold(&self, agent: usize) -> Scalar {
        let remaining = Scalar::from_int(self.n as i64) - &self.large_seen[agent];
        remaining / Scalar::from_int(2 * self.active_count as i64)
    }

    fn deactivate(&mut self, agent: usize) {
        self.active[agent] = false;
        self.active_count -= 1;
        self.last_deactivated = agent;
    }

    fn decide_phase2(&mut self, item: &[Scalar], beta: &[Scalar]) -> usize {
        if self.active_count == 0 {
            // Only reachable through boundary equalities in phase 1; dump
            // on the most recent phase-1 receiver to keep the partition
            // total.
            return self.last_deactivated;
        }
        // argmax of v_j(e)/β_j over active agents; zero thresholds sort
        // last (their owners already saw no remaining value).
        let mut winner: Option<(usize, RatioKey)> = None;
        for j in 0..self.n {
            if !self.active[j] {
                continue;
            }
            let key = RatioKey::new(&item[j], &beta[j]);
            match &winner {
                Some((_, best)) if !key.beats(best) => {}
                _ => winner = Some((j, key)),
            }
        }
        let (winner, _) = winner.expect("active_count > 0");
        self.bundles[winner] += &item[winner];
        if self.active_count > 1 && self.bundles[winner] >= beta[winner] {
            self.deactivate(winner);
        }
        winner
    }
}

/// Ranking key for the phase-2 argmax `v_j(e)/β_j`, total even when
/// β_j = 0: positive thresholds compare by exact ratio, zero-threshold
/// agents come after all of them, with value-0 agents ahead of value->0
/// ones (whose ratio is taken as −∞). Ties resolve to the earlier agent.
enum RatioKey {
    Ratio(Scalar),
    ZeroOverZero,
    NegInfinity,
}

impl RatioKey {
    fn new(value: &Scalar, beta: &Scalar) -> Self {
        if !beta.is_zero() {
            RatioKey::Ratio(value / beta)
        } else if value.is_zero() {
            RatioKey::ZeroOverZero
        } else {
            RatioKey::NegInfinity
        }
    }

    fn rank(&self) -> u8 {
        match self {
            RatioKey::Ratio(_) => 2,
            RatioKey::ZeroOverZero => 1,
            RatioKey::NegInfinity => 0,
        }
    }

    /// Strictly better than `other` (equal keys keep the incumbent, which
    /// has the smaller index).
    fn beats(&self, other: &RatioKey) -> bool {
        match (self, other) {
            (RatioKey::Ratio(a), RatioKey::Ratio(b)) => a > b,
            _ => self.rank() > other.rank(),
        }
    }
}

impl OnlineAllocator for MonotoneGoods {
    fn n(&self) -> usize {
        self.n
    }

    fn kind(&self) -> Kind {
        Kind::Goods
    }

    fn decide(&mut self, item: &[Scalar]) -> Result<usize> {
        check_len(item, self.n)?;
        if let Some(beta) = self.beta.clone() {
            return Ok(self.decide_phase2(item, &beta));
        }
        if self.active_count > 0 {
            let large_to = (0..self.n)
                .filter(|&i| self.active[i])
                .find(|&i| item[i] >= self.phase1_threshold(i));
            if let Some(i) = large_to {
                self.bundles[i] += &item[i];
                self.deactivate(i);
                for (seen, v) in self.large_seen.iter_mut().zip(item) {
                    *seen += v;
                }
                return Ok(i);
            }
        }
        // Transition: freeze thresholds at the current active count and
        // allocate this very item by the phase-2 rule. With nobody active
        // (every agent deactivated in phase 1) the thresholds are moot.
        let beta: Vec<Scalar> = if self.active_count == 0 {
            vec![Scalar::zero(); self.n]
        } else {
            (0..self.n).map(|i| self.phase1_threshold(i)).collect()
        };
        self.beta = Some(beta.clone());
        Ok(self.decide_phase2(item, &beta))
    }
}

/// Configuration for the small-good allocator: the promised bound `α < 1`
/// on every item value. With `strict` set (the default) an arriving item
/// exceeding the bound is a precondition violation; cleared, the bound is
/// taken on faith and only steers the deactivation threshold.
#[derive(Debug, Clone)]
pub struct SmallGoodsConfig {
    pub alpha: Scalar,
    pub strict: bool,
}

impl SmallGoodsConfig {
    pub fn new(alpha: Scalar) -> Result<Self> {
        if alpha.is_negative() || alpha >= Scalar::one() {
            return Err(Error::InvalidConfig(format!(
                "alpha must satisfy 0 <= alpha < 1, got {alpha}"
            )));
        }
        Ok(SmallGoodsConfig {
            alpha,
            strict: true,
        })
    }

    pub fn lenient(alpha: Scalar) -> Result<Self> {
        let mut config = Self::new(alpha)?;
        config.strict = false;
        Ok(config)
    }
}

/// Algorithm 3: the (1−α)-MMS allocator for normalized goods whose item
/// values never exceed α. Greedy over active agents; an agent retires once
/// its bundle reaches 1−α, except a sole survivor, which absorbs the rest.
pub struct SmallGoods {
    config: SmallGoodsConfig,
    active: Vec<bool>,
    active_count: usize,
    bundles: Vec<Scalar>,
    arrived: usize,
}

impl SmallGoods {
    pub fn new(n: usize, config: SmallGoodsConfig) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("n must be >= 1".into()));
        }
        Ok(SmallGoods {
            config,
            active: vec![true; n],
            active_count: n,
            bundles: vec![Scalar::zero(); n],
            arrived: 0,
        })
    }
}

impl OnlineAllocator for SmallGoods {
    fn n(&self) -> usize {
        self.active.len()
    }

    fn kind(&self) -> Kind {
        Kind::Goods
    }

    fn decide(&mut self, item: &[Scalar]) -> Result<usize> {
        let n = self.active.len();
        check_len(item, n)?;
        let index = self.arrived;
        self.arrived += 1;
        if self.config.strict {
            if let Some(agent) = (0..n).find(|&i| item[i] > self.config.alpha) {
                return Err(Error::PreconditionViolation {
                    agent,
                    item: index,
                    detail: format!(
                        "value {} exceeds the small-good bound {}",
                        item[agent], self.config.alpha
                    ),
                });
            }
        }
        let winner = if self.active_count == 1 {
            (0..n).find(|&i| self.active[i]).unwrap()
        } else {
            let greedy = argmax((0..n).filter(|&i| self.active[i]).map(|i| (i, &item[i])));
            let kept = Scalar::one() - &self.config.alpha;
            if &self.bundles[greedy] + &item[greedy] >= kept {
                self.active[greedy] = false;
                self.active_count -= 1;
            }
            greedy
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

/// First index attaining the maximum (iterator order breaks ties).
fn argmax<'a, I>(candidates: I) -> usize
where
    I: IntoIterator<Item = (usize, &'a Scalar)>,
{
    let mut best: Option<(usize, &Scalar)> = None;
    for (i, v) in candidates {
        match best {
            Some((_, bv)) if v <= bv => {}
            _ => best = Some((i, v)),
        }
    }
    best.expect("argmax of empty candidate set").0
}
