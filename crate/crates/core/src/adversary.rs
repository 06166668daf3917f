//! Adaptive adversaries transcribed from lower-bound constructions. Each
//! one watches the allocator's decisions and emits the punishing
//! continuation; the realized instance is certified post hoc.
//!
//! Every adversary reasons over *canonical* agents (the proof's "assume
//! w.l.o.g. agent 1 receives it") and maintains a permutation to the real
//! agents fixed greedily as decisions arrive.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::instance::{Allocation, Instance, Kind};
use crate::online::{play_match, worst_ratio, AdaptiveAdversary, OnlineAllocator};
use crate::oracle::mms_all;
use crate::scalar::Scalar;

/// The realized instance of one adversary match, with exact per-agent MMS
/// (closed form when the construction pins it down, oracle otherwise) and
/// the worst ratio the adversary forced.
#[derive(Debug, Clone)]
pub struct AdversaryOutcome {
    pub instance: Instance,
    pub allocation: Allocation,
    pub mms: Vec<Scalar>,
    pub worst: Scalar,
}

/// Plays an adversary against an allocator and certifies the outcome. MMS
/// values come from the adversary's closed form when available, otherwise
/// from the exact oracle (within `cap`).
pub fn run_adversary(
    allocator: &mut dyn OnlineAllocator,
    adversary: &mut dyn AdaptiveAdversary,
    cap: usize,
) -> Result<AdversaryOutcome> {
    let (instance, allocation) = play_match(allocator, adversary)?;
    let mms = match adversary.mms_hint() {
        Some(hint) => hint,
        None => mms_all(&instance, cap)?.mms,
    };
    let worst = worst_ratio(&instance, &allocation, &mms)?;
    Ok(AdversaryOutcome {
        instance,
        allocation,
        mms,
        worst,
    })
}

/// Canonical → real agent relabeling.
#[derive(Debug, Clone)]
struct Relabel {
    /// `to_real[c]` is the real agent playing canonical role `c`.
    to_real: Vec<usize>,
}

impl Relabel {
    fn identity(n: usize) -> Self {
        Relabel {
            to_real: (0..n).collect(),
        }
    }

    fn canon_of(&self, real: usize) -> usize {
        self.to_real.iter().position(|&r| r == real).unwrap()
    }

    /// Makes `real` play canonical role `canon` by swapping roles.
    fn assign(&mut self, canon: usize, real: usize) {
        let current = self.canon_of(real);
        self.to_real.swap(canon, current);
    }

    /// Canonical column → real column.
    fn emit(&self, canonical: &[Scalar]) -> Vec<Scalar> {
        let mut real = vec![Scalar::zero(); canonical.len()];
        for (c, v) in canonical.iter().enumerate() {
            real[self.to_real[c]] = v.clone();
        }
        real
    }

    /// Canonical vector → real vector (same mapping as [`emit`]).
    fn emit_owned(&self, canonical: Vec<Scalar>) -> Vec<Scalar> {
        self.emit(&canonical)
    }
}

/// Remaining script once an adversary has committed to an ending: fixed
/// canonical columns, with `Remainder` columns computed at emission time so
/// every row tops up to exactly `n`.
enum Step {
    Fixed(Vec<Scalar>),
    Remainder,
}

/// Shared bookkeeping: canonical running row totals plus a scripted tail.
struct Script {
    n: usize,
    totals: Vec<Scalar>,
    tail: VecDeque<Step>,
    /// Latched on the first pop: the adversary has committed to its ending
    /// and ignores decisions from here on.
    scripted: bool,
    done: bool,
}

impl Script {
    fn new(n: usize) -> Self {
        Script {
            n,
            totals: vec![Scalar::zero(); n],
            tail: VecDeque::new(),
            scripted: false,
            done: false,
        }
    }

    /// Records and returns a canonical column.
    fn emit(&mut self, canonical: Vec<Scalar>) -> Vec<Scalar> {
        for (t, v) in self.totals.iter_mut().zip(&canonical) {
            *t += v;
        }
        canonical
    }

    fn remainder(&self) -> Vec<Scalar> {
        let n = Scalar::from_int(self.n as i64);
        self.totals.iter().map(|t| &n - t).collect()
    }

    /// Pops the next scripted column, or None when the script is spent.
    fn pop(&mut self) -> Option<Vec<Scalar>> {
        self.scripted = true;
        match self.tail.pop_front() {
            Some(Step::Fixed(column)) => Some(self.emit(column)),
            Some(Step::Remainder) => {
                let column = self.remainder();
                Some(self.emit(column))
            }
            None => {
                self.done = true;
                None
            }
        }
    }

    fn in_tail(&self) -> bool {
        self.scripted
    }
}

// ---------------------------------------------------------------------------
// Goods, n = 3.

enum Goods3Stage {
    Start,
    SentE1,
    SentE2,
    SentE3,
    SentE4AfterCanon3,
}

/// The three-agent goods construction forcing a worst ratio below 1/r.
/// Decision tree: e2 back on agent 1 is punished immediately; otherwise the
/// receiver of e3 (agent 1 / agent 2 / agent 3) selects one of three table
/// endings, each closed by a normalization item.
pub struct Goods3 {
    eps: Scalar,
    r: Scalar,
    relabel: Relabel,
    script: Script,
    stage: Goods3Stage,
}

impl Goods3 {
    pub fn new(r: u64, eps: Scalar) -> Result<Self> {
        if r < 2 {
            return Err(Error::InvalidConfig(format!("r must be >= 2, got {r}")));
        }
        if eps <= Scalar::zero() {
            return Err(Error::InvalidConfig("eps must be positive".into()));
        }
        let r = Scalar::from_int(r as i64);
        // Usable regime: r^3 * eps below the 1/r target.
        if r.clone().pow(3) * &eps >= Scalar::one() / &r {
            return Err(Error::InvalidConfig(format!(
                "need r^4 * eps < 1, got r = {r}, eps = {eps}"
            )));
        }
        Ok(Goods3 {
            eps,
            r,
            relabel: Relabel::identity(3),
            script: Script::new(3),
            stage: Goods3Stage::Start,
        })
    }

    fn rp(&self, k: i32) -> Scalar {
        self.r.clone().pow(k) * &self.eps
    }
}

impl AdaptiveAdversary for Goods3 {
    fn n(&self) -> usize {
        3
    }

    fn kind(&self) -> Kind {
        Kind::Goods
    }

    fn next_item(&mut self, last: Option<usize>) -> Option<Vec<Scalar>> {
        if self.script.in_tail() {
            return self.script.pop().map(|c| self.relabel.emit_owned(c));
        }
        let e = self.eps.clone();
        let canonical = match self.stage {
            Goods3Stage::Start => {
                self.stage = Goods3Stage::SentE1;
                self.script.emit(vec![e.clone(), e.clone(), e])
            }
            Goods3Stage::SentE1 => {
                self.relabel.assign(0, last.unwrap());
                self.stage = Goods3Stage::SentE2;
                self.script.emit(vec![self.rp(2), e.clone(), e])
            }
            Goods3Stage::SentE2 => {
                let receiver = self.relabel.canon_of(last.unwrap());
                if receiver == 0 {
                    // Three-item punishment: one of agents {2,3} starves.
                    self.script.tail.push_back(Step::Remainder);
                    return self.script.pop().map(|c| self.relabel.emit_owned(c));
                }
                self.relabel.assign(1, last.unwrap());
                self.stage = Goods3Stage::SentE3;
                self.script.emit(vec![self.rp(1), self.rp(2), e])
            }
            Goods3Stage::SentE3 => match self.relabel.canon_of(last.unwrap()) {
                1 => {
                    self.script.tail.push_back(Step::Remainder);
                    return self.script.pop().map(|c| self.relabel.emit_owned(c));
                }
                0 => {
                    self.script.tail.push_back(Step::Fixed(vec![
                        self.rp(3),
                        self.rp(1),
                        e,
                    ]));
                    self.script.tail.push_back(Step::Remainder);
                    return self.script.pop().map(|c| self.relabel.emit_owned(c));
                }
                _ => {
                    self.stage = Goods3Stage::SentE4AfterCanon3;
                    self.script.emit(vec![e, self.rp(1), self.rp(2)])
                }
            },
            Goods3Stage::SentE4AfterCanon3 => {
                if self.relabel.canon_of(last.unwrap()) == 2 {
                    self.script.tail.push_back(Step::Remainder);
                } else {
                    self.script
                        .tail
                        .push_back(Step::Fixed(vec![self.rp(2), self.rp(3), self.rp(2)]));
                    self.script.tail.push_back(Step::Remainder);
                }
                return self.script.pop().map(|c| self.relabel.emit_owned(c));
            }
        };
        Some(self.relabel.emit_owned(canonical))
    }
}

// ---------------------------------------------------------------------------
// Goods, n >= 4.

enum GoodsNStage {
    /// Emitting the opening pattern; next canonical item index (0-based).
    Opening(usize),
    SentEn,
    SentEn1AfterCanonN,
}

/// The n >= 4 goods construction: opening pattern of n−1 items that must
/// spread across distinct agents, then a two-way branch on the receivers
/// of items n and n+1, each ending in a normalization closer.
pub struct GoodsN {
    n: usize,
    eps: Scalar,
    r: Scalar,
    relabel: Relabel,
    script: Script,
    stage: GoodsNStage,
}

impl GoodsN {
    pub fn new(n: usize, r: u64, eps: Scalar) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidConfig(format!(
                "this construction requires n >= 4, got {n}"
            )));
        }
        if r < 2 {
            return Err(Error::InvalidConfig(format!("r must be >= 2, got {r}")));
        }
        if eps <= Scalar::zero() {
            return Err(Error::InvalidConfig("eps must be positive".into()));
        }
        let r = Scalar::from_int(r as i64);
        if r.clone().pow(3) * &eps >= Scalar::one() / &r {
            return Err(Error::InvalidConfig(format!(
                "need r^4 * eps < 1, got r = {r}, eps = {eps}"
            )));
        }
        Ok(GoodsN {
            n,
            eps,
            r,
            relabel: Relabel::identity(n),
            script: Script::new(n),
            stage: GoodsNStage::Opening(0),
        })
    }

    fn rp(&self, k: i32) -> Scalar {
        self.r.clone().pow(k) * &self.eps
    }

    /// Opening item e_{j+1} (0-based j): r^3*eps to canonical agents below
    /// j, eps to the rest.
    fn opening_column(&self, j: usize) -> Vec<Scalar> {
        (0..self.n)
            .map(|i| if i < j { self.rp(3) } else { self.eps.clone() })
            .collect()
    }

    fn pop_tail(&mut self) -> Option<Vec<Scalar>> {
        self.script.pop().map(|c| self.relabel.emit_owned(c))
    }
}

impl AdaptiveAdversary for GoodsN {
    fn n(&self) -> usize {
        self.n
    }

    fn kind(&self) -> Kind {
        Kind::Goods
    }

    fn next_item(&mut self, last: Option<usize>) -> Option<Vec<Scalar>> {
        if self.script.in_tail() {
            return self.pop_tail();
        }
        let e = self.eps.clone();
        let canonical = match self.stage {
            GoodsNStage::Opening(j) => {
                if let Some(real) = last {
                    let canon = self.relabel.canon_of(real);
                    if canon < j - 1 {
                        // A repeat receiver: finish the opening pattern
                        // verbatim and close; two agents end item-less
                        // with one item left.
                        for rest in j..self.n - 1 {
                            let column = self.opening_column(rest);
                            self.script.tail.push_back(Step::Fixed(column));
                        }
                        self.script.tail.push_back(Step::Remainder);
                        return self.pop_tail();
                    }
                    // Fresh receiver: adopt it as canonical agent j−1.
                    self.relabel.assign(j - 1, real);
                }
                if j < self.n - 1 {
                    self.stage = GoodsNStage::Opening(j + 1);
                    let column = self.opening_column(j);
                    self.script.emit(column)
                } else {
                    // Item e_n: r*eps to agent 1, eps to agent n, r^3*eps
                    // between.
                    self.stage = GoodsNStage::SentEn;
                    let column: Vec<Scalar> = (0..self.n)
                        .map(|i| {
                            if i == 0 {
                                self.rp(1)
                            } else if i == self.n - 1 {
                                e.clone()
                            } else {
                                self.rp(3)
                            }
                        })
                        .collect();
                    self.script.emit(column)
                }
            }
            GoodsNStage::SentEn => {
                let canon = self.relabel.canon_of(last.unwrap());
                if canon == 0 {
                    // Case 1: one more r^3*eps item, then the closer.
                    let column: Vec<Scalar> = (0..self.n)
                        .map(|i| if i == self.n - 1 { e.clone() } else { self.rp(3) })
                        .collect();
                    self.script.tail.push_back(Step::Fixed(column));
                    self.script.tail.push_back(Step::Remainder);
                    return self.pop_tail();
                }
                if canon != self.n - 1 {
                    // Middle agent: immediate closer.
                    self.script.tail.push_back(Step::Remainder);
                    return self.pop_tail();
                }
                // Case 2: probe item e_{n+1}.
                self.stage = GoodsNStage::SentEn1AfterCanonN;
                let column: Vec<Scalar> = (0..self.n)
                    .map(|i| {
                        if i == 0 || i == self.n - 1 {
                            e.clone()
                        } else if i == 1 {
                            self.rp(1)
                        } else {
                            self.rp(3)
                        }
                    })
                    .collect();
                self.script.emit(column)
            }
            GoodsNStage::SentEn1AfterCanonN => {
                let canon = self.relabel.canon_of(last.unwrap());
                if canon <= 1 {
                    // Case 2b: one more pattern item, then the closer.
                    let column: Vec<Scalar> = (0..self.n)
                        .map(|i| if i == self.n - 1 { e.clone() } else { self.rp(3) })
                        .collect();
                    self.script.tail.push_back(Step::Fixed(column));
                }
                self.script.tail.push_back(Step::Remainder);
                return self.pop_tail();
            }
        };
        Some(self.relabel.emit_owned(canonical))
    }
}

// ---------------------------------------------------------------------------
// Goods, n = 2 (the 1/2 + delta barrier).

/// The two-agent goods chain: geometrically growing items keep the
/// allocator pinned to agent 1; the first "even" state or any item leaking
/// to agent 2 triggers a normalization closer worth at least 1 to both;
/// surviving the whole chain leaves agent 2 at value < 1/10 with MMS 1.
pub struct Goods2 {
    delta: Scalar,
    l: usize,
    k: usize,
    eps: Scalar,
    relabel: Relabel,
    script: Script,
    /// Canonical bundle values (each agent's own valuation of her bundle).
    bundles: [Scalar; 2],
    /// Last emitted canonical column, awaiting its decision.
    last_column: Vec<Scalar>,
    next_index: usize,
    /// Set when the ending is decided: closed-form MMS, if available.
    hint: Option<Option<Vec<Scalar>>>,
}

impl Goods2 {
    pub fn new(delta: Scalar, l: usize) -> Result<Self> {
        if delta <= Scalar::zero() {
            return Err(Error::InvalidConfig("delta must be positive".into()));
        }
        if l < 2 {
            return Err(Error::InvalidConfig("l must be >= 2".into()));
        }
        let k = l + 18;
        let one = Scalar::one();
        let two_d = Scalar::from_int(2) + &delta;
        let one_d = &one + &delta;
        let eps = Scalar::ratio(1, 10) / (&one_d * two_d.clone().pow(l as i32 - 2));
        // The chain must leave the final closer worth more than 19/10 to
        // agent 1: 2 − eps * ((2+d)/(1+d))^(k−1) > 19/10.
        let chain_total = &eps * (&two_d / &one_d).pow(k as i32 - 1);
        if Scalar::from_int(2) - &chain_total <= Scalar::ratio(19, 10) {
            return Err(Error::InvalidConfig(format!(
                "l = {l} too small for delta = {delta}: the chain leaves \
                 only {} for the closing item",
                Scalar::from_int(2) - &chain_total
            )));
        }
        Ok(Goods2 {
            delta,
            l,
            k,
            eps,
            relabel: Relabel::identity(2),
            script: Script::new(2),
            bundles: [Scalar::zero(), Scalar::zero()],
            last_column: Vec::new(),
            next_index: 1,
            hint: None,
        })
    }

    /// Canonical chain item e_i (1-based, 2 <= i <= k).
    fn chain_item(&self, i: usize) -> Vec<Scalar> {
        let one_d = Scalar::one() + &self.delta;
        let two_d = Scalar::from_int(2) + &self.delta;
        let v1 = two_d.clone().pow(i as i32 - 2) * &self.eps / one_d.clone().pow(i as i32 - 1);
        let cap = i.min(self.l);
        let v2 = two_d.pow(cap as i32 - 2) * &one_d * &self.eps;
        vec![v1, v2]
    }

    /// The Claim-1 unevenness property: some agent values her own bundle
    /// more than (1+delta) times the other's.
    fn uneven(&self) -> bool {
        let one_d = Scalar::one() + &self.delta;
        self.bundles[0] > &one_d * &self.bundles[1]
            || self.bundles[1] > one_d * &self.bundles[0]
    }

    fn close(&mut self, full_chain: bool) -> Option<Vec<Scalar>> {
        let totals = self.script.totals.clone();
        let hint = if full_chain {
            // Agent 1's MMS is the whole chain (the closer dwarfs it);
            // agent 2 can split her ten 0.1-items against everything else.
            Some(vec![totals[0].clone(), Scalar::one()])
        } else if totals[0] <= Scalar::one() && totals[1] <= Scalar::one() {
            // The closer is worth >= 1 to both, so each MMS equals the
            // pre-closer total.
            Some(totals)
        } else {
            None
        };
        self.hint = Some(hint.map(|h| self.relabel.emit_owned(h)));
        self.script.tail.push_back(Step::Remainder);
        self.script.pop().map(|c| self.relabel.emit_owned(c))
    }
}

impl AdaptiveAdversary for Goods2 {
    fn n(&self) -> usize {
        2
    }

    fn kind(&self) -> Kind {
        Kind::Goods
    }

    fn next_item(&mut self, last: Option<usize>) -> Option<Vec<Scalar>> {
        if self.script.in_tail() {
            return self.script.pop().map(|c| self.relabel.emit_owned(c));
        }
        match last {
            None => {
                self.next_index = 2;
                let e = self.eps.clone();
                let column = self.script.emit(vec![e.clone(), e]);
                self.last_column = column.clone();
                Some(self.relabel.emit_owned(column))
            }
            Some(real) => {
                if self.next_index == 2 {
                    // First decision fixes which real agent is canonical 1.
                    self.relabel.assign(0, real);
                }
                let canon = self.relabel.canon_of(real);
                self.bundles[canon] += &self.last_column[canon];
                if canon == 1 {
                    return self.close(false);
                }
                if self.script.totals[0] <= Scalar::one()
                    && self.script.totals[1] <= Scalar::one()
                    && !self.uneven()
                {
                    return self.close(false);
                }
                if self.next_index > self.k {
                    return self.close(true);
                }
                let i = self.next_index;
                self.next_index += 1;
                let column = self.chain_item(i);
                let column = self.script.emit(column);
                self.last_column = column.clone();
                Some(self.relabel.emit_owned(column))
            }
        }
    }

    fn mms_hint(&self) -> Option<Vec<Scalar>> {
        self.hint.clone().flatten()
    }
}

// ---------------------------------------------------------------------------
// Chores, n = 2 (the 15/11 barrier).

enum Chores2Stage {
    Start,
    SentE1,
    SentE2,
    /// In the 3/11-chain; next canonical index in 3..=6.
    Chain(usize),
}

/// The two-agent chores construction forcing cost at least 15/11 against
/// every allocator. MMS is 1 for both agents on every branch.
pub struct Chores2 {
    relabel: Relabel,
    script: Script,
    stage: Chores2Stage,
}

impl Chores2 {
    pub fn new() -> Self {
        Chores2 {
            relabel: Relabel::identity(2),
            script: Script::new(2),
            stage: Chores2Stage::Start,
        }
    }
}

impl Default for Chores2 {
    fn default() -> Self {
        Chores2::new()
    }
}

impl AdaptiveAdversary for Chores2 {
    fn n(&self) -> usize {
        2
    }

    fn kind(&self) -> Kind {
        Kind::Chores
    }

    fn next_item(&mut self, last: Option<usize>) -> Option<Vec<Scalar>> {
        if self.script.in_tail() {
            return self.script.pop().map(|c| self.relabel.emit_owned(c));
        }
        let r = |p: i64| Scalar::ratio(p, 11);
        let canonical = match self.stage {
            Chores2Stage::Start => {
                self.stage = Chores2Stage::SentE1;
                self.script.emit(vec![r(4), r(4)])
            }
            Chores2Stage::SentE1 => {
                self.relabel.assign(0, last.unwrap());
                self.stage = Chores2Stage::SentE2;
                self.script.emit(vec![r(4), r(3)])
            }
            Chores2Stage::SentE2 => {
                if self.relabel.canon_of(last.unwrap()) == 0 {
                    // Both big items on agent 1: the 7/11 pair finishes the
                    // four-item table.
                    self.script.tail.push_back(Step::Fixed(vec![r(7), r(7)]));
                    self.script.tail.push_back(Step::Fixed(vec![r(7), r(8)]));
                    return self.script.pop().map(|c| self.relabel.emit_owned(c));
                }
                self.stage = Chores2Stage::Chain(4);
                self.script.emit(vec![r(3), r(1)])
            }
            Chores2Stage::Chain(i) => {
                if self.relabel.canon_of(last.unwrap()) == 1 {
                    // Chain item i−1 leaked to agent 2: pair her 4/11 with
                    // a unit chore.
                    let c1 = match i - 1 {
                        3 => Scalar::one(),
                        4 => r(8),
                        5 => r(5),
                        _ => r(2),
                    };
                    self.script
                        .tail
                        .push_back(Step::Fixed(vec![c1, Scalar::one()]));
                    return self.script.pop().map(|c| self.relabel.emit_owned(c));
                }
                if i > 6 {
                    // Agent 1 swallowed the whole chain (cost 16/11): the
                    // last column completes the normalized table.
                    self.script
                        .tail
                        .push_back(Step::Fixed(vec![r(2), Scalar::one()]));
                    return self.script.pop().map(|c| self.relabel.emit_owned(c));
                }
                self.stage = Chores2Stage::Chain(i + 1);
                self.script.emit(vec![r(3), r(1)])
            }
        };
        Some(self.relabel.emit_owned(canonical))
    }

    fn mms_hint(&self) -> Option<Vec<Scalar>> {
        if self.script.done {
            Some(vec![Scalar::one(), Scalar::one()])
        } else {
            None
        }
    }
}

// ---------------------------------------------------------------------------
// Unnormalized goods, n = 2.

enum UnnormGoodsStage {
    Start,
    SentE1,
    SentE2,
}

/// Appendix construction: without normalization a single asymmetric item
/// (r vs 1/r) lets the adversary cap some agent at a 1/r fraction of MMS.
pub struct UnnormGoods {
    r: Scalar,
    relabel: Relabel,
    script: Script,
    stage: UnnormGoodsStage,
    hint: Option<Vec<Scalar>>,
}

impl UnnormGoods {
    pub fn new(r: u64) -> Result<Self> {
        if r < 2 {
            return Err(Error::InvalidConfig(format!("r must be >= 2, got {r}")));
        }
        Ok(UnnormGoods {
            r: Scalar::from_int(r as i64),
            relabel: Relabel::identity(2),
            script: Script::new(2),
            stage: UnnormGoodsStage::Start,
            hint: None,
        })
    }
}

impl AdaptiveAdversary for UnnormGoods {
    fn n(&self) -> usize {
        2
    }

    fn kind(&self) -> Kind {
        Kind::Goods
    }

    fn next_item(&mut self, last: Option<usize>) -> Option<Vec<Scalar>> {
        if self.script.in_tail() {
            return self.script.pop().map(|c| self.relabel.emit_owned(c));
        }
        let canonical = match self.stage {
            UnnormGoodsStage::Start => {
                self.stage = UnnormGoodsStage::SentE1;
                self.script.emit(vec![Scalar::one(), Scalar::one()])
            }
            UnnormGoodsStage::SentE1 => {
                self.relabel.assign(0, last.unwrap());
                self.stage = UnnormGoodsStage::SentE2;
                self.script
                    .emit(vec![self.r.clone(), Scalar::one() / &self.r])
            }
            UnnormGoodsStage::SentE2 => {
                if self.relabel.canon_of(last.unwrap()) == 0 {
                    // Agent 2 holds nothing with no items left: 0-MMS.
                    self.hint =
                        Some(self.relabel.emit(&[Scalar::one(), Scalar::one() / &self.r]));
                    self.script.done = true;
                    return None;
                }
                self.hint = Some(self.relabel.emit(&[self.r.clone(), Scalar::one()]));
                self.script.tail.push_back(Step::Fixed(vec![
                    self.r.clone(),
                    Scalar::one(),
                ]));
                return self.script.pop().map(|c| self.relabel.emit_owned(c));
            }
        };
        Some(self.relabel.emit_owned(canonical))
    }

    fn mms_hint(&self) -> Option<Vec<Scalar>> {
        self.hint.clone()
    }
}

// ---------------------------------------------------------------------------
// Unnormalized chores.

/// Appendix construction: exponentially growing costs for item-less agents
/// force some agent to roughly double her MMS. Exact for n = 2; for n >= 3
/// the stream generalizes the same budget argument (the cited result is a
/// sketch, and this generalization follows it).
pub struct UnnormChores {
    n: usize,
    eps: Scalar,
    /// Chain length ceil(1/eps) of the two-agent table.
    l: usize,
    /// Current cost of the next item to every still-empty agent.
    growth: Scalar,
    /// First-item cost per agent, set when the agent first receives.
    first_cost: Vec<Option<Scalar>>,
    /// Agents in the order their first item arrived.
    fill_order: Vec<usize>,
    emitted: usize,
    /// Columns actually emitted, in real-agent order (costs depend on the
    /// running state, so there is no canonical script to replay).
    pending: Option<Vec<Scalar>>,
    bundles: Vec<Scalar>,
    closing: bool,
    done: bool,
    hint: Option<Vec<Scalar>>,
}

impl UnnormChores {
    pub fn new(n: usize, eps: Scalar) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidConfig(format!("n must be >= 2, got {n}")));
        }
        if eps <= Scalar::zero() || eps > Scalar::ratio(1, 2) {
            return Err(Error::InvalidConfig(format!(
                "eps must be in (0, 1/2], got {eps}"
            )));
        }
        // l = ceil(1/eps), exact on rationals.
        let inv = Scalar::one() / &eps;
        let mut l = inv.numer().clone() / inv.denom();
        if &l * inv.denom() < inv.numer().clone() {
            l += 1;
        }
        let l: usize = l.to_string().parse().map_err(|_| {
            Error::InvalidConfig(format!("eps = {eps} gives an unusable chain length"))
        })?;
        Ok(UnnormChores {
            n,
            eps,
            l,
            growth: Scalar::one(),
            first_cost: vec![None; n],
            fill_order: Vec::new(),
            emitted: 0,
            pending: None,
            bundles: vec![Scalar::zero(); n],
            closing: false,
            done: false,
            hint: None,
        })
    }

    /// Item budget from the sketch: n−1 agents can absorb at most
    /// ceil(1/eps)−1 items each before some ratio is already forced.
    fn budget(&self) -> usize {
        (self.n - 1) * (self.l - 1) + 1
    }

    fn column(&self) -> Vec<Scalar> {
        (0..self.n)
            .map(|i| match &self.first_cost[i] {
                Some(m) => &self.eps * m,
                None => self.growth.clone(),
            })
            .collect()
    }
}

impl AdaptiveAdversary for UnnormChores {
    fn n(&self) -> usize {
        self.n
    }

    fn kind(&self) -> Kind {
        Kind::Chores
    }

    fn next_item(&mut self, last: Option<usize>) -> Option<Vec<Scalar>> {
        if self.done {
            return None;
        }
        if let Some(real) = last {
            let column = self.pending.take().expect("decision without an item");
            if self.first_cost[real].is_none() {
                self.first_cost[real] = Some(column[real].clone());
                self.fill_order.push(real);
            }
            self.bundles[real] += &column[real];
            if self.closing {
                self.done = true;
                return None;
            }
        }
        if self.first_cost.iter().all(|m| m.is_some()) {
            // Everyone holds something: the closer costs each agent what
            // she already carries, so the receiver roughly doubles.
            self.closing = true;
            if self.n == 2 {
                // Exact two-agent table: the last agent filled got e_p,
                // the other absorbed e_1 plus every eps-item before it.
                let second = *self.fill_order.last().unwrap();
                let first = 1 - second;
                let mut closer = vec![Scalar::zero(); 2];
                closer[first] = &self.bundles[first] + &self.eps;
                closer[second] = self.bundles[second].clone();
                let mut hint = vec![Scalar::zero(); 2];
                hint[first] = &self.bundles[first] + &self.eps;
                hint[second] = &self.bundles[second] + &self.bundles[second] * &self.eps;
                self.hint = Some(hint);
                self.pending = Some(closer.clone());
                self.emitted += 1;
                return Some(closer);
            }
            let closer = self.bundles.clone();
            self.pending = Some(closer.clone());
            self.emitted += 1;
            return Some(closer);
        }
        if self.emitted >= self.budget() {
            // Some agent already carries (2−eps) times her first item; the
            // stream simply ends and certification settles the ratio.
            self.done = true;
            return None;
        }
        if self.emitted > 0 {
            self.growth = &self.growth / &self.eps;
        }
        let column = self.column();
        self.emitted += 1;
        self.pending = Some(column.clone());
        Some(column)
    }

    fn mms_hint(&self) -> Option<Vec<Scalar>> {
        if self.done {
            self.hint.clone()
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chores::{GreedyChores, Sqrt2Chores};
    use crate::oracle::DEFAULT_CAP;
    use crate::goods::{GreedyGoods, TwoAgentGoods};
    use crate::online::OnlineAllocator;

    fn r(p: i64, q: i64) -> Scalar {
        Scalar::ratio(p, q)
    }

    /// Always assigns to a fixed agent.
    struct Constant {
        n: usize,
        kind: Kind,
        agent: usize,
    }

    impl OnlineAllocator for Constant {
        fn n(&self) -> usize {
            self.n
        }
        fn kind(&self) -> Kind {
            self.kind
        }
        fn decide(&mut self, _item: &[Scalar]) -> Result<usize> {
            Ok(self.agent)
        }
    }

    /// Round-robin by arrival index.
    struct RoundRobin {
        n: usize,
        kind: Kind,
        next: usize,
    }

    impl OnlineAllocator for RoundRobin {
        fn n(&self) -> usize {
            self.n
        }
        fn kind(&self) -> Kind {
            self.kind
        }
        fn decide(&mut self, _item: &[Scalar]) -> Result<usize> {
            let a = self.next;
            self.next = (self.next + 1) % self.n;
            Ok(a)
        }
    }

    #[test]
    fn goods3_rejects_bad_config() {
        assert!(Goods3::new(1, r(1, 10000)).is_err());
        assert!(Goods3::new(8, r(1, 2)).is_err());
        assert!(Goods3::new(8, r(1, 10000)).is_ok());
    }

    #[test]
    fn goods3_vs_greedy_forces_below_one_over_r() {
        let mut adversary = Goods3::new(8, r(1, 10000)).unwrap();
        let mut greedy = GreedyGoods::new(3);
        let outcome = run_adversary(&mut greedy, &mut adversary, DEFAULT_CAP).unwrap();
        assert!(outcome.instance.m() <= 6);
        assert!(outcome.instance.is_normalized());
        assert!(outcome.worst < r(1, 8), "worst = {}", outcome.worst);
    }

    #[test]
    fn goods3_vs_constant_hits_zero_branch() {
        let mut adversary = Goods3::new(8, r(1, 10000)).unwrap();
        let mut hog = Constant {
            n: 3,
            kind: Kind::Goods,
            agent: 0,
        };
        let outcome = run_adversary(&mut hog, &mut adversary, DEFAULT_CAP).unwrap();
        assert_eq!(outcome.instance.m(), 3);
        assert_eq!(outcome.worst, Scalar::zero());
    }

    #[test]
    fn goods3_rows_are_normalized_in_every_branch() {
        // Sweep a family of simple allocators to touch several branches.
        for agent in 0..3 {
            let mut adversary = Goods3::new(8, r(1, 10000)).unwrap();
            let mut alloc = Constant {
                n: 3,
                kind: Kind::Goods,
                agent,
            };
            let (instance, _) = play_match(&mut alloc, &mut adversary).unwrap();
            assert!(instance.is_normalized(), "constant-{agent}");
        }
        let mut adversary = Goods3::new(8, r(1, 10000)).unwrap();
        let mut alloc = RoundRobin {
            n: 3,
            kind: Kind::Goods,
            next: 0,
        };
        let (instance, _) = play_match(&mut alloc, &mut adversary).unwrap();
        assert!(instance.is_normalized());
    }

    #[test]
    fn goods_n_vs_greedy() {
        let mut adversary = GoodsN::new(4, 8, r(1, 10000)).unwrap();
        let mut greedy = GreedyGoods::new(4);
        let outcome = run_adversary(&mut greedy, &mut adversary, DEFAULT_CAP).unwrap();
        assert!(outcome.instance.is_normalized());
        assert!(outcome.worst < r(1, 8), "worst = {}", outcome.worst);
    }

    #[test]
    fn goods_n_vs_round_robin_punished() {
        // Round-robin spreads the opening items, takes e_n on the wrong
        // agent eventually; whatever the branch, the ratio collapses.
        let mut adversary = GoodsN::new(4, 8, r(1, 10000)).unwrap();
        let mut rr = RoundRobin {
            n: 4,
            kind: Kind::Goods,
            next: 0,
        };
        let outcome = run_adversary(&mut rr, &mut adversary, DEFAULT_CAP).unwrap();
        assert!(outcome.worst < r(1, 8), "worst = {}", outcome.worst);
    }

    #[test]
    fn goods_n_vs_hog_two_items_on_one_agent() {
        let mut adversary = GoodsN::new(5, 8, r(1, 100000)).unwrap();
        let mut hog = Constant {
            n: 5,
            kind: Kind::Goods,
            agent: 2,
        };
        let outcome = run_adversary(&mut hog, &mut adversary, DEFAULT_CAP).unwrap();
        // Opening pattern (n−1 items) plus the single closer.
        assert_eq!(outcome.instance.m(), 5);
        assert_eq!(outcome.worst, Scalar::zero());
        assert!(outcome.instance.is_normalized());
    }

    #[test]
    fn goods2_config_validation() {
        assert!(Goods2::new(r(1, 10), 2).is_err());
        assert!(Goods2::new(r(1, 10), 200).is_ok());
    }

    #[test]
    fn goods2_chain_identities() {
        let adversary = Goods2::new(r(1, 10), 200).unwrap();
        let one_d = Scalar::one() + r(1, 10);
        for i in [3usize, 10, 50, 200] {
            let mut sum1 = adversary.eps.clone();
            let mut sum2 = adversary.eps.clone();
            for j in 2..i {
                let item = adversary.chain_item(j);
                sum1 += &item[0];
                sum2 += &item[1];
            }
            let item = adversary.chain_item(i);
            assert_eq!(sum1, &one_d * &item[0], "i = {i}");
            if i <= adversary.l {
                assert_eq!(sum2, &item[1] / &one_d, "i = {i}");
            }
        }
    }

    #[test]
    fn goods2_vs_greedy_closes_early() {
        let mut adversary = Goods2::new(r(1, 10), 200).unwrap();
        let mut greedy = GreedyGoods::new(2);
        let outcome = run_adversary(&mut greedy, &mut adversary, DEFAULT_CAP).unwrap();
        assert!(outcome.worst < r(3, 5), "worst = {}", outcome.worst);
        assert!(outcome.instance.is_normalized());
    }

    #[test]
    fn goods2_vs_alg1_between_half_and_bound() {
        let mut adversary = Goods2::new(r(1, 10), 200).unwrap();
        let mut alg1 = TwoAgentGoods::new(2).unwrap();
        let outcome = run_adversary(&mut alg1, &mut adversary, DEFAULT_CAP).unwrap();
        assert!(outcome.worst >= r(1, 2), "worst = {}", outcome.worst);
        assert!(outcome.worst < r(3, 5), "worst = {}", outcome.worst);
    }

    #[test]
    fn goods2_full_chain_against_stubborn_agent_one() {
        let mut adversary = Goods2::new(r(1, 10), 200).unwrap();
        let mut hog = Constant {
            n: 2,
            kind: Kind::Goods,
            agent: 0,
        };
        let outcome = run_adversary(&mut hog, &mut adversary, DEFAULT_CAP).unwrap();
        // Agent 2 never receives anything but the closer is forced on the
        // hog too: she ends with less than 0.1 of her MMS of 1... the hog
        // keeps everything, so agent 2 ends at 0 with MMS 1.
        assert_eq!(outcome.mms[1], Scalar::one());
        assert!(outcome.worst < r(3, 5), "worst = {}", outcome.worst);
        assert!(outcome.instance.is_normalized());
    }

    #[test]
    fn chores2_vs_sqrt2_forces_at_least_15_over_11() {
        let mut adversary = Chores2::new();
        let mut alg5 = Sqrt2Chores::new(2).unwrap();
        let outcome = run_adversary(&mut alg5, &mut adversary, DEFAULT_CAP).unwrap();
        assert!(outcome.worst >= r(15, 11), "worst = {}", outcome.worst);
        // Algorithm 5's own guarantee caps the damage at sqrt(2).
        let w = outcome.worst.to_f64();
        assert!(w <= std::f64::consts::SQRT_2 + 1e-12, "worst = {w}");
    }

    #[test]
    fn chores2_vs_greedy() {
        let mut adversary = Chores2::new();
        let mut greedy = GreedyChores::new(2);
        let outcome = run_adversary(&mut greedy, &mut adversary, DEFAULT_CAP).unwrap();
        assert!(outcome.worst >= r(15, 11), "worst = {}", outcome.worst);
    }

    #[test]
    fn chores2_hint_matches_oracle() {
        for agent in 0..2 {
            let mut adversary = Chores2::new();
            let mut alloc = Constant {
                n: 2,
                kind: Kind::Chores,
                agent,
            };
            let (instance, _) = play_match(&mut alloc, &mut adversary).unwrap();
            let hint = adversary.mms_hint().unwrap();
            let oracle = mms_all(&instance, DEFAULT_CAP).unwrap().mms;
            assert_eq!(hint, oracle, "constant-{agent}");
        }
    }

    #[test]
    fn unnorm_goods_exhausts_both_endings() {
        for agent in 0..2 {
            let mut adversary = UnnormGoods::new(10).unwrap();
            let mut alloc = Constant {
                n: 2,
                kind: Kind::Goods,
                agent,
            };
            let outcome = run_adversary(&mut alloc, &mut adversary, DEFAULT_CAP).unwrap();
            assert!(outcome.worst <= r(1, 10), "worst = {}", outcome.worst);
            let oracle = mms_all(&outcome.instance, DEFAULT_CAP).unwrap().mms;
            assert_eq!(outcome.mms, oracle);
        }
        let mut adversary = UnnormGoods::new(10).unwrap();
        let mut greedy = GreedyGoods::new(2);
        let outcome = run_adversary(&mut greedy, &mut adversary, DEFAULT_CAP).unwrap();
        assert!(outcome.worst <= r(1, 10), "worst = {}", outcome.worst);
    }

    #[test]
    fn unnorm_chores_vs_greedy() {
        let mut adversary = UnnormChores::new(2, r(1, 10)).unwrap();
        let mut greedy = GreedyChores::new(2);
        let outcome = run_adversary(&mut greedy, &mut adversary, DEFAULT_CAP).unwrap();
        assert!(outcome.worst > r(9, 5), "worst = {}", outcome.worst);
    }

    #[test]
    fn unnorm_chores_hint_matches_oracle_on_early_close() {
        // Round-robin gives agent 2 the second item: early close at p = 2.
        let mut adversary = UnnormChores::new(2, r(1, 10)).unwrap();
        let mut rr = RoundRobin {
            n: 2,
            kind: Kind::Chores,
            next: 0,
        };
        let (instance, _) = play_match(&mut rr, &mut adversary).unwrap();
        if let Some(hint) = adversary.mms_hint() {
            let oracle = mms_all(&instance, DEFAULT_CAP).unwrap().mms;
            assert_eq!(hint, oracle);
        }
    }

    #[test]
    fn unnorm_chores_hog_branch_terminates() {
        let mut adversary = UnnormChores::new(2, r(1, 10)).unwrap();
        let mut hog = Constant {
            n: 2,
            kind: Kind::Chores,
            agent: 0,
        };
        let outcome = run_adversary(&mut hog, &mut adversary, DEFAULT_CAP).unwrap();
        // All items pile on agent 1: cost >= 2 − eps times her MMS.
        assert!(outcome.worst >= r(9, 5), "worst = {}", outcome.worst);
    }

    #[test]
    fn unnorm_chores_three_agents_sketch() {
        let mut adversary = UnnormChores::new(3, r(1, 4)).unwrap();
        let mut greedy = GreedyChores::new(3);
        let outcome = run_adversary(&mut greedy, &mut adversary, DEFAULT_CAP).unwrap();
        assert!(outcome.worst > r(3, 2), "worst = {}", outcome.worst);
    }
}
