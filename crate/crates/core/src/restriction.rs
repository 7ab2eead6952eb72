//! Partial assignments with per-block state, and the two-stage random
//! restriction process.
//!
//! Under normal polarity the first stage sets each variable to 1 with
//! probability `1 - 1/M` and leaves it starred otherwise. The second stage
//! looks at every block that is not entirely 1: with probability `1 - 1/M`
//! it becomes a 0-block (its stars turn into 0), otherwise a *-block (its
//! stars stay free). Flipped polarity swaps the roles of 0 and 1.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use schemars::JsonSchema;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::formula::{Assignment, BlockId, VarId, VarSpace};
use crate::rng::{bernoulli, SeedStream, BLOCK_LANE, VAR_LANE};
use crate::scalar::Probability;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RestrictionError {
    #[error("malformed restriction: {0}")]
    Malformed(String),
    #[error("group {group} has {found} star-blocks, {target} required")]
    InsufficientStarBlocks { group: BlockId, found: usize, target: usize },
    #[error("restrictions overlap on {0:?}")]
    Overlap(Vec<VarId>),
    #[error("event is not total: {0}")]
    NonTotal(String),
    #[error("block {0} has a state inconsistent with its variables")]
    InconsistentBlock(BlockId),
    #[error("enumeration has {outcomes} outcomes, budget is {budget}")]
    BudgetExceeded { outcomes: BigUint, budget: u64 },
    #[error("invalid star rate {num}/{den}")]
    InvalidRate { num: u64, den: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VarState {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
    #[serde(rename = "*")]
    Star,
}

impl VarState {
    pub fn bit(self) -> Option<bool> {
        match self {
            VarState::Zero => Some(false),
            VarState::One => Some(true),
            VarState::Star => None,
        }
    }

    pub fn from_bit(b: bool) -> Self {
        if b {
            VarState::One
        } else {
            VarState::Zero
        }
    }

    fn complemented(self) -> Self {
        match self {
            VarState::Zero => VarState::One,
            VarState::One => VarState::Zero,
            VarState::Star => VarState::Star,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum BlockState {
    AllOnes,
    ZeroBlock,
    AllZeros,
    OneBlock,
    StarBlock,
    Undetermined,
}

impl BlockState {
    fn complemented(self) -> Self {
        match self {
            BlockState::AllOnes => BlockState::AllZeros,
            BlockState::AllZeros => BlockState::AllOnes,
            BlockState::ZeroBlock => BlockState::OneBlock,
            BlockState::OneBlock => BlockState::ZeroBlock,
            s => s,
        }
    }
}

/// Which constant the first stage hands out.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    #[default]
    Normal,
    Flipped,
}

impl Polarity {
    /// Value given to variables fixed by the first stage.
    pub fn fixed(self) -> bool {
        self == Polarity::Normal
    }

    /// Value given to the stars of a block the second stage fills in.
    pub fn fill(self) -> bool {
        !self.fixed()
    }

    pub fn all_fixed(self) -> BlockState {
        match self {
            Polarity::Normal => BlockState::AllOnes,
            Polarity::Flipped => BlockState::AllZeros,
        }
    }

    pub fn filled(self) -> BlockState {
        match self {
            Polarity::Normal => BlockState::ZeroBlock,
            Polarity::Flipped => BlockState::OneBlock,
        }
    }

    pub fn flipped(self) -> Polarity {
        match self {
            Polarity::Normal => Polarity::Flipped,
            Polarity::Flipped => Polarity::Normal,
        }
    }
}

/// Star probability per block scale.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "camelCase")]
pub enum StarRate {
    /// `1/M` for a block of scale `M`.
    #[default]
    PerScale,
    /// The same `num/den` everywhere.
    Uniform { num: u64, den: u64 },
}

impl StarRate {
    pub fn rate(&self, scale: u64) -> (u64, u64) {
        match *self {
            StarRate::PerScale => (1, scale),
            StarRate::Uniform { num, den } => (num, den),
        }
    }

    pub fn validate(&self) -> Result<(), RestrictionError> {
        match *self {
            StarRate::PerScale => Ok(()),
            StarRate::Uniform { num, den } if num > 0 && num < den => Ok(()),
            StarRate::Uniform { num, den } => Err(RestrictionError::InvalidRate { num, den }),
        }
    }
}

/// Partial 0/1/* assignment with block states and a provenance label.
///
/// Equality ignores the label.
#[derive(Clone)]
pub struct Restriction {
    vars: BTreeMap<VarId, VarState>,
    blocks: BTreeMap<BlockId, BlockState>,
    stage: String,
    polarity: Polarity,
}

/// An outcome of the two-stage process: a restriction that is total on a
/// finite space.
pub type RestrictionEvent = Restriction;

impl PartialEq for Restriction {
    fn eq(&self, other: &Self) -> bool {
        self.polarity == other.polarity && self.vars == other.vars && self.blocks == other.blocks
    }
}

impl Eq for Restriction {}

impl fmt::Debug for Restriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Restriction[{}; {:?}]{{", self.stage, self.polarity)?;
        for (v, s) in &self.vars {
            let c = match s {
                VarState::Zero => '0',
                VarState::One => '1',
                VarState::Star => '*',
            };
            write!(f, " {v}={c}")?;
        }
        write!(f, " }}")
    }
}

impl Restriction {
    pub fn new(polarity: Polarity, stage: impl Into<String>) -> Self {
        Restriction { vars: BTreeMap::new(), blocks: BTreeMap::new(), stage: stage.into(), polarity }
    }

    /// Plain partial assignment (no block states).
    pub fn from_values(
        polarity: Polarity,
        stage: impl Into<String>,
        values: impl IntoIterator<Item = (VarId, bool)>,
    ) -> Self {
        let mut r = Restriction::new(polarity, stage);
        r.vars.extend(values.into_iter().map(|(v, b)| (v, VarState::from_bit(b))));
        r
    }

    pub fn polarity(&self) -> Polarity {
        self.polarity
    }

    pub fn stage(&self) -> &str {
        &self.stage
    }

    pub fn set_stage(&mut self, stage: impl Into<String>) {
        self.stage = stage.into();
    }

    pub fn state(&self, var: &VarId) -> Option<VarState> {
        self.vars.get(var).copied()
    }

    pub fn block_state(&self, block: &BlockId) -> Option<BlockState> {
        self.blocks.get(block).copied()
    }

    pub fn set(&mut self, var: VarId, state: VarState) {
        self.vars.insert(var, state);
    }

    pub fn set_block(&mut self, block: BlockId, state: BlockState) {
        self.blocks.insert(block, state);
    }

    pub fn vars(&self) -> impl Iterator<Item = (&VarId, VarState)> + '_ {
        self.vars.iter().map(|(v, s)| (v, *s))
    }

    pub fn blocks(&self) -> impl Iterator<Item = (&BlockId, BlockState)> + '_ {
        self.blocks.iter().map(|(b, s)| (b, *s))
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty() && self.blocks.is_empty()
    }

    /// Variables of one block present in the restriction, in `y_last` order.
    pub fn block_members<'a>(&'a self, block: &BlockId) -> impl Iterator<Item = (&'a VarId, VarState)> + 'a {
        let (lo, hi) = block.member_range();
        self.vars.range(lo..=hi).map(|(v, s)| (v, *s))
    }

    pub fn stars(&self) -> impl Iterator<Item = &VarId> + '_ {
        self.vars.iter().filter(|(_, s)| **s == VarState::Star).map(|(v, _)| v)
    }

    /// Variables holding a 0/1 value.
    pub fn assigned(&self) -> impl Iterator<Item = (&VarId, bool)> + '_ {
        self.vars.iter().filter_map(|(v, s)| s.bit().map(|b| (v, b)))
    }

    /// 0↔1 on every constant and block state; polarity flips too.
    pub fn complemented(&self) -> Restriction {
        Restriction {
            vars: self.vars.iter().map(|(v, s)| (v.clone(), s.complemented())).collect(),
            blocks: self.blocks.iter().map(|(b, s)| (b.clone(), s.complemented())).collect(),
            stage: self.stage.clone(),
            polarity: self.polarity.flipped(),
        }
    }

    /// Recomputes the state of every block that has variables in the
    /// restriction, reading it off the variables as an outcome of the
    /// two-stage process would.
    pub fn derive_block_states(&mut self) {
        let mut derived: BTreeMap<BlockId, BlockState> = BTreeMap::new();
        for (v, s) in &self.vars {
            let entry = derived.entry(v.block()).or_insert(self.polarity.all_fixed());
            match s.bit() {
                None => *entry = BlockState::StarBlock,
                Some(b) if b == self.polarity.fill() && *entry != BlockState::StarBlock => {
                    *entry = self.polarity.filled()
                }
                _ => {}
            }
        }
        self.blocks.extend(derived);
    }

    /// First-stage invariants: constants other than the fixed value occur
    /// only in filled blocks, stars only in *-blocks, and every *-block has
    /// a star.
    pub fn check_first_stage(&self) -> Result<(), RestrictionError> {
        let fill = self.polarity.fill();
        let mut star_seen: BTreeSet<&BlockId> = BTreeSet::new();
        for (v, s) in &self.vars {
            let blk = v.block();
            let bs = self.blocks.get(&blk).copied();
            match s.bit() {
                None if bs != Some(BlockState::StarBlock) => {
                    return Err(RestrictionError::Malformed(format!("star {v} outside a *-block")))
                }
                Some(b) if b == fill && bs != Some(self.polarity.filled()) => {
                    return Err(RestrictionError::Malformed(format!("{v}={} outside a filled block", b as u8)))
                }
                _ => {}
            }
            if bs == Some(self.polarity.all_fixed()) && s.bit() != Some(self.polarity.fixed()) {
                return Err(RestrictionError::Malformed(format!("{blk} is all-fixed but {v} is not")));
            }
        }
        for (b, s) in &self.blocks {
            if *s == BlockState::StarBlock {
                if self.block_members(b).any(|(_, st)| st == VarState::Star) {
                    star_seen.insert(b);
                } else {
                    return Err(RestrictionError::Malformed(format!("*-block {b} has no star")));
                }
            }
            if matches!(s, BlockState::AllOnes | BlockState::ZeroBlock) && self.polarity == Polarity::Flipped
                || matches!(s, BlockState::AllZeros | BlockState::OneBlock) && self.polarity == Polarity::Normal
            {
                return Err(RestrictionError::Malformed(format!("{b} has a state of the other polarity")));
            }
        }
        Ok(())
    }
}

impl Assignment for Restriction {
    fn value(&self, var: &VarId) -> Option<bool> {
        self.vars.get(var).and_then(|s| s.bit())
    }
}

#[derive(Serialize, Deserialize)]
struct VarEntry {
    var: VarId,
    state: VarState,
}

#[derive(Serialize, Deserialize)]
struct BlockEntry {
    block: BlockId,
    state: BlockState,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RestrictionRepr {
    vars: Vec<VarEntry>,
    blocks: Vec<BlockEntry>,
    stage: String,
    #[serde(default)]
    polarity: Polarity,
}

impl Serialize for Restriction {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RestrictionRepr {
            vars: self.vars.iter().map(|(v, st)| VarEntry { var: v.clone(), state: *st }).collect(),
            blocks: self.blocks.iter().map(|(b, st)| BlockEntry { block: b.clone(), state: *st }).collect(),
            stage: self.stage.clone(),
            polarity: self.polarity,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Restriction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = RestrictionRepr::deserialize(d)?;
        Ok(Restriction {
            vars: r.vars.into_iter().map(|e| (e.var, e.state)).collect(),
            blocks: r.blocks.into_iter().map(|e| (e.block, e.state)).collect(),
            stage: r.stage,
            polarity: r.polarity,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayoutBlock {
    pub id: BlockId,
    pub vars: Vec<VarId>,
}

impl LayoutBlock {
    pub fn scale(&self) -> u64 {
        self.id.scale()
    }
}

/// Finite set of variables grouped into blocks, in canonical order. A
/// [`VarSpace`] gives a regular layout; later rounds of the oracle
/// construction work on sparse ones.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BlockLayout {
    blocks: Vec<LayoutBlock>,
}

impl BlockLayout {
    pub fn from_vars(vars: impl IntoIterator<Item = VarId>) -> Self {
        let sorted: BTreeSet<VarId> = vars.into_iter().collect();
        let mut blocks: Vec<LayoutBlock> = Vec::new();
        for v in sorted {
            let id = v.block();
            match blocks.last_mut() {
                Some(last) if last.id == id => last.vars.push(v),
                _ => blocks.push(LayoutBlock { id, vars: vec![v] }),
            }
        }
        BlockLayout { blocks }
    }

    pub fn blocks(&self) -> &[LayoutBlock] {
        &self.blocks
    }

    pub fn var_count(&self) -> usize {
        self.blocks.iter().map(|b| b.vars.len()).sum()
    }

    pub fn vars(&self) -> impl Iterator<Item = &VarId> + '_ {
        self.blocks.iter().flat_map(|b| b.vars.iter())
    }

    pub fn scales(&self) -> BTreeSet<u64> {
        self.blocks.iter().map(LayoutBlock::scale).collect()
    }

    pub fn contains(&self, v: &VarId) -> bool {
        let id = v.block();
        self.blocks
            .binary_search_by(|b| b.id.cmp(&id))
            .is_ok_and(|i| self.blocks[i].vars.binary_search(v).is_ok())
    }
}

impl From<&VarSpace> for BlockLayout {
    fn from(space: &VarSpace) -> Self {
        let blocks = space
            .blocks()
            .into_iter()
            .map(|id| {
                let n = space.block_size(id.scale());
                let vars = (0..n).map(|y| id.member(y)).collect();
                LayoutBlock { id, vars }
            })
            .collect();
        BlockLayout { blocks }
    }
}

/// One draw of the two-stage process over a whole space.
pub fn sample_rho(space: &VarSpace, seeds: &SeedStream, polarity: Polarity) -> Restriction {
    sample_layout(&BlockLayout::from(space), seeds, polarity, StarRate::PerScale)
}

/// Variable `i` of the layout (in canonical order) uses draw `i` of the
/// variable lane; block `j` uses draw `j` of the block lane.
pub fn sample_layout(layout: &BlockLayout, seeds: &SeedStream, polarity: Polarity, rate: StarRate) -> Restriction {
    let mut var_lane = seeds.lane(VAR_LANE);
    let mut block_lane = seeds.lane(BLOCK_LANE);
    let mut out = Restriction::new(polarity, "rho");
    let fixed = VarState::from_bit(polarity.fixed());
    let mut ordinal = 0u64;
    for (j, blk) in layout.blocks.iter().enumerate() {
        let (num, den) = rate.rate(blk.scale());
        let first = ordinal;
        let starred: Vec<bool> = blk
            .vars
            .iter()
            .map(|_| {
                let hit = bernoulli(var_lane.at(ordinal), num, den);
                ordinal += 1;
                hit
            })
            .collect();
        debug_assert_eq!(ordinal - first, blk.vars.len() as u64);
        let state = if !starred.contains(&true) {
            polarity.all_fixed()
        } else if bernoulli(block_lane.at(j as u64), num, den) {
            BlockState::StarBlock
        } else {
            polarity.filled()
        };
        let star_state = match state {
            BlockState::StarBlock => VarState::Star,
            _ => VarState::from_bit(polarity.fill()),
        };
        for (v, s) in blk.vars.iter().zip(starred) {
            out.vars.insert(v.clone(), if s { star_state } else { fixed });
        }
        out.blocks.insert(blk.id.clone(), state);
    }
    out
}

/// `g(ρ)`: in every *-block keep only the star with the smallest last
/// coordinate and give the others the first-stage constant.
pub fn extend_g(r: &Restriction) -> Result<Restriction, RestrictionError> {
    r.check_first_stage()?;
    let mut out = r.clone();
    let fixed = VarState::from_bit(r.polarity.fixed());
    for (blk, s) in &r.blocks {
        if *s != BlockState::StarBlock {
            continue;
        }
        let stars: Vec<&VarId> =
            r.block_members(blk).filter(|(_, st)| *st == VarState::Star).map(|(v, _)| v).collect();
        for v in stars.into_iter().skip(1) {
            out.vars.insert(v.clone(), fixed);
        }
    }
    out.stage = format!("g({})", r.stage);
    Ok(out)
}

/// The surviving star of a *-block after [`extend_g`].
pub fn representative(r: &Restriction, block: &BlockId) -> Option<VarId> {
    r.block_members(block).find(|(_, s)| *s == VarState::Star).map(|(v, _)| v.clone())
}

/// `h(ρ)`: in every group of blocks whose base word has length at least
/// `min_word_len`, keep exactly `target` *-blocks (those listed first) and
/// fill the rest with the second-stage constant.
pub fn extend_h(r: &Restriction, target: usize, min_word_len: u32) -> Result<Restriction, RestrictionError> {
    let mut groups: BTreeMap<BlockId, Vec<&BlockId>> = BTreeMap::new();
    for (blk, s) in &r.blocks {
        if blk.b.len() < min_word_len {
            continue;
        }
        let entry = groups.entry(blk.group()).or_default();
        if *s == BlockState::StarBlock {
            entry.push(blk);
        }
    }
    let mut out = r.clone();
    let fill = VarState::from_bit(r.polarity.fill());
    for (group, stars) in &groups {
        if stars.len() < target {
            return Err(RestrictionError::InsufficientStarBlocks {
                group: group.clone(),
                found: stars.len(),
                target,
            });
        }
        for blk in &stars[target..] {
            for (v, s) in r.block_members(blk) {
                if s == VarState::Star {
                    out.vars.insert(v.clone(), fill);
                }
            }
            out.blocks.insert((*blk).clone(), r.polarity.filled());
        }
    }
    out.stage = format!("h({})", r.stage);
    Ok(out)
}

/// Union of two restrictions. A star in `r1` may be given a value by `r2`;
/// two values on one variable are a clash. Block states from `r2` only
/// replace missing or undetermined ones.
pub fn compose(r1: &Restriction, r2: &Restriction) -> Result<Restriction, RestrictionError> {
    let clashes: Vec<VarId> = r2
        .assigned()
        .filter(|(v, _)| r1.value(v).is_some())
        .map(|(v, _)| v.clone())
        .collect();
    if !clashes.is_empty() {
        return Err(RestrictionError::Overlap(clashes));
    }
    let mut out = r1.clone();
    for (v, s) in &r2.vars {
        if s.bit().is_some() || !out.vars.contains_key(v) {
            out.vars.insert(v.clone(), *s);
        }
    }
    for (b, s) in &r2.blocks {
        match out.blocks.get(b) {
            None | Some(BlockState::Undetermined) => {
                out.blocks.insert(b.clone(), *s);
            }
            Some(_) => {}
        }
    }
    out.stage = format!("{}·{}", r1.stage, r2.stage);
    Ok(out)
}

/// Probability of a total event under the default `1/M` process.
pub fn exact_probability<P: Probability>(space: &VarSpace, e: &RestrictionEvent) -> Result<P, RestrictionError> {
    exact_probability_with(&BlockLayout::from(space), e, StarRate::PerScale)
}

pub fn exact_probability_with<P: Probability>(
    layout: &BlockLayout,
    e: &RestrictionEvent,
    rate: StarRate,
) -> Result<P, RestrictionError> {
    let fill = e.polarity.fill();
    let mut prob = P::one();
    for blk in &layout.blocks {
        let (num, den) = rate.rate(blk.scale());
        let p = P::from_ratio(num, den);
        let q = P::from_ratio(den - num, den);
        let (mut fixed, mut stars, mut filled) = (0u64, 0u64, 0u64);
        for v in &blk.vars {
            match e.state(v).ok_or_else(|| RestrictionError::NonTotal(format!("variable {v} unassigned")))? {
                VarState::Star => stars += 1,
                s if s.bit() == Some(fill) => filled += 1,
                _ => fixed += 1,
            }
        }
        let bs = e
            .block_state(&blk.id)
            .ok_or_else(|| RestrictionError::NonTotal(format!("block {} has no state", blk.id)))?;
        let block_factor = match (stars, filled, bs) {
            (0, 0, s) if s == e.polarity.all_fixed() => P::one(),
            (s, 0, BlockState::StarBlock) if s > 0 => p.clone(),
            (0, f, s) if f > 0 && s == e.polarity.filled() => q.clone(),
            (_, _, BlockState::Undetermined) => {
                return Err(RestrictionError::NonTotal(format!("block {} undetermined", blk.id)))
            }
            _ => return Err(RestrictionError::InconsistentBlock(blk.id.clone())),
        };
        prob = prob * q.pow(fixed) * p.pow(stars + filled) * block_factor;
    }
    Ok(prob)
}

/// Number of positive-probability outcomes on a layout:
/// `Π (2^{n+1} - 1)` over blocks of `n` variables.
pub fn outcome_count(layout: &BlockLayout) -> BigUint {
    layout
        .blocks
        .iter()
        .map(|b| (BigUint::one() << (b.vars.len() + 1)) - BigUint::one())
        .product()
}

struct BlockOutcome<P> {
    states: Vec<VarState>,
    block: BlockState,
    prob: P,
}

/// Stream over every outcome of the two-stage process with its exact
/// probability. Blocks vary like digits of a counter, the last block
/// fastest.
pub struct Enumeration<P> {
    layout: BlockLayout,
    polarity: Polarity,
    outcomes: Vec<Vec<BlockOutcome<P>>>,
    counter: Vec<usize>,
    total: u64,
    done: bool,
}

impl<P> Enumeration<P> {
    pub fn total(&self) -> u64 {
        self.total
    }
}

pub fn enumerate_restrictions<P: Probability>(
    layout: &BlockLayout,
    polarity: Polarity,
    rate: StarRate,
    budget: u64,
) -> Result<Enumeration<P>, RestrictionError> {
    let count = outcome_count(layout);
    let total = match count.to_u64() {
        Some(n) if n <= budget => n,
        _ => return Err(RestrictionError::BudgetExceeded { outcomes: count, budget }),
    };
    let fixed = VarState::from_bit(polarity.fixed());
    let fill = VarState::from_bit(polarity.fill());
    let outcomes = layout
        .blocks
        .iter()
        .map(|blk| {
            let n = blk.vars.len();
            let (num, den) = rate.rate(blk.scale());
            let p = P::from_ratio(num, den);
            let q = P::from_ratio(den - num, den);
            let mut list = Vec::with_capacity((2 << n) - 1);
            for mask in 0u64..1 << n {
                let k = mask.count_ones() as u64;
                let base = q.pow(n as u64 - k) * p.pow(k);
                let states_with = |star: VarState| -> Vec<VarState> {
                    (0..n).map(|i| if mask >> i & 1 == 1 { star } else { fixed }).collect()
                };
                if mask == 0 {
                    list.push(BlockOutcome { states: states_with(fixed), block: polarity.all_fixed(), prob: base });
                } else {
                    list.push(BlockOutcome {
                        states: states_with(fill),
                        block: polarity.filled(),
                        prob: base.clone() * q.clone(),
                    });
                    list.push(BlockOutcome {
                        states: states_with(VarState::Star),
                        block: BlockState::StarBlock,
                        prob: base * p.clone(),
                    });
                }
            }
            list
        })
        .collect();
    Ok(Enumeration {
        counter: vec![0; layout.blocks.len()],
        layout: layout.clone(),
        polarity,
        outcomes,
        total,
        done: false,
    })
}

impl<P: Probability> Iterator for Enumeration<P> {
    type Item = (RestrictionEvent, P);

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut r = Restriction::new(self.polarity, "rho");
        let mut prob = P::one();
        for ((blk, list), &c) in self.layout.blocks.iter().zip(&self.outcomes).zip(&self.counter) {
            let o = &list[c];
            for (v, s) in blk.vars.iter().zip(&o.states) {
                r.vars.insert(v.clone(), *s);
            }
            r.blocks.insert(blk.id.clone(), o.block);
            prob = prob * o.prob.clone();
        }
        // advance the counter
        let mut i = self.counter.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            self.counter[i] += 1;
            if self.counter[i] < self.outcomes[i].len() {
                break;
            }
            self.counter[i] = 0;
        }
        Some((r, prob))
    }
}
