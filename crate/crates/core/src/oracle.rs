//! Finite-stage oracle construction for two alternations.
//!
//! Round one draws ρ over the quadruples `⟨b,y1,y2,y3⟩` until every block
//! at a large enough scale has a variable other than 1, every `(b,y1)`
//! group has enough *-blocks and every disjunct of the family has a short
//! canonical tree under `g(ρ)`. The trees are flattened into one DNF per
//! input `a` and `h(ρ)` trims the *-blocks. Every surviving *-block then
//! collapses to its representative, addressed by the triple `⟨b,y1,y2⟩`.
//!
//! Round two repeats the draw with 0 and 1 swapped over the triples.
//! After it, `∀y1 ∃y2 ∀y3 α(a,y1,y2,y3)` is the conjunction of the
//! designated variables of `a`, and the completion sets those to agree
//! with the DNF of `a`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{
    enumerate_vars, eval_dnf, Assignment, BlockId, Conjunction, Dnf, Form, FormulaError, Literal, VarId, VarSpace,
    Word,
};
use crate::restriction::{
    extend_g, extend_h, sample_layout, BlockLayout, BlockState, Polarity, Restriction, RestrictionError, StarRate,
    VarState,
};
use crate::rng::SeedStream;
use crate::tree::{canonical_height_at_most, canonical_tree, CanonicalTreeParams, DecisionTree};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("invalid oracle config: {0}")]
    Config(String),
    #[error("round {round}: no good restriction in {tries} tries; most frequent failure: {worst}")]
    TriesExhausted { round: u32, tries: u64, counts: FailureCounts, worst: String },
    #[error("input {a}: every designated variable is already set")]
    Exhaustion { a: Word },
    #[error("internal: {0}")]
    Internal(String),
    #[error(transparent)]
    Restriction(#[from] RestrictionError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "camelCase")]
pub enum FamilySpec {
    /// CNF disjuncts listed per input word.
    Explicit(BTreeMap<Word, Vec<Dnf>>),
    /// `disjuncts` random CNFs per input, each of `clauses` clauses over
    /// `width` distinct variables.
    Seeded { disjuncts: usize, clauses: usize, width: usize, seed: u64 },
}

/// For every input `a`, the CNFs whose disjunction is `φ(a)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FormulaFamily {
    pub per_input: BTreeMap<Word, Vec<Dnf>>,
}

impl FormulaFamily {
    pub fn from_spec(spec: &FamilySpec, space: &VarSpace) -> Result<Self, OracleError> {
        let per_input = match spec {
            FamilySpec::Explicit(m) => {
                for (a, cnfs) in m {
                    if !space.contains_word(a) {
                        return Err(OracleError::Config(format!("input {a} is not a word of the space")));
                    }
                    for c in cnfs {
                        if !c.is_cnf() {
                            return Err(OracleError::Config(format!("disjunct of {a} is not a CNF")));
                        }
                        if let Some(v) = c.vars().into_iter().find(|v| !space.contains(v)) {
                            return Err(OracleError::Config(format!("variable {v} is outside the space")));
                        }
                    }
                }
                m.clone()
            }
            FamilySpec::Seeded { disjuncts, clauses, width, seed } => {
                let vars = enumerate_vars(space);
                if *width > vars.len() {
                    return Err(OracleError::Config("clause width exceeds the variable count".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut m = BTreeMap::new();
                for a in space.words() {
                    let cnfs = (0..*disjuncts)
                        .map(|_| {
                            let cl = (0..*clauses)
                                .map(|_| {
                                    let mut idx = sample(&mut rng, vars.len(), *width).into_vec();
                                    idx.sort_unstable();
                                    let lits: Vec<Literal> = idx
                                        .into_iter()
                                        .map(|i| {
                                            if rng.gen::<bool>() {
                                                Literal::pos(vars[i].clone())
                                            } else {
                                                Literal::neg(vars[i].clone())
                                            }
                                        })
                                        .collect();
                                    Conjunction::new(lits)
                                })
                                .collect::<Result<Vec<_>, _>>()?;
                            Dnf::new(cl, *width, Form::Cnf)
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    m.insert(a, cnfs);
                }
                m
            }
        };
        Ok(FormulaFamily { per_input })
    }

    pub fn disjuncts(&self, a: &Word) -> &[Dnf] {
        self.per_input.get(a).map_or(&[], Vec::as_slice)
    }

    /// `φ(a)`: the OR of the CNFs of `a`.
    pub fn phi<A: Assignment + ?Sized>(&self, a: &Word, assignment: &A) -> Result<bool, FormulaError> {
        for c in self.disjuncts(a) {
            if eval_dnf(c, assignment)? {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

fn default_theta() -> u64 {
    2
}

fn default_rounds() -> u32 {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct OracleConfig {
    pub space: VarSpace,
    pub family: FamilySpec,
    /// Inputs below this word are left unconstrained.
    pub a_min: Word,
    /// Conditions apply only to base words of at least this length.
    pub b_min: u32,
    /// *-blocks kept per `(b,y1)` group after the first round.
    pub star_quota: usize,
    /// Designated variables per input after the second round.
    pub designated_size: usize,
    /// Height cap for the trees of the family's CNFs.
    pub first_height: usize,
    /// Height cap for the trees of the per-input DNFs.
    pub second_height: usize,
    #[serde(default = "default_theta")]
    pub small_block_threshold: u64,
    pub max_tries: u64,
    pub master_seed: u64,
    /// Alternating restriction rounds; the construction is implemented
    /// for two.
    #[serde(default = "default_rounds")]
    pub rounds: u32,
    #[serde(default)]
    pub star_rate: StarRate,
}

impl OracleConfig {
    pub fn validate(&self) -> Result<(), OracleError> {
        self.space.validate()?;
        self.star_rate.validate()?;
        if self.space.tuple_arity != 3 {
            return Err(OracleError::Config("the oracle space needs tupleArity 3".into()));
        }
        if self.rounds != 2 {
            return Err(OracleError::Config(format!("only 2 rounds are implemented, got {}", self.rounds)));
        }
        if self.max_tries == 0 {
            return Err(OracleError::Config("maxTries must be at least 1".into()));
        }
        if self.star_quota == 0 || self.designated_size == 0 {
            return Err(OracleError::Config("starQuota and designatedSize must be positive".into()));
        }
        if self.a_min.len() < self.b_min {
            return Err(OracleError::Config("aMin must be at least bMin long".into()));
        }
        CanonicalTreeParams::new(self.small_block_threshold, 0).validate().map_err(OracleError::Config)?;
        Ok(())
    }

    /// Inputs the construction is responsible for.
    pub fn inputs(&self) -> Vec<Word> {
        self.space.words().into_iter().filter(|a| *a >= self.a_min).collect()
    }
}

/// Polarity of round `i` (1-based): odd rounds hand out 1, even rounds 0.
pub fn round_polarity(i: u32) -> Polarity {
    if i % 2 == 1 {
        Polarity::Normal
    } else {
        Polarity::Flipped
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FailureCounts {
    pub fixed_block: u64,
    pub star_quota: u64,
    pub tree_height: u64,
}

impl FailureCounts {
    fn worst(&self) -> String {
        let c = [
            (self.fixed_block, "a block with every variable fixed"),
            (self.star_quota, "too few *-blocks in a group"),
            (self.tree_height, "a canonical tree above the height cap"),
        ];
        c.iter().max_by_key(|(n, _)| *n).map(|(_, s)| s.to_string()).unwrap_or_default()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Certification {
    pub round: u32,
    pub tries: u64,
    pub blocks_checked: usize,
    pub min_star_blocks: usize,
    pub max_tree_height: usize,
    pub failures: FailureCounts,
}

enum Verdict {
    Good { min_star_blocks: usize, blocks_checked: usize },
    FixedBlock,
    StarQuota,
}

fn structural_check(r: &Restriction, b_min: u32, quota: usize) -> Verdict {
    let all_fixed = r.polarity().all_fixed();
    let mut per_group: BTreeMap<BlockId, usize> = BTreeMap::new();
    let mut checked = 0;
    for (b, s) in r.blocks() {
        if b.b.len() < b_min {
            continue;
        }
        checked += 1;
        if s == all_fixed {
            return Verdict::FixedBlock;
        }
        *per_group.entry(b.group()).or_default() += (s == BlockState::StarBlock) as usize;
    }
    let min = per_group.values().copied().min().unwrap_or(usize::MAX);
    if min < quota {
        return Verdict::StarQuota;
    }
    Verdict::Good { min_star_blocks: min, blocks_checked: checked }
}

/// Rejection-samples round one. Try `i` draws from
/// `SeedStream::new(masterSeed, i).child(1)`.
pub fn sample_good_rho(
    fam: &FormulaFamily,
    cfg: &OracleConfig,
) -> Result<(Restriction, Certification), OracleError> {
    let layout = BlockLayout::from(&cfg.space);
    let inputs = cfg.inputs();
    let mut counts = FailureCounts::default();
    for t in 0..cfg.max_tries {
        let seeds = SeedStream::new(cfg.master_seed, t).child(1);
        let rho = sample_layout(&layout, &seeds, round_polarity(1), cfg.star_rate);
        let (min_star_blocks, blocks_checked) = match structural_check(&rho, cfg.b_min, cfg.star_quota) {
            Verdict::Good { min_star_blocks, blocks_checked } => (min_star_blocks, blocks_checked),
            Verdict::FixedBlock => {
                counts.fixed_block += 1;
                continue;
            }
            Verdict::StarQuota => {
                counts.star_quota += 1;
                continue;
            }
        };
        let tall = inputs.iter().flat_map(|a| fam.disjuncts(a)).any(|c| {
            !canonical_height_at_most(c, &rho, cfg.small_block_threshold, cfg.first_height)
        });
        if tall {
            counts.tree_height += 1;
            continue;
        }
        let max_tree_height = inputs
            .iter()
            .flat_map(|a| fam.disjuncts(a))
            .map(|c| canonical_tree(c, &rho, &CanonicalTreeParams::new(cfg.small_block_threshold, 0)).tree.height())
            .max()
            .unwrap_or(0);
        let cert = Certification {
            round: 1,
            tries: t + 1,
            blocks_checked,
            min_star_blocks,
            max_tree_height,
            failures: counts,
        };
        return Ok((rho, cert));
    }
    Err(OracleError::TriesExhausted { round: 1, tries: cfg.max_tries, worst: counts.worst(), counts })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FirstRound {
    pub rho: Restriction,
    pub g: Restriction,
    pub h: Restriction,
    /// Per input, the flattened trees simplified under `h(ρ)`.
    pub per_input: BTreeMap<Word, Dnf>,
}

/// Flattens each disjunct's tree into its 1-branches, joins them per input
/// and applies `h`.
pub fn first_round(fam: &FormulaFamily, cfg: &OracleConfig, rho: &Restriction) -> Result<FirstRound, OracleError> {
    let params = CanonicalTreeParams::new(cfg.small_block_threshold, 0);
    let g = extend_g(rho)?;
    let h = extend_h(&g, cfg.star_quota, cfg.b_min)?;
    let mut per_input = BTreeMap::new();
    for a in cfg.inputs() {
        let mut conj: Vec<Conjunction> = Vec::new();
        for c in fam.disjuncts(&a) {
            conj.extend(canonical_tree(c, rho, &params).tree.one_branches());
        }
        let width = conj.iter().map(Conjunction::len).max().unwrap_or(0).max(cfg.first_height);
        per_input.insert(a, Dnf::new(conj, width, Form::Dnf)?.restrict(&h));
    }
    Ok(FirstRound { rho: rho.clone(), g, h, per_input })
}

/// Triples `⟨b,y1,y2⟩` standing for the surviving representatives.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Collapse {
    pub layout: BlockLayout,
    pub to_original: BTreeMap<VarId, VarId>,
    pub from_original: BTreeMap<VarId, VarId>,
}

pub fn collapse(h: &Restriction) -> Collapse {
    let mut to_original = BTreeMap::new();
    let mut from_original = BTreeMap::new();
    for v in h.stars() {
        let triple = VarId::new(v.b, v.y[..v.y.len() - 1].iter().copied());
        to_original.insert(triple.clone(), v.clone());
        from_original.insert(v.clone(), triple);
    }
    Collapse { layout: BlockLayout::from_vars(to_original.keys().cloned()), to_original, from_original }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Designated {
    pub y1: u32,
    pub y2: u32,
    pub y3: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecondRound {
    pub rho_hat: Restriction,
    pub g_hat: Restriction,
    pub h_hat: Restriction,
    /// Per input, the tree of its collapsed DNF under `g(ρ̂)`.
    pub trees: BTreeMap<Word, DecisionTree>,
    pub designated: BTreeMap<Word, Vec<Designated>>,
    pub certification: Certification,
}

/// Round two over the triples, with 0 and 1 swapped. Try `i` draws from
/// `SeedStream::new(masterSeed, i).child(2)`.
pub fn second_round(first: &FirstRound, col: &Collapse, cfg: &OracleConfig) -> Result<SecondRound, OracleError> {
    let params = CanonicalTreeParams::new(cfg.small_block_threshold, 0);
    let mut per_input = BTreeMap::new();
    for (a, d) in &first.per_input {
        let mapped = d.map_vars(|v| {
            col.from_original.get(v).cloned().unwrap_or_else(|| VarId::new(v.b, v.y.iter().copied()))
        })?;
        if let Some(v) = mapped.vars().into_iter().find(|v| !col.to_original.contains_key(v)) {
            return Err(OracleError::Internal(format!("DNF of {a} still mentions {v} after h")));
        }
        per_input.insert(*a, mapped);
    }
    let mut counts = FailureCounts::default();
    for t in 0..cfg.max_tries {
        let seeds = SeedStream::new(cfg.master_seed, t).child(2);
        let rho_hat = sample_layout(&col.layout, &seeds, round_polarity(2), cfg.star_rate);
        let (min_star_blocks, blocks_checked) = match structural_check(&rho_hat, cfg.b_min, cfg.designated_size) {
            Verdict::Good { min_star_blocks, blocks_checked } => (min_star_blocks, blocks_checked),
            Verdict::FixedBlock => {
                counts.fixed_block += 1;
                continue;
            }
            Verdict::StarQuota => {
                counts.star_quota += 1;
                continue;
            }
        };
        // groups at a large scale with no collapsed block at all
        let inputs = cfg.inputs();
        if inputs.iter().any(|a| !rho_hat.blocks().any(|(b, _)| b.b == *a)) {
            counts.star_quota += 1;
            continue;
        }
        let tall = per_input
            .values()
            .any(|d| !canonical_height_at_most(d, &rho_hat, cfg.small_block_threshold, cfg.second_height));
        if tall {
            counts.tree_height += 1;
            continue;
        }
        let g_hat = extend_g(&rho_hat)?;
        let h_hat = extend_h(&g_hat, cfg.designated_size, cfg.b_min)?;
        let trees: BTreeMap<Word, DecisionTree> = per_input
            .iter()
            .map(|(a, d)| (*a, canonical_tree(d, &rho_hat, &params).tree))
            .collect();
        let max_tree_height = trees.values().map(DecisionTree::height).max().unwrap_or(0);
        let mut designated: BTreeMap<Word, Vec<Designated>> = BTreeMap::new();
        for a in &inputs {
            let list = h_hat
                .stars()
                .filter(|v| v.b == *a)
                .map(|v| {
                    let orig = &col.to_original[v];
                    Designated { y1: v.y[0], y2: v.y[1], y3: orig.y[2] }
                })
                .collect();
            designated.insert(*a, list);
        }
        let certification = Certification {
            round: 2,
            tries: t + 1,
            blocks_checked,
            min_star_blocks,
            max_tree_height,
            failures: counts,
        };
        return Ok(SecondRound { rho_hat, g_hat, h_hat, trees, designated, certification });
    }
    Err(OracleError::TriesExhausted { round: 2, tries: cfg.max_tries, worst: counts.worst(), counts })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LogEntry {
    pub stage: String,
    pub var: VarId,
    pub value: bool,
}

/// Total 0/1 table over the space, with the designated sets and the log of
/// every assignment in the order made.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OracleTable {
    pub space: VarSpace,
    pub master_seed: u64,
    /// One character per variable in canonical order.
    pub bits: String,
    pub designated: BTreeMap<Word, Vec<Designated>>,
    pub stage_log: Vec<LogEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Sidecar {
    pub space: VarSpace,
    pub master_seed: u64,
    pub var_count: u64,
    pub designated: BTreeMap<Word, Vec<Designated>>,
}

impl OracleTable {
    pub fn assignment(&self) -> BTreeMap<VarId, bool> {
        enumerate_vars(&self.space).into_iter().zip(self.bits.chars().map(|c| c == '1')).collect()
    }

    /// Packed bits in canonical variable order, low bit first.
    pub fn bitmap(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.bits.len().div_ceil(8)];
        for (i, c) in self.bits.chars().enumerate() {
            if c == '1' {
                out[i / 8] |= 1 << (i % 8);
            }
        }
        out
    }

    pub fn sidecar(&self) -> Sidecar {
        Sidecar {
            space: self.space.clone(),
            master_seed: self.master_seed,
            var_count: self.space.var_count(),
            designated: self.designated.clone(),
        }
    }

    pub fn write_stage_log<W: Write>(&self, mut out: W) -> Result<(), OracleError> {
        for e in &self.stage_log {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Rebuilds the bit string from the stage log alone.
    pub fn replay(space: &VarSpace, log: &[LogEntry]) -> Result<String, OracleError> {
        let mut m: BTreeMap<&VarId, bool> = BTreeMap::new();
        for e in log {
            if m.insert(&e.var, e.value).is_some() {
                return Err(OracleError::Internal(format!("log assigns {} twice", e.var)));
            }
        }
        enumerate_vars(space)
            .iter()
            .map(|v| match m.get(v) {
                Some(true) => Ok('1'),
                Some(false) => Ok('0'),
                None => Err(OracleError::Internal(format!("log never assigns {v}"))),
            })
            .collect()
    }
}

struct Builder {
    bits: BTreeMap<VarId, bool>,
    log: Vec<LogEntry>,
}

impl Builder {
    fn set(&mut self, var: &VarId, value: bool, stage: &str) -> Result<(), OracleError> {
        match self.bits.get(var) {
            Some(v) if *v == value => Ok(()),
            Some(_) => Err(OracleError::Internal(format!("stage {stage} would rewrite {var}"))),
            None => {
                self.bits.insert(var.clone(), value);
                self.log.push(LogEntry { stage: stage.to_string(), var: var.clone(), value });
                Ok(())
            }
        }
    }

    /// Records the constants a stage added over the previous one.
    fn absorb(&mut self, r: &Restriction, map: Option<&Collapse>, stage: &str) -> Result<(), OracleError> {
        for (v, s) in r.vars() {
            if let Some(b) = s.bit() {
                let var = match map {
                    Some(c) => &c.to_original[v],
                    None => v,
                };
                if !self.bits.contains_key(var) {
                    self.set(var, b, stage)?;
                }
            }
        }
        Ok(())
    }
}

/// Completes the table input by input: walk the tree of `a` answering
/// undetermined queries with 1, then set the designated variables of `a`
/// (all 1 if the tree accepted, otherwise one 0), then fill the rest with 1.
pub fn heller_complete(
    cfg: &OracleConfig,
    first: &FirstRound,
    col: &Collapse,
    second: &SecondRound,
) -> Result<OracleTable, OracleError> {
    let mut b = Builder { bits: BTreeMap::new(), log: Vec::new() };
    b.absorb(&first.rho, None, "rho")?;
    b.absorb(&first.g, None, "g")?;
    b.absorb(&first.h, None, "h")?;
    b.absorb(&second.rho_hat, Some(col), "rhoHat")?;
    b.absorb(&second.g_hat, Some(col), "gHat")?;
    b.absorb(&second.h_hat, Some(col), "hHat")?;
    for (a, tree) in &second.trees {
        let stage = format!("tree {a}");
        let mut t = tree;
        let accepted = loop {
            match t {
                DecisionTree::Leaf(v) => break *v,
                DecisionTree::Node { var, zero, one, .. } => {
                    let orig = &col.to_original[var];
                    let v = match b.bits.get(orig) {
                        Some(v) => *v,
                        None => {
                            b.set(orig, true, &stage)?;
                            true
                        }
                    };
                    t = if v { one } else { zero };
                }
            }
        };
        let stage = format!("designated {a}");
        let vars: Vec<VarId> = second.designated[a]
            .iter()
            .map(|d| VarId::new(*a, [d.y1, d.y2, d.y3]))
            .collect();
        let unset: Vec<&VarId> = vars.iter().filter(|v| !b.bits.contains_key(*v)).collect();
        if !accepted {
            let first_unset = *unset.first().ok_or_else(|| OracleError::Exhaustion { a: *a })?;
            b.set(first_unset, false, &stage)?;
        }
        for v in unset {
            if !b.bits.contains_key(v) {
                b.set(v, true, &stage)?;
            }
        }
    }
    let vars = enumerate_vars(&cfg.space);
    for v in &vars {
        if !b.bits.contains_key(v) {
            b.set(v, true, "fill")?;
        }
    }
    let bits = vars.iter().map(|v| if b.bits[v] { '1' } else { '0' }).collect();
    Ok(OracleTable {
        space: cfg.space.clone(),
        master_seed: cfg.master_seed,
        bits,
        designated: second.designated.clone(),
        stage_log: b.log,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OracleBuild {
    pub table: OracleTable,
    pub certifications: Vec<Certification>,
}

pub fn build_oracle(cfg: &OracleConfig) -> Result<OracleBuild, OracleError> {
    cfg.validate()?;
    let fam = FormulaFamily::from_spec(&cfg.family, &cfg.space)?;
    let (rho, cert1) = sample_good_rho(&fam, cfg)?;
    let first = first_round(&fam, cfg, &rho)?;
    let col = collapse(&first.h);
    let second = second_round(&first, &col, cfg)?;
    let cert2 = second.certification.clone();
    let table = heller_complete(cfg, &first, &col, &second)?;
    Ok(OracleBuild { table, certifications: vec![cert1, cert2] })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EquivalenceRow {
    pub a: Word,
    pub phi: bool,
    pub psi: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EquivalenceReport {
    pub rows: Vec<EquivalenceRow>,
    pub pass: bool,
}

/// `∀y1 ∃y2 ∀y3 α(a,y1,y2,y3)` by direct scan.
pub fn forall_exists_forall(table: &BTreeMap<VarId, bool>, space: &VarSpace, a: &Word) -> bool {
    let m = a.scale();
    let lead = space.lead_range(m);
    let inner = space.block_size(m);
    (0..lead).all(|y1| {
        (0..lead).any(|y2| (0..inner).all(|y3| table.get(&VarId::new(*a, [y1, y2, y3])) == Some(&true)))
    })
}

pub fn verify_equivalence(
    fam: &FormulaFamily,
    table: &OracleTable,
    a_min: &Word,
) -> Result<EquivalenceReport, OracleError> {
    let bits = table.assignment();
    let rows = table
        .space
        .words()
        .into_iter()
        .filter(|a| a >= a_min)
        .map(|a| {
            let phi = fam.phi(&a, &bits)?;
            let psi = forall_exists_forall(&bits, &table.space, &a);
            Ok(EquivalenceRow { a, phi, psi, pass: phi == psi })
        })
        .collect::<Result<Vec<_>, OracleError>>()?;
    let pass = rows.iter().all(|r| r.pass);
    Ok(EquivalenceReport { rows, pass })
}

/// Checks the flipped-round dual of the `g` invariant: every collapsed
/// block keeps at most one variable that is not 0.
pub fn flipped_blocks_well_formed(g_hat: &Restriction) -> bool {
    let mut non_zero: BTreeMap<BlockId, usize> = BTreeMap::new();
    for (v, s) in g_hat.vars() {
        if s == VarState::Star {
            *non_zero.entry(v.block()).or_default() += 1;
        }
    }
    non_zero.values().all(|n| *n <= 1)
}

/// Variables whose value differs between two tables.
pub fn table_diff(a: &OracleTable, b: &OracleTable) -> BTreeSet<usize> {
    a.bits.chars().zip(b.bits.chars()).enumerate().filter(|(_, (x, y))| x != y).map(|(i, _)| i).collect()
}
