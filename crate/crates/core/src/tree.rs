//! Decision trees and the canonical tree `T(ψ, ρ)`.
//!
//! The canonical tree first queries every ρ-star lying in a block of scale
//! below the small-block threshold θ. Branches that disagree with `g(ρ)` on
//! those variables end in a 0-leaf. On the remaining branches it repeatedly
//! takes the first conjunction that is not falsified, and for every block
//! holding one of its free variables queries that block's `g(ρ)`
//! representative. The answer fills the whole block: the representative
//! takes the answer and the block's other stars take the first-stage
//! constant.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{
    eval_dnf, first_live_conjunction, Assignment, BlockId, Conjunction, Dnf, FormulaError, LiveConjunction, Literal,
    VarId,
};
use crate::restriction::{extend_g, BlockState, Restriction, RestrictionError, VarState};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("variable {0} is not assigned")]
    MissingVariable(VarId),
    #[error("{free} free variables exceed the exhaustion budget {budget}")]
    BudgetExceeded { free: usize, budget: usize },
    #[error("tree has a query without a phase marker")]
    MissingPhaseMarker,
    #[error(transparent)]
    Restriction(#[from] RestrictionError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

/// Where a query node comes from in a canonical tree.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum QueryPhase {
    /// Not produced by the canonical construction.
    #[default]
    Plain,
    /// Small-block star queried up front.
    Small,
    /// Block representative queried for a live conjunction.
    Block,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum DecisionTree {
    Leaf(bool),
    Node {
        var: VarId,
        #[serde(default)]
        phase: QueryPhase,
        zero: Box<DecisionTree>,
        one: Box<DecisionTree>,
    },
}

impl DecisionTree {
    pub fn node(var: VarId, zero: DecisionTree, one: DecisionTree) -> Self {
        DecisionTree::Node { var, phase: QueryPhase::Plain, zero: Box::new(zero), one: Box::new(one) }
    }

    fn marked(var: VarId, phase: QueryPhase, zero: DecisionTree, one: DecisionTree) -> Self {
        DecisionTree::Node { var, phase, zero: Box::new(zero), one: Box::new(one) }
    }

    pub fn height(&self) -> usize {
        match self {
            DecisionTree::Leaf(_) => 0,
            DecisionTree::Node { zero, one, .. } => 1 + zero.height().max(one.height()),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            DecisionTree::Leaf(_) => 1,
            DecisionTree::Node { zero, one, .. } => 1 + zero.size() + one.size(),
        }
    }

    pub fn eval<A: Assignment + ?Sized>(&self, assignment: &A) -> Result<bool, TreeError> {
        let mut t = self;
        loop {
            match t {
                DecisionTree::Leaf(b) => return Ok(*b),
                DecisionTree::Node { var, zero, one, .. } => {
                    t = match assignment.value(var) {
                        Some(false) => zero,
                        Some(true) => one,
                        None => return Err(TreeError::MissingVariable(var.clone())),
                    }
                }
            }
        }
    }

    /// True when no variable is queried twice on one root-to-leaf path.
    pub fn no_repeats(&self) -> bool {
        fn walk<'a>(t: &'a DecisionTree, path: &mut Vec<&'a VarId>) -> bool {
            match t {
                DecisionTree::Leaf(_) => true,
                DecisionTree::Node { var, zero, one, .. } => {
                    if path.contains(&var) {
                        return false;
                    }
                    path.push(var);
                    let ok = walk(zero, path) && walk(one, path);
                    path.pop();
                    ok
                }
            }
        }
        walk(self, &mut Vec::new())
    }

    /// One conjunction per 1-leaf: the literals read along its path.
    pub fn one_branches(&self) -> Vec<Conjunction> {
        fn walk(t: &DecisionTree, path: &mut Vec<Literal>, out: &mut Vec<Conjunction>) {
            match t {
                DecisionTree::Leaf(true) => {
                    out.push(Conjunction::new(path.iter().cloned()).expect("paths never repeat a variable"))
                }
                DecisionTree::Leaf(false) => {}
                DecisionTree::Node { var, zero, one, .. } => {
                    path.push(Literal::neg(var.clone()));
                    walk(zero, path, out);
                    path.pop();
                    path.push(Literal::pos(var.clone()));
                    walk(one, path, out);
                    path.pop();
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut Vec::new(), &mut out);
        out
    }

    /// DNF of the 1-branches; its width is at most the height.
    pub fn to_dnf(&self) -> Dnf {
        let conj = self.one_branches();
        let width = conj.iter().map(Conjunction::len).max().unwrap_or(0);
        Dnf::new(conj, width, crate::formula::Form::Dnf).expect("width computed from the terms")
    }

    pub fn render(&self) -> String {
        fn walk(t: &DecisionTree, depth: usize, edge: &str, out: &mut String) {
            let pad = "  ".repeat(depth);
            match t {
                DecisionTree::Leaf(b) => {
                    let _ = writeln!(out, "{pad}{edge}leaf {}", *b as u8);
                }
                DecisionTree::Node { var, phase, zero, one } => {
                    let tag = match phase {
                        QueryPhase::Plain => "",
                        QueryPhase::Small => " [small]",
                        QueryPhase::Block => " [block]",
                    };
                    let _ = writeln!(out, "{pad}{edge}{var}?{tag}");
                    walk(zero, depth + 1, "0: ", out);
                    walk(one, depth + 1, "1: ", out);
                }
            }
        }
        let mut out = String::new();
        walk(self, 0, "", &mut out);
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CanonicalTreeParams {
    /// Blocks of scale strictly below this are queried in the first phase.
    pub small_block_threshold: u64,
    pub height_threshold: usize,
}

impl CanonicalTreeParams {
    pub fn new(small_block_threshold: u64, height_threshold: usize) -> Self {
        CanonicalTreeParams { small_block_threshold, height_threshold }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.small_block_threshold < 2 {
            return Err(format!("smallBlockThreshold must be at least 2, got {}", self.small_block_threshold));
        }
        Ok(())
    }
}

/// One pass of the second phase: the live conjunction, the blocks holding
/// its free variables, the representatives queried and the answers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RoundTrace {
    pub conjunction: usize,
    pub blocks: Vec<BlockId>,
    pub queried: Vec<VarId>,
    pub answers: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BranchTrace {
    /// First-phase answers in query order.
    pub tau: Vec<(VarId, bool)>,
    pub consistent: bool,
    pub rounds: Vec<RoundTrace>,
    pub leaf: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CanonicalTree {
    pub tree: DecisionTree,
    /// Leaves in depth-first order, 0-edge first.
    pub traces: Vec<BranchTrace>,
}

enum Step {
    Leaf(bool),
    Round(usize, Vec<(BlockId, VarId)>),
}

/// Walks the canonical construction over `ρ ∪ τ ∪ filled blocks`.
pub(crate) struct Walker<'a> {
    dnf: Dnf,
    negate: bool,
    rho: &'a Restriction,
    fixed: bool,
    stars: BTreeMap<BlockId, Vec<VarId>>,
    small: Vec<VarId>,
    extra: BTreeMap<VarId, bool>,
}

impl Assignment for Walker<'_> {
    fn value(&self, var: &VarId) -> Option<bool> {
        match self.extra.get(var) {
            Some(b) => Some(*b),
            None => self.rho.value(var),
        }
    }
}

impl<'a> Walker<'a> {
    pub(crate) fn new(dnf: &Dnf, rho: &'a Restriction, theta: u64) -> Self {
        let (dnf, negate) = if dnf.is_cnf() { (dnf.complement(), true) } else { (dnf.clone(), false) };
        let mut stars: BTreeMap<BlockId, Vec<VarId>> = BTreeMap::new();
        for (v, s) in rho.vars() {
            if s == VarState::Star {
                stars.entry(v.block()).or_default().push(v.clone());
            }
        }
        let small = stars
            .iter()
            .filter(|(b, _)| b.scale() < theta)
            .flat_map(|(_, vs)| vs.iter().cloned())
            .collect();
        Walker { dnf, negate, rho, fixed: rho.polarity().fixed(), stars, small, extra: BTreeMap::new() }
    }

    pub(crate) fn dnf(&self) -> &Dnf {
        &self.dnf
    }

    fn is_rep(&self, v: &VarId) -> bool {
        self.stars.get(&v.block()).and_then(|s| s.first()) == Some(v)
    }

    fn step(&self) -> Step {
        match first_live_conjunction(&self.dnf, self) {
            LiveConjunction::Satisfied => Step::Leaf(!self.negate),
            LiveConjunction::Exhausted => Step::Leaf(self.negate),
            LiveConjunction::At(i) => {
                let mut blocks: Vec<(BlockId, VarId)> = Vec::new();
                for lit in self.dnf.conjunctions()[i].literals() {
                    if self.value(&lit.var).is_some() {
                        continue;
                    }
                    let blk = lit.var.block();
                    let rep = match self.stars.get(&blk) {
                        Some(s) => s[0].clone(),
                        None => lit.var.clone(),
                    };
                    blocks.push((blk, rep));
                }
                blocks.sort();
                blocks.dedup_by(|a, b| a.0 == b.0);
                Step::Round(i, blocks)
            }
        }
    }

    fn fill(&mut self, block: &BlockId, rep: &VarId, answer: bool) -> Vec<VarId> {
        let mut set = vec![rep.clone()];
        self.extra.insert(rep.clone(), answer);
        if let Some(stars) = self.stars.get(block) {
            for s in stars {
                if s != rep && self.value(s).is_none() {
                    set.push(s.clone());
                }
            }
            for s in &set[1..] {
                self.extra.insert(s.clone(), self.fixed);
            }
        }
        set
    }

    fn undo(&mut self, set: Vec<VarId>) {
        for v in set {
            self.extra.remove(&v);
        }
    }

    fn build_small(
        &mut self,
        idx: usize,
        tau: &mut Vec<(VarId, bool)>,
        consistent: bool,
        traces: &mut Vec<BranchTrace>,
    ) -> DecisionTree {
        if idx == self.small.len() {
            if !consistent {
                traces.push(BranchTrace { tau: tau.clone(), consistent, rounds: Vec::new(), leaf: false });
                return DecisionTree::Leaf(false);
            }
            return self.build_block(tau, &mut Vec::new(), traces);
        }
        let v = self.small[idx].clone();
        let rep = self.is_rep(&v);
        let mut kids = Vec::with_capacity(2);
        for bit in [false, true] {
            self.extra.insert(v.clone(), bit);
            tau.push((v.clone(), bit));
            kids.push(self.build_small(idx + 1, tau, consistent && (rep || bit == self.fixed), traces));
            tau.pop();
            self.extra.remove(&v);
        }
        let one = kids.pop().unwrap();
        let zero = kids.pop().unwrap();
        DecisionTree::marked(v, QueryPhase::Small, zero, one)
    }

    fn build_block(
        &mut self,
        tau: &[(VarId, bool)],
        rounds: &mut Vec<RoundTrace>,
        traces: &mut Vec<BranchTrace>,
    ) -> DecisionTree {
        match self.step() {
            Step::Leaf(b) => {
                traces.push(BranchTrace { tau: tau.to_vec(), consistent: true, rounds: rounds.clone(), leaf: b });
                DecisionTree::Leaf(b)
            }
            Step::Round(i, blocks) => self.build_round(i, &blocks, 0, &mut Vec::new(), tau, rounds, traces),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn build_round(
        &mut self,
        conj: usize,
        blocks: &[(BlockId, VarId)],
        j: usize,
        answers: &mut Vec<bool>,
        tau: &[(VarId, bool)],
        rounds: &mut Vec<RoundTrace>,
        traces: &mut Vec<BranchTrace>,
    ) -> DecisionTree {
        if j == blocks.len() {
            rounds.push(round_trace(conj, blocks, answers));
            let t = self.build_block(tau, rounds, traces);
            rounds.pop();
            return t;
        }
        let (blk, rep) = &blocks[j];
        let mut kids = Vec::with_capacity(2);
        for bit in [false, true] {
            let set = self.fill(blk, rep, bit);
            answers.push(bit);
            kids.push(self.build_round(conj, blocks, j + 1, answers, tau, rounds, traces));
            answers.pop();
            self.undo(set);
        }
        let one = kids.pop().unwrap();
        let zero = kids.pop().unwrap();
        DecisionTree::marked(rep.clone(), QueryPhase::Block, zero, one)
    }

    /// First `g(ρ)`-consistent τ, and under it the first depth-first branch
    /// with `h` second-phase queries, truncated there.
    pub(crate) fn find_deep_branch(&mut self, h: usize) -> Option<(Vec<(VarId, bool)>, Vec<RoundTrace>)> {
        let mut tau = Vec::new();
        let mut rounds = Vec::new();
        if self.deep_small(0, h, &mut tau, &mut rounds) {
            Some((tau, rounds))
        } else {
            None
        }
    }

    fn deep_small(
        &mut self,
        idx: usize,
        h: usize,
        tau: &mut Vec<(VarId, bool)>,
        rounds: &mut Vec<RoundTrace>,
    ) -> bool {
        if idx == self.small.len() {
            return self.deep_block(h, 0, rounds);
        }
        let v = self.small[idx].clone();
        let bits: &[bool] = if self.is_rep(&v) {
            &[false, true]
        } else if self.fixed {
            &[true]
        } else {
            &[false]
        };
        for &bit in bits {
            self.extra.insert(v.clone(), bit);
            tau.push((v.clone(), bit));
            if self.deep_small(idx + 1, h, tau, rounds) {
                return true;
            }
            tau.pop();
            self.extra.remove(&v);
        }
        false
    }

    fn deep_block(&mut self, h: usize, depth: usize, rounds: &mut Vec<RoundTrace>) -> bool {
        if depth >= h {
            return true;
        }
        match self.step() {
            Step::Leaf(_) => false,
            Step::Round(i, blocks) => self.deep_round(i, &blocks, 0, &mut Vec::new(), h, depth, rounds),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn deep_round(
        &mut self,
        conj: usize,
        blocks: &[(BlockId, VarId)],
        j: usize,
        answers: &mut Vec<bool>,
        h: usize,
        depth: usize,
        rounds: &mut Vec<RoundTrace>,
    ) -> bool {
        if depth == h {
            rounds.push(round_trace(conj, &blocks[..j], answers));
            return true;
        }
        if j == blocks.len() {
            rounds.push(round_trace(conj, blocks, answers));
            if self.deep_block(h, depth, rounds) {
                return true;
            }
            rounds.pop();
            return false;
        }
        let (blk, rep) = &blocks[j];
        for bit in [false, true] {
            let set = self.fill(blk, rep, bit);
            answers.push(bit);
            if self.deep_round(conj, blocks, j + 1, answers, h, depth + 1, rounds) {
                return true;
            }
            answers.pop();
            self.undo(set);
        }
        false
    }
}

fn round_trace(conj: usize, blocks: &[(BlockId, VarId)], answers: &[bool]) -> RoundTrace {
    RoundTrace {
        conjunction: conj,
        blocks: blocks.iter().map(|(b, _)| b.clone()).collect(),
        queried: blocks.iter().map(|(_, v)| v.clone()).collect(),
        answers: answers.to_vec(),
    }
}

/// `T(ψ, ρ)` with a trace per leaf. A CNF gets the tree of its complement
/// with decided leaves negated; leaves of inconsistent branches stay 0.
pub fn canonical_tree(dnf: &Dnf, rho: &Restriction, params: &CanonicalTreeParams) -> CanonicalTree {
    let mut w = Walker::new(dnf, rho, params.small_block_threshold);
    let mut traces = Vec::new();
    let tree = w.build_small(0, &mut Vec::new(), true, &mut traces);
    CanonicalTree { tree, traces }
}

/// Whether `T(ψ, ρ)` has height at most `t`, without building it.
pub fn canonical_height_at_most(dnf: &Dnf, rho: &Restriction, theta: u64, t: usize) -> bool {
    let mut w = Walker::new(dnf, rho, theta);
    let n1 = w.small.len();
    if n1 > t {
        return false;
    }
    w.find_deep_branch(t + 1 - n1).is_none()
}

/// Checks the tree against the formula on every completion of `g(ρ)`.
pub fn verify_tree_decides(
    t: &DecisionTree,
    dnf: &Dnf,
    rho: &Restriction,
    budget: usize,
) -> Result<bool, TreeError> {
    let g = extend_g(rho)?;
    let free: Vec<VarId> = g.stars().cloned().collect();
    if free.len() > budget || free.len() >= 64 {
        return Err(TreeError::BudgetExceeded { free: free.len(), budget });
    }
    let mut full: BTreeMap<VarId, bool> = g.assigned().map(|(v, b)| (v.clone(), b)).collect();
    for mask in 0u64..1 << free.len() {
        for (i, v) in free.iter().enumerate() {
            full.insert(v.clone(), mask >> i & 1 == 1);
        }
        if t.eval(&full)? != eval_dnf(dnf, &full)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// First-phase query count and the longest second-phase run on a branch.
pub fn tree_height_profile(t: &DecisionTree) -> Result<(usize, usize), TreeError> {
    fn walk(t: &DecisionTree) -> Result<(usize, usize), TreeError> {
        match t {
            DecisionTree::Leaf(_) => Ok((0, 0)),
            DecisionTree::Node { phase, zero, one, .. } => {
                let (a0, b0) = walk(zero)?;
                let (a1, b1) = walk(one)?;
                let (a, b) = (a0.max(a1), b0.max(b1));
                match phase {
                    QueryPhase::Small => Ok((a + 1, b)),
                    QueryPhase::Block => Ok((a, b + 1)),
                    QueryPhase::Plain => Err(TreeError::MissingPhaseMarker),
                }
            }
        }
    }
    walk(t)
}

/// Block representatives left free by `g(ρ)`, per *-block.
pub fn representatives(rho: &Restriction) -> BTreeMap<BlockId, VarId> {
    let star_blocks: BTreeSet<&BlockId> =
        rho.blocks().filter(|(_, s)| *s == BlockState::StarBlock).map(|(b, _)| b).collect();
    let mut out = BTreeMap::new();
    for b in star_blocks {
        if let Some(v) = crate::restriction::representative(rho, b) {
            out.insert(b.clone(), v);
        }
    }
    out
}
