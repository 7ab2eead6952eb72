//! Variable addressing, block structure and width-bounded DNF/CNF formulas.
//!
//! Oracle variables are addressed as tuples `⟨b, y1, .., yk⟩` where `b` is a
//! binary base word. The word length `n` fixes the scale `M = 2^n`; every
//! coordinate but the last ranges below `M^e1`, the last below `M^e2`. A
//! block is the set of variables that agree on everything but the last
//! coordinate.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use schemars::JsonSchema;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;
use thiserror::Error;

/// Longest supported base word. Keeps `M^e` comfortably inside `u64`.
pub const MAX_WORD_LEN: u32 = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("invalid word {0:?}: expected a non-empty binary string of at most {MAX_WORD_LEN} digits")]
    InvalidWord(String),
    #[error("invalid variable space: {0}")]
    InvalidSpace(String),
    #[error("assignment does not cover variable {0}")]
    MissingVariable(VarId),
    #[error("conjunction contains both polarities of {0}")]
    Contradictory(VarId),
    #[error("conjunction has {len} literals, width bound is {width}")]
    TooWide { len: usize, width: usize },
    #[error("malformed address: {0}")]
    MalformedAddress(String),
}

/// A binary base word, ordered first by length and then by value.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    len: u32,
    bits: u64,
}

impl Word {
    pub fn new(len: u32, bits: u64) -> Result<Self, FormulaError> {
        if len == 0 || len > MAX_WORD_LEN || bits >> len != 0 {
            return Err(FormulaError::InvalidWord(format!("len={len} bits={bits}")));
        }
        Ok(Word { len, bits })
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// `M = 2^{|b|}`.
    pub fn scale(&self) -> u64 {
        1u64 << self.len
    }

    /// All words of the given length in increasing order.
    pub fn all_of_len(len: u32) -> impl Iterator<Item = Word> {
        (0..1u64 << len).map(move |bits| Word { len, bits })
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:0width$b}", self.bits, width = self.len as usize)
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({self})")
    }
}

impl FromStr for Word {
    type Err = FormulaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let len = s.len() as u32;
        if len == 0 || len > MAX_WORD_LEN || !s.bytes().all(|c| c == b'0' || c == b'1') {
            return Err(FormulaError::InvalidWord(s.to_string()));
        }
        let bits = u64::from_str_radix(s, 2).map_err(|_| FormulaError::InvalidWord(s.to_string()))?;
        Word::new(len, bits)
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}

pub type Coords = SmallVec<[u32; 4]>;

/// Address of one oracle variable `⟨b, y1, .., yk⟩`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId {
    pub b: Word,
    pub y: Coords,
}

/// Address of a block: a variable address with the last coordinate dropped.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockId {
    pub b: Word,
    pub y: Coords,
}

impl VarId {
    pub fn new(b: Word, y: impl IntoIterator<Item = u32>) -> Self {
        VarId { b, y: y.into_iter().collect() }
    }

    pub fn block(&self) -> BlockId {
        block_of(self)
    }

    /// The coordinate that varies inside a block (`y3` for quadruples).
    pub fn last(&self) -> u32 {
        *self.y.last().expect("variable with no coordinates")
    }

    pub fn scale(&self) -> u64 {
        self.b.scale()
    }
}

/// Projection onto the enclosing block.
pub fn block_of(var: &VarId) -> BlockId {
    let n = var.y.len().saturating_sub(1);
    BlockId { b: var.b, y: var.y[..n].iter().copied().collect() }
}

impl BlockId {
    pub fn new(b: Word, y: impl IntoIterator<Item = u32>) -> Self {
        BlockId { b, y: y.into_iter().collect() }
    }

    pub fn member(&self, last: u32) -> VarId {
        let mut y = self.y.clone();
        y.push(last);
        VarId { b: self.b, y }
    }

    /// The group a block belongs to when star-block quotas are counted,
    /// e.g. `⟨b, y1⟩` for blocks `⟨b, y1, y2, ·⟩`.
    pub fn group(&self) -> BlockId {
        let n = self.y.len().saturating_sub(1);
        BlockId { b: self.b, y: self.y[..n].iter().copied().collect() }
    }

    pub fn scale(&self) -> u64 {
        self.b.scale()
    }

    /// Smallest and largest possible member address, for range scans.
    pub(crate) fn member_range(&self) -> (VarId, VarId) {
        (self.member(0), self.member(u32::MAX))
    }
}

fn fmt_tuple(f: &mut fmt::Formatter<'_>, b: &Word, y: &[u32]) -> fmt::Result {
    write!(f, "⟨{b}")?;
    for c in y {
        write!(f, ",{c}")?;
    }
    write!(f, "⟩")
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_tuple(f, &self.b, &self.y)
    }
}

impl fmt::Debug for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_tuple(f, &self.b, &self.y)?;
        write!(f, "·")
    }
}

impl fmt::Debug for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

// Addresses are JSON objects {"b": "01", "y1": 3, "y2": 0, ...}.

#[derive(Deserialize)]
struct RawAddress {
    b: Word,
    #[serde(flatten)]
    coords: BTreeMap<String, u32>,
}

fn coords_from_map<E: serde::de::Error>(map: &BTreeMap<String, u32>) -> Result<Coords, E> {
    let mut y = Coords::new();
    for i in 1..=map.len() {
        match map.get(&format!("y{i}")) {
            Some(v) => y.push(*v),
            None => return Err(E::custom(format!("address is missing y{i}"))),
        }
    }
    Ok(y)
}

fn serialize_address<S: Serializer>(
    s: S,
    b: &Word,
    y: &[u32],
    sign: Option<Sign>,
) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut m = s.serialize_map(Some(1 + y.len() + sign.is_some() as usize))?;
    m.serialize_entry("b", b)?;
    for (i, c) in y.iter().enumerate() {
        m.serialize_entry(&format!("y{}", i + 1), c)?;
    }
    if let Some(sign) = sign {
        m.serialize_entry("sign", &sign)?;
    }
    m.end()
}

impl Serialize for VarId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        serialize_address(s, &self.b, &self.y, None)
    }
}

impl<'de> Deserialize<'de> for VarId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawAddress::deserialize(d)?;
        let y = coords_from_map(&raw.coords)?;
        if y.is_empty() {
            return Err(D::Error::custom("variable address needs at least one coordinate"));
        }
        Ok(VarId { b: raw.b, y })
    }
}

impl Serialize for BlockId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        serialize_address(s, &self.b, &self.y, None)
    }
}

impl<'de> Deserialize<'de> for BlockId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawAddress::deserialize(d)?;
        Ok(BlockId { b: raw.b, y: coords_from_map(&raw.coords)? })
    }
}

/// Finite universe of oracle variables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct VarSpace {
    /// Base-word lengths; length `n` contributes words of scale `2^n`.
    pub scale_range: Vec<u32>,
    /// Exponent bounding the leading coordinates (`y < M^e1`).
    pub e1: u32,
    /// Exponent bounding the in-block coordinate (`y_last < M^e2`).
    pub e2: u32,
    /// Number of `y` coordinates.
    #[serde(default = "default_arity")]
    pub tuple_arity: usize,
    /// Keep only the first this-many words of each length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub words_per_scale: Option<u64>,
}

fn default_arity() -> usize {
    3
}

impl VarSpace {
    pub fn new(scale_range: Vec<u32>, e1: u32, e2: u32) -> Self {
        VarSpace { scale_range, e1, e2, tuple_arity: 3, words_per_scale: None }
    }

    pub fn with_words_per_scale(mut self, n: u64) -> Self {
        self.words_per_scale = Some(n);
        self
    }

    pub fn with_arity(mut self, arity: usize) -> Self {
        self.tuple_arity = arity;
        self
    }

    pub fn validate(&self) -> Result<(), FormulaError> {
        let bad = |m: &str| Err(FormulaError::InvalidSpace(m.to_string()));
        if self.e1 == 0 || self.e2 == 0 {
            return bad("exponents e1, e2 must be at least 1");
        }
        if self.tuple_arity < 2 {
            return bad("tupleArity must be at least 2");
        }
        let mut seen = BTreeSet::new();
        for &len in &self.scale_range {
            if len == 0 || len > MAX_WORD_LEN {
                return bad("word lengths must lie in 1..=16");
            }
            if !seen.insert(len) {
                return bad("duplicate word length in scaleRange");
            }
            let m = 1u64 << len;
            if m.checked_pow(self.e1.max(self.e2)).is_none_or(|v| v > u32::MAX as u64) {
                return bad("coordinate range exceeds 32 bits");
            }
        }
        Ok(())
    }

    /// Base words in canonical order.
    pub fn words(&self) -> Vec<Word> {
        let mut lens = self.scale_range.clone();
        lens.sort_unstable();
        let take = self.words_per_scale.unwrap_or(u64::MAX) as usize;
        lens.into_iter().flat_map(|len| Word::all_of_len(len).take(take)).collect()
    }

    pub fn contains_word(&self, b: &Word) -> bool {
        self.scale_range.contains(&b.len())
            && self.words_per_scale.is_none_or(|k| b.bits() < k)
    }

    /// Range of the leading coordinates at scale `m`.
    pub fn lead_range(&self, m: u64) -> u32 {
        m.pow(self.e1) as u32
    }

    /// Block size at scale `m`: `M^e2`.
    pub fn block_size(&self, m: u64) -> u32 {
        m.pow(self.e2) as u32
    }

    pub fn contains(&self, v: &VarId) -> bool {
        if !self.contains_word(&v.b) || v.y.len() != self.tuple_arity {
            return false;
        }
        let m = v.scale();
        let (lead, last) = v.y.split_at(v.y.len() - 1);
        lead.iter().all(|&c| c < self.lead_range(m)) && last[0] < self.block_size(m)
    }

    /// Blocks of the space in canonical order.
    pub fn blocks(&self) -> Vec<BlockId> {
        let lead = self.tuple_arity - 1;
        let mut out = Vec::new();
        for b in self.words() {
            let r = self.lead_range(b.scale()) as u64;
            for idx in 0..r.pow(lead as u32) {
                let mut y: Coords = SmallVec::from_elem(0, lead);
                let mut rest = idx;
                for c in y.iter_mut().rev() {
                    *c = (rest % r) as u32;
                    rest /= r;
                }
                out.push(BlockId { b, y });
            }
        }
        out
    }

    pub fn var_count(&self) -> u64 {
        self.words()
            .iter()
            .map(|b| {
                let m = b.scale();
                (self.lead_range(m) as u64).pow(self.tuple_arity as u32 - 1) * self.block_size(m) as u64
            })
            .sum()
    }
}

/// Every variable of the space exactly once, in canonical lex order.
pub fn enumerate_vars(space: &VarSpace) -> Vec<VarId> {
    space
        .blocks()
        .into_iter()
        .flat_map(|blk| {
            let n = space.block_size(blk.scale());
            (0..n).map(move |y| blk.member(y))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub var: VarId,
    pub sign: Sign,
}

impl Literal {
    pub fn pos(var: VarId) -> Self {
        Literal { var, sign: Sign::Positive }
    }

    pub fn neg(var: VarId) -> Self {
        Literal { var, sign: Sign::Negative }
    }

    pub fn is_positive(&self) -> bool {
        self.sign == Sign::Positive
    }

    /// Truth value of the literal when its variable takes `bit`.
    pub fn holds(&self, bit: bool) -> bool {
        bit == self.is_positive()
    }

    pub fn negated(&self) -> Literal {
        Literal { var: self.var.clone(), sign: self.sign.flip() }
    }
}

impl fmt::Debug for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.is_positive() {
            write!(f, "¬")?;
        }
        write!(f, "{}", self.var)
    }
}

impl Serialize for Literal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        serialize_address(s, &self.var.b, &self.var.y, Some(self.sign))
    }
}

impl<'de> Deserialize<'de> for Literal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            b: Word,
            sign: Sign,
            #[serde(flatten)]
            coords: BTreeMap<String, u32>,
        }
        let raw = Raw::deserialize(d)?;
        let y = coords_from_map(&raw.coords)?;
        if y.is_empty() {
            return Err(D::Error::custom("literal address needs at least one coordinate"));
        }
        Ok(Literal { var: VarId { b: raw.b, y }, sign: raw.sign })
    }
}

/// A conjunction of literals (a clause when it sits inside a CNF).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Literal>", into = "Vec<Literal>")]
pub struct Conjunction {
    literals: Vec<Literal>,
}

impl Conjunction {
    /// Builds a conjunction, dropping repeated literals and rejecting
    /// complementary pairs.
    pub fn new(literals: impl IntoIterator<Item = Literal>) -> Result<Self, FormulaError> {
        let mut seen: HashMap<VarId, Sign> = HashMap::new();
        let mut out = Vec::new();
        for lit in literals {
            match seen.get(&lit.var) {
                Some(&s) if s == lit.sign => continue,
                Some(_) => return Err(FormulaError::Contradictory(lit.var)),
                None => {
                    seen.insert(lit.var.clone(), lit.sign);
                    out.push(lit);
                }
            }
        }
        Ok(Conjunction { literals: out })
    }

    pub fn empty() -> Self {
        Conjunction { literals: Vec::new() }
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }
}

impl TryFrom<Vec<Literal>> for Conjunction {
    type Error = FormulaError;

    fn try_from(v: Vec<Literal>) -> Result<Self, Self::Error> {
        Conjunction::new(v)
    }
}

impl From<Conjunction> for Vec<Literal> {
    fn from(c: Conjunction) -> Self {
        c.literals
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default, JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    #[default]
    Dnf,
    Cnf,
}

/// Ordered, width-bounded disjunction of conjunctions. With `Form::Cnf` the
/// same list is read as a conjunction of clauses.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Dnf {
    conjunctions: Vec<Conjunction>,
    width: usize,
    polarity: Form,
}

impl<'de> Deserialize<'de> for Dnf {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            conjunctions: Vec<Conjunction>,
            width: usize,
            #[serde(default)]
            polarity: Form,
        }
        let raw = Raw::deserialize(d)?;
        Dnf::new(raw.conjunctions, raw.width, raw.polarity).map_err(D::Error::custom)
    }
}

impl Dnf {
    pub fn new(conjunctions: Vec<Conjunction>, width: usize, polarity: Form) -> Result<Self, FormulaError> {
        if let Some(c) = conjunctions.iter().find(|c| c.len() > width) {
            return Err(FormulaError::TooWide { len: c.len(), width });
        }
        Ok(Dnf { conjunctions, width, polarity })
    }

    /// DNF whose width is the longest conjunction.
    pub fn dnf(conjunctions: Vec<Conjunction>) -> Self {
        let width = conjunctions.iter().map(Conjunction::len).max().unwrap_or(0);
        Dnf { conjunctions, width, polarity: Form::Dnf }
    }

    pub fn cnf(clauses: Vec<Conjunction>) -> Self {
        Dnf { polarity: Form::Cnf, ..Dnf::dnf(clauses) }
    }

    /// Constant false DNF (no conjunctions).
    pub fn falsum() -> Self {
        Dnf::dnf(Vec::new())
    }

    pub fn conjunctions(&self) -> &[Conjunction] {
        &self.conjunctions
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn polarity(&self) -> Form {
        self.polarity
    }

    pub fn is_cnf(&self) -> bool {
        self.polarity == Form::Cnf
    }

    pub fn vars(&self) -> BTreeSet<VarId> {
        self.conjunctions.iter().flat_map(|c| c.literals.iter().map(|l| l.var.clone())).collect()
    }

    /// The formula computing the negation: polarity swapped and every
    /// literal negated (De Morgan).
    pub fn complement(&self) -> Dnf {
        let conjunctions = self
            .conjunctions
            .iter()
            .map(|c| Conjunction { literals: c.literals.iter().map(Literal::negated).collect() })
            .collect();
        let polarity = match self.polarity {
            Form::Dnf => Form::Cnf,
            Form::Cnf => Form::Dnf,
        };
        Dnf { conjunctions, width: self.width, polarity }
    }

    /// Simplifies under a partial assignment. Satisfied terms become the
    /// empty conjunction (DNF) or vanish (CNF); falsified ones vanish (DNF)
    /// or become the empty clause (CNF).
    pub fn restrict<A: Assignment + ?Sized>(&self, r: &A) -> Dnf {
        if self.is_cnf() {
            return self.complement().restrict(r).complement();
        }
        let conjunctions = self
            .conjunctions
            .iter()
            .filter_map(|c| match restrict_conjunction(c, r) {
                Restricted::False => None,
                Restricted::True => Some(Conjunction::empty()),
                Restricted::Residual(lits) => Some(Conjunction { literals: lits }),
            })
            .collect();
        Dnf { conjunctions, width: self.width, polarity: Form::Dnf }
    }

    /// Renames variables. Literals that collapse onto one variable must not
    /// conflict.
    pub fn map_vars(&self, mut f: impl FnMut(&VarId) -> VarId) -> Result<Dnf, FormulaError> {
        let conjunctions = self
            .conjunctions
            .iter()
            .map(|c| Conjunction::new(c.literals.iter().map(|l| Literal { var: f(&l.var), sign: l.sign })))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Dnf { conjunctions, width: self.width, polarity: self.polarity })
    }
}

/// Read access to a (partial) 0/1 assignment. `None` means the variable is
/// unassigned or starred.
pub trait Assignment {
    fn value(&self, var: &VarId) -> Option<bool>;
}

impl Assignment for BTreeMap<VarId, bool> {
    fn value(&self, var: &VarId) -> Option<bool> {
        self.get(var).copied()
    }
}

impl Assignment for HashMap<VarId, bool> {
    fn value(&self, var: &VarId) -> Option<bool> {
        self.get(var).copied()
    }
}

impl<A: Assignment + ?Sized> Assignment for &A {
    fn value(&self, var: &VarId) -> Option<bool> {
        (**self).value(var)
    }
}

/// Evaluates the formula under a total assignment of its variables.
pub fn eval_dnf<A: Assignment + ?Sized>(dnf: &Dnf, assignment: &A) -> Result<bool, FormulaError> {
    let term_value = |c: &Conjunction| -> Result<bool, FormulaError> {
        // DNF term: AND of literals. CNF clause: OR of literals.
        let mut acc = !dnf.is_cnf();
        for lit in &c.literals {
            let bit = assignment.value(&lit.var).ok_or_else(|| FormulaError::MissingVariable(lit.var.clone()))?;
            if dnf.is_cnf() {
                acc |= lit.holds(bit);
            } else {
                acc &= lit.holds(bit);
            }
        }
        Ok(acc)
    };
    let mut acc = dnf.is_cnf();
    for c in &dnf.conjunctions {
        let v = term_value(c)?;
        if dnf.is_cnf() {
            acc &= v;
        } else {
            acc |= v;
        }
    }
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Restricted {
    False,
    True,
    Residual(Vec<Literal>),
}

pub fn restrict_conjunction<A: Assignment + ?Sized>(conj: &Conjunction, r: &A) -> Restricted {
    let mut residual = Vec::new();
    for lit in &conj.literals {
        match r.value(&lit.var) {
            Some(bit) if !lit.holds(bit) => return Restricted::False,
            Some(_) => {}
            None => residual.push(lit.clone()),
        }
    }
    if residual.is_empty() {
        Restricted::True
    } else {
        Restricted::Residual(residual)
    }
}

/// Outcome of scanning a DNF for its first conjunction not falsified.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LiveConjunction {
    /// The first non-falsified conjunction is already satisfied.
    Satisfied,
    /// Index of the first non-falsified conjunction; it still has free literals.
    At(usize),
    /// Every conjunction is falsified.
    Exhausted,
}

pub fn first_live_conjunction<A: Assignment + ?Sized>(dnf: &Dnf, r: &A) -> LiveConjunction {
    for (i, c) in dnf.conjunctions.iter().enumerate() {
        match restrict_conjunction(c, r) {
            Restricted::False => continue,
            Restricted::True => return LiveConjunction::Satisfied,
            Restricted::Residual(_) => return LiveConjunction::At(i),
        }
    }
    LiveConjunction::Exhausted
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn v(y1: u32, y2: u32, y3: u32) -> VarId {
        VarId::new(w("0"), [y1, y2, y3])
    }

    fn asg(pairs: &[(VarId, bool)]) -> BTreeMap<VarId, bool> {
        pairs.iter().cloned().collect()
    }

    #[test]
    fn single_word_space_has_eight_vars_in_lex_order() {
        let space = VarSpace::new(vec![1], 1, 1).with_words_per_scale(1);
        let vars = enumerate_vars(&space);
        assert_eq!(vars.len(), 8);
        assert_eq!(space.var_count(), 8);
        let mut sorted = vars.clone();
        sorted.sort();
        assert_eq!(vars, sorted);
        assert_eq!(vars[0], v(0, 0, 0));
        assert_eq!(vars[1], v(0, 0, 1));
        assert_eq!(vars[7], v(1, 1, 1));
    }

    #[test]
    fn empty_scale_range_is_empty() {
        let space = VarSpace::new(vec![], 1, 1);
        assert!(enumerate_vars(&space).is_empty());
    }

    #[test]
    fn two_words_give_sixteen_vars() {
        let space = VarSpace::new(vec![1], 1, 1);
        let vars = enumerate_vars(&space);
        assert_eq!(vars.len(), 16);
        assert!(vars[..8].iter().all(|x| x.b == w("0")));
        assert!(vars[8..].iter().all(|x| x.b == w("1")));
    }

    #[test]
    fn shorter_words_come_first() {
        let space = VarSpace::new(vec![2, 1], 1, 1);
        let vars = enumerate_vars(&space);
        assert_eq!(vars.len(), 16 + 4 * 64);
        let first_long = vars.iter().position(|x| x.b.len() == 2).unwrap();
        assert!(vars[..first_long].iter().all(|x| x.b.len() == 1));
        assert!(vars[first_long..].iter().all(|x| x.b.len() == 2));
        assert!(vars.iter().all(|x| space.contains(x)));
    }

    #[test]
    fn block_size_is_m_to_the_e2() {
        let space = VarSpace::new(vec![2], 1, 2).with_words_per_scale(1);
        let vars = enumerate_vars(&space);
        let blk = vars[0].block();
        assert_eq!(vars.iter().filter(|x| x.block() == blk).count(), 16);
        assert_eq!(space.block_size(4), 16);
    }

    #[test]
    fn block_projection() {
        assert_eq!(block_of(&v(1, 1, 0)), BlockId::new(w("0"), [1, 1]));
        assert_eq!(block_of(&v(1, 1, 1)), block_of(&v(1, 1, 0)));
        assert_ne!(block_of(&v(1, 0, 0)), block_of(&v(1, 1, 0)));
        assert_eq!(BlockId::new(w("0"), [1, 1]).group(), BlockId::new(w("0"), [1]));
    }

    #[test]
    fn invalid_spaces_are_rejected() {
        assert!(VarSpace::new(vec![1], 0, 1).validate().is_err());
        assert!(VarSpace::new(vec![0], 1, 1).validate().is_err());
        assert!(VarSpace::new(vec![1, 1], 1, 1).validate().is_err());
        assert!(VarSpace::new(vec![1], 1, 1).with_arity(1).validate().is_err());
        assert!(VarSpace::new(vec![16], 4, 2).validate().is_err());
        assert!(VarSpace::new(vec![3], 4, 2).validate().is_ok());
    }

    #[test]
    fn eval_constants() {
        let empty = BTreeMap::new();
        assert!(!eval_dnf(&Dnf::falsum(), &empty).unwrap());
        assert!(eval_dnf(&Dnf::dnf(vec![Conjunction::empty()]), &empty).unwrap());
        assert!(eval_dnf(&Dnf::cnf(vec![]), &empty).unwrap());
        assert!(!eval_dnf(&Dnf::cnf(vec![Conjunction::empty()]), &empty).unwrap());
    }

    #[test]
    fn eval_single_literal_and_missing() {
        let x = v(0, 0, 0);
        let f = Dnf::dnf(vec![Conjunction::new([Literal::pos(x.clone())]).unwrap()]);
        assert!(eval_dnf(&f, &asg(&[(x.clone(), true)])).unwrap());
        assert!(!eval_dnf(&f, &asg(&[(x.clone(), false)])).unwrap());
        assert_eq!(eval_dnf(&f, &BTreeMap::new()), Err(FormulaError::MissingVariable(x)));
    }

    #[test]
    fn contradictory_and_overwide_rejected() {
        let x = v(0, 0, 0);
        assert!(matches!(
            Conjunction::new([Literal::pos(x.clone()), Literal::neg(x.clone())]),
            Err(FormulaError::Contradictory(_))
        ));
        let c = Conjunction::new([Literal::pos(x.clone()), Literal::pos(x.clone())]).unwrap();
        assert_eq!(c.len(), 1);
        let wide = Conjunction::new([Literal::pos(v(0, 0, 0)), Literal::pos(v(0, 0, 1))]).unwrap();
        assert!(matches!(Dnf::new(vec![wide], 1, Form::Dnf), Err(FormulaError::TooWide { .. })));
    }

    #[test]
    fn restrict_conjunction_cases() {
        let (x, y) = (v(0, 0, 0), v(0, 1, 0));
        let c = Conjunction::new([Literal::pos(x.clone()), Literal::neg(y.clone())]).unwrap();
        assert_eq!(restrict_conjunction(&c, &asg(&[(x.clone(), true), (y.clone(), false)])), Restricted::True);
        assert_eq!(restrict_conjunction(&c, &asg(&[(y.clone(), true)])), Restricted::False);
        assert_eq!(
            restrict_conjunction(&c, &asg(&[(x.clone(), true)])),
            Restricted::Residual(vec![Literal::neg(y.clone())])
        );
        assert_eq!(restrict_conjunction(&Conjunction::empty(), &BTreeMap::new()), Restricted::True);
    }

    #[test]
    fn first_live_scan() {
        let (x, y, z) = (v(0, 0, 0), v(0, 1, 0), v(1, 0, 0));
        let r = asg(&[(x.clone(), false), (z.clone(), true)]);
        let lit = |l: Literal| Conjunction::new([l]).unwrap();
        let all_false = Dnf::dnf(vec![lit(Literal::pos(x.clone())), lit(Literal::neg(z.clone()))]);
        assert_eq!(first_live_conjunction(&all_false, &r), LiveConjunction::Exhausted);
        let first_true = Dnf::dnf(vec![lit(Literal::pos(z.clone())), lit(Literal::pos(y.clone()))]);
        assert_eq!(first_live_conjunction(&first_true, &r), LiveConjunction::Satisfied);
        let pattern = Dnf::dnf(vec![
            lit(Literal::pos(x.clone())),
            lit(Literal::pos(y.clone())),
            lit(Literal::pos(z.clone())),
        ]);
        assert_eq!(first_live_conjunction(&pattern, &r), LiveConjunction::At(1));
    }

    #[test]
    fn json_shapes() {
        let lit = Literal::neg(v(1, 0, 1));
        let j = serde_json::to_value(&lit).unwrap();
        assert_eq!(j, serde_json::json!({"b": "0", "y1": 1, "y2": 0, "y3": 1, "sign": "-"}));
        let back: Literal = serde_json::from_value(j).unwrap();
        assert_eq!(back, lit);

        let f = Dnf::dnf(vec![Conjunction::new([lit.clone(), Literal::pos(v(0, 0, 0))]).unwrap()]);
        let j = serde_json::to_value(&f).unwrap();
        assert_eq!(j["width"], 2);
        assert_eq!(j["polarity"], "dnf");
        let back: Dnf = serde_json::from_value(j).unwrap();
        assert_eq!(back, f);

        let space = VarSpace::new(vec![1, 2], 4, 2);
        let j = serde_json::to_value(&space).unwrap();
        assert_eq!(j, serde_json::json!({"scaleRange": [1, 2], "e1": 4, "e2": 2, "tupleArity": 3}));
        assert_eq!(serde_json::from_value::<VarSpace>(j).unwrap(), space);

        let bad = serde_json::json!({"conjunctions": [[{"b":"0","y1":0,"y2":0,"y3":0,"sign":"+"},
                                                      {"b":"0","y1":0,"y2":0,"y3":0,"sign":"-"}]], "width": 2});
        assert!(serde_json::from_value::<Dnf>(bad).is_err());
    }
}
