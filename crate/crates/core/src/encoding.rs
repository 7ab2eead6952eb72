//! The failure set `S` and the injection `ρ ↦ ⟨ρτσ, τ, β′, π′, γ′⟩`.
//!
//! For a failing ρ the evidence is the first `g(ρ)`-consistent first-phase
//! branch τ and, under it, the first depth-first second-phase branch
//! reaching `h` queries. Each round i contributes the live conjunction
//! `C_i`, its blocks `β_i`, the answers `π_i` and `γ_i`: the ρ-stars of
//! `β_i` occurring in `C_i` with the sign the first-stage constant
//! satisfies. `σ_i` gives `γ_i` the first-stage constant and every other
//! star of `β_i` the second-stage one, which satisfies all of `C_i` on
//! `β_i`. That is what lets the decoder find `C_i` again.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::formula::{restrict_conjunction, BlockId, Conjunction, Dnf, Restricted, VarId, Word};
use crate::restriction::{
    exact_probability_with, BlockLayout, BlockState, Polarity, Restriction, RestrictionError, RestrictionEvent,
    StarRate, VarState,
};
use crate::scalar::Probability;
use crate::tree::{CanonicalTreeParams, RoundTrace, Walker};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodingError {
    #[error("internal consistency: {0}")]
    Internal(String),
    #[error("malformed bundle: {0}")]
    Malformed(String),
    #[error(transparent)]
    Restriction(#[from] RestrictionError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EvidenceRound {
    pub conjunction: usize,
    pub blocks: Vec<BlockId>,
    pub queried: Vec<VarId>,
    pub answers: Vec<bool>,
    pub gamma: Vec<VarId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FailureEvidence {
    pub small_block_threshold: u64,
    pub tau: Vec<(VarId, bool)>,
    pub rounds: Vec<EvidenceRound>,
}

impl FailureEvidence {
    pub fn query_count(&self) -> usize {
        self.rounds.iter().map(|r| r.answers.len()).sum()
    }
}

fn working_dnf(dnf: &Dnf) -> Dnf {
    if dnf.is_cnf() {
        dnf.complement()
    } else {
        dnf.clone()
    }
}

fn gamma_of(conj: &Conjunction, blocks: &[BlockId], rho: &Restriction) -> Vec<VarId> {
    let fixed = rho.polarity().fixed();
    let mut out: Vec<VarId> = conj
        .literals()
        .iter()
        .filter(|l| {
            l.holds(fixed) && rho.state(&l.var) == Some(VarState::Star) && blocks.contains(&l.var.block())
        })
        .map(|l| l.var.clone())
        .collect();
    out.sort();
    out
}

/// `Some(evidence)` iff ρ ∈ S.
pub fn failure_set_member(dnf: &Dnf, rho: &Restriction, params: &CanonicalTreeParams) -> Option<FailureEvidence> {
    let mut w = Walker::new(dnf, rho, params.small_block_threshold);
    let (tau, rounds) = w.find_deep_branch(params.height_threshold)?;
    let work = w.dnf();
    let rounds = rounds
        .into_iter()
        .map(|RoundTrace { conjunction, blocks, queried, answers }| {
            let gamma = gamma_of(&work.conjunctions()[conjunction], &blocks, rho);
            EvidenceRound { conjunction, blocks, queried, answers, gamma }
        })
        .collect();
    Some(FailureEvidence { small_block_threshold: params.small_block_threshold, tau, rounds })
}

/// Bits written as a `0`/`1` string.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString(pub Vec<bool>);

impl BitString {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|b| **b).count()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            f.write_str(if *b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "bits\"{self}\"")
    }
}

impl FromStr for BitString {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(format!("bad bit {c:?}")),
            })
            .collect::<Result<_, _>>()
            .map(BitString)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CodeBundle {
    pub rho_tau_sigma: RestrictionEvent,
    /// One symbol per small-block variable in canonical order: its τ
    /// answer, or `-` if ρ did not star it.
    pub tau_code: String,
    /// Per queried block: a w-bit mask of the positions of `C_i` inside the
    /// block, then a bit that is 1 when the next block is in the same round.
    pub beta_prime: BitString,
    pub pi_prime: BitString,
    /// Per round: a w-bit mask of the positions of `C_i` in `γ_i`.
    pub gamma_prime: BitString,
    pub width: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CodeSizes {
    pub tau_bits: usize,
    pub beta_bits: usize,
    pub pi_bits: usize,
    pub gamma_bits: usize,
}

/// Smallest `b` with `2^b ≥ 3^n`, i.e. `⌈n·log₂3⌉`.
pub fn ternary_bits(n: usize) -> usize {
    let target = BigUint::from(3u32).pow(n as u32);
    let bits = target.bits() as usize;
    if BigUint::one() << (bits - 1) == target {
        bits - 1
    } else {
        bits
    }
}

impl CodeBundle {
    pub fn sizes(&self) -> CodeSizes {
        CodeSizes {
            tau_bits: ternary_bits(self.tau_code.chars().count()),
            beta_bits: self.beta_prime.len(),
            pi_bits: self.pi_prime.len(),
            gamma_bits: self.gamma_prime.len(),
        }
    }

    /// Number of blocks moved from * to filled by σ.
    pub fn block_changes(&self) -> usize {
        self.pi_prime.len()
    }

    /// Number of stars σ gives the first-stage constant.
    pub fn star_changes(&self) -> usize {
        self.gamma_prime.count_ones()
    }

    /// `(τ, β′, π′, γ′)`: the small codes that group members of S.
    pub fn witness_key(&self) -> (String, BitString, BitString, BitString) {
        (self.tau_code.clone(), self.beta_prime.clone(), self.pi_prime.clone(), self.gamma_prime.clone())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.push(match self.rho_tau_sigma.polarity() {
            Polarity::Normal => 0,
            Polarity::Flipped => 1,
        });
        put_u32(&mut out, self.width as u32);
        let vars: Vec<(&VarId, VarState)> = self.rho_tau_sigma.vars().collect();
        put_u32(&mut out, vars.len() as u32);
        for (v, _) in &vars {
            put_address(&mut out, &v.b, &v.y);
        }
        put_symbols(&mut out, vars.iter().map(|(_, s)| match s {
            VarState::Zero => 0,
            VarState::One => 1,
            VarState::Star => 2,
        }));
        let blocks: Vec<(&BlockId, BlockState)> = self.rho_tau_sigma.blocks().collect();
        put_u32(&mut out, blocks.len() as u32);
        for (b, s) in &blocks {
            put_address(&mut out, &b.b, &b.y);
            out.push(block_code(*s));
        }
        put_u32(&mut out, self.tau_code.chars().count() as u32);
        put_symbols(&mut out, self.tau_code.chars().map(|c| match c {
            '0' => 0,
            '1' => 1,
            _ => 2,
        }));
        for bits in [&self.beta_prime, &self.pi_prime, &self.gamma_prime] {
            put_u32(&mut out, bits.len() as u32);
            put_packed(&mut out, bits.0.iter().copied());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<CodeBundle, EncodingError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(MAGIC.len())? != MAGIC {
            return Err(EncodingError::Malformed("bad magic".into()));
        }
        let polarity = match r.u8()? {
            0 => Polarity::Normal,
            1 => Polarity::Flipped,
            p => return Err(EncodingError::Malformed(format!("bad polarity {p}"))),
        };
        let width = r.u32()? as usize;
        let n = r.u32()? as usize;
        let vars = (0..n).map(|_| r.address().map(|(b, y)| VarId::new(b, y))).collect::<Result<Vec<_>, _>>()?;
        let states = r.symbols(n)?;
        let mut event = Restriction::new(polarity, "rho·tau·sigma");
        for (v, s) in vars.into_iter().zip(states) {
            let st = match s {
                0 => VarState::Zero,
                1 => VarState::One,
                2 => VarState::Star,
                _ => return Err(EncodingError::Malformed("bad variable state".into())),
            };
            event.set(v, st);
        }
        let nb = r.u32()? as usize;
        for _ in 0..nb {
            let (b, y) = r.address()?;
            let s = block_from_code(r.u8()?)?;
            event.set_block(BlockId::new(b, y), s);
        }
        let nt = r.u32()? as usize;
        let tau_code = r
            .symbols(nt)?
            .into_iter()
            .map(|s| match s {
                0 => Ok('0'),
                1 => Ok('1'),
                2 => Ok('-'),
                _ => Err(EncodingError::Malformed("bad tau symbol".into())),
            })
            .collect::<Result<String, _>>()?;
        let mut fields = Vec::new();
        for _ in 0..3 {
            let len = r.u32()? as usize;
            fields.push(BitString(r.packed(len)?));
        }
        if r.pos != bytes.len() {
            return Err(EncodingError::Malformed("trailing bytes".into()));
        }
        let gamma_prime = fields.pop().unwrap();
        let pi_prime = fields.pop().unwrap();
        let beta_prime = fields.pop().unwrap();
        Ok(CodeBundle { rho_tau_sigma: event, tau_code, beta_prime, pi_prime, gamma_prime, width })
    }
}

const MAGIC: &[u8] = b"SWCB\x01";

fn put_u32(out: &mut Vec<u8>, x: u32) {
    out.extend_from_slice(&x.to_le_bytes());
}

fn put_address(out: &mut Vec<u8>, b: &Word, y: &[u32]) {
    out.push(b.len() as u8);
    out.extend_from_slice(&b.bits().to_le_bytes());
    out.push(y.len() as u8);
    for c in y {
        put_u32(out, *c);
    }
}

/// Two bits per symbol, four symbols per byte, low bits first.
fn put_symbols(out: &mut Vec<u8>, syms: impl Iterator<Item = u8>) {
    let mut byte = 0u8;
    let mut k = 0;
    for s in syms {
        byte |= (s & 3) << (2 * k);
        k += 1;
        if k == 4 {
            out.push(byte);
            byte = 0;
            k = 0;
        }
    }
    if k > 0 {
        out.push(byte);
    }
}

fn put_packed(out: &mut Vec<u8>, bits: impl Iterator<Item = bool>) {
    let mut byte = 0u8;
    let mut k = 0;
    for b in bits {
        byte |= (b as u8) << k;
        k += 1;
        if k == 8 {
            out.push(byte);
            byte = 0;
            k = 0;
        }
    }
    if k > 0 {
        out.push(byte);
    }
}

fn block_code(s: BlockState) -> u8 {
    match s {
        BlockState::AllOnes => 0,
        BlockState::ZeroBlock => 1,
        BlockState::AllZeros => 2,
        BlockState::OneBlock => 3,
        BlockState::StarBlock => 4,
        BlockState::Undetermined => 5,
    }
}

fn block_from_code(c: u8) -> Result<BlockState, EncodingError> {
    Ok(match c {
        0 => BlockState::AllOnes,
        1 => BlockState::ZeroBlock,
        2 => BlockState::AllZeros,
        3 => BlockState::OneBlock,
        4 => BlockState::StarBlock,
        5 => BlockState::Undetermined,
        _ => return Err(EncodingError::Malformed(format!("bad block state {c}"))),
    })
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], EncodingError> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.bytes.len());
        let end = end.ok_or_else(|| EncodingError::Malformed("truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, EncodingError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, EncodingError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn address(&mut self) -> Result<(Word, Vec<u32>), EncodingError> {
        let len = self.u8()? as u32;
        let bits = u64::from_le_bytes(self.take(8)?.try_into().unwrap());
        let b = Word::new(len, bits).map_err(|e| EncodingError::Malformed(e.to_string()))?;
        let arity = self.u8()? as usize;
        let y = (0..arity).map(|_| self.u32()).collect::<Result<_, _>>()?;
        Ok((b, y))
    }

    fn symbols(&mut self, n: usize) -> Result<Vec<u8>, EncodingError> {
        let raw = self.take(n.div_ceil(4))?;
        Ok((0..n).map(|i| raw[i / 4] >> (2 * (i % 4)) & 3).collect())
    }

    fn packed(&mut self, n: usize) -> Result<Vec<bool>, EncodingError> {
        let raw = self.take(n.div_ceil(8))?;
        Ok((0..n).map(|i| raw[i / 8] >> (i % 8) & 1 == 1).collect())
    }
}

fn position_mask(conj: &Conjunction, width: usize, pick: impl Fn(&VarId) -> bool) -> Vec<bool> {
    let mut mask = vec![false; width];
    for (i, l) in conj.literals().iter().enumerate() {
        if pick(&l.var) {
            mask[i] = true;
        }
    }
    mask
}

pub fn encode_failure(dnf: &Dnf, rho: &Restriction, ev: &FailureEvidence) -> Result<CodeBundle, EncodingError> {
    let work = working_dnf(dnf);
    let width = work.width();
    let polarity = rho.polarity();
    let (fixed, fill) = (VarState::from_bit(polarity.fixed()), VarState::from_bit(polarity.fill()));
    let mut event = rho.clone();
    let tau: BTreeMap<&VarId, bool> = ev.tau.iter().map(|(v, b)| (v, *b)).collect();
    for (v, b) in &tau {
        event.set((*v).clone(), VarState::from_bit(*b));
    }
    let mut sigma_domain: BTreeSet<VarId> = BTreeSet::new();
    let mut beta = Vec::new();
    let mut pi = Vec::new();
    let mut gamma = Vec::new();
    for round in &ev.rounds {
        let conj = work
            .conjunctions()
            .get(round.conjunction)
            .ok_or_else(|| EncodingError::Internal(format!("no conjunction {}", round.conjunction)))?;
        if conj.len() > width {
            return Err(EncodingError::Internal("conjunction wider than the formula width".into()));
        }
        for (j, blk) in round.blocks.iter().enumerate() {
            for (v, s) in rho.block_members(blk) {
                if s != VarState::Star {
                    continue;
                }
                if !sigma_domain.insert(v.clone()) {
                    return Err(EncodingError::Internal(format!("σ domains collide on {v}")));
                }
                event.set(v.clone(), if round.gamma.contains(v) { fixed } else { fill });
            }
            beta.extend(position_mask(conj, width, |v| &v.block() == blk));
            beta.push(j + 1 < round.blocks.len());
        }
        pi.extend(round.answers.iter().copied());
        gamma.extend(position_mask(conj, width, |v| round.gamma.contains(v)));
    }
    event.derive_block_states();
    event.set_stage("rho·tau·sigma");
    let tau_code = rho
        .vars()
        .filter(|(v, _)| v.scale() < ev.small_block_threshold)
        .map(|(v, s)| match (s, tau.get(v)) {
            (VarState::Star, Some(true)) => Ok('1'),
            (VarState::Star, Some(false)) => Ok('0'),
            (VarState::Star, None) => Err(EncodingError::Internal(format!("small star {v} missing from τ"))),
            _ => Ok('-'),
        })
        .collect::<Result<String, _>>()?;
    Ok(CodeBundle {
        rho_tau_sigma: event,
        tau_code,
        beta_prime: BitString(beta),
        pi_prime: BitString(pi),
        gamma_prime: BitString(gamma),
        width,
    })
}

pub fn decode_failure(
    dnf: &Dnf,
    bundle: &CodeBundle,
    params: &CanonicalTreeParams,
) -> Result<Restriction, EncodingError> {
    let malformed = |m: &str| EncodingError::Malformed(m.to_string());
    let work = working_dnf(dnf);
    let w = bundle.width;
    if w != work.width() {
        return Err(malformed("width does not match the formula"));
    }
    let polarity = bundle.rho_tau_sigma.polarity();
    let (fixed, fill) = (polarity.fixed(), polarity.fill());
    let mut r = bundle.rho_tau_sigma.clone();

    // records grouped into rounds by the continuation bit
    if !bundle.beta_prime.len().is_multiple_of(w + 1) {
        return Err(malformed("β′ length is not a multiple of w+1"));
    }
    let mut rounds: Vec<Vec<&[bool]>> = Vec::new();
    let mut open = false;
    for rec in bundle.beta_prime.0.chunks(w + 1) {
        if !open {
            rounds.push(Vec::new());
        }
        rounds.last_mut().unwrap().push(&rec[..w]);
        open = rec[w];
    }
    if open {
        return Err(malformed("β′ ends inside a round"));
    }
    if bundle.gamma_prime.len() != rounds.len() * w {
        return Err(malformed("γ′ does not have one mask per round"));
    }
    if bundle.pi_prime.len() != rounds.iter().map(Vec::len).sum::<usize>() {
        return Err(malformed("π′ does not have one answer per block"));
    }

    let mut sigma_domain: BTreeSet<VarId> = BTreeSet::new();
    let mut answers = bundle.pi_prime.0.iter();
    for (i, records) in rounds.iter().enumerate() {
        let conj = work
            .conjunctions()
            .iter()
            .find(|c| restrict_conjunction(c, &r) != Restricted::False)
            .ok_or_else(|| malformed("no live conjunction"))?;
        let lits = conj.literals();
        let gmask = &bundle.gamma_prime.0[i * w..(i + 1) * w];
        let mut gamma: BTreeSet<VarId> = BTreeSet::new();
        for (p, on) in gmask.iter().enumerate() {
            if *on {
                gamma.insert(lits.get(p).ok_or_else(|| malformed("γ′ position out of range"))?.var.clone());
            }
        }
        let mut covered = 0;
        for mask in records {
            let mut blocks = mask.iter().enumerate().filter(|(_, on)| **on).map(|(p, _)| {
                lits.get(p).map(|l| l.var.block()).ok_or_else(|| malformed("β′ position out of range"))
            });
            let blk = blocks.next().ok_or_else(|| malformed("empty β′ record"))??;
            for other in blocks {
                if other? != blk {
                    return Err(malformed("β′ record spans two blocks"));
                }
            }
            let domain: Vec<VarId> = r
                .block_members(&blk)
                .filter(|(v, s)| s.bit() == Some(fill) || gamma.contains(*v))
                .map(|(v, _)| v.clone())
                .collect();
            covered += gamma.iter().filter(|g| g.block() == blk).count();
            let rep = domain.first().ok_or_else(|| malformed("block has no σ domain"))?.clone();
            let answer = *answers.next().expect("length checked");
            for v in &domain {
                r.set(v.clone(), VarState::from_bit(if *v == rep { answer } else { fixed }));
                if !sigma_domain.insert(v.clone()) {
                    return Err(malformed("block decoded twice"));
                }
            }
        }
        if covered != gamma.len() {
            return Err(malformed("γ′ names a variable outside the round's blocks"));
        }
    }

    for v in &sigma_domain {
        r.set(v.clone(), VarState::Star);
    }
    let small: Vec<VarId> = r
        .vars()
        .filter(|(v, _)| v.scale() < params.small_block_threshold)
        .map(|(v, _)| v.clone())
        .collect();
    if small.len() != bundle.tau_code.chars().count() {
        return Err(malformed("τ code length does not match the small-block variables"));
    }
    for (v, c) in small.into_iter().zip(bundle.tau_code.chars()) {
        match c {
            '0' | '1' => r.set(v, VarState::Star),
            '-' => {}
            _ => return Err(malformed("bad τ symbol")),
        }
    }
    r.derive_block_states();
    r.set_stage("rho");
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RatioCertificate {
    #[serde(with = "crate::scalar::ratio_serde")]
    pub pr_rho_tau_sigma: BigRational,
    #[serde(with = "crate::scalar::ratio_serde")]
    pub pr_rho: BigRational,
    /// Smallest `(1-p)/p` over blocks of scale at least θ.
    #[serde(with = "crate::scalar::ratio_serde")]
    pub factor: BigRational,
    /// Number of filled blocks plus number of stars set to the fixed value.
    pub changes: u64,
    #[serde(with = "crate::scalar::ratio_serde")]
    pub bound: BigRational,
    pub holds: bool,
}

/// Checks `Pr(ρτσ) ≥ factor^changes · Pr(ρ)` exactly.
pub fn ratio_certificate(
    layout: &BlockLayout,
    rho: &Restriction,
    bundle: &CodeBundle,
    theta: u64,
    rate: StarRate,
) -> Result<RatioCertificate, EncodingError> {
    let pr_rho: BigRational = exact_probability_with(layout, rho, rate)?;
    let pr_rts: BigRational = exact_probability_with(layout, &bundle.rho_tau_sigma, rate)?;
    let factor = layout
        .scales()
        .into_iter()
        .filter(|m| *m >= theta)
        .map(|m| {
            let (num, den) = rate.rate(m);
            BigRational::from_ratio(den - num, num)
        })
        .min()
        .unwrap_or_else(BigRational::one);
    let changes = (bundle.block_changes() + bundle.star_changes()) as u64;
    let bound = Probability::pow(&factor, changes);
    let holds = pr_rts >= pr_rho.clone() * bound.clone();
    Ok(RatioCertificate { pr_rho_tau_sigma: pr_rts, pr_rho, factor, changes, bound, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{Literal, VarSpace};

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn var(b: &str, y1: u32, y2: u32, y3: u32) -> VarId {
        VarId::new(w(b), [y1, y2, y3])
    }

    fn rho_with(space: &VarSpace, stars: &[VarId]) -> Restriction {
        let mut r = Restriction::new(Polarity::Normal, "rho");
        for blk in BlockLayout::from(space).blocks() {
            for v in &blk.vars {
                r.set(v.clone(), VarState::One);
            }
            r.set_block(blk.id.clone(), BlockState::AllOnes);
        }
        for s in stars {
            r.set(s.clone(), VarState::Star);
            r.set_block(s.block(), BlockState::StarBlock);
        }
        r
    }

    fn tiny() -> VarSpace {
        VarSpace::new(vec![1], 1, 1).with_words_per_scale(1)
    }

    #[test]
    fn ternary_bit_lengths() {
        assert_eq!(ternary_bits(0), 0);
        assert_eq!(ternary_bits(1), 2);
        assert_eq!(ternary_bits(2), 4);
        assert_eq!(ternary_bits(8), 13);
        for n in 0..40usize {
            assert_eq!(ternary_bits(n), (n as f64 * 3f64.log2()).ceil() as usize);
        }
    }

    #[test]
    fn zero_threshold_makes_every_rho_fail() {
        let rho = rho_with(&tiny(), &[]);
        let ev = failure_set_member(&Dnf::falsum(), &rho, &CanonicalTreeParams::new(2, 0)).unwrap();
        assert!(ev.rounds.is_empty());
        let b = encode_failure(&Dnf::falsum(), &rho, &ev).unwrap();
        assert_eq!(decode_failure(&Dnf::falsum(), &b, &CanonicalTreeParams::new(2, 0)).unwrap(), rho);
        assert!(failure_set_member(&Dnf::falsum(), &rho, &CanonicalTreeParams::new(2, 1)).is_none());
    }

    #[test]
    fn single_conjunction_one_star_block() {
        let space = tiny();
        let x = var("0", 0, 0, 1);
        let rho = rho_with(&space, std::slice::from_ref(&x));
        let dnf = Dnf::dnf(vec![Conjunction::new([Literal::pos(x.clone())]).unwrap()]);
        let params = CanonicalTreeParams::new(2, 1);
        let ev = failure_set_member(&dnf, &rho, &params).unwrap();
        assert_eq!(ev.rounds.len(), 1);
        assert_eq!(ev.rounds[0].gamma, vec![x.clone()]);
        let b = encode_failure(&dnf, &rho, &ev).unwrap();
        assert_eq!(b.beta_prime.to_string(), "10");
        assert_eq!(b.pi_prime.to_string(), "0");
        assert_eq!(b.gamma_prime.to_string(), "1");
        // γ = {x}: x is set to 1, so its block reads all ones
        assert_eq!(b.rho_tau_sigma.state(&x), Some(VarState::One));
        assert_eq!(decode_failure(&dnf, &b, &params).unwrap(), rho);
        let back = CodeBundle::from_bytes(&b.to_bytes()).unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn negative_literals_give_empty_gamma() {
        let space = tiny();
        let x = var("0", 0, 0, 0);
        let y = var("0", 0, 0, 1);
        let rho = rho_with(&space, &[x.clone(), y.clone()]);
        let dnf = Dnf::dnf(vec![Conjunction::new([Literal::neg(x.clone()), Literal::neg(y.clone())]).unwrap()]);
        let params = CanonicalTreeParams::new(2, 1);
        let ev = failure_set_member(&dnf, &rho, &params).unwrap();
        assert!(ev.rounds[0].gamma.is_empty());
        let b = encode_failure(&dnf, &rho, &ev).unwrap();
        assert_eq!(b.gamma_prime.to_string(), "00");
        assert_eq!(b.beta_prime.to_string(), "110");
        assert_eq!(b.rho_tau_sigma.state(&x), Some(VarState::Zero));
        assert_eq!(b.rho_tau_sigma.state(&y), Some(VarState::Zero));
        assert_eq!(b.rho_tau_sigma.block_state(&x.block()), Some(BlockState::ZeroBlock));
        assert_eq!(decode_failure(&dnf, &b, &params).unwrap(), rho);
    }

    #[test]
    fn ratio_of_one_star_change_at_scale_four() {
        let space = VarSpace::new(vec![2], 1, 1).with_words_per_scale(1);
        let x = var("00", 0, 0, 0);
        let rho = rho_with(&space, std::slice::from_ref(&x));
        let layout = BlockLayout::from(&space);
        // identical event: ratio 1, bound 1
        let same = CodeBundle {
            rho_tau_sigma: rho.clone(),
            tau_code: String::new(),
            beta_prime: BitString::default(),
            pi_prime: BitString::default(),
            gamma_prime: BitString::default(),
            width: 1,
        };
        let c = ratio_certificate(&layout, &rho, &same, 4, StarRate::PerScale).unwrap();
        assert_eq!(c.pr_rho, c.pr_rho_tau_sigma);
        assert_eq!(c.bound, BigRational::one());
        assert!(c.holds);
        // x: * → 1 and its block *-block → all ones, ratio (3/4)/(1/4 · 1/4)
        let mut moved = rho.clone();
        moved.set(x.clone(), VarState::One);
        moved.set_block(x.block(), BlockState::AllOnes);
        let pr_moved: BigRational = exact_probability_with(&layout, &moved, StarRate::PerScale).unwrap();
        let ratio = pr_moved / c.pr_rho.clone();
        assert_eq!(ratio, BigRational::from_ratio(12, 1));
        // a lone star change (block state kept) is exactly 3
        let mut star_only = rho_with(&space, &[x.clone(), var("00", 0, 0, 1)]);
        let before: BigRational = exact_probability_with(&layout, &star_only, StarRate::PerScale).unwrap();
        star_only.set(var("00", 0, 0, 1), VarState::One);
        let after: BigRational = exact_probability_with(&layout, &star_only, StarRate::PerScale).unwrap();
        assert_eq!(after / before, BigRational::from_ratio(3, 1));
        assert_eq!(c.factor, BigRational::from_ratio(3, 1));
    }

    #[test]
    fn bitstring_json() {
        let b: BitString = "0110".parse().unwrap();
        assert_eq!(serde_json::to_string(&b).unwrap(), "\"0110\"");
        assert!("012".parse::<BitString>().is_err());
    }

    #[test]
    fn corrupt_bytes_rejected() {
        assert!(CodeBundle::from_bytes(b"nope").is_err());
        let rho = rho_with(&tiny(), &[]);
        let ev = failure_set_member(&Dnf::falsum(), &rho, &CanonicalTreeParams::new(2, 0)).unwrap();
        let mut bytes = encode_failure(&Dnf::falsum(), &rho, &ev).unwrap().to_bytes();
        bytes.push(0);
        assert!(CodeBundle::from_bytes(&bytes).is_err());
    }
}
