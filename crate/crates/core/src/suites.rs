//! Exhaustive checks over every restriction of a small space: the canonical
//! tree decides the formula, and the failure-set encoding is an injection
//! with the claimed sizes and probability ratios.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoding::{decode_failure, encode_failure, failure_set_member, ratio_certificate, ternary_bits};
use crate::experiments::{ExperimentConfig, ExperimentError};
use crate::restriction::{enumerate_restrictions, Restriction};
use crate::scalar::ratio_serde;
use crate::tree::{canonical_tree, verify_tree_decides, CanonicalTreeParams};
use crate::Polarity;

/// Largest number of free variables a tree is checked against.
pub const TREE_CHECK_BUDGET: usize = 16;

fn enumerate(cfg: &ExperimentConfig) -> Result<Vec<(Restriction, BigRational)>, ExperimentError> {
    Ok(enumerate_restrictions::<BigRational>(&cfg.layout(), Polarity::Normal, cfg.star_rate, cfg.enumeration_budget)?
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TreeSuiteReport {
    pub config_hash: String,
    pub master_seed: u64,
    pub small_block_threshold: u64,
    pub enumerated: usize,
    pub decided: usize,
    pub repeats: usize,
    pub pass: bool,
}

/// Builds `T(ψ, ρ)` for every ρ and checks it against ψ on every completion
/// of `g(ρ)`.
pub fn tree_suite(cfg: &ExperimentConfig) -> Result<TreeSuiteReport, ExperimentError> {
    cfg.validate()?;
    let dnf = cfg.dnf()?;
    let all = enumerate(cfg)?;
    let params = CanonicalTreeParams::new(cfg.params.small_block_threshold, 0);
    let checks = all
        .par_iter()
        .map(|(rho, _)| {
            let t = canonical_tree(&dnf, rho, &params).tree;
            let ok = verify_tree_decides(&t, &dnf, rho, TREE_CHECK_BUDGET)
                .map_err(|e| ExperimentError::Internal(e.to_string()))?;
            Ok((ok, t.no_repeats()))
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    let decided = checks.iter().filter(|(ok, _)| *ok).count();
    let repeats = checks.iter().filter(|(_, nr)| !*nr).count();
    Ok(TreeSuiteReport {
        config_hash: cfg.hash(),
        master_seed: cfg.master_seed,
        small_block_threshold: params.small_block_threshold,
        enumerated: all.len(),
        decided,
        repeats,
        pass: decided == all.len() && repeats == 0,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InjectionReport {
    pub config_hash: String,
    pub master_seed: u64,
    pub h: usize,
    pub small_block_threshold: u64,
    pub enumerated: usize,
    /// Members of the failure set S.
    pub members: usize,
    pub distinct_codes: usize,
    pub roundtrip_failures: usize,
    pub size_failures: usize,
    pub certificate_failures: usize,
    #[serde(with = "ratio_serde")]
    pub total_mass: BigRational,
    pub witness_classes: usize,
    #[serde(with = "ratio_serde")]
    pub max_witness_mass: BigRational,
    pub pass: bool,
}

impl InjectionReport {
    pub fn injective(&self) -> bool {
        self.distinct_codes == self.members && self.roundtrip_failures == 0
    }

    pub fn accounting_ok(&self) -> bool {
        self.total_mass.is_one() && self.certificate_failures == 0 && self.max_witness_mass <= BigRational::one()
    }
}

struct MemberCheck {
    bytes: Vec<u8>,
    roundtrip: bool,
    sizes_ok: bool,
    holds: bool,
    key: (String, String, String, String),
    pr_rts: BigRational,
}

/// Encodes every member of S, decodes it back, and checks sizes, ratio
/// certificates and the per-witness mass.
pub fn injection_suite(cfg: &ExperimentConfig) -> Result<InjectionReport, ExperimentError> {
    cfg.validate()?;
    let dnf = cfg.dnf()?;
    let layout = cfg.layout();
    let all = enumerate(cfg)?;
    let params = cfg.params;
    let h = params.height_threshold;
    let w = dnf.width();
    let theta = params.small_block_threshold;
    let total_mass: BigRational = all.iter().map(|(_, p)| p.clone()).sum();
    let checks = all
        .par_iter()
        .filter_map(|(rho, _)| failure_set_member(&dnf, rho, &params).map(|ev| (rho, ev)))
        .map(|(rho, ev)| {
            let enc = |e: crate::encoding::EncodingError| ExperimentError::Internal(e.to_string());
            let bundle = encode_failure(&dnf, rho, &ev).map_err(enc)?;
            let roundtrip = decode_failure(&dnf, &bundle, &params).map(|r| &r == rho).unwrap_or(false);
            let s = bundle.sizes();
            let small = rho.vars().filter(|(v, _)| v.scale() < theta).count();
            let tau_ok = small > h || s.tau_bits <= ternary_bits(h);
            let sizes_ok = s.pi_bits <= h && s.beta_bits <= h * (w + 1) && s.gamma_bits <= h * w && tau_ok;
            let cert = ratio_certificate(&layout, rho, &bundle, theta, cfg.star_rate).map_err(enc)?;
            let (t, b, p, g) = bundle.witness_key();
            Ok(MemberCheck {
                bytes: bundle.to_bytes(),
                roundtrip,
                sizes_ok,
                holds: cert.holds,
                key: (t, b.to_string(), p.to_string(), g.to_string()),
                pr_rts: cert.pr_rho_tau_sigma,
            })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    let distinct: BTreeSet<&[u8]> = checks.iter().map(|c| c.bytes.as_slice()).collect();
    let mut mass: BTreeMap<&(String, String, String, String), BigRational> = BTreeMap::new();
    for c in &checks {
        *mass.entry(&c.key).or_insert_with(BigRational::zero) += &c.pr_rts;
    }
    let max_witness_mass = mass.values().max().cloned().unwrap_or_else(BigRational::zero);
    let mut report = InjectionReport {
        config_hash: cfg.hash(),
        master_seed: cfg.master_seed,
        h,
        small_block_threshold: theta,
        enumerated: all.len(),
        members: checks.len(),
        distinct_codes: distinct.len(),
        roundtrip_failures: checks.iter().filter(|c| !c.roundtrip).count(),
        size_failures: checks.iter().filter(|c| !c.sizes_ok).count(),
        certificate_failures: checks.iter().filter(|c| !c.holds).count(),
        total_mass,
        witness_classes: mass.len(),
        max_witness_mass,
        pass: false,
    };
    report.pass = report.injective() && report.accounting_ok() && report.size_failures == 0;
    Ok(report)
}
