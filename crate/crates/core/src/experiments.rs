//! Failure-probability measurements and the union-bound expressions.

use std::io::Write;

use astro_float::{BigFloat, Consts, RoundingMode};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::encoding::failure_set_member;
use crate::formula::{enumerate_vars, Conjunction, Dnf, FormulaError, Literal, VarSpace};
use crate::restriction::{
    enumerate_restrictions, sample_layout, BlockLayout, Polarity, RestrictionError, StarRate,
};
use crate::rng::SeedStream;
use crate::scalar::{ratio_serde, ratio_string};
use crate::schema::RatioText;
use crate::tree::CanonicalTreeParams;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("internal: {0}")]
    Internal(String),
    #[error(transparent)]
    Restriction(#[from] RestrictionError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "camelCase")]
pub enum DnfSource {
    Fixed(Dnf),
    Random { width: usize, count: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Montecarlo,
    Both,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Montecarlo => "montecarlo",
            Mode::Both => "both",
        }
    }
}

fn default_budget() -> u64 {
    1_000_000
}

fn default_log2n() -> u64 {
    64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub space: VarSpace,
    pub dnf: DnfSource,
    pub params: CanonicalTreeParams,
    pub trials: u64,
    pub master_seed: u64,
    pub mode: Mode,
    #[serde(with = "ratio_serde")]
    #[schemars(with = "RatioText")]
    pub delta: BigRational,
    #[serde(with = "ratio_serde")]
    #[schemars(with = "RatioText")]
    pub epsilon: BigRational,
    /// Bounds are evaluated at `N = 2^nominalLog2N`.
    #[serde(default = "default_log2n")]
    pub nominal_log2_n: u64,
    #[serde(default = "default_budget")]
    pub enumeration_budget: u64,
    #[serde(default)]
    pub star_rate: StarRate,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.space.validate()?;
        self.params.validate().map_err(ExperimentError::Config)?;
        self.star_rate.validate()?;
        if self.trials == 0 && self.mode != Mode::Exact {
            return Err(ExperimentError::Config("trials must be at least 1".into()));
        }
        if self.delta.is_negative() || !self.epsilon.is_positive() {
            return Err(ExperimentError::Config("need delta >= 0 and epsilon > 0".into()));
        }
        Ok(())
    }

    /// `12δ < ε`. Reported, never enforced.
    pub fn delta_epsilon_ok(&self) -> bool {
        self.delta.clone() * BigRational::from_integer(12.into()) < self.epsilon
    }

    pub fn dnf(&self) -> Result<Dnf, ExperimentError> {
        match &self.dnf {
            DnfSource::Fixed(d) => Ok(d.clone()),
            DnfSource::Random { width, count, seed } => random_dnf(&self.space, *width, *count, *seed),
        }
    }

    pub fn layout(&self) -> BlockLayout {
        BlockLayout::from(&self.space)
    }

    /// First 16 hex digits of SHA-256 over the config's JSON.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// `count` conjunctions of `width` distinct variables with random signs.
pub fn random_dnf(space: &VarSpace, width: usize, count: usize, seed: u64) -> Result<Dnf, ExperimentError> {
    let vars = enumerate_vars(space);
    if width > vars.len() {
        return Err(ExperimentError::Config(format!("width {width} exceeds {} variables", vars.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let conj = (0..count)
        .map(|_| {
            let mut idx = sample(&mut rng, vars.len(), width).into_vec();
            idx.sort_unstable();
            let lits = idx.into_iter().map(|i| {
                if rng.gen::<bool>() {
                    Literal::pos(vars[i].clone())
                } else {
                    Literal::neg(vars[i].clone())
                }
            });
            Conjunction::new(lits.collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Dnf::new(conj, width, crate::formula::Form::Dnf)?)
}

/// `Pr[ρ ∈ S]`, exactly, by enumeration.
pub fn exact_failure_rate(cfg: &ExperimentConfig) -> Result<BigRational, ExperimentError> {
    let dnf = cfg.dnf()?;
    let outcomes: Vec<_> =
        enumerate_restrictions::<BigRational>(&cfg.layout(), Polarity::Normal, cfg.star_rate, cfg.enumeration_budget)?
            .collect();
    Ok(outcomes
        .par_iter()
        .filter(|(rho, _)| failure_set_member(&dnf, rho, &cfg.params).is_some())
        .map(|(_, p)| p.clone())
        .reduce(BigRational::zero, |a, b| a + b))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MonteCarlo {
    pub estimate: f64,
    pub stderr: f64,
    pub trials: u64,
    pub hits: u64,
}

/// Trial `t` samples with `SeedStream::new(masterSeed, t)`.
pub fn monte_carlo_failure_rate(cfg: &ExperimentConfig) -> Result<MonteCarlo, ExperimentError> {
    if cfg.trials == 0 {
        return Err(ExperimentError::Config("trials must be at least 1".into()));
    }
    let dnf = cfg.dnf()?;
    let layout = cfg.layout();
    let hits = (0..cfg.trials)
        .into_par_iter()
        .filter(|&t| {
            let rho = sample_layout(&layout, &SeedStream::new(cfg.master_seed, t), Polarity::Normal, cfg.star_rate);
            failure_set_member(&dnf, &rho, &cfg.params).is_some()
        })
        .count() as u64;
    let p = hits as f64 / cfg.trials as f64;
    Ok(MonteCarlo { estimate: p, stderr: (p * (1.0 - p) / cfg.trials as f64).sqrt(), trials: cfg.trials, hits })
}

const PREC: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;

fn bf_ratio(r: &BigRational) -> BigFloat {
    let n = BigFloat::parse(&r.numer().to_string(), astro_float::Radix::Dec, PREC, RM, &mut Consts::new().unwrap());
    let d = BigFloat::parse(&r.denom().to_string(), astro_float::Radix::Dec, PREC, RM, &mut Consts::new().unwrap());
    n.div(&d, PREC, RM)
}

fn bf_to_f64(x: &BigFloat) -> f64 {
    if x.is_inf_pos() {
        return f64::INFINITY;
    }
    if x.is_inf_neg() {
        return f64::NEG_INFINITY;
    }
    x.to_string().parse().unwrap_or(f64::NAN)
}

/// Both bounds as base-2 logarithms, evaluated with 256-bit floats.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundValues {
    pub log2_union_bound: String,
    pub log2_target_bound: String,
    pub union_bound: String,
    pub target_bound: String,
    /// The union bound is at least 1.
    pub vacuous: bool,
    pub union_below_target: bool,
    pub delta_epsilon_ok: bool,
}

struct Log2Bounds {
    union: BigFloat,
    target: BigFloat,
}

fn log2_bounds(log2_n: u64, delta: &BigRational, epsilon: &BigRational) -> Log2Bounds {
    let mut cc = Consts::new().expect("constant cache");
    let two = BigFloat::from_u64(2, PREC);
    let n = BigFloat::from_u64(log2_n, PREC);
    let eps = bf_ratio(epsilon);
    let delta = bf_ratio(delta);
    // N^ε = 2^{nε}
    let n_eps = two.pow(&n.mul(&eps, PREC, RM), PREC, RM, &mut cc);
    let twelve_e = BigFloat::from_u64(12, PREC).mul(&cc.e(PREC, RM), PREC, RM);
    let a = twelve_e.log2(PREC, RM, &mut cc);
    let b = delta.mul(&n, PREC, RM);
    let small = two
        .pow(&n.mul(&eps, PREC, RM).div(&BigFloat::from_u64(12, PREC), PREC, RM), PREC, RM, &mut cc)
        .sub(&BigFloat::from_u64(1, PREC), PREC, RM);
    let target = n_eps.neg();
    let union = if small.is_positive() && !small.is_zero() {
        let c = small.log2(PREC, RM, &mut cc);
        n_eps.div(&two, PREC, RM).mul(&a.add(&b, PREC, RM).sub(&c, PREC, RM), PREC, RM)
    } else {
        BigFloat::from_f64(f64::INFINITY, PREC)
    };
    Log2Bounds { union, target }
}

/// `2^l` in decimal scientific notation with 12 significant digits.
fn pow2_decimal(l: &BigFloat) -> String {
    if l.is_inf_pos() {
        return "inf".into();
    }
    let mut cc = Consts::new().expect("constant cache");
    let log10_2 = BigFloat::from_u64(2, PREC).log10(PREC, RM, &mut cc);
    let t = l.mul(&log10_2, PREC, RM);
    let e = t.floor();
    let frac = t.sub(&e, PREC, RM);
    let mant = BigFloat::from_u64(10, PREC).pow(&frac, PREC, RM, &mut cc);
    let mut m = bf_to_f64(&mant);
    let mut exp = match bf_to_f64(&e) {
        x if x.abs() < 9.0e15 => format!("{}", x as i64),
        _ => e.to_string(),
    };
    if m >= 9.9999999999995 {
        // rounding pushed the mantissa to 10
        m = 1.0;
        exp = format!("{}", exp.parse::<i64>().map(|v| v + 1).unwrap_or(0));
    }
    format!("{m:.11}e{exp}")
}

pub fn bound_values(cfg: &ExperimentConfig) -> BoundValues {
    bound_values_at(cfg.nominal_log2_n, &cfg.delta, &cfg.epsilon, cfg.delta_epsilon_ok())
}

pub fn bound_values_at(log2_n: u64, delta: &BigRational, epsilon: &BigRational, de_ok: bool) -> BoundValues {
    let b = log2_bounds(log2_n, delta, epsilon);
    let zero = BigFloat::from_u64(0, PREC);
    let vacuous = b.union.cmp(&zero).is_none_or(|o| o >= 0);
    let below = b.union.cmp(&b.target).is_some_and(|o| o < 0);
    BoundValues {
        log2_union_bound: fmt_log2(&b.union),
        log2_target_bound: fmt_log2(&b.target),
        union_bound: pow2_decimal(&b.union),
        target_bound: pow2_decimal(&b.target),
        vacuous,
        union_below_target: below,
        delta_epsilon_ok: de_ok,
    }
}

fn fmt_log2(x: &BigFloat) -> String {
    let f = bf_to_f64(x);
    if f.is_finite() {
        format!("{f:.6}")
    } else if x.is_inf_pos() {
        "inf".into()
    } else {
        x.to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExperimentResult {
    pub config_hash: String,
    pub master_seed: u64,
    pub mode: Mode,
    pub h: usize,
    pub w: usize,
    #[serde(with = "opt_ratio")]
    pub exact: Option<BigRational>,
    pub monte_carlo: Option<MonteCarlo>,
    pub bounds: BoundValues,
}

mod opt_ratio {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Option<BigRational>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&crate::scalar::ratio_string(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigRational>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| crate::scalar::parse_ratio(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, ExperimentError> {
    cfg.validate()?;
    let dnf = cfg.dnf()?;
    let exact = match cfg.mode {
        Mode::Exact | Mode::Both => Some(exact_failure_rate(cfg)?),
        Mode::Montecarlo => None,
    };
    let monte_carlo = match cfg.mode {
        Mode::Montecarlo | Mode::Both => Some(monte_carlo_failure_rate(cfg)?),
        Mode::Exact => None,
    };
    Ok(ExperimentResult {
        config_hash: cfg.hash(),
        master_seed: cfg.master_seed,
        mode: cfg.mode,
        h: cfg.params.height_threshold,
        w: dnf.width(),
        exact,
        monte_carlo,
        bounds: bound_values(cfg),
    })
}

/// One report line. Every field is already formatted, so the CSV and JSON
/// forms carry identical values.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportRow {
    pub config_hash: String,
    pub mode: String,
    pub h: String,
    pub w: String,
    pub exact_p: String,
    pub exact_q: String,
    pub mc_estimate: String,
    pub mc_stderr: String,
    pub trials: String,
    pub union_bound: String,
    pub target_bound: String,
    pub vacuous_flag: String,
    pub master_seed: String,
}

pub const REPORT_COLUMNS: [&str; 13] = [
    "config_hash",
    "mode",
    "h",
    "w",
    "exact_p",
    "exact_q",
    "mc_estimate",
    "mc_stderr",
    "trials",
    "union_bound",
    "target_bound",
    "vacuous_flag",
    "master_seed",
];

impl From<&ExperimentResult> for ReportRow {
    fn from(r: &ExperimentResult) -> Self {
        let (p, q) = match &r.exact {
            Some(x) => (x.numer().to_string(), x.denom().to_string()),
            None => (String::new(), String::new()),
        };
        let (est, se, trials) = match &r.monte_carlo {
            Some(m) => (format!("{:.10}", m.estimate), format!("{:.10}", m.stderr), m.trials.to_string()),
            None => (String::new(), String::new(), String::new()),
        };
        ReportRow {
            config_hash: r.config_hash.clone(),
            mode: r.mode.as_str().into(),
            h: r.h.to_string(),
            w: r.w.to_string(),
            exact_p: p,
            exact_q: q,
            mc_estimate: est,
            mc_stderr: se,
            trials,
            union_bound: r.bounds.union_bound.clone(),
            target_bound: r.bounds.target_bound.clone(),
            vacuous_flag: r.bounds.vacuous.to_string(),
            master_seed: r.master_seed.to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

pub fn report_emit<W: Write>(results: &[ExperimentResult], format: ReportFormat, out: W) -> Result<(), ExperimentError> {
    let rows: Vec<ReportRow> = results.iter().map(ReportRow::from).collect();
    match format {
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
            w.write_record(REPORT_COLUMNS)?;
            for r in &rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        ReportFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, &rows)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

/// Exact rate as a float, for comparisons in reports.
pub fn rate_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn ratio_text(r: &BigRational) -> String {
    ratio_string(r)
}
