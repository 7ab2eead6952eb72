use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use switchlab::experiments::{report_emit, run_experiment, ExperimentConfig, ExperimentError, ReportFormat};
use switchlab::growth::{default_ell, growth_report, write_growth_csv, GrowthError, DEFAULT_BIT_BUDGET};
use switchlab::oracle::{build_oracle, verify_equivalence, FormulaFamily, OracleBuild, OracleConfig, OracleError};
use switchlab::restriction::{extend_g, sample_layout, RestrictionError};
use switchlab::schema::{config_schema, CONFIG_KINDS};
use switchlab::suites::{injection_suite, tree_suite};
use switchlab::tree::{canonical_tree, CanonicalTreeParams};
use switchlab::{Polarity, SeedStream};

#[derive(Parser, Debug)]
#[command(name = "switchlab", version, about = "Random restrictions, switching-lemma encodings and oracle construction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Config file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config's masterSeed.
    #[arg(long, global = true, env = "SWITCHLAB_SEED")]
    seed: Option<u64>,
    /// Output path; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads for enumeration and sampling.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Bit budget: the size cap for growth values, or log2 of the
    /// enumeration budget for exhaustive commands.
    #[arg(long, global = true)]
    budget: Option<u64>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw one restriction and its g-extension.
    Sample {
        #[arg(long, default_value_t = 0)]
        trial: u64,
        #[arg(long, value_enum, default_value_t = PolarityArg::Normal)]
        polarity: PolarityArg,
    },
    /// Canonical decision tree of the config's formula under one sampled
    /// restriction, or the exhaustive decision check with --exhaustive.
    Tree {
        #[arg(long, default_value_t = 0)]
        trial: u64,
        #[arg(long)]
        exhaustive: bool,
    },
    /// Encode and decode every member of the failure set.
    EncodeRoundtrip,
    /// Exact and Monte-Carlo failure rates with the bound values.
    SwitchExperiment,
    /// Checkpoints for the fractional-exponential functions.
    Growth {
        #[arg(long)]
        k: u32,
        /// Inclusive range `lo..hi`.
        #[arg(long, default_value = "3..20")]
        range: String,
        #[arg(long)]
        ell: Option<u32>,
        #[arg(long)]
        m: Option<u32>,
    },
    /// Run both restriction rounds and the completion.
    BuildOracle {
        /// Also write the packed table here, with a `.json` sidecar.
        #[arg(long)]
        bitmap: Option<PathBuf>,
        /// Also write the stage log here as JSON lines.
        #[arg(long)]
        stage_log: Option<PathBuf>,
    },
    /// Check the target equivalence on a built table.
    VerifyOracle {
        /// Output of build-oracle; built from the config when absent.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Print the JSON schema of the config files.
    Schema {
        #[arg(long)]
        kind: Option<String>,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum PolarityArg {
    Normal,
    Flipped,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{message}")]
    Config { message: String, instance_path: Option<String>, schema_path: Option<String> },
    #[error("{0}")]
    Verification(String),
    #[error("{0}")]
    Exhausted(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        CliError::Config { message: message.into(), instance_path: None, schema_path: None }
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Verification(_) | CliError::Runtime(_) => 1,
            CliError::Config { .. } => 2,
            CliError::Exhausted(_) => 3,
        }
    }

    fn to_json(&self) -> Value {
        let kind = match self {
            CliError::Config { .. } => "config",
            CliError::Verification(_) => "verification",
            CliError::Exhausted(_) => "exhausted",
            CliError::Runtime(_) => "runtime",
        };
        let mut v = json!({ "error": kind, "exitCode": self.code(), "message": self.to_string() });
        if let CliError::Config { instance_path, schema_path, .. } = self {
            if let Some(p) = instance_path {
                v["instancePath"] = json!(p);
            }
            if let Some(p) = schema_path {
                v["schemaPath"] = json!(p);
            }
        }
        v
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Config(_) | ExperimentError::Formula(_) => CliError::config(e.to_string()),
            ExperimentError::Restriction(RestrictionError::BudgetExceeded { .. }) => {
                CliError::Exhausted(e.to_string())
            }
            ExperimentError::Restriction(RestrictionError::InvalidRate { .. }) => CliError::config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<GrowthError> for CliError {
    fn from(e: GrowthError) -> Self {
        match e {
            GrowthError::BudgetExceeded { .. } => CliError::Exhausted(e.to_string()),
            GrowthError::BadIndex(_) => CliError::config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Config(_) | OracleError::Formula(_) => CliError::config(e.to_string()),
            OracleError::TriesExhausted { .. } | OracleError::Exhaustion { .. } => CliError::Exhausted(e.to_string()),
            OracleError::Restriction(RestrictionError::InsufficientStarBlocks { .. }) => {
                CliError::Exhausted(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

/// Reads a config, checks it against the schema of `kind`, then parses it.
fn load_config<T: DeserializeOwned>(path: Option<&Path>, kind: &str) -> Result<T, CliError> {
    let path = path.ok_or_else(|| CliError::config("this command needs --config"))?;
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let schema = config_schema()[kind].clone();
    let compiled = jsonschema::JSONSchema::compile(&schema).map_err(|e| CliError::Runtime(e.to_string()))?;
    if let Err(mut errors) = compiled.validate(&value) {
        if let Some(e) = errors.next() {
            return Err(CliError::Config {
                message: format!("{}: {e}", path.display()),
                instance_path: Some(e.instance_path.to_string()),
                schema_path: Some(e.schema_path.to_string()),
            });
        }
    }
    serde_json::from_value(value).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, bytes)?,
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>, CliError> {
    let mut b = serde_json::to_vec_pretty(v).map_err(|e| CliError::Runtime(e.to_string()))?;
    b.push(b'\n');
    Ok(b)
}

/// Header line and value line for a flat JSON object.
fn flat_csv(v: &Value) -> Result<Vec<u8>, CliError> {
    let obj = v.as_object().ok_or_else(|| CliError::Runtime("report is not an object".into()))?;
    let mut head = Vec::new();
    let mut vals = Vec::new();
    for (k, x) in obj {
        let cell = match x {
            Value::String(s) => s.clone(),
            Value::Null => String::new(),
            Value::Object(_) | Value::Array(_) => {
                return Err(CliError::config("csv output needs a flat report; use --format json"))
            }
            other => other.to_string(),
        };
        head.push(k.clone());
        vals.push(cell);
    }
    Ok(format!("{}\n{}\n", head.join(","), vals.join(",")).into_bytes())
}

fn report<T: Serialize>(cli: &Cli, v: &T) -> Result<(), CliError> {
    let bytes = match cli.format.unwrap_or(Format::Json) {
        Format::Json => json_bytes(v)?,
        Format::Csv => flat_csv(&serde_json::to_value(v).map_err(|e| CliError::Runtime(e.to_string()))?)?,
    };
    emit(cli.out.as_deref(), &bytes)
}

fn experiment_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg: ExperimentConfig = load_config(cli.config.as_deref(), "experimentConfig")?;
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    if let Some(bits) = cli.budget {
        cfg.enumeration_budget = 1u64.checked_shl(bits.min(63) as u32).unwrap_or(u64::MAX);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn oracle_config(cli: &Cli) -> Result<OracleConfig, CliError> {
    let mut cfg: OracleConfig = load_config(cli.config.as_deref(), "oracleConfig")?;
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_range(s: &str) -> Result<std::ops::RangeInclusive<u64>, CliError> {
    let bad = || CliError::config(format!("range must look like 3..20, got {s:?}"));
    let (lo, hi) = s.split_once("..").ok_or_else(bad)?;
    let hi = hi.strip_prefix('=').unwrap_or(hi);
    let (lo, hi): (u64, u64) = (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?);
    if lo > hi {
        return Err(bad());
    }
    Ok(lo..=hi)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::config("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    match &cli.command {
        Command::Sample { trial, polarity } => {
            let cfg = experiment_config(cli)?;
            let pol = match polarity {
                PolarityArg::Normal => Polarity::Normal,
                PolarityArg::Flipped => Polarity::Flipped,
            };
            let rho = sample_layout(&cfg.layout(), &SeedStream::new(cfg.master_seed, *trial), pol, cfg.star_rate);
            let g = extend_g(&rho).map_err(|e| CliError::Runtime(e.to_string()))?;
            let out = json!({
                "masterSeed": cfg.master_seed,
                "trial": trial,
                "stars": rho.stars().count(),
                "rho": rho,
                "g": g,
            });
            report(cli, &out)
        }
        Command::Tree { trial, exhaustive } => {
            let cfg = experiment_config(cli)?;
            if *exhaustive {
                let rep = tree_suite(&cfg)?;
                report(cli, &rep)?;
                if !rep.pass {
                    return Err(CliError::Verification(format!(
                        "{} of {} trees fail to decide the formula",
                        rep.enumerated - rep.decided,
                        rep.enumerated
                    )));
                }
                return Ok(());
            }
            let dnf = cfg.dnf()?;
            let rho =
                sample_layout(&cfg.layout(), &SeedStream::new(cfg.master_seed, *trial), Polarity::Normal, cfg.star_rate);
            let params = CanonicalTreeParams::new(cfg.params.small_block_threshold, cfg.params.height_threshold);
            let ct = canonical_tree(&dnf, &rho, &params);
            let out = json!({
                "masterSeed": cfg.master_seed,
                "trial": trial,
                "height": ct.tree.height(),
                "rho": rho,
                "tree": ct.tree,
                "render": ct.tree.render(),
            });
            report(cli, &out)
        }
        Command::EncodeRoundtrip => {
            let cfg = experiment_config(cli)?;
            let rep = injection_suite(&cfg)?;
            report(cli, &rep)?;
            if !rep.pass {
                return Err(CliError::Verification(format!("encoding check failed on {} members", rep.members)));
            }
            Ok(())
        }
        Command::SwitchExperiment => {
            let cfg = experiment_config(cli)?;
            let res = run_experiment(&cfg)?;
            let fmt = match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => ReportFormat::Csv,
                Format::Json => ReportFormat::Json,
            };
            let mut buf = Vec::new();
            report_emit(std::slice::from_ref(&res), fmt, &mut buf)?;
            emit(cli.out.as_deref(), &buf)
        }
        Command::Growth { k, range, ell, m } => {
            let range = parse_range(range)?;
            let ell = match ell {
                Some(l) => *l,
                None => default_ell(*k)?,
            };
            let m = m.unwrap_or(ell + 2);
            let rows = growth_report(*k, range, ell, m, cli.budget.unwrap_or(DEFAULT_BIT_BUDGET))?;
            let bytes = match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => {
                    let mut buf = Vec::new();
                    write_growth_csv(&rows, &mut buf)?;
                    buf
                }
                Format::Json => json_bytes(&json!({ "k": k, "ell": ell, "m": m, "rows": rows }))?,
            };
            emit(cli.out.as_deref(), &bytes)
        }
        Command::BuildOracle { bitmap, stage_log } => {
            let cfg = oracle_config(cli)?;
            let built = build_oracle(&cfg)?;
            if let Some(p) = bitmap {
                fs::write(p, built.table.bitmap())?;
                let mut side = p.clone().into_os_string();
                side.push(".json");
                fs::write(PathBuf::from(side), json_bytes(&built.table.sidecar())?)?;
            }
            if let Some(p) = stage_log {
                let mut buf = Vec::new();
                built.table.write_stage_log(&mut buf)?;
                fs::write(p, buf)?;
            }
            emit(cli.out.as_deref(), &json_bytes(&built)?)
        }
        Command::VerifyOracle { table } => {
            let cfg = oracle_config(cli)?;
            let built: OracleBuild = match table {
                Some(p) => {
                    let text = fs::read_to_string(p)
                        .map_err(|e| CliError::config(format!("cannot read {}: {e}", p.display())))?;
                    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?
                }
                None => build_oracle(&cfg)?,
            };
            if built.table.space != cfg.space {
                return Err(CliError::config("table and config describe different spaces"));
            }
            let fam = FormulaFamily::from_spec(&cfg.family, &cfg.space)?;
            let rep = verify_equivalence(&fam, &built.table, &cfg.a_min)?;
            let out = json!({ "masterSeed": built.table.master_seed, "report": rep });
            report(cli, &out)?;
            if !rep.pass {
                let bad: Vec<String> = rep.rows.iter().filter(|r| !r.pass).map(|r| r.a.to_string()).collect();
                return Err(CliError::Verification(format!("equivalence fails for a in {bad:?}")));
            }
            Ok(())
        }
        Command::Schema { kind } => {
            let all = config_schema();
            let doc = match kind {
                None => all,
                Some(k) if CONFIG_KINDS.contains(&k.as_str()) => all[k.as_str()].clone(),
                Some(k) => return Err(CliError::config(format!("unknown schema kind {k:?}; expected one of {CONFIG_KINDS:?}"))),
            };
            emit(cli.out.as_deref(), &json_bytes(&doc)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let err = CliError::config(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.code());
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.code())
        }
    }
}
