//! Argument parsing, configuration merging and command execution for the
//! `polya-stein` binary.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use polya_stein::distributions::{simulate_urn_with, simulate_walk_l_with, urn_pmf, walk_pmf, BetaLaw, UrnParams, WalkParams};
use polya_stein::par::Exec;
use polya_stein::stein_beta::{
    bound_constants, monotonicity_classify, solve_stein_with, sup_norms, BoundCase, LipschitzTest, Monotonicity,
    DEFAULT_GRID_SIZE,
};
use polya_stein::verify::{run_suite, Suite};
use polya_stein::wasserstein::{
    arcsine_moment_gap, arcsine_upper_bound, distance_report, rate_table, urn_lower_bound, urn_upper_bound, Family,
};

/// Directory for output files when `--output` is not given.
pub const OUTPUT_DIR_ENV: &str = "POLYA_STEIN_OUTPUT_DIR";

const DEFAULT_SEED: u64 = 20_240_601;
const DEFAULT_DRAWS: u64 = 1_000_000;

/// Invalid input: bad flags, missing parameters, malformed config.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(msg: impl Into<String>) -> anyhow::Result<T> {
    Err(UsageError(msg.into()).into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    /// Pólya-Eggenberger urn, integer alpha, beta, m, n.
    Urn,
    /// Last zero of the simple random walk of length 2n.
    Walk,
    /// A Beta law with real shapes (bounds only).
    Beta,
}

#[derive(Debug, Parser)]
#[command(name = "polya-stein", version, about = "Urn and random-walk laws, Stein operators and Wasserstein rates")]
pub struct Cli {
    /// TOML file with default parameters; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file (default: stdout, or the directory in POLYA_STEIN_OUTPUT_DIR).
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: number of cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct LawArgs {
    #[arg(long, value_enum)]
    pub family: Option<FamilyKind>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub beta: Option<String>,
    #[arg(long)]
    pub m: Option<u32>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact mass function of S_n (urn) or L_2n (walk).
    Pmf {
        #[command(flatten)]
        law: LawArgs,
        #[arg(long)]
        n: Option<u32>,
    },
    /// Solve the Beta Stein equation for one test function on a grid.
    SteinSolve {
        #[arg(long)]
        alpha: Option<String>,
        #[arg(long)]
        beta: Option<String>,
        /// u, parabola, half-square, sine, cosine, or abs:<c>
        #[arg(long)]
        h: Option<String>,
        #[arg(long)]
        grid_size: Option<usize>,
    },
    /// Stein constants for real shapes, or distance bounds for urn/walk.
    Bounds {
        #[command(flatten)]
        law: LawArgs,
        #[arg(long)]
        n: Option<u32>,
    },
    /// Exact Wasserstein distance to the limit law, with bounds.
    Distance {
        #[command(flatten)]
        law: LawArgs,
        #[arg(long)]
        n: Option<u32>,
        /// Also compute the stratified estimate on this many strata.
        #[arg(long)]
        mc_grid: Option<usize>,
    },
    /// Distance and bounds over a list of n.
    RateTable {
        #[command(flatten)]
        law: LawArgs,
        #[arg(long, value_delimiter = ',')]
        n: Vec<u32>,
    },
    /// Run invariant suites and report residuals.
    Verify {
        /// all, special, distributions, stein-discrete, stein-beta, wasserstein
        #[arg(long)]
        suite: Option<String>,
    },
    /// Empirical mass function from seeded simulation.
    Simulate {
        #[command(flatten)]
        law: LawArgs,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        draws: Option<u64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Pmf,
    SteinSolve,
    Bounds,
    Distance,
    RateTable,
    Verify,
    Simulate,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Pmf => "pmf",
            CommandKind::SteinSolve => "stein-solve",
            CommandKind::Bounds => "bounds",
            CommandKind::Distance => "distance",
            CommandKind::RateTable => "rate-table",
            CommandKind::Verify => "verify",
            CommandKind::Simulate => "simulate",
        }
    }
}

/// A scalar that may be written as an integer or a decimal in TOML.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Number {
    Int(i64),
    Float(f64),
}

impl Number {
    fn text(&self) -> String {
        match self {
            Number::Int(i) => i.to_string(),
            Number::Float(x) => x.to_string(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum NList {
    One(u32),
    Many(Vec<u32>),
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct FileConfig {
    format: Option<Format>,
    output: Option<PathBuf>,
    seed: Option<u64>,
    threads: Option<usize>,
    family: Option<FamilyKind>,
    alpha: Option<Number>,
    beta: Option<Number>,
    m: Option<u32>,
    n: Option<NList>,
    h: Option<String>,
    grid_size: Option<usize>,
    suite: Option<String>,
    draws: Option<u64>,
    mc_grid: Option<usize>,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub family: Option<FamilyKind>,
    pub alpha: Option<String>,
    pub beta: Option<String>,
    pub m: Option<u32>,
    pub n: Vec<u32>,
    pub h: Option<String>,
    pub grid_size: usize,
    pub seed: u64,
    pub draws: u64,
    pub suite: String,
    pub mc_grid: Option<usize>,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
}

fn read_config(path: &Path) -> anyhow::Result<FileConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).map_err(|e| UsageError(format!("config {}: {e}", path.display())).into())
}

impl RunConfig {
    /// Merge the optional config file with the flags; flags win.
    pub fn resolve(cli: Cli) -> anyhow::Result<Self> {
        let file = match &cli.config {
            Some(p) => read_config(p)?,
            None => FileConfig::default(),
        };
        let mut cfg = RunConfig {
            command: CommandKind::Pmf,
            family: file.family,
            alpha: file.alpha.as_ref().map(Number::text),
            beta: file.beta.as_ref().map(Number::text),
            m: file.m,
            n: match file.n {
                Some(NList::One(n)) => vec![n],
                Some(NList::Many(v)) => v,
                None => vec![],
            },
            h: file.h,
            grid_size: file.grid_size.unwrap_or(DEFAULT_GRID_SIZE),
            seed: cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            draws: file.draws.unwrap_or(DEFAULT_DRAWS),
            suite: file.suite.unwrap_or_else(|| "all".into()),
            mc_grid: file.mc_grid,
            format: cli.format.or(file.format).unwrap_or(Format::Csv),
            output: cli.output.or(file.output),
            threads: cli.threads.or(file.threads),
        };
        let law = |cfg: &mut RunConfig, l: LawArgs| {
            cfg.family = l.family.or(cfg.family);
            cfg.alpha = l.alpha.or(cfg.alpha.take());
            cfg.beta = l.beta.or(cfg.beta.take());
            cfg.m = l.m.or(cfg.m);
        };
        let one_n = |cfg: &mut RunConfig, n: Option<u32>| {
            if let Some(n) = n {
                cfg.n = vec![n];
            }
        };
        match cli.command {
            Command::Pmf { law: l, n } => {
                cfg.command = CommandKind::Pmf;
                law(&mut cfg, l);
                one_n(&mut cfg, n);
            }
            Command::SteinSolve {
                alpha,
                beta,
                h,
                grid_size,
            } => {
                cfg.command = CommandKind::SteinSolve;
                cfg.alpha = alpha.or(cfg.alpha);
                cfg.beta = beta.or(cfg.beta);
                cfg.h = h.or(cfg.h);
                cfg.grid_size = grid_size.unwrap_or(cfg.grid_size);
            }
            Command::Bounds { law: l, n } => {
                cfg.command = CommandKind::Bounds;
                law(&mut cfg, l);
                one_n(&mut cfg, n);
            }
            Command::Distance { law: l, n, mc_grid } => {
                cfg.command = CommandKind::Distance;
                law(&mut cfg, l);
                one_n(&mut cfg, n);
                cfg.mc_grid = mc_grid.or(cfg.mc_grid);
            }
            Command::RateTable { law: l, n } => {
                cfg.command = CommandKind::RateTable;
                law(&mut cfg, l);
                if !n.is_empty() {
                    cfg.n = n;
                }
            }
            Command::Verify { suite } => {
                cfg.command = CommandKind::Verify;
                cfg.suite = suite.unwrap_or(cfg.suite);
            }
            Command::Simulate { law: l, n, draws } => {
                cfg.command = CommandKind::Simulate;
                law(&mut cfg, l);
                one_n(&mut cfg, n);
                cfg.draws = draws.unwrap_or(cfg.draws);
            }
        }
        Ok(cfg)
    }

    fn single_n(&self) -> anyhow::Result<u32> {
        match self.n.as_slice() {
            [n] if *n >= 1 => Ok(*n),
            [] => usage(format!("{} requires --n", self.command.name())),
            [_] => usage("n must be >= 1"),
            _ => usage(format!("{} takes a single n, got {}", self.command.name(), self.n.len())),
        }
    }

    fn integer(&self, name: &str, value: &Option<String>) -> anyhow::Result<u32> {
        let text = match value {
            Some(t) => t,
            None => return usage(format!("the urn family requires --{name}")),
        };
        match text.parse::<u32>() {
            Ok(v) if v >= 1 => Ok(v),
            _ => usage(format!("{name} must be an integer >= 1 for the urn family, got {text:?}")),
        }
    }

    fn real(&self, name: &str, value: &Option<String>) -> anyhow::Result<f64> {
        let text = match value {
            Some(t) => t,
            None => return usage(format!("{} requires --{name}", self.command.name())),
        };
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
            _ => usage(format!("{name} must be a finite number > 0, got {text:?}")),
        }
    }

    fn urn(&self, n: u32) -> anyhow::Result<UrnParams> {
        let alpha = self.integer("alpha", &self.alpha)?;
        let beta = self.integer("beta", &self.beta)?;
        let m = match self.m {
            Some(m) if m >= 1 => m,
            Some(_) => return usage("m must be >= 1"),
            None => return usage("the urn family requires --m"),
        };
        Ok(UrnParams::new(alpha, beta, m, n)?)
    }

    fn family(&self, default: FamilyKind) -> FamilyKind {
        self.family.unwrap_or(default)
    }

    fn sweep_family(&self) -> anyhow::Result<Family> {
        Ok(match self.family(FamilyKind::Urn) {
            FamilyKind::Urn => {
                let p = self.urn(1)?;
                Family::Urn {
                    alpha: p.alpha,
                    beta: p.beta,
                    m: p.m,
                }
            }
            FamilyKind::Walk => Family::Walk,
            FamilyKind::Beta => return usage(format!("{} needs --family urn or walk", self.command.name())),
        })
    }

    /// File name used under the output directory.
    pub fn default_file_name(&self) -> String {
        format!("{}.{}", self.command.name(), self.format.extension())
    }
}

/// Parse a test-function name.
pub fn parse_test_function(name: &str) -> anyhow::Result<LipschitzTest> {
    Ok(match name {
        "u" | "identity" => LipschitzTest::identity(),
        "parabola" => LipschitzTest::parabola(),
        "half-square" => LipschitzTest::half_square(),
        "sine" => LipschitzTest::sine_bump(),
        "cosine" => LipschitzTest::cosine_bump(),
        other => match other.strip_prefix("abs:").map(str::parse::<f64>) {
            Some(Ok(c)) if (0.0..=1.0).contains(&c) => LipschitzTest::abs_shift(c),
            _ => {
                return usage(format!(
                    "unknown test function {other:?}; expected u, parabola, half-square, sine, cosine or abs:<c> with c in [0, 1]"
                ))
            }
        },
    })
}

/// The rendered artifact of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub bytes: Vec<u8>,
    /// `Some` for `verify`: whether every check passed.
    pub verify_passed: Option<bool>,
}

impl Artifact {
    fn data(bytes: Vec<u8>) -> Self {
        Self {
            bytes,
            verify_passed: None,
        }
    }
}

#[derive(Serialize)]
struct ShapeBounds {
    alpha: f64,
    beta: f64,
    case: BoundCase,
    b0: f64,
    b1: f64,
    f_factor: f64,
    monotonicity: Monotonicity,
}

#[derive(Serialize)]
struct LawBounds {
    n: u32,
    upper: f64,
    lower: f64,
    b0: Option<f64>,
    b1: Option<f64>,
}

fn case_name(case: BoundCase) -> &'static str {
    match case {
        BoundCase::BothSmall => "both-small",
        BoundCase::AlphaLarge => "alpha-large",
        BoundCase::BetaLarge => "beta-large",
        BoundCase::BothLarge => "both-large",
    }
}

fn monotonicity_text(m: Monotonicity) -> (&'static str, String) {
    match m {
        Monotonicity::Constant => ("constant", String::new()),
        Monotonicity::Increasing => ("increasing", String::new()),
        Monotonicity::Decreasing => ("decreasing", String::new()),
        Monotonicity::IncreasingThenDecreasing { turn } => ("increasing-then-decreasing", turn.to_string()),
        Monotonicity::DecreasingThenIncreasing { turn } => ("decreasing-then-increasing", turn.to_string()),
    }
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Vec<u8> {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out.into_bytes()
}

fn json_bytes<T: Serialize>(value: &T) -> anyhow::Result<Vec<u8>> {
    let mut s = serde_json::to_string(value)?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn with_newline(mut s: String) -> Vec<u8> {
    s.push('\n');
    s.into_bytes()
}

/// Execute a resolved configuration.
pub fn execute(cfg: &RunConfig, exec: Exec) -> anyhow::Result<Artifact> {
    let csv = cfg.format == Format::Csv;
    match cfg.command {
        CommandKind::Pmf => {
            let n = cfg.single_n()?;
            let law = match cfg.family(FamilyKind::Urn) {
                FamilyKind::Urn => urn_pmf(&cfg.urn(n)?),
                FamilyKind::Walk => walk_pmf(&WalkParams::new(n)?),
                FamilyKind::Beta => return usage("pmf needs --family urn or walk"),
            };
            Ok(Artifact::data(if csv {
                let mut buf = Vec::new();
                law.write_csv(&mut buf)?;
                buf
            } else {
                with_newline(law.to_json()?)
            }))
        }
        CommandKind::Simulate => {
            let n = cfg.single_n()?;
            if cfg.draws == 0 {
                return usage("draws must be >= 1");
            }
            let law = match cfg.family(FamilyKind::Urn) {
                FamilyKind::Urn => simulate_urn_with(&cfg.urn(n)?, cfg.draws, cfg.seed, exec)?,
                FamilyKind::Walk => simulate_walk_l_with(&WalkParams::new(n)?, cfg.draws, cfg.seed, exec)?,
                FamilyKind::Beta => return usage("simulate needs --family urn or walk"),
            };
            Ok(Artifact::data(if csv {
                let mut buf = Vec::new();
                law.write_csv(&mut buf)?;
                buf
            } else {
                with_newline(law.to_json()?)
            }))
        }
        CommandKind::SteinSolve => {
            let law = BetaLaw::new(cfg.real("alpha", &cfg.alpha)?, cfg.real("beta", &cfg.beta)?)?;
            let h = parse_test_function(cfg.h.as_deref().unwrap_or("u"))?;
            if cfg.grid_size < 16 {
                return usage(format!("grid-size must be >= 16, got {}", cfg.grid_size));
            }
            let sol = solve_stein_with(&law, &h, cfg.grid_size, exec)?;
            let (f_sup, fp_sup) = sup_norms(&sol);
            eprintln!("Eh = {}  sup|f| = {f_sup}  sup|f'| = {fp_sup}", sol.bh);
            Ok(Artifact::data(if csv {
                let mut buf = Vec::new();
                sol.write_csv(&mut buf)?;
                buf
            } else {
                with_newline(sol.to_json()?)
            }))
        }
        CommandKind::Bounds => match cfg.family(FamilyKind::Beta) {
            FamilyKind::Beta => {
                let (a, b) = (cfg.real("alpha", &cfg.alpha)?, cfg.real("beta", &cfg.beta)?);
                let c = bound_constants(a, b)?;
                let out = ShapeBounds {
                    alpha: a,
                    beta: b,
                    case: c.case,
                    b0: c.b0,
                    b1: c.b1,
                    f_factor: 2.0 / (a + b),
                    monotonicity: monotonicity_classify(a, b)?,
                };
                if csv {
                    let (mono, turn) = monotonicity_text(out.monotonicity);
                    Ok(Artifact::data(csv_bytes(
                        &["alpha", "beta", "case", "b0", "b1", "f_factor", "monotonicity", "turn"],
                        &[vec![
                            a.to_string(),
                            b.to_string(),
                            case_name(c.case).into(),
                            c.b0.to_string(),
                            c.b1.to_string(),
                            out.f_factor.to_string(),
                            mono.into(),
                            turn,
                        ]],
                    )))
                } else {
                    Ok(Artifact::data(json_bytes(&out)?))
                }
            }
            FamilyKind::Urn => {
                let p = cfg.urn(cfg.single_n()?)?;
                let c = bound_constants(p.shape_a(), p.shape_b())?;
                law_bounds(
                    cfg,
                    LawBounds {
                        n: p.n,
                        upper: urn_upper_bound(&p),
                        lower: urn_lower_bound(&p),
                        b0: Some(c.b0),
                        b1: Some(c.b1),
                    },
                )
            }
            FamilyKind::Walk => {
                let p = WalkParams::new(cfg.single_n()?)?;
                law_bounds(
                    cfg,
                    LawBounds {
                        n: p.n,
                        upper: arcsine_upper_bound(&p),
                        lower: arcsine_moment_gap(&p),
                        b0: None,
                        b1: None,
                    },
                )
            }
        },
        CommandKind::Distance => {
            let family = cfg.sweep_family()?;
            let n = cfg.single_n()?;
            let mc = cfg.mc_grid.map(|g| g.max(1)).map(|g| (g, cfg.seed));
            let rep = distance_report(family, n, mc, exec)?;
            if csv {
                Ok(Artifact::data(csv_bytes(
                    &["n", "dw", "upper", "lower", "mc"],
                    &[vec![
                        rep.n.to_string(),
                        rep.exact_dw.to_string(),
                        rep.upper_bound.to_string(),
                        rep.lower_bound.to_string(),
                        rep.mc_estimate.map(|v| v.to_string()).unwrap_or_default(),
                    ]],
                )))
            } else {
                Ok(Artifact::data(json_bytes(&rep)?))
            }
        }
        CommandKind::RateTable => {
            let family = cfg.sweep_family()?;
            if cfg.n.is_empty() {
                return usage("rate-table requires --n (comma-separated, strictly increasing)");
            }
            if cfg.n.windows(2).any(|w| w[0] >= w[1]) {
                return usage("n list must be strictly increasing");
            }
            if cfg.n[0] == 0 {
                return usage("n must be >= 1");
            }
            let table = rate_table(family, &cfg.n, exec)?;
            Ok(Artifact::data(if csv {
                let mut buf = Vec::new();
                table.write_csv(&mut buf)?;
                buf
            } else {
                with_newline(table.to_json()?)
            }))
        }
        CommandKind::Verify => {
            let suite: Suite = match cfg.suite.parse() {
                Ok(s) => s,
                Err(e) => return usage(e.to_string()),
            };
            let report = run_suite(suite, exec)?;
            for row in report.failures() {
                eprintln!("FAIL {} / {}: residual {}", row.suite, row.check, row.residual);
            }
            eprintln!(
                "{} of {} checks passed",
                report.rows.iter().filter(|r| r.pass).count(),
                report.rows.len()
            );
            let bytes = if csv {
                let mut buf = Vec::new();
                report.write_csv(&mut buf)?;
                buf
            } else {
                with_newline(report.to_json()?)
            };
            Ok(Artifact {
                bytes,
                verify_passed: Some(report.all_passed()),
            })
        }
    }
}

fn law_bounds(cfg: &RunConfig, b: LawBounds) -> anyhow::Result<Artifact> {
    if cfg.format == Format::Json {
        return Ok(Artifact::data(json_bytes(&b)?));
    }
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    Ok(Artifact::data(csv_bytes(
        &["n", "upper", "lower", "b0", "b1"],
        &[vec![b.n.to_string(), b.upper.to_string(), b.lower.to_string(), opt(b.b0), opt(b.b1)]],
    )))
}

/// Where the artifact goes: `--output`, else the output directory from the
/// environment, else stdout (`None`).
pub fn output_target(cfg: &RunConfig, env_dir: Option<PathBuf>) -> Option<PathBuf> {
    cfg.output
        .clone()
        .or_else(|| env_dir.map(|d| d.join(cfg.default_file_name())))
}

/// Process exit code for an error: 3 for numerical failure, 2 for invalid
/// input, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if let Some(e) = err.downcast_ref::<polya_stein::Error>() {
        return if e.is_numerical() { 3 } else { 2 };
    }
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    1
}

/// Check a config before running anything expensive.
pub fn validate(cfg: &RunConfig) -> anyhow::Result<()> {
    if let Some(0) = cfg.threads {
        bail!(UsageError("threads must be >= 1".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> RunConfig {
        let mut full = vec!["polya-stein"];
        full.extend_from_slice(args);
        RunConfig::resolve(Cli::try_parse_from(full).unwrap()).unwrap()
    }

    #[test]
    fn flags_resolve_with_defaults() {
        let cfg = parse(&["pmf", "--alpha", "1", "--beta", "1", "--m", "1", "--n", "2"]);
        assert_eq!(cfg.command, CommandKind::Pmf);
        assert_eq!(cfg.n, vec![2]);
        assert_eq!(cfg.format, Format::Csv);
        assert_eq!(cfg.seed, DEFAULT_SEED);
        let cfg = parse(&["rate-table", "--family", "walk", "--n", "5,10,50,100"]);
        assert_eq!(cfg.n, vec![5, 10, 50, 100]);
        assert_eq!(cfg.family, Some(FamilyKind::Walk));
    }

    #[test]
    fn config_file_is_overridden_by_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "alpha = 2\nbeta = 3\nm = 1\nn = [4, 8]\nseed = 9\nformat = \"json\"\n").unwrap();
        let p = path.to_str().unwrap();
        let cfg = parse(&["--config", p, "rate-table", "--alpha", "5"]);
        assert_eq!(cfg.alpha.as_deref(), Some("5"));
        assert_eq!(cfg.beta.as_deref(), Some("3"));
        assert_eq!(cfg.n, vec![4, 8]);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.format, Format::Json);
        let cfg = parse(&["--config", p, "--seed", "1", "pmf", "--n", "3"]);
        assert_eq!((cfg.seed, cfg.n.clone()), (1, vec![3]));
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        std::fs::write(&path, "alpah = 2\n").unwrap();
        let cli = Cli::try_parse_from(["polya-stein", "--config", path.to_str().unwrap(), "pmf"]).unwrap();
        let err = RunConfig::resolve(cli).unwrap_err();
        assert_eq!(exit_code(&err), 2);
    }

    #[test]
    fn urn_parameters_must_be_integers() {
        let cfg = parse(&["pmf", "--alpha", "1.5", "--beta", "1", "--m", "1", "--n", "2"]);
        let err = execute(&cfg, Exec::Sequential).unwrap_err();
        assert_eq!(exit_code(&err), 2);
        assert!(err.to_string().contains("alpha must be an integer"));
        let cfg = parse(&["pmf", "--alpha", "1", "--beta", "1", "--n", "2"]);
        assert!(execute(&cfg, Exec::Sequential).unwrap_err().to_string().contains("--m"));
    }

    #[test]
    fn uniform_pmf_rows() {
        let cfg = parse(&["pmf", "--alpha", "1", "--beta", "1", "--m", "1", "--n", "2"]);
        let out = String::from_utf8(execute(&cfg, Exec::Sequential).unwrap().bytes).unwrap();
        let rows: Vec<(i64, f64)> = out
            .lines()
            .skip(1)
            .map(|l| {
                let (k, p) = l.split_once(',').unwrap();
                (k.parse().unwrap(), p.parse().unwrap())
            })
            .collect();
        assert_eq!(rows.len(), 3);
        for (i, (k, p)) in rows.iter().enumerate() {
            assert_eq!(*k, i as i64);
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn bounds_for_shapes_and_laws() {
        let cfg = parse(&["bounds", "--alpha", "0.5", "--beta", "0.5"]);
        let out = String::from_utf8(execute(&cfg, Exec::Sequential).unwrap().bytes).unwrap();
        assert_eq!(out.lines().nth(1).unwrap(), "0.5,0.5,both-small,2,6,2,decreasing-then-increasing,0.5");
        let cfg = parse(&["bounds", "--family", "urn", "--alpha", "1", "--beta", "1", "--m", "1", "--n", "100"]);
        let out = String::from_utf8(execute(&cfg, Exec::Sequential).unwrap().bytes).unwrap();
        let upper: f64 = out.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
        assert!((upper - 0.105).abs() < 1e-15);
    }

    #[test]
    fn test_function_names() {
        assert_eq!(parse_test_function("abs:0.25").unwrap().kinks(), &[0.25]);
        assert!(parse_test_function("abs:2").is_err());
        assert!(parse_test_function("cubic").is_err());
    }

    #[test]
    fn output_target_precedence() {
        let mut cfg = parse(&["verify"]);
        assert_eq!(output_target(&cfg, None), None);
        assert_eq!(
            output_target(&cfg, Some("/tmp/x".into())),
            Some(PathBuf::from("/tmp/x/verify.csv"))
        );
        cfg.output = Some("here.csv".into());
        assert_eq!(output_target(&cfg, Some("/tmp/x".into())), Some(PathBuf::from("here.csv")));
    }
}
