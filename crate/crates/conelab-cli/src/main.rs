//! Command-line front end for the cone stability workbench.
//!
//! Five subcommands drive the library: `classify` and `sweep` for the
//! spectral stability index of product-sphere cones, `calibration` for
//! random-frame calibration residuals, `variation-decay` for the cutoff
//! second-variation table on the quadric cone, and `forms` for the
//! homogeneous 1-form obstruction and codifferential convention ledger.
//!
//! Configuration comes from a single JSON file plus flag overrides; every
//! output embeds the resolved configuration, seed, tolerance, and version so
//! a run can be reproduced from its artifacts alone. Outputs are written
//! atomically (temp file + rename) and are byte-identical for identical
//! inputs. Exit codes: 0 success, 1 usage or config error, 2 unsupported
//! input, 3 tolerance failure.

use clap::{Args, Parser, Subcommand};
use conelab::calibrations::{self, CalibrationError, CalibrationSpec};
use conelab::cone_forms::{self, DiscreteLink, FormError};
use conelab::holo::HolomorphicPolynomial;
use conelab::links::LinkSpec;
use conelab::spectral::{self, SpectralError};
use conelab::variations::{self, VariationError, VariationReport};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "conelab", version, about = "Stability and calibration workbench for minimal cones")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a cone by the scaling-weighted stability index.
    Classify(CommonArgs),
    /// Survey balanced product-sphere cones over a dimension range.
    Sweep(CommonArgs),
    /// Test a calibration form on random frames of a catalog cone.
    Calibration(CommonArgs),
    /// Tabulate cutoff second-variation decay on the quadric cone.
    VariationDecay(CommonArgs),
    /// Run the homogeneous 1-form obstruction and convention ledger.
    Forms(CommonArgs),
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Command::Classify(a)
            | Command::Sweep(a)
            | Command::Calibration(a)
            | Command::VariationDecay(a)
            | Command::Forms(a) => a,
        }
    }
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// JSON config file; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// RNG seed, recorded into every output.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Residual tolerance for pass/fail gates.
    #[arg(long)]
    tol: Option<f64>,
    /// Grid resolution (radial nodes, quadrature level, or oracle grid,
    /// depending on the command).
    #[arg(long)]
    grid: Option<usize>,
}

/// Single configuration surface shared by all commands; each command reads
/// the fields it needs and fills its defaults back in before the config is
/// embedded into the output.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RunConfig {
    /// Cone link for classify and calibration.
    #[serde(skip_serializing_if = "Option::is_none")]
    link: Option<LinkSpec>,
    /// Shorthand for the balanced product-sphere link with factors (k, l).
    #[serde(skip_serializing_if = "Option::is_none")]
    lawson: Option<[usize; 2]>,
    /// Calibration form for the calibration command.
    #[serde(skip_serializing_if = "Option::is_none")]
    form: Option<CalibrationSpec>,
    /// Fourier link for the forms command.
    #[serde(skip_serializing_if = "Option::is_none")]
    fourier_link: Option<DiscreteLink>,
    /// Formal cone dimension for the forms command.
    #[serde(skip_serializing_if = "Option::is_none")]
    cone_dimension: Option<usize>,
    /// Inclusive cone-dimension range for the sweep command.
    #[serde(skip_serializing_if = "Option::is_none")]
    n_range: Option<[usize; 2]>,
    /// Truncation parameters for the classify eigenvalue table.
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilons: Option<Vec<f64>>,
    /// Cutoff widths for variation-decay.
    #[serde(skip_serializing_if = "Option::is_none")]
    cutoffs: Option<Vec<f64>>,
    /// Random frame count for calibration.
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<usize>,
}

/// Wrapper serialized around every JSON report.
#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    version: &'static str,
    command: &'static str,
    seed: u64,
    tol: f64,
    grid: usize,
    config: &'a RunConfig,
    report: T,
}

enum CmdError {
    Usage(String),
    Unsupported(String),
    Tolerance(String),
}

impl CmdError {
    fn code(&self) -> u8 {
        match self {
            CmdError::Usage(_) => 1,
            CmdError::Unsupported(_) => 2,
            CmdError::Tolerance(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CmdError::Usage(m) | CmdError::Unsupported(m) | CmdError::Tolerance(m) => m,
        }
    }
}

impl From<SpectralError> for CmdError {
    fn from(e: SpectralError) -> CmdError {
        match e {
            SpectralError::UnsupportedLink(_) => CmdError::Unsupported(e.to_string()),
            _ => CmdError::Usage(e.to_string()),
        }
    }
}

impl From<CalibrationError> for CmdError {
    fn from(e: CalibrationError) -> CmdError {
        match e {
            CalibrationError::AmbientMismatch { .. } | CalibrationError::DegreeMismatch { .. } => {
                CmdError::Unsupported(e.to_string())
            }
            _ => CmdError::Usage(e.to_string()),
        }
    }
}

impl From<VariationError> for CmdError {
    fn from(e: VariationError) -> CmdError {
        match e {
            VariationError::NeedsQuadric { .. } => CmdError::Unsupported(e.to_string()),
            _ => CmdError::Usage(e.to_string()),
        }
    }
}

impl From<FormError> for CmdError {
    fn from(e: FormError) -> CmdError {
        match e {
            FormError::BadDimension(_)
            | FormError::CutoffTooSmall { .. }
            | FormError::BadParameter(_) => CmdError::Unsupported(e.to_string()),
            _ => CmdError::Usage(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(command: &Command) -> Result<(), CmdError> {
    let cfg = load_config(command.args())?;
    match command {
        Command::Classify(_) => cmd_classify(cfg),
        Command::Sweep(_) => cmd_sweep(cfg),
        Command::Calibration(_) => cmd_calibration(cfg),
        Command::VariationDecay(_) => cmd_variation_decay(cfg),
        Command::Forms(_) => cmd_forms(cfg),
    }
}

fn load_config(args: &CommonArgs) -> Result<RunConfig, CmdError> {
    let mut cfg: RunConfig = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CmdError::Usage(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CmdError::Usage(format!("bad config {}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    if let Some(tol) = args.tol {
        cfg.tol = Some(tol);
    }
    if let Some(grid) = args.grid {
        cfg.grid = Some(grid);
    }
    Ok(cfg)
}

/// The cone link of the run, honoring the `lawson` shorthand.
fn resolve_link(cfg: &mut RunConfig) -> Result<LinkSpec, CmdError> {
    match (&cfg.link, cfg.lawson) {
        (Some(_), Some(_)) => Err(CmdError::Usage(
            "config sets both link and lawson; pick one".into(),
        )),
        (Some(link), None) => Ok(link.clone()),
        (None, Some([k, l])) => {
            let link = LinkSpec::lawson(k, l);
            cfg.link = Some(link.clone());
            Ok(link)
        }
        (None, None) => Err(CmdError::Usage("config needs a link".into())),
    }
}

/// Seventeen significant digits: enough to reproduce any double exactly.
fn float17(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CmdError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)
        .map_err(|e| CmdError::Usage(format!("cannot create {}: {e}", dir.display())))?;
    let name = path
        .file_name()
        .ok_or_else(|| CmdError::Usage(format!("bad output path {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, bytes).map_err(|e| CmdError::Usage(format!("write failed: {e}")))?;
    fs::rename(&tmp, path).map_err(|e| CmdError::Usage(format!("rename failed: {e}")))?;
    Ok(())
}

fn write_json<T: Serialize>(
    cfg: &RunConfig,
    command: &'static str,
    seed: u64,
    tol: f64,
    grid: usize,
    file: &str,
    report: T,
) -> Result<PathBuf, CmdError> {
    let envelope = Envelope {
        version: VERSION,
        command,
        seed,
        tol,
        grid,
        config: cfg,
        report,
    };
    let mut text = serde_json::to_string_pretty(&envelope)
        .map_err(|e| CmdError::Usage(format!("serialization failed: {e}")))?;
    text.push('\n');
    let path = out_dir(cfg).join(file);
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}

fn out_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from("runs"))
}

fn csv_provenance(cfg: &RunConfig, command: &str, seed: u64, tol: f64, grid: usize) -> String {
    let config = serde_json::to_string(cfg).expect("config serializes");
    format!(
        "# conelab {VERSION} {command} seed={seed} tol={} grid={grid}\n# config: {config}\n",
        float17(tol)
    )
}

fn cmd_classify(mut cfg: RunConfig) -> Result<(), CmdError> {
    let link = resolve_link(&mut cfg)?;
    let seed = *cfg.seed.get_or_insert(0);
    let tol = *cfg.tol.get_or_insert(1e-9);
    let grid = *cfg.grid.get_or_insert(256);
    let epsilons = cfg
        .epsilons
        .get_or_insert_with(|| vec![(-std::f64::consts::PI).exp(), (-2.0f64).exp()])
        .clone();
    let report = spectral::spectral_report(&link, &epsilons, grid, seed, tol)?;
    let verdict = report.verdict;
    let d0 = report.d0;
    let path = write_json(&cfg, "classify", seed, tol, grid, "classify.json", report)?;
    println!(
        "n={} cone: {verdict} (d0 = {}) -> {}",
        link.cone_dim(),
        float17(d0),
        path.display()
    );
    Ok(())
}

fn cmd_sweep(mut cfg: RunConfig) -> Result<(), CmdError> {
    let seed = *cfg.seed.get_or_insert(0);
    let tol = *cfg.tol.get_or_insert(1e-9);
    let grid = *cfg.grid.get_or_insert(0);
    let [lo, hi] = *cfg.n_range.get_or_insert([2, 10]);
    let rows = if lo > hi {
        Vec::new()
    } else {
        spectral::lawson_sweep(lo, hi, tol)?
    };
    let mut text = csv_provenance(&cfg, "sweep", seed, tol, grid);
    text.push_str("n,k,l,mu1,d0,verdict\n");
    for row in &rows {
        writeln!(
            text,
            "{},{},{},{},{},{}",
            row.n,
            row.k,
            row.l,
            float17(row.mu1),
            float17(row.d0),
            row.verdict
        )
        .expect("string write");
    }
    let path = out_dir(&cfg).join("sweep.csv");
    write_atomic(&path, text.as_bytes())?;
    println!("{} rows -> {}", rows.len(), path.display());
    Ok(())
}

fn cmd_calibration(mut cfg: RunConfig) -> Result<(), CmdError> {
    let link = resolve_link(&mut cfg)?;
    let form = cfg
        .form
        .clone()
        .ok_or_else(|| CmdError::Usage("config needs a calibration form".into()))?;
    let seed = *cfg.seed.get_or_insert(0);
    let tol = *cfg.tol.get_or_insert(1e-8);
    let grid = *cfg.grid.get_or_insert(0);
    let samples = *cfg.samples.get_or_insert(1000);
    let report = calibrations::cone_calibration_report(&link, &form, samples, seed)?;
    let worst = report
        .max_restriction_residual
        .max(report.max_value_residual);
    let label = format!("{} vs {}", report.cone, form.label());
    let path = write_json(&cfg, "calibration", seed, tol, grid, "calibration.json", report)?;
    if worst > tol {
        return Err(CmdError::Tolerance(format!(
            "{label}: residual {} exceeds tolerance {} (report: {})",
            float17(worst),
            float17(tol),
            path.display()
        )));
    }
    println!(
        "{label}: max residual {} over {samples} frames -> {}",
        float17(worst),
        path.display()
    );
    Ok(())
}

/// Decay table plus the consecutive Rayleigh-quotient ratios.
#[derive(Serialize)]
struct DecaySummary {
    decay_ratios: Vec<f64>,
    #[serde(flatten)]
    table: VariationReport,
}

fn cmd_variation_decay(mut cfg: RunConfig) -> Result<(), CmdError> {
    let seed = *cfg.seed.get_or_insert(0);
    let tol = *cfg.tol.get_or_insert(1e-8);
    let grid = *cfg.grid.get_or_insert(3);
    let cutoffs = cfg
        .cutoffs
        .get_or_insert_with(|| vec![4.0, 8.0, 16.0, 32.0])
        .clone();
    let quadric = HolomorphicPolynomial::quadric();
    let report = variations::rayleigh_decay(&quadric, &cutoffs, grid, seed)?;
    let ratios: Vec<f64> = report
        .rows
        .windows(2)
        .map(|w| w[1].rayleigh / w[0].rayleigh)
        .collect();
    let mut text = csv_provenance(&cfg, "variation-decay", seed, tol, grid);
    text.push_str("N,Q,bound,weighted_norm,rayleigh\n");
    for row in &report.rows {
        writeln!(
            text,
            "{},{},{},{},{}",
            float17(row.scale),
            float17(row.q),
            float17(row.bound),
            float17(row.weighted_norm),
            float17(row.rayleigh)
        )
        .expect("string write");
    }
    let csv_path = out_dir(&cfg).join("variation_decay.csv");
    write_atomic(&csv_path, text.as_bytes())?;
    let n_rows = report.rows.len();
    let summary = DecaySummary {
        decay_ratios: ratios,
        table: report,
    };
    let json_path = write_json(
        &cfg,
        "variation-decay",
        seed,
        tol,
        grid,
        "variation_decay.json",
        summary,
    )?;
    println!(
        "{n_rows} cutoff widths -> {} and {}",
        csv_path.display(),
        json_path.display()
    );
    Ok(())
}

/// Obstruction verdict and convention ledger, reported together.
#[derive(Serialize)]
struct FormsReport {
    obstruction: cone_forms::ObstructionReport,
    ledger: cone_forms::ConventionLedger,
}

fn cmd_forms(mut cfg: RunConfig) -> Result<(), CmdError> {
    let seed = *cfg.seed.get_or_insert(0);
    let tol = *cfg.tol.get_or_insert(1e-8);
    let grid = *cfg.grid.get_or_insert(3);
    let link = *cfg
        .fourier_link
        .get_or_insert(DiscreteLink::FourierTorus { dim: 3, cutoff: 8 });
    let n = *cfg.cone_dimension.get_or_insert(6);
    let obstruction = cone_forms::critical_oneform_obstruction(&link, n)?;
    let ledger = cone_forms::neg1_ledger(&link)?;
    let verdict = obstruction.verdict;
    let consistent = ledger.adjointness_consistent;
    let report = FormsReport {
        obstruction,
        ledger,
    };
    let path = write_json(&cfg, "forms", seed, tol, grid, "forms.json", report)?;
    println!(
        "n={n}: verdict {verdict:?}, adjoint-consistent convention {consistent:?} -> {}",
        path.display()
    );
    Ok(())
}
