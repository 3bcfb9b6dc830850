//! Command-line front end.
//!
//! Experiments read a TOML config; flags override config values. Every run
//! writes its artifacts plus a `manifest.json` into the output directory.
//! Exit status: 0 success, 2 config error, 3 infeasible parameters,
//! 4 precondition violation, 5 solver non-convergence, 1 anything else.

use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::certificates::{
    constant_chain, phi_to_frobenius, rip_delta_limit, rip_to_nsp, NormTag, NspCertificate,
    ThresholdInputs, UniversalConstants,
};
use crate::diagnostics::{
    fourth_order_tail_check, norm_concentration_check, nsp_sampled_check, psi_r_estimate,
    rip_estimate,
};
use crate::ensemble::{sample_ensemble, LawKind, SubgaussianLaw};
use crate::error::{Error, Result};
use crate::experiments::{
    boundary_curve, run_covariance_sweep, run_noise_linearity, run_phase_transition,
    write_trials_csv, CovarianceScenario, NRule, NoiseConfig, PhaseConfig,
};
use crate::numerics::RealMatrix;
use crate::solver::Algorithm;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(
    name = "rankone",
    version,
    about = "Nonnegative recovery from rank-one measurements"
)]
pub struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, env = "RANKONE_WORKERS")]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Phase-transition grid over (n, s).
    Phase(PhaseArgs),
    /// Recovery error against noise level.
    Noise(NoiseArgs),
    /// Covariance matching for activity detection.
    Covmatch(CovmatchArgs),
    /// Evaluate the constant chain of the recovery guarantee.
    Certify(CertifyArgs),
    /// Random-matrix diagnostics.
    #[command(subcommand)]
    Diagnose(DiagnoseCommand),
}

#[derive(Debug, Args)]
pub struct PhaseArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "out/phase")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub law: Option<LawKind>,
    #[arg(long)]
    pub algorithm: Option<Algorithm>,
    #[arg(long)]
    pub n_rule: Option<NRule>,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "out/noise")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub algorithm: Option<Algorithm>,
}

#[derive(Debug, Args)]
pub struct CovmatchArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "out/covmatch")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Comma-separated antenna counts; defaults to the config's `M`.
    #[arg(long, value_delimiter = ',')]
    pub antennas: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    /// Norm concentration level; accepts fractions such as `1/3`.
    #[arg(long, default_value = "1/3", value_parser = parse_number)]
    pub eta: f64,
    /// RIP constant of order 2s; accepts fractions such as `1/6`.
    #[arg(long, default_value = "1/6", value_parser = parse_number)]
    pub delta: f64,
    /// Dimension for the sparsity threshold.
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    /// Number of measurement vectors for the threshold (default 4n(n-1)).
    #[arg(long = "count")]
    pub count: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Write the JSON here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum DiagnoseCommand {
    /// Restricted isometry constant of a seeded matrix.
    Rip(RipArgs),
    /// Sampled nullspace-property check.
    Nsp(NspArgs),
    /// Concentration of squared norms and fourth-order statistics.
    Tails(TailsArgs),
    /// Moment estimate of an Orlicz psi_r norm.
    Psi(PsiArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MatrixSource {
    /// iid N(0, 1/rows) entries.
    Gaussian,
    /// `P(A(.))/sqrt(m)` of a sampled ensemble with `n = rows`, `N = cols`.
    Ensemble,
}

#[derive(Debug, Args)]
pub struct RipArgs {
    #[arg(long, default_value_t = 8)]
    pub rows: usize,
    #[arg(long, default_value_t = 12)]
    pub cols: usize,
    #[arg(long, default_value_t = 2)]
    pub s: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "gaussian")]
    pub source: MatrixSource,
    #[arg(long, default_value = "complex-gaussian")]
    pub law: LawKind,
    /// Supports drawn when exhaustive enumeration is out of reach.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NormArg {
    Frobenius,
    L2Columns,
}

#[derive(Debug, Args)]
pub struct NspArgs {
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    #[arg(long = "count", default_value_t = 10)]
    pub count: usize,
    #[arg(long, default_value_t = 1)]
    pub s: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "complex-rademacher")]
    pub law: LawKind,
    /// Explicit certificate; otherwise derived from the exhaustive RIP constant of order 2s.
    #[arg(long, requires = "tau")]
    pub rho: Option<f64>,
    #[arg(long, requires = "rho")]
    pub tau: Option<f64>,
    #[arg(long, value_enum, default_value = "l2-columns")]
    pub norm: NormArg,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TailKind {
    Norm,
    Fourth,
    Both,
}

#[derive(Debug, Args)]
pub struct TailsArgs {
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.5")]
    pub levels: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "complex-gaussian")]
    pub law: LawKind,
    /// Override the law's psi_2 bound.
    #[arg(long)]
    pub psi2: Option<f64>,
    #[arg(long, value_enum, default_value = "both")]
    pub kind: TailKind,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PsiArgs {
    /// One sample per line; without it, standard Gaussian samples are drawn.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2.0)]
    pub r: f64,
    #[arg(long, default_value_t = 16)]
    pub p_max: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Number or fraction `a/b`.
pub fn parse_number(s: &str) -> std::result::Result<f64, String> {
    let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{s}`: {e}"));
    match s.split_once('/') {
        Some((a, b)) => Ok(parse(a)? / parse(b)?),
        None => parse(s),
    }
}

/// Provenance record written next to every set of artifacts.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// sha256 of the effective configuration (after flag overrides) as JSON.
    pub config_digest: String,
    /// sha256 over command, digest and tool version; independent of time.
    pub run_id: String,
    pub seed: Option<u64>,
    pub artifacts: Vec<String>,
    pub tool_version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new<C: Serialize>(command: &str, config: &C, seed: Option<u64>) -> Result<Self> {
        let config_digest = hex::encode(Sha256::digest(serde_json::to_vec(config)?));
        let run_id = hex::encode(Sha256::digest(format!(
            "{command}\n{config_digest}\n{VERSION}"
        )));
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Ok(RunManifest {
            command: command.to_string(),
            config_digest,
            run_id,
            seed,
            artifacts: Vec::new(),
            tool_version: VERSION.to_string(),
            timestamp,
        })
    }
}

/// Parse a TOML config; errors carry the file name, position and offending key.
pub fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            write_json(p, value)
        }
        None => {
            let mut stdout = io::stdout().lock();
            serde_json::to_writer_pretty(&mut stdout, value)?;
            writeln!(stdout)?;
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct WithManifest<'a, T: Serialize> {
    run_id: &'a str,
    #[serde(flatten)]
    report: &'a T,
}

/// Artifacts of one experiment: `<stem>.csv`, `<stem>_summary.json`, `manifest.json`.
fn write_artifacts<T: Serialize>(
    dir: &Path,
    stem: &str,
    manifest: &mut RunManifest,
    csv: impl FnOnce(&mut Vec<u8>) -> Result<()>,
    summary: &T,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut buf = Vec::new();
    csv(&mut buf)?;
    let csv_name = format!("{stem}.csv");
    fs::write(dir.join(&csv_name), buf)?;
    let summary_name = format!("{stem}_summary.json");
    write_json(
        &dir.join(&summary_name),
        &WithManifest {
            run_id: &manifest.run_id,
            report: summary,
        },
    )?;
    manifest.artifacts = vec![csv_name, summary_name];
    write_json(&dir.join("manifest.json"), manifest)
}

fn non_convergence(count: usize) -> Result<()> {
    if count > 0 {
        return Err(Error::NonConvergence(format!(
            "{count} solves hit the iteration cap; artifacts were written"
        )));
    }
    Ok(())
}

/// Run a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(Error::Config("worker count must be positive".into()));
        }
        // a second call in the same process keeps the existing pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global();
    }
    match cli.command {
        Command::Phase(a) => cmd_phase(&a),
        Command::Noise(a) => cmd_noise(&a),
        Command::Covmatch(a) => cmd_covmatch(&a),
        Command::Certify(a) => cmd_certify(&a),
        Command::Diagnose(d) => cmd_diagnose(&d),
    }
}

#[derive(Serialize)]
struct PhaseSummary<'a> {
    diagram: &'a crate::experiments::PhaseDiagram,
    boundary: Vec<(usize, f64)>,
    crossing: Vec<(usize, Option<f64>)>,
}

pub fn cmd_phase(a: &PhaseArgs) -> Result<()> {
    let mut cfg: PhaseConfig = load_config(&a.config)?;
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.trials {
        cfg.trials = v;
    }
    if let Some(v) = a.law {
        cfg.law = v;
    }
    if let Some(v) = a.algorithm {
        cfg.solver.algorithm = v;
    }
    if let Some(v) = a.n_rule {
        cfg.n_rule = v;
    }
    let diagram = run_phase_transition(&cfg)?;
    let mut manifest = RunManifest::new("phase", &cfg, Some(cfg.seed))?;
    let summary = PhaseSummary {
        diagram: &diagram,
        boundary: diagram
            .n_values
            .iter()
            .map(|&n| (n, boundary_curve(n)))
            .collect(),
        crossing: diagram
            .n_values
            .iter()
            .map(|&n| (n, diagram.crossing(n)))
            .collect(),
    };
    write_artifacts(
        &a.out,
        "phase",
        &mut manifest,
        |w| write_trials_csv(&diagram.records, w),
        &summary,
    )?;
    eprintln!(
        "phase: {} trials, {}",
        diagram.records.len(),
        diagram.n_rule
    );
    non_convergence(diagram.non_converged)
}

pub fn cmd_noise(a: &NoiseArgs) -> Result<()> {
    let mut cfg: NoiseConfig = load_config(&a.config)?;
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.trials {
        cfg.trials = v;
    }
    if let Some(v) = a.algorithm {
        cfg.solver.algorithm = v;
    }
    let report = run_noise_linearity(&cfg)?;
    let mut manifest = RunManifest::new("noise", &cfg, Some(cfg.seed))?;
    write_artifacts(
        &a.out,
        "noise",
        &mut manifest,
        |w| write_trials_csv(&report.records, w),
        &report,
    )?;
    eprintln!(
        "noise: slope {}, R^2 {}",
        report.fit.slope, report.fit.r_squared
    );
    non_convergence(report.non_converged)
}

#[derive(Serialize)]
struct CovSummary<'a> {
    rows: &'a [crate::experiments::CovarianceSweepRow],
    reports: &'a [crate::experiments::CovarianceReport],
}

pub fn cmd_covmatch(a: &CovmatchArgs) -> Result<()> {
    let mut sc: CovarianceScenario = load_config(&a.config)?;
    if let Some(v) = a.seed {
        sc.seed = v;
    }
    if let Some(v) = a.trials {
        sc.trials = v;
    }
    let antennas = if a.antennas.is_empty() {
        vec![sc.antennas]
    } else {
        a.antennas.clone()
    };
    let (rows, reports) = run_covariance_sweep(&sc, &antennas)?;
    #[derive(Serialize)]
    struct Effective<'a> {
        scenario: &'a CovarianceScenario,
        antennas: &'a [usize],
    }
    let mut manifest = RunManifest::new(
        "covmatch",
        &Effective {
            scenario: &sc,
            antennas: &antennas,
        },
        Some(sc.seed),
    )?;
    let csv = |w: &mut Vec<u8>| -> Result<()> {
        writeln!(w, "n,s,trial,seed,antennas,error_l2,relative_error,recall,precision,residual,noise_frobenius,converged")?;
        for r in &reports {
            for t in &r.trials {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{},{},{},{}",
                    sc.n,
                    sc.s,
                    t.trial,
                    t.seed,
                    t.antennas,
                    crate::experiments::fmt_float(t.error_l2),
                    crate::experiments::fmt_float(t.relative_error),
                    crate::experiments::fmt_float(t.recall),
                    crate::experiments::fmt_float(t.precision),
                    crate::experiments::fmt_float(t.residual),
                    crate::experiments::fmt_float(t.noise_frobenius),
                    u8::from(t.converged)
                )?;
            }
        }
        Ok(())
    };
    write_artifacts(
        &a.out,
        "covmatch",
        &mut manifest,
        csv,
        &CovSummary {
            rows: &rows,
            reports: &reports,
        },
    )?;
    non_convergence(
        reports
            .iter()
            .flat_map(|r| &r.trials)
            .filter(|t| !t.converged)
            .count(),
    )
}

pub fn cmd_certify(a: &CertifyArgs) -> Result<()> {
    let count = a.count.unwrap_or(4 * a.n * a.n.saturating_sub(1));
    let chain = constant_chain(
        a.eta,
        a.delta,
        Some(ThresholdInputs {
            n: a.n,
            count,
            alpha: a.alpha,
        }),
    )?;
    emit_json(a.out.as_deref(), &chain)
}

fn cmd_diagnose(d: &DiagnoseCommand) -> Result<()> {
    match d {
        DiagnoseCommand::Rip(a) => {
            let phi = match a.source {
                MatrixSource::Gaussian => {
                    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
                    let scale = 1.0 / (a.rows as f64).sqrt();
                    RealMatrix::from_fn(a.rows, a.cols, |_, _| {
                        scale * rng.sample::<f64, _>(StandardNormal)
                    })
                }
                MatrixSource::Ensemble => {
                    sample_ensemble(a.rows, a.cols, SubgaussianLaw::new(a.law), a.seed)?.build_phi()
                }
            };
            let est = rip_estimate(&phi, a.s, a.samples, a.seed)?;
            emit_json(a.out.as_deref(), &est)
        }
        DiagnoseCommand::Nsp(a) => {
            let e = sample_ensemble(a.n, a.count, SubgaussianLaw::new(a.law), a.seed)?;
            let base = match (a.rho, a.tau) {
                (Some(rho), Some(tau)) => {
                    NspCertificate::new(2.0, a.s, rho, tau, NormTag::L2Columns)?
                }
                _ => {
                    let est = rip_estimate(&e.build_phi(), 2 * a.s, 100_000, a.seed)?;
                    if est.method != crate::diagnostics::RipMethod::Exhaustive {
                        return Err(Error::Guard(
                            "a sampled RIP lower bound cannot certify the nullspace property"
                                .into(),
                        ));
                    }
                    if est.delta >= rip_delta_limit() {
                        return Err(Error::Infeasible(format!(
                            "delta_2s = {} >= 4/sqrt(41)",
                            est.delta
                        )));
                    }
                    rip_to_nsp(est.delta, a.s)?
                }
            };
            let cert = match a.norm {
                NormArg::L2Columns => base,
                NormArg::Frobenius => phi_to_frobenius(&base, e.m())?,
            };
            emit_json(
                a.out.as_deref(),
                &nsp_sampled_check(&e, &cert, a.trials, a.seed)?,
            )
        }
        DiagnoseCommand::Tails(a) => {
            let mut law = SubgaussianLaw::new(a.law);
            if let Some(p) = a.psi2 {
                law.psi2_bound = p;
            }
            let mut k = UniversalConstants::default();
            if let Some(c) = a.c {
                k.hanson_wright_c = c;
            }
            if let Some(g) = a.gamma {
                k.gamma = g;
            }
            let mut reports = Vec::new();
            if matches!(a.kind, TailKind::Fourth | TailKind::Both) {
                reports.push(fourth_order_tail_check(
                    law, a.n, &a.levels, a.samples, a.seed, &k,
                )?);
            }
            if matches!(a.kind, TailKind::Norm | TailKind::Both) {
                reports.push(norm_concentration_check(
                    law, a.n, &a.levels, a.samples, a.seed, &k,
                )?);
            }
            emit_json(a.out.as_deref(), &reports)
        }
        DiagnoseCommand::Psi(a) => {
            let samples: Vec<f64> = match &a.input {
                Some(p) => read_samples(p)?,
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
                    (0..a.count).map(|_| rng.sample(StandardNormal)).collect()
                }
            };
            let estimate = psi_r_estimate(&samples, a.r, a.p_max)?;
            #[derive(Serialize)]
            struct PsiReport {
                r: f64,
                p_max: usize,
                samples: usize,
                seed: Option<u64>,
                estimate: f64,
                lower_estimate: bool,
            }
            emit_json(
                a.out.as_deref(),
                &PsiReport {
                    r: a.r,
                    p_max: a.p_max,
                    samples: samples.len(),
                    seed: a.input.is_none().then_some(a.seed),
                    estimate,
                    lower_estimate: true,
                },
            )
        }
    }
}

fn read_samples(path: &Path) -> Result<Vec<f64>> {
    let f = fs::File::open(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(
            t.parse::<f64>()
                .map_err(|e| Error::Input(format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}
