//! `kapitza`: spectra, Monte Carlo runs, figure datasets and comparisons for
//! the diffraction and stochastic Kapitza-Dirac models.
//!
//! Exit codes: 0 success, 1 comparison outside tolerance, 2 invalid
//! arguments or malformed input, 3 numerical failure.

mod commands;
mod config;
mod dataset;
mod error;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kapitza_core::analysis::{CompareOptions, Metric};
use kapitza_core::numerics::DEFAULT_SIGMA_REL;

use commands::{
    compute_figure, compute_spectrum, default_nmax, resolve_figure, run_monte_carlo, CompareReport,
    FigureOverrides,
};
use config::{Initial, McRun, Model, RunConfig, SpectrumRun, Zeta};
use dataset::{read_header, Format, SpectrumFile};
use error::{usage, CliError, CliResult};

/// Directory for outputs when no explicit path is given.
const OUT_DIR_ENV: &str = "KAPITZA_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "kapitza",
    version,
    about = "Kapitza-Dirac momentum spectra: diffraction and stochastic models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Line intensities of one model at one transit time.
    Spectrum(SpectrumArgs),
    /// Monte Carlo estimate of the stochastic spectrum.
    Mc(McArgs),
    /// Data behind one of the figures (2, 3, 5 or 6).
    Figure(FigureArgs),
    /// Compare two spectrum files; exit 1 when outside tolerance.
    Compare(CompareArgs),
    /// Regenerate a file from the config in its header.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file; defaults to a generated name in $KAPITZA_OUT_DIR, or
    /// standard output when that is unset.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long, value_enum)]
    model: Model,
    #[arg(long, allow_negative_numbers = true)]
    tau: f64,
    #[arg(long, default_value_t = 0.2, allow_negative_numbers = true)]
    gamma: f64,
    /// Average over the velocity profile.
    #[arg(long)]
    smooth: bool,
    #[arg(long, default_value_t = DEFAULT_SIGMA_REL)]
    sigma_rel: f64,
    /// Emit lines `|n| <= nmax`; defaults to a window holding all but 1e-10
    /// of the mass.
    #[arg(long)]
    nmax: Option<i64>,
    #[arg(long, value_enum, default_value_t = Initial::Even)]
    initial: Initial,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trajectories for `--model mc`.
    #[arg(long = "n", default_value_t = 1_000_000)]
    trajectories: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct McArgs {
    #[arg(long, allow_negative_numbers = true)]
    tau: f64,
    #[arg(long = "n", default_value_t = 1_000_000)]
    trajectories: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `uniform`, or a fixed phase in radians.
    #[arg(long, default_value = "uniform", allow_negative_numbers = true)]
    zeta: Zeta,
    /// Simulate the coupled even/odd walk.
    #[arg(long)]
    coupled: bool,
    #[arg(long, default_value_t = 0.2, allow_negative_numbers = true)]
    gamma: f64,
    #[arg(long, value_enum, default_value_t = Initial::Even)]
    initial: Initial,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct FigureArgs {
    id: u32,
    /// Transit time (figure 2).
    #[arg(long, allow_negative_numbers = true)]
    tau: Option<f64>,
    /// End of the transit-time grid (figures 3, 5, 6).
    #[arg(long)]
    tau_max: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    sigma_rel: Option<f64>,
    /// Line range (figures 2, 3, 5).
    #[arg(long)]
    nmax: Option<i64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Defaults to $KAPITZA_OUT_DIR, then the working directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Reference spectrum.
    a: PathBuf,
    b: PathBuf,
    #[arg(long, default_value = "sup", value_parser = parse_metric)]
    metric: Metric,
    #[arg(long, default_value_t = 0.02)]
    tol: f64,
    /// Only compare lines with `|n|` up to this value.
    #[arg(long)]
    max_abs_n: Option<f64>,
    /// Expected-count threshold for a line to enter the chi-square.
    #[arg(long, default_value_t = 20.0)]
    min_expected: f64,
    /// Report file; defaults to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    file: PathBuf,
    /// Defaults to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse().map_err(|e: kapitza_core::Error| e.to_string())
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

/// Writes to `out`, else to `$KAPITZA_OUT_DIR/<default_name>`, else to
/// standard output.
fn emit(text: &str, out: Option<&Path>, default_name: &str) -> CliResult<()> {
    if let Some(p) = out {
        return write_file(p, text);
    }
    if let Some(dir) = std::env::var_os(OUT_DIR_ENV) {
        let p = PathBuf::from(dir).join(default_name);
        write_file(&p, text)?;
        eprintln!("wrote {}", p.display());
        return Ok(());
    }
    std::io::stdout()
        .write_all(text.as_bytes())
        .map_err(|e| usage(format!("cannot write to standard output: {e}")))
}

/// Runs a resolved config and renders its primary output.
fn execute(config: &RunConfig, format: Format) -> CliResult<String> {
    match config {
        RunConfig::Spectrum(run) => {
            let s = compute_spectrum(run)?;
            Ok(SpectrumFile::new(config.clone(), &s)?.render(format))
        }
        RunConfig::Mc(run) => {
            let s = run_monte_carlo(run)?;
            Ok(SpectrumFile::new(config.clone(), &s)?.render(format))
        }
        RunConfig::Figure(run) => compute_figure(run)?.table.render(format),
    }
}

fn cmd_spectrum(a: SpectrumArgs) -> CliResult<ExitCode> {
    commands::check_tau(a.tau)?;
    let run = SpectrumRun {
        model: a.model,
        tau: a.tau,
        gamma: a.gamma,
        smooth: a.smooth,
        sigma_rel: a.sigma_rel,
        nmax: match a.nmax {
            Some(n) => n,
            None => default_nmax(a.model, a.tau)?,
        },
        initial: a.initial,
        seed: a.seed,
        trajectories: a.trajectories,
    };
    let name = format!(
        "spectrum-{}-tau{}.{}",
        run.model.name(),
        run.tau,
        a.output.format.extension()
    );
    let text = execute(&RunConfig::Spectrum(run), a.output.format)?;
    emit(&text, a.output.out.as_deref(), &name)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_mc(a: McArgs) -> CliResult<ExitCode> {
    let run = McRun {
        tau: a.tau,
        trajectories: a.trajectories,
        seed: a.seed,
        zeta: a.zeta,
        coupled: a.coupled,
        gamma: a.gamma,
        initial: a.initial,
    };
    let name = format!(
        "mc-tau{}-seed{}.{}",
        run.tau,
        run.seed,
        a.output.format.extension()
    );
    let text = execute(&RunConfig::Mc(run), a.output.format)?;
    emit(&text, a.output.out.as_deref(), &name)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_figure(a: FigureArgs) -> CliResult<ExitCode> {
    let overrides = FigureOverrides {
        tau: a.tau,
        tau_max: a.tau_max,
        step: a.step,
        gamma: a.gamma,
        sigma_rel: a.sigma_rel,
        nmax: a.nmax,
    };
    let run = resolve_figure(a.id, overrides)?;
    let out = compute_figure(&run)?;
    let dir = a
        .out_dir
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| usage(format!("cannot create {}: {e}", dir.display())))?;
    let ext = a.format.extension();
    let mut files = vec![(
        dir.join(format!("fig{}.{ext}", run.id)),
        out.table.render(a.format)?,
    )];
    for (stem, spec_run, s) in &out.spectra {
        let f = SpectrumFile::new(RunConfig::Spectrum(spec_run.clone()), s)?;
        files.push((dir.join(format!("{stem}.{ext}")), f.render(a.format)));
    }
    for (path, text) in &files {
        write_file(path, text)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_compare(a: CompareArgs) -> CliResult<ExitCode> {
    let sa = SpectrumFile::parse(&read_text(&a.a)?)?.to_spectrum()?;
    let sb = SpectrumFile::parse(&read_text(&a.b)?)?.to_spectrum()?;
    let max_abs_k = match a.max_abs_n {
        None => None,
        Some(n) if n >= 0.0 && n.is_finite() => Some((2.0 * n).floor() as i64),
        Some(n) => return Err(usage(format!("max-abs-n must be non-negative, got {n}"))),
    };
    let opts = CompareOptions {
        tol: a.tol,
        max_abs_k,
        min_expected: a.min_expected,
    };
    let r = commands::compare(&sa, &sb, a.metric, &opts)?;
    let report = CompareReport::new(a.a.display().to_string(), a.b.display().to_string(), &r);
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    match a.out {
        Some(p) => write_file(&p, &text)?,
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| usage(format!("cannot write to standard output: {e}")))?;
        }
    }
    eprintln!(
        "{} = {} (tol {}): {}",
        r.metric,
        r.value,
        r.tol,
        if r.pass { "pass" } else { "fail" }
    );
    Ok(if r.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_replay(a: ReplayArgs) -> CliResult<ExitCode> {
    let (format, config) = read_header(&read_text(&a.file)?)?;
    let text = execute(&config, format)?;
    match a.out {
        Some(p) => write_file(&p, &text)?,
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| usage(format!("cannot write to standard output: {e}")))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> CliResult<ExitCode> {
    match cli.command {
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Mc(a) => cmd_mc(a),
        Command::Figure(a) => cmd_figure(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Replay(a) => cmd_replay(a),
    }
}

fn main() -> ExitCode {
    // clap exits with code 2 on usage errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            let kind = match e {
                CliError::Usage(_) => "error",
                CliError::Numerical(_) => "numerical failure",
            };
            eprintln!("kapitza: {kind}: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
