//! Command bodies, independent of argument parsing and file placement.

use kapitza_core::analysis::{
    classical_density, compare_spectra, deflection_angle, smoothed_classical, smoothed_spectrum,
    CompareOptions, ComparisonReport, Metric, VelocityProfile,
};
use kapitza_core::montecarlo::{estimate_spectrum, MCConfig, ZetaMode};
use kapitza_core::numerics::bessel_j_table;
use kapitza_core::qm_model::{
    qm0_intensity, qm0_spectrum, qm_intensity, qm_smoothed_intensity, qm_smoothed_spectrum,
    qm_spectrum, ModelParams, PhysicalContext,
};
use kapitza_core::spectrum::{half_window, integer_window};
use kapitza_core::stochastic_model::{
    coupled_spectrum, coupled_spectrum_approx, coupled_spectrum_with, stoch0_intensity,
    stoch0_spectrum, support_radius, CoupledOptions,
};
use kapitza_core::{HalfIndex, ModelTag, Spectrum};
use serde::Serialize;

use crate::config::{FigureRun, Initial, McRun, Model, RunConfig, SpectrumRun, Zeta};
use crate::dataset::{fmt_f64, Table};
use crate::error::{usage, CliResult};

/// Tail mass left outside the default line window.
pub const DEFAULT_WINDOW_EPS: f64 = 1e-10;

pub fn check_tau(tau: f64) -> CliResult<()> {
    if tau.is_finite() && tau >= 0.0 {
        Ok(())
    } else {
        Err(usage(format!(
            "tau must be finite and non-negative, got {tau}"
        )))
    }
}

/// Window `|n| <= nmax` holding all but [`DEFAULT_WINDOW_EPS`] of the
/// mass of `model`; a single line at `tau = 0`.
pub fn default_nmax(model: Model, tau: f64) -> CliResult<i64> {
    if tau == 0.0 {
        return Ok(0);
    }
    match model {
        Model::Qm0 | Model::Qm | Model::QmAveraged => bessel_window(tau),
        _ => Ok(support_radius(tau, DEFAULT_WINDOW_EPS)),
    }
}

/// Smallest `N` with `sum_{|n| > N} J_n(tau)^2 < DEFAULT_WINDOW_EPS`.
fn bessel_window(tau: f64) -> CliResult<i64> {
    let top = (tau + 40.0).ceil() as u32;
    let j = bessel_j_table(top, tau)?;
    let mut tail = 0.0;
    let mut n = top as usize;
    while n > 0 {
        let next = tail + 2.0 * j[n] * j[n];
        if next >= DEFAULT_WINDOW_EPS {
            break;
        }
        tail = next;
        n -= 1;
    }
    Ok(n as i64)
}

fn params(tau: f64, gamma: f64) -> CliResult<ModelParams> {
    Ok(ModelParams::new(tau, gamma)?)
}

fn qm_at(k: HalfIndex, tau: f64, gamma: f64) -> f64 {
    qm_intensity(k, &ModelParams { tau, gamma })
}

fn qm_averaged_at(k: HalfIndex, tau: f64, gamma: f64) -> f64 {
    qm_smoothed_intensity(k, &ModelParams { tau, gamma })
}

fn classical_lines(run: &SpectrumRun) -> CliResult<Spectrum> {
    if run.tau <= 0.0 {
        return Err(usage("the classical density needs tau > 0"));
    }
    let mut s = Spectrum::new(run.tau, ModelTag::Classical);
    let profile = VelocityProfile::new(run.sigma_rel)?;
    for k in integer_window(run.nmax) {
        let v = if run.smooth {
            smoothed_classical(k.n(), run.tau, profile)?
        } else {
            classical_density(k.n(), run.tau)
        };
        s.insert(k, v);
    }
    Ok(s)
}

fn smoothed_model(run: &SpectrumRun) -> CliResult<Spectrum> {
    let (tau, gamma, n) = (run.tau, run.gamma, run.nmax);
    let profile = VelocityProfile::new(run.sigma_rel)?;
    let tag = run.model.tag();
    let s = match run.model {
        Model::Qm0 => smoothed_spectrum(
            |k, t| qm0_intensity(k.k() / 2, t),
            integer_window(n),
            tau,
            profile,
            tag,
        )?,
        Model::Stoch0 => smoothed_spectrum(
            |k, t| stoch0_intensity(k.k() / 2, t),
            integer_window(n),
            tau,
            profile,
            tag,
        )?,
        Model::Qm => {
            params(tau, gamma)?;
            smoothed_spectrum(
                |k, t| qm_at(k, t, gamma),
                half_window(2 * n + 1),
                tau,
                profile,
                tag,
            )?
        }
        Model::QmAveraged => {
            params(tau, gamma)?;
            smoothed_spectrum(
                |k, t| qm_averaged_at(k, t, gamma),
                half_window(2 * n + 1),
                tau,
                profile,
                tag,
            )?
        }
        Model::Classical => classical_lines(run)?,
        Model::Coupled | Model::CoupledApprox | Model::Mc => {
            return Err(usage(format!(
                "--smooth is not available for model {}",
                run.model.name()
            )))
        }
    };
    Ok(s)
}

pub fn compute_spectrum(run: &SpectrumRun) -> CliResult<Spectrum> {
    check_tau(run.tau)?;
    if run.nmax < 0 {
        return Err(usage("nmax must be non-negative"));
    }
    if run.smooth {
        return smoothed_model(run);
    }
    let (tau, gamma, n) = (run.tau, run.gamma, run.nmax);
    let kmax = 2 * n + 1;
    let s = match run.model {
        Model::Qm0 => qm0_spectrum(tau, n),
        Model::Qm => qm_spectrum(&params(tau, gamma)?, n),
        Model::QmAveraged => qm_smoothed_spectrum(&params(tau, gamma)?, n),
        Model::Stoch0 => stoch0_spectrum(tau, n),
        Model::Coupled => {
            let opts = CoupledOptions {
                kmax: Some(kmax),
                ..CoupledOptions::default()
            };
            coupled_spectrum_with(tau, gamma, run.initial.into(), &opts)?
        }
        Model::CoupledApprox => {
            if run.initial != Initial::Even {
                return Err(usage(
                    "the approximate coupled spectrum covers lower-state entry only",
                ));
            }
            let a = coupled_spectrum_approx(tau, gamma)?;
            if let Some(w) = a.warning {
                eprintln!("warning: {w}");
            }
            let mut s = Spectrum::new(tau, ModelTag::CoupledApprox);
            for (k, l) in a.spectrum.iter().filter(|(k, _)| k.k().abs() <= kmax) {
                s.insert(k, l.intensity);
            }
            s
        }
        Model::Classical => classical_lines(run)?,
        Model::Mc => estimate_spectrum(&MCConfig::single_step(tau, run.trajectories, run.seed))?,
    };
    Ok(s)
}

pub fn mc_config(run: &McRun) -> MCConfig {
    let zeta_mode = match run.zeta {
        Zeta::Uniform => ZetaMode::Uniform,
        Zeta::Fixed(z) => ZetaMode::Fixed(z),
    };
    let base = if run.coupled {
        MCConfig::coupled(
            run.tau,
            run.gamma,
            run.initial.into(),
            run.trajectories,
            run.seed,
        )
    } else {
        MCConfig::single_step(run.tau, run.trajectories, run.seed)
    };
    MCConfig { zeta_mode, ..base }
}

pub fn run_monte_carlo(run: &McRun) -> CliResult<Spectrum> {
    check_tau(run.tau)?;
    Ok(estimate_spectrum(&mc_config(run))?)
}

/// Everything one figure emits: the table plus any spectrum files.
pub struct FigureOutput {
    pub table: Table,
    pub spectra: Vec<(String, SpectrumRun, Spectrum)>,
}

/// Fills in the defaults of figure `id`; explicit values win.
pub fn resolve_figure(id: u32, o: FigureOverrides) -> CliResult<FigureRun> {
    let sigma = o
        .sigma_rel
        .unwrap_or(kapitza_core::numerics::DEFAULT_SIGMA_REL);
    let run = match id {
        2 => FigureRun {
            id,
            tau: Some(o.tau.unwrap_or(50.0)),
            sigma_rel: Some(sigma),
            nmax: Some(o.nmax.unwrap_or(60)),
            ..FigureRun::bare(id)
        },
        3 => FigureRun {
            tau_max: Some(o.tau_max.unwrap_or(4.0)),
            step: Some(o.step.unwrap_or(0.02)),
            gamma: Some(o.gamma.unwrap_or(0.2)),
            sigma_rel: Some(sigma),
            nmax: Some(o.nmax.unwrap_or(2)),
            ..FigureRun::bare(id)
        },
        5 => FigureRun {
            tau_max: Some(o.tau_max.unwrap_or(5.0)),
            step: Some(o.step.unwrap_or(0.05)),
            nmax: Some(o.nmax.unwrap_or(5)),
            ..FigureRun::bare(id)
        },
        6 => FigureRun {
            tau_max: Some(o.tau_max.unwrap_or(1.0)),
            step: Some(o.step.unwrap_or(0.02)),
            gamma: Some(o.gamma.unwrap_or(0.2)),
            ..FigureRun::bare(id)
        },
        _ => return Err(usage(format!("unknown figure {id}; available: 2, 3, 5, 6"))),
    };
    Ok(run)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FigureOverrides {
    pub tau: Option<f64>,
    pub tau_max: Option<f64>,
    pub step: Option<f64>,
    pub gamma: Option<f64>,
    pub sigma_rel: Option<f64>,
    pub nmax: Option<i64>,
}

impl FigureRun {
    fn bare(id: u32) -> Self {
        Self {
            id,
            tau: None,
            tau_max: None,
            step: None,
            gamma: None,
            sigma_rel: None,
            nmax: None,
        }
    }
}

fn required<T>(v: Option<T>, name: &str) -> CliResult<T> {
    v.ok_or_else(|| usage(format!("figure config lacks {name}")))
}

/// `step, 2 step, ...` up to `tau_max`.
fn figure_grid(run: &FigureRun) -> CliResult<Vec<f64>> {
    let tau_max = required(run.tau_max, "tau_max")?;
    let step = required(run.step, "step")?;
    if !(step > 0.0 && tau_max >= step && tau_max.is_finite()) {
        return Err(usage(format!(
            "need 0 < step <= tau_max, got step {step}, tau_max {tau_max}"
        )));
    }
    let count = (tau_max / step + 1e-9).floor() as usize;
    Ok((1..=count).map(|i| i as f64 * step).collect())
}

fn label(n: f64) -> String {
    fmt_f64(n)
}

pub fn compute_figure(run: &FigureRun) -> CliResult<FigureOutput> {
    let config = RunConfig::Figure(run.clone());
    match run.id {
        2 => figure_large_tau(run, config),
        3 => {
            let gamma = required(run.gamma, "gamma")?;
            let profile = VelocityProfile::new(required(run.sigma_rel, "sigma_rel")?)?;
            let nmax = required(run.nmax, "nmax")?;
            params(0.0, gamma)?;
            let ks: Vec<HalfIndex> = (0..=2 * nmax).map(HalfIndex::new).collect();
            let mut columns = vec!["tau".to_string()];
            columns.extend(ks.iter().map(|k| format!("qm_n{}", label(k.n()))));
            let mut table = Table::new(config, columns);
            for tau in figure_grid(run)? {
                let s = smoothed_spectrum(
                    |k, t| qm_at(k, t, gamma),
                    ks.iter().copied(),
                    tau,
                    profile,
                    ModelTag::Qm,
                )?;
                let mut row = vec![tau];
                row.extend(ks.iter().map(|&k| s.intensity(k)));
                table.push(row);
            }
            Ok(FigureOutput {
                table,
                spectra: Vec::new(),
            })
        }
        5 => {
            let nmax = required(run.nmax, "nmax")?;
            let mut columns = vec!["tau".to_string()];
            columns.extend((0..=nmax).map(|n| format!("qm0_n{n}")));
            columns.extend((0..=nmax).map(|n| format!("stoch0_n{n}")));
            let mut table = Table::new(config, columns);
            for tau in figure_grid(run)? {
                let mut row = vec![tau];
                row.extend((0..=nmax).map(|n| qm0_intensity(n, tau)));
                row.extend((0..=nmax).map(|n| stoch0_intensity(n, tau)));
                table.push(row);
            }
            Ok(FigureOutput {
                table,
                spectra: Vec::new(),
            })
        }
        6 => {
            let gamma = required(run.gamma, "gamma")?;
            params(0.0, gamma)?;
            let columns = [
                "tau",
                "qm_averaged",
                "qm",
                "stoch0",
                "coupled",
                "coupled_approx",
            ]
            .map(String::from)
            .to_vec();
            let mut table = Table::new(config, columns);
            for tau in figure_grid(run)? {
                let z = HalfIndex::ZERO;
                let coupled = coupled_spectrum(tau, gamma, Initial::Even.into())?.intensity(z);
                let approx = coupled_spectrum_approx(tau, gamma)?.spectrum.intensity(z);
                table.push(vec![
                    tau,
                    qm_averaged_at(z, tau, gamma),
                    qm_at(z, tau, gamma),
                    stoch0_intensity(0, tau),
                    coupled,
                    approx,
                ]);
            }
            Ok(FigureOutput {
                table,
                spectra: Vec::new(),
            })
        }
        id => Err(usage(format!("unknown figure {id}; available: 2, 3, 5, 6"))),
    }
}

/// Smoothed diffraction and stochastic bars with the classical curve.
fn figure_large_tau(run: &FigureRun, config: RunConfig) -> CliResult<FigureOutput> {
    let tau = required(run.tau, "tau")?;
    let sigma_rel = required(run.sigma_rel, "sigma_rel")?;
    let nmax = required(run.nmax, "nmax")?;
    let mut spectra = Vec::new();
    for model in [Model::Qm0, Model::Stoch0, Model::Classical] {
        let spec_run = SpectrumRun {
            model,
            tau,
            gamma: 0.2,
            smooth: true,
            sigma_rel,
            nmax,
            initial: Initial::Even,
            seed: 0,
            trajectories: 1,
        };
        let s = compute_spectrum(&spec_run)?;
        spectra.push((format!("fig2-{}", model.name()), spec_run, s));
    }
    let sodium = PhysicalContext::sodium_d_line();
    let columns = ["n", "deflection_rad", "qm0", "stoch0", "classical"]
        .map(String::from)
        .to_vec();
    let mut table = Table::new(config, columns);
    for k in integer_window(nmax) {
        let mut row = vec![k.n(), deflection_angle(k, &sodium)];
        row.extend(spectra.iter().map(|(_, _, s)| s.intensity(k)));
        table.push(row);
    }
    Ok(FigureOutput { table, spectra })
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualRow {
    pub k: i64,
    pub n: f64,
    pub a: f64,
    pub b: f64,
    pub diff: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub version: String,
    pub a: String,
    pub b: String,
    pub metric: String,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
    pub dof: Option<usize>,
    pub residuals: Vec<ResidualRow>,
}

pub fn compare(
    a: &Spectrum,
    b: &Spectrum,
    metric: Metric,
    opts: &CompareOptions,
) -> CliResult<ComparisonReport> {
    Ok(compare_spectra(a, b, metric, opts)?)
}

impl CompareReport {
    pub fn new(a: String, b: String, r: &ComparisonReport) -> Self {
        Self {
            version: crate::dataset::VERSION.to_string(),
            a,
            b,
            metric: r.metric.name().to_string(),
            value: r.value,
            tol: r.tol,
            pass: r.pass,
            dof: r.dof,
            residuals: r
                .residuals
                .iter()
                .map(|x| ResidualRow {
                    k: x.k.k(),
                    n: x.k.n(),
                    a: x.a,
                    b: x.b,
                    diff: x.diff,
                })
                .collect(),
        }
    }
}
