//! Exact event-driven simulation of the scattering walks.
//!
//! Each trajectory draws from its own ChaCha stream selected by
//! `(seed, trajectory index)`, and the per-chunk histograms are merged with
//! integer addition, so the output does not depend on how the work is split
//! across threads.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spectrum::{HalfIndex, ModelTag, Parity, Spectrum};
use crate::stochastic_model::concrete_rates;

/// Trajectories per parallel work unit. Fixed so chunk boundaries never
/// depend on the thread count.
const CHUNK: u64 = 4096;

/// How the hidden phase is chosen for each trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZetaMode {
    Fixed(f64),
    /// Uniform on `(-pi/2, pi/2]`, drawn per trajectory.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCConfig {
    pub trajectories: u64,
    pub seed: u64,
    pub tau: f64,
    /// Selects the coupled walk when present.
    pub gamma: Option<f64>,
    pub zeta_mode: ZetaMode,
    /// Internal state on entry; only the coupled walk distinguishes the two.
    pub initial: Parity,
}

impl MCConfig {
    pub fn single_step(tau: f64, trajectories: u64, seed: u64) -> Self {
        Self {
            trajectories,
            seed,
            tau,
            gamma: None,
            zeta_mode: ZetaMode::Uniform,
            initial: Parity::Even,
        }
    }

    pub fn coupled(tau: f64, gamma: f64, initial: Parity, trajectories: u64, seed: u64) -> Self {
        Self {
            gamma: Some(gamma),
            initial,
            ..Self::single_step(tau, trajectories, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trajectories == 0 {
            return Err(Error::InvalidInput("need at least one trajectory".into()));
        }
        if !(self.tau >= 0.0) || !self.tau.is_finite() {
            return Err(Error::Domain {
                what: "MCConfig: tau",
                value: self.tau,
            });
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g < 1.0) {
                return Err(Error::Domain {
                    what: "MCConfig: gamma",
                    value: g,
                });
            }
        }
        if let ZetaMode::Fixed(z) = self.zeta_mode {
            if !z.is_finite() {
                return Err(Error::Domain {
                    what: "MCConfig: zeta",
                    value: z,
                });
            }
        }
        Ok(())
    }
}

/// Position and elapsed time of one walker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryState {
    pub k: HalfIndex,
    pub t: f64,
}

impl TrajectoryState {
    pub fn start() -> Self {
        Self {
            k: HalfIndex::ZERO,
            t: 0.0,
        }
    }

    pub fn parity(&self) -> Parity {
        self.k.parity()
    }

    /// Internal state: the line parity, flipped when the atom entered in
    /// the upper state.
    pub fn internal(&self, initial: Parity) -> Parity {
        match initial {
            Parity::Even => self.parity(),
            Parity::Odd => self.parity().flipped(),
        }
    }
}

/// The random stream of trajectory `index` under `seed`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform draw on `(-pi/2, pi/2]`.
pub fn sample_zeta<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    FRAC_PI_2 - PI * rng.random::<f64>()
}

fn waiting_time<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let e: f64 = rng.sample(Exp1);
    e / rate
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleStepOutcome {
    pub n: i64,
    pub jumps: u64,
}

/// Net displacement at `tau` of the walk with the phase-`zeta` rates.
pub fn simulate_single_step<R: Rng + ?Sized>(zeta: f64, tau: f64, rng: &mut R) -> i64 {
    simulate_single_step_detailed(zeta, tau, rng).n
}

pub fn simulate_single_step_detailed<R: Rng + ?Sized>(
    zeta: f64,
    tau: f64,
    rng: &mut R,
) -> SingleStepOutcome {
    let rates = concrete_rates(zeta);
    let total = rates.total();
    let mut out = SingleStepOutcome { n: 0, jumps: 0 };
    if !(total > 0.0) || !(tau > 0.0) {
        return out;
    }
    let p_up = rates.alpha / total;
    let mut t = 0.0;
    loop {
        t += waiting_time(rng, total);
        if t > tau {
            return out;
        }
        out.n += if rng.random::<f64>() < p_up { 1 } else { -1 };
        out.jumps += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledOutcome {
    pub k: HalfIndex,
    pub jumps: u64,
    /// Total time spent in the upper internal state, including a sojourn cut
    /// off at `tau`.
    pub upper_time: f64,
    /// Upper-state sojourns that ended before `tau`, and their total length.
    pub completed_upper_visits: u64,
    pub completed_upper_time: f64,
}

/// Final line of the coupled walk: from the lower state a half step either
/// way at rate 1 each; from the upper state `+1/2` at rate
/// `(1 + sin 2 zeta) / gamma^2` and `-1/2` at rate `(1 - sin 2 zeta) / gamma^2`.
pub fn simulate_coupled<R: Rng + ?Sized>(
    zeta: f64,
    tau: f64,
    gamma: f64,
    initial: Parity,
    rng: &mut R,
) -> HalfIndex {
    simulate_coupled_detailed(zeta, tau, gamma, initial, rng).k
}

pub fn simulate_coupled_detailed<R: Rng + ?Sized>(
    zeta: f64,
    tau: f64,
    gamma: f64,
    initial: Parity,
    rng: &mut R,
) -> CoupledOutcome {
    let g2 = gamma * gamma;
    let s = (2.0 * zeta).sin();
    let upper_rate = 2.0 / g2;
    let p_up_from_upper = 0.5 * (1.0 + s);
    let mut state = TrajectoryState::start();
    let mut out = CoupledOutcome {
        k: state.k,
        jumps: 0,
        upper_time: 0.0,
        completed_upper_visits: 0,
        completed_upper_time: 0.0,
    };
    if !(tau > 0.0) {
        return out;
    }
    loop {
        let upper = state.internal(initial) == Parity::Odd;
        let (rate, p_up) = if upper {
            (upper_rate, p_up_from_upper)
        } else {
            (2.0, 0.5)
        };
        let dt = waiting_time(rng, rate);
        if state.t + dt > tau {
            if upper {
                out.upper_time += tau - state.t;
            }
            out.k = state.k;
            return out;
        }
        state.t += dt;
        if upper {
            out.upper_time += dt;
            out.completed_upper_time += dt;
            out.completed_upper_visits += 1;
        }
        let step = if rng.random::<f64>() < p_up { 1 } else { -1 };
        state.k = HalfIndex::new(state.k.k() + step);
        out.jumps += 1;
    }
}

fn run_one(config: &MCConfig, index: u64) -> HalfIndex {
    let mut rng = trajectory_rng(config.seed, index);
    let zeta = match config.zeta_mode {
        ZetaMode::Fixed(z) => z,
        ZetaMode::Uniform => sample_zeta(&mut rng),
    };
    match config.gamma {
        None => HalfIndex::integer(simulate_single_step(zeta, config.tau, &mut rng)),
        Some(g) => simulate_coupled(zeta, config.tau, g, config.initial, &mut rng),
    }
}

/// Final-line counts over all trajectories.
pub fn histogram(config: &MCConfig) -> Result<BTreeMap<HalfIndex, u64>> {
    config.validate()?;
    let chunks = config.trajectories.div_ceil(CHUNK);
    let merged = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(config.trajectories);
            let mut h = BTreeMap::new();
            for i in lo..hi {
                *h.entry(run_one(config, i)).or_insert(0u64) += 1;
            }
            h
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (k, c) in b {
                *a.entry(k).or_insert(0) += c;
            }
            a
        });
    Ok(merged)
}

/// Normalised histogram with binomial standard errors `sqrt(p (1 - p) / N)`.
pub fn estimate_spectrum(config: &MCConfig) -> Result<Spectrum> {
    let counts = histogram(config)?;
    let n = config.trajectories as f64;
    let mut out = Spectrum::new(config.tau, ModelTag::MonteCarlo);
    out.samples = Some(config.trajectories);
    for (k, c) in counts {
        let p = c as f64 / n;
        out.insert_with_error(k, p, (p * (1.0 - p) / n).sqrt());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic_model::{occupation_prob, RatePair};
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn zero_tau_stays_at_start() {
        let mut rng = trajectory_rng(1, 0);
        assert_eq!(simulate_single_step(0.3, 0.0, &mut rng), 0);
        assert_eq!(
            simulate_coupled(0.3, 0.0, 0.2, Parity::Odd, &mut rng),
            HalfIndex::ZERO
        );
        let s = estimate_spectrum(&MCConfig::single_step(0.0, 1, 9)).unwrap();
        assert_eq!(s.intensity(HalfIndex::ZERO), 1.0);
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(estimate_spectrum(&MCConfig::single_step(1.0, 0, 0)).is_err());
        assert!(estimate_spectrum(&MCConfig::single_step(-1.0, 10, 0)).is_err());
        assert!(estimate_spectrum(&MCConfig::coupled(1.0, 1.5, Parity::Even, 10, 0)).is_err());
    }

    #[test]
    fn streams_differ_and_repeat() {
        let a: f64 = trajectory_rng(5, 0).random();
        let b: f64 = trajectory_rng(5, 1).random();
        let c: f64 = trajectory_rng(5, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn zeta_samples_in_range() {
        let mut rng = trajectory_rng(0, 0);
        for _ in 0..10000 {
            let z = sample_zeta(&mut rng);
            assert!(z > -FRAC_PI_2 && z <= FRAC_PI_2);
        }
    }

    #[test]
    fn pure_birth_is_poisson() {
        let n = 200_000u64;
        let cfg = MCConfig {
            zeta_mode: ZetaMode::Fixed(FRAC_PI_4),
            ..MCConfig::single_step(3.0, n, 11)
        };
        let s = estimate_spectrum(&cfg).unwrap();
        let mean: f64 = s.iter().map(|(k, l)| k.n() * l.intensity).sum();
        assert!((mean - 3.0).abs() < 3.0 * (3.0 / n as f64).sqrt() * 1.5);
        assert!(s.labels().all(|k| k.k() >= 0));
    }

    #[test]
    fn node_phase_matches_occupation_oracle() {
        let n = 200_000u64;
        let cfg = MCConfig {
            zeta_mode: ZetaMode::Fixed(0.0),
            ..MCConfig::single_step(3.0, n, 3)
        };
        let s = estimate_spectrum(&cfg).unwrap();
        let rates = RatePair::new(0.5, 0.5).unwrap();
        let mut bad = 0;
        for m in -6..=6 {
            let p = occupation_prob(m, 3.0, rates);
            let se = (p * (1.0 - p) / n as f64).sqrt();
            if (s.intensity(HalfIndex::integer(m)) - p).abs() > 3.0 * se {
                bad += 1;
            }
        }
        assert!(bad <= 1, "{bad} bins outside 3 sigma");
    }

    #[test]
    fn single_step_lines_are_even_and_coupled_alternate() {
        let mut rng = trajectory_rng(2, 0);
        let out = simulate_coupled_detailed(0.1, 5.0, 0.3, Parity::Even, &mut rng);
        assert_eq!(out.k.k().rem_euclid(2) as u64, out.jumps % 2);
        let s = estimate_spectrum(&MCConfig::single_step(2.0, 5000, 1)).unwrap();
        assert!(s.labels().all(|k| k.is_even()));
    }

    #[test]
    fn mean_jump_count_equals_tau() {
        let n = 100_000u64;
        let mut total = 0u64;
        for i in 0..n {
            let mut rng = trajectory_rng(4, i);
            let z = sample_zeta(&mut rng);
            total += simulate_single_step_detailed(z, 2.5, &mut rng).jumps;
        }
        let mean = total as f64 / n as f64;
        assert!((mean - 2.5).abs() < 4.0 * (2.5 / n as f64).sqrt());
    }

    #[test]
    fn upper_sojourn_mean() {
        let gamma: f64 = 0.3;
        let n = 20_000u64;
        let (mut time, mut visits) = (0.0, 0u64);
        for i in 0..n {
            let mut rng = trajectory_rng(6, i);
            let z = sample_zeta(&mut rng);
            let o = simulate_coupled_detailed(z, 4.0, gamma, Parity::Even, &mut rng);
            time += o.upper_time;
            visits += o.completed_upper_visits;
        }
        // censored exponential: total exposure over completed sojourns
        let mean = time / visits as f64;
        let want = gamma * gamma / 2.0;
        // exponential sojourns: relative standard error 1/sqrt(visits)
        assert!(((mean - want) / want).abs() < 4.0 / (visits as f64).sqrt());
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let cfg = MCConfig::coupled(2.0, 0.25, Parity::Odd, 20_000, 42);
        let a = estimate_spectrum(&cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| estimate_spectrum(&cfg).unwrap());
        assert_eq!(a, b);
    }
}
