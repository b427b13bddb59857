//! Line labels and finite momentum spectra.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

/// Momentum line label stored as the doubled integer `k = 2n`.
///
/// Integral `n` (even `k`) carries the lower internal state for an atom that
/// entered in its lower state; half-integral `n` (odd `k`) carries the upper
/// state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfIndex(i64);

impl HalfIndex {
    pub const ZERO: HalfIndex = HalfIndex(0);

    pub fn new(k: i64) -> Self {
        Self(k)
    }

    /// The line carrying integral momentum `n`.
    pub fn integer(n: i64) -> Self {
        Self(2 * n)
    }

    pub fn k(self) -> i64 {
        self.0
    }

    /// The line label `n = k / 2`.
    pub fn n(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn parity(self) -> Parity {
        if self.0 % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn is_even(self) -> bool {
        self.parity() == Parity::Even
    }

    pub fn mirrored(self) -> Self {
        Self(-self.0)
    }
}

impl fmt::Display for HalfIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.n())
    }
}

/// Parity of a line, or of the internal state an atom starts in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn flipped(self) -> Self {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }
}

/// Which model produced a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelTag {
    /// Squared Bessel lines of the diffraction model at vanishing gamma.
    Qm0,
    /// Order gamma^2 diffraction lines, even and odd.
    Qm,
    /// Diffraction lines with the fast phases averaged out.
    QmAveraged,
    /// Single-step Markov model averaged over the hidden phase.
    Stoch0,
    /// Coupled even/odd Markov model, exact closed form.
    Coupled,
    /// Coupled model in its order gamma^2 expansion.
    CoupledApprox,
    MonteCarlo,
    /// Arcsine density of the deterministic deflection.
    Classical,
    /// Reconstructed from a sampled characteristic function.
    Inverted,
}

impl ModelTag {
    pub fn name(self) -> &'static str {
        match self {
            ModelTag::Qm0 => "qm0",
            ModelTag::Qm => "qm",
            ModelTag::QmAveraged => "qm-averaged",
            ModelTag::Stoch0 => "stoch0",
            ModelTag::Coupled => "coupled",
            ModelTag::CoupledApprox => "coupled-approx",
            ModelTag::MonteCarlo => "mc",
            ModelTag::Classical => "classical",
            ModelTag::Inverted => "inverted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub intensity: f64,
    pub stderr: Option<f64>,
}

/// Finite map from line labels to intensities at one transit time.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub tau: f64,
    pub model: ModelTag,
    lines: BTreeMap<HalfIndex, Line>,
    /// Number of Monte Carlo trajectories behind the estimate, if any.
    pub samples: Option<u64>,
}

impl Spectrum {
    pub fn new(tau: f64, model: ModelTag) -> Self {
        Self {
            tau,
            model,
            lines: BTreeMap::new(),
            samples: None,
        }
    }

    /// Evaluates `f` on every label in `ks`.
    pub fn from_fn<I, F>(tau: f64, model: ModelTag, ks: I, f: F) -> Self
    where
        I: IntoIterator<Item = HalfIndex>,
        F: Fn(HalfIndex) -> f64,
    {
        let mut s = Self::new(tau, model);
        for k in ks {
            s.insert(k, f(k));
        }
        s
    }

    pub fn insert(&mut self, k: HalfIndex, intensity: f64) {
        self.lines.insert(
            k,
            Line {
                intensity,
                stderr: None,
            },
        );
    }

    pub fn insert_with_error(&mut self, k: HalfIndex, intensity: f64, stderr: f64) {
        self.lines.insert(
            k,
            Line {
                intensity,
                stderr: Some(stderr),
            },
        );
    }

    /// Intensity at `k`; zero outside the stored support.
    pub fn intensity(&self, k: HalfIndex) -> f64 {
        self.lines.get(&k).map_or(0.0, |l| l.intensity)
    }

    pub fn line(&self, k: HalfIndex) -> Option<&Line> {
        self.lines.get(&k)
    }

    pub fn iter(&self) -> impl Iterator<Item = (HalfIndex, &Line)> + '_ {
        self.lines.iter().map(|(k, l)| (*k, l))
    }

    pub fn labels(&self) -> impl Iterator<Item = HalfIndex> + '_ {
        self.lines.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.lines.values().map(|l| l.intensity).sum()
    }

    pub fn mass_with_parity(&self, parity: Parity) -> f64 {
        self.iter()
            .filter(|(k, _)| k.parity() == parity)
            .map(|(_, l)| l.intensity)
            .sum()
    }

    pub fn peak(&self) -> f64 {
        self.lines.values().map(|l| l.intensity).fold(0.0, f64::max)
    }

    /// `F(theta) = sum_k rho_k exp(i k theta / 2)`.
    pub fn char_fn(&self, theta: f64) -> Complex64 {
        self.iter()
            .map(|(k, l)| Complex64::from_polar(l.intensity, 0.5 * k.k() as f64 * theta))
            .sum()
    }

    /// Average of the spectrum and its mirror image.
    pub fn symmetrized(&self) -> Spectrum {
        let mut out = Spectrum::new(self.tau, self.model);
        out.samples = self.samples;
        for k in self.labels().chain(self.labels().map(HalfIndex::mirrored)) {
            let v = 0.5 * (self.intensity(k) + self.intensity(k.mirrored()));
            out.insert(k, v);
        }
        out
    }

    /// Largest deviation from mirror symmetry over the support.
    pub fn asymmetry(&self) -> f64 {
        self.iter()
            .map(|(k, l)| (l.intensity - self.intensity(k.mirrored())).abs())
            .fold(0.0, f64::max)
    }
}

/// Line labels `-kmax..=kmax` stepping over every half-integer.
pub fn half_window(kmax: i64) -> impl Iterator<Item = HalfIndex> {
    (-kmax..=kmax).map(HalfIndex::new)
}

/// Integral lines `-nmax..=nmax`.
pub fn integer_window(nmax: i64) -> impl Iterator<Item = HalfIndex> {
    (-nmax..=nmax).map(HalfIndex::integer)
}
