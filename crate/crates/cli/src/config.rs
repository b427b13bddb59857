//! Fully resolved run configurations.
//!
//! Every output file embeds the [`RunConfig`] that produced it, so a file can
//! be regenerated from its own header.

use std::fmt;
use std::str::FromStr;

use clap::ValueEnum;
use kapitza_core::{ModelTag, Parity};
use serde::{Deserialize, Serialize};

use crate::error::{usage, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Qm0,
    Qm,
    QmAveraged,
    Stoch0,
    Coupled,
    CoupledApprox,
    Classical,
    Mc,
}

impl Model {
    pub fn tag(self) -> ModelTag {
        match self {
            Model::Qm0 => ModelTag::Qm0,
            Model::Qm => ModelTag::Qm,
            Model::QmAveraged => ModelTag::QmAveraged,
            Model::Stoch0 => ModelTag::Stoch0,
            Model::Coupled => ModelTag::Coupled,
            Model::CoupledApprox => ModelTag::CoupledApprox,
            Model::Classical => ModelTag::Classical,
            Model::Mc => ModelTag::MonteCarlo,
        }
    }

    pub fn name(self) -> &'static str {
        self.tag().name()
    }
}

/// Internal state of the atom on entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Initial {
    /// Lower state.
    Even,
    /// Upper state.
    Odd,
}

impl From<Initial> for Parity {
    fn from(i: Initial) -> Self {
        match i {
            Initial::Even => Parity::Even,
            Initial::Odd => Parity::Odd,
        }
    }
}

/// Phase selection for Monte Carlo runs: `uniform` or a fixed value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Zeta {
    Uniform,
    Fixed(f64),
}

impl FromStr for Zeta {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        if s.eq_ignore_ascii_case("uniform") {
            return Ok(Zeta::Uniform);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Zeta::Fixed(v)),
            _ => Err(usage(format!(
                "zeta must be `uniform` or a finite number, got {s:?}"
            ))),
        }
    }
}

impl fmt::Display for Zeta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Zeta::Uniform => f.write_str("uniform"),
            Zeta::Fixed(v) => write!(f, "{v}"),
        }
    }
}

impl From<Zeta> for String {
    fn from(z: Zeta) -> Self {
        z.to_string()
    }
}

impl TryFrom<String> for Zeta {
    type Error = CliError;

    fn try_from(s: String) -> Result<Self, CliError> {
        s.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumRun {
    pub model: Model,
    pub tau: f64,
    pub gamma: f64,
    pub smooth: bool,
    pub sigma_rel: f64,
    /// Lines `|n| <= nmax` are emitted.
    pub nmax: i64,
    pub initial: Initial,
    pub seed: u64,
    pub trajectories: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McRun {
    pub tau: f64,
    pub trajectories: u64,
    pub seed: u64,
    pub zeta: Zeta,
    pub coupled: bool,
    pub gamma: f64,
    pub initial: Initial,
}

/// Figure parameters; only the fields the figure uses are set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FigureRun {
    pub id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_rel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nmax: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    Spectrum(SpectrumRun),
    Mc(McRun),
    Figure(FigureRun),
}
