//! Stop/continue decision makers: interval-rule crisp controllers and the
//! two-stage fuzzy controller (timer plus twenty-rule main controller).

mod calibrate;
mod config;
mod crisp;
mod fuzzy;

use serde::{Deserialize, Serialize};

pub use calibrate::{
    calibrate, calibrate_from, calibration_violation, initial_guess, sweep, tt_window,
    StaircaseSpec, StopCell, SweepOutcome, BAND_PROBES, SWEEP_BUDGET,
};
pub use config::{MainControllerConfig, RuleGrid, TimerSection};
pub use crisp::{
    crisp_refined_decide, crisp_simple_decide, crisp_sixteen_decide, CrispRule, CRISP_TIMER_START,
    SIXTEEN_RULES,
};
pub use fuzzy::{FuzzyController, TIME_STEP};

use crate::fuzzy::FuzzyError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    Continue,
    Stop,
}

impl Decision {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Continue => "CONTINUE",
            Self::Stop => "STOP",
        }
    }
}

impl std::fmt::Display for Decision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimerDecision {
    Start,
    Stop,
}

impl std::fmt::Display for TimerDecision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Start => "START",
            Self::Stop => "STOP",
        })
    }
}

/// Membership-function family of the main controller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MfFamily {
    /// Trapezoidal shoulders with triangular inner terms.
    TriangularMix,
    Trapezoidal,
    Gaussian,
}

impl MfFamily {
    pub const ALL: [MfFamily; 3] = [Self::TriangularMix, Self::Trapezoidal, Self::Gaussian];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::TriangularMix => "triangular-mix",
            Self::Trapezoidal => "trapezoidal",
            Self::Gaussian => "gaussian",
        }
    }
}

impl std::fmt::Display for MfFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MfFamily {
    type Err = ControllerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "triangular-mix" | "triangular" => Ok(Self::TriangularMix),
            "trapezoidal" => Ok(Self::Trapezoidal),
            "gaussian" => Ok(Self::Gaussian),
            other => Err(ControllerError::InvalidConfig(format!(
                "unknown family {other:?} (expected triangular-mix, trapezoidal or gaussian)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ControllerError {
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
    #[error("invalid controller config: {0}")]
    InvalidConfig(String),
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("calibration failed: best violation {violation:.4} after {evaluations} evaluations")]
    CalibrationFailed { violation: f64, evaluations: usize },
}
