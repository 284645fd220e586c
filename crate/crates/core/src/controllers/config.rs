use serde::{Deserialize, Serialize};

use super::{ControllerError, Decision, MfFamily, TimerDecision};
use crate::fuzzy::{LinguisticVariable, MembershipFunction, Term};

pub const DTEMP_TERMS: [&str; 4] = ["very-small", "small", "medium", "large"];
pub const TIME_TERMS: [&str; 5] = ["very-early", "early", "right", "late", "very-late"];

/// Main-controller rule grid, rows indexed by Dtemp term and columns by Time
/// term.
pub const TABLE_ONE: [[Decision; 5]; 4] = {
    use Decision::{Continue as C, Stop as S};
    [
        [C, S, S, S, S],
        [C, C, S, S, S],
        [C, C, C, S, S],
        [C, C, C, C, C],
    ]
};

pub const TIMER_RULES: [TimerDecision; 4] = [
    TimerDecision::Start,
    TimerDecision::Start,
    TimerDecision::Start,
    TimerDecision::Stop,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleGrid {
    /// `main[dtemp_term][time_term]`.
    pub main: [[Decision; 5]; 4],
}

impl Default for RuleGrid {
    fn default() -> Self {
        Self { main: TABLE_ONE }
    }
}

/// Timer controller settings. Its Dtemp terms are the main controller's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimerSection {
    #[serde(default = "half")]
    pub start_threshold: f64,
    #[serde(default = "timer_rules")]
    pub rules: [TimerDecision; 4],
}

impl Default for TimerSection {
    fn default() -> Self {
        Self {
            start_threshold: 0.5,
            rules: TIMER_RULES,
        }
    }
}

fn half() -> f64 {
    0.5
}

fn timer_rules() -> [TimerDecision; 4] {
    TIMER_RULES
}

/// Full parameterization of the two-stage fuzzy controller.
///
/// Always validated: deserialization and [`MainControllerConfig::new`] both
/// reject configs that break term ordering or range coverage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConfigRepr", into = "ConfigRepr")]
pub struct MainControllerConfig {
    pub family: MfFamily,
    pub decision_threshold: f64,
    pub dtemp: LinguisticVariable,
    pub time: LinguisticVariable,
    pub rules: RuleGrid,
    pub timer: TimerSection,
}

const TRIANGULAR_MIX_TOML: &str = include_str!("../../configs/controllers/triangular-mix.toml");
const TRAPEZOIDAL_TOML: &str = include_str!("../../configs/controllers/trapezoidal.toml");
const GAUSSIAN_TOML: &str = include_str!("../../configs/controllers/gaussian.toml");

impl MainControllerConfig {
    /// Builds a config with the standard rule grid and thresholds.
    pub fn new(
        family: MfFamily,
        dtemp_mfs: [MembershipFunction; 4],
        time_mfs: [MembershipFunction; 5],
    ) -> Result<Self, ControllerError> {
        let dtemp = LinguisticVariable::new(
            "dtemp",
            (0.0, crate::plant::DTEMP_MAX),
            DTEMP_TERMS
                .iter()
                .zip(dtemp_mfs)
                .map(|(n, mf)| Term::new(*n, mf))
                .collect(),
        )?;
        let time = LinguisticVariable::new(
            "time",
            (0.0, 40.0),
            TIME_TERMS
                .iter()
                .zip(time_mfs)
                .map(|(n, mf)| Term::new(*n, mf))
                .collect(),
        )?;
        let cfg = Self {
            family,
            decision_threshold: 0.5,
            dtemp,
            time,
            rules: RuleGrid::default(),
            timer: TimerSection::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The calibrated configuration shipped with the crate.
    pub fn canonical(family: MfFamily) -> Self {
        let text = match family {
            MfFamily::TriangularMix => TRIANGULAR_MIX_TOML,
            MfFamily::Trapezoidal => TRAPEZOIDAL_TOML,
            MfFamily::Gaussian => GAUSSIAN_TOML,
        };
        Self::from_toml(text).expect("shipped controller config is valid")
    }

    pub fn from_toml(text: &str) -> Result<Self, ControllerError> {
        toml::from_str(text).map_err(|e| ControllerError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("controller config serializes")
    }

    pub fn dtemp_mfs(&self) -> [MembershipFunction; 4] {
        std::array::from_fn(|i| self.dtemp.terms()[i].mf)
    }

    pub fn time_mfs(&self) -> [MembershipFunction; 5] {
        std::array::from_fn(|j| self.time.terms()[j].mf)
    }

    pub fn validate(&self) -> Result<(), ControllerError> {
        for (what, th) in [
            ("decision_threshold", self.decision_threshold),
            ("timer.start_threshold", self.timer.start_threshold),
        ] {
            if !(th > 0.0 && th < 1.0) {
                return Err(ControllerError::InvalidConfig(format!(
                    "{what} must lie in (0, 1), got {th}"
                )));
            }
        }
        check_variable(&self.dtemp, DTEMP_TERMS.len())?;
        check_variable(&self.time, TIME_TERMS.len())?;
        Ok(())
    }
}

/// Term count, strictly increasing peaks inside the range, and coverage: some
/// term has a positive grade everywhere on the range.
fn check_variable(var: &LinguisticVariable, n_terms: usize) -> Result<(), ControllerError> {
    let name = var.name();
    let terms = var.terms();
    if terms.len() != n_terms {
        return Err(ControllerError::InvalidConfig(format!(
            "{name} needs {n_terms} terms, got {}",
            terms.len()
        )));
    }
    let (lo, hi) = var.range();
    let peaks: Vec<f64> = terms.iter().map(|t| t.mf.peak()).collect();
    if peaks.iter().any(|p| !(lo..=hi).contains(p)) || peaks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ControllerError::InvalidConfig(format!(
            "{name} term peaks must increase strictly within [{lo}, {hi}], got {peaks:?}"
        )));
    }
    if terms
        .iter()
        .any(|t| matches!(t.mf, MembershipFunction::Singleton { .. }))
    {
        return Err(ControllerError::InvalidConfig(format!(
            "{name} terms must not be singletons"
        )));
    }
    // Piecewise-linear grades are linear between breakpoints, so checking
    // every breakpoint plus the range ends suffices.
    let mut points = vec![lo, hi];
    for t in terms {
        points.extend(t.mf.params().into_iter().filter(|p| (lo..=hi).contains(p)));
    }
    if let Some(x) = points
        .into_iter()
        .find(|&x| var.grades(x).iter().all(|&g| g <= 0.0))
    {
        return Err(ControllerError::InvalidConfig(format!(
            "{name} terms leave {x} uncovered"
        )));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigRepr {
    family: MfFamily,
    #[serde(default = "half")]
    decision_threshold: f64,
    dtemp: LinguisticVariable,
    time: LinguisticVariable,
    #[serde(default)]
    rules: RuleGrid,
    #[serde(default)]
    timer: TimerSection,
}

impl TryFrom<ConfigRepr> for MainControllerConfig {
    type Error = ControllerError;

    fn try_from(r: ConfigRepr) -> Result<Self, Self::Error> {
        let cfg = Self {
            family: r.family,
            decision_threshold: r.decision_threshold,
            dtemp: r.dtemp,
            time: r.time,
            rules: r.rules,
            timer: r.timer,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl From<MainControllerConfig> for ConfigRepr {
    fn from(c: MainControllerConfig) -> Self {
        Self {
            family: c.family,
            decision_threshold: c.decision_threshold,
            dtemp: c.dtemp,
            time: c.time,
            rules: c.rules,
            timer: c.timer,
        }
    }
}
