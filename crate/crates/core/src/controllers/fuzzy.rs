use super::config::{DTEMP_TERMS, TIME_TERMS};
use super::{ControllerError, Decision, MainControllerConfig, TimerDecision};
use crate::fuzzy::{
    weighted_average, LinguisticVariable, MembershipFunction, Rule, RuleBase, Term,
};

/// Time resolution of constant-Dtemp stop-time simulations, minutes.
pub const TIME_STEP: f64 = 0.1;

/// Two-stage fuzzy controller: the timer rule base gates the observation
/// clock, the twenty-rule main base decides STOP/CONT.
#[derive(Debug, Clone)]
pub struct FuzzyController {
    cfg: MainControllerConfig,
    main: RuleBase,
    timer: RuleBase,
}

impl FuzzyController {
    pub fn new(cfg: MainControllerConfig) -> Result<Self, ControllerError> {
        cfg.validate()?;
        let decision = LinguisticVariable::new(
            "decision",
            (0.0, 1.0),
            vec![
                Term::new("stop", MembershipFunction::singleton(0.0)),
                Term::new("continue", MembershipFunction::singleton(1.0)),
            ],
        )?;
        let start = LinguisticVariable::new(
            "timer",
            (0.0, 1.0),
            vec![
                Term::new("stop", MembershipFunction::singleton(0.0)),
                Term::new("start", MembershipFunction::singleton(1.0)),
            ],
        )?;
        // Row-major over (dtemp term, time term); the fast stop-time path
        // below relies on this order.
        let mut rules = Vec::with_capacity(DTEMP_TERMS.len() * TIME_TERMS.len());
        for (i, row) in cfg.rules.main.iter().enumerate() {
            for (j, d) in row.iter().enumerate() {
                rules.push(Rule::new(vec![i, j], usize::from(*d == Decision::Continue)));
            }
        }
        let main = RuleBase::new(vec![cfg.dtemp.clone(), cfg.time.clone()], decision, rules)?;
        let timer_rules = cfg
            .timer
            .rules
            .iter()
            .enumerate()
            .map(|(i, d)| Rule::new(vec![i], usize::from(*d == TimerDecision::Start)))
            .collect();
        let timer = RuleBase::new(vec![cfg.dtemp.clone()], start, timer_rules)?;
        Ok(Self { cfg, main, timer })
    }

    pub fn canonical(family: super::MfFamily) -> Self {
        Self::new(MainControllerConfig::canonical(family)).expect("shipped config is valid")
    }

    pub fn config(&self) -> &MainControllerConfig {
        &self.cfg
    }

    pub fn main_rule_base(&self) -> &RuleBase {
        &self.main
    }

    pub fn timer_rule_base(&self) -> &RuleBase {
        &self.timer
    }

    /// Defuzzified main output and decision. Ties at the threshold stop.
    pub fn main_decide(&self, dtemp: f64, time: f64) -> Result<(f64, Decision), ControllerError> {
        let out = self.main.defuzzify_weighted_average(&[dtemp, time])?;
        Ok((out, self.threshold_decision(out)))
    }

    pub fn timer_decide(&self, dtemp: f64) -> Result<(f64, TimerDecision), ControllerError> {
        let out = self.timer.defuzzify_weighted_average(&[dtemp])?;
        let decision = if out >= self.cfg.timer.start_threshold {
            TimerDecision::Start
        } else {
            TimerDecision::Stop
        };
        Ok((out, decision))
    }

    /// Smallest Dtemp on a 0.001 °C grid at which the timer no longer starts.
    pub fn timer_crossing(&self) -> Result<f64, ControllerError> {
        let (_, hi) = self.cfg.dtemp.range();
        let n = (hi / 0.001).round() as usize;
        for k in 0..=n {
            let d = k as f64 * 0.001;
            if self.timer_decide(d)?.1 == TimerDecision::Stop {
                return Ok(d);
            }
        }
        Ok(f64::INFINITY)
    }

    /// `out[i][j]` is the main output at `(dtemp_grid[i], time_grid[j])`.
    pub fn surface(
        &self,
        dtemp_grid: &[f64],
        time_grid: &[f64],
    ) -> Result<Vec<Vec<f64>>, ControllerError> {
        dtemp_grid
            .iter()
            .map(|&d| {
                time_grid
                    .iter()
                    .map(|&t| Ok(self.main.defuzzify_weighted_average(&[d, t])?))
                    .collect()
            })
            .collect()
    }

    /// First time on the [`TIME_STEP`] grid, up to `max_time`, at which the
    /// main controller stops for a Dtemp held at `dtemp`.
    pub fn stop_time_at_constant_dtemp(
        &self,
        dtemp: f64,
        max_time: f64,
    ) -> Result<Option<f64>, ControllerError> {
        StopTimeTable::new(&self.cfg, max_time).stop_time(&self.cfg, dtemp)
    }

    fn threshold_decision(&self, out: f64) -> Decision {
        if out > self.cfg.decision_threshold {
            Decision::Continue
        } else {
            Decision::Stop
        }
    }
}

/// Time-term grades on the stop-time grid, reusable across Dtemp values.
pub(super) struct StopTimeTable {
    time_grades: Vec<[f64; 5]>,
}

impl StopTimeTable {
    pub(super) fn new(cfg: &MainControllerConfig, max_time: f64) -> Self {
        let n = (max_time / TIME_STEP).round() as usize;
        let time_grades = (0..=n)
            .map(|k| {
                let t = k as f64 * TIME_STEP;
                std::array::from_fn(|j| cfg.time.grade(j, t))
            })
            .collect();
        Self { time_grades }
    }

    /// Same arithmetic, in the same order, as [`FuzzyController::main_decide`].
    pub(super) fn stop_time(
        &self,
        cfg: &MainControllerConfig,
        dtemp: f64,
    ) -> Result<Option<f64>, ControllerError> {
        let dg: [f64; 4] = std::array::from_fn(|i| cfg.dtemp.grade(i, dtemp));
        let mut values = [0.0; 20];
        for (i, row) in cfg.rules.main.iter().enumerate() {
            for (j, d) in row.iter().enumerate() {
                values[i * 5 + j] = if *d == Decision::Continue { 1.0 } else { 0.0 };
            }
        }
        let mut strengths = [0.0; 20];
        for (k, tg) in self.time_grades.iter().enumerate() {
            for i in 0..4 {
                for j in 0..5 {
                    strengths[i * 5 + j] = 1.0f64.min(dg[i]).min(tg[j]);
                }
            }
            let out = weighted_average(&strengths, &values)?;
            if out <= cfg.decision_threshold || out.is_nan() {
                return Ok(Some(k as f64 * TIME_STEP));
            }
        }
        Ok(None)
    }
}
