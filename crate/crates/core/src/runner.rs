//! The charging procedure: scan, compute Dtemp, gate the observation timer,
//! stop on the controller's decision, record the minimum temperature, add
//! charge, repeat until the optimum is bracketed.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::controllers::{
    crisp_refined_decide, crisp_simple_decide, ControllerError, Decision, FuzzyController,
    MainControllerConfig, MfFamily, TimerDecision, CRISP_TIMER_START,
};
use crate::plant::{dtemp, Plant, PlantError, PlantParams, Sample};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error("timer never started at {charge_q} g within {waited} min")]
    TimerNeverStarted { charge_q: f64, waited: f64 },
    #[error("invalid run config: {0}")]
    InvalidConfig(String),
    #[error("scenario parse error: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    CrispSimple,
    CrispRefined,
    FuzzyTriangular,
    FuzzyTrapezoidal,
    FuzzyGaussian,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 5] = [
        Self::CrispSimple,
        Self::CrispRefined,
        Self::FuzzyTriangular,
        Self::FuzzyTrapezoidal,
        Self::FuzzyGaussian,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::CrispSimple => "crisp-simple",
            Self::CrispRefined => "crisp-refined",
            Self::FuzzyTriangular => "fuzzy-triangular",
            Self::FuzzyTrapezoidal => "fuzzy-trapezoidal",
            Self::FuzzyGaussian => "fuzzy-gaussian",
        }
    }

    pub fn family(&self) -> Option<MfFamily> {
        match self {
            Self::CrispSimple | Self::CrispRefined => None,
            Self::FuzzyTriangular => Some(MfFamily::TriangularMix),
            Self::FuzzyTrapezoidal => Some(MfFamily::Trapezoidal),
            Self::FuzzyGaussian => Some(MfFamily::Gaussian),
        }
    }
}

impl std::fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ControllerKind {
    type Err = RunError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                RunError::InvalidConfig(format!(
                    "unknown controller {s:?} (expected one of crisp-simple, crisp-refined, \
                     fuzzy-triangular, fuzzy-trapezoidal, fuzzy-gaussian)"
                ))
            })
    }
}

/// A ready-to-use decision maker.
#[derive(Debug, Clone)]
pub enum Controller {
    CrispSimple,
    CrispRefined,
    Fuzzy(Box<FuzzyController>),
}

impl Controller {
    /// Crisp rules, or the shipped calibrated fuzzy config.
    pub fn from_kind(kind: ControllerKind) -> Self {
        match kind.family() {
            None if kind == ControllerKind::CrispSimple => Self::CrispSimple,
            None => Self::CrispRefined,
            Some(family) => Self::Fuzzy(Box::new(FuzzyController::canonical(family))),
        }
    }

    pub fn fuzzy(cfg: MainControllerConfig) -> Result<Self, ControllerError> {
        Ok(Self::Fuzzy(Box::new(FuzzyController::new(cfg)?)))
    }

    pub fn name(&self) -> String {
        match self {
            Self::CrispSimple => ControllerKind::CrispSimple.to_string(),
            Self::CrispRefined => ControllerKind::CrispRefined.to_string(),
            Self::Fuzzy(c) => format!("fuzzy-{}", c.config().family),
        }
    }

    /// Whether the observation timer starts at this Dtemp.
    pub fn timer_starts(&self, dtemp: f64) -> Result<bool, ControllerError> {
        Ok(match self {
            Self::CrispSimple | Self::CrispRefined => dtemp < CRISP_TIMER_START,
            Self::Fuzzy(c) => c.timer_decide(dtemp)?.1 == TimerDecision::Start,
        })
    }

    /// Stop decision with the fuzzy output when there is one.
    pub fn decide(
        &self,
        dtemp: f64,
        time: f64,
    ) -> Result<(Option<f64>, Decision), ControllerError> {
        Ok(match self {
            Self::CrispSimple => (None, crisp_simple_decide(dtemp, time)),
            Self::CrispRefined => (None, crisp_refined_decide(dtemp, time)),
            Self::Fuzzy(c) => {
                let (out, d) = c.main_decide(dtemp, time)?;
                (Some(out), d)
            }
        })
    }
}

/// Charging procedure settings. Every field has a default, so config files
/// only list what they change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub controller: ControllerKind,
    /// Grams.
    pub initial_charge: f64,
    /// Grams.
    pub increment: f64,
    /// Grams.
    pub max_charge: f64,
    /// Minutes of setup per test.
    pub setup_time: f64,
    /// Minutes of observation after the timer starts before giving up.
    pub max_test_time: f64,
    pub optimum_patience: usize,
    /// Minutes of history behind each Dtemp reading.
    pub dtemp_span: f64,
    /// Upper bound on units in a bank.
    pub max_units: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            controller: ControllerKind::FuzzyTriangular,
            initial_charge: 60.0,
            increment: 10.0,
            max_charge: 200.0,
            setup_time: 15.0,
            max_test_time: 40.0,
            optimum_patience: 2,
            dtemp_span: 1.0,
            max_units: 8,
        }
    }
}

/// A plant plus the procedure to run on it, as stored in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub plant: PlantParams,
    #[serde(default)]
    pub run: RunConfig,
}

const DEFAULT_SCENARIO_TOML: &str = include_str!("../configs/scenarios/default.toml");

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        let s: Self = toml::from_str(text).map_err(|e| RunError::Parse(e.to_string()))?;
        s.plant.validate()?;
        s.run.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// The shipped default scenario.
    pub fn default_scenario() -> Self {
        Self::from_toml(DEFAULT_SCENARIO_TOML).expect("shipped scenario is valid")
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |msg: String| Err(RunError::InvalidConfig(msg));
        if self.increment <= 0.0 || self.increment.is_nan() {
            return bad(format!(
                "increment must be positive, got {}",
                self.increment
            ));
        }
        if !(self.initial_charge >= 0.0 && self.initial_charge < self.max_charge) {
            return bad(format!(
                "need 0 <= initial_charge < max_charge, got {} and {}",
                self.initial_charge, self.max_charge
            ));
        }
        if !(self.max_test_time > 0.0 && self.dtemp_span > 0.0 && self.setup_time >= 0.0) {
            return bad("max_test_time and dtemp_span must be positive, setup_time >= 0".into());
        }
        if self.optimum_patience == 0 || self.max_units == 0 {
            return bad("optimum_patience and max_units must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    ControllerStop,
    MaxTimeReached,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::ControllerStop => "controller-stop",
            Self::MaxTimeReached => "max-time-reached",
        }
    }
}

/// One completed charge-level test. Times are minutes relative to the moment
/// the charge was applied unless noted.
#[derive(Debug, Clone, PartialEq)]
pub struct TestRecord {
    pub charge_q: f64,
    pub min_temp: f64,
    /// From charge applied to the stop decision.
    pub test_time: f64,
    pub timer_start: f64,
    /// Observation clock at the stop, i.e. minutes since the timer started.
    pub observed_time: f64,
    pub stop_reason: StopReason,
    pub dtemp_at_timer_start: f64,
    pub dtemp_at_stop: f64,
    pub output_at_stop: Option<f64>,
}

/// One scanner reading with the analyzer's view of it.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRow {
    pub charge_q: f64,
    pub time: f64,
    pub temp: f64,
    pub dtemp: Option<f64>,
    pub timer_started: bool,
    pub output: Option<f64>,
    pub decision: Option<Decision>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub controller: String,
    pub records: Vec<TestRecord>,
    pub recommended_charge: f64,
    /// `(charge, min_temp)` per test.
    pub chart: Vec<(f64, f64)>,
    pub samples: Vec<SampleRow>,
}

/// Continuous scanner stream feeding the analyzer; survives charge changes.
#[derive(Debug, Clone)]
pub struct Scanner {
    plant: Plant,
    window: Vec<Sample>,
    span: f64,
}

impl Scanner {
    /// Takes the power-on reading.
    pub fn new(mut plant: Plant, span: f64) -> Self {
        let first = plant.read();
        Self {
            plant,
            window: vec![first],
            span,
        }
    }

    pub fn plant(&self) -> &Plant {
        &self.plant
    }

    pub fn plant_mut(&mut self) -> &mut Plant {
        &mut self.plant
    }

    /// Next reading and its Dtemp, once enough history exists.
    pub fn scan(&mut self) -> (Sample, Option<f64>) {
        let s = self.plant.scan();
        self.window.push(s);
        let keep_from = s.time - self.span - 2.0 * self.plant.params().scan_interval;
        let drop = self
            .window
            .iter()
            .take_while(|w| w.time < keep_from)
            .count();
        self.window.drain(..drop);
        (s, dtemp(&self.window, self.span).ok())
    }
}

/// Runs one test at the plant's current charge level.
pub fn run_single_charge(
    scanner: &mut Scanner,
    controller: &Controller,
    cfg: &RunConfig,
    log: Option<&mut Vec<SampleRow>>,
) -> Result<TestRecord, RunError> {
    let mut log = log;
    let charge_q = scanner.plant().state().charge_q;
    let scan_interval = scanner.plant().params().scan_interval;
    let median = scanner.plant().params().noise_sigma > 0.0;
    let t0 = scanner.plant().now();
    let give_up = 10.0 * cfg.max_test_time;
    let mut temps = Vec::new();
    let mut timer: Option<(u64, f64, f64)> = None;
    let mut scans: u64 = 0;
    loop {
        let (sample, d) = scanner.scan();
        scans += 1;
        temps.push(sample.temp);
        let mut row = SampleRow {
            charge_q,
            time: sample.time,
            temp: sample.temp,
            dtemp: d,
            timer_started: timer.is_some(),
            output: None,
            decision: None,
        };
        let elapsed = scans as f64 * scan_interval;
        if let Some(d) = d {
            if timer.is_none() && controller.timer_starts(d)? {
                timer = Some((scans, elapsed, d));
                row.timer_started = true;
            }
            if let Some((start_scan, timer_start, d_start)) = timer {
                let obs = (scans - start_scan) as f64 * scan_interval;
                let (output, decision) = controller.decide(d, obs)?;
                row.output = output;
                row.decision = Some(decision);
                let reason = if decision == Decision::Stop {
                    Some(StopReason::ControllerStop)
                } else if obs >= cfg.max_test_time - 1e-9 {
                    Some(StopReason::MaxTimeReached)
                } else {
                    None
                };
                if let Some(stop_reason) = reason {
                    if let Some(log) = log.as_deref_mut() {
                        log.push(row);
                    }
                    return Ok(TestRecord {
                        charge_q,
                        min_temp: test_minimum(&temps, median),
                        test_time: sample.time - t0,
                        timer_start,
                        observed_time: obs,
                        stop_reason,
                        dtemp_at_timer_start: d_start,
                        dtemp_at_stop: d,
                        output_at_stop: output,
                    });
                }
            }
        }
        if let Some(log) = log.as_deref_mut() {
            log.push(row);
        }
        if timer.is_none() && elapsed > give_up {
            return Err(RunError::TimerNeverStarted {
                charge_q,
                waited: elapsed,
            });
        }
    }
}

/// Minimum of the test's readings; with sensor noise, of their five-sample
/// trailing median.
fn test_minimum(temps: &[f64], median: bool) -> f64 {
    if !median {
        return temps.iter().copied().fold(f64::INFINITY, f64::min);
    }
    (0..temps.len())
        .map(|i| {
            let mut w: Vec<f64> = temps[i.saturating_sub(4)..=i].to_vec();
            w.sort_by(f64::total_cmp);
            w[w.len() / 2]
        })
        .fold(f64::INFINITY, f64::min)
}

/// Charge of the lowest minimum temperature once the `patience` records after
/// it rise strictly one after another; `None` until then.
pub fn detect_optimum(records: &[TestRecord], patience: usize) -> Option<f64> {
    let best = argmin(records)?;
    let after = &records[best..];
    if after.len() <= patience {
        return None;
    }
    after[..=patience]
        .windows(2)
        .all(|w| w[1].min_temp > w[0].min_temp)
        .then(|| records[best].charge_q)
}

fn argmin(records: &[TestRecord]) -> Option<usize> {
    records
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.min_temp.total_cmp(&b.1.min_temp))
        .map(|(i, _)| i)
}

/// Repeats single-charge tests from `initial_charge` upward until the optimum
/// is detected or the next increment would pass `max_charge`.
pub fn run_full_procedure(
    params: &PlantParams,
    controller: &Controller,
    cfg: &RunConfig,
) -> Result<RunReport, RunError> {
    cfg.validate()?;
    let plant = Plant::new(params.clone(), cfg.initial_charge)?;
    let mut scanner = Scanner::new(plant, cfg.dtemp_span);
    let mut records = Vec::new();
    let mut samples = Vec::new();
    loop {
        records.push(run_single_charge(
            &mut scanner,
            controller,
            cfg,
            Some(&mut samples),
        )?);
        let charge = scanner.plant().state().charge_q;
        if detect_optimum(&records, cfg.optimum_patience).is_some()
            || charge + cfg.increment > cfg.max_charge + 1e-9
        {
            break;
        }
        scanner.plant_mut().add_charge(cfg.increment)?;
    }
    let best = argmin(&records).expect("at least one record");
    Ok(RunReport {
        controller: controller.name(),
        recommended_charge: records[best].charge_q,
        chart: records.iter().map(|r| (r.charge_q, r.min_temp)).collect(),
        records,
        samples,
    })
}

/// Runs independent units, on scoped threads when `concurrent`. Results are
/// in unit order and identical either way.
pub fn run_bank(
    units: &[PlantParams],
    controller: &Controller,
    cfg: &RunConfig,
    concurrent: bool,
) -> Result<Vec<Result<RunReport, RunError>>, RunError> {
    if units.is_empty() || units.len() > cfg.max_units {
        return Err(RunError::InvalidConfig(format!(
            "bank needs 1 to {} units, got {}",
            cfg.max_units,
            units.len()
        )));
    }
    if !concurrent {
        return Ok(units
            .iter()
            .map(|p| run_full_procedure(p, controller, cfg))
            .collect());
    }
    Ok(std::thread::scope(|s| {
        let handles: Vec<_> = units
            .iter()
            .map(|p| s.spawn(move || run_full_procedure(p, controller, cfg)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("unit thread panicked"))
            .collect()
    }))
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub const SAMPLE_CSV_HEADER: &str =
    "unit,charge_g,time_min,temp_c,dtemp_c,timer_started,output,decision";
pub const TEST_CSV_HEADER: &str = "unit,charge_g,min_temp_c,tt_min,stop_reason";

/// Per-sample log lines for every unit's report, with header.
pub fn samples_csv(reports: &[(usize, &RunReport)]) -> String {
    let mut out = String::from(SAMPLE_CSV_HEADER);
    out.push('\n');
    for (unit, r) in reports {
        for s in &r.samples {
            let _ = writeln!(
                out,
                "{unit},{},{:.3},{},{},{},{},{}",
                s.charge_q,
                s.time,
                s.temp,
                opt(s.dtemp),
                s.timer_started,
                opt(s.output),
                s.decision.map(|d| d.as_str()).unwrap_or_default()
            );
        }
    }
    out
}

/// Per-test lines for every unit's report, with header.
pub fn tests_csv(reports: &[(usize, &RunReport)]) -> String {
    let mut out = String::from(TEST_CSV_HEADER);
    out.push('\n');
    for (unit, r) in reports {
        for t in &r.records {
            let _ = writeln!(
                out,
                "{unit},{},{},{:.3},{}",
                t.charge_q,
                t.min_temp,
                t.test_time,
                t.stop_reason.as_str()
            );
        }
    }
    out
}

impl RunReport {
    /// Plain-text summary of the procedure.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "controller: {}", self.controller);
        let _ = writeln!(out, "tests: {}", self.records.len());
        let _ = writeln!(out, "recommended_charge_g: {}", self.recommended_charge);
        let total: f64 = self.records.iter().map(|r| r.test_time).sum();
        let _ = writeln!(out, "total_test_time_min: {total:.1}");
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{:>9} {:>11} {:>8} {:>10} {:>9}  stop",
            "charge_g", "min_temp_c", "tt_min", "timer_min", "obs_min"
        );
        for r in &self.records {
            let _ = writeln!(
                out,
                "{:>9.1} {:>11.3} {:>8.1} {:>10.1} {:>9.1}  {}",
                r.charge_q,
                r.min_temp,
                r.test_time,
                r.timer_start,
                r.observed_time,
                r.stop_reason.as_str()
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(charge_q: f64, min_temp: f64) -> TestRecord {
        TestRecord {
            charge_q,
            min_temp,
            test_time: 30.0,
            timer_start: 0.0,
            observed_time: 30.0,
            stop_reason: StopReason::ControllerStop,
            dtemp_at_timer_start: 0.0,
            dtemp_at_stop: 0.0,
            output_at_stop: None,
        }
    }

    fn recs(temps: &[f64]) -> Vec<TestRecord> {
        temps
            .iter()
            .enumerate()
            .map(|(i, &t)| rec(60.0 + 10.0 * i as f64, t))
            .collect()
    }

    #[test]
    fn optimum_after_two_rises() {
        let r = recs(&[-15.0, -18.0, -20.0, -19.0, -17.0]);
        assert_eq!(detect_optimum(&r, 2), Some(80.0));
    }

    #[test]
    fn optimum_not_yet() {
        assert_eq!(detect_optimum(&recs(&[-15.0, -16.0, -17.0]), 2), None);
        assert_eq!(detect_optimum(&recs(&[-15.0, -20.0, -19.0]), 2), None);
        assert_eq!(detect_optimum(&recs(&[-15.0, -20.0, -19.0]), 1), Some(70.0));
    }

    #[test]
    fn crisp_simple_stops_thirty_minutes_after_timer() {
        let cfg = RunConfig::default();
        let plant = Plant::new(PlantParams::default(), 60.0).unwrap();
        let mut scanner = Scanner::new(plant, cfg.dtemp_span);
        let mut log = Vec::new();
        let r = run_single_charge(&mut scanner, &Controller::CrispSimple, &cfg, Some(&mut log))
            .unwrap();
        let first_below = log
            .iter()
            .find(|s| s.dtemp.is_some_and(|d| d < 0.5))
            .unwrap()
            .time;
        assert!(
            (r.test_time - (first_below + 30.0)).abs() <= 0.1 + 1e-9,
            "{r:?}"
        );
        assert_eq!(r.stop_reason, StopReason::ControllerStop);
        let p = PlantParams::default();
        assert!(r.min_temp >= p.t_stab(60.0) && r.min_temp <= p.t_stab(60.0) + 0.5);
        let min_logged = log.iter().map(|s| s.temp).fold(f64::INFINITY, f64::min);
        assert_eq!(r.min_temp, min_logged);
    }

    #[test]
    fn timer_never_starts_on_runaway_plant() {
        let params = PlantParams {
            t_ambient: 1.0e6,
            t_initial: 1.0e6,
            tau: 1.0e6,
            ..PlantParams::default()
        };
        let cfg = RunConfig::default();
        let mut scanner = Scanner::new(Plant::new(params, 100.0).unwrap(), 1.0);
        let err =
            run_single_charge(&mut scanner, &Controller::CrispRefined, &cfg, None).unwrap_err();
        assert!(matches!(err, RunError::TimerNeverStarted { .. }));
    }

    #[test]
    fn one_record_when_increment_overshoots() {
        let cfg = RunConfig {
            controller: ControllerKind::CrispSimple,
            initial_charge: 60.0,
            increment: 500.0,
            max_charge: 200.0,
            ..RunConfig::default()
        };
        let r =
            run_full_procedure(&PlantParams::default(), &Controller::CrispSimple, &cfg).unwrap();
        assert_eq!(r.records.len(), 1);
    }

    #[test]
    fn median_filter_ignores_single_spikes() {
        let temps = [1.0, 1.0, -9.0, 1.0, 1.0, 0.5];
        assert_eq!(test_minimum(&temps, false), -9.0);
        assert_eq!(test_minimum(&temps, true), 1.0);
    }

    #[test]
    fn default_scenario_matches_defaults() {
        let s = Scenario::default_scenario();
        assert_eq!(s.plant, PlantParams::default());
        assert_eq!(s.run, RunConfig::default());
        assert_eq!(Scenario::from_toml(&s.to_toml()).unwrap(), s);
        let partial = Scenario::from_toml("[plant]\nt_ambient = 25.0\nt_initial = 25.0\nq_opt = 90.0\nt_opt = -18.0\ncurvature_k = 0.001\ntau = 5.0\nscan_interval = 0.1\n[run]\nincrement = 5.0\n").unwrap();
        assert_eq!(partial.run.increment, 5.0);
        assert_eq!(partial.run.initial_charge, 60.0);
        assert!(Scenario::from_toml("[plant]\nbogus = 1\n").is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = RunConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.increment = 0.0;
        assert!(cfg.validate().is_err());
        let cfg = RunConfig {
            initial_charge: 300.0,
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
