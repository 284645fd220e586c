use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::fuzzy::StopTimeTable;
use super::{ControllerError, FuzzyController, MainControllerConfig, MfFamily};
use crate::fuzzy::{LinguisticVariable, MembershipFunction, Term};
use crate::published::{self, Column, BASELINE_TT, PCT_TOLERANCE, STAIRCASE, TIMER_BOUNDARY};

/// Probe Dtemps used to measure each test-time table band, in table order.
///
/// The second band stays above 0.37 °C, where the triangular-mix staircase
/// steps from 20 to 27 minutes.
pub const BAND_PROBES: [&[f64]; 4] = [
    &[0.42, 0.45, 0.48],
    &[0.38, 0.39, 0.40],
    &[0.26, 0.28, 0.30],
    &[0.05, 0.10, 0.15, 0.20, 0.24],
];

/// Stop-time target for a group of constant Dtemp values: the earliest and the
/// latest stop among them must fall in the given closed windows.
#[derive(Debug, Clone, PartialEq)]
pub struct StopCell {
    pub label: String,
    pub dtemps: Vec<f64>,
    pub min_stop: (f64, f64),
    pub max_stop: (f64, f64),
}

/// Calibration targets for one main controller.
#[derive(Debug, Clone, PartialEq)]
pub struct StaircaseSpec {
    pub cells: Vec<StopCell>,
    /// Dtemps that must not stop within `max_time`.
    pub no_stop: Vec<f64>,
    pub max_time: f64,
    /// Window for the Dtemp at which the timer stops starting.
    pub timer_window: (f64, f64),
}

impl StaircaseSpec {
    /// Targets for a family: its test-time table column, plus the stop-time
    /// staircase for the triangular mix.
    pub fn for_family(family: MfFamily) -> Self {
        let column = match family {
            MfFamily::TriangularMix => Column::FuzzyTriangular,
            MfFamily::Trapezoidal => Column::FuzzyTrapezoidal,
            MfFamily::Gaussian => Column::FuzzyGaussian,
        };
        let mut cells = table2_cells(column);
        let mut no_stop = Vec::new();
        if family == MfFamily::TriangularMix {
            cells.extend(staircase_cells(0.01));
            no_stop = staircase_no_stop();
        }
        Self {
            cells,
            no_stop,
            max_time: 40.0,
            timer_window: TIMER_BOUNDARY,
        }
    }
}

/// Window for a test time given its target, tolerance and printed improvement
/// percentage: the intersection of `tt ± tol` with the times whose
/// improvement rounds to within the percentage tolerance. Falls back to the
/// time window when the two are disjoint.
pub fn tt_window(tt: f64, tol: f64, pct: f64) -> (f64, f64) {
    let lo = (tt - tol).max(BASELINE_TT * (1.0 - (pct + PCT_TOLERANCE) / 100.0));
    let hi = (tt + tol).min(BASELINE_TT * (1.0 - (pct - PCT_TOLERANCE) / 100.0));
    if lo <= hi {
        (lo, hi)
    } else {
        (tt - tol, tt + tol)
    }
}

fn table2_cells(column: Column) -> Vec<StopCell> {
    published::TABLE2
        .iter()
        .filter(|c| c.column == column)
        .zip(BAND_PROBES)
        .map(|(c, probes)| StopCell {
            label: format!("band [{}, {}]", c.band.0, c.band.1),
            dtemps: probes.to_vec(),
            min_stop: tt_window(
                c.tt.0,
                published::table2_tt_tolerance(c, true),
                c.improvement_pct.0,
            ),
            max_stop: tt_window(
                c.tt.1,
                published::table2_tt_tolerance(c, false),
                c.improvement_pct.1,
            ),
        })
        .collect()
}

/// One single-Dtemp cell per grid point on `[0, 0.58]`, target ±1 min.
fn staircase_cells(step: f64) -> Vec<StopCell> {
    let n = (STAIRCASE[2].0 / step).round() as usize;
    (0..=n)
        .map(|k| {
            let d = (k as f64 * step * 1e9).round() / 1e9;
            let target = STAIRCASE
                .iter()
                .find(|(edge, _)| d <= *edge + 1e-12)
                .map(|(_, t)| *t)
                .unwrap_or(f64::INFINITY);
            StopCell {
                label: format!("staircase {d:.3}"),
                dtemps: vec![d],
                min_stop: (target - 1.0, target + 1.0),
                max_stop: (target - 1.0, target + 1.0),
            }
        })
        .collect()
}

fn staircase_no_stop() -> Vec<f64> {
    let mut v: Vec<f64> = (59..100).map(|k| k as f64 * 0.01).collect();
    v.extend([1.5, 2.0, 3.0, 4.0, 5.0]);
    v
}

fn distance(x: f64, (lo, hi): (f64, f64)) -> f64 {
    const SLACK: f64 = 1e-9;
    if x < lo - SLACK {
        lo - x
    } else if x > hi + SLACK {
        x - hi
    } else {
        0.0
    }
}

/// Total distance of a config's behaviour from the targets; 0 means every
/// target is met.
pub fn calibration_violation(
    cfg: &MainControllerConfig,
    spec: &StaircaseSpec,
) -> Result<f64, ControllerError> {
    const NEVER_STOPPED: f64 = 50.0;
    let table = StopTimeTable::new(cfg, spec.max_time);
    let mut v = 0.0;
    for cell in &spec.cells {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut missing = false;
        for &d in &cell.dtemps {
            match table.stop_time(cfg, d)? {
                Some(t) => {
                    lo = lo.min(t);
                    hi = hi.max(t);
                }
                None => missing = true,
            }
        }
        if missing {
            v += NEVER_STOPPED;
        }
        if lo.is_finite() {
            v += distance(lo, cell.min_stop) + distance(hi, cell.max_stop);
        }
    }
    for &d in &spec.no_stop {
        if let Some(t) = table.stop_time(cfg, d)? {
            v += spec.max_time - t + 0.1;
        }
    }
    let crossing = FuzzyController::new(cfg.clone())?.timer_crossing()?;
    v += 10.0 * distance(crossing, spec.timer_window);
    Ok(v)
}

/// Documented starting point of the sweep: peaks at the anchor values
/// (Dtemp 0.1/0.25/0.5 °C, Time 15/23/30 min) with neighbouring terms crossing
/// roughly half way between peaks.
pub fn initial_guess(family: MfFamily) -> MainControllerConfig {
    use MembershipFunction as M;
    let (dtemp, time) = match family {
        MfFamily::TriangularMix => (
            [
                M::trapezoidal(0.0, 0.0, 0.1, 0.2),
                M::triangular(0.1, 0.25, 0.4),
                M::triangular(0.3, 0.5, 0.65),
                M::trapezoidal(0.5, 0.7, 5.0, 5.0),
            ],
            [
                M::trapezoidal(0.0, 0.0, 9.0, 15.0),
                M::triangular(9.0, 15.0, 23.0),
                M::triangular(15.0, 23.0, 30.0),
                M::triangular(26.0, 30.0, 36.0),
                M::trapezoidal(30.0, 36.0, 40.0, 40.0),
            ],
        ),
        MfFamily::Trapezoidal => (
            [
                M::trapezoidal(0.0, 0.0, 0.1, 0.2),
                M::trapezoidal(0.1, 0.2, 0.3, 0.4),
                M::trapezoidal(0.3, 0.45, 0.55, 0.65),
                M::trapezoidal(0.5, 0.7, 5.0, 5.0),
            ],
            [
                M::trapezoidal(0.0, 0.0, 6.0, 10.0),
                M::trapezoidal(6.0, 10.0, 15.0, 20.0),
                M::trapezoidal(15.0, 20.0, 23.0, 27.0),
                M::trapezoidal(23.0, 27.0, 30.0, 34.0),
                M::trapezoidal(30.0, 34.0, 40.0, 40.0),
            ],
        ),
        MfFamily::Gaussian => (
            [
                M::gaussian(0.0, 0.1),
                M::gaussian(0.25, 0.08),
                M::gaussian(0.5, 0.08),
                M::gaussian(1.0, 0.2),
            ],
            [
                M::gaussian(0.0, 5.0),
                M::gaussian(15.0, 3.0),
                M::gaussian(23.0, 3.0),
                M::gaussian(30.0, 3.0),
                M::gaussian(40.0, 3.0),
            ],
        ),
    };
    MainControllerConfig::new(family, dtemp, time).expect("initial guess is valid")
}

/// Position of one free parameter in the flattened MF parameter vector.
#[derive(Debug, Clone, Copy)]
struct Slot {
    var: usize,
    term: usize,
    param: usize,
    step: f64,
}

/// Every MF parameter except shoulder points pinned to a range end.
fn free_slots(cfg: &MainControllerConfig) -> Vec<Slot> {
    let mut slots = Vec::new();
    for (var_idx, (var, step)) in [(&cfg.dtemp, 0.02), (&cfg.time, 0.5)]
        .into_iter()
        .enumerate()
    {
        let (lo, hi) = var.range();
        for (term_idx, term) in var.terms().iter().enumerate() {
            let pinned_ok = !matches!(term.mf, MembershipFunction::Gaussian { .. });
            for (p, &value) in term.mf.params().iter().enumerate() {
                if pinned_ok && (value == lo || value == hi) {
                    continue;
                }
                slots.push(Slot {
                    var: var_idx,
                    term: term_idx,
                    param: p,
                    step,
                });
            }
        }
    }
    slots
}

fn with_param(cfg: &MainControllerConfig, slot: Slot, value: f64) -> Option<MainControllerConfig> {
    let var = if slot.var == 0 { &cfg.dtemp } else { &cfg.time };
    let terms: Vec<Term> = var
        .terms()
        .iter()
        .enumerate()
        .map(|(i, t)| {
            if i != slot.term {
                return Ok(t.clone());
            }
            let mut params = t.mf.params();
            params[slot.param] = value;
            MembershipFunction::from_params(t.mf.kind(), &params)
                .map(|mf| Term::new(t.name.clone(), mf))
        })
        .collect::<Result<_, _>>()
        .ok()?;
    let new_var = LinguisticVariable::new(var.name(), var.range(), terms).ok()?;
    let mut out = cfg.clone();
    if slot.var == 0 {
        out.dtemp = new_var;
    } else {
        out.time = new_var;
    }
    out.validate().ok()?;
    Some(out)
}

/// Maximum number of violation evaluations per calibration.
pub const SWEEP_BUDGET: usize = 60_000;

/// Perturbed restarts tried once the first sweep stalls.
pub const RESTARTS: usize = 40;
const RESTART_SEED: u64 = 7;
/// Restart perturbation half-widths for Dtemp and Time parameters.
const PERTURBATION: [f64; 2] = [0.03, 0.8];

/// Deterministic calibration from [`initial_guess`].
///
/// Runs [`sweep`]; while targets remain unmet, jitters every free parameter of
/// the best config so far with a fixed-seed generator and sweeps again, up to
/// [`RESTARTS`] times. Stops as soon as every target is met.
pub fn calibrate(
    family: MfFamily,
    targets: &StaircaseSpec,
) -> Result<MainControllerConfig, ControllerError> {
    calibrate_from(initial_guess(family), targets)
}

/// Result of a coordinate sweep, successful or not.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub config: MainControllerConfig,
    pub violation: f64,
    pub evaluations: usize,
}

/// [`calibrate`] starting from an arbitrary config.
pub fn calibrate_from(
    start: MainControllerConfig,
    targets: &StaircaseSpec,
) -> Result<MainControllerConfig, ControllerError> {
    let mut best = sweep(start, targets)?;
    let mut evaluations = best.evaluations;
    let mut rng = ChaCha8Rng::seed_from_u64(RESTART_SEED);
    for i in 0..RESTARTS {
        if best.violation == 0.0 {
            break;
        }
        let scale = [0.15, 0.3, 0.6][i % 3];
        let Some(start) = perturbed(&best.config, &mut rng, scale) else {
            continue;
        };
        let out = sweep(start, targets)?;
        evaluations += out.evaluations;
        // Equal scores are accepted so restarts drift along plateaus.
        if out.violation <= best.violation {
            best = out;
        }
    }
    if best.violation == 0.0 {
        Ok(best.config)
    } else {
        Err(ControllerError::CalibrationFailed {
            violation: best.violation,
            evaluations,
        })
    }
}

/// Every free parameter moved uniformly within `scale` times its variable's
/// perturbation width, clamped to the range; `None` if the result is invalid.
fn perturbed(
    cfg: &MainControllerConfig,
    rng: &mut ChaCha8Rng,
    scale: f64,
) -> Option<MainControllerConfig> {
    let mut out = Vec::with_capacity(2);
    for (var, width) in [(&cfg.dtemp, PERTURBATION[0]), (&cfg.time, PERTURBATION[1])] {
        let w = width * scale;
        let (lo, hi) = var.range();
        let terms = var
            .terms()
            .iter()
            .map(|t| {
                let gaussian = matches!(t.mf, MembershipFunction::Gaussian { .. });
                let mut params: Vec<f64> =
                    t.mf.params()
                        .into_iter()
                        .map(|v| {
                            if !gaussian && (v == lo || v == hi) {
                                v
                            } else {
                                (v + rng.random_range(-w..w)).clamp(lo, hi)
                            }
                        })
                        .collect();
                if gaussian {
                    params[1] = params[1].max(0.01);
                } else {
                    params.sort_by(f64::total_cmp);
                }
                MembershipFunction::from_params(t.mf.kind(), &params)
                    .ok()
                    .map(|mf| Term::new(t.name.clone(), mf))
            })
            .collect::<Option<Vec<_>>>()?;
        out.push(LinguisticVariable::new(var.name(), var.range(), terms).ok()?);
    }
    let mut next = cfg.clone();
    next.time = out.pop()?;
    next.dtemp = out.pop()?;
    next.validate().ok()?;
    Some(next)
}

/// The coordinate sweep behind [`calibrate`], returning the best config found.
pub fn sweep(
    start: MainControllerConfig,
    targets: &StaircaseSpec,
) -> Result<SweepOutcome, ControllerError> {
    const MIN_STEP_FRACTION: f64 = 1.0 / 64.0;
    let mut cfg = start;
    let mut best = calibration_violation(&cfg, targets)?;
    let mut evaluations = 1;
    let slots = free_slots(&cfg);
    const MAX_CYCLES: usize = 8;
    let mut scale = 1.0;
    let mut cycles = 1;
    let mut cycle_start = best;
    while best > 0.0 && evaluations < SWEEP_BUDGET {
        if scale < MIN_STEP_FRACTION {
            // Steps exhausted: start another cycle at full step size if the
            // last one, or a joint move of two parameters, made progress.
            if cycles == MAX_CYCLES {
                break;
            }
            if best >= cycle_start {
                match pair_move(&cfg, &slots, targets, best, &mut evaluations)? {
                    Some((c, v)) => {
                        cfg = c;
                        best = v;
                    }
                    None => break,
                }
            }
            cycles += 1;
            cycle_start = best;
            scale = 1.0;
        }
        let mut improved = false;
        for &slot in &slots {
            for dir in [-1.0, 1.0] {
                loop {
                    let var = if slot.var == 0 { &cfg.dtemp } else { &cfg.time };
                    let current = var.terms()[slot.term].mf.params()[slot.param];
                    let value = round_to(
                        current + dir * slot.step * scale,
                        slot.step * MIN_STEP_FRACTION,
                    );
                    let Some(candidate) = with_param(&cfg, slot, value) else {
                        break;
                    };
                    evaluations += 1;
                    let v = calibration_violation(&candidate, targets)?;
                    if v < best {
                        best = v;
                        cfg = candidate;
                        improved = true;
                    } else {
                        break;
                    }
                    if best == 0.0 || evaluations >= SWEEP_BUDGET {
                        break;
                    }
                }
            }
            if best == 0.0 || evaluations >= SWEEP_BUDGET {
                break;
            }
        }
        if !improved {
            scale /= 2.0;
        }
    }
    Ok(SweepOutcome {
        config: cfg,
        violation: best,
        evaluations,
    })
}

/// First joint move of two parameters, at decreasing step sizes, that lowers
/// the violation below `best`.
fn pair_move(
    cfg: &MainControllerConfig,
    slots: &[Slot],
    targets: &StaircaseSpec,
    best: f64,
    evaluations: &mut usize,
) -> Result<Option<(MainControllerConfig, f64)>, ControllerError> {
    for scale in [1.0, 0.5, 0.25, 0.125] {
        for (a, &sa) in slots.iter().enumerate() {
            for &sb in &slots[a + 1..] {
                for (da, db) in [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)] {
                    if *evaluations >= SWEEP_BUDGET {
                        return Ok(None);
                    }
                    let Some(c) =
                        shifted(cfg, sa, da * scale).and_then(|c| shifted(&c, sb, db * scale))
                    else {
                        continue;
                    };
                    *evaluations += 1;
                    let v = calibration_violation(&c, targets)?;
                    if v < best {
                        return Ok(Some((c, v)));
                    }
                }
            }
        }
    }
    Ok(None)
}

fn shifted(cfg: &MainControllerConfig, slot: Slot, steps: f64) -> Option<MainControllerConfig> {
    let var = if slot.var == 0 { &cfg.dtemp } else { &cfg.time };
    let current = var.terms()[slot.term].mf.params()[slot.param];
    let quantum = slot.step / 64.0;
    with_param(cfg, slot, round_to(current + steps * slot.step, quantum))
}

/// Rounds to a multiple of `quantum` so calibrated breakpoints stay short in
/// config files.
fn round_to(x: f64, quantum: f64) -> f64 {
    let r = (x / quantum).round() * quantum;
    // Trim representation noise such as 0.30000000000000004.
    format!("{r:.6}").parse().unwrap_or(r)
}
