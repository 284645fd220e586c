//! Performance indicators and reproduction of the test-time, throughput and
//! energy results.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::plant::{Plant, PlantParams};
use crate::published::{self, Column, BASELINE_TT};
use crate::runner::{run_single_charge, Controller, ControllerKind, RunConfig, RunError, Scanner};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(
        "{controller}: Dtemp at timer start {measured} left band [{lo}, {hi}] (probe {probe})"
    )]
    ScenarioDrift {
        controller: String,
        probe: f64,
        measured: f64,
        lo: f64,
        hi: f64,
    },
    #[error("plateau table parse error: {0}")]
    Parse(String),
}

/// `(tt_baseline - tt) / tt_baseline * 100`.
pub fn improvement_pct(tt: f64, tt_baseline: f64) -> f64 {
    (tt_baseline - tt) / tt_baseline * 100.0
}

/// Performance ratio `tt2 / tt1` of a controller's test time over another's.
pub fn pr_ratio(tt2: f64, tt1: f64) -> f64 {
    tt2 / tt1
}

/// `E = P t`: kWh from kW and hours.
pub fn energy(power_kw: f64, hours: f64) -> f64 {
    power_kw * hours
}

/// Tests that fit in a 12-hour day and the energy each one costs.
pub fn throughput_and_energy(tt: f64, setup: f64, power_kw: f64) -> (u32, f64) {
    let tests = (720.0 / (tt + setup)).floor() as u32;
    (tests, energy(power_kw, 12.0) / f64::from(tests))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Indicators {
    pub tt: f64,
    pub ts: f64,
    pub improvement_pct: f64,
    /// Tests per hour, setup included.
    pub tph: f64,
    /// Tests per 12-hour day.
    pub tpd: u32,
    pub energy_per_test: f64,
    pub power_p: f64,
}

impl Indicators {
    pub fn new(tt: f64, tt_baseline: f64, setup: f64, power_kw: f64) -> Self {
        let (tpd, energy_per_test) = throughput_and_energy(tt, setup, power_kw);
        Self {
            tt,
            ts: tt_baseline - tt,
            improvement_pct: improvement_pct(tt, tt_baseline),
            tph: 60.0 / (tt + setup),
            tpd,
            energy_per_test,
            power_p: power_kw,
        }
    }
}

/// Plateau plants for the test-time table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateauTable {
    pub span: f64,
    pub tau: f64,
    pub scan_interval: f64,
    pub cells: Vec<PlateauCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateauCell {
    pub band: [f64; 2],
    pub dtemps: Vec<f64>,
}

const PLATEAU_TOML: &str = include_str!("../configs/scenarios/plateau.toml");

impl PlateauTable {
    pub fn shipped() -> Self {
        Self::from_toml(PLATEAU_TOML).expect("shipped plateau table is valid")
    }

    pub fn from_toml(text: &str) -> Result<Self, BenchError> {
        toml::from_str(text).map_err(|e| BenchError::Parse(e.to_string()))
    }

    /// Temperature gap that makes the first Dtemp reading equal `dtemp`.
    pub fn gap(&self, dtemp: f64) -> f64 {
        dtemp / -(-self.span / self.tau).exp_m1()
    }

    /// Plant at its optimal charge, starting `gap(dtemp)` above its asymptote.
    pub fn plant(&self, dtemp: f64) -> PlantParams {
        let defaults = PlantParams::default();
        PlantParams {
            t_opt: defaults.t_initial - self.gap(dtemp),
            tau: self.tau,
            scan_interval: self.scan_interval,
            ..defaults
        }
    }
}

/// Measured test times of one (controller, band) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMeasurement {
    pub controller: ControllerKind,
    pub band: (f64, f64),
    /// `(probe dtemp, observation minutes to stop)`.
    pub stops: Vec<(f64, f64)>,
    pub best: Indicators,
    pub worst: Indicators,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BandMeasurement>,
    pub setup: f64,
    pub power_kw: f64,
}

pub fn column(kind: ControllerKind) -> Column {
    match kind {
        ControllerKind::CrispSimple => Column::CrispSimple,
        ControllerKind::CrispRefined => Column::CrispRefined,
        ControllerKind::FuzzyTriangular => Column::FuzzyTriangular,
        ControllerKind::FuzzyTrapezoidal => Column::FuzzyTrapezoidal,
        ControllerKind::FuzzyGaussian => Column::FuzzyGaussian,
    }
}

/// Observation time to stop for a plant held at `dtemp`, checking that the
/// timer started while Dtemp was still inside `band`.
pub fn measure_plateau(
    controller: &Controller,
    plateau: &PlateauTable,
    dtemp: f64,
    band: (f64, f64),
    cfg: &RunConfig,
) -> Result<f64, BenchError> {
    let params = plateau.plant(dtemp);
    let plant = Plant::new(params.clone(), params.q_opt).map_err(RunError::from)?;
    let mut scanner = Scanner::new(plant, plateau.span);
    let rec = run_single_charge(&mut scanner, controller, cfg, None)?;
    let measured = rec.dtemp_at_timer_start;
    let slack = 1e-6;
    if measured < band.0 - slack || measured > band.1 + slack || (measured - dtemp).abs() > 1e-3 {
        return Err(BenchError::ScenarioDrift {
            controller: controller.name(),
            probe: dtemp,
            measured,
            lo: band.0,
            hi: band.1,
        });
    }
    Ok(rec.observed_time)
}

/// Measures every (controller, band) cell. Best is the shortest test time over
/// a band's probes, worst the longest.
pub fn bench_table2(
    controllers: &[(ControllerKind, Controller)],
    plateau: &PlateauTable,
) -> Result<BenchReport, BenchError> {
    let cfg = RunConfig::default();
    let mut rows = Vec::new();
    for (kind, controller) in controllers {
        for cell in &plateau.cells {
            let band = (cell.band[0], cell.band[1]);
            let stops = cell
                .dtemps
                .iter()
                .map(|&d| Ok((d, measure_plateau(controller, plateau, d, band, &cfg)?)))
                .collect::<Result<Vec<_>, BenchError>>()?;
            let best = stops.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
            let worst = stops.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
            let ind =
                |tt| Indicators::new(tt, BASELINE_TT, published::SETUP_MIN, published::POWER_KW);
            rows.push(BandMeasurement {
                controller: *kind,
                band,
                stops,
                best: ind(best),
                worst: ind(worst),
            });
        }
    }
    Ok(BenchReport {
        rows,
        setup: published::SETUP_MIN,
        power_kw: published::POWER_KW,
    })
}

/// Every controller kind with its shipped configuration.
pub fn all_controllers() -> Vec<(ControllerKind, Controller)> {
    ControllerKind::ALL
        .into_iter()
        .map(|k| (k, Controller::from_kind(k)))
        .collect()
}

pub const TABLE2_CSV_HEADER: &str = "controller,band_lo,band_hi,tt_min,ts_min,improvement_pct";
pub const TABLE3_CSV_HEADER: &str = "controller,case,tt_min,tests_12h,kwh_per_test";
pub const FIG19_CSV_HEADER: &str = "time_min,controller,case,tests";
pub const FIG20_CSV_HEADER: &str = "time_min,kwh_per_test";

impl BenchReport {
    /// Two lines per cell, best case first.
    pub fn table2_csv(&self) -> String {
        let mut out = format!("{TABLE2_CSV_HEADER}\n");
        for row in &self.rows {
            for ind in [&row.best, &row.worst] {
                let _ = writeln!(
                    out,
                    "{},{},{},{:.1},{:.1},{:.1}",
                    row.controller, row.band.0, row.band.1, ind.tt, ind.ts, ind.improvement_pct
                );
            }
        }
        out
    }

    pub fn row(&self, kind: ControllerKind, band: (f64, f64)) -> Option<&BandMeasurement> {
        self.rows
            .iter()
            .find(|r| r.controller == kind && r.band == band)
    }

    /// Best and worst test time of a controller over all bands.
    pub fn extremes(&self, kind: ControllerKind) -> Option<(f64, f64)> {
        let rows: Vec<_> = self.rows.iter().filter(|r| r.controller == kind).collect();
        if rows.is_empty() {
            return None;
        }
        let best = rows.iter().map(|r| r.best.tt).fold(f64::INFINITY, f64::min);
        let worst = rows
            .iter()
            .map(|r| r.worst.tt)
            .fold(f64::NEG_INFINITY, f64::max);
        Some((best, worst))
    }

    /// Energy-table cases from the measured extremes of the refined crisp and
    /// the trapezoidal fuzzy controllers.
    pub fn table3_cases(&self) -> Vec<Table3Case> {
        let mut cases = Vec::new();
        for kind in [
            ControllerKind::CrispRefined,
            ControllerKind::FuzzyTrapezoidal,
        ] {
            if let Some((best, worst)) = self.extremes(kind) {
                cases.push(Table3Case::new(
                    kind.as_str(),
                    "best",
                    best,
                    self.setup,
                    self.power_kw,
                ));
                cases.push(Table3Case::new(
                    kind.as_str(),
                    "worst",
                    worst,
                    self.setup,
                    self.power_kw,
                ));
            }
        }
        cases
    }

    /// Plain-text table of the measured cells.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<18} {:>12} {:>14} {:>16}",
            "controller", "band", "tt_min", "improvement_%"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<18} {:>12} {:>14} {:>16}",
                r.controller.as_str(),
                format!("[{}, {}]", r.band.0, r.band.1),
                pair(r.best.tt, r.worst.tt),
                pair(r.best.improvement_pct, r.worst.improvement_pct),
            );
        }
        out
    }
}

fn pair(a: f64, b: f64) -> String {
    if format!("{a:.1}") == format!("{b:.1}") {
        format!("{a:.1}")
    } else {
        format!("[{a:.1}, {b:.1}]")
    }
}

/// One row of the energy table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table3Case {
    pub controller: String,
    pub case: String,
    pub tt: f64,
    pub tests_12h: u32,
    pub kwh_per_test: f64,
}

impl Table3Case {
    pub fn new(controller: &str, case: &str, tt: f64, setup: f64, power_kw: f64) -> Self {
        let (tests_12h, kwh_per_test) = throughput_and_energy(tt, setup, power_kw);
        Self {
            controller: controller.to_string(),
            case: case.to_string(),
            tt,
            tests_12h,
            kwh_per_test,
        }
    }
}

/// Energy-table cases at the published test times.
pub fn table3_published() -> Vec<Table3Case> {
    published::TABLE3
        .iter()
        .map(|(c, case, tt, _, _)| {
            Table3Case::new(c, case, *tt, published::SETUP_MIN, published::POWER_KW)
        })
        .collect()
}

pub fn table3_csv(cases: &[Table3Case]) -> String {
    let mut out = format!("{TABLE3_CSV_HEADER}\n");
    for c in cases {
        let _ = writeln!(
            out,
            "{},{},{:.1},{},{:.3}",
            c.controller, c.case, c.tt, c.tests_12h, c.kwh_per_test
        );
    }
    out
}

/// Tests completed by `time` when each takes `tt + setup` minutes.
pub fn tests_completed(time: f64, tt: f64, setup: f64) -> u32 {
    ((time + 1e-9) / (tt + setup)).floor() as u32
}

/// Cumulative tests against time, one curve per case, sampled every minute
/// over a 12-hour day.
pub fn fig19_csv(cases: &[Table3Case], setup: f64) -> String {
    let mut out = format!("{FIG19_CSV_HEADER}\n");
    for minute in 0..=720u32 {
        for c in cases {
            let _ = writeln!(
                out,
                "{minute},{},{},{}",
                c.controller,
                c.case,
                tests_completed(f64::from(minute), c.tt, setup)
            );
        }
    }
    out
}

/// `(completion time, kWh per completed test)` for every test finished in a
/// 12-hour day; nothing before the first completion.
pub fn fig20_points(tt: f64, setup: f64, power_kw: f64) -> Vec<(f64, f64)> {
    let period = tt + setup;
    (1..)
        .map(|n| (n, n as f64 * period))
        .take_while(|(_, t)| *t <= 720.0 + 1e-9)
        .map(|(n, t)| (t, energy(power_kw, t / 60.0) / n as f64))
        .collect()
}

pub fn fig20_csv(points: &[(f64, f64)]) -> String {
    let mut out = format!("{FIG20_CSV_HEADER}\n");
    for (t, e) in points {
        let _ = writeln!(out, "{t:.1},{e:.4}");
    }
    out
}
