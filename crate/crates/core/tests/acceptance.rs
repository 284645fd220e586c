//! End-to-end acceptance checks. Runs as a plain binary so that every
//! criterion prints its PASS/FAIL line, then exits non-zero if any failed.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use refcharge::bench::{self, PlateauTable};
use refcharge::controllers::{
    crisp_refined_decide, crisp_sixteen_decide, FuzzyController, MfFamily,
};
use refcharge::fuzzy::{
    weighted_average, LinguisticVariable, MembershipFunction, Rule, RuleBase, Term,
};
use refcharge::plant::PlantParams;
use refcharge::published::{self, PCT_TOLERANCE, TABLE2};
use refcharge::runner::{
    run_bank, run_full_procedure, samples_csv, tests_csv, Controller, ControllerKind, RunReport,
    Scenario,
};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> (Outcome, Duration) {
    let start = Instant::now();
    let mut out = f();
    let elapsed = start.elapsed();
    if let Some(limit) = limit {
        if elapsed > limit {
            out.pass = false;
            out.detail
                .push_str(&format!("; too slow ({elapsed:.2?} > {limit:.0?})"));
        }
    }
    (out, elapsed)
}

type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);

fn main() -> ExitCode {
    let secs = |s| Some(Duration::from_secs(s));
    let criteria: Vec<Criterion> = vec![
        ("stop-time staircase", secs(5), staircase),
        ("test-time table", secs(30), test_time_table),
        ("energy table", secs(1), energy_table),
        ("crisp equivalence", secs(5), crisp_equivalence),
        ("defuzzification properties", None, defuzz_properties),
        ("plant oracle", None, plant_oracle),
        ("optimum recovery", secs(10), optimum_recovery),
        ("day-curve consistency", None, day_curves),
        ("bank determinism", None, determinism),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.into_iter().enumerate() {
        let (out, elapsed) = timed(limit, check);
        let status = if out.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {} {name}: {status} ({elapsed:.2?}) {}",
            i + 1,
            out.detail
        );
        if !out.pass {
            failed += 1;
        }
    }
    println!("acceptance: {failed} of 9 criteria failed");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn staircase() -> Outcome {
    let c = FuzzyController::canonical(MfFamily::TriangularMix);
    let mut misses = Vec::new();
    for k in 0..=500u32 {
        let d = f64::from(k) / 100.0;
        let target = published::STAIRCASE
            .iter()
            .find(|(edge, _)| d <= *edge + 1e-12)
            .map(|(_, t)| *t);
        let stop = c.stop_time_at_constant_dtemp(d, 40.0).expect("inference");
        let ok = match (target, stop) {
            (Some(t), Some(s)) => (s - t).abs() <= 1.0 + 1e-9,
            (None, None) => true,
            _ => false,
        };
        if !ok {
            misses.push(format!("d={d:.2} stop={stop:?} want={target:?}"));
        }
    }
    let crossing = c.timer_crossing().expect("timer");
    let (lo, hi) = published::TIMER_BOUNDARY;
    let timer_ok = (lo..=hi).contains(&crossing);
    Outcome::new(
        misses.is_empty() && timer_ok,
        format!(
            "501 Dtemps, {} misses {:?}; timer boundary {crossing:.3}",
            misses.len(),
            misses.iter().take(5).collect::<Vec<_>>()
        ),
    )
}

fn test_time_table() -> Outcome {
    let report = match bench::bench_table2(&bench::all_controllers(), &PlateauTable::shipped()) {
        Ok(r) => r,
        Err(e) => return Outcome::new(false, format!("bench failed: {e}")),
    };
    let mut failures = Vec::new();
    for cell in &TABLE2 {
        let kind = ControllerKind::ALL
            .into_iter()
            .find(|k| bench::column(*k) == cell.column)
            .expect("column");
        let Some(row) = report.row(kind, cell.band) else {
            failures.push(format!("{kind} {:?}: not measured", cell.band));
            continue;
        };
        let checks = [
            (
                "best",
                row.best.tt,
                row.best.improvement_pct,
                cell.tt.0,
                cell.improvement_pct.0,
                published::table2_tt_tolerance(cell, true),
            ),
            (
                "worst",
                row.worst.tt,
                row.worst.improvement_pct,
                cell.tt.1,
                cell.improvement_pct.1,
                published::table2_tt_tolerance(cell, false),
            ),
        ];
        for (which, tt, pct, want_tt, want_pct, tol) in checks {
            let tt_ok = (tt - want_tt).abs() <= tol + 1e-9;
            let pct_ok = (pct - want_pct).abs() <= PCT_TOLERANCE + 1e-9;
            if !(tt_ok && pct_ok) {
                failures.push(format!(
                    "{kind} [{}, {}] {which}: {tt:.1} min / {pct:.1}% vs {want_tt} ± {tol} / {want_pct}%",
                    cell.band.0, cell.band.1
                ));
            }
        }
    }
    let mut detail = format!("{} of 40 values out of tolerance", failures.len());
    for f in &failures {
        detail.push_str("\n    ");
        detail.push_str(f);
    }
    Outcome::new(failures.is_empty(), detail)
}

fn energy_table() -> Outcome {
    // (tt, tests, kWh, kWh tolerance)
    let expected = [
        (20.0, 20, 1.5, 1e-9),
        (30.0, 16, 1.875, 0.01),
        (8.8, 30, 1.0, 1e-9),
        (27.0, 17, 1.76, 0.01),
    ];
    let cases = bench::table3_published();
    let mut bad = Vec::new();
    for (case, (tt, tests, kwh, tol)) in cases.iter().zip(expected) {
        // 12 h day of back-to-back tests, each paying the setup time.
        let oracle_tests = (720.0 / (tt + 15.0_f64)).floor() as u32;
        let oracle_kwh = 2.5 * 12.0 / f64::from(oracle_tests);
        if case.tt != tt
            || case.tests_12h != tests
            || oracle_tests != tests
            || (case.kwh_per_test - kwh).abs() > tol
            || (case.kwh_per_test - oracle_kwh).abs() > 1e-12
        {
            bad.push(format!("{case:?}"));
        }
    }
    Outcome::new(
        bad.is_empty() && cases.len() == 4,
        format!("{} rows, mismatches {bad:?}", cases.len()),
    )
}

fn crisp_equivalence() -> Outcome {
    let mut points = 0u32;
    let mut mismatches = Vec::new();
    for i in 0..=500u32 {
        let d = f64::from(i) / 100.0;
        for j in 0..=400u32 {
            let t = f64::from(j) / 10.0;
            points += 1;
            if crisp_sixteen_decide(d, t) != crisp_refined_decide(d, t) {
                mismatches.push((d, t));
            }
        }
    }
    Outcome::new(
        mismatches.is_empty(),
        format!("{points} points, {} mismatches", mismatches.len()),
    )
}

fn mf_strategy() -> impl Strategy<Value = MembershipFunction> {
    prop_oneof![
        prop::array::uniform3(0.0..10.0f64).prop_map(|mut p| {
            p.sort_by(f64::total_cmp);
            MembershipFunction::triangular(p[0], p[1], p[2] + 1e-3)
        }),
        prop::array::uniform4(0.0..10.0f64).prop_map(|mut p| {
            p.sort_by(f64::total_cmp);
            MembershipFunction::trapezoidal(p[0], p[1], p[2], p[3] + 1e-3)
        }),
        (0.0..10.0f64, 0.05..3.0f64).prop_map(|(m, s)| MembershipFunction::gaussian(m, s)),
    ]
}

fn variable(name: &str, mfs: Vec<MembershipFunction>) -> LinguisticVariable {
    let terms = mfs
        .into_iter()
        .enumerate()
        .map(|(i, mf)| Term::new(format!("t{i}"), mf))
        .collect();
    LinguisticVariable::new(name, (0.0, 10.0), terms).expect("valid variable")
}

fn singleton_output(values: &[f64]) -> LinguisticVariable {
    let terms = values
        .iter()
        .enumerate()
        .map(|(i, &c)| Term::new(format!("o{i}"), MembershipFunction::singleton(c)))
        .collect();
    LinguisticVariable::new("out", (-10.0, 10.0), terms).expect("valid output")
}

/// Two inputs, full grid of rules, random consequents.
fn random_base() -> impl Strategy<Value = (RuleBase, f64, f64)> {
    (
        prop::collection::vec(mf_strategy(), 1..4),
        prop::collection::vec(mf_strategy(), 1..4),
        prop::collection::vec(-10.0..10.0f64, 1..4),
        0.0..10.0f64,
        0.0..10.0f64,
        any::<u64>(),
    )
        .prop_map(|(a, b, outs, x, y, pick)| {
            let (na, nb, no) = (a.len(), b.len(), outs.len());
            let mut rules = Vec::new();
            let mut k = pick;
            for i in 0..na {
                for j in 0..nb {
                    rules.push(Rule::new(vec![i, j], (k % no as u64) as usize));
                    k = k.rotate_left(7) ^ 0x9e37_79b9;
                }
            }
            let base = RuleBase::new(
                vec![variable("a", a), variable("b", b)],
                singleton_output(&outs),
                rules,
            )
            .expect("valid base");
            (base, x, y)
        })
}

fn defuzz_properties() -> Outcome {
    const CASES: u32 = 1000;
    const TOL: f64 = 1e-9;
    let config = Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    };
    let mut results = Vec::new();

    let mut runner = TestRunner::new(config.clone());
    let bounds = runner.run(&random_base(), |(base, x, y)| {
        let strengths = base.firing_strengths(&[x, y]).unwrap();
        let values = base.consequent_values().unwrap();
        if strengths.iter().all(|&s| s == 0.0) {
            prop_assert!(base.defuzzify_weighted_average(&[x, y]).is_err());
            return Ok(());
        }
        let out = base.defuzzify_weighted_average(&[x, y]).unwrap();
        let fired = values
            .iter()
            .zip(&strengths)
            .filter(|(_, &s)| s > 0.0)
            .map(|(v, _)| *v);
        let lo = fired.clone().fold(f64::INFINITY, f64::min);
        let hi = fired.fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(
            out >= lo - TOL && out <= hi + TOL,
            "{out} outside [{lo}, {hi}]"
        );
        Ok(())
    });
    results.push(("output bounds", bounds.map_err(|e| e.to_string())));

    // Disjoint triangles: an input at a term's peak fires only that term.
    let mut runner = TestRunner::new(config.clone());
    let single = runner.run(
        &(
            prop::collection::vec(-10.0..10.0f64, 2..6),
            any::<prop::sample::Index>(),
        ),
        |(outs, idx)| {
            let n = outs.len();
            let width = 10.0 / n as f64;
            let mfs = (0..n)
                .map(|i| {
                    let a = i as f64 * width;
                    MembershipFunction::triangular(a, a + width / 2.0, a + width)
                })
                .collect();
            let rules = (0..n).map(|i| Rule::new(vec![i], i)).collect();
            let base =
                RuleBase::new(vec![variable("x", mfs)], singleton_output(&outs), rules).unwrap();
            let k = idx.index(n);
            let x = k as f64 * width + width / 2.0;
            let out = base.defuzzify_weighted_average(&[x]).unwrap();
            prop_assert!((out - outs[k]).abs() <= TOL, "{out} vs {}", outs[k]);
            Ok(())
        },
    );
    results.push(("single fired rule", single.map_err(|e| e.to_string())));

    let mut runner = TestRunner::new(config.clone());
    let scale = runner.run(
        &(
            prop::collection::vec((0.0..1.0f64, -10.0..10.0f64), 1..12),
            1e-3..1e3f64,
        ),
        |(pairs, factor)| {
            let (mut s, v): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            s[0] = s[0].max(1e-3);
            let base = weighted_average(&s, &v).unwrap();
            let scaled: Vec<f64> = s.iter().map(|x| x * factor).collect();
            let out = weighted_average(&scaled, &v).unwrap();
            prop_assert!((out - base).abs() <= TOL, "{out} vs {base}");
            Ok(())
        },
    );
    results.push(("scale invariance", scale.map_err(|e| e.to_string())));

    let mut runner = TestRunner::new(config);
    let degenerate = runner.run(
        &(
            prop::array::uniform3(0.0..10.0f64),
            0.0..10.0f64,
            -10.0..10.0f64,
            -10.0..10.0f64,
        ),
        |(mut p, x, c0, c1)| {
            p.sort_by(f64::total_cmp);
            let (a, b, c) = (p[0], p[1], p[2] + 1e-3);
            let tri = MembershipFunction::triangular(a, b, c);
            let trap = MembershipFunction::trapezoidal(a, b, b, c);
            prop_assert!((tri.grade(x) - trap.grade(x)).abs() <= TOL);
            let pad = MembershipFunction::triangular(0.0, 5.0, 10.0);
            let build = |mf: MembershipFunction| {
                RuleBase::new(
                    vec![variable("x", vec![mf, pad])],
                    singleton_output(&[c0, c1]),
                    vec![Rule::new(vec![0], 0), Rule::new(vec![1], 1)],
                )
                .unwrap()
            };
            let lhs = build(tri).defuzzify_weighted_average(&[x]);
            let rhs = build(trap).defuzzify_weighted_average(&[x]);
            match (lhs, rhs) {
                (Ok(l), Ok(r)) => prop_assert!((l - r).abs() <= TOL),
                (Err(_), Err(_)) => {}
                (l, r) => prop_assert!(false, "{l:?} vs {r:?}"),
            }
            Ok(())
        },
    );
    results.push((
        "trapezoid degenerates to triangle",
        degenerate.map_err(|e| e.to_string()),
    ));

    let failed: Vec<String> = results
        .iter()
        .filter_map(|(name, r)| r.as_ref().err().map(|e| format!("{name}: {e}")))
        .collect();
    Outcome::new(
        failed.is_empty(),
        format!("4 properties x {CASES} cases; failures {failed:?}"),
    )
}

fn plant_oracle() -> Outcome {
    let params = PlantParams::default();
    let mut worst = 0.0f64;
    for &(q, t0) in &[(60.0, 25.0), (100.0, 25.0), (150.0, -5.0), (200.0, -12.0)] {
        let target = params.t_stab(q);
        let h = 0.001;
        let steps = (4.0 * params.tau / h).round() as u32;
        let mut temp = t0;
        for n in 1..=steps {
            temp += h * (target - temp) / params.tau;
            let t = f64::from(n) * h;
            if n % 100 == 0 {
                worst = worst.max((temp - params.temperature(q, t, t0)).abs());
            }
        }
    }
    let grid: Vec<f64> = (0..=4000).map(|k| f64::from(k) * 0.05).collect();
    let argmin = grid
        .iter()
        .copied()
        .min_by(|a, b| params.t_stab(*a).total_cmp(&params.t_stab(*b)))
        .expect("grid");
    let argmin_ok = (argmin - params.q_opt).abs() < 1e-9;
    Outcome::new(
        worst <= 0.01 && argmin_ok,
        format!("max Euler deviation {worst:.2e} °C over 4τ; t_stab argmin at {argmin} g"),
    )
}

fn optimum_recovery() -> Outcome {
    let scenario = Scenario::default_scenario();
    let cfg = &scenario.run;
    let charges: Vec<f64> = (0..)
        .map(|k| cfg.initial_charge + f64::from(k) * cfg.increment)
        .take_while(|q| *q <= cfg.max_charge + 1e-9)
        .collect();
    let oracle = charges
        .iter()
        .copied()
        .min_by(|a, b| {
            scenario
                .plant
                .t_stab(*a)
                .total_cmp(&scenario.plant.t_stab(*b))
        })
        .expect("charges");
    let mut lines = Vec::new();
    let mut ok = (oracle - scenario.plant.q_opt).abs() <= cfg.increment;
    for kind in ControllerKind::ALL {
        match run_full_procedure(&scenario.plant, &Controller::from_kind(kind), cfg) {
            Ok(r) => {
                let hit =
                    (r.recommended_charge - scenario.plant.q_opt).abs() <= cfg.increment + 1e-9;
                ok &= hit;
                lines.push(format!("{kind}={}", r.recommended_charge));
            }
            Err(e) => {
                ok = false;
                lines.push(format!("{kind}: {e}"));
            }
        }
    }
    Outcome::new(ok, format!("oracle {oracle} g; {}", lines.join(", ")))
}

fn day_curves() -> Outcome {
    let cases = bench::table3_published();
    let csv = bench::fig19_csv(&cases, published::SETUP_MIN);
    let at_end: Vec<u32> = csv
        .lines()
        .filter(|l| l.starts_with("720,"))
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    let want: Vec<u32> = published::TABLE3.iter().map(|r| r.3).collect();
    let points = bench::fig20_points(8.8, published::SETUP_MIN, published::POWER_KW);
    let steady = points.last().map(|p| p.1).unwrap_or(f64::NAN);
    Outcome::new(
        at_end == want && (steady - 1.0).abs() <= 0.05,
        format!("tests at 720 min {at_end:?} (want {want:?}); steady {steady:.3} kWh/test"),
    )
}

fn determinism() -> Outcome {
    let scenario = Scenario::default_scenario();
    let units: Vec<PlantParams> = (0..8u64)
        .map(|i| PlantParams {
            noise_sigma: 0.02,
            seed: 1000 + i,
            q_opt: 90.0 + 5.0 * i as f64,
            ..scenario.plant.clone()
        })
        .collect();
    let controller = Controller::from_kind(ControllerKind::FuzzyTriangular);
    let logs = |concurrent| -> Result<(String, String), String> {
        let results =
            run_bank(&units, &controller, &scenario.run, concurrent).map_err(|e| e.to_string())?;
        let reports: Vec<RunReport> = results
            .into_iter()
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let indexed: Vec<(usize, &RunReport)> = reports.iter().enumerate().collect();
        Ok((samples_csv(&indexed), tests_csv(&indexed)))
    };
    match (logs(false), logs(true)) {
        (Ok(a), Ok(b)) => Outcome::new(
            a == b,
            format!(
                "8 units; samples {} bytes, tests {} bytes, identical: {}",
                a.0.len(),
                a.1.len(),
                a == b
            ),
        ),
        (a, b) => Outcome::new(false, format!("run failed: {:?} {:?}", a.err(), b.err())),
    }
}
