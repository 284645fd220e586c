//! Synthetic refrigerator thermal plant.
//!
//! The stabilization temperature is a convex bowl in the refrigerant charge,
//! `t_stab(q) = t_opt + k (q - q_opt)^2`. After every charge change the
//! monitored temperature relaxes exponentially from wherever it was toward the
//! new `t_stab` with time constant `tau`. Samples are taken every
//! `scan_interval` minutes with optional seeded Gaussian sensor noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Upper end of the Dtemp variable range, in °C.
pub const DTEMP_MAX: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlantError {
    #[error("invalid plant parameters: {0}")]
    InvalidParams(String),
    #[error("sample window covers {covered} min, differencing span needs {span} min")]
    InsufficientWindow { covered: f64, span: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantParams {
    /// °C
    pub t_ambient: f64,
    /// °C, temperature at the first scan.
    pub t_initial: f64,
    /// Charge in grams that minimizes the stabilization temperature.
    pub q_opt: f64,
    /// °C, stabilization temperature at `q_opt`.
    pub t_opt: f64,
    /// °C per gram squared.
    pub curvature_k: f64,
    /// Transient time constant, minutes.
    pub tau: f64,
    /// Standard deviation of additive sensor noise, °C.
    #[serde(default)]
    pub noise_sigma: f64,
    /// Minutes between scans.
    pub scan_interval: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            t_ambient: 25.0,
            t_initial: 25.0,
            q_opt: 100.0,
            t_opt: -20.0,
            curvature_k: 0.002,
            tau: 8.0,
            noise_sigma: 0.0,
            scan_interval: 0.1,
            seed: 0,
        }
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<(), PlantError> {
        let fields = [
            self.t_ambient,
            self.t_initial,
            self.q_opt,
            self.t_opt,
            self.curvature_k,
            self.tau,
            self.noise_sigma,
            self.scan_interval,
        ];
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(PlantError::InvalidParams(msg.to_string()))
            }
        };
        check(fields.iter().all(|v| v.is_finite()), "non-finite value")?;
        check(self.t_opt < self.t_initial, "t_opt must be below t_initial")?;
        check(
            self.t_initial <= self.t_ambient,
            "t_initial must not exceed t_ambient",
        )?;
        check(self.q_opt > 0.0, "q_opt must be positive")?;
        check(self.curvature_k >= 0.0, "curvature_k must be non-negative")?;
        check(self.tau > 0.0, "tau must be positive")?;
        check(self.noise_sigma >= 0.0, "noise_sigma must be non-negative")?;
        check(self.scan_interval > 0.0, "scan_interval must be positive")
    }

    /// Stabilization temperature for charge `q` grams.
    pub fn t_stab(&self, q: f64) -> f64 {
        let dq = q - self.q_opt;
        self.t_opt + self.curvature_k * dq * dq
    }

    /// Noise-free temperature `t` minutes into a transient that began at
    /// `t_from` with charge `q`.
    pub fn temperature(&self, q: f64, t: f64, t_from: f64) -> f64 {
        if t <= 0.0 {
            return t_from;
        }
        let target = self.t_stab(q);
        target + (t_from - target) * (-t / self.tau).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Absolute minutes since the plant was switched on.
    pub time: f64,
    pub temp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    pub charge_q: f64,
    /// Minutes since the current charge level began.
    pub elapsed: f64,
    pub temp_at_charge: f64,
    pub sample_count: u64,
    scans_since_charge: u64,
}

/// One plant instance with its own state and noise generator.
#[derive(Debug, Clone)]
pub struct Plant {
    params: PlantParams,
    state: PlantState,
    rng: ChaCha8Rng,
    noise: Option<Normal<f64>>,
}

impl Plant {
    pub fn new(params: PlantParams, initial_charge: f64) -> Result<Self, PlantError> {
        params.validate()?;
        if !(initial_charge >= 0.0 && initial_charge.is_finite()) {
            return Err(PlantError::InvalidParams(format!(
                "initial charge {initial_charge} g"
            )));
        }
        let noise = (params.noise_sigma > 0.0)
            .then(|| Normal::new(0.0, params.noise_sigma).expect("sigma validated"));
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            state: PlantState {
                charge_q: initial_charge,
                elapsed: 0.0,
                temp_at_charge: params.t_initial,
                sample_count: 0,
                scans_since_charge: 0,
            },
            params,
            noise,
        })
    }

    pub fn params(&self) -> &PlantParams {
        &self.params
    }

    pub fn state(&self) -> &PlantState {
        &self.state
    }

    /// Absolute time of the most recent scan.
    pub fn now(&self) -> f64 {
        self.state.sample_count as f64 * self.params.scan_interval
    }

    /// Noise-free temperature at the current instant.
    pub fn true_temperature(&self) -> f64 {
        self.params.temperature(
            self.state.charge_q,
            self.state.elapsed,
            self.state.temp_at_charge,
        )
    }

    /// Reading at the current instant without advancing the clock. Used to
    /// seed a scanner window at power-on.
    pub fn read(&mut self) -> Sample {
        let temp = self.true_temperature() + self.draw_noise();
        Sample {
            time: self.now(),
            temp,
        }
    }

    /// Advance one scan interval and return the reading.
    pub fn scan(&mut self) -> Sample {
        self.state.sample_count += 1;
        self.state.scans_since_charge += 1;
        self.state.elapsed = self.state.scans_since_charge as f64 * self.params.scan_interval;
        self.read()
    }

    /// Add refrigerant instantaneously. The plant starts a fresh transient from
    /// its present temperature toward the new stabilization temperature.
    pub fn add_charge(&mut self, increment: f64) -> Result<(), PlantError> {
        if !(increment > 0.0 && increment.is_finite()) {
            return Err(PlantError::InvalidParams(format!(
                "charge increment {increment} g"
            )));
        }
        self.state.temp_at_charge = self.true_temperature();
        self.state.charge_q += increment;
        self.state.elapsed = 0.0;
        self.state.scans_since_charge = 0;
        Ok(())
    }

    fn draw_noise(&mut self) -> f64 {
        match &self.noise {
            Some(dist) => dist.sample(&mut self.rng),
            None => 0.0,
        }
    }
}

/// Temperature drop over the trailing `span` minutes of `window`, clamped to
/// `[0, DTEMP_MAX]`.
///
/// `window` must be ordered by time. The reference reading is the latest one
/// taken at least `span` minutes before the newest sample.
pub fn dtemp(window: &[Sample], span: f64) -> Result<f64, PlantError> {
    let (Some(first), Some(last)) = (window.first(), window.last()) else {
        return Err(PlantError::InsufficientWindow { covered: 0.0, span });
    };
    // Tolerate float error in sample times built from integer scan counts.
    let cutoff = last.time - span + 1e-9;
    let reference = window.iter().rev().find(|s| s.time <= cutoff);
    match reference {
        Some(r) => Ok((r.temp - last.temp).clamp(0.0, DTEMP_MAX)),
        None => Err(PlantError::InsufficientWindow {
            covered: last.time - first.time,
            span,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn example_params() -> PlantParams {
        PlantParams::default()
    }

    #[test]
    fn t_stab_vertex_symmetry_and_value() {
        let p = example_params();
        assert_eq!(p.t_stab(100.0), -20.0);
        assert_eq!(p.t_stab(80.0), p.t_stab(120.0));
        // -20 + 0.002 * 50^2
        assert_abs_diff_eq!(p.t_stab(150.0), -15.0, epsilon = 1e-12);
    }

    #[test]
    fn temperature_transient() {
        let p = example_params();
        let (q, from) = (60.0, 25.0);
        let target = p.t_stab(q);
        assert_eq!(p.temperature(q, 0.0, from), from);
        assert!((p.temperature(q, 20.0 * p.tau, from) - target).abs() < 1e-6);
        let expected = target + (from - target) / std::f64::consts::E;
        assert_abs_diff_eq!(p.temperature(q, p.tau, from), expected, epsilon = 1e-12);
        assert_eq!(p.temperature(q, 5.0, target), target);
    }

    #[test]
    fn noise_free_scan_matches_model() {
        let p = example_params();
        let mut plant = Plant::new(p.clone(), 60.0).unwrap();
        for k in 1..=50 {
            let s = plant.scan();
            let t = k as f64 * p.scan_interval;
            assert_eq!(s.time, t);
            assert_eq!(s.temp, p.temperature(60.0, t, 25.0));
        }
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let p = PlantParams {
            noise_sigma: 0.05,
            seed: 7,
            ..example_params()
        };
        let run = || {
            let mut plant = Plant::new(p.clone(), 60.0).unwrap();
            (0..200).map(|_| plant.scan().temp).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
        let mut other = Plant::new(
            PlantParams {
                seed: 8,
                ..p.clone()
            },
            60.0,
        )
        .unwrap();
        let other: Vec<f64> = (0..200).map(|_| other.scan().temp).collect();
        assert_ne!(run(), other);
    }

    #[test]
    fn noise_stays_within_six_sigma() {
        let p = PlantParams {
            noise_sigma: 0.05,
            seed: 42,
            ..example_params()
        };
        let mut plant = Plant::new(p.clone(), 60.0).unwrap();
        let n = 20_000;
        let inside = (0..n)
            .filter(|_| {
                let s = plant.scan();
                (s.temp - plant.true_temperature()).abs() <= 0.3
            })
            .count();
        assert!(inside as f64 / n as f64 >= 0.999);
    }

    #[test]
    fn add_charge_restarts_transient() {
        let p = example_params();
        let mut plant = Plant::new(p.clone(), 80.0).unwrap();
        for _ in 0..400 {
            plant.scan();
        }
        let before = plant.true_temperature();
        plant.add_charge(10.0).unwrap();
        assert_eq!(plant.state().charge_q, 90.0);
        assert_eq!(plant.state().elapsed, 0.0);
        assert_eq!(plant.state().temp_at_charge, before);
        // New target t_stab(90) = -19.8 is below the current temperature.
        let mut last = before;
        for _ in 0..100 {
            let t = plant.scan().temp;
            assert!(t < last);
            last = t;
        }
        assert!(plant.add_charge(0.0).is_err());
    }

    #[test]
    fn charge_past_optimum_raises_target() {
        let p = example_params();
        assert!(p.t_stab(110.0) > p.t_opt);
    }

    #[test]
    fn full_transient_reaches_target() {
        let p = example_params();
        let mut plant = Plant::new(p.clone(), 80.0).unwrap();
        let settle = (20.0 * p.tau / p.scan_interval).round() as usize;
        for _ in 0..settle {
            plant.scan();
        }
        plant.add_charge(10.0).unwrap();
        // Gap is about 0.6 °C, so e^-4 of it is about 0.011 °C.
        let steps = (4.0 * p.tau / p.scan_interval).round() as usize;
        let min = (0..steps)
            .map(|_| plant.scan().temp)
            .fold(f64::INFINITY, f64::min);
        assert!(min - p.t_stab(90.0) < 0.05);
        assert!(min >= p.t_stab(90.0));
    }

    #[test]
    fn dtemp_cases() {
        let flat: Vec<Sample> = (0..=20)
            .map(|k| Sample {
                time: k as f64 * 0.1,
                temp: 3.0,
            })
            .collect();
        assert_eq!(dtemp(&flat, 1.0).unwrap(), 0.0);

        let warming: Vec<Sample> = (0..=20)
            .map(|k| Sample {
                time: k as f64 * 0.1,
                temp: k as f64 * 0.2,
            })
            .collect();
        assert_eq!(dtemp(&warming, 1.0).unwrap(), 0.0);

        let steep: Vec<Sample> = (0..=20)
            .map(|k| Sample {
                time: k as f64 * 0.1,
                temp: -(k as f64) * 10.0,
            })
            .collect();
        assert_eq!(dtemp(&steep, 1.0).unwrap(), DTEMP_MAX);

        assert!(matches!(
            dtemp(&flat[..5], 1.0),
            Err(PlantError::InsufficientWindow { .. })
        ));
        assert!(dtemp(&[], 1.0).is_err());
    }

    #[test]
    fn dtemp_on_exponential_matches_closed_form() {
        // Gap G at time t, span s: G e^{-t/tau} (e^{s/tau} - 1), where the
        // reference gap is G e^{-(t-s)/tau}.
        let p = example_params();
        let (q, from) = (90.0, -15.0);
        let gap = from - p.t_stab(q);
        let span = 1.0;
        let window: Vec<Sample> = (0..=300)
            .map(|k| {
                let t = k as f64 * p.scan_interval;
                Sample {
                    time: t,
                    temp: p.temperature(q, t, from),
                }
            })
            .collect();
        let t = window.last().unwrap().time;
        let expected = gap * (-t / p.tau).exp() * ((span / p.tau).exp() - 1.0);
        assert_abs_diff_eq!(dtemp(&window, span).unwrap(), expected, epsilon = 1e-9);
    }

    #[test]
    fn validation_rejects_inverted_temperatures() {
        let p = PlantParams {
            t_opt: 30.0,
            ..example_params()
        };
        assert!(Plant::new(p, 50.0).is_err());
        let p = PlantParams {
            tau: 0.0,
            ..example_params()
        };
        assert!(p.validate().is_err());
    }
}
