//! Interval-rule (crisp) stop/continue controllers.
//!
//! All intervals are half-open `[lo, hi)` with `hi = inf` for the last band.
//! `obs_time` is minutes since the observation timer started.

use super::Decision;

/// Dtemp below which the crisp controllers start their observation timer.
pub const CRISP_TIMER_START: f64 = 0.5;

/// Two-by-two partition: stop once Dtemp is below 0.5 °C and 30 minutes have
/// been observed.
pub fn crisp_simple_decide(dtemp: f64, obs_time: f64) -> Decision {
    if (0.0..0.5).contains(&dtemp.max(0.0)) && obs_time >= 30.0 {
        Decision::Stop
    } else {
        Decision::Continue
    }
}

const INF: f64 = f64::INFINITY;

/// `(dtemp band, time band, decision)`.
pub type CrispRule = ((f64, f64), (f64, f64), Decision);

/// One rule for every pairwise combination of the
/// four Dtemp and four Time intervals.
pub const SIXTEEN_RULES: [CrispRule; 16] = {
    use Decision::{Continue as C, Stop as S};
    [
        ((0.0, 0.25), (0.0, 20.0), C),
        ((0.0, 0.25), (20.0, 25.0), S),
        ((0.0, 0.25), (25.0, 30.0), S),
        ((0.0, 0.25), (30.0, INF), S),
        ((0.25, 0.35), (0.0, 20.0), C),
        ((0.25, 0.35), (20.0, 25.0), C),
        ((0.25, 0.35), (25.0, 30.0), S),
        ((0.25, 0.35), (30.0, INF), S),
        ((0.35, 0.5), (0.0, 20.0), C),
        ((0.35, 0.5), (20.0, 25.0), C),
        ((0.35, 0.5), (25.0, 30.0), C),
        ((0.35, 0.5), (30.0, INF), S),
        ((0.5, INF), (0.0, 20.0), C),
        ((0.5, INF), (20.0, 25.0), C),
        ((0.5, INF), (25.0, 30.0), C),
        ((0.5, INF), (30.0, INF), C),
    ]
};

/// Rule-by-rule evaluation of the sixteen interval rules.
pub fn crisp_sixteen_decide(dtemp: f64, obs_time: f64) -> Decision {
    let dtemp = dtemp.max(0.0);
    let obs_time = obs_time.max(0.0);
    SIXTEEN_RULES
        .iter()
        .find(|((d_lo, d_hi), (t_lo, t_hi), _)| {
            (*d_lo..*d_hi).contains(&dtemp) && (*t_lo..*t_hi).contains(&obs_time)
        })
        .map(|(_, _, decision)| *decision)
        .unwrap_or(Decision::Continue)
}

/// The six STOP rules of the sixteen-rule table merged into three: each Dtemp
/// band below 0.5 °C stops once its own waiting time has elapsed.
pub fn crisp_refined_decide(dtemp: f64, obs_time: f64) -> Decision {
    let dtemp = dtemp.max(0.0);
    let wait = if dtemp < 0.25 {
        20.0
    } else if dtemp < 0.35 {
        25.0
    } else if dtemp < 0.5 {
        30.0
    } else {
        return Decision::Continue;
    };
    if obs_time >= wait {
        Decision::Stop
    } else {
        Decision::Continue
    }
}
