use serde::{Deserialize, Serialize};

use super::FuzzyError;

/// Parameterized membership function shape.
///
/// Serialized as `{ kind = "triangular", params = [a, b, c] }` and so on, so
/// that config files stay flat and readable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MfRepr", into = "MfRepr")]
pub enum MembershipFunction {
    /// Zero outside `[a, c]`, rising linearly to 1 at `b`, falling back to 0 at `c`.
    /// `a == b` or `b == c` gives a shoulder.
    Triangular { a: f64, b: f64, c: f64 },
    /// Zero outside `[a, d]`, 1 on the plateau `[b, c]`, linear in between.
    Trapezoidal { a: f64, b: f64, c: f64, d: f64 },
    /// `exp(-(x - mean)^2 / (2 sigma^2))`, full support.
    Gaussian { mean: f64, sigma: f64 },
    /// 1 at `c`, 0 elsewhere.
    Singleton { c: f64 },
}

impl MembershipFunction {
    pub fn triangular(a: f64, b: f64, c: f64) -> Self {
        Self::Triangular { a, b, c }
    }

    pub fn trapezoidal(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self::Trapezoidal { a, b, c, d }
    }

    pub fn gaussian(mean: f64, sigma: f64) -> Self {
        Self::Gaussian { mean, sigma }
    }

    pub fn singleton(c: f64) -> Self {
        Self::Singleton { c }
    }

    /// Membership grade of `x`, always in `[0, 1]`.
    pub fn grade(&self, x: f64) -> f64 {
        match *self {
            // A triangle is a trapezoid with a single-point plateau; sharing the
            // formula keeps the two bit-identical in that case.
            Self::Triangular { a, b, c } => trapezoid_grade(a, b, b, c, x),
            Self::Trapezoidal { a, b, c, d } => trapezoid_grade(a, b, c, d, x),
            Self::Gaussian { mean, sigma } => {
                let z = (x - mean) / sigma;
                (-0.5 * z * z).exp()
            }
            Self::Singleton { c } => {
                if x == c {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Closed interval outside of which the grade is zero.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Self::Triangular { a, c, .. } => (a, c),
            Self::Trapezoidal { a, d, .. } => (a, d),
            Self::Gaussian { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Self::Singleton { c } => (c, c),
        }
    }

    /// A point where the grade is 1 (left edge of the plateau for trapezoids).
    pub fn peak(&self) -> f64 {
        match *self {
            Self::Triangular { b, .. } | Self::Trapezoidal { b, .. } => b,
            Self::Gaussian { mean, .. } => mean,
            Self::Singleton { c } => c,
        }
    }

    pub fn kind(&self) -> MfKind {
        match self {
            Self::Triangular { .. } => MfKind::Triangular,
            Self::Trapezoidal { .. } => MfKind::Trapezoidal,
            Self::Gaussian { .. } => MfKind::Gaussian,
            Self::Singleton { .. } => MfKind::Singleton,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            Self::Triangular { a, b, c } => vec![a, b, c],
            Self::Trapezoidal { a, b, c, d } => vec![a, b, c, d],
            Self::Gaussian { mean, sigma } => vec![mean, sigma],
            Self::Singleton { c } => vec![c],
        }
    }

    pub fn from_params(kind: MfKind, params: &[f64]) -> Result<Self, FuzzyError> {
        let arity = match kind {
            MfKind::Triangular => 3,
            MfKind::Trapezoidal => 4,
            MfKind::Gaussian => 2,
            MfKind::Singleton => 1,
        };
        if params.len() != arity {
            return Err(FuzzyError::InvalidMembership(format!(
                "{kind} expects {arity} parameters, got {}",
                params.len()
            )));
        }
        let mf = match kind {
            MfKind::Triangular => Self::triangular(params[0], params[1], params[2]),
            MfKind::Trapezoidal => Self::trapezoidal(params[0], params[1], params[2], params[3]),
            MfKind::Gaussian => Self::gaussian(params[0], params[1]),
            MfKind::Singleton => Self::singleton(params[0]),
        };
        mf.validate()?;
        Ok(mf)
    }

    pub fn validate(&self) -> Result<(), FuzzyError> {
        let params = self.params();
        if params.iter().any(|p| !p.is_finite()) {
            return Err(FuzzyError::InvalidMembership(format!(
                "non-finite parameter in {self:?}"
            )));
        }
        let ok = match *self {
            Self::Triangular { a, b, c } => a <= b && b <= c && a < c,
            Self::Trapezoidal { a, b, c, d } => a <= b && b <= c && c <= d && a < d,
            Self::Gaussian { sigma, .. } => sigma > 0.0,
            Self::Singleton { .. } => true,
        };
        if ok {
            Ok(())
        } else {
            Err(FuzzyError::InvalidMembership(format!(
                "breakpoints out of order or degenerate: {self:?}"
            )))
        }
    }
}

fn trapezoid_grade(a: f64, b: f64, c: f64, d: f64, x: f64) -> f64 {
    if x < a || x > d {
        0.0
    } else if x >= b && x <= c {
        1.0
    } else if x < b {
        ((x - a) / (b - a)).clamp(0.0, 1.0)
    } else {
        ((d - x) / (d - c)).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MfKind {
    Triangular,
    Trapezoidal,
    Gaussian,
    Singleton,
}

impl std::fmt::Display for MfKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Self::Triangular => "triangular",
            Self::Trapezoidal => "trapezoidal",
            Self::Gaussian => "gaussian",
            Self::Singleton => "singleton",
        };
        f.write_str(name)
    }
}

#[derive(Serialize, Deserialize)]
struct MfRepr {
    kind: MfKind,
    params: Vec<f64>,
}

impl TryFrom<MfRepr> for MembershipFunction {
    type Error = FuzzyError;

    fn try_from(repr: MfRepr) -> Result<Self, Self::Error> {
        MembershipFunction::from_params(repr.kind, &repr.params)
    }
}

impl From<MembershipFunction> for MfRepr {
    fn from(mf: MembershipFunction) -> Self {
        MfRepr {
            kind: mf.kind(),
            params: mf.params(),
        }
    }
}
