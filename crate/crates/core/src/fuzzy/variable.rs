use serde::{Deserialize, Serialize};

use super::{FuzzyError, MembershipFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub name: String,
    pub mf: MembershipFunction,
}

impl Term {
    pub fn new(name: impl Into<String>, mf: MembershipFunction) -> Self {
        Self {
            name: name.into(),
            mf,
        }
    }
}

/// A named variable with a closed range and an ordered list of fuzzy terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VariableRepr", into = "VariableRepr")]
pub struct LinguisticVariable {
    name: String,
    lo: f64,
    hi: f64,
    terms: Vec<Term>,
}

impl LinguisticVariable {
    pub fn new(
        name: impl Into<String>,
        range: (f64, f64),
        terms: Vec<Term>,
    ) -> Result<Self, FuzzyError> {
        let name = name.into();
        let (lo, hi) = range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(FuzzyError::InvalidVariable(format!(
                "{name}: range [{lo}, {hi}] is empty"
            )));
        }
        if terms.is_empty() {
            return Err(FuzzyError::InvalidVariable(format!("{name}: no terms")));
        }
        for (i, term) in terms.iter().enumerate() {
            term.mf.validate()?;
            if terms[..i].iter().any(|t| t.name == term.name) {
                return Err(FuzzyError::InvalidVariable(format!(
                    "{name}: duplicate term {}",
                    term.name
                )));
            }
            let (s_lo, s_hi) = term.mf.support();
            if s_hi < lo || s_lo > hi {
                return Err(FuzzyError::InvalidVariable(format!(
                    "{name}: term {} lies outside [{lo}, {hi}]",
                    term.name
                )));
            }
        }
        Ok(Self {
            name,
            lo,
            hi,
            terms,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn term_index(&self, name: &str) -> Option<usize> {
        self.terms.iter().position(|t| t.name == name)
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }

    /// Grade of `x` in term `index`, after clamping `x` to the variable range.
    pub fn grade(&self, index: usize, x: f64) -> f64 {
        self.terms[index].mf.grade(self.clamp(x))
    }

    pub fn grades(&self, x: f64) -> Vec<f64> {
        let x = self.clamp(x);
        self.terms.iter().map(|t| t.mf.grade(x)).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct VariableRepr {
    name: String,
    range: [f64; 2],
    terms: Vec<Term>,
}

impl TryFrom<VariableRepr> for LinguisticVariable {
    type Error = FuzzyError;

    fn try_from(repr: VariableRepr) -> Result<Self, Self::Error> {
        LinguisticVariable::new(repr.name, (repr.range[0], repr.range[1]), repr.terms)
    }
}

impl From<LinguisticVariable> for VariableRepr {
    fn from(v: LinguisticVariable) -> Self {
        VariableRepr {
            name: v.name,
            range: [v.lo, v.hi],
            terms: v.terms,
        }
    }
}
