//! Fuzzy sets and single-output inference with min for AND/THEN and max for
//! rule aggregation.
//!
//! Controllers evaluate through [`RuleBase::defuzzify_weighted_average`], which
//! needs singleton consequents. [`RuleBase::infer_cri`] produces the full fuzzy
//! output set for rule bases with shaped consequents.

mod membership;
mod rules;
mod variable;

pub use membership::{MembershipFunction, MfKind};
pub use rules::{weighted_average, FuzzyOutputSamples, Rule, RuleBase};
pub use variable::{LinguisticVariable, Term};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FuzzyError {
    #[error("every rule has zero fire strength")]
    AllRulesZero,
    #[error("expected {expected} crisp inputs, got {got}")]
    InputArity { expected: usize, got: usize },
    #[error("invalid membership function: {0}")]
    InvalidMembership(String),
    #[error("invalid linguistic variable: {0}")]
    InvalidVariable(String),
    #[error("invalid rule base: {0}")]
    InvalidRuleBase(String),
    #[error("consequent term {0} is not a singleton")]
    NonSingletonConsequent(String),
}
