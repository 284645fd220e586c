use serde::{Deserialize, Serialize};

use super::{FuzzyError, LinguisticVariable, MembershipFunction};

/// `IF x0 is A AND x1 is B ... THEN z is C`.
///
/// `antecedents[i]` is a term index into input variable `i`; `consequent` is a
/// term index into the output variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub antecedents: Vec<usize>,
    pub consequent: usize,
}

impl Rule {
    pub fn new(antecedents: Vec<usize>, consequent: usize) -> Self {
        Self {
            antecedents,
            consequent,
        }
    }
}

/// Sampled fuzzy output set produced by max-min composition.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyOutputSamples {
    pub z_grid: Vec<f64>,
    pub grades: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleBase {
    inputs: Vec<LinguisticVariable>,
    output: LinguisticVariable,
    rules: Vec<Rule>,
}

impl RuleBase {
    pub fn new(
        inputs: Vec<LinguisticVariable>,
        output: LinguisticVariable,
        rules: Vec<Rule>,
    ) -> Result<Self, FuzzyError> {
        if inputs.is_empty() {
            return Err(FuzzyError::InvalidRuleBase("no input variables".into()));
        }
        if rules.is_empty() {
            return Err(FuzzyError::InvalidRuleBase("no rules".into()));
        }
        for (j, rule) in rules.iter().enumerate() {
            if rule.antecedents.len() != inputs.len() {
                return Err(FuzzyError::InvalidRuleBase(format!(
                    "rule {j} has {} antecedents for {} inputs",
                    rule.antecedents.len(),
                    inputs.len()
                )));
            }
            for (var, &term) in inputs.iter().zip(&rule.antecedents) {
                if term >= var.terms().len() {
                    return Err(FuzzyError::InvalidRuleBase(format!(
                        "rule {j} references term {term} of {}",
                        var.name()
                    )));
                }
            }
            if rule.consequent >= output.terms().len() {
                return Err(FuzzyError::InvalidRuleBase(format!(
                    "rule {j} references output term {}",
                    rule.consequent
                )));
            }
        }
        Ok(Self {
            inputs,
            output,
            rules,
        })
    }

    pub fn inputs(&self) -> &[LinguisticVariable] {
        &self.inputs
    }

    pub fn output(&self) -> &LinguisticVariable {
        &self.output
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// Minimum of the antecedent grades of `rule`. Inputs are clamped to each
    /// variable's range.
    ///
    /// Panics if `crisp_inputs` does not have one value per input variable.
    pub fn fire_strength(&self, rule: &Rule, crisp_inputs: &[f64]) -> f64 {
        assert_eq!(crisp_inputs.len(), self.inputs.len(), "input arity");
        self.inputs
            .iter()
            .zip(&rule.antecedents)
            .zip(crisp_inputs)
            .map(|((var, &term), &x)| var.grade(term, x))
            .fold(1.0, f64::min)
    }

    pub fn firing_strengths(&self, crisp_inputs: &[f64]) -> Result<Vec<f64>, FuzzyError> {
        self.check_arity(crisp_inputs)?;
        let grades: Vec<Vec<f64>> = self
            .inputs
            .iter()
            .zip(crisp_inputs)
            .map(|(var, &x)| var.grades(x))
            .collect();
        Ok(self
            .rules
            .iter()
            .map(|rule| {
                rule.antecedents
                    .iter()
                    .zip(&grades)
                    .map(|(&term, g)| g[term])
                    .fold(1.0, f64::min)
            })
            .collect())
    }

    /// Singleton value of each rule's consequent.
    pub fn consequent_values(&self) -> Result<Vec<f64>, FuzzyError> {
        self.rules
            .iter()
            .map(|rule| {
                let term = &self.output.terms()[rule.consequent];
                match term.mf {
                    MembershipFunction::Singleton { c } => Ok(c),
                    _ => Err(FuzzyError::NonSingletonConsequent(term.name.clone())),
                }
            })
            .collect()
    }

    /// Crisp output `sum(mu_j * c_j) / sum(mu_j)` over singleton consequents.
    pub fn defuzzify_weighted_average(&self, crisp_inputs: &[f64]) -> Result<f64, FuzzyError> {
        let values = self.consequent_values()?;
        let strengths = self.firing_strengths(crisp_inputs)?;
        weighted_average(&strengths, &values)
    }

    /// Max-min composition: `grade(z) = max_j min(mu_j, C_j(z))`.
    pub fn infer_cri(
        &self,
        crisp_inputs: &[f64],
        z_grid: &[f64],
    ) -> Result<FuzzyOutputSamples, FuzzyError> {
        let strengths = self.firing_strengths(crisp_inputs)?;
        let grades = z_grid
            .iter()
            .map(|&z| {
                self.rules
                    .iter()
                    .zip(&strengths)
                    .map(|(rule, &mu)| mu.min(self.output.terms()[rule.consequent].mf.grade(z)))
                    .fold(0.0, f64::max)
            })
            .collect();
        Ok(FuzzyOutputSamples {
            z_grid: z_grid.to_vec(),
            grades,
        })
    }

    fn check_arity(&self, crisp_inputs: &[f64]) -> Result<(), FuzzyError> {
        if crisp_inputs.len() != self.inputs.len() {
            return Err(FuzzyError::InputArity {
                expected: self.inputs.len(),
                got: crisp_inputs.len(),
            });
        }
        Ok(())
    }
}

/// Weighted average of `values` by `strengths`.
///
/// Errors with [`FuzzyError::AllRulesZero`] when every strength is zero.
pub fn weighted_average(strengths: &[f64], values: &[f64]) -> Result<f64, FuzzyError> {
    debug_assert_eq!(strengths.len(), values.len());
    let mut num = 0.0;
    let mut den = 0.0;
    for (&mu, &c) in strengths.iter().zip(values) {
        num += mu * c;
        den += mu;
    }
    if den > 0.0 {
        Ok(num / den)
    } else {
        Err(FuzzyError::AllRulesZero)
    }
}
