//! Simple sub-probability valuations `Σ r_x δ_x` on a finite poset.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::ControlFlow;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::dyadic::Dyadic;
use crate::poset::{FinitePoset, PosetError, UpperSet, UPPER_SET_LIMIT};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValuationError {
    #[error(transparent)]
    Poset(#[from] PosetError),
    #[error("weight {weight} at '{element}' is negative")]
    NegativeWeight { element: String, weight: Dyadic },
    #[error("total mass {0} exceeds 1")]
    MassExceedsOne(Dyadic),
    #[error("element index {0} is not in the poset")]
    ForeignElement(usize),
    #[error("valuations live on different posets")]
    DifferentPosets,
    #[error("upper set belongs to a different poset")]
    ForeignUpperSet,
    #[error("{0}")]
    NotMonotone(Box<MonotonicityViolation>),
    #[error("function value at '{0}' is negative")]
    NegativeValue(String),
    #[error("function has no value at support element '{0}'")]
    MissingValue(String),
    #[error("horizon {horizon} is outside 1..={len}")]
    HorizonOutOfRange { horizon: usize, len: usize },
    #[error("tolerance {0} is negative")]
    NegativeTolerance(Dyadic),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("function is not monotone: {lower} <= {upper} but f({lower}) = {lower_value} > f({upper}) = {upper_value}")]
pub struct MonotonicityViolation {
    pub lower: String,
    pub upper: String,
    pub lower_value: Dyadic,
    pub upper_value: Dyadic,
}

/// A finite-support valuation with strictly positive dyadic weights and total mass at most 1.
#[derive(Debug, Clone)]
pub struct SimpleValuation {
    poset: Arc<FinitePoset>,
    weights: BTreeMap<usize, Dyadic>,
}

impl PartialEq for SimpleValuation {
    fn eq(&self, other: &Self) -> bool {
        self.same_poset(other) && self.weights == other.weights
    }
}

impl Eq for SimpleValuation {}

impl SimpleValuation {
    /// Validates and canonicalizes: repeated elements are summed and zero weights dropped.
    pub fn new(
        poset: Arc<FinitePoset>,
        weights: impl IntoIterator<Item = (usize, Dyadic)>,
    ) -> Result<Self, ValuationError> {
        let mut merged: BTreeMap<usize, Dyadic> = BTreeMap::new();
        for (x, w) in weights {
            if x >= poset.len() {
                return Err(ValuationError::ForeignElement(x));
            }
            if w.is_negative() {
                return Err(ValuationError::NegativeWeight {
                    element: poset.name(x).to_string(),
                    weight: w,
                });
            }
            let slot = merged.entry(x).or_default();
            *slot = &*slot + &w;
        }
        merged.retain(|_, w| !w.is_zero());
        let total: Dyadic = merged.values().sum();
        if total > Dyadic::one() {
            return Err(ValuationError::MassExceedsOne(total));
        }
        Ok(SimpleValuation {
            poset,
            weights: merged,
        })
    }

    pub fn from_names<S: AsRef<str>>(
        poset: Arc<FinitePoset>,
        weights: &[(S, Dyadic)],
    ) -> Result<Self, ValuationError> {
        let resolved = weights
            .iter()
            .map(|(name, w)| Ok((poset.element(name.as_ref())?, w.clone())))
            .collect::<Result<Vec<_>, ValuationError>>()?;
        SimpleValuation::new(poset, resolved)
    }

    pub fn zero(poset: Arc<FinitePoset>) -> Self {
        SimpleValuation {
            poset,
            weights: BTreeMap::new(),
        }
    }

    /// The point mass `δ_x`.
    pub fn point(poset: Arc<FinitePoset>, x: usize) -> Result<Self, ValuationError> {
        SimpleValuation::new(poset, [(x, Dyadic::one())])
    }

    pub fn poset(&self) -> &Arc<FinitePoset> {
        &self.poset
    }

    pub fn weights(&self) -> &BTreeMap<usize, Dyadic> {
        &self.weights
    }

    pub fn weight(&self, x: usize) -> Dyadic {
        self.weights.get(&x).cloned().unwrap_or_default()
    }

    /// Support elements in enumeration order.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights.keys().copied()
    }

    pub fn total_mass(&self) -> Dyadic {
        self.weights.values().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.weights.is_empty()
    }

    /// Largest denominator exponent among the weights.
    pub fn max_exponent(&self) -> u32 {
        self.weights.values().map(Dyadic::exponent).max().unwrap_or(0)
    }

    pub fn same_poset(&self, other: &SimpleValuation) -> bool {
        Arc::ptr_eq(&self.poset, &other.poset) || *self.poset == *other.poset
    }

    /// Pointwise sum, still required to have mass at most 1.
    pub fn plus(&self, other: &SimpleValuation) -> Result<SimpleValuation, ValuationError> {
        if !self.same_poset(other) {
            return Err(ValuationError::DifferentPosets);
        }
        SimpleValuation::new(
            self.poset.clone(),
            self.weights
                .iter()
                .chain(other.weights.iter())
                .map(|(&x, w)| (x, w.clone())),
        )
    }

    /// `μ(U) = Σ_{x ∈ U} r_x`.
    pub fn mass(&self, upper: &UpperSet) -> Result<Dyadic, ValuationError> {
        if !upper.belongs_to(&self.poset) {
            return Err(ValuationError::ForeignUpperSet);
        }
        Ok(self.mass_unchecked(upper.members()))
    }

    pub(crate) fn mass_unchecked(&self, members: &[usize]) -> Dyadic {
        members.iter().filter_map(|x| self.weights.get(x)).sum()
    }

    /// Names and weights, for reports.
    pub fn named_weights(&self) -> Vec<(String, Dyadic)> {
        self.weights
            .iter()
            .map(|(&x, w)| (self.poset.name(x).to_string(), w.clone()))
            .collect()
    }
}

/// Outcome of comparing two valuations on every upper set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OrderVerdict {
    Holds,
    /// `lhs = μ(witness) > ν(witness) = rhs`.
    Fails {
        witness: UpperSet,
        lhs: Dyadic,
        rhs: Dyadic,
    },
}

impl OrderVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, OrderVerdict::Holds)
    }
}

/// Decides `μ <= ν` by exhaustive enumeration of upper sets.
pub fn order_oracle(
    mu: &SimpleValuation,
    nu: &SimpleValuation,
) -> Result<OrderVerdict, ValuationError> {
    order_oracle_bounded(mu, nu, UPPER_SET_LIMIT)
}

pub fn order_oracle_bounded(
    mu: &SimpleValuation,
    nu: &SimpleValuation,
    limit: usize,
) -> Result<OrderVerdict, ValuationError> {
    if !mu.same_poset(nu) {
        return Err(ValuationError::DifferentPosets);
    }
    let found = mu.poset.visit_upper_sets(limit, |u| {
        let lhs = mu.mass_unchecked(u.members());
        let rhs = nu.mass_unchecked(u.members());
        if lhs > rhs {
            ControlFlow::Break(OrderVerdict::Fails {
                witness: u.clone(),
                lhs,
                rhs,
            })
        } else {
            ControlFlow::Continue(())
        }
    })?;
    Ok(found.unwrap_or(OrderVerdict::Holds))
}

/// A non-negative monotone function, possibly defined on only part of the poset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonotoneFunction {
    poset: u64,
    values: BTreeMap<usize, Dyadic>,
}

impl MonotoneFunction {
    pub fn new(
        poset: &FinitePoset,
        values: impl IntoIterator<Item = (usize, Dyadic)>,
    ) -> Result<Self, ValuationError> {
        let values: BTreeMap<usize, Dyadic> = values.into_iter().collect();
        for (&x, v) in &values {
            if x >= poset.len() {
                return Err(ValuationError::ForeignElement(x));
            }
            if v.is_negative() {
                return Err(ValuationError::NegativeValue(poset.name(x).to_string()));
            }
        }
        for (&x, vx) in &values {
            for (&y, vy) in &values {
                if poset.leq(x, y) && vx > vy {
                    return Err(ValuationError::NotMonotone(Box::new(MonotonicityViolation {
                        lower: poset.name(x).to_string(),
                        upper: poset.name(y).to_string(),
                        lower_value: vx.clone(),
                        upper_value: vy.clone(),
                    })));
                }
            }
        }
        Ok(MonotoneFunction {
            poset: poset.fingerprint(),
            values,
        })
    }

    /// The 0/1 indicator of an upper set, defined everywhere.
    pub fn indicator(poset: &FinitePoset, upper: &UpperSet) -> Self {
        MonotoneFunction {
            poset: poset.fingerprint(),
            values: (0..poset.len())
                .map(|x| {
                    let v = if upper.contains(x) {
                        Dyadic::one()
                    } else {
                        Dyadic::zero()
                    };
                    (x, v)
                })
                .collect(),
        }
    }

    pub fn value(&self, x: usize) -> Option<&Dyadic> {
        self.values.get(&x)
    }
}

/// `∫ f dμ = Σ r_x f(x)`.
pub fn integrate_monotone(
    mu: &SimpleValuation,
    f: &MonotoneFunction,
) -> Result<Dyadic, ValuationError> {
    if f.poset != mu.poset.fingerprint() {
        return Err(ValuationError::DifferentPosets);
    }
    mu.weights
        .iter()
        .map(|(&x, r)| {
            f.value(x)
                .map(|v| r * v)
                .ok_or_else(|| ValuationError::MissingValue(mu.poset.name(x).to_string()))
        })
        .sum::<Result<Dyadic, _>>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PortmanteauCondition {
    /// `min_{n >= N} μ_n(O) >= μ(O) - tol` on upper sets `O`.
    LiminfOpen,
    /// `max_{n >= N} μ_n(↑F) <= μ(↑F) + tol` on finitely generated upper sets.
    LimsupFinitelyGenerated,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortmanteauViolation {
    pub condition: PortmanteauCondition,
    pub witness: UpperSet,
    pub observed: Dyadic,
    pub bound: Dyadic,
}

/// Finite-tail evidence for the two Portmanteau inequalities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvergenceCertificate {
    pub horizon: usize,
    pub tolerance: Dyadic,
    pub violations: Vec<PortmanteauViolation>,
}

impl ConvergenceCertificate {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks both Portmanteau inequalities over the tail `n >= horizon`
/// (indices are 1-based, so `horizon = 1` is the whole sequence).
pub fn portmanteau_check(
    sequence: &[SimpleValuation],
    limit: &SimpleValuation,
    horizon: usize,
    tolerance: &Dyadic,
) -> Result<ConvergenceCertificate, ValuationError> {
    if horizon == 0 || horizon > sequence.len() {
        return Err(ValuationError::HorizonOutOfRange {
            horizon,
            len: sequence.len(),
        });
    }
    if tolerance.is_negative() {
        return Err(ValuationError::NegativeTolerance(tolerance.clone()));
    }
    if sequence.iter().any(|m| !m.same_poset(limit)) {
        return Err(ValuationError::DifferentPosets);
    }
    let poset = limit.poset();
    let tail = &sequence[horizon - 1..];
    let generators: BTreeSet<usize> = limit
        .support()
        .chain(sequence.iter().flat_map(|m| m.support()))
        .collect();

    let mut violations = Vec::new();
    poset.visit_upper_sets::<()>(UPPER_SET_LIMIT, |u| {
        let target = limit.mass_unchecked(u.members());
        let masses: Vec<Dyadic> = tail.iter().map(|m| m.mass_unchecked(u.members())).collect();
        let low = masses.iter().min().cloned().unwrap_or_default();
        let lower_bound = &target - tolerance;
        if low < lower_bound {
            violations.push(PortmanteauViolation {
                condition: PortmanteauCondition::LiminfOpen,
                witness: u.clone(),
                observed: low,
                bound: lower_bound,
            });
        }
        let finitely_generated = poset
            .minimal_elements(u.members())
            .iter()
            .all(|x| generators.contains(x));
        if finitely_generated {
            let high = masses.iter().max().cloned().unwrap_or_default();
            let upper_bound = &target + tolerance;
            if high > upper_bound {
                violations.push(PortmanteauViolation {
                    condition: PortmanteauCondition::LimsupFinitelyGenerated,
                    witness: u.clone(),
                    observed: high,
                    bound: upper_bound,
                });
            }
        }
        ControlFlow::Continue(())
    })?;
    violations.sort_by(|a, b| (a.condition, &a.witness).cmp(&(b.condition, &b.witness)));
    Ok(ConvergenceCertificate {
        horizon,
        tolerance: tolerance.clone(),
        violations,
    })
}
