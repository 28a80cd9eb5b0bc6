//! Measures on the dyadic chain `[0, 1]`, their distribution functions and
//! quantile functions.
//!
//! The chain has least element `0` and greatest element `1`. A measure is a
//! finite set of point masses at dyadic points.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::dyadic::Dyadic;
use crate::poset::{FinitePoset, UpperSet};
use crate::valuation::{order_oracle, OrderVerdict, SimpleValuation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuantileError {
    #[error("{0} is outside [0, 1]")]
    OutOfRange(Dyadic),
    #[error("weight {weight} at {point} is negative")]
    NegativeWeight { point: Dyadic, weight: Dyadic },
    #[error("total mass {0} exceeds 1")]
    MassExceedsOne(Dyadic),
    #[error("element '{0}' is not a dyadic point of [0, 1]")]
    NotAPoint(String),
}

/// A simple sub-probability measure on the chain `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChainMeasure {
    weights: BTreeMap<Dyadic, Dyadic>,
}

impl ChainMeasure {
    /// Sums repeated points and drops zero weights.
    pub fn new(masses: impl IntoIterator<Item = (Dyadic, Dyadic)>) -> Result<Self, QuantileError> {
        let mut weights: BTreeMap<Dyadic, Dyadic> = BTreeMap::new();
        for (point, weight) in masses {
            if !point.in_unit_interval() {
                return Err(QuantileError::OutOfRange(point));
            }
            if weight.is_negative() {
                return Err(QuantileError::NegativeWeight { point, weight });
            }
            *weights.entry(point).or_default() += weight;
        }
        weights.retain(|_, w| !w.is_zero());
        let total: Dyadic = weights.values().sum();
        if total > Dyadic::one() {
            return Err(QuantileError::MassExceedsOne(total));
        }
        Ok(ChainMeasure { weights })
    }

    pub fn zero() -> Self {
        ChainMeasure::default()
    }

    pub fn point(x: Dyadic) -> Result<Self, QuantileError> {
        ChainMeasure::new([(x, Dyadic::one())])
    }

    /// Reads element names of a valuation as dyadic points.
    pub fn from_valuation(mu: &SimpleValuation) -> Result<Self, QuantileError> {
        let masses = mu
            .named_weights()
            .into_iter()
            .map(|(name, w)| {
                name.parse::<Dyadic>()
                    .map(|p| (p, w))
                    .map_err(|_| QuantileError::NotAPoint(name))
            })
            .collect::<Result<Vec<_>, _>>()?;
        ChainMeasure::new(masses)
    }

    pub fn weights(&self) -> &BTreeMap<Dyadic, Dyadic> {
        &self.weights
    }

    pub fn weight(&self, x: &Dyadic) -> Dyadic {
        self.weights.get(x).cloned().unwrap_or_default()
    }

    pub fn total_mass(&self) -> Dyadic {
        self.weights.values().sum()
    }

    pub fn max_exponent(&self) -> u32 {
        self.weights
            .iter()
            .flat_map(|(p, w)| [p.exponent(), w.exponent()])
            .max()
            .unwrap_or(0)
    }

    /// `μ + c·δ_x`, assuming the result still has mass at most one.
    fn with_extra(&self, x: Dyadic, c: Dyadic) -> ChainMeasure {
        ChainMeasure::new(self.weights.clone().into_iter().chain([(x, c)]))
            .expect("completing to mass one keeps the measure valid")
    }

    /// The finite chain of the support points of `self` and `extra`, plus `0` and `1`.
    pub fn induced_chain<'a>(&'a self, extra: impl IntoIterator<Item = &'a ChainMeasure>) -> Arc<FinitePoset> {
        let mut points: BTreeSet<Dyadic> = [Dyadic::zero(), Dyadic::one()].into();
        points.extend(self.weights.keys().cloned());
        for m in extra {
            points.extend(m.weights.keys().cloned());
        }
        let names: Vec<String> = points.iter().map(Dyadic::to_string).collect();
        Arc::new(FinitePoset::chain(&names).expect("distinct points form a chain"))
    }

    /// The same masses as a valuation on `chain`, which must contain the support.
    pub fn to_valuation(&self, chain: &Arc<FinitePoset>) -> Option<SimpleValuation> {
        let named: Vec<(String, Dyadic)> = self
            .weights
            .iter()
            .map(|(p, w)| (p.to_string(), w.clone()))
            .collect();
        SimpleValuation::from_names(chain.clone(), &named).ok()
    }
}

impl fmt::Display for ChainMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.weights.is_empty() {
            return f.write_str("0");
        }
        for (i, (p, w)) in self.weights.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{w}·δ_{p}")?;
        }
        Ok(())
    }
}

/// Which end of each region carries the value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Continuity {
    /// Constant on `[b_i, b_{i+1})`; the last region is closed at `1`.
    Right,
    /// Constant on `(b_{i-1}, b_i]`; the first region is the point `b_0 = 0`.
    Left,
}

impl Continuity {
    pub fn as_str(self) -> &'static str {
        match self {
            Continuity::Right => "right",
            Continuity::Left => "left",
        }
    }
}

/// A non-decreasing step function on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepFunction {
    pub side: Continuity,
    /// Strictly increasing, starting at `0`.
    pub breakpoints: Vec<Dyadic>,
    pub values: Vec<Dyadic>,
}

impl StepFunction {
    pub fn eval(&self, x: &Dyadic) -> Dyadic {
        let j = match self.side {
            Continuity::Right => self.breakpoints.partition_point(|b| b <= x) - 1,
            Continuity::Left => self
                .breakpoints
                .partition_point(|b| b < x)
                .min(self.breakpoints.len() - 1),
        };
        self.values[j].clone()
    }

    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|v| v[0] <= v[1])
            && self.breakpoints.windows(2).all(|b| b[0] < b[1])
    }
}

fn check_unit(x: &Dyadic) -> Result<(), QuantileError> {
    if x.in_unit_interval() {
        Ok(())
    } else {
        Err(QuantileError::OutOfRange(x.clone()))
    }
}

/// `F_μ(x) = μ(↓x)`.
pub fn cdf(mu: &ChainMeasure, x: &Dyadic) -> Result<Dyadic, QuantileError> {
    check_unit(x)?;
    Ok(mu.weights.range(..=x.clone()).map(|(_, w)| w).sum())
}

/// `F_μ` as a right-continuous step function.
pub fn cdf_function(mu: &ChainMeasure) -> StepFunction {
    let mut breakpoints = vec![Dyadic::zero()];
    let mut values = vec![Dyadic::zero()];
    let mut acc = Dyadic::zero();
    for (p, w) in &mu.weights {
        acc += w;
        if p.is_zero() {
            values[0] = acc.clone();
        } else {
            breakpoints.push(p.clone());
            values.push(acc.clone());
        }
    }
    StepFunction {
        side: Continuity::Right,
        breakpoints,
        values,
    }
}

/// `G_μ` as a left-continuous step function: `G_μ(0) = 0`, value `p_i` on
/// `(c_{i-1}, c_i]` for the cumulative masses `c_i`, and `1` above `||μ||`.
pub fn quantile_function(mu: &ChainMeasure) -> StepFunction {
    let mut breakpoints = vec![Dyadic::zero()];
    let mut values = vec![Dyadic::zero()];
    let mut acc = Dyadic::zero();
    for (p, w) in &mu.weights {
        acc += w;
        breakpoints.push(acc.clone());
        values.push(p.clone());
    }
    if acc < Dyadic::one() {
        breakpoints.push(Dyadic::one());
        values.push(Dyadic::one());
    }
    StepFunction {
        side: Continuity::Left,
        breakpoints,
        values,
    }
}

/// `G_μ(r)`: the least point `x` with `F_μ(x) >= r`, or `1` when there is none.
pub fn quantile(mu: &ChainMeasure, r: &Dyadic) -> Result<Dyadic, QuantileError> {
    check_unit(r)?;
    if r.is_zero() {
        return Ok(Dyadic::zero());
    }
    let mut acc = Dyadic::zero();
    for (p, w) in &mu.weights {
        acc += w;
        if acc >= *r {
            return Ok(p.clone());
        }
    }
    Ok(Dyadic::one())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PushforwardReport {
    /// `G_μ λ`.
    pub result: ChainMeasure,
    /// Mass placed on `1` beyond what `μ` puts there; set when `||μ|| < 1`.
    pub deviation: Option<Dyadic>,
}

impl PushforwardReport {
    pub fn deviation_note(&self) -> Option<String> {
        self.deviation.as_ref().map(|d| format!("mass {d} assigned to ⊤"))
    }
}

/// Lebesgue measure pushed along `G_μ`, computed from the lengths of its steps.
pub fn quantile_pushforward(mu: &ChainMeasure) -> PushforwardReport {
    let g = quantile_function(mu);
    let pieces = g
        .breakpoints
        .windows(2)
        .zip(&g.values[1..])
        .map(|(b, v)| (v.clone(), &b[1] - &b[0]));
    let result = ChainMeasure::new(pieces).expect("step lengths sum to one");
    let gap = Dyadic::one() - mu.total_mass();
    PushforwardReport {
        result,
        deviation: (!gap.is_zero()).then_some(gap),
    }
}

/// `μ + (1 - ||μ||)·δ_0`.
pub fn bottom_closure(mu: &ChainMeasure) -> ChainMeasure {
    mu.with_extra(Dyadic::zero(), Dyadic::one() - mu.total_mass())
}

/// `μ + (1 - ||μ||)·δ_1`, the expected value of [`quantile_pushforward`].
pub fn top_completion(mu: &ChainMeasure) -> ChainMeasure {
    mu.with_extra(Dyadic::one(), Dyadic::one() - mu.total_mass())
}

/// Outcome of comparing `μ <= ν` with `G_μ <= G_ν`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsoStatus {
    /// Both sides agree.
    Consistent,
    /// The sides disagree on a pair of equal total mass.
    Inconsistent,
    /// The masses differ, where the correspondence is not expected to hold.
    OutsideHypothesis,
}

impl IsoStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            IsoStatus::Consistent => "consistent",
            IsoStatus::Inconsistent => "inconsistent",
            IsoStatus::OutsideHypothesis => "outside verified hypothesis",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainIsoReport {
    /// The finite chain both measures were compared on.
    pub chain: Arc<FinitePoset>,
    pub valuation_side: OrderVerdict,
    /// Largest grid point `r` with `G_μ(r) > G_ν(r)`, if any.
    pub quantile_witness: Option<Dyadic>,
    /// Grid exponent actually used: the requested one, raised so that every
    /// cumulative mass is a grid point.
    pub resolution: u32,
    pub status: IsoStatus,
}

impl ChainIsoReport {
    pub fn valuation_holds(&self) -> bool {
        self.valuation_side.holds()
    }

    pub fn quantile_holds(&self) -> bool {
        self.quantile_witness.is_none()
    }

    pub fn witness_upper_set(&self) -> Option<&UpperSet> {
        match &self.valuation_side {
            OrderVerdict::Fails { witness, .. } => Some(witness),
            OrderVerdict::Holds => None,
        }
    }
}

/// Compares `μ <= ν` in the valuation order on the induced chain with
/// `G_μ(r) <= G_ν(r)` at every `r = i/2^d`.
pub fn chain_order_iso_check(mu: &ChainMeasure, nu: &ChainMeasure, resolution: u32) -> ChainIsoReport {
    let chain = mu.induced_chain([nu]);
    let mv = mu.to_valuation(&chain).expect("chain contains the support");
    let nv = nu.to_valuation(&chain).expect("chain contains the support");
    let valuation_side = order_oracle(&mv, &nv).expect("a chain of at most 20 points is enumerable");

    let d = resolution.max(mu.max_exponent()).max(nu.max_exponent());
    let (gm, gn) = (quantile_function(mu), quantile_function(nu));
    let quantile_witness = (0..=(1u64 << d))
        .rev()
        .map(|i| Dyadic::new(i, d))
        .find(|r| gm.eval(r) > gn.eval(r));

    let status = if mu.total_mass() != nu.total_mass() {
        IsoStatus::OutsideHypothesis
    } else if valuation_side.holds() == quantile_witness.is_none() {
        IsoStatus::Consistent
    } else {
        IsoStatus::Inconsistent
    };
    ChainIsoReport {
        chain,
        valuation_side,
        quantile_witness,
        resolution: d,
        status,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> Dyadic {
        s.parse().unwrap()
    }

    fn m(pairs: &[(&str, &str)]) -> ChainMeasure {
        ChainMeasure::new(pairs.iter().map(|(p, w)| (d(p), d(w)))).unwrap()
    }

    #[test]
    fn cdf_examples() {
        let mu = m(&[("1/4", "1/2"), ("3/4", "1/2")]);
        assert_eq!(cdf(&mu, &d("1/2")).unwrap(), d("1/2"));
        assert_eq!(cdf(&mu, &Dyadic::one()).unwrap(), mu.total_mass());
        assert_eq!(cdf(&ChainMeasure::zero(), &d("3/8")).unwrap(), Dyadic::zero());
        assert!(matches!(cdf(&mu, &d("2")), Err(QuantileError::OutOfRange(_))));
        let f = cdf_function(&mu);
        for i in 0..=16 {
            let x = Dyadic::new(i, 4);
            assert_eq!(f.eval(&x), cdf(&mu, &x).unwrap());
        }
    }

    #[test]
    fn quantile_examples() {
        let mu = m(&[("1/4", "1/2"), ("3/4", "1/2")]);
        assert_eq!(quantile(&mu, &d("3/8")).unwrap(), d("1/4"));
        assert_eq!(quantile(&mu, &Dyadic::zero()).unwrap(), Dyadic::zero());
        let half = m(&[("1/2", "1/2")]);
        assert_eq!(quantile(&half, &d("3/4")).unwrap(), Dyadic::one());
        for mu in [mu, half] {
            let g = quantile_function(&mu);
            assert!(g.is_monotone());
            for i in 0..=64 {
                let r = Dyadic::new(i, 6);
                assert_eq!(g.eval(&r), quantile(&mu, &r).unwrap());
            }
        }
    }

    #[test]
    fn pushforward_examples() {
        let mu = m(&[("1/4", "1/2"), ("3/4", "1/2")]);
        let report = quantile_pushforward(&mu);
        assert_eq!(report.result, mu);
        assert_eq!(report.deviation, None);

        let point = m(&[("3/8", "1")]);
        assert_eq!(quantile_pushforward(&point).result, point);

        let half = m(&[("1/2", "1/2")]);
        let report = quantile_pushforward(&half);
        assert_eq!(report.result, m(&[("1/2", "1/2"), ("1", "1/2")]));
        assert_eq!(report.deviation_note().unwrap(), "mass 1/2 assigned to ⊤");
        assert_eq!(report.result, top_completion(&half));
        assert_eq!(quantile_pushforward(&bottom_closure(&half)).result, bottom_closure(&half));
    }

    #[test]
    fn iso_examples() {
        let low = m(&[("1/4", "1")]);
        let high = m(&[("3/4", "1")]);
        let up = chain_order_iso_check(&low, &high, 4);
        assert!(up.valuation_holds() && up.quantile_holds());
        assert_eq!(up.status, IsoStatus::Consistent);

        let same = chain_order_iso_check(&low, &low, 4);
        assert_eq!(same.status, IsoStatus::Consistent);
        assert!(same.valuation_holds());

        let down = chain_order_iso_check(&high, &low, 4);
        assert!(!down.valuation_holds() && !down.quantile_holds());
        assert_eq!(down.quantile_witness, Some(Dyadic::one()));
        assert_eq!(down.witness_upper_set().unwrap().names(&down.chain), vec!["3/4", "1"]);
        assert_eq!(down.status, IsoStatus::Consistent);
    }

    #[test]
    fn zero_measure_is_outside_the_hypothesis() {
        let zero = ChainMeasure::zero();
        let bottom = m(&[("0", "1")]);
        let report = chain_order_iso_check(&zero, &bottom, 3);
        assert!(report.valuation_holds());
        assert!(!report.quantile_holds());
        assert_eq!(report.status, IsoStatus::OutsideHypothesis);
    }

    #[test]
    fn measure_validation() {
        assert!(matches!(
            ChainMeasure::new([(d("1/2"), d("3/4")), (d("1/4"), d("1/2"))]),
            Err(QuantileError::MassExceedsOne(_))
        ));
        assert!(matches!(
            ChainMeasure::new([(d("5/4"), d("1/4"))]),
            Err(QuantileError::OutOfRange(_))
        ));
        assert_eq!(m(&[("1/2", "1/4"), ("1/2", "1/4")]), m(&[("1/2", "1/2")]));
    }
}
