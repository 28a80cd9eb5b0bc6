//! Deciding `μ <= ν` (and `μ << ν`) by exact max-flow on the splitting network.
//!
//! The network has a source feeding each `x ∈ supp μ` with capacity `r_x`,
//! unit-capacity edges `x -> y` for order-related pairs, and edges from each
//! `y ∈ supp ν` into the sink with capacity `s_y`. A flow saturating the
//! source is a transport plan; otherwise the residual-reachable sources form
//! a Hall-type obstruction whose upward closure separates the valuations.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dyadic::Dyadic;
use crate::poset::{FinitePoset, UpperSet};
use crate::valuation::SimpleValuation;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("valuations live on different posets")]
    DifferentPosets,
}

/// Which relation licenses an inner edge `x -> y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeRelation {
    Order,
    WayBelow,
}

impl EdgeRelation {
    pub fn relates(self, poset: &FinitePoset, x: usize, y: usize) -> bool {
        match self {
            EdgeRelation::Order => poset.leq(x, y),
            EdgeRelation::WayBelow => poset.way_below(x, y),
        }
    }
}

/// The strict mass clause used by [`decide_way_below`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassRule {
    /// `||μ|| < ||ν||`.
    #[default]
    StrictTotal,
    /// `||μ|| < s_y` for every `y ∈ supp ν`.
    StrictPerElement,
}

impl fmt::Display for MassRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MassRule::StrictTotal => "strict_total",
            MassRule::StrictPerElement => "strict_per_element",
        })
    }
}

impl FromStr for MassRule {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict_total" => Ok(MassRule::StrictTotal),
            "strict_per_element" => Ok(MassRule::StrictPerElement),
            other => Err(format!(
                "unknown mass rule '{other}' (expected strict_total or strict_per_element)"
            )),
        }
    }
}

#[derive(Debug, Clone)]
struct Edge {
    to: usize,
    cap: Dyadic,
    flow: Dyadic,
    rev: usize,
}

impl Edge {
    fn residual(&self) -> Dyadic {
        &self.cap - &self.flow
    }
}

/// Source `0`, left nodes `1..=L`, right nodes `L+1..=L+R`, sink `L+R+1`.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    left: Vec<usize>,
    right: Vec<usize>,
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
    inner: BTreeMap<(usize, usize), usize>,
}

/// Max-flow value together with the capacity of the residual min cut.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowSummary {
    pub value: Dyadic,
    pub cut_capacity: Dyadic,
}

impl FlowNetwork {
    pub fn build(mu: &SimpleValuation, nu: &SimpleValuation, relation: EdgeRelation) -> Self {
        let poset = mu.poset();
        let left: Vec<usize> = mu.support().collect();
        let right: Vec<usize> = nu.support().collect();
        let n_nodes = left.len() + right.len() + 2;
        let mut net = FlowNetwork {
            left,
            right,
            edges: Vec::new(),
            adj: vec![Vec::new(); n_nodes],
            inner: BTreeMap::new(),
        };
        let sink = n_nodes - 1;
        for i in 0..net.left.len() {
            let x = net.left[i];
            net.add_edge(0, 1 + i, mu.weight(x));
        }
        for i in 0..net.left.len() {
            for j in 0..net.right.len() {
                let (x, y) = (net.left[i], net.right[j]);
                if relation.relates(poset, x, y) {
                    let e = net.add_edge(1 + i, 1 + net.left.len() + j, Dyadic::one());
                    net.inner.insert((x, y), e);
                }
            }
        }
        for j in 0..net.right.len() {
            let y = net.right[j];
            net.add_edge(1 + net.left.len() + j, sink, nu.weight(y));
        }
        net
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: Dyadic) -> usize {
        let id = self.edges.len();
        self.edges.push(Edge {
            to,
            cap,
            flow: Dyadic::zero(),
            rev: id + 1,
        });
        self.edges.push(Edge {
            to: from,
            cap: Dyadic::zero(),
            flow: Dyadic::zero(),
            rev: id,
        });
        self.adj[from].push(id);
        self.adj[to].push(id + 1);
        id
    }

    fn sink(&self) -> usize {
        self.adj.len() - 1
    }

    /// Breadth-first search over positive residual edges; returns parent edges.
    fn search(&self) -> Vec<Option<usize>> {
        let mut parent = vec![None; self.adj.len()];
        let mut seen = vec![false; self.adj.len()];
        seen[0] = true;
        let mut queue = VecDeque::from([0]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let edge = &self.edges[e];
                if !seen[edge.to] && edge.residual().is_positive() {
                    seen[edge.to] = true;
                    parent[edge.to] = Some(e);
                    queue.push_back(edge.to);
                }
            }
        }
        parent
    }

    fn reachable(&self) -> Vec<bool> {
        let parent = self.search();
        (0..self.adj.len()).map(|v| v == 0 || parent[v].is_some()).collect()
    }

    /// Edmonds–Karp: augment along shortest residual paths until none remain.
    pub fn run(&mut self) -> FlowSummary {
        let sink = self.sink();
        loop {
            let parent = self.search();
            if parent[sink].is_none() {
                break;
            }
            let mut path = Vec::new();
            let mut v = sink;
            while let Some(e) = parent[v] {
                path.push(e);
                v = self.edges[self.edges[e].rev].to;
            }
            let bottleneck = path
                .iter()
                .map(|&e| self.edges[e].residual())
                .min()
                .expect("augmenting path is non-empty");
            for &e in &path {
                let rev = self.edges[e].rev;
                self.edges[e].flow = &self.edges[e].flow + &bottleneck;
                self.edges[rev].flow = &self.edges[rev].flow - &bottleneck;
            }
        }
        let value = self.adj[0].iter().map(|&e| self.edges[e].flow.clone()).sum();
        let reach = self.reachable();
        let cut_capacity = self
            .edges
            .iter()
            .enumerate()
            .filter(|(id, e)| {
                let from = self.edges[e.rev].to;
                id % 2 == 0 && reach[from] && !reach[e.to]
            })
            .map(|(_, e)| e.cap.clone())
            .sum();
        FlowSummary {
            value,
            cut_capacity,
        }
    }

    /// Flow on the inner edge `x -> y`, zero when the edge is absent.
    pub fn inner_flow(&self, x: usize, y: usize) -> Dyadic {
        self.inner
            .get(&(x, y))
            .map(|&e| self.edges[e].flow.clone())
            .unwrap_or_default()
    }

    fn reachable_elements(&self) -> (Vec<usize>, Vec<usize>) {
        let reach = self.reachable();
        let l = self.left.len();
        let sources = (0..l).filter(|&i| reach[1 + i]).map(|i| self.left[i]).collect();
        let targets = (0..self.right.len())
            .filter(|&j| reach[1 + l + j])
            .map(|j| self.right[j])
            .collect();
        (sources, targets)
    }
}

/// Transport numbers `t_{x,y}`, residuals `u_y` and leftover `w`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TransportPlan {
    /// Positive entries only, keyed by `(x, y)`.
    pub entries: BTreeMap<(usize, usize), Dyadic>,
    /// `u_y = s_y - Σ_x t_{x,y}` for every `y ∈ supp ν`.
    pub residuals: BTreeMap<usize, Dyadic>,
    /// `w = 1 - ||ν||`.
    pub leftover: Dyadic,
}

impl TransportPlan {
    pub fn entry(&self, x: usize, y: usize) -> Dyadic {
        self.entries.get(&(x, y)).cloned().unwrap_or_default()
    }

    pub fn residual(&self, y: usize) -> Dyadic {
        self.residuals.get(&y).cloned().unwrap_or_default()
    }

    /// Largest denominator exponent over entries, residuals and leftover.
    pub fn max_exponent(&self) -> u32 {
        self.entries
            .values()
            .chain(self.residuals.values())
            .chain(std::iter::once(&self.leftover))
            .map(Dyadic::exponent)
            .max()
            .unwrap_or(0)
    }

    fn from_network(net: &FlowNetwork, nu: &SimpleValuation) -> Self {
        let mut entries = BTreeMap::new();
        for &(x, y) in net.inner.keys() {
            let t = net.inner_flow(x, y);
            if !t.is_zero() {
                entries.insert((x, y), t);
            }
        }
        let residuals = nu
            .support()
            .map(|y| {
                let incoming: Dyadic = entries
                    .iter()
                    .filter(|((_, yy), _)| *yy == y)
                    .map(|(_, t)| t.clone())
                    .sum();
                (y, nu.weight(y) - incoming)
            })
            .collect();
        TransportPlan {
            entries,
            residuals,
            leftover: Dyadic::one() - nu.total_mass(),
        }
    }
}

/// Why the flow could not carry all of `μ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Refusal {
    /// Sources still reachable in the residual graph: their combined supply
    /// exceeds the capacity of everything they relate to.
    pub blocked_sources: Vec<usize>,
    pub reachable_targets: Vec<usize>,
    /// Upward closure of `blocked_sources`, when it separates `μ` from `ν`.
    pub witness: Option<UpperSet>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SplitOutcome {
    Plan(TransportPlan),
    Refused(Refusal),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitDecision {
    pub relation: EdgeRelation,
    pub flow: FlowSummary,
    pub required: Dyadic,
    pub outcome: SplitOutcome,
}

impl SplitDecision {
    pub fn plan(&self) -> Option<&TransportPlan> {
        match &self.outcome {
            SplitOutcome::Plan(p) => Some(p),
            SplitOutcome::Refused(_) => None,
        }
    }

    pub fn refusal(&self) -> Option<&Refusal> {
        match &self.outcome {
            SplitOutcome::Plan(_) => None,
            SplitOutcome::Refused(r) => Some(r),
        }
    }

    pub fn holds(&self) -> bool {
        self.plan().is_some()
    }
}

fn split(
    mu: &SimpleValuation,
    nu: &SimpleValuation,
    relation: EdgeRelation,
) -> Result<SplitDecision, TransportError> {
    if !mu.same_poset(nu) {
        return Err(TransportError::DifferentPosets);
    }
    let mut net = FlowNetwork::build(mu, nu, relation);
    let flow = net.run();
    let required = mu.total_mass();
    let outcome = if flow.value == required {
        SplitOutcome::Plan(TransportPlan::from_network(&net, nu))
    } else {
        let (blocked_sources, reachable_targets) = net.reachable_elements();
        let up = mu.poset().up_closure(blocked_sources.iter().copied());
        let separates = mu.mass_unchecked(up.members()) > nu.mass_unchecked(up.members());
        SplitOutcome::Refused(Refusal {
            blocked_sources,
            reachable_targets,
            witness: separates.then_some(up),
        })
    };
    Ok(SplitDecision {
        relation,
        flow,
        required,
        outcome,
    })
}

/// Decides `μ <= ν`; returns a plan, or a refusal with a separating upper set.
pub fn decide_order_maxflow(
    mu: &SimpleValuation,
    nu: &SimpleValuation,
) -> Result<SplitDecision, TransportError> {
    split(mu, nu, EdgeRelation::Order)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WayBelowDecision {
    pub rule: MassRule,
    pub strict_total: bool,
    pub strict_per_element: bool,
    pub flow: SplitDecision,
}

impl WayBelowDecision {
    pub fn mass_condition(&self) -> bool {
        match self.rule {
            MassRule::StrictTotal => self.strict_total,
            MassRule::StrictPerElement => self.strict_per_element,
        }
    }

    pub fn holds(&self) -> bool {
        self.mass_condition() && self.flow.holds()
    }

    /// True when the two readings of the mass clause disagree on this pair.
    pub fn rules_disagree(&self) -> bool {
        self.strict_total != self.strict_per_element
    }
}

/// Decides `μ << ν`: a plan using only way-below edges plus the selected strict mass clause.
pub fn decide_way_below(
    mu: &SimpleValuation,
    nu: &SimpleValuation,
    rule: MassRule,
) -> Result<WayBelowDecision, TransportError> {
    let flow = split(mu, nu, EdgeRelation::WayBelow)?;
    let total = mu.total_mass();
    Ok(WayBelowDecision {
        rule,
        strict_total: total < nu.total_mass(),
        strict_per_element: nu.weights().values().all(|s| &total < s),
        flow,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanViolation {
    #[error("valuations live on different posets")]
    DifferentPosets,
    #[error("entry t({x},{y}) = {value} is not positive")]
    NonPositiveEntry { x: String, y: String, value: Dyadic },
    #[error("entry t({x},{y}) lies outside supp μ × supp ν")]
    OutsideSupport { x: String, y: String },
    #[error("order clause: t({x},{y}) > 0 but {x} is not related to {y}")]
    OrderClause { x: String, y: String },
    #[error("row sum at {x} is {sum}, expected r = {expected}")]
    RowSum {
        x: String,
        sum: Dyadic,
        expected: Dyadic,
    },
    #[error("column sum at {y} is {sum}, exceeding s = {bound}")]
    ColumnBound { y: String, sum: Dyadic, bound: Dyadic },
    #[error("residual at {y} is {stated}, expected {expected}")]
    Residual {
        y: String,
        stated: Dyadic,
        expected: Dyadic,
    },
    #[error("leftover is {stated}, expected {expected}")]
    Leftover { stated: Dyadic, expected: Dyadic },
}

/// Re-checks every plan invariant with exact arithmetic, independently of the solver.
pub fn verify_transport_plan(
    mu: &SimpleValuation,
    nu: &SimpleValuation,
    plan: &TransportPlan,
) -> Result<(), PlanViolation> {
    verify_transport_plan_with(mu, nu, plan, EdgeRelation::Order)
}

pub fn verify_transport_plan_with(
    mu: &SimpleValuation,
    nu: &SimpleValuation,
    plan: &TransportPlan,
    relation: EdgeRelation,
) -> Result<(), PlanViolation> {
    if !mu.same_poset(nu) {
        return Err(PlanViolation::DifferentPosets);
    }
    let poset = mu.poset();
    let name = |x: usize| {
        if x < poset.len() {
            poset.name(x).to_string()
        } else {
            format!("#{x}")
        }
    };
    for (&(x, y), t) in &plan.entries {
        if !t.is_positive() {
            return Err(PlanViolation::NonPositiveEntry {
                x: name(x),
                y: name(y),
                value: t.clone(),
            });
        }
        if mu.weight(x).is_zero() || nu.weight(y).is_zero() {
            return Err(PlanViolation::OutsideSupport { x: name(x), y: name(y) });
        }
        if !relation.relates(poset, x, y) {
            return Err(PlanViolation::OrderClause { x: name(x), y: name(y) });
        }
    }
    for x in mu.support() {
        let sum: Dyadic = plan
            .entries
            .iter()
            .filter(|((xx, _), _)| *xx == x)
            .map(|(_, t)| t)
            .sum();
        if sum != mu.weight(x) {
            return Err(PlanViolation::RowSum {
                x: name(x),
                sum,
                expected: mu.weight(x),
            });
        }
    }
    for y in nu.support() {
        let sum: Dyadic = plan
            .entries
            .iter()
            .filter(|((_, yy), _)| *yy == y)
            .map(|(_, t)| t)
            .sum();
        if sum > nu.weight(y) {
            return Err(PlanViolation::ColumnBound {
                y: name(y),
                sum,
                bound: nu.weight(y),
            });
        }
        let expected = nu.weight(y) - &sum;
        if plan.residual(y) != expected {
            return Err(PlanViolation::Residual {
                y: name(y),
                stated: plan.residual(y),
                expected,
            });
        }
    }
    if let Some((&y, u)) = plan.residuals.iter().find(|(y, _)| nu.weight(**y).is_zero()) {
        return Err(PlanViolation::Residual {
            y: name(y),
            stated: u.clone(),
            expected: Dyadic::zero(),
        });
    }
    let expected = Dyadic::one() - nu.total_mass();
    if plan.leftover != expected {
        return Err(PlanViolation::Leftover {
            stated: plan.leftover.clone(),
            expected,
        });
    }
    Ok(())
}

/// Checks a refusal without the solver: the blocked sources must carry more
/// mass than all targets they relate to can absorb.
pub fn verify_refusal(
    mu: &SimpleValuation,
    nu: &SimpleValuation,
    blocked_sources: &[usize],
    relation: EdgeRelation,
) -> bool {
    if !mu.same_poset(nu) || blocked_sources.is_empty() {
        return false;
    }
    let poset = mu.poset();
    let supply: Dyadic = blocked_sources.iter().map(|&x| mu.weight(x)).sum();
    let capacity: Dyadic = nu
        .support()
        .filter(|&y| blocked_sources.iter().any(|&x| relation.relates(poset, x, y)))
        .map(|y| nu.weight(y))
        .sum();
    supply > capacity
}
