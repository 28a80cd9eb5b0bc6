//! Pure command runners: self-contained [`Inputs`] in, [`Certificate`] out.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::{json, Value};
use thiserror::Error;

use skorohod_core::cantor::{partial_map_leq, LevelAntichain, PartialTreeMap, Word};
use skorohod_core::format::{
    chain_measure_json, partial_map_from_doc, plan_json, realization_json, step_function_json, upper_set_json,
    valuation_from_masses, MassMap, PartialMapDoc, PosetDoc, PosetRef, SegmentDoc,
};
use skorohod_core::quantile::{
    bottom_closure, cdf, cdf_function, chain_order_iso_check, quantile, quantile_function, quantile_pushforward,
    top_completion, ChainMeasure, IsoStatus,
};
use skorohod_core::realization::{
    empirical_convergence, evaluate_limit, grid_pushforward, realize_chain, scott_extend, RealizationError,
    RealizationResult,
};
use skorohod_core::transport::{
    decide_order_maxflow, decide_way_below, verify_refusal, verify_transport_plan_with, EdgeRelation, SplitDecision,
};
use skorohod_core::valuation::{order_oracle, portmanteau_check, OrderVerdict, PortmanteauCondition};
use skorohod_core::{Dyadic, FinitePoset, PosetError, SimpleValuation, ValuationError};

use crate::certificate::{Certificate, Check, CommandEcho, CommandName, Decision, Options};
use crate::input::Inputs;

/// Exception words listed in a certificate before truncation.
pub const MAX_LISTED_WORDS: usize = 4096;

/// Deepest level listed word by word by `extend`.
pub const MAX_LISTED_EXTENSION_DEPTH: u32 = 10;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error("command '{command:?}' does not accept {found} inputs")]
    WrongInputs { command: CommandName, found: &'static str },
    #[error(transparent)]
    Poset(#[from] PosetError),
    #[error(transparent)]
    Valuation(#[from] ValuationError),
    #[error(transparent)]
    Realization(#[from] RealizationError),
    #[error("{0}")]
    Invalid(String),
}

type Outcome = (Decision, Value, Vec<Check>);

pub fn run(echo: CommandEcho, inputs: Inputs) -> Result<Certificate, CommandError> {
    let (decision, witnesses, transcript) = dispatch(&echo, &inputs)?;
    Ok(Certificate::new(echo, inputs, decision, witnesses, transcript))
}

fn kind(inputs: &Inputs) -> &'static str {
    match inputs {
        Inputs::Pair { .. } => "pair",
        Inputs::Chain { .. } => "chain",
        Inputs::PartialMap { .. } => "partial_map",
        Inputs::ChainMeasure { .. } => "chain_measure",
        Inputs::Sequence { .. } => "sequence",
    }
}

fn dispatch(echo: &CommandEcho, inputs: &Inputs) -> Result<Outcome, CommandError> {
    let opts = &echo.options;
    match (echo.name, inputs) {
        (CommandName::Order | CommandName::Split, Inputs::Pair { poset, mu, nu }) => {
            run_order(echo.name == CommandName::Order, poset, mu, nu)
        }
        (CommandName::Waybelow, Inputs::Pair { poset, mu, nu }) => run_waybelow(opts, poset, mu, nu),
        (CommandName::Realize, Inputs::Chain { poset, chain }) => run_realize(poset, chain),
        (CommandName::Extend, Inputs::PartialMap { poset, level, map }) => run_extend(opts, poset, *level, map),
        (CommandName::Quantile, Inputs::ChainMeasure { mu, compare }) => run_quantile(opts, mu, compare.as_ref()),
        (CommandName::Portmanteau, Inputs::Sequence { poset, sequence, limit, .. }) => {
            run_portmanteau(opts, poset, sequence, limit)
        }
        (CommandName::Converge, Inputs::Sequence { .. }) => run_converge(opts, inputs),
        (CommandName::SkorohodDemo, Inputs::Sequence { .. }) => run_demo(opts, inputs),
        (command, other) => Err(CommandError::WrongInputs {
            command,
            found: kind(other),
        }),
    }
}

fn build(doc: &PosetDoc) -> Result<Arc<FinitePoset>, CommandError> {
    Ok(Arc::new(doc.build()?))
}

fn valuation(p: &Arc<FinitePoset>, m: &MassMap) -> Result<SimpleValuation, CommandError> {
    Ok(valuation_from_masses(p, m)?)
}

fn names(p: &FinitePoset, xs: &[usize]) -> Vec<String> {
    xs.iter().map(|&x| p.name(x).to_string()).collect()
}

fn decision_from_checks(checks: &[Check]) -> Decision {
    if checks.iter().all(|c| c.passed) {
        Decision::Pass
    } else {
        Decision::Fails
    }
}

/// Plan or refusal witness for a flow decision, plus the checks that re-verify it.
fn split_witness(
    p: &FinitePoset,
    mu: &SimpleValuation,
    nu: &SimpleValuation,
    flow: &SplitDecision,
    checks: &mut Vec<Check>,
) -> Value {
    checks.push(
        Check::new("max-flow value equals min-cut capacity", flow.flow.value == flow.flow.cut_capacity).with(json!({
            "flow": flow.flow.value,
            "cut_capacity": flow.flow.cut_capacity,
            "required": flow.required,
        })),
    );
    if let Some(plan) = flow.plan() {
        let verdict = verify_transport_plan_with(mu, nu, plan, flow.relation);
        checks.push(
            Check::new("plan satisfies row, column and relation clauses", verdict.is_ok())
                .with(verdict.err().map(|e| json!(e.to_string())).unwrap_or(Value::Null)),
        );
        return json!({ "plan": plan_json(p, plan) });
    }
    let refusal = flow.refusal().expect("no plan means a refusal");
    checks.push(Check::new(
        "blocked sources carry more mass than everything they relate to",
        verify_refusal(mu, nu, &refusal.blocked_sources, flow.relation),
    ));
    let mut out = json!({
        "blocked_sources": names(p, &refusal.blocked_sources),
        "reachable_targets": names(p, &refusal.reachable_targets),
        "upper_set": Value::Null,
    });
    if let Some(u) = &refusal.witness {
        let (lhs, rhs) = (mu.mass(u).expect("same poset"), nu.mass(u).expect("same poset"));
        checks.push(
            Check::new("witness upper set separates", lhs > rhs).with(json!({ "mu_mass": lhs, "nu_mass": rhs })),
        );
        out["upper_set"] = upper_set_json(p, u);
        out["mu_mass"] = json!(lhs);
        out["nu_mass"] = json!(rhs);
    }
    json!({ "refusal": out })
}

fn run_order(with_oracle: bool, poset: &PosetDoc, mu: &MassMap, nu: &MassMap) -> Result<Outcome, CommandError> {
    let p = build(poset)?;
    let (mu, nu) = (valuation(&p, mu)?, valuation(&p, nu)?);
    let flow = decide_order_maxflow(&mu, &nu).map_err(|e| CommandError::Invalid(e.to_string()))?;
    let mut checks = Vec::new();
    let witnesses = split_witness(&p, &mu, &nu, &flow, &mut checks);
    if with_oracle {
        match order_oracle(&mu, &nu) {
            Ok(verdict) => {
                let detail = match &verdict {
                    OrderVerdict::Holds => Value::Null,
                    OrderVerdict::Fails { witness, lhs, rhs } => {
                        json!({ "upper_set": upper_set_json(&p, witness), "mu_mass": lhs, "nu_mass": rhs })
                    }
                };
                checks.push(Check::new("upper-set enumeration agrees", verdict.holds() == flow.holds()).with(detail));
            }
            Err(ValuationError::Poset(PosetError::SizeLimit { size, limit })) => checks.push(
                Check::new("upper-set enumeration agrees", true)
                    .with(json!({ "skipped": format!("{size} elements exceed the enumeration bound {limit}") })),
            ),
            Err(e) => return Err(e.into()),
        }
    }
    let decision = match (flow.holds(), with_oracle) {
        (true, _) => Decision::Holds,
        (false, true) => Decision::Fails,
        (false, false) => Decision::Refused,
    };
    Ok((decision, witnesses, checks))
}

fn run_waybelow(opts: &Options, poset: &PosetDoc, mu: &MassMap, nu: &MassMap) -> Result<Outcome, CommandError> {
    let p = build(poset)?;
    let (mu, nu) = (valuation(&p, mu)?, valuation(&p, nu)?);
    let rule = opts.mass_rule.unwrap_or_default();
    let d = decide_way_below(&mu, &nu, rule).map_err(|e| CommandError::Invalid(e.to_string()))?;
    let mut checks = Vec::new();
    let mut witnesses = split_witness(&p, &mu, &nu, &d.flow, &mut checks);
    checks.push(Check::new(format!("mass clause ({rule})"), d.mass_condition()).with(json!({
        "mu_total": mu.total_mass(),
        "nu_total": nu.total_mass(),
    })));
    witnesses["mass_rule"] = json!(rule);
    witnesses["strict_total"] = json!(d.strict_total);
    witnesses["strict_per_element"] = json!(d.strict_per_element);
    let flags: Vec<String> = d
        .rules_disagree()
        .then(|| "strict_total and strict_per_element disagree on this pair".to_string())
        .into_iter()
        .collect();
    witnesses["flags"] = json!(flags);
    Ok((Decision::from_bool(d.holds()), witnesses, checks))
}

fn realization_checks(chain: &[SimpleValuation], r: &RealizationResult, checks: &mut Vec<Check>) {
    for (i, (f, mu)) in r.maps.iter().zip(chain).enumerate() {
        checks.push(Check::new(format!("map {} pushes forward to member {}", i + 1, i + 1), f.pushforward() == *mu));
    }
    for i in 1..r.maps.len() {
        checks.push(Check::new(
            format!("map {} <= map {}", i, i + 1),
            partial_map_leq(&r.maps[i - 1], &r.maps[i]).unwrap_or(false),
        ));
        checks.push(Check::new(
            format!("plan {} verifies", i),
            verify_transport_plan_with(&chain[i - 1], &chain[i], &r.plans[i - 1], EdgeRelation::Order).is_ok(),
        ));
    }
}

fn run_realize(poset: &PosetDoc, chain: &[MassMap]) -> Result<Outcome, CommandError> {
    let p = build(poset)?;
    let chain: Vec<SimpleValuation> = chain.iter().map(|m| valuation(&p, m)).collect::<Result<_, _>>()?;
    match realize_chain(&chain) {
        Ok(r) => {
            let mut checks = Vec::new();
            realization_checks(&chain, &r, &mut checks);
            Ok((decision_from_checks(&checks), json!({ "realization": realization_json(&r) }), checks))
        }
        Err(RealizationError::NotAChain { index, witness }) => {
            let (lower, upper) = (&chain[index], &chain[index + 1]);
            let mut checks = Vec::new();
            let mut detail = json!({ "member": index + 1, "next": index + 2, "upper_set": Value::Null });
            if let Some(u) = &witness {
                let (lhs, rhs) = (lower.mass(u)?, upper.mass(u)?);
                checks.push(Check::new("upper set separates consecutive members", lhs > rhs));
                detail["upper_set"] = upper_set_json(&p, u);
                detail["lower_mass"] = json!(lhs);
                detail["upper_mass"] = json!(rhs);
            }
            Ok((Decision::Refused, json!({ "not_a_chain": detail }), checks))
        }
        Err(e) => Err(e.into()),
    }
}

fn word_key(w: &Word) -> String {
    if w.level() == 0 {
        "ε".to_string()
    } else {
        w.to_string()
    }
}

fn run_extend(opts: &Options, poset: &PosetDoc, level: u32, map: &[SegmentDoc]) -> Result<Outcome, CommandError> {
    let p = build(poset)?;
    let doc = PartialMapDoc {
        poset: PosetRef::Inline(poset.clone()),
        level: Some(level),
        map: map.to_vec(),
    };
    let f = partial_map_from_doc(&p, &doc).map_err(|e| CommandError::Invalid(e.to_string()))?;
    let e = scott_extend(&f)?;

    let mut restricts = true;
    let mut monotone = true;
    for n in 0..=level {
        for w in LevelAntichain::new(n).expect("level is bounded").members() {
            if let Some(x) = f.get(&w) {
                restricts &= e.eval(&w) == x;
            }
            if n < level {
                for bit in 0..2 {
                    let child = Word::new(2 * w.index() + bit, n + 1).expect("child is in range");
                    monotone &= p.leq(e.eval(&w), e.eval(&child));
                }
            }
        }
    }
    let checks = vec![
        Check::new("extension agrees with the map on its domain", restricts),
        Check::new("extension is monotone along prefixes", monotone),
    ];
    let depth = opts.depth.unwrap_or(level).min(MAX_LISTED_EXTENSION_DEPTH);
    let values: BTreeMap<String, String> = (0..=depth)
        .flat_map(|n| LevelAntichain::new(n).expect("depth is bounded").members())
        .map(|w| (word_key(&w), p.name(e.eval(&w)).to_string()))
        .collect();
    let witnesses = json!({ "level": level, "listed_depth": depth, "values": values });
    Ok((decision_from_checks(&checks), witnesses, checks))
}

fn chain_measure(m: &MassMap) -> Result<ChainMeasure, CommandError> {
    ChainMeasure::new(
        m.iter()
            .map(|(k, w)| {
                k.parse::<Dyadic>()
                    .map(|x| (x, w.clone()))
                    .map_err(|e| CommandError::Invalid(format!("point '{k}': {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?,
    )
    .map_err(|e| CommandError::Invalid(e.to_string()))
}

fn run_quantile(opts: &Options, mu: &MassMap, compare: Option<&MassMap>) -> Result<Outcome, CommandError> {
    let mu = chain_measure(mu)?;
    let d = opts.depth.unwrap_or(8);
    if d > 16 {
        return Err(CommandError::Invalid(format!("grid depth {d} exceeds 16")));
    }
    let grid: Vec<Dyadic> = (0..=(1u64 << d)).map(|i| Dyadic::new(i, d)).collect();
    let total = mu.total_mass();
    let q = |r: &Dyadic| quantile(&mu, r).expect("grid lies in [0, 1]");
    let f = |x: &Dyadic| cdf(&mu, x).expect("grid lies in [0, 1]");

    let mut checks = vec![
        Check::new(
            format!("F(G(r)) >= r for grid r <= ||μ|| at depth {d}"),
            grid.iter().filter(|r| **r <= total).all(|r| f(&q(r)) >= *r),
        ),
        Check::new(format!("G(F(x)) <= x for grid x at depth {d}"), grid.iter().all(|x| q(&f(x)) <= *x)),
    ];
    let carrier: Vec<Dyadic> = [Dyadic::zero(), Dyadic::one()]
        .into_iter()
        .chain(mu.weights().keys().cloned())
        .collect();
    checks.push(Check::new(
        "F preserves binary infima on the carrier",
        carrier
            .iter()
            .all(|a| carrier.iter().all(|b| f(&a.clone().min(b.clone())) == f(a).min(f(b)))),
    ));

    let mut witnesses = json!({
        "cdf": step_function_json(&cdf_function(&mu)),
        "quantile": step_function_json(&quantile_function(&mu)),
    });
    let mut flags: Vec<String> = Vec::new();
    if opts.check_roundtrip {
        let report = quantile_pushforward(&mu);
        checks.push(Check::new("G_μ λ = μ + (1 - ||μ||)·δ_1", report.result == top_completion(&mu)));
        let closed = bottom_closure(&mu);
        checks.push(Check::new(
            "round trip after bottom closure is exact",
            quantile_pushforward(&closed).result == closed,
        ));
        witnesses["pushforward"] = chain_measure_json(&report.result);
        flags.extend(report.deviation_note());
    }
    if let Some(nu) = compare {
        let nu = chain_measure(nu)?;
        let iso = chain_order_iso_check(&mu, &nu, d);
        checks.push(
            Check::new("valuation order and quantile order agree", iso.status != IsoStatus::Inconsistent)
                .with(json!(iso.status.as_str())),
        );
        if iso.status == IsoStatus::OutsideHypothesis {
            flags.push(format!("{}: total masses differ", iso.status.as_str()));
        }
        witnesses["order_iso"] = json!({
            "status": iso.status.as_str(),
            "resolution": iso.resolution,
            "valuation_holds": iso.valuation_holds(),
            "quantile_holds": iso.quantile_holds(),
            "quantile_witness": iso.quantile_witness,
            "upper_set": iso.witness_upper_set().map(|u| upper_set_json(&iso.chain, u)),
        });
    }
    witnesses["flags"] = json!(flags);
    let decision = match decision_from_checks(&checks) {
        Decision::Pass if !flags.is_empty() => Decision::PassWithDeviation,
        other => other,
    };
    Ok((decision, witnesses, checks))
}

fn run_portmanteau(
    opts: &Options,
    poset: &PosetDoc,
    sequence: &[MassMap],
    limit: &MassMap,
) -> Result<Outcome, CommandError> {
    let p = build(poset)?;
    let seq: Vec<SimpleValuation> = sequence.iter().map(|m| valuation(&p, m)).collect::<Result<_, _>>()?;
    let limit = valuation(&p, limit)?;
    let tolerance = opts.tolerance.clone().unwrap_or_default();
    let cert = portmanteau_check(&seq, &limit, opts.horizon.unwrap_or(1), &tolerance)?;
    let count = |c: PortmanteauCondition| cert.violations.iter().filter(|v| v.condition == c).count();
    let checks = vec![
        Check::new("liminf inequality on upper sets", count(PortmanteauCondition::LiminfOpen) == 0),
        Check::new(
            "limsup inequality on finitely generated upper sets",
            count(PortmanteauCondition::LimsupFinitelyGenerated) == 0,
        ),
    ];
    let violations: Vec<Value> = cert
        .violations
        .iter()
        .map(|v| {
            json!({
                "condition": v.condition,
                "upper_set": upper_set_json(&p, &v.witness),
                "observed": v.observed,
                "bound": v.bound,
            })
        })
        .collect();
    let witnesses = json!({
        "horizon": cert.horizon,
        "tolerance": cert.tolerance,
        "violations": violations,
    });
    Ok((decision_from_checks(&checks), witnesses, checks))
}

/// Realizations of every sequence term (each as a one-member chain) and of the limit.
struct Realized {
    poset: Arc<FinitePoset>,
    terms: Vec<SimpleValuation>,
    term_maps: Vec<RealizationResult>,
    limit: SimpleValuation,
    limit_chain: Vec<SimpleValuation>,
    limit_map: RealizationResult,
}

fn realize_sequence(inputs: &Inputs) -> Result<Realized, CommandError> {
    let Inputs::Sequence {
        poset,
        sequence,
        limit,
        limit_chain,
    } = inputs
    else {
        unreachable!("dispatch only passes sequences");
    };
    let p = build(poset)?;
    let terms: Vec<SimpleValuation> = sequence.iter().map(|m| valuation(&p, m)).collect::<Result<_, _>>()?;
    let limit = valuation(&p, limit)?;
    let limit_chain: Vec<SimpleValuation> = match limit_chain {
        Some(c) => c.iter().map(|m| valuation(&p, m)).collect::<Result<_, _>>()?,
        None => vec![limit.clone()],
    };
    let term_maps = terms
        .iter()
        .map(|mu| realize_chain(std::slice::from_ref(mu)))
        .collect::<Result<Vec<_>, _>>()?;
    let limit_map = realize_chain(&limit_chain)?;
    Ok(Realized {
        poset: p,
        terms,
        term_maps,
        limit,
        limit_chain,
        limit_map,
    })
}

fn sequence_checks(r: &Realized, checks: &mut Vec<Check>) -> Result<(), CommandError> {
    checks.push(Check::new(
        "every term's map pushes forward to the term",
        r.term_maps.iter().zip(&r.terms).all(|(m, mu)| m.maps[0].pushforward() == *mu),
    ));
    let last = r.limit_chain.last().expect("limit chain is non-empty");
    checks.push(Check::new(
        "limit map pushes forward to the last member of the limit chain",
        r.limit_map.maps.last().expect("non-empty").pushforward() == *last,
    ));
    checks.push(Check::new(
        "last member of the limit chain is below the limit",
        order_oracle(last, &r.limit)?.holds(),
    ));
    Ok(())
}

fn required_depth(r: &Realized) -> u32 {
    r.term_maps
        .iter()
        .chain(std::iter::once(&r.limit_map))
        .map(RealizationResult::top_level)
        .max()
        .unwrap_or(0)
}

fn run_converge(opts: &Options, inputs: &Inputs) -> Result<Outcome, CommandError> {
    let r = realize_sequence(inputs)?;
    let depth = opts.depth.unwrap_or_else(|| required_depth(&r));
    let tail = opts.horizon.unwrap_or(1);
    let cert = empirical_convergence(&r.term_maps, &r.limit_map, depth, tail)?;
    let mut checks = Vec::new();
    sequence_checks(&r, &mut checks)?;
    if let Some(tol) = &opts.tolerance {
        checks.push(Check::new("exception mass within tolerance", cert.exception_mass <= *tol));
    }
    let listed: Vec<String> = cert
        .exception_words
        .iter()
        .take(MAX_LISTED_WORDS)
        .map(Word::to_string)
        .collect();
    let witnesses = json!({
        "depth": cert.depth,
        "tail": cert.tail,
        "domain_size": cert.domain_size,
        "exception_count": cert.exception_words.len(),
        "exception_words": listed,
        "exception_words_truncated": cert.exception_words.len() > MAX_LISTED_WORDS,
        "exception_mass": cert.exception_mass,
    });
    Ok((decision_from_checks(&checks), witnesses, checks))
}

fn run_demo(opts: &Options, inputs: &Inputs) -> Result<Outcome, CommandError> {
    let r = realize_sequence(inputs)?;
    let depth = opts.depth.unwrap_or(10);
    let mut checks = Vec::new();
    sequence_checks(&r, &mut checks)?;

    let mut tails = Vec::new();
    for tail in 1..=r.term_maps.len() {
        let cert = empirical_convergence(&r.term_maps, &r.limit_map, depth, tail)?;
        let bound = Dyadic::half_pow(tail as u32);
        checks.push(Check::new(
            format!("exception mass at tail {tail} is at most 2^-{tail}"),
            cert.exception_mass <= bound,
        ));
        tails.push(json!({ "tail": tail, "exception_mass": cert.exception_mass, "exception_count": cert.exception_words.len() }));
    }

    let ones = Word::new((1u64 << depth) - 1, depth).map_err(|e| CommandError::Invalid(e.to_string()))?;
    let at_ones = evaluate_limit(&r.limit_map, &ones)?;
    let mut elsewhere: Vec<String> = LevelAntichain::new(depth)
        .map_err(|e| CommandError::Invalid(e.to_string()))?
        .members()
        .filter(|w| *w != ones)
        .map(|w| evaluate_limit(&r.limit_map, &w).map(|v| v.map(|x| r.poset.name(x).to_string())))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .map(|v| v.unwrap_or_else(|| "undefined".to_string()))
        .collect();
    elsewhere.sort();
    elsewhere.dedup();

    let law = grid_pushforward(&r.limit_map, depth)?;
    let last = r.limit_chain.last().expect("limit chain is non-empty");
    checks.push(Check::new("X λ equals the last member of the limit chain", law == *last));
    let mut terms_ok = true;
    for (m, mu) in r.term_maps.iter().zip(&r.terms) {
        terms_ok &= grid_pushforward(m, depth)? == *mu;
    }
    checks.push(Check::new("X_n λ equals μ_n for every term", terms_ok));

    let witnesses = json!({
        "depth": depth,
        "tails": tails,
        "limit_at_all_ones": at_ones.map(|x| r.poset.name(x).to_string()),
        "limit_elsewhere": elsewhere,
        "limit_law": law.named_weights().into_iter().collect::<BTreeMap<_, _>>(),
    });
    Ok((decision_from_checks(&checks), witnesses, checks))
}

/// Re-checks an embedded plan witness against the inputs without running the solver.
pub fn recheck_plan(poset: &PosetDoc, mu: &MassMap, nu: &MassMap, plan: &Value, relation: EdgeRelation) -> Result<bool, CommandError> {
    let p = build(poset)?;
    let (mu, nu) = (valuation(&p, mu)?, valuation(&p, nu)?);
    let plan = skorohod_core::format::plan_from_json(&p, plan).map_err(|e| CommandError::Invalid(e.to_string()))?;
    Ok(verify_transport_plan_with(&mu, &nu, &plan, relation).is_ok())
}

/// Re-checks an embedded separating upper set against the inputs.
pub fn recheck_upper_set(poset: &PosetDoc, mu: &MassMap, nu: &MassMap, names: &Value) -> Result<bool, CommandError> {
    let p = build(poset)?;
    let (mu, nu) = (valuation(&p, mu)?, valuation(&p, nu)?);
    let members = names
        .as_array()
        .ok_or_else(|| CommandError::Invalid("upper set is not a list".into()))?
        .iter()
        .map(|v| {
            v.as_str()
                .ok_or_else(|| CommandError::Invalid("upper set member is not a name".into()))
                .and_then(|s| Ok(p.element(s)?))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let Some(u) = p.upper_set(members) else {
        return Ok(false);
    };
    Ok(mu.mass(&u)? > nu.mass(&u)?)
}

/// Re-checks embedded realization maps: each pushes forward to its chain member.
pub fn recheck_realization(poset: &PosetDoc, chain: &[MassMap], realization: &Value) -> Result<bool, CommandError> {
    let p = build(poset)?;
    let maps = realization["maps"]
        .as_array()
        .ok_or_else(|| CommandError::Invalid("realization has no maps".into()))?;
    if maps.len() != chain.len() {
        return Ok(false);
    }
    let mut prev: Option<PartialTreeMap> = None;
    for (m, mass) in maps.iter().zip(chain) {
        let doc = PartialMapDoc {
            poset: PosetRef::Inline(poset.clone()),
            level: m["level"].as_u64().map(|l| l as u32),
            map: serde_json::from_value(m["map"].clone()).map_err(|e| CommandError::Invalid(e.to_string()))?,
        };
        let f = partial_map_from_doc(&p, &doc).map_err(|e| CommandError::Invalid(e.to_string()))?;
        if f.pushforward() != valuation(&p, mass)? {
            return Ok(false);
        }
        if let Some(g) = &prev {
            if !partial_map_leq(g, &f).unwrap_or(false) {
                return Ok(false);
            }
        }
        prev = Some(f);
    }
    Ok(true)
}
