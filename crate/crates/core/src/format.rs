//! JSON documents for posets, valuations, chains, partial maps and results.
//!
//! Dyadic numbers are written as text (`"3/8"`). A document that needs a
//! poset either embeds it or names a file holding one.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::cantor::{CantorError, PartialTreeMap, Segment, Word};
use crate::dyadic::Dyadic;
use crate::poset::{FinitePoset, PosetError, UpperSet};
use crate::quantile::{ChainMeasure, StepFunction};
use crate::realization::RealizationResult;
use crate::transport::TransportPlan;
use crate::valuation::{SimpleValuation, ValuationError};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Poset(#[from] PosetError),
    #[error(transparent)]
    Valuation(#[from] ValuationError),
    #[error(transparent)]
    Cantor(#[from] CantorError),
    #[error("partial map entries disagree on the level ({0} and {1})")]
    MixedLevels(u32, u32),
    #[error("partial map has no entries and no level")]
    MissingLevel,
    #[error("malformed field '{field}': {reason}")]
    Field { field: String, reason: String },
}

/// Element names with weights, as in `{"a": "1/4", "b": "1/4"}`.
pub type MassMap = BTreeMap<String, Dyadic>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PosetDoc {
    pub elements: Vec<String>,
    #[serde(default)]
    pub covers: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bottom: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waybelow: Option<Vec<(String, String)>>,
}

impl PosetDoc {
    pub fn build(&self) -> Result<FinitePoset, PosetError> {
        FinitePoset::build(
            &self.elements,
            &self.covers,
            self.bottom.as_deref(),
            self.waybelow.as_deref(),
        )
    }

    /// Hasse covers of `poset`, with way-below pairs only when they differ from the order.
    pub fn from_poset(poset: &FinitePoset) -> Self {
        let pair = |(x, y): (usize, usize)| (poset.name(x).to_string(), poset.name(y).to_string());
        PosetDoc {
            elements: poset.names().to_vec(),
            covers: poset.hasse_covers().into_iter().map(pair).collect(),
            bottom: poset.declared_bottom().map(|b| poset.name(b).to_string()),
            waybelow: poset
                .waybelow_pairs()
                .map(|pairs| pairs.into_iter().map(pair).collect()),
        }
    }
}

/// A poset given inline or as a path to a poset document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PosetRef {
    Path(String),
    Inline(PosetDoc),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValuationDoc {
    pub poset: PosetRef,
    pub mass: MassMap,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainDoc {
    pub poset: PosetRef,
    pub chain: Vec<MassMap>,
}

/// A finite sequence `μ_1, μ_2, ...` with its intended limit.
///
/// `limit_chain`, when present, is an increasing chain whose realization
/// stands for the limit map; otherwise the limit is realized on its own.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceDoc {
    pub poset: PosetRef,
    pub sequence: Vec<MassMap>,
    pub limit: MassMap,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit_chain: Option<Vec<MassMap>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentDoc {
    /// Half-open index range `[lo, hi)` inside `C_level`.
    pub interval: (u64, u64),
    pub level: u32,
    pub image: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialMapDoc {
    pub poset: PosetRef,
    /// Needed only when `map` is empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<u32>,
    pub map: Vec<SegmentDoc>,
}

/// A chain measure: a valuation document whose element names are dyadic
/// points of `[0, 1]`. The poset, if given, is ignored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainMeasureDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poset: Option<PosetRef>,
    pub mass: MassMap,
}

impl ChainMeasureDoc {
    pub fn to_measure(&self) -> Result<ChainMeasure, FormatError> {
        let masses = self
            .mass
            .iter()
            .map(|(name, w)| {
                name.parse::<Dyadic>()
                    .map(|p| (p, w.clone()))
                    .map_err(|e| FormatError::Field {
                        field: format!("mass.{name}"),
                        reason: e.to_string(),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        ChainMeasure::new(masses).map_err(|e| FormatError::Field {
            field: "mass".into(),
            reason: e.to_string(),
        })
    }
}

pub fn valuation_from_masses(poset: &Arc<FinitePoset>, mass: &MassMap) -> Result<SimpleValuation, ValuationError> {
    let pairs: Vec<(&str, Dyadic)> = mass.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
    SimpleValuation::from_names(poset.clone(), &pairs)
}

pub fn masses_of(mu: &SimpleValuation) -> MassMap {
    mu.named_weights().into_iter().collect()
}

pub fn partial_map_from_doc(poset: &Arc<FinitePoset>, doc: &PartialMapDoc) -> Result<PartialTreeMap, FormatError> {
    let mut level = doc.level;
    for s in &doc.map {
        match level {
            Some(l) if l != s.level => return Err(FormatError::MixedLevels(l, s.level)),
            _ => level = Some(s.level),
        }
    }
    let level = level.ok_or(FormatError::MissingLevel)?;
    let segments = doc
        .map
        .iter()
        .map(|s| {
            Ok(Segment {
                start: s.interval.0,
                end: s.interval.1,
                image: poset.element(&s.image)?,
            })
        })
        .collect::<Result<Vec<_>, PosetError>>()?;
    Ok(PartialTreeMap::new(poset.clone(), level, segments)?)
}

pub fn partial_map_segments(f: &PartialTreeMap) -> Vec<SegmentDoc> {
    f.segments()
        .iter()
        .map(|s| SegmentDoc {
            interval: (s.start, s.end),
            level: f.level(),
            image: f.poset().name(s.image).to_string(),
        })
        .collect()
}

pub fn partial_map_json(f: &PartialTreeMap) -> Value {
    json!({ "level": f.level(), "map": partial_map_segments(f) })
}

pub fn upper_set_json(poset: &FinitePoset, u: &UpperSet) -> Value {
    json!(u.names(poset))
}

pub fn word_json(w: &Word) -> Value {
    Value::String(w.to_string())
}

/// `{"t": {"x|y": ..}, "u": {"y": ..}, "w": ..}`.
pub fn plan_json(poset: &FinitePoset, plan: &TransportPlan) -> Value {
    let t: Map<String, Value> = plan
        .entries
        .iter()
        .map(|(&(x, y), v)| (format!("{}|{}", poset.name(x), poset.name(y)), json!(v)))
        .collect();
    let u: Map<String, Value> = plan
        .residuals
        .iter()
        .map(|(&y, v)| (poset.name(y).to_string(), json!(v)))
        .collect();
    json!({ "t": t, "u": u, "w": plan.leftover })
}

fn field_err(field: &str, reason: impl ToString) -> FormatError {
    FormatError::Field {
        field: field.to_string(),
        reason: reason.to_string(),
    }
}

fn dyadic_field(v: &Value, field: &str) -> Result<Dyadic, FormatError> {
    serde_json::from_value(v.clone()).map_err(|e| field_err(field, e))
}

pub fn plan_from_json(poset: &FinitePoset, v: &Value) -> Result<TransportPlan, FormatError> {
    let object = |key: &str| {
        v.get(key)
            .and_then(Value::as_object)
            .ok_or_else(|| field_err(key, "expected an object"))
    };
    let mut plan = TransportPlan::default();
    for (key, value) in object("t")? {
        let (x, y) = key
            .split_once('|')
            .ok_or_else(|| field_err("t", format!("key '{key}' is not 'x|y'")))?;
        plan.entries.insert(
            (poset.element(x)?, poset.element(y)?),
            dyadic_field(value, &format!("t.{key}"))?,
        );
    }
    for (key, value) in object("u")? {
        plan.residuals
            .insert(poset.element(key)?, dyadic_field(value, &format!("u.{key}"))?);
    }
    plan.leftover = dyadic_field(v.get("w").unwrap_or(&Value::Null), "w")?;
    Ok(plan)
}

pub fn realization_json(r: &RealizationResult) -> Value {
    let poset = r.poset();
    json!({
        "levels": r.levels,
        "maps": r.maps.iter().map(partial_map_json).collect::<Vec<_>>(),
        "plans": r.plans.iter().map(|p| plan_json(poset, p)).collect::<Vec<_>>(),
    })
}

pub fn step_function_json(f: &StepFunction) -> Value {
    json!({
        "side": f.side.as_str(),
        "breakpoints": f.breakpoints,
        "values": f.values,
    })
}

pub fn chain_measure_json(mu: &ChainMeasure) -> Value {
    let mass: Map<String, Value> = mu
        .weights()
        .iter()
        .map(|(p, w)| (p.to_string(), json!(w)))
        .collect();
    Value::Object(mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::transport::decide_order_maxflow;

    #[test]
    fn poset_doc_round_trip() {
        let text = r#"{"elements": ["a", "b", "⊥"], "covers": [["⊥", "a"], ["⊥", "b"]], "bottom": "⊥"}"#;
        let doc: PosetDoc = serde_json::from_str(text).unwrap();
        let p = doc.build().unwrap();
        assert_eq!(p, *fixtures::v_poset());
        assert_eq!(PosetDoc::from_poset(&p).build().unwrap(), p);
    }

    #[test]
    fn valuation_doc_rejects_non_dyadic() {
        let text = r#"{"poset": "v.json", "mass": {"a": "1/3"}}"#;
        let err = serde_json::from_str::<ValuationDoc>(text).unwrap_err();
        assert!(err.to_string().contains("1/3"), "{err}");
        assert!(err.line() == 1);
    }

    #[test]
    fn plan_json_round_trip() {
        let v = fixtures::v_poset();
        let mu = valuation_from_masses(&v, &[("⊥".to_string(), Dyadic::half_pow(1))].into()).unwrap();
        let nu = valuation_from_masses(
            &v,
            &[("a".to_string(), Dyadic::half_pow(2)), ("b".to_string(), Dyadic::half_pow(2))].into(),
        )
        .unwrap();
        let plan = decide_order_maxflow(&mu, &nu).unwrap().plan().unwrap().clone();
        let j = plan_json(&v, &plan);
        assert_eq!(j["t"]["⊥|a"], "1/4");
        assert_eq!(j["w"], "1/2");
        assert_eq!(plan_from_json(&v, &j).unwrap(), plan);
    }

    #[test]
    fn partial_map_doc_levels() {
        let v = fixtures::v_poset();
        let doc: PartialMapDoc = serde_json::from_str(
            r#"{"poset": "v.json", "map": [{"interval": [0, 1], "level": 2, "image": "a"},
                                           {"interval": [2, 4], "level": 2, "image": "⊥"}]}"#,
        )
        .unwrap();
        let f = partial_map_from_doc(&v, &doc).unwrap();
        assert_eq!(f.domain_size(), 3);
        assert_eq!(partial_map_segments(&f), doc.map);
        let mixed = PartialMapDoc {
            map: vec![
                SegmentDoc { interval: (0, 1), level: 1, image: "a".into() },
                SegmentDoc { interval: (0, 1), level: 2, image: "a".into() },
            ],
            ..doc
        };
        assert!(matches!(partial_map_from_doc(&v, &mixed), Err(FormatError::MixedLevels(1, 2))));
    }

    #[test]
    fn chain_measure_doc() {
        let doc: ChainMeasureDoc = serde_json::from_str(r#"{"mass": {"1/2": "1/2"}}"#).unwrap();
        let mu = doc.to_measure().unwrap();
        assert_eq!(mu.total_mass(), Dyadic::half_pow(1));
        let bad: ChainMeasureDoc = serde_json::from_str(r#"{"mass": {"x": "1/2"}}"#).unwrap();
        assert!(bad.to_measure().is_err());
    }
}
