//! Reading input documents from disk into self-contained [`Inputs`].

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use skorohod_core::format::{
    valuation_from_masses, ChainDoc, ChainMeasureDoc, MassMap, PartialMapDoc, PosetDoc, PosetRef, SegmentDoc,
    SequenceDoc, ValuationDoc,
};
use skorohod_core::poset::PosetError;
use skorohod_core::valuation::ValuationError;
use skorohod_core::FinitePoset;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("cannot read {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}:{column}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}: invariant '{invariant}' violated: {detail}", path.display())]
    Invariant {
        path: PathBuf,
        invariant: &'static str,
        detail: String,
    },
}

/// Everything a command needs, with posets embedded rather than referenced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Inputs {
    Pair {
        poset: PosetDoc,
        mu: MassMap,
        nu: MassMap,
    },
    Chain {
        poset: PosetDoc,
        chain: Vec<MassMap>,
    },
    PartialMap {
        poset: PosetDoc,
        level: u32,
        map: Vec<SegmentDoc>,
    },
    ChainMeasure {
        mu: MassMap,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        compare: Option<MassMap>,
    },
    Sequence {
        poset: PosetDoc,
        sequence: Vec<MassMap>,
        limit: MassMap,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        limit_chain: Option<Vec<MassMap>>,
    },
}

pub fn poset_invariant(err: &PosetError) -> &'static str {
    match err {
        PosetError::Empty => "non-empty carrier",
        PosetError::DuplicateIdentifier(_) => "unique identifiers",
        PosetError::UnknownIdentifier(_) => "known element",
        PosetError::CycleDetected(..) => "antisymmetry",
        PosetError::BottomNotLeast { .. } => "declared bottom is least",
        PosetError::WayBelowNotInOrder(..) => "way-below contained in order",
        PosetError::SizeLimit { .. } => "enumeration size limit",
    }
}

pub fn valuation_invariant(err: &ValuationError) -> &'static str {
    match err {
        ValuationError::Poset(e) => poset_invariant(e),
        ValuationError::NegativeWeight { .. } => "non-negative weights",
        ValuationError::MassExceedsOne(_) => "total mass",
        ValuationError::DifferentPosets => "same poset",
        _ => "valuation",
    }
}

fn invariant(path: &Path, invariant: &'static str, detail: impl ToString) -> InputError {
    InputError::Invariant {
        path: path.to_path_buf(),
        invariant,
        detail: detail.to_string(),
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, InputError> {
    let text = fs::read_to_string(path).map_err(|source| InputError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| InputError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: strip_position(&e.to_string()).to_string(),
    })
}

/// serde_json appends " at line L column C", which the error already carries.
fn strip_position(message: &str) -> &str {
    match message.rfind(" at line ") {
        Some(i) => &message[..i],
        None => message,
    }
}

/// Resolves a poset reference relative to the directory of `doc_path`.
fn resolve_poset(doc_path: &Path, poset: &PosetRef) -> Result<PosetDoc, InputError> {
    let (doc, origin) = match poset {
        PosetRef::Inline(doc) => (doc.clone(), doc_path.to_path_buf()),
        PosetRef::Path(rel) => {
            let path = doc_path.parent().unwrap_or(Path::new(".")).join(rel);
            (read_json::<PosetDoc>(&path)?, path)
        }
    };
    doc.build().map_err(|e| invariant(&origin, poset_invariant(&e), e))?;
    Ok(doc)
}

fn check_masses(path: &Path, poset: &Arc<FinitePoset>, masses: &[&MassMap]) -> Result<(), InputError> {
    for m in masses {
        valuation_from_masses(poset, m).map_err(|e| invariant(path, valuation_invariant(&e), e))?;
    }
    Ok(())
}

fn built(doc: &PosetDoc) -> Arc<FinitePoset> {
    Arc::new(doc.build().expect("poset was validated on load"))
}

/// Two valuation documents on the same poset.
pub fn load_pair(mu_path: &Path, nu_path: &Path) -> Result<Inputs, InputError> {
    let mu: ValuationDoc = read_json(mu_path)?;
    let nu: ValuationDoc = read_json(nu_path)?;
    let poset = resolve_poset(mu_path, &mu.poset)?;
    let other = resolve_poset(nu_path, &nu.poset)?;
    let p = built(&poset);
    if *p != *built(&other) {
        return Err(invariant(nu_path, "same poset", "the two valuations live on different posets"));
    }
    check_masses(mu_path, &p, &[&mu.mass])?;
    check_masses(nu_path, &p, &[&nu.mass])?;
    Ok(Inputs::Pair {
        poset,
        mu: mu.mass,
        nu: nu.mass,
    })
}

pub fn load_chain(path: &Path) -> Result<Inputs, InputError> {
    let doc: ChainDoc = read_json(path)?;
    let poset = resolve_poset(path, &doc.poset)?;
    check_masses(path, &built(&poset), &doc.chain.iter().collect::<Vec<_>>())?;
    Ok(Inputs::Chain {
        poset,
        chain: doc.chain,
    })
}

pub fn load_partial_map(path: &Path) -> Result<Inputs, InputError> {
    let doc: PartialMapDoc = read_json(path)?;
    let poset = resolve_poset(path, &doc.poset)?;
    let p = built(&poset);
    let map = skorohod_core::format::partial_map_from_doc(&p, &doc)
        .map_err(|e| invariant(path, "partial map segments", e))?;
    Ok(Inputs::PartialMap {
        poset,
        level: map.level(),
        map: doc.map,
    })
}

pub fn load_chain_measure(path: &Path, compare: Option<&Path>) -> Result<Inputs, InputError> {
    let load = |p: &Path| -> Result<MassMap, InputError> {
        let doc: ChainMeasureDoc = read_json(p)?;
        doc.to_measure().map_err(|e| invariant(p, "dyadic points of [0, 1] with total mass at most 1", e))?;
        Ok(doc.mass)
    };
    Ok(Inputs::ChainMeasure {
        mu: load(path)?,
        compare: compare.map(load).transpose()?,
    })
}

pub fn load_sequence(path: &Path) -> Result<Inputs, InputError> {
    let doc: SequenceDoc = read_json(path)?;
    let poset = resolve_poset(path, &doc.poset)?;
    let p = built(&poset);
    let mut all: Vec<&MassMap> = doc.sequence.iter().collect();
    all.push(&doc.limit);
    all.extend(doc.limit_chain.iter().flatten());
    check_masses(path, &p, &all)?;
    if doc.sequence.is_empty() {
        return Err(invariant(path, "non-empty sequence", "the sequence has no terms"));
    }
    Ok(Inputs::Sequence {
        poset,
        sequence: doc.sequence,
        limit: doc.limit,
        limit_chain: doc.limit_chain,
    })
}
