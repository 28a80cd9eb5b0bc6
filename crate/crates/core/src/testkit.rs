//! Random generators for property tests and the acceptance suite.
//!
//! Valuations are drawn as multisets of units of mass `2^-e`, so every
//! weight has denominator at most `2^e`.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::cantor::{PartialTreeMap, Segment};
use crate::dyadic::Dyadic;
use crate::poset::FinitePoset;
use crate::quantile::ChainMeasure;
use crate::valuation::SimpleValuation;

/// Units of mass `2^-exp`, one entry per unit, naming the element that carries it.
#[derive(Debug, Clone)]
pub struct Units {
    pub exp: u32,
    pub owners: Vec<usize>,
}

impl Units {
    pub fn to_valuation(&self, poset: &Arc<FinitePoset>) -> SimpleValuation {
        SimpleValuation::new(
            poset.clone(),
            self.owners.iter().map(|&x| (x, Dyadic::half_pow(self.exp))),
        )
        .expect("at most 2^exp units")
    }

    /// Same mass, split into units of the finer size `2^-exp`.
    pub fn refine(&self, exp: u32) -> Units {
        assert!(exp >= self.exp);
        let copies = 1usize << (exp - self.exp);
        Units {
            exp,
            owners: self
                .owners
                .iter()
                .flat_map(|&x| std::iter::repeat_n(x, copies))
                .collect(),
        }
    }
}

pub fn random_units(rng: &mut impl Rng, poset: &FinitePoset, exp: u32, probability: bool) -> Units {
    let cap = 1usize << exp;
    let count = if probability { cap } else { rng.gen_range(0..=cap) };
    Units {
        exp,
        owners: (0..count).map(|_| rng.gen_range(0..poset.len())).collect(),
    }
}

pub fn random_valuation(rng: &mut impl Rng, poset: &Arc<FinitePoset>, max_exp: u32) -> SimpleValuation {
    let exp = rng.gen_range(0..=max_exp);
    let probability = rng.gen_bool(0.3);
    random_units(rng, poset, exp, probability).to_valuation(poset)
}

fn random_above(rng: &mut impl Rng, poset: &FinitePoset, x: usize) -> usize {
    let above: Vec<usize> = (0..poset.len()).filter(|&y| poset.leq(x, y)).collect();
    *above.choose(rng).expect("x is above itself")
}

/// A larger valuation: some units move upward and fresh units may be added.
pub fn push_up(rng: &mut impl Rng, poset: &FinitePoset, units: &Units) -> Units {
    let mut owners: Vec<usize> = units
        .owners
        .iter()
        .map(|&x| {
            if rng.gen_bool(0.5) {
                random_above(rng, poset, x)
            } else {
                x
            }
        })
        .collect();
    let room = (1usize << units.exp) - owners.len();
    let extra = if room > 0 && rng.gen_bool(0.5) {
        rng.gen_range(0..=room)
    } else {
        0
    };
    owners.extend((0..extra).map(|_| rng.gen_range(0..poset.len())));
    Units {
        exp: units.exp,
        owners,
    }
}

/// `(μ, ν)` with `μ <= ν` by construction.
pub fn random_comparable_pair(
    rng: &mut impl Rng,
    poset: &Arc<FinitePoset>,
    max_exp: u32,
) -> (SimpleValuation, SimpleValuation) {
    let exp = rng.gen_range(0..=max_exp);
    let low = random_units(rng, poset, exp, false);
    let high = push_up(rng, poset, &low);
    (low.to_valuation(poset), high.to_valuation(poset))
}

/// An increasing chain of `len` valuations whose denominators grow by at most one bit per step.
pub fn random_increasing_chain(
    rng: &mut impl Rng,
    poset: &Arc<FinitePoset>,
    len: usize,
    start_exp: u32,
) -> Vec<SimpleValuation> {
    let mut units = random_units(rng, poset, start_exp, false);
    let mut chain = vec![units.to_valuation(poset)];
    while chain.len() < len {
        let exp = units.exp + u32::from(rng.gen_bool(0.5));
        units = push_up(rng, poset, &units.refine(exp));
        chain.push(units.to_valuation(poset));
    }
    chain
}

/// A partial map on `C_level` with random runs of random images.
pub fn random_partial_map(rng: &mut impl Rng, poset: &Arc<FinitePoset>, level: u32) -> PartialTreeMap {
    let size = 1u64 << level;
    let mut segments = Vec::new();
    let mut cursor = 0u64;
    while cursor < size {
        let len = rng.gen_range(1..=(size - cursor).min(4));
        if rng.gen_bool(0.7) {
            segments.push(Segment {
                start: cursor,
                end: cursor + len,
                image: rng.gen_range(0..poset.len()),
            });
        }
        cursor += len;
    }
    PartialTreeMap::new(poset.clone(), level, segments).expect("segments are disjoint and in range")
}

/// `g` at `level(f) + extra` with `f <= g`, defined on every extension of
/// `dom f` and possibly on further words.
pub fn random_saturated_extension(rng: &mut impl Rng, f: &PartialTreeMap, extra: u32) -> PartialTreeMap {
    let poset = f.poset();
    let level = f.level() + extra;
    let mut segments = Vec::new();
    for i in 0..(1u64 << level) {
        let image = match f.at_index(i >> extra) {
            Some(x) => Some(random_above(rng, poset, x)),
            None if rng.gen_bool(0.3) => Some(rng.gen_range(0..poset.len())),
            None => None,
        };
        if let Some(image) = image {
            segments.push(Segment {
                start: i,
                end: i + 1,
                image,
            });
        }
    }
    PartialTreeMap::new(poset.clone(), level, segments).expect("single-word segments are disjoint")
}

/// A random measure on the dyadic chain with points and masses of denominator at most `2^max_exp`.
pub fn random_chain_measure(rng: &mut impl Rng, max_exp: u32, probability: bool) -> ChainMeasure {
    let exp = rng.gen_range(0..=max_exp);
    let cap = 1u64 << exp;
    let count = if probability { cap } else { rng.gen_range(0..cap) };
    ChainMeasure::new((0..count).map(|_| {
        (
            Dyadic::new(rng.gen_range(0..=(1u64 << max_exp)), max_exp),
            Dyadic::half_pow(exp),
        )
    }))
    .expect("at most 2^exp units in [0, 1]")
}
