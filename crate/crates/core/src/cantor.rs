//! The finite part of the Cantor tree `{0,1}*` and partial maps from its level
//! antichains into a finite poset.
//!
//! A word of length `n` is stored as its lexicographic index in `C_n`, which is
//! its value as an `n`-bit binary number. Intervals of `C_n` are half-open
//! index ranges.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::dyadic::Dyadic;
use crate::poset::FinitePoset;
use crate::valuation::SimpleValuation;

/// Deepest level a word may have.
pub const MAX_LEVEL: u32 = 62;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CantorError {
    #[error("cannot embed a level-{from} word at level {to}")]
    LevelTooSmall { from: u32, to: u32 },
    #[error("level {0} exceeds the supported maximum")]
    LevelTooLarge(u32),
    #[error("index {index} is outside C_{level}")]
    IndexOutOfRange { index: u64, level: u32 },
    #[error("'{0}' is not a bit string")]
    Malformed(String),
    #[error("left map has level {left}, right map has level {right}")]
    LevelMismatch { left: u32, right: u32 },
    #[error("maps target different posets")]
    DifferentPosets,
    #[error("interval [{start}, {end}) is empty or outside C_{level}")]
    BadInterval { start: u64, end: u64, level: u32 },
    #[error("intervals [{0}, {1}) and [{2}, {3}) overlap")]
    Overlap(u64, u64, u64, u64),
    #[error("image index {0} is not in the poset")]
    ForeignImage(usize),
}

/// A finite bit string, ordered lexicographically (a proper prefix sorts first).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Word {
    index: u64,
    level: u32,
}

impl Word {
    pub fn new(index: u64, level: u32) -> Result<Self, CantorError> {
        if level > MAX_LEVEL {
            return Err(CantorError::LevelTooLarge(level));
        }
        if index >= 1u64 << level {
            return Err(CantorError::IndexOutOfRange { index, level });
        }
        Ok(Word { index, level })
    }

    /// The empty word `ε`.
    pub fn root() -> Self {
        Word { index: 0, level: 0 }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Lexicographic position inside `C_level`.
    pub fn index(&self) -> u64 {
        self.index
    }

    /// Bit `i` (0-based from the root).
    pub fn bit(&self, i: u32) -> bool {
        assert!(i < self.level, "bit {i} out of range for a level-{} word", self.level);
        (self.index >> (self.level - 1 - i)) & 1 == 1
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        self.level <= other.level && other.index >> (other.level - self.level) == self.index
    }

    /// Longest prefix of length at most `n`.
    pub fn project(&self, n: u32) -> Word {
        if n >= self.level {
            return *self;
        }
        Word {
            index: self.index >> (self.level - n),
            level: n,
        }
    }

    /// Pads with zeros up to `target` bits.
    pub fn embed(&self, target: u32) -> Result<Word, CantorError> {
        if target < self.level {
            return Err(CantorError::LevelTooSmall {
                from: self.level,
                to: target,
            });
        }
        if target > MAX_LEVEL {
            return Err(CantorError::LevelTooLarge(target));
        }
        Ok(Word {
            index: self.index << (target - self.level),
            level: target,
        })
    }

    /// Index range of the extensions of `self` in `C_level`.
    pub fn extensions(&self, level: u32) -> Result<(u64, u64), CantorError> {
        let lo = self.embed(level)?.index;
        Ok((lo, lo + (1u64 << (level - self.level))))
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        let common = self.level.min(other.level);
        self.project(common)
            .index
            .cmp(&other.project(common).index)
            .then(self.level.cmp(&other.level))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.level {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.level == 0 {
            f.write_str("ε")
        } else {
            fmt::Display::fmt(self, f)
        }
    }
}

impl FromStr for Word {
    type Err = CantorError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "ε" {
            return Ok(Word::root());
        }
        let level = u32::try_from(s.len()).map_err(|_| CantorError::Malformed(s.into()))?;
        if level > MAX_LEVEL {
            return Err(CantorError::LevelTooLarge(level));
        }
        let mut index = 0u64;
        for c in s.chars() {
            index = (index << 1)
                | match c {
                    '0' => 0,
                    '1' => 1,
                    _ => return Err(CantorError::Malformed(s.into())),
                };
        }
        Word::new(index, level)
    }
}

/// The antichain `C_n` of all `2^n` words of length `n`, in lexicographic order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelAntichain {
    level: u32,
}

impl LevelAntichain {
    pub fn new(level: u32) -> Result<Self, CantorError> {
        if level > MAX_LEVEL {
            return Err(CantorError::LevelTooLarge(level));
        }
        Ok(LevelAntichain { level })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn len(&self) -> u64 {
        1u64 << self.level
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn members(&self) -> impl Iterator<Item = Word> {
        let level = self.level;
        (0..self.len()).map(move |index| Word { index, level })
    }
}

/// Normalized counting measure `ν_n` on `C_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountingMeasure {
    pub level: u32,
}

impl CountingMeasure {
    pub fn mass_per_word(&self) -> Dyadic {
        Dyadic::half_pow(self.level)
    }

    /// Mass of the cylinder above `prefix`, counted on `C_level`.
    pub fn cylinder_mass(&self, prefix: &Word) -> Result<Dyadic, CantorError> {
        let (lo, hi) = prefix.extensions(self.level)?;
        Ok(Dyadic::new(hi - lo, self.level))
    }
}

/// A maximal run of consecutive words sharing one image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub start: u64,
    pub end: u64,
    pub image: usize,
}

impl Segment {
    pub fn len(&self) -> u64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// A partial map `C_level ⇀ P`, constant on each of its segments.
#[derive(Debug, Clone)]
pub struct PartialTreeMap {
    poset: Arc<FinitePoset>,
    level: u32,
    segments: Vec<Segment>,
}

impl PartialEq for PartialTreeMap {
    fn eq(&self, other: &Self) -> bool {
        *self.poset == *other.poset && self.level == other.level && self.segments == other.segments
    }
}

impl Eq for PartialTreeMap {}

impl PartialTreeMap {
    /// Validates the segments and merges adjacent ones with equal images.
    pub fn new(
        poset: Arc<FinitePoset>,
        level: u32,
        segments: impl IntoIterator<Item = Segment>,
    ) -> Result<Self, CantorError> {
        let size = LevelAntichain::new(level)?.len();
        let mut segs: Vec<Segment> = segments.into_iter().collect();
        for s in &segs {
            if s.start >= s.end || s.end > size {
                return Err(CantorError::BadInterval {
                    start: s.start,
                    end: s.end,
                    level,
                });
            }
            if s.image >= poset.len() {
                return Err(CantorError::ForeignImage(s.image));
            }
        }
        segs.sort_by_key(|s| s.start);
        let mut merged: Vec<Segment> = Vec::with_capacity(segs.len());
        for s in segs {
            match merged.last_mut() {
                Some(prev) if prev.end > s.start => {
                    return Err(CantorError::Overlap(prev.start, prev.end, s.start, s.end));
                }
                Some(prev) if prev.end == s.start && prev.image == s.image => prev.end = s.end,
                _ => merged.push(s),
            }
        }
        Ok(PartialTreeMap {
            poset,
            level,
            segments: merged,
        })
    }

    pub fn poset(&self) -> &Arc<FinitePoset> {
        &self.poset
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Number of words in the domain.
    pub fn domain_size(&self) -> u64 {
        self.segments.iter().map(Segment::len).sum()
    }

    pub fn at_index(&self, index: u64) -> Option<usize> {
        let pos = self.segments.partition_point(|s| s.end <= index);
        self.segments
            .get(pos)
            .filter(|s| s.start <= index)
            .map(|s| s.image)
    }

    /// Image of a word of exactly this map's level.
    pub fn get(&self, word: &Word) -> Option<usize> {
        if word.level() != self.level {
            return None;
        }
        self.at_index(word.index())
    }

    pub fn pushforward(&self) -> SimpleValuation {
        let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
        for s in &self.segments {
            *counts.entry(s.image).or_default() += s.len();
        }
        SimpleValuation::new(
            self.poset.clone(),
            counts.into_iter().map(|(x, c)| (x, Dyadic::new(c, self.level))),
        )
        .expect("a partial map on C_n pushes forward to a sub-probability valuation")
    }
}

fn check_pair(f: &PartialTreeMap, g: &PartialTreeMap) -> Result<u32, CantorError> {
    if *f.poset != *g.poset {
        return Err(CantorError::DifferentPosets);
    }
    if f.level > g.level {
        return Err(CantorError::LevelMismatch {
            left: f.level,
            right: g.level,
        });
    }
    Ok(g.level - f.level)
}

/// `f <= g`: `dom f ⊆ ↓dom g`, and `f(π(w)) <= g(w)` wherever both sides are defined.
pub fn partial_map_leq(f: &PartialTreeMap, g: &PartialTreeMap) -> Result<bool, CantorError> {
    let k = check_pair(f, g)?;
    // Project dom g down to f's level and merge into disjoint intervals.
    let mut shadow: Vec<(u64, u64)> = Vec::new();
    for s in &g.segments {
        let (lo, hi) = (s.start >> k, ((s.end - 1) >> k) + 1);
        match shadow.last_mut() {
            Some(last) if last.1 >= lo => last.1 = last.1.max(hi),
            _ => shadow.push((lo, hi)),
        }
    }
    let covered = f.segments.iter().all(|s| {
        shadow
            .iter()
            .any(|&(lo, hi)| lo <= s.start && s.end <= hi)
    });
    if !covered {
        return Ok(false);
    }
    Ok(images_dominated(f, g, k))
}

fn images_dominated(f: &PartialTreeMap, g: &PartialTreeMap, k: u32) -> bool {
    f.segments.iter().all(|fs| {
        let (lo, hi) = (fs.start << k, fs.end << k);
        g.segments
            .iter()
            .filter(|gs| gs.start < hi && lo < gs.end)
            .all(|gs| f.poset.leq(fs.image, gs.image))
    })
}

/// True when every extension at `g`'s level of a word in `dom f` lies in `dom g`.
pub fn covers_extensions(f: &PartialTreeMap, g: &PartialTreeMap) -> Result<bool, CantorError> {
    let k = check_pair(f, g)?;
    Ok(f.segments.iter().all(|fs| {
        let (mut lo, hi) = (fs.start << k, fs.end << k);
        let first = g.segments.partition_point(|gs| gs.end <= lo);
        for gs in &g.segments[first..] {
            if gs.start > lo {
                return false;
            }
            lo = gs.end;
            if lo >= hi {
                return true;
            }
        }
        lo >= hi
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn seg(start: u64, end: u64, image: usize) -> Segment {
        Segment { start, end, image }
    }

    #[test]
    fn projection_examples() {
        assert_eq!(w("0110").project(2), w("01"));
        assert_eq!(w("01").project(4), w("01"));
        assert_eq!(w("0110").project(0), Word::root());
        assert_eq!(w("0110").to_string(), "0110");
        assert_eq!(Word::root().to_string(), "");
    }

    #[test]
    fn embedding_examples() {
        assert_eq!(w("01").embed(4).unwrap(), w("0100"));
        assert_eq!(Word::root().embed(3).unwrap(), w("000"));
        assert_eq!(w("10").embed(5).unwrap().project(2), w("10"));
        assert!(matches!(w("0110").embed(2), Err(CantorError::LevelTooSmall { .. })));
    }

    #[test]
    fn word_parsing_and_order() {
        assert!(matches!("012".parse::<Word>(), Err(CantorError::Malformed(_))));
        assert!(w("01") < w("010") && w("010") < w("011") && w("011") < w("1"));
        assert!(w("01").is_prefix_of(&w("0110")) && !w("00").is_prefix_of(&w("0110")));
        assert_eq!(LevelAntichain::new(2).unwrap().members().map(|m| m.to_string()).collect::<Vec<_>>(),
            vec!["00", "01", "10", "11"]);
    }

    #[test]
    fn leq_examples() {
        let v = fixtures::v_poset();
        let (a, b, bot) = (0, 1, 2);
        let f = PartialTreeMap::new(v.clone(), 1, [seg(0, 1, bot)]).unwrap();
        let g = PartialTreeMap::new(v.clone(), 2, [seg(0, 1, a), seg(1, 2, b), seg(2, 4, bot)]).unwrap();
        assert!(partial_map_leq(&f, &g).unwrap());
        assert!(partial_map_leq(&g, &g).unwrap());
        assert!(matches!(partial_map_leq(&g, &f), Err(CantorError::LevelMismatch { .. })));

        let ac = fixtures::antichain2();
        let f = PartialTreeMap::new(ac.clone(), 1, [seg(0, 1, 0)]).unwrap();
        let g = PartialTreeMap::new(ac.clone(), 2, [seg(0, 1, 1)]).unwrap();
        assert!(!partial_map_leq(&f, &g).unwrap());
    }

    #[test]
    fn leq_requires_some_extension() {
        let v = fixtures::v_poset();
        let f = PartialTreeMap::new(v.clone(), 1, [seg(1, 2, 2)]).unwrap();
        let g = PartialTreeMap::new(v.clone(), 2, [seg(0, 2, 0)]).unwrap();
        assert!(!partial_map_leq(&f, &g).unwrap());
        let g = PartialTreeMap::new(v.clone(), 2, [seg(3, 4, 0)]).unwrap();
        assert!(partial_map_leq(&f, &g).unwrap());
        assert!(!covers_extensions(&f, &g).unwrap());
        let g = PartialTreeMap::new(v.clone(), 2, [seg(2, 3, 1), seg(3, 4, 0)]).unwrap();
        assert!(covers_extensions(&f, &g).unwrap());
    }

    #[test]
    fn pushforward_examples() {
        let v = fixtures::v_poset();
        let g = PartialTreeMap::new(v.clone(), 2, [seg(0, 1, 0), seg(1, 2, 1), seg(2, 4, 2)]).unwrap();
        let expected = SimpleValuation::from_names(
            v.clone(),
            &[("a", Dyadic::half_pow(2)), ("b", Dyadic::half_pow(2)), ("⊥", Dyadic::half_pow(1))],
        )
        .unwrap();
        assert_eq!(g.pushforward(), expected);
        let empty = PartialTreeMap::new(v.clone(), 3, []).unwrap();
        assert!(empty.pushforward().is_zero());
        let total = PartialTreeMap::new(v.clone(), 1, [seg(0, 1, 0), seg(1, 2, 0)]).unwrap();
        assert_eq!(total.segments().len(), 1);
        assert_eq!(total.pushforward(), SimpleValuation::point(v, 0).unwrap());
    }

    #[test]
    fn map_validation() {
        let v = fixtures::v_poset();
        assert!(matches!(
            PartialTreeMap::new(v.clone(), 2, [seg(0, 2, 0), seg(1, 3, 1)]),
            Err(CantorError::Overlap(..))
        ));
        assert!(matches!(
            PartialTreeMap::new(v.clone(), 2, [seg(2, 5, 0)]),
            Err(CantorError::BadInterval { .. })
        ));
        assert!(matches!(
            PartialTreeMap::new(v, 2, [seg(0, 1, 7)]),
            Err(CantorError::ForeignImage(7))
        ));
    }

    #[test]
    fn counting_measure_aggregates() {
        let nu = CountingMeasure { level: 6 };
        for n in 0..=6 {
            for prefix in LevelAntichain::new(n).unwrap().members() {
                assert_eq!(nu.cylinder_mass(&prefix).unwrap(), Dyadic::half_pow(n));
            }
        }
        assert_eq!(nu.mass_per_word() * Dyadic::from_int(64), Dyadic::one());
    }
}
