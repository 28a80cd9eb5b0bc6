//! Finite partial orders with an optional user-supplied way-below relation.
//!
//! Elements are addressed by their position in the input list. That position
//! is also the fixed enumeration order every downstream algorithm uses to
//! break ties (flow search order, interval allocation).

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::ops::ControlFlow;

use serde::Serialize;
use thiserror::Error;

/// Default bound on the number of elements for exhaustive upper-set enumeration.
pub const UPPER_SET_LIMIT: usize = 20;

/// Hard ceiling for enumeration; upper sets are tracked as 64-bit masks internally.
const MAX_ENUMERABLE: usize = 63;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PosetError {
    #[error("a poset needs at least one element")]
    Empty,
    #[error("identifier '{0}' appears more than once")]
    DuplicateIdentifier(String),
    #[error("unknown identifier '{0}'")]
    UnknownIdentifier(String),
    #[error("order relation has a cycle through '{0}' and '{1}'")]
    CycleDetected(String, String),
    #[error("declared bottom '{bottom}' is not below '{other}'")]
    BottomNotLeast { bottom: String, other: String },
    #[error("way-below pair ('{0}', '{1}') is not contained in the order")]
    WayBelowNotInOrder(String, String),
    #[error("poset has {size} elements, enumeration bound is {limit}")]
    SizeLimit { size: usize, limit: usize },
}

/// A finite poset, reflexively and transitively closed at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinitePoset {
    names: Vec<String>,
    index: HashMap<String, usize>,
    leq: Vec<Vec<bool>>,
    waybelow: Vec<Vec<bool>>,
    bottom: Option<usize>,
    fingerprint: u64,
}

/// Structural flags of a finite poset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub is_chain: bool,
    pub is_bounded_complete: bool,
    pub has_bottom: bool,
    pub is_flat: bool,
    /// Way-below coincides with the order, as it does for any finite poset
    /// taken on its own.
    pub waybelow_is_order: bool,
}

/// An upward-closed subset of a specific poset.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UpperSet {
    poset: u64,
    members: Vec<usize>,
}

impl UpperSet {
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn contains(&self, x: usize) -> bool {
        self.members.binary_search(&x).is_ok()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn belongs_to(&self, poset: &FinitePoset) -> bool {
        self.poset == poset.fingerprint && self.members.iter().all(|&x| x < poset.len())
    }

    pub fn names<'a>(&self, poset: &'a FinitePoset) -> Vec<&'a str> {
        self.members.iter().map(|&x| poset.name(x)).collect()
    }
}

fn lookup(index: &HashMap<String, usize>, name: &str) -> Result<usize, PosetError> {
    index
        .get(name)
        .copied()
        .ok_or_else(|| PosetError::UnknownIdentifier(name.to_string()))
}

fn transitive_closure(rel: &mut [Vec<bool>]) {
    let n = rel.len();
    for k in 0..n {
        for i in 0..n {
            if rel[i][k] {
                let row = rel[k].clone();
                for (cell, &reach) in rel[i].iter_mut().zip(&row) {
                    *cell |= reach;
                }
            }
        }
    }
}

impl FinitePoset {
    /// Builds a poset from cover (or any generating) pairs `(lower, upper)`.
    ///
    /// When `waybelow` is given, it is checked against the order and then
    /// closed under `x' <= x << y <= y'`; otherwise way-below is the order itself.
    pub fn build<S: AsRef<str>>(
        elements: &[S],
        covers: &[(S, S)],
        bottom: Option<&str>,
        waybelow: Option<&[(S, S)]>,
    ) -> Result<Self, PosetError> {
        if elements.is_empty() {
            return Err(PosetError::Empty);
        }
        let names: Vec<String> = elements.iter().map(|s| s.as_ref().to_string()).collect();
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(PosetError::DuplicateIdentifier(name.clone()));
            }
        }
        let n = names.len();
        let mut leq = vec![vec![false; n]; n];
        for (i, row) in leq.iter_mut().enumerate() {
            row[i] = true;
        }
        for (a, b) in covers {
            let (a, b) = (lookup(&index, a.as_ref())?, lookup(&index, b.as_ref())?);
            leq[a][b] = true;
        }
        transitive_closure(&mut leq);
        for i in 0..n {
            for j in (i + 1)..n {
                if leq[i][j] && leq[j][i] {
                    return Err(PosetError::CycleDetected(names[i].clone(), names[j].clone()));
                }
            }
        }
        let bottom = match bottom {
            Some(b) => {
                let b = lookup(&index, b)?;
                if let Some(other) = (0..n).find(|&x| !leq[b][x]) {
                    return Err(PosetError::BottomNotLeast {
                        bottom: names[b].clone(),
                        other: names[other].clone(),
                    });
                }
                Some(b)
            }
            None => None,
        };
        let waybelow = match waybelow {
            None => leq.clone(),
            Some(pairs) => {
                let mut base = vec![vec![false; n]; n];
                for (a, b) in pairs {
                    let (x, y) = (lookup(&index, a.as_ref())?, lookup(&index, b.as_ref())?);
                    if !leq[x][y] {
                        return Err(PosetError::WayBelowNotInOrder(
                            names[x].clone(),
                            names[y].clone(),
                        ));
                    }
                    base[x][y] = true;
                }
                let mut closed = vec![vec![false; n]; n];
                for x in 0..n {
                    for y in 0..n {
                        if !base[x][y] {
                            continue;
                        }
                        for lo in (0..n).filter(|&lo| leq[lo][x]) {
                            for hi in (0..n).filter(|&hi| leq[y][hi]) {
                                closed[lo][hi] = true;
                            }
                        }
                    }
                }
                closed
            }
        };
        let mut hasher = DefaultHasher::new();
        names.hash(&mut hasher);
        leq.hash(&mut hasher);
        waybelow.hash(&mut hasher);
        bottom.hash(&mut hasher);
        Ok(FinitePoset {
            names,
            index,
            leq,
            waybelow,
            bottom,
            fingerprint: hasher.finish(),
        })
    }

    /// A chain `names[0] < names[1] < ...` with the first element as bottom.
    pub fn chain<S: AsRef<str>>(names: &[S]) -> Result<Self, PosetError> {
        let covers: Vec<(&str, &str)> = names
            .windows(2)
            .map(|w| (w[0].as_ref(), w[1].as_ref()))
            .collect();
        let elements: Vec<&str> = names.iter().map(|s| s.as_ref()).collect();
        FinitePoset::build(&elements, &covers, elements.first().copied(), None)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, x: usize) -> &str {
        &self.names[x]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn element(&self, name: &str) -> Result<usize, PosetError> {
        lookup(&self.index, name)
    }

    pub fn leq(&self, x: usize, y: usize) -> bool {
        self.leq[x][y]
    }

    pub fn lt(&self, x: usize, y: usize) -> bool {
        x != y && self.leq[x][y]
    }

    pub fn way_below(&self, x: usize, y: usize) -> bool {
        self.waybelow[x][y]
    }

    pub fn declared_bottom(&self) -> Option<usize> {
        self.bottom
    }

    /// Identity used to tie upper sets and valuations to this poset.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn least_element(&self) -> Option<usize> {
        (0..self.len()).find(|&b| (0..self.len()).all(|x| self.leq[b][x]))
    }

    /// Covering pairs `(x, y)` with `x < y` and nothing strictly between.
    pub fn hasse_covers(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut out = Vec::new();
        for x in 0..n {
            for y in 0..n {
                if self.lt(x, y) && !(0..n).any(|z| self.lt(x, z) && self.lt(z, y)) {
                    out.push((x, y));
                }
            }
        }
        out
    }

    /// Way-below pairs, or `None` when way-below is the order.
    pub fn waybelow_pairs(&self) -> Option<Vec<(usize, usize)>> {
        if self.waybelow == self.leq {
            return None;
        }
        let n = self.len();
        Some(
            (0..n)
                .flat_map(|x| (0..n).map(move |y| (x, y)))
                .filter(|&(x, y)| self.waybelow[x][y])
                .collect(),
        )
    }

    /// Upward closure of an arbitrary set of elements.
    pub fn up_closure(&self, generators: impl IntoIterator<Item = usize>) -> UpperSet {
        let gens: Vec<usize> = generators.into_iter().collect();
        let members = (0..self.len())
            .filter(|&y| gens.iter().any(|&x| self.leq[x][y]))
            .collect();
        UpperSet {
            poset: self.fingerprint,
            members,
        }
    }

    /// Wraps `members` as an upper set if it is upward closed.
    pub fn upper_set(&self, members: impl IntoIterator<Item = usize>) -> Option<UpperSet> {
        let mut members: Vec<usize> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        if members.iter().any(|&x| x >= self.len()) {
            return None;
        }
        let closed = members
            .iter()
            .all(|&x| (0..self.len()).all(|y| !self.leq[x][y] || members.binary_search(&y).is_ok()));
        closed.then_some(UpperSet {
            poset: self.fingerprint,
            members,
        })
    }

    /// Minimal elements of a set.
    pub fn minimal_elements(&self, set: &[usize]) -> Vec<usize> {
        set.iter()
            .copied()
            .filter(|&x| !set.iter().any(|&y| self.lt(y, x)))
            .collect()
    }

    /// Calls `visit` on every upper set, each exactly once, until it breaks.
    pub fn visit_upper_sets<B>(
        &self,
        limit: usize,
        mut visit: impl FnMut(&UpperSet) -> ControlFlow<B>,
    ) -> Result<Option<B>, PosetError> {
        let limit = limit.min(MAX_ENUMERABLE);
        if self.len() > limit {
            return Err(PosetError::SizeLimit {
                size: self.len(),
                limit,
            });
        }
        // Strict upper sets shrink as we go up, so sorting by |up(x)| puts
        // every element after all elements strictly above it.
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by_key(|&x| (self.leq[x].iter().filter(|&&b| b).count(), x));
        let strict_above: Vec<u64> = (0..self.len())
            .map(|x| {
                (0..self.len())
                    .filter(|&y| self.lt(x, y))
                    .fold(0u64, |m, y| m | (1 << y))
            })
            .collect();

        fn walk<B>(
            poset: &FinitePoset,
            order: &[usize],
            strict_above: &[u64],
            depth: usize,
            mask: u64,
            visit: &mut dyn FnMut(&UpperSet) -> ControlFlow<B>,
        ) -> ControlFlow<B> {
            if depth == order.len() {
                let members = (0..poset.len()).filter(|&x| mask & (1 << x) != 0).collect();
                return visit(&UpperSet {
                    poset: poset.fingerprint,
                    members,
                });
            }
            let x = order[depth];
            walk(poset, order, strict_above, depth + 1, mask, visit)?;
            if strict_above[x] & !mask == 0 {
                walk(poset, order, strict_above, depth + 1, mask | (1 << x), visit)?;
            }
            ControlFlow::Continue(())
        }

        match walk(self, &order, &strict_above, 0, 0, &mut visit) {
            ControlFlow::Break(b) => Ok(Some(b)),
            ControlFlow::Continue(()) => Ok(None),
        }
    }

    /// All upper sets, including the empty set and the whole poset.
    pub fn enumerate_upper_sets(&self) -> Result<Vec<UpperSet>, PosetError> {
        self.enumerate_upper_sets_bounded(UPPER_SET_LIMIT)
    }

    pub fn enumerate_upper_sets_bounded(&self, limit: usize) -> Result<Vec<UpperSet>, PosetError> {
        let mut out = Vec::new();
        self.visit_upper_sets::<()>(limit, |u| {
            out.push(u.clone());
            ControlFlow::Continue(())
        })?;
        Ok(out)
    }

    /// Greatest lower bound of `set`, if it exists.
    pub fn infimum(&self, set: &[usize]) -> Option<usize> {
        let lower: Vec<usize> = (0..self.len())
            .filter(|&z| set.iter().all(|&s| self.leq[z][s]))
            .collect();
        lower
            .iter()
            .copied()
            .find(|&g| lower.iter().all(|&z| self.leq[z][g]))
    }

    /// Least upper bound of `set`, if it exists.
    pub fn supremum(&self, set: &[usize]) -> Option<usize> {
        let upper: Vec<usize> = (0..self.len())
            .filter(|&z| set.iter().all(|&s| self.leq[s][z]))
            .collect();
        upper
            .iter()
            .copied()
            .find(|&l| upper.iter().all(|&z| self.leq[l][z]))
    }

    pub fn classify(&self) -> Classification {
        let n = self.len();
        let is_chain = (0..n).all(|x| (0..n).all(|y| self.leq[x][y] || self.leq[y][x]));
        let least = self.least_element();
        // The empty set is bounded, so a least element is required; for larger
        // sets, suprema of bounded pairs extend to every bounded finite set.
        let is_bounded_complete = least.is_some()
            && (0..n).all(|x| {
                ((x + 1)..n).all(|y| {
                    let bounded = (0..n).any(|z| self.leq[x][z] && self.leq[y][z]);
                    !bounded || self.supremum(&[x, y]).is_some()
                })
            });
        let is_flat = match least {
            Some(b) => (0..n)
                .filter(|&x| x != b)
                .all(|x| (0..n).filter(|&y| y != b).all(|y| x == y || !self.leq[x][y])),
            None => false,
        };
        Classification {
            is_chain,
            is_bounded_complete,
            has_bottom: least.is_some(),
            is_flat,
            waybelow_is_order: self.waybelow == self.leq,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diamond() -> FinitePoset {
        FinitePoset::build(
            &["⊥", "a", "b", "⊤"],
            &[("⊥", "a"), ("⊥", "b"), ("a", "⊤"), ("b", "⊤")],
            Some("⊥"),
            None,
        )
        .unwrap()
    }

    fn antichain() -> FinitePoset {
        FinitePoset::build::<&str>(&["a", "b"], &[], None, None).unwrap()
    }

    #[test]
    fn diamond_has_extremes() {
        let p = diamond();
        assert_eq!(p.len(), 4);
        assert_eq!(p.least_element(), Some(0));
        assert!((0..4).all(|x| p.leq(x, 3)));
        assert!(p.leq(0, 3));
        assert!(!p.leq(1, 2) && !p.leq(2, 1));
        assert_eq!(p.hasse_covers(), vec![(0, 1), (0, 2), (1, 3), (2, 3)]);
    }

    #[test]
    fn cycles_are_rejected() {
        let err = FinitePoset::build(&["a", "b"], &[("a", "b"), ("b", "a")], None, None);
        assert!(matches!(err, Err(PosetError::CycleDetected(..))));
    }

    #[test]
    fn build_errors() {
        assert!(matches!(
            FinitePoset::build::<&str>(&["a", "a"], &[], None, None),
            Err(PosetError::DuplicateIdentifier(_))
        ));
        assert!(matches!(
            FinitePoset::build(&["a"], &[("a", "z")], None, None),
            Err(PosetError::UnknownIdentifier(_))
        ));
        assert!(matches!(
            FinitePoset::build::<&str>(&["a", "b"], &[], Some("a"), None),
            Err(PosetError::BottomNotLeast { .. })
        ));
        assert!(matches!(
            FinitePoset::build::<&str>(&[], &[], None, None),
            Err(PosetError::Empty)
        ));
        assert!(matches!(
            FinitePoset::build(&["a", "b"], &[], None, Some(&[("a", "b")][..])),
            Err(PosetError::WayBelowNotInOrder(..))
        ));
    }

    #[test]
    fn singleton_is_identity() {
        let p = FinitePoset::build::<&str>(&["x"], &[], None, None).unwrap();
        assert!(p.leq(0, 0));
        assert_eq!(p.enumerate_upper_sets().unwrap().len(), 2);
        assert_eq!(p.infimum(&[0]), Some(0));
    }

    #[test]
    fn upper_set_counts() {
        assert_eq!(antichain().enumerate_upper_sets().unwrap().len(), 4);
        let chain = FinitePoset::chain(&["0", "1", "2"]).unwrap();
        let sets = chain.enumerate_upper_sets().unwrap();
        assert_eq!(sets.len(), 4);
        // upper sets of a chain are suffixes
        for u in &sets {
            let m = u.members();
            assert!(m.is_empty() || m == (m[0]..3).collect::<Vec<_>>().as_slice());
        }
    }

    #[test]
    fn size_limit() {
        let names: Vec<String> = (0..21).map(|i| format!("e{i}")).collect();
        let p = FinitePoset::build::<String>(&names, &[], None, None).unwrap();
        assert!(matches!(
            p.enumerate_upper_sets(),
            Err(PosetError::SizeLimit { size: 21, limit: 20 })
        ));
    }

    #[test]
    fn infimum_examples() {
        let p = diamond();
        assert_eq!(p.infimum(&[1, 2]), Some(0));
        assert_eq!(p.infimum(&[2]), Some(2));
        assert_eq!(antichain().infimum(&[0, 1]), None);
        assert_eq!(p.supremum(&[1, 2]), Some(3));
    }

    #[test]
    fn classify_examples() {
        let d = diamond().classify();
        assert!(!d.is_chain && d.is_bounded_complete && d.has_bottom && !d.is_flat);
        let c = FinitePoset::chain(&["⊥", "m", "⊤"]).unwrap().classify();
        assert!(c.is_chain && c.is_bounded_complete);
        let a = antichain().classify();
        assert!(!a.is_chain && !a.is_bounded_complete && !a.has_bottom);
        let flat = FinitePoset::build(&["0", "1", "⊥"], &[("⊥", "0"), ("⊥", "1")], Some("⊥"), None)
            .unwrap()
            .classify();
        assert!(flat.is_flat && flat.is_bounded_complete && flat.waybelow_is_order);
    }

    #[test]
    fn waybelow_is_absorbed() {
        let p = FinitePoset::chain(&["0", "1", "2", "3"]).unwrap();
        let q = FinitePoset::build(
            &["0", "1", "2", "3"],
            &[("0", "1"), ("1", "2"), ("2", "3")],
            None,
            Some(&[("1", "2")][..]),
        )
        .unwrap();
        assert!(q.way_below(0, 3) && q.way_below(1, 2) && q.way_below(0, 2));
        assert!(!q.way_below(1, 1) && !q.way_below(2, 3));
        assert!(!q.classify().waybelow_is_order);
        assert!(p.classify().waybelow_is_order);
        assert!(q.waybelow_pairs().is_some() && p.waybelow_pairs().is_none());
    }

    #[test]
    fn upper_set_wrapping() {
        let p = diamond();
        assert!(p.upper_set([1, 3]).is_some());
        assert!(p.upper_set([1]).is_none());
        assert_eq!(p.up_closure([1, 2]).members(), &[1, 2, 3]);
        assert!(p.up_closure([1]).belongs_to(&p));
        assert!(!p.up_closure([1]).belongs_to(&antichain()));
    }
}
