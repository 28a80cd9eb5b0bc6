//! Realizing increasing chains of simple valuations as increasing chains of
//! partial maps on the Cantor tree, and the constructions built on top of them.

use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use thiserror::Error;

use crate::cantor::{CantorError, LevelAntichain, PartialTreeMap, Segment, Word, MAX_LEVEL};
use crate::dyadic::Dyadic;
use crate::poset::{FinitePoset, UpperSet};
use crate::transport::{decide_order_maxflow, SplitOutcome, TransportPlan};
use crate::valuation::SimpleValuation;

/// Deepest level at which words are enumerated one by one.
pub const MAX_ENUMERATION_DEPTH: u32 = 24;

/// Deepest map level accepted by [`scott_extend`].
pub const MAX_EXTENSION_LEVEL: u32 = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RealizationError {
    #[error("the chain is empty")]
    EmptyChain,
    #[error("chain members live on different posets")]
    DifferentPosets,
    #[error("member {index} is not below member {}", index + 1)]
    NotAChain {
        index: usize,
        witness: Option<UpperSet>,
    },
    #[error("realization would need level {0}, above the supported maximum")]
    LevelTooLarge(u32),
    #[error("depth {depth} is below the realization level {required}")]
    DepthTooSmall { depth: u32, required: u32 },
    #[error("depth {0} is too large to enumerate")]
    DepthTooLarge(u32),
    #[error("the poset is not bounded complete")]
    NotBoundedComplete,
    #[error("{0} is outside [0, 1]")]
    OutOfRange(Dyadic),
    #[error("{value} needs more than {depth} binary digits")]
    ExponentExceedsDepth { value: Dyadic, depth: u32 },
    #[error("tail index {tail} is outside 1..={len}")]
    TailOutOfRange { tail: usize, len: usize },
    #[error(transparent)]
    Cantor(#[from] CantorError),
}

/// Levels `m_1 < m_2 < ...`, maps `f_i : C_{m_i} ⇀ P` and the plans between them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RealizationResult {
    pub levels: Vec<u32>,
    pub maps: Vec<PartialTreeMap>,
    /// `plans[i]` splits member `i` into member `i + 1`.
    pub plans: Vec<TransportPlan>,
}

impl RealizationResult {
    pub fn poset(&self) -> &Arc<FinitePoset> {
        self.maps[0].poset()
    }

    pub fn top_level(&self) -> u32 {
        *self.levels.last().expect("a realization has at least one map")
    }
}

fn count(value: &Dyadic, level: u32) -> u64 {
    value
        .count_at_level(level)
        .expect("level was chosen to clear every denominator")
}

fn check_level(level: u32) -> Result<u32, RealizationError> {
    if level > MAX_LEVEL {
        Err(RealizationError::LevelTooLarge(level))
    } else {
        Ok(level)
    }
}

/// Builds `f_1 <= f_2 <= ...` with `(f_i)_* ν_{m_i} = μ_i`.
///
/// Each refinement step subdivides the words carrying `y`, in lexicographic
/// order, into runs for the plan entries `t_{y,z}` in enumeration order of
/// `z`. The residuals `u_z` follow in the same order right after the old
/// domain, and the leftover mass stays undefined.
pub fn realize_chain(chain: &[SimpleValuation]) -> Result<RealizationResult, RealizationError> {
    let first = chain.first().ok_or(RealizationError::EmptyChain)?;
    if chain.iter().any(|mu| !mu.same_poset(first)) {
        return Err(RealizationError::DifferentPosets);
    }
    let poset = first.poset().clone();

    let mut level = check_level(first.max_exponent())?;
    let mut cursor = 0u64;
    let mut segments = Vec::new();
    for (&x, r) in first.weights() {
        let len = count(r, level);
        segments.push(Segment {
            start: cursor,
            end: cursor + len,
            image: x,
        });
        cursor += len;
    }
    let mut result = RealizationResult {
        levels: vec![level],
        maps: vec![PartialTreeMap::new(poset.clone(), level, segments)?],
        plans: Vec::new(),
    };

    for (index, pair) in chain.windows(2).enumerate() {
        let decision = decide_order_maxflow(&pair[0], &pair[1]).map_err(|_| RealizationError::DifferentPosets)?;
        let plan = match decision.outcome {
            SplitOutcome::Plan(plan) => plan,
            SplitOutcome::Refused(refusal) => {
                return Err(RealizationError::NotAChain {
                    index,
                    witness: refusal.witness,
                })
            }
        };
        let next = check_level(pair[1].max_exponent().max(plan.max_exponent()).max(level + 1))?;
        let shift = next - level;
        let prev = result.maps.last().expect("at least one map");

        // Per source element, the runs still to be laid out, in target order.
        let mut queues: BTreeMap<usize, VecDeque<(usize, u64)>> = BTreeMap::new();
        for (&(y, z), t) in &plan.entries {
            queues.entry(y).or_default().push_back((z, count(t, next)));
        }
        let mut segments = Vec::new();
        let mut end = 0u64;
        for s in prev.segments() {
            let (mut cursor, stop) = (s.start << shift, s.end << shift);
            let queue = queues.get_mut(&s.image).expect("every support point is transported");
            while cursor < stop {
                let (z, left) = queue.front_mut().expect("plan rows sum to the weight");
                let len = (*left).min(stop - cursor);
                segments.push(Segment {
                    start: cursor,
                    end: cursor + len,
                    image: *z,
                });
                cursor += len;
                *left -= len;
                if *left == 0 {
                    queue.pop_front();
                }
            }
            end = end.max(stop);
        }
        for (&z, u) in &plan.residuals {
            let len = count(u, next);
            if len > 0 {
                segments.push(Segment {
                    start: end,
                    end: end + len,
                    image: z,
                });
                end += len;
            }
        }
        result.maps.push(PartialTreeMap::new(poset.clone(), next, segments)?);
        result.levels.push(next);
        result.plans.push(plan);
        level = next;
    }
    Ok(result)
}

/// `f(w)`: the supremum of the defined values `f_i(π_{m_i}(w))`, or `None`
/// when no stage is defined on a prefix of `w`.
pub fn evaluate_limit(result: &RealizationResult, word: &Word) -> Result<Option<usize>, RealizationError> {
    let required = result.top_level();
    if word.level() < required {
        return Err(RealizationError::DepthTooSmall {
            depth: word.level(),
            required,
        });
    }
    Ok(limit_value(result, word))
}

fn limit_value(result: &RealizationResult, word: &Word) -> Option<usize> {
    let values: Vec<usize> = result
        .levels
        .iter()
        .zip(&result.maps)
        .filter_map(|(&m, f)| f.get(&word.project(m)))
        .collect();
    if values.is_empty() {
        None
    } else {
        result.poset().supremum(&values)
    }
}

/// The total map `C → P` extending a partial map `f : C_n ⇀ P`.
///
/// A word of length at most `n` is sent to the infimum of `f` over its
/// level-`n` extensions when all of them are in `dom f`, and to the bottom
/// element otherwise. Longer words take the value of their level-`n` prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScottExtension {
    poset: Arc<FinitePoset>,
    level: u32,
    values: Vec<Vec<usize>>,
}

impl ScottExtension {
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn poset(&self) -> &Arc<FinitePoset> {
        &self.poset
    }

    pub fn eval(&self, word: &Word) -> usize {
        let w = word.project(self.level);
        self.values[w.level() as usize][w.index() as usize]
    }

    /// Pointwise comparison on every word up to the deeper of the two levels.
    pub fn pointwise_leq(&self, other: &ScottExtension) -> bool {
        let depth = self.level.max(other.level);
        (0..=depth).all(|n| {
            LevelAntichain::new(n)
                .expect("extension levels are bounded")
                .members()
                .all(|w| self.poset.leq(self.eval(&w), other.eval(&w)))
        })
    }
}

pub fn scott_extend(f: &PartialTreeMap) -> Result<ScottExtension, RealizationError> {
    let poset = f.poset().clone();
    if !poset.classify().is_bounded_complete {
        return Err(RealizationError::NotBoundedComplete);
    }
    let bottom = poset.least_element().ok_or(RealizationError::NotBoundedComplete)?;
    let n = f.level();
    if n > MAX_EXTENSION_LEVEL {
        return Err(RealizationError::LevelTooLarge(n));
    }
    let mut covered: Vec<Option<usize>> = (0..1u64 << n).map(|i| f.at_index(i)).collect();
    let mut values = vec![Vec::new(); n as usize + 1];
    for l in (0..=n as usize).rev() {
        values[l] = covered.iter().map(|v| v.unwrap_or(bottom)).collect();
        if l > 0 {
            covered = covered
                .chunks(2)
                .map(|pair| match (pair[0], pair[1]) {
                    (Some(a), Some(b)) => poset.infimum(&[a, b]),
                    _ => None,
                })
                .collect();
        }
    }
    Ok(ScottExtension {
        poset,
        level: n,
        values,
    })
}

/// Right adjoint of `π : C → [0, 1]` at depth `d`: the word of index `max(r·2^d - 1, 0)`.
///
/// Its infinite extension by ones is the lexicographically largest sequence
/// whose binary value is `r`, and the all-zero sequence when `r = 0`.
pub fn unit_adjoint(r: &Dyadic, depth: u32) -> Result<Word, RealizationError> {
    if !r.in_unit_interval() {
        return Err(RealizationError::OutOfRange(r.clone()));
    }
    if depth > MAX_LEVEL {
        return Err(RealizationError::LevelTooLarge(depth));
    }
    let n = r
        .count_at_level(depth)
        .map_err(|_| RealizationError::ExponentExceedsDepth {
            value: r.clone(),
            depth,
        })?;
    Ok(Word::new(n.saturating_sub(1).min((1u64 << depth) - 1), depth)?)
}

/// A cylinder whose preimage under the adjoint is not the expected interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CylinderFailure {
    pub cylinder: Word,
    /// Total length of the grid cells sent into the cylinder.
    pub length: Dyadic,
    pub expected: Dyadic,
    pub contiguous: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CylinderReport {
    pub depth: u32,
    pub cylinders_checked: u64,
    /// Grid cells whose midpoint landed in a different depth-`d` word.
    pub inconsistent_cells: Vec<u64>,
    pub failures: Vec<CylinderFailure>,
}

impl CylinderReport {
    pub fn passes(&self) -> bool {
        self.failures.is_empty() && self.inconsistent_cells.is_empty()
    }
}

/// Checks that Lebesgue measure pushed along the adjoint gives `2^-n` to every
/// cylinder of length `n <= depth`.
///
/// Cell `i` is `((i-1)/2^d, i/2^d]`, sampled at its right end, and its midpoint
/// sampled at depth `d + 1` must land in the same depth-`d` word.
pub fn cylinder_pushforward_check(depth: u32) -> Result<CylinderReport, RealizationError> {
    if depth >= MAX_ENUMERATION_DEPTH {
        return Err(RealizationError::DepthTooLarge(depth));
    }
    let cells = 1u64 << depth;
    let mut words = Vec::with_capacity(cells as usize);
    let mut inconsistent_cells = Vec::new();
    for i in 1..=cells {
        let w = unit_adjoint(&Dyadic::new(i, depth), depth)?;
        let mid = unit_adjoint(&Dyadic::new(2 * i - 1, depth + 1), depth + 1)?;
        if mid.project(depth) != w {
            inconsistent_cells.push(i);
        }
        words.push(w);
    }
    let mut failures = Vec::new();
    let mut checked = 0u64;
    for n in 0..=depth {
        let size = 1usize << n;
        let mut hits = vec![0u64; size];
        let mut lo = vec![u64::MAX; size];
        let mut hi = vec![0u64; size];
        for (i, w) in words.iter().enumerate() {
            let p = w.project(n).index() as usize;
            hits[p] += 1;
            lo[p] = lo[p].min(i as u64);
            hi[p] = hi[p].max(i as u64);
        }
        for p in 0..size {
            checked += 1;
            let length = Dyadic::new(hits[p], depth);
            let expected = Dyadic::half_pow(n);
            let contiguous = hits[p] > 0 && hi[p] - lo[p] + 1 == hits[p];
            if length != expected || !contiguous {
                failures.push(CylinderFailure {
                    cylinder: Word::new(p as u64, n)?,
                    length,
                    expected,
                    contiguous,
                });
            }
        }
    }
    Ok(CylinderReport {
        depth,
        cylinders_checked: checked,
        inconsistent_cells,
        failures,
    })
}

/// `X(r) = f(j(r))`, truncated to depth `depth`.
pub fn skorohod_compose(
    result: &RealizationResult,
    r: &Dyadic,
    depth: u32,
) -> Result<Option<usize>, RealizationError> {
    evaluate_limit(result, &unit_adjoint(r, depth)?)
}

/// Law of `X` under Lebesgue measure, sampled at the grid points `i/2^depth`.
pub fn grid_pushforward(result: &RealizationResult, depth: u32) -> Result<SimpleValuation, RealizationError> {
    if depth > MAX_ENUMERATION_DEPTH {
        return Err(RealizationError::DepthTooLarge(depth));
    }
    let mut counts = vec![0u64; result.poset().len()];
    for i in 1..=(1u64 << depth) {
        if let Some(x) = skorohod_compose(result, &Dyadic::new(i, depth), depth)? {
            counts[x] += 1;
        }
    }
    Ok(SimpleValuation::new(
        result.poset().clone(),
        counts
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c > 0)
            .map(|(x, c)| (x, Dyadic::new(c, depth))),
    )
    .expect("grid counts sum to at most one"))
}

/// Words of `dom f_μ` where some `f_{μ_n}` with `n >= tail` disagrees with `f_μ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ASConvergenceCertificate {
    pub depth: u32,
    pub tail: usize,
    pub domain_size: u64,
    pub exception_words: Vec<Word>,
    pub exception_mass: Dyadic,
}

pub fn empirical_convergence(
    sequence: &[RealizationResult],
    limit: &RealizationResult,
    depth: u32,
    tail: usize,
) -> Result<ASConvergenceCertificate, RealizationError> {
    if tail == 0 || tail > sequence.len() {
        return Err(RealizationError::TailOutOfRange {
            tail,
            len: sequence.len(),
        });
    }
    if depth > MAX_ENUMERATION_DEPTH {
        return Err(RealizationError::DepthTooLarge(depth));
    }
    if sequence.iter().any(|r| *r.poset() != *limit.poset()) {
        return Err(RealizationError::DifferentPosets);
    }
    let required = sequence
        .iter()
        .chain(std::iter::once(limit))
        .map(RealizationResult::top_level)
        .max()
        .unwrap_or(0);
    if depth < required {
        return Err(RealizationError::DepthTooSmall { depth, required });
    }
    let mut domain_size = 0u64;
    let mut exception_words = Vec::new();
    for w in LevelAntichain::new(depth)?.members() {
        let Some(target) = limit_value(limit, &w) else {
            continue;
        };
        domain_size += 1;
        if sequence[tail - 1..]
            .iter()
            .any(|r| limit_value(r, &w) != Some(target))
        {
            exception_words.push(w);
        }
    }
    let exception_mass = Dyadic::new(exception_words.len() as u64, depth);
    Ok(ASConvergenceCertificate {
        depth,
        tail,
        domain_size,
        exception_words,
        exception_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::partial_map_leq;
    use crate::fixtures;

    fn d(s: &str) -> Dyadic {
        s.parse().unwrap()
    }

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn images(f: &PartialTreeMap) -> Vec<Option<&str>> {
        (0..1u64 << f.level())
            .map(|i| f.at_index(i).map(|x| f.poset().name(x)))
            .collect()
    }

    #[test]
    fn v_poset_two_step_chain() {
        let v = fixtures::v_poset();
        let mu1 = SimpleValuation::from_names(v.clone(), &[("⊥", d("1/2"))]).unwrap();
        let mu2 =
            SimpleValuation::from_names(v.clone(), &[("a", d("1/4")), ("b", d("1/4")), ("⊥", d("1/2"))]).unwrap();
        let r = realize_chain(&[mu1.clone(), mu2.clone()]).unwrap();
        assert_eq!(r.levels, vec![1, 2]);
        assert_eq!(images(&r.maps[0]), vec![Some("⊥"), None]);
        assert_eq!(images(&r.maps[1]), vec![Some("a"), Some("b"), Some("⊥"), Some("⊥")]);
        assert_eq!(r.maps[0].pushforward(), mu1);
        assert_eq!(r.maps[1].pushforward(), mu2);
        assert!(partial_map_leq(&r.maps[0], &r.maps[1]).unwrap());
        assert_eq!(evaluate_limit(&r, &w("00")).unwrap(), Some(0));
        assert_eq!(evaluate_limit(&r, &w("10")).unwrap(), Some(2));
        assert!(matches!(
            evaluate_limit(&r, &w("0")),
            Err(RealizationError::DepthTooSmall { depth: 1, required: 2 })
        ));
    }

    #[test]
    fn non_chain_is_refused() {
        let v = fixtures::v_poset();
        let a = SimpleValuation::point(v.clone(), 0).unwrap();
        let b = SimpleValuation::point(v.clone(), 1).unwrap();
        match realize_chain(&[a, b]) {
            Err(RealizationError::NotAChain { index: 0, witness }) => {
                assert_eq!(witness.unwrap().names(&v), vec!["a"]);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(realize_chain(&[]), Err(RealizationError::EmptyChain));
    }

    #[test]
    fn singleton_and_zero_chains() {
        let flat = fixtures::flat_poset();
        let r = realize_chain(&[SimpleValuation::zero(flat.clone())]).unwrap();
        assert_eq!(r.levels, vec![0]);
        assert_eq!(r.maps[0].domain_size(), 0);
        let zero = SimpleValuation::zero(flat.clone());
        let r = realize_chain(&[zero.clone(), zero]).unwrap();
        assert_eq!(r.levels, vec![0, 1]);
    }

    #[test]
    fn flat_limit_at_all_ones_is_bottom() {
        let flat = fixtures::flat_poset();
        let chain: Vec<_> = (1..=10).map(|m| fixtures::flat_approximant(&flat, m)).collect();
        let r = realize_chain(&chain).unwrap();
        assert_eq!(r.levels, (1..=10).collect::<Vec<_>>());
        let ones = Word::new((1 << 10) - 1, 10).unwrap();
        assert_eq!(evaluate_limit(&r, &ones).unwrap(), flat.index_of("⊥"));
        let first = Word::new(0, 10).unwrap();
        assert_eq!(evaluate_limit(&r, &first).unwrap(), flat.index_of("0"));
    }

    #[test]
    fn unit_adjoint_examples() {
        assert_eq!(unit_adjoint(&d("1/2"), 4).unwrap(), w("0111"));
        assert_eq!(unit_adjoint(&d("3/4"), 4).unwrap(), w("1011"));
        assert_eq!(unit_adjoint(&d("1/8"), 4).unwrap(), w("0001"));
        assert_eq!(unit_adjoint(&Dyadic::one(), 4).unwrap(), w("1111"));
        assert_eq!(unit_adjoint(&Dyadic::zero(), 4).unwrap(), w("0000"));
        assert!(matches!(unit_adjoint(&d("3/2"), 4), Err(RealizationError::OutOfRange(_))));
        assert!(matches!(
            unit_adjoint(&d("1/32"), 4),
            Err(RealizationError::ExponentExceedsDepth { .. })
        ));
    }

    #[test]
    fn cylinders_get_their_length() {
        for depth in 0..=10 {
            let report = cylinder_pushforward_check(depth).unwrap();
            assert!(report.passes(), "{report:?}");
            assert_eq!(report.cylinders_checked, (1 << (depth + 1)) - 1);
        }
    }

    #[test]
    fn grid_law_matches_the_measure() {
        let v = fixtures::v_poset();
        let mu =
            SimpleValuation::from_names(v.clone(), &[("a", d("1/4")), ("b", d("1/8")), ("⊥", d("1/2"))]).unwrap();
        let r = realize_chain(std::slice::from_ref(&mu)).unwrap();
        for depth in 3..=8 {
            assert_eq!(grid_pushforward(&r, depth).unwrap(), mu);
        }
    }

    #[test]
    fn scott_extension_examples() {
        let v = fixtures::v_poset();
        let f = PartialTreeMap::new(
            v.clone(),
            2,
            [Segment { start: 0, end: 1, image: 0 }, Segment { start: 1, end: 2, image: 1 }],
        )
        .unwrap();
        let e = scott_extend(&f).unwrap();
        assert_eq!(e.eval(&w("00")), 0);
        assert_eq!(e.eval(&w("01")), 1);
        assert_eq!(e.eval(&w("0")), 2);
        assert_eq!(e.eval(&w("1")), 2);
        assert_eq!(e.eval(&Word::root()), 2);
        assert_eq!(e.eval(&w("0110")), 1);

        let lambda = fixtures::lambda_poset();
        let g = PartialTreeMap::new(lambda, 1, []).unwrap();
        assert_eq!(scott_extend(&g), Err(RealizationError::NotBoundedComplete));
    }

    #[test]
    fn scott_extension_is_not_monotone_for_thin_domains() {
        // f sends 0 to a; g is above f but only defines 00.
        let v = fixtures::v_poset();
        let f = PartialTreeMap::new(v.clone(), 1, [Segment { start: 0, end: 1, image: 0 }]).unwrap();
        let g = PartialTreeMap::new(v.clone(), 2, [Segment { start: 0, end: 1, image: 0 }]).unwrap();
        assert!(partial_map_leq(&f, &g).unwrap());
        let (ef, eg) = (scott_extend(&f).unwrap(), scott_extend(&g).unwrap());
        assert_eq!(ef.eval(&w("01")), 0);
        assert_eq!(eg.eval(&w("01")), 2);
        assert!(!ef.pointwise_leq(&eg));
    }

    #[test]
    fn flat_sequence_converges_off_a_small_set() {
        let flat = fixtures::flat_poset();
        let seq: Vec<_> = (1..=10)
            .map(|n| realize_chain(&[fixtures::flat_sequence_term(&flat, n)]).unwrap())
            .collect();
        let chain: Vec<_> = (1..=10).map(|m| fixtures::flat_approximant(&flat, m)).collect();
        let limit = realize_chain(&chain).unwrap();
        for tail in 1..=10 {
            let cert = empirical_convergence(&seq, &limit, 10, tail).unwrap();
            assert_eq!(cert.exception_mass, Dyadic::half_pow(tail as u32));
        }
        assert!(matches!(
            empirical_convergence(&seq, &limit, 10, 11),
            Err(RealizationError::TailOutOfRange { .. })
        ));
    }
}
