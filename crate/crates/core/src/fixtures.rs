//! Named posets and measures used throughout the tests and the CLI demos.
//!
//! Where a poset has a bottom, the named fixtures list it last: the flow
//! search then tries strictly-upward transport before the identity edge,
//! which places residual bottom mass at the right end of each level.

use std::collections::HashSet;
use std::sync::Arc;

use crate::dyadic::Dyadic;
use crate::poset::FinitePoset;
use crate::valuation::SimpleValuation;

fn build(elements: &[&str], covers: &[(&str, &str)], bottom: Option<&str>) -> Arc<FinitePoset> {
    Arc::new(FinitePoset::build(elements, covers, bottom, None).expect("fixture poset is valid"))
}

/// `⊥ < a`, `⊥ < b`, enumerated as `a, b, ⊥`.
pub fn v_poset() -> Arc<FinitePoset> {
    build(&["a", "b", "⊥"], &[("⊥", "a"), ("⊥", "b")], Some("⊥"))
}

/// `a < ⊤`, `b < ⊤`.
pub fn lambda_poset() -> Arc<FinitePoset> {
    build(&["a", "b", "⊤"], &[("a", "⊤"), ("b", "⊤")], None)
}

/// `⊥ < a, b < ⊤`, enumerated as `⊥, a, b, ⊤`.
pub fn diamond() -> Arc<FinitePoset> {
    build(
        &["⊥", "a", "b", "⊤"],
        &[("⊥", "a"), ("⊥", "b"), ("a", "⊤"), ("b", "⊤")],
        Some("⊥"),
    )
}

/// `a < c`, `b < c`, `b < d`.
pub fn n_poset() -> Arc<FinitePoset> {
    build(&["a", "b", "c", "d"], &[("a", "c"), ("b", "c"), ("b", "d")], None)
}

pub fn antichain2() -> Arc<FinitePoset> {
    build(&["a", "b"], &[], None)
}

/// The lifted two-point flat poset, enumerated as `0, 1, ⊥`.
pub fn flat_poset() -> Arc<FinitePoset> {
    build(&["0", "1", "⊥"], &[("⊥", "0"), ("⊥", "1")], Some("⊥"))
}

/// `(2^n - 1)/2^n δ_0 + 2^-n δ_1` on [`flat_poset`].
pub fn flat_sequence_term(flat: &Arc<FinitePoset>, n: u32) -> SimpleValuation {
    two_point(flat, "0", "1", n)
}

/// `(2^m - 1)/2^m δ_0 + 2^-m δ_⊥` on [`flat_poset`], an approximant of `δ_0`.
pub fn flat_approximant(flat: &Arc<FinitePoset>, m: u32) -> SimpleValuation {
    two_point(flat, "0", "⊥", m)
}

fn two_point(flat: &Arc<FinitePoset>, heavy: &str, light: &str, n: u32) -> SimpleValuation {
    let small = Dyadic::half_pow(n);
    let big = Dyadic::one() - &small;
    SimpleValuation::from_names(flat.clone(), &[(heavy, big), (light, small)])
        .expect("fixture valuation is valid")
}

/// Every poset with exactly `n` elements, one per isomorphism class.
///
/// Elements are named `p0 .. p{n-1}` and numbered along a linear extension.
pub fn all_posets(n: usize) -> Vec<Arc<FinitePoset>> {
    assert!((1..=6).contains(&n), "poset enumeration supports 1..=6 elements");
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let perms = permutations(n);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for bits in 0u32..(1 << pairs.len()) {
        let mut rel = vec![vec![false; n]; n];
        for (k, &(i, j)) in pairs.iter().enumerate() {
            rel[i][j] = bits & (1 << k) != 0;
        }
        let closed = (0..n).all(|i| {
            (0..n).all(|j| (0..n).all(|k| !(rel[i][j] && rel[j][k]) || rel[i][k]))
        });
        if !closed {
            continue;
        }
        let canon = perms
            .iter()
            .map(|p| {
                let mut code = 0u64;
                for i in 0..n {
                    for j in 0..n {
                        code = (code << 1) | u64::from(rel[p[i]][p[j]]);
                    }
                }
                code
            })
            .min()
            .unwrap_or(0);
        if !seen.insert(canon) {
            continue;
        }
        let names: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
        let covers: Vec<(String, String)> = pairs
            .iter()
            .filter(|&&(i, j)| rel[i][j])
            .map(|&(i, j)| (names[i].clone(), names[j].clone()))
            .collect();
        out.push(Arc::new(
            FinitePoset::build(&names, &covers, None, None).expect("enumerated relation is a partial order"),
        ));
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}
