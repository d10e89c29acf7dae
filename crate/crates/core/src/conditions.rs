//! Sufficient conditions for a strict gain between consecutive levels.
//!
//! Both checks work in permuted coordinates: positions in the ordering, not
//! original event labels.
//!
//! * Triplet condition (levels 1 -> 2): some column `c` has its largest
//!   above-diagonal entry `P_ac` with another `b < c` such that
//!   `P_ac >= P_bc > P_ab`. Then `B_2 < B_1` in that ordering.
//! * Line condition (levels m -> m+1): for a line `i > m+1`, every
//!   `(m+1)`-subset of its predecessors satisfies
//!   `P_{j_r i} > sum_{s != r} min(P_{j_s i}, P_{j_r j_s})` for every member `r`.
//!   Then `B_{m+1} < B_m` in that ordering.

use num_bigint::BigUint;
use serde::Serialize;

use crate::bound::check_level;
use crate::error::{Error, Result};
use crate::matrix::{reorder, Ordering, ProbabilityMatrix};

/// Evidence that a strict-gain condition holds. Positions are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConditionWitness {
    /// `P_ac = max_{x<c} P_xc >= P_bc > P_ab`.
    Triplet { a: usize, b: usize, c: usize },
    /// Every `(level+1)`-subset of the predecessors of `line` passes the line test.
    Line { level: usize, line: usize },
}

/// First triplet witness, scanning columns left to right. Every argmax of a
/// column is tried as `a`.
pub fn condition1(matrix: &ProbabilityMatrix, ordering: &Ordering) -> Result<Option<ConditionWitness>> {
    let n = matrix.n();
    if n < 3 {
        return Err(Error::TooFewEvents { n, min: 3 });
    }
    let q = reorder(matrix, ordering)?;
    for c in 2..n {
        let col_max = (0..c).map(|x| q.get(x, c)).fold(f64::NEG_INFINITY, f64::max);
        for a in (0..c).filter(|&a| q.get(a, c) == col_max) {
            for b in (0..c).filter(|&b| b != a) {
                if q.get(b, c) > q.get(a, b) {
                    return Ok(Some(ConditionWitness::Triplet { a, b, c }));
                }
            }
        }
    }
    Ok(None)
}

/// Left- and right-hand sides of the line test for each member of `subset`
/// (positions in `ordering`, all before `line`).
pub fn condition2_terms(
    matrix: &ProbabilityMatrix,
    ordering: &Ordering,
    subset: &[usize],
    line: usize,
) -> Result<Vec<(f64, f64)>> {
    let n = matrix.n();
    if line >= n {
        return Err(Error::IndexOutOfRange { index: line + 1, n });
    }
    if let Some(&bad) = subset.iter().find(|&&j| j >= line) {
        return Err(Error::IndexOutOfRange {
            index: bad + 1,
            n: line,
        });
    }
    let q = reorder(matrix, ordering)?;
    Ok(line_terms(&q, subset, line))
}

fn line_terms(q: &ProbabilityMatrix, subset: &[usize], line: usize) -> Vec<(f64, f64)> {
    subset
        .iter()
        .map(|&r| {
            let rhs = subset
                .iter()
                .filter(|&&s| s != r)
                .map(|&s| q.get(s, line).min(q.get(r, s)))
                .sum::<f64>();
            (q.get(r, line), rhs)
        })
        .collect()
}

fn check_line(n: usize, level: usize, line: usize) -> Result<()> {
    check_level(n, level)?;
    if line >= n || line < level + 1 {
        return Err(Error::IndexOutOfRange { index: line + 1, n });
    }
    Ok(())
}

/// Line test at `line` (0-based position) for the step `level -> level+1`.
/// Requires `level + 1 < line + 1 <= n`. Uses exact `>`.
pub fn condition2_at(matrix: &ProbabilityMatrix, ordering: &Ordering, level: usize, line: usize) -> Result<bool> {
    check_line(matrix.n(), level, line)?;
    let q = reorder(matrix, ordering)?;
    Ok(line_condition_holds(&q, level, line))
}

fn line_condition_holds(q: &ProbabilityMatrix, level: usize, line: usize) -> bool {
    let mut all = true;
    for_each_combination(line, level + 1, |subset| {
        if all && !line_terms(q, subset, line).iter().all(|&(lhs, rhs)| lhs > rhs) {
            all = false;
        }
    });
    all
}

/// Smallest line at which the line test holds for `level -> level+1`.
pub fn condition2_any(
    matrix: &ProbabilityMatrix,
    ordering: &Ordering,
    level: usize,
) -> Result<Option<ConditionWitness>> {
    let n = matrix.n();
    check_level(n, level)?;
    let q = reorder(matrix, ordering)?;
    Ok(((level + 1)..n)
        .find(|&line| line_condition_holds(&q, level, line))
        .map(|line| ConditionWitness::Line { level, line }))
}

/// Calls `f` with every increasing `t`-subset of `0..k`, in lexicographic order.
pub(crate) fn for_each_combination(k: usize, t: usize, mut f: impl FnMut(&[usize])) {
    if t > k {
        return;
    }
    let mut idx: Vec<usize> = (0..t).collect();
    loop {
        f(&idx);
        let mut pos = t;
        while pos > 0 && idx[pos - 1] == k - t + pos - 1 {
            pos -= 1;
        }
        if pos == 0 {
            return;
        }
        idx[pos - 1] += 1;
        for q in pos..t {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

fn factorial(k: usize) -> BigUint {
    (1..=k).fold(BigUint::from(1u32), |acc, x| acc * BigUint::from(x))
}

fn binomial(k: usize, r: usize) -> BigUint {
    factorial(k) / (factorial(r) * factorial(k - r))
}

/// Orderings guaranteed to keep a triplet witness found in column `c`
/// (1-based, `3 <= c <= n`):
/// `sum_{j=0}^{c-3} C(c-3, j) (j+2)! (n-3-j)!`.
///
/// `j` counts the other events allowed to stay in front of `c`. Ranges from
/// `2 (n-3)!` at `c = 3` to `n!/3` at `c = n`.
pub fn count_orderings_condition1(n: usize, c: usize) -> Result<BigUint> {
    if c < 3 || c > n {
        return Err(Error::IndexOutOfRange { index: c, n });
    }
    let free = c - 3;
    Ok((0..=free)
        .map(|j| binomial(free, j) * factorial(j + 2) * factorial(n - 3 - j))
        .sum())
}
