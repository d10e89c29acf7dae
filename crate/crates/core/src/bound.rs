//! Level-m second-order upper bounds.
//!
//! For an ordering of the events, line `i` contributes `P_i` minus a lower
//! bound on `P(C_1 C_i ∪ ... ∪ C_{i-1} C_i)`. At level `m` that lower bound is
//! the best value, over sequences `(j_1, .., j_t)` of `t = min(m, i-1)`
//! distinct predecessors of `i`, of
//!
//! ```text
//!   sum_r [ P_{j_r i} - sum_{s<r} min(P_{j_r i}, P_{j_s i}, P_{j_r j_s}) ]^+
//! ```
//!
//! The summand depends on the order of the sequence (the first term is never
//! reduced), so every arrangement of every `t`-subset is considered. That makes
//! each level-`m` sequence a prefix of some level-`m+1` sequence, which is what
//! keeps the bounds non-increasing in `m`.
//!
//! Level 1 is the Kounias / Hunter / Ditlevsen bound
//! `P_1 + P_2 - P_12 + sum_{i>=3} [P_i - max_{j<i} P_ji]`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{reorder, Ordering, ProbabilityMatrix};

/// Largest meaningful level for `n` events. A single event has only level 1.
pub fn max_level(n: usize) -> usize {
    n.saturating_sub(1).max(1)
}

pub(crate) fn check_level(n: usize, level: usize) -> Result<()> {
    let max = max_level(n);
    if level == 0 || level > max {
        return Err(Error::LevelOutOfRange { level, max });
    }
    Ok(())
}

/// Pairwise data for one line: the target's overlaps with each predecessor and
/// the `min(P_{ri}, P_{si}, P_{rs})` table shared by every sequence.
pub(crate) struct LineTable {
    k: usize,
    to_target: Vec<f64>,
    mins: Vec<f64>,
}

impl LineTable {
    pub(crate) fn new(matrix: &ProbabilityMatrix, target: usize, preds: &[usize]) -> Self {
        let k = preds.len();
        let to_target: Vec<f64> = preds.iter().map(|&j| matrix.get(j, target)).collect();
        let mut mins = vec![0.0; k * k];
        for r in 0..k {
            for s in 0..k {
                if r != s {
                    mins[r * k + s] = to_target[r].min(to_target[s]).min(matrix.get(preds[r], preds[s]));
                }
            }
        }
        Self { k, to_target, mins }
    }

    /// Best sequence sum at each length `0..=depth` (index 0 is the empty sequence).
    pub(crate) fn best_by_length(&self, depth: usize) -> Vec<f64> {
        let depth = depth.min(self.k);
        let mut best = vec![0.0; depth + 1];
        if depth > 0 {
            let mut seq = Vec::with_capacity(depth);
            self.explore(&mut seq, 0, 0.0, depth, &mut best);
        }
        best
    }

    /// The deduction at `level`.
    pub(crate) fn deduction(&self, level: usize) -> f64 {
        let best = self.best_by_length(level);
        best[best.len() - 1]
    }

    fn explore(&self, seq: &mut Vec<usize>, used: u64, partial: f64, depth: usize, best: &mut [f64]) {
        let len = seq.len() + 1;
        for c in 0..self.k {
            if used & (1 << c) != 0 {
                continue;
            }
            let row = &self.mins[c * self.k..(c + 1) * self.k];
            let mut overlap = 0.0;
            for &s in seq.iter() {
                overlap += row[s];
            }
            let sum = partial + (self.to_target[c] - overlap).max(0.0);
            if sum > best[len] {
                best[len] = sum;
            }
            if len < depth {
                seq.push(c);
                self.explore(seq, used | (1 << c), sum, depth, best);
                seq.pop();
            }
        }
    }
}

/// Deduction for line `i` (0-based) at `level`, in the matrix's own order.
/// Zero for the first line.
pub fn line_deduction(matrix: &ProbabilityMatrix, i: usize, level: usize) -> Result<f64> {
    let n = matrix.n();
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i + 1, n });
    }
    check_level(n, level)?;
    let preds: Vec<usize> = (0..i).collect();
    Ok(LineTable::new(matrix, i, &preds).deduction(level))
}

/// Level-`level` bound for `ordering`.
pub fn bound(matrix: &ProbabilityMatrix, ordering: &Ordering, level: usize) -> Result<f64> {
    check_level(matrix.n(), level)?;
    let q = reorder(matrix, ordering)?;
    Ok(bound_in_order(&q, level))
}

/// Level bound of an already-permuted matrix. Lines are clipped at zero and
/// summed in index order.
pub(crate) fn bound_in_order(q: &ProbabilityMatrix, level: usize) -> f64 {
    let mut total = 0.0;
    let mut preds = Vec::with_capacity(q.n());
    for i in 0..q.n() {
        let d = LineTable::new(q, i, &preds).deduction(level);
        total += (q.first_order(i) - d).max(0.0);
        preds.push(i);
    }
    total
}

/// `B_1 .. B_max_level` for one ordering.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelBounds {
    pub ordering: Ordering,
    pub values: Vec<f64>,
}

impl LevelBounds {
    pub fn level(&self, m: usize) -> f64 {
        self.values[m - 1]
    }
}

pub fn bound_all_levels(matrix: &ProbabilityMatrix, ordering: &Ordering, max_level: usize) -> Result<LevelBounds> {
    check_level(matrix.n(), max_level)?;
    let q = reorder(matrix, ordering)?;
    let n = q.n();
    let mut totals = vec![0.0; max_level];
    let mut preds = Vec::with_capacity(n);
    for i in 0..n {
        let best = LineTable::new(&q, i, &preds).best_by_length(max_level);
        for (m, total) in totals.iter_mut().enumerate() {
            let d = best[(m + 1).min(best.len() - 1)];
            *total += (q.first_order(i) - d).max(0.0);
        }
        preds.push(i);
    }
    Ok(LevelBounds {
        ordering: ordering.clone(),
        values: totals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;

    fn approx(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn last_line_deductions_of_four_event_system() {
        let m = reference::four_element_series();
        approx(line_deduction(&m, 3, 1).unwrap(), 0.09525911, 1e-15);
        approx(line_deduction(&m, 3, 2).unwrap(), 0.09525911, 1e-15);
        for level in 1..=3 {
            assert_eq!(line_deduction(&m, 0, level).unwrap(), 0.0);
        }
    }

    #[test]
    fn line_deduction_range_errors() {
        let m = reference::four_element_series();
        assert!(matches!(line_deduction(&m, 4, 1), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(line_deduction(&m, 1, 0), Err(Error::LevelOutOfRange { .. })));
        assert!(matches!(line_deduction(&m, 1, 4), Err(Error::LevelOutOfRange { .. })));
    }

    #[test]
    fn identity_order_bounds_of_four_event_system() {
        let m = reference::four_element_series();
        let id = Ordering::identity(4);
        let expected = m.first_order_sum() - 0.17106964 - 0.13021655 - 0.09525911;
        approx(bound(&m, &id, 1).unwrap(), 0.36328814, 1e-12);
        approx(bound(&m, &id, 1).unwrap(), expected, 1e-15);
        approx(bound(&m, &id, 2).unwrap(), 0.36328814, 1e-12);
    }

    #[test]
    fn reversed_order_improves_at_level_two() {
        let m = reference::four_element_series();
        let rev: Ordering = "4,3,2,1".parse().unwrap();
        let lb = bound_all_levels(&m, &rev, 3).unwrap();
        assert!(lb.level(2) < lb.level(1));
    }

    #[test]
    fn no_overlap_gives_first_order_sum() {
        let m =
            ProbabilityMatrix::from_rows(vec![vec![0.1, 0.0, 0.0], vec![0.0, 0.2, 0.0], vec![0.0, 0.0, 0.3]]).unwrap();
        for level in 1..=2 {
            approx(bound(&m, &"3,1,2".parse().unwrap(), level).unwrap(), 0.6, 1e-15);
        }
    }

    #[test]
    fn single_event_bound_is_its_probability() {
        let m = ProbabilityMatrix::from_rows(vec![vec![0.37]]).unwrap();
        assert_eq!(bound(&m, &Ordering::identity(1), 1).unwrap(), 0.37);
        assert_eq!(
            bound_all_levels(&m, &Ordering::identity(1), 1).unwrap().values,
            vec![0.37]
        );
    }

    #[test]
    fn all_levels_agree_with_single_level_bitwise() {
        let m = reference::random_six_event();
        let o: Ordering = "3,6,1,5,2,4".parse().unwrap();
        let lb = bound_all_levels(&m, &o, 5).unwrap();
        for level in 1..=5 {
            assert_eq!(lb.level(level), bound(&m, &o, level).unwrap());
        }
        assert!(lb.values.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn clipping_keeps_inconsistent_input_a_probability() {
        // P_12 exceeds P_2: the second line would go negative without the clip.
        let m = ProbabilityMatrix::from_rows(vec![vec![0.5, 0.4], vec![0.4, 0.1]]).unwrap();
        assert_eq!(bound(&m, &Ordering::identity(2), 1).unwrap(), 0.5);
    }
}
