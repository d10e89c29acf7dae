//! Exhaustive search over orderings.
//!
//! The deduction for a line depends only on which events precede it, not on
//! their order, so for each level we tabulate it once per `(event, predecessor
//! set)` and then sweep all `n!` orderings with table lookups. The result is
//! bitwise identical to calling [`bound`](crate::bound::bound) per ordering.
//!
//! Orderings are indexed by lexicographic rank. Work is split into contiguous
//! rank blocks and every value lands at its rank, so statistics are reduced in
//! rank order and do not depend on the number of worker threads.

use std::io::{self, Write};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::bound::{check_level, LineTable};
use crate::error::{Error, Result};
use crate::matrix::{Ordering, ProbabilityMatrix};

/// Default largest `n` for exhaustive search (10! = 3,628,800 orderings).
pub const DEFAULT_SEARCH_CAP: usize = 10;
/// Default number of argmin orderings kept per level.
pub const DEFAULT_ARGMIN_CAP: usize = 32;

const BLOCK: usize = 2048;

/// Equality tolerance for comparing bound values: `|a - b| <= max(relative * |b|, absolute)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerance {
    pub relative: f64,
    pub absolute: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            relative: 1e-9,
            absolute: 1e-15,
        }
    }
}

impl Tolerance {
    pub fn relative(relative: f64) -> Self {
        Self {
            relative,
            ..Self::default()
        }
    }

    fn slack(&self, reference: f64) -> f64 {
        (self.relative * reference.abs()).max(self.absolute)
    }

    pub fn ties(&self, value: f64, reference: f64) -> bool {
        (value - reference).abs() <= self.slack(reference)
    }

    /// `a < b` by more than round-off.
    pub fn strictly_less(&self, a: f64, b: f64) -> bool {
        a < b - self.slack(b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub max_level: usize,
    pub tolerance: Tolerance,
    pub argmin_cap: usize,
    pub cap: usize,
}

impl SearchConfig {
    pub fn new(max_level: usize) -> Self {
        Self {
            max_level,
            tolerance: Tolerance::default(),
            argmin_cap: DEFAULT_ARGMIN_CAP,
            cap: DEFAULT_SEARCH_CAP,
        }
    }
}

/// Statistics of one level's bound over every ordering.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchSummary {
    pub level: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation over the mean.
    pub cov: f64,
    pub minimizer_count: u64,
    pub argmin_orderings: Vec<Ordering>,
    pub wall_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation (divides by `N - 1`; zero for a single value).
    pub sd: f64,
    pub sd_population: f64,
    /// `sd / mean`, zero when the mean is zero.
    pub cov: f64,
}

/// Mean, median (midpoint for even counts), standard deviations and COV.
/// Sums run in slice order.
pub fn summary_stats(values: &[f64]) -> Result<Stats> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let count = values.len() as f64;
    let mean = values.iter().sum::<f64>() / count;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let sd = if values.len() > 1 {
        (ss / (count - 1.0)).sqrt()
    } else {
        0.0
    };
    let sd_population = (ss / count).sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len().is_multiple_of(2) {
        0.5 * (sorted[mid - 1] + sorted[mid])
    } else {
        sorted[mid]
    };
    let cov = if mean != 0.0 { sd / mean } else { 0.0 };
    Ok(Stats {
        mean,
        median,
        sd,
        sd_population,
        cov,
    })
}

/// Per-(event, predecessor set) deductions at one level.
struct LineMemo {
    n: usize,
    table: Vec<f64>,
}

impl LineMemo {
    fn build(matrix: &ProbabilityMatrix, level: usize, parallel: bool) -> Self {
        let n = matrix.n();
        let masks = 1usize << n;
        let cell = |k: usize| {
            let (event, mask) = (k / masks, k % masks);
            if mask & (1 << event) != 0 {
                return 0.0;
            }
            let preds: Vec<usize> = (0..n).filter(|j| mask & (1 << j) != 0).collect();
            LineTable::new(matrix, event, &preds).deduction(level)
        };
        let table = if parallel {
            (0..n * masks).into_par_iter().map(cell).collect()
        } else {
            (0..n * masks).map(cell).collect()
        };
        Self { n, table }
    }

    #[inline]
    fn bound(&self, matrix: &ProbabilityMatrix, perm: &[usize]) -> f64 {
        let mut total = 0.0;
        let mut mask = 0usize;
        for &e in perm {
            let d = self.table[(e << self.n) | mask];
            total += (matrix.first_order(e) - d).max(0.0);
            mask |= 1 << e;
        }
        total
    }
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// Ordering of lexicographic rank `rank` among permutations of `0..n`.
pub fn unrank(n: usize, mut rank: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(n);
    for k in (0..n).rev() {
        let f = factorial(k);
        out.push(pool.remove(rank / f));
        rank %= f;
    }
    out
}

/// Advances to the next permutation in lexicographic order; false at the last one.
pub fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::SearchCapExceeded { n, cap });
    }
    Ok(())
}

/// Bound values for every ordering and level, indexed by lexicographic rank.
#[derive(Debug, Clone)]
pub struct BoundTable {
    n: usize,
    values: Vec<Vec<f64>>,
    level_times: Vec<f64>,
}

impl BoundTable {
    pub fn compute(matrix: &ProbabilityMatrix, max_level: usize, cap: usize) -> Result<Self> {
        let n = matrix.n();
        check_cap(n, cap)?;
        check_level(n, max_level)?;
        let total = factorial(n);
        let mut values = Vec::with_capacity(max_level);
        let mut level_times = Vec::with_capacity(max_level);
        for level in 1..=max_level {
            let start = Instant::now();
            let memo = LineMemo::build(matrix, level, true);
            let mut out = vec![0.0; total];
            out.par_chunks_mut(BLOCK).enumerate().for_each(|(b, chunk)| {
                let mut perm = unrank(n, b * BLOCK);
                for slot in chunk.iter_mut() {
                    *slot = memo.bound(matrix, &perm);
                    next_permutation(&mut perm);
                }
            });
            values.push(out);
            level_times.push(start.elapsed().as_secs_f64());
        }
        Ok(Self { n, values, level_times })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_level(&self) -> usize {
        self.values.len()
    }

    /// Number of orderings (`n!`).
    pub fn len(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Bound values at `level` (1-based), by ordering rank.
    pub fn level(&self, level: usize) -> &[f64] {
        &self.values[level - 1]
    }

    pub fn ordering(&self, rank: usize) -> Ordering {
        Ordering::new(unrank(self.n, rank)).expect("unrank yields a permutation")
    }

    pub fn level_time(&self, level: usize) -> f64 {
        self.level_times[level - 1]
    }

    pub fn summary(&self, level: usize, tolerance: Tolerance, argmin_cap: usize) -> SearchSummary {
        let values = self.level(level);
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let stats = summary_stats(values).expect("at least one ordering");
        let minimizers: Vec<usize> = (0..values.len()).filter(|&r| tolerance.ties(values[r], min)).collect();
        SearchSummary {
            level,
            min,
            max,
            mean: stats.mean,
            median: stats.median,
            cov: stats.cov,
            minimizer_count: minimizers.len() as u64,
            argmin_orderings: minimizers.iter().take(argmin_cap).map(|&r| self.ordering(r)).collect(),
            wall_time: self.level_time(level),
        }
    }

    pub fn summaries(&self, tolerance: Tolerance, argmin_cap: usize) -> Vec<SearchSummary> {
        (1..=self.max_level())
            .map(|m| self.summary(m, tolerance, argmin_cap))
            .collect()
    }

    /// Orderings where `B_to < B_from` by more than the tolerance.
    pub fn strict_improvements(&self, from: usize, to: usize, tolerance: Tolerance) -> u64 {
        let (a, b) = (self.level(from), self.level(to));
        a.iter()
            .zip(b)
            .filter(|&(&x, &y)| tolerance.strictly_less(y, x))
            .count() as u64
    }

    /// Ranks of orderings whose value at `level` ties the minimum.
    pub fn minimizers(&self, level: usize, tolerance: Tolerance) -> Vec<usize> {
        let values = self.level(level);
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        (0..values.len()).filter(|&r| tolerance.ties(values[r], min)).collect()
    }

    /// `(ordering, level)` pairs where the next level is larger. Exact comparison.
    pub fn monotonicity_violations(&self) -> u64 {
        self.values
            .windows(2)
            .map(|w| w[0].iter().zip(&w[1]).filter(|&(&lo, &hi)| hi > lo).count() as u64)
            .sum()
    }

    /// One row per ordering: `perm_index,ordering,B1,..,BL`, 9 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "perm_index,ordering")?;
        for m in 1..=self.max_level() {
            write!(w, ",B{m}")?;
        }
        writeln!(w)?;
        let mut perm = unrank(self.n, 0);
        for rank in 0..self.len() {
            write!(w, "{},{}", rank + 1, Ordering::new(perm.clone()).expect("permutation"))?;
            for level in &self.values {
                write!(w, ",{}", format_sig9(level[rank]))?;
            }
            writeln!(w)?;
            next_permutation(&mut perm);
        }
        Ok(())
    }
}

/// Decimal rendering with 9 significant digits.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (8 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Per-level summaries over all `n!` orderings.
pub fn exhaustive_search(matrix: &ProbabilityMatrix, config: &SearchConfig) -> Result<Vec<SearchSummary>> {
    let table = BoundTable::compute(matrix, config.max_level, config.cap)?;
    Ok(table.summaries(config.tolerance, config.argmin_cap))
}

/// Best bound at `level` and the lowest-rank ordering attaining it.
pub fn optimal_bound(matrix: &ProbabilityMatrix, level: usize) -> Result<(f64, Ordering)> {
    let n = matrix.n();
    check_cap(n, DEFAULT_SEARCH_CAP)?;
    check_level(n, level)?;
    let memo = LineMemo::build(matrix, level, true);
    let total = factorial(n);
    let best = (0..total.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut perm = unrank(n, b * BLOCK);
            let mut best = (f64::INFINITY, usize::MAX);
            for rank in (b * BLOCK)..((b + 1) * BLOCK).min(total) {
                let v = memo.bound(matrix, &perm);
                if v < best.0 {
                    best = (v, rank);
                }
                next_permutation(&mut perm);
            }
            best
        })
        .reduce(
            || (f64::INFINITY, usize::MAX),
            |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        );
    Ok((best.0, Ordering::new(unrank(n, best.1)).expect("permutation")))
}

/// Optimal bounds at several levels, single-threaded (callers parallelize
/// across matrices).
pub(crate) fn optimal_bounds_sequential(matrix: &ProbabilityMatrix, levels: &[usize], cap: usize) -> Result<Vec<f64>> {
    let n = matrix.n();
    check_cap(n, cap)?;
    for &level in levels {
        check_level(n, level)?;
    }
    let memos: Vec<LineMemo> = levels.iter().map(|&m| LineMemo::build(matrix, m, false)).collect();
    let mut best = vec![f64::INFINITY; levels.len()];
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        for (b, memo) in best.iter_mut().zip(&memos) {
            *b = b.min(memo.bound(matrix, &perm));
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(best)
}

/// Prim-style ordering: start from the pair with the largest `P_ij`, then keep
/// appending the unused event with the largest overlap with any placed event.
/// Ties go to the lowest index. For a single event returns the identity.
pub fn greedy_ordering(matrix: &ProbabilityMatrix) -> Ordering {
    let n = matrix.n();
    if n < 2 {
        return Ordering::identity(n);
    }
    let mut first = (0, 1);
    for i in 0..n {
        for j in (i + 1)..n {
            if matrix.get(i, j) > matrix.get(first.0, first.1) {
                first = (i, j);
            }
        }
    }
    let mut placed = vec![first.0, first.1];
    let mut link: Vec<f64> = (0..n)
        .map(|k| matrix.get(first.0, k).max(matrix.get(first.1, k)))
        .collect();
    let mut used = vec![false; n];
    used[first.0] = true;
    used[first.1] = true;
    while placed.len() < n {
        let next = (0..n)
            .filter(|&k| !used[k])
            .fold(None, |acc: Option<usize>, k| match acc {
                Some(b) if link[b] >= link[k] => Some(b),
                _ => Some(k),
            })
            .expect("an unused event remains");
        used[next] = true;
        placed.push(next);
        for (k, l) in link.iter_mut().enumerate() {
            *l = l.max(matrix.get(next, k));
        }
    }
    Ordering::new(placed).expect("each event placed once")
}
