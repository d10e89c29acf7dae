//! Seeded Monte Carlo studies of how often a higher level improves the best
//! bound, plus the deterministic δ sweep.
//!
//! Every trial draws from its own substream `(seed, trial index)`, and results
//! are aggregated as integer counts, so estimates are bitwise reproducible
//! whatever the thread count.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bound::max_level;
use crate::error::{Error, Result};
use crate::matrix::{conditional_uniform_with, generate_delta, DeltaModel};
use crate::rng::draw_rng;
use crate::search::{
    optimal_bounds_sequential, BoundTable, SearchSummary, Tolerance, DEFAULT_ARGMIN_CAP, DEFAULT_SEARCH_CAP,
};

/// Probability that a given line gains under level 2 for three consecutive
/// independent uniform events.
pub const LINE_GAIN_PROBABILITY: f64 = 17.0 / 108.0;

/// Exact values of the four parts of the line-gain event, split by where
/// `P_i` falls relative to `P_{i-1}` and `P_{i-2}`; same order as
/// [`LineGainEstimate::parts`].
pub const LINE_GAIN_PARTS: [f64; 4] = [1.0 / 12.0, 1.0 / 54.0, 1.0 / 36.0, 1.0 / 36.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateResult {
    pub estimate: f64,
    pub std_error: f64,
    pub trials: u64,
    pub seed: u64,
}

impl EstimateResult {
    pub fn from_count(hits: u64, trials: u64, seed: u64) -> Self {
        let estimate = hits as f64 / trials as f64;
        let std_error = (estimate * (1.0 - estimate) / trials as f64).sqrt();
        Self {
            estimate,
            std_error,
            trials,
            seed,
        }
    }
}

fn count_hits(trials: u64, hit: impl Fn(u64) -> Result<bool> + Sync) -> Result<u64> {
    (0..trials)
        .into_par_iter()
        .map(|t| hit(t).map(u64::from))
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

/// Fraction of conditional-uniform matrices of size `n` whose best level-`m+1`
/// bound is strictly below the best level-`m` bound.
pub fn estimate_improvement_probability(n: usize, m: usize, trials: u64, seed: u64) -> Result<EstimateResult> {
    if trials == 0 {
        return Err(Error::NoTrials);
    }
    if m == 0 || m + 1 > max_level(n) {
        return Err(Error::LevelOutOfRange {
            level: m + 1,
            max: max_level(n),
        });
    }
    if n > DEFAULT_SEARCH_CAP {
        return Err(Error::SearchCapExceeded {
            n,
            cap: DEFAULT_SEARCH_CAP,
        });
    }
    let tol = Tolerance::default();
    let hits = count_hits(trials, |t| {
        let matrix = conditional_uniform_with(n, &mut draw_rng(seed, t))?;
        let best = optimal_bounds_sequential(&matrix, &[m, m + 1], DEFAULT_SEARCH_CAP)?;
        Ok(tol.strictly_less(best[1], best[0]))
    })?;
    Ok(EstimateResult::from_count(hits, trials, seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticBound {
    pub value: f64,
    /// True when `n < 3`, where the bound degenerates to 0.
    pub vacuous: bool,
}

/// `1 - (1 - 17/108)^floor(n/3)`: a lower bound on the probability that level 2
/// beats the best level-1 bound, tending to 1 as `n` grows.
pub fn asymptotic_lower_bound(n: usize) -> AsymptoticBound {
    let groups = (n / 3) as i32;
    AsymptoticBound {
        value: 1.0 - (1.0 - LINE_GAIN_PROBABILITY).powi(groups),
        vacuous: groups == 0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineGainEstimate {
    pub total: EstimateResult,
    /// `P_i` above both neighbours, below both, between with `P_{i-1}` larger,
    /// between with `P_{i-2}` larger.
    pub parts: [EstimateResult; 4],
}

/// Simulates three independent uniform first-order probabilities and four
/// uniform multipliers, counting the event that both second-order overlaps of
/// line `i` dominate the corresponding cross terms.
pub fn estimate_line_gain_probability(trials: u64, seed: u64) -> Result<LineGainEstimate> {
    if trials == 0 {
        return Err(Error::NoTrials);
    }
    let counts = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = draw_rng(seed, t);
            let mut u = [0.0f64; 7];
            for x in u.iter_mut() {
                *x = rng.random();
            }
            let [p2, p1, p0, u1, u2, u3, u4] = u;
            let gain = p1.min(p0) * u1 > p1 * u2 && p2.min(p0) * u3 > p2 * u4;
            let mut c = [0u64; 5];
            if gain {
                c[0] = 1;
                let part = if p0 > p1 && p0 > p2 {
                    1
                } else if p0 < p1 && p0 < p2 {
                    2
                } else if p1 > p0 {
                    3
                } else {
                    4
                };
                c[part] = 1;
            }
            c
        })
        .reduce(|| [0u64; 5], |a, b| std::array::from_fn(|k| a[k] + b[k]));
    Ok(LineGainEstimate {
        total: EstimateResult::from_count(counts[0], trials, seed),
        parts: std::array::from_fn(|k| EstimateResult::from_count(counts[k + 1], trials, seed)),
    })
}

/// One row of an improvement sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImprovementRow {
    pub n: usize,
    pub pair: [usize; 2],
    pub trials: u64,
    pub estimate: f64,
    pub std_error: f64,
    pub lower_bound: f64,
}

impl ImprovementRow {
    pub fn new(n: usize, m: usize, estimate: &EstimateResult) -> Self {
        Self {
            n,
            pair: [m, m + 1],
            trials: estimate.trials,
            estimate: estimate.estimate,
            std_error: estimate.std_error,
            lower_bound: asymptotic_lower_bound(n).value,
        }
    }
}

pub fn improvement_sweep(ns: &[usize], m: usize, trials: u64, seed: u64) -> Result<Vec<ImprovementRow>> {
    ns.iter()
        .map(|&n| {
            Ok(ImprovementRow::new(
                n,
                m,
                &estimate_improvement_probability(n, m, trials, seed)?,
            ))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImprovementCount {
    pub from: usize,
    pub to: usize,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaSweepEntry {
    pub delta: f64,
    pub summaries: Vec<SearchSummary>,
    /// Orderings where `B_to < B_from` strictly, for every pair of levels.
    pub improvements: Vec<ImprovementCount>,
}

impl DeltaSweepEntry {
    pub fn improvement(&self, from: usize, to: usize) -> Option<u64> {
        self.improvements
            .iter()
            .find(|c| c.from == from && c.to == to)
            .map(|c| c.count)
    }
}

/// Exhaustive search of the `P_ij = P_i P_j + delta` model for each `delta`.
pub fn delta_sweep(first_order: &[f64], deltas: &[f64], max_level: usize) -> Result<Vec<DeltaSweepEntry>> {
    let tol = Tolerance::default();
    deltas
        .iter()
        .map(|&delta| {
            let matrix = generate_delta(&DeltaModel {
                first_order: first_order.to_vec(),
                delta,
            })?;
            let table = BoundTable::compute(&matrix, max_level, DEFAULT_SEARCH_CAP)?;
            let mut improvements = Vec::new();
            for from in 1..=max_level {
                for to in (from + 1)..=max_level {
                    improvements.push(ImprovementCount {
                        from,
                        to,
                        count: table.strict_improvements(from, to, tol),
                    });
                }
            }
            Ok(DeltaSweepEntry {
                delta,
                summaries: table.summaries(tol, DEFAULT_ARGMIN_CAP),
                improvements,
            })
        })
        .collect()
}
