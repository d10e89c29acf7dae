//! Second-order probability matrices and event orderings.
//!
//! A [`ProbabilityMatrix`] stores `P_i` on the diagonal and `P_ij` off the
//! diagonal, always in absolute probability units. Indices are 0-based in the
//! Rust API and 1-based in every external format (JSON, CLI flags, error
//! messages).

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rng::draw_rng;

/// Absolute slack on the Fréchet inequalities. Published matrices are rounded
/// to 8-9 digits, so exact comparisons would reject them.
pub const FRECHET_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix {
    n: usize,
    p: Vec<f64>,
}

impl ProbabilityMatrix {
    /// Builds a matrix from full rows. Only the shape is checked here; call
    /// [`validate`](Self::validate) or [`from_rows_validated`](Self::from_rows_validated)
    /// for the probability invariants.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }
        let mut p = Vec::with_capacity(n * n);
        for (row, values) in rows.into_iter().enumerate() {
            if values.len() != n {
                return Err(Error::NotSquare {
                    row: row + 1,
                    len: values.len(),
                    expected: n,
                });
            }
            p.extend(values);
        }
        Ok(Self { n, p })
    }

    pub fn from_rows_validated(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows)?.into_validated()
    }

    /// Builds a symmetric matrix from its upper triangle, multiplying every
    /// entry by `scale`. Row `i` holds `p[i][i..n]`.
    pub fn from_upper_triangle(upper: &[&[f64]], scale: f64) -> Result<Self> {
        let n = upper.len();
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }
        let mut p = vec![0.0; n * n];
        for (i, row) in upper.iter().enumerate() {
            if row.len() != n - i {
                return Err(Error::NotSquare {
                    row: i + 1,
                    len: row.len() + i,
                    expected: n,
                });
            }
            for (k, &v) in row.iter().enumerate() {
                let j = i + k;
                p[i * n + j] = v * scale;
                p[j * n + i] = v * scale;
            }
        }
        Self { n, p }.into_validated()
    }

    pub(crate) fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut p = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                p.push(f(i, j));
            }
        }
        Self { n, p }
    }

    fn into_validated(self) -> Result<Self> {
        let report = self.validate();
        if report.is_valid() {
            Ok(self)
        } else {
            Err(Error::InvalidMatrix(report))
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.n + j]
    }

    /// First-order probability `P_i`.
    #[inline]
    pub fn first_order(&self, i: usize) -> f64 {
        self.get(i, i)
    }

    pub fn first_order_sum(&self) -> f64 {
        (0..self.n).map(|i| self.first_order(i)).sum()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.p.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    /// Checks symmetry, the diagonal range and the Fréchet bounds
    /// `0 <= P_ij <= min(P_i, P_j)`.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let n = self.n;
        for i in 0..n {
            let d = self.get(i, i);
            if !(0.0..=1.0).contains(&d) {
                violations.push(Violation::DiagonalOutOfRange { i, value: d });
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let upper = self.get(i, j);
                let lower = self.get(j, i);
                if upper != lower {
                    violations.push(Violation::Asymmetric { i, j, upper, lower });
                }
                let limit = self.get(i, i).min(self.get(j, j));
                if upper.is_nan() || upper < -FRECHET_SLACK || upper > limit + FRECHET_SLACK {
                    violations.push(Violation::Frechet {
                        i,
                        j,
                        value: upper,
                        limit,
                    });
                }
            }
        }
        ValidationReport { violations }
    }

    pub fn to_document(&self) -> MatrixDocument {
        MatrixDocument {
            n: self.n,
            matrix: self.rows(),
            scale: None,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let doc: MatrixDocument = serde_json::from_str(s)?;
        doc.into_matrix_unvalidated()?.into_validated()
    }
}

/// A single broken invariant. Indices are 0-based; `Display` prints them 1-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Asymmetric { i: usize, j: usize, upper: f64, lower: f64 },
    DiagonalOutOfRange { i: usize, value: f64 },
    Frechet { i: usize, j: usize, value: f64, limit: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::Asymmetric { i, j, upper, lower } => {
                write!(
                    f,
                    "p[{}][{}] = {upper} differs from p[{}][{}] = {lower}",
                    i + 1,
                    j + 1,
                    j + 1,
                    i + 1
                )
            }
            Violation::DiagonalOutOfRange { i, value } => {
                write!(f, "p[{}][{}] = {value} is outside [0, 1]", i + 1, i + 1)
            }
            Violation::Frechet { i, j, value, limit } => {
                write!(
                    f,
                    "p[{}][{}] = {value} is outside [0, min(P_{}, P_{}) = {limit}]",
                    i + 1,
                    j + 1,
                    i + 1,
                    j + 1
                )
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "no violations");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// On-disk matrix format: `{"n": .., "matrix": [[..], ..], "scale": ..}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDocument {
    pub n: usize,
    pub matrix: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

impl MatrixDocument {
    /// Applies `scale` and checks the shape, leaving the probability
    /// invariants to the caller.
    pub fn into_matrix_unvalidated(self) -> Result<ProbabilityMatrix> {
        if self.matrix.len() != self.n {
            return Err(Error::DimensionMismatch {
                declared: self.n,
                actual: self.matrix.len(),
            });
        }
        let scale = self.scale.unwrap_or(1.0);
        let rows = self
            .matrix
            .into_iter()
            .map(|row| row.into_iter().map(|v| v * scale).collect())
            .collect();
        ProbabilityMatrix::from_rows(rows)
    }

    pub fn into_matrix(self) -> Result<ProbabilityMatrix> {
        self.into_matrix_unvalidated()?.into_validated()
    }
}

/// A permutation of the event indices: `ordering[a]` is the event evaluated
/// at position `a`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ordering(Vec<usize>);

impl Ordering {
    /// 0-based constructor; rejects anything that is not a bijection on `0..n`.
    pub fn new(sigma: Vec<usize>) -> Result<Self> {
        let n = sigma.len();
        let mut seen = vec![false; n];
        for &s in &sigma {
            if s >= n {
                return Err(Error::NotPermutation {
                    n,
                    detail: format!("index {} out of range", s + 1),
                });
            }
            if std::mem::replace(&mut seen[s], true) {
                return Err(Error::NotPermutation {
                    n,
                    detail: format!("index {} repeated", s + 1),
                });
            }
        }
        Ok(Self(sigma))
    }

    pub fn from_one_based(sigma: &[usize]) -> Result<Self> {
        let n = sigma.len();
        let zero_based = sigma
            .iter()
            .map(|&s| {
                s.checked_sub(1).ok_or_else(|| Error::NotPermutation {
                    n,
                    detail: "index 0 in a 1-based ordering".into(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(zero_based)
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|s| s + 1).collect()
    }

    pub fn inverse(&self) -> Ordering {
        let mut inv = vec![0; self.0.len()];
        for (a, &s) in self.0.iter().enumerate() {
            inv[s] = a;
        }
        Ordering(inv)
    }

    /// Swaps the events at positions `a` and `b`.
    pub fn swapped(&self, a: usize, b: usize) -> Ordering {
        let mut v = self.0.clone();
        v.swap(a, b);
        Ordering(v)
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if self.len() != n {
            return Err(Error::OrderingLength {
                got: self.len(),
                expected: n,
            });
        }
        Ok(())
    }
}

/// Parses a 1-based ordering separated by commas or dashes: `"3,1,2,4"` or `"3-1-2-4"`.
impl FromStr for Ordering {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts = s
            .split([',', '-'])
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::OrderingSyntax(s.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_one_based(&parts)
    }
}

/// Dash-separated, 1-based: `3-1-2-4`.
impl fmt::Display for Ordering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, s) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, "-")?;
            }
            write!(f, "{}", s + 1)?;
        }
        Ok(())
    }
}

impl Serialize for Ordering {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.one_based().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Ordering {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(deserializer)?;
        Ordering::from_one_based(&v).map_err(serde::de::Error::custom)
    }
}

/// `q[a][b] = p[sigma[a]][sigma[b]]`: evaluating a bound in `ordering` is the
/// same as evaluating it in identity order on the result.
pub fn reorder(matrix: &ProbabilityMatrix, ordering: &Ordering) -> Result<ProbabilityMatrix> {
    ordering.check_len(matrix.n())?;
    let s = ordering.as_slice();
    Ok(ProbabilityMatrix::from_fn(matrix.n(), |a, b| matrix.get(s[a], s[b])))
}

/// First-order probabilities with a common pairwise offset:
/// `P_ij = P_i P_j + delta`. `delta = 0` is pairwise independence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaModel {
    pub first_order: Vec<f64>,
    pub delta: f64,
}

impl DeltaModel {
    /// Allowed `delta` interval for the pair `(i, j)`.
    pub fn delta_range(&self, i: usize, j: usize) -> (f64, f64) {
        let (pi, pj) = (self.first_order[i], self.first_order[j]);
        (-pi * pj, pi.min(pj) - pi * pj)
    }

    pub fn check(&self) -> Result<()> {
        if self.first_order.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        for (index, &value) in self.first_order.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::FirstOrderOutOfRange {
                    index: index + 1,
                    value,
                });
            }
        }
        let n = self.first_order.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let (low, high) = self.delta_range(i, j);
                if self.delta < low - FRECHET_SLACK || self.delta > high + FRECHET_SLACK {
                    return Err(Error::DeltaOutOfRange {
                        delta: self.delta,
                        low,
                        high,
                        i: i + 1,
                        j: j + 1,
                    });
                }
            }
        }
        Ok(())
    }
}

pub fn generate_delta(model: &DeltaModel) -> Result<ProbabilityMatrix> {
    model.check()?;
    let p = &model.first_order;
    let m = ProbabilityMatrix::from_fn(p.len(), |i, j| if i == j { p[i] } else { p[i] * p[j] + model.delta });
    m.into_validated()
}

/// Random matrix with `P_i ~ U[0,1]` and `P_ij = min(P_i, P_j) U_ij`, all
/// uniforms independent. Draws the diagonal first, then the upper triangle
/// row by row.
pub fn conditional_uniform_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<ProbabilityMatrix> {
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    let diag: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        p[i * n + i] = diag[i];
        for j in (i + 1)..n {
            let v = diag[i].min(diag[j]) * rng.random::<f64>();
            p[i * n + j] = v;
            p[j * n + i] = v;
        }
    }
    Ok(ProbabilityMatrix { n, p })
}

/// Seeded [`conditional_uniform_with`]; uses draw 0 of `seed`.
pub fn generate_conditional_uniform(n: usize, seed: u64) -> Result<ProbabilityMatrix> {
    conditional_uniform_with(n, &mut draw_rng(seed, 0))
}
