//! Moment vectors, Hankel and Vandermonde matrices, maximal minors and
//! numerical rank.

use itertools::Itertools;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::signal::Signal;
use crate::MAX_SIZE;

/// A non-empty sequence of moments `nu_0, .., nu_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MomentVector(Vec<f64>);

impl MomentVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Shape("moment vector must be non-empty".into()));
        }
        Ok(MomentVector(entries))
    }

    pub(crate) fn from_vec_unchecked(entries: Vec<f64>) -> Self {
        debug_assert!(!entries.is_empty());
        MomentVector(entries)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    /// The first `n` entries.
    pub fn truncate(&self, n: usize) -> Result<MomentVector> {
        if n == 0 || n > self.len() {
            return Err(Error::Shape(format!("cannot take {n} of {} moments", self.len())));
        }
        Ok(MomentVector(self.0[..n].to_vec()))
    }

    /// Euclidean distance over the coordinates in `indices`.
    pub fn distance_on(&self, other: &MomentVector, indices: &[usize]) -> f64 {
        indices
            .iter()
            .map(|&k| (self.0[k] - other.0[k]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl TryFrom<Vec<f64>> for MomentVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        MomentVector::new(v)
    }
}

impl From<MomentVector> for Vec<f64> {
    fn from(m: MomentVector) -> Vec<f64> {
        m.0
    }
}

impl std::ops::Index<usize> for MomentVector {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

/// The `d x d` Hankel matrix with entry `(i, j) = nu_{i+j}`.
///
/// Stored by its `2d - 1` generating moments, so anti-diagonals are constant
/// by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelMatrix {
    size: usize,
    generators: Vec<f64>,
}

impl HankelMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.generators[i + j]
    }

    /// The moments `nu_0 .. nu_{2d-2}` that fill the matrix.
    pub fn generators(&self) -> &[f64] {
        &self.generators
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.size, self.size, |i, j| self.entry(i, j))
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.size)
            .map(|i| (0..self.size).map(|j| self.entry(i, j)).collect())
            .collect()
    }

    /// Determinant of the submatrix on the given (sorted) rows and columns.
    pub fn minor(&self, rows: &[usize], cols: &[usize]) -> f64 {
        debug_assert_eq!(rows.len(), cols.len());
        let sub = DMatrix::from_fn(rows.len(), cols.len(), |r, c| self.entry(rows[r], cols[c]));
        determinant(&sub)
    }

    pub fn singular_values(&self) -> Vec<f64> {
        if self.size == 0 {
            return Vec::new();
        }
        let mut sv: Vec<f64> = self.to_matrix().singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }
}

impl Serialize for HankelMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(serializer)
    }
}

/// `H_d(m)`; needs at least `2d - 1` moments.
pub fn build_hankel(m: &MomentVector, d: usize) -> Result<HankelMatrix> {
    if d == 0 {
        return Err(Error::Shape("Hankel size must be positive".into()));
    }
    let needed = 2 * d - 1;
    if m.len() < needed {
        return Err(Error::Shape(format!(
            "H_{d} needs {needed} moments, got {}",
            m.len()
        )));
    }
    Ok(HankelMatrix {
        size: d,
        generators: m.as_slice()[..needed].to_vec(),
    })
}

/// `rows x d` Vandermonde matrix with entry `(r, c) = x_c^r`.
pub fn vandermonde(nodes: &[f64], rows: usize) -> DMatrix<f64> {
    let mut v = DMatrix::zeros(rows, nodes.len());
    for (c, &x) in nodes.iter().enumerate() {
        let mut p = 1.0;
        for r in 0..rows {
            v[(r, c)] = p;
            p *= x;
        }
    }
    v
}

/// `V diag(a) V^T` with `V` the first `d` Vandermonde rows on the signal's nodes.
pub fn factored_hankel(signal: &Signal, d: usize) -> DMatrix<f64> {
    let v = vandermonde(signal.nodes(), d);
    let scaled = DMatrix::from_fn(d, signal.len(), |r, c| v[(r, c)] * signal.amplitudes()[c]);
    scaled * v.transpose()
}

/// `H_d(G)` from the first `2d - 1` moments of a signal with at most `d` nodes.
pub fn hankel_from_signal(signal: &Signal, d: usize) -> Result<HankelMatrix> {
    if signal.len() > d {
        return Err(Error::Shape(format!(
            "signal has {} nodes, more than d = {d}",
            signal.len()
        )));
    }
    if d == 0 {
        return Err(Error::Shape("Hankel size must be positive".into()));
    }
    let h = build_hankel(&signal.moments(2 * d - 1), d)?;
    #[cfg(debug_assertions)]
    {
        let other = factored_hankel(signal, d);
        let scale = other.amax().max(1.0);
        let diff = (h.to_matrix() - other).amax();
        debug_assert!(
            diff <= 1e-12 * scale,
            "Hankel factorization mismatch {diff:e}"
        );
    }
    Ok(h)
}

/// The maximal `l x l` minor of a Hankel matrix in absolute value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinorReport {
    pub order: usize,
    /// Signed determinant of the maximizing minor.
    pub value: f64,
    pub row_indices: Vec<usize>,
    pub col_indices: Vec<usize>,
    /// `|value|`, the maximum over all `l`-minors.
    pub delta: f64,
}

impl MinorReport {
    /// Moment indices `i + j` that enter the maximizing minor, sorted.
    pub fn moment_indices(&self) -> Vec<usize> {
        self.row_indices
            .iter()
            .cartesian_product(&self.col_indices)
            .map(|(i, j)| i + j)
            .sorted()
            .dedup()
            .collect()
    }
}

/// Enumerates every `l x l` minor and keeps the largest in absolute value.
/// Ties go to the lexicographically first (row set, column set).
pub fn delta_l(h: &HankelMatrix, l: usize) -> Result<MinorReport> {
    let d = h.size();
    if l == 0 || l > d {
        return Err(Error::Shape(format!("minor order {l} outside 1..={d}")));
    }
    if d > MAX_SIZE {
        return Err(Error::TooLarge(d));
    }
    let subsets: Vec<Vec<usize>> = (0..d).combinations(l).collect();
    let mut best: Option<MinorReport> = None;
    for rows in &subsets {
        for cols in &subsets {
            let value = h.minor(rows, cols);
            let better = best.as_ref().is_none_or(|b| value.abs() > b.delta);
            if better {
                best = Some(MinorReport {
                    order: l,
                    value,
                    row_indices: rows.clone(),
                    col_indices: cols.clone(),
                    delta: value.abs(),
                });
            }
        }
    }
    Ok(best.expect("at least one minor"))
}

/// Number of singular values above `tolerance * sigma_max`; 0 for the zero matrix.
pub fn numerical_rank(h: &HankelMatrix, tolerance: f64) -> Result<usize> {
    if !(tolerance > 0.0) {
        return Err(Error::Shape(format!("rank tolerance {tolerance} must be positive")));
    }
    let sv = h.singular_values();
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > tolerance * top).count())
}

/// Closed-form cofactor expansion up to order 3, LU with partial pivoting above.
pub(crate) fn determinant(m: &DMatrix<f64>) -> f64 {
    match m.nrows() {
        0 => 1.0,
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        3 => {
            m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
                - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
                + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
        }
        _ => m.clone().lu().determinant(),
    }
}
