//! Signals whose first three moments are matched by a single spike.
//!
//! For `m_0(F) != 0` the single spike is forced to be `(m_0, m_1 / m_0)` and the
//! remaining condition on `m_2` is the vanishing of `a^T D(x) a`, where `D(x)`
//! is the Euclidean distance matrix of the nodes. For `m_0(F) = 0` the only
//! candidate is the zero signal, so `a` must lie in the null space of the
//! first three Vandermonde rows.
//!
//! Writing `a = lambda (1/d + alpha xbar + u)` with `u` orthogonal to `1` and
//! the centred nodes `xbar`, the quadratic form becomes
//!
//! ```text
//! a^T D a / (2 lambda^2) = S/d^2 + (u . D1)/d + alpha (xbar . D1)/d - alpha^2 |xbar|^4
//! ```
//!
//! with `S = sum_{i<j} D_ij`. [`alpha_roots`] solves this with `u = 0`;
//! [`branch_roots`] keeps the `u` term, which is what the sampler needs once
//! `d >= 3` and `u` is nonzero.

use nalgebra::DMatrix;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::hankel::vandermonde;
use crate::prony::fit_single_node;
use crate::signal::{Signal, NODE_COINCIDENCE_TOL};

/// Default relative tolerance for deciding membership.
pub const SIGMA_TOL: f64 = 1e-9;

/// Amplitudes with magnitude at or below this leave the parameter space.
pub const PUNCTURE_TOL: f64 = 1e-12;

/// `D_ij = (x_i - x_j)^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix(DMatrix<f64>);

impl DistanceMatrix {
    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn max_entry(&self) -> f64 {
        self.0.amax()
    }

    /// `D 1`.
    pub fn row_sums(&self) -> Vec<f64> {
        self.0.row_iter().map(|r| r.sum()).collect()
    }

    /// `sum_{i<j} D_ij`.
    pub fn upper_sum(&self) -> f64 {
        let d = self.size();
        (0..d)
            .flat_map(|i| (i + 1..d).map(move |j| (i, j)))
            .map(|(i, j)| self.0[(i, j)])
            .sum()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.0
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }
}

impl Serialize for DistanceMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(serializer)
    }
}

pub fn distance_matrix(x: &[f64]) -> DistanceMatrix {
    let d = x.len();
    let dm = DMatrix::from_fn(d, d, |i, j| (x[i] - x[j]).powi(2));
    debug_assert!(
        {
            let diff = (&dm - factored_distance_matrix(x)).amax();
            diff <= 1e-12 * dm.amax().max(1.0)
        },
        "distance matrix factorization mismatch"
    );
    DistanceMatrix(dm)
}

/// `s 1^T + 1 s^T - 2 x x^T` with `s = (x_1^2, .., x_d^2)`.
pub fn factored_distance_matrix(x: &[f64]) -> DMatrix<f64> {
    let d = x.len();
    DMatrix::from_fn(d, d, |i, j| x[i] * x[i] + x[j] * x[j] - 2.0 * x[i] * x[j])
}

/// `a^T D(x) a`, evaluated as `2 sum_{i<j} a_i a_j (x_i - x_j)^2`.
///
/// Panics if the slices differ in length.
pub fn quad_form(a: &[f64], x: &[f64]) -> f64 {
    assert_eq!(a.len(), x.len(), "amplitude and node vectors differ in length");
    let d = a.len();
    let mut acc = 0.0;
    for i in 0..d {
        for j in i + 1..d {
            acc += a[i] * a[j] * (x[i] - x[j]).powi(2);
        }
    }
    2.0 * acc
}

/// `a^T D a` by the dense triple product; cross-check for [`quad_form`].
pub fn quad_form_matrix(a: &[f64], dm: &DistanceMatrix) -> f64 {
    let d = a.len();
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            acc += a[i] * dm.entry(i, j) * a[j];
        }
    }
    acc
}

/// `m_2(F~) - m_2(F)` for the single spike `F~` matching `m_0` and `m_1`:
/// `-a^T D a / (2 sum a)`.
pub fn m2_gap(signal: &Signal) -> Result<f64> {
    let (_, formula) = m2_gap_paths(signal)?;
    Ok(formula)
}

/// Both routes to [`m2_gap`]: `(direct, formula)`. The direct route fits the
/// single spike and subtracts second moments.
pub fn m2_gap_paths(signal: &Signal) -> Result<(f64, f64)> {
    if signal.len() < 2 {
        return Err(Error::Shape(format!(
            "m2 gap needs at least two nodes, got {}",
            signal.len()
        )));
    }
    let m = signal.moments(3);
    if m[0] == 0.0 {
        return Err(Error::ZeroMass);
    }
    let single = fit_single_node(&m)?;
    let direct = single.moments(3)[2] - m[2];
    let formula = -quad_form(signal.amplitudes(), signal.nodes()) / (2.0 * m[0]);
    Ok((direct, formula))
}

/// Nodes centred at their mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CenteredNodes {
    pub mean: f64,
    pub centered: Vec<f64>,
    /// `|xbar|^4`
    pub norm4: f64,
}

impl CenteredNodes {
    pub fn new(x: &[f64]) -> Self {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
        let norm2: f64 = centered.iter().map(|v| v * v).sum();
        CenteredNodes {
            mean,
            centered,
            norm4: norm2 * norm2,
        }
    }
}

/// Roots `alpha_1 >= alpha_2` of `c0 + alpha p - alpha^2 |xbar|^4 = 0`, with
/// `p = xbar^T D 1 / d` and `c_{1,2} = ±sqrt(p^2 + 4 |xbar|^4 c0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaRoots {
    pub alpha1: f64,
    pub alpha2: f64,
    pub c1: f64,
    pub c2: f64,
}

impl AlphaRoots {
    pub fn get(&self, branch: Branch) -> f64 {
        match branch {
            Branch::One => self.alpha1,
            Branch::Two => self.alpha2,
        }
    }
}

/// Which root of the quadratic in `alpha` parametrizes the amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    One,
    Two,
}

impl TryFrom<u8> for Branch {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Branch::One),
            2 => Ok(Branch::Two),
            _ => Err(Error::Shape(format!("branch must be 1 or 2, got {v}"))),
        }
    }
}

struct NodeGeometry {
    centered: CenteredNodes,
    row_sums: Vec<f64>,
    /// `xbar^T D 1 / d`
    linear: f64,
    /// `sum_{i<j} D_ij / d^2`
    constant: f64,
}

impl NodeGeometry {
    fn new(x: &[f64]) -> Result<Self> {
        let d = x.len();
        if d < 2 {
            return Err(Error::DegenerateNodes);
        }
        let mut sorted = x.to_vec();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[1] - w[0] < NODE_COINCIDENCE_TOL) {
            return Err(Error::DegenerateNodes);
        }
        let centered = CenteredNodes::new(x);
        let dm = distance_matrix(x);
        let row_sums = dm.row_sums();
        let df = d as f64;
        let linear = dot(&centered.centered, &row_sums) / df;
        let constant = dm.upper_sum() / (df * df);
        Ok(NodeGeometry {
            centered,
            row_sums,
            linear,
            constant,
        })
    }

    fn roots(&self, constant: f64) -> Option<AlphaRoots> {
        let n4 = self.centered.norm4;
        let disc = self.linear * self.linear + 4.0 * n4 * constant;
        if disc < 0.0 {
            return None;
        }
        let c = disc.sqrt();
        Some(AlphaRoots {
            alpha1: (self.linear + c) / (2.0 * n4),
            alpha2: (self.linear - c) / (2.0 * n4),
            c1: c,
            c2: -c,
        })
    }
}

/// Roots of `S/d^2 + alpha xbar^T D 1 / d - alpha^2 |xbar|^4 = 0`. For each
/// root, `1/d + alpha xbar` is a zero of the distance quadratic form. The
/// discriminant is a sum of squares plus a positive term, so both roots are
/// real and distinct.
pub fn alpha_roots(x: &[f64]) -> Result<AlphaRoots> {
    let geom = NodeGeometry::new(x)?;
    Ok(geom
        .roots(geom.constant)
        .expect("discriminant is positive for distinct nodes"))
}

/// Roots of the quadratic in `alpha` for a fixed complement vector `u`, i.e.
/// with the constant term `S/d^2 + (u . D1)/d`. `None` when no real `alpha`
/// makes `1/d + alpha xbar + u` a zero of the quadratic form. Reduces to
/// [`alpha_roots`] for `u = 0`.
pub fn branch_roots(x: &[f64], u: &[f64]) -> Result<Option<AlphaRoots>> {
    if u.len() != x.len() {
        return Err(Error::Shape(format!(
            "complement vector has length {}, expected {}",
            u.len(),
            x.len()
        )));
    }
    let geom = NodeGeometry::new(x)?;
    let shift = dot(u, &geom.row_sums) / x.len() as f64;
    Ok(geom.roots(geom.constant + shift))
}

/// Orthonormal basis of the orthogonal complement of `span(1, xbar)`, by
/// Gram-Schmidt over the standard basis in index order. Has `d - 2` vectors.
pub fn complement_basis(x: &[f64]) -> Result<Vec<Vec<f64>>> {
    let d = x.len();
    let geom = NodeGeometry::new(x)?;
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d);
    let ones = vec![1.0; d];
    for seed in std::iter::once(ones).chain(std::iter::once(geom.centered.centered.clone())) {
        push_orthonormal(&mut basis, seed);
    }
    for k in 0..d {
        if basis.len() == d {
            break;
        }
        let mut e = vec![0.0; d];
        e[k] = 1.0;
        push_orthonormal(&mut basis, e);
    }
    debug_assert_eq!(basis.len(), d);
    Ok(basis.split_off(2))
}

fn push_orthonormal(basis: &mut Vec<Vec<f64>>, mut v: Vec<f64>) {
    // two passes of classical Gram-Schmidt
    for _ in 0..2 {
        for b in basis.iter() {
            let p = dot(&v, b);
            v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= p * bi);
        }
    }
    let n = dot(&v, &v).sqrt();
    if n > 1e-8 {
        basis.push(v.into_iter().map(|vi| vi / n).collect());
    }
}

/// Why a sampled amplitude vector is not a signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Rejection {
    /// The amplitude vector has a (numerically) zero entry.
    ZeroAmplitude { index: usize },
    /// For this `u` the quadratic in `alpha` has no real root.
    NoRealBranch,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SampleOutcome {
    Accepted(Signal),
    Rejected(Rejection),
}

impl SampleOutcome {
    pub fn signal(&self) -> Option<&Signal> {
        match self {
            SampleOutcome::Accepted(s) => Some(s),
            SampleOutcome::Rejected(_) => None,
        }
    }
}

/// `a = lambda (1/d + alpha_branch xbar + u)` where `u` has coordinates
/// `u_coeffs` in [`complement_basis`] and `alpha_branch` comes from
/// [`branch_roots`] for that `u`. Vectors with a zero entry are rejected.
pub fn sample_p(x: &[f64], branch: Branch, lambda: f64, u_coeffs: &[f64]) -> Result<SampleOutcome> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::BadLambda);
    }
    let basis = complement_basis(x)?;
    if u_coeffs.len() != basis.len() {
        return Err(Error::Shape(format!(
            "expected {} complement coefficients, got {}",
            basis.len(),
            u_coeffs.len()
        )));
    }
    let d = x.len();
    let mut u = vec![0.0; d];
    for (c, b) in u_coeffs.iter().zip(&basis) {
        u.iter_mut().zip(b).for_each(|(ui, bi)| *ui += c * bi);
    }
    let Some(roots) = branch_roots(x, &u)? else {
        return Ok(SampleOutcome::Rejected(Rejection::NoRealBranch));
    };
    let alpha = roots.get(branch);
    let centered = CenteredNodes::new(x).centered;
    let a: Vec<f64> = (0..d)
        .map(|i| lambda * (1.0 / d as f64 + alpha * centered[i] + u[i]))
        .collect();
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if let Some(index) = a.iter().position(|v| v.abs() <= PUNCTURE_TOL * scale.max(1.0)) {
        return Ok(SampleOutcome::Rejected(Rejection::ZeroAmplitude { index }));
    }
    Ok(SampleOutcome::Accepted(Signal::new(&a, x)?))
}

/// Coordinates of an amplitude vector in the sampler's parametrization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    pub lambda: f64,
    pub alpha: f64,
    pub u_coeffs: Vec<f64>,
    /// The root of [`branch_roots`] closest to `alpha`.
    pub branch: Option<Branch>,
}

/// Inverse of [`sample_p`]: `a = lambda (1/d + alpha xbar + u)` with
/// `lambda = sum a`.
pub fn decompose_amplitudes(a: &[f64], x: &[f64]) -> Result<Decomposition> {
    if a.len() != x.len() {
        return Err(Error::Shape("amplitude and node vectors differ in length".into()));
    }
    let lambda: f64 = a.iter().sum();
    if lambda == 0.0 {
        return Err(Error::ZeroMass);
    }
    let d = x.len();
    let centered = CenteredNodes::new(x).centered;
    let basis = complement_basis(x)?;
    let unit: Vec<f64> = a.iter().map(|v| v / lambda).collect();
    let alpha = dot(&unit, &centered) / dot(&centered, &centered);
    let u_coeffs: Vec<f64> = basis.iter().map(|b| dot(&unit, b)).collect();
    let mut u = vec![0.0; d];
    for (c, b) in u_coeffs.iter().zip(&basis) {
        u.iter_mut().zip(b).for_each(|(ui, bi)| *ui += c * bi);
    }
    let branch = branch_roots(x, &u)?.map(|r| {
        if (r.alpha1 - alpha).abs() <= (r.alpha2 - alpha).abs() {
            Branch::One
        } else {
            Branch::Two
        }
    });
    Ok(Decomposition {
        lambda,
        alpha,
        u_coeffs,
        branch,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseTag {
    /// `m_0 = m_1 = m_2 = 0`; matched by the zero signal.
    CaseI,
    /// `m_0 != 0` and `a^T D a = 0`; matched by a single spike.
    CaseII,
    NotMember,
}

/// Verdict on whether a single spike (or the zero signal) matches the first
/// three moments of a signal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaCertificate {
    pub member: bool,
    pub case_tag: CaseTag,
    /// Candidate approximant with at most one node.
    pub witness: Option<Signal>,
    /// `a^T D(x) a`
    pub quad_value: f64,
    /// `m_k(F) - m_k(witness)` for `k = 0, 1, 2`.
    pub moment_gaps: [f64; 3],
    pub tolerance: f64,
}

/// Decides membership with relative tolerance `tol`: case II compares
/// `|a^T D a|` against `tol * |a|^2 * max D`, case I compares each `|m_k|`
/// against `tol * sum_i |a_i| |x_i|^k`.
pub fn sigma_membership(signal: &Signal, tol: f64) -> SigmaCertificate {
    let a = signal.amplitudes();
    let x = signal.nodes();
    let m = signal.moments(3);
    let quad_value = quad_form(a, x);
    let gaps_to = |w: &Signal| {
        let mw = w.moments(3);
        [m[0] - mw[0], m[1] - mw[1], m[2] - mw[2]]
    };

    if signal.len() < 2 {
        return SigmaCertificate {
            member: false,
            case_tag: CaseTag::NotMember,
            witness: None,
            quad_value,
            moment_gaps: [m[0], m[1], m[2]],
            tolerance: tol,
        };
    }

    let abs_scale = |k: i32| -> f64 {
        a.iter()
            .zip(x)
            .map(|(ai, xi)| ai.abs() * xi.abs().powi(k))
            .sum()
    };
    if m[0].abs() <= tol * abs_scale(0) {
        let zero = Signal::zero();
        let member = m[1].abs() <= tol * abs_scale(1) && m[2].abs() <= tol * abs_scale(2);
        return SigmaCertificate {
            member,
            case_tag: if member { CaseTag::CaseI } else { CaseTag::NotMember },
            moment_gaps: gaps_to(&zero),
            witness: Some(zero),
            quad_value,
            tolerance: tol,
        };
    }

    let norm2: f64 = a.iter().map(|v| v * v).sum();
    let max_d = distance_matrix(x).max_entry();
    let member = quad_value.abs() <= tol * norm2 * max_d;
    let witness = fit_single_node(&m).ok();
    SigmaCertificate {
        member,
        case_tag: if member { CaseTag::CaseII } else { CaseTag::NotMember },
        moment_gaps: witness.as_ref().map_or([m[0], m[1], m[2]], gaps_to),
        witness,
        quad_value,
        tolerance: tol,
    }
}

/// `V^{0:2}(x) a`, i.e. `(m_0, m_1, m_2)`, via the Vandermonde matrix.
pub fn first_three_moments(a: &[f64], x: &[f64]) -> [f64; 3] {
    let v = vandermonde(x, 3);
    let mut out = [0.0; 3];
    for (r, o) in out.iter_mut().enumerate() {
        *o = (0..x.len()).map(|c| v[(r, c)] * a[c]).sum();
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
