//! Classical Prony inversion: recover a spike train from its first `2l`
//! moments.
//!
//! The monic Prony polynomial is obtained from the `r x r` Hankel system, its
//! roots (companion eigenvalues) give the nodes, and amplitudes come from the
//! least-squares Vandermonde system over all supplied moments. A few
//! Gauss-Newton steps on the full Prony system polish the result.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hankel::{vandermonde, MomentVector};
use crate::signal::Signal;

const IMAG_TOL: f64 = 1e-8;
const AMPLITUDE_DROP_TOL: f64 = 1e-10;
const RESIDUAL_TOL: f64 = 1e-8;
const POLISH_STEPS: usize = 6;

/// Moments `m_0 .. m_{2l-1}` and the node budget `l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PronyProblem {
    moments: MomentVector,
    target_nodes: usize,
}

impl PronyProblem {
    pub fn new(moments: MomentVector, target_nodes: usize) -> Result<Self> {
        if target_nodes == 0 || moments.len() != 2 * target_nodes {
            return Err(Error::Shape(format!(
                "Prony problem with {target_nodes} nodes needs exactly {} moments, got {}",
                2 * target_nodes,
                moments.len()
            )));
        }
        Ok(PronyProblem {
            moments,
            target_nodes,
        })
    }

    pub fn moments(&self) -> &MomentVector {
        &self.moments
    }

    pub fn target_nodes(&self) -> usize {
        self.target_nodes
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PronySolution {
    pub signal: Signal,
    /// Max absolute mismatch over the `2l` moment equations.
    pub residual: f64,
}

/// Solves the Prony system, returning the solution with the fewest nodes whose
/// moments match within `1e-8 * (1 + max |m_k|)`.
pub fn prony_solve(problem: &PronyProblem) -> Result<PronySolution> {
    let m = problem.moments.as_slice();
    if m.iter().all(|&v| v == 0.0) {
        return Ok(PronySolution {
            signal: Signal::zero(),
            residual: 0.0,
        });
    }
    let tol = RESIDUAL_TOL * (1.0 + problem.moments.max_abs());
    let mut last_err = None;
    for r in 1..=problem.target_nodes {
        match solve_order(m, r) {
            Ok(sol) if sol.residual <= tol => return Ok(sol),
            Ok(sol) => {
                last_err = Some(Error::NoRealSolution(format!(
                    "best {r}-node fit leaves residual {:e}",
                    sol.residual
                )))
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::NoRealSolution("no candidate order".into())))
}

/// Single spike matching `m_0` and `m_1`: amplitude `m_0`, node `m_1 / m_0`.
pub fn fit_single_node(m: &MomentVector) -> Result<Signal> {
    if m.len() < 2 {
        return Err(Error::Shape("single-node fit needs two moments".into()));
    }
    if m[0] == 0.0 {
        return Err(Error::ZeroMass);
    }
    Signal::new(&[m[0]], &[m[1] / m[0]])
}

fn solve_order(m: &[f64], r: usize) -> Result<PronySolution> {
    let hankel = DMatrix::from_fn(r, r, |i, j| m[i + j]);
    let rhs = DVector::from_fn(r, |i, _| -m[i + r]);
    let coeffs = hankel
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NoRealSolution(format!("order-{r} Hankel block is singular")))?;

    let mut companion = DMatrix::zeros(r, r);
    for i in 1..r {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..r {
        companion[(i, r - 1)] = -coeffs[i];
    }
    let mut nodes = Vec::with_capacity(r);
    for z in companion.complex_eigenvalues().iter() {
        if z.im.abs() > IMAG_TOL * (1.0 + z.norm()) {
            return Err(Error::NoRealSolution(format!(
                "Prony polynomial has complex root {} + {}i",
                z.re, z.im
            )));
        }
        nodes.push(z.re);
    }
    nodes.sort_by(f64::total_cmp);
    let spread = nodes.iter().fold(1.0_f64, |acc, x| acc.max(x.abs()));
    if nodes.windows(2).any(|w| w[1] - w[0] <= 1e-12 * spread) {
        return Err(Error::NoRealSolution("Prony polynomial has a repeated root".into()));
    }

    let mut amplitudes = least_squares_amplitudes(m, &nodes)?;
    let keep: Vec<usize> = (0..nodes.len())
        .filter(|&i| amplitudes[i].abs() > AMPLITUDE_DROP_TOL)
        .collect();
    if keep.len() < nodes.len() {
        nodes = keep.iter().map(|&i| nodes[i]).collect();
        if nodes.is_empty() {
            return Err(Error::NoRealSolution("all amplitudes vanish".into()));
        }
        amplitudes = least_squares_amplitudes(m, &nodes)?;
    }

    let (amplitudes, nodes) = polish(m, amplitudes, nodes);
    let signal = Signal::new(&amplitudes, &nodes)
        .map_err(|e| Error::NoRealSolution(format!("degenerate fit: {e}")))?;
    let residual = residual(m, &signal);
    Ok(PronySolution { signal, residual })
}

fn least_squares_amplitudes(m: &[f64], nodes: &[f64]) -> Result<Vec<f64>> {
    let v = vandermonde(nodes, m.len());
    let b = DVector::from_column_slice(m);
    let a = v
        .svd(true, true)
        .solve(&b, 0.0)
        .map_err(|e| Error::NoRealSolution(format!("amplitude solve failed: {e}")))?;
    Ok(a.iter().copied().collect())
}

fn residual(m: &[f64], signal: &Signal) -> f64 {
    signal
        .moments(m.len())
        .iter()
        .zip(m)
        .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
}

fn residual_vec(m: &[f64], amplitudes: &[f64], nodes: &[f64]) -> DVector<f64> {
    DVector::from_fn(m.len(), |k, _| {
        amplitudes
            .iter()
            .zip(nodes)
            .map(|(a, x)| a * x.powi(k as i32))
            .sum::<f64>()
            - m[k]
    })
}

/// Gauss-Newton on the full system; a step is kept only if it lowers the
/// residual.
fn polish(m: &[f64], mut amplitudes: Vec<f64>, mut nodes: Vec<f64>) -> (Vec<f64>, Vec<f64>) {
    let r = nodes.len();
    let mut res = residual_vec(m, &amplitudes, &nodes);
    let mut best = res.amax();
    for _ in 0..POLISH_STEPS {
        if best == 0.0 {
            break;
        }
        let jac = DMatrix::from_fn(m.len(), 2 * r, |k, c| {
            if c < r {
                nodes[c].powi(k as i32)
            } else if k == 0 {
                0.0
            } else {
                let j = c - r;
                k as f64 * amplitudes[j] * nodes[j].powi(k as i32 - 1)
            }
        });
        let step = match jac.svd(true, true).solve(&res, 1e-14) {
            Ok(s) => s,
            Err(_) => break,
        };
        let trial_a: Vec<f64> = (0..r).map(|j| amplitudes[j] - step[j]).collect();
        let trial_x: Vec<f64> = (0..r).map(|j| nodes[j] - step[r + j]).collect();
        let trial_res = residual_vec(m, &trial_a, &trial_x);
        let trial_best = trial_res.amax();
        if !(trial_best < best) {
            break;
        }
        amplitudes = trial_a;
        nodes = trial_x;
        res = trial_res;
        best = trial_best;
    }
    (amplitudes, nodes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(m: &[f64], l: usize) -> PronyProblem {
        PronyProblem::new(MomentVector::new(m.to_vec()).unwrap(), l).unwrap()
    }

    #[test]
    fn single_delta() {
        let sol = prony_solve(&problem(&[1.0, 0.0], 1)).unwrap();
        assert_eq!(sol.signal.amplitudes(), &[1.0]);
        assert_eq!(sol.signal.nodes(), &[0.0]);
        assert_eq!(sol.residual, 0.0);
    }

    #[test]
    fn one_node_from_mass_and_mean() {
        let sol = prony_solve(&problem(&[1.8, 0.6], 1)).unwrap();
        assert!((sol.signal.amplitudes()[0] - 1.8).abs() < 1e-15);
        assert!((sol.signal.nodes()[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn three_node_round_trip() {
        let f = Signal::new(&[1.0, 1.0, -0.2], &[0.0, 1.0, 2.0]).unwrap();
        let sol = prony_solve(&PronyProblem::new(f.moments(6), 3).unwrap()).unwrap();
        assert_eq!(sol.signal.len(), 3);
        for (a, b) in sol.signal.amplitudes().iter().zip(f.amplitudes()) {
            assert!((a - b).abs() < 1e-8);
        }
        for (a, b) in sol.signal.nodes().iter().zip(f.nodes()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_moments_give_zero_signal() {
        let sol = prony_solve(&problem(&[0.0; 4], 2)).unwrap();
        assert!(sol.signal.is_zero());
    }

    #[test]
    fn fewer_nodes_than_budget() {
        let f = Signal::new(&[0.5, -0.7], &[-0.3, 0.4]).unwrap();
        let sol = prony_solve(&PronyProblem::new(f.moments(8), 4).unwrap()).unwrap();
        assert_eq!(sol.signal.len(), 2);
        assert!(sol.residual < 1e-12);
    }

    #[test]
    fn complex_roots_rejected() {
        // moments of x^2 + 1 roots: a(i)^k + a(-i)^k with a = 1/2 -> (1, 0, -1, 0)
        let err = prony_solve(&problem(&[1.0, 0.0, -1.0, 0.0], 2)).unwrap_err();
        assert!(matches!(err, Error::NoRealSolution(_)));
    }

    #[test]
    fn problem_shape() {
        let m = MomentVector::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert!(PronyProblem::new(m, 2).is_err());
    }

    #[test]
    fn single_node_fit() {
        let s = fit_single_node(&MomentVector::new(vec![2.0, 0.0, 5.0]).unwrap()).unwrap();
        assert_eq!((s.amplitudes()[0], s.nodes()[0]), (2.0, 0.0));
        let s = fit_single_node(&MomentVector::new(vec![1.8, 0.6]).unwrap()).unwrap();
        assert_eq!(s.amplitudes()[0], 1.8);
        assert!((s.nodes()[0] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(
            fit_single_node(&MomentVector::new(vec![0.0, 1.0]).unwrap()),
            Err(Error::ZeroMass)
        );
    }
}
