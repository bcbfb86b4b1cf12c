use std::path::Path;

use anyhow::{bail, Context, Result};
use prony_core::hankel::build_hankel;
use prony_core::signal::sample_regular_signal;
use prony_core::{
    cluster_theta, downscale_cluster, min_moment_distance, numerical_rank, perturb_moments,
    prony_solve, sample_p, sigma_membership, theta_bound, Branch, Error, MomentVector,
    NormalizedSignal, PronyProblem, RegularityParams, SampleOutcome, SearchConfig, Signal,
};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::spec::{self, BoundSweepSpec, RankDropSpec, SampleSpec};

/// Command output plus whether the answer was affirmative (exit 0) or
/// negative (exit 1).
pub struct Report {
    pub body: String,
    pub affirmative: bool,
}

impl Report {
    fn yes(body: String) -> Self {
        Report { body, affirmative: true }
    }
}

/// Full 17-significant-digit float.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn moments(signal_file: &Path, count: Option<usize>) -> Result<Report> {
    let signal: Signal = spec::load(signal_file)?;
    let count = count.unwrap_or_else(|| (2 * signal.len()).max(1));
    if count == 0 {
        bail!("moment count must be at least 1");
    }
    Ok(Report::yes(serde_json::to_string(&signal.moments(count))?))
}

pub fn sigma_check(signal_file: &Path, tol: f64) -> Result<Report> {
    if !(tol >= 0.0) {
        bail!("tolerance {tol} must be non-negative");
    }
    let signal: Signal = spec::load(signal_file)?;
    let cert = sigma_membership(&signal, tol);
    Ok(Report {
        body: serde_json::to_string(&cert)?,
        affirmative: cert.member,
    })
}

pub fn sigma_sample(spec: SampleSpec) -> Result<Report> {
    let nodes = spec.nodes.context("nodes are required")?;
    let branch = spec.branch.context("branch (1 or 2) is required")?;
    let lambda = spec.lambda.context("lambda is required")?;
    let u = spec
        .u_coeffs
        .unwrap_or_else(|| vec![0.0; nodes.len().saturating_sub(2)]);
    let outcome = sample_p(&nodes, Branch::try_from(branch)?, lambda, &u)?;
    let affirmative = matches!(outcome, SampleOutcome::Accepted(_));
    let body = json!({
        "nodes": nodes,
        "branch": branch,
        "lambda": lambda,
        "u_coeffs": u,
        "outcome": outcome,
    });
    Ok(Report {
        body: body.to_string(),
        affirmative,
    })
}

pub fn prony_solve_file(moments_file: &Path, nodes: Option<usize>) -> Result<Report> {
    let m: MomentVector = spec::load(moments_file)?;
    let l = nodes.unwrap_or(m.len() / 2);
    let problem = PronyProblem::new(m, l)?;
    match prony_solve(&problem) {
        Ok(sol) => Ok(Report::yes(
            json!({ "target_nodes": l, "solution": sol }).to_string(),
        )),
        Err(e @ Error::NoRealSolution(_)) => Ok(Report {
            body: json!({ "target_nodes": l, "error": e.to_string() }).to_string(),
            affirmative: false,
        }),
        Err(e) => Err(e.into()),
    }
}

struct Base {
    d: usize,
    eta: f64,
    gamma: f64,
    seed: u64,
    sample: usize,
    signal: Signal,
}

struct SweepCell<'a> {
    base: &'a Base,
    l: usize,
    h: f64,
    epsilon: f64,
}

fn sweep_bases(spec: &BoundSweepSpec) -> Result<Vec<Base>> {
    let mut bases = Vec::new();
    if let Some(signals) = &spec.signals {
        for &seed in &spec.seeds {
            for (sample, signal) in signals.iter().enumerate() {
                let gamma = signal
                    .amplitudes()
                    .iter()
                    .fold(f64::INFINITY, |m, a| m.min(a.abs()));
                bases.push(Base {
                    d: signal.len(),
                    eta: signal.min_gap().unwrap_or(f64::NAN),
                    gamma,
                    seed,
                    sample,
                    signal: signal.clone(),
                });
            }
        }
        return Ok(bases);
    }
    for &d in &spec.d {
        for &eta in &spec.eta {
            for &gamma in &spec.gamma {
                for &seed in &spec.seeds {
                    let params = RegularityParams::new(eta, gamma);
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    for sample in 0..spec.samples {
                        let signal = sample_regular_signal(d, &params, &mut rng)
                            .with_context(|| format!("sampling d={d} eta={eta} gamma={gamma}"))?;
                        bases.push(Base { d, eta, gamma, seed, sample, signal });
                    }
                }
            }
        }
    }
    Ok(bases)
}

const SWEEP_HEADER: &str =
    "d,l,eta,gamma,h,epsilon,seed,sample,restarts,bound,delta_l,zeta,theta,distance,margin,boundary_hit";

fn sweep_row(cell: &SweepCell, restarts: usize) -> Result<(String, f64)> {
    let base = cell.base;
    let f = if cell.h == 1.0 {
        base.signal.clone()
    } else {
        downscale_cluster(&base.signal, cell.h)?
    };
    let cert = theta_bound(&NormalizedSignal::new(f.clone())?, cell.l)?;
    let (kind, theta) = if cell.h == 1.0 {
        ("signal", cert.theta)
    } else {
        let params = RegularityParams::new(base.eta, base.gamma).with_scale(cell.h);
        ("cluster", cluster_theta(base.d, &params)?.theta_h)
    };
    let cfg = SearchConfig::new(cell.l - 1)
        .with_restarts(restarts)
        .with_seed(base.seed);
    let found = min_moment_distance(&f, &cfg)?;
    let margin = found.distance - theta;
    let row = format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        base.d,
        cell.l,
        num(base.eta),
        num(base.gamma),
        num(cell.h),
        num(cell.epsilon),
        base.seed,
        base.sample,
        restarts,
        kind,
        num(cert.delta),
        num(cert.zeta),
        num(theta),
        num(found.distance),
        num(margin),
        found.boundary_hit,
    );
    Ok((row, margin))
}

/// Rows for `h < 1` carry the cluster bound, which concerns `l = d` only, so
/// other `l` are skipped at those scales.
pub fn bound_sweep(spec: &BoundSweepSpec) -> Result<Report> {
    spec.validate()?;
    let bases = sweep_bases(spec)?;
    let mut cells = Vec::new();
    for base in &bases {
        let ls: Vec<usize> = match &spec.l {
            Some(ls) => ls.iter().copied().filter(|&l| l >= 1 && l <= base.d).collect(),
            None => (1..=base.d).collect(),
        };
        for &l in &ls {
            for &h in &spec.h {
                if h < 1.0 && l != base.d {
                    continue;
                }
                for &epsilon in &spec.epsilon {
                    cells.push(SweepCell { base, l, h, epsilon });
                }
            }
        }
    }
    if cells.is_empty() {
        bail!("the sweep grid has no cells");
    }
    let rows: Vec<(String, f64)> = cells
        .par_iter()
        .map(|c| sweep_row(c, spec.restarts))
        .collect::<Result<_>>()?;

    let mut body = String::from(SWEEP_HEADER);
    let mut affirmative = true;
    for (row, margin) in &rows {
        body.push('\n');
        body.push_str(row);
        if *margin < 0.0 {
            affirmative = false;
            eprintln!("FAILURE: negative margin {margin:e} in row {row}");
        }
    }
    Ok(Report { body, affirmative })
}

const RANK_HEADER: &str = "d,h,epsilon,tol,eta,gamma,seed,sample,noise_seed,rank,sigma_ratio";

pub fn rank_drop(spec: &RankDropSpec) -> Result<Report> {
    spec.validate()?;
    let mut bases = Vec::new();
    for &d in &spec.d {
        for &eta in &spec.eta {
            for &gamma in &spec.gamma {
                for &seed in &spec.seeds {
                    let params = RegularityParams::new(eta, gamma);
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    for sample in 0..spec.samples {
                        let signal = sample_regular_signal(d, &params, &mut rng)
                            .with_context(|| format!("sampling d={d} eta={eta} gamma={gamma}"))?;
                        let noise_seed = rng.next_u64();
                        bases.push((Base { d, eta, gamma, seed, sample, signal }, noise_seed));
                    }
                }
            }
        }
    }
    let mut cells = Vec::new();
    for (base, noise_seed) in &bases {
        for &h in &spec.h {
            for &epsilon in &spec.epsilon {
                for &tol in &spec.tol {
                    cells.push((base, *noise_seed, h, epsilon, tol));
                }
            }
        }
    }
    let rows: Vec<String> = cells
        .par_iter()
        .map(|&(base, noise_seed, h, epsilon, tol)| -> Result<String> {
            let f = downscale_cluster(&base.signal, h)?;
            let m = perturb_moments(&f.moments(2 * base.d - 1), epsilon, noise_seed)?;
            let hankel = build_hankel(&m, base.d)?;
            let rank = numerical_rank(&hankel, tol)?;
            let sv = hankel.singular_values();
            let ratio = sv.last().copied().unwrap_or(0.0) / sv[0];
            Ok(format!(
                "{},{},{},{},{},{},{},{},{},{},{}",
                base.d,
                num(h),
                num(epsilon),
                num(tol),
                num(base.eta),
                num(base.gamma),
                base.seed,
                base.sample,
                noise_seed,
                rank,
                num(ratio),
            ))
        })
        .collect::<Result<_>>()?;
    let mut body = String::from(RANK_HEADER);
    for row in rows {
        body.push('\n');
        body.push_str(&row);
    }
    Ok(Report::yes(body))
}
