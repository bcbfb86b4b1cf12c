//! Lower bounds on the moment distance from a `d`-node signal to any signal
//! with fewer nodes.
//!
//! The largest `l x l` minor `delta_l` of `H_d(F)` vanishes on every signal
//! with at most `l - 1` nodes and is Lipschitz with constant
//! `zeta = sqrt(2l-1) l^2 l! (d+1)^(l-1)` on the moment cube `|nu_k| <= d + 1`.
//! Hence the distance over the first `2d - 1` moments is at least
//! `theta = min(1, delta_l / zeta)`. The same bound holds on the moment
//! coordinates entering the maximizing minor alone.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hankel::{delta_l, hankel_from_signal, MinorReport, MomentVector};
use crate::signal::{NormalizedSignal, RegularityParams};
use crate::MAX_SIZE;

/// Below this a cluster bound is reported as zero with the underflow flag.
pub const UNDERFLOW_FLOOR: f64 = 1e-300;

/// `theta = min(1, delta_l / zeta)` for one signal and one `l`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCertificate {
    pub d: usize,
    pub l: usize,
    pub delta: f64,
    pub zeta: f64,
    pub theta: f64,
    /// The bound is stated on the moments entering `minor` only.
    pub restricted: bool,
    pub minor: MinorReport,
    /// Half-width of the moment cube on which `zeta` bounds the gradient.
    pub cube_radius: f64,
}

impl BoundCertificate {
    /// Moment indices the certificate is measured on: all `0..2d-1`, or only
    /// those entering the maximizing minor when restricted.
    pub fn moment_indices(&self) -> Vec<usize> {
        if self.restricted {
            self.minor.moment_indices()
        } else {
            (0..2 * self.d - 1).collect()
        }
    }

    /// The same bound on the moment coordinates of the maximizing minor.
    pub fn restricted(&self) -> BoundCertificate {
        BoundCertificate {
            restricted: true,
            ..self.clone()
        }
    }

    /// Distance between two moment vectors over [`Self::moment_indices`].
    pub fn distance(&self, a: &MomentVector, b: &MomentVector) -> f64 {
        a.distance_on(b, &self.moment_indices())
    }
}

/// Cluster bound `theta_h = min(h^(2d-2), h^(2d-2) * r)` where `r` is the
/// regular-signal ratio.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterCertificate {
    pub d: usize,
    pub eta: f64,
    pub gamma: f64,
    pub h: f64,
    /// `h^(2d-2)`
    pub scale: f64,
    /// The `h = 1` value `min(1, r)`.
    pub theta: f64,
    pub theta_h: f64,
    pub underflow: bool,
    /// Certificate for the pre-scaling signal, when one was supplied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signal_bound: Option<BoundCertificate>,
}

/// `sqrt(2l - 1) l^2 l! (d + 1)^(l - 1)`.
pub fn zeta(d: usize, l: usize) -> Result<f64> {
    if l == 0 || l > d {
        return Err(Error::Shape(format!("l = {l} outside 1..={d}")));
    }
    if d > MAX_SIZE {
        return Err(Error::TooLarge(d));
    }
    let lf = l as f64;
    Ok((2.0 * lf - 1.0).sqrt()
        * lf
        * lf
        * factorial(l)
        * ((d + 1) as f64).powi(l as i32 - 1))
}

/// Certificate that every signal with at most `l - 1` nodes is at least
/// `theta` away from `F` over the first `2d - 1` moments.
pub fn theta_bound(signal: &NormalizedSignal, l: usize) -> Result<BoundCertificate> {
    let d = signal.len();
    let z = zeta(d, l)?;
    let minor = delta_l(&hankel_from_signal(signal, d)?, l)?;
    let delta = minor.delta;
    Ok(BoundCertificate {
        d,
        l,
        delta,
        zeta: z,
        theta: (delta / z).min(1.0),
        restricted: false,
        minor,
        cube_radius: (d + 1) as f64,
    })
}

/// `prod_{i=1}^{d-1} (i!)^2 * eta^(d(d-1)) * gamma^d`, a floor for `delta_d`
/// over `(eta, gamma)`-regular signals in the unit box.
pub fn regular_delta_lower_bound(d: usize, params: &RegularityParams) -> Result<f64> {
    if d == 0 {
        return Err(Error::Shape("d must be positive".into()));
    }
    if d > MAX_SIZE {
        return Err(Error::TooLarge(d));
    }
    params.validate_for(d)?;
    let mut factors: Vec<f64> = Vec::with_capacity(2 * d);
    for i in 1..d {
        let f = factorial(i);
        factors.push(f);
        factors.push(f);
    }
    factors.push(params.eta.powi((d * (d - 1)) as i32));
    factors.push(params.gamma.powi(d as i32));
    Ok(compensated_product(&factors))
}

/// `min(1, regular_delta_lower_bound / zeta(d, d))`.
pub fn regular_theta(d: usize, params: &RegularityParams) -> Result<f64> {
    let floor = regular_delta_lower_bound(d, params)?;
    Ok((floor / zeta(d, d)?).min(1.0))
}

/// Bound for `(h, eta, gamma)`-regular clusters. `params.h` must be set.
pub fn cluster_theta(d: usize, params: &RegularityParams) -> Result<ClusterCertificate> {
    let h = params
        .h
        .ok_or_else(|| Error::InvalidParams("cluster bound needs a scale h".into()))?;
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::BadScale(h));
    }
    let ratio = regular_delta_lower_bound(d, params)? / zeta(d, d)?;
    let scale = h.powi(2 * d as i32 - 2);
    let raw = scale.min(scale * ratio);
    let underflow = raw < UNDERFLOW_FLOOR;
    Ok(ClusterCertificate {
        d,
        eta: params.eta,
        gamma: params.gamma,
        h,
        scale,
        theta: ratio.min(1.0),
        theta_h: if underflow { 0.0 } else { raw },
        underflow,
        signal_bound: None,
    })
}

/// [`cluster_theta`] for a specific pre-scaling signal, with its own
/// `l = d` certificate attached.
pub fn cluster_certificate(
    base: &NormalizedSignal,
    params: &RegularityParams,
) -> Result<ClusterCertificate> {
    let d = base.len();
    let mut cert = cluster_theta(d, params)?;
    cert.signal_bound = Some(theta_bound(base, d)?);
    Ok(cert)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Product with an error-free transformation per step (`fma` recovers the
/// rounding error of each multiplication).
fn compensated_product(factors: &[f64]) -> f64 {
    let mut p = 1.0_f64;
    let mut err = 0.0_f64;
    for &f in factors {
        let q = p * f;
        let e = p.mul_add(f, -q);
        err = err * f + e;
        p = q;
    }
    p + err
}
