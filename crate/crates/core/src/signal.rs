//! The spike-train signal model.

use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hankel::MomentVector;

/// Nodes closer than this are treated as coincident.
pub const NODE_COINCIDENCE_TOL: f64 = 1e-12;

/// A spike train `sum_j a_j delta(x - x_j)` with strictly increasing nodes and
/// nonzero amplitudes. The empty signal is the zero signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSignal")]
pub struct Signal {
    amplitudes: Vec<f64>,
    nodes: Vec<f64>,
}

#[derive(Deserialize)]
struct RawSignal {
    amplitudes: Vec<f64>,
    nodes: Vec<f64>,
}

impl TryFrom<RawSignal> for Signal {
    type Error = Error;

    fn try_from(raw: RawSignal) -> Result<Self> {
        validate_signal(&raw.amplitudes, &raw.nodes)
    }
}

impl Signal {
    pub fn new(amplitudes: &[f64], nodes: &[f64]) -> Result<Self> {
        validate_signal(amplitudes, nodes)
    }

    /// The zero signal (no nodes).
    pub fn zero() -> Self {
        Signal {
            amplitudes: Vec::new(),
            nodes: Vec::new(),
        }
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of nodes `d`.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// The zero signal has no nodes.
    pub fn is_zero(&self) -> bool {
        self.is_empty()
    }

    /// `m_0 .. m_{count-1}`.
    pub fn moments(&self, count: usize) -> MomentVector {
        moments(self, count)
    }

    /// Smallest gap between neighbouring nodes, `None` for fewer than two nodes.
    pub fn min_gap(&self) -> Option<f64> {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .min_by(|a, b| a.total_cmp(b))
    }

    pub fn is_normalized(&self) -> bool {
        self.nodes.iter().all(|x| x.abs() <= 1.0) && self.amplitudes.iter().all(|a| a.abs() <= 1.0)
    }
}

/// Builds a [`Signal`], sorting nodes ascending and permuting amplitudes with
/// them. Coincident nodes and zero amplitudes are rejected.
pub fn validate_signal(amplitudes: &[f64], nodes: &[f64]) -> Result<Signal> {
    if amplitudes.len() != nodes.len() {
        return Err(Error::Shape(format!(
            "{} amplitudes but {} nodes",
            amplitudes.len(),
            nodes.len()
        )));
    }
    if amplitudes.iter().chain(nodes).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if let Some(index) = amplitudes.iter().position(|&a| a == 0.0) {
        return Err(Error::ZeroAmplitude { index });
    }
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&i, &j| nodes[i].total_cmp(&nodes[j]));
    let sorted_nodes: Vec<f64> = order.iter().map(|&i| nodes[i]).collect();
    if sorted_nodes
        .windows(2)
        .any(|w| (w[1] - w[0]).abs() < NODE_COINCIDENCE_TOL)
    {
        return Err(Error::DegenerateNodes);
    }
    let signal = Signal {
        amplitudes: order.iter().map(|&i| amplitudes[i]).collect(),
        nodes: sorted_nodes,
    };
    debug_assert!(signal.nodes.windows(2).all(|w| w[0] < w[1]));
    debug_assert!(signal.amplitudes.iter().all(|&a| a != 0.0));
    Ok(signal)
}

/// Power moments `m_k = sum_j a_j x_j^k` for `k = 0 .. count-1`.
pub fn moments(signal: &Signal, count: usize) -> MomentVector {
    let mut out = vec![0.0; count.max(1)];
    for (&a, &x) in signal.amplitudes.iter().zip(&signal.nodes) {
        let mut p = a;
        for m in out.iter_mut() {
            *m += p;
            p *= x;
        }
    }
    MomentVector::from_vec_unchecked(out)
}

/// A signal in the unit box: every `|x_i| <= 1` and `|a_i| <= 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct NormalizedSignal(Signal);

impl NormalizedSignal {
    pub fn new(signal: Signal) -> Result<Self> {
        if signal.is_normalized() {
            Ok(NormalizedSignal(signal))
        } else {
            Err(Error::NotNormalized)
        }
    }

    pub fn signal(&self) -> &Signal {
        &self.0
    }

    pub fn into_inner(self) -> Signal {
        self.0
    }
}

impl TryFrom<Signal> for NormalizedSignal {
    type Error = Error;

    fn try_from(signal: Signal) -> Result<Self> {
        NormalizedSignal::new(signal)
    }
}

impl std::ops::Deref for NormalizedSignal {
    type Target = Signal;

    fn deref(&self) -> &Signal {
        &self.0
    }
}

/// Node separation `eta`, amplitude floor `gamma` and an optional cluster
/// scale `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityParams {
    pub eta: f64,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
}

impl RegularityParams {
    pub fn new(eta: f64, gamma: f64) -> Self {
        RegularityParams { eta, gamma, h: None }
    }

    pub fn with_scale(self, h: f64) -> Self {
        RegularityParams { h: Some(h), ..self }
    }

    /// Checks `0 < eta <= 2/(d-1)` (when `d >= 2`), `0 < gamma <= 1` and
    /// `0 < h <= 1` when a scale is present.
    pub fn validate_for(&self, d: usize) -> Result<()> {
        if !(self.eta > 0.0) {
            return Err(Error::InvalidParams(format!("eta = {} must be positive", self.eta)));
        }
        if d >= 2 && self.eta > 2.0 / (d - 1) as f64 {
            return Err(Error::InvalidParams(format!(
                "eta = {} exceeds 2/(d-1) = {} for d = {d}",
                self.eta,
                2.0 / (d - 1) as f64
            )));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidParams(format!("gamma = {} not in (0, 1]", self.gamma)));
        }
        if let Some(h) = self.h {
            if !(h > 0.0 && h <= 1.0) {
                return Err(Error::BadScale(h));
            }
        }
        Ok(())
    }
}

/// True iff neighbouring nodes are at least `eta` apart and every amplitude
/// has magnitude at least `gamma`. The signal must lie in the unit box.
pub fn check_regularity(signal: &Signal, params: &RegularityParams) -> Result<bool> {
    if signal.is_zero() {
        return Err(Error::Shape("regularity needs at least one node".into()));
    }
    if !signal.is_normalized() {
        return Err(Error::NotNormalized);
    }
    let gaps_ok = signal.min_gap().is_none_or(|g| g >= params.eta);
    let amps_ok = signal.amplitudes.iter().all(|a| a.abs() >= params.gamma);
    Ok(gaps_ok && amps_ok)
}

/// Scales every node by `h`, keeping amplitudes. Moment `k` picks up `h^k`.
pub fn downscale_cluster(signal: &Signal, h: f64) -> Result<Signal> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::BadScale(h));
    }
    if h == 1.0 {
        return Ok(signal.clone());
    }
    let nodes: Vec<f64> = signal.nodes.iter().map(|x| h * x).collect();
    Signal::new(&signal.amplitudes, &nodes)
}

/// Adds independent uniform noise on `[-epsilon, epsilon]` to each moment.
pub fn perturb_moments(m: &MomentVector, epsilon: f64, rng_seed: u64) -> Result<MomentVector> {
    if !(epsilon >= 0.0) {
        return Err(Error::BadNoise(epsilon));
    }
    if epsilon == 0.0 {
        return Ok(m.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let noise = Uniform::new_inclusive(-epsilon, epsilon);
    let entries = m.iter().map(|v| v + noise.sample(&mut rng)).collect();
    Ok(MomentVector::from_vec_unchecked(entries))
}

/// Draws an `(eta, gamma)`-regular signal with `d` nodes in `[-1, 1]`.
///
/// Gaps in excess of `eta` are spread uniformly; amplitude magnitudes are
/// uniform on `[gamma, 1]` with random signs.
pub fn sample_regular_signal<R: Rng + ?Sized>(
    d: usize,
    params: &RegularityParams,
    rng: &mut R,
) -> Result<Signal> {
    params.validate_for(d)?;
    if d == 0 {
        return Ok(Signal::zero());
    }
    let slack = (2.0 - (d - 1) as f64 * params.eta).max(0.0);
    let mut offsets: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() * slack).collect();
    offsets.sort_by(f64::total_cmp);
    let nodes: Vec<f64> = offsets
        .iter()
        .enumerate()
        .map(|(i, u)| (-1.0 + u + i as f64 * params.eta).clamp(-1.0, 1.0))
        .collect();
    let amplitudes: Vec<f64> = (0..d)
        .map(|_| {
            let mag = params.gamma + (1.0 - params.gamma) * rng.gen::<f64>();
            if rng.gen::<bool>() {
                mag
            } else {
                -mag
            }
        })
        .collect();
    Signal::new(&amplitudes, &nodes)
}

/// Draws a signal in the unit box with nodes uniform on `[-1, 1]` (pairwise
/// gaps at least `min_gap`) and amplitudes uniform on `[-1, 1]`.
pub fn sample_normalized_signal<R: Rng + ?Sized>(d: usize, min_gap: f64, rng: &mut R) -> Signal {
    let unit = Uniform::new_inclusive(-1.0, 1.0);
    loop {
        let mut nodes: Vec<f64> = (0..d).map(|_| unit.sample(rng)).collect();
        nodes.sort_by(f64::total_cmp);
        if nodes
            .windows(2)
            .any(|w| w[1] - w[0] < min_gap.max(NODE_COINCIDENCE_TOL))
        {
            continue;
        }
        let amplitudes: Vec<f64> = (0..d).map(|_| unit.sample(rng)).collect();
        if let Ok(s) = Signal::new(&amplitudes, &nodes) {
            return s;
        }
    }
}
