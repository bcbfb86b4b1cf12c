//! Spike-train (Prony) signals and the geometry of their low-rank moment
//! approximations.
//!
//! A signal `F = sum_j a_j delta(x - x_j)` is determined by its amplitudes and
//! strictly increasing nodes; its power moments `m_k = sum_j a_j x_j^k` feed a
//! Hankel matrix whose rank is the node count. The crate provides:
//!
//! * [`signal`]: the signal model, moments, regularity, clusters and noise.
//! * [`hankel`]: Hankel/Vandermonde matrices, maximal minors and numerical rank.
//! * [`prony`]: classical Prony inversion.
//! * [`sigma`]: exact fitting of three moments by a single spike, via the
//!   Euclidean distance matrix quadratic form.
//! * [`bounds`]: lower-bound certificates on the moment distance to signals
//!   with fewer nodes.
//! * [`search`]: a multi-start simplex oracle that measures that distance.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod hankel;
pub mod prony;
pub mod search;
pub mod sigma;
pub mod signal;
mod simplex;

pub use bounds::{
    cluster_certificate, cluster_theta, regular_delta_lower_bound, regular_theta, theta_bound,
    zeta, BoundCertificate, ClusterCertificate,
};
pub use error::{Error, Result};
pub use hankel::{
    build_hankel, delta_l, hankel_from_signal, numerical_rank, vandermonde, HankelMatrix,
    MinorReport, MomentVector,
};
pub use prony::{fit_single_node, prony_solve, PronyProblem, PronySolution};
pub use search::{min_moment_distance, seeded_starts, SearchConfig, SearchResult};
pub use sigma::{
    alpha_roots, distance_matrix, m2_gap, quad_form, sample_p, sigma_membership, AlphaRoots,
    Branch, CaseTag, CenteredNodes, DistanceMatrix, SampleOutcome, SigmaCertificate,
};
pub use signal::{
    check_regularity, downscale_cluster, moments, perturb_moments, validate_signal,
    NormalizedSignal, RegularityParams, Signal,
};

/// Largest matrix/signal size handled by the exhaustive minor enumeration and
/// the factorial-based constants.
pub const MAX_SIZE: usize = 10;
