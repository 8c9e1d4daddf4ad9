//! Clustering balanced sub-Gaussian mixtures through the semidefinite
//! relaxation of k-means.
//!
//! The pipeline is: pairwise squared distances ([`linalg`]) → SDP solve by
//! ADMM on the dual, or optionally consensus ADMM ([`sdp`]) → ball-cover
//! rounding to a balanced labeling ([`rounding`]) → center estimates
//! ([`pipeline`]). The [`oracle`] module evaluates the integer program that
//! knows the true centers, whose worst-case error bounds the SDP error;
//! [`harness`] drives seeded Monte-Carlo sweeps and writes one CSV row per
//! replicate.

pub mod assignment;
pub mod error;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod mixture;
pub mod oracle;
pub mod pipeline;
pub mod rng;
pub mod rounding;
pub mod sdp;

pub use assignment::{Assignment, AssignmentMatrix};
pub use error::{Error, Result};
pub use linalg::{pairwise_sq_dists, psd_project, sym_eig, EigenPair, PsdProjector, SymMatrix};
pub use metrics::{center_error, l1_error, misrate, ErrorReport};
pub use mixture::{
    ground_truth, sample_dataset, snr, CenterLayout, Dataset, GroundTruth, MixtureSpec, Noise,
    SnrReport,
};
pub use oracle::{build_instance, ip_worst_error, oracle_assign, OracleInstance};
pub use pipeline::{
    cluster_dataset, estimate_centers, lloyd_baseline, ClusteringConfig, ClusteringResult,
    StageTimes,
};
pub use rounding::{cluster, equalize, extract_balls, BallCover};
pub use sdp::{
    affine_project, elementwise_round, feasibility, solve_sdp, FeasibilityReport, SdpSolution,
    SolverConfig, SolverMethod,
};
