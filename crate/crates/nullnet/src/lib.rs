//! Degree-heterogeneous null models for simple undirected graphs.
//!
//! A family of null models assigns one parameter per node and sets
//! `log p_ij = alpha_i + alpha_j + eps(alpha_i, alpha_j)` for a smooth,
//! sub-exponentially bounded correction `eps`; the log, complementary
//! log-log, and logit links are special cases. In sparse graphs every member
//! of the family produces essentially the same likelihood-based estimates,
//! and the closed-form plug-in
//!
//! ```text
//! alpha_i = log d_i - (1/2) log X_++        p_ij = d_i d_j / X_++
//! ```
//!
//! sits provably close to the maximum-likelihood fit. This crate provides:
//!
//! - [`graph`]: edge-list parsing, degree and sparsity statistics;
//! - [`link`]: the built-in links, custom links, stable probability math;
//! - [`likelihood`]: log-likelihood, score, exact and structured Hessians,
//!   and the O(n) inverse of the structured approximation;
//! - [`estimate`]: the plug-in estimator, damped Newton fitting, seeded graph
//!   sampling, and a brute-force oracle for tiny instances;
//! - [`certificate`]: the full chain of computable bound constants with a
//!   Kantorovich-style applicability verdict, plus realized error reports;
//! - [`report`]: the command-line front end (single fits, batch tables,
//!   per-node error dumps, synthetic sampling).

pub mod certificate;
pub mod error;
pub mod estimate;
pub mod graph;
pub mod likelihood;
pub mod link;
pub mod report;

pub use certificate::{
    certificate, certificate_from_stats, check_bounds, eps_bar0, error_report,
    loglik_error_constant, prob_error_constant, sup_error_constant, BoundCheck, Certificate,
    CertificateStatus, ErrorReport, LemmaConstants, PerNodeError,
};
pub use error::{Error, Result};
pub use estimate::{
    brute_force_mle, calibrated_alpha, fit_mle, fitted_prob, plugin_estimate, sample_graph,
    FitOptions, FitResult, PluginEstimate, SolverChoice, SolverKind, TraceStep,
};
pub use graph::{Graph, SparsityStats};
pub use likelihood::{
    apply_h_inverse, gradient, hessian, log_lik, poisson_score_at_plugin, DenseHessian,
    HessianMode, HessianRep, ParamVector, StructuredHessian,
};
pub use link::{CustomLink, EdgeProb, Link};
pub use report::{
    cmd_figure, cmd_fit, cmd_sample, cmd_table, figure_points, fmt_sig6, parse_manifest,
    table_rows, FigurePoint, TableRow,
};
