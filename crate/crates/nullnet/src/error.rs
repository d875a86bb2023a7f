//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by graph parsing, model evaluation, and fitting.
#[derive(Debug, Error)]
pub enum Error {
    /// An edge list line joins a node to itself; the models exclude the diagonal.
    #[error("self-loop on line {line}: the adjacency diagonal must be zero")]
    SelfLoop { line: usize },

    /// An edge list line does not hold exactly two node tokens.
    #[error("malformed line {line}: expected two whitespace-separated node tokens")]
    MalformedLine { line: usize },

    /// A graph with zero edges where at least one is required.
    #[error("graph has no edges")]
    EmptyGraph,

    /// A node of degree zero reached a code path that requires positive degrees.
    #[error("graph contains an isolated node (degree 0); strip it first")]
    IsolatedNode,

    /// The linear predictor left the link's domain (log link: probability >= 1).
    #[error("edge probability at or above 1 under the {link} link (predictor {predictor})")]
    Domain { link: String, predictor: f64 },

    /// A dense Hessian was requested beyond the configured size cap.
    #[error("dense Hessian requested for n = {n} but the cap is {cap}")]
    CapExceeded { n: usize, cap: usize },

    /// Newton iterates escaped to the boundary: the likelihood equation has no
    /// finite solution (e.g. a node of maximal degree under the logit link).
    #[error("MLE diverged after {iterations} iterations (max |alpha| = {alpha_norm:.3}): \
             the likelihood equation appears to have no finite solution")]
    MleDiverged { iterations: usize, alpha_norm: f64 },

    /// Backtracking found no feasible ascent step.
    #[error("line search failed at iteration {iteration}: no feasible ascent step")]
    LineSearchFailed { iteration: usize },

    /// An operation that needs a converged fit was handed a non-converged one.
    #[error("fit did not converge")]
    NotConverged,

    /// The brute-force maximizer pressed the search box or a feasibility edge.
    #[error("brute-force maximizer escaped to the boundary (coordinate {coordinate})")]
    BoundaryEscape { coordinate: usize },

    /// Some plug-in probability is >= 1, so the plug-in log-likelihood is undefined.
    #[error("plug-in likelihood undefined: some plug-in probability is >= 1")]
    UndefinedPluginLikelihood,

    /// The requested sample target cannot be met (e.g. mean degree >= n - 1).
    #[error("infeasible sampling target: {reason}")]
    InfeasibleTarget { reason: String },

    /// A manifest line is not a `name = path` pair.
    #[error("malformed manifest line {line}: expected `name = path`")]
    ManifestLine { line: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
