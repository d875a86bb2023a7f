//! Estimators: the closed-form plug-in, damped Newton maximum likelihood,
//! graph sampling from any model in the family, and a brute-force oracle.
//!
//! Newton starts from the plug-in vector. Under the dense cap the step solves
//! the exact Hessian system; above it, the degree-only approximation `H` acts
//! as a fixed preconditioner with O(n) solves. Convergence is measured in the
//! degree-scaled score norm `max_k |grad_k| / d_k`.
//!
//! Nonexistence of the maximizer (boundary escape, e.g. a node of maximal
//! degree under the logit link) is reported as `MleDiverged`, never as a
//! clamped estimate. Escape is detected three ways: an iterate norm beyond the
//! divergence cap, a norm still growing when iterations run out, and a fitted
//! probability within `1e-9` of 1 at an otherwise stationary point.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::likelihood::{
    gradient, hessian, log_lik, DenseHessian, HessianMode, HessianRep, ParamVector,
    StructuredHessian,
};
use crate::link::{EdgeProb, Link};

/// Fitted probabilities this close to 1 at a stationary point are treated as
/// boundary escapes rather than interior solutions. The threshold sits above
/// sqrt(eps), where the Hessian assembly itself loses all signal, so stalls
/// on an escape ray are classified correctly.
const BOUNDARY_P_GAP: f64 = 1e-7;
/// How much the iterate norm must grow past the start before an exhausted
/// iteration budget is classified as divergence.
const GROWTH_MARGIN: f64 = 5.0;

/// The closed-form plug-in estimator built from degrees alone.
#[derive(Debug, Clone)]
pub struct PluginEstimate {
    /// `alpha_i = log d_i - (1/2) log X_++`.
    pub alpha_tilde: ParamVector,
    /// The Bernoulli log-likelihood evaluated at the plug-in probabilities;
    /// `None` when some plug-in probability reaches 1.
    pub ll_tilde: Option<f64>,
    /// Worst-case sparsity ratio `max_i d_i^2 / X_++`.
    pub eps0: f64,
    degrees: Vec<u32>,
    total: f64,
}

impl PluginEstimate {
    /// Plug-in edge probability `d_i d_j / X_++`.
    pub fn p_tilde(&self, i: usize, j: usize) -> f64 {
        assert_ne!(i, j, "plug-in probability is defined for distinct nodes");
        self.degrees[i] as f64 * self.degrees[j] as f64 / self.total
    }
}

/// Compute the plug-in estimate. Requires every degree positive.
pub fn plugin_estimate(g: &Graph) -> Result<PluginEstimate> {
    if g.n() == 0 || g.min_degree() == 0 {
        return Err(Error::IsolatedNode);
    }
    let total = g.total_degree() as f64;
    let half_log_total = 0.5 * total.ln();
    let alpha_tilde: ParamVector = g
        .degrees()
        .iter()
        .map(|&d| (d as f64).ln() - half_log_total)
        .collect();
    let eps0 = g.sparsity_stats()?.eps0;

    // ll_tilde is defined only when every pairwise plug-in probability is
    // below 1, i.e. when the two largest degrees multiply below X_++.
    let (d1, d2) = two_largest(g.degrees());
    let ll_tilde = if (d1 as u64) * (d2 as u64) < g.total_degree() {
        let mut ll = crate::likelihood::KahanSum::default();
        for i in 0..g.n() {
            let neigh = g.neighbors(i);
            let mut ptr = 0;
            while ptr < neigh.len() && (neigh[ptr] as usize) <= i {
                ptr += 1;
            }
            for j in (i + 1)..g.n() {
                let is_edge = ptr < neigh.len() && neigh[ptr] as usize == j;
                if is_edge {
                    ptr += 1;
                }
                let p = g.degree(i) as f64 * g.degree(j) as f64 / total;
                ll.add(if is_edge { p.ln() } else { (-p).ln_1p() });
            }
        }
        Some(ll.total())
    } else {
        None
    };

    Ok(PluginEstimate {
        alpha_tilde,
        ll_tilde,
        eps0,
        degrees: g.degrees().to_vec(),
        total,
    })
}

fn two_largest(degrees: &[u32]) -> (u32, u32) {
    let mut best = 0u32;
    let mut second = 0u32;
    for &d in degrees {
        if d >= best {
            second = best;
            best = d;
        } else if d > second {
            second = d;
        }
    }
    (best, second)
}

/// Which linear solver backs the Newton step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    /// Exact Newton under the dense cap, preconditioned above it.
    Auto,
    /// Always solve the exact Hessian system (subject to the dense cap).
    Exact,
    /// Always use the structured `H` as a fixed preconditioner.
    Preconditioned,
}

/// Solver actually used by a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    ExactNewton,
    HPreconditioned,
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolverKind::ExactNewton => write!(f, "exact-newton"),
            SolverKind::HPreconditioned => write!(f, "h-preconditioned"),
        }
    }
}

/// Options controlling the Newton fit.
#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Stop when `max_k |grad_k| / d_k` drops to this level.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub solver: SolverChoice,
    /// Largest n for which the exact dense Hessian is formed.
    pub dense_cap: usize,
    /// `MleDiverged` once the iterate infinity norm passes this.
    pub divergence_cap: f64,
    /// Backtracking contraction factor.
    pub step_contraction: f64,
    /// Maximum halvings per line search; 0 disables damping entirely and
    /// accepts every full Newton step (used by the error-halving checks).
    pub max_halvings: u32,
    /// Keep every accepted iterate (including the start) in the result.
    pub record_iterates: bool,
}

impl Default for FitOptions {
    fn default() -> FitOptions {
        FitOptions {
            tolerance: 1e-10,
            max_iterations: 100,
            solver: SolverChoice::Auto,
            dense_cap: 2000,
            divergence_cap: 40.0,
            step_contraction: 0.5,
            max_halvings: 50,
            record_iterates: false,
        }
    }
}

/// One accepted Newton iterate.
#[derive(Debug, Clone, Copy)]
pub struct TraceStep {
    /// Infinity norm of the accepted step.
    pub step_norm: f64,
    /// Log-likelihood after the step.
    pub ll: f64,
}

/// A converged (or stalled) maximum-likelihood fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub alpha_hat: ParamVector,
    pub ll_hat: f64,
    pub iterations: usize,
    /// Final degree-scaled score norm.
    pub score_norm: f64,
    pub solver: SolverKind,
    pub converged: bool,
    pub trace: Vec<TraceStep>,
    /// Present when `record_iterates` was set: `iterates[k]` is the k-th
    /// Newton iterate, with `iterates[0]` the starting point.
    pub iterates: Option<Vec<ParamVector>>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

// Largest pairwise predictor over distinct nodes: the sum of the two largest
// entries (links whose correction depends on the sum alone are monotone in it).
fn max_pair_sum(alpha: &[f64]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let mut second = f64::NEG_INFINITY;
    for &a in alpha {
        if a >= best {
            second = best;
            best = a;
        } else if a > second {
            second = a;
        }
    }
    best + second
}

fn alpha_feasible(link: &Link, alpha: &[f64]) -> bool {
    match link {
        Link::Cloglog | Link::Logit => true,
        Link::Log => max_pair_sum(alpha) < 0.0,
        Link::Custom(_) => {
            let n = alpha.len();
            for i in 0..n {
                for j in (i + 1)..n {
                    if !link.feasible(alpha[i], alpha[j]) {
                        return false;
                    }
                }
            }
            true
        }
    }
}

// Largest log p over all pairs; used to recognize boundary escapes.
fn max_log_p(link: &Link, alpha: &[f64]) -> f64 {
    if link.feasibility_from_sum() {
        let mut idx: Vec<usize> = (0..alpha.len()).collect();
        idx.sort_by(|&a, &b| alpha[b].partial_cmp(&alpha[a]).unwrap());
        link.log_p(alpha[idx[0]], alpha[idx[1]])
    } else {
        let n = alpha.len();
        let mut best = f64::NEG_INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                best = best.max(link.log_p(alpha[i], alpha[j]));
            }
        }
        best
    }
}

fn at_probability_boundary(link: &Link, alpha: &[f64]) -> bool {
    // p >= 1 - gap  <=>  log p >= log(1 - gap); the linearized form is ample
    // at this magnitude.
    max_log_p(link, alpha) >= -BOUNDARY_P_GAP
}

fn resolve_solver(opts: &FitOptions, n: usize) -> SolverKind {
    match opts.solver {
        SolverChoice::Exact => SolverKind::ExactNewton,
        SolverChoice::Preconditioned => SolverKind::HPreconditioned,
        SolverChoice::Auto => {
            if n <= opts.dense_cap {
                SolverKind::ExactNewton
            } else {
                SolverKind::HPreconditioned
            }
        }
    }
}

// Solve (-hess) s = grad for the ascent step s (so the Newton target is
// x + s). Cholesky first, LU as a fallback; None when both fail.
//
// A relative ridge keeps the solve deterministic when the Hessian is rank
// deficient (the log-link likelihood is flat along some directions on small
// graphs): it caps the condition number near 1e7 so backward error cannot
// push iterates measurably along a flat manifold, at the price of a ~1e-7
// relative perturbation of well-conditioned steps.
fn solve_dense_step(h: &DenseHessian, grad: &[f64]) -> Option<Vec<f64>> {
    // Dense factorizations run sequentially: fit outputs must be
    // bit-reproducible across runs.
    static PAR_ONCE: std::sync::Once = std::sync::Once::new();
    PAR_ONCE.call_once(|| faer::set_global_parallelism(faer::Par::Seq));

    let n = h.n();
    let max_diag = (0..n).fold(f64::MIN_POSITIVE, |m, i| m.max(-h.get(i, i)));
    let ridge = 1e-7 * max_diag;
    let neg =
        faer::Mat::<f64>::from_fn(n, n, |i, j| -h.get(i, j) + if i == j { ridge } else { 0.0 });
    let rhs = faer::Mat::<f64>::from_fn(n, 1, |i, _| grad[i]);
    let sol = match neg.llt(faer::Side::Lower) {
        Ok(f) => {
            use faer::linalg::solvers::Solve;
            f.solve(&rhs)
        }
        Err(_) => {
            use faer::linalg::solvers::Solve;
            neg.partial_piv_lu().solve(&rhs)
        }
    };
    let s: Vec<f64> = (0..n).map(|i| sol[(i, 0)]).collect();
    // a rank-deficient Hessian (flat likelihood directions, possible for the
    // log link on small graphs) lets the solver return an arbitrary huge
    // null-space component; reject such steps
    if s.iter().all(|v| v.is_finite()) && inf_norm(&s) <= 1e4 {
        Some(s)
    } else {
        None
    }
}

/// Fit the maximum-likelihood parameters by damped Newton iteration from the
/// plug-in starting point.
pub fn fit_mle(g: &Graph, link: &Link, opts: &FitOptions) -> Result<FitResult> {
    if g.n() == 0 || g.min_degree() == 0 {
        return Err(Error::IsolatedNode);
    }
    let n = g.n();
    let plug = plugin_estimate(g)?;
    let mut x = plug.alpha_tilde;

    // Log link on dense graphs: the plug-in start may be infeasible. Shift by
    // a common constant so the largest predictor sits at -1e-3; the sparse
    // regime never triggers this.
    if matches!(link, Link::Log) {
        let mp = max_pair_sum(&x);
        if mp >= 0.0 {
            let shift = (mp + 1e-3) / 2.0;
            for a in &mut x {
                *a -= shift;
            }
        }
    }
    if !alpha_feasible(link, &x) {
        return Err(Error::Domain {
            link: link.name().to_string(),
            predictor: max_pair_sum(&x),
        });
    }

    let solver = resolve_solver(opts, n);
    let degrees: Vec<f64> = g.degrees().iter().map(|&d| d as f64).collect();
    let structured = StructuredHessian::new(g)?;
    let start_norm = inf_norm(&x);

    let mut ll = log_lik(g, link, &x)?;
    let mut trace: Vec<TraceStep> = Vec::new();
    let mut iterates = opts.record_iterates.then(|| vec![x.clone()]);
    let mut iterations = 0usize;

    let finish = |x: ParamVector,
                  ll: f64,
                  iterations: usize,
                  score_norm: f64,
                  converged: bool,
                  trace: Vec<TraceStep>,
                  iterates: Option<Vec<ParamVector>>| FitResult {
        alpha_hat: x,
        ll_hat: ll,
        iterations,
        score_norm,
        solver,
        converged,
        trace,
        iterates,
    };

    loop {
        let grad = gradient(g, link, &x)?;
        let score_norm = grad
            .iter()
            .zip(&degrees)
            .fold(0.0f64, |m, (gk, dk)| m.max((gk / dk).abs()));

        if score_norm <= opts.tolerance {
            if at_probability_boundary(link, &x) {
                return Err(Error::MleDiverged { iterations, alpha_norm: inf_norm(&x) });
            }
            return Ok(finish(x, ll, iterations, score_norm, true, trace, iterates));
        }
        if iterations >= opts.max_iterations {
            if at_probability_boundary(link, &x) || inf_norm(&x) > start_norm + GROWTH_MARGIN {
                return Err(Error::MleDiverged { iterations, alpha_norm: inf_norm(&x) });
            }
            return Ok(finish(x, ll, iterations, score_norm, false, trace, iterates));
        }

        let step = match solver {
            SolverKind::ExactNewton => {
                let rep = hessian(g, link, &x, HessianMode::Dense { cap: opts.dense_cap })?;
                let HessianRep::Dense(h) = rep else { unreachable!() };
                // singular Hessians (possible off the paper's regime) fall
                // back to the always-invertible structured approximation
                solve_dense_step(&h, &grad)
                    .unwrap_or_else(|| structured.apply_inverse(&grad).iter().map(|v| -v).collect())
            }
            SolverKind::HPreconditioned => {
                structured.apply_inverse(&grad).iter().map(|v| -v).collect()
            }
        };

        if opts.max_halvings == 0 {
            // Pure Newton: accept the full step unconditionally.
            for (xi, si) in x.iter_mut().zip(&step) {
                *xi += si;
            }
            ll = log_lik(g, link, &x)?;
            trace.push(TraceStep { step_norm: inf_norm(&step), ll });
        } else {
            // The compensated likelihood sum carries a few ulps of noise;
            // once true gains fall below that, strict-ascent comparisons stop
            // carrying signal and the first feasible trial is accepted within
            // the noise band.
            let noise = 8.0 * f64::EPSILON * ll.abs().max(1.0);
            let mut t = 1.0;
            let mut accepted = false;
            let mut first_feasible = true;
            for _ in 0..=opts.max_halvings {
                let trial: Vec<f64> = x.iter().zip(&step).map(|(xi, si)| xi + t * si).collect();
                if alpha_feasible(link, &trial) {
                    let trial_ll = log_lik(g, link, &trial)?;
                    let good = trial_ll > ll || (first_feasible && trial_ll >= ll - noise);
                    first_feasible = false;
                    if good {
                        x = trial;
                        ll = trial_ll;
                        trace.push(TraceStep { step_norm: t * inf_norm(&step), ll });
                        accepted = true;
                        break;
                    }
                }
                t *= opts.step_contraction;
            }
            if !accepted {
                // a stalled search at the probability boundary means the
                // maximizer escaped, not that the step logic failed
                if at_probability_boundary(link, &x) {
                    return Err(Error::MleDiverged { iterations, alpha_norm: inf_norm(&x) });
                }
                return Err(Error::LineSearchFailed { iteration: iterations });
            }
        }

        iterations += 1;
        if let Some(list) = iterates.as_mut() {
            list.push(x.clone());
        }
        if inf_norm(&x) > opts.divergence_cap {
            return Err(Error::MleDiverged { iterations, alpha_norm: inf_norm(&x) });
        }
    }
}

/// Fitted probability of the pair `(i, j)` under a converged fit.
///
/// Probabilities are computed on demand; no n-by-n table is materialized.
pub fn fitted_prob(fit: &FitResult, link: &Link, i: usize, j: usize) -> Result<EdgeProb> {
    if !fit.converged {
        return Err(Error::NotConverged);
    }
    assert_ne!(i, j, "fitted probability is defined for distinct nodes");
    link.edge_prob(fit.alpha_hat[i], fit.alpha_hat[j])
}

/// Sample a graph from the model: each unordered pair `(i, j)` with `i < j`,
/// visited in row-major order, is included independently with probability
/// `p_ij(alpha)` using one draw from a ChaCha8 stream seeded by `seed`.
///
/// Node labels are the indices `0..n`. The same `(alpha, link, seed)` always
/// produces the same graph, on every platform.
pub fn sample_graph(alpha: &[f64], link: &Link, seed: u64) -> Result<Graph> {
    let n = alpha.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(u32, u32)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = link.edge_prob(alpha[i], alpha[j])?.value();
            if rng.random::<f64>() < p {
                edges.push((i as u32, j as u32));
            }
        }
    }
    let labels: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    Graph::from_edges(labels, &edges)
}

/// Build a heterogeneous parameter vector whose node weights are log-spaced
/// over one decade, rescaled by a common shift so the expected mean degree
/// `sum_i sum_{j != i} p_ij / n` matches the target.
pub fn calibrated_alpha(n: usize, mean_degree: f64, link: &Link) -> Result<ParamVector> {
    if n < 2 || mean_degree >= (n - 1) as f64 || mean_degree <= 0.0 {
        return Err(Error::InfeasibleTarget {
            reason: format!("mean degree {mean_degree} is not in (0, n-1) for n = {n}"),
        });
    }
    let base: Vec<f64> = (0..n)
        .map(|i| {
            let t = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
            (10f64.powf(t)).ln()
        })
        .collect();

    let mean_at = |c: f64| -> f64 {
        let mut sum = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                sum += link.log_p(base[i] + c, base[j] + c).exp();
            }
        }
        2.0 * sum / n as f64
    };

    // The log link caps the shift at the feasibility edge of the largest pair.
    let mut hi = match link {
        Link::Log => {
            let mp = max_pair_sum(&base);
            -mp / 2.0 - 1e-9
        }
        _ => 10.0,
    };
    let mut lo = -40.0;
    if mean_at(hi) < mean_degree {
        return Err(Error::InfeasibleTarget {
            reason: format!(
                "mean degree {mean_degree} unreachable under the {} link (max {:.3})",
                link.name(),
                mean_at(hi)
            ),
        });
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mean_at(mid) < mean_degree {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = 0.5 * (lo + hi);
    Ok(base.into_iter().map(|b| b + c).collect())
}

const BF_BOX_LO: f64 = -20.0;
const BF_BOX_HI: f64 = 5.0;
const BF_EDGE_MARGIN: f64 = 1e-4;

fn golden_section_max(mut a: f64, mut b: f64, f: &dyn Fn(f64) -> f64, tol: f64) -> f64 {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Test oracle: maximize the log-likelihood by coordinate-wise golden-section
/// sweeps over the box `[-20, 5]^n`, entirely independent of the Newton path.
///
/// Intended for graphs with at most 6 nodes. `BoundaryEscape` is reported when
/// the maximizer presses the box, or when the fitted probabilities reach the
/// boundary of the unit interval (the likelihood equation has no solution).
pub fn brute_force_mle(g: &Graph, link: &Link) -> Result<ParamVector> {
    assert!(g.n() <= 6, "the brute-force oracle is for n <= 6");
    if g.min_degree() == 0 {
        return Err(Error::IsolatedNode);
    }
    let n = g.n();
    let plug = plugin_estimate(g)?;
    let mut x: Vec<f64> = plug
        .alpha_tilde
        .iter()
        .map(|&a| a.clamp(BF_BOX_LO, BF_BOX_HI))
        .collect();
    if matches!(link, Link::Log) {
        let mp = max_pair_sum(&x);
        if mp >= 0.0 {
            let shift = (mp + 1e-3) / 2.0;
            for a in &mut x {
                *a -= shift;
            }
        }
    }

    for _pass in 0..5000 {
        let mut largest_move = 0.0f64;
        for k in 0..n {
            let upper = match link {
                Link::Log | Link::Custom(_) => {
                    let max_other = x
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != k)
                        .map(|(_, &v)| v)
                        .fold(f64::NEG_INFINITY, f64::max);
                    BF_BOX_HI.min(-max_other - 1e-9)
                }
                _ => BF_BOX_HI,
            };
            if upper <= BF_BOX_LO {
                return Err(Error::BoundaryEscape { coordinate: k });
            }
            let mut work = x.clone();
            let objective = |t: f64| -> f64 {
                let mut w = work.clone();
                w[k] = t;
                log_lik(g, link, &w).unwrap_or(f64::NEG_INFINITY)
            };
            let best = golden_section_max(BF_BOX_LO, upper, &objective, 1e-11);
            largest_move = largest_move.max((best - x[k]).abs());
            work[k] = best;
            x = work;
        }
        if largest_move < 1e-10 {
            break;
        }
    }

    for (k, &v) in x.iter().enumerate() {
        if v - BF_BOX_LO < BF_EDGE_MARGIN || BF_BOX_HI - v < BF_EDGE_MARGIN {
            return Err(Error::BoundaryEscape { coordinate: k });
        }
    }
    if at_probability_boundary(link, &x) {
        let worst = x
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(k, _)| k)
            .unwrap_or(0);
        return Err(Error::BoundaryEscape { coordinate: worst });
    }
    Ok(x)
}
