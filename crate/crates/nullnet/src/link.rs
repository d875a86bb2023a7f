//! The link-function family: each member perturbs the log-linear predictor by
//! a smooth correction `eps(alpha_i, alpha_j)`, giving
//! `log p_ij = alpha_i + alpha_j + eps(alpha_i, alpha_j)`.
//!
//! Three links are built in (log, complementary log-log, logit) together with
//! their first and second partials and sub-exponential constants. Custom links
//! supply closures plus a declared constant, which the library can only verify
//! by sampled checks.
//!
//! Evaluation policy: `log p` and `log(1 - p)` are computed directly from the
//! linear predictor per link, never by exponentiating and re-taking logs, so
//! sparse regimes with p near 0 keep full precision.

use std::sync::Arc;

use crate::error::{Error, Result};

/// An edge probability, clamped to the open unit interval.
///
/// Values saturate one ulp inside the boundary; exact log-scale quantities are
/// available through [`Link::log_p`] and [`Link::log_one_minus_p`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeProb(f64);

impl EdgeProb {
    const MAX: f64 = 1.0 - f64::EPSILON / 2.0;

    fn new(p: f64) -> EdgeProb {
        EdgeProb(p.clamp(f64::MIN_POSITIVE, Self::MAX))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// A user-supplied link: the correction function, its partials, and the
/// declared sub-exponential constant.
///
/// `deps` is the partial in the first argument; the partial in the second
/// follows from the symmetry `eps_ij(x, y) = eps_ji(y, x)`. `d2eps` returns
/// `(mixed, own)`: the cross partial and the repeated partial in the first
/// argument.
pub struct CustomLink {
    pub name: String,
    pub c0: f64,
    pub eps: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub deps: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub d2eps: Box<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync>,
}

impl std::fmt::Debug for CustomLink {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CustomLink")
            .field("name", &self.name)
            .field("c0", &self.c0)
            .finish_non_exhaustive()
    }
}

/// A member of the link family.
#[derive(Debug, Clone)]
pub enum Link {
    Log,
    Cloglog,
    Logit,
    Custom(Arc<CustomLink>),
}

impl Link {
    /// The pure log-linear link: `eps` is identically zero.
    pub fn log() -> Link {
        Link::Log
    }

    /// The complementary log-log link: `log(-log(1 - p)) = alpha_i + alpha_j`.
    pub fn cloglog() -> Link {
        Link::Cloglog
    }

    /// The logistic link: `logit p = alpha_i + alpha_j`.
    pub fn logit() -> Link {
        Link::Logit
    }

    pub fn from_name(name: &str) -> Option<Link> {
        match name {
            "log" => Some(Link::Log),
            "cloglog" => Some(Link::Cloglog),
            "logit" => Some(Link::Logit),
            _ => None,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Link::Log => "log",
            Link::Cloglog => "cloglog",
            Link::Logit => "logit",
            Link::Custom(c) => &c.name,
        }
    }

    /// Sub-exponential constant bounding `eps` and its partials.
    pub fn c0(&self) -> f64 {
        match self {
            Link::Log => 0.0,
            Link::Cloglog => 0.5,
            Link::Logit => 1.0,
            Link::Custom(c) => c.c0,
        }
    }

    /// The correction `eps(x, y)`.
    pub fn eps(&self, x: f64, y: f64) -> f64 {
        match self {
            Link::Log => 0.0,
            Link::Cloglog => cloglog_eps(x + y),
            Link::Logit => -softplus(x + y),
            Link::Custom(c) => (c.eps)(x, y),
        }
    }

    /// Partial of `eps` in its first argument. The partial in the second
    /// argument is `deps(y, x)` by symmetry.
    pub fn deps(&self, x: f64, y: f64) -> f64 {
        match self {
            Link::Log => 0.0,
            Link::Cloglog => cloglog_deps(x + y),
            Link::Logit => -sigmoid(x + y),
            Link::Custom(c) => (c.deps)(x, y),
        }
    }

    /// Second partials of `eps`: `(mixed, own)` in the first argument.
    pub fn d2eps(&self, x: f64, y: f64) -> (f64, f64) {
        match self {
            Link::Log => (0.0, 0.0),
            Link::Cloglog => {
                let v = cloglog_d2eps(x + y);
                (v, v)
            }
            Link::Logit => {
                let s = x + y;
                let v = -sigmoid(s) * sigmoid(-s);
                (v, v)
            }
            Link::Custom(c) => (c.d2eps)(x, y),
        }
    }

    /// `log p(x, y)`, computed directly from the predictor.
    pub fn log_p(&self, x: f64, y: f64) -> f64 {
        let s = x + y;
        match self {
            Link::Log => s,
            Link::Cloglog => {
                // log p = log(1 - exp(-e^s))
                (-(-s.exp()).exp_m1()).ln()
            }
            Link::Logit => -softplus(-s),
            Link::Custom(c) => s + (c.eps)(x, y),
        }
    }

    /// `log(1 - p(x, y))`, computed directly from the predictor.
    ///
    /// NaN when the predictor leaves the link's domain (log and custom links
    /// with `log p >= 0`).
    pub fn log_one_minus_p(&self, x: f64, y: f64) -> f64 {
        let s = x + y;
        match self {
            Link::Log => ln_one_minus_exp(s),
            Link::Cloglog => -s.exp(),
            Link::Logit => -softplus(s),
            Link::Custom(_) => ln_one_minus_exp(self.log_p(x, y)),
        }
    }

    /// Whether the pair predictor stays inside the link's domain (p < 1).
    pub fn feasible(&self, x: f64, y: f64) -> bool {
        match self {
            Link::Cloglog | Link::Logit => true,
            Link::Log | Link::Custom(_) => self.log_p(x, y) < 0.0,
        }
    }

    /// True when feasibility depends on the predictor sum only, so a whole
    /// parameter vector can be checked through its two largest entries.
    pub(crate) fn feasibility_from_sum(&self) -> bool {
        !matches!(self, Link::Custom(_))
    }

    /// The edge probability `p = exp(x + y + eps(x, y))`.
    ///
    /// `Domain` error when p would reach 1 (log link and custom links with a
    /// bounded domain); otherwise the value saturates just inside (0, 1).
    pub fn edge_prob(&self, x: f64, y: f64) -> Result<EdgeProb> {
        if !self.feasible(x, y) {
            return Err(Error::Domain {
                link: self.name().to_string(),
                predictor: x + y,
            });
        }
        Ok(EdgeProb::new(self.log_p(x, y).exp()))
    }

    /// Sampled check of the sub-exponential bound: `|eps|`, `|deps|`, and both
    /// second partials stay within `c0 * exp(x + y) + slack` at `samples`
    /// pseudorandom points of `[lo, hi]^2`.
    pub fn assumption_holds_on_box(
        &self,
        lo: f64,
        hi: f64,
        samples: usize,
        seed: u64,
        slack: f64,
    ) -> bool {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let c0 = self.c0();
        for _ in 0..samples {
            let x = lo + (hi - lo) * rng.random::<f64>();
            let y = lo + (hi - lo) * rng.random::<f64>();
            let bound = c0 * (x + y).exp() + slack;
            let (mixed, own) = self.d2eps(x, y);
            let worst = self
                .eps(x, y)
                .abs()
                .max(self.deps(x, y).abs())
                .max(mixed.abs())
                .max(own.abs());
            // NaN must fail the bound too
            if worst.is_nan() || worst > bound {
                return false;
            }
        }
        true
    }
}

/// `log(1 + e^t)`, stable across the whole real line.
pub(crate) fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// Logistic function, evaluated without overflow.
pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(1 - e^t)` for t < 0.
pub(crate) fn ln_one_minus_exp(t: f64) -> f64 {
    if t >= 0.0 {
        f64::NAN
    } else if t < -std::f64::consts::LN_2 {
        (-t.exp()).ln_1p()
    } else {
        (-t.exp_m1()).ln()
    }
}

// Cloglog correction: eps(s) = log(1 - exp(-e^s)) - s = log((1 - e^{-u})/u)
// with u = e^s. The ratio form avoids the s - s cancellation of the naive
// expression; a short series takes over once u is small enough that the
// direct form loses digits.
const CLOGLOG_SERIES_CUTOFF: f64 = 1e-4;

fn cloglog_eps(s: f64) -> f64 {
    let u = s.exp();
    if u < CLOGLOG_SERIES_CUTOFF {
        -u / 2.0 + u * u / 24.0
    } else {
        ((-(-u).exp_m1()) / u).ln()
    }
}

// eps'(s) = u/(e^u - 1) - 1, written via e^{-u} so it never overflows.
fn cloglog_deps(s: f64) -> f64 {
    let u = s.exp();
    if u < CLOGLOG_SERIES_CUTOFF {
        -u / 2.0 + u * u / 12.0
    } else {
        let m = -(-u).exp_m1(); // 1 - e^{-u}
        u * (-u).exp() / m - 1.0
    }
}

// eps''(s) = w (1 - u/(1 - e^{-u})) with w = u e^{-u}/(1 - e^{-u}).
fn cloglog_d2eps(s: f64) -> f64 {
    let u = s.exp();
    if u < CLOGLOG_SERIES_CUTOFF {
        -u / 2.0 + u * u / 6.0
    } else {
        let m = -(-u).exp_m1();
        let w = u * (-u).exp() / m;
        w * (1.0 - u / m)
    }
}
