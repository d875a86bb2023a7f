//! Convergence certificates and realized approximation errors.
//!
//! A certificate evaluates, in closed form, every constant of the
//! plug-in-versus-MLE approximation analysis: the sparsity threshold and
//! error constants, the bound chain `P -> F -> L -> (B0, kappa, delta)` at
//! unit radius, the Lipschitz block `M -> lambda` at radius `exp(4 delta)`,
//! and the Kantorovich quantities `h = 2 kappa lambda delta` and
//! `t* = (2/h)(1 - sqrt(1 - h)) delta`. The certificate applies when the
//! sparsity statistic sits below its threshold; out-of-regime graphs get
//! `applies = false` with a machine-readable reason instead of an error, since
//! realized errors remain worth reporting there.

use crate::error::{Error, Result};
use crate::estimate::{FitResult, PluginEstimate};
use crate::graph::Graph;
use crate::link::Link;

/// Sparsity threshold `{15 (C0 + 1)}^-2`.
pub fn eps_bar0(c0: f64) -> f64 {
    let b = 15.0 * (c0 + 1.0);
    1.0 / (b * b)
}

/// Sup-norm error constant `C = 10 (C0 + 1)`.
pub fn sup_error_constant(c0: f64) -> f64 {
    10.0 * (c0 + 1.0)
}

/// Relative probability error constant `C1 = 24 (C0 + 1)`.
pub fn prob_error_constant(c0: f64) -> f64 {
    24.0 * (c0 + 1.0)
}

/// Relative log-likelihood error constant `C2 = 49 (C0 + 1)`.
pub fn loglik_error_constant(c0: f64) -> f64 {
    49.0 * (c0 + 1.0)
}

/// Why a certificate does or does not apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateStatus {
    /// Sparsity condition met and the whole chain is finite with h <= 1.
    Applies,
    /// `eps0` exceeds the threshold `eps_bar0`.
    SparsityExceeded,
    /// A denominator degenerated (`1 - P0 eps0 <= 0` or `B0 eps0 >= 1`).
    ConstantsDiverged,
    /// In-regime but `h > 1`; the analysis rules this out, kept defensively.
    KantorovichOutOfRange,
}

impl std::fmt::Display for CertificateStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CertificateStatus::Applies => write!(f, "applies"),
            CertificateStatus::SparsityExceeded => write!(f, "eps0 exceeds eps_bar0"),
            CertificateStatus::ConstantsDiverged => write!(f, "constants diverged"),
            CertificateStatus::KantorovichOutOfRange => write!(f, "h > 1"),
        }
    }
}

/// The intermediate bound constants, evaluated at the certificate's radius
/// `r = exp(4 delta)` (the `L` block always uses radius 1). NaN where the
/// chain degenerated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaConstants {
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub f0: f64,
    pub f0_bar: f64,
    pub f1: f64,
    pub f1_bar: f64,
    pub f2: f64,
    pub l1: f64,
    pub l2: f64,
    pub l2_bar: f64,
    pub l3: f64,
    pub m1: f64,
    pub m1_bar: f64,
    pub m2: f64,
}

/// All computable constants of the approximation analysis for one
/// (graph, link) pair, plus the applicability verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub c0: f64,
    pub eps0: f64,
    pub eps_bar0: f64,
    /// Sup-norm constant C.
    pub c: f64,
    /// Probability-error constant C1.
    pub c1: f64,
    /// Log-likelihood-error constant C2.
    pub c2: f64,
    pub b0: f64,
    pub kappa: f64,
    pub delta: f64,
    pub lambda: f64,
    pub h: f64,
    pub t_star: f64,
    /// Neighborhood radius `exp(4 delta)`.
    pub r: f64,
    pub applies: bool,
    pub status: CertificateStatus,
    pub lemma: LemmaConstants,
}

// The P and F families as functions of the neighborhood radius r.
struct PfBlock {
    p0: f64,
    p1: f64,
    p2: f64,
    p3: f64,
    f0: f64,
    f0_bar: f64,
    f1: f64,
    f1_bar: f64,
    f2: f64,
    ok: bool,
}

fn pf_block(c0: f64, eps0: f64, r: f64) -> PfBlock {
    let cer = c0 * eps0 * r;
    let growth = cer.exp();
    let p0 = r * growth;
    let p1 = p0 * (1.0 + cer);
    let p2 = p0 * ((1.0 + cer) * (1.0 + cer) + cer);
    let p3 = p0 * ((1.0 + cer).powi(3) + (1.0 + cer) * cer + cer);
    let den = 1.0 - p0 * eps0;
    if den <= 0.0 {
        return PfBlock {
            p0,
            p1,
            p2,
            p3,
            f0: f64::NAN,
            f0_bar: f64::NAN,
            f1: f64::NAN,
            f1_bar: f64::NAN,
            f2: f64::NAN,
            ok: false,
        };
    }
    let q1 = p1 / den;
    let f0 = c0 * r + q1;
    let f0_bar = c0 * r * growth + f0;
    let f1 = c0 * r + eps0 * q1 * q1 + p2 / den;
    let f1_bar = growth * (c0 * r + c0 * f0 * eps0 * r + f1);
    let f2 = c0 * r + 2.0 * eps0 * eps0 * q1.powi(3) + 3.0 * eps0 * p2 * p1 / (den * den)
        + p3 / den;
    PfBlock { p0, p1, p2, p3, f0, f0_bar, f1, f1_bar, f2, ok: true }
}

/// Evaluate the certificate from the sub-exponential constant and the
/// sparsity statistic alone (degrees are assumed positive).
pub fn certificate_from_stats(c0: f64, eps0: f64) -> Certificate {
    let bar = eps_bar0(c0);
    let nan_lemma = LemmaConstants {
        p0: f64::NAN,
        p1: f64::NAN,
        p2: f64::NAN,
        p3: f64::NAN,
        f0: f64::NAN,
        f0_bar: f64::NAN,
        f1: f64::NAN,
        f1_bar: f64::NAN,
        f2: f64::NAN,
        l1: f64::NAN,
        l2: f64::NAN,
        l2_bar: f64::NAN,
        l3: f64::NAN,
        m1: f64::NAN,
        m1_bar: f64::NAN,
        m2: f64::NAN,
    };
    let base = Certificate {
        c0,
        eps0,
        eps_bar0: bar,
        c: sup_error_constant(c0),
        c1: prob_error_constant(c0),
        c2: loglik_error_constant(c0),
        b0: f64::NAN,
        kappa: f64::NAN,
        delta: f64::NAN,
        lambda: f64::NAN,
        h: f64::NAN,
        t_star: f64::NAN,
        r: f64::NAN,
        applies: false,
        status: CertificateStatus::ConstantsDiverged,
        lemma: nan_lemma,
    };
    let in_regime = eps0 <= bar;
    let fail = |status: CertificateStatus, partial: Certificate| -> Certificate {
        Certificate {
            status: if in_regime { status } else { CertificateStatus::SparsityExceeded },
            applies: false,
            ..partial
        }
    };

    // L block at unit radius.
    let unit = pf_block(c0, eps0, 1.0);
    if !unit.ok {
        return fail(CertificateStatus::ConstantsDiverged, base);
    }
    let l1 = 1.0 + unit.f0 + unit.f0_bar;
    let l2 = unit.f1;
    let l2_bar = unit.f0_bar + unit.f1_bar;
    let l3 = 2.0 + l2 + l2_bar;
    let b0 = 1.5 * (l2 + l2_bar + l3);
    let with_l = Certificate {
        b0,
        lemma: LemmaConstants { l1, l2, l2_bar, l3, ..base.lemma },
        ..base
    };
    if b0 * eps0 >= 1.0 {
        return fail(CertificateStatus::ConstantsDiverged, with_l);
    }
    let kappa = 1.5 / (1.0 - b0 * eps0);
    let delta = l1 * kappa * eps0;
    let r = (4.0 * delta).exp();

    // Lipschitz block at radius exp(4 delta).
    let wide = pf_block(c0, eps0, r);
    if !wide.ok {
        return fail(
            CertificateStatus::ConstantsDiverged,
            Certificate { kappa, delta, r, ..with_l },
        );
    }
    let m1 = wide.f2 * eps0;
    let m1_bar = 2.0 * r * (1.0 + wide.f0_bar + wide.f1_bar);
    let m2 = m1 + m1_bar;
    let lambda = 2.0 * m2;
    let h = 2.0 * kappa * lambda * delta;
    // stable form of (2/h)(1 - sqrt(1 - h)) delta
    let t_star = if h <= 1.0 { 2.0 * delta / (1.0 + (1.0 - h).sqrt()) } else { f64::NAN };

    let lemma = LemmaConstants {
        p0: wide.p0,
        p1: wide.p1,
        p2: wide.p2,
        p3: wide.p3,
        f0: wide.f0,
        f0_bar: wide.f0_bar,
        f1: wide.f1,
        f1_bar: wide.f1_bar,
        f2: wide.f2,
        l1,
        l2,
        l2_bar,
        l3,
        m1,
        m1_bar,
        m2,
    };
    let status = if !in_regime {
        CertificateStatus::SparsityExceeded
    } else if h > 1.0 {
        CertificateStatus::KantorovichOutOfRange
    } else {
        CertificateStatus::Applies
    };
    Certificate {
        kappa,
        delta,
        lambda,
        h,
        t_star,
        r,
        applies: status == CertificateStatus::Applies,
        status,
        lemma,
        ..with_l
    }
}

/// Certificate for a graph under a link. Requires every degree positive.
pub fn certificate(g: &Graph, link: &Link) -> Result<Certificate> {
    if g.n() == 0 || g.min_degree() == 0 {
        return Err(Error::IsolatedNode);
    }
    let eps0 = g.sparsity_stats()?.eps0;
    Ok(certificate_from_stats(link.c0(), eps0))
}

/// One node's scaled deviation, with its degree attached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerNodeError {
    pub degree: u32,
    /// `(alpha_hat_i - alpha_tilde_i) / (C eps0)`.
    pub scaled: f64,
}

/// Realized approximation errors between a converged fit and the plug-in.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub sup_err: f64,
    pub l2_err: f64,
    /// `sup_err / (C eps0)`.
    pub scaled_sup: f64,
    /// `l2_err / (sqrt(n) C eps0)`.
    pub scaled_l2: f64,
    pub per_node_scaled: Vec<PerNodeError>,
    /// `max_{i<j} |p_hat - p_tilde| / p_tilde`.
    pub p_rel_max: f64,
    /// `|ll_hat - ll_tilde| / |ll_tilde|`; absent when the plug-in
    /// likelihood is undefined.
    pub ll_rel: Option<f64>,
}

/// Measure the realized errors of a converged fit against the plug-in.
pub fn error_report(
    g: &Graph,
    link: &Link,
    fit: &FitResult,
    plug: &PluginEstimate,
) -> Result<ErrorReport> {
    if !fit.converged {
        return Err(Error::NotConverged);
    }
    let n = g.n();
    let c = sup_error_constant(link.c0());
    let scale = c * plug.eps0;

    let mut sup_err = 0.0f64;
    let mut sq_sum = 0.0f64;
    let mut per_node_scaled = Vec::with_capacity(n);
    for i in 0..n {
        let diff = fit.alpha_hat[i] - plug.alpha_tilde[i];
        sup_err = sup_err.max(diff.abs());
        sq_sum += diff * diff;
        per_node_scaled.push(PerNodeError { degree: g.degree(i), scaled: diff / scale });
    }
    let l2_err = sq_sum.sqrt();

    let mut p_rel_max = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let p_hat = link.edge_prob(fit.alpha_hat[i], fit.alpha_hat[j])?.value();
            let p_tilde = plug.p_tilde(i, j);
            p_rel_max = p_rel_max.max((p_hat - p_tilde).abs() / p_tilde);
        }
    }

    let ll_rel = plug.ll_tilde.map(|lt| (fit.ll_hat - lt).abs() / lt.abs());

    Ok(ErrorReport {
        sup_err,
        l2_err,
        scaled_sup: sup_err / scale,
        scaled_l2: l2_err / ((n as f64).sqrt() * scale),
        per_node_scaled,
        p_rel_max,
        ll_rel,
    })
}

/// Verdicts of the three error bounds against a certificate.
///
/// The bounds are only guaranteed when the certificate applies, but they are
/// evaluated regardless, mirroring how out-of-regime datasets are reported.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub applies: bool,
    /// `sup_err <= C eps0`.
    pub sup_ok: bool,
    /// `p_rel_max <= C1 eps0`.
    pub p_rel_ok: bool,
    /// `ll_rel <= C2 eps0`; absent with the plug-in likelihood undefined.
    pub ll_rel_ok: Option<bool>,
}

pub fn check_bounds(cert: &Certificate, rep: &ErrorReport) -> BoundCheck {
    BoundCheck {
        applies: cert.applies,
        sup_ok: rep.sup_err <= cert.c * cert.eps0,
        p_rel_ok: rep.p_rel_max <= cert.c1 * cert.eps0,
        ll_rel_ok: rep.ll_rel.map(|v| v <= cert.c2 * cert.eps0),
    }
}
