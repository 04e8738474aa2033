//! Spectral and operator-level diagnostics.
//!
//! These are the measurement tools of the crate: eigenvalue decay reports of
//! normalized Gram matrices, the local Rademacher fixed point
//! `r̂* = min_h (h/n + √((1/n)·Σ_{i>h} μ̃ᵢ))`, the empirical operator
//! approximation error `‖(K/n+λI)^{-1/2}·((K̃−K)/n)·(K/n+λI)^{-1/2}‖₂`, and
//! closed-form ridge approximation of a target function by a feature map.
//! Universal constants from the theory are never estimated; everything is
//! reported constant-free.

use alloc::format;
use alloc::vec::Vec;
// Float math resolves through std's inherent methods whenever std is in the
// crate graph (tests); the trait supplies it in pure no_std builds.
#[allow(unused_imports)]
use num_traits::Float;
use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::erm::{empirical_risk, zero_one_risk, Loss, TrainedModel};
use crate::error::{CoreError, Result};
use crate::linalg;

/// Relative cutoff under which an eigenvalue counts as numerically zero.
const RANK_CUTOFF: f64 = 1e-10;
/// A spectrum whose smallest positive eigenvalue is within this factor of the
/// largest is treated as flat (finite rank with no decay).
const FLAT_RATIO: f64 = 0.1;
/// Consecutive drop at the cutoff boundary that counts as a hard rank cliff.
const CLIFF_RATIO: f64 = 1e4;
/// Minimum coefficient of determination for a decay fit to classify.
const FIT_R2_MIN: f64 = 0.98;
/// Decay fits use only the resolved head of the spectrum (eigenvalues within
/// this relative factor of the largest); entries further down carry
/// eigensolver noise and truncation effects.
const FIT_FLOOR: f64 = 1e-6;

/// Shape of an eigenvalue decay profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayClass {
    FiniteRank,
    Exponential,
    Polynomial,
    Unclassified,
}

/// Eigenvalue report of a normalized Gram matrix `K/n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Eigenvalues of `K/n`, clamped at zero, nonincreasing.
    pub eigenvalues: Vec<f64>,
    pub decay_class: DecayClass,
    /// Rank for `FiniteRank`, per-index rate `b` (μᵢ ∝ e^{−b·i}) for
    /// `Exponential`, exponent `γ` (μᵢ ∝ i^{−γ}) for `Polynomial`.
    pub decay_param: f64,
    /// Coefficient of determination of the winning decay fit (1.0 for
    /// finite rank).
    pub fit_r2: f64,
    /// Local Rademacher fixed point of the spectrum.
    pub r_star: f64,
    /// The h attaining it.
    pub h_star: usize,
}

/// Eigenvalues of `K/n` with decay classification and the fixed point.
pub fn gram_spectrum(k: ArrayView2<f64>) -> Result<SpectrumReport> {
    linalg::check_symmetric(k)?;
    let n = k.nrows();
    let eig = linalg::sym_eigen(k)?;
    let floor = -RANK_CUTOFF * n as f64;
    let mut mu: Vec<f64> = Vec::with_capacity(n);
    for &w in eig.values.iter().rev() {
        let scaled = w / n as f64;
        if scaled < floor {
            return Err(CoreError::InvalidParameter {
                name: "k",
                reason: format!("matrix is not PSD (eigenvalue {scaled} of K/n)"),
            });
        }
        mu.push(scaled.max(0.0));
    }

    let (decay_class, decay_param, fit_r2) = classify_decay(&mu);
    let (r_star, h_star) = local_rademacher_fixed_point(&mu, n)?;
    Ok(SpectrumReport {
        eigenvalues: mu,
        decay_class,
        decay_param,
        fit_r2,
        r_star,
        h_star,
    })
}

fn classify_decay(mu: &[f64]) -> (DecayClass, f64, f64) {
    let n = mu.len();
    let mu1 = mu[0];
    if mu1 <= 0.0 {
        return (DecayClass::FiniteRank, 0.0, 1.0);
    }
    let cutoff = RANK_CUTOFF * mu1;
    let rank = mu.iter().filter(|&&m| m >= cutoff).count();
    if rank == 0 {
        return (DecayClass::FiniteRank, 0.0, 1.0);
    }
    let last_kept = mu[rank - 1];
    // Flat head (possibly full rank), or a hard cliff into numerical zeros:
    // both are finite-rank profiles, not smooth decay.
    if last_kept >= FLAT_RATIO * mu1 {
        return (DecayClass::FiniteRank, rank as f64, 1.0);
    }
    if rank < n {
        let below = mu[rank].max(1e-300);
        if last_kept >= CLIFF_RATIO * below {
            return (DecayClass::FiniteRank, rank as f64, 1.0);
        }
    }
    // Trailing empirical eigenvalues sit below the population law, so decay
    // fits use at most the leading half of the spectrum.
    let fit_count = mu
        .iter()
        .filter(|&&m| m >= FIT_FLOOR * mu1)
        .count()
        .min((n / 2).max(3));
    if fit_count < 3 {
        return (DecayClass::Unclassified, 0.0, 0.0);
    }

    // Competing least-squares fits on the resolved head:
    //   exponential: ln μᵢ ~ a − b·i;   polynomial: ln μᵢ ~ a − γ·ln i.
    let log_mu: Vec<f64> = mu[..fit_count].iter().map(|m| m.ln()).collect();
    let idx: Vec<f64> = (1..=fit_count).map(|i| i as f64).collect();
    let log_idx: Vec<f64> = idx.iter().map(|i| i.ln()).collect();
    let (slope_exp, _, r2_exp) = fit_line(&idx, &log_mu);
    let (slope_poly, _, r2_poly) = fit_line(&log_idx, &log_mu);

    let exp_ok = r2_exp >= FIT_R2_MIN && slope_exp < 0.0;
    let poly_ok = r2_poly >= FIT_R2_MIN && slope_poly < 0.0;
    match (exp_ok, poly_ok) {
        (true, true) => {
            if r2_exp >= r2_poly {
                (DecayClass::Exponential, -slope_exp, r2_exp)
            } else {
                (DecayClass::Polynomial, -slope_poly, r2_poly)
            }
        }
        (true, false) => (DecayClass::Exponential, -slope_exp, r2_exp),
        (false, true) => (DecayClass::Polynomial, -slope_poly, r2_poly),
        (false, false) => (DecayClass::Unclassified, 0.0, r2_exp.max(r2_poly)),
    }
}

/// Ordinary least squares of y on x; returns (slope, intercept, r²).
fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
        syy += (yi - my) * (yi - my);
    }
    if sxx == 0.0 {
        return (0.0, my, 0.0);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    (slope, intercept, r2)
}

/// Exact brute-force minimum of `h/n + √((1/n)·Σ_{i>h} μ̃ᵢ)` over
/// `h ∈ {0,…,n}`; ties resolve to the smallest h.
///
/// `mu` holds the leading eigenvalues in nonincreasing order (a shorter list
/// means the remaining eigenvalues are zero).
pub fn local_rademacher_fixed_point(mu: &[f64], n: usize) -> Result<(f64, usize)> {
    if n == 0 {
        return Err(CoreError::EmptyInput("local_rademacher_fixed_point"));
    }
    let mut previous = f64::INFINITY;
    for &m in mu {
        if m < -1e-10 {
            return Err(CoreError::InvalidParameter {
                name: "mu",
                reason: format!("negative eigenvalue {m}"),
            });
        }
        if m > previous + 1e-12 {
            return Err(CoreError::InvalidParameter {
                name: "mu",
                reason: format!("eigenvalues must be nonincreasing"),
            });
        }
        previous = m;
    }
    // Tails are summed freshly per h, in index order, so the result is
    // bit-identical to the obvious double loop.
    let len = mu.len().min(n);
    let nf = n as f64;
    let mut best = f64::INFINITY;
    let mut best_h = 0usize;
    for h in 0..=n {
        let mut tail = 0.0;
        for &m in mu.iter().take(len).skip(h) {
            tail += m.max(0.0);
        }
        let value = h as f64 / nf + (tail / nf).sqrt();
        if value < best {
            best = value;
            best_h = h;
        }
    }
    Ok((best, best_h))
}

/// Empirical operator approximation error
/// `‖(K/n+λI)^{-1/2} · ((K̃−K)/n) · (K/n+λI)^{-1/2}‖₂`.
pub fn operator_approx_error(
    k: ArrayView2<f64>,
    k_tilde: ArrayView2<f64>,
    lambda: f64,
) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(CoreError::InvalidParameter {
            name: "lambda",
            reason: format!("must be a positive finite real, got {lambda}"),
        });
    }
    linalg::check_symmetric(k)?;
    linalg::check_symmetric(k_tilde)?;
    let n = k.nrows();
    if k_tilde.nrows() != n {
        return Err(CoreError::DimensionMismatch {
            expected: n,
            got: k_tilde.nrows(),
        });
    }
    // (K/n + λI)^{-1/2} by symmetric eigendecomposition with clamping.
    let eig = linalg::sym_eigen(k)?;
    let inv_sqrt = Array1::from_shape_fn(n, |i| {
        1.0 / ((eig.values[i] / n as f64).max(0.0) + lambda).sqrt()
    });
    let mut scaled = eig.vectors.clone();
    for (mut col, &w) in scaled.columns_mut().into_iter().zip(inv_sqrt.iter()) {
        col *= w;
    }
    let whitener = scaled.dot(&eig.vectors.t());

    let delta = (&k_tilde - &k) / n as f64;
    let middle = whitener.dot(&delta).dot(&whitener);
    let eig_m = linalg::sym_eigen(middle.view())?;
    let lo = eig_m.values[0].abs();
    let hi = eig_m.values[n - 1].abs();
    Ok(lo.max(hi))
}

/// Ridge approximation of target values by a feature matrix:
/// solves `min_β (1/n)‖Φβ − f‖² + λ‖β‖²` in closed form through the normal
/// equations `(ΦᵀΦ/n + λI)β = Φᵀf/n` (or the n×n dual form when s > n) and
/// returns `(β, √((1/n)‖Φβ − f‖²))`.
pub fn approximate_target(
    phi: ArrayView2<f64>,
    f_vals: ArrayView1<f64>,
    lambda: f64,
) -> Result<(Array1<f64>, f64)> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(CoreError::InvalidParameter {
            name: "lambda",
            reason: format!("must be a positive finite real, got {lambda}"),
        });
    }
    let n = phi.nrows();
    let s = phi.ncols();
    if n == 0 || s == 0 {
        return Err(CoreError::EmptyInput("approximate_target"));
    }
    if f_vals.len() != n {
        return Err(CoreError::DimensionMismatch {
            expected: n,
            got: f_vals.len(),
        });
    }
    let nf = n as f64;
    let beta = if s <= n {
        let mut a = phi.t().dot(&phi) / nf;
        for i in 0..s {
            a[[i, i]] += lambda;
        }
        let b = phi.t().dot(&f_vals) / nf;
        let chol = linalg::cholesky(a.view())?;
        linalg::cho_solve(&chol, b.view())
    } else {
        // Push-through identity: β = Φᵀ(ΦΦᵀ/n + λI)⁻¹ f / n.
        let mut a = phi.dot(&phi.t()) / nf;
        for i in 0..n {
            a[[i, i]] += lambda;
        }
        let chol = linalg::cholesky(a.view())?;
        let z = linalg::cho_solve(&chol, f_vals);
        phi.t().dot(&z) / nf
    };
    let residual = phi.dot(&beta) - f_vals;
    let l2 = (residual.dot(&residual) / nf).sqrt();
    Ok((beta, l2))
}

/// Which risk an excess is measured in.
#[derive(Debug, Clone, Copy)]
pub enum RiskMetric<'a> {
    ZeroOne,
    Surrogate(&'a Loss),
}

/// Holdout risk of a model minus a baseline risk. May be negative; never
/// clamped.
pub fn excess_risk(
    model: &TrainedModel,
    inputs: ArrayView2<f64>,
    y: &[f64],
    metric: RiskMetric<'_>,
    baseline_risk: f64,
) -> Result<f64> {
    if inputs.nrows() == 0 {
        return Err(CoreError::EmptyInput("excess_risk holdout"));
    }
    let risk = match metric {
        RiskMetric::ZeroOne => zero_one_risk(model, inputs, y)?,
        RiskMetric::Surrogate(loss) => empirical_risk(model, inputs, y, loss)?,
    };
    Ok(risk - baseline_risk)
}
