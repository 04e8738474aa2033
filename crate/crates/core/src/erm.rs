//! Regularized empirical risk minimization with Lipschitz margin losses.
//!
//! Two parameterizations of the same learning problem:
//!
//! * feature space (`train_rff`):
//!   `β̂ = argmin_β (1/n)·Σ l(yᵢ, φᵢᵀβ) + λ‖β‖²` over the rows of a feature
//!   matrix Φ;
//! * kernel space (`train_kernel`):
//!   `α̂ = argmin_α (1/n)·Σ l(yᵢ, (Kα)ᵢ) + λ·αᵀKα` over a PSD Gram matrix.
//!
//! Both losses are 1-Lipschitz in the margin. Solutions come with a
//! certificate of suboptimality no larger than `opts.tol`:
//!
//! * hinge (either parameterization) and kernel logistic run cyclic dual
//!   coordinate ascent and certify through the Fenchel duality gap;
//! * feature-space logistic runs gradient descent with Armijo backtracking
//!   and certifies through `‖∇P‖²/(4λ) ≥ P − P*` (2λ-strong convexity).
//!
//! With a norm constraint `‖β‖² ≤ C` (the form used by theorem-style
//! analyses), hinge re-solves with an extra ridge term found by bisection so
//! the solution lands on the ball, and logistic projects each descent step;
//! in both cases the reported gap is computed against the dual of the
//! constrained problem, so the certificate remains valid.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
// Float math resolves through std's inherent methods whenever std is in the
// crate graph (tests); the trait supplies it in pure no_std builds.
#[allow(unused_imports)]
use num_traits::Float;
use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::linalg;

/// Loss family; both are 1-Lipschitz margin losses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Hinge,
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Loss {
    pub kind: LossKind,
}

impl Loss {
    pub fn hinge() -> Self {
        Loss {
            kind: LossKind::Hinge,
        }
    }

    pub fn logistic() -> Self {
        Loss {
            kind: LossKind::Logistic,
        }
    }

    /// Lipschitz constant w.r.t. the margin argument.
    pub fn lipschitz(&self) -> f64 {
        1.0
    }

    /// `l(y, t)` for a raw prediction t.
    pub fn value(&self, y: f64, t: f64) -> f64 {
        self.margin_value(y * t)
    }

    /// Loss as a function of the margin `m = y·t`.
    pub fn margin_value(&self, m: f64) -> f64 {
        match self.kind {
            LossKind::Hinge => (1.0 - m).max(0.0),
            LossKind::Logistic => softplus(-m),
        }
    }

    /// A subgradient of the margin loss (the derivative where it exists;
    /// 0 at the hinge kink).
    pub fn margin_derivative(&self, m: f64) -> f64 {
        match self.kind {
            LossKind::Hinge => {
                if m < 1.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            LossKind::Logistic => -sigmoid(-m),
        }
    }
}

/// Numerically stable `ln(1 + e^x)`.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Numerically stable `1/(1 + e^{-x})`.
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Binary entropy term of the logistic dual, continuous at the endpoints.
fn binary_entropy(a: f64) -> f64 {
    let mut h = 0.0;
    if a > 0.0 {
        h += a * a.ln();
    }
    if a < 1.0 {
        h += (1.0 - a) * (-a).ln_1p();
    }
    h
}

/// Which coefficient vector a model stores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    /// β over s features; margins are `φ(x)ᵀβ`.
    Feature,
    /// α over n training points; margins are `Σ αᵢ·k(xᵢ, x)`.
    Kernel,
}

/// Solver options.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    /// Certified absolute suboptimality target.
    pub tol: f64,
    /// Iteration budget: coordinate-ascent passes or gradient steps.
    pub max_iters: usize,
    /// Optional bound C on ‖β‖² (feature representation only).
    pub norm_constraint: Option<f64>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            tol: 1e-6,
            max_iters: 50_000,
            norm_constraint: None,
        }
    }
}

impl TrainOptions {
    /// Long-run reference mode used by tests as the optimum oracle.
    pub fn reference() -> Self {
        TrainOptions {
            tol: 1e-10,
            max_iters: 500_000,
            norm_constraint: None,
        }
    }
}

/// A trained classifier in either parameterization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    /// β (length s) or α (length n).
    pub coefficients: Vec<f64>,
    pub lambda: f64,
    pub loss: Loss,
    pub representation: Representation,
    /// Value of the regularized objective at `coefficients`.
    pub objective_value: f64,
    /// The bound C when training was norm-constrained.
    pub norm_constraint: Option<f64>,
    /// Certified suboptimality of `objective_value`.
    pub certified_gap: f64,
}

impl TrainedModel {
    /// Margin for one representation-compatible input: a feature vector
    /// `φ(x)` for feature models, a kernel row `(k(x₁,x),…,k(xₙ,x))` for
    /// kernel models.
    pub fn margin(&self, input: ArrayView1<f64>) -> Result<f64, CoreError> {
        if input.len() != self.coefficients.len() {
            return Err(CoreError::DimensionMismatch {
                expected: self.coefficients.len(),
                got: input.len(),
            });
        }
        Ok(input
            .iter()
            .zip(&self.coefficients)
            .map(|(x, c)| x * c)
            .sum())
    }

    /// Margins for a batch of inputs (rows).
    pub fn margins(&self, inputs: ArrayView2<f64>) -> Result<Array1<f64>, CoreError> {
        if inputs.ncols() != self.coefficients.len() {
            return Err(CoreError::DimensionMismatch {
                expected: self.coefficients.len(),
                got: inputs.ncols(),
            });
        }
        let c = Array1::from(self.coefficients.clone());
        Ok(inputs.dot(&c))
    }

    /// `sign(margin)` with `sign(0) = +1`.
    pub fn classify(&self, input: ArrayView1<f64>) -> Result<f64, CoreError> {
        Ok(sign(self.margin(input)?))
    }
}

/// Deterministic sign convention: `sign(0) = +1`.
pub fn sign(margin: f64) -> f64 {
    if margin >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Average surrogate loss of a model over a batch.
pub fn empirical_risk(
    model: &TrainedModel,
    inputs: ArrayView2<f64>,
    y: &[f64],
    loss: &Loss,
) -> Result<f64, CoreError> {
    if inputs.nrows() == 0 {
        return Err(CoreError::EmptyInput("empirical_risk"));
    }
    if inputs.nrows() != y.len() {
        return Err(CoreError::DimensionMismatch {
            expected: inputs.nrows(),
            got: y.len(),
        });
    }
    let margins = model.margins(inputs)?;
    Ok(margins
        .iter()
        .zip(y)
        .map(|(&t, &yi)| loss.value(yi, t))
        .sum::<f64>()
        / y.len() as f64)
}

/// Average zero-one error of a model over a batch.
pub fn zero_one_risk(
    model: &TrainedModel,
    inputs: ArrayView2<f64>,
    y: &[f64],
) -> Result<f64, CoreError> {
    if inputs.nrows() == 0 {
        return Err(CoreError::EmptyInput("zero_one_risk"));
    }
    if inputs.nrows() != y.len() {
        return Err(CoreError::DimensionMismatch {
            expected: inputs.nrows(),
            got: y.len(),
        });
    }
    let margins = model.margins(inputs)?;
    let wrong = margins
        .iter()
        .zip(y)
        .filter(|(&t, &yi)| sign(t) != yi)
        .count();
    Ok(wrong as f64 / y.len() as f64)
}

/// Training failure modes.
#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error(transparent)]
    Invalid(#[from] CoreError),
    #[error("certified gap {gap:e} did not reach tol {tol:e} within {iters} iterations")]
    Convergence {
        /// Best iterate reached before the budget ran out.
        model: Box<TrainedModel>,
        gap: f64,
        tol: f64,
        iters: usize,
    },
}

pub type TrainResult = Result<TrainedModel, TrainError>;

/// The regularized feature-space objective `(1/n)Σ l(yᵢ, φᵢᵀβ) + λ‖β‖²`.
pub fn objective_feature(
    phi: ArrayView2<f64>,
    y: &[f64],
    loss: &Loss,
    lambda: f64,
    beta: ArrayView1<f64>,
) -> f64 {
    let margins = phi.dot(&beta);
    let risk: f64 = margins
        .iter()
        .zip(y)
        .map(|(&t, &yi)| loss.value(yi, t))
        .sum::<f64>()
        / y.len() as f64;
    risk + lambda * beta.dot(&beta)
}

/// The regularized kernel-space objective `(1/n)Σ l(yᵢ, (Kα)ᵢ) + λ·αᵀKα`.
pub fn objective_kernel(
    k: ArrayView2<f64>,
    y: &[f64],
    loss: &Loss,
    lambda: f64,
    alpha: ArrayView1<f64>,
) -> f64 {
    let f = k.dot(&alpha);
    let risk: f64 = f
        .iter()
        .zip(y)
        .map(|(&t, &yi)| loss.value(yi, t))
        .sum::<f64>()
        / y.len() as f64;
    risk + lambda * alpha.dot(&f)
}

fn validate_labels(y: &[f64]) -> Result<(), CoreError> {
    if y.is_empty() {
        return Err(CoreError::EmptyInput("labels"));
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(CoreError::InvalidParameter {
            name: "y",
            reason: format!("labels must be exactly ±1"),
        });
    }
    Ok(())
}

fn validate_lambda(lambda: f64) -> Result<(), CoreError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(CoreError::InvalidParameter {
            name: "lambda",
            reason: format!("must be a positive finite real, got {lambda}"),
        });
    }
    Ok(())
}

/// Trains the random-feature problem on a feature matrix Φ (rows = points).
pub fn train_rff(
    phi: ArrayView2<f64>,
    y: &[f64],
    loss: Loss,
    lambda: f64,
    opts: &TrainOptions,
) -> TrainResult {
    validate_labels(y)?;
    validate_lambda(lambda)?;
    if phi.nrows() != y.len() {
        return Err(CoreError::DimensionMismatch {
            expected: y.len(),
            got: phi.nrows(),
        }
        .into());
    }
    if phi.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::NonFinite("feature matrix").into());
    }
    if let Some(c) = opts.norm_constraint {
        if !(c > 0.0 && c.is_finite()) {
            return Err(CoreError::InvalidParameter {
                name: "norm_constraint",
                reason: format!("must be positive, got {c}"),
            }
            .into());
        }
    }
    match loss.kind {
        LossKind::Hinge => hinge_feature(phi, y, lambda, opts),
        LossKind::Logistic => logistic_feature_gd(phi, y, lambda, opts),
    }
}

/// Trains the exact kernel problem on a PSD Gram matrix.
pub fn train_kernel(
    k: ArrayView2<f64>,
    y: &[f64],
    loss: Loss,
    lambda: f64,
    opts: &TrainOptions,
) -> TrainResult {
    validate_labels(y)?;
    validate_lambda(lambda)?;
    linalg::check_symmetric(k)?;
    if k.nrows() != y.len() {
        return Err(CoreError::DimensionMismatch {
            expected: y.len(),
            got: k.nrows(),
        }
        .into());
    }
    if k.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::NonFinite("gram matrix").into());
    }
    if opts.norm_constraint.is_some() {
        return Err(CoreError::InvalidParameter {
            name: "norm_constraint",
            reason: format!("norm constraint applies to the feature representation only"),
        }
        .into());
    }
    match loss.kind {
        LossKind::Hinge => hinge_kernel(k, y, lambda, opts),
        LossKind::Logistic => logistic_kernel_ca(k, y, lambda, opts),
    }
}

// ---------------------------------------------------------------------------
// Hinge, feature representation: cyclic dual coordinate ascent on
//   D(a) = mean(a) − λ‖β(a)‖²,  β(a) = Φᵀ(a⊙y)/(2λn),  a ∈ [0,1]^n.
// ---------------------------------------------------------------------------

fn hinge_feature(
    phi: ArrayView2<f64>,
    y: &[f64],
    lambda: f64,
    opts: &TrainOptions,
) -> TrainResult {
    let constraint = opts.norm_constraint;
    let n = phi.nrows();
    let row_sq: Vec<f64> = (0..n).map(|i| phi.row(i).dot(&phi.row(i))).collect();
    let mut a = vec![0.0_f64; n];

    // Unconstrained solve at the base ridge level.
    let loss = Loss::hinge();
    let (beta, gap, iters) = hinge_feature_passes(phi, y, lambda, &row_sq, &mut a, opts, None)?;
    let norm_sq = beta.dot(&beta);
    let feasible = constraint.map_or(true, |c| norm_sq <= c + 1e-9);
    if feasible && gap <= opts.tol {
        let objective = objective_feature(phi, y, &loss, lambda, beta.view());
        return Ok(TrainedModel {
            coefficients: beta.to_vec(),
            lambda,
            loss,
            representation: Representation::Feature,
            objective_value: objective,
            norm_constraint: constraint,
            certified_gap: gap,
        });
    }
    if feasible {
        let objective = objective_feature(phi, y, &loss, lambda, beta.view());
        return Err(TrainError::Convergence {
            model: Box::new(TrainedModel {
                coefficients: beta.to_vec(),
                lambda,
                loss,
                representation: Representation::Feature,
                objective_value: objective,
                norm_constraint: constraint,
                certified_gap: gap,
            }),
            gap,
            tol: opts.tol,
            iters,
        });
    }

    // Constraint active: bisect an extra ridge μ so that ‖β(λ+μ)‖² = C, which
    // is the KKT point of the constrained problem. The certificate below is
    // the duality gap of the *constrained* problem, so bisection precision
    // only has to be good enough to drive that gap under tol.
    let c = constraint.expect("constraint checked above");
    let mut mu_lo = 0.0_f64;
    let mut mu_hi = lambda.max(1e-12);
    let inner = TrainOptions {
        tol: (opts.tol * 0.25).max(1e-14),
        max_iters: opts.max_iters,
        norm_constraint: None,
    };
    let mut best: Option<(Array1<f64>, f64)> = None;
    for _ in 0..200 {
        let lambda_eff = lambda + mu_hi;
        let (b, _, _) = hinge_feature_passes(phi, y, lambda_eff, &row_sq, &mut a, &inner, None)?;
        if b.dot(&b) <= c {
            break;
        }
        mu_lo = mu_hi;
        mu_hi *= 2.0;
    }
    let mut iters_used = 0usize;
    for _ in 0..200 {
        let mu = 0.5 * (mu_lo + mu_hi);
        let lambda_eff = lambda + mu;
        let (b, _, it) = hinge_feature_passes(phi, y, lambda_eff, &row_sq, &mut a, &inner, None)?;
        iters_used += it;
        let nsq = b.dot(&b);
        // Project onto the ball and certify against the constrained dual.
        let scale = if nsq > c { (c / nsq).sqrt() } else { 1.0 };
        let beta_c = &b * scale;
        let p_c = objective_feature(phi, y, &loss, lambda, beta_c.view());
        let d_c = constrained_dual_value_hinge(&a, 2.0 * lambda_eff, &b, lambda, c);
        let gap_c = p_c - d_c;
        if gap_c <= opts.tol {
            return Ok(TrainedModel {
                coefficients: beta_c.to_vec(),
                lambda,
                loss,
                representation: Representation::Feature,
                objective_value: p_c,
                norm_constraint: constraint,
                certified_gap: gap_c,
            });
        }
        if best.as_ref().map_or(true, |(_, g)| gap_c < *g) {
            best = Some((beta_c, gap_c));
        }
        if nsq > c {
            mu_lo = mu;
        } else {
            mu_hi = mu;
        }
        if iters_used > opts.max_iters {
            break;
        }
    }
    let (beta_c, gap_c) = best.expect("at least one bisection step ran");
    let p_c = objective_feature(phi, y, &loss, lambda, beta_c.view());
    Err(TrainError::Convergence {
        model: Box::new(TrainedModel {
            coefficients: beta_c.to_vec(),
            lambda,
            loss,
            representation: Representation::Feature,
            objective_value: p_c,
            norm_constraint: constraint,
            certified_gap: gap_c,
        }),
        gap: gap_c,
        tol: opts.tol,
        iters: iters_used,
    })
}

/// Dual of the ball-constrained hinge problem at dual point `a`:
/// `D_c(a) = mean(a) + min_{‖β‖²≤C} (λ‖β‖² − vᵀβ)` with `v = (1/n)Φᵀ(a⊙y)`.
/// `v` is recovered as `2λ_eff·β_eff` from the inner solve.
fn constrained_dual_value_hinge(
    a: &[f64],
    two_lambda_eff: f64,
    beta_eff: &Array1<f64>,
    lambda: f64,
    c: f64,
) -> f64 {
    let n = a.len() as f64;
    let v_norm = two_lambda_eff * beta_eff.dot(beta_eff).sqrt();
    let mean_a = a.iter().sum::<f64>() / n;
    let ball_min = if v_norm <= 2.0 * lambda * c.sqrt() {
        -v_norm * v_norm / (4.0 * lambda)
    } else {
        lambda * c - c.sqrt() * v_norm
    };
    mean_a + ball_min
}

/// Runs coordinate-ascent passes until the duality gap of the *penalized*
/// problem at ridge `lambda` is ≤ opts.tol. Returns (β, gap, passes).
fn hinge_feature_passes(
    phi: ArrayView2<f64>,
    y: &[f64],
    lambda: f64,
    row_sq: &[f64],
    a: &mut [f64],
    opts: &TrainOptions,
    mut record_best: Option<&mut f64>,
) -> Result<(Array1<f64>, f64, usize), TrainError> {
    let n = phi.nrows();
    let s = phi.ncols();
    let inv_two_lambda_n = 1.0 / (2.0 * lambda * n as f64);

    // β consistent with the warm-start duals.
    let mut beta = Array1::<f64>::zeros(s);
    for i in 0..n {
        if a[i] != 0.0 {
            beta.scaled_add(a[i] * y[i] * inv_two_lambda_n, &phi.row(i));
        }
    }

    let mut gap = f64::INFINITY;
    let mut pass = 0usize;
    while pass < opts.max_iters {
        pass += 1;
        for i in 0..n {
            if row_sq[i] == 0.0 {
                // Zero feature row: the dual term is linear with positive
                // slope, so the coordinate saturates at 1.
                a[i] = 1.0;
                continue;
            }
            let m = phi.row(i).dot(&beta);
            let delta = 2.0 * lambda * n as f64 * (1.0 - y[i] * m) / row_sq[i];
            let new = (a[i] + delta).clamp(0.0, 1.0);
            let d = new - a[i];
            if d != 0.0 {
                a[i] = new;
                beta.scaled_add(d * y[i] * inv_two_lambda_n, &phi.row(i));
            }
        }
        // Refresh β from the duals to cancel incremental drift, then check
        // the duality gap: P(β) − D(a) with D(a) = mean(a) − λ‖β‖².
        beta.fill(0.0);
        for i in 0..n {
            if a[i] != 0.0 {
                beta.scaled_add(a[i] * y[i] * inv_two_lambda_n, &phi.row(i));
            }
        }
        let margins = phi.dot(&beta);
        let risk: f64 = margins
            .iter()
            .zip(y)
            .map(|(&m, &yi)| (1.0 - yi * m).max(0.0))
            .sum::<f64>()
            / n as f64;
        let norm_sq = beta.dot(&beta);
        let mean_a = a.iter().sum::<f64>() / n as f64;
        gap = risk + 2.0 * lambda * norm_sq - mean_a;
        if let Some(best) = record_best.as_deref_mut() {
            *best = gap.min(*best);
        }
        if gap <= opts.tol {
            return Ok((beta, gap, pass));
        }
    }
    Ok((beta, gap, pass))
}

// ---------------------------------------------------------------------------
// Hinge, kernel representation: the standard SVM dual with α = (a⊙y)/(2λn).
// ---------------------------------------------------------------------------

fn hinge_kernel(k: ArrayView2<f64>, y: &[f64], lambda: f64, opts: &TrainOptions) -> TrainResult {
    let n = k.nrows();
    let loss = Loss::hinge();
    let inv_two_lambda_n = 1.0 / (2.0 * lambda * n as f64);
    let mut a = vec![0.0_f64; n];
    // Margins f = K·α maintained incrementally.
    let mut f = Array1::<f64>::zeros(n);

    let mut gap = f64::INFINITY;
    let mut pass = 0usize;
    let mut converged = false;
    while pass < opts.max_iters {
        pass += 1;
        for i in 0..n {
            let kii = k[[i, i]];
            if kii <= 0.0 {
                // PSD with zero diagonal means a zero row; the dual slope is
                // the constant 1/n.
                a[i] = 1.0;
                continue;
            }
            let delta = 2.0 * lambda * n as f64 * (1.0 - y[i] * f[i]) / kii;
            let new = (a[i] + delta).clamp(0.0, 1.0);
            let d = new - a[i];
            if d != 0.0 {
                a[i] = new;
                f.scaled_add(d * y[i] * inv_two_lambda_n, &k.row(i));
            }
        }
        // Fresh margins, then the gap:
        //   P = mean hinge + (a⊙y)ᵀf/(2n),  D = mean(a) − (a⊙y)ᵀf/(2n).
        let ay = Array1::from_shape_fn(n, |i| a[i] * y[i] * inv_two_lambda_n);
        f = k.dot(&ay);
        let risk: f64 = f
            .iter()
            .zip(y)
            .map(|(&m, &yi)| (1.0 - yi * m).max(0.0))
            .sum::<f64>()
            / n as f64;
        let quad: f64 = (0..n).map(|i| a[i] * y[i] * f[i]).sum::<f64>() / (2.0 * n as f64);
        let mean_a = a.iter().sum::<f64>() / n as f64;
        gap = risk + 2.0 * quad - mean_a;
        if gap <= opts.tol {
            converged = true;
            break;
        }
    }

    let alpha: Vec<f64> = (0..n).map(|i| a[i] * y[i] * inv_two_lambda_n).collect();
    let objective = objective_kernel(k, y, &loss, lambda, Array1::from(alpha.clone()).view());
    let model = TrainedModel {
        coefficients: alpha,
        lambda,
        loss,
        representation: Representation::Kernel,
        objective_value: objective,
        norm_constraint: None,
        certified_gap: gap,
    };
    if converged {
        Ok(model)
    } else {
        Err(TrainError::Convergence {
            model: Box::new(model),
            gap,
            tol: opts.tol,
            iters: pass,
        })
    }
}

// ---------------------------------------------------------------------------
// Logistic, feature representation: gradient descent with backtracking and
// the strong-convexity certificate P − P* ≤ ‖∇P‖²/(4λ).
// ---------------------------------------------------------------------------

fn logistic_feature_gd(
    phi: ArrayView2<f64>,
    y: &[f64],
    lambda: f64,
    opts: &TrainOptions,
) -> TrainResult {
    let n = phi.nrows();
    let s = phi.ncols();
    let loss = Loss::logistic();
    let constraint = opts.norm_constraint;
    let mut beta = Array1::<f64>::zeros(s);
    let mut step = 1.0_f64;
    let mut gap = f64::INFINITY;
    let mut converged = false;
    let mut iters = 0usize;

    let objective = |b: &Array1<f64>| objective_feature(phi, y, &loss, lambda, b.view());
    let mut p = objective(&beta);

    while iters < opts.max_iters {
        iters += 1;
        let margins = phi.dot(&beta);
        // ∇P = −(1/n)Φᵀ(y⊙σ(−y⊙m)) + 2λβ.
        let mut weights = Array1::<f64>::zeros(n);
        for i in 0..n {
            weights[i] = -y[i] * sigmoid(-y[i] * margins[i]) / n as f64;
        }
        let mut grad = phi.t().dot(&weights);
        grad.scaled_add(2.0 * lambda, &beta);
        let gnorm_sq = grad.dot(&grad);

        gap = match constraint {
            None => gnorm_sq / (4.0 * lambda),
            Some(c) => {
                // Fenchel gap of the ball-constrained problem at the
                // recovered dual point aᵢ = σ(−yᵢmᵢ).
                let mut v = Array1::<f64>::zeros(s);
                let mut entropy = 0.0;
                for i in 0..n {
                    let ai = sigmoid(-y[i] * margins[i]);
                    entropy += binary_entropy(ai);
                    v.scaled_add(ai * y[i] / n as f64, &phi.row(i));
                }
                let v_norm = v.dot(&v).sqrt();
                let ball_min = if v_norm <= 2.0 * lambda * c.sqrt() {
                    -v_norm * v_norm / (4.0 * lambda)
                } else {
                    lambda * c - c.sqrt() * v_norm
                };
                let d_c = -entropy / n as f64 + ball_min;
                p - d_c
            }
        };
        if gap <= opts.tol {
            converged = true;
            break;
        }

        // Armijo backtracking with warm-started step size, projecting onto
        // the ball when constrained.
        step = (step * 2.0).min(1e12);
        loop {
            let mut candidate = &beta - &(&grad * step);
            if let Some(c) = constraint {
                let nsq = candidate.dot(&candidate);
                if nsq > c {
                    candidate *= (c / nsq).sqrt();
                }
            }
            let p_new = objective(&candidate);
            let decrease = match constraint {
                None => 0.5 * step * gnorm_sq,
                // With projection the Armijo model uses the actual move.
                Some(_) => {
                    let diff = &candidate - &beta;
                    -(grad.dot(&diff)) - 0.5 / step * diff.dot(&diff)
                }
            };
            if p_new <= p - decrease.max(0.0) || step < 1e-18 {
                beta = candidate;
                p = p_new;
                break;
            }
            step *= 0.5;
        }
    }

    let model = TrainedModel {
        coefficients: beta.to_vec(),
        lambda,
        loss,
        representation: Representation::Feature,
        objective_value: p,
        norm_constraint: constraint,
        certified_gap: gap,
    };
    if converged {
        Ok(model)
    } else {
        Err(TrainError::Convergence {
            model: Box::new(model),
            gap,
            tol: opts.tol,
            iters,
        })
    }
}

// ---------------------------------------------------------------------------
// Logistic, kernel representation: cyclic dual coordinate ascent on
//   D(a) = −(a⊙y)ᵀf/(2n) − (1/n)Σ H(aᵢ),  f = K(a⊙y)/(2λn),
// with per-coordinate root finding (the coordinate map is x = σ(−yᵢfᵢ(x))).
// ---------------------------------------------------------------------------

fn logistic_kernel_ca(
    k: ArrayView2<f64>,
    y: &[f64],
    lambda: f64,
    opts: &TrainOptions,
) -> TrainResult {
    let n = k.nrows();
    let loss = Loss::logistic();
    let inv_two_lambda_n = 1.0 / (2.0 * lambda * n as f64);
    let mut a = vec![0.5_f64; n];
    let ay0 = Array1::from_shape_fn(n, |i| a[i] * y[i] * inv_two_lambda_n);
    let mut f = k.dot(&ay0);

    let mut gap = f64::INFINITY;
    let mut pass = 0usize;
    let mut converged = false;
    while pass < opts.max_iters {
        pass += 1;
        for i in 0..n {
            let kii = k[[i, i]];
            let slope = kii * inv_two_lambda_n; // d(yᵢfᵢ)/daᵢ
            let base = y[i] * f[i] - slope * a[i]; // yᵢfᵢ at aᵢ = 0
            // Solve x = σ(−(base + slope·x)) by bisection; the residual
            // r(x) = −ln(x/(1−x)) − base − slope·x is strictly decreasing.
            let mut lo = 1e-15_f64;
            let mut hi = 1.0 - 1e-15;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let r = -(mid / (1.0 - mid)).ln() - base - slope * mid;
                if r > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let new = 0.5 * (lo + hi);
            let d = new - a[i];
            if d != 0.0 {
                a[i] = new;
                f.scaled_add(d * y[i] * inv_two_lambda_n, &k.row(i));
            }
        }
        let ay = Array1::from_shape_fn(n, |i| a[i] * y[i] * inv_two_lambda_n);
        f = k.dot(&ay);
        let risk: f64 = f
            .iter()
            .zip(y)
            .map(|(&m, &yi)| softplus(-yi * m))
            .sum::<f64>()
            / n as f64;
        let cross: f64 = (0..n).map(|i| a[i] * y[i] * f[i]).sum::<f64>() / n as f64;
        let entropy: f64 = a.iter().map(|&ai| binary_entropy(ai)).sum::<f64>() / n as f64;
        gap = risk + cross + entropy;
        if gap <= opts.tol {
            converged = true;
            break;
        }
    }

    let alpha: Vec<f64> = (0..n).map(|i| a[i] * y[i] * inv_two_lambda_n).collect();
    let objective = objective_kernel(k, y, &loss, lambda, Array1::from(alpha.clone()).view());
    let model = TrainedModel {
        coefficients: alpha,
        lambda,
        loss,
        representation: Representation::Kernel,
        objective_value: objective,
        norm_constraint: None,
        certified_gap: gap,
    };
    if converged {
        Ok(model)
    } else {
        Err(TrainError::Convergence {
            model: Box::new(model),
            gap,
            tol: opts.tol,
            iters: pass,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use ndarray::{arr1, arr2, Array2};
    use rand::Rng;

    fn opts(tol: f64) -> TrainOptions {
        TrainOptions {
            tol,
            max_iters: 100_000,
            norm_constraint: None,
        }
    }

    #[test]
    fn loss_values() {
        let hinge = Loss::hinge();
        assert_eq!(hinge.value(1.0, 2.0), 0.0);
        assert_eq!(hinge.value(1.0, 0.5), 0.5);
        assert_eq!(hinge.value(1.0, -1.0), 2.0);
        let logistic = Loss::logistic();
        assert!((logistic.value(1.0, 0.0) - core::f64::consts::LN_2).abs() < 1e-15);
        assert!(logistic.value(1.0, 50.0) < 1e-20);
    }

    #[test]
    fn losses_are_one_lipschitz_fuzz() {
        let mut r = rng::chacha(1);
        for loss in [Loss::hinge(), Loss::logistic()] {
            for _ in 0..100_000 {
                let y = if r.gen::<bool>() { 1.0 } else { -1.0 };
                let t1 = r.gen::<f64>() * 20.0 - 10.0;
                let t2 = r.gen::<f64>() * 20.0 - 10.0;
                let lhs = (loss.value(y, t1) - loss.value(y, t2)).abs();
                assert!(
                    lhs <= loss.lipschitz() * (t1 - t2).abs() + 1e-12,
                    "{loss:?} violates Lipschitz at y={y}, t1={t1}, t2={t2}"
                );
            }
        }
    }

    #[test]
    fn losses_are_convex_in_t_fuzz() {
        let mut r = rng::chacha(2);
        for loss in [Loss::hinge(), Loss::logistic()] {
            for _ in 0..10_000 {
                let y = if r.gen::<bool>() { 1.0 } else { -1.0 };
                let t1 = r.gen::<f64>() * 10.0 - 5.0;
                let t2 = r.gen::<f64>() * 10.0 - 5.0;
                let w = r.gen::<f64>();
                let mid = loss.value(y, w * t1 + (1.0 - w) * t2);
                let chord = w * loss.value(y, t1) + (1.0 - w) * loss.value(y, t2);
                assert!(mid <= chord + 1e-12);
            }
        }
    }

    #[test]
    fn hinge_rff_two_point_closed_form() {
        // s=1, φ=1 for both points, y=+1, λ=1: minimize (1−β)₊ + β² → β*=0.5.
        let phi = arr2(&[[1.0], [1.0]]);
        let y = [1.0, 1.0];
        let model = train_rff(phi.view(), &y, Loss::hinge(), 1.0, &opts(1e-10)).unwrap();
        assert!((model.coefficients[0] - 0.5).abs() < 1e-8);
        assert!((model.objective_value - 0.75).abs() < 1e-9);
    }

    #[test]
    fn hinge_rff_huge_lambda_kills_coefficients() {
        let mut r = rng::chacha(3);
        let phi = Array2::from_shape_fn((20, 4), |_| r.gen::<f64>() * 2.0 - 1.0);
        let y: Vec<f64> = (0..20).map(|_| if r.gen::<bool>() { 1.0 } else { -1.0 }).collect();
        let model = train_rff(phi.view(), &y, Loss::hinge(), 1e9, &opts(1e-10)).unwrap();
        let norm: f64 = model.coefficients.iter().map(|b| b * b).sum::<f64>().sqrt();
        assert!(norm <= 1e-6, "‖β‖ = {norm}");
    }

    #[test]
    fn logistic_positive_column_gives_positive_coefficient() {
        let phi = arr2(&[[0.5], [1.0], [0.25], [0.8]]);
        let y = [1.0, 1.0, 1.0, 1.0];
        let model = train_rff(phi.view(), &y, Loss::logistic(), 0.1, &opts(1e-10)).unwrap();
        assert!(model.coefficients[0] > 0.0);
    }

    #[test]
    fn kernel_single_point_closed_form() {
        // n=1, K=[1], hinge, y=+1, λ=1 → α* = 0.5 (same scalar problem).
        let k = arr2(&[[1.0]]);
        let model = train_kernel(k.view(), &[1.0], Loss::hinge(), 1.0, &opts(1e-10)).unwrap();
        assert!((model.coefficients[0] - 0.5).abs() < 1e-8);
        assert!((model.objective_value - 0.75).abs() < 1e-9);
    }

    #[test]
    fn kernel_identity_gram_decouples() {
        // K = c·I decouples into n scalar problems with k(x,x) = c.
        let c = 2.0;
        let n = 5;
        let k = Array2::<f64>::eye(n) * c;
        let y = [1.0, -1.0, 1.0, 1.0, -1.0];
        let lambda = 0.5;
        let model = train_kernel(k.view(), &y, Loss::hinge(), lambda, &opts(1e-12)).unwrap();
        // Decoupled per-point problem in u = yᵢαᵢ: (1/n)(1−cu)₊ + λcu², whose
        // minimizer is u* = min(1/(2λn), 1/c).
        let t_opt = (1.0 / (2.0 * lambda * n as f64)).min(1.0 / c);
        for i in 0..n {
            assert!(
                (model.coefficients[i] - y[i] * t_opt).abs() < 1e-8,
                "coefficient {i}: {} vs {}",
                model.coefficients[i],
                y[i] * t_opt
            );
        }
    }

    /// Shared construction: random features with both solvers on K = ΦΦᵀ.
    fn agreement_case(loss: Loss, seed: u64) {
        let mut r = rng::chacha(seed);
        let n = 12;
        let s = 20;
        let phi = Array2::from_shape_fn((n, s), |_| r.gen::<f64>() * 2.0 - 1.0);
        let y: Vec<f64> = (0..n).map(|_| if r.gen::<bool>() { 1.0 } else { -1.0 }).collect();
        let lambda = 0.3;
        let k = phi.dot(&phi.t());
        let fm = train_rff(phi.view(), &y, loss, lambda, &opts(1e-11)).unwrap();
        let km = train_kernel(k.view(), &y, loss, lambda, &opts(1e-11)).unwrap();
        let margins_f = fm.margins(phi.view()).unwrap();
        let margins_k = km.margins(k.view()).unwrap();
        for i in 0..n {
            assert!(
                (margins_f[i] - margins_k[i]).abs() < 1e-4,
                "{loss:?} margin {i}: {} vs {}",
                margins_f[i],
                margins_k[i]
            );
        }
        // Optimal objective values agree too.
        assert!((fm.objective_value - km.objective_value).abs() < 1e-6);
    }

    #[test]
    fn feature_and_kernel_solvers_agree_hinge() {
        agreement_case(Loss::hinge(), 5);
    }

    #[test]
    fn feature_and_kernel_solvers_agree_logistic() {
        agreement_case(Loss::logistic(), 6);
    }

    #[test]
    fn objective_value_matches_reevaluation() {
        let mut r = rng::chacha(7);
        let phi = Array2::from_shape_fn((15, 3), |_| r.gen::<f64>() * 2.0 - 1.0);
        let y: Vec<f64> = (0..15).map(|_| if r.gen::<bool>() { 1.0 } else { -1.0 }).collect();
        for loss in [Loss::hinge(), Loss::logistic()] {
            let model = train_rff(phi.view(), &y, loss, 0.2, &opts(1e-8)).unwrap();
            let again = objective_feature(
                phi.view(),
                &y,
                &loss,
                0.2,
                Array1::from(model.coefficients.clone()).view(),
            );
            assert!((model.objective_value - again).abs() < 1e-10);
        }
    }

    #[test]
    fn first_order_optimality_fuzz() {
        // Random perturbations of norm 1e-3 never decrease the objective by
        // more than 1e-9 when trained in reference mode.
        let mut r = rng::chacha(8);
        let phi = Array2::from_shape_fn((25, 4), |_| r.gen::<f64>() * 2.0 - 1.0);
        let y: Vec<f64> = (0..25).map(|_| if r.gen::<bool>() { 1.0 } else { -1.0 }).collect();
        for loss in [Loss::hinge(), Loss::logistic()] {
            let model = train_rff(phi.view(), &y, loss, 0.4, &TrainOptions::reference()).unwrap();
            let beta = Array1::from(model.coefficients.clone());
            let base = objective_feature(phi.view(), &y, &loss, 0.4, beta.view());
            for _ in 0..200 {
                let mut dir = Array1::from_shape_fn(4, |_| rng::standard_normal(&mut r));
                let norm = dir.dot(&dir).sqrt();
                dir *= 1e-3 / norm;
                let perturbed = &beta + &dir;
                let value = objective_feature(phi.view(), &y, &loss, 0.4, perturbed.view());
                assert!(
                    value >= base - 1e-9,
                    "{loss:?}: perturbation decreased objective by {}",
                    base - value
                );
            }
        }
    }

    #[test]
    fn norm_constraint_respected_and_certified() {
        let mut r = rng::chacha(9);
        let phi = Array2::from_shape_fn((30, 3), |_| r.gen::<f64>() * 2.0 - 1.0);
        let y: Vec<f64> = (0..30).map(|_| if r.gen::<bool>() { 1.0 } else { -1.0 }).collect();
        for loss in [Loss::hinge(), Loss::logistic()] {
            // First train unconstrained with a small λ so the norm is large.
            let lambda = 0.01;
            let free = train_rff(phi.view(), &y, loss, lambda, &opts(1e-9)).unwrap();
            let free_norm_sq: f64 = free.coefficients.iter().map(|b| b * b).sum();
            let c = 0.25 * free_norm_sq;
            let mut o = opts(1e-7);
            o.norm_constraint = Some(c);
            let constrained = train_rff(phi.view(), &y, loss, lambda, &o).unwrap();
            let norm_sq: f64 = constrained.coefficients.iter().map(|b| b * b).sum();
            assert!(norm_sq <= c + 1e-9, "‖β‖² = {norm_sq} > C = {c}");
            assert!(constrained.certified_gap <= 1e-7);
            // The constrained optimum cannot beat the free one.
            assert!(constrained.objective_value >= free.objective_value - 1e-9);

            // Inactive constraint reproduces the unconstrained solution.
            let mut o2 = opts(1e-9);
            o2.norm_constraint = Some(4.0 * free_norm_sq);
            let loose = train_rff(phi.view(), &y, loss, lambda, &o2).unwrap();
            assert!((loose.objective_value - free.objective_value).abs() < 1e-7);
        }
    }

    #[test]
    fn predict_sign_conventions() {
        let model = TrainedModel {
            coefficients: alloc::vec![0.0],
            lambda: 1.0,
            loss: Loss::hinge(),
            representation: Representation::Feature,
            objective_value: 1.0,
            norm_constraint: None,
            certified_gap: 0.0,
        };
        assert_eq!(model.margin(arr1(&[3.0]).view()).unwrap(), 0.0);
        assert_eq!(model.classify(arr1(&[3.0]).view()).unwrap(), 1.0);

        let model = TrainedModel {
            coefficients: alloc::vec![2.0],
            ..model
        };
        assert_eq!(model.margin(arr1(&[-0.5]).view()).unwrap(), -1.0);
        assert_eq!(model.classify(arr1(&[-0.5]).view()).unwrap(), -1.0);
    }

    #[test]
    fn risk_helpers() {
        // Margins (2, 0.5, −1) against y = +1 under hinge → mean 0.8333…;
        // identity "features" with a unit coefficient produce those margins.
        let model = TrainedModel {
            coefficients: alloc::vec![1.0],
            lambda: 1.0,
            loss: Loss::hinge(),
            representation: Representation::Feature,
            objective_value: 0.0,
            norm_constraint: None,
            certified_gap: 0.0,
        };
        let inputs = arr2(&[[2.0], [0.5], [-1.0]]);
        let y = [1.0, 1.0, 1.0];
        let risk = empirical_risk(&model, inputs.view(), &y, &Loss::hinge()).unwrap();
        assert!((risk - 2.5 / 3.0).abs() < 1e-12);

        // Perfectly separated data with margins ≥ 1 has zero hinge risk.
        let sep = arr2(&[[1.5], [2.0]]);
        let risk0 = empirical_risk(&model, sep.view(), &[1.0, 1.0], &Loss::hinge()).unwrap();
        assert_eq!(risk0, 0.0);

        // All-wrong classifier has zero-one risk 1.
        let z = zero_one_risk(&model, inputs.view(), &[-1.0, -1.0, 1.0]).unwrap();
        assert!((z - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_labels_and_nonfinite_features() {
        let phi = arr2(&[[1.0], [2.0]]);
        assert!(train_rff(phi.view(), &[1.0, 0.5], Loss::hinge(), 1.0, &opts(1e-6)).is_err());
        let bad = arr2(&[[f64::NAN], [1.0]]);
        assert!(train_rff(bad.view(), &[1.0, -1.0], Loss::hinge(), 1.0, &opts(1e-6)).is_err());
    }

    #[test]
    fn convergence_failure_carries_best_iterate() {
        let mut r = rng::chacha(10);
        let phi = Array2::from_shape_fn((40, 6), |_| r.gen::<f64>() * 2.0 - 1.0);
        let y: Vec<f64> = (0..40).map(|_| if r.gen::<bool>() { 1.0 } else { -1.0 }).collect();
        let starved = TrainOptions {
            tol: 1e-12,
            max_iters: 1,
            norm_constraint: None,
        };
        match train_rff(phi.view(), &y, Loss::hinge(), 0.05, &starved) {
            Err(TrainError::Convergence { model, gap, .. }) => {
                assert!(gap > 1e-12);
                assert_eq!(model.coefficients.len(), 6);
                assert!(model.objective_value.is_finite());
            }
            other => panic!("expected convergence failure, got {other:?}"),
        }
    }
}
