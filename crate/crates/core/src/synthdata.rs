//! Synthetic classification problems with controlled regularity and noise.
//!
//! The source condition `f_H = L^r·g` (r ∈ [1/2, 1], ‖g‖ = R) is realized on
//! a large reference sample: the empirical operator `K_ref/N` stands in for
//! the population integral operator, its eigensystem defines the operator
//! power, and train/holdout sets are subsampled from the reference so both
//! `f_H` and the Bayes risk are known exactly on every point that is ever
//! evaluated.
//!
//! Labels follow the Massart noise model: `y = sign(f_H(x))` with probability
//! `(1+γ₀)/2ticks`, flipped otherwise, independently per point, giving Bayes
//! zero-one risk exactly `(1−γ₀)/2`.
//!
//! [`make_spectrum_regime`] produces data-and-kernel configurations whose
//! empirical Gram spectrum matches a requested decay profile: finite rank
//! (linear kernel on sphere points), exponential (gaussian kernel on compact
//! gaussian inputs), or polynomial with a requested log-log slope (gaussian
//! kernel on heavy-tailed radial inputs, with tuning constants found by an
//! offline parameter sweep and fixed here).

use alloc::format;
use alloc::vec::Vec;
// Float math resolves through std's inherent methods whenever std is in the
// crate graph (tests); the trait supplies it in pure no_std builds.
#[allow(unused_imports)]
use num_traits::Float;
use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::kernel::{KernelFamily, KernelSpec};
use crate::linalg;
use crate::rng;

/// Truncation radius of the default input distribution.
const INPUT_TRUNCATION: f64 = 4.0;

/// Bandwidth of the exponential regime's gaussian kernel, tuned offline: it
/// keeps the Gram spectrum cleanly geometric while leaving the source
/// targets' sign features wide enough (relative to σ) that a regularized
/// classifier can keep resolving them as n grows.
const EXPONENTIAL_REGIME_SIGMA: f64 = 0.45;

/// Substream tags for seed mixing.
const STREAM_INPUTS: u64 = 1;
const STREAM_TARGET: u64 = 2;

/// A target function satisfying the source condition on a reference sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceTarget {
    /// Source-condition exponent r ∈ [1/2, 1].
    pub r: f64,
    /// Source norm R with (1/N)‖g‖² = R².
    pub big_r: f64,
    /// Reference-sample values of g.
    pub g_vals: Vec<f64>,
    /// Reference-sample values of f_H = (K/N)^r g.
    pub f_vals: Vec<f64>,
    /// The population-surrogate sample (N × d).
    pub reference_x: Array2<f64>,
}

/// Massart label noise with margin γ₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Margin γ₀ ∈ (0, 1]: labels agree with sign(f_H) w.p. (1+γ₀)/2.
    pub gamma0: f64,
    /// Variance-condition constant implied by the margin. Stored as a label
    /// only; the quantitative link to γ₀ is not verified.
    pub g_const: f64,
}

impl NoiseModel {
    pub fn massart(gamma0: f64) -> Result<Self> {
        if !(gamma0 > 0.0 && gamma0 <= 1.0) {
            return Err(CoreError::InvalidParameter {
                name: "gamma0",
                reason: format!("must lie in (0, 1], got {gamma0}"),
            });
        }
        Ok(NoiseModel {
            gamma0,
            g_const: 1.0 / gamma0,
        })
    }

    /// Exact Bayes zero-one risk under this noise.
    pub fn bayes_risk(&self) -> f64 {
        (1.0 - self.gamma0) / 2.0
    }
}

/// Standard gaussian inputs on ℝ^d truncated at radius 4 (the default input
/// distribution; compact support keeps the gaussian-kernel spectrum regular).
pub fn default_inputs(n: usize, dim: usize, seed: u64) -> Array2<f64> {
    let mut r = rng::chacha(seed);
    let mut x = Array2::<f64>::zeros((n, dim));
    for i in 0..n {
        loop {
            let mut norm_sq = 0.0;
            for j in 0..dim {
                let z = rng::standard_normal(&mut r);
                x[[i, j]] = z;
                norm_sq += z * z;
            }
            if norm_sq.sqrt() <= INPUT_TRUNCATION {
                break;
            }
        }
    }
    x
}

/// Uniform points on the unit sphere S^{d−1}.
pub fn sphere_inputs(n: usize, dim: usize, seed: u64) -> Array2<f64> {
    let mut r = rng::chacha(seed);
    let mut x = Array2::<f64>::zeros((n, dim));
    for i in 0..n {
        loop {
            let mut norm_sq = 0.0;
            for j in 0..dim {
                let z = rng::standard_normal(&mut r);
                x[[i, j]] = z;
                norm_sq += z * z;
            }
            if norm_sq > 1e-12 {
                let inv = 1.0 / norm_sq.sqrt();
                for j in 0..dim {
                    x[[i, j]] *= inv;
                }
                break;
            }
        }
    }
    x
}

/// Builds a source-condition target on a fresh reference sample drawn from
/// the default input distribution.
pub fn make_source_problem(
    spec: &KernelSpec,
    n_ref: usize,
    r: f64,
    big_r: f64,
    seed: u64,
) -> Result<SourceTarget> {
    let x = default_inputs(n_ref, spec.input_dim, rng::mix(seed, STREAM_INPUTS));
    make_source_problem_on(spec, x, r, big_r, rng::mix(seed, STREAM_TARGET))
}

/// Builds a source-condition target on a given reference sample (used when
/// the inputs come from a spectrum regime rather than the default
/// distribution).
///
/// Draws `g ~ N(0, I)`, rescales it so `(1/N)‖g‖² = R²`, and sets
/// `f = U·M^r·Uᵀ·g` where `K_ref/N = U·M·Uᵀ` with eigenvalues clamped at
/// zero. For `r = 1` the power is applied directly as `f = (K_ref/N)·g`,
/// which is the same operator without the eigendecomposition.
pub fn make_source_problem_on(
    spec: &KernelSpec,
    x: Array2<f64>,
    r: f64,
    big_r: f64,
    seed: u64,
) -> Result<SourceTarget> {
    if !(0.5..=1.0).contains(&r) {
        return Err(CoreError::InvalidParameter {
            name: "r",
            reason: format!("source exponent must lie in [1/2, 1], got {r}"),
        });
    }
    if !(big_r > 0.0 && big_r.is_finite()) {
        return Err(CoreError::InvalidParameter {
            name: "R",
            reason: format!("source norm must be positive, got {big_r}"),
        });
    }
    let n = x.nrows();
    if n < 2 {
        return Err(CoreError::EmptyInput("reference sample"));
    }

    let mut rgen = rng::chacha(seed);
    let mut g = Array1::from_shape_fn(n, |_| rng::standard_normal(&mut rgen));
    let scale = big_r * (n as f64).sqrt() / g.dot(&g).sqrt();
    g *= scale;

    let f = if r == 1.0 {
        // (K/N)·g streamed row by row; large references never materialize K.
        let mut f = Array1::<f64>::zeros(n);
        for i in 0..n {
            let xi = x.row(i);
            let mut acc = 0.0;
            for j in 0..n {
                acc += spec.eval(xi, x.row(j))? * g[j];
            }
            f[i] = acc / n as f64;
        }
        f
    } else {
        let km = spec.gram(x.view())? / n as f64;
        let eig = linalg::sym_eigen(km.view())?;
        let projected = eig.vectors.t().dot(&g);
        let powered = Array1::from_shape_fn(n, |i| eig.values[i].max(0.0).powf(r) * projected[i]);
        eig.vectors.dot(&powered)
    };

    Ok(SourceTarget {
        r,
        big_r,
        g_vals: g.to_vec(),
        f_vals: f.to_vec(),
        reference_x: x,
    })
}

/// Draws Massart labels for the given reference indices, in order, flipping
/// `sign(f_H)` independently with probability `(1−γ₀)/2`.
pub fn draw_labels(
    target: &SourceTarget,
    noise: &NoiseModel,
    indices: &[usize],
    seed: u64,
) -> Result<Vec<f64>> {
    let n = target.f_vals.len();
    let mut r = rng::chacha(seed);
    let flip_p = (1.0 - noise.gamma0) / 2.0;
    let mut out = Vec::with_capacity(indices.len());
    for &idx in indices {
        if idx >= n {
            return Err(CoreError::InvalidParameter {
                name: "indices",
                reason: format!("index {idx} outside reference sample of size {n}"),
            });
        }
        let bayes = if target.f_vals[idx] >= 0.0 { 1.0 } else { -1.0 };
        let flip = r.gen::<f64>() < flip_p;
        out.push(if flip { -bayes } else { bayes });
    }
    Ok(out)
}

/// Requested Gram-spectrum decay profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SpectrumRegime {
    /// Linear kernel on S^{d−1}: rank ≤ d exactly.
    FiniteRank,
    /// Gaussian kernel on compact gaussian inputs: geometric eigenvalue decay.
    Exponential,
    /// Laplacian kernel on compact gaussian inputs in a tuned dimension:
    /// the fitted log-log eigenvalue slope is within 20% of −gamma.
    Polynomial { gamma: f64 },
}

/// Tuning constants for the polynomial regime, found once by an offline
/// parameter sweep and fixed here.
///
/// The Laplacian (Matérn-1/2) kernel on compact inputs has eigenvalues
/// decaying like `i^{−(1+d)/d}` up to the bandwidth-dependent head, so the
/// input dimension selects the exponent; the bandwidths below flatten the
/// head enough that the fitted slope lands within 20% of −γ at n = 512.
/// (A gaussian kernel cannot produce a power law on a desk-scale sample:
/// its compact-measure spectra are super-polynomial, and heavy-tailed inputs
/// just park isolated points at eigenvalue 1/n.)
struct PolyTuning {
    gamma: f64,
    dim: usize,
    sigma: f64,
}

const POLY_TUNING: &[PolyTuning] = &[
    PolyTuning {
        gamma: 1.0,
        dim: 3,
        sigma: 1.5,
    },
    PolyTuning {
        gamma: 1.5,
        dim: 2,
        sigma: 2.0,
    },
    PolyTuning {
        gamma: 2.0,
        dim: 1,
        sigma: 2.0,
    },
];

fn poly_params(gamma: f64) -> Result<&'static PolyTuning> {
    POLY_TUNING
        .iter()
        .min_by(|a, b| {
            (a.gamma - gamma)
                .abs()
                .partial_cmp(&(b.gamma - gamma).abs())
                .unwrap()
        })
        .filter(|t| (t.gamma - gamma).abs() < 0.26)
        .ok_or(CoreError::InvalidParameter {
            name: "gamma",
            reason: alloc::format!(
                "no tuning entry near gamma = {gamma}; supported: 1.0, 1.5, 2.0"
            ),
        })
}

/// Returns a kernel and an input sample whose empirical Gram spectrum matches
/// the requested regime. Deterministic per seed.
///
/// The polynomial regime draws its input dimension and bandwidth from the
/// tuning table (the exponent is dimension-driven), so `dim` is ignored for
/// it.
pub fn make_spectrum_regime(
    regime: SpectrumRegime,
    n: usize,
    dim: usize,
    seed: u64,
) -> Result<(KernelSpec, Array2<f64>)> {
    if n < 2 || dim == 0 {
        return Err(CoreError::EmptyInput("spectrum regime sample"));
    }
    match regime {
        SpectrumRegime::FiniteRank => {
            let spec = KernelSpec::new(KernelFamily::LinearFiniteRank, 1.0, dim)?;
            Ok((spec, sphere_inputs(n, dim, seed)))
        }
        SpectrumRegime::Exponential => {
            let spec = KernelSpec::gaussian(EXPONENTIAL_REGIME_SIGMA, dim)?;
            Ok((spec, default_inputs(n, dim, seed)))
        }
        SpectrumRegime::Polynomial { gamma } => {
            let t = poly_params(gamma)?;
            let spec = KernelSpec::laplacian(t.sigma, t.dim)?;
            Ok((spec, default_inputs(n, t.dim, seed)))
        }
    }
}
