//! Shift-invariant kernels, their spectral densities, and the bounded
//! random-cosine feature.
//!
//! A shift-invariant kernel admits the integral decomposition
//! `k(x,y) = ∫ ψ(v,x) ψ(v,y) p(v) dv` where `p` is the (normalized) spectral
//! density promised by Bochner's theorem. This module fixes the real
//! realization `ψ(v,x) = √2·cos(ωᵀx + b)` with `v = (ω, b)`, `ω ~ p(ω)` and
//! `b ~ U[0, 2π)`, so the uniform phase factor cancels in every importance
//! ratio and [`KernelSpec::spectral_density`] reports the frequency marginal
//! `p(ω)` only. The feature bound is κ = √2 for the cosine families.
//!
//! Supported families:
//!
//! * gaussian: `k(x,y) = exp(−‖x−y‖² / (2σ²))`, `ω` iid normal with standard
//!   deviation `1/σ` per coordinate;
//! * laplacian: `k(x,y) = exp(−‖x−y‖₁ / σ)`, `ω` iid Cauchy with scale `1/σ`;
//! * linear-finite-rank: `k(x,y) = xᵀy / d` on the unit sphere. This family
//!   realizes the finite-rank spectrum regime, has no sampleable spectral
//!   density here, and is exercised only through the exact Gram matrix.

use core::f64::consts::{PI, SQRT_2};

use alloc::format;
use alloc::vec::Vec;
// Float math resolves through std's inherent methods whenever std is in the
// crate graph (tests); the trait supplies it in pure no_std builds.
#[allow(unused_imports)]
use num_traits::Float;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::rng;

/// Kernel family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    Gaussian,
    Laplacian,
    LinearFiniteRank,
}

impl KernelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Laplacian => "laplacian",
            KernelFamily::LinearFiniteRank => "linear-finite-rank",
        }
    }
}

/// A shift-invariant kernel with fixed bandwidth on `ℝ^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    /// Bandwidth σ > 0 (ignored by the linear family).
    pub bandwidth: f64,
    /// Input dimension d ≥ 1.
    pub input_dim: usize,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, bandwidth: f64, input_dim: usize) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(CoreError::InvalidParameter {
                name: "bandwidth",
                reason: format!("must be a positive finite real, got {bandwidth}"),
            });
        }
        if input_dim == 0 {
            return Err(CoreError::InvalidParameter {
                name: "input_dim",
                reason: format!("must be at least 1, got {input_dim}"),
            });
        }
        Ok(KernelSpec {
            family,
            bandwidth,
            input_dim,
        })
    }

    pub fn gaussian(bandwidth: f64, input_dim: usize) -> Result<Self> {
        Self::new(KernelFamily::Gaussian, bandwidth, input_dim)
    }

    pub fn laplacian(bandwidth: f64, input_dim: usize) -> Result<Self> {
        Self::new(KernelFamily::Laplacian, bandwidth, input_dim)
    }

    pub fn linear_finite_rank(input_dim: usize) -> Result<Self> {
        Self::new(KernelFamily::LinearFiniteRank, 1.0, input_dim)
    }

    /// Uniform bound κ on `|ψ(v,x)|`: √2 for the cosine families, 1 for the
    /// linear family's coordinate decomposition.
    pub fn kappa(&self) -> f64 {
        match self.family {
            KernelFamily::Gaussian | KernelFamily::Laplacian => SQRT_2,
            KernelFamily::LinearFiniteRank => 1.0,
        }
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.input_dim {
            return Err(CoreError::DimensionMismatch {
                expected: self.input_dim,
                got: len,
            });
        }
        Ok(())
    }

    /// Evaluates `k(x, y)`.
    pub fn eval(&self, x: ArrayView1<f64>, y: ArrayView1<f64>) -> Result<f64> {
        self.check_dim(x.len())?;
        self.check_dim(y.len())?;
        Ok(self.eval_unchecked(x, y))
    }

    fn eval_unchecked(&self, x: ArrayView1<f64>, y: ArrayView1<f64>) -> f64 {
        match self.family {
            KernelFamily::Gaussian => {
                let mut sq = 0.0;
                for (a, b) in x.iter().zip(y.iter()) {
                    let d = a - b;
                    sq += d * d;
                }
                (-sq / (2.0 * self.bandwidth * self.bandwidth)).exp()
            }
            KernelFamily::Laplacian => {
                let mut l1 = 0.0;
                for (a, b) in x.iter().zip(y.iter()) {
                    l1 += (a - b).abs();
                }
                (-l1 / self.bandwidth).exp()
            }
            KernelFamily::LinearFiniteRank => {
                let mut dot = 0.0;
                for (a, b) in x.iter().zip(y.iter()) {
                    dot += a * b;
                }
                dot / self.input_dim as f64
            }
        }
    }

    /// Exact Gram matrix `K[i,j] = k(xᵢ, xⱼ)` for the rows of `x`.
    pub fn gram(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.nrows() == 0 {
            return Err(CoreError::EmptyInput("gram"));
        }
        self.check_dim(x.ncols())?;
        let n = x.nrows();
        let mut k = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in i..n {
                let kij = self.eval_unchecked(x.row(i), x.row(j));
                k[[i, j]] = kij;
                k[[j, i]] = kij;
            }
        }
        Ok(k)
    }

    /// Draws `count` frequencies from the spectral measure: `ω` from the
    /// family's frequency density and a uniform phase, in that order per
    /// frequency. Deterministic given the seed.
    pub fn sample_frequencies(&self, count: usize, seed: u64) -> Result<Vec<Frequency>> {
        if count == 0 {
            return Err(CoreError::EmptyInput("sample_frequencies"));
        }
        let scale = 1.0 / self.bandwidth;
        let mut r = rng::chacha(seed);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let omega = match self.family {
                KernelFamily::Gaussian => {
                    Array1::from_shape_fn(self.input_dim, |_| scale * rng::standard_normal(&mut r))
                }
                KernelFamily::Laplacian => {
                    Array1::from_shape_fn(self.input_dim, |_| scale * rng::standard_cauchy(&mut r))
                }
                KernelFamily::LinearFiniteRank => {
                    return Err(CoreError::UnsupportedFamily {
                        family: self.family.name(),
                    })
                }
            };
            let phase = rng::uniform_phase(&mut r);
            out.push(Frequency { omega, phase });
        }
        Ok(out)
    }

    /// Frequency-marginal spectral density `p(ω)` at `f.omega`.
    ///
    /// The uniform phase density `1/2π` is excluded; it cancels in every
    /// importance ratio `p/q`.
    pub fn spectral_density(&self, f: &Frequency) -> Result<f64> {
        self.check_dim(f.omega.len())?;
        let s = self.bandwidth;
        match self.family {
            KernelFamily::Gaussian => {
                // Product of N(0, 1/σ²) densities.
                let norm = s / (2.0 * PI).sqrt();
                let mut p = 1.0;
                for &w in f.omega.iter() {
                    p *= norm * (-0.5 * s * s * w * w).exp();
                }
                Ok(p)
            }
            KernelFamily::Laplacian => {
                // Product of Cauchy(0, 1/σ) densities.
                let mut p = 1.0;
                for &w in f.omega.iter() {
                    p *= (s / PI) / (1.0 + s * s * w * w);
                }
                Ok(p)
            }
            KernelFamily::LinearFiniteRank => Err(CoreError::UnsupportedFamily {
                family: self.family.name(),
            }),
        }
    }
}

/// One sampled frequency `v = (ω, b)` of the cosine feature.
#[derive(Debug, Clone, PartialEq)]
pub struct Frequency {
    pub omega: Array1<f64>,
    /// Phase in [0, 2π).
    pub phase: f64,
}

impl Frequency {
    pub fn new(omega: Array1<f64>, phase: f64) -> Result<Self> {
        if !(0.0..2.0 * PI).contains(&phase) {
            return Err(CoreError::InvalidParameter {
                name: "phase",
                reason: format!("must lie in [0, 2π), got {phase}"),
            });
        }
        Ok(Frequency { omega, phase })
    }

    /// The bounded feature `ψ(v, x) = √2·cos(ωᵀx + b)`.
    pub fn feature(&self, x: ArrayView1<f64>) -> Result<f64> {
        if x.len() != self.omega.len() {
            return Err(CoreError::DimensionMismatch {
                expected: self.omega.len(),
                got: x.len(),
            });
        }
        Ok(self.feature_unchecked(x))
    }

    pub(crate) fn feature_unchecked(&self, x: ArrayView1<f64>) -> f64 {
        let mut dot = self.phase;
        for (w, xi) in self.omega.iter().zip(x.iter()) {
            dot += w * xi;
        }
        SQRT_2 * dot.cos()
    }
}
