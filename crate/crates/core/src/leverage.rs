//! Empirical ridge leverage scores, effective degrees of freedom, and
//! feature-budget formulas.
//!
//! The population leverage of a frequency v at ridge level λ is
//! `τ_λ(v) = p(v)·⟨ψ(v,·), (L+λI)⁻¹ ψ(v,·)⟩`. Replacing the integral
//! operator `L` by its empirical counterpart `K/n` (with the `L₂(P̂)` inner
//! product `(1/n)·⟨·,·⟩`) gives the computable surrogate
//!
//! ```text
//! τ̂_λ(v) = p(v) · (1/n) · z_vᵀ (K/n + λI)⁻¹ z_v ,   z_v = (ψ(v,x₁),…,ψ(v,xₙ)) ,
//! ```
//!
//! which satisfies the same pointwise bound `τ̂_λ(v) ≤ p(v)·κ²/λ` and the same
//! integral identity `∫ τ̂_λ = Tr[(K/n)(K/n+λI)⁻¹] = d̂(λ)`, the effective
//! degrees of freedom. A [`LeverageProfile`] materializes τ̂_λ on a pool of
//! frequencies drawn from p so the ridge leverage distribution
//! `q*(v) = τ_λ(v)/d(λ)` can be approximated by resampling the pool.

use alloc::format;
use alloc::vec::Vec;
// Float math resolves through std's inherent methods whenever std is in the
// crate graph (tests); the trait supplies it in pure no_std builds.
#[allow(unused_imports)]
use num_traits::Float;
use ndarray::{Array1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::kernel::{Frequency, KernelSpec};
use crate::linalg;

/// A pool of candidate frequencies with their empirical ridge leverage values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ProfileDoc", try_from = "ProfileDoc")]
pub struct LeverageProfile {
    kernel: KernelSpec,
    pool: Vec<Frequency>,
    /// τ̂_λ per pool atom (spectral density folded in).
    tau: Vec<f64>,
    lambda: f64,
    /// Effective degrees of freedom d̂(λ) of the Gram the profile was built on.
    d_hat: f64,
    /// Pool-empirical normalizer (1/m)·Σ τ̂ⱼ/p(vⱼ); the Monte Carlo estimate
    /// of ∫τ̂ = d̂(λ) that normalizes the resampling density.
    d_tau: f64,
    seed: u64,
}

impl LeverageProfile {
    /// Samples a pool of `pool_size` frequencies from the spectral measure and
    /// scores each one, sharing a single factorization of `K/n + λI`.
    pub fn build(
        spec: &KernelSpec,
        x: ArrayView2<f64>,
        lambda: f64,
        pool_size: usize,
        seed: u64,
    ) -> Result<Self> {
        check_lambda(lambda)?;
        if pool_size == 0 {
            return Err(CoreError::EmptyInput("leverage pool"));
        }
        let pool = spec.sample_frequencies(pool_size, seed)?;
        let n = x.nrows();
        let k = spec.gram(x)?;
        let a = regularized_gram(&k, n, lambda);
        let chol = linalg::cholesky(a.view())?;

        // d̂(λ) = Tr[(K/n)(K/n+λI)⁻¹] = n − λ·Tr[(K/n+λI)⁻¹].
        let d_hat = n as f64 - lambda * linalg::cho_inverse_trace(&chol);

        let mut tau = Vec::with_capacity(pool_size);
        let mut ratio_sum = 0.0;
        let mut z = Array1::<f64>::zeros(n);
        for f in &pool {
            for (i, zi) in z.iter_mut().enumerate() {
                *zi = f.feature_unchecked(x.row(i));
            }
            let ratio = linalg::cho_quad_form(&chol, z.view()) / n as f64;
            ratio_sum += ratio;
            tau.push(spec.spectral_density(f)? * ratio);
        }
        let d_tau = ratio_sum / pool_size as f64;

        Ok(LeverageProfile {
            kernel: *spec,
            pool,
            tau,
            lambda,
            d_hat,
            d_tau,
            seed,
        })
    }

    /// Assembles a profile from explicit parts, validating the invariants.
    pub fn from_parts(
        kernel: KernelSpec,
        pool: Vec<Frequency>,
        tau: Vec<f64>,
        lambda: f64,
        d_hat: f64,
        d_tau: f64,
        seed: u64,
    ) -> Result<Self> {
        check_lambda(lambda)?;
        if pool.is_empty() {
            return Err(CoreError::EmptyInput("leverage pool"));
        }
        if pool.len() != tau.len() {
            return Err(CoreError::DimensionMismatch {
                expected: pool.len(),
                got: tau.len(),
            });
        }
        if tau.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(CoreError::DegenerateProfile(
                "leverage values must be finite and nonnegative",
            ));
        }
        if !(d_hat >= 0.0 && d_tau >= 0.0) {
            return Err(CoreError::DegenerateProfile(
                "d_hat and d_tau must be nonnegative",
            ));
        }
        Ok(LeverageProfile {
            kernel,
            pool,
            tau,
            lambda,
            d_hat,
            d_tau,
            seed,
        })
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn pool(&self) -> &[Frequency] {
        &self.pool
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn pool_size(&self) -> usize {
        self.pool.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn d_hat(&self) -> f64 {
        self.d_hat
    }

    pub fn d_tau(&self) -> f64 {
        self.d_tau
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Default pool size for resampling `s` features: keeps the resampling
    /// bias small relative to Monte Carlo noise.
    pub fn default_pool_size(s: usize) -> usize {
        (20 * s).max(2000)
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(CoreError::InvalidParameter {
            name: "lambda",
            reason: format!("must be a positive finite real, got {lambda}"),
        });
    }
    Ok(())
}

fn regularized_gram(k: &ndarray::Array2<f64>, n: usize, lambda: f64) -> ndarray::Array2<f64> {
    let mut a = k / n as f64;
    for i in 0..n {
        a[[i, i]] += lambda;
    }
    a
}

/// Empirical ridge leverage `τ̂_λ(v)` of a single frequency.
///
/// Convenience one-shot form; batch scoring should go through
/// [`LeverageProfile::build`], which factorizes `K/n + λI` once.
pub fn empirical_leverage(
    spec: &KernelSpec,
    x: ArrayView2<f64>,
    lambda: f64,
    f: &Frequency,
) -> Result<f64> {
    check_lambda(lambda)?;
    let n = x.nrows();
    if n == 0 {
        return Err(CoreError::EmptyInput("empirical_leverage"));
    }
    let k = spec.gram(x)?;
    let a = regularized_gram(&k, n, lambda);
    let chol = linalg::cholesky(a.view())?;
    let z = Array1::from_shape_fn(n, |i| f.feature_unchecked(x.row(i)));
    let ratio = linalg::cho_quad_form(&chol, z.view()) / n as f64;
    Ok(spec.spectral_density(f)? * ratio)
}

/// Effective degrees of freedom `d̂(λ) = Tr[(K/n)((K/n)+λI)⁻¹]` of a PSD Gram
/// matrix, computed as `Σᵢ μ̃ᵢ/(μ̃ᵢ+λ)` over the eigenvalues of `K/n`.
pub fn effective_dimension(k: ArrayView2<f64>, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    linalg::check_symmetric(k)?;
    let n = k.nrows();
    let eig = linalg::sym_eigen(k)?;
    let floor = -1e-10 * n as f64;
    let mut d = 0.0;
    for &mu_raw in eig.values.iter() {
        let mu = mu_raw / n as f64;
        if mu < floor {
            return Err(CoreError::InvalidParameter {
                name: "k",
                reason: format!("matrix is not PSD (eigenvalue {mu} of K/n)"),
            });
        }
        let mu = mu.max(0.0);
        d += mu / (mu + lambda);
    }
    Ok(d)
}

/// Which feature-budget formula to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetScheme {
    /// Minimax budget under spectral-measure sampling:
    /// `⌈(5κ²/λ)·ln(16·d̂/δ)⌉`.
    Plain,
    /// Minimax budget under ridge-leverage sampling: `⌈5·d̂·ln(16·d̂/δ)⌉`.
    Weighted,
    /// Operator-approximation budget with the analytic upper bound
    /// `d_τ̃ = κ²/λ`: `⌈12·(κ²/λ)·ln(d̂/δ)⌉`.
    TheoremPlain,
    /// Operator-approximation budget with `d_τ̃ = d̂(λ)`:
    /// `⌈12·d̂·ln(d̂/δ)⌉`.
    TheoremWeighted,
}

/// Number of random features required by the chosen budget rule, clamped
/// below at 1. Logarithms are natural.
pub fn feature_budget(
    scheme: BudgetScheme,
    lambda: f64,
    d_hat: f64,
    kappa: f64,
    delta: f64,
) -> Result<usize> {
    check_lambda(lambda)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(CoreError::InvalidParameter {
            name: "delta",
            reason: format!("must lie in (0, 1), got {delta}"),
        });
    }
    if !(d_hat > 0.0 && d_hat.is_finite()) {
        return Err(CoreError::InvalidParameter {
            name: "d_hat",
            reason: format!("must be positive, got {d_hat}"),
        });
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(CoreError::InvalidParameter {
            name: "kappa",
            reason: format!("must be positive, got {kappa}"),
        });
    }
    let k2_over_lambda = kappa * kappa / lambda;
    let raw = match scheme {
        BudgetScheme::Plain => 5.0 * k2_over_lambda * (16.0 * d_hat / delta).ln(),
        BudgetScheme::Weighted => 5.0 * d_hat * (16.0 * d_hat / delta).ln(),
        BudgetScheme::TheoremPlain => 12.0 * k2_over_lambda * (d_hat / delta).ln(),
        BudgetScheme::TheoremWeighted => 12.0 * d_hat * (d_hat / delta).ln(),
    };
    Ok((raw.ceil().max(1.0)) as usize)
}

/// Serialized form of a leverage profile.
#[derive(Serialize, Deserialize)]
struct ProfileDoc {
    kernel: KernelSpec,
    m: usize,
    lambda: f64,
    frequencies: Vec<Vec<f64>>,
    phases: Vec<f64>,
    tau: Vec<f64>,
    d_hat: f64,
    d_tau: f64,
    seed: u64,
}

impl From<LeverageProfile> for ProfileDoc {
    fn from(p: LeverageProfile) -> Self {
        ProfileDoc {
            kernel: p.kernel,
            m: p.pool.len(),
            lambda: p.lambda,
            frequencies: p.pool.iter().map(|f| f.omega.to_vec()).collect(),
            phases: p.pool.iter().map(|f| f.phase).collect(),
            tau: p.tau,
            d_hat: p.d_hat,
            d_tau: p.d_tau,
            seed: p.seed,
        }
    }
}

impl TryFrom<ProfileDoc> for LeverageProfile {
    type Error = CoreError;

    fn try_from(doc: ProfileDoc) -> Result<Self> {
        if doc.frequencies.len() != doc.m || doc.phases.len() != doc.m {
            return Err(CoreError::DimensionMismatch {
                expected: doc.m,
                got: doc.frequencies.len(),
            });
        }
        let pool = doc
            .frequencies
            .into_iter()
            .zip(doc.phases)
            .map(|(omega, phase)| Frequency::new(Array1::from(omega), phase))
            .collect::<Result<Vec<_>>>()?;
        LeverageProfile::from_parts(
            doc.kernel, pool, doc.tau, doc.lambda, doc.d_hat, doc.d_tau, doc.seed,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use ndarray::{arr1, Array2};
    use rand::Rng;

    fn gaussian_inputs(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut r = rng::chacha(seed);
        Array2::from_shape_fn((n, d), |_| rng::standard_normal(&mut r))
    }

    #[test]
    fn leverage_single_point_closed_form() {
        // n=1, ψ=√2, k(x,x)=1, λ=1 → τ̂ = p(v)·(2/(1+1)) = p(v).
        let spec = KernelSpec::gaussian(1.0, 1).unwrap();
        let x = Array2::from_shape_vec((1, 1), alloc::vec![0.4]).unwrap();
        let f = Frequency::new(arr1(&[0.0]), 0.0).unwrap();
        let tau = empirical_leverage(&spec, x.view(), 1.0, &f).unwrap();
        let p = spec.spectral_density(&f).unwrap();
        assert!((tau - p).abs() < 1e-14, "tau {tau} vs p {p}");
    }

    #[test]
    fn leverage_vanishes_for_huge_lambda() {
        let spec = KernelSpec::gaussian(1.0, 2).unwrap();
        let x = gaussian_inputs(20, 2, 3);
        let freqs = spec.sample_frequencies(10, 4).unwrap();
        for f in &freqs {
            let tau = empirical_leverage(&spec, x.view(), 1e9, f).unwrap();
            let p = spec.spectral_density(f).unwrap();
            assert!(tau <= p * 2.0 / 1e9 * (1.0 + 1e-10));
            assert!(tau >= 0.0);
        }
    }

    #[test]
    fn leverage_bound_fuzz() {
        // τ̂/p ≤ κ²/λ exactly, over a fuzzed pool.
        let spec = KernelSpec::gaussian(0.8, 2).unwrap();
        let x = gaussian_inputs(30, 2, 5);
        let lambda = 0.05;
        let profile = LeverageProfile::build(&spec, x.view(), lambda, 1000, 6).unwrap();
        let bound = spec.kappa() * spec.kappa() / lambda;
        for (f, &tau) in profile.pool().iter().zip(profile.tau()) {
            let p = spec.spectral_density(f).unwrap();
            assert!(tau / p <= bound * (1.0 + 1e-10), "ratio {}", tau / p);
            assert!(tau >= 0.0);
        }
    }

    #[test]
    fn effective_dimension_examples() {
        // K/n eigenvalues {1, 1} at λ = 1 → 1.0.
        let k = Array2::from_diag(&arr1(&[2.0, 2.0]));
        let d = effective_dimension(k.view(), 1.0).unwrap();
        assert!((d - 1.0).abs() < 1e-12);

        // K/n eigenvalues {1, 0.5, 0.25} at λ = 0.5 → 1.5.
        let k = Array2::from_diag(&arr1(&[3.0, 1.5, 0.75]));
        let d = effective_dimension(k.view(), 0.5).unwrap();
        assert!((d - 1.5).abs() < 1e-12);

        let zero = Array2::<f64>::zeros((4, 4));
        assert_eq!(effective_dimension(zero.view(), 0.3).unwrap(), 0.0);
    }

    #[test]
    fn effective_dimension_rejects_asymmetric() {
        let mut k = Array2::<f64>::eye(3);
        k[[0, 1]] = 0.5;
        assert!(matches!(
            effective_dimension(k.view(), 1.0),
            Err(CoreError::NotSymmetric { .. })
        ));
    }

    #[test]
    fn effective_dimension_matches_trace_of_solve() {
        let mut r = rng::chacha(8);
        for trial in 0..20 {
            let n = 10 + (trial % 5) * 17;
            let b = Array2::from_shape_fn((n, n), |_| r.gen::<f64>() * 2.0 - 1.0);
            let k = b.dot(&b.t());
            let lambda = 0.1 + r.gen::<f64>();
            let d_eig = effective_dimension(k.view(), lambda).unwrap();
            // Independent route: d̂ = n − λ·Tr[(K/n+λI)⁻¹].
            let a = regularized_gram(&k, n, lambda);
            let chol = linalg::cholesky(a.view()).unwrap();
            let d_solve = n as f64 - lambda * linalg::cho_inverse_trace(&chol);
            assert!(
                (d_eig - d_solve).abs() <= 1e-8,
                "eig {d_eig} vs solve {d_solve}"
            );
        }
    }

    #[test]
    fn effective_dimension_monotone_in_lambda() {
        let spec = KernelSpec::gaussian(1.0, 2).unwrap();
        let x = gaussian_inputs(40, 2, 11);
        let k = spec.gram(x.view()).unwrap();
        let lambdas = [1e-6, 1e-3, 0.1, 1.0, 100.0, 1e9];
        let mut last = f64::INFINITY;
        for &l in &lambdas {
            let d = effective_dimension(k.view(), l).unwrap();
            assert!(d < last, "not strictly decreasing at λ={l}");
            last = d;
        }
        // λ → 0 approaches the rank (full here: distinct gaussian inputs).
        let d0 = effective_dimension(k.view(), 1e-12).unwrap();
        assert!(d0 > 39.9, "d(0+) = {d0}");
        // λ → ∞ drives it to zero.
        let dinf = effective_dimension(k.view(), 1e12).unwrap();
        assert!(dinf < 1e-9);
    }

    #[test]
    fn pool_mean_estimates_effective_dimension() {
        let spec = KernelSpec::gaussian(1.0, 2).unwrap();
        let x = gaussian_inputs(60, 2, 13);
        let lambda = 0.1;
        let profile = LeverageProfile::build(&spec, x.view(), lambda, 20_000, 14).unwrap();
        let rel = (profile.d_tau() - profile.d_hat()).abs() / profile.d_hat();
        assert!(rel < 0.05, "d_tau {} vs d_hat {}", profile.d_tau(), profile.d_hat());
    }

    #[test]
    fn profile_deterministic_per_seed() {
        let spec = KernelSpec::gaussian(1.0, 2).unwrap();
        let x = gaussian_inputs(15, 2, 20);
        let a = LeverageProfile::build(&spec, x.view(), 0.2, 50, 21).unwrap();
        let b = LeverageProfile::build(&spec, x.view(), 0.2, 50, 21).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn d_hat_bounded_by_n_and_trace_over_lambda() {
        let spec = KernelSpec::gaussian(1.0, 2).unwrap();
        let x = gaussian_inputs(25, 2, 23);
        let k = spec.gram(x.view()).unwrap();
        let lambda = 0.05;
        let profile = LeverageProfile::build(&spec, x.view(), lambda, 100, 24).unwrap();
        let trace: f64 = (0..25).map(|i| k[[i, i]] / 25.0).sum();
        assert!(profile.d_hat() <= 25.0 + 1e-9);
        assert!(profile.d_hat() <= trace / lambda + 1e-9);
    }

    #[test]
    fn budget_examples() {
        // plain: κ²=2, λ=0.1, d̂=3, δ=0.1 → ⌈100·ln 480⌉ = 618.
        let s = feature_budget(BudgetScheme::Plain, 0.1, 3.0, core::f64::consts::SQRT_2, 0.1)
            .unwrap();
        assert_eq!(s, 618);
        // weighted: d̂=3, δ=0.1 → ⌈15·ln 480⌉ = 93.
        let s = feature_budget(
            BudgetScheme::Weighted,
            0.1,
            3.0,
            core::f64::consts::SQRT_2,
            0.1,
        )
        .unwrap();
        assert_eq!(s, 93);
    }

    #[test]
    fn weighted_budget_never_exceeds_plain_when_d_hat_small() {
        let kappa = core::f64::consts::SQRT_2;
        let mut r = rng::chacha(31);
        for _ in 0..200 {
            let lambda = 10.0_f64.powf(r.gen::<f64>() * 4.0 - 3.0);
            let cap = kappa * kappa / lambda;
            let d_hat = r.gen::<f64>() * cap.min(500.0);
            if d_hat <= 0.0 {
                continue;
            }
            let delta = 0.05 + 0.9 * r.gen::<f64>();
            let w = feature_budget(BudgetScheme::Weighted, lambda, d_hat, kappa, delta).unwrap();
            let p = feature_budget(BudgetScheme::Plain, lambda, d_hat, kappa, delta).unwrap();
            assert!(w <= p, "weighted {w} > plain {p} with d_hat {d_hat} ≤ κ²/λ {cap}");
        }
    }

    #[test]
    fn budget_rejects_bad_delta() {
        for delta in [0.0, 1.0, -0.5, 1.5] {
            assert!(feature_budget(BudgetScheme::Plain, 0.1, 3.0, 1.4, delta).is_err());
        }
    }
}
