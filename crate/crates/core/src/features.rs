//! Plain and leverage-weighted random feature maps.
//!
//! A map of size s realizes `φ_{q,s}(x) = (1/√s)·[w₁ψ(v₁,x), …, w_sψ(v_s,x)]`
//! with importance weights `wᵢ = √(p(vᵢ)/q(vᵢ))`. Plain maps sample from the
//! spectral measure itself (`q = p`, all weights 1). Weighted maps resample a
//! scored [`LeverageProfile`] pool with probability proportional to the
//! empirical leverage values τ̂_λ, the tractable surrogate for drawing from
//! the ridge leverage distribution `q*(v) = τ_λ(v)/d(λ)`; the self-normalized
//! pool density `q̂(vⱼ) = p(vⱼ)·m·τ̂ⱼ/Στ̂` makes the importance weight
//! `wⱼ = √(Στ̂/(m·τ̂ⱼ))`, which keeps the Monte Carlo kernel estimator
//! consistent on the pool.
//!
//! The `1/√s` scaling lives in the feature matrix, not in the weights, so a
//! map's Gram product `ΦΦᵀ` is the Monte Carlo kernel estimate
//! `k̃(x,y) = (1/s)·Σᵢ wᵢ²·ψ(vᵢ,x)ψ(vᵢ,y)`.

use alloc::vec::Vec;
// Float math resolves through std's inherent methods whenever std is in the
// crate graph (tests); the trait supplies it in pure no_std builds.
#[allow(unused_imports)]
use num_traits::Float;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::kernel::{Frequency, KernelSpec};
use crate::leverage::LeverageProfile;
use crate::rng;

/// How the frequencies of a map were drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingScheme {
    Plain,
    Weighted,
}

/// A sampled random feature map `φ_{q,s}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "FeatureMapDoc", try_from = "FeatureMapDoc")]
pub struct RandomFeatureMap {
    kernel: KernelSpec,
    frequencies: Vec<Frequency>,
    weights: Vec<f64>,
    scheme: SamplingScheme,
    seed: u64,
}

impl RandomFeatureMap {
    /// Plain RFF: `s` frequencies drawn from the spectral measure, unit weights.
    pub fn plain(spec: &KernelSpec, s: usize, seed: u64) -> Result<Self> {
        let frequencies = spec.sample_frequencies(s.max(1), seed)?;
        if s == 0 {
            return Err(CoreError::EmptyInput("feature map"));
        }
        Ok(RandomFeatureMap {
            kernel: *spec,
            frequencies,
            weights: alloc::vec![1.0; s],
            scheme: SamplingScheme::Plain,
            seed,
        })
    }

    /// Leverage-weighted RFF: resamples `s` atoms from the profile's pool with
    /// probability ∝ τ̂_λ and attaches the importance weights `√(Στ̂/(m·τ̂ⱼ))`.
    pub fn weighted(
        spec: &KernelSpec,
        s: usize,
        profile: &LeverageProfile,
        seed: u64,
    ) -> Result<Self> {
        if s == 0 {
            return Err(CoreError::EmptyInput("feature map"));
        }
        if spec != profile.kernel() {
            return Err(CoreError::InvalidParameter {
                name: "profile",
                reason: alloc::format!(
                    "profile was built for a different kernel ({} vs {})",
                    profile.kernel().family.name(),
                    spec.family.name()
                ),
            });
        }
        let tau = profile.tau();
        let m = tau.len();
        // Cumulative leverage mass for inverse-CDF resampling.
        let mut cumulative = Vec::with_capacity(m);
        let mut total = 0.0;
        for &t in tau {
            total += t;
            cumulative.push(total);
        }
        if !(total > 0.0) || !total.is_finite() {
            return Err(CoreError::DegenerateProfile(
                "pool leverage values sum to zero",
            ));
        }

        let mut r = rng::chacha(seed);
        let mut frequencies = Vec::with_capacity(s);
        let mut weights = Vec::with_capacity(s);
        for _ in 0..s {
            let u = r.gen::<f64>() * total;
            // First index with cumulative mass strictly above u; zero-mass
            // atoms are never selected.
            let j = match cumulative.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
                Ok(idx) => idx + 1,
                Err(idx) => idx,
            }
            .min(m - 1);
            frequencies.push(profile.pool()[j].clone());
            weights.push((total / (m as f64 * tau[j])).sqrt());
        }
        Ok(RandomFeatureMap {
            kernel: *spec,
            frequencies,
            weights,
            scheme: SamplingScheme::Weighted,
            seed,
        })
    }

    /// Assembles a map from explicit parts, validating the invariants.
    pub fn from_parts(
        kernel: KernelSpec,
        frequencies: Vec<Frequency>,
        weights: Vec<f64>,
        scheme: SamplingScheme,
        seed: u64,
    ) -> Result<Self> {
        if frequencies.is_empty() {
            return Err(CoreError::EmptyInput("feature map"));
        }
        if frequencies.len() != weights.len() {
            return Err(CoreError::DimensionMismatch {
                expected: frequencies.len(),
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(CoreError::NonFinite("feature weights"));
        }
        if scheme == SamplingScheme::Plain && weights.iter().any(|w| *w != 1.0) {
            return Err(CoreError::InvalidParameter {
                name: "weights",
                reason: alloc::format!("plain maps must have unit weights"),
            });
        }
        Ok(RandomFeatureMap {
            kernel,
            frequencies,
            weights,
            scheme,
            seed,
        })
    }

    pub fn num_features(&self) -> usize {
        self.frequencies.len()
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn frequencies(&self) -> &[Frequency] {
        &self.frequencies
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn scheme(&self) -> SamplingScheme {
        self.scheme
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The feature matrix `Φ` with rows `φ_{q,s}(xᵢ)ᵀ`:
    /// entry `(i,j) = (1/√s)·wⱼ·ψ(vⱼ, xᵢ)`.
    pub fn feature_matrix(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.nrows() == 0 {
            return Err(CoreError::EmptyInput("feature_matrix"));
        }
        if x.ncols() != self.kernel.input_dim {
            return Err(CoreError::DimensionMismatch {
                expected: self.kernel.input_dim,
                got: x.ncols(),
            });
        }
        let s = self.num_features();
        let d = self.kernel.input_dim;
        // Arguments ωⱼᵀxᵢ via one GEMM, then the scaled cosine map.
        let mut omega_t = Array2::<f64>::zeros((d, s));
        for (j, f) in self.frequencies.iter().enumerate() {
            for (i, &w) in f.omega.iter().enumerate() {
                omega_t[[i, j]] = w;
            }
        }
        let mut phi = x.dot(&omega_t);
        let inv_sqrt_s = 1.0 / (s as f64).sqrt();
        let sqrt2 = core::f64::consts::SQRT_2;
        for mut row in phi.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = inv_sqrt_s * self.weights[j] * sqrt2 * (*v + self.frequencies[j].phase).cos();
            }
        }
        Ok(phi)
    }

    /// `φ_{q,s}(x)` as a vector.
    pub fn feature_vector(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        let row = x
            .to_shape((1, x.len()))
            .map_err(|_| CoreError::EmptyInput("feature_vector"))?;
        let phi = self.feature_matrix(row.view())?;
        Ok(phi.row(0).to_owned())
    }

    /// Monte Carlo kernel estimate `k̃(x,y) = φ(x)ᵀφ(y)`.
    pub fn approx_kernel(&self, x: ArrayView1<f64>, y: ArrayView1<f64>) -> Result<f64> {
        let fx = self.feature_vector(x)?;
        let fy = self.feature_vector(y)?;
        Ok(fx.dot(&fy))
    }
}

/// Serialized form of a feature map.
#[derive(Serialize, Deserialize)]
struct FeatureMapDoc {
    kernel: KernelSpec,
    s: usize,
    scheme: SamplingScheme,
    frequencies: Vec<Vec<f64>>,
    phases: Vec<f64>,
    weights: Vec<f64>,
    seed: u64,
}

impl From<RandomFeatureMap> for FeatureMapDoc {
    fn from(map: RandomFeatureMap) -> Self {
        FeatureMapDoc {
            kernel: map.kernel,
            s: map.frequencies.len(),
            scheme: map.scheme,
            frequencies: map.frequencies.iter().map(|f| f.omega.to_vec()).collect(),
            phases: map.frequencies.iter().map(|f| f.phase).collect(),
            weights: map.weights,
            seed: map.seed,
        }
    }
}

impl TryFrom<FeatureMapDoc> for RandomFeatureMap {
    type Error = CoreError;

    fn try_from(doc: FeatureMapDoc) -> Result<Self> {
        if doc.frequencies.len() != doc.s || doc.phases.len() != doc.s {
            return Err(CoreError::DimensionMismatch {
                expected: doc.s,
                got: doc.frequencies.len(),
            });
        }
        let frequencies = doc
            .frequencies
            .into_iter()
            .zip(doc.phases)
            .map(|(omega, phase)| Frequency::new(Array1::from(omega), phase))
            .collect::<Result<Vec<_>>>()?;
        RandomFeatureMap::from_parts(doc.kernel, frequencies, doc.weights, doc.scheme, doc.seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng as crng;
    use ndarray::arr1;
    use rand::Rng;

    fn spec() -> KernelSpec {
        KernelSpec::gaussian(1.0, 2).unwrap()
    }

    fn random_points(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut r = crng::chacha(seed);
        Array2::from_shape_fn((n, d), |_| crng::standard_normal(&mut r))
    }

    #[test]
    fn plain_single_feature() {
        let map = RandomFeatureMap::plain(&spec(), 1, 3).unwrap();
        assert_eq!(map.num_features(), 1);
        assert_eq!(map.weights(), &[1.0]);
        assert_eq!(map.scheme(), SamplingScheme::Plain);
    }

    #[test]
    fn plain_deterministic() {
        let a = RandomFeatureMap::plain(&spec(), 16, 7).unwrap();
        let b = RandomFeatureMap::plain(&spec(), 16, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn plain_kernel_approximation() {
        let sp = spec();
        let map = RandomFeatureMap::plain(&sp, 10_000, 11).unwrap();
        let mut r = crng::chacha(12);
        for _ in 0..20 {
            let x = Array1::from_shape_fn(2, |_| r.gen::<f64>() * 2.0 - 1.0);
            let y = Array1::from_shape_fn(2, |_| r.gen::<f64>() * 2.0 - 1.0);
            let approx = map.approx_kernel(x.view(), y.view()).unwrap();
            let exact = sp.eval(x.view(), y.view()).unwrap();
            assert!((approx - exact).abs() < 0.05, "{approx} vs {exact}");
        }
    }

    #[test]
    fn feature_matrix_trivial_entry() {
        // n=1, s=1, ω=0, b=0 → [[√2]].
        let freq = Frequency::new(arr1(&[0.0, 0.0]), 0.0).unwrap();
        let map = RandomFeatureMap::from_parts(
            spec(),
            alloc::vec![freq],
            alloc::vec![1.0],
            SamplingScheme::Plain,
            0,
        )
        .unwrap();
        let x = Array2::from_shape_vec((1, 2), alloc::vec![5.0, -1.0]).unwrap();
        let phi = map.feature_matrix(x.view()).unwrap();
        assert!((phi[[0, 0]] - core::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn gram_product_approximates_kernel() {
        let sp = spec();
        let map = RandomFeatureMap::plain(&sp, 10_000, 13).unwrap();
        let x = random_points(6, 2, 14);
        let phi = map.feature_matrix(x.view()).unwrap();
        let approx = phi.dot(&phi.t());
        for i in 0..6 {
            for j in 0..6 {
                let exact = sp.eval(x.row(i), x.row(j)).unwrap();
                assert!(
                    (approx[[i, j]] - exact).abs() < 0.05,
                    "entry ({i},{j}): {} vs {exact}",
                    approx[[i, j]]
                );
            }
        }
    }

    #[test]
    fn entries_bounded_by_kappa_weight_over_sqrt_s() {
        let sp = spec();
        let map = RandomFeatureMap::plain(&sp, 64, 15).unwrap();
        let x = random_points(30, 2, 16);
        let phi = map.feature_matrix(x.view()).unwrap();
        let bound = sp.kappa() / (64.0_f64).sqrt();
        for v in phi.iter() {
            assert!(v.abs() <= bound + 1e-12);
        }
    }

    #[test]
    fn approx_kernel_consistent_with_feature_matrix() {
        let sp = spec();
        let map = RandomFeatureMap::plain(&sp, 1000, 17).unwrap();
        let x = arr1(&[0.3, 0.4]);
        let y = arr1(&[-0.2, 1.1]);
        let both = ndarray::stack![ndarray::Axis(0), x.view(), y.view()];
        let phi = map.feature_matrix(both.view()).unwrap();
        let gram = phi.dot(&phi.t());
        let direct = map.approx_kernel(x.view(), y.view()).unwrap();
        assert!((gram[[0, 1]] - direct).abs() < 1e-12);
        // Symmetry.
        let reverse = map.approx_kernel(y.view(), x.view()).unwrap();
        assert_eq!(direct, reverse);
    }

    #[test]
    fn approx_kernel_diag_in_range() {
        let sp = spec();
        let map = RandomFeatureMap::plain(&sp, 32, 19).unwrap();
        let mut r = crng::chacha(20);
        for _ in 0..50 {
            let x = Array1::from_shape_fn(2, |_| r.gen::<f64>() * 4.0 - 2.0);
            let v = map.approx_kernel(x.view(), x.view()).unwrap();
            assert!((0.0..=2.0 + 1e-12).contains(&v), "diag {v}");
        }
    }

    #[test]
    fn single_frequency_zero_map_value_two() {
        // s=1, ω=0, b=0 → k̃(x,y) = √2·√2 = 2 for any x, y.
        let freq = Frequency::new(arr1(&[0.0, 0.0]), 0.0).unwrap();
        let map = RandomFeatureMap::from_parts(
            spec(),
            alloc::vec![freq],
            alloc::vec![1.0],
            SamplingScheme::Plain,
            0,
        )
        .unwrap();
        let v = map
            .approx_kernel(arr1(&[1.0, 2.0]).view(), arr1(&[-3.0, 0.5]).view())
            .unwrap();
        assert!((v - 2.0).abs() < 1e-14);
    }

    fn uniform_profile(sp: &KernelSpec, m: usize, seed: u64) -> LeverageProfile {
        let pool = sp.sample_frequencies(m, seed).unwrap();
        LeverageProfile::from_parts(
            *sp,
            pool,
            alloc::vec![0.25; m],
            0.1,
            1.0,
            1.0,
            seed,
        )
        .unwrap()
    }

    #[test]
    fn weighted_single_atom_pool() {
        let sp = spec();
        let profile = uniform_profile(&sp, 1, 23);
        let map = RandomFeatureMap::weighted(&sp, 5, &profile, 24).unwrap();
        assert_eq!(map.num_features(), 5);
        for f in map.frequencies() {
            assert_eq!(f, &profile.pool()[0]);
        }
        // Στ̂/(m·τ̂₁) = 1 for a single atom.
        for &w in map.weights() {
            assert!((w - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn weighted_uniform_pool_draws_uniformly() {
        // Uniform leverage over 10 atoms: draw frequencies uniform within 3σ
        // multinomial bounds at s = 10⁵.
        let sp = spec();
        let m = 10;
        let s = 100_000;
        let profile = uniform_profile(&sp, m, 25);
        let map = RandomFeatureMap::weighted(&sp, s, &profile, 26).unwrap();
        let mut counts = alloc::vec![0usize; m];
        for f in map.frequencies() {
            let idx = profile.pool().iter().position(|g| g == f).unwrap();
            counts[idx] += 1;
        }
        let p = 1.0 / m as f64;
        let sigma = (p * (1.0 - p) / s as f64).sqrt();
        for (i, &c) in counts.iter().enumerate() {
            let freq = c as f64 / s as f64;
            assert!(
                (freq - p).abs() <= 3.0 * sigma,
                "atom {i}: frequency {freq} vs {p} ± {}",
                3.0 * sigma
            );
        }
    }

    #[test]
    fn weighted_estimator_matches_pool_plain_estimate() {
        // E over resampling of w²ψψ equals the pool's plain Monte Carlo
        // estimate; check by large-s agreement.
        let sp = spec();
        let x_data = random_points(25, 2, 27);
        let profile = LeverageProfile::build(&sp, x_data.view(), 0.1, 2000, 28).unwrap();
        let map = RandomFeatureMap::weighted(&sp, 100_000, &profile, 29).unwrap();

        let x = arr1(&[0.4, -0.3]);
        let y = arr1(&[-0.1, 0.8]);
        let weighted = map.approx_kernel(x.view(), y.view()).unwrap();
        let pool_plain: f64 = profile
            .pool()
            .iter()
            .map(|f| f.feature(x.view()).unwrap() * f.feature(y.view()).unwrap())
            .sum::<f64>()
            / profile.pool_size() as f64;
        assert!(
            (weighted - pool_plain).abs() < 0.05,
            "weighted {weighted} vs pool plain {pool_plain}"
        );
        // And the pool estimate itself is close to the kernel.
        let exact = sp.eval(x.view(), y.view()).unwrap();
        assert!((pool_plain - exact).abs() < 0.1);
    }

    #[test]
    fn weighted_rejects_degenerate_pool() {
        let sp = spec();
        let pool = sp.sample_frequencies(4, 30).unwrap();
        let profile =
            LeverageProfile::from_parts(sp, pool, alloc::vec![0.0; 4], 0.1, 1.0, 0.0, 30).unwrap();
        assert!(matches!(
            RandomFeatureMap::weighted(&sp, 3, &profile, 31),
            Err(CoreError::DegenerateProfile(_))
        ));
    }

    #[test]
    fn weighted_deterministic() {
        let sp = spec();
        let x_data = random_points(10, 2, 33);
        let profile = LeverageProfile::build(&sp, x_data.view(), 0.2, 200, 34).unwrap();
        let a = RandomFeatureMap::weighted(&sp, 50, &profile, 35).unwrap();
        let b = RandomFeatureMap::weighted(&sp, 50, &profile, 35).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let map = RandomFeatureMap::plain(&spec(), 4, 40).unwrap();
        let bad = Array2::<f64>::zeros((3, 5));
        assert!(matches!(
            map.feature_matrix(bad.view()),
            Err(CoreError::DimensionMismatch { .. })
        ));
    }
}
