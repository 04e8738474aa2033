//! Experiment plans: the JSON document that fully determines a sweep.
//!
//! A plan fixes the data regime, loss, sampling schemes, the n grid, the
//! rules mapping n to the feature count s and the ridge level λ, the noise
//! margin, the seeds, and the solver budget. Runs are deterministic functions
//! of the plan.

use rff_core::erm::LossKind;
use rff_core::leverage::BudgetScheme;
use rff_core::synthdata::SpectrumRegime;
use serde::{Deserialize, Serialize};

/// How the frequencies of a cell are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Spectral-measure sampling, unit weights.
    Plain,
    /// Ridge-leverage resampling with importance weights.
    Weighted,
    /// No random features: the exact kernel machine only.
    Exact,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Plain => "plain",
            Scheme::Weighted => "weighted",
            Scheme::Exact => "exact",
        }
    }
}

/// Rule mapping a grid point n (and, for budget rules, the cell's λ and
/// effective dimension) to the feature count s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SRule {
    /// One explicit s per n-grid entry.
    Explicit { values: Vec<usize> },
    /// s = ⌈√n·ln n⌉.
    SqrtNLogN,
    /// s = ⌈n^exponent·ln n⌉.
    RootLog { exponent: f64 },
    /// s from a feature-budget formula at the cell's λ and d̂(λ).
    Budget { budget: BudgetScheme, delta: f64 },
}

/// Rule mapping n to the ridge level λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LambdaRule {
    /// λ = c·n^{−1/(2r)}: the schedule under which the λ^r approximation
    /// term decays like 1/√n.
    Power { c: f64, r: f64 },
    /// Constant λ.
    Fixed { value: f64 },
}

impl LambdaRule {
    pub fn eval(&self, n: usize) -> f64 {
        match self {
            LambdaRule::Power { c, r } => c * (n as f64).powf(-1.0 / (2.0 * r)),
            LambdaRule::Fixed { value } => *value,
        }
    }
}

/// Data regime: spectrum shape plus input dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeSpec {
    #[serde(flatten)]
    pub kind: SpectrumRegime,
    pub dim: usize,
}

/// Source-condition target parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    /// Regularity exponent r ∈ [1/2, 1].
    pub r: f64,
    /// Source norm R.
    pub big_r: f64,
}

/// Massart noise margin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub gamma0: f64,
}

/// Solver budget for every cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSpec {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            tol: 1e-6,
            max_iters: 50_000,
        }
    }
}

fn default_pool_size() -> Option<usize> {
    None
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub name: String,
    pub regime: RegimeSpec,
    pub loss: LossKind,
    pub schemes: Vec<Scheme>,
    /// Ascending training-set sizes.
    pub n_grid: Vec<usize>,
    pub s_rule: SRule,
    pub lambda_rule: LambdaRule,
    pub source: SourceSpec,
    pub noise: NoiseSpec,
    /// One trial per seed; each seed drives an independent reference sample,
    /// target, labels, split, and feature draws.
    pub seeds: Vec<u64>,
    /// Holdout size; the reference sample has max(n_grid) + holdout points.
    pub holdout: usize,
    #[serde(default)]
    pub solver: SolverSpec,
    /// Pool size for leverage profiles (default: max(20·s, 2000)).
    #[serde(default = "default_pool_size")]
    pub pool_size: Option<usize>,
}

impl ExperimentPlan {
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            anyhow::bail!("plan name must be a nonempty [A-Za-z0-9_-]+ token");
        }
        if self.n_grid.is_empty() {
            anyhow::bail!("n_grid must be nonempty");
        }
        if !self.n_grid.windows(2).all(|w| w[0] < w[1]) {
            anyhow::bail!("n_grid must be strictly ascending");
        }
        if self.seeds.is_empty() {
            anyhow::bail!("at least one seed (trial) is required");
        }
        if self.holdout == 0 {
            anyhow::bail!("holdout must be positive");
        }
        if self.schemes.is_empty() {
            anyhow::bail!("at least one scheme is required");
        }
        if let SRule::Explicit { values } = &self.s_rule {
            if values.len() != self.n_grid.len() {
                anyhow::bail!(
                    "explicit s rule needs one value per n (got {} for {} grid points)",
                    values.len(),
                    self.n_grid.len()
                );
            }
            if values.iter().any(|&s| s == 0) {
                anyhow::bail!("explicit s values must be positive");
            }
        }
        if let SRule::Budget { delta, .. } = &self.s_rule {
            if !(*delta > 0.0 && *delta < 1.0) {
                anyhow::bail!("budget delta must lie in (0, 1)");
            }
        }
        if !(self.source.r >= 0.5 && self.source.r <= 1.0) {
            anyhow::bail!("source.r must lie in [1/2, 1]");
        }
        if !(self.noise.gamma0 > 0.0 && self.noise.gamma0 <= 1.0) {
            anyhow::bail!("noise.gamma0 must lie in (0, 1]");
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iters == 0 {
            anyhow::bail!("solver tol and max_iters must be positive");
        }
        Ok(())
    }

    /// Resolves the s rule for grid index `idx`; budget rules additionally
    /// need the cell's λ, the effective dimension of the training Gram, and
    /// the kernel bound κ.
    pub fn resolve_s(
        &self,
        idx: usize,
        lambda: f64,
        d_hat: f64,
        kappa: f64,
    ) -> anyhow::Result<usize> {
        let n = self.n_grid[idx];
        let s = match &self.s_rule {
            SRule::Explicit { values } => values[idx],
            SRule::SqrtNLogN => ((n as f64).sqrt() * (n as f64).ln()).ceil() as usize,
            SRule::RootLog { exponent } => {
                ((n as f64).powf(*exponent) * (n as f64).ln()).ceil() as usize
            }
            SRule::Budget { budget, delta } => {
                rff_core::leverage::feature_budget(*budget, lambda, d_hat, kappa, *delta)?
            }
        };
        Ok(s.max(1))
    }

    /// Replaces the seed list with `count` consecutive seeds from `base`
    /// (the CLI `--seed` override).
    pub fn reseed(&mut self, base: u64) {
        let count = self.seeds.len() as u64;
        self.seeds = (0..count).map(|i| base + i).collect();
    }
}
