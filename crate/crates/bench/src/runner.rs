//! The sweep runner: executes an [`ExperimentPlan`] cell by cell.
//!
//! One seed drives one trial: a fresh reference sample (population
//! surrogate), a source-condition target on it, Massart labels, and a
//! train/holdout split. Training sets are nested across the n grid so the
//! per-seed curves are paired. Every cell trains the exact kernel baseline
//! and the requested feature schemes at the same (n, s, λ), then measures
//! excess risks on the holdout.
//!
//! Because f_H is known exactly on every reference point, excess risks are
//! integrated analytically over the label noise: the zero-one excess of a
//! hypothesis h is `γ₀·P̂(h ≠ sign(f_H))` over the holdout, and surrogate
//! excesses average `E_y[l(y,·)]` under `P(y=+1|x) = (1+γ₀·sign(f_H(x)))/2`
//! against the sign rule `x ↦ sign(f_H(x))`. This removes label-sampling
//! noise from the measurement; only the holdout's x-sampling noise remains.

use anyhow::Context;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

use rff_core::erm::{self, sign, Loss, TrainError, TrainOptions, TrainedModel};
use rff_core::features::RandomFeatureMap;
use rff_core::kernel::{KernelFamily, KernelSpec};
use rff_core::leverage::LeverageProfile;
use rff_core::linalg;
use rff_core::synthdata::{self, NoiseModel, SourceTarget};

use crate::plan::{ExperimentPlan, Scheme};

/// One row of the results table. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub n: usize,
    pub s: usize,
    pub lambda: f64,
    pub scheme: String,
    pub seed: u64,
    pub excess_zero_one: f64,
    pub excess_surrogate: f64,
    pub kernel_baseline_excess: f64,
    pub wall_time: f64,
    pub r_star: f64,
    pub d_hat: f64,
}

/// Output of a run: all cells in canonical order plus bookkeeping.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub plan: ExperimentPlan,
    pub cells: Vec<CellResult>,
    pub convergence_failures: usize,
}

/// Zero-one excess risk over the Bayes rule, integrated over label noise:
/// `γ₀ · (fraction of holdout where sign(margin) ≠ sign(f_H))`.
pub fn conditional_zero_one_excess(margins: ArrayView1<f64>, f_vals: &[f64], gamma0: f64) -> f64 {
    let disagree = margins
        .iter()
        .zip(f_vals)
        .filter(|(&m, &f)| sign(m) != sign(f))
        .count();
    gamma0 * disagree as f64 / f_vals.len() as f64
}

/// Surrogate excess over the sign rule `x ↦ sign(f_H(x))`, integrated over
/// label noise.
pub fn conditional_surrogate_excess(
    margins: ArrayView1<f64>,
    f_vals: &[f64],
    gamma0: f64,
    loss: &Loss,
) -> f64 {
    let mut total = 0.0;
    for (&m, &f) in margins.iter().zip(f_vals) {
        let bayes_sign = sign(f);
        let p_plus = (1.0 + gamma0 * bayes_sign) / 2.0;
        let p_minus = 1.0 - p_plus;
        let model_risk = p_plus * loss.value(1.0, m) + p_minus * loss.value(-1.0, m);
        let bayes_risk =
            p_plus * loss.value(1.0, bayes_sign) + p_minus * loss.value(-1.0, bayes_sign);
        total += model_risk - bayes_risk;
    }
    total / f_vals.len() as f64
}

/// Kernel-machine margins on evaluation points, streamed without
/// materializing the cross Gram matrix.
pub fn kernel_margins(
    spec: &KernelSpec,
    x_train: ArrayView2<f64>,
    alpha: &[f64],
    x_eval: ArrayView2<f64>,
) -> anyhow::Result<Array1<f64>> {
    let mut out = Array1::<f64>::zeros(x_eval.nrows());
    for (e, slot) in out.iter_mut().enumerate() {
        let xe = x_eval.row(e);
        let mut acc = 0.0;
        for (t, &a) in alpha.iter().enumerate() {
            if a != 0.0 {
                acc += a * spec.eval(x_train.row(t), xe)?;
            }
        }
        *slot = acc;
    }
    Ok(out)
}

/// Eigenvalues of the exact normalized Gram K/n, descending, clamped at
/// zero. The linear family goes through the d×d second-moment matrix, the
/// cosine families through the full symmetric eigendecomposition.
fn exact_gram_mu(
    spec: &KernelSpec,
    x_train: ArrayView2<f64>,
    k_train: &Array2<f64>,
) -> anyhow::Result<Vec<f64>> {
    let n = x_train.nrows() as f64;
    let mut mu = if spec.family == KernelFamily::LinearFiniteRank {
        // Nonzero eigenvalues of (1/n)·X Xᵀ/d equal those of XᵀX/(n·d).
        let small = x_train.t().dot(&x_train) / (n * spec.input_dim as f64);
        let eig = linalg::sym_eigen(small.view())?;
        eig.values.to_vec()
    } else {
        let eig = linalg::sym_eigen(k_train.view())?;
        eig.values.iter().map(|w| w / n).collect()
    };
    mu.iter_mut().for_each(|m| *m = m.max(0.0));
    mu.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(mu)
}

/// Eigenvalues of the approximate normalized Gram K̃/n = ΦΦᵀ/n through the
/// s×s matrix ΦᵀΦ/n, descending, clamped at zero.
fn feature_gram_mu(phi: &Array2<f64>) -> anyhow::Result<Vec<f64>> {
    let n = phi.nrows() as f64;
    let small = phi.t().dot(phi) / n;
    let eig = linalg::sym_eigen(small.view())?;
    let mut mu: Vec<f64> = eig.values.iter().map(|w| w.max(0.0)).collect();
    mu.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(mu)
}

fn effective_dimension_from_mu(mu: &[f64], lambda: f64) -> f64 {
    mu.iter().map(|&m| m / (m + lambda)).sum()
}

fn gather_rows(x: ArrayView2<f64>, idx: &[usize]) -> Array2<f64> {
    let mut out = Array2::<f64>::zeros((idx.len(), x.ncols()));
    for (row, &i) in idx.iter().enumerate() {
        out.row_mut(row).assign(&x.row(i));
    }
    out
}

fn train_with_fallback(
    result: Result<TrainedModel, TrainError>,
    context: &str,
    failures: &mut usize,
) -> anyhow::Result<TrainedModel> {
    match result {
        Ok(model) => Ok(model),
        Err(TrainError::Convergence { model, gap, tol, iters }) => {
            eprintln!(
                "warning: {context}: solver stopped at gap {gap:.3e} (tol {tol:.1e}) after {iters} iterations; using best iterate"
            );
            *failures += 1;
            Ok(*model)
        }
        Err(TrainError::Invalid(e)) => Err(e).context(context.to_string()),
    }
}

/// Substream tags for per-seed randomness.
pub const STREAM_REGIME: u64 = 11;
pub const STREAM_TARGET: u64 = 12;
pub const STREAM_LABELS: u64 = 13;
pub const STREAM_SPLIT: u64 = 14;

/// splitmix64 substream derivation shared by the runner and the CLI's
/// reference-dataset export.
pub fn mix(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

struct SeedContext {
    spec: KernelSpec,
    target: SourceTarget,
    labels: Vec<f64>,
    train_pool: Vec<usize>,
    holdout_x: Array2<f64>,
    holdout_f: Vec<f64>,
}

fn build_seed_context(plan: &ExperimentPlan, seed: u64) -> anyhow::Result<SeedContext> {
    let n_max = *plan.n_grid.last().expect("validated nonempty");
    let n_ref = n_max + plan.holdout;
    let (spec, x_ref) = synthdata::make_spectrum_regime(
        plan.regime.kind,
        n_ref,
        plan.regime.dim,
        mix(seed, STREAM_REGIME),
    )?;
    let target = synthdata::make_source_problem_on(
        &spec,
        x_ref,
        plan.source.r,
        plan.source.big_r,
        mix(seed, STREAM_TARGET),
    )?;
    let noise = NoiseModel::massart(plan.noise.gamma0)?;
    let all_indices: Vec<usize> = (0..n_ref).collect();
    let labels = synthdata::draw_labels(&target, &noise, &all_indices, mix(seed, STREAM_LABELS))?;

    // Fisher–Yates split: first n_max entries are the nested train pool.
    let mut perm = all_indices;
    let mut rng = ChaCha20Rng::seed_from_u64(mix(seed, STREAM_SPLIT));
    for i in (1..perm.len()).rev() {
        let j = rng.gen_range(0..=i);
        perm.swap(i, j);
    }
    let train_pool = perm[..n_max].to_vec();
    let holdout_idx = &perm[n_max..];
    let holdout_x = gather_rows(target.reference_x.view(), holdout_idx);
    let holdout_f: Vec<f64> = holdout_idx.iter().map(|&i| target.f_vals[i]).collect();

    Ok(SeedContext {
        spec,
        target,
        labels,
        train_pool,
        holdout_x,
        holdout_f,
    })
}

fn run_seed(plan: &ExperimentPlan, seed: u64) -> anyhow::Result<(Vec<CellResult>, usize)> {
    let ctx = build_seed_context(plan, seed)?;
    let loss = Loss { kind: plan.loss };
    let gamma0 = plan.noise.gamma0;
    let opts = TrainOptions {
        tol: plan.solver.tol,
        max_iters: plan.solver.max_iters,
        norm_constraint: None,
    };
    let mut cells = Vec::new();
    let mut failures = 0usize;

    // The exact Gram spectrum costs a full n×n eigendecomposition for the
    // cosine families, so it is only computed when something needs it: a
    // budget s-rule or exact-scheme spectrum columns. (The linear family has
    // a cheap d×d route either way.)
    let needs_exact_mu = matches!(plan.s_rule, crate::plan::SRule::Budget { .. })
        || plan.schemes.contains(&Scheme::Exact);

    for (grid_idx, &n) in plan.n_grid.iter().enumerate() {
        let train_idx = &ctx.train_pool[..n];
        let x_train = gather_rows(ctx.target.reference_x.view(), train_idx);
        let y_train: Vec<f64> = train_idx.iter().map(|&i| ctx.labels[i]).collect();
        let lambda = plan.lambda_rule.eval(n);

        let baseline_start = Instant::now();
        let k_train = ctx.spec.gram(x_train.view())?;
        let exact_mu = if needs_exact_mu {
            Some(exact_gram_mu(&ctx.spec, x_train.view(), &k_train)?)
        } else {
            None
        };
        let exact_d_hat = exact_mu
            .as_ref()
            .map(|mu| effective_dimension_from_mu(mu, lambda))
            .unwrap_or(f64::NAN);
        let s = plan.resolve_s(grid_idx, lambda, exact_d_hat.max(1e-12), ctx.spec.kappa())?;

        let baseline = train_with_fallback(
            erm::train_kernel(k_train.view(), &y_train, loss, lambda, &opts),
            &format!("exact baseline (seed {seed}, n {n})"),
            &mut failures,
        )?;
        let baseline_margins =
            kernel_margins(&ctx.spec, x_train.view(), &baseline.coefficients, ctx.holdout_x.view())?;
        let baseline_zero_one =
            conditional_zero_one_excess(baseline_margins.view(), &ctx.holdout_f, gamma0);
        let baseline_surrogate =
            conditional_surrogate_excess(baseline_margins.view(), &ctx.holdout_f, gamma0, &loss);
        let baseline_time = baseline_start.elapsed().as_secs_f64();

        for (scheme_idx, &scheme) in plan.schemes.iter().enumerate() {
            let cell_start = Instant::now();
            let cell = match scheme {
                Scheme::Exact => {
                    let mu = exact_mu.as_ref().expect("computed when Exact is scheduled");
                    let (r_star, _) =
                        rff_core::diagnostics::local_rademacher_fixed_point(mu, n)?;
                    CellResult {
                        n,
                        s,
                        lambda,
                        scheme: scheme.name().to_string(),
                        seed,
                        excess_zero_one: baseline_zero_one,
                        excess_surrogate: baseline_surrogate,
                        kernel_baseline_excess: baseline_zero_one,
                        wall_time: baseline_time,
                        r_star,
                        d_hat: exact_d_hat,
                    }
                }
                Scheme::Plain | Scheme::Weighted => {
                    let feature_seed = mix(seed, 1000 + (grid_idx as u64) * 8 + scheme_idx as u64);
                    let map = match scheme {
                        Scheme::Plain => RandomFeatureMap::plain(&ctx.spec, s, feature_seed)?,
                        Scheme::Weighted => {
                            let pool = plan
                                .pool_size
                                .unwrap_or_else(|| LeverageProfile::default_pool_size(s));
                            let profile = LeverageProfile::build(
                                &ctx.spec,
                                x_train.view(),
                                lambda,
                                pool,
                                mix(seed, 2000 + grid_idx as u64),
                            )?;
                            RandomFeatureMap::weighted(&ctx.spec, s, &profile, feature_seed)?
                        }
                        Scheme::Exact => unreachable!(),
                    };
                    let phi_train = map.feature_matrix(x_train.view())?;
                    let model = train_with_fallback(
                        erm::train_rff(phi_train.view(), &y_train, loss, lambda, &opts),
                        &format!("{} (seed {seed}, n {n}, s {s})", scheme.name()),
                        &mut failures,
                    )?;
                    let phi_hold = map.feature_matrix(ctx.holdout_x.view())?;
                    let margins = model.margins(phi_hold.view())?;
                    let mu = feature_gram_mu(&phi_train)?;
                    let (r_star, _) =
                        rff_core::diagnostics::local_rademacher_fixed_point(&mu, n)?;
                    CellResult {
                        n,
                        s,
                        lambda,
                        scheme: scheme.name().to_string(),
                        seed,
                        excess_zero_one: conditional_zero_one_excess(
                            margins.view(),
                            &ctx.holdout_f,
                            gamma0,
                        ),
                        excess_surrogate: conditional_surrogate_excess(
                            margins.view(),
                            &ctx.holdout_f,
                            gamma0,
                            &loss,
                        ),
                        kernel_baseline_excess: baseline_zero_one,
                        wall_time: cell_start.elapsed().as_secs_f64(),
                        r_star,
                        d_hat: effective_dimension_from_mu(&mu, lambda),
                    }
                }
            };
            cells.push(cell);
        }
    }
    Ok((cells, failures))
}

/// Executes a plan: one trial per seed, in parallel, results in canonical
/// order (n, scheme, seed).
pub fn run_plan(plan: &ExperimentPlan) -> anyhow::Result<RunSummary> {
    plan.validate()?;
    let outcomes: Vec<anyhow::Result<(Vec<CellResult>, usize)>> = plan
        .seeds
        .par_iter()
        .map(|&seed| run_seed(plan, seed))
        .collect();
    let mut cells = Vec::new();
    let mut failures = 0usize;
    for outcome in outcomes {
        let (mut c, f) = outcome?;
        cells.append(&mut c);
        failures += f;
    }
    cells.sort_by(|a, b| {
        (a.n, a.scheme.as_str(), a.seed).cmp(&(b.n, b.scheme.as_str(), b.seed))
    });
    for cell in &cells {
        anyhow::ensure!(
            cell.excess_zero_one.is_finite()
                && cell.excess_surrogate.is_finite()
                && cell.kernel_baseline_excess.is_finite()
                && cell.r_star.is_finite()
                && cell.d_hat.is_finite()
                && cell.wall_time >= 0.0,
            "non-finite cell result for n={}, scheme={}, seed={}",
            cell.n,
            cell.scheme,
            cell.seed
        );
    }
    Ok(RunSummary {
        plan: plan.clone(),
        cells,
        convergence_failures: failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::{LambdaRule, NoiseSpec, RegimeSpec, SRule, SolverSpec, SourceSpec};
    use rff_core::erm::LossKind;
    use rff_core::synthdata::SpectrumRegime;

    fn tiny_plan() -> ExperimentPlan {
        ExperimentPlan {
            name: "tiny".into(),
            regime: RegimeSpec {
                kind: SpectrumRegime::Exponential,
                dim: 1,
            },
            loss: LossKind::Hinge,
            schemes: vec![Scheme::Plain, Scheme::Weighted, Scheme::Exact],
            n_grid: vec![24, 48],
            s_rule: SRule::SqrtNLogN,
            lambda_rule: LambdaRule::Power { c: 0.5, r: 1.0 },
            source: SourceSpec { r: 1.0, big_r: 1.0 },
            noise: NoiseSpec { gamma0: 0.8 },
            seeds: vec![7, 8],
            holdout: 64,
            solver: SolverSpec {
                tol: 1e-5,
                max_iters: 20_000,
            },
            pool_size: Some(200),
        }
    }

    #[test]
    fn run_produces_one_row_per_cell_trial() {
        let summary = run_plan(&tiny_plan()).unwrap();
        // 2 n values × 3 schemes × 2 seeds.
        assert_eq!(summary.cells.len(), 12);
        // Canonical ordering.
        let mut sorted = summary.cells.clone();
        sorted.sort_by(|a, b| (a.n, a.scheme.as_str(), a.seed).cmp(&(b.n, b.scheme.as_str(), b.seed)));
        assert_eq!(sorted, summary.cells);
        for cell in &summary.cells {
            assert!(cell.excess_zero_one >= 0.0);
            assert!(cell.d_hat > 0.0);
            assert!(cell.r_star > 0.0);
        }
    }

    #[test]
    fn run_is_deterministic_modulo_wall_time() {
        let a = run_plan(&tiny_plan()).unwrap();
        let b = run_plan(&tiny_plan()).unwrap();
        assert_eq!(a.cells.len(), b.cells.len());
        for (x, y) in a.cells.iter().zip(&b.cells) {
            let mut x = x.clone();
            let mut y = y.clone();
            x.wall_time = 0.0;
            y.wall_time = 0.0;
            assert_eq!(x, y);
        }
    }

    #[test]
    fn conditional_excess_formulas() {
        // Margins disagreeing with f on 1 of 4 points: excess = γ₀/4.
        let margins = ndarray::arr1(&[1.0, -1.0, 1.0, 1.0]);
        let f = [0.5, -0.2, 0.3, -0.4];
        let ex = conditional_zero_one_excess(margins.view(), &f, 0.8);
        assert!((ex - 0.2).abs() < 1e-15);

        // The sign rule itself has zero surrogate excess.
        let bayes_margins = ndarray::arr1(&[1.0, -1.0, 1.0, -1.0]);
        let f2 = [0.5, -0.2, 0.3, -0.4];
        let ex =
            conditional_surrogate_excess(bayes_margins.view(), &f2, 0.8, &Loss::hinge());
        assert!(ex.abs() < 1e-15);
    }

    #[test]
    fn kernel_margins_match_gram_product() {
        let spec = KernelSpec::gaussian(1.0, 2).unwrap();
        let x = synthdata::default_inputs(10, 2, 3);
        let alpha: Vec<f64> = (0..10).map(|i| (i as f64 - 5.0) / 10.0).collect();
        let k = spec.gram(x.view()).unwrap();
        let direct = k.dot(&Array1::from(alpha.clone()));
        let streamed = kernel_margins(&spec, x.view(), &alpha, x.view()).unwrap();
        for i in 0..10 {
            assert!((direct[i] - streamed[i]).abs() < 1e-12);
        }
    }
}
