use ndarray::{s, Array2};
use rff_core::erm::{self, sign, Loss, TrainOptions};
use rff_core::synthdata::{self, NoiseModel, SpectrumRegime};
use rff_bench::runner::{conditional_zero_one_excess, kernel_margins};

fn main() {
    let holdout = 8192usize;
    let n_max = 4096;
    let n_ref = n_max + holdout;
    for seed in [1u64, 2, 3] {
        let (spec, x_ref) = synthdata::make_spectrum_regime(SpectrumRegime::Exponential, n_ref, 1, seed).unwrap();
        let target = synthdata::make_source_problem_on(&spec, x_ref, 1.0, 1.0, seed + 100).unwrap();
        let noise = NoiseModel::massart(0.8).unwrap();
        let idx_all: Vec<usize> = (0..n_ref).collect();
        let labels = synthdata::draw_labels(&target, &noise, &idx_all, seed + 200).unwrap();
        let x_hold: Array2<f64> = target.reference_x.slice(s![n_max.., ..]).to_owned();
        let f_hold: Vec<f64> = target.f_vals[n_max..].to_vec();
        // count sign crossings of f on holdout sorted by x
        let mut xs: Vec<(f64, f64)> = x_hold.column(0).iter().cloned().zip(f_hold.iter().cloned()).collect();
        xs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let crossings = xs.windows(2).filter(|w| sign(w[0].1) != sign(w[1].1)).count();
        println!("seed {seed}: f_H scale {:.4}, crossings {}", (f_hold.iter().map(|v| v*v).sum::<f64>() / f_hold.len() as f64).sqrt(), crossings);
        for &n in &[256usize, 1024, 4096] {
            let x_train: Array2<f64> = target.reference_x.slice(s![..n, ..]).to_owned();
            let y: Vec<f64> = labels[..n].to_vec();
            for (tag, lam) in [("0.5/sqrt", 0.5/(n as f64).sqrt()), ("0.1/sqrt", 0.1/(n as f64).sqrt()), ("2/n", 2.0/(n as f64)), ("0.2/n", 0.2/(n as f64))] {
                let k = spec.gram(x_train.view()).unwrap();
                let opts = TrainOptions { tol: 1e-5, max_iters: 50_000, norm_constraint: None };
                let m = match erm::train_kernel(k.view(), &y, Loss::hinge(), lam, &opts) {
                    Ok(m) => m, Err(erm::TrainError::Convergence { model, .. }) => *model, Err(e) => panic!("{e}") };
                let margins = kernel_margins(&spec, x_train.view(), &m.coefficients, x_hold.view()).unwrap();
                let ex = conditional_zero_one_excess(margins.view(), &f_hold, 0.8);
                print!("  n={n} λ={tag}: {ex:.5}");
            }
            println!();
        }
    }
}
