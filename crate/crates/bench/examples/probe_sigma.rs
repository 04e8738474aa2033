use ndarray::{s, Array2};
use rff_core::erm::{self, Loss, TrainOptions};
use rff_core::kernel::KernelSpec;
use rff_core::synthdata::{self, NoiseModel};
use rff_bench::runner::{conditional_zero_one_excess, kernel_margins};

fn main() {
    let holdout = 8192usize;
    let n_max = 4096;
    let n_ref = n_max + holdout;
    for sigma in [0.3, 0.45, 0.6] {
        println!("=== sigma {sigma}");
        let mut med = vec![vec![]; 3];
        for seed in 1u64..=5 {
            let spec = KernelSpec::gaussian(sigma, 1).unwrap();
            let x_ref = synthdata::default_inputs(n_ref, 1, seed);
            let target = synthdata::make_source_problem_on(&spec, x_ref, 1.0, 1.0, seed + 100).unwrap();
            let noise = NoiseModel::massart(0.8).unwrap();
            let idx_all: Vec<usize> = (0..n_ref).collect();
            let labels = synthdata::draw_labels(&target, &noise, &idx_all, seed + 200).unwrap();
            let x_hold: Array2<f64> = target.reference_x.slice(s![n_max.., ..]).to_owned();
            let f_hold: Vec<f64> = target.f_vals[n_max..].to_vec();
            print!("seed {seed}:");
            for (i, &n) in [256usize, 1024, 4096].iter().enumerate() {
                let x_train: Array2<f64> = target.reference_x.slice(s![..n, ..]).to_owned();
                let y: Vec<f64> = labels[..n].to_vec();
                let lam = 0.5 / (n as f64).sqrt();
                let k = spec.gram(x_train.view()).unwrap();
                let opts = TrainOptions { tol: 1e-5, max_iters: 100_000, norm_constraint: None };
                let m = match erm::train_kernel(k.view(), &y, Loss::hinge(), lam, &opts) {
                    Ok(m) => m, Err(erm::TrainError::Convergence { model, .. }) => { print!("[nc]"); *model }, Err(e) => panic!("{e}") };
                let margins = kernel_margins(&spec, x_train.view(), &m.coefficients, x_hold.view()).unwrap();
                let ex = conditional_zero_one_excess(margins.view(), &f_hold, 0.8);
                print!("  n={n}: {ex:.5}");
                med[i].push(ex);
            }
            println!();
        }
        for (i, n) in [256, 1024, 4096].iter().enumerate() {
            med[i].sort_by(|a: &f64, b| a.partial_cmp(b).unwrap());
            println!("  median n={n}: {:.5}", med[i][2]);
        }
    }
}
