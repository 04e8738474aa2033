use std::time::Instant;
use ndarray::Array2;
use rff_core::erm::{self, Loss, TrainOptions};
use rff_core::synthdata;

fn main() {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4096);
    let tol: f64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(1e-5);
    let holdout = 8192usize;
    let n_ref = 4096 + holdout;

    let t = Instant::now();
    let (spec, x_ref) = synthdata::make_spectrum_regime(synthdata::SpectrumRegime::Exponential, n_ref, 1, 42).unwrap();
    println!("regime sample: {:.2?}", t.elapsed());

    let t = Instant::now();
    let target = synthdata::make_source_problem_on(&spec, x_ref, 1.0, 1.0, 43).unwrap();
    println!("source problem (N={n_ref}): {:.2?}", t.elapsed());

    let t = Instant::now();
    let x_train: Array2<f64> = target.reference_x.slice(ndarray::s![..n, ..]).to_owned();
    let k = spec.gram(x_train.view()).unwrap();
    println!("gram n={n}: {:.2?}", t.elapsed());

    let noise = synthdata::NoiseModel::massart(0.8).unwrap();
    let idx: Vec<usize> = (0..n).collect();
    let y = synthdata::draw_labels(&target, &noise, &idx, 44).unwrap();

    let lambda = 0.5 / (n as f64).sqrt();
    let opts = TrainOptions { tol, max_iters: 50_000, norm_constraint: None };
    let t = Instant::now();
    let model = erm::train_kernel(k.view(), &y, Loss::hinge(), lambda, &opts);
    match &model {
        Ok(m) => println!("kernel CA n={n} tol={tol:.0e}: {:.2?} (gap {:.2e})", t.elapsed(), m.certified_gap),
        Err(e) => println!("kernel CA n={n}: {:.2?} FAILED {e}", t.elapsed()),
    }

    let s = ((n as f64).sqrt() * (n as f64).ln()).ceil() as usize;
    let t = Instant::now();
    let map = rff_core::features::RandomFeatureMap::plain(&spec, s, 45).unwrap();
    let phi = map.feature_matrix(x_train.view()).unwrap();
    println!("feature matrix {n}x{s}: {:.2?}", t.elapsed());
    let t = Instant::now();
    let m2 = erm::train_rff(phi.view(), &y, Loss::hinge(), lambda, &opts);
    match &m2 {
        Ok(m) => println!("rff CA: {:.2?} (gap {:.2e})", t.elapsed(), m.certified_gap),
        Err(e) => println!("rff CA: {:.2?} FAILED {e}", t.elapsed()),
    }
    let t = Instant::now();
    let small = phi.t().dot(&phi) / n as f64;
    let eig = rff_core::linalg::sym_eigen(small.view()).unwrap();
    println!("phi'phi eigen s={s}: {:.2?} (top {:.3})", t.elapsed(), eig.values[s-1]);
    if let Ok(m) = model {
        let t = Instant::now();
        let hold: Array2<f64> = target.reference_x.slice(ndarray::s![4096.., ..]).to_owned();
        let km = rff_bench::runner::kernel_margins(&spec, x_train.view(), &m.coefficients, hold.view()).unwrap();
        println!("kernel margins {}x{}: {:.2?} (first {:.3})", n, holdout, t.elapsed(), km[0]);
    }
}
