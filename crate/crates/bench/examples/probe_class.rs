use rff_core::diagnostics::gram_spectrum;
use rff_core::synthdata::{make_spectrum_regime, SpectrumRegime};
fn main() {
    for seed in [1000u64, 1001, 1002] {
        let (spec, x) = make_spectrum_regime(SpectrumRegime::Exponential, 400, 1, seed).unwrap();
        let k = spec.gram(x.view()).unwrap();
        let rep = gram_spectrum(k.view()).unwrap();
        println!("seed {seed}: {:?} param {:.3} r2 {:.4}", rep.decay_class, rep.decay_param, rep.fit_r2);
        if seed == 1000 {
            for (i, m) in rep.eigenvalues.iter().take(60).enumerate() {
                if i % 5 == 0 { print!(" [{}]{:.2}", i + 1, m.ln()); }
            }
            println!();
        }
    }
}
