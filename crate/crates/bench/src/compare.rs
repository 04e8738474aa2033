//! Weighted-vs-plain scheme comparison with bootstrap intervals.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::rate::median;
use crate::runner::CellResult;

const BOOTSTRAP_RESAMPLES: usize = 200;
const BOOTSTRAP_SEED: u64 = 0x0b007;

#[derive(Debug, Clone, Serialize)]
pub struct CellComparison {
    pub n: usize,
    pub s: usize,
    /// Median over seeds of (weighted excess)/(plain excess).
    pub median_ratio: f64,
    /// Bootstrap 90% interval of the median ratio (200 resamples).
    pub lower: f64,
    pub upper: f64,
    pub pairs: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub cells: Vec<CellComparison>,
    /// Seed pairs dropped because the plain excess was not positive.
    pub degenerate_pairs: usize,
    /// Cells skipped because one scheme was missing entirely.
    pub unmatched_cells: usize,
}

/// Pairs plain and weighted rows at matched (n, s) by seed and reports the
/// per-cell median excess-risk ratio with a bootstrap 90% interval.
pub fn compare_schemes(cells: &[CellResult]) -> anyhow::Result<ComparisonReport> {
    // Collect matched (n, s) keys in ascending order.
    let mut keys: Vec<(usize, usize)> = Vec::new();
    for cell in cells {
        let key = (cell.n, cell.s);
        if (cell.scheme == "plain" || cell.scheme == "weighted") && !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.sort_unstable();

    let mut report = ComparisonReport {
        cells: Vec::new(),
        degenerate_pairs: 0,
        unmatched_cells: 0,
    };
    let mut rng = ChaCha20Rng::seed_from_u64(BOOTSTRAP_SEED);

    for (n, s) in keys {
        let mut ratios = Vec::new();
        let plain: Vec<&CellResult> = cells
            .iter()
            .filter(|c| c.n == n && c.s == s && c.scheme == "plain")
            .collect();
        let weighted: Vec<&CellResult> = cells
            .iter()
            .filter(|c| c.n == n && c.s == s && c.scheme == "weighted")
            .collect();
        if plain.is_empty() || weighted.is_empty() {
            report.unmatched_cells += 1;
            eprintln!("warning: cell (n={n}, s={s}) lacks one scheme; skipped");
            continue;
        }
        for p in &plain {
            if let Some(w) = weighted.iter().find(|w| w.seed == p.seed) {
                if p.excess_zero_one > 0.0 {
                    ratios.push(w.excess_zero_one / p.excess_zero_one);
                } else {
                    report.degenerate_pairs += 1;
                }
            }
        }
        if ratios.is_empty() {
            report.unmatched_cells += 1;
            continue;
        }

        let mut sorted = ratios.clone();
        let median_ratio = median(&mut sorted);

        // Bootstrap the median over seed pairs.
        let mut boot_medians = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
        for _ in 0..BOOTSTRAP_RESAMPLES {
            let mut sample: Vec<f64> = (0..ratios.len())
                .map(|_| ratios[rng.gen_range(0..ratios.len())])
                .collect();
            boot_medians.push(median(&mut sample));
        }
        boot_medians.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let lo_idx = ((BOOTSTRAP_RESAMPLES as f64) * 0.05).floor() as usize;
        let hi_idx = (((BOOTSTRAP_RESAMPLES as f64) * 0.95).ceil() as usize)
            .min(BOOTSTRAP_RESAMPLES - 1);
        report.cells.push(CellComparison {
            n,
            s,
            median_ratio,
            lower: boot_medians[lo_idx],
            upper: boot_medians[hi_idx],
            pairs: ratios.len(),
        });
    }
    if report.cells.is_empty() {
        anyhow::bail!("no matched (n, s) cells with both plain and weighted rows");
    }
    Ok(report)
}
