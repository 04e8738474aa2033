//! Learning-rate fits: log-log regression of median excess risk against n.

use serde::Serialize;

use crate::runner::CellResult;

#[derive(Debug, Clone, Serialize)]
pub struct RatePoint {
    pub n: usize,
    pub median: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    /// Slope of ln(median y) on ln(n): the fitted learning-rate exponent.
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: Vec<RatePoint>,
    /// Grid points dropped because their median was not positive.
    pub excluded: Vec<usize>,
    pub y_column: String,
    pub scheme: Option<String>,
}

/// Selects a numeric column of a cell by CSV column name.
pub fn y_value(cell: &CellResult, column: &str) -> Option<f64> {
    match column {
        "excess_zero_one" => Some(cell.excess_zero_one),
        "excess_surrogate" => Some(cell.excess_surrogate),
        "kernel_baseline_excess" => Some(cell.kernel_baseline_excess),
        "r_star" => Some(cell.r_star),
        "d_hat" => Some(cell.d_hat),
        _ => None,
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}

/// Ordinary least squares of y on x, returning (slope, intercept, r²).
fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    (slope, my - slope * mx, r2)
}

/// Fits ln(median y) ~ ln(n) over the cells, optionally restricted to one
/// scheme. Grid points with nonpositive medians are excluded and reported;
/// at least three usable points are required.
pub fn fit_rate(
    cells: &[CellResult],
    y_column: &str,
    scheme: Option<&str>,
) -> anyhow::Result<FitReport> {
    let mut by_n: Vec<(usize, Vec<f64>)> = Vec::new();
    for cell in cells {
        if let Some(want) = scheme {
            if cell.scheme != want {
                continue;
            }
        }
        let y = y_value(cell, y_column)
            .ok_or_else(|| anyhow::anyhow!("unknown y column {y_column:?}"))?;
        match by_n.iter_mut().find(|(n, _)| *n == cell.n) {
            Some((_, values)) => values.push(y),
            None => by_n.push((cell.n, vec![y])),
        }
    }
    by_n.sort_by_key(|(n, _)| *n);

    let mut points = Vec::new();
    let mut excluded = Vec::new();
    for (n, mut values) in by_n {
        let med = median(&mut values);
        if med > 0.0 {
            points.push(RatePoint { n, median: med });
        } else {
            excluded.push(n);
        }
    }
    if points.len() < 3 {
        anyhow::bail!(
            "need at least 3 grid points with positive medians, have {} (excluded: {excluded:?})",
            points.len()
        );
    }
    let x: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.median.ln()).collect();
    let (slope, intercept, r2) = fit_line(&x, &y);
    Ok(FitReport {
        slope,
        intercept,
        r2,
        points,
        excluded,
        y_column: y_column.to_string(),
        scheme: scheme.map(|s| s.to_string()),
    })
}
