//! File formats: results CSV, summary JSON, dataset/eigenvalue CSV exports,
//! and gnuplot script emission.

use std::fs;
use std::path::Path;

use anyhow::Context;
use ndarray::ArrayView2;
use serde::Serialize;
use serde_json::json;

use crate::rate::median;
use crate::runner::{CellResult, RunSummary};

/// Writes the cells table; columns are the `CellResult` fields in order.
pub fn write_cells_csv(path: &Path, cells: &[CellResult]) -> anyhow::Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    for cell in cells {
        writer.serialize(cell)?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a cells table written by [`write_cells_csv`].
pub fn read_cells_csv(path: &Path) -> anyhow::Result<Vec<CellResult>> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut cells = Vec::new();
    for row in reader.deserialize() {
        cells.push(row?);
    }
    Ok(cells)
}

/// Per-(n, scheme) medians of the numeric columns.
#[derive(Debug, Serialize)]
pub struct CellMedians {
    pub n: usize,
    pub scheme: String,
    pub trials: usize,
    pub s: usize,
    pub lambda: f64,
    pub excess_zero_one: f64,
    pub excess_surrogate: f64,
    pub kernel_baseline_excess: f64,
    pub r_star: f64,
    pub d_hat: f64,
}

pub fn cell_medians(cells: &[CellResult]) -> Vec<CellMedians> {
    let mut keys: Vec<(usize, String)> = Vec::new();
    for cell in cells {
        let key = (cell.n, cell.scheme.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.sort();
    keys.iter()
        .map(|(n, scheme)| {
            let group: Vec<&CellResult> = cells
                .iter()
                .filter(|c| c.n == *n && &c.scheme == scheme)
                .collect();
            let med = |f: fn(&CellResult) -> f64| {
                let mut v: Vec<f64> = group.iter().map(|c| f(c)).collect();
                median(&mut v)
            };
            CellMedians {
                n: *n,
                scheme: scheme.clone(),
                trials: group.len(),
                s: group[0].s,
                lambda: group[0].lambda,
                excess_zero_one: med(|c| c.excess_zero_one),
                excess_surrogate: med(|c| c.excess_surrogate),
                kernel_baseline_excess: med(|c| c.kernel_baseline_excess),
                r_star: med(|c| c.r_star),
                d_hat: med(|c| c.d_hat),
            }
        })
        .collect()
}

/// Writes the run summary JSON: plan echo, bookkeeping, per-cell medians.
pub fn write_summary_json(path: &Path, summary: &RunSummary) -> anyhow::Result<()> {
    let doc = json!({
        "plan": summary.plan,
        "cells_total": summary.cells.len(),
        "convergence_failures": summary.convergence_failures,
        "medians": cell_medians(&summary.cells),
    });
    fs::write(path, serde_json::to_string_pretty(&doc)?)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Dataset export: columns x0..x{d−1}, label, f_h.
pub fn write_dataset_csv(
    path: &Path,
    x: ArrayView2<f64>,
    labels: &[f64],
    f_vals: &[f64],
) -> anyhow::Result<()> {
    anyhow::ensure!(
        x.nrows() == labels.len() && x.nrows() == f_vals.len(),
        "dataset export length mismatch"
    );
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    let mut header: Vec<String> = (0..x.ncols()).map(|j| format!("x{j}")).collect();
    header.push("label".into());
    header.push("f_h".into());
    writer.write_record(&header)?;
    for i in 0..x.nrows() {
        let mut record: Vec<String> = x.row(i).iter().map(|v| v.to_string()).collect();
        record.push(labels[i].to_string());
        record.push(f_vals[i].to_string());
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a dataset CSV: every column except `label` and `f_h` is a feature.
/// Returns (X, labels, f_h) with the latter two empty when absent.
pub fn read_dataset_csv(path: &Path) -> anyhow::Result<(ndarray::Array2<f64>, Vec<f64>, Vec<f64>)> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let feature_cols: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| *h != "label" && *h != "f_h")
        .map(|(i, _)| i)
        .collect();
    let label_col = headers.iter().position(|h| h == "label");
    let f_col = headers.iter().position(|h| h == "f_h");
    anyhow::ensure!(!feature_cols.is_empty(), "dataset has no feature columns");

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut f_vals = Vec::new();
    for record in reader.records() {
        let record = record?;
        let mut row = Vec::with_capacity(feature_cols.len());
        for &c in &feature_cols {
            row.push(record[c].parse::<f64>()?);
        }
        rows.push(row);
        if let Some(c) = label_col {
            labels.push(record[c].parse::<f64>()?);
        }
        if let Some(c) = f_col {
            f_vals.push(record[c].parse::<f64>()?);
        }
    }
    anyhow::ensure!(!rows.is_empty(), "dataset is empty");
    let d = feature_cols.len();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let n = flat.len() / d;
    Ok((
        ndarray::Array2::from_shape_vec((n, d), flat)?,
        labels,
        f_vals,
    ))
}

/// Eigenvalue export: columns index, eigenvalue.
pub fn write_eigenvalue_csv(path: &Path, eigenvalues: &[f64]) -> anyhow::Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    writer.write_record(["index", "eigenvalue"])?;
    for (i, v) in eigenvalues.iter().enumerate() {
        writer.write_record([(i + 1).to_string(), v.to_string()])?;
    }
    writer.flush()?;
    Ok(())
}

/// Emits a gnuplot script plotting median excess vs n per scheme from the
/// summary medians (log-log).
pub fn write_gnuplot(path: &Path, summary: &RunSummary, csv_name: &str) -> anyhow::Result<()> {
    let medians = cell_medians(&summary.cells);
    let mut schemes: Vec<String> = Vec::new();
    for m in &medians {
        if !schemes.contains(&m.scheme) {
            schemes.push(m.scheme.clone());
        }
    }
    let mut script = String::new();
    script.push_str("# gnuplot script generated by rff-bench\n");
    script.push_str(&format!("# data: {csv_name}\n"));
    script.push_str("set logscale xy\nset xlabel 'n'\nset ylabel 'median excess zero-one risk'\nset key top right\n");
    script.push_str(&format!("set title '{}'\n", summary.plan.name));
    let mut blocks = String::new();
    let mut plots = Vec::new();
    for (i, scheme) in schemes.iter().enumerate() {
        blocks.push_str(&format!("$data{i} << EOD\n"));
        for m in medians.iter().filter(|m| &m.scheme == scheme) {
            blocks.push_str(&format!("{} {}\n", m.n, m.excess_zero_one));
        }
        blocks.push_str("EOD\n");
        plots.push(format!("$data{i} using 1:2 with linespoints title '{scheme}'"));
    }
    script.push_str(&blocks);
    script.push_str(&format!("plot {}\n", plots.join(", \\\n     ")));
    fs::write(path, script).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Machine-readable error document printed on failure.
pub fn error_json(message: &str) -> String {
    serde_json::to_string(&json!({ "error": { "message": message } }))
        .unwrap_or_else(|_| format!("{{\"error\":{{\"message\":\"{message}\"}}}}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    fn cell(n: usize, scheme: &str, seed: u64) -> CellResult {
        CellResult {
            n,
            s: 3,
            lambda: 0.25,
            scheme: scheme.into(),
            seed,
            excess_zero_one: 0.125 + seed as f64,
            excess_surrogate: 0.5,
            kernel_baseline_excess: 0.0625,
            wall_time: 1.5,
            r_star: 0.2,
            d_hat: 4.5,
        }
    }

    #[test]
    fn cells_csv_roundtrip_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cells.csv");
        let cells = vec![cell(32, "plain", 1), cell(32, "plain", 2)];
        write_cells_csv(&path, &cells).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(
            header,
            "n,s,lambda,scheme,seed,excess_zero_one,excess_surrogate,kernel_baseline_excess,wall_time,r_star,d_hat"
        );
        let back = read_cells_csv(&path).unwrap();
        assert_eq!(back, cells);
    }

    #[test]
    fn dataset_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let x = arr2(&[[0.5, -1.0], [0.25, 2.0]]);
        write_dataset_csv(&path, x.view(), &[1.0, -1.0], &[0.3, -0.7]).unwrap();
        let (bx, labels, f) = read_dataset_csv(&path).unwrap();
        assert_eq!(bx, x);
        assert_eq!(labels, vec![1.0, -1.0]);
        assert_eq!(f, vec![0.3, -0.7]);
    }

    #[test]
    fn medians_group_by_cell() {
        let cells = vec![cell(32, "plain", 0), cell(32, "plain", 1), cell(64, "exact", 0)];
        let medians = cell_medians(&cells);
        assert_eq!(medians.len(), 2);
        assert_eq!(medians[0].n, 32);
        assert_eq!(medians[0].trials, 2);
        // Median of 0.125 and 1.125.
        assert!((medians[0].excess_zero_one - 0.625).abs() < 1e-12);
    }

    #[test]
    fn eigenvalue_csv_schema() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("eig.csv");
        write_eigenvalue_csv(&path, &[1.0, 0.5]).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "index,eigenvalue\n1,1\n2,0.5\n");
    }
}
