//! `rff-bench`: experiment runner for random Fourier feature classification.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use rff_bench::{compare, io, plan::ExperimentPlan, rate, runner};
use rff_core::kernel::{KernelFamily, KernelSpec};

#[derive(Parser)]
#[command(
    name = "rff-bench",
    about = "Sweeps, learning-rate fits, scheme comparisons, and spectrum reports for random Fourier feature classification",
    version
)]
struct Cli {
    /// Worker threads for parallel cells (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory for generated files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute an experiment plan and write cells CSV + summary JSON.
    Run(RunArgs),
    /// Fit a learning-rate slope from a cells CSV.
    Fit(FitArgs),
    /// Compare weighted vs plain excess risks from a cells CSV.
    Compare(CompareArgs),
    /// Spectrum report of a dataset CSV under a chosen kernel.
    Spectrum(SpectrumArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment plan (JSON).
    #[arg(long)]
    plan: PathBuf,
    /// Override the plan's seed list with this base seed (consecutive seeds,
    /// same trial count).
    #[arg(long)]
    seed: Option<u64>,
    /// Also emit a gnuplot script next to the CSV.
    #[arg(long)]
    gnuplot: bool,
    /// Also export the first seed's reference dataset (features, label, f_h).
    #[arg(long)]
    dump_reference: bool,
}

#[derive(Args)]
struct FitArgs {
    /// Cells CSV produced by `run`.
    #[arg(long)]
    input: PathBuf,
    /// Column to fit against n.
    #[arg(long, default_value = "excess_zero_one")]
    y: String,
    /// Restrict to one scheme (plain | weighted | exact).
    #[arg(long)]
    scheme: Option<String>,
    /// Write the report JSON here as well as to stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Cells CSV produced by `run`.
    #[arg(long)]
    input: PathBuf,
    /// Write the report JSON here as well as to stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SpectrumArgs {
    /// Dataset CSV; all columns except `label`/`f_h` are features.
    #[arg(long)]
    dataset: PathBuf,
    /// Ridge level for the effective dimension.
    #[arg(long)]
    lambda: f64,
    /// Kernel family (gaussian | laplacian | linear-finite-rank).
    #[arg(long, default_value = "gaussian")]
    family: String,
    /// Kernel bandwidth.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Write the report JSON here as well as to stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Export the eigenvalues as CSV (columns index, eigenvalue).
    #[arg(long)]
    eigen_csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            eprintln!("{}", io::error_json(&e.to_string()));
            return ExitCode::from(2);
        }
        Err(e) => {
            // --help / --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", io::error_json(&format!("{e:#}")));
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    if let Some(workers) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .context("configuring worker pool")?;
    }
    std::fs::create_dir_all(&cli.out_dir)
        .with_context(|| format!("creating {}", cli.out_dir.display()))?;
    match cli.command {
        Command::Run(args) => run(&cli.out_dir, args),
        Command::Fit(args) => fit(args),
        Command::Compare(args) => compare_cmd(args),
        Command::Spectrum(args) => spectrum(args),
    }
}

fn run(out_dir: &Path, args: RunArgs) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.plan)
        .with_context(|| format!("reading plan {}", args.plan.display()))?;
    let mut plan: ExperimentPlan = serde_json::from_str(&text).context("parsing plan JSON")?;
    if let Some(base) = args.seed {
        plan.reseed(base);
    }
    plan.validate()?;

    let summary = runner::run_plan(&plan)?;

    let csv_path = out_dir.join(format!("{}_cells.csv", plan.name));
    io::write_cells_csv(&csv_path, &summary.cells)?;
    let summary_path = out_dir.join(format!("{}_summary.json", plan.name));
    io::write_summary_json(&summary_path, &summary)?;
    println!("wrote {}", csv_path.display());
    println!("wrote {}", summary_path.display());

    if args.gnuplot {
        let gp_path = out_dir.join(format!("{}.gp", plan.name));
        io::write_gnuplot(&gp_path, &summary, &format!("{}_cells.csv", plan.name))?;
        println!("wrote {}", gp_path.display());
    }
    if args.dump_reference {
        let seed = plan.seeds[0];
        let data_path = out_dir.join(format!("{}_reference_seed{}.csv", plan.name, seed));
        dump_reference(&plan, seed, &data_path)?;
        println!("wrote {}", data_path.display());
    }
    println!(
        "cells: {}, convergence failures: {}",
        summary.cells.len(),
        summary.convergence_failures
    );
    Ok(())
}

fn dump_reference(plan: &ExperimentPlan, seed: u64, path: &Path) -> anyhow::Result<()> {
    use rff_core::synthdata::{self, NoiseModel};
    let n_max = *plan.n_grid.last().expect("validated");
    let n_ref = n_max + plan.holdout;
    let (spec, x_ref) = synthdata::make_spectrum_regime(
        plan.regime.kind,
        n_ref,
        plan.regime.dim,
        runner::mix(seed, runner::STREAM_REGIME),
    )?;
    let target = synthdata::make_source_problem_on(
        &spec,
        x_ref,
        plan.source.r,
        plan.source.big_r,
        runner::mix(seed, runner::STREAM_TARGET),
    )?;
    let noise = NoiseModel::massart(plan.noise.gamma0)?;
    let indices: Vec<usize> = (0..n_ref).collect();
    let labels = synthdata::draw_labels(&target, &noise, &indices, runner::mix(seed, runner::STREAM_LABELS))?;
    io::write_dataset_csv(path, target.reference_x.view(), &labels, &target.f_vals)
}

fn fit(args: FitArgs) -> anyhow::Result<()> {
    let cells = io::read_cells_csv(&args.input)?;
    let report = rate::fit_rate(&cells, &args.y, args.scheme.as_deref())?;
    let json = serde_json::to_string_pretty(&report)?;
    if let Some(path) = args.output {
        std::fs::write(&path, &json).with_context(|| format!("writing {}", path.display()))?;
    }
    println!("{json}");
    Ok(())
}

fn compare_cmd(args: CompareArgs) -> anyhow::Result<()> {
    let cells = io::read_cells_csv(&args.input)?;
    let report = compare::compare_schemes(&cells)?;
    let json = serde_json::to_string_pretty(&report)?;
    if let Some(path) = args.output {
        std::fs::write(&path, &json).with_context(|| format!("writing {}", path.display()))?;
    }
    println!("{json}");
    Ok(())
}

fn spectrum(args: SpectrumArgs) -> anyhow::Result<()> {
    let (x, _, _) = io::read_dataset_csv(&args.dataset)?;
    let family = match args.family.as_str() {
        "gaussian" => KernelFamily::Gaussian,
        "laplacian" => KernelFamily::Laplacian,
        "linear-finite-rank" => KernelFamily::LinearFiniteRank,
        other => anyhow::bail!("unknown kernel family {other:?}"),
    };
    let spec = KernelSpec::new(family, args.sigma, x.ncols())?;
    let k = spec.gram(x.view())?;
    let report = rff_core::diagnostics::gram_spectrum(k.view())?;
    anyhow::ensure!(args.lambda > 0.0, "lambda must be positive");
    let d_hat: f64 = report
        .eigenvalues
        .iter()
        .map(|&m| m / (m + args.lambda))
        .sum();

    if let Some(path) = &args.eigen_csv {
        io::write_eigenvalue_csv(path, &report.eigenvalues)?;
    }
    let doc = serde_json::json!({
        "family": args.family,
        "sigma": args.sigma,
        "lambda": args.lambda,
        "n": x.nrows(),
        "dim": x.ncols(),
        "d_hat": d_hat,
        "report": report,
    });
    let json = serde_json::to_string_pretty(&doc)?;
    if let Some(path) = args.output {
        std::fs::write(&path, &json).with_context(|| format!("writing {}", path.display()))?;
    }
    println!("{json}");
    Ok(())
}
