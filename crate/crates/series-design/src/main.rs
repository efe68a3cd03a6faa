//! Command-line interface: optimal sampling designs, Monte-Carlo MISE
//! studies, series estimation from observed data, and the continuous-time
//! benchmark quantities, plus a one-shot pipeline recomputing the published
//! reference tables.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use series_design::config::{load_config, RunConfig};
use series_design::design::{moment_matrices, optimal_weights, DesignGrid};
use series_design::estimator::{estimate, Sample};
use series_design::oracle::{oracle_measure, verify_optimality, OracleSummary};
use series_design::simulator::{run_mise, MiseRun, MISE_CSV_HEADER};
use series_design::{reference, Error, Result};

#[derive(Parser)]
#[command(
    name = "series-design",
    version,
    about = "Optimal sampling designs and shrinkage series estimators \
             for regression with Markovian correlated errors"
)]
struct Cli {
    /// Configuration file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for JSON/CSV results.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed override for all randomized work.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (1 forces the sequential path).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print the planned work and exit without computing.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for the design minimizing the variance criterion.
    Optimize,
    /// Monte-Carlo MISE study for the configured estimators.
    Simulate,
    /// Estimate series coefficients from observed data.
    Estimate {
        /// CSV file with header `t,y`.
        #[arg(long)]
        data: PathBuf,
    },
    /// Continuous-observation benchmark: the best-possible design measure
    /// and its mean integrated squared error.
    Oracle,
    /// Recompute the published reference designs and MISE tables.
    ReproducePaper,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let parallel = configure_threads(cli.threads)?;
    match &cli.command {
        Command::Optimize => cmd_optimize(cli, parallel),
        Command::Simulate => cmd_simulate(cli, parallel),
        Command::Estimate { data } => cmd_estimate(cli, data),
        Command::Oracle => cmd_oracle(cli),
        Command::ReproducePaper => cmd_reproduce(cli, parallel),
    }
}

/// Install the global thread pool when requested; returns whether the
/// data-parallel path should be used.
fn configure_threads(threads: Option<usize>) -> Result<bool> {
    match threads {
        Some(0) => Err(Error::Config("--threads must be at least 1".into())),
        Some(1) => Ok(false),
        Some(k) => {
            #[cfg(feature = "parallel")]
            rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build_global()
                .map_err(|e| Error::Config(format!("--threads {k}: {e}")))?;
            #[cfg(not(feature = "parallel"))]
            let _ = k;
            Ok(series_design::exec::parallel_available())
        }
        None => Ok(series_design::exec::parallel_available()),
    }
}

fn require_config(cli: &Cli) -> Result<RunConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("this command needs --config <path>".into()))?;
    load_config(path)
}

fn ensure_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("{}: {e}", dir.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Numerical(format!("serialization failed: {e}")))?;
    std::fs::write(path, json).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct OptimizeOutput {
    config: RunConfig,
    seed: u64,
    design_name: String,
    points: Vec<f64>,
    criterion: f64,
    weights: Vec<Vec<f64>>,
}

fn cmd_optimize(cli: &Cli, parallel: bool) -> Result<()> {
    let cfg = require_config(cli)?;
    let kernel = cfg.kernel.build()?;
    let basis = cfg.basis.build()?;
    let seed = cfg.effective_seed(cli.seed);
    let n = cfg
        .n
        .ok_or_else(|| Error::Config("optimize needs the \"n\" entry".into()))?;
    if cli.dry_run {
        let pso = cfg.pso(seed);
        println!(
            "would optimize an n={n} design for kernel \"{}\" with J={} basis functions \
             (swarm {}x{}, seed {seed})",
            kernel.name,
            basis.j(),
            pso.swarm_size,
            pso.iterations
        );
        return Ok(());
    }
    let quad = cfg.quadrature()?;
    let min_gap = cfg.min_gap.unwrap_or(series_design::design::DEFAULT_MIN_GAP);
    let (design, criterion) = series_design::design::optimize_design(
        &kernel,
        &basis,
        n,
        min_gap,
        &cfg.pso(seed),
        &quad,
        parallel,
    )?;
    let matrices = moment_matrices(&kernel, &basis, &design, &quad)?;
    let weights = optimal_weights(&kernel, &matrices, &design)?;
    ensure_out(&cli.out)?;
    let out = OptimizeOutput {
        config: cfg,
        seed,
        design_name: format!("optimal-n{n}"),
        points: design.points().to_vec(),
        criterion,
        weights: weights.gammas,
    };
    write_json(&cli.out.join("optimize.json"), &out)?;
    let mut csv = String::from("t\n");
    for p in design.points() {
        csv.push_str(&format!("{p}\n"));
    }
    write_text(&cli.out.join("design.csv"), &csv)?;
    println!(
        "optimal n={n} design: [{}]  criterion {criterion}",
        design
            .points()
            .iter()
            .map(|p| format!("{p:.6}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    Ok(())
}

#[derive(Serialize)]
struct SimulateOutput {
    config: RunConfig,
    seed: u64,
    report: series_design::simulator::SimulationReport,
}

fn cmd_simulate(cli: &Cli, parallel: bool) -> Result<()> {
    let cfg = require_config(cli)?;
    let kernel = cfg.kernel.build()?;
    let basis = cfg.basis.build()?;
    let model = cfg.model()?;
    let seed = cfg.effective_seed(cli.seed);
    let s = cfg
        .s
        .ok_or_else(|| Error::Config("simulate needs the \"S\" entry".into()))?;
    let estimators = cfg.estimators()?;
    if cli.dry_run {
        println!(
            "would simulate S={s} replicates of model \"{}\" under kernel \"{}\" \
             (J={}, estimators {}, seed {seed})",
            model.name,
            kernel.name,
            basis.j(),
            estimators
                .iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        return Ok(());
    }
    let quad = cfg.quadrature()?;
    let (design, design_name) = cfg.resolve_design(&kernel, &basis, seed, &quad, parallel)?;
    let report = run_mise(&MiseRun {
        kernel: &kernel,
        basis: &basis,
        model: &model,
        design: &design,
        design_name,
        estimators,
        s,
        seed,
        quad: &quad,
        parallel,
    })?;
    ensure_out(&cli.out)?;
    let mut csv = format!("{MISE_CSV_HEADER}\n");
    for row in report.csv_rows() {
        csv.push_str(&row);
        csv.push('\n');
    }
    write_text(&cli.out.join("mise.csv"), &csv)?;
    for r in &report.results {
        println!(
            "{} on {}: MISE {} (stderr {})",
            r.estimator, report.design_name, r.mise, r.stderr
        );
    }
    let out = SimulateOutput { config: cfg, seed, report };
    write_json(&cli.out.join("simulate.json"), &out)?;
    Ok(())
}

#[derive(Serialize)]
struct EstimateOutput {
    config: RunConfig,
    seed: u64,
    data_points: usize,
    result: series_design::estimator::EstimateResult,
}

fn cmd_estimate(cli: &Cli, data: &Path) -> Result<()> {
    let cfg = require_config(cli)?;
    let kernel = cfg.kernel.build()?;
    let basis = cfg.basis.build()?;
    let seed = cfg.effective_seed(cli.seed);
    if cli.dry_run {
        println!(
            "would estimate J={} coefficients under kernel \"{}\" from {}",
            basis.j(),
            kernel.name,
            data.display()
        );
        return Ok(());
    }
    let (ts, ys) = read_data_csv(data)?;
    let min_gap = cfg.min_gap.unwrap_or(series_design::design::DEFAULT_MIN_GAP);
    let design = DesignGrid::new(ts, min_gap)
        .map_err(|e| Error::Config(format!("{}: {e}", data.display())))?;
    let sample = Sample::new(design, ys)?;
    let quad = cfg.quadrature()?;
    let result = estimate(&sample, &kernel, &basis, &quad)?;
    println!(
        "theta (shrunk):   [{}]",
        result
            .theta_shrunk
            .iter()
            .map(|x| format!("{x:.6}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    println!(
        "theta (unbiased): [{}]",
        result
            .theta_blue
            .iter()
            .map(|x| format!("{x:.6}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    println!("shrink factor {} ({} curvature {})", result.shrink_factor, result.case, result.c_or_m);
    ensure_out(&cli.out)?;
    let out = EstimateOutput {
        config: cfg,
        seed,
        data_points: sample.observations.len(),
        result,
    };
    write_json(&cli.out.join("estimate.json"), &out)
}

/// Read a two-column observation file with header `t,y`.
fn read_data_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    {
        let headers = reader
            .headers()
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let found: Vec<&str> = headers.iter().collect();
        if found != ["t", "y"] {
            return Err(Error::Config(format!(
                "{}: expected header \"t,y\", found \"{}\"",
                path.display(),
                found.join(",")
            )));
        }
    }
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if record.len() != 2 {
            return Err(Error::Config(format!(
                "{}: row {} has {} fields, expected 2",
                path.display(),
                i + 2,
                record.len()
            )));
        }
        let parse = |field: &str, name: &str| -> Result<f64> {
            field.parse::<f64>().map_err(|_| {
                Error::Config(format!(
                    "{}: row {}: {} is not a number: \"{field}\"",
                    path.display(),
                    i + 2,
                    name
                ))
            })
        };
        ts.push(parse(&record[0], "t")?);
        ys.push(parse(&record[1], "y")?);
    }
    Ok((ts, ys))
}

#[derive(Serialize)]
struct OracleOutput {
    config: RunConfig,
    summary: OracleSummary,
}

fn cmd_oracle(cli: &Cli) -> Result<()> {
    let cfg = require_config(cli)?;
    let kernel = cfg.kernel.build()?;
    let model = cfg.model()?;
    let theta_j = cfg.theta_j.unwrap_or(1.0);
    if cli.dry_run {
        println!(
            "would compute the continuous-observation benchmark for model \"{}\" \
             under kernel \"{}\"",
            model.name, kernel.name
        );
        return Ok(());
    }
    let quad = cfg.quadrature()?;
    let measure = oracle_measure(&kernel, &model, theta_j, &quad)?;
    let mise = series_design::oracle::oracle_mise(&kernel, &model, &quad)?;
    let residual = if measure.case == series_design::kernel::CaseTag::C {
        0.0
    } else {
        verify_optimality(&measure, &kernel, &model, 101, &quad)?
    };
    let density_grid: Vec<(f64, f64)> = (0..11)
        .map(|i| {
            let t = i as f64 / 10.0;
            (t, measure.density(t))
        })
        .collect();
    let summary = OracleSummary {
        case: measure.case.to_string(),
        c: measure.c,
        p0: measure.p0,
        p1: measure.p1,
        theta_j: measure.theta_j,
        mise,
        density_grid,
        optimality_residual: residual,
    };
    println!(
        "case {}: c {}  atom at 0 {}  atom at 1 {}  best MISE {}  optimality residual {:.3e}",
        summary.case, summary.c, summary.p0, summary.p1, summary.mise, summary.optimality_residual
    );
    ensure_out(&cli.out)?;
    let out = OracleOutput { config: cfg, summary };
    write_json(&cli.out.join("oracle.json"), &out)
}

fn cmd_reproduce(cli: &Cli, parallel: bool) -> Result<()> {
    let seed = cli.seed.unwrap_or(0);
    if cli.dry_run {
        for line in reference::plan() {
            println!("{line}");
        }
        return Ok(());
    }
    let report = reference::reproduce(&cli.out, seed, parallel)?;
    for d in &report.designs {
        println!(
            "design {}{} n={}: [{}]  criterion {:.4}",
            d.kernel,
            d.l.map(|l| format!(" L={l}")).unwrap_or_default(),
            d.n,
            d.points.iter().map(|p| format!("{p:.4}")).collect::<Vec<_>>().join(", "),
            d.criterion
        );
    }
    for m in &report.mise {
        let r = &m.report;
        for (res, reference) in
            r.results.iter().zip([m.reference_shrunk, m.reference_blue])
        {
            println!(
                "{} {} {} {}: mise {:.4} (published {reference})",
                r.kernel, r.model, r.design_name, res.estimator, res.mise
            );
        }
    }
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
