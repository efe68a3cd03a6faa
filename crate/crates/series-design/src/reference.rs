//! Published reference values for the configurations this crate is
//! calibrated against, and the `reproduce-paper` pipeline that recomputes
//! them side by side: optimal designs for the exponential and Brownian
//! kernels at n = 4 and n = 7, then Monte-Carlo MISE tables for two models
//! on the optimal and comparative designs.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::basis::{FunctionModel, OrthonormalBasis};
use crate::config::{KernelSpec, COMPARATIVE_N4, COMPARATIVE_N7};
use crate::design::{optimize_design, DesignGrid, DEFAULT_MIN_GAP};
use crate::numerics::{PsoConfig, QuadratureRule};
use crate::simulator::{run_mise, EstimatorKind, MiseRun, SimulationReport, MISE_CSV_HEADER};
use crate::{Error, Result};

/// A published optimal design.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceDesign {
    pub kernel: &'static str,
    pub l: Option<f64>,
    pub n: usize,
    pub points: &'static [f64],
}

/// Published optimal designs (J = 3, cosine basis).
pub const REFERENCE_DESIGNS: &[ReferenceDesign] = &[
    ReferenceDesign { kernel: "exponential", l: Some(1.0), n: 4, points: &[0.0, 0.25, 0.52, 1.0] },
    ReferenceDesign {
        kernel: "exponential",
        l: Some(1.0),
        n: 7,
        points: &[0.0, 0.12, 0.27, 0.45, 0.57, 0.77, 1.0],
    },
    ReferenceDesign { kernel: "exponential", l: Some(5.0), n: 4, points: &[0.0, 0.25, 0.51, 1.0] },
    ReferenceDesign {
        kernel: "exponential",
        l: Some(5.0),
        n: 7,
        points: &[0.0, 0.12, 0.27, 0.45, 0.57, 0.76, 1.0],
    },
    ReferenceDesign { kernel: "brownian", l: None, n: 4, points: &[0.0, 0.25, 0.47, 1.0] },
    ReferenceDesign {
        kernel: "brownian",
        l: None,
        n: 7,
        points: &[0.0, 0.22, 0.28, 0.50, 0.72, 0.78, 1.0],
    },
];

/// A published MISE cell: shrinkage and unbiased estimator values for one
/// (kernel, model, design) combination.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceMise {
    pub kernel: &'static str,
    pub l: Option<f64>,
    pub model: &'static str,
    /// `"optimal-n4"`, `"comparative-n4"`, `"optimal-n7"`, `"comparative-n7"`.
    pub design: &'static str,
    pub shrunk: f64,
    pub blue: f64,
}

/// Published Monte-Carlo MISE tables (S = 1000, J = 3, cosine basis).
pub const REFERENCE_MISE: &[ReferenceMise] = &[
    // Exponential, L = 1.
    ReferenceMise { kernel: "exponential", l: Some(1.0), model: "4t(t-1)", design: "optimal-n4", shrunk: 1.72, blue: 1.89 },
    ReferenceMise { kernel: "exponential", l: Some(1.0), model: "4t(t-1)", design: "comparative-n4", shrunk: 2.06, blue: 2.22 },
    ReferenceMise { kernel: "exponential", l: Some(1.0), model: "4t(t-1)", design: "optimal-n7", shrunk: 1.58, blue: 1.76 },
    ReferenceMise { kernel: "exponential", l: Some(1.0), model: "4t(t-1)", design: "comparative-n7", shrunk: 1.59, blue: 1.77 },
    ReferenceMise { kernel: "exponential", l: Some(1.0), model: "sqrt(t(1-t))", design: "optimal-n4", shrunk: 1.67, blue: 1.89 },
    ReferenceMise { kernel: "exponential", l: Some(1.0), model: "sqrt(t(1-t))", design: "comparative-n4", shrunk: 2.04, blue: 2.21 },
    ReferenceMise { kernel: "exponential", l: Some(1.0), model: "sqrt(t(1-t))", design: "optimal-n7", shrunk: 1.54, blue: 1.76 },
    ReferenceMise { kernel: "exponential", l: Some(1.0), model: "sqrt(t(1-t))", design: "comparative-n7", shrunk: 1.56, blue: 1.79 },
    // Exponential, L = 5.
    ReferenceMise { kernel: "exponential", l: Some(5.0), model: "4t(t-1)", design: "optimal-n4", shrunk: 0.65, blue: 0.77 },
    ReferenceMise { kernel: "exponential", l: Some(5.0), model: "4t(t-1)", design: "comparative-n4", shrunk: 2.13, blue: 2.30 },
    ReferenceMise { kernel: "exponential", l: Some(5.0), model: "4t(t-1)", design: "optimal-n7", shrunk: 0.47, blue: 0.58 },
    ReferenceMise { kernel: "exponential", l: Some(5.0), model: "4t(t-1)", design: "comparative-n7", shrunk: 0.51, blue: 0.62 },
    ReferenceMise { kernel: "exponential", l: Some(5.0), model: "sqrt(t(1-t))", design: "optimal-n4", shrunk: 0.64, blue: 0.81 },
    ReferenceMise { kernel: "exponential", l: Some(5.0), model: "sqrt(t(1-t))", design: "comparative-n4", shrunk: 2.09, blue: 2.30 },
    ReferenceMise { kernel: "exponential", l: Some(5.0), model: "sqrt(t(1-t))", design: "optimal-n7", shrunk: 0.43, blue: 0.59 },
    ReferenceMise { kernel: "exponential", l: Some(5.0), model: "sqrt(t(1-t))", design: "comparative-n7", shrunk: 0.43, blue: 0.59 },
    // Brownian.
    ReferenceMise { kernel: "brownian", l: None, model: "4t(t-1)", design: "optimal-n4", shrunk: 0.16, blue: 0.15 },
    ReferenceMise { kernel: "brownian", l: None, model: "4t(t-1)", design: "comparative-n4", shrunk: 0.41, blue: 0.43 },
    ReferenceMise { kernel: "brownian", l: None, model: "4t(t-1)", design: "optimal-n7", shrunk: 0.13, blue: 0.12 },
    ReferenceMise { kernel: "brownian", l: None, model: "4t(t-1)", design: "comparative-n7", shrunk: 0.14, blue: 0.12 },
    ReferenceMise { kernel: "brownian", l: None, model: "sqrt(t(1-t))", design: "optimal-n4", shrunk: 0.13, blue: 0.15 },
    ReferenceMise { kernel: "brownian", l: None, model: "sqrt(t(1-t))", design: "comparative-n4", shrunk: 0.45, blue: 0.48 },
    ReferenceMise { kernel: "brownian", l: None, model: "sqrt(t(1-t))", design: "optimal-n7", shrunk: 0.11, blue: 0.12 },
    ReferenceMise { kernel: "brownian", l: None, model: "sqrt(t(1-t))", design: "comparative-n7", shrunk: 0.11, blue: 0.13 },
];

/// Kernel specs the pipeline sweeps, in a fixed order.
fn pipeline_kernels() -> Vec<KernelSpec> {
    vec![
        KernelSpec::Exponential { l: 1.0 },
        KernelSpec::Exponential { l: 5.0 },
        KernelSpec::Brownian,
    ]
}

fn kernel_label(spec: &KernelSpec) -> (&'static str, Option<f64>) {
    match spec {
        KernelSpec::Exponential { l } => ("exponential", Some(*l)),
        KernelSpec::Brownian => ("brownian", None),
    }
}

/// Outcome of one design optimization in the pipeline.
#[derive(Debug, Clone, Serialize)]
pub struct DesignOutcome {
    pub kernel: String,
    pub l: Option<f64>,
    pub n: usize,
    pub seed: u64,
    pub criterion: f64,
    pub points: Vec<f64>,
    pub reference_points: Vec<f64>,
}

/// Outcome of one Monte-Carlo run in the pipeline.
#[derive(Debug, Clone, Serialize)]
pub struct MiseOutcome {
    pub report: SimulationReport,
    pub reference_shrunk: f64,
    pub reference_blue: f64,
}

/// Everything the pipeline produced.
#[derive(Debug, Clone, Serialize)]
pub struct ReproduceReport {
    pub seed: u64,
    pub designs: Vec<DesignOutcome>,
    pub mise: Vec<MiseOutcome>,
    pub files: Vec<PathBuf>,
}

/// The planned work, one line per run, without computing anything.
pub fn plan() -> Vec<String> {
    let mut lines = Vec::new();
    for spec in pipeline_kernels() {
        let (name, l) = kernel_label(&spec);
        for n in [4usize, 7] {
            lines.push(format!(
                "optimize  {name}{} n={n} J=3 cosine (swarm 40x300)",
                l.map(|l| format!(" L={l}")).unwrap_or_default()
            ));
        }
    }
    for spec in pipeline_kernels() {
        let (name, l) = kernel_label(&spec);
        for n in [4usize, 7] {
            for design in ["optimal", "comparative"] {
                for model in ["4t(t-1)", "sqrt(t(1-t))"] {
                    lines.push(format!(
                        "simulate  {name}{} {design}-n{n} model={model} S=1000 \
                         estimators=shrunk,blue",
                        l.map(|l| format!(" L={l}")).unwrap_or_default()
                    ));
                }
            }
        }
    }
    lines
}

/// Run the full pipeline and write `designs.csv`, `mise.csv`, and
/// `manifest.json` into `out_dir`. CSV outputs are byte-stable for a fixed
/// seed; the manifest carries wall-time and is not.
pub fn reproduce(out_dir: &Path, seed: u64, parallel: bool) -> Result<ReproduceReport> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::Config(format!("{}: {e}", out_dir.display())))?;
    let quad = QuadratureRule::default();
    let basis = OrthonormalBasis::cosine(3)?;
    let models = [FunctionModel::parabola(), FunctionModel::sqrt_product()];

    // Stage 1: optimal designs.
    let mut designs = Vec::new();
    let mut optimal_grids: Vec<(KernelSpec, usize, DesignGrid)> = Vec::new();
    let mut run_idx = 0u64;
    for spec in pipeline_kernels() {
        let kernel = spec.build()?;
        let (name, l) = kernel_label(&spec);
        for n in [4usize, 7] {
            let pso = PsoConfig::default().with_seed(seed.wrapping_add(run_idx));
            let (grid, criterion) =
                optimize_design(&kernel, &basis, n, DEFAULT_MIN_GAP, &pso, &quad, parallel)?;
            let reference = REFERENCE_DESIGNS
                .iter()
                .find(|r| r.kernel == name && r.l == l && r.n == n)
                .map(|r| r.points.to_vec())
                .unwrap_or_default();
            designs.push(DesignOutcome {
                kernel: name.into(),
                l,
                n,
                seed: seed.wrapping_add(run_idx),
                criterion,
                points: grid.points().to_vec(),
                reference_points: reference,
            });
            optimal_grids.push((spec.clone(), n, grid));
            run_idx += 1;
        }
    }

    // Stage 2: Monte-Carlo MISE on optimal and comparative designs.
    let mut mise = Vec::new();
    let mut sim_idx = 0u64;
    for spec in pipeline_kernels() {
        let kernel = spec.build()?;
        let (name, l) = kernel_label(&spec);
        for n in [4usize, 7] {
            let optimal = optimal_grids
                .iter()
                .find(|(s, m, _)| *s == spec && *m == n)
                .map(|(_, _, g)| g.clone())
                .expect("stage 1 produced every optimal design");
            let comparative = if n == 4 {
                DesignGrid::new(COMPARATIVE_N4.to_vec(), DEFAULT_MIN_GAP)?
            } else {
                DesignGrid::new(COMPARATIVE_N7.to_vec(), DEFAULT_MIN_GAP)?
            };
            for (design_name_base, grid) in
                [("optimal", optimal.clone()), ("comparative", comparative)]
            {
                let design_name = format!("{design_name_base}-n{n}");
                for model in &models {
                    let report = run_mise(&MiseRun {
                        kernel: &kernel,
                        basis: &basis,
                        model,
                        design: &grid,
                        design_name: design_name.clone(),
                        estimators: vec![EstimatorKind::Shrunk, EstimatorKind::Blue],
                        s: 1000,
                        seed: seed.wrapping_add(1000 + sim_idx),
                        quad: &quad,
                        parallel,
                    })?;
                    let reference = REFERENCE_MISE
                        .iter()
                        .find(|r| {
                            r.kernel == name
                                && r.l == l
                                && r.model == model.name
                                && r.design == design_name
                        })
                        .expect("reference table covers every pipeline run");
                    mise.push(MiseOutcome {
                        report,
                        reference_shrunk: reference.shrunk,
                        reference_blue: reference.blue,
                    });
                    sim_idx += 1;
                }
            }
        }
    }

    // Emit CSV and manifest files.
    let designs_csv = out_dir.join("designs.csv");
    let mut lines = vec![
        "kernel,L,J,n,design_name,seed,criterion,points,reference_points".to_string(),
    ];
    for d in &designs {
        lines.push(format!(
            "{},{},3,{},optimal-n{},{},{},{},{}",
            d.kernel,
            d.l.map(|l| format!("{l}")).unwrap_or_default(),
            d.n,
            d.n,
            d.seed,
            d.criterion,
            join_points(&d.points),
            join_points(&d.reference_points),
        ));
    }
    write_lines(&designs_csv, &lines)?;

    let mise_csv = out_dir.join("mise.csv");
    let mut lines = vec![format!("{MISE_CSV_HEADER},reference_mise")];
    for m in &mise {
        for (row, reference) in m
            .report
            .csv_rows()
            .into_iter()
            .zip([m.reference_shrunk, m.reference_blue])
        {
            lines.push(format!("{row},{reference}"));
        }
    }
    write_lines(&mise_csv, &lines)?;

    let manifest = out_dir.join("manifest.json");
    let report = ReproduceReport {
        seed,
        designs,
        mise,
        files: vec![designs_csv, mise_csv, manifest.clone()],
    };
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Numerical(format!("manifest serialization failed: {e}")))?;
    std::fs::write(&manifest, json)
        .map_err(|e| Error::Config(format!("{}: {e}", manifest.display())))?;
    Ok(report)
}

fn join_points(points: &[f64]) -> String {
    points.iter().map(|p| format!("{p}")).collect::<Vec<_>>().join(";")
}

fn write_lines(path: &Path, lines: &[String]) -> Result<()> {
    let mut text = lines.join("\n");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}
