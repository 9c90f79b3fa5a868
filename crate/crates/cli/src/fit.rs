use std::fmt::Write as _;
use std::path::PathBuf;

use gbrnmf_core::io::{format_value, read_matrix};
use gbrnmf_core::{gbr, nmf_fit, ConstraintSpec, FitConfig, FitReport, NonnegMatrix};

use crate::failure::Failure;
use crate::files::{ensure_dir, write_json, write_text, FitManifest, ModelDir};

#[derive(clap::Args)]
pub struct Args {
    /// Data matrix (CSV).
    #[arg(long)]
    x: PathBuf,
    /// Skip the first line of every input CSV.
    #[arg(long)]
    header: bool,
    /// n×g group block pinned into the leading columns of W.
    #[arg(long)]
    groups: Option<PathBuf>,
    /// k×p basis block pinned into S after the group rows.
    #[arg(long)]
    basis: Option<PathBuf>,
    /// Total number of factors.
    #[arg(long)]
    q: usize,
    #[arg(long, default_value_t = gbrnmf_core::fit::DEFAULT_MAX_ITER)]
    max_iter: usize,
    /// Stop when one iteration lowers the objective by less than this.
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    #[arg(long, requires = "init_high")]
    init_low: Option<f64>,
    #[arg(long, requires = "init_low")]
    init_high: Option<f64>,
    /// Accept group blocks that are not 0/1 one-hot.
    #[arg(long)]
    relaxed: bool,
    /// Plain two-factor NMF instead (A is written as the identity).
    #[arg(long, conflicts_with_all = ["groups", "basis", "relaxed"])]
    baseline: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

pub fn run(args: Args) -> Result<(), Failure> {
    let x = read_matrix(&args.x, args.header)?;
    let mut config = FitConfig::default()
        .with_max_iter(args.max_iter)
        .with_delta(args.delta)
        .with_seed(args.seed)
        .with_restarts(args.restarts);
    if let (Some(lo), Some(hi)) = (args.init_low, args.init_high) {
        config = config.with_init_bounds(lo, hi);
    }
    config.validate()?;
    let dir = ModelDir(args.out.clone());
    ensure_dir(&dir.0)?;

    let (report, g, k, solver) = if args.baseline {
        let (model, report) = nmf_fit(&x, args.q, &config)?;
        dir.write_factors(&model.w, &NonnegMatrix::identity(args.q), &model.h)?;
        (report, 0, 0, "baseline")
    } else {
        let mut spec = ConstraintSpec::new(args.q);
        if let Some(path) = &args.groups {
            spec = spec.with_groups(read_matrix(path, args.header)?);
        }
        if let Some(path) = &args.basis {
            spec = spec.with_basis(read_matrix(path, args.header)?);
        }
        if args.relaxed {
            spec = spec.relaxed();
        }
        let (model, report) = gbr::fit(&x, &spec, &config)?;
        let (g, k) = (spec.g(), spec.k());
        let (w, a, s) = model.into_parts();
        dir.write_factors(&w, &a, &s)?;
        (report, g, k, "gbr")
    };

    write_text(&dir.path("trace.csv"), &trace_csv(&report))?;
    let manifest = FitManifest {
        schema: 1,
        solver: solver.into(),
        termination: format!("{:?}", report.termination),
        iterations: report.iterations_run,
        final_objective: report.final_objective(),
        seed: report.seed,
        restarts: config.restarts,
        q: args.q,
        g,
        k,
    };
    write_json(&dir.path("report.json"), &manifest)?;
    println!(
        "{solver}: {} after {} iterations, objective {}",
        manifest.termination,
        manifest.iterations,
        format_value(manifest.final_objective)
    );
    Ok(())
}

fn trace_csv(report: &FitReport) -> String {
    let mut out = String::from("iteration,D_F\n");
    for (t, d) in report.objective_trace.iter().enumerate() {
        let _ = writeln!(out, "{t},{}", format_value(*d));
    }
    out
}
