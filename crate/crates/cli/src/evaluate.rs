use std::fmt::Write as _;
use std::path::PathBuf;

use gbrnmf_core::io::{format_value, read_matrix};
use gbrnmf_core::simgen::{compare_models, MatchMode, RecoveryReport};
use gbrnmf_core::{Model, SimParams};
use serde::Serialize;

use crate::failure::Failure;
use crate::files::{ensure_dir, read_json, write_json, write_text, ModelDir};

#[derive(Clone, Copy, clap::ValueEnum)]
enum Mode {
    /// Frozen factors compare positionally, the rest are matched.
    Constrained,
    /// Every factor is matched.
    Free,
}

#[derive(clap::Args)]
pub struct Args {
    /// Directory written by `fit`.
    #[arg(long)]
    model: PathBuf,
    /// Directory written by `simulate`.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Constrained)]
    mode: Mode,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(serde::Deserialize)]
struct SimManifest {
    params: SimParams,
}

#[derive(Serialize)]
struct Output<'a> {
    schema: u32,
    s_rss_mean: f64,
    #[serde(flatten)]
    report: &'a RecoveryReport,
}

pub fn run(args: Args) -> Result<(), Failure> {
    let model = ModelDir(args.model).load()?;
    let manifest: SimManifest = read_json(&args.truth.join("params.json"))?;
    let truth = Model::with_layout(
        read_matrix(args.truth.join("w_true.csv"), false)?,
        read_matrix(args.truth.join("a_true.csv"), false)?,
        read_matrix(args.truth.join("s_true.csv"), false)?,
        manifest.params.g,
        manifest.params.shared_constrained,
    )?;
    let mode = match args.mode {
        Mode::Constrained => MatchMode::ConstrainedAligned,
        Mode::Free => MatchMode::FreeMatched,
    };
    let report = compare_models(&model, &truth, mode)?;

    ensure_dir(&args.out)?;
    write_json(
        &args.out.join("recovery.json"),
        &Output { schema: 1, s_rss_mean: report.s_rss_mean(), report: &report },
    )?;
    let mut csv = String::from("model_factor,truth_factor,positional,s_rss,score_rss\n");
    for f in &report.factors {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            f.model_factor,
            f.truth_factor,
            f.positional,
            format_value(f.s_rss),
            format_value(f.score_rss)
        );
    }
    write_text(&args.out.join("recovery.csv"), &csv)?;
    println!(
        "S RSS {} (mean {}), score RSS {}",
        format_value(report.s_rss_total),
        format_value(report.s_rss_mean()),
        format_value(report.score_rss_total)
    );
    Ok(())
}
