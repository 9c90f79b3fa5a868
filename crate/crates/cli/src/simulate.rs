use std::path::PathBuf;

use gbrnmf_core::io::{write_array, write_matrix};
use gbrnmf_core::simgen::simulate;
use gbrnmf_core::SimParams;
use serde::Serialize;

use crate::failure::Failure;
use crate::files::{ensure_dir, write_json, write_text};

#[derive(clap::Args)]
pub struct Args {
    #[arg(long, default_value_t = 400)]
    n: usize,
    #[arg(long, default_value_t = 2000)]
    p: usize,
    /// Number of groups, each with one unique factor.
    #[arg(long, default_value_t = 4)]
    g: usize,
    #[arg(long, default_value_t = 7)]
    q: usize,
    /// Shared factors whose bases are exposed as known.
    #[arg(long, default_value_t = 1)]
    shared_constrained: usize,
    /// Gaussian noise sd (default: 5% of the mean clean value).
    #[arg(long)]
    noise_sd: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Also write groups.csv and basis.csv for use with `fit`.
    #[arg(long)]
    emit_constraints: bool,
}

#[derive(Serialize)]
pub struct Manifest {
    pub schema: u32,
    pub params: SimParams,
    pub noise_sd: f64,
    pub clamped: usize,
}

pub fn run(args: Args) -> Result<(), Failure> {
    let params = SimParams {
        n: args.n,
        p: args.p,
        g: args.g,
        q: args.q,
        shared_constrained: args.shared_constrained,
        noise_sd: args.noise_sd,
        seed: args.seed,
    };
    let truth = simulate(&params)?;
    let out = &args.out;
    ensure_dir(out)?;
    write_matrix(out.join("x.csv"), &truth.x)?;
    write_matrix(out.join("w_true.csv"), &truth.w_true)?;
    write_matrix(out.join("a_true.csv"), &truth.a_true)?;
    write_matrix(out.join("s_true.csv"), &truth.s_true)?;
    let labels: String = truth.group_labels.iter().map(|l| format!("{l}\n")).collect();
    write_text(&out.join("labels.csv"), &labels)?;
    write_json(
        &out.join("params.json"),
        &Manifest { schema: 1, params, noise_sd: truth.noise_sd, clamped: truth.clamped },
    )?;
    if args.emit_constraints {
        let spec = truth.constraint_spec();
        if let Some(g) = &spec.group_block {
            write_matrix(out.join("groups.csv"), g)?;
        }
        if let Some(b) = &spec.basis_block {
            write_array(out.join("basis.csv"), b.view())?;
        }
    }
    println!(
        "simulated {}x{} with q = {}, noise sd {:e}, {} clamped",
        args.n, args.p, args.q, truth.noise_sd, truth.clamped
    );
    Ok(())
}
