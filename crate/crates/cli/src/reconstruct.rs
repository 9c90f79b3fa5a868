use std::fmt::Write as _;
use std::path::PathBuf;

use gbrnmf_core::io::{format_value, read_matrix};

use crate::failure::Failure;
use crate::files::{ensure_dir, write_text, ModelDir};

#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    x: PathBuf,
    #[arg(long)]
    header: bool,
    /// Directory written by `fit`.
    #[arg(long)]
    model: PathBuf,
    /// Emit only this (zero-based) row.
    #[arg(long)]
    row: Option<usize>,
    /// Prefix each recon.csv line with its row index.
    #[arg(long)]
    index: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

pub fn run(args: Args) -> Result<(), Failure> {
    let x = read_matrix(&args.x, args.header)?;
    let model = ModelDir(args.model).load()?;
    if x.shape() != (model.w().rows(), model.s().cols()) {
        return Err(Failure::usage(format!(
            "{}: {}x{} data does not match a {}x{} model",
            args.x.display(),
            x.rows(),
            x.cols(),
            model.w().rows(),
            model.s().cols()
        )));
    }
    let rows: Vec<usize> = match args.row {
        Some(r) if r >= x.rows() => {
            return Err(Failure::usage(format!("row {r} out of range for {} rows", x.rows())));
        }
        Some(r) => vec![r],
        None => (0..x.rows()).collect(),
    };
    let fitted = model.reconstruct();
    let (xa, ra) = (x.as_array(), fitted.as_array());

    let mut recon = String::new();
    let mut residuals = String::from("row,rss,norm_sq\n");
    let mut total = 0.0;
    for &i in &rows {
        for source in [xa.row(i), ra.row(i)] {
            if args.index {
                let _ = write!(recon, "{i},");
            }
            let line: Vec<String> = source.iter().map(|v| format_value(*v)).collect();
            recon.push_str(&line.join(","));
            recon.push('\n');
        }
        let rss: f64 = xa.row(i).iter().zip(ra.row(i)).map(|(a, b)| (a - b) * (a - b)).sum();
        let norm: f64 = xa.row(i).iter().map(|v| v * v).sum();
        total += rss;
        let _ = writeln!(residuals, "{i},{},{}", format_value(rss), format_value(norm));
    }

    ensure_dir(&args.out)?;
    write_text(&args.out.join("recon.csv"), &recon)?;
    write_text(&args.out.join("residuals.csv"), &residuals)?;
    println!("total RSS {}", format_value(total));
    Ok(())
}
