use std::fmt::Write as _;
use std::path::PathBuf;

use gbrnmf_core::gbr::{self, init_model, update_a, update_s, update_w};
use gbrnmf_core::io::format_value;
use gbrnmf_core::verify::{
    check_auxiliary, check_descent, check_gradient_against, random_instance, ConstraintFamily,
    DescentOptions, Factor,
};
use gbrnmf_core::{gradient, FitConfig, Model};

use crate::failure::Failure;
use crate::files::{ensure_dir, write_text};

const GRADIENT_STEP: f64 = 1e-6;
const GRADIENT_TOL: f64 = 1e-5;
const FIXED_POINT_TOL: f64 = 1e-12;
/// Instance count cap for the gradient, auxiliary and fixed-point checks.
const SMALL_TRIALS: usize = 50;

#[derive(clap::Args)]
pub struct Args {
    /// Random instances for the descent check.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Iterations per descent trial.
    #[arg(long, default_value_t = 200)]
    iterations: usize,
    /// Add 1 to one gradient entry before the finite-difference comparison.
    #[arg(long)]
    corrupt_gradient: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

/// One line of the report and one row of the worst-violations CSV.
struct Outcome {
    name: &'static str,
    passed: bool,
    /// Where the worst value was observed.
    location: String,
    worst: f64,
    limit: f64,
}

pub fn run(args: Args) -> Result<(), Failure> {
    if args.trials == 0 {
        return Err(Failure::usage("--trials must be at least 1"));
    }
    let small = args.trials.min(SMALL_TRIALS);
    let outcomes = vec![
        descent(&args)?,
        gradient_check(small, args.seed, args.corrupt_gradient)?,
        auxiliary(small, args.seed)?,
        fixed_points(small, args.seed)?,
    ];

    let mut report = String::new();
    let mut csv = String::from("check,passed,location,worst,limit\n");
    for o in &outcomes {
        let verdict = if o.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(report, "{verdict} {}: worst {:e} (limit {:e}) at {}", o.name, o.worst, o.limit, o.location);
        let _ = writeln!(csv, "{},{},{},{},{}", o.name, o.passed, o.location, format_value(o.worst), format_value(o.limit));
    }
    ensure_dir(&args.out)?;
    write_text(&args.out.join("verify_report.txt"), &report)?;
    write_text(&args.out.join("worst_violations.csv"), &csv)?;
    print!("{report}");

    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed).map(|o| o.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::verify(format!("failed checks: {}", failed.join(", "))))
    }
}

fn small_opts() -> DescentOptions {
    DescentOptions { max_n: 6, max_p: 6, max_q: 5, ..DescentOptions::default() }
}

fn instance_model(seed: u64, opts: &DescentOptions, steps: usize) -> Result<(gbrnmf_core::NonnegMatrix, Model), Failure> {
    let inst = random_instance(ConstraintFamily::Mixed.cycled(seed as usize), opts, seed);
    let mut model = init_model(&inst.x, &inst.spec, &FitConfig::default().with_seed(seed))?;
    for _ in 0..steps {
        model = gbr::gbr_step(&inst.x, model, true)?;
    }
    Ok((inst.x, model))
}

fn descent(args: &Args) -> Result<Outcome, Failure> {
    let opts = DescentOptions { iterations: args.iterations, ..DescentOptions::default() };
    let sum = check_descent(ConstraintFamily::Mixed, args.trials, args.seed, opts)?;
    let (location, worst) = match &sum.worst {
        Some(v) => (format!("trial {} iteration {}", v.trial, v.iteration), v.excess),
        None => ("-".into(), 0.0),
    };
    Ok(Outcome {
        name: "descent",
        passed: sum.passed,
        location: format!("{location}; {} contract breaches", sum.contract_breaches),
        worst,
        limit: 0.0,
    })
}

fn gradient_check(trials: usize, seed: u64, corrupt: bool) -> Result<Outcome, Failure> {
    let mut out = Outcome { name: "gradient", passed: true, location: "-".into(), worst: 0.0, limit: GRADIENT_TOL };
    for t in 0..trials {
        let (x, m) = instance_model(seed.wrapping_add(t as u64), &small_opts(), 3)?;
        let mut g = gradient(&x, m.w(), m.a(), m.s())?;
        if corrupt {
            g.d_s[[0, 0]] += 1.0;
        }
        let check = check_gradient_against(&x, m.w(), m.a(), m.s(), &g, GRADIENT_STEP, GRADIENT_TOL)?;
        out.passed &= check.passed;
        if let Some(w) = check.worst.filter(|w| w.rel_error > out.worst) {
            out.worst = w.rel_error;
            out.location = format!("instance {t} {}[{},{}]", w.factor, w.row, w.col);
        }
    }
    Ok(out)
}

fn auxiliary(trials: usize, seed: u64) -> Result<Outcome, Failure> {
    let mut out = Outcome {
        name: "auxiliary",
        passed: true,
        location: "-".into(),
        worst: f64::NEG_INFINITY,
        limit: gbrnmf_core::verify::AUX_SLACK,
    };
    for t in 0..trials {
        let (x, m) = instance_model(seed.wrapping_add(t as u64), &small_opts(), 2)?;
        for factor in [Factor::W, Factor::A, Factor::S] {
            let rep = check_auxiliary(&x, &m, factor, 8, seed.wrapping_add(t as u64))?;
            out.passed &= rep.passed;
            for s in &rep.samples {
                if s.worst_gap > out.worst {
                    out.worst = s.worst_gap;
                    out.location = format!("instance {t} {factor}[{},{}]", s.row, s.col);
                }
            }
        }
    }
    Ok(out)
}

fn fixed_points(trials: usize, seed: u64) -> Result<Outcome, Failure> {
    let mut out = Outcome { name: "fixed-point", passed: true, location: "-".into(), worst: 0.0, limit: FIXED_POINT_TOL };
    for t in 0..trials {
        let (_, m) = instance_model(seed.wrapping_add(t as u64), &small_opts(), 0)?;
        let exact = m.reconstruct();
        let updated = [
            (Factor::W, update_w(&exact, m.clone())?),
            (Factor::A, update_a(&exact, m.clone())?),
            (Factor::S, update_s(&exact, m.clone())?),
        ];
        for (factor, next) in updated {
            let (before, after) = match factor {
                Factor::W => (m.w(), next.w()),
                Factor::A => (m.a(), next.a()),
                Factor::S => (m.s(), next.s()),
            };
            for ((idx, b), a) in before.as_array().indexed_iter().zip(after.as_array()) {
                let rel = (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
                let rel = if *b == 0.0 && *a == 0.0 { 0.0 } else { rel };
                if rel > out.worst {
                    out.worst = rel;
                    out.location = format!("instance {t} {factor}[{},{}]", idx.0, idx.1);
                }
            }
        }
    }
    out.passed = out.worst <= FIXED_POINT_TOL;
    Ok(out)
}
