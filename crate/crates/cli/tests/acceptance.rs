//! Acceptance criteria, one verdict line each. Built without the libtest
//! harness so the lines are printed even when cargo captures test output.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use gbrnmf_core::gbr::{self, normalize, trapezoid_area, update_a, update_s, update_w, NormalizeOptions};
use gbrnmf_core::io::{read_matrix, write_matrix};
use gbrnmf_core::simgen::{evaluate_recovery, simulate, MatchMode, SimParams};
use gbrnmf_core::verify::{
    check_auxiliary_with, check_descent, check_gradient, random_instance, AuxOptions, ConstraintFamily,
    DescentOptions, Factor, AUX_ANCHOR_TOL,
};
use gbrnmf_core::{nmf_fit, nmf_update_step, BaselineModel, FitConfig, Model, NonnegMatrix};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const FAMILIES: [ConstraintFamily; 5] = [
    ConstraintFamily::Unconstrained,
    ConstraintFamily::Groups,
    ConstraintFamily::Basis,
    ConstraintFamily::GroupsAndBasis,
    ConstraintFamily::Saturated,
];

fn rand_mat(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> NonnegMatrix {
    let data = (0..rows * cols).map(|_| rng.random_range(0.1..1.0)).collect();
    NonnegMatrix::new(rows, cols, data).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) }
}

fn max_rel(a: &NonnegMatrix, b: &NonnegMatrix) -> f64 {
    a.as_array().iter().zip(b.as_array()).map(|(x, y)| rel(*x, *y)).fold(0.0, f64::max)
}

fn masked_bits(m: &NonnegMatrix, mask: &Array2<bool>) -> Vec<u64> {
    m.as_array().iter().zip(mask).filter(|(_, f)| **f).map(|(v, _)| v.to_bits()).collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) { 0.5 * (v[m - 1] + v[m]) } else { v[m] }
}

fn within(limit: Duration, start: Instant, detail: String) -> Outcome {
    let took = start.elapsed();
    if took < limit {
        Ok(format!("{detail}; {took:.1?}"))
    } else {
        Err(format!("{detail}; took {took:.1?}, limit {limit:?}"))
    }
}

/// A random model on a random-family instance, with `A` made dense.
fn dense_instance(seed: u64, family: ConstraintFamily, opts: &DescentOptions) -> (NonnegMatrix, Model) {
    let inst = random_instance(family, opts, seed);
    let m = gbr::init_model(&inst.x, &inst.spec, &FitConfig::default().with_seed(seed)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5);
    let q = m.rank();
    let a = rand_mat(&mut rng, q, q);
    let (w, _, s) = m.clone().into_parts();
    let dense = Model::new(w, a, s, m.w_mask().clone(), m.s_mask().clone()).unwrap();
    (inst.x, dense)
}

fn descent() -> Outcome {
    let start = Instant::now();
    let sum = check_descent(ConstraintFamily::Mixed, 100, 1, DescentOptions::default()).map_err(|e| e.to_string())?;
    let detail = format!(
        "{} trials x {} iterations, {} violations, {} contract breaches",
        sum.trials, sum.iterations, sum.violations, sum.contract_breaches
    );
    if !sum.passed {
        return Err(format!("{detail}; worst {:?}", sum.worst));
    }
    within(Duration::from_secs(30), start, detail)
}

fn gradient() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let (n, p, q) = (rng.random_range(1..=6), rng.random_range(1..=6), rng.random_range(1..=6));
        let (w, a, s, x) = (rand_mat(&mut rng, n, q), rand_mat(&mut rng, q, q), rand_mat(&mut rng, q, p), rand_mat(&mut rng, n, p));
        let c = check_gradient(&x, &w, &a, &s, 1e-6, 1e-5).map_err(|e| e.to_string())?;
        worst = worst.max(c.max_rel_w).max(c.max_rel_a).max(c.max_rel_s);
        if !c.passed {
            return Err(format!("instance {i}: {:?}", c.worst));
        }
    }
    within(Duration::from_secs(10), start, format!("50 instances, max rel error {worst:.2e} <= 1e-5"))
}

fn auxiliary() -> Outcome {
    let start = Instant::now();
    let opts = DescentOptions { max_n: 8, max_p: 8, max_q: 4, ..DescentOptions::default() };
    let (mut coords, mut worst_gap, mut worst_anchor) = (0, f64::NEG_INFINITY, 0.0f64);
    for i in 0..20u64 {
        let (x, m) = dense_instance(300 + i, FAMILIES[i as usize % 5], &opts);
        for factor in [Factor::W, Factor::A, Factor::S] {
            let rep = check_auxiliary_with(&x, &m, factor, usize::MAX, i, AuxOptions::default())
                .map_err(|e| e.to_string())?;
            for s in &rep.samples {
                if s.probe_values.len() != 51 {
                    return Err(format!("expected 50 probes plus the anchor, got {}", s.probe_values.len()));
                }
                let last = s.f_values.len() - 1;
                worst_anchor = worst_anchor.max(rel(s.g_values[last], s.f_values[last]));
                worst_gap = worst_gap.max(s.worst_gap);
                coords += 1;
                if !s.passed {
                    return Err(format!("instance {i} {factor}[{},{}]: gap {:e}", s.row, s.col, s.worst_gap));
                }
            }
        }
    }
    if worst_anchor > AUX_ANCHOR_TOL {
        return Err(format!("anchor mismatch {worst_anchor:e}"));
    }
    within(
        Duration::from_secs(20),
        start,
        format!("{coords} coordinates, worst (F-G)/max(1,|F|) {worst_gap:.2e} <= 1e-9, anchor rel {worst_anchor:.1e}"),
    )
}

fn fixed_points_and_masks() -> Outcome {
    let opts = DescentOptions { max_n: 10, max_p: 10, max_q: 5, ..DescentOptions::default() };
    let mut worst = 0.0f64;
    for i in 0..20u64 {
        let (_, m) = dense_instance(400 + i, FAMILIES[i as usize % 5], &opts);
        let x = m.reconstruct();
        for next in [update_w(&x, m.clone()), update_a(&x, m.clone()), update_s(&x, m.clone())] {
            let next = next.map_err(|e| e.to_string())?;
            worst = worst.max(max_rel(next.w(), m.w())).max(max_rel(next.a(), m.a())).max(max_rel(next.s(), m.s()));
        }
    }
    if worst > 1e-12 {
        return Err(format!("fixed point moved by rel {worst:e}"));
    }
    for (i, family) in FAMILIES.into_iter().enumerate() {
        let inst = random_instance(family, &DescentOptions::default(), 500 + i as u64);
        let cfg = FitConfig::default().with_seed(i as u64);
        let init = gbr::init_model(&inst.x, &inst.spec, &cfg).map_err(|e| e.to_string())?;
        let mut m = init.clone();
        for _ in 0..50_000 {
            m = gbr::gbr_step(&inst.x, m, true).map_err(|e| e.to_string())?;
        }
        if masked_bits(m.w(), m.w_mask()) != masked_bits(init.w(), init.w_mask())
            || masked_bits(m.s(), m.s_mask()) != masked_bits(init.s(), init.s_mask())
        {
            return Err(format!("{family:?}: frozen entries changed"));
        }
        if let Some(block) = &inst.spec.group_block {
            let cols = m.w().as_array().slice(ndarray::s![.., ..block.cols()]).to_owned();
            if cols.iter().zip(block.as_array()).any(|(a, b)| a.to_bits() != b.to_bits()) {
                return Err(format!("{family:?}: group columns differ from the spec"));
            }
        }
        if !m.a_is_diagonal() {
            return Err(format!("{family:?}: A gained off-diagonal mass"));
        }
    }
    Ok(format!("20 exact factorizations, max rel change {worst:.1e} <= 1e-12; 5 families x 50000 iterations bit-identical, A diagonal"))
}

fn baseline_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (n, p, q) = (rng.random_range(2..=12), rng.random_range(2..=12), rng.random_range(1..=4));
        let x = rand_mat(&mut rng, n, p);
        let mut base = BaselineModel::new(rand_mat(&mut rng, n, q), rand_mat(&mut rng, q, p)).unwrap();
        for _ in 0..10 {
            let m = Model::unconstrained(base.w.clone(), NonnegMatrix::identity(q), base.h.clone()).unwrap();
            let m = update_w(&x, update_s(&x, m).unwrap()).unwrap();
            base = nmf_update_step(&x, base).unwrap();
            worst = worst.max(max_rel(m.w(), &base.w)).max(max_rel(m.s(), &base.h));
            if m.a() != &NonnegMatrix::identity(q) {
                return Err("A left the identity".into());
            }
        }
    }
    if worst <= 1e-12 {
        Ok(format!("20 instances x 10 steps, max rel difference {worst:.1e} <= 1e-12"))
    } else {
        Err(format!("max rel difference {worst:e}"))
    }
}

fn desk_scale() -> Outcome {
    let start = Instant::now();
    let (mut gs, mut gw, mut bs, mut bw) = (vec![], vec![], vec![], vec![]);
    for seed in 0..20 {
        let truth = simulate(&SimParams { n: 100, p: 200, g: 4, q: 7, seed, ..SimParams::default() }).unwrap();
        let cfg = FitConfig::default().with_max_iter(3000).with_seed(seed + 1000);
        let (model, _) = gbr::fit(&truth.x, &truth.constraint_spec(), &cfg).map_err(|e| e.to_string())?;
        let g = evaluate_recovery(&model, &truth, MatchMode::ConstrainedAligned).unwrap();
        let (base, _) = nmf_fit(&truth.x, 7, &cfg).map_err(|e| e.to_string())?;
        let base = Model::unconstrained(base.w, NonnegMatrix::identity(7), base.h).unwrap();
        let b = evaluate_recovery(&base, &truth, MatchMode::FreeMatched).unwrap();
        gs.push(g.s_rss_total);
        gw.push(g.score_rss_total);
        bs.push(b.s_rss_total);
        bw.push(b.score_rss_total);
    }
    let (gs, gw, bs, bw) = (median(gs), median(gw), median(bs), median(bw));
    let detail = format!("median S-RSS {gs:.2e} vs H-RSS {bs:.2e}; median WA-RSS {gw:.2e} vs W-RSS {bw:.2e}");
    if gs < bs && gw < bw {
        within(Duration::from_secs(300), start, detail)
    } else {
        Err(detail)
    }
}

fn normalization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut recon, mut sums) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let (n, p, q) = (rng.random_range(2..=30), rng.random_range(2..=30), rng.random_range(1..=6));
        let m = Model::unconstrained(rand_mat(&mut rng, n, q), rand_mat(&mut rng, q, q), rand_mat(&mut rng, q, p)).unwrap();
        let out = normalize(&m, NormalizeOptions::default()).map_err(|e| e.to_string())?;
        let (before, after) = (m.reconstruct(), out.reconstruct());
        let diff: f64 = before.as_array().iter().zip(after.as_array()).map(|(a, b)| (a - b).powi(2)).sum();
        recon = recon.max(diff.sqrt() / before.norm_sq().sqrt());
        for col in out.w().as_array().columns() {
            sums = sums.max(rel(col.sum(), n as f64));
        }
        for row in out.s().as_array().rows() {
            sums = sums.max(rel(trapezoid_area(row), 1.0));
        }
    }
    let detail = format!("50 models, reconstruction rel {recon:.1e} <= 1e-10, sums/areas rel {sums:.1e} <= 1e-9");
    if recon <= 1e-10 && sums <= 1e-9 { Ok(detail) } else { Err(detail) }
}

fn gbrnmf(args: &[&str], dir: &Path) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_gbrnmf")).args(args).current_dir(dir).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap_or(-1), text)
}

fn pipeline() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let steps: [&[&str]; 3] = [
        &["simulate", "--n", "100", "--p", "200", "--g", "4", "--q", "7", "--noise-sd", "0", "--seed", "7", "--emit-constraints", "--out", "sim"],
        &["fit", "--x", "sim/x.csv", "--groups", "sim/groups.csv", "--basis", "sim/basis.csv", "--q", "7", "--max-iter", "200000", "--seed", "1", "--out", "fit"],
        &["reconstruct", "--x", "sim/x.csv", "--model", "fit", "--out", "recon"],
    ];
    for args in steps {
        let (code, text) = gbrnmf(args, dir);
        if code != 0 {
            return Err(format!("{} exited {code}: {text}", args[0]));
        }
    }
    let residuals = std::fs::read_to_string(dir.join("recon/residuals.csv")).unwrap();
    let (mut worst, mut total) = (0.0f64, 0.0);
    for line in residuals.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        worst = worst.max(f[1] / f[2]);
        total += f[1];
    }
    let trace = std::fs::read_to_string(dir.join("fit/trace.csv")).unwrap();
    let last: f64 = trace.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    let cross = rel(total, 2.0 * last);
    let detail = format!("worst row RSS/norm^2 {worst:.2e} <= 1e-6; total RSS vs 2 x final trace rel {cross:.1e}");
    if worst <= 1e-6 && cross <= 1e-9 { Ok(detail) } else { Err(detail) }
}

fn cli_contract() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("neg.csv"), "1,2\n3,-1\n").unwrap();
    std::fs::write(dir.join("ragged.csv"), "1,2\n3\n").unwrap();
    std::fs::write(dir.join("huge.csv"), "1e300,1e300\n1e300,1e300\n").unwrap();
    let cases: &[(&[&str], i32)] = &[
        (&["simulate", "--n", "20", "--p", "30", "--seed", "3", "--emit-constraints", "--out", "sim"], 0),
        (&["fit", "--x", "sim/x.csv", "--q", "3", "--max-iter", "100", "--seed", "1", "--out", "plain"], 0),
        (&["fit", "--x", "sim/x.csv", "--groups", "sim/groups.csv", "--basis", "sim/basis.csv", "--q", "7", "--max-iter", "50", "--out", "con"], 0),
        (&["fit", "--x", "sim/x.csv", "--q", "7", "--baseline", "--max-iter", "50", "--out", "base"], 0),
        (&["evaluate", "--model", "con", "--truth", "sim", "--out", "ev"], 0),
        (&["reconstruct", "--x", "sim/x.csv", "--model", "con", "--row", "5", "--out", "rc"], 0),
        (&["verify", "--trials", "10", "--seed", "3", "--out", "ver"], 0),
        (&["verify", "--trials", "3", "--corrupt-gradient", "--out", "ver2"], 1),
        (&["verify", "--trials", "0"], 2),
        (&["fit", "--x", "sim/x.csv"], 2),
        (&["fit", "--x", "missing.csv", "--q", "2"], 2),
        (&["fit", "--x", "neg.csv", "--q", "1"], 2),
        (&["fit", "--x", "ragged.csv", "--q", "1"], 2),
        (&["fit", "--x", "sim/x.csv", "--groups", "sim/groups.csv", "--q", "2"], 2),
        (&["fit", "--x", "sim/x.csv", "--q", "2", "--delta", "-1"], 2),
        (&["simulate", "--g", "9", "--q", "7", "--out", "bad"], 2),
        (&["evaluate", "--model", "plain", "--truth", "sim"], 2),
        (&["reconstruct", "--x", "neg.csv", "--model", "con"], 2),
        (&["reconstruct", "--x", "sim/x.csv", "--model", "plain", "--row", "99"], 2),
        (&["bogus"], 2),
        (&["fit", "--x", "huge.csv", "--q", "1"], 3),
    ];
    for (args, want) in cases {
        let (code, text) = gbrnmf(args, dir);
        if code != *want {
            return Err(format!("`gbrnmf {}` exited {code}, expected {want}: {text}", args.join(" ")));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let scale = 10f64.powi(rng.random_range(-300..300));
        let data = (0..35).map(|_| rng.random::<f64>() * scale).collect();
        let m = NonnegMatrix::new(5, 7, data).unwrap();
        let path = dir.join(format!("rt{i}.csv"));
        write_matrix(&path, &m).unwrap();
        worst = worst.max(max_rel(&read_matrix(&path, false).unwrap(), &m));
    }
    let frozen_ok = read_matrix(dir.join("con/s.csv"), false).unwrap().as_array().row(4).to_vec()
        == read_matrix(dir.join("sim/basis.csv"), false).unwrap().as_array().row(0).to_vec();
    let detail = format!("{} invocations; CSV round-trip rel {worst:.1e} <= 1e-15; basis row preserved {frozen_ok}", cases.len());
    if worst <= 1e-15 && frozen_ok { Ok(detail) } else { Err(detail) }
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 descent", descent),
        ("2 gradient oracle", gradient),
        ("3 auxiliary inequalities", auxiliary),
        ("4 fixed points and masks", fixed_points_and_masks),
        ("5 baseline equivalence", baseline_equivalence),
        ("6 desk-scale recovery direction", desk_scale),
        ("7 normalization invariance", normalization),
        ("8 pipeline reconstruction", pipeline),
        ("9 CLI contract", cli_contract),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
