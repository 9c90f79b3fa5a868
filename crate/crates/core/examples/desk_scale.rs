//! Paired constrained-vs-baseline recovery on small simulated data sets.
//!
//! `cargo run --release -p gbrnmf-core --example desk_scale -- [seeds] [iterations]`

use gbrnmf_core::gbr;
use gbrnmf_core::simgen::{evaluate_recovery, simulate, MatchMode, SimParams};
use gbrnmf_core::{nmf_fit, FitConfig, Model, NonnegMatrix};

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) { 0.5 * (v[m - 1] + v[m]) } else { v[m] }
}

fn main() {
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().map_or(20, |s| s.parse().unwrap());
    let iters: usize = args.next().map_or(3000, |s| s.parse().unwrap());

    let (mut gs, mut gw, mut bs, mut bw) = (vec![], vec![], vec![], vec![]);
    for seed in 0..seeds {
        let params = SimParams { n: 100, p: 200, g: 4, q: 7, seed, ..SimParams::default() };
        let truth = simulate(&params).unwrap();
        let cfg = FitConfig::default().with_max_iter(iters).with_seed(seed + 1000);

        let (model, _) = gbr::fit(&truth.x, &truth.constraint_spec(), &cfg).unwrap();
        let g = evaluate_recovery(&model, &truth, MatchMode::ConstrainedAligned).unwrap();

        let (base, _) = nmf_fit(&truth.x, 7, &cfg).unwrap();
        let as_model = Model::unconstrained(base.w, NonnegMatrix::identity(7), base.h).unwrap();
        let b = evaluate_recovery(&as_model, &truth, MatchMode::FreeMatched).unwrap();

        println!(
            "seed {seed:>3}: gbr S {:.3e} WA {:.3e} | nmf H {:.3e} W {:.3e}",
            g.s_rss_total, g.score_rss_total, b.s_rss_total, b.score_rss_total
        );
        gs.push(g.s_rss_total);
        gw.push(g.score_rss_total);
        bs.push(b.s_rss_total);
        bw.push(b.score_rss_total);
    }
    println!(
        "median  gbr S {:.3e} WA {:.3e} | nmf H {:.3e} W {:.3e}",
        median(gs),
        median(gw),
        median(bs),
        median(bw)
    );
}
