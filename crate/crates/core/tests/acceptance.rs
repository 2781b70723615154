//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! `FDEE_SWEEP_TRIALS` lowers the trial count of the power sweep for quick
//! local runs; the default is the full 200.

use std::time::Instant;

use fdee::channels::{draw_channels, trial_rng, ChannelGenConfig, C64};
use fdee::conic::planted::{contradictory_instance, planted_instance, PlantedKind};
use fdee::conic::{solve, IpmOptions, SolveStatus};
use fdee::experiments::{
    median, run_aee_sweep, run_convergence_experiment, run_oracle_comparison, run_to_dir, CampaignSpec, Experiment,
    SchemeSet,
};
use fdee::model::{self, DesignPoint};
use fdee::oracle::{mc_energy_oracle, GridSpec};
use fdee::reformulation::surrogates::{f1, f2, f3, surrogate_f1, surrogate_f2, surrogate_f3, surrogate_f4_upper};
use fdee::reformulation::Scheme;
use fdee::SystemConfig;
use nalgebra::DVector;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-3)
}

/// Fourth-order central difference of `f` along coordinate `k`.
fn fd(f: &dyn Fn(&[f64]) -> f64, x: &[f64], k: usize) -> f64 {
    let h = 1e-4 * x[k].abs().max(1.0);
    let at = |d: f64| {
        let mut v = x.to_vec();
        v[k] += d;
        f(&v)
    };
    (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h)
}

fn surrogates() -> Outcome {
    let t0 = Instant::now();
    let mut rng = trial_rng(2024, 0);
    let tests: Vec<[f64; 3]> =
        (0..1000).map(|_| [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(0.05..5.0)]).collect();
    let mut worst_tan = 0.0f64;
    let mut worst_grad = 0.0f64;
    let mut bound_fail = 0;
    for _ in 0..1000 {
        // F1 on (Re x, Im x, y).
        let (xr, xi, y) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(0.05..5.0));
        let s1 = surrogate_f1(C64::new(xr, xi), y).unwrap();
        let g1 = |v: &[f64]| f1(C64::new(v[0], v[1]), v[2]);
        worst_tan = worst_tan.max((s1.eval(&s1.point) - g1(&s1.point)).abs());
        for k in 0..3 {
            let d = fd(&g1, &s1.point, k);
            if !rel_close(s1.grad[k], d, 1e-5) {
                worst_grad = worst_grad.max((s1.grad[k] - d).abs() / d.abs().max(1e-3));
            }
        }
        bound_fail += tests.iter().filter(|t| s1.eval(&t[..]) > g1(&t[..]) + 1e-12 * g1(&t[..]).abs().max(1.0)).count();

        // F2 on (x, y).
        let (x2, y2) = (rng.gen_range(0.0..5.0), rng.gen_range(0.05..5.0));
        let s2 = surrogate_f2(x2, y2).unwrap();
        let g2 = |v: &[f64]| f2(v[0], v[1]);
        worst_tan = worst_tan.max((s2.eval(&s2.point) - g2(&s2.point)).abs());
        for k in 0..2 {
            let d = fd(&g2, &s2.point, k);
            if !rel_close(s2.grad[k], d, 1e-5) {
                worst_grad = worst_grad.max((s2.grad[k] - d).abs() / d.abs().max(1e-3));
            }
        }

        // F3 on (x, y) with x >= 1, y in (0, 1).
        let (x3, y3) = (rng.gen_range(1.0..4.0), rng.gen_range(0.3..0.95));
        let s3 = surrogate_f3(x3, y3).unwrap();
        let g3 = |v: &[f64]| f3(v[0], v[1]);
        worst_tan = worst_tan.max((s3.eval(&s3.point) - g3(&s3.point)).abs());
        for k in 0..2 {
            let d = fd(&g3, &s3.point, k);
            if !rel_close(s3.grad[k], d, 1e-5) {
                worst_grad = worst_grad.max((s3.grad[k] - d).abs() / d.abs().max(1e-3));
            }
        }

        // F4 upper bound of x y on the positive orthant.
        let (x4, y4) = (rng.gen_range(0.01..5.0), rng.gen_range(0.01..5.0));
        let s4 = surrogate_f4_upper(x4, y4).unwrap();
        worst_tan = worst_tan.max((s4.eval(x4, y4) - x4 * y4).abs());
        let upper = |v: &[f64]| s4.eval(v[0], v[1]);
        let exact = |v: &[f64]| v[0] * v[1];
        for k in 0..2 {
            let (a, b) = (fd(&upper, &[x4, y4], k), fd(&exact, &[x4, y4], k));
            if !rel_close(a, b, 1e-5) {
                worst_grad = worst_grad.max((a - b).abs() / b.abs().max(1e-3));
            }
        }
        bound_fail += tests.iter().filter(|t| s4.eval(t[0].abs(), t[2]) < t[0].abs() * t[2] * (1.0 - 1e-12)).count();
    }
    let secs = t0.elapsed().as_secs_f64();
    let pass = worst_tan <= 1e-10 && worst_grad == 0.0 && bound_fail == 0 && secs < 10.0;
    outcome(
        pass,
        format!("max tangency gap {worst_tan:.1e}, worst FD mismatch {worst_grad:.1e}, bound violations {bound_fail}, {secs:.1}s"),
    )
}

fn conic_backend() -> Outcome {
    let opts = IpmOptions::default();
    let mut solved = 0;
    let mut worst = 0.0f64;
    for seed in 0..50u64 {
        let kind = if seed % 2 == 0 { PlantedKind::Socp } else { PlantedKind::Sdp };
        let pl = planted_instance(seed, 4 + (seed as usize % 5), kind);
        let sol = solve(&pl.program, &opts).unwrap();
        let rel = (sol.objective - pl.optimum).abs() / pl.optimum.abs().max(1.0);
        worst = worst.max(rel);
        if sol.status.is_usable() && rel <= 1e-6 {
            solved += 1;
        }
    }
    let mut infeasible = 0;
    for seed in 0..50u64 {
        let kind = if seed % 2 == 0 { PlantedKind::Socp } else { PlantedKind::Sdp };
        let p = contradictory_instance(seed, 4 + (seed as usize % 5), kind);
        if solve(&p, &opts).unwrap().status == SolveStatus::Infeasible {
            infeasible += 1;
        }
    }
    outcome(
        solved == 50 && infeasible == 50,
        format!("{solved}/50 planted within 1e-6 (worst {worst:.1e}), {infeasible}/50 contradictory reported infeasible"),
    )
}

fn harvested_energy() -> Outcome {
    let mut rng = trial_rng(77, 0);
    let mut worst = 0.0f64;
    for case in 0..20u64 {
        let (m_t, m_r) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
        let cfg = SystemConfig::default().with_antennas(m_t, m_r).with_users(rng.gen_range(1..=3), rng.gen_range(1..=3));
        let ch = draw_channels(&cfg, &ChannelGenConfig { seed: 500 + case, ..Default::default() }, case).unwrap();
        let mut dp = DesignPoint::zeros(&cfg, rng.gen_range(0.05..0.95));
        for w in dp.w1.iter_mut() {
            *w = DVector::from_fn(m_t, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * 0.2);
        }
        for p in dp.p1.iter_mut() {
            *p = rng.gen_range(0.0..0.2);
        }
        dp.sync_matrices();
        let exact = model::harvested_power(&cfg, &ch, &dp).unwrap();
        let mc = mc_energy_oracle(&cfg, &ch, &dp, 100_000, case).unwrap();
        worst = worst.max((mc - exact).abs() / exact);
    }
    outcome(worst <= 0.02, format!("worst relative gap {:.3}% over 20 configurations", 100.0 * worst))
}

/// Monotonicity, convergence speed and initialization length share one
/// campaign of 100 channels with single antennas and two UEs per link.
fn convergence_criteria() -> [Outcome; 3] {
    let t0 = Instant::now();
    let mut spec = CampaignSpec { trials: 100, schemes: SchemeSet::Both, ..Default::default() };
    spec.cfg = spec.cfg.with_antennas(1, 1).with_users(2, 2);
    let data = run_convergence_experiment(&spec).unwrap();
    let secs = t0.elapsed().as_secs_f64();

    let solved: Vec<_> = data.runs.iter().filter(|r| r.ok()).collect();
    let monotone = solved.iter().filter(|r| r.max_drop() <= 1e-7).count();
    let worst_drop = solved.iter().map(|r| r.max_drop()).fold(0.0, f64::max);
    let mono = outcome(
        monotone == data.runs.len() && secs < 600.0,
        format!(
            "{monotone}/{} runs non-decreasing within 1e-7 (largest drop {worst_drop:.1e}), {secs:.0}s",
            data.runs.len()
        ),
    );

    let harvest: Vec<_> = data.runs.iter().filter(|r| r.scheme == Scheme::Harvest && r.trial < 50).collect();
    let fast = harvest.iter().filter(|r| r.status == "converged" && r.iterations() <= 50).count();
    let speed = outcome(
        fast as f64 >= 0.9 * harvest.len() as f64,
        format!("{fast}/{} harvest runs converged within 50 iterations at 25 dBm", harvest.len()),
    );

    let init_ok = solved.iter().filter(|r| r.init_iters <= 3).count();
    let init = outcome(
        !solved.is_empty() && init_ok as f64 >= 0.9 * solved.len() as f64,
        format!(
            "{init_ok}/{} feasible runs initialized within 3 penalized solves ({} runs infeasible)",
            solved.len(),
            data.runs.len() - solved.len()
        ),
    );
    [mono, speed, init]
}

fn oracle_equivalence() -> Outcome {
    let t0 = Instant::now();
    let spec = CampaignSpec { trials: 100, grid: GridSpec::default(), ..Default::default() };
    let data = run_oracle_comparison(&spec).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let ratios = data.ratios();
    let med = median(&ratios);
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        ratios.len() * 10 >= 9 * data.rows.len() && med >= 0.95 && max <= 1.02 && secs < 1800.0,
        format!(
            "{} paired trials, median SCA/grid {med:.4}, range [{min:.4}, {max:.4}], {secs:.0}s",
            ratios.len()
        ),
    )
}

fn sweep_criteria() -> [Outcome; 2] {
    let trials = std::env::var("FDEE_SWEEP_TRIALS").ok().and_then(|s| s.parse().ok()).unwrap_or(200);
    let t0 = Instant::now();
    let spec = CampaignSpec { trials, ..Default::default() };
    let data = run_aee_sweep(&spec).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let dbms = &spec.sweep_dbm;
    let h: Vec<_> = dbms.iter().map(|d| data.point(*d, Scheme::Harvest).unwrap()).collect();
    let b: Vec<_> = dbms.iter().map(|d| data.point(*d, Scheme::Baseline).unwrap()).collect();

    let order = h.iter().zip(&b).all(|(h, b)| h.mean_ee >= b.mean_ee);
    let n = dbms.len();
    let sat = |p: &[&fdee::experiments::AeePoint]| (p[n - 1].mean_ee - p[n - 2].mean_ee).abs() / p[n - 2].mean_ee;
    let (sat_h, sat_b) = (sat(&h), sat(&b));
    let alpha_ok = h.windows(2).all(|w| w[1].mean_alpha + w[1].ci_alpha >= w[0].mean_alpha - w[0].ci_alpha);
    let paired = h.iter().map(|p| p.paired).min().unwrap_or(0);
    let curve = |p: &[&fdee::experiments::AeePoint], f: fn(&fdee::experiments::AeePoint) -> f64| {
        p.iter().map(|x| format!("{:.3}", f(x))).collect::<Vec<_>>().join(" ")
    };
    let ordering = outcome(
        order && sat_h < 0.05 && sat_b < 0.05 && alpha_ok && secs < 7200.0,
        format!(
            "{trials} trials ({paired}+ paired per point); EE harvest [{}] baseline [{}]; tail change {:.2}% / {:.2}%; alpha [{}]; {secs:.0}s",
            curve(&h, |p| p.mean_ee),
            curve(&b, |p| p.mean_ee),
            100.0 * sat_h,
            100.0 * sat_b,
            curve(&h, |p| p.mean_alpha)
        ),
    );

    let p1: Vec<f64> = data.runs.iter().filter(|r| r.scheme == Scheme::Harvest && r.ok()).map(|r| r.p1_max).collect();
    let med = median(&p1);
    let per_point: Vec<f64> = h.iter().map(|p| p.median_p1).collect();
    let worst = per_point.iter().copied().fold(0.0, f64::max);
    let phase1 = outcome(
        med <= 1e-6 && worst <= 1e-6,
        format!("median phase-1 UE power {med:.1e} W over the sweep, largest per-point median {worst:.1e} W"),
    );
    [ordering, phase1]
}

fn determinism() -> Outcome {
    let mut spec = CampaignSpec { trials: 3, sweep_dbm: vec![15.0, 30.0], ..Default::default() };
    spec.grid = GridSpec { alpha_points: 50, dl_points: 50, ul_points: 50, ..Default::default() };
    spec.cfg = spec.cfg.with_antennas(1, 1);
    let mut same = 0;
    let mut total = 0;
    for exp in [Experiment::Convergence, Experiment::Aee, Experiment::Oracle] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let fa = run_to_dir(&spec, exp, a.path()).unwrap();
        let fb = run_to_dir(&spec, exp, b.path()).unwrap();
        for (x, y) in fa.iter().zip(&fb) {
            total += 1;
            if std::fs::read(x).unwrap() == std::fs::read(y).unwrap() {
                same += 1;
            }
        }
    }
    outcome(same == total && total > 0, format!("{same}/{total} output files byte-identical across re-runs"))
}

fn main() {
    // Ignore harness flags such as --nocapture.
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut report = |name: &'static str, o: Outcome| {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((name, o));
    };
    report("surrogate correctness", surrogates());
    report("conic backend", conic_backend());
    report("harvested-energy model", harvested_energy());
    report("determinism", determinism());
    let [mono, speed, init] = convergence_criteria();
    report("SCA monotonicity", mono);
    report("convergence speed", speed);
    report("feasibility initialization", init);
    report("oracle equivalence", oracle_equivalence());
    let [ordering, phase1] = sweep_criteria();
    report("scheme ordering", ordering);
    report("phase-1 UL power", phase1);
    let failed = results.iter().filter(|(_, o)| !o.pass).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
