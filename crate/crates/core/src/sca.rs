//! Successive convex approximation driver.
//!
//! A penalized pass first finds a point meeting the UL rate targets, then
//! the subproblem is re-linearized at each solution until the objective
//! stalls. Each subproblem contains its own expansion point, so the
//! objective sequence is non-decreasing up to solver accuracy.

use std::fmt::Write as _;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::channels::{ChannelRealization, C64};
use crate::conic::{solve, IpmOptions, SolveStatus};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::model::{self, BeamPath, DesignPoint, Slacks};
use crate::reformulation::point::{principal_component, NormChannels, ScaledPoint, Scheme, TowerPlan, ALPHA_MIN};
use crate::reformulation::subproblem::{build_subproblem, BuildOptions, ExpansionPoint, ObjectiveMode, Subproblem};

/// Penalty weights of the initialization pass: `rho0 * growth^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitSchedule {
    pub rho0: f64,
    pub growth: f64,
    pub max_iters: usize,
}

impl Default for InitSchedule {
    fn default() -> Self {
        Self { rho0: 100.0, growth: 10.0, max_iters: 20 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScaOptions {
    pub max_iters: usize,
    pub rel_obj_tol: f64,
    pub stall_window: usize,
    pub feas_tol: f64,
    pub rank1_ratio_min: f64,
    /// Try a longer step along the last update before re-linearizing.
    pub extrapolate: bool,
    pub init: InitSchedule,
    pub ipm: IpmOptions,
}

impl Default for ScaOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            rel_obj_tol: 1e-5,
            stall_window: 5,
            feas_tol: 1e-7,
            rank1_ratio_min: 1e3,
            extrapolate: true,
            init: InitSchedule::default(),
            ipm: IpmOptions::default(),
        }
    }
}

impl ScaOptions {
    pub fn validate(&self) -> Result<()> {
        let pos = self.max_iters > 0
            && self.rel_obj_tol > 0.0
            && self.stall_window > 0
            && self.feas_tol > 0.0
            && self.rank1_ratio_min > 0.0
            && self.init.rho0 > 0.0
            && self.init.growth >= 1.0
            && self.init.max_iters > 0;
        if pos {
            Ok(())
        } else {
            Err(Error::InvalidConfig("SCA options must be positive".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iteration: usize,
    /// Subproblem optimum `q^2` (nats per channel use per joule).
    pub q2: f64,
    /// True EE of the recovered design (bit/s/Hz per W).
    pub ee: f64,
    /// `ee - q2 / ln 2`; non-negative up to solver tolerance since every
    /// surrogate is safe-side.
    pub gap: f64,
    pub status: SolveStatus,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Converged,
    MaxIters,
    SolverFailure(SolveStatus),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub scheme: Scheme,
    pub records: Vec<IterRecord>,
    pub design: DesignPoint,
    pub ee: f64,
    pub reason: StopReason,
    /// Smallest principal-eigenvalue ratio over the phase-2 covariances.
    pub rank1_ratio: f64,
    pub rank1_flagged: bool,
    /// Penalized solves used to reach the UL targets.
    pub init_iters: usize,
}

impl SolveTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn objective_sequence(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.q2).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("iteration,q2,ee,gap,status,seconds\n");
        for r in &self.records {
            let _ = writeln!(s, "{},{:e},{:e},{:e},{:?},{:.6}", r.iteration, r.q2, r.ee, r.gap, r.status, r.seconds);
        }
        s
    }
}

/// Principal-component beamformer of a PSD covariance and the ratio of its
/// two largest eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct Rank1 {
    pub w: DVector<C64>,
    pub ratio: f64,
    pub flagged: bool,
}

pub fn recover_rank1(w2: &DMatrix<C64>, ratio_min: f64) -> Rank1 {
    let (w, ratio) = principal_component(w2);
    Rank1 { w, ratio, flagged: ratio < ratio_min }
}

/// Lowers or raises `P_2b` to the least value meeting the phase-2 energy
/// budget with decoding charged at the achieved UL rates.
pub fn repair_p2b(cfg: &SystemConfig, ch: &ChannelRealization, dp: &mut DesignPoint) -> Result<()> {
    let rep = model::check_original_constraints(cfg, ch, dp, BeamPath::Vectors)?;
    dp.p2b = (dp.p2b + rep.second_phase_energy / (1.0 - dp.alpha)).max(0.0);
    Ok(())
}

fn seed(cfg: &SystemConfig, ch: &ChannelRealization, scheme: Scheme) -> DesignPoint {
    let alpha = match scheme {
        Scheme::Harvest => 0.5,
        Scheme::Baseline => ALPHA_MIN,
    };
    let mut dp = DesignPoint::zeros(cfg, alpha);
    let amp = (cfg.p_b_max / (2.0 * cfg.k_d as f64)).sqrt();
    for i in 0..cfg.k_d {
        let n = ch.h[i].norm();
        let mrt = if n > 0.0 { ch.h[i].unscale(n) } else { DVector::from_element(cfg.m_t, C64::new(1.0 / (cfg.m_t as f64).sqrt(), 0.0)) };
        let w = mrt * C64::new(amp, 0.0);
        if scheme == Scheme::Harvest {
            dp.w1[i] = w.clone();
        }
        dp.w2[i] = w;
    }
    dp.sync_matrices();
    for j in 0..cfg.k_u {
        if scheme == Scheme::Harvest {
            dp.p1[j] = cfg.p_u_max / 2.0;
        }
        dp.p2[j] = cfg.p_u_max / 2.0;
    }
    dp.slacks = Slacks::default();
    dp
}

const EXTRAP_FEAS_TOL: f64 = 1e-9;
const BETA_MIN: f64 = 0.125;
const BETA_MAX: f64 = 64.0;

struct Ctx<'a> {
    cfg: &'a SystemConfig,
    nc: NormChannels,
    plan: TowerPlan,
    scheme: Scheme,
    rbar: Vec<f64>,
}

impl<'a> Ctx<'a> {
    fn new(cfg: &'a SystemConfig, ch: &ChannelRealization, scheme: Scheme) -> Result<Self> {
        let nc = NormChannels::new(cfg, ch)?;
        let plan = TowerPlan::for_instance(cfg, &nc)?;
        let rbar = cfg.r_min_ul.iter().map(|r| r * std::f64::consts::LN_2).collect();
        Ok(Self { cfg, nc, plan, scheme, rbar })
    }

    fn build(&self, sp: ScaledPoint, objective: ObjectiveMode) -> Result<Subproblem> {
        let xp = ExpansionPoint::new(self.cfg, &self.nc, sp, self.scheme)?;
        let opts = BuildOptions { scheme: self.scheme, objective, tower: self.plan };
        build_subproblem(self.cfg, &self.nc, &xp, &opts)
    }

    /// `cur + beta (cur - prev)` if it is feasible for the subproblem built
    /// around it and beats `cur`; the next solve then cannot fall below it.
    fn extrapolated(&self, cur: &ScaledPoint, prev: &ScaledPoint, beta: f64) -> Option<ScaledPoint> {
        let mut y = cur.extrapolate(prev, beta, self.scheme);
        if !y.lift_floors(&self.nc, self.scheme) {
            return None;
        }
        y.project_budgets(self.cfg.p_b_max, self.cfg.p_u_max);
        if !y.meet_ul_targets(self.cfg, &self.nc, &self.plan, &self.rbar).ok()? {
            return None;
        }
        y.tighten(self.cfg, &self.nc, &self.plan, self.scheme).ok()?;
        if !(y.slacks.q > cur.slacks.q) {
            return None;
        }
        let sub = self.build(y.clone(), ObjectiveMode::Efficiency).ok()?;
        let x = sub.layout.embed(&y, &sub.rbar);
        let rep = sub.program.check_feasibility(&x).ok()?;
        (rep.max() <= EXTRAP_FEAS_TOL).then_some(y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitResult {
    /// Raw solution of the last penalized solve, used as the first
    /// expansion point.
    pub point: DesignPoint,
    pub iterations: usize,
}

/// Penalized initialization from maximum-ratio beams, `alpha = 0.5` and
/// half the UE budget.
pub fn find_initial_point(cfg: &SystemConfig, ch: &ChannelRealization, opts: &ScaOptions, scheme: Scheme) -> Result<InitResult> {
    opts.validate()?;
    let ctx = Ctx::new(cfg, ch, scheme)?;
    let mut sp = ScaledPoint::from_design(&seed(cfg, ch, scheme));
    sp.tighten(cfg, &ctx.nc, &ctx.plan, scheme)?;
    let mut rho = opts.init.rho0;
    for k in 0..opts.init.max_iters {
        let sub = ctx.build(sp, ObjectiveMode::Penalized { rho })?;
        let sol = solve(&sub.program, &opts.ipm)?;
        if !sol.status.is_usable() {
            return Err(Error::Solver(format!("penalized subproblem {k}: {:?}", sol.status)));
        }
        sp = sub.layout.extract(&sol.x, cfg.k_d);
        let worst = sub.layout.mu.iter().map(|m| sol.x[*m]).fold(0.0, f64::min);
        let tol = opts.feas_tol * sub.rbar.iter().fold(1.0, |a: f64, b| a.max(*b));
        if worst >= -tol {
            return Ok(InitResult { point: sp.to_design(), iterations: k + 1 });
        }
        rho *= opts.init.growth;
    }
    Err(Error::Infeasible(format!(
        "UL rate targets not met after {} penalized iterations",
        opts.init.max_iters
    )))
}

fn finalize(cfg: &SystemConfig, ch: &ChannelRealization, sp: &ScaledPoint, opts: &ScaOptions) -> Result<(DesignPoint, f64, f64, bool)> {
    let mut dp = sp.to_design();
    let mut ratio = f64::INFINITY;
    let mut flagged = false;
    for (i, m) in dp.w2_mat.iter().enumerate() {
        let r = recover_rank1(m, opts.rank1_ratio_min);
        ratio = ratio.min(r.ratio);
        flagged |= r.flagged;
        dp.w2[i] = r.w;
    }
    repair_p2b(cfg, ch, &mut dp)?;
    let ee = model::ee(cfg, ch, &dp, BeamPath::Vectors)?;
    Ok((dp, ee, ratio, flagged))
}

/// SCA iterations from a feasible start.
pub fn run_sca(cfg: &SystemConfig, ch: &ChannelRealization, opts: &ScaOptions, scheme: Scheme, init: &DesignPoint) -> Result<SolveTrace> {
    opts.validate()?;
    let ctx = Ctx::new(cfg, ch, scheme)?;
    let mut sp = ScaledPoint::from_design(init);
    let mut records = Vec::new();
    let mut reason = StopReason::MaxIters;
    let mut stall = 0;
    let mut prev: Option<f64> = None;
    let mut beta = 1.0;
    for it in 0..opts.max_iters {
        let t0 = Instant::now();
        let sub = ctx.build(sp.clone(), ObjectiveMode::Efficiency)?;
        let sol = solve(&sub.program, &opts.ipm)?;
        if !sol.status.is_usable() {
            reason = StopReason::SolverFailure(sol.status);
            break;
        }
        let last = std::mem::replace(&mut sp, sub.layout.extract(&sol.x, cfg.k_d));
        let q2 = sp.slacks.q.max(0.0).powi(2);
        let (_, ee, _, _) = finalize(cfg, ch, &sp, opts)?;
        records.push(IterRecord {
            iteration: it,
            q2,
            ee,
            gap: ee - q2 / std::f64::consts::LN_2,
            status: sol.status,
            seconds: t0.elapsed().as_secs_f64(),
        });
        if let Some(p) = prev {
            if (q2 - p).abs() <= opts.rel_obj_tol * p.abs().max(f64::MIN_POSITIVE) {
                stall += 1;
            } else {
                stall = 0;
            }
        }
        prev = Some(q2);
        if stall >= opts.stall_window {
            reason = StopReason::Converged;
            break;
        }
        if opts.extrapolate {
            let mut found = None;
            while beta >= BETA_MIN {
                if let Some(y) = ctx.extrapolated(&sp, &last, beta) {
                    found = Some(y);
                    break;
                }
                beta *= 0.5;
            }
            match found {
                Some(mut y) => {
                    // Keep lengthening while it pays off.
                    while beta < BETA_MAX {
                        match ctx.extrapolated(&sp, &last, 2.0 * beta) {
                            Some(z) if z.slacks.q > y.slacks.q => {
                                y = z;
                                beta *= 2.0;
                            }
                            _ => break,
                        }
                    }
                    sp = y;
                }
                None => beta = 1.0,
            }
        }
    }
    let (design, ee, rank1_ratio, rank1_flagged) = finalize(cfg, ch, &sp, opts)?;
    Ok(SolveTrace { scheme, records, design, ee, reason, rank1_ratio, rank1_flagged, init_iters: 0 })
}

/// SCA started from a design found for a looser or equal instance, such as
/// the optimum at a smaller power budget. The slacks are rebuilt first.
pub fn resume_from(cfg: &SystemConfig, ch: &ChannelRealization, opts: &ScaOptions, scheme: Scheme, start: &DesignPoint) -> Result<SolveTrace> {
    let ctx = Ctx::new(cfg, ch, scheme)?;
    let mut sp = ScaledPoint::from_design(start);
    sp.tighten(cfg, &ctx.nc, &ctx.plan, scheme)?;
    run_sca(cfg, ch, opts, scheme, &sp.to_design())
}

/// Initialization followed by the SCA loop.
pub fn solve_scheme(cfg: &SystemConfig, ch: &ChannelRealization, opts: &ScaOptions, scheme: Scheme) -> Result<SolveTrace> {
    let init = find_initial_point(cfg, ch, opts, scheme)?;
    let mut trace = run_sca(cfg, ch, opts, scheme, &init.point)?;
    trace.init_iters = init.iterations;
    Ok(trace)
}

/// Reference scheme without self-energy recycling: `alpha` pinned to
/// [`ALPHA_MIN`], no phase-1 transmission, phase 2 fully grid powered.
pub fn solve_baseline_no_harvest(cfg: &SystemConfig, ch: &ChannelRealization, opts: &ScaOptions) -> Result<SolveTrace> {
    solve_scheme(cfg, ch, opts, Scheme::Baseline)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{draw_channels, ChannelGenConfig, Pathloss};

    fn gen() -> ChannelGenConfig {
        ChannelGenConfig { pathloss: Pathloss::Fixed { loss_db: 104.0 }, ..Default::default() }
    }

    #[test]
    fn rank1_cases() {
        let w = DVector::from_vec(vec![C64::new(0.6, -0.2), C64::new(0.1, 0.9)]);
        let r = recover_rank1(&(&w * w.adjoint()), 1e3);
        assert!(!r.flagged);
        let phase = r.w.dotc(&w) / r.w.norm_squared();
        assert!((phase.norm() - 1.0).abs() < 1e-10);
        assert!((&r.w * phase - &w).norm() < 1e-10);
        let r = recover_rank1(&DMatrix::identity(2, 2), 1e3);
        assert!(r.flagged && (r.ratio - 1.0).abs() < 1e-12);
        let noise = DMatrix::from_fn(2, 2, |a, b| C64::new(if a == b { 1e-9 } else { 0.0 }, 0.0));
        let r = recover_rank1(&(&w * w.adjoint() + noise), 1e3);
        assert!(r.ratio > 1e8 && !r.flagged);
    }

    #[test]
    fn small_instance_runs() {
        let cfg = SystemConfig::default().with_users(1, 1).with_antennas(1, 1);
        let ch = draw_channels(&cfg, &gen(), 4).unwrap();
        let opts = ScaOptions::default();
        let tr = solve_scheme(&cfg, &ch, &opts, Scheme::Harvest).unwrap();
        assert!(!tr.records.is_empty());
        let q = tr.objective_sequence();
        for w in q.windows(2) {
            assert!(w[1] >= w[0] - 1e-7, "{q:?}");
        }
        let rep = model::check_original_constraints(&cfg, &ch, &tr.design, BeamPath::Vectors).unwrap();
        assert!(rep.max_violation() <= 1e-6, "{rep:?}");
        assert!(tr.ee >= q.last().unwrap() / std::f64::consts::LN_2 * (1.0 - 1e-6));
        let base = solve_baseline_no_harvest(&cfg, &ch, &opts).unwrap();
        assert_eq!(base.design.alpha, ALPHA_MIN);
        assert!(base.design.w1.iter().all(|w| w.norm() == 0.0));
        assert!(base.design.p1.iter().all(|p| *p == 0.0));
    }

    #[test]
    fn zero_ue_budget_is_infeasible() {
        let mut cfg = SystemConfig::default().with_users(1, 1).with_antennas(1, 1);
        cfg.p_u_max = 0.0;
        let ch = draw_channels(&cfg, &gen(), 1).unwrap();
        let opts = ScaOptions { init: InitSchedule { max_iters: 4, ..Default::default() }, ..Default::default() };
        assert!(matches!(find_initial_point(&cfg, &ch, &opts, Scheme::Harvest), Err(Error::Infeasible(_))));
    }

    #[test]
    fn zero_target_needs_one_solve() {
        let cfg = SystemConfig::default().with_users(1, 1).with_antennas(1, 1).with_min_rate_bps(0.0);
        let ch = draw_channels(&cfg, &gen(), 2).unwrap();
        let init = find_initial_point(&cfg, &ch, &ScaOptions::default(), Scheme::Harvest).unwrap();
        assert_eq!(init.iterations, 1);
    }
}
