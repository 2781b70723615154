//! Reference solutions that share nothing with the convex reformulation:
//! exhaustive search over a single-antenna, single-user-per-link instance
//! and a Monte Carlo estimate of the harvested power.
//!
//! The grid search evaluates every cell with a closed-form scalar version of
//! the system model; the winning cell is then rebuilt as a [`DesignPoint`]
//! and re-checked with [`crate::model`].

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channels::{trial_rng, ChannelRealization, C64};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::model::{self, BeamPath, DesignPoint};
use crate::par;

/// Relative slack granted to the budget and rate checks of a grid cell.
const CELL_TOL: f64 = 1e-12;

/// Resolution of the exhaustive search.
///
/// The time split uses `alpha_points` interior points `k / (n + 1)`. Every
/// power axis holds zero plus `n - 1` log-spaced points covering
/// `dynamic_range` decades below its upper end, which is the largest value
/// the per-block budget allows at that split. [`GridSpec::refined`] halves
/// every spacing, so a refined grid contains the coarse one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub alpha_points: usize,
    /// SBS transmit power in phase 1 and phase 2.
    pub dl_points: usize,
    /// UE transmit power.
    pub ul_points: usize,
    /// Decades spanned by the log-spaced part of each power axis.
    pub decades: f64,
    /// Multiplies every power axis; zero collapses the axes to `{0}`.
    pub power_scale: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { alpha_points: 200, dl_points: 200, ul_points: 50, decades: 6.0, power_scale: 1.0 }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.alpha_points == 0 {
            return Err(Error::InvalidConfig("grid needs at least one alpha point".into()));
        }
        if self.dl_points < 3 || self.ul_points < 3 {
            return Err(Error::InvalidConfig("power axes need at least 3 points".into()));
        }
        if !(self.decades > 0.0 && self.decades.is_finite()) {
            return Err(Error::InvalidConfig(format!("decades must be positive, got {}", self.decades)));
        }
        if !(self.power_scale >= 0.0 && self.power_scale.is_finite()) {
            return Err(Error::InvalidConfig(format!("power_scale must be >= 0, got {}", self.power_scale)));
        }
        Ok(())
    }

    /// Grid with every spacing halved.
    pub fn refined(&self) -> Self {
        Self {
            alpha_points: 2 * self.alpha_points + 1,
            dl_points: 2 * self.dl_points - 2,
            ul_points: 2 * self.ul_points - 2,
            ..*self
        }
    }

    pub fn alphas(&self) -> Vec<f64> {
        let n = self.alpha_points;
        (1..=n).map(|k| k as f64 / (n + 1) as f64).collect()
    }

    fn power_axis(&self, hi: f64, n: usize) -> Vec<f64> {
        let hi = hi * self.power_scale;
        if hi <= 0.0 {
            return vec![0.0];
        }
        let steps = (n - 2) as f64;
        let mut axis = Vec::with_capacity(n);
        axis.push(0.0);
        for k in 0..=n - 2 {
            axis.push(hi * 10f64.powf(-self.decades * (1.0 - k as f64 / steps)));
        }
        axis
    }

    pub fn cells(&self, ul_users: usize) -> usize {
        let ul = if ul_users > 0 { self.ul_points } else { 1 };
        self.alpha_points * self.dl_points * self.dl_points * ul
    }
}

#[derive(Debug, Clone)]
pub struct GridResult {
    pub design: DesignPoint,
    pub ee: f64,
    /// Cells that met every constraint.
    pub feasible: usize,
}

/// Squared channel magnitudes of a scalar instance.
#[derive(Debug, Clone, Copy)]
struct Scalar {
    h: f64,
    g: f64,
    cross: f64,
    si: f64,
    on: f64,
}

impl Scalar {
    fn new(cfg: &SystemConfig, ch: &ChannelRealization) -> Result<Self> {
        if cfg.m_t != 1 || cfg.m_r != 1 || cfg.k_d != 1 || cfg.k_u > 1 {
            return Err(Error::InvalidConfig(
                "grid search needs M_T = M_R = 1, K_D = 1 and K_U <= 1".into(),
            ));
        }
        ch.check_dims(cfg)?;
        let ul = cfg.k_u == 1;
        Ok(Self {
            h: ch.h[0][0].norm_sqr(),
            g: if ul { ch.g_ul[0][0].norm_sqr() } else { 0.0 },
            cross: if ul { ch.g_cross[0][0].norm_sqr() } else { 0.0 },
            si: ch.h_si[(0, 0)].norm_sqr(),
            on: ch.h_on[(0, 0)].norm_sqr(),
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    ee: f64,
    alpha: f64,
    tx1: f64,
    tx2: f64,
    p1: f64,
    p2: f64,
    p2b: f64,
}

fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / std::f64::consts::LN_2
}

/// Best cell at one time split, scanning phase-2 SBS power, phase-2 UE
/// power, phase-1 SBS power and phase-1 UE power in that nesting order.
/// Ties keep the first cell met.
fn best_at_alpha(cfg: &SystemConfig, s: &Scalar, spec: &GridSpec, a: f64, feasible: &mut usize) -> Option<Cell> {
    let ul = cfg.k_u == 1;
    let b = 1.0 - a;
    let sd = cfg.sigma2_dl[0];
    let pcir = cfg.p_cir();
    let tx1_axis = spec.power_axis(cfg.p_b_max / a, spec.dl_points);
    let tx2_axis = spec.power_axis(cfg.p_b_max / b, spec.dl_points);
    // UE power spent in phase 1 returns at most eta |g|^2 of itself through
    // the harvester while adding DL interference, so it only pays off when
    // that factor exceeds one.
    let p1_axis = if ul && cfg.eta * s.g > 1.0 { spec.power_axis(cfg.p_u_max / a, spec.ul_points) } else { vec![0.0] };
    let p2_axis = if ul { spec.power_axis(cfg.p_u_max / b, spec.ul_points) } else { vec![0.0] };
    let rmin = if ul { cfg.r_min_ul[0] } else { 0.0 };
    let beta = if ul { cfg.beta[0] } else { 0.0 };
    let sbs_cap = cfg.p_b_max * (1.0 + CELL_TOL);
    let ue_cap = cfg.p_u_max * (1.0 + CELL_TOL);

    // Phase-1 terms depend on (tx1, p1) only.
    let mut phase1 = Vec::with_capacity(tx1_axis.len() * p1_axis.len());
    for &tx1 in &tx1_axis {
        for &p1 in &p1_axis {
            let rate = a * log2_1p(s.h * tx1 / (sd + p1 * s.cross));
            let harvest = cfg.eta * a * (s.si * tx1 + p1 * s.g);
            let cost = a * tx1 / cfg.epsilon + a * pcir + a * p1;
            phase1.push((tx1, p1, rate, harvest, cost));
        }
    }

    let need_gamma = (rmin / b * std::f64::consts::LN_2).exp_m1();
    let mut best: Option<Cell> = None;
    let mut p2_list = Vec::with_capacity(p2_axis.len() + 1);
    for &tx2 in &tx2_axis {
        if b * tx2 > sbs_cap {
            continue;
        }
        p2_list.clear();
        if ul {
            let p_min = need_gamma * (cfg.sigma2_ul + s.on * tx2) / s.g * (1.0 + CELL_TOL);
            if spec.power_scale > 0.0 && p_min > 0.0 && !p2_axis.contains(&p_min) {
                p2_list.push(p_min);
            }
            p2_list.extend(p2_axis.iter().copied().filter(|&p| p >= p_min));
        } else {
            p2_list.push(0.0);
        }
        for &p2 in &p2_list {
            if b * p2 > ue_cap {
                continue;
            }
            let ul_rate = if ul { b * log2_1p(p2 * s.g / (cfg.sigma2_ul + s.on * tx2)) } else { 0.0 };
            if ul_rate < rmin * (1.0 - CELL_TOL) {
                continue;
            }
            let rate2 = b * log2_1p(s.h * tx2 / (sd + p2 * s.cross)) + ul_rate;
            let energy2 = b * (pcir + tx2 / cfg.epsilon) + beta * ul_rate;
            for &(tx1, p1, rate1, harvest, cost1) in &phase1 {
                if a * tx1 + b * tx2 > sbs_cap || a * p1 + b * p2 > ue_cap {
                    continue;
                }
                let p2b = ((energy2 - harvest) / b).max(0.0);
                let grid = cost1 + b * p2b + b * p2;
                if grid <= 0.0 {
                    continue;
                }
                *feasible += 1;
                let ee = (rate1 + rate2) / grid;
                if best.map_or(true, |c| ee > c.ee) {
                    best = Some(Cell { ee, alpha: a, tx1, tx2, p1, p2, p2b });
                }
            }
        }
    }
    best
}

/// Exhaustive EE maximization over a [`GridSpec`] on a scalar instance
/// (`M_T = M_R = 1`, one DL UE, at most one UL UE). The supplementary
/// grid power is set to the least value that closes the phase-2 energy
/// balance, and the UL power axis also contains the least power meeting the
/// rate target. The first cell in scan order wins ties, so the result does
/// not depend on the thread count.
pub fn grid_search_ee(cfg: &SystemConfig, ch: &ChannelRealization, spec: &GridSpec) -> Result<GridResult> {
    cfg.validate()?;
    spec.validate()?;
    let s = Scalar::new(cfg, ch)?;
    let alphas = spec.alphas();
    let per_alpha = par::map_indexed(alphas.len(), |k| {
        let mut feasible = 0;
        let best = best_at_alpha(cfg, &s, spec, alphas[k], &mut feasible);
        (best, feasible)
    });
    let mut best: Option<Cell> = None;
    let mut feasible = 0;
    for (cell, n) in per_alpha {
        feasible += n;
        if let Some(c) = cell {
            if best.map_or(true, |b| c.ee > b.ee) {
                best = Some(c);
            }
        }
    }
    let c = best.ok_or_else(|| Error::Infeasible("no grid cell satisfies the constraints".into()))?;
    let design = cell_design(cfg, &c);
    let ee = model::ee(cfg, ch, &design, BeamPath::Vectors)?;
    Ok(GridResult { design, ee, feasible })
}

fn cell_design(cfg: &SystemConfig, c: &Cell) -> DesignPoint {
    let mut dp = DesignPoint::zeros(cfg, c.alpha);
    dp.w1[0] = DVector::from_element(1, C64::new(c.tx1.sqrt(), 0.0));
    dp.w2[0] = DVector::from_element(1, C64::new(c.tx2.sqrt(), 0.0));
    if cfg.k_u == 1 {
        dp.p1[0] = c.p1;
        dp.p2[0] = c.p2;
    }
    dp.p2b = c.p2b;
    dp.sync_matrices();
    dp
}

/// Monte Carlo estimate of the harvested power: draws unit-power circular
/// Gaussian symbols for every DL stream and UL UE, forms the phase-1 signal
/// at the SBS receive antennas and averages `eta * alpha * ||y||^2`.
pub fn mc_energy_oracle(
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    dp: &DesignPoint,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    dp.check(cfg)?;
    ch.check_dims(cfg)?;
    if n_samples == 0 {
        return Err(Error::InvalidConfig("n_samples must be positive".into()));
    }
    let hh = ch.h_si.adjoint();
    let mut cols: Vec<DVector<C64>> = dp.w1.iter().map(|w| &hh * w).collect();
    cols.extend(dp.p1.iter().zip(&ch.g_ul).map(|(p, g)| g * C64::new(p.sqrt(), 0.0)));
    let mut rng = trial_rng(seed, 0);
    let mut sym = || {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    };
    let mut acc = 0.0;
    let mut y = DVector::<C64>::zeros(cfg.m_r);
    for _ in 0..n_samples {
        y.fill(C64::new(0.0, 0.0));
        for c in &cols {
            y.axpy(sym(), c, C64::new(1.0, 0.0));
        }
        acc += y.norm_squared();
    }
    Ok(cfg.eta * dp.alpha * acc / n_samples as f64)
}
