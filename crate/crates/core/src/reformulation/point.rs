//! Iterates of the convexified problem in energy variables.
//!
//! The subproblem works with `w1~ = sqrt(alpha) w1`, `p1~ = alpha p1`,
//! `V = (1 - alpha) W2`, `e = (1 - alpha) p2` and `E = (1 - alpha) P_2b`.
//! In these variables the grid power, the power budgets and the phase-2
//! energy constraint carry no `1/alpha` factors. Received powers are
//! normalized by the receiver noise.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::channels::{ChannelRealization, C64};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::model::{DesignPoint, Slacks};

use super::expcone::{tower_value, SocApproxConfig};

/// Lower bound on the time split, keeping `1/alpha` and `1/(1-alpha)` finite.
pub const ALPHA_MIN: f64 = 1e-3;

/// Floor on the DL SINR slacks; keeps the `|x|^2 / u` surrogate regular.
pub const U_MIN: f64 = 1e-6;

/// Accuracy target of the exp tower on the rate range.
pub const TOWER_TOL: f64 = 1e-8;

/// Channels divided by the receiver noise standard deviations.
#[derive(Debug, Clone)]
pub struct NormChannels {
    /// `h_i / sigma_i`.
    pub h: Vec<DVector<C64>>,
    /// `g_j / sigma_ul`.
    pub g: Vec<DVector<C64>>,
    /// `|g_ji|^2 / sigma_i^2`, indexed `[j][i]`.
    pub cross: Vec<Vec<f64>>,
    /// `H_on / sigma_ul`.
    pub hon: DMatrix<C64>,
    /// SI channel in physical units.
    pub hsi: DMatrix<C64>,
    /// `||g_j||^2` in physical units.
    pub g_pow: Vec<f64>,
}

impl NormChannels {
    pub fn new(cfg: &SystemConfig, ch: &ChannelRealization) -> Result<Self> {
        cfg.validate()?;
        ch.check_dims(cfg)?;
        if cfg.sigma2_dl.iter().any(|s| !(*s > 0.0)) || !(cfg.sigma2_ul > 0.0) {
            return Err(Error::InvalidConfig("noise powers must be positive".into()));
        }
        let sd: Vec<f64> = cfg.sigma2_dl.iter().map(|s| s.sqrt()).collect();
        let su = cfg.sigma2_ul.sqrt();
        let h = ch.h.iter().zip(&sd).map(|(h, s)| h.unscale(*s)).collect();
        let g = ch.g_ul.iter().map(|g| g.unscale(su)).collect();
        let cross = ch
            .g_cross
            .iter()
            .map(|row| row.iter().zip(&cfg.sigma2_dl).map(|(c, s)| c.norm_sqr() / s).collect())
            .collect();
        Ok(Self {
            h,
            g,
            cross,
            hon: ch.h_on.unscale(su),
            hsi: ch.h_si.clone(),
            g_pow: ch.g_ul.iter().map(|g| g.norm_squared()).collect(),
        })
    }

    /// Upper bound on any log-SINR (nats) reachable under the budgets.
    pub fn rate_cap(&self, cfg: &SystemConfig) -> f64 {
        let dl = self.h.iter().map(|h| h.norm_squared() * cfg.p_b_max).fold(0.0, f64::max);
        let ul = self.g.iter().map(|g| g.norm_squared() * cfg.p_u_max).fold(0.0, f64::max);
        (dl.max(ul) / ALPHA_MIN).ln_1p() + 1e-6
    }
}

/// Exp-tower settings shared by every subproblem of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TowerPlan {
    pub approx: SocApproxConfig,
    /// The subproblem enforces `(1 + u) >= (1 + delta) T_m(r)`, which with
    /// `T_m >= (1 - err) e^r` guarantees `r <= ln(1 + u)`.
    pub delta: f64,
}

impl TowerPlan {
    pub fn new(approx: SocApproxConfig) -> Result<Self> {
        approx.validate()?;
        let err = approx.max_rel_error();
        if err >= 0.5 {
            return Err(Error::ExpRange { range: approx.z_max, level: approx.level, max: 0.5 });
        }
        Ok(Self { approx, delta: err / (1.0 - err) })
    }

    pub fn for_instance(cfg: &SystemConfig, nc: &NormChannels) -> Result<Self> {
        Self::new(SocApproxConfig::for_range(nc.rate_cap(cfg), TOWER_TOL)?)
    }

    /// Largest tower-feasible `r` for SINR slack `u`.
    pub fn rate_for(&self, u: f64) -> f64 {
        let r = (u.max(0.0).ln_1p() - self.delta.ln_1p()).clamp(0.0, self.approx.z_max);
        // The closed form is feasible up to rounding; nudge down if needed.
        let lhs = (1.0 + u) / (1.0 + self.delta);
        if tower_value(r, self.approx.level) <= lhs {
            r
        } else {
            (r - 1e-12 * (1.0 + r)).max(0.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Two-phase protocol with self-energy recycling.
    Harvest,
    /// `alpha` pinned to [`ALPHA_MIN`], no phase-1 transmission, no harvesting.
    Baseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledPoint {
    pub alpha: f64,
    pub w1: Vec<DVector<C64>>,
    pub p1: Vec<f64>,
    pub v: Vec<DMatrix<C64>>,
    pub e: Vec<f64>,
    pub big_e: f64,
    pub slacks: Slacks,
}

/// Principal eigenpair of a Hermitian matrix: `(sqrt(l1) v1, l1 / l2)`.
pub fn principal_component(w: &DMatrix<C64>) -> (DVector<C64>, f64) {
    let n = w.nrows();
    if n == 0 {
        return (DVector::zeros(0), f64::INFINITY);
    }
    let herm = (w + w.adjoint()) * C64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|a, b| eig.eigenvalues[*b].total_cmp(&eig.eigenvalues[*a]));
    let l1 = eig.eigenvalues[idx[0]].max(0.0);
    let l2 = if n > 1 { eig.eigenvalues[idx[1]].max(0.0) } else { 0.0 };
    let mut v = eig.eigenvectors.column(idx[0]).into_owned();
    // Fix the global phase: largest-magnitude entry real positive.
    if let Some((k, _)) = v.iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())) {
        let ph = v[k].norm();
        if ph > 0.0 {
            let rot = v[k].conj() / ph;
            v *= rot;
        }
    }
    let ratio = if l2 > 0.0 { l1 / l2 } else { f64::INFINITY };
    (v * C64::new(l1.sqrt(), 0.0), ratio)
}

impl ScaledPoint {
    pub fn from_design(dp: &DesignPoint) -> Self {
        let a = dp.alpha;
        let ab = 1.0 - a;
        Self {
            alpha: a,
            w1: dp.w1.iter().map(|w| w * C64::new(a.sqrt(), 0.0)).collect(),
            p1: dp.p1.iter().map(|p| p * a).collect(),
            v: dp.w2_mat.iter().map(|m| m * C64::new(ab, 0.0)).collect(),
            e: dp.p2.iter().map(|p| p * ab).collect(),
            big_e: dp.p2b * ab,
            slacks: dp.slacks.clone(),
        }
    }

    /// Back to physical units; phase-2 beams are the principal components
    /// of `W2`.
    pub fn to_design(&self) -> DesignPoint {
        let a = self.alpha;
        let ab = 1.0 - a;
        let w2_mat: Vec<DMatrix<C64>> = self.v.iter().map(|m| m.unscale(ab)).collect();
        DesignPoint {
            w1: self.w1.iter().map(|w| w.unscale(a.sqrt())).collect(),
            w2: w2_mat.iter().map(|m| principal_component(m).0).collect(),
            w2_mat,
            p1: self.p1.iter().map(|p| p / a).collect(),
            p2: self.e.iter().map(|p| p / ab).collect(),
            p2b: self.big_e / ab,
            alpha: a,
            slacks: self.slacks.clone(),
        }
    }

    /// `self + beta (self - prev)` in the primal variables, with powers and
    /// `alpha` clipped to their ranges. Slacks are left for [`Self::tighten`].
    pub fn extrapolate(&self, prev: &ScaledPoint, beta: f64, scheme: Scheme) -> ScaledPoint {
        let lin = |a: f64, b: f64| a + beta * (a - b);
        let alpha = match scheme {
            Scheme::Harvest => lin(self.alpha, prev.alpha).clamp(ALPHA_MIN, 1.0 - ALPHA_MIN),
            Scheme::Baseline => self.alpha,
        };
        let c = C64::new(beta, 0.0);
        ScaledPoint {
            alpha,
            w1: self.w1.iter().zip(&prev.w1).map(|(a, b)| a + (a - b) * c).collect(),
            p1: self.p1.iter().zip(&prev.p1).map(|(a, b)| lin(*a, *b).max(0.0)).collect(),
            v: self.v.iter().zip(&prev.v).map(|(a, b)| a + (a - b) * c).collect(),
            e: self.e.iter().zip(&prev.e).map(|(a, b)| lin(*a, *b).max(0.0)).collect(),
            big_e: self.big_e,
            slacks: Slacks::default(),
        }
    }

    /// Scales up beams whose SINR fell under the `U_MIN` floor. Returns
    /// false if a beam carries no signal at all.
    pub fn lift_floors(&mut self, nc: &NormChannels, scheme: Scheme) -> bool {
        let target = U_MIN * (1.0 + 1e-6);
        if scheme == Scheme::Harvest {
            for (i, u) in self.sinr_d1(nc).into_iter().enumerate() {
                if u < target {
                    if !(u > 0.0) {
                        return false;
                    }
                    self.w1[i] *= C64::new((target / u).sqrt(), 0.0);
                }
            }
        }
        let (_, u2) = self.sinr_d2(nc);
        for (i, u) in u2.into_iter().enumerate() {
            if u < target {
                if !(u > 0.0) {
                    return false;
                }
                self.v[i] *= C64::new(target / u, 0.0);
            }
        }
        true
    }

    /// Shrinks the phase-1 beams onto the SBS budget and the phase-1 UE
    /// powers onto the UE budgets.
    pub fn project_budgets(&mut self, p_b_max: f64, p_u_max: f64) {
        for (p1, e) in self.p1.iter_mut().zip(&mut self.e) {
            *e = e.min(p_u_max);
            *p1 = p1.min(p_u_max - *e);
        }
        let room = p_b_max - self.v.iter().map(|m| m.trace().re).sum::<f64>();
        let used: f64 = self.w1.iter().map(|w| w.norm_squared()).sum();
        if used > room && used > 0.0 {
            let k = C64::new((room.max(0.0) / used).sqrt(), 0.0);
            self.w1.iter_mut().for_each(|w| *w *= k);
        }
    }

    /// Fixed-point UL power control: each UE below its rate target scales its
    /// power by the SINR shortfall. Returns whether all targets were met
    /// within the UE budgets.
    pub fn meet_ul_targets(&mut self, cfg: &SystemConfig, nc: &NormChannels, plan: &TowerPlan, rbar_nats: &[f64]) -> Result<bool> {
        let ab = 1.0 - self.alpha;
        let need: Vec<f64> = rbar_nats
            .iter()
            .map(|r| (1.0 + plan.delta) * (r / ab).exp() * (1.0 + 1e-9) - 1.0)
            .collect();
        for _ in 0..50 {
            let u = self.sinr_u(nc)?;
            let mut done = true;
            for j in 0..self.e.len() {
                if rbar_nats[j] > 0.0 && u[j] < need[j] {
                    done = false;
                    let cap = cfg.p_u_max - self.p1[j];
                    if !(u[j] > 0.0) || self.e[j] >= cap {
                        return Ok(false);
                    }
                    self.e[j] = (self.e[j] * need[j] / u[j]).min(cap);
                }
            }
            if done {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Phase-1 DL SINRs.
    pub fn sinr_d1(&self, nc: &NormChannels) -> Vec<f64> {
        (0..self.w1.len())
            .map(|i| {
                let h = &nc.h[i];
                let num = h.dotc(&self.w1[i]).norm_sqr();
                let mut den = self.alpha;
                for (k, w) in self.w1.iter().enumerate() {
                    if k != i {
                        den += h.dotc(w).norm_sqr();
                    }
                }
                for (j, p) in self.p1.iter().enumerate() {
                    den += p * nc.cross[j][i];
                }
                num / den
            })
            .collect()
    }

    fn quad(h: &DVector<C64>, v: &DMatrix<C64>) -> f64 {
        (h.adjoint() * v * h)[(0, 0)].re
    }

    /// Phase-2 DL interference-plus-noise terms `b_i` and SINRs.
    pub fn sinr_d2(&self, nc: &NormChannels) -> (Vec<f64>, Vec<f64>) {
        let ab = 1.0 - self.alpha;
        let mut b = Vec::with_capacity(self.v.len());
        let mut u = Vec::with_capacity(self.v.len());
        for i in 0..self.v.len() {
            let h = &nc.h[i];
            let mut den = ab;
            for (k, v) in self.v.iter().enumerate() {
                if k != i {
                    den += Self::quad(h, v);
                }
            }
            for (j, e) in self.e.iter().enumerate() {
                den += e * nc.cross[j][i];
            }
            b.push(den);
            u.push(Self::quad(h, &self.v[i]).max(0.0) / den);
        }
        (b, u)
    }

    /// `Y_j = (1-alpha) I + sum_{l>j} e_l g_l g_l^H + H_on^H (sum V) H_on`.
    pub fn ul_interference(&self, nc: &NormChannels, j: usize) -> DMatrix<C64> {
        let mr = nc.hon.ncols();
        let mut y = DMatrix::<C64>::identity(mr, mr) * C64::new(1.0 - self.alpha, 0.0);
        let mut vs = DMatrix::<C64>::zeros(nc.hon.nrows(), nc.hon.nrows());
        for v in &self.v {
            vs += v;
        }
        y += nc.hon.adjoint() * vs * &nc.hon;
        for l in (j + 1)..self.e.len() {
            y += &nc.g[l] * nc.g[l].adjoint() * C64::new(self.e[l], 0.0);
        }
        y
    }

    pub fn sinr_u(&self, nc: &NormChannels) -> Result<Vec<f64>> {
        (0..self.e.len())
            .map(|j| {
                let y = self.ul_interference(nc, j);
                let chol = y.cholesky().ok_or(Error::Singular(j))?;
                let sol = chol.solve(&nc.g[j]);
                Ok(self.e[j] * nc.g[j].dotc(&sol).re.max(0.0))
            })
            .collect()
    }

    /// Harvested power `eta (sum ||H_si^H w1~||^2 + sum p1~ ||g||^2)`.
    pub fn harvested(&self, cfg: &SystemConfig, nc: &NormChannels) -> f64 {
        let hh = nc.hsi.adjoint();
        let si: f64 = self.w1.iter().map(|w| (&hh * w).norm_squared()).sum();
        let ul: f64 = self.p1.iter().zip(&nc.g_pow).map(|(p, g)| p * g).sum();
        cfg.eta * (si + ul)
    }

    /// Grid power in energy variables.
    pub fn grid(&self, cfg: &SystemConfig) -> f64 {
        let w: f64 = self.w1.iter().map(|w| w.norm_squared()).sum();
        w / cfg.epsilon
            + self.alpha * cfg.p_cir()
            + self.big_e
            + self.p1.iter().sum::<f64>()
            + self.e.iter().sum::<f64>()
    }

    /// Phase-2 energy shortfall that `E` has to cover, with the UL decoding
    /// charged at the scheduled rates `z_u` (nats).
    pub fn energy_need(&self, cfg: &SystemConfig, nc: &NormChannels, z_u: &[f64]) -> f64 {
        let tr: f64 = self.v.iter().map(|v| v.trace().re).sum();
        let dec: f64 = cfg.beta.iter().zip(z_u).map(|(b, z)| b * z).sum::<f64>() / std::f64::consts::LN_2;
        (1.0 - self.alpha) * cfg.p_cir() + dec + tr / cfg.epsilon - self.harvested(cfg, nc)
    }

    /// Sets every slack to its tightest feasible value for the current
    /// beams and powers, and `E` to its minimal feasible value.
    pub fn tighten(&mut self, cfg: &SystemConfig, nc: &NormChannels, plan: &TowerPlan, scheme: Scheme) -> Result<()> {
        let a = self.alpha;
        let ab = 1.0 - a;
        let mut s = Slacks::default();
        if scheme == Scheme::Harvest {
            s.u_d1 = self.sinr_d1(nc);
            s.r_d1 = s.u_d1.iter().map(|u| plan.rate_for(*u)).collect();
            s.z_d1 = s.r_d1.iter().map(|r| a * r).collect();
        } else {
            s.u_d1 = vec![0.0; cfg.k_d];
            s.r_d1 = vec![0.0; cfg.k_d];
            s.z_d1 = vec![0.0; cfg.k_d];
        }
        let (b, u2) = self.sinr_d2(nc);
        s.b = b;
        s.r_d2 = u2.iter().map(|u| plan.rate_for(*u)).collect();
        s.z_d2 = s.r_d2.iter().map(|r| ab * r).collect();
        s.u_d2 = u2;
        s.u_u = self.sinr_u(nc)?;
        s.r_u = s.u_u.iter().map(|u| plan.rate_for(*u)).collect();
        s.z_u = s.r_u.iter().map(|r| ab * r).collect();
        s.x = self.e.iter().map(|e| e.max(0.0).sqrt()).collect();
        self.big_e = self.energy_need(cfg, nc, &s.z_u).max(0.0);
        let g = self.grid(cfg);
        s.tau = 1.0 / g;
        let zsum: f64 = s.z_d1.iter().chain(&s.z_d2).chain(&s.z_u).sum();
        s.q = (zsum * s.tau).sqrt();
        self.slacks = s;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{draw_channels, ChannelGenConfig, Pathloss};
    use crate::model::{self, BeamPath, Phase};

    fn setup() -> (SystemConfig, ChannelRealization) {
        let cfg = SystemConfig::default();
        let gen = ChannelGenConfig { pathloss: Pathloss::Fixed { loss_db: 104.0 }, ..Default::default() };
        let ch = draw_channels(&cfg, &gen, 3).unwrap();
        (cfg, ch)
    }

    fn random_design(cfg: &SystemConfig, ch: &ChannelRealization) -> DesignPoint {
        let mut dp = DesignPoint::zeros(cfg, 0.3);
        for i in 0..cfg.k_d {
            dp.w1[i] = ch.h[i].normalize() * C64::new(0.7, 0.2);
            dp.w2[i] = ch.h[(i + 1) % cfg.k_d].normalize() * C64::new(0.4, -0.5);
        }
        dp.sync_matrices();
        dp.p1 = vec![0.05, 0.02];
        dp.p2 = vec![0.1, 0.15];
        dp.p2b = 0.7;
        dp
    }

    #[test]
    fn sinrs_match_model() {
        let (cfg, ch) = setup();
        let nc = NormChannels::new(&cfg, &ch).unwrap();
        let dp = random_design(&cfg, &ch);
        let sp = ScaledPoint::from_design(&dp);
        let u1 = sp.sinr_d1(&nc);
        let (_, u2) = sp.sinr_d2(&nc);
        let uu = sp.sinr_u(&nc).unwrap();
        for i in 0..cfg.k_d {
            let m1 = model::sinr_dl(&cfg, &ch, &dp, Phase::One, i).unwrap();
            let m2 = model::sinr_dl_w2(&cfg, &ch, &dp, i).unwrap();
            assert!((u1[i] - m1).abs() <= 1e-9 * m1, "{} vs {}", u1[i], m1);
            assert!((u2[i] - m2).abs() <= 1e-9 * m2);
        }
        for j in 0..cfg.k_u {
            let m = model::sinr_ul_w2(&cfg, &ch, &dp, j).unwrap();
            assert!((uu[j] - m).abs() <= 1e-9 * m);
        }
        let g = model::grid_power(&cfg, &ch, &dp).unwrap();
        assert!((sp.grid(&cfg) - g).abs() <= 1e-12 * g);
        let ph = model::harvested_power(&cfg, &ch, &dp).unwrap();
        assert!((sp.harvested(&cfg, &nc) - ph).abs() <= 1e-12 * ph.max(1e-30));
    }

    #[test]
    fn design_round_trip() {
        let (cfg, ch) = setup();
        let dp = random_design(&cfg, &ch);
        let back = ScaledPoint::from_design(&dp).to_design();
        assert!((back.p2b - dp.p2b).abs() < 1e-12);
        for i in 0..cfg.k_d {
            assert!((&back.w1[i] - &dp.w1[i]).norm() < 1e-12);
            assert!((&back.w2_mat[i] - &dp.w2_mat[i]).norm() < 1e-12);
            let r1 = &back.w2[i] * back.w2[i].adjoint();
            assert!((r1 - &dp.w2_mat[i]).norm() < 1e-10);
        }
        let e1 = model::ee(&cfg, &ch, &dp, BeamPath::Vectors).unwrap();
        let e2 = model::ee(&cfg, &ch, &back, BeamPath::Vectors).unwrap();
        assert!((e1 - e2).abs() < 1e-10 * e1);
    }

    #[test]
    fn tightened_rates_are_safe() {
        let (cfg, ch) = setup();
        let nc = NormChannels::new(&cfg, &ch).unwrap();
        let plan = TowerPlan::for_instance(&cfg, &nc).unwrap();
        let mut sp = ScaledPoint::from_design(&random_design(&cfg, &ch));
        sp.tighten(&cfg, &nc, &plan, Scheme::Harvest).unwrap();
        let s = &sp.slacks;
        for (u, r) in s.u_d1.iter().zip(&s.r_d1).chain(s.u_d2.iter().zip(&s.r_d2)).chain(s.u_u.iter().zip(&s.r_u)) {
            assert!(*r <= u.ln_1p() && *r >= u.ln_1p() - 1e-6);
        }
        assert!(sp.energy_need(&cfg, &nc, &s.z_u) <= sp.big_e + 1e-15);
        assert!((s.tau * sp.grid(&cfg) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn principal_component_cases() {
        let w = DVector::from_vec(vec![C64::new(0.3, 0.4), C64::new(-1.0, 0.2)]);
        let (v, ratio) = principal_component(&(&w * w.adjoint()));
        assert!(ratio > 1e12);
        assert!(((&v * v.adjoint()) - &w * w.adjoint()).norm() < 1e-12);
        let (_, ratio) = principal_component(&DMatrix::identity(2, 2));
        assert!((ratio - 1.0).abs() < 1e-12);
    }
}
