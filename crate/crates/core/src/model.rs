//! Physical quantities of the two-phase protocol: SINRs, rates, harvested
//! self-energy, grid power and the energy-efficiency ratio.
//!
//! Phase 1 (fraction `alpha`) has SIC off: DL UEs are served and the SBS
//! harvests the SI plus the UL energy signals. Phase 2 has SIC on and carries
//! DL and UL data. Phase-2 quantities can be evaluated either from the
//! beamforming vectors `w2` or from the covariance matrices `W2`; the two
//! agree whenever `W2 = w2 w2^H`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::channels::{ChannelRealization, C64};
use crate::config::SystemConfig;
use crate::error::{Error, Result};

/// Minimum-eigenvalue tolerance for the PSD invariant of `W2`.
pub const TOL_PSD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    One,
    Two,
}

/// Which representation of the phase-2 DL beams to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BeamPath {
    Vectors,
    Matrices,
}

/// Auxiliary variables of the convexified program, in its scaled units
/// (rates in nats, received powers normalized by noise).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Slacks {
    pub z_d1: Vec<f64>,
    pub z_d2: Vec<f64>,
    pub z_u: Vec<f64>,
    pub u_d1: Vec<f64>,
    pub u_d2: Vec<f64>,
    pub u_u: Vec<f64>,
    /// Log-SINR slacks, `r <= ln(1 + u)`.
    pub r_d1: Vec<f64>,
    pub r_d2: Vec<f64>,
    pub r_u: Vec<f64>,
    /// Phase-2 DL interference-plus-noise slacks.
    pub b: Vec<f64>,
    /// `x_j^2 <= (1 - alpha) p_{2,j}`.
    pub x: Vec<f64>,
    /// Inverse grid power slack.
    pub tau: f64,
    /// Square root of the energy efficiency (nats/J).
    pub q: f64,
}

/// Every decision variable of the design at one iterate, in physical units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    pub w1: Vec<DVector<C64>>,
    pub w2: Vec<DVector<C64>>,
    pub w2_mat: Vec<DMatrix<C64>>,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub p2b: f64,
    pub alpha: f64,
    pub slacks: Slacks,
}

impl DesignPoint {
    /// All-zero transmission at the given time split.
    pub fn zeros(cfg: &SystemConfig, alpha: f64) -> Self {
        Self {
            w1: vec![DVector::zeros(cfg.m_t); cfg.k_d],
            w2: vec![DVector::zeros(cfg.m_t); cfg.k_d],
            w2_mat: vec![DMatrix::zeros(cfg.m_t, cfg.m_t); cfg.k_d],
            p1: vec![0.0; cfg.k_u],
            p2: vec![0.0; cfg.k_u],
            p2b: 0.0,
            alpha,
            slacks: Slacks::default(),
        }
    }

    /// Sets `W2[i] = w2[i] w2[i]^H`.
    pub fn sync_matrices(&mut self) {
        self.w2_mat = self.w2.iter().map(|w| w * w.adjoint()).collect();
    }

    pub fn check(&self, cfg: &SystemConfig) -> Result<()> {
        let dims = self.w1.len() == cfg.k_d
            && self.w2.len() == cfg.k_d
            && self.w2_mat.len() == cfg.k_d
            && self.w1.iter().chain(&self.w2).all(|w| w.len() == cfg.m_t)
            && self.w2_mat.iter().all(|m| m.shape() == (cfg.m_t, cfg.m_t))
            && self.p1.len() == cfg.k_u
            && self.p2.len() == cfg.k_u;
        if !dims {
            return Err(Error::Dimension("design point does not match config".into()));
        }
        if self.p1.iter().chain(&self.p2).chain(std::iter::once(&self.p2b)).any(|p| !(*p >= 0.0)) {
            return Err(Error::NegativePower("UL powers and P_2b must be >= 0".into()));
        }
        Ok(())
    }

    /// Full invariant check: dimensions, powers, `alpha` strictly inside
    /// (0,1) and each `W2[i]` Hermitian PSD.
    pub fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        self.check(cfg)?;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Domain(format!("alpha = {} outside (0,1)", self.alpha)));
        }
        for (i, w) in self.w2_mat.iter().enumerate() {
            let herm = (w - w.adjoint()).norm() <= 1e-9 * (1.0 + w.norm());
            if !herm || min_eigenvalue(w) < -TOL_PSD * (1.0 + w.norm()) {
                return Err(Error::Domain(format!("W2[{i}] not Hermitian PSD")));
            }
        }
        Ok(())
    }
}

pub(crate) fn min_eigenvalue(w: &DMatrix<C64>) -> f64 {
    if w.nrows() == 0 {
        return 0.0;
    }
    let herm = (w + w.adjoint()) * C64::new(0.5, 0.0);
    herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

fn quad(h: &DVector<C64>, w: &DMatrix<C64>) -> f64 {
    (h.adjoint() * w * h)[(0, 0)].re
}

fn inner(a: &DVector<C64>, b: &DVector<C64>) -> C64 {
    a.dotc(b)
}

fn prep(cfg: &SystemConfig, ch: &ChannelRealization, dp: &DesignPoint) -> Result<()> {
    dp.check(cfg)?;
    ch.check_dims(cfg)
}

/// DL SINR of UE `i` in the given phase from the beamforming vectors.
pub fn sinr_dl(cfg: &SystemConfig, ch: &ChannelRealization, dp: &DesignPoint, phase: Phase, i: usize) -> Result<f64> {
    prep(cfg, ch, dp)?;
    if i >= cfg.k_d {
        return Err(Error::Dimension(format!("DL UE index {i} >= K_D")));
    }
    let (w, p) = match phase {
        Phase::One => (&dp.w1, &dp.p1),
        Phase::Two => (&dp.w2, &dp.p2),
    };
    let h = &ch.h[i];
    let num = inner(h, &w[i]).norm_sqr();
    let mut den = cfg.sigma2_dl[i];
    for (k, wk) in w.iter().enumerate() {
        if k != i {
            den += inner(h, wk).norm_sqr();
        }
    }
    for j in 0..cfg.k_u {
        den += p[j] * ch.g_cross[j][i].norm_sqr();
    }
    Ok(num / den)
}

/// Phase-2 DL SINR of UE `i` from the covariance matrices `W2`.
pub fn sinr_dl_w2(cfg: &SystemConfig, ch: &ChannelRealization, dp: &DesignPoint, i: usize) -> Result<f64> {
    prep(cfg, ch, dp)?;
    if i >= cfg.k_d {
        return Err(Error::Dimension(format!("DL UE index {i} >= K_D")));
    }
    let h = &ch.h[i];
    let num = quad(h, &dp.w2_mat[i]);
    let mut den = cfg.sigma2_dl[i];
    for (k, wk) in dp.w2_mat.iter().enumerate() {
        if k != i {
            den += quad(h, wk);
        }
    }
    for j in 0..cfg.k_u {
        den += dp.p2[j] * ch.g_cross[j][i].norm_sqr();
    }
    Ok(num.max(0.0) / den)
}

/// Sum of the SI covariance seen at the SBS receiver in phase 2.
fn si_covariance(ch: &ChannelRealization, dp: &DesignPoint, path: BeamPath) -> DMatrix<C64> {
    let hon = &ch.h_on;
    let mut sum = DMatrix::<C64>::zeros(hon.nrows(), hon.nrows());
    match path {
        BeamPath::Vectors => {
            for w in &dp.w2 {
                sum += w * w.adjoint();
            }
        }
        BeamPath::Matrices => {
            for w in &dp.w2_mat {
                sum += w;
            }
        }
    }
    hon.adjoint() * sum * hon
}

fn ul_sinr_impl(cfg: &SystemConfig, ch: &ChannelRealization, dp: &DesignPoint, j: usize, path: BeamPath) -> Result<f64> {
    prep(cfg, ch, dp)?;
    if j >= cfg.k_u {
        return Err(Error::Dimension(format!("UL UE index {j} >= K_U")));
    }
    let mut x = si_covariance(ch, dp, path);
    for d in 0..cfg.m_r {
        x[(d, d)] += C64::new(cfg.sigma2_ul, 0.0);
    }
    for l in (j + 1)..cfg.k_u {
        let g = &ch.g_ul[l];
        x += g * g.adjoint() * C64::new(dp.p2[l], 0.0);
    }
    let g = &ch.g_ul[j];
    let chol = x.cholesky().ok_or(Error::Singular(j))?;
    let sol = chol.solve(g);
    Ok(dp.p2[j] * inner(g, &sol).re.max(0.0))
}

/// UL SINR of UE `j` under MMSE-SIC with ascending decoding order.
pub fn sinr_ul(cfg: &SystemConfig, ch: &ChannelRealization, dp: &DesignPoint, j: usize) -> Result<f64> {
    ul_sinr_impl(cfg, ch, dp, j, BeamPath::Vectors)
}

/// UL SINR with the SI term built from `W2`.
pub fn sinr_ul_w2(cfg: &SystemConfig, ch: &ChannelRealization, dp: &DesignPoint, j: usize) -> Result<f64> {
    ul_sinr_impl(cfg, ch, dp, j, BeamPath::Matrices)
}

fn sinr_dl2_path(cfg: &SystemConfig, ch: &ChannelRealization, dp: &DesignPoint, i: usize, path: BeamPath) -> Result<f64> {
    match path {
        BeamPath::Vectors => sinr_dl(cfg, ch, dp, Phase::Two, i),
        BeamPath::Matrices => sinr_dl_w2(cfg, ch, dp, i),
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha = {alpha} outside (0,1)")))
    }
}

/// `alpha log2(1+g1) + (1-alpha) log2(1+g2)`.
pub fn dl_rate_from_sinr(alpha: f64, g1: f64, g2: f64) -> f64 {
    alpha * g1.ln_1p() / std::f64::consts::LN_2 + (1.0 - alpha) * g2.ln_1p() / std::f64::consts::LN_2
}

pub fn ul_rate_from_sinr(alpha: f64, g: f64) -> f64 {
    (1.0 - alpha) * g.ln_1p() / std::f64::consts::LN_2
}

pub fn rate_dl(cfg: &SystemConfig, ch: &ChannelRealization, dp: &DesignPoint, i: usize, path: BeamPath) -> Result<f64> {
    check_alpha(dp.alpha)?;
    let g1 = sinr_dl(cfg, ch, dp, Phase::One, i)?;
    let g2 = sinr_dl2_path(cfg, ch, dp, i, path)?;
    Ok(dl_rate_from_sinr(dp.alpha, g1, g2))
}

pub fn rate_ul(cfg: &SystemConfig, ch: &ChannelRealization, dp: &DesignPoint, j: usize, path: BeamPath) -> Result<f64> {
    check_alpha(dp.alpha)?;
    Ok(ul_rate_from_sinr(dp.alpha, ul_sinr_impl(cfg, ch, dp, j, path)?))
}

/// Harvested power `P_H = eta alpha (sum ||H^H w1||^2 + sum p1 ||g||^2)`,
/// noise excluded.
pub fn harvested_power(cfg: &SystemConfig, ch: &ChannelRealization, dp: &DesignPoint) -> Result<f64> {
    prep(cfg, ch, dp)?;
    let hh = ch.h_si.adjoint();
    let si: f64 = dp.w1.iter().map(|w| (&hh * w).norm_squared()).sum();
    let ul: f64 = dp.p1.iter().zip(&ch.g_ul).map(|(p, g)| p * g.norm_squared()).sum();
    Ok(cfg.eta * dp.alpha * (si + ul))
}

/// Grid power `g = P_b + P_u` (W).
pub fn grid_power(cfg: &SystemConfig, ch: &ChannelRealization, dp: &DesignPoint) -> Result<f64> {
    prep(cfg, ch, dp)?;
    let a = dp.alpha;
    let pb = dp.w1.iter().map(|w| a * w.norm_squared() / cfg.epsilon).sum::<f64>()
        + a * cfg.p_cir()
        + (1.0 - a) * dp.p2b;
    let pu: f64 = dp.p1.iter().zip(&dp.p2).map(|(p1, p2)| a * p1 + (1.0 - a) * p2).sum();
    Ok(pb + pu)
}

/// Sum throughput `f` (bit/s/Hz).
pub fn throughput(cfg: &SystemConfig, ch: &ChannelRealization, dp: &DesignPoint, path: BeamPath) -> Result<f64> {
    let mut f = 0.0;
    for i in 0..cfg.k_d {
        f += rate_dl(cfg, ch, dp, i, path)?;
    }
    for j in 0..cfg.k_u {
        f += rate_ul(cfg, ch, dp, j, path)?;
    }
    Ok(f)
}

/// Energy efficiency `f / g` in bit/s/Hz per W.
pub fn ee(cfg: &SystemConfig, ch: &ChannelRealization, dp: &DesignPoint, path: BeamPath) -> Result<f64> {
    let g = grid_power(cfg, ch, dp)?;
    if !(g > 0.0) {
        return Err(Error::ZeroDenominator);
    }
    Ok(throughput(cfg, ch, dp, path)? / g)
}

/// Total SBS consumption including the rate-dependent decoding power,
/// `sum alpha ||w1||^2/eps + (1-alpha)(sum ||w2||^2/eps + sum beta_j R_j) + P_cir`.
pub fn consumed_power_sbs(cfg: &SystemConfig, dp: &DesignPoint, rates_ul: &[f64], path: BeamPath) -> Result<f64> {
    dp.check(cfg)?;
    if rates_ul.len() != cfg.k_u {
        return Err(Error::Dimension("one UL rate per UL UE expected".into()));
    }
    let a = dp.alpha;
    let ph1: f64 = dp.w1.iter().map(|w| w.norm_squared()).sum::<f64>() * a / cfg.epsilon;
    let tx2: f64 = match path {
        BeamPath::Vectors => dp.w2.iter().map(|w| w.norm_squared()).sum(),
        BeamPath::Matrices => dp.w2_mat.iter().map(|w| w.trace().re).sum(),
    };
    let dec: f64 = cfg.beta.iter().zip(rates_ul).map(|(b, r)| b * r).sum();
    Ok(ph1 + (1.0 - a) * (tx2 / cfg.epsilon + dec) + cfg.p_cir())
}

/// Violations of the original problem's constraints at a design point.
/// Positive entries are violations in the constraint's own units.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    /// `r_min - R^U_j` per UL UE.
    pub ul_rate: Vec<f64>,
    pub sbs_power: f64,
    pub ue_power: Vec<f64>,
    pub second_phase_energy: f64,
    pub alpha: f64,
}

impl ConstraintReport {
    pub fn max_violation(&self) -> f64 {
        self.ul_rate
            .iter()
            .chain(&self.ue_power)
            .chain([self.sbs_power, self.second_phase_energy, self.alpha].iter())
            .fold(f64::NEG_INFINITY, |m, v| m.max(*v))
    }
}

pub fn check_original_constraints(
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    dp: &DesignPoint,
    path: BeamPath,
) -> Result<ConstraintReport> {
    prep(cfg, ch, dp)?;
    let a = dp.alpha;
    let mut gam = Vec::with_capacity(cfg.k_u);
    for j in 0..cfg.k_u {
        gam.push(ul_sinr_impl(cfg, ch, dp, j, path)?);
    }
    let ul_rate = gam.iter().zip(&cfg.r_min_ul).map(|(g, r)| r - ul_rate_from_sinr(a, *g)).collect();
    let tx2: f64 = match path {
        BeamPath::Vectors => dp.w2.iter().map(|w| w.norm_squared()).sum(),
        BeamPath::Matrices => dp.w2_mat.iter().map(|w| w.trace().re).sum(),
    };
    let tx1: f64 = dp.w1.iter().map(|w| w.norm_squared()).sum();
    let sbs_power = a * tx1 + (1.0 - a) * tx2 - cfg.p_b_max;
    let ue_power = dp.p1.iter().zip(&dp.p2).map(|(p1, p2)| a * p1 + (1.0 - a) * p2 - cfg.p_u_max).collect();
    let dec: f64 = cfg.beta.iter().zip(&gam).map(|(b, g)| b * g.ln_1p() / std::f64::consts::LN_2).sum();
    let lhs = (1.0 - a) * (cfg.p_cir() + dec + tx2 / cfg.epsilon);
    let rhs = harvested_power(cfg, ch, dp)? + (1.0 - a) * dp.p2b;
    let alpha = if a > 0.0 && a < 1.0 { f64::NEG_INFINITY } else { 1.0 };
    Ok(ConstraintReport { ul_rate, sbs_power, ue_power, second_phase_energy: lhs - rhs, alpha })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn scalar_channel(k_d: usize, k_u: usize) -> ChannelRealization {
        ChannelRealization {
            h: vec![DVector::from_element(1, c(1.0)); k_d],
            g_ul: vec![DVector::from_element(1, c(1.0)); k_u],
            g_cross: vec![vec![c(1.0); k_d]; k_u],
            h_si: DMatrix::from_element(1, 1, c(1.0)),
            h_on: DMatrix::zeros(1, 1),
            seed: 0,
            trial: 0,
        }
    }

    fn scalar_cfg(k_d: usize, k_u: usize) -> SystemConfig {
        let mut cfg = SystemConfig::default().with_antennas(1, 1).with_users(k_d, k_u);
        cfg.sigma2_dl = vec![1.0; k_d];
        cfg.sigma2_ul = 1.0;
        cfg
    }

    #[test]
    fn dl_sinr_single_user_identity() {
        let cfg = scalar_cfg(1, 0);
        let ch = scalar_channel(1, 0);
        let mut dp = DesignPoint::zeros(&cfg, 0.5);
        dp.w1[0][0] = c(1.0);
        assert!((sinr_dl(&cfg, &ch, &dp, Phase::One, 0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(sinr_dl(&cfg, &ch, &DesignPoint::zeros(&cfg, 0.5), Phase::Two, 0).unwrap(), 0.0);
    }

    #[test]
    fn dl_sinr_two_users_one_ul() {
        let cfg = scalar_cfg(2, 1);
        let ch = scalar_channel(2, 1);
        let mut dp = DesignPoint::zeros(&cfg, 0.5);
        dp.w1[0][0] = c(2.0);
        dp.w1[1][0] = c(1.0);
        dp.p1[0] = 1.0;
        let g = sinr_dl(&cfg, &ch, &dp, Phase::One, 0).unwrap();
        assert!((g - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ul_sinr_scalar_cases() {
        let cfg = scalar_cfg(0, 1);
        let ch = scalar_channel(0, 1);
        let mut dp = DesignPoint::zeros(&cfg, 0.5);
        dp.p2[0] = 1.0;
        assert!((sinr_ul(&cfg, &ch, &dp, 0).unwrap() - 1.0).abs() < 1e-15);
        dp.p2[0] = 0.0;
        assert_eq!(sinr_ul(&cfg, &ch, &dp, 0).unwrap(), 0.0);

        let cfg = scalar_cfg(0, 2);
        let ch = scalar_channel(0, 2);
        let mut dp = DesignPoint::zeros(&cfg, 0.5);
        dp.p2 = vec![1.0, 1.0];
        // First-decoded UE sees the second as interference.
        assert!((sinr_ul(&cfg, &ch, &dp, 0).unwrap() - 0.5).abs() < 1e-15);
        assert!((sinr_ul(&cfg, &ch, &dp, 1).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rates_from_sinr() {
        assert_eq!(dl_rate_from_sinr(0.3, 0.0, 0.0), 0.0);
        assert!((dl_rate_from_sinr(0.5, 1.0, 3.0) - 1.5).abs() < 1e-15);
        for a in [0.1, 0.5, 0.9] {
            assert!((ul_rate_from_sinr(a, 1.0) - (1.0 - a)).abs() < 1e-15);
        }
    }

    #[test]
    fn harvested_power_closed_form() {
        let mut cfg = scalar_cfg(1, 1);
        cfg.eta = 1.0;
        let mut ch = scalar_channel(1, 1);
        ch.h_si = DMatrix::from_element(1, 1, C64::new(1.0, 1.0));
        let mut dp = DesignPoint::zeros(&cfg, 0.5);
        dp.w1[0][0] = c(1.0);
        // ||H^H w||^2 = 2, eta = 1, alpha = 0.5.
        assert!((harvested_power(&cfg, &ch, &dp).unwrap() - 1.0).abs() < 1e-15);
        let before = harvested_power(&cfg, &ch, &dp).unwrap();
        dp.w1[0] *= c(2f64.sqrt());
        assert!((harvested_power(&cfg, &ch, &dp).unwrap() - 2.0 * before).abs() < 1e-14);
        assert_eq!(harvested_power(&cfg, &ch, &DesignPoint::zeros(&cfg, 0.5)).unwrap(), 0.0);
    }

    #[test]
    fn grid_power_example() {
        let mut cfg = scalar_cfg(1, 1);
        cfg.epsilon = 1.0;
        cfg.p_rf = 0.5;
        cfg.p_st = 0.5;
        let ch = scalar_channel(1, 1);
        let mut dp = DesignPoint::zeros(&cfg, 0.5);
        dp.w1[0][0] = c(1.0);
        dp.p2b = 1.0;
        assert!((grid_power(&cfg, &ch, &dp).unwrap() - 1.5).abs() < 1e-15);
        let idle = DesignPoint::zeros(&cfg, 0.5);
        assert_eq!(ee(&cfg, &ch, &idle, BeamPath::Vectors).unwrap(), 0.0);
    }

    #[test]
    fn consumed_power_cases() {
        let mut cfg = scalar_cfg(1, 1);
        cfg.beta = vec![0.0];
        let dp = DesignPoint::zeros(&cfg, 0.5);
        assert!((consumed_power_sbs(&cfg, &dp, &[0.7], BeamPath::Vectors).unwrap() - cfg.p_cir()).abs() < 1e-15);
        cfg.beta = vec![2.0];
        let dp0 = DesignPoint { alpha: 0.0, ..DesignPoint::zeros(&cfg, 0.0) };
        let v = consumed_power_sbs(&cfg, &dp0, &[1.5], BeamPath::Vectors).unwrap();
        assert!((v - (cfg.p_cir() + 3.0)).abs() < 1e-15);
        let mut dp1 = DesignPoint::zeros(&cfg, 1.0);
        dp1.w2[0][0] = c(5.0);
        let v = consumed_power_sbs(&cfg, &dp1, &[9.0], BeamPath::Vectors).unwrap();
        assert!((v - cfg.p_cir()).abs() < 1e-15);
    }

    #[test]
    fn errors_are_reported() {
        let cfg = scalar_cfg(1, 1);
        let ch = scalar_channel(1, 1);
        let mut dp = DesignPoint::zeros(&cfg, 0.5);
        dp.p1[0] = -1.0;
        assert!(matches!(sinr_dl(&cfg, &ch, &dp, Phase::One, 0), Err(Error::NegativePower(_))));
        let mut dp = DesignPoint::zeros(&cfg, 0.5);
        dp.w1.push(DVector::zeros(1));
        assert!(matches!(sinr_dl(&cfg, &ch, &dp, Phase::One, 0), Err(Error::Dimension(_))));
        let dp = DesignPoint::zeros(&cfg, 0.5);
        assert!(matches!(sinr_ul(&cfg, &ch, &dp, 3), Err(Error::Dimension(_))));
        let zero = SystemConfig { p_rf: 0.0, p_st: 0.0, ..cfg.clone() };
        let dp = DesignPoint::zeros(&zero, 0.5);
        assert!(matches!(ee(&zero, &ch, &dp, BeamPath::Vectors), Err(Error::ZeroDenominator)));
    }

    #[test]
    fn validate_rejects_non_psd() {
        let cfg = scalar_cfg(1, 1);
        let mut dp = DesignPoint::zeros(&cfg, 0.5);
        dp.validate(&cfg).unwrap();
        dp.w2_mat[0][(0, 0)] = c(-1.0);
        assert!(dp.validate(&cfg).is_err());
        let dp = DesignPoint::zeros(&cfg, 1.0);
        assert!(dp.validate(&cfg).is_err());
    }
}
