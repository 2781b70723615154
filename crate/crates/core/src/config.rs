//! Physical and algorithmic parameters of the full-duplex small cell.
//!
//! Field names follow the flat config-file keys (`M_T`, `P_b_max`, ...), so a
//! TOML file with those keys deserializes straight into [`SystemConfig`].
//! All powers are in watts, rates in bit/s/Hz, the block length `T` in
//! seconds (normalized to 1 so that energy and power coincide).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Converts a power in dBm to watts.
pub fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Converts a power in watts to dBm.
pub fn watt_to_dbm(watt: f64) -> f64 {
    10.0 * watt.log10() + 30.0
}

/// Converts a ratio in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SystemConfig {
    #[serde(rename = "M_T")]
    pub m_t: usize,
    #[serde(rename = "M_R")]
    pub m_r: usize,
    #[serde(rename = "K_D")]
    pub k_d: usize,
    #[serde(rename = "K_U")]
    pub k_u: usize,
    /// Block duration (s).
    #[serde(rename = "T")]
    pub block_s: f64,
    /// Harvester conversion efficiency.
    pub eta: f64,
    /// Power-amplifier efficiency.
    pub epsilon: f64,
    #[serde(rename = "P_rf")]
    pub p_rf: f64,
    #[serde(rename = "P_st")]
    pub p_st: f64,
    /// Decoder efficiency per UL UE (W per bit/s/Hz).
    pub beta: Vec<f64>,
    pub sigma2_dl: Vec<f64>,
    pub sigma2_ul: f64,
    /// Residual SI power ratio after cancellation (linear).
    pub sigma2_si: f64,
    #[serde(rename = "P_b_max")]
    pub p_b_max: f64,
    #[serde(rename = "P_u_max")]
    pub p_u_max: f64,
    /// Minimum UL rate per UE (bit/s/Hz).
    pub r_min_ul: Vec<f64>,
    pub bandwidth_hz: f64,
}

impl Default for SystemConfig {
    /// Assumed stand-in values for every system parameter.
    fn default() -> Self {
        let noise = dbm_to_watt(-104.0);
        let bandwidth_hz = 10e6;
        Self {
            m_t: 2,
            m_r: 2,
            k_d: 2,
            k_u: 2,
            block_s: 1.0,
            eta: 0.5,
            epsilon: 0.35,
            p_rf: 1.0,
            p_st: 5.0,
            beta: vec![0.5; 2],
            sigma2_dl: vec![noise; 2],
            sigma2_ul: noise,
            sigma2_si: db_to_linear(-110.0),
            p_b_max: dbm_to_watt(25.0),
            p_u_max: dbm_to_watt(23.0),
            r_min_ul: vec![1e6 / bandwidth_hz; 2],
            bandwidth_hz,
        }
    }
}

impl SystemConfig {
    /// Circuit power `M_T * P_rf + P_st`.
    pub fn p_cir(&self) -> f64 {
        self.m_t as f64 * self.p_rf + self.p_st
    }

    /// Rebuilds the per-UE vectors for new user counts, keeping the first
    /// entry of each as the common value.
    pub fn with_users(mut self, k_d: usize, k_u: usize) -> Self {
        let noise = self.sigma2_dl.first().copied().unwrap_or(self.sigma2_ul);
        let beta = self.beta.first().copied().unwrap_or(0.5);
        let rmin = self.r_min_ul.first().copied().unwrap_or(0.0);
        self.k_d = k_d;
        self.k_u = k_u;
        self.sigma2_dl = vec![noise; k_d];
        self.beta = vec![beta; k_u];
        self.r_min_ul = vec![rmin; k_u];
        self
    }

    pub fn with_antennas(mut self, m_t: usize, m_r: usize) -> Self {
        self.m_t = m_t;
        self.m_r = m_r;
        self
    }

    /// Sets every UL UE's minimum rate from a target in bit/s using
    /// `bandwidth_hz`.
    pub fn with_min_rate_bps(mut self, bps: f64) -> Self {
        let se = bps / self.bandwidth_hz;
        self.r_min_ul = vec![se; self.k_u];
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.m_t == 0 || self.m_r == 0 {
            return bad("antenna counts must be >= 1".into());
        }
        if self.k_d == 0 && self.k_u == 0 {
            return bad("need at least one DL or UL user".into());
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad(format!("eta must lie in (0,1], got {}", self.eta));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return bad(format!("epsilon must lie in (0,1], got {}", self.epsilon));
        }
        if self.beta.len() != self.k_u {
            return bad(format!("beta has {} entries, K_U = {}", self.beta.len(), self.k_u));
        }
        if self.r_min_ul.len() != self.k_u {
            return bad(format!(
                "r_min_ul has {} entries, K_U = {}",
                self.r_min_ul.len(),
                self.k_u
            ));
        }
        if self.sigma2_dl.len() != self.k_d {
            return bad(format!(
                "sigma2_dl has {} entries, K_D = {}",
                self.sigma2_dl.len(),
                self.k_d
            ));
        }
        let nonneg = [
            ("P_rf", self.p_rf),
            ("P_st", self.p_st),
            ("sigma2_ul", self.sigma2_ul),
            ("sigma2_si", self.sigma2_si),
            ("P_b_max", self.p_b_max),
            ("P_u_max", self.p_u_max),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        for v in self.beta.iter().chain(&self.sigma2_dl).chain(&self.r_min_ul) {
            if !(*v >= 0.0 && v.is_finite()) {
                return bad(format!("per-user parameters must be >= 0, got {v}"));
            }
        }
        if !(self.block_s > 0.0) || !(self.bandwidth_hz > 0.0) {
            return bad("T and bandwidth_hz must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_round_trip() {
        assert!((dbm_to_watt(30.0) - 1.0).abs() < 1e-12);
        assert!((dbm_to_watt(23.0) - 0.199_526_231_496_888).abs() < 1e-12);
        assert!((watt_to_dbm(dbm_to_watt(17.3)) - 17.3).abs() < 1e-12);
    }

    #[test]
    fn default_is_valid() {
        let cfg = SystemConfig::default();
        cfg.validate().unwrap();
        assert!((cfg.p_cir() - 7.0).abs() < 1e-12);
        assert!((cfg.r_min_ul[0] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn rejects_mismatched_beta() {
        let mut cfg = SystemConfig::default();
        cfg.beta.pop();
        assert!(cfg.validate().is_err());
        let cfg = SystemConfig { eta: 0.0, ..SystemConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn flat_toml_keys() {
        let cfg: SystemConfig = toml::from_str("M_T = 1\nM_R = 1\nP_b_max = 0.3\n").unwrap();
        assert_eq!(cfg.m_t, 1);
        assert_eq!(cfg.m_r, 1);
        assert!((cfg.p_b_max - 0.3).abs() < 1e-15);
        assert_eq!(cfg.k_d, 2);
    }
}
