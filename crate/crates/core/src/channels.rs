//! Seeded channel generation.
//!
//! UE links are i.i.d. CN(0,1), optionally scaled by a large-scale loss.
//! The SI channels are Rician around an all-ones LoS matrix:
//! `H_on ~ CN(sqrt(s K/(K+1)) Hbar, s/(K+1) I)` with `s = sigma2_si`, and the
//! SIC-off channel uses the same form with `s = 1`.
//!
//! Every realization is a pure function of `(seed, trial_index)`: the trial
//! index selects a ChaCha stream, so trials can be drawn in any order or in
//! parallel.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::{db_to_linear, SystemConfig};
use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Pathloss {
    /// Pure CN(0,1) on every UE link.
    #[default]
    Off,
    /// One common loss on every UE link (an assumed default).
    Fixed { loss_db: f64 },
    /// `ref_loss_db + 10 * exponent * log10(d / 1 m)` with UEs placed in the
    /// cell (an assumed default).
    LogDistance { exponent: f64, ref_loss_db: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LosMatrix {
    #[default]
    AllOnes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelGenConfig {
    #[serde(rename = "rician_K")]
    pub rician_k: f64,
    pub sigma2_si: f64,
    #[serde(rename = "H_bar")]
    pub h_bar: LosMatrix,
    pub cell_radius_m: f64,
    /// Place UEs uniformly in the disk (only matters for log-distance loss).
    pub placement: bool,
    pub pathloss: Pathloss,
    pub seed: u64,
}

impl Default for ChannelGenConfig {
    fn default() -> Self {
        Self {
            rician_k: 1.0,
            sigma2_si: db_to_linear(-110.0),
            h_bar: LosMatrix::AllOnes,
            cell_radius_m: 100.0,
            placement: true,
            pathloss: Pathloss::Off,
            seed: 1,
        }
    }
}

impl ChannelGenConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rician_k >= 0.0) {
            return Err(Error::InvalidConfig(format!("rician_K must be >= 0, got {}", self.rician_k)));
        }
        if !(self.cell_radius_m > 0.0) {
            return Err(Error::InvalidConfig("cell_radius_m must be > 0".into()));
        }
        if !(self.sigma2_si >= 0.0) {
            return Err(Error::InvalidConfig("sigma2_si must be >= 0".into()));
        }
        Ok(())
    }
}

/// One draw of every channel in the cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// SBS -> DL UE `i`, length `M_T`.
    pub h: Vec<DVector<C64>>,
    /// UL UE `j` -> SBS, length `M_R`.
    pub g_ul: Vec<DVector<C64>>,
    /// `g_cross[j][i]`: UL UE `j` -> DL UE `i`.
    pub g_cross: Vec<Vec<C64>>,
    /// SI channel with SIC off (`M_T x M_R`).
    pub h_si: DMatrix<C64>,
    /// SI channel with SIC on (`M_T x M_R`).
    pub h_on: DMatrix<C64>,
    pub seed: u64,
    pub trial: u64,
}

impl ChannelRealization {
    pub fn check_dims(&self, cfg: &SystemConfig) -> Result<()> {
        let ok = self.h.len() == cfg.k_d
            && self.h.iter().all(|v| v.len() == cfg.m_t)
            && self.g_ul.len() == cfg.k_u
            && self.g_ul.iter().all(|v| v.len() == cfg.m_r)
            && self.g_cross.len() == cfg.k_u
            && self.g_cross.iter().all(|r| r.len() == cfg.k_d)
            && self.h_si.shape() == (cfg.m_t, cfg.m_r)
            && self.h_on.shape() == (cfg.m_t, cfg.m_r);
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension("channel realization does not match config".into()))
        }
    }

    pub fn is_finite(&self) -> bool {
        let fin = |c: &C64| c.re.is_finite() && c.im.is_finite();
        self.h.iter().all(|v| v.iter().all(fin))
            && self.g_ul.iter().all(|v| v.iter().all(fin))
            && self.g_cross.iter().all(|r| r.iter().all(fin))
            && self.h_si.iter().all(fin)
            && self.h_on.iter().all(fin)
    }
}

fn cn<R: Rng>(rng: &mut R) -> C64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * s, im * s)
}

fn rician<R: Rng>(rng: &mut R, rows: usize, cols: usize, power: f64, k: f64, los: LosMatrix) -> DMatrix<C64> {
    let (los_amp, nlos_amp) = if k.is_infinite() {
        (power.sqrt(), 0.0)
    } else {
        ((power * k / (k + 1.0)).sqrt(), (power / (k + 1.0)).sqrt())
    };
    let hbar = match los {
        LosMatrix::AllOnes => C64::new(1.0, 0.0),
    };
    // The scatter draw is always consumed so the stream layout does not
    // depend on K.
    DMatrix::from_fn(rows, cols, |_, _| hbar * los_amp + cn(rng) * nlos_amp)
}

/// Trial-specific RNG: `base_seed` keys the generator, `trial` picks the stream.
pub fn trial_rng(base_seed: u64, trial: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(base_seed);
    rng.set_stream(trial);
    rng
}

pub fn draw_channels(cfg: &SystemConfig, gen: &ChannelGenConfig, trial: u64) -> Result<ChannelRealization> {
    cfg.validate()?;
    gen.validate()?;
    let mut rng = trial_rng(gen.seed, trial);

    let mut h: Vec<DVector<C64>> =
        (0..cfg.k_d).map(|_| DVector::from_fn(cfg.m_t, |_, _| cn(&mut rng))).collect();
    let mut g_ul: Vec<DVector<C64>> =
        (0..cfg.k_u).map(|_| DVector::from_fn(cfg.m_r, |_, _| cn(&mut rng))).collect();
    let mut g_cross: Vec<Vec<C64>> =
        (0..cfg.k_u).map(|_| (0..cfg.k_d).map(|_| cn(&mut rng)).collect()).collect();
    let h_si = rician(&mut rng, cfg.m_t, cfg.m_r, 1.0, gen.rician_k, gen.h_bar);
    let h_on = rician(&mut rng, cfg.m_t, cfg.m_r, gen.sigma2_si, gen.rician_k, gen.h_bar);

    match gen.pathloss {
        Pathloss::Off => {}
        Pathloss::Fixed { loss_db } => {
            let a = db_to_linear(-loss_db).sqrt();
            h.iter_mut().for_each(|v| *v *= C64::new(a, 0.0));
            g_ul.iter_mut().for_each(|v| *v *= C64::new(a, 0.0));
            g_cross.iter_mut().flatten().for_each(|c| *c *= a);
        }
        Pathloss::LogDistance { exponent, ref_loss_db } => {
            let place = |rng: &mut ChaCha20Rng| -> (f64, f64) {
                if gen.placement {
                    let r = gen.cell_radius_m * rng.gen::<f64>().sqrt();
                    let th = std::f64::consts::TAU * rng.gen::<f64>();
                    (r * th.cos(), r * th.sin())
                } else {
                    (gen.cell_radius_m, 0.0)
                }
            };
            let dl: Vec<(f64, f64)> = (0..cfg.k_d).map(|_| place(&mut rng)).collect();
            let ul: Vec<(f64, f64)> = (0..cfg.k_u).map(|_| place(&mut rng)).collect();
            let amp = |d: f64| db_to_linear(-(ref_loss_db + 10.0 * exponent * d.max(1.0).log10())).sqrt();
            let dist = |a: (f64, f64), b: (f64, f64)| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
            for (v, p) in h.iter_mut().zip(&dl) {
                *v *= C64::new(amp(dist(*p, (0.0, 0.0))), 0.0);
            }
            for (j, (v, p)) in g_ul.iter_mut().zip(&ul).enumerate() {
                *v *= C64::new(amp(dist(*p, (0.0, 0.0))), 0.0);
                for (i, q) in dl.iter().enumerate() {
                    g_cross[j][i] *= amp(dist(*p, *q));
                }
            }
        }
    }

    Ok(ChannelRealization { h, g_ul, g_cross, h_si, h_on, seed: gen.seed, trial })
}

/// Portable text form: every complex number is an `[re, im]` pair,
/// matrices are row-major lists of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDump {
    pub seed: u64,
    pub trial: u64,
    pub h: Vec<Vec<[f64; 2]>>,
    pub g_ul: Vec<Vec<[f64; 2]>>,
    pub g_cross: Vec<Vec<[f64; 2]>>,
    pub h_si: Vec<Vec<[f64; 2]>>,
    pub h_on: Vec<Vec<[f64; 2]>>,
}

fn pair(c: &C64) -> [f64; 2] {
    [c.re, c.im]
}

fn vec_pairs(v: &DVector<C64>) -> Vec<[f64; 2]> {
    v.iter().map(pair).collect()
}

fn mat_pairs(m: &DMatrix<C64>) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| pair(&m[(r, c)])).collect()).collect()
}

fn pairs_mat(rows: &[Vec<[f64; 2]>]) -> Result<DMatrix<C64>> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != nc) {
        return Err(Error::Parse("ragged matrix in channel dump".into()));
    }
    Ok(DMatrix::from_fn(nr, nc, |r, c| C64::new(rows[r][c][0], rows[r][c][1])))
}

impl From<&ChannelRealization> for ChannelDump {
    fn from(ch: &ChannelRealization) -> Self {
        Self {
            seed: ch.seed,
            trial: ch.trial,
            h: ch.h.iter().map(vec_pairs).collect(),
            g_ul: ch.g_ul.iter().map(vec_pairs).collect(),
            g_cross: ch.g_cross.iter().map(|r| r.iter().map(pair).collect()).collect(),
            h_si: mat_pairs(&ch.h_si),
            h_on: mat_pairs(&ch.h_on),
        }
    }
}

impl TryFrom<ChannelDump> for ChannelRealization {
    type Error = Error;

    fn try_from(d: ChannelDump) -> Result<Self> {
        let to_vec = |v: &Vec<[f64; 2]>| DVector::from_iterator(v.len(), v.iter().map(|p| C64::new(p[0], p[1])));
        Ok(Self {
            h: d.h.iter().map(to_vec).collect(),
            g_ul: d.g_ul.iter().map(to_vec).collect(),
            g_cross: d.g_cross.iter().map(|r| r.iter().map(|p| C64::new(p[0], p[1])).collect()).collect(),
            h_si: pairs_mat(&d.h_si)?,
            h_on: pairs_mat(&d.h_on)?,
            seed: d.seed,
            trial: d.trial,
        })
    }
}

pub fn export_json(ch: &ChannelRealization) -> String {
    serde_json::to_string_pretty(&ChannelDump::from(ch)).expect("channel dump serializes")
}

pub fn import_json(text: &str) -> Result<ChannelRealization> {
    let dump: ChannelDump = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    dump.try_into()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SystemConfig {
        SystemConfig::default()
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let cfg = small();
        let gen = ChannelGenConfig::default();
        let a = draw_channels(&cfg, &gen, 7).unwrap();
        let b = draw_channels(&cfg, &gen, 7).unwrap();
        assert_eq!(a, b);
        let c = draw_channels(&cfg, &gen, 8).unwrap();
        assert_ne!(a.h, c.h);
        a.check_dims(&cfg).unwrap();
        assert!(a.is_finite());
    }

    #[test]
    fn infinite_k_is_pure_los() {
        let cfg = small();
        let gen = ChannelGenConfig { rician_k: f64::INFINITY, ..ChannelGenConfig::default() };
        let ch = draw_channels(&cfg, &gen, 0).unwrap();
        let amp = gen.sigma2_si.sqrt();
        for c in ch.h_on.iter() {
            assert_eq!(*c, C64::new(amp, 0.0));
        }
        for c in ch.h_si.iter() {
            assert_eq!(*c, C64::new(1.0, 0.0));
        }
    }

    #[test]
    fn fixed_loss_scales_ue_links_only() {
        let cfg = small();
        let base = ChannelGenConfig::default();
        let lossy = ChannelGenConfig { pathloss: Pathloss::Fixed { loss_db: 20.0 }, ..base.clone() };
        let a = draw_channels(&cfg, &base, 3).unwrap();
        let b = draw_channels(&cfg, &lossy, 3).unwrap();
        assert!((b.h[0][0] - a.h[0][0] * 0.1).norm() < 1e-15);
        assert!((b.g_cross[1][0] - a.g_cross[1][0] * 0.1).norm() < 1e-15);
        assert_eq!(a.h_si, b.h_si);
        assert_eq!(a.h_on, b.h_on);
    }

    #[test]
    fn dump_round_trip() {
        let cfg = small();
        let ch = draw_channels(&cfg, &ChannelGenConfig::default(), 11).unwrap();
        let back = import_json(&export_json(&ch)).unwrap();
        assert_eq!(ch, back);
    }

    #[test]
    fn rejects_bad_gen_config() {
        let gen = ChannelGenConfig { rician_k: -1.0, ..ChannelGenConfig::default() };
        assert!(draw_channels(&small(), &gen, 0).is_err());
    }
}
