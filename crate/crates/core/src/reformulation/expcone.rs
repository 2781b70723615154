//! Second-order-cone inner description of `t >= exp(z)`.
//!
//! With `x = z / 2^m`, `exp(x)` is bounded below by its degree-4 Taylor
//! polynomial `1 + x + ((x^2 + 2x)^2 + 8 x^2) / 24`, and `m` successive
//! squarings lift it to `exp(z)`. Every step is a rotated cone
//! `v >= w^2`, so the tower uses `m + 2` three-dimensional cones and `m + 1`
//! auxiliary variables. The resulting `T_m(z)` satisfies
//! `(1 - err) e^z <= T_m(z) <= e^z` on `[0, z_max]`.

use serde::{Deserialize, Serialize};

use crate::conic::{ConicProgram, LinExpr};
use crate::error::{Error, Result};

/// Largest relative error tolerated by [`soc_exp_upper`].
pub const MAX_TOWER_ERROR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SocApproxConfig {
    pub level: u32,
    pub z_max: f64,
}

impl Default for SocApproxConfig {
    fn default() -> Self {
        Self { level: 6, z_max: 8.0 }
    }
}

fn taylor4(x: f64) -> f64 {
    1.0 + x + ((x * x + 2.0 * x).powi(2) + 8.0 * x * x) / 24.0
}

/// `T_m(z) = taylor4(z / 2^m)^(2^m)`.
pub fn tower_value(z: f64, level: u32) -> f64 {
    let mut s = taylor4(z / 2f64.powi(level as i32));
    for _ in 0..level {
        s *= s;
    }
    s
}

impl SocApproxConfig {
    pub fn validate(&self) -> Result<()> {
        if self.level < 3 || self.level > 40 {
            return Err(Error::InvalidConfig(format!("tower level {} outside [3, 40]", self.level)));
        }
        if !(self.z_max > 0.0 && self.z_max.is_finite()) {
            return Err(Error::InvalidConfig(format!("z_max must be positive, got {}", self.z_max)));
        }
        Ok(())
    }

    /// `1 - T_m(z_max) / e^(z_max)`, the worst relative shortfall on the
    /// range (the ratio is monotone in `z`).
    pub fn max_rel_error(&self) -> f64 {
        let x = self.z_max / 2f64.powi(self.level as i32);
        // ln T4(x) - x, accumulated in log space to avoid overflow.
        let log_ratio = (taylor4(x).ln() - x) * 2f64.powi(self.level as i32);
        -log_ratio.exp_m1()
    }

    /// Smallest level (at least 6) whose error on `[0, z_max]` is below `tol`.
    pub fn for_range(z_max: f64, tol: f64) -> Result<Self> {
        for level in 6..=40 {
            let c = Self { level, z_max };
            if c.max_rel_error() <= tol {
                return Ok(c);
            }
        }
        Err(Error::ExpRange { range: z_max, level: 40, max: tol })
    }
}

/// Indices of the auxiliary variables of one tower.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpTower {
    pub v1: usize,
    pub v3: usize,
    /// `s_1 .. s_{m-1}`; `s_k >= s_{k-1}^2`.
    pub s: Vec<usize>,
}

/// Emits `t >= T_m(z)` together with `0 <= z <= z_max`.
pub fn soc_exp_upper(
    prog: &mut ConicProgram,
    z: LinExpr,
    t: LinExpr,
    cfg: &SocApproxConfig,
    label: &str,
) -> Result<ExpTower> {
    cfg.validate()?;
    let err = cfg.max_rel_error();
    if err > MAX_TOWER_ERROR {
        return Err(Error::ExpRange { range: cfg.z_max, level: cfg.level, max: MAX_TOWER_ERROR });
    }
    let m = cfg.level;
    let x = z.clone().scaled(1.0 / 2f64.powi(m as i32));
    prog.add_le(LinExpr::constant(0.0), z.clone(), format!("{label}.z_lo"));
    prog.add_le(z, LinExpr::constant(cfg.z_max), format!("{label}.z_hi"));
    let v1 = prog.add_nonneg(format!("{label}.v1"));
    let v3 = prog.add_nonneg(format!("{label}.v3"));
    let one = LinExpr::constant(1.0);
    prog.add_rotated_soc(LinExpr::var(v1), one.clone(), vec![x.clone()], format!("{label}.sq1"));
    let v1_2x = LinExpr::var(v1).plus(&x, 2.0);
    prog.add_rotated_soc(LinExpr::var(v3), one.clone(), vec![v1_2x], format!("{label}.sq3"));
    let mut prev = x
        .add_const(1.0)
        .add_term(v3, 1.0 / 24.0)
        .add_term(v1, 8.0 / 24.0);
    let mut s = Vec::with_capacity(m as usize - 1);
    for k in 1..m {
        let sk = prog.add_nonneg(format!("{label}.s{k}"));
        prog.add_rotated_soc(LinExpr::var(sk), one.clone(), vec![prev], format!("{label}.pow{k}"));
        prev = LinExpr::var(sk);
        s.push(sk);
    }
    prog.add_rotated_soc(t, one, vec![prev], format!("{label}.pow{m}"));
    Ok(ExpTower { v1, v3, s })
}

/// Values of the tower's auxiliary variables that make every cone tight at
/// `z`, in the order `(v1, v3, s_1..s_{m-1})`.
pub fn tower_aux_values(z: f64, level: u32) -> (f64, f64, Vec<f64>) {
    let x = z / 2f64.powi(level as i32);
    let v1 = x * x;
    let v3 = (v1 + 2.0 * x).powi(2);
    let mut cur = 1.0 + x + (v3 + 8.0 * v1) / 24.0;
    let mut s = Vec::with_capacity(level as usize - 1);
    for _ in 1..level {
        cur *= cur;
        s.push(cur);
    }
    (v1, v3, s)
}
