//! The convex subproblem solved at each iteration.
//!
//! Variables are in energy units (see [`super::point`]). The throughput
//! `sum z` over the grid power is handled through `tau <= 1 / P_grid` and
//! `q^2 <= tau sum z`, so the subproblem maximizes `q`. Each rate obeys
//! `z <= a r` with `a` the phase duration, and `r <= ln(1 + u)` through the
//! exp tower. Nonconvex pieces are replaced by the surrogates around the
//! expansion point, which keeps the expansion point itself feasible.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::channels::C64;
use crate::conic::{ConicProgram, LinExpr};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::model::Slacks;

use super::expcone::{soc_exp_upper, tower_aux_values, tower_value, ExpTower};
use super::point::{NormChannels, ScaledPoint, Scheme, TowerPlan, ALPHA_MIN, U_MIN};
use super::surrogates::{surrogate_f1, AffineForm, ProductMinorant, F4};

const LN2: f64 = std::f64::consts::LN_2;

/// Floor applied to expansion values that enter a ratio.
const EXP_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ObjectiveMode {
    /// Maximize `q`.
    Efficiency,
    /// Maximize `q + rho sum mu` with the UL rate targets relaxed by
    /// `mu <= 0`; used to reach a feasible start.
    Penalized { rho: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    pub scheme: Scheme,
    pub objective: ObjectiveMode,
    pub tower: TowerPlan,
}

/// Hermitian matrix variable stored as real and imaginary lower triangles.
#[derive(Debug, Clone)]
pub struct HermVars {
    n: usize,
    re: Vec<usize>,
    im: Vec<usize>,
}

impl HermVars {
    fn new(p: &mut ConicProgram, n: usize, label: &str) -> Self {
        let mut re = Vec::new();
        let mut im = Vec::new();
        for b in 0..n {
            for a in b..n {
                re.push(p.add_free(format!("{label}.re[{a},{b}]")));
            }
        }
        for b in 0..n {
            for a in (b + 1)..n {
                im.push(p.add_free(format!("{label}.im[{a},{b}]")));
            }
        }
        Self { n, re, im }
    }

    fn re_at(&self, a: usize, b: usize) -> usize {
        let (a, b) = if a >= b { (a, b) } else { (b, a) };
        let off: usize = (0..b).map(|k| self.n - k).sum();
        self.re[off + a - b]
    }

    /// `Im V_ab` as `(variable, sign)`; `None` on the diagonal.
    fn im_at(&self, a: usize, b: usize) -> Option<(usize, f64)> {
        if a == b {
            return None;
        }
        let (hi, lo, s) = if a > b { (a, b, 1.0) } else { (b, a, -1.0) };
        let off: usize = (0..lo).map(|k| self.n - 1 - k).sum();
        Some((self.im[off + hi - lo - 1], s))
    }

    /// `Re(c^H V c)`.
    fn quad(&self, c: &DVector<C64>) -> LinExpr {
        let mut e = LinExpr::constant(0.0);
        for a in 0..self.n {
            for b in 0..self.n {
                let k = c[a].conj() * c[b];
                e.push(self.re_at(a, b), k.re);
                if let Some((v, s)) = self.im_at(a, b) {
                    e.push(v, -k.im * s);
                }
            }
        }
        e.compact()
    }

    fn trace(&self) -> LinExpr {
        let mut e = LinExpr::constant(0.0);
        for a in 0..self.n {
            e.push(self.re_at(a, a), 1.0);
        }
        e
    }

    /// Lower triangle of the real embedding `[[R, -I], [I, R]]`.
    fn embedding(&self) -> Vec<LinExpr> {
        let n = self.n;
        let mut out = Vec::with_capacity(n * (2 * n + 1));
        for cb in 0..2 * n {
            for ra in cb..2 * n {
                let e = if ra < n {
                    LinExpr::var(self.re_at(ra, cb))
                } else if cb >= n {
                    LinExpr::var(self.re_at(ra - n, cb - n))
                } else {
                    match self.im_at(ra - n, cb) {
                        Some((v, s)) => LinExpr::term(v, s),
                        None => LinExpr::constant(0.0),
                    }
                };
                out.push(e);
            }
        }
        out
    }

    fn read(&self, x: &[f64]) -> DMatrix<C64> {
        DMatrix::from_fn(self.n, self.n, |a, b| {
            let im = self.im_at(a, b).map_or(0.0, |(v, s)| s * x[v]);
            C64::new(x[self.re_at(a, b)], im)
        })
    }

    fn write(&self, x: &mut [f64], m: &DMatrix<C64>) {
        for a in 0..self.n {
            for b in 0..=a {
                let v = (m[(a, b)] + m[(b, a)].conj()) * 0.5;
                x[self.re_at(a, b)] = v.re;
                if let Some((i, s)) = self.im_at(a, b) {
                    x[i] = s * v.im;
                }
            }
        }
    }
}

/// Complex vector variable as `(re, im)` index pairs.
type CVec = Vec<(usize, usize)>;

fn cvec(p: &mut ConicProgram, n: usize, label: &str) -> CVec {
    (0..n).map(|a| (p.add_free(format!("{label}[{a}].re")), p.add_free(format!("{label}[{a}].im")))).collect()
}

/// `(Re, Im)` of `c^H w`.
fn inner(c: &DVector<C64>, w: &CVec) -> (LinExpr, LinExpr) {
    let mut re = LinExpr::constant(0.0);
    let mut im = LinExpr::constant(0.0);
    for (ca, (wr, wi)) in c.iter().zip(w) {
        re.push(*wr, ca.re);
        re.push(*wi, ca.im);
        im.push(*wi, ca.re);
        im.push(*wr, -ca.im);
    }
    (re, im)
}

fn flat(w: &[CVec], scale: f64) -> Vec<LinExpr> {
    w.iter().flatten().flat_map(|(r, i)| [LinExpr::term(*r, scale), LinExpr::term(*i, scale)]).collect()
}

fn sum_vars(v: &[usize]) -> LinExpr {
    let mut e = LinExpr::constant(0.0);
    for i in v {
        e.push(*i, 1.0);
    }
    e
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateKind {
    Dl1,
    Dl2,
    Ul,
}

/// Where each quantity lives in the subproblem's variable vector.
#[derive(Debug, Clone)]
pub struct VarLayout {
    pub n_vars: usize,
    pub alpha: Option<usize>,
    w1: Vec<CVec>,
    pub p1: Vec<usize>,
    v: Vec<HermVars>,
    pub e: Vec<usize>,
    pub big_e: usize,
    pub u_d1: Vec<usize>,
    pub r_d1: Vec<usize>,
    pub z_d1: Vec<usize>,
    pub u_d2: Vec<usize>,
    pub r_d2: Vec<usize>,
    pub z_d2: Vec<usize>,
    pub b: Vec<usize>,
    pub u_u: Vec<usize>,
    pub r_u: Vec<usize>,
    pub z_u: Vec<usize>,
    pub x: Vec<usize>,
    pub tau: usize,
    pub q: usize,
    pub mu: Vec<usize>,
    towers: Vec<(RateKind, usize, ExpTower)>,
    level: u32,
}

impl VarLayout {
    /// Variable vector representing `sp`, with tower auxiliaries tight.
    pub fn embed(&self, sp: &ScaledPoint, rbar_nats: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n_vars];
        let s = &sp.slacks;
        if let Some(a) = self.alpha {
            x[a] = sp.alpha;
        }
        for (w, vars) in sp.w1.iter().zip(&self.w1) {
            for (c, (r, i)) in w.iter().zip(vars) {
                x[*r] = c.re;
                x[*i] = c.im;
            }
        }
        let put = |x: &mut Vec<f64>, idx: &[usize], val: &[f64]| {
            for (i, v) in idx.iter().zip(val) {
                x[*i] = *v;
            }
        };
        put(&mut x, &self.p1, &sp.p1);
        for (m, hv) in sp.v.iter().zip(&self.v) {
            hv.write(&mut x, m);
        }
        put(&mut x, &self.e, &sp.e);
        x[self.big_e] = sp.big_e;
        put(&mut x, &self.u_d1, &s.u_d1);
        put(&mut x, &self.r_d1, &s.r_d1);
        put(&mut x, &self.z_d1, &s.z_d1);
        put(&mut x, &self.u_d2, &s.u_d2);
        put(&mut x, &self.r_d2, &s.r_d2);
        put(&mut x, &self.z_d2, &s.z_d2);
        put(&mut x, &self.b, &s.b);
        put(&mut x, &self.u_u, &s.u_u);
        put(&mut x, &self.r_u, &s.r_u);
        put(&mut x, &self.z_u, &s.z_u);
        put(&mut x, &self.x, &s.x);
        x[self.tau] = s.tau;
        x[self.q] = s.q;
        for (j, m) in self.mu.iter().enumerate() {
            x[*m] = (s.z_u[j] - rbar_nats[j]).min(0.0);
        }
        for (kind, i, t) in &self.towers {
            let r = match kind {
                RateKind::Dl1 => s.r_d1[*i],
                RateKind::Dl2 => s.r_d2[*i],
                RateKind::Ul => s.r_u[*i],
            };
            let (v1, v3, sv) = tower_aux_values(r, self.level);
            x[t.v1] = v1;
            x[t.v3] = v3;
            put(&mut x, &t.s, &sv);
        }
        x
    }

    /// Reads an iterate back from a solver vector.
    pub fn extract(&self, x: &[f64], k_d: usize) -> ScaledPoint {
        let get = |idx: &[usize]| idx.iter().map(|i| x[*i]).collect::<Vec<f64>>();
        let alpha = self.alpha.map_or(ALPHA_MIN, |a| x[a].clamp(ALPHA_MIN, 1.0 - ALPHA_MIN));
        let mt = self.v.first().map_or(0, |v| v.n);
        let w1 = if self.w1.is_empty() {
            vec![DVector::zeros(mt); k_d]
        } else {
            self.w1.iter().map(|w| DVector::from_iterator(w.len(), w.iter().map(|(r, i)| C64::new(x[*r], x[*i])))).collect()
        };
        let zeros_k = |v: Vec<f64>| if v.is_empty() { vec![0.0; k_d] } else { v };
        let p1 = get(&self.p1);
        let ku = self.e.len();
        let slacks = Slacks {
            z_d1: zeros_k(get(&self.z_d1)),
            z_d2: get(&self.z_d2),
            z_u: get(&self.z_u),
            u_d1: zeros_k(get(&self.u_d1)),
            u_d2: get(&self.u_d2),
            u_u: get(&self.u_u),
            r_d1: zeros_k(get(&self.r_d1)),
            r_d2: get(&self.r_d2),
            r_u: get(&self.r_u),
            b: get(&self.b),
            x: get(&self.x),
            tau: x[self.tau],
            q: x[self.q],
        };
        ScaledPoint {
            alpha,
            w1,
            p1: if p1.is_empty() { vec![0.0; ku] } else { p1.iter().map(|p| p.max(0.0)).collect() },
            v: self.v.iter().map(|h| h.read(x)).collect(),
            e: get(&self.e).into_iter().map(|e| e.max(0.0)).collect(),
            big_e: x[self.big_e].max(0.0),
            slacks,
        }
    }
}

/// Surrogate data computed once per expansion point.
#[derive(Debug, Clone)]
pub struct ExpansionPoint {
    pub point: ScaledPoint,
    /// Phase-1 SINR numerator tangents, coordinates `(Re x, Im x, u)`.
    pub f1: Vec<AffineForm>,
    /// Phase-2 `u b` majorants.
    pub f4: Vec<F4>,
    pub min_d1: Vec<ProductMinorant>,
    pub min_d2: Vec<ProductMinorant>,
    pub min_u: Vec<ProductMinorant>,
    /// `Y_j^{-1} g_j x_j` at the expansion point.
    pub ul_dir: Vec<DVector<C64>>,
    /// `H_si H_si^H w1~` and `||H_si^H w1~||^2` per DL user.
    pub si_grad: Vec<DVector<C64>>,
    pub si_val: Vec<f64>,
    pub tau: f64,
}

impl ExpansionPoint {
    pub fn new(cfg: &SystemConfig, nc: &NormChannels, point: ScaledPoint, scheme: Scheme) -> Result<Self> {
        let a = point.alpha;
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::BadExpansion(format!("alpha = {a} outside (0, 1)")));
        }
        let s = &point.slacks;
        if !(s.tau > 0.0 && s.tau.is_finite()) {
            return Err(Error::BadExpansion(format!("tau = {} must be positive", s.tau)));
        }
        let harvest = scheme == Scheme::Harvest;
        let mut f1 = Vec::new();
        let mut min_d1 = Vec::new();
        if harvest {
            for i in 0..cfg.k_d {
                let xn = nc.h[i].dotc(&point.w1[i]);
                f1.push(surrogate_f1(xn, s.u_d1[i].max(EXP_FLOOR))?);
                min_d1.push(ProductMinorant::at(a, s.r_d1[i], EXP_FLOOR)?);
            }
        }
        let mut f4 = Vec::new();
        let mut min_d2 = Vec::new();
        for i in 0..cfg.k_d {
            let b = s.b[i];
            if !(b > 0.0) {
                return Err(Error::BadExpansion(format!("b[{i}] = {b} must be positive")));
            }
            f4.push(F4 { phi: b / s.u_d2[i].max(EXP_FLOOR) });
            min_d2.push(ProductMinorant::at(1.0 - a, s.r_d2[i], EXP_FLOOR)?);
        }
        let mut ul_dir = Vec::new();
        let mut min_u = Vec::new();
        for j in 0..cfg.k_u {
            let y = point.ul_interference(nc, j);
            let chol = y.cholesky().ok_or(Error::Singular(j))?;
            ul_dir.push(chol.solve(&nc.g[j]) * C64::new(s.x[j], 0.0));
            min_u.push(ProductMinorant::at(1.0 - a, s.r_u[j], EXP_FLOOR)?);
        }
        let hh = nc.hsi.adjoint();
        let (si_grad, si_val) = if harvest {
            point
                .w1
                .iter()
                .map(|w| {
                    let t = &hh * w;
                    (&nc.hsi * &t, t.norm_squared())
                })
                .unzip()
        } else {
            (Vec::new(), Vec::new())
        };
        let tau = s.tau;
        Ok(Self { point, f1, f4, min_d1, min_d2, min_u, ul_dir, si_grad, si_val, tau })
    }
}

/// One convex subproblem and the map to its variables.
#[derive(Debug, Clone)]
pub struct Subproblem {
    pub program: ConicProgram,
    pub layout: VarLayout,
    /// UL rate targets in nats per channel use.
    pub rbar: Vec<f64>,
}

/// `k` such that `u / k` and `v k` are of similar size near the expansion
/// point; a rotated cone with very unequal sides loses precision in
/// `u + v >= ||(2w, u - v)||`.
fn balance(u: f64, v: f64) -> f64 {
    let k = (u.abs() / v.abs()).sqrt();
    if k.is_finite() && k > 0.0 {
        k.clamp(1e-4, 1e4)
    } else {
        1.0
    }
}

/// `z <= a r` with `a` the (possibly variable) phase duration.
fn rate_product(p: &mut ConicProgram, z: usize, a: &LinExpr, r: usize, m: Option<&ProductMinorant>, label: &str) {
    match m {
        Some(ProductMinorant::Root(m)) => {
            // (kappa a)(r / kappa) >= ((z + s_n^2) / (2 s_n))^2
            let s = LinExpr::term(z, 0.5 / m.s_n).add_const(0.5 * m.s_n);
            p.add_rotated_soc(a.clone().scaled(m.kappa), LinExpr::term(r, 1.0 / m.kappa), vec![s], label);
        }
        Some(ProductMinorant::Bilinear(m)) => {
            let pe = a.clone().scaled(m.kappa).add_term(r, 1.0 / m.kappa);
            let qe = a.clone().scaled(m.kappa).add_term(r, -1.0 / m.kappa);
            let lhs = pe.scaled(m.p_n / 2.0).add_const(-m.p_n * m.p_n / 4.0).add_term(z, -1.0);
            p.add_rotated_soc(lhs, LinExpr::constant(1.0), vec![qe.scaled(0.5)], label);
        }
        None => {
            let coef = a.constant;
            p.add_le(LinExpr::var(z), LinExpr::term(r, coef), label);
        }
    }
}

pub fn build_subproblem(
    cfg: &SystemConfig,
    nc: &NormChannels,
    xp: &ExpansionPoint,
    opts: &BuildOptions,
) -> Result<Subproblem> {
    cfg.validate()?;
    let harvest = opts.scheme == Scheme::Harvest;
    let (kd, ku, mt) = (cfg.k_d, cfg.k_u, cfg.m_t);
    let plan = &opts.tower;
    let pc = cfg.p_cir();
    let rbar: Vec<f64> = cfg.r_min_ul.iter().map(|r| r * LN2).collect();
    let mut p = ConicProgram::new();

    let alpha = harvest.then(|| p.add_var("alpha", Some(ALPHA_MIN), Some(1.0 - ALPHA_MIN)));
    let a_expr = alpha.map_or(LinExpr::constant(ALPHA_MIN), LinExpr::var);
    let abar = a_expr.clone().scaled(-1.0).add_const(1.0);
    let w1: Vec<CVec> = if harvest { (0..kd).map(|i| cvec(&mut p, mt, &format!("w1[{i}]"))).collect() } else { Vec::new() };
    let p1: Vec<usize> = if harvest { (0..ku).map(|j| p.add_nonneg(format!("p1[{j}]"))).collect() } else { Vec::new() };
    let v: Vec<HermVars> = (0..kd).map(|i| HermVars::new(&mut p, mt, &format!("V[{i}]"))).collect();
    let e: Vec<usize> = (0..ku).map(|j| p.add_nonneg(format!("e[{j}]"))).collect();
    let big_e = p.add_nonneg("E");
    let nn = |p: &mut ConicProgram, n: usize, name: &str, on: bool| -> Vec<usize> {
        if on {
            (0..n).map(|i| p.add_nonneg(format!("{name}[{i}]"))).collect()
        } else {
            Vec::new()
        }
    };
    let u_d1: Vec<usize> = if harvest { (0..kd).map(|i| p.add_var(format!("u_d1[{i}]"), Some(U_MIN), None)).collect() } else { Vec::new() };
    let r_d1 = nn(&mut p, kd, "r_d1", harvest);
    let z_d1 = nn(&mut p, kd, "z_d1", harvest);
    let u_d2: Vec<usize> = (0..kd).map(|i| p.add_var(format!("u_d2[{i}]"), Some(U_MIN), None)).collect();
    let r_d2 = nn(&mut p, kd, "r_d2", true);
    let z_d2 = nn(&mut p, kd, "z_d2", true);
    let b = nn(&mut p, kd, "b", true);
    let u_u = nn(&mut p, ku, "u_u", true);
    let r_u = nn(&mut p, ku, "r_u", true);
    let z_u = nn(&mut p, ku, "z_u", true);
    let x = nn(&mut p, ku, "x", true);
    let tau = p.add_nonneg("tau");
    let q = p.add_free("q");
    let mu: Vec<usize> = match opts.objective {
        ObjectiveMode::Penalized { .. } => (0..ku).map(|j| p.add_var(format!("mu[{j}]"), None, Some(0.0))).collect(),
        ObjectiveMode::Efficiency => Vec::new(),
    };

    let sum_p1 = sum_vars(&p1);
    let sum_e = sum_vars(&e);
    let mut sum_tr = LinExpr::constant(0.0);
    for hv in &v {
        sum_tr = sum_tr.plus(&hv.trace(), 1.0);
    }

    // Grid power: tau <= 1 / P_grid through its tangent at tau_n.
    let tn = xp.tau;
    let lg = LinExpr::constant(2.0 / tn)
        .add_term(tau, -1.0 / (tn * tn))
        .plus(&a_expr, -pc)
        .add_term(big_e, -1.0)
        .plus(&sum_p1, -1.0)
        .plus(&sum_e, -1.0);
    if harvest {
        p.add_rotated_soc(lg, LinExpr::constant(1.0), flat(&w1, 1.0 / cfg.epsilon.sqrt()), "grid");
    } else {
        p.add_le(LinExpr::constant(0.0), lg, "grid");
    }

    // SBS and UE budgets.
    let sbs = sum_tr.clone().scaled(-1.0).add_const(cfg.p_b_max);
    if harvest {
        p.add_rotated_soc(sbs, LinExpr::constant(1.0), flat(&w1, 1.0), "sbs_power");
    } else {
        p.add_le(LinExpr::constant(0.0), sbs, "sbs_power");
    }
    for j in 0..ku {
        let mut lhs = LinExpr::var(e[j]);
        if harvest {
            lhs.push(p1[j], 1.0);
        }
        p.add_le(lhs, LinExpr::constant(cfg.p_u_max), format!("ue_power[{j}]"));
    }

    // Phase-2 energy must be covered by harvesting plus E.
    let mut need = abar.clone().scaled(pc).plus(&sum_tr, 1.0 / cfg.epsilon).add_term(big_e, -1.0);
    for j in 0..ku {
        need.push(z_u[j], cfg.beta[j] / LN2);
    }
    let mut harvested = LinExpr::constant(0.0);
    if harvest {
        for i in 0..kd {
            let (re, _) = inner(&xp.si_grad[i], &w1[i]);
            harvested = harvested.plus(&re, 2.0).add_const(-xp.si_val[i]);
        }
        for j in 0..ku {
            harvested.push(p1[j], nc.g_pow[j]);
        }
    }
    p.add_le(need, harvested.scaled(cfg.eta), "energy");

    // Phase-1 DL SINR.
    if harvest {
        for i in 0..kd {
            let h = &nc.h[i];
            let (xr, xi) = inner(h, &w1[i]);
            let f = &xp.f1[i];
            let mut lhs = LinExpr::constant(f.value - f.grad.iter().zip(&f.point).map(|(g, v)| g * v).sum::<f64>())
                .plus(&xr, f.grad[0])
                .plus(&xi, f.grad[1])
                .add_term(u_d1[i], f.grad[2])
                .plus(&a_expr, -1.0);
            for j in 0..ku {
                lhs.push(p1[j], -nc.cross[j][i]);
            }
            let mut tail = Vec::new();
            for (k, wk) in w1.iter().enumerate() {
                if k != i {
                    let (r, im) = inner(h, wk);
                    tail.push(r);
                    tail.push(im);
                }
            }
            p.add_rotated_soc(lhs.compact(), LinExpr::constant(1.0), tail, format!("sinr_d1[{i}]"));
        }
    }

    // Phase-2 DL SINR: h^H V_i h >= u b through the F4 majorant.
    for i in 0..kd {
        let h = &nc.h[i];
        let mut den = abar.clone();
        for (k, hv) in v.iter().enumerate() {
            if k != i {
                den = den.plus(&hv.quad(h), 1.0);
            }
        }
        for j in 0..ku {
            den.push(e[j], nc.cross[j][i]);
        }
        p.add_le(den, LinExpr::var(b[i]), format!("interf_d2[{i}]"));
        let phi = xp.f4[i].phi;
        let k = balance(xp.point.slacks.u_d2[i] * xp.point.slacks.b[i], 1.0);
        p.add_rotated_soc(
            v[i].quad(h).scaled(1.0 / k),
            LinExpr::constant(k),
            vec![LinExpr::term(u_d2[i], (phi / 2.0).sqrt()), LinExpr::term(b[i], 1.0 / (2.0 * phi).sqrt())],
            format!("sinr_d2[{i}]"),
        );
    }

    // UL SINR under SIC: tangent of the concave lower bound
    // 2 x Re(a^H g) - a^H Y a <= x^2 g^H Y^-1 g.
    for j in 0..ku {
        p.add_rotated_soc(LinExpr::var(e[j]), LinExpr::constant(1.0), vec![LinExpr::var(x[j])], format!("amp[{j}]"));
        let a = &xp.ul_dir[j];
        let ag = a.dotc(&nc.g[j]).re;
        let mut rhs = LinExpr::term(x[j], 2.0 * ag).plus(&abar, -a.norm_squared());
        for l in (j + 1)..ku {
            rhs.push(e[l], -nc.g[l].dotc(a).norm_sqr());
        }
        let c = &nc.hon * a;
        for hv in &v {
            rhs = rhs.plus(&hv.quad(&c), -1.0);
        }
        p.add_le(LinExpr::var(u_u[j]), rhs, format!("sinr_u[{j}]"));
    }

    // Rates and log bounds.
    let mut towers = Vec::new();
    let inv = 1.0 / (1.0 + plan.delta);
    let mut rate = |p: &mut ConicProgram, kind: RateKind, i: usize, u: usize, r: usize, label: String| -> Result<()> {
        let t = LinExpr::term(u, inv).add_const(inv);
        let tw = soc_exp_upper(p, LinExpr::var(r), t, &plan.approx, &label)?;
        towers.push((kind, i, tw));
        Ok(())
    };
    for i in 0..kd {
        if harvest {
            rate(&mut p, RateKind::Dl1, i, u_d1[i], r_d1[i], format!("log_d1[{i}]"))?;
            rate_product(&mut p, z_d1[i], &a_expr, r_d1[i], Some(&xp.min_d1[i]), &format!("rate_d1[{i}]"));
        }
        rate(&mut p, RateKind::Dl2, i, u_d2[i], r_d2[i], format!("log_d2[{i}]"))?;
        rate_product(&mut p, z_d2[i], &abar, r_d2[i], harvest.then(|| &xp.min_d2[i]), &format!("rate_d2[{i}]"));
    }
    for j in 0..ku {
        rate(&mut p, RateKind::Ul, j, u_u[j], r_u[j], format!("log_u[{j}]"))?;
        rate_product(&mut p, z_u[j], &abar, r_u[j], harvest.then(|| &xp.min_u[j]), &format!("rate_u[{j}]"));
        let mut target = LinExpr::constant(rbar[j]);
        if let Some(m) = mu.get(j) {
            target.push(*m, 1.0);
        }
        p.add_le(target, LinExpr::var(z_u[j]), format!("ul_target[{j}]"));
    }

    for (i, hv) in v.iter().enumerate() {
        p.add_psd(2 * mt, hv.embedding(), format!("psd_V[{i}]"));
    }

    let zsum = sum_vars(&z_d1).plus(&sum_vars(&z_d2), 1.0).plus(&sum_vars(&z_u), 1.0);
    p.add_rotated_soc(zsum, LinExpr::var(tau), vec![LinExpr::var(q)], "throughput");

    let mut obj = LinExpr::var(q);
    if let ObjectiveMode::Penalized { rho } = opts.objective {
        for m in &mu {
            obj.push(*m, rho);
        }
    }
    p.objective = obj;

    let layout = VarLayout {
        n_vars: p.n_vars(),
        alpha,
        w1,
        p1,
        v,
        e,
        big_e,
        u_d1,
        r_d1,
        z_d1,
        u_d2,
        r_d2,
        z_d2,
        b,
        u_u,
        r_u,
        z_u,
        x,
        tau,
        q,
        mu,
        towers,
        level: plan.approx.level,
    };
    Ok(Subproblem { program: p, layout, rbar })
}

/// Whether `r` satisfies the tower bound for `u` under `plan`.
pub fn tower_ok(plan: &TowerPlan, u: f64, r: f64) -> bool {
    (1.0 + u) >= (1.0 + plan.delta) * tower_value(r, plan.approx.level)
}
