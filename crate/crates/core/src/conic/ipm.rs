//! Primal-dual interior-point method on the homogeneous self-dual embedding
//! with Nesterov-Todd scaling and Mehrotra predictor-corrector steps.
//!
//! Internally the program is put in the standard form
//! `min c'x  s.t.  A x = b,  G x + s = h,  s in K` where `K` is a product of
//! nonnegative rays, second-order cones and PSD cones.

use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::cones::{self, ConeType, Scaling};
use super::{ConeKind, ConicProgram, ConicSolution, SolveStatus};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IpmOptions {
    pub max_iter: usize,
    pub feastol: f64,
    pub abstol: f64,
    pub reltol: f64,
    /// Residual level at which a stalled solve is still reported as
    /// [`SolveStatus::Inaccurate`].
    pub inaccurate_tol: f64,
    pub refinement_steps: usize,
}

impl Default for IpmOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            feastol: 1e-8,
            abstol: 1e-8,
            reltol: 1e-8,
            inaccurate_tol: 5e-5,
            refinement_steps: 2,
        }
    }
}

struct Block {
    kind: ConeType,
    off: usize,
    dim: usize,
    cols: Vec<usize>,
    /// Dense `dim x cols.len()` slice of `G`.
    g: DMatrix<f64>,
}

impl Block {
    fn range(&self) -> std::ops::Range<usize> {
        self.off..self.off + self.dim
    }
}

struct StdForm {
    n: usize,
    c: DVector<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    blocks: Vec<Block>,
    h: DVector<f64>,
    degree: usize,
}

fn local_block(rows: &[Vec<(usize, f64)>]) -> (Vec<usize>, DMatrix<f64>) {
    let mut cols: Vec<usize> = rows.iter().flat_map(|r| r.iter().map(|t| t.0)).collect();
    cols.sort_unstable();
    cols.dedup();
    let mut g = DMatrix::zeros(rows.len(), cols.len());
    for (i, r) in rows.iter().enumerate() {
        for (v, coef) in r {
            let j = cols.binary_search(v).expect("column collected above");
            g[(i, j)] += coef;
        }
    }
    (cols, g)
}

impl StdForm {
    fn build(p: &ConicProgram) -> Self {
        let n = p.n_vars();
        let mut c = DVector::zeros(n);
        for (v, k) in &p.objective.terms {
            c[*v] -= k;
        }
        let mut eq: Vec<(Vec<(usize, f64)>, f64)> =
            p.eq.iter().map(|r| (r.expr.terms.clone(), -r.expr.constant)).collect();
        // Each LP row is its own one-dimensional block.
        let mut lp: Vec<(Vec<(usize, f64)>, f64)> =
            p.ineq.iter().map(|r| (r.expr.terms.clone(), -r.expr.constant)).collect();
        for (i, b) in p.bounds.iter().enumerate() {
            match (b.lo, b.hi) {
                (Some(lo), Some(hi)) if lo == hi => eq.push((vec![(i, 1.0)], lo)),
                _ => {
                    if let Some(lo) = b.lo {
                        lp.push((vec![(i, -1.0)], -lo));
                    }
                    if let Some(hi) = b.hi {
                        lp.push((vec![(i, 1.0)], hi));
                    }
                }
            }
        }
        let mut a = DMatrix::zeros(eq.len(), n);
        let mut bv = DVector::zeros(eq.len());
        for (i, (terms, rhs)) in eq.iter().enumerate() {
            for (v, k) in terms {
                a[(i, *v)] += k;
            }
            bv[i] = *rhs;
        }
        let mut blocks = Vec::new();
        let mut h = Vec::new();
        let mut degree = 0;
        for (terms, rhs) in lp {
            let (cols, g) = local_block(&[terms]);
            blocks.push(Block { kind: ConeType::Nonneg, off: h.len(), dim: 1, cols, g });
            h.push(rhs);
            degree += 1;
        }
        for cb in &p.cones {
            let (kind, scale): (ConeType, Vec<f64>) = match cb.kind {
                ConeKind::Soc => (ConeType::Soc, vec![1.0; cb.entries.len()]),
                ConeKind::Psd { dim } => {
                    let mut sc = Vec::with_capacity(cb.entries.len());
                    for j in 0..dim {
                        for i in j..dim {
                            sc.push(if i == j { 1.0 } else { std::f64::consts::SQRT_2 });
                        }
                    }
                    (ConeType::Psd(dim), sc)
                }
            };
            let rows: Vec<Vec<(usize, f64)>> = cb
                .entries
                .iter()
                .zip(&scale)
                .map(|(e, k)| e.terms.iter().map(|(v, coef)| (*v, -coef * k)).collect())
                .collect();
            let (cols, g) = local_block(&rows);
            let off = h.len();
            h.extend(cb.entries.iter().zip(&scale).map(|(e, k)| e.constant * k));
            blocks.push(Block { kind, off, dim: cb.entries.len(), cols, g });
            degree += kind.degree();
        }
        Self { n, c, a, b: bv, blocks, h: DVector::from_vec(h), degree }
    }

    fn m(&self) -> usize {
        self.h.len()
    }

    fn gx(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.m());
        for b in &self.blocks {
            for (j, col) in b.cols.iter().enumerate() {
                let xv = x[*col];
                if xv != 0.0 {
                    for r in 0..b.dim {
                        out[b.off + r] += b.g[(r, j)] * xv;
                    }
                }
            }
        }
        out
    }

    fn gtz(&self, z: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        for b in &self.blocks {
            for (j, col) in b.cols.iter().enumerate() {
                let mut acc = 0.0;
                for r in 0..b.dim {
                    acc += b.g[(r, j)] * z[b.off + r];
                }
                out[*col] += acc;
            }
        }
        out
    }

    /// Applies a per-block map to a cone-sized vector.
    fn blockwise(
        &self,
        v: &DVector<f64>,
        mut f: impl FnMut(usize, &Block, &[f64], &mut [f64]),
    ) -> DVector<f64> {
        let mut out = DVector::zeros(self.m());
        for (k, b) in self.blocks.iter().enumerate() {
            let r = b.range();
            f(k, b, &v.as_slice()[r.clone()], &mut out.as_mut_slice()[r]);
        }
        out
    }
}

/// Factored KKT system in NT-scaled form: with `G^ = W^-T G` and
/// `z^ = W dz` it reads `[0 A' G^'; A 0 0; G^ 0 -I]`, which avoids forming
/// `W'W` and its squared conditioning.
struct Kkt<'a> {
    sf: &'a StdForm,
    w: &'a [Scaling],
    /// Per-block `W_k^-T G_k`.
    ghat: Vec<DMatrix<f64>>,
    chol_h: Cholesky<f64, Dyn>,
    hinv_at: DMatrix<f64>,
    chol_s: Option<Cholesky<f64, Dyn>>,
}

/// Solution of one KKT solve; `zh` is the scaled `W dz`.
struct KktSol {
    x: DVector<f64>,
    y: DVector<f64>,
    z: DVector<f64>,
    zh: DVector<f64>,
}

fn chol_regularized(mut m: DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    let n = m.nrows();
    // Relative to each diagonal entry, so large scalings near the cone
    // boundary do not swamp the well-scaled rows.
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].abs().max(1e-8)).collect();
    let mut delta = 1e-13;
    for i in 0..n {
        m[(i, i)] += delta * diag[i];
    }
    for _ in 0..8 {
        if let Some(c) = Cholesky::new(m.clone()) {
            return Some(c);
        }
        let bump = delta * 99.0;
        for i in 0..n {
            m[(i, i)] += bump * diag[i];
        }
        delta *= 100.0;
    }
    None
}

impl<'a> Kkt<'a> {
    fn factor(sf: &'a StdForm, w: &'a [Scaling]) -> Option<Self> {
        let n = sf.n;
        let mut hm = DMatrix::zeros(n, n);
        let mut ghat = Vec::with_capacity(sf.blocks.len());
        for (b, wk) in sf.blocks.iter().zip(w) {
            let nc = b.cols.len();
            let mut m = DMatrix::zeros(b.dim, nc);
            let mut col = vec![0.0; b.dim];
            let mut tmp = vec![0.0; b.dim];
            for j in 0..nc {
                col.iter_mut().enumerate().for_each(|(r, c)| *c = b.g[(r, j)]);
                wk.apply_inv_t(&col, &mut tmp);
                for r in 0..b.dim {
                    m[(r, j)] = tmp[r];
                }
            }
            let mtm = m.transpose() * &m;
            for (p, cp) in b.cols.iter().enumerate() {
                for (q, cq) in b.cols.iter().enumerate() {
                    hm[(*cp, *cq)] += mtm[(p, q)];
                }
            }
            ghat.push(m);
        }
        let p = sf.a.nrows();
        if p > 0 {
            hm += sf.a.transpose() * &sf.a;
        }
        let chol_h = chol_regularized(hm)?;
        let (hinv_at, chol_s) = if p > 0 {
            let hinv_at = chol_h.solve(&sf.a.transpose());
            let s = &sf.a * &hinv_at;
            (hinv_at, Some(chol_regularized(s)?))
        } else {
            (DMatrix::zeros(n, 0), None)
        };
        Some(Self { sf, w, ghat, chol_h, hinv_at, chol_s })
    }

    fn ghat_x(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.sf.m());
        for (b, g) in self.sf.blocks.iter().zip(&self.ghat) {
            for (j, col) in b.cols.iter().enumerate() {
                let xv = x[*col];
                if xv != 0.0 {
                    for r in 0..b.dim {
                        out[b.off + r] += g[(r, j)] * xv;
                    }
                }
            }
        }
        out
    }

    fn ghat_t(&self, z: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.sf.n);
        for (b, g) in self.sf.blocks.iter().zip(&self.ghat) {
            for (j, col) in b.cols.iter().enumerate() {
                let mut acc = 0.0;
                for r in 0..b.dim {
                    acc += g[(r, j)] * z[b.off + r];
                }
                out[*col] += acc;
            }
        }
        out
    }

    fn solve_once(
        &self,
        rx: &DVector<f64>,
        ry: &DVector<f64>,
        rzh: &DVector<f64>,
    ) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let sf = self.sf;
        let mut t = rx + self.ghat_t(rzh);
        let (dx, dy) = match &self.chol_s {
            Some(cs) => {
                t += sf.a.transpose() * ry;
                let u = self.chol_h.solve(&t);
                let dy = cs.solve(&(&sf.a * &u - ry));
                let dx = u - &self.hinv_at * &dy;
                (dx, dy)
            }
            None => (self.chol_h.solve(&t), DVector::zeros(0)),
        };
        let zh = self.ghat_x(&dx) - rzh;
        (dx, dy, zh)
    }

    /// Solves `A' dy + G' dz = rx`, `A dx = ry`, `G dx - W'W dz = rz`.
    fn solve(&self, rx: &DVector<f64>, ry: &DVector<f64>, rz: &DVector<f64>, refine: usize) -> KktSol {
        let sf = self.sf;
        let rzh = sf.blockwise(rz, |k, _, src, dst| self.w[k].apply_inv_t(src, dst));
        let (mut dx, mut dy, mut zh) = self.solve_once(rx, ry, &rzh);
        for _ in 0..refine {
            let e1 = rx - sf.a.transpose() * &dy - self.ghat_t(&zh);
            let e2 = ry - &sf.a * &dx;
            let e3 = &rzh - self.ghat_x(&dx) + &zh;
            let (cx, cy, cz) = self.solve_once(&e1, &e2, &e3);
            dx += cx;
            dy += cy;
            zh += cz;
        }
        let z = sf.blockwise(&zh, |k, _, src, dst| self.w[k].apply_inv(src, dst));
        KktSol { x: dx, y: dy, z, zh }
    }
}

struct Direction {
    x: DVector<f64>,
    y: DVector<f64>,
    z: DVector<f64>,
    s: DVector<f64>,
    tau: f64,
    kappa: f64,
    s_scaled: DVector<f64>,
    z_scaled: DVector<f64>,
}

#[derive(Clone, Copy)]
struct Metrics {
    pres: f64,
    dres: f64,
    gap: f64,
    relgap: f64,
}

impl Metrics {
    fn score(&self) -> f64 {
        self.pres.max(self.dres).max(self.gap.min(self.relgap))
    }
}

/// Iterate with the smallest [`Metrics::score`] seen so far; returned when
/// the solve ends without meeting the tight tolerances.
struct Best {
    score: f64,
    x: DVector<f64>,
    tau: f64,
    metrics: Metrics,
    at: usize,
}

fn shift_into_cone(sf: &StdForm, v: &mut DVector<f64>) {
    let mut t = f64::NEG_INFINITY;
    for b in &sf.blocks {
        t = t.max(cones::max_violation(b.kind, &v.as_slice()[b.range()]));
    }
    let nrm = v.norm();
    if t >= -1e-8 * nrm.max(1.0) {
        let mut e = vec![0.0; sf.m()];
        for b in &sf.blocks {
            cones::identity(b.kind, &mut e[b.range()]);
        }
        for (vi, ei) in v.iter_mut().zip(e) {
            *vi += (1.0 + t) * ei;
        }
    }
}

/// Iterations without improvement tolerated once the relaxed tolerance is met.
const STALL_ITERS: usize = 4;

/// Solves a conic program. The returned objective is in the program's
/// (maximization) sense.

pub fn solve(prog: &ConicProgram, opts: &IpmOptions) -> Result<ConicSolution> {
    prog.validate()?;
    let t0 = Instant::now();
    let sf = StdForm::build(prog);
    if sf.m() == 0 {
        return Err(Error::InvalidProgram("no inequality or cone constraints".into()));
    }
    let n = sf.n;
    let p = sf.a.nrows();
    let m = sf.m();
    let ident: Vec<Scaling> = sf.blocks.iter().map(|b| Scaling::identity(b.kind, b.dim)).collect();
    let kkt = Kkt::factor(&sf, &ident)
        .ok_or_else(|| Error::Solver("initial KKT factorization failed".into()))?;
    let init_p = kkt.solve(&DVector::zeros(n), &sf.b, &sf.h, opts.refinement_steps);
    let mut x = init_p.x;
    let mut s = -init_p.z;
    let init_d = kkt.solve(&(-&sf.c), &DVector::zeros(p), &DVector::zeros(m), opts.refinement_steps);
    let mut y = init_d.y;
    let mut z = init_d.z;
    shift_into_cone(&sf, &mut s);
    shift_into_cone(&sf, &mut z);
    let mut tau = 1.0;
    let mut kappa = 1.0;

    let resx0 = sf.c.norm().max(1.0);
    let resy0 = sf.b.norm().max(1.0);
    let resz0 = sf.h.norm().max(1.0);
    let nu = sf.degree as f64;

    let mut status = SolveStatus::MaxIter;
    let mut iterations = 0;
    let mut metrics;
    let mut best: Option<Best> = None;
    let mut it = 0;
    loop {
        let rx = sf.a.transpose() * &y + sf.gtz(&z) + &sf.c * tau;
        let ry = &sf.b * tau - &sf.a * &x;
        let rz = &s + sf.gx(&x) - &sf.h * tau;
        let cx = sf.c.dot(&x);
        let by_hz = sf.b.dot(&y) + sf.h.dot(&z);
        let rt = kappa + cx + by_hz;
        let sz = s.dot(&z);
        let pcost = cx / tau;
        let dcost = -by_hz / tau;
        let gap = sz / (tau * tau);
        let relgap = if pcost < 0.0 {
            gap / -pcost
        } else if dcost > 0.0 {
            gap / dcost
        } else {
            f64::INFINITY
        };
        let pinf = (by_hz < 0.0)
            .then(|| (sf.a.transpose() * &y + sf.gtz(&z)).norm() / resx0 / -by_hz);
        let dinf = (cx < 0.0).then(|| {
            let ax = (&sf.a * &x).norm() / resy0;
            let gxs = (sf.gx(&x) + &s).norm() / resz0;
            ax.max(gxs) / -cx
        });
        metrics = Metrics {
            pres: (ry.norm() / resy0).max(rz.norm() / resz0) / tau,
            dres: rx.norm() / resx0 / tau,
            gap,
            relgap,
        };
        let score = metrics.score();
        if best.as_ref().is_none_or(|b| score < b.score) {
            best = Some(Best { score, x: x.clone(), tau, metrics, at: it });
        }
        if metrics.pres <= opts.feastol
            && metrics.dres <= opts.feastol
            && (gap <= opts.abstol || relgap <= opts.reltol)
        {
            status = SolveStatus::Optimal;
            break;
        }
        if pinf.is_some_and(|v| v <= opts.feastol) {
            status = SolveStatus::Infeasible;
            break;
        }
        if dinf.is_some_and(|v| v <= opts.feastol) {
            status = SolveStatus::Unbounded;
            break;
        }
        if it == opts.max_iter {
            break;
        }
        // Progress has stopped at a point that already meets the relaxed
        // tolerance; further steps only lose accuracy.
        if let Some(b) = &best {
            if b.score <= opts.inaccurate_tol && it >= b.at + STALL_ITERS {
                break;
            }
        }
        it += 1;
        iterations = it;

        let mut ws = Vec::with_capacity(sf.blocks.len());
        let mut lam = DVector::zeros(m);
        let mut ok = true;
        for b in &sf.blocks {
            let r = b.range();
            match Scaling::compute(b.kind, &s.as_slice()[r.clone()], &z.as_slice()[r.clone()]) {
                Some((w, l)) => {
                    lam.as_mut_slice()[r].copy_from_slice(&l);
                    ws.push(w);
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            status = SolveStatus::NumericalError;
            break;
        }
        let Some(kkt) = Kkt::factor(&sf, &ws) else {
            status = SolveStatus::NumericalError;
            break;
        };
        let k1 = kkt.solve(&(-&sf.c), &sf.b, &sf.h, opts.refinement_steps);
        let denom1 = -kappa / tau + sf.c.dot(&k1.x) + sf.b.dot(&k1.y) + sf.h.dot(&k1.z);

        let newton = |dx: &DVector<f64>,
                      dy: &DVector<f64>,
                      dz: &DVector<f64>,
                      dtau: f64,
                      ds: &DVector<f64>,
                      dk: f64|
         -> Direction {
            let lds = sf.blockwise(ds, |_, b, src, dst| {
                cones::jdiv(b.kind, &lam.as_slice()[b.range()], src, dst)
            });
            let wt_lds = sf.blockwise(&lds, |k, _, src, dst| ws[k].apply_t(src, dst));
            let rzz = dz - wt_lds;
            let k2 = kkt.solve(dx, &(-dy), &rzz, opts.refinement_steps);
            let num = dtau - dk / tau - sf.c.dot(&k2.x) - sf.b.dot(&k2.y) - sf.h.dot(&k2.z);
            let dt = num / denom1;
            let dxv = k2.x + &k1.x * dt;
            let dyv = k2.y + &k1.y * dt;
            let dzv = k2.z + &k1.z * dt;
            let z_scaled = k2.zh + &k1.zh * dt;
            let s_scaled = &lds - &z_scaled;
            // Taken from the linearized primal equation so that rounding in
            // the scaled solve does not accumulate in the primal residual.
            let dsv = dz - sf.gx(&dxv) + &sf.h * dt;
            let dkap = (dk - kappa * dt) / tau;
            Direction { x: dxv, y: dyv, z: dzv, s: dsv, tau: dt, kappa: dkap, s_scaled, z_scaled }
        };
        let max_alpha = |d: &Direction| -> f64 {
            let mut a = f64::INFINITY;
            for b in &sf.blocks {
                let r = b.range();
                let l = &lam.as_slice()[r.clone()];
                a = a.min(cones::max_step(b.kind, l, &d.s_scaled.as_slice()[r.clone()]));
                a = a.min(cones::max_step(b.kind, l, &d.z_scaled.as_slice()[r.clone()]));
                a = a.min(cones::max_step(b.kind, &s.as_slice()[r.clone()], &d.s.as_slice()[r]));
            }
            if d.tau < 0.0 {
                a = a.min(-tau / d.tau);
            }
            if d.kappa < 0.0 {
                a = a.min(-kappa / d.kappa);
            }
            a
        };

        let lam_sq = sf.blockwise(&lam, |_, b, src, dst| cones::jprod(b.kind, src, src, dst));
        let aff = newton(&(-&rx), &(-&ry), &(-&rz), -rt, &(-&lam_sq), -tau * kappa);
        let alpha_aff = max_alpha(&aff).min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);
        let mu = (sz + tau * kappa) / (nu + 1.0);

        let cross = sf.blockwise(&aff.s_scaled, |_, b, src, dst| {
            cones::jprod(b.kind, src, &aff.z_scaled.as_slice()[b.range()], dst)
        });
        let mut ds = -&lam_sq - cross;
        for b in &sf.blocks {
            let mut e = vec![0.0; b.dim];
            cones::identity(b.kind, &mut e);
            for (r, ev) in e.iter().enumerate() {
                ds[b.off + r] += sigma * mu * ev;
            }
        }
        let dk = -tau * kappa - aff.tau * aff.kappa + sigma * mu;
        let f = 1.0 - sigma;
        let dir = newton(&(-&rx * f), &(-&ry * f), &(-&rz * f), -rt * f, &ds, dk);
        let alpha = (0.99 * max_alpha(&dir)).min(1.0);
        if !(alpha > 1e-12) || !dir.x.iter().all(|v| v.is_finite()) {
            status = SolveStatus::NumericalError;
            break;
        }
        x += &dir.x * alpha;
        y += &dir.y * alpha;
        z += &dir.z * alpha;
        s += &dir.s * alpha;
        tau += dir.tau * alpha;
        kappa += dir.kappa * alpha;
    }

    if matches!(status, SolveStatus::MaxIter | SolveStatus::NumericalError) {
        if let Some(b) = best {
            x = b.x;
            tau = b.tau;
            metrics = b.metrics;
        }
    }
    if matches!(status, SolveStatus::MaxIter | SolveStatus::NumericalError)
        && metrics.pres <= opts.inaccurate_tol
        && metrics.dres <= opts.inaccurate_tol
        && (metrics.gap <= opts.inaccurate_tol || metrics.relgap <= opts.inaccurate_tol)
    {
        status = SolveStatus::Inaccurate;
    }
    let xs: Vec<f64> = (&x / tau).iter().copied().collect();
    Ok(ConicSolution {
        status,
        objective: prog.objective.eval(&xs),
        x: xs,
        primal_residual: metrics.pres,
        dual_residual: metrics.dres,
        gap: metrics.gap,
        iterations,
        seconds: t0.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::planted::{contradictory_instance, planted_instance, PlantedKind};
    use crate::conic::LinExpr;

    fn opts() -> IpmOptions {
        IpmOptions::default()
    }

    #[test]
    fn lp_corner() {
        let mut p = ConicProgram::new();
        let x = p.add_free("x");
        p.add_le(LinExpr::var(x), LinExpr::constant(3.0), "cap");
        p.objective = LinExpr::var(x);
        let sol = solve(&p, &opts()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.x[0] - 3.0).abs() < 1e-7, "{:?}", sol.x);
    }

    #[test]
    fn soc_symmetry() {
        let mut p = ConicProgram::new();
        let x = p.add_free("x");
        let y = p.add_free("y");
        p.add_soc(LinExpr::constant(1.0), vec![LinExpr::var(x), LinExpr::var(y)], "ball");
        p.objective = LinExpr::var(x).add_term(y, 1.0);
        let sol = solve(&p, &opts()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((sol.x[0] - h).abs() < 1e-7 && (sol.x[1] - h).abs() < 1e-7, "{:?}", sol.x);
        assert!((sol.objective - 2f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn psd_eigenvalue_extreme() {
        let mut p = ConicProgram::new();
        let a = p.add_free("x11");
        let b = p.add_free("x21");
        let c = p.add_free("x22");
        p.add_psd(2, vec![LinExpr::var(a), LinExpr::var(b), LinExpr::var(c)], "X");
        p.add_eq(LinExpr::var(a).add_term(c, 1.0), LinExpr::constant(1.0), "trace");
        p.objective = LinExpr::var(a).add_term(c, 2.0);
        let sol = solve(&p, &opts()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective - 2.0).abs() < 1e-7);
        assert!(sol.x[0].abs() < 1e-7 && sol.x[1].abs() < 1e-7 && (sol.x[2] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let mut p = ConicProgram::new();
        let x = p.add_var("x", Some(2.0), Some(1.0));
        p.objective = LinExpr::var(x);
        let sol = solve(&p, &opts()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
        let mut p = ConicProgram::new();
        let x = p.add_var("x", Some(2.0), None);
        let y = p.add_free("y");
        p.add_soc(LinExpr::constant(1.0), vec![LinExpr::var(x), LinExpr::var(y)], "ball");
        p.objective = LinExpr::var(y);
        assert_eq!(solve(&p, &opts()).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_is_reported() {
        let mut p = ConicProgram::new();
        let x = p.add_nonneg("x");
        p.objective = LinExpr::var(x);
        assert_eq!(solve(&p, &opts()).unwrap().status, SolveStatus::Unbounded);
    }

    #[test]
    fn planted_instances_small() {
        for seed in 0..10 {
            let kind = if seed % 2 == 0 { PlantedKind::Socp } else { PlantedKind::Sdp };
            let pl = planted_instance(seed, 6, kind);
            let sol = solve(&pl.program, &opts()).unwrap();
            assert_eq!(sol.status, SolveStatus::Optimal, "seed {seed}");
            let rel = (sol.objective - pl.optimum).abs() / pl.optimum.abs().max(1.0);
            assert!(rel < 1e-6, "seed {seed}: {} vs {}", sol.objective, pl.optimum);
            let rep = pl.program.check_feasibility(&sol.x).unwrap();
            assert!(rep.max() < 1e-7, "seed {seed}: {rep:?}");
        }
    }

    #[test]
    fn contradictory_planted_is_infeasible() {
        for seed in 0..5 {
            let p = contradictory_instance(seed, 5, PlantedKind::Sdp);
            assert_eq!(solve(&p, &opts()).unwrap().status, SolveStatus::Infeasible, "seed {seed}");
        }
    }

    #[test]
    fn objective_scaling_keeps_argmax() {
        let pl = planted_instance(42, 6, PlantedKind::Socp);
        let base = solve(&pl.program, &opts()).unwrap();
        let mut scaled = pl.program.clone();
        scaled.objective = scaled.objective.scaled(1e3);
        let sol = solve(&scaled, &opts()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        for (a, b) in base.x.iter().zip(&sol.x) {
            assert!((a - b).abs() < 1e-6 * (1.0 + a.abs()), "{a} vs {b}");
        }
        assert!((sol.objective - 1e3 * base.objective).abs() < 1e-6 * sol.objective.abs().max(1.0));
    }

    #[test]
    fn deterministic() {
        let pl = planted_instance(3, 8, PlantedKind::Sdp);
        let a = solve(&pl.program, &opts()).unwrap();
        let b = solve(&pl.program, &opts()).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.iterations, b.iterations);
    }
}
