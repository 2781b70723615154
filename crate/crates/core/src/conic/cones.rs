//! Cone algebra for the interior-point solver: Jordan products, Nesterov-Todd
//! scalings and step-to-boundary computations for the nonnegative orthant,
//! second-order cones and PSD cones (in `svec` form).

use nalgebra::{DMatrix, DVector};

const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ConeType {
    Nonneg,
    Soc,
    /// PSD cone of `n x n` symmetric matrices, stored as `svec`
    /// (lower triangle, column-major, off-diagonals scaled by sqrt 2).
    Psd(usize),
}

impl ConeType {
    pub fn degree(&self) -> usize {
        match self {
            ConeType::Nonneg | ConeType::Soc => 1,
            ConeType::Psd(n) => *n,
        }
    }
}

pub(crate) fn svec_len(n: usize) -> usize {
    n * (n + 1) / 2
}

pub(crate) fn smat(v: &[f64], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for j in 0..n {
        for i in j..n {
            if i == j {
                m[(i, i)] = v[k];
            } else {
                let x = v[k] / SQRT2;
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
            k += 1;
        }
    }
    m
}

pub(crate) fn svec_into(m: &DMatrix<f64>, out: &mut [f64]) {
    let n = m.nrows();
    let mut k = 0;
    for j in 0..n {
        for i in j..n {
            out[k] = if i == j { m[(i, i)] } else { 0.5 * (m[(i, j)] + m[(j, i)]) * SQRT2 };
            k += 1;
        }
    }
}

/// Jordan product `x o y`.
pub(crate) fn jprod(kind: ConeType, x: &[f64], y: &[f64], out: &mut [f64]) {
    match kind {
        ConeType::Nonneg => out[0] = x[0] * y[0],
        ConeType::Soc => {
            out[0] = x.iter().zip(y).map(|(a, b)| a * b).sum();
            for k in 1..x.len() {
                out[k] = x[0] * y[k] + y[0] * x[k];
            }
        }
        ConeType::Psd(n) => {
            let a = smat(x, n);
            let b = smat(y, n);
            let p = (&a * &b + &b * &a) * 0.5;
            svec_into(&p, out);
        }
    }
}

pub(crate) fn identity(kind: ConeType, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    match kind {
        ConeType::Nonneg | ConeType::Soc => out[0] = 1.0,
        ConeType::Psd(n) => {
            let mut k = 0;
            for j in 0..n {
                out[k] = 1.0;
                k += n - j;
            }
        }
    }
}

/// Smallest `t` such that `x + t e` lies in the cone (the negated minimum
/// "eigenvalue" of `x`).
pub(crate) fn max_violation(kind: ConeType, x: &[f64]) -> f64 {
    match kind {
        ConeType::Nonneg => -x[0],
        ConeType::Soc => norm(&x[1..]) - x[0],
        ConeType::Psd(n) => -smat(x, n).symmetric_eigenvalues().min(),
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn jnorm_sq(x: &[f64]) -> f64 {
    x[0] * x[0] - x[1..].iter().map(|a| a * a).sum::<f64>()
}

/// Largest `a >= 0` with `x + a d` in the cone, assuming `x` interior.
/// Returns `f64::INFINITY` when the ray never leaves the cone.
pub(crate) fn max_step(kind: ConeType, x: &[f64], d: &[f64]) -> f64 {
    match kind {
        ConeType::Nonneg => {
            if d[0] < 0.0 {
                -x[0] / d[0]
            } else {
                f64::INFINITY
            }
        }
        ConeType::Soc => {
            let a = jnorm_sq(d);
            let b = 2.0 * (x[0] * d[0] - x[1..].iter().zip(&d[1..]).map(|(p, q)| p * q).sum::<f64>());
            let c = jnorm_sq(x).max(0.0);
            smallest_positive_root(a, b, c)
        }
        ConeType::Psd(n) => {
            let xm = smat(x, n);
            let dm = smat(d, n);
            let Some(chol) = xm.cholesky() else { return 0.0 };
            let l = chol.l();
            let linv = match l.clone().try_inverse() {
                Some(m) => m,
                None => return 0.0,
            };
            let m = &linv * dm * linv.transpose();
            let m = (&m + m.transpose()) * 0.5;
            let lmin = m.symmetric_eigenvalues().min();
            if lmin < 0.0 {
                -1.0 / lmin
            } else {
                f64::INFINITY
            }
        }
    }
}

fn smallest_positive_root(a: f64, b: f64, c: f64) -> f64 {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return f64::INFINITY;
    }
    if a.abs() <= 1e-14 * scale {
        return if b < 0.0 { -c / b } else { f64::INFINITY };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return f64::INFINITY;
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + b.signum() * sq);
    let mut roots = [f64::INFINITY; 2];
    if q != 0.0 {
        roots[0] = q / a;
        roots[1] = c / q;
    } else {
        roots[0] = 0.0;
    }
    roots.iter().copied().filter(|r| *r > 0.0).fold(f64::INFINITY, f64::min)
}

/// Nesterov-Todd scaling `W` of one cone block with `W z = W^{-T} s = lambda`.
#[derive(Debug, Clone)]
pub(crate) enum Scaling {
    /// `W = d I`.
    Nonneg { d: f64 },
    /// `W = eta * H(w)` where `H(w)` is the hyperbolic rotation taking `e`
    /// to the unit-Lorentz-norm vector `w`.
    Soc { eta: f64, w: DVector<f64> },
    /// `W(Z) = R^T Z R`.
    Psd { n: usize, r: DMatrix<f64>, rinv: DMatrix<f64> },
}

fn hyperbolic(w: &[f64], v: &[f64], out: &mut [f64], flip: bool) {
    // H(w) v with H(w) = [[w0, w1^T], [w1, I + w1 w1^T / (1 + w0)]];
    // flip uses J w (the inverse rotation).
    let sgn = if flip { -1.0 } else { 1.0 };
    let w0 = w[0];
    let dot: f64 = w[1..].iter().zip(&v[1..]).map(|(a, b)| a * b).sum::<f64>() * sgn;
    out[0] = w0 * v[0] + dot;
    let coef = v[0] + dot / (1.0 + w0);
    for k in 1..w.len() {
        out[k] = v[k] + coef * w[k] * sgn;
    }
}

impl Scaling {
    pub fn identity(kind: ConeType, dim: usize) -> Scaling {
        match kind {
            ConeType::Nonneg => Scaling::Nonneg { d: 1.0 },
            ConeType::Soc => {
                let mut w = DVector::zeros(dim);
                w[0] = 1.0;
                Scaling::Soc { eta: 1.0, w }
            }
            ConeType::Psd(n) => {
                Scaling::Psd { n, r: DMatrix::identity(n, n), rinv: DMatrix::identity(n, n) }
            }
        }
    }

    /// Computes the NT scaling for interior `s`, `z` and returns it with
    /// `lambda = W z`.
    pub fn compute(kind: ConeType, s: &[f64], z: &[f64]) -> Option<(Scaling, Vec<f64>)> {
        match kind {
            ConeType::Nonneg => {
                if !(s[0] > 0.0 && z[0] > 0.0) {
                    return None;
                }
                Some((Scaling::Nonneg { d: (s[0] / z[0]).sqrt() }, vec![(s[0] * z[0]).sqrt()]))
            }
            ConeType::Soc => {
                let js = jnorm_sq(s);
                let jz = jnorm_sq(z);
                if !(js > 0.0 && jz > 0.0 && s[0] > 0.0 && z[0] > 0.0) {
                    return None;
                }
                let sn = js.sqrt();
                let zn = jz.sqrt();
                let sb: Vec<f64> = s.iter().map(|v| v / sn).collect();
                let zb: Vec<f64> = z.iter().map(|v| v / zn).collect();
                let dot: f64 = sb.iter().zip(&zb).map(|(a, b)| a * b).sum();
                let gamma = ((1.0 + dot) * 0.5).sqrt();
                let mut w = DVector::zeros(s.len());
                w[0] = (sb[0] + zb[0]) / (2.0 * gamma);
                for k in 1..s.len() {
                    w[k] = (sb[k] - zb[k]) / (2.0 * gamma);
                }
                let eta = (sn / zn).sqrt();
                let sc = Scaling::Soc { eta, w };
                let mut lam = vec![0.0; s.len()];
                sc.apply(z, &mut lam);
                Some((sc, lam))
            }
            ConeType::Psd(n) => {
                let sm = smat(s, n);
                let zm = smat(z, n);
                let ls = sm.cholesky()?.l();
                let lz = zm.cholesky()?.l();
                let prod = lz.transpose() * &ls;
                let svd = prod.svd(true, true);
                let v_t = svd.v_t?;
                let u = svd.u?;
                let sig = svd.singular_values;
                if sig.iter().any(|x| !(*x > 0.0)) {
                    return None;
                }
                let isq = DMatrix::from_diagonal(&sig.map(|x| 1.0 / x.sqrt()));
                let r = &ls * v_t.transpose() * &isq;
                // R^{-1} = Sigma^{-1/2} U^T L_z^T, avoids inverting L_s.
                let rinv = &isq * u.transpose() * lz.transpose();
                let mut lam = vec![0.0; svec_len(n)];
                svec_into(&DMatrix::from_diagonal(&sig), &mut lam);
                Some((Scaling::Psd { n, r, rinv }, lam))
            }
        }
    }

    /// `W v`.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::Nonneg { d } => out[0] = d * v[0],
            Scaling::Soc { eta, w } => {
                hyperbolic(w.as_slice(), v, out, false);
                out.iter_mut().for_each(|o| *o *= eta);
            }
            Scaling::Psd { n, r, .. } => {
                let m = smat(v, *n);
                svec_into(&(r.transpose() * m * r), out);
            }
        }
    }

    /// `W^T v`.
    pub fn apply_t(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::Psd { n, r, .. } => {
                let m = smat(v, *n);
                svec_into(&(r * m * r.transpose()), out);
            }
            _ => self.apply(v, out),
        }
    }

    /// `W^{-1} v`.
    pub fn apply_inv(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::Nonneg { d } => out[0] = v[0] / d,
            Scaling::Soc { eta, w } => {
                hyperbolic(w.as_slice(), v, out, true);
                out.iter_mut().for_each(|o| *o /= eta);
            }
            Scaling::Psd { n, rinv, .. } => {
                let m = smat(v, *n);
                svec_into(&(rinv.transpose() * m * rinv), out);
            }
        }
    }

    /// `W^{-T} v`.
    pub fn apply_inv_t(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::Psd { n, rinv, .. } => {
                let m = smat(v, *n);
                svec_into(&(rinv * m * rinv.transpose()), out);
            }
            _ => self.apply_inv(v, out),
        }
    }
}

/// Solves `lambda o v = d` for `v`.
pub(crate) fn jdiv(kind: ConeType, lam: &[f64], d: &[f64], out: &mut [f64]) {
    match kind {
        ConeType::Nonneg => out[0] = d[0] / lam[0],
        ConeType::Soc => {
            let l0 = lam[0];
            let det = jnorm_sq(lam);
            let ld: f64 = lam[1..].iter().zip(&d[1..]).map(|(a, b)| a * b).sum();
            let v0 = (l0 * d[0] - ld) / det;
            out[0] = v0;
            for k in 1..lam.len() {
                out[k] = (d[k] - v0 * lam[k]) / l0;
            }
        }
        ConeType::Psd(n) => {
            // lambda is diagonal in the NT frame.
            let mut diag = Vec::with_capacity(n);
            let mut k = 0;
            for j in 0..n {
                diag.push(lam[k]);
                k += n - j;
            }
            let mut k = 0;
            for j in 0..n {
                for i in j..n {
                    out[k] = 2.0 * d[k] / (diag[i] + diag[j]);
                    k += 1;
                }
            }
        }
    }
}
