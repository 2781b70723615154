//! First-order surrogates used by the successive convex approximation.
//!
//! `F1` is the tangent minorant of the jointly convex `|x|^2 / y`, `F4` the
//! arithmetic-geometric upper bound of `x y`, and [`BilinearMinorant`] and
//! [`RootMinorant`] lower bounds of `x y`. `F2` and `F3` are the plain linearizations
//! of `x / y` and `x^(1/y)`.

use crate::channels::C64;
use crate::error::{Error, Result};

/// Affine function `value + grad . (v - point)` over real coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineForm {
    pub point: Vec<f64>,
    pub value: f64,
    pub grad: Vec<f64>,
}

impl AffineForm {
    pub fn eval(&self, v: &[f64]) -> f64 {
        self.value
            + self.grad.iter().zip(v).zip(&self.point).map(|((g, a), b)| g * (a - b)).sum::<f64>()
    }
}

pub fn f1(x: C64, y: f64) -> f64 {
    x.norm_sqr() / y
}

/// Tangent minorant of `|x|^2 / y` at `(x_n, y_n)` in coordinates
/// `(Re x, Im x, y)`: `2 Re(conj(x_n) x) / y_n - |x_n|^2 y / y_n^2`.
pub fn surrogate_f1(x_n: C64, y_n: f64) -> Result<AffineForm> {
    if !(y_n > 0.0) {
        return Err(Error::Domain(format!("F1 needs y_n > 0, got {y_n}")));
    }
    Ok(AffineForm {
        point: vec![x_n.re, x_n.im, y_n],
        value: f1(x_n, y_n),
        grad: vec![2.0 * x_n.re / y_n, 2.0 * x_n.im / y_n, -x_n.norm_sqr() / (y_n * y_n)],
    })
}

pub fn f2(x: f64, y: f64) -> f64 {
    x / y
}

pub fn surrogate_f2(x_n: f64, y_n: f64) -> Result<AffineForm> {
    if !(y_n > 0.0) {
        return Err(Error::Domain(format!("F2 needs y_n > 0, got {y_n}")));
    }
    Ok(AffineForm {
        point: vec![x_n, y_n],
        value: f2(x_n, y_n),
        grad: vec![1.0 / y_n, -x_n / (y_n * y_n)],
    })
}

pub fn f3(x: f64, y: f64) -> f64 {
    x.powf(1.0 / y)
}

pub fn surrogate_f3(x_n: f64, y_n: f64) -> Result<AffineForm> {
    if !(x_n >= 1.0 && y_n > 0.0 && y_n < 1.0) {
        return Err(Error::Domain(format!("F3 needs x_n >= 1 and y_n in (0,1), got ({x_n}, {y_n})")));
    }
    let v = f3(x_n, y_n);
    Ok(AffineForm {
        point: vec![x_n, y_n],
        value: v,
        grad: vec![x_n.powf(1.0 / y_n - 1.0) / y_n, -v * x_n.ln() / (y_n * y_n)],
    })
}

/// Convex upper bound `0.5 (phi x^2 + y^2 / phi)` of `x y` for `x, y >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F4 {
    pub phi: f64,
}

impl F4 {
    /// Expansion at `(x_n, y_n)` with `phi = y_n / x_n`.
    pub fn at(x_n: f64, y_n: f64) -> Result<Self> {
        if !(x_n > 0.0 && y_n > 0.0) {
            return Err(Error::Domain(format!("F4 needs x_n, y_n > 0, got ({x_n}, {y_n})")));
        }
        Ok(Self { phi: y_n / x_n })
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        0.5 * (self.phi * x * x + y * y / self.phi)
    }
}

pub fn surrogate_f4_upper(x_n: f64, y_n: f64) -> Result<F4> {
    F4::at(x_n, y_n)
}

/// Concave lower bound of `x y` tangent at `(x_n, y_n)`:
/// `x y = (P^2 - Q^2) / 4` with `P = k x + y / k`, `Q = k x - y / k`, and
/// `P^2` replaced by its tangent `2 P_n P - P_n^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilinearMinorant {
    pub kappa: f64,
    pub p_n: f64,
}

impl BilinearMinorant {
    /// `kappa` balances the two factors; any positive value keeps the bound
    /// valid and tangent.
    pub fn at(x_n: f64, y_n: f64, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::Domain(format!("kappa must be positive, got {kappa}")));
        }
        Ok(Self { kappa, p_n: kappa * x_n + y_n / kappa })
    }

    /// Balanced choice `kappa = sqrt(y_n / x_n)` with both inputs floored.
    pub fn balanced(x_n: f64, y_n: f64, floor: f64) -> Result<Self> {
        let kappa = (y_n.max(floor) / x_n.max(floor)).sqrt();
        Self::at(x_n, y_n, kappa)
    }

    pub fn p(&self, x: f64, y: f64) -> f64 {
        self.kappa * x + y / self.kappa
    }

    pub fn q(&self, x: f64, y: f64) -> f64 {
        self.kappa * x - y / self.kappa
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let q = self.q(x, y);
        (2.0 * self.p_n * self.p(x, y) - self.p_n * self.p_n - q * q) / 4.0
    }
}

/// Lower bound of `x y` through the convex set `s^2 <= x y`: any `z` with
/// `z <= 2 s_n s - s_n^2` stays below `x y`, with equality at the expansion
/// point and along the whole curve `x y = x_n y_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootMinorant {
    pub s_n: f64,
    /// `sqrt(y_n / x_n)`, used to scale the cone sides.
    pub kappa: f64,
}

impl RootMinorant {
    pub fn at(x_n: f64, y_n: f64) -> Result<Self> {
        let s_n = (x_n * y_n).sqrt();
        let kappa = (y_n / x_n).sqrt();
        if !(x_n > 0.0 && y_n > 0.0 && s_n.is_finite() && kappa.is_finite()) {
            return Err(Error::Domain(format!("root minorant needs x_n, y_n > 0, got ({x_n}, {y_n})")));
        }
        Ok(Self { s_n, kappa })
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        2.0 * self.s_n * (x * y).max(0.0).sqrt() - self.s_n * self.s_n
    }
}

/// Lower bound used for a rate-times-duration product: [`RootMinorant`]
/// when the product is not tiny, otherwise [`BilinearMinorant`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProductMinorant {
    Root(RootMinorant),
    Bilinear(BilinearMinorant),
}

impl ProductMinorant {
    /// Smallest `sqrt(x_n y_n)` handled by the root form.
    pub const ROOT_MIN: f64 = 1e-3;

    pub fn at(x_n: f64, y_n: f64, floor: f64) -> Result<Self> {
        if x_n > 0.0 && y_n > 0.0 && (x_n * y_n).sqrt() >= Self::ROOT_MIN {
            Ok(Self::Root(RootMinorant::at(x_n, y_n)?))
        } else {
            Ok(Self::Bilinear(BilinearMinorant::balanced(x_n, y_n, floor)?))
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Self::Root(m) => m.eval(x, y),
            Self::Bilinear(m) => m.eval(x, y),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn f1_examples() {
        let s = surrogate_f1(c(1.0, 0.0), 1.0).unwrap();
        assert_eq!(s.eval(&[1.0, 0.0, 1.0]), 1.0);
        assert_eq!(s.eval(&[2.0, 0.0, 1.0]), 3.0);
        assert_eq!(f1(c(2.0, 0.0), 1.0), 4.0);
        // Phase-consistent: only Re(conj(x_n) x) enters.
        let s = surrogate_f1(c(0.0, 1.0), 1.0).unwrap();
        assert_eq!(s.eval(&[0.0, 1.0, 1.0]), 1.0);
        assert_eq!(s.eval(&[1.0, 0.0, 1.0]), -1.0);
        assert!(surrogate_f1(c(1.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn f2_f3_examples() {
        let s = surrogate_f2(1.0, 1.0).unwrap();
        assert!((s.eval(&[2.0, 1.0]) - 2.0).abs() < 1e-15);
        let s = surrogate_f3(1.0, 0.5).unwrap();
        assert_eq!(s.value, 1.0);
        assert!((s.grad[0] - 2.0).abs() < 1e-15 && s.grad[1].abs() < 1e-15);
        assert!((s.eval(&[1.5, 0.3]) - 2.0).abs() < 1e-15);
        assert!(surrogate_f3(0.5, 0.5).is_err());
        assert!(surrogate_f3(2.0, 1.0).is_err());
        assert!(surrogate_f2(1.0, -1.0).is_err());
    }

    #[test]
    fn f4_examples() {
        let f = surrogate_f4_upper(1.0, 1.0).unwrap();
        assert_eq!(f.eval(1.0, 1.0), 1.0);
        assert_eq!(f.eval(2.0, 1.0), 2.5);
        let f = F4 { phi: 2.0 };
        assert_eq!(f.eval(1.0, 2.0), 2.0);
        assert!(surrogate_f4_upper(0.0, 1.0).is_err());
    }

    fn fd_grad(f: impl Fn(&[f64]) -> f64, p: &[f64]) -> Vec<f64> {
        (0..p.len())
            .map(|k| {
                let h = 1e-6 * p[k].abs().max(1.0);
                let mut a = p.to_vec();
                let mut b = p.to_vec();
                a[k] += h;
                b[k] -= h;
                (f(&a) - f(&b)) / (2.0 * h)
            })
            .collect()
    }

    fn rel_close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0))
    }

    proptest! {
        #[test]
        fn f1_minorant_and_tangent(
            xr in -5.0..5.0f64, xi in -5.0..5.0f64, y in 0.01..10.0f64,
            ar in -5.0..5.0f64, ai in -5.0..5.0f64, b in 0.01..10.0f64,
        ) {
            let s = surrogate_f1(c(xr, xi), y).unwrap();
            prop_assert!((s.eval(&[xr, xi, y]) - f1(c(xr, xi), y)).abs() <= 1e-10 * s.value.max(1.0));
            prop_assert!(s.eval(&[ar, ai, b]) <= f1(c(ar, ai), b) + 1e-9);
            let g = fd_grad(|v| f1(c(v[0], v[1]), v[2]), &s.point);
            prop_assert!(rel_close(&g, &s.grad, 1e-5));
        }

        #[test]
        fn f2_tangent_and_gradient(x in -5.0..5.0f64, y in 0.05..10.0f64) {
            let s = surrogate_f2(x, y).unwrap();
            prop_assert!((s.eval(&[x, y]) - f2(x, y)).abs() <= 1e-12);
            let g = fd_grad(|v| f2(v[0], v[1]), &s.point);
            prop_assert!(rel_close(&g, &s.grad, 1e-5));
        }

        #[test]
        fn f3_tangent_and_gradient(x in 1.0..4.0f64, y in 0.2..0.95f64) {
            let s = surrogate_f3(x, y).unwrap();
            prop_assert!((s.eval(&[x, y]) - f3(x, y)).abs() <= 1e-12 * s.value);
            let g = fd_grad(|v| f3(v[0], v[1]), &s.point);
            prop_assert!(rel_close(&g, &s.grad, 1e-5));
        }

        #[test]
        fn f4_majorant(xn in 0.01..10.0f64, yn in 0.01..10.0f64, x in 0.0..10.0f64, y in 0.0..10.0f64) {
            let f = F4::at(xn, yn).unwrap();
            prop_assert!((f.eval(xn, yn) - xn * yn).abs() <= 1e-10 * (xn * yn).max(1.0));
            prop_assert!(f.eval(x, y) >= x * y - 1e-12);
        }

        #[test]
        fn bilinear_minorant(xn in 0.0..2.0f64, yn in 0.0..20.0f64, x in 0.0..2.0f64, y in 0.0..20.0f64) {
            let m = BilinearMinorant::balanced(xn, yn, 1e-6).unwrap();
            prop_assert!((m.eval(xn, yn) - xn * yn).abs() <= 1e-9 * (xn * yn).max(1.0));
            prop_assert!(m.eval(x, y) <= x * y + 1e-9);
        }

        #[test]
        fn product_minorant(xn in 0.0..1.0f64, yn in 0.0..20.0f64, x in 0.0..1.0f64, y in 0.0..20.0f64, c in 0.05..20.0f64) {
            let m = ProductMinorant::at(xn, yn, 1e-6).unwrap();
            prop_assert!((m.eval(xn, yn) - xn * yn).abs() <= 1e-9 * (xn * yn).max(1.0));
            prop_assert!(m.eval(x, y) <= x * y + 1e-9);
            if let ProductMinorant::Root(r) = m {
                // Exact along the level set of the product.
                prop_assert!((r.eval(xn * c, yn / c) - xn * yn).abs() <= 1e-9 * (xn * yn).max(1.0));
            }
        }
    }

    #[test]
    fn product_minorant_switches_on_size() {
        assert!(matches!(ProductMinorant::at(0.5, 4.0, 1e-6).unwrap(), ProductMinorant::Root(_)));
        assert!(matches!(ProductMinorant::at(1e-3, 1e-6, 1e-6).unwrap(), ProductMinorant::Bilinear(_)));
        assert!(matches!(ProductMinorant::at(0.5, 0.0, 1e-6).unwrap(), ProductMinorant::Bilinear(_)));
        let r = RootMinorant::at(0.25, 4.0).unwrap();
        assert_eq!(r.eval(0.25, 4.0), 1.0);
        assert_eq!(r.eval(1.0, 1.0), 1.0);
        assert_eq!(r.eval(1.0, 4.0), 3.0);
        assert!(RootMinorant::at(0.0, 1.0).is_err());
    }
}
