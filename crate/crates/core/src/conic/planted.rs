//! Random conic programs with a known optimum, for exercising solvers.
//!
//! Each instance is built from a primal point `x*`, complementary slack and
//! multiplier pairs `(s*, z*)` per cone block and equality multipliers `y*`;
//! the objective is chosen so the KKT conditions hold at `x*`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use super::{ConicProgram, LinExpr};

#[derive(Debug, Clone)]
pub struct Planted {
    pub program: ConicProgram,
    pub x_star: Vec<f64>,
    pub optimum: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlantedKind {
    /// Linear and second-order cone blocks only.
    Socp,
    /// Adds one PSD block.
    Sdp,
}

fn normal(rng: &mut ChaCha20Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn random_orthogonal(rng: &mut ChaCha20Rng, n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| normal(rng));
    m.qr().q()
}

/// Adds a block of `entries(x) = c + A x` with value `s*` at `x*` and
/// accumulates `A^T z*` into the objective.
fn push_block(
    rng: &mut ChaCha20Rng,
    x_star: &[f64],
    s_star: &[f64],
    z_star: &[f64],
    obj: &mut [f64],
) -> Vec<LinExpr> {
    let n = x_star.len();
    let mut entries = Vec::with_capacity(s_star.len());
    for (s, z) in s_star.iter().zip(z_star) {
        let a: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
        let ax: f64 = a.iter().zip(x_star).map(|(p, q)| p * q).sum();
        let mut e = LinExpr::constant(s - ax);
        for (j, aj) in a.iter().enumerate() {
            e.push(j, *aj);
            obj[j] -= aj * z;
        }
        entries.push(e);
    }
    entries
}

/// Generates a feasible, bounded instance with `n` variables.
pub fn planted_instance(seed: u64, n: usize, kind: PlantedKind) -> Planted {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let x_star: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let mut obj = vec![0.0; n];
    let mut prog = ConicProgram::new();
    for j in 0..n {
        prog.add_free(format!("x{j}"));
    }

    // LP rows with random complementary pattern.
    for i in 0..n {
        let (s, z) = if rng.gen_bool(0.5) {
            (0.0, rng.gen_range(0.5..2.0))
        } else {
            (rng.gen_range(0.5..2.0), 0.0)
        };
        let e = push_block(&mut rng, &x_star, &[s], &[z], &mut obj).remove(0);
        prog.add_le(LinExpr::constant(0.0), e, format!("lp{i}"));
    }

    // Second-order cones.
    let n_soc = 2 + n / 3;
    for i in 0..n_soc {
        let d = rng.gen_range(2..6);
        let mut u = DVector::from_fn(d - 1, |_, _| normal(&mut rng));
        u /= u.norm();
        let a = rng.gen_range(0.5..2.0);
        let l = rng.gen_range(0.5..2.0);
        let (s, z): (Vec<f64>, Vec<f64>) = match rng.gen_range(0..3) {
            0 => (
                std::iter::once(a).chain(u.iter().map(|v| a * v)).collect(),
                std::iter::once(l).chain(u.iter().map(|v| -l * v)).collect(),
            ),
            1 => (
                std::iter::once(a * 2.0).chain(u.iter().map(|v| a * v)).collect(),
                vec![0.0; d],
            ),
            _ => (
                vec![0.0; d],
                std::iter::once(l * 2.0).chain(u.iter().map(|v| l * v)).collect(),
            ),
        };
        let mut entries = push_block(&mut rng, &x_star, &s, &z, &mut obj);
        let head = entries.remove(0);
        prog.add_soc(head, entries, format!("soc{i}"));
    }

    if kind == PlantedKind::Sdp {
        let dim = rng.gen_range(2..5);
        let q = random_orthogonal(&mut rng, dim);
        let rank = rng.gen_range(1..dim);
        let ds = DVector::from_fn(dim, |i, _| if i < rank { rng.gen_range(0.5..2.0) } else { 0.0 });
        let dz = DVector::from_fn(dim, |i, _| if i >= rank { rng.gen_range(0.5..2.0) } else { 0.0 });
        let smat = &q * DMatrix::from_diagonal(&ds) * q.transpose();
        let zmat = &q * DMatrix::from_diagonal(&dz) * q.transpose();
        // Entries are raw lower-triangle values; the matching multiplier
        // weight for an off-diagonal entry counts both (i,j) and (j,i).
        let mut s = Vec::new();
        let mut z = Vec::new();
        for j in 0..dim {
            for i in j..dim {
                s.push(smat[(i, j)]);
                z.push(if i == j { zmat[(i, j)] } else { 2.0 * zmat[(i, j)] });
            }
        }
        let entries = push_block(&mut rng, &x_star, &s, &z, &mut obj);
        prog.add_psd(dim, entries, "psd");
    }

    // A few equalities with arbitrary multipliers.
    for i in 0..(n / 4).max(1) {
        let a: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
        let y = normal(&mut rng);
        let ax: f64 = a.iter().zip(&x_star).map(|(p, q)| p * q).sum();
        let mut e = LinExpr::constant(-ax);
        for (j, aj) in a.iter().enumerate() {
            e.push(j, *aj);
            obj[j] += aj * y;
        }
        prog.eq.push(super::LinearRow { expr: e, label: format!("eq{i}") });
    }

    let mut objective = LinExpr::constant(0.0);
    for (j, c) in obj.iter().enumerate() {
        objective.push(j, *c);
    }
    prog.objective = objective;
    let optimum = prog.objective.eval(&x_star);
    Planted { program: prog, x_star, optimum }
}

/// A planted instance with an added pair of contradictory linear
/// constraints, `a x <= t` and `a x >= t + 1`.
pub fn contradictory_instance(seed: u64, n: usize, kind: PlantedKind) -> ConicProgram {
    let mut p = planted_instance(seed, n, kind).program;
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x5eed);
    let mut a = LinExpr::constant(0.0);
    for j in 0..n {
        a.push(j, normal(&mut rng));
    }
    let t = normal(&mut rng);
    p.add_le(a.clone(), LinExpr::constant(t), "contra_hi");
    p.add_le(LinExpr::constant(t + 1.0), a, "contra_lo");
    p
}
