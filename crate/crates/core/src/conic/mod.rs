//! Conic program representation and an interior-point backend.
//!
//! A [`ConicProgram`] maximizes a linear objective over variables subject to
//! linear equalities, linear inequalities `a x <= b`, variable bounds, and
//! cone blocks whose entries are affine expressions of the variables.

mod cones;
mod ipm;
pub mod planted;

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ipm::{solve, IpmOptions};

/// Affine expression `sum coef * x[var] + constant`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn var(v: usize) -> Self {
        Self { terms: vec![(v, 1.0)], constant: 0.0 }
    }

    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn term(v: usize, coef: f64) -> Self {
        Self { terms: vec![(v, coef)], constant: 0.0 }
    }

    pub fn add_term(mut self, v: usize, coef: f64) -> Self {
        self.terms.push((v, coef));
        self
    }

    pub fn add_const(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn push(&mut self, v: usize, coef: f64) {
        self.terms.push((v, coef));
    }

    pub fn plus(mut self, other: &LinExpr, scale: f64) -> Self {
        self.terms.extend(other.terms.iter().map(|(v, c)| (*v, c * scale)));
        self.constant += other.constant * scale;
        self
    }

    pub fn scaled(mut self, k: f64) -> Self {
        self.terms.iter_mut().for_each(|t| t.1 *= k);
        self.constant *= k;
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(v, c)| c * x[*v]).sum::<f64>()
    }

    /// Merges duplicate variables and drops zero coefficients.
    pub fn compact(&self) -> Self {
        let mut map: Vec<(usize, f64)> = Vec::with_capacity(self.terms.len());
        let mut sorted = self.terms.clone();
        sorted.sort_by_key(|t| t.0);
        for (v, c) in sorted {
            match map.last_mut() {
                Some(last) if last.0 == v => last.1 += c,
                _ => map.push((v, c)),
            }
        }
        map.retain(|t| t.1 != 0.0);
        Self { terms: map, constant: self.constant }
    }
}

/// Linear row `expr (<= | =) 0`, i.e. the constant of `expr` acts as minus
/// the right-hand side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRow {
    pub expr: LinExpr,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum ConeKind {
    /// `entries[0] >= ||entries[1..]||`.
    Soc,
    /// Symmetric `dim x dim` matrix PSD; `entries` hold the lower triangle
    /// in column-major order.
    Psd { dim: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeBlock {
    pub kind: ConeKind,
    pub entries: Vec<LinExpr>,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Bound {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConicProgram {
    pub names: Vec<String>,
    pub bounds: Vec<Bound>,
    /// Maximized.
    pub objective: LinExpr,
    pub eq: Vec<LinearRow>,
    pub ineq: Vec<LinearRow>,
    pub cones: Vec<ConeBlock>,
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lo: Option<f64>, hi: Option<f64>) -> usize {
        self.names.push(name.into());
        self.bounds.push(Bound { lo, hi });
        self.names.len() - 1
    }

    pub fn add_free(&mut self, name: impl Into<String>) -> usize {
        self.add_var(name, None, None)
    }

    pub fn add_nonneg(&mut self, name: impl Into<String>) -> usize {
        self.add_var(name, Some(0.0), None)
    }

    /// `lhs <= rhs`.
    pub fn add_le(&mut self, lhs: LinExpr, rhs: LinExpr, label: impl Into<String>) {
        let expr = lhs.plus(&rhs, -1.0);
        self.ineq.push(LinearRow { expr, label: label.into() });
    }

    /// `lhs = rhs`.
    pub fn add_eq(&mut self, lhs: LinExpr, rhs: LinExpr, label: impl Into<String>) {
        let expr = lhs.plus(&rhs, -1.0);
        self.eq.push(LinearRow { expr, label: label.into() });
    }

    /// `head >= ||tail||`.
    pub fn add_soc(&mut self, head: LinExpr, tail: Vec<LinExpr>, label: impl Into<String>) {
        let mut entries = Vec::with_capacity(tail.len() + 1);
        entries.push(head);
        entries.extend(tail);
        self.cones.push(ConeBlock { kind: ConeKind::Soc, entries, label: label.into() });
    }

    /// `u v >= w^2 + ||rest||^2` with `u, v >= 0`, written as
    /// `u + v >= ||(2w, 2rest, u - v)||`.
    pub fn add_rotated_soc(
        &mut self,
        u: LinExpr,
        v: LinExpr,
        w: Vec<LinExpr>,
        label: impl Into<String>,
    ) {
        let head = u.clone().plus(&v, 1.0);
        let mut tail: Vec<LinExpr> = w.into_iter().map(|e| e.scaled(2.0)).collect();
        tail.push(u.plus(&v, -1.0));
        self.add_soc(head, tail, label);
    }

    pub fn add_psd(&mut self, dim: usize, lower: Vec<LinExpr>, label: impl Into<String>) {
        self.cones.push(ConeBlock { kind: ConeKind::Psd { dim }, entries: lower, label: label.into() });
    }

    pub fn name_map(&self) -> HashMap<&str, usize> {
        self.names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.eval(x)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        let bad = |m: String| Err(Error::InvalidProgram(m));
        if self.bounds.len() != n {
            return bad(format!("{} bounds for {} variables", self.bounds.len(), n));
        }
        let check_expr = |e: &LinExpr, what: &str| -> Result<()> {
            if !e.constant.is_finite() {
                return Err(Error::InvalidProgram(format!("{what}: non-finite constant")));
            }
            for (v, c) in &e.terms {
                if *v >= n {
                    return Err(Error::InvalidProgram(format!(
                        "{what}: variable index {v} out of range ({n} variables)"
                    )));
                }
                if !c.is_finite() {
                    return Err(Error::InvalidProgram(format!("{what}: non-finite coefficient")));
                }
            }
            Ok(())
        };
        check_expr(&self.objective, "objective")?;
        for r in self.eq.iter().chain(&self.ineq) {
            check_expr(&r.expr, &r.label)?;
        }
        for (i, b) in self.bounds.iter().enumerate() {
            if b.lo.is_some_and(|v| !v.is_finite()) || b.hi.is_some_and(|v| !v.is_finite()) {
                return bad(format!("variable {} has a non-finite bound", self.names[i]));
            }
        }
        for c in &self.cones {
            for e in &c.entries {
                check_expr(e, &c.label)?;
            }
            match c.kind {
                ConeKind::Soc if c.entries.len() < 2 => {
                    return bad(format!("SOC block {} needs >= 2 entries", c.label));
                }
                ConeKind::Psd { dim } if dim == 0 || c.entries.len() != dim * (dim + 1) / 2 => {
                    return bad(format!(
                        "PSD block {} of dim {} has {} entries",
                        c.label,
                        dim,
                        c.entries.len()
                    ));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Constraint residuals of a candidate point; every entry is a
    /// violation amount, clamped at zero.
    pub fn check_feasibility(&self, x: &[f64]) -> Result<FeasibilityReport> {
        if x.len() != self.n_vars() {
            return Err(Error::Dimension(format!(
                "point has {} entries, program has {} variables",
                x.len(),
                self.n_vars()
            )));
        }
        let mut rep = FeasibilityReport::default();
        for r in &self.eq {
            rep.equality = rep.equality.max(r.expr.eval(x).abs());
        }
        for r in &self.ineq {
            rep.inequality = rep.inequality.max(r.expr.eval(x));
        }
        for (b, xi) in self.bounds.iter().zip(x) {
            if let Some(lo) = b.lo {
                rep.bounds = rep.bounds.max(lo - xi);
            }
            if let Some(hi) = b.hi {
                rep.bounds = rep.bounds.max(xi - hi);
            }
        }
        for c in &self.cones {
            let vals: Vec<f64> = c.entries.iter().map(|e| e.eval(x)).collect();
            match c.kind {
                ConeKind::Soc => {
                    let tail = vals[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
                    rep.soc = rep.soc.max(tail - vals[0]);
                }
                ConeKind::Psd { dim } => {
                    let m = lower_to_matrix(&vals, dim);
                    rep.psd = rep.psd.max(-m.symmetric_eigenvalues().min());
                }
            }
        }
        for v in [&mut rep.equality, &mut rep.inequality, &mut rep.bounds, &mut rep.soc, &mut rep.psd] {
            *v = v.max(0.0);
        }
        Ok(rep)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }
}

pub(crate) fn lower_to_matrix(vals: &[f64], dim: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, dim);
    let mut k = 0;
    for j in 0..dim {
        for i in j..dim {
            m[(i, j)] = vals[k];
            m[(j, i)] = vals[k];
            k += 1;
        }
    }
    m
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub equality: f64,
    pub inequality: f64,
    pub bounds: f64,
    pub soc: f64,
    /// Negated minimum eigenvalue over PSD blocks.
    pub psd: f64,
}

impl FeasibilityReport {
    pub fn max(&self) -> f64 {
        [self.equality, self.inequality, self.bounds, self.soc, self.psd]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    /// Optimal to a relaxed tolerance.
    Inaccurate,
    Infeasible,
    Unbounded,
    MaxIter,
    NumericalError,
}

impl SolveStatus {
    pub fn is_usable(&self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::Inaccurate)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConicSolution {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    /// Maximized objective at `x`.
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub iterations: usize,
    pub seconds: f64,
}
