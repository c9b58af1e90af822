//! Halfspace polyhedra `{e | H e <= h}` and the maximal positive invariant set
//! iteration `O_{j+1} = Pre(A, O_j) ∩ O_j`.
//!
//! Set comparisons are decided by linear programs rather than by comparing
//! rows, so two representations of the same set compare equal regardless of
//! row order, scaling, or redundant rows.

pub mod lp;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use lp::LpOutcome;

/// Absolute tolerance on constraint slack for membership, redundancy and
/// inclusion tests.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct HPolyhedron {
    normals: DMatrix<f64>,
    offsets: DVector<f64>,
}

impl HPolyhedron {
    pub fn new(normals: DMatrix<f64>, offsets: DVector<f64>) -> Result<Self> {
        if normals.nrows() != offsets.len() {
            return Err(Error::DimensionMismatch {
                expected: normals.nrows(),
                got: offsets.len(),
            });
        }
        if normals.ncols() == 0 || normals.nrows() == 0 {
            return Err(Error::domain("polyhedron", "needs n >= 1 and r >= 1"));
        }
        if normals.iter().chain(offsets.iter()).any(|v| !v.is_finite()) {
            return Err(Error::domain("polyhedron", "non-finite coefficient"));
        }
        Ok(Self { normals, offsets })
    }

    /// Builds from row slices; every row must have the same length.
    pub fn from_rows(rows: &[Vec<f64>], offsets: &[f64]) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: bad.len() });
        }
        let normals = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
        Self::new(normals, DVector::from_column_slice(offsets))
    }

    pub fn dim(&self) -> usize {
        self.normals.ncols()
    }

    pub fn num_rows(&self) -> usize {
        self.normals.nrows()
    }

    pub fn normals(&self) -> &DMatrix<f64> {
        &self.normals
    }

    pub fn offsets(&self) -> &DVector<f64> {
        &self.offsets
    }

    pub fn contains(&self, e: &DVector<f64>, tol: f64) -> bool {
        assert_eq!(e.len(), self.dim(), "point dimension");
        (&self.normals * e)
            .iter()
            .zip(self.offsets.iter())
            .all(|(lhs, rhs)| *lhs <= rhs + tol)
    }

    /// Largest constraint violation at `e` (negative when strictly inside).
    pub fn max_violation(&self, e: &DVector<f64>) -> f64 {
        (&self.normals * e - &self.offsets).max()
    }

    /// `max c·e` over the set.
    pub fn support(&self, c: &DVector<f64>) -> LpOutcome {
        lp::maximize(c, &self.normals, &self.offsets)
    }

    pub fn is_empty(&self) -> bool {
        !lp::is_feasible(&self.normals, &self.offsets)
    }

    /// Axis-aligned bounding box, or `None` when the set is empty or unbounded.
    pub fn bounding_box(&self) -> Option<(DVector<f64>, DVector<f64>)> {
        let n = self.dim();
        let mut lo = DVector::zeros(n);
        let mut hi = DVector::zeros(n);
        for j in 0..n {
            let mut c = DVector::zeros(n);
            c[j] = 1.0;
            hi[j] = self.support(&c).value()?;
            c[j] = -1.0;
            lo[j] = -self.support(&c).value()?;
        }
        Some((lo, hi))
    }

    fn check_dim(&self, other: usize) -> Result<()> {
        if self.dim() != other {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other,
            });
        }
        Ok(())
    }

    /// Plain-text form: `n r` then one row per line, coefficients then offset.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for HPolyhedron {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.dim(), self.num_rows())?;
        for i in 0..self.num_rows() {
            let coeffs: Vec<String> = self.normals.row(i).iter().map(|v| v.to_string()).collect();
            writeln!(f, "{} {}", coeffs.join(" "), self.offsets[i])?;
        }
        Ok(())
    }
}

impl FromStr for HPolyhedron {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Config("polyhedron text is empty".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Config(format!("bad header `{header}`"))))
            .collect::<Result<_>>()?;
        let [n, r] = dims[..] else {
            return Err(Error::Config(format!("header must be `n r`, got `{header}`")));
        };
        let mut rows = Vec::with_capacity(r);
        let mut offsets = Vec::with_capacity(r);
        for (i, line) in lines.by_ref().take(r).enumerate() {
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| {
                    t.parse()
                        .map_err(|_| Error::Config(format!("row {}: bad number `{t}`", i + 1)))
                })
                .collect::<Result<_>>()?;
            if vals.len() != n + 1 {
                return Err(Error::Config(format!(
                    "row {}: expected {} values, got {}",
                    i + 1,
                    n + 1,
                    vals.len()
                )));
            }
            offsets.push(vals[n]);
            rows.push(vals[..n].to_vec());
        }
        if rows.len() != r {
            return Err(Error::Config(format!("expected {r} rows, got {}", rows.len())));
        }
        if lines.next().is_some() {
            return Err(Error::Config("trailing data after polyhedron rows".into()));
        }
        HPolyhedron::from_rows(&rows, &offsets)
    }
}

/// Box constraints on the error coordinates `e = [w - w_max, 1 - 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafeSetSpec {
    /// Distance from the upper bound down to the lower state bound.
    pub w_lb: f64,
}

/// `{e | -e1 <= w_lb, -e2 <= 0, e1 <= 0, e2 <= 0}`.
pub fn safe_set(spec: SafeSetSpec) -> Result<HPolyhedron> {
    if !(spec.w_lb > 0.0) || !spec.w_lb.is_finite() {
        return Err(Error::domain("w_lb", format!("{} must be positive", spec.w_lb)));
    }
    HPolyhedron::from_rows(
        &[
            vec![-1.0, 0.0],
            vec![0.0, -1.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
        ],
        &[spec.w_lb, 0.0, 0.0, 0.0],
    )
}

/// States that land in `p` after one step of `e -> A e`. No minimisation.
pub fn pre_image(a: &DMatrix<f64>, p: &HPolyhedron) -> Result<HPolyhedron> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    p.check_dim(a.nrows())?;
    HPolyhedron::new(p.normals() * a, p.offsets().clone())
}

/// Stacks both constraint systems and removes redundant rows.
pub fn intersect(p: &HPolyhedron, q: &HPolyhedron, tol: f64) -> Result<HPolyhedron> {
    p.check_dim(q.dim())?;
    let (rp, rq, n) = (p.num_rows(), q.num_rows(), p.dim());
    let mut normals = DMatrix::zeros(rp + rq, n);
    normals.rows_mut(0, rp).copy_from(p.normals());
    normals.rows_mut(rp, rq).copy_from(q.normals());
    let mut offsets = DVector::zeros(rp + rq);
    offsets.rows_mut(0, rp).copy_from(p.offsets());
    offsets.rows_mut(rp, rq).copy_from(q.offsets());
    minimize(&HPolyhedron::new(normals, offsets)?, tol)
}

/// Drops every row implied by the rows kept so far, scanning in order.
pub fn minimize(p: &HPolyhedron, tol: f64) -> Result<HPolyhedron> {
    if p.is_empty() {
        return Err(Error::EmptySet);
    }
    let r = p.num_rows();
    let mut keep = vec![true; r];
    for i in 0..r {
        let others: Vec<usize> = (0..r).filter(|&k| k != i && keep[k]).collect();
        if others.is_empty() {
            break;
        }
        let normals = p.normals().select_rows(others.iter());
        let offsets = p.offsets().select_rows(others.iter());
        let c = p.normals().row(i).transpose();
        match lp::maximize(&c, &normals, &offsets) {
            LpOutcome::Optimal { value, .. } if value <= p.offsets()[i] + tol => keep[i] = false,
            LpOutcome::Infeasible => return Err(Error::EmptySet),
            _ => {}
        }
    }
    let idx: Vec<usize> = (0..r).filter(|&k| keep[k]).collect();
    HPolyhedron::new(
        p.normals().select_rows(idx.iter()),
        p.offsets().select_rows(idx.iter()),
    )
}

/// `p ⊆ q`, by one support-function LP per row of `q`.
pub fn is_subset(p: &HPolyhedron, q: &HPolyhedron, tol: f64) -> Result<bool> {
    p.check_dim(q.dim())?;
    if p.is_empty() {
        return Ok(true);
    }
    for i in 0..q.num_rows() {
        let c = q.normals().row(i).transpose();
        match p.support(&c) {
            LpOutcome::Optimal { value, .. } if value <= q.offsets()[i] + tol => {}
            LpOutcome::Infeasible => return Ok(true),
            _ => return Ok(false),
        }
    }
    Ok(true)
}

pub fn set_equal(p: &HPolyhedron, q: &HPolyhedron, tol: f64) -> Result<bool> {
    Ok(is_subset(p, q, tol)? && is_subset(q, p, tol)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantSet {
    pub set: HPolyhedron,
    /// Index `j` of the first iterate with `O_j == O_{j-1}`.
    pub iterations: usize,
    pub spectral_radius: f64,
}

pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Maximal positive invariant subset of `s` under `e -> A e`.
///
/// Returns `NoConvergence` carrying the last iterate when no fixed point is
/// reached within `max_iters` iterations.
pub fn max_invariant_set(
    a: &DMatrix<f64>,
    s: &HPolyhedron,
    max_iters: usize,
    tol: f64,
) -> Result<InvariantSet> {
    if max_iters == 0 {
        return Err(Error::domain("max_iters", "must be at least 1"));
    }
    let rho = spectral_radius(a);
    let mut current = minimize(s, tol)?;
    for j in 1..=max_iters {
        let next = intersect(&pre_image(a, &current)?, &current, tol)?;
        let done = set_equal(&next, &current, tol)?;
        current = next;
        if done {
            return Ok(InvariantSet {
                set: current,
                iterations: j,
                spectral_radius: rho,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iters,
        last: Box::new(current),
    })
}
