//! Dense two-phase simplex for `max c·x  s.t.  A x <= b`, `x` free.
//!
//! Sized for the redundancy and inclusion tests of small polyhedra: a few
//! dozen constraints in a handful of dimensions. Bland's rule is used for both
//! the entering and leaving choice, so degenerate vertices (which the
//! equality-as-two-inequalities encoding produces constantly) cannot cycle.

use nalgebra::{DMatrix, DVector};

const PIVOT_EPS: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, x: DVector<f64> },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }
}

struct Tableau {
    /// Row-major constraint rows, last entry of each row is the rhs.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    ncols: usize,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.ncols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut red = cost.to_vec();
        for (i, &bj) in self.basis.iter().enumerate() {
            let cb = cost[bj];
            if cb != 0.0 {
                for (j, r) in red.iter_mut().enumerate() {
                    *r -= cb * self.rows[i][j];
                }
            }
        }
        red
    }

    /// Maximises `cost` over the current basis using Bland's rule.
    fn optimise(&mut self, cost: &[f64], allowed: &[bool]) -> Phase {
        loop {
            let red = self.reduced_costs(cost);
            let Some(enter) = (0..self.ncols).find(|&j| allowed[j] && red[j] > PIVOT_EPS) else {
                return Phase::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][enter];
                if a > PIVOT_EPS {
                    let ratio = self.rhs(i) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-15
                                || (ratio <= lr + 1e-15 && self.basis[i] < self.basis[li])
                            {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return Phase::Unbounded,
                Some((r, _)) => self.pivot(r, enter),
            }
        }
    }

    fn objective(&self, cost: &[f64]) -> f64 {
        self.basis
            .iter()
            .enumerate()
            .map(|(i, &bj)| cost[bj] * self.rhs(i))
            .sum()
    }
}

/// Solves `max c·x` subject to `a x <= b` with `x` unrestricted in sign.
pub fn maximize(c: &DVector<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> LpOutcome {
    let (m, n) = a.shape();
    assert_eq!(c.len(), n, "objective length");
    assert_eq!(b.len(), m, "rhs length");

    // Columns: x+ (n), x- (n), slack (m), artificial (one per negative rhs).
    let needs_art: Vec<bool> = b.iter().map(|&bi| bi < 0.0).collect();
    let nart = needs_art.iter().filter(|&&f| f).count();
    let ncols = 2 * n + m + nart;
    let art_start = 2 * n + m;

    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut next_art = art_start;
    for i in 0..m {
        let s = if needs_art[i] { -1.0 } else { 1.0 };
        let mut row = vec![0.0; ncols + 1];
        for j in 0..n {
            row[j] = s * a[(i, j)];
            row[n + j] = -s * a[(i, j)];
        }
        row[2 * n + i] = s;
        row[ncols] = s * b[i];
        if needs_art[i] {
            row[next_art] = 1.0;
            basis.push(next_art);
            next_art += 1;
        } else {
            basis.push(2 * n + i);
        }
        rows.push(row);
    }
    let mut tab = Tableau { rows, basis, ncols };

    let scale = 1.0 + b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if nart > 0 {
        let mut cost = vec![0.0; ncols];
        for v in cost.iter_mut().skip(art_start) {
            *v = -1.0;
        }
        let allowed = vec![true; ncols];
        // Phase I is bounded above by zero, so it always terminates optimal.
        tab.optimise(&cost, &allowed);
        if -tab.objective(&cost) > 1e-9 * scale {
            return LpOutcome::Infeasible;
        }
        // Drive zero-level artificials out of the basis; drop rows that are
        // linear combinations of the others.
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= art_start {
                match (0..art_start).find(|&j| tab.rows[i][j].abs() > PIVOT_EPS) {
                    Some(j) => tab.pivot(i, j),
                    None => {
                        tab.rows.remove(i);
                        tab.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    let mut cost = vec![0.0; ncols];
    for j in 0..n {
        cost[j] = c[j];
        cost[n + j] = -c[j];
    }
    let allowed: Vec<bool> = (0..ncols).map(|j| j < art_start).collect();
    match tab.optimise(&cost, &allowed) {
        Phase::Unbounded => LpOutcome::Unbounded,
        Phase::Optimal => {
            let mut x = DVector::zeros(n);
            for (i, &bj) in tab.basis.iter().enumerate() {
                if bj < n {
                    x[bj] += tab.rhs(i);
                } else if bj < 2 * n {
                    x[bj - n] -= tab.rhs(i);
                }
            }
            LpOutcome::Optimal {
                value: c.dot(&x),
                x,
            }
        }
    }
}

/// Whether `a x <= b` admits any point (within the phase-one tolerance).
pub fn is_feasible(a: &DMatrix<f64>, b: &DVector<f64>) -> bool {
    let c = DVector::zeros(a.ncols());
    !matches!(maximize(&c, a, b), LpOutcome::Infeasible)
}
