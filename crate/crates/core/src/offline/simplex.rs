//! Dense tableau simplex for `max c·x  s.t.  A x ≤ b, x ≥ 0` with `b ≥ 0`.
//!
//! The slack basis is feasible, so no first phase is needed. Ties among optimal
//! vertices are broken by the lexicographic rule "minimise x_0, then x_1, …",
//! handled symbolically: reduced costs live in the ordered field ℝ(ε) where the
//! objective of variable `j` is `c_j − ε^(j+1)`, and the ε-coefficients are read
//! off the tableau on demand.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct LpOptions {
    /// Break ties among optimal vertices lexicographically (unique optimum).
    pub lexicographic: bool,
    pub max_pivots: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self { lexicographic: true, max_pivots: 100_000 }
    }
}

/// Sparse constraint row `Σ coef·x ≤ rhs`.
#[derive(Clone, Debug)]
pub struct Row<S> {
    pub coefs: Vec<(usize, S)>,
    pub rhs: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpOutcome<S> {
    pub x: Vec<S>,
    pub objective: S,
    pub pivots: usize,
}

/// Consecutive non-improving pivots tolerated before switching to Bland's rule.
const DEGENERATE_STREAK: usize = 64;

struct Tableau<S> {
    n: usize,
    rows: Vec<Vec<S>>,
    rhs: Vec<S>,
    basis: Vec<usize>,
    /// row index of each column when basic
    row_of: Vec<Option<usize>>,
    reduced: Vec<S>,
    objective: S,
}

impl<S: Scalar> Tableau<S> {
    fn new(c: &[S], rows: &[Row<S>]) -> Result<Self> {
        let n = c.len();
        let m = rows.len();
        let width = n + m;
        let mut dense = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        for (i, row) in rows.iter().enumerate() {
            if row.rhs.is_neg_tol() {
                return Err(Error::Numeric(format!("row {i} has negative right-hand side")));
            }
            let mut r = vec![S::zero(); width];
            for (j, a) in &row.coefs {
                if *j >= n {
                    return Err(Error::Numeric(format!("row {i} references variable {j} of {n}")));
                }
                r[*j] += a.clone();
            }
            r[n + i] = S::one();
            dense.push(r);
            rhs.push(row.rhs.clone());
        }
        let mut reduced: Vec<S> = c.to_vec();
        reduced.resize(width, S::zero());
        let mut row_of = vec![None; width];
        for i in 0..m {
            row_of[n + i] = Some(i);
        }
        Ok(Self {
            n,
            rows: dense,
            rhs,
            basis: (n..n + m).collect(),
            row_of,
            reduced,
            objective: S::zero(),
        })
    }

    fn width(&self) -> usize {
        self.reduced.len()
    }

    /// Sign of the ε-part of column `j`'s reduced cost: +1 improving, −1 worsening, 0 none.
    fn secondary_sign(&self, j: usize) -> i8 {
        for k in 0..self.n {
            let v = match self.row_of[k] {
                Some(r) => self.rows[r][j].clone(),
                None if k == j => -S::one(),
                None => continue,
            };
            if v.is_pos_tol() {
                return 1;
            }
            if v.is_neg_tol() {
                return -1;
            }
        }
        0
    }

    fn improving(&self, j: usize, lexicographic: bool) -> bool {
        if self.row_of[j].is_some() {
            return false;
        }
        let d = &self.reduced[j];
        if d.is_pos_tol() {
            return true;
        }
        lexicographic && d.is_zero_tol() && self.secondary_sign(j) > 0
    }

    fn entering(&self, bland: bool, lexicographic: bool) -> Option<usize> {
        if !bland {
            let mut best: Option<(usize, &S)> = None;
            for j in 0..self.width() {
                let d = &self.reduced[j];
                if self.row_of[j].is_none() && d.is_pos_tol() && best.is_none_or(|(_, b)| d > b) {
                    best = Some((j, d));
                }
            }
            if let Some((j, _)) = best {
                return Some(j);
            }
        }
        (0..self.width()).find(|&j| self.improving(j, lexicographic))
    }

    fn leaving(&self, j: usize) -> Option<usize> {
        let mut best: Option<(usize, S)> = None;
        for (r, row) in self.rows.iter().enumerate() {
            let a = &row[j];
            if !a.is_pos_tol() {
                continue;
            }
            let ratio = self.rhs[r].clone() / a.clone();
            let better = match &best {
                None => true,
                Some((br, bratio)) => {
                    if ratio.eq_tol(bratio) {
                        self.basis[r] < self.basis[*br]
                    } else {
                        ratio < *bratio
                    }
                }
            };
            if better {
                best = Some((r, ratio));
            }
        }
        best.map(|(r, _)| r)
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let p = self.rows[r][j].clone();
        let inv = S::one() / p;
        for v in self.rows[r].iter_mut() {
            if !v.is_zero_tol() {
                *v = v.clone() * inv.clone();
            }
        }
        self.rows[r][j] = S::one();
        self.rhs[r] = self.rhs[r].clone() * inv;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r].clone();
        let nz: Vec<usize> = (0..pivot_row.len()).filter(|&c| !pivot_row[c].is_zero_tol()).collect();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][j].clone();
            if f.is_zero_tol() {
                continue;
            }
            for &c in &nz {
                let delta = f.clone() * pivot_row[c].clone();
                self.rows[i][c] -= delta;
            }
            self.rows[i][j] = S::zero();
            let delta = f * pivot_rhs.clone();
            self.rhs[i] -= delta;
            if self.rhs[i].is_neg_tol() && !S::EXACT {
                // round-off can push a degenerate row slightly below zero
                self.rhs[i] = S::zero();
            }
        }
        let f = self.reduced[j].clone();
        if !f.is_zero_tol() {
            for &c in &nz {
                let delta = f.clone() * pivot_row[c].clone();
                self.reduced[c] -= delta;
            }
            self.objective += f * pivot_rhs;
        }
        self.reduced[j] = S::zero();
        let old = self.basis[r];
        self.row_of[old] = None;
        self.basis[r] = j;
        self.row_of[j] = Some(r);
    }
}

/// Solves `max c·x` over `rows`, every right-hand side nonnegative.
pub fn maximize<S: Scalar>(c: &[S], rows: &[Row<S>], opts: &LpOptions) -> Result<LpOutcome<S>> {
    let mut t = Tableau::new(c, rows)?;
    let mut pivots = 0;
    let mut streak = 0;
    while let Some(j) = t.entering(streak >= DEGENERATE_STREAK, opts.lexicographic) {
        let Some(r) = t.leaving(j) else {
            return Err(Error::Numeric(format!("objective unbounded along variable {j}")));
        };
        let before = t.objective.clone();
        t.pivot(r, j);
        pivots += 1;
        if (t.objective.clone() - before).is_pos_tol() {
            streak = 0;
        } else {
            streak += 1;
        }
        if pivots > opts.max_pivots {
            return Err(Error::Numeric(format!("simplex exceeded {} pivots", opts.max_pivots)));
        }
    }
    let mut x = vec![S::zero(); t.n];
    for (r, &b) in t.basis.iter().enumerate() {
        if b < t.n {
            x[b] = t.rhs[r].clone().clamp_nonneg();
        }
    }
    let objective = c.iter().zip(&x).fold(S::zero(), |acc, (ci, xi)| acc + ci.clone() * xi.clone());
    Ok(LpOutcome { x, objective, pivots })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn row(coefs: &[(usize, i64)], rhs: i64) -> Row<Rational> {
        Row { coefs: coefs.iter().map(|&(j, a)| (j, q(a, 1))).collect(), rhs: q(rhs, 1) }
    }

    #[test]
    fn textbook_lp() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18  → (2, 6), 36
        let c = vec![q(3, 1), q(5, 1)];
        let rows = vec![row(&[(0, 1)], 4), row(&[(1, 2)], 12), row(&[(0, 3), (1, 2)], 18)];
        let out = maximize(&c, &rows, &LpOptions::default()).unwrap();
        assert_eq!(out.x, vec![q(2, 1), q(6, 1)]);
        assert_eq!(out.objective, q(36, 1));
    }

    #[test]
    fn lexicographic_tie_break_minimises_earlier_variables() {
        // max x + y with x + y ≤ 1: every point of the segment is optimal
        let c = vec![q(1, 1), q(1, 1)];
        let rows = vec![row(&[(0, 1), (1, 1)], 1)];
        let out = maximize(&c, &rows, &LpOptions::default()).unwrap();
        assert_eq!(out.x, vec![q(0, 1), q(1, 1)]);
    }

    #[test]
    fn unbounded_is_an_error() {
        let c = vec![q(1, 1), q(1, 1)];
        let rows = vec![row(&[(0, 1)], 1)];
        assert!(matches!(maximize(&c, &rows, &LpOptions::default()), Err(Error::Numeric(_))));
    }

    #[test]
    fn float_backend_agrees() {
        let c = vec![3.0, 5.0];
        let rows = vec![
            Row { coefs: vec![(0, 1.0)], rhs: 4.0 },
            Row { coefs: vec![(1, 2.0)], rhs: 12.0 },
            Row { coefs: vec![(0, 3.0), (1, 2.0)], rhs: 18.0 },
        ];
        let out = maximize(&c, &rows, &LpOptions::default()).unwrap();
        assert!((out.objective - 36.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_vertex_terminates() {
        // Beale-style degenerate instance that cycles under naive rules
        let c = vec![q(3, 4), q(-20, 1), q(1, 2), q(-6, 1)];
        let rows = vec![
            Row { coefs: vec![(0, q(1, 4)), (1, q(-8, 1)), (2, q(-1, 1)), (3, q(9, 1))], rhs: q(0, 1) },
            Row { coefs: vec![(0, q(1, 2)), (1, q(-12, 1)), (2, q(-1, 2)), (3, q(3, 1))], rhs: q(0, 1) },
            Row { coefs: vec![(2, q(1, 1))], rhs: q(1, 1) },
        ];
        let out = maximize(&c, &rows, &LpOptions::default()).unwrap();
        assert_eq!(out.objective, q(5, 4));
    }
}
