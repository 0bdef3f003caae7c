//! Sparse assembly and direct solves.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use crate::{Error, Result};

/// Triplet accumulator; duplicate entries are summed.
pub struct SparseBuilder {
    n: usize,
    entries: Vec<Triplet<usize, usize, f64>>,
}

impl SparseBuilder {
    pub fn new(n: usize) -> Self {
        SparseBuilder {
            n,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        SparseBuilder {
            n,
            entries: Vec::with_capacity(cap),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n && j < self.n);
        if v != 0.0 {
            self.entries.push(Triplet::new(i, j, v));
        }
    }

    /// Adds `v` at (i, j) and (j, i).
    #[inline]
    pub fn add_sym(&mut self, i: usize, j: usize, v: f64) {
        self.add(i, j, v);
        self.add(j, i, v);
    }

    fn matrix(&self) -> Result<SparseColMat<usize, f64>> {
        SparseColMat::<usize, f64>::try_new_from_triplets(self.n, self.n, &self.entries)
            .map_err(|e| Error::Solver(format!("assembly: {e:?}")))
    }

    /// General sparse LU with partial pivoting.
    pub fn factor(self) -> Result<SparseFactor> {
        let m = self.matrix()?;
        let lu = m
            .sp_lu()
            .map_err(|e| Error::Solver(format!("sparse LU: {e:?}")))?;
        Ok(SparseFactor {
            n: self.n,
            matrix: m,
            kind: Kind::Lu(lu),
        })
    }

    /// Sparse Cholesky; the assembled matrix must be symmetric positive definite.
    pub fn factor_spd(self) -> Result<SparseFactor> {
        let m = self.matrix()?;
        let llt = m
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Solver(format!("sparse Cholesky (matrix not SPD?): {e:?}")))?;
        Ok(SparseFactor {
            n: self.n,
            matrix: m,
            kind: Kind::Llt(llt),
        })
    }
}

enum Kind {
    Lu(Lu<usize, f64>),
    Llt(Llt<usize, f64>),
}

pub struct SparseFactor {
    n: usize,
    matrix: SparseColMat<usize, f64>,
    kind: Kind,
}

impl SparseFactor {
    /// Solves for several right-hand sides and checks the relative residual.
    pub fn solve(&self, rhs: &[Vec<f64>], tol: f64) -> Result<Vec<Vec<f64>>> {
        let k = rhs.len();
        let b = Mat::<f64>::from_fn(self.n, k, |i, j| rhs[j][i]);
        let x = match &self.kind {
            Kind::Lu(f) => f.solve(&b),
            Kind::Llt(f) => f.solve(&b),
        };
        let mut out = Vec::with_capacity(k);
        for j in 0..k {
            let xj: Vec<f64> = (0..self.n).map(|i| x[(i, j)]).collect();
            if xj.iter().any(|v| !v.is_finite()) {
                return Err(Error::Solver(
                    "non-finite solution (singular system?)".into(),
                ));
            }
            let r = self.residual(&xj, &rhs[j]);
            let bn = norm(&rhs[j]).max(f64::MIN_POSITIVE);
            if r / bn > tol && r > tol {
                return Err(Error::Solver(format!(
                    "relative residual {:.3e} exceeds {tol:.1e} (singular system?)",
                    r / bn
                )));
            }
            out.push(xj);
        }
        Ok(out)
    }

    fn residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let mut r = b.to_vec();
        let cp = self.matrix.symbolic().col_ptr();
        let ri = self.matrix.symbolic().row_idx();
        let vals = self.matrix.val();
        for j in 0..self.n {
            for p in cp[j]..cp[j + 1] {
                r[ri[p]] -= vals[p] * x[j];
            }
        }
        norm(&r)
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_indefinite_system() {
        // Saddle point [[2, 1], [1, 0]].
        let mut b = SparseBuilder::new(2);
        b.add(0, 0, 2.0);
        b.add_sym(0, 1, 1.0);
        let lu = b.factor().unwrap();
        let x = lu.solve(&[vec![3.0, 1.0]], 1e-12).unwrap();
        assert!((x[0][0] - 1.0).abs() < 1e-14);
        assert!((x[0][1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cholesky_matches_lu() {
        let mut a = SparseBuilder::new(3);
        let mut b = SparseBuilder::new(3);
        for m in [&mut a, &mut b] {
            m.add(0, 0, 4.0);
            m.add(1, 1, 3.0);
            m.add(2, 2, 2.0);
            m.add_sym(0, 1, 1.0);
            m.add_sym(1, 2, -0.5);
        }
        let rhs = [vec![1.0, 2.0, 3.0]];
        let x = a.factor().unwrap().solve(&rhs, 1e-12).unwrap();
        let y = b.factor_spd().unwrap().solve(&rhs, 1e-12).unwrap();
        for k in 0..3 {
            assert!((x[0][k] - y[0][k]).abs() < 1e-13);
        }
    }

    #[test]
    fn singular_system_is_reported() {
        let mut b = SparseBuilder::new(2);
        b.add(0, 0, 1.0);
        b.add(0, 1, 1.0);
        b.add(1, 0, 1.0);
        b.add(1, 1, 1.0);
        let res = b.factor().and_then(|lu| lu.solve(&[vec![1.0, 0.0]], 1e-10));
        assert!(res.is_err());
    }
}
