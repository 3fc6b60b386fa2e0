//! Compressed-column matrices with a fixed pattern, and a sparse LU wrapper
//! that checks residuals after every solve.

use faer::prelude::*;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};

use crate::error::{Error, Result};

/// Collects the structural nonzeros of a square matrix block by block.
pub struct PatternBuilder {
    n: usize,
    cols: Vec<Vec<usize>>,
}

impl PatternBuilder {
    pub fn new(n: usize) -> Self {
        PatternBuilder {
            n,
            cols: vec![Vec::new(); n],
        }
    }

    /// Couples every row index with every column index; `None` entries are
    /// skipped.
    pub fn add_block(&mut self, rows: &[Option<usize>], cols: &[Option<usize>]) {
        for c in cols.iter().flatten() {
            let col = &mut self.cols[*c];
            col.extend(rows.iter().flatten());
        }
    }

    pub fn add_entry(&mut self, row: usize, col: usize) {
        self.cols[col].push(row);
    }

    pub fn build(self) -> CscMatrix {
        let mut col_ptr = Vec::with_capacity(self.n + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0);
        for mut col in self.cols {
            col.sort_unstable();
            col.dedup();
            row_idx.extend(col);
            col_ptr.push(row_idx.len());
        }
        let values = vec![0.0; row_idx.len()];
        CscMatrix {
            n: self.n,
            col_ptr,
            row_idx,
            values,
        }
    }
}

/// Square sparse matrix in compressed-column form with sorted row indices.
#[derive(Clone, Debug)]
pub struct CscMatrix {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CscMatrix {
    fn position(&self, row: usize, col: usize) -> Option<usize> {
        let (s, e) = (self.col_ptr[col], self.col_ptr[col + 1]);
        self.row_idx[s..e].binary_search(&row).ok().map(|k| s + k)
    }

    /// Adds `v` to an entry of the pattern. Panics if the entry is not in the
    /// pattern, which is an assembly bug.
    pub fn add(&mut self, row: usize, col: usize, v: f64) {
        let k = self
            .position(row, col)
            .unwrap_or_else(|| panic!("entry ({row}, {col}) outside sparsity pattern"));
        self.values[k] += v;
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.position(row, col).map_or(0.0, |k| self.values[k])
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for c in 0..self.n {
            let xc = x[c];
            if xc == 0.0 {
                continue;
            }
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                y[self.row_idx[k]] += self.values[k] * xc;
            }
        }
        y
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute column sum.
    pub fn norm1(&self) -> f64 {
        (0..self.n)
            .map(|c| {
                self.values[self.col_ptr[c]..self.col_ptr[c + 1]]
                    .iter()
                    .map(|v| v.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    fn symbolic(&self) -> SymbolicSparseColMatRef<'_, usize> {
        SymbolicSparseColMatRef::new_checked(self.n, self.n, &self.col_ptr, None, &self.row_idx)
    }

    pub fn factor(&self) -> Result<Factorization> {
        let symbolic = SymbolicLu::try_new(self.symbolic())
            .map_err(|e| Error::Solver(format!("symbolic factorization failed: {e:?}")))?;
        self.factor_with(&symbolic)
    }

    /// Numeric factorization reusing a symbolic analysis of the same pattern.
    pub fn factor_with(&self, symbolic: &SymbolicLu<usize>) -> Result<Factorization> {
        let mat = SparseColMatRef::new(self.symbolic(), &self.values);
        let lu = Lu::try_new_with_symbolic(symbolic.clone(), mat)
            .map_err(|e| Error::Singular(format!("LU factorization failed: {e:?}")))?;
        Ok(Factorization {
            lu,
            matrix: self.clone(),
            norm1: self.norm1(),
        })
    }

    pub fn symbolic_lu(&self) -> Result<SymbolicLu<usize>> {
        SymbolicLu::try_new(self.symbolic())
            .map_err(|e| Error::Solver(format!("symbolic factorization failed: {e:?}")))
    }
}

/// Relative residual ‖Ax − b‖∞ / (‖A‖₁‖x‖∞ + ‖b‖∞).
pub fn relative_residual(a: &CscMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let r = ax.iter().zip(b).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
    let xn = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let bn = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = a.norm1() * xn + bn;
    if scale == 0.0 {
        0.0
    } else {
        r / scale
    }
}

/// Sparse LU factors together with the matrix they came from.
pub struct Factorization {
    lu: Lu<usize, f64>,
    matrix: CscMatrix,
    norm1: f64,
}

/// Relative residual above which a solve is rejected.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

impl Factorization {
    fn raw_solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Col::<f64>::from_fn(b.len(), |i| b[i]);
        let x = self.lu.solve(&rhs);
        (0..b.len()).map(|i| x[i]).collect()
    }

    fn residual(&self, x: &[f64], b: &[f64]) -> (Vec<f64>, f64) {
        let ax = self.matrix.mul_vec(x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let rn = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let xn = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let bn = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let scale = self.norm1 * xn + bn;
        (r, if scale == 0.0 { 0.0 } else { rn / scale })
    }

    /// Solves `Ax = b` with up to two steps of iterative refinement and
    /// returns the solution with its relative residual.
    pub fn solve(&self, b: &[f64]) -> Result<(Vec<f64>, f64)> {
        let mut x = self.raw_solve(b);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular(
                "LU solve produced non-finite values (zero pivot)".into(),
            ));
        }
        let (mut r, mut rel) = self.residual(&x, b);
        for _ in 0..2 {
            if rel < 1e-15 {
                break;
            }
            let dx = self.raw_solve(&r);
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
            let (r2, rel2) = self.residual(&trial, b);
            if !(rel2 < rel) {
                break;
            }
            x = trial;
            r = r2;
            rel = rel2;
        }
        if !(rel <= SOLVE_TOLERANCE) {
            return Err(Error::Singular(format!(
                "relative residual {rel:.3e} exceeds {SOLVE_TOLERANCE:.0e}; matrix is numerically singular"
            )));
        }
        Ok((x, rel))
    }

    pub fn matrix(&self) -> &CscMatrix {
        &self.matrix
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> CscMatrix {
        let mut pb = PatternBuilder::new(n);
        for i in 0..n {
            let idx: Vec<Option<usize>> = [i.checked_sub(1), Some(i), (i + 1 < n).then_some(i + 1)].to_vec();
            pb.add_block(&[Some(i)], &idx);
        }
        let mut m = pb.build();
        for i in 0..n {
            m.add(i, i, 2.0);
            if i > 0 {
                m.add(i, i - 1, -1.0);
            }
            if i + 1 < n {
                m.add(i, i + 1, -1.0);
            }
        }
        m
    }

    #[test]
    fn solves_tridiagonal() {
        let m = laplace_1d(50);
        let x0: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = m.mul_vec(&x0);
        let (x, rel) = m.factor().unwrap().solve(&b).unwrap();
        assert!(rel < 1e-14);
        for (a, b) in x.iter().zip(&x0) {
            assert!((a - b).abs() < 1e-11);
        }
        assert_eq!(m.get(0, 5), 0.0);
        assert_eq!(m.nnz(), 50 * 3 - 2);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        // Pure Neumann Laplacian: constant kernel.
        let n = 20;
        let mut m = laplace_1d(n);
        m.add(0, 0, -1.0);
        m.add(n - 1, n - 1, -1.0);
        let b: Vec<f64> = (0..n).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
        let res = m.factor().and_then(|f| f.solve(&b));
        assert!(matches!(res, Err(Error::Singular(_))));
    }
}
