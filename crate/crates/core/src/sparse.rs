//! Compressed sparse row operators and the direct sparse LU solver.

use std::fmt::Write as _;
use std::path::Path;

use faer::prelude::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{FuseError, Result};

/// Entries below this fraction of the row's largest magnitude are dropped.
const PURGE_REL: f64 = 1e-14;

/// Square or rectangular CSR matrix over global dofs.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        CsrMatrix {
            n_rows,
            n_cols,
            row_ptr: vec![0; n_rows + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            cols: (0..n).collect(),
            vals: vec![1.0; n],
        }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Self::identity(d.len());
        m.vals.copy_from_slice(d);
        m.purge();
        m
    }

    /// Builds from per-row `(column, value)` lists; duplicate columns are summed
    /// and near-zero entries purged.
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n_rows = rows.len();
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let start = cols.len();
            for (c, v) in row {
                debug_assert!(c < n_cols, "column {c} out of range {n_cols}");
                if cols.len() > start && *cols.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            let max = vals[start..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let cut = PURGE_REL * max;
            let mut w = start;
            for r in start..cols.len() {
                if vals[r].abs() > cut {
                    cols[w] = cols[r];
                    vals[w] = vals[r];
                    w += 1;
                }
            }
            cols.truncate(w);
            vals.truncate(w);
            row_ptr.push(cols.len());
        }
        CsrMatrix {
            n_rows,
            n_cols,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Self {
        let mut rows = vec![Vec::new(); n_rows];
        for (r, c, v) in triplets {
            rows[r].push((c, v));
        }
        Self::from_rows(n_cols, rows)
    }

    pub fn from_dense(a: &[Vec<f64>]) -> Self {
        let n_cols = a.first().map_or(0, |r| r.len());
        let rows = a
            .iter()
            .map(|r| r.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect())
            .collect();
        Self::from_rows(n_cols, rows)
    }

    fn purge(&mut self) {
        let rows = (0..self.n_rows).map(|r| self.row(r).collect()).collect();
        *self = Self::from_rows(self.n_cols, rows);
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    pub fn row_len(&self, r: usize) -> usize {
        self.row_ptr[r + 1] - self.row_ptr[r]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[range.clone()].binary_search(&c) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(y.len(), self.n_rows);
        for (r, yr) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *yr = s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// Sparse product `self * other`, accumulated row by row in column order.
    pub fn matmul(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.n_cols, other.n_rows, "dimension mismatch in matmul");
        let mut acc = vec![0.0; other.n_cols];
        let mut mark = vec![usize::MAX; other.n_cols];
        let mut rows = Vec::with_capacity(self.n_rows);
        for r in 0..self.n_rows {
            let mut touched = Vec::new();
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if mark[c] != r {
                        mark[c] = r;
                        acc[c] = 0.0;
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            rows.push(touched.into_iter().map(|c| (c, acc[c])).collect());
        }
        CsrMatrix::from_rows(other.n_cols, rows)
    }

    /// `alpha * self + beta * other`.
    pub fn add_scaled(&self, alpha: f64, other: &CsrMatrix, beta: f64) -> CsrMatrix {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        let rows = (0..self.n_rows)
            .map(|r| {
                self.row(r)
                    .map(|(c, v)| (c, alpha * v))
                    .chain(other.row(r).map(|(c, v)| (c, beta * v)))
                    .collect()
            })
            .collect();
        CsrMatrix::from_rows(self.n_cols, rows)
    }

    pub fn scaled(&self, alpha: f64) -> CsrMatrix {
        let mut m = self.clone();
        m.vals.iter_mut().for_each(|v| *v *= alpha);
        m
    }

    /// `diag(d) * self`.
    pub fn scale_rows(&self, d: &[f64]) -> CsrMatrix {
        let rows = (0..self.n_rows)
            .map(|r| self.row(r).map(|(c, v)| (c, d[r] * v)).collect())
            .collect();
        CsrMatrix::from_rows(self.n_cols, rows)
    }

    /// `self * diag(d)`.
    pub fn scale_cols(&self, d: &[f64]) -> CsrMatrix {
        let rows = (0..self.n_rows)
            .map(|r| self.row(r).map(|(c, v)| (c, v * d[c])).collect())
            .collect();
        CsrMatrix::from_rows(self.n_cols, rows)
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut rows = vec![Vec::new(); self.n_cols];
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                rows[c].push((r, v));
            }
        }
        CsrMatrix::from_rows(self.n_rows, rows)
    }

    /// Places `blocks[i][j]` at block position `(i, j)`; `None` is a zero block.
    pub fn block(blocks: &[Vec<Option<&CsrMatrix>>]) -> CsrMatrix {
        let row_sizes: Vec<usize> = blocks
            .iter()
            .map(|br| br.iter().flatten().next().map_or(0, |m| m.n_rows))
            .collect();
        let col_sizes: Vec<usize> = (0..blocks[0].len())
            .map(|j| {
                blocks
                    .iter()
                    .filter_map(|br| br[j])
                    .next()
                    .map_or(0, |m| m.n_cols)
            })
            .collect();
        let n_cols: usize = col_sizes.iter().sum();
        let mut rows = Vec::new();
        for (bi, br) in blocks.iter().enumerate() {
            for r in 0..row_sizes[bi] {
                let mut row = Vec::new();
                let mut off = 0;
                for (bj, b) in br.iter().enumerate() {
                    if let Some(m) = b {
                        row.extend(m.row(r).map(|(c, v)| (c + off, v)));
                    }
                    off += col_sizes[bj];
                }
                rows.push(row);
            }
        }
        CsrMatrix::from_rows(n_cols, rows)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (r, dr) in d.iter_mut().enumerate() {
            for (c, v) in self.row(r) {
                dr[c] = v;
            }
        }
        d
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_rows).map(|r| self.row(r).map(|(_, v)| v).sum()).collect()
    }

    pub fn row_abs_max(&self, r: usize) -> f64 {
        self.row(r).fold(0.0, |m, (_, v)| m.max(v.abs()))
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.n_rows)
            .map(|r| self.row(r).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise difference, treating missing entries as zero.
    pub fn max_abs_diff(&self, other: &CsrMatrix) -> f64 {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        self.add_scaled(1.0, other, -1.0)
            .vals
            .iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Replaces row `r` by the identity row.
    pub fn set_identity_row(&mut self, r: usize) {
        let mut rows: Vec<Vec<(usize, f64)>> =
            (0..self.n_rows).map(|i| self.row(i).collect()).collect();
        rows[r] = vec![(r, 1.0)];
        *self = CsrMatrix::from_rows(self.n_cols, rows);
    }

    /// Replaces every listed row by the corresponding identity row.
    pub fn with_identity_rows(&self, rows_to_replace: &[usize]) -> CsrMatrix {
        let mut flag = vec![false; self.n_rows];
        for &r in rows_to_replace {
            flag[r] = true;
        }
        let rows = (0..self.n_rows)
            .map(|i| {
                if flag[i] {
                    vec![(i, 1.0)]
                } else {
                    self.row(i).collect()
                }
            })
            .collect();
        CsrMatrix::from_rows(self.n_cols, rows)
    }

    /// Zeroes the listed rows.
    pub fn with_zero_rows(&self, rows_to_zero: &[usize]) -> CsrMatrix {
        let mut flag = vec![false; self.n_rows];
        for &r in rows_to_zero {
            flag[r] = true;
        }
        let rows = (0..self.n_rows)
            .map(|i| if flag[i] { Vec::new() } else { self.row(i).collect() })
            .collect();
        CsrMatrix::from_rows(self.n_cols, rows)
    }

    /// Matrix-Market coordinate text (1-based indices, 17 significant digits).
    pub fn to_matrix_market(&self) -> String {
        let mut s = String::new();
        s.push_str("%%MatrixMarket matrix coordinate real general\n");
        let _ = writeln!(s, "{} {} {}", self.n_rows, self.n_cols, self.nnz());
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                let _ = writeln!(s, "{} {} {:.16e}", r + 1, c + 1, v);
            }
        }
        s
    }

    pub fn write_matrix_market(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_matrix_market())?;
        Ok(())
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let triplets: Vec<Triplet<usize, usize, f64>> = (0..self.n_rows)
            .flat_map(|r| self.row(r).map(move |(c, v)| Triplet::new(r, c, v)))
            .collect();
        SparseColMat::try_new_from_triplets(self.n_rows, self.n_cols, &triplets)
            .map_err(|e| FuseError::Numerical(format!("sparse conversion failed: {e:?}")))
    }

    fn pattern_signature(&self) -> (usize, usize, &[usize], &[usize]) {
        (self.n_rows, self.n_cols, &self.row_ptr, &self.cols)
    }
}

/// Direct sparse LU with partial pivoting (fill-reducing ordering included).
///
/// The symbolic analysis is kept so matrices with an identical sparsity
/// pattern can be refactorised cheaply with [`SparseLu::refactor`].
pub struct SparseLu {
    n: usize,
    pattern: (Vec<usize>, Vec<usize>),
    symbolic: SymbolicLu<usize>,
    lu: Lu<usize, f64>,
    matrix: CsrMatrix,
    norm_inf: f64,
}

impl SparseLu {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(FuseError::InvalidArgument(format!(
                "LU needs a square matrix, got {}x{}",
                a.n_rows, a.n_cols
            )));
        }
        let m = a.to_faer()?;
        let symbolic = SymbolicLu::try_new(m.symbolic())
            .map_err(|e| FuseError::Numerical(format!("symbolic LU failed: {e:?}")))?;
        let lu = Lu::try_new_with_symbolic(symbolic.clone(), m.as_ref()).map_err(map_lu_err)?;
        Ok(SparseLu {
            n: a.n_rows,
            pattern: (a.row_ptr.clone(), a.cols.clone()),
            symbolic,
            lu,
            matrix: a.clone(),
            norm_inf: a.norm_inf(),
        })
    }

    /// Numeric refactorisation reusing the symbolic analysis when the pattern matches.
    pub fn refactor(&mut self, a: &CsrMatrix) -> Result<()> {
        let (n_rows, n_cols, rp, cols) = a.pattern_signature();
        if n_rows != self.n || n_cols != self.n || rp != self.pattern.0 || cols != self.pattern.1 {
            *self = SparseLu::new(a)?;
            return Ok(());
        }
        let m = a.to_faer()?;
        self.lu = Lu::try_new_with_symbolic(self.symbolic.clone(), m.as_ref()).map_err(map_lu_err)?;
        self.matrix = a.clone();
        self.norm_inf = a.norm_inf();
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = rhs`, followed by up to three steps of iterative
    /// refinement while the residual keeps shrinking.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.n {
            return Err(FuseError::InvalidArgument(format!(
                "rhs length {} does not match system size {}",
                rhs.len(),
                self.n
            )));
        }
        let mut x = self.raw_solve(rhs)?;
        let residual = |x: &[f64]| -> Vec<f64> {
            let ax = self.matrix.mul_vec(x);
            rhs.iter().zip(ax).map(|(b, v)| b - v).collect()
        };
        let mut r = residual(&x);
        let mut rn = norm_inf(&r);
        for _ in 0..3 {
            if rn <= f64::EPSILON * (self.norm_inf * norm_inf(&x) + norm_inf(rhs)) {
                break;
            }
            let dx = self.raw_solve(&r)?;
            let cand: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
            let rc = residual(&cand);
            let rcn = norm_inf(&rc);
            if !(rcn < rn) {
                break;
            }
            x = cand;
            r = rc;
            rn = rcn;
        }
        Ok(x)
    }

    fn raw_solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let b = faer::Col::<f64>::from_fn(self.n, |i| rhs[i]);
        let x = self.lu.solve(&b);
        let out: Vec<f64> = (0..self.n).map(|i| x[i]).collect();
        if let Some(row) = out.iter().position(|v| !v.is_finite()) {
            return Err(FuseError::Singular { row });
        }
        Ok(out)
    }

    pub fn matrix_norm_inf(&self) -> f64 {
        self.norm_inf
    }
}

fn map_lu_err(e: faer::sparse::linalg::LuError) -> FuseError {
    match e {
        faer::sparse::linalg::LuError::SymbolicSingular { index } => {
            FuseError::Singular { row: index }
        }
        other => FuseError::Numerical(format!("sparse LU failed: {other:?}")),
    }
}

/// Factor and solve in one call.
pub fn sparse_lu_solve(a: &CsrMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    SparseLu::new(a)?.solve(rhs)
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
