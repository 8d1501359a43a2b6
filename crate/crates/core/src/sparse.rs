//! Compressed sparse row matrices and a banded LU factorization.
//!
//! Operators assembled on the structured mesh have half-bandwidth `nx + 2`,
//! so a band LU without pivoting is a sparse direct solver for them. Pivoting
//! is unnecessary because every matrix factored here has a positive definite
//! symmetric part, which keeps all leading principal minors nonsingular.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` entries; duplicates are summed.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Self {
        triplets.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(
                i < nrows && j < ncols,
                "triplet ({i}, {j}) outside {nrows}x{ncols}"
            );
            if last == Some((i, j)) {
                *values.last_mut().expect("previous entry") += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for (i, j, v) in self.entries() {
            y[j] += v * x[i];
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let triplets = self.entries().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, triplets)
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, alpha: f64, other: &CsrMatrix) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let triplets = self
            .entries()
            .chain(other.entries().map(|(i, j, v)| (i, j, alpha * v)))
            .collect();
        Self::from_triplets(self.nrows, self.ncols, triplets)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `x^T A y`.
    pub fn quadratic_form(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.matvec(y))
    }

    /// Largest `|a_ij - b_ij|` over the union of both patterns.
    pub fn max_abs_diff(&self, other: &CsrMatrix) -> f64 {
        self.add_scaled(-1.0, other)
            .values
            .iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.entries() {
            dense[i][j] += v;
        }
        dense
    }

    /// Lower and upper half-bandwidths.
    pub fn bandwidths(&self) -> (usize, usize) {
        self.entries()
            .filter(|&(_, _, v)| v != 0.0)
            .fold((0, 0), |(kl, ku), (i, j, _)| {
                if i > j {
                    (kl.max(i - j), ku)
                } else {
                    (kl, ku.max(j - i))
                }
            })
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Doolittle LU factors of a band matrix, `L` unit lower triangular.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    band: Vec<f64>,
}

impl BandLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Size {
                context: "band factorization of a non-square matrix",
                expected: a.nrows(),
                actual: a.ncols(),
            });
        }
        let n = a.nrows();
        let (kl, ku) = a.bandwidths();
        let width = kl + ku + 1;
        let mut lu = Self {
            n,
            kl,
            ku,
            band: vec![0.0; n * width],
        };
        for (i, j, v) in a.entries() {
            let idx = lu.index(i, j);
            lu.band[idx] += v;
        }

        let scale = (0..n).fold(0.0_f64, |m, i| m.max(a.get(i, i).abs()));
        for k in 0..n {
            let pivot = lu.band[lu.index(k, k)];
            if !pivot.is_finite() || pivot.abs() <= 1e-14 * scale || pivot == 0.0 {
                return Err(Error::Numerical {
                    message: format!("zero pivot {pivot:e} at row {k} of {n} in band LU"),
                    residual: f64::NAN,
                });
            }
            let row_end = n.min(k + kl + 1);
            let col_end = n.min(k + ku + 1);
            for i in k + 1..row_end {
                let ik = lu.index(i, k);
                let l = lu.band[ik] / pivot;
                lu.band[ik] = l;
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..col_end {
                    let kj = lu.index(k, j);
                    let ij = lu.index(i, j);
                    lu.band[ij] -= l * lu.band[kj];
                }
            }
        }
        Ok(lu)
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku);
        i * (self.kl + self.ku + 1) + (j + self.kl - i)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut x = b.to_vec();
        for i in 0..n {
            let start = i.saturating_sub(self.kl);
            let mut acc = x[i];
            for j in start..i {
                acc -= self.band[self.index(i, j)] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let end = n.min(i + self.ku + 1);
            let mut acc = x[i];
            for j in i + 1..end {
                acc -= self.band[self.index(i, j)] * x[j];
            }
            x[i] = acc / self.band[self.index(i, i)];
        }
        x
    }

    /// Solves `A^T x = b` with the same factors: `U^T z = b`, then `L^T x = z`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut x = b.to_vec();
        for j in 0..n {
            x[j] /= self.band[self.index(j, j)];
            let xj = x[j];
            let end = n.min(j + self.ku + 1);
            for i in j + 1..end {
                x[i] -= self.band[self.index(j, i)] * xj;
            }
        }
        for j in (0..n).rev() {
            let xj = x[j];
            let start = j.saturating_sub(self.kl);
            for i in start..j {
                x[i] -= self.band[self.index(j, i)] * xj;
            }
        }
        x
    }
}

/// A matrix with its factors; every solve is residual-checked against the
/// original matrix and refined if needed.
#[derive(Debug, Clone)]
pub struct FactoredMatrix {
    matrix: CsrMatrix,
    lu: BandLu,
}

const MAX_REFINEMENT_STEPS: usize = 3;

impl FactoredMatrix {
    pub fn new(matrix: CsrMatrix) -> Result<Self> {
        let lu = BandLu::factor(&matrix)?;
        Ok(Self { matrix, lu })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn solve(&self, b: &[f64], tol: f64) -> Result<Vec<f64>> {
        self.solve_checked(b, tol, false)
    }

    pub fn solve_transpose(&self, b: &[f64], tol: f64) -> Result<Vec<f64>> {
        self.solve_checked(b, tol, true)
    }

    fn solve_checked(&self, b: &[f64], tol: f64, transpose: bool) -> Result<Vec<f64>> {
        if b.len() != self.lu.dim() {
            return Err(Error::Size {
                context: "right-hand side length",
                expected: self.lu.dim(),
                actual: b.len(),
            });
        }
        let bnorm = norm2(b);
        if bnorm == 0.0 {
            return Ok(vec![0.0; b.len()]);
        }
        let apply = |x: &[f64]| {
            if transpose {
                self.matrix.matvec_transpose(x)
            } else {
                self.matrix.matvec(x)
            }
        };
        let inverse = |r: &[f64]| {
            if transpose {
                self.lu.solve_transpose(r)
            } else {
                self.lu.solve(r)
            }
        };

        let mut x = inverse(b);
        let mut residual = 0.0;
        for step in 0..=MAX_REFINEMENT_STEPS {
            let ax = apply(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            residual = norm2(&r) / bnorm;
            if !residual.is_finite() {
                break;
            }
            if residual <= tol {
                return Ok(x);
            }
            if step < MAX_REFINEMENT_STEPS {
                let dx = inverse(&r);
                x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
            }
        }
        Err(Error::Numerical {
            message: format!("linear solve missed the residual tolerance {tol:e}"),
            residual,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_banded(n: usize, bw: usize, seed: u64) -> CsrMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0 * bw as f64 + rng.gen::<f64>()));
            for j in i.saturating_sub(bw)..(i + bw + 1).min(n) {
                if j != i {
                    t.push((i, j, rng.gen_range(-1.0..1.0)));
                }
            }
        }
        CsrMatrix::from_triplets(n, n, t)
    }

    #[test]
    fn duplicates_are_summed() {
        let m = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 0, 2.0), (0, 0, 3.0)]);
        assert_eq!(m.get(0, 0), 4.0);
        assert_eq!(m.get(1, 0), 2.0);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn transpose_products_agree() {
        let a = random_banded(30, 4, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x: Vec<f64> = (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lhs = dot(&a.matvec(&x), &y);
        let rhs = dot(&x, &a.matvec_transpose(&y));
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        assert_eq!(a.transpose().matvec(&y), a.matvec_transpose(&y));
    }

    #[test]
    fn band_lu_solves_both_orientations() {
        let a = random_banded(50, 6, 7);
        let lu = BandLu::factor(&a).unwrap();
        let b: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let x = lu.solve(&b);
        let r: Vec<f64> = a.matvec(&x).iter().zip(&b).map(|(p, q)| p - q).collect();
        assert!(norm2(&r) <= 1e-12 * norm2(&b));
        let xt = lu.solve_transpose(&b);
        let rt: Vec<f64> = a
            .matvec_transpose(&xt)
            .iter()
            .zip(&b)
            .map(|(p, q)| p - q)
            .collect();
        assert!(norm2(&rt) <= 1e-12 * norm2(&b));
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = CsrMatrix::from_triplets(
            2,
            2,
            vec![(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)],
        );
        assert!(matches!(BandLu::factor(&a), Err(Error::Numerical { .. })));
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let f = FactoredMatrix::new(random_banded(10, 2, 3)).unwrap();
        assert_eq!(f.solve(&[0.0; 10], 1e-10).unwrap(), vec![0.0; 10]);
    }

    #[test]
    fn bandwidths_of_tridiagonal() {
        let a = CsrMatrix::from_triplets(
            3,
            3,
            vec![(0, 0, 2.0), (1, 0, -1.0), (0, 1, -1.0), (2, 1, -1.0)],
        );
        assert_eq!(a.bandwidths(), (1, 1));
    }
}
