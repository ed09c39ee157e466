//! Small dense linear algebra for the affine problem zoo.
//!
//! Problems here live in dimension a few dozen at most, so the routines favor
//! determinism and auditability over asymptotics: cyclic Jacobi sweeps for
//! symmetric eigenvalues, power iteration for the spectral norm, modified
//! Gram-Schmidt for seeded orthogonal factors.

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;

pub type Vector = Vec<f64>;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vector {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vector {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], c: f64) -> Vector {
    a.iter().map(|x| c * x).collect()
}

/// a + c*b
pub fn axpy(a: &[f64], c: f64, b: &[f64]) -> Vector {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + c * y).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    norm(&sub(a, b))
}

pub fn is_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Matrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Matrix::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let dim = rows.len();
        let mut m = Matrix::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), dim, "matrix rows must be square");
            m.data[i * dim..(i + 1) * dim].copy_from_slice(row);
        }
        m
    }

    /// Build from a flat row-major buffer; rejects non-square or non-finite data.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        if !is_finite(&data) {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(Matrix { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row_major(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vector {
        debug_assert_eq!(x.len(), self.dim);
        let mut out = vec![0.0; self.dim];
        for i in 0..self.dim {
            out[i] = dot(&self.data[i * self.dim..(i + 1) * self.dim], x);
        }
        out
    }

    /// A^T x without materializing the transpose.
    pub fn matvec_transpose(&self, x: &[f64]) -> Vector {
        debug_assert_eq!(x.len(), self.dim);
        let mut out = vec![0.0; self.dim];
        for i in 0..self.dim {
            let xi = x[i];
            for j in 0..self.dim {
                out[j] += self.data[i * self.dim + j] * xi;
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// (A + A^T) / 2
    pub fn symmetric_part(&self) -> Matrix {
        let mut s = Matrix::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                s.set(i, j, 0.5 * (self.get(i, j) + self.get(j, i)));
            }
        }
        s
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += aik * other.get(k, j);
                }
            }
        }
        out
    }

    /// Q A Q^T for orthogonal Q.
    pub fn conjugate_by(&self, q: &Matrix) -> Matrix {
        q.matmul(self).matmul(&q.transpose())
    }

    /// Eigenvalues of a symmetric matrix via cyclic Jacobi sweeps, ascending.
    ///
    /// The caller is responsible for passing a (numerically) symmetric matrix;
    /// only the upper triangle drives the rotations.
    pub fn sym_eigenvalues(&self) -> Vec<f64> {
        let n = self.dim;
        if n == 0 {
            return vec![];
        }
        let mut a = self.clone();
        let scale: f64 = a.data.iter().map(|v| v * v).sum::<f64>().max(1e-300);
        for _sweep in 0..60 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a.get(i, j).powi(2))
                .sum();
            if off <= 1e-30 * scale {
                break;
            }
            for p in 0..n - 1 {
                for q in p + 1..n {
                    let apq = a.get(p, q);
                    if apq.abs() <= 1e-300 {
                        continue;
                    }
                    let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    // rotate rows p,q
                    for k in 0..n {
                        let akp = a.get(k, p);
                        let akq = a.get(k, q);
                        a.set(k, p, c * akp - s * akq);
                        a.set(k, q, s * akp + c * akq);
                    }
                    // rotate columns p,q
                    for k in 0..n {
                        let apk = a.get(p, k);
                        let aqk = a.get(q, k);
                        a.set(p, k, c * apk - s * aqk);
                        a.set(q, k, s * apk + c * aqk);
                    }
                }
            }
        }
        let mut eigs: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
        eigs.sort_by(f64::total_cmp);
        eigs
    }

    pub fn sym_eig_min(&self) -> f64 {
        self.sym_eigenvalues()[0]
    }

    pub fn sym_eig_max(&self) -> f64 {
        *self.sym_eigenvalues().last().unwrap()
    }

    /// Spectral norm sigma_max(A) via power iteration on A^T A.
    pub fn spectral_norm(&self) -> f64 {
        let n = self.dim;
        if n == 0 {
            return 0.0;
        }
        // Deterministic start with unequal components so we do not begin
        // orthogonal to the leading singular direction of structured matrices.
        let mut v: Vector = (0..n).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        let nv = norm(&v);
        v = scale(&v, 1.0 / nv);
        let mut sigma_sq = 0.0;
        for _ in 0..20_000 {
            let w = self.matvec_transpose(&self.matvec(&v));
            let nw = norm(&w);
            if nw == 0.0 {
                return 0.0;
            }
            let next = nw; // Rayleigh quotient of A^T A at unit v
            v = scale(&w, 1.0 / nw);
            if (next - sigma_sq).abs() <= 1e-15 * next.max(1.0) {
                sigma_sq = next;
                break;
            }
            sigma_sq = next;
        }
        sigma_sq.sqrt()
    }

    /// Solve A x = b by Gaussian elimination with partial pivoting.
    /// Returns None when a pivot falls below `tol` times the matrix scale.
    pub fn solve(&self, b: &[f64], tol: f64) -> Option<Vector> {
        let n = self.dim;
        assert_eq!(b.len(), n);
        let mut a = self.data.clone();
        let mut x = b.to_vec();
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for col in 0..n {
            let (piv, pval) = (col..n)
                .map(|r| (r, a[r * n + col].abs()))
                .max_by(|l, r| l.1.total_cmp(&r.1))
                .unwrap();
            if pval <= tol * scale {
                return None;
            }
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                }
                x.swap(col, piv);
            }
            let d = a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] / d;
                if f == 0.0 {
                    continue;
                }
                for j in col..n {
                    a[r * n + j] -= f * a[col * n + j];
                }
                x[r] -= f * x[col];
            }
        }
        for col in (0..n).rev() {
            let mut s = x[col];
            for j in col + 1..n {
                s -= a[col * n + j] * x[j];
            }
            x[col] = s / a[col * n + col];
        }
        Some(x)
    }
}

/// Seeded random orthogonal matrix: modified Gram-Schmidt applied to a matrix
/// of standard normal entries. MGS keeps the R diagonal positive, which fixes
/// the sign convention and makes the factor a deterministic function of the
/// RNG stream.
pub fn random_orthogonal<R: Rng>(dim: usize, rng: &mut R) -> Matrix {
    let mut cols: Vec<Vector> = (0..dim)
        .map(|_| (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    for j in 0..dim {
        for i in 0..j {
            let proj = dot(&cols[j], &cols[i]);
            for k in 0..dim {
                cols[j][k] -= proj * cols[i][k];
            }
        }
        let mut nj = norm(&cols[j]);
        if nj < 1e-12 {
            // Measure-zero degeneracy; fall back to a canonical direction and
            // re-orthogonalize once.
            cols[j] = (0..dim).map(|k| if k == j { 1.0 } else { 0.0 }).collect();
            for i in 0..j {
                let proj = dot(&cols[j], &cols[i]);
                for k in 0..dim {
                    cols[j][k] -= proj * cols[i][k];
                }
            }
            nj = norm(&cols[j]);
        }
        for k in 0..dim {
            cols[j][k] /= nj;
        }
    }
    let mut q = Matrix::zeros(dim);
    for (j, col) in cols.iter().enumerate() {
        for i in 0..dim {
            q.set(i, j, col[i]);
        }
    }
    q
}
