//! Small symmetric positive-definite solvers for cyclic banded systems.
//!
//! Both the snake's internal-energy system and the periodic spline system are
//! cyclic and banded. Their Cholesky factors only fill in within the row
//! envelope (band plus the last few dense rows), so factoring costs O(n·b²).

use crate::error::{Error, Result};

/// Cholesky factor `L` of an SPD matrix stored row by row over its envelope.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    first: Vec<usize>,
    rows: Vec<Vec<f64>>,
}

impl EnvelopeCholesky {
    /// `first[i]` is the leftmost column of row `i` that may be non-zero in the
    /// lower triangle; `entry(i, j)` is queried only for `first[i] <= j <= i`.
    pub fn factor(first: Vec<usize>, entry: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let n = first.len();
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
        let scale = (0..n).map(|i| entry(i, i).abs()).fold(0.0, f64::max);
        for i in 0..n {
            let fi = first[i];
            debug_assert!(fi <= i);
            let mut row = vec![0.0; i - fi + 1];
            for j in fi..i {
                let fj = first[j];
                let lj = &rows[j];
                let mut s = entry(i, j);
                for k in fi.max(fj)..j {
                    s -= row[k - fi] * lj[k - fj];
                }
                row[j - fi] = s / lj[j - fj];
            }
            let mut d = entry(i, i);
            for k in fi..i {
                d -= row[k - fi] * row[k - fi];
            }
            if !(d > 1e-14 * scale.max(f64::MIN_POSITIVE)) || !d.is_finite() {
                return Err(Error::Singular { row: i, pivot: d });
            }
            row[i - fi] = d.sqrt();
            rows.push(row);
        }
        Ok(Self { first, rows })
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(rhs.len(), n, "right-hand side length");
        let mut y = rhs.to_vec();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.rows[i];
            let mut s = y[i];
            for k in fi..i {
                s -= row[k - fi] * y[k];
            }
            y[i] = s / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.rows[i];
            y[i] /= row[i - fi];
            let xi = y[i];
            for k in fi..i {
                y[k] -= row[k - fi] * xi;
            }
        }
        y
    }
}

/// Envelope of a symmetric cyclic matrix with half-bandwidth `bw`: ordinary
/// band rows, except the last `bw` rows which reach back to column 0.
pub fn cyclic_envelope(n: usize, bw: usize) -> Vec<usize> {
    (0..n)
        .map(|i| if i + bw >= n { 0 } else { i.saturating_sub(bw) })
        .collect()
}

/// Symmetric circulant matrix with five diagonals:
/// row stencil `[off2, off1, center, off1, off2]`, wrapping around.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CyclicPentadiagonal {
    n: usize,
    center: f64,
    off1: f64,
    off2: f64,
}

impl CyclicPentadiagonal {
    pub fn new(n: usize, center: f64, off1: f64, off2: f64) -> Result<Self> {
        if n < 5 {
            return Err(Error::InvalidParameter(format!(
                "cyclic pentadiagonal matrix needs n >= 5, got {n}"
            )));
        }
        Ok(Self {
            n,
            center,
            off1,
            off2,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn stencil(&self) -> [f64; 5] {
        [self.off2, self.off1, self.center, self.off1, self.off2]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let d = i.abs_diff(j);
        match d.min(self.n - d) {
            0 => self.center,
            1 => self.off1,
            2 => self.off2,
            _ => 0.0,
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(v.len(), n);
        (0..n)
            .map(|i| {
                self.center * v[i]
                    + self.off1 * (v[(i + 1) % n] + v[(i + n - 1) % n])
                    + self.off2 * (v[(i + 2) % n] + v[(i + n - 2) % n])
            })
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Factor `self + shift * I` once for repeated solves.
    pub fn factor_shifted(&self, shift: f64) -> Result<ShiftedSolver> {
        let chol = EnvelopeCholesky::factor(cyclic_envelope(self.n, 2), |i, j| {
            self.get(i, j) + if i == j { shift } else { 0.0 }
        })?;
        Ok(ShiftedSolver {
            matrix: *self,
            shift,
            chol,
        })
    }
}

/// Factored `B + shift * I` for a cyclic pentadiagonal `B`.
#[derive(Debug, Clone)]
pub struct ShiftedSolver {
    matrix: CyclicPentadiagonal,
    shift: f64,
    chol: EnvelopeCholesky,
}

impl ShiftedSolver {
    pub fn matrix(&self) -> &CyclicPentadiagonal {
        &self.matrix
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Solve and verify the residual; one step of iterative refinement is
    /// applied when the first solve misses the tolerance.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut x = self.chol.solve(rhs);
        let tol = 1e-8 * (1.0 + rhs.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        let mut r = self.residual(&x, rhs);
        if inf_norm(&r) > tol {
            let dx = self.chol.solve(&r);
            for (xi, d) in x.iter_mut().zip(dx) {
                *xi -= d;
            }
            r = self.residual(&x, rhs);
        }
        let err = inf_norm(&r);
        if !(err <= tol) {
            return Err(Error::Singular {
                row: 0,
                pivot: err,
            });
        }
        Ok(x)
    }

    fn residual(&self, x: &[f64], rhs: &[f64]) -> Vec<f64> {
        self.matrix
            .mul_vec(x)
            .iter()
            .zip(x)
            .zip(rhs)
            .map(|((bx, xi), b)| bx + self.shift * xi - b)
            .collect()
    }
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}
