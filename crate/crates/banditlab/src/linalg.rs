//! Dense symmetric positive (semi)definite algebra for d×d design matrices.
//!
//! Everything goes through a pivoted Cholesky factorization; no matrix is ever
//! inverted explicitly. The pivoted form also reports the numerical rank, which
//! is how singular designs and out-of-range directions are detected.

use crate::error::{BanditError, Result};

/// Relative pivot threshold below which the remaining Schur complement is
/// treated as zero.
const RANK_TOL: f64 = 1e-13;
/// Residual tolerance for "x lies in range(M)".
const RANGE_TOL: f64 = 1e-10;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Symmetric d×d matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrix {
    d: usize,
    data: Vec<f64>,
}

impl DesignMatrix {
    pub fn zeros(d: usize) -> Self {
        Self { d, data: vec![0.0; d * d] }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Self::zeros(d);
        for i in 0..d {
            m.data[i * d + i] = 1.0;
        }
        m
    }

    /// Builds from row-major data, averaging with the transpose.
    pub fn from_rows(d: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != d * d {
            return Err(BanditError::LengthMismatch { expected: d * d, got: data.len() });
        }
        let mut m = Self { d, data };
        m.symmetrize();
        Ok(m)
    }

    fn symmetrize(&mut self) {
        let d = self.d;
        for i in 0..d {
            for j in (i + 1)..d {
                let v = 0.5 * (self.data[i * d + j] + self.data[j * d + i]);
                self.data[i * d + j] = v;
                self.data[j * d + i] = v;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.d + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Adds `w · x xᵀ`, filling both triangles identically.
    pub fn add_outer(&mut self, w: f64, x: &[f64]) {
        let d = self.d;
        for i in 0..d {
            let wi = w * x[i];
            for j in 0..=i {
                let v = wi * x[j];
                self.data[i * d + j] += v;
                if i != j {
                    self.data[j * d + i] += v;
                }
            }
        }
    }

    pub fn add_ridge(&mut self, lambda: f64) {
        for i in 0..self.d {
            self.data[i * self.d + i] += lambda;
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.d).map(|i| dot(&self.data[i * self.d..(i + 1) * self.d], x)).collect()
    }

    pub fn factor(&self) -> Cholesky {
        Cholesky::new(self)
    }
}

/// Σ w_x x xᵀ.
pub fn gram(weights: &[f64], actions: &[Vec<f64>]) -> DesignMatrix {
    let d = actions.first().map_or(0, Vec::len);
    let mut m = DesignMatrix::zeros(d);
    for (w, x) in weights.iter().zip(actions) {
        if *w != 0.0 {
            m.add_outer(*w, x);
        }
    }
    m
}

/// Σ w_x x xᵀ + λI.
pub fn gram_ridge(weights: &[f64], actions: &[Vec<f64>], lambda: f64) -> DesignMatrix {
    let mut m = gram(weights, actions);
    m.add_ridge(lambda);
    m
}

/// Pivoted Cholesky factor `Pᵀ M P = L Lᵀ`, truncated at the numerical rank.
#[derive(Clone, Debug)]
pub struct Cholesky {
    d: usize,
    rank: usize,
    perm: Vec<usize>,
    /// Row-major d×d; only the first `rank` columns are meaningful.
    l: Vec<f64>,
}

impl Cholesky {
    pub fn new(m: &DesignMatrix) -> Self {
        let d = m.d;
        let mut a = m.data.clone();
        let mut perm: Vec<usize> = (0..d).collect();
        let max_diag = (0..d).map(|i| a[i * d + i]).fold(0.0f64, f64::max);
        let tol = RANK_TOL * max_diag.max(f64::MIN_POSITIVE);
        let mut rank = 0;
        for k in 0..d {
            let (piv, pval) =
                (k..d)
                    .map(|j| (j, a[j * d + j]))
                    .fold((k, f64::NEG_INFINITY), |acc, v| if v.1 > acc.1 { v } else { acc });
            if !(pval > tol) {
                break;
            }
            if piv != k {
                swap_sym(&mut a, d, k, piv);
                perm.swap(k, piv);
            }
            let lkk = a[k * d + k].sqrt();
            a[k * d + k] = lkk;
            for i in (k + 1)..d {
                a[i * d + k] /= lkk;
            }
            for j in (k + 1)..d {
                let ljk = a[j * d + k];
                for i in j..d {
                    a[i * d + j] -= a[i * d + k] * ljk;
                }
            }
            // keep the upper triangle in sync so later pivot swaps stay valid
            for j in (k + 1)..d {
                for i in j..d {
                    a[j * d + i] = a[i * d + j];
                }
            }
            rank += 1;
        }
        Self { d, rank, perm, l: a }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.d
    }

    fn l(&self, i: usize, j: usize) -> f64 {
        self.l[i * self.d + j]
    }

    /// Solves `L₁₁ z = (Pᵀx)[..r]` and returns z plus the out-of-range residual.
    fn half_solve(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let r = self.rank;
        let xp: Vec<f64> = self.perm.iter().map(|&p| x[p]).collect();
        let mut z = vec![0.0; r];
        for i in 0..r {
            let mut s = xp[i];
            for j in 0..i {
                s -= self.l(i, j) * z[j];
            }
            z[i] = s / self.l(i, i);
        }
        let mut resid = 0.0f64;
        for i in r..self.d {
            let mut s = xp[i];
            for j in 0..r {
                s -= self.l(i, j) * z[j];
            }
            resid = resid.max(s.abs());
        }
        (z, resid)
    }

    /// ‖x‖²_{M⁺} for x in range(M).
    pub fn quad_norm(&self, x: &[f64]) -> Result<f64> {
        let (z, resid) = self.half_solve(x);
        if resid > RANGE_TOL * norm(x).max(1.0) {
            return Err(BanditError::SingularDirection(resid));
        }
        Ok(dot(&z, &z))
    }

    /// M⁻¹ b; requires full rank.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if !self.is_full_rank() {
            return Err(BanditError::NotPd);
        }
        let d = self.d;
        let (mut w, _) = self.half_solve(b);
        for i in (0..d).rev() {
            let mut s = w[i];
            for j in (i + 1)..d {
                s -= self.l(j, i) * w[j];
            }
            w[i] = s / self.l(i, i);
        }
        let mut out = vec![0.0; d];
        for (k, &p) in self.perm.iter().enumerate() {
            out[p] = w[k];
        }
        Ok(out)
    }

    pub fn log_det(&self) -> Result<f64> {
        if !self.is_full_rank() {
            return Err(BanditError::NotPd);
        }
        Ok((0..self.d).map(|i| 2.0 * self.l(i, i).ln()).sum())
    }
}

fn swap_sym(a: &mut [f64], d: usize, p: usize, q: usize) {
    for i in 0..d {
        a.swap(i * d + p, i * d + q);
    }
    for j in 0..d {
        a.swap(p * d + j, q * d + j);
    }
}

/// ‖x‖²_{M⁻¹} via factor-and-solve.
pub fn quad_norm(x: &[f64], m: &DesignMatrix) -> Result<f64> {
    m.factor().quad_norm(x)
}

pub fn log_det(m: &DesignMatrix) -> Result<f64> {
    m.factor().log_det()
}

pub fn rank(m: &DesignMatrix) -> usize {
    m.factor().rank()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(d: usize) -> Vec<Vec<f64>> {
        (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
    }

    #[test]
    fn gram_examples() {
        assert_eq!(gram(&[0.5, 0.5], &basis(2)).as_slice(), &[0.5, 0.0, 0.0, 0.5]);
        assert_eq!(gram(&[1.0], &basis(2)[..1]).as_slice(), &[1.0, 0.0, 0.0, 0.0]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let m = gram(&[0.5, 0.5], &[vec![1.0, 0.0], vec![s, s]]);
        let want = [0.75, 0.25, 0.25, 0.25];
        for (a, b) in m.as_slice().iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn quad_norm_examples() {
        assert_eq!(quad_norm(&[1.0, 0.0], &DesignMatrix::identity(2)).unwrap(), 1.0);
        let half = gram(&[0.5, 0.5], &basis(2));
        assert!((quad_norm(&[1.0, 0.0], &half).unwrap() - 2.0).abs() < 1e-14);
        let m = DesignMatrix::from_rows(2, vec![0.75, 0.25, 0.25, 0.25]).unwrap();
        assert!((quad_norm(&[1.0, 0.0], &m).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn singular_direction_detected() {
        let m = gram(&[1.0, 0.0], &basis(2));
        assert!((quad_norm(&[3.0, 0.0], &m).unwrap() - 9.0).abs() < 1e-12);
        assert!(matches!(quad_norm(&[0.0, 1.0], &m), Err(BanditError::SingularDirection(_))));
    }

    #[test]
    fn log_det_examples() {
        assert_eq!(log_det(&DesignMatrix::identity(3)).unwrap(), 0.0);
        let half = gram(&[0.5, 0.5], &basis(2));
        assert!((log_det(&half).unwrap() - (-1.386294361119891)).abs() < 1e-12);
        let sing = gram(&[1.0, 0.0], &basis(2));
        assert!(matches!(log_det(&sing), Err(BanditError::NotPd)));
    }

    #[test]
    fn solve_inverts() {
        let m = DesignMatrix::from_rows(2, vec![0.75, 0.25, 0.25, 0.25]).unwrap();
        let v = m.factor().solve(&[1.0, 0.0]).unwrap();
        assert!((v[0] - 2.0).abs() < 1e-12 && (v[1] + 2.0).abs() < 1e-12);
    }
}
