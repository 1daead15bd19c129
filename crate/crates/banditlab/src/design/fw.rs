//! Pairwise Frank–Wolfe for log-det objectives over the simplex.
//!
//! Moving mass `a` from arm k to arm j changes S by a(x_j x_jᵀ − x_k x_kᵀ), a
//! rank-two update whose determinant ratio has the closed form
//! h(a) = 1 + a(A − B) + a²(C² − AB) with A = ‖x_j‖², B = ‖x_k‖², C = x_jᵀS⁻¹x_k.
//! The line search therefore never refactors S.

use crate::error::{BanditError, Result};
use crate::linalg::{dot, gram};

#[derive(Clone, Copy, Debug)]
pub struct FwOptions {
    pub max_iter: usize,
    pub gap_tol: f64,
}

impl Default for FwOptions {
    fn default() -> Self {
        Self { max_iter: 5000, gap_tol: 1e-7 }
    }
}

/// argmin over a ∈ [0, a_max] of a·slope − c·ln h(a); the objective is convex.
fn line_search(slope: f64, c: f64, a: f64, b: f64, cross: f64, a_max: f64) -> f64 {
    let e = cross * cross - a * b;
    let h = |s: f64| 1.0 + s * (a - b) + s * s * e;
    let dphi = |s: f64| slope - c * ((a - b) + 2.0 * s * e) / h(s);
    if dphi(0.0) >= 0.0 {
        return 0.0;
    }
    // h may vanish inside [0, a_max] only when x_j ∥ x_k with A < B, which
    // cannot happen for a descent direction, but keep the bracket inside h > 0.
    let mut hi = a_max;
    while h(hi) <= 0.0 {
        hi *= 0.5;
    }
    if dphi(hi) <= 0.0 {
        return hi;
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if dphi(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * a_max {
            break;
        }
    }
    0.5 * (lo + hi)
}

struct Norms {
    /// S⁻¹x for every arm.
    solved: Vec<Vec<f64>>,
    /// ‖x‖²_{S⁻¹} for every arm.
    sq: Vec<f64>,
}

fn norms(weights: &[f64], actions: &[Vec<f64>]) -> Result<Norms> {
    let f = gram(weights, actions).factor();
    let solved = actions.iter().map(|x| f.solve(x)).collect::<Result<Vec<_>>>()?;
    let sq = actions.iter().zip(&solved).map(|(x, s)| dot(x, s)).collect();
    Ok(Norms { solved, sq })
}

/// q^{G,κ} = κ·uniform(X) + (1−κ)·q with q on G maximizing log det of the
/// mixture. At the optimum max_{x∈G} ‖x‖² ≤ d/(1−κ) ≤ 2d.
pub fn exploration_design(subset: &[usize], actions: &[Vec<f64>], kappa: f64, opts: FwOptions) -> Result<Vec<f64>> {
    if subset.is_empty() {
        return Err(BanditError::EmptySubset);
    }
    if !(kappa > 0.0 && kappa <= 0.5) {
        return Err(BanditError::DomainError(format!("kappa must lie in (0, 1/2], got {kappa}")));
    }
    let n = actions.len();
    let d = actions[0].len() as f64;
    let mut q = vec![0.0; n];
    for &g in subset {
        q[g] = 1.0 / subset.len() as f64;
    }
    let mix = |q: &[f64]| -> Vec<f64> { q.iter().map(|v| kappa / n as f64 + (1.0 - kappa) * v).collect() };
    for _ in 0..opts.max_iter {
        let nm = norms(&mix(&q), actions)?;
        let j = *subset.iter().max_by(|&&a, &&b| nm.sq[a].total_cmp(&nm.sq[b])).unwrap();
        let k = *subset.iter().filter(|&&i| q[i] > 0.0).min_by(|&&a, &&b| nm.sq[a].total_cmp(&nm.sq[b])).unwrap();
        if nm.sq[j] - nm.sq[k] <= opts.gap_tol * d || j == k {
            break;
        }
        let cross = dot(&actions[k], &nm.solved[j]);
        let step = line_search(0.0, 1.0, nm.sq[j], nm.sq[k], cross, (1.0 - kappa) * q[k]) / (1.0 - kappa);
        if step <= 0.0 {
            break;
        }
        let step = step.min(q[k]);
        q[j] += step;
        q[k] -= step;
        if q[k] < 1e-15 {
            q[j] += q[k];
            q[k] = 0.0;
        }
    }
    Ok(mix(&q))
}

/// Stage one of the OP construction: minimize Σ p_xΔ̂_x − c·ln det S(p) over
/// the simplex. Returns the weights and the iteration count.
pub fn logdet_surrogate(gaps: &[f64], actions: &[Vec<f64>], c: f64, opts: FwOptions) -> Result<(Vec<f64>, usize)> {
    let n = actions.len();
    let d = actions[0].len() as f64;
    let mut p = vec![1.0 / n as f64; n];
    let mut iters = 0;
    while iters < opts.max_iter {
        iters += 1;
        let nm = norms(&p, actions)?;
        let grad: Vec<f64> = (0..n).map(|i| gaps[i] - c * nm.sq[i]).collect();
        let j = (0..n).min_by(|&a, &b| grad[a].total_cmp(&grad[b])).unwrap();
        let k = (0..n).filter(|&i| p[i] > 0.0).max_by(|&a, &b| grad[a].total_cmp(&grad[b])).unwrap();
        let fw_gap: f64 = (0..n).map(|i| p[i] * grad[i]).sum::<f64>() - grad[j];
        if fw_gap <= opts.gap_tol * d * c / 2.0 || j == k {
            break;
        }
        let cross = dot(&actions[k], &nm.solved[j]);
        let step = line_search(gaps[j] - gaps[k], c, nm.sq[j], nm.sq[k], cross, p[k]).min(p[k]);
        if step <= 0.0 {
            break;
        }
        p[j] += step;
        p[k] -= step;
        if p[k] < 1e-15 {
            p[j] += p[k];
            p[k] = 0.0;
        }
    }
    Ok((p, iters))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::quad_norm;

    fn basis(d: usize) -> Vec<Vec<f64>> {
        (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
    }

    #[test]
    fn full_basis_is_uniform() {
        let x = basis(3);
        let q = exploration_design(&[0, 1, 2], &x, 0.1, FwOptions::default()).unwrap();
        for (i, xi) in x.iter().enumerate() {
            assert!((q[i] - 1.0 / 3.0).abs() < 1e-12);
            assert!((quad_norm(xi, &gram(&q, &x)).unwrap() - 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn singleton_mixture_closed_form() {
        // κ=½ on the 2-d basis with G={e1}: q = (¾, ¼), so ‖e1‖² = 4/3.
        let x = basis(2);
        let q = exploration_design(&[0], &x, 0.5, FwOptions::default()).unwrap();
        assert!((q[0] - 0.75).abs() < 1e-15 && (q[1] - 0.25).abs() < 1e-15);
        let v = quad_norm(&x[0], &gram(&q, &x)).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-12 && v <= 2.0);
    }

    #[test]
    fn surrogate_small_gap_limit_is_d_optimal() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let x = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![s, s]];
        let (p, _) = logdet_surrogate(&[0.0, 0.0, 0.0], &x, 1.0, FwOptions::default()).unwrap();
        let g = gram(&p, &x);
        let worst = x.iter().map(|v| quad_norm(v, &g).unwrap()).fold(0.0, f64::max);
        assert!(worst <= 2.0 + 1e-6);
    }
}
