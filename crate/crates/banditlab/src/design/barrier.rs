//! Log-barrier Newton method for programs of the form
//!
//!   minimize cᵀw  subject to  ‖x‖²_{S(w)⁻¹} ≤ b_x for bounded arms,  w > 0,
//!   and optionally Σw = 1,
//!
//! which covers both OP and the instance constant program. With
//! K = X S(w)⁻¹ Xᵀ, g_x = K_xx has gradient −K_xy² and Hessian 2K_xyK_yzK_zx,
//! so the Newton system is assembled in O(n³) without differentiating through
//! a factorization. Steps are solved in variables scaled by w, which keeps the
//! system well conditioned when some weights are tiny.

use crate::error::{BanditError, Result};
use crate::linalg::{dot, gram, DesignMatrix};

pub struct BarrierProblem<'a> {
    pub actions: &'a [Vec<f64>],
    pub cost: Vec<f64>,
    /// Upper bound on ‖x‖²_{S(w)⁻¹} per arm, or `None` when unconstrained.
    pub bounds: Vec<Option<f64>>,
    pub simplex: bool,
}

#[derive(Clone, Debug)]
pub struct BarrierResult {
    pub weights: Vec<f64>,
    pub objective: f64,
    pub newton_steps: usize,
    /// Duality-gap bound m/τ at exit.
    pub gap: f64,
}

struct Point {
    k: Vec<Vec<f64>>,
    slack: Vec<Option<f64>>,
}

impl BarrierProblem<'_> {
    fn n(&self) -> usize {
        self.actions.len()
    }

    fn m(&self) -> usize {
        self.n() + self.bounds.iter().filter(|b| b.is_some()).count()
    }

    fn objective(&self, w: &[f64]) -> f64 {
        dot(&self.cost, w)
    }

    /// K and slacks, or `None` outside the strict interior.
    fn point(&self, w: &[f64]) -> Option<Point> {
        if w.iter().any(|v| !(*v > 0.0)) {
            return None;
        }
        let f = gram(w, self.actions).factor();
        let solved: Vec<Vec<f64>> = self.actions.iter().map(|x| f.solve(x).ok()).collect::<Option<_>>()?;
        let k: Vec<Vec<f64>> = self.actions.iter().map(|x| solved.iter().map(|s| dot(x, s)).collect()).collect();
        let mut slack = Vec::with_capacity(self.n());
        for (i, b) in self.bounds.iter().enumerate() {
            match b {
                Some(b) => {
                    let s = b - k[i][i];
                    if !(s > 0.0) {
                        return None;
                    }
                    slack.push(Some(s));
                }
                None => slack.push(None),
            }
        }
        Some(Point { k, slack })
    }

    fn barrier(&self, tau: f64, w: &[f64], pt: &Point) -> f64 {
        tau * self.objective(w)
            - pt.slack.iter().flatten().map(|s| s.ln()).sum::<f64>()
            - w.iter().map(|v| v.ln()).sum::<f64>()
    }

    /// Newton direction and decrement for the barrier at scale τ.
    fn newton(&self, tau: f64, w: &[f64], pt: &Point) -> Option<(Vec<f64>, f64, f64)> {
        let n = self.n();
        let k = &pt.k;
        let mut grad: Vec<f64> = (0..n).map(|y| tau * self.cost[y] - 1.0 / w[y]).collect();
        // scaled Hessian D H D with D = diag(w)
        let mut h = vec![0.0; n * n];
        for (x, s) in pt.slack.iter().enumerate() {
            let Some(s) = s else { continue };
            let kx = &k[x];
            for y in 0..n {
                grad[y] -= kx[y] * kx[y] / s;
                for z in 0..=y {
                    let v = 2.0 * kx[y] * kx[z] * k[y][z] / s + kx[y] * kx[y] * kx[z] * kx[z] / (s * s);
                    h[y * n + z] += v * w[y] * w[z];
                }
            }
        }
        for y in 0..n {
            h[y * n + y] += 1.0;
            for z in 0..y {
                h[z * n + y] = h[y * n + z];
            }
        }
        let f = DesignMatrix::from_rows(n, h).ok()?.factor();
        let gs: Vec<f64> = (0..n).map(|y| grad[y] * w[y]).collect();
        let a = f.solve(&gs).ok()?;
        let mut v: Vec<f64> = if self.simplex {
            let b = f.solve(w).ok()?;
            let omega = -dot(w, &a) / dot(w, &b);
            (0..n).map(|y| -(a[y] + omega * b[y]) * w[y]).collect()
        } else {
            (0..n).map(|y| -a[y] * w[y]).collect()
        };
        if self.simplex {
            let drift: f64 = v.iter().sum::<f64>() / n as f64;
            v.iter_mut().for_each(|e| *e -= drift);
        }
        let slope = dot(&grad, &v);
        Some((v, -slope, slope))
    }

    /// Runs the path-following method from a strictly feasible `start` until
    /// the duality-gap bound falls below `rel_gap` times the current objective,
    /// or below 1e-12 times the starting one when the optimum is near zero.
    pub fn solve(&self, start: Vec<f64>, rel_gap: f64) -> Result<BarrierResult> {
        let mut w = start;
        let mut pt = self.point(&w).ok_or(BanditError::Unbounded)?;
        let obj0 = self.objective(&w);
        let m = self.m() as f64;
        if !(obj0 > 0.0) {
            return Ok(BarrierResult { objective: obj0, weights: w, newton_steps: 0, gap: 0.0 });
        }
        let floor = 1e-12 * obj0;
        let mut tau = m / obj0;
        let mut steps = 0;
        loop {
            for _ in 0..80 {
                let Some((v, dec, slope)) = self.newton(tau, &w, &pt) else { break };
                if dec / 2.0 <= 1e-10 {
                    break;
                }
                let f0 = self.barrier(tau, &w, &pt);
                let mut s: f64 = 1.0;
                for (wi, vi) in w.iter().zip(&v) {
                    if *vi < 0.0 {
                        s = s.min(-0.99 * wi / vi);
                    }
                }
                let mut accepted = None;
                for _ in 0..60 {
                    let mut cand: Vec<f64> = w.iter().zip(&v).map(|(a, b)| a + s * b).collect();
                    if self.simplex {
                        let total: f64 = cand.iter().sum();
                        cand.iter_mut().for_each(|c| *c /= total);
                    }
                    if let Some(cp) = self.point(&cand) {
                        if self.barrier(tau, &cand, &cp) <= f0 + 0.25 * s * slope {
                            accepted = Some((cand, cp));
                            break;
                        }
                    }
                    s *= 0.5;
                }
                steps += 1;
                match accepted {
                    Some((cand, cp)) => {
                        w = cand;
                        pt = cp;
                    }
                    None => break,
                }
            }
            if m / tau <= (rel_gap * self.objective(&w)).max(floor) {
                break;
            }
            tau *= 8.0;
        }
        Ok(BarrierResult { objective: self.objective(&w), weights: w, newton_steps: steps, gap: m / tau })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormal_c_program() {
        // minimize 0.2 N₁ + 0.4 N₂ (+ tiny cost on N₀) s.t. 1/N_i ≤ Δ_i²/2.
        let x = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let p = BarrierProblem {
            actions: &x,
            cost: vec![1e-9, 0.2, 0.4],
            bounds: vec![None, Some(0.02), Some(0.08)],
            simplex: false,
        };
        let r = p.solve(vec![1.0, 100.0, 30.0], 1e-9).unwrap();
        assert!((r.weights[1] - 50.0).abs() < 1e-4);
        assert!((r.weights[2] - 12.5).abs() < 1e-4);
    }

    #[test]
    fn two_arm_simplex() {
        // minimize 0.5 p₁ s.t. 1/p₀ ≤ 8, 1/p₁ ≤ 10: optimum p₁ = 0.1.
        let x = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let p =
            BarrierProblem { actions: &x, cost: vec![0.0, 0.5], bounds: vec![Some(8.0), Some(10.0)], simplex: true };
        let r = p.solve(vec![0.5, 0.5], 1e-9).unwrap();
        assert!((r.weights[1] - 0.1).abs() < 1e-8, "{:?}", r.weights);
    }
}
