//! Catoni's robust mean estimator and the confidence-width parameters used by
//! REOLB blocks and BOTW's second phase.

use std::collections::BTreeMap;

use crate::error::{BanditError, Result};

/// Catoni's influence function: ln(1+y+y²/2) for y ≥ 0, odd extension below.
pub fn psi(y: f64) -> f64 {
    let a = y.abs();
    let v = if a > 1e100 { 2.0 * a.ln() - std::f64::consts::LN_2 } else { (a + 0.5 * a * a).ln_1p() };
    if y < 0.0 {
        -v
    } else {
        v
    }
}

pub fn clip(v: f64, lo: f64, hi: f64) -> Result<f64> {
    if lo > hi {
        return Err(BanditError::BadBounds { lo, hi });
    }
    Ok(v.max(lo).min(hi))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CatoniParams {
    pub alpha: f64,
    pub clip_lo: f64,
    pub clip_hi: f64,
}

impl CatoniParams {
    pub fn new(alpha: f64, clip_lo: f64, clip_hi: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(BanditError::DomainError(format!("alpha must be positive, got {alpha}")));
        }
        if clip_lo > clip_hi {
            return Err(BanditError::BadBounds { lo: clip_lo, hi: clip_hi });
        }
        Ok(Self { alpha, clip_lo, clip_hi })
    }

    /// Default clip range [−1, 1].
    pub fn with_alpha(alpha: f64) -> Result<Self> {
        Self::new(alpha, -1.0, 1.0)
    }

    /// Clip(Catoni_α(samples)).
    pub fn estimate(&self, samples: &[f64]) -> Result<f64> {
        let z = catoni_estimate(samples, self.alpha)?;
        clip(z, self.clip_lo, self.clip_hi)
    }
}

/// Root of z ↦ Σψ(α(X_i − z)) by bisection.
pub fn catoni_estimate(samples: &[f64], alpha: f64) -> Result<f64> {
    catoni_weighted(samples.iter().map(|&v| (v, 1.0)), alpha)
}

/// Catoni root over (value, multiplicity) pairs. The iterator is replayed on
/// every bisection step, so it must be cheap to clone.
pub fn catoni_weighted<I>(samples: I, alpha: f64) -> Result<f64>
where
    I: Iterator<Item = (f64, f64)> + Clone,
{
    if !(alpha > 0.0) {
        return Err(BanditError::DomainError(format!("alpha must be positive, got {alpha}")));
    }
    let (mut lo, mut hi, mut n) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for (v, w) in samples.clone() {
        lo = lo.min(v);
        hi = hi.max(v);
        n += w;
    }
    if n == 0.0 {
        return Err(BanditError::EmptySamples);
    }
    if lo == hi {
        return Ok(lo);
    }
    let f = |z: f64| samples.clone().map(|(v, w)| w * psi(alpha * (v - z))).sum::<f64>();
    lo -= 3.0 / alpha;
    hi += 3.0 / alpha;
    assert!(f(lo) > 0.0 && f(hi) < 0.0, "Catoni root not bracketed");
    loop {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.abs() <= 1e-12 * n || hi - lo <= 1e-12 || mid == lo || mid == hi {
            return Ok(mid);
        }
        if fm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Multiset of samples keyed by exact bit pattern. Importance-weighted
/// estimators take few distinct values under ±1 noise, so Catoni roots over a
/// growing buffer cost O(distinct values) per evaluation instead of O(n).
#[derive(Clone, Debug, Default)]
pub struct SampleBag {
    counts: BTreeMap<u64, u64>,
    n: u64,
}

impl SampleBag {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, v: f64) {
        *self.counts.entry(v.to_bits()).or_insert(0) += 1;
        self.n += 1;
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn catoni(&self, alpha: f64) -> Result<f64> {
        catoni_weighted(self.counts.iter().map(|(&b, &c)| (f64::from_bits(b), c as f64)), alpha)
    }
}

/// α_x for block m of REOLB.
pub fn alpha_block(m: u32, norm_sq: f64, n_arms: usize, delta: f64) -> f64 {
    let len = 2f64.powi(m as i32);
    (4.0 * (len * n_arms as f64 / delta).ln() / (len * norm_sq + len)).sqrt()
}

/// α_x for BOTW's second phase at round t; `cum_norm_sq` is Σ_{τ>t₀} 2‖x‖²_{S_τ⁻¹}.
pub fn alpha_phase2(t: usize, t0: usize, cum_norm_sq: f64, n_arms: usize, delta: f64) -> f64 {
    (4.0 * (t as f64 * n_arms as f64 / delta).ln() / ((t - t0) as f64 + cum_norm_sq)).sqrt()
}
