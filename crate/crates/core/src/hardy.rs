//! The coupling κ ↔ singularity exponent δ correspondence for the Hardy
//! potential `V(x) = κ|x|^{-α}`, the critical coupling κ*, and the
//! comparison factor `H(t,x) = 1 + (t^{-1/α}|x|)^{-δ}`.

use serde::{Deserialize, Serialize};

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::domain;
use crate::special::gamma;
use crate::Result;

fn check_dim_alpha(d: u32, alpha: f64) -> Result<()> {
    if d != 1 && d != 3 {
        return Err(domain!("dimension must be 1 or 3, got {d}"));
    }
    let upper = if d == 1 { 1.0 } else { 2.0 };
    if !(alpha > 0.0 && alpha < upper) {
        return Err(domain!("alpha must lie in (0, {upper}) for d = {d}, got {alpha}"));
    }
    Ok(())
}

/// `κ_δ = 2^α Γ((α+δ)/2) Γ((d-δ)/2) / (Γ(δ/2) Γ((d-α-δ)/2))`, with `κ_0 = 0`.
pub fn kappa_of_delta(d: u32, alpha: f64, delta: f64) -> Result<f64> {
    check_dim_alpha(d, alpha)?;
    let d = d as f64;
    let top = 0.5 * (d - alpha);
    if !(0.0..=top * (1.0 + 1e-15)).contains(&delta) {
        return Err(domain!("delta must lie in [0, {top}], got {delta}"));
    }
    if delta == 0.0 {
        return Ok(0.0);
    }
    let delta = delta.min(top);
    let num = gamma(0.5 * (alpha + delta)) * gamma(0.5 * (d - delta));
    let den = gamma(0.5 * delta) * gamma(0.5 * (d - alpha - delta));
    Ok(2f64.powf(alpha) * num / den)
}

/// Critical coupling `κ* = 2^α Γ((d+α)/4)² / Γ((d-α)/4)²`.
pub fn kappa_star(d: u32, alpha: f64) -> Result<f64> {
    check_dim_alpha(d, alpha)?;
    let d = d as f64;
    let r = gamma(0.25 * (d + alpha)) / gamma(0.25 * (d - alpha));
    Ok(2f64.powf(alpha) * r * r)
}

/// Inverse of [`kappa_of_delta`] by bisection on `[1e-9, (d-α)/2]`.
pub fn delta_of_kappa(d: u32, alpha: f64, kappa: f64) -> Result<f64> {
    let k_star = kappa_star(d, alpha)?;
    if kappa < 0.0 || kappa.is_nan() {
        return Err(domain!("kappa must be nonnegative, got {kappa}"));
    }
    if kappa > k_star * (1.0 + 1e-12) {
        return Err(domain!("supercritical coupling: kappa = {kappa} exceeds kappa* = {k_star}"));
    }
    if kappa == 0.0 {
        return Ok(0.0);
    }
    let top = 0.5 * (d as f64 - alpha);
    if kappa >= k_star {
        return Ok(top);
    }
    let mut lo = 1e-9;
    let mut hi = top;
    if kappa_of_delta(d, alpha, lo)? >= kappa {
        // κ_δ ~ c δ near zero
        let k_lo = kappa_of_delta(d, alpha, lo)?;
        return Ok(lo * kappa / k_lo);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kappa_of_delta(d, alpha, mid)? < kappa {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `H(t,r) = 1 + (t^{-1/α} r)^{-δ}`; `r = 0` gives `+∞` when `δ > 0`.
pub fn h_factor(t: f64, r: f64, alpha: f64, delta: f64) -> f64 {
    if delta == 0.0 {
        return 2.0;
    }
    if r == 0.0 {
        return f64::INFINITY;
    }
    1.0 + (r * t.powf(-1.0 / alpha)).powf(-delta)
}

/// A coupling `(κ, δ)` tied together by [`kappa_of_delta`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardyCoupling {
    pub d: u32,
    pub alpha: f64,
    pub kappa: f64,
    pub delta: f64,
    pub kappa_star: f64,
}

impl HardyCoupling {
    pub fn from_kappa(d: u32, alpha: f64, kappa: f64) -> Result<Self> {
        let delta = delta_of_kappa(d, alpha, kappa)?;
        Ok(Self { d, alpha, kappa, delta, kappa_star: kappa_star(d, alpha)? })
    }

    pub fn from_delta(d: u32, alpha: f64, delta: f64) -> Result<Self> {
        let kappa = kappa_of_delta(d, alpha, delta)?;
        Ok(Self { d, alpha, kappa, delta, kappa_star: kappa_star(d, alpha)? })
    }

    /// The critical coupling itself (`δ = (d-α)/2`).
    pub fn critical(d: u32, alpha: f64) -> Result<Self> {
        Self::from_delta(d, alpha, 0.5 * (d as f64 - alpha))
    }

    pub fn zero(d: u32, alpha: f64) -> Result<Self> {
        Self::from_kappa(d, alpha, 0.0)
    }

    pub fn is_subcritical(&self) -> bool {
        self.kappa < self.kappa_star * (1.0 - 1e-12)
    }

    /// `V(r) = κ r^{-α}`.
    pub fn potential(&self, r: f64) -> f64 {
        self.kappa * r.powf(-self.alpha)
    }

    pub fn h_factor(&self, t: f64, r: f64) -> f64 {
        h_factor(t, r, self.alpha, self.delta)
    }
}
