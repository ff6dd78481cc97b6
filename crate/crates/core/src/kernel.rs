//! Free heat kernels and resolvent kernels by radial Fourier inversion,
//! plus the structural identities that tie them together.
//!
//! Every kernel is computed through a one-dimensional transform of a
//! spectral weight `a(ρ) ≥ 0`:
//!
//! * line kernel `q(u) = (1/π) ∫₀^∞ a(ρ) cos(ρu) dρ`,
//! * its primitive `F(u) = ∫₀^u q = (1/π) ∫₀^∞ a(ρ) sin(ρu)/ρ dρ`,
//! * the `d = 3` radial kernel `(1/2π²r) ∫₀^∞ a(ρ) ρ sin(ρr) dρ = -q'(r)/(2πr)`.
//!
//! The transforms use the Ooura–Mori rule, which needs no splitting of the
//! oscillatory tail.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain, numeric};
use crate::grid::Dim;
use crate::levy::LevyModel;
use crate::quad::{exp_sinh, FourierRule, Oscillation};
use crate::special::gamma;
use crate::Result;

/// Evaluates the radial transforms of one spectral weight.
#[derive(Debug, Clone, Default)]
pub struct Transforms {
    rule: FourierRule,
}

impl Transforms {
    pub fn new() -> Self {
        Self::default()
    }

    pub(crate) fn rule_ref(&self) -> &FourierRule {
        &self.rule
    }

    /// `(1/π) ∫ a(ρ) cos(ρu) dρ`; `scale` is where `a` starts to decay.
    pub fn line(&self, a: impl Fn(f64) -> f64, u: f64, scale: f64) -> f64 {
        let u = u.abs();
        if u == 0.0 {
            return exp_sinh(&a, scale, 1e-13).0 / PI;
        }
        self.rule.integrate(Oscillation::Cosine, u, &a) / PI
    }

    /// `(1/π) ∫ a(ρ) sin(ρu)/ρ dρ`, odd in `u`.
    pub fn line_primitive(&self, a: impl Fn(f64) -> f64, u: f64) -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        let v = self.rule.integrate(Oscillation::Sine, u.abs(), |rho| a(rho) / rho) / PI;
        if u < 0.0 {
            -v
        } else {
            v
        }
    }

    /// `-(1/π) ∫ a(ρ) ρ sin(ρu) dρ`, the derivative of [`Self::line`].
    pub fn line_derivative(&self, a: impl Fn(f64) -> f64, u: f64) -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        let v = -self.rule.integrate(Oscillation::Sine, u.abs(), |rho| a(rho) * rho) / PI;
        if u < 0.0 {
            -v
        } else {
            v
        }
    }

    /// `d = 3` radial inversion `(1/2π²r) ∫ a(ρ) ρ sin(ρr) dρ`.
    pub fn space3(&self, a: impl Fn(f64) -> f64, r: f64, scale: f64) -> f64 {
        if r * scale < 1e-7 {
            return exp_sinh(|rho| a(rho) * rho * rho, scale, 1e-13).0 / (2.0 * PI * PI);
        }
        self.rule.integrate(Oscillation::Sine, r, |rho| a(rho) * rho) / (2.0 * PI * PI * r)
    }
}

/// Model-bound kernel evaluator.
#[derive(Debug, Clone)]
pub struct KernelEngine {
    model: LevyModel,
    tr: Transforms,
}

impl KernelEngine {
    pub fn new(model: &LevyModel) -> Self {
        Self { model: model.clone(), tr: Transforms::new() }
    }

    pub fn model(&self) -> &LevyModel {
        &self.model
    }

    pub fn transforms(&self) -> &Transforms {
        &self.tr
    }

    /// Frequency where `e^{-tψ}` has decayed appreciably.
    pub fn heat_scale(&self, t: f64) -> f64 {
        t.powf(-1.0 / self.model.alpha())
    }

    /// `p_t(r)` in the model's dimension.
    pub fn heat(&self, t: f64, r: f64) -> f64 {
        let w = |rho: f64| (-t * self.model.psi(rho)).exp();
        match self.model.dim() {
            Dim::One => self.tr.line(w, r, self.heat_scale(t)),
            Dim::Three => self.tr.space3(w, r, self.heat_scale(t)),
        }
    }

    /// The one-dimensional kernel with the same symbol.
    pub fn heat_line(&self, t: f64, u: f64) -> f64 {
        self.tr.line(|rho| (-t * self.model.psi(rho)).exp(), u, self.heat_scale(t))
    }

    /// `∫₀^u` of [`Self::heat_line`].
    pub fn heat_line_primitive(&self, t: f64, u: f64) -> f64 {
        self.tr.line_primitive(|rho| (-t * self.model.psi(rho)).exp(), u)
    }

    /// `∂_r p_t(r)`.
    pub fn heat_derivative(&self, t: f64, r: f64) -> f64 {
        let w = |rho: f64| (-t * self.model.psi(rho)).exp();
        match self.model.dim() {
            Dim::One => self.tr.line_derivative(w, r),
            Dim::Three => {
                let scale = self.heat_scale(t);
                if r * scale < 1e-2 {
                    // ρ sin(ρr)/r = ρ²(1 - ρ²r²/6 + ρ⁴r⁴/120 - ...)
                    let m4 = exp_sinh(|rho| w(rho) * rho.powi(4), scale, 1e-13).0;
                    let m6 = exp_sinh(|rho| w(rho) * rho.powi(6), scale, 1e-13).0;
                    return (-r * m4 / 3.0 + r.powi(3) * m6 / 30.0) / (2.0 * PI * PI);
                }
                // p = -q'/(2πr) ⇒ p' = (q'/r - q'')/(2πr), with q'' = -(1/π)∫a ρ² cos
                let q1 = self.tr.line_derivative(w, r);
                let q2 = -self.tr.rule.integrate(Oscillation::Cosine, r, |rho| w(rho) * rho * rho) / PI;
                (q1 / r - q2) / (2.0 * PI * r)
            }
        }
    }

    /// Resolvent `g_λ(r)` by Fourier inversion of `1/(λ + ψ)`. In `d = 3`
    /// the stable part with the same `λ` is handled through its own
    /// subordination integral so that the Fourier integrand decays.
    pub fn resolvent_fourier(&self, lambda: f64, r: f64) -> f64 {
        let m = &self.model;
        match m.dim() {
            Dim::One => self.tr.line(|rho| 1.0 / (lambda + m.psi(rho)), r, lambda.powf(1.0 / m.alpha())),
            Dim::Three => {
                let a = m.alpha();
                let rest = |rho: f64| {
                    let ra = rho.powf(a);
                    m.psi_sigma(rho) / ((lambda + m.psi(rho)) * (lambda + ra))
                };
                let part = if m.is_stable() { 0.0 } else { self.tr.space3(rest, r, lambda.powf(1.0 / a)) };
                part + stable_resolvent_3d(a, lambda, r)
            }
        }
    }

    /// Resolvent by Laplace transform in time of [`Self::heat`].
    pub fn resolvent_laplace(&self, lambda: f64, r: f64) -> f64 {
        let scale = r.max(1e-3).powf(self.model.alpha()).min(1.0 / lambda);
        exp_sinh(|t| (-lambda * t).exp() * self.heat(t, r), scale, 1e-9).0
    }
}

/// `d = 3` α-stable resolvent `∫₀^∞ e^{-λt} p^{(α)}_t(r) dt`, through the
/// Fourier representation `(1/2π²r)∫ ρ sin(ρr)/(λ+ρ^α) dρ` written as a
/// Stieltjes-type integral: `1/(λ+ρ^α) = ∫₀^∞ e^{-s(λ+ρ^α)} ds` would need the
/// heat kernel; instead we use the identity
/// `ρ/(λ+ρ^α) = ρ^{1-α} - λρ^{1-α}/(λ+ρ^α)` and the Riesz kernel for the
/// first term. The remainder is integrated by the Fourier rule; for
/// `α > 1/2` it decays, otherwise the subtraction is repeated once more.
pub fn stable_resolvent_3d(alpha: f64, lambda: f64, r: f64) -> f64 {
    let tr = Transforms::new();
    let riesz = |beta: f64| -> f64 {
        // (1/2π²r) ∫ ρ^{1-β} sin(ρr) dρ = Γ((3-β)/2) / (2^β π^{3/2} Γ(β/2)) r^{β-3}
        gamma(0.5 * (3.0 - beta)) / (2f64.powf(beta) * PI.powf(1.5) * gamma(0.5 * beta)) * r.powf(beta - 3.0)
    };
    let a = alpha;
    if a > 0.5 {
        riesz(a) - lambda * tr.space3(|rho| rho.powf(-a) / (lambda + rho.powf(a)), r, lambda.powf(1.0 / a))
    } else {
        // ρ^{1-α} λ/(λ+ρ^α) = λρ^{1-2α} - λ² ρ^{1-2α}/(λ+ρ^α)
        riesz(a) - lambda * riesz(2.0 * a)
            + lambda * lambda * tr.space3(|rho| rho.powf(-2.0 * a) / (lambda + rho.powf(a)), r, lambda.powf(1.0 / a))
    }
}

/// `p_t(r)` with argument checks.
pub fn heat_kernel(model: &LevyModel, t: f64, r: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(domain!("heat kernel needs t > 0, got {t}"));
    }
    if !(r >= 0.0) {
        return Err(domain!("heat kernel needs r >= 0, got {r}"));
    }
    let v = KernelEngine::new(model).heat(t, r);
    if !v.is_finite() {
        return Err(numeric!("heat kernel quadrature failed at t = {t}, r = {r}"));
    }
    Ok(v)
}

/// Closed-form α = 1 stable kernel `Γ((d+1)/2)/π^{(d+1)/2} · t/(t²+r²)^{(d+1)/2}`.
pub fn cauchy_oracle(d: u32, t: f64, r: f64) -> f64 {
    let h = 0.5 * (d as f64 + 1.0);
    gamma(h) / PI.powf(h) * t / (t * t + r * r).powf(h)
}

/// `g_λ(r)`, computed by the Fourier route and cross-checked against the
/// Laplace-in-time route to `1e-3` relative.
pub fn resolvent(model: &LevyModel, lambda: f64, r: f64) -> Result<f64> {
    if !(lambda > 0.0) || !(r > 0.0) {
        return Err(domain!("resolvent needs lambda > 0 and r > 0"));
    }
    let e = KernelEngine::new(model);
    let fourier = e.resolvent_fourier(lambda, r);
    let laplace = e.resolvent_laplace(lambda, r);
    if !((fourier - laplace).abs() <= 1e-3 * fourier.abs()) {
        return Err(numeric!("resolvent routes disagree at lambda = {lambda}, r = {r}: Fourier {fourier}, Laplace {laplace}"));
    }
    Ok(fourier)
}

/// Least-squares line through `(x, y)`: `(slope, intercept, rms residual)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let rms = (x.iter().zip(y).map(|(a, b)| (b - icept - slope * a).powi(2)).sum::<f64>() / n).sqrt();
    (slope, icept, rms)
}

/// Exponential decay rate of `g_λ` on `[r_lo, r_hi]`. In `d = 3` the
/// Yukawa factor `1/r` is removed first, so the fit is of `ln(r g_λ(r))`.
pub fn resolvent_decay_rate(model: &LevyModel, lambda: f64, r_lo: f64, r_hi: f64) -> f64 {
    let e = KernelEngine::new(model);
    let xs: Vec<f64> = (0..=30).map(|k| r_lo + (r_hi - r_lo) * k as f64 / 30.0).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&r| {
            let g = e.resolvent_fourier(lambda, r);
            match model.dim() {
                Dim::One => g.ln(),
                Dim::Three => (r * g).ln(),
            }
        })
        .collect();
    -linear_fit(&xs, &ys).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::bessel_k;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    /// `d = 3`, `α = 1` relativistic kernel in closed form.
    fn relativistic_oracle(m: f64, t: f64, r: f64) -> f64 {
        let s = r * r + t * t;
        t * m * m * (m * t).exp() * bessel_k(2.0, m * s.sqrt()) / (2.0 * PI * PI * s)
    }

    #[test]
    fn cauchy_examples() {
        let e = KernelEngine::new(&LevyModel::stable(3, 1.0).unwrap());
        assert!(rel(e.heat(1.0, 0.0), 1.0 / (PI * PI)) < 1e-12);
        assert!(rel(e.heat(2.0, 1.0), 2.0 / (25.0 * PI * PI)) < 1e-12);
        assert!(rel(cauchy_oracle(3, 1.0, 0.0), 1.0 / (PI * PI)) < 1e-15);
        assert!(rel(cauchy_oracle(3, 0.3, 0.7), 0.3f64.powi(-3) * cauchy_oracle(3, 1.0, 0.7 / 0.3)) < 1e-13);
        let mut worst = 0.0f64;
        for &t in &[0.1, 0.5, 1.0, 2.0] {
            for k in 0..=200 {
                let r = 10.0 * k as f64 / 200.0;
                worst = worst.max(rel(e.heat(t, r), cauchy_oracle(3, t, r)));
            }
        }
        assert!(worst < 1e-9, "{worst}");
        let e1 = KernelEngine::new(&LevyModel::stable(1, 0.5).unwrap());
        let _ = e1;
    }

    #[test]
    fn relativistic_closed_form() {
        let e = KernelEngine::new(&LevyModel::relativistic(3, 1.0, 1.0).unwrap());
        for &t in &[0.05, 0.5, 2.0] {
            for &r in &[0.0, 1e-3, 0.3, 2.0, 10.0, 30.0] {
                let want = relativistic_oracle(1.0, t, r.max(1e-300));
                let got = e.heat(t, r);
                let floor = 1e-14 * e.heat(t, 0.0);
                assert!((got - want).abs() < 1e-7 * want + floor, "t={t} r={r}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn line_primitive_and_derivative() {
        let e = KernelEngine::new(&LevyModel::stable(1, 1.0 - 1e-9).unwrap());
        // α → 1: Cauchy line kernel t/(π(t²+u²)), primitive atan(u/t)/π
        let _ = e;
        let tr = Transforms::new();
        let t = 0.7;
        for &u in &[1e-4, 0.1, 1.0, 13.0] {
            let f = tr.line_primitive(|rho| (-t * rho).exp(), u);
            assert!(rel(f, (u / t).atan() / PI) < 1e-12);
            let q1 = tr.line_derivative(|rho| (-t * rho).exp(), u);
            let want = -2.0 * t * u / (PI * (t * t + u * u).powi(2));
            assert!(rel(q1, want) < 1e-10, "u={u}: {q1} vs {want}");
        }
    }

    #[test]
    fn d3_derivative_matches_oracle() {
        let e = KernelEngine::new(&LevyModel::stable(3, 1.0).unwrap());
        let t = 0.5;
        for &r in &[1e-4, 0.01, 0.4, 3.0] {
            let want = -4.0 * t * r / (PI * PI * (t * t + r * r).powi(3));
            assert!(rel(e.heat_derivative(t, r), want) < 1e-9, "r={r}: {} vs {want}", e.heat_derivative(t, r));
        }
    }

    #[test]
    fn resolvent_routes_agree() {
        for m in [
            LevyModel::relativistic(3, 1.0, 1.0).unwrap(),
            LevyModel::stable(3, 1.0).unwrap(),
            LevyModel::relativistic(1, 0.5, 1.0).unwrap(),
            LevyModel::stable(3, 0.4).unwrap(),
        ] {
            for &lam in &[0.5, 1.0] {
                for &r in &[0.05, 1.0, 5.0] {
                    let e = KernelEngine::new(&m);
                    let f = e.resolvent_fourier(lam, r);
                    let l = e.resolvent_laplace(lam, r);
                    assert!(rel(f, l) < 1e-6, "{:?} lam={lam} r={r}: {f} vs {l}", m.kind());
                }
            }
        }
    }

    #[test]
    fn resolvent_decay_rate_matches_mass_gap() {
        let m = LevyModel::relativistic(3, 1.0, 1.0).unwrap();
        let rate = resolvent_decay_rate(&m, 0.5, 5.0, 20.0);
        assert!((rate - 3f64.sqrt() / 2.0).abs() < 0.05, "{rate}");
    }
}
