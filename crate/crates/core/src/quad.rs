//! Quadrature rules.
//!
//! * [`GaussLegendre`]: fixed-order rules on finite panels.
//! * [`exp_sinh`] / [`tanh_sinh`]: double exponential rules for half-infinite
//!   and finite intervals with endpoint singularities.
//! * [`FourierRule`]: the Ooura–Mori double exponential rule for
//!   `∫₀^∞ f(x) sin(ωx) dx` and `∫₀^∞ f(x) cos(ωx) dx`. Nodes approach the
//!   zeros of the oscillatory factor double exponentially, so slowly decaying
//!   `f` (algebraic or not decaying at all) is handled without truncation.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// `∫₀^∞ f(x) dx` by the exp-sinh rule `x = scale·exp(π/2 sinh t)`.
///
/// Step halving stops when successive estimates agree to `rel_tol`.
/// Returns the estimate and the last difference.
pub fn exp_sinh(mut f: impl FnMut(f64) -> f64, scale: f64, rel_tol: f64) -> (f64, f64) {
    let half_pi = 0.5 * PI;
    let mut eval = |t: f64| -> f64 {
        let e = (half_pi * t.sinh()).exp();
        let x = scale * e;
        if x == 0.0 || !x.is_finite() {
            return 0.0;
        }
        let w = scale * half_pi * t.cosh() * e;
        let v = f(x);
        if v == 0.0 {
            0.0
        } else {
            v * w
        }
    };
    let t_max = 4.5;
    let mut h = 0.5;
    let mut sum = eval(0.0);
    let mut k = 1;
    while (k as f64) * h <= t_max {
        let t = k as f64 * h;
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut estimate = sum * h;
    let mut diff = f64::INFINITY;
    for _ in 0..8 {
        h *= 0.5;
        let mut k = 1;
        while (k as f64) * h <= t_max {
            let t = k as f64 * h;
            sum += eval(t) + eval(-t);
            k += 2;
        }
        let next = sum * h;
        diff = (next - estimate).abs();
        estimate = next;
        if diff <= rel_tol * estimate.abs() {
            break;
        }
    }
    (estimate, diff)
}

/// `∫_a^b f(x) dx` by the tanh-sinh rule; tolerant of endpoint singularities.
pub fn tanh_sinh(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> (f64, f64) {
    let half_pi = 0.5 * PI;
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let mut eval = |t: f64| -> f64 {
        let u = half_pi * t.sinh();
        let th = u.tanh();
        let sech2 = 1.0 / u.cosh().powi(2);
        let w = r * half_pi * t.cosh() * sech2;
        if w == 0.0 {
            return 0.0;
        }
        // distance to the nearer endpoint, computed without cancellation
        let dist = r * (1.0 / (u.exp() * u.cosh()));
        let x = if t > 0.0 { b - dist } else if t < 0.0 { a + r * (1.0 / ((-u).exp() * u.cosh())) } else { c + r * th };
        if x <= a || x >= b {
            return 0.0;
        }
        f(x) * w
    };
    let t_max = 4.5;
    let mut h = 0.5;
    let mut sum = eval(0.0);
    let mut k = 1;
    while (k as f64) * h <= t_max {
        let t = k as f64 * h;
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut estimate = sum * h;
    let mut diff = f64::INFINITY;
    for _ in 0..8 {
        h *= 0.5;
        let mut k = 1;
        while (k as f64) * h <= t_max {
            let t = k as f64 * h;
            sum += eval(t) + eval(-t);
            k += 2;
        }
        let next = sum * h;
        diff = (next - estimate).abs();
        estimate = next;
        if diff <= rel_tol * estimate.abs() {
            break;
        }
    }
    (estimate, diff)
}

/// Which oscillatory factor a [`FourierRule`] integrates against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Oscillation {
    Sine,
    Cosine,
}

/// Ooura–Mori rule for `∫₀^∞ f(x) osc(ωx) dx`.
///
/// With `M = π/h` the substitution `x = M φ(t)/ω`,
/// `φ(t) = t / (1 - exp(-2t - a(1 - e^{-t}) - b(e^t - 1)))`, puts the nodes on
/// the zeros of the oscillatory factor for large `t`. The rule stores the
/// ω-independent pieces `x̂ₙ = Mφ(tₙ)` and `ŵₙ = hMφ'(tₙ)·osc(Mφ(tₙ))`, so
/// `∫ ≈ ω⁻¹ Σ f(x̂ₙ/ω) ŵₙ`.
#[derive(Debug, Clone)]
pub struct FourierRule {
    sine: Vec<(f64, f64)>,
    cosine: Vec<(f64, f64)>,
}

impl Default for FourierRule {
    fn default() -> Self {
        Self::new(0.04)
    }
}

impl FourierRule {
    pub fn new(h: f64) -> Self {
        let m = PI / h;
        let b = 0.25;
        let a = b / (1.0 + m * (1.0 + m).ln() / (4.0 * PI)).sqrt();
        let phi = |t: f64| -> (f64, f64) {
            if t.abs() < 1e-8 {
                let s = 2.0 + a + b;
                let s2 = -a + b;
                return (1.0 / s, (s * s - s2) / (2.0 * s * s));
            }
            let u = 2.0 * t + a * (1.0 - (-t).exp()) + b * (t.exp() - 1.0);
            let du = 2.0 + a * (-t).exp() + b * t.exp();
            if u < -700.0 {
                return (0.0, 0.0);
            }
            let e = (-u).exp();
            let one_minus = -(-u).exp_m1();
            let p = t / one_minus;
            let dp = (1.0 - e - t * du * e) / (one_minus * one_minus);
            (p, dp)
        };
        let build = |shift: f64, osc: Oscillation| -> Vec<(f64, f64)> {
            let mut out = Vec::new();
            let n_lo = -((7.5 / h) as i64);
            let n_hi = (6.0 / h) as i64;
            for n in n_lo..=n_hi {
                let t = (n as f64 - shift) * h;
                let (p, dp) = phi(t);
                if p <= 0.0 || dp <= 0.0 || !dp.is_finite() {
                    continue;
                }
                let xh = m * p;
                let o = match osc {
                    Oscillation::Sine => xh.sin(),
                    Oscillation::Cosine => xh.cos(),
                };
                let w = h * m * dp * o;
                if w.abs() < 1e-30 && t > 0.0 {
                    continue;
                }
                if dp * h * m < 1e-300 {
                    continue;
                }
                out.push((xh, w));
            }
            out
        };
        Self {
            sine: build(0.0, Oscillation::Sine),
            cosine: build(0.5, Oscillation::Cosine),
        }
    }

    /// `∫₀^∞ f(x) sin(ωx) dx` (or cosine), `ω > 0`.
    pub fn integrate(&self, osc: Oscillation, omega: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let nodes = match osc {
            Oscillation::Sine => &self.sine,
            Oscillation::Cosine => &self.cosine,
        };
        let inv = 1.0 / omega;
        let mut acc = 0.0;
        for &(xh, w) in nodes {
            let v = f(xh * inv);
            if v != 0.0 {
                acc += v * w;
            }
        }
        acc * inv
    }

    pub fn node_count(&self) -> usize {
        self.sine.len() + self.cosine.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_polynomials_exact() {
        let gl = GaussLegendre::new(8);
        let v = gl.integrate(0.0, 2.0, |x| x.powi(15) + 3.0 * x.powi(4));
        let exact = 2f64.powi(16) / 16.0 + 3.0 * 32.0 / 5.0;
        assert!((v - exact).abs() < 1e-10 * exact);
        let gl = GaussLegendre::new(64);
        let v = gl.integrate(0.0, PI, |x| x.sin());
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn exp_sinh_algebraic_and_exponential() {
        let (v, _) = exp_sinh(|x| (-x).exp(), 1.0, 1e-14);
        assert!((v - 1.0).abs() < 1e-13);
        let (v, _) = exp_sinh(|x| 1.0 / (1.0 + x * x), 1.0, 1e-14);
        assert!((v - PI / 2.0).abs() < 1e-12);
        // ∫ x^{-1/2} e^{-x} = √π
        let (v, _) = exp_sinh(|x| (-x).exp() / x.sqrt(), 1.0, 1e-14);
        assert!((v - PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn tanh_sinh_endpoint_singularity() {
        let (v, _) = tanh_sinh(|x| 1.0 / x.sqrt(), 0.0, 1.0, 1e-14);
        assert!((v - 2.0).abs() < 1e-12);
        let (v, _) = tanh_sinh(|x| (1.0 - x).ln(), 0.0, 1.0, 1e-14);
        assert!((v + 1.0).abs() < 1e-12);
    }

    #[test]
    fn ooura_mori_closed_forms() {
        let rule = FourierRule::default();
        // ∫ e^{-x} cos(ωx) = 1/(1+ω²)
        for &w in &[1e-3, 0.1, 1.0, 10.0, 300.0] {
            let v = rule.integrate(Oscillation::Cosine, w, |x| (-x).exp());
            let exact = 1.0 / (1.0 + w * w);
            assert!((v - exact).abs() < 1e-14, "w={w}: {v} vs {exact}");
            // ∫ x e^{-x} sin(ωx) = 2ω/(1+ω²)²
            let v = rule.integrate(Oscillation::Sine, w, |x| x * (-x).exp());
            let exact = 2.0 * w / (1.0 + w * w).powi(2);
            assert!((v - exact).abs() < 1e-14, "w={w}: {v} vs {exact}");
        }
        // slowly decaying: ∫ sin(x)/x = π/2, ∫ cos(ωx)/√x = √(π/2ω)
        let v = rule.integrate(Oscillation::Sine, 1.0, |x| 1.0 / x);
        assert!((v - PI / 2.0).abs() < 1e-12);
        let v = rule.integrate(Oscillation::Cosine, 2.0, |x| 1.0 / x.sqrt());
        assert!((v - (PI / 4.0).sqrt()).abs() < 1e-11);
    }
}
