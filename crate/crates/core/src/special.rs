//! Special functions: Gamma (Lanczos) and the modified Bessel function `K_μ`.

use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::quad::GaussLegendre;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum(x: f64) -> f64 {
    let mut a = LANCZOS[0];
    for (k, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + k as f64);
    }
    a
}

/// The Gamma function for real arguments (poles return ±∞/NaN).
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let s = (PI * x).sin();
        if s == 0.0 {
            return f64::NAN;
        }
        return PI / (s * gamma(1.0 - x));
    }
    if x > 171.7 {
        return f64::INFINITY;
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * lanczos_sum(z)
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln()
}

/// Above this argument `K_μ` switches from quadrature to its Hankel expansion.
pub const BESSEL_K_ASYMPTOTIC_FROM: f64 = 30.0;

/// Exponentially scaled modified Bessel function of the second kind,
/// `e^r K_μ(r)`, for `μ ≥ 0`, `r > 0`.
///
/// Moderate arguments use `K_μ(r) = ∫₀^∞ cosh(μs) e^{-r cosh s} ds`, which is
/// the integral representation `½ (r/2)^μ ∫ u^{-μ-1} e^{-u - r²/4u} du`
/// after the substitution `u = (r/2) e^s`. Large arguments use the Hankel
/// asymptotic series summed to its smallest term.
pub fn bessel_k_scaled(mu: f64, r: f64) -> f64 {
    debug_assert!(r > 0.0);
    if r > BESSEL_K_ASYMPTOTIC_FROM {
        bessel_k_scaled_asymptotic(mu, r)
    } else {
        bessel_k_scaled_quadrature(mu, r)
    }
}

/// `K_μ(r)`; underflows to zero for very large `r`.
pub fn bessel_k(mu: f64, r: f64) -> f64 {
    bessel_k_scaled(mu, r) * (-r).exp()
}

pub(crate) fn bessel_k_scaled_asymptotic(mu: f64, r: f64) -> f64 {
    let four_mu2 = 4.0 * mu * mu;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term *= (four_mu2 - odd * odd) / (k as f64 * 8.0 * r);
        if term.abs() >= prev {
            break;
        }
        sum += term;
        prev = term.abs();
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    (PI / (2.0 * r)).sqrt() * sum
}

pub(crate) fn bessel_k_scaled_quadrature(mu: f64, r: f64) -> f64 {
    // log of the scaled integrand: ln cosh(μs) - r (cosh s - 1)
    let log_f = |s: f64| -> f64 {
        let c = if mu * s > 30.0 {
            mu * s - core::f64::consts::LN_2
        } else {
            (mu * s).cosh().ln()
        };
        c - r * (s.cosh() - 1.0)
    };
    // peak at sinh s = μ/r
    let s_peak = (mu / r).asinh();
    let peak = log_f(s_peak);
    let mut s_max = s_peak + 1.0;
    while log_f(s_max) > peak - 45.0 {
        s_max += 0.5;
    }
    let gl = GaussLegendre::new(20);
    let integrate = |panels: usize| -> f64 {
        let w = s_max / panels as f64;
        (0..panels)
            .map(|p| {
                let a = p as f64 * w;
                gl.integrate(a, a + w, |s| log_f(s).exp())
            })
            .sum()
    };
    let mut panels = 8;
    let mut prev = integrate(panels);
    loop {
        panels *= 2;
        let next = integrate(panels);
        if (next - prev).abs() <= 1e-15 * next.abs() || panels >= 1024 {
            return next;
        }
        prev = next;
    }
}

/// `K_{1/2}(r) = √(π/2r) e^{-r}`; closed form used by tests.
pub fn bessel_k_half(r: f64) -> f64 {
    (PI / (2.0 * r)).sqrt() * (-r).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_reference_values() {
        let sqrt_pi = PI.sqrt();
        assert!((gamma(0.5) - sqrt_pi).abs() < 1e-13);
        assert!((gamma(1.0) - 1.0).abs() < 1e-13);
        assert!((gamma(1.5) - sqrt_pi / 2.0).abs() < 1e-13);
        assert!((gamma(5.0) - 24.0).abs() < 1e-11);
        // Γ(1/4) = 3.625609908221908...
        assert!((gamma(0.25) - 3.625_609_908_221_908).abs() < 1e-13);
        assert!((gamma(-0.5) + 2.0 * sqrt_pi).abs() < 1e-13);
        assert!(gamma(0.0).is_nan() || gamma(0.0).is_infinite());
    }

    #[test]
    fn ln_gamma_matches_gamma() {
        for &x in &[0.1, 0.7, 1.0, 2.5, 7.3, 30.0] {
            assert!((ln_gamma(x) - gamma(x).ln()).abs() < 1e-12 * (1.0 + gamma(x).ln().abs()));
        }
        // ln Γ(100) = 359.1342053695754
        assert!((ln_gamma(100.0) - 359.134_205_369_575_4).abs() < 1e-10);
    }

    #[test]
    fn bessel_half_order_closed_form() {
        for &r in &[1e-3, 0.1, 1.0, 5.0, 29.0, 31.0, 80.0] {
            let k = bessel_k(0.5, r);
            let exact = bessel_k_half(r);
            assert!((k - exact).abs() <= 1e-12 * exact, "r={r}: {k} vs {exact}");
        }
    }

    #[test]
    fn bessel_reference_values() {
        // K_0(1) = 0.42102443824070834, K_1(1) = 0.6019072301972346,
        // K_2(2) = 0.2537597545660559
        assert!((bessel_k(0.0, 1.0) - 0.421_024_438_240_708_34).abs() < 1e-14);
        assert!((bessel_k(1.0, 1.0) - 0.601_907_230_197_234_6).abs() < 1e-14);
        assert!((bessel_k(2.0, 2.0) - 0.253_759_754_566_055_9).abs() < 1e-14);
    }

    #[test]
    fn bessel_crossover_is_continuous() {
        for &mu in &[0.0, 0.75, 1.0, 2.0, 2.5] {
            for &r in &[30.0, 35.0, 50.0] {
                let q = bessel_k_scaled_quadrature(mu, r);
                let a = bessel_k_scaled_asymptotic(mu, r);
                assert!((q - a).abs() <= 1e-8 * q, "mu={mu} r={r}: {q} vs {a}");
            }
        }
    }

    #[test]
    fn bessel_small_argument_limit() {
        // K_μ(r) ~ Γ(μ)/2 (2/r)^μ
        let mu = 2.0;
        let r = 1e-4;
        let lead = gamma(mu) / 2.0 * (2.0 / r).powf(mu);
        assert!((bessel_k(mu, r) / lead - 1.0).abs() < 1e-7);
    }
}
