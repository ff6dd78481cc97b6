//! Scaling, envelope and comparability properties of the free kernels.

use hardy_kernels_core::kernel::{heat_kernel, KernelEngine};
use hardy_kernels_core::LevyModel;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn stable_kernels_scale(
        d in prop::sample::select(vec![1u32, 3]),
        alpha in 0.3f64..0.95,
        t in 0.05f64..2.0,
        r in 1e-3f64..1e2,
    ) {
        let model = LevyModel::stable(d, alpha).unwrap();
        let lhs = heat_kernel(&model, t, r).unwrap();
        let rhs = t.powf(-(d as f64) / alpha) * heat_kernel(&model, 1.0, t.powf(-1.0 / alpha) * r).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-4 * rhs, "{lhs} {rhs}");
    }

    #[test]
    fn kernels_peak_at_the_origin(t in 0.05f64..2.0, r in 1e-3f64..1e2) {
        for model in [LevyModel::relativistic(1, 0.5, 1.0).unwrap(), LevyModel::stable(3, 1.0).unwrap()] {
            prop_assert!(heat_kernel(&model, t, r).unwrap() <= heat_kernel(&model, t, 0.0).unwrap());
        }
    }
}

fn envelope_band(model: &LevyModel, stable_nu: bool) -> (f64, f64) {
    let eng = KernelEngine::new(model);
    let d = model.d() as f64;
    let a = model.alpha();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for t in [0.02f64, 0.1, 0.5, 1.0] {
        for k in 0..=40 {
            let r = 1e-3 * 10f64.powf(k as f64 * 0.1);
            let nu = if stable_nu { model.stable_density(r) } else { model.density(r).unwrap() };
            let env = t.powf(-d / a).min(t * nu);
            let ratio = eng.heat(t, r) / env;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
    }
    (lo, hi)
}

#[test]
fn stable_envelope_has_finite_constants() {
    for (d, a) in [(1, 0.5), (3, 1.0), (3, 1.5)] {
        let model = LevyModel::stable(d, a).unwrap();
        let (lo, hi) = envelope_band(&model, true);
        let c = hi.max(1.0 / lo);
        assert!(lo > 0.0 && c.is_finite() && c < 1e3, "d={d} α={a}: [{lo}, {hi}]");
    }
}

#[test]
fn relativistic_kernel_is_comparable_to_its_envelope() {
    let model = LevyModel::relativistic(1, 0.5, 1.0).unwrap();
    let (lo, hi) = envelope_band(&model, false);
    let c = hi.max(1.0 / lo);
    assert!(lo > 0.0 && c.is_finite() && c < 1e3, "[{lo}, {hi}]");
}

#[test]
fn nearby_points_have_comparable_kernels() {
    let model = LevyModel::relativistic(1, 0.5, 1.0).unwrap();
    let eng = KernelEngine::new(&model);
    let mut c = f64::INFINITY;
    for t in [0.05f64, 0.2, 1.0] {
        let s = t.powf(1.0 / model.alpha());
        for k in 0..=30 {
            let r1 = 1e-3 * 10f64.powf(k as f64 * 0.1);
            let r2 = r1 + s;
            c = c.min(eng.heat(t, r2) / eng.heat(t, r1));
        }
    }
    assert!(c > 0.0 && c < 1.0, "{c}");
}
