//! A passing lower kernel bound must come with a ground state that is at
//! least as singular as `|x|^{-δ}` near the origin.

use hardy_kernels_core::audit::{hardy_lower_audit, TableSettings};
use hardy_kernels_core::spectral::{decay_exponent_fits, default_ground_state_grid, ground_state_solve};
use hardy_kernels_core::{HardyCoupling, LevyModel};

#[test]
fn lower_bound_implies_the_origin_exponent() {
    let lower = hardy_lower_audit(0.5, 1, &HardyCoupling::from_delta(1, 0.5, 0.125).unwrap(), 1.0, TableSettings { n: 48, steps: 8 }).unwrap();
    let model = LevyModel::relativistic(3, 1.0, 1.0).unwrap();
    for kappa in [0.35, 0.5] {
        let c = HardyCoupling::from_kappa(3, 1.0, kappa).unwrap();
        let gs = ground_state_solve(&model, &c, &default_ground_state_grid(256).unwrap(), 1e-8).unwrap();
        let fit = decay_exponent_fits(&gs).unwrap();
        if lower.passed() {
            assert!(fit.delta_hat >= c.delta - 0.05, "kappa {kappa}: {} < {} - 0.05", fit.delta_hat, c.delta);
        }
    }
    assert!(lower.passed(), "{lower:?}");
}
