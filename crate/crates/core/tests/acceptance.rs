//! Acceptance criteria, one test each. Every test prints a single
//! `PASS`/`FAIL` line with the measured quantities and then asserts.

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use hardy_kernels_core::audit::{domination_audit, hardy_upper_audit, TableSettings};
use hardy_kernels_core::duhamel::{
    duhamel_residual, invariance_check, perturbed_kernel_1d, ApplyOptions, RadialFunction, Side, SolveMethod,
};
use hardy_kernels_core::grid::log_space;
use hardy_kernels_core::hardy::{delta_of_kappa, kappa_of_delta, kappa_star};
use hardy_kernels_core::identities::{chapman_kolmogorov_residual, subordination_relation_check};
use hardy_kernels_core::kernel::{cauchy_oracle, heat_kernel};
use hardy_kernels_core::spectral::{
    decay_exponent_fits, default_ground_state_grid, eigen_representation_residual_with, form_identity_residual,
    ground_state_form_residual, ground_state_solve, hardy_ratio, GroundState,
};
use hardy_kernels_core::table::KernelTable;
use hardy_kernels_core::{Dim, HardyCoupling, LevyModel, RadialGrid};

fn report(id: u32, name: &str, ok: bool, started: Instant, details: String) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{verdict} criterion {id:>2} {name}: {details} [{:.1} s]", started.elapsed().as_secs_f64());
    assert!(ok, "criterion {id} ({name}) failed: {details}");
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn coulomb(kappa: f64, n: usize) -> GroundState {
    let model = LevyModel::relativistic(3, 1.0, 1.0).unwrap();
    let c = HardyCoupling::from_kappa(3, 1.0, kappa).unwrap();
    ground_state_solve(&model, &c, &default_ground_state_grid(n).unwrap(), 1e-8).unwrap()
}

#[test]
fn criterion_01_coupling_map() {
    let t0 = Instant::now();
    let mut closed = 0.0f64;
    let mut roundtrip = 0.0f64;
    for k in 1..=99 {
        let delta = k as f64 / 100.0;
        let kappa = kappa_of_delta(3, 1.0, delta).unwrap();
        closed = closed.max((kappa - (1.0 - delta) * (0.5 * PI * delta).tan()).abs());
        roundtrip = roundtrip.max((delta_of_kappa(3, 1.0, kappa).unwrap() - delta).abs());
    }
    let star = (kappa_star(3, 1.0).unwrap() - 2.0 / PI).abs();
    let ok = closed <= 1e-12 && star <= 1e-12 && roundtrip <= 1e-8 && t0.elapsed().as_secs_f64() < 1.0;
    report(1, "coupling map", ok, t0, format!("closed-form {closed:.1e}, kappa* {star:.1e}, roundtrip {roundtrip:.1e}"));
}

#[test]
fn criterion_02_cauchy_oracle() {
    let t0 = Instant::now();
    let model = LevyModel::stable(3, 1.0).unwrap();
    let mut worst = 0.0f64;
    for t in [0.1, 0.5, 1.0, 2.0] {
        for k in 0..=200 {
            let r = 0.05 * k as f64;
            worst = worst.max(rel(heat_kernel(&model, t, r).unwrap(), cauchy_oracle(3, t, r)));
        }
    }
    report(2, "Cauchy oracle", worst <= 1e-5, t0, format!("max relative error {worst:.2e}"));
}

#[test]
fn criterion_03_kernel_laws() {
    let t0 = Instant::now();
    let grid = RadialGrid::log(1e-3, 1e2, 256, vec![0.05, 0.25, 0.5, 1.0, 2.0]).unwrap();
    let mut mass = 0.0f64;
    for model in [
        LevyModel::stable(1, 0.5).unwrap(),
        LevyModel::relativistic(1, 0.5, 1.0).unwrap(),
        LevyModel::stable(3, 1.0).unwrap(),
        LevyModel::relativistic(3, 1.0, 1.0).unwrap(),
    ] {
        let tab = KernelTable::heat(&model, &grid).unwrap();
        for k in 0..tab.len() {
            mass = mass.max((tab.mass(k).unwrap() - 1.0).abs());
        }
    }
    let rel1 = KernelTable::heat(&LevyModel::relativistic(1, 0.5, 1.0).unwrap(), &grid).unwrap();
    let ck_rel = chapman_kolmogorov_residual(&rel1, 0.25, 0.25).unwrap();
    let st3 = KernelTable::heat(&LevyModel::stable(3, 1.0).unwrap(), &grid).unwrap();
    let ck_st = chapman_kolmogorov_residual(&st3, 0.5, 0.5).unwrap();
    let mut scaling = 0.0f64;
    for (d, a) in [(1, 0.5), (1, 0.9), (3, 0.5), (3, 1.0), (3, 1.5)] {
        let model = LevyModel::stable(d, a).unwrap();
        for t in [0.1, 0.7, 2.0] {
            for r in log_space(1e-3, 1e2, 21) {
                let lhs = heat_kernel(&model, t, r).unwrap();
                let rhs = t.powf(-(d as f64) / a) * heat_kernel(&model, 1.0, t.powf(-1.0 / a) * r).unwrap();
                scaling = scaling.max(rel(lhs, rhs));
            }
        }
    }
    let ok = mass <= 1e-6 && ck_rel <= 1e-3 && ck_st <= 1e-4 && scaling <= 1e-4;
    report(
        3,
        "kernel laws",
        ok,
        t0,
        format!("mass {mass:.1e}, CK relativistic 1d {ck_rel:.1e}, CK stable 3d {ck_st:.1e}, scaling {scaling:.1e}"),
    );
}

#[test]
fn criterion_04_subordination_and_sigma() {
    let t0 = Instant::now();
    let model = LevyModel::relativistic(1, 0.5, 1.0).unwrap();
    let grid = RadialGrid::log(1e-3, 1e2, 256, vec![0.5]).unwrap();
    let sub = subordination_relation_check(&model, 0.5, &grid, 8).unwrap();
    let residual = sub.residuals["residual"];
    let coupling = HardyCoupling::from_kappa(1, 0.5, 0.5 * kappa_star(1, 0.5).unwrap()).unwrap();
    let dom = domination_audit(0.5, 1, &coupling, &[0.25, 0.5, 1.0], TableSettings { n: 128, steps: 16 }).unwrap();
    let violations = sub.residuals["domination_violations"] + dom.residuals["violations"] + dom.residuals["violations_refined"];
    let mut sigma = 0.0f64;
    for m in [LevyModel::relativistic(1, 0.5, 1.0).unwrap(), LevyModel::relativistic(3, 1.0, 1.0).unwrap()] {
        sigma = sigma.max((m.sigma_mass_numeric().unwrap() - 1.0).abs());
    }
    let mut tempered = 0.0f64;
    for m in [LevyModel::tempered(1, 0.5, 1.0, 1.0).unwrap(), LevyModel::tempered(3, 1.0, 2.0, 2.0).unwrap()] {
        tempered = tempered.max((m.sigma_mass_numeric().unwrap() - m.sigma_mass()).abs());
    }
    let ok = residual <= 1e-3 && violations == 0.0 && sigma <= 1e-4 && tempered <= 1e-6;
    report(
        4,
        "subordination and sigma",
        ok,
        t0,
        format!("residual {residual:.1e}, domination violations {violations}, |sigma| error {sigma:.1e}, tempered {tempered:.1e}"),
    );
}

#[test]
fn criterion_05_duhamel() {
    let t0 = Instant::now();
    let tol = 1e-3;
    let model = LevyModel::stable(1, 0.5).unwrap();
    let radii = log_space(1e-3, 1e2, 96);
    let series = SolveMethod::Series { tol, max_terms: 400 };

    let free = perturbed_kernel_1d(&model, &HardyCoupling::zero(1, 0.5).unwrap(), &radii, 0.5, 8, series).unwrap();
    let degenerate = (0..free.len())
        .all(|k| [Side::Same, Side::Opposite].iter().all(|&s| free.density(k, s) == free.free_density(k, s)));

    let c = HardyCoupling::from_delta(1, 0.5, 0.125).unwrap();
    let a = perturbed_kernel_1d(&model, &c, &radii, 0.5, 8, series).unwrap();
    let b = perturbed_kernel_1d(&model, &c, &radii, 0.5, 8, SolveMethod::FixedPoint).unwrap();
    let mut below = 0usize;
    let mut cross = 0.0f64;
    for k in 0..a.len() {
        for s in [Side::Same, Side::Opposite] {
            let (p, f, q) = (a.density(k, s), a.free_density(k, s), b.density(k, s));
            for ((x, y), z) in p.as_slice().iter().zip(f.as_slice()).zip(q.as_slice()) {
                below += (x < y) as usize;
                cross = cross.max((x - z).abs() / x);
            }
        }
    }
    let residual = duhamel_residual(&a, 0.5, 16).unwrap();
    let inv = invariance_check(0.5, 1, &c, 0.5, 128).unwrap();
    let inv_crit = invariance_check(0.5, 1, &HardyCoupling::critical(1, 0.5).unwrap(), 0.5, 128).unwrap();
    let (w, wc) = (inv.residuals["max_deviation"], inv_crit.residuals["max_deviation"]);
    let ok = degenerate && below == 0 && residual <= 3.0 * tol && cross <= 3.0 * tol && w <= 0.02 && wc <= 0.05;
    report(
        5,
        "Duhamel suite",
        ok,
        t0,
        format!(
            "kappa=0 exact {degenerate}, p~<p cells {below}, residual {residual:.1e}, series/Picard {cross:.1e}, invariance {w:.1e} / critical {wc:.1e}"
        ),
    );
}

#[test]
fn criterion_06_heat_kernel_upper_audit() {
    let t0 = Instant::now();
    let ks = kappa_star(1, 0.5).unwrap();
    let settings = TableSettings { n: 256, steps: 16 };
    let mut lines = Vec::new();
    let mut ok = true;
    for model in [LevyModel::stable(1, 0.5).unwrap(), LevyModel::relativistic(1, 0.5, 1.0).unwrap()] {
        for kappa in [0.5 * ks, ks] {
            let c = HardyCoupling::from_kappa(1, 0.5, kappa).unwrap();
            let rep = hardy_upper_audit(0.5, 1, &model, &c, 1.0, settings).unwrap();
            let (a, b) = (rep.c_upper.unwrap(), rep.residuals["c_upper_refined"]);
            ok &= a.is_finite() && rel(b, a) < 0.25;
            lines.push(format!("{:?} kappa={kappa:.3}: {a:.3} -> {b:.3}", model.kind()));
        }
    }
    report(6, "heat-kernel upper audit", ok, t0, lines.join("; "));
}

#[test]
fn criterion_07_ground_state() {
    let t0 = Instant::now();
    let gs = coulomb(0.5, 512);
    let em = gs.shifted_energy().unwrap();
    let herbst = (0.61899..1.0).contains(&em);
    let mut curve = gs.mu_curve.clone();
    curve.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let decreasing = curve.windows(2).all(|w| w[1].1 < w[0].1);
    let positive = gs.phi.values.iter().all(|&v| v > 0.0);
    let norm = gs.phi.norm2(Dim::Three);
    let doubled = coulomb(0.5, 1024);
    let drift = rel(doubled.lambda_star, gs.lambda_star);
    let ok = herbst && decreasing && positive && (norm - 1.0).abs() <= 1e-6 && drift <= 0.01;
    report(
        7,
        "ground state",
        ok,
        t0,
        format!("E_m {em:.6}, mu decreasing {decreasing}, phi > 0 {positive}, norm {norm:.9}, lambda* drift {drift:.1e}"),
    );
}

#[test]
fn criterion_08_decay_fits() {
    let t0 = Instant::now();
    let states: Vec<GroundState> = [0.2, 0.35, 0.5].iter().map(|&k| coulomb(k, 512)).collect();
    let fits: Vec<_> = states.iter().map(|g| decay_exponent_fits(g).unwrap()).collect();
    let gs = &states[2];
    let em = gs.shifted_energy().unwrap();
    let rate = (1.0 - em * em).sqrt();
    let f = &fits[2];
    let monotone = fits.windows(2).all(|w| w[1].delta_hat > w[0].delta_hat);
    let ok = (f.delta_hat - 0.5).abs() <= 0.05 && (f.rate_hat - rate).abs() <= 0.1 && monotone;
    let deltas: Vec<String> = fits.iter().map(|f| format!("{:.3}", f.delta_hat)).collect();
    report(
        8,
        "decay fits",
        ok,
        t0,
        format!("delta_hat {:.4}, rate_hat {:.4} vs {rate:.4}, delta_hat over kappa [{}]", f.delta_hat, f.rate_hat, deltas.join(", ")),
    );
}

#[test]
fn criterion_09_eigen_representation() {
    let t0 = Instant::now();
    let gs = coulomb(0.5, 256);
    let run = |terms: usize| {
        let opts = ApplyOptions { steps: 16, method: SolveMethod::Series { tol: 1e-12, max_terms: terms } };
        eigen_representation_residual_with(&gs, 0.5, opts).unwrap()
    };
    let (r50, r100, r200) = (run(50), run(100), run(200));
    let plateau = (r200 - r100).abs() <= 1e-3 && (r100 - r50).abs() <= 1e-2;
    let ok = r200 <= 0.05 && plateau;
    report(9, "eigen representation", ok, t0, format!("residual {r50:.2e} / {r100:.2e} / {r200:.2e} at 50 / 100 / 200 terms"));
}

#[test]
fn criterion_10_form_identities() {
    let t0 = Instant::now();
    let radii = log_space(1e-3, 12.0, 400);
    let bump = RadialFunction::from_fn(&radii, |r| (-r * r).exp(), None).unwrap();
    let identity = form_identity_residual(&LevyModel::relativistic(1, 0.5, 1.0).unwrap(), &bump).unwrap();
    let wide = log_space(1e-3, 60.0, 500);
    let family: Vec<RadialFunction> = vec![
        RadialFunction::from_fn(&radii, |r| (-r * r).exp(), None).unwrap(),
        RadialFunction::from_fn(&radii, |r| (-4.0 * r * r).exp(), None).unwrap(),
        RadialFunction::from_fn(&radii, |r| r * r * (-r * r).exp(), None).unwrap(),
        RadialFunction::from_fn(&wide, |r| (-r).exp(), None).unwrap(),
        RadialFunction::from_fn(&radii, |r| (1.0 - r * r / 4.0).max(0.0).powi(3), None).unwrap(),
    ];
    let ks = kappa_star(3, 1.0).unwrap();
    let worst = family.iter().map(|f| hardy_ratio(1.0, 3, f).unwrap()).fold(0.0f64, f64::max);
    let gs = coulomb(0.5, 512);
    let form = ground_state_form_residual(&gs).unwrap();
    let ok = identity <= 0.02 && worst * ks <= 1.01 && form <= 0.05;
    report(
        10,
        "form identities",
        ok,
        t0,
        format!("identity {identity:.1e}, max Hardy ratio x kappa* {:.4}, ground-state form {form:.1e}", worst * ks),
    );
}
