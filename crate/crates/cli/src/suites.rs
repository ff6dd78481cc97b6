//! Named audit suites run by `hardy-kernels audit`.

use std::str::FromStr;

use hardy_kernels_core::audit::{
    bound_state_envelope_audit, decay_audit, domination_audit, eigen_representation_audit, hardy_lower_audit,
    hardy_upper_audit, kernel_comparability_audit, subconvolution_audit, AuditReport, TableSettings,
};
use hardy_kernels_core::duhamel::{invariance_check, mass_bound_check};
use hardy_kernels_core::hardy::kappa_star;
use hardy_kernels_core::spectral::{default_ground_state_grid, ground_state_solve, herbst_check, GroundState};
use hardy_kernels_core::{HardyCoupling, LevyKind, LevyModel, RadialGrid, Result};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    All,
    Kernels,
    Duhamel,
    Spectral,
    Envelopes,
}

impl FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "all" => Suite::All,
            "kernels" => Suite::Kernels,
            "duhamel" => Suite::Duhamel,
            "spectral" => Suite::Spectral,
            "envelopes" => Suite::Envelopes,
            _ => return Err(format!("unknown suite {s:?} (expected all, kernels, duhamel, spectral or envelopes)")),
        })
    }
}

impl Suite {
    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

#[derive(Debug, Clone)]
pub struct SuiteSettings {
    /// Models for the kernel suite; the default catalog when empty.
    pub models: Vec<LevyModel>,
    /// Coupling for the Duhamel and spectral suites, as a fraction of `κ*`
    /// when not given explicitly.
    pub kappa: Option<f64>,
    pub radii: usize,
    pub tables: TableSettings,
    pub ground_state_radii: usize,
    pub horizon: f64,
}

impl Default for SuiteSettings {
    fn default() -> Self {
        Self { models: Vec::new(), kappa: None, radii: 128, tables: TableSettings::default(), ground_state_radii: 256, horizon: 1.0 }
    }
}

type Job<'a> = Box<dyn Fn() -> Result<Vec<AuditReport>> + Send + Sync + 'a>;

fn default_models() -> Vec<LevyModel> {
    vec![
        LevyModel::stable(1, 0.5).unwrap(),
        LevyModel::relativistic(1, 0.5, 1.0).unwrap(),
        LevyModel::stable(3, 1.0).unwrap(),
        LevyModel::relativistic(3, 1.0, 1.0).unwrap(),
    ]
}

fn kernel_jobs(s: &SuiteSettings) -> Vec<Job<'_>> {
    let models = if s.models.is_empty() { default_models() } else { s.models.clone() };
    let mut jobs: Vec<Job> = Vec::new();
    for m in models {
        let horizon = s.horizon;
        let radii = s.radii;
        let times: Vec<f64> = (0..8).map(|k| horizon * 10f64.powf(-2.0 + 2.0 * k as f64 / 7.0)).collect();
        let model = m.clone();
        jobs.push(Box::new(move || {
            let grid = RadialGrid::log(1e-2, 30.0, radii, times.clone())?;
            Ok(vec![kernel_comparability_audit(&model, horizon, &grid)?])
        }));
        if m.d() == 1 {
            let model = m.clone();
            jobs.push(Box::new(move || {
                let grid = RadialGrid::log(1e-2, 50.0, radii, vec![1.0])?;
                Ok(vec![subconvolution_audit(&model, &grid)?])
            }));
        }
        if !matches!(m.kind(), LevyKind::Stable) {
            jobs.push(Box::new(move || {
                let grid = RadialGrid::log(1e-3, 1e2, radii, vec![1.0])?;
                Ok(vec![m.check_profile_conditions(&grid)?])
            }));
        }
    }
    jobs
}

fn duhamel_jobs(s: &SuiteSettings) -> Vec<Job<'_>> {
    let alpha = 0.5;
    let coupling = move || -> Result<HardyCoupling> {
        let kappa = s.kappa.map_or_else(|| kappa_star(1, alpha).map(|k| 0.5 * k), Ok)?;
        HardyCoupling::from_kappa(1, alpha, kappa)
    };
    let t = s.horizon;
    let times = [0.25 * t, 0.5 * t, t];
    let set = s.tables;
    vec![
        Box::new(move || Ok(vec![domination_audit(alpha, 1, &coupling()?, &times, set)?])),
        Box::new(move || Ok(vec![hardy_upper_audit(alpha, 1, &LevyModel::stable(1, alpha)?, &coupling()?, t, set)?])),
        Box::new(move || Ok(vec![hardy_upper_audit(alpha, 1, &LevyModel::relativistic(1, alpha, 1.0)?, &coupling()?, t, set)?])),
        Box::new(move || Ok(vec![hardy_lower_audit(alpha, 1, &coupling()?, t, set)?])),
        Box::new(move || Ok(vec![invariance_check(alpha, 1, &HardyCoupling::from_delta(1, alpha, 0.125)?, 0.5 * t, set.n)?])),
        Box::new(move || Ok(vec![mass_bound_check(&LevyModel::relativistic(1, alpha, 1.0)?, &coupling()?, &times, set.n)?])),
    ]
}

fn solve_coulomb(s: &SuiteSettings) -> Result<GroundState> {
    let model = LevyModel::relativistic(3, 1.0, 1.0)?;
    let coupling = HardyCoupling::from_kappa(3, 1.0, s.kappa.unwrap_or(0.5))?;
    ground_state_solve(&model, &coupling, &default_ground_state_grid(s.ground_state_radii)?, 1e-8)
}

/// Runs `suite` on up to `workers` threads. Reports come back in a fixed
/// order regardless of scheduling.
pub fn run_suite(suite: Suite, settings: &SuiteSettings, workers: Option<usize>) -> Result<Vec<AuditReport>> {
    let wants_gs = suite.includes(Suite::Spectral) || suite.includes(Suite::Envelopes);
    let gs = if wants_gs { Some(solve_coulomb(settings)?) } else { None };
    let mut jobs: Vec<Job> = Vec::new();
    if suite.includes(Suite::Kernels) {
        jobs.extend(kernel_jobs(settings));
    }
    if suite.includes(Suite::Duhamel) {
        jobs.extend(duhamel_jobs(settings));
    }
    if let Some(g) = &gs {
        if suite.includes(Suite::Spectral) {
            jobs.push(Box::new(move || Ok(vec![herbst_check(g)?, decay_audit(g)?])));
            jobs.push(Box::new(move || Ok(vec![eigen_representation_audit(g, 0.5)?])));
        }
        if suite.includes(Suite::Envelopes) {
            jobs.push(Box::new(move || Ok(vec![bound_state_envelope_audit(g, 0.1)?])));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.unwrap_or(0)).build().expect("thread pool");
    let results: Vec<Result<Vec<AuditReport>>> = pool.install(|| jobs.par_iter().map(|j| j()).collect());
    let mut out = Vec::new();
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}
