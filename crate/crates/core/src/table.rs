//! Tabulated kernels on a radial grid.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[allow(unused_imports)]
use num_traits::Float;

use crate::cells::cell_averages;
use crate::duhamel::{PerturbedKernelTable, Side};
use crate::error::{domain, numeric};
use crate::grid::{Dim, Mesh, RadialGrid};
use crate::hardy::HardyCoupling;
use crate::kernel::KernelEngine;
use crate::levy::LevyModel;
use crate::quad::Oscillation;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableKind {
    Heat,
    StableHeat,
    Resolvent,
    Perturbed,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TableMeta {
    pub quadrature: String,
    /// Build stamp supplied by the caller; the core never reads a clock.
    pub built: Option<String>,
}

/// Kernel values on a grid of radii and times (or spectral parameters).
///
/// Radial kinds store one value per `(time, radius)`. Perturbed tables store
/// `2N` values per `(time, x)`: `p̃(t, x, y)` for `y = r_1 … r_N`, then for
/// `y = -r_1 … -r_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    pub kind: TableKind,
    pub model: LevyModel,
    pub coupling: Option<HardyCoupling>,
    pub radii: Vec<f64>,
    /// Times, or `λ` values for resolvent tables.
    pub times: Vec<f64>,
    pub columns: usize,
    pub values: Vec<f64>,
    /// Value at `r = 0` per time, for free heat kernels.
    pub origin: Option<Vec<f64>>,
    pub meta: TableMeta,
}

const HEAT_QUADRATURE: &str = "Ooura-Mori Fourier rule, h = 0.04";

impl KernelTable {
    /// `p_t(r)` of `model` on the grid.
    pub fn heat(model: &LevyModel, grid: &RadialGrid) -> Result<Self> {
        Self::heat_of(model, grid, TableKind::Heat)
    }

    /// `p^{(α)}_t(r)` of the stable part of `model`.
    pub fn stable_heat(model: &LevyModel, grid: &RadialGrid) -> Result<Self> {
        Self::heat_of(&model.stable_part(), grid, TableKind::StableHeat)
    }

    fn heat_of(model: &LevyModel, grid: &RadialGrid, kind: TableKind) -> Result<Self> {
        let eng = KernelEngine::new(model);
        let mut values = Vec::with_capacity(grid.radii.len() * grid.times.len());
        let mut origin = Vec::with_capacity(grid.times.len());
        for &t in &grid.times {
            origin.push(eng.heat(t, 0.0));
            for &r in &grid.radii {
                values.push(eng.heat(t, r));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(numeric!("heat kernel table has non-finite entries"));
        }
        Ok(Self {
            kind,
            model: model.clone(),
            coupling: None,
            radii: grid.radii.clone(),
            times: grid.times.clone(),
            columns: 1,
            values,
            origin: Some(origin),
            meta: TableMeta { quadrature: HEAT_QUADRATURE.into(), built: None },
        })
    }

    /// `g_λ(r)` for every `λ` in `lambdas`.
    pub fn resolvent(model: &LevyModel, lambdas: &[f64], radii: &[f64]) -> Result<Self> {
        if lambdas.iter().any(|&l| !(l > 0.0)) {
            return Err(domain!("resolvent tables need λ > 0"));
        }
        let eng = KernelEngine::new(model);
        let mut values = Vec::with_capacity(radii.len() * lambdas.len());
        for &l in lambdas {
            for &r in radii {
                values.push(eng.resolvent_fourier(l, r));
            }
        }
        Ok(Self {
            kind: TableKind::Resolvent,
            model: model.clone(),
            coupling: None,
            radii: radii.to_vec(),
            times: lambdas.to_vec(),
            columns: 1,
            values,
            origin: None,
            meta: TableMeta { quadrature: HEAT_QUADRATURE.into(), built: None },
        })
    }

    /// Flattens a perturbed kernel table.
    pub fn from_perturbed(p: &PerturbedKernelTable) -> Self {
        let n = p.mesh.len();
        let mut values = Vec::with_capacity(p.len() * n * 2 * n);
        for k in 0..p.len() {
            let same = p.density(k, Side::Same);
            let opp = p.density(k, Side::Opposite);
            for i in 0..n {
                values.extend_from_slice(same.row(i));
                values.extend_from_slice(opp.row(i));
            }
        }
        Self {
            kind: TableKind::Perturbed,
            model: p.model.clone(),
            coupling: Some(p.coupling),
            radii: p.mesh.nodes.clone(),
            times: p.times.clone(),
            columns: 2 * n,
            values,
            origin: None,
            meta: TableMeta {
                quadrature: alloc::format!("cell operators, {} time steps, {:?}", p.len(), p.method),
                built: None,
            },
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Values at time index `k`, `radii.len() × columns` in row-major order.
    pub fn row(&self, k: usize) -> &[f64] {
        let w = self.radii.len() * self.columns;
        &self.values[k * w..(k + 1) * w]
    }

    pub fn value(&self, k: usize, i: usize) -> f64 {
        self.row(k)[i * self.columns]
    }

    pub fn time_index(&self, t: f64) -> Result<usize> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
            .ok_or_else(|| domain!("{t} is not on the table grid"))
    }

    /// Total `d`-dimensional mass of a radial row. Cells between the first
    /// and the last node use the table values; the ball inside the first
    /// node's cell, where short-time kernels are not resolved, and the region
    /// beyond the grid are integrated in closed form from the symbol.
    pub fn mass(&self, k: usize) -> Result<f64> {
        if self.columns != 1 || self.kind == TableKind::Perturbed {
            return Err(domain!("mass is defined for free radial tables"));
        }
        let mesh = Mesh::new(self.radii.clone())?;
        let dim = self.model.dim();
        let p = dim.get() as f64 - 1.0;
        let w: Vec<f64> = self.radii.iter().zip(self.row(k)).map(|(r, v)| r.powf(p) * v).collect();
        let avg = cell_averages(&mesh, &w, p);
        let inner: f64 = avg.iter().zip(mesh.widths()).skip(1).map(|(a, b)| a * b).sum();
        let total = self.total_mass(k);
        let core = total - self.outer_mass(self.times[k], mesh.edges[1]);
        let outer = self.outer_mass(self.times[k], mesh.edges[mesh.len()]);
        Ok(core + dim.sphere_area() * inner + outer)
    }

    fn total_mass(&self, k: usize) -> f64 {
        match self.kind {
            TableKind::Resolvent => 1.0 / self.times[k],
            _ => 1.0,
        }
    }

    /// Mass beyond radius `e`, from the weight `a` of the kernel:
    /// `2G(e)` in `d = 1` and `2(e q(e) + G(e))` in `d = 3`, with
    /// `G(e) = (1/π) ∫ (a(0) - a(ρ)) sin(ρe)/ρ dρ`.
    fn outer_mass(&self, t: f64, e: f64) -> f64 {
        let m = &self.model;
        let eng = KernelEngine::new(m);
        let tr = eng.transforms();
        let (a, a0): (alloc::boxed::Box<dyn Fn(f64) -> f64>, f64) = match self.kind {
            TableKind::Heat | TableKind::StableHeat => (alloc::boxed::Box::new(move |r: f64| (-t * m.psi(r)).exp()), 1.0),
            TableKind::Resolvent => (alloc::boxed::Box::new(move |r: f64| 1.0 / (t + m.psi(r))), 1.0 / t),
            TableKind::Perturbed => unreachable!("perturbed tables have no symbol"),
        };
        let g = tr.rule_ref().integrate(Oscillation::Sine, e, |r| (a0 - a(r)) / r) / core::f64::consts::PI;
        match m.dim() {
            Dim::One => 2.0 * g,
            Dim::Three => 2.0 * (e * tr.line(&a, e, 1.0) + g),
        }
    }

    /// Checks nonnegativity (up to `1e-8` of the row maximum) and, for
    /// free kinds, the mass identities: `1` within `1e-6` for heat kernels and
    /// `1/λ` within `1e-4` relative for resolvents.
    pub fn check_invariants(&self) -> Result<()> {
        for k in 0..self.len() {
            let row = self.row(k);
            let peak = row.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            if let Some(v) = row.iter().find(|&&v| v < -1e-8 * peak) {
                return Err(numeric!("negative table value {v} at time index {k}"));
            }
            let want = match self.kind {
                TableKind::Heat | TableKind::StableHeat => Some((1.0, 1e-6)),
                TableKind::Resolvent => Some((1.0 / self.times[k], 1e-4)),
                TableKind::Perturbed => None,
            };
            if let Some((target, tol)) = want {
                let m = self.mass(k)?;
                if (m - target).abs() > tol * target {
                    return Err(numeric!("mass {m} differs from {target} at index {k}"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_tables_are_normalized() {
        for model in [
            LevyModel::stable(1, 0.5).unwrap(),
            LevyModel::relativistic(1, 0.5, 1.0).unwrap(),
            LevyModel::stable(3, 1.0).unwrap(),
        ] {
            let grid = RadialGrid::log(1e-3, 1e2, 256, alloc::vec![0.05, 0.5, 2.0]).unwrap();
            let tab = KernelTable::heat(&model, &grid).unwrap();
            for k in 0..tab.len() {
                let m = tab.mass(k).unwrap();
                assert!((m - 1.0).abs() < 1e-6, "{:?} t={} mass {m}", model.kind(), tab.times[k]);
            }
        }
    }

    #[test]
    fn resolvent_tables_have_mass_one_over_lambda() {
        let model = LevyModel::relativistic(1, 0.5, 1.0).unwrap();
        let tab = KernelTable::resolvent(&model, &[0.5, 1.0], &crate::grid::log_space(1e-4, 1e3, 300)).unwrap();
        tab.check_invariants().unwrap();
    }
}
