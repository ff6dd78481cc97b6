//! Quadratic forms and bound states of `H = ψ(D) - κ|x|^{-α}`.
//!
//! A radial function `f` is handled through its line variable `g`: `g = f`,
//! even, in `d = 1` and `g = r f`, odd, in `d = 3`. Every form of `f` is the
//! one-dimensional form of `g` under the projected Lévy measure, times `1`
//! (`d = 1`) or `2π` (`d = 3`).

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

#[allow(unused_imports)]
use num_traits::Float;

use crate::audit::AuditReport;
use crate::cells::{potential_averages, table_for};
use crate::duhamel::{perturbed_apply_radial, ApplyOptions, RadialFunction};
use crate::error::{domain, numeric};
use crate::grid::{Dim, Mesh, RadialGrid};
use crate::hardy::HardyCoupling;
use crate::kernel::{linear_fit, Transforms};
use crate::levy::LevyModel;
use crate::linalg::{power_iteration, Matrix};
use crate::quad::{exp_sinh, tanh_sinh, GaussLegendre};
use crate::Result;

/// Geometric ratio of integration panels.
const PANEL_RATIO: f64 = 1.5;

fn line_weight(dim: Dim) -> f64 {
    match dim {
        Dim::One => 1.0,
        Dim::Three => 2.0 * PI,
    }
}

/// `g` on the whole line, cubic in `ln r` inside the grid, a power law
/// below it and a decaying power law (or zero) above it.
struct LineProfile {
    radii: Vec<f64>,
    ln_r: Vec<f64>,
    g: Vec<f64>,
    sign: f64,
    low: f64,
    high: Option<f64>,
}

impl LineProfile {
    fn new(f: &RadialFunction, dim: Dim) -> Self {
        let lift = |r: f64| if dim == Dim::Three { r } else { 1.0 };
        let g: Vec<f64> = f.radii.iter().zip(&f.values).map(|(r, v)| lift(*r) * v).collect();
        let n = g.len();
        let low = if dim == Dim::Three { 1.0 } else { 0.0 } - f.hint.unwrap_or(0.0);
        let (a, b) = (g[n - 2].abs(), g[n - 1].abs());
        let high = if a > 0.0 && b > 0.0 && b < a {
            Some((a / b).ln() / (f.radii[n - 1] / f.radii[n - 2]).ln())
        } else {
            None
        };
        Self {
            ln_r: f.radii.iter().map(|r| r.ln()).collect(),
            radii: f.radii.clone(),
            g,
            sign: dim.parity().sign(),
            low,
            high,
        }
    }

    fn r_min(&self) -> f64 {
        self.radii[0]
    }

    fn r_max(&self) -> f64 {
        self.radii[self.radii.len() - 1]
    }

    fn radial(&self, r: f64) -> f64 {
        let n = self.g.len();
        if r <= self.radii[0] {
            return if r == 0.0 {
                if self.low > 0.0 { 0.0 } else { self.g[0] }
            } else {
                self.g[0] * (r / self.radii[0]).powf(self.low)
            };
        }
        if r >= self.radii[n - 1] {
            return match self.high {
                Some(p) => self.g[n - 1] * (r / self.radii[n - 1]).powf(-p),
                None => 0.0,
            };
        }
        if n < 4 {
            let k = self.radii.partition_point(|&x| x <= r) - 1;
            let t = (r.ln() - self.ln_r[k]) / (self.ln_r[k + 1] - self.ln_r[k]);
            return self.g[k] * (1.0 - t) + self.g[k + 1] * t;
        }
        let k = self.radii.partition_point(|&x| x <= r).clamp(2, n - 2) - 2;
        let lr = r.ln();
        let mut acc = 0.0;
        for p in 0..4 {
            let mut w = 1.0;
            for q in 0..4 {
                if p != q {
                    w *= (lr - self.ln_r[k + q]) / (self.ln_r[k + p] - self.ln_r[k + q]);
                }
            }
            acc += w * self.g[k + p];
        }
        acc
    }

    fn at(&self, x: f64) -> f64 {
        if x < 0.0 {
            self.sign * self.radial(-x)
        } else {
            self.radial(x)
        }
    }

    /// Upper limit of every spatial integral.
    fn far(&self) -> f64 {
        1e3 * self.r_max()
    }

    /// `∫₀^∞ w(r) g(r)²` with `w = r^{-p}`; the piece below `ε` in closed
    /// form from the power law at the origin.
    fn weighted_square(&self, p: f64, gl: &GaussLegendre) -> Result<f64> {
        let e = 2.0 * self.low - p + 1.0;
        if e <= 0.0 {
            return Err(domain!("∫ g² r^{{-{p}}} diverges at the origin"));
        }
        let eps = 1e-3 * self.r_min();
        let g_eps = self.radial(eps);
        let mut acc = g_eps * g_eps * eps.powf(-p) * eps / e;
        let mut a = eps;
        while a < self.far() {
            let b = (a * PANEL_RATIO).min(self.far());
            acc += gl.integrate(a, b, |r| {
                let v = self.radial(r);
                v * v * r.powf(-p)
            });
            a = b;
        }
        Ok(acc)
    }

    /// `∫_ℝ F(g(x + h), g(x)) dx` for integrands invariant under the
    /// reflection `x ↦ -x - h`, as twice the integral over `x > -h/2`.
    fn shifted(&self, h: f64, gl: &GaussLegendre, f: impl Fn(f64, f64) -> f64) -> f64 {
        let eps = 1e-3 * h.min(self.r_min());
        let mut acc = 0.0;
        let integrand = |x: f64| f(self.at(x + h), self.at(x));
        // [-h/2, 0), refined toward the origin
        let mut b = -0.5 * h;
        while -b > eps {
            let a = b;
            b = a / PANEL_RATIO;
            acc += gl.integrate(a, b, integrand);
        }
        acc += gl.integrate(b, 0.0, integrand);
        acc += gl.integrate(0.0, eps, integrand);
        let mut a = eps;
        while a < self.far() {
            let b = (a * PANEL_RATIO).min(self.far());
            acc += gl.integrate(a, b, integrand);
            a = b;
        }
        2.0 * acc
    }
}

/// `∫₀^∞ ν(h) D(h) dh` with `D(h) = ∫(g(x+h) - g(x))² dx`, the line form
/// of `g` under the even density `ν ~ c h^{-1-α}` at the origin.
fn line_form(p: &LineProfile, nu: impl Fn(f64) -> f64, c: f64, alpha: f64) -> Result<f64> {
    let gl = GaussLegendre::new(6);
    let d = |h: f64| p.shifted(h, &gl, |a, b| (a - b) * (a - b));
    let h_lo = 1e-3 * p.r_min();
    let h_hi = p.far();
    let mut acc = 0.0;
    let mut a = h_lo;
    while a < h_hi {
        let b = (a * PANEL_RATIO).min(h_hi);
        acc += gl.integrate(a, b, |h| nu(h) * d(h));
        a = b;
    }
    // below the grid: D(h) ≈ D(h_lo) (h/h_lo)^s and ν ≈ c h^{-1-α}
    let (d1, d2) = (d(h_lo), d(2.0 * h_lo));
    if d1 > 0.0 {
        let s = (d2 / d1).log2();
        if !(s > alpha) {
            return Err(domain!("the form diverges at the diagonal (local power {s:.3} ≤ α)"));
        }
        acc += c * d1 * h_lo.powf(-alpha) / (s - alpha);
    }
    // beyond the grid D(h) = 2 ∫_ℝ g²
    let norm = 2.0 * p.weighted_square(0.0, &gl)?;
    let (tail, _) = exp_sinh(|x| nu(h_hi + x), h_hi, 1e-10);
    acc += 2.0 * norm * tail;
    if !acc.is_finite() {
        return Err(numeric!("form quadrature is not finite"));
    }
    Ok(acc)
}

fn check_decay(f: &RadialFunction) -> Result<()> {
    let peak = f.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let last = f.values[f.values.len() - 1].abs();
    if last >= 1e-3 * peak {
        return Err(domain!("f must decay at the outer radius (|f| = {last:e}, max {peak:e})"));
    }
    Ok(())
}

/// `E[f] = ½ ∫∫ (f(x) - f(y))² ν(x - y) dx dy` for a radial `f`.
pub fn form_energy(model: &LevyModel, f: &RadialFunction) -> Result<f64> {
    check_decay(f)?;
    let p = LineProfile::new(f, model.dim());
    let e = line_form(&p, |h| model.density_1d(h), model.stable_constant_1d(), model.alpha())?;
    Ok(line_weight(model.dim()) * e)
}

/// `∫ f²` in `d` dimensions, from the line profile.
pub fn radial_norm_squared(dim: Dim, f: &RadialFunction) -> Result<f64> {
    let p = LineProfile::new(f, dim);
    Ok(line_weight(dim) * 2.0 * p.weighted_square(0.0, &GaussLegendre::new(6))?)
}

/// `⟨σ f, f⟩ = ∫∫ σ(x - y) f(x) f(y) dx dy`.
pub fn sigma_pairing(model: &LevyModel, f: &RadialFunction) -> Result<f64> {
    if model.sigma_mass() == 0.0 {
        return Ok(0.0);
    }
    let p = LineProfile::new(f, model.dim());
    let gl = GaussLegendre::new(6);
    let c = |h: f64| p.shifted(h, &gl, |a, b| a * b);
    let h_lo = 1e-3 * p.r_min();
    let mut acc = 0.0;
    let mut a = h_lo;
    while a < p.far() {
        let b = (a * PANEL_RATIO).min(p.far());
        acc += gl.integrate(a, b, |h| model.sigma_1d(h) * c(h));
        a = b;
    }
    let (near, _) = tanh_sinh(|h| model.sigma_1d(h), 0.0, h_lo, 1e-10);
    acc += near * c(0.0_f64.max(1e-3 * h_lo));
    Ok(line_weight(model.dim()) * 2.0 * acc)
}

/// Relative defect of `E[f] + |σ| ‖f‖² - ⟨σf, f⟩ = E^{(α)}[f]`, every term
/// from its own quadrature.
pub fn form_identity_residual(model: &LevyModel, f: &RadialFunction) -> Result<f64> {
    let e = form_energy(model, f)?;
    let ea = form_energy(&model.stable_part(), f)?;
    if model.is_stable() {
        return Ok((e - ea).abs() / ea);
    }
    let norm = radial_norm_squared(model.dim(), f)?;
    let pair = sigma_pairing(model, f)?;
    Ok((e + model.sigma_mass() * norm - pair - ea).abs() / ea)
}

/// `∫ f(x)² |x|^{-α} dx / E^{(α)}[f]`, bounded by `1/κ*` for every `f`.
pub fn hardy_ratio(alpha: f64, d: u32, f: &RadialFunction) -> Result<f64> {
    let model = LevyModel::stable(d, alpha)?;
    let dim = model.dim();
    let p = LineProfile::new(f, dim);
    let num = line_weight(dim) * 2.0 * p.weighted_square(alpha, &GaussLegendre::new(6))?;
    Ok(num / form_energy(&model, f)?)
}

/// Discretized Birman–Schwinger operator `√V G_λ √V` on the radii of a
/// grid, in the line variable.
struct BirmanSchwinger {
    mesh: Mesh,
    lift: Vec<f64>,
    sqrt_w: Vec<f64>,
    sqrt_v: Vec<f64>,
}

impl BirmanSchwinger {
    fn new(model: &LevyModel, coupling: &HardyCoupling, radii: &[f64]) -> Result<Self> {
        if coupling.d != model.d() || coupling.alpha != model.alpha() {
            return Err(domain!("coupling and model disagree on (d, α)"));
        }
        if !coupling.is_subcritical() {
            return Err(domain!("bound states need κ < κ*"));
        }
        let mesh = Mesh::new(radii.to_vec())?;
        let dim = model.dim();
        // local power of the lifted eigenfunction at the origin
        let hint = if dim == Dim::Three { 1.0 } else { 0.0 } - coupling.delta;
        let v = potential_averages(&mesh, coupling.kappa, coupling.alpha, hint);
        Ok(Self {
            lift: mesh.nodes.iter().map(|&r| if dim == Dim::Three { r } else { 1.0 }).collect(),
            sqrt_w: mesh.widths().iter().map(|w| w.sqrt()).collect(),
            sqrt_v: v.iter().map(|v| v.sqrt()).collect(),
            mesh,
        })
    }

    /// `(B, A)`: the symmetric operator and the cell matrix of `G_λ`.
    fn operator(&self, model: &LevyModel, lambda: f64) -> (Matrix, Matrix) {
        let tr = Transforms::new();
        let table = table_for(&tr, &self.mesh, |r| 1.0 / (lambda + model.psi(r)));
        let a = table.cell_matrix(&self.mesh, model.dim().parity());
        let n = self.mesh.len();
        let s = |i: usize, j: usize| self.sqrt_w[i] * a[(i, j)] / self.sqrt_w[j];
        let b = Matrix::from_fn(n, n, |i, j| 0.5 * (s(i, j) + s(j, i)) * self.sqrt_v[i] * self.sqrt_v[j]);
        (b, a)
    }

    fn top(&self, model: &LevyModel, lambda: f64) -> Result<(f64, Vec<f64>, Matrix)> {
        let (b, a) = self.operator(model, lambda);
        let (mu, v) = power_iteration(&b, 1e-9, 10_000)?;
        Ok((mu, v, a))
    }

    /// `√V φ` at the nodes from an eigenvector of `B`.
    fn weighted(&self, v: &[f64]) -> Vec<f64> {
        (0..v.len()).map(|i| v[i] / (self.sqrt_w[i] * self.lift[i])).collect()
    }

    /// `φ = G_λ(V φ)` at the nodes from an eigenvector of `B`.
    fn eigenfunction(&self, a: &Matrix, v: &[f64]) -> Vec<f64> {
        let src: Vec<f64> = (0..v.len()).map(|j| self.sqrt_v[j] * v[j] / self.sqrt_w[j]).collect();
        a.matvec(&src).iter().zip(&self.lift).map(|(x, l)| x / l).collect()
    }
}

/// Largest eigenvalue `μ(λ)` of `√V G_λ √V` and its eigenvector `√V φ`.
pub fn birman_schwinger_mu(
    model: &LevyModel,
    coupling: &HardyCoupling,
    lambda: f64,
    grid: &RadialGrid,
) -> Result<(f64, RadialFunction)> {
    if !(lambda > 0.0) {
        return Err(domain!("λ must be positive"));
    }
    let bs = BirmanSchwinger::new(model, coupling, &grid.radii)?;
    let (mu, v, _) = bs.top(model, lambda)?;
    let w = bs.weighted(&v);
    let f = RadialFunction::new(grid.radii.clone(), w, Some(0.5 * coupling.alpha + coupling.delta))?;
    Ok((mu, f))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub evaluations: usize,
    pub mu_at_root: f64,
    pub bracket: (f64, f64),
    pub grid: String,
}

/// Ground state of `H = ψ(D) - V`: `H φ = E φ`, `E = -λ*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundState {
    pub model: LevyModel,
    pub coupling: HardyCoupling,
    #[serde(rename = "E")]
    pub energy: f64,
    pub lambda_star: f64,
    pub phi: RadialFunction,
    pub mu_curve: Vec<(f64, f64)>,
    pub diagnostics: SolverDiagnostics,
}

impl GroundState {
    /// `E + m`, the eigenvalue of `(-Δ + m²)^{1/2} - V` for relativistic
    /// models.
    pub fn shifted_energy(&self) -> Option<f64> {
        self.model.relativistic_mass().map(|m| self.energy + m)
    }
}

/// Radii for ground states. The eigenvector is distorted over about a
/// decade and a half above the first radius, so the grid starts three
/// decades below the window of the small-`r` fit.
pub fn default_ground_state_grid(n: usize) -> Result<RadialGrid> {
    RadialGrid::log(1e-6, 60.0, n, alloc::vec![0.5])
}

/// Solves `μ(λ) = 1` by regula falsi (Illinois) in `ln λ` and maps the
/// eigenvector back to `φ ∝ G_{λ*}(V φ)`, normalized in `L²(ℝ^d)`.
pub fn ground_state_solve(model: &LevyModel, coupling: &HardyCoupling, grid: &RadialGrid, tol: f64) -> Result<GroundState> {
    let m = model
        .relativistic_mass()
        .ok_or_else(|| domain!("ground states are solved for relativistic models"))?;
    let bs = BirmanSchwinger::new(model, coupling, &grid.radii)?;
    let herbst = model.d() == 3 && model.alpha() == 1.0;
    let lo = 1e-4 * m;
    let mut hi = if herbst {
        1.1 * m * (1.0 - (1.0 - (0.5 * coupling.kappa * PI).powi(2)).sqrt())
    } else {
        m
    };
    let mut curve = Vec::new();
    let eval = |l: f64, curve: &mut Vec<(f64, f64)>| -> Result<(f64, Vec<f64>, Matrix)> {
        let out = bs.top(model, l)?;
        curve.push((l, out.0));
        Ok(out)
    };
    let mu_lo = eval(lo, &mut curve)?.0;
    let mut mu_hi = eval(hi, &mut curve)?.0;
    if !herbst {
        let mut k = 0;
        while mu_hi > 1.0 && k < 30 {
            hi *= 2.0;
            mu_hi = eval(hi, &mut curve)?.0;
            k += 1;
        }
    }
    if !(mu_lo > 1.0 && mu_hi < 1.0) {
        return Err(domain!("no bracket: μ({lo:e}) = {mu_lo}, μ({hi:e}) = {mu_hi}"));
    }
    let (mut xa, mut fa) = (lo.ln(), mu_lo.ln());
    let (mut xb, mut fb) = (hi.ln(), mu_hi.ln());
    let mut side = 0i32;
    let mut best = None;
    for _ in 0..200 {
        let x = (xa * fb - xb * fa) / (fb - fa);
        let (mu, v, a) = eval(x.exp(), &mut curve)?;
        let fx = mu.ln();
        let done = (mu - 1.0).abs() <= tol || (xb - xa).abs() <= 1e-13;
        best = Some((x.exp(), mu, v, a));
        if done {
            break;
        }
        if fx > 0.0 {
            xa = x;
            fa = fx;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        } else {
            xb = x;
            fb = fx;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        }
    }
    let (lambda_star, mu, v, a) = best.expect("at least one step");
    if (mu - 1.0).abs() > tol {
        return Err(numeric!("bisection stalled at μ = {mu}"));
    }
    let phi_nodes = bs.eigenfunction(&a, &v);
    let mut phi = RadialFunction::new(grid.radii.clone(), phi_nodes, Some(coupling.delta))?;
    let norm = phi.norm2(model.dim());
    phi.values.iter_mut().for_each(|x| *x /= norm);
    if phi.values.iter().any(|&x| !(x > 0.0)) {
        return Err(numeric!("ground state is not positive on the grid"));
    }
    curve.sort_by(|p, q| p.0.total_cmp(&q.0));
    Ok(GroundState {
        model: model.clone(),
        coupling: *coupling,
        energy: -lambda_star,
        lambda_star,
        phi,
        diagnostics: SolverDiagnostics {
            evaluations: curve.len(),
            mu_at_root: mu,
            bracket: (lo, hi),
            grid: grid.describe(),
        },
        mu_curve: curve,
    })
}

/// `max |e^{Et} P̃_t φ(r) - φ(r)| / φ(r)` over `r ∈ [0.05, 20]`.
pub fn eigen_representation_residual(gs: &GroundState, t: f64) -> Result<f64> {
    eigen_representation_residual_with(gs, t, ApplyOptions::default())
}

/// [`eigen_representation_residual`] with explicit solver options.
pub fn eigen_representation_residual_with(gs: &GroundState, t: f64, opts: ApplyOptions) -> Result<f64> {
    let out = perturbed_apply_radial(&gs.model, &gs.coupling, t, &gs.phi, opts)?;
    let grow = (gs.energy * t).exp();
    let mut worst = 0.0f64;
    for (i, &r) in gs.phi.radii.iter().enumerate() {
        if (0.05..=20.0).contains(&r) {
            let p = gs.phi.values[i];
            worst = worst.max((grow * out.value.values[i] - p).abs() / p);
        }
    }
    Ok(worst)
}

/// Relative defect of `E[φ] - ∫Vφ² = E ‖φ‖²`.
pub fn ground_state_form_residual(gs: &GroundState) -> Result<f64> {
    let dim = gs.model.dim();
    let p = LineProfile::new(&gs.phi, dim);
    let pot = gs.coupling.kappa * line_weight(dim) * 2.0 * p.weighted_square(gs.coupling.alpha, &GaussLegendre::new(6))?;
    let e = form_energy(&gs.model, &gs.phi)?;
    let rhs = gs.energy * radial_norm_squared(dim, &gs.phi)?;
    Ok(((e - pot) - rhs).abs() / rhs.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub delta_hat: f64,
    pub rate_hat: f64,
    pub delta_rms: f64,
    pub rate_rms: f64,
    /// Either fit left its linear regime (rms residual above `0.1`).
    pub inconclusive: bool,
}

/// Slope of `ln φ` against `ln r` on `[10⁻³, 10⁻¹]` and of `ln φ` against
/// `r` on `[8, 25]`.
pub fn decay_exponent_fits(gs: &GroundState) -> Result<DecayFit> {
    let fit = |lo: f64, hi: f64, x: fn(f64) -> f64| {
        let (xs, ys): (Vec<f64>, Vec<f64>) = gs
            .phi
            .radii
            .iter()
            .zip(&gs.phi.values)
            .filter(|(r, _)| (lo..=hi).contains(*r))
            .map(|(&r, &v)| (x(r), v.ln()))
            .unzip();
        if xs.len() < 3 {
            return Err(domain!("the grid must cover [{lo}, {hi}]"));
        }
        Ok(linear_fit(&xs, &ys))
    };
    let (s_near, _, rms_near) = fit(1e-3 * (1.0 - 1e-9), 1e-1, |r| r.ln())?;
    let (s_far, _, rms_far) = fit(8.0, 25.0, |r| r)?;
    Ok(DecayFit {
        delta_hat: -s_near,
        rate_hat: -s_far,
        delta_rms: rms_near,
        rate_rms: rms_far,
        inconclusive: rms_near > 0.1 || rms_far > 0.1,
    })
}

/// `m √(1 - (κπ/2)²) ≤ E + m < m` for the relativistic Coulomb model.
pub fn herbst_check(gs: &GroundState) -> Result<AuditReport> {
    let m = gs.model.relativistic_mass().filter(|_| gs.model.d() == 3 && gs.model.alpha() == 1.0);
    let m = m.ok_or_else(|| domain!("the spectral interval is stated for d = 3, α = 1 relativistic models"))?;
    let kappa = gs.coupling.kappa;
    let lower = m * (1.0 - (0.5 * kappa * PI).powi(2)).max(0.0).sqrt();
    let em = gs.energy + m;
    let mut rep = AuditReport::new("herbst", gs.diagnostics.grid.clone()).param("kappa", kappa).param("m", m);
    rep.c_lower = Some(lower);
    rep.stat("E_m", em);
    rep.stat("lower_endpoint", lower);
    rep.stat("gap_to_threshold", m - em);
    rep.note("a single solve; the interval involves no grid constant");
    rep.conclude(lower <= em && em < m, true);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::log_space;

    fn gaussian(d: u32) -> RadialFunction {
        let radii = log_space(1e-3, 12.0, 400);
        let _ = d;
        RadialFunction::from_fn(&radii, |r| (-r * r).exp(), None).unwrap()
    }

    /// `E` from the symbol: `(1/π)∫ψ|ĝ|²` on the line, `ĝ` in closed form.
    fn fourier_energy(model: &LevyModel) -> f64 {
        let sq_pi = PI.sqrt();
        let (v, _) = exp_sinh(
            |rho| {
                let g_hat = match model.d() {
                    1 => sq_pi * (-rho * rho / 4.0).exp(),
                    _ => 0.5 * sq_pi * rho * (-rho * rho / 4.0).exp(),
                };
                model.psi(rho) * g_hat * g_hat
            },
            1.0,
            1e-12,
        );
        line_weight(model.dim()) * v / PI
    }

    #[test]
    fn gaussian_energy_matches_the_fourier_side() {
        for model in [
            LevyModel::stable(1, 0.5).unwrap(),
            LevyModel::relativistic(1, 0.5, 1.0).unwrap(),
            LevyModel::stable(3, 1.0).unwrap(),
            LevyModel::relativistic(3, 1.0, 1.0).unwrap(),
        ] {
            let e = form_energy(&model, &gaussian(model.d())).unwrap();
            let want = fourier_energy(&model);
            assert!((e - want).abs() <= 1e-2 * want, "{:?} d={} {e} {want}", model.kind(), model.d());
        }
    }

    #[test]
    fn form_is_quadratic() {
        let model = LevyModel::relativistic(1, 0.5, 1.0).unwrap();
        let f = gaussian(1);
        let mut f2 = f.clone();
        f2.values.iter_mut().for_each(|v| *v *= 2.0);
        let (a, b) = (form_energy(&model, &f).unwrap(), form_energy(&model, &f2).unwrap());
        assert!((b - 4.0 * a).abs() <= 1e-12 * b);
    }

    #[test]
    fn form_identity_for_the_relativistic_line() {
        let model = LevyModel::relativistic(1, 0.5, 1.0).unwrap();
        let res = form_identity_residual(&model, &gaussian(1)).unwrap();
        assert!(res <= 0.02, "{res}");
        let stable = LevyModel::stable(1, 0.5).unwrap();
        assert_eq!(form_identity_residual(&stable, &gaussian(1)).unwrap(), 0.0);
    }

    #[test]
    fn hardy_ratio_stays_below_the_critical_constant() {
        for (d, a) in [(1u32, 0.5), (3, 1.0)] {
            let ks = crate::hardy::kappa_star(d, a).unwrap();
            let f = gaussian(d);
            let r = hardy_ratio(a, d, &f).unwrap();
            assert!(r <= (1.0 + 1e-2) / ks, "d={d} {r} {}", 1.0 / ks);
            // dilation invariance
            let radii = log_space(1e-3, 12.0, 400);
            let g = RadialFunction::from_fn(&radii, |r| (-4.0 * r * r).exp(), None).unwrap();
            let r2 = hardy_ratio(a, d, &g).unwrap();
            assert!((r2 - r).abs() <= 1e-3 * r, "{r} {r2}");
        }
    }

    #[test]
    fn undecayed_functions_are_rejected() {
        let radii = log_space(1e-3, 10.0, 50);
        let f = RadialFunction::from_fn(&radii, |_| 1.0, None).unwrap();
        let model = LevyModel::stable(1, 0.5).unwrap();
        assert!(matches!(form_energy(&model, &f), Err(crate::Error::Domain(_))));
    }

    fn coulomb(kappa: f64, n: usize) -> GroundState {
        let model = LevyModel::relativistic(3, 1.0, 1.0).unwrap();
        let coupling = HardyCoupling::from_kappa(3, 1.0, kappa).unwrap();
        ground_state_solve(&model, &coupling, &default_ground_state_grid(n).unwrap(), 1e-6).unwrap()
    }

    #[test]
    fn coulomb_ground_state() {
        let gs = coulomb(0.5, 512);
        let em = gs.shifted_energy().unwrap();
        assert!(herbst_check(&gs).unwrap().passed(), "{em}");
        assert!((gs.phi.norm2(Dim::Three) - 1.0).abs() < 1e-6);
        assert!(gs.phi.values.iter().all(|&v| v > 0.0));
        assert!((gs.diagnostics.mu_at_root - 1.0).abs() <= 1e-6);
        let fit = decay_exponent_fits(&gs).unwrap();
        assert!(!fit.inconclusive);
        assert!((fit.delta_hat - 0.5).abs() <= 0.05, "{fit:?}");
        assert!((fit.rate_hat - (1.0 - em * em).sqrt()).abs() <= 0.1, "{fit:?}");
        let form = ground_state_form_residual(&gs).unwrap();
        assert!(form <= 0.05, "{form}");
        // μ decreases along the sampled curve
        assert!(gs.mu_curve.windows(2).all(|w| w[1].1 < w[0].1));
    }

    #[test]
    fn eigenfunction_is_invariant_under_the_perturbed_semigroup() {
        let gs = coulomb(0.5, 256);
        let res = eigen_representation_residual(&gs, 0.5).unwrap();
        assert!(res <= 0.05, "{res}");
    }

    #[test]
    fn stronger_coupling_binds_deeper() {
        let mut last = 0.0;
        let mut last_delta = 0.0;
        for kappa in [0.15, 0.3, 0.45] {
            let gs = coulomb(kappa, 256);
            assert!(gs.lambda_star > last);
            let fit = decay_exponent_fits(&gs).unwrap();
            assert!(fit.delta_hat > last_delta);
            last = gs.lambda_star;
            last_delta = fit.delta_hat;
        }
    }

    #[test]
    fn ground_state_is_grid_stable() {
        let (a, b) = (coulomb(0.4, 256), coulomb(0.4, 512));
        assert!((a.lambda_star - b.lambda_star).abs() <= 1e-2 * b.lambda_star);
    }

    #[test]
    fn birman_schwinger_is_linear_in_kappa() {
        let model = LevyModel::relativistic(3, 1.0, 1.0).unwrap();
        let grid = default_ground_state_grid(128).unwrap();
        let mu = |k: f64| birman_schwinger_mu(&model, &HardyCoupling::from_kappa(3, 1.0, k).unwrap(), 0.3, &grid).unwrap();
        let (m1, v1) = mu(0.01);
        let (m2, _) = mu(0.02);
        assert!((m2 / m1 - 2.0).abs() < 2e-2, "{}", m2 / m1);
        assert!(v1.values.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn supercritical_couplings_are_refused() {
        let model = LevyModel::relativistic(3, 1.0, 1.0).unwrap();
        let c = HardyCoupling::critical(3, 1.0).unwrap();
        let grid = default_ground_state_grid(64).unwrap();
        assert!(birman_schwinger_mu(&model, &c, 0.3, &grid).is_err());
        assert!(ground_state_solve(&LevyModel::stable(3, 1.0).unwrap(), &HardyCoupling::from_kappa(3, 1.0, 0.3).unwrap(), &grid, 1e-6).is_err());
    }
}
