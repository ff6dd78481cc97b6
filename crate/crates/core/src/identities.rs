//! Structural identities between free kernels: Chapman–Kolmogorov, the
//! series relating `p` to `p^{(α)}` through `σ`, and convolution powers of
//! the resolvent. Radial convolutions are done on the half-line: in `d = 3`
//! the angular average of `f(|x - y|)` over a sphere reduces to a
//! one-dimensional integral, so `(f ∗ h)(r) = r^{-1} ∫₀^∞ y h(y)
//! (q(r - y) - q(r + y)) dy` with `q` the line kernel of the same symbol.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::audit::AuditReport;
use crate::cells::{cell_averages, cell_matrix_with, interpolate_log, table_for};
use crate::error::{domain, numeric};
use crate::grid::{Dim, Mesh, Parity, RadialGrid};
use crate::kernel::{KernelEngine, Transforms};
use crate::levy::LevyModel;
use crate::quad::{exp_sinh, GaussLegendre, Oscillation};
use crate::table::{KernelTable, TableKind};
use crate::Result;

/// Radii kept when comparing convolutions: a decade inside either end of the
/// grid, where neither the first cell nor the outer truncation matters.
fn interior(radii: &[f64]) -> impl Fn(f64) -> bool {
    let (lo, hi) = (10.0 * radii[0], radii[radii.len() - 1] / 10.0);
    move |r| r >= lo && r <= hi
}

/// Sub-cells per cell used when a smooth function is convolved with a
/// kernel through cell integrals; the pairing of cell integrals with cell
/// averages is second order in the cell width.
const CONVOLUTION_REFINE: usize = 4;

/// Applies the free semigroup `P_s` (through its line kernel) to a radial
/// function known at the nodes of `mesh`, including the power-law
/// continuation of the function beyond the mesh.
pub(crate) fn apply_heat(model: &LevyModel, s: f64, mesh: &Mesh, values: &[f64]) -> Vec<f64> {
    let tr = Transforms::new();
    let table = table_for(&tr, mesh, |r| (-s * model.psi(r)).exp());
    let hint = if model.dim() == Dim::Three { 1.0 } else { 0.0 };
    apply_line_kernel(model.dim(), |a, b| table.integral(a, b), mesh, values, hint, |r, e, p| {
        table.tail_action(r, e, p, model.dim().parity())
    })
}

/// `∫ k(r - z) ± k(r + z)` applied to the lifted function on a refined copy
/// of `mesh`; `integral(a, b) = ∫_a^b k`, `tail(r, e, p)` the action on
/// `z^{-p}` beyond `e`; `hint` is the power of the lifted function at the
/// origin. Returns values at the nodes of `mesh`.
fn apply_line_kernel(
    dim: Dim,
    integral: impl Fn(f64, f64) -> f64,
    mesh: &Mesh,
    values: &[f64],
    hint: f64,
    tail: impl Fn(f64, f64, f64) -> f64,
) -> Vec<f64> {
    let s = dim.parity().sign();
    let lift = |r: f64| if dim == Dim::Three { r } else { 1.0 };
    let n = mesh.len();
    let g: Vec<f64> = mesh.nodes.iter().zip(values).map(|(r, v)| lift(*r) * v).collect();
    let fine_nodes = crate::grid::log_space(mesh.nodes[0], mesh.nodes[n - 1], (n - 1) * CONVOLUTION_REFINE + 1);
    let fine = Mesh::new(fine_nodes).expect("valid refined mesh");
    let fine_g: Vec<f64> = fine.nodes.iter().map(|&r| interpolate_log(&mesh.nodes, &g, r)).collect();
    let avg = cell_averages(&fine, &fine_g, hint);
    let (g1, g2) = (g[n - 2], g[n - 1]);
    let power = if g1 > 0.0 && g2 > 0.0 {
        let p = -(g2 / g1).ln() / (mesh.nodes[n - 1] / mesh.nodes[n - 2]).ln();
        Some((p, g2 * mesh.nodes[n - 1].powf(p)))
    } else {
        None
    };
    mesh.nodes
        .iter()
        .map(|&r| {
            let mut acc = 0.0;
            for j in 0..fine.len() {
                let (a, b) = (fine.edges[j], fine.edges[j + 1]);
                acc += avg[j] * (integral(r - b, r - a) + s * integral(r + a, r + b));
            }
            if let Some((p, c)) = power {
                acc += c * tail(r, fine.extent(), p);
            }
            acc / lift(r)
        })
        .collect()
}

/// `max |(p_s ⊛ p_t)(r) - p_{s+t}(r)| / p_{s+t}(r)` over the interior radii
/// of a free heat table. `p_s` acts through exact cell integrals of its
/// kernel; `p_t` and `p_{s+t}` are the table values.
pub fn chapman_kolmogorov_residual(table: &KernelTable, s: f64, t: f64) -> Result<f64> {
    if !matches!(table.kind, TableKind::Heat | TableKind::StableHeat) {
        return Err(domain!("Chapman-Kolmogorov needs a free heat table"));
    }
    let k_t = table.time_index(t)?;
    let k_st = table.time_index(s + t)?;
    table.time_index(s)?;
    let mesh = Mesh::new(table.radii.clone())?;
    let conv = apply_heat(&table.model, s, &mesh, table.row(k_t));
    let keep = interior(&table.radii);
    let mut worst = 0.0f64;
    for (i, &r) in table.radii.iter().enumerate() {
        if keep(r) {
            let want = table.value(k_st, i);
            worst = worst.max((conv[i] - want).abs() / want);
        }
    }
    Ok(worst)
}

/// Odd primitive `S(u) = ∫₀^u k` of an integrable even line kernel `k`,
/// tabulated in `ln u` with cubic Hermite interpolation.
struct SpacePrimitive {
    ln_u0: f64,
    step: f64,
    s: Vec<f64>,
    ds: Vec<f64>,
    limit: f64,
    tail_power: f64,
}

impl SpacePrimitive {
    fn new(k: impl Fn(f64) -> f64, limit: f64, u_lo: f64, u_hi: f64) -> Self {
        let per_decade = 100.0;
        let step = core::f64::consts::LN_10 / per_decade;
        // start well below the smallest argument so the power-law start is
        // negligible
        let u0 = 1e-4 * u_lo;
        let ln_u0 = u0.ln();
        let n = ((u_hi.ln() - ln_u0) / step).ceil() as usize + 1;
        let gl = GaussLegendre::new(8);
        // local power k ~ u^β below the table
        let beta = (k(2.0 * u0) / k(u0)).ln() / 2f64.ln();
        let mut acc = k(u0) * u0 / (beta + 1.0);
        let mut s = Vec::with_capacity(n);
        let mut ds = Vec::with_capacity(n);
        for j in 0..n {
            let l = ln_u0 + step * j as f64;
            if j > 0 {
                acc += gl.integrate(l - step, l, |x| {
                    let u = x.exp();
                    k(u) * u
                });
            }
            s.push(acc);
            let u = l.exp();
            ds.push(k(u) * u);
        }
        let rest = limit - acc;
        let tail_power = if rest > 0.0 { (ds[n - 1] / rest).max(1e-3) } else { 1.0 };
        Self { ln_u0, step, s, ds, limit, tail_power }
    }

    fn at(&self, u: f64) -> f64 {
        if u < 0.0 {
            return -self.at(-u);
        }
        if u == 0.0 {
            return 0.0;
        }
        let n = self.s.len();
        let x = (u.ln() - self.ln_u0) / self.step;
        if x <= 0.0 {
            // S ~ u^{β+1} with the slope of the first node
            let p = self.ds[0] / self.s[0];
            return self.s[0] * (u / self.ln_u0.exp()).powf(p);
        }
        if x >= (n - 1) as f64 {
            let rest = self.limit - self.s[n - 1];
            let u_end = (self.ln_u0 + self.step * (n - 1) as f64).exp();
            return self.limit - rest * (u_end / u).powf(self.tail_power);
        }
        let k = x.floor() as usize;
        let t = x - k as f64;
        let h = self.step;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.s[k]
            + (t3 - 2.0 * t2 + t) * h * self.ds[k]
            + (-2.0 * t3 + 3.0 * t2) * self.s[k + 1]
            + (t3 - t2) * h * self.ds[k + 1]
    }
}

/// Checks `p^{(α)}_t = e^{-|σ|t} Σ_k t^k (p_t ∗ σ^{∗k})/k!` truncated at
/// `k_max`, and the pointwise domination `p_t ≤ e^{|σ|t} p^{(α)}_t`.
pub fn subordination_relation_check(model: &LevyModel, t: f64, grid: &RadialGrid, k_max: usize) -> Result<AuditReport> {
    if model.is_stable() || model.sigma_mass() <= 0.0 {
        return Err(domain!("the relation needs a model with |σ| > 0"));
    }
    if k_max < 3 {
        return Err(domain!("k_max must be at least 3"));
    }
    let coarse = relation_residuals(model, t, &grid.radii, k_max)?;
    let fine = relation_residuals(model, t, &grid.refined().radii, k_max)?;
    let sm = model.sigma_mass();
    let mut term = 1.0;
    let mut tail = 0.0;
    for k in 1..=k_max + 40 {
        term *= t * sm / k as f64;
        if k > k_max {
            tail += term;
        }
    }
    let mut rep = AuditReport::new("subordination_relation", grid.describe())
        .param("t", t)
        .param("k_max", k_max as f64)
        .param("sigma_mass", sm);
    rep.c_upper = Some(coarse.max_domination_ratio);
    rep.stat("residual", coarse.residual);
    rep.stat("residual_refined", fine.residual);
    rep.stat("tail_bound_relative", (-sm * t).exp() * tail * coarse.sup_ratio);
    rep.stat("domination_violations", coarse.violations as f64);
    rep.stat("domination_violations_refined", fine.violations as f64);
    rep.stat("max_domination_ratio", coarse.max_domination_ratio);
    let ok = coarse.residual <= 1e-3 && coarse.violations == 0;
    let stable = fine.residual <= 1e-3 && fine.violations == 0;
    rep.conclude(ok, stable);
    Ok(rep)
}

struct Relation {
    residual: f64,
    violations: usize,
    max_domination_ratio: f64,
    /// `sup p_t / p^{(α)}_t` over the compared radii, scaling the tail bound.
    sup_ratio: f64,
}

fn relation_residuals(model: &LevyModel, t: f64, radii: &[f64], k_max: usize) -> Result<Relation> {
    let mesh = Mesh::new(radii.to_vec())?;
    let dim = model.dim();
    let parity = dim.parity();
    let lift = |r: f64| if dim == Dim::Three { r } else { 1.0 };
    let eng = KernelEngine::new(model);
    let stable = KernelEngine::new(&model.stable_part());
    let p: Vec<f64> = radii.iter().map(|&r| eng.heat(t, r)).collect();
    let pa: Vec<f64> = radii.iter().map(|&r| stable.heat(t, r)).collect();
    let sm = model.sigma_mass();

    let u_lo = 0.25 * mesh.nodes[0].min(mesh.edges[1] - mesh.nodes[0]);
    let prim = SpacePrimitive::new(|u| model.sigma_1d(u), 0.5 * sm, u_lo, 2.1 * mesh.extent());
    let a = cell_matrix_with(&mesh, parity, |x, y| prim.at(y) - prim.at(x));

    let hint = if dim == Dim::Three { 1.0 } else { 0.0 };
    let mut f: Vec<f64> = p.iter().zip(radii).map(|(v, r)| v * lift(*r)).collect();
    let mut sum = f.clone();
    let mut coef = 1.0;
    for k in 1..=k_max {
        let avg = cell_averages(&mesh, &f, hint);
        f = a.matvec(&avg);
        coef *= t / k as f64;
        for (s, v) in sum.iter_mut().zip(&f) {
            *s += coef * v;
        }
    }
    let decay = (-sm * t).exp();
    let keep = |r: f64| r <= 10.0 && r >= 10.0 * radii[0];
    let mut residual = 0.0f64;
    let mut sup_ratio = 0.0f64;
    for (i, &r) in radii.iter().enumerate() {
        if keep(r) {
            let lhs = decay * sum[i] / lift(r);
            residual = residual.max((lhs - pa[i]).abs() / pa[i]);
            sup_ratio = sup_ratio.max(p[i] / pa[i]);
        }
    }
    let grow = (sm * t).exp();
    let mut violations = 0;
    let mut max_ratio = 0.0f64;
    for i in 0..radii.len() {
        let ratio = p[i] / (grow * pa[i]);
        max_ratio = max_ratio.max(ratio);
        if p[i] > grow * pa[i] * (1.0 + 1e-8) {
            violations += 1;
        }
    }
    if !residual.is_finite() {
        return Err(numeric!("convolution powers of σ are not finite"));
    }
    Ok(Relation { residual, violations, max_domination_ratio: max_ratio, sup_ratio })
}

/// `(1/2) ∫_{-1}^{1} g_λ(√(r_x² + r_y² - 2 r_x r_y u)) du` in `d = 3`, by
/// Gauss–Legendre panels refined geometrically toward the coincidence
/// `w = |r_x - r_y|`, with `nodes` points per panel.
pub fn angular_averaged_resolvent_with(model: &LevyModel, lambda: f64, r_x: f64, r_y: f64, nodes: usize) -> Result<f64> {
    if model.d() != 3 {
        return Err(domain!("the angular average is for d = 3"));
    }
    if !(r_x > 0.0 && r_y > 0.0 && lambda > 0.0) {
        return Err(domain!("need r_x, r_y, λ > 0"));
    }
    let (lo, hi) = ( (r_x - r_y).abs(), r_x + r_y);
    if lo <= 1e-12 * hi && model.alpha() <= 1.0 {
        return Err(domain!("the angular average diverges at r_x = r_y for α ≤ 1"));
    }
    let eng = KernelEngine::new(model);
    let gl = GaussLegendre::new(nodes);
    // with w = |x - y|: (1/2)∫ g du = (1/(2 r_x r_y)) ∫_lo^hi g(w) w dw
    let f = |w: f64| eng.resolvent_fourier(lambda, w) * w;
    // panels [lo + span/2^{k+1}, lo + span/2^k] until they are small
    // against the distance of lo from the singularity at w = 0
    let span = hi - lo;
    let mut levels = 0;
    while levels < 60 && span * 0.5f64.powi(levels) > 1e-2 * lo {
        levels += 1;
    }
    let mut acc = gl.integrate(lo, lo + span * 0.5f64.powi(levels), f);
    for k in 0..levels {
        acc += gl.integrate(lo + span * 0.5f64.powi(k + 1), lo + span * 0.5f64.powi(k), f);
    }
    let v = acc / (2.0 * r_x * r_y);
    if !v.is_finite() {
        return Err(numeric!("angular average failed at r_x = {r_x}, r_y = {r_y}"));
    }
    Ok(v)
}

/// [`angular_averaged_resolvent_with`] at 32 nodes per panel.
pub fn angular_averaged_resolvent(model: &LevyModel, lambda: f64, r_x: f64, r_y: f64) -> Result<f64> {
    angular_averaged_resolvent_with(model, lambda, r_x, r_y, 32)
}

/// Compares the `n`-fold convolution power of `g_λ` (in `d = 1`, computed in
/// space) with `∫₀^∞ t^{n-1}/(n-1)! e^{-λt} p_t dt`.
pub fn resolvent_convolution_check(model: &LevyModel, lambda: f64, n: usize, grid: &RadialGrid) -> Result<AuditReport> {
    if model.d() != 1 {
        return Err(domain!("the convolution check runs in d = 1"));
    }
    if !(1..=3).contains(&n) {
        return Err(domain!("n must be 1, 2 or 3"));
    }
    let coarse = convolution_residual(model, lambda, n, &grid.radii)?;
    let fine = convolution_residual(model, lambda, n, &grid.refined().radii)?;
    let mut rep = AuditReport::new("resolvent_convolution", grid.describe()).param("lambda", lambda).param("n", n as f64);
    rep.stat("residual", coarse.0);
    rep.stat("residual_refined", fine.0);
    rep.stat("mass", coarse.1);
    rep.stat("mass_target", lambda.powi(-(n as i32)));
    let tol = 1e-2;
    let mass_ok = (coarse.1 * lambda.powi(n as i32) - 1.0).abs() <= 1e-3;
    rep.conclude(coarse.0 <= tol && mass_ok, fine.0 <= tol);
    Ok(rep)
}

/// `(residual, mass of the convolution power)`.
fn convolution_residual(model: &LevyModel, lambda: f64, n: usize, radii: &[f64]) -> Result<(f64, f64)> {
    let eng = KernelEngine::new(model);
    let laplace = |r: f64| -> f64 {
        let mut fact = 1.0;
        for k in 1..n {
            fact *= k as f64;
        }
        let scale = r.max(1e-3).powf(model.alpha()).min(1.0 / lambda);
        exp_sinh(|t| t.powi(n as i32 - 1) / fact * (-lambda * t).exp() * eng.heat(t, r), scale, 1e-10).0
    };
    let rhs: Vec<f64> = radii.iter().map(|&r| laplace(r)).collect();
    if n == 1 {
        let mesh = Mesh::new(radii.to_vec())?;
        return Ok((0.0, mass_1d(&mesh, &rhs, |r| 1.0 / (lambda + model.psi(r)))));
    }
    let mesh = Mesh::new(radii.to_vec())?;
    let tr = Transforms::new();
    let g: Vec<f64> = radii.iter().map(|&r| eng.resolvent_fourier(lambda, r)).collect();
    let table = table_for(&tr, &mesh, |r| 1.0 / (lambda + model.psi(r)));
    let mut f = g.clone();
    // g ~ r^{α-1} near 0; each convolution adds α to the exponent
    let mut e = model.alpha() - 1.0;
    for _ in 1..n {
        f = apply_line_kernel(Dim::One, |a, b| table.integral(a, b), &mesh, &f, e.min(0.0), |r, x, p| {
            table.tail_action(r, x, p, Parity::Even)
        });
        e += model.alpha();
    }
    let keep = interior(radii);
    let mut worst = 0.0f64;
    for (i, &r) in radii.iter().enumerate() {
        if keep(r) {
            worst = worst.max((f[i] - rhs[i]).abs() / rhs[i]);
        }
    }
    let weight = |r: f64| (lambda + model.psi(r)).powi(-(n as i32));
    Ok((worst, mass_1d(&mesh, &f, weight)))
}

/// Mass of an even function on the line: the cells between the first and
/// the last node from the values, the origin cell and the region beyond the
/// grid in closed form from the Fourier weight `a`.
fn mass_1d(mesh: &Mesh, values: &[f64], a: impl Fn(f64) -> f64) -> f64 {
    let tr = Transforms::new();
    let rule = tr.rule_ref();
    let a0 = a(0.0);
    let n = mesh.len();
    let core = rule.integrate(Oscillation::Sine, mesh.edges[1], |r| a(r) / r) * 2.0 / PI;
    let outer = rule.integrate(Oscillation::Sine, mesh.edges[n], |r| (a0 - a(r)) / r) * 2.0 / PI;
    let avg = cell_averages(mesh, values, 0.0);
    let inner: f64 = avg.iter().zip(mesh.widths()).skip(1).map(|(v, w)| v * w).sum();
    core + 2.0 * inner + outer
}

/// Line-kernel form of the angular average,
/// `(q(|r_x - r_y|) - q(r_x + r_y)) / (4π r_x r_y)` with `q` the line kernel
/// of `1/(λ + ψ)`; exact, and used to validate the quadrature.
pub fn angular_average_line_form(model: &LevyModel, lambda: f64, r_x: f64, r_y: f64) -> f64 {
    let tr = Transforms::new();
    let a = |rho: f64| 1.0 / (lambda + model.psi(rho));
    let scale = lambda.powf(1.0 / model.alpha());
    (tr.line(a, (r_x - r_y).abs(), scale) - tr.line(a, r_x + r_y, scale)) / (4.0 * PI * r_x * r_y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::cauchy_oracle;

    #[test]
    fn chapman_kolmogorov_stable_3d() {
        let model = LevyModel::stable(3, 1.0).unwrap();
        let grid = RadialGrid::log(1e-3, 1e2, 256, alloc::vec![0.5, 1.0]).unwrap();
        let tab = KernelTable::heat(&model, &grid).unwrap();
        let res = chapman_kolmogorov_residual(&tab, 0.5, 0.5).unwrap();
        assert!(res <= 1e-4, "{res}");
        // the table itself agrees with the oracle
        for (i, &r) in grid.radii.iter().enumerate() {
            let w = cauchy_oracle(3, 1.0, r);
            assert!((tab.value(1, i) - w).abs() <= 1e-6 * w);
        }
    }

    #[test]
    fn angular_average_matches_line_form() {
        let model = LevyModel::relativistic(3, 1.0, 1.0).unwrap();
        for (x, y) in [(1.0, 1.05), (0.3, 2.0), (5.0, 4.0)] {
            let q = angular_averaged_resolvent(&model, 1.0, x, y).unwrap();
            let exact = angular_average_line_form(&model, 1.0, x, y);
            assert!((q - exact).abs() < 1e-6 * exact, "{x} {y}: {q} {exact}");
            let swapped = angular_averaged_resolvent(&model, 1.0, y, x).unwrap();
            assert_eq!(q, swapped);
        }
        assert!(angular_averaged_resolvent(&model, 1.0, 1.0, 1.0).is_err());
        let near0 = angular_averaged_resolvent(&model, 1.0, 2.0, 1e-6).unwrap();
        let g = KernelEngine::new(&model).resolvent_fourier(1.0, 2.0);
        assert!((near0 - g).abs() < 1e-5 * g);
    }

    #[test]
    fn space_primitive_of_an_exponential() {
        let prim = SpacePrimitive::new(|u| (-u).exp(), 1.0, 1e-4, 1e2);
        for u in [1e-5, 0.3, 1.0, 2.5, 500.0] {
            let exact = -(-u).exp_m1();
            assert!((prim.at(u) - exact).abs() < 1e-9, "{u} {}", prim.at(u) - exact);
            assert_eq!(prim.at(-u), -prim.at(u));
        }
    }

    #[test]
    fn chapman_kolmogorov_relativistic_1d() {
        let model = LevyModel::relativistic(1, 0.5, 1.0).unwrap();
        let grid = RadialGrid::log(1e-3, 1e2, 256, vec![0.25, 0.5]).unwrap();
        let tab = KernelTable::heat(&model, &grid).unwrap();
        let res = chapman_kolmogorov_residual(&tab, 0.25, 0.25).unwrap();
        assert!(res <= 1e-3, "{res}");
    }

    #[test]
    fn subordination_relation_holds() {
        let model = LevyModel::relativistic(1, 0.5, 1.0).unwrap();
        let grid = RadialGrid::log(1e-3, 1e2, 256, vec![0.5]).unwrap();
        let rep = subordination_relation_check(&model, 0.5, &grid, 8).unwrap();
        assert!(rep.residuals["residual"] <= 1e-3, "{:?}", rep.residuals);
        assert_eq!(rep.residuals["domination_violations"], 0.0);
    }

    #[test]
    fn resolvent_convolution_square() {
        let model = LevyModel::relativistic(1, 0.5, 1.0).unwrap();
        let grid = RadialGrid::log(1e-3, 1e2, 200, vec![1.0]).unwrap();
        let rep = resolvent_convolution_check(&model, 1.0, 2, &grid).unwrap();
        assert!(rep.residuals["residual"] <= 1e-2, "{:?}", rep.residuals);
        assert!((rep.residuals["mass"] - 1.0).abs() <= 1e-3, "{:?}", rep.residuals);
    }
}
