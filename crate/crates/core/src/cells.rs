//! Cell operators on the half-line.
//!
//! A spectral weight `a(ρ)` defines the line kernel `q(u)` and its primitive
//! `F(u) = ∫₀^u q`. On a [`Mesh`] the operator with kernel
//! `q(x - z) ± q(x + z)` (even or odd extension) maps cell averages to node
//! values through exact primitive differences:
//! `A_ij = ∫_{C_j} q(r_i - z) ± q(r_i + z) dz`.
//!
//! `F` is tabulated once per weight on a log grid and interpolated by quintic
//! Hermite polynomials from `F`, `q` and `q'`. Beyond the point where `F`
//! reaches a quarter of its limit `a(0)/2`, the complement
//! `G = a(0)/2 - F` is tabulated instead, so that differences far from the
//! diagonal keep their relative accuracy.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::grid::{Mesh, Parity};
use crate::kernel::Transforms;
use crate::linalg::Matrix;
use crate::quad::{FourierRule, GaussLegendre, Oscillation};

/// Default table density in nodes per decade of `u`.
pub const NODES_PER_DECADE: f64 = 40.0;

#[derive(Debug, Clone, Copy)]
enum Repr {
    /// `F(|u|)`.
    Low(f64),
    /// `a(0)/2 - F(|u|)`.
    High(f64),
}

/// Tabulated primitive of a line kernel.
#[derive(Debug, Clone)]
pub struct PrimitiveTable {
    half_mass: f64,
    ln_u0: f64,
    step: f64,
    u: Vec<f64>,
    /// `F` below `switch`, `G` from `switch` on.
    val: Vec<f64>,
    q: Vec<f64>,
    dq: Vec<f64>,
    switch: usize,
    tail_power: f64,
}

impl PrimitiveTable {
    /// Tabulates the primitive of the kernel of `a` on `[u_lo, u_hi]`.
    /// `a0 = a(0)` must be finite.
    pub fn new(tr: &Transforms, a: impl Fn(f64) -> f64, a0: f64, u_lo: f64, u_hi: f64, per_decade: f64) -> Self {
        let rule = tr.rule();
        let step = core::f64::consts::LN_10 / per_decade;
        let ln_u0 = u_lo.ln();
        let n = ((u_hi.ln() - ln_u0) / step).ceil() as usize + 1;
        let half = 0.5 * a0;
        let mut u = Vec::with_capacity(n);
        let mut val = Vec::with_capacity(n);
        let mut q = Vec::with_capacity(n);
        let mut dq = Vec::with_capacity(n);
        let mut switch = n;
        for k in 0..n {
            let x = (ln_u0 + step * k as f64).exp();
            u.push(x);
            q.push(rule.integrate(Oscillation::Cosine, x, &a) / PI);
            dq.push(-rule.integrate(Oscillation::Sine, x, |rho| a(rho) * rho) / PI);
            if switch == n {
                let f = rule.integrate(Oscillation::Sine, x, |rho| a(rho) / rho) / PI;
                if f < 0.5 * half {
                    val.push(f);
                    continue;
                }
                switch = k;
            }
            val.push(rule.integrate(Oscillation::Sine, x, |rho| (a0 - a(rho)) / rho) / PI);
        }
        let last = n - 1;
        let tail_power = if switch <= last && val[last] > 0.0 { (u[last] * q[last] / val[last]).max(1e-3) } else { 1.0 };
        Self { half_mass: half, ln_u0, step, u, val, q, dq, switch, tail_power }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn u_range(&self) -> (f64, f64) {
        (self.u[0], *self.u.last().unwrap())
    }

    fn repr(&self, x: f64) -> Repr {
        let n = self.u.len();
        if x <= self.u[0] {
            let f0 = if self.switch == 0 { self.half_mass - self.val[0] } else { self.val[0] };
            return Repr::Low(f0 * x / self.u[0]);
        }
        if x >= self.u[n - 1] {
            if self.switch < n {
                return Repr::High(self.val[n - 1] * (self.u[n - 1] / x).powf(self.tail_power));
            }
            return Repr::Low(self.val[n - 1]);
        }
        let mut k = ((x.ln() - self.ln_u0) / self.step) as usize;
        k = k.min(n - 2);
        if self.u[k] > x {
            k -= 1;
        } else if self.u[k + 1] < x {
            k += 1;
        }
        let (v0, v1, s) = if k >= self.switch {
            (self.val[k], self.val[k + 1], -1.0)
        } else if k + 1 == self.switch {
            // left end low, right end high: convert right end to F
            (self.val[k], self.half_mass - self.val[k + 1], 1.0)
        } else {
            (self.val[k], self.val[k + 1], 1.0)
        };
        let h = self.u[k + 1] - self.u[k];
        let t = (x - self.u[k]) / h;
        let v = hermite5(v0, v1, s * self.q[k] * h, s * self.q[k + 1] * h, s * self.dq[k] * h * h, s * self.dq[k + 1] * h * h, t);
        if k >= self.switch {
            Repr::High(v)
        } else {
            Repr::Low(v)
        }
    }

    /// `F(u)`, odd in `u`.
    pub fn primitive(&self, u: f64) -> f64 {
        let f = match self.repr(u.abs()) {
            Repr::Low(f) => f,
            Repr::High(g) => self.half_mass - g,
        };
        if u < 0.0 {
            -f
        } else {
            f
        }
    }

    /// `∫_a^b q(u) du`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if (a >= 0.0) == (b >= 0.0) {
            let sign = if a >= 0.0 { 1.0 } else { -1.0 };
            let d = match (self.repr(a.abs()), self.repr(b.abs())) {
                (Repr::High(ga), Repr::High(gb)) => ga - gb,
                (Repr::Low(fa), Repr::Low(fb)) => fb - fa,
                (ra, rb) => self.as_f(rb) - self.as_f(ra),
            };
            sign * d
        } else {
            self.primitive(b) - self.primitive(a)
        }
    }

    fn as_f(&self, r: Repr) -> f64 {
        match r {
            Repr::Low(f) => f,
            Repr::High(g) => self.half_mass - g,
        }
    }

    /// Interpolated kernel value `q(u)` (tabulated range only).
    pub fn kernel(&self, u: f64) -> f64 {
        let x = u.abs();
        let n = self.u.len();
        if x <= self.u[0] {
            return self.q[0];
        }
        if x >= self.u[n - 1] {
            return self.q[n - 1] * (self.u[n - 1] / x).powf(1.0 + self.tail_power);
        }
        let k = (self.u.partition_point(|&v| v <= x) - 1).min(n - 2);
        let h = self.u[k + 1] - self.u[k];
        let t = (x - self.u[k]) / h;
        // cubic Hermite from q and q'
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t),
            t * (1.0 - t) * (1.0 - t),
            t * t * (3.0 - 2.0 * t),
            t * t * (t - 1.0),
        );
        h00 * self.q[k] + h10 * h * self.dq[k] + h01 * self.q[k + 1] + h11 * h * self.dq[k + 1]
    }

    /// Node-from-cell matrix `A_ij = ∫_{C_j} q(r_i - z) ± q(r_i + z) dz`,
    /// clamped at zero.
    pub fn cell_matrix(&self, mesh: &Mesh, parity: Parity) -> Matrix {
        let n = mesh.len();
        let s = parity.sign();
        Matrix::from_fn(n, n, |i, j| {
            let r = mesh.nodes[i];
            let (a, b) = (mesh.edges[j], mesh.edges[j + 1]);
            let v = self.integral(r - b, r - a) + s * self.integral(r + a, r + b);
            v.max(0.0)
        })
    }

    /// `∫_{x}^{∞} (q(r - z) ± q(r + z)) w(z) dz` for a power-law weight
    /// `w(z) = z^{-p}`, used for contributions beyond the mesh.
    pub fn tail_action(&self, r: f64, x: f64, p: f64, parity: Parity) -> f64 {
        // substitute z = x e^s and integrate with panels
        let gl = crate::quad::GaussLegendre::new(16);
        let s = parity.sign();
        let mut acc = 0.0;
        let mut lo = 0.0;
        for _ in 0..60 {
            let hi = lo + 0.25;
            acc += gl.integrate(lo, hi, |v| {
                let z = x * v.exp();
                (self.kernel(r - z) + s * self.kernel(r + z)) * z.powf(1.0 - p)
            });
            lo = hi;
        }
        // beyond x e^{15}: the kernel is in its power tail
        acc
    }
}

/// Quintic Hermite interpolant on `[0, 1]` with scaled derivatives.
fn hermite5(p0: f64, p1: f64, d0: f64, d1: f64, s0: f64, s1: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let h2 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5;
    let h3 = 0.5 * t3 - t4 + 0.5 * t5;
    let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let h5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    h0 * p0 + h1 * d0 + h2 * s0 + h3 * s1 + h4 * d1 + h5 * p1
}

/// `e₁(z) = ∫₀¹ e^{-zs} ds` and `e₂(z) = ∫₀¹ s e^{-zs} ds`.
pub fn e1_e2(z: f64) -> (f64, f64) {
    if z < 1e-3 {
        let e1 = 1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0;
        let e2 = 0.5 - z / 3.0 + z * z / 8.0 - z * z * z / 30.0;
        return (e1, e2);
    }
    let em = (-z).exp();
    let e1 = -(-z).exp_m1() / z;
    let e2 = (e1 - em) / z;
    (e1, e2)
}

/// Cell averages of `κ z^{-α}`. In the cell touching the origin the
/// potential is weighted by `(z/r)^e`, the local power behaviour of the
/// function it multiplies; elsewhere that function is smooth on the cell
/// and the plain average is used, so every parity sector sees the same
/// potential away from the origin.
pub fn potential_averages(mesh: &Mesh, kappa: f64, alpha: f64, hint: f64) -> Vec<f64> {
    (0..mesh.len())
        .map(|j| {
            let (a, b, r) = (mesh.edges[j], mesh.edges[j + 1], mesh.nodes[j]);
            let hint = if j == 0 { hint } else { 0.0 };
            let p = 1.0 - alpha + hint;
            let integral = if p.abs() < 1e-12 {
                (b / a).ln()
            } else {
                let prim = |z: f64| if z == 0.0 { 0.0 } else { z.powf(p) / p };
                prim(b) - prim(a)
            };
            kappa * integral * r.powf(-hint) / (b - a)
        })
        .collect()
}

/// Cell average of `(z/r)^e` relative to the node value.
pub fn hint_averages(mesh: &Mesh, hint: f64) -> Vec<f64> {
    (0..mesh.len())
        .map(|j| {
            let (a, b, r) = (mesh.edges[j], mesh.edges[j + 1], mesh.nodes[j]);
            let p = 1.0 + hint;
            (b.powf(p) - a.powf(p)) / (p * (b - a) * r.powf(hint))
        })
        .collect()
}

/// Range of `|r_i ± e_j|` needed by cell operators on `mesh`.
pub fn table_range(mesh: &Mesh) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    for i in 0..mesh.len() {
        lo = lo.min(mesh.nodes[i] - mesh.edges[i]).min(mesh.edges[i + 1] - mesh.nodes[i]);
    }
    (0.5 * lo, 2.02 * mesh.extent())
}

/// Primitive table of the weight `a` for `mesh`.
pub fn table_for(tr: &Transforms, mesh: &Mesh, a: impl Fn(f64) -> f64) -> PrimitiveTable {
    let (lo, hi) = table_range(mesh);
    let a0 = a(0.0);
    PrimitiveTable::new(tr, a, a0, lo, hi, NODES_PER_DECADE)
}

/// Cell averages of a function known at the nodes. On every cell away from
/// the origin the cubic through four neighbouring nodes (in `ln r`) is
/// integrated by Gauss–Legendre; the cell touching the origin uses the power
/// law `(z/r)^e` with local exponent `hint`.
pub fn cell_averages(mesh: &Mesh, values: &[f64], hint: f64) -> Vec<f64> {
    let n = mesh.len();
    assert_eq!(values.len(), n);
    let gl = GaussLegendre::new(4);
    let ln: Vec<f64> = mesh.nodes.iter().map(|r| r.ln()).collect();
    let first = hint_averages(mesh, hint)[0];
    (0..n)
        .map(|j| {
            if j == 0 || n < 4 {
                return values[j] * if j == 0 { first } else { 1.0 };
            }
            let k0 = j.saturating_sub(1).min(n - 4);
            let (a, b) = (mesh.edges[j], mesh.edges[j + 1]);
            let interp = |x: f64| {
                let lx = x.ln();
                let mut acc = 0.0;
                for p in 0..4 {
                    let mut w = 1.0;
                    for q in 0..4 {
                        if p != q {
                            w *= (lx - ln[k0 + q]) / (ln[k0 + p] - ln[k0 + q]);
                        }
                    }
                    acc += w * values[k0 + p];
                }
                acc
            };
            gl.integrate(a, b, interp) / (b - a)
        })
        .collect()
}

/// Cubic Lagrange interpolation in `ln r` of nodal values.
pub fn interpolate_log(radii: &[f64], values: &[f64], r: f64) -> f64 {
    let n = radii.len();
    let k = radii.partition_point(|&x| x <= r).clamp(2, n - 2) - 2;
    let k = k.min(n - 4);
    let lr = r.ln();
    let mut acc = 0.0;
    for p in 0..4 {
        let mut w = 1.0;
        for q in 0..4 {
            if p != q {
                w *= (lr - radii[k + q].ln()) / (radii[k + p].ln() - radii[k + q].ln());
            }
        }
        acc += w * values[k + p];
    }
    acc
}

/// `∫₀^∞ f` for `f` known at the nodes: cell averages on the mesh plus the
/// power law through the last two nodes beyond it.
pub fn line_integral(mesh: &Mesh, values: &[f64], hint: f64) -> f64 {
    let avg = cell_averages(mesh, values, hint);
    let inner: f64 = avg.iter().zip(mesh.widths()).map(|(a, w)| a * w).sum();
    inner + power_tail(mesh, values)
}

/// `∫_E^∞` of the power law through the last two nodes, `E` the outer edge.
/// Zero when the values do not decay like an integrable power.
pub fn power_tail(mesh: &Mesh, values: &[f64]) -> f64 {
    let n = mesh.len();
    let (r1, r2) = (mesh.nodes[n - 2], mesh.nodes[n - 1]);
    let (v1, v2) = (values[n - 2], values[n - 1]);
    if !(v1 > 0.0 && v2 > 0.0) {
        return 0.0;
    }
    let p = -(v2 / v1).ln() / (r2 / r1).ln();
    if p <= 1.0 {
        return 0.0;
    }
    let e = mesh.edges[n];
    v2 * (e / r2).powf(-p) * e / (p - 1.0)
}

/// Cell operator `A_ij = ∫_{C_j} k(r_i - z) ± k(r_i + z) dz` of an even
/// kernel `k`, given `integral(a, b) = ∫_a^b k`.
pub fn cell_matrix_with(mesh: &Mesh, parity: Parity, integral: impl Fn(f64, f64) -> f64) -> Matrix {
    let n = mesh.len();
    let s = parity.sign();
    Matrix::from_fn(n, n, |i, j| {
        let r = mesh.nodes[i];
        let (a, b) = (mesh.edges[j], mesh.edges[j + 1]);
        (integral(r - b, r - a) + s * integral(r + a, r + b)).max(0.0)
    })
}

impl Transforms {
    pub(crate) fn rule(&self) -> &FourierRule {
        self.rule_ref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cauchy_primitive_table() {
        // a = e^{-tρ}: q = t/(π(t²+u²)), F = atan(u/t)/π
        let t = 0.3;
        let tr = Transforms::new();
        let tab = PrimitiveTable::new(&tr, |r| (-t * r).exp(), 1.0, 1e-6, 1e3, NODES_PER_DECADE);
        for &u in &[1e-5, 3e-3, 0.2, 0.29, 1.7, 40.0, 900.0, -2.0] {
            let want = (u / t).atan() / PI;
            assert!((tab.primitive(u) - want).abs() < 1e-11, "u={u}: {} vs {want}", tab.primitive(u));
            let q = t / (PI * (t * t + u * u));
            assert!((tab.kernel(u) - q).abs() < 1e-5 * q, "u={u}: {}", (tab.kernel(u) - q) / q);
        }
        // far-field differences keep relative accuracy
        let (a, b) = (500.0, 500.5);
        let want = ((b / t).atan() - (a / t).atan()) / PI;
        let got = tab.integral(a, b);
        assert!(((got - want) / want).abs() < 1e-8, "{got} vs {want}");
        let want = ((0.1f64 / t).atan() + (0.2f64 / t).atan()) / PI;
        assert!((tab.integral(-0.1, 0.2) - want).abs() < 1e-14);
    }

    #[test]
    fn cell_matrix_conserves_mass() {
        // even sector: Σ_j A_ij → total mass 1 for cells covering a wide range
        let t = 0.05;
        let tr = Transforms::new();
        let mesh = Mesh::log(1e-3, 1e3, 200).unwrap();
        let tab = PrimitiveTable::new(&tr, |r| (-t * r).exp(), 1.0, 1e-6, 3e3, NODES_PER_DECADE);
        let a = tab.cell_matrix(&mesh, Parity::Even);
        for i in [0, 50, 100] {
            let s: f64 = a.row(i).iter().sum();
            let (e, r) = (mesh.extent(), mesh.nodes[i]);
            let outside = 1.0 - (((e + r) / t).atan() + ((e - r) / t).atan()) / PI;
            assert!((s + outside - 1.0).abs() < 1e-12, "{s} {outside}");
        }
    }

    #[test]
    fn exponential_integrals() {
        for &z in &[1e-6, 5e-4, 2e-3, 0.5, 30.0] {
            let (e1, e2) = e1_e2(z);
            let gl = crate::quad::GaussLegendre::new(30);
            let w1 = gl.integrate(0.0, 1.0, |s| (-z * s).exp());
            let w2 = gl.integrate(0.0, 1.0, |s| s * (-z * s).exp());
            assert!((e1 - w1).abs() < 1e-13 && (e2 - w2).abs() < 1e-13, "z={z}");
        }
    }

    #[test]
    fn potential_average_is_exact_for_hinted_powers() {
        let mesh = Mesh::log(1e-2, 1.0, 20).unwrap();
        let v = potential_averages(&mesh, 0.3, 0.5, -0.2);
        // cell 0: (1/|C|) ∫₀^b 0.3 z^{-0.5} (z/r)^{-0.2} dz
        let (b, r) = (mesh.edges[1], mesh.nodes[0]);
        let want = 0.3 * b.powf(0.3) / 0.3 * r.powf(0.2) / b;
        assert!((v[0] - want).abs() < 1e-12 * want);
        let h = hint_averages(&mesh, 0.0);
        assert!(h.iter().all(|x| (x - 1.0).abs() < 1e-14));
    }
}
