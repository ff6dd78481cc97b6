//! Catalog of radial Lévy densities `ν ≤ ν^{(α)}` with their symbols.
//!
//! Every model is a perturbation of the isotropic α-stable density
//! `ν^{(α)}(r) = c_{d,α} r^{-d-α}` by a nonnegative finite measure
//! `σ = ν^{(α)} - ν`, so that `ψ(ρ) = ρ^α - ψ_σ(ρ)` with
//! `0 ≤ ψ_σ ≤ |σ|`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

#[allow(unused_imports)]
use num_traits::Float;

use crate::audit::{relative_change, AuditReport};
use crate::error::{domain, numeric};
use crate::grid::{log_space, Dim, RadialGrid};
use crate::quad::{exp_sinh, FourierRule, GaussLegendre, Oscillation};
use crate::special::{bessel_k_scaled, gamma};
use crate::Result;

/// `c_{d,α} = α 2^{α-1} Γ((d+α)/2) / (π^{d/2} Γ(1-α/2))`.
pub fn stable_density_constant(d: u32, alpha: f64) -> Result<f64> {
    let dim = Dim::new(d)?;
    check_alpha(dim, alpha)?;
    let d = d as f64;
    Ok(alpha * 2f64.powf(alpha - 1.0) * gamma(0.5 * (d + alpha)) / (PI.powf(0.5 * d) * gamma(1.0 - 0.5 * alpha)))
}

fn check_alpha(dim: Dim, alpha: f64) -> Result<()> {
    let upper = match dim {
        Dim::One => 1.0,
        Dim::Three => 2.0,
    };
    if alpha > 0.0 && alpha < upper {
        Ok(())
    } else {
        Err(domain!("alpha must lie in (0, {upper}) for d = {}, got {alpha}", dim.get()))
    }
}

fn default_r_cut() -> f64 {
    1.0
}

/// The perturbation family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LevyKind {
    /// `ν = ν^{(α)}`.
    Stable,
    /// `ψ(ρ) = (ρ² + m^{2/α})^{α/2} - m`.
    Relativistic { m: f64 },
    /// `ν = e^{-λ r^β} ν^{(α)}`.
    Tempered { lambda: f64, beta: f64 },
    /// `ν = ν^{(α)} min(1, (r/r_cut)^{-γ})`.
    Layered {
        gamma: f64,
        #[serde(default = "default_r_cut")]
        r_cut: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelSpec {
    d: u32,
    alpha: f64,
    #[serde(flatten)]
    kind: LevyKind,
}

/// Tabulated `ψ_σ` for models whose symbol has no closed form.
#[derive(Debug, Clone)]
struct SymbolCorrection {
    ln_rho0: f64,
    step: f64,
    ln_psi_sigma: Vec<f64>,
    sigma_hat_last: f64,
    decay_hi: f64,
    slope_lo: f64,
}

/// An immutable Lévy model; all evaluations are pure.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ModelSpec", into = "ModelSpec")]
pub struct LevyModel {
    dim: Dim,
    alpha: f64,
    kind: LevyKind,
    c_stable: f64,
    c_stable_1d: f64,
    sigma_mass: f64,
    correction: Option<SymbolCorrection>,
}

impl PartialEq for LevyModel {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.alpha == other.alpha && self.kind == other.kind
    }
}

impl TryFrom<ModelSpec> for LevyModel {
    type Error = crate::Error;
    fn try_from(s: ModelSpec) -> Result<Self> {
        LevyModel::new(s.d, s.alpha, s.kind)
    }
}

impl From<LevyModel> for ModelSpec {
    fn from(m: LevyModel) -> Self {
        ModelSpec { d: m.d(), alpha: m.alpha, kind: m.kind }
    }
}

impl LevyModel {
    pub fn new(d: u32, alpha: f64, kind: LevyKind) -> Result<Self> {
        let dim = Dim::new(d)?;
        check_alpha(dim, alpha)?;
        match kind {
            LevyKind::Stable => {}
            LevyKind::Relativistic { m } => {
                if !(m > 0.0 && m.is_finite()) {
                    return Err(domain!("relativistic mass must be positive, got {m}"));
                }
            }
            LevyKind::Tempered { lambda, beta } => {
                if !(lambda > 0.0 && lambda.is_finite()) {
                    return Err(domain!("tempering rate must be positive, got {lambda}"));
                }
                if !(beta > alpha && beta.is_finite()) {
                    return Err(domain!("tempering exponent must exceed alpha, got {beta}"));
                }
            }
            LevyKind::Layered { gamma, r_cut } => {
                if !(gamma > 0.0 && gamma.is_finite()) || !(r_cut > 0.0 && r_cut.is_finite()) {
                    return Err(domain!("layered model needs gamma > 0 and r_cut > 0"));
                }
            }
        }
        let mut model = Self {
            dim,
            alpha,
            kind,
            c_stable: stable_density_constant(d, alpha)?,
            c_stable_1d: stable_density_constant(1, alpha.min(0.999_999_999))?,
            sigma_mass: 0.0,
            correction: None,
        };
        if alpha < 1.0 {
            model.c_stable_1d = stable_density_constant(1, alpha)?;
        } else {
            // the line reduction of a d = 3 stable density with α ≥ 1 keeps
            // the same constant formula
            let d1 = 1.0;
            model.c_stable_1d =
                alpha * 2f64.powf(alpha - 1.0) * gamma(0.5 * (d1 + alpha)) / (PI.sqrt() * gamma(1.0 - 0.5 * alpha));
        }
        model.sigma_mass = match kind {
            LevyKind::Stable => 0.0,
            LevyKind::Relativistic { m } => m,
            LevyKind::Tempered { lambda, beta } => {
                let d = d as f64;
                2f64.powf(alpha) * gamma(0.5 * (d + alpha)) * gamma(1.0 - alpha / beta) * lambda.powf(alpha / beta)
                    / (gamma(0.5 * d) * gamma(1.0 - 0.5 * alpha))
            }
            LevyKind::Layered { .. } => model.sigma_mass_numeric()?,
        };
        if matches!(kind, LevyKind::Tempered { .. } | LevyKind::Layered { .. }) {
            model.correction = Some(model.build_correction());
        }
        Ok(model)
    }

    pub fn stable(d: u32, alpha: f64) -> Result<Self> {
        Self::new(d, alpha, LevyKind::Stable)
    }

    pub fn relativistic(d: u32, alpha: f64, m: f64) -> Result<Self> {
        Self::new(d, alpha, LevyKind::Relativistic { m })
    }

    pub fn tempered(d: u32, alpha: f64, lambda: f64, beta: f64) -> Result<Self> {
        Self::new(d, alpha, LevyKind::Tempered { lambda, beta })
    }

    pub fn layered(d: u32, alpha: f64, gamma: f64) -> Result<Self> {
        Self::new(d, alpha, LevyKind::Layered { gamma, r_cut: 1.0 })
    }

    /// The α-stable model with the same dimension and index.
    pub fn stable_part(&self) -> Self {
        Self::stable(self.d(), self.alpha).expect("parameters already validated")
    }

    pub fn d(&self) -> u32 {
        self.dim.get()
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kind(&self) -> LevyKind {
        self.kind
    }

    pub fn is_stable(&self) -> bool {
        self.kind == LevyKind::Stable
    }

    /// `|σ|`, analytic where available.
    pub fn sigma_mass(&self) -> f64 {
        self.sigma_mass
    }

    pub fn stable_constant(&self) -> f64 {
        self.c_stable
    }

    /// Symbol `ψ(ρ)` with argument checking.
    /// Constant of the projected stable density `c r^{-1-α}` on a line.
    pub fn stable_constant_1d(&self) -> f64 {
        self.c_stable_1d
    }

    /// The mass `m` of a relativistic model.
    pub fn relativistic_mass(&self) -> Option<f64> {
        match self.kind {
            LevyKind::Relativistic { m } => Some(m),
            _ => None,
        }
    }

    pub fn symbol(&self, rho: f64) -> Result<f64> {
        if !(rho >= 0.0) {
            return Err(domain!("symbol needs rho >= 0, got {rho}"));
        }
        Ok(self.psi(rho))
    }

    /// Symbol `ψ(ρ)` for `ρ ≥ 0`, unchecked.
    pub fn psi(&self, rho: f64) -> f64 {
        let a = self.alpha;
        match self.kind {
            LevyKind::Stable => rho.powf(a),
            LevyKind::Relativistic { m } => {
                let big_m = m.powf(1.0 / a);
                let q = rho / big_m;
                m * (0.5 * a * (q * q).ln_1p()).exp_m1()
            }
            _ => (rho.powf(a) - self.psi_sigma(rho)).max(0.0),
        }
    }

    /// `ψ_σ(ρ) = ρ^α - ψ(ρ) = ∫(1 - cos ρy) σ(y) dy ∈ [0, |σ|]`.
    pub fn psi_sigma(&self, rho: f64) -> f64 {
        match self.kind {
            LevyKind::Stable => 0.0,
            LevyKind::Relativistic { .. } => rho.powf(self.alpha) - self.psi(rho),
            _ => {
                if rho == 0.0 {
                    return 0.0;
                }
                let c = self.correction.as_ref().expect("built at construction");
                let x = (rho.ln() - c.ln_rho0) / c.step;
                let n = c.ln_psi_sigma.len();
                let v = if x < 0.0 {
                    c.ln_psi_sigma[0] + c.slope_lo * x * c.step
                } else if x > (n - 1) as f64 {
                    let rho_hi = (c.ln_rho0 + c.step * (n - 1) as f64).exp();
                    let hat = c.sigma_hat_last * (rho_hi / rho).powf(c.decay_hi);
                    return (self.sigma_mass - hat).clamp(0.0, self.sigma_mass);
                } else {
                    lagrange4(&c.ln_psi_sigma, x)
                };
                v.exp().clamp(0.0, self.sigma_mass)
            }
        }
    }

    /// `ν^{(α)}(r)`.
    pub fn stable_density(&self, r: f64) -> f64 {
        self.c_stable * r.powf(-(self.d() as f64) - self.alpha)
    }

    /// `ν(r)`.
    pub fn density(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(domain!("density needs r > 0, got {r}"));
        }
        let v = self.density_in(self.d(), r);
        if !v.is_finite() {
            return Err(numeric!("density overflow at r = {r} (Bessel argument out of range)"));
        }
        Ok(v)
    }

    /// `σ(r) = ν^{(α)}(r) - ν(r)`.
    pub fn sigma_density(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(domain!("sigma density needs r > 0, got {r}"));
        }
        let v = self.sigma_in(self.d(), r);
        if !v.is_finite() {
            return Err(numeric!("sigma density not finite at r = {r}"));
        }
        Ok(v)
    }

    /// Density of the one-dimensional Lévy measure with the same symbol
    /// (the projection of `ν` onto a line).
    pub fn density_1d(&self, r: f64) -> f64 {
        match (self.dim, self.kind) {
            (Dim::One, _) | (_, LevyKind::Relativistic { .. }) => self.density_in(1, r),
            (Dim::Three, _) => self.c_stable_1d * r.powf(-1.0 - self.alpha) - self.sigma_1d(r),
        }
    }

    /// `σ` of the one-dimensional projected measure.
    pub fn sigma_1d(&self, r: f64) -> f64 {
        match (self.dim, self.kind) {
            (_, LevyKind::Stable) => 0.0,
            (Dim::One, _) | (_, LevyKind::Relativistic { .. }) => self.sigma_in(1, r),
            (Dim::Three, LevyKind::Layered { gamma, r_cut }) => {
                // 2π ∫_r^∞ σ₃(w) w dw in closed form
                let a = self.alpha;
                let c = 2.0 * PI * self.c_stable;
                let w0 = r.max(r_cut);
                let first = w0.powf(-1.0 - a) / (1.0 + a);
                let second = r_cut.powf(gamma) * w0.powf(-1.0 - a - gamma) / (1.0 + a + gamma);
                c * (first - second)
            }
            (Dim::Three, _) => {
                let (v, _) = exp_sinh(|x| self.sigma_in(3, r + x) * (r + x), r, 1e-12);
                2.0 * PI * v
            }
        }
    }

    fn density_in(&self, d: u32, r: f64) -> f64 {
        let a = self.alpha;
        let df = d as f64;
        match self.kind {
            LevyKind::Relativistic { m } => {
                let mu = 0.5 * (df + a);
                let big_m = m.powf(1.0 / a);
                let z = big_m * r;
                let pref = a * 2f64.powf(0.5 * (a - df)) * big_m.powf(mu) / (PI.powf(0.5 * df) * gamma(1.0 - 0.5 * a));
                pref * bessel_k_scaled(mu, z) * (-z).exp() / r.powf(mu)
            }
            _ => {
                let c = if d == self.d() { self.c_stable } else { self.c_stable_1d };
                c * r.powf(-df - a) - self.sigma_in(d, r)
            }
        }
    }

    fn sigma_in(&self, d: u32, r: f64) -> f64 {
        let a = self.alpha;
        let df = d as f64;
        let c = if d == self.d() { self.c_stable } else { self.c_stable_1d };
        match self.kind {
            LevyKind::Stable => 0.0,
            LevyKind::Tempered { lambda, beta } => c * r.powf(-df - a) * -(-lambda * r.powf(beta)).exp_m1(),
            LevyKind::Layered { gamma, r_cut } => {
                if r <= r_cut {
                    0.0
                } else {
                    c * r.powf(-df - a) * -(-gamma * (r / r_cut).ln()).exp_m1()
                }
            }
            LevyKind::Relativistic { m } => {
                // subordination form: σ(r) = (α/2)/Γ(1-α/2) ∫ (4πu)^{-d/2} e^{-r²/4u} (1 - e^{-M²u}) u^{-1-α/2} du
                let m2 = m.powf(2.0 / a);
                let pref = 0.5 * a / gamma(1.0 - 0.5 * a);
                let f = |u: f64| {
                    (4.0 * PI * u).powf(-0.5 * df) * (-r * r / (4.0 * u)).exp() * -(-m2 * u).exp_m1()
                        * u.powf(-1.0 - 0.5 * a)
                };
                let scale = (r * r / 4.0).min(1.0 / m2).max(1e-300);
                pref * exp_sinh(f, scale, 1e-13).0
            }
        }
    }

    /// `ln ν(r)`, accurate where `ν` underflows.
    fn ln_density(&self, r: f64) -> f64 {
        let a = self.alpha;
        let df = self.d() as f64;
        match self.kind {
            LevyKind::Tempered { lambda, beta } => self.c_stable.ln() - (df + a) * r.ln() - lambda * r.powf(beta),
            LevyKind::Relativistic { m } => {
                let mu = 0.5 * (df + a);
                let big_m = m.powf(1.0 / a);
                let z = big_m * r;
                let pref = a * 2f64.powf(0.5 * (a - df)) * big_m.powf(mu) / (PI.powf(0.5 * df) * gamma(1.0 - 0.5 * a));
                pref.ln() + bessel_k_scaled(mu, z).ln() - z - mu * r.ln()
            }
            _ => self.density_in(self.d(), r).ln(),
        }
    }

    /// `S_d ∫₀^∞ σ(r) r^{d-1} dr` by quadrature.
    pub fn sigma_mass_numeric(&self) -> Result<f64> {
        let d = self.d();
        let area = self.dim.sphere_area();
        let (start, scale) = match self.kind {
            LevyKind::Stable => return Ok(0.0),
            LevyKind::Layered { r_cut, .. } => (r_cut, r_cut),
            LevyKind::Tempered { lambda, beta } => (0.0, lambda.powf(-1.0 / beta)),
            LevyKind::Relativistic { m } => (0.0, m.powf(-1.0 / self.alpha)),
        };
        let (v, diff) = exp_sinh(|x| self.sigma_in(d, start + x) * (start + x).powi(d as i32 - 1), scale, 1e-12);
        if !v.is_finite() || diff > 1e-8 * v.abs() {
            return Err(numeric!("sigma mass quadrature did not converge (estimate {v}, change {diff})"));
        }
        Ok(area * v)
    }

    fn sigma_hat(&self, rule: &FourierRule, rho: f64) -> f64 {
        // Fourier transform of σ; the layered kink at r_cut is moved to the origin
        let d = self.d();
        let start = match self.kind {
            LevyKind::Layered { r_cut, .. } => r_cut,
            _ => 0.0,
        };
        let (s0, c0) = (rho * start).sin_cos();
        match d {
            1 => {
                let cc = rule.integrate(Oscillation::Cosine, rho, |x| self.sigma_in(1, start + x));
                let ss = if start > 0.0 { rule.integrate(Oscillation::Sine, rho, |x| self.sigma_in(1, start + x)) } else { 0.0 };
                2.0 * (c0 * cc - s0 * ss)
            }
            _ => {
                let g = |x: f64| self.sigma_in(3, start + x) * (start + x);
                let ss = rule.integrate(Oscillation::Sine, rho, g);
                let cc = if start > 0.0 { rule.integrate(Oscillation::Cosine, rho, g) } else { 0.0 };
                4.0 * PI / rho * (s0 * cc + c0 * ss)
            }
        }
    }

    fn build_correction(&self) -> SymbolCorrection {
        let rule = FourierRule::default();
        let per_decade = 48.0;
        let ln_rho0 = (1e-4f64).ln();
        let step = core::f64::consts::LN_10 / per_decade;
        let n = (10.0 * per_decade) as usize + 1;
        let mut ln_psi = Vec::with_capacity(n);
        let mut hat_last = 0.0;
        let mut hat_prev = 0.0;
        for i in 0..n {
            let rho = (ln_rho0 + step * i as f64).exp();
            let hat = self.sigma_hat(&rule, rho);
            let ps = (self.sigma_mass - hat).clamp(1e-300, self.sigma_mass);
            ln_psi.push(ps.ln());
            hat_prev = hat_last;
            hat_last = hat;
        }
        let slope_lo = (ln_psi[1] - ln_psi[0]) / step;
        let decay_hi = if hat_last > 0.0 && hat_prev > hat_last { (hat_prev / hat_last).ln() / step } else { 0.0 };
        SymbolCorrection { ln_rho0, step, ln_psi_sigma: ln_psi, sigma_hat_last: hat_last.max(0.0), decay_hi, slope_lo }
    }

    /// The radial profile of `ν`, tabulated in log-log form.
    pub fn profile(&self, r_lo: f64, r_hi: f64) -> Result<Profile> {
        let radii = log_space(r_lo, r_hi, ((r_hi / r_lo).log10() * 100.0).ceil() as usize + 1);
        let ln_f: Vec<f64> = radii.iter().map(|&r| self.ln_density(r)).collect();
        Profile::from_log_samples(radii, ln_f)
    }

    /// Checks of the structural assumptions on a grid: nonnegativity of
    /// `σ`, a grid estimate of the Dziubański–Jakubowski–Pedzimąż supremum
    /// (as a `y`-integral), and the constant in `ν(r) ≥ c ψ*(1/r)/r^d`.
    pub fn check_profile_conditions(&self, grid: &RadialGrid) -> Result<AuditReport> {
        if grid.r_min() > 1e-3 * (1.0 + 1e-9) || grid.r_max() < 1e2 * (1.0 - 1e-9) {
            return Err(domain!("profile check needs a grid covering [1e-3, 1e2]"));
        }
        let mut rep = AuditReport::new("profile_conditions", grid.describe())
            .param("d", self.d() as f64)
            .param("alpha", self.alpha);

        // (i) σ ≥ 0
        let mut worst_rel = f64::INFINITY;
        let mut sigma_min = f64::INFINITY;
        for &r in &grid.radii {
            let s = self.sigma_density(r)?;
            sigma_min = sigma_min.min(s);
            worst_rel = worst_rel.min(s / self.stable_density(r));
        }
        rep.stat("sigma_min", sigma_min);
        rep.stat("sigma_min_relative", worst_rel);
        let sigma_ok = worst_rel >= -1e-10;

        // (ii) DJP supremum over |x| in the grid range
        let profile = self.profile(1e-7, 1e5)?;
        let xs: Vec<f64> = log_space(grid.r_min().max(1e-2), grid.r_max(), 25);
        let coarse: Vec<f64> = xs.iter().map(|&x| profile.djp_integral(self.dim, x, 1)).collect();
        let fine: Vec<f64> = xs.iter().map(|&x| profile.djp_integral(self.dim, x, 2)).collect();
        let sup = |v: &[f64]| v.iter().fold(0.0f64, |a, &b| if b.is_nan() { f64::INFINITY } else { a.max(b) });
        let (sup_c, sup_f) = (sup(&coarse), sup(&fine));
        let split = xs.partition_point(|&x| x < grid.r_max() / 10.0);
        let lower = sup(&fine[..split]);
        let upper = sup(&fine[split..]);
        rep.stat("djp_sup", sup_f);
        rep.stat("djp_sup_coarse", sup_c);
        rep.stat("djp_sup_last_decade", upper);
        rep.stat("djp_sup_below_last_decade", lower);
        let djp_ok = sup_f.is_finite() && upper <= 2.0 * lower;
        if !djp_ok {
            rep.note("DJP integral grows across the last decade of |x|: the profile is not sub-convolutive");
        }
        rep.note("DJP condition read as sup_x ∫ f1(|x-y|) f1(|y|) dy / f1(|x|)");

        // (iii) ν(r) ≥ c ψ*(1/r) / r^d on r ≤ 1
        let mut small: Vec<f64> = grid.radii.iter().copied().filter(|&r| r <= 1.0).collect();
        small.reverse();
        let mut psi_star = 0.0f64;
        let mut rho_prev = 0.0;
        let mut c_psi = f64::INFINITY;
        for &r in &small {
            let rho = 1.0 / r;
            for k in 1..=4 {
                let q = rho_prev + (rho - rho_prev) * k as f64 / 4.0;
                psi_star = psi_star.max(self.psi(q));
            }
            rho_prev = rho;
            c_psi = c_psi.min(self.density(r)? * r.powi(self.d() as i32) / psi_star);
        }
        rep.stat("nu_by_psi_constant", c_psi);
        rep.c_upper = Some(sup_f);
        rep.c_lower = Some(c_psi);
        let stable = relative_change(sup_c, sup_f) < crate::audit::REFINEMENT_BUDGET || !djp_ok;
        rep.conclude(sigma_ok && djp_ok && c_psi > 0.0, stable);
        Ok(rep)
    }
}

/// Four-point Lagrange interpolation on unit-spaced samples.
fn lagrange4(v: &[f64], x: f64) -> f64 {
    let n = v.len();
    let i = (x.floor() as usize).clamp(1, n - 3);
    let t = x - i as f64;
    let (a, b, c, d) = (v[i - 1], v[i], v[i + 1], v[i + 2]);
    let wa = -t * (t - 1.0) * (t - 2.0) / 6.0;
    let wb = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    let wc = -(t + 1.0) * t * (t - 2.0) / 2.0;
    let wd = (t + 1.0) * t * (t - 1.0) / 6.0;
    wa * a + wb * b + wc * c + wd * d
}

/// A tabulated non-increasing radial profile `f`, interpolated linearly in
/// `(ln r, ln f)` and extended by power laws beyond the table.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    ln_r: Vec<f64>,
    ln_f: Vec<f64>,
}

impl Profile {
    pub fn from_samples(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|&v| !(v > 0.0)) {
            return Err(domain!("profile values must be positive"));
        }
        Self::from_log_samples(radii, values.iter().map(|v| v.ln()).collect())
    }

    fn from_log_samples(radii: Vec<f64>, ln_f: Vec<f64>) -> Result<Self> {
        if radii.len() != ln_f.len() || radii.len() < 2 {
            return Err(domain!("profile needs matching radii and values, at least two"));
        }
        if radii.windows(2).any(|w| !(w[0] > 0.0 && w[0] < w[1])) {
            return Err(domain!("profile radii must be positive and increasing"));
        }
        if ln_f.windows(2).any(|w| w[1] > w[0] + 1e-12 * w[0].abs().max(1.0)) {
            return Err(domain!("profile must be non-increasing"));
        }
        Ok(Self { ln_r: radii.iter().map(|r| r.ln()).collect(), ln_f })
    }

    /// `ln f(r)`.
    pub fn ln_value(&self, r: f64) -> f64 {
        let x = r.ln();
        let n = self.ln_r.len();
        let i = self.ln_r.partition_point(|&v| v <= x).clamp(1, n - 1);
        let (x0, x1) = (self.ln_r[i - 1], self.ln_r[i]);
        let (y0, y1) = (self.ln_f[i - 1], self.ln_f[i]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    pub fn value(&self, r: f64) -> f64 {
        self.ln_value(r).exp()
    }

    /// `f₁ = min(f, 1)`.
    pub fn f1(&self, r: f64) -> f64 {
        self.ln_value(r).min(0.0).exp()
    }

    /// `∫ f₁(|x-y|) f₁(|y|) dy / f₁(|x|)` over `ℝ^d` for `|x| = x`, with
    /// `refine` multiplying the number of quadrature panels.
    pub fn djp_integral(&self, dim: Dim, x: f64, refine: usize) -> f64 {
        let gl = GaussLegendre::new(8);
        let lf1 = |r: f64| self.ln_value(r).min(0.0);
        let l_x = lf1(x);
        let r_hi = self.ln_r.last().unwrap().exp();
        let panels = |a: f64, b: f64| -> Vec<(f64, f64)> {
            // geometric panels from a (> 0) to b
            let n = ((b / a).log10() * 8.0).ceil().max(1.0) as usize * refine;
            let q = (b / a).powf(1.0 / n as f64);
            (0..n).map(|k| (a * q.powi(k as i32), a * q.powi(k as i32 + 1))).collect()
        };
        let s0 = 1e-7 * x.min(1.0);
        match dim {
            Dim::One => {
                let mut total = 0.0;
                // y < 0 and y > x together
                let mut outer = s0 * (l_x.exp().recip().min(1.0));
                outer = outer.min(s0);
                for (a, b) in panels(outer, r_hi) {
                    total += 2.0 * gl.integrate(a, b, |s| (lf1(x + s) + lf1(s) - l_x).exp());
                }
                // 0 < y < x, symmetric about x/2
                for (a, b) in panels(s0, 0.5 * x) {
                    total += 2.0 * gl.integrate(a, b, |s| (lf1(x - s) + lf1(s) - l_x).exp());
                }
                total
            }
            Dim::Three => {
                // (2π/x) ∫ f₁(s) s ∫_{|x-s|}^{x+s} f₁(w) w dw ds / f₁(x)
                let inner = |lo: f64, hi: f64| -> f64 {
                    let lo = lo.max(1e-12);
                    let mut acc = 0.0;
                    for (a, b) in panels(lo, hi) {
                        acc += gl.integrate(a, b, |w| (lf1(w) - l_x).exp() * w);
                    }
                    acc
                };
                let mut total = 0.0;
                for (a, b) in panels(s0, r_hi) {
                    total += gl.integrate(a, b, |s| lf1(s).exp() * s * inner((x - s).abs(), x + s));
                }
                2.0 * PI / x * total
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::tanh_sinh;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn stable_constants() {
        assert!(rel(stable_density_constant(3, 1.0).unwrap(), 1.0 / (PI * PI)) < 1e-13);
        let c = stable_density_constant(1, 0.5).unwrap();
        assert!(rel(c, 2f64.powf(-1.5) / PI.sqrt()) < 1e-13);
        assert!(stable_density_constant(3, 2.0).is_err());
        assert!(stable_density_constant(1, 1.0).is_err());
    }

    #[test]
    fn symbols() {
        let s = LevyModel::stable(1, 0.5).unwrap();
        assert!(rel(s.symbol(2.0).unwrap(), 2f64.sqrt()) < 1e-15);
        let r = LevyModel::relativistic(3, 1.0, 1.0).unwrap();
        assert_eq!(r.symbol(0.0).unwrap(), 0.0);
        assert!(rel(r.symbol(3.0).unwrap(), 10f64.sqrt() - 1.0) < 1e-14);
        assert!(rel(r.psi(1e-5), 0.5e-10) < 1e-8);
        assert!(matches!(r.symbol(-1.0), Err(crate::Error::Domain(_))));
    }

    #[test]
    fn densities() {
        let s = LevyModel::stable(3, 1.0).unwrap();
        assert!(rel(s.density(2.0).unwrap(), 1.0 / (16.0 * PI * PI)) < 1e-13);
        assert!(s.density(0.0).is_err());
        let t = LevyModel::tempered(3, 1.0, 1.0, 2.0).unwrap();
        assert!(rel(t.density(1e-6).unwrap() * 1e-24, 1.0 / (PI * PI)) < 1e-10);
        assert!(rel(t.sigma_density(1.0).unwrap(), (1.0 - (-1f64).exp()) / (PI * PI)) < 1e-13);
        let r = LevyModel::relativistic(3, 1.0, 1.0).unwrap();
        let ratio = r.density(1e-3).unwrap() / r.stable_density(1e-3);
        assert!((ratio - 1.0).abs() < 0.01, "{ratio}");
    }

    #[test]
    fn relativistic_sigma_matches_bessel_difference() {
        for &(d, a) in &[(1u32, 0.5), (3, 1.0), (3, 0.5)] {
            let m = LevyModel::relativistic(d, a, 1.3).unwrap();
            for &r in &[0.05, 0.3, 1.0, 3.0, 10.0] {
                let direct = m.sigma_density(r).unwrap();
                let diff = m.stable_density(r) - m.density(r).unwrap();
                assert!(rel(direct, diff) < 1e-9, "d={d} r={r}: {direct} vs {diff}");
            }
            let s = m.sigma_density(1e-2).unwrap();
            assert!(s >= 0.0 && s * 1e-4f64.powf(0.5 * (d as f64 + a - 2.0)) < 10.0);
        }
    }

    #[test]
    fn sigma_masses() {
        assert_eq!(LevyModel::stable(3, 1.0).unwrap().sigma_mass(), 0.0);
        let r = LevyModel::relativistic(3, 1.0, 1.0).unwrap();
        assert_eq!(r.sigma_mass(), 1.0);
        assert!(rel(r.sigma_mass_numeric().unwrap(), 1.0) < 1e-6);
        let r1 = LevyModel::relativistic(1, 0.5, 1.0).unwrap();
        assert!(rel(r1.sigma_mass_numeric().unwrap(), 1.0) < 1e-6);
        let t = LevyModel::tempered(1, 0.5, 1.0, 1.0).unwrap();
        assert!(rel(t.sigma_mass(), 2f64.sqrt()) < 1e-13);
        assert!(rel(t.sigma_mass_numeric().unwrap(), 2f64.sqrt()) < 1e-8);
        let t3 = LevyModel::tempered(3, 1.0, 2.0, 2.0).unwrap();
        assert!(rel(t3.sigma_mass_numeric().unwrap(), t3.sigma_mass()) < 1e-8);
        let l = LevyModel::layered(3, 1.0, 0.7).unwrap();
        let closed = l.stable_constant() * 4.0 * PI * (1.0 - 1.0 / 1.7);
        assert!(rel(l.sigma_mass(), closed) < 1e-9);
    }

    #[test]
    fn line_reduction() {
        for m in [
            LevyModel::stable(3, 1.0).unwrap(),
            LevyModel::tempered(3, 1.0, 1.0, 2.0).unwrap(),
            LevyModel::layered(3, 0.8, 0.5).unwrap(),
            LevyModel::relativistic(3, 1.0, 1.0).unwrap(),
        ] {
            for &h in &[0.1, 0.7, 2.0] {
                let f = |w: f64| m.density_in(3, w) * w;
                let v = if h < 1.0 {
                    tanh_sinh(f, h, 1.0, 1e-13).0 + exp_sinh(|x| f(1.0 + x), 1.0, 1e-12).0
                } else {
                    exp_sinh(|x| f(h + x), h, 1e-12).0
                };
                assert!(rel(m.density_1d(h), 2.0 * PI * v) < 1e-8, "{:?} at {h}", m.kind());
            }
        }
    }

    #[test]
    fn symbol_bounds_hold_for_tabulated_models() {
        for m in [
            LevyModel::tempered(1, 0.5, 1.0, 1.0).unwrap(),
            LevyModel::tempered(3, 1.0, 1.0, 2.0).unwrap(),
            LevyModel::layered(1, 0.5, 1.0).unwrap(),
            LevyModel::layered(3, 1.0, 0.5).unwrap(),
        ] {
            for &rho in &[0.0, 1e-6, 1e-3, 0.1, 1.0, 7.0, 1e3, 1e8] {
                let p = m.psi(rho);
                let ra = rho.powf(m.alpha());
                assert!(p <= ra + 1e-15 && p >= ra - m.sigma_mass() - 1e-15, "{:?} rho={rho}", m.kind());
            }
        }
    }

    #[test]
    fn tabulated_symbol_matches_tempered_closed_form() {
        // β = 1, d = 1: ∫(1 - cos ρy) e^{-λ|y|}|y|^{-1-α} dy = 2Γ(-α)[λ^α - (λ²+ρ²)^{α/2} cos(α atan(ρ/λ))]
        let (a, lam) = (0.5, 1.3);
        let m = LevyModel::tempered(1, a, lam, 1.0).unwrap();
        let c = m.stable_constant();
        for &rho in &[1e-3, 0.01, 0.37, 2.0, 50.0, 3e4] {
            let nu = 2.0 * c * gamma(-a) * (lam.powf(a) - (lam * lam + rho * rho).powf(0.5 * a) * (a * (rho / lam).atan()).cos());
            let want = rho.powf(a) - nu;
            assert!(rel(m.psi_sigma(rho), want) < 1e-6, "rho={rho}: {} vs {want}", m.psi_sigma(rho));
        }
    }

    #[test]
    fn profile_conditions() {
        let g = RadialGrid::log(1e-3, 1e2, 64, alloc::vec![1.0]).unwrap();
        let s = LevyModel::stable(1, 0.5).unwrap().check_profile_conditions(&g).unwrap();
        assert!(s.passed(), "{s:?}");
        assert_eq!(s.residuals["sigma_min"], 0.0);
        let r = LevyModel::relativistic(3, 1.0, 1.0).unwrap().check_profile_conditions(&g).unwrap();
        assert!(r.passed(), "{r:?}");
        let t = LevyModel::tempered(1, 0.5, 1.0, 2.0).unwrap().check_profile_conditions(&g).unwrap();
        assert!(!t.passed(), "{t:?}");
        let t1 = LevyModel::tempered(1, 0.5, 1.0, 1.0).unwrap().check_profile_conditions(&g).unwrap();
        assert!(t1.passed(), "{t1:?}");
    }

    #[test]
    fn json_shape() {
        let m: LevyModel = serde_json_like();
        assert_eq!(m.d(), 3);
        assert_eq!(m.kind(), LevyKind::Relativistic { m: 1.0 });
    }

    fn serde_json_like() -> LevyModel {
        LevyModel::try_from(ModelSpec { d: 3, alpha: 1.0, kind: LevyKind::Relativistic { m: 1.0 } }).unwrap()
    }
}
