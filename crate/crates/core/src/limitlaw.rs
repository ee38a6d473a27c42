//! The weak limit of `X_n / n`: an atom of mass 1/3 at the origin plus a
//! continuous part built from the band `ν(k)`.
//!
//! With `α = λ₁²`, `β = λ₀²`, the continuous density is the Jacobian sum
//! `Σ± 1/|ν''|` over the two solutions `cos 2ν = h±(x)` of `ν'(k) = x`,
//! which is `Σ± 2 sqrt(H±) / ((1 - 4x²) sqrt φ)`. Everything here is
//! evaluated through two factorisations that avoid cancellation:
//!
//! * `φ(x) = 16 (κ² - x²)(κ₊² - x²)` with `κ₊ = ½ sin(θ₀ + θ₁)`;
//! * `H₊ H₋ = 16 αβ(1-α)(1-β)(1 - 4x²)²`, so the smaller branch is a
//!   quotient and `(√H₊ + √H₋)² = 2A + 8 λ₀λ₁ sin θ₀ sin θ₁ (1 - 4x²)`.
//!
//! Integrals use `x = κ sin t`, under which the density times `dx/dt` is
//! smooth on the closed interval.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Result, WalkError};
use crate::rw::{RwParams, SpectralParams};
use crate::spectral::Band;
use crate::szegedy::Distribution;

/// Mass of the localized atom at `x = 0`.
pub const ATOM_MASS: f64 = 1.0 / 3.0;
/// Negative `H±` values beyond this are reported as inconsistent.
pub const H_NEGATIVE_TOL: f64 = 1e-12;
/// Smallest accepted quadrature size.
pub const MIN_QUAD: usize = 16;
/// `r` this close to 1 leaves the regime where the law is defined.
pub const R_DEGENERATE_TOL: f64 = 1e-9;

/// Konno's density `sqrt(1-κ²) / (π (1-x²) sqrt(κ²-x²))` on `(-κ, κ)`.
pub fn konno_density(x: f64, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(WalkError::Precondition(format!("κ = {kappa} must lie in (0, 1)")));
    }
    if x.abs() == kappa {
        return Err(WalkError::Domain(format!(
            "Konno density is singular at |x| = κ = {kappa}"
        )));
    }
    if x.abs() > kappa {
        return Ok(0.0);
    }
    Ok((1.0 - kappa * kappa).sqrt() / (PI * (1.0 - x * x) * (kappa * kappa - x * x).sqrt()))
}

/// Distribution function of Konno's density.
pub fn konno_cdf(x: f64, kappa: f64) -> f64 {
    if x <= -kappa {
        return 0.0;
    }
    if x >= kappa {
        return 1.0;
    }
    0.5 + ((1.0 - kappa * kappa).sqrt() * x / (kappa * kappa - x * x).sqrt()).atan() / PI
}

fn kappa_of(l1: f64, l0: f64) -> f64 {
    0.5 * (l0.acos() - l1.min(1.0).acos()).sin()
}

/// `φ(x) = 16x⁴ - 8{λ₁²(1-λ₀²) + λ₀²(1-λ₁²)}x² + (λ₁² - λ₀²)²`.
pub fn phi(x: f64, l1: f64, l0: f64) -> f64 {
    let (a, b) = (l1 * l1, l0 * l0);
    let x2 = x * x;
    16.0 * x2 * x2 - 8.0 * (a * (1.0 - b) + b * (1.0 - a)) * x2 + (a - b) * (a - b)
}

/// `φ` in the factored form `16 (κ² - x²)(κ₊² - x²)`.
pub fn phi_factored(x: f64, l1: f64, l0: f64) -> f64 {
    let (t0, t1) = (l0.acos(), l1.min(1.0).acos());
    let k = 0.5 * (t0 - t1).sin();
    let kp = 0.5 * (t0 + t1).sin();
    16.0 * (k * k - x * x) * (kp * kp - x * x)
}

/// The two solutions `cos 2ν = h±(x)` of `ν'(k) = x`.
pub fn h_branches(x: f64, l1: f64, l0: f64) -> Result<(f64, f64)> {
    let kappa = kappa_of(l1, l0);
    if x.abs() >= kappa {
        return Err(WalkError::Domain(format!(
            "|x| = {} is outside (-κ, κ) with κ = {kappa}",
            x.abs()
        )));
    }
    let ph = phi_factored(x, l1, l0);
    if ph < 0.0 {
        return Err(WalkError::Domain(format!("φ({x}) = {ph:e} < 0")));
    }
    let (a, b) = (l1 * l1, l0 * l0);
    let den = 4.0 * x * x - 1.0;
    let hp = (1.0 - (a + b) + ph.sqrt()) / den;
    let hm = (1.0 - (a + b) - ph.sqrt()) / den;
    let (lo, hi) = (2.0 * b - 1.0, 2.0 * a - 1.0);
    for h in [hp, hm] {
        if h < lo - 1e-9 || h > hi + 1e-9 {
            return Err(WalkError::Domain(format!(
                "branch cos 2ν = {h} outside [{lo}, {hi}] at x = {x}"
            )));
        }
    }
    Ok((hp, hm))
}

/// `f(t) = ¼ (1 - 2α + t)(1 - 2β + t) / (t² - 1)`, so that `f(cos 2ν) = ν'²`.
pub fn velocity_square(t: f64, l1: f64, l0: f64) -> f64 {
    let (a, b) = (l1 * l1, l0 * l0);
    0.25 * (1.0 - 2.0 * a + t) * (1.0 - 2.0 * b + t) / (t * t - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

/// `H±(x) = A(x) ± 2(λ₁² + λ₀² - 1) sqrt φ(x)` with
/// `A = 8{-1 + (1-λ₁²)λ₀² + (1-λ₀²)λ₁²}x² + 2{λ₁²(1-λ₁²) + λ₀²(1-λ₀²)}`.
pub fn big_h(x: f64, l1: f64, l0: f64, branch: Branch) -> Result<f64> {
    let kappa = kappa_of(l1, l0);
    if x.abs() >= kappa {
        return Err(WalkError::Domain(format!(
            "|x| = {} is outside (-κ, κ) with κ = {kappa}",
            x.abs()
        )));
    }
    let (a, b) = (l1 * l1, l0 * l0);
    let x2 = x * x;
    let big_a = 8.0 * (-1.0 + (1.0 - a) * b + (1.0 - b) * a) * x2 + 2.0 * (a * (1.0 - a) + b * (1.0 - b));
    let s = a + b - 1.0;
    let root = phi_factored(x, l1, l0).max(0.0).sqrt();
    let large = big_a + 2.0 * s.abs() * root;
    let w = 1.0 - 4.0 * x2;
    let product = 16.0 * a * b * (1.0 - a).max(0.0) * (1.0 - b) * w * w;
    let small = if large > 0.0 {
        product / large
    } else {
        big_a - 2.0 * s.abs() * root
    };
    let value = match (branch, s >= 0.0) {
        (Branch::Plus, true) | (Branch::Minus, false) => large,
        _ => small,
    };
    if value < -H_NEGATIVE_TOL {
        return Err(WalkError::Numerical(format!("H at x = {x} is negative ({value:e})")));
    }
    Ok(value.max(0.0))
}

/// `u(x) = (1 - λ₀²) - 4x²`, failing where it vanishes.
fn u_checked(x: f64, l0: f64) -> Result<f64> {
    let u = (1.0 - l0 * l0) - 4.0 * x * x;
    if u.abs() < 1e-14 {
        return Err(WalkError::Domain(format!(
            "u(x) vanishes at x = {x} inside the support"
        )));
    }
    Ok(u)
}

/// The closed-form branch weights `γ±(x; λ₁, λ₀)` exactly as displayed:
/// `(1 ± sqrt D + (1-λ₁²) ζ∓/u) / (2D)` with `D = 1 + (1-λ₁²) η/u²`.
pub fn gamma_weights(x: f64, l1: f64, l0: f64, branch: Branch) -> Result<f64> {
    let kappa = kappa_of(l1, l0);
    if x.abs() >= kappa {
        return Err(WalkError::Domain(format!(
            "|x| = {} is outside (-κ, κ) with κ = {kappa}",
            x.abs()
        )));
    }
    let (a, b) = (l1 * l1, l0 * l0);
    let x2 = x * x;
    let u = u_checked(x, l0)?;
    let eta = 8.0 * (1.0 - 2.0 * b) * x2 - (1.0 + a - 2.0 * b);
    let root = phi_factored(x, l1, l0).max(0.0).sqrt();
    let zeta = |sign: f64| 4.0 * (2.0 * b - 1.0) * x2 + a + sign * root;
    let d = 1.0 + (1.0 - a) * eta / (u * u);
    if d <= 0.0 {
        return Err(WalkError::Domain(format!("γ discriminant {d:e} ≤ 0 at x = {x}")));
    }
    let (pm, zeta_sign) = match branch {
        Branch::Plus => (1.0, -1.0),
        Branch::Minus => (-1.0, 1.0),
    };
    Ok((1.0 + pm * d.sqrt() + (1.0 - a) * zeta(zeta_sign) / u) / (2.0 * d))
}

/// Branch weights that make the single-wave form exact:
/// `sqrt(u H±) / (2 λ₀ sqrt φ)`. They coincide with [`gamma_weights`] when
/// `λ₁ = 1`.
pub fn branch_weights(x: f64, l1: f64, l0: f64, branch: Branch) -> Result<f64> {
    let u = u_checked(x, l0)?;
    let h = big_h(x, l1, l0, branch)?;
    let ph = phi_factored(x, l1, l0);
    if ph <= 0.0 {
        return Err(WalkError::Domain(format!("φ({x}) = {ph:e} ≤ 0")));
    }
    Ok((u * h).sqrt() / (2.0 * l0 * ph.sqrt()))
}

/// `Σ± 2 sqrt(H±) / ((1 - 4x²) sqrt φ)`, the uncalibrated Jacobian sum.
pub fn hessian_branch_sum(x: f64, l1: f64, l0: f64) -> Result<f64> {
    let ph = phi_factored(x, l1, l0);
    if ph <= 0.0 {
        return Err(WalkError::Domain(format!("φ({x}) = {ph:e} ≤ 0")));
    }
    let hp = big_h(x, l1, l0, Branch::Plus)?;
    let hm = big_h(x, l1, l0, Branch::Minus)?;
    Ok(2.0 * (hp.sqrt() + hm.sqrt()) / ((1.0 - 4.0 * x * x) * ph.sqrt()))
}

/// `(γ₊ + γ₋) · 2λ₀ / ((1 - 4x²) sqrt u)` with the displayed weights.
pub fn single_wave_form(x: f64, l1: f64, l0: f64) -> Result<f64> {
    let g = gamma_weights(x, l1, l0, Branch::Plus)? + gamma_weights(x, l1, l0, Branch::Minus)?;
    let u = u_checked(x, l0)?;
    Ok(g * 2.0 * l0 / ((1.0 - 4.0 * x * x) * u.sqrt()))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let prev = if n <= 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - prev) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// The limit law for one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitLaw {
    params: RwParams,
    spectral: SpectralParams,
    /// `S = (√H₊ + √H₋)²` is affine in `d = κ² - x²`: `S = s_edge + s_slope d`.
    s_edge: f64,
    s_slope: f64,
    /// `κ₊² - κ²`, zero exactly in the recurrent case.
    gap: f64,
    calibration: f64,
    nodes: Vec<(f64, f64)>,
}

impl LimitLaw {
    /// Builds the law and calibrates the continuous part to mass 2/3 with a
    /// `quad`-point Gauss–Legendre rule.
    pub fn new(params: &RwParams, quad: usize) -> Result<Self> {
        if quad < MIN_QUAD {
            return Err(WalkError::Precondition(format!("quadrature size {quad} < {MIN_QUAD}")));
        }
        if 1.0 - params.r() < R_DEGENERATE_TOL {
            return Err(WalkError::Precondition(format!(
                "r = {} is within {R_DEGENERATE_TOL:e} of 1; the limit law needs 0 < r < 1",
                params.r()
            )));
        }
        let sp = params.spectral();
        let (a, b) = (sp.lambda1 * sp.lambda1, sp.lambda0 * sp.lambda0);
        let c1 = -1.0 + (1.0 - a) * b + (1.0 - b) * a;
        let c0 = a * (1.0 - a) + b * (1.0 - b);
        let g = sp.lambda0 * sp.lambda1 * sp.theta0.sin() * sp.theta1.sin();
        let kappa_outer = sp.kappa_outer();
        let k2 = sp.kappa * sp.kappa;
        let gap = (kappa_outer - sp.kappa) * (kappa_outer + sp.kappa);
        // both H± vanish at the edge when p = q, and S then carries the
        // factor (κ² - x²) exactly; keep it exact so the integrand stays smooth
        let s_edge = if gap > 0.0 {
            (16.0 * c1 * k2 + 4.0 * c0 + 8.0 * g * (1.0 - 4.0 * k2)).max(0.0)
        } else {
            0.0
        };
        let mut law = Self {
            params: *params,
            spectral: sp,
            s_edge,
            s_slope: 32.0 * g - 16.0 * c1,
            gap,
            calibration: 1.0,
            nodes: gauss_legendre(quad),
        };
        let raw = law.raw_integral(FRAC_PI_2);
        if !(raw > 0.0 && raw.is_finite()) {
            return Err(WalkError::Numerical(format!("continuous mass integrates to {raw}")));
        }
        law.calibration = (1.0 - ATOM_MASS) / raw;
        Ok(law)
    }

    pub fn params(&self) -> &RwParams {
        &self.params
    }

    pub fn spectral(&self) -> &SpectralParams {
        &self.spectral
    }

    pub fn kappa(&self) -> f64 {
        self.spectral.kappa
    }

    pub fn atom_mass(&self) -> f64 {
        ATOM_MASS
    }

    pub fn quad_size(&self) -> usize {
        self.nodes.len()
    }

    /// Factor turning the Jacobian sum into the continuous density.
    /// Analytically `1/(3π)`: `(2/3)` for the continuous mass and `1/(2π)`
    /// from `dk/2π`.
    pub fn calibration(&self) -> f64 {
        self.calibration
    }

    /// `(√H₊ + √H₋)² / (κ₊² - x²)` as a function of `d = κ² - x²`.
    fn s_ratio(&self, d: f64) -> f64 {
        if self.gap > 0.0 {
            (self.s_edge + self.s_slope * d).max(0.0) / (self.gap + d)
        } else {
            self.s_slope.max(0.0)
        }
    }

    /// Jacobian sum times `dx/dt` under `x = κ sin t`.
    fn smooth_integrand(&self, t: f64) -> f64 {
        let (s, c) = t.sin_cos();
        let k = self.kappa();
        let x = k * s;
        let d = k * k * c * c;
        self.s_ratio(d).sqrt() / (2.0 * (1.0 - 4.0 * x * x))
    }

    /// `∫_{-π/2}^{t_hi}` of the smooth integrand.
    fn raw_integral(&self, t_hi: f64) -> f64 {
        let (lo, hi) = (-FRAC_PI_2, t_hi);
        if hi <= lo {
            return 0.0;
        }
        let (c, h) = (0.5 * (hi + lo), 0.5 * (hi - lo));
        self.nodes
            .iter()
            .map(|&(s, w)| w * self.smooth_integrand(c + h * s))
            .sum::<f64>()
            * h
    }

    /// Uncalibrated `Σ± 2 sqrt(H±) / ((1 - 4x²) sqrt φ)`, evaluated stably.
    pub fn raw_density(&self, x: f64) -> Result<f64> {
        let k = self.kappa();
        if x.abs() == k {
            return Err(WalkError::Domain(format!("density is singular at |x| = κ = {k}")));
        }
        if x.abs() > k {
            return Ok(0.0);
        }
        let d = (k - x.abs()) * (k + x.abs());
        Ok(self.s_ratio(d).sqrt() / (2.0 * (1.0 - 4.0 * x * x) * d.sqrt()))
    }

    /// The continuous part of the limit density (total mass 2/3).
    pub fn density(&self, x: f64) -> Result<f64> {
        Ok(self.calibration * self.raw_density(x)?)
    }

    /// The wave carried by the `H₋` branch; identically zero iff `p = q`.
    pub fn transient_wave(&self, x: f64) -> Result<f64> {
        let k = self.kappa();
        if x.abs() >= k {
            if x.abs() == k {
                return Err(WalkError::Domain(format!("density is singular at |x| = κ = {k}")));
            }
            return Ok(0.0);
        }
        let (l1, l0) = (self.spectral.lambda1, self.spectral.lambda0);
        let hm = big_h(x, l1, l0, Branch::Minus)?;
        let ph = phi_factored(x, l1, l0);
        Ok(self.calibration * 2.0 * hm.sqrt() / ((1.0 - 4.0 * x * x) * ph.sqrt()))
    }

    /// `ρ*` as displayed: `γ₋ · 2λ₀ / ((1 - 4x²) sqrt u)`, same calibration.
    pub fn transient_wave_displayed(&self, x: f64) -> Result<f64> {
        let (l1, l0) = (self.spectral.lambda1, self.spectral.lambda0);
        let g = gamma_weights(x, l1, l0, Branch::Minus)?;
        let u = u_checked(x, l0)?;
        Ok(self.calibration * g * 2.0 * l0 / ((1.0 - 4.0 * x * x) * u.sqrt()))
    }

    /// `∫_{-∞}^{x}` of the continuous part.
    pub fn continuous_cdf(&self, x: f64) -> f64 {
        let k = self.kappa();
        if x <= -k {
            return 0.0;
        }
        let t = if x >= k { FRAC_PI_2 } else { (x / k).asin() };
        self.calibration * self.raw_integral(t)
    }

    /// Right-continuous distribution function of the full law.
    pub fn cdf(&self, x: f64) -> f64 {
        self.continuous_cdf(x) + if x >= 0.0 { ATOM_MASS } else { 0.0 }
    }

    /// Left limit `F(x⁻)`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        self.continuous_cdf(x) + if x > 0.0 { ATOM_MASS } else { 0.0 }
    }

    /// Total mass `1/3 + ∫ continuous`.
    pub fn total_mass(&self) -> f64 {
        ATOM_MASS + self.continuous_cdf(self.kappa())
    }
}

/// The law built directly from the band: `1/3` at zero plus the images of
/// uniform `k` under `±ν'(k)`, each with weight `1/3`. Evaluated on a
/// midpoint grid of `grid` wave numbers.
pub fn band_pushforward_cdf(params: &RwParams, grid: usize, xs: &[f64]) -> Result<Vec<f64>> {
    let band = Band::new(params);
    let mut v: Vec<f64> = (0..grid)
        .map(|i| band.nu_prime(std::f64::consts::TAU * (i as f64 + 0.5) / grid as f64))
        .collect::<Result<_>>()?;
    v.sort_by(f64::total_cmp);
    let frac_le = |x: f64| v.partition_point(|&y| y <= x) as f64 / grid as f64;
    let frac_ge = |x: f64| (grid - v.partition_point(|&y| y < x)) as f64 / grid as f64;
    Ok(xs
        .iter()
        .map(|&x| {
            // P(ν' ≤ x) + P(-ν' ≤ x)
            let atom = if x >= 0.0 { ATOM_MASS } else { 0.0 };
            atom + (frac_le(x) + frac_ge(-x)) / 3.0
        })
        .collect())
}

/// Comparison between the law and `μ_n` rescaled by `1/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsReport {
    /// `sup_x |F_n(x) - F(x)|` over all real `x`.
    pub ks: f64,
    /// Position where the supremum is attained.
    pub argmax: f64,
    /// Same supremum with both sides evaluated at jump midpoints
    /// (`F(x⁻)/2 + F(x)/2`), which discounts the atom's lattice placement.
    pub ks_mid: f64,
    /// Lévy distance.
    pub levy: f64,
}

/// Kolmogorov–Smirnov distance of the rescaled empirical law at time `n`.
pub fn ks_distance(dist: &Distribution, n: usize, law: &LimitLaw) -> Result<KsReport> {
    if n == 0 {
        return Err(WalkError::Precondition("rescaling needs n ≥ 1".into()));
    }
    let scale = n as f64;
    let mut ks: f64 = 0.0;
    let mut argmax = 0.0;
    let mut ks_mid: f64 = 0.0;
    let mut cum = 0.0;
    let mut points = Vec::with_capacity(dist.window().cells());
    for (j, m) in dist.iter() {
        let x = j as f64 / scale;
        let (f, fl) = (law.cdf(x), law.cdf_left(x));
        let before = cum;
        cum += m;
        for d in [(before - fl).abs(), (cum - f).abs()] {
            if d > ks {
                ks = d;
                argmax = x;
            }
        }
        ks_mid = ks_mid.max((0.5 * (before + cum) - 0.5 * (f + fl)).abs());
        points.push((x, before, cum));
    }
    let levy = levy_distance(&points, law);
    Ok(KsReport {
        ks,
        argmax,
        ks_mid,
        levy,
    })
}

/// `points` holds `(x_j, F_n(x_j⁻), F_n(x_j))` in increasing `x`.
fn levy_distance(points: &[(f64, f64, f64)], law: &LimitLaw) -> f64 {
    let ok = |eps: f64| {
        points.iter().enumerate().all(|(i, &(x, _, fx))| {
            // F_n is constant on [x_j, x_{j+1})
            let next = points.get(i + 1).map_or(f64::INFINITY, |p| p.0);
            let upper_ok = fx <= law.cdf(x + eps) + eps;
            let lower_ok = !next.is_finite() || law.cdf_left(next - eps) - eps <= fx;
            upper_ok && lower_ok
        }) && points
            .first()
            .is_none_or(|&(x, _, _)| law.cdf_left(x - eps) - eps <= 0.0)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Smallest `x = m/n` with `P(|X_n/n| < x) ≥ 1 - epsilon`.
pub fn pseudo_velocity_empirical(dist: &Distribution, n: usize, epsilon: f64) -> Result<f64> {
    if n == 0 {
        return Err(WalkError::Precondition("rescaling needs n ≥ 1".into()));
    }
    let reach = dist.window().jmax().max(-dist.window().jmin()) + 1;
    let mut inside = 0.0;
    // P(|X| < m) accumulates cells |j| ≤ m - 1
    for m in 1..=reach {
        let j = m - 1;
        inside += dist.mass(j) + if j != 0 { dist.mass(-j) } else { 0.0 };
        if inside >= 1.0 - epsilon {
            return Ok(m as f64 / n as f64);
        }
    }
    Ok((reach + 1) as f64 / n as f64)
}

/// `P(|X_n/n| > x)`.
pub fn tail_mass(dist: &Distribution, n: usize, x: f64) -> f64 {
    dist.iter()
        .filter(|(j, _)| (*j as f64 / n as f64).abs() > x)
        .map(|(_, m)| m)
        .sum()
}
