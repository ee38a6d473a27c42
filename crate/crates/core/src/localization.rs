//! The ±i eigenspaces spanned by round-trip vectors, projections onto them,
//! and the resulting localization profiles.
//!
//! The round trip `p_j` runs `S_j → T_j → S_{j+1} → R_{j+1}` and back. Its
//! vector `w(p_j)` carries `c_m = r_m (-i)^{m-1}` on the forward arcs
//! `f_m = (j,ē0), (j,e+), (j,ē-), (j+1,e0)` and `i (-1)^{m-1} c_m` on their
//! reversals. Neighbouring vectors share the arcs at `R_{j+1}`, so the family
//! is not orthogonal: `⟨w_j, w_{j+1}⟩ = 2 r₁ r₄`. Projections therefore solve
//! the (tridiagonal) Gram system instead of normalising each vector.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Result, WalkError};
use crate::graph::{Arc, Site, Window};
use crate::rw::RwParams;
use crate::szegedy::{light_cone_window, Distribution, InitialEnsemble, StateVector, Walk};

/// Tolerance for the eigen-relation checked on construction.
pub const ROUND_TRIP_TOL: f64 = 1e-12;
/// Cross-Gram entries between the two families below this count as zero.
pub const ORTHOGONALITY_TOL: f64 = 1e-12;
/// Relative truncation error allowed when cutting the Gram system.
const TRUNCATION_TOL: f64 = 1e-17;

fn cis_quarter(m: usize) -> Complex64 {
    // (-i)^m
    match m % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

/// The weights `(r₁, r₂, r₃, r₄)`.
pub fn round_trip_weights(params: &RwParams) -> [f64; 4] {
    let (p, q, r) = (params.p(), params.q(), params.r());
    [
        (r * p * q).sqrt(),
        (q * (1.0 - r)).sqrt(),
        ((1.0 - r) * (1.0 - q)).sqrt(),
        ((1.0 - q) * (1.0 - p) * r).sqrt(),
    ]
}

/// `2[(1 - r) + r(pq + (1-p)(1-q))]`.
pub fn round_trip_norm_sqr(params: &RwParams) -> f64 {
    let (p, q, r) = (params.p(), params.q(), params.r());
    2.0 * ((1.0 - r) + r * (p * q + (1.0 - p) * (1.0 - q)))
}

/// The +i eigenvector supported on the round trip `p_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundTripVector {
    cell: i64,
    entries: [(Site, Complex64); 8],
}

impl RoundTripVector {
    /// Builds `w(p_j)` and checks `U w = i w`.
    pub fn new(params: &RwParams, cell: i64) -> Result<Self> {
        let w = Self::unchecked(params, cell);
        let window = Window::new(cell - 1, cell + 2)?;
        let state = w.to_state(window)?;
        let image = Walk::new(params).step(&state)?;
        let residual = image
            .amplitudes()
            .iter()
            .zip(state.amplitudes())
            .map(|(u, v)| (u - v * Complex64::new(0.0, 1.0)).norm())
            .fold(0.0, f64::max);
        if residual > ROUND_TRIP_TOL {
            return Err(WalkError::Numerical(format!(
                "round-trip vector at cell {cell} fails U w = i w (residual {residual:e})"
            )));
        }
        Ok(w)
    }

    fn unchecked(params: &RwParams, cell: i64) -> Self {
        let r = round_trip_weights(params);
        let forward = [
            Site::new(cell, Arc::E0Bar),
            Site::new(cell, Arc::EPlus),
            Site::new(cell, Arc::EMinusBar),
            Site::new(cell + 1, Arc::E0),
        ];
        let zero = (Site::new(cell, Arc::E0), Complex64::new(0.0, 0.0));
        let mut entries = [zero; 8];
        for m in 0..4 {
            let c = cis_quarter(m) * r[m];
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            entries[2 * m] = (forward[m], c);
            entries[2 * m + 1] = (forward[m].reverse(), c * Complex64::new(0.0, sign));
        }
        Self { cell, entries }
    }

    pub fn cell(&self) -> i64 {
        self.cell
    }

    pub fn entries(&self) -> &[(Site, Complex64); 8] {
        &self.entries
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|e| e.1.norm_sqr()).sum()
    }

    /// The −i eigenvector `conj(w)`.
    pub fn conj(&self) -> Self {
        let mut entries = self.entries;
        entries.iter_mut().for_each(|e| e.1 = e.1.conj());
        Self {
            cell: self.cell,
            entries,
        }
    }

    /// `⟨w, ψ⟩` (antilinear in `w`).
    pub fn inner_state(&self, state: &StateVector) -> Complex64 {
        self.entries.iter().map(|(s, c)| c.conj() * state.get(*s)).sum()
    }

    /// `⟨self, other⟩`.
    pub fn inner(&self, other: &RoundTripVector) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (s, a) in &self.entries {
            for (t, b) in &other.entries {
                if s == t {
                    acc += a.conj() * b;
                }
            }
        }
        acc
    }

    /// Dense form on a window containing cells `j` and `j + 1`.
    pub fn to_state(&self, window: Window) -> Result<StateVector> {
        let mut s = StateVector::zeros(window);
        for (site, c) in &self.entries {
            s.set(*site, *c)?;
        }
        Ok(s)
    }

    fn add_to(&self, state: &mut StateVector, coeff: Complex64) -> Result<()> {
        for (site, c) in &self.entries {
            let v = state.get(*site);
            state.set(*site, v + coeff * c)?;
        }
        Ok(())
    }
}

/// Which linear-algebra route produced a projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionBranch {
    /// `L₊ ⊥ L₋` verified; each family solved with its own tridiagonal Gram.
    Separate,
    /// Cross-Gram not negligible; the combined family solved densely.
    Joint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub plus: StateVector,
    pub minus: StateVector,
    pub branch: ProjectionBranch,
    /// Largest `|⟨w_j, conj(w_l)⟩|` over the family.
    pub cross_overlap: f64,
    /// Round-trip vectors kept on each side beyond the state's support.
    pub margin: usize,
}

/// Solves `T x = b` for Hermitian tridiagonal `T` with diagonal `d` and
/// superdiagonal `u` (Thomas algorithm).
fn solve_hermitian_tridiagonal(d: &[f64], u: &[Complex64], b: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = d.len();
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    let mut denom = Complex64::new(d[0], 0.0);
    for i in 0..n {
        if i > 0 {
            let l = u[i - 1].conj();
            denom = Complex64::new(d[i], 0.0) - l * c[i - 1];
            y[i] = (b[i] - l * y[i - 1]) / denom;
        } else {
            y[0] = b[0] / denom;
        }
        if denom.norm() < 1e-300 {
            return Err(WalkError::Numerical("singular Gram matrix".into()));
        }
        if i + 1 < n {
            c[i] = u[i] / denom;
        }
    }
    for i in (0..n.saturating_sub(1)).rev() {
        let next = y[i + 1];
        y[i] -= c[i] * next;
    }
    Ok(y)
}

/// Number of extra round trips per side so that the neglected Gram-inverse
/// tail is below `TRUNCATION_TOL`.
pub fn projection_margin(params: &RwParams) -> usize {
    let r = round_trip_weights(params);
    let rho = r[0] * r[3] / r.iter().map(|x| x * x).sum::<f64>();
    if rho <= 0.0 {
        return 1;
    }
    // decay rate of the inverse of the Toeplitz tridiagonal (1, ρ)
    let z = (1.0 - (1.0 - 4.0 * rho * rho).max(0.0).sqrt()) / (2.0 * rho);
    let m = (TRUNCATION_TOL.ln() / z.ln()).ceil();
    (m.max(1.0) as usize).min(1_000_000) + 1
}

/// Projects `state` onto `L₊ = span{w(p_j)}` and `L₋ = span{conj w(p_j)}`.
/// Outputs live on a window extended by [`projection_margin`] cells.
pub fn project_localized(params: &RwParams, state: &StateVector) -> Result<Projection> {
    let margin = projection_margin(params);
    let Some((slo, shi)) = state.support() else {
        return Ok(Projection {
            plus: state.clone(),
            minus: state.clone(),
            branch: ProjectionBranch::Separate,
            cross_overlap: 0.0,
            margin,
        });
    };
    let lo = slo - margin as i64;
    let hi = shi + margin as i64;
    let window = Window::new(lo.min(state.window().jmin()), hi.max(state.window().jmax()))?;
    let psi = state.rewindow(window)?;
    let family: Vec<RoundTripVector> = (lo..hi)
        .map(|j| RoundTripVector::new(params, j))
        .collect::<Result<_>>()?;
    let conj: Vec<RoundTripVector> = family.iter().map(RoundTripVector::conj).collect();
    let n = family.len();

    let mut cross_overlap: f64 = 0.0;
    for (i, w) in family.iter().enumerate() {
        for c in &conj[i.saturating_sub(1)..(i + 2).min(n)] {
            cross_overlap = cross_overlap.max(w.inner(c).norm());
        }
    }

    if cross_overlap <= ORTHOGONALITY_TOL {
        let plus = project_family(&family, &psi, window)?;
        let minus = project_family(&conj, &psi, window)?;
        return Ok(Projection {
            plus,
            minus,
            branch: ProjectionBranch::Separate,
            cross_overlap,
            margin,
        });
    }

    // fallback: dense solve over the combined family
    let all: Vec<&RoundTripVector> = family.iter().chain(conj.iter()).collect();
    let m = all.len();
    let gram = DMatrix::from_fn(m, m, |a, b| all[a].inner(all[b]));
    let rhs = DVector::from_iterator(m, all.iter().map(|w| w.inner_state(&psi)));
    let coeffs = gram
        .lu()
        .solve(&rhs)
        .ok_or_else(|| WalkError::Numerical("singular joint Gram matrix".into()))?;
    let mut plus = StateVector::zeros(window);
    let mut minus = StateVector::zeros(window);
    for (i, w) in all.iter().enumerate() {
        let target = if i < n { &mut plus } else { &mut minus };
        w.add_to(target, coeffs[i])?;
    }
    Ok(Projection {
        plus,
        minus,
        branch: ProjectionBranch::Joint,
        cross_overlap,
        margin,
    })
}

fn project_family(family: &[RoundTripVector], psi: &StateVector, window: Window) -> Result<StateVector> {
    let d: Vec<f64> = family.iter().map(RoundTripVector::norm_sqr).collect();
    let u: Vec<Complex64> = family.windows(2).map(|p| p[0].inner(&p[1])).collect();
    let b: Vec<Complex64> = family.iter().map(|w| w.inner_state(psi)).collect();
    let a = solve_hermitian_tridiagonal(&d, &u, &b)?;
    let mut out = StateVector::zeros(window);
    for (w, c) in family.iter().zip(a) {
        w.add_to(&mut out, c)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(n: usize) -> Self {
        if n.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

/// Per-cell mass of `(Π₊ + (±1) Π₋) Ψ₀`, the limit of `μ_n` along one parity.
pub fn localization_profile(params: &RwParams, initial: &StateVector, parity: Parity) -> Result<Distribution> {
    let proj = project_localized(params, initial)?;
    let s = parity.sign();
    let masses = proj
        .plus
        .amplitudes()
        .chunks_exact(6)
        .zip(proj.minus.amplitudes().chunks_exact(6))
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x + y * s).norm_sqr()).sum())
        .collect();
    Distribution::new(proj.plus.window(), masses)
}

/// Parity average: `|Π₊Ψ₀|² + |Π₋Ψ₀|²` per cell.
pub fn averaged_profile(params: &RwParams, initial: &StateVector) -> Result<Distribution> {
    let proj = project_localized(params, initial)?;
    let masses = proj
        .plus
        .amplitudes()
        .chunks_exact(6)
        .zip(proj.minus.amplitudes().chunks_exact(6))
        .map(|(a, b)| a.iter().chain(b).map(|x| x.norm_sqr()).sum())
        .collect();
    Distribution::new(proj.plus.window(), masses)
}

/// Profile of a mixture: the weighted average of member profiles, on
/// `|j| ≤ radius`. `parity = None` gives the parity average.
pub fn ensemble_profile(
    params: &RwParams,
    ensemble: &InitialEnsemble,
    parity: Option<Parity>,
    radius: u64,
) -> Result<Distribution> {
    let mut out = Distribution::zeros(Window::symmetric(radius));
    for &(site, w) in ensemble.members() {
        let window = Window::new(site.cell - 1, site.cell + 1)?;
        let psi = StateVector::basis(window, site)?;
        let prof = match parity {
            Some(p) => localization_profile(params, &psi, p)?,
            None => averaged_profile(params, &psi)?,
        };
        out.accumulate(&prof.restrict(radius), w)?;
    }
    Ok(out)
}

/// `(1/(t_hi - t_lo)) Σ_{n = t_lo}^{t_hi - 1} μ_n(j)` on `|j| ≤ radius`.
pub fn time_averaged_distribution(
    params: &RwParams,
    ensemble: &InitialEnsemble,
    t_lo: usize,
    t_hi: usize,
    radius: u64,
) -> Result<Distribution> {
    let reach = ensemble
        .members()
        .iter()
        .map(|m| m.0.cell.unsigned_abs() as usize)
        .max()
        .unwrap_or(0);
    let window = light_cone_window(t_hi + reach);
    let avg = Walk::new(params).ensemble_time_average(ensemble, t_lo, t_hi, window)?;
    Ok(avg.restrict(radius))
}
