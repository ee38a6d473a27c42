//! Fourier-fiber operators: the twisted shift, the Szegedy coin, the 6x6
//! twisted unitary, the spectral mapping to `J_k`, and the band function ν(k).
//!
//! The fiber operator is `Û_k = C · S_k`, the Fourier conjugate of the
//! real-space step (arc reversal, then the coin at the new origin) under
//! `ψ̂(k) = Σ_j e^{ikj} ψ(j)`.

use nalgebra::{DMatrix, Matrix3x6, Matrix6, Matrix6x3, Vector3, Vector6};
use num_complex::Complex64;

use crate::eigen;
use crate::error::{Result, WalkError};
use crate::graph::{Arc, Vertex};
use crate::rw::{RwParams, SpectralParams};

/// Threshold on `|sin 2ν|` below which derivative formulas are refused.
pub const BAND_EDGE_TOL: f64 = 1e-8;

/// Residual allowed for eigen-relations checked before returning.
pub const EIGEN_TOL: f64 = 1e-10;

pub type Fiber = Vector6<Complex64>;

/// The abelian twist θ, supported on the cell-crossing arcs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneForm {
    pub k: f64,
}

impl OneForm {
    pub fn new(k: f64) -> Self {
        Self { k }
    }

    pub fn theta(&self, arc: Arc) -> f64 {
        match arc {
            Arc::EMinus => -self.k,
            Arc::EMinusBar => self.k,
            _ => 0.0,
        }
    }
}

/// The Szegedy coin `2 v vᵀ - I` per origin vertex, arcs in layout order.
pub fn coin_operator(params: &RwParams) -> Matrix6<f64> {
    let sq = params.sqrt_probs();
    Matrix6::from_fn(|e, f| {
        let (ae, af) = (Arc::ALL[e], Arc::ALL[f]);
        if ae.origin() != af.origin() {
            return 0.0;
        }
        2.0 * sq[e] * sq[f] - if e == f { 1.0 } else { 0.0 }
    })
}

/// `(S_k ψ)(e) = e^{-iθ(e)} ψ(ē)`.
pub fn twisted_shift(k: f64) -> Matrix6<Complex64> {
    let form = OneForm::new(k);
    let mut s = Matrix6::zeros();
    for a in Arc::ALL {
        s[(a.index(), a.reverse().index())] = Complex64::from_polar(1.0, -form.theta(a));
    }
    s
}

/// `d_A` (vertices R, S, T by arcs) and its adjoint.
pub fn boundary_ops(params: &RwParams) -> (Matrix3x6<f64>, Matrix6x3<f64>) {
    let sq = params.sqrt_probs();
    let d = Matrix3x6::from_fn(|v, e| {
        if Arc::ALL[e].origin() == Vertex::ALL[v] {
            sq[e]
        } else {
            0.0
        }
    });
    (d, d.transpose())
}

fn complexify<const R: usize, const C: usize>(m: &nalgebra::SMatrix<f64, R, C>) -> nalgebra::SMatrix<Complex64, R, C> {
    m.map(|x| Complex64::new(x, 0.0))
}

/// The fiber of the quantum walk at wave number `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistedUnitary {
    pub k: f64,
    pub matrix: Matrix6<Complex64>,
}

impl TwistedUnitary {
    pub fn new(params: &RwParams, k: f64) -> Self {
        Self::with_coin(&coin_operator(params), k)
    }

    /// Uses an arbitrary coin; intended for negative controls.
    pub fn with_coin(coin: &Matrix6<f64>, k: f64) -> Self {
        Self {
            k,
            matrix: complexify(coin) * twisted_shift(k),
        }
    }

    pub fn apply(&self, v: &Fiber) -> Fiber {
        self.matrix * v
    }

    /// `‖U*U - I‖_max`.
    pub fn unitarity_defect(&self) -> f64 {
        (self.matrix.adjoint() * self.matrix - Matrix6::identity()).camax()
    }

    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        let m = DMatrix::from_iterator(6, 6, self.matrix.iter().copied());
        eigen::eigenvalues(&m)
    }
}

/// `{±i, ±e^{iν(k)}, ±e^{-iν(k)}}`.
pub fn predicted_spectrum(spectral: &SpectralParams, k: f64) -> [Complex64; 6] {
    let nu = spectral.band_top(k).min(1.0).acos();
    let i = Complex64::new(0.0, 1.0);
    let e = Complex64::from_polar(1.0, nu);
    [i, -i, e, -e, e.conj(), -e.conj()]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralMapCheck {
    pub passed: bool,
    /// Distance between the numerical spectrum of `Û_k` and the predicted set.
    pub unitary_deviation: f64,
    /// Distance between `φ_QW(spec Û_k)` and `spec J_k` (doubled).
    pub mapping_deviation: f64,
}

impl SpectralMapCheck {
    pub fn max_deviation(&self) -> f64 {
        self.unitary_deviation.max(self.mapping_deviation)
    }
}

/// Compares the numerically computed spectrum of `Û_k` with the closed form,
/// and pushes it through `φ_QW(z) = (z + 1/z)/2` onto `spec J_k`.
pub fn spectral_map_check(params: &RwParams, k: f64, tol: f64) -> Result<SpectralMapCheck> {
    fiber_map_check(params, &TwistedUnitary::new(params, k), tol)
}

/// [`spectral_map_check`] for a given fiber operator, e.g. one built from a
/// modified coin.
pub fn fiber_map_check(params: &RwParams, fiber: &TwistedUnitary, tol: f64) -> Result<SpectralMapCheck> {
    let k = fiber.k;
    let ev = fiber.eigenvalues()?;
    let sp = params.spectral();
    let unitary_deviation = eigen::multiset_distance(&ev, &predicted_spectrum(&sp, k));

    let mut pushed: Vec<f64> = ev.iter().map(|z| ((z + z.inv()) * 0.5).re).collect();
    pushed.sort_by(f64::total_cmp);
    let mut jk: Vec<f64> = crate::rw::hermitian3_eigenvalues(&params.twisted_matrix(k))
        .iter()
        .flat_map(|&x| [x, x])
        .collect();
    jk.sort_by(f64::total_cmp);
    let mapping_deviation = pushed.iter().zip(&jk).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    Ok(SpectralMapCheck {
        passed: unitary_deviation <= tol && mapping_deviation <= tol,
        unitary_deviation,
        mapping_deviation,
    })
}

/// Closed-form eigenvector of `J_k` for a nonzero eigenvalue `±sqrt(a + b cos k)`.
pub fn band_eigenfunction(params: &RwParams, k: f64, lambda: f64) -> Vector3<Complex64> {
    let st = params.twisted_matrix(k)[(1, 2)];
    Vector3::new(
        Complex64::new((1.0 - params.r()).sqrt(), 0.0),
        Complex64::new(lambda, 0.0),
        st.conj(),
    )
}

/// Kernel vector `f₀(k)` of `J_k`.
pub fn zero_eigenfunction(params: &RwParams, k: f64) -> Vector3<Complex64> {
    let st = params.twisted_matrix(k)[(1, 2)];
    Vector3::new(
        st,
        Complex64::new(0.0, 0.0),
        Complex64::new(-(1.0 - params.r()).sqrt(), 0.0),
    )
}

/// Lifts `J_k f = cos ν · f` to `ψ = (I - e^{-iν} S_k) d_A* f` with
/// `Û_k ψ = e^{iν} ψ`. The eigen-relation is verified before returning.
pub fn lift_eigenvector(params: &RwParams, k: f64, f: &Vector3<Complex64>, nu: f64) -> Result<Fiber> {
    let c = nu.cos();
    if (c.abs() - 1.0).abs() < EIGEN_TOL {
        return Err(WalkError::Precondition(format!(
            "cos ν = {c} is ±1; the lift degenerates"
        )));
    }
    let fnorm = f.norm();
    if fnorm == 0.0 {
        return Err(WalkError::Precondition("zero vertex function".into()));
    }
    let jf = params.twisted_matrix(k) * f;
    let res = (jf - f * Complex64::new(c, 0.0)).norm() / fnorm;
    if res > EIGEN_TOL {
        return Err(WalkError::Precondition(format!(
            "f is not a J_k eigenvector for cos ν = {c} (residual {res:e})"
        )));
    }
    let (_, dstar) = boundary_ops(params);
    let g = complexify(&dstar) * f;
    let psi = g - twisted_shift(k) * g * Complex64::from_polar(1.0, -nu);
    let u = TwistedUnitary::new(params, k);
    let res = (u.apply(&psi) - psi * Complex64::from_polar(1.0, nu)).norm() / psi.norm();
    // NaN residuals fail too
    if res.is_nan() || res > EIGEN_TOL {
        return Err(WalkError::Numerical(format!(
            "lifted vector fails Û_k ψ = e^(iν) ψ (residual {res:e})"
        )));
    }
    Ok(psi)
}

/// The dispersion relation `ν(k) = arccos sqrt(a + b cos k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    params: RwParams,
    spectral: SpectralParams,
}

impl Band {
    pub fn new(params: &RwParams) -> Self {
        Self {
            params: *params,
            spectral: params.spectral(),
        }
    }

    pub fn params(&self) -> &RwParams {
        &self.params
    }

    pub fn spectral(&self) -> &SpectralParams {
        &self.spectral
    }

    pub fn nu(&self, k: f64) -> f64 {
        self.spectral.band_top(k).min(1.0).acos()
    }

    fn sin_two_nu(&self, k: f64) -> f64 {
        let c = self.spectral.band_top(k).min(1.0);
        2.0 * c * (1.0 - c * c).max(0.0).sqrt()
    }

    fn checked_sin_two_nu(&self, k: f64) -> Result<f64> {
        let s = self.sin_two_nu(k);
        if s.abs() <= BAND_EDGE_TOL {
            let c = self.spectral.band_top(k);
            let edge = if c > 0.5_f64.sqrt() {
                "λ₁ (ν = 0)"
            } else {
                "ν = π/2"
            };
            return Err(WalkError::Domain(format!(
                "band edge at k = {k}: sin 2ν(k) = {s:e} vanishes at {edge}"
            )));
        }
        Ok(s)
    }

    /// `ν'(k) = b sin k / sin 2ν(k)`.
    pub fn nu_prime(&self, k: f64) -> Result<f64> {
        Ok(self.spectral.b * k.sin() / self.checked_sin_two_nu(k)?)
    }

    /// `ν''(k) = (1 - (α + β)) / (2 sin 2ν) + ½ (1 - 4x²) cos 2ν / sin 2ν`,
    /// with `x = ν'(k)`.
    pub fn nu_second(&self, k: f64) -> Result<f64> {
        let s2 = self.checked_sin_two_nu(k)?;
        let x = self.spectral.b * k.sin() / s2;
        let alpha = self.spectral.lambda1 * self.spectral.lambda1;
        let beta = self.spectral.lambda0 * self.spectral.lambda0;
        let c2 = 2.0 * (self.spectral.a + self.spectral.b * k.cos()) - 1.0;
        Ok((1.0 - (alpha + beta)) / (2.0 * s2) + 0.5 * (1.0 - 4.0 * x * x) * c2 / s2)
    }

    /// `max |ν'|` over a uniform grid of `n` points on `[0, 2π)`, skipping
    /// band-edge points.
    pub fn sup_velocity(&self, n: usize) -> f64 {
        (0..n)
            .filter_map(|i| self.nu_prime(std::f64::consts::TAU * i as f64 / n as f64).ok())
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}
