//! The drifted random walk on G and its twisted symmetrization J_k.

use std::f64::consts::PI;

use nalgebra::Matrix3;
use num_complex::Complex64;

use crate::error::{Result, WalkError};
use crate::graph::{Arc, Vertex, Window};

/// |p - q| below this counts as the recurrent (driftless) case.
pub const RECURRENCE_TOL: f64 = 1e-12;

/// Transition parameters `(p, q, r)`, each strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RwParams {
    p: f64,
    q: f64,
    r: f64,
}

impl RwParams {
    pub fn new(p: f64, q: f64, r: f64) -> Result<Self> {
        for (name, value) in [("p", p), ("q", q), ("r", r)] {
            if !(value > 0.0 && value < 1.0) {
                return Err(WalkError::InvalidParameter { name, value });
            }
        }
        Ok(Self { p, q, r })
    }

    /// The isotropic case `(1/2, 1/2, 2/3)`: the Grover walk.
    pub fn grover() -> Self {
        Self {
            p: 0.5,
            q: 0.5,
            r: 2.0 / 3.0,
        }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// `(q, p, r)`, which lies in the same limit-law class.
    pub fn swapped(&self) -> Self {
        Self {
            p: self.q,
            q: self.p,
            r: self.r,
        }
    }

    pub fn transition_prob(&self, arc: Arc) -> f64 {
        let (p, q, r) = (self.p, self.q, self.r);
        match arc {
            Arc::E0Bar => 1.0,
            Arc::E0 => 1.0 - r,
            Arc::EPlus => r * p,
            Arc::EMinus => r * (1.0 - p),
            Arc::EPlusBar => q,
            Arc::EMinusBar => 1.0 - q,
        }
    }

    /// `sqrt(p(e))` for every arc in layout order.
    pub fn sqrt_probs(&self) -> [f64; 6] {
        Arc::ALL.map(|a| self.transition_prob(a).sqrt())
    }

    /// A reversible measure, normalised to `m((0, S)) = 1`.
    pub fn reversible_measure(&self, cell: i64, vertex: Vertex) -> f64 {
        let (p, q, r) = (self.p, self.q, self.r);
        let ratio = p * (1.0 - q) / ((1.0 - p) * q);
        let ms = ratio.powf(cell as f64);
        match vertex {
            Vertex::S => ms,
            Vertex::T => r * p / q * ms,
            Vertex::R => (1.0 - r) * ms,
        }
    }

    /// `J_k` in the vertex order (R, S, T).
    pub fn twisted_matrix(&self, k: f64) -> Matrix3<Complex64> {
        let (p, q, r) = (self.p, self.q, self.r);
        let rs = Complex64::new((1.0 - r).sqrt(), 0.0);
        let st = Complex64::from_polar((r * (1.0 - p) * (1.0 - q)).sqrt(), k) + Complex64::new((r * p * q).sqrt(), 0.0);
        let z = Complex64::new(0.0, 0.0);
        Matrix3::new(z, rs, z, rs, z, st, z, st.conj(), z)
    }

    pub fn is_recurrent(&self) -> bool {
        (self.p - self.q).abs() < RECURRENCE_TOL
    }

    pub fn spectral(&self) -> SpectralParams {
        SpectralParams::new(self)
    }
}

/// Closed-form spectral data of the twisted operator family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralParams {
    pub a: f64,
    pub b: f64,
    pub lambda0: f64,
    pub lambda1: f64,
    pub theta0: f64,
    pub theta1: f64,
    pub kappa: f64,
}

impl SpectralParams {
    pub fn new(params: &RwParams) -> Self {
        let (p, q, r) = (params.p, params.q, params.r);
        let a = 1.0 - r * (p * (1.0 - q) + q * (1.0 - p));
        let b = 2.0 * r * (p * q * (1.0 - p) * (1.0 - q)).sqrt();
        let s = (p * (1.0 - q)).sqrt();
        let t = ((1.0 - p) * q).sqrt();
        // (pero), (pipi): the squared forms avoid a - b cancellation.
        let lambda0 = (1.0 - r * (s + t) * (s + t)).sqrt();
        let lambda1 = (1.0 - r * (s - t) * (s - t)).sqrt().min(1.0);
        let theta0 = lambda0.acos();
        let theta1 = lambda1.acos();
        Self {
            a,
            b,
            lambda0,
            lambda1,
            theta0,
            theta1,
            kappa: 0.5 * (theta0 - theta1).sin(),
        }
    }

    /// `sqrt(a + b cos k)`, the positive nonzero eigenvalue of `J_k`.
    pub fn band_top(&self, k: f64) -> f64 {
        (self.a + self.b * k.cos()).max(0.0).sqrt()
    }

    /// `{-sqrt(a + b cos k), 0, sqrt(a + b cos k)}`.
    pub fn twisted_spectrum(&self, k: f64) -> [f64; 3] {
        let s = self.band_top(k);
        [-s, 0.0, s]
    }

    /// `½ sin(θ₀ + θ₁)`, the outer root of the quartic φ in |x|.
    pub fn kappa_outer(&self) -> f64 {
        0.5 * (self.theta0 + self.theta1).sin()
    }
}

/// Eigenvalues of a Hermitian 3x3 matrix from its characteristic polynomial
/// (trigonometric form), ascending.
pub fn hermitian3_eigenvalues(m: &Matrix3<Complex64>) -> [f64; 3] {
    let a = m[(0, 0)].re;
    let b = m[(1, 1)].re;
    let c = m[(2, 2)].re;
    let d = m[(0, 1)];
    let e = m[(1, 2)];
    let f = m[(0, 2)];
    // det(λ - M) = λ³ - c2 λ² + c1 λ - c0
    let c2 = a + b + c;
    let c1 = a * b + a * c + b * c - d.norm_sqr() - e.norm_sqr() - f.norm_sqr();
    let c0 = a * b * c + 2.0 * (d * e * f.conj()).re - a * e.norm_sqr() - b * f.norm_sqr() - c * d.norm_sqr();
    let shift = c2 / 3.0;
    // depressed cubic t³ + pp t + qq with λ = t + shift
    let pp = c1 - c2 * c2 / 3.0;
    let qq = -2.0 * c2 * c2 * c2 / 27.0 + c2 * c1 / 3.0 - c0;
    if pp >= 0.0 {
        // Hermitian ⇒ pp ≤ 0 up to rounding; all roots coincide.
        return [shift; 3];
    }
    let m2 = 2.0 * (-pp / 3.0).sqrt();
    let arg = (3.0 * qq / (pp * m2)).clamp(-1.0, 1.0);
    let phi = arg.acos() / 3.0;
    let mut roots = [0, 1, 2].map(|i| shift + m2 * (phi - 2.0 * PI * i as f64 / 3.0).cos());
    roots.sort_by(f64::total_cmp);
    roots
}

/// Result of the real-space power method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerEstimate {
    pub value: f64,
    pub steps: usize,
    pub last_change: f64,
}

/// Estimates `sup |spec(J)|` on the vertices of a window of G with
/// Dirichlet truncation. G is bipartite ({S} against {R, T}), so the
/// iteration runs on `J²` and reports the square root of its Rayleigh
/// quotient.
pub fn power_iterate(params: &RwParams, window: Window, max_steps: usize, tol: f64) -> Result<PowerEstimate> {
    let n = window.cells();
    let sr = (1.0 - params.r).sqrt();
    let splus = (params.transition_prob(Arc::EPlus) * params.transition_prob(Arc::EPlusBar)).sqrt();
    let sminus = (params.transition_prob(Arc::EMinus) * params.transition_prob(Arc::EMinusBar)).sqrt();
    let idx = |cell: usize, v: Vertex| 3 * cell + v.index();
    let apply = |x: &[f64], y: &mut [f64]| {
        for c in 0..n {
            let (r, s, t) = (idx(c, Vertex::R), idx(c, Vertex::S), idx(c, Vertex::T));
            let mut ys = sr * x[r] + splus * x[t];
            // e- joins S_c to T_{c-1}
            if c > 0 {
                ys += sminus * x[idx(c - 1, Vertex::T)];
            }
            let mut yt = splus * x[s];
            if c + 1 < n {
                yt += sminus * x[idx(c + 1, Vertex::S)];
            }
            y[r] = sr * x[s];
            y[s] = ys;
            y[t] = yt;
        }
    };
    let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();

    let mut v = vec![1.0; 3 * n];
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut tmp = vec![0.0; 3 * n];
    let mut w = vec![0.0; 3 * n];
    let mut estimate = 0.0;
    let mut change = f64::INFINITY;
    for step in 1..=max_steps {
        apply(&v, &mut tmp);
        apply(&tmp, &mut w);
        let rq: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        let next = rq.max(0.0).sqrt();
        change = (next - estimate).abs();
        estimate = next;
        let nw = norm(&w);
        if nw == 0.0 {
            return Ok(PowerEstimate {
                value: 0.0,
                steps: step,
                last_change: 0.0,
            });
        }
        v.iter_mut().zip(&w).for_each(|(a, b)| *a = b / nw);
        if change < tol {
            return Ok(PowerEstimate {
                value: estimate,
                steps: step,
                last_change: change,
            });
        }
    }
    Err(WalkError::NoConvergence {
        what: "power iteration",
        iterations: max_steps,
        residual: change,
    })
}
