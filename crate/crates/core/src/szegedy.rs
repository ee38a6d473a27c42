//! Real-space evolution on a finite window of cells, position distributions,
//! and the Fourier-side characteristic function.
//!
//! One step is arc reversal followed by the coin at the new origin:
//! `(Uψ)(e) = Σ_{f: t(f) = o(e)} (2 sqrt(p(e) p(f̄)) - δ_{e, f̄}) ψ(f)`.

use nalgebra::Matrix6;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Result, WalkError};
use crate::graph::{Arc, Site, Window};
use crate::rw::RwParams;
use crate::spectral::{coin_operator, TwistedUnitary};

/// Smallest quadrature grid accepted by [`fourier_char_fn`].
pub const MIN_FOURIER_GRID: usize = 4096;

/// Window for an `n`-step run started in cell 0: `[-n-2, n+2]`.
pub fn light_cone_window(n: usize) -> Window {
    Window::symmetric(n as u64 + 2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    window: Window,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn zeros(window: Window) -> Self {
        Self {
            window,
            amps: vec![Complex64::new(0.0, 0.0); window.len()],
        }
    }

    pub fn basis(window: Window, site: Site) -> Result<Self> {
        let mut s = Self::zeros(window);
        s.set(site, Complex64::new(1.0, 0.0))?;
        Ok(s)
    }

    pub fn from_amplitudes(window: Window, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != window.len() {
            return Err(WalkError::Precondition(format!(
                "{} amplitudes for a window of {} slots",
                amps.len(),
                window.len()
            )));
        }
        Ok(Self { window, amps })
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn get(&self, site: Site) -> Complex64 {
        self.window.flat_index(site).map(|i| self.amps[i]).unwrap_or_default()
    }

    pub fn set(&mut self, site: Site, value: Complex64) -> Result<()> {
        let i = self.window.flat_index(site)?;
        self.amps[i] = value;
        Ok(())
    }

    /// The six amplitudes of one cell (zero outside the window).
    pub fn cell(&self, cell: i64) -> [Complex64; 6] {
        match self.window.cell_offset(cell) {
            Ok(o) => std::array::from_fn(|a| self.amps[6 * o + a]),
            Err(_) => [Complex64::new(0.0, 0.0); 6],
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.window != other.window {
            return Err(WalkError::Precondition("inner product across windows".into()));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn conj(&self) -> StateVector {
        Self {
            window: self.window,
            amps: self.amps.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&mut self, c: Complex64) {
        self.amps.iter_mut().for_each(|z| *z *= c);
    }

    /// Cells carrying nonzero amplitude, as `(first, last)`.
    pub fn support(&self) -> Option<(i64, i64)> {
        let nonzero = |c: &[Complex64]| c.iter().any(|z| *z != Complex64::new(0.0, 0.0));
        let cells: Vec<_> = self.amps.chunks_exact(6).collect();
        let first = cells.iter().position(|c| nonzero(c))?;
        let last = cells.iter().rposition(|c| nonzero(c))?;
        let j0 = self.window.jmin();
        Some((j0 + first as i64, j0 + last as i64))
    }

    /// Copies the state into `window`, which must contain its support.
    pub fn rewindow(&self, window: Window) -> Result<StateVector> {
        let mut out = StateVector::zeros(window);
        if let Some((lo, hi)) = self.support() {
            for cell in lo..=hi {
                let o = window.cell_offset(cell)?;
                out.amps[6 * o..6 * o + 6].copy_from_slice(&self.cell(cell));
            }
        }
        Ok(out)
    }

    pub fn distribution(&self) -> Distribution {
        Distribution {
            window: self.window,
            masses: self
                .amps
                .chunks_exact(6)
                .map(|c| c.iter().map(|z| z.norm_sqr()).sum())
                .collect(),
        }
    }
}

/// Masses per cell over a window.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    window: Window,
    masses: Vec<f64>,
}

impl Distribution {
    pub fn new(window: Window, masses: Vec<f64>) -> Result<Self> {
        if masses.len() != window.cells() {
            return Err(WalkError::Precondition(format!(
                "{} masses for a window of {} cells",
                masses.len(),
                window.cells()
            )));
        }
        Ok(Self { window, masses })
    }

    pub fn zeros(window: Window) -> Self {
        Self {
            window,
            masses: vec![0.0; window.cells()],
        }
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass(&self, cell: i64) -> f64 {
        self.window.cell_offset(cell).map(|o| self.masses[o]).unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.window.cell_range().zip(self.masses.iter().copied())
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// `Σ_j j^order μ(j)`.
    pub fn moment(&self, order: u32) -> f64 {
        self.iter().map(|(j, m)| (j as f64).powi(order as i32) * m).sum()
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    /// `Σ_j e^{iξj} μ(j)`.
    pub fn char_fn(&self, xi: f64) -> Complex64 {
        self.iter().map(|(j, m)| Complex64::from_polar(m, xi * j as f64)).sum()
    }

    /// Adds `weight · other` in place. Windows must match.
    pub fn accumulate(&mut self, other: &Distribution, weight: f64) -> Result<()> {
        if self.window != other.window {
            return Err(WalkError::Precondition("accumulating across windows".into()));
        }
        self.masses
            .iter_mut()
            .zip(&other.masses)
            .for_each(|(a, b)| *a += weight * b);
        Ok(())
    }

    /// Restriction to `|j| ≤ radius`.
    pub fn restrict(&self, radius: u64) -> Distribution {
        let w = Window::symmetric(radius);
        Distribution {
            window: w,
            masses: w.cell_range().map(|j| self.mass(j)).collect(),
        }
    }
}

/// A classical mixture of arc basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialEnsemble {
    members: Vec<(Site, f64)>,
}

impl InitialEnsemble {
    /// The uniform mixture over the six arcs of cell 0.
    pub fn mixed() -> Self {
        Self {
            members: Arc::ALL.iter().map(|&a| (Site::new(0, a), 1.0 / 6.0)).collect(),
        }
    }

    pub fn pure(site: Site) -> Self {
        Self {
            members: vec![(site, 1.0)],
        }
    }

    pub fn new(members: Vec<(Site, f64)>) -> Result<Self> {
        let total: f64 = members.iter().map(|m| m.1).sum();
        if members.is_empty() || members.iter().any(|m| m.1.is_nan() || m.1 < 0.0) || (total - 1.0).abs() > 1e-12 {
            return Err(WalkError::Precondition(format!(
                "ensemble weights must be nonnegative and sum to 1 (got {total})"
            )));
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[(Site, f64)] {
        &self.members
    }

    pub fn total_weight(&self) -> f64 {
        self.members.iter().map(|m| m.1).sum()
    }
}

/// The walk operator `U` acting on windowed states.
#[derive(Debug, Clone, PartialEq)]
pub struct Walk {
    params: RwParams,
    coin: Matrix6<f64>,
}

impl Walk {
    pub fn new(params: &RwParams) -> Self {
        Self {
            params: *params,
            coin: coin_operator(params),
        }
    }

    /// Replaces the coin; a hook for negative controls.
    pub fn with_coin(params: &RwParams, coin: Matrix6<f64>) -> Self {
        Self { params: *params, coin }
    }

    pub fn params(&self) -> &RwParams {
        &self.params
    }

    pub fn coin(&self) -> &Matrix6<f64> {
        &self.coin
    }

    /// Fiber operator consistent with this walk's coin.
    pub fn fiber(&self, k: f64) -> TwistedUnitary {
        TwistedUnitary::with_coin(&self.coin, k)
    }

    fn check_boundary(&self, state: &StateVector) -> Result<()> {
        let w = state.window;
        for cell in [w.jmin(), w.jmax()] {
            if state.cell(cell).iter().any(|z| *z != Complex64::new(0.0, 0.0)) {
                return Err(WalkError::WindowOverflow {
                    cell,
                    jmin: w.jmin(),
                    jmax: w.jmax(),
                });
            }
        }
        Ok(())
    }

    fn step_into(&self, src: &[Complex64], dst: &mut [Complex64]) {
        let cells = src.len() / 6;
        let zero = Complex64::new(0.0, 0.0);
        for c in 0..cells {
            let at = |cell: usize, arc: usize| src[6 * cell + arc];
            // reversal: (j,e-) comes from (j-1,ē-), (j,ē-) from (j+1,e-)
            let flipped = [
                at(c, 3),
                at(c, 4),
                if c > 0 { at(c - 1, 5) } else { zero },
                at(c, 0),
                at(c, 1),
                if c + 1 < cells { at(c + 1, 2) } else { zero },
            ];
            let out = &mut dst[6 * c..6 * c + 6];
            for (e, slot) in out.iter_mut().enumerate() {
                let mut acc = zero;
                for (f, v) in flipped.iter().enumerate() {
                    let w = self.coin[(e, f)];
                    if w != 0.0 {
                        acc += v * w;
                    }
                }
                *slot = acc;
            }
        }
    }

    /// One application of `U`. Fails if the boundary cells carry amplitude.
    pub fn step(&self, state: &StateVector) -> Result<StateVector> {
        self.check_boundary(state)?;
        let mut out = StateVector::zeros(state.window);
        self.step_into(&state.amps, &mut out.amps);
        Ok(out)
    }

    pub fn evolve(&self, state: &StateVector, n: usize) -> Result<StateVector> {
        self.evolve_with(state, n, |_, _| ())
    }

    /// Evolves `n` steps, calling `observe(t, ψ_t)` for `t = 0..=n`.
    pub fn evolve_with(
        &self,
        state: &StateVector,
        n: usize,
        mut observe: impl FnMut(usize, &StateVector),
    ) -> Result<StateVector> {
        let mut cur = state.clone();
        let mut next = StateVector::zeros(state.window);
        observe(0, &cur);
        for t in 1..=n {
            self.check_boundary(&cur)?;
            self.step_into(&cur.amps, &mut next.amps);
            std::mem::swap(&mut cur, &mut next);
            observe(t, &cur);
        }
        Ok(cur)
    }

    /// `μ_n` for the mixture: the weighted average of the member distributions.
    pub fn ensemble_distribution(&self, ensemble: &InitialEnsemble, n: usize, window: Window) -> Result<Distribution> {
        let parts: Vec<Result<Distribution>> = ensemble
            .members()
            .par_iter()
            .map(|&(site, _)| {
                let psi = StateVector::basis(window, site)?;
                Ok(self.evolve(&psi, n)?.distribution())
            })
            .collect();
        let mut out = Distribution::zeros(window);
        for (part, &(_, w)) in parts.into_iter().zip(ensemble.members()) {
            out.accumulate(&part?, w)?;
        }
        Ok(out)
    }

    /// `(1/(hi - lo)) Σ_{t=lo}^{hi-1} μ_t` for the mixture.
    pub fn ensemble_time_average(
        &self,
        ensemble: &InitialEnsemble,
        lo: usize,
        hi: usize,
        window: Window,
    ) -> Result<Distribution> {
        if hi <= lo {
            return Err(WalkError::Precondition(format!("empty time range [{lo}, {hi})")));
        }
        let parts: Vec<Result<Distribution>> = ensemble
            .members()
            .par_iter()
            .map(|&(site, _)| {
                let psi = StateVector::basis(window, site)?;
                let mut acc = Distribution::zeros(window);
                self.evolve_with(&psi, hi - 1, |t, s| {
                    if t >= lo {
                        for (a, c) in acc.masses.iter_mut().zip(s.amps.chunks_exact(6)) {
                            *a += c.iter().map(|z| z.norm_sqr()).sum::<f64>();
                        }
                    }
                })?;
                Ok(acc)
            })
            .collect();
        let mut out = Distribution::zeros(window);
        let span = (hi - lo) as f64;
        for (part, &(_, w)) in parts.into_iter().zip(ensemble.members()) {
            out.accumulate(&part?, w / span)?;
        }
        Ok(out)
    }
}

fn matrix_power(m: &Matrix6<Complex64>, mut n: usize) -> Matrix6<Complex64> {
    let mut result = Matrix6::identity();
    let mut base = *m;
    while n > 0 {
        if n & 1 == 1 {
            result *= base;
        }
        base = base * base;
        n >>= 1;
    }
    result
}

/// Agreement required between the full trapezoid grid and its even-indexed
/// half before the result is accepted.
pub const FOURIER_GRID_TOL: f64 = 1e-10;

/// `E[e^{iξX_n}] = ∫ ⟨Ψ̂_n(k), Ψ̂_n(k+ξ)⟩ dk/2π` by the trapezoid rule on
/// `grid` points (a power of two, at least [`MIN_FOURIER_GRID`]).
pub fn fourier_char_fn(walk: &Walk, ensemble: &InitialEnsemble, n: usize, xi: f64, grid: usize) -> Result<Complex64> {
    if grid < MIN_FOURIER_GRID || !grid.is_power_of_two() {
        return Err(WalkError::Precondition(format!(
            "quadrature grid must be a power of two ≥ {MIN_FOURIER_GRID} (got {grid})"
        )));
    }
    let values: Vec<Complex64> = (0..grid)
        .into_par_iter()
        .map(|i| {
            let k = std::f64::consts::TAU * i as f64 / grid as f64;
            let a = matrix_power(&walk.fiber(k).matrix, n);
            let b = matrix_power(&walk.fiber(k + xi).matrix, n);
            ensemble
                .members()
                .iter()
                .map(|&(site, w)| {
                    // Ψ̂_0(k) = e^{ikj} δ_e contributes the phase e^{iξj}
                    let e = site.arc.index();
                    let overlap: Complex64 = (0..6).map(|r| a[(r, e)].conj() * b[(r, e)]).sum();
                    overlap * Complex64::from_polar(w, xi * site.cell as f64)
                })
                .sum()
        })
        .collect();
    let full = values.iter().sum::<Complex64>() / grid as f64;
    let half = values.iter().step_by(2).sum::<Complex64>() / (grid / 2) as f64;
    if (full - half).norm() > FOURIER_GRID_TOL {
        return Err(WalkError::Numerical(format!(
            "Fourier quadrature unresolved on {grid} points: full and half grids differ by {:e}",
            (full - half).norm()
        )));
    }
    Ok(full)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn transient() -> RwParams {
        RwParams::new(0.7, 0.3, 0.5).unwrap()
    }

    fn basis(site: Site) -> StateVector {
        StateVector::basis(Window::symmetric(4), site).unwrap()
    }

    #[test]
    fn grover_rule_examples() {
        let walk = Walk::new(&RwParams::grover());
        let out = walk.step(&basis(Site::new(0, Arc::E0))).unwrap();
        assert!((out.get(Site::new(0, Arc::E0Bar)) - c(1.0)).norm() < 1e-15);
        assert!((out.norm_sqr() - 1.0).abs() < 1e-15);

        let out = walk.step(&basis(Site::new(0, Arc::EMinusBar))).unwrap();
        assert!((out.get(Site::new(1, Arc::E0)) - c(2.0 / 3.0)).norm() < 1e-15);
        assert!((out.get(Site::new(1, Arc::EPlus)) - c(2.0 / 3.0)).norm() < 1e-15);
        assert!((out.get(Site::new(1, Arc::EMinus)) - c(-1.0 / 3.0)).norm() < 1e-15);
        assert!((out.distribution().mass(1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_steps_from_e0() {
        let walk = Walk::new(&RwParams::grover());
        let psi = basis(Site::new(0, Arc::E0));
        assert_eq!(walk.evolve(&psi, 0).unwrap(), psi);
        let out = walk.evolve(&psi, 2).unwrap();
        assert_eq!(out, walk.step(&walk.step(&psi).unwrap()).unwrap());
        let want = [(Arc::E0, -1.0 / 3.0), (Arc::EPlus, 2.0 / 3.0), (Arc::EMinus, 2.0 / 3.0)];
        for (arc, v) in want {
            assert!((out.get(Site::new(0, arc)) - c(v)).norm() < 1e-15);
        }
        assert!((out.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn overflow_is_reported() {
        let walk = Walk::new(&transient());
        let w = Window::symmetric(3);
        let psi = StateVector::basis(w, Site::new(0, Arc::EMinus)).unwrap();
        let err = walk.evolve(&psi, 10).unwrap_err();
        assert!(matches!(err, WalkError::WindowOverflow { .. }), "{err}");
        let edge = StateVector::basis(w, Site::new(3, Arc::E0)).unwrap();
        assert!(matches!(
            walk.step(&edge),
            Err(WalkError::WindowOverflow { cell: 3, .. })
        ));
    }

    #[test]
    fn point_mass_moments() {
        let d = basis(Site::new(0, Arc::E0)).distribution();
        assert_eq!(d.mass(0), 1.0);
        assert_eq!(d.moment(1), 0.0);
        assert_eq!(d.moment(2), 0.0);
        assert!((d.char_fn(0.7) - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn ensemble_first_step() {
        let walk = Walk::new(&RwParams::grover());
        let w = light_cone_window(1);
        let d0 = walk.ensemble_distribution(&InitialEnsemble::mixed(), 0, w).unwrap();
        assert!((d0.mass(0) - 1.0).abs() < 1e-15);
        let d1 = walk.ensemble_distribution(&InitialEnsemble::mixed(), 1, w).unwrap();
        assert!((d1.mass(1) - 1.0 / 6.0).abs() < 1e-15);
        assert!((d1.mass(-1) - 1.0 / 6.0).abs() < 1e-15);
        assert!((d1.mass(0) - 4.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn recurrent_ensemble_has_no_drift() {
        let n = 500;
        let walk = Walk::new(&RwParams::grover());
        let d = walk
            .ensemble_distribution(&InitialEnsemble::mixed(), n, light_cone_window(n))
            .unwrap();
        assert!((d.total() - 1.0).abs() < 1e-10);
        assert!((d.mean() / n as f64).abs() < 0.01);
    }

    #[test]
    fn long_run_keeps_norm_and_light_cone() {
        let n = 1000;
        let walk = Walk::new(&transient());
        let w = light_cone_window(n);
        let psi = StateVector::basis(w, Site::new(0, Arc::EPlus)).unwrap();
        let out = walk.evolve(&psi, n).unwrap();
        assert!((out.norm_sqr() - 1.0).abs() < 1e-9);
        let (lo, hi) = out.support().unwrap();
        assert!(lo >= -(n as i64) && hi <= n as i64 + 1);
    }

    #[test]
    fn time_average_of_single_step_is_initial() {
        let walk = Walk::new(&transient());
        let ens = InitialEnsemble::pure(Site::new(0, Arc::EPlusBar));
        let d = walk.ensemble_time_average(&ens, 0, 1, light_cone_window(1)).unwrap();
        assert_eq!(d.mass(0), 1.0);
        assert!(walk.ensemble_time_average(&ens, 3, 3, light_cone_window(3)).is_err());
    }

    #[test]
    fn fourier_matches_real_space() {
        for params in [RwParams::grover(), transient()] {
            let walk = Walk::new(&params);
            let ens = InitialEnsemble::mixed();
            for n in [0, 1, 4, 10] {
                let d = walk.ensemble_distribution(&ens, n, light_cone_window(n)).unwrap();
                for xi in [0.0, 0.1, 0.5, 1.0] {
                    let f = fourier_char_fn(&walk, &ens, n, xi, 4096).unwrap();
                    assert!((f - d.char_fn(xi)).norm() < 1e-8, "n={n} ξ={xi}");
                }
            }
        }
    }

    #[test]
    fn fourier_grid_validation() {
        let walk = Walk::new(&RwParams::grover());
        let ens = InitialEnsemble::mixed();
        assert!(fourier_char_fn(&walk, &ens, 1, 0.1, 1000).is_err());
        assert!(fourier_char_fn(&walk, &ens, 1, 0.1, 2048).is_err());
        // degree 2n exceeds the half grid: the check must trip
        assert!(matches!(
            fourier_char_fn(&walk, &ens, 3000, 0.3, 4096),
            Err(WalkError::Numerical(_))
        ));
    }

    #[test]
    fn off_origin_ensemble_phase() {
        let walk = Walk::new(&transient());
        let ens =
            InitialEnsemble::new(vec![(Site::new(2, Arc::EMinus), 0.5), (Site::new(-1, Arc::E0Bar), 0.5)]).unwrap();
        let n = 5;
        let d = walk.ensemble_distribution(&ens, n, light_cone_window(n + 2)).unwrap();
        let f = fourier_char_fn(&walk, &ens, n, 0.4, 4096).unwrap();
        assert!((f - d.char_fn(0.4)).norm() < 1e-10);
    }

    fn params_strategy() -> impl Strategy<Value = RwParams> {
        (0.01f64..0.99, 0.01f64..0.99, 0.01f64..0.99).prop_map(|(p, q, r)| RwParams::new(p, q, r).unwrap())
    }

    proptest! {
        #[test]
        fn step_preserves_norm(
            params in params_strategy(),
            amps in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 6 * 5),
        ) {
            let w = Window::symmetric(3);
            let mut full = vec![Complex64::new(0.0, 0.0); w.len()];
            full[6..36].copy_from_slice(&amps.iter().map(|&(a, b)| Complex64::new(a, b)).collect::<Vec<_>>());
            let psi = StateVector::from_amplitudes(w, full).unwrap();
            prop_assume!(psi.norm() > 1e-3);
            let out = Walk::new(&params).step(&psi).unwrap();
            prop_assert!((out.norm() - psi.norm()).abs() < 1e-12 * psi.norm().max(1.0));
        }

        #[test]
        fn light_cone(params in params_strategy(), arc in 0usize..6, n in 0usize..60) {
            let walk = Walk::new(&params);
            let psi = StateVector::basis(light_cone_window(n), Site::new(0, Arc::ALL[arc])).unwrap();
            let d = walk.evolve(&psi, n).unwrap().distribution();
            for (j, m) in d.iter() {
                if j < -(n as i64) || j > n as i64 + 1 {
                    prop_assert_eq!(m, 0.0);
                }
            }
            prop_assert!((d.total() - 1.0).abs() < 1e-12);
        }
    }
}
