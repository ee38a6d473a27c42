//! Eigenvalues of small dense complex matrices.
//!
//! Fiber operators of the walk are unitary and frequently permutation-like
//! (e.g. the shift at k = 0), which stalls a plain Wilkinson-shifted QR
//! iteration. The solver below is the textbook single-shift Hessenberg QR
//! with deflation plus periodic exceptional shifts.

use nalgebra::{DMatrix, Hessenberg};
use num_complex::Complex64;

use crate::error::{Result, WalkError};

const ITERATIONS_PER_EIGENVALUE: usize = 60;
const EXCEPTIONAL_EVERY: usize = 10;

/// All eigenvalues of a square complex matrix, in no particular order.
pub fn eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(WalkError::Precondition(format!(
            "eigenvalues of a non-square {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = Hessenberg::new(m.clone()).h();
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let mut hi = n - 1;
    let mut since_deflation = 0;
    let budget = ITERATIONS_PER_EIGENVALUE * n;
    let mut total = 0;

    loop {
        // deflate converged trailing entries
        while hi > 0 && negligible(&h, hi, scale) {
            h[(hi, hi - 1)] = Complex64::new(0.0, 0.0);
            out[hi] = h[(hi, hi)];
            hi -= 1;
            since_deflation = 0;
        }
        if hi == 0 {
            out[0] = h[(0, 0)];
            return Ok(out);
        }
        let mut lo = hi - 1;
        while lo > 0 && !negligible(&h, lo, scale) {
            lo -= 1;
        }
        if lo > 0 {
            h[(lo, lo - 1)] = Complex64::new(0.0, 0.0);
        }

        total += 1;
        since_deflation += 1;
        if total > budget {
            return Err(WalkError::NoConvergence {
                what: "Hessenberg QR",
                iterations: budget,
                residual: h[(hi, hi - 1)].norm(),
            });
        }

        let mu = if since_deflation % EXCEPTIONAL_EVERY == 0 {
            // an off-axis perturbation breaks cyclic symmetry
            h[(hi, hi)] + h[(hi, hi - 1)].norm() * Complex64::new(0.75, 0.4375)
        } else {
            wilkinson_shift(&h, hi)
        };
        qr_step(&mut h, lo, hi, mu);
    }
}

fn negligible(h: &DMatrix<Complex64>, i: usize, scale: f64) -> bool {
    let sub = h[(i, i - 1)].norm();
    let diag = h[(i, i)].norm() + h[(i - 1, i - 1)].norm();
    sub <= f64::EPSILON * diag.max(scale * 1e-3) || sub <= f64::MIN_POSITIVE
}

fn wilkinson_shift(h: &DMatrix<Complex64>, hi: usize) -> Complex64 {
    let a = h[(hi - 1, hi - 1)];
    let b = h[(hi - 1, hi)];
    let c = h[(hi, hi - 1)];
    let d = h[(hi, hi)];
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mid = (a + d) * 0.5;
    let (l1, l2) = (mid + disc, mid - disc);
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// `(c, s)` with `c` real such that `[[c, s], [-s̄, c]] · [a; b] = [ν; 0]`.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let na = a.norm();
    let nb = b.norm();
    if nb == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if na == 0.0 {
        return (0.0, b.conj() / nb);
    }
    let nu = na.hypot(nb);
    (na / nu, a / na * b.conj() / nu)
}

/// One explicit shifted QR sweep on the active block `lo..=hi`.
fn qr_step(h: &mut DMatrix<Complex64>, lo: usize, hi: usize, mu: Complex64) {
    for i in lo..=hi {
        h[(i, i)] -= mu;
    }
    let mut rotations = Vec::with_capacity(hi - lo);
    for i in lo..hi {
        let (c, s) = givens(h[(i, i)], h[(i + 1, i)]);
        for j in i..=hi {
            let x = h[(i, j)];
            let y = h[(i + 1, j)];
            h[(i, j)] = x * c + s * y;
            h[(i + 1, j)] = -s.conj() * x + y * c;
        }
        rotations.push((c, s));
    }
    for (offset, &(c, s)) in rotations.iter().enumerate() {
        let i = lo + offset;
        for row in lo..=(i + 1).min(hi) {
            let x = h[(row, i)];
            let y = h[(row, i + 1)];
            h[(row, i)] = x * c + s.conj() * y;
            h[(row, i + 1)] = -s * x + y * c;
        }
    }
    for i in lo..=hi {
        h[(i, i)] += mu;
    }
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Greedy matching distance between two multisets of complex numbers:
/// the largest distance from an element of `a` to its paired element of `b`.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|l, r| l.1.total_cmp(&r.1))
            .expect("lengths match");
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Schur;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn cyclic_permutation() {
        // plain shifted QR makes no progress on this one
        for n in 2..=8 {
            let mut p = DMatrix::zeros(n, n);
            for i in 0..n {
                p[((i + 1) % n, i)] = c(1.0, 0.0);
            }
            let ev = eigenvalues(&p).unwrap();
            let roots: Vec<_> = (0..n)
                .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64))
                .collect();
            assert!(multiset_distance(&ev, &roots) < 1e-12, "n = {n}: {ev:?}");
        }
    }

    #[test]
    fn triangular_and_trivial() {
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[
                c(1.0, 1.0),
                c(2.0, 0.0),
                c(0.0, 3.0),
                c(0.0, 0.0),
                c(-2.0, 0.0),
                c(5.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.5, -0.5),
            ],
        );
        let ev = eigenvalues(&m).unwrap();
        assert!(multiset_distance(&ev, &[c(1.0, 1.0), c(-2.0, 0.0), c(0.5, -0.5)]) < 1e-14);
        assert!(eigenvalues(&DMatrix::zeros(0, 0)).unwrap().is_empty());
        assert_eq!(
            eigenvalues(&DMatrix::from_element(1, 1, c(3.0, 4.0))).unwrap(),
            vec![c(3.0, 4.0)]
        );
        assert!(eigenvalues(&DMatrix::zeros(2, 3)).is_err());
        assert!(multiset_distance(&eigenvalues(&DMatrix::zeros(4, 4)).unwrap(), &[c(0.0, 0.0); 4]) < 1e-15);
    }

    #[test]
    fn defective_jordan_block() {
        let m = DMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)]);
        let ev = eigenvalues(&m).unwrap();
        assert!(multiset_distance(&ev, &[c(2.0, 0.0); 2]) < 1e-7);
    }

    fn matrix_strategy(n: usize) -> impl Strategy<Value = DMatrix<Complex64>> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n)
            .prop_map(move |v| DMatrix::from_iterator(n, n, v.into_iter().map(|(a, b)| c(a, b))))
    }

    proptest! {
        #[test]
        fn agrees_with_schur_on_generic_matrices(m in (2usize..7).prop_flat_map(matrix_strategy)) {
            let ours = eigenvalues(&m).unwrap();
            let schur = Schur::try_new(m.clone(), 1e-15, 10_000);
            prop_assume!(schur.is_some());
            let theirs: Vec<_> = schur.unwrap().eigenvalues().unwrap().iter().copied().collect();
            prop_assert!(multiset_distance(&ours, &theirs) < 1e-8);
            let trace: Complex64 = ours.iter().sum();
            prop_assert!((trace - m.trace()).norm() < 1e-10);
        }

        #[test]
        fn unitary_spectrum_on_circle(m in matrix_strategy(6)) {
            let q = m.qr().q();
            for z in eigenvalues(&q).unwrap() {
                prop_assert!((z.norm() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn hermitian_agrees(m in matrix_strategy(5)) {
            let h = &m + m.adjoint();
            let mut ours: Vec<f64> = eigenvalues(&h).unwrap().iter().map(|z| z.re).collect();
            ours.sort_by(f64::total_cmp);
            let theirs = hermitian_eigenvalues(&h);
            for (a, b) in ours.iter().zip(&theirs) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
    }
}
