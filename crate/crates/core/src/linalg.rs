//! Small complex linear-algebra helpers shared across modules.

use crate::{CMat, CVec, C64};
use rand::Rng;
use rand_distr::StandardNormal;

/// Largest absolute deviation from Hermitian symmetry, `max |A - A^H|`.
pub fn hermitian_deviation(a: &CMat) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let d = (a[(i, j)] - a[(j, i)].conj()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Replace `A` with `(A + A^H)/2` to scrub accumulation noise before
/// eigen/Cholesky factorizations that assume exact Hermitian input.
pub fn hermitianize(a: &mut CMat) {
    let h = (a.clone() + a.adjoint()) * C64::new(0.5, 0.0);
    *a = h;
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &CMat) -> Vec<f64> {
    let mut vals: Vec<f64> = a
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
    vals
}

/// Dominant eigenpair of a Hermitian PSD matrix.
///
/// The eigenvector gauge is fixed by rotating so the largest-magnitude entry
/// (lowest index on ties) is real positive, which makes the result
/// deterministic across eigensolver phase conventions.
pub fn dominant_eigenpair(a: &CMat) -> (f64, CVec) {
    let eig = a.clone().symmetric_eigen();
    let mut best = 0;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] > eig.eigenvalues[best] {
            best = i;
        }
    }
    let mut v: CVec = eig.eigenvectors.column(best).into_owned();
    let mut pivot = 0;
    for i in 1..v.len() {
        if v[i].norm() > v[pivot].norm() + 1e-14 {
            pivot = i;
        }
    }
    let mag = v[pivot].norm();
    if mag > 0.0 {
        let rot = v[pivot].conj() / C64::new(mag, 0.0);
        v *= rot;
    }
    (eig.eigenvalues[best], v)
}

/// `log2 det(A)` of a Hermitian positive-definite matrix via Cholesky.
pub fn log2_det_hermitian_pd(a: &CMat) -> Option<f64> {
    let chol = nalgebra::Cholesky::new(a.clone())?;
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        let d = chol.l()[(i, i)].re;
        if d <= 0.0 {
            return None;
        }
        acc += d.ln();
    }
    Some(2.0 * acc / std::f64::consts::LN_2)
}

/// Relative Frobenius distance `||A - B||_F / ||B||_F`.
pub fn rel_frobenius(a: &CMat, b: &CMat) -> f64 {
    let denom = b.norm();
    if denom == 0.0 {
        return a.norm();
    }
    (a - b).norm() / denom
}

/// One sample of the circularly symmetric standard complex normal CN(0, 1).
pub fn standard_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Column vector of i.i.d. CN(0, sigma2) samples.
pub fn complex_normal_vector<R: Rng + ?Sized>(rng: &mut R, n: usize, sigma2: f64) -> CVec {
    let s = sigma2.sqrt();
    CVec::from_fn(n, |_, _| standard_complex(rng) * s)
}

/// `rows x cols` matrix of i.i.d. CN(0, sigma2) samples, filled column-major.
pub fn complex_normal_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    sigma2: f64,
) -> CMat {
    let s = sigma2.sqrt();
    CMat::from_fn(rows, cols, |_, _| standard_complex(rng) * s)
}
