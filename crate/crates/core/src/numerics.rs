//! Shared numeric types, tolerances and dense linear-algebra helpers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Tolerances used when validating kernels, encodings and gates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Row sums and distribution normalisation.
    pub stochastic: f64,
    /// Detailed balance and matrix symmetry.
    pub symmetry: f64,
    /// Agreement of spectra computed along different routes.
    pub spectrum: f64,
    /// Unitarity of gate and circuit matrices.
    pub unitary: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            stochastic: 1e-12,
            symmetry: 1e-10,
            spectrum: 1e-9,
            unitary: 1e-10,
        }
    }
}

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn real_to_complex(m: &DMatrix<f64>) -> CMat {
    m.map(|x| c64(x, 0.0))
}

/// Kronecker product with `a` acting on the more significant qubits.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

/// Largest entry modulus of `a - b`.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Largest entry modulus of `m - mᵀ` (plain transpose, no conjugation).
pub fn max_asymmetry(m: &CMat) -> f64 {
    max_abs_diff(m, &m.transpose())
}

/// Largest entry modulus of `m - m†`.
pub fn max_non_hermiticity(m: &CMat) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// Deviation of `m† m` from the identity.
pub fn unitarity_defect(m: &CMat) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(&(m.adjoint() * m), &identity(m.nrows()))
}

/// Distance between two matrices after removing the best global phase.
pub fn max_abs_diff_up_to_phase(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    let overlap: Complex64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        ONE
    };
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x * phase - y).norm())
        .fold(0.0, f64::max)
}

/// Eigenvalues and orthonormal eigenvectors of a Hermitian matrix, ascending.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let herm = (m + m.adjoint()).scale(0.5);
    let eig = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    (values, vectors)
}

/// Eigenvalues of a general complex matrix from its Schur form.
///
/// Returns `None` if the QR iteration does not converge.
pub fn eigenvalues(m: &CMat) -> Option<Vec<Complex64>> {
    let schur = m.clone().try_schur(1e-15, 10_000)?;
    let (_, t) = schur.unpack();
    Some((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Eigenphases in (-π, π] and eigenvectors of a unitary matrix.
///
/// The Hermitian parts `(U + U†)/2` and `(U − U†)/2i` commute; the first is
/// diagonalised and the second is diagonalised inside each cluster of equal
/// cosines, which stays exact for degenerate spectra.
pub fn unitary_eigen(u: &CMat) -> (Vec<f64>, CMat) {
    let dim = u.nrows();
    let cos_part = (u + u.adjoint()).scale(0.5);
    let sin_part = (u - u.adjoint()) * Complex64::new(0.0, -0.5);
    let (cosines, basis) = hermitian_eigen(&cos_part);
    let mut phases = Vec::with_capacity(dim);
    let mut columns = Vec::with_capacity(dim);
    let mut start = 0;
    while start < dim {
        let mut end = start + 1;
        while end < dim && cosines[end] - cosines[end - 1] < 1e-9 {
            end += 1;
        }
        let q = basis.columns(start, end - start).into_owned();
        let restricted = q.adjoint() * &sin_part * &q;
        let (sines, local) = hermitian_eigen(&restricted);
        let vectors = &q * local;
        for (k, s) in sines.iter().enumerate() {
            let v = vectors.column(k).into_owned();
            // Rayleigh quotient gives the phase to full precision.
            let z = (v.adjoint() * u * &v)[(0, 0)];
            let phase = if z.norm() > 0.5 {
                z.arg()
            } else {
                s.atan2(cosines[start])
            };
            phases.push(phase);
            columns.push(v);
        }
        start = end;
    }
    (phases, CMat::from_columns(&columns))
}

/// Eigenphases in (-π, π] of a unitary matrix.
pub fn eigenphases(u: &CMat) -> Vec<f64> {
    unitary_eigen(u).0
}

/// Eigenvalues of a general real matrix, sorted by real part then imaginary part.
pub fn real_matrix_eigenvalues(m: &DMatrix<f64>) -> Option<Vec<Complex64>> {
    let schur = m.clone().try_schur(1e-15, 10_000)?;
    let mut ev: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Some(ev)
}

/// Signed angular distance between two phases, wrapped into (-π, π].
pub fn phase_distance(a: f64, b: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut d = (a - b) % two_pi;
    if d > std::f64::consts::PI {
        d -= two_pi;
    } else if d <= -std::f64::consts::PI {
        d += two_pi;
    }
    d.abs()
}

/// Householder-type unitary whose first column is the normalised `v`.
///
/// For real `v` the result is a real symmetric involution.
pub fn householder_from_e0(v: &CVec) -> CMat {
    let dim = v.len();
    let norm = v.norm();
    assert!(norm > 0.0, "cannot prepare the zero vector");
    let target = v.unscale(norm);
    // Rotate the phase of v[0] onto the real axis so that w ≠ 0 unless v = e0.
    let phase = if target[0].norm() > 1e-300 {
        target[0] / target[0].norm()
    } else {
        ONE
    };
    let mut e0 = CVec::zeros(dim);
    e0[0] = phase;
    let w = &e0 - &target;
    let wn = w.norm();
    if wn < 1e-14 {
        // v is e0 up to phase.
        let mut m = identity(dim);
        m[(0, 0)] = phase;
        return m;
    }
    let w = w.unscale(wn);
    // H = (I - 2 w w†) maps e0·phase to target; multiply by phase to fix e0.
    let h = identity(dim) - (&w * w.adjoint()).scale(2.0);
    let mut fix = identity(dim);
    fix[(0, 0)] = phase;
    h * fix
}
