//! Hermitian eigendecomposition by cyclic complex Jacobi rotations, and the
//! spectral functions built on it.

use num_complex::Complex64;

use super::matrix::{ComplexMatrix, ZERO};
use crate::error::{QkdError, Result};

/// Hermiticity tolerance accepted by [`hermitian_eig`].
pub const HERMITIAN_TOL: f64 = 1e-8;
/// Smallest eigenvalue still considered nonnegative.
pub const PSD_TOL: f64 = 1e-10;
/// Eigenvalues below this are treated as zero by pseudo-inverse powers.
pub const RANK_TOL: f64 = 1e-10;

const OFF_DIAGONAL_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 100;

/// Spectrum of a Hermitian matrix: eigenvalues in descending order with the
/// matching orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn eigenvector(&self, k: usize) -> Vec<Complex64> {
        self.eigenvectors.column(k)
    }

    /// `V f(Λ) V†`
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let weights: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut out = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = ZERO;
                for (k, &w) in weights.iter().enumerate() {
                    if w != 0.0 {
                        acc += v[(i, k)] * v[(j, k)].conj() * w;
                    }
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_spectrum(|l| l)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Each rotation first removes the phase of the pivot `a_pq`, then applies
/// the real Jacobi rotation that annihilates it. Sweeps run until the
/// off-diagonal Frobenius mass falls below `1e-14` relative to the norm of
/// the input (absolute when the input norm is below one).
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(QkdError::DimensionMismatch(format!(
            "eigendecomposition of a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    m.ensure_hermitian(HERMITIAN_TOL)?;

    let n = m.rows();
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let target = OFF_DIAGONAL_TOL * a.frobenius_norm().max(1.0);

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a);
        if off < target {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(QkdError::NoConvergence { sweeps, off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]));

    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            eigenvectors[(r, dst)] = v[(r, src)];
        }
    }
    Ok(HermitianEigen {
        eigenvalues,
        eigenvectors,
    })
}

/// One two-sided rotation `A <- U† A U`, `V <- V U` zeroing `A[p][q]`.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let magnitude = apq.norm();
    if magnitude < f64::MIN_POSITIVE {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // phase that makes the pivot real and positive
    let phase = (apq / magnitude).conj();
    let theta = (aqq - app) / (2.0 * magnitude);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // U restricted to (p, q)
    let upp = Complex64::new(c, 0.0);
    let upq = Complex64::new(s, 0.0);
    let uqp = phase * (-s);
    let uqq = phase * c;

    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * upp + akq * uqp;
        a[(k, q)] = akp * upq + akq * uqq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = upp.conj() * apk + uqp.conj() * aqk;
        a[(q, k)] = upq.conj() * apk + uqq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * upp + vkq * uqp;
        v[(k, q)] = vkp * upq + vkq * uqq;
    }
}

/// Exponents supported by [`psd_power`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsdExponent {
    Half,
    /// Moore-Penrose convention: the kernel (eigenvalues below [`RANK_TOL`]) maps to zero.
    NegativeHalf,
}

/// Spectral decomposition of a PSD matrix, rejecting eigenvalues below `-PSD_TOL`.
pub fn psd_eig(m: &ComplexMatrix) -> Result<HermitianEigen> {
    let eig = hermitian_eig(m)?;
    let min_eigenvalue = eig.min_eigenvalue();
    if min_eigenvalue < -PSD_TOL {
        return Err(QkdError::NotPositive { min_eigenvalue });
    }
    Ok(eig)
}

pub fn psd_power(m: &ComplexMatrix, exponent: PsdExponent) -> Result<ComplexMatrix> {
    let eig = psd_eig(m)?;
    Ok(match exponent {
        PsdExponent::Half => eig.map_spectrum(|l| l.max(0.0).sqrt()),
        PsdExponent::NegativeHalf => {
            eig.map_spectrum(|l| if l < RANK_TOL { 0.0 } else { 1.0 / l.sqrt() })
        }
    })
}

/// `‖F‖∞` for `F ≥ 0`: the largest eigenvalue.
pub fn operator_norm_psd(f: &ComplexMatrix) -> Result<f64> {
    Ok(psd_eig(f)?.max_eigenvalue().max(0.0))
}
