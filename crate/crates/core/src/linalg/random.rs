//! Seeded samplers for random test and verification inputs.
//!
//! Density operators are drawn as `G G† / Tr(G G†)` where `G` has independent
//! complex standard normal entries (real and imaginary parts `N(0, 1/2)`).

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::matrix::ComplexMatrix;
use super::state::DensityOperator;

/// Human-readable description of the density-operator sampler.
pub const DENSITY_SAMPLER: &str =
    "rho = G G^dagger / Tr(G G^dagger), G square with iid complex standard normal entries";

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let data = (0..rows * cols).map(|_| complex_normal(rng)).collect();
    ComplexMatrix::from_vec(rows, cols, data).expect("shape")
}

pub fn hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    ginibre(n, n, rng).hermitian_part()
}

/// Random PSD matrix of the given rank (unnormalized).
pub fn psd<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(n, rank, rng);
    (&g * &g.adjoint()).hermitian_part()
}

/// Full-rank random density operator on `dims`.
pub fn density<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> DensityOperator {
    let n: usize = dims.iter().product();
    let m = psd(n, n, rng);
    let tr = m.trace().re;
    DensityOperator::from_parts(dims.to_vec(), m.scale_real(1.0 / tr))
}

/// Haar-random unitary via Gram-Schmidt on a Ginibre matrix.
pub fn unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(n, n, rng);
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v = g.column(j);
        for u in &cols {
            let proj: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= proj * ui;
            }
        }
        let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= norm);
        cols.push(v);
    }
    let mut out = ComplexMatrix::zeros(n, n);
    for (j, col) in cols.iter().enumerate() {
        for (i, &a) in col.iter().enumerate() {
            out[(i, j)] = a;
        }
    }
    out
}
