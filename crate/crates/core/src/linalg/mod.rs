//! Dense complex linear algebra for small quantum systems.

mod eig;
mod matrix;
pub mod random;
mod state;

pub use eig::{
    hermitian_eig, operator_norm_psd, psd_eig, psd_power, HermitianEigen, PsdExponent,
    HERMITIAN_TOL, PSD_TOL, RANK_TOL,
};
pub use matrix::{embed, lift_right, ComplexMatrix};
pub use state::{partial_trace, permute_subsystems, DensityOperator, PureState, STATE_TOL};

use num_complex::Complex64;

/// `[1, σ_X, σ_Y, σ_Z]`
pub fn paulis() -> [ComplexMatrix; 4] {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let m = |a: [Complex64; 4]| ComplexMatrix::from_vec(2, 2, a.to_vec()).expect("2x2");
    [
        ComplexMatrix::identity(2),
        m([c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
        m([c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
        m([c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
    ]
}

/// `|+>` for `bit = 0`, `|->` for `bit = 1`.
pub fn x_ket(bit: u8) -> [Complex64; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let s = if bit == 0 { h } else { -h };
    [Complex64::new(h, 0.0), Complex64::new(s, 0.0)]
}

/// `|0>` for `bit = 0`, `|1>` for `bit = 1`.
pub fn z_ket(bit: u8) -> [Complex64; 2] {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    if bit == 0 {
        [one, zero]
    } else {
        [zero, one]
    }
}
