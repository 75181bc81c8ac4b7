use num_complex::Complex64;

use super::eig::{hermitian_eig, PSD_TOL};
use super::matrix::{ComplexMatrix, ZERO};
use crate::error::{QkdError, Result};

/// Tolerance for Hermiticity, positivity and unit trace of a density operator.
pub const STATE_TOL: f64 = 1e-10;

fn check_dims(dims: &[usize], total: usize) -> Result<()> {
    if dims.contains(&0) {
        return Err(QkdError::DimensionMismatch(format!(
            "subsystem dimensions must be positive, got {dims:?}"
        )));
    }
    let product: usize = dims.iter().product();
    if product != total {
        return Err(QkdError::DimensionMismatch(format!(
            "subsystem dimensions {dims:?} multiply to {product}, expected {total}"
        )));
    }
    Ok(())
}

/// Hermitian, positive semidefinite, unit-trace operator on a tensor product
/// of subsystems. Subsystem 0 is the leftmost tensor factor.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    dims: Vec<usize>,
    matrix: ComplexMatrix,
}

impl DensityOperator {
    /// Validates Hermiticity, positivity and trace within [`STATE_TOL`].
    pub fn new(dims: Vec<usize>, matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(dims, matrix, STATE_TOL)
    }

    pub fn with_tolerance(dims: Vec<usize>, matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(QkdError::DimensionMismatch(format!(
                "density operator must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        check_dims(&dims, matrix.rows())?;
        matrix.ensure_hermitian(tol)?;
        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > tol {
            return Err(QkdError::BadTrace {
                trace,
                expected: 1.0,
            });
        }
        let min_eigenvalue = hermitian_eig(&matrix)?.min_eigenvalue();
        if min_eigenvalue < -tol.max(PSD_TOL) {
            return Err(QkdError::NotPositive { min_eigenvalue });
        }
        Ok(Self {
            dims,
            matrix: matrix.hermitian_part(),
        })
    }

    /// Skips validation; callers guarantee the invariants by construction.
    pub(crate) fn from_parts(dims: Vec<usize>, matrix: ComplexMatrix) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), matrix.rows());
        Self { dims, matrix }
    }

    /// `I/d` on a single subsystem.
    pub fn maximally_mixed(d: usize) -> Self {
        Self::from_parts(vec![d], ComplexMatrix::identity(d).scale_real(1.0 / d as f64))
    }

    /// `|k><k|` on a single subsystem of dimension `d`.
    pub fn basis(d: usize, k: usize) -> Self {
        Self::from_parts(vec![d], ComplexMatrix::unit(d, k, k))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self::from_parts(dims, self.matrix.kron(&other.matrix))
    }

    /// Reduced state on the subsystems listed in `keep` (kept in their original order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let matrix = partial_trace(&self.matrix, &self.dims, keep)?;
        let dims = kept_dims(&self.dims, keep);
        Ok(Self::from_parts(dims, matrix.hermitian_part()))
    }

    /// Reorders the tensor factors: new subsystem `i` is old subsystem `order[i]`.
    pub fn permute(&self, order: &[usize]) -> Result<Self> {
        let matrix = permute_subsystems(&self.matrix, &self.dims, order)?;
        let dims = order.iter().map(|&i| self.dims[i]).collect();
        Ok(Self::from_parts(dims, matrix))
    }

    /// `U ρ U†` for a unitary `U` on the full space.
    pub fn evolve(&self, unitary: &ComplexMatrix) -> Result<Self> {
        let m = self.matrix.conjugate_by(unitary)?;
        Ok(Self::from_parts(self.dims.clone(), m.hermitian_part()))
    }

    /// `Tr(A ρ)`
    pub fn expectation(&self, a: &ComplexMatrix) -> Result<Complex64> {
        if a.rows() != self.dim() || a.cols() != self.dim() {
            return Err(QkdError::DimensionMismatch(format!(
                "observable of size {}x{} on a state of dimension {}",
                a.rows(),
                a.cols(),
                self.dim()
            )));
        }
        let n = self.dim();
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += a[(i, k)] * self.matrix[(k, i)];
            }
        }
        Ok(acc)
    }
}

/// Normalized state vector on a tensor product of subsystems.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    dims: Vec<usize>,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    pub fn new(dims: Vec<usize>, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_dims(&dims, amplitudes.len())?;
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > STATE_TOL {
            return Err(QkdError::NotNormalized { norm_sqr });
        }
        Ok(Self { dims, amplitudes })
    }

    pub fn from_real(dims: Vec<usize>, amplitudes: &[f64]) -> Result<Self> {
        Self::new(
            dims,
            amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect(),
        )
    }

    /// Computational basis state `|k>` in dimension `d`.
    pub fn basis(d: usize, k: usize) -> Self {
        let mut amplitudes = vec![ZERO; d];
        amplitudes[k] = Complex64::new(1.0, 0.0);
        Self {
            dims: vec![d],
            amplitudes,
        }
    }

    /// `(|00> + |11>)/√2`
    pub fn psi_plus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_real(vec![2, 2], &[h, 0.0, 0.0, h]).expect("normalized")
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let amplitudes = self
            .amplitudes
            .iter()
            .flat_map(|a| other.amplitudes.iter().map(move |b| a * b))
            .collect();
        Self { dims, amplitudes }
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator::from_parts(self.dims.clone(), ComplexMatrix::projector(&self.amplitudes))
    }
}

fn kept_dims(dims: &[usize], keep: &[usize]) -> Vec<usize> {
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    keep.iter().map(|&i| dims[i]).collect()
}

/// Row-major multi-index strides.
fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

/// Partial trace of an arbitrary (not necessarily Hermitian) operator on
/// `dims`, keeping the subsystems in `keep`.
pub fn partial_trace(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    check_dims(dims, m.rows())?;
    if !m.is_square() {
        return Err(QkdError::DimensionMismatch("partial trace of a non-square matrix".into()));
    }
    if let Some(&index) = keep.iter().find(|&&i| i >= dims.len()) {
        return Err(QkdError::SubsystemOutOfRange {
            index,
            count: dims.len(),
        });
    }
    let kept: Vec<bool> = (0..dims.len()).map(|i| keep.contains(&i)).collect();
    let full_strides = strides(dims);
    let kept_dims: Vec<usize> = (0..dims.len()).filter(|&i| kept[i]).map(|i| dims[i]).collect();
    let traced_dims: Vec<usize> = (0..dims.len()).filter(|&i| !kept[i]).map(|i| dims[i]).collect();
    let kept_strides = strides(&kept_dims);
    let traced_strides = strides(&traced_dims);

    let n = m.rows();
    let mut kept_index = vec![0usize; n];
    let mut traced_index = vec![0usize; n];
    for idx in 0..n {
        let (mut ki, mut ti) = (0, 0);
        let (mut kc, mut tc) = (0, 0);
        for (s, (&d, &stride)) in dims.iter().zip(&full_strides).enumerate() {
            let digit = (idx / stride) % d;
            if kept[s] {
                ki += digit * kept_strides[kc];
                kc += 1;
            } else {
                ti += digit * traced_strides[tc];
                tc += 1;
            }
        }
        kept_index[idx] = ki;
        traced_index[idx] = ti;
    }

    let out_dim: usize = kept_dims.iter().product();
    let mut out = ComplexMatrix::zeros(out_dim, out_dim);
    for r in 0..n {
        for c in 0..n {
            if traced_index[r] == traced_index[c] {
                out[(kept_index[r], kept_index[c])] += m[(r, c)];
            }
        }
    }
    Ok(out)
}

/// Reorders tensor factors of an operator on `dims`: new factor `i` is old factor `order[i]`.
pub fn permute_subsystems(
    m: &ComplexMatrix,
    dims: &[usize],
    order: &[usize],
) -> Result<ComplexMatrix> {
    check_dims(dims, m.rows())?;
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..dims.len()).collect::<Vec<_>>() {
        return Err(QkdError::DimensionMismatch(format!(
            "{order:?} is not a permutation of {} subsystems",
            dims.len()
        )));
    }
    let old_strides = strides(dims);
    let new_dims: Vec<usize> = order.iter().map(|&i| dims[i]).collect();
    let new_strides = strides(&new_dims);
    let n = m.rows();
    let map: Vec<usize> = (0..n)
        .map(|new_idx| {
            order
                .iter()
                .enumerate()
                .map(|(pos, &old)| ((new_idx / new_strides[pos]) % new_dims[pos]) * old_strides[old])
                .sum()
        })
        .collect();
    let mut out = ComplexMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            out[(r, c)] = m[(map[r], map[c])];
        }
    }
    Ok(out)
}
