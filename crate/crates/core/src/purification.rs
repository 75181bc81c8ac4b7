//! Purification of an encoding with input-independent average output.
//!
//! Given maps `E_1..E_n` whose uniform average sends every input to the same
//! state `σ_D`, builds a pure state `|φ⟩_CD` purifying `σ_D` and a POVM
//! `{F^i_AC}` such that `n Tr_AC(F^i (ρ_A ⊗ |φ⟩⟨φ|)) = E_i(ρ_A)` for every
//! input `ρ_A`. On the support of `σ_C = Tr_D |φ⟩⟨φ|` the elements are
//!
//! ```text
//! F^i = (1/n) σ_C^{-1/2} (J^i_AC)^T σ_C^{-1/2}
//! ```
//!
//! where `J^i_AC` is the Choi matrix of `E_i` written in the eigenbasis of
//! `σ_D` with the output leg relabelled onto `C`. On the kernel of `σ_C` each
//! element is `(1/n)·I`.

use std::fmt;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channels::{check_fixed_output, kraus_to_choi, probe_states, PauliLabel, QuantumChannel};
use crate::error::{QkdError, Result};
use crate::linalg::{
    hermitian_eig, partial_trace, psd_power, random, ComplexMatrix, DensityOperator, PsdExponent,
    PureState, RANK_TOL,
};
use crate::measurement::min_eigenvalue;

/// Tolerance of the fixed-output precondition.
pub const FIXED_OUTPUT_TOL: f64 = 1e-10;
const CONSTRUCTION_PSD_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct EncodingPurification {
    pub n: usize,
    pub dim_a: usize,
    pub sigma_d: DensityOperator,
    /// State on `C ⊗ D`, `C` first.
    pub phi_cd: PureState,
    /// Elements on `A ⊗ C`, `A` first.
    pub povm: Vec<ComplexMatrix>,
}

impl EncodingPurification {
    pub fn dim_c(&self) -> usize {
        self.sigma_d.dim()
    }

    /// `σ_C = Tr_D |φ⟩⟨φ|`.
    pub fn sigma_c(&self) -> Result<DensityOperator> {
        self.phi_cd.density().partial_trace(&[0])
    }

    /// `I_A ⊗ Π_ker(σ_C)`: the block where the elements are not fixed by the maps.
    pub fn kernel_projector(&self) -> Result<ComplexMatrix> {
        let eig = hermitian_eig(self.sigma_c()?.matrix())?;
        let kernel = eig.map_spectrum(|l| if l < RANK_TOL { 1.0 } else { 0.0 });
        Ok(ComplexMatrix::identity(self.dim_a).kron(&kernel))
    }

    /// Left-hand side `n Tr_AC(F^i (ρ_A ⊗ |φ⟩⟨φ|))` for an arbitrary input operator.
    pub fn simulate(&self, i: usize, rho_a: &ComplexMatrix) -> Result<ComplexMatrix> {
        let dc = self.dim_c();
        let joint = rho_a.kron(self.phi_cd.density().matrix());
        let lifted = self.povm[i].kron(&ComplexMatrix::identity(dc));
        let reduced = partial_trace(&(&lifted * &joint), &[self.dim_a, dc, dc], &[2])?;
        Ok(reduced.scale_real(self.n as f64))
    }
}

fn check_family(maps: &[QuantumChannel]) -> Result<(usize, usize)> {
    let first = maps
        .first()
        .ok_or_else(|| QkdError::DimensionMismatch("empty encoding family".into()))?;
    let dims = (first.dim_in(), first.dim_out());
    if maps.iter().any(|m| (m.dim_in(), m.dim_out()) != dims) {
        return Err(QkdError::DimensionMismatch(
            "encodings in the family have different dimensions".into(),
        ));
    }
    Ok(dims)
}

pub fn purify_encoding(maps: &[QuantumChannel]) -> Result<EncodingPurification> {
    let (dim_a, dim_d) = check_family(maps)?;
    let n = maps.len();
    let sigma_d = check_fixed_output(maps, FIXED_OUTPUT_TOL)?;

    // |φ⟩ = Σ_j √λ_j |j⟩_C |u_j⟩_D
    let eig = hermitian_eig(sigma_d.matrix())?;
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim_d * dim_d];
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        let weight = lambda.max(0.0).sqrt();
        for (m, u) in eig.eigenvector(j).into_iter().enumerate() {
            amplitudes[j * dim_d + m] = u * weight;
        }
    }
    let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amplitudes.iter_mut().for_each(|a| *a /= norm);
    let phi_cd = PureState::new(vec![dim_d, dim_d], amplitudes)?;

    let sigma_c = phi_cd.density().partial_trace(&[0])?;
    let sandwich =
        ComplexMatrix::identity(dim_a).kron(&psd_power(sigma_c.matrix(), PsdExponent::NegativeHalf)?);
    let kernel = hermitian_eig(sigma_c.matrix())?.map_spectrum(|l| if l < RANK_TOL { 1.0 } else { 0.0 });
    let completion = ComplexMatrix::identity(dim_a).kron(&kernel).scale_real(1.0 / n as f64);

    // I_A ⊗ U moves the D leg into the σ_D eigenbasis
    let to_eigenbasis = ComplexMatrix::identity(dim_a).kron(&eig.eigenvectors);

    let mut povm = Vec::with_capacity(n);
    for (index, map) in maps.iter().enumerate() {
        let choi_ad = kraus_to_choi(map);
        let choi_ac = &(&to_eigenbasis.adjoint() * choi_ad.matrix()) * &to_eigenbasis;
        let support = (&(&sandwich * &choi_ac.transpose()) * &sandwich).scale_real(1.0 / n as f64);
        let element = (&support + &completion).hermitian_part();
        let min = min_eigenvalue(std::slice::from_ref(&element))?;
        if min < -CONSTRUCTION_PSD_TOL {
            return Err(QkdError::InconsistentEncoding {
                index,
                min_eigenvalue: min,
            });
        }
        povm.push(element);
    }

    Ok(EncodingPurification {
        n,
        dim_a,
        sigma_d,
        phi_cd,
        povm,
    })
}

#[derive(Debug, Clone)]
pub struct PurificationReport {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub sampler: &'static str,
    /// Number of inputs checked: random states plus the probe basis.
    pub inputs_checked: usize,
    pub max_deviation: f64,
    pub completeness_error: f64,
    pub min_eigenvalue: f64,
    pub marginal_error: f64,
    pub tol: f64,
    pub passed: bool,
}

impl fmt::Display for PurificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "encodings: {}", self.n)?;
        writeln!(f, "random_trials: {}", self.trials)?;
        writeln!(f, "seed: {}", self.seed)?;
        writeln!(f, "sampler: {}", self.sampler)?;
        writeln!(f, "inputs_checked: {}", self.inputs_checked)?;
        writeln!(f, "max_deviation: {:.3e}", self.max_deviation)?;
        writeln!(f, "completeness_error: {:.3e}", self.completeness_error)?;
        writeln!(f, "min_eigenvalue: {:.3e}", self.min_eigenvalue)?;
        writeln!(f, "marginal_error: {:.3e}", self.marginal_error)?;
        writeln!(f, "tolerance: {:.3e}", self.tol)?;
        write!(f, "result: {}", if self.passed { "PASS" } else { "FAIL" })
    }
}

/// Checks a purification against the maps it claims to reproduce: the
/// equivalence on `trials` random inputs and a complete probe basis, POVM
/// completeness and positivity, and the marginal `Tr_C |φ⟩⟨φ| = σ_D`.
pub fn verify_purification(
    p: &EncodingPurification,
    maps: &[QuantumChannel],
    trials: usize,
    tol: f64,
    seed: u64,
) -> Result<PurificationReport> {
    let (dim_a, dim_d) = check_family(maps)?;
    if dim_a != p.dim_a
        || dim_d != p.dim_c()
        || maps.len() != p.povm.len()
        || p.phi_cd.dims() != [dim_d, dim_d]
    {
        return Err(QkdError::DimensionMismatch(
            "purification does not match the encoding family".into(),
        ));
    }
    let n = maps.len();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inputs: Vec<DensityOperator> =
        (0..trials).map(|_| random::density(&[dim_a], &mut rng)).collect();
    inputs.extend(probe_states(dim_a).into_iter().map(|probe| probe.state));

    let mut max_deviation: f64 = 0.0;
    for rho in &inputs {
        for (i, map) in maps.iter().enumerate() {
            let lhs = p.simulate(i, rho.matrix())?;
            let rhs = map.apply_operator(rho.matrix())?;
            max_deviation = max_deviation.max(lhs.max_abs_diff(&rhs));
        }
    }

    let dim_ac = dim_a * dim_d;
    let mut total = ComplexMatrix::zeros(dim_ac, dim_ac);
    for f in &p.povm {
        total = &total + f;
    }
    let completeness_error = total.max_abs_diff(&ComplexMatrix::identity(dim_ac));
    let min_eigenvalue = min_eigenvalue(&p.povm)?;

    let average = crate::channels::average_map(maps)?;
    let expected_marginal = average.apply(&DensityOperator::maximally_mixed(dim_a))?;
    let marginal = p.phi_cd.density().partial_trace(&[1])?;
    let marginal_error = marginal.matrix().max_abs_diff(expected_marginal.matrix());

    let passed = max_deviation <= tol
        && completeness_error <= tol
        && min_eigenvalue >= -tol
        && marginal_error <= tol;

    Ok(PurificationReport {
        n,
        trials,
        seed,
        sampler: random::DENSITY_SAMPLER,
        inputs_checked: inputs.len(),
        max_deviation,
        completeness_error,
        min_eigenvalue,
        marginal_error,
        tol,
        passed,
    })
}

/// Encoding families with input-independent average output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncodingFamily {
    /// `1, σ_X, σ_Y, σ_Z` conjugations.
    Pauli,
    /// Replacement by `|0⟩⟨0|` and by `|1⟩⟨1|`.
    Constant,
    /// Two maps both replacing the input by `|0⟩⟨0|`; `σ_D` is rank deficient.
    RankDeficient,
    /// Pauli conjugations preceded by a fixed random unitary `V` and followed by a second one `W`.
    RotatedPauli { seed: u64 },
}

impl EncodingFamily {
    pub fn maps(self) -> Result<Vec<QuantumChannel>> {
        match self {
            EncodingFamily::Pauli => Ok(crate::channels::pauli_encoding_maps()),
            EncodingFamily::Constant => Ok(vec![
                QuantumChannel::constant(2, &DensityOperator::basis(2, 0))?,
                QuantumChannel::constant(2, &DensityOperator::basis(2, 1))?,
            ]),
            EncodingFamily::RankDeficient => {
                let zero = QuantumChannel::constant(2, &DensityOperator::basis(2, 0))?;
                Ok(vec![zero.clone(), zero])
            }
            EncodingFamily::RotatedPauli { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let v = random::unitary(2, &mut rng);
                let w = random::unitary(2, &mut rng);
                PauliLabel::ALL
                    .iter()
                    .map(|p| QuantumChannel::unitary(&(&w * &p.matrix()) * &v))
                    .collect()
            }
        }
    }
}
