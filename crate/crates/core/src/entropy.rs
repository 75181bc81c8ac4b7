//! Shannon and von Neumann entropies, in bits.

use crate::error::{QkdError, Result};
use crate::linalg::{embed, hermitian_eig, partial_trace, ComplexMatrix, DensityOperator, PSD_TOL};
use crate::measurement::Povm;

const DISTRIBUTION_TOL: f64 = 1e-12;

/// Probability vector summing to one within `1e-12`.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(QkdError::InvalidDistribution("no outcomes".into()));
        }
        if let Some(p) = probabilities.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
            return Err(QkdError::InvalidDistribution(format!("entry {p} is not a probability")));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > DISTRIBUTION_TOL {
            return Err(QkdError::InvalidDistribution(format!("entries sum to {total}")));
        }
        Ok(Self(probabilities))
    }

    /// Normalizes outcome counts; fails when every count is zero.
    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(QkdError::InvalidDistribution("no samples".into()));
        }
        Self::new(counts.iter().map(|&c| c as f64 / total as f64).collect())
    }

    /// `[q, 1 − q]`
    pub fn binary(q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(QkdError::OutOfRange {
                name: "q",
                value: q,
                range: "[0, 1]",
            });
        }
        Self::new(vec![q, 1.0 - q])
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn plogp(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        -p * p.log2()
    }
}

/// `−Σ p log₂ p` with `0 log 0 = 0`.
pub fn shannon(d: &Distribution) -> f64 {
    d.0.iter().map(|&p| plogp(p)).sum()
}

/// `h(q) = −q log₂ q − (1−q) log₂(1−q)`.
pub fn binary_entropy(q: f64) -> Result<f64> {
    Ok(shannon(&Distribution::binary(q)?))
}

/// Entropy of a raw Hermitian matrix's spectrum, clamping `[−1e-10, 0]` to zero.
fn spectral_entropy(m: &ComplexMatrix) -> Result<f64> {
    let eig = hermitian_eig(m)?;
    let min_eigenvalue = eig.min_eigenvalue();
    if min_eigenvalue < -PSD_TOL {
        return Err(QkdError::NotPositive { min_eigenvalue });
    }
    Ok(eig.eigenvalues.iter().map(|&l| plogp(l)).sum())
}

pub fn von_neumann(rho: &DensityOperator) -> Result<f64> {
    spectral_entropy(rho.matrix())
}

/// `H(rest | condition_on) = H(ρ) − H(Tr_rest ρ)`.
pub fn conditional_vn(rho: &DensityOperator, condition_on: &[usize]) -> Result<f64> {
    let marginal = rho.partial_trace(condition_on)?;
    Ok(von_neumann(rho)? - von_neumann(&marginal)?)
}

/// Replaces subsystem `subsystem` with a classical register holding the
/// outcome of `povm`: `Σ_i |i><i| ⊗ Tr_s((F^i ⊗ I) ρ)`, the register sitting
/// at the measured subsystem's position.
pub fn cq_embed(rho: &DensityOperator, povm: &Povm, subsystem: usize) -> Result<DensityOperator> {
    let dims = rho.dims();
    if subsystem >= dims.len() {
        return Err(QkdError::SubsystemOutOfRange {
            index: subsystem,
            count: dims.len(),
        });
    }
    if povm.dim() != dims[subsystem] {
        return Err(QkdError::DimensionMismatch(format!(
            "POVM of dimension {} on subsystem of dimension {}",
            povm.dim(),
            dims[subsystem]
        )));
    }
    let rest: Vec<usize> = (0..dims.len()).filter(|&i| i != subsystem).collect();
    let outcomes = povm.elements().len();

    // register first, then the untouched subsystems in order
    let rest_dim: usize = rest.iter().map(|&i| dims[i]).product();
    let mut block = ComplexMatrix::zeros(outcomes * rest_dim, outcomes * rest_dim);
    for (i, f) in povm.elements().iter().enumerate() {
        let lifted = embed(dims, subsystem, f)?;
        let conditional = partial_trace(&(&lifted * rho.matrix()), dims, &rest)?;
        for r in 0..rest_dim {
            for c in 0..rest_dim {
                block[(i * rest_dim + r, i * rest_dim + c)] = conditional[(r, c)];
            }
        }
    }
    let mut register_first = vec![outcomes];
    register_first.extend(rest.iter().map(|&i| dims[i]));
    let state = DensityOperator::from_parts(register_first, block.hermitian_part());

    // move the register back to the measured position
    let mut order: Vec<usize> = (1..dims.len()).collect();
    order.insert(subsystem, 0);
    state.permute(&order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random, PureState};
    use crate::measurement::{x_basis, z_basis};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shannon_values() {
        let d = |v: Vec<f64>| Distribution::new(v).unwrap();
        assert_eq!(shannon(&d(vec![1.0, 0.0])), 0.0);
        assert!((shannon(&d(vec![0.5, 0.5])) - 1.0).abs() < 1e-15);
        assert!((shannon(&d(vec![0.25; 4])) - 2.0).abs() < 1e-15);
        assert!(Distribution::new(vec![0.5, 0.6]).is_err());
        assert!(Distribution::new(vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn binary_entropy_is_concave() {
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        for &p in &grid {
            for &q in &grid {
                let mid = binary_entropy((p + q) / 2.0).unwrap();
                let avg = (binary_entropy(p).unwrap() + binary_entropy(q).unwrap()) / 2.0;
                assert!(mid >= avg - 1e-15);
            }
        }
    }

    #[test]
    fn von_neumann_values() {
        assert!(von_neumann(&PureState::psi_plus().density()).unwrap().abs() < 1e-12);
        assert!((von_neumann(&DensityOperator::maximally_mixed(2)).unwrap() - 1.0).abs() < 1e-15);
        let marginal = PureState::psi_plus().density().partial_trace(&[0]).unwrap();
        assert!((von_neumann(&marginal).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conditional_entropies() {
        let bell = PureState::psi_plus().density();
        assert!((conditional_vn(&bell, &[1]).unwrap() + 1.0).abs() < 1e-12);

        let mixed = DensityOperator::maximally_mixed(2).tensor(&DensityOperator::maximally_mixed(2));
        assert!((conditional_vn(&mixed, &[1]).unwrap() - 1.0).abs() < 1e-12);

        let cq = cq_embed(&bell, &z_basis(), 0).unwrap();
        assert!(conditional_vn(&cq, &[1]).unwrap().abs() < 1e-12);

        let cq = cq_embed(&bell, &x_basis(), 0).unwrap();
        assert!(conditional_vn(&cq, &[1]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn cq_embedding_shapes() {
        let bell = PureState::psi_plus().density();
        let cq = cq_embed(&bell, &z_basis(), 1).unwrap();
        let expected = ComplexMatrix::from_diag(&[0.5, 0.0, 0.0, 0.5]);
        assert!(cq.matrix().max_abs_diff(&expected) < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let sigma = random::density(&[3], &mut rng);
        let product = DensityOperator::maximally_mixed(2).tensor(&sigma);
        let cq = cq_embed(&product, &x_basis(), 0).unwrap();
        let expected = DensityOperator::maximally_mixed(2).tensor(&sigma);
        assert!(cq.matrix().max_abs_diff(expected.matrix()) < 1e-14);
        assert_eq!(cq.dims(), &[2, 3]);
    }

    #[test]
    fn cq_states_have_nonnegative_classical_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for trial in 0..100 {
            let rho = random::density(&[2, 2, 2], &mut rng);
            let m = if trial % 2 == 0 { z_basis() } else { x_basis() };
            let s = trial % 3;
            let cq = cq_embed(&rho, &m, s).unwrap();
            assert!((cq.matrix().trace().re - 1.0).abs() < 1e-12);
            let rest: Vec<usize> = (0..3).filter(|&i| i != s).collect();
            assert!(conditional_vn(&cq, &rest).unwrap() >= -1e-9);
            // the total entropy never drops below the untouched marginal's
            let untouched = rho.partial_trace(&rest).unwrap();
            assert!(von_neumann(&cq).unwrap() >= von_neumann(&untouched).unwrap() - 1e-9);
        }
    }

    #[test]
    fn invalid_spectrum_rejected() {
        let bad = DensityOperator::from_parts(vec![2], ComplexMatrix::from_diag(&[1.1, -0.1]));
        assert!(matches!(von_neumann(&bad), Err(QkdError::NotPositive { .. })));
    }
}
