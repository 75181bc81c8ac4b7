//! Measurements: POVMs, projective measurements with post-measurement
//! states, the overlap between two measurements, the CHSH value with its
//! effective-overlap bound, and a numerical check of the entropic
//! uncertainty relation `H(Z|B) + H(X|E) ≥ log₂(1/γ)`.

use num_complex::Complex64;

use crate::entropy::{conditional_vn, cq_embed};
use crate::error::{QkdError, Result};
use crate::linalg::{
    embed, hermitian_eig, operator_norm_psd, psd_power, x_ket, z_ket, ComplexMatrix,
    DensityOperator, PsdExponent,
};

/// Tolerance for POVM positivity, completeness and projector checks.
pub const POVM_TOL: f64 = 1e-10;
/// Born probabilities below this are skipped when sampling an outcome.
pub const NEGLIGIBLE_PROBABILITY: f64 = 1e-15;

#[derive(Debug, Clone)]
pub struct Povm {
    dim: usize,
    elements: Vec<ComplexMatrix>,
    labels: Vec<String>,
}

impl Povm {
    pub fn new(elements: Vec<ComplexMatrix>, labels: Vec<String>) -> Result<Self> {
        let dim = elements
            .first()
            .map(|e| e.rows())
            .ok_or_else(|| QkdError::InvalidPovm("no elements".into()))?;
        if labels.len() != elements.len() {
            return Err(QkdError::InvalidPovm(format!(
                "{} labels for {} elements",
                labels.len(),
                elements.len()
            )));
        }
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for (i, e) in elements.iter().enumerate() {
            if e.rows() != dim || e.cols() != dim {
                return Err(QkdError::InvalidPovm(format!("element {i} has the wrong shape")));
            }
            let min = hermitian_eig(e)
                .map_err(|err| QkdError::InvalidPovm(format!("element {i}: {err}")))?
                .min_eigenvalue();
            if min < -POVM_TOL {
                return Err(QkdError::InvalidPovm(format!(
                    "element {i} has eigenvalue {min:.3e}"
                )));
            }
            sum = &sum + e;
        }
        let completeness = sum.max_abs_diff(&ComplexMatrix::identity(dim));
        if completeness > POVM_TOL {
            return Err(QkdError::InvalidPovm(format!(
                "elements sum to identity only within {completeness:.3e}"
            )));
        }
        Ok(Self {
            dim,
            elements,
            labels,
        })
    }

    /// Rank-one projective measurement onto the given orthonormal kets.
    pub fn from_kets(kets: &[Vec<Complex64>], labels: &[&str]) -> Result<Self> {
        Self::new(
            kets.iter().map(|k| ComplexMatrix::projector(k)).collect(),
            labels.iter().map(|s| s.to_string()).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Born probabilities `Tr(F^i ρ)` in label order.
    pub fn probabilities(&self, rho: &DensityOperator) -> Result<Vec<f64>> {
        self.elements
            .iter()
            .map(|e| rho.expectation(e).map(|p| p.re.max(0.0)))
            .collect()
    }

    /// The same measurement acting on subsystem `index` of a composite system.
    pub fn on_subsystem(&self, dims: &[usize], index: usize) -> Result<Self> {
        let elements = self
            .elements
            .iter()
            .map(|e| embed(dims, index, e))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim: dims.iter().product(),
            elements,
            labels: self.labels.clone(),
        })
    }
}

/// POVM whose elements are mutually orthogonal projectors.
#[derive(Debug, Clone)]
pub struct ProjectiveMeasurement(Povm);

impl ProjectiveMeasurement {
    pub fn new(povm: Povm) -> Result<Self> {
        for (i, p) in povm.elements.iter().enumerate() {
            if (p * p).max_abs_diff(p) > POVM_TOL {
                return Err(QkdError::InvalidPovm(format!("element {i} is not idempotent")));
            }
            for (j, q) in povm.elements.iter().enumerate().skip(i + 1) {
                if (p * q).max_abs() > POVM_TOL {
                    return Err(QkdError::InvalidPovm(format!(
                        "elements {i} and {j} are not orthogonal"
                    )));
                }
            }
        }
        Ok(Self(povm))
    }

    pub fn povm(&self) -> &Povm {
        &self.0
    }

    pub fn labels(&self) -> &[String] {
        &self.0.labels
    }

    pub fn on_subsystem(&self, dims: &[usize], index: usize) -> Result<Self> {
        Ok(Self(self.0.on_subsystem(dims, index)?))
    }

    /// Samples an outcome by cumulative inversion of the Born probabilities
    /// in label order using the caller's uniform variate `u ∈ [0, 1)`, and
    /// returns the normalized post-measurement state `ΠρΠ / Tr(Πρ)`.
    pub fn measure(&self, rho: &DensityOperator, u: f64) -> Result<Measured> {
        if rho.dim() != self.0.dim {
            return Err(QkdError::DimensionMismatch(format!(
                "measurement of dimension {} on a state of dimension {}",
                self.0.dim,
                rho.dim()
            )));
        }
        let probabilities = self.0.probabilities(rho)?;
        let mut cumulative = 0.0;
        let mut chosen = None;
        for (i, &p) in probabilities.iter().enumerate() {
            if p < NEGLIGIBLE_PROBABILITY {
                continue;
            }
            cumulative += p;
            chosen = Some(i);
            if u < cumulative {
                break;
            }
        }
        let outcome = chosen.ok_or_else(|| {
            QkdError::InvalidPovm("every outcome has negligible probability".into())
        })?;
        let projector = &self.0.elements[outcome];
        let post = rho.matrix().conjugate_by(projector)?;
        let probability = probabilities[outcome];
        let state = DensityOperator::from_parts(
            rho.dims().to_vec(),
            post.scale_real(1.0 / probability).hermitian_part(),
        );
        Ok(Measured {
            outcome,
            probability,
            state,
        })
    }
}

/// Result of [`ProjectiveMeasurement::measure`].
#[derive(Debug, Clone)]
pub struct Measured {
    /// Index into the measurement's labels.
    pub outcome: usize,
    pub probability: f64,
    pub state: DensityOperator,
}

fn projective(kets: &[Vec<Complex64>], labels: &[&str]) -> ProjectiveMeasurement {
    ProjectiveMeasurement::new(Povm::from_kets(kets, labels).expect("orthonormal basis"))
        .expect("rank-one projectors")
}

fn ket2(a: [Complex64; 2], b: [Complex64; 2]) -> Vec<Complex64> {
    vec![a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
}

/// Qubit `Z` basis, labels `0`, `1`.
pub fn z_basis() -> Povm {
    z_measurement().0
}

/// Qubit `X` basis, labels `+`, `-`.
pub fn x_basis() -> Povm {
    x_measurement().0
}

pub fn z_measurement() -> ProjectiveMeasurement {
    projective(&[z_ket(0).to_vec(), z_ket(1).to_vec()], &["0", "1"])
}

pub fn x_measurement() -> ProjectiveMeasurement {
    projective(&[x_ket(0).to_vec(), x_ket(1).to_vec()], &["+", "-"])
}

/// Bell measurement with outcome bits `00, 01, 10, 11` for
/// `|ψ⁺⟩ = (|00⟩+|11⟩)/√2`, `|ψ⁻⟩ = (|00⟩−|11⟩)/√2`,
/// `|φ⁺⟩ = (|01⟩+|10⟩)/√2`, `|φ⁻⟩ = (|01⟩−|10⟩)/√2`.
///
/// The ψ/φ names are swapped relative to the most common convention.
pub fn bell_measurement() -> ProjectiveMeasurement {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let k = |v: [f64; 4]| v.iter().map(|&x| Complex64::new(x * h, 0.0)).collect::<Vec<_>>();
    projective(
        &[
            k([1.0, 0.0, 0.0, 1.0]),
            k([1.0, 0.0, 0.0, -1.0]),
            k([0.0, 1.0, 1.0, 0.0]),
            k([0.0, 1.0, -1.0, 0.0]),
        ],
        &["00", "01", "10", "11"],
    )
}

pub fn bell_basis() -> Povm {
    bell_measurement().0
}

/// `Z` on the first qubit and `X` on the second; labels `0+, 0-, 1+, 1-`.
pub fn z_tensor_x_measurement() -> ProjectiveMeasurement {
    projective(
        &[
            ket2(z_ket(0), x_ket(0)),
            ket2(z_ket(0), x_ket(1)),
            ket2(z_ket(1), x_ket(0)),
            ket2(z_ket(1), x_ket(1)),
        ],
        &["0+", "0-", "1+", "1-"],
    )
}

pub fn z_tensor_x() -> Povm {
    z_tensor_x_measurement().0
}

/// Two-qubit `Z⊗Z` measurement coarse-grained to the XOR of its outcomes.
pub fn zz_xor() -> Povm {
    let even = ComplexMatrix::from_diag(&[1.0, 0.0, 0.0, 1.0]);
    let odd = ComplexMatrix::from_diag(&[0.0, 1.0, 1.0, 0.0]);
    Povm::new(vec![even, odd], vec!["0".into(), "1".into()]).expect("valid POVM")
}

/// `X` measurement on qubit `which` (0 or 1) of a two-qubit system, discarding the other.
pub fn x_on_qubit(which: usize) -> Result<Povm> {
    x_basis().on_subsystem(&[2, 2], which)
}

/// `γ = max_{i,j} ‖√F^i √G^j‖²_∞`, evaluated as the largest eigenvalue of `√F G √F`.
pub fn overlap(f: &Povm, g: &Povm) -> Result<f64> {
    if f.dim != g.dim {
        return Err(QkdError::DimensionMismatch(format!(
            "overlap between measurements of dimension {} and {}",
            f.dim, g.dim
        )));
    }
    let roots = f
        .elements
        .iter()
        .map(|e| psd_power(e, PsdExponent::Half))
        .collect::<Result<Vec<_>>>()?;
    let mut best: f64 = 0.0;
    for root in &roots {
        for gj in &g.elements {
            let sandwich = (&(root * gj) * root).hermitian_part();
            best = best.max(operator_norm_psd(&sandwich)?);
        }
    }
    Ok(best)
}

/// Joint outcome tables for the setting pairs `(M,R), (N,R), (M,S), (N,S)`;
/// `tables[k][a][b]` is the probability of outcomes `a` and `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChshStatistics {
    tables: [[[f64; 2]; 2]; 4],
}

impl ChshStatistics {
    pub fn new(tables: [[[f64; 2]; 2]; 4]) -> Result<Self> {
        for (k, t) in tables.iter().enumerate() {
            let flat = t.iter().flatten();
            if flat.clone().any(|&p| !(p >= 0.0)) {
                return Err(QkdError::InvalidDistribution(format!("table {k} has a negative entry")));
            }
            let total: f64 = flat.sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(QkdError::InvalidDistribution(format!("table {k} sums to {total}")));
            }
        }
        Ok(Self { tables })
    }

    /// Born-rule statistics of binary measurements `[M, N]` on subsystem 0
    /// and `[R, S]` on subsystem 1 of a bipartite state.
    pub fn from_state(
        rho: &DensityOperator,
        first: [&Povm; 2],
        second: [&Povm; 2],
    ) -> Result<Self> {
        let dims = rho.dims();
        if dims.len() != 2 {
            return Err(QkdError::DimensionMismatch("CHSH statistics need a bipartite state".into()));
        }
        let pairs = [(0, 0), (1, 0), (0, 1), (1, 1)];
        let mut tables = [[[0.0; 2]; 2]; 4];
        for (k, &(x, y)) in pairs.iter().enumerate() {
            let (m, r) = (first[x], second[y]);
            if m.len() != 2 || r.len() != 2 {
                return Err(QkdError::InvalidPovm("CHSH settings must be binary".into()));
            }
            for a in 0..2 {
                for b in 0..2 {
                    let joint = m.elements[a].kron(&r.elements[b]);
                    tables[k][a][b] = rho.expectation(&joint)?.re;
                }
            }
        }
        Self::new(tables)
    }

    pub fn tables(&self) -> &[[[f64; 2]; 2]; 4] {
        &self.tables
    }

    fn p_equal(&self, k: usize) -> f64 {
        self.tables[k][0][0] + self.tables[k][1][1]
    }
}

/// `β = 2(Pr(M=R) + Pr(N=R) + Pr(M=S) + Pr(N≠S)) − 4`.
pub fn chsh_value(s: &ChshStatistics) -> f64 {
    2.0 * (s.p_equal(0) + s.p_equal(1) + s.p_equal(2) + (1.0 - s.p_equal(3))) - 4.0
}

/// Upper bound on the effective overlap from a CHSH value:
/// `γ* ≤ 1/2 + (β/8)√(8 − β²)`.
pub fn effective_overlap_bound(beta: f64) -> Result<f64> {
    let limit = 8f64.sqrt();
    if !(beta.abs() <= limit + 1e-12) {
        return Err(QkdError::OutOfRange {
            name: "beta",
            value: beta,
            range: "[-2√2, 2√2]",
        });
    }
    let radicand = (8.0 - beta * beta).max(0.0);
    Ok(0.5 + beta / 8.0 * radicand.sqrt())
}

/// Three-party state `ρ_ABE` with subsystems ordered `A, B, E`.
#[derive(Debug, Clone)]
pub struct TripartiteState(DensityOperator);

impl TripartiteState {
    pub fn new(rho: DensityOperator) -> Result<Self> {
        if rho.dims().len() != 3 {
            return Err(QkdError::DimensionMismatch(format!(
                "tripartite state needs three subsystems, got {:?}",
                rho.dims()
            )));
        }
        Ok(Self(rho))
    }

    pub fn state(&self) -> &DensityOperator {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyReport {
    /// `H(Z|B)` after measuring `A` with the `Z` measurement.
    pub hzb: f64,
    /// `H(X|E)` after measuring `A` with the `X` measurement.
    pub hxe: f64,
    /// `log₂(1/γ)`
    pub bound: f64,
    /// `hzb + hxe − bound`; nonnegative up to numerical error.
    pub slack: f64,
}

pub fn uncertainty_check(rho: &TripartiteState, fx: &Povm, fz: &Povm) -> Result<UncertaintyReport> {
    let state = &rho.0;
    let after_z = cq_embed(state, fz, 0)?.partial_trace(&[0, 1])?;
    let hzb = conditional_vn(&after_z, &[1])?;
    let after_x = cq_embed(state, fx, 0)?.partial_trace(&[0, 2])?;
    let hxe = conditional_vn(&after_x, &[1])?;
    let bound = (1.0 / overlap(fx, fz)?).log2();
    Ok(UncertaintyReport {
        hzb,
        hxe,
        bound,
        slack: hzb + hxe - bound,
    })
}

/// Summary of an uncertainty-relation sweep over random states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintySweep {
    pub trials: usize,
    pub min_slack: f64,
    pub mean_slack: f64,
}

/// Evaluates [`uncertainty_check`] with qubit `X`/`Z` measurements on `A`
/// for `trials` random states of dimensions `(2, d_B, d_E)`.
pub fn uncertainty_sweep(dims: [usize; 3], trials: usize, seed: u64) -> Result<UncertaintySweep> {
    use rand::SeedableRng;
    if dims[0] != 2 {
        return Err(QkdError::DimensionMismatch("subsystem A must be a qubit".into()));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (fx, fz) = (x_basis(), z_basis());
    let mut min_slack = f64::INFINITY;
    let mut total = 0.0;
    for _ in 0..trials {
        let rho = TripartiteState::new(crate::linalg::random::density(&dims, &mut rng))?;
        let slack = uncertainty_check(&rho, &fx, &fz)?.slack;
        min_slack = min_slack.min(slack);
        total += slack;
    }
    Ok(UncertaintySweep {
        trials,
        min_slack,
        mean_slack: if trials == 0 { 0.0 } else { total / trials as f64 },
    })
}

/// Smallest eigenvalue over a set of operators (positivity diagnostics).
pub(crate) fn min_eigenvalue(ops: &[ComplexMatrix]) -> Result<f64> {
    let mut min = f64::INFINITY;
    for op in ops {
        min = min.min(hermitian_eig(&op.hermitian_part())?.min_eigenvalue());
    }
    Ok(min)
}
