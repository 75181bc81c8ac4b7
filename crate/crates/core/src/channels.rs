//! Quantum channels in Kraus and Choi form, the Pauli encodings and the
//! depolarizing channel.

use std::fmt;

use num_complex::Complex64;

use crate::error::{QkdError, Result};
use crate::linalg::{embed, hermitian_eig, paulis, ComplexMatrix, DensityOperator, PSD_TOL};

/// Trace-preservation tolerance for Kraus sets.
pub const TP_TOL: f64 = 1e-10;
/// Choi eigenvalues below this are dropped when extracting Kraus operators.
pub const KRAUS_CUTOFF: f64 = 1e-12;
const CHOI_CHECK_TOL: f64 = 1e-8;

/// Completely positive trace-preserving map given by Kraus operators
/// of shape `dim_out x dim_in`.
#[derive(Debug, Clone)]
pub struct QuantumChannel {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<ComplexMatrix>,
}

impl QuantumChannel {
    pub fn new(dim_in: usize, dim_out: usize, kraus: Vec<ComplexMatrix>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(QkdError::DimensionMismatch("empty Kraus set".into()));
        }
        if let Some(k) = kraus.iter().find(|k| k.rows() != dim_out || k.cols() != dim_in) {
            return Err(QkdError::DimensionMismatch(format!(
                "Kraus operator of size {}x{} for a channel {dim_in} -> {dim_out}",
                k.rows(),
                k.cols()
            )));
        }
        let ch = Self {
            dim_in,
            dim_out,
            kraus,
        };
        let deviation = ch.trace_preservation_error();
        if deviation > TP_TOL {
            return Err(QkdError::NotTracePreserving { deviation });
        }
        Ok(ch)
    }

    pub fn identity(d: usize) -> Self {
        Self {
            dim_in: d,
            dim_out: d,
            kraus: vec![ComplexMatrix::identity(d)],
        }
    }

    /// `ρ ↦ U ρ U†`
    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        let d = u.rows();
        Self::new(d, d, vec![u])
    }

    /// Replacement channel `ρ ↦ Tr(ρ) σ` from `dim_in` into the space of `output`.
    pub fn constant(dim_in: usize, output: &DensityOperator) -> Result<Self> {
        let eig = hermitian_eig(output.matrix())?;
        let dim_out = output.dim();
        let mut kraus = Vec::new();
        for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda <= KRAUS_CUTOFF {
                continue;
            }
            let v = eig.eigenvector(k);
            for j in 0..dim_in {
                let mut op = ComplexMatrix::zeros(dim_out, dim_in);
                for (r, &vr) in v.iter().enumerate() {
                    op[(r, j)] = vr * lambda.sqrt();
                }
                kraus.push(op);
            }
        }
        // renormalize against dropped numerical noise
        let total: f64 = eig.eigenvalues.iter().filter(|&&l| l > KRAUS_CUTOFF).sum();
        let kraus = kraus.into_iter().map(|k| k.scale_real(1.0 / total.sqrt())).collect();
        Self::new(dim_in, dim_out, kraus)
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// Largest entry of `Σ K† K − I`.
    pub fn trace_preservation_error(&self) -> f64 {
        let mut sum = ComplexMatrix::zeros(self.dim_in, self.dim_in);
        for k in &self.kraus {
            sum = &sum + &(&k.adjoint() * k);
        }
        sum.max_abs_diff(&ComplexMatrix::identity(self.dim_in))
    }

    /// Channel action on an arbitrary operator (not necessarily a state).
    pub fn apply_operator(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.rows() != self.dim_in || x.cols() != self.dim_in {
            return Err(QkdError::DimensionMismatch(format!(
                "channel input dimension {} but operator is {}x{}",
                self.dim_in,
                x.rows(),
                x.cols()
            )));
        }
        let mut out = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            out = &out + &x.conjugate_by(k)?;
        }
        Ok(out)
    }

    /// `Σ_k K ρ K†`. The subsystem structure is kept when the channel maps a
    /// space to itself.
    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        let out = self.apply_operator(rho.matrix())?;
        let dims = if self.dim_in == self.dim_out {
            rho.dims().to_vec()
        } else {
            vec![self.dim_out]
        };
        Ok(DensityOperator::from_parts(dims, out.hermitian_part()))
    }

    /// Applies a `d -> d` channel to one subsystem of a multipartite state.
    pub fn apply_on(&self, rho: &DensityOperator, subsystem: usize) -> Result<DensityOperator> {
        if self.dim_in != self.dim_out {
            return Err(QkdError::DimensionMismatch(
                "only dimension-preserving channels act on subsystems".into(),
            ));
        }
        let mut out = ComplexMatrix::zeros(rho.dim(), rho.dim());
        for k in &self.kraus {
            let lifted = embed(rho.dims(), subsystem, k)?;
            out = &out + &rho.matrix().conjugate_by(&lifted)?;
        }
        Ok(DensityOperator::from_parts(rho.dims().to_vec(), out.hermitian_part()))
    }

    /// Largest entrywise difference between the actions of two channels over
    /// all matrix units `|j><k|`.
    pub fn action_distance(&self, other: &Self) -> Result<f64> {
        if self.dim_in != other.dim_in || self.dim_out != other.dim_out {
            return Err(QkdError::DimensionMismatch("channels of different shapes".into()));
        }
        let mut worst: f64 = 0.0;
        for j in 0..self.dim_in {
            for k in 0..self.dim_in {
                let e = ComplexMatrix::unit(self.dim_in, j, k);
                let diff = self.apply_operator(&e)?.max_abs_diff(&other.apply_operator(&e)?);
                worst = worst.max(diff);
            }
        }
        Ok(worst)
    }
}

/// Generalized Pauli (Weyl) operators `X^a Z^b` in dimension `d`.
fn weyl_operators(d: usize) -> Vec<ComplexMatrix> {
    let omega = |k: usize| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / d as f64);
    let mut ops = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            let mut m = ComplexMatrix::zeros(d, d);
            for j in 0..d {
                // X^a Z^b |j> = ω^{bj} |j + a>
                m[((j + a) % d, j)] = omega((b * j) % d);
            }
            ops.push(m);
        }
    }
    ops
}

/// `ρ ↦ q·I/d + (1−q)ρ` as a Weyl twirl: weight `1 − q + q/d²` on the identity
/// and `q/d²` on each of the other `d² − 1` Weyl operators.
pub fn depolarizing(q: f64, d: usize) -> Result<QuantumChannel> {
    if !(0.0..=1.0).contains(&q) {
        return Err(QkdError::OutOfRange {
            name: "q",
            value: q,
            range: "[0, 1]",
        });
    }
    if d == 0 {
        return Err(QkdError::DimensionMismatch("dimension must be positive".into()));
    }
    let d2 = (d * d) as f64;
    let kraus = weyl_operators(d)
        .into_iter()
        .enumerate()
        .filter_map(|(i, w)| {
            let weight = if i == 0 { 1.0 - q + q / d2 } else { q / d2 };
            (weight > 0.0).then(|| w.scale_real(weight.sqrt()))
        })
        .collect();
    QuantumChannel::new(d, d, kraus)
}

/// `second ∘ first`: all products `K₂ K₁` (zero products dropped).
pub fn compose(first: &QuantumChannel, second: &QuantumChannel) -> Result<QuantumChannel> {
    if first.dim_out != second.dim_in {
        return Err(QkdError::DimensionMismatch(format!(
            "cannot feed a {}-dimensional output into a {}-dimensional input",
            first.dim_out, second.dim_in
        )));
    }
    let mut kraus = Vec::with_capacity(first.kraus.len() * second.kraus.len());
    for k2 in &second.kraus {
        for k1 in &first.kraus {
            let k = k2 * k1;
            if k.max_abs() > 0.0 {
                kraus.push(k);
            }
        }
    }
    QuantumChannel::new(first.dim_in, second.dim_out, kraus)
}

/// Unnormalized Choi matrix `J = Σ_{jk} |j><k| ⊗ E(|j><k|)` on input ⊗ output,
/// so that `E(ρ) = Tr_in(J (ρ^T ⊗ I))`.
#[derive(Debug, Clone)]
pub struct ChoiMatrix {
    dim_in: usize,
    dim_out: usize,
    matrix: ComplexMatrix,
}

impl ChoiMatrix {
    /// Validates positivity within `1e-10` and `Tr J = dim_in`.
    pub fn new(dim_in: usize, dim_out: usize, matrix: ComplexMatrix) -> Result<Self> {
        let n = dim_in * dim_out;
        if matrix.rows() != n || matrix.cols() != n {
            return Err(QkdError::DimensionMismatch(format!(
                "Choi matrix for {dim_in} -> {dim_out} must be {n}x{n}"
            )));
        }
        let trace = matrix.trace().re;
        if (trace - dim_in as f64).abs() > 1e-10 {
            return Err(QkdError::BadTrace {
                trace,
                expected: dim_in as f64,
            });
        }
        let min_eigenvalue = hermitian_eig(&matrix)?.min_eigenvalue();
        if min_eigenvalue < -PSD_TOL {
            return Err(QkdError::NotPositive { min_eigenvalue });
        }
        Ok(Self {
            dim_in,
            dim_out,
            matrix,
        })
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// `Tr_in(J (ρ^T ⊗ I))` on an arbitrary input operator.
    pub fn apply_operator(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        let lifted = x.transpose().kron(&ComplexMatrix::identity(self.dim_out));
        crate::linalg::partial_trace(&(&self.matrix * &lifted), &[self.dim_in, self.dim_out], &[1])
    }
}

pub fn kraus_to_choi(ch: &QuantumChannel) -> ChoiMatrix {
    let (din, dout) = (ch.dim_in, ch.dim_out);
    let mut j = ComplexMatrix::zeros(din * dout, din * dout);
    for a in 0..din {
        for b in 0..din {
            let block = ch
                .apply_operator(&ComplexMatrix::unit(din, a, b))
                .expect("matrix unit has the input dimension");
            for r in 0..dout {
                for c in 0..dout {
                    j[(a * dout + r, b * dout + c)] = block[(r, c)];
                }
            }
        }
    }
    ChoiMatrix {
        dim_in: din,
        dim_out: dout,
        matrix: j,
    }
}

/// Kraus operators `K_a = √μ_a · unvec(v_a)` from the spectrum of `J`,
/// dropping eigenvalues below [`KRAUS_CUTOFF`].
pub fn choi_to_kraus(choi: &ChoiMatrix) -> Result<QuantumChannel> {
    let (din, dout) = (choi.dim_in, choi.dim_out);
    let eig = hermitian_eig(&choi.matrix)?;
    let min_eigenvalue = eig.min_eigenvalue();
    if min_eigenvalue < -CHOI_CHECK_TOL {
        return Err(QkdError::NotPositive { min_eigenvalue });
    }
    let marginal = crate::linalg::partial_trace(&choi.matrix, &[din, dout], &[0])?;
    let deviation = marginal.max_abs_diff(&ComplexMatrix::identity(din));
    if deviation > CHOI_CHECK_TOL {
        return Err(QkdError::NotTracePreserving { deviation });
    }
    let mut kraus = Vec::new();
    for (a, &mu) in eig.eigenvalues.iter().enumerate() {
        if mu < KRAUS_CUTOFF {
            continue;
        }
        let v = eig.eigenvector(a);
        let mut k = ComplexMatrix::zeros(dout, din);
        for j in 0..din {
            for m in 0..dout {
                k[(m, j)] = v[j * dout + m] * mu.sqrt();
            }
        }
        kraus.push(k);
    }
    QuantumChannel::new(din, dout, kraus)
}

/// Alice's Pauli encodings with their two-bit records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PauliLabel {
    I,
    X,
    Y,
    Z,
}

impl PauliLabel {
    /// Encoding order used throughout: `1, σ_X, σ_Y, σ_Z` ↔ `00, 10, 11, 01`.
    pub const ALL: [PauliLabel; 4] = [PauliLabel::I, PauliLabel::X, PauliLabel::Y, PauliLabel::Z];

    pub fn bits(self) -> (u8, u8) {
        match self {
            PauliLabel::I => (0, 0),
            PauliLabel::X => (1, 0),
            PauliLabel::Y => (1, 1),
            PauliLabel::Z => (0, 1),
        }
    }

    pub fn from_bits(bits: (u8, u8)) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.bits() == bits)
    }

    pub fn index(self) -> usize {
        match self {
            PauliLabel::I => 0,
            PauliLabel::X => 1,
            PauliLabel::Y => 2,
            PauliLabel::Z => 3,
        }
    }

    pub fn matrix(self) -> ComplexMatrix {
        let [i, x, y, z] = paulis();
        match self {
            PauliLabel::I => i,
            PauliLabel::X => x,
            PauliLabel::Y => y,
            PauliLabel::Z => z,
        }
    }
}

impl fmt::Display for PauliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PauliLabel::I => "1",
            PauliLabel::X => "X",
            PauliLabel::Y => "Y",
            PauliLabel::Z => "Z",
        };
        f.write_str(s)
    }
}

/// Conjugation channels for `1, σ_X, σ_Y, σ_Z`, in bit order `00, 10, 11, 01`.
pub fn pauli_encoding_maps() -> Vec<QuantumChannel> {
    PauliLabel::ALL
        .iter()
        .map(|p| QuantumChannel::identity(2).with_kraus(vec![p.matrix()]))
        .collect()
}

impl QuantumChannel {
    fn with_kraus(mut self, kraus: Vec<ComplexMatrix>) -> Self {
        self.kraus = kraus;
        self
    }
}

/// Uniform mixture `(1/n) Σ E_i`.
pub fn average_map(maps: &[QuantumChannel]) -> Result<QuantumChannel> {
    let first = maps
        .first()
        .ok_or_else(|| QkdError::DimensionMismatch("empty channel family".into()))?;
    if maps
        .iter()
        .any(|m| m.dim_in != first.dim_in || m.dim_out != first.dim_out)
    {
        return Err(QkdError::DimensionMismatch(
            "channels in the family have different dimensions".into(),
        ));
    }
    let w = (1.0 / maps.len() as f64).sqrt();
    let kraus = maps
        .iter()
        .flat_map(|m| m.kraus.iter().map(|k| k.scale_real(w)))
        .collect();
    QuantumChannel::new(first.dim_in, first.dim_out, kraus)
}

/// One element of the informationally complete probe set.
#[derive(Debug, Clone)]
pub struct ProbeState {
    pub label: String,
    pub state: DensityOperator,
}

/// `d²` pure states spanning the operator space: `|j>`, `(|j>+|k>)/√2` and
/// `(|j>+i|k>)/√2` for `j < k`.
pub fn probe_states(d: usize) -> Vec<ProbeState> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let ket = |entries: &[(usize, Complex64)]| {
        let mut v = vec![Complex64::new(0.0, 0.0); d];
        for &(i, a) in entries {
            v[i] = a;
        }
        DensityOperator::from_parts(vec![d], ComplexMatrix::projector(&v))
    };
    let mut probes = Vec::with_capacity(d * d);
    for j in 0..d {
        probes.push(ProbeState {
            label: format!("|{j}>"),
            state: ket(&[(j, Complex64::new(1.0, 0.0))]),
        });
    }
    for j in 0..d {
        for k in j + 1..d {
            probes.push(ProbeState {
                label: format!("(|{j}>+|{k}>)/sqrt2"),
                state: ket(&[(j, Complex64::new(h, 0.0)), (k, Complex64::new(h, 0.0))]),
            });
            probes.push(ProbeState {
                label: format!("(|{j}>+i|{k}>)/sqrt2"),
                state: ket(&[(j, Complex64::new(h, 0.0)), (k, Complex64::new(0.0, h))]),
            });
        }
    }
    probes
}

/// The pair of probe inputs whose averaged outputs differ the most.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedOutputViolation {
    pub first: String,
    pub second: String,
    pub deviation: f64,
}

impl fmt::Display for FixedOutputViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "inputs {} and {} give outputs differing by {:.3e}",
            self.first, self.second, self.deviation
        )
    }
}

/// Checks that the average of `maps` sends every input state to the same
/// output, returning that output `σ_D`.
pub fn check_fixed_output(
    maps: &[QuantumChannel],
    tol: f64,
) -> Result<DensityOperator> {
    let avg = average_map(maps)?;
    let probes = probe_states(avg.dim_in);
    let outputs = probes
        .iter()
        .map(|p| avg.apply(&p.state))
        .collect::<Result<Vec<_>>>()?;

    let mut worst = FixedOutputViolation {
        first: probes[0].label.clone(),
        second: probes[0].label.clone(),
        deviation: 0.0,
    };
    for a in 0..outputs.len() {
        for b in a + 1..outputs.len() {
            let deviation = outputs[a].matrix().max_abs_diff(outputs[b].matrix());
            if deviation > worst.deviation {
                worst = FixedOutputViolation {
                    first: probes[a].label.clone(),
                    second: probes[b].label.clone(),
                    deviation,
                };
            }
        }
    }
    if worst.deviation > tol {
        return Err(QkdError::InputDependentOutput(worst));
    }
    let sigma = outputs.into_iter().next().expect("at least one probe");
    let dims = vec![avg.dim_out];
    Ok(DensityOperator::from_parts(dims, sigma.into_matrix()))
}
