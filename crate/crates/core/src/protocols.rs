//! Qubit-level Monte Carlo of the SDC and LM05 two-way protocols.
//!
//! Every signal draws from its own ChaCha8 stream (`seed`, stream = signal
//! index), so signals are simulated in parallel and transcripts are
//! reproducible bit for bit.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channels::{depolarizing, PauliLabel, QuantumChannel};
use crate::entropy::Distribution;
use crate::error::{QkdError, Result};
use crate::linalg::{x_ket, z_ket, ComplexMatrix, DensityOperator, PureState};
use crate::measurement::{
    bell_measurement, x_measurement, z_measurement, z_tensor_x_measurement, ProjectiveMeasurement,
};

pub const DEFAULT_ENCODE_PROB: f64 = 0.9;
pub const DEFAULT_EST_FRACTION: f64 = 0.1;
/// Bob's `Z` preparation probability for version 1.
pub const DEFAULT_V1_Z_PROB: f64 = 0.9;

/// Stream reserved for choosing the sampled key positions.
const SAMPLING_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    Z,
    X,
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::Z => "Z",
            Basis::X => "X",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelModel {
    Noiseless,
    /// Fresh depolarization `q` on each pass.
    Independent(f64),
    /// Round-trip depolarization `q`: identity then `q` when Alice encodes,
    /// two independent `q` passes when she measures.
    Correlated(f64),
}

impl ChannelModel {
    fn validate(self) -> Result<()> {
        match self {
            ChannelModel::Noiseless => Ok(()),
            ChannelModel::Independent(q) | ChannelModel::Correlated(q) => {
                if (0.0..=1.0).contains(&q) {
                    Ok(())
                } else {
                    Err(QkdError::OutOfRange {
                        name: "q",
                        value: q,
                        range: "[0, 1]",
                    })
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Passes {
    First,
    Second,
    Both,
}

impl Passes {
    fn covers(self, pass: Pass) -> bool {
        matches!(
            (self, pass),
            (Passes::Both, _) | (Passes::First, Pass::First) | (Passes::Second, Pass::Second)
        )
    }
}

impl FromStr for Passes {
    type Err = QkdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" | "q1" => Ok(Passes::First),
            "second" | "q2" => Ok(Passes::Second),
            "both" => Ok(Passes::Both),
            other => Err(QkdError::InvalidConfig(format!("unknown pass selection {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EveStrategy {
    #[default]
    None,
    /// Measures the flying qubit in `basis` on the selected passes and forwards
    /// the post-measurement state.
    InterceptResend { basis: Basis, passes: Passes },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pass {
    First,
    Second,
}

#[derive(Debug, Clone)]
pub struct SdcConfig {
    pub n_signals: usize,
    pub encode_prob: f64,
    pub channel_model: ChannelModel,
    pub eve: EveStrategy,
    pub seed: u64,
}

impl SdcConfig {
    pub fn new(n_signals: usize, channel_model: ChannelModel, seed: u64) -> Self {
        Self {
            n_signals,
            encode_prob: DEFAULT_ENCODE_PROB,
            channel_model,
            eve: EveStrategy::None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_common(self.n_signals, self.encode_prob, self.channel_model)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lm05Version {
    /// Alice checks in `X` only.
    V1,
    /// Alice checks in `Z` or `X` uniformly; Bob prepares with `p = 1/2`.
    V2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reconciliation {
    Direct,
    Reverse,
}

impl FromStr for Reconciliation {
    type Err = QkdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Reconciliation::Direct),
            "reverse" => Ok(Reconciliation::Reverse),
            other => Err(QkdError::InvalidConfig(format!("unknown reconciliation {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Lm05Config {
    pub n_signals: usize,
    pub encode_prob: f64,
    /// Probability `p` that Bob prepares in the `Z` basis.
    pub z_basis_prob: f64,
    pub version: Lm05Version,
    pub reconciliation: Reconciliation,
    pub channel_model: ChannelModel,
    pub eve: EveStrategy,
    pub seed: u64,
}

impl Lm05Config {
    pub fn new(
        n_signals: usize,
        version: Lm05Version,
        reconciliation: Reconciliation,
        channel_model: ChannelModel,
        seed: u64,
    ) -> Self {
        Self {
            n_signals,
            encode_prob: DEFAULT_ENCODE_PROB,
            z_basis_prob: match version {
                Lm05Version::V1 => DEFAULT_V1_Z_PROB,
                Lm05Version::V2 => 0.5,
            },
            version,
            reconciliation,
            channel_model,
            eve: EveStrategy::None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_common(self.n_signals, self.encode_prob, self.channel_model)?;
        let p = self.z_basis_prob;
        if !(p > 0.0 && p < 1.0) {
            return Err(QkdError::OutOfRange {
                name: "p",
                value: p,
                range: "(0, 1)",
            });
        }
        if self.version == Lm05Version::V2 && p != 0.5 {
            return Err(QkdError::InvalidConfig(format!(
                "version 2 uses p = 0.5, got {p}"
            )));
        }
        Ok(())
    }
}

fn validate_common(n_signals: usize, c: f64, model: ChannelModel) -> Result<()> {
    if n_signals == 0 {
        return Err(QkdError::InvalidConfig("at least one signal is required".into()));
    }
    if !(c > 0.0 && c <= 1.0) {
        return Err(QkdError::OutOfRange {
            name: "c",
            value: c,
            range: "(0, 1]",
        });
    }
    model.validate()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignalKind {
    Key,
    Estimation,
    /// SDC: exactly one party took the check branch.
    Mismatched,
    /// LM05: Alice checked in the basis Bob did not prepare in.
    Discarded,
}

impl SignalKind {
    pub fn label(self) -> &'static str {
        match self {
            SignalKind::Key => "key",
            SignalKind::Estimation => "estimation",
            SignalKind::Mismatched => "mismatched",
            SignalKind::Discarded => "discarded",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AliceAction {
    Encode(PauliLabel),
    /// `outcome` is her measurement result; `resend` the bit of the state
    /// she sent on (`|±⟩` in SDC, the post-measurement state in LM05).
    Measure { basis: Basis, outcome: u8, resend: u8 },
}

impl AliceAction {
    pub fn bits(self) -> [u8; 2] {
        match self {
            AliceAction::Encode(p) => {
                let (a, b) = p.bits();
                [a, b]
            }
            AliceAction::Measure { outcome, resend, .. } => [outcome, resend],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BobOutcome {
    /// Bell measurement bits.
    Bell([u8; 2]),
    /// `Z` on the stored qubit, `X` on the returned one (`+` is 0).
    ZX([u8; 2]),
    /// LM05 measurement in the preparation basis; `key_bit` includes the
    /// preparation XOR and, under direct reconciliation, the announced flip.
    Single { raw: u8, key_bit: u8 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignalRecord {
    pub index: usize,
    pub kind: SignalKind,
    /// LM05 preparation basis `Θ`.
    pub theta: Option<Basis>,
    pub prep_bit: Option<u8>,
    pub alice: AliceAction,
    pub bob: BobOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolKind {
    Sdc,
    Lm05 {
        version: Lm05Version,
        reconciliation: Reconciliation,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolTranscript {
    pub protocol: ProtocolKind,
    pub seed: u64,
    pub records: Vec<SignalRecord>,
}

/// Error tallies `[same, first differs, second differs, both differ]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SdcCounts {
    pub f: [usize; 4],
    pub g: [usize; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BitTally {
    pub errors: usize,
    pub total: usize,
}

impl BitTally {
    fn record(&mut self, a: u8, b: u8) {
        self.total += 1;
        self.errors += usize::from(a != b);
    }

    pub fn rate(self) -> Option<f64> {
        (self.total > 0).then(|| self.errors as f64 / self.total as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Lm05Counts {
    pub f: BitTally,
    pub g0: BitTally,
    pub g1: BitTally,
}

/// Error-rate estimates, empirical (with counts) or analytic (without).
#[derive(Debug, Clone, PartialEq)]
pub enum ErrorRates {
    Sdc {
        q_f: Distribution,
        q_g: Distribution,
        counts: Option<SdcCounts>,
    },
    Lm05 {
        q_f: f64,
        q_g0: Option<f64>,
        q_g1: Option<f64>,
        counts: Option<Lm05Counts>,
    },
    /// Single bit error rate of a one-way protocol.
    OneWay { q: f64 },
}

/// `same, first, second, both` index of a pair of two-bit strings.
pub fn error_pattern(a: [u8; 2], b: [u8; 2]) -> usize {
    usize::from(a[0] != b[0]) + 2 * usize::from(a[1] != b[1])
}

const PATTERN_LABELS: [&str; 4] = ["same", "first", "second", "both"];

impl fmt::Display for ErrorRates {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dist = |d: &Distribution| {
            d.probabilities()
                .iter()
                .zip(PATTERN_LABELS)
                .map(|(p, l)| format!("{l}={p:.6}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        match self {
            ErrorRates::Sdc { q_f, q_g, counts } => {
                writeln!(f, "q_F: {}", dist(q_f))?;
                write!(f, "q_G: {}", dist(q_g))?;
                if let Some(c) = counts {
                    write!(f, "\nq_F_counts: {:?}\nq_G_counts: {:?}", c.f, c.g)?;
                }
                Ok(())
            }
            ErrorRates::Lm05 {
                q_f,
                q_g0,
                q_g1,
                counts,
            } => {
                let opt = |x: &Option<f64>| x.map_or("unmeasured".to_string(), |v| format!("{v:.6}"));
                writeln!(f, "q_F: {q_f:.6}")?;
                writeln!(f, "q_G0: {}", opt(q_g0))?;
                write!(f, "q_G1: {}", opt(q_g1))?;
                if let Some(c) = counts {
                    for (name, t) in [("q_F", c.f), ("q_G0", c.g0), ("q_G1", c.g1)] {
                        write!(f, "\n{name}_counts: {}/{}", t.errors, t.total)?;
                    }
                }
                Ok(())
            }
            ErrorRates::OneWay { q } => write!(f, "Q: {q:.6}"),
        }
    }
}

/// Precomputed operators shared by all signals of a run.
struct Kit {
    noise: Option<QuantumChannel>,
    model: ChannelModel,
    eve: EveStrategy,
    z: ProjectiveMeasurement,
    x: ProjectiveMeasurement,
    paulis: [ComplexMatrix; 4],
    /// Two-qubit versions acting on the second (flying) qubit.
    z_flying: ProjectiveMeasurement,
    x_flying: ProjectiveMeasurement,
    paulis_flying: [ComplexMatrix; 4],
    bell: ProjectiveMeasurement,
    zx: ProjectiveMeasurement,
}

impl Kit {
    fn new(model: ChannelModel, eve: EveStrategy) -> Result<Self> {
        let noise = match model {
            ChannelModel::Noiseless => None,
            ChannelModel::Independent(q) | ChannelModel::Correlated(q) => Some(depolarizing(q, 2)?),
        };
        let paulis = PauliLabel::ALL.map(PauliLabel::matrix);
        let paulis_flying = PauliLabel::ALL.map(|p| ComplexMatrix::identity(2).kron(&p.matrix()));
        Ok(Self {
            noise,
            model,
            eve,
            z: z_measurement(),
            x: x_measurement(),
            paulis,
            z_flying: z_measurement().on_subsystem(&[2, 2], 1)?,
            x_flying: x_measurement().on_subsystem(&[2, 2], 1)?,
            paulis_flying,
            bell: bell_measurement(),
            zx: z_tensor_x_measurement(),
        })
    }

    fn single(&self, basis: Basis) -> &ProjectiveMeasurement {
        match basis {
            Basis::Z => &self.z,
            Basis::X => &self.x,
        }
    }

    fn flying(&self, basis: Basis) -> &ProjectiveMeasurement {
        match basis {
            Basis::Z => &self.z_flying,
            Basis::X => &self.x_flying,
        }
    }

    /// Channel noise then Eve on the flying qubit, which is the last subsystem.
    fn transit<R: Rng>(
        &self,
        rho: DensityOperator,
        pass: Pass,
        alice_encodes: bool,
        rng: &mut R,
    ) -> Result<DensityOperator> {
        let flying = rho.dims().len() - 1;
        let noisy = match (&self.noise, self.model, pass) {
            (None, ..) => false,
            (Some(_), ChannelModel::Correlated(_), Pass::First) => !alice_encodes,
            (Some(_), ..) => true,
        };
        let mut rho = match (&self.noise, noisy) {
            (Some(channel), true) => channel.apply_on(&rho, flying)?,
            _ => rho,
        };
        if let EveStrategy::InterceptResend { basis, passes } = self.eve {
            if passes.covers(pass) {
                let m = if flying == 0 { self.single(basis) } else { self.flying(basis) };
                rho = m.measure(&rho, rng.random())?.state;
            }
        }
        Ok(rho)
    }
}

fn signal_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn bits_of(outcome: usize) -> [u8; 2] {
    [(outcome >> 1) as u8, (outcome & 1) as u8]
}

fn ket_density(basis: Basis, bit: u8) -> DensityOperator {
    let ket = match basis {
        Basis::Z => z_ket(bit),
        Basis::X => x_ket(bit),
    };
    PureState::new(vec![2], ket.to_vec())
        .expect("normalized ket")
        .density()
}

/// Alice's branch of an SDC signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdcAlice {
    Encode(PauliLabel),
    /// Measure `Z`, then send `|+⟩` (0) or `|−⟩` (1).
    Measure { resend: u8 },
}

/// Classical choices of one SDC signal; measurement outcomes are sampled separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SdcChoices {
    pub alice: SdcAlice,
    pub bob_bell: bool,
}

impl SdcChoices {
    fn sample<R: Rng>(c: f64, rng: &mut R) -> Self {
        let alice_encodes = rng.random::<f64>() < c;
        let bob_bell = rng.random::<f64>() < c;
        let alice = if alice_encodes {
            SdcAlice::Encode(PauliLabel::ALL[rng.random_range(0..4)])
        } else {
            SdcAlice::Measure {
                resend: rng.random_range(0..2),
            }
        };
        Self { alice, bob_bell }
    }
}

fn sdc_physics<R: Rng>(kit: &Kit, choices: SdcChoices, index: usize, rng: &mut R) -> Result<SignalRecord> {
    let alice_encodes = matches!(choices.alice, SdcAlice::Encode(_));

    // stored qubit first, flying qubit second
    let mut rho = PureState::psi_plus().density();
    rho = kit.transit(rho, Pass::First, alice_encodes, rng)?;

    let alice = match choices.alice {
        SdcAlice::Encode(pauli) => {
            rho = rho.evolve(&kit.paulis_flying[pauli.index()])?;
            AliceAction::Encode(pauli)
        }
        SdcAlice::Measure { resend } => {
            let measured = kit.z_flying.measure(&rho, rng.random())?;
            rho = measured.state.partial_trace(&[0])?.tensor(&ket_density(Basis::X, resend));
            AliceAction::Measure {
                basis: Basis::Z,
                outcome: measured.outcome as u8,
                resend,
            }
        }
    };

    rho = kit.transit(rho, Pass::Second, alice_encodes, rng)?;

    let bob = if choices.bob_bell {
        BobOutcome::Bell(bits_of(kit.bell.measure(&rho, rng.random())?.outcome))
    } else {
        BobOutcome::ZX(bits_of(kit.zx.measure(&rho, rng.random())?.outcome))
    };

    let kind = match (alice_encodes, choices.bob_bell) {
        (true, true) => SignalKind::Key,
        (false, false) => SignalKind::Estimation,
        _ => SignalKind::Mismatched,
    };
    Ok(SignalRecord {
        index,
        kind,
        theta: None,
        prep_bit: None,
        alice,
        bob,
    })
}

/// One SDC signal with fixed classical choices.
pub fn simulate_sdc_signal<R: Rng>(
    model: ChannelModel,
    eve: EveStrategy,
    choices: SdcChoices,
    rng: &mut R,
) -> Result<SignalRecord> {
    model.validate()?;
    sdc_physics(&Kit::new(model, eve)?, choices, 0, rng)
}

/// Alice's LM05 key bit: reverse reconciliation keeps the encoding bit that
/// flips states of basis `Θ`; direct reconciliation always keeps the first bit.
pub fn lm05_alice_key_bit(pauli: PauliLabel, theta: Basis, reconciliation: Reconciliation) -> u8 {
    let (first, second) = pauli.bits();
    match (reconciliation, theta) {
        (Reconciliation::Reverse, Basis::X) => second,
        _ => first,
    }
}

/// Set Alice announces under direct reconciliation: 0 for `{1, σ_Y}`, 1 for `{σ_X, σ_Z}`.
pub fn lm05_announced_set(pauli: PauliLabel) -> u8 {
    let (first, second) = pauli.bits();
    first ^ second
}

/// Bob's LM05 key bit from his raw outcome.
pub fn lm05_bob_key_bit(
    raw: u8,
    prep_bit: u8,
    theta: Basis,
    announced_set: Option<u8>,
    reconciliation: Reconciliation,
) -> u8 {
    let w = raw ^ prep_bit;
    match (reconciliation, theta, announced_set) {
        (Reconciliation::Direct, Basis::X, Some(set)) => w ^ set,
        _ => w,
    }
}

/// Alice's branch of an LM05 signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lm05Alice {
    Encode(PauliLabel),
    /// Measure in the basis and resend the post-measurement state.
    Measure(Basis),
}

/// Classical choices of one LM05 signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lm05Choices {
    pub theta: Basis,
    pub prep_bit: u8,
    pub alice: Lm05Alice,
}

impl Lm05Choices {
    fn sample<R: Rng>(cfg: &Lm05Config, rng: &mut R) -> Self {
        let theta = if rng.random::<f64>() < cfg.z_basis_prob { Basis::Z } else { Basis::X };
        let prep_bit = rng.random_range(0..2);
        let alice = if rng.random::<f64>() < cfg.encode_prob {
            Lm05Alice::Encode(PauliLabel::ALL[rng.random_range(0..4)])
        } else {
            match cfg.version {
                Lm05Version::V1 => Lm05Alice::Measure(Basis::X),
                Lm05Version::V2 if rng.random::<bool>() => Lm05Alice::Measure(Basis::Z),
                Lm05Version::V2 => Lm05Alice::Measure(Basis::X),
            }
        };
        Self { theta, prep_bit, alice }
    }
}

fn lm05_physics<R: Rng>(
    kit: &Kit,
    choices: Lm05Choices,
    reconciliation: Reconciliation,
    index: usize,
    rng: &mut R,
) -> Result<SignalRecord> {
    let Lm05Choices { theta, prep_bit, .. } = choices;
    let alice_encodes = matches!(choices.alice, Lm05Alice::Encode(_));

    let mut rho = ket_density(theta, prep_bit);
    rho = kit.transit(rho, Pass::First, alice_encodes, rng)?;

    let alice = match choices.alice {
        Lm05Alice::Encode(pauli) => {
            rho = rho.evolve(&kit.paulis[pauli.index()])?;
            AliceAction::Encode(pauli)
        }
        Lm05Alice::Measure(basis) => {
            let measured = kit.single(basis).measure(&rho, rng.random())?;
            rho = measured.state;
            let outcome = measured.outcome as u8;
            AliceAction::Measure {
                basis,
                outcome,
                resend: outcome,
            }
        }
    };

    rho = kit.transit(rho, Pass::Second, alice_encodes, rng)?;
    let raw = kit.single(theta).measure(&rho, rng.random())?.outcome as u8;

    let (kind, announced) = match alice {
        AliceAction::Encode(pauli) => (SignalKind::Key, Some(lm05_announced_set(pauli))),
        AliceAction::Measure { basis, .. } if basis == theta => (SignalKind::Estimation, None),
        AliceAction::Measure { .. } => (SignalKind::Discarded, None),
    };
    let key_bit = lm05_bob_key_bit(raw, prep_bit, theta, announced, reconciliation);
    Ok(SignalRecord {
        index,
        kind,
        theta: Some(theta),
        prep_bit: Some(prep_bit),
        alice,
        bob: BobOutcome::Single { raw, key_bit },
    })
}

/// One LM05 signal with fixed classical choices.
pub fn simulate_lm05_signal<R: Rng>(
    model: ChannelModel,
    eve: EveStrategy,
    reconciliation: Reconciliation,
    choices: Lm05Choices,
    rng: &mut R,
) -> Result<SignalRecord> {
    model.validate()?;
    lm05_physics(&Kit::new(model, eve)?, choices, reconciliation, 0, rng)
}

pub fn run_sdc(cfg: &SdcConfig) -> Result<ProtocolTranscript> {
    cfg.validate()?;
    let kit = Kit::new(cfg.channel_model, cfg.eve)?;
    let records = (0..cfg.n_signals)
        .into_par_iter()
        .map(|i| {
            let mut rng = signal_rng(cfg.seed, i);
            let choices = SdcChoices::sample(cfg.encode_prob, &mut rng);
            sdc_physics(&kit, choices, i, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProtocolTranscript {
        protocol: ProtocolKind::Sdc,
        seed: cfg.seed,
        records,
    })
}

pub fn run_lm05(cfg: &Lm05Config) -> Result<ProtocolTranscript> {
    cfg.validate()?;
    let kit = Kit::new(cfg.channel_model, cfg.eve)?;
    let records = (0..cfg.n_signals)
        .into_par_iter()
        .map(|i| {
            let mut rng = signal_rng(cfg.seed, i);
            let choices = Lm05Choices::sample(cfg, &mut rng);
            lm05_physics(&kit, choices, cfg.reconciliation, i, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProtocolTranscript {
        protocol: ProtocolKind::Lm05 {
            version: cfg.version,
            reconciliation: cfg.reconciliation,
        },
        seed: cfg.seed,
        records,
    })
}

impl ProtocolTranscript {
    pub fn count(&self, kind: SignalKind) -> usize {
        self.records.iter().filter(|r| r.kind == kind).count()
    }

    pub fn summary(&self) -> TranscriptSummary {
        let n = self.records.len();
        let key = self.count(SignalKind::Key);
        let estimation = self.count(SignalKind::Estimation);
        let unusable = self.count(SignalKind::Mismatched) + self.count(SignalKind::Discarded);
        TranscriptSummary {
            n_signals: n,
            key,
            estimation,
            unusable,
            unusable_fraction: if n == 0 { 0.0 } else { unusable as f64 / n as f64 },
        }
    }

    /// One row per signal: `index, branch, theta, prep_bit, alice_action,
    /// alice_bits, bob_raw, bob_key_bit`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| QkdError::Io(e.to_string());
        let mut writer = csv::Writer::from_writer(out);
        writer
            .write_record([
                "index",
                "branch",
                "theta",
                "prep_bit",
                "alice_action",
                "alice_bits",
                "bob_raw",
                "bob_key_bit",
            ])
            .map_err(io)?;
        let pair = |b: [u8; 2]| format!("{}{}", b[0], b[1]);
        for r in &self.records {
            let alice_action = match r.alice {
                AliceAction::Encode(p) => format!("encode-{p}"),
                AliceAction::Measure { basis, .. } => format!("measure-{basis}"),
            };
            let (bob_raw, bob_key) = match r.bob {
                BobOutcome::Bell(b) => (pair(b), pair(b)),
                BobOutcome::ZX(b) => (pair(b), String::new()),
                BobOutcome::Single { raw, key_bit } => (raw.to_string(), key_bit.to_string()),
            };
            writer
                .write_record([
                    r.index.to_string(),
                    r.kind.label().to_string(),
                    r.theta.map(|t| t.to_string()).unwrap_or_default(),
                    r.prep_bit.map(|b| b.to_string()).unwrap_or_default(),
                    alice_action,
                    pair(r.alice.bits()),
                    bob_raw,
                    bob_key,
                ])
                .map_err(io)?;
        }
        writer.flush().map_err(|e| QkdError::Io(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TranscriptSummary {
    pub n_signals: usize,
    pub key: usize,
    pub estimation: usize,
    /// Mismatched (SDC) or discarded (LM05) signals.
    pub unusable: usize,
    /// Informational sifting loss; no finite-key rate is derived from it.
    pub unusable_fraction: f64,
}

impl fmt::Display for TranscriptSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "signals: {}", self.n_signals)?;
        writeln!(f, "key_signals: {}", self.key)?;
        writeln!(f, "estimation_signals: {}", self.estimation)?;
        writeln!(f, "unusable_signals: {}", self.unusable)?;
        write!(f, "unusable_fraction: {:.6}", self.unusable_fraction)
    }
}

/// Sampled key positions, in increasing order.
fn sample_key_positions(t: &ProtocolTranscript, est_fraction: f64) -> Result<Vec<usize>> {
    if !(est_fraction > 0.0 && est_fraction < 1.0) {
        return Err(QkdError::OutOfRange {
            name: "est_fraction",
            value: est_fraction,
            range: "(0, 1)",
        });
    }
    let key: Vec<usize> = t
        .records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.kind == SignalKind::Key)
        .map(|(i, _)| i)
        .collect();
    if key.is_empty() {
        return Err(QkdError::EmptyEstimation("key branch"));
    }
    let amount = ((est_fraction * key.len() as f64).round() as usize).clamp(1, key.len());
    let mut rng = ChaCha8Rng::seed_from_u64(t.seed);
    rng.set_stream(SAMPLING_STREAM);
    let mut chosen: Vec<usize> = sample(&mut rng, key.len(), amount).into_iter().map(|i| key[i]).collect();
    chosen.sort_unstable();
    Ok(chosen)
}

/// `q_F` from a uniformly chosen `est_fraction` of the key records, `q_G`
/// (or `q_G0`, `q_G1`) from every estimation record.
pub fn estimate_errors(t: &ProtocolTranscript, est_fraction: f64) -> Result<ErrorRates> {
    let sampled = sample_key_positions(t, est_fraction)?;
    let estimation = t.records.iter().filter(|r| r.kind == SignalKind::Estimation);
    match t.protocol {
        ProtocolKind::Sdc => {
            let mut counts = SdcCounts::default();
            for &i in &sampled {
                let r = &t.records[i];
                if let BobOutcome::Bell(b) = r.bob {
                    counts.f[error_pattern(r.alice.bits(), b)] += 1;
                }
            }
            for r in estimation {
                if let BobOutcome::ZX(b) = r.bob {
                    counts.g[error_pattern(r.alice.bits(), b)] += 1;
                }
            }
            if counts.g.iter().sum::<usize>() == 0 {
                return Err(QkdError::EmptyEstimation("estimation branch"));
            }
            Ok(ErrorRates::Sdc {
                q_f: Distribution::from_counts(&counts.f)?,
                q_g: Distribution::from_counts(&counts.g)?,
                counts: Some(counts),
            })
        }
        ProtocolKind::Lm05 { reconciliation, .. } => {
            let mut counts = Lm05Counts::default();
            for &i in &sampled {
                let r = &t.records[i];
                if let (AliceAction::Encode(p), Some(theta), BobOutcome::Single { key_bit, .. }) =
                    (r.alice, r.theta, r.bob)
                {
                    counts.f.record(lm05_alice_key_bit(p, theta, reconciliation), key_bit);
                }
            }
            for r in estimation {
                if let (AliceAction::Measure { outcome, resend, .. }, Some(prep), BobOutcome::Single { raw, .. }) =
                    (r.alice, r.prep_bit, r.bob)
                {
                    counts.g0.record(outcome, prep);
                    counts.g1.record(resend, raw);
                }
            }
            if counts.g0.total == 0 {
                return Err(QkdError::EmptyEstimation("estimation branch"));
            }
            Ok(ErrorRates::Lm05 {
                q_f: counts.f.rate().unwrap_or(0.0),
                q_g0: counts.g0.rate(),
                q_g1: counts.g1.rate(),
                counts: Some(counts),
            })
        }
    }
}

/// Key records left after the `q_F` sample is consumed.
pub fn raw_key_length(t: &ProtocolTranscript, est_fraction: f64) -> Result<usize> {
    Ok(t.count(SignalKind::Key) - sample_key_positions(t, est_fraction)?.len())
}
