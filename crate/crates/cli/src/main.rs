use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use twoway_core::keyrates::{linear_grid, sweep, threshold, Protocol, ScenarioKind};
use twoway_core::linalg::{ComplexMatrix, PureState};
use twoway_core::measurement::{bell_basis, uncertainty_sweep};
use twoway_core::protocols::{
    estimate_errors, raw_key_length, run_lm05, run_sdc, Basis, ChannelModel, EveStrategy, Lm05Config,
    Lm05Version, Passes, ProtocolTranscript, Reconciliation, SdcConfig, DEFAULT_ENCODE_PROB,
    DEFAULT_EST_FRACTION, DEFAULT_V1_Z_PROB,
};
use twoway_core::purification::{purify_encoding, verify_purification, EncodingFamily};

/// Negative slack tolerated by `uncertainty-check`.
const SLACK_TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "twoway", version, about = "Two-way QKD simulator and key-rate toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a protocol transcript and estimate its error rates
    Simulate(SimulateArgs),
    /// Tabulate analytic key rates over a q/2 grid
    Sweep(SweepArgs),
    /// Zero crossing of the key rate on the q/2 axis
    Threshold {
        /// sdc, lm05, bb84x2 or plugplay; all protocols when omitted
        protocol: Option<String>,
        /// independent or correlated; both when omitted
        scenario: Option<String>,
    },
    /// Build and check the purified encoding of an encoding family
    #[command(name = "verify-lemma1")]
    VerifyLemma1(LemmaArgs),
    /// Check the entropic uncertainty relation on random tripartite states
    UncertaintyCheck {
        /// Dimensions of A, B, E (A must be a qubit)
        #[arg(long, value_delimiter = ',', default_value = "2,2,2")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    Sdc,
    Lm05,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChannelArg {
    Noiseless,
    Independent,
    Correlated,
}

#[derive(Clone, Copy, ValueEnum)]
enum EveArg {
    None,
    InterceptZ,
    InterceptX,
}

#[derive(Clone, Copy, ValueEnum)]
enum PassesArg {
    First,
    Second,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReconcileArg {
    Direct,
    Reverse,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Independent,
    Correlated,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Pauli,
    Constant,
    RankDeficient,
    RotatedPauli,
}

#[derive(Clone, Copy, ValueEnum)]
enum TamperArg {
    None,
    ZeroElement,
    ProductState,
}

#[derive(clap::Args)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value = "sdc")]
    protocol: ProtocolArg,
    /// LM05 version
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    version: u8,
    #[arg(long, value_enum, default_value = "reverse")]
    reconcile: ReconcileArg,
    #[arg(long, value_enum, default_value = "noiseless")]
    channel: ChannelArg,
    /// Depolarizing probability of one pass
    #[arg(long, default_value_t = 0.0)]
    q: f64,
    #[arg(long, default_value_t = 10_000)]
    signals: usize,
    /// Probability of the encoding (key) branch
    #[arg(long, default_value_t = DEFAULT_ENCODE_PROB)]
    c: f64,
    /// LM05 Z-preparation probability (default 0.9 for version 1, 0.5 for version 2)
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, value_enum, default_value = "none")]
    eve: EveArg,
    /// Passes the intercept acts on
    #[arg(long, value_enum, default_value = "both")]
    eve_passes: PassesArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_EST_FRACTION)]
    est_fraction: f64,
    /// Write the full transcript as CSV
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct SweepArgs {
    #[arg(long, value_enum, default_value = "correlated")]
    scenario: ScenarioArg,
    #[arg(long, default_value_t = 0.0)]
    qhalf_min: f64,
    #[arg(long, default_value_t = 0.15)]
    qhalf_max: f64,
    #[arg(long, default_value_t = 31)]
    points: usize,
    #[arg(long, value_delimiter = ',', default_value = "sdc,lm05,bb84x2,plugplay")]
    protocols: Vec<String>,
    /// CSV destination; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct LemmaArgs {
    #[arg(long, value_enum, default_value = "pauli")]
    family: FamilyArg,
    /// Random input states on top of the probe basis
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Corrupt the construction before verifying it
    #[arg(long, value_enum, default_value = "none")]
    tamper: TamperArg,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Threshold { protocol, scenario } => run_threshold(protocol, scenario),
        Command::VerifyLemma1(args) => verify_lemma(args),
        Command::UncertaintyCheck { dims, trials, seed } => uncertainty(dims, trials, seed),
    }
}

fn scenario_kind(s: ScenarioArg) -> ScenarioKind {
    match s {
        ScenarioArg::Independent => ScenarioKind::Independent,
        ScenarioArg::Correlated => ScenarioKind::Correlated,
    }
}

fn simulate(args: SimulateArgs) -> Result<bool> {
    let model = match args.channel {
        ChannelArg::Noiseless => ChannelModel::Noiseless,
        ChannelArg::Independent => ChannelModel::Independent(args.q),
        ChannelArg::Correlated => ChannelModel::Correlated(args.q),
    };
    let passes = match args.eve_passes {
        PassesArg::First => Passes::First,
        PassesArg::Second => Passes::Second,
        PassesArg::Both => Passes::Both,
    };
    let eve = match args.eve {
        EveArg::None => EveStrategy::None,
        EveArg::InterceptZ => EveStrategy::InterceptResend { basis: Basis::Z, passes },
        EveArg::InterceptX => EveStrategy::InterceptResend { basis: Basis::X, passes },
    };

    let mut out = io::stdout().lock();
    let (transcript, rate_protocol): (ProtocolTranscript, Protocol) = match args.protocol {
        ProtocolArg::Sdc => {
            let cfg = SdcConfig {
                n_signals: args.signals,
                encode_prob: args.c,
                channel_model: model,
                eve,
                seed: args.seed,
            };
            writeln!(out, "protocol: sdc")?;
            (run_sdc(&cfg)?, Protocol::Sdc)
        }
        ProtocolArg::Lm05 => {
            let version = if args.version == 1 { Lm05Version::V1 } else { Lm05Version::V2 };
            let reconciliation = match args.reconcile {
                ReconcileArg::Direct => Reconciliation::Direct,
                ReconcileArg::Reverse => Reconciliation::Reverse,
            };
            let default_p = if version == Lm05Version::V1 { DEFAULT_V1_Z_PROB } else { 0.5 };
            let cfg = Lm05Config {
                n_signals: args.signals,
                encode_prob: args.c,
                z_basis_prob: args.p.unwrap_or(default_p),
                version,
                reconciliation,
                channel_model: model,
                eve,
                seed: args.seed,
            };
            writeln!(out, "protocol: lm05")?;
            writeln!(out, "version: {}", args.version)?;
            writeln!(out, "reconciliation: {reconciliation:?}")?;
            writeln!(out, "p: {}", cfg.z_basis_prob)?;
            (run_lm05(&cfg)?, Protocol::Lm05)
        }
    };
    writeln!(out, "channel: {model:?}")?;
    writeln!(out, "eve: {eve:?}")?;
    writeln!(out, "c: {}", args.c)?;
    writeln!(out, "seed: {}", args.seed)?;
    writeln!(out, "est_fraction: {}", args.est_fraction)?;
    writeln!(out, "{}", transcript.summary())?;

    let rates = estimate_errors(&transcript, args.est_fraction)?;
    writeln!(out, "raw_key_length: {}", raw_key_length(&transcript, args.est_fraction)?)?;
    writeln!(out, "{rates}")?;
    let unclamped = rate_protocol.unclamped_rate(&rates)?;
    writeln!(out, "key_rate: {:.6}", unclamped.max(0.0))?;
    writeln!(out, "key_rate_unclamped: {unclamped:.6}")?;

    if let Some(path) = args.out {
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        transcript.write_csv(BufWriter::new(file))?;
        writeln!(out, "transcript: {}", path.display())?;
    }
    Ok(true)
}

fn run_sweep(args: SweepArgs) -> Result<bool> {
    let protocols = args
        .protocols
        .iter()
        .map(|p| p.parse::<Protocol>())
        .collect::<Result<Vec<_>, _>>()?;
    if args.points == 0 {
        bail!("--points must be positive");
    }
    let scenario = scenario_kind(args.scenario);
    let grid = linear_grid(args.qhalf_min, args.qhalf_max, args.points);
    let points = sweep(&protocols, scenario, &grid)?;

    let sink: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(["scenario", "protocol", "error_rate", "rate", "log10_rate"])?;
    for p in &points {
        writer.write_record([
            scenario.label().to_string(),
            p.protocol.label().to_string(),
            p.error_rate.to_string(),
            p.rate.to_string(),
            p.log10_rate().map(|l| l.to_string()).unwrap_or_default(),
        ])?;
    }
    writer.flush()?;
    Ok(true)
}

fn run_threshold(protocol: Option<String>, scenario: Option<String>) -> Result<bool> {
    let protocols = match protocol {
        Some(p) => vec![p.parse::<Protocol>()?],
        None => Protocol::ALL.to_vec(),
    };
    let scenarios = match scenario {
        Some(s) => vec![s.parse::<ScenarioKind>()?],
        None => vec![ScenarioKind::Independent, ScenarioKind::Correlated],
    };
    for p in &protocols {
        for s in &scenarios {
            println!("{} {} {:.6}", p.label(), s.label(), threshold(*p, *s)?);
        }
    }
    Ok(true)
}

fn verify_lemma(args: LemmaArgs) -> Result<bool> {
    let family = match args.family {
        FamilyArg::Pauli => EncodingFamily::Pauli,
        FamilyArg::Constant => EncodingFamily::Constant,
        FamilyArg::RankDeficient => EncodingFamily::RankDeficient,
        FamilyArg::RotatedPauli => EncodingFamily::RotatedPauli { seed: args.seed },
    };
    let maps = family.maps()?;
    let mut p = purify_encoding(&maps)?;
    match args.tamper {
        TamperArg::None => {}
        TamperArg::ZeroElement => {
            let d = p.povm[0].rows();
            p.povm[0] = ComplexMatrix::zeros(d, d);
        }
        TamperArg::ProductState => {
            let d = p.dim_c();
            p.phi_cd = PureState::basis(d, 0).tensor(&PureState::basis(d, 0));
        }
    }
    let report = verify_purification(&p, &maps, args.trials, args.tol, args.seed)?;
    println!("family: {family:?}");
    println!("{report}");
    let mut passed = report.passed;
    if matches!(family, EncodingFamily::Pauli) {
        // encodings 1, σ_X, σ_Y, σ_Z pair with Bell outcomes 00, 10, 11, 01
        let bell = bell_basis();
        let order = [0, 2, 3, 1];
        let deviation = p
            .povm
            .iter()
            .zip(order)
            .map(|(f, k)| f.max_abs_diff(&bell.elements()[k]))
            .fold(0.0, f64::max);
        println!("bell_projector_deviation: {deviation:.3e}");
        passed &= deviation <= 1e-9;
    }
    Ok(passed)
}

fn uncertainty(dims: Vec<usize>, trials: usize, seed: u64) -> Result<bool> {
    let dims: [usize; 3] = dims
        .try_into()
        .map_err(|d: Vec<usize>| anyhow::anyhow!("--dims needs three values, got {}", d.len()))?;
    let sweep = uncertainty_sweep(dims, trials, seed)?;
    println!("dims: {},{},{}", dims[0], dims[1], dims[2]);
    println!("trials: {}", sweep.trials);
    println!("seed: {seed}");
    println!("min_slack: {:.6e}", sweep.min_slack);
    println!("mean_slack: {:.6e}", sweep.mean_slack);
    let passed = sweep.min_slack >= -SLACK_TOL;
    println!("result: {}", if passed { "PASS" } else { "FAIL" });
    Ok(passed)
}
