//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use twoway_core::channels::{pauli_encoding_maps, PauliLabel};
use twoway_core::entropy::binary_entropy;
use twoway_core::keyrates::{analytic_error_model, rate_point, ChannelScenario, Protocol, ScenarioKind};
use twoway_core::linalg::{DensityOperator, PureState};
use twoway_core::measurement::{
    bell_basis, effective_overlap_bound, overlap, uncertainty_check, uncertainty_sweep, x_basis, x_on_qubit,
    z_basis, z_tensor_x, zz_xor, TripartiteState,
};
use twoway_core::protocols::{
    estimate_errors, run_lm05, run_sdc, simulate_lm05_signal, simulate_sdc_signal, Basis, BobOutcome,
    ChannelModel, ErrorRates, EveStrategy, Lm05Alice, Lm05Choices, Lm05Config, Lm05Version, Reconciliation,
    SdcAlice, SdcChoices, SdcConfig, DEFAULT_EST_FRACTION,
};
use twoway_core::purification::{purify_encoding, verify_purification};

const THRESHOLD_TARGET: f64 = 0.118;
const THRESHOLD_TOL: f64 = 0.002;
const LEMMA_TOL: f64 = 1e-10;
const BELL_MATCH_TOL: f64 = 1e-9;
const LEMMA_TRIALS: usize = 100;
const OVERLAP_TOL: f64 = 1e-10;
const OVERLAP_ZX_TOL: f64 = 1e-12;
const EFFECTIVE_OVERLAP_TOL: f64 = 1e-12;
const SLACK_TOL: f64 = 1e-9;
const UNCERTAINTY_TRIALS: usize = 500;
const MC_SIGNALS: usize = 100_000;
const MC_SIGMAS: f64 = 5.0;
const MC_Q: [f64; 3] = [0.05, 0.1, 0.2];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn twoway(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_twoway"))
        .args(args)
        .output()
        .expect("twoway binary runs")
}

fn criterion_1() -> Outcome {
    let out = twoway(&["threshold", "sdc", "correlated"]);
    let text = String::from_utf8_lossy(&out.stdout);
    let value = text.split_whitespace().last().and_then(|v| v.parse::<f64>().ok());
    match value {
        Some(t) if out.status.success() => outcome(
            (t - THRESHOLD_TARGET).abs() <= THRESHOLD_TOL,
            format!("threshold sdc correlated = {t:.6} (target {THRESHOLD_TARGET} +/- {THRESHOLD_TOL})"),
        ),
        _ => outcome(false, format!("unexpected output {text:?}")),
    }
}

fn criterion_2() -> Outcome {
    let sdc = rate_point(Protocol::Sdc, ScenarioKind::Correlated, 0.0).unwrap().unclamped;
    let lm05 = rate_point(Protocol::Lm05, ScenarioKind::Correlated, 0.0).unwrap().unclamped;
    outcome(
        sdc == 2.0 && lm05 == 1.0,
        format!("SDC = {sdc:.6}, LM05 = {lm05:.6}"),
    )
}

fn criterion_3() -> Outcome {
    let sdc = rate_point(Protocol::Sdc, ScenarioKind::Correlated, 0.05).unwrap().rate;
    let bb84 = 2.0 * (1.0 - 2.0 * binary_entropy(0.05).unwrap());
    let plugplay = rate_point(Protocol::PlugPlay, ScenarioKind::Correlated, 0.05).unwrap().rate;
    outcome(
        sdc > bb84 && sdc > plugplay,
        format!("r_SDC = {sdc:.6}, 2(1-2h(0.05)) = {bb84:.6}, plug&play = {plugplay:.6}"),
    )
}

fn criterion_4() -> Outcome {
    let maps = pauli_encoding_maps();
    let p = match purify_encoding(&maps) {
        Ok(p) => p,
        Err(e) => return outcome(false, e.to_string()),
    };
    let report = verify_purification(&p, &maps, LEMMA_TRIALS, LEMMA_TOL, 2024).unwrap();
    // 1, σ_X, σ_Y, σ_Z pair with Bell outcomes 00, 10, 11, 01
    let bell = bell_basis();
    let bell_dev = p
        .povm
        .iter()
        .zip([0, 2, 3, 1])
        .map(|(f, k)| f.max_abs_diff(&bell.elements()[k]))
        .fold(0.0, f64::max);
    let passed = report.trials == LEMMA_TRIALS
        && report.max_deviation <= LEMMA_TOL
        && report.completeness_error <= LEMMA_TOL
        && report.min_eigenvalue >= -LEMMA_TOL
        && bell_dev <= BELL_MATCH_TOL;
    outcome(
        passed,
        format!(
            "max deviation {:.2e}, completeness {:.2e}, min eigenvalue {:.2e}, Bell match {:.2e}",
            report.max_deviation, report.completeness_error, report.min_eigenvalue, bell_dev
        ),
    )
}

fn criterion_5() -> Outcome {
    let bell_zx = overlap(&bell_basis(), &z_tensor_x()).unwrap();
    let zx = overlap(&z_basis(), &x_basis()).unwrap();
    let xor_0 = overlap(&zz_xor(), &x_on_qubit(0).unwrap()).unwrap();
    let xor_1 = overlap(&zz_xor(), &x_on_qubit(1).unwrap()).unwrap();
    let passed = (bell_zx - 0.25).abs() <= OVERLAP_TOL
        && (zx - 0.5).abs() <= OVERLAP_ZX_TOL
        && (xor_0 - 0.5).abs() <= OVERLAP_TOL
        && (xor_1 - 0.5).abs() <= OVERLAP_TOL;
    outcome(
        passed,
        format!("Bell/ZX = {bell_zx:.12}, Z/X = {zx:.12}, XOR/X1 = {xor_0:.12}, XOR/X2 = {xor_1:.12}"),
    )
}

fn criterion_6() -> Outcome {
    let tsirelson = effective_overlap_bound(8f64.sqrt()).unwrap();
    let classical = effective_overlap_bound(2.0).unwrap();
    outcome(
        (tsirelson - 0.5).abs() <= EFFECTIVE_OVERLAP_TOL && (classical - 1.0).abs() <= EFFECTIVE_OVERLAP_TOL,
        format!("gamma*(2sqrt2) = {tsirelson:.15}, gamma*(2) = {classical:.15}"),
    )
}

fn criterion_7() -> Outcome {
    let mut details = Vec::new();
    let mut passed = true;
    for dims in [[2, 2, 2], [2, 2, 4]] {
        let sweep = uncertainty_sweep(dims, UNCERTAINTY_TRIALS, 7).unwrap();
        passed &= sweep.trials == UNCERTAINTY_TRIALS && sweep.min_slack >= -SLACK_TOL;
        details.push(format!("min slack {:?} = {:.3e}", dims, sweep.min_slack));
    }
    let fixture = PureState::psi_plus().density().tensor(&DensityOperator::basis(2, 0));
    let report = uncertainty_check(&TripartiteState::new(fixture).unwrap(), &x_basis(), &z_basis()).unwrap();
    passed &= report.slack.abs() <= SLACK_TOL;
    details.push(format!("maximally entangled slack = {:.3e}", report.slack));
    outcome(passed, details.join(", "))
}

/// `|observed − expected| / σ` for a binomial proportion; infinite when the
/// expected value has zero variance and the observation still differs.
fn z_score(observed: f64, expected: f64, n: usize) -> f64 {
    let sigma = (expected * (1.0 - expected) / n as f64).sqrt();
    let diff = (observed - expected).abs();
    if sigma == 0.0 {
        if diff == 0.0 { 0.0 } else { f64::INFINITY }
    } else {
        diff / sigma
    }
}

fn criterion_8() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut worst_label = String::new();
    let mut track = |z: f64, label: String| {
        if z > worst {
            worst = z;
            worst_label = label;
        }
    };
    for kind in [ScenarioKind::Independent, ScenarioKind::Correlated] {
        for q in MC_Q {
            let model = match kind {
                ScenarioKind::Independent => ChannelModel::Independent(q),
                ScenarioKind::Correlated => ChannelModel::Correlated(q),
            };
            let scenario = ChannelScenario::new(kind, q).unwrap();

            let t = run_sdc(&SdcConfig::new(MC_SIGNALS, model, 1000)).unwrap();
            let rates = estimate_errors(&t, DEFAULT_EST_FRACTION).unwrap();
            let analytic = analytic_error_model(&scenario, Protocol::Sdc).unwrap();
            if let (
                ErrorRates::Sdc { q_f, q_g, counts: Some(c) },
                ErrorRates::Sdc { q_f: a_f, q_g: a_g, .. },
            ) = (&rates, &analytic)
            {
                let (n_f, n_g) = (c.f.iter().sum(), c.g.iter().sum());
                for i in 0..4 {
                    let z = z_score(q_f.probabilities()[i], a_f.probabilities()[i], n_f);
                    track(z, format!("SDC {} q={q} q_F[{i}]", kind.label()));
                    let z = z_score(q_g.probabilities()[i], a_g.probabilities()[i], n_g);
                    track(z, format!("SDC {} q={q} q_G[{i}]", kind.label()));
                }
            }

            let cfg = Lm05Config::new(MC_SIGNALS, Lm05Version::V1, Reconciliation::Reverse, model, 2000);
            let rates = estimate_errors(&run_lm05(&cfg).unwrap(), DEFAULT_EST_FRACTION).unwrap();
            let analytic = analytic_error_model(&scenario, Protocol::Lm05).unwrap();
            if let (
                ErrorRates::Lm05 { q_f, q_g0, q_g1, counts: Some(c) },
                ErrorRates::Lm05 { q_f: a_f, q_g0: a_g0, q_g1: a_g1, .. },
            ) = (&rates, &analytic)
            {
                let label = |name: &str| format!("LM05 {} q={q} {name}", kind.label());
                track(z_score(*q_f, *a_f, c.f.total), label("q_F"));
                track(z_score(q_g0.unwrap_or(f64::NAN), a_g0.unwrap(), c.g0.total), label("q_G0"));
                track(z_score(q_g1.unwrap_or(f64::NAN), a_g1.unwrap(), c.g1.total), label("q_G1"));
            }
        }
    }
    outcome(
        worst <= MC_SIGMAS,
        format!("largest deviation {worst:.2} sigma ({worst_label}), limit {MC_SIGMAS} sigma"),
    )
}

fn criterion_9() -> Outcome {
    let mut checked = 0;
    let mut errors = 0;
    for p in PauliLabel::ALL {
        let expected = match p {
            PauliLabel::I => [0, 0],
            PauliLabel::X => [1, 0],
            PauliLabel::Y => [1, 1],
            PauliLabel::Z => [0, 1],
        };
        for seed in 0..4 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let choices = SdcChoices {
                alice: SdcAlice::Encode(p),
                bob_bell: true,
            };
            let r = simulate_sdc_signal(ChannelModel::Noiseless, EveStrategy::None, choices, &mut rng).unwrap();
            checked += 1;
            errors += usize::from(r.bob != BobOutcome::Bell(expected));
        }
    }
    // Alice's key bit: direct reconciliation keeps the first encoding bit,
    // reverse keeps the bit that flips states of Bob's basis.
    for theta in [Basis::Z, Basis::X] {
        for prep in 0..2u8 {
            for p in PauliLabel::ALL {
                for reconciliation in [Reconciliation::Direct, Reconciliation::Reverse] {
                    let alice_bit = match (reconciliation, theta, p) {
                        (Reconciliation::Direct, _, PauliLabel::X | PauliLabel::Y) => 1,
                        (Reconciliation::Direct, ..) => 0,
                        (Reconciliation::Reverse, Basis::Z, PauliLabel::X | PauliLabel::Y) => 1,
                        (Reconciliation::Reverse, Basis::X, PauliLabel::Z | PauliLabel::Y) => 1,
                        (Reconciliation::Reverse, ..) => 0,
                    };
                    for seed in 0..4 {
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        let choices = Lm05Choices {
                            theta,
                            prep_bit: prep,
                            alice: Lm05Alice::Encode(p),
                        };
                        let r = simulate_lm05_signal(
                            ChannelModel::Noiseless,
                            EveStrategy::None,
                            reconciliation,
                            choices,
                            &mut rng,
                        )
                        .unwrap();
                        checked += 1;
                        errors += usize::from(!matches!(r.bob, BobOutcome::Single { key_bit, .. } if key_bit == alice_bit));
                    }
                }
            }
        }
    }
    outcome(errors == 0, format!("{checked} signals checked, {errors} key-bit errors"))
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let out = twoway(&[
            "simulate", "--protocol", "lm05", "--version", "2", "--reconcile", "direct", "--channel", "independent",
            "--q", "0.1", "--signals", "20000", "--eve", "intercept-x", "--seed", "42", "--out",
            path.to_str().unwrap(),
        ]);
        (out.status.success(), std::fs::read(&path).unwrap_or_default())
    };
    let (ok_a, a) = run("a.csv");
    let (ok_b, b) = run("b.csv");
    outcome(
        ok_a && ok_b && !a.is_empty() && a == b,
        format!("{} and {} bytes, identical = {}", a.len(), b.len(), a == b),
    )
}

fn main() {
    assert!(Path::new(env!("CARGO_BIN_EXE_twoway")).exists());
    let criteria: [(&str, fn() -> Outcome, Duration); 10] = [
        ("SDC correlated threshold", criterion_1, Duration::from_secs(1)),
        ("noiseless rates", criterion_2, Duration::from_secs(1)),
        ("rate ordering at q/2 = 0.05", criterion_3, Duration::from_secs(1)),
        ("purified Pauli encoding", criterion_4, Duration::from_secs(1)),
        ("overlap values", criterion_5, Duration::from_secs(1)),
        ("effective overlap bound", criterion_6, Duration::from_secs(1)),
        ("uncertainty relation sweep", criterion_7, Duration::from_secs(30)),
        ("Monte Carlo vs analytic error rates", criterion_8, Duration::from_secs(60)),
        ("exhaustive noiseless oracles", criterion_9, Duration::from_secs(1)),
        ("CLI determinism", criterion_10, Duration::from_secs(60)),
    ];
    let mut failures = 0;
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let passed = result.passed && elapsed <= *limit;
        failures += usize::from(!passed);
        println!(
            "criterion {:>2} [{}] {name}: {} ({:.2}s, limit {}s)",
            i + 1,
            if passed { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!("acceptance: {}/10 passed", 10 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
