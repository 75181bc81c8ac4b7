//! Monte Carlo transcripts against the analytic depolarizing model.

use twoway_core::entropy::Distribution;
use twoway_core::keyrates::{analytic_error_model, ChannelScenario, Protocol, ScenarioKind};
use twoway_core::protocols::{
    estimate_errors, run_lm05, run_sdc, Basis, ChannelModel, ErrorRates, EveStrategy, Lm05Config, Lm05Version,
    Passes, Reconciliation, SdcConfig, SignalKind, DEFAULT_EST_FRACTION,
};

const N: usize = 100_000;
const Q_VALUES: [f64; 3] = [0.05, 0.1, 0.2];

fn within_5_sigma(observed: f64, expected: f64, n: usize) -> bool {
    let sigma = (expected * (1.0 - expected) / n as f64).sqrt();
    (observed - expected).abs() <= 5.0 * sigma
}

fn model(kind: ScenarioKind, q: f64) -> ChannelModel {
    match kind {
        ScenarioKind::Independent => ChannelModel::Independent(q),
        ScenarioKind::Correlated => ChannelModel::Correlated(q),
    }
}

/// Standard deviation and first-order bias of the plug-in Shannon entropy
/// (bits) of `n` multinomial samples from `p`.
fn entropy_band(p: &[f64], n: usize) -> (f64, f64) {
    let h: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum();
    let second: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.log2() * x.log2()).sum();
    let support = p.iter().filter(|&&x| x > 0.0).count() as f64;
    let sd = ((second - h * h).max(0.0) / n as f64).sqrt();
    let bias = (support - 1.0) / (2.0 * n as f64 * std::f64::consts::LN_2);
    (sd, bias)
}

#[test]
fn sdc_rates_match_analytic_model() {
    for kind in [ScenarioKind::Independent, ScenarioKind::Correlated] {
        for q in Q_VALUES {
            let t = run_sdc(&SdcConfig::new(N, model(kind, q), 11)).unwrap();
            let empirical = estimate_errors(&t, DEFAULT_EST_FRACTION).unwrap();
            let analytic = analytic_error_model(&ChannelScenario::new(kind, q).unwrap(), Protocol::Sdc).unwrap();
            let (
                ErrorRates::Sdc { q_f, q_g, counts: Some(counts) },
                ErrorRates::Sdc { q_f: a_f, q_g: a_g, .. },
            ) = (&empirical, &analytic)
            else {
                panic!()
            };
            let n_f: usize = counts.f.iter().sum();
            let n_g: usize = counts.g.iter().sum();
            for i in 0..4 {
                assert!(
                    within_5_sigma(q_f.probabilities()[i], a_f.probabilities()[i], n_f),
                    "{kind:?} q={q} F[{i}]"
                );
                assert!(
                    within_5_sigma(q_g.probabilities()[i], a_g.probabilities()[i], n_g),
                    "{kind:?} q={q} G[{i}]"
                );
            }

            // the rate formula evaluated on the estimates stays in the propagated band
            let (sd_f, bias_f) = entropy_band(a_f.probabilities(), n_f);
            let (sd_g, bias_g) = entropy_band(a_g.probabilities(), n_g);
            let band = 5.0 * (sd_f * sd_f + sd_g * sd_g).sqrt() + bias_f + bias_g;
            let r_mc = Protocol::Sdc.unclamped_rate(&empirical).unwrap();
            let r_an = Protocol::Sdc.unclamped_rate(&analytic).unwrap();
            assert!((r_mc - r_an).abs() <= band, "{kind:?} q={q}: {r_mc} vs {r_an} (band {band})");
        }
    }
}

#[test]
fn lm05_rates_match_analytic_model() {
    let variants = [
        (Lm05Version::V1, Reconciliation::Reverse),
        (Lm05Version::V2, Reconciliation::Direct),
    ];
    for (version, reconciliation) in variants {
        for kind in [ScenarioKind::Independent, ScenarioKind::Correlated] {
            for q in [0.05, 0.2] {
                let cfg = Lm05Config::new(N, version, reconciliation, model(kind, q), 12);
                let empirical = estimate_errors(&run_lm05(&cfg).unwrap(), DEFAULT_EST_FRACTION).unwrap();
                let analytic =
                    analytic_error_model(&ChannelScenario::new(kind, q).unwrap(), Protocol::Lm05).unwrap();
                let (
                    ErrorRates::Lm05 { q_f, q_g0, q_g1, counts: Some(counts) },
                    ErrorRates::Lm05 { q_f: a_f, q_g0: a_g0, q_g1: a_g1, .. },
                ) = (&empirical, &analytic)
                else {
                    panic!()
                };
                let label = format!("{version:?} {reconciliation:?} {kind:?} q={q}");
                assert!(within_5_sigma(*q_f, *a_f, counts.f.total), "{label} F");
                assert!(within_5_sigma(q_g0.unwrap(), a_g0.unwrap(), counts.g0.total), "{label} G0");
                assert!(within_5_sigma(q_g1.unwrap(), a_g1.unwrap(), counts.g1.total), "{label} G1");

                let (sd_f, bias_f) = entropy_band(&[*a_f, 1.0 - a_f], counts.f.total);
                let (sd_g, bias_g) = entropy_band(&[a_g0.unwrap(), 1.0 - a_g0.unwrap()], counts.g0.total);
                let band = 5.0 * (sd_f * sd_f + sd_g * sd_g).sqrt() + bias_f + bias_g;
                let r_mc = Protocol::Lm05.unclamped_rate(&empirical).unwrap();
                let r_an = Protocol::Lm05.unclamped_rate(&analytic).unwrap();
                assert!((r_mc - r_an).abs() <= band, "{label}: {r_mc} vs {r_an}");
            }
        }
    }
}

#[test]
fn sdc_branch_accounting() {
    let cfg = SdcConfig::new(N, ChannelModel::Noiseless, 13);
    let t = run_sdc(&cfg).unwrap();
    let c = cfg.encode_prob;
    let expected = [
        (SignalKind::Key, c * c),
        (SignalKind::Estimation, (1.0 - c) * (1.0 - c)),
        (SignalKind::Mismatched, 2.0 * c * (1.0 - c)),
    ];
    for (kind, p) in expected {
        assert!(within_5_sigma(t.count(kind) as f64 / N as f64, p, N), "{kind:?}");
    }
    let summary = t.summary();
    assert_eq!(summary.key + summary.estimation + summary.unusable, N);
}

#[test]
fn lm05_branch_accounting() {
    let cfg = Lm05Config::new(N, Lm05Version::V2, Reconciliation::Reverse, ChannelModel::Noiseless, 14);
    let t = run_lm05(&cfg).unwrap();
    let c = cfg.encode_prob;
    for (kind, p) in [
        (SignalKind::Key, c),
        (SignalKind::Estimation, (1.0 - c) / 2.0),
        (SignalKind::Discarded, (1.0 - c) / 2.0),
    ] {
        assert!(within_5_sigma(t.count(kind) as f64 / N as f64, p, N), "{kind:?}");
    }
    let z_fraction = t.records.iter().filter(|r| r.theta == Some(Basis::Z)).count() as f64 / N as f64;
    assert!(within_5_sigma(z_fraction, 0.5, N));
}

#[test]
fn z_intercept_on_both_passes_disturbs_conjugate_checks() {
    let mut cfg = Lm05Config::new(N, Lm05Version::V2, Reconciliation::Reverse, ChannelModel::Noiseless, 15);
    cfg.eve = EveStrategy::InterceptResend {
        basis: Basis::Z,
        passes: Passes::Both,
    };
    let rates = estimate_errors(&run_lm05(&cfg).unwrap(), DEFAULT_EST_FRACTION).unwrap();
    let ErrorRates::Lm05 { q_f, q_g0, q_g1, counts: Some(counts) } = rates else { panic!() };
    assert!(within_5_sigma(q_g1.unwrap(), 0.25, counts.g1.total));
    assert!(within_5_sigma(q_g0.unwrap(), 0.25, counts.g0.total));
    assert!(within_5_sigma(q_f, 0.25, counts.f.total));
}

#[test]
fn intercept_raises_sdc_errors() {
    let mut cfg = SdcConfig::new(20_000, ChannelModel::Noiseless, 16);
    cfg.eve = EveStrategy::InterceptResend {
        basis: Basis::X,
        passes: Passes::First,
    };
    let rates = estimate_errors(&run_sdc(&cfg).unwrap(), DEFAULT_EST_FRACTION).unwrap();
    let ErrorRates::Sdc { q_f, q_g, .. } = rates else { panic!() };
    let clean = Distribution::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
    assert!(q_f.probabilities()[0] < 0.9);
    assert!(q_g.probabilities()[0] < 0.9);
    assert_ne!(q_f, clean);
}
