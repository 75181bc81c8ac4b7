//! Asymptotic key rates, analytic error models under depolarizing noise, and
//! threshold search. Error rates are plotted against `q/2`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::entropy::{binary_entropy, shannon, Distribution};
use crate::error::{QkdError, Result};
use crate::protocols::ErrorRates;

/// Absolute tolerance of [`threshold`] on the `q/2` axis.
pub const THRESHOLD_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    Independent,
    Correlated,
}

impl ScenarioKind {
    pub fn label(self) -> &'static str {
        match self {
            ScenarioKind::Independent => "independent",
            ScenarioKind::Correlated => "correlated",
        }
    }

    pub fn with_q(self, q: f64) -> Result<ChannelScenario> {
        ChannelScenario::new(self, q)
    }
}

impl FromStr for ScenarioKind {
    type Err = QkdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "independent" => Ok(ScenarioKind::Independent),
            "correlated" => Ok(ScenarioKind::Correlated),
            other => Err(QkdError::InvalidConfig(format!("unknown scenario {other:?}"))),
        }
    }
}

/// Depolarizing probability `q` of a single pass together with how the two
/// passes combine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelScenario {
    kind: ScenarioKind,
    q: f64,
}

impl ChannelScenario {
    pub fn new(kind: ScenarioKind, q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(QkdError::OutOfRange {
                name: "q",
                value: q,
                range: "[0, 1]",
            });
        }
        Ok(Self { kind, q })
    }

    pub fn independent(q: f64) -> Result<Self> {
        Self::new(ScenarioKind::Independent, q)
    }

    pub fn correlated(q: f64) -> Result<Self> {
        Self::new(ScenarioKind::Correlated, q)
    }

    pub fn kind(&self) -> ScenarioKind {
        self.kind
    }

    pub fn one_way_depol(&self) -> f64 {
        self.q
    }

    /// `2q − q²` for independent passes, `q` for correlated ones.
    pub fn round_trip_depol(&self) -> f64 {
        match self.kind {
            ScenarioKind::Independent => 2.0 * self.q - self.q * self.q,
            ScenarioKind::Correlated => self.q,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    Sdc,
    Lm05,
    /// Two copies of one-way BB84, one per channel.
    Bb84Pair,
    /// One-way BB84 over the round trip.
    PlugPlay,
}

impl Protocol {
    pub const ALL: [Protocol; 4] = [Protocol::Sdc, Protocol::Lm05, Protocol::Bb84Pair, Protocol::PlugPlay];

    pub fn label(self) -> &'static str {
        match self {
            Protocol::Sdc => "sdc",
            Protocol::Lm05 => "lm05",
            Protocol::Bb84Pair => "bb84x2",
            Protocol::PlugPlay => "plugplay",
        }
    }

    /// Rate before clamping at zero.
    pub fn unclamped_rate(self, rates: &ErrorRates) -> Result<f64> {
        match (self, rates) {
            (Protocol::Sdc, ErrorRates::Sdc { q_f, q_g, .. }) => Ok(sdc_rate_unclamped(q_g, q_f)),
            (Protocol::Lm05, ErrorRates::Lm05 { q_f, q_g0, q_g1, .. }) => {
                lm05_rate_unclamped(*q_g0, *q_g1, *q_f)
            }
            (Protocol::Bb84Pair, ErrorRates::OneWay { q }) => Ok(2.0 * one_way_unclamped(*q)?),
            (Protocol::PlugPlay, ErrorRates::OneWay { q }) => one_way_unclamped(*q),
            _ => Err(QkdError::InvalidConfig(format!(
                "error rates do not belong to protocol {}",
                self.label()
            ))),
        }
    }

    pub fn rate(self, rates: &ErrorRates) -> Result<f64> {
        Ok(self.unclamped_rate(rates)?.max(0.0))
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Protocol {
    type Err = QkdError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sdc" => Ok(Protocol::Sdc),
            "lm05" => Ok(Protocol::Lm05),
            "bb84" | "bb84x2" | "bb84-pair" => Ok(Protocol::Bb84Pair),
            "plugplay" | "plug-play" | "plug&play" => Ok(Protocol::PlugPlay),
            other => Err(QkdError::UnknownProtocol(other.to_string())),
        }
    }
}

fn h4(d: &Distribution) -> Result<f64> {
    if d.len() != 4 {
        return Err(QkdError::InvalidDistribution(format!(
            "expected 4 outcomes, got {}",
            d.len()
        )));
    }
    Ok(shannon(d))
}

/// `2 − h₄(q_G) − h₄(q_F)`.
pub fn sdc_rate_unclamped(q_g: &Distribution, q_f: &Distribution) -> f64 {
    2.0 - shannon(q_g) - shannon(q_f)
}

pub fn sdc_rate(q_g: &Distribution, q_f: &Distribution) -> Result<f64> {
    Ok((2.0 - h4(q_g)? - h4(q_f)?).max(0.0))
}

/// `1 − min(h(q_G0), h(q_G1)) − h(q_F)`, minimizing only over the measured `G` rates.
pub fn lm05_rate_unclamped(q_g0: Option<f64>, q_g1: Option<f64>, q_f: f64) -> Result<f64> {
    let mut best: Option<f64> = None;
    for q in [q_g0, q_g1].into_iter().flatten() {
        let h = binary_entropy(q)?;
        best = Some(best.map_or(h, |b: f64| b.min(h)));
    }
    let best = best.ok_or(QkdError::EmptyEstimation("no G-basis error rate"))?;
    Ok(1.0 - best - binary_entropy(q_f)?)
}

pub fn lm05_rate(q_g0: f64, q_g1: f64, q_f: f64) -> Result<f64> {
    Ok(lm05_rate_unclamped(Some(q_g0), Some(q_g1), q_f)?.max(0.0))
}

fn one_way_unclamped(q: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&q) {
        return Err(QkdError::OutOfRange {
            name: "Q",
            value: q,
            range: "[0, 1/2]",
        });
    }
    Ok(1.0 - 2.0 * binary_entropy(q)?)
}

/// Two one-way BB84 runs, one per channel: `2·max(0, 1 − 2h(Q))`.
pub fn bb84_pair_rate(q: f64) -> Result<f64> {
    Ok(2.0 * one_way_unclamped(q)?.max(0.0))
}

/// One-way BB84 over the round trip: `max(0, 1 − 2h(Q_rt))`.
pub fn plugplay_rate(q_round_trip: f64) -> Result<f64> {
    Ok(one_way_unclamped(q_round_trip)?.max(0.0))
}

/// Error rates a depolarizing scenario produces for `protocol`.
pub fn analytic_error_model(scenario: &ChannelScenario, protocol: Protocol) -> Result<ErrorRates> {
    let q = scenario.one_way_depol();
    let r = scenario.round_trip_depol();
    Ok(match protocol {
        Protocol::Sdc => {
            let h = q / 2.0;
            ErrorRates::Sdc {
                q_f: Distribution::new(vec![1.0 - 3.0 * r / 4.0, r / 4.0, r / 4.0, r / 4.0])?,
                q_g: Distribution::new(vec![(1.0 - h) * (1.0 - h), h * (1.0 - h), (1.0 - h) * h, h * h])?,
                counts: None,
            }
        }
        Protocol::Lm05 => ErrorRates::Lm05 {
            q_f: r / 2.0,
            q_g0: Some(q / 2.0),
            q_g1: Some(q / 2.0),
            counts: None,
        },
        Protocol::Bb84Pair => ErrorRates::OneWay { q: q / 2.0 },
        Protocol::PlugPlay => ErrorRates::OneWay { q: r / 2.0 },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatePoint {
    pub protocol: Protocol,
    pub scenario: ScenarioKind,
    /// `q/2`.
    pub error_rate: f64,
    /// Clamped at zero.
    pub rate: f64,
    pub unclamped: f64,
    pub inputs: ErrorRates,
}

impl RatePoint {
    pub fn log10_rate(&self) -> Option<f64> {
        (self.rate > 0.0).then(|| self.rate.log10())
    }
}

pub fn rate_point(protocol: Protocol, scenario: ScenarioKind, error_rate: f64) -> Result<RatePoint> {
    let s = ChannelScenario::new(scenario, 2.0 * error_rate)?;
    let inputs = analytic_error_model(&s, protocol)?;
    let unclamped = protocol.unclamped_rate(&inputs)?;
    Ok(RatePoint {
        protocol,
        scenario,
        error_rate,
        rate: unclamped.max(0.0),
        unclamped,
        inputs,
    })
}

/// `points` evenly spaced values from `min` to `max` inclusive.
pub fn linear_grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![min],
        _ => (0..points)
            .map(|i| min + (max - min) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// Rates over a grid of `q/2` values, grid-major then protocol order.
pub fn sweep(protocols: &[Protocol], scenario: ScenarioKind, q_half_grid: &[f64]) -> Result<Vec<RatePoint>> {
    if let Some(&bad) = q_half_grid.iter().find(|x| !(0.0..=0.5).contains(*x)) {
        return Err(QkdError::OutOfRange {
            name: "q/2",
            value: bad,
            range: "[0, 1/2]",
        });
    }
    q_half_grid
        .par_iter()
        .flat_map_iter(|&x| protocols.iter().map(move |&p| rate_point(p, scenario, x)))
        .collect()
}

/// Zero crossing of the unclamped rate on the `q/2` axis, bisected over `[0, 1/2]`.
pub fn threshold(protocol: Protocol, scenario: ScenarioKind) -> Result<f64> {
    let f = |x: f64| rate_point(protocol, scenario, x).map(|p| p.unclamped);
    let (mut lo, mut hi) = (0.0, 0.5);
    if f(lo)? <= 0.0 || f(hi)? >= 0.0 {
        return Err(QkdError::NoSignChange { lo, hi });
    }
    while hi - lo > THRESHOLD_TOL / 4.0 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(v: &[f64]) -> Distribution {
        Distribution::new(v.to_vec()).unwrap()
    }

    /// `1 − 2h(x)` root by a coarse scan and secant refinement.
    fn one_way_root() -> f64 {
        let h = |x: f64| -x * x.log2() - (1.0 - x) * (1.0 - x).log2();
        let g = |x: f64| 1.0 - 2.0 * h(x);
        let (mut a, mut b) = (0.1, 0.12);
        for _ in 0..60 {
            let c = b - g(b) * (b - a) / (g(b) - g(a));
            a = b;
            b = c;
            if (b - a).abs() < 1e-15 {
                break;
            }
        }
        b
    }

    #[test]
    fn formula_spot_values() {
        let noiseless = dist(&[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(sdc_rate(&noiseless, &noiseless).unwrap(), 2.0);
        let uniform = dist(&[0.25; 4]);
        assert_eq!(sdc_rate(&uniform, &uniform).unwrap(), 0.0);
        assert!(sdc_rate(&dist(&[0.5, 0.5]), &noiseless).is_err());

        assert_eq!(lm05_rate(0.0, 0.0, 0.0).unwrap(), 1.0);
        assert_eq!(lm05_rate(0.5, 0.5, 0.5).unwrap(), 0.0);
        let expected = 1.0 - binary_entropy(0.03).unwrap() - binary_entropy(0.05).unwrap();
        assert!((lm05_rate(0.03, 0.07, 0.05).unwrap() - expected).abs() < 1e-15);
        assert!((lm05_rate(0.03, 0.07, 0.05).unwrap() - 0.51921).abs() < 1e-4);
        assert!(lm05_rate(1.2, 0.0, 0.0).is_err());
        let only_g1 = lm05_rate_unclamped(None, Some(0.07), 0.05).unwrap();
        assert!((only_g1 - (1.0 - binary_entropy(0.07).unwrap() - binary_entropy(0.05).unwrap())).abs() < 1e-15);

        assert_eq!(bb84_pair_rate(0.0).unwrap(), 2.0);
        assert_eq!(plugplay_rate(0.0).unwrap(), 1.0);
        assert_eq!(plugplay_rate(0.25).unwrap(), 0.0);
        assert!(plugplay_rate(0.11).unwrap() > 0.0);
        assert_eq!(plugplay_rate(0.12).unwrap(), 0.0);
        assert!(bb84_pair_rate(0.6).is_err());
    }

    #[test]
    fn analytic_models() {
        let ErrorRates::Sdc { q_f, q_g, .. } =
            analytic_error_model(&ChannelScenario::independent(0.2).unwrap(), Protocol::Sdc).unwrap()
        else {
            panic!()
        };
        let p = q_f.probabilities();
        assert!((p[0] - 0.73).abs() < 1e-12);
        assert!(p[1..].iter().all(|x| (x - 0.09).abs() < 1e-12));
        let g = q_g.probabilities();
        let expected = [0.81, 0.09, 0.09, 0.01];
        assert!(g.iter().zip(expected).all(|(a, b)| (a - b).abs() < 1e-12));

        let lm = analytic_error_model(&ChannelScenario::correlated(0.1).unwrap(), Protocol::Lm05).unwrap();
        let ErrorRates::Lm05 { q_f, q_g0, q_g1, .. } = lm else { panic!() };
        assert!((q_f - 0.05).abs() < 1e-15);
        assert_eq!((q_g0, q_g1), (Some(0.05), Some(0.05)));

        assert!(Protocol::Sdc
            .rate(&ErrorRates::OneWay { q: 0.1 })
            .is_err());
    }

    #[test]
    fn noiseless_rates_are_exact() {
        let rates: Vec<f64> = Protocol::ALL
            .iter()
            .map(|&p| rate_point(p, ScenarioKind::Correlated, 0.0).unwrap().unclamped)
            .collect();
        assert_eq!(rates, vec![2.0, 1.0, 2.0, 1.0]);
    }

    #[test]
    fn thresholds() {
        let root = one_way_root();
        let t = |p, s| threshold(p, s).unwrap();
        let sdc_corr = t(Protocol::Sdc, ScenarioKind::Correlated);
        assert!((sdc_corr - 0.118).abs() < 0.002);
        assert!(t(Protocol::Sdc, ScenarioKind::Independent) < sdc_corr);
        assert!((t(Protocol::Bb84Pair, ScenarioKind::Correlated) - root).abs() < THRESHOLD_TOL);
        assert!((t(Protocol::PlugPlay, ScenarioKind::Correlated) - root).abs() < THRESHOLD_TOL);
        assert!((t(Protocol::Lm05, ScenarioKind::Correlated) - root).abs() < THRESHOLD_TOL);
        // independent plug&play: 2x − x² with x = 2·q/2 equals 2·root
        let x = 1.0 - (1.0 - 2.0 * root).sqrt();
        assert!((t(Protocol::PlugPlay, ScenarioKind::Independent) - x / 2.0).abs() < THRESHOLD_TOL);
    }

    #[test]
    fn ordering_at_five_percent() {
        let at = |p| rate_point(p, ScenarioKind::Correlated, 0.05).unwrap().rate;
        let sdc = at(Protocol::Sdc);
        assert!(sdc > 2.0 * (1.0 - 2.0 * binary_entropy(0.05).unwrap()));
        assert!(sdc > at(Protocol::Bb84Pair));
        assert!(sdc > at(Protocol::PlugPlay));
    }

    #[test]
    fn rates_strictly_decrease_below_threshold() {
        for scenario in [ScenarioKind::Independent, ScenarioKind::Correlated] {
            for p in Protocol::ALL {
                let grid = linear_grid(0.0, threshold(p, scenario).unwrap(), 200);
                let points = sweep(&[p], scenario, &grid).unwrap();
                for w in points.windows(2) {
                    assert!(w[1].unclamped < w[0].unclamped, "{p} {scenario:?} at {}", w[1].error_rate);
                }
            }
        }
    }

    #[test]
    fn sweep_order_and_bounds() {
        let grid = linear_grid(0.0, 0.2, 5);
        let points = sweep(&Protocol::ALL, ScenarioKind::Independent, &grid).unwrap();
        assert_eq!(points.len(), 20);
        assert_eq!(points[5].protocol, Protocol::Lm05);
        assert_eq!(points[5].error_rate, grid[1]);
        assert!(points.iter().all(|p| p.rate >= 0.0));
        assert!(sweep(&Protocol::ALL, ScenarioKind::Independent, &[0.7]).is_err());
        assert_eq!("bb84".parse::<Protocol>().unwrap(), Protocol::Bb84Pair);
        assert!(matches!("e91".parse::<Protocol>(), Err(QkdError::UnknownProtocol(_))));
    }
}
