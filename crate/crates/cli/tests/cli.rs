use std::process::{Command, Output};

fn twoway(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twoway"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn threshold_lists_every_protocol_and_scenario() {
    let out = twoway(&["threshold"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 8);
    assert!(text.contains("sdc correlated 0.1178"));
    assert!(!twoway(&["threshold", "e91"]).status.success());
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rates.csv");
    let out = twoway(&[
        "sweep", "--scenario", "independent", "--qhalf-min", "0", "--qhalf-max", "0.2", "--points", "3",
        "--protocols", "sdc,plugplay", "--out", path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "scenario,protocol,error_rate,rate,log10_rate");
    assert_eq!(lines.len(), 7);
    assert_eq!(lines[1], "independent,sdc,0,2,0.3010299956639812");
    // both rates vanish at q/2 = 0.2, leaving log10 empty
    assert!(lines[5].ends_with(",0,"));
    assert!(lines[6].ends_with(",0,"));
}

#[test]
fn simulate_reports_rates() {
    let out = twoway(&["simulate", "--channel", "correlated", "--q", "0.1", "--signals", "5000", "--seed", "5"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for key in ["protocol: sdc", "key_signals:", "q_F:", "q_G:", "key_rate:", "unusable_fraction:"] {
        assert!(text.contains(key), "missing {key}");
    }
}

#[test]
fn bad_configurations_exit_nonzero() {
    assert_eq!(twoway(&["simulate", "--q", "1.5", "--channel", "independent"]).status.code(), Some(2));
    assert_eq!(twoway(&["simulate", "--protocol", "lm05", "--version", "2", "--p", "0.7"]).status.code(), Some(2));
    assert!(!twoway(&["simulate", "--version", "3"]).status.success());
}

#[test]
fn lemma_verification_exit_codes() {
    for family in ["pauli", "constant", "rank-deficient", "rotated-pauli"] {
        let out = twoway(&["verify-lemma1", "--family", family, "--trials", "20"]);
        assert!(out.status.success(), "{family}: {}", stdout(&out));
        assert!(stdout(&out).contains("result: PASS"));
    }
    for tamper in ["zero-element", "product-state"] {
        let out = twoway(&["verify-lemma1", "--tamper", tamper]);
        assert_eq!(out.status.code(), Some(1), "{tamper}");
        assert!(stdout(&out).contains("result: FAIL"));
    }
}

#[test]
fn uncertainty_check_passes() {
    let out = twoway(&["uncertainty-check", "--dims", "2,3,2", "--trials", "30", "--seed", "3"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("result: PASS"));
    assert_eq!(twoway(&["uncertainty-check", "--dims", "3,2,2"]).status.code(), Some(2));
}
