use std::process::{Command, Output};

fn fracosc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracosc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON report")
}

#[test]
fn osc_norm_sgnpow_matches_oracle() {
    let out = fracosc(&[
        "osc-norm", "--f", "preset:sgnpow:0.5", "--alpha", "0.5",
        "--domain", "-1..1", "--res", "4096",
    ]);
    let rep = stdout_json(&out);
    assert_eq!(rep["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(rep["seed"], 0);
    assert_eq!(rep["params"]["res"], 4096);
    // centered cubes attain 1/(2^α(α+1)) ≈ 0.4714
    let bmo = rep["bmo_alpha"].as_f64().unwrap();
    assert!((bmo - 0.4714).abs() < 0.01, "bmo {bmo}");
    // Lip_{1/2} of sgn(x)|x|^{1/2} is √2 (attained across the origin)
    let lip = rep["lip_alpha"].as_f64().unwrap();
    assert!((lip - 1.4142).abs() < 0.03, "lip {lip}");
}

#[test]
fn cmo_profile_bump_all_verdicts_true() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("profile.csv");
    let out = fracosc(&[
        "cmo-profile", "--f", "preset:bump:1:0.5", "--alpha", "0.25",
        "--domain", "-64..64", "--res", "65536",
        "--scales", "0.0078125,0.015625,0.03125,0.0625,0.125,0.25,0.5,1,2,4,8,16,32",
        "--distances", "0.25,2,8",
        "--out", csv.to_str().unwrap(),
    ]);
    let rep = stdout_json(&out);
    assert_eq!(rep["all_pass"], true, "{rep}");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("condition,parameter,sup_osc"));
    assert!(text.lines().count() > 20);
}

#[test]
fn approximate_reports_plan_indices() {
    let out = fracosc(&[
        "approximate", "--f", "preset:bump:0.35:1", "--alpha", "0.25", "--eps", "0.1",
        "--domain", "-8192..8192", "--res", "262144", "--levels", "11",
    ]);
    let rep = stdout_json(&out);
    for key in ["i_eps", "j_eps", "k_eps", "d1", "d2", "A_d2", "approx_error", "measured_C"] {
        assert!(!rep[key].is_null(), "missing {key} in {rep}");
    }
    let err = rep["approx_error"].as_f64().unwrap();
    assert!(err > 0.0 && err <= 0.1, "error {err}");
    assert!(rep["note"].as_str().unwrap().contains("finite domain"));
}

#[test]
fn approximate_unresolvable_exits_3() {
    // eps far below what the grid resolves: a numeric/domain failure, not usage
    let out = fracosc(&[
        "approximate", "--f", "preset:bump:0.35:1", "--alpha", "0.25", "--eps", "0.001",
        "--domain", "-16..16", "--res", "1024",
    ]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn commutator_apply_writes_grid_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let out = fracosc(&[
        "commutator-apply", "--f", "preset:bump:1:1", "--b", "preset:linear",
        "--kernel", "sgn", "--m", "1",
        "--domain", "-8..8", "--res", "1024",
        "--out", csv.to_str().unwrap(),
    ]);
    let rep = stdout_json(&out);
    // with b(x) = x and the odd unit kernel the commutator collapses to ∫f;
    // ∫ e·exp(−1/(1−x²)) dx over (−1,1) ≈ 1.20695
    let sup = rep["sup_abs"].as_f64().unwrap();
    assert!((sup / 1.20695 - 1.0).abs() < 0.05, "sup {sup}");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("# domain=-8..8 resolution=1024"), "{}", &text[..60]);
}

#[test]
fn verify_lower_ratio_positive() {
    let out = fracosc(&[
        "verify-lower", "--b", "preset:linear", "--kernel", "sgn",
        "--weight", "one", "--p", "2", "--q", "4", "--m", "1", "--alpha", "0.25",
        "--cube", "0.5:1", "--domain", "-64..64", "--res", "4096",
    ]);
    let rep = stdout_json(&out);
    assert_eq!(rep["degenerate"], false);
    assert!(rep["ratio"].as_f64().unwrap() > 0.0, "{rep}");
}

#[test]
fn verify_upper_reports_negative_slope() {
    let out = fracosc(&[
        "verify-upper", "--b", "preset:sgnpow:0.25", "--kernel", "sgn",
        "--weight", "one", "--p", "2", "--q", "4", "--m", "1", "--alpha", "0.25",
        "--cube", "0:1", "--d-range", "2,3,4,5", "--domain", "-128..128", "--res", "4096",
    ]);
    let rep = stdout_json(&out);
    assert_eq!(rep["truncated"], false);
    assert!(rep["slope"].as_f64().unwrap() < 0.0, "{rep}");
}

#[test]
fn compactness_probe_emits_curves() {
    let out = fracosc(&[
        "compactness-probe", "--b", "preset:bump:1:1", "--kernel", "sgn",
        "--weight", "one", "--p", "4", "--q", "8", "--m", "1",
        "--domain", "-8..8", "--res", "512",
        "--n-range", "2,4", "--rho-range", "0.5,0.25,0.125",
    ]);
    let rep = stdout_json(&out);
    assert!(rep["bound"].as_f64().unwrap() > 0.0);
    assert_eq!(rep["tail"].as_array().unwrap().len(), 2);
    assert_eq!(rep["modulus"].as_array().unwrap().len(), 3);
}

#[test]
fn weights_check_constant_weight() {
    let out = fracosc(&[
        "weights-check", "--weight", "one", "--p", "2",
        "--domain", "-1..1", "--res", "1024", "--draws", "50",
    ]);
    let rep = stdout_json(&out);
    assert!((rep["ap_constant"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(rep["doubling_failures"], 0);
    assert_eq!(rep["reverse_holder_failures"], 0);
}

#[test]
fn reruns_are_byte_identical() {
    let args = [
        "weights-check", "--weight", "pow:0.5", "--p", "2", "--seed", "7",
        "--domain", "-1..1", "--res", "512", "--draws", "25",
    ];
    let a = fracosc(&args);
    let b = fracosc(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let rep = stdout_json(&a);
    assert_eq!(rep["seed"], 7);
}

#[test]
fn invalid_flag_exits_2() {
    let out = fracosc(&["osc-norm", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_domain_exits_2() {
    let out = fracosc(&[
        "osc-norm", "--f", "preset:linear", "--alpha", "0.5", "--domain", "oops",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("domain"));
}

#[test]
fn unknown_preset_and_bad_alpha_exit_2() {
    let out = fracosc(&["osc-norm", "--f", "preset:mystery", "--alpha", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    // out-of-range alpha is a validation error, not a numeric failure
    let out = fracosc(&["osc-norm", "--f", "preset:linear", "--alpha", "7"]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}
