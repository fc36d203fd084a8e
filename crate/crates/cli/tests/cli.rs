use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sta(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sta"))
        .arg("--out")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn summary_value(o: &Output, key: &str) -> f64 {
    stdout(o)
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no {key} in {}", stdout(o)))
        .parse()
        .unwrap()
}

#[test]
fn design_expansion_writes_a_round_tripping_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = sta(dir.path(), &["design", "expansion", "--omega0", "1", "--omegaf", "0.1", "--tf", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!((summary_value(&o, "gamma") - 10f64.sqrt()).abs() < 1e-5);
    let text = fs::read_to_string(dir.path().join("expansion.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in ["omega0", "omegaf", "tf", "rho_coeffs", "omega2_samples", "imaginary_flag"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let again = sta(dir.path(), &["design", "expansion", "--omega0", "1", "--omegaf", "0.1", "--tf", "1"]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(fs::read_to_string(dir.path().join("expansion.json")).unwrap(), text);
}

#[test]
fn design_summaries_carry_the_headline_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let o = sta(dir.path(), &["design", "twolevel", "--family", "noise-optimal", "--T", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!((summary_value(&o, "qN_T") - 1.82424).abs() < 1e-3 * 1.82424);
    let o = sta(dir.path(), &["design", "transport", "--d", "1", "--tf", "1", "--omega0", "10"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(summary_value(&o, "fourier_amplitude") < 1e-10);
    let text = fs::read_to_string(dir.path().join("transport.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["variant"], "rigid-harmonic");
}

#[test]
fn verify_passes_shortcut_and_fails_linear_ramp() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good");
    let bad = dir.path().join("bad");
    sta(&good, &["design", "expansion", "--omega0", "1", "--omegaf", "0.1", "--tf", "1"]);
    sta(&bad, &["design", "expansion", "--omega0", "1", "--omegaf", "0.1", "--tf", "1", "--linear"]);
    let o = sta(&good, &["verify", good.join("expansion.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("PASS"));
    let report = fs::read_to_string(good.join("expansion_report.csv")).unwrap();
    assert!(report.starts_with("t,norm,E,V_exp,dH,fidelity\n"));
    let o = sta(&bad, &["verify", bad.join("expansion.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).starts_with("FAIL"));
}

#[test]
fn verify_other_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    sta(p, &["design", "twolevel", "--family", "systematic-optimal", "--T", "2", "--n", "2"]);
    sta(p, &["design", "cd-ising", "--tf", "1"]);
    sta(p, &["design", "transport", "--d", "10", "--tf", "2", "--omega0", "1"]);
    for f in ["twolevel.json", "cd-ising.json", "transport.json"] {
        let o = sta(p, &["verify", p.join(f).to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{f}: {}", stdout(&o));
    }
    let modes = fs::read_to_string(p.join("cd-ising_report.csv")).unwrap();
    assert!(modes.starts_with("k,p_excited_bare,p_excited_cd\n"));
    assert_eq!(modes.lines().count(), 9);
}

#[test]
fn zero_length_protocol_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    sta(dir.path(), &["design", "twolevel", "--family", "flat-pi", "--T", "1", "--intervals", "10"]);
    let path = dir.path().join("twolevel.json");
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    v["T"] = 0.0.into();
    fs::write(&path, v.to_string()).unwrap();
    let o = sta(dir.path(), &["verify", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("schema error at T"));
    let o = sta(dir.path(), &["design", "expansion", "--omega0", "1", "--omegaf", "0.1", "--tf", "0"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn scan_budget_and_empty_axis() {
    let dir = tempfile::tempdir().unwrap();
    let o = sta(dir.path(), &["scan", "twolevel", "--axis", "lambda=0:0.1:101", "--axis", "beta=0:0.1:100"]);
    assert_eq!(o.status.code(), Some(4));
    let o = sta(dir.path(), &["scan", "twolevel", "--axis", "lambda=", "--param", "intervals=400"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("scan_twolevel.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    let o = sta(dir.path(), &["scan", "twolevel", "--axis", "alpha=0:1:3"]);
    assert_eq!(o.status.code(), Some(3));
    let o = sta(dir.path(), &["scan", "nope"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn scans_are_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = ["scan", "twolevel", "--axis", "lambda=0:0.2:4", "--axis", "beta=0:0.2:3", "--param", "intervals=400"];
    let mut one = vec!["--jobs", "1"];
    one.extend(args);
    let mut four = vec!["--jobs", "4"];
    four.extend(args);
    assert_eq!(sta(&a, &one).status.code(), Some(0));
    assert_eq!(sta(&b, &four).status.code(), Some(0));
    let x = fs::read(a.join("scan_twolevel.csv")).unwrap();
    assert_eq!(x, fs::read(b.join("scan_twolevel.csv")).unwrap());
    let text = String::from_utf8(x).unwrap();
    assert!(text.starts_with("lambda,beta,P2_noiseopt,P2_sysopt\n"));
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 12);
    assert!(rows[1].starts_with("0.0000000000000000e0,1.0000000000000001e-1,"));
}

#[test]
fn transport_alpha_scan_orders_fidelity() {
    let dir = tempfile::tempdir().unwrap();
    let o = sta(
        dir.path(),
        &["scan", "transport", "--axis", "alpha=0:1e-5:2", "--axis", "g1=0:1:2"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("scan_transport.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 4);
    // alpha major: (0, 0), (0, 1), (1e-5, 0), (1e-5, 1)
    assert!(rows[0][2] > 0.9999 && rows[1][2] > 0.9999);
    assert!(rows[2][2] < rows[0][2] && rows[3][2] < rows[1][2]);
}

#[test]
fn report_exports_schedules() {
    let dir = tempfile::tempdir().unwrap();
    sta(dir.path(), &["design", "transport", "--d", "1", "--tf", "1", "--omega0", "10", "--intervals", "100"]);
    let o = sta(dir.path(), &["report", dir.path().join("transport.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("variant = rigid-harmonic"));
    let csv = fs::read_to_string(dir.path().join("transport_protocol.csv")).unwrap();
    assert!(csv.starts_with("t,qc,q0\n"));
    assert_eq!(csv.lines().count(), 102);
}

#[test]
fn split_design_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let o = sta(dir.path(), &["design", "ff-split", "--xf", "5", "--tf", "3", "--nt", "300"]);
    assert_eq!(o.status.code(), Some(0));
    let o = sta(dir.path(), &["verify", dir.path().join("ff-split.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}
