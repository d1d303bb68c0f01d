use std::path::Path;
use std::process::{Command, Output};

fn dcslab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcslab"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

const SMALL_MINIMA: &[&str] = &["minima", "--set", "minima_paths=10", "--set", "arcsine_samples=500"];

#[test]
fn minima_default_config_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let o = dcslab(&["minima"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("ok   level-property-mismatches 0 == 0"));
    let summary = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
    assert!(summary.contains("\"command\": \"minima\""));
    let csv = std::fs::read_to_string(dir.path().join("minima/minimizers.csv")).unwrap();
    assert!(csv.starts_with("# dcslab "));
    assert!(csv.contains("seed=1 "));
}

#[test]
fn shallow_depth_is_a_resolution_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = dcslab(&["minima", "--set", "depth=4", "--set", "minima_kmax=5"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("resolution"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let read_all = |p: &Path| {
        let mut files: Vec<(String, Vec<u8>)> = Vec::new();
        for sub in ["summary.json", "minima/minimizers.csv", "minima/details.json", "minima/arcsine_histogram.csv"] {
            files.push((sub.into(), std::fs::read(p.join(sub)).unwrap()));
        }
        files
    };
    assert_eq!(code(&dcslab(SMALL_MINIMA, dir.path())), 0);
    let first = read_all(dir.path());
    assert_eq!(code(&dcslab(SMALL_MINIMA, dir.path())), 0);
    assert_eq!(first, read_all(dir.path()));
}

#[test]
fn negative_boundary_value_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = dcslab(&["density", "--set", "a=-1"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("domain"));
}

#[test]
fn broken_oracle_normalization_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = dcslab(&["coupling", "--replicas", "5", "--set", "oracle_scale=0.9"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("normalization"));
}

#[test]
fn two_oracles_give_a_paired_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = dcslab(
        &["coupling", "--replicas", "50", "--set", "oracle2=markov-cosine", "--set", "corr_replicas=200", "--json"],
        dir.path(),
    );
    assert!(code(&o) <= 1);
    let details = std::fs::read_to_string(dir.path().join("coupling/details.json")).unwrap();
    assert!(details.contains("identical_projection_fraction"));
    assert!(String::from_utf8_lossy(&o.stdout).contains("\"suites\""));
}

#[test]
fn malformed_instance_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"ground\": 2, \"mu\": [1]}").unwrap();
    let o = dcslab(&["duality", "--set", &format!("instance_file={}", bad.display())], dir.path());
    assert_eq!(code(&o), 2);

    let good = dir.path().join("good.json");
    std::fs::write(&good, r#"{"ground": 2, "mu": ["1/2", "1/2"], "nu": [0.5, 0.5], "blocks": [[[0], [1]]]}"#).unwrap();
    let o = dcslab(&["duality", "--set", &format!("instance_file={}", good.display())], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn rational_demo_writes_the_residual_curve() {
    let dir = tempfile::tempdir().unwrap();
    let o = dcslab(&["rational"], dir.path());
    assert_eq!(code(&o), 0);
    let curve = std::fs::read_to_string(dir.path().join("rational/residual_curve.csv")).unwrap();
    assert!(curve.lines().any(|l| l == "sweep,residual_mass"));
    assert!(String::from_utf8_lossy(&o.stdout).contains("residual-mass"));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "seed = 5\nminima_paths = 3\narcsine_samples = 200\n").unwrap();
    let o = dcslab(&["minima", "--config", cfg.to_str().unwrap(), "--seed", "9"], dir.path());
    assert_eq!(code(&o), 0);
    let details = std::fs::read_to_string(dir.path().join("minima/details.json")).unwrap();
    assert!(details.contains("\"seed\": 9"));
    assert!(details.contains("\"minima_paths\": 3"));

    let o = dcslab(&["minima", "--set", "no_such_key=1"], dir.path());
    assert_eq!(code(&o), 2);
    let o = dcslab(&["frobnicate"], dir.path());
    assert_eq!(code(&o), 2);
}
