use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn lab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_liouville-lab"))
        .args(args)
        .current_dir(dir)
        .env_remove("LIOUVILLE_LAB_THREADS")
        .output()
        .expect("binary runs")
}

fn run_config(text: &str) -> (TempDir, Output) {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("s.conf"), text).unwrap();
    let out = lab(&["run", "s.conf", "--out", "res"], dir.path());
    (dir, out)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn example51_counterexample_writes_artifacts() {
    let (dir, out) = run_config("task = counterexample\npreset = example51\n");
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let res = dir.path().join("res");
    for f in ["u.csv", "residual.csv", "meta.json", "report.txt"] {
        assert!(res.join(f).is_file(), "{f} missing");
    }
    let u = fs::read_to_string(res.join("u.csv")).unwrap();
    assert!(u.starts_with("r,segment,u,du,d2u\n"));
    let first = u.lines().nth(1).unwrap();
    let value = first.split(',').nth(2).unwrap();
    assert_eq!(value.split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(res.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["status"], "passed");
    assert_eq!(meta["results"]["residual_pass"], true);
    assert!(meta["config"].as_str().unwrap().contains("rho = 200"));
    let report = fs::read_to_string(res.join("report.txt")).unwrap();
    assert!(report.contains("# resolved config"));
    assert!(report.contains("per_decade = 2048"));
}

#[test]
fn missing_sigma_is_an_error() {
    let (dir, out) = run_config("task = check-growth\npreset = euclidean\nV = 1\n");
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("config:1:1: missing required key 'sigma'"), "{err}");
    assert!(!dir.path().join("res").exists());
}

#[test]
fn supercritical_expectation_is_met() {
    let (_dir, out) = run_config("task = check-growth\npreset = euclidean\nV = 1\np = 2\nsigma = 5\nexpect = fail\n");
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("HP1 verdict      : fails"), "{stdout}");
}

#[test]
fn unmet_expectation_exits_with_two() {
    let (dir, out) = run_config("task = check-growth\npreset = euclidean\nsigma = 5\nexpect = hold\n");
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("HP1 was expected to hold but fails"));
    let meta = fs::read_to_string(dir.path().join("res/meta.json")).unwrap();
    assert!(meta.contains("\"exit_code\": 2"));
}

#[test]
fn subcritical_holds() {
    let (_dir, out) = run_config("task = check-growth\npreset = euclidean\nsigma = 2\nexpect = holds\n");
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}

#[test]
fn parse_errors_point_at_the_value() {
    let (_dir, out) = run_config("task = check-growth\npreset = euclidean\nsigma = 5\nV = 1 + * r\n");
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("config:4:9:"), "{}", stderr(&out));
    let (_dir, out) = run_config("task = check-growth\npreset = euclidean\nsigma = 5\n[check-growth]\ncondtion = HP2\n");
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("config:5:1: unknown key 'condtion' in [check-growth]"), "{}", stderr(&out));
    let (_dir, out) = run_config("task = integrate\n");
    assert!(stderr(&out).contains("unknown task 'integrate'"));
}

#[test]
fn wrong_derivative_is_rejected() {
    let text = "task = eigen\npreset = custom\nsigma = 2\n[piece]\npsi = sinh(r)\ndpsi = cosh(r)\nddpsi = cosh(r)\n";
    let (_dir, out) = run_config(text);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("config:7:9: 'ddpsi' = cosh(r) disagrees with the derivative of 'cosh(r)'"), "{err}");
}

#[test]
fn custom_profile_matches_euclidean_preset() {
    let custom = "task = eigen\npreset = custom\nsigma = 2\n[piece]\nend = 5\npsi = r\ndpsi = 1\nddpsi = 0\n\
                  [piece]\npsi = r\ndpsi = 1\nddpsi = 0\n[eigen]\nrho = 3\nper_decade = 256\n";
    let (_dir, out) = run_config(&custom.replace("[piece]\npsi", "[piece]\nstart = 5\nend = 40\npsi"));
    assert_eq!(out.status.code(), Some(1), "the last piece must reach infinity");
    let (dir, out) = run_config(custom);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let (dir2, out2) = run_config("task = eigen\npreset = euclidean\nsigma = 2\n[eigen]\nrho = 3\nper_decade = 256\n");
    assert_eq!(out2.status.code(), Some(0));
    let lam = |d: &TempDir| {
        let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("res/meta.json")).unwrap()).unwrap();
        meta["results"]["lambda"].as_f64().unwrap()
    };
    assert_eq!(lam(&dir), lam(&dir2));
}

#[test]
fn reruns_are_bit_identical() {
    let text = "task = lower-order\npreset = euclidean\nsigma = 2\n[lower-order]\ncases = 12\n";
    let (a, out_a) = run_config(text);
    let (b, out_b) = run_config(text);
    assert_eq!(out_a.status.code(), Some(0), "{}", stderr(&out_a));
    assert_eq!(out_b.status.code(), Some(0));
    let read = |d: &TempDir| fs::read(d.path().join("res/cases.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_eq!(out_a.stdout, out_b.stdout);
}

#[test]
fn seed_flag_overrides_the_file() {
    let text = "task = lower-order\npreset = euclidean\nsigma = 2\nseed = 1\n[lower-order]\ncases = 4\n";
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("s.conf"), text).unwrap();
    let one = lab(&["run", "s.conf", "--out", "a"], dir.path());
    let two = lab(&["--seed", "2", "run", "s.conf", "--out", "b"], dir.path());
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(two.status.code(), Some(0));
    let report = fs::read_to_string(dir.path().join("b/report.txt")).unwrap();
    assert!(report.contains("seed = 2\n"));
    let csv = |d: &str| fs::read_to_string(dir.path().join(d).join("cases.csv")).unwrap();
    assert_ne!(csv("a"), csv("b"));
}

#[test]
fn thread_count_comes_from_the_environment() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("s.conf"), "task = check-growth\npreset = example52\n[check-growth]\ncondition = certificates\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_liouville-lab"))
        .args(["run", "s.conf", "--out", "res"])
        .current_dir(dir.path())
        .env("LIOUVILLE_LAB_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let bad = Command::new(env!("CARGO_BIN_EXE_liouville-lab"))
        .args(["run", "s.conf"])
        .current_dir(dir.path())
        .env("LIOUVILLE_LAB_THREADS", "many")
        .output()
        .unwrap();
    assert_ne!(bad.status.code(), Some(0));
}

#[test]
fn preset_catalog() {
    let dir = TempDir::new().unwrap();
    let out = lab(&["list-presets"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["euclidean", "hyperbolic", "example51", "example52", "example53"] {
        assert!(text.lines().any(|l| l.starts_with(&format!("{name}: "))), "{name}");
    }
    assert!(text.contains("example53: ψ = e^{√r} (r > 2)"));
    assert!(text.contains("example51: V = (log(2+r))^{δ/β}"));
}

#[test]
fn scenario_files_in_the_repository_run() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut seen = 0;
    for entry in fs::read_dir(&root).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("conf") {
            continue;
        }
        let dir = TempDir::new().unwrap();
        let out = lab(&["run", path.to_str().unwrap(), "--out", "res"], dir.path());
        assert_eq!(out.status.code(), Some(0), "{}: {}", path.display(), stderr(&out));
        seen += 1;
    }
    assert!(seen >= 5);
}
