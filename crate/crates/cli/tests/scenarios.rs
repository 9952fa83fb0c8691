use liouville_cli::{run_scenario, CliError, Overrides, Scenario, Status};

fn run(text: &str) -> Result<liouville_cli::Outcome, CliError> {
    run_scenario(text, &Overrides::default())
}

#[test]
fn eigen_expectation() {
    let ok = run("task = eigen\npreset = euclidean\nsigma = 2\n[eigen]\nexpect_lambda = 9.869604401089358\n").unwrap();
    assert_eq!(ok.status, Status::Passed);
    let bad = run("task = eigen\npreset = euclidean\nsigma = 2\n[eigen]\nexpect_lambda = 9.8\n").unwrap();
    assert!(matches!(bad.status, Status::AssertionFailed(_)));
    assert_eq!(bad.status.exit_code(), 2);
    let csv = ok.file("eigenfunction.csv").unwrap();
    assert!(csv.starts_with("r,segment,v,dv,d2v\n0.0000000000000000e0,0,1.0000000000000000e0,"));
}

#[test]
fn certificates_for_every_example() {
    for name in ["example51", "example52", "example53"] {
        let out = run(&format!("task = check-growth\npreset = {name}\n[check-growth]\ncondition = certificates\n")).unwrap();
        assert_eq!(out.status, Status::Passed, "{name}");
        let pattern = out.file("pattern.csv").unwrap();
        assert!(pattern.lines().skip(1).all(|l| {
            let f: Vec<&str> = l.rsplitn(3, ',').collect();
            f[0] == f[1]
        }));
    }
}

#[test]
fn certificates_need_an_unmodified_example() {
    let e = Scenario::from_text("task = check-growth\npreset = example51\nV = 2\n[check-growth]\ncondition = certificates\n", &Overrides::default()).unwrap_err();
    assert!(e.to_string().contains("certificates need preset"), "{e}");
}

#[test]
fn overriding_the_potential_makes_a_custom_scenario() {
    let sc = Scenario::from_text("task = eigen\npreset = example53\nV = 2 + sqrt(r)\n", &Overrides::default()).unwrap();
    assert_eq!(sc.preset.id, liouville_core::presets::ExampleId::Custom);
    assert_eq!(sc.preset.potential().eval(4.0), 4.0);
}

#[test]
fn resolved_config_reparses_to_the_same_scenario() {
    let text = "task = capacity-probe\npreset = example51\n[capacity-probe]\nradii = 1e3, 1e5\n";
    let sc = Scenario::from_text(text, &Overrides::default()).unwrap();
    let again = Scenario::from_text(&sc.resolved.to_string(), &Overrides::default()).unwrap();
    assert_eq!(sc.resolved.to_string(), again.resolved.to_string());
}

#[test]
fn capacity_probe_is_bounded() {
    let out = run("task = capacity-probe\npreset = example51\nexpect = bounded\n[capacity-probe]\nradii = 1e3, 1e4\n").unwrap();
    assert_eq!(out.status, Status::Passed);
    assert_eq!(out.file("probes.csv").unwrap().lines().count(), 1 + 2 * 3);
}

#[test]
fn glue_failure_is_an_assertion() {
    // The default glue verifies, so expecting a failure is not met.
    let text = "task = counterexample\npreset = example51\nexpect = fail\n[counterexample]\nr_report = 1e5\n";
    let out = run(text).unwrap();
    assert_eq!(out.status.exit_code(), 2, "a verified glue contradicts expect = fail");
}

#[test]
fn auxiliary_solution_report() {
    let text = "task = lower-order\npreset = euclidean\nsigma = 2\nexpect = A\n[lower-order]\nmode = auxiliary\nb = -2/(1+r)^2\nr_max = 100\n";
    let out = run(text).unwrap();
    assert_eq!(out.status, Status::Passed, "{:?}", out.file("report.txt"));
    assert!(out.file("report.txt").unwrap().contains("comparison condition : A"));
    assert!(out.file("z.csv").is_some());
}

#[test]
fn numeric_errors_carry_context() {
    let e = run("task = eigen\npreset = euclidean\nsigma = 0.5\n").err().unwrap();
    assert!(e.to_string().starts_with("exponents: domain error"), "{e}");
}

#[test]
fn p_other_than_two_is_rejected_for_gluing() {
    let e = run("task = counterexample\npreset = example51\np = 3\n").err().unwrap();
    assert!(e.to_string().contains("this task needs p = 2"), "{e}");
}
