use std::path::Path;
use std::process::{Command, Output};

fn cwt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cwt"))
        .args(args)
        .env_remove("CWT_THREADS")
        .output()
        .expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    cwt(args).status.code().expect("exit code")
}

#[test]
fn help_succeeds() {
    let out = cwt(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for sub in [
        "kernel-dump",
        "potential",
        "invert",
        "reproduce",
        "parabolic",
        "radon",
        "cone",
    ] {
        assert!(text.contains(sub), "{sub} missing from help");
    }
}

#[test]
fn inadmissible_measure_fails_the_assertion() {
    assert_eq!(
        code(&["reproduce", "--family", "gw", "--measure", "fd1.json", "--assert"]),
        3
    );
    // without --assert the same run is a validation failure
    assert_eq!(code(&["reproduce", "--family", "gw", "--measure", "fd1.json"]), 2);
}

#[test]
fn difference_of_deltas_reproduces() {
    let out = cwt(&["reproduce", "--family", "gw", "--measure", "d1m2.json", "--assert"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    let last: f64 = csv.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(last <= 1e-3, "{last}");
}

#[test]
fn measure_files_in_the_repository_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../measures/d1m2.json");
    let path = dir.to_str().unwrap();
    assert_eq!(code(&["reproduce", "--family", "gw", "--measure", path, "--assert"]), 0);
}

#[test]
fn bad_arguments_exit_with_two() {
    assert_eq!(code(&["reproduce", "--family", "gw"]), 2);
    assert_eq!(code(&["cone", "--op", "gamma", "--m", "3", "--alpha", "0.5"]), 2);
    assert_eq!(code(&["radon", "--phantom", "square"]), 2);
    assert_eq!(code(&["check", "--criterion", "13"]), 2);
}

#[test]
fn seeded_runs_are_byte_identical() {
    let args = ["--seed", "11", "cone", "--op", "unitmass", "--samples", "200000"];
    let a = cwt(&args);
    let b = cwt(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = cwt(&["--seed", "12", "cone", "--op", "unitmass", "--samples", "200000"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn thread_count_does_not_change_results() {
    let run = |t: &str| {
        cwt(&[
            "--threads",
            t,
            "radon",
            "--n",
            "128",
            "--l",
            "16",
            "--angles",
            "90",
            "--epsilons",
            "0.1,0.01",
        ])
        .stdout
    };
    let one = run("1");
    assert!(!one.is_empty());
    assert_eq!(one, run("3"));
}

#[test]
fn potential_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.cwt");
    let phi = dir.path().join("phi.cwt");
    let report = dir.path().join("report.csv");
    let s = |p: &Path| p.to_str().unwrap().to_string();
    assert_eq!(
        code(&["potential", "--kind", "flett", "--alpha", "0.5", "--out", &s(&phi)]),
        0
    );
    let out = cwt(&[
        "invert",
        "--family",
        "poisson",
        "--a",
        "1",
        "--alpha",
        "0.5",
        "--measure",
        "fd1",
        "--in",
        &s(&phi),
        "--epsilons",
        "0.1,0.01,0.001",
        "--report",
        &s(&report),
        "--out",
        &s(&f),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&report).unwrap();
    assert!(csv.starts_with("epsilon,rel_l2,rel_linf\n"));
    assert!(f.exists());
    // a reference is required to assert
    assert_eq!(
        code(&["invert", "--a", "1", "--alpha", "0.5", "--in", &s(&phi), "--assert"]),
        2
    );
}

#[test]
fn run_config_matches_direct_invocation() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(
        &config,
        r#"{"subcommand": "cone", "flags": {"op": "unitmass", "samples": 50000}, "seed": 4}"#,
    )
    .unwrap();
    let via_config = cwt(&["run", "--config", config.to_str().unwrap()]);
    let direct = cwt(&["--seed", "4", "cone", "--op", "unitmass", "--samples", "50000"]);
    assert_eq!(via_config.status.code(), Some(0));
    assert_eq!(via_config.stdout, direct.stdout);

    std::fs::write(
        &config,
        r#"{"subcommand": "reproduce", "flags": {"family": "gw", "measure": "fd1", "assert": true}}"#,
    )
    .unwrap();
    assert_eq!(code(&["run", "--config", config.to_str().unwrap()]), 3);
    std::fs::write(&config, r#"{"flags": {}}"#).unwrap();
    assert_eq!(code(&["run", "--config", config.to_str().unwrap()]), 2);
}

#[test]
fn checks_report_status() {
    assert_eq!(code(&["check", "--criterion", "4", "--assert"]), 0);
    assert_eq!(code(&["check", "--criterion", "6", "--assert"]), 3);
}

#[test]
fn kernel_dump_writes_csv() {
    let out = cwt(&[
        "kernel-dump",
        "--family",
        "gw",
        "--t",
        "1",
        "--r-max",
        "1",
        "--points",
        "2",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "radius,value");
    let v: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((v - (4.0 * std::f64::consts::PI).powf(-0.5)).abs() < 1e-15);
    assert_eq!(lines[1].split(',').nth(1).unwrap().len(), "2.8209479177387814e-1".len());
}
