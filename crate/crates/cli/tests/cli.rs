use std::fs;
use std::process::{Command, Output};

fn exceedance(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exceedance")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn tv_of_a_single_certain_trial() {
    let o = exceedance(&["tv", "--n", "1", "--p", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("l1 = 1.2642411"), "{}", stdout(&o));
}

#[test]
fn tv_csv_has_header_and_one_row() {
    let o = exceedance(&["tv", "--n", "1", "--p", "1", "--format", "csv"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("n,p,l1,"));
    assert!(lines[1].starts_with("1,1,1.2642411"));
}

#[test]
fn levels_prints_exact_asymptotic_and_difference() {
    let o = exceedance(&["levels", "--n", "1000000", "--lambda", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("u_exact = 4.76151370909"), "{text}");
    assert!(text.contains("u_asymptotic = 4.96380210126"), "{text}");
    assert!(text.contains("difference = 0.2022883"), "{text}");
}

#[test]
fn bounds_for_a_shorthand_model() {
    let o = exceedance(&["bounds", "--model", "power_decay:0.2:1", "--n", "1000", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().next().unwrap().contains("berman_bound"));
    assert!(text.contains("0.7416198487"));
}

#[test]
fn simulate_is_reproducible() {
    let args = ["simulate", "--model", "geometric:0.5", "--n", "5000", "--lambda-cluster", "2", "--seed", "9"];
    let a = exceedance(&args);
    let b = exceedance(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("identity_holds = true"));
}

#[test]
fn experiment_writes_csv_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("e1.json");
    fs::write(
        &cfg,
        r#"{"experiment": "E1_prokhorov_ratio", "n": 10, "level": {"lambda": 1, "mode": "natural"},
            "replications": 1, "master_seed": 4, "output_dir": "ignored"}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = exceedance(&["experiment", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "77"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = fs::read_to_string(out.join("E1_prokhorov_ratio_rows.csv")).unwrap();
    assert!(rows.starts_with("master_seed,config_hash,n,p,np,rho,"));
    assert!(rows.lines().skip(1).all(|l| l.starts_with("77,")));
    assert!(out.join("E1_prokhorov_ratio_summary.csv").exists());
    assert!(out.join("E1_prokhorov_ratio_plot.csv").exists());
}

#[test]
fn missing_config_exits_2() {
    let o = exceedance(&["experiment", "/no/such/config.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"experiment": "E9", "n": 10}"#).unwrap();
    let o = exceedance(&["experiment", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_subcommand_exits_2_with_usage() {
    let o = exceedance(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn bad_model_spec_exits_2() {
    let o = exceedance(&["bounds", "--model", "geometric:1.5", "--n", "100"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numeric_domain_error_exits_3() {
    let o = exceedance(&["tv", "--n", "10", "--p", "1.5"]);
    assert_eq!(o.status.code(), Some(3));
    // p(u) <= 1/2 for u > 0, so n p(u) = 80 has no positive root at n = 100
    let o = exceedance(&["levels", "--n", "100", "--lambda", "80", "--normalization", "tail"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tv.csv");
    let o = exceedance(&["tv", "--n", "100", "--p", "0.01", "--format", "csv", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(fs::read_to_string(path).unwrap().starts_with("n,p,l1"));
}
