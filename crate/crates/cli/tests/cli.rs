use std::path::Path;
use std::process::{Command, Output};

fn bellsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bellsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("valid JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SPEC: &str = r#"
modes = ["standard", "multiwindow-exact", "multiwindow-paper"]

[k_grid]
scale = "log"
start = 0.01
stop = 100.0
points = 60

[quad]
a = "30deg"
b = "60deg"
a_prime = "0rad"
b_prime = "90deg"
"#;

#[test]
fn analytic_csv_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "sweep.toml", SPEC);
    let out1 = dir.path().join("a.csv");
    let out2 = dir.path().join("b.csv");
    for out in [&out1, &out2] {
        let o = bellsim(&["analytic", "--spec", &spec, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = std::fs::read(&out1).unwrap();
    assert_eq!(a, std::fs::read(&out2).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("k,mode,p_s,p_c,ch,ch_std_error\n"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 3 * 60);
    assert!(text.lines().all(|l| l.is_ascii()));
    let crossing = text
        .lines()
        .find_map(|l| l.strip_prefix("# crossing,multiwindow-exact,"))
        .unwrap();
    let k: f64 = crossing.parse().unwrap();
    assert!(k > 0.5 && k < 1.5);
}

#[test]
fn analytic_flags_override_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "sweep.toml", SPEC);
    let o = bellsim(&["analytic", "--spec", &spec, "--modes", "standard", "--points", "7"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 8);
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(1) == Some("standard")));
}

#[test]
fn analytic_empty_modes_warns() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "empty.toml", "modes = []\n");
    let o = bellsim(&["analytic", "--spec", &spec]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "k,mode,p_s,p_c,ch,ch_std_error\n");
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
}

#[test]
fn malformed_spec_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "bad.toml", "modes = [\"standard\"]\n[k_grid]\nstart = oops\n");
    let o = bellsim(&["analytic", "--spec", &spec]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");

    let spec = write(dir.path(), "angle.toml", "[quad]\na = \"30\"\nb = \"0deg\"\na_prime = \"0deg\"\nb_prime = \"0deg\"\n");
    assert_eq!(code(&bellsim(&["analytic", "--spec", &spec])), 1);
    let spec = write(dir.path(), "grid.toml", "[k_grid]\nscale = \"log\"\nstart = 2.0\nstop = 1.0\npoints = 5\n");
    assert_eq!(code(&bellsim(&["analytic", "--spec", &spec])), 1);
    assert_eq!(code(&bellsim(&["analytic", "--spec", "/nonexistent/sweep.toml"])), 1);
}

#[test]
fn simulate_report_passes_at_k4() {
    let o = bellsim(&["simulate", "--k", "4", "--scheme", "halves", "--trials", "1000000", "--seed", "11", "--workers", "4"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["seed"], 11);
    assert_eq!(v["reference"], "multiwindow-exact");
    assert_eq!(v["pass"], true);
    assert!(v["runtime_seconds"].as_f64().unwrap() >= 0.0);
    assert!(v["estimated"]["ch"]["ch"].as_f64().unwrap() < 0.0);
    assert_eq!(v["entries"].as_array().unwrap().len(), 8);
    assert!(v["max_abs_z"].as_f64().unwrap() <= 5.0);
    let hw = v["emergent_half_window"].as_array().unwrap();
    assert_eq!(hw.len(), 4);
    assert!((hw[0]["p"].as_f64().unwrap() - 0.875).abs() < 0.002);
}

#[test]
fn simulate_is_reproducible_and_seeded() {
    let run = |seed: &str, workers: &str| {
        let o = bellsim(&["--seed", seed, "simulate", "--k", "1", "--scheme", "single", "--trials", "50000", "--workers", workers]);
        assert_eq!(code(&o), 0);
        json(&o)["estimated"].clone()
    };
    assert_eq!(run("5", "1"), run("5", "3"));
    assert_ne!(run("5", "1"), run("6", "1"));
}

#[test]
fn simulate_negative_control_and_errors() {
    let o = bellsim(&["simulate", "--k", "4", "--trials", "200000", "--reference-k", "1"]);
    assert_eq!(code(&o), 2);
    assert_eq!(json(&o)["pass"], false);
    assert_eq!(code(&bellsim(&["simulate", "--k", "4", "--trials", "0"])), 1);
    assert_eq!(code(&bellsim(&["simulate", "--k", "-1"])), 1);
    assert_eq!(code(&bellsim(&["simulate", "--k", "1", "--scheme", "triple"])), 1);
    assert_eq!(code(&bellsim(&["simulate", "--trials", "10"])), 1);
    assert_eq!(code(&bellsim(&["simulate", "--k", "1", "--quad", "1,2,3,4"])), 1);
    assert_eq!(code(&bellsim(&["nonsense"])), 1);
    assert_eq!(code(&bellsim(&["--help"])), 0);
}

#[test]
fn simulate_reads_config_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.toml",
        "[mc]\nk = 0.5\nscheme = \"single\"\ntrials = 20000\nseed = 2\n\n[quad]\na = \"30deg\"\nb = \"60deg\"\na_prime = \"0deg\"\nb_prime = \"90deg\"\n",
    );
    let o = bellsim(&["simulate", "--config", &cfg]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["config"]["k"], 0.5);
    assert_eq!(v["seed"], 2);
    assert_eq!(v["reference"], "standard");

    let o = bellsim(&["--seed", "9", "simulate", "--config", &cfg, "--k", "2", "--scheme", "halves", "--pairing", "shared"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["config"]["k"], 2.0);
    assert_eq!(v["seed"], 9);
    assert_eq!(v["reference"], "multiwindow-shared");
}

#[test]
fn simulate_phases_flag() {
    let o = bellsim(&["simulate", "--k", "1", "--trials", "20000", "--phases"]);
    assert!(code(&o) == 0 || code(&o) == 2);
    let v = json(&o);
    assert_eq!(v["config"]["options"]["phase_mode"], "sampled");
    assert_eq!(v["closed_form_is_exact"], false);
}

#[test]
fn waveform_stats_three_wave() {
    let o = bellsim(&["waveform", "stats", "--wave", "1,-2,1", "--omega", "2", "--amplitude", "0.5"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let get = |name: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(&format!("{name},")))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((get("max") - 4.0).abs() < 4e-3);
    assert!((get("mean") - 0.75).abs() < 0.75e-3);
    assert!((get("argmax") - std::f64::consts::FRAC_PI_2).abs() < 1e-3);
    assert!(text.contains("# note:"));
}

#[test]
fn waveform_delays_and_windows() {
    let dir = tempfile::tempdir().unwrap();
    let events = dir.path().join("events.txt");
    let o = bellsim(&[
        "--seed", "4", "waveform", "delays", "--wave", "1,-2,1", "--omega", "1", "--rate", "1.5", "--span", "4000",
        "--events", events.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.starts_with("bin_lo,bin_hi,shared,independent\n"));
    let median = |kind: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(&format!("# median_abs_delay,{kind},")))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!(median("shared") < median("independent"));
    let dump = std::fs::read_to_string(&events).unwrap();
    assert!(dump.lines().filter(|l| l.ends_with(" shared_a")).count() > 1000);

    let o = bellsim(&["waveform", "windows", "--wave", "1,-2,1", "--omega", "1", "--rate", "1", "--span", "2000", "--points", "10"]);
    assert_eq!(code(&o), 0);
    let rows: Vec<Vec<f64>> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 10);
    assert!(rows[0][1] > rows[0][2]);
    assert!(rows.windows(2).all(|w| w[1][1] >= w[0][1] && w[1][2] >= w[0][2]));

    assert_eq!(code(&bellsim(&["waveform", "stats", "--wave", "1,a", "--omega", "1"])), 1);
    assert_eq!(code(&bellsim(&["waveform", "stats", "--wave", "1", "--omega", "0"])), 1);
    assert_eq!(code(&bellsim(&["waveform", "stats", "--wave", "1", "--omega", "1", "--resolution", "10"])), 1);
}

#[test]
fn lhv_check_outcomes() {
    let o = bellsim(&["lhv-check", "--models", "10000", "--seed", "3"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["schema_version"], 1);
    assert!(v["min_ch"].as_f64().unwrap() >= -1e-12);

    let a = stdout(&bellsim(&["lhv-check", "--models", "1", "--seed", "8"]));
    assert_eq!(a, stdout(&bellsim(&["lhv-check", "--models", "1", "--seed", "8"])));

    let o = bellsim(&["lhv-check", "--models", "4", "--adversarial"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("invalid model"));
    assert_eq!(code(&bellsim(&["lhv-check", "--models", "0"])), 1);
}
