use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ssaid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssaid"))
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) {
    let out = ssaid(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().map(String::from).collect()
}

fn simulate(dir: &Path, noise: &str) -> String {
    let out = dir.join("sim.csv");
    let out = out.to_str().unwrap().to_string();
    ok(&["simulate", "--noise", noise, "--seed", "1", "--out", &out]);
    out
}

#[test]
fn simulate_writes_series_truth_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(tmp.path(), "0.1");
    let series = lines(&tmp.path().join("sim.csv"));
    assert_eq!(series[0], "t,value");
    assert_eq!(series.len(), 366);
    let truth = lines(&tmp.path().join("sim.truth.csv"));
    assert_eq!(truth.len(), 11);
    assert_eq!(truth[1], "37,37");
    assert!(tmp.path().join("sim.manifest.json").exists());
}

#[test]
fn simulate_flags_change_the_signal() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("two.csv");
    ok(&[
        "simulate", "--events", "2", "--recurrence", "200", "--first-event", "100", "--length", "400",
        "--amplitude", "10,40", "--ramp", "linear", "--out", out.to_str().unwrap(),
    ]);
    let truth = lines(&tmp.path().join("two.truth.csv"));
    assert_eq!(&truth[1..], ["100,100", "107,107", "300,300", "307,307"]);
    assert_eq!(lines(&out).len(), 401);
}

#[test]
fn baseline_leaves_half_a_window_undefined_at_each_end() {
    let tmp = tempfile::tempdir().unwrap();
    let input = simulate(tmp.path(), "0.2");
    let dir = tmp.path().join("b");
    ok(&["baseline", "--input", &input, "--window", "14", "--zeta", "-5", "--out-dir", dir.to_str().unwrap()]);
    let delta = lines(&dir.join("delta_aic.csv"));
    assert_eq!(delta.len() - 1, 365 - 14);
    assert!(delta[1].starts_with("7,"));
    assert_eq!(lines(&dir.join("changepoints.csv"))[0], "index,time,component");
}

#[test]
fn detect_reads_gps_files_and_reports_gaps() {
    let tmp = tempfile::tempdir().unwrap();
    let input = simulate(tmp.path(), "0.1");
    let mut gps = String::from("# station TEST\n");
    for (i, line) in lines(Path::new(&input)).iter().skip(1).enumerate() {
        // drop three days to leave a gap
        if (200..203).contains(&i) {
            continue;
        }
        let value: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        let doy = i + 1;
        gps.push_str(&format!("{:.4} 2019 {doy} 0.0 {value} 1.0\n", 2019.0 + (doy as f64 - 0.5) / 365.0));
    }
    let path = tmp.path().join("TEST.gps");
    fs::write(&path, gps).unwrap();
    let dir = tmp.path().join("d");
    ok(&[
        "detect", "--input", path.to_str().unwrap(), "--component", "east", "--preset", "desk", "--l", "8",
        "--q", "10", "--out-dir", dir.to_str().unwrap(),
    ]);
    let diag: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("diagnostics.json")).unwrap()).unwrap();
    assert_eq!(diag["input_format"], "gps");
    assert_eq!(diag["series_len"], 362);
    assert_eq!(diag["gaps"][0]["missing_days"], 3);
    let cps = lines(&dir.join("changepoints.csv"));
    assert_eq!(cps.len() - 1, diag["count"].as_u64().unwrap() as usize);
    if cps.len() > 1 {
        assert!(cps[1].ends_with(",east"));
        assert!(cps[1].split(',').nth(1).unwrap().starts_with("2019."));
    }
}

#[test]
fn reruns_and_replays_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let input = simulate(tmp.path(), "0.15");
    let run = |name: &str| {
        let dir = tmp.path().join(name);
        ok(&["detect", "--input", &input, "--preset", "desk", "--l", "6", "--q", "8", "--out-dir", dir.to_str().unwrap()]);
        dir
    };
    let (a, b) = (run("a"), run("b"));
    let replay = tmp.path().join("r");
    ok(&["replay", "--manifest", a.join("manifest.json").to_str().unwrap(), "--out-dir", replay.to_str().unwrap()]);
    for file in ["changepoints.csv", "diagnostics.json", "manifest.json"] {
        let first = fs::read(a.join(file)).unwrap();
        assert_eq!(first, fs::read(b.join(file)).unwrap(), "{file}");
        assert_eq!(first, fs::read(replay.join(file)).unwrap(), "{file}");
    }
}

#[test]
fn config_file_is_applied_and_checked() {
    let tmp = tempfile::tempdir().unwrap();
    let input = simulate(tmp.path(), "0.15");
    let cfg = tmp.path().join("cfg.toml");
    fs::write(&cfg, "preset = \"desk\"\nseed = 5\n[ssaid]\nnoise_levels = 4\nrealizations = 6\n").unwrap();
    let dir = tmp.path().join("d");
    ok(&["detect", "--input", &input, "--config", cfg.to_str().unwrap(), "--q", "7", "--out-dir", dir.to_str().unwrap()]);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    let used = &manifest["run"]["ssaid"];
    assert_eq!(used["noise_levels"], 4);
    assert_eq!(used["realizations"], 7);
    assert_eq!(used["seed"], 5);
    assert_eq!(used["ssa"]["num_components"], 20);

    fs::write(&cfg, "[ssaid]\nnoise_level = 4\n").unwrap();
    let out = ssaid(&["detect", "--input", &input, "--config", cfg.to_str().unwrap(), "--out-dir", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("noise_level"));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(ssaid(&["detect", "--input", "missing.csv"]).status.code(), Some(2));
    assert_eq!(ssaid(&["detect", "--bogus"]).status.code(), Some(2));

    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "t,value\n0,1\n1,x\n").unwrap();
    let out = ssaid(&["baseline", "--input", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let input = simulate(tmp.path(), "0.1");
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = ssaid(&["baseline", "--input", &input, "--out-dir", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let out = ssaid(&["baseline", "--input", &input, "--window", "7"]);
    assert_eq!(out.status.code(), Some(2));
}
