use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_choreo-morse"));
    cmd.env_remove("CHOREO_MORSE_THREADS");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn read(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn solve_eight(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("eight.json");
    let out = run(&["solve", "-o", p(&path)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    path
}

#[test]
fn config_precedence_is_cli_over_file_over_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(&config, r#"{"a": 2.0, "m": 12, "radius": 0.5}"#).unwrap();
    let out = run(&["print-config", "--config", p(&config), "--m", "20"]);
    assert_eq!(code(&out), 0);
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(doc["format_version"].is_u64());
    let c = &doc["config"];
    assert_eq!(c["a"], 2.0);
    assert_eq!(c["m"], 20);
    assert_eq!(c["radius"], 0.5);
    assert_eq!(c["x_max"], 2.0);
}

#[test]
fn thread_count_comes_from_the_environment_unless_given() {
    let out = bin().args(["print-config"]).env("CHOREO_MORSE_THREADS", "3").output().unwrap();
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["config"]["threads"], 3);
    let out = bin()
        .args(["print-config", "--threads", "2"])
        .env("CHOREO_MORSE_THREADS", "3")
        .output()
        .unwrap();
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["config"]["threads"], 2);
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["solve", "--n", "100"])), 1);
    assert_eq!(code(&run(&["solve", "--no-such-flag"])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["sweep-a", "--from", "2", "--to", "1"])), 1);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"format_version\": 1, \"T\": ").unwrap();
    assert_eq!(code(&run(&["spectrum", "--input", p(&bad)])), 1);
    let unknown = dir.path().join("unknown.json");
    fs::write(&unknown, r#"{"colour": "red"}"#).unwrap();
    assert_eq!(code(&run(&["print-config", "--config", p(&unknown)])), 1);
    assert_eq!(code(&run(&["spectrum"])), 1);
}

#[test]
fn solve_spectrum_classify_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let eight = solve_eight(dir.path());
    let doc = read(&eight);
    assert_eq!(doc["provenance"]["config"]["a"], 1.0);
    let period: f64 = doc["T"].as_f64().unwrap();
    assert!((period - 15.919135).abs() < 1e-4);
    // 17 significant digits in the file itself
    let text = fs::read_to_string(&eight).unwrap();
    assert!(text.contains(&format!("{period:.16e}")));

    let spectrum = dir.path().join("spectrum.json");
    let out = run(&["spectrum", "--input", p(&eight), "--m", "20", "-o", p(&spectrum)]);
    assert_eq!(code(&out), 0);
    let s = read(&spectrum);
    assert_eq!(s["eigenvalues"].as_array().unwrap().len(), 20);
    assert_eq!(s["config"]["m"], 20);
    let lowest = s["eigenvalues"][0].as_f64().unwrap();
    assert!((lowest + 0.0116029).abs() < 1e-5);

    let classes = dir.path().join("classes.json");
    let out = run(&["classify", "--input", p(&eight), "-o", p(&classes)]);
    assert_eq!(code(&out), 0);
    let c = read(&classes);
    assert_eq!((c["N"].as_u64(), c["N_c"].as_u64(), c["N_e"].as_u64()), (Some(2), Some(0), Some(0)));
    assert_eq!(c["clusters"][0]["label"], "D");
    assert!(stdout(&out).contains("D_y^H"));

    for file in [&eight, &spectrum, &classes] {
        let out = run(&["report", "--input", p(file)]);
        assert_eq!(code(&out), 0, "report on {}", file.display());
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("eight.json");
    assert_eq!(code(&run(&["solve", "-o", p(&path)])), 0);
    let first = fs::read(&path).unwrap();
    assert_eq!(code(&run(&["solve", "-o", p(&path), "--threads", "1"])), 0);
    // the thread count is part of the recorded config, so compare without it
    let strip = |bytes: &[u8]| {
        let mut v: Value = serde_json::from_slice(bytes).unwrap();
        v["provenance"]["config"]["threads"] = Value::Null;
        serde_json::to_string(&v).unwrap()
    };
    assert_eq!(strip(&first), strip(&fs::read(&path).unwrap()));
    assert_eq!(code(&run(&["solve", "-o", p(&path)])), 0);
    assert_eq!(first, fs::read(&path).unwrap());
}

#[test]
fn log_potential_is_the_zero_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("log.json");
    assert_eq!(code(&run(&["solve", "--potential", "log", "-o", p(&path)])), 0);
    let classes = dir.path().join("classes.json");
    assert_eq!(code(&run(&["classify", "--input", p(&path), "-o", p(&classes)])), 0);
    let c = read(&classes);
    assert_eq!((c["N"].as_u64(), c["N_c"].as_u64(), c["N_e"].as_u64()), (Some(4), Some(0), Some(0)));
}

#[test]
fn exponent_sweep_resume_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("sweep");
    let args = ["sweep-a", "--from", "0.9", "--to", "1.1", "--step", "0.1", "-o", p(&sweep)];
    let out = run(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = read(&sweep.join("manifest.json"));
    assert_eq!(manifest["complete"], true);
    assert_eq!(manifest["records"].as_array().unwrap().len(), 3);
    let threshold = manifest["thresholds"][0]["parameter"].as_f64().unwrap();
    assert!((threshold - 0.9966).abs() < 1e-3, "threshold {threshold}");
    let csv = fs::read_to_string(sweep.join("thresholds.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);

    // a complete manifest is reported, not recomputed
    let record = sweep.join("records/0000.json");
    let before = fs::metadata(&record).unwrap().modified().unwrap();
    let mut resumed = args.to_vec();
    resumed.push("--resume");
    let out = run(&resumed);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("0.99"));
    assert_eq!(before, fs::metadata(&record).unwrap().modified().unwrap());

    // an interrupted sweep keeps its records and computes only the rest
    let mut m = manifest.clone();
    m["complete"] = Value::Bool(false);
    m["records"].as_array_mut().unwrap().truncate(2);
    fs::remove_file(sweep.join("records/0002.json")).unwrap();
    fs::write(sweep.join("manifest.json"), serde_json::to_string(&m).unwrap()).unwrap();
    let out = run(&resumed);
    assert_eq!(code(&out), 0);
    assert_eq!(before, fs::metadata(&record).unwrap().modified().unwrap());
    let again = read(&sweep.join("manifest.json"));
    assert_eq!(again["records"].as_array().unwrap().len(), 3);
    assert_eq!(again["thresholds"], manifest["thresholds"]);

    // resuming under a different configuration is refused
    let mut other = resumed.clone();
    other.extend(["--M", "81"]);
    assert_eq!(code(&run(&other)), 1);

    let out = run(&["report", "--replay", "--input", p(&sweep.join("manifest.json"))]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("replay"));
}

#[test]
fn failed_sweep_points_give_a_partial_exit() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("sweep");
    let out = run(&[
        "sweep-a", "--from", "1", "--to", "1.1", "--step", "0.1", "--max-iterations", "1", "--no-thresholds", "-o", p(&sweep),
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = read(&sweep.join("manifest.json"));
    assert!(!manifest["gaps"].as_array().unwrap().is_empty());
}

#[test]
fn lennard_jones_sweep_passes_the_fold() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("lj");
    let out = run(&["sweep-T", "--potential", "lj", "--T-start", "16", "--T-stop", "15", "--no-thresholds", "-o", p(&sweep)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = read(&sweep.join("manifest.json"));
    let t_min = manifest["fold"]["t_min"].as_f64().unwrap();
    assert!((t_min - 14.4793).abs() < 1e-3, "fold at {t_min}");
    assert_eq!(manifest["euler"]["chi_e"], 0);
    assert_eq!(code(&run(&["sweep-T", "-o", p(&sweep)])), 1);
}

#[test]
fn lennard_jones_below_the_fold_does_not_converge() {
    let out = run(&["solve", "--potential", "lj", "--T", "10", "--T-start", "16", "-o", "/dev/null"]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn scans_and_refinement_from_the_lowest_pair() {
    let dir = tempfile::tempdir().unwrap();
    let eight = solve_eight(dir.path());

    let refined = dir.path().join("h.json");
    let out = run(&["refine", "--input", p(&eight), "-o", p(&refined)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let result = &read(&refined)["provenance"]["result"];
    let ds = result["action_difference"].as_f64().unwrap();
    assert!((ds - 3.6e-6).abs() < 1e-6, "S - S0 = {ds}");
    assert_eq!(result["collapsed"], false);

    let grid = dir.path().join("plane.csv");
    let out = run(&["scan-2d", "--input", p(&eight), "--points", "9", "-o", p(&grid)]);
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read_to_string(&grid).unwrap().lines().count(), 1 + 81);
    let side = read(&dir.path().join("plane.json"));
    let defect = side["threefold_defect"].as_f64().unwrap();
    let scale = side["threefold_scale"].as_f64().unwrap();
    assert!(defect < 1e-9 * scale);
    assert_eq!(side["angular_minima"].as_array().unwrap().len(), 3);

    let ray = dir.path().join("ray.csv");
    let out = run(&["scan-1d", "--input", p(&eight), "--points", "21", "-o", p(&ray)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&ray).unwrap();
    assert!(text.starts_with("h,S,cubic_model"));
    assert_eq!(text.lines().count(), 22);
}
