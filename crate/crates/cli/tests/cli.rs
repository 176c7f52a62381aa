use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_spinorbit");
const SMALL: [&str; 4] = ["--nx", "96", "--ny", "96"];

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn run_in(out: &Path, args: &[&str]) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    all.extend(["--out", out.to_str().unwrap()]);
    run(&all)
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

fn bench_path(name: &str) -> String {
    format!("{}/../core/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn circular_input_gives_tilted_lobes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &[&["teleport", "--pol", "l"][..], &SMALL].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let names: Vec<String> = files(dir.path()).into_keys().collect();
    for port in ["0H", "0V", "1H", "1V"] {
        assert!(names.contains(&format!("port_{port}.pgm")));
        assert!(names.contains(&format!("port_{port}.json")));
    }
    let report = json(&dir.path().join("teleport.json"));
    assert_eq!(report["schema"], 1);
    for (k, want) in [-45.0, 45.0, 45.0, -45.0].into_iter().enumerate() {
        let got = report["ports"][k]["orientation_deg"].as_f64().unwrap();
        assert!((got - want).abs() < 1.0, "port {k}: {got}");
    }
}

#[test]
fn horizontal_input_gives_a_donut_on_0h() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &[&["teleport", "--alpha", "1,0", "--beta", "0,0"][..], &SMALL].concat());
    assert!(out.status.success());
    let side = json(&dir.path().join("port_0H.json"));
    assert!(side["orientation_deg"].is_null());
    assert_eq!(side["coefficients"]["re"][1], 0.0);
}

#[test]
fn bench_file_matches_built_in_pipeline() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(run_in(a.path(), &[&["teleport", "--pol", "d"][..], &SMALL].concat()).status.success());
    let bench = bench_path("teleport.bench");
    assert!(run_in(b.path(), &[&["teleport", "--pol", "d", "--bench", &bench][..], &SMALL].concat()).status.success());
    let (fa, fb) = (files(a.path()), files(b.path()));
    for name in fa.keys().filter(|n| n.starts_with("port_")) {
        assert_eq!(fa[name], fb[name], "{name}");
    }
    let (ra, rb) = (json(&a.path().join("teleport.json")), json(&b.path().join("teleport.json")));
    assert_eq!(ra["ports"], rb["ports"]);
}

#[test]
fn identical_config_gives_identical_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let args = [&["teleport", "--alpha", "0.6,0.1", "--beta=-0.3,0.7", "--format", "png"][..], &SMALL].concat();
        assert!(run_in(dir.path(), &args).status.success());
    }
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert_eq!(fa, fb);
    assert!(fa["port_0H.png"].starts_with(b"\x89PNG"));
}

#[test]
fn default_sweep_writes_twelve_images_and_a_stable_montage() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let out = run_in(dir.path(), &[&["sweep"][..], &SMALL].concat());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let fa = files(a.path());
    assert_eq!(fa.keys().filter(|n| n.starts_with("sweep_") && n.ends_with(".pgm")).count(), 12);
    assert_eq!(fa["montage.pgm"], files(b.path())["montage.pgm"]);
    let report = json(&a.path().join("sweep.json"));
    assert_eq!(report["reconstructed_sweep"], true);
    let orientation = |i: usize| report["points"][i - 1]["port_0h"]["orientation_deg"].as_f64();
    assert_eq!(orientation(1), None);
    assert!(orientation(5).unwrap().abs() < 1.0);
    assert!((orientation(9).unwrap() + 45.0).abs() < 1.0);
}

#[test]
fn three_point_sweep_is_the_anchors() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_in(dir.path(), &[&["sweep", "--points", "3"][..], &SMALL].concat()).status.success());
    let report = json(&dir.path().join("sweep.json"));
    let bloch: Vec<Vec<f64>> = report["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["input"]["bloch"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect())
        .collect();
    let anchors = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    assert_eq!(bloch.len(), 3);
    for (got, want) in bloch.iter().zip(anchors) {
        for k in 0..3 {
            assert!((got[k] - want[k]).abs() < 1e-12);
        }
    }
}

#[test]
fn verify_is_deterministic_and_passes() {
    let args = ["verify", "--seed", "7", "--samples", "100", "--circuits", "20", "--nx", "128", "--ny", "128"];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stdout));
    assert_eq!(a.stdout, b.stdout);
    let table = String::from_utf8(a.stdout).unwrap();
    assert!(table.contains("bell-table") && table.contains("parser-round-trip"));
    assert!(!table.contains("FAIL"));
}

#[test]
fn parse_prints_canonical_form() {
    let out = run(&["parse", &bench_path("entangler.bench")]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "# circuit: entangler\nbs # BS\ndove @path1 # DP\n");
}

#[test]
fn render_writes_image_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &[&["render", "--waveplates", "45,22.5", "--name", "d"][..], &SMALL].concat());
    assert!(out.status.success());
    let side = json(&dir.path().join("d.json"));
    assert!(side["orientation_deg"].as_f64().unwrap().abs() < 1.0);
    assert!(fs::read(dir.path().join("d.pgm")).unwrap().starts_with(b"P5\n96 96\n255\n"));
}

#[test]
fn errors_map_to_exit_codes_and_leave_nothing_behind() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let code = |args: &[&str]| run_in(d, args).status.code();

    assert_eq!(code(&["teleport", "--pol", "l", "--alpha", "1,0", "--beta", "0,0"]), Some(2));
    assert_eq!(code(&["teleport"]), Some(2));
    assert_eq!(code(&["teleport", "--alpha", "0,0", "--beta", "0,0"]), Some(2));
    assert_eq!(code(&["teleport", "--alpha", "1;0", "--beta", "0,0"]), Some(2));
    assert_eq!(code(&["sweep", "--points", "10"]), Some(2));
    assert_eq!(code(&["render", "--pol", "h", "--nx", "0"]), Some(2));

    let bad = d.join("bad.bench");
    fs::write(&bad, "bs\npbs\nbs\n").unwrap();
    let out = run_in(d, &["teleport", "--pol", "h", "--bench", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    assert_eq!(run(&["parse", d.join("missing.bench").to_str().unwrap()]).status.code(), Some(3));

    let leftovers: Vec<_> = fs::read_dir(d).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(leftovers, vec![std::ffi::OsString::from("bad.bench")]);

    let blocker = d.join("file");
    fs::write(&blocker, "").unwrap();
    let out = run(&["render", "--pol", "h", "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}
