use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_mtj-neuron");

/// Small neuron sweep so the network commands finish quickly.
const FAST: &str = "[neuron_model]\ntrials_per_point = 200\npoints = 12\n";

fn run(dir: &Path, threads: &str, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).env("RAYON_NUM_THREADS", threads).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, "2", args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    run(dir, "1", args).status.code().unwrap()
}

fn fast_config(dir: &Path) -> String {
    let p = dir.join("fast.toml");
    std::fs::write(&p, FAST).unwrap();
    p.display().to_string()
}

fn read_json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn same_files(a: &Path, b: &Path) {
    let mut names: Vec<_> = std::fs::read_dir(a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(!names.is_empty());
    for n in names {
        assert_eq!(std::fs::read(a.join(&n)).unwrap(), std::fs::read(b.join(&n)).unwrap(), "{n:?} differs");
    }
}

#[test]
fn network_pipeline_is_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fast_config(dir.path());
    for (out, threads) in [("a", "1"), ("b", "4")] {
        for args in [
            vec!["train", "--dataset", "synth", "--images", "6", "--energy-events"],
            vec!["test"],
            vec!["energy-report"],
        ] {
            let mut full = vec!["--config", cfg.as_str(), "--out", out, "--seed", "21"];
            full.extend(args);
            let r = run(dir.path(), threads, &full);
            assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
        }
    }
    same_files(&dir.path().join("a"), &dir.path().join("b"));

    let stats = read_json(&dir.path().join("a/stats.json"));
    assert_eq!(stats["provenance"]["seed"], 21);
    assert_eq!(stats["provenance"]["command"], "train");
    assert_eq!(stats["provenance"]["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(stats["provenance"]["config"]["neuron_model"]["points"], 12);
    assert_eq!(stats["result"]["images"], 12);
    let raster = std::fs::read_to_string(dir.path().join("a/raster.csv")).unwrap();
    assert!(raster.starts_with("# mtj-neuron "));
    assert!(raster.lines().nth(1).unwrap().starts_with("# config={"));
    assert_eq!(raster.lines().nth(2).unwrap(), "step,neuron_id,image_index,label");

    let energy = read_json(&dir.path().join("a/energy_report.json"));
    assert_eq!(energy["result"]["replay"]["matches_ledgers"], true);
    assert!(energy["result"]["ledger_sum_gap_fj"].as_f64().unwrap() < 1e-6);
}

#[test]
fn checkpoint_round_trip_through_cli() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fast_config(dir.path());
    ok(dir.path(), &["--config", &cfg, "--out", "o", "train", "--images", "3"]);
    let ck = dir.path().join("o/checkpoint.json");
    let original = std::fs::read(&ck).unwrap();
    let parsed = mtj_neuron::io::Checkpoint::load(&ck).unwrap();
    parsed.save(&dir.path().join("again.json")).unwrap();
    assert_eq!(std::fs::read(dir.path().join("again.json")).unwrap(), original);
    let v = read_json(&ck);
    assert_eq!(v["shape"], serde_json::json!([784, 9]));
    assert_eq!(v["levels"].as_array().unwrap().len(), 784);
    ok(dir.path(), &["--out", "o", "test"]);

    let broken = String::from_utf8(original).unwrap().replacen("[784,9]", "[784,8]", 1);
    std::fs::write(&ck, broken).unwrap();
    assert_eq!(code(dir.path(), &["--out", "o", "test"]), 3);
}

#[test]
fn pulse_demo_and_calibrate_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let listed = ok(dir.path(), &["--out", out, "pulse-demo"]);
        assert!(listed.contains("pulse_demo.csv"));
        ok(dir.path(), &["--out", out, "calibrate"]);
    }
    same_files(&dir.path().join("a"), &dir.path().join("b"));
    let csv = std::fs::read_to_string(dir.path().join("a/pulse_demo.csv")).unwrap();
    assert_eq!(csv.lines().nth(2).unwrap(), "time_s,m_x,m_y,m_z");
    let demo = read_json(&dir.path().join("a/pulse_demo.json"));
    assert_eq!(demo["result"]["reversed"], false);
    let cal = read_json(&dir.path().join("a/calibration.json"));
    let entries = cal["result"].as_array().unwrap();
    assert_eq!(entries.len(), 3);
    for (e, t) in entries.iter().zip([0.8e-9, 1.2e-9, 1.5e-9]) {
        assert!((e["thickness"].as_f64().unwrap() - t).abs() < 1e-15);
        assert!(e["relative_error"].as_f64().unwrap() < 1e-9);
    }
}

#[test]
fn sweep_writes_monotone_curves() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["--out", "s", "sweep", "--eb", "10,20,30", "--tpw", "1e-9", "--trials", "200"]);
    let v = read_json(&dir.path().join("s/sweep.json"));
    let slices = v["result"]["slices"].as_array().unwrap();
    assert_eq!(slices.len(), 3);
    let i50: Vec<f64> = slices.iter().map(|s| s["i50"].as_f64().unwrap()).collect();
    assert!(i50[0] < i50[1] && i50[1] < i50[2], "{i50:?}");
    let cells = v["result"]["table"]["cells"].as_array().unwrap();
    for eb in [10.0, 20.0, 30.0] {
        let p: Vec<f64> = cells.iter().filter(|c| c["EB_kT"] == eb).map(|c| c["p"].as_f64().unwrap()).collect();
        assert!(p.len() >= 8);
        assert!(p.windows(2).all(|w| w[1] >= w[0] - 0.1), "{eb}: {p:?}");
        assert!(p[0] < 0.2 && *p.last().unwrap() > 0.8);
    }
    let csv = std::fs::read_to_string(dir.path().join("s/sweep.csv")).unwrap();
    assert!(csv.contains("command=sweep seed=2015"));
}

#[test]
fn exit_codes_by_failure_class() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "[device]\nr_p = 1\nbogus = 2\n").unwrap();
    std::fs::write(dir.path().join("neg.toml"), "[network.encoder]\np_max = -1.0\n").unwrap();
    assert_eq!(code(dir.path(), &["--config", "bad.toml", "calibrate"]), 2);
    assert_eq!(code(dir.path(), &["--config", "neg.toml", "calibrate"]), 2);
    assert_eq!(code(dir.path(), &["sweep", "--trials", "5"]), 2);
    assert_eq!(code(dir.path(), &["--config", "absent.toml", "calibrate"]), 3);
    assert_eq!(code(dir.path(), &["--out", "nothing", "test"]), 3);
    assert_eq!(code(dir.path(), &["--out", "nothing", "energy-report"]), 3);
    assert_eq!(code(dir.path(), &["train", "--dataset", "synth", "--images", "0"]), 3);
    // a pulse too short to reverse the magnet at any bracketed amplitude
    assert_eq!(code(dir.path(), &["--out", "p", "pulse-demo", "--width", "1e-12"]), 4);
}

#[test]
fn tampered_energy_log_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fast_config(dir.path());
    ok(dir.path(), &["--config", &cfg, "--out", "e", "train", "--images", "2", "--energy-events"]);
    let events = dir.path().join("e/energy_events.csv");
    let text = std::fs::read_to_string(&events).unwrap();
    let tampered = text.replacen(",reset,", ",write,", 1);
    assert_ne!(tampered, text);
    std::fs::write(&events, tampered).unwrap();
    assert_eq!(code(dir.path(), &["--out", "e", "energy-report"]), 4);
}
