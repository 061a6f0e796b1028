use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn morsedec(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_morsedec"))
        .args(args)
        .env("MORSEDEC_OUT_DIR", out)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn calibrate_json(ratio: &str, out: &Path) -> Value {
    let o = morsedec(&["calibrate", "--ratio", ratio, "--json"], out);
    assert!(o.status.success(), "{}", stderr(&o));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn calibrate_reports_requested_ratio() {
    let tmp = tempfile::tempdir().unwrap();
    let a = calibrate_json("1e5", tmp.path());
    let ratio = a["omega01"].as_f64().unwrap() / a["gamma01"].as_f64().unwrap();
    assert!((ratio / 1e5 - 1.0).abs() < 1e-12, "{ratio}");
    assert_eq!(a["largest_rates"].as_array().unwrap().len(), 10);
    let b = calibrate_json("4e3", tmp.path());
    let scale = b["lambda"].as_f64().unwrap() / a["lambda"].as_f64().unwrap();
    assert!((scale - 25.0).abs() < 1e-12, "{scale}");

    let text = morsedec(&["calibrate", "--ratio", "1e5"], tmp.path());
    assert!(String::from_utf8_lossy(&text.stdout).contains("largest rates"));
    for bad in ["0", "-3"] {
        let o = morsedec(&["calibrate", "--ratio", bad], tmp.path());
        assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    }
}

const STATIONARY: &str = r#"{
  "name": "stationary",
  "s": 54.54,
  "coupling": { "lambda": 0.0 },
  "temperature": 0.0,
  "initial": { "eigenstate": 3 },
  "t_max": 2.0,
  "sample_stride": 50,
  "outputs": { "snapshots": [1.0], "wigner": {
    "window": { "x_min": -1.5, "x_max": 2.5, "p_min": -60.0, "p_max": 60.0, "nx": 64, "np": 48 },
    "frame_times": [0.0, 2.0] } }
}"#;

fn csv_columns(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with('#'));
    let header: Vec<String> = lines.next().unwrap().split(',').map(str::to_owned).collect();
    let mut cols = vec![Vec::new(); header.len()];
    for line in lines {
        for (c, v) in line.split(',').enumerate() {
            cols[c].push(v.parse::<f64>().unwrap());
        }
    }
    (header, cols)
}

#[test]
fn stationary_state_gives_constant_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "stationary.json", STATIONARY);
    let o = morsedec(&["run", cfg.to_str().unwrap()], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let dir = tmp.path().join("stationary");
    let (header, cols) = csv_columns(&dir.join("trajectory.csv"));
    assert_eq!(
        header,
        [
            "t",
            "x_exp",
            "p_exp",
            "energy",
            "entropy",
            "purity",
            "trace_err",
            "min_eig",
            "t_over_t0"
        ]
    );
    assert!(cols[0].len() > 20);
    for name in ["x_exp", "p_exp", "energy", "entropy", "purity"] {
        let c = &cols[header.iter().position(|h| h == name).unwrap()];
        let spread =
            c.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v)) - c.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        assert!(spread < 1e-8, "{name} varies by {spread:e}");
    }
    let manifest: Value = serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["initial"]["eigenstate"], 3);
    assert_eq!(manifest["derived"]["n_bound"], 55);
    assert_eq!(manifest["frames"].as_array().unwrap().len(), 2);
    let sidecar: Value = serde_json::from_slice(&std::fs::read(dir.join("wigner_001.json")).unwrap()).unwrap();
    assert!(sidecar["w_max"].as_f64().unwrap() > sidecar["w_min"].as_f64().unwrap());
    let pgm = std::fs::read(dir.join("wigner_000.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n64 48\n65535\n"));
    let n = 55;
    assert_eq!(
        std::fs::metadata(dir.join("snapshots.bin")).unwrap().len(),
        8 * (1 + 2 * n * n) as u64
    );
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "stationary.json", STATIONARY);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = morsedec(
            &["run", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()],
            tmp.path(),
        );
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let mut names: Vec<_> = std::fs::read_dir(a.join("stationary"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() >= 7, "{names:?}");
    for name in names {
        let x = std::fs::read(a.join("stationary").join(&name)).unwrap();
        let y = std::fs::read(b.join("stationary").join(&name)).unwrap();
        assert!(x == y, "{name:?} differs");
    }
}

#[test]
fn level_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "stationary.json", STATIONARY);
    let o = morsedec(&["--level", "pauli", "run", cfg.to_str().unwrap()], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest: Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("stationary/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["level"], "pauli");
    let csv = std::fs::read_to_string(tmp.path().join("stationary/trajectory.csv")).unwrap();
    assert!(csv.lines().next().unwrap().contains("level=pauli"));
}

#[test]
fn exit_codes_follow_the_failure_class() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        // schema
        (STATIONARY.replace("\"t_max\": 2.0", "\"t_max\": \"long\""), 2, "t_max"),
        (STATIONARY.replace("\"temperature\"", "\"temprature\""), 2, "temprature"),
        (
            STATIONARY.replace("\"frame_times\": [0.0, 2.0]", "\"frame_times\": [0.0, 9.0]"),
            2,
            "frame_times[1]",
        ),
        // physics preconditions
        (
            STATIONARY.replace("\"eigenstate\": 3", "\"eigenstate\": 80"),
            3,
            "out of range",
        ),
        (
            STATIONARY.replace("{ \"eigenstate\": 3 }", "{ \"coherent\": { \"x0\": -2.5 } }"),
            3,
            "continuum",
        ),
        // numerical abort
        (
            STATIONARY
                .replace(
                    "\"sample_stride\": 50,",
                    "\"sample_stride\": 50, \"monitor\": { \"positivity\": 0.0 },",
                )
                .replace("{ \"lambda\": 0.0 }", "{ \"ratio\": 4e3 }")
                .replace("{ \"eigenstate\": 3 }", "{ \"coherent\": { \"x0\": 0.5 } }"),
            4,
            "t/t0",
        ),
    ];
    for (k, (body, code, needle)) in cases.iter().enumerate() {
        let cfg = write_config(tmp.path(), &format!("case{k}.json"), body);
        let o = morsedec(&["run", cfg.to_str().unwrap()], tmp.path());
        let err = stderr(&o);
        assert_eq!(o.status.code(), Some(*code), "case {k}: {err}");
        assert!(err.contains(needle), "case {k}: {err}");
    }
    let o = morsedec(&["run", "/nonexistent/config.json"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

const SWEEP: &str = r#"{
  "name": "sweep",
  "scenario": {
    "s": 54.54, "coupling": { "ratio": 4e3 }, "temperature": 0.3,
    "initial": { "coherent": { "x0": 0.5 } }, "level": "pauli",
    "t_max": 20.0, "sample_stride": 20
  },
  "parameter": "x0",
  "values": VALUES
}"#;

fn summary_rows(dir: &Path) -> Vec<String> {
    std::fs::read_to_string(dir.join("summary.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(str::to_owned)
        .collect()
}

#[test]
fn degenerate_sweeps() {
    let tmp = tempfile::tempdir().unwrap();
    let single = write_config(tmp.path(), "single.json", &SWEEP.replace("VALUES", "[0.5]"));
    let one = tmp.path().join("one");
    let o = morsedec(
        &["sweep", single.to_str().unwrap(), "--out-dir", one.to_str().unwrap()],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let dir = tmp.path().join("one/sweep");
    assert_eq!(summary_rows(&dir).len(), 1);
    assert!(!dir.join("law.json").exists());

    let twin = write_config(tmp.path(), "twin.json", &SWEEP.replace("VALUES", "[1.0, 1.0]"));
    let out = tmp.path().join("two");
    let o = morsedec(
        &[
            "sweep",
            twin.to_str().unwrap(),
            "--threads",
            "2",
            "--out-dir",
            out.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = summary_rows(&out.join("sweep"));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0], rows[1]);

    let empty = write_config(tmp.path(), "empty.json", &SWEEP.replace("VALUES", "[]"));
    assert_eq!(
        morsedec(&["sweep", empty.to_str().unwrap()], tmp.path()).status.code(),
        Some(2)
    );
    let thermal = SWEEP
        .replace("VALUES", "[0.5]")
        .replace("{ \"coherent\": { \"x0\": 0.5 } }", "\"thermal\"");
    let thermal = write_config(tmp.path(), "thermal.json", &thermal);
    assert_eq!(
        morsedec(&["sweep", thermal.to_str().unwrap()], tmp.path())
            .status
            .code(),
        Some(2)
    );
}

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

#[test]
fn bundled_configs_parse() {
    for entry in std::fs::read_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let parsed = if text.contains("\"parameter\"") {
            morse_decoherence_cli::SweepConfig::load(&path).map(|_| ())
        } else {
            morse_decoherence_cli::ScenarioConfig::load(&path).map(|_| ())
        };
        assert!(parsed.is_ok(), "{}: {:?}", path.display(), parsed.err());
    }
}

#[test]
fn wigner_figure_config_emits_three_frames() {
    let tmp = tempfile::tempdir().unwrap();
    let o = morsedec(&["run", bundled("fig_wigner.json").to_str().unwrap()], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let dir = tmp.path().join("fig_wigner");
    let manifest: Value = serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap();
    let frames = manifest["frames"].as_array().unwrap();
    let times: Vec<f64> = frames.iter().map(|f| f["t_over_t0"].as_f64().unwrap()).collect();
    assert_eq!(times, [0.0, 27.5, 137.5]);
    let t0 = manifest["derived"]["t0"].as_f64().unwrap();
    for (k, f) in frames.iter().enumerate() {
        let side: Value =
            serde_json::from_slice(&std::fs::read(dir.join(f["sidecar"].as_str().unwrap())).unwrap()).unwrap();
        assert!((side["t"].as_f64().unwrap() / t0 - times[k]).abs() < 1e-9);
        assert!(dir.join(f["pgm"].as_str().unwrap()).exists());
    }
    let neg: Vec<f64> = frames.iter().map(|f| f["negativity"].as_f64().unwrap()).collect();
    assert!(neg[0] < 1e-3 && neg[1] > 0.1 && neg[2] < neg[1], "{neg:?}");
}
