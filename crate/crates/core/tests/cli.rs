use dirichlet_lab::circle_fn::GridFunction;
use dirichlet_lab::geometry::CircleSet;
use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dirichlet-lab"))
        .args(args)
        .current_dir(dir)
        .env_remove("DIRICHLET_LAB_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn sets_writes_a_valid_set() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["sets", "--beta", "1", "--nmax", "1000", "--out", "e1.json"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("e1.json")).unwrap();
    let e: CircleSet = serde_json::from_str(&text).unwrap();
    let direct = CircleSet::build_e_beta(1.0, 1000).unwrap();
    assert_eq!(e, direct);
}

#[test]
fn negative_gamma_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["certify", "--battery", "thm3", "--gamma", "-1", "--M", "256"], dir.path());
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(err.contains("γ > 0"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(o.stdout.is_empty());
}

#[test]
fn argument_and_input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{\"kind\": \"points\"").unwrap();
    for args in [
        vec!["sets", "--beta", "1"],
        vec!["sets", "--points", "0", "--full"],
        vec!["sets", "--frobnicate"],
        vec!["carleson", "--set", "bad.json"],
        vec!["capacity", "--set", "bad.json"],
        vec!["certify", "--battery", "nope"],
        vec!["capacity", "--set", "bad.json", "--alpha", "1.5"],
    ] {
        let o = run(&args, dir.path());
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
        assert_eq!(stderr(&o).trim_end().lines().count(), 1, "{args:?}: {}", stderr(&o));
    }
    assert_eq!(code(&run(&["--help"], dir.path())), 0);
    assert_eq!(code(&run(&["--version"], dir.path())), 0);
}

#[test]
fn missing_input_file_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["carleson", "--set", "absent.json"], dir.path());
    assert_eq!(code(&o), 1, "{}", stderr(&o));
}

#[test]
fn norm_methods_agree_on_samples() {
    let dir = tempfile::tempdir().unwrap();
    let g = GridFunction::from_real_fn(1024, |t| (3.0 * t).cos() + 0.5 * (t).sin() - 0.2 * (7.0 * t).cos()).unwrap();
    std::fs::write(dir.path().join("samples.json"), serde_json::to_string(&g).unwrap()).unwrap();
    let o = run(&["norm", "--fn", "samples.json", "--method", "both"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&o);
    assert!(v["relative_difference"].as_f64().unwrap() <= 1e-3, "{v}");
    let spectral = v["spectral"]["dirichlet_energy"].as_f64().unwrap();
    // D = Σ |n| |c_n|² = 2·(3/4 + 1/16 + 7/100)
    assert!((spectral - 1.765).abs() < 1e-10, "{spectral}");
    assert_eq!(v["quadrature"]["M"], 1024);
}

#[test]
fn set_output_round_trips_through_other_commands() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(code(&run(&["sets", "--points", "0,3.14159", "--out", "two.json"], p)), 0);
    assert_eq!(code(&run(&["sets", "--ratios", "0.3333333333333333", "--depth", "3", "--out", "c.json"], p)), 0);

    let o = run(&["carleson", "--set", "two.json"], p);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(json(&o)["gaps"], 2);

    let o = run(&["capacity", "--set", "c.json", "--resolution", "32", "--weights-csv", "w.csv"], p);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&o);
    assert!(v["energy"].as_f64().unwrap() > 0.0);
    assert_eq!(v["resolution"], 64);
    let csv = std::fs::read_to_string(p.join("w.csv")).unwrap();
    assert!(csv.starts_with("center,width,weight"), "{csv}");

    let o = run(&["outer", "--set", "two.json", "--gamma", "0.4", "--eps", "0.01", "--M", "256"], p);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!((json(&o)["value_at_zero"].as_f64().unwrap() - 1.0).abs() < 1e-8);

    let o = run(&["certify", "--battery", "thm3", "--set", "two.json", "--M", "256", "--eps", "0.1,0.01"], p);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["entries"][0]["type"], "certificate");
    assert_eq!(v["entries"][0]["report"]["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn outputs_are_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(code(&run(&["sets", "--beta", "1", "--nmax", "200", "--out", "e.json"], p)), 0);
    let certify = ["certify", "--battery", "thm2,thm3", "--set", "e.json", "--M", "1024", "--eps", "0.1,0.001"];
    let capacity = ["capacity", "--set", "e.json", "--resolution", "64"];
    for args in [&certify[..], &capacity[..]] {
        let outputs: Vec<Vec<u8>> = ["1", "2", "3"]
            .iter()
            .map(|t| {
                let mut a = args.to_vec();
                a.extend(["--threads", t]);
                let o = run(&a, p);
                assert_eq!(code(&o), 0, "{}", stderr(&o));
                o.stdout
            })
            .collect();
        assert!(outputs.windows(2).all(|w| w[0] == w[1]), "{args:?}");
    }
}

#[test]
fn empty_battery_list_gives_empty_bundle() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), r#"{"battery": []}"#).unwrap();
    let o = run(&["certify", "--config", "cfg.json"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(json(&o), serde_json::json!({ "entries": [] }));
}

#[test]
fn unknown_config_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), r#"{"battery": "smoke", "gama": 0.3}"#).unwrap();
    let o = run(&["certify", "--config", "cfg.json"], dir.path());
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn certificate_csv_and_csv_dir() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(code(&run(&["sets", "--points", "0", "--out", "one.json"], p)), 0);
    let o = run(
        &["certify", "--battery", "thm3", "--set", "one.json", "--M", "256", "--eps", "0.1,0.01", "--format", "csv"],
        p,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("eps,M_eps,l2_sq,dirichlet_energy,total_norm,A_eps,B_eps"));
    assert_eq!(lines.count(), 2);

    let o = run(&["certify", "--battery", "smoke", "--format", "csv"], p);
    assert_eq!(code(&o), 2, "{}", stderr(&o));

    let o = run(&["certify", "--battery", "smoke", "--eps", "0.1,0.01", "--csv-dir", "tables", "--out", "bundle.json"], p);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut names: Vec<String> = std::fs::read_dir(p.join("tables"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names, ["00-smoke-thm2-f-1.csv", "01-smoke-thm3-e-1.csv"]);
    let bundle: Value = serde_json::from_str(&std::fs::read_to_string(p.join("bundle.json")).unwrap()).unwrap();
    assert_eq!(bundle["entries"].as_array().unwrap().len(), 2);
    assert!(bundle.get("sidecar").is_none());
}

#[test]
fn timings_go_to_the_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["certify", "--battery", "smoke", "--eps", "0.1,0.01", "--timings"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["sidecar"]["wall_seconds"][0][0], "smoke");
}

#[test]
fn relative_out_paths_use_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");
    let o = Command::new(env!("CARGO_BIN_EXE_dirichlet-lab"))
        .args(["sets", "--full", "--out", "circle.json"])
        .current_dir(dir.path())
        .env("DIRICHLET_LAB_OUT_DIR", &out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let e: CircleSet = serde_json::from_str(&std::fs::read_to_string(out.join("circle.json")).unwrap()).unwrap();
    assert!(e.is_full_circle());
}
