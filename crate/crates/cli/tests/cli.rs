use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const WELL_KAPPAS: [f64; 3] = [1.899448036751944, 1.571342556813314, 0.876610362727433];
const WELL_NORMING: [f64; 3] = [0.038798932148319, 0.145167980693995, 0.257227284424067];

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kdv-ist")).args(args).output().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Config file in a fresh directory; outputs go to `<dir>/out`.
fn setup(body: &str) -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    let out = dir.path().join("out");
    std::fs::write(&path, format!("outputs = {:?}\n{body}", out.display().to_string())).unwrap();
    (dir, path)
}

fn report(dir: &TempDir, name: &str) -> Value {
    let text = std::fs::read_to_string(dir.path().join("out").join(name)).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

fn cmd<'a>(name: &'a str, cfg: &'a Path) -> Vec<&'a str> {
    vec![name, "-c", cfg.to_str().unwrap()]
}

const BLOCK: &str = r#"profile = { kind = "block", value = -4.0, left = -4.0, right = 0.0 }
n_blocks = 4
"#;

#[test]
fn block_well_spectrum_matches_closed_form() {
    let (dir, cfg) = setup(BLOCK);
    let out = run(&cmd("spectrum", &cfg));
    assert!(out.status.success(), "{}", stderr(&out));
    let doc = report(&dir, "spectrum.json");
    assert_eq!(doc["schema"], "kdv-ist/1");
    let kappas = floats(&doc["kappas"]);
    assert_eq!(kappas.len(), 3);
    for (k, want) in kappas.iter().zip(WELL_KAPPAS) {
        assert!((k - want).abs() < 1e-9, "{k} vs {want}");
    }
    for m in ["invR", "invB", "qzero"] {
        assert!(doc["methods"][m]["max_delta_from_primary"].as_f64().unwrap() < 1e-9, "{m}");
    }
    let c2 = floats(&doc["norming"]["residue"]["c2"]);
    for (c, want) in c2.iter().zip(WELL_NORMING) {
        assert!((c - want).abs() < 1e-9, "{c} vs {want}");
    }
}

#[test]
fn missing_config_exits_two_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere.toml");
    let out = run(&cmd("scatter", &missing));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("nowhere.toml"), "{}", stderr(&out));
}

#[test]
fn missing_profile_csv_exits_two_and_names_it() {
    let (_dir, cfg) = setup(r#"profile = { kind = "csv", path = "absent_profile.csv" }"#);
    let out = run(&cmd("scatter", &cfg));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("absent_profile.csv"), "{}", stderr(&out));
}

#[test]
fn csv_profile_is_read_relative_to_the_config() {
    let (dir, cfg) = setup(r#"profile = { kind = "csv", path = "well.csv" }"#);
    std::fs::write(dir.path().join("well.csv"), "x,v\n-4,-4\n-2,-4\n0,-4\n").unwrap();
    let out = run(&cmd("spectrum", &cfg));
    assert!(out.status.success(), "{}", stderr(&out));
    let kappas = floats(&report(&dir, "spectrum.json")["kappas"]);
    assert!((kappas[0] - WELL_KAPPAS[0]).abs() < 1e-6, "{kappas:?}");
}

#[test]
fn zero_potential_has_empty_spectrum() {
    let (dir, cfg) = setup(r#"profile = { kind = "block", value = 0.0, left = -1.0, right = 1.0 }
n_blocks = 8
"#);
    let out = run(&cmd("spectrum", &cfg));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc = report(&dir, "spectrum.json");
    assert!(doc["kappas"].as_array().unwrap().is_empty());
    assert!(doc["norming"]["residue"]["c2"].as_array().unwrap().is_empty());
}

#[test]
fn scatter_is_unitary_on_a_block_well() {
    let (dir, cfg) = setup(BLOCK);
    let out = run(&cmd("scatter", &cfg));
    assert!(out.status.success(), "{}", stderr(&out));
    let doc = report(&dir, "scatter.json");
    let resid = floats(&doc["unitarity_residual"]);
    assert_eq!(resid.len(), 200);
    assert!(resid.iter().all(|r| *r < 1e-12), "{:e}", resid.iter().cloned().fold(0.0, f64::max));
    assert_eq!(doc["grid"]["n_blocks"], 4);
}

#[test]
fn sech2_grid_metadata_reports_block_width() {
    let (dir, cfg) = setup(r#"profile = { kind = "sech2", amplitude = 2.0 }
domain = [-5.0, 5.0]
kgrid = { min = 0.5, max = 2.0, count = 4 }
"#);
    let out = run(&cmd("scatter", &cfg));
    assert!(out.status.success(), "{}", stderr(&out));
    let grid = &report(&dir, "scatter.json")["grid"];
    assert_eq!(grid["n_blocks"], 1000);
    assert!((grid["h"].as_f64().unwrap() - 0.01).abs() < 1e-12);
}

#[test]
fn sech2_kappa_is_stable_between_domains() {
    let mut leading = Vec::new();
    for (half, h) in [(5.0, "0.01"), (10.0, "0.01")] {
        let (dir, cfg) = setup(&format!(
            "profile = {{ kind = \"sech2\", amplitude = 2.0 }}\nh = {h}\nseeds = {{ grid = 512 }}\n"
        ));
        let out = run(&[
            "spectrum",
            "-c",
            cfg.to_str().unwrap(),
            "--domain",
            &format!("{},{}", -half, half),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        let doc = report(&dir, "spectrum.json");
        assert_eq!(doc["grid"]["n_blocks"], (2.0 * half / 0.01) as u64);
        let by_method: Vec<f64> = ["invR", "invB", "qzero"]
            .iter()
            .map(|m| doc["methods"][m]["kappas"][0].as_f64().unwrap())
            .collect();
        leading.push(by_method);
    }
    for j in 0..3 {
        let (a, b) = (leading[0][j], leading[1][j]);
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        assert!((a - 1.0).abs() < 1e-5, "{a}");
    }
}

#[test]
fn single_soliton_matches_closed_form() {
    let (dir, cfg) = setup(r#"profile = { kind = "sech2", amplitude = 2.0 }
domain = [-6.0, 6.0]
n_blocks = 600
times = [0.0, 0.5, 2.0]
xgrid = { min = -10.0, max = 20.0, count = 601 }
"#);
    let out = run(&cmd("solve", &cfg));
    assert!(out.status.success(), "{}", stderr(&out));
    let doc = report(&dir, "solve.json");
    let kappa = floats(&doc["kappas"]);
    let c2 = floats(&doc["norming"]);
    assert_eq!(kappa.len(), 1);
    let (k, c2) = (kappa[0], c2[0]);
    for (j, t) in [0.0, 0.5, 2.0].into_iter().enumerate() {
        let text = std::fs::read_to_string(dir.path().join("out").join(format!("solution_{j:03}.csv"))).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,u_asymptotic,u_determinant"));
        let x0 = 4.0 * k * k * t + (c2 / (2.0 * k)).ln() / (2.0 * k);
        for line in lines {
            let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
            let exact = -2.0 * k * k / (k * (v[0] - x0)).cosh().powi(2);
            assert!((v[1] - exact).abs() < 1e-10, "t {t} x {}: {} vs {exact}", v[0], v[1]);
            assert!((v[2] - exact).abs() < 1e-5, "t {t} x {}: {} vs {exact}", v[0], v[2]);
        }
        let gap = doc["times"][j]["linf_gaps"]["asymptotic_determinant"].as_f64().unwrap();
        assert!(gap < 1e-5);
    }
}

#[test]
fn haar_of_a_constant_profile() {
    let (dir, cfg) = setup(r#"profile = { kind = "block", value = -1.5, left = 0.0, right = 2.0 }
haar = { level = 6 }
"#);
    let out = run(&cmd("haar", &cfg));
    assert!(out.status.success(), "{}", stderr(&out));
    let doc = report(&dir, "haar.json");
    assert_eq!(doc["nonzero_before"], 1);
    assert_eq!(floats(&doc["coefficients"]).len(), 64);
    assert!(doc["round_trip_error"].as_f64().unwrap() < 1e-12);
}

#[test]
fn haar_respectrum_reports_delta() {
    let (dir, cfg) = setup(r#"profile = { kind = "sech2", amplitude = 2.0 }
domain = [-5.0, 5.0]
haar = { level = 10, keep_fraction = 0.1, respectrum = true }
"#);
    let out = run(&cmd("haar", &cfg));
    assert!(out.status.success(), "{}", stderr(&out));
    let doc = report(&dir, "haar.json");
    let delta = doc["spectrum"]["max_delta"].as_f64().unwrap();
    assert!(delta < 1e-2, "{delta}");
    assert!(doc["kept_fraction"].as_f64().unwrap() <= 0.12);
}

#[test]
fn compare_agrees_with_the_oracles() {
    let (dir, cfg) = setup(BLOCK);
    let out = run(&cmd("compare", &cfg));
    assert!(out.status.success(), "{}", stderr(&out));
    let doc = report(&dir, "compare.json");
    for s in doc["bound_states"].as_array().unwrap() {
        let res = s["c2_residue"].as_f64().unwrap();
        for key in ["c2_ab_ratio", "c2_ab_integration", "c2_l2_inverse_square"] {
            let v = s[key].as_f64().unwrap();
            assert!((v - res).abs() < 1e-5 * res, "{key}: {v} vs {res}");
        }
        assert!(s["contour_residue"]["relative_delta"].as_f64().unwrap() < 1e-8);
    }
    for row in doc["scattering"].as_array().unwrap() {
        assert!(row["a_delta"].as_f64().unwrap() < 1e-8 && row["b_delta"].as_f64().unwrap() < 1e-8);
    }
}

#[test]
fn bad_method_name_exits_two() {
    let (_dir, cfg) = setup(BLOCK);
    let out = run(&["spectrum", "-c", cfg.to_str().unwrap(), "--bound-method", "newton"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("newton"));
}

#[test]
fn sech2_without_domain_is_rejected() {
    let (_dir, cfg) = setup(r#"profile = { kind = "sech2", amplitude = 2.0 }"#);
    let out = run(&cmd("spectrum", &cfg));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("domain"));
}

#[test]
fn positive_profile_is_an_input_error() {
    let (_dir, cfg) = setup(r#"profile = { kind = "block", value = 1.0, left = 0.0, right = 1.0 }"#);
    let out = run(&cmd("scatter", &cfg));
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn json_config_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let body = serde_json::json!({
        "profile": {"kind": "block", "value": -4.0, "left": -4.0, "right": 0.0},
        "n_blocks": 2,
        "outputs": dir.path().join("out"),
    });
    std::fs::write(&cfg, body.to_string()).unwrap();
    let out = run(&cmd("spectrum", &cfg));
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(report(&dir, "spectrum.json")["config"]["n_blocks"], 2);
}

#[test]
fn outputs_are_deterministic() {
    let (dir, cfg) = setup(BLOCK);
    let read = || std::fs::read(dir.path().join("out/spectrum.json")).unwrap();
    assert!(run(&cmd("spectrum", &cfg)).status.success());
    let first = read();
    assert!(run(&cmd("spectrum", &cfg)).status.success());
    assert_eq!(first, read());
}
