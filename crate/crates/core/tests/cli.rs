use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sfwm::config::PRESET_40CM;
use sfwm::fiber_fit::{synthesize_measurements, FitOptions};
use sfwm::material::{Axis, FiberAxisGeometry};

fn sfwm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sfwm")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_config(dir: &Path, edit: impl FnOnce(&mut Value)) -> String {
    let mut v: Value = serde_json::from_str(PRESET_40CM).unwrap();
    edit(&mut v);
    let path = dir.join("config.json");
    std::fs::write(&path, v.to_string()).unwrap();
    path.to_str().unwrap().to_string()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes())
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect()
}

#[test]
fn usage_errors_exit_with_2() {
    let o = sfwm(&["gvm", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"));
    assert_eq!(sfwm(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(sfwm(&["gvm", "--pump-nm", "abc"]).status.code(), Some(2));
    assert_eq!(sfwm(&["--help"]).status.code(), Some(0));
}

#[test]
fn invalid_config_exits_1_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), |v| v["pump"]["filter_width_nm"] = (-2.0).into());
    let out = dir.path().join("out.json");
    let o = sfwm(&["purity", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("filter_width_nm"), "{}", stderr(&o));
    assert!(!out.exists());

    let cfg = write_config(dir.path(), |v| v["jsa"]["grid_size"] = 128.into());
    let o = sfwm(&["gvm", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("grid_size"), "{}", stderr(&o));

    let o = sfwm(&["gvm", "--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn flag_overrides_are_validated() {
    let o = sfwm(&["purity", "--grid-points", "8"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("grid_points"), "{}", stderr(&o));
    let o = sfwm(&["phasematch", "--from-nm", "790", "--to-nm", "780"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn gvm_is_a_single_json_object() {
    let o = sfwm(&["gvm"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let l0 = v["lambda_p0_nm"].as_f64().unwrap();
    assert!((770.0..800.0).contains(&l0));
    let o = sfwm(&["gvm", "--format", "csv"]);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 2);
    assert!(rows[0].contains(&"lambda_p0_nm".to_string()));
}

#[test]
fn figure_1b_has_31_rows() {
    let o = sfwm(&["figure", "fig1b"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows[0], ["lambda_p_nm", "lambda_s_nm", "lambda_i_nm"]);
    assert_eq!(rows.len(), 32);
    assert_eq!(rows[1][0], "765");
    assert_eq!(rows[31][0], "795");
}

#[test]
fn figure_1a_marks_both_state_classes() {
    let o = sfwm(&["figure", "fig1a"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows[0].last().unwrap(), "state");
    let states: Vec<&str> = rows[1..].iter().map(|r| r[6].as_str()).collect();
    assert!(states.contains(&"correlated") && states.contains(&"anticorrelated"));
    let first: f64 = rows[1][0].parse().unwrap();
    let last: f64 = rows.last().unwrap()[0].parse().unwrap();
    assert!(last - first > 100.0);
}

#[test]
fn purity_vs_length_covers_configured_lengths() {
    let o = sfwm(&["figure", "purity_vs_L", "--grid-points", "64"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows[0][..2], ["length_m", "purity"]);
    let lengths: Vec<&str> = rows[1..].iter().map(|r| r[0].as_str()).collect();
    assert_eq!(lengths, ["0.4", "1", "10", "100"]);
}

#[test]
fn hom_simulation_feeds_hom_fit() {
    let dir = tempfile::tempdir().unwrap();
    let counts = dir.path().join("counts.csv");
    let o = sfwm(&["hom-sim", "--expected", "--p", "0.9", "--chi", "0.2", "--out", counts.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = sfwm(&["hom-fit", "--input", counts.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["p"].as_f64().unwrap() - 0.9).abs() < 1e-6);
    assert!((v["chi"].as_f64().unwrap() - 0.2).abs() < 1e-6);

    let o = sfwm(&["hom-sim", "--seed", "3", "--out", counts.to_str().unwrap()]);
    assert!(o.status.success());
    let o = sfwm(&["hom-fit", "--input", counts.to_str().unwrap(), "--bootstrap", "20"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["bootstrap"]["sigma_p"].as_f64().unwrap() > 0.0);
}

#[test]
fn hom_fit_reports_bad_rows_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let counts = dir.path().join("counts.csv");
    std::fs::write(&counts, "theta_deg,R_ABCD,R_AB,R_CD,R_AD,R_BC,duration_s\n0,1,2,3,4,5,100\n5,x,2,3,4,5,100\n").unwrap();
    let o = sfwm(&["hom-fit", "--input", counts.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains(":3:"), "{}", stderr(&o));
}

#[test]
fn fit_fiber_recovers_synthetic_geometry() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), |v| v["fiber"]["birefringence_override"] = 1.5e-5.into());
    let mut fiber = sfwm::config::RunConfig::preset_40cm().fiber;
    fiber.birefringence_override = Some(1.5e-5);
    let truth = FiberAxisGeometry::new(1.76, 0.52).unwrap();
    let pumps: Vec<f64> = (0..11).map(|j| 765.0 + 3.0 * j as f64).collect();
    let meas = synthesize_measurements(&fiber, Axis::Fast, truth, &pumps, 0.5, &FitOptions::default()).unwrap();
    let mut text = String::from("lambda_p_nm,lambda_s_nm,lambda_i_nm,sigma_nm\n");
    for m in &meas {
        text += &format!(
            "{:?},{:?},{:?},{:?}\n",
            m.pump_wavelength_nm,
            m.signal_wavelength_nm.unwrap(),
            m.idler_wavelength_nm.unwrap(),
            m.uncertainty_nm
        );
    }
    let input = dir.path().join("pm.csv");
    std::fs::write(&input, text).unwrap();
    let o = sfwm(&["fit-fiber", "--config", &cfg, "--input", input.to_str().unwrap(), "--axis", "fast"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["axis"], "fast");
    assert!((v["geometry"]["core_diameter_um"].as_f64().unwrap() - 1.76).abs() < 1e-4);
    assert!((v["geometry"]["air_filling_fraction"].as_f64().unwrap() - 0.52).abs() < 1e-3);
    assert_eq!(sfwm(&["fit-fiber", "--input", "x.csv", "--axis", "diagonal"]).status.code(), Some(2));
}

#[test]
fn json_table_and_csv_agree() {
    let csv_out = stdout(&sfwm(&["phasematch", "--points", "3"]));
    let json_out = stdout(&sfwm(&["phasematch", "--points", "3", "--format", "json"]));
    let v: Value = serde_json::from_str(&json_out).unwrap();
    let rows = csv_rows(&csv_out);
    for (j, r) in rows[1..].iter().enumerate() {
        let s: f64 = r[1].parse().unwrap();
        assert_eq!(v["data"]["lambda_s_nm"][j].as_f64().unwrap(), s);
    }
}
