use std::path::Path;
use std::process::Command;

use tuneout_cli::config::load_config;
use tuneout_cli::{commands::TuneoutConfig, CliError};
use tuneout_core::atomic::HyperfineState;
use tuneout_core::fit::{projected_potential, Axis, PolarizationModel, VectorWeight};
use tuneout_core::stark::{ModelOptions, StarkModel};
use tuneout_core::{SpeciesData, Spin};

fn tuneout(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_tuneout"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = tuneout(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn code(args: &[&str]) -> i32 {
    tuneout(args).status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(|r| r.unwrap()).collect()
}

fn jsonl(path: &Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn tuneout_value(dir: &Path) -> f64 {
    let rec = &jsonl(&dir.join("tuneout.jsonl"))[0];
    rec["record"]["wavelength_nm"].as_f64().unwrap()
}

#[test]
fn ledger_run_reproduces_component_shifts() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["tuneout", "-o", p(dir.path())]);
    let records = jsonl(&dir.path().join("tuneout.jsonl"));
    let ledger = records.iter().find(|r| r["kind"] == "ledger").unwrap();
    let get = |k: &str| ledger["record"][k]["value"].as_f64().unwrap();
    assert!((get("d_lines_nm") - 790.01374).abs() < 0.5e-3);
    assert!((get("total_nm") - 790.01850).abs() < 0.5e-3);
    assert!((get("tensor_shift_pm") - 0.091).abs() < 0.02);
    assert!((get("higher_states_shift_pm") - 1.203).abs() < 0.098);
    assert!((get("core_shift_pm") - 3.455).abs() < 0.088);
    for r in &records {
        assert_eq!(r["config_digest"].as_str().unwrap().len(), 64);
        assert!(r["provenance"].as_str().unwrap().contains("bundled"));
    }
    let rows = csv_rows(&dir.path().join("tuneout.csv"));
    assert!(rows.iter().all(|r| r[0] == *records[0]["config_digest"].as_str().unwrap()));
}

#[test]
fn toggles_off_gives_d_line_root_and_vector_light_moves_it() {
    let dir = tempfile::tempdir().unwrap();
    let off = dir.path().join("off");
    ok(&[
        "tuneout",
        "-o",
        p(&off),
        "--set",
        "toggles={tensor=false, higher_states=false, core=false, vector=false}",
        "--set",
        "ledger=false",
    ]);
    assert!((tuneout_value(&off) - 790.01374).abs() < 0.5e-3);

    let zero = dir.path().join("zero");
    ok(&["tuneout", "-o", p(&zero), "--set", "ledger=false"]);
    let vector = dir.path().join("vector");
    ok(&["tuneout", "-o", p(&vector), "--set", "circularity=1", "--set", "m_f=1", "--set", "ledger=false"]);
    assert!((tuneout_value(&vector) - tuneout_value(&zero)).abs() > 2.0);
}

#[test]
fn config_file_and_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "m_f = 1\ncircularity = 0.5\n").unwrap();
    let parsed: TuneoutConfig = load_config(Some(&cfg), &["ledger=false".into()]).unwrap();
    assert_eq!((parsed.m_f, parsed.circularity, parsed.ledger), (1, 0.5, false));

    std::fs::write(&cfg, "wavelength = 790\n").unwrap();
    assert_eq!(code(&["tuneout", "-c", p(&cfg), "-o", p(dir.path())]), 1);
    assert_eq!(code(&["tuneout", "-o", p(dir.path()), "--set", "circularity=2"]), 1);
    assert_eq!(code(&["tuneout", "-o", p(dir.path()), "--jobs", "0"]), 1);
    let err: Result<TuneoutConfig, CliError> = load_config(Some(&dir.path().join("missing.toml")), &[]);
    assert_eq!(err.unwrap_err().exit_code(), 1);
}

#[test]
fn polarizability_grid_shows_three_zero_crossings() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["polarizability", "-o", p(dir.path()), "--set", "points=101"]);
    let zeros: Vec<(i64, f64)> = jsonl(&dir.path().join("polarizability.jsonl"))
        .into_iter()
        .filter(|r| r["kind"] == "zero_crossing")
        .map(|r| (r["record"]["m_f"].as_i64().unwrap(), r["record"]["wavelength_nm"].as_f64().unwrap()))
        .collect();
    assert_eq!(zeros.len(), 3);
    let l0 = zeros.iter().find(|z| z.0 == 0).unwrap().1;
    for z in zeros.iter().filter(|z| z.0 != 0) {
        assert!((z.1 - l0).abs() > 2.0, "{zeros:?}");
    }
    assert_eq!(csv_rows(&dir.path().join("polarizability.csv")).len(), 303);
}

#[test]
fn zero_intensity_gives_zero_depth() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["polarizability", "-o", p(dir.path()), "--set", "intensity_w_m2=0", "--set", "points=11"]);
    for row in csv_rows(&dir.path().join("polarizability.csv")) {
        assert_eq!(row[7].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn grid_on_a_resonance_is_a_computation_error() {
    let data = SpeciesData::rubidium87();
    let state = HyperfineState::rb87_ground(1, 0).unwrap();
    let model = StarkModel::new(&data, &state, ModelOptions::for_data(&data)).unwrap();
    let resonance = model.resonance_wavelengths_nm()[0];
    let dir = tempfile::tempdir().unwrap();
    let out = tuneout(&[
        "polarizability",
        "-o",
        p(dir.path()),
        "--set",
        &format!("start_nm={resonance}"),
        "--set",
        &format!("stop_nm={}", resonance + 1.0),
        "--set",
        "points=3",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains(&format!("{resonance}")), "{msg}");
}

#[test]
fn kd_noise_requires_seed_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(code(&["kd-simulate", "-o", p(&a), "--set", "noise_relative=0.02"]), 1);
    for d in [&a, &b] {
        ok(&["kd-simulate", "-o", p(d), "--set", "noise_relative=0.02", "--set", "shots=3", "--seed", "4"]);
    }
    for f in ["kd.jsonl", "kd_populations.csv", "kd_inversion.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let clean = dir.path().join("clean");
    ok(&["kd-simulate", "-o", p(&clean)]);
    for row in csv_rows(&clean.join("kd_inversion.csv")) {
        let (v0, est): (f64, f64) = (row[1].parse().unwrap(), row[3].parse().unwrap());
        assert!((est - v0).abs() < 1e-6 * v0);
    }
}

#[test]
fn analyze_on_empty_directory_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = tuneout(&["analyze-images", "-i", p(dir.path()), "-o", p(&dir.path().join("out"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty input"));
}

#[test]
fn synth_analyze_fit_round_trip_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let small = ["--set", "scan.wavelengths=9", "--set", "scan.shots_per_wavelength=2"];
    let mut outputs = Vec::new();
    for run in ["one", "two"] {
        let root = dir.path().join(run);
        let synth = root.join("synth");
        let analysis = root.join("analysis");
        let fit = root.join("fit");
        let mut args = vec!["synth-data", "-o", p(&synth), "--seed", "12"];
        args.extend(small);
        ok(&args);
        let frames = synth.join("frames");
        let mut args = vec!["analyze-images", "-i", p(&frames), "-o", p(&analysis), "--jobs", "2"];
        args.extend(small);
        ok(&args);
        let points = analysis.join("points.csv");
        ok(&["fit-tuneout", "-p", p(&points), "-o", p(&fit)]);
        outputs.push((synth, analysis, fit));
    }
    let (s1, a1, f1) = &outputs[0];
    let (s2, a2, f2) = &outputs[1];
    assert_eq!(std::fs::read(s1.join("synth.jsonl")).unwrap(), std::fs::read(s2.join("synth.jsonl")).unwrap());
    assert_eq!(
        std::fs::read(s1.join("frames/w004s01_signal.pgm")).unwrap(),
        std::fs::read(s2.join("frames/w004s01_signal.pgm")).unwrap()
    );
    assert_eq!(std::fs::read(a1.join("points.csv")).unwrap(), std::fs::read(a2.join("points.csv")).unwrap());
    let fit1 = std::fs::read_to_string(f1.join("fit_tuneout.jsonl")).unwrap();
    let fit2 = std::fs::read_to_string(f2.join("fit_tuneout.jsonl")).unwrap();
    let strip = |s: &str| -> serde_json::Value {
        let mut v: serde_json::Value = serde_json::from_str(s.lines().next().unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("provenance");
        v
    };
    assert_eq!(strip(&fit1), strip(&fit2));

    let truth = jsonl(&s1.join("synth.jsonl"))
        .into_iter()
        .find(|r| r["kind"] == "scan")
        .unwrap()["record"]["tuneout_nm"]
        .as_f64()
        .unwrap();
    let fit = &strip(&fit1)["record"]["lambda_m_nm"];
    let (value, sigma) = (fit["value"].as_f64().unwrap(), fit["sigma"].as_f64().unwrap());
    assert!((value - truth).abs() < 3.0 * sigma, "{value} +- {sigma} vs {truth}");
}

#[test]
fn polarization_and_field_fits_from_tables() {
    let dir = tempfile::tempdir().unwrap();
    let data = SpeciesData::rubidium87();
    let state = HyperfineState::rb87_ground(1, 0).unwrap();
    let model = PolarizationModel::from_species(&state, &data, 790.0185, VectorWeight::HalfF).unwrap();
    let (a0, sigma_a, slope) = (-7.8e-3, 4.78e-3, 0.01);
    let pol = dir.path().join("pol.csv");
    let mut w = csv::Writer::from_path(&pol).unwrap();
    w.write_record(["control", "value_er", "sigma_er", "m_f"]).unwrap();
    for m in [1, -1] {
        let centre = model.branch_minimum_nm(Spin::integer(m), a0);
        for k in 0..21 {
            let l = centre + (k as f64 - 10.0) * 4e-3;
            let v = model.potential(l, Spin::integer(m), slope, a0, sigma_a);
            w.write_record([l.to_string(), v.to_string(), (0.005 + 0.03 * v).to_string(), m.to_string()])
                .unwrap();
        }
    }
    w.flush().unwrap();
    let out = dir.path().join("pol_out");
    ok(&["fit-polarization", "-p", p(&pol), "-o", p(&out), "--set", "lambda_m_nm=790.0185"]);
    let fit = &jsonl(&out.join("fit_polarization.jsonl"))[0]["record"];
    assert!((fit["a0"]["value"].as_f64().unwrap() - a0).abs() < 1e-6);
    assert!((fit["sigma_a"]["value"].as_f64().unwrap() - sigma_a).abs() < 1e-6);

    let b0 = [0.28, 0.11, -0.39];
    let field = dir.path().join("field.csv");
    let mut w = csv::Writer::from_path(&field).unwrap();
    w.write_record(["axis", "control", "value_er", "sigma_er"]).unwrap();
    for (axis, name) in [(Axis::X, "x"), (Axis::Y, "y"), (Axis::Z, "z")] {
        for k in 0..41 {
            let b = -1.0 + 0.05 * k as f64;
            w.write_record([name.to_string(), b.to_string(), projected_potential(0.4, b0, axis, b).to_string(), "0.01".into()])
                .unwrap();
        }
    }
    w.flush().unwrap();
    let out = dir.path().join("field_out");
    ok(&["fit-bfield", "-p", p(&field), "-o", p(&out)]);
    let fit = &jsonl(&out.join("fit_bfield.jsonl"))[0]["record"];
    for (i, want) in b0.iter().enumerate() {
        assert!((fit["b0"][i]["value"].as_f64().unwrap() - want).abs() < 1e-5, "{fit}");
    }
    assert_eq!(code(&["fit-bfield", "-p", p(&pol), "-o", p(&out)]), 1);
}
