use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use polaremit::floquet::solve_steady;
use polaremit::{peak_metrics, validate, Column, ModelParams, SpectrumEngine};
use polaremit_cli::run::{peak_window, HARMONICS_HEADER, SPECTRUM_HEADER, SWEEP_HEADER};
use serde_json::Value;
use tempfile::TempDir;

fn polaremit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polaremit")).args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    let d = dir.to_str().unwrap();
    all.extend(["--out", d]);
    polaremit(&all)
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn model_table(rabi: f64, delta_a: f64, r: f64) -> String {
    format!(
        "[model]\ngamma = 1.0\nomega0 = 200.0\nomega_f = 200.0\nomega_s = 200.0\nrabi = {rabi:?}\ndelta_a = {delta_a:?}\nr = {r:?}\ntheta = 0.4\n"
    )
}

fn rows(path: &Path) -> (String, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    (header, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn unknown_key_exits_2() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &model_table(20.0, 4.0, 0.5).replace("gamma", "gama"));
    let out = run_in(dir.path(), &["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model.gama"));
}

#[test]
fn syntax_error_reports_position() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "[model]\ngamma = 1.0\nrabi = [\n");
    let out = run_in(dir.path(), &["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
}

#[test]
fn empty_and_missing_inputs_exit_2() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "empty.toml", "");
    assert_eq!(run_in(dir.path(), &["spectrum", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run_in(dir.path(), &["spectrum", "--config", "/nonexistent/x.toml"]).status.code(), Some(2));
    assert_eq!(run_in(dir.path(), &["spectrum", "--preset", "fig9"]).status.code(), Some(2));
    assert_eq!(run_in(dir.path(), &["spectrum"]).status.code(), Some(2));
    assert_eq!(run_in(dir.path(), &["sweep", "--preset", "fig1"]).status.code(), Some(2));
    assert_eq!(run_in(dir.path(), &["spectrum", "--preset", "fig1", "--threads", "0"]).status.code(), Some(2));
}

#[test]
fn fig1_spectrum_files() {
    let dir = TempDir::new().unwrap();
    let out = run_in(dir.path(), &["spectrum", "--preset", "fig1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, table) = rows(&dir.path().join("fig1_spectrum.csv"));
    assert_eq!(header, SPECTRUM_HEADER);

    // F_inc = F_X + F_Y + F_as row by row
    for r in &table {
        let v: Vec<f64> = r.iter().map(|s| num(s)).collect();
        assert!((v[4] - (v[1] + v[2] + v[3])).abs() <= 1e-12);
    }
    // maximum of F_inc near the Rabi frequency, away from the zero-frequency image
    let near: Vec<&Vec<String>> = table.iter().filter(|r| (50.0..=150.0).contains(&num(&r[0]))).collect();
    let top = near.iter().max_by(|a, b| num(&a[4]).total_cmp(&num(&b[4]))).unwrap();
    assert!((num(&top[0]) - 100.0).abs() <= 2.0);

    let meta = json(&dir.path().join("fig1_meta.json"));
    assert_eq!(meta["gamma_input"], 1.0);
    assert_eq!(meta["mode"], "spectrum");
    assert_eq!(meta["parameters"]["rabi"], 100.0);
    assert_eq!(meta["truncation"]["order"], 4);
    assert_eq!(meta["grid"]["points"].as_u64().unwrap() as usize, table.len());
    assert!((meta["peak"]["center"].as_f64().unwrap() - 100.0).abs() < 2.0);
    assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
    assert!(meta["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn csv_values_round_trip() {
    let dir = TempDir::new().unwrap();
    let cfg = format!("{}\n[grid]\nmin = 0.0\nmax = 40.0\npoints = 41\nrefine = false\n", model_table(20.0, 4.0, 0.5));
    let path = write_config(dir.path(), "desk.toml", &cfg);
    assert!(run_in(dir.path(), &["spectrum", "--config", path.to_str().unwrap(), "--truncation", "5"]).status.success());
    let (_, table) = rows(&dir.path().join("polaremit_spectrum.csv"));

    let m = validate(ModelParams { theta: 0.4, ..ModelParams::resonant(1.0, 200.0, 20.0, 4.0, 0.5, 0.0) }).unwrap();
    let e = SpectrumEngine::new(&m, &solve_steady(&m, 5).unwrap());
    for r in &table {
        let w = num(&r[0]);
        let p = e.point(w).unwrap();
        for (s, v) in r[1..].iter().zip([p.fx, p.fy, p.fas, p.finc]) {
            // one unit in the ninth significant digit
            assert!((num(s) - v).abs() <= 1e-8 * v.abs(), "{s} vs {v:e}");
        }
    }
}

#[test]
fn ground_state_spectrum_is_zero() {
    let dir = TempDir::new().unwrap();
    let cfg = format!("{}\n[grid]\nmin = 150.0\nmax = 250.0\npoints = 101\n", model_table(0.0, 4.0, 0.0));
    let path = write_config(dir.path(), "ground.toml", &cfg);
    let out = run_in(dir.path(), &["spectrum", "--config", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, table) = rows(&dir.path().join("polaremit_spectrum.csv"));
    assert!(table.iter().all(|r| r[1..].iter().all(|s| num(s) == 0.0)));
}

#[test]
fn gamma_units_in_output() {
    let dir = TempDir::new().unwrap();
    let text = |g: f64, stem: &str| {
        format!(
            "[model]\ngamma = {g:?}\nomega0 = {:?}\nomega_f = {:?}\nomega_s = {:?}\nrabi = {:?}\ndelta_a = {:?}\nr = 0.5\ntheta = 0.4\n\n[grid]\nmin = 0.0\nmax = {:?}\npoints = 81\nrefine = false\n\n[output]\nstem = \"{stem}\"\n",
            200.0 * g, 200.0 * g, 200.0 * g, 20.0 * g, 4.0 * g, 40.0 * g
        )
    };
    for (g, stem) in [(1.0, "unit"), (2.5, "scaled")] {
        let p = write_config(dir.path(), &format!("{stem}.toml"), &text(g, stem));
        assert!(run_in(dir.path(), &["spectrum", "--config", p.to_str().unwrap()]).status.success());
    }
    let (_, a) = rows(&dir.path().join("unit_spectrum.csv"));
    let (_, b) = rows(&dir.path().join("scaled_spectrum.csv"));
    for (x, y) in a.iter().zip(&b) {
        for (u, v) in x.iter().zip(y) {
            let (u, v) = (num(u), num(v));
            assert!((u - v).abs() <= 1e-9 * u.abs().max(1e-12), "{u} vs {v}");
        }
    }
    assert_eq!(json(&dir.path().join("scaled_meta.json"))["gamma_input"], 2.5);
}

#[test]
fn sweep_single_value_matches_spectrum() {
    let dir = TempDir::new().unwrap();
    let base = format!("{}\n[grid]\nmin = 0.0\nmax = 40.0\npoints = 161\n", model_table(20.0, 4.0, 0.0));
    let cfg = format!("mode = \"sweep\"\n{base}\n[sweep]\nparam = \"r\"\nvalues = [0.5]\n");
    let p = write_config(dir.path(), "one.toml", &cfg);
    let out = run_in(dir.path(), &["sweep", "--config", p.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, table) = rows(&dir.path().join("polaremit_sweep.csv"));
    assert_eq!(header, SWEEP_HEADER);
    assert_eq!(table.len(), 1);
    assert_eq!(table[0][0], "r");

    let m = validate(ModelParams { theta: 0.4, ..ModelParams::resonant(1.0, 200.0, 20.0, 4.0, 0.5, 0.0) }).unwrap();
    let l = polaremit::auto_truncation(&m, 1e-10, 32).unwrap();
    let e = SpectrumEngine::new(&m, &solve_steady(&m, l).unwrap());
    let grid = polaremit::grid::refined(&m, 0.0, 40.0, 161).unwrap();
    let peak = peak_metrics(&e.spectrum(&grid).unwrap(), Column::Finc, peak_window(&m)).unwrap();
    let fx = e.quadrature_at(20.0).unwrap();
    let fmt = polaremit_cli::run::fmt_num;
    assert_eq!(table[0][2], fmt(fx));
    assert_eq!(table[0][3], fmt(peak.center));
    assert_eq!(table[0][4], fmt(peak.height));
    assert_eq!(table[0][5], fmt(peak.fwhm));
}

#[test]
fn failed_sweep_points_are_nan_rows() {
    let dir = TempDir::new().unwrap();
    // the grid misses the Rabi line, so no peak can be measured
    let cfg = format!("{}\n[grid]\nmin = 300.0\nmax = 400.0\npoints = 101\n\n[sweep]\nparam = \"theta\"\nvalues = [0.0, 1.0]\n", model_table(20.0, 4.0, 0.5));
    let p = write_config(dir.path(), "miss.toml", &cfg);
    let out = run_in(dir.path(), &["sweep", "--config", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let (_, table) = rows(&dir.path().join("polaremit_sweep.csv"));
    assert_eq!(table.len(), 2);
    for r in &table {
        assert!(num(&r[2]).is_finite());
        assert_eq!(r[3], "NaN");
    }
    let meta = json(&dir.path().join("polaremit_meta.json"));
    assert!(meta["points"][0]["error"].is_string());
}

#[test]
fn steady_fixed_point_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = format!("{}\n[grid]\nmin = 0.0\nmax = 1.0\npoints = 16\n", model_table(0.0, 4.0, 1.0));
    let p = write_config(dir.path(), "still.toml", &cfg);
    assert!(run_in(dir.path(), &["steady", "--config", p.to_str().unwrap()]).status.success());
    let (header, table) = rows(&dir.path().join("polaremit_harmonics.csv"));
    assert_eq!(header, HARMONICS_HEADER);
    let nonzero: Vec<&Vec<String>> = table.iter().filter(|r| num(&r[2]) != 0.0 || num(&r[3]) != 0.0).collect();
    assert_eq!(nonzero.len(), 1);
    assert_eq!((nonzero[0][0].as_str(), nonzero[0][1].as_str()), ("0", "3"));
    // -1/(2(2 sinh^2 1 + 1))
    assert!((num(&nonzero[0][2]) + 0.132_901_114_417_039_85).abs() < 1e-12);
    assert_eq!(num(&nonzero[0][3]), 0.0);
    assert_eq!(json(&dir.path().join("polaremit_meta.json"))["truncation"]["order"], 0);
}

#[test]
fn steady_harmonics_are_hermitian() {
    let dir = TempDir::new().unwrap();
    assert!(run_in(dir.path(), &["steady", "--preset", "fig1"]).status.success());
    let (_, table) = rows(&dir.path().join("fig1_harmonics.csv"));
    let get = |l: i64, c: i64| {
        let r = table.iter().find(|r| r[0] == l.to_string() && r[1] == c.to_string()).unwrap();
        (num(&r[2]), num(&r[3]))
    };
    assert_eq!(table.len(), 3 * 9);
    for l in -4..=4 {
        let (a, b) = (get(l, 2), get(-l, 1));
        assert!((a.0 - b.0).abs() <= 1e-10 && (a.1 + b.1).abs() <= 1e-10);
        let (c, d) = (get(l, 3), get(-l, 3));
        assert!((c.0 - d.0).abs() <= 1e-10 && (c.1 + d.1).abs() <= 1e-10);
    }
    assert!(get(1, 1).0.abs() + get(1, 1).1.abs() > 0.0);
}

#[test]
fn steady_without_coupling_keeps_only_dc() {
    let dir = TempDir::new().unwrap();
    let cfg = format!("{}\n[grid]\nmin = 0.0\nmax = 1.0\npoints = 16\n", model_table(20.0, 0.0, 0.5));
    let p = write_config(dir.path(), "dc.toml", &cfg);
    assert!(run_in(dir.path(), &["steady", "--config", p.to_str().unwrap(), "--truncation", "3"]).status.success());
    let (_, table) = rows(&dir.path().join("polaremit_harmonics.csv"));
    assert_eq!(table.len(), 21);
    for r in &table {
        if r[0] != "0" {
            assert_eq!((num(&r[2]), num(&r[3])), (0.0, 0.0));
        }
    }
}

#[test]
fn validate_short_window_fails() {
    let dir = TempDir::new().unwrap();
    let cfg = format!("{}\n[grid]\nmin = 0.0\nmax = 40.0\npoints = 50\n\n[validate]\ntau_max = 1.0\n", model_table(20.0, 4.0, 0.5));
    let p = write_config(dir.path(), "short.toml", &cfg);
    let out = run_in(dir.path(), &["validate", "--config", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report = json(&dir.path().join("polaremit_validate.json"));
    assert_eq!(report["pass"], false);
    assert!(report["error"].as_str().unwrap().contains("tau_max"));
}

#[test]
fn validate_mollow_triplet() {
    let dir = TempDir::new().unwrap();
    let out = run_in(dir.path(), &["validate", "--preset", "mollow_validate"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("mollow_validate_validate.json"));
    assert_eq!(report["pass"], true);
    assert!(report["max_deviation"].as_f64().unwrap() <= 0.02);
    assert_eq!(report["sum_rule"]["oracle"]["pass"], true);
    assert_eq!(report["sum_rule"]["resolvent"]["pass"], true);
}

#[test]
fn repeated_runs_are_identical() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for d in [&a, &b] {
        assert!(run_in(d.path(), &["sweep", "--preset", "fig3", "--threads", "2"]).status.success());
    }
    let x = fs::read(a.path().join("fig3_sweep.csv")).unwrap();
    let y = fs::read(b.path().join("fig3_sweep.csv")).unwrap();
    assert_eq!(x, y);
}

#[test]
fn full_window_flag() {
    let dir = TempDir::new().unwrap();
    assert!(run_in(dir.path(), &["spectrum", "--preset", "fig1", "--full-window"]).status.success());
    let meta = json(&dir.path().join("fig1_meta.json"));
    assert_eq!(meta["grid"]["min"], 4800.0);
    assert_eq!(meta["grid"]["max"], 5200.0);
}

#[test]
fn printed_paths_exist() {
    let dir = TempDir::new().unwrap();
    let out = run_in(dir.path(), &["steady", "--preset", "desk_validate"]);
    assert!(out.status.success());
    let listed: Vec<String> = String::from_utf8(out.stdout).unwrap().lines().map(String::from).collect();
    assert_eq!(listed.len(), 2);
    assert!(listed.iter().all(|p| Path::new(p).exists()));
}
