use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lorenz-psi"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    let out = bin().args(args).arg("--output-dir").arg(dir).output().unwrap();
    if !out.status.success() {
        eprintln!("stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    out
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn verify_table1_both_families() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["verify-table1"]);
    assert_eq!(code(&out), 0);
    let reports = json(dir.path().join("table1.json"));
    let reports = reports.as_array().unwrap();
    assert_eq!(reports.len(), 2);
    for r in reports {
        assert!(r["cells"].as_array().unwrap().iter().all(|c| c["matches"] == true));
    }
    let manifest = json(dir.path().join("manifest.json"));
    assert_eq!(manifest["status"], "ok");
    assert_eq!(manifest["outputs"][0], "table1.json");
}

#[test]
fn gen_coeffs_numeric_dump_length() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["gen-coeffs", "--max-m", "50", "--d", "numeric:0"]);
    assert_eq!(code(&out), 0);
    let v = json(dir.path().join("coeffs_plus_m50.json"));
    let rungs = v.as_array().unwrap();
    assert_eq!(rungs.len(), 53);
    assert_eq!(rungs[0]["m"], -2);
    assert!(rungs[52].get("P").is_some());
}

#[test]
fn gen_coeffs_minimal_and_other_formats() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["gen-coeffs", "--max-m", "-2", "--family", "minus"])), 0);
    assert_eq!(json(dir.path().join("coeffs_minus_m-2.json")).as_array().unwrap().len(), 1);

    assert_eq!(code(&run(dir.path(), &["gen-coeffs", "--format", "latex"])), 0);
    let tex = fs::read_to_string(dir.path().join("coeffs_plus_m3.tex")).unwrap();
    assert!(tex.contains(r"\frac{71}{9}"));

    assert_eq!(code(&run(dir.path(), &["gen-coeffs", "--format", "csv", "--max-m", "0"])), 0);
    let csv = fs::read_to_string(dir.path().join("coeffs_plus_m0.csv")).unwrap();
    assert!(csv.starts_with("m,component,index,u_deg,d_deg,re,im\n"));
    assert!(csv.contains("-2,R,-2,0,0,-1/5,0"));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["gen-coeffs", "--max-m", "-3"],
        vec!["gen-coeffs", "--family", "sideways"],
        vec!["gen-coeffs", "--d", "numeric:x"],
        vec!["gen-coeffs", "--max-m", "61"],
        vec!["gen-coeffs", "--format", "xml"],
        vec!["bounds", "--max-m", "5"],
        vec!["bounds", "--d", "symbolic"],
        vec!["locate", "AC"],
        vec!["eval"],
    ] {
        let out = run(dir.path(), &args);
        assert_eq!(code(&out), 1, "{args:?}");
    }
    let out = bin().args(["gen-coeffs", "--no-such-flag"]).output().unwrap();
    assert_eq!(code(&out), 1);
    let out = bin().arg("--help").output().unwrap();
    assert_eq!(code(&out), 0);
}

#[test]
fn evaluation_on_the_cut_is_a_computation_failure() {
    let dir = tempfile::tempdir().unwrap();
    let job = dir.path().join("job.toml");
    fs::write(&job, "t0 = [0.0, 0.3]\npoints = [[0.0, 0.31]]\n").unwrap();
    let out = run(dir.path(), &["eval", "--job", job.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("eval:"));
    let manifest = json(dir.path().join("manifest.json"));
    assert_eq!(manifest["status"], "computation_failure");
}

#[test]
fn bounds_sweep_and_k2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["bounds", "--max-m", "50", "--d", "numeric:0"]);
    assert_eq!(code(&out), 0);
    let csv = fs::read_to_string(dir.path().join("bounds_sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 52);
    let conv = json(dir.path().join("convergence.json"));
    assert!(conv["failed_rungs"].as_array().unwrap().is_empty());
    assert!(conv["k2"]["rel_diff"].as_f64().unwrap() < 1e-4);
    let k2 = conv["estimate"]["k2"].as_f64().unwrap();
    assert!((k2 - 969.2588).abs() < 1e-3);
}

#[test]
fn bounds_growth_check_is_seeded() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = run(d.path(), &["bounds", "--max-m", "8", "--growth-samples", "2000", "--seed", "11"]);
        assert_eq!(code(&out), 0);
    }
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("convergence.json")).unwrap();
    assert_eq!(read(&a), read(&b));
    let conv = json(a.path().join("convergence.json"));
    assert_eq!(conv["growth"]["samples"], 2000);
    assert!(conv["growth"]["max_ratio"].as_f64().unwrap() <= 58.0);
}

#[test]
fn radius_shrinks_with_c() {
    let r = |c: &str| {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(code(&run(dir.path(), &["radius", "--c", c])), 0);
        let v = json(dir.path().join("radius.json"));
        assert_eq!(v["conditions_hold"], true);
        v["estimate"]["r"].as_f64().unwrap()
    };
    assert!(r("0,6.283185307179586") < r("0"));
}

#[test]
fn flags_override_job_file() {
    let dir = tempfile::tempdir().unwrap();
    let job = dir.path().join("job.toml");
    fs::write(&job, "t0 = [0.0, 0.3]\norder = 10\nc = \"1,0\"\npoints = [[0.0, 0.29996]]\n").unwrap();
    let out = run(dir.path(), &["eval", "--job", job.to_str().unwrap(), "--order", "12"]);
    assert_eq!(code(&out), 0);
    let m = json(dir.path().join("manifest.json"));
    assert_eq!(m["inputs"]["order"], 12);
    assert_eq!(m["inputs"]["c"], "1,0");
    let csv = fs::read_to_string(dir.path().join("eval.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn residual_decays_geometrically() {
    let dir = tempfile::tempdir().unwrap();
    let job = dir.path().join("job.toml");
    // |t - t0| = 4e-5, about half the convergence radius; opposite the cut.
    fs::write(&job, "t0 = [0.0, 0.3]\nd = \"numeric:0,1\"\nc = [1.0, 0.0]\npoints = [[0.0, 0.29996]]\n").unwrap();
    let out =
        run(dir.path(), &["residual", "--job", job.to_str().unwrap(), "--order", "40", "--precision-bits", "1024"]);
    assert_eq!(code(&out), 0);
    let mut rdr = csv::Reader::from_path(dir.path().join("residual.csv")).unwrap();
    let rows: Vec<(i64, f64)> = rdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[2].parse().unwrap(), r[3].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 8);
    for w in rows.windows(2) {
        assert!(w[1].1 <= 0.8 * w[0].1, "{w:?}");
    }
    assert!(rows[7].1 < 1e-8);
}

#[test]
fn integrate_closed_loop_returns() {
    let dir = tempfile::tempdir().unwrap();
    let job = dir.path().join("job.toml");
    fs::write(
        &job,
        "start = [[1.0, 0.0], [2.0, 0.0], [20.0, 0.0]]\n\
         waypoints = [[0.0, 0.0], [0.2, 0.05], [0.4, 0.0], [0.2, -0.05], [0.0, 0.0]]\n",
    )
    .unwrap();
    assert_eq!(code(&run(dir.path(), &["integrate", "--job", job.to_str().unwrap()])), 0);
    let v = json(dir.path().join("integrate.json"));
    assert_eq!(v["outcome"]["kind"], "completed");
    assert!(v["return_error"].as_f64().unwrap() < 1e-8);
    let trace = fs::read_to_string(dir.path().join("integrate_trace.csv")).unwrap();
    assert!(trace.lines().count() > 2);
}

#[test]
fn find_orbit_is_independent_of_jobs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(a.path(), &["find-orbit", "AB", "AAB", "--jobs", "1"])), 0);
    assert_eq!(code(&run(b.path(), &["find-orbit", "AB", "AAB", "--jobs", "2"])), 0);
    for name in ["orbit_AB.json", "orbit_AAB.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
    }
    let ab = json(a.path().join("orbit_AB.json"));
    assert!((ab["period"].as_f64().unwrap() - 1.5586522107).abs() < 1e-8);
}

#[test]
fn locate_ab_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert_eq!(code(&run(d.path(), &["locate", "AB"])), 0);
    }
    for name in ["orbit_AB.json", "sing_AB.json", "locate_AB.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let s = json(a.path().join("sing_AB.json"));
    assert_eq!(s["orbit"], "AB");
    assert_eq!(s["stage"], "refined");
    assert!((s["t0"][1].as_f64().unwrap().abs() - 0.17145).abs() < 1e-3);
    let all = json(a.path().join("locate_AB.json"));
    assert!(all.as_array().unwrap().iter().all(|l| l["divergence"]["holds"] == true));
}

#[test]
fn fit_writes_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let job = dir.path().join("job.toml");
    fs::write(&job, "symbols = [\"AB\"]\norder = 12\n").unwrap();
    assert_eq!(code(&run(dir.path(), &["fit", "--job", job.to_str().unwrap()])), 0);
    let s = json(dir.path().join("sing_AB.json"));
    let fit = &s["fit"];
    assert_eq!(fit["n"], 12);
    assert!((fit["C"][0].as_f64().unwrap() - 3.503).abs() < 1e-3);
    assert!(fit["holdout_rms"].as_f64().unwrap() < 1e-6);
    assert!(dir.path().join("fit_AB.json").exists());
}
