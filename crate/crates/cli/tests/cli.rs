use std::path::Path;
use std::process::{Command, Output};

use ident_core::io::{matrix_to_csv, read_matrix, vector_to_csv};
use ident_core::realjordan::{real_jordan, DEFAULT_EIG_TOL};
use ident_core::{DMatrix, DVector};
use serde_json::Value;

fn ident(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ident"))
        .args(args)
        .current_dir(dir)
        .env_remove("IDENT_THREADS")
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn example_3d() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[0.0, 1.0, -1.0, 2.0, 0.0, 0.0, 3.0, 1.0, 0.0])
}

fn write_example(dir: &Path, coeffs: [f64; 3]) {
    let a = example_3d();
    let jf = real_jordan(&a, DEFAULT_EIG_TOL).unwrap();
    let x0 = &jf.q * DVector::from_vec(coeffs.to_vec());
    std::fs::write(dir.join("A.csv"), matrix_to_csv(&a)).unwrap();
    std::fs::write(dir.join("x0.csv"), vector_to_csv(&x0)).unwrap();
}

#[test]
fn analyze_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    write_example(dir.path(), [0.0, -2.0, 3.0]);
    let out = ident(&["analyze", "--system", "A.csv", "--x0", "x0.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["verdict"], "UnidentifiableInitialCondition");
    assert_eq!(v["class"]["I0_diagonal"], serde_json::json!([1, 0, 0]));

    write_example(dir.path(), [2.0, -1.0, 0.0]);
    let v = json_of(&ident(&["analyze", "--system", "A.csv", "--x0", "x0.csv"], dir.path()));
    assert_eq!(v["verdict"], "Identifiable");
    assert!((v["icis"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!(v["class"].is_null());
}

#[test]
fn missing_argument_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = ident(&["analyze", "--x0", "x0.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--system"));
    assert_eq!(ident(&["--help"], dir.path()).status.code(), Some(0));
    assert_eq!(ident(&["bogus"], dir.path()).status.code(), Some(1));
    assert_eq!(ident(&["sim1", "--reps", "0", "--seed", "1"], dir.path()).status.code(), Some(1));
}

#[test]
fn randomized_commands_need_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["gen", "--ensemble", "goe", "--d", "3"][..],
        &["sim1", "--reps", "5"],
        &["sim2", "--reps", "10"],
        &["dimscale", "--dims", "3", "--reps", "5"],
    ] {
        let out = ident(args, dir.path());
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
    }
}

#[test]
fn estimate_with_more_states_than_points_is_singular() {
    let dir = tempfile::tempdir().unwrap();
    let d = 6;
    let mut csv = String::from("time,dim,value\n");
    for j in 0..5 {
        for i in 1..=d {
            csv += &format!("{},{},{}\n", j as f64 * 0.25, i, ((i * 7 + j * 3) % 5) as f64 - 2.0);
        }
    }
    std::fs::write(dir.path().join("Y.csv"), csv).unwrap();
    let out = ident(&["estimate", "--data", "Y.csv", "--method", "simple"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json_of(&out)["error"], "SingularGram");
}

#[test]
fn numerical_errors_use_exit_code_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("A.csv"), "1,2\n3,4\n").unwrap();
    std::fs::write(dir.path().join("x0.csv"), "0\n0\n").unwrap();
    let out = ident(&["analyze", "--system", "A.csv", "--x0", "x0.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json_of(&out)["error"], "ZeroInitialCondition");

    let out = ident(&["analyze", "--system", "nope.csv", "--x0", "x0.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json_of(&out)["error"], "Io");
}

#[test]
fn simulate_estimate_scores_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("A.csv"), "-0.1,3,0\n-3,-0.1,0\n0,0,-0.5\n").unwrap();
    std::fs::write(p.join("x0.csv"), "0.6,0.6,0.52\n").unwrap();
    let sim = |sigma: &str, out: &str| {
        let args = [
            "simulate", "--system", "A.csv", "--x0", "x0.csv", "--t0", "0", "--t1", "6", "--n",
            "61", "--sigma", sigma, "--seed", "42", "--out", out,
        ];
        assert_eq!(ident(&args, p).status.code(), Some(0));
    };
    sim("0.05", "Y.csv");
    sim("0.05", "Y2.csv");
    let text = std::fs::read_to_string(p.join("Y.csv")).unwrap();
    assert!(text.starts_with("time,dim,value\n"));
    assert_eq!(text.lines().count(), 1 + 61 * 3);
    assert_eq!(text, std::fs::read_to_string(p.join("Y2.csv")).unwrap());

    let out = ident(
        &["estimate", "--data", "Y.csv", "--lambda", "0.001", "--order", "4", "--truth", "A.csv", "--out", "Ahat.csv"],
        p,
    );
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert!(v["ree"].as_f64().unwrap() < 0.5);
    let a_hat = read_matrix(&p.join("Ahat.csv")).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(a_hat[(i, j)], v["A_hat"][i][j].as_f64().unwrap());
        }
    }

    let v = json_of(&ident(&["scores", "--data", "Y.csv"], p));
    assert!(v.get("icis").is_none());
    assert!(v["scn"].as_f64().unwrap() >= 1.0);
    let v = json_of(&ident(&["scores", "--data", "Y.csv", "--system", "A.csv", "--x0", "x0.csv"], p));
    assert!(v["icis"].as_f64().unwrap() > 0.0);
    assert_eq!(v["metadata"]["d"], 3);
}

#[test]
fn gen_writes_exact_csv_and_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    for (name, ens) in [("G.csv", "ginoe"), ("H.csv", "haar"), ("S.csv", "sphere")] {
        let out = ident(&["gen", "--ensemble", ens, "--d", "4", "--seed", "1", "--out", name], p);
        assert_eq!(out.status.code(), Some(0));
    }
    let h = read_matrix(&p.join("H.csv")).unwrap();
    assert!((h.transpose() * &h - DMatrix::identity(4, 4)).amax() < 1e-12);
    let s = ident_core::io::read_vector(&p.join("S.csv")).unwrap();
    assert!((s.norm() - 1.0).abs() < 1e-12);
    let again = ident(&["gen", "--ensemble", "ginoe", "--d", "4", "--seed", "1"], p);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), std::fs::read_to_string(p.join("G.csv")).unwrap());
}

#[test]
fn class_sample_members_share_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    write_example(p, [0.0, -2.0, 3.0]);
    let out = ident(
        &["class-sample", "--system", "A.csv", "--x0", "x0.csv", "--n", "3", "--seed", "5", "--out-dir", "members"],
        p,
    );
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    let files = v["files"].as_array().unwrap();
    assert_eq!(files.len(), 3);
    let x0 = ident_core::io::read_vector(&p.join("x0.csv")).unwrap();
    let grid = ident_core::TimeGrid::uniform(0.0, 1.0, 11).unwrap();
    let base = ident_core::dynamics::solve(&example_3d(), &x0, &grid).unwrap().x;
    for f in files {
        let m = read_matrix(&p.join(f.as_str().unwrap())).unwrap();
        assert!((m.clone() - example_3d()).amax() > 1e-6);
        let x = ident_core::dynamics::solve(&m, &x0, &grid).unwrap().x;
        assert!((x - &base).amax() < 1e-8);
    }

    write_example(p, [2.0, -1.0, 0.0]);
    let out = ident(&["class-sample", "--system", "A.csv", "--x0", "x0.csv", "--n", "1", "--seed", "5"], p);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json_of(&out)["error"], "FullyIdentifiable");
}

#[test]
fn simulation_outputs_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    for threads in ["1", "3"] {
        let out = ident(
            &["--threads", threads, "sim1", "--reps", "12", "--seed", "7", "--out", &format!("s1_{threads}.csv")],
            p,
        );
        assert_eq!(out.status.code(), Some(0));
        let out = ident(
            &[
                "sim2", "--reps", "10", "--seed", "7", "--threads", threads,
                "--out-records", &format!("s2_{threads}.csv"), "--out-auc", &format!("auc_{threads}.json"),
            ],
            p,
        );
        assert_eq!(out.status.code(), Some(0));
        let out = ident(
            &["dimscale", "--dims", "3,5", "--reps", "8", "--ensemble", "ginoe", "--seed", "7", "--out", &format!("d_{threads}.csv")],
            p,
        );
        assert_eq!(out.status.code(), Some(0));
    }
    for stem in ["s1_{}.csv", "s2_{}.csv", "auc_{}.json", "d_{}.csv"] {
        let read = |t: &str| std::fs::read_to_string(p.join(stem.replace("{}", t))).unwrap();
        assert_eq!(read("1"), read("3"), "{stem}");
    }
    let s1 = std::fs::read_to_string(p.join("s1_1.csv")).unwrap();
    assert!(s1.starts_with("replicate,icis,ree_noisy,ree_clean\n"));
    assert_eq!(s1.lines().count(), 13);
    let s2 = std::fs::read_to_string(p.join("s2_1.csv")).unwrap();
    assert_eq!(s2.lines().count(), 1 + 30);
    let auc: Value = serde_json::from_str(&std::fs::read_to_string(p.join("auc_1.json")).unwrap()).unwrap();
    assert_eq!(auc["schema_version"], 1);
    assert!(auc["auc"]["clean"].as_object().unwrap().len() == 4);
    let dim = std::fs::read_to_string(p.join("d_1.csv")).unwrap();
    assert_eq!(dim.lines().count(), 1 + 16);
}

#[test]
fn threads_fall_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_ident"))
        .args(["sim1", "--reps", "4", "--seed", "1"])
        .current_dir(dir.path())
        .env("IDENT_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = Command::new(env!("CARGO_BIN_EXE_ident"))
        .args(["sim1", "--reps", "4", "--seed", "1"])
        .current_dir(dir.path())
        .env("IDENT_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn selftest_reports_every_property() {
    let dir = tempfile::tempdir().unwrap();
    let out = ident(&["selftest", "--json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["pass"], true);
    assert!(v["results"].as_array().unwrap().len() >= 20);
    let out = ident(&["selftest"], dir.path());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("PASS") && !text.contains("FAIL"));
}
