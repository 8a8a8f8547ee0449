use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ident_core::harness::{
    run_dimension_scaling, run_sim1_with, run_sim2_with, Ensemble, ScoreName, Sim2Result,
    SimConfig,
};
use ident_core::identcore::{
    block_coefficients, is_identifiable, repeated_eigen_class, unidentifiable_class_of,
    UnidentifiableClass, Verdict, DEFAULT_ZERO_TOL,
};
use ident_core::io::{
    fmt_f64, matrix_to_csv, read_matrix, read_to_string, read_vector, trajectory_from_csv,
    trajectory_to_csv, vector_to_csv, write_matrix, write_string,
};
use ident_core::randgen::{ginoe, goe, haar_orthogonal, normal_matrix, uniform_sphere};
use ident_core::realjordan::{real_jordan, real_jordan_allow_repeated};
use ident_core::scores::ident_report;
use ident_core::selftest;
use ident_core::twostage::{simple_operators, spline_operators, two_stage_estimate};
use ident_core::{
    dynamics, DMatrix, IdentError, Observations, Result, SeededRng, SmootherOperators, TimeGrid,
};
use serde_json::{json, Value};

use crate::{
    AnalyzeArgs, ClassSampleArgs, Command, DimEnsemble, DimscaleArgs, EstimateArgs, GenArgs,
    GenKind, Method, ScoresArgs, SelftestArgs, Sim1Args, Sim2Args, SimulateArgs, SmootherArgs,
    StudyArgs, SystemArgs,
};

pub const SCHEMA_VERSION: u32 = 1;

pub fn run(cmd: &Command) -> Result<ExitCode> {
    match cmd {
        Command::Analyze(a) => analyze(a),
        Command::ClassSample(a) => class_sample(a),
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a),
        Command::Scores(a) => scores(a),
        Command::Gen(a) => gen(a),
        Command::Sim1(a) => sim1(a),
        Command::Sim2(a) => sim2(a),
        Command::Dimscale(a) => dimscale(a),
        Command::Selftest(a) => selftest_cmd(a),
    }
}

pub fn error_json(e: &IdentError) -> Value {
    let mut v = json!({
        "schema_version": SCHEMA_VERSION,
        "error": e.kind(),
        "message": e.to_string(),
    });
    match e {
        IdentError::SingularGram { cond } | IdentError::IllConditionedBasis { cond } => {
            v["cond"] = finite_or_string(*cond);
        }
        IdentError::RepeatedEigenvalues { pairs } => v["pairs"] = json!(pairs),
        _ => {}
    }
    v
}

fn finite_or_string(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn emit(v: Value) -> Result<ExitCode> {
    println!("{}", serde_json::to_string_pretty(&v).expect("json values serialize"));
    Ok(ExitCode::SUCCESS)
}

fn with_schema(mut v: Value) -> Value {
    v["schema_version"] = json!(SCHEMA_VERSION);
    v
}

fn rows(m: &DMatrix<f64>) -> Value {
    json!(ident_core::io::rows_of(m))
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_string(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_system(s: &SystemArgs) -> Result<(DMatrix<f64>, ident_core::DVector<f64>)> {
    Ok((read_matrix(&s.system)?, read_vector(&s.x0)?))
}

fn class_for(
    verdict: &Verdict,
    a: &DMatrix<f64>,
    x0: &ident_core::DVector<f64>,
    eig_tol: f64,
) -> Result<Option<UnidentifiableClass>> {
    match verdict {
        Verdict::Identifiable { .. } => Ok(None),
        Verdict::UnidentifiableInitialCondition { .. } => {
            unidentifiable_class_of(a, x0, DEFAULT_ZERO_TOL, eig_tol).map(Some)
        }
        Verdict::UnidentifiableRepeatedEigen { .. } => {
            repeated_eigen_class(a, x0, eig_tol).map(Some)
        }
    }
}

fn analyze(args: &AnalyzeArgs) -> Result<ExitCode> {
    let s = &args.sys;
    let (a, x0) = load_system(s)?;
    let verdict = is_identifiable(&a, &x0, s.icis_tol, s.eig_tol)?;
    let jf = match verdict {
        Verdict::UnidentifiableRepeatedEigen { .. } => real_jordan_allow_repeated(&a, s.eig_tol)?,
        _ => real_jordan(&a, s.eig_tol)?,
    };
    let bc = block_coefficients(&jf, &x0)?;
    let class = class_for(&verdict, &a, &x0, s.eig_tol)?;
    let class_json = class.as_ref().map(|c| match &c.i0 {
        Some(diag) => json!({ "I0_diagonal": diag }),
        None => json!({
            "repeated_block": {
                "blocks": c.blocks,
                "first_dim": c.block_offset,
                "size": c.free_size,
            }
        }),
    });
    let mut out = json!({
        "verdict": verdict.name(),
        "icis": bc.icis,
        "w0_magnitudes": bc.magnitudes,
        "class": class_json,
        "dof": class.as_ref().map_or(0, |c| c.dof),
    });
    if let Verdict::UnidentifiableRepeatedEigen { gap } = verdict {
        out["gap"] = json!(gap);
    }
    emit(with_schema(out))
}

fn class_sample(args: &ClassSampleArgs) -> Result<ExitCode> {
    let s = &args.sys;
    let (a, x0) = load_system(s)?;
    let verdict = is_identifiable(&a, &x0, s.icis_tol, s.eig_tol)?;
    let class = class_for(&verdict, &a, &x0, s.eig_tol)?.ok_or(IdentError::FullyIdentifiable)?;
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| IdentError::Io(format!("{}: {e}", args.out_dir.display())))?;
    let mut rng = SeededRng::new(args.seed, 0);
    let width = args.n.to_string().len();
    let mut files = Vec::with_capacity(args.n);
    for k in 1..=args.n {
        let dmat = normal_matrix(class.free_size, class.free_size, &mut rng) * args.scale;
        let member = class.member(&dmat)?;
        let path: PathBuf = args.out_dir.join(format!("member_{k:0width$}.csv"));
        write_matrix(&path, &member)?;
        files.push(path.display().to_string());
    }
    emit(with_schema(json!({
        "verdict": verdict.name(),
        "dof": class.dof,
        "free_size": class.free_size,
        "files": files,
    })))
}

fn simulate(args: &SimulateArgs) -> Result<ExitCode> {
    let a = read_matrix(&args.system)?;
    let x0 = read_vector(&args.x0)?;
    let grid = TimeGrid::uniform(args.t0, args.t1, args.n)?;
    let traj = dynamics::solve(&a, &x0, &grid)?;
    let obs = dynamics::add_noise(&traj, args.sigma, args.seed)?;
    write_or_print(args.out.as_deref(), &trajectory_to_csv(&obs.grid, &obs.y))?;
    Ok(ExitCode::SUCCESS)
}

fn load_data(s: &SmootherArgs, sigma: f64) -> Result<(Observations, SmootherOperators)> {
    let (grid, y) = trajectory_from_csv(&read_to_string(&s.data)?)?;
    let ops = match s.method {
        Method::Spline => spline_operators(&grid, s.lambda, s.order)?,
        Method::Simple => simple_operators(&grid)?,
    };
    Ok((Observations::new(grid, y, sigma)?, ops))
}

fn estimate(args: &EstimateArgs) -> Result<ExitCode> {
    let (obs, ops) = load_data(&args.smoother, 0.0)?;
    let truth = args.truth.as_deref().map(read_matrix).transpose()?;
    let rep = two_stage_estimate(&obs, &ops, truth.as_ref())?;
    if let Some(p) = &args.out {
        write_matrix(p, &rep.a_hat)?;
    }
    let mut out = json!({
        "A_hat": rows(&rep.a_hat),
        "gram_cond": rep.gram_cond,
    });
    if let Some(r) = rep.ree {
        out["ree"] = json!(r);
    }
    emit(with_schema(out))
}

fn scores(args: &ScoresArgs) -> Result<ExitCode> {
    let (obs, ops) = load_data(&args.smoother, args.sigma.unwrap_or(0.0))?;
    let system = match (&args.system, &args.x0) {
        (Some(a), Some(x)) => Some((read_matrix(a)?, read_vector(x)?)),
        _ => None,
    };
    let mut rep = ident_report(&obs, &ops, system.as_ref().map(|(a, x)| (a, x)))?;
    rep.metadata.sigma = args.sigma;
    let out = serde_json::to_value(&rep).expect("report serializes");
    emit(with_schema(out))
}

fn gen(args: &GenArgs) -> Result<ExitCode> {
    let mut rng = SeededRng::new(args.seed, 0);
    let text = match args.ensemble {
        GenKind::Ginoe => matrix_to_csv(&ginoe(args.d, &mut rng)?),
        GenKind::Goe => matrix_to_csv(&goe(args.d, &mut rng)?),
        GenKind::Haar => matrix_to_csv(&haar_orthogonal(args.d, &mut rng)?),
        GenKind::Sphere => vector_to_csv(&uniform_sphere(args.d, &mut rng)?),
    };
    write_or_print(args.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn study_config(s: &StudyArgs) -> SimConfig {
    SimConfig {
        t_end: s.t_end,
        n: s.n,
        sigma: s.sigma,
        lambda: s.lambda,
        ..SimConfig::default()
    }
}

fn sim1(args: &Sim1Args) -> Result<ExitCode> {
    let s = &args.study;
    let cfg = study_config(s);
    let res = run_sim1_with(&cfg, s.reps, s.seed)?;
    if let Some(p) = &args.out {
        let mut csv = String::from("replicate,icis,ree_noisy,ree_clean\n");
        for r in &res.records {
            let _ = writeln!(
                csv,
                "{},{},{},{}",
                r.replicate,
                fmt_f64(r.icis),
                fmt_f64(r.ree_noisy),
                fmt_f64(r.ree_clean)
            );
        }
        write_string(p, &csv)?;
    }
    emit(with_schema(json!({
        "reps": s.reps,
        "seed": s.seed,
        "config": cfg,
        "spearman_noisy": res.spearman_noisy,
        "spearman_clean": res.spearman_clean,
        "failed": res.failed,
    })))
}

fn auc_summary(res: &Sim2Result) -> Value {
    let mut noisy = serde_json::Map::new();
    let mut clean = serde_json::Map::new();
    for score in ScoreName::ALL {
        if let Some(v) = res.auc(score, true) {
            noisy.insert(score.label().into(), json!(v));
        }
        if let Some(v) = res.auc(score, false) {
            clean.insert(score.label().into(), json!(v));
        }
    }
    json!({ "noisy": noisy, "clean": clean })
}

fn sim2(args: &Sim2Args) -> Result<ExitCode> {
    let s = &args.study;
    let cfg = study_config(s);
    let res = run_sim2_with(&cfg, s.reps, s.seed)?;
    if let Some(p) = &args.out_records {
        let mut csv = String::from(
            "replicate,case,icis,scn_noisy,pis_noisy,kappa_noisy,scn_clean,pis_clean,kappa_clean,failed\n",
        );
        for r in &res.records {
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{},{}",
                r.replicate,
                r.case.label(),
                fmt_f64(r.icis),
                fmt_f64(r.noisy.scn),
                fmt_f64(r.noisy.pis),
                fmt_f64(r.noisy.kappa),
                fmt_f64(r.clean.scn),
                fmt_f64(r.clean.pis),
                fmt_f64(r.clean.kappa),
                r.failed
            );
        }
        write_string(p, &csv)?;
    }
    let summary = with_schema(json!({
        "reps": s.reps,
        "seed": s.seed,
        "config": cfg,
        "auc": auc_summary(&res),
        "failed": res.failed,
    }));
    if let Some(p) = &args.out_auc {
        let mut full = summary.clone();
        full["roc"] = serde_json::to_value(&res.auc_table).expect("roc table serializes");
        let text = serde_json::to_string_pretty(&full).expect("json values serialize");
        write_string(p, &(text + "\n"))?;
    }
    emit(summary)
}

fn dimscale(args: &DimscaleArgs) -> Result<ExitCode> {
    let ensemble = match args.ensemble {
        DimEnsemble::Ginoe => Ensemble::Ginoe,
        DimEnsemble::Goe => Ensemble::Goe,
    };
    let rows = run_dimension_scaling(&args.dims, args.reps, ensemble, args.seed)?;
    if let Some(p) = &args.out {
        let mut csv = String::from("d,sample,icis\n");
        for row in &rows {
            for (k, v) in row.icis.iter().enumerate() {
                let _ = writeln!(csv, "{},{},{}", row.d, k, fmt_f64(*v));
            }
        }
        write_string(p, &csv)?;
    }
    let summary: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "d": r.d,
                "median": r.median(),
                "mean_square": r.mean_square(),
                "samples": r.icis.len(),
                "failed": r.failed,
            })
        })
        .collect();
    emit(with_schema(json!({
        "ensemble": ensemble,
        "reps": args.reps,
        "seed": args.seed,
        "dims": summary,
    })))
}

fn selftest_cmd(args: &SelftestArgs) -> Result<ExitCode> {
    let results = selftest::run_all();
    let all_pass = results.iter().all(|r| r.pass);
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&with_schema(json!({
                "pass": all_pass,
                "results": results,
            })))
            .expect("json values serialize")
        );
    } else {
        let mw = results.iter().map(|r| r.module.len()).max().unwrap_or(0);
        let nw = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
        for r in &results {
            println!(
                "{:mw$}  {:nw$}  {}  {}",
                r.module,
                r.name,
                if r.pass { "PASS" } else { "FAIL" },
                r.detail
            );
        }
        let passed = results.iter().filter(|r| r.pass).count();
        println!("{passed}/{} properties pass", results.len());
    }
    Ok(if all_pass { ExitCode::SUCCESS } else { ExitCode::from(2) })
}
