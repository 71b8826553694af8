//! The acceptance gate. Each test checks one release criterion end to end
//! and prints a single `criterion N (...): PASS` or `FAIL` line (visible
//! with `cargo test --test acceptance -- --nocapture`), so the whole gate
//! reads as eight lines. Failure messages name the instance, dataset, or
//! bound that broke.

#[path = "../../core/tests/common/mod.rs"]
mod oracle;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use ndarray::Array1;
use rand::Rng;
use ssvdd::data::{
    binarize_majority, load_csv, mean_pairwise_distance, LabelColumn, OneClassDataset, SplitSpec,
};
use ssvdd::kernel::KernelSpec;
use ssvdd::model_selection::{benchmark, BenchmarkOptions, GridSpec, Method};
use ssvdd::report::EvalReport;
use ssvdd::subspace::{
    augmented_objective, gradient_kernel, gradient_linear, lambda_vector, train, HyperParams,
    Mode, PsiMode, SsvddModel, TrainReport,
};
use ssvdd::svdd::{solve_dual, SolverConfig};

const PAPER_C_GRID: [f64; 8] = [0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6];

fn conclude(n: usize, name: &str, outcome: Result<(), String>) {
    match outcome {
        Ok(()) => println!("criterion {n} ({name}): PASS"),
        Err(msg) => {
            println!("criterion {n} ({name}): FAIL: {msg}");
            panic!("criterion {n} ({name}): {msg}");
        }
    }
}

fn workspace_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

#[test]
fn criterion_1_dual_solver_matches_brute_force() {
    let outcome = (|| -> Result<(), String> {
        let mut rng = oracle::rng(101);
        // Near-singular random Grams can need far more than the default
        // 10N passes to reach the 1e-6 KKT tolerance; the budget is not
        // what this criterion measures, so give the solver room.
        let cfg = SolverConfig { max_passes: Some(100_000), ..SolverConfig::default() };
        let mut unique_cases = 0usize;
        for case in 0..200 {
            let n: usize = rng.gen_range(2..=8);
            let feasible: Vec<f64> = PAPER_C_GRID
                .iter()
                .copied()
                .filter(|&c| n as f64 * c >= 1.0)
                .collect();
            let c = feasible[rng.gen_range(0..feasible.len())];
            let gram = oracle::random_psd_gram(n, &mut rng);
            let sol = solve_dual(gram.view(), c, &cfg)
                .map_err(|e| format!("case {case} (N = {n}, C = {c}): solver error: {e}"))?;
            let brute = oracle::brute_force_svdd(&gram, c);
            let obj = oracle::dual_objective(&gram, sol.alpha.as_slice().expect("contiguous"));
            let gap = (obj - brute.objective).abs();
            if gap > 1e-4 {
                return Err(format!(
                    "case {case} (N = {n}, C = {c}): objective gap {gap:.3e} exceeds 1e-4"
                ));
            }
            if brute.unique {
                unique_cases += 1;
                let inf = sol
                    .alpha
                    .iter()
                    .zip(&brute.alpha)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                if inf > 1e-3 {
                    return Err(format!(
                        "case {case} (N = {n}, C = {c}): alpha off by {inf:.3e} in infinity norm"
                    ));
                }
            }
        }
        // The alpha comparison only fires on unique optima; make sure the
        // sampling actually produced a meaningful number of those.
        if unique_cases < 50 {
            return Err(format!(
                "only {unique_cases} of 200 instances had a unique optimum"
            ));
        }
        Ok(())
    })();
    conclude(1, "dual solver matches brute force", outcome);
}

#[test]
fn criterion_2_gradients_match_finite_differences() {
    let outcome = (|| -> Result<(), String> {
        let mut rng = oracle::rng(202);
        let h = 1e-5;
        for mode in [Mode::Linear, Mode::Kernel] {
            for psi in PsiMode::ALL {
                for case in 0..20 {
                    let n: usize = rng.gen_range(4..=9);
                    let c = [0.3, 0.5, 1.0][rng.gen_range(0..3)];
                    let (m_cols, p) = match mode {
                        Mode::Linear => {
                            let dim = rng.gen_range(2..=6);
                            let d_sub = rng.gen_range(1..=dim);
                            let rows = oracle::random_rows(n, dim, &mut rng);
                            (rows.t().to_owned(), oracle::random_rows(d_sub, dim, &mut rng))
                        }
                        Mode::Kernel => {
                            let d_sub = rng.gen_range(1..=n);
                            (
                                oracle::random_psd_gram(n, &mut rng),
                                oracle::random_rows(d_sub, n, &mut rng),
                            )
                        }
                    };
                    let alpha = Array1::from(oracle::random_feasible_alpha(n, c, &mut rng));
                    let lambda = lambda_vector(psi, alpha.view(), c, 1e-6);
                    let beta = 10f64.powi(rng.gen_range(-2..=2));
                    let analytic = match mode {
                        Mode::Linear => gradient_linear(
                            m_cols.view(),
                            p.view(),
                            alpha.view(),
                            lambda.view(),
                            beta,
                        ),
                        Mode::Kernel => gradient_kernel(
                            m_cols.view(),
                            p.view(),
                            alpha.view(),
                            lambda.view(),
                            beta,
                        ),
                    }
                    .map_err(|e| format!("{mode} {psi} case {case}: {e}"))?;
                    let numeric = oracle::central_diff_gradient(
                        |q| {
                            augmented_objective(
                                m_cols.view(),
                                q.view(),
                                alpha.view(),
                                lambda.view(),
                                beta,
                            )
                            .expect("shapes are fixed")
                        },
                        &p,
                        h,
                    );
                    let err = oracle::relative_error(&analytic, &numeric);
                    if err > 1e-4 {
                        return Err(format!(
                            "{mode} {psi} case {case} (N = {n}, beta = {beta}): relative error {err:.3e} exceeds 1e-4"
                        ));
                    }
                }
            }
        }
        Ok(())
    })();
    conclude(2, "gradients match finite differences", outcome);
}

struct FullRun {
    dataset: String,
    mode: Mode,
    model: SsvddModel<f64>,
    report: TrainReport<f64>,
}

fn bundled_datasets() -> Vec<PathBuf> {
    let dir = workspace_path("datasets");
    let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
        .expect("datasets directory ships with the repository")
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    paths
}

/// One full k_max = 50 training run per (bundled dataset, mode); criteria 3
/// and 4 both inspect these.
fn full_runs() -> Result<Vec<FullRun>, String> {
    let mut runs = Vec::new();
    for path in bundled_datasets() {
        let name = path.file_stem().expect("csv file").to_string_lossy().into_owned();
        let ds = load_csv::<f64>(&path, &LabelColumn::Name("class".into()), true)
            .map_err(|e| format!("{name}: {e}"))?;
        let one = binarize_majority(ds, None).map_err(|e| format!("{name}: {e}"))?;
        let targets = one.target_rows();
        for mode in [Mode::Linear, Mode::Kernel] {
            let (kernel, d_bound) = match mode {
                Mode::Linear => (None, targets.ncols()),
                Mode::Kernel => {
                    let sigma = mean_pairwise_distance(targets.view())
                        .map_err(|e| format!("{name}: {e}"))?;
                    let spec = KernelSpec::new(sigma).map_err(|e| format!("{name}: {e}"))?;
                    (Some(spec), targets.nrows())
                }
            };
            let params = HyperParams {
                c: 0.3,
                beta: 1.0,
                eta: 0.1,
                d: 2.min(d_bound),
                psi: PsiMode::Psi2,
                k_max: 50,
                seed: 42,
                kernel,
            };
            let (model, report) = train(targets.view(), &params, &SolverConfig::default())
                .map_err(|e| format!("{name} {mode}: training failed: {e}"))?;
            runs.push(FullRun { dataset: name.clone(), mode, model, report });
        }
    }
    if runs.is_empty() {
        return Err("no bundled datasets found".into());
    }
    Ok(runs)
}

#[test]
fn criterion_3_projection_stays_orthonormal() {
    let outcome = (|| -> Result<(), String> {
        for run in full_runs()? {
            let dev = run.report.max_ortho_deviation;
            if dev > 1e-7 {
                return Err(format!(
                    "{} {}: max orthonormality deviation {dev:.3e} exceeds 1e-7",
                    run.dataset, run.mode
                ));
            }
        }
        Ok(())
    })();
    conclude(3, "projection stays orthonormal", outcome);
}

#[test]
fn criterion_4_kkt_three_way_classification() {
    let outcome = (|| -> Result<(), String> {
        let tol = SolverConfig::<f64>::default().sv_tolerance;
        for run in full_runs()? {
            let sol = run
                .model
                .solution
                .as_ref()
                .ok_or_else(|| format!("{} {}: training kept no solution", run.dataset, run.mode))?;
            let dist = sol.train_distances();
            let r2 = sol.r_squared;
            let band = 1e-4 * (1.0 + r2);
            for (i, (&a, &d2)) in sol.alpha.iter().zip(dist.iter()).enumerate() {
                let ok = if a <= tol {
                    d2 <= r2 + band
                } else if a >= sol.c - tol {
                    d2 >= r2 - band
                } else {
                    (d2 - r2).abs() <= band
                };
                if !ok {
                    return Err(format!(
                        "{} {}: sample {i} with alpha = {a:.2e} (C = {}) has dist_sq = {d2:.6e} \
                         against R^2 = {r2:.6e}, outside the 1e-4 band",
                        run.dataset, run.mode, sol.c
                    ));
                }
            }
        }
        Ok(())
    })();
    conclude(4, "KKT three-way classification", outcome);
}

#[test]
fn criterion_5_psi1_makes_beta_inert() {
    let outcome = (|| -> Result<(), String> {
        let path = workspace_path("datasets/iris.csv");
        let ds = load_csv::<f64>(&path, &LabelColumn::Name("class".into()), true)
            .map_err(|e| e.to_string())?;
        let one = binarize_majority(ds, Some("Iris-virginica")).map_err(|e| e.to_string())?;
        let targets = one.target_rows();
        for mode in [Mode::Linear, Mode::Kernel] {
            let kernel = match mode {
                Mode::Linear => None,
                Mode::Kernel => {
                    let sigma =
                        mean_pairwise_distance(targets.view()).map_err(|e| e.to_string())?;
                    Some(KernelSpec::new(sigma).map_err(|e| e.to_string())?)
                }
            };
            let mk = |beta: f64| HyperParams {
                c: 0.3,
                beta,
                eta: 0.1,
                d: 2,
                psi: PsiMode::Psi1,
                k_max: 50,
                seed: 9,
                kernel,
            };
            let (hot, _) = train(targets.view(), &mk(1e4), &SolverConfig::default())
                .map_err(|e| format!("{mode}, beta = 1e4: {e}"))?;
            let (cold, _) = train(targets.view(), &mk(0.0), &SolverConfig::default())
                .map_err(|e| format!("{mode}, beta = 0: {e}"))?;
            let to_value = |m: &SsvddModel<f64>| -> Result<serde_json::Value, String> {
                serde_json::from_str(&m.to_json().map_err(|e| e.to_string())?)
                    .map_err(|e| e.to_string())
            };
            let mut hot_doc = to_value(&hot)?;
            let mut cold_doc = to_value(&cold)?;
            // The hyperparameter echo records the beta that was asked for,
            // so it differs by construction; every learned quantity must not.
            hot_doc["params"]["beta"] = 0.0.into();
            cold_doc["params"]["beta"] = 0.0.into();
            if hot_doc != cold_doc {
                return Err(format!(
                    "{mode}: beta = 1e4 and beta = 0 runs serialized differently beyond the recorded beta"
                ));
            }
        }
        Ok(())
    })();
    conclude(5, "psi1 makes beta inert", outcome);
}

/// Full protocol on one dataset: 5 stratified 70/30 partitions, 5-fold CV
/// over the default grids, linear SVDD next to one subspace method. Returns
/// (subspace mean F1, svdd mean F1).
fn protocol_run(
    file: &str,
    dataset: &str,
    target: &str,
    subspace: Method,
) -> Result<(f64, f64), String> {
    let path = workspace_path(file);
    if !path.exists() {
        return Err(format!(
            "{file} is missing; run scripts/fetch_datasets.sh to regenerate it"
        ));
    }
    let ds = load_csv::<f64>(&path, &LabelColumn::Name("class".into()), false)
        .map_err(|e| format!("{dataset}: {e}"))?;
    let one: OneClassDataset<f64> =
        binarize_majority(ds, Some(target)).map_err(|e| format!("{dataset}: {e}"))?;
    let split = SplitSpec::new(0.7, 5, 7).map_err(|e| e.to_string())?;
    let opts = BenchmarkOptions { dataset: dataset.to_string(), ..BenchmarkOptions::default() };
    let report: EvalReport<f64> = benchmark(
        &one,
        &GridSpec::default(),
        &[Method::SvddLinear, subspace],
        &split,
        &opts,
        &SolverConfig::default(),
    )
    .map_err(|e| format!("{dataset}: benchmark failed: {e}"))?;
    let mean_of = |m: Method| -> Result<f64, String> {
        report
            .methods
            .iter()
            .find(|r| r.method == m)
            .map(|r| r.mean_f1)
            .ok_or_else(|| format!("{dataset}: {m} missing from the report"))
    };
    Ok((mean_of(subspace)?, mean_of(Method::SvddLinear)?))
}

#[test]
fn criterion_6_reference_f1_anchors() {
    struct Anchor {
        file: &'static str,
        dataset: &'static str,
        target: &'static str,
        subspace: Method,
        // Which of the two methods the reference mean pins down.
        anchor_on_subspace: bool,
        reference: f64,
        tolerance: f64,
    }
    let anchors = [
        Anchor {
            file: "datasets/breast_wisconsin.csv",
            dataset: "breast_wisconsin",
            target: "Malignant",
            subspace: Method::Ssvdd { mode: Mode::Linear, psi: PsiMode::Psi1 },
            anchor_on_subspace: false,
            reference: 0.958,
            tolerance: 0.05,
        },
        Anchor {
            file: "datasets/balance_scale.csv",
            dataset: "balance_scale",
            target: "L",
            subspace: Method::Ssvdd { mode: Mode::Linear, psi: PsiMode::Psi1 },
            anchor_on_subspace: true,
            reference: 0.907,
            tolerance: 0.07,
        },
        Anchor {
            file: "datasets/seeds.csv",
            dataset: "seeds",
            target: "Kama",
            subspace: Method::Ssvdd { mode: Mode::Linear, psi: PsiMode::Psi2 },
            anchor_on_subspace: true,
            reference: 0.827,
            tolerance: 0.07,
        },
    ];
    let mut lines = Vec::new();
    let mut failed = false;
    let mut ordering_holds = 0usize;
    for a in &anchors {
        match protocol_run(a.file, a.dataset, a.target, a.subspace) {
            Ok((sub_mean, svdd_mean)) => {
                let anchored = if a.anchor_on_subspace { sub_mean } else { svdd_mean };
                let in_band = (anchored - a.reference).abs() <= a.tolerance;
                if sub_mean >= svdd_mean {
                    ordering_holds += 1;
                }
                if !in_band {
                    failed = true;
                }
                lines.push(format!(
                    "{}: anchored mean F1 {anchored:.4} vs reference {} +- {} ({}); subspace {sub_mean:.4}, svdd {svdd_mean:.4}",
                    a.dataset,
                    a.reference,
                    a.tolerance,
                    if in_band { "in band" } else { "OUT OF BAND" }
                ));
            }
            Err(e) => {
                failed = true;
                lines.push(e);
            }
        }
    }
    if ordering_holds < 2 {
        failed = true;
        lines.push(format!(
            "subspace >= svdd mean F1 held on {ordering_holds} of 3 datasets, need at least 2"
        ));
    }
    let outcome = if failed { Err(lines.join("; ")) } else { Ok(()) };
    conclude(6, "reference F1 anchors", outcome);
}

#[test]
fn criterion_7_all_positive_degeneracy_flag() {
    let outcome = (|| -> Result<(), String> {
        let path = workspace_path("datasets/balance_scale.csv");
        let ds = load_csv::<f64>(&path, &LabelColumn::Name("class".into()), false)
            .map_err(|e| e.to_string())?;
        let one = binarize_majority(ds, Some("L")).map_err(|e| e.to_string())?;
        // Tiny C with a vanishing kernel width: the Gram degenerates to the
        // identity, every query scores the same distance, and the model
        // labels the whole test set positive.
        let grid = GridSpec {
            c_values: vec![0.01],
            beta_exponents: vec![0],
            sigma_exponents: vec![-3],
            d_values: Some(vec![1]),
            psi_modes: vec![PsiMode::Psi1],
            eta: 0.1,
            k_max: 50,
        };
        let split = SplitSpec::new(0.7, 5, 7).map_err(|e| e.to_string())?;
        let opts =
            BenchmarkOptions { dataset: "balance_scale".into(), ..BenchmarkOptions::default() };
        let method = Method::Ssvdd { mode: Mode::Kernel, psi: PsiMode::Psi1 };
        let report = benchmark(&one, &grid, &[method], &split, &opts, &SolverConfig::default())
            .map_err(|e| format!("benchmark failed: {e}"))?;
        let m = &report.methods[0];
        if m.all_positive_count != m.partitions.len() {
            return Err(format!(
                "only {} of {} partitions were flagged all-positive",
                m.all_positive_count,
                m.partitions.len()
            ));
        }
        for p in &m.partitions {
            let t = p.test_targets as f64;
            let o = p.test_outliers as f64;
            let expected = 2.0 * t / (2.0 * t + o);
            let dev = (p.test_f1 - expected).abs();
            if dev > 1e-12 {
                return Err(format!(
                    "partition {}: F1 {} deviates {dev:.2e} from the all-positive value {expected}",
                    p.partition, p.test_f1
                ));
            }
        }
        Ok(())
    })();
    conclude(7, "all-positive degeneracy flag", outcome);
}

#[test]
fn criterion_8_byte_identical_reruns() {
    let outcome = (|| -> Result<(), String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let bin = env!("CARGO_BIN_EXE_ssvdd");
        let iris = workspace_path("datasets/iris.csv");
        let iris = iris.to_str().expect("utf-8 path");

        let run = |args: &[&str]| -> Result<(), String> {
            let out = Command::new(bin)
                .args(args)
                .env_remove("SSVDD_SEED")
                .env_remove("SSVDD_JOBS")
                .output()
                .map_err(|e| e.to_string())?;
            if !out.status.success() {
                return Err(format!(
                    "ssvdd {} exited with {:?}: {}",
                    args.join(" "),
                    out.status.code(),
                    String::from_utf8_lossy(&out.stderr).trim()
                ));
            }
            Ok(())
        };
        let path_of = |name: &str| {
            dir.path().join(name).to_str().expect("utf-8 path").to_string()
        };

        let a = path_of("bench.csv");
        let b = path_of("bench_rerun.csv");
        run(&[
            "benchmark", "--input", iris, "--label", "class", "--target", "Iris-virginica",
            "--methods", "svdd-linear,ssvdd-linear-psi2", "--c-grid", "0.3,0.5",
            "--beta-exponents", "0,2", "--d-grid", "1,2", "--kmax", "20", "--seed", "13",
            "--jobs", "1", "--format", "csv", "--output", &a,
        ])?;
        run(&["rerun", "--config", &a, "--output", &b, "--jobs", "3"])?;
        if fs::read(&a).map_err(|e| e.to_string())? != fs::read(&b).map_err(|e| e.to_string())? {
            return Err(
                "rerunning the benchmark from its embedded config with a different --jobs \
                 changed the output bytes"
                    .into(),
            );
        }

        let m1 = path_of("model.json");
        let m2 = path_of("model_rerun.json");
        let r1 = path_of("train_report.json");
        run(&[
            "train", "--input", iris, "--label", "class", "--target", "Iris-virginica",
            "--mode", "kernel", "--sigma-scale", "1.0", "--C", "0.3", "--d", "2", "--psi", "3",
            "--kmax", "15", "--seed", "5", "--output", &m1, "--report", &r1,
        ])?;
        run(&["rerun", "--config", &m1, "--output", &m2])?;
        if fs::read(&m1).map_err(|e| e.to_string())? != fs::read(&m2).map_err(|e| e.to_string())?
        {
            return Err("rerunning training from its embedded config changed the model bytes".into());
        }
        Ok(())
    })();
    conclude(8, "byte-identical reruns", outcome);
}
