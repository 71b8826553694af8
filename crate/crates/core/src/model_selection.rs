//! Grid search with stratified 5-fold cross-validation and the
//! multi-partition benchmark runner.
//!
//! Reproducibility conventions: partition shuffles use rng streams
//! 0..partition_count of the experiment seed; fold assignment for partition
//! p uses stream 1000 + p. Candidate evaluation parallelizes over the grid
//! but reduces in enumeration order, so results do not depend on thread
//! count or on the order methods are requested in.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{
    make_partitions, mean_pairwise_distance, BinaryLabel, OneClassDataset, Scaler, SplitSpec,
};
use crate::error::{Error, Result};
use crate::kernel::{linear_gram, rbf_cross, rbf_gram, KernelSpec};
use crate::metrics::f1_from_predictions;
use crate::report::{EvalReport, MethodReport, PartitionOutcome};
use crate::scalar::Real;
use crate::subspace::{train as train_subspace, HyperParams, Mode, PsiMode, SsvddModel};
use crate::svdd::{classify, solve_or_recover, SolverConfig, SvddSolution};

const FOLD_STREAM_OFFSET: u64 = 1000;
const FEASIBILITY_SLACK: f64 = 1e-12;

/// The ten benchmarked method configurations: plain data descriptions in
/// the original space and subspace variants under each regularizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    SvddLinear,
    SvddKernel,
    Ssvdd { mode: Mode, psi: PsiMode },
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::SvddLinear,
        Method::SvddKernel,
        Method::Ssvdd { mode: Mode::Linear, psi: PsiMode::Psi1 },
        Method::Ssvdd { mode: Mode::Linear, psi: PsiMode::Psi2 },
        Method::Ssvdd { mode: Mode::Linear, psi: PsiMode::Psi3 },
        Method::Ssvdd { mode: Mode::Linear, psi: PsiMode::Psi4 },
        Method::Ssvdd { mode: Mode::Kernel, psi: PsiMode::Psi1 },
        Method::Ssvdd { mode: Mode::Kernel, psi: PsiMode::Psi2 },
        Method::Ssvdd { mode: Mode::Kernel, psi: PsiMode::Psi3 },
        Method::Ssvdd { mode: Mode::Kernel, psi: PsiMode::Psi4 },
    ];

    pub fn mode(&self) -> Mode {
        match self {
            Method::SvddLinear => Mode::Linear,
            Method::SvddKernel => Mode::Kernel,
            Method::Ssvdd { mode, .. } => *mode,
        }
    }

    pub fn psi(&self) -> Option<PsiMode> {
        match self {
            Method::Ssvdd { psi, .. } => Some(*psi),
            _ => None,
        }
    }

    pub fn is_subspace(&self) -> bool {
        matches!(self, Method::Ssvdd { .. })
    }

    fn rank(&self) -> usize {
        Method::ALL.iter().position(|m| m == self).expect("ALL covers every method")
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::SvddLinear => write!(f, "svdd-linear"),
            Method::SvddKernel => write!(f, "svdd-kernel"),
            Method::Ssvdd { mode, psi } => write!(f, "ssvdd-{mode}-{psi}"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("ssvdd-") {
            let (mode, psi) = rest
                .split_once('-')
                .ok_or_else(|| Error::config(format!("unknown method \"{s}\"")))?;
            return Ok(Method::Ssvdd { mode: mode.parse()?, psi: psi.parse()? });
        }
        match s {
            "svdd-linear" => Ok(Method::SvddLinear),
            "svdd-kernel" => Ok(Method::SvddKernel),
            other => Err(Error::config(format!("unknown method \"{other}\""))),
        }
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The search grid plus the training constants every candidate shares.
/// β is searched as 10^l over `beta_exponents`; σ as 10^l times the mean
/// pairwise distance of the training targets over `sigma_exponents`;
/// `d_values: None` derives 1..=min(10, bound) from the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: serde::de::DeserializeOwned"))]
pub struct GridSpec<F: Real> {
    pub c_values: Vec<F>,
    pub beta_exponents: Vec<i32>,
    pub sigma_exponents: Vec<i32>,
    pub d_values: Option<Vec<usize>>,
    pub psi_modes: Vec<PsiMode>,
    pub eta: F,
    pub k_max: usize,
}

impl<F: Real> Default for GridSpec<F> {
    fn default() -> Self {
        GridSpec {
            c_values: [0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6]
                .iter()
                .map(|&c| F::cast(c))
                .collect(),
            beta_exponents: (-4..=4).collect(),
            sigma_exponents: (-3..=3).collect(),
            d_values: None,
            psi_modes: PsiMode::ALL.to_vec(),
            eta: F::cast(0.1),
            k_max: 50,
        }
    }
}

impl<F: Real> GridSpec<F> {
    pub fn validate(&self) -> Result<()> {
        if self.c_values.is_empty() {
            return Err(Error::config("C grid is empty".to_string()));
        }
        for &c in &self.c_values {
            if !(c > F::zero() && c <= F::one()) {
                return Err(Error::config(format!("C grid value {c} outside (0, 1]")));
            }
        }
        if self.beta_exponents.is_empty() {
            return Err(Error::config("beta exponent grid is empty".to_string()));
        }
        if self.sigma_exponents.is_empty() {
            return Err(Error::config("sigma exponent grid is empty".to_string()));
        }
        if self.psi_modes.is_empty() {
            return Err(Error::config("psi mode list is empty".to_string()));
        }
        if let Some(ds) = &self.d_values {
            if ds.is_empty() || ds.contains(&0) {
                return Err(Error::config("d grid must be nonempty and positive".to_string()));
            }
        }
        if !(self.eta >= F::zero() && self.eta.is_finite()) {
            return Err(Error::config(format!("eta must be nonnegative, got {}", self.eta)));
        }
        if self.k_max == 0 {
            return Err(Error::config("k_max must be positive".to_string()));
        }
        Ok(())
    }
}

/// One grid point. Fields a method does not use stay `None` (d and β for
/// plain SVDD, σ for linear modes). Under Ψ1 the regularizer is inert, so
/// the β axis collapses to a single `None` entry rather than re-running an
/// identical model nine times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: serde::de::DeserializeOwned"))]
pub struct CandidateParams<F: Real> {
    pub c: F,
    pub d: Option<usize>,
    pub beta: Option<F>,
    pub sigma: Option<F>,
    pub sigma_exponent: Option<i32>,
}

impl<F: Real> CandidateParams<F> {
    fn hyper_params(&self, psi: PsiMode, grid: &GridSpec<F>, seed: u64) -> HyperParams<F> {
        HyperParams {
            c: self.c,
            beta: self.beta.unwrap_or_else(F::zero),
            eta: grid.eta,
            d: self.d.expect("subspace candidates carry d"),
            psi,
            k_max: grid.k_max,
            seed,
            kernel: self.sigma.map(|sigma| KernelSpec { sigma }),
        }
    }
}

/// Enumeration order is the documented tie-break: smaller d, then smaller
/// C, then smaller β, then smaller σ exponent; earlier candidates win ties.
fn enumerate_candidates<F: Real>(
    method: Method,
    grid: &GridSpec<F>,
    d_bound: usize,
    base_sigma: Option<F>,
) -> Result<Vec<CandidateParams<F>>> {
    let sigmas: Vec<(Option<i32>, Option<F>)> = if method.mode() == Mode::Kernel {
        let base = base_sigma.ok_or_else(|| Error::Internal {
            detail: "kernel method enumerated without a base sigma".into(),
        })?;
        grid.sigma_exponents
            .iter()
            .map(|&l| (Some(l), Some(base * F::cast(10f64.powi(l)))))
            .collect()
    } else {
        vec![(None, None)]
    };
    let betas: Vec<Option<F>> = match method.psi() {
        None | Some(PsiMode::Psi1) => vec![None],
        Some(_) => grid.beta_exponents.iter().map(|&l| Some(F::cast(10f64.powi(l)))).collect(),
    };
    let ds: Vec<Option<usize>> = if method.is_subspace() {
        let listed = match &grid.d_values {
            Some(ds) => ds.clone(),
            None => (1..=d_bound.min(10)).collect(),
        };
        let admissible: Vec<Option<usize>> =
            listed.into_iter().filter(|&d| d <= d_bound).map(Some).collect();
        if admissible.is_empty() {
            return Err(Error::config(format!(
                "no admissible subspace dimension ≤ {d_bound} for {method}"
            )));
        }
        admissible
    } else {
        vec![None]
    };

    let mut out = Vec::new();
    for &d in &ds {
        for &c in &grid.c_values {
            for &beta in &betas {
                for &(sigma_exponent, sigma) in &sigmas {
                    out.push(CandidateParams { c, d, beta, sigma, sigma_exponent });
                }
            }
        }
    }
    Ok(out)
}

/// Fold id per row, stratified over the binary label so every fold sees
/// validation positives.
fn stratified_folds(
    is_target: &[bool],
    folds: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::config(format!("cross-validation needs at least 2 folds, got {folds}")));
    }
    let mut assignment = vec![0usize; is_target.len()];
    for class in [true, false] {
        let mut idx: Vec<usize> =
            (0..is_target.len()).filter(|&i| is_target[i] == class).collect();
        idx.shuffle(rng);
        for (pos, row) in idx.into_iter().enumerate() {
            assignment[row] = pos % folds;
        }
    }
    for f in 0..folds {
        let in_fold = assignment
            .iter()
            .zip(is_target)
            .filter(|&(&a, &t)| a == f && t)
            .count();
        if in_fold == 0 {
            return Err(Error::DegenerateFold { fold: f });
        }
        let train_targets = is_target.iter().filter(|&&t| t).count() - in_fold;
        if train_targets < 2 {
            return Err(Error::DegenerateFold { fold: f });
        }
    }
    Ok(assignment)
}

struct FoldData<F: Real> {
    train_targets: Array2<F>,
    val_rows: Array2<F>,
    val_truth: Vec<bool>,
}

/// A model in scoring form, whatever trained it.
enum Fitted<F: Real> {
    Subspace(SsvddModel<F>),
    /// Plain SVDD in the original space: the sphere lives there directly.
    Centered { center: Array1<F>, r_squared: F },
    /// Plain SVDD in the kernel-induced space: distances need the stored
    /// rows and dual weights, there is no explicit center.
    KernelSvdd { rows: Array2<F>, spec: KernelSpec<F>, sol: SvddSolution<F> },
}

impl<F: Real> Fitted<F> {
    fn predict_targets(&self, q: ArrayView2<'_, F>) -> Result<Vec<bool>> {
        match self {
            Fitted::Subspace(model) => Ok(model
                .predict(q)?
                .into_iter()
                .map(|p| p.label == BinaryLabel::Target)
                .collect()),
            Fitted::Centered { center, r_squared } => {
                if q.ncols() != center.len() {
                    return Err(Error::schema(format!(
                        "query has {} feature columns, model expects {}",
                        q.ncols(),
                        center.len()
                    )));
                }
                Ok(q.axis_iter(Axis(0))
                    .map(|row| {
                        let mut dist = F::zero();
                        for (v, c) in row.iter().zip(center.iter()) {
                            let diff = *v - *c;
                            dist += diff * diff;
                        }
                        classify(dist, *r_squared) == BinaryLabel::Target
                    })
                    .collect())
            }
            Fitted::KernelSvdd { rows, spec, sol } => {
                let k_star = rbf_cross(rows.view(), q, *spec)?;
                let mut out = Vec::with_capacity(q.nrows());
                for col in k_star.columns() {
                    let dist = sol.distance_sq(col, F::one())?;
                    out.push(classify(dist, sol.r_squared) == BinaryLabel::Target);
                }
                Ok(out)
            }
        }
    }
}

#[derive(Default)]
struct FitDiag {
    solver_failures: usize,
    rank_rerandomizations: usize,
}

fn fit_candidate<F: Real>(
    train_targets: ArrayView2<'_, F>,
    method: Method,
    cand: &CandidateParams<F>,
    grid: &GridSpec<F>,
    seed: u64,
    cfg: &SolverConfig<F>,
) -> Result<(Fitted<F>, FitDiag)> {
    let mut diag = FitDiag::default();
    let fitted = match method {
        Method::SvddLinear => {
            let gram = linear_gram(train_targets);
            let (sol, recovered) = solve_or_recover(gram.view(), cand.c, cfg)?;
            diag.solver_failures += recovered as usize;
            let center = train_targets.t().dot(&sol.alpha);
            Fitted::Centered { center, r_squared: sol.r_squared }
        }
        Method::SvddKernel => {
            let spec = KernelSpec::new(cand.sigma.expect("kernel candidates carry sigma"))?;
            let gram = rbf_gram(train_targets, spec)?;
            let (sol, recovered) = solve_or_recover(gram.view(), cand.c, cfg)?;
            diag.solver_failures += recovered as usize;
            Fitted::KernelSvdd { rows: train_targets.to_owned(), spec, sol }
        }
        Method::Ssvdd { psi, .. } => {
            let params = cand.hyper_params(psi, grid, seed);
            let (model, report) = train_subspace(train_targets, &params, cfg)?;
            diag.solver_failures += report.solver_recoveries;
            diag.rank_rerandomizations += report.rank_rerandomizations;
            Fitted::Subspace(model)
        }
    };
    Ok((fitted, diag))
}

/// Outcome of a grid search for one method on one training split.
#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome<F: Real> {
    pub winner: CandidateParams<F>,
    pub cv_f1: F,
    pub solver_failures: usize,
    pub rank_rerandomizations: usize,
    pub infeasible_candidates: usize,
    pub evaluations: usize,
}

#[allow(clippy::too_many_arguments)]
fn cv_method<F: Real>(
    features: ArrayView2<'_, F>,
    is_target: &[bool],
    method: Method,
    grid: &GridSpec<F>,
    base_sigma: Option<F>,
    folds: usize,
    seed: u64,
    fold_stream: u64,
    cfg: &SolverConfig<F>,
) -> Result<CvOutcome<F>> {
    if features.nrows() != is_target.len() {
        return Err(Error::schema(format!(
            "{} rows but {} labels",
            features.nrows(),
            is_target.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fold_stream);
    let assignment = stratified_folds(is_target, folds, &mut rng)?;

    let fold_data: Vec<FoldData<F>> = (0..folds)
        .map(|f| {
            let train_idx: Vec<usize> = (0..is_target.len())
                .filter(|&i| assignment[i] != f && is_target[i])
                .collect();
            let val_idx: Vec<usize> =
                (0..is_target.len()).filter(|&i| assignment[i] == f).collect();
            FoldData {
                train_targets: features.select(Axis(0), &train_idx),
                val_rows: features.select(Axis(0), &val_idx),
                val_truth: val_idx.iter().map(|&i| is_target[i]).collect(),
            }
        })
        .collect();
    let min_train_targets =
        fold_data.iter().map(|f| f.train_targets.nrows()).min().unwrap_or(0);

    let d_bound = match method.mode() {
        Mode::Linear => features.ncols(),
        Mode::Kernel => min_train_targets,
    };
    let candidates = enumerate_candidates(method, grid, d_bound, base_sigma)?;
    let feasible = |c: F| (min_train_targets as f64) * c.as_f64() >= 1.0 - FEASIBILITY_SLACK;
    let infeasible_candidates = candidates.iter().filter(|cand| !feasible(cand.c)).count();

    // Score in parallel, reduce in enumeration order.
    let scored: Vec<Option<Result<(F, FitDiag)>>> = candidates
        .par_iter()
        .map(|cand| {
            if !feasible(cand.c) {
                return None;
            }
            let mut diag = FitDiag::default();
            let mut total = F::zero();
            for fold in &fold_data {
                let run = (|| -> Result<F> {
                    let (fitted, fit_diag) =
                        fit_candidate(fold.train_targets.view(), method, cand, grid, seed, cfg)?;
                    diag.solver_failures += fit_diag.solver_failures;
                    diag.rank_rerandomizations += fit_diag.rank_rerandomizations;
                    let predicted = fitted.predict_targets(fold.val_rows.view())?;
                    Ok(F::cast(f1_from_predictions(&predicted, &fold.val_truth)?.f1))
                })();
                match run {
                    Ok(f1) => total += f1,
                    Err(e) => return Some(Err(e)),
                }
            }
            Some(Ok((total / F::cast(folds as f64), diag)))
        })
        .collect();

    let mut winner: Option<(usize, F)> = None;
    let mut solver_failures = 0;
    let mut rank_rerandomizations = 0;
    let mut evaluations = 0;
    for (idx, slot) in scored.into_iter().enumerate() {
        let Some(res) = slot else { continue };
        let (score, diag) = res?;
        solver_failures += diag.solver_failures;
        rank_rerandomizations += diag.rank_rerandomizations;
        evaluations += folds;
        if winner.map_or(true, |(_, best)| score > best) {
            winner = Some((idx, score));
        }
    }
    let (idx, cv_f1) = winner.ok_or_else(|| {
        Error::config(format!(
            "every grid candidate for {method} is infeasible: the smallest fold has \
             {min_train_targets} training targets and N·C ≥ 1 must hold"
        ))
    })?;
    Ok(CvOutcome {
        winner: candidates[idx],
        cv_f1,
        solver_failures,
        rank_rerandomizations,
        infeasible_candidates,
        evaluations,
    })
}

/// Aggregate diagnostics of a standalone grid search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: serde::de::DeserializeOwned"))]
pub struct CvSummary<F: Real> {
    pub cv_f1: F,
    pub solver_failures: usize,
    pub rank_rerandomizations: usize,
    pub infeasible_candidates: usize,
    pub evaluations: usize,
}

/// Grid search over the subspace methods of one mode, searching ψ together
/// with the grid axes; rows are used as given (standardize beforehand if
/// desired). Returns the full training recipe for the winner.
///
/// Ties break toward the earlier ψ in `grid.psi_modes`, then the earlier
/// candidate in enumeration order (smaller d, C, β, σ exponent).
pub fn cross_validate<F: Real>(
    ds: &OneClassDataset<F>,
    grid: &GridSpec<F>,
    mode: Mode,
    folds: usize,
    seed: u64,
    cfg: &SolverConfig<F>,
) -> Result<(HyperParams<F>, CvSummary<F>)> {
    grid.validate()?;
    cfg.validate()?;
    let features = ds.base.features.view();
    let is_target: Vec<bool> = (0..ds.base.n_rows()).map(|i| ds.is_target(i)).collect();
    let base_sigma = match mode {
        Mode::Kernel => Some(target_sigma_base(&ds.target_rows())?),
        Mode::Linear => None,
    };
    let mut best: Option<(PsiMode, CvOutcome<F>)> = None;
    let mut summary = CvSummary {
        cv_f1: F::zero(),
        solver_failures: 0,
        rank_rerandomizations: 0,
        infeasible_candidates: 0,
        evaluations: 0,
    };
    for &psi in &grid.psi_modes {
        let outcome = cv_method(
            features,
            &is_target,
            Method::Ssvdd { mode, psi },
            grid,
            base_sigma,
            folds,
            seed,
            FOLD_STREAM_OFFSET,
            cfg,
        )?;
        summary.solver_failures += outcome.solver_failures;
        summary.rank_rerandomizations += outcome.rank_rerandomizations;
        summary.infeasible_candidates += outcome.infeasible_candidates;
        summary.evaluations += outcome.evaluations;
        if best.as_ref().map_or(true, |(_, b)| outcome.cv_f1 > b.cv_f1) {
            best = Some((psi, outcome));
        }
    }
    let (psi, outcome) = best.expect("psi_modes is nonempty after validation");
    summary.cv_f1 = outcome.cv_f1;
    Ok((outcome.winner.hyper_params(psi, grid, seed), summary))
}

fn target_sigma_base<F: Real>(target_rows: &Array2<F>) -> Result<F> {
    let base = mean_pairwise_distance(target_rows.view())?;
    if base <= F::zero() {
        return Err(Error::InsufficientData {
            detail: "target rows are identical; kernel bandwidths need a positive mean distance"
                .to_string(),
        });
    }
    Ok(base)
}

/// Settings the benchmark runner does not search over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkOptions {
    pub folds: usize,
    /// Standardize per partition on its training rows.
    pub standardize: bool,
    /// Sample (n − 1) standard deviation instead of population.
    pub sample_std: bool,
    /// Label for report rows.
    pub dataset: String,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        BenchmarkOptions {
            folds: 5,
            standardize: true,
            sample_std: false,
            dataset: "dataset".to_string(),
        }
    }
}

/// Full experimental loop: for each stratified partition, grid-search every
/// requested method on the training side, retrain each winner on all
/// training targets, and score on the held-out side. Methods are reported
/// in canonical order whatever order they were requested in.
pub fn benchmark<F: Real>(
    ds: &OneClassDataset<F>,
    grid: &GridSpec<F>,
    methods: &[Method],
    split: &SplitSpec,
    opts: &BenchmarkOptions,
    cfg: &SolverConfig<F>,
) -> Result<EvalReport<F>> {
    grid.validate()?;
    cfg.validate()?;
    let mut methods: Vec<Method> = methods.to_vec();
    methods.sort_by_key(Method::rank);
    methods.dedup();

    let partitions = make_partitions(ds, split)?;
    let needs_sigma = methods.iter().any(|m| m.mode() == Mode::Kernel);

    let mut outcomes: Vec<Vec<PartitionOutcome<F>>> = vec![Vec::new(); methods.len()];
    let mut diags: Vec<(usize, usize, usize, usize)> = vec![(0, 0, 0, 0); methods.len()];

    for (p_idx, part) in partitions.iter().enumerate() {
        let train_rows = ds.base.features.select(Axis(0), &part.train);
        let test_rows = ds.base.features.select(Axis(0), &part.test);
        let train_is_target: Vec<bool> = part.train.iter().map(|&i| ds.is_target(i)).collect();
        let test_truth: Vec<bool> = part.test.iter().map(|&i| ds.is_target(i)).collect();

        let scaler = opts.standardize.then(|| Scaler::fit(train_rows.view()));
        let (train_std, test_std) = match &scaler {
            Some(s) => (s.transformed(train_rows.view()), s.transformed(test_rows.view())),
            None => (train_rows, test_rows),
        };
        let target_idx: Vec<usize> = (0..train_std.nrows())
            .filter(|&i| train_is_target[i])
            .collect();
        let train_targets = train_std.select(Axis(0), &target_idx);
        let base_sigma =
            if needs_sigma { Some(target_sigma_base(&train_targets)?) } else { None };

        for (m_idx, &method) in methods.iter().enumerate() {
            let sigma = (method.mode() == Mode::Kernel).then(|| base_sigma).flatten();
            let cv = cv_method(
                train_std.view(),
                &train_is_target,
                method,
                grid,
                sigma,
                opts.folds,
                split.seed,
                FOLD_STREAM_OFFSET + p_idx as u64,
                cfg,
            )?;
            let (fitted, fit_diag) =
                fit_candidate(train_targets.view(), method, &cv.winner, grid, split.seed, cfg)?;
            let predicted = fitted.predict_targets(test_std.view())?;
            let scores = f1_from_predictions(&predicted, &test_truth)?;
            let all_positive = predicted.iter().all(|&p| p);
            outcomes[m_idx].push(PartitionOutcome {
                partition: p_idx,
                winner: cv.winner,
                cv_f1: cv.cv_f1,
                test_precision: F::cast(scores.precision),
                test_recall: F::cast(scores.recall),
                test_f1: F::cast(scores.f1),
                all_positive,
                test_targets: test_truth.iter().filter(|&&t| t).count(),
                test_outliers: test_truth.iter().filter(|&&t| !t).count(),
            });
            let d = &mut diags[m_idx];
            d.0 += cv.solver_failures + fit_diag.solver_failures;
            d.1 += cv.rank_rerandomizations + fit_diag.rank_rerandomizations;
            d.2 += cv.infeasible_candidates;
            d.3 += cv.evaluations;
        }
    }

    let method_reports = methods
        .iter()
        .zip(outcomes)
        .zip(diags)
        .map(|((&method, parts), diag)| {
            let mut report = MethodReport::from_partitions(method, parts, opts.sample_std);
            report.solver_failures = diag.0;
            report.rank_rerandomizations = diag.1;
            report.infeasible_candidates = diag.2;
            report.evaluations = diag.3;
            report
        })
        .collect();

    Ok(EvalReport {
        dataset: opts.dataset.clone(),
        target_class: ds.base.class_names[ds.positive_class].clone(),
        sample_std: opts.sample_std,
        partitions,
        methods: method_reports,
    })
}
