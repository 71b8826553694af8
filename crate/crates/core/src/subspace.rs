//! Subspace SVDD: learn a projection (Q for raw features, W for kernel
//! coefficients) jointly with the data description by alternating dual
//! solves with gradient steps on the projection, re-orthonormalizing after
//! every step.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{BinaryLabel, Scaler};
use crate::error::{Error, Result};
use crate::kernel::{rbf_cross, rbf_gram, KernelSpec};
use crate::scalar::Real;
use crate::svdd::{classify, solve_or_recover, SolverConfig, SvddSolution};

/// Which samples feed the Ψ regularizer through λ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PsiMode {
    /// λ = 0: the regularizer is inert.
    Psi1,
    /// λ = 1: every training sample contributes equally.
    Psi2,
    /// λ = α: boundary and outlier support vectors contribute.
    Psi3,
    /// λᵢ = αᵢ only for boundary support vectors (tol < αᵢ < C − tol).
    Psi4,
}

impl PsiMode {
    pub const ALL: [PsiMode; 4] = [PsiMode::Psi1, PsiMode::Psi2, PsiMode::Psi3, PsiMode::Psi4];
}

impl fmt::Display for PsiMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = match self {
            PsiMode::Psi1 => 1,
            PsiMode::Psi2 => 2,
            PsiMode::Psi3 => 3,
            PsiMode::Psi4 => 4,
        };
        write!(f, "psi{n}")
    }
}

impl FromStr for PsiMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().trim_start_matches("psi") {
            "1" => Ok(PsiMode::Psi1),
            "2" => Ok(PsiMode::Psi2),
            "3" => Ok(PsiMode::Psi3),
            "4" => Ok(PsiMode::Psi4),
            other => Err(Error::config(format!("unknown psi mode \"{other}\""))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Linear,
    Kernel,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Linear => write!(f, "linear"),
            Mode::Kernel => write!(f, "kernel"),
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "linear" => Ok(Mode::Linear),
            "kernel" => Ok(Mode::Kernel),
            other => Err(Error::config(format!("unknown mode \"{other}\""))),
        }
    }
}

/// Training hyperparameters. `kernel: None` selects linear mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: serde::de::DeserializeOwned"))]
pub struct HyperParams<F: Real> {
    pub c: F,
    pub beta: F,
    pub eta: F,
    pub d: usize,
    pub psi: PsiMode,
    pub k_max: usize,
    pub seed: u64,
    pub kernel: Option<KernelSpec<F>>,
}

impl<F: Real> HyperParams<F> {
    pub fn mode(&self) -> Mode {
        if self.kernel.is_some() {
            Mode::Kernel
        } else {
            Mode::Linear
        }
    }

    /// Checks ranges that don't depend on the data. The d-vs-dimension bound
    /// is checked at train time when the domain size is known.
    pub fn validate(&self) -> Result<()> {
        if !(self.c > F::zero() && self.c <= F::one()) {
            return Err(Error::config(format!("C must lie in (0, 1], got {}", self.c)));
        }
        if !(self.beta >= F::zero() && self.beta.is_finite()) {
            return Err(Error::config(format!("beta must be nonnegative, got {}", self.beta)));
        }
        if !(self.eta >= F::zero() && self.eta.is_finite()) {
            return Err(Error::config(format!("eta must be nonnegative, got {}", self.eta)));
        }
        if self.d == 0 {
            return Err(Error::config("d must be positive".to_string()));
        }
        if self.k_max == 0 {
            return Err(Error::config("k_max must be positive".to_string()));
        }
        if let Some(k) = &self.kernel {
            KernelSpec::new(k.sigma)?;
        }
        Ok(())
    }
}

/// Per-iteration diagnostics of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: serde::de::DeserializeOwned"))]
pub struct TrainReport<F: Real> {
    /// Gradient iterations executed (k_max − 1).
    pub iterations: usize,
    /// Augmented objective at each dual solve, final solve included.
    pub objective_trace: Vec<F>,
    /// Rows re-drawn after a rank-deficient orthonormalization.
    pub rank_rerandomizations: usize,
    /// Dual solves salvaged from the best iterate after budget exhaustion.
    pub solver_recoveries: usize,
    /// Max ‖P Pᵀ − I‖_max observed across all orthonormalizations.
    pub max_ortho_deviation: F,
    pub boundary_sv_count: usize,
    pub outlier_sv_count: usize,
}

/// A trained subspace data description.
///
/// Everything needed at test time is serialized: the projection, dual
/// weights, squared radius, subspace center, standardization statistics and
/// (kernel mode) the training rows that k_* is formed against. The fitted
/// [`SvddSolution`] is kept for in-memory inspection but not serialized;
/// loaded models score queries through the center form of the distance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: serde::de::DeserializeOwned"))]
pub struct SsvddModel<F: Real> {
    pub mode: Mode,
    pub params: HyperParams<F>,
    #[serde(with = "serde_matrix")]
    pub projection: Array2<F>,
    #[serde(with = "serde_vector")]
    pub alpha: Array1<F>,
    pub r_squared: F,
    /// Center of the sphere in the subspace: Σ αᵢ yᵢ.
    #[serde(with = "serde_vector")]
    pub center: Array1<F>,
    pub scaler: Option<Scaler<F>>,
    #[serde(with = "serde_opt_matrix")]
    pub train_rows: Option<Array2<F>>,
    #[serde(skip)]
    pub solution: Option<SvddSolution<F>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction<F: Real> {
    pub label: BinaryLabel,
    pub dist_sq: F,
}

/// d × domain_cols matrix with i.i.d. standard normal entries from the
/// seeded stream, then orthonormalized.
pub fn init_projection<F: Real>(d: usize, domain_cols: usize, seed: u64) -> Result<Array2<F>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    init_with_rng(d, domain_cols, &mut rng)
}

fn init_with_rng<F: Real>(d: usize, domain_cols: usize, rng: &mut ChaCha8Rng) -> Result<Array2<F>> {
    if d > domain_cols {
        return Err(Error::config(format!(
            "subspace dimension {d} exceeds the projection domain of {domain_cols} columns; \
             d ≤ {domain_cols} is required"
        )));
    }
    let raw = random_matrix(d, domain_cols, rng);
    let mut count = 0;
    orthonormalize_recovering(raw, rng, &mut count)
}

fn random_matrix<F: Real>(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<F> {
    // Entries are drawn as f64 and narrowed, so the stream of draws (and
    // hence the initialization) is identical for every scalar type.
    Array2::from_shape_fn((rows, cols), |_| {
        F::cast(rng.sample::<f64, _>(rand_distr::StandardNormal))
    })
}

/// QR-orthogonalizes the row space of M, then row-normalizes — both steps
/// executed literally even though the second is a near-no-op after QR.
/// Rank deficiency is an error; training recovers by re-drawing rows.
pub fn orthonormalize<F: Real>(m: ArrayView2<'_, F>) -> Result<Array2<F>> {
    let (d, cols) = m.dim();
    if d > cols {
        return Err(Error::config(format!("cannot orthonormalize {d} rows in {cols} columns")));
    }
    // Householder QR of A = Mᵀ (cols × d); the Q factor's columns are the
    // orthonormalized rows.
    let mut a = m.t().to_owned();
    let scale = a
        .columns()
        .into_iter()
        .map(|col| col.dot(&col).sqrt())
        .fold(F::zero(), F::max);
    if scale == F::zero() {
        return Err(Error::DegenerateProjection { row: 0 });
    }
    let tol = scale * F::epsilon() * F::cast(cols.max(d) as f64);
    let mut reflectors: Vec<Array1<F>> = Vec::with_capacity(d);
    for k in 0..d {
        let norm = {
            let col = a.column(k);
            col.slice(ndarray::s![k..]).dot(&col.slice(ndarray::s![k..])).sqrt()
        };
        if norm <= tol {
            return Err(Error::DegenerateProjection { row: k });
        }
        let mut v = Array1::zeros(cols - k);
        v.assign(&a.column(k).slice(ndarray::s![k..]));
        let sign = if v[0] >= F::zero() { F::one() } else { -F::one() };
        v[0] += sign * norm;
        let vnorm_sq = v.dot(&v);
        if vnorm_sq > F::zero() {
            let two = F::cast(2.0);
            for j in k..d {
                let mut col = a.column_mut(j);
                let mut tail = col.slice_mut(ndarray::s![k..]);
                let coeff = two * tail.dot(&v) / vnorm_sq;
                tail.scaled_add(-coeff, &v);
            }
        }
        reflectors.push(v);
    }
    // Accumulate Q by applying the reflectors to the first d identity
    // columns in reverse, then fix signs so R's diagonal is positive.
    let mut q: Array2<F> = Array2::zeros((cols, d));
    for i in 0..d {
        q[[i, i]] = F::one();
    }
    let two = F::cast(2.0);
    for k in (0..d).rev() {
        let v = &reflectors[k];
        let vnorm_sq = v.dot(v);
        if vnorm_sq == F::zero() {
            continue;
        }
        for j in 0..d {
            let mut col = q.column_mut(j);
            let mut tail = col.slice_mut(ndarray::s![k..]);
            let coeff = two * tail.dot(v) / vnorm_sq;
            tail.scaled_add(-coeff, v);
        }
    }
    let mut out = q.t().to_owned();
    for (k, mut row) in out.rows_mut().into_iter().enumerate() {
        if a[[k, k]] < F::zero() {
            row.map_inplace(|v| *v = -*v);
        }
    }
    // The literal row-normalization step.
    for mut row in out.rows_mut() {
        let norm = row.dot(&row).sqrt();
        row.map_inplace(|v| *v = *v / norm);
    }
    Ok(out)
}

fn orthonormalize_recovering<F: Real>(
    mut m: Array2<F>,
    rng: &mut ChaCha8Rng,
    rerandomized: &mut usize,
) -> Result<Array2<F>> {
    for _ in 0..64 {
        match orthonormalize(m.view()) {
            Ok(out) => return Ok(out),
            Err(Error::DegenerateProjection { row }) => {
                let cols = m.ncols();
                m.row_mut(row).assign(&random_matrix(1, cols, rng).row(0));
                *rerandomized += 1;
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::Internal {
        detail: "projection stayed rank-deficient after repeated re-randomization".into(),
    })
}

/// λ per Ψ mode; `sv_tol` is the same margin the solver used to classify
/// support vectors.
pub fn lambda_vector<F: Real>(
    psi: PsiMode,
    alpha: ArrayView1<'_, F>,
    c: F,
    sv_tol: F,
) -> Array1<F> {
    match psi {
        PsiMode::Psi1 => Array1::zeros(alpha.len()),
        PsiMode::Psi2 => Array1::ones(alpha.len()),
        PsiMode::Psi3 => alpha.to_owned(),
        PsiMode::Psi4 => Array1::from_shape_fn(alpha.len(), |i| {
            if alpha[i] > sv_tol && alpha[i] < c - sv_tol {
                alpha[i]
            } else {
                F::zero()
            }
        }),
    }
}

fn check_gradient_shapes<F: Real>(
    m_cols: ArrayView2<'_, F>,
    p: ArrayView2<'_, F>,
    alpha: ArrayView1<'_, F>,
    lambda: ArrayView1<'_, F>,
) -> Result<()> {
    if p.ncols() != m_cols.nrows() {
        return Err(Error::schema(format!(
            "projection acts on {} columns but the domain matrix has {} rows",
            p.ncols(),
            m_cols.nrows()
        )));
    }
    if alpha.len() != m_cols.ncols() || lambda.len() != m_cols.ncols() {
        return Err(Error::schema(format!(
            "alpha/lambda lengths {}/{} do not match {} samples",
            alpha.len(),
            lambda.len(),
            m_cols.ncols()
        )));
    }
    Ok(())
}

/// Shared form of Eqs. 15–16 and their kernel analogue: with samples as the
/// columns mᵢ of M and weighted column sums s = Mα, v = Mλ,
/// ΔL = 2 P (M diag(α) Mᵀ − s sᵀ) + 2β (P v) vᵀ.
fn gradient_impl<F: Real>(
    m_cols: ArrayView2<'_, F>,
    p: ArrayView2<'_, F>,
    alpha: ArrayView1<'_, F>,
    lambda: ArrayView1<'_, F>,
    beta: F,
) -> Result<Array2<F>> {
    check_gradient_shapes(m_cols, p, alpha, lambda)?;
    let two = F::cast(2.0);
    let mut weighted = m_cols.to_owned();
    for (i, mut col) in weighted.columns_mut().into_iter().enumerate() {
        col.map_inplace(|v| *v = *v * alpha[i]);
    }
    // t = M diag(α) Mᵀ − (Mα)(Mα)ᵀ, the data-description part.
    let mut t = weighted.dot(&m_cols.t());
    let s = m_cols.dot(&alpha);
    for r in 0..t.nrows() {
        for c_ in 0..t.ncols() {
            t[[r, c_]] -= s[r] * s[c_];
        }
    }
    let mut grad = p.dot(&t);
    grad.map_inplace(|g| *g = *g * two);

    let v = m_cols.dot(&lambda);
    let pv = p.dot(&v);
    for r in 0..grad.nrows() {
        for c_ in 0..grad.ncols() {
            grad[[r, c_]] += two * beta * pv[r] * v[c_];
        }
    }
    Ok(grad)
}

/// Eq.-15/16 gradient for linear mode. `x_cols` is D×N with samples as
/// columns, matching the paper's layout; `q` is d×D.
pub fn gradient_linear<F: Real>(
    x_cols: ArrayView2<'_, F>,
    q: ArrayView2<'_, F>,
    alpha: ArrayView1<'_, F>,
    lambda: ArrayView1<'_, F>,
    beta: F,
) -> Result<Array2<F>> {
    gradient_impl(x_cols, q, alpha, lambda, beta)
}

/// Eq.-21/22 gradient for kernel mode. `k` is the N×N training Gram whose
/// columns play the role of samples; `w` is d×N.
pub fn gradient_kernel<F: Real>(
    k: ArrayView2<'_, F>,
    w: ArrayView2<'_, F>,
    alpha: ArrayView1<'_, F>,
    lambda: ArrayView1<'_, F>,
    beta: F,
) -> Result<Array2<F>> {
    if k.nrows() != k.ncols() {
        return Err(Error::schema(format!("kernel Gram is {}×{}", k.nrows(), k.ncols())));
    }
    gradient_impl(k, w, alpha, lambda, beta)
}

/// The augmented objective L = Σ αᵢ yᵢᵀyᵢ − ΣΣ αᵢ yᵢᵀyⱼ αⱼ + β tr(PMλλᵀMᵀPᵀ)
/// with yᵢ = P mᵢ. Used by the finite-difference checks and the training
/// diagnostics trace.
pub fn augmented_objective<F: Real>(
    m_cols: ArrayView2<'_, F>,
    p: ArrayView2<'_, F>,
    alpha: ArrayView1<'_, F>,
    lambda: ArrayView1<'_, F>,
    beta: F,
) -> Result<F> {
    check_gradient_shapes(m_cols, p, alpha, lambda)?;
    let y = p.dot(&m_cols);
    let mut term1 = F::zero();
    for (i, col) in y.columns().into_iter().enumerate() {
        term1 += alpha[i] * col.dot(&col);
    }
    let ya = y.dot(&alpha);
    let yl = y.dot(&lambda);
    Ok(term1 - ya.dot(&ya) + beta * yl.dot(&yl))
}

/// Gram of projected samples: columns of Y, mirrored exactly.
fn projected_gram<F: Real>(y: &Array2<F>) -> Array2<F> {
    let n = y.ncols();
    let mut g = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let v = y.column(i).dot(&y.column(j));
            g[[i, j]] = v;
            g[[j, i]] = v;
        }
    }
    g
}

/// Runs the full training loop on target-class rows (N×D, already
/// standardized if the caller standardizes). See [`train_with_init`] for
/// the deterministic-initialization variant.
pub fn train<F: Real>(
    x_rows: ArrayView2<'_, F>,
    params: &HyperParams<F>,
    solver_cfg: &SolverConfig<F>,
) -> Result<(SsvddModel<F>, TrainReport<F>)> {
    params.validate()?;
    solver_cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let domain_cols = match params.mode() {
        Mode::Linear => x_rows.ncols(),
        Mode::Kernel => x_rows.nrows(),
    };
    if params.d > domain_cols {
        return Err(Error::config(format!(
            "d = {} exceeds the {} bound: d ≤ {domain_cols} is required in {} mode",
            params.d,
            if params.mode() == Mode::Linear { "feature" } else { "sample" },
            params.mode()
        )));
    }
    let init = init_with_rng(params.d, domain_cols, &mut rng)?;
    train_loop(x_rows, params, solver_cfg, init, rng)
}

/// Training with a caller-supplied initial projection (orthonormalized
/// before use). The seeded stream is still consulted if rank recovery ever
/// needs fresh rows.
pub fn train_with_init<F: Real>(
    x_rows: ArrayView2<'_, F>,
    params: &HyperParams<F>,
    solver_cfg: &SolverConfig<F>,
    init: Array2<F>,
) -> Result<(SsvddModel<F>, TrainReport<F>)> {
    params.validate()?;
    solver_cfg.validate()?;
    let rng = ChaCha8Rng::seed_from_u64(params.seed);
    let init = orthonormalize(init.view())?;
    train_loop(x_rows, params, solver_cfg, init, rng)
}

fn train_loop<F: Real>(
    x_rows: ArrayView2<'_, F>,
    params: &HyperParams<F>,
    solver_cfg: &SolverConfig<F>,
    init: Array2<F>,
    mut rng: ChaCha8Rng,
) -> Result<(SsvddModel<F>, TrainReport<F>)> {
    let n = x_rows.nrows();
    if n < 2 {
        return Err(Error::InsufficientData {
            detail: format!("training needs at least 2 target rows, got {n}"),
        });
    }
    let mode = params.mode();
    let m_cols: Array2<F> = match mode {
        Mode::Linear => x_rows.t().to_owned(),
        Mode::Kernel => {
            let spec = params.kernel.expect("kernel mode has a spec");
            rbf_gram(x_rows, spec)?
        }
    };

    let mut proj = init;
    let mut rerandomized = 0usize;
    let mut recoveries = 0usize;
    let mut max_dev = ortho_deviation(&proj);
    let mut trace = Vec::with_capacity(params.k_max);

    for _ in 1..params.k_max {
        let y = proj.dot(&m_cols);
        let gram = projected_gram(&y);
        let (sol, recovered) = solve_or_recover(gram.view(), params.c, solver_cfg)?;
        recoveries += recovered as usize;
        let lambda =
            lambda_vector(params.psi, sol.alpha.view(), params.c, solver_cfg.sv_tolerance);
        trace.push(augmented_objective(
            m_cols.view(),
            proj.view(),
            sol.alpha.view(),
            lambda.view(),
            params.beta,
        )?);
        let grad = gradient_impl(
            m_cols.view(),
            proj.view(),
            sol.alpha.view(),
            lambda.view(),
            params.beta,
        )?;
        proj.scaled_add(-params.eta, &grad);
        proj = orthonormalize_recovering(proj, &mut rng, &mut rerandomized)?;
        max_dev = max_dev.max(ortho_deviation(&proj));
    }

    // Final projection defines the model: one more solve fixes α and R².
    let y = proj.dot(&m_cols);
    let gram = projected_gram(&y);
    let (sol, recovered) = solve_or_recover(gram.view(), params.c, solver_cfg)?;
    recoveries += recovered as usize;
    let lambda = lambda_vector(params.psi, sol.alpha.view(), params.c, solver_cfg.sv_tolerance);
    trace.push(augmented_objective(
        m_cols.view(),
        proj.view(),
        sol.alpha.view(),
        lambda.view(),
        params.beta,
    )?);
    let center = y.dot(&sol.alpha);

    let report = TrainReport {
        iterations: params.k_max - 1,
        objective_trace: trace,
        rank_rerandomizations: rerandomized,
        solver_recoveries: recoveries,
        max_ortho_deviation: max_dev,
        boundary_sv_count: sol.boundary_sv.len(),
        outlier_sv_count: sol.outlier_sv.len(),
    };
    let model = SsvddModel {
        mode,
        params: params.clone(),
        projection: proj,
        alpha: sol.alpha.clone(),
        r_squared: sol.r_squared,
        center,
        scaler: None,
        train_rows: match mode {
            Mode::Kernel => Some(x_rows.to_owned()),
            Mode::Linear => None,
        },
        solution: Some(sol),
    };
    Ok((model, report))
}

/// ‖P Pᵀ − I‖_max.
pub fn ortho_deviation<F: Real>(p: &Array2<F>) -> F {
    let ppt = p.dot(&p.t());
    let mut dev = F::zero();
    for i in 0..ppt.nrows() {
        for j in 0..ppt.ncols() {
            let target = if i == j { F::one() } else { F::zero() };
            dev = dev.max((ppt[[i, j]] - target).abs());
        }
    }
    dev
}

impl<F: Real> SsvddModel<F> {
    /// Maps raw query rows into the subspace: standardization (if the model
    /// carries statistics), then Q x (linear) or W k_* (kernel).
    pub fn project(&self, x_query: ArrayView2<'_, F>) -> Result<Array2<F>> {
        let standardized: Array2<F> = match &self.scaler {
            Some(s) => {
                self.check_query_width(x_query.ncols(), s.mean.len())?;
                s.transformed(x_query)
            }
            None => x_query.to_owned(),
        };
        match self.mode {
            Mode::Linear => {
                self.check_query_width(standardized.ncols(), self.projection.ncols())?;
                Ok(standardized.dot(&self.projection.t()))
            }
            Mode::Kernel => {
                let train_rows = self.train_rows.as_ref().ok_or_else(|| Error::Internal {
                    detail: "kernel model lacks stored training rows".into(),
                })?;
                self.check_query_width(standardized.ncols(), train_rows.ncols())?;
                let spec = self.params.kernel.expect("kernel mode has a spec");
                let k_star = rbf_cross(train_rows.view(), standardized.view(), spec)?;
                // Columns of W·k_* are the projected queries.
                Ok(self.projection.dot(&k_star).t().to_owned())
            }
        }
    }

    fn check_query_width(&self, got: usize, want: usize) -> Result<()> {
        if got != want {
            return Err(Error::schema(format!(
                "query has {got} feature columns, model expects {want}"
            )));
        }
        Ok(())
    }

    /// Scores raw query rows: squared distance to the center and the
    /// boundary-inclusive label.
    pub fn predict(&self, x_query: ArrayView2<'_, F>) -> Result<Vec<Prediction<F>>> {
        let y = self.project(x_query)?;
        Ok(y.axis_iter(Axis(0))
            .map(|row| {
                let mut dist = F::zero();
                for (v, c) in row.iter().zip(self.center.iter()) {
                    let diff = *v - *c;
                    dist += diff * diff;
                }
                Prediction { label: classify(dist, self.r_squared), dist_sq: dist }
            })
            .collect())
    }

    pub fn to_json(&self) -> Result<String>
    where
        F: Serialize,
    {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self>
    where
        F: serde::de::DeserializeOwned,
    {
        let model: SsvddModel<F> = serde_json::from_str(s)?;
        model.params.validate()?;
        Ok(model)
    }
}

/// Serializes matrices as row-major arrays of arrays so model files stay
/// self-describing.
mod serde_matrix {
    use ndarray::Array2;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::scalar::Real;

    pub fn serialize<F, S>(m: &Array2<F>, ser: S) -> Result<S::Ok, S::Error>
    where
        F: Real + Serialize,
        S: Serializer,
    {
        let rows: Vec<Vec<F>> = m.rows().into_iter().map(|r| r.to_vec()).collect();
        rows.serialize(ser)
    }

    pub fn deserialize<'de, F, D>(de: D) -> Result<Array2<F>, D::Error>
    where
        F: Real + Deserialize<'de>,
        D: Deserializer<'de>,
    {
        let rows: Vec<Vec<F>> = Vec::deserialize(de)?;
        super::matrix_from_rows(rows).map_err(D::Error::custom)
    }
}

mod serde_opt_matrix {
    use ndarray::Array2;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::scalar::Real;

    pub fn serialize<F, S>(m: &Option<Array2<F>>, ser: S) -> Result<S::Ok, S::Error>
    where
        F: Real + Serialize,
        S: Serializer,
    {
        let rows: Option<Vec<Vec<F>>> =
            m.as_ref().map(|m| m.rows().into_iter().map(|r| r.to_vec()).collect());
        rows.serialize(ser)
    }

    pub fn deserialize<'de, F, D>(de: D) -> Result<Option<Array2<F>>, D::Error>
    where
        F: Real + Deserialize<'de>,
        D: Deserializer<'de>,
    {
        let rows: Option<Vec<Vec<F>>> = Option::deserialize(de)?;
        rows.map(|r| super::matrix_from_rows(r).map_err(D::Error::custom)).transpose()
    }
}

mod serde_vector {
    use ndarray::Array1;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::scalar::Real;

    pub fn serialize<F, S>(v: &Array1<F>, ser: S) -> Result<S::Ok, S::Error>
    where
        F: Real + Serialize,
        S: Serializer,
    {
        v.to_vec().serialize(ser)
    }

    pub fn deserialize<'de, F, D>(de: D) -> Result<Array1<F>, D::Error>
    where
        F: Real + Deserialize<'de>,
        D: Deserializer<'de>,
    {
        Ok(Array1::from_vec(Vec::deserialize(de)?))
    }
}

fn matrix_from_rows<F: Real>(rows: Vec<Vec<F>>) -> Result<Array2<F>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::schema("ragged matrix in model document".to_string()));
    }
    let flat: Vec<F> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((nrows, ncols), flat)
        .map_err(|e| Error::schema(format!("bad matrix shape: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn psi_mode_parses_both_spellings() {
        assert_eq!("2".parse::<PsiMode>().unwrap(), PsiMode::Psi2);
        assert_eq!("psi4".parse::<PsiMode>().unwrap(), PsiMode::Psi4);
        assert!("5".parse::<PsiMode>().is_err());
    }

    #[test]
    fn orthonormalize_scales_axis_aligned_rows_to_unit() {
        let out = orthonormalize(array![[2.0, 0.0], [0.0, 3.0]].view()).unwrap();
        assert_eq!(out, array![[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn orthonormalize_rejects_dependent_rows() {
        let err = orthonormalize(array![[1.0, 2.0, 0.0], [2.0, 4.0, 0.0]].view()).unwrap_err();
        assert!(matches!(err, Error::DegenerateProjection { row: 1 }));
    }

    #[test]
    fn lambda_vector_psi4_keeps_only_boundary_svs() {
        // α = (0.5, 0.5, 0), C = 0.6: both nonzero weights sit strictly
        // inside the box, so Ψ4 keeps them.
        let alpha = array![0.5, 0.5, 0.0];
        let lam = lambda_vector(PsiMode::Psi4, alpha.view(), 0.6, 1e-6);
        assert_eq!(lam, array![0.5, 0.5, 0.0]);
        // At C = 0.5 they become outlier SVs and drop out.
        let lam = lambda_vector(PsiMode::Psi4, alpha.view(), 0.5, 1e-6);
        assert_eq!(lam, array![0.0, 0.0, 0.0]);
    }
}
