//! The SVDD dual: maximize Σ αᵢ Gᵢᵢ − ΣΣ αᵢαⱼ Gᵢⱼ over {Σα = 1, 0 ≤ α ≤ C}
//! for any Gram matrix G, plus the radius and the test-time decision rule.
//!
//! The solver does analytic pairwise coordinate updates: the equality
//! constraint couples exactly two weights at a time, so the working pair
//! (chosen by maximal KKT violation) is optimized in closed form under
//! αᵢ + αⱼ = const and the box. Each step is non-decreasing in the
//! objective, so the iterate at any stopping point is the best seen.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::data::BinaryLabel;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig<F: Real> {
    /// Largest allowed gap between the most increase-worthy and most
    /// decrease-worthy gradient entries at convergence.
    pub kkt_tolerance: F,
    /// Boundary-vs-bound classification margin on α.
    pub sv_tolerance: F,
    /// Update budget in sweeps of N pairwise steps; `None` means 10·N sweeps.
    pub max_passes: Option<usize>,
}

impl<F: Real> Default for SolverConfig<F> {
    fn default() -> Self {
        Self {
            kkt_tolerance: F::cast(1e-6),
            sv_tolerance: F::cast(1e-6),
            max_passes: None,
        }
    }
}

impl<F: Real> SolverConfig<F> {
    pub fn validate(&self) -> Result<()> {
        if !(self.kkt_tolerance > F::zero() && self.kkt_tolerance.is_finite()) {
            return Err(Error::config("kkt_tolerance must be positive".to_string()));
        }
        if !(self.sv_tolerance > F::zero() && self.sv_tolerance.is_finite()) {
            return Err(Error::config("sv_tolerance must be positive".to_string()));
        }
        if self.max_passes == Some(0) {
            return Err(Error::config("max_passes must be positive".to_string()));
        }
        Ok(())
    }
}

/// A solved data description over some Gram matrix. The sphere center
/// (Eq. 9 of the primal) is implicit in α and `gram`; its squared norm is
/// cached in `center_norm_sq` = αᵀGα so scoring a query costs O(N).
#[derive(Debug, Clone, PartialEq)]
pub struct SvddSolution<F: Real> {
    pub alpha: Array1<F>,
    pub r_squared: F,
    /// Indices with tol < αᵢ < C − tol: samples on the sphere.
    pub boundary_sv: Vec<usize>,
    /// Indices with αᵢ ≥ C − tol: samples outside the sphere.
    pub outlier_sv: Vec<usize>,
    pub c: F,
    pub gram: Array2<F>,
    pub center_norm_sq: F,
}

fn check_gram<F: Real>(g: ArrayView2<'_, F>) -> Result<Array2<F>> {
    if g.nrows() != g.ncols() {
        return Err(Error::schema(format!("Gram matrix is {}×{}", g.nrows(), g.ncols())));
    }
    let mut max_skew = F::zero();
    for i in 0..g.nrows() {
        for j in 0..i {
            max_skew = max_skew.max((g[[i, j]] - g[[j, i]]).abs());
        }
    }
    if max_skew > F::cast(1e-8) {
        return Err(Error::schema(format!(
            "Gram matrix is not symmetric (max |G − Gᵀ| = {max_skew})"
        )));
    }
    // Defensive hygiene: work on the exactly symmetric average.
    let mut sym = g.to_owned();
    let half = F::cast(0.5);
    for i in 0..sym.nrows() {
        for j in 0..i {
            let v = (sym[[i, j]] + sym[[j, i]]) * half;
            sym[[i, j]] = v;
            sym[[j, i]] = v;
        }
    }
    Ok(sym)
}

/// Maximizes the dual to KKT tolerance. Initialization is the uniform
/// feasible point αᵢ = 1/N (= min(1/N, C) whenever N·C ≥ 1).
pub fn solve_dual<F: Real>(
    g: ArrayView2<'_, F>,
    c: F,
    cfg: &SolverConfig<F>,
) -> Result<SvddSolution<F>> {
    cfg.validate()?;
    if !(c > F::zero() && c.is_finite()) {
        return Err(Error::config(format!("C must be positive and finite, got {c}")));
    }
    let n = g.nrows();
    if n == 0 {
        return Err(Error::InsufficientData { detail: "empty Gram matrix".into() });
    }
    if (n as f64) * c.as_f64() < 1.0 - 1e-12 {
        return Err(Error::Infeasible { n, c: c.as_f64() });
    }
    let gram = check_gram(g)?;

    let mut alpha = Array1::from_elem(n, F::one() / F::cast(n as f64));
    // Gradient of the objective: ∇ᵢ = Gᵢᵢ − 2 (Gα)ᵢ.
    let g_alpha = gram.dot(&alpha);
    let two = F::cast(2.0);
    let mut grad: Array1<F> =
        Array1::from_shape_fn(n, |i| gram[[i, i]] - two * g_alpha[i]);

    let budget = cfg.max_passes.unwrap_or(10 * n).saturating_mul(n).max(1);
    let mut converged = false;
    for _ in 0..budget {
        // Working pair: the strongest candidate to grow against the
        // strongest candidate to shrink.
        let mut up: Option<usize> = None;
        let mut down: Option<usize> = None;
        for i in 0..n {
            if alpha[i] < c && up.map_or(true, |u| grad[i] > grad[u]) {
                up = Some(i);
            }
            if alpha[i] > F::zero() && down.map_or(true, |d| grad[i] < grad[d]) {
                down = Some(i);
            }
        }
        let (Some(i), Some(j)) = (up, down) else { break };
        let residual = grad[i] - grad[j];
        if residual <= cfg.kkt_tolerance {
            converged = true;
            break;
        }
        // Along αᵢ += δ, αⱼ −= δ the objective gains δ·(∇ᵢ−∇ⱼ) − δ²·q with
        // q = Gᵢᵢ + Gⱼⱼ − 2Gᵢⱼ ≥ 0; the unconstrained argmax is clipped to
        // the box. Flooring q keeps near-flat directions taking full steps.
        let quad = (gram[[i, i]] + gram[[j, j]] - two * gram[[i, j]]).max(F::cast(1e-12));
        let room_up = c - alpha[i];
        let room_down = alpha[j];
        let delta = (residual / (two * quad)).min(room_up).min(room_down);
        // Snap exactly onto a hit bound so the index leaves the working set
        // instead of crawling toward it one ulp at a time.
        alpha[i] = if delta >= room_up { c } else { alpha[i] + delta };
        alpha[j] = if delta >= room_down { F::zero() } else { alpha[j] - delta };
        for k in 0..n {
            grad[k] -= two * delta * (gram[[k, i]] - gram[[k, j]]);
        }
    }
    if !converged {
        // Re-measure the violation in case the budget ended mid-sweep.
        let mut worst_up = F::neg_infinity();
        let mut worst_down = F::infinity();
        for i in 0..n {
            if alpha[i] < c {
                worst_up = worst_up.max(grad[i]);
            }
            if alpha[i] > F::zero() {
                worst_down = worst_down.min(grad[i]);
            }
        }
        let residual = worst_up - worst_down;
        if residual > cfg.kkt_tolerance {
            let best_alpha: Vec<f64> = alpha.iter().map(|a| a.as_f64()).collect();
            let linear: F = alpha
                .iter()
                .enumerate()
                .map(|(i, &a)| a * gram[[i, i]])
                .sum();
            let quad = alpha.dot(&gram.dot(&alpha));
            return Err(Error::Convergence {
                passes: cfg.max_passes.unwrap_or(10 * n),
                residual: residual.as_f64(),
                best_alpha,
                best_objective: (linear - quad).as_f64(),
            });
        }
    }
    SvddSolution::from_alpha(gram, alpha, c, cfg)
}

/// Like [`solve_dual`], but a budget-exhausted solve salvages the carried
/// iterate instead of failing. The flag reports whether that happened so
/// callers can count recoveries.
pub fn solve_or_recover<F: Real>(
    g: ArrayView2<'_, F>,
    c: F,
    cfg: &SolverConfig<F>,
) -> Result<(SvddSolution<F>, bool)> {
    match solve_dual(g, c, cfg) {
        Ok(sol) => Ok((sol, false)),
        Err(Error::Convergence { best_alpha, .. }) => {
            let alpha = Array1::from_iter(best_alpha.into_iter().map(F::cast));
            let gram = check_gram(g)?;
            Ok((SvddSolution::from_alpha(gram, alpha, c, cfg)?, true))
        }
        Err(e) => Err(e),
    }
}

impl<F: Real> SvddSolution<F> {
    /// Builds a solution from given dual weights: classifies support
    /// vectors and computes the radius. Also the recovery path for an
    /// iterate carried by a convergence error.
    pub fn from_alpha(
        gram: Array2<F>,
        alpha: Array1<F>,
        c: F,
        cfg: &SolverConfig<F>,
    ) -> Result<Self> {
        if alpha.len() != gram.nrows() {
            return Err(Error::schema(format!(
                "{} dual weights for a {}-row Gram matrix",
                alpha.len(),
                gram.nrows()
            )));
        }
        let tol = cfg.sv_tolerance;
        let mut boundary_sv = Vec::new();
        let mut outlier_sv = Vec::new();
        for (i, &a) in alpha.iter().enumerate() {
            if a >= c - tol {
                outlier_sv.push(i);
            } else if a > tol {
                boundary_sv.push(i);
            }
        }
        let center_norm_sq = alpha.dot(&gram.dot(&alpha));
        let mut sol = SvddSolution {
            alpha,
            r_squared: F::zero(),
            boundary_sv,
            outlier_sv,
            c,
            gram,
            center_norm_sq,
        };
        sol.r_squared = compute_radius(&sol, cfg)?;
        Ok(sol)
    }

    /// dist²(i) of every training sample from the center.
    pub fn train_distances(&self) -> Array1<F> {
        let g_alpha = self.gram.dot(&self.alpha);
        let two = F::cast(2.0);
        Array1::from_shape_fn(self.alpha.len(), |i| {
            self.gram[[i, i]] - two * g_alpha[i] + self.center_norm_sq
        })
    }

    /// Squared distance of a query from the center via Eq.-23 shape inputs:
    /// g_cross[i] = ⟨y_*, yᵢ⟩ and g_self = ⟨y_*, y_*⟩.
    pub fn distance_sq(&self, g_cross: ArrayView1<'_, F>, g_self: F) -> Result<F> {
        if g_cross.len() != self.alpha.len() {
            return Err(Error::schema(format!(
                "g_cross has {} entries for {} training samples",
                g_cross.len(),
                self.alpha.len()
            )));
        }
        let two = F::cast(2.0);
        let val = g_self - two * self.alpha.dot(&g_cross) + self.center_norm_sq;
        guarded_nonneg(val, g_self.abs() + self.center_norm_sq.abs(), "query distance")
    }
}

/// Negative floating-point dips within the guard band clamp to zero;
/// anything worse is a real inconsistency.
fn guarded_nonneg<F: Real>(val: F, magnitude: F, what: &str) -> Result<F> {
    if val >= F::zero() {
        return Ok(val);
    }
    let band = F::cast(1e-10) * (F::one() + magnitude) * (F::epsilon() / F::cast(f64::EPSILON));
    if val >= -band {
        Ok(F::zero())
    } else {
        Err(Error::Internal { detail: format!("{what} is negative: {val}") })
    }
}

/// r² as the mean of boundary-SV squared distances; with no boundary SVs,
/// the max squared distance over all support vectors (αᵢ > tol).
pub fn compute_radius<F: Real>(sol: &SvddSolution<F>, cfg: &SolverConfig<F>) -> Result<F> {
    let dist = sol.train_distances();
    let magnitude = sol.center_norm_sq.abs() + F::one();
    if !sol.boundary_sv.is_empty() {
        let sum: F = sol.boundary_sv.iter().map(|&i| dist[i]).sum();
        return guarded_nonneg(sum / F::cast(sol.boundary_sv.len() as f64), magnitude, "radius");
    }
    let mut best = F::zero();
    for (i, &a) in sol.alpha.iter().enumerate() {
        if a > cfg.sv_tolerance {
            best = best.max(dist[i]);
        }
    }
    guarded_nonneg(best, magnitude, "radius")
}

/// §II-E decision rule; the boundary counts as inside.
pub fn classify<F: Real>(dist_sq: F, r_squared: F) -> BinaryLabel {
    if dist_sq <= r_squared {
        BinaryLabel::Target
    } else {
        BinaryLabel::Outlier
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn single_point_forces_alpha_one_and_zero_radius() {
        let cfg = SolverConfig::default();
        for g in [0.0, -3.5, 7.25] {
            let sol = solve_dual(array![[g]].view(), 1.0, &cfg).unwrap();
            assert_eq!(sol.alpha[0], 1.0);
            assert_eq!(sol.r_squared, 0.0);
        }
    }

    #[test]
    fn infeasible_when_box_cannot_reach_the_simplex() {
        let cfg = SolverConfig::default();
        let g = array![[1.0, 0.0], [0.0, 1.0]];
        let err = solve_dual(g.view(), 0.3, &cfg).unwrap_err();
        assert!(matches!(err, Error::Infeasible { n: 2, .. }));
    }

    #[test]
    fn asymmetric_gram_rejected() {
        let cfg = SolverConfig::default();
        let g = array![[1.0, 0.5], [0.0, 1.0]];
        let err = solve_dual(g.view(), 1.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::Schema { .. }));
    }

    #[test]
    fn classify_boundary_is_inclusive() {
        assert_eq!(classify(0.9, 1.0), BinaryLabel::Target);
        assert_eq!(classify(1.0, 1.0), BinaryLabel::Target);
        assert_eq!(classify(1.0001, 1.0), BinaryLabel::Outlier);
    }
}
