//! Test oracles kept deliberately independent of the library's internals:
//! a brute-force maximizer for the dual QP, a naive triple-loop evaluation
//! of the augmented objective, and a central-difference gradient.
//!
//! Compiled into several test targets; not all of them use every helper.
#![allow(dead_code)]

use ndarray::Array2;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Σ αᵢ Gᵢᵢ − αᵀ G α, the quantity the solver maximizes.
pub fn dual_objective(gram: &Array2<f64>, alpha: &[f64]) -> f64 {
    let n = alpha.len();
    let mut linear = 0.0;
    let mut quad = 0.0;
    for i in 0..n {
        linear += alpha[i] * gram[[i, i]];
        for j in 0..n {
            quad += alpha[i] * alpha[j] * gram[[i, j]];
        }
    }
    linear - quad
}

pub struct BruteForce {
    pub alpha: Vec<f64>,
    pub objective: f64,
    /// True when every near-optimal KKT candidate agrees with `alpha`
    /// within 1e-6, i.e. the argmax is unique enough to compare against.
    pub unique: bool,
}

/// Global maximizer of the dual over {Σα = 1, 0 ≤ α ≤ C} by active-set
/// enumeration. Every KKT point solves the stationarity system of some
/// assignment of indices to {lower, upper, free}; with N ≤ 8 all 3^N
/// assignments can be solved outright and the best feasible candidate is
/// the global optimum.
pub fn brute_force_svdd(gram: &Array2<f64>, c: f64) -> BruteForce {
    let n = gram.nrows();
    assert!(n <= 8, "enumeration oracle is for tiny instances");
    let mut candidates: Vec<(Vec<f64>, f64)> = Vec::new();

    for code in 0..3usize.pow(n as u32) {
        let mut state = code;
        let mut assign = vec![0u8; n]; // 0 lower, 1 upper, 2 free
        for a in assign.iter_mut() {
            *a = (state % 3) as u8;
            state /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| assign[i] == 2).collect();
        let upper: Vec<usize> = (0..n).filter(|&i| assign[i] == 1).collect();
        let mass = 1.0 - c * upper.len() as f64;

        let mut alpha = vec![0.0; n];
        for &i in &upper {
            alpha[i] = c;
        }
        if free.is_empty() {
            if mass.abs() > 1e-9 {
                continue;
            }
        } else {
            // Stationarity over the free set plus the mass constraint:
            //   2 Σ_{j∈F} G_ij α_j + μ = G_ii − 2C Σ_{j∈U} G_ij   (i ∈ F)
            //   Σ_{j∈F} α_j = mass
            let nf = free.len();
            let mut a = vec![vec![0.0; nf + 1]; nf + 1];
            let mut b = vec![0.0; nf + 1];
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    a[r][s] = 2.0 * gram[[i, j]];
                }
                a[r][nf] = 1.0;
                let upper_dot: f64 = upper.iter().map(|&j| gram[[i, j]]).sum();
                b[r] = gram[[i, i]] - 2.0 * c * upper_dot;
            }
            for s in 0..nf {
                a[nf][s] = 1.0;
            }
            b[nf] = mass;
            let Some(sol) = solve_linear(a, b) else { continue };
            let mut ok = true;
            for (r, &i) in free.iter().enumerate() {
                let v = sol[r];
                if !(-1e-9..=c + 1e-9).contains(&v) {
                    ok = false;
                    break;
                }
                alpha[i] = v.clamp(0.0, c);
            }
            if !ok {
                continue;
            }
        }
        let obj = dual_objective(gram, &alpha);
        candidates.push((alpha, obj));
    }

    let (best_alpha, best_obj) = candidates
        .iter()
        .cloned()
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .expect("feasible set nonempty whenever N·C ≥ 1");
    let unique = candidates
        .iter()
        .filter(|(_, obj)| *obj >= best_obj - 1e-9)
        .all(|(alpha, _)| {
            alpha
                .iter()
                .zip(&best_alpha)
                .all(|(a, b)| (a - b).abs() <= 1e-6)
        });
    BruteForce { alpha: best_alpha, objective: best_obj, unique }
}

/// Dense Gaussian elimination with partial pivoting; None when singular.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for s in col..n {
                a[r][s] -= f * a[col][s];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for s in col + 1..n {
            acc -= a[col][s] * x[s];
        }
        x[col] = acc / a[col][col];
    }
    Some(x)
}

/// Literal term-by-term evaluation of
/// L = Σ αᵢ yᵢᵀyᵢ − ΣΣ αᵢ yᵢᵀyⱼ αⱼ + β·tr(P M λ λᵀ Mᵀ Pᵀ)
/// with yᵢ = P mᵢ, where columns of `m` are samples.
pub fn naive_augmented_objective(
    m: &Array2<f64>,
    p: &Array2<f64>,
    alpha: &[f64],
    lambda: &[f64],
    beta: f64,
) -> f64 {
    let n = m.ncols();
    let d = p.nrows();
    let y: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..d)
                .map(|r| (0..m.nrows()).map(|k| p[[r, k]] * m[[k, i]]).sum())
                .collect()
        })
        .collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    let mut term1 = 0.0;
    let mut term2 = 0.0;
    for i in 0..n {
        term1 += alpha[i] * dot(&y[i], &y[i]);
        for j in 0..n {
            term2 += alpha[i] * alpha[j] * dot(&y[i], &y[j]);
        }
    }
    // tr(v vᵀ) with v = P M λ = Σᵢ λᵢ yᵢ.
    let mut v = vec![0.0; d];
    for i in 0..n {
        for r in 0..d {
            v[r] += lambda[i] * y[i][r];
        }
    }
    term1 - term2 + beta * dot(&v, &v)
}

/// Central finite differences of `f` with respect to every entry of `p`.
pub fn central_diff_gradient<F>(f: F, p: &Array2<f64>, h: f64) -> Array2<f64>
where
    F: Fn(&Array2<f64>) -> f64,
{
    let mut grad = Array2::zeros(p.raw_dim());
    for r in 0..p.nrows() {
        for s in 0..p.ncols() {
            let mut plus = p.clone();
            plus[[r, s]] += h;
            let mut minus = p.clone();
            minus[[r, s]] -= h;
            grad[[r, s]] = (f(&plus) - f(&minus)) / (2.0 * h);
        }
    }
    grad
}

/// Frobenius-relative discrepancy used by the gradient checks.
pub fn relative_error(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let diff: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y).powi(2)).sum();
    let scale: f64 = a.iter().map(|x| x * x).sum();
    (diff.sqrt()) / scale.sqrt().max(1e-8)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random PSD Gram G = A Aᵀ with standard-normal A; occasionally near-singular,
/// which is exactly the stress wanted.
pub fn random_psd_gram(n: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let a = Array2::from_shape_fn((n, n), |_| {
        rng.sample::<f64, _>(rand_distr::StandardNormal)
    });
    let mut g = a.dot(&a.t());
    // Mirror to kill any asymmetry from summation order.
    for i in 0..n {
        for j in 0..i {
            let v = g[[i, j]];
            g[[j, i]] = v;
        }
    }
    g
}

/// Random row-sample matrix N×D.
pub fn random_rows(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((n, d), |_| {
        rng.sample::<f64, _>(rand_distr::StandardNormal)
    })
}

/// Random feasible α for given C: uniform draws projected onto the simplex
/// slice by rescale-and-clamp passes.
pub fn random_feasible_alpha(n: usize, c: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    assert!(n as f64 * c >= 1.0);
    let mut alpha: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    for _ in 0..64 {
        let sum: f64 = alpha.iter().sum();
        for a in alpha.iter_mut() {
            *a = (*a / sum).min(c);
        }
        let sum: f64 = alpha.iter().sum();
        if (sum - 1.0).abs() < 1e-12 {
            break;
        }
    }
    let sum: f64 = alpha.iter().sum();
    // Distribute any residue over entries with slack.
    let mut residue = 1.0 - sum;
    for a in alpha.iter_mut() {
        let room = c - *a;
        let add = residue.min(room);
        *a += add;
        residue -= add;
        if residue <= 0.0 {
            break;
        }
    }
    alpha
}
