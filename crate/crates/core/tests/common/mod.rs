//! Independent oracles shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use memfuse::matrix::Matrix;
use memfuse::regress::SvrModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_problem(seed: u64, n: usize, d: usize) -> (Matrix, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let y = rows
        .iter()
        .map(|r| r.iter().enumerate().map(|(j, v)| (j as f64 + 1.0) * v.sin()).sum::<f64>() + rng.random_range(-0.3..0.3))
        .collect();
    (Matrix::from_rows(&rows).unwrap(), y)
}

pub fn r2(y: &[f64], p: &[f64]) -> f64 {
    let m = y.iter().sum::<f64>() / y.len() as f64;
    let ss_res: f64 = y.iter().zip(p).map(|(a, b)| (a - b).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|a| (a - m).powi(2)).sum();
    1.0 - ss_res / ss_tot
}

// ---------------------------------------------------------------------------
// Independent SVR oracle: accelerated projected gradient on the 2n-variable dual
// over {0 ≤ a ≤ C} ∩ {Σa − Σa* = 0}, with the projection found by bisection.

pub fn standardize(x: &Matrix) -> Vec<Vec<f64>> {
    let (n, d) = (x.rows(), x.cols());
    let mut out = vec![vec![0.0; d]; n];
    for j in 0..d {
        let col = x.col(j);
        let m = col.iter().sum::<f64>() / n as f64;
        let sd = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64).sqrt();
        let sd = if sd == 0.0 { 1.0 } else { sd };
        for i in 0..n {
            out[i][j] = (col[i] - m) / sd;
        }
    }
    out
}

pub fn gram(z: &[Vec<f64>], gamma: f64) -> Vec<Vec<f64>> {
    z.iter()
        .map(|a| {
            z.iter()
                .map(|b| (-gamma * a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>()).exp())
                .collect()
        })
        .collect()
}

/// ½βᵀKβ + εΣ(a + a*) − yᵀβ with β = a − a*.
pub fn dual_objective(k: &[Vec<f64>], y: &[f64], eps: f64, a: &[f64], a_star: &[f64]) -> f64 {
    let n = y.len();
    let beta: Vec<f64> = (0..n).map(|i| a[i] - a_star[i]).collect();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            q += beta[i] * k[i][j] * beta[j];
        }
    }
    0.5 * q + eps * (a.iter().sum::<f64>() + a_star.iter().sum::<f64>())
        - y.iter().zip(&beta).map(|(u, v)| u * v).sum::<f64>()
}

pub fn project(v: &[f64], c: f64) -> Vec<f64> {
    let n = v.len() / 2;
    let s = |t: usize| if t < n { 1.0 } else { -1.0 };
    let at = |lam: f64| -> Vec<f64> {
        (0..2 * n).map(|t| (v[t] - lam * s(t)).clamp(0.0, c)).collect()
    };
    let h = |lam: f64| at(lam).iter().enumerate().map(|(t, a)| s(t) * a).sum::<f64>();
    // h is non-increasing in lam and changes sign inside ±(max|v| + c)
    let r = v.iter().fold(0.0_f64, |m, x| m.max(x.abs())) + c;
    let (mut lo, mut hi) = (-r, r);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

pub struct Oracle {
    pub beta: Vec<f64>,
    pub bias: f64,
    pub objective: f64,
}

pub fn qp_oracle(k: &[Vec<f64>], y: &[f64], c: f64, eps: f64) -> Oracle {
    let n = y.len();
    let lip = 2.0 * k.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let grad = |x: &[f64]| -> Vec<f64> {
        let kb: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| k[i][j] * (x[j] - x[j + n])).sum())
            .collect();
        (0..2 * n)
            .map(|t| if t < n { kb[t] + eps - y[t] } else { -kb[t - n] + eps + y[t - n] })
            .collect()
    };
    // FISTA with gradient-based adaptive restart; stops once iterates stall
    let mut x = vec![0.0; 2 * n];
    let mut z = x.clone();
    let mut t = 1.0_f64;
    for _ in 0..60_000 {
        let g = grad(&z);
        let step: Vec<f64> = z.iter().zip(&g).map(|(a, b)| a - b / lip).collect();
        let x_new = project(&step, c);
        let restart = g
            .iter()
            .zip(x_new.iter().zip(&x))
            .map(|(gi, (a, b))| gi * (a - b))
            .sum::<f64>()
            > 0.0;
        let moved = x_new.iter().zip(&x).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        if restart {
            t = 1.0;
            z = x_new.clone();
        } else {
            let t_new = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
            z = x_new
                .iter()
                .zip(&x)
                .map(|(a, b)| a + (t - 1.0) / t_new * (a - b))
                .collect();
            t = t_new;
        }
        x = x_new;
        if moved < 1e-14 * c.max(1.0) {
            break;
        }
    }
    let (a, a_star) = x.split_at(n);
    let beta: Vec<f64> = (0..n).map(|i| a[i] - a_star[i]).collect();
    let f0: Vec<f64> = (0..n).map(|i| (0..n).map(|j| k[i][j] * beta[j]).sum()).collect();
    let free_tol = 1e-6 * c;
    let mut biases = Vec::new();
    for i in 0..n {
        if a[i] > free_tol && a[i] < c - free_tol {
            biases.push(y[i] - eps - f0[i]);
        }
        if a_star[i] > free_tol && a_star[i] < c - free_tol {
            biases.push(y[i] + eps - f0[i]);
        }
    }
    assert!(!biases.is_empty(), "oracle instance has no free support vectors");
    let bias = biases.iter().sum::<f64>() / biases.len() as f64;
    Oracle {
        objective: dual_objective(k, y, eps, a, a_star),
        beta,
        bias,
    }
}

pub fn smo_objective(m: &SvrModel, k: &[Vec<f64>], y: &[f64]) -> f64 {
    let n = y.len();
    let mut a = vec![0.0; n];
    let mut a_star = vec![0.0; n];
    for (&i, &b) in m.support_indices.iter().zip(&m.dual_coefs) {
        a[i] = b.max(0.0);
        a_star[i] = (-b).max(0.0);
    }
    dual_objective(k, y, m.params.epsilon, &a, &a_star)
}

// ---------------------------------------------------------------------------
// Ridge against explicit normal equations solved by Gauss-Jordan elimination.

pub fn gauss_jordan(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        let p = a[col][col];
        for j in 0..n {
            a[col][j] /= p;
        }
        b[col] /= p;
        for i in 0..n {
            if i != col {
                let f = a[i][col];
                for j in 0..n {
                    a[i][j] -= f * a[col][j];
                }
                b[i] -= f * b[col];
            }
        }
    }
    b
}

pub fn ridge_oracle(x: &Matrix, y: &[f64], alpha: f64) -> (Vec<f64>, f64, Vec<Vec<f64>>) {
    let z = standardize(x);
    let d = x.cols();
    let ym = y.iter().sum::<f64>() / y.len() as f64;
    let mut a = vec![vec![0.0; d]; d];
    let mut b = vec![0.0; d];
    for (r, yi) in z.iter().zip(y) {
        for i in 0..d {
            b[i] += r[i] * (yi - ym);
            for j in 0..d {
                a[i][j] += r[i] * r[j];
            }
        }
    }
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += alpha;
    }
    (gauss_jordan(a, b), ym, z)
}


// ---------------------------------------------------------------------------
// Random-intercept data and a dense mixed-model likelihood.

pub struct LmmData {
    pub y: Vec<f64>,
    pub design: memfuse::variance::DesignMatrix,
    pub groups: Vec<memfuse::model::ParticipantId>,
}

/// y = 1 + 0.5·x₁ − 0.3·x₂ + u_g + e with u ~ N(0, s2u), e ~ N(0, s2e).
/// `demean_noise` removes each group's noise mean, so the data carry no
/// between-group variation beyond the fixed effects.
pub fn random_intercept_data(
    n_groups: usize,
    per_group: usize,
    s2u: f64,
    s2e: f64,
    demean_noise: bool,
    seed: u64,
) -> LmmData {
    use rand_distr::StandardNormal;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_groups * per_group;
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut groups = Vec::with_capacity(n);
    for g in 0..n_groups {
        let u = s2u.sqrt() * rng.sample::<f64, _>(StandardNormal);
        let mut e: Vec<f64> = (0..per_group)
            .map(|_| s2e.sqrt() * rng.sample::<f64, _>(StandardNormal))
            .collect();
        if demean_noise {
            let m = e.iter().sum::<f64>() / per_group as f64;
            e.iter_mut().for_each(|v| *v -= m);
        }
        for ei in e {
            let x1: f64 = rng.sample(StandardNormal);
            let x2: f64 = rng.random_range(-1.0..1.0);
            rows.push(vec![1.0, x1, x2]);
            y.push(1.0 + 0.5 * x1 - 0.3 * x2 + u + ei);
            groups.push(memfuse::model::ParticipantId(format!("g{g:03}")));
        }
    }
    LmmData {
        y,
        design: memfuse::variance::DesignMatrix {
            names: vec!["(intercept)".into(), "x1".into(), "x2".into()],
            blocks: Vec::new(),
            x: Matrix::from_rows(&rows).unwrap(),
        },
        groups,
    }
}

/// Profiled log-likelihood from the full n×n covariance V₀ = I + λZZᵀ.
pub fn dense_loglik(y: &[f64], x: &Matrix, groups: &[memfuse::model::ParticipantId], lambda: f64, reml: bool) -> f64 {
    use nalgebra::{DMatrix, DVector};
    let n = y.len();
    let p = x.cols();
    let v0 = DMatrix::from_fn(n, n, |i, j| {
        (i == j) as u8 as f64 + if groups[i] == groups[j] { lambda } else { 0.0 }
    });
    let xm = DMatrix::from_fn(n, p, |i, j| x.get(i, j));
    let yv = DVector::from_column_slice(y);
    let chol = v0.clone().cholesky().unwrap();
    let vinv_x = chol.solve(&xm);
    let vinv_y = chol.solve(&yv);
    let xtvx = xm.transpose() * &vinv_x;
    let beta = xtvx.clone().cholesky().unwrap().solve(&(xm.transpose() * &vinv_y));
    let r = &yv - &xm * beta;
    let quad = r.dot(&chol.solve(&r));
    let m = if reml { (n - p) as f64 } else { n as f64 };
    let s2 = quad / m;
    let logdet_v = v0.determinant().ln();
    let extra = if reml { xtvx.determinant().ln() } else { 0.0 };
    -0.5 * (m * (2.0 * std::f64::consts::PI * s2).ln() + logdet_v + extra + m)
}

/// Ordinary least squares via the normal equations.
pub fn ols(x: &Matrix, y: &[f64]) -> Vec<f64> {
    let p = x.cols();
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for (row, yi) in x.iter_rows().zip(y) {
        for a in 0..p {
            xty[a] += row[a] * yi;
            for b in 0..p {
                xtx[a][b] += row[a] * row[b];
            }
        }
    }
    gauss_jordan(xtx, xty)
}
