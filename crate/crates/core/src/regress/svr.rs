//! Epsilon-SVR with an RBF kernel, trained by SMO on the 2n-variable dual.
//!
//! The dual is written in the usual single-constraint form: variables α (sign +1,
//! linear term ε − yᵢ) and α* (sign −1, linear term ε + yᵢ), box [0, C] and
//! Σ sign·α = 0. Working pairs are the maximal violator plus the partner with the
//! best second-order gain. The kernel matrix is precomputed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scaler::Scaler;
use crate::error::{Error, Result};
use crate::matrix::{check_targets, Matrix};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    /// RBF width; `None` picks 1 / (n_features · variance of the standardized data).
    pub gamma: Option<f64>,
    pub tol: f64,
    /// Iteration budget in passes over the 2n dual variables.
    pub max_passes: usize,
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams {
            c: 1.0,
            epsilon: 0.1,
            gamma: None,
            tol: 1e-3,
            max_passes: 1000,
        }
    }
}

impl SvrParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.c > 0.0
            && self.c.is_finite()
            && self.epsilon >= 0.0
            && self.epsilon.is_finite()
            && self.gamma.is_none_or(|g| g > 0.0 && g.is_finite())
            && self.tol > 0.0
            && self.max_passes > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid SVR parameters {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub params: SvrParams,
    /// Kernel width actually used.
    pub gamma: f64,
    pub scaler: Scaler,
    /// Support vectors in standardized units.
    pub support_vectors: Matrix,
    /// Training-row index of each support vector.
    pub support_indices: Vec<usize>,
    /// βᵢ = αᵢ − αᵢ*.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    /// `false` when the iteration budget ran out before the KKT conditions held
    /// ("max_passes reached").
    pub converged: bool,
}

pub fn rbf_kernel(x: &[f64], z: &[f64], gamma: f64) -> Result<f64> {
    if x.len() != z.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: z.len(),
            context: "rbf kernel arguments".into(),
        });
    }
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(Error::invalid(format!("rbf gamma must be positive, got {gamma}")));
    }
    Ok((-gamma * sq_dist(x, z)).exp())
}

fn sq_dist(x: &[f64], z: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let mut xc = x.chunks_exact(4);
    let mut zc = z.chunks_exact(4);
    for (a, b) in (&mut xc).zip(&mut zc) {
        for k in 0..4 {
            let d = a[k] - b[k];
            acc[k] += d * d;
        }
    }
    let tail: f64 = xc
        .remainder()
        .iter()
        .zip(zc.remainder())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Full n×n kernel matrix, row-major.
pub fn kernel_matrix(z: &Matrix, gamma: f64) -> Vec<f64> {
    let n = z.rows();
    let mut k = vec![0.0; n * n];
    k.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let zi = z.row(i);
        for (j, kij) in row.iter_mut().enumerate().skip(i) {
            *kij = if i == j {
                1.0
            } else {
                (-gamma * sq_dist(zi, z.row(j))).exp()
            };
        }
    });
    for i in 0..n {
        for j in 0..i {
            k[i * n + j] = k[j * n + i];
        }
    }
    k
}

/// 1 / (n_features · var(all entries)); falls back to 1 / n_features.
pub fn scale_gamma(z: &Matrix) -> f64 {
    let d = z.cols().max(1) as f64;
    let v = crate::matrix::variance(z.as_slice());
    if v > 0.0 {
        1.0 / (d * v)
    } else {
        1.0 / d
    }
}

struct Solution {
    alpha: Vec<f64>,
    rho: f64,
    iterations: usize,
    converged: bool,
}

fn solve(k: &[f64], y: &[f64], c: f64, eps: f64, tol: f64, max_iter: usize) -> Solution {
    let n = y.len();
    let m = 2 * n;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let mut alpha = vec![0.0; m];
    let mut g: Vec<f64> = (0..m)
        .map(|t| if t < n { eps - y[t] } else { eps + y[t - n] })
        .collect();
    let kd = |a: usize, b: usize| k[(a % n) * n + (b % n)];

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        // maximal violator in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..m {
            if t < n {
                if alpha[t] < c && -g[t] >= gmax {
                    gmax = -g[t];
                    i = t;
                }
            } else if alpha[t] > 0.0 && g[t] >= gmax {
                gmax = g[t];
                i = t;
            }
        }
        // second-order partner in I_low
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        if i != usize::MAX {
            let kii = 1.0;
            let ki = &k[(i % n) * n..(i % n) * n + n];
            for s in 0..m {
                let (in_low, grad) = if s < n {
                    (alpha[s] > 0.0, g[s])
                } else {
                    (alpha[s] < c, -g[s])
                };
                if !in_low {
                    continue;
                }
                if grad >= gmax2 {
                    gmax2 = grad;
                }
                let grad_diff = gmax + grad;
                if grad_diff > 0.0 {
                    let mut quad = kii + 1.0 - 2.0 * ki[s % n];
                    if quad <= 0.0 {
                        quad = TAU;
                    }
                    let obj = -(grad_diff * grad_diff) / quad;
                    if obj <= best {
                        best = obj;
                        j = s;
                    }
                }
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax + gmax2 < tol {
            converged = true;
            break;
        }
        iterations += 1;

        let (yi, yj) = (sign(i), sign(j));
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let kij = kd(i, j);
        if yi != yj {
            let mut quad = 2.0 - 2.0 * kij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-g[i] - g[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = 2.0 - 2.0 * kij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (g[i] - g[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let di = (alpha[i] - old_i) * yi;
        let dj = (alpha[j] - old_j) * yj;
        let ki = &k[(i % n) * n..(i % n) * n + n];
        let kj = &k[(j % n) * n..(j % n) * n + n];
        let (g_pos, g_neg) = g.split_at_mut(n);
        for t in 0..n {
            let u = di * ki[t] + dj * kj[t];
            g_pos[t] += u;
            g_neg[t] -= u;
        }
    }

    // offset from free variables, else the midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..m {
        let yg = sign(t) * g[t];
        let at_upper = alpha[t] >= c;
        let at_lower = alpha[t] <= 0.0;
        if at_upper {
            if sign(t) < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower {
            if sign(t) > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    };
    Solution {
        alpha,
        rho,
        iterations,
        converged,
    }
}

pub fn fit_svr(x: &Matrix, y: &[f64], p: &SvrParams) -> Result<SvrModel> {
    p.validate()?;
    check_targets(y, x.rows(), "svr")?;
    x.check_finite("svr training features")?;
    let n = x.rows();
    if n < 2 {
        return Err(Error::invalid("svr needs at least 2 training rows"));
    }
    let scaler = Scaler::fit(x)?;
    let z = scaler.transform(x)?;
    let gamma = p.gamma.unwrap_or_else(|| scale_gamma(&z));
    let k = kernel_matrix(&z, gamma);
    let max_iter = p.max_passes.saturating_mul(2 * n);
    let sol = solve(&k, y, p.c, p.epsilon, p.tol, max_iter);
    if !sol.converged {
        log::warn!(
            "svr: max_passes reached after {} iterations without meeting tol {}",
            sol.iterations,
            p.tol
        );
    }
    let mut support_indices = Vec::new();
    let mut dual_coefs = Vec::new();
    for i in 0..n {
        let beta = sol.alpha[i] - sol.alpha[i + n];
        if beta != 0.0 {
            support_indices.push(i);
            dual_coefs.push(beta);
        }
    }
    Ok(SvrModel {
        params: *p,
        gamma,
        scaler,
        support_vectors: z.select_rows(&support_indices),
        support_indices,
        dual_coefs,
        bias: -sol.rho,
        iterations: sol.iterations,
        converged: sol.converged,
    })
}

impl SvrModel {
    pub fn n_features(&self) -> usize {
        self.scaler.dim()
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        x.check_cols(self.n_features(), "svr prediction features")?;
        x.check_finite("svr prediction features")?;
        let d = self.n_features();
        Ok((0..x.rows())
            .into_par_iter()
            .map_init(
                || vec![0.0; d],
                |z, i| {
                    self.scaler.transform_row(x.row(i), z);
                    self.decision(z)
                },
            )
            .collect())
    }

    fn decision(&self, z: &[f64]) -> f64 {
        let mut f = self.bias;
        for (sv, beta) in self.support_vectors.iter_rows().zip(&self.dual_coefs) {
            f += beta * (-self.gamma * sq_dist(sv, z)).exp();
        }
        f
    }

    /// Largest KKT violation of each training point, measured against the fitted
    /// offset. Assumes αᵢ·αᵢ* = 0, which holds at the optimum for ε > 0.
    pub fn kkt_residuals(&self, x: &Matrix, y: &[f64]) -> Result<Vec<f64>> {
        check_targets(y, x.rows(), "svr kkt")?;
        let f = self.predict(x)?;
        let c = self.params.c;
        let eps = self.params.epsilon;
        let mut beta = vec![0.0; y.len()];
        for (&i, &b) in self.support_indices.iter().zip(&self.dual_coefs) {
            beta[i] = b;
        }
        Ok(y
            .iter()
            .zip(&f)
            .zip(&beta)
            .map(|((&yi, &fi), &b)| {
                let (a, a_star) = (b.max(0.0), (-b).max(0.0));
                let mut r: f64 = 0.0;
                if a < c {
                    r = r.max(yi - eps - fi);
                }
                if a > 0.0 {
                    r = r.max(fi - yi + eps);
                }
                if a_star > 0.0 {
                    r = r.max(yi + eps - fi);
                }
                if a_star < c {
                    r = r.max(fi - yi - eps);
                }
                r
            })
            .collect())
    }
}
