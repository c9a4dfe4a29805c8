//! Variance decomposition of induced emotion with nested random-intercept
//! mixed models: a video baseline (`Vid`), then demographics, personality and
//! mood (`De+Pe+Mo`), then memory-associated affect (`Ma`).
//!
//! The participant random intercept is profiled out: for a fixed variance ratio
//! λ = σ²_u/σ²_e the GLS solution and σ²_e are closed-form (each participant's
//! covariance block is I + λ11ᵀ, whose inverse is I − λ/(1+λn_g)·11ᵀ), leaving a
//! one-dimensional search over λ.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{Dataset, Dim, ParticipantId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Block {
    /// Video indicators.
    Vid,
    /// Demographics: centered age, gender and nationality indicators.
    De,
    /// The six HEXACO personality scores.
    Pe,
    /// Pre-session mood (p, a, d).
    Mo,
    /// Affect of the selected memory (p, a, d).
    Ma,
}

impl Block {
    pub const ALL: [Block; 5] = [Block::Vid, Block::De, Block::Pe, Block::Mo, Block::Ma];

    pub fn parse(s: &str) -> Result<Block> {
        match s.trim() {
            "Vid" | "vid" => Ok(Block::Vid),
            "De" | "de" => Ok(Block::De),
            "Pe" | "pe" => Ok(Block::Pe),
            "Mo" | "mo" => Ok(Block::Mo),
            "Ma" | "ma" => Ok(Block::Ma),
            other => Err(Error::Config(format!(
                "unknown design block {other:?} (expected Vid, De, Pe, Mo or Ma)"
            ))),
        }
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A set of blocks, written like `Vid+(De+Pe+Mo)+Ma`. Order is canonical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSpec(BTreeSet<Block>);

impl BlockSpec {
    pub fn new(blocks: impl IntoIterator<Item = Block>) -> Self {
        BlockSpec(blocks.into_iter().collect())
    }

    pub fn parse(s: &str) -> Result<Self> {
        let cleaned: String = s.chars().filter(|c| !matches!(c, '(' | ')' | ' ')).collect();
        if cleaned.is_empty() {
            return Ok(BlockSpec(BTreeSet::new()));
        }
        cleaned
            .split('+')
            .map(Block::parse)
            .collect::<Result<BTreeSet<_>>>()
            .map(BlockSpec)
    }

    pub fn blocks(&self) -> impl Iterator<Item = Block> + '_ {
        self.0.iter().copied()
    }
}

impl fmt::Display for BlockSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.0.iter().map(|b| b.to_string()).collect();
        f.write_str(&names.join("+"))
    }
}

/// Fixed-effects design: an intercept column followed by the requested blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub names: Vec<String>,
    /// Column range of each block.
    pub blocks: Vec<(Block, std::ops::Range<usize>)>,
    pub x: Matrix,
}

impl DesignMatrix {
    pub fn rows(&self) -> usize {
        self.x.rows()
    }

    pub fn cols(&self) -> usize {
        self.x.cols()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Indicators for every level but the first (sorted) one.
fn one_hot<'a>(values: impl Iterator<Item = &'a str> + Clone, prefix: &str) -> Vec<(String, Vec<f64>)> {
    let levels: BTreeSet<&str> = values.clone().collect();
    levels
        .into_iter()
        .skip(1)
        .map(|lvl| {
            let col = values.clone().map(|v| (v == lvl) as u8 as f64).collect();
            (format!("{prefix}[{lvl}]"), col)
        })
        .collect()
}

pub fn build_design(ds: &Dataset, spec: &BlockSpec) -> Result<DesignMatrix> {
    let rs = ds.responses();
    let n = rs.len();
    let mut columns: Vec<(String, Vec<f64>)> = vec![("(intercept)".into(), vec![1.0; n])];
    let mut blocks = Vec::new();
    for block in spec.blocks() {
        let start = columns.len();
        match block {
            Block::Vid => columns.extend(one_hot(rs.iter().map(|r| r.video_id.as_str()), "vid")),
            Block::De => {
                let mean_age = rs.iter().map(|r| r.context.age as f64).sum::<f64>() / n.max(1) as f64;
                columns.push((
                    "age".into(),
                    rs.iter().map(|r| r.context.age as f64 - mean_age).collect(),
                ));
                columns.extend(one_hot(rs.iter().map(|r| r.context.gender.as_str()), "gender"));
                columns.extend(one_hot(
                    rs.iter().map(|r| r.context.nationality.as_str()),
                    "nationality",
                ));
            }
            Block::Pe => {
                for (j, trait_name) in ["H", "E", "X", "A", "C", "O"].iter().enumerate() {
                    columns.push((
                        format!("hexaco[{trait_name}]"),
                        rs.iter().map(|r| r.context.hexaco[j]).collect(),
                    ));
                }
            }
            Block::Mo | Block::Ma => {
                let triples = rs
                    .iter()
                    .enumerate()
                    .map(|(i, r)| {
                        if block == Block::Mo {
                            return Ok(r.context.mood);
                        }
                        r.selected_memory().map(|m| m.affect).ok_or_else(|| {
                            Error::invalid(format!(
                                "response {i} has no memory; the Ma block needs the memory subset"
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let prefix = if block == Block::Mo { "mood" } else { "ma" };
                for dim in Dim::ALL {
                    columns.push((
                        format!("{prefix}[{}]", dim.to_string().to_lowercase()),
                        triples.iter().map(|t| t.get(dim)).collect(),
                    ));
                }
            }
        }
        blocks.push((block, start..columns.len()));
    }
    let p = columns.len();
    let mut data = vec![0.0; n * p];
    for (j, (_, col)) in columns.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            data[i * p + j] = *v;
        }
    }
    let x = Matrix::new(n, p, data)?;
    x.check_finite("design matrix")?;
    Ok(DesignMatrix {
        names: columns.into_iter().map(|(name, _)| name).collect(),
        blocks,
        x,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Reml,
    Ml,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmmFit {
    pub method: Method,
    /// Names of the columns kept after removing linearly dependent ones.
    pub names: Vec<String>,
    pub dropped: Vec<String>,
    pub fixed_coefs: Vec<f64>,
    pub sigma2_u: f64,
    pub sigma2_e: f64,
    pub lambda: f64,
    pub loglik: f64,
    pub marginal_r2: f64,
    pub n_obs: usize,
    pub n_groups: usize,
}

/// Indices of a maximal linearly independent prefix-greedy column subset
/// (modified Gram–Schmidt).
fn independent_columns(x: &Matrix) -> Vec<usize> {
    let n = x.rows();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut keep = Vec::new();
    for j in 0..x.cols() {
        let mut v = x.col(j);
        let norm0 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm0 == 0.0 {
            continue;
        }
        for q in &basis {
            let d: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-9 * norm0 && n > 0 {
            v.iter_mut().for_each(|a| *a /= norm);
            basis.push(v);
            keep.push(j);
        }
    }
    keep
}

/// Sufficient statistics of the profiled likelihood.
struct Profile {
    n: usize,
    p: usize,
    xtx: DMatrix<f64>,
    xty: DVector<f64>,
    yty: f64,
    /// Per group: size, column sums, sum of y.
    groups: Vec<(f64, DVector<f64>, f64)>,
}

struct Eval {
    loglik: f64,
    beta: DVector<f64>,
    sigma2_e: f64,
}

impl Profile {
    fn new(y: &[f64], x: &Matrix, cols: &[usize], groups: &[ParticipantId]) -> Self {
        let (n, p) = (y.len(), cols.len());
        let mut xtx = DMatrix::zeros(p, p);
        let mut xty = DVector::zeros(p);
        let mut yty = 0.0;
        let mut by_group: BTreeMap<&ParticipantId, (f64, DVector<f64>, f64)> = BTreeMap::new();
        let mut xi = DVector::zeros(p);
        for (i, g) in groups.iter().enumerate() {
            let row = x.row(i);
            for (k, &j) in cols.iter().enumerate() {
                xi[k] = row[j];
            }
            xtx.ger(1.0, &xi, &xi, 1.0);
            xty.axpy(y[i], &xi, 1.0);
            yty += y[i] * y[i];
            let e = by_group
                .entry(g)
                .or_insert_with(|| (0.0, DVector::zeros(p), 0.0));
            e.0 += 1.0;
            e.1 += &xi;
            e.2 += y[i];
        }
        Profile {
            n,
            p,
            xtx,
            xty,
            yty,
            groups: by_group.into_values().collect(),
        }
    }

    fn eval(&self, lambda: f64, method: Method) -> Result<Eval> {
        let mut a = self.xtx.clone();
        let mut b = self.xty.clone();
        let mut q = self.yty;
        let mut logdet_v = 0.0;
        if lambda > 0.0 {
            for (ng, s, ys) in &self.groups {
                let c = lambda / (1.0 + lambda * ng);
                a.ger(-c, s, s, 1.0);
                b.axpy(-c * ys, s, 1.0);
                q -= c * ys * ys;
                logdet_v += (lambda * ng).ln_1p();
            }
        }
        let chol = a.clone().cholesky().ok_or_else(|| {
            Error::Numerical(format!("GLS normal equations not positive definite at λ = {lambda}"))
        })?;
        let beta = chol.solve(&b);
        let rss = (q - b.dot(&beta)).max(0.0);
        let logdet_a: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let two_pi = 2.0 * std::f64::consts::PI;
        let (m, extra) = match method {
            Method::Ml => (self.n as f64, 0.0),
            Method::Reml => ((self.n - self.p) as f64, logdet_a),
        };
        if rss <= 0.0 {
            return Err(Error::Numerical("residual sum of squares is zero".into()));
        }
        let sigma2_e = rss / m;
        let loglik = -0.5 * (m * (two_pi * sigma2_e).ln() + logdet_v + extra + m);
        Ok(Eval {
            loglik,
            beta,
            sigma2_e,
        })
    }
}

/// Profiled (restricted) log-likelihood at variance ratio `lambda`. The REML
/// criterion is −½[(n−p)·log(2πσ̂²) + log|V₀| + log|XᵀV₀⁻¹X| + (n−p)] with
/// V₀ = I + λZZᵀ and σ̂² = rᵀV₀⁻¹r/(n−p); ML uses n and omits the XᵀV₀⁻¹X term.
pub fn profile_loglik(
    y: &[f64],
    x: &DesignMatrix,
    groups: &[ParticipantId],
    lambda: f64,
    method: Method,
) -> Result<f64> {
    check_inputs(y, x, groups)?;
    let cols: Vec<usize> = (0..x.cols()).collect();
    Profile::new(y, &x.x, &cols, groups)
        .eval(lambda, method)
        .map(|e| e.loglik)
}

fn check_inputs(y: &[f64], x: &DesignMatrix, groups: &[ParticipantId]) -> Result<()> {
    crate::matrix::check_targets(y, x.rows(), "mixed model response")?;
    if groups.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            actual: groups.len(),
            context: "group labels".into(),
        });
    }
    Ok(())
}

/// λ grid: 0 and 10^k for k = −6, −5.75, …, 4.
fn lambda_grid() -> Vec<f64> {
    std::iter::once(0.0)
        .chain((0..=40).map(|k| 10f64.powf(-6.0 + 0.25 * k as f64)))
        .collect()
}

const GOLDEN_MAX_ITER: usize = 200;

/// Maximizes `f` on [lo, hi] by golden-section search until an iteration
/// improves the best value by < 1e-8 with the bracket below `xtol`.
fn golden(
    f: &dyn Fn(f64) -> Result<f64>,
    mut lo: f64,
    mut hi: f64,
    xtol: f64,
) -> Result<(f64, f64)> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    let mut best = f1.max(f2);
    let mut trace = Vec::new();
    for _ in 0..GOLDEN_MAX_ITER {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2)?;
        }
        let new_best = f1.max(f2);
        let improvement = new_best - best;
        best = best.max(new_best);
        trace.push((lo, hi, best));
        if improvement < 1e-8 && hi - lo < xtol {
            return Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) });
        }
    }
    let tail: Vec<String> = trace
        .iter()
        .rev()
        .take(5)
        .map(|(l, h, b)| format!("[{l:.3e}, {h:.3e}] → {b:.10}"))
        .collect();
    Err(Error::Numerical(format!(
        "variance-ratio search did not converge in {GOLDEN_MAX_ITER} iterations; last brackets: {}",
        tail.join("; ")
    )))
}

/// Fits y = Xβ + u_participant + e with u ~ N(0, σ²_u), e ~ N(0, σ²_e).
pub fn fit_lmm(
    y: &[f64],
    x: &DesignMatrix,
    groups: &[ParticipantId],
    method: Method,
) -> Result<LmmFit> {
    check_inputs(y, x, groups)?;
    let keep = independent_columns(&x.x);
    let dropped: Vec<String> = (0..x.cols())
        .filter(|j| !keep.contains(j))
        .map(|j| x.names[j].clone())
        .collect();
    if !dropped.is_empty() {
        log::warn!("dropping linearly dependent design columns: {}", dropped.join(", "));
    }
    let n = y.len();
    let p = keep.len();
    if n <= p {
        return Err(Error::invalid(format!(
            "mixed model needs more observations ({n}) than independent columns ({p})"
        )));
    }
    let profile = Profile::new(y, &x.x, &keep, groups);
    let n_groups = profile.groups.len();
    if n_groups < 2 {
        return Err(Error::invalid("mixed model needs at least two groups"));
    }

    let singletons = profile.groups.iter().all(|(ng, _, _)| *ng == 1.0);
    let lambda = if singletons {
        log::warn!("every group has a single observation; σ²_u is unidentifiable and pinned to 0");
        0.0
    } else {
        optimize_lambda(&profile, method)?
    };
    let e = profile.eval(lambda, method)?;
    let fixed_coefs: Vec<f64> = e.beta.iter().copied().collect();
    let sigma2_u = lambda * e.sigma2_e;
    let names: Vec<String> = keep.iter().map(|&j| x.names[j].clone()).collect();
    let fitted = fitted_values(&x.x, &keep, &fixed_coefs);
    Ok(LmmFit {
        method,
        names,
        dropped,
        marginal_r2: r2m(&fitted, sigma2_u, e.sigma2_e),
        fixed_coefs,
        sigma2_u,
        sigma2_e: e.sigma2_e,
        lambda,
        loglik: e.loglik,
        n_obs: n,
        n_groups,
    })
}

fn optimize_lambda(profile: &Profile, method: Method) -> Result<f64> {
    let grid = lambda_grid();
    let values = grid
        .iter()
        .map(|&l| profile.eval(l, method).map(|e| e.loglik))
        .collect::<Result<Vec<f64>>>()?;
    let mut k = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[k] {
            k = i;
        }
    }
    let mut best = (grid[k], values[k]);
    let refined = if k <= 1 {
        // bracket touches λ = 0: search linearly
        let f = |l: f64| profile.eval(l, method).map(|e| e.loglik);
        golden(&f, 0.0, grid[k + 1], 1e-9 * grid[k + 1])?
    } else {
        let f = |t: f64| profile.eval(10f64.powf(t), method).map(|e| e.loglik);
        let hi = grid.get(k + 1).copied().unwrap_or(grid[k]);
        let (t, v) = golden(&f, grid[k - 1].log10(), hi.log10(), 1e-7)?;
        (10f64.powf(t), v)
    };
    if refined.1 > best.1 {
        best = refined;
    }
    Ok(best.0)
}

fn fitted_values(x: &Matrix, cols: &[usize], beta: &[f64]) -> Vec<f64> {
    (0..x.rows())
        .map(|i| {
            let row = x.row(i);
            cols.iter().zip(beta).map(|(&j, b)| row[j] * b).sum()
        })
        .collect()
}

fn r2m(fitted: &[f64], sigma2_u: f64, sigma2_e: f64) -> f64 {
    let vf = crate::matrix::variance(fitted);
    let total = vf + sigma2_u + sigma2_e;
    if total > 0.0 {
        (vf / total).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Var(Xβ) / (Var(Xβ) + σ²_u + σ²_e), with the population variance of the
/// fixed-effect predictions over the rows of `x`.
pub fn marginal_r2(fit: &LmmFit, x: &DesignMatrix) -> Result<f64> {
    let cols = fit
        .names
        .iter()
        .map(|n| {
            x.column_index(n)
                .ok_or_else(|| Error::invalid(format!("design lacks fitted column {n}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(r2m(
        &fitted_values(&x.x, &cols, &fit.fixed_coefs),
        fit.sigma2_u,
        fit.sigma2_e,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub delta_r2m: f64,
    /// 2·(loglik_big − loglik_small), floored at 0.
    pub lr: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Likelihood-ratio comparison of two nested ML fits.
pub fn compare_nested(
    small: &LmmFit,
    big: &LmmFit,
    x_small: &DesignMatrix,
    x_big: &DesignMatrix,
) -> Result<Comparison> {
    if small.method != Method::Ml || big.method != Method::Ml {
        return Err(Error::invalid(
            "likelihood-ratio tests need maximum-likelihood fits, not REML",
        ));
    }
    let big_cols: BTreeSet<&String> = x_big.names.iter().collect();
    if let Some(c) = x_small.names.iter().find(|c| !big_cols.contains(c)) {
        return Err(Error::invalid(format!(
            "designs are not nested: column {c} is missing from the larger model"
        )));
    }
    if small.n_obs != big.n_obs {
        return Err(Error::invalid("nested fits must use the same observations"));
    }
    let df = big.fixed_coefs.len().saturating_sub(small.fixed_coefs.len());
    let lr = (2.0 * (big.loglik - small.loglik)).max(0.0);
    let p_value = if df == 0 {
        1.0
    } else {
        let chi = ChiSquared::new(df as f64).map_err(|e| Error::Numerical(e.to_string()))?;
        chi.sf(lr)
    };
    Ok(Comparison {
        delta_r2m: big.marginal_r2 - small.marginal_r2,
        lr,
        df,
        p_value,
    })
}

/// The three nested models: `Vid`, `Vid+De+Pe+Mo`, `Vid+De+Pe+Mo+Ma`.
pub fn nested_specs() -> [BlockSpec; 3] {
    use Block::*;
    [
        BlockSpec::new([Vid]),
        BlockSpec::new([Vid, De, Pe, Mo]),
        BlockSpec::new([Vid, De, Pe, Mo, Ma]),
    ]
}

pub const STEP_LABELS: [&str; 3] = ["Vid", "+(De+Pe+Mo)", "+Ma"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceRow {
    pub dim: Dim,
    /// Cumulative marginal R² of the three nested models.
    pub r2m: [f64; 3],
    /// Increment of each step over the previous one (the first is r2m[0]).
    pub delta_r2m: [f64; 3],
    /// ML likelihood-ratio tests of step 2 vs 1 and step 3 vs 2.
    pub tests: [Comparison; 2],
    pub sigma2_u: f64,
    pub sigma2_e: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub method: Method,
    pub n_responses: usize,
    pub n_participants: usize,
    pub models: Vec<String>,
    pub rows: Vec<VarianceRow>,
}

impl VarianceReport {
    pub fn row(&self, dim: Dim) -> Option<&VarianceRow> {
        self.rows.iter().find(|r| r.dim == dim)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Fits the three nested models per dimension on a memory-subset dataset.
/// Marginal R² comes from `method` fits; tests always use ML refits.
pub fn analyze(ds: &Dataset, method: Method) -> Result<VarianceReport> {
    let specs = nested_specs();
    let designs = specs
        .iter()
        .map(|s| build_design(ds, s))
        .collect::<Result<Vec<_>>>()?;
    let groups: Vec<ParticipantId> = ds.responses().iter().map(|r| r.participant_id.clone()).collect();
    let rows = Dim::ALL
        .par_iter()
        .map(|&dim| -> Result<VarianceRow> {
            let y: Vec<f64> = ds.responses().iter().map(|r| r.induced.get(dim)).collect();
            let fits = designs
                .iter()
                .map(|x| fit_lmm(&y, x, &groups, method))
                .collect::<Result<Vec<_>>>()?;
            let ml = designs
                .iter()
                .map(|x| fit_lmm(&y, x, &groups, Method::Ml))
                .collect::<Result<Vec<_>>>()?;
            let r2m = [fits[0].marginal_r2, fits[1].marginal_r2, fits[2].marginal_r2];
            Ok(VarianceRow {
                dim,
                r2m,
                delta_r2m: [r2m[0], r2m[1] - r2m[0], r2m[2] - r2m[1]],
                tests: [
                    compare_nested(&ml[0], &ml[1], &designs[0], &designs[1])?,
                    compare_nested(&ml[1], &ml[2], &designs[1], &designs[2])?,
                ],
                sigma2_u: fits[2].sigma2_u,
                sigma2_e: fits[2].sigma2_e,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VarianceReport {
        method,
        n_responses: ds.len(),
        n_participants: ds.participants().len(),
        models: specs.iter().map(|s| s.to_string()).collect(),
        rows,
    })
}

fn fmt_r2(v: f64) -> String {
    let s = format!("{v:.3}");
    match s.strip_prefix("0.") {
        Some(rest) => format!(".{rest}"),
        None => s.replacen("-0.", "-.", 1),
    }
}

fn fmt_p(p: f64) -> String {
    if p < 0.001 {
        "<.001".into()
    } else {
        fmt_r2(p)
    }
}

/// Rows P/A/D; columns the cumulative R²m of Vid, +(De+Pe+Mo), +Ma, then the
/// two increments with their likelihood-ratio p-values.
pub fn render_variance_table(r: &VarianceReport) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "Marginal R² of nested mixed models ({}, {} responses, {} participants)",
        match r.method {
            Method::Reml => "REML",
            Method::Ml => "ML",
        },
        r.n_responses,
        r.n_participants
    )
    .unwrap();
    writeln!(
        out,
        "{:<3} {:>7} {:>12} {:>7}   {:>16} {:>16}",
        "", STEP_LABELS[0], STEP_LABELS[1], STEP_LABELS[2], "ΔR²m (p) ctx", "ΔR²m (p) Ma"
    )
    .unwrap();
    for row in &r.rows {
        writeln!(
            out,
            "{:<3} {:>7} {:>12} {:>7}   {:>16} {:>16}",
            row.dim.to_string(),
            fmt_r2(row.r2m[0]),
            fmt_r2(row.r2m[1]),
            fmt_r2(row.r2m[2]),
            format!("{} ({})", fmt_r2(row.delta_r2m[1]), fmt_p(row.tests[0].p_value)),
            format!("{} ({})", fmt_r2(row.delta_r2m[2]), fmt_p(row.tests[1].p_value)),
        )
        .unwrap();
    }
    out
}
