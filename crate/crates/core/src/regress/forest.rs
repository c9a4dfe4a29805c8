//! Random forest regression: CART trees on bootstrap resamples with a random
//! feature subset per node.
//!
//! Split search runs on per-feature histograms. Candidate thresholds are the
//! midpoints between consecutive distinct training values, so the search is exact
//! whenever a feature has at most `max_bins` distinct values; beyond that the
//! candidates are thinned to quantiles.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{check_targets, Matrix};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Fraction of features tried at each split.
    pub max_features: f64,
    /// Minimum number of (bootstrap-weighted) training targets per leaf.
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
    pub seed: u64,
    pub max_bins: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_features: 1.0 / 3.0,
            min_leaf: 2,
            max_depth: None,
            seed: 0,
            max_bins: 256,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.n_trees > 0
            && self.max_features > 0.0
            && self.max_features <= 1.0
            && self.min_leaf > 0
            && (2..=256).contains(&self.max_bins);
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid forest parameters {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
        /// Training targets (with bootstrap multiplicity) in this leaf.
        count: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut k = 0;
        loop {
            match &self.nodes[k] {
                Node::Leaf { value, .. } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => k = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn leaf_counts(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { count, .. } => Some(*count),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub params: ForestParams,
    pub n_features: usize,
    pub trees: Vec<Tree>,
}

/// Training data quantized to per-feature candidate thresholds.
struct Binned {
    n: usize,
    /// Column-major bin codes.
    codes: Vec<u8>,
    thresholds: Vec<Vec<f64>>,
}

impl Binned {
    fn new(x: &Matrix, max_bins: usize) -> Self {
        let (n, d) = (x.rows(), x.cols());
        let mut codes = vec![0u8; n * d];
        let mut thresholds = Vec::with_capacity(d);
        for j in 0..d {
            let mut col = x.col(j);
            col.sort_by(f64::total_cmp);
            let mut distinct = col.clone();
            distinct.dedup();
            let cuts: Vec<f64> = if distinct.len() <= max_bins {
                distinct.windows(2).map(|w| midpoint(w[0], w[1])).collect()
            } else {
                let mut cuts: Vec<f64> = (1..max_bins)
                    .filter_map(|k| {
                        let v = col[k * n / max_bins];
                        let pos = distinct.partition_point(|u| *u < v);
                        (pos > 0).then(|| midpoint(distinct[pos - 1], v))
                    })
                    .collect();
                cuts.dedup();
                cuts
            };
            for i in 0..n {
                let v = x.get(i, j);
                codes[j * n + i] = cuts.partition_point(|t| *t < v) as u8;
            }
            thresholds.push(cuts);
        }
        Binned {
            n,
            codes,
            thresholds,
        }
    }

    fn code(&self, feature: usize, row: usize) -> usize {
        self.codes[feature * self.n + row] as usize
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    // guard against a midpoint that rounds onto b
    if m >= b {
        a
    } else {
        m
    }
}

struct TreeBuilder<'a> {
    data: &'a Binned,
    y: &'a [f64],
    weight: Vec<u32>,
    params: &'a ForestParams,
    mtry: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    count: Vec<f64>,
    sum: Vec<f64>,
    occupied: Vec<u8>,
}

struct Best {
    feature: usize,
    bin: usize,
    gain: f64,
}

impl TreeBuilder<'_> {
    fn leaf(&mut self, rows: &[usize]) -> usize {
        let (mut w, mut s) = (0.0, 0.0);
        for &i in rows {
            w += self.weight[i] as f64;
            s += self.weight[i] as f64 * self.y[i];
        }
        self.nodes.push(Node::Leaf {
            value: s / w,
            count: w as usize,
        });
        self.nodes.len() - 1
    }

    fn best_split(&mut self, rows: &[usize], total_w: f64, total_s: f64) -> Option<Best> {
        let d = self.data.thresholds.len();
        let min_leaf = self.params.min_leaf as f64;
        let parent = total_s * total_s / total_w;
        let mut best: Option<Best> = None;
        let features = sample(&mut self.rng, d, self.mtry);
        for f in features.iter() {
            let nb = self.data.thresholds[f].len() + 1;
            if nb < 2 {
                continue;
            }
            // only occupied bins are visited; skipping empty ones adds nothing
            self.occupied.clear();
            for &i in rows {
                let b = self.data.code(f, i);
                let w = self.weight[i] as f64;
                if self.count[b] == 0.0 {
                    self.occupied.push(b as u8);
                }
                self.count[b] += w;
                self.sum[b] += w * self.y[i];
            }
            self.occupied.sort_unstable();
            let (mut lw, mut ls) = (0.0, 0.0);
            for &b in &self.occupied[..self.occupied.len() - 1] {
                let b = b as usize;
                lw += self.count[b];
                ls += self.sum[b];
                let rw = total_w - lw;
                if lw < min_leaf {
                    continue;
                }
                if rw < min_leaf {
                    break;
                }
                let rs = total_s - ls;
                let gain = ls * ls / lw + rs * rs / rw - parent;
                if gain > 1e-12 * (1.0 + parent.abs())
                    && best.as_ref().is_none_or(|bst| gain > bst.gain)
                {
                    best = Some(Best {
                        feature: f,
                        bin: b,
                        gain,
                    });
                }
            }
            for &b in &self.occupied {
                self.count[b as usize] = 0.0;
                self.sum[b as usize] = 0.0;
            }
        }
        best
    }

    fn grow(&mut self, rows: &mut [usize], depth: usize) -> usize {
        let (mut w, mut s) = (0.0, 0.0);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &i in rows.iter() {
            w += self.weight[i] as f64;
            s += self.weight[i] as f64 * self.y[i];
            lo = lo.min(self.y[i]);
            hi = hi.max(self.y[i]);
        }
        let depth_ok = self.params.max_depth.is_none_or(|m| depth < m);
        if w < 2.0 * self.params.min_leaf as f64 || !depth_ok || lo == hi {
            return self.leaf(rows);
        }
        let Some(best) = self.best_split(rows, w, s) else {
            return self.leaf(rows);
        };
        let mut k = 0;
        for r in 0..rows.len() {
            if self.data.code(best.feature, rows[r]) <= best.bin {
                rows.swap(k, r);
                k += 1;
            }
        }
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: 0.0,
            count: 0,
        });
        let (left_rows, right_rows) = rows.split_at_mut(k);
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: self.data.thresholds[best.feature][best.bin],
            left,
            right,
        };
        id
    }
}

pub fn fit_forest(x: &Matrix, y: &[f64], p: &ForestParams) -> Result<ForestModel> {
    p.validate()?;
    check_targets(y, x.rows(), "forest")?;
    x.check_finite("forest training features")?;
    let (n, d) = (x.rows(), x.cols());
    if n < 2 * p.min_leaf {
        return Err(Error::invalid(format!(
            "forest needs at least {} rows for min_leaf {}, got {n}",
            2 * p.min_leaf,
            p.min_leaf
        )));
    }
    if d == 0 {
        return Err(Error::invalid("forest needs at least one feature"));
    }
    let data = Binned::new(x, p.max_bins);
    let mtry = ((p.max_features * d as f64).round() as usize).clamp(1, d);
    let trees = (0..p.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed::derive_index(p.seed, t as u64));
            let mut weight = vec![0u32; n];
            for _ in 0..n {
                weight[rng.random_range(0..n)] += 1;
            }
            let mut rows: Vec<usize> = (0..n).filter(|&i| weight[i] > 0).collect();
            let mut b = TreeBuilder {
                data: &data,
                y,
                weight,
                params: p,
                mtry,
                rng,
                nodes: Vec::new(),
                count: vec![0.0; 256],
                sum: vec![0.0; 256],
                occupied: Vec::with_capacity(256),
            };
            b.grow(&mut rows, 0);
            Tree { nodes: b.nodes }
        })
        .collect();
    Ok(ForestModel {
        params: *p,
        n_features: d,
        trees,
    })
}

impl ForestModel {
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        x.check_cols(self.n_features, "forest prediction features")?;
        x.check_finite("forest prediction features")?;
        let k = self.trees.len() as f64;
        Ok((0..x.rows())
            .into_par_iter()
            .map(|i| {
                let r = x.row(i);
                self.trees.iter().map(|t| t.predict_row(r)).sum::<f64>() / k
            })
            .collect())
    }
}
