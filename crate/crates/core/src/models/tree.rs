//! Binary CART trees grown on weighted squared error.
//!
//! For 0/1 targets the weighted squared error of a node equals half its
//! weighted Gini impurity, so the same grower serves classification and the
//! regression trees of gradient boosting.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::features::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TreeOptions {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features examined per split; `None` examines all of them.
    pub max_features: Option<usize>,
    /// Extremely randomized trees: one uniform threshold per feature.
    pub random_thresholds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Node {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

struct Grower<'a> {
    x: &'a FeatureMatrix,
    t: &'a [f64],
    w: &'a [f64],
    opts: &'a TreeOptions,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

#[derive(Clone, Copy)]
struct Sums {
    w: f64,
    wt: f64,
    wt2: f64,
    n: usize,
}

impl Sums {
    const ZERO: Sums = Sums { w: 0.0, wt: 0.0, wt2: 0.0, n: 0 };

    fn add(&mut self, w: f64, t: f64) {
        self.w += w;
        self.wt += w * t;
        self.wt2 += w * t * t;
        self.n += 1;
    }

    fn minus(self, o: Sums) -> Sums {
        Sums { w: self.w - o.w, wt: self.wt - o.wt, wt2: self.wt2 - o.wt2, n: self.n - o.n }
    }

    fn sse(self) -> f64 {
        if self.w <= 0.0 {
            0.0
        } else {
            (self.wt2 - self.wt * self.wt / self.w).max(0.0)
        }
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    sse: f64,
}

impl Grower<'_> {
    fn sums(&self, idx: &[usize]) -> Sums {
        let mut s = Sums::ZERO;
        for &i in idx {
            s.add(self.w[i], self.t[i]);
        }
        s
    }

    fn best_exhaustive(&self, idx: &[usize], feature: usize, total: Sums) -> Option<Candidate> {
        let mut order: Vec<usize> = idx.to_vec();
        order.sort_by(|&a, &b| self.x.get(a, feature).total_cmp(&self.x.get(b, feature)).then(a.cmp(&b)));
        let min_leaf = self.opts.min_samples_leaf.max(1);
        let mut left = Sums::ZERO;
        let mut best: Option<Candidate> = None;
        for k in 0..order.len() - 1 {
            let i = order[k];
            left.add(self.w[i], self.t[i]);
            let a = self.x.get(i, feature);
            let b = self.x.get(order[k + 1], feature);
            if a == b || left.n < min_leaf || order.len() - left.n < min_leaf {
                continue;
            }
            let sse = left.sse() + total.minus(left).sse();
            if best.as_ref().is_none_or(|c| sse < c.sse) {
                let mid = 0.5 * (a + b);
                let threshold = if mid >= b { a } else { mid };
                best = Some(Candidate { feature, threshold, sse });
            }
        }
        best
    }

    fn best_random(&mut self, idx: &[usize], feature: usize, total: Sums) -> Option<Candidate> {
        let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            let v = self.x.get(i, feature);
            (lo.min(v), hi.max(v))
        });
        if !(hi > lo) {
            return None;
        }
        let threshold = self.rng.random_range(lo..hi);
        let mut left = Sums::ZERO;
        for &i in idx {
            if self.x.get(i, feature) <= threshold {
                left.add(self.w[i], self.t[i]);
            }
        }
        let min_leaf = self.opts.min_samples_leaf.max(1);
        if left.n < min_leaf || idx.len() - left.n < min_leaf {
            return None;
        }
        Some(Candidate { feature, threshold, sse: left.sse() + total.minus(left).sse() })
    }

    fn is_constant(&self, idx: &[usize], feature: usize) -> bool {
        let first = self.x.get(idx[0], feature);
        idx.iter().all(|&i| self.x.get(i, feature) == first)
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let total = self.sums(&idx);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value: if total.w > 0.0 { total.wt / total.w } else { 0.0 } });
        let parent = total.sse();
        let min_leaf = self.opts.min_samples_leaf.max(1);
        if self.opts.max_depth.is_some_and(|d| depth >= d) || idx.len() < 2 * min_leaf || parent <= 1e-14 {
            return id;
        }

        let p = self.x.n_cols();
        let mut features: Vec<usize> = (0..p).collect();
        if self.opts.max_features.is_some() || self.opts.random_thresholds {
            features.shuffle(&mut self.rng);
        }
        let budget = self.opts.max_features.unwrap_or(p);
        let mut visited = 0;
        let mut best: Option<Candidate> = None;
        for &f in &features {
            if visited >= budget {
                break;
            }
            if self.is_constant(&idx, f) {
                continue;
            }
            visited += 1;
            let cand = if self.opts.random_thresholds { self.best_random(&idx, f, total) } else { self.best_exhaustive(&idx, f, total) };
            if let Some(c) = cand {
                if best.as_ref().is_none_or(|b| c.sse < b.sse) {
                    best = Some(c);
                }
            }
        }
        // Zero-gain splits are kept, as in XOR, where only depth two helps.
        let Some(split) = best else { return id };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.x.get(i, split.feature) <= split.threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split { feature: split.feature, threshold: split.threshold, left, right };
        id
    }
}

impl Tree {
    /// Grows a tree on targets `t` with sample weights `w`; rows with zero
    /// weight are ignored. Leaves hold the weighted mean target.
    pub fn fit(x: &FeatureMatrix, t: &[f64], w: &[f64], opts: &TreeOptions, seed: u64) -> Self {
        Self::fit_with_rng(x, t, w, opts, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn fit_with_rng(x: &FeatureMatrix, t: &[f64], w: &[f64], opts: &TreeOptions, rng: ChaCha8Rng) -> Self {
        let idx: Vec<usize> = (0..x.n_rows()).filter(|&i| w[i] > 0.0).collect();
        let mut g = Grower { x, t, w, opts, rng, nodes: Vec::new() };
        if idx.is_empty() {
            return Self { nodes: vec![Node::Leaf { value: 0.0 }] };
        }
        g.grow(idx, 0);
        Self { nodes: g.nodes }
    }

    /// Index of the leaf reached by `row`.
    pub fn leaf(&self, row: &[f64]) -> usize {
        let mut k = 0;
        loop {
            match self.nodes[k] {
                Node::Leaf { .. } => return k,
                Node::Split { feature, threshold, left, right } => k = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        match self.nodes[self.leaf(row)] {
            Node::Leaf { value } => value,
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn set_leaf_value(&mut self, leaf: usize, value: f64) {
        self.nodes[leaf] = Node::Leaf { value };
    }

    pub fn depth(&self) -> usize {
        fn rec(nodes: &[Node], k: usize) -> usize {
            match nodes[k] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + rec(nodes, left).max(rec(nodes, right)),
            }
        }
        rec(&self.nodes, 0)
    }
}
