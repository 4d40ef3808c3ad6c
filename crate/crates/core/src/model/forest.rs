//! Random forest of Gini classification trees on φ(x, a) = [x, one_hot(a)].
//!
//! Each tree is grown on ⌈max_samples · n⌉ rows drawn without replacement and
//! considers every feature at every split. Leaves store the positive fraction
//! of the training rows that reach them; the forest averages leaves.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::targets;
use crate::data::LoggedDataset;
use crate::error::{invalid, Result};
use crate::rng::{derive_seed, rng_from_seed};

pub const FOREST_SIZE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfHyperparams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub max_samples: f64,
    pub n_trees: usize,
}

impl RfHyperparams {
    pub fn new(max_depth: usize, min_samples_split: usize, max_samples: f64) -> Self {
        Self { max_depth, min_samples_split, max_samples, n_trees: FOREST_SIZE }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 {
            return invalid("max_depth must be at least 1");
        }
        if self.min_samples_split < 2 {
            return invalid("min_samples_split must be at least 2");
        }
        if !(self.max_samples > 0.0 && self.max_samples <= 1.0) {
            return invalid(format!("max_samples must lie in (0, 1], got {}", self.max_samples));
        }
        if self.n_trees == 0 {
            return invalid("forest needs at least one tree");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf { value: f64, count: usize },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<TreeNode>,
    rows: Vec<usize>,
}

impl DecisionTree {
    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    /// Dataset rows this tree was trained on.
    pub fn training_rows(&self) -> &[usize] {
        &self.rows
    }

    /// Number of splits on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Index of the leaf reached by φ(x, a).
    pub fn leaf_index(&self, d_x: usize, x: &[f64], a: usize) -> usize {
        self.leaf_from(0, d_x, x, a)
    }

    fn leaf_from(&self, start: usize, d_x: usize, x: &[f64], a: usize) -> usize {
        let mut i = start;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { .. } => return i,
                TreeNode::Split { feature, threshold, left, right } => {
                    let v = if feature < d_x {
                        x[feature]
                    } else if feature - d_x == a {
                        1.0
                    } else {
                        0.0
                    };
                    i = if v <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict(&self, d_x: usize, x: &[f64], a: usize) -> f64 {
        self.leaf_value(self.leaf_index(d_x, x, a))
    }

    fn leaf_value(&self, i: usize) -> f64 {
        match self.nodes[i] {
            TreeNode::Leaf { value, .. } => value,
            TreeNode::Split { .. } => unreachable!("not a leaf"),
        }
    }

    /// Adds the prediction for every action to `out` in one descent: context
    /// splits send all actions the same way, and an action split peels off
    /// one action, so the live set is always "all but `excluded`".
    fn accumulate_all(&self, node: usize, d_x: usize, x: &[f64], excluded: &mut Vec<usize>, out: &mut [f64]) {
        match self.nodes[node] {
            TreeNode::Leaf { value, .. } => {
                for (a, o) in out.iter_mut().enumerate() {
                    if !excluded.contains(&a) {
                        *o += value;
                    }
                }
            }
            TreeNode::Split { feature, threshold, left, right } if feature < d_x => {
                let next = if x[feature] <= threshold { left } else { right };
                self.accumulate_all(next, d_x, x, excluded, out);
            }
            TreeNode::Split { feature, threshold, left, right } => {
                let b = feature - d_x;
                let zero_side = if 0.0 <= threshold { left } else { right };
                if b >= out.len() || excluded.contains(&b) {
                    self.accumulate_all(zero_side, d_x, x, excluded, out);
                    return;
                }
                let one_side = if 1.0 <= threshold { left } else { right };
                out[b] += self.leaf_value(self.leaf_from(one_side, d_x, x, b));
                excluded.push(b);
                self.accumulate_all(zero_side, d_x, x, excluded, out);
                excluded.pop();
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    d_x: usize,
    n_actions: usize,
    trees: Vec<DecisionTree>,
}

impl ForestModel {
    pub fn d_x(&self) -> usize {
        self.d_x
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub(crate) fn predict_one(&self, x: &[f64], a: usize) -> f64 {
        self.trees.iter().map(|t| t.predict(self.d_x, x, a)).sum::<f64>() / self.trees.len() as f64
    }

    pub(crate) fn predict_all(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let mut excluded = Vec::new();
        for tree in &self.trees {
            tree.accumulate_all(0, self.d_x, x, &mut excluded, out);
        }
        let n = self.trees.len() as f64;
        out.iter_mut().for_each(|o| *o /= n);
    }
}

/// Column-major feature matrix for the rows of one tree.
struct Features {
    n_features: usize,
    values: Vec<f64>,
    n_rows: usize,
}

impl Features {
    fn get(&self, feature: usize, row: usize) -> f64 {
        self.values[feature * self.n_rows + row]
    }
}

struct Grower<'a> {
    features: &'a Features,
    y: &'a [f64],
    hp: &'a RfHyperparams,
    /// For every feature, local row ids sorted by that feature; a node owns
    /// the same [lo, hi) slice in every ordering.
    orders: Vec<Vec<usize>>,
    goes_left: Vec<bool>,
    scratch: Vec<usize>,
    nodes: Vec<TreeNode>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    n_left: usize,
}

impl Grower<'_> {
    fn leaf(&mut self, lo: usize, hi: usize) -> usize {
        let order = &self.orders[0];
        let pos: f64 = order[lo..hi].iter().map(|&r| self.y[r]).sum();
        let count = hi - lo;
        self.nodes.push(TreeNode::Leaf { value: pos / count as f64, count });
        self.nodes.len() - 1
    }

    fn find_split(&self, lo: usize, hi: usize) -> Option<BestSplit> {
        let n = (hi - lo) as f64;
        let total_pos: f64 = self.orders[0][lo..hi].iter().map(|&r| self.y[r]).sum();
        let mut best: Option<(f64, BestSplit)> = None;
        for f in 0..self.features.n_features {
            let order = &self.orders[f];
            let mut left_pos = 0.0;
            for k in lo..hi - 1 {
                let r = order[k];
                left_pos += self.y[r];
                let v = self.features.get(f, r);
                let v_next = self.features.get(f, order[k + 1]);
                if v_next <= v {
                    continue;
                }
                let nl = (k + 1 - lo) as f64;
                let nr = n - nl;
                let right_pos = total_pos - left_pos;
                // Weighted Gini is minimised where Σ_child (pos² + neg²)/n_child is maximal.
                let score = (left_pos * left_pos + (nl - left_pos).powi(2)) / nl
                    + (right_pos * right_pos + (nr - right_pos).powi(2)) / nr;
                if best.as_ref().is_none_or(|(s, _)| score > *s + 1e-12) {
                    let threshold = 0.5 * (v + v_next);
                    let threshold = if threshold < v_next { threshold } else { v };
                    best = Some((score, BestSplit { feature: f, threshold, n_left: k + 1 - lo }));
                }
            }
        }
        best.map(|(_, s)| s)
    }

    fn grow(&mut self, lo: usize, hi: usize, depth: usize) -> usize {
        let count = hi - lo;
        let pos: f64 = self.orders[0][lo..hi].iter().map(|&r| self.y[r]).sum();
        let pure = pos == 0.0 || pos == count as f64;
        if depth >= self.hp.max_depth || count < self.hp.min_samples_split || pure {
            return self.leaf(lo, hi);
        }
        let Some(split) = self.find_split(lo, hi) else {
            return self.leaf(lo, hi);
        };
        for &r in &self.orders[split.feature][lo..hi] {
            self.goes_left[r] = self.features.get(split.feature, r) <= split.threshold;
        }
        for f in 0..self.orders.len() {
            self.scratch.clear();
            let order = &mut self.orders[f];
            let mut write = lo;
            for k in lo..hi {
                let r = order[k];
                if self.goes_left[r] {
                    order[write] = r;
                    write += 1;
                } else {
                    self.scratch.push(r);
                }
            }
            order[write..hi].copy_from_slice(&self.scratch);
        }
        let mid = lo + split.n_left;
        let index = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { value: 0.0, count: 0 });
        let left = self.grow(lo, mid, depth + 1);
        let right = self.grow(mid, hi, depth + 1);
        self.nodes[index] = TreeNode::Split { feature: split.feature, threshold: split.threshold, left, right };
        index
    }
}

fn grow_tree(data: &LoggedDataset, y_all: &[f64], rows: Vec<usize>, hp: &RfHyperparams) -> DecisionTree {
    let d_x = data.d_x();
    let n_features = d_x + data.n_actions();
    let m = rows.len();
    let mut values = vec![0.0; n_features * m];
    for (local, &r) in rows.iter().enumerate() {
        for (f, v) in data.context(r).iter().enumerate() {
            values[f * m + local] = *v;
        }
        values[(d_x + data.action(r)) * m + local] = 1.0;
    }
    let features = Features { n_features, values, n_rows: m };
    let y: Vec<f64> = rows.iter().map(|&r| y_all[r]).collect();
    let orders = (0..n_features)
        .map(|f| {
            let mut o: Vec<usize> = (0..m).collect();
            o.sort_by(|&a, &b| features.get(f, a).total_cmp(&features.get(f, b)));
            o
        })
        .collect();
    let mut grower = Grower {
        features: &features,
        y: &y,
        hp,
        orders,
        goes_left: vec![false; m],
        scratch: Vec::with_capacity(m),
        nodes: Vec::new(),
    };
    grower.grow(0, m, 0);
    DecisionTree { nodes: grower.nodes, rows }
}

pub fn fit_forest(data: &LoggedDataset, hp: &RfHyperparams, seed: u64) -> Result<ForestModel> {
    hp.validate()?;
    if data.is_empty() {
        return invalid("cannot fit a reward model on an empty dataset");
    }
    let n = data.len();
    let m = ((hp.max_samples * n as f64).ceil() as usize).clamp(1, n);
    let y = targets(data);
    let trees = (0..hp.n_trees)
        .map(|t| {
            let mut rng = rng_from_seed(derive_seed(seed, t as u64));
            let mut rows = index::sample(&mut rng, n, m).into_vec();
            rows.sort_unstable();
            grow_tree(data, &y, rows, hp)
        })
        .collect();
    Ok(ForestModel { d_x: data.d_x(), n_actions: data.n_actions(), trees })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    fn dataset(contexts: Vec<f64>, actions: Vec<usize>, rewards: Vec<f64>, k: usize) -> LoggedDataset {
        let n = rewards.len();
        LoggedDataset::new(contexts.len() / n, k, 1.0, contexts, actions, rewards, vec![1.0 / k as f64; n]).unwrap()
    }

    fn random_data(n: usize, seed: u64) -> LoggedDataset {
        let mut rng = rng_from_seed(seed);
        let contexts: Vec<f64> = (0..n * 3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let actions: Vec<usize> = (0..n).map(|_| rng.random_range(0..4)).collect();
        let rewards: Vec<f64> = (0..n)
            .map(|i| if contexts[3 * i] + 0.3 * actions[i] as f64 > rng.random_range(-1.0..1.5) { 1.0 } else { 0.0 })
            .collect();
        dataset(contexts, actions, rewards, 4)
    }

    #[test]
    fn all_positive_rewards_predict_one() {
        let data = dataset(vec![0.1, 0.5, -0.3, 2.0], vec![0, 1, 1, 0], vec![1.0; 4], 2);
        let f = fit_forest(&data, &RfHyperparams::new(5, 2, 0.9), 0).unwrap();
        let mut out = vec![0.0; 2];
        f.predict_all(&[7.0], &mut out);
        assert_eq!(out, vec![1.0, 1.0]);
    }

    #[test]
    fn joint_traversal_matches_per_action() {
        let data = random_data(500, 9);
        for (depth, split) in [(3, 2), (12, 2), (32, 8)] {
            let f = fit_forest(&data, &RfHyperparams::new(depth, split, 0.6), 11).unwrap();
            let mut out = vec![0.0; 4];
            for i in 0..50 {
                let x = data.context(i);
                f.predict_all(x, &mut out);
                for (a, &v) in out.iter().enumerate() {
                    assert_eq!(v, f.predict_one(x, a));
                }
            }
        }
    }

    #[test]
    fn depth_is_bounded() {
        let data = random_data(400, 1);
        for depth in [1, 2, 5] {
            let f = fit_forest(&data, &RfHyperparams::new(depth, 2, 0.8), 3).unwrap();
            assert_eq!(f.trees().len(), FOREST_SIZE);
            assert!(f.trees().iter().all(|t| t.depth() <= depth));
        }
    }

    #[test]
    fn leaves_hold_exact_positive_fraction() {
        let data = random_data(300, 2);
        let y = targets(&data);
        let f = fit_forest(&data, &RfHyperparams::new(6, 4, 0.7), 5).unwrap();
        for tree in f.trees() {
            assert_eq!(tree.training_rows().len(), 210);
            let mut sums = vec![(0.0, 0usize); tree.nodes().len()];
            for &r in tree.training_rows() {
                let leaf = tree.leaf_index(3, data.context(r), data.action(r));
                sums[leaf].0 += y[r];
                sums[leaf].1 += 1;
            }
            for (node, (pos, count)) in tree.nodes().iter().zip(sums) {
                if let TreeNode::Leaf { value, count: c } = node {
                    assert_eq!(*c, count);
                    assert_eq!(*value, pos / count as f64);
                }
            }
        }
    }

    #[test]
    fn min_samples_split_creates_leaves() {
        let data = random_data(200, 4);
        let f = fit_forest(&data, &RfHyperparams::new(32, 32, 0.5), 1).unwrap();
        for t in f.trees() {
            for node in t.nodes() {
                if let TreeNode::Leaf { count, .. } = node {
                    // A leaf is either small, pure, or at the depth limit.
                    assert!(*count >= 1);
                }
            }
            // Every split node had at least 32 rows.
            let mut counts = vec![0usize; t.nodes().len()];
            for &r in t.training_rows() {
                let mut i = 0;
                loop {
                    counts[i] += 1;
                    match t.nodes()[i] {
                        TreeNode::Leaf { .. } => break,
                        TreeNode::Split { feature, threshold, left, right } => {
                            let v = if feature < 3 {
                                data.context(r)[feature]
                            } else if feature - 3 == data.action(r) {
                                1.0
                            } else {
                                0.0
                            };
                            i = if v <= threshold { left } else { right };
                        }
                    }
                }
            }
            for (node, c) in t.nodes().iter().zip(counts) {
                if matches!(node, TreeNode::Split { .. }) {
                    assert!(c >= 32);
                }
            }
        }
    }

    #[test]
    fn step_function_is_learned() {
        let mut rng = rng_from_seed(9);
        let xs: Vec<f64> = (0..500).map(|_| rng.random_range(-1.0..1.0)).collect();
        let rewards: Vec<f64> = xs.iter().map(|&x| if x > 0.0 { 1.0 } else { 0.0 }).collect();
        let data = dataset(xs.clone(), vec![0; 500], rewards.clone(), 1);
        let f = fit_forest(&data, &RfHyperparams::new(2, 2, 0.9), 0).unwrap();
        let correct = xs.iter().zip(&rewards).filter(|(x, r)| (f.predict_one(&[**x], 0) > 0.5) == (**r == 1.0)).count();
        assert!(correct as f64 / 500.0 > 0.95);
    }

    #[test]
    fn deterministic_in_seed() {
        let data = random_data(150, 6);
        let hp = RfHyperparams::new(8, 2, 0.5);
        assert_eq!(fit_forest(&data, &hp, 1).unwrap(), fit_forest(&data, &hp, 1).unwrap());
        assert_ne!(fit_forest(&data, &hp, 1).unwrap(), fit_forest(&data, &hp, 2).unwrap());
    }

    #[test]
    fn rejects_invalid_hyperparameters() {
        let data = random_data(10, 0);
        assert!(fit_forest(&data, &RfHyperparams::new(0, 2, 0.5), 0).is_err());
        assert!(fit_forest(&data, &RfHyperparams::new(2, 1, 0.5), 0).is_err());
        assert!(fit_forest(&data, &RfHyperparams::new(2, 2, 0.0), 0).is_err());
    }
}
