use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_dim, check_training, ClassScores, ClassifyError};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RfConfig {
    pub n_trees: usize,
    /// Features evaluated per split; `None` means `round(sqrt(dim))`.
    pub max_features: Option<usize>,
    /// Draw an n-sample bootstrap per tree; otherwise every tree sees all rows once.
    pub bootstrap: bool,
    pub min_samples_split: usize,
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl Default for RfConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_features: None,
            bootstrap: true,
            min_samples_split: 2,
            max_depth: None,
            seed: 0,
        }
    }
}

impl RfConfig {
    pub fn resolved_max_features(&self, dim: usize) -> usize {
        self.max_features
            .unwrap_or_else(|| ((dim as f64).sqrt().round() as usize).max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        freq: Vec<f64>,
    },
}

/// Binary tree stored as an arena; node 0 is the root. Rows with
/// `value <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn leaf_for(&self, v: &[f64]) -> &[f64] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { freq } => return freq,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if v[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &DecisionTree, at: usize) -> usize {
            match &t.nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(t, *left).max(walk(t, *right)),
            }
        }
        walk(self, 0)
    }
}

/// Gini impurity `1 - sum p_c^2` of a class-count vector.
pub fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Sample-weighted Gini impurity of the two children.
    pub impurity: f64,
}

fn midpoint(a: f64, b: f64) -> f64 {
    let t = a + (b - a) / 2.0;
    if t < b {
        t
    } else {
        a
    }
}

/// Best `(feature, threshold)` among `features` for the rows in `indices`
/// (duplicates count with multiplicity). Thresholds are midpoints between
/// consecutive distinct values. Ties go to the lower feature, then the lower
/// threshold. `None` when no feature has two distinct values.
pub fn best_split(
    rows: &[Vec<f64>],
    labels: &[usize],
    indices: &[usize],
    features: &[usize],
    n_classes: usize,
) -> Option<Split> {
    let n = indices.len();
    let mut total = vec![0usize; n_classes];
    for &i in indices {
        total[labels[i]] += 1;
    }
    let mut best: Option<Split> = None;
    let mut column: Vec<(f64, usize)> = Vec::with_capacity(n);
    let mut left = vec![0usize; n_classes];
    for &f in features {
        column.clear();
        column.extend(indices.iter().map(|&i| (rows[i][f], labels[i])));
        column.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        left.iter_mut().for_each(|c| *c = 0);
        for k in 0..n - 1 {
            left[column[k].1] += 1;
            let (a, b) = (column[k].0, column[k + 1].0);
            if a >= b {
                continue;
            }
            let nl = (k + 1) as f64;
            let nr = (n - k - 1) as f64;
            let sl: f64 = left.iter().map(|&c| (c * c) as f64).sum();
            let sr: f64 = left
                .iter()
                .zip(&total)
                .map(|(&l, &t)| ((t - l) * (t - l)) as f64)
                .sum();
            let impurity = ((nl - sl / nl) + (nr - sr / nr)) / n as f64;
            let candidate = Split {
                feature: f,
                threshold: midpoint(a, b),
                impurity,
            };
            let better = match best {
                None => true,
                Some(cur) => {
                    impurity < cur.impurity
                        || (impurity == cur.impurity
                            && (f, candidate.threshold) < (cur.feature, cur.threshold))
                }
            };
            if better {
                best = Some(candidate);
            }
        }
    }
    best
}

struct TreeBuilder<'a> {
    rows: &'a [Vec<f64>],
    labels: &'a [usize],
    n_classes: usize,
    max_features: usize,
    config: &'a RfConfig,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

impl TreeBuilder<'_> {
    fn leaf(&mut self, counts: &[usize]) -> usize {
        let n: usize = counts.iter().sum();
        let freq = counts.iter().map(|&c| c as f64 / n as f64).collect();
        self.nodes.push(Node::Leaf { freq });
        self.nodes.len() - 1
    }

    fn grow(&mut self, indices: &[usize], depth: usize) -> usize {
        let mut counts = vec![0usize; self.n_classes];
        for &i in indices {
            counts[self.labels[i]] += 1;
        }
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_capped = self.config.max_depth.is_some_and(|d| depth >= d);
        if pure || indices.len() < self.config.min_samples_split.max(2) || depth_capped {
            return self.leaf(&counts);
        }
        let dim = self.rows[0].len();
        let mut features = index::sample(&mut self.rng, dim, self.max_features).into_vec();
        features.sort_unstable();
        let parent = gini(&counts);
        let split = match best_split(self.rows, self.labels, indices, &features, self.n_classes) {
            Some(s) if s.impurity < parent => s,
            _ => return self.leaf(&counts),
        };
        let (l, r): (Vec<usize>, Vec<usize>) = indices
            .iter()
            .partition(|&&i| self.rows[i][split.feature] <= split.threshold);
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf { freq: Vec::new() });
        let left = self.grow(&l, depth + 1);
        let right = self.grow(&r, depth + 1);
        self.nodes[at] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        at
    }
}

/// Random forest of unpruned Gini trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfModel {
    config: RfConfig,
    dim: usize,
    classes: Vec<String>,
    trees: Vec<DecisionTree>,
    /// Set when the training labels held a single class; the forest then
    /// predicts that class unconditionally.
    degenerate: bool,
}

impl RfModel {
    /// Tree `t` draws from its own stream `derive(config.seed, t)`, so trees
    /// are built in parallel with results identical to sequential training.
    pub fn train(
        rows: &[Vec<f64>],
        labels: &[usize],
        classes: Vec<String>,
        config: RfConfig,
    ) -> Result<Self, ClassifyError> {
        let dim = check_training(rows, labels, &classes)?;
        if rows.len() < 2 {
            return Err(ClassifyError::InsufficientData(format!(
                "random forest needs at least 2 samples (got {})",
                rows.len()
            )));
        }
        if config.n_trees == 0 {
            return Err(ClassifyError::BadConfig("tree count must be at least 1".into()));
        }
        let max_features = config.resolved_max_features(dim);
        if !(1..=dim).contains(&max_features) {
            return Err(ClassifyError::BadConfig(format!(
                "max_features {max_features} outside 1..={dim}"
            )));
        }
        let mut present = labels.to_vec();
        present.sort_unstable();
        present.dedup();
        let degenerate = present.len() < 2;
        if degenerate {
            log::warn!("random forest trained on a single class; predictions are constant");
        }
        let n = rows.len();
        let trees = (0..config.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = seed::rng(seed::derive(config.seed, t as u64));
                let sample: Vec<usize> = if config.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                let mut b = TreeBuilder {
                    rows,
                    labels,
                    n_classes: classes.len(),
                    max_features,
                    config: &config,
                    rng,
                    nodes: Vec::new(),
                };
                b.grow(&sample, 0);
                DecisionTree { nodes: b.nodes }
            })
            .collect();
        Ok(Self {
            config,
            dim,
            classes,
            trees,
            degenerate,
        })
    }

    pub fn predict(&self, v: &[f64]) -> Result<(usize, ClassScores), ClassifyError> {
        check_dim(self.dim, v)?;
        let mut scores = vec![0.0; self.classes.len()];
        for t in &self.trees {
            for (s, f) in scores.iter_mut().zip(t.leaf_for(v)) {
                *s += f;
            }
        }
        let k = self.trees.len() as f64;
        let scores = ClassScores(scores.into_iter().map(|s| s / k).collect());
        Ok((scores.argmax(), scores))
    }

    pub fn config(&self) -> &RfConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Builds a forest from explicit trees, mainly for tests and tooling.
    pub fn from_trees(
        dim: usize,
        classes: Vec<String>,
        trees: Vec<DecisionTree>,
        config: RfConfig,
    ) -> Self {
        Self {
            config,
            dim,
            classes,
            trees,
            degenerate: false,
        }
    }
}
