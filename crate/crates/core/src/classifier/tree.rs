use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;

use super::{argmax, gini_unchecked, label_of, TrainError, CLASSES};
use crate::features::{FeatureVector, LabeledVector, FEATURE_COUNT};
use crate::frame::AttackLabel;

/// Impurity improvements smaller than this do not count.
const EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { max_depth: 12, min_samples_leaf: 2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// Samples `x[feature] <= threshold` go left.
    Split { feature: u8, threshold: f64, left: u32, right: u32 },
    /// Training samples per class that reached this leaf.
    Leaf { counts: [u32; CLASSES] },
}

impl Node {
    pub fn leaf_distribution(&self) -> Option<[f64; CLASSES]> {
        match self {
            Node::Leaf { counts } => {
                let n: u32 = counts.iter().sum();
                let mut d = [0.0; CLASSES];
                if n > 0 {
                    for (p, &c) in d.iter_mut().zip(counts) {
                        *p = c as f64 / n as f64;
                    }
                }
                Some(d)
            }
            Node::Split { .. } => None,
        }
    }
}

/// Nodes are stored in preorder with the root at index 0; children always
/// have larger indices than their parent. A tree with no nodes predicts
/// `Normal`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TreeModel {
    pub nodes: Vec<Node>,
    pub max_depth: u16,
    pub min_samples_leaf: u32,
    pub seed: u64,
    pub n_samples: u64,
}

impl TreeModel {
    pub fn predict(&self, v: &FeatureVector) -> AttackLabel {
        if self.nodes.is_empty() {
            return AttackLabel::Normal;
        }
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split { feature, threshold, left, right } => {
                    i = if v.0[*feature as usize] <= *threshold { *left } else { *right } as usize;
                }
                Node::Leaf { counts } => return label_of(argmax(counts)),
            }
        }
    }

    /// Longest root-to-leaf path in edges.
    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Split { left, right, .. } => 1 + go(nodes, *left as usize).max(go(nodes, *right as usize)),
                Node::Leaf { .. } => 0,
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            go(&self.nodes, 0)
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

pub fn fit_tree(data: &[LabeledVector], params: &TreeParams, seed: u64) -> Result<TreeModel, TrainError> {
    if data.is_empty() {
        return Err(TrainError::EmptyData);
    }
    let mut idx: Vec<usize> = (0..data.len()).collect();
    Ok(grow_tree(data, &mut idx, params, None, seed))
}

/// Feature subsampling for forests: `k` random features per split.
pub(crate) struct Subsample<'a> {
    pub k: usize,
    pub rng: &'a mut ChaCha8Rng,
}

pub(crate) fn grow_tree(
    data: &[LabeledVector],
    idx: &mut [usize],
    params: &TreeParams,
    subsample: Option<Subsample<'_>>,
    seed: u64,
) -> TreeModel {
    let mut b = Builder { data, params, subsample, nodes: Vec::new(), scratch: Vec::with_capacity(idx.len()) };
    b.grow(idx, 0);
    TreeModel {
        nodes: b.nodes,
        max_depth: params.max_depth.min(u16::MAX as usize) as u16,
        min_samples_leaf: params.min_samples_leaf.min(u32::MAX as usize) as u32,
        seed,
        n_samples: idx.len() as u64,
    }
}

struct Builder<'a, 'r> {
    data: &'a [LabeledVector],
    params: &'a TreeParams,
    subsample: Option<Subsample<'r>>,
    nodes: Vec<Node>,
    scratch: Vec<(f64, u8)>,
}

#[derive(Debug, Clone, Copy)]
struct Split {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl Builder<'_, '_> {
    fn grow(&mut self, idx: &mut [usize], depth: usize) -> u32 {
        let mut counts = [0usize; CLASSES];
        for &i in idx.iter() {
            counts[self.data[i].label.index()] += 1;
        }
        let id = self.nodes.len();
        let mut leaf = [0u32; CLASSES];
        for (l, &c) in leaf.iter_mut().zip(&counts) {
            *l = c.min(u32::MAX as usize) as u32;
        }
        self.nodes.push(Node::Leaf { counts: leaf });

        let n = idx.len();
        let min_leaf = self.params.min_samples_leaf.max(1);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if depth >= self.params.max_depth || pure || n < 2 * min_leaf {
            return id as u32;
        }
        let parent = gini_unchecked(&counts, n);
        let Some(best) = self.best_split(idx, min_leaf) else {
            return id as u32;
        };
        if best.impurity >= parent - EPS {
            return id as u32;
        }

        let mut nl = 0;
        for j in 0..n {
            if self.data[idx[j]].features.0[best.feature] <= best.threshold {
                idx.swap(nl, j);
                nl += 1;
            }
        }
        let (l, r) = idx.split_at_mut(nl);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split { feature: best.feature as u8, threshold: best.threshold, left, right };
        id as u32
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        match &mut self.subsample {
            Some(s) if s.k < FEATURE_COUNT => {
                let mut f = sample(s.rng, FEATURE_COUNT, s.k.max(1)).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..FEATURE_COUNT).collect(),
        }
    }

    fn best_split(&mut self, idx: &[usize], min_leaf: usize) -> Option<Split> {
        let n = idx.len();
        let mut best: Option<Split> = None;
        let mut total = [0usize; CLASSES];
        for &i in idx {
            total[self.data[i].label.index()] += 1;
        }
        for feature in self.candidate_features() {
            let pairs = &mut self.scratch;
            pairs.clear();
            pairs.extend(idx.iter().map(|&i| (self.data[i].features.0[feature], self.data[i].label.index() as u8)));
            pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            if pairs[0].0 == pairs[n - 1].0 {
                continue;
            }
            let mut left = [0usize; CLASSES];
            for k in 0..n - 1 {
                left[pairs[k].1 as usize] += 1;
                let (a, b) = (pairs[k].0, pairs[k + 1].0);
                let nl = k + 1;
                let nr = n - nl;
                if a == b || nl < min_leaf || nr < min_leaf {
                    continue;
                }
                let mut right = total;
                for (r, l) in right.iter_mut().zip(&left) {
                    *r -= l;
                }
                let impurity =
                    (nl as f64 * gini_unchecked(&left, nl) + nr as f64 * gini_unchecked(&right, nr)) / n as f64;
                if best.is_none_or(|b| impurity < b.impurity - EPS) {
                    best = Some(Split { feature, threshold: midpoint(a, b), impurity });
                }
            }
        }
        best
    }
}

/// Midpoint of two adjacent distinct values, kept strictly below `b`.
pub(crate) fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m < b {
        m
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn lv(x: &[f64], label: AttackLabel) -> LabeledVector {
        let mut f = FeatureVector::default();
        f.0[..x.len()].copy_from_slice(x);
        LabeledVector { features: f, label }
    }

    fn random_data(rng: &mut ChaCha8Rng, n: usize, features: usize, classes: usize, levels: u32) -> Vec<LabeledVector> {
        (0..n)
            .map(|_| {
                let x: Vec<f64> = (0..features).map(|_| rng.random_range(0..levels) as f64 * 0.5).collect();
                lv(&x, label_of(rng.random_range(0..classes)))
            })
            .collect()
    }

    /// Exhaustive stump search written independently of the builder: every
    /// feature, every midpoint, impurity from a fresh partition.
    fn brute_force_stump(data: &[LabeledVector], min_leaf: usize) -> Option<(usize, f64)> {
        let counts_of = |rows: &[&LabeledVector]| {
            let mut c = [0usize; CLASSES];
            for r in rows {
                c[r.label.index()] += 1;
            }
            c
        };
        let impurity = |c: &[usize; CLASSES]| {
            let n: usize = c.iter().sum();
            1.0 - c.iter().map(|&k| (k as f64 / n as f64) * (k as f64 / n as f64)).sum::<f64>()
        };
        let all: Vec<&LabeledVector> = data.iter().collect();
        let parent = impurity(&counts_of(&all));
        let mut best: Option<(usize, f64, f64)> = None;
        for f in 0..FEATURE_COUNT {
            let mut vals: Vec<f64> = data.iter().map(|d| d.features.0[f]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for w in vals.windows(2) {
                let t = (w[0] + w[1]) / 2.0;
                let (l, r): (Vec<_>, Vec<_>) = data.iter().partition(|d| d.features.0[f] <= t);
                if l.len() < min_leaf || r.len() < min_leaf {
                    continue;
                }
                let n = data.len() as f64;
                let g = (l.len() as f64 * impurity(&counts_of(&l)) + r.len() as f64 * impurity(&counts_of(&r))) / n;
                if best.is_none_or(|(_, _, bg)| g < bg - 1e-12) {
                    best = Some((f, t, g));
                }
            }
        }
        best.filter(|b| b.2 < parent - 1e-12).map(|(f, t, _)| (f, t))
    }

    fn root_split(t: &TreeModel) -> Option<(usize, f64)> {
        match t.nodes.first()? {
            Node::Split { feature, threshold, .. } => Some((*feature as usize, *threshold)),
            Node::Leaf { .. } => None,
        }
    }

    #[test]
    fn empty_data_is_an_error() {
        assert_eq!(fit_tree(&[], &TreeParams::default(), 0), Err(TrainError::EmptyData));
    }

    #[test]
    fn single_class_is_a_leaf() {
        let data: Vec<_> = (0..20).map(|i| lv(&[i as f64], AttackLabel::Krack)).collect();
        let t = fit_tree(&data, &TreeParams::default(), 0).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.depth(), 0);
        assert_eq!(t.predict(&FeatureVector::default()), AttackLabel::Krack);
        assert_eq!(t.nodes[0].leaf_distribution().unwrap()[AttackLabel::Krack.index()], 1.0);
    }

    #[test]
    fn separable_one_dimensional() {
        let mut data: Vec<_> = (1..=10).map(|i| lv(&[-(i as f64)], AttackLabel::Normal)).collect();
        data.extend((1..=10).map(|i| lv(&[i as f64], AttackLabel::Deauth)));
        let t = fit_tree(&data, &TreeParams::default(), 0).unwrap();
        assert_eq!(root_split(&t), Some((0, 0.0)));
        assert_eq!(t.depth(), 1);
        assert!(data.iter().all(|d| t.predict(&d.features) == d.label));
    }

    #[test]
    fn respects_min_samples_leaf() {
        let mut data: Vec<_> = (0..10).map(|i| lv(&[i as f64], AttackLabel::Normal)).collect();
        data.push(lv(&[100.0], AttackLabel::Deauth));
        let t = fit_tree(&data, &TreeParams { max_depth: 5, min_samples_leaf: 2 }, 0).unwrap();
        for n in &t.nodes {
            if let Node::Leaf { counts } = n {
                assert!(counts.iter().sum::<u32>() >= 2);
            }
        }
    }

    #[test]
    fn depth_two_root_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let data = random_data(&mut rng, 50, 4, 3, 10);
        let t = fit_tree(&data, &TreeParams { max_depth: 2, min_samples_leaf: 1 }, 0).unwrap();
        assert_eq!(root_split(&t), brute_force_stump(&data, 1));
        assert!(t.depth() <= 2);
    }

    #[test]
    fn stumps_match_oracle_on_random_datasets() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for round in 0..100 {
            let n = rng.random_range(2..=200);
            let data = random_data(&mut rng, n, 1 + round % 16, 2 + round % 5, 8);
            let t = fit_tree(&data, &TreeParams { max_depth: 1, min_samples_leaf: 1 }, 0).unwrap();
            assert_eq!(root_split(&t), brute_force_stump(&data, 1), "round {round}");
        }
    }

    proptest! {
        #[test]
        fn predict_is_total(x in proptest::collection::vec(-1e9f64..1e9, FEATURE_COUNT)) {
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            let data = random_data(&mut rng, 120, 16, 6, 6);
            let t = fit_tree(&data, &TreeParams::default(), 0).unwrap();
            let mut v = FeatureVector::default();
            v.0.copy_from_slice(&x);
            let _ = t.predict(&v);
        }
    }

    #[test]
    fn midpoint_stays_below_upper_value() {
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        assert!(midpoint(a, b) < b);
        assert_eq!(midpoint(0.0, 1.0), 0.5);
    }
}
