use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::tree::{grow_tree, Subsample};
use super::{argmax, label_of, TrainError, TreeModel, TreeParams, CLASSES};
use crate::features::{FeatureVector, LabeledVector, FEATURE_COUNT};
use crate::frame::AttackLabel;

#[derive(Debug, Clone, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` means ⌊√d⌋.
    pub features_per_split: Option<usize>,
    /// Draw each tree's sample with replacement; otherwise every tree sees
    /// the data as given.
    pub bootstrap: bool,
    pub tree: TreeParams,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { n_trees: 50, features_per_split: None, bootstrap: true, tree: TreeParams::default() }
    }
}

impl ForestParams {
    pub fn resolved_features_per_split(&self) -> usize {
        self.features_per_split
            .unwrap_or_else(|| (FEATURE_COUNT as f64).sqrt().floor() as usize)
            .clamp(1, FEATURE_COUNT)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<TreeModel>,
    pub features_per_split: u8,
    pub bootstrap: bool,
    pub seed: u64,
}

impl ForestModel {
    /// Majority vote; ties go to the lower class code.
    pub fn predict(&self, v: &FeatureVector) -> AttackLabel {
        let mut votes = [0u32; CLASSES];
        for t in &self.trees {
            votes[t.predict(v).index()] += 1;
        }
        label_of(argmax(&votes))
    }
}

/// Per-tree random stream. Tree `i` draws from stream `i` of the forest
/// seed, so results do not depend on scheduling.
fn tree_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

pub fn fit_forest(data: &[LabeledVector], params: &ForestParams, seed: u64) -> Result<ForestModel, TrainError> {
    if data.is_empty() {
        return Err(TrainError::EmptyData);
    }
    let k = params.resolved_features_per_split();
    let n = data.len();
    let trees = (0..params.n_trees.max(1))
        .into_par_iter()
        .map(|i| {
            let mut rng = tree_rng(seed, i);
            let mut idx: Vec<usize> =
                if params.bootstrap { (0..n).map(|_| rng.random_range(0..n)).collect() } else { (0..n).collect() };
            grow_tree(data, &mut idx, &params.tree, Some(Subsample { k, rng: &mut rng }), seed)
        })
        .collect();
    Ok(ForestModel { trees, features_per_split: k as u8, bootstrap: params.bootstrap, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{fit_tree, Node};

    fn data(seed: u64, n: usize) -> Vec<LabeledVector> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let mut f = FeatureVector::default();
                for x in f.0.iter_mut() {
                    *x = rng.random_range(0..5) as f64;
                }
                let label = label_of(((f.0[0] + f.0[3]) as usize + rng.random_range(0..2)) % CLASSES);
                LabeledVector { features: f, label }
            })
            .collect()
    }

    #[test]
    fn degenerate_forest_equals_tree() {
        let d = data(1, 300);
        let params = ForestParams {
            n_trees: 1,
            features_per_split: Some(FEATURE_COUNT),
            bootstrap: false,
            tree: TreeParams::default(),
        };
        let forest = fit_forest(&d, &params, 9).unwrap();
        let tree = fit_tree(&d, &TreeParams::default(), 9).unwrap();
        assert_eq!(forest.trees[0], tree);
        let probe = data(2, 1000);
        assert!(probe.iter().all(|p| forest.predict(&p.features) == tree.predict(&p.features)));
    }

    #[test]
    fn pure_data_gives_single_leaf_trees() {
        let mut d = data(3, 50);
        for lv in &mut d {
            lv.label = AttackLabel::BeaconFlood;
        }
        let forest = fit_forest(&d, &ForestParams { n_trees: 5, ..Default::default() }, 0).unwrap();
        assert_eq!(forest.trees.len(), 5);
        assert!(forest.trees.iter().all(|t| t.nodes.len() == 1 && matches!(t.nodes[0], Node::Leaf { .. })));
    }

    #[test]
    fn vote_majority_and_tie() {
        let leaf = |l: AttackLabel| {
            let mut counts = [0; CLASSES];
            counts[l.index()] = 1;
            TreeModel { nodes: vec![Node::Leaf { counts }], ..Default::default() }
        };
        let forest = |labels: &[AttackLabel]| ForestModel {
            trees: labels.iter().map(|&l| leaf(l)).collect(),
            features_per_split: 4,
            bootstrap: true,
            seed: 0,
        };
        let v = FeatureVector::default();
        use AttackLabel::*;
        assert_eq!(forest(&[Krack, Krack, Deauth]).predict(&v), Krack);
        assert_eq!(forest(&[Krack, Deauth]).predict(&v), Deauth);
    }

    #[test]
    fn deterministic_across_runs() {
        let d = data(4, 400);
        let p = ForestParams { n_trees: 8, ..Default::default() };
        assert_eq!(fit_forest(&d, &p, 3).unwrap(), fit_forest(&d, &p, 3).unwrap());
        assert_eq!(p.resolved_features_per_split(), 4);
    }
}
