//! Frame classifiers: multinomial logistic regression, CART decision tree
//! and random forest, plus evaluation and a binary model container.

mod codec;
mod eval;
mod forest;
mod logreg;
mod tree;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::features::FeatureVector;
use crate::frame::AttackLabel;

pub use codec::{deserialize_model, serialize_model, ModelError, MODEL_FORMAT_VERSION, MODEL_MAGIC};
pub use eval::{evaluate, format_table, write_table_csv, EvalReport, TableRow};
pub use forest::{fit_forest, ForestModel, ForestParams};
pub use logreg::{fit_logreg, fit_logreg_with_history, LogRegModel, LogRegParams};
pub use tree::{fit_tree, Node, TreeModel, TreeParams};

const CLASSES: usize = AttackLabel::COUNT;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TrainError {
    #[error("training data is empty")]
    EmptyData,
    #[error("class counts are all zero")]
    ZeroCounts,
}

/// Gini impurity `1 - Σ p²` of per-class counts.
pub fn gini(counts: &[usize]) -> Result<f64, TrainError> {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return Err(TrainError::ZeroCounts);
    }
    Ok(gini_unchecked(counts, n))
}

#[inline]
pub(crate) fn gini_unchecked(counts: &[usize], n: usize) -> f64 {
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

/// Index of the largest count; ties go to the lowest index.
pub(crate) fn argmax<T: PartialOrd + Copy>(xs: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn label_of(index: usize) -> AttackLabel {
    AttackLabel::from_index(index).expect("class index in range")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    LogReg,
    Tree,
    Forest,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::LogReg, ModelKind::Tree, ModelKind::Forest];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::LogReg => "logreg",
            ModelKind::Tree => "tree",
            ModelKind::Forest => "forest",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            ModelKind::LogReg => "Logistic Regression",
            ModelKind::Tree => "Decision Tree",
            ModelKind::Forest => "Random Forest",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            ModelKind::LogReg => 0,
            ModelKind::Tree => 1,
            ModelKind::Forest => 2,
        }
    }

    pub(crate) fn from_code(c: u8) -> Option<Self> {
        ModelKind::ALL.into_iter().find(|k| k.code() == c)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown model kind '{s}' (expected logreg, tree or forest)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    LogReg(LogRegModel),
    Tree(TreeModel),
    Forest(ForestModel),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::LogReg(_) => ModelKind::LogReg,
            Model::Tree(_) => ModelKind::Tree,
            Model::Forest(_) => ModelKind::Forest,
        }
    }

    pub fn predict(&self, v: &FeatureVector) -> AttackLabel {
        match self {
            Model::LogReg(m) => m.predict(v),
            Model::Tree(m) => m.predict(v),
            Model::Forest(m) => m.predict(v),
        }
    }
}

/// Default hyperparameters for each model kind.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainParams {
    pub tree: TreeParams,
    pub forest: ForestParams,
    pub logreg: LogRegParams,
}

pub fn train(
    kind: ModelKind,
    data: &[crate::features::LabeledVector],
    params: &TrainParams,
    seed: u64,
) -> Result<Model, TrainError> {
    Ok(match kind {
        ModelKind::LogReg => Model::LogReg(fit_logreg(data, &params.logreg, seed)?),
        ModelKind::Tree => Model::Tree(fit_tree(data, &params.tree, seed)?),
        ModelKind::Forest => Model::Forest(fit_forest(data, &params.forest, seed)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gini_values() {
        assert_eq!(gini(&[10, 0, 0, 0, 0, 0]).unwrap(), 0.0);
        assert_eq!(gini(&[5, 5, 0, 0, 0, 0]).unwrap(), 0.5);
        // 1 - (1/4 + 1/16 + 1/16)
        assert!((gini(&[2, 1, 1, 0, 0, 0]).unwrap() - 0.625).abs() < 1e-12);
        assert_eq!(gini(&[0; 6]), Err(TrainError::ZeroCounts));
    }

    #[test]
    fn argmax_prefers_lowest_on_tie() {
        assert_eq!(argmax(&[1, 3, 3, 0]), 1);
        assert_eq!(argmax(&[0, 0]), 0);
    }

    #[test]
    fn kind_names() {
        for k in ModelKind::ALL {
            assert_eq!(k.name().parse::<ModelKind>().unwrap(), k);
            assert_eq!(ModelKind::from_code(k.code()), Some(k));
        }
        assert!("svm".parse::<ModelKind>().is_err());
    }
}
