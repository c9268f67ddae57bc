use super::{argmax, label_of, TrainError, CLASSES};
use crate::features::{FeatureVector, LabeledVector, FEATURE_COUNT};
use crate::frame::AttackLabel;

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegParams {
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for LogRegParams {
    fn default() -> Self {
        LogRegParams { epochs: 500, learning_rate: 0.1 }
    }
}

type Weights = [[f64; FEATURE_COUNT]; CLASSES];

/// Softmax regression over standardized features.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    pub mean: [f64; FEATURE_COUNT],
    /// Per-feature standard deviation; 1 where the training data had none.
    pub std: [f64; FEATURE_COUNT],
    pub weights: Weights,
    pub bias: [f64; CLASSES],
}

impl LogRegModel {
    fn standardize(&self, v: &FeatureVector) -> [f64; FEATURE_COUNT] {
        let mut z = [0.0; FEATURE_COUNT];
        for j in 0..FEATURE_COUNT {
            z[j] = (v.0[j] - self.mean[j]) / self.std[j];
        }
        z
    }

    fn logits(&self, z: &[f64; FEATURE_COUNT]) -> [f64; CLASSES] {
        let mut out = self.bias;
        for (o, w) in out.iter_mut().zip(&self.weights) {
            *o += w.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
        }
        out
    }

    pub fn probabilities(&self, v: &FeatureVector) -> [f64; CLASSES] {
        softmax(self.logits(&self.standardize(v)))
    }

    pub fn predict(&self, v: &FeatureVector) -> AttackLabel {
        label_of(argmax(&self.logits(&self.standardize(v))))
    }

    /// Mean cross-entropy over `data`.
    pub fn loss(&self, data: &[LabeledVector]) -> f64 {
        let (z, y) = self.prepare(data);
        self.loss_z(&z, &y)
    }

    /// Gradient of [`loss`](Self::loss) with respect to weights and bias.
    pub fn gradient(&self, data: &[LabeledVector]) -> (Weights, [f64; CLASSES]) {
        let (z, y) = self.prepare(data);
        self.gradient_z(&z, &y)
    }

    fn prepare(&self, data: &[LabeledVector]) -> (Vec<[f64; FEATURE_COUNT]>, Vec<usize>) {
        (data.iter().map(|lv| self.standardize(&lv.features)).collect(), data.iter().map(|lv| lv.label.index()).collect())
    }

    fn loss_z(&self, z: &[[f64; FEATURE_COUNT]], y: &[usize]) -> f64 {
        let total: f64 = z.iter().zip(y).map(|(z, &c)| -softmax(self.logits(z))[c].max(f64::MIN_POSITIVE).ln()).sum();
        total / z.len().max(1) as f64
    }

    fn gradient_z(&self, z: &[[f64; FEATURE_COUNT]], y: &[usize]) -> (Weights, [f64; CLASSES]) {
        let mut gw = [[0.0; FEATURE_COUNT]; CLASSES];
        let mut gb = [0.0; CLASSES];
        for (z, &label) in z.iter().zip(y) {
            let mut p = softmax(self.logits(z));
            p[label] -= 1.0;
            for c in 0..CLASSES {
                gb[c] += p[c];
                for j in 0..FEATURE_COUNT {
                    gw[c][j] += p[c] * z[j];
                }
            }
        }
        let n = z.len().max(1) as f64;
        for c in 0..CLASSES {
            gb[c] /= n;
            for g in gw[c].iter_mut() {
                *g /= n;
            }
        }
        (gw, gb)
    }
}

fn softmax(mut l: [f64; CLASSES]) -> [f64; CLASSES] {
    let m = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for x in l.iter_mut() {
        *x = (*x - m).exp();
        s += *x;
    }
    for x in l.iter_mut() {
        *x /= s;
    }
    l
}

fn normalization(data: &[LabeledVector]) -> ([f64; FEATURE_COUNT], [f64; FEATURE_COUNT]) {
    let n = data.len() as f64;
    let mut mean = [0.0; FEATURE_COUNT];
    for lv in data {
        for (m, x) in mean.iter_mut().zip(&lv.features.0) {
            *m += x;
        }
    }
    for m in mean.iter_mut() {
        *m /= n;
    }
    let mut var = [0.0; FEATURE_COUNT];
    for lv in data {
        for j in 0..FEATURE_COUNT {
            var[j] += (lv.features.0[j] - mean[j]).powi(2);
        }
    }
    let mut std = [1.0; FEATURE_COUNT];
    for j in 0..FEATURE_COUNT {
        let s = (var[j] / n).sqrt();
        if s > 1e-12 && s.is_finite() {
            std[j] = s;
        }
    }
    (mean, std)
}

/// Full-batch gradient descent from zero weights. Deterministic; `_seed` is
/// accepted for interface symmetry with the tree learners.
pub fn fit_logreg(data: &[LabeledVector], params: &LogRegParams, _seed: u64) -> Result<LogRegModel, TrainError> {
    fit_logreg_with_history(data, params).map(|(m, _)| m)
}

/// Like [`fit_logreg`], also returning the loss before each epoch and after
/// the last one.
pub fn fit_logreg_with_history(
    data: &[LabeledVector],
    params: &LogRegParams,
) -> Result<(LogRegModel, Vec<f64>), TrainError> {
    if data.is_empty() {
        return Err(TrainError::EmptyData);
    }
    let (mean, std) = normalization(data);
    let mut m = LogRegModel { mean, std, weights: [[0.0; FEATURE_COUNT]; CLASSES], bias: [0.0; CLASSES] };
    let (z, y) = m.prepare(data);
    let mut history = Vec::with_capacity(params.epochs + 1);
    for _ in 0..params.epochs {
        history.push(m.loss_z(&z, &y));
        let (gw, gb) = m.gradient_z(&z, &y);
        for c in 0..CLASSES {
            m.bias[c] -= params.learning_rate * gb[c];
            for j in 0..FEATURE_COUNT {
                m.weights[c][j] -= params.learning_rate * gw[c][j];
            }
        }
    }
    history.push(m.loss_z(&z, &y));
    Ok((m, history))
}
