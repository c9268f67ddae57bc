//! Labeled datasets built from simulated scenarios.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::attack::ScenarioConfig;
use crate::features::{extract_window, LabeledVector};
use crate::frame::{AttackLabel, Frame};
use crate::handshake::ApProfile;

/// Training windows match the capture length.
pub const WINDOW_US: u64 = crate::fds::CAPTURE_US;

pub const TRAIN_FRACTION: f64 = 0.7;

/// Splits what `ap` hears into aligned windows of `window_us` and extracts
/// features from each. Frames must be in time order.
pub fn windowed_features(frames: &[Frame], ap: &ApProfile, window_us: u64) -> Vec<LabeledVector> {
    let window_us = window_us.max(1);
    let heard: Vec<Frame> = frames.iter().filter(|f| ap.hears(f)).cloned().collect();
    let mut out = Vec::with_capacity(heard.len());
    for chunk in heard.chunk_by(|a, b| a.timestamp_us / window_us == b.timestamp_us / window_us) {
        out.extend(extract_window(chunk, ap));
    }
    out
}

/// Feature vectors for every AP in the scenario, AP by AP in config order.
pub fn scenario_features(cfg: &ScenarioConfig, frames: &[Frame]) -> Vec<LabeledVector> {
    cfg.aps.iter().flat_map(|ap| windowed_features(frames, ap, WINDOW_US)).collect()
}

pub fn label_counts(data: &[LabeledVector]) -> [usize; AttackLabel::COUNT] {
    let mut counts = [0; AttackLabel::COUNT];
    for lv in data {
        counts[lv.label.index()] += 1;
    }
    counts
}

fn by_label(data: &[LabeledVector]) -> BTreeMap<usize, Vec<LabeledVector>> {
    let mut m: BTreeMap<usize, Vec<LabeledVector>> = BTreeMap::new();
    for lv in data {
        m.entry(lv.label.index()).or_default().push(*lv);
    }
    m
}

/// Downsamples every present label to the size of the rarest one. Labels
/// with no samples are ignored.
pub fn balance(data: &[LabeledVector], seed: u64) -> Vec<LabeledVector> {
    let groups = by_label(data);
    let Some(n) = groups.values().map(Vec::len).min() else {
        return Vec::new();
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n * groups.len());
    for (_, mut g) in groups {
        g.shuffle(&mut rng);
        g.truncate(n);
        out.extend(g);
    }
    out.shuffle(&mut rng);
    out
}

/// Stratified split: each label contributes `train_fraction` of its samples
/// (rounded) to the training side.
pub fn stratified_split(
    data: &[LabeledVector],
    train_fraction: f64,
    seed: u64,
) -> (Vec<LabeledVector>, Vec<LabeledVector>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (_, mut g) in by_label(data) {
        g.shuffle(&mut rng);
        let k = ((g.len() as f64) * train_fraction.clamp(0.0, 1.0)).round() as usize;
        let rest = g.split_off(k);
        train.extend(g);
        test.extend(rest);
    }
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);
    (train, test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::{gen_scenario, presets};
    use crate::features::FeatureVector;

    fn synthetic(counts: &[(AttackLabel, usize)]) -> Vec<LabeledVector> {
        let mut v = Vec::new();
        for &(label, n) in counts {
            for i in 0..n {
                let mut f = FeatureVector::default();
                f.0[0] = i as f64;
                v.push(LabeledVector { features: f, label });
            }
        }
        v
    }

    #[test]
    fn balance_downsamples_to_rarest() {
        let d = synthetic(&[(AttackLabel::Normal, 100), (AttackLabel::Deauth, 7), (AttackLabel::Krack, 30)]);
        let b = balance(&d, 1);
        assert_eq!(label_counts(&b), [7, 7, 0, 0, 7, 0]);
        assert_eq!(b, balance(&d, 1));
        assert!(balance(&[], 1).is_empty());
    }

    #[test]
    fn split_is_stratified() {
        let d = synthetic(&[(AttackLabel::Normal, 100), (AttackLabel::RogueAp, 50)]);
        let (train, test) = stratified_split(&d, 0.7, 3);
        assert_eq!(label_counts(&train), [70, 0, 35, 0, 0, 0]);
        assert_eq!(label_counts(&test), [30, 0, 15, 0, 0, 0]);
    }

    #[test]
    fn windows_cover_every_heard_frame() {
        let cfg = presets::single_attack(AttackLabel::Deauth, 4);
        let frames = gen_scenario(&cfg);
        let data = scenario_features(&cfg, &frames);
        let heard: usize = cfg.aps.iter().map(|ap| frames.iter().filter(|f| ap.hears(f)).count()).sum();
        assert_eq!(data.len(), heard);
        assert!(data.iter().all(|lv| lv.features.is_finite()));
        assert!(label_counts(&data)[AttackLabel::Deauth.index()] > 5000);
    }
}
