//! Per-frame feature vectors with window context.
//!
//! Every frame in a window gets its own vector: nine fields describe the
//! frame itself and seven describe the window it arrived in. The window is
//! whatever list the caller passes, in practice one 500 ms capture.

use std::collections::{HashMap, HashSet};
use std::io::Write;

use crate::frame::{AttackLabel, Frame, FrameKind, MacAddr};
use crate::handshake::ApProfile;

pub const FEATURE_COUNT: usize = 16;

/// Feature names in vector order.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "kind_code",
    "eapol_msg",
    "retry",
    "reason_code",
    "suite_code",
    "beacon_interval_tu",
    "inter_arrival_us",
    "window_deauth_count",
    "window_beacon_count",
    "window_eapol3_dup_count",
    "window_distinct_src_count",
    "window_frame_rate_fps",
    "window_mean_inter_arrival_us",
    "suite_mismatch_flag",
    "bssid_clone_flag",
    "beacon_interval_deviation",
];

pub mod idx {
    pub const KIND: usize = 0;
    pub const EAPOL_MSG: usize = 1;
    pub const RETRY: usize = 2;
    pub const REASON: usize = 3;
    pub const SUITE: usize = 4;
    pub const BEACON_INTERVAL: usize = 5;
    pub const INTER_ARRIVAL: usize = 6;
    pub const DEAUTH_COUNT: usize = 7;
    pub const BEACON_COUNT: usize = 8;
    pub const EAPOL3_DUPS: usize = 9;
    pub const DISTINCT_SRC: usize = 10;
    pub const FRAME_RATE: usize = 11;
    pub const MEAN_INTER_ARRIVAL: usize = 12;
    pub const SUITE_MISMATCH: usize = 13;
    pub const BSSID_CLONE: usize = 14;
    pub const INTERVAL_DEVIATION: usize = 15;
}

/// Spans shorter than this are treated as this long when computing rates.
const MIN_RATE_SPAN_US: u64 = 1_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; FEATURE_COUNT]);

impl FeatureVector {
    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Default for FeatureVector {
    fn default() -> Self {
        FeatureVector([0.0; FEATURE_COUNT])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledVector {
    pub features: FeatureVector,
    pub label: AttackLabel,
}

/// Aggregates shared by every frame in a window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowStats {
    pub deauth_count: usize,
    pub beacon_count: usize,
    pub eapol3_dup_count: usize,
    pub distinct_src_count: usize,
    pub frame_rate_fps: f64,
    pub mean_inter_arrival_us: f64,
    /// BSSIDs other than the profile's that advertise an SSID also seen
    /// under another BSSID in the window.
    pub clone_bssids: HashSet<MacAddr>,
}

impl WindowStats {
    pub fn compute(frames: &[Frame], ap: &ApProfile) -> Self {
        let mut deauth_count = 0;
        let mut beacon_count = 0;
        let mut eapol3_dup_count = 0;
        let mut srcs = HashSet::new();
        let mut ssid_bssids: HashMap<&str, HashSet<MacAddr>> = HashMap::new();
        for f in frames {
            match f.kind {
                FrameKind::Deauthentication => deauth_count += 1,
                FrameKind::Beacon => beacon_count += 1,
                FrameKind::Eapol if f.eapol_msg == 3 && f.retry => eapol3_dup_count += 1,
                _ => {}
            }
            srcs.insert(f.src);
            if !f.ssid.is_empty() {
                ssid_bssids.entry(f.ssid.as_str()).or_default().insert(f.bssid);
            }
        }
        let clone_bssids = ssid_bssids
            .values()
            .filter(|set| set.len() >= 2)
            .flat_map(|set| set.iter().copied())
            .filter(|b| *b != ap.bssid)
            .collect();
        let (first, last) = match (frames.iter().map(|f| f.timestamp_us).min(), frames.iter().map(|f| f.timestamp_us).max()) {
            (Some(a), Some(b)) => (a, b),
            _ => (0, 0),
        };
        let span = last - first;
        let n = frames.len();
        WindowStats {
            deauth_count,
            beacon_count,
            eapol3_dup_count,
            distinct_src_count: srcs.len(),
            frame_rate_fps: n as f64 * 1e6 / span.max(MIN_RATE_SPAN_US) as f64,
            mean_inter_arrival_us: if n > 1 { span as f64 / (n - 1) as f64 } else { 0.0 },
            clone_bssids,
        }
    }
}

fn frame_vector(f: &Frame, inter_arrival_us: u64, w: &WindowStats, ap: &ApProfile) -> FeatureVector {
    let mut v = [0.0; FEATURE_COUNT];
    v[idx::KIND] = f.kind.code() as f64;
    v[idx::EAPOL_MSG] = f.eapol_msg as f64;
    v[idx::RETRY] = f64::from(u8::from(f.retry));
    v[idx::REASON] = f.reason_code as f64;
    v[idx::SUITE] = f.suite.code() as f64;
    v[idx::BEACON_INTERVAL] = f.beacon_interval_tu as f64;
    v[idx::INTER_ARRIVAL] = inter_arrival_us as f64;
    v[idx::DEAUTH_COUNT] = w.deauth_count as f64;
    v[idx::BEACON_COUNT] = w.beacon_count as f64;
    v[idx::EAPOL3_DUPS] = w.eapol3_dup_count as f64;
    v[idx::DISTINCT_SRC] = w.distinct_src_count as f64;
    v[idx::FRAME_RATE] = w.frame_rate_fps;
    v[idx::MEAN_INTER_ARRIVAL] = w.mean_inter_arrival_us;
    v[idx::SUITE_MISMATCH] = f64::from(u8::from(f.suite != ap.suite));
    v[idx::BSSID_CLONE] = f64::from(u8::from(w.clone_bssids.contains(&f.bssid)));
    if f.kind.carries_beacon_interval() && ap.beacon_interval_tu > 0 {
        let profile = ap.beacon_interval_tu as f64;
        v[idx::INTERVAL_DEVIATION] = (f.beacon_interval_tu as f64 - profile).abs() / profile;
    }
    FeatureVector(v)
}

/// One labeled vector per frame. `frames` must be in time order.
pub fn extract_window(frames: &[Frame], ap: &ApProfile) -> Vec<LabeledVector> {
    if frames.is_empty() {
        return Vec::new();
    }
    let w = WindowStats::compute(frames, ap);
    let mut prev: Option<u64> = None;
    frames
        .iter()
        .map(|f| {
            let gap = prev.map_or(0, |p| f.timestamp_us.saturating_sub(p));
            prev = Some(f.timestamp_us);
            LabeledVector { features: frame_vector(f, gap, &w, ap), label: f.label }
        })
        .collect()
}

/// Writes vectors as CSV: the sixteen feature names followed by `label`.
pub fn write_feature_csv<W: Write>(out: W, data: &[LabeledVector]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = FEATURE_NAMES.to_vec();
    header.push("label");
    w.write_record(&header)?;
    for lv in data {
        let mut rec: Vec<String> = lv.features.0.iter().map(|x| x.to_string()).collect();
        rec.push(lv.label.name().to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::SecuritySuite;
    use crate::handshake::connect_sequence;

    const AP: MacAddr = MacAddr([2, 0, 0, 0, 0, 1]);
    const STA: MacAddr = MacAddr([2, 0, 0, 0, 1, 1]);

    fn profile() -> ApProfile {
        ApProfile::new(AP, "corp", SecuritySuite::Wpa3Sae)
    }

    #[test]
    fn empty_window() {
        assert!(extract_window(&[], &profile()).is_empty());
    }

    #[test]
    fn deauth_count() {
        let frames: Vec<Frame> = (0..10)
            .map(|i| Frame {
                timestamp_us: i * 100,
                src: AP,
                dst: STA,
                bssid: AP,
                reason_code: 7,
                suite: SecuritySuite::Wpa3Sae,
                ..Frame::blank(FrameKind::Deauthentication)
            })
            .collect();
        let v = extract_window(&frames, &profile());
        assert_eq!(v.len(), 10);
        assert!(v.iter().all(|lv| lv.features.get(idx::DEAUTH_COUNT) == 10.0));
        assert_eq!(v[0].features.get(idx::INTER_ARRIVAL), 0.0);
        assert_eq!(v[1].features.get(idx::INTER_ARRIVAL), 100.0);
        assert_eq!(v[0].features.get(idx::MEAN_INTER_ARRIVAL), 100.0);
        assert_eq!(v[0].features.get(idx::FRAME_RATE), 10.0 * 1e6 / 1000.0);
    }

    #[test]
    fn retransmitted_message_three() {
        let seq = connect_sequence(STA, &ApProfile { suite: SecuritySuite::Wpa2Psk, ..profile() }, 0);
        let msg3 = seq.iter().find(|f| f.eapol_msg == 3).unwrap().clone();
        let window = vec![msg3.clone(), Frame { timestamp_us: msg3.timestamp_us + 5, retry: true, ..msg3 }];
        let v = extract_window(&window, &profile());
        assert!(v.iter().all(|lv| lv.features.get(idx::EAPOL3_DUPS) == 1.0));
    }

    #[test]
    fn downgraded_beacon_flags_mismatch() {
        let ap = profile();
        let mut b = ap.beacon(0);
        b.suite = SecuritySuite::Wpa2Psk;
        b.beacon_interval_tu = 50;
        let v = extract_window(&[ap.beacon(0), b], &ap);
        assert_eq!(v[0].features.get(idx::SUITE_MISMATCH), 0.0);
        assert_eq!(v[1].features.get(idx::SUITE_MISMATCH), 1.0);
        assert_eq!(v[1].features.get(idx::INTERVAL_DEVIATION), 0.5);
        assert_eq!(v[1].features.get(idx::BSSID_CLONE), 0.0, "same bssid is not a clone");
    }

    #[test]
    fn cloned_ssid_flags_other_bssid_only() {
        let ap = profile();
        let twin = ApProfile { bssid: MacAddr([2, 0xba, 0xd0, 0, 0, 3]), ..ap.clone() };
        let mut frames = vec![ap.beacon(0), twin.beacon(10)];
        frames.extend(connect_sequence(STA, &twin, 20));
        let v = extract_window(&frames, &ap);
        assert_eq!(v[0].features.get(idx::BSSID_CLONE), 0.0);
        assert!(v[1..].iter().all(|lv| lv.features.get(idx::BSSID_CLONE) == 1.0));
    }

    #[test]
    fn pure_connect_sequence_is_clean() {
        for suite in SecuritySuite::ALL.iter().copied() {
            let ap = ApProfile { suite, ..profile() };
            let v = extract_window(&connect_sequence(STA, &ap, 0), &ap);
            for lv in &v {
                assert_eq!(lv.features.get(idx::SUITE_MISMATCH), 0.0);
                assert_eq!(lv.features.get(idx::BSSID_CLONE), 0.0);
                assert_eq!(lv.features.get(idx::EAPOL3_DUPS), 0.0);
                assert!(lv.features.is_finite());
                assert_eq!(lv.label, AttackLabel::Normal);
            }
        }
    }

    #[test]
    fn aggregates_ignore_order_of_simultaneous_frames() {
        let ap = profile();
        let twin = ApProfile { bssid: MacAddr([2, 0xba, 0xd0, 0, 0, 3]), ..ap.clone() };
        let mut frames = vec![ap.beacon(0), twin.beacon(0)];
        frames.extend(connect_sequence(STA, &ap, 0).into_iter().map(|f| Frame { timestamp_us: 0, ..f }));
        let agg = |fs: &[Frame]| {
            extract_window(fs, &ap)
                .iter()
                .map(|lv| lv.features.0[idx::DEAUTH_COUNT..=idx::MEAN_INTER_ARRIVAL].to_vec())
                .collect::<Vec<_>>()
        };
        let a = agg(&frames);
        frames.reverse();
        assert_eq!(a, agg(&frames));
    }

    #[test]
    fn feature_csv_header() {
        let mut out = Vec::new();
        write_feature_csv(&mut out, &extract_window(&connect_sequence(STA, &profile(), 0), &profile())).unwrap();
        let text = String::from_utf8(out).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header.split(',').count(), 17);
        assert!(header.starts_with("kind_code,eapol_msg,"));
        assert!(header.ends_with("beacon_interval_deviation,label"));
        assert_eq!(text.lines().count(), 11);
    }
}
