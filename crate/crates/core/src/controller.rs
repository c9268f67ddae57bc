//! Second checkpoint: classifies capture batches, raises alarms, names the
//! attacker where possible and floods block notices to every AP.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{self, Write};
use std::sync::Mutex;

use crate::classifier::Model;
use crate::fds::CaptureBatch;
use crate::features::extract_window;
use crate::frame::{AttackLabel, Frame, MacAddr};
use crate::handshake::ApProfile;

/// Share of a batch's frames an attack class needs before it raises an alarm.
pub const DEFAULT_VOTE_THRESHOLD: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct Alarm {
    pub ap_id: MacAddr,
    pub attack: AttackLabel,
    /// Fraction of the batch's frames predicted as `attack`.
    pub confidence: f64,
    pub attacker: Option<MacAddr>,
    /// Trigger instant of the batch.
    pub raised_at_us: u64,
    pub trigger_quantum: u64,
}

impl Alarm {
    /// `raised_at_us,ap,class,confidence,attacker` with `unknown` for an
    /// unattributed attacker.
    pub fn log_line(&self) -> String {
        format!(
            "{},{},{},{:.4},{}",
            self.raised_at_us,
            self.ap_id,
            self.attack,
            self.confidence,
            self.attacker.map_or_else(|| "unknown".to_string(), |m| m.to_string())
        )
    }
}

impl fmt::Display for Alarm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.log_line())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Alarm(Alarm),
    NoIntrusion,
}

impl Verdict {
    pub fn alarm(&self) -> Option<&Alarm> {
        match self {
            Verdict::Alarm(a) => Some(a),
            Verdict::NoIntrusion => None,
        }
    }
}

/// Per-frame predictions for a batch, in frame order.
pub fn classify_frames(frames: &[Frame], model: &Model, ap: &ApProfile) -> Vec<AttackLabel> {
    extract_window(frames, ap).iter().map(|lv| model.predict(&lv.features)).collect()
}

/// The attack class with the most votes, if it clears `threshold`. Ties go
/// to the lower class code.
pub fn vote(predictions: &[AttackLabel], threshold: f64) -> Option<(AttackLabel, f64)> {
    if predictions.is_empty() {
        return None;
    }
    let mut votes = [0usize; AttackLabel::COUNT];
    for p in predictions {
        votes[p.index()] += 1;
    }
    let (best, &n) = votes
        .iter()
        .enumerate()
        .skip(1)
        .fold((0, &0), |acc, (i, c)| if *c > *acc.1 { (i, c) } else { acc });
    let share = n as f64 / predictions.len() as f64;
    (n > 0 && share > threshold).then(|| (AttackLabel::from_index(best).expect("in range"), share))
}

/// Most frequent source among frames predicted as `label`. Attack frames
/// often forge a legitimate source, so when the top source belongs to the
/// network the most frequent foreign source is used instead; if there is
/// none the attacker is unknown. Ties go to the lowest address.
pub fn attribute_attacker(
    frames: &[Frame],
    predictions: &[AttackLabel],
    label: AttackLabel,
    known: &HashSet<MacAddr>,
) -> Option<MacAddr> {
    let mut counts: BTreeMap<MacAddr, usize> = BTreeMap::new();
    for (f, p) in frames.iter().zip(predictions) {
        if *p == label {
            *counts.entry(f.src).or_default() += 1;
        }
    }
    let top = |it: &mut dyn Iterator<Item = (&MacAddr, &usize)>| {
        it.fold(None::<(MacAddr, usize)>, |acc, (m, &c)| match acc {
            Some((_, best)) if best >= c => acc,
            _ => Some((*m, c)),
        })
        .map(|(m, _)| m)
    };
    let first = top(&mut counts.iter())?;
    if !known.contains(&first) {
        return Some(first);
    }
    top(&mut counts.iter().filter(|(m, _)| !known.contains(m)))
}

/// Classifies a batch. A pure function of its inputs.
pub fn handle_batch(
    batch: &CaptureBatch,
    model: &Model,
    ap: &ApProfile,
    known: &HashSet<MacAddr>,
    threshold: f64,
) -> Verdict {
    let predictions = classify_frames(&batch.frames, model, ap);
    match vote(&predictions, threshold) {
        Some((attack, confidence)) => Verdict::Alarm(Alarm {
            ap_id: batch.ap_id,
            attack,
            confidence,
            attacker: attribute_attacker(&batch.frames, &predictions, attack, known),
            raised_at_us: batch.start_us,
            trigger_quantum: batch.trigger_quantum,
        }),
        None => Verdict::NoIntrusion,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockNotification {
    /// Recipient AP.
    pub ap_id: MacAddr,
    pub mac: MacAddr,
    pub inserted_at_us: u64,
}

/// Blocked MACs with the time they were first blocked.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BlockList {
    entries: BTreeMap<MacAddr, u64>,
}

impl BlockList {
    pub fn contains(&self, mac: &MacAddr) -> bool {
        self.entries.contains_key(mac)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn inserted_at(&self, mac: &MacAddr) -> Option<u64> {
        self.entries.get(mac).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (MacAddr, u64)> + '_ {
        self.entries.iter().map(|(m, t)| (*m, *t))
    }
}

/// Adds `mac` (keeping the first insertion time) and produces one notice
/// per AP.
pub fn broadcast_block(list: &mut BlockList, mac: MacAddr, at_us: u64, aps: &[MacAddr]) -> Vec<BlockNotification> {
    let inserted_at_us = *list.entries.entry(mac).or_insert(at_us);
    aps.iter().map(|&ap_id| BlockNotification { ap_id, mac, inserted_at_us }).collect()
}

/// Result of processing one batch on a [`Controller`].
#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutcome {
    pub verdict: Verdict,
    pub notifications: Vec<BlockNotification>,
}

/// Shared controller state. Batches may be handled from several threads;
/// only the block list is shared and it sits behind a mutex.
pub struct Controller {
    model: Model,
    aps: HashMap<MacAddr, ApProfile>,
    ap_order: Vec<MacAddr>,
    known: HashSet<MacAddr>,
    pub threshold: f64,
    block_list: Mutex<BlockList>,
}

impl Controller {
    pub fn new(model: Model, aps: &[ApProfile], known: impl IntoIterator<Item = MacAddr>) -> Self {
        Controller {
            model,
            aps: aps.iter().map(|a| (a.bssid, a.clone())).collect(),
            ap_order: aps.iter().map(|a| a.bssid).collect(),
            known: known.into_iter().collect(),
            threshold: DEFAULT_VOTE_THRESHOLD,
            block_list: Mutex::new(BlockList::default()),
        }
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn block_list(&self) -> BlockList {
        self.block_list.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    /// Batches from unknown APs are classified against a profile with only
    /// the BSSID set.
    pub fn process(&self, batch: &CaptureBatch) -> BatchOutcome {
        let fallback;
        let ap = match self.aps.get(&batch.ap_id) {
            Some(a) => a,
            None => {
                fallback = ApProfile::new(batch.ap_id, "", crate::frame::SecuritySuite::Open);
                &fallback
            }
        };
        let verdict = handle_batch(batch, &self.model, ap, &self.known, self.threshold);
        let notifications = match verdict.alarm().and_then(|a| a.attacker.map(|m| (m, a.raised_at_us))) {
            Some((mac, at)) => {
                let mut list = self.block_list.lock().unwrap_or_else(|e| e.into_inner());
                broadcast_block(&mut list, mac, at, &self.ap_order)
            }
            None => Vec::new(),
        };
        if let Some(a) = verdict.alarm() {
            log::info!("alarm {}", a.log_line());
        }
        BatchOutcome { verdict, notifications }
    }
}

/// Appends alarms to a line-oriented log.
pub fn write_alarm_log<W: Write>(mut out: W, alarms: &[Alarm]) -> io::Result<()> {
    for a in alarms {
        writeln!(out, "{}", a.log_line())?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{Node, TreeModel};
    use crate::features::idx;
    use crate::frame::{FrameKind, SecuritySuite};
    use crate::handshake::connect_sequence;

    const AP: MacAddr = MacAddr([2, 0, 0, 0, 0, 1]);
    const STA: MacAddr = MacAddr([2, 0, 0, 0, 1, 1]);
    const EVIL: MacAddr = MacAddr([2, 0xba, 0xd0, 0, 0, 5]);

    fn profile() -> ApProfile {
        ApProfile::new(AP, "corp", SecuritySuite::Wpa3Sae)
    }

    /// Deauth frames are Deauth, everything else Normal.
    fn kind_model() -> Model {
        let leaf = |l: AttackLabel| {
            let mut counts = [0; AttackLabel::COUNT];
            counts[l.index()] = 1;
            Node::Leaf { counts }
        };
        let code = FrameKind::Deauthentication.code() as f64;
        Model::Tree(TreeModel {
            nodes: vec![
                Node::Split { feature: idx::KIND as u8, threshold: code - 0.5, left: 1, right: 2 },
                leaf(AttackLabel::Normal),
                Node::Split { feature: idx::KIND as u8, threshold: code + 0.5, left: 3, right: 4 },
                leaf(AttackLabel::Deauth),
                leaf(AttackLabel::Normal),
            ],
            ..Default::default()
        })
    }

    fn deauth(t: u64, src: MacAddr) -> Frame {
        Frame {
            timestamp_us: t,
            src,
            dst: STA,
            bssid: AP,
            reason_code: 7,
            suite: SecuritySuite::Wpa3Sae,
            ..Frame::blank(FrameKind::Deauthentication)
        }
    }

    fn batch(frames: Vec<Frame>) -> CaptureBatch {
        CaptureBatch { ap_id: AP, trigger_quantum: 3, start_us: 3_000_000, frames }
    }

    fn known() -> HashSet<MacAddr> {
        [AP, STA].into_iter().collect()
    }

    #[test]
    fn majority_alarm() {
        let mut frames: Vec<Frame> = (0..480).map(|i| deauth(i, AP)).collect();
        frames.extend((480..500).map(|i| Frame { timestamp_us: i, ..profile().beacon(i) }));
        let v = handle_batch(&batch(frames), &kind_model(), &profile(), &known(), DEFAULT_VOTE_THRESHOLD);
        let a = v.alarm().expect("alarm");
        assert_eq!(a.attack, AttackLabel::Deauth);
        assert!((a.confidence - 0.96).abs() < 1e-12);
        assert_eq!(a.attacker, None, "spoofed AP source is not blamed");
        assert_eq!(a.raised_at_us, 3_000_000);
    }

    #[test]
    fn normal_and_empty_batches() {
        let m = kind_model();
        let seq = connect_sequence(STA, &profile(), 0);
        assert_eq!(handle_batch(&batch(seq), &m, &profile(), &known(), 0.2), Verdict::NoIntrusion);
        assert_eq!(handle_batch(&batch(vec![]), &m, &profile(), &known(), 0.2), Verdict::NoIntrusion);
    }

    #[test]
    fn threshold_is_strict() {
        let mut frames: Vec<Frame> = (0..2).map(|i| deauth(i, EVIL)).collect();
        frames.extend((2..10).map(|i| profile().beacon(i)));
        let m = kind_model();
        assert_eq!(handle_batch(&batch(frames.clone()), &m, &profile(), &known(), 0.2), Verdict::NoIntrusion);
        frames[2] = deauth(2, EVIL);
        assert!(handle_batch(&batch(frames), &m, &profile(), &known(), 0.2).alarm().is_some());
    }

    #[test]
    fn attribution() {
        use AttackLabel::*;
        let f = |src| deauth(0, src);
        let other = MacAddr([2, 0xba, 0xd0, 0, 0, 9]);
        // unanimous foreign source
        assert_eq!(attribute_attacker(&[f(EVIL), f(EVIL)], &[BeaconFlood; 2], BeaconFlood, &known()), Some(EVIL));
        // spoofed known source only
        assert_eq!(attribute_attacker(&[f(AP), f(AP)], &[Deauth; 2], Deauth, &known()), None);
        // spoofed majority with a foreign minority
        let frames = [f(AP), f(AP), f(AP), f(EVIL)];
        assert_eq!(attribute_attacker(&frames, &[EvilTwin; 4], EvilTwin, &known()), Some(EVIL));
        // frames predicted as other classes do not count
        let preds = [Deauth, Deauth, Normal, Normal];
        let frames = [f(EVIL), f(EVIL), f(other), f(other)];
        assert_eq!(attribute_attacker(&frames, &preds, Normal, &known()), Some(other));
        // ties go to the lower address
        assert_eq!(attribute_attacker(&[f(other), f(EVIL)], &[Krack; 2], Krack, &known()), Some(EVIL));
        assert_eq!(attribute_attacker(&[], &[], Krack, &known()), None);
    }

    #[test]
    fn vote_never_picks_unvoted_class() {
        assert_eq!(vote(&[AttackLabel::Normal; 5], 0.0), None);
        assert_eq!(vote(&[], 0.0), None);
    }

    #[test]
    fn block_list_is_idempotent() {
        let mut list = BlockList::default();
        let aps = [AP, MacAddr([2, 0, 0, 0, 0, 2]), MacAddr([2, 0, 0, 0, 0, 3])];
        assert_eq!(broadcast_block(&mut list, EVIL, 10, &aps).len(), 3);
        let again = broadcast_block(&mut list, EVIL, 20, &aps);
        assert_eq!(list.len(), 1);
        assert_eq!(list.inserted_at(&EVIL), Some(10));
        assert!(again.iter().all(|n| n.inserted_at_us == 10));
        assert!(broadcast_block(&mut BlockList::default(), EVIL, 0, &[]).is_empty());
    }

    #[test]
    fn controller_blocks_attributed_attacker() {
        let c = Controller::new(kind_model(), &[profile()], known());
        let out = c.process(&batch((0..10).map(|i| deauth(i, EVIL)).collect()));
        assert_eq!(out.verdict.alarm().unwrap().attacker, Some(EVIL));
        assert_eq!(out.notifications, vec![BlockNotification { ap_id: AP, mac: EVIL, inserted_at_us: 3_000_000 }]);
        assert!(c.block_list().contains(&EVIL));
    }

    #[test]
    fn alarm_log_format() {
        let a = Alarm {
            ap_id: AP,
            attack: AttackLabel::Krack,
            confidence: 0.5,
            attacker: None,
            raised_at_us: 42,
            trigger_quantum: 0,
        };
        let mut out = Vec::new();
        write_alarm_log(&mut out, &[a]).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "42,02:00:00:00:00:01,Krack,0.5000,unknown\n");
    }
}
