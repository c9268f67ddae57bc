//! Labeled traffic generation: legitimate baseline plus the five injected
//! attacks (deauthentication flood, rogue AP downgrade, evil twin, KRACK
//! message-3 replay, beacon flood).
//!
//! Every generator is a pure function of its inputs. Baseline randomness comes
//! from a ChaCha stream per station, so adding an attack to a scenario never
//! perturbs the legitimate traffic around it.

mod config;
pub mod presets;

pub use config::{AttackSpec, ConfigError, ScenarioConfig, StationSpec};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::frame::{AttackLabel, Frame, FrameKind, MacAddr, SecuritySuite};
use crate::handshake::{self, ApProfile};

/// Reason code carried by injected deauthentication frames
/// (class 3 frame received from a nonassociated station).
pub const DEAUTH_REASON: u16 = 7;

/// Evil twin keeps the victim off the legitimate AP with short deauth bursts.
pub const EVIL_TWIN_BURST_LEN: u64 = 8;
pub const EVIL_TWIN_BURST_PERIOD_US: u64 = 100_000;
const EVIL_TWIN_BURST_SPACING_US: u64 = 1_000;

/// Length of the rogue-AP downgrade that precedes KRACK against a WPA3 AP.
pub const KRACK_DOWNGRADE_US: u64 = 100_000;

pub(crate) const US_PER_S: f64 = 1_000_000.0;

pub(crate) fn secs_to_us(s: f64) -> u64 {
    (s * US_PER_S).round().max(0.0) as u64
}

/// Who emitted a frame. Used to check label soundness in tests and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    Baseline,
    /// Index into `ScenarioConfig::attacks` and the injector that produced it.
    Injector { attack: usize, injector: AttackLabel },
}

/// Resolved attack context: the spec plus the AP and station it targets.
#[derive(Debug, Clone)]
pub struct AttackTarget<'a> {
    pub spec: &'a AttackSpec,
    pub ap: &'a ApProfile,
    pub sta: MacAddr,
}

/// Evenly spaced emission instants for `rate_fps` over the spec's window,
/// each centred in its slot.
fn slots(start_us: u64, end_us: u64, rate_fps: f64) -> impl Iterator<Item = u64> {
    let window_s = end_us.saturating_sub(start_us) as f64 / US_PER_S;
    let count = (rate_fps * window_s + 1e-9).floor().max(0.0) as u64;
    let period = if rate_fps > 0.0 { US_PER_S / rate_fps } else { 0.0 };
    (0..count).map(move |i| start_us + ((i as f64 + 0.5) * period) as u64)
}

fn window_us(spec: &AttackSpec) -> (u64, u64) {
    (secs_to_us(spec.start_s), secs_to_us(spec.end_s))
}

fn labelled(mut frames: Vec<Frame>, label: AttackLabel) -> Vec<Frame> {
    for f in &mut frames {
        f.label = label;
    }
    frames
}

/// Legitimate traffic: periodic beacons from every AP, and per-station
/// Poisson arrivals that walk the station's connect sequence cyclically.
pub fn gen_baseline(cfg: &ScenarioConfig) -> Vec<Frame> {
    let duration_us = secs_to_us(cfg.duration_s);
    let mut streams: Vec<Vec<Frame>> = Vec::new();
    for ap in &cfg.aps {
        let period = ap.beacon_period_us();
        streams.push((0..).map(|k| k * period).take_while(|&t| t < duration_us).map(|t| ap.beacon(t)).collect());
    }
    let exp = Exp::new(cfg.baseline_rate_fps).expect("baseline rate validated positive");
    for (i, st) in cfg.stations.iter().enumerate() {
        let Some(ap) = cfg.ap(st.ap) else { continue };
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(i as u64 + 1);
        let steps = handshake::sequence_len(ap.suite);
        let mut step = 0usize;
        let mut t = 0.0f64;
        let mut frames = Vec::new();
        loop {
            t += exp.sample(&mut rng) * US_PER_S;
            let ts = t.round() as u64;
            if ts >= duration_us {
                break;
            }
            let mut f = handshake::sequence_step(st.mac, ap, step);
            f.timestamp_us = ts;
            frames.push(f);
            step = (step + 1) % steps;
        }
        streams.push(frames);
    }
    merge(streams.into_iter().map(|s| s.into_iter().map(|f| (f, Provenance::Baseline)).collect()))
        .into_iter()
        .map(|(f, _)| f)
        .collect()
}

/// Spoofed deauthentication burst against the target station, right after
/// the station sends a fresh association request.
pub fn inject_deauth_flood(t: &AttackTarget<'_>) -> Vec<Frame> {
    let (start, end) = window_us(t.spec);
    let deauths: Vec<Frame> = slots(start, end, t.spec.rate_fps)
        .map(|ts| Frame {
            timestamp_us: ts,
            src: t.ap.bssid,
            dst: t.sta,
            bssid: t.ap.bssid,
            reason_code: DEAUTH_REASON,
            suite: t.ap.suite,
            label: AttackLabel::Deauth,
            ..Frame::blank(FrameKind::Deauthentication)
        })
        .collect();
    if deauths.is_empty() {
        return deauths;
    }
    let mut assoc = handshake::sequence_step(t.sta, t.ap, handshake::assoc_request_index(t.ap.suite));
    assoc.timestamp_us = start;
    let mut out = vec![assoc];
    out.extend(deauths);
    out
}

/// Rogue AP cloning the legitimate SSID and BSSID while advertising WPA2 at
/// half the beacon interval. The victim's WPA2 handshake aborts after
/// message 3 because that message carries the real AP's security suite.
pub fn inject_rogue_ap(t: &AttackTarget<'_>) -> Vec<Frame> {
    let (start, end) = window_us(t.spec);
    let rogue_interval = (t.ap.beacon_interval_tu / 2).max(1);
    let mut out: Vec<Frame> = slots(start, end, t.spec.rate_fps)
        .map(|ts| {
            let mut b = t.ap.beacon(ts);
            b.suite = SecuritySuite::Wpa2Psk;
            b.beacon_interval_tu = rogue_interval;
            b.label = AttackLabel::RogueAp;
            b
        })
        .collect();
    let Some(first) = out.first().map(|f| f.timestamp_us) else {
        return out;
    };
    let downgraded = ApProfile { suite: SecuritySuite::Wpa2Psk, ..t.ap.clone() };
    let mut seq = handshake::connect_sequence(t.sta, &downgraded, first + 1);
    seq.truncate(6);
    if let Some(msg3) = seq.last_mut() {
        msg3.suite = t.ap.suite;
    }
    out.extend(labelled(seq, AttackLabel::RogueAp));
    out
}

/// Evil twin on a second BSSID: periodic spoofed deauth bursts against the
/// victim, twin beacons and probe responses at the attack rate with the
/// legitimate SSID and suite, and the victim's full connect sequence to the
/// twin.
pub fn inject_evil_twin(t: &AttackTarget<'_>) -> Vec<Frame> {
    let (start, end) = window_us(t.spec);
    if end <= start {
        return Vec::new();
    }
    let twin = ApProfile { bssid: t.spec.attacker_mac, ..t.ap.clone() };
    let mut out = Vec::new();
    let mut burst_start = start;
    while burst_start < end {
        for k in 0..EVIL_TWIN_BURST_LEN {
            let ts = burst_start + k * EVIL_TWIN_BURST_SPACING_US;
            if ts >= end {
                break;
            }
            out.push(Frame {
                timestamp_us: ts,
                src: t.ap.bssid,
                dst: t.sta,
                bssid: t.ap.bssid,
                reason_code: DEAUTH_REASON,
                suite: t.ap.suite,
                ..Frame::blank(FrameKind::Deauthentication)
            });
        }
        burst_start += EVIL_TWIN_BURST_PERIOD_US;
    }
    // Slot centring puts the first advertisement after the first deauth.
    for (i, ts) in slots(start, end, t.spec.rate_fps).enumerate() {
        let mut f = twin.beacon(ts);
        if i % 2 == 1 {
            f.kind = FrameKind::ProbeResponse;
            f.dst = t.sta;
        }
        out.push(f);
    }
    let connect_at = start + EVIL_TWIN_BURST_LEN * EVIL_TWIN_BURST_SPACING_US + handshake::DEFAULT_GAP_US;
    if connect_at < end {
        out.extend(handshake::connect_sequence(t.sta, &twin, connect_at));
    }
    out.sort_by_key(|f| f.timestamp_us);
    labelled(out, AttackLabel::EvilTwin)
}

/// KRACK: the victim's WPA2 handshake in which message 4 is held back and
/// message 3 is retransmitted at the attack rate. Against a WPA3 AP the
/// connection is first downgraded with a short rogue-AP segment; those
/// frames come from [`inject_rogue_ap`] and carry its label.
pub fn inject_krack(t: &AttackTarget<'_>) -> Vec<(Frame, AttackLabel)> {
    let (start, end) = window_us(t.spec);
    if end <= start {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut hs_start = start;
    if t.ap.suite == SecuritySuite::Wpa3Sae {
        let downgrade_end = (start + KRACK_DOWNGRADE_US).min(end);
        let legit_rate = US_PER_S / t.ap.beacon_period_us() as f64;
        let prefix_spec = AttackSpec {
            label: AttackLabel::RogueAp,
            start_s: start as f64 / US_PER_S,
            end_s: downgrade_end as f64 / US_PER_S,
            rate_fps: 2.0 * legit_rate,
            ..t.spec.clone()
        };
        let prefix = inject_rogue_ap(&AttackTarget { spec: &prefix_spec, ..t.clone() });
        out.extend(prefix.into_iter().map(|f| (f, AttackLabel::RogueAp)));
        hs_start = downgrade_end;
    }
    let wpa2 = ApProfile { suite: SecuritySuite::Wpa2Psk, ..t.ap.clone() };
    let gap = handshake::DEFAULT_GAP_US;
    let mut seq = handshake::connect_sequence_with_gap(t.sta, &wpa2, hs_start, gap);
    let msg4 = seq.pop().expect("wpa2 sequence has message 4");
    let msg3 = seq.last().cloned().expect("wpa2 sequence has message 3");
    let replay_start = msg3.timestamp_us + gap;
    let mut last = msg3.timestamp_us;
    let mut frames = seq;
    for ts in slots(replay_start, end, t.spec.rate_fps) {
        frames.push(Frame { timestamp_us: ts, retry: true, ..msg3.clone() });
        last = ts;
    }
    if last == msg3.timestamp_us {
        // Window too short for a paced replay; still retransmit once.
        last += 1;
        frames.push(Frame { timestamp_us: last, retry: true, ..msg3.clone() });
    }
    frames.push(Frame { timestamp_us: last.max(end) + gap, ..msg4 });
    out.extend(labelled(frames, AttackLabel::Krack).into_iter().map(|f| (f, AttackLabel::Krack)));
    out
}

/// Beacon flood: beacons and probe responses from the attacker advertising
/// the target SSID as an open network.
pub fn inject_beacon_flood(t: &AttackTarget<'_>) -> Vec<Frame> {
    let (start, end) = window_us(t.spec);
    let fake = ApProfile {
        bssid: t.spec.attacker_mac,
        suite: SecuritySuite::Open,
        ..t.ap.clone()
    };
    slots(start, end, t.spec.rate_fps)
        .enumerate()
        .map(|(i, ts)| {
            let mut f = fake.beacon(ts);
            if i % 2 == 1 {
                f.kind = FrameKind::ProbeResponse;
                f.dst = if t.sta.is_broadcast() { MacAddr::BROADCAST } else { t.sta };
            }
            f.label = AttackLabel::BeaconFlood;
            f
        })
        .collect()
}

/// Runs the injector for one attack. Each frame is paired with the injector
/// that emitted it (KRACK against WPA3 delegates its prefix to the rogue-AP
/// injector).
pub fn inject(t: &AttackTarget<'_>) -> Vec<(Frame, AttackLabel)> {
    let tag = |v: Vec<Frame>, l: AttackLabel| v.into_iter().map(|f| (f, l)).collect();
    match t.spec.label {
        AttackLabel::Deauth => tag(inject_deauth_flood(t), AttackLabel::Deauth),
        AttackLabel::RogueAp => tag(inject_rogue_ap(t), AttackLabel::RogueAp),
        AttackLabel::EvilTwin => tag(inject_evil_twin(t), AttackLabel::EvilTwin),
        AttackLabel::Krack => inject_krack(t),
        AttackLabel::BeaconFlood => tag(inject_beacon_flood(t), AttackLabel::BeaconFlood),
        AttackLabel::Normal => Vec::new(),
    }
}

/// Stable time merge. Ties on timestamp put attack frames before legitimate
/// ones, then keep generation order (stream index, then position).
fn merge(streams: impl IntoIterator<Item = Vec<(Frame, Provenance)>>) -> Vec<(Frame, Provenance)> {
    let mut all: Vec<(usize, usize, Frame, Provenance)> = streams
        .into_iter()
        .enumerate()
        .flat_map(|(s, v)| v.into_iter().enumerate().map(move |(i, (f, p))| (s, i, f, p)))
        .collect();
    all.sort_by_key(|(s, i, f, _)| (f.timestamp_us, f.label == AttackLabel::Normal, *s, *i));
    all.into_iter().map(|(_, _, f, p)| (f, p)).collect()
}

/// Full scenario with per-frame provenance.
pub fn gen_scenario_with_provenance(cfg: &ScenarioConfig) -> Vec<(Frame, Provenance)> {
    let mut streams = vec![gen_baseline(cfg).into_iter().map(|f| (f, Provenance::Baseline)).collect()];
    for (idx, spec) in cfg.attacks.iter().enumerate() {
        let Some(target) = cfg.resolve(spec) else { continue };
        streams.push(
            inject(&target)
                .into_iter()
                .map(|(f, injector)| (f, Provenance::Injector { attack: idx, injector }))
                .collect(),
        );
    }
    let mut merged = merge(streams);
    for (n, (f, _)) in merged.iter_mut().enumerate() {
        f.frame_number = n as u64;
    }
    merged
}

/// Baseline and attacks merged in time order with dense frame numbers.
pub fn gen_scenario(cfg: &ScenarioConfig) -> Vec<Frame> {
    gen_scenario_with_provenance(cfg).into_iter().map(|(f, _)| f).collect()
}

/// A uniformly random locally administered unicast MAC.
pub fn random_mac<R: Rng>(rng: &mut R) -> MacAddr {
    let mut o: [u8; 6] = rng.random();
    o[0] = (o[0] & 0xfc) | 0x02;
    MacAddr(o)
}
