//! Legitimate connection sequences for Open, WPA2 (4-way EAPOL) and WPA3
//! (SAE commit/confirm followed by the 4-way EAPOL exchange).

use crate::frame::{AttackLabel, Frame, FrameKind, MacAddr, SecuritySuite};

/// Default gap between consecutive handshake frames.
pub const DEFAULT_GAP_US: u64 = 2_000;

/// Default beacon interval in time units (1 TU = 1024 µs).
pub const DEFAULT_BEACON_INTERVAL_TU: u16 = 100;

pub const TU_US: u64 = 1024;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApProfile {
    pub bssid: MacAddr,
    pub ssid: String,
    pub suite: SecuritySuite,
    pub beacon_interval_tu: u16,
    /// Management frame protection. The simulator never enforces it; it is
    /// carried so scenarios can record the AP's configuration.
    pub mfp_enabled: bool,
}

impl ApProfile {
    pub fn new(bssid: MacAddr, ssid: impl Into<String>, suite: SecuritySuite) -> Self {
        ApProfile {
            bssid,
            ssid: ssid.into(),
            suite,
            beacon_interval_tu: DEFAULT_BEACON_INTERVAL_TU,
            mfp_enabled: false,
        }
    }

    pub fn beacon_period_us(&self) -> u64 {
        u64::from(self.beacon_interval_tu.max(1)) * TU_US
    }

    /// Whether a frame is within this AP's radio context: it names the AP's
    /// BSS, is addressed to it, or advertises its SSID.
    pub fn hears(&self, f: &Frame) -> bool {
        f.bssid == self.bssid
            || f.dst == self.bssid
            || f.src == self.bssid
            || (!f.ssid.is_empty() && f.ssid == self.ssid)
    }

    /// A beacon from this AP at `t`.
    pub fn beacon(&self, t: u64) -> Frame {
        Frame {
            timestamp_us: t,
            src: self.bssid,
            dst: MacAddr::BROADCAST,
            bssid: self.bssid,
            ssid: self.ssid.clone(),
            suite: self.suite,
            beacon_interval_tu: self.beacon_interval_tu,
            ..Frame::blank(FrameKind::Beacon)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Idle,
    Authenticating,
    Associated,
    HandshakeInProgress(u8),
    Connected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("{kind:?} (eapol {eapol_msg}) not allowed in phase {phase:?}")]
pub struct TransitionError {
    pub phase: Phase,
    pub kind: FrameKind,
    pub eapol_msg: u8,
}

/// Per-station connection tracker. Frames must follow the connect order for
/// the AP's suite; anything else is rejected without changing state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StationState {
    pub mac: MacAddr,
    pub phase: Phase,
    pub negotiated: Option<SecuritySuite>,
    suite: SecuritySuite,
    sae_committed: bool,
}

impl StationState {
    pub fn new(mac: MacAddr, suite: SecuritySuite) -> Self {
        StationState { mac, phase: Phase::Idle, negotiated: None, suite, sae_committed: false }
    }

    pub fn apply(&mut self, f: &Frame) -> Result<Phase, TransitionError> {
        use FrameKind::*;
        let err = TransitionError { phase: self.phase, kind: f.kind, eapol_msg: f.eapol_msg };
        let next = match (self.phase, f.kind, self.suite) {
            (Phase::Idle, Authentication, SecuritySuite::Open | SecuritySuite::Wpa2Psk) => {
                Phase::Authenticating
            }
            (Phase::Idle, SaeCommit, SecuritySuite::Wpa3Sae) => {
                self.sae_committed = true;
                Phase::Authenticating
            }
            (Phase::Authenticating, SaeCommit | SaeConfirm, SecuritySuite::Wpa3Sae) if self.sae_committed => {
                Phase::Authenticating
            }
            (Phase::Authenticating, AssociationRequest, _) => Phase::Authenticating,
            (Phase::Authenticating, AssociationResponse, SecuritySuite::Open) => Phase::Connected,
            (Phase::Authenticating, AssociationResponse, _) => Phase::Associated,
            (Phase::Associated, Eapol, _) if f.eapol_msg == 1 => Phase::HandshakeInProgress(1),
            (Phase::HandshakeInProgress(n), Eapol, _) if f.eapol_msg == n + 1 && n < 3 => {
                Phase::HandshakeInProgress(n + 1)
            }
            (Phase::HandshakeInProgress(3), Eapol, _) if f.eapol_msg == 4 => Phase::Connected,
            _ => return Err(err),
        };
        self.phase = next;
        if next == Phase::Connected {
            self.negotiated = Some(self.suite);
        }
        Ok(next)
    }
}

/// Number of frames in a full connect sequence for `suite`.
pub fn sequence_len(suite: SecuritySuite) -> usize {
    match suite {
        SecuritySuite::Open => 3,
        SecuritySuite::Wpa2Psk => 7,
        SecuritySuite::Wpa3Sae => 10,
    }
}

/// Kind, EAPOL message number and direction (true = AP to station) of
/// each step, in order. SAE commits and confirms are exchanged in both
/// directions.
fn steps(suite: SecuritySuite) -> Vec<(FrameKind, u8, bool)> {
    use FrameKind::*;
    let mut v = match suite {
        SecuritySuite::Wpa3Sae => {
            vec![(SaeCommit, 0, false), (SaeCommit, 0, true), (SaeConfirm, 0, false), (SaeConfirm, 0, true)]
        }
        _ => vec![(Authentication, 0, false)],
    };
    v.extend([(AssociationRequest, 0, false), (AssociationResponse, 0, true)]);
    if suite != SecuritySuite::Open {
        v.extend((1..=4).map(|m| (Eapol, m, m % 2 == 1)));
    }
    v
}

/// Position of the association request within the connect sequence.
pub fn assoc_request_index(suite: SecuritySuite) -> usize {
    steps(suite).iter().position(|s| s.0 == FrameKind::AssociationRequest).expect("every sequence associates")
}

/// Builds the `index`-th frame of a connect sequence, without a timestamp.
pub fn sequence_step(sta: MacAddr, ap: &ApProfile, index: usize) -> Frame {
    let (kind, eapol_msg, from_ap) = steps(ap.suite)[index];
    let (src, dst) = if from_ap { (ap.bssid, sta) } else { (sta, ap.bssid) };
    let ssid = if matches!(kind, FrameKind::AssociationRequest | FrameKind::AssociationResponse) {
        ap.ssid.clone()
    } else {
        String::new()
    };
    Frame {
        src,
        dst,
        bssid: ap.bssid,
        ssid,
        suite: ap.suite,
        eapol_msg,
        label: AttackLabel::Normal,
        ..Frame::blank(kind)
    }
}

/// Full connect sequence with the default inter-frame gap.
pub fn connect_sequence(sta: MacAddr, ap: &ApProfile, t0: u64) -> Vec<Frame> {
    connect_sequence_with_gap(sta, ap, t0, DEFAULT_GAP_US)
}

pub fn connect_sequence_with_gap(sta: MacAddr, ap: &ApProfile, t0: u64, gap_us: u64) -> Vec<Frame> {
    let gap = gap_us.max(1);
    (0..sequence_len(ap.suite))
        .map(|i| {
            let mut f = sequence_step(sta, ap, i);
            f.timestamp_us = t0 + gap * i as u64;
            f
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationResult {
    Consistent,
    Mismatch,
}

/// Compares the suite a station saw advertised with the one carried in
/// EAPOL message 3. A mismatch means the connection was downgraded.
pub fn validate_rsne(beacon_suite: SecuritySuite, msg3_suite: SecuritySuite) -> ValidationResult {
    if beacon_suite == msg3_suite {
        ValidationResult::Consistent
    } else {
        ValidationResult::Mismatch
    }
}
