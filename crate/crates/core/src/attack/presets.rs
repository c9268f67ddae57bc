//! Built-in scenarios: the two-AP reference network, the balanced training
//! corpus, and the single-attack and composite replay scenarios.

use super::{AttackSpec, ScenarioConfig, StationSpec};
use crate::frame::{AttackLabel, MacAddr, SecuritySuite};
use crate::handshake::ApProfile;

pub const WPA3_AP: MacAddr = MacAddr([0x02, 0, 0, 0, 0, 0x01]);
pub const WPA2_AP: MacAddr = MacAddr([0x02, 0, 0, 0, 0, 0x02]);

/// Attack rate used by the replay scenarios.
pub const DEFAULT_ATTACK_RATE_FPS: f64 = 2000.0;
pub const DEFAULT_BASELINE_RATE_FPS: f64 = 20.0;
pub const DEFAULT_ATTACK_LEN_S: f64 = 3.0;

pub const ATTACKS: [AttackLabel; 5] = [
    AttackLabel::Deauth,
    AttackLabel::RogueAp,
    AttackLabel::EvilTwin,
    AttackLabel::Krack,
    AttackLabel::BeaconFlood,
];

pub fn attacker_mac(label: AttackLabel, instance: u8) -> MacAddr {
    MacAddr([0x02, 0xba, 0xd0, instance, 0, label.code()])
}

pub fn station_mac(ap: MacAddr, i: u8) -> MacAddr {
    MacAddr([0x02, 0, 0, 0, ap.0[5], 0x10 + i])
}

/// One WPA3 AP with five stations and one WPA2 AP with three.
pub fn reference_network(seed: u64, duration_s: f64) -> ScenarioConfig {
    let aps = vec![
        ApProfile::new(WPA3_AP, "corp-wpa3", SecuritySuite::Wpa3Sae),
        ApProfile::new(WPA2_AP, "lab-wpa2", SecuritySuite::Wpa2Psk),
    ];
    let mut stations = Vec::new();
    for i in 0..5 {
        stations.push(StationSpec { mac: station_mac(WPA3_AP, i), ap: WPA3_AP });
    }
    for i in 0..3 {
        stations.push(StationSpec { mac: station_mac(WPA2_AP, i), ap: WPA2_AP });
    }
    ScenarioConfig {
        duration_s,
        aps,
        stations,
        baseline_rate_fps: DEFAULT_BASELINE_RATE_FPS,
        seed,
        ..ScenarioConfig::default()
    }
}

pub fn attack(label: AttackLabel, instance: u8, target_ap: MacAddr, start_s: f64, len_s: f64, rate_fps: f64) -> AttackSpec {
    AttackSpec {
        label,
        attacker_mac: attacker_mac(label, instance),
        target_ap,
        target_sta: None,
        start_s,
        end_s: start_s + len_s,
        rate_fps,
    }
}

/// Training corpus: every attack twice (once per AP, at different rates),
/// spaced ten seconds apart over a 120 s baseline. Roughly 10k frames per
/// attack class and 20k legitimate frames.
pub fn training_corpus(seed: u64) -> ScenarioConfig {
    let mut cfg = reference_network(seed, 120.0);
    let mut start = 10.0;
    for label in ATTACKS {
        cfg.attacks.push(attack(label, 0, WPA3_AP, start, DEFAULT_ATTACK_LEN_S, 2500.0));
        start += 10.0;
        cfg.attacks.push(attack(label, 1, WPA2_AP, start, DEFAULT_ATTACK_LEN_S, 1500.0));
        start += 10.0;
    }
    cfg
}

/// A single attack against the WPA3 AP at the default rate, starting at 10 s.
pub fn single_attack(label: AttackLabel, seed: u64) -> ScenarioConfig {
    let mut cfg = reference_network(seed, 20.0);
    cfg.attacks.push(attack(label, 0, WPA3_AP, 10.0, DEFAULT_ATTACK_LEN_S, DEFAULT_ATTACK_RATE_FPS));
    cfg
}

/// All five attacks in sequence against the WPA3 AP.
pub fn composite(seed: u64) -> ScenarioConfig {
    let mut cfg = reference_network(seed, 70.0);
    for (i, label) in ATTACKS.into_iter().enumerate() {
        cfg.attacks.push(attack(label, 0, WPA3_AP, 10.0 + 10.0 * i as f64, DEFAULT_ATTACK_LEN_S, DEFAULT_ATTACK_RATE_FPS));
    }
    cfg
}

/// Attack-free traffic on the reference network.
pub fn baseline_only(seed: u64, duration_s: f64) -> ScenarioConfig {
    reference_network(seed, duration_s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for cfg in [training_corpus(1), composite(1), baseline_only(1, 60.0)] {
            cfg.validate().unwrap();
        }
        for label in ATTACKS {
            single_attack(label, 3).validate().unwrap();
        }
    }
}
