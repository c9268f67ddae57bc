//! Scenario description and its line-oriented text format.
//!
//! ```text
//! # comments and blank lines are ignored
//! duration_s = 60
//! seed = 7
//! baseline_rate_fps = 20
//! handshake_gap_us = 2000
//! ap = 02:00:00:00:00:01 corp-wpa3 Wpa3Sae 100
//! station = 02:00:00:00:01:01 02:00:00:00:00:01
//! attack = Deauth attacker=02:ba:d0:00:00:01 target_ap=02:00:00:00:00:01 start=10 end=13 rate=2000
//! ```
//!
//! `ap` takes `bssid ssid suite [beacon_interval_tu] [mfp]`; SSIDs cannot
//! contain whitespace. `station` takes the station MAC and its AP's BSSID.
//! `attack` takes a label followed by `key=value` pairs; `target_sta` is
//! optional and defaults to the target AP's first station.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

use super::AttackTarget;
use crate::frame::{AttackLabel, MacAddr, SecuritySuite, MAX_SSID_LEN};
use crate::handshake::{self, ApProfile};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("config line {line}: {message}")]
pub struct ConfigError {
    /// 1-based; 0 for whole-file problems such as a missing key.
    pub line: usize,
    pub message: String,
}

fn cfg_err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError { line, message: message.into() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackSpec {
    pub label: AttackLabel,
    pub attacker_mac: MacAddr,
    pub target_ap: MacAddr,
    pub target_sta: Option<MacAddr>,
    pub start_s: f64,
    pub end_s: f64,
    pub rate_fps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StationSpec {
    pub mac: MacAddr,
    /// BSSID of the AP the station is associated with.
    pub ap: MacAddr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub duration_s: f64,
    pub aps: Vec<ApProfile>,
    pub stations: Vec<StationSpec>,
    pub baseline_rate_fps: f64,
    pub handshake_gap_us: u64,
    pub attacks: Vec<AttackSpec>,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            duration_s: 10.0,
            aps: Vec::new(),
            stations: Vec::new(),
            baseline_rate_fps: 20.0,
            handshake_gap_us: handshake::DEFAULT_GAP_US,
            attacks: Vec::new(),
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn ap(&self, bssid: MacAddr) -> Option<&ApProfile> {
        self.aps.iter().find(|a| a.bssid == bssid)
    }

    /// Number of stations associated with `bssid`.
    pub fn users(&self, bssid: MacAddr) -> usize {
        self.stations.iter().filter(|s| s.ap == bssid).count()
    }

    /// MACs of every configured AP and station.
    pub fn known_macs(&self) -> impl Iterator<Item = MacAddr> + '_ {
        self.aps.iter().map(|a| a.bssid).chain(self.stations.iter().map(|s| s.mac))
    }

    pub fn resolve<'a>(&'a self, spec: &'a AttackSpec) -> Option<AttackTarget<'a>> {
        let ap = self.ap(spec.target_ap)?;
        let sta = spec
            .target_sta
            .or_else(|| self.stations.iter().find(|s| s.ap == ap.bssid).map(|s| s.mac))
            .unwrap_or(MacAddr::BROADCAST);
        Some(AttackTarget { spec, ap, sta })
    }

    /// Checks the structural invariants. Errors carry line 0; the parser
    /// re-runs the per-entry checks with real line numbers.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.duration_s >= 1.0) || !self.duration_s.is_finite() {
            return Err(cfg_err(0, "duration_s must be at least 1"));
        }
        if !(self.baseline_rate_fps > 0.0) || !self.baseline_rate_fps.is_finite() {
            return Err(cfg_err(0, "baseline_rate_fps must be positive"));
        }
        for ap in &self.aps {
            check_ap(ap).map_err(|m| cfg_err(0, m))?;
        }
        for st in &self.stations {
            check_station(self, st).map_err(|m| cfg_err(0, m))?;
        }
        for a in &self.attacks {
            check_attack(self, a).map_err(|m| cfg_err(0, m))?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ScenarioConfig::default();
        let mut seen_duration = false;
        let mut seen_seed = false;
        let mut deferred: Vec<(usize, Entry)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| cfg_err(line, format!("expected `key = value`, found `{content}`")))?;
            match key {
                "duration_s" => {
                    cfg.duration_s = parse_num(value, line, key)?;
                    seen_duration = true;
                }
                "seed" => {
                    cfg.seed = parse_num(value, line, key)?;
                    seen_seed = true;
                }
                "baseline_rate_fps" => cfg.baseline_rate_fps = parse_num(value, line, key)?,
                "handshake_gap_us" => cfg.handshake_gap_us = parse_num(value, line, key)?,
                "ap" => {
                    let ap = parse_ap(value).map_err(|m| cfg_err(line, m))?;
                    check_ap(&ap).map_err(|m| cfg_err(line, m))?;
                    if cfg.ap(ap.bssid).is_some() {
                        return Err(cfg_err(line, format!("duplicate ap {}", ap.bssid)));
                    }
                    cfg.aps.push(ap);
                }
                "station" => deferred.push((line, Entry::Station(parse_station(value).map_err(|m| cfg_err(line, m))?))),
                "attack" => deferred.push((line, Entry::Attack(parse_attack(value).map_err(|m| cfg_err(line, m))?))),
                other => return Err(cfg_err(line, format!("unknown key `{other}`"))),
            }
        }
        if !seen_duration {
            return Err(cfg_err(0, "missing `duration_s`"));
        }
        if !seen_seed {
            return Err(cfg_err(0, "missing `seed`"));
        }
        if !(cfg.duration_s >= 1.0) || !cfg.duration_s.is_finite() {
            return Err(cfg_err(0, "duration_s must be at least 1"));
        }
        if !(cfg.baseline_rate_fps > 0.0) || !cfg.baseline_rate_fps.is_finite() {
            return Err(cfg_err(0, "baseline_rate_fps must be positive"));
        }
        // Stations and attacks refer to APs that may be declared later.
        for (line, entry) in deferred {
            match entry {
                Entry::Station(s) => {
                    check_station(&cfg, &s).map_err(|m| cfg_err(line, m))?;
                    cfg.stations.push(s);
                }
                Entry::Attack(a) => {
                    check_attack(&cfg, &a).map_err(|m| cfg_err(line, m))?;
                    cfg.attacks.push(a);
                }
            }
        }
        Ok(cfg)
    }

    /// Renders the config in the text format accepted by [`ScenarioConfig::parse`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "duration_s = {}", self.duration_s);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "baseline_rate_fps = {}", self.baseline_rate_fps);
        let _ = writeln!(s, "handshake_gap_us = {}", self.handshake_gap_us);
        for ap in &self.aps {
            let _ = write!(s, "ap = {} {} {} {}", ap.bssid, ap.ssid, ap.suite, ap.beacon_interval_tu);
            if ap.mfp_enabled {
                s.push_str(" mfp");
            }
            s.push('\n');
        }
        for st in &self.stations {
            let _ = writeln!(s, "station = {} {}", st.mac, st.ap);
        }
        for a in &self.attacks {
            let _ = writeln!(s, "attack = {a}");
        }
        s
    }
}

impl fmt::Display for AttackSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} attacker={} target_ap={}", self.label, self.attacker_mac, self.target_ap)?;
        if let Some(sta) = self.target_sta {
            write!(f, " target_sta={sta}")?;
        }
        write!(f, " start={} end={} rate={}", self.start_s, self.end_s, self.rate_fps)
    }
}

enum Entry {
    Station(StationSpec),
    Attack(AttackSpec),
}

fn parse_num<T: FromStr>(value: &str, line: usize, key: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| cfg_err(line, format!("`{key}`: cannot parse `{value}`")))
}

fn parse_mac(s: &str) -> Result<MacAddr, String> {
    s.parse().map_err(|e: crate::frame::MacParseError| e.to_string())
}

fn parse_ap(value: &str) -> Result<ApProfile, String> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    if parts.len() < 3 || parts.len() > 5 {
        return Err("ap expects `bssid ssid suite [beacon_interval_tu] [mfp]`".into());
    }
    let mut ap = ApProfile::new(parse_mac(parts[0])?, parts[1], parts[2].parse::<SecuritySuite>()?);
    for extra in &parts[3..] {
        if *extra == "mfp" {
            ap.mfp_enabled = true;
        } else {
            ap.beacon_interval_tu = extra.parse().map_err(|_| format!("bad beacon interval `{extra}`"))?;
        }
    }
    Ok(ap)
}

fn parse_station(value: &str) -> Result<StationSpec, String> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    let [mac, ap] = parts.as_slice() else {
        return Err("station expects `mac ap_bssid`".into());
    };
    Ok(StationSpec { mac: parse_mac(mac)?, ap: parse_mac(ap)? })
}

fn parse_attack(value: &str) -> Result<AttackSpec, String> {
    let mut parts = value.split_whitespace();
    let label: AttackLabel = parts.next().ok_or("attack expects a label")?.parse()?;
    let (mut attacker, mut target_ap, mut target_sta) = (None, None, None);
    let (mut start, mut end, mut rate) = (None, None, None);
    for kv in parts {
        let (k, v) = kv.split_once('=').ok_or_else(|| format!("expected key=value, found `{kv}`"))?;
        let num = || v.parse::<f64>().map_err(|_| format!("`{k}`: cannot parse `{v}`"));
        match k {
            "attacker" => attacker = Some(parse_mac(v)?),
            "target_ap" => target_ap = Some(parse_mac(v)?),
            "target_sta" => target_sta = Some(parse_mac(v)?),
            "start" => start = Some(num()?),
            "end" => end = Some(num()?),
            "rate" => rate = Some(num()?),
            _ => return Err(format!("unknown attack key `{k}`")),
        }
    }
    Ok(AttackSpec {
        label,
        attacker_mac: attacker.ok_or("attack missing `attacker`")?,
        target_ap: target_ap.ok_or("attack missing `target_ap`")?,
        target_sta,
        start_s: start.ok_or("attack missing `start`")?,
        end_s: end.ok_or("attack missing `end`")?,
        rate_fps: rate.ok_or("attack missing `rate`")?,
    })
}

fn check_ap(ap: &ApProfile) -> Result<(), String> {
    if ap.beacon_interval_tu < 1 {
        return Err("beacon_interval_tu must be at least 1".into());
    }
    if ap.ssid.len() > MAX_SSID_LEN {
        return Err(format!("ssid longer than {MAX_SSID_LEN} bytes"));
    }
    Ok(())
}

fn check_station(cfg: &ScenarioConfig, st: &StationSpec) -> Result<(), String> {
    if cfg.ap(st.ap).is_none() {
        return Err(format!("station {} refers to unknown ap {}", st.mac, st.ap));
    }
    Ok(())
}

fn check_attack(cfg: &ScenarioConfig, a: &AttackSpec) -> Result<(), String> {
    if a.label == AttackLabel::Normal {
        return Err("attack label cannot be Normal".into());
    }
    if cfg.ap(a.target_ap).is_none() {
        return Err(format!("attack targets unknown ap {}", a.target_ap));
    }
    if !(a.start_s < a.end_s) {
        return Err("attack start must be before end".into());
    }
    if !(a.rate_fps > 0.0) || !a.rate_fps.is_finite() {
        return Err("attack rate must be positive".into());
    }
    if a.start_s < 0.0 || a.end_s > cfg.duration_s {
        return Err(format!("attack window [{}, {}] outside [0, {}]", a.start_s, a.end_s, cfg.duration_s));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# two APs
duration_s = 30
seed = 9
baseline_rate_fps = 25
station = 02:00:00:00:01:01 02:00:00:00:00:01
ap = 02:00:00:00:00:01 corp Wpa3Sae 100 mfp
ap = 02:00:00:00:00:02 lab Wpa2Psk
attack = Deauth attacker=02:ba:d0:00:00:01 target_ap=02:00:00:00:00:01 start=5 end=8 rate=2000
attack = Krack attacker=02:ba:d0:00:00:02 target_ap=02:00:00:00:00:02 target_sta=02:00:00:00:01:01 start=10 end=12.5 rate=1500
";

    #[test]
    fn parse_sample() {
        let cfg = ScenarioConfig::parse(SAMPLE).unwrap();
        assert_eq!(cfg.duration_s, 30.0);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.aps.len(), 2);
        assert!(cfg.aps[0].mfp_enabled);
        assert_eq!(cfg.aps[1].beacon_interval_tu, 100);
        assert_eq!(cfg.stations.len(), 1);
        assert_eq!(cfg.attacks[1].end_s, 12.5);
        assert_eq!(cfg.attacks[1].target_sta, Some("02:00:00:00:01:01".parse().unwrap()));
        cfg.validate().unwrap();
    }

    #[test]
    fn text_round_trip() {
        let cfg = ScenarioConfig::parse(SAMPLE).unwrap();
        assert_eq!(ScenarioConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = SAMPLE.replace("start=10 end=12.5", "start=10 end=40");
        assert_eq!(ScenarioConfig::parse(&bad).unwrap_err().line, 9);
        let bad = SAMPLE.replace("seed = 9", "seed = nine");
        assert_eq!(ScenarioConfig::parse(&bad).unwrap_err().line, 3);
        let bad = SAMPLE.replace("Wpa2Psk", "Wpa9");
        assert_eq!(ScenarioConfig::parse(&bad).unwrap_err().line, 7);
        let bad = format!("{SAMPLE}bogus line\n");
        assert_eq!(ScenarioConfig::parse(&bad).unwrap_err().line, 10);
        let bad = SAMPLE.replace("02:00:00:00:01:01 02:00:00:00:00:01", "02:00:00:00:01:01 02:00:00:00:00:09");
        assert_eq!(ScenarioConfig::parse(&bad).unwrap_err().line, 5);
        assert_eq!(ScenarioConfig::parse("seed = 1\n").unwrap_err().line, 0);
        let bad = SAMPLE.replace("duration_s = 30", "duration_s = 0.5");
        assert!(ScenarioConfig::parse(&bad).is_err());
        let bad = SAMPLE.replace("start=5 end=8", "start=8 end=8");
        assert_eq!(ScenarioConfig::parse(&bad).unwrap_err().line, 8);
    }
}
