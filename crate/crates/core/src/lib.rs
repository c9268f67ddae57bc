//! WLAN intrusion detection lab.
//!
//! Simulated 802.11 management traffic flows through two checkpoints: a flood
//! detector on every access point, which captures 500 ms of frames when the
//! per-second frame count spikes, and a controller that classifies those
//! captures and raises network-wide alarms.

pub mod attack;
pub mod classifier;
pub mod controller;
pub mod dataset;
pub mod fds;
pub mod features;
pub mod frame;
pub mod handshake;
pub mod runner;
pub mod wire;
