//! C ABI over `rids-core`.
//!
//! Every function returns a [`RidsStatus`] (or a plain value for trivial
//! getters) and never unwinds across the boundary. Objects are opaque
//! handles created by `*_new`/`*_load` and released with the matching
//! `*_free`. Variable-length outputs use the caller-buffer convention: pass
//! a buffer and its capacity; on [`RidsStatus::BufferTooSmall`] the required
//! length is written to `out_len` and nothing else changes.

use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use rids_core::attack::ScenarioConfig;
use rids_core::classifier::{deserialize_model, serialize_model, Model};
use rids_core::controller::Controller;
use rids_core::fds::{ApMonitor, TriggerDecision};
use rids_core::features::{FeatureVector, FEATURE_COUNT};
use rids_core::frame::{decode_frame, MacAddr};
use rids_core::wire::{frame_message, parse_message, WireMessage};

/// Result codes shared by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RidsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ModelFormat = 3,
    FrameFormat = 4,
    WireFormat = 5,
    ConfigFormat = 6,
    OutOfOrder = 7,
    BufferTooSmall = 8,
    NoData = 9,
    Panic = 10,
}

/// Feature vector length expected by [`rids_model_predict`].
pub const RIDS_FEATURE_COUNT: usize = 16;
const _: () = assert!(RIDS_FEATURE_COUNT == FEATURE_COUNT);

/// A loaded classifier.
pub struct RidsModel(Model);

/// Flood detector for one access point.
pub struct RidsMonitor(ApMonitor);

/// Controller holding a classifier, AP profiles and the block list.
pub struct RidsController(Controller);

/// Alarm raised by [`rids_controller_process`].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RidsAlarm {
    pub ap: [u8; 6],
    /// Attack label code, 1..=5.
    pub attack: u8,
    pub has_attacker: u8,
    pub attacker: [u8; 6],
    pub confidence: f64,
    pub raised_at_us: u64,
    pub trigger_quantum: u64,
}

fn guard(f: impl FnOnce() -> RidsStatus) -> RidsStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(RidsStatus::Panic)
}

/// `len` bytes at `data`; a null pointer is accepted only for `len == 0`.
unsafe fn bytes<'a>(data: *const u8, len: usize) -> Option<&'a [u8]> {
    if len == 0 {
        Some(&[])
    } else if data.is_null() {
        None
    } else {
        Some(slice::from_raw_parts(data, len))
    }
}

unsafe fn write_out(src: &[u8], buf: *mut u8, cap: usize, out_len: *mut usize) -> RidsStatus {
    if out_len.is_null() {
        return RidsStatus::NullPointer;
    }
    *out_len = src.len();
    if src.len() > cap {
        return RidsStatus::BufferTooSmall;
    }
    if !src.is_empty() {
        if buf.is_null() {
            return RidsStatus::NullPointer;
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    }
    RidsStatus::Ok
}

/// Static, NUL-terminated description of a status code.
#[no_mangle]
pub extern "C" fn rids_status_message(status: RidsStatus) -> *const c_char {
    let s: &'static CStr = match status {
        RidsStatus::Ok => c"ok",
        RidsStatus::NullPointer => c"null pointer argument",
        RidsStatus::InvalidArgument => c"invalid argument",
        RidsStatus::ModelFormat => c"malformed model",
        RidsStatus::FrameFormat => c"malformed frame record",
        RidsStatus::WireFormat => c"malformed wire message",
        RidsStatus::ConfigFormat => c"malformed scenario config",
        RidsStatus::OutOfOrder => c"frame out of order",
        RidsStatus::BufferTooSmall => c"output buffer too small",
        RidsStatus::NoData => c"nothing available",
        RidsStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

// ---- model ----

/// Loads a serialized model. On success `*out` owns a new handle.
///
/// # Safety
/// `data` must point to `len` readable bytes and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rids_model_load(data: *const u8, len: usize, out: *mut *mut RidsModel) -> RidsStatus {
    guard(|| {
        if out.is_null() {
            return RidsStatus::NullPointer;
        }
        let Some(b) = bytes(data, len) else { return RidsStatus::NullPointer };
        match deserialize_model(b) {
            Ok(m) => {
                *out = Box::into_raw(Box::new(RidsModel(m)));
                RidsStatus::Ok
            }
            Err(_) => RidsStatus::ModelFormat,
        }
    })
}

/// Model kind code: 0 logistic regression, 1 tree, 2 forest; 255 for null.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rids_model_kind(model: *const RidsModel) -> u8 {
    model.as_ref().map_or(u8::MAX, |m| m.0.kind().code())
}

/// Classifies one feature vector of [`RIDS_FEATURE_COUNT`] values and writes
/// the label code (0 Normal, 1..=5 attacks).
///
/// # Safety
/// `features` must point to `RIDS_FEATURE_COUNT` doubles; `label` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rids_model_predict(model: *const RidsModel, features: *const f64, label: *mut u8) -> RidsStatus {
    guard(|| {
        let (Some(m), false, false) = (model.as_ref(), features.is_null(), label.is_null()) else {
            return RidsStatus::NullPointer;
        };
        let mut v = FeatureVector::default();
        v.0.copy_from_slice(slice::from_raw_parts(features, FEATURE_COUNT));
        if !v.is_finite() {
            return RidsStatus::InvalidArgument;
        }
        *label = m.0.predict(&v).index() as u8;
        RidsStatus::Ok
    })
}

/// Re-serializes a model into `buf`.
///
/// # Safety
/// `buf` must have `cap` writable bytes; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rids_model_serialize(
    model: *const RidsModel,
    buf: *mut u8,
    cap: usize,
    out_len: *mut usize,
) -> RidsStatus {
    guard(|| match model.as_ref() {
        Some(m) => write_out(&serialize_model(&m.0), buf, cap, out_len),
        None => RidsStatus::NullPointer,
    })
}

/// # Safety
/// `model` must be null or a handle from [`rids_model_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rids_model_free(model: *mut RidsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

// ---- flood detector ----

/// Creates a monitor for the AP whose 6-byte BSSID is at `ap` and that
/// serves `users` associated stations.
///
/// # Safety
/// `ap` must point to 6 bytes and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rids_monitor_new(ap: *const u8, users: usize, out: *mut *mut RidsMonitor) -> RidsStatus {
    guard(|| {
        if ap.is_null() || out.is_null() {
            return RidsStatus::NullPointer;
        }
        let mut mac = [0u8; 6];
        mac.copy_from_slice(slice::from_raw_parts(ap, 6));
        *out = Box::into_raw(Box::new(RidsMonitor(ApMonitor::new(MacAddr(mac), users))));
        RidsStatus::Ok
    })
}

/// Feeds one binary frame record. Frames must arrive in timestamp order.
///
/// # Safety
/// `monitor` must be a live handle; `data` must point to `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn rids_monitor_push_frame(monitor: *mut RidsMonitor, data: *const u8, len: usize) -> RidsStatus {
    guard(|| {
        let (Some(m), Some(b)) = (monitor.as_mut(), bytes(data, len)) else { return RidsStatus::NullPointer };
        let Ok(frame) = decode_frame(b) else { return RidsStatus::FrameFormat };
        match m.0.push(&frame) {
            Ok(()) => RidsStatus::Ok,
            Err(_) => RidsStatus::OutOfOrder,
        }
    })
}

/// Closes every quantum ending at or before `end_us` and completes any open
/// capture.
///
/// # Safety
/// `monitor` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rids_monitor_finish(monitor: *mut RidsMonitor, end_us: u64) -> RidsStatus {
    guard(|| match monitor.as_mut() {
        Some(m) => {
            m.0.finish(end_us);
            RidsStatus::Ok
        }
        None => RidsStatus::NullPointer,
    })
}

/// Number of quanta closed so far; 0 for null.
///
/// # Safety
/// `monitor` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rids_monitor_quantum_count(monitor: *const RidsMonitor) -> u64 {
    monitor.as_ref().map_or(0, |m| m.0.outcomes().len() as u64)
}

/// Number of closed quanta that triggered a capture; 0 for null.
///
/// # Safety
/// `monitor` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rids_monitor_trigger_count(monitor: *const RidsMonitor) -> u64 {
    monitor.as_ref().map_or(0, |m| {
        m.0.outcomes().iter().filter(|o| o.decision == TriggerDecision::Capture).count() as u64
    })
}

/// Writes the oldest completed capture batch as a framed wire message and
/// removes it from the queue. Returns [`RidsStatus::NoData`] when none is
/// pending. On [`RidsStatus::BufferTooSmall`] the batch stays queued.
///
/// # Safety
/// `monitor` must be a live handle; `buf` must have `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn rids_monitor_next_batch(
    monitor: *mut RidsMonitor,
    buf: *mut u8,
    cap: usize,
    out_len: *mut usize,
) -> RidsStatus {
    guard(|| {
        let Some(m) = monitor.as_mut() else { return RidsStatus::NullPointer };
        let Some(batch) = m.0.peek_batch() else { return RidsStatus::NoData };
        let encoded = match frame_message(&WireMessage::CaptureBatch(batch.clone())) {
            Ok(b) => b,
            Err(_) => return RidsStatus::WireFormat,
        };
        let status = write_out(&encoded, buf, cap, out_len);
        if status == RidsStatus::Ok {
            m.0.emit_batch();
        }
        status
    })
}

/// # Safety
/// `monitor` must be null or a handle from [`rids_monitor_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rids_monitor_free(monitor: *mut RidsMonitor) {
    if !monitor.is_null() {
        drop(Box::from_raw(monitor));
    }
}

// ---- controller ----

/// Creates a controller from a model handle (copied, the caller keeps
/// ownership) and a NUL-terminated scenario config that lists the APs and
/// known stations.
///
/// # Safety
/// `model` must be a live handle, `config` a valid C string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rids_controller_new(
    model: *const RidsModel,
    config: *const c_char,
    out: *mut *mut RidsController,
) -> RidsStatus {
    guard(|| {
        let (Some(m), false, false) = (model.as_ref(), config.is_null(), out.is_null()) else {
            return RidsStatus::NullPointer;
        };
        let Ok(text) = CStr::from_ptr(config).to_str() else { return RidsStatus::ConfigFormat };
        let Ok(cfg) = ScenarioConfig::parse(text) else { return RidsStatus::ConfigFormat };
        let ctrl = Controller::new(m.0.clone(), &cfg.aps, cfg.known_macs());
        *out = Box::into_raw(Box::new(RidsController(ctrl)));
        RidsStatus::Ok
    })
}

/// Processes one framed capture-batch message. `*raised` is set to 1 and
/// `*alarm` filled when the batch raises an alarm, else `*raised` is 0.
///
/// # Safety
/// `controller` must be a live handle; `data` must point to `len` bytes;
/// `alarm` and `raised` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rids_controller_process(
    controller: *const RidsController,
    data: *const u8,
    len: usize,
    alarm: *mut RidsAlarm,
    raised: *mut u8,
) -> RidsStatus {
    guard(|| {
        let (Some(c), Some(b), false, false) = (controller.as_ref(), bytes(data, len), alarm.is_null(), raised.is_null())
        else {
            return RidsStatus::NullPointer;
        };
        let batch = match parse_message(b) {
            Ok((WireMessage::CaptureBatch(batch), used)) if used == b.len() => batch,
            Ok(_) => return RidsStatus::InvalidArgument,
            Err(_) => return RidsStatus::WireFormat,
        };
        *raised = 0;
        if let Some(a) = c.0.process(&batch).verdict.alarm() {
            *alarm = RidsAlarm {
                ap: a.ap_id.0,
                attack: a.attack.index() as u8,
                has_attacker: u8::from(a.attacker.is_some()),
                attacker: a.attacker.unwrap_or(MacAddr::ZERO).0,
                confidence: a.confidence,
                raised_at_us: a.raised_at_us,
                trigger_quantum: a.trigger_quantum,
            };
            *raised = 1;
        }
        RidsStatus::Ok
    })
}

/// Number of MAC addresses on the block list; 0 for null.
///
/// # Safety
/// `controller` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rids_controller_blocked_count(controller: *const RidsController) -> usize {
    controller.as_ref().map_or(0, |c| c.0.block_list().len())
}

/// Writes 1 to `*blocked` if the 6-byte MAC at `mac` is on the block list.
///
/// # Safety
/// `controller` must be a live handle; `mac` must point to 6 bytes.
#[no_mangle]
pub unsafe extern "C" fn rids_controller_is_blocked(
    controller: *const RidsController,
    mac: *const u8,
    blocked: *mut u8,
) -> RidsStatus {
    guard(|| {
        let (Some(c), false, false) = (controller.as_ref(), mac.is_null(), blocked.is_null()) else {
            return RidsStatus::NullPointer;
        };
        let mut m = [0u8; 6];
        m.copy_from_slice(slice::from_raw_parts(mac, 6));
        *blocked = u8::from(c.0.block_list().contains(&MacAddr(m)));
        RidsStatus::Ok
    })
}

/// # Safety
/// `controller` must be null or a handle from [`rids_controller_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rids_controller_free(controller: *mut RidsController) {
    if !controller.is_null() {
        drop(Box::from_raw(controller));
    }
}
