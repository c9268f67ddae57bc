//! AP to controller transport framing.
//!
//! ```text
//! "RWIR" | kind u8 | length u32 LE | payload | crc32(payload) u32 LE
//! ```
//!
//! Payloads:
//! - capture batch: ap_id (6), trigger_quantum u64, start_us u64,
//!   frame count u32, then binary frame records back to back
//! - block notify: recipient ap (6), blocked mac (6), inserted_at_us u64
//! - ack: empty

use std::io::{self, Read};

use thiserror::Error;

use crate::controller::BlockNotification;
use crate::fds::CaptureBatch;
use crate::frame::{decode_frame_prefix, encode_frame_into, DecodeError, EncodingError, MacAddr};

pub const WIRE_MAGIC: [u8; 4] = *b"RWIR";
pub const MAX_PAYLOAD: usize = 16 * 1024 * 1024;
pub const HEADER_LEN: usize = 9;
pub const TRAILER_LEN: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageKind {
    CaptureBatch = 1,
    BlockNotify = 2,
    Ack = 3,
}

impl MessageKind {
    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            1 => Some(MessageKind::CaptureBatch),
            2 => Some(MessageKind::BlockNotify),
            3 => Some(MessageKind::Ack),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WireMessage {
    CaptureBatch(CaptureBatch),
    BlockNotify(BlockNotification),
    Ack,
}

impl WireMessage {
    pub fn kind(&self) -> MessageKind {
        match self {
            WireMessage::CaptureBatch(_) => MessageKind::CaptureBatch,
            WireMessage::BlockNotify(_) => MessageKind::BlockNotify,
            WireMessage::Ack => MessageKind::Ack,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("checksum mismatch: header says {expected:08x}, payload hashes to {actual:08x}")]
    Corruption { expected: u32, actual: u32 },
    #[error("need {needed} more bytes")]
    NeedMoreData { needed: usize },
    #[error("payload of {0} bytes exceeds the {MAX_PAYLOAD} byte limit")]
    PayloadTooLarge(usize),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
}

fn encode_payload(m: &WireMessage) -> Result<Vec<u8>, WireError> {
    let mut p = Vec::new();
    match m {
        WireMessage::CaptureBatch(b) => {
            p.reserve(26 + b.frames.len() * 48);
            p.extend_from_slice(&b.ap_id.octets());
            p.extend_from_slice(&b.trigger_quantum.to_le_bytes());
            p.extend_from_slice(&b.start_us.to_le_bytes());
            let n = u32::try_from(b.frames.len()).map_err(|_| WireError::PayloadTooLarge(usize::MAX))?;
            p.extend_from_slice(&n.to_le_bytes());
            for f in &b.frames {
                encode_frame_into(f, &mut p)?;
                if p.len() > MAX_PAYLOAD {
                    return Err(WireError::PayloadTooLarge(p.len()));
                }
            }
        }
        WireMessage::BlockNotify(n) => {
            p.extend_from_slice(&n.ap_id.octets());
            p.extend_from_slice(&n.mac.octets());
            p.extend_from_slice(&n.inserted_at_us.to_le_bytes());
        }
        WireMessage::Ack => {}
    }
    Ok(p)
}

/// Encodes one message with header and checksum.
pub fn frame_message(m: &WireMessage) -> Result<Vec<u8>, WireError> {
    let payload = encode_payload(m)?;
    if payload.len() > MAX_PAYLOAD {
        return Err(WireError::PayloadTooLarge(payload.len()));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len() + TRAILER_LEN);
    out.extend_from_slice(&WIRE_MAGIC);
    out.push(m.kind() as u8);
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.extend_from_slice(&payload);
    out.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
    Ok(out)
}

/// Parses the message at the start of `b`, returning it and the number of
/// bytes it occupied. Bytes after the message are left alone.
pub fn parse_message(b: &[u8]) -> Result<(WireMessage, usize), WireError> {
    let magic_seen = b.len().min(4);
    if b[..magic_seen] != WIRE_MAGIC[..magic_seen] {
        return Err(WireError::Protocol(format!("bad magic {:02x?}", &b[..magic_seen])));
    }
    if b.len() < HEADER_LEN {
        return Err(WireError::NeedMoreData { needed: HEADER_LEN - b.len() });
    }
    let kind = MessageKind::from_code(b[4]).ok_or_else(|| WireError::Protocol(format!("unknown kind {}", b[4])))?;
    let len = u32::from_le_bytes(b[5..9].try_into().expect("4 bytes")) as usize;
    if len > MAX_PAYLOAD {
        return Err(WireError::PayloadTooLarge(len));
    }
    let total = HEADER_LEN + len + TRAILER_LEN;
    if b.len() < total {
        return Err(WireError::NeedMoreData { needed: total - b.len() });
    }
    let payload = &b[HEADER_LEN..HEADER_LEN + len];
    let expected = u32::from_le_bytes(b[HEADER_LEN + len..total].try_into().expect("4 bytes"));
    let actual = crc32fast::hash(payload);
    if expected != actual {
        return Err(WireError::Corruption { expected, actual });
    }
    Ok((decode_payload(kind, payload)?, total))
}

fn mac_at(p: &[u8], at: usize) -> MacAddr {
    MacAddr(p[at..at + 6].try_into().expect("6 bytes"))
}

fn u64_at(p: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(p[at..at + 8].try_into().expect("8 bytes"))
}

fn decode_payload(kind: MessageKind, p: &[u8]) -> Result<WireMessage, WireError> {
    let bad_len = |want: &str| WireError::Protocol(format!("{kind:?} payload of {} bytes, expected {want}", p.len()));
    match kind {
        MessageKind::Ack => {
            if !p.is_empty() {
                return Err(bad_len("0"));
            }
            Ok(WireMessage::Ack)
        }
        MessageKind::BlockNotify => {
            if p.len() != 20 {
                return Err(bad_len("20"));
            }
            Ok(WireMessage::BlockNotify(BlockNotification {
                ap_id: mac_at(p, 0),
                mac: mac_at(p, 6),
                inserted_at_us: u64_at(p, 12),
            }))
        }
        MessageKind::CaptureBatch => {
            if p.len() < 26 {
                return Err(bad_len("at least 26"));
            }
            let n = u32::from_le_bytes(p[22..26].try_into().expect("4 bytes")) as usize;
            let mut rest = &p[26..];
            let mut frames = Vec::with_capacity(n.min(rest.len() / crate::frame::FIXED_RECORD_LEN));
            for i in 0..n {
                let (f, used) = decode_frame_prefix(rest).map_err(|e: DecodeError| {
                    WireError::Protocol(format!("frame {i} of capture batch: {e}"))
                })?;
                frames.push(f);
                rest = &rest[used..];
            }
            if !rest.is_empty() {
                return Err(WireError::Protocol(format!("{} bytes after last frame", rest.len())));
            }
            Ok(WireMessage::CaptureBatch(CaptureBatch {
                ap_id: mac_at(p, 0),
                trigger_quantum: u64_at(p, 6),
                start_us: u64_at(p, 14),
                frames,
            }))
        }
    }
}

/// Reads successive messages from a byte stream.
pub struct WireReader<R> {
    inner: R,
    buf: Vec<u8>,
    eof: bool,
}

#[derive(Debug, Error)]
pub enum ReadError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Wire(#[from] WireError),
}

impl<R: Read> WireReader<R> {
    pub fn new(inner: R) -> Self {
        WireReader { inner, buf: Vec::new(), eof: false }
    }

    /// Next message, `Ok(None)` at a clean end of stream. A stream that ends
    /// inside a message yields `NeedMoreData`.
    pub fn next_message(&mut self) -> Result<Option<WireMessage>, ReadError> {
        loop {
            if !self.buf.is_empty() {
                match parse_message(&self.buf) {
                    Ok((m, used)) => {
                        self.buf.drain(..used);
                        return Ok(Some(m));
                    }
                    Err(WireError::NeedMoreData { needed }) if !self.eof => self.fill(needed)?,
                    Err(e) => return Err(e.into()),
                }
            } else if self.eof {
                return Ok(None);
            } else {
                self.fill(HEADER_LEN)?;
            }
        }
    }

    fn fill(&mut self, at_least: usize) -> io::Result<()> {
        let start = self.buf.len();
        self.buf.resize(start + at_least.max(4096), 0);
        let n = loop {
            match self.inner.read(&mut self.buf[start..]) {
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                r => break r,
            }
        };
        let n = match n {
            Ok(n) => n,
            Err(e) => {
                self.buf.truncate(start);
                return Err(e);
            }
        };
        self.buf.truncate(start + n);
        if n == 0 {
            self.eof = true;
        }
        Ok(())
    }
}

impl<R: Read> Iterator for WireReader<R> {
    type Item = Result<WireMessage, ReadError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_message().transpose()
    }
}
