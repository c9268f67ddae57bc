//! Frame records and their binary/CSV encodings.
//!
//! A [`Frame`] is one management or EAPOL frame as seen on the air, reduced to
//! the fields the detectors care about, plus the ground-truth [`AttackLabel`]
//! that the generator attached to it.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Maximum SSID length in bytes.
pub const MAX_SSID_LEN: usize = 32;

/// Size of an encoded frame with an empty SSID.
pub const FIXED_RECORD_LEN: usize = 8 + 8 + 1 + 18 + 2 + 1 + 2 + 1 + 1 + 2 + 1;

/// Column order of the frame CSV schema.
pub const CSV_HEADER: [&str; 13] = [
    "frame_number",
    "timestamp_us",
    "kind",
    "src",
    "dst",
    "bssid",
    "ssid",
    "suite",
    "beacon_interval_tu",
    "eapol_msg",
    "retry",
    "reason_code",
    "label",
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodingError {
    #[error("ssid is {0} bytes, limit is {MAX_SSID_LEN}")]
    SsidTooLong(usize),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("input truncated at offset {offset}")]
    Truncated { offset: usize },
    #[error("invalid value {value} for field `{field}`")]
    InvalidField { field: &'static str, value: u64 },
    #[error("ssid is not valid utf-8")]
    SsidUtf8,
}

impl DecodeError {
    /// Name of the offending field, if the error is field-specific.
    pub fn field(&self) -> Option<&'static str> {
        match self {
            DecodeError::InvalidField { field, .. } => Some(field),
            DecodeError::SsidUtf8 => Some("ssid"),
            DecodeError::Truncated { .. } => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("csv error at line {line}, column {column}: {message}")]
pub struct CsvError {
    pub line: u64,
    /// 1-based column; 0 when the problem is the row shape itself.
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid mac address `{0}`")]
pub struct MacParseError(pub String);

/// A 48-bit IEEE MAC address.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MacAddr(pub [u8; 6]);

impl MacAddr {
    pub const ZERO: MacAddr = MacAddr([0; 6]);
    pub const BROADCAST: MacAddr = MacAddr([0xff; 6]);

    pub const fn new(octets: [u8; 6]) -> Self {
        MacAddr(octets)
    }

    pub fn octets(&self) -> [u8; 6] {
        self.0
    }

    pub fn is_broadcast(&self) -> bool {
        *self == Self::BROADCAST
    }
}

impl fmt::Display for MacAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let o = self.0;
        write!(
            f,
            "{:02x}:{:02x}:{:02x}:{:02x}:{:02x}:{:02x}",
            o[0], o[1], o[2], o[3], o[4], o[5]
        )
    }
}

impl fmt::Debug for MacAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for MacAddr {
    type Err = MacParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || MacParseError(s.to_string());
        let mut octets = [0u8; 6];
        let mut parts = s.split(':');
        for octet in octets.iter_mut() {
            let part = parts.next().ok_or_else(err)?;
            if part.len() != 2 {
                return Err(err());
            }
            *octet = u8::from_str_radix(part, 16).map_err(|_| err())?;
        }
        if parts.next().is_some() {
            return Err(err());
        }
        Ok(MacAddr(octets))
    }
}

macro_rules! coded_enum {
    (
        $(#[$meta:meta])*
        pub enum $name:ident { $($variant:ident = $code:expr),+ $(,)? }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        #[repr(u8)]
        pub enum $name { $($variant = $code),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn code(self) -> u8 {
                self as u8
            }

            pub fn from_code(code: u8) -> Option<Self> {
                match code {
                    $($code => Some($name::$variant),)+
                    _ => None,
                }
            }

            pub fn name(self) -> &'static str {
                match self {
                    $($name::$variant => stringify!($variant),)+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $(stringify!($variant) => Ok($name::$variant),)+
                    _ => Err(format!("unknown {} `{}`", stringify!($name), s)),
                }
            }
        }
    };
}

coded_enum! {
    /// Frame subtype. Codes are part of the on-disk format and never change.
    pub enum FrameKind {
        Beacon = 0,
        ProbeResponse = 1,
        Authentication = 2,
        Deauthentication = 3,
        AssociationRequest = 4,
        AssociationResponse = 5,
        Disassociation = 6,
        SaeCommit = 7,
        SaeConfirm = 8,
        Eapol = 9,
    }
}

coded_enum! {
    /// Advertised security suite. Ordered weakest to strongest.
    pub enum SecuritySuite {
        Open = 0,
        Wpa2Psk = 1,
        Wpa3Sae = 2,
    }
}

coded_enum! {
    /// Ground-truth class of a frame.
    pub enum AttackLabel {
        Normal = 0,
        Deauth = 1,
        RogueAp = 2,
        EvilTwin = 3,
        Krack = 4,
        BeaconFlood = 5,
    }
}

impl FrameKind {
    /// Kinds that advertise a beacon interval.
    pub fn carries_beacon_interval(self) -> bool {
        matches!(self, FrameKind::Beacon | FrameKind::ProbeResponse)
    }

    pub fn carries_reason_code(self) -> bool {
        matches!(self, FrameKind::Deauthentication | FrameKind::Disassociation)
    }
}

impl AttackLabel {
    pub const COUNT: usize = 6;

    pub fn is_attack(self) -> bool {
        self != AttackLabel::Normal
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        u8::try_from(index).ok().and_then(Self::from_code)
    }
}

/// One captured frame with its ground-truth label.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    pub frame_number: u64,
    pub timestamp_us: u64,
    pub kind: FrameKind,
    pub src: MacAddr,
    pub dst: MacAddr,
    pub bssid: MacAddr,
    pub ssid: String,
    pub suite: SecuritySuite,
    pub beacon_interval_tu: u16,
    pub eapol_msg: u8,
    pub retry: bool,
    pub reason_code: u16,
    pub label: AttackLabel,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameInvariantError {
    #[error("eapol_msg must be 1..=4 for Eapol frames and 0 otherwise")]
    EapolMsg,
    #[error("beacon_interval_tu must be set exactly on Beacon/ProbeResponse frames")]
    BeaconInterval,
    #[error("reason_code only allowed on Deauthentication/Disassociation frames")]
    ReasonCode,
    #[error("ssid longer than {MAX_SSID_LEN} bytes")]
    SsidTooLong,
}

impl Frame {
    /// A frame of `kind` with every other field zeroed.
    pub fn blank(kind: FrameKind) -> Self {
        Frame {
            frame_number: 0,
            timestamp_us: 0,
            kind,
            src: MacAddr::ZERO,
            dst: MacAddr::ZERO,
            bssid: MacAddr::ZERO,
            ssid: String::new(),
            suite: SecuritySuite::Open,
            beacon_interval_tu: 0,
            eapol_msg: 0,
            retry: false,
            reason_code: 0,
            label: AttackLabel::Normal,
        }
    }

    /// Checks the per-frame field invariants.
    pub fn validate(&self) -> Result<(), FrameInvariantError> {
        let is_eapol = self.kind == FrameKind::Eapol;
        if is_eapol != (1..=4).contains(&self.eapol_msg) || (!is_eapol && self.eapol_msg != 0) {
            return Err(FrameInvariantError::EapolMsg);
        }
        if self.kind.carries_beacon_interval() != (self.beacon_interval_tu > 0) {
            return Err(FrameInvariantError::BeaconInterval);
        }
        if !self.kind.carries_reason_code() && self.reason_code != 0 {
            return Err(FrameInvariantError::ReasonCode);
        }
        if self.ssid.len() > MAX_SSID_LEN {
            return Err(FrameInvariantError::SsidTooLong);
        }
        Ok(())
    }

    pub fn encoded_len(&self) -> usize {
        FIXED_RECORD_LEN + self.ssid.len()
    }
}

/// Appends the binary record for `f` to `out`.
pub fn encode_frame_into(f: &Frame, out: &mut Vec<u8>) -> Result<(), EncodingError> {
    let ssid = f.ssid.as_bytes();
    if ssid.len() > MAX_SSID_LEN {
        return Err(EncodingError::SsidTooLong(ssid.len()));
    }
    out.reserve(f.encoded_len());
    out.extend_from_slice(&f.frame_number.to_le_bytes());
    out.extend_from_slice(&f.timestamp_us.to_le_bytes());
    out.push(f.kind.code());
    out.extend_from_slice(&f.src.0);
    out.extend_from_slice(&f.dst.0);
    out.extend_from_slice(&f.bssid.0);
    out.extend_from_slice(&(ssid.len() as u16).to_le_bytes());
    out.extend_from_slice(ssid);
    out.push(f.suite.code());
    out.extend_from_slice(&f.beacon_interval_tu.to_le_bytes());
    out.push(f.eapol_msg);
    out.push(u8::from(f.retry));
    out.extend_from_slice(&f.reason_code.to_le_bytes());
    out.push(f.label.code());
    Ok(())
}

pub fn encode_frame(f: &Frame) -> Result<Vec<u8>, EncodingError> {
    let mut out = Vec::with_capacity(f.encoded_len());
    encode_frame_into(f, &mut out)?;
    Ok(out)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        let end = self.pos + n;
        if end > self.buf.len() {
            return Err(DecodeError::Truncated { offset: self.buf.len() });
        }
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, DecodeError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, DecodeError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn mac(&mut self) -> Result<MacAddr, DecodeError> {
        Ok(MacAddr(self.take(6)?.try_into().unwrap()))
    }
}

/// Decodes one record from the front of `b`, returning the frame and the
/// number of bytes consumed.
pub fn decode_frame_prefix(b: &[u8]) -> Result<(Frame, usize), DecodeError> {
    let mut c = Cursor { buf: b, pos: 0 };
    let frame_number = c.u64()?;
    let timestamp_us = c.u64()?;
    let kind_code = c.u8()?;
    let kind = FrameKind::from_code(kind_code).ok_or(DecodeError::InvalidField {
        field: "kind",
        value: kind_code.into(),
    })?;
    let src = c.mac()?;
    let dst = c.mac()?;
    let bssid = c.mac()?;
    let ssid_len = c.u16()? as usize;
    if ssid_len > MAX_SSID_LEN {
        return Err(DecodeError::InvalidField { field: "ssid_len", value: ssid_len as u64 });
    }
    let ssid = std::str::from_utf8(c.take(ssid_len)?)
        .map_err(|_| DecodeError::SsidUtf8)?
        .to_string();
    let suite_code = c.u8()?;
    let suite = SecuritySuite::from_code(suite_code).ok_or(DecodeError::InvalidField {
        field: "suite",
        value: suite_code.into(),
    })?;
    let beacon_interval_tu = c.u16()?;
    let eapol_msg = c.u8()?;
    if eapol_msg > 4 {
        return Err(DecodeError::InvalidField { field: "eapol_msg", value: eapol_msg.into() });
    }
    let retry = match c.u8()? {
        0 => false,
        1 => true,
        v => return Err(DecodeError::InvalidField { field: "retry", value: v.into() }),
    };
    let reason_code = c.u16()?;
    let label_code = c.u8()?;
    let label = AttackLabel::from_code(label_code).ok_or(DecodeError::InvalidField {
        field: "label",
        value: label_code.into(),
    })?;
    let frame = Frame {
        frame_number,
        timestamp_us,
        kind,
        src,
        dst,
        bssid,
        ssid,
        suite,
        beacon_interval_tu,
        eapol_msg,
        retry,
        reason_code,
        label,
    };
    Ok((frame, c.pos))
}

/// Decodes exactly one record; trailing bytes are an error.
pub fn decode_frame(b: &[u8]) -> Result<Frame, DecodeError> {
    let (frame, used) = decode_frame_prefix(b)?;
    if used != b.len() {
        return Err(DecodeError::InvalidField { field: "trailing", value: (b.len() - used) as u64 });
    }
    Ok(frame)
}

/// Encodes a sequence of frames back to back.
pub fn encode_stream(frames: &[Frame]) -> Result<Vec<u8>, EncodingError> {
    let mut out = Vec::with_capacity(frames.iter().map(Frame::encoded_len).sum());
    for f in frames {
        encode_frame_into(f, &mut out)?;
    }
    Ok(out)
}

pub fn decode_stream(mut b: &[u8]) -> Result<Vec<Frame>, DecodeError> {
    let mut frames = Vec::new();
    let mut offset = 0;
    while !b.is_empty() {
        let (f, used) = decode_frame_prefix(b).map_err(|e| match e {
            DecodeError::Truncated { offset: o } => DecodeError::Truncated { offset: offset + o },
            other => other,
        })?;
        frames.push(f);
        offset += used;
        b = &b[used..];
    }
    Ok(frames)
}

fn csv_fields(f: &Frame) -> [String; 13] {
    [
        f.frame_number.to_string(),
        f.timestamp_us.to_string(),
        f.kind.name().to_string(),
        f.src.to_string(),
        f.dst.to_string(),
        f.bssid.to_string(),
        f.ssid.clone(),
        f.suite.name().to_string(),
        f.beacon_interval_tu.to_string(),
        f.eapol_msg.to_string(),
        u8::from(f.retry).to_string(),
        f.reason_code.to_string(),
        f.label.name().to_string(),
    ]
}

/// Writes frames as CSV with the canonical header.
pub fn write_csv<W: std::io::Write>(out: W, frames: &[Frame]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for f in frames {
        w.write_record(csv_fields(f))?;
    }
    w.flush()?;
    Ok(())
}

/// Renders one frame as a CSV line (no trailing newline).
pub fn frame_to_csv_row(f: &Frame) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(csv_fields(f)).expect("writing to a Vec cannot fail");
    let mut bytes = w.into_inner().expect("flush to Vec");
    bytes.pop();
    String::from_utf8(bytes).expect("csv fields are utf-8")
}

fn parse_field<T: FromStr>(rec: &csv::StringRecord, line: u64, column: usize) -> Result<T, CsvError>
where
    T::Err: fmt::Display,
{
    let raw = rec.get(column).ok_or_else(|| CsvError {
        line,
        column: column + 1,
        message: "missing field".into(),
    })?;
    raw.parse::<T>().map_err(|e| CsvError {
        line,
        column: column + 1,
        message: format!("`{raw}`: {e}"),
    })
}

fn record_to_frame(rec: &csv::StringRecord, line: u64) -> Result<Frame, CsvError> {
    if rec.len() != CSV_HEADER.len() {
        return Err(CsvError {
            line,
            column: 0,
            message: format!("expected {} fields, found {}", CSV_HEADER.len(), rec.len()),
        });
    }
    let retry = match parse_field::<u8>(rec, line, 10)? {
        0 => false,
        1 => true,
        v => {
            return Err(CsvError { line, column: 11, message: format!("retry must be 0 or 1, got {v}") })
        }
    };
    let ssid: String = parse_field(rec, line, 6)?;
    if ssid.len() > MAX_SSID_LEN {
        return Err(CsvError { line, column: 7, message: "ssid longer than 32 bytes".into() });
    }
    Ok(Frame {
        frame_number: parse_field(rec, line, 0)?,
        timestamp_us: parse_field(rec, line, 1)?,
        kind: parse_field(rec, line, 2)?,
        src: parse_field(rec, line, 3)?,
        dst: parse_field(rec, line, 4)?,
        bssid: parse_field(rec, line, 5)?,
        ssid,
        suite: parse_field(rec, line, 7)?,
        beacon_interval_tu: parse_field(rec, line, 8)?,
        eapol_msg: parse_field(rec, line, 9)?,
        retry,
        reason_code: parse_field(rec, line, 11)?,
        label: parse_field(rec, line, 12)?,
    })
}

/// Parses a single CSV line produced by [`frame_to_csv_row`].
pub fn csv_row_to_frame(row: &str) -> Result<Frame, CsvError> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(row.as_bytes());
    let mut rec = csv::StringRecord::new();
    match r.read_record(&mut rec) {
        Ok(true) => record_to_frame(&rec, 1),
        Ok(false) => Err(CsvError { line: 1, column: 0, message: "empty row".into() }),
        Err(e) => Err(CsvError { line: 1, column: 0, message: e.to_string() }),
    }
}

/// Reads a CSV file with the canonical header. Line numbers in errors are
/// 1-based and count the header.
pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<Frame>, CsvError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(input);
    let header = r
        .headers()
        .map_err(|e| CsvError { line: 1, column: 0, message: e.to_string() })?
        .clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(CsvError { line: 1, column: 0, message: "unexpected header".into() });
    }
    let mut frames = Vec::new();
    let mut rec = csv::StringRecord::new();
    loop {
        match r.read_record(&mut rec) {
            Ok(true) => {
                let line = rec.position().map(|p| p.line()).unwrap_or(0);
                frames.push(record_to_frame(&rec, line)?);
            }
            Ok(false) => break,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                return Err(CsvError { line, column: 0, message: e.to_string() });
            }
        }
    }
    Ok(frames)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn arb_mac() -> impl Strategy<Value = MacAddr> {
        any::<[u8; 6]>().prop_map(MacAddr)
    }

    pub(crate) fn arb_frame() -> impl Strategy<Value = Frame> {
        (
            (any::<u64>(), any::<u64>(), 0u8..10, arb_mac(), arb_mac(), arb_mac()),
            ("[ -~]{0,32}", 0u8..3, any::<u16>(), 0u8..5, any::<bool>(), any::<u16>(), 0u8..6),
        )
            .prop_map(|((n, ts, k, src, dst, bssid), (ssid, s, bi, em, retry, rc, l))| Frame {
                frame_number: n,
                timestamp_us: ts,
                kind: FrameKind::from_code(k).unwrap(),
                src,
                dst,
                bssid,
                ssid,
                suite: SecuritySuite::from_code(s).unwrap(),
                beacon_interval_tu: bi,
                eapol_msg: em,
                retry,
                reason_code: rc,
                label: AttackLabel::from_code(l).unwrap(),
            })
    }

    #[test]
    fn mac_text_form() {
        let m: MacAddr = "aa:bb:cc:dd:ee:0f".parse().unwrap();
        assert_eq!(m.0, [0xaa, 0xbb, 0xcc, 0xdd, 0xee, 0x0f]);
        assert_eq!(m.to_string(), "aa:bb:cc:dd:ee:0f");
        assert_eq!("AA:BB:CC:DD:EE:0F".parse::<MacAddr>().unwrap().to_string(), "aa:bb:cc:dd:ee:0f");
        for bad in ["", "aa:bb", "aa:bb:cc:dd:ee:ff:00", "aa:bb:cc:dd:ee:f", "zz:bb:cc:dd:ee:ff"] {
            assert!(bad.parse::<MacAddr>().is_err(), "{bad}");
        }
    }

    #[test]
    fn stable_codes() {
        let kinds: Vec<(u8, &str)> = FrameKind::ALL.iter().map(|k| (k.code(), k.name())).collect();
        assert_eq!(
            kinds,
            vec![
                (0, "Beacon"),
                (1, "ProbeResponse"),
                (2, "Authentication"),
                (3, "Deauthentication"),
                (4, "AssociationRequest"),
                (5, "AssociationResponse"),
                (6, "Disassociation"),
                (7, "SaeCommit"),
                (8, "SaeConfirm"),
                (9, "Eapol"),
            ]
        );
        let labels: Vec<(u8, &str)> = AttackLabel::ALL.iter().map(|l| (l.code(), l.name())).collect();
        assert_eq!(
            labels,
            vec![(0, "Normal"), (1, "Deauth"), (2, "RogueAp"), (3, "EvilTwin"), (4, "Krack"), (5, "BeaconFlood")]
        );
        assert!(SecuritySuite::Open < SecuritySuite::Wpa2Psk);
        assert!(SecuritySuite::Wpa2Psk < SecuritySuite::Wpa3Sae);
    }

    #[test]
    fn zero_beacon_record() {
        let f = Frame::blank(FrameKind::Beacon);
        let b = encode_frame(&f).unwrap();
        assert_eq!(b.len(), FIXED_RECORD_LEN);
        assert_eq!(b.len(), 45);
        // Beacon's kind code is 0, so the whole record is zero.
        assert!(b.iter().all(|&x| x == 0));
        assert_eq!(decode_frame(&b).unwrap(), f);

        let p = encode_frame(&Frame::blank(FrameKind::ProbeResponse)).unwrap();
        assert_eq!(p[16], 1);
        assert_eq!(p.iter().filter(|&&x| x != 0).count(), 1);
    }

    #[test]
    fn golden_record() {
        let f = Frame {
            frame_number: 0x0102,
            timestamp_us: 7,
            kind: FrameKind::Eapol,
            src: MacAddr([1, 2, 3, 4, 5, 6]),
            dst: MacAddr([0xa; 6]),
            bssid: MacAddr([0xb; 6]),
            ssid: "ab".into(),
            suite: SecuritySuite::Wpa3Sae,
            beacon_interval_tu: 0x0304,
            eapol_msg: 3,
            retry: true,
            reason_code: 0x0506,
            label: AttackLabel::Krack,
        };
        let b = encode_frame(&f).unwrap();
        let mut expected = vec![0x02, 0x01, 0, 0, 0, 0, 0, 0, 7, 0, 0, 0, 0, 0, 0, 0, 9];
        expected.extend_from_slice(&[1, 2, 3, 4, 5, 6]);
        expected.extend_from_slice(&[0xa; 6]);
        expected.extend_from_slice(&[0xb; 6]);
        expected.extend_from_slice(&[2, 0, b'a', b'b', 2, 0x04, 0x03, 3, 1, 0x06, 0x05, 4]);
        assert_eq!(b, expected);
    }

    #[test]
    fn decode_errors() {
        assert_eq!(decode_frame(&[]), Err(DecodeError::Truncated { offset: 0 }));
        let mut b = encode_frame(&Frame::blank(FrameKind::Beacon)).unwrap();
        assert!(matches!(decode_frame(&b[..20]), Err(DecodeError::Truncated { .. })));
        b[16] = 0xff;
        let e = decode_frame(&b).unwrap_err();
        assert_eq!(e.field(), Some("kind"));
        b[16] = 0;
        *b.last_mut().unwrap() = 6;
        assert_eq!(decode_frame(&b).unwrap_err().field(), Some("label"));
    }

    #[test]
    fn ssid_limit() {
        let mut f = Frame::blank(FrameKind::Beacon);
        f.ssid = "x".repeat(33);
        assert_eq!(encode_frame(&f), Err(EncodingError::SsidTooLong(33)));
        f.ssid = "x".repeat(32);
        assert!(encode_frame(&f).is_ok());
    }

    #[test]
    fn csv_row_mapping() {
        let mut f = Frame::blank(FrameKind::Beacon);
        f.ssid = "corp, \"guest\"".into();
        f.beacon_interval_tu = 100;
        let row = frame_to_csv_row(&f);
        assert!(row.starts_with("0,0,Beacon,"), "{row}");
        assert_eq!(csv_row_to_frame(&row).unwrap(), f);

        let row = "5,10,Eapol,00:00:00:00:00:01,00:00:00:00:00:02,00:00:00:00:00:01,,Wpa2Psk,0,3,1,0,Krack";
        let g = csv_row_to_frame(row).unwrap();
        assert_eq!(g.label, AttackLabel::Krack);
        assert_eq!(g.eapol_msg, 3);
        assert!(g.retry);
    }

    #[test]
    fn csv_errors_report_position() {
        let row = "5,10,Eapol,00:00:00:00:00:01,nope,00:00:00:00:00:01,,Wpa2Psk,0,3,1,0,Krack";
        let e = csv_row_to_frame(row).unwrap_err();
        assert_eq!(e.column, 5);

        let mut file = CSV_HEADER.join(",");
        file.push('\n');
        file.push_str(&frame_to_csv_row(&Frame::blank(FrameKind::Beacon)));
        file.push_str("\n1,2,Bogus,00:00:00:00:00:01,00:00:00:00:00:02,00:00:00:00:00:01,,Open,0,0,0,0,Normal\n");
        let e = read_csv(file.as_bytes()).unwrap_err();
        assert_eq!((e.line, e.column), (3, 3));
        assert!(csv_row_to_frame("1,2,3").is_err());
    }

    #[test]
    fn validate_invariants() {
        let mut f = Frame::blank(FrameKind::Beacon);
        assert_eq!(f.validate(), Err(FrameInvariantError::BeaconInterval));
        f.beacon_interval_tu = 100;
        assert!(f.validate().is_ok());
        let mut e = Frame::blank(FrameKind::Eapol);
        assert_eq!(e.validate(), Err(FrameInvariantError::EapolMsg));
        e.eapol_msg = 4;
        assert!(e.validate().is_ok());
        let mut d = Frame::blank(FrameKind::Authentication);
        d.reason_code = 7;
        assert_eq!(d.validate(), Err(FrameInvariantError::ReasonCode));
    }

    proptest! {
        #[test]
        fn binary_round_trip(f in arb_frame()) {
            let b = encode_frame(&f).unwrap();
            prop_assert_eq!(b.len(), f.encoded_len());
            prop_assert_eq!(decode_frame(&b).unwrap(), f);
        }

        #[test]
        fn csv_round_trip(f in arb_frame()) {
            prop_assert_eq!(csv_row_to_frame(&frame_to_csv_row(&f)).unwrap(), f);
        }

        #[test]
        fn stream_round_trip(frames in proptest::collection::vec(arb_frame(), 0..20)) {
            let b = encode_stream(&frames).unwrap();
            prop_assert_eq!(decode_stream(&b).unwrap(), frames.clone());
            let mut text = Vec::new();
            write_csv(&mut text, &frames).unwrap();
            prop_assert_eq!(read_csv(text.as_slice()).unwrap(), frames);
        }
    }
}
