//! Wire formats for event streams.
//!
//! Binary layout (little-endian), 20-byte header followed by 16-byte records:
//!
//! ```text
//! magic   4 x u8   45 56 54 30 ("EVT0")
//! version u16      1
//! width   u16
//! height  u16
//! reserved u16     written as 0, ignored on read
//! count   u64      number of records
//! record: t_us u64, x u16, y u16, p i8 (-1|+1), 3 zero pad bytes
//! ```
//!
//! Text layout: CSV with the exact header `t_us,x,y,p`, one event per line.
//! Geometry is not part of the text format and is supplied by the caller.

use crate::event::{Event, EventError, EventStream, Polarity};

pub const MAGIC: [u8; 4] = *b"EVT0";
pub const VERSION: u16 = 1;
pub const CSV_HEADER: &str = "t_us,x,y,p";

const HEADER_LEN: usize = 20;
const RECORD_LEN: usize = 16;

pub fn serialize_binary(stream: &EventStream) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + RECORD_LEN * stream.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&stream.width().to_le_bytes());
    out.extend_from_slice(&stream.height().to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    out.extend_from_slice(&(stream.len() as u64).to_le_bytes());
    for e in stream.events() {
        out.extend_from_slice(&e.t.to_le_bytes());
        out.extend_from_slice(&e.x.to_le_bytes());
        out.extend_from_slice(&e.y.to_le_bytes());
        out.push(e.polarity.sign() as u8);
        out.extend_from_slice(&[0u8; 3]);
    }
    out
}

/// Strict parse: any timestamp decrease is an error.
pub fn parse_binary(bytes: &[u8]) -> Result<EventStream, EventError> {
    let (width, height, events) = decode_binary(bytes)?;
    EventStream::new(width, height, events)
}

/// Lenient parse: events are stably sorted by timestamp; the second value
/// reports how many adjacent pairs were out of order.
pub fn parse_binary_lenient(bytes: &[u8]) -> Result<(EventStream, usize), EventError> {
    let (width, height, events) = decode_binary(bytes)?;
    EventStream::from_unordered(width, height, events)
}

fn decode_binary(bytes: &[u8]) -> Result<(u16, u16, Vec<Event>), EventError> {
    if bytes.len() >= 4 && bytes[0..4] != MAGIC {
        return Err(EventError::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(if bytes.len() < 4 {
            EventError::BadMagic
        } else {
            EventError::TruncatedRecord { expected: HEADER_LEN, actual: bytes.len() }
        });
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(EventError::UnsupportedVersion(version));
    }
    let width = u16::from_le_bytes([bytes[6], bytes[7]]);
    let height = u16::from_le_bytes([bytes[8], bytes[9]]);
    let count = u64::from_le_bytes(bytes[12..20].try_into().expect("8 header bytes"));
    let expected = (HEADER_LEN as u128) + (count as u128) * (RECORD_LEN as u128);
    if expected != bytes.len() as u128 {
        return Err(EventError::TruncatedRecord {
            expected: expected.min(usize::MAX as u128) as usize,
            actual: bytes.len(),
        });
    }
    let mut events = Vec::with_capacity(count as usize);
    for i in 0..count as usize {
        let r = &bytes[HEADER_LEN + i * RECORD_LEN..HEADER_LEN + (i + 1) * RECORD_LEN];
        let t = u64::from_le_bytes(r[0..8].try_into().expect("8 record bytes"));
        let x = u16::from_le_bytes([r[8], r[9]]);
        let y = u16::from_le_bytes([r[10], r[11]]);
        let sign = r[12] as i8;
        let polarity = Polarity::from_sign(i64::from(sign))
            .ok_or(EventError::BadPolarity { line: i + 1, value: i64::from(sign) })?;
        events.push(Event { t, x, y, polarity });
    }
    Ok((width, height, events))
}

pub fn serialize_csv(stream: &EventStream) -> String {
    let mut out = String::with_capacity(16 + stream.len() * 16);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for e in stream.events() {
        out.push_str(&format!("{},{},{},{}\n", e.t, e.x, e.y, e.polarity.sign()));
    }
    out
}

/// Strict parse of the CSV format; `width`/`height` supply the geometry the
/// text format does not carry.
pub fn parse_csv(text: &str, width: u16, height: u16) -> Result<EventStream, EventError> {
    let events = decode_csv(text)?;
    EventStream::new(width, height, events)
}

pub fn parse_csv_lenient(
    text: &str,
    width: u16,
    height: u16,
) -> Result<(EventStream, usize), EventError> {
    let events = decode_csv(text)?;
    EventStream::from_unordered(width, height, events)
}

fn decode_csv(text: &str) -> Result<Vec<Event>, EventError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header.trim() == CSV_HEADER => {}
        _ => return Err(EventError::MissingHeader),
    }
    let mut events = Vec::new();
    for (i, raw) in lines.enumerate() {
        let line = i + 2; // 1-based, after the header
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        let mut fields = row.split(',');
        let t = parse_field::<u64>(fields.next(), line, "t_us")?;
        let x = parse_field::<u16>(fields.next(), line, "x")?;
        let y = parse_field::<u16>(fields.next(), line, "y")?;
        let p = parse_field::<i64>(fields.next(), line, "p")?;
        if fields.next().is_some() {
            return Err(EventError::ParseError { line, msg: "expected 4 fields".into() });
        }
        let polarity =
            Polarity::from_sign(p).ok_or(EventError::BadPolarity { line, value: p })?;
        events.push(Event { t, x, y, polarity });
    }
    Ok(events)
}

fn parse_field<T: std::str::FromStr>(
    field: Option<&str>,
    line: usize,
    name: &str,
) -> Result<T, EventError> {
    let raw = field.ok_or_else(|| EventError::ParseError {
        line,
        msg: format!("missing field `{name}`"),
    })?;
    raw.trim().parse::<T>().map_err(|_| EventError::ParseError {
        line,
        msg: format!("bad value for `{name}`: `{}`", raw.trim()),
    })
}
