//! Event stream readers and writers.
//!
//! Two interchangeable formats:
//!
//! * **Text**: one event per line, `t_seconds x y p`, with `p` in `{0, 1}`
//!   mapping to negative/positive polarity. Timestamps are decimal seconds and
//!   are converted to integer microseconds (exact decimal parse, rounding at
//!   the 7th fractional digit). This format cannot carry polarity-free events.
//! * **Packed binary**: a 16-byte header (`EVT1` magic, little-endian u16
//!   width and height, 8 reserved bytes) followed by 13-byte little-endian
//!   records `[u64 t_us][u16 x][u16 y][i8 p]`, where `p = 0` means
//!   polarity-none.
//!
//! Both readers enforce non-decreasing timestamps and in-frame coordinates,
//! reporting the offending line (or record index) on failure.

use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::event::{Event, Polarity, SensorGeometry};

/// Magic bytes opening a packed binary stream.
pub const BINARY_MAGIC: [u8; 4] = *b"EVT1";
/// Total header length of the packed binary format.
pub const BINARY_HEADER_LEN: usize = 16;
/// Bytes per packed binary event record.
pub const BINARY_RECORD_LEN: usize = 13;

/// True if `first_bytes` starts with the packed binary magic.
pub fn is_binary_header(first_bytes: &[u8]) -> bool {
    first_bytes.len() >= 4 && first_bytes[..4] == BINARY_MAGIC
}

/// Parses decimal seconds into integer microseconds without going through
/// floating point. Rounds half-up at the 7th fractional digit.
fn parse_seconds_to_us(s: &str) -> Option<u64> {
    let (int_part, frac_part) = match s.split_once('.') {
        Some((i, f)) => (i, f),
        None => (s, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let secs: u64 = if int_part.is_empty() {
        0
    } else {
        int_part.parse().ok()?
    };
    if !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let mut micros: u64 = 0;
    for i in 0..6 {
        let d = frac_part.as_bytes().get(i).map(|b| (b - b'0') as u64).unwrap_or(0);
        micros = micros * 10 + d;
    }
    // Round on the first truncated digit.
    if let Some(b) = frac_part.as_bytes().get(6) {
        if *b >= b'5' {
            micros += 1;
        }
    }
    secs.checked_mul(1_000_000)?.checked_add(micros)
}

/// Formats integer microseconds as decimal seconds with 6 fractional digits.
pub fn format_us_as_seconds(t_us: u64) -> String {
    format!("{}.{:06}", t_us / 1_000_000, t_us % 1_000_000)
}

/// Reads a text event stream. The text format has no geometry header, so the
/// frame size must be supplied. Blank lines are skipped; `#` starts a comment.
pub fn read_text_events<R: BufRead>(mut r: R, geometry: SensorGeometry) -> Result<Vec<Event>> {
    let mut events = Vec::new();
    let mut line_buf = String::new();
    let mut line_no = 0usize;
    let mut offset = 0u64;
    let mut prev_t: Option<u64> = None;
    loop {
        line_buf.clear();
        let n = r.read_line(&mut line_buf)?;
        if n == 0 {
            break;
        }
        line_no += 1;
        let line_start = offset;
        offset += n as u64;
        let line = line_buf.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |msg: String| Error::Parse {
            line: line_no,
            offset: line_start,
            msg,
        };
        let mut fields = line.split_whitespace();
        let t_str = fields.next().ok_or_else(|| parse_err("missing timestamp".into()))?;
        let x_str = fields.next().ok_or_else(|| parse_err("missing x".into()))?;
        let y_str = fields.next().ok_or_else(|| parse_err("missing y".into()))?;
        let p_str = fields.next().ok_or_else(|| parse_err("missing polarity".into()))?;
        if fields.next().is_some() {
            return Err(parse_err(format!("expected 4 fields, got more: {line:?}")));
        }
        let t = parse_seconds_to_us(t_str)
            .ok_or_else(|| parse_err(format!("bad timestamp {t_str:?}")))?;
        let x: u16 = x_str
            .parse()
            .map_err(|_| parse_err(format!("bad x {x_str:?}")))?;
        let y: u16 = y_str
            .parse()
            .map_err(|_| parse_err(format!("bad y {y_str:?}")))?;
        let p = match p_str {
            "0" => Polarity::Neg,
            "1" => Polarity::Pos,
            other => return Err(parse_err(format!("bad polarity {other:?} (want 0 or 1)"))),
        };
        if let Some(prev) = prev_t {
            if t < prev {
                return Err(Error::NonMonotone {
                    line: line_no,
                    prev,
                    next: t,
                });
            }
        }
        prev_t = Some(t);
        let e = Event::new(x, y, t, p);
        geometry.check_event(&e).map_err(|err| parse_err(err.to_string()))?;
        events.push(e);
    }
    Ok(events)
}

/// Writes a text event stream. Polarity-free events cannot be represented and
/// produce an error; use the binary format for those.
pub fn write_text_events<W: Write>(mut w: W, events: &[Event]) -> Result<()> {
    for (i, e) in events.iter().enumerate() {
        let p = match e.p {
            Polarity::Pos => 1,
            Polarity::Neg => 0,
            Polarity::None => {
                return Err(Error::Invalid(format!(
                    "event {i}: polarity-free events cannot be written as text"
                )))
            }
        };
        writeln!(w, "{} {} {} {}", format_us_as_seconds(e.t), e.x, e.y, p)?;
    }
    Ok(())
}

/// Reads a packed binary stream. The header carries the geometry; a caller
/// supplied `geometry_override` wins when provided. Returns the events plus
/// the effective geometry.
pub fn read_binary_events<R: Read>(
    mut r: R,
    geometry_override: Option<SensorGeometry>,
) -> Result<(Vec<Event>, SensorGeometry)> {
    let mut header = [0u8; BINARY_HEADER_LEN];
    r.read_exact(&mut header).map_err(|_| Error::Parse {
        line: 0,
        offset: 0,
        msg: "truncated header (need 16 bytes)".into(),
    })?;
    if !is_binary_header(&header) {
        return Err(Error::Parse {
            line: 0,
            offset: 0,
            msg: format!("bad magic {:?}, expected \"EVT1\"", &header[..4]),
        });
    }
    let width = u16::from_le_bytes([header[4], header[5]]);
    let height = u16::from_le_bytes([header[6], header[7]]);
    let geometry = match geometry_override {
        Some(g) => g,
        None => SensorGeometry::new(width, height)?,
    };
    let mut events = Vec::new();
    let mut rec = [0u8; BINARY_RECORD_LEN];
    let mut record_no = 0usize;
    let mut prev_t: Option<u64> = None;
    loop {
        // Records are fixed-size; a partial read means a truncated stream.
        // Fill the record buffer manually: `read_exact` may consume the
        // partial tail on end-of-stream, which would hide the truncation.
        let mut filled = 0usize;
        while filled < BINARY_RECORD_LEN {
            match r.read(&mut rec[filled..]) {
                Ok(0) => break,
                Ok(n) => filled += n,
                Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(e.into()),
            }
        }
        if filled == 0 {
            break;
        }
        if filled < BINARY_RECORD_LEN {
            return Err(Error::Parse {
                line: record_no + 1,
                offset: (BINARY_HEADER_LEN + record_no * BINARY_RECORD_LEN) as u64,
                msg: format!(
                    "truncated record ({filled} of {BINARY_RECORD_LEN} bytes)"
                ),
            });
        }
        record_no += 1;
        let offset = (BINARY_HEADER_LEN + (record_no - 1) * BINARY_RECORD_LEN) as u64;
        let t = u64::from_le_bytes(rec[0..8].try_into().unwrap());
        let x = u16::from_le_bytes(rec[8..10].try_into().unwrap());
        let y = u16::from_le_bytes(rec[10..12].try_into().unwrap());
        let p = Polarity::from_i8(rec[12] as i8).map_err(|e| Error::Parse {
            line: record_no,
            offset,
            msg: e.to_string(),
        })?;
        if let Some(prev) = prev_t {
            if t < prev {
                return Err(Error::NonMonotone {
                    line: record_no,
                    prev,
                    next: t,
                });
            }
        }
        prev_t = Some(t);
        let e = Event::new(x, y, t, p);
        geometry.check_event(&e).map_err(|err| Error::Parse {
            line: record_no,
            offset,
            msg: err.to_string(),
        })?;
        events.push(e);
    }
    Ok((events, geometry))
}

/// Writes a packed binary stream with its 16-byte header.
pub fn write_binary_events<W: Write>(
    mut w: W,
    geometry: SensorGeometry,
    events: &[Event],
) -> Result<()> {
    let mut header = [0u8; BINARY_HEADER_LEN];
    header[..4].copy_from_slice(&BINARY_MAGIC);
    header[4..6].copy_from_slice(&geometry.width().to_le_bytes());
    header[6..8].copy_from_slice(&geometry.height().to_le_bytes());
    w.write_all(&header)?;
    let mut rec = [0u8; BINARY_RECORD_LEN];
    for e in events {
        rec[0..8].copy_from_slice(&e.t.to_le_bytes());
        rec[8..10].copy_from_slice(&e.x.to_le_bytes());
        rec[10..12].copy_from_slice(&e.y.to_le_bytes());
        rec[12] = e.p.as_i8() as u8;
        w.write_all(&rec)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn geom() -> SensorGeometry {
        SensorGeometry::new(240, 180).unwrap()
    }

    #[test]
    fn parses_dataset_style_line() {
        let events = read_text_events("0.003811000 96 133 0\n".as_bytes(), geom()).unwrap();
        assert_eq!(
            events,
            vec![Event::new(96, 133, 3811, Polarity::Neg)]
        );
    }

    #[test]
    fn seconds_parse_is_exact() {
        assert_eq!(parse_seconds_to_us("0.000001"), Some(1));
        assert_eq!(parse_seconds_to_us("1"), Some(1_000_000));
        assert_eq!(parse_seconds_to_us("1.5"), Some(1_500_000));
        assert_eq!(parse_seconds_to_us("0.706715000"), Some(706_715));
        // 7th digit rounds.
        assert_eq!(parse_seconds_to_us("0.00000049"), Some(0));
        assert_eq!(parse_seconds_to_us("0.00000050"), Some(1));
        assert_eq!(parse_seconds_to_us("abc"), None);
        assert_eq!(parse_seconds_to_us("1.2e3"), None);
    }

    #[test]
    fn malformed_line_names_location() {
        let err = read_text_events("0.1 5 5 1\n0.2 nope 5 1\n".as_bytes(), geom()).unwrap_err();
        match err {
            Error::Parse { line, offset, .. } => {
                assert_eq!(line, 2);
                assert_eq!(offset, 10);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn decreasing_timestamp_names_both_values() {
        let err = read_text_events("0.2 5 5 1\n0.1 5 5 1\n".as_bytes(), geom()).unwrap_err();
        match err {
            Error::NonMonotone { line, prev, next } => {
                assert_eq!(line, 2);
                assert_eq!(prev, 200_000);
                assert_eq!(next, 100_000);
            }
            other => panic!("expected non-monotone error, got {other:?}"),
        }
        assert!(err.to_string().starts_with("non-monotone timestamp at line 2"));
    }

    #[test]
    fn equal_timestamps_are_allowed() {
        let events = read_text_events("0.1 5 5 1\n0.1 6 5 0\n".as_bytes(), geom()).unwrap();
        assert_eq!(events.len(), 2);
    }

    #[test]
    fn out_of_frame_text_event_is_error() {
        let err = read_text_events("0.1 240 5 1\n".as_bytes(), geom()).unwrap_err();
        assert!(err.to_string().contains("outside 240x180"));
    }

    #[test]
    fn empty_input_is_empty_stream() {
        assert!(read_text_events("".as_bytes(), geom()).unwrap().is_empty());
        let mut buf = Vec::new();
        write_binary_events(&mut buf, geom(), &[]).unwrap();
        let (events, g) = read_binary_events(buf.as_slice(), None).unwrap();
        assert!(events.is_empty());
        assert_eq!(g, geom());
    }

    #[test]
    fn binary_header_carries_geometry() {
        let mut buf = Vec::new();
        let events = vec![Event::new(10, 20, 30, Polarity::None)];
        write_binary_events(&mut buf, geom(), &events).unwrap();
        assert_eq!(buf.len(), BINARY_HEADER_LEN + BINARY_RECORD_LEN);
        assert!(is_binary_header(&buf));
        let (read, g) = read_binary_events(buf.as_slice(), None).unwrap();
        assert_eq!(read, events);
        assert_eq!(g, geom());
    }

    #[test]
    fn binary_rejects_bad_magic_and_truncation() {
        let err = read_binary_events(&b"NOPE"[..], None).unwrap_err();
        assert!(err.to_string().contains("truncated header") || err.to_string().contains("magic"));

        let mut buf = Vec::new();
        write_binary_events(&mut buf, geom(), &[Event::new(1, 2, 3, Polarity::Pos)]).unwrap();
        buf.pop();
        let err = read_binary_events(buf.as_slice(), None).unwrap_err();
        assert!(err.to_string().contains("truncated record"));
    }

    #[test]
    fn binary_non_monotone_names_record() {
        let mut buf = Vec::new();
        let e1 = Event::new(1, 2, 300, Polarity::Pos);
        let e2 = Event::new(1, 2, 200, Polarity::Pos);
        // Write records manually to bypass any writer-side ordering.
        write_binary_events(&mut buf, geom(), &[e1, e2]).unwrap();
        let err = read_binary_events(buf.as_slice(), None).unwrap_err();
        match err {
            Error::NonMonotone { line, prev, next } => {
                assert_eq!((line, prev, next), (2, 300, 200));
            }
            other => panic!("expected non-monotone error, got {other:?}"),
        }
    }

    #[test]
    fn text_cannot_carry_polarity_free_events() {
        let mut buf = Vec::new();
        let err = write_text_events(&mut buf, &[Event::new(1, 2, 3, Polarity::None)]).unwrap_err();
        assert!(err.to_string().contains("polarity-free"));
    }

    proptest! {
        /// write ∘ read is the identity for both formats.
        #[test]
        fn round_trip_identity(raw in proptest::collection::vec(
            (0u16..240, 0u16..180, 0u64..5_000_000u64, 0u8..3), 0..200)) {
            let mut sorted = raw;
            sorted.sort_by_key(|r| r.2);
            let with_p: Vec<Event> = sorted.iter().map(|&(x, y, t, p)| Event::new(x, y, t, match p {
                0 => Polarity::Neg,
                1 => Polarity::Pos,
                _ => Polarity::None,
            })).collect();
            // Binary round trip (all polarities).
            let mut bin = Vec::new();
            write_binary_events(&mut bin, geom(), &with_p).unwrap();
            let (back, g) = read_binary_events(bin.as_slice(), None).unwrap();
            prop_assert_eq!(&back, &with_p);
            prop_assert_eq!(g, geom());
            // Text round trip (signed polarities only).
            let signed: Vec<Event> = with_p.iter().copied().map(|mut e| {
                if e.p == Polarity::None { e.p = Polarity::Pos; }
                e
            }).collect();
            let mut txt = Vec::new();
            write_text_events(&mut txt, &signed).unwrap();
            let back = read_text_events(txt.as_slice(), geom()).unwrap();
            prop_assert_eq!(back, signed);
        }
    }
}
