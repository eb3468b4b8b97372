//! Time-tag streams and their on-disk formats.
//!
//! Binary records are 9 bytes, little endian: `u8` channel followed by `u64`
//! timestamp in picoseconds, with the whole file sorted by timestamp. The CSV
//! form carries the same records as `channel,timestamp_ps` lines after a
//! header row.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const PS_PER_S: f64 = 1e12;
pub const RECORD_BYTES: usize = 9;

/// Seconds to integer picoseconds (rounded).
pub fn seconds_to_ps(s: f64) -> u64 {
    (s * PS_PER_S).round() as u64
}

/// Detection timestamps for one channel, in ascending order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TimeTagStream {
    channel: u8,
    tags: Vec<u64>,
}

impl TimeTagStream {
    /// Wraps `tags`, rejecting unsorted input.
    pub fn new(channel: u8, tags: Vec<u64>) -> Result<Self> {
        check_sorted(&tags)?;
        Ok(Self { channel, tags })
    }

    pub(crate) fn from_sorted(channel: u8, tags: Vec<u64>) -> Self {
        debug_assert!(tags.windows(2).all(|w| w[0] <= w[1]));
        Self { channel, tags }
    }

    pub fn empty(channel: u8) -> Self {
        Self {
            channel,
            tags: Vec::new(),
        }
    }

    pub fn channel(&self) -> u8 {
        self.channel
    }

    pub fn with_channel(mut self, channel: u8) -> Self {
        self.channel = channel;
        self
    }

    pub fn tags(&self) -> &[u64] {
        &self.tags
    }

    pub fn into_tags(self) -> Vec<u64> {
        self.tags
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.tags.windows(2).all(|w| w[0] < w[1])
    }

    /// Returns a copy with every tag moved later by `offset_ps`.
    pub fn shifted(&self, offset_ps: u64) -> Self {
        Self {
            channel: self.channel,
            tags: self.tags.iter().map(|t| t + offset_ps).collect(),
        }
    }

    /// Appends `other`, which must start no earlier than this stream ends.
    pub fn extend_from(&mut self, other: &TimeTagStream) -> Result<()> {
        if let (Some(&last), Some(&first)) = (self.tags.last(), other.tags.first()) {
            if first < last {
                return Err(Error::data("appended stream overlaps the existing tags"));
            }
        }
        self.tags.extend_from_slice(&other.tags);
        Ok(())
    }

    /// Index range of tags with `start <= t < end`.
    pub fn range_indices(&self, start: u64, end: u64) -> std::ops::Range<usize> {
        let lo = self.tags.partition_point(|&t| t < start);
        let hi = self.tags.partition_point(|&t| t < end);
        lo..hi
    }
}

impl AsRef<[u64]> for TimeTagStream {
    fn as_ref(&self) -> &[u64] {
        &self.tags
    }
}

pub(crate) fn check_sorted(tags: &[u64]) -> Result<()> {
    match tags.windows(2).position(|w| w[1] < w[0]) {
        Some(i) => Err(Error::data(format!(
            "time tags not sorted: tag {} ({} ps) follows {} ps",
            i + 1,
            tags[i + 1],
            tags[i]
        ))),
        None => Ok(()),
    }
}

/// Merges streams into timestamp order. Ties keep the order of `streams`.
fn merged_records(streams: &[&TimeTagStream]) -> Vec<(u8, u64)> {
    let mut out: Vec<(u8, u64)> = Vec::with_capacity(streams.iter().map(|s| s.len()).sum());
    for s in streams {
        out.extend(s.tags.iter().map(|&t| (s.channel, t)));
    }
    out.sort_by_key(|&(_, t)| t);
    out
}

pub fn write_binary(path: &Path, streams: &[&TimeTagStream]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for (ch, t) in merged_records(streams) {
        let mut rec = [0u8; RECORD_BYTES];
        rec[0] = ch;
        rec[1..].copy_from_slice(&t.to_le_bytes());
        w.write_all(&rec).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a binary tag file into per-channel streams.
pub fn read_binary(path: &Path) -> Result<BTreeMap<u8, TimeTagStream>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let len = file.metadata().map_err(|e| Error::io(path, e))?.len();
    if len % RECORD_BYTES as u64 != 0 {
        return Err(Error::Parse {
            path: path.to_owned(),
            offset: len - len % RECORD_BYTES as u64,
            msg: format!("trailing partial record ({} bytes)", len % RECORD_BYTES as u64),
        });
    }
    let mut r = BufReader::new(file);
    let mut rec = [0u8; RECORD_BYTES];
    let mut per_channel: BTreeMap<u8, Vec<u64>> = BTreeMap::new();
    let mut prev = 0u64;
    let mut offset = 0u64;
    while offset < len {
        r.read_exact(&mut rec).map_err(|e| Error::io(path, e))?;
        let t = u64::from_le_bytes(rec[1..].try_into().expect("8-byte slice"));
        if t < prev {
            return Err(Error::Parse {
                path: path.to_owned(),
                offset,
                msg: format!("timestamp {t} ps precedes previous record {prev} ps"),
            });
        }
        prev = t;
        per_channel.entry(rec[0]).or_default().push(t);
        offset += RECORD_BYTES as u64;
    }
    Ok(per_channel
        .into_iter()
        .map(|(ch, tags)| (ch, TimeTagStream::from_sorted(ch, tags)))
        .collect())
}

pub fn write_csv(path: &Path, streams: &[&TimeTagStream]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "channel,timestamp_ps").map_err(io)?;
    for (ch, t) in merged_records(streams) {
        writeln!(w, "{ch},{t}").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_csv(path: &Path) -> Result<BTreeMap<u8, TimeTagStream>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut per_channel: BTreeMap<u8, Vec<u64>> = BTreeMap::new();
    let mut offset = 0u64;
    let mut prev = 0u64;
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let here = offset;
        offset += line.len() as u64 + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || (lineno == 0 && trimmed.starts_with("channel")) {
            continue;
        }
        let bad = |msg: String| Error::Parse {
            path: path.to_owned(),
            offset: here,
            msg,
        };
        let (ch, t) = trimmed
            .split_once(',')
            .ok_or_else(|| bad(format!("expected `channel,timestamp_ps`, got `{trimmed}`")))?;
        let ch: u8 = ch.trim().parse().map_err(|e| bad(format!("channel: {e}")))?;
        let t: u64 = t.trim().parse().map_err(|e| bad(format!("timestamp: {e}")))?;
        if t < prev {
            return Err(bad(format!(
                "timestamp {t} ps precedes previous record {prev} ps"
            )));
        }
        prev = t;
        per_channel.entry(ch).or_default().push(t);
    }
    Ok(per_channel
        .into_iter()
        .map(|(ch, tags)| (ch, TimeTagStream::from_sorted(ch, tags)))
        .collect())
}

/// Reads either format, choosing by extension (`.csv` is text, anything else
/// binary).
pub fn read_any(path: &Path) -> Result<BTreeMap<u8, TimeTagStream>> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => read_csv(path),
        _ => read_binary(path),
    }
}
