//! Packet-pair streams: file formats, validity filtering and anonymization.
//!
//! Two on-disk formats are supported.
//!
//! * Binary (`HSTM`): the 4 magic bytes `HSTM`, a little-endian `u32`
//!   version (currently 1), then back-to-back records of little-endian
//!   `u64` source followed by `u64` destination. No padding, no checksum.
//! * CSV: one `src,dst` record per line with an optional third `count`
//!   column that repeats the pair `count` times. A leading
//!   `src,dst[,count]` header line is optional.
//!
//! Readers stream records one at a time and never hold the whole file.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::IdSet;

pub const MAGIC: [u8; 4] = *b"HSTM";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: u64 = 8;
const RECORD_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("not an HSTM stream (magic {found:?})")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported HSTM version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated record at byte offset {offset}")]
    Truncated { offset: u64 },
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("unknown stream format `{0}` (expected binary or csv)")]
    UnknownFormat(String),
}

/// One packet observed from `src` to `dst`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PacketRecord {
    pub src: u64,
    pub dst: u64,
}

impl PacketRecord {
    pub const fn new(src: u64, dst: u64) -> Self {
        Self { src, dst }
    }
}

impl From<(u64, u64)> for PacketRecord {
    fn from((src, dst): (u64, u64)) -> Self {
        Self { src, dst }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StreamFormat {
    Binary,
    Csv,
}

impl StreamFormat {
    /// `.csv` / `.txt` files are CSV, everything else binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") || ext.eq_ignore_ascii_case("txt") => {
                StreamFormat::Csv
            }
            _ => StreamFormat::Binary,
        }
    }
}

impl FromStr for StreamFormat {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "binary" | "bin" | "hstm" => Ok(StreamFormat::Binary),
            "csv" => Ok(StreamFormat::Csv),
            other => Err(IngestError::UnknownFormat(other.to_string())),
        }
    }
}

/// Opens `path` and streams its records in file order.
pub fn read_stream(path: &Path, format: StreamFormat) -> Result<RecordReader, IngestError> {
    let file = BufReader::with_capacity(1 << 16, File::open(path)?);
    RecordReader::new(Box::new(file), format)
}

/// Streaming record iterator over either format.
pub struct RecordReader {
    inner: ReaderKind,
}

enum ReaderKind {
    Binary(BinaryReader),
    Csv(CsvReader),
}

impl RecordReader {
    pub fn new(source: Box<dyn Read + Send>, format: StreamFormat) -> Result<Self, IngestError> {
        let inner = match format {
            StreamFormat::Binary => ReaderKind::Binary(BinaryReader::new(source)?),
            StreamFormat::Csv => ReaderKind::Csv(CsvReader::new(source)),
        };
        Ok(Self { inner })
    }
}

impl Iterator for RecordReader {
    type Item = Result<PacketRecord, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        match &mut self.inner {
            ReaderKind::Binary(r) => r.next(),
            ReaderKind::Csv(r) => r.next(),
        }
    }
}

struct BinaryReader {
    source: Box<dyn Read + Send>,
    offset: u64,
    done: bool,
}

impl BinaryReader {
    /// A zero-length file is accepted as an empty stream.
    fn new(mut source: Box<dyn Read + Send>) -> Result<Self, IngestError> {
        let mut header = [0u8; HEADER_LEN as usize];
        let got = read_full(&mut source, &mut header)?;
        if got == 0 {
            return Ok(Self {
                source,
                offset: 0,
                done: true,
            });
        }
        if got < 4 || header[..4] != MAGIC {
            let mut found = [0u8; 4];
            found[..got.min(4)].copy_from_slice(&header[..got.min(4)]);
            return Err(IngestError::BadMagic { found });
        }
        if got < header.len() {
            return Err(IngestError::Truncated { offset: 4 });
        }
        let version = u32::from_le_bytes(header[4..8].try_into().expect("4 bytes"));
        if version != FORMAT_VERSION {
            return Err(IngestError::UnsupportedVersion(version));
        }
        Ok(Self {
            source,
            offset: HEADER_LEN,
            done: false,
        })
    }

    fn next(&mut self) -> Option<Result<PacketRecord, IngestError>> {
        if self.done {
            return None;
        }
        let mut buf = [0u8; RECORD_LEN];
        match read_full(&mut self.source, &mut buf) {
            Ok(0) => {
                self.done = true;
                None
            }
            Ok(n) if n < RECORD_LEN => {
                self.done = true;
                Some(Err(IngestError::Truncated { offset: self.offset }))
            }
            Ok(_) => {
                self.offset += RECORD_LEN as u64;
                let src = u64::from_le_bytes(buf[..8].try_into().expect("8 bytes"));
                let dst = u64::from_le_bytes(buf[8..].try_into().expect("8 bytes"));
                Some(Ok(PacketRecord { src, dst }))
            }
            Err(e) => {
                self.done = true;
                Some(Err(e.into()))
            }
        }
    }
}

/// Reads until `buf` is full or EOF, returning the byte count.
fn read_full(source: &mut dyn Read, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match source.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

struct CsvReader {
    reader: csv::Reader<Box<dyn Read + Send>>,
    record: csv::StringRecord,
    pending: Option<(PacketRecord, u64)>,
    first: bool,
    done: bool,
}

impl CsvReader {
    fn new(source: Box<dyn Read + Send>) -> Self {
        let reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(source);
        Self {
            reader,
            record: csv::StringRecord::new(),
            pending: None,
            first: true,
            done: false,
        }
    }

    fn next(&mut self) -> Option<Result<PacketRecord, IngestError>> {
        loop {
            if let Some((rec, left)) = &mut self.pending {
                let out = *rec;
                *left -= 1;
                if *left == 0 {
                    self.pending = None;
                }
                return Some(Ok(out));
            }
            if self.done {
                return None;
            }
            match self.reader.read_record(&mut self.record) {
                Ok(false) => {
                    self.done = true;
                    return None;
                }
                Ok(true) => {
                    let line = self.record.position().map_or(0, |p| p.line());
                    let first = std::mem::replace(&mut self.first, false);
                    if first && is_header(&self.record) {
                        continue;
                    }
                    match parse_csv_record(&self.record, line) {
                        Ok(Some(p)) => self.pending = Some(p),
                        Ok(None) => {}
                        Err(e) => {
                            self.done = true;
                            return Some(Err(e));
                        }
                    }
                }
                Err(e) => {
                    self.done = true;
                    let line = e.position().map_or(0, |p| p.line());
                    return Some(Err(IngestError::Malformed {
                        line,
                        message: e.to_string(),
                    }));
                }
            }
        }
    }
}

fn is_header(record: &csv::StringRecord) -> bool {
    record.get(0).is_some_and(|f| f.eq_ignore_ascii_case("src"))
}

/// `None` for blank lines and zero counts.
fn parse_csv_record(
    record: &csv::StringRecord,
    line: u64,
) -> Result<Option<(PacketRecord, u64)>, IngestError> {
    if record.iter().all(str::is_empty) {
        return Ok(None);
    }
    if record.len() < 2 || record.len() > 3 {
        return Err(IngestError::Malformed {
            line,
            message: format!("expected 2 or 3 fields, found {}", record.len()),
        });
    }
    let field = |i: usize, name: &str| -> Result<u64, IngestError> {
        record[i].parse::<u64>().map_err(|_| IngestError::Malformed {
            line,
            message: format!("invalid {name} `{}`", &record[i]),
        })
    };
    let src = field(0, "src")?;
    let dst = field(1, "dst")?;
    let count = if record.len() == 3 { field(2, "count")? } else { 1 };
    Ok((count > 0).then_some((PacketRecord { src, dst }, count)))
}

/// Writes records in the binary `HSTM` format.
pub struct BinaryWriter<W: Write> {
    sink: W,
    written: u64,
}

impl<W: Write> BinaryWriter<W> {
    pub fn new(mut sink: W) -> io::Result<Self> {
        sink.write_all(&MAGIC)?;
        sink.write_all(&FORMAT_VERSION.to_le_bytes())?;
        Ok(Self { sink, written: 0 })
    }

    pub fn write(&mut self, record: PacketRecord) -> io::Result<()> {
        let mut buf = [0u8; RECORD_LEN];
        buf[..8].copy_from_slice(&record.src.to_le_bytes());
        buf[8..].copy_from_slice(&record.dst.to_le_bytes());
        self.written += 1;
        self.sink.write_all(&buf)
    }

    pub fn written(&self) -> u64 {
        self.written
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.sink.flush()?;
        Ok(self.sink)
    }
}

/// Writes a complete binary stream file.
pub fn write_binary<I>(path: &Path, records: I) -> io::Result<u64>
where
    I: IntoIterator<Item = PacketRecord>,
{
    let mut writer = BinaryWriter::new(BufWriter::new(File::create(path)?))?;
    for r in records {
        writer.write(r)?;
    }
    let n = writer.written();
    writer.finish()?;
    Ok(n)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("allow and deny sets overlap for {0}")]
pub struct FilterConflict(pub &'static str);

/// Allow/deny rule for one endpoint. An absent allow set admits everything.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdFilter {
    allow: Option<IdSet>,
    deny: IdSet,
}

impl IdFilter {
    pub fn new(allow: Option<IdSet>, deny: IdSet) -> Self {
        Self { allow, deny }
    }

    pub fn accepts(&self, id: u64) -> bool {
        self.allow.as_ref().is_none_or(|a| a.contains(id)) && !self.deny.contains(id)
    }

    fn conflicting(&self) -> bool {
        self.allow.as_ref().is_some_and(|a| a.intersects(&self.deny))
    }

    pub fn is_identity(&self) -> bool {
        self.allow.is_none() && self.deny.is_empty()
    }
}

/// Decides which packets are valid for an analysis.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityFilter {
    sources: IdFilter,
    destinations: IdFilter,
}

impl ValidityFilter {
    pub fn new(sources: IdFilter, destinations: IdFilter) -> Result<Self, FilterConflict> {
        if sources.conflicting() {
            return Err(FilterConflict("sources"));
        }
        if destinations.conflicting() {
            return Err(FilterConflict("destinations"));
        }
        Ok(Self {
            sources,
            destinations,
        })
    }

    pub fn accepts(&self, record: &PacketRecord) -> bool {
        self.sources.accepts(record.src) && self.destinations.accepts(record.dst)
    }

    pub fn is_identity(&self) -> bool {
        self.sources.is_identity() && self.destinations.is_identity()
    }
}

/// Order-preserving subsequence of `records` accepted by `filter`.
pub fn filter_valid<'a, I>(records: I, filter: &'a ValidityFilter) -> impl Iterator<Item = PacketRecord> + 'a
where
    I: IntoIterator<Item = PacketRecord>,
    I::IntoIter: 'a,
{
    records.into_iter().filter(move |r| filter.accepts(r))
}

const FEISTEL_ROUNDS: usize = 4;

/// Keyed permutation of the 64-bit ID space.
///
/// A balanced Feistel network over the two 32-bit halves; any round function
/// yields a bijection, so anonymized streams keep their exact degree
/// structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Anonymizer {
    round_keys: [u64; FEISTEL_ROUNDS],
}

impl Anonymizer {
    pub fn new(key: u128) -> Self {
        let mut state = (key as u64) ^ (key >> 64) as u64 ^ 0x6a09_e667_f3bc_c908;
        let mut round_keys = [0u64; FEISTEL_ROUNDS];
        for (i, k) in round_keys.iter_mut().enumerate() {
            // Alternate key halves so both influence every round.
            let half = if i % 2 == 0 { key as u64 } else { (key >> 64) as u64 };
            *k = splitmix64(&mut state) ^ half;
        }
        Self { round_keys }
    }

    /// Parses a key of up to 32 hex digits (optional `0x` prefix).
    pub fn from_hex(text: &str) -> Option<Self> {
        let digits = text.strip_prefix("0x").unwrap_or(text);
        if digits.is_empty() || digits.len() > 32 {
            return None;
        }
        u128::from_str_radix(digits, 16).ok().map(Self::new)
    }

    pub fn permute(&self, id: u64) -> u64 {
        let (mut left, mut right) = ((id >> 32) as u32, id as u32);
        for &k in &self.round_keys {
            let next = left ^ round(right, k);
            left = right;
            right = next;
        }
        (u64::from(left) << 32) | u64::from(right)
    }

    pub fn invert(&self, id: u64) -> u64 {
        let (mut left, mut right) = ((id >> 32) as u32, id as u32);
        for &k in self.round_keys.iter().rev() {
            let prev = right ^ round(left, k);
            right = left;
            left = prev;
        }
        (u64::from(left) << 32) | u64::from(right)
    }

    pub fn apply(&self, record: PacketRecord) -> PacketRecord {
        PacketRecord {
            src: self.permute(record.src),
            dst: self.permute(record.dst),
        }
    }
}

/// Applies `anonymizer` to the source and destination of every record.
pub fn anonymize<'a, I>(records: I, anonymizer: &'a Anonymizer) -> impl Iterator<Item = PacketRecord> + 'a
where
    I: IntoIterator<Item = PacketRecord>,
    I::IntoIter: 'a,
{
    records.into_iter().map(move |r| anonymizer.apply(r))
}

fn round(half: u32, key: u64) -> u32 {
    let mut z = u64::from(half) ^ key;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    (z ^ (z >> 31)) as u32
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
