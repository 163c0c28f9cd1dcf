//! Multi-lane container and round-robin lane scheduling.
//!
//! Layout (little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "RASC"
//! 4       1     version = 1
//! 5       1     prob_bits n
//! 6       1     lane_count (1..=64)
//! 7       1     table_mode (0 = embedded static, 1 = external adaptive)
//! 8       2     alphabet_size
//! 10      8     symbol_count
//! 18      2*A   embedded table only: f(x) - 1 per symbol, u16
//! ..      4*K   payload length per lane, u32
//! ..            lane payloads in lane order
//! ```
//!
//! Frequencies are stored minus one so that `f = 2^16` fits at `n = 16`.
//!
//! Lane `i mod K` carries global symbol `i`. The round-robin assignment stands
//! in for bus arbitration between lanes and has no effect on decoded output.

use crate::error::{Error, Result};
use crate::probtab::{check_prob_bits, QuantizedModel};

pub const CONTAINER_MAGIC: [u8; 4] = *b"RASC";
pub const CONTAINER_VERSION: u8 = 1;
pub const MAX_LANES: usize = 64;
/// Fixed part of the header, before the optional table.
pub const FIXED_HEADER_LEN: usize = 18;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableMode {
    EmbeddedStatic,
    ExternalAdaptive,
}

impl TableMode {
    fn to_byte(self) -> u8 {
        match self {
            TableMode::EmbeddedStatic => 0,
            TableMode::ExternalAdaptive => 1,
        }
    }

    fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(TableMode::EmbeddedStatic),
            1 => Ok(TableMode::ExternalAdaptive),
            other => Err(Error::UnsupportedFormat(format!("table mode {other}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContainerHeader {
    pub prob_bits: u32,
    pub lane_count: usize,
    pub alphabet_size: usize,
    pub symbol_count: u64,
    /// Present exactly when the table mode is embedded static.
    pub table: Option<QuantizedModel>,
    pub payload_lens: Vec<u32>,
}

impl ContainerHeader {
    pub fn table_mode(&self) -> TableMode {
        if self.table.is_some() {
            TableMode::EmbeddedStatic
        } else {
            TableMode::ExternalAdaptive
        }
    }

    /// Serialized header size, including lane lengths.
    pub fn encoded_len(&self) -> usize {
        let table = if self.table.is_some() {
            2 * self.alphabet_size
        } else {
            0
        };
        FIXED_HEADER_LEN + table + 4 * self.lane_count
    }
}

/// Serializes a header and lane payloads. `header.payload_lens` is filled in
/// from `payloads`.
pub fn write_container(header: &ContainerHeader, payloads: &[Vec<u8>]) -> Result<Vec<u8>> {
    let lanes = header.lane_count;
    if !(1..=MAX_LANES).contains(&lanes) || payloads.len() != lanes {
        return Err(Error::LaneCountOutOfRange(if payloads.len() != lanes {
            payloads.len()
        } else {
            lanes
        }));
    }
    check_prob_bits(header.prob_bits)?;
    let alphabet = u16::try_from(header.alphabet_size)
        .ok()
        .filter(|&a| a > 0)
        .ok_or_else(|| {
            Error::TableInvariantViolation(format!(
                "alphabet size {} does not fit the 16-bit field",
                header.alphabet_size
            ))
        })?;
    if let Some(table) = &header.table {
        let consistent = table.alphabet_size() == header.alphabet_size
            && table.prob_bits() == header.prob_bits
            && QuantizedModel::from_frequencies(table.freq().to_vec(), table.prob_bits()).is_ok();
        if !consistent {
            return Err(Error::TableInvariantViolation(
                "embedded table does not match header".into(),
            ));
        }
    }
    let mut out =
        Vec::with_capacity(header.encoded_len() + payloads.iter().map(Vec::len).sum::<usize>());
    out.extend_from_slice(&CONTAINER_MAGIC);
    out.push(CONTAINER_VERSION);
    out.push(header.prob_bits as u8);
    out.push(lanes as u8);
    out.push(header.table_mode().to_byte());
    out.extend_from_slice(&alphabet.to_le_bytes());
    out.extend_from_slice(&header.symbol_count.to_le_bytes());
    if let Some(table) = &header.table {
        for &f in table.freq() {
            out.extend_from_slice(&((f - 1) as u16).to_le_bytes());
        }
    }
    for p in payloads {
        let len = u32::try_from(p.len()).map_err(|_| {
            Error::UnsupportedFormat(format!("lane payload of {} bytes exceeds 4 GiB", p.len()))
        })?;
        out.extend_from_slice(&len.to_le_bytes());
    }
    for p in payloads {
        out.extend_from_slice(p);
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| {
            Error::TruncatedStream(format!("{what} at offset {} runs past end", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

/// Parses and validates a container, returning the header and per-lane payloads.
pub fn parse_container(bytes: &[u8]) -> Result<(ContainerHeader, Vec<&[u8]>)> {
    let mut r = Reader { bytes, pos: 0 };
    let magic: [u8; 4] = r.take(4, "magic")?.try_into().unwrap();
    if magic != CONTAINER_MAGIC {
        return Err(Error::BadMagic(magic));
    }
    let version = r.u8("version")?;
    if version != CONTAINER_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let prob_bits = u32::from(r.u8("prob_bits")?);
    check_prob_bits(prob_bits)?;
    let lane_count = usize::from(r.u8("lane_count")?);
    if !(1..=MAX_LANES).contains(&lane_count) {
        return Err(Error::LaneCountOutOfRange(lane_count));
    }
    let mode = TableMode::from_byte(r.u8("table_mode")?)?;
    let alphabet_size = usize::from(r.u16("alphabet_size")?);
    if alphabet_size == 0 || alphabet_size as u64 > 1u64 << prob_bits {
        return Err(Error::TableInvariantViolation(format!(
            "alphabet of {alphabet_size} symbols with 2^{prob_bits} slots"
        )));
    }
    let symbol_count = r.u64("symbol_count")?;
    let table = match mode {
        TableMode::EmbeddedStatic => {
            let raw = r.take(2 * alphabet_size, "frequency table")?;
            let freq = raw
                .chunks_exact(2)
                .map(|b| u32::from(u16::from_le_bytes([b[0], b[1]])) + 1)
                .collect();
            Some(QuantizedModel::from_frequencies(freq, prob_bits)?)
        }
        TableMode::ExternalAdaptive => None,
    };
    let payload_lens = (0..lane_count)
        .map(|_| r.u32("payload length"))
        .collect::<Result<Vec<_>>>()?;
    let body: u64 = payload_lens.iter().map(|&l| u64::from(l)).sum();
    let expected = r.pos as u64 + body;
    if expected != bytes.len() as u64 {
        return Err(Error::TruncatedStream(format!(
            "header and payloads describe {expected} bytes, file has {}",
            bytes.len()
        )));
    }
    let mut payloads = Vec::with_capacity(lane_count);
    for &len in &payload_lens {
        payloads.push(r.take(len as usize, "payload")?);
    }
    Ok((
        ContainerHeader {
            prob_bits,
            lane_count,
            alphabet_size,
            symbol_count,
            table,
            payload_lens,
        },
        payloads,
    ))
}

/// Round-robin mapping between global symbol indices and `(lane, position)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LaneAssignment {
    symbol_count: u64,
    lane_count: usize,
}

impl LaneAssignment {
    pub fn new(symbol_count: u64, lane_count: usize) -> Result<Self> {
        if lane_count == 0 {
            return Err(Error::LaneCountOutOfRange(0));
        }
        Ok(LaneAssignment {
            symbol_count,
            lane_count,
        })
    }

    pub fn lane_count(&self) -> usize {
        self.lane_count
    }

    #[inline]
    pub fn lane_of(&self, index: u64) -> usize {
        (index % self.lane_count as u64) as usize
    }

    #[inline]
    pub fn position_of(&self, index: u64) -> u64 {
        index / self.lane_count as u64
    }

    #[inline]
    pub fn global_index(&self, lane: usize, position: u64) -> u64 {
        position * self.lane_count as u64 + lane as u64
    }

    /// Number of symbols carried by `lane`.
    pub fn lane_len(&self, lane: usize) -> u64 {
        let k = self.lane_count as u64;
        self.symbol_count / k + u64::from((lane as u64) < self.symbol_count % k)
    }

    pub fn lane_sizes(&self) -> Vec<u64> {
        (0..self.lane_count).map(|l| self.lane_len(l)).collect()
    }
}

pub fn schedule_lanes(symbol_count: u64, lane_count: usize) -> Result<LaneAssignment> {
    LaneAssignment::new(symbol_count, lane_count)
}
