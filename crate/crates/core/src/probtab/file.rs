//! BF16 table file: per-position distributions for adaptive coding.
//!
//! ```text
//! magic "RASP" | version u8 = 1 | alphabet_size u16 | row_count u64 | rows
//! ```
//! All integers little-endian. Rows are `alphabet_size` BF16 values each,
//! row-major; row `k` is the distribution for global symbol position `k`.

use super::{Bf16, Bf16Table};
use crate::error::{Error, Result};

pub const TABLE_MAGIC: [u8; 4] = *b"RASP";
pub const TABLE_VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 2 + 8;

pub fn write_table_file(rows: &[Bf16Table]) -> Result<Vec<u8>> {
    let alphabet = rows.first().map_or(0, Bf16Table::alphabet_size);
    let alphabet_field = u16::try_from(alphabet)
        .map_err(|_| Error::UnsupportedFormat(format!("alphabet of {alphabet} symbols")))?;
    if let Some(r) = rows.iter().find(|r| r.alphabet_size() != alphabet) {
        return Err(Error::ModelMismatch(format!(
            "row {} has {} symbols, expected {alphabet}",
            r.context_id(),
            r.alphabet_size()
        )));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + rows.len() * alphabet * 2);
    out.extend_from_slice(&TABLE_MAGIC);
    out.push(TABLE_VERSION);
    out.extend_from_slice(&alphabet_field.to_le_bytes());
    out.extend_from_slice(&(rows.len() as u64).to_le_bytes());
    for row in rows {
        for p in row.probs() {
            out.extend_from_slice(&p.to_bits().to_le_bytes());
        }
    }
    Ok(out)
}

pub fn read_table_file(bytes: &[u8]) -> Result<Vec<Bf16Table>> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::TruncatedStream(format!(
            "table header needs {HEADER_LEN} bytes, got {}",
            bytes.len()
        )));
    }
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if magic != TABLE_MAGIC {
        return Err(Error::BadMagic(magic));
    }
    if bytes[4] != TABLE_VERSION {
        return Err(Error::UnsupportedVersion(bytes[4]));
    }
    let alphabet = usize::from(u16::from_le_bytes([bytes[5], bytes[6]]));
    let row_count = u64::from_le_bytes(bytes[7..15].try_into().unwrap());
    let body = &bytes[HEADER_LEN..];
    let expected = row_count
        .checked_mul(alphabet as u64 * 2)
        .filter(|&len| len == body.len() as u64)
        .ok_or_else(|| {
            Error::TruncatedStream(format!(
                "{row_count} rows of {alphabet} symbols do not match {} body bytes",
                body.len()
            ))
        })?;
    if alphabet == 0 && row_count > 0 {
        return Err(Error::UnsupportedFormat("zero-width rows".into()));
    }
    debug_assert_eq!(expected as usize, body.len());
    body.chunks_exact(alphabet.max(1) * 2)
        .take(row_count as usize)
        .enumerate()
        .map(|(k, row)| {
            let probs = row
                .chunks_exact(2)
                .map(|b| Bf16::from_bits(u16::from_le_bytes([b[0], b[1]])))
                .collect();
            Bf16Table::new(k as u64, probs)
        })
        .collect()
}
