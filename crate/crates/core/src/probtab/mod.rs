//! Probability tables: BF16 storage and the one-time conversion into the
//! fixed-point frequency/CDF domain shared by the encoder and decoder.
//!
//! The conversion per symbol is `f(x) = max(1, round(p_x * 2^n))`, followed by a
//! mass correction that forces `sum f = 2^n`:
//!
//! * surplus: repeatedly decrement the largest entry (lowest index on ties),
//!   never below 1;
//! * deficit: repeatedly increment the largest entry (lowest index on ties).
//!
//! The CDF is the exclusive prefix sum of the corrected frequencies.

mod bf16;
mod file;

use std::borrow::Cow;

pub(crate) use bf16::check_prob_bits;
pub use bf16::Bf16;
pub use file::{read_table_file, write_table_file, TABLE_MAGIC, TABLE_VERSION};

use crate::error::{Error, Result};

pub const DEFAULT_PROB_BITS: u32 = 12;

/// One context's distribution in storage format.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bf16Table {
    context_id: u64,
    probs: Vec<Bf16>,
}

impl Bf16Table {
    pub fn new(context_id: u64, probs: Vec<Bf16>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidProbability("empty table".into()));
        }
        let mut any_positive = false;
        for p in &probs {
            p.validate_probability()?;
            any_positive |= p.to_bits() & 0x7FFF != 0;
        }
        if !any_positive {
            return Err(Error::InvalidProbability(format!(
                "context {context_id} has no positive entry"
            )));
        }
        Ok(Bf16Table { context_id, probs })
    }

    pub fn from_reals(context_id: u64, probs: &[f64]) -> Result<Self> {
        if let Some(x) = probs.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidProbability(format!("non-finite value {x}")));
        }
        Self::new(
            context_id,
            probs.iter().map(|&x| Bf16::from_f64(x)).collect(),
        )
    }

    pub fn context_id(&self) -> u64 {
        self.context_id
    }

    pub fn probs(&self) -> &[Bf16] {
        &self.probs
    }

    pub fn alphabet_size(&self) -> usize {
        self.probs.len()
    }
}

/// Fixed-point frequencies and CDF with `sum f = 2^prob_bits`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantizedModel {
    freq: Vec<u32>,
    cdf: Vec<u32>,
    prob_bits: u32,
}

impl QuantizedModel {
    /// Builds a model from already-corrected frequencies, checking every invariant.
    pub fn from_frequencies(freq: Vec<u32>, prob_bits: u32) -> Result<Self> {
        check_prob_bits(prob_bits)?;
        if freq.is_empty() {
            return Err(Error::TableInvariantViolation("empty table".into()));
        }
        if let Some(x) = freq.iter().position(|&f| f == 0) {
            return Err(Error::TableInvariantViolation(format!(
                "symbol {x} has zero frequency"
            )));
        }
        let total: u64 = freq.iter().map(|&f| u64::from(f)).sum();
        if total != 1u64 << prob_bits {
            return Err(Error::TableInvariantViolation(format!(
                "frequencies sum to {total}, expected {}",
                1u64 << prob_bits
            )));
        }
        let mut cdf = Vec::with_capacity(freq.len() + 1);
        let mut acc = 0u32;
        cdf.push(0);
        for &f in &freq {
            acc += f;
            cdf.push(acc);
        }
        Ok(QuantizedModel {
            freq,
            cdf,
            prob_bits,
        })
    }

    /// Model with equal mass on every symbol; the remainder goes through mass correction.
    pub fn uniform(alphabet_size: usize, prob_bits: u32) -> Result<Self> {
        check_prob_bits(prob_bits)?;
        if alphabet_size == 0 {
            return Err(Error::EmptyInput);
        }
        let share = ((1u64 << prob_bits) / alphabet_size as u64).max(1) as u32;
        let freq = mass_correct(&vec![share; alphabet_size], prob_bits)?;
        Self::from_frequencies(freq, prob_bits)
    }

    pub fn freq(&self) -> &[u32] {
        &self.freq
    }

    pub fn cdf(&self) -> &[u32] {
        &self.cdf
    }

    pub fn prob_bits(&self) -> u32 {
        self.prob_bits
    }

    pub fn alphabet_size(&self) -> usize {
        self.freq.len()
    }

    pub fn total(&self) -> u32 {
        1 << self.prob_bits
    }

    /// `(C(x), f(x))` for the symbol.
    #[inline]
    pub fn interval(&self, symbol: usize) -> (u32, u32) {
        (self.cdf[symbol], self.freq[symbol])
    }
}

/// `bf16_to_fixed` for every entry, then mass correction, then the CDF.
pub fn quantize_table(table: &Bf16Table, prob_bits: u32) -> Result<QuantizedModel> {
    check_prob_bits(prob_bits)?;
    check_alphabet(table.alphabet_size(), prob_bits)?;
    let raw = table
        .probs
        .iter()
        .map(|p| p.to_fixed(prob_bits))
        .collect::<Result<Vec<_>>>()?;
    let freq = mass_correct(&raw, prob_bits)?;
    QuantizedModel::from_frequencies(freq, prob_bits)
}

fn check_alphabet(alphabet_size: usize, prob_bits: u32) -> Result<()> {
    if alphabet_size as u64 > 1u64 << prob_bits {
        return Err(Error::InfeasibleAlphabet {
            alphabet_size,
            prob_bits,
        });
    }
    Ok(())
}

/// Forces `sum = 2^prob_bits` by adjusting the largest entries.
///
/// Produces the same table as applying one unit at a time to the current
/// maximum (lowest index on ties), without iterating per unit.
pub fn mass_correct(freq: &[u32], prob_bits: u32) -> Result<Vec<u32>> {
    check_prob_bits(prob_bits)?;
    check_alphabet(freq.len(), prob_bits)?;
    if freq.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(x) = freq.iter().position(|&f| f == 0) {
        return Err(Error::InvalidFrequency {
            freq: 0,
            start: x as u32,
            prob_bits,
        });
    }
    let target = 1u64 << prob_bits;
    let sum: u64 = freq.iter().map(|&f| u64::from(f)).sum();
    let mut out = freq.to_vec();

    if sum < target {
        // every increment keeps the same entry on top
        let top = argmax_lowest(&out);
        out[top] += (target - sum) as u32;
        return Ok(out);
    }
    if sum == target {
        return Ok(out);
    }

    let surplus = sum - target;
    let removed_above = |level: u32| -> u64 {
        freq.iter()
            .map(|&f| u64::from(f.saturating_sub(level)))
            .sum()
    };
    // smallest level whose cut-off removes no more than the surplus
    let (mut lo, mut hi) = (1u32, *freq.iter().max().unwrap());
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if removed_above(mid) <= surplus {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let level = lo;
    let mut rest = surplus - removed_above(level);
    for f in out.iter_mut() {
        if *f >= level {
            *f = level;
            if rest > 0 {
                *f -= 1;
                rest -= 1;
            }
        }
    }
    debug_assert_eq!(rest, 0);
    Ok(out)
}

fn argmax_lowest(v: &[u32]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Source of the model used at each global symbol position.
#[derive(Clone, Debug)]
pub enum ModelSet {
    /// One table for the whole stream.
    Static(QuantizedModel),
    /// Row `k` supplies the distribution for global position `k`.
    Adaptive {
        rows: Vec<Bf16Table>,
        prob_bits: u32,
        /// `rows` quantized once at construction.
        quantized: Vec<QuantizedModel>,
    },
}

impl ModelSet {
    pub fn adaptive(rows: Vec<Bf16Table>, prob_bits: u32) -> Result<Self> {
        check_prob_bits(prob_bits)?;
        if let Some(first) = rows.first() {
            let a = first.alphabet_size();
            check_alphabet(a, prob_bits)?;
            if let Some(r) = rows.iter().find(|r| r.alphabet_size() != a) {
                return Err(Error::ModelMismatch(format!(
                    "row {} has {} symbols, expected {a}",
                    r.context_id(),
                    r.alphabet_size()
                )));
            }
        }
        let quantized = rows
            .iter()
            .map(|r| quantize_table(r, prob_bits))
            .collect::<Result<Vec<_>>>()?;
        Ok(ModelSet::Adaptive {
            rows,
            prob_bits,
            quantized,
        })
    }

    pub fn prob_bits(&self) -> u32 {
        match self {
            ModelSet::Static(m) => m.prob_bits(),
            ModelSet::Adaptive { prob_bits, .. } => *prob_bits,
        }
    }

    /// Alphabet size, or `None` for an adaptive set without rows.
    pub fn alphabet_size(&self) -> Option<usize> {
        match self {
            ModelSet::Static(m) => Some(m.alphabet_size()),
            ModelSet::Adaptive { rows, .. } => rows.first().map(Bf16Table::alphabet_size),
        }
    }

    /// Fails unless a model exists for every position below `symbol_count`.
    pub fn check_covers(&self, symbol_count: u64) -> Result<()> {
        if let ModelSet::Adaptive { rows, .. } = self {
            if (rows.len() as u64) < symbol_count {
                return Err(Error::ModelMismatch(format!(
                    "{} table rows for {symbol_count} symbols",
                    rows.len()
                )));
            }
        }
        Ok(())
    }

    pub fn model_at(&self, position: usize) -> Result<Cow<'_, QuantizedModel>> {
        match self {
            ModelSet::Static(m) => Ok(Cow::Borrowed(m)),
            ModelSet::Adaptive { quantized, .. } => {
                quantized.get(position).map(Cow::Borrowed).ok_or_else(|| {
                    Error::ModelMismatch(format!("no table row for position {position}"))
                })
            }
        }
    }
}
