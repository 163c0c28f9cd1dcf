//! Byte-renormalized rANS with a 32-bit state.
//!
//! State interval is `[RANS_L, 256 * RANS_L)` with `RANS_L = 2^23`. The encoder
//! renormalizes before each update and the decoder after, so both sides walk
//! the same sequence of states in opposite directions.
//!
//! Lane payload layout (after the encoder reverses its buffer):
//!
//! ```text
//! final state, 4 bytes MSB first | renormalization bytes in decode order
//! ```

use crate::container::LaneAssignment;
use crate::error::{Error, Result};
use crate::probtab::{check_prob_bits, ModelSet, QuantizedModel};
use crate::Symbol;

/// Lower bound of the normalized state.
pub const RANS_L: u32 = 1 << 23;

/// Bytes used to flush a lane's final state.
pub const STATE_BYTES: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CoderState(u32);

impl CoderState {
    pub const INITIAL: CoderState = CoderState(RANS_L);

    /// Wraps a raw value without checking the interval.
    pub const fn from_raw(s: u32) -> Self {
        CoderState(s)
    }

    pub const fn get(self) -> u32 {
        self.0
    }

    pub fn is_normalized(self) -> bool {
        (RANS_L..RANS_L << 8).contains(&self.0)
    }
}

pub fn encode_init() -> CoderState {
    CoderState::INITIAL
}

/// Quotient and remainder paths of the update, computed independently.
///
/// `a1 = floor(s / f) * 2^n` and `a2 = (s mod f) + C`; the new state is `a1 + a2`.
#[inline]
pub fn split_update(s: u32, freq: u32, start: u32, prob_bits: u32) -> (u32, u32) {
    let a1 = (s / freq) << prob_bits;
    let a2 = s % freq + start;
    (a1, a2)
}

/// Decoder transition before renormalization: `f * (s >> n) + (s mod 2^n) - C`.
///
/// The caller guarantees `C <= s mod 2^n < C + f`.
#[inline]
pub fn decode_update(s: u32, freq: u32, start: u32, prob_bits: u32) -> u32 {
    freq * (s >> prob_bits) + (s & ((1 << prob_bits) - 1)) - start
}

/// Encoder renormalization threshold: the state must stay below this before the update.
#[inline]
fn renorm_limit(freq: u32, prob_bits: u32) -> u32 {
    ((RANS_L >> prob_bits) << 8) * freq
}

fn check_interval(freq: u32, start: u32, prob_bits: u32) -> Result<()> {
    let total = 1u64 << prob_bits;
    if freq == 0 || u64::from(start) + u64::from(freq) > total {
        return Err(Error::InvalidFrequency {
            freq,
            start,
            prob_bits,
        });
    }
    Ok(())
}

/// Pushes one symbol with frequency `freq` and cumulative start `start`.
///
/// Renormalization bytes are appended to `out` in emission order (low byte first).
pub fn encode_step(
    state: CoderState,
    freq: u32,
    start: u32,
    prob_bits: u32,
    out: &mut Vec<u8>,
) -> Result<CoderState> {
    check_prob_bits(prob_bits)?;
    check_interval(freq, start, prob_bits)?;
    let mut s = state.0;
    let limit = renorm_limit(freq, prob_bits);
    while s >= limit {
        out.push(s as u8);
        s >>= 8;
    }
    let (a1, a2) = split_update(s, freq, start, prob_bits);
    Ok(CoderState(a1 + a2))
}

/// Single-lane encoder; symbols must be pushed in reverse order.
#[derive(Debug)]
pub struct RansEncoder {
    state: CoderState,
    buf: Vec<u8>,
}

impl Default for RansEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RansEncoder {
    pub fn new() -> Self {
        RansEncoder {
            state: encode_init(),
            buf: Vec::new(),
        }
    }

    pub fn state(&self) -> CoderState {
        self.state
    }

    pub fn put(&mut self, model: &QuantizedModel, symbol: usize) -> Result<()> {
        let (start, freq) = model.interval(symbol);
        self.state = encode_step(self.state, freq, start, model.prob_bits(), &mut self.buf)?;
        Ok(())
    }

    /// Flushes the state and returns the lane payload in decode order.
    pub fn finish(mut self) -> Vec<u8> {
        // reversed below, so push least significant first
        self.buf.extend_from_slice(&self.state.0.to_le_bytes());
        self.buf.reverse();
        self.buf
    }
}

/// Reads the flushed state from the front of a lane payload.
pub fn decode_init(input: &[u8]) -> Result<CoderState> {
    let head: [u8; STATE_BYTES] = input
        .get(..STATE_BYTES)
        .and_then(|b| b.try_into().ok())
        .ok_or_else(|| {
            Error::TruncatedStream(format!(
                "lane payload of {} bytes has no state",
                input.len()
            ))
        })?;
    Ok(CoderState(u32::from_be_bytes(head)))
}

/// Strategy that maps a slot back to the symbol whose CDF interval contains it.
///
/// `history` holds every symbol decoded so far in global order, so context-aware
/// strategies can predict the next one. Implementations must return the unique
/// `x` with `cdf[x] <= slot < cdf[x + 1]`.
pub trait SymbolSearch {
    fn find(&mut self, history: &[Symbol], slot: u32, cdf: &[u32]) -> usize;
}

/// Binary search over `[lo, hi]`, one step per bracketing probe.
///
/// The caller guarantees `cdf[lo] <= slot < cdf[hi + 1]`, so a range narrowed to
/// one candidate resolves without a further probe.
pub fn bracket_search(slot: u32, cdf: &[u32], mut lo: usize, mut hi: usize) -> (usize, u32) {
    debug_assert!(cdf[lo] <= slot && slot < cdf[hi + 1]);
    let mut steps = 0;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        steps += 1;
        if slot < cdf[mid] {
            hi = mid - 1;
        } else if slot >= cdf[mid + 1] {
            lo = mid + 1;
        } else {
            return (mid, steps);
        }
    }
    (lo, steps)
}

/// Full-alphabet binary search. A single-symbol alphabet still costs one probe.
pub fn baseline_search(slot: u32, cdf: &[u32]) -> (usize, u32) {
    let (x, steps) = bracket_search(slot, cdf, 0, cdf.len() - 2);
    (x, steps.max(1))
}

/// Baseline strategy with probe accounting.
#[derive(Clone, Debug, Default)]
pub struct BaselineSearch {
    pub symbols: u64,
    pub steps: u64,
}

impl BaselineSearch {
    pub fn avg_steps(&self) -> f64 {
        if self.symbols == 0 {
            0.0
        } else {
            self.steps as f64 / self.symbols as f64
        }
    }
}

impl SymbolSearch for BaselineSearch {
    fn find(&mut self, _history: &[Symbol], slot: u32, cdf: &[u32]) -> usize {
        let (x, steps) = baseline_search(slot, cdf);
        self.symbols += 1;
        self.steps += u64::from(steps);
        x
    }
}

/// Single-lane decoder over a payload produced by [`RansEncoder::finish`].
#[derive(Debug)]
pub struct RansDecoder<'a> {
    state: CoderState,
    input: &'a [u8],
    pos: usize,
}

impl<'a> RansDecoder<'a> {
    pub fn new(input: &'a [u8]) -> Result<Self> {
        let state = decode_init(input)?;
        if !state.is_normalized() {
            return Err(Error::CorruptState(format!(
                "initial state {:#010x} outside [2^23, 2^31)",
                state.0
            )));
        }
        Ok(RansDecoder {
            state,
            input,
            pos: STATE_BYTES,
        })
    }

    pub fn state(&self) -> CoderState {
        self.state
    }

    /// Bytes consumed so far, including the state prefix.
    pub fn consumed(&self) -> usize {
        self.pos
    }

    /// Current slot `s mod 2^n`.
    pub fn slot(&self, prob_bits: u32) -> u32 {
        self.state.0 & ((1 << prob_bits) - 1)
    }

    /// Decodes one symbol: locate, advance, renormalize.
    pub fn decode_step<S: SymbolSearch + ?Sized>(
        &mut self,
        model: &QuantizedModel,
        search: &mut S,
        history: &[Symbol],
    ) -> Result<usize> {
        let n = model.prob_bits();
        let slot = self.slot(n);
        let cdf = model.cdf();
        let x = search.find(history, slot, cdf);
        if x >= model.alphabet_size() || !(cdf[x]..cdf[x + 1]).contains(&slot) {
            return Err(Error::CorruptState(format!(
                "no symbol brackets slot {slot}"
            )));
        }
        self.advance(model, x)?;
        Ok(x)
    }

    /// State transition for a known symbol followed by renormalization.
    pub fn advance(&mut self, model: &QuantizedModel, symbol: usize) -> Result<()> {
        let n = model.prob_bits();
        let (start, freq) = model.interval(symbol);
        let mut s = decode_update(self.state.0, freq, start, n);
        while s < RANS_L {
            let b = *self.input.get(self.pos).ok_or_else(|| {
                Error::TruncatedStream(format!(
                    "renormalization needs byte {} of {}",
                    self.pos,
                    self.input.len()
                ))
            })?;
            self.pos += 1;
            s = (s << 8) | u32::from(b);
        }
        self.state = CoderState(s);
        Ok(())
    }

    /// Verifies the lane ended where the encoder started.
    pub fn finish(self) -> Result<usize> {
        if self.state != CoderState::INITIAL {
            return Err(Error::CorruptState(format!(
                "lane ended in state {:#010x}",
                self.state.0
            )));
        }
        if self.pos != self.input.len() {
            return Err(Error::CorruptState(format!(
                "{} unread bytes at end of lane",
                self.input.len() - self.pos
            )));
        }
        Ok(self.pos)
    }
}

fn check_symbols(symbols: &[Symbol], models: &ModelSet) -> Result<()> {
    models.check_covers(symbols.len() as u64)?;
    if let Some(alphabet) = models.alphabet_size() {
        if let Some(pos) = symbols.iter().position(|&x| usize::from(x) >= alphabet) {
            return Err(Error::SymbolOutOfRange {
                symbol: u32::from(symbols[pos]),
                position: pos,
                alphabet_size: alphabet,
            });
        }
    }
    Ok(())
}

/// Encodes a stream split round-robin across `lane_count` lanes.
///
/// Returns one payload per lane. Models are indexed by global position, so the
/// decoded sequence does not depend on the lane count.
pub fn encode_stream(
    symbols: &[Symbol],
    models: &ModelSet,
    lane_count: usize,
) -> Result<Vec<Vec<u8>>> {
    let lanes = LaneAssignment::new(symbols.len() as u64, lane_count)?;
    check_symbols(symbols, models)?;
    let mut payloads = Vec::with_capacity(lane_count);
    for lane in 0..lane_count {
        let mut enc = RansEncoder::new();
        for pos in (0..lanes.lane_len(lane)).rev() {
            let i = lanes.global_index(lane, pos) as usize;
            let model = models.model_at(i)?;
            enc.put(&model, usize::from(symbols[i]))?;
        }
        payloads.push(enc.finish());
    }
    Ok(payloads)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodedStream {
    pub symbols: Vec<Symbol>,
    /// Bytes read from each lane payload.
    pub consumed: Vec<usize>,
}

/// Decodes `symbol_count` symbols, visiting lanes in the encoder's round-robin order.
pub fn decode_stream<S: SymbolSearch + ?Sized>(
    payloads: &[&[u8]],
    models: &ModelSet,
    symbol_count: u64,
    search: &mut S,
) -> Result<DecodedStream> {
    let lanes = LaneAssignment::new(symbol_count, payloads.len())?;
    models.check_covers(symbol_count)?;
    let mut decoders = payloads
        .iter()
        .map(|p| RansDecoder::new(p))
        .collect::<Result<Vec<_>>>()?;
    // a corrupt count must not drive a huge allocation
    let cap = symbol_count.min(payloads.iter().map(|p| p.len() as u64 * 8).sum::<u64>() + 64);
    let mut out: Vec<Symbol> = Vec::with_capacity(cap as usize);
    for i in 0..symbol_count {
        let lane = lanes.lane_of(i);
        let model = models.model_at(i as usize)?;
        let x = decoders[lane].decode_step(&model, search, &out)?;
        let x = Symbol::try_from(x)
            .map_err(|_| Error::CorruptState(format!("symbol {x} exceeds 16 bits")))?;
        out.push(x);
    }
    let consumed = decoders
        .into_iter()
        .map(RansDecoder::finish)
        .collect::<Result<Vec<_>>>()?;
    Ok(DecodedStream {
        symbols: out,
        consumed,
    })
}
