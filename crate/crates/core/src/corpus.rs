//! Workloads and metrics: synthetic gradient images, raw/PGM ingestion,
//! histogram models, entropy and compression ratio.

use std::path::Path;

use crate::error::{Error, Result};
use crate::probtab::{Bf16, Bf16Table, QuantizedModel};
use crate::specdec::SearchStats;
use crate::Symbol;

pub const MAX_NOISE: u32 = 64;

/// SplitMix64. Fixed constants so generated images are reproducible anywhere:
///
/// ```text
/// state += 0x9E3779B97F4A7C15
/// z = state
/// z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
/// z = (z ^ (z >> 27)) * 0x94D049BB133111EB
/// return z ^ (z >> 31)
/// ```
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `0..bound` by multiply-shift of the high 32 bits.
    pub fn below(&mut self, bound: u32) -> u32 {
        (((self.next_u64() >> 32) * u64::from(bound)) >> 32) as u32
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || width.checked_mul(height) != Some(pixels.len()) {
            return Err(Error::BadDimensions(format!(
                "{width}x{height} image with {} pixels",
                pixels.len()
            )));
        }
        Ok(ImageBuffer {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn symbols(&self) -> Vec<Symbol> {
        self.pixels.iter().map(|&p| Symbol::from(p)).collect()
    }

    /// Binary P5 with maxval 255.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }
}

/// Diagonal gradient `(x + y) * 255 / (w + h)` plus uniform noise in
/// `[-noise, +noise]`, clamped to `0..=255`. Integer arithmetic only; one
/// generator draw per pixel in raster order.
pub fn gen_gradient_image(
    width: usize,
    height: usize,
    noise: u32,
    seed: u64,
) -> Result<ImageBuffer> {
    if noise > MAX_NOISE {
        return Err(Error::InvalidConfig(format!(
            "noise amplitude {noise} exceeds {MAX_NOISE}"
        )));
    }
    if width == 0 || height == 0 {
        return Err(Error::BadDimensions(format!("{width}x{height}")));
    }
    let mut rng = SplitMix64::new(seed);
    let span = (width + height) as u64;
    let mut pixels = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let base = ((x + y) as u64 * 255 / span) as i64;
            let offset = if noise == 0 {
                0
            } else {
                i64::from(rng.below(2 * noise + 1)) - i64::from(noise)
            };
            pixels.push((base + offset).clamp(0, 255) as u8);
        }
    }
    ImageBuffer::new(width, height, pixels)
}

/// Empirical distribution rounded to BF16, one entry per symbol.
pub fn histogram_model(symbols: &[Symbol], alphabet_size: usize) -> Result<Bf16Table> {
    if symbols.is_empty() {
        return Err(Error::EmptyInput);
    }
    let counts = histogram(symbols, alphabet_size)?;
    let n = symbols.len() as f64;
    let probs = counts
        .iter()
        .map(|&c| Bf16::from_f64(c as f64 / n))
        .collect();
    Bf16Table::new(0, probs)
}

fn histogram(symbols: &[Symbol], alphabet_size: usize) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; alphabet_size];
    for (position, &x) in symbols.iter().enumerate() {
        let slot = counts
            .get_mut(usize::from(x))
            .ok_or(Error::SymbolOutOfRange {
                symbol: u32::from(x),
                position,
                alphabet_size,
            })?;
        *slot += 1;
    }
    Ok(counts)
}

/// Empirical entropy in bits per symbol.
pub fn compute_entropy(symbols: &[Symbol]) -> Result<f64> {
    if symbols.is_empty() {
        return Err(Error::EmptyInput);
    }
    let alphabet = symbols.iter().map(|&x| usize::from(x)).max().unwrap() + 1;
    let counts = histogram(symbols, alphabet)?;
    let n = symbols.len() as f64;
    Ok(counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum())
}

/// Cross-entropy of the data against the quantized model, `sum p_x log2(2^n / f(x))`.
pub fn compute_cross_entropy(symbols: &[Symbol], model: &QuantizedModel) -> Result<f64> {
    if symbols.is_empty() {
        return Err(Error::EmptyInput);
    }
    let counts = histogram(symbols, model.alphabet_size())?;
    let n = symbols.len() as f64;
    let total = f64::from(model.total());
    Ok(counts
        .iter()
        .zip(model.freq())
        .filter(|(&c, _)| c > 0)
        .map(|(&c, &f)| c as f64 / n * (total / f64::from(f)).log2())
        .sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    Raw,
    Pgm,
    Image { width: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ingested {
    pub symbols: Vec<Symbol>,
    pub image: Option<ImageBuffer>,
}

pub fn ingest(path: &Path, layout: Layout) -> Result<Ingested> {
    let bytes = std::fs::read(path)?;
    ingest_bytes(&bytes, layout)
}

pub fn ingest_bytes(bytes: &[u8], layout: Layout) -> Result<Ingested> {
    let image = match layout {
        Layout::Raw => None,
        Layout::Pgm => Some(parse_pgm(bytes)?),
        Layout::Image { width } => {
            if width == 0 || bytes.len() % width != 0 {
                return Err(Error::BadDimensions(format!(
                    "{} bytes do not form rows of width {width}",
                    bytes.len()
                )));
            }
            if bytes.is_empty() {
                None
            } else {
                Some(ImageBuffer::new(
                    width,
                    bytes.len() / width,
                    bytes.to_vec(),
                )?)
            }
        }
    };
    let symbols = match &image {
        Some(img) => img.symbols(),
        None => bytes.iter().map(|&b| Symbol::from(b)).collect(),
    };
    Ok(Ingested { symbols, image })
}

/// Binary 8-bit PGM (P5); `#` comments allowed in the header.
pub fn parse_pgm(bytes: &[u8]) -> Result<ImageBuffer> {
    if !bytes.starts_with(b"P5") {
        return Err(Error::UnsupportedFormat("not a binary PGM (P5)".into()));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::UnsupportedFormat(format!("bad PGM header at byte {start}")))?;
    }
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > 255 {
        return Err(Error::UnsupportedFormat(format!(
            "PGM maxval {maxval} is not 8-bit"
        )));
    }
    // exactly one whitespace byte before the raster
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::UnsupportedFormat("PGM header not terminated".into()));
    }
    pos += 1;
    let raster = &bytes[pos..];
    let expected = width.saturating_mul(height);
    if raster.len() < expected {
        return Err(Error::BadDimensions(format!(
            "{width}x{height} PGM with {} raster bytes",
            raster.len()
        )));
    }
    ImageBuffer::new(width, height, raster[..expected].to_vec())
}

/// Modeled pipeline fill for the two-stage encoder.
pub const ENCODE_FILL_CYCLES: u64 = 2;

/// Per-file metrics. Cycle figures are a model, not a measurement.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StatsReport {
    pub original_bytes: u64,
    pub compressed_bytes: u64,
    pub symbol_count: u64,
    pub entropy: Option<f64>,
    pub cross_entropy: Option<f64>,
    pub baseline_steps: Option<u64>,
    pub guided: Option<SearchStats>,
}

impl StatsReport {
    /// `None` for empty input.
    pub fn compression_ratio(&self) -> Option<f64> {
        (self.original_bytes > 0 && self.compressed_bytes > 0)
            .then(|| self.original_bytes as f64 / self.compressed_bytes as f64)
    }

    /// `fill + one cycle per symbol`.
    pub fn modeled_encode_cycles(&self) -> u64 {
        ENCODE_FILL_CYCLES + self.symbol_count
    }

    /// `sum(1 + steps)` over the search that produced the output.
    pub fn modeled_decode_cycles(&self) -> Option<u64> {
        let steps = match &self.guided {
            Some(g) => g.total_steps_guided,
            None => self.baseline_steps?,
        };
        Some(self.symbol_count + steps)
    }

    /// From a baseline decode if one ran, else from the guided search's shadow.
    pub fn baseline_avg_steps(&self) -> Option<f64> {
        if let Some(steps) = self.baseline_steps {
            return (self.symbol_count > 0).then(|| steps as f64 / self.symbol_count as f64);
        }
        let g = self.guided.as_ref()?;
        (g.shadow_symbols > 0).then(|| g.avg_steps_baseline())
    }
}
