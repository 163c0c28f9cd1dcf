//! Prediction-guided symbol search.
//!
//! A context anchor `mu` proposes the next symbol. The search then
//!
//! 1. probes `mu` (one step) and commits on a match;
//! 2. tests whether the slot falls inside the window `[mu - delta, mu + delta]`
//!    (one step);
//! 3. on a hit, binary-searches the side of the window the first probe pointed to;
//!    on a miss, runs the full baseline search.
//!
//! The returned symbol is always the one the baseline search finds, so decoded
//! output and consumed bytes never depend on the predictor. Speculation here is
//! verify-then-advance: the state is only updated with a confirmed symbol.
//!
//! One step is one bracketing probe of the slot against a CDF interval, the
//! same unit [`baseline_search`] counts.

use crate::error::{Error, Result};
use crate::rans::{baseline_search, bracket_search, SymbolSearch};
use crate::Symbol;

pub const DEFAULT_DELTA: u32 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnchorMode {
    /// Raster-order image of the given width; anchor is the left/up average.
    Image {
        width: usize,
    },
    LastValue,
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PredictorConfig {
    pub delta: u32,
    pub anchor: AnchorMode,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig {
            delta: DEFAULT_DELTA,
            anchor: AnchorMode::LastValue,
        }
    }
}

impl PredictorConfig {
    pub fn validate(&self, alphabet_size: usize) -> Result<()> {
        if self.delta as usize > alphabet_size {
            return Err(Error::InvalidConfig(format!(
                "delta {} exceeds alphabet size {alphabet_size}",
                self.delta
            )));
        }
        if let AnchorMode::Image { width: 0 } = self.anchor {
            return Err(Error::InvalidConfig("image width must be positive".into()));
        }
        Ok(())
    }
}

/// Anchor for the symbol following `history`, clamped into the alphabet.
pub fn anchor(history: &[Symbol], mode: AnchorMode, alphabet_size: usize) -> usize {
    let pos = history.len();
    let mu = match mode {
        AnchorMode::Zero => 0,
        AnchorMode::LastValue => history.last().map_or(0, |&x| usize::from(x)),
        AnchorMode::Image { width } => {
            let left = (pos % width != 0).then(|| usize::from(history[pos - 1]));
            let up = (pos >= width).then(|| usize::from(history[pos - width]));
            match (left, up) {
                (Some(l), Some(u)) => (l + u) / 2,
                (Some(l), None) => l,
                (None, Some(u)) => u,
                (None, None) => 0,
            }
        }
    };
    mu.min(alphabet_size - 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    Hit { lo: usize, hi: usize },
    Miss,
}

/// Whether the slot lies in the CDF span of `[mu - delta, mu + delta]`.
pub fn window_gate(slot: u32, cdf: &[u32], mu: usize, delta: u32) -> Gate {
    let last = cdf.len() - 2;
    let lo = mu.saturating_sub(delta as usize);
    let hi = mu.saturating_add(delta as usize).min(last);
    if cdf[lo] <= slot && slot < cdf[hi + 1] {
        Gate::Hit { lo, hi }
    } else {
        Gate::Miss
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchPath {
    AnchorExact,
    GateHit,
    Fallback,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GuidedOutcome {
    pub symbol: usize,
    pub steps: u32,
    pub path: SearchPath,
}

/// Windowed search around `mu`, falling back to the full alphabet.
pub fn guided_search(slot: u32, cdf: &[u32], mu: usize, delta: u32) -> GuidedOutcome {
    let below_anchor = slot < cdf[mu];
    if !below_anchor && slot < cdf[mu + 1] {
        return GuidedOutcome {
            symbol: mu,
            steps: 1,
            path: SearchPath::AnchorExact,
        };
    }
    match window_gate(slot, cdf, mu, delta) {
        Gate::Hit { lo, hi } => {
            let (lo, hi) = if below_anchor {
                (lo, mu - 1)
            } else {
                (mu + 1, hi)
            };
            let (symbol, probes) = bracket_search(slot, cdf, lo, hi);
            GuidedOutcome {
                symbol,
                steps: 2 + probes,
                path: SearchPath::GateHit,
            }
        }
        Gate::Miss => {
            let (symbol, probes) = baseline_search(slot, cdf);
            GuidedOutcome {
                symbol,
                steps: 2 + probes,
                path: SearchPath::Fallback,
            }
        }
    }
}

/// Counters for a guided decode.
///
/// `gate_hits` includes anchor-exact hits, so `gate_hits + fallbacks` equals
/// `symbols_decoded`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SearchStats {
    pub symbols_decoded: u64,
    pub total_steps_guided: u64,
    /// Filled only when a shadow baseline search runs alongside.
    pub total_steps_baseline: u64,
    /// Symbols that also went through the shadow baseline.
    pub shadow_symbols: u64,
    pub gate_hits: u64,
    pub anchor_exact_hits: u64,
    pub fallbacks: u64,
    /// Steps spent on gate hits, for the overhead estimate.
    pub hit_steps: u64,
    /// Shadow searches that disagreed with the guided result. Must stay zero.
    pub shadow_mismatches: u64,
    pub delta: u32,
}

impl SearchStats {
    pub fn record(&mut self, outcome: &GuidedOutcome) {
        self.symbols_decoded += 1;
        self.total_steps_guided += u64::from(outcome.steps);
        match outcome.path {
            SearchPath::AnchorExact => {
                self.anchor_exact_hits += 1;
                self.gate_hits += 1;
                self.hit_steps += u64::from(outcome.steps);
            }
            SearchPath::GateHit => {
                self.gate_hits += 1;
                self.hit_steps += u64::from(outcome.steps);
            }
            SearchPath::Fallback => self.fallbacks += 1,
        }
    }

    pub fn avg_steps(&self) -> f64 {
        ratio(self.total_steps_guided, self.symbols_decoded)
    }

    /// Shadow baseline average; 0 when no shadow ran.
    pub fn avg_steps_baseline(&self) -> f64 {
        ratio(self.total_steps_baseline, self.shadow_symbols)
    }

    pub fn gate_hit_rate(&self) -> f64 {
        ratio(self.gate_hits, self.symbols_decoded)
    }

    pub fn anchor_exact_rate(&self) -> f64 {
        ratio(self.anchor_exact_hits, self.symbols_decoded)
    }

    /// Mean steps on gate hits beyond `log2(2 delta + 1)`.
    pub fn overhead_nu(&self) -> f64 {
        if self.gate_hits == 0 {
            return 0.0;
        }
        let window = f64::from(2 * self.delta + 1).log2();
        self.hit_steps as f64 / self.gate_hits as f64 - window
    }

    /// Adds `other`'s counters; an empty accumulator adopts its delta.
    pub fn merge(&mut self, other: &SearchStats) {
        if self.symbols_decoded == 0 {
            self.delta = other.delta;
        }
        self.symbols_decoded += other.symbols_decoded;
        self.total_steps_guided += other.total_steps_guided;
        self.total_steps_baseline += other.total_steps_baseline;
        self.shadow_symbols += other.shadow_symbols;
        self.gate_hits += other.gate_hits;
        self.anchor_exact_hits += other.anchor_exact_hits;
        self.fallbacks += other.fallbacks;
        self.hit_steps += other.hit_steps;
        self.shadow_mismatches += other.shadow_mismatches;
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// [`SymbolSearch`] driven by a [`PredictorConfig`].
#[derive(Clone, Debug)]
pub struct GuidedSearch {
    cfg: PredictorConfig,
    shadow: bool,
    stats: SearchStats,
}

impl GuidedSearch {
    pub fn new(cfg: PredictorConfig) -> Self {
        GuidedSearch {
            cfg,
            shadow: false,
            stats: SearchStats {
                delta: cfg.delta,
                ..SearchStats::default()
            },
        }
    }

    /// Also runs the baseline search per symbol and compares results.
    pub fn with_shadow_baseline(mut self) -> Self {
        self.shadow = true;
        self
    }

    pub fn config(&self) -> PredictorConfig {
        self.cfg
    }

    pub fn stats(&self) -> &SearchStats {
        &self.stats
    }

    pub fn into_stats(self) -> SearchStats {
        self.stats
    }
}

impl SymbolSearch for GuidedSearch {
    fn find(&mut self, history: &[Symbol], slot: u32, cdf: &[u32]) -> usize {
        let alphabet = cdf.len() - 1;
        let mu = anchor(history, self.cfg.anchor, alphabet);
        let outcome = guided_search(slot, cdf, mu, self.cfg.delta);
        self.stats.record(&outcome);
        if self.shadow {
            let (x, steps) = baseline_search(slot, cdf);
            self.stats.total_steps_baseline += u64::from(steps);
            self.stats.shadow_symbols += 1;
            if x != outcome.symbol {
                self.stats.shadow_mismatches += 1;
            }
        }
        outcome.symbol
    }
}
