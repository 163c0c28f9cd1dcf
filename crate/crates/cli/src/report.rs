use std::fmt::Display;

use ras_core::StatsReport;

use crate::args::ReportFormat;

/// Flat list of metrics, printed as `key = value` or `key=value`.
#[derive(Default)]
pub struct Report {
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn push(&mut self, key: impl Into<String>, value: impl Display) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn push_f64(&mut self, key: impl Into<String>, value: Option<f64>) {
        self.push(key, fmt_opt(value));
    }

    pub fn render(&self, format: ReportFormat) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            match format {
                ReportFormat::Text => out.push_str(&format!("{} = {v}\n", text_label(k))),
                ReportFormat::Machine => out.push_str(&format!("{k}={v}\n")),
            }
        }
        out
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

fn text_label(key: &str) -> &str {
    match key {
        "cr" => "CR",
        k => k,
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"))
}

pub fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

/// Keys shared by every command that encodes.
pub fn push_encode_metrics(r: &mut Report, s: &StatsReport) {
    r.push("original_bytes", s.original_bytes);
    r.push("compressed_bytes", s.compressed_bytes);
    r.push("symbol_count", s.symbol_count);
    r.push_f64("cr", s.compression_ratio());
    r.push_f64("entropy_bits", s.entropy);
    r.push_f64("cross_entropy_bits", s.cross_entropy);
    r.push("modeled_encode_cycles", s.modeled_encode_cycles());
}

/// Search metrics; baseline-only, guided-only or both.
pub fn push_decode_metrics(r: &mut Report, s: &StatsReport) {
    let n = s.symbol_count;
    r.push_f64("baseline_avg_steps", s.baseline_avg_steps());
    if let Some(g) = &s.guided {
        let guided_avg = (n > 0).then(|| g.avg_steps());
        r.push("delta", g.delta);
        r.push_f64("guided_avg_steps", guided_avg);
        if let (Some(gs), Some(bs)) = (guided_avg, s.baseline_avg_steps()) {
            r.push_f64("step_ratio", ratio(gs, bs));
        }
        r.push_f64("gate_hit_rate", (n > 0).then(|| g.gate_hit_rate()));
        r.push_f64("anchor_exact_rate", (n > 0).then(|| g.anchor_exact_rate()));
        r.push("fallbacks", g.fallbacks);
        if g.shadow_symbols > 0 {
            r.push("shadow_mismatches", g.shadow_mismatches);
        }
    }
    r.push(
        "modeled_decode_cycles",
        s.modeled_decode_cycles()
            .map_or_else(|| "n/a".to_string(), |c| c.to_string()),
    );
}
