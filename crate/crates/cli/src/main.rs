mod args;
mod report;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::Parser;
use ras_core::corpus::{
    compute_cross_entropy, compute_entropy, gen_gradient_image, histogram_model, ingest_bytes,
    Ingested,
};
use ras_core::probtab::{read_table_file, write_table_file};
use ras_core::{
    compress, decompress, histogram_quantized, parse_container, AnchorMode, BaselineSearch,
    Bf16Table, GuidedSearch, Layout, ModelSet, PredictorConfig, SearchStats, StatsReport, Symbol,
};

use args::{
    AnchorArg, BenchArgs, Cli, Command, DecodeArgs, EncodeArgs, GenCommand, ImageFormat, LayoutArg,
    ReportFormat, StatsArgs, TableArg, TableModel,
};
use report::{fmt_opt, push_decode_metrics, push_encode_metrics, ratio, Report};

const BYTE_ALPHABET: usize = 256;
const SWEEP_DELTAS: [u32; 7] = [0, 1, 2, 4, 8, 16, 32];

/// Inconsistent flags; exits like a parse error.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Guided and baseline decodes disagreed. Never expected; exits with a distinct code.
#[derive(Debug)]
struct ShadowMismatch(u64);

impl fmt::Display for ShadowMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "guided search diverged from baseline on {} symbols",
            self.0
        )
    }
}

impl std::error::Error for ShadowMismatch {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(2)
            } else if e.is::<ShadowMismatch>() {
                ExitCode::from(3)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Encode(a) => cmd_encode(a),
        Command::Decode(a) => cmd_decode(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Gen(g) => cmd_gen(g),
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn resolve_layout(arg: LayoutArg, bytes: &[u8], path: &Path) -> Layout {
    match arg {
        LayoutArg::Fixed(l) => l,
        LayoutArg::Auto => {
            let pgm_ext = path
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
            if pgm_ext || bytes.starts_with(b"P5") {
                Layout::Pgm
            } else {
                Layout::Raw
            }
        }
    }
}

struct Input {
    bytes: u64,
    data: Ingested,
}

impl Input {
    fn width(&self) -> Option<usize> {
        self.data.image.as_ref().map(|i| i.width())
    }
}

fn load(path: &Path, layout: LayoutArg) -> Result<Input> {
    let bytes = read(path)?;
    let layout = resolve_layout(layout, &bytes, path);
    let data =
        ingest_bytes(&bytes, layout).with_context(|| format!("ingesting {}", path.display()))?;
    Ok(Input {
        bytes: bytes.len() as u64,
        data,
    })
}

fn load_rows(path: &Path) -> Result<Vec<Bf16Table>> {
    read_table_file(&read(path)?).with_context(|| format!("reading table {}", path.display()))
}

fn build_models(symbols: &[Symbol], table: &TableArg, prob_bits: u32) -> Result<ModelSet> {
    Ok(match table {
        TableArg::Static => {
            ModelSet::Static(histogram_quantized(symbols, BYTE_ALPHABET, prob_bits)?)
        }
        TableArg::External(path) => ModelSet::adaptive(load_rows(path)?, prob_bits)?,
    })
}

fn external_rows(models: &ModelSet) -> Option<Vec<Bf16Table>> {
    match models {
        ModelSet::Adaptive { rows, .. } => Some(rows.clone()),
        ModelSet::Static(_) => None,
    }
}

/// Mean ideal code length under the model actually used at each position.
fn cross_entropy(symbols: &[Symbol], models: &ModelSet) -> Result<Option<f64>> {
    if symbols.is_empty() {
        return Ok(None);
    }
    Ok(Some(match models {
        ModelSet::Static(m) => compute_cross_entropy(symbols, m)?,
        ModelSet::Adaptive { .. } => {
            let mut bits = 0.0;
            for (i, &x) in symbols.iter().enumerate() {
                let m = models.model_at(i)?;
                let (_, f) = m.interval(usize::from(x));
                bits += (f64::from(m.total()) / f64::from(f)).log2();
            }
            bits / symbols.len() as f64
        }
    }))
}

fn encode_report(input: &Input, models: &ModelSet, compressed: usize) -> Result<StatsReport> {
    let symbols = &input.data.symbols;
    Ok(StatsReport {
        original_bytes: input.bytes,
        compressed_bytes: compressed as u64,
        symbol_count: symbols.len() as u64,
        entropy: compute_entropy(symbols).ok(),
        cross_entropy: cross_entropy(symbols, models)?,
        baseline_steps: None,
        guided: None,
    })
}

fn predictor(
    delta: u32,
    anchor: Option<AnchorArg>,
    image_width: Option<usize>,
    alphabet: usize,
) -> Result<PredictorConfig> {
    let anchor = match anchor {
        Some(a) => a.resolve(image_width).map_err(usage)?,
        None => image_width.map_or(AnchorMode::LastValue, |width| AnchorMode::Image { width }),
    };
    let cfg = PredictorConfig { delta, anchor };
    cfg.validate(alphabet)?;
    Ok(cfg)
}

fn cmd_encode(a: EncodeArgs) -> Result<()> {
    let input = load(
        &a.input,
        a.coding.layout.unwrap_or(LayoutArg::Fixed(Layout::Raw)),
    )?;
    let models = build_models(&input.data.symbols, &a.table, a.coding.prob_bits)?;
    let file = compress(&input.data.symbols, &models, a.coding.lanes)?;
    write(&a.output, &file)?;
    let mut r = Report::default();
    push_encode_metrics(&mut r, &encode_report(&input, &models, file.len())?);
    print!("{}", r.render(a.report.report));
    Ok(())
}

fn symbols_to_bytes(symbols: &[Symbol]) -> Result<Vec<u8>> {
    symbols
        .iter()
        .map(|&x| {
            u8::try_from(x).map_err(|_| anyhow::anyhow!("decoded symbol {x} does not fit a byte"))
        })
        .collect()
}

fn cmd_decode(a: DecodeArgs) -> Result<()> {
    let bytes = read(&a.input)?;
    let (header, _) = parse_container(&bytes)?;
    let external = match &a.table {
        None => None,
        Some(TableArg::Static) => {
            return Err(usage("decode reads static tables from the container; use --table external:<path> for external tables"))
        }
        Some(TableArg::External(_)) if header.table.is_some() => {
            bail!("container embeds its table; --table external does not apply")
        }
        Some(TableArg::External(path)) => Some(load_rows(path)?),
    };
    let mut stats = StatsReport {
        compressed_bytes: bytes.len() as u64,
        symbol_count: header.symbol_count,
        ..StatsReport::default()
    };
    let decoded = if a.predictor.guided {
        let cfg = predictor(
            a.predictor.delta,
            a.predictor.anchor,
            None,
            header.alphabet_size,
        )?;
        let mut search = GuidedSearch::new(cfg);
        if a.shadow_baseline {
            search = search.with_shadow_baseline();
        }
        let (_, out) = decompress(&bytes, external, &mut search)?;
        stats.guided = Some(search.into_stats());
        out
    } else {
        if a.predictor.anchor.is_some() {
            return Err(usage("--anchor requires --guided"));
        }
        let mut search = BaselineSearch::default();
        let (_, out) = decompress(&bytes, external, &mut search)?;
        stats.baseline_steps = Some(search.steps);
        out
    };
    let raw = symbols_to_bytes(&decoded.symbols)?;
    write(&a.output, &raw)?;
    stats.original_bytes = raw.len() as u64;

    let mut r = Report::default();
    r.push("original_bytes", stats.original_bytes);
    r.push("compressed_bytes", stats.compressed_bytes);
    r.push("symbol_count", stats.symbol_count);
    r.push_f64("cr", stats.compression_ratio());
    push_decode_metrics(&mut r, &stats);
    print!("{}", r.render(a.report.report));
    match &stats.guided {
        Some(g) if g.shadow_mismatches > 0 => Err(ShadowMismatch(g.shadow_mismatches).into()),
        _ => Ok(()),
    }
}

fn cmd_stats(a: StatsArgs) -> Result<()> {
    let input = load(&a.input, a.coding.layout.unwrap_or(LayoutArg::Auto))?;
    let symbols = &input.data.symbols;
    let models = build_models(symbols, &a.table, a.coding.prob_bits)?;
    let file = compress(symbols, &models, a.coding.lanes)?;
    let mut stats = encode_report(&input, &models, file.len())?;

    let mut base = BaselineSearch::default();
    let (_, out) = decompress(&file, external_rows(&models), &mut base)?;
    if &out.symbols != symbols {
        bail!("roundtrip mismatch");
    }
    stats.baseline_steps = Some(base.steps);
    if a.predictor.guided {
        let alphabet = models.alphabet_size().unwrap_or(BYTE_ALPHABET);
        let cfg = predictor(
            a.predictor.delta,
            a.predictor.anchor,
            input.width(),
            alphabet,
        )?;
        let mut search = GuidedSearch::new(cfg).with_shadow_baseline();
        let (_, g) = decompress(&file, external_rows(&models), &mut search)?;
        if g != out {
            bail!("guided decode differs from baseline");
        }
        stats.guided = Some(search.into_stats());
    }

    let mut r = Report::default();
    push_encode_metrics(&mut r, &stats);
    push_decode_metrics(&mut r, &stats);
    print!("{}", r.render(a.report.report));
    match &stats.guided {
        Some(g) if g.shadow_mismatches > 0 => Err(ShadowMismatch(g.shadow_mismatches).into()),
        _ => Ok(()),
    }
}

struct BenchItem {
    name: String,
    input: Input,
}

fn bench_inputs(a: &BenchArgs) -> Result<Vec<BenchItem>> {
    let layout = a.coding.layout.unwrap_or(LayoutArg::Auto);
    if let Some(dir) = &a.corpus {
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .with_context(|| format!("reading corpus {}", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        paths.sort();
        return paths
            .into_iter()
            .map(|p| {
                Ok(BenchItem {
                    name: p
                        .file_name()
                        .unwrap_or_default()
                        .to_string_lossy()
                        .into_owned(),
                    input: load(&p, layout)?,
                })
            })
            .collect();
    }
    let g = a.gen;
    (0..a.images)
        .map(|i| {
            let img = gen_gradient_image(g.width, g.height, g.noise, g.seed.wrapping_add(i))?;
            Ok(BenchItem {
                name: format!("gradient-{}", g.seed.wrapping_add(i)),
                input: Input {
                    bytes: img.pixels().len() as u64,
                    data: Ingested {
                        symbols: img.symbols(),
                        image: Some(img),
                    },
                },
            })
        })
        .collect()
}

#[derive(Default)]
struct BenchRow {
    name: String,
    stats: StatsReport,
    /// Symbol-weighted sums for the aggregate.
    entropy_sum: f64,
    cross_sum: f64,
    wall_ms: f64,
}

impl BenchRow {
    fn add(&mut self, other: &BenchRow) {
        let s = &mut self.stats;
        let o = &other.stats;
        s.original_bytes += o.original_bytes;
        s.compressed_bytes += o.compressed_bytes;
        s.symbol_count += o.symbol_count;
        s.baseline_steps = Some(s.baseline_steps.unwrap_or(0) + o.baseline_steps.unwrap_or(0));
        let mut g = s.guided.take().unwrap_or_default();
        if let Some(og) = &o.guided {
            g.merge(og);
        }
        s.guided = Some(g);
        self.entropy_sum += other.entropy_sum;
        self.cross_sum += other.cross_sum;
        self.wall_ms += other.wall_ms;
        let n = s.symbol_count as f64;
        s.entropy = (n > 0.0).then(|| self.entropy_sum / n);
        s.cross_entropy = (n > 0.0).then(|| self.cross_sum / n);
    }
}

fn guided_decode(file: &[u8], cfg: PredictorConfig) -> Result<SearchStats> {
    let mut search = GuidedSearch::new(cfg).with_shadow_baseline();
    decompress(file, None, &mut search)?;
    let stats = search.into_stats();
    if stats.shadow_mismatches > 0 {
        return Err(ShadowMismatch(stats.shadow_mismatches).into());
    }
    Ok(stats)
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let items = bench_inputs(&a)?;
    if items.is_empty() {
        bail!("empty corpus");
    }
    let mut rows = Vec::with_capacity(items.len());
    let mut total = BenchRow {
        name: "TOTAL".into(),
        ..BenchRow::default()
    };
    let mut sweep: Vec<SearchStats> = SWEEP_DELTAS
        .iter()
        .map(|&delta| SearchStats {
            delta,
            ..SearchStats::default()
        })
        .collect();
    for item in &items {
        let symbols = &item.input.data.symbols;
        let cfg = predictor(a.delta, a.anchor, item.input.width(), BYTE_ALPHABET)?;
        let t = Instant::now();
        let models = ModelSet::Static(histogram_quantized(
            symbols,
            BYTE_ALPHABET,
            a.coding.prob_bits,
        )?);
        let file = compress(symbols, &models, a.coding.lanes)?;
        let mut base = BaselineSearch::default();
        let (_, out) = decompress(&file, None, &mut base)?;
        if &out.symbols != symbols {
            bail!("{}: roundtrip mismatch", item.name);
        }
        let guided = guided_decode(&file, cfg)?;
        let wall_ms = t.elapsed().as_secs_f64() * 1e3;

        if a.sweep {
            for (acc, &delta) in sweep.iter_mut().zip(&SWEEP_DELTAS) {
                acc.merge(&guided_decode(&file, PredictorConfig { delta, ..cfg })?);
            }
        }
        let mut stats = encode_report(&item.input, &models, file.len())?;
        stats.baseline_steps = Some(base.steps);
        stats.guided = Some(guided);
        let n = stats.symbol_count as f64;
        let row = BenchRow {
            name: item.name.clone(),
            entropy_sum: stats.entropy.unwrap_or(0.0) * n,
            cross_sum: stats.cross_entropy.unwrap_or(0.0) * n,
            stats,
            wall_ms,
        };
        total.add(&row);
        rows.push(row);
    }
    rows.push(total);

    match a.report.report {
        ReportFormat::Text => print_bench_text(&rows, a.sweep.then_some(&sweep[..])),
        ReportFormat::Machine => print_bench_machine(&rows, a.sweep.then_some(&sweep[..])),
    }
    Ok(())
}

fn row_metrics(s: &StatsReport) -> Report {
    let mut r = Report::default();
    push_encode_metrics(&mut r, s);
    push_decode_metrics(&mut r, s);
    r
}

fn print_bench_text(rows: &[BenchRow], sweep: Option<&[SearchStats]>) {
    println!(
        "{:<24} {:>9} {:>9} {:>7} {:>7} {:>7} {:>6} {:>6} {:>6} {:>6} {:>6} {:>9} {:>9} {:>9}",
        "file",
        "bytes",
        "comp",
        "CR",
        "H",
        "H_q",
        "base",
        "guided",
        "ratio",
        "hit",
        "exact",
        "fallbacks",
        "enc_cyc*",
        "dec_cyc*"
    );
    for row in rows {
        let s = &row.stats;
        let r = row_metrics(s);
        let v = |k: &str| r.get(k).unwrap_or("n/a").to_string();
        println!(
            "{:<24} {:>9} {:>9} {:>7.7} {:>7.7} {:>7.7} {:>6.6} {:>6.6} {:>6.6} {:>6.6} {:>6.6} {:>9} {:>9} {:>9}",
            row.name,
            s.original_bytes,
            s.compressed_bytes,
            v("cr"),
            v("entropy_bits"),
            v("cross_entropy_bits"),
            v("baseline_avg_steps"),
            v("guided_avg_steps"),
            v("step_ratio"),
            v("gate_hit_rate"),
            v("anchor_exact_rate"),
            v("fallbacks"),
            v("modeled_encode_cycles"),
            v("modeled_decode_cycles"),
        );
    }
    let wall: Vec<String> = rows.iter().map(|r| format!("{:.1}", r.wall_ms)).collect();
    println!(
        "* modeled cycles; wall time (ms, not a metric): {}",
        wall.join(" ")
    );
    if let Some(sweep) = sweep {
        let base = rows.last().and_then(|r| r.stats.baseline_avg_steps());
        println!();
        println!(
            "{:>6} {:>8} {:>8} {:>8} {:>8} {:>10}",
            "delta", "guided", "ratio", "hit", "exact", "fallbacks"
        );
        for s in sweep {
            let avg = s.avg_steps();
            println!(
                "{:>6} {:>8.4} {:>8} {:>8.4} {:>8.4} {:>10}",
                s.delta,
                avg,
                fmt_opt(base.and_then(|b| ratio(avg, b))),
                s.gate_hit_rate(),
                s.anchor_exact_rate(),
                s.fallbacks
            );
        }
    }
}

fn print_bench_machine(rows: &[BenchRow], sweep: Option<&[SearchStats]>) {
    let mut r = Report::default();
    let (total, files) = rows.split_last().expect("total row");
    r.push("files", files.len());
    for (i, row) in files.iter().enumerate() {
        r.push(format!("file.{i}.name"), &row.name);
        for (k, v) in row_metrics(&row.stats).entries() {
            r.push(format!("file.{i}.{k}"), v);
        }
        r.push(format!("file.{i}.wall_ms"), format!("{:.3}", row.wall_ms));
    }
    for (k, v) in row_metrics(&total.stats).entries() {
        r.push(format!("total.{k}"), v);
    }
    r.push("total.wall_ms", format!("{:.3}", total.wall_ms));
    if let Some(sweep) = sweep {
        let base = total.stats.baseline_avg_steps();
        for s in sweep {
            let d = s.delta;
            r.push(
                format!("sweep.{d}.guided_avg_steps"),
                format!("{:.4}", s.avg_steps()),
            );
            r.push_f64(
                format!("sweep.{d}.step_ratio"),
                base.and_then(|b| ratio(s.avg_steps(), b)),
            );
            r.push(
                format!("sweep.{d}.gate_hit_rate"),
                format!("{:.4}", s.gate_hit_rate()),
            );
            r.push(
                format!("sweep.{d}.anchor_exact_rate"),
                format!("{:.4}", s.anchor_exact_rate()),
            );
            r.push(format!("sweep.{d}.fallbacks"), s.fallbacks);
        }
    }
    print!("{}", r.render(ReportFormat::Machine));
}

/// Row `k` conditions on symbol `k - 1`; row 0 is the histogram.
fn markov_rows(symbols: &[Symbol]) -> Result<Vec<Bf16Table>> {
    let mut counts = vec![[0u32; BYTE_ALPHABET]; BYTE_ALPHABET];
    for w in symbols.windows(2) {
        counts[usize::from(w[0])][usize::from(w[1])] += 1;
    }
    let mut cache: Vec<Option<Vec<ras_core::Bf16>>> = vec![None; BYTE_ALPHABET];
    let mut rows = Vec::with_capacity(symbols.len());
    if symbols.is_empty() {
        return Ok(rows);
    }
    rows.push(histogram_model(symbols, BYTE_ALPHABET)?);
    for k in 1..symbols.len() {
        let prev = usize::from(symbols[k - 1]);
        if cache[prev].is_none() {
            let c = &counts[prev];
            let sum: u32 = c.iter().sum();
            let probs: Vec<f64> = c.iter().map(|&x| f64::from(x) / f64::from(sum)).collect();
            cache[prev] = Some(Bf16Table::from_reals(0, &probs)?.probs().to_vec());
        }
        rows.push(Bf16Table::new(k as u64, cache[prev].clone().unwrap())?);
    }
    Ok(rows)
}

fn cmd_gen(g: GenCommand) -> Result<()> {
    match g {
        GenCommand::Image {
            output,
            params,
            format,
        } => {
            let img = gen_gradient_image(params.width, params.height, params.noise, params.seed)?;
            let bytes = match format {
                ImageFormat::Pgm => img.to_pgm(),
                ImageFormat::Raw => img.pixels().to_vec(),
            };
            write(&output, &bytes)
        }
        GenCommand::Table {
            input,
            output,
            layout,
            model,
        } => {
            let symbols = load(&input, layout)?.data.symbols;
            let rows = match model {
                TableModel::Histogram if symbols.is_empty() => Vec::new(),
                TableModel::Histogram => {
                    let h = histogram_model(&symbols, BYTE_ALPHABET)?;
                    (0..symbols.len())
                        .map(|k| Bf16Table::new(k as u64, h.probs().to_vec()))
                        .collect::<ras_core::Result<_>>()?
                }
                TableModel::Markov => markov_rows(&symbols)?,
            };
            write(&output, &write_table_file(&rows)?)?;
            println!("rows = {}", rows.len());
            Ok(())
        }
    }
}
