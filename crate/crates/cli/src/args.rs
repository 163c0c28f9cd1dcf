use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ras_core::specdec::DEFAULT_DELTA;
use ras_core::{AnchorMode, Layout};

#[derive(Parser, Debug)]
#[command(
    name = "ras",
    version,
    about = "rANS entropy coder with anchor-guided decoding"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compress a file into a container
    Encode(EncodeArgs),
    /// Decompress a container
    Decode(DecodeArgs),
    /// Encode and decode in memory and report metrics
    Stats(StatsArgs),
    /// Metrics over a corpus directory or generated images
    Bench(BenchArgs),
    /// Generate test images or probability table files
    #[command(subcommand)]
    Gen(GenCommand),
}

#[derive(Args, Debug)]
pub struct CodingArgs {
    /// Probability precision in bits
    #[arg(long = "n", value_name = "BITS", default_value_t = 12)]
    pub prob_bits: u32,
    /// Number of interleaved lanes
    #[arg(long, value_name = "K", default_value_t = 1)]
    pub lanes: usize,
    /// How input bytes are read: auto, raw, pgm or image:<W>
    /// (encode defaults to raw so decoding reproduces the file; other commands to auto)
    #[arg(long, value_name = "LAYOUT", value_parser = parse_layout)]
    pub layout: Option<LayoutArg>,
}

#[derive(Args, Debug)]
pub struct PredictorArgs {
    /// Decode with the anchor-guided search
    #[arg(long)]
    pub guided: bool,
    /// Half-width of the speculative window
    #[arg(long, value_name = "DELTA", default_value_t = DEFAULT_DELTA)]
    pub delta: u32,
    /// Anchor predictor: image[:<W>], last or zero (default: image for image input, else last)
    #[arg(long, value_name = "MODE", value_parser = parse_anchor)]
    pub anchor: Option<AnchorArg>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Report format
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub report: ReportFormat,
}

#[derive(Args, Debug)]
pub struct EncodeArgs {
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub coding: CodingArgs,
    /// static (histogram, embedded) or external:<path> (per-position BF16 rows)
    #[arg(long, value_name = "MODE", default_value = "static", value_parser = parse_table)]
    pub table: TableArg,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Args, Debug)]
pub struct DecodeArgs {
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// external:<path> for containers without an embedded table
    #[arg(long, value_name = "MODE", value_parser = parse_table)]
    pub table: Option<TableArg>,
    #[command(flatten)]
    pub predictor: PredictorArgs,
    /// Also run the baseline search and compare every symbol
    #[arg(long, requires = "guided")]
    pub shadow_baseline: bool,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub coding: CodingArgs,
    #[arg(long, value_name = "MODE", default_value = "static", value_parser = parse_table)]
    pub table: TableArg,
    #[command(flatten)]
    pub predictor: PredictorArgs,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Corpus directory; generated gradient images are used when omitted
    pub corpus: Option<PathBuf>,
    #[command(flatten)]
    pub coding: CodingArgs,
    #[arg(long, value_name = "DELTA", default_value_t = DEFAULT_DELTA)]
    pub delta: u32,
    /// Anchor predictor: image[:<W>], last or zero (default: image for image input, else last)
    #[arg(long, value_name = "MODE", value_parser = parse_anchor)]
    pub anchor: Option<AnchorArg>,
    /// Repeat the aggregate for every delta in {0,1,2,4,8,16,32}
    #[arg(long)]
    pub sweep: bool,
    #[command(flatten)]
    pub gen: GenImageParams,
    /// Number of generated images when no corpus is given
    #[arg(long, default_value_t = 16)]
    pub images: u64,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Subcommand, Debug)]
pub enum GenCommand {
    /// Write a seeded gradient image
    Image {
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        params: GenImageParams,
        #[arg(long, value_enum, default_value_t = ImageFormat::Pgm)]
        format: ImageFormat,
    },
    /// Write one BF16 row per input symbol, usable with --table external:<path>
    Table {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, value_name = "LAYOUT", default_value = "auto", value_parser = parse_layout)]
        layout: LayoutArg,
        #[arg(long, value_enum, default_value_t = TableModel::Histogram)]
        model: TableModel,
    },
}

#[derive(Args, Debug, Clone, Copy)]
pub struct GenImageParams {
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    #[arg(long, default_value_t = 64)]
    pub height: usize,
    /// Uniform noise amplitude added to each pixel
    #[arg(long, default_value_t = 8)]
    pub noise: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Machine,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum ImageFormat {
    Pgm,
    Raw,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum TableModel {
    /// The input's histogram on every row
    Histogram,
    /// Row k is the distribution conditioned on symbol k-1
    Markov,
}

#[derive(Clone, Debug)]
pub enum TableArg {
    Static,
    External(PathBuf),
}

#[derive(Clone, Copy, Debug)]
pub enum LayoutArg {
    Auto,
    Fixed(Layout),
}

/// `image` without a width takes it from the input layout.
#[derive(Clone, Copy, Debug)]
pub enum AnchorArg {
    Image(Option<usize>),
    Last,
    Zero,
}

impl AnchorArg {
    pub fn resolve(self, image_width: Option<usize>) -> Result<AnchorMode, String> {
        Ok(match self {
            AnchorArg::Image(Some(width)) => AnchorMode::Image { width },
            AnchorArg::Image(None) => AnchorMode::Image {
                width: image_width
                    .ok_or("--anchor image needs a width: use image:<W> or an image layout")?,
            },
            AnchorArg::Last => AnchorMode::LastValue,
            AnchorArg::Zero => AnchorMode::Zero,
        })
    }
}

fn parse_width(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) | Err(_) => Err(format!("invalid width '{s}'")),
        Ok(w) => Ok(w),
    }
}

fn parse_table(s: &str) -> Result<TableArg, String> {
    match s.split_once(':') {
        None if s == "static" => Ok(TableArg::Static),
        Some(("external", path)) if !path.is_empty() => Ok(TableArg::External(path.into())),
        _ => Err("expected static or external:<path>".into()),
    }
}

fn parse_layout(s: &str) -> Result<LayoutArg, String> {
    match s.split_once(':') {
        None if s == "auto" => Ok(LayoutArg::Auto),
        None if s == "raw" => Ok(LayoutArg::Fixed(Layout::Raw)),
        None if s == "pgm" => Ok(LayoutArg::Fixed(Layout::Pgm)),
        Some(("image", w)) => Ok(LayoutArg::Fixed(Layout::Image {
            width: parse_width(w)?,
        })),
        _ => Err("expected auto, raw, pgm or image:<W>".into()),
    }
}

fn parse_anchor(s: &str) -> Result<AnchorArg, String> {
    match s.split_once(':') {
        None if s == "image" => Ok(AnchorArg::Image(None)),
        None if s == "last" => Ok(AnchorArg::Last),
        None if s == "zero" => Ok(AnchorArg::Zero),
        Some(("image", w)) => Ok(AnchorArg::Image(Some(parse_width(w)?))),
        _ => Err("expected image[:<W>], last or zero".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    #[test]
    fn value_parsers() {
        assert!(matches!(parse_table("static"), Ok(TableArg::Static)));
        match parse_table("external:t.rasp") {
            Ok(TableArg::External(p)) => assert_eq!(p, Path::new("t.rasp")),
            other => panic!("{other:?}"),
        }
        assert!(parse_table("external:").is_err());
        assert!(parse_table("dynamic").is_err());
        assert!(matches!(
            parse_layout("image:64"),
            Ok(LayoutArg::Fixed(Layout::Image { width: 64 }))
        ));
        assert!(parse_layout("image:0").is_err());
        assert!(matches!(parse_anchor("image"), Ok(AnchorArg::Image(None))));
        assert!(matches!(
            parse_anchor("image:9"),
            Ok(AnchorArg::Image(Some(9)))
        ));
        assert!(parse_anchor("left").is_err());
    }

    #[test]
    fn image_anchor_needs_width() {
        assert!(AnchorArg::Image(None).resolve(None).is_err());
        assert_eq!(
            AnchorArg::Image(None).resolve(Some(5)).unwrap(),
            AnchorMode::Image { width: 5 }
        );
    }

    #[test]
    fn cli_is_well_formed() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
