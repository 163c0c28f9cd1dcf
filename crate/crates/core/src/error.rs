use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("alphabet of {alphabet_size} symbols does not fit in 2^{prob_bits} frequency slots")]
    InfeasibleAlphabet {
        alphabet_size: usize,
        prob_bits: u32,
    },

    #[error("invalid probability: {0}")]
    InvalidProbability(String),

    #[error("precision of {0} bits is outside 1..=16")]
    InvalidPrecision(u32),

    #[error("invalid frequency {freq} at cumulative {start} for 2^{prob_bits}")]
    InvalidFrequency {
        freq: u32,
        start: u32,
        prob_bits: u32,
    },

    #[error("symbol {symbol} at position {position} is outside the alphabet of {alphabet_size}")]
    SymbolOutOfRange {
        symbol: u32,
        position: usize,
        alphabet_size: usize,
    },

    #[error("stream truncated: {0}")]
    TruncatedStream(String),

    #[error("corrupt coder state: {0}")]
    CorruptState(String),

    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u8),

    #[error("frequency table invariant violated: {0}")]
    TableInvariantViolation(String),

    #[error("lane count {0} is outside 1..=64")]
    LaneCountOutOfRange(usize),

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("empty input")]
    EmptyInput,

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("bad dimensions: {0}")]
    BadDimensions(String),

    #[error("invalid predictor configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
