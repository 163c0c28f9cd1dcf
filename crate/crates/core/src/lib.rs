//! Bit-exact rANS coding with BF16 probability tables and prediction-guided
//! decoding.
//!
//! * [`probtab`]: BF16 tables and their one-time conversion to fixed-point
//!   frequencies and CDFs.
//! * [`rans`]: byte-renormalized 32-bit rANS encoder/decoder and the baseline
//!   CDF search.
//! * [`specdec`]: anchor/window guided search that returns exactly what the
//!   baseline search returns, with probe accounting.
//! * [`container`]: multi-lane file format and round-robin lane scheduling.
//! * [`corpus`]: synthetic images, ingestion and metrics.
//! * [`codec`]: the pieces wired together.

pub mod codec;
pub mod container;
pub mod corpus;
pub mod error;
pub mod probtab;
pub mod rans;
pub mod specdec;

/// Symbol index into a model's alphabet.
pub type Symbol = u16;

pub use codec::{compress, decompress, histogram_quantized};
pub use container::{parse_container, write_container, ContainerHeader, LaneAssignment, TableMode};
pub use corpus::{ImageBuffer, Layout, StatsReport};
pub use error::{Error, Result};
pub use probtab::{quantize_table, Bf16, Bf16Table, ModelSet, QuantizedModel};
pub use rans::{BaselineSearch, CoderState, DecodedStream, SymbolSearch, RANS_L};
pub use specdec::{AnchorMode, GuidedSearch, PredictorConfig, SearchStats};
