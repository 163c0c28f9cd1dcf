//! End-to-end glue: models + lanes + container.

use crate::container::{parse_container, write_container, ContainerHeader};
use crate::corpus::histogram_model;
use crate::error::{Error, Result};
use crate::probtab::{quantize_table, Bf16Table, ModelSet, QuantizedModel};
use crate::rans::{decode_stream, encode_stream, DecodedStream, SymbolSearch};
use crate::Symbol;

/// Static model from the stream's own histogram; uniform when the stream is empty.
pub fn histogram_quantized(
    symbols: &[Symbol],
    alphabet_size: usize,
    prob_bits: u32,
) -> Result<QuantizedModel> {
    if symbols.is_empty() {
        return QuantizedModel::uniform(alphabet_size, prob_bits);
    }
    quantize_table(&histogram_model(symbols, alphabet_size)?, prob_bits)
}

/// Encodes and wraps the lanes in a container.
pub fn compress(symbols: &[Symbol], models: &ModelSet, lane_count: usize) -> Result<Vec<u8>> {
    let payloads = encode_stream(symbols, models, lane_count)?;
    let (table, alphabet_size) = match models {
        ModelSet::Static(m) => (Some(m.clone()), m.alphabet_size()),
        ModelSet::Adaptive { .. } => (None, models.alphabet_size().unwrap_or(1)),
    };
    let header = ContainerHeader {
        prob_bits: models.prob_bits(),
        lane_count,
        alphabet_size,
        symbol_count: symbols.len() as u64,
        table,
        payload_lens: payloads.iter().map(|p| p.len() as u32).collect(),
    };
    write_container(&header, &payloads)
}

/// Model set a container decodes with. External rows are required exactly
/// when the container carries no table.
pub fn container_models(
    header: &ContainerHeader,
    external: Option<Vec<Bf16Table>>,
) -> Result<ModelSet> {
    match (&header.table, external) {
        (Some(table), _) => Ok(ModelSet::Static(table.clone())),
        (None, Some(rows)) => {
            let set = ModelSet::adaptive(rows, header.prob_bits)?;
            if let Some(a) = set.alphabet_size() {
                if a != header.alphabet_size {
                    return Err(Error::ModelMismatch(format!(
                        "external table has {a} symbols, container expects {}",
                        header.alphabet_size
                    )));
                }
            }
            Ok(set)
        }
        (None, None) => Err(Error::ModelMismatch(
            "container needs an external table".into(),
        )),
    }
}

pub fn decompress<S: SymbolSearch + ?Sized>(
    bytes: &[u8],
    external: Option<Vec<Bf16Table>>,
    search: &mut S,
) -> Result<(ContainerHeader, DecodedStream)> {
    let (header, payloads) = parse_container(bytes)?;
    let models = container_models(&header, external)?;
    let decoded = decode_stream(&payloads, &models, header.symbol_count, search)?;
    Ok((header, decoded))
}
