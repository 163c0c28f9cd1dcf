mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ras_core::{
    compress, decompress, histogram_quantized, parse_container, AnchorMode, BaselineSearch,
    Bf16Table, Error, GuidedSearch, ModelSet, PredictorConfig, QuantizedModel, Symbol,
};

fn external(models: &ModelSet) -> Option<Vec<Bf16Table>> {
    match models {
        ModelSet::Adaptive { rows, .. } => Some(rows.clone()),
        ModelSet::Static(_) => None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn random_cases_roundtrip(seed in any::<u64>()) {
        let case = common::random_case(&mut ChaCha8Rng::seed_from_u64(seed));
        let file = compress(&case.symbols, &case.models, case.lanes).unwrap();
        let (h, out) = decompress(&file, external(&case.models), &mut BaselineSearch::default()).unwrap();
        prop_assert_eq!(h.symbol_count, case.symbols.len() as u64);
        prop_assert_eq!(out.symbols, case.symbols);
    }

    #[test]
    fn histogram_models_roundtrip(
        symbols in prop::collection::vec(0u16..40, 0..2000),
        n in 6u32..=16,
        lanes in 1usize..=64,
    ) {
        let models = ModelSet::Static(histogram_quantized(&symbols, 40, n).unwrap());
        let file = compress(&symbols, &models, lanes).unwrap();
        let (_, out) = decompress(&file, None, &mut BaselineSearch::default()).unwrap();
        prop_assert_eq!(out.symbols, symbols);
    }

    #[test]
    fn guided_matches_baseline(
        symbols in prop::collection::vec(0u16..64, 1..1500),
        delta in 0u32..=64,
        width in 1usize..50,
        mode in 0u8..3,
        lanes in 1usize..=8,
    ) {
        let models = ModelSet::Static(histogram_quantized(&symbols, 64, 12).unwrap());
        let file = compress(&symbols, &models, lanes).unwrap();
        let anchor = match mode {
            0 => AnchorMode::Image { width },
            1 => AnchorMode::LastValue,
            _ => AnchorMode::Zero,
        };
        let mut guided = GuidedSearch::new(PredictorConfig { delta, anchor }).with_shadow_baseline();
        let (_, g) = decompress(&file, None, &mut guided).unwrap();
        let (_, b) = decompress(&file, None, &mut BaselineSearch::default()).unwrap();
        prop_assert_eq!(g, b);
        prop_assert_eq!(guided.stats().shadow_mismatches, 0);
        prop_assert_eq!(guided.stats().symbols_decoded, symbols.len() as u64);
    }

    #[test]
    fn lane_count_changes_only_layout(
        symbols in prop::collection::vec(0u16..16, 0..600),
    ) {
        let models = ModelSet::Static(histogram_quantized(&symbols, 16, 10).unwrap());
        for lanes in [1usize, 2, 3, 4, 8, 64] {
            let file = compress(&symbols, &models, lanes).unwrap();
            let (h, _) = parse_container(&file).unwrap();
            prop_assert_eq!(h.lane_count, lanes);
            let (_, out) = decompress(&file, None, &mut BaselineSearch::default()).unwrap();
            prop_assert_eq!(&out.symbols, &symbols);
        }
    }

    #[test]
    fn truncation_never_decodes(symbols in prop::collection::vec(0u16..8, 1..300), cut in 1usize..64) {
        let models = ModelSet::Static(histogram_quantized(&symbols, 8, 8).unwrap());
        let file = compress(&symbols, &models, 2).unwrap();
        let cut = cut.min(file.len());
        let r = decompress(&file[..file.len() - cut], None, &mut BaselineSearch::default());
        prop_assert!(r.is_err());
    }
}

#[test]
fn every_precision_and_extreme_alphabets() {
    for n in [1u32, 4, 8, 12, 16] {
        for alphabet in [1usize, 2, 1 << n.min(8)] {
            if alphabet > 1 << n {
                continue;
            }
            let symbols: Vec<Symbol> = (0..500).map(|i| ((i * 7) % alphabet) as Symbol).collect();
            let models = ModelSet::Static(histogram_quantized(&symbols, alphabet, n).unwrap());
            let file = compress(&symbols, &models, 3).unwrap();
            let (_, out) = decompress(&file, None, &mut BaselineSearch::default()).unwrap();
            assert_eq!(out.symbols, symbols, "n {n}, alphabet {alphabet}");
        }
    }
}

#[test]
fn empty_stream_roundtrips() {
    let models = ModelSet::Static(QuantizedModel::uniform(256, 12).unwrap());
    let file = compress(&[], &models, 4).unwrap();
    let (h, out) = decompress(&file, None, &mut BaselineSearch::default()).unwrap();
    assert_eq!(h.symbol_count, 0);
    assert!(out.symbols.is_empty());
    assert_eq!(out.consumed, vec![4; 4]);
}

#[test]
fn adaptive_container_needs_its_rows() {
    let rows: Vec<Bf16Table> = (0..10)
        .map(|k| Bf16Table::from_reals(k, &[1.0, 2.0, (k + 1) as f64]).unwrap())
        .collect();
    let models = ModelSet::adaptive(rows.clone(), 8).unwrap();
    let symbols: Vec<Symbol> = (0..10).map(|k| (k % 3) as Symbol).collect();
    let file = compress(&symbols, &models, 2).unwrap();
    assert!(matches!(
        decompress(&file, None, &mut BaselineSearch::default()),
        Err(Error::ModelMismatch(_))
    ));
    assert!(matches!(
        decompress(
            &file,
            Some(rows[..5].to_vec()),
            &mut BaselineSearch::default()
        ),
        Err(Error::ModelMismatch(_))
    ));
    let (_, out) = decompress(&file, Some(rows), &mut BaselineSearch::default()).unwrap();
    assert_eq!(out.symbols, symbols);
}

#[test]
fn out_of_alphabet_symbol_is_rejected() {
    let models = ModelSet::Static(QuantizedModel::uniform(4, 8).unwrap());
    assert!(matches!(
        compress(&[0, 1, 4], &models, 1),
        Err(Error::SymbolOutOfRange {
            symbol: 4,
            position: 2,
            ..
        })
    ));
}
