#![allow(dead_code)]

use std::path::PathBuf;

use ras_core::corpus::gen_gradient_image;
use ras_core::{compress, histogram_quantized, Bf16Table, ModelSet, Symbol};

pub struct Fixture {
    pub name: &'static str,
    pub symbols: Vec<Symbol>,
    pub models: ModelSet,
    pub lanes: usize,
    /// Rows that must accompany the container for external-table fixtures.
    pub external: Option<Vec<Bf16Table>>,
}

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn adaptive_rows(count: usize) -> Vec<Bf16Table> {
    (0..count)
        .map(|k| {
            let hot = k % 4;
            let probs: Vec<f64> = (0..4).map(|x| if x == hot { 0.7 } else { 0.1 }).collect();
            Bf16Table::from_reals(k as u64, &probs).unwrap()
        })
        .collect()
}

pub fn fixtures() -> Vec<Fixture> {
    let text: Vec<Symbol> = b"the quick brown fox jumps over the lazy dog"
        .iter()
        .map(|&b| b.into())
        .collect();
    let image = gen_gradient_image(8, 8, 4, 7).unwrap().symbols();
    let adaptive: Vec<Symbol> = (0..24u16)
        .map(|i| if i % 5 == 0 { (i + 1) % 4 } else { i % 4 })
        .collect();
    let rows = adaptive_rows(adaptive.len());
    vec![
        Fixture {
            name: "static_1lane",
            models: ModelSet::Static(histogram_quantized(&text, 256, 12).unwrap()),
            symbols: text,
            lanes: 1,
            external: None,
        },
        Fixture {
            name: "static_4lane",
            models: ModelSet::Static(histogram_quantized(&image, 256, 11).unwrap()),
            symbols: image,
            lanes: 4,
            external: None,
        },
        Fixture {
            name: "adaptive_2lane",
            models: ModelSet::adaptive(rows.clone(), 8).unwrap(),
            symbols: adaptive,
            lanes: 2,
            external: Some(rows),
        },
    ]
}

pub fn encode_fixture(f: &Fixture) -> Vec<u8> {
    compress(&f.symbols, &f.models, f.lanes).unwrap()
}

pub const FIXTURE_CHECKSUMS: &[(&str, &str)] = &[
    (
        "static_1lane.rasc",
        "f9dd72b04949c646d60ed941b05e5a4649a8ddab56e69e8a3667f722a60b0796",
    ),
    (
        "static_4lane.rasc",
        "1101bd60f9853d61faed266a4094256963b600981c90441d6703591ae77471a5",
    ),
    (
        "adaptive_2lane.rasc",
        "1c583b11549ad100aed11e8a989c24c88037fcde04b3fe5d87f4eed00b79e392",
    ),
    (
        "adaptive_2lane.rasp",
        "7e3a360658eb188cffa9297673560f5f460333b882bd40b2c42d34b3daad637a",
    ),
];

pub fn read_fixture(name: &str) -> Vec<u8> {
    std::fs::read(fixture_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}

pub fn fixture_external_rows(f: &Fixture) -> Option<Vec<Bf16Table>> {
    f.external.as_ref().map(|_| {
        ras_core::probtab::read_table_file(&read_fixture(&format!("{}.rasp", f.name))).unwrap()
    })
}

/// Header corruptions that still decode successfully.
pub fn accepted_header_corruptions(f: &Fixture) -> Vec<(usize, u8)> {
    use ras_core::{decompress, parse_container, BaselineSearch};
    let file = read_fixture(&format!("{}.rasc", f.name));
    let (h, _) = parse_container(&file).unwrap();
    let rows = fixture_external_rows(f);
    let mut accepted = Vec::new();
    for at in 0..h.encoded_len() {
        for v in 0..=255u8 {
            if v == file[at] {
                continue;
            }
            let mut bad = file.clone();
            bad[at] = v;
            if decompress(&bad, rows.clone(), &mut BaselineSearch::default()).is_ok() {
                accepted.push((at, v));
            }
        }
    }
    accepted
}

// ---------------------------------------------------------------------------
// random cases
// ---------------------------------------------------------------------------

use rand::Rng;

/// Random probability row: uniform, spike, near-zero or unnormalized.
pub fn random_probs<R: Rng>(rng: &mut R, alphabet: usize) -> Vec<f64> {
    let mut p: Vec<f64> = match rng.gen_range(0..5) {
        0 => (0..alphabet).map(|_| rng.gen::<f64>()).collect(),
        1 => {
            let mut v = vec![0.0; alphabet];
            for x in v.iter_mut() {
                if rng.gen_bool(0.3) {
                    *x = rng.gen::<f64>() * 1e-4;
                }
            }
            v[rng.gen_range(0..alphabet)] = 1.0;
            v
        }
        2 => (0..alphabet)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    0.0
                } else {
                    rng.gen::<f64>() * 1e-30
                }
            })
            .collect(),
        3 => (0..alphabet).map(|_| rng.gen::<f64>() * 900.0).collect(),
        _ => {
            // geometric-ish decay, normalized
            let r: f64 = rng.gen_range(0.5..0.99);
            let v: Vec<f64> = (0..alphabet).map(|x| r.powi(x as i32)).collect();
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect()
        }
    };
    if p.iter()
        .all(|&x| ras_core::Bf16::from_f64(x).to_bits() & 0x7FFF == 0)
    {
        let at = rng.gen_range(0..alphabet);
        p[at] = 0.5;
    }
    p
}

/// Samples from a model's quantized distribution.
pub fn sample_symbol<R: Rng>(rng: &mut R, model: &ras_core::QuantizedModel) -> Symbol {
    let slot = rng.gen_range(0..model.total());
    let cdf = model.cdf();
    (cdf.partition_point(|&c| c <= slot) - 1) as Symbol
}

pub struct Case {
    pub symbols: Vec<Symbol>,
    pub models: ModelSet,
    pub prob_bits: u32,
    pub alphabet: usize,
    pub lanes: usize,
}

pub fn random_case<R: Rng>(rng: &mut R) -> Case {
    let prob_bits = [4u32, 8, 12, 16][rng.gen_range(0..4)];
    let alphabet = rng.gen_range(2..=256usize.min(1 << prob_bits));
    let lanes = [1usize, 2, 4, 8][rng.gen_range(0..4)];
    let len = if rng.gen_bool(0.05) {
        0
    } else {
        rng.gen_range(0..=4096)
    };
    let adaptive = rng.gen_bool(0.1);
    let models = if adaptive {
        let rows = (0..len)
            .map(|k| Bf16Table::from_reals(k as u64, &random_probs(rng, alphabet)).unwrap())
            .collect();
        ModelSet::adaptive(rows, prob_bits).unwrap()
    } else {
        let t = Bf16Table::from_reals(0, &random_probs(rng, alphabet)).unwrap();
        ModelSet::Static(ras_core::quantize_table(&t, prob_bits).unwrap())
    };
    let uniform_draw = rng.gen_bool(0.2);
    let symbols = (0..len)
        .map(|i| {
            if uniform_draw {
                rng.gen_range(0..alphabet) as Symbol
            } else {
                sample_symbol(rng, &models.model_at(i).unwrap())
            }
        })
        .collect();
    Case {
        symbols,
        models,
        prob_bits,
        alphabet,
        lanes,
    }
}
