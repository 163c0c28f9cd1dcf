//! Workloads shared by the benchmarks.

use ras_core::corpus::gen_gradient_image;
use ras_core::{compress, histogram_quantized, AnchorMode, ModelSet, PredictorConfig, Symbol};

pub struct Workload {
    pub name: String,
    pub symbols: Vec<Symbol>,
    pub models: ModelSet,
    pub width: usize,
}

impl Workload {
    /// Seeded noisy gradient with its own histogram model.
    pub fn gradient(side: usize, noise: u32, seed: u64, prob_bits: u32) -> Self {
        let img = gen_gradient_image(side, side, noise, seed).expect("valid generator params");
        let symbols = img.symbols();
        let models =
            ModelSet::Static(histogram_quantized(&symbols, 256, prob_bits).expect("feasible"));
        Workload {
            name: format!("gradient{side}_noise{noise}"),
            symbols,
            models,
            width: side,
        }
    }

    pub fn container(&self, lanes: usize) -> Vec<u8> {
        compress(&self.symbols, &self.models, lanes).expect("encodable workload")
    }

    pub fn image_predictor(&self, delta: u32) -> PredictorConfig {
        PredictorConfig {
            delta,
            anchor: AnchorMode::Image { width: self.width },
        }
    }
}
