//! Browser bindings: retrieved images at a chosen photon number, the EIT
//! transmission window, and a storage-time decay fit.

use imagemem::config::ExperimentConfig;
use imagemem::medium::eit_transmission;
use imagemem::raster::Image;
use imagemem::scenario::decay;
use imagemem::scenario::sweep::{self, UnitImages};
use imagemem::scenario::Setup;
use std::f64::consts::PI;
use std::path::Path;
use wasm_bindgen::prelude::*;

const DEFAULT_CONFIG: &str = include_str!("../../../configs/default.toml");

fn js(e: imagemem::error::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn default_config() -> Result<ExperimentConfig, JsError> {
    ExperimentConfig::from_toml(DEFAULT_CONFIG).map_err(js)
}

/// 8-bit grayscale scaled to the image maximum.
fn to_gray(img: &Image) -> Vec<u8> {
    let max = img.max();
    if max <= 0.0 {
        return vec![0; img.data().len()];
    }
    img.data().iter().map(|v| (255.0 * v / max).round() as u8).collect()
}

#[wasm_bindgen]
pub struct Retrieval {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
    metrics: [f64; 4],
}

#[wasm_bindgen]
impl Retrieval {
    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.width
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        self.height
    }

    /// Row-major 8-bit intensities of the background-subtracted image.
    pub fn pixels(&self) -> Vec<u8> {
        self.pixels.clone()
    }

    /// `[V1, R1, V2, R2]`.
    pub fn metrics(&self) -> Vec<f64> {
        self.metrics.to_vec()
    }
}

/// The default experiment with its noiseless per-photon images precomputed.
#[wasm_bindgen]
pub struct Memory {
    setup: Setup,
    unit: UnitImages,
}

#[wasm_bindgen]
impl Memory {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Result<Memory, JsError> {
        let setup = Setup::new(&default_config()?, Path::new(".")).map_err(js)?;
        let unit = sweep::unit_images(&setup).map_err(js)?;
        Ok(Memory { setup, unit })
    }

    /// Accumulates `frames` camera frames of both retrieved probes at
    /// `photons` per pulse and measures each channel.
    pub fn retrieve(&self, photons: f64, frames: u32, seed: u32) -> Result<Retrieval, JsError> {
        let mut setup = self.setup.clone();
        setup.cfg.scenario.seed = seed as u64;
        let img = sweep::sweep_image(&setup, &self.unit, photons, frames as u64, 0).map_err(js)?;
        let (v1, r1) = sweep::channel_metrics(&setup, &self.unit, &img, 0).map_err(js)?;
        let (v2, r2) = sweep::channel_metrics(&setup, &self.unit, &img, 1).map_err(js)?;
        Ok(Retrieval {
            width: img.width(),
            height: img.height(),
            pixels: to_gray(&img),
            metrics: [v1, r1, v2, r2],
        })
    }
}

/// Probe intensity transmission `|T|²` at `n` two-photon detunings spanning
/// `±span_mhz`, for a coupling Rabi frequency of `coupling_mhz` (both in MHz).
#[wasm_bindgen]
pub fn eit_curve(coupling_mhz: f64, span_mhz: f64, n: usize) -> Result<Vec<f64>, JsError> {
    let mut cfg = default_config()?;
    cfg.medium.coupling_rabi_hz = coupling_mhz * 1e6;
    let sys = cfg.lambda_system();
    sys.validate().map_err(js)?;
    let n = n.max(2);
    Ok((0..n)
        .map(|i| {
            let d = span_mhz * (2.0 * i as f64 / (n - 1) as f64 - 1.0);
            eit_transmission(2.0 * PI * d * 1e6, &sys).norm_sqr()
        })
        .collect())
}

#[wasm_bindgen]
pub struct DecayDemo {
    times: Vec<f64>,
    measured: Vec<f64>,
    fitted: Vec<f64>,
    tau: f64,
}

#[wasm_bindgen]
impl DecayDemo {
    /// Storage times (s).
    pub fn times(&self) -> Vec<f64> {
        self.times.clone()
    }

    /// Retrieved photons per pulse estimated from camera counts.
    pub fn measured(&self) -> Vec<f64> {
        self.measured.clone()
    }

    /// Fitted curve at the same storage times.
    pub fn fitted(&self) -> Vec<f64> {
        self.fitted.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// Stores probe 1 for a sweep of storage times with coherence time `tau_us`
/// and fits the counted retrieval.
#[wasm_bindgen]
pub fn decay_demo(tau_us: f64, photons: f64, frames: u32, seed: u32) -> Result<DecayDemo, JsError> {
    let mut cfg = default_config()?;
    cfg.medium.tau_coherence = tau_us * 1e-6;
    cfg.scenario.decay_photons_per_pulse = photons;
    cfg.scenario.decay_frames = frames as u64;
    cfg.scenario.storage_sweep = (0..10).map(|i| i as f64 * 3.0 * tau_us * 1e-6 / 9.0).collect();
    let setup = Setup::new(&cfg, Path::new(".")).map_err(js)?;
    let model = decay::model(&setup).map_err(js)?;
    let samples = model.measured(0, seed as u64);
    let fit = imagemem::analysis::fit_decay(&samples).map_err(js)?;
    Ok(DecayDemo {
        times: samples.iter().map(|s| s.0).collect(),
        measured: samples.iter().map(|s| s.1).collect(),
        fitted: samples.iter().map(|s| fit.eval(s.0)).collect(),
        tau: fit.tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transmission_peaks_on_two_photon_resonance() {
        let t = eit_curve(1.0, 2.0, 101).unwrap();
        assert!(t[50] > t[0] && t[50] > t[100]);
        assert!(t.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}
