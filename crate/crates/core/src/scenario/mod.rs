//! End-to-end experiment runs that write images, tables and a manifest.
//!
//! Each run builds a [`Setup`] from an [`ExperimentConfig`]: the two probe
//! masks, their modes at the cloud plane, and the camera mapping. Probe
//! directions are measured from the bisector of the two probes, which is the
//! optical axis of the relay, so the two images land side by side on the
//! camera.

pub mod decay;
pub mod dual;
pub mod output;
pub mod sweep;
pub mod temporal;
pub mod validate;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::field::{load_mask, ComplexFieldGrid, OpticalLayout, TransverseGrid};
use crate::glyph::{self, GlyphStyle};
use crate::medium::{crosstalk_coefficient, SpinWave, StorageChannel};
use crate::pgm;
use crate::raster::{GrayImage, Image, Roi};
use crate::sequencer::{ChannelInput, MediumConfig, TrialRecord};
use num_complex::Complex64;
use output::{ManifestEntry, OutputSink};
use serde::Serialize;
use std::path::Path;

/// Named experiment runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    Temporal,
    DualImage,
    PhotonSweep,
    Decay,
    Validate,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Temporal => "temporal",
            Scenario::DualImage => "dual-image",
            Scenario::PhotonSweep => "photon-sweep",
            Scenario::Decay => "decay",
            Scenario::Validate => "validate",
        }
    }
}

/// Command-line overrides applied on top of a loaded configuration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Overrides {
    pub seed: Option<u64>,
    /// Replaces every frame count.
    pub frames: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(seed) = self.seed {
            cfg.scenario.seed = seed;
        }
        if let Some(n) = self.frames {
            let s = &mut cfg.scenario;
            s.sweep_frames.iter_mut().for_each(|f| *f = n);
            s.dual_frames = n;
            s.decay_frames = n;
        }
    }
}

/// One row of the metrics table. Quantities that do not apply are `None`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MetricRow {
    pub photons_per_pulse: f64,
    pub channel: String,
    pub visibility: Option<f64>,
    pub similarity: Option<f64>,
    pub efficiency: Option<f64>,
    pub storage_time: Option<f64>,
    pub tau: Option<f64>,
    pub residual: Option<f64>,
}

pub const METRIC_HEADER: [&str; 8] = [
    "photons_per_pulse",
    "channel",
    "V",
    "R",
    "efficiency",
    "storage_time",
    "tau",
    "residual",
];

impl MetricRow {
    fn cells(&self) -> Vec<String> {
        use output::cell;
        vec![
            self.photons_per_pulse.to_string(),
            self.channel.clone(),
            cell(self.visibility),
            cell(self.similarity),
            cell(self.efficiency),
            cell(self.storage_time),
            cell(self.tau),
            cell(self.residual),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub config_hash: String,
    pub rows: Vec<MetricRow>,
    pub files: Vec<ManifestEntry>,
}

/// Geometry and inputs shared by every scenario.
#[derive(Clone, Debug)]
pub struct Setup {
    pub cfg: ExperimentConfig,
    pub medium: MediumConfig,
    pub layout: OpticalLayout,
    pub channels: [StorageChannel; 2],
    pub masks: [GrayImage; 2],
    /// Unit-energy probe modes at the cloud plane, tilted by each probe's
    /// angle to the optical axis.
    pub inputs: [ChannelInput; 2],
    /// Tilt (rad/m) applied to each probe at the cloud plane.
    pub tilts: [[f64; 2]; 2],
    /// Angle between the relay axis (the probe bisector) and the coupling
    /// beam; sets the coupling scatter reaching the camera.
    pub axis_angle: f64,
    pub mask_grid: TransverseGrid,
    pub cloud_grid: TransverseGrid,
    /// Gated pulses integrated per camera frame.
    pub gates_sweep: u64,
    pub gates_image: u64,
}

impl Setup {
    /// Validates `cfg` and builds the optics. Mask paths are resolved against `base`.
    pub fn new(cfg: &ExperimentConfig, base: &Path) -> Result<Self> {
        cfg.validate()?;
        let o = &cfg.optics;
        let n = o.grid;
        let ccd = &cfg.detection.ccd;
        let layout = OpticalLayout::new(o.f1, o.f2)?;
        let (px, py) = ccd.pixel_pitch();
        // mask samples map one-to-one onto camera pixels through the relay
        let mask_grid = TransverseGrid::new(n, n, px / layout.magnification(), py / layout.magnification())?;
        let cloud_grid = mask_grid.fourier_plane(o.wavelength, o.f1);

        let style = GlyphStyle {
            canvas: n,
            width: o.glyph_width,
            height: o.glyph_height,
            stroke: o.glyph_stroke,
        };
        let mut masks = Vec::with_capacity(2);
        for (i, probe) in [&cfg.probe1, &cfg.probe2].into_iter().enumerate() {
            let mask = match cfg.mask_path(i, base) {
                Some(path) => pgm::read(&path)?.to_gray8(),
                None => glyph::digit(probe.glyph, style)?,
            };
            masks.push(mask);
        }
        let masks: [GrayImage; 2] = masks.try_into().expect("two masks");

        let channels = cfg.channels()?;
        let k = 2.0 * std::f64::consts::PI / o.wavelength;
        let axis = 0.5 * (channels[0].probe_angle.sin() + channels[1].probe_angle.sin());
        let mut inputs = Vec::with_capacity(2);
        let mut tilts = [[0.0; 2]; 2];
        for (i, (mask, ch)) in masks.iter().zip(&channels).enumerate() {
            let field = load_mask(mask, mask_grid, 1.0)?.with_wavelength(o.wavelength);
            let at_cloud = layout.mask_to_cloud(&field)?.field;
            let tilt = cloud_grid.snap_wavevector([k * (ch.probe_angle.sin() - axis), 0.0]);
            tilts[i] = tilt;
            inputs.push(ChannelInput {
                channel: ch.clone(),
                mode: at_cloud.tilted(tilt),
            });
        }
        let inputs: [ChannelInput; 2] = inputs.try_into().expect("two channels");

        let pulses = cfg.timing.pulses_per_second();
        Ok(Self {
            cfg: cfg.clone(),
            medium: cfg.medium_config(),
            layout,
            channels,
            masks,
            inputs,
            tilts,
            axis_angle: axis.asin(),
            mask_grid,
            cloud_grid,
            gates_sweep: (cfg.detection.sweep_exposure * pulses).round() as u64,
            gates_image: (cfg.detection.image_exposure * pulses).round() as u64,
        })
    }

    /// Expected photons per camera pixel for a field at the cloud plane.
    pub fn camera_image(&self, cloud_field: &ComplexFieldGrid) -> Result<Image> {
        let at_camera = self.layout.cloud_to_camera(cloud_field)?.field;
        let ccd = &self.cfg.detection.ccd;
        let (px, py) = ccd.pixel_pitch();
        Ok(crate::field::resample_to_sensor(&at_camera, ccd.width, ccd.height, px, py))
    }

    /// Camera image of channel `i`'s probe mode carrying `photons`.
    pub fn channel_image(&self, i: usize, photons: f64) -> Result<Image> {
        self.camera_image(&self.inputs[i].mode.with_energy(photons)?)
    }

    /// Region of channel `i` on the camera, from its unit-energy image.
    pub fn channel_roi(&self, i: usize) -> Result<Roi> {
        let a = &self.cfg.analysis;
        self.channel_image(i, 1.0)?
            .support(a.roi_threshold, a.roi_margin)
            .ok_or(Error::UndefinedMetric("channel image is empty"))
    }

    /// Coefficient with which wave `i`'s stored grating reads out along
    /// probe `j`'s phase-matched direction.
    pub fn crosstalk(&self, wave: &SpinWave, j: usize) -> Result<f64> {
        let k = self.channels[j].grating_wavevector(self.cfg.optics.wavelength);
        crosstalk_coefficient(wave, k, self.cfg.optics.coupling_waist, &self.medium.cloud)
    }

    /// Expected leaked and retrieved photons per camera pixel for one trial.
    /// `recs` pairs each record with its channel index. Retrieved light from
    /// wave `i` reaches probe `j`'s position scaled by the crosstalk
    /// coefficient.
    pub fn trial_images(&self, recs: &[(usize, &TrialRecord)]) -> Result<(Image, Image)> {
        let ccd = &self.cfg.detection.ccd;
        let mut leak = Image::zeros(ccd.width, ccd.height);
        let mut retrieved = Image::zeros(ccd.width, ccd.height);
        for &(i, rec) in recs {
            leak = leak.add(&self.camera_image(&rec.leakage_field)?)?;
            for j in 0..2 {
                let c = if i == j { 1.0 } else { self.crosstalk(&rec.wave, j)? };
                if c == 0.0 || rec.retrieved_energy == 0.0 {
                    continue;
                }
                let dk = [self.tilts[j][0] - self.tilts[i][0], self.tilts[j][1] - self.tilts[i][1]];
                let field = rec.retrieved_field.tilted(dk).scaled(Complex64::new(c, 0.0));
                retrieved = retrieved.add(&self.camera_image(&field)?)?;
            }
        }
        Ok((leak, retrieved))
    }

    pub fn config_hash(&self) -> String {
        self.cfg.hash()
    }
}

fn write_common(sink: &mut OutputSink, setup: &Setup) -> Result<()> {
    sink.write_text("config.toml", "config", &setup.cfg.canonical())?;
    sink.write_mask("mask_probe1.pgm", &setup.masks[0])?;
    sink.write_mask("mask_probe2.pgm", &setup.masks[1])
}

fn write_metrics(sink: &mut OutputSink, rows: &[MetricRow]) -> Result<()> {
    let cells: Vec<Vec<String>> = rows.iter().map(MetricRow::cells).collect();
    sink.write_csv("metrics.csv", "metrics", &METRIC_HEADER, &cells)
}

/// Evaluates `f` over `items`, in parallel when the feature is on. Results
/// keep the input order.
pub(crate) fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Loads the config, applies overrides and runs `scenario` into `out`.
pub fn run(scenario: Scenario, config_path: &Path, out: &Path, overrides: Overrides) -> Result<ScenarioReport> {
    let mut cfg = ExperimentConfig::load(config_path)?;
    overrides.apply(&mut cfg);
    let base = config_path.parent().unwrap_or(Path::new("."));
    if scenario == Scenario::Validate {
        return validate::run(&cfg, out);
    }
    let setup = Setup::new(&cfg, base)?;
    match scenario {
        Scenario::Temporal => temporal::run(&setup, out),
        Scenario::DualImage => dual::run(&setup, &cfg.scenario.enable, out),
        Scenario::PhotonSweep => sweep::run(&setup, out),
        Scenario::Decay => decay::run(&setup, out),
        Scenario::Validate => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_images_sit_side_by_side() {
        let setup = Setup::new(&ExperimentConfig::default(), Path::new(".")).unwrap();
        let r1 = setup.channel_roi(0).unwrap();
        let r2 = setup.channel_roi(1).unwrap();
        // disjoint along x
        assert!(r1.x0 + r1.width <= r2.x0 || r2.x0 + r2.width <= r1.x0, "{r1:?} {r2:?}");
        let img = setup.channel_image(0, 10.0).unwrap();
        assert!((img.sum() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn overrides_replace_seed_and_frames() {
        let mut cfg = ExperimentConfig::default();
        Overrides {
            seed: Some(9),
            frames: Some(3),
        }
        .apply(&mut cfg);
        assert_eq!(cfg.scenario.seed, 9);
        assert!(cfg.scenario.sweep_frames.iter().all(|&f| f == 3));
        assert_eq!(cfg.scenario.decay_frames, 3);
    }
}
