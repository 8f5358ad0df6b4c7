//! Experiment configuration: TOML with dotted section paths.
//!
//! Every field has a default, so an empty file is the default experiment.
//! [`ExperimentConfig::canonical`] flattens the configuration into sorted
//! `dotted.key = value` lines (itself valid TOML); its SHA-256 identifies the
//! configuration in run manifests.

use crate::analysis::Anchor;
use crate::detection::{CCDModel, SPCMModel};
use crate::error::{Error, Result};
use crate::medium::{AtomicCloud, LambdaSystem, StorageChannel};
use crate::sequencer::{MediumConfig, TimingConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSection,
    pub timing: TimingConfig,
    pub optics: OpticsSection,
    pub medium: MediumSection,
    pub cloud: AtomicCloud,
    pub probe1: ProbeSection,
    pub probe2: ProbeSection,
    pub detection: DetectionSection,
    pub analysis: AnalysisSection,
    pub output: OutputSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioSection::default(),
            timing: TimingConfig::default(),
            optics: OpticsSection::default(),
            medium: MediumSection::default(),
            cloud: AtomicCloud::default(),
            probe1: ProbeSection {
                label: "probe1".into(),
                angle_deg: 3.3,
                write_efficiency: 0.6,
                read_efficiency: 0.7001949373824671,
                glyph: 2,
                mask: String::new(),
            },
            probe2: ProbeSection {
                label: "probe2".into(),
                angle_deg: 3.75,
                write_efficiency: 0.6,
                read_efficiency: 0.46012810170847845,
                glyph: 8,
                mask: String::new(),
            },
            detection: DetectionSection::default(),
            analysis: AnalysisSection::default(),
            output: OutputSection::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSection {
    pub seed: u64,
    /// Photons per probe pulse for the temporal and dual-image runs.
    pub photons_per_pulse: f64,
    /// Channels written in the dual-image run.
    pub enable: Vec<u8>,
    /// Frames per run for the dual-image background test.
    pub dual_frames: u64,
    pub photon_sweep: Vec<f64>,
    /// Accumulated frames per sweep point.
    pub sweep_frames: Vec<u64>,
    /// Independent repeats per sweep point, for error bars.
    pub sweep_repeats: usize,
    pub storage_sweep: Vec<f64>,
    /// Accumulated frames per storage time.
    pub decay_frames: u64,
    pub decay_photons_per_pulse: f64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            seed: 1,
            photons_per_pulse: 305.0,
            enable: vec![1, 2],
            dual_frames: 100,
            photon_sweep: vec![305.0, 162.0, 80.0, 40.0, 22.0, 10.0, 5.3, 1.2],
            sweep_frames: vec![50, 50, 50, 200, 200, 500, 1000, 1000],
            sweep_repeats: 5,
            storage_sweep: (0..8).map(|i| i as f64 * 30e-6 / 7.0).collect(),
            decay_frames: 50,
            decay_photons_per_pulse: 305.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OpticsSection {
    /// Samples per side of the square field grid.
    pub grid: usize,
    pub f1: f64,
    pub f2: f64,
    pub wavelength: f64,
    /// Waist of the read-out coupling beam at the cloud (m).
    pub coupling_waist: f64,
    pub glyph_width: usize,
    pub glyph_height: usize,
    pub glyph_stroke: usize,
}

impl Default for OpticsSection {
    fn default() -> Self {
        Self {
            grid: 256,
            f1: 0.3,
            f2: 0.5,
            wavelength: crate::field::DEFAULT_WAVELENGTH,
            coupling_waist: 1.5e-3,
            glyph_width: 40,
            glyph_height: 64,
            glyph_stroke: 8,
        }
    }
}

/// Λ-system parameters with frequencies in Hz (cycles).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MediumSection {
    pub coupling_rabi_hz: f64,
    pub collective_coupling_hz: f64,
    pub excited_decay_hz: f64,
    /// Ground-coherence dephasing rate (1/s).
    pub ground_dephasing: f64,
    pub optical_depth: f64,
    pub tau_coherence: f64,
}

impl Default for MediumSection {
    fn default() -> Self {
        let sys = LambdaSystem::default();
        Self {
            coupling_rabi_hz: sys.coupling_rabi / (2.0 * PI),
            collective_coupling_hz: sys.collective_coupling / (2.0 * PI),
            excited_decay_hz: sys.excited_decay / (2.0 * PI),
            ground_dephasing: sys.ground_dephasing,
            optical_depth: sys.optical_depth,
            tau_coherence: MediumConfig::default().tau_coherence,
        }
    }
}

/// One probe channel. All fields but `mask` are required when the section
/// is present.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    pub label: String,
    /// Angle to the coupling beam (degrees).
    pub angle_deg: f64,
    pub write_efficiency: f64,
    pub read_efficiency: f64,
    /// Seven-segment digit used as the mask when `mask` is empty.
    pub glyph: u8,
    /// 8-bit PGM mask, relative to the config file.
    #[serde(default)]
    pub mask: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectionSection {
    /// Camera exposure per sweep frame (s).
    pub sweep_exposure: f64,
    /// Camera exposure per frame in the dual-image and decay runs (s).
    pub image_exposure: f64,
    pub ccd: CCDModel,
    pub spcm: SPCMModel,
}

impl Default for DetectionSection {
    fn default() -> Self {
        Self {
            sweep_exposure: 1.0,
            image_exposure: 0.3,
            ccd: CCDModel::default(),
            spcm: SPCMModel::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    pub anchor: Anchor,
    /// Half width of the column band averaged into the profile.
    pub band_half_width: usize,
    /// Region of interest: pixels above `roi_threshold · max` of the expected
    /// leakage image, padded by `roi_margin`.
    pub roi_threshold: f64,
    pub roi_margin: usize,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            anchor: Anchor::Centroid,
            band_half_width: 2,
            roi_threshold: 0.05,
            roi_margin: 4,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
}

/// Quantities derived from a configuration, echoed by `validate`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Derived {
    pub slots_per_window: usize,
    pub probe_pulses_per_second: f64,
    pub mixing_angle: f64,
    pub group_velocity: f64,
    pub transit_time: f64,
    pub compressed_pulse_length: f64,
    pub delta_angle_deg: f64,
    pub delta_k: f64,
    pub magnification: f64,
}

impl ExperimentConfig {
    /// Parses TOML text, reporting syntax and type errors with line and column.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map(|s| line_col(text, s.start)).unwrap_or((0, 0));
            Error::ConfigParse {
                line,
                column,
                message: e.message().trim().to_string(),
            }
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Checks every section; the first violation is reported with its field path.
    pub fn validate(&self) -> Result<()> {
        self.timing.validate()?;
        self.medium_config().validate()?;
        self.detection.ccd.validate()?;
        self.detection.spcm.validate()?;
        self.channels()?;

        let o = &self.optics;
        if o.grid < 16 || !o.grid.is_multiple_of(2) {
            return Err(Error::invalid("optics.grid", "must be an even number >= 16"));
        }
        for (name, v) in [
            ("optics.f1", o.f1),
            ("optics.f2", o.f2),
            ("optics.wavelength", o.wavelength),
            ("optics.coupling_waist", o.coupling_waist),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, "must be positive and finite"));
            }
        }
        if o.glyph_width > o.grid || o.glyph_height > o.grid {
            return Err(Error::invalid("optics.glyph_height", "glyph must fit in the grid"));
        }
        if self.detection.ccd.width != o.grid || self.detection.ccd.height != o.grid {
            return Err(Error::invalid("detection.ccd.width", "sensor pixel grid must match optics.grid"));
        }
        for (name, v) in [
            ("detection.sweep_exposure", self.detection.sweep_exposure),
            ("detection.image_exposure", self.detection.image_exposure),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, "must be positive and finite"));
            }
        }

        let s = &self.scenario;
        if !(s.photons_per_pulse > 0.0 && s.photons_per_pulse.is_finite()) {
            return Err(Error::invalid("scenario.photons_per_pulse", "must be positive"));
        }
        if !(s.decay_photons_per_pulse > 0.0 && s.decay_photons_per_pulse.is_finite()) {
            return Err(Error::invalid("scenario.decay_photons_per_pulse", "must be positive"));
        }
        if s.photon_sweep.is_empty() || s.photon_sweep.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::invalid("scenario.photon_sweep", "values must be positive"));
        }
        if s.sweep_frames.len() != s.photon_sweep.len() {
            return Err(Error::invalid(
                "scenario.sweep_frames",
                format!("needs one entry per photon_sweep value ({})", s.photon_sweep.len()),
            ));
        }
        if s.sweep_frames.contains(&0) || s.decay_frames == 0 || s.dual_frames < 2 {
            return Err(Error::invalid("scenario.sweep_frames", "frame counts must be positive (dual_frames >= 2)"));
        }
        if s.sweep_repeats == 0 {
            return Err(Error::invalid("scenario.sweep_repeats", "must be at least 1"));
        }
        if s.storage_sweep.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
            return Err(Error::invalid("scenario.storage_sweep", "storage times must be finite and >= 0"));
        }
        if s.enable.is_empty() || s.enable.iter().any(|c| *c != 1 && *c != 2) {
            return Err(Error::invalid("scenario.enable", "must be a nonempty subset of [1, 2]"));
        }
        let a = &self.analysis;
        if !(a.roi_threshold > 0.0 && a.roi_threshold < 1.0) {
            return Err(Error::invalid("analysis.roi_threshold", "must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn lambda_system(&self) -> LambdaSystem {
        let m = &self.medium;
        LambdaSystem {
            coupling_rabi: 2.0 * PI * m.coupling_rabi_hz,
            collective_coupling: 2.0 * PI * m.collective_coupling_hz,
            excited_decay: 2.0 * PI * m.excited_decay_hz,
            ground_dephasing: m.ground_dephasing,
            optical_depth: m.optical_depth,
        }
    }

    pub fn medium_config(&self) -> MediumConfig {
        MediumConfig {
            system: self.lambda_system(),
            cloud: self.cloud,
            tau_coherence: self.medium.tau_coherence,
        }
    }

    pub fn channels(&self) -> Result<[StorageChannel; 2]> {
        let make = |p: &ProbeSection, path: &str| {
            if p.glyph > 9 {
                return Err(Error::invalid(format!("{path}.glyph"), "must be a digit 0-9"));
            }
            StorageChannel::new(p.label.clone(), p.angle_deg.to_radians(), p.write_efficiency, p.read_efficiency)
                .map_err(|e| match e {
                    Error::InvalidParameter { reason, field } => Error::InvalidParameter {
                        field: format!("{path}.{}", field.rsplit('.').next().unwrap_or(&field)),
                        reason,
                    },
                    other => other,
                })
        };
        let c1 = make(&self.probe1, "probe1")?;
        let c2 = make(&self.probe2, "probe2")?;
        if c1.label == c2.label {
            return Err(Error::invalid("probe2.label", "channel labels must differ"));
        }
        Ok([c1, c2])
    }

    /// Mask path for a channel, resolved against `base` (the config directory).
    pub fn mask_path(&self, channel: usize, base: &Path) -> Option<PathBuf> {
        let p = if channel == 0 { &self.probe1 } else { &self.probe2 };
        (!p.mask.is_empty()).then(|| base.join(&p.mask))
    }

    pub fn derived(&self) -> Result<Derived> {
        let medium = self.medium_config();
        let theta = crate::medium::dark_state_mixing(&medium.system)?;
        let vg = medium.group_velocity()?;
        let delta = (self.probe2.angle_deg - self.probe1.angle_deg).abs();
        Ok(Derived {
            slots_per_window: self.timing.slots_per_window(),
            probe_pulses_per_second: self.timing.pulses_per_second(),
            mixing_angle: theta,
            group_velocity: vg,
            transit_time: self.cloud.length / vg,
            compressed_pulse_length: vg * self.timing.probe_width,
            delta_angle_deg: delta,
            delta_k: 2.0 * PI / self.optics.wavelength * delta.to_radians().sin(),
            magnification: self.optics.f2 / self.optics.f1,
        })
    }

    /// Sorted `dotted.key = value` lines, one per leaf.
    pub fn canonical(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes to JSON");
        let mut lines = Vec::new();
        flatten("", &value, &mut lines);
        lines.sort();
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

fn flatten(prefix: &str, value: &serde_json::Value, out: &mut Vec<String>) {
    match value {
        serde_json::Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        serde_json::Value::Null => {}
        leaf => out.push(format!("{prefix} = {leaf}")),
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}
