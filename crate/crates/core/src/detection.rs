//! Gated camera and single-photon counter models.
//!
//! Camera counts are Poisson with a mean built from the expected photons per
//! pulse at each pixel plus dark and coupling-scatter backgrounds, summed over
//! the gated pulses of one exposure. Every random draw comes from a ChaCha8
//! generator seeded with `master + frame_index`; the generator stream selects
//! the purpose so that signal and background draws never share a sequence.

use crate::error::{Error, Result};
use crate::raster::Image;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

/// Purposes for independent random streams under one seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Signal = 1,
    Background = 2,
    Spcm = 3,
    Fit = 4,
}

/// Generator for frame `index` under `master`, on a purpose-specific stream.
pub fn frame_rng(master: u64, index: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master.wrapping_add(index));
    rng.set_stream(stream as u64);
    rng
}

/// Coupling-light scatter into the camera, exponential in the probe-coupling
/// angle through two anchor points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingScatter {
    pub angle1_deg: f64,
    /// Counts per pixel per second at `angle1_deg`.
    pub rate1: f64,
    pub angle2_deg: f64,
    pub rate2: f64,
}

impl Default for CouplingScatter {
    fn default() -> Self {
        Self {
            angle1_deg: 3.3,
            rate1: 0.0,
            angle2_deg: 3.75,
            rate2: 0.0,
        }
    }
}

impl CouplingScatter {
    pub fn validate(&self) -> Result<()> {
        let p = "detection.ccd.scatter";
        if !(self.rate1 >= 0.0 && self.rate2 >= 0.0 && self.rate1.is_finite() && self.rate2.is_finite()) {
            return Err(Error::invalid(format!("{p}.rate1"), "rates must be finite and >= 0"));
        }
        if !(self.angle2_deg > self.angle1_deg) {
            return Err(Error::invalid(format!("{p}.angle2_deg"), "must exceed angle1_deg"));
        }
        if self.rate2 > self.rate1 {
            return Err(Error::invalid(format!("{p}.rate2"), "scatter must not grow with angle"));
        }
        if self.rate1 > 0.0 && self.rate2 == 0.0 {
            return Err(Error::invalid(format!("{p}.rate2"), "must be positive when rate1 is"));
        }
        Ok(())
    }

    /// Rate at a probe-coupling angle given in radians.
    pub fn rate(&self, angle: f64) -> f64 {
        if self.rate1 == 0.0 {
            return 0.0;
        }
        let s = (angle.to_degrees() - self.angle1_deg) / (self.angle2_deg - self.angle1_deg);
        self.rate1 * (self.rate2 / self.rate1).powf(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CCDModel {
    pub width: usize,
    pub height: usize,
    /// Physical sensor extent (m).
    pub sensor_width: f64,
    pub sensor_height: f64,
    pub quantum_efficiency: f64,
    /// Counts per pixel per second while the gate is open.
    pub dark_rate: f64,
    pub scatter: CouplingScatter,
    pub gate_width: f64,
    /// Gate opening relative to the expected arrival of the imaged pulse.
    pub gate_delay: f64,
}

impl Default for CCDModel {
    fn default() -> Self {
        Self {
            width: 256,
            height: 256,
            sensor_width: 13.3e-3,
            sensor_height: 13.3e-3,
            quantum_efficiency: 0.25,
            dark_rate: 0.0,
            scatter: CouplingScatter::default(),
            gate_width: 500e-9,
            gate_delay: 0.0,
        }
    }
}

impl CCDModel {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("detection.ccd.width", "sensor must have pixels"));
        }
        if !(self.sensor_width > 0.0 && self.sensor_height > 0.0) {
            return Err(Error::invalid("detection.ccd.sensor_width", "sensor extent must be positive"));
        }
        if !(0.0..=1.0).contains(&self.quantum_efficiency) {
            return Err(Error::invalid("detection.ccd.quantum_efficiency", "must lie in [0, 1]"));
        }
        if !(self.dark_rate >= 0.0 && self.dark_rate.is_finite()) {
            return Err(Error::invalid("detection.ccd.dark_rate", "must be finite and >= 0"));
        }
        if !(self.gate_width > 0.0) {
            return Err(Error::invalid("detection.ccd.gate_width", "must be positive"));
        }
        if !self.gate_delay.is_finite() {
            return Err(Error::invalid("detection.ccd.gate_delay", "must be finite"));
        }
        self.scatter.validate()
    }

    pub fn pixel_pitch(&self) -> (f64, f64) {
        (self.sensor_width / self.width as f64, self.sensor_height / self.height as f64)
    }

    /// Fraction of `[start, end]` covered by the gate.
    pub fn gate_overlap(&self, arrival: (f64, f64)) -> f64 {
        let (a, b) = arrival;
        let (g0, g1) = (self.gate_delay, self.gate_delay + self.gate_width);
        if b <= a {
            // instantaneous arrival
            return if (g0..=g1).contains(&a) { 1.0 } else { 0.0 };
        }
        ((b.min(g1) - a.max(g0)).max(0.0) / (b - a)).min(1.0)
    }

    /// Background counts per pixel per gate.
    pub fn background_per_gate(&self, coupling_angle: f64) -> f64 {
        (self.dark_rate + self.scatter.rate(coupling_angle)) * self.gate_width
    }
}

/// One gated exposure: `gates` pulses, each arriving within `arrival`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exposure {
    pub gates: u64,
    pub arrival: (f64, f64),
    /// Angle between the imaged probe and the coupling (rad), for scatter.
    pub coupling_angle: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameMeta {
    pub gate_open: f64,
    pub gate_width: f64,
    pub gates: u64,
    pub seed: u64,
    pub frame_index: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectorFrame {
    pub width: usize,
    pub height: usize,
    pub counts: Vec<u64>,
    pub meta: FrameMeta,
}

impl DetectorFrame {
    pub fn to_image(&self) -> Image {
        Image::from_fn(self.width, self.height, |x, y| self.counts[y * self.width + x] as f64)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Mean counts per pixel for one exposure. `intensity` is expected photons
/// per pulse per pixel; `None` means probes off.
pub fn expected_counts(intensity: Option<&Image>, exposure: &Exposure, ccd: &CCDModel) -> Result<Image> {
    let bg = ccd.background_per_gate(exposure.coupling_angle);
    let gates = exposure.gates as f64;
    match intensity {
        None => Ok(Image::from_fn(ccd.width, ccd.height, |_, _| gates * bg)),
        Some(img) => {
            if img.width() != ccd.width || img.height() != ccd.height {
                return Err(Error::DimensionMismatch(format!(
                    "intensity map {}x{} vs sensor {}x{}",
                    img.width(),
                    img.height(),
                    ccd.width,
                    ccd.height
                )));
            }
            if img.data().iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(Error::invalid("intensity", "must be finite and nonnegative"));
            }
            let gain = ccd.quantum_efficiency * ccd.gate_overlap(exposure.arrival);
            Ok(img.map(|v| gates * (gain * v + bg)))
        }
    }
}

fn poisson(rng: &mut impl Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    // `Poisson::new` only fails for nonpositive or non-finite means
    Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(0)
}

/// Draws Poisson counts with the given per-pixel means.
pub fn sample_counts(means: &Image, seed: u64, frame_index: u64, stream: Stream) -> Vec<u64> {
    let mut rng = frame_rng(seed, frame_index, stream);
    means.data().iter().map(|&m| poisson(&mut rng, m)).collect()
}

pub fn expose_frame(
    intensity: Option<&Image>,
    exposure: &Exposure,
    ccd: &CCDModel,
    seed: u64,
    frame_index: u64,
) -> Result<DetectorFrame> {
    expose_accumulated(intensity, exposure, ccd, seed, frame_index, 1)
}

/// Sum of `frames` independent exposures, drawn in one step: a sum of
/// independent Poisson counts is Poisson with the summed mean.
pub fn expose_accumulated(
    intensity: Option<&Image>,
    exposure: &Exposure,
    ccd: &CCDModel,
    seed: u64,
    frame_index: u64,
    frames: u64,
) -> Result<DetectorFrame> {
    let stream = if intensity.is_some() { Stream::Signal } else { Stream::Background };
    let means = expected_counts(intensity, exposure, ccd)?.scaled(frames as f64);
    Ok(DetectorFrame {
        width: ccd.width,
        height: ccd.height,
        counts: sample_counts(&means, seed, frame_index, stream),
        meta: FrameMeta {
            gate_open: ccd.gate_delay,
            gate_width: ccd.gate_width,
            gates: exposure.gates * frames,
            seed,
            frame_index,
        },
    })
}

pub fn accumulate(frames: &[DetectorFrame]) -> Result<Image> {
    let first = frames
        .first()
        .ok_or_else(|| Error::invalid("frames", "nothing to accumulate"))?;
    let mut sum = vec![0.0; first.counts.len()];
    for f in frames {
        if f.width != first.width || f.height != first.height {
            return Err(Error::DimensionMismatch(format!(
                "frame {}x{} vs {}x{}",
                f.width, f.height, first.width, first.height
            )));
        }
        for (s, &c) in sum.iter_mut().zip(&f.counts) {
            *s += c as f64;
        }
    }
    Image::from_vec(first.width, first.height, sum)
}

/// Signal minus background, clamped at zero for display.
pub fn subtract_background(image: &Image, background: &Image) -> Result<Image> {
    image.zip_with(background, |a, b| (a - b).max(0.0))
}

/// Signal minus background without clamping.
pub fn background_difference(image: &Image, background: &Image) -> Result<Image> {
    image.zip_with(background, |a, b| a - b)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SPCMModel {
    pub dead_time: f64,
    /// Overall detection efficiency, including losses before the counter.
    pub efficiency: f64,
}

impl Default for SPCMModel {
    fn default() -> Self {
        Self {
            dead_time: 50e-9,
            efficiency: 0.5,
        }
    }
}

impl SPCMModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.dead_time >= 0.0 && self.dead_time.is_finite()) {
            return Err(Error::invalid("detection.spcm.dead_time", "must be finite and >= 0"));
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::invalid("detection.spcm.efficiency", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Photon-number distribution of each pulse.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PhotonStatistics {
    Poisson,
    /// Exactly the (integer) mean in every pulse.
    Fixed,
}

/// Registered counts after non-paralyzable dead time: an arrival is kept if
/// it is at least `dead_time` after the last kept one. `times` must be sorted.
pub fn register_arrivals(times: &[f64], dead_time: f64) -> usize {
    let mut last = f64::NEG_INFINITY;
    let mut n = 0;
    for &t in times {
        if t - last >= dead_time {
            last = t;
            n += 1;
        }
    }
    n
}

/// Photon number per pulse inferred from counter clicks, corrected for
/// efficiency but not for dead time.
pub fn spcm_estimate(
    mean_photons: f64,
    pulse_width: f64,
    spcm: &SPCMModel,
    n_pulses: u64,
    statistics: PhotonStatistics,
    seed: u64,
) -> Result<f64> {
    spcm.validate()?;
    if !(pulse_width > 0.0) {
        return Err(Error::invalid("pulse_width", "must be positive"));
    }
    if n_pulses == 0 {
        return Err(Error::invalid("n_pulses", "must be at least 1"));
    }
    if !(mean_photons >= 0.0 && mean_photons.is_finite()) {
        return Err(Error::invalid("mean_photons", "must be finite and >= 0"));
    }
    if statistics == PhotonStatistics::Fixed && mean_photons.fract() != 0.0 {
        return Err(Error::invalid("mean_photons", "fixed photon number must be an integer"));
    }
    let mut rng = frame_rng(seed, 0, Stream::Spcm);
    let mut times = Vec::new();
    let mut clicks = 0u64;
    for _ in 0..n_pulses {
        let n = match statistics {
            PhotonStatistics::Poisson => poisson(&mut rng, mean_photons),
            PhotonStatistics::Fixed => mean_photons as u64,
        };
        times.clear();
        for _ in 0..n {
            let t: f64 = rng.random::<f64>() * pulse_width;
            if rng.random::<f64>() < spcm.efficiency {
                times.push(t);
            }
        }
        times.sort_by(f64::total_cmp);
        clicks += register_arrivals(&times, spcm.dead_time) as u64;
    }
    Ok(clicks as f64 / (spcm.efficiency * n_pulses as f64))
}
