//! Retrieved energy and image quality against storage time, with an
//! exponential fit for the coherence time.

use super::output::OutputSink;
use super::sweep::{channel_visibility, UnitImages};
use super::{par_map, write_common, write_metrics, MetricRow, ScenarioReport, Setup};
use crate::analysis::{fit_decay, similarity, Axis, DecayFit};
use crate::detection::{expected_counts, frame_rng, subtract_background, expose_accumulated, Exposure, Stream};
use crate::error::{Error, Result};
use crate::raster::{Image, Roi};
use crate::sequencer::{run_trial, Slot, TrialRecord};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use std::path::Path;

const CURVE_SAMPLES: usize = 200;

/// One storage time with both probes stored together.
#[derive(Clone, Debug)]
pub struct DecayPoint {
    pub storage_time: f64,
    pub records: Vec<TrialRecord>,
    pub expected_retrieved: Image,
    /// Mean signal and background counts in each channel's region over the
    /// accumulated frames.
    pub region_means: [(f64, f64); 2],
    /// Noiseless retrieved image against the channel's leakage image.
    pub similarity: [f64; 2],
}

#[derive(Clone, Debug)]
pub struct DecayModel {
    pub points: Vec<DecayPoint>,
    pub unit: UnitImages,
    /// Counts per retrieved photon in a region, for converting measured
    /// counts back to photons per pulse.
    pub counts_per_photon: f64,
    pub exposure: Exposure,
}

fn region_sum(img: &Image, roi: Roi) -> f64 {
    let mut s = 0.0;
    for y in roi.y0..roi.y0 + roi.height {
        for x in roi.x0..roi.x0 + roi.width {
            s += img.get(x, y);
        }
    }
    s
}

pub fn model(setup: &Setup) -> Result<DecayModel> {
    let cfg = &setup.cfg;
    let s = &cfg.scenario;
    if s.storage_sweep.len() < 4 {
        return Err(Error::invalid(
            "scenario.storage_sweep",
            format!("need at least 4 storage times, got {}", s.storage_sweep.len()),
        ));
    }
    let ccd = &cfg.detection.ccd;
    let exposure = Exposure {
        gates: setup.gates_image,
        arrival: (0.0, cfg.timing.switch_off_fraction * cfg.timing.probe_width),
        coupling_angle: setup.axis_angle,
    };
    let unit = super::sweep::unit_images(setup)?;
    let rois = unit.rois;
    let frames = s.decay_frames as f64;
    let photons = s.decay_photons_per_pulse;

    let points = par_map(&s.storage_sweep, |&t| -> Result<DecayPoint> {
        let slot = Slot::isolated(&cfg.timing, t)?;
        let records = run_trial(&slot, &cfg.timing, &setup.medium, &setup.inputs, photons)?;
        let pairs: Vec<(usize, &TrialRecord)> = records.iter().enumerate().collect();
        let (_, expected_retrieved) = setup.trial_images(&pairs)?;
        let signal = expected_counts(Some(&expected_retrieved), &exposure, ccd)?;
        let background = expected_counts(None, &exposure, ccd)?;
        let mut region_means = [(0.0, 0.0); 2];
        let mut sim = [0.0; 2];
        for c in 0..2 {
            region_means[c] = (
                frames * region_sum(&signal, rois[c]),
                frames * region_sum(&background, rois[c]),
            );
            let own = setup.trial_images(&pairs[c..c + 1])?.1;
            sim[c] = similarity(&own.crop(rois[c])?, &unit.leak_per_channel[c].crop(rois[c])?).unwrap_or(0.0);
        }
        Ok(DecayPoint {
            storage_time: t,
            records,
            expected_retrieved,
            region_means,
            similarity: sim,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let counts_per_photon =
        frames * exposure.gates as f64 * ccd.quantum_efficiency * ccd.gate_overlap(exposure.arrival);
    Ok(DecayModel {
        points,
        unit,
        counts_per_photon,
        exposure,
    })
}

fn draw(rng: &mut impl Rng, mean: f64) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    Poisson::new(mean).map(|d| d.sample(rng)).unwrap_or(0.0)
}

impl DecayModel {
    /// Noiseless retrieved photons per pulse for channel `c` at each storage time.
    pub fn noiseless(&self, c: usize) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .map(|p| (p.storage_time, p.records[c].retrieved_energy))
            .collect()
    }

    /// Background-subtracted region counts converted to photons per pulse,
    /// drawn as Poisson totals (the sum of the per-pixel counts has the same
    /// law). Storage time `i` uses frame index `i`.
    pub fn measured(&self, c: usize, seed: u64) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let (sig, bg) = p.region_means[c];
                let mut rng = frame_rng(seed, i as u64, Stream::Fit);
                let on = draw(&mut rng, sig);
                let off = draw(&mut rng, bg);
                (p.storage_time, (on - off) / self.counts_per_photon)
            })
            .collect()
    }

    pub fn fit_noiseless(&self, c: usize) -> Result<DecayFit> {
        fit_decay(&self.noiseless(c))
    }

    pub fn fit_measured(&self, c: usize, seed: u64) -> Result<DecayFit> {
        fit_decay(&self.measured(c, seed))
    }

    /// Fitted τ from measured data for each seed; failed fits are `None`.
    pub fn tau_ensemble(&self, c: usize, seeds: std::ops::Range<u64>) -> Vec<Option<f64>> {
        let seeds: Vec<u64> = seeds.collect();
        par_map(&seeds, |&s| self.fit_measured(c, s).ok().map(|f| f.tau))
    }
}

fn curve_rows(fit: &DecayFit, t_max: f64) -> Vec<Vec<String>> {
    (0..CURVE_SAMPLES)
        .map(|i| {
            let t = t_max * i as f64 / (CURVE_SAMPLES - 1) as f64;
            vec![t.to_string(), fit.eval(t).to_string()]
        })
        .collect()
}

pub fn run(setup: &Setup, out: &Path) -> Result<ScenarioReport> {
    let cfg = &setup.cfg;
    let seed = cfg.scenario.seed;
    let m = model(setup)?;
    let mut sink = OutputSink::new(out, "decay")?;
    write_common(&mut sink, setup)?;

    let photons = cfg.scenario.decay_photons_per_pulse;
    let t_max = m.points.iter().map(|p| p.storage_time).fold(0.0, f64::max);
    let mut rows = Vec::new();
    let mut table = Vec::new();
    let measured: Vec<Vec<(f64, f64)>> = (0..2).map(|c| m.measured(c, seed)).collect();

    for (i, p) in m.points.iter().enumerate() {
        let ccd = &cfg.detection.ccd;
        let frames = cfg.scenario.decay_frames;
        let signal = expose_accumulated(Some(&p.expected_retrieved), &m.exposure, ccd, seed, i as u64, frames)?;
        let background = expose_accumulated(None, &m.exposure, ccd, seed, i as u64, frames)?;
        let image = subtract_background(&signal.to_image(), &background.to_image())?;
        sink.write_image16(
            &format!("retrieve_{i:02}.pgm"),
            "retrieved_image",
            &image,
            &[
                ("storage_time_s", p.storage_time.to_string()),
                ("frames", frames.to_string()),
                ("gates_per_frame", setup.gates_image.to_string()),
                ("gate_delay_s", ccd.gate_delay.to_string()),
                ("gate_width_s", ccd.gate_width.to_string()),
                ("seed", seed.to_string()),
                ("photons_per_pulse", photons.to_string()),
                ("background_subtracted", "clamped".to_string()),
            ],
        )?;
        for c in 0..2 {
            let v = channel_visibility(setup, &m.unit, &image, c, Axis::Vertical)?;
            let label = &setup.channels[c].label;
            rows.push(MetricRow {
                photons_per_pulse: photons,
                channel: label.clone(),
                visibility: Some(v),
                similarity: Some(p.similarity[c]),
                storage_time: Some(p.storage_time),
                ..MetricRow::default()
            });
            table.push(vec![
                p.storage_time.to_string(),
                label.clone(),
                p.records[c].retrieved_energy.to_string(),
                measured[c][i].1.to_string(),
                v.to_string(),
                p.similarity[c].to_string(),
            ]);
        }
    }
    sink.write_csv(
        "decay.csv",
        "decay_table",
        &["storage_time_s", "channel", "retrieved_noiseless", "retrieved_measured", "V", "R_noiseless"],
        &table,
    )?;

    for c in 0..2 {
        let label = setup.channels[c].label.clone();
        for (kind, fit) in [("noiseless", m.fit_noiseless(c)?), ("measured", fit_decay(&measured[c])?)] {
            sink.write_csv(
                &format!("fit_{label}_{kind}.csv"),
                "decay_fit_curve",
                &["storage_time_s", "fitted"],
                &curve_rows(&fit, t_max),
            )?;
            rows.push(MetricRow {
                photons_per_pulse: photons,
                channel: format!("{label}:{kind}"),
                tau: Some(fit.tau),
                residual: Some(fit.residual_norm),
                ..MetricRow::default()
            });
        }
    }
    write_metrics(&mut sink, &rows)?;
    Ok(ScenarioReport {
        scenario: "decay".into(),
        config_hash: setup.config_hash(),
        rows,
        files: sink.finish()?,
    })
}
