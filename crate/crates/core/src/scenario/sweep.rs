//! Visibility and similarity of retrieved images against photons per pulse.

use super::output::OutputSink;
use super::{par_map, write_common, write_metrics, MetricRow, ScenarioReport, Setup};
use crate::analysis::{centroid, extract_band_profile, mean_std, similarity, visibility, Anchor, Axis};
use crate::detection::{expose_accumulated, subtract_background, Exposure};
use crate::error::{Error, Result};
use crate::raster::{Image, Roi};
use crate::sequencer::{build_schedule, run_trial, TrialRecord};
use std::path::Path;

/// Noiseless camera images per input photon, for both probes stored together.
#[derive(Clone, Debug)]
pub struct UnitImages {
    pub leak: Image,
    pub retrieved: Image,
    /// Each channel's leakage image alone, the similarity reference.
    pub leak_per_channel: [Image; 2],
    pub rois: [Roi; 2],
}

pub fn unit_images(setup: &Setup) -> Result<UnitImages> {
    let cfg = &setup.cfg;
    let slot = build_schedule(&cfg.timing)?.slots[0];
    let recs = run_trial(&slot, &cfg.timing, &setup.medium, &setup.inputs, 1.0)?;
    let pairs: Vec<(usize, &TrialRecord)> = recs.iter().enumerate().collect();
    let (leak, retrieved) = setup.trial_images(&pairs)?;
    let l0 = setup.trial_images(&pairs[..1])?.0;
    let l1 = setup.trial_images(&pairs[1..])?.0;
    Ok(UnitImages {
        leak,
        retrieved,
        leak_per_channel: [l0, l1],
        rois: [setup.channel_roi(0)?, setup.channel_roi(1)?],
    })
}

/// Visibility of channel `c` along `axis` through the reference digit's
/// centroid, on a background-subtracted image. The profile averages
/// `2 * band_half_width + 1` lines so that the clamped noise floor, not a
/// single-pixel fluctuation, sets `I_min`.
pub fn channel_visibility(setup: &Setup, unit: &UnitImages, image: &Image, c: usize, axis: Axis) -> Result<f64> {
    let a = &setup.cfg.analysis;
    let roi = unit.rois[c];
    let anchor = match a.anchor {
        Anchor::Centroid => {
            let (cx, cy) = centroid(&unit.leak_per_channel[c].crop(roi)?)
                .ok_or(Error::UndefinedMetric("empty reference image"))?;
            Anchor::Index(match axis {
                Axis::Vertical => cx.round() as usize,
                Axis::Horizontal => cy.round() as usize,
            })
        }
        explicit => explicit,
    };
    let profile = extract_band_profile(&image.crop(roi)?, axis, anchor, a.band_half_width)?;
    Ok(visibility(&profile).unwrap_or(0.0))
}

/// Similarity of channel `c`'s region of a background-subtracted image to
/// its noiseless leakage image.
pub fn channel_similarity(unit: &UnitImages, subtracted: &Image, c: usize) -> Result<f64> {
    let roi = unit.rois[c];
    // an all-zero region counts as zero similarity
    Ok(similarity(&subtracted.crop(roi)?, &unit.leak_per_channel[c].crop(roi)?).unwrap_or(0.0))
}

/// V along the vertical and R for channel `c` of a background-subtracted image.
pub fn channel_metrics(setup: &Setup, unit: &UnitImages, image: &Image, c: usize) -> Result<(f64, f64)> {
    Ok((
        channel_visibility(setup, unit, image, c, Axis::Vertical)?,
        channel_similarity(unit, image, c)?,
    ))
}

#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub photons: f64,
    pub frames: u64,
    /// `[channel][repeat]`.
    pub visibility: [Vec<f64>; 2],
    pub similarity: [Vec<f64>; 2],
    /// Background-subtracted (clamped) image of the first repeat.
    pub image: Image,
}

impl SweepPoint {
    pub fn v_stats(&self, c: usize) -> (f64, f64) {
        mean_std(&self.visibility[c])
    }

    pub fn r_stats(&self, c: usize) -> (f64, f64) {
        mean_std(&self.similarity[c])
    }
}

/// Accumulated, background-subtracted image for `photons` per pulse, with
/// `frames` frames of signal and `frames` of background.
pub fn sweep_image(setup: &Setup, unit: &UnitImages, photons: f64, frames: u64, index: u64) -> Result<Image> {
    let cfg = &setup.cfg;
    let exposure = Exposure {
        gates: setup.gates_sweep,
        arrival: (0.0, cfg.timing.switch_off_fraction * cfg.timing.probe_width),
        coupling_angle: setup.axis_angle,
    };
    let ccd = &cfg.detection.ccd;
    let seed = cfg.scenario.seed;
    let signal = expose_accumulated(Some(&unit.retrieved.scaled(photons)), &exposure, ccd, seed, index, frames)?;
    let background = expose_accumulated(None, &exposure, ccd, seed, index, frames)?;
    subtract_background(&signal.to_image(), &background.to_image())
}

pub fn simulate(setup: &Setup) -> Result<Vec<SweepPoint>> {
    let s = &setup.cfg.scenario;
    let unit = unit_images(setup)?;
    let jobs: Vec<(usize, usize)> = (0..s.photon_sweep.len())
        .flat_map(|p| (0..s.sweep_repeats).map(move |r| (p, r)))
        .collect();
    let results = par_map(&jobs, |&(p, r)| -> Result<(Image, [(f64, f64); 2])> {
        let index = (p * s.sweep_repeats + r) as u64;
        let img = sweep_image(setup, &unit, s.photon_sweep[p], s.sweep_frames[p], index)?;
        let m = [channel_metrics(setup, &unit, &img, 0)?, channel_metrics(setup, &unit, &img, 1)?];
        Ok((img, m))
    });

    let mut points: Vec<SweepPoint> = s
        .photon_sweep
        .iter()
        .zip(&s.sweep_frames)
        .map(|(&photons, &frames)| SweepPoint {
            photons,
            frames,
            visibility: [Vec::new(), Vec::new()],
            similarity: [Vec::new(), Vec::new()],
            image: Image::zeros(0, 0),
        })
        .collect();
    for (&(p, r), res) in jobs.iter().zip(results) {
        let (img, m) = res?;
        let point = &mut points[p];
        for (c, &(v, rr)) in m.iter().enumerate() {
            point.visibility[c].push(v);
            point.similarity[c].push(rr);
        }
        if r == 0 {
            point.image = img;
        }
    }
    Ok(points)
}

pub fn run(setup: &Setup, out: &Path) -> Result<ScenarioReport> {
    let cfg = &setup.cfg;
    let points = simulate(setup)?;
    let mut sink = OutputSink::new(out, "photon-sweep")?;
    write_common(&mut sink, setup)?;

    let mut rows = Vec::new();
    let mut table = Vec::new();
    let mut repeats = Vec::new();
    for (p, point) in points.iter().enumerate() {
        sink.write_image16(
            &format!("sweep_{p:02}.pgm"),
            "accumulated_image",
            &point.image,
            &[
                ("photons_per_pulse", point.photons.to_string()),
                ("frames", point.frames.to_string()),
                ("gates_per_frame", setup.gates_sweep.to_string()),
                ("gate_delay_s", cfg.detection.ccd.gate_delay.to_string()),
                ("gate_width_s", cfg.detection.ccd.gate_width.to_string()),
                ("seed", cfg.scenario.seed.to_string()),
                ("background_subtracted", "clamped".to_string()),
            ],
        )?;
        for c in 0..2 {
            let label = setup.channels[c].label.clone();
            let (vm, vs) = point.v_stats(c);
            let (rm, rs) = point.r_stats(c);
            rows.push(MetricRow {
                photons_per_pulse: point.photons,
                channel: label.clone(),
                visibility: Some(vm),
                similarity: Some(rm),
                ..MetricRow::default()
            });
            table.push(vec![
                point.photons.to_string(),
                label.clone(),
                point.frames.to_string(),
                vm.to_string(),
                vs.to_string(),
                rm.to_string(),
                rs.to_string(),
            ]);
            for (r, (v, rr)) in point.visibility[c].iter().zip(&point.similarity[c]).enumerate() {
                repeats.push(vec![
                    point.photons.to_string(),
                    label.clone(),
                    r.to_string(),
                    v.to_string(),
                    rr.to_string(),
                ]);
            }
        }
    }
    sink.write_csv(
        "sweep.csv",
        "sweep_summary",
        &["photons_per_pulse", "channel", "frames", "V_mean", "V_std", "R_mean", "R_std"],
        &table,
    )?;
    sink.write_csv(
        "sweep_repeats.csv",
        "sweep_repeats",
        &["photons_per_pulse", "channel", "repeat", "V", "R"],
        &repeats,
    )?;
    write_metrics(&mut sink, &rows)?;
    Ok(ScenarioReport {
        scenario: "photon-sweep".into(),
        config_hash: setup.config_hash(),
        rows,
        files: sink.finish()?,
    })
}
