//! Storage of one or both probes with different images, and the crosstalk
//! between their read-out directions.

use super::output::OutputSink;
use super::{write_common, write_metrics, MetricRow, ScenarioReport, Setup};
use crate::analysis::{similarity, welch_t_test};
use crate::detection::{expose_frame, subtract_background, DetectorFrame, Exposure};
use crate::error::{Error, Result};
use crate::raster::{Image, Roi};
use crate::sequencer::{build_schedule, run_trial, storage_efficiency, TrialRecord};
use std::path::Path;

/// One storage run with a subset of the probes switched on.
#[derive(Clone, Debug)]
pub struct DualRun {
    /// Channel indices (0 or 1) that carried a probe.
    pub channels: Vec<usize>,
    pub name: String,
    pub records: Vec<TrialRecord>,
    pub expected_leak: Image,
    pub expected_retrieved: Image,
    /// Accumulated frames minus accumulated background, clamped.
    pub leak_image: Image,
    pub retrieved_image: Image,
    /// Per-frame totals inside each channel's region: `[frame][channel]`.
    pub retrieved_region_totals: Vec<[f64; 2]>,
}

/// Region statistics of a channel that stored nothing in a run.
#[derive(Clone, Debug, PartialEq)]
pub struct BackgroundTest {
    pub run: String,
    pub region: String,
    pub mean_run: f64,
    pub mean_background: f64,
    pub p_value: f64,
}

#[derive(Clone, Debug)]
pub struct DualImageData {
    pub runs: Vec<DualRun>,
    /// `[stored wave][read-out direction]` retrieved photons per pulse.
    pub crosstalk: [[f64; 2]; 2],
    pub background_region_totals: Vec<[f64; 2]>,
    pub background_image: Image,
    pub tests: Vec<BackgroundTest>,
    pub rois: [Roi; 2],
}

fn run_name(channels: &[usize]) -> &'static str {
    match channels {
        [0] => "probe1",
        [1] => "probe2",
        _ => "both",
    }
}

fn region_total(frame: &DetectorFrame, roi: Roi) -> f64 {
    let mut s = 0u64;
    for y in roi.y0..roi.y0 + roi.height {
        for x in roi.x0..roi.x0 + roi.width {
            s += frame.counts[y * frame.width + x];
        }
    }
    s as f64
}

/// Exposes `frames` frames with indices `first..first + frames`, returning
/// their sum and the per-frame totals inside each region.
fn expose_series(
    intensity: Option<&Image>,
    exposure: &Exposure,
    setup: &Setup,
    first: u64,
    frames: u64,
    rois: [Roi; 2],
) -> Result<(Image, Vec<[f64; 2]>)> {
    let ccd = &setup.cfg.detection.ccd;
    let seed = setup.cfg.scenario.seed;
    let mut sum = Image::zeros(ccd.width, ccd.height);
    let mut totals = Vec::with_capacity(frames as usize);
    for f in first..first + frames {
        let frame = expose_frame(intensity, exposure, ccd, seed, f)?;
        totals.push([region_total(&frame, rois[0]), region_total(&frame, rois[1])]);
        sum = sum.add(&frame.to_image())?;
    }
    Ok((sum, totals))
}

/// Runs the storage experiment for each channel subset implied by `enable`
/// (`{1}`, `{2}`, or all three subsets for `{1, 2}`).
pub fn simulate(setup: &Setup, enable: &[u8]) -> Result<DualImageData> {
    let cfg = &setup.cfg;
    let mut enabled: Vec<usize> = enable.iter().map(|&c| c as usize - 1).collect();
    enabled.sort_unstable();
    enabled.dedup();
    let subsets: Vec<Vec<usize>> = if enabled.len() == 2 {
        vec![vec![0], vec![1], vec![0, 1]]
    } else {
        vec![enabled.clone()]
    };

    let slot = build_schedule(&cfg.timing)?.slots[0];
    let photons = cfg.scenario.photons_per_pulse;
    let frames = cfg.scenario.dual_frames;
    let rois = [setup.channel_roi(0)?, setup.channel_roi(1)?];
    let exposure = Exposure {
        gates: setup.gates_image,
        arrival: (0.0, cfg.timing.switch_off_fraction * cfg.timing.probe_width),
        coupling_angle: setup.axis_angle,
    };

    // probes off, coupling on
    let (background_image, background_region_totals) = expose_series(None, &exposure, setup, 0, frames, rois)?;

    let mut runs = Vec::new();
    for (r, chans) in subsets.iter().enumerate() {
        let inputs: Vec<_> = chans.iter().map(|&c| setup.inputs[c].clone()).collect();
        let records = run_trial(&slot, &cfg.timing, &setup.medium, &inputs, photons)?;
        let pairs: Vec<(usize, &TrialRecord)> = chans.iter().copied().zip(&records).collect();
        let (expected_leak, expected_retrieved) = setup.trial_images(&pairs)?;

        let base = (r as u64 + 1) * 2 * frames;
        let (leak_sum, _) = expose_series(Some(&expected_leak), &exposure, setup, base, frames, rois)?;
        let (ret_sum, retrieved_region_totals) =
            expose_series(Some(&expected_retrieved), &exposure, setup, base + frames, frames, rois)?;
        runs.push(DualRun {
            channels: chans.clone(),
            name: run_name(chans).to_string(),
            records,
            expected_leak,
            expected_retrieved,
            leak_image: subtract_background(&leak_sum, &background_image)?,
            retrieved_image: subtract_background(&ret_sum, &background_image)?,
            retrieved_region_totals,
        });
    }

    // crosstalk from a run in which each wave was stored on its own
    let mut crosstalk = [[0.0; 2]; 2];
    for run in &runs {
        for (&i, rec) in run.channels.iter().zip(&run.records) {
            for (j, entry) in crosstalk[i].iter_mut().enumerate() {
                let c = if i == j { 1.0 } else { setup.crosstalk(&rec.wave, j)? };
                *entry = rec.retrieved_energy * c * c;
            }
        }
    }

    let mut tests = Vec::new();
    for run in runs.iter().filter(|r| r.channels.len() == 1) {
        let other = 1 - run.channels[0];
        let a: Vec<f64> = run.retrieved_region_totals.iter().map(|t| t[other]).collect();
        let b: Vec<f64> = background_region_totals.iter().map(|t| t[other]).collect();
        tests.push(BackgroundTest {
            run: run.name.clone(),
            region: setup.channels[other].label.clone(),
            mean_run: a.iter().sum::<f64>() / a.len() as f64,
            mean_background: b.iter().sum::<f64>() / b.len() as f64,
            p_value: welch_t_test(&a, &b)?,
        });
    }

    Ok(DualImageData {
        runs,
        crosstalk,
        background_region_totals,
        background_image,
        tests,
        rois,
    })
}

pub fn run(setup: &Setup, enable: &[u8], out: &Path) -> Result<ScenarioReport> {
    let cfg = &setup.cfg;
    let data = simulate(setup, enable)?;
    let mut sink = OutputSink::new(out, "dual-image")?;
    write_common(&mut sink, setup)?;

    let meta = |role: &str, run: &DualRun| {
        vec![
            ("role", role.to_string()),
            ("run", run.name.clone()),
            ("frames", cfg.scenario.dual_frames.to_string()),
            ("gates_per_frame", setup.gates_image.to_string()),
            ("gate_delay_s", cfg.detection.ccd.gate_delay.to_string()),
            ("gate_width_s", cfg.detection.ccd.gate_width.to_string()),
            ("seed", cfg.scenario.seed.to_string()),
            ("photons_per_pulse", cfg.scenario.photons_per_pulse.to_string()),
            ("background_subtracted", "clamped".to_string()),
        ]
    };
    let mut rows = Vec::new();
    for run in &data.runs {
        sink.write_image16(&format!("leak_{}.pgm", run.name), "leakage_image", &run.leak_image, &meta("leakage", run))?;
        sink.write_image16(
            &format!("retrieve_{}.pgm", run.name),
            "retrieved_image",
            &run.retrieved_image,
            &meta("retrieved", run),
        )?;
        for (&c, rec) in run.channels.iter().zip(&run.records) {
            let roi = data.rois[c];
            let r = similarity(&run.retrieved_image.crop(roi)?, &run.expected_leak.crop(roi)?).ok();
            rows.push(MetricRow {
                photons_per_pulse: cfg.scenario.photons_per_pulse,
                channel: format!("{}@{}", rec.label, run.name),
                similarity: r,
                efficiency: Some(storage_efficiency(rec)?),
                storage_time: Some(rec.storage_time),
                ..MetricRow::default()
            });
        }
    }

    let ct: Vec<Vec<String>> = (0..2)
        .map(|i| {
            let diag = data.crosstalk[i][i];
            vec![
                setup.channels[i].label.clone(),
                data.crosstalk[i][0].to_string(),
                data.crosstalk[i][1].to_string(),
                if diag > 0.0 {
                    (data.crosstalk[i][1 - i] / diag).to_string()
                } else {
                    String::new()
                },
            ]
        })
        .collect();
    sink.write_csv(
        "crosstalk.csv",
        "crosstalk",
        &["stored_wave", "into_probe1", "into_probe2", "off_diagonal_ratio"],
        &ct,
    )?;

    let mut totals = Vec::new();
    for (f, bg) in data.background_region_totals.iter().enumerate() {
        totals.push(vec!["background".into(), f.to_string(), bg[0].to_string(), bg[1].to_string()]);
    }
    for run in &data.runs {
        for (f, t) in run.retrieved_region_totals.iter().enumerate() {
            totals.push(vec![run.name.clone(), f.to_string(), t[0].to_string(), t[1].to_string()]);
        }
    }
    sink.write_csv(
        "frame_totals.csv",
        "frame_totals",
        &["run", "frame", "region_probe1", "region_probe2"],
        &totals,
    )?;
    let tests: Vec<Vec<String>> = data
        .tests
        .iter()
        .map(|t| {
            vec![
                t.run.clone(),
                t.region.clone(),
                t.mean_run.to_string(),
                t.mean_background.to_string(),
                t.p_value.to_string(),
            ]
        })
        .collect();
    sink.write_csv(
        "background_test.csv",
        "background_test",
        &["run", "region", "mean_run", "mean_background", "p_value"],
        &tests,
    )?;
    write_metrics(&mut sink, &rows)?;

    if data.runs.is_empty() {
        return Err(Error::invalid("scenario.enable", "no channel enabled"));
    }
    Ok(ScenarioReport {
        scenario: "dual-image".into(),
        config_hash: setup.config_hash(),
        rows,
        files: sink.finish()?,
    })
}
