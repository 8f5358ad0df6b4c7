//! Leakage and retrieved power against time for one slot.

use super::output::OutputSink;
use super::{write_common, write_metrics, MetricRow, ScenarioReport, Setup};
use crate::envelope::PulseEnvelope;
use crate::error::Result;
use crate::sequencer::{build_schedule, run_trial, storage_efficiency, TrialRecord};
use std::path::Path;

const TRACE_SAMPLES: usize = 1000;

/// Noiseless trial records for both channels in the first slot.
pub fn records(setup: &Setup) -> Result<Vec<TrialRecord>> {
    let cfg = &setup.cfg;
    let schedule = build_schedule(&cfg.timing)?;
    run_trial(
        &schedule.slots[0],
        &cfg.timing,
        &setup.medium,
        &setup.inputs,
        cfg.scenario.photons_per_pulse,
    )
}

/// Samples the input, leaked and retrieved power on a uniform grid spanning
/// all three, with times relative to the probe turn-on.
pub fn trace_rows(probe_on: f64, input: &PulseEnvelope, rec: &TrialRecord) -> Vec<Vec<String>> {
    let spans: Vec<(f64, f64)> = [input, &rec.leakage_trace, &rec.retrieved_trace]
        .iter()
        .filter_map(|e| e.support())
        .collect();
    let t0 = spans.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let t1 = spans.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let pad = 0.1 * (t1 - t0);
    let (a, b) = (t0 - pad, t1 + pad);
    (0..TRACE_SAMPLES)
        .map(|i| {
            let t = a + (b - a) * i as f64 / (TRACE_SAMPLES - 1) as f64;
            vec![
                (t - probe_on).to_string(),
                input.value_at(t).to_string(),
                rec.leakage_trace.value_at(t).to_string(),
                rec.retrieved_trace.value_at(t).to_string(),
            ]
        })
        .collect()
}

pub fn run(setup: &Setup, out: &Path) -> Result<ScenarioReport> {
    let cfg = &setup.cfg;
    let mut sink = OutputSink::new(out, "temporal")?;
    write_common(&mut sink, setup)?;

    let schedule = build_schedule(&cfg.timing)?;
    let slot = schedule.slots[0];
    let recs = records(setup)?;
    let input = PulseEnvelope::square(slot.probe_on, cfg.timing.probe_width, cfg.scenario.photons_per_pulse)?;

    let mut rows = Vec::new();
    for rec in &recs {
        sink.write_csv(
            &format!("trace_{}.csv", rec.label),
            "trace",
            &["time_s", "input", "leakage", "retrieved"],
            &trace_rows(slot.probe_on, &input, rec),
        )?;
        rows.push(MetricRow {
            photons_per_pulse: cfg.scenario.photons_per_pulse,
            channel: rec.label.clone(),
            efficiency: Some(storage_efficiency(rec)?),
            storage_time: Some(rec.storage_time),
            ..MetricRow::default()
        });
    }
    let energies: Vec<Vec<String>> = recs
        .iter()
        .map(|r| {
            vec![
                r.label.clone(),
                r.input_energy.to_string(),
                r.leakage_energy.to_string(),
                r.retrieved_energy.to_string(),
            ]
        })
        .collect();
    sink.write_csv(
        "energies.csv",
        "energies",
        &["channel", "input", "leakage", "retrieved"],
        &energies,
    )?;
    write_metrics(&mut sink, &rows)?;
    Ok(ScenarioReport {
        scenario: "temporal".into(),
        config_hash: setup.config_hash(),
        rows,
        files: sink.finish()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    fn setup(f: impl FnOnce(&mut ExperimentConfig)) -> Setup {
        let mut cfg = ExperimentConfig::default();
        cfg.optics.grid = 64;
        cfg.detection.ccd.width = 64;
        cfg.detection.ccd.height = 64;
        cfg.optics.glyph_width = 16;
        cfg.optics.glyph_height = 24;
        cfg.optics.glyph_stroke = 4;
        f(&mut cfg);
        Setup::new(&cfg, Path::new(".")).unwrap()
    }

    #[test]
    fn default_efficiencies() {
        let recs = records(&setup(|_| {})).unwrap();
        assert!((storage_efficiency(&recs[0]).unwrap() - 0.35).abs() < 1e-6);
        assert!((storage_efficiency(&recs[1]).unwrap() - 0.23).abs() < 1e-6);
    }

    #[test]
    fn zero_read_efficiency_gives_flat_trace() {
        let recs = records(&setup(|c| c.probe1.read_efficiency = 0.0)).unwrap();
        assert_eq!(recs[0].retrieved_energy, 0.0);
        assert!(recs[0].retrieved_trace.support().is_none());
    }

    #[test]
    fn halving_the_probe_halves_the_traces() {
        let full = records(&setup(|_| {})).unwrap();
        let half = records(&setup(|c| c.scenario.photons_per_pulse /= 2.0)).unwrap();
        for (f, h) in full.iter().zip(&half) {
            for i in 0..200 {
                let t = 795e-6 + i as f64 * 0.05e-6;
                let (lf, lh) = (f.leakage_trace.value_at(t), h.leakage_trace.value_at(t));
                let (rf, rh) = (f.retrieved_trace.value_at(t), h.retrieved_trace.value_at(t));
                assert!((lh - 0.5 * lf).abs() <= 1e-9 * lf.max(1.0));
                assert!((rh - 0.5 * rf).abs() <= 1e-9 * rf.max(1.0));
            }
        }
    }
}
