//! Pulse timing and write/hold/read trials.

use crate::envelope::PulseEnvelope;
use crate::error::{Error, Result};
use crate::field::{energy, ComplexFieldGrid};
use crate::medium::{
    dark_state_mixing, evolve_spinwave, group_velocity, read_spinwave, write_spinwave, AtomicCloud, LambdaSystem,
    SpinWave, StorageChannel, SPEED_OF_LIGHT,
};
use serde::{Deserialize, Serialize};

/// Experiment timing. All durations in seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimingConfig {
    /// Load/window cycle rate (Hz).
    pub repetition: f64,
    pub load_duration: f64,
    pub window_duration: f64,
    pub pulse_period: f64,
    pub probe_width: f64,
    pub coupling_width: f64,
    pub storage_time: f64,
    /// Fraction of the probe pulse elapsed when the coupling switches off.
    pub switch_off_fraction: f64,
    /// Pulses used per window. `None` fills the window.
    pub pulses_per_window: Option<usize>,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            repetition: 1000.0,
            load_duration: 800e-6,
            window_duration: 200e-6,
            pulse_period: 3.536e-6,
            probe_width: 500e-9,
            coupling_width: 1.61e-6,
            storage_time: 1.826e-6,
            switch_off_fraction: 0.5,
            pulses_per_window: Some(50),
        }
    }
}

impl TimingConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("timing.repetition", self.repetition),
            ("timing.load_duration", self.load_duration),
            ("timing.window_duration", self.window_duration),
            ("timing.pulse_period", self.pulse_period),
            ("timing.probe_width", self.probe_width),
            ("timing.coupling_width", self.coupling_width),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("must be positive and finite, got {v}")));
            }
        }
        if !(self.storage_time >= 0.0 && self.storage_time.is_finite()) {
            return Err(Error::invalid("timing.storage_time", "must be finite and >= 0"));
        }
        if !(0.0..=1.0).contains(&self.switch_off_fraction) {
            return Err(Error::invalid("timing.switch_off_fraction", "must lie in [0, 1]"));
        }
        if self.load_duration + self.window_duration > 1.0 / self.repetition {
            return Err(Error::invalid(
                "timing.window_duration",
                format!(
                    "load_duration + window_duration = {:e} s exceeds the cycle 1/repetition = {:e} s",
                    self.load_duration + self.window_duration,
                    1.0 / self.repetition
                ),
            ));
        }
        if self.probe_width >= self.pulse_period {
            return Err(Error::invalid("timing.probe_width", "must be shorter than pulse_period"));
        }
        if self.coupling_width >= self.pulse_period {
            return Err(Error::invalid("timing.coupling_width", "must be shorter than pulse_period"));
        }
        if self.storage_time >= self.pulse_period {
            return Err(Error::invalid("timing.storage_time", "must be shorter than pulse_period"));
        }
        if self.switch_off_fraction * self.probe_width + self.storage_time >= self.pulse_period {
            return Err(Error::invalid(
                "timing.storage_time",
                "read-out would overlap the next slot's probe pulse",
            ));
        }
        let fit = self.slots_that_fit();
        if fit == 0 {
            return Err(Error::invalid(
                "timing.pulse_period",
                format!(
                    "window_duration {:e} s holds no pulse period of {:e} s",
                    self.window_duration, self.pulse_period
                ),
            ));
        }
        if let Some(n) = self.pulses_per_window {
            if n == 0 || n > fit {
                return Err(Error::invalid(
                    "timing.pulses_per_window",
                    format!("must lie in 1..={fit} for this window and period, got {n}"),
                ));
            }
        }
        Ok(())
    }

    /// `floor(window / period)`, with a relative tolerance so that exact
    /// multiples are not lost to rounding.
    pub fn slots_that_fit(&self) -> usize {
        let r = self.window_duration / self.pulse_period;
        (r * (1.0 + 1e-12)).floor().max(0.0) as usize
    }

    pub fn slots_per_window(&self) -> usize {
        self.pulses_per_window.unwrap_or_else(|| self.slots_that_fit())
    }

    pub fn pulses_per_second(&self) -> f64 {
        self.slots_per_window() as f64 * self.repetition
    }
}

/// One probe/coupling cycle. Times are absolute within a load/window cycle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Slot {
    pub index: usize,
    pub probe_on: f64,
    pub probe_off: f64,
    pub coupling_on: f64,
    /// Write event: the coupling back edge.
    pub coupling_off: f64,
    /// Read event: the next coupling front edge.
    pub read_on: f64,
}

impl Slot {
    pub fn storage_time(&self) -> f64 {
        self.read_on - self.coupling_off
    }

    /// A single slot starting at `t = 0` with an arbitrary storage time, for
    /// storage-time sweeps that are not bound by the pulse period.
    pub fn isolated(timing: &TimingConfig, storage_time: f64) -> Result<Self> {
        if !(storage_time >= 0.0 && storage_time.is_finite()) {
            return Err(Error::invalid("storage_time", format!("must be finite and >= 0, got {storage_time}")));
        }
        Ok(Self::at(0, 0.0, timing, storage_time))
    }

    fn at(index: usize, probe_on: f64, t: &TimingConfig, storage_time: f64) -> Self {
        let coupling_off = probe_on + t.switch_off_fraction * t.probe_width;
        Self {
            index,
            probe_on,
            probe_off: probe_on + t.probe_width,
            coupling_on: coupling_off - t.coupling_width,
            coupling_off,
            read_on: coupling_off + storage_time,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PulseSchedule {
    pub slots: Vec<Slot>,
    pub slots_per_window: usize,
    pub probe_pulses_per_second: f64,
}

pub fn build_schedule(cfg: &TimingConfig) -> Result<PulseSchedule> {
    cfg.validate()?;
    let n = cfg.slots_per_window();
    let slots = (0..n)
        .map(|i| Slot::at(i, cfg.load_duration + i as f64 * cfg.pulse_period, cfg, cfg.storage_time))
        .collect();
    Ok(PulseSchedule {
        slots,
        slots_per_window: n,
        probe_pulses_per_second: cfg.pulses_per_second(),
    })
}

/// Everything the medium needs for a trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MediumConfig {
    pub system: LambdaSystem,
    pub cloud: AtomicCloud,
    /// Spin-wave coherence time (s).
    pub tau_coherence: f64,
}

impl Default for MediumConfig {
    fn default() -> Self {
        Self {
            system: LambdaSystem::default(),
            cloud: AtomicCloud::default(),
            tau_coherence: 10e-6,
        }
    }
}

impl MediumConfig {
    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.cloud.validate()?;
        if !(self.tau_coherence > 0.0 && self.tau_coherence.is_finite()) {
            return Err(Error::invalid("medium.tau_coherence", "must be positive and finite"));
        }
        Ok(())
    }

    pub fn group_velocity(&self) -> Result<f64> {
        Ok(group_velocity(dark_state_mixing(&self.system)?, SPEED_OF_LIGHT))
    }

    /// Spatial length of the probe pulse inside the medium.
    pub fn compressed_length(&self, probe_width: f64) -> Result<f64> {
        Ok(self.group_velocity()? * probe_width)
    }
}

/// A probe channel together with its transverse mode at the cloud plane.
#[derive(Clone, Debug)]
pub struct ChannelInput {
    pub channel: StorageChannel,
    pub mode: ComplexFieldGrid,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub label: String,
    pub storage_time: f64,
    pub input_energy: f64,
    pub leakage_energy: f64,
    pub retrieved_energy: f64,
    pub leakage_field: ComplexFieldGrid,
    pub retrieved_field: ComplexFieldGrid,
    pub leakage_trace: PulseEnvelope,
    pub retrieved_trace: PulseEnvelope,
    /// The spin wave at the read event.
    pub wave: SpinWave,
}

/// Runs write, hold and read for every channel in one slot. Each channel gets
/// a square probe pulse of `photons_per_pulse` photons.
pub fn run_trial(
    slot: &Slot,
    timing: &TimingConfig,
    medium: &MediumConfig,
    channels: &[ChannelInput],
    photons_per_pulse: f64,
) -> Result<Vec<TrialRecord>> {
    if !(photons_per_pulse >= 0.0 && photons_per_pulse.is_finite()) {
        return Err(Error::invalid("photons_per_pulse", format!("must be finite and >= 0, got {photons_per_pulse}")));
    }
    let vg = medium.group_velocity()?;
    let pulse = PulseEnvelope::square(slot.probe_on, timing.probe_width, photons_per_pulse)?;
    let hold = slot.storage_time();

    channels
        .iter()
        .map(|input| {
            let ch = &input.channel;
            let w = write_spinwave(
                &pulse,
                &input.mode,
                ch,
                vg,
                &medium.cloud,
                slot.coupling_off,
                medium.tau_coherence,
            )?;
            let wave = evolve_spinwave(&w.wave, hold, &medium.cloud)?;
            let retrieved_field = read_spinwave(&wave, ch);
            let retrieved_energy = energy(&retrieved_field);

            let stored = w.stored_trace.energy();
            let retrieved_trace = if stored > 0.0 {
                w.stored_trace
                    .shifted(hold + w.transit_time)
                    .scaled(retrieved_energy / stored)
            } else {
                PulseEnvelope::empty()
            };
            Ok(TrialRecord {
                label: ch.label.clone(),
                storage_time: hold,
                input_energy: w.input_energy,
                leakage_energy: w.leakage.energy,
                retrieved_energy,
                leakage_field: w.leakage.field,
                retrieved_field,
                leakage_trace: w.leakage.trace,
                retrieved_trace,
                wave,
            })
        })
        .collect()
}

/// Retrieved over leaked photons.
pub fn storage_efficiency(rec: &TrialRecord) -> Result<f64> {
    if !(rec.leakage_energy > 0.0) {
        return Err(Error::ZeroLeakage);
    }
    Ok(rec.retrieved_energy / rec.leakage_energy)
}

/// Retrieved over input photons.
pub fn input_referenced_efficiency(rec: &TrialRecord) -> Result<f64> {
    if !(rec.input_energy > 0.0) {
        return Err(Error::invalid("input_energy", "no input photons"));
    }
    Ok(rec.retrieved_energy / rec.input_energy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{TransverseGrid, DEFAULT_WAVELENGTH};

    fn inputs(eta_r: [f64; 2]) -> Vec<ChannelInput> {
        let g = TransverseGrid::square(32, 3e-5).unwrap();
        let mode = ComplexFieldGrid::gaussian(g, DEFAULT_WAVELENGTH, 2e-4, 1.0);
        [("probe1", 3.3f64, eta_r[0]), ("probe2", 3.75, eta_r[1])]
            .into_iter()
            .map(|(l, a, r)| ChannelInput {
                channel: StorageChannel::new(l, a.to_radians(), 0.6, r).unwrap(),
                mode: mode.clone(),
            })
            .collect()
    }

    #[test]
    fn default_schedule() {
        let s = build_schedule(&TimingConfig::default()).unwrap();
        assert_eq!(s.slots_per_window, 50);
        assert_eq!(s.probe_pulses_per_second, 50_000.0);
        for w in s.slots.windows(2) {
            assert!(w[0].read_on < w[1].probe_on);
        }
        for slot in &s.slots {
            assert!(slot.probe_on < slot.coupling_off && slot.coupling_off < slot.read_on);
            assert!((slot.storage_time() - 1.826e-6).abs() < 1e-15);
        }
    }

    #[test]
    fn filling_the_window() {
        let cfg = TimingConfig {
            pulses_per_window: None,
            ..TimingConfig::default()
        };
        assert_eq!(build_schedule(&cfg).unwrap().slots_per_window, 56);

        let one = TimingConfig {
            window_duration: 3.536e-6,
            pulses_per_window: None,
            ..TimingConfig::default()
        };
        assert_eq!(build_schedule(&one).unwrap().slots_per_window, 1);
    }

    #[test]
    fn schedule_errors_name_the_field() {
        let short = TimingConfig {
            window_duration: 1e-6,
            pulses_per_window: None,
            ..TimingConfig::default()
        };
        let e = build_schedule(&short).unwrap_err().to_string();
        assert!(e.contains("timing.pulse_period"), "{e}");

        let long = TimingConfig {
            storage_time: 4e-6,
            ..TimingConfig::default()
        };
        assert!(build_schedule(&long).unwrap_err().to_string().contains("timing.storage_time"));

        let over = TimingConfig {
            pulses_per_window: Some(57),
            ..TimingConfig::default()
        };
        assert!(build_schedule(&over).unwrap_err().to_string().contains("pulses_per_window"));
    }

    #[test]
    fn zero_read_efficiency_retrieves_nothing() {
        let t = TimingConfig::default();
        let slot = build_schedule(&t).unwrap().slots[0];
        let recs = run_trial(&slot, &t, &MediumConfig::default(), &inputs([0.0, 0.0]), 100.0).unwrap();
        for r in &recs {
            assert_eq!(r.retrieved_energy, 0.0);
            assert!(r.leakage_energy > 0.0);
            assert_eq!(storage_efficiency(r).unwrap(), 0.0);
        }
    }

    #[test]
    fn efficiency_matches_closed_form() {
        let t = TimingConfig::default();
        let m = MediumConfig::default();
        let slot = build_schedule(&t).unwrap().slots[3];
        let recs = run_trial(&slot, &t, &m, &inputs([0.7, 0.5]), 250.0).unwrap();
        // half leaks, η_w of the other half is stored
        let expect = |eta_r: f64| 0.6 * eta_r * (-1.826e-6f64 / 10e-6).exp();
        assert!((storage_efficiency(&recs[0]).unwrap() - expect(0.7)).abs() < 1e-12);
        assert!((storage_efficiency(&recs[1]).unwrap() - expect(0.5)).abs() < 1e-12);
        assert!((input_referenced_efficiency(&recs[0]).unwrap() - 0.5 * expect(0.7)).abs() < 1e-12);
        assert!((recs[0].retrieved_trace.energy() - recs[0].retrieved_energy).abs() < 1e-9);
    }

    #[test]
    fn doubling_storage_time_decays_exponentially() {
        let t = TimingConfig::default();
        let m = MediumConfig::default();
        let a = run_trial(&Slot::isolated(&t, 2e-6).unwrap(), &t, &m, &inputs([0.7, 0.5]), 10.0).unwrap();
        let b = run_trial(&Slot::isolated(&t, 4e-6).unwrap(), &t, &m, &inputs([0.7, 0.5]), 10.0).unwrap();
        let ratio = b[0].retrieved_energy / a[0].retrieved_energy;
        assert!((ratio - (-2e-6f64 / 10e-6).exp()).abs() < 1e-12);
    }

    #[test]
    fn trials_are_pure_and_linear() {
        let t = TimingConfig::default();
        let m = MediumConfig::default();
        let slot = build_schedule(&t).unwrap().slots[0];
        let a = run_trial(&slot, &t, &m, &inputs([0.7, 0.5]), 30.0).unwrap();
        let b = run_trial(&slot, &t, &m, &inputs([0.7, 0.5]), 30.0).unwrap();
        assert_eq!(a, b);
        let c = run_trial(&slot, &t, &m, &inputs([0.7, 0.5]), 3.0).unwrap();
        let (ea, ec) = (storage_efficiency(&a[0]).unwrap(), storage_efficiency(&c[0]).unwrap());
        assert!((ea - ec).abs() < 1e-12);
    }

    #[test]
    fn efficiency_needs_leakage() {
        let t = TimingConfig::default();
        let slot = build_schedule(&t).unwrap().slots[0];
        let r = run_trial(&slot, &t, &MediumConfig::default(), &inputs([0.7, 0.5]), 0.0).unwrap();
        assert!(matches!(storage_efficiency(&r[0]), Err(Error::ZeroLeakage)));
    }
}
