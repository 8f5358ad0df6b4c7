//! Λ-system storage physics in the adiabatic dark-state-polariton picture.
//!
//! A probe pulse compressed inside the cloud is mapped onto a collective spin
//! wave when the coupling field switches off, decays and blurs while held, and
//! is mapped back onto light when the coupling returns. The longitudinal
//! structure of the spin wave is collapsed to one complex value per transverse
//! sample; phase mismatch along the cloud enters only through
//! [`crosstalk_coefficient`].

use crate::envelope::PulseEnvelope;
use crate::error::{Error, Result};
use crate::field::{energy, ComplexFieldGrid};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Three-level Λ system driven by a coupling field. Rates are angular (rad/s).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaSystem {
    /// Coupling Rabi frequency Ω_c.
    pub coupling_rabi: f64,
    /// Collective probe coupling g·sqrt(N).
    pub collective_coupling: f64,
    /// Excited-state population decay rate Γ.
    pub excited_decay: f64,
    /// Ground-state coherence dephasing rate γ.
    pub ground_dephasing: f64,
    pub optical_depth: f64,
}

impl Default for LambdaSystem {
    fn default() -> Self {
        Self {
            coupling_rabi: 2.0 * PI * 1.0e6,
            collective_coupling: 2.0 * PI * 100.0e6,
            excited_decay: 2.0 * PI * 5.75e6,
            ground_dephasing: 5.0e4,
            optical_depth: 20.0,
        }
    }
}

impl LambdaSystem {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("medium.coupling_rabi", self.coupling_rabi),
            ("medium.collective_coupling", self.collective_coupling),
            ("medium.excited_decay", self.excited_decay),
            ("medium.ground_dephasing", self.ground_dephasing),
            ("medium.optical_depth", self.optical_depth),
        ];
        for (name, v) in fields {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomicCloud {
    /// Extent along the probe direction (m).
    pub length: f64,
    pub transverse_size: f64,
    pub atom_count: f64,
    /// RMS transverse atomic speed (m/s).
    pub rms_speed: f64,
}

impl Default for AtomicCloud {
    fn default() -> Self {
        Self {
            length: 30e-3,
            transverse_size: 2e-3,
            atom_count: 9.1e8,
            rms_speed: 0.1,
        }
    }
}

impl AtomicCloud {
    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::invalid("cloud.length", format!("must be positive, got {}", self.length)));
        }
        if !(self.transverse_size > 0.0) {
            return Err(Error::invalid("cloud.transverse_size", "must be positive"));
        }
        if !(self.atom_count > 0.0) {
            return Err(Error::invalid("cloud.atom_count", "must be positive"));
        }
        if !(self.rms_speed >= 0.0 && self.rms_speed.is_finite()) {
            return Err(Error::invalid("cloud.rms_speed", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// One probe direction with its write and read efficiencies.
#[derive(Clone, Debug, PartialEq)]
pub struct StorageChannel {
    pub label: String,
    /// Angle between probe and coupling (rad), in the plane of incidence.
    pub probe_angle: f64,
    pub write_efficiency: f64,
    pub read_efficiency: f64,
}

impl StorageChannel {
    pub fn new(label: impl Into<String>, probe_angle: f64, write_efficiency: f64, read_efficiency: f64) -> Result<Self> {
        let label = label.into();
        for (what, v) in [("write_efficiency", write_efficiency), ("read_efficiency", read_efficiency)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("{label}.{what}"), format!("must lie in [0, 1], got {v}")));
            }
        }
        if !probe_angle.is_finite() {
            return Err(Error::invalid(format!("{label}.probe_angle"), "must be finite"));
        }
        Ok(Self {
            label,
            probe_angle,
            write_efficiency,
            read_efficiency,
        })
    }

    /// Transverse projection of `k_probe - k_coupling` with the coupling along z.
    pub fn grating_wavevector(&self, wavelength: f64) -> [f64; 2] {
        [2.0 * PI / wavelength * self.probe_angle.sin(), 0.0]
    }
}

/// Stored collective excitation.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinWave {
    /// Transverse pattern in sqrt-excitations per sample; carries the probe's
    /// phase on the grid, including its tilt relative to the optical axis.
    pub amplitude: ComplexFieldGrid,
    /// Transverse grating wavevector (rad/m) imprinted by the write beams.
    pub k_transverse: [f64; 2],
    pub created_at: f64,
    /// Time held since creation.
    pub age: f64,
    pub tau_coherence: f64,
    pub label: String,
}

impl SpinWave {
    pub fn excitation_number(&self) -> f64 {
        energy(&self.amplitude)
    }
}

/// Mixing angle θ of the dark-state polariton, `tan θ = g√N / Ω_c`.
pub fn dark_state_mixing(sys: &LambdaSystem) -> Result<f64> {
    if sys.coupling_rabi == 0.0 && sys.collective_coupling == 0.0 {
        return Err(Error::UndefinedPolariton);
    }
    Ok(sys.collective_coupling.atan2(sys.coupling_rabi))
}

pub fn group_velocity(theta: f64, c: f64) -> f64 {
    c * theta.cos().powi(2)
}

/// Complex amplitude transmittance of the probe at two-photon detuning
/// `detuning` (coupling on resonance): `exp(-OD/2 · χ)` with χ normalized to 1
/// for bare resonant two-level absorption.
pub fn eit_transmission(detuning: f64, sys: &LambdaSystem) -> Complex64 {
    let gamma_opt = Complex64::new(sys.excited_decay / 2.0, -detuning);
    let gamma_gs = Complex64::new(sys.ground_dephasing, -detuning);
    let denom = gamma_opt * gamma_gs + sys.coupling_rabi * sys.coupling_rabi / 4.0;
    let chi = if denom.norm() == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        sys.excited_decay / 2.0 * gamma_gs / denom
    };
    (-sys.optical_depth / 2.0 * chi).exp()
}

/// Energy bookkeeping of one write step (photons / excitations).
#[derive(Clone, Debug, PartialEq)]
pub struct Leakage {
    pub energy: f64,
    /// Leaked power at the cloud exit.
    pub trace: PulseEnvelope,
    pub field: ComplexFieldGrid,
    /// Photons inside the cloud at switch-off that were not converted.
    pub absorbed: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WriteOutcome {
    pub leakage: Leakage,
    pub wave: SpinWave,
    /// Part of the input envelope that was converted, scaled by η_w.
    pub stored_trace: PulseEnvelope,
    /// Time `L/v_g` to cross the cloud.
    pub transit_time: f64,
    pub input_energy: f64,
}

/// Switches the coupling off at `switch_off_time`. The part of the pulse that
/// entered the cloud during the preceding transit time is inside and is
/// converted with efficiency η_w; everything else leaks. The envelope carries
/// the photon number, `image` only the transverse mode at the cloud plane.
pub fn write_spinwave(
    pulse: &PulseEnvelope,
    image: &ComplexFieldGrid,
    channel: &StorageChannel,
    group_velocity: f64,
    cloud: &AtomicCloud,
    switch_off_time: f64,
    tau_coherence: f64,
) -> Result<WriteOutcome> {
    if !(group_velocity > 0.0 && group_velocity.is_finite()) {
        return Err(Error::NonPositiveGroupVelocity(group_velocity));
    }
    if !(tau_coherence > 0.0) {
        return Err(Error::invalid("medium.tau_coherence", "must be positive"));
    }
    let transit = cloud.length / group_velocity;
    let (a, b) = (switch_off_time - transit, switch_off_time);

    let input = pulse.energy();
    let inside = pulse.integral(a, b).min(input);
    let stored = channel.write_efficiency * inside;
    let absorbed = inside - stored;
    let leaked = (input - inside).max(0.0);

    let mode = if input > 0.0 {
        image.with_energy(1.0)?
    } else {
        ComplexFieldGrid::zeros(*image.grid(), image.wavelength())
    };
    let mode_scaled = |photons: f64| mode.scaled(Complex64::new(photons.sqrt(), 0.0));

    let wave = SpinWave {
        amplitude: mode_scaled(stored),
        k_transverse: channel.grating_wavevector(image.wavelength()),
        created_at: switch_off_time,
        age: 0.0,
        tau_coherence,
        label: channel.label.clone(),
    };
    let leakage = Leakage {
        energy: leaked,
        trace: pulse.excluding(a, b).shifted(transit),
        field: mode_scaled(leaked),
        absorbed,
    };
    Ok(WriteOutcome {
        leakage,
        wave,
        stored_trace: pulse.restricted(a, b).scaled(channel.write_efficiency),
        transit_time: transit,
        input_energy: input,
    })
}

/// Holds the spin wave for `dt`. The excitation number decays as
/// `exp(-dt/τ)`; all loss is lumped into τ. Ballistic atomic motion blurs the
/// pattern so that the total blur after an age `t` is a Gaussian of standard
/// deviation `v_rms·t`, without changing the excitation number. Successive
/// holds compose exactly.
pub fn evolve_spinwave(wave: &SpinWave, dt: f64, cloud: &AtomicCloud) -> Result<SpinWave> {
    if !(dt >= 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", format!("must be finite and >= 0, got {dt}")));
    }
    let mut out = wave.clone();
    if dt == 0.0 {
        return Ok(out);
    }
    let new_age = wave.age + dt;
    let decay = (-dt / (2.0 * wave.tau_coherence)).exp();
    let v = cloud.rms_speed;
    let added_variance = v * v * (new_age * new_age - wave.age * wave.age);

    let amp = &wave.amplitude;
    out.amplitude = if added_variance > 0.0 {
        let g = *amp.grid();
        let mut spectrum = amp.spectrum();
        for iy in 0..g.ny {
            let fy = g.fy(iy);
            for ix in 0..g.nx {
                let fx = g.fx(ix);
                let h = (-2.0 * PI * PI * added_variance * (fx * fx + fy * fy)).exp();
                spectrum[iy * g.nx + ix] *= h;
            }
        }
        let blurred = amp.with_spectrum(spectrum);
        let e = energy(&blurred);
        if e > 0.0 {
            blurred.scaled(Complex64::new(decay * (energy(amp) / e).sqrt(), 0.0))
        } else {
            blurred
        }
    } else {
        amp.scaled(Complex64::new(decay, 0.0))
    };
    out.age = new_age;
    Ok(out)
}

/// Maps the spin wave back onto light at the cloud plane. The re-emitted
/// field keeps the stored phase pattern, so it leaves along the write
/// direction.
pub fn read_spinwave(wave: &SpinWave, channel: &StorageChannel) -> ComplexFieldGrid {
    wave.amplitude.scaled(Complex64::new(channel.read_efficiency.sqrt(), 0.0))
}

/// Phase-matching overlap between a stored grating and a readout direction:
/// `|<exp(i Δk·r)>|` weighted by `|a(r)|²·exp(-2r²/w²)` over the transverse
/// grid, times `|sinc(Δk_z·L/2)|` for the longitudinal mismatch along the
/// cloud. Equals 1 for a matched readout.
pub fn crosstalk_coefficient(wave: &SpinWave, readout_k: [f64; 2], beam_waist: f64, cloud: &AtomicCloud) -> Result<f64> {
    if !(beam_waist > 0.0) {
        return Err(Error::invalid("beam_waist", "must be positive"));
    }
    let dk = [readout_k[0] - wave.k_transverse[0], readout_k[1] - wave.k_transverse[1]];
    if dk == [0.0, 0.0] {
        return Ok(1.0);
    }
    let amp = &wave.amplitude;
    let g = amp.grid();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut total = 0.0;
    for iy in 0..g.ny {
        let y = g.y(iy);
        for ix in 0..g.nx {
            let x = g.x(ix);
            let w = amp.at(ix, iy).norm_sqr() * (-2.0 * (x * x + y * y) / (beam_waist * beam_waist)).exp();
            acc += w * Complex64::from_polar(1.0, dk[0] * x + dk[1] * y);
            total += w;
        }
    }
    if total == 0.0 {
        return Ok(0.0);
    }
    let transverse = acc.norm() / total;

    let k = amp.wavenumber();
    let kz = |kt: [f64; 2]| (k * k - kt[0] * kt[0] - kt[1] * kt[1]).max(0.0).sqrt();
    let dkz = kz(readout_k) - kz(wave.k_transverse);
    let arg = dkz * cloud.length / 2.0;
    let longitudinal = if arg == 0.0 { 1.0 } else { (arg.sin() / arg).abs() };

    Ok((transverse * longitudinal).min(1.0))
}
