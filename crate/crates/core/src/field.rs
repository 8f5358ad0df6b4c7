//! Complex transverse optical fields and Fourier-optics propagation.
//!
//! Amplitudes are in sqrt-photons per sample: the summed `|a|²` over the grid
//! is the expected photon number carried by the field.

use crate::error::{Error, Result};
use crate::fft;
use crate::raster::{GrayImage, Image};
use num_complex::Complex64;
use std::f64::consts::PI;

pub const DEFAULT_WAVELENGTH: f64 = 795e-9;

/// Fraction of output energy in the outer border band above which a lens
/// transform is flagged as at risk of wrap-around aliasing.
const ALIASING_EDGE_FRACTION: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransverseGrid {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
}

impl TransverseGrid {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::invalid("grid", format!("need at least 2x2 samples, got {nx}x{ny}")));
        }
        if !(dx > 0.0 && dy > 0.0) || !(dx * nx as f64).is_finite() || !(dy * ny as f64).is_finite() {
            return Err(Error::invalid("grid", format!("pitch must be positive and finite, got {dx} x {dy}")));
        }
        Ok(Self { nx, ny, dx, dy })
    }

    pub fn square(n: usize, pitch: f64) -> Result<Self> {
        Self::new(n, n, pitch, pitch)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, ix: usize) -> f64 {
        (ix as f64 - (self.nx / 2) as f64) * self.dx
    }

    pub fn y(&self, iy: usize) -> f64 {
        (iy as f64 - (self.ny / 2) as f64) * self.dy
    }

    pub fn extent(&self) -> (f64, f64) {
        (self.nx as f64 * self.dx, self.ny as f64 * self.dy)
    }

    /// Spatial frequency (cycles/m) of spectral sample `ix` in centered order.
    pub fn fx(&self, ix: usize) -> f64 {
        (ix as f64 - (self.nx / 2) as f64) / (self.nx as f64 * self.dx)
    }

    pub fn fy(&self, iy: usize) -> f64 {
        (iy as f64 - (self.ny / 2) as f64) / (self.ny as f64 * self.dy)
    }

    /// Grid of the focal plane reached by a lens of focal length `f` at `wavelength`.
    pub fn fourier_plane(&self, wavelength: f64, f: f64) -> TransverseGrid {
        TransverseGrid {
            nx: self.nx,
            ny: self.ny,
            dx: wavelength * f / (self.nx as f64 * self.dx),
            dy: wavelength * f / (self.ny as f64 * self.dy),
        }
    }

    /// Nearest transverse wavevector (rad/m) that is periodic on this grid.
    pub fn snap_wavevector(&self, k: [f64; 2]) -> [f64; 2] {
        let qx = 2.0 * PI / (self.nx as f64 * self.dx);
        let qy = 2.0 * PI / (self.ny as f64 * self.dy);
        [(k[0] / qx).round() * qx, (k[1] / qy).round() * qy]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexFieldGrid {
    grid: TransverseGrid,
    amplitude: Vec<Complex64>,
    wavelength: f64,
}

impl ComplexFieldGrid {
    pub fn zeros(grid: TransverseGrid, wavelength: f64) -> Self {
        Self {
            grid,
            amplitude: vec![Complex64::new(0.0, 0.0); grid.len()],
            wavelength,
        }
    }

    pub fn from_amplitudes(grid: TransverseGrid, amplitude: Vec<Complex64>, wavelength: f64) -> Result<Self> {
        if amplitude.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for a {}x{} grid",
                amplitude.len(),
                grid.nx,
                grid.ny
            )));
        }
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(Error::invalid("wavelength", format!("must be positive, got {wavelength}")));
        }
        if amplitude.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::invalid("amplitude", "non-finite sample"));
        }
        Ok(Self {
            grid,
            amplitude,
            wavelength,
        })
    }

    pub fn from_fn(grid: TransverseGrid, wavelength: f64, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let mut amplitude = Vec::with_capacity(grid.len());
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                amplitude.push(f(grid.x(ix), grid.y(iy)));
            }
        }
        Self {
            grid,
            amplitude,
            wavelength,
        }
    }

    /// Gaussian beam `exp(-r²/w0²)` scaled to carry `photons`.
    pub fn gaussian(grid: TransverseGrid, wavelength: f64, waist: f64, photons: f64) -> Self {
        Self::from_fn(grid, wavelength, |x, y| {
            Complex64::new((-(x * x + y * y) / (waist * waist)).exp(), 0.0)
        })
        .with_energy(photons)
        .expect("gaussian has nonzero energy")
    }

    pub fn with_wavelength(mut self, wavelength: f64) -> Self {
        self.wavelength = wavelength;
        self
    }

    pub fn grid(&self) -> &TransverseGrid {
        &self.grid
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitude
    }

    pub fn at(&self, ix: usize, iy: usize) -> Complex64 {
        self.amplitude[iy * self.grid.nx + ix]
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.amplitude.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn intensity_image(&self) -> Image {
        Image::from_vec(self.grid.nx, self.grid.ny, self.intensity()).expect("shape matches grid")
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            grid: self.grid,
            amplitude: self.amplitude.iter().map(|a| a * c).collect(),
            wavelength: self.wavelength,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::DimensionMismatch("fields live on different grids".into()));
        }
        Ok(Self {
            grid: self.grid,
            amplitude: self.amplitude.iter().zip(&other.amplitude).map(|(a, b)| a + b).collect(),
            wavelength: self.wavelength,
        })
    }

    /// Copy rescaled to carry `photons`. Fails on a zero field unless `photons == 0`.
    pub fn with_energy(&self, photons: f64) -> Result<Self> {
        if photons == 0.0 {
            return Ok(Self::zeros(self.grid, self.wavelength));
        }
        let e = energy(self);
        if e == 0.0 {
            return Err(Error::ZeroImage(photons));
        }
        Ok(self.scaled(Complex64::new((photons / e).sqrt(), 0.0)))
    }

    /// Multiplies by the linear phase `exp(i k·r)`.
    pub fn tilted(&self, k: [f64; 2]) -> Self {
        let g = self.grid;
        let mut out = self.clone();
        for iy in 0..g.ny {
            for ix in 0..g.nx {
                let phase = k[0] * g.x(ix) + k[1] * g.y(iy);
                out.amplitude[iy * g.nx + ix] *= Complex64::from_polar(1.0, phase);
            }
        }
        out
    }

    /// Multiplies by the real Gaussian envelope `exp(-r²/w²)`.
    pub fn with_gaussian_envelope(&self, waist: f64) -> Self {
        let g = self.grid;
        let mut out = self.clone();
        for iy in 0..g.ny {
            for ix in 0..g.nx {
                let r2 = g.x(ix).powi(2) + g.y(iy).powi(2);
                out.amplitude[iy * g.nx + ix] *= (-r2 / (waist * waist)).exp();
            }
        }
        out
    }

    pub(crate) fn spectrum(&self) -> Vec<Complex64> {
        let mut data = self.amplitude.clone();
        fft::forward(&mut data, self.grid.nx, self.grid.ny);
        data
    }

    pub(crate) fn with_spectrum(&self, mut spectrum: Vec<Complex64>) -> Self {
        fft::inverse(&mut spectrum, self.grid.nx, self.grid.ny);
        Self {
            grid: self.grid,
            amplitude: spectrum,
            wavelength: self.wavelength,
        }
    }

    /// Power-weighted centroid in physical coordinates.
    pub fn centroid(&self) -> Option<(f64, f64)> {
        let g = self.grid;
        let (mut sx, mut sy, mut s) = (0.0, 0.0, 0.0);
        for iy in 0..g.ny {
            for ix in 0..g.nx {
                let w = self.at(ix, iy).norm_sqr();
                sx += w * g.x(ix);
                sy += w * g.y(iy);
                s += w;
            }
        }
        (s > 0.0).then(|| (sx / s, sy / s))
    }
}

/// Expected photon number carried by the field.
pub fn energy(field: &ComplexFieldGrid) -> f64 {
    field.amplitude.iter().map(|a| a.norm_sqr()).sum()
}

/// Resamples an 8-bit mask onto `grid` (bilinear, pixel-center aligned, the
/// raster spanning the whole grid) and builds the field with amplitude
/// `sqrt(gray/255)`, rescaled to carry `total_photons`. Phase is zero.
pub fn load_mask(image: &GrayImage, grid: TransverseGrid, total_photons: f64) -> Result<ComplexFieldGrid> {
    if image.is_empty() {
        return Err(Error::invalid("mask", "empty image"));
    }
    if !(total_photons >= 0.0 && total_photons.is_finite()) {
        return Err(Error::invalid("total_photons", format!("must be >= 0, got {total_photons}")));
    }
    let (w, h) = (image.width, image.height);
    let sample = |u: f64, v: f64| -> f64 {
        let u = u.clamp(0.0, (w - 1) as f64);
        let v = v.clamp(0.0, (h - 1) as f64);
        let (u0, v0) = (u.floor() as usize, v.floor() as usize);
        let (u1, v1) = ((u0 + 1).min(w - 1), (v0 + 1).min(h - 1));
        let (fu, fv) = (u - u0 as f64, v - v0 as f64);
        let g = |x, y| image.get(x, y) as f64;
        (1.0 - fv) * ((1.0 - fu) * g(u0, v0) + fu * g(u1, v0)) + fv * ((1.0 - fu) * g(u0, v1) + fu * g(u1, v1))
    };
    let mut amplitude = Vec::with_capacity(grid.len());
    for iy in 0..grid.ny {
        let v = (iy as f64 + 0.5) * h as f64 / grid.ny as f64 - 0.5;
        for ix in 0..grid.nx {
            let u = (ix as f64 + 0.5) * w as f64 / grid.nx as f64 - 0.5;
            amplitude.push(Complex64::new((sample(u, v) / 255.0).sqrt(), 0.0));
        }
    }
    ComplexFieldGrid::from_amplitudes(grid, amplitude, DEFAULT_WAVELENGTH)?.with_energy(total_photons)
}

/// Scalar angular-spectrum propagation over `distance` (may be negative).
/// Evanescent components are discarded.
pub fn propagate_angular_spectrum(field: &ComplexFieldGrid, distance: f64) -> Result<ComplexFieldGrid> {
    if !distance.is_finite() {
        return Err(Error::invalid("distance", "must be finite"));
    }
    if distance == 0.0 {
        return Ok(field.clone());
    }
    let g = field.grid;
    let k = field.wavenumber();
    let mut spectrum = field.spectrum();
    for iy in 0..g.ny {
        let ky = 2.0 * PI * g.fy(iy);
        for ix in 0..g.nx {
            let kx = 2.0 * PI * g.fx(ix);
            let kz2 = k * k - kx * kx - ky * ky;
            let h = if kz2 > 0.0 {
                Complex64::from_polar(1.0, kz2.sqrt() * distance)
            } else {
                Complex64::new(0.0, 0.0)
            };
            spectrum[iy * g.nx + ix] *= h;
        }
    }
    Ok(field.with_spectrum(spectrum))
}

#[derive(Clone, Debug)]
pub struct LensOutput {
    pub field: ComplexFieldGrid,
    /// Set when a noticeable share of the output energy sits at the grid
    /// border, i.e. the focal-plane pattern likely wraps around.
    pub aliasing_risk: bool,
}

/// Front-focal-plane to back-focal-plane transform of a thin lens: a scaled
/// Fourier transform with output pitch `λ·f/(n·dx)`.
pub fn lens_transform(field: &ComplexFieldGrid, focal_length: f64) -> Result<LensOutput> {
    if !(focal_length > 0.0 && focal_length.is_finite()) {
        return Err(Error::invalid("focal_length", format!("must be positive, got {focal_length}")));
    }
    let g = field.grid;
    // the 1/(iλf) prefactor of the Fraunhofer integral reduces to -i for the unitary DFT
    let spectrum: Vec<Complex64> = field.spectrum().into_iter().map(|a| a * Complex64::new(0.0, -1.0)).collect();
    let out = ComplexFieldGrid {
        grid: g.fourier_plane(field.wavelength, focal_length),
        amplitude: spectrum,
        wavelength: field.wavelength,
    };
    let aliasing_risk = edge_fraction(&out) > ALIASING_EDGE_FRACTION;
    Ok(LensOutput {
        field: out,
        aliasing_risk,
    })
}

fn edge_fraction(field: &ComplexFieldGrid) -> f64 {
    let g = field.grid;
    let bx = (g.nx / 16).max(1);
    let by = (g.ny / 16).max(1);
    let total = energy(field);
    if total == 0.0 {
        return 0.0;
    }
    let mut edge = 0.0;
    for iy in 0..g.ny {
        for ix in 0..g.nx {
            if ix < bx || ix >= g.nx - bx || iy < by || iy >= g.ny - by {
                edge += field.at(ix, iy).norm_sqr();
            }
        }
    }
    edge / total
}

/// Two-lens relay: mask → lens 1 → cloud (Fourier plane) → lens 2 → camera.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OpticalLayout {
    pub f1: f64,
    pub f2: f64,
}

impl OpticalLayout {
    pub fn new(f1: f64, f2: f64) -> Result<Self> {
        if !(f1 > 0.0 && f1.is_finite()) {
            return Err(Error::invalid("optics.f1", format!("must be positive, got {f1}")));
        }
        if !(f2 > 0.0 && f2.is_finite()) {
            return Err(Error::invalid("optics.f2", format!("must be positive, got {f2}")));
        }
        Ok(Self { f1, f2 })
    }

    /// Plane spacings mask→lens1, lens1→cloud, cloud→lens2, lens2→camera.
    pub fn spacings(&self) -> [f64; 4] {
        [self.f1, self.f1, self.f2, self.f2]
    }

    /// Lateral magnification of the relay (the image is also inverted).
    pub fn magnification(&self) -> f64 {
        self.f2 / self.f1
    }

    pub fn mask_to_cloud(&self, field: &ComplexFieldGrid) -> Result<LensOutput> {
        lens_transform(field, self.f1)
    }

    pub fn cloud_to_camera(&self, field: &ComplexFieldGrid) -> Result<LensOutput> {
        lens_transform(field, self.f2)
    }

    pub fn relay(&self, field: &ComplexFieldGrid) -> Result<ComplexFieldGrid> {
        let cloud = self.mask_to_cloud(field)?.field;
        Ok(self.cloud_to_camera(&cloud)?.field)
    }
}

/// Expected photons per pixel on a sensor of `nx`×`ny` pixels with the given
/// pitch, centered on the optical axis. Bilinear in photon density; exact
/// when the sensor pitch equals the field pitch.
pub fn resample_to_sensor(field: &ComplexFieldGrid, nx: usize, ny: usize, pitch_x: f64, pitch_y: f64) -> Image {
    let g = field.grid;
    let intensity = field.intensity();
    let density = |ix: isize, iy: isize| -> f64 {
        if ix < 0 || iy < 0 || ix >= g.nx as isize || iy >= g.ny as isize {
            0.0
        } else {
            intensity[iy as usize * g.nx + ix as usize]
        }
    };
    let area_ratio = (pitch_x * pitch_y) / (g.dx * g.dy);
    Image::from_fn(nx, ny, |px, py| {
        let x = (px as f64 - (nx / 2) as f64) * pitch_x;
        let y = (py as f64 - (ny / 2) as f64) * pitch_y;
        let u = x / g.dx + (g.nx / 2) as f64;
        let v = y / g.dy + (g.ny / 2) as f64;
        let (u0, v0) = (u.floor(), v.floor());
        let (fu, fv) = (u - u0, v - v0);
        let (i0, j0) = (u0 as isize, v0 as isize);
        let val = (1.0 - fv) * ((1.0 - fu) * density(i0, j0) + fu * density(i0 + 1, j0))
            + fv * ((1.0 - fu) * density(i0, j0 + 1) + fu * density(i0 + 1, j0 + 1));
        val * area_ratio
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, pitch: f64) -> TransverseGrid {
        TransverseGrid::square(n, pitch).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn grid_rejects_degenerate_sizes() {
        assert!(TransverseGrid::new(1, 4, 1e-5, 1e-5).is_err());
        assert!(TransverseGrid::new(4, 4, 0.0, 1e-5).is_err());
        assert!(TransverseGrid::new(4, 4, 1e-5, f64::INFINITY).is_err());
    }

    #[test]
    fn uniform_mask_gives_unit_amplitudes() {
        let img = GrayImage::filled(4, 4, 255);
        let f = load_mask(&img, grid(4, 1e-5), 16.0).unwrap();
        for a in f.amplitudes() {
            assert!((a.re - 1.0).abs() < 1e-15 && a.im == 0.0);
        }
    }

    #[test]
    fn zero_photons_gives_zero_field() {
        let img = GrayImage::new(2, 2, vec![10, 20, 30, 40]).unwrap();
        let f = load_mask(&img, grid(4, 1e-5), 0.0).unwrap();
        assert_eq!(energy(&f), 0.0);
        let black = GrayImage::filled(3, 3, 0);
        assert!(load_mask(&black, grid(4, 1e-5), 0.0).is_ok());
    }

    #[test]
    fn black_mask_cannot_be_normalized() {
        let black = GrayImage::filled(3, 3, 0);
        assert!(matches!(load_mask(&black, grid(4, 1e-5), 5.0), Err(Error::ZeroImage(_))));
    }

    #[test]
    fn half_white_mask_puts_all_photons_in_white_half() {
        let n = 8;
        let pixels = (0..n * n).map(|i| if i % n < n / 2 { 255 } else { 0 }).collect();
        let img = GrayImage::new(n, n, pixels).unwrap();
        let f = load_mask(&img, grid(n, 1e-5), 100.0).unwrap();
        // direct pixel sums over each half
        let (mut white, mut black) = (0.0, 0.0);
        for iy in 0..n {
            for ix in 0..n {
                let p = f.at(ix, iy).norm_sqr();
                if ix < n / 2 {
                    white += p;
                } else {
                    black += p;
                }
            }
        }
        assert!((white - 100.0).abs() < 1e-12);
        assert_eq!(black, 0.0);
    }

    #[test]
    fn mask_energy_matches_requested_photons() {
        let img = GrayImage::new(3, 2, vec![0, 90, 255, 17, 3, 200]).unwrap();
        let f = load_mask(&img, grid(16, 2e-5), 305.0).unwrap();
        assert!(rel(energy(&f), 305.0) < 1e-12);
    }

    #[test]
    fn energy_is_homogeneous() {
        let f = ComplexFieldGrid::gaussian(grid(16, 1e-5), DEFAULT_WAVELENGTH, 3e-5, 7.0);
        let c = Complex64::new(0.3, -1.2);
        assert!(rel(energy(&f.scaled(c)), 7.0 * c.norm_sqr()) < 1e-12);
        assert_eq!(energy(&ComplexFieldGrid::zeros(grid(4, 1.0), 1e-6)), 0.0);
    }

    #[test]
    fn zero_distance_is_identity() {
        let f = ComplexFieldGrid::gaussian(grid(32, 1e-5), DEFAULT_WAVELENGTH, 5e-5, 1.0);
        let p = propagate_angular_spectrum(&f, 0.0).unwrap();
        assert_eq!(p, f);
    }

    #[test]
    fn propagation_conserves_energy() {
        let f = ComplexFieldGrid::gaussian(grid(64, 1e-5), DEFAULT_WAVELENGTH, 8e-5, 3.0);
        for d in [1e-3, 0.05, -0.2] {
            let p = propagate_angular_spectrum(&f, d).unwrap();
            assert!(rel(energy(&p), 3.0) < 1e-10, "d={d}");
        }
    }

    #[test]
    fn evanescent_components_are_removed() {
        // pitch below λ/2 puts the grid corners beyond the propagating band
        let g = grid(16, 0.2e-6);
        let f = ComplexFieldGrid::from_fn(g, DEFAULT_WAVELENGTH, |x, y| {
            Complex64::new(if x == 0.0 && y == 0.0 { 1.0 } else { 0.0 }, 0.0)
        });
        let p = propagate_angular_spectrum(&f, 1e-6).unwrap();
        assert!(energy(&p) < 1.0);
    }

    #[test]
    fn lens_maps_point_to_flat_magnitude() {
        let g = grid(16, 1e-5);
        let f = ComplexFieldGrid::from_fn(g, DEFAULT_WAVELENGTH, |x, y| {
            Complex64::new(if x == 0.0 && y == 0.0 { 4.0 } else { 0.0 }, 0.0)
        });
        let out = lens_transform(&f, 0.3).unwrap();
        let m0 = out.field.amplitudes()[0].norm();
        for a in out.field.amplitudes() {
            assert!((a.norm() - m0).abs() < 1e-12);
        }
        assert!(rel(energy(&out.field), 16.0) < 1e-10);
        assert!(out.aliasing_risk);
    }

    #[test]
    fn lens_rejects_bad_focal_length() {
        let f = ComplexFieldGrid::zeros(grid(4, 1e-5), DEFAULT_WAVELENGTH);
        assert!(lens_transform(&f, 0.0).is_err());
        assert!(lens_transform(&f, -1.0).is_err());
    }

    #[test]
    fn relay_flips_and_magnifies() {
        let g = grid(32, 3e-5);
        let f = ComplexFieldGrid::from_fn(g, DEFAULT_WAVELENGTH, |x, y| {
            let r2 = (x - 1.5e-4).powi(2) + (y + 0.6e-4).powi(2);
            Complex64::new((-r2 / (6e-5f64).powi(2)).exp(), 0.0)
        });
        let layout = OpticalLayout::new(0.3, 0.5).unwrap();
        let out = layout.relay(&f).unwrap();
        assert!(rel(out.grid().dx, 3e-5 * 5.0 / 3.0) < 1e-12);
        let (cx, cy) = f.centroid().unwrap();
        let (ox, oy) = out.centroid().unwrap();
        assert!(rel(ox, -cx * 5.0 / 3.0) < 1e-6);
        assert!(rel(oy, -cy * 5.0 / 3.0) < 1e-6);
    }

    #[test]
    fn snapped_tilt_is_periodic() {
        let g = grid(64, 3e-5);
        let k = g.snap_wavevector([6.2e4, 0.0]);
        let q = 2.0 * PI / (64.0 * 3e-5);
        assert!(((k[0] / q) - (k[0] / q).round()).abs() < 1e-12);
        assert!((k[0] - 6.2e4).abs() <= q / 2.0);
    }

    #[test]
    fn sensor_resampling_is_exact_at_matching_pitch() {
        let g = grid(8, 5e-5);
        let f = ComplexFieldGrid::from_fn(g, DEFAULT_WAVELENGTH, |x, y| Complex64::new(x * 1e4 + y * 3e4, 0.1));
        let img = resample_to_sensor(&f, 8, 8, 5e-5, 5e-5);
        for (a, b) in img.data().iter().zip(f.intensity()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
