//! Centered, unitary 2D FFT on row-major complex buffers.
//!
//! Sample `i` of an `n`-point axis sits at coordinate `(i - n/2)·pitch`, so the
//! origin is at index `n/2` in both the spatial and the spectral domain.

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

pub struct Fft2 {
    nx: usize,
    ny: usize,
    row: Arc<dyn Fft<f64>>,
    col: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(nx: usize, ny: usize, direction: Direction) -> Self {
        let dir = match direction {
            Direction::Forward => FftDirection::Forward,
            Direction::Inverse => FftDirection::Inverse,
        };
        let mut planner = FftPlanner::new();
        Self {
            nx,
            ny,
            row: planner.plan_fft(nx, dir),
            col: planner.plan_fft(ny, dir),
        }
    }

    /// In-place centered transform, scaled by `1/sqrt(nx·ny)`.
    pub fn process(&self, data: &mut [Complex64]) {
        let (nx, ny) = (self.nx, self.ny);
        assert_eq!(data.len(), nx * ny);

        ifftshift(data, nx, ny);

        self.row.process(data);

        let mut column = vec![Complex64::new(0.0, 0.0); ny];
        for ix in 0..nx {
            for iy in 0..ny {
                column[iy] = data[iy * nx + ix];
            }
            self.col.process(&mut column);
            for iy in 0..ny {
                data[iy * nx + ix] = column[iy];
            }
        }

        fftshift(data, nx, ny);

        let norm = 1.0 / ((nx * ny) as f64).sqrt();
        data.iter_mut().for_each(|v| *v *= norm);
    }
}

pub fn forward(data: &mut [Complex64], nx: usize, ny: usize) {
    Fft2::new(nx, ny, Direction::Forward).process(data);
}

pub fn inverse(data: &mut [Complex64], nx: usize, ny: usize) {
    Fft2::new(nx, ny, Direction::Inverse).process(data);
}

fn rotate(data: &mut [Complex64], nx: usize, ny: usize, sx: usize, sy: usize) {
    // out[j] = in[(j + s) mod n] along each axis
    if sx != 0 {
        for row in data.chunks_exact_mut(nx) {
            row.rotate_left(sx);
        }
    }
    if sy != 0 {
        data.rotate_left(sy * nx);
    }
    debug_assert_eq!(data.len(), nx * ny);
}

/// Moves the sample at index `n/2` to index 0.
pub fn ifftshift(data: &mut [Complex64], nx: usize, ny: usize) {
    rotate(data, nx, ny, nx / 2, ny / 2);
}

/// Inverse of [`ifftshift`]: moves index 0 to index `n/2`.
pub fn fftshift(data: &mut [Complex64], nx: usize, ny: usize) {
    rotate(data, nx, ny, nx - nx / 2, ny - ny / 2);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft_centered(data: &[Complex64], nx: usize, ny: usize) -> Vec<Complex64> {
        let (cx, cy) = ((nx / 2) as f64, (ny / 2) as f64);
        let mut out = vec![Complex64::new(0.0, 0.0); nx * ny];
        for ky in 0..ny {
            for kx in 0..nx {
                let mut acc = Complex64::new(0.0, 0.0);
                for y in 0..ny {
                    for x in 0..nx {
                        let phase = -2.0
                            * std::f64::consts::PI
                            * ((kx as f64 - cx) * (x as f64 - cx) / nx as f64
                                + (ky as f64 - cy) * (y as f64 - cy) / ny as f64);
                        acc += data[y * nx + x] * Complex64::from_polar(1.0, phase);
                    }
                }
                out[ky * nx + kx] = acc / ((nx * ny) as f64).sqrt();
            }
        }
        out
    }

    #[test]
    fn matches_direct_sum_for_odd_and_even_sizes() {
        for &(nx, ny) in &[(8, 6), (5, 7), (4, 4)] {
            let data: Vec<Complex64> = (0..nx * ny)
                .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
                .collect();
            let expected = naive_dft_centered(&data, nx, ny);
            let mut got = data.clone();
            forward(&mut got, nx, ny);
            for (a, b) in got.iter().zip(&expected) {
                assert!((a - b).norm() < 1e-12, "{nx}x{ny}: {a} vs {b}");
            }
            inverse(&mut got, nx, ny);
            for (a, b) in got.iter().zip(&data) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn shifts_are_inverse() {
        let (nx, ny) = (5, 4);
        let data: Vec<Complex64> = (0..nx * ny).map(|i| Complex64::new(i as f64, 0.0)).collect();
        let mut d = data.clone();
        ifftshift(&mut d, nx, ny);
        assert_eq!(d[0].re, ((ny / 2) * nx + nx / 2) as f64);
        fftshift(&mut d, nx, ny);
        assert_eq!(d, data);
    }
}
