//! Image metrics and the decay fit.

use crate::error::{Error, Result};
use crate::raster::Image;
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// Down a column.
    Vertical,
    /// Along a row.
    Horizontal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Anchor {
    Centroid,
    /// Column (vertical profile) or row (horizontal profile) index.
    Index(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    pub values: Vec<f64>,
    pub axis: Axis,
    /// Column or row the profile runs through.
    pub offset: usize,
}

/// Intensity-weighted center `(x, y)`; negative pixels count as zero.
pub fn centroid(image: &Image) -> Option<(f64, f64)> {
    let (mut sx, mut sy, mut s) = (0.0, 0.0, 0.0);
    for y in 0..image.height() {
        for x in 0..image.width() {
            let v = image.get(x, y).max(0.0);
            sx += v * x as f64;
            sy += v * y as f64;
            s += v;
        }
    }
    (s > 0.0).then(|| (sx / s, sy / s))
}

fn anchor_index(image: &Image, axis: Axis, anchor: Anchor) -> Result<usize> {
    let (limit, idx) = match anchor {
        Anchor::Index(i) => (
            match axis {
                Axis::Vertical => image.width(),
                Axis::Horizontal => image.height(),
            },
            i,
        ),
        Anchor::Centroid => {
            let (cx, cy) = centroid(image).ok_or(Error::UndefinedMetric("centroid of an all-zero image"))?;
            match axis {
                Axis::Vertical => (image.width(), cx.round() as usize),
                Axis::Horizontal => (image.height(), cy.round() as usize),
            }
        }
    };
    if idx >= limit {
        return Err(Error::invalid("anchor", format!("index {idx} outside 0..{limit}")));
    }
    Ok(idx)
}

/// The single column or row through the anchor.
pub fn extract_profile(image: &Image, axis: Axis, anchor: Anchor) -> Result<Profile> {
    extract_band_profile(image, axis, anchor, 0)
}

/// Mean of the `2·half_width + 1` columns (or rows) centred on the anchor,
/// clipped at the image edge.
pub fn extract_band_profile(image: &Image, axis: Axis, anchor: Anchor, half_width: usize) -> Result<Profile> {
    if image.width() == 0 || image.height() == 0 {
        return Err(Error::invalid("image", "empty image"));
    }
    let c = anchor_index(image, axis, anchor)?;
    let (across, along) = match axis {
        Axis::Vertical => (image.width(), image.height()),
        Axis::Horizontal => (image.height(), image.width()),
    };
    let lo = c.saturating_sub(half_width);
    let hi = (c + half_width).min(across - 1);
    let n = (hi - lo + 1) as f64;
    let values = (0..along)
        .map(|j| {
            (lo..=hi)
                .map(|i| match axis {
                    Axis::Vertical => image.get(i, j),
                    Axis::Horizontal => image.get(j, i),
                })
                .sum::<f64>()
                / n
        })
        .collect();
    Ok(Profile { values, axis, offset: c })
}

/// `(max - min) / (max + min)` with negative samples floored at zero.
pub fn visibility(p: &Profile) -> Result<f64> {
    if p.values.is_empty() || p.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("profile", "must be nonempty and finite"));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in &p.values {
        let v = v.max(0.0);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if hi + lo <= 0.0 {
        return Err(Error::UndefinedMetric("visibility of an all-zero profile"));
    }
    Ok((hi - lo) / (hi + lo))
}

/// Normalized inner product of two images, negative pixels floored at zero.
pub fn similarity(a: &Image, b: &Image) -> Result<f64> {
    a.ensure_same_shape(b)?;
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.data().iter().zip(b.data()) {
        let (x, y) = (x.max(0.0), y.max(0.0));
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        return Err(Error::UndefinedMetric("similarity with an all-zero image"));
    }
    Ok((ab / (aa.sqrt() * bb.sqrt())).min(1.0))
}

/// Fit of `y0 + A·exp(-t/τ)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub y0: f64,
    pub amplitude: f64,
    pub tau: f64,
    /// Root of the summed squared residuals.
    pub residual_norm: f64,
    /// 95% confidence half-widths of `(y0, amplitude, tau)`; NaN with fewer
    /// than four samples' worth of degrees of freedom.
    pub half_widths: [f64; 3],
    pub iterations: usize,
}

impl DecayFit {
    pub fn eval(&self, t: f64) -> f64 {
        self.y0 + self.amplitude * (-t / self.tau).exp()
    }
}

const MAX_ITERATIONS: usize = 1000;

/// Damped Gauss-Newton fit with an analytic Jacobian on time and intensity
/// rescaled to unit range. Starts from `y0 = min`, `A = max - min`,
/// `τ = span / 3`.
pub fn fit_decay(samples: &[(f64, f64)]) -> Result<DecayFit> {
    if samples.len() < 4 {
        return Err(Error::invalid("samples", format!("need at least 4, got {}", samples.len())));
    }
    if samples.iter().any(|(t, y)| !t.is_finite() || !y.is_finite()) {
        return Err(Error::invalid("samples", "must be finite"));
    }
    let mut ts: Vec<f64> = samples.iter().map(|s| s.0).collect();
    ts.sort_by(f64::total_cmp);
    if ts.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("samples", "time values must be distinct"));
    }
    let (t_min, t_span) = (ts[0], ts[ts.len() - 1] - ts[0]);
    let y_min = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let y_max = samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let y_range = y_max - y_min;
    if !(y_range > 0.0) {
        return Err(Error::TauUnidentifiable("constant data".into()));
    }

    let data: Vec<(f64, f64)> = samples
        .iter()
        .map(|&(t, y)| ((t - t_min) / t_span, (y - y_min) / y_range))
        .collect();
    let first = data.iter().min_by(|a, b| a.0.total_cmp(&b.0)).unwrap().1;
    let last = data.iter().max_by(|a, b| a.0.total_cmp(&b.0)).unwrap().1;
    let mut p = Vector3::new(0.0, if first >= last { 1.0 } else { -1.0 }, 3.0);

    let residuals = |p: &Vector3<f64>| -> Vec<f64> {
        data.iter().map(|&(t, y)| y - (p[0] + p[1] * (-p[2] * t).exp())).collect()
    };
    let cost = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();
    let normal = |p: &Vector3<f64>, r: &[f64]| {
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for (&(t, _), &ri) in data.iter().zip(r) {
            let e = (-p[2] * t).exp();
            let j = Vector3::new(1.0, e, -p[1] * t * e);
            jtj += j * j.transpose();
            jtr += j * ri;
        }
        (jtj, jtr)
    };

    let mut r = residuals(&p);
    let mut c = cost(&r);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    loop {
        if iterations == MAX_ITERATIONS {
            return Err(Error::NoConvergence {
                iterations,
                cost: c,
                damping: lambda,
            });
        }
        iterations += 1;
        let (jtj, jtr) = normal(&p, &r);
        let mut damped = jtj;
        for i in 0..3 {
            damped[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
        }
        let Some(step) = damped.lu().solve(&jtr) else {
            lambda *= 10.0;
            continue;
        };
        let trial = p + step;
        let r_trial = residuals(&trial);
        let c_trial = cost(&r_trial);
        if c_trial.is_finite() && c_trial <= c {
            let small_step = step.norm() <= 1e-12 * (p.norm() + 1e-12);
            let small_gain = c - c_trial <= 1e-15 * c.max(1e-300);
            p = trial;
            r = r_trial;
            c = c_trial;
            lambda = (lambda / 10.0).max(1e-12);
            if small_step || small_gain || c < 1e-28 {
                break;
            }
        } else {
            lambda *= 10.0;
            // no descent direction left at any damping: a minimum
            if lambda > 1e16 {
                break;
            }
        }
    }

    if !(p[2] > 0.0) || !(p[1] > 0.0) {
        return Err(Error::TauUnidentifiable(format!(
            "fitted rate {:e} and amplitude {:e} do not describe a decay",
            p[2] / t_span,
            p[1] * y_range
        )));
    }

    let k = p[2] / t_span;
    let tau = 1.0 / k;
    let shift = (k * t_min).exp();
    let y0 = y_min + y_range * p[0];
    let amplitude = y_range * p[1] * shift;

    let dof = samples.len() as f64 - 3.0;
    let half_widths = {
        let (jtj, _) = normal(&p, &r);
        match (jtj.try_inverse(), StudentsT::new(0.0, 1.0, dof)) {
            (Some(inv), Ok(student)) => {
                let s2 = c / dof;
                let q = student.inverse_cdf(0.975);
                let hw = |i: usize| q * (s2 * inv[(i, i)]).max(0.0).sqrt();
                [
                    y_range * hw(0),
                    y_range * shift * hw(1),
                    t_span * hw(2) / (p[2] * p[2]),
                ]
            }
            _ => [f64::NAN; 3],
        }
    };
    let residual_norm = samples
        .iter()
        .map(|&(t, y)| (y - (y0 + amplitude * (-t / tau).exp())).powi(2))
        .sum::<f64>()
        .sqrt();

    Ok(DecayFit {
        y0,
        amplitude,
        tau,
        residual_norm,
        half_widths,
        iterations,
    })
}

/// Sample mean and unbiased standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Two-sided p-value of Welch's unequal-variance t-test.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::invalid("samples", "need at least two values per group"));
    }
    let (ma, sa) = mean_std(a);
    let (mb, sb) = mean_std(b);
    let (va, vb) = (sa * sa / a.len() as f64, sb * sb / b.len() as f64);
    if va + vb == 0.0 {
        return Ok(if ma == mb { 1.0 } else { 0.0 });
    }
    let t = (ma - mb) / (va + vb).sqrt();
    let df = (va + vb).powi(2) / (va * va / (a.len() as f64 - 1.0) + vb * vb / (b.len() as f64 - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::invalid("welch_t_test", e.to_string()))?;
    Ok(2.0 * (1.0 - dist.cdf(t.abs())))
}

/// Positions where a sequence ordered by increasing photon number drops.
/// Each entry is `(index, drop_within_one_sigma)` for the step `index -> index + 1`.
pub fn trend_inversions(means: &[f64], stds: &[f64]) -> Vec<(usize, bool)> {
    means
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] < w[0])
        .map(|(i, w)| {
            let sigma = stds.get(i).copied().unwrap_or(0.0).max(stds.get(i + 1).copied().unwrap_or(0.0));
            (i, w[0] - w[1] <= sigma)
        })
        .collect()
}
