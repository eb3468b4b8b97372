//! Hologram quality figures: fringe visibility, total signal-to-noise and
//! fringe signal-to-noise from a fit of a Gaussian-enveloped sinusoid.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reconstruct::wrap_phase;
use crate::scan::HologramFrame;

/// Extremum pair used for a visibility value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Visibility {
    pub value: f64,
    pub max_index: usize,
    pub min_index: usize,
}

/// `(max - min) / (max + min)` from a local maximum and the next local
/// minimum after it, taking the pair whose midpoint lies nearest the
/// intensity centroid of the profile.
///
/// An interior local maximum satisfies `y[i-1] < y[i] >= y[i+1]`; the next
/// local minimum is the first later `j` with `y[j] < y[j-1]` and either
/// `j` last or `y[j] <= y[j+1]`.
pub fn visibility(profile: &[f64]) -> Result<Visibility> {
    if profile.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::data("profile values must be finite and >= 0"));
    }
    let n = profile.len();
    let total: f64 = profile.iter().sum();
    let centroid = if total > 0.0 {
        profile.iter().enumerate().map(|(i, v)| i as f64 * v).sum::<f64>() / total
    } else {
        (n as f64 - 1.0) / 2.0
    };
    let mut best: Option<(f64, usize, usize)> = None;
    for i in 1..n.saturating_sub(1) {
        if !(profile[i] > profile[i - 1] && profile[i] >= profile[i + 1]) {
            continue;
        }
        let next_min =
            (i + 1..n).find(|&j| profile[j] < profile[j - 1] && (j == n - 1 || profile[j] <= profile[j + 1]));
        if let Some(j) = next_min {
            let d = ((i + j) as f64 / 2.0 - centroid).abs();
            if best.is_none_or(|(bd, _, _)| d < bd) {
                best = Some((d, i, j));
            }
        }
    }
    let (_, i, j) =
        best.ok_or_else(|| Error::InsufficientFringe("no local maximum followed by a local minimum".into()))?;
    let (hi, lo) = (profile[i], profile[j]);
    Ok(Visibility {
        value: (hi - lo) / (hi + lo),
        max_index: i,
        min_index: j,
    })
}

/// Column profile of a frame summed over `rows` (vertical fringes give a
/// fringe profile along x).
pub fn column_profile(frame: &HologramFrame, rows: std::ops::Range<usize>) -> Result<Vec<f64>> {
    if rows.is_empty() || rows.end > frame.height() {
        return Err(Error::Bounds(format!(
            "rows {rows:?} outside frame of height {}",
            frame.height()
        )));
    }
    Ok((0..frame.width())
        .map(|i| rows.clone().map(|j| frame.counts[[j, i]] as f64).sum())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrChannel {
    Heralded,
    Nonheralded,
}

/// Signal and noise totals for [`snr_total`]. Units are counts, or counts
/// per second per pixel when comparing averages.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SnrInputs {
    /// Heralded single photons.
    pub s_h: f64,
    /// Herald singles coinciding with imaging-detector darks.
    pub n_hd: f64,
    /// Herald darks coinciding with imaging darks.
    pub n_dd: f64,
    /// All non-heralded events.
    pub s_nh: f64,
    /// Imaging-detector dark estimate.
    pub n_nh: f64,
    /// Pixels covered by the totals.
    pub pixels: usize,
}

impl SnrInputs {
    /// Per-pixel averages of one measured hologram.
    pub fn from_measured(m: &crate::forward::MeasuredRates) -> Self {
        Self {
            s_h: m.heralded_signal,
            n_hd: m.coincidence_noise,
            n_dd: 0.0,
            s_nh: m.nonheralded,
            n_nh: m.imaging_noise,
            pixels: 1,
        }
    }

    /// Whole-frame totals from both frames; see [`SnrInputs::heralded_frame`]
    /// and [`SnrInputs::nonheralded_frame`].
    pub fn from_frames(
        heralded: &HologramFrame,
        nonheralded: &HologramFrame,
        herald_rate: f64,
        herald_dark_rate: f64,
        dark_rate: f64,
        window_s: f64,
    ) -> Result<Self> {
        if heralded.counts.dim() != nonheralded.counts.dim() {
            return Err(Error::data("heralded and non-heralded frames differ in shape"));
        }
        let h = Self::heralded_frame(heralded, herald_rate, herald_dark_rate, dark_rate, window_s);
        let nh = Self::nonheralded_frame(nonheralded);
        Ok(Self {
            s_nh: nh.s_nh,
            n_nh: nh.n_nh,
            ..h
        })
    }

    /// Heralded totals of one frame. The coincidence noise is the expected
    /// number of herald singles (`herald_rate`) meeting imaging darks
    /// (`dark_rate`) within `window_s` over the whole dwell; it is removed
    /// from the heralded total to give `s_h`. `n_dd` uses the herald dark
    /// rate the same way.
    pub fn heralded_frame(
        frame: &HologramFrame,
        herald_rate: f64,
        herald_dark_rate: f64,
        dark_rate: f64,
        window_s: f64,
    ) -> Self {
        let pixels = frame.counts.len();
        let exposure = frame.integration_time * pixels as f64;
        let n_hd = herald_rate * dark_rate * window_s * exposure;
        Self {
            s_h: (frame.total() as f64 - n_hd).max(0.0),
            n_hd,
            n_dd: herald_dark_rate * dark_rate * window_s * exposure,
            pixels,
            ..Self::default()
        }
    }

    /// Non-heralded totals of one frame: all counts as signal, the lowest
    /// pixel count times the number of pixels as noise.
    pub fn nonheralded_frame(frame: &HologramFrame) -> Self {
        let pixels = frame.counts.len();
        let floor = frame.counts.iter().copied().min().unwrap_or(0) as f64;
        Self {
            s_nh: frame.total() as f64,
            n_nh: floor * pixels as f64,
            pixels,
            ..Self::default()
        }
    }
}

/// Total SNR. Heralded: `s_h / (n_hd + n_dd)`, with `n_dd` dropped unless
/// `include_dark_dark`. Non-heralded: `s_nh / n_nh`.
pub fn snr_total(inputs: &SnrInputs, channel: SnrChannel, include_dark_dark: bool) -> Result<f64> {
    let (s, n) = match channel {
        SnrChannel::Heralded => (
            inputs.s_h,
            inputs.n_hd + if include_dark_dark { inputs.n_dd } else { 0.0 },
        ),
        SnrChannel::Nonheralded => (inputs.s_nh, inputs.n_nh),
    };
    if !(n > 0.0) {
        return Err(Error::UndefinedStatistic(format!(
            "{channel:?} SNR has zero noise"
        )));
    }
    Ok(s / n)
}

/// Parameters of `y(x) = y0 + amplitude·exp(-(x - x0)²/(2·width²))·(1 +
/// modulation·sin(omega·x + phi))`, with `x` the sample index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitParams {
    pub y0: f64,
    pub amplitude: f64,
    pub x0: f64,
    pub width: f64,
    pub modulation: f64,
    /// Radians per pixel.
    pub omega: f64,
    pub phi: f64,
}

impl FitParams {
    pub fn eval(&self, x: f64) -> f64 {
        let d = x - self.x0;
        let g = (-d * d / (2.0 * self.width * self.width)).exp();
        self.y0 + self.amplitude * g * (1.0 + self.modulation * (self.omega * x + self.phi).sin())
    }

    fn to_vec(self) -> DVector<f64> {
        DVector::from_vec(vec![
            self.y0,
            self.amplitude,
            self.x0,
            self.width,
            self.modulation,
            self.omega,
            self.phi,
        ])
    }

    fn from_vec(v: &DVector<f64>) -> Self {
        Self {
            y0: v[0],
            amplitude: v[1],
            x0: v[2],
            width: v[3],
            modulation: v[4],
            omega: v[5],
            phi: v[6],
        }
    }

    /// Same curve with `width > 0`, `modulation >= 0`, `omega > 0` where the
    /// sign can be absorbed, and `phi` in `(-π, π]`.
    fn canonical(mut self) -> Self {
        self.width = self.width.abs();
        if self.omega < 0.0 {
            self.omega = -self.omega;
            self.phi = -self.phi;
            self.modulation = -self.modulation;
        }
        if self.modulation < 0.0 {
            self.modulation = -self.modulation;
            self.phi += PI;
        }
        self.phi = wrap_phase(self.phi);
        self
    }
}

/// Below this `|modulation|` the frequency and phase are not identifiable.
pub const DEGENERATE_MODULATION: f64 = 1e-3;
const MAX_ITERATIONS: usize = 500;
const REL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeFit {
    pub params: FitParams,
    /// `sqrt(Σ(y_fit - y)² / m)`.
    pub residual_rms: f64,
    /// RMS residual at the initial guess.
    pub initial_rms: f64,
    pub iterations: usize,
    /// Modulation too small for `omega` and `phi` to mean anything.
    pub degenerate: bool,
}

fn residuals(p: &FitParams, y: &[f64]) -> DVector<f64> {
    DVector::from_iterator(y.len(), y.iter().enumerate().map(|(i, &v)| p.eval(i as f64) - v))
}

fn jacobian(p: &FitParams, m: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(m, 7);
    for i in 0..m {
        let x = i as f64;
        let d = x - p.x0;
        let w2 = p.width * p.width;
        let g = (-d * d / (2.0 * w2)).exp();
        let arg = p.omega * x + p.phi;
        let (s, c) = arg.sin_cos();
        let f = 1.0 + p.modulation * s;
        let agf = p.amplitude * g * f;
        let agbc = p.amplitude * g * p.modulation * c;
        j[(i, 0)] = 1.0;
        j[(i, 1)] = g * f;
        j[(i, 2)] = agf * d / w2;
        j[(i, 3)] = agf * d * d / (w2 * p.width);
        j[(i, 4)] = p.amplitude * g * s;
        j[(i, 5)] = agbc * x;
        j[(i, 6)] = agbc;
    }
    j
}

/// Linear least squares `min |A c - y|`.
fn linear_solve(a: &DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    a.clone().svd(true, true).solve(y, 1e-12).ok()
}

/// Frequency candidates (rad/pixel) from the strongest spectral peaks of the
/// envelope-detrended line, refined by parabolic interpolation.
fn omega_candidates(detrended: &[f64], count: usize) -> Vec<f64> {
    let m = detrended.len();
    let mut buf: Vec<Complex64> = detrended.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::<f64>::new().plan_fft_forward(m).process(&mut buf);
    let mag: Vec<f64> = buf.iter().map(|c| c.norm()).collect();
    let mut peaks: Vec<(usize, f64)> = (1..=m / 2)
        .filter(|&k| {
            let left = mag[k - 1];
            let right = if k + 1 <= m / 2 { mag[k + 1] } else { 0.0 };
            mag[k] >= left && mag[k] >= right && mag[k] > 0.0
        })
        .map(|k| (k, mag[k]))
        .collect();
    peaks.sort_unstable_by(|a, b| b.1.total_cmp(&a.1));
    peaks
        .into_iter()
        .take(count)
        .map(|(k, _)| {
            let shift = if k >= 1 && k + 1 <= m / 2 {
                let (a, b, c) = (mag[k - 1], mag[k], mag[k + 1]);
                let den = a - 2.0 * b + c;
                if den.abs() > 0.0 {
                    (0.5 * (a - c) / den).clamp(-0.5, 0.5)
                } else {
                    0.0
                }
            } else {
                0.0
            };
            2.0 * PI * (k as f64 + shift) / m as f64
        })
        .collect()
}

/// Data-driven starting point: offset from the minimum, envelope centre and
/// width from the first two moments, frequency from the spectrum of the
/// detrended line, then offset, amplitude and the two quadrature fringe
/// components by a linear solve.
pub fn initial_guess(y: &[f64]) -> FitParams {
    let m = y.len();
    let xs: Vec<f64> = (0..m).map(|i| i as f64).collect();
    let y0 = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let lifted: Vec<f64> = y.iter().map(|v| v - y0).collect();
    let mass: f64 = lifted.iter().sum();
    let (x0, width) = if mass > 0.0 {
        let x0 = xs.iter().zip(&lifted).map(|(x, v)| x * v).sum::<f64>() / mass;
        let var = xs
            .iter()
            .zip(&lifted)
            .map(|(x, v)| (x - x0).powi(2) * v)
            .sum::<f64>()
            / mass;
        (x0, var.sqrt().max(0.5))
    } else {
        ((m as f64 - 1.0) / 2.0, m as f64 / 4.0)
    };
    let env: Vec<f64> = xs
        .iter()
        .map(|x| (-(x - x0).powi(2) / (2.0 * width * width)).exp())
        .collect();
    let yv = DVector::from_column_slice(y);
    let base = DMatrix::from_fn(m, 2, |i, k| if k == 0 { 1.0 } else { env[i] });
    let (b0, b1) = match linear_solve(&base, &yv) {
        Some(c) => (c[0], c[1]),
        None => (y0, 0.0),
    };
    let detrended: Vec<f64> = (0..m).map(|i| y[i] - b0 - b1 * env[i]).collect();

    let mut best: Option<(f64, FitParams)> = None;
    for omega in omega_candidates(&detrended, 3) {
        let a = DMatrix::from_fn(m, 4, |i, k| match k {
            0 => 1.0,
            1 => env[i],
            2 => env[i] * (omega * xs[i]).sin(),
            _ => env[i] * (omega * xs[i]).cos(),
        });
        let Some(c) = linear_solve(&a, &yv) else { continue };
        let amplitude = c[1];
        let ab = c[2].hypot(c[3]);
        let p = FitParams {
            y0: c[0],
            amplitude,
            x0,
            width,
            modulation: if amplitude.abs() > 0.0 {
                ab / amplitude
            } else {
                0.0
            },
            omega,
            phi: c[3].atan2(c[2]),
        };
        let cost = residuals(&p, y).norm_squared();
        if best.as_ref().is_none_or(|(bc, _)| cost < *bc) {
            best = Some((cost, p));
        }
    }
    best.map(|(_, p)| p).unwrap_or(FitParams {
        y0: b0,
        amplitude: b1,
        x0,
        width,
        modulation: 0.0,
        omega: PI / 2.0,
        phi: 0.0,
    })
}

/// Least-squares fit of the fringe model by damped Gauss-Newton
/// (Levenberg-Marquardt) with an analytic Jacobian.
///
/// Stops when an accepted step changes the cost by less than 1e-9
/// relative, when the cost reaches rounding level, or when no damping makes
/// progress. Running out of iterations is a [`Error::Fit`] carrying the
/// best parameters found.
pub fn fit_fringe(line: &[f64]) -> Result<FringeFit> {
    let m = line.len();
    if m < 14 {
        return Err(Error::InsufficientFringe(format!(
            "line of {m} samples is too short for a 7-parameter fit (need 14)"
        )));
    }
    if line.iter().any(|v| !v.is_finite()) {
        return Err(Error::data("line contains non-finite values"));
    }
    fit_from(line, initial_guess(line))
}

/// As [`fit_fringe`] from a caller-supplied starting point.
///
/// A fringe with less than one period across the lit span (the line, or
/// four envelope widths if narrower) trades off against the envelope and
/// cannot be identified. Such fits are redone with the fringe term held at
/// zero and flagged degenerate.
pub fn fit_from(line: &[f64], start: FitParams) -> Result<FringeFit> {
    let full = levenberg_marquardt(line, start, false);
    let (omega, width) = match &full {
        Ok(f) => (f.params.omega, f.params.width),
        Err(Error::Fit { params, .. }) => (params.omega, params.width),
        Err(_) => return full,
    };
    let span = (line.len() as f64).min(4.0 * width.abs());
    if omega * span >= 2.0 * PI {
        return full;
    }
    let envelope_only = FitParams {
        modulation: 0.0,
        phi: 0.0,
        ..start
    };
    levenberg_marquardt(line, envelope_only, true).map(|f| FringeFit {
        degenerate: true,
        ..f
    })
}

fn levenberg_marquardt(line: &[f64], start: FitParams, envelope_only: bool) -> Result<FringeFit> {
    let m = line.len();
    let scale: f64 = line.iter().map(|v| v * v).sum::<f64>().max(1e-300);
    let mut p = start.to_vec();
    let mut r = residuals(&start, line);
    let mut cost = r.norm_squared();
    let initial_rms = (cost / m as f64).sqrt();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        if cost <= 1e-28 * scale {
            converged = true;
            break;
        }
        let cur = FitParams::from_vec(&p);
        let mut j = jacobian(&cur, m);
        if envelope_only {
            j.column_mut(4).fill(0.0);
        }
        let jtj = j.transpose() * &j;
        let grad = j.transpose() * &r;
        let max_diag = (0..7).map(|k| jtj[(k, k)]).fold(0.0, f64::max).max(1e-300);
        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for k in 0..7 {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12 * max_diag);
            }
            if let Some(step) = a.lu().solve(&(-&grad)) {
                let trial = &p + &step;
                let tp = FitParams::from_vec(&trial);
                let tr = residuals(&tp, line);
                let tc = tr.norm_squared();
                if tc.is_finite() && tc < cost {
                    let rel = (cost - tc) / cost;
                    p = trial;
                    r = tr;
                    cost = tc;
                    lambda = (lambda / 10.0).max(1e-12);
                    accepted = true;
                    if rel < REL_TOLERANCE {
                        converged = true;
                    }
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !accepted {
            // No damping reduces the cost: a minimum to working precision.
            converged = true;
        }
        if converged {
            break;
        }
    }
    let params = FitParams::from_vec(&p).canonical();
    let residual_rms = (cost / m as f64).sqrt();
    if !converged {
        return Err(Error::Fit {
            params: Box::new(params),
            residual_rms,
            iterations,
        });
    }
    Ok(FringeFit {
        degenerate: params.modulation.abs() < DEGENERATE_MODULATION,
        params,
        residual_rms,
        initial_rms,
        iterations,
    })
}

/// SNRs above this are reported as this value with `capped` set.
pub const SNR_CAP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeSnr {
    /// Peak-to-trough of the fitted curve over the samples.
    pub signal: f64,
    pub noise: f64,
    pub snr: f64,
    pub capped: bool,
}

/// Fitted peak-to-trough over the `m` sample positions divided by the RMS
/// residual.
pub fn fringe_snr(fit: &FringeFit, m: usize) -> Result<FringeSnr> {
    if fit.degenerate {
        return Err(Error::UndefinedStatistic(
            "fringe SNR of a fit without modulation".into(),
        ));
    }
    let (lo, hi) = (0..m)
        .map(|i| fit.params.eval(i as f64))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    let signal = hi - lo;
    let raw = if fit.residual_rms > 0.0 {
        signal / fit.residual_rms
    } else {
        f64::INFINITY
    };
    Ok(FringeSnr {
        signal,
        noise: fit.residual_rms,
        snr: raw.min(SNR_CAP),
        capped: raw > SNR_CAP,
    })
}

/// Mean over rows of a frame, as a line.
pub fn mean_row(frame: &Array2<f64>) -> Vec<f64> {
    let h = frame.nrows() as f64;
    frame.columns().into_iter().map(|c| c.sum() / h).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Poisson};

    fn truth() -> FitParams {
        FitParams {
            y0: 12.0,
            amplitude: 400.0,
            x0: 31.3,
            width: 11.0,
            modulation: 0.85,
            omega: 1.45,
            phi: 0.9,
        }
    }

    fn sample(p: &FitParams, m: usize) -> Vec<f64> {
        (0..m).map(|i| p.eval(i as f64)).collect()
    }

    #[test]
    fn visibility_of_three_point_profile() {
        let v = visibility(&[1.0, 99.0, 1.0]).unwrap();
        assert!((v.value - 0.98).abs() < 1e-12);
        assert_eq!((v.max_index, v.min_index), (1, 2));
    }

    #[test]
    fn flat_profile_has_no_fringe() {
        assert!(matches!(
            visibility(&[5.0; 20]),
            Err(Error::InsufficientFringe(_))
        ));
        assert!(matches!(
            visibility(&[1.0, 2.0, 3.0, 4.0]),
            Err(Error::InsufficientFringe(_))
        ));
    }

    #[test]
    fn visibility_picks_pair_near_centroid() {
        // Strong fringe in the middle, weak at the edges.
        let y = [10.0, 12.0, 10.0, 30.0, 2.0, 32.0, 3.0, 11.0, 10.0, 12.0, 11.0];
        let v = visibility(&y).unwrap();
        assert_eq!(v.max_index, 5);
        assert!((v.value - 29.0 / 35.0).abs() < 1e-12);
    }

    #[test]
    fn snr_examples() {
        let equal = SnrInputs {
            s_h: 3.0,
            n_hd: 3.0,
            ..Default::default()
        };
        assert_eq!(snr_total(&equal, SnrChannel::Heralded, false).unwrap(), 1.0);
        let with_dd = SnrInputs { n_dd: 1.0, ..equal };
        assert_eq!(snr_total(&with_dd, SnrChannel::Heralded, false).unwrap(), 1.0);
        assert_eq!(snr_total(&with_dd, SnrChannel::Heralded, true).unwrap(), 0.75);
        assert!(matches!(
            snr_total(&SnrInputs::default(), SnrChannel::Nonheralded, false),
            Err(Error::UndefinedStatistic(_))
        ));
    }

    #[test]
    fn noiseless_fit_recovers_all_parameters() {
        let p = truth();
        let fit = fit_fringe(&sample(&p, 64)).unwrap();
        let q = fit.params;
        for (a, b) in [
            (q.y0, p.y0),
            (q.amplitude, p.amplitude),
            (q.x0, p.x0),
            (q.width, p.width),
            (q.modulation, p.modulation),
            (q.omega, p.omega),
            (q.phi, p.phi),
        ] {
            assert!(((a - b) / b).abs() < 1e-3, "{a} vs {b}");
        }
        assert!(fit.residual_rms <= fit.initial_rms);
        let snr = fringe_snr(&fit, 64).unwrap();
        assert!(snr.capped && snr.snr == SNR_CAP);
    }

    #[test]
    fn fit_is_translation_covariant() {
        let p = truth();
        let k = 5.0;
        let shifted = FitParams {
            x0: p.x0 + k,
            phi: p.phi - p.omega * k,
            ..p
        };
        let a = fit_fringe(&sample(&p, 64)).unwrap().params;
        let b = fit_fringe(&sample(&shifted, 64)).unwrap().params;
        assert!((b.x0 - a.x0 - k).abs() < 1e-6);
        assert!(wrap_phase(b.phi - (a.phi - a.omega * k)).abs() < 1e-6);
        for (x, y) in [
            (a.y0, b.y0),
            (a.amplitude, b.amplitude),
            (a.width, b.width),
            (a.modulation, b.modulation),
            (a.omega, b.omega),
        ] {
            assert!((x - y).abs() < 1e-6 * x.abs().max(1.0));
        }
    }

    #[test]
    fn fringe_free_line_is_flagged_degenerate() {
        let p = FitParams {
            modulation: 0.0,
            ..truth()
        };
        let fit = fit_fringe(&sample(&p, 64)).unwrap();
        assert!(fit.degenerate);
        assert!(matches!(fringe_snr(&fit, 64), Err(Error::UndefinedStatistic(_))));
        assert!(matches!(
            fit_fringe(&[1.0; 10]),
            Err(Error::InsufficientFringe(_))
        ));
    }

    #[test]
    fn envelope_parameters_within_bootstrap_spread() {
        // Pure Gaussian with Poisson noise at a 1e4-count peak: fit errors
        // must sit within three standard deviations of the spread over
        // independent noise draws.
        let p = FitParams {
            y0: 50.0,
            amplitude: 1e4,
            x0: 30.2,
            width: 8.0,
            modulation: 0.0,
            omega: 1.0,
            phi: 0.0,
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut fits = Vec::new();
        for _ in 0..100 {
            let line: Vec<f64> = (0..64)
                .map(|i| Poisson::new(p.eval(i as f64)).unwrap().sample(&mut rng))
                .collect();
            fits.push(fit_fringe(&line).unwrap().params);
        }
        let measured: Vec<f64> = (0..64)
            .map(|i| Poisson::new(p.eval(i as f64)).unwrap().sample(&mut rng))
            .collect();
        let single = fit_fringe(&measured).unwrap().params;
        let pick: [fn(&FitParams) -> f64; 4] = [|q| q.y0, |q| q.amplitude, |q| q.x0, |q| q.width];
        for (k, f) in pick.iter().enumerate() {
            let vals: Vec<f64> = fits.iter().map(f).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64).sqrt();
            let target = f(&p);
            // The mean of 100 draws must be within 3 sd/sqrt(100) of truth,
            // each of them within 4.5 sd, and an independent fit within 3 sd.
            assert!(
                (mean - target).abs() < 3.0 * sd / 10.0 + 1e-9,
                "param {k}: {mean} vs {target}"
            );
            assert!(vals.iter().all(|v| (v - target).abs() < 4.5 * sd), "param {k}");
            assert!((f(&single) - target).abs() < 3.0 * sd, "param {k}");
        }
    }

    proptest! {
        #[test]
        fn visibility_is_scale_invariant(
            vals in proptest::collection::vec(0.0f64..1e3, 3..40),
            c in 1e-3f64..1e3,
        ) {
            let scaled: Vec<f64> = vals.iter().map(|v| v * c).collect();
            match (visibility(&vals), visibility(&scaled)) {
                (Ok(a), Ok(b)) => {
                    prop_assert!((a.value - b.value).abs() < 1e-12);
                    prop_assert_eq!(a.max_index, b.max_index);
                }
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
            }
        }

        #[test]
        fn visibility_in_unit_interval(vals in proptest::collection::vec(0.0f64..1e3, 3..40)) {
            if let Ok(v) = visibility(&vals) {
                prop_assert!((0.0..=1.0).contains(&v.value));
            }
        }
    }
}
