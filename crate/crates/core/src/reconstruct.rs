//! Off-axis hologram reconstruction.
//!
//! The hologram is Fourier transformed, a region around the +1 order is kept,
//! the inverse transform gives a complex field `A·exp(i(phi_ref + phi_obj))`,
//! and the linear carrier phase is removed either by multiplying with the
//! conjugate of a reference built from the centre of the order, by moving the
//! order to the origin before the inverse transform, or by dividing out the
//! field of an object-free calibration hologram.
//!
//! Spectra are stored in natural DFT order. Frequency coordinates `(u, v)`
//! are centred: bin `k` of an `n`-point axis maps to `k` when
//! `k <= (n - 1) / 2` and to `k - n` otherwise.

use std::f64::consts::PI;

use ndarray::{Array2, Axis, Zip};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 2D spectrum with unitary normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    data: Array2<Complex64>,
}

fn centered(k: usize, n: usize) -> i64 {
    if k <= (n - 1) / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Natural index of centred frequency `c` on an `n`-point axis, if in range.
fn natural(c: i64, n: usize) -> Option<usize> {
    let n_i = n as i64;
    let lo = -(n_i / 2);
    let hi = (n_i - 1) / 2;
    (lo..=hi).contains(&c).then(|| c.rem_euclid(n_i) as usize)
}

impl Spectrum {
    pub fn from_natural(data: Array2<Complex64>) -> Self {
        Self { data }
    }

    pub fn data(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn width(&self) -> usize {
        self.data.ncols()
    }

    pub fn height(&self) -> usize {
        self.data.nrows()
    }

    /// Value at centred frequency `(u, v)`.
    pub fn at(&self, u: i64, v: i64) -> Option<Complex64> {
        let i = natural(u, self.width())?;
        let j = natural(v, self.height())?;
        Some(self.data[[j, i]])
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Magnitudes rearranged so DC sits at `(height / 2, width / 2)`, for
    /// display.
    pub fn centered_magnitude(&self) -> Array2<f64> {
        let (h, w) = self.data.dim();
        Array2::from_shape_fn((h, w), |(j, i)| {
            self.data[[(j + h - h / 2) % h, (i + w - w / 2) % w]].norm()
        })
    }

    /// Iterates `(u, v, value)` over all bins.
    fn iter_centered(&self) -> impl Iterator<Item = (i64, i64, Complex64)> + '_ {
        let (h, w) = self.data.dim();
        self.data
            .indexed_iter()
            .map(move |((j, i), &c)| (centered(i, w), centered(j, h), c))
    }
}

/// Complex field `A·exp(i·phi)` on the frame grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub data: Array2<Complex64>,
}

impl ComplexField {
    pub fn amplitude(&self) -> Array2<f64> {
        self.data.mapv(|c| c.norm())
    }

    /// Phase wrapped to `(-π, π]`.
    pub fn phase(&self) -> Array2<f64> {
        self.data.mapv(|c| wrap_phase(c.arg()))
    }

    pub fn conj(&self) -> Self {
        Self {
            data: self.data.mapv(|c| c.conj()),
        }
    }
}

/// Wraps an angle to `(-π, π]`.
pub fn wrap_phase(p: f64) -> f64 {
    let w = p - 2.0 * PI * ((p + PI) / (2.0 * PI)).floor();
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

fn transform(data: &mut Array2<Complex64>, inverse: bool) {
    let (h, w) = data.dim();
    let mut planner = FftPlanner::<f64>::new();
    let (row_fft, col_fft) = if inverse {
        (planner.plan_fft_inverse(w), planner.plan_fft_inverse(h))
    } else {
        (planner.plan_fft_forward(w), planner.plan_fft_forward(h))
    };
    for mut row in data.axis_iter_mut(Axis(0)) {
        let mut buf = row.to_vec();
        row_fft.process(&mut buf);
        row.iter_mut().zip(buf).for_each(|(d, s)| *d = s);
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); h];
    for mut col in data.axis_iter_mut(Axis(1)) {
        buf.iter_mut().zip(col.iter()).for_each(|(d, &s)| *d = s);
        col_fft.process(&mut buf);
        col.iter_mut().zip(&buf).for_each(|(d, &s)| *d = s);
    }
    let scale = 1.0 / ((w * h) as f64).sqrt();
    data.mapv_inplace(|c| c * scale);
}

/// Unitary 2D DFT of a real frame.
pub fn fft2(frame: &Array2<f64>) -> Result<Spectrum> {
    fft2_complex(&frame.mapv(|v| Complex64::new(v, 0.0)))
}

pub fn fft2_complex(frame: &Array2<Complex64>) -> Result<Spectrum> {
    let (h, w) = frame.dim();
    if h < 2 || w < 2 {
        return Err(Error::data(format!("frame {w}x{h} is too small to transform")));
    }
    if frame.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(Error::data("frame contains non-finite values"));
    }
    let mut data = frame.to_owned();
    transform(&mut data, false);
    Ok(Spectrum { data })
}

/// Inverse unitary DFT.
pub fn ifft2(spec: &Spectrum) -> Array2<Complex64> {
    let mut data = spec.data.clone();
    transform(&mut data, true);
    data
}

/// Radius of the band around DC that is never taken for the +1 order.
pub fn dc_guard_radius(width: usize, height: usize) -> i64 {
    (width.min(height) as i64 / 16).max(2)
}

/// Centre `(u, v)` of the +1 order: the strongest bin in the half-plane
/// `u > 0` (or `u == 0, v > 0`) outside the DC guard band.
///
/// Fails when that bin does not stand clear of the spectral floor (8 times
/// the median magnitude) or is negligible against DC, which is what a frame
/// without carrier fringes or with overlapping orders looks like.
pub fn locate_first_order(spec: &Spectrum) -> Result<(i64, i64)> {
    let g = dc_guard_radius(spec.width(), spec.height());
    let mut best: Option<(i64, i64, f64)> = None;
    for (u, v, c) in spec.iter_centered() {
        let upper = u > 0 || (u == 0 && v > 0);
        if !upper || u * u + v * v <= g * g {
            continue;
        }
        let m = c.norm();
        if best.is_none_or(|(_, _, bm)| m > bm) {
            best = Some((u, v, m));
        }
    }
    let (u, v, peak) =
        best.ok_or_else(|| Error::Detection("spectrum has no bins outside the DC guard band".into()))?;
    let mut mags: Vec<f64> = spec.data.iter().map(|c| c.norm()).collect();
    mags.sort_unstable_by(f64::total_cmp);
    let median = mags[mags.len() / 2];
    let dc = spec.data[[0, 0]].norm();
    if peak < 8.0 * median || peak <= 1e-9 * dc || peak == 0.0 {
        return Err(Error::Detection(format!(
            "no first order: strongest off-axis bin ({u}, {v}) has magnitude {peak:.3e} \
             against median {median:.3e} and DC {dc:.3e}"
        )));
    }
    Ok((u, v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskShape {
    #[default]
    Disk,
    Rect,
}

/// Region of the frequency plane kept around the +1 order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrderMask {
    pub center: (i64, i64),
    pub radius: i64,
    pub shape: MaskShape,
}

impl OrderMask {
    /// Disk of radius `min(width, height) / 8` around `center`.
    pub fn default_for(center: (i64, i64), width: usize, height: usize) -> Self {
        Self {
            center,
            radius: (width.min(height) / 8) as i64,
            shape: MaskShape::Disk,
        }
    }

    pub fn contains(&self, u: i64, v: i64) -> bool {
        let du = u - self.center.0;
        let dv = v - self.center.1;
        match self.shape {
            MaskShape::Disk => du * du + dv * dv <= self.radius * self.radius,
            MaskShape::Rect => du.abs() <= self.radius && dv.abs() <= self.radius,
        }
    }

    fn covers_all(&self, width: usize, height: usize) -> bool {
        let us = [-(width as i64 / 2), (width as i64 - 1) / 2];
        let vs = [-(height as i64 / 2), (height as i64 - 1) / 2];
        us.iter().all(|&u| vs.iter().all(|&v| self.contains(u, v)))
    }

    /// A mask must either keep the whole plane or sit strictly inside the
    /// Nyquist square.
    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        if self.radius < 0 {
            return Err(Error::config("mask.radius", "must be >= 0"));
        }
        if self.covers_all(width, height) {
            return Ok(());
        }
        let (cu, cv) = self.center;
        let inside =
            2 * (cu.abs() + self.radius) < width as i64 && 2 * (cv.abs() + self.radius) < height as i64;
        if !inside {
            return Err(Error::config(
                "mask",
                format!(
                    "mask at ({cu}, {cv}) with radius {} reaches the Nyquist boundary of a {width}x{height} spectrum",
                    self.radius
                ),
            ));
        }
        Ok(())
    }

    pub fn contains_dc(&self) -> bool {
        self.contains(0, 0)
    }
}

/// Copy of `spec` with every bin outside `mask` set to zero.
pub fn isolate_order(spec: &Spectrum, mask: &OrderMask) -> Result<Spectrum> {
    let (h, w) = spec.data.dim();
    mask.validate(w, h)?;
    let data = Array2::from_shape_fn((h, w), |(j, i)| {
        if mask.contains(centered(i, w), centered(j, h)) {
            spec.data[[j, i]]
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Ok(Spectrum { data })
}

/// Inverse transform of an isolated order.
pub fn reconstruct(isolated: &Spectrum) -> ComplexField {
    ComplexField {
        data: ifft2(isolated),
    }
}

/// Carrier reference from the bins `center ± half_width` on both axes.
///
/// `half_width = 0` keeps the single centre bin, whose inverse transform is
/// an exact plane wave at the carrier frequency. Larger blocks are odd and
/// symmetric about the centre.
pub fn linear_phase_reference(spec: &Spectrum, center: (i64, i64), half_width: i64) -> Result<ComplexField> {
    let (h, w) = spec.data.dim();
    if half_width < 0 {
        return Err(Error::config("mask.reference_half_width", "must be >= 0"));
    }
    let (cu, cv) = center;
    for (c, n) in [
        (cu - half_width, w),
        (cu + half_width, w),
        (cv - half_width, h),
        (cv + half_width, h),
    ] {
        if natural(c, n).is_none() {
            return Err(Error::Bounds(format!(
                "reference block around ({cu}, {cv}) with half width {half_width} leaves the {w}x{h} spectrum"
            )));
        }
    }
    let block = OrderMask {
        center,
        radius: half_width,
        shape: MaskShape::Rect,
    };
    let data = Array2::from_shape_fn((h, w), |(j, i)| {
        if block.contains(centered(i, w), centered(j, h)) {
            spec.data[[j, i]]
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Ok(reconstruct(&Spectrum { data }))
}

/// `field · conj(reference)`: removes the reference phase and leaves the
/// product of the amplitudes.
pub fn remove_linear_phase(field: &ComplexField, reference: &ComplexField) -> Result<ComplexField> {
    if field.data.dim() != reference.data.dim() {
        return Err(Error::data(format!(
            "field {:?} and reference {:?} differ in shape",
            field.data.dim(),
            reference.data.dim()
        )));
    }
    Ok(ComplexField {
        data: Zip::from(&field.data)
            .and(&reference.data)
            .map_collect(|&f, &r| f * r.conj()),
    })
}

/// Isolates `mask`, moves its centre to DC and inverse transforms.
pub fn recenter_alternative(spec: &Spectrum, mask: &OrderMask) -> Result<ComplexField> {
    let isolated = isolate_order(spec, mask)?;
    let (h, w) = spec.data.dim();
    let (cu, cv) = mask.center;
    let su = cu.rem_euclid(w as i64) as usize;
    let sv = cv.rem_euclid(h as i64) as usize;
    let data = Array2::from_shape_fn((h, w), |(j, i)| isolated.data[[(j + sv) % h, (i + su) % w]]);
    Ok(reconstruct(&Spectrum { data }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMethod {
    /// Multiply by the conjugate of the centre-bin reference.
    #[default]
    ConjugateMultiply,
    /// Shift the isolated order to DC.
    Recenter,
    /// Multiply by the conjugate of an object-free hologram's field.
    CalibrationFrame,
}

impl PhaseMethod {
    pub fn label(self) -> &'static str {
        match self {
            PhaseMethod::ConjugateMultiply => "conjugate_multiply",
            PhaseMethod::Recenter => "recenter",
            PhaseMethod::CalibrationFrame => "calibration_frame",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReconstructOptions {
    /// Order centre; located automatically when absent.
    pub center: Option<(i64, i64)>,
    /// Defaults to `min(width, height) / 8`.
    pub mask_radius: Option<i64>,
    pub mask_shape: MaskShape,
    pub reference_half_width: i64,
    pub method: PhaseMethod,
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub order: (i64, i64),
    pub mask: OrderMask,
    /// Field after isolation and inverse transform, carrier still present.
    pub raw: ComplexField,
    /// Field with the linear phase removed.
    pub corrected: ComplexField,
}

/// Runs the whole procedure on a frame. `calibration` is the object-free
/// hologram required by [`PhaseMethod::CalibrationFrame`].
pub fn reconstruct_hologram(
    frame: &Array2<f64>,
    opts: &ReconstructOptions,
    calibration: Option<&Array2<f64>>,
) -> Result<Reconstruction> {
    let spec = fft2(frame)?;
    let order = match opts.center {
        Some(c) => c,
        None => locate_first_order(&spec)?,
    };
    let (h, w) = frame.dim();
    let mut mask = OrderMask::default_for(order, w, h);
    mask.shape = opts.mask_shape;
    if let Some(r) = opts.mask_radius {
        mask.radius = r;
    }
    if mask.contains_dc() && !mask.covers_all(w, h) {
        return Err(Error::config(
            "mask.radius",
            format!(
                "mask around ({}, {}) with radius {} includes DC",
                order.0, order.1, mask.radius
            ),
        ));
    }
    let isolated = isolate_order(&spec, &mask)?;
    let raw = reconstruct(&isolated);
    let corrected = match opts.method {
        PhaseMethod::ConjugateMultiply => {
            let reference = linear_phase_reference(&isolated, order, opts.reference_half_width)?;
            remove_linear_phase(&raw, &reference)?
        }
        PhaseMethod::Recenter => recenter_alternative(&spec, &mask)?,
        PhaseMethod::CalibrationFrame => {
            let cal = calibration
                .ok_or_else(|| Error::config("method", "calibration_frame needs a calibration hologram"))?;
            if cal.dim() != frame.dim() {
                return Err(Error::data(
                    "calibration hologram differs in shape from the frame",
                ));
            }
            let cal_field = reconstruct(&isolate_order(&fft2(cal)?, &mask)?);
            remove_linear_phase(&raw, &cal_field)?
        }
    };
    Ok(Reconstruction {
        order,
        mask,
        raw,
        corrected,
    })
}

/// Median of angles about their circular mean, wrapped to `(-π, π]`.
pub fn circular_median(phases: &[f64]) -> Option<f64> {
    if phases.is_empty() {
        return None;
    }
    let (s, c) = phases
        .iter()
        .fold((0.0, 0.0), |(s, c), p| (s + p.sin(), c + p.cos()));
    let mean = s.atan2(c);
    let mut dev: Vec<f64> = phases.iter().map(|p| wrap_phase(p - mean)).collect();
    dev.sort_unstable_by(f64::total_cmp);
    let n = dev.len();
    let med = if n % 2 == 1 {
        dev[n / 2]
    } else {
        0.5 * (dev[n / 2 - 1] + dev[n / 2])
    };
    Some(wrap_phase(mean + med))
}

/// Values of `map` where `region` is set.
pub fn region_values(map: &Array2<f64>, region: &Array2<bool>) -> Vec<f64> {
    Zip::from(map).and(region).fold(Vec::new(), |mut acc, &v, &r| {
        if r {
            acc.push(v);
        }
        acc
    })
}

/// Standard deviation of angles about their circular median, on the
/// wrapped deviations.
pub fn phase_spread(phases: &[f64]) -> Option<f64> {
    let centre = circular_median(phases)?;
    let n = phases.len() as f64;
    let dev: Vec<f64> = phases.iter().map(|p| wrap_phase(p - centre)).collect();
    let mean = dev.iter().sum::<f64>() / n;
    Some((dev.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{intensity_map, BeamProfile, ObjectMap, TiltConfig};
    use proptest::prelude::*;

    const PITCH: f64 = 30e-6;

    fn naive_dft(frame: &Array2<f64>) -> Array2<Complex64> {
        let (h, w) = frame.dim();
        let s = 1.0 / ((w * h) as f64).sqrt();
        Array2::from_shape_fn((h, w), |(v, u)| {
            let mut acc = Complex64::new(0.0, 0.0);
            for ((y, x), &f) in frame.indexed_iter() {
                let ang = -2.0 * PI * ((u * x) as f64 / w as f64 + (v * y) as f64 / h as f64);
                acc += Complex64::from_polar(f, ang);
            }
            acc * s
        })
    }

    fn hologram(n: usize, obj: &ObjectMap, waist_frac: f64) -> Array2<f64> {
        intensity_map(
            obj,
            &BeamProfile::centered(n, n, PITCH, waist_frac),
            &TiltConfig::default_for(PITCH),
        )
        .unwrap()
    }

    #[test]
    fn fft_matches_direct_sum() {
        let f = Array2::from_shape_fn((5, 6), |(j, i)| ((i * 7 + j * 3) % 5) as f64 - 1.5);
        let s = fft2(&f).unwrap();
        let d = naive_dft(&f);
        for (a, b) in s.data().iter().zip(d.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn constant_frame_is_pure_dc_and_has_no_order() {
        let f = Array2::from_elem((8, 8), 3.0);
        let s = fft2(&f).unwrap();
        assert!((s.at(0, 0).unwrap().re - 24.0).abs() < 1e-12);
        assert!((s.energy() - 576.0).abs() < 1e-9);
        assert!(matches!(locate_first_order(&s), Err(Error::Detection(_))));
    }

    #[test]
    fn cosine_fringe_has_three_peaks() {
        let (w, h) = (32, 16);
        let f = Array2::from_shape_fn((h, w), |(j, i)| {
            1.0 + (2.0 * PI * (5.0 * i as f64 / w as f64 + 2.0 * j as f64 / h as f64)).cos()
        });
        let s = fft2(&f).unwrap();
        let big: Vec<(i64, i64)> = s
            .iter_centered()
            .filter(|(_, _, c)| c.norm() > 1e-9)
            .map(|(u, v, _)| (u, v))
            .collect();
        assert_eq!(big.len(), 3);
        for p in [(0, 0), (5, 2), (-5, -2)] {
            assert!(big.contains(&p));
        }
        assert_eq!(locate_first_order(&s).unwrap(), (5, 2));
        // The -1 order mirrors the +1 order.
        assert!((s.at(-5, -2).unwrap() - s.at(5, 2).unwrap().conj()).norm() < 1e-12);
    }

    #[test]
    fn tiny_frames_are_rejected() {
        assert!(matches!(fft2(&Array2::zeros((1, 8))), Err(Error::Data(_))));
    }

    #[test]
    fn locates_carrier_of_forward_model() {
        let n = 64;
        let f = hologram(n, &ObjectMap::mirror(n, n, PITCH).unwrap(), 0.5);
        let s = fft2(&f).unwrap();
        let (cu, cv) = TiltConfig::default_for(PITCH).carrier_bins(n, n, PITCH);
        assert_eq!(locate_first_order(&s).unwrap(), (cu as i64, cv as i64));
        let tilted = TiltConfig {
            fx: 10.0 / (n as f64 * PITCH),
            fy: -6.0 / (n as f64 * PITCH),
        };
        let f = intensity_map(
            &ObjectMap::mirror(n, n, PITCH).unwrap(),
            &BeamProfile::centered(n, n, PITCH, 0.5),
            &tilted,
        )
        .unwrap();
        assert_eq!(locate_first_order(&fft2(&f).unwrap()).unwrap(), (10, -6));
    }

    #[test]
    fn mask_edge_cases() {
        let f = Array2::from_shape_fn((8, 8), |(j, i)| (i * j) as f64);
        let s = fft2(&f).unwrap();
        let all = OrderMask {
            center: (0, 0),
            radius: 100,
            shape: MaskShape::Disk,
        };
        assert_eq!(isolate_order(&s, &all).unwrap(), s);
        let one = OrderMask {
            center: (1, 1),
            radius: 0,
            shape: MaskShape::Disk,
        };
        let iso = isolate_order(&s, &one).unwrap();
        assert_eq!(iso.data().iter().filter(|c| c.norm() > 0.0).count(), 1);
        assert!(iso.energy() <= s.energy());
        let edge = OrderMask {
            center: (2, 0),
            radius: 2,
            shape: MaskShape::Disk,
        };
        assert!(matches!(isolate_order(&s, &edge), Err(Error::Config { .. })));
    }

    #[test]
    fn mirror_reconstruction_follows_the_envelope() {
        let n = 64;
        let obj = ObjectMap::mirror(n, n, PITCH).unwrap();
        let beam = BeamProfile::centered(n, n, PITCH, 0.3);
        let f = hologram(n, &obj, 0.3);
        let rec = reconstruct_hologram(&f, &ReconstructOptions::default(), None).unwrap();
        let amp = rec.raw.amplitude();
        let scale = amp[[32, 32]] / beam.envelope(32.0 * PITCH, 32.0 * PITCH).powi(2);
        for j in 16..48 {
            for i in 16..48 {
                let g2 = beam.envelope(i as f64 * PITCH, j as f64 * PITCH).powi(2);
                assert!((amp[[j, i]] - scale * g2).abs() < 1e-3 * scale, "({i}, {j})");
            }
        }
        let fwhm = beam.fwhm_mask(n, n, PITCH);
        let phase = region_values(&rec.corrected.phase(), &fwhm);
        assert!(phase_spread(&phase).unwrap() < 0.1);
    }

    #[test]
    fn tilt_reference_has_carrier_gradient() {
        let n = 64;
        let f = hologram(n, &ObjectMap::mirror(n, n, PITCH).unwrap(), 0.5);
        let s = fft2(&f).unwrap();
        let c = locate_first_order(&s).unwrap();
        let r = linear_phase_reference(&s, c, 0).unwrap();
        let tilt = TiltConfig::default_for(PITCH);
        let expected = 2.0 * PI * tilt.fx * PITCH;
        let p = r.phase();
        for i in 0..n - 1 {
            assert!((wrap_phase(p[[10, i + 1]] - p[[10, i]]) - expected).abs() < 1e-9);
        }
        let p = linear_phase_reference(&s, c, 1).unwrap().phase();
        let d = wrap_phase(p[[32, 33]] - p[[32, 32]]);
        // The wider block picks up a little object spectrum.
        assert!((d - expected).abs() < 1e-4, "{d} {expected}");
    }

    #[test]
    fn reference_edge_cases() {
        let n = 16;
        let f = Array2::from_shape_fn((n, n), |(j, i)| {
            let r2 = (i as f64 - 7.5).powi(2) + (j as f64 - 7.5).powi(2);
            (-r2 / 20.0).exp()
        });
        let s = fft2(&f).unwrap();
        let dc = linear_phase_reference(&s, (0, 0), 1).unwrap();
        let p = dc.phase();
        let amp = dc.amplitude();
        let lit: Vec<f64> = region_values(&p, &amp.mapv(|a| a > 1e-6));
        assert!(phase_spread(&lit).unwrap() < 1e-9);
        assert!(matches!(
            linear_phase_reference(&s, (7, 0), 1),
            Err(Error::Bounds(_))
        ));
        // A block spanning the whole isolated region equals the plain inverse.
        let mask = OrderMask {
            center: (3, 0),
            radius: 2,
            shape: MaskShape::Disk,
        };
        let iso = isolate_order(&s, &mask).unwrap();
        let block = linear_phase_reference(&iso, (3, 0), 2).unwrap();
        let full = reconstruct(&iso);
        for (a, b) in block.data.iter().zip(full.data.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn field_times_own_conjugate_has_zero_phase() {
        let n = 32;
        let f = hologram(n, &ObjectMap::phase_step(n, n, PITCH, 1.0).unwrap(), 0.5);
        let rec = reconstruct_hologram(&f, &ReconstructOptions::default(), None).unwrap();
        let z = remove_linear_phase(&rec.raw, &rec.raw).unwrap();
        assert!(z
            .data
            .iter()
            .all(|c| c.im.abs() <= 1e-12 * c.re.abs().max(1e-300)));
        assert!(remove_linear_phase(
            &rec.raw,
            &ComplexField {
                data: Array2::zeros((2, 2))
            }
        )
        .is_err());
    }

    #[test]
    fn recenter_keeps_amplitude_and_flattens_tilt() {
        let n = 64;
        let f = hologram(n, &ObjectMap::mirror(n, n, PITCH).unwrap(), 0.5);
        let s = fft2(&f).unwrap();
        let mask = OrderMask::default_for(locate_first_order(&s).unwrap(), n, n);
        let a = recenter_alternative(&s, &mask).unwrap();
        let b = reconstruct(&isolate_order(&s, &mask).unwrap());
        for (x, y) in a.amplitude().iter().zip(b.amplitude().iter()) {
            assert!((x - y).abs() < 1e-12);
        }
        let beam = BeamProfile::centered(n, n, PITCH, 0.5);
        let phase = region_values(&a.phase(), &beam.fwhm_mask(n, n, PITCH));
        // Residual from the mask cutting the envelope's spectrum, against a
        // removed tilt of π/2 per pixel.
        assert!(phase_spread(&phase).unwrap() < 1e-3);
    }

    #[test]
    fn conjugate_order_gives_conjugate_field() {
        let n = 64;
        let f = hologram(n, &ObjectMap::phase_step(n, n, PITCH, 0.7).unwrap(), 0.5);
        let s = fft2(&f).unwrap();
        let c = locate_first_order(&s).unwrap();
        let plus = reconstruct(&isolate_order(&s, &OrderMask::default_for(c, n, n)).unwrap());
        let minus = reconstruct(&isolate_order(&s, &OrderMask::default_for((-c.0, -c.1), n, n)).unwrap());
        for (p, m) in plus.data.iter().zip(minus.data.iter()) {
            assert!((p.conj() - m).norm() < 1e-12);
        }
    }

    #[test]
    fn circular_median_handles_wraparound() {
        let m = circular_median(&[PI - 0.1, -PI + 0.1, PI - 0.05]).unwrap();
        assert!((wrap_phase(m - (PI - 0.05))).abs() < 1e-12);
        assert_eq!(wrap_phase(-PI), PI);
        assert!(circular_median(&[]).is_none());
    }

    proptest! {
        #[test]
        fn round_trip_and_parseval(
            w in 2usize..12,
            h in 2usize..12,
            vals in proptest::collection::vec(-1e3f64..1e3, 144),
        ) {
            let f = Array2::from_shape_fn((h, w), |(j, i)| vals[j * 12 + i]);
            let s = fft2(&f).unwrap();
            let back = ifft2(&s);
            let norm: f64 = f.iter().map(|v| v * v).sum();
            let scale = norm.sqrt().max(1e-300);
            for (a, b) in back.iter().zip(f.iter()) {
                prop_assert!((a - Complex64::new(*b, 0.0)).norm() <= 1e-10 * scale);
            }
            prop_assert!((s.energy() - norm).abs() <= 1e-10 * norm.max(1e-300));
        }

        #[test]
        fn cross_term_scales_linearly(c in 0.05f64..1.0) {
            let n = 32;
            let beam = BeamProfile::centered(n, n, PITCH, 0.5);
            let tilt = TiltConfig::default_for(PITCH);
            let full = ObjectMap::mirror(n, n, PITCH).unwrap();
            let scaled = ObjectMap::new(full.field().mapv(|o| o * c), PITCH).unwrap();
            let (cu, cv) = tilt.carrier_bins(n, n, PITCH);
            let at = |o: &ObjectMap| {
                fft2(&intensity_map(o, &beam, &tilt).unwrap()).unwrap().at(cu as i64, cv as i64).unwrap()
            };
            // The truncated envelope leaks into the carrier bin; the arm
            // intensities scale as 1 + c², the cross term as c.
            let arm = at(&ObjectMap::blank(n, n, PITCH).unwrap());
            let cross_full = at(&full) - 2.0 * arm;
            let cross_scaled = at(&scaled) - (1.0 + c * c) * arm;
            prop_assert!(cross_full.norm() > 1.0);
            prop_assert!((cross_scaled - c * cross_full).norm() <= 1e-9 * cross_full.norm());
        }
    }
}
