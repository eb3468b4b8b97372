//! Forward model of the off-axis image-plane interferometer.
//!
//! Both arms carry the same Gaussian envelope `G`. The reference is a tilted
//! plane wave `G·exp(-i·phi_ref)` with `phi_ref = 2π(fx·x + fy·y)`, the object
//! arm is `G·o`, and the recorded intensity is `|ref + obj|²`. With this sign
//! the object-bearing cross term `conj(ref)·obj` sits at the positive carrier
//! frequency of the spectrum, and reconstruction returns `+arg(o)`.
//!
//! Pixel `(i, j)` (column, row) sits at `x = i·pitch`, `y = j·pitch`.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monitor::DetectorSet;
use crate::source::SourceConfig;

/// Magnitudes up to this far above 1 are accepted as rounding.
const REFLECTANCE_SLACK: f64 = 1e-12;

/// Complex reflectance of the object on the scan grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectMap {
    field: Array2<Complex64>,
    pitch: f64,
}

impl ObjectMap {
    /// `field` is indexed `[[row, column]]`; `pitch` in meters.
    pub fn new(field: Array2<Complex64>, pitch: f64) -> Result<Self> {
        if !(pitch.is_finite() && pitch > 0.0) {
            return Err(Error::config("object.pitch", "must be > 0"));
        }
        if field.nrows() < 1 || field.ncols() < 1 {
            return Err(Error::data("object map is empty"));
        }
        for ((j, i), o) in field.indexed_iter() {
            if !(o.re.is_finite() && o.im.is_finite()) {
                return Err(Error::data(format!("object value at ({i}, {j}) is not finite")));
            }
            if o.norm() > 1.0 + REFLECTANCE_SLACK {
                return Err(Error::data(format!(
                    "object reflectance at ({i}, {j}) has magnitude {} > 1",
                    o.norm()
                )));
            }
        }
        Ok(Self { field, pitch })
    }

    /// Builds the map from separate amplitude and phase grids.
    pub fn from_polar(amplitude: &Array2<f64>, phase: &Array2<f64>, pitch: f64) -> Result<Self> {
        if amplitude.dim() != phase.dim() {
            return Err(Error::data(format!(
                "amplitude grid {:?} and phase grid {:?} differ in shape",
                amplitude.dim(),
                phase.dim()
            )));
        }
        if amplitude.iter().any(|&a| a < 0.0) {
            return Err(Error::data("object amplitude must be >= 0"));
        }
        let field = ndarray::Zip::from(amplitude)
            .and(phase)
            .map_collect(|&a, &p| Complex64::from_polar(a, p));
        Self::new(field, pitch)
    }

    /// Uniform perfect reflector.
    pub fn mirror(width: usize, height: usize, pitch: f64) -> Result<Self> {
        Self::new(
            Array2::from_elem((height, width), Complex64::new(1.0, 0.0)),
            pitch,
        )
    }

    /// Non-reflecting field of view.
    pub fn blank(width: usize, height: usize, pitch: f64) -> Result<Self> {
        Self::new(Array2::zeros((height, width)), pitch)
    }

    /// Two reflective half-discs on a dark background, separated by a vertical
    /// dark gap. Radius and gap are fractions of the shorter frame side.
    pub fn half_circles(
        width: usize,
        height: usize,
        pitch: f64,
        radius_frac: f64,
        gap_frac: f64,
    ) -> Result<Self> {
        if !(radius_frac > 0.0 && gap_frac >= 0.0) {
            return Err(Error::config("object", "radius must be > 0 and gap >= 0"));
        }
        let side = width.min(height) as f64;
        let r = radius_frac * side;
        let half_gap = 0.5 * gap_frac * side;
        let (cx, cy) = ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0);
        let field = Array2::from_shape_fn((height, width), |(j, i)| {
            let dx = i as f64 - cx;
            let dy = j as f64 - cy;
            if dx * dx + dy * dy <= r * r && dx.abs() > half_gap {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Self::new(field, pitch)
    }

    /// Mirror with one quarter of the field (columns and rows at or beyond the
    /// frame centre) delayed by `step` radians, like a thin plate on part of
    /// the mirror.
    pub fn phase_step(width: usize, height: usize, pitch: f64, step: f64) -> Result<Self> {
        if !step.is_finite() {
            return Err(Error::config("object.step", "must be finite"));
        }
        let field = Array2::from_shape_fn((height, width), |(j, i)| {
            if in_step_quadrant(i, j, width, height) {
                Complex64::from_polar(1.0, step)
            } else {
                Complex64::new(1.0, 0.0)
            }
        });
        Self::new(field, pitch)
    }

    pub fn field(&self) -> &Array2<Complex64> {
        &self.field
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn width(&self) -> usize {
        self.field.ncols()
    }

    pub fn height(&self) -> usize {
        self.field.nrows()
    }

    pub fn amplitude(&self) -> Array2<f64> {
        self.field.mapv(|o| o.norm())
    }

    pub fn phase(&self) -> Array2<f64> {
        self.field.mapv(|o| o.arg())
    }
}

/// Whether pixel `(i, j)` lies in the delayed quadrant of
/// [`ObjectMap::phase_step`].
pub fn in_step_quadrant(i: usize, j: usize, width: usize, height: usize) -> bool {
    i >= width / 2 && j >= height / 2
}

/// Gaussian beam envelope `amplitude·exp(-r²/waist²)` shared by both arms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamProfile {
    /// Meters, `[x, y]`.
    pub center: [f64; 2],
    /// Meters.
    pub waist: f64,
    pub amplitude: f64,
}

impl BeamProfile {
    /// Unit-amplitude beam on the frame centre with waist `waist_frac` times
    /// the shorter frame side.
    pub fn centered(width: usize, height: usize, pitch: f64, waist_frac: f64) -> Self {
        Self {
            center: [
                (width as f64 - 1.0) / 2.0 * pitch,
                (height as f64 - 1.0) / 2.0 * pitch,
            ],
            waist: waist_frac * width.min(height) as f64 * pitch,
            amplitude: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.waist.is_finite() && self.waist > 0.0) {
            return Err(Error::config("beam.waist", "must be > 0"));
        }
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(Error::config("beam.amplitude", "must be >= 0"));
        }
        if !self.center.iter().all(|c| c.is_finite()) {
            return Err(Error::config("beam.center", "must be finite"));
        }
        Ok(())
    }

    pub fn envelope(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.center[0];
        let dy = y - self.center[1];
        self.amplitude * (-(dx * dx + dy * dy) / (self.waist * self.waist)).exp()
    }

    /// Pixels where the beam intensity is at least half its peak.
    pub fn fwhm_mask(&self, width: usize, height: usize, pitch: f64) -> Array2<bool> {
        let peak = self.amplitude * self.amplitude;
        Array2::from_shape_fn((height, width), |(j, i)| {
            let g = self.envelope(i as f64 * pitch, j as f64 * pitch);
            peak > 0.0 && g * g >= 0.5 * peak
        })
    }
}

/// Spatial frequency of the reference tilt, cycles per meter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TiltConfig {
    pub fx: f64,
    pub fy: f64,
}

impl TiltConfig {
    /// Vertical fringes with a four-pixel period.
    pub fn default_for(pitch: f64) -> Self {
        Self {
            fx: 1.0 / (4.0 * pitch),
            fy: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx.is_finite() && self.fy.is_finite()) {
            return Err(Error::config("tilt", "frequencies must be finite"));
        }
        if self.fx == 0.0 && self.fy == 0.0 {
            return Err(Error::config("tilt", "at least one of fx, fy must be nonzero"));
        }
        Ok(())
    }

    /// Reference phase at `(x, y)` in meters.
    pub fn phase(&self, x: f64, y: f64) -> f64 {
        2.0 * PI * (self.fx * x + self.fy * y)
    }

    /// Carrier position in DFT bins for a `width`×`height` frame.
    pub fn carrier_bins(&self, width: usize, height: usize, pitch: f64) -> (f64, f64) {
        (self.fx * pitch * width as f64, self.fy * pitch * height as f64)
    }
}

/// Reference and object fields on the grid, `(reference, object)`.
pub fn arm_fields(
    obj: &ObjectMap,
    beam: &BeamProfile,
    tilt: &TiltConfig,
) -> Result<(Array2<Complex64>, Array2<Complex64>)> {
    beam.validate()?;
    tilt.validate()?;
    let p = obj.pitch;
    let reference = Array2::from_shape_fn(obj.field.dim(), |(j, i)| {
        let (x, y) = (i as f64 * p, j as f64 * p);
        Complex64::from_polar(beam.envelope(x, y), -tilt.phase(x, y))
    });
    let object = Array2::from_shape_fn(obj.field.dim(), |(j, i)| {
        obj.field[[j, i]] * beam.envelope(i as f64 * p, j as f64 * p)
    });
    Ok((reference, object))
}

/// Recorded intensity `|ref + obj|²`, dimensionless and nonnegative.
pub fn intensity_map(obj: &ObjectMap, beam: &BeamProfile, tilt: &TiltConfig) -> Result<Array2<f64>> {
    let (r, o) = arm_fields(obj, beam, tilt)?;
    Ok(ndarray::Zip::from(&r)
        .and(&o)
        .map_collect(|&r, &o| (r + o).norm_sqr()))
}

/// `I / max(I)`, or all zeros when the map is dark.
pub fn normalized(intensity: &Array2<f64>) -> Result<Array2<f64>> {
    if intensity.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
        return Err(Error::data("intensity must be finite and >= 0"));
    }
    let max = intensity.iter().cloned().fold(0.0, f64::max);
    Ok(if max > 0.0 {
        intensity.mapv(|v| v / max)
    } else {
        Array2::zeros(intensity.dim())
    })
}

/// Per-pixel averages of one measured hologram, counts per second per pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasuredRates {
    /// Heralded single photons.
    pub heralded_signal: f64,
    /// Herald singles coinciding with imaging-detector darks.
    pub coincidence_noise: f64,
    /// All non-heralded events, darks included.
    pub nonheralded: f64,
    /// Imaging-detector floor: the lowest pixel average.
    pub imaging_noise: f64,
}

impl MeasuredRates {
    /// Two-half-disc mirror hologram.
    pub const MIRROR: Self = Self {
        heralded_signal: 1.72398,
        coincidence_noise: 0.109099,
        nonheralded: 528.471,
        imaging_noise: 460.0,
    };

    /// Second hologram, recorded alongside the line scans.
    pub const SECOND: Self = Self {
        heralded_signal: 1.84557,
        coincidence_noise: 0.195998,
        nonheralded: 561.749,
        imaging_noise: 471.2,
    };
}

/// Peak detection rates that turn a normalized intensity into count rates.
///
/// At a pixel with normalized intensity `u`:
/// heralded rate `heralded_peak·u + heralded_noise`,
/// non-heralded rate `nonheralded_peak·u + background`.
/// Heralded events are a subset of non-heralded ones, so
/// `heralded_peak <= nonheralded_peak` and `heralded_noise <= background`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateCalibration {
    pub heralded_peak: f64,
    pub nonheralded_peak: f64,
    pub background: f64,
    /// Accidental herald coincidences with background counts.
    #[serde(default)]
    pub heralded_noise: f64,
}

impl Default for RateCalibration {
    fn default() -> Self {
        let m = MeasuredRates::MIRROR;
        Self {
            heralded_peak: m.heralded_signal,
            nonheralded_peak: m.nonheralded - m.imaging_noise,
            background: m.imaging_noise,
            heralded_noise: 0.0,
        }
    }
}

impl RateCalibration {
    /// Default peaks plus the measured accidental floor.
    pub fn with_measured_noise(m: &MeasuredRates) -> Self {
        Self {
            heralded_peak: m.heralded_signal,
            nonheralded_peak: m.nonheralded - m.imaging_noise,
            background: m.imaging_noise,
            heralded_noise: m.coincidence_noise,
        }
    }

    /// Peaks chosen so the frame means of the rate maps built on `intensity`
    /// equal the measured per-pixel averages.
    pub fn calibrated_to_averages(intensity: &Array2<f64>, m: &MeasuredRates) -> Result<Self> {
        let u = normalized(intensity)?;
        let mean = u.mean().unwrap_or(0.0);
        if mean <= 0.0 {
            return Err(Error::data("cannot calibrate rates on a dark intensity map"));
        }
        let cal = Self {
            heralded_peak: m.heralded_signal / mean,
            nonheralded_peak: (m.nonheralded - m.imaging_noise) / mean,
            background: m.imaging_noise,
            heralded_noise: m.coincidence_noise,
        };
        cal.validate()?;
        Ok(cal)
    }

    /// Peaks that reproduce fringe visibilities measured at the beam centre
    /// on top of the measured floors.
    ///
    /// A full-contrast fringe of peak `s` over a floor `a` has maximum
    /// `s + a` and minimum `a`, so `V = s / (s + 2a)` and `s = 2aV / (1 - V)`.
    pub fn from_visibilities(
        m: &MeasuredRates,
        heralded_visibility: f64,
        nonheralded_visibility: f64,
    ) -> Result<Self> {
        let peak = |floor: f64, v: f64, key: &str| {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::config(key, "visibility must lie in [0, 1)"));
            }
            Ok(2.0 * floor * v / (1.0 - v))
        };
        let cal = Self {
            heralded_peak: peak(
                m.coincidence_noise,
                heralded_visibility,
                "rates.heralded_visibility",
            )?,
            nonheralded_peak: peak(
                m.imaging_noise,
                nonheralded_visibility,
                "rates.nonheralded_visibility",
            )?,
            background: m.imaging_noise,
            heralded_noise: m.coincidence_noise,
        };
        cal.validate()?;
        Ok(cal)
    }

    /// Expected rates from the event model: source, detectors, splitter and
    /// fibre collection efficiency, for a coincidence window of `window_s`.
    ///
    /// The signal path is the first splitter (transmission `fbs_transmission`),
    /// fibre coupling `collection` at the brightest pixel, the 50/50 imaging
    /// splitter and imaging detector A. Heralded events are true pairs inside
    /// the window after jitter plus accidentals of the herald singles with
    /// signal and dark counts. Dead time is neglected.
    pub fn from_physics(
        source: &SourceConfig,
        dets: &DetectorSet,
        fbs_transmission: f64,
        collection: f64,
        window_s: f64,
    ) -> Result<Self> {
        let q = fbs_transmission * collection * 0.5 * dets.imaging_a.efficiency;
        let r = source.pair_rate;
        let signal = r * (1.0 + source.multi_pair_prob) * q;
        let herald_singles = r * dets.herald.efficiency + dets.herald.dark_rate;
        let sigma = dets.herald.jitter_sigma.hypot(dets.imaging_a.jitter_sigma);
        let inside = if sigma > 0.0 {
            libm::erf(0.5 * window_s / (std::f64::consts::SQRT_2 * sigma))
        } else {
            1.0
        };
        let true_pairs = r * dets.herald.efficiency * q * inside;
        let cal = Self {
            heralded_peak: (true_pairs + herald_singles * signal * window_s).min(signal),
            nonheralded_peak: signal,
            background: dets.imaging_a.dark_rate,
            heralded_noise: (herald_singles * dets.imaging_a.dark_rate * window_s)
                .min(dets.imaging_a.dark_rate),
        };
        cal.validate()?;
        Ok(cal)
    }

    pub fn validate(&self) -> Result<()> {
        for (k, v) in [
            ("rates.heralded_peak", self.heralded_peak),
            ("rates.nonheralded_peak", self.nonheralded_peak),
            ("rates.background", self.background),
            ("rates.heralded_noise", self.heralded_noise),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(k, "must be finite and >= 0"));
            }
        }
        if self.heralded_peak > self.nonheralded_peak {
            return Err(Error::config(
                "rates.heralded_peak",
                "heralded events are a subset of singles: must not exceed nonheralded_peak",
            ));
        }
        if self.heralded_noise > self.background {
            return Err(Error::config(
                "rates.heralded_noise",
                "accidentals are a subset of background counts: must not exceed background",
            ));
        }
        Ok(())
    }
}

/// Count-rate maps in counts per second.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMaps {
    pub heralded: Array2<f64>,
    pub nonheralded: Array2<f64>,
    pub background: Array2<f64>,
}

pub fn rate_maps(intensity: &Array2<f64>, calib: &RateCalibration) -> Result<RateMaps> {
    calib.validate()?;
    let u = normalized(intensity)?;
    Ok(RateMaps {
        heralded: u.mapv(|u| calib.heralded_peak * u + calib.heralded_noise),
        nonheralded: u.mapv(|u| calib.nonheralded_peak * u + calib.background),
        background: Array2::from_elem(u.dim(), calib.background),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const PITCH: f64 = 30e-6;

    fn wide_beam(n: usize) -> BeamProfile {
        BeamProfile::centered(n, n, PITCH, 0.5)
    }

    #[test]
    fn dark_object_gives_fringe_free_spot() {
        let n = 32;
        let obj = ObjectMap::blank(n, n, PITCH).unwrap();
        let beam = wide_beam(n);
        let i = intensity_map(&obj, &beam, &TiltConfig::default_for(PITCH)).unwrap();
        for ((j, k), v) in i.indexed_iter() {
            let g = beam.envelope(k as f64 * PITCH, j as f64 * PITCH);
            assert!((v - g * g).abs() < 1e-12);
        }
    }

    #[test]
    fn visibility_peaks_reproduce_visibilities() {
        let n = 16;
        let obj = ObjectMap::mirror(n, n, PITCH).unwrap();
        let flat = BeamProfile {
            center: [0.0, 0.0],
            waist: 1e6,
            amplitude: 1.0,
        };
        let i = intensity_map(&obj, &flat, &TiltConfig::default_for(PITCH)).unwrap();
        let cal = RateCalibration::from_visibilities(&MeasuredRates::SECOND, 0.98, 0.11).unwrap();
        let maps = rate_maps(&i, &cal).unwrap();
        for (map, want) in [(&maps.heralded, 0.98), (&maps.nonheralded, 0.11)] {
            let row = map.row(3);
            let hi = row.iter().cloned().fold(f64::MIN, f64::max);
            let lo = row.iter().cloned().fold(f64::MAX, f64::min);
            assert!(((hi - lo) / (hi + lo) - want).abs() < 1e-9);
        }
        assert!(RateCalibration::from_visibilities(&MeasuredRates::SECOND, 1.0, 0.1).is_err());
    }

    #[test]
    fn mirror_gives_full_contrast_fringes() {
        let n = 32;
        let obj = ObjectMap::mirror(n, n, PITCH).unwrap();
        let beam = wide_beam(n);
        let i = intensity_map(&obj, &beam, &TiltConfig::default_for(PITCH)).unwrap();
        for ((j, k), v) in i.indexed_iter() {
            let g2 = beam.envelope(k as f64 * PITCH, j as f64 * PITCH).powi(2);
            match k % 4 {
                0 => assert!((v - 4.0 * g2).abs() < 1e-12),
                2 => assert!(v.abs() < 1e-12),
                _ => assert!((v - 2.0 * g2).abs() < 1e-12),
            }
        }
    }

    #[test]
    fn pi_step_shifts_fringes_half_a_period() {
        let n = 16;
        let beam = BeamProfile {
            center: [0.0, 0.0],
            waist: 1e3,
            amplitude: 1.0,
        };
        let tilt = TiltConfig::default_for(PITCH);
        let step = ObjectMap::phase_step(n, n, PITCH, PI).unwrap();
        let i = intensity_map(&step, &beam, &tilt).unwrap();
        // Inside the delayed quadrant maxima and minima swap places.
        let (j, k) = (12, 12);
        assert!(in_step_quadrant(k, j, n, n));
        assert!(i[[j, k]] < 1e-9);
        assert!((i[[j, k + 2]] - 4.0).abs() < 1e-6);
        assert!((i[[2, 12]] - 4.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_inputs() {
        let a = Array2::from_elem((2, 2), 1.0);
        let p = Array2::zeros((2, 3));
        assert!(matches!(
            ObjectMap::from_polar(&a, &p, PITCH),
            Err(Error::Data(_))
        ));
        let big = Array2::from_elem((2, 2), Complex64::new(1.1, 0.0));
        assert!(ObjectMap::new(big, PITCH).is_err());
        assert!(TiltConfig { fx: 0.0, fy: 0.0 }.validate().is_err());
        let neg = RateCalibration {
            background: -1.0,
            ..RateCalibration::default()
        };
        assert!(matches!(neg.validate(), Err(Error::Config { .. })));
    }

    #[test]
    fn rate_map_normalization() {
        let cal = RateCalibration::default();
        let dark = rate_maps(&Array2::zeros((4, 4)), &cal).unwrap();
        assert!(dark.heralded.iter().all(|&v| v == 0.0));
        assert!(dark.nonheralded.iter().all(|&v| v == cal.background));
        let mut i = Array2::from_elem((4, 4), 0.25);
        i[[1, 2]] = 3.0;
        let maps = rate_maps(&i, &cal).unwrap();
        assert_eq!(maps.heralded[[1, 2]], 1.72398);
        assert!((maps.nonheralded[[1, 2]] - 528.471).abs() < 1e-9);
    }

    #[test]
    fn calibrated_maps_reproduce_measured_averages() {
        let n = 64;
        let obj = ObjectMap::mirror(n, n, PITCH).unwrap();
        let beam = BeamProfile::centered(n, n, PITCH, 2.0);
        let i = intensity_map(&obj, &beam, &TiltConfig::default_for(PITCH)).unwrap();
        let m = MeasuredRates::MIRROR;
        let maps = rate_maps(&i, &RateCalibration::calibrated_to_averages(&i, &m).unwrap()).unwrap();
        let h = maps.heralded.mean().unwrap();
        let nh = maps.nonheralded.mean().unwrap();
        assert!((h - (m.heralded_signal + m.coincidence_noise)).abs() < 1e-9);
        assert!((nh - m.nonheralded).abs() < 1e-9);
        // Raw peak defaults land below the averages: a fringe field averages
        // about half its peak.
        let raw = rate_maps(&i, &RateCalibration::default()).unwrap();
        let ratio = raw.heralded.mean().unwrap() / m.heralded_signal;
        assert!(ratio > 0.4 && ratio < 0.6, "{ratio}");
    }

    #[test]
    fn physics_calibration_matches_hand_computation() {
        let src = SourceConfig {
            pair_rate: 1e5,
            multi_pair_prob: 0.0,
            duration: 1.0,
            seed: 0,
        };
        let mut dets = DetectorSet::uniform(crate::source::DetectorConfig::ideal());
        dets.imaging_a.efficiency = 0.5;
        dets.imaging_a.dark_rate = 100.0;
        dets.herald.efficiency = 0.5;
        let cal = RateCalibration::from_physics(&src, &dets, 0.5, 0.2, 2e-9).unwrap();
        // 1e5 · 0.5 · 0.2 · 0.5 · 0.5
        assert!((cal.nonheralded_peak - 2500.0).abs() < 1e-9);
        // Half the pairs heralded, plus herald singles 5e4/s against 2500/s.
        assert!(
            (cal.heralded_peak - (1250.0 + 5e4 * 2500.0 * 2e-9)).abs() < 1e-9,
            "{cal:?}"
        );
        assert!((cal.heralded_noise - 5e4 * 100.0 * 2e-9).abs() < 1e-12);
    }
}
