//! Pipeline configuration file (TOML). Unknown keys are errors, and every
//! error names the offending key path.

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::forward::{intensity_map, BeamProfile, MeasuredRates, ObjectMap, RateCalibration, TiltConfig};
use crate::monitor::DetectorSet;
use crate::reconstruct::{MaskShape, PhaseMethod, ReconstructOptions};
use crate::scan::{AcquisitionMode, ScanConfig};
use crate::seed::{self, role};
use crate::source::{Bunching, ClassicalSourceConfig, SourceConfig};

fn default_monitor_duration() -> f64 {
    60.0
}

fn default_monitor_bin() -> f64 {
    60.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    /// Pairs per second.
    pub pair_rate: f64,
    #[serde(default)]
    pub multi_pair_prob: f64,
    /// Seconds of source characterisation recorded by `simulate`.
    #[serde(default = "default_monitor_duration")]
    pub monitor_duration: f64,
    /// Seconds per rolling g2 bin.
    #[serde(default = "default_monitor_bin")]
    pub monitor_bin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalSection {
    pub mean_rate: f64,
    pub bunching: Bunching,
    pub duration: f64,
}

fn default_waist_frac() -> f64 {
    0.5
}

fn default_amplitude() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSection {
    /// Meters; overrides `waist_frac`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waist: Option<f64>,
    /// Waist as a fraction of the shorter frame side.
    #[serde(default = "default_waist_frac")]
    pub waist_frac: f64,
    /// Meters, `[x, y]`; frame centre when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<[f64; 2]>,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

impl Default for BeamSection {
    fn default() -> Self {
        Self {
            waist: None,
            waist_frac: default_waist_frac(),
            center: None,
            amplitude: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TiltSection {
    /// Cycles per meter. Both absent gives a four-pixel period along x.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fy: Option<f64>,
}

fn default_radius_frac() -> f64 {
    0.3
}

fn default_gap_frac() -> f64 {
    0.08
}

fn default_step() -> f64 {
    FRAC_PI_2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectSection {
    Mirror,
    Blank,
    HalfCircles {
        #[serde(default = "default_radius_frac")]
        radius_frac: f64,
        #[serde(default = "default_gap_frac")]
        gap_frac: f64,
    },
    PhaseStep {
        /// Radians.
        #[serde(default = "default_step")]
        step: f64,
    },
    /// `<path>_amp.csv` and `<path>_phase.csv`, relative to the config file.
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasuredHologram {
    Mirror,
    Second,
}

impl MeasuredHologram {
    pub fn rates(self) -> MeasuredRates {
        match self {
            MeasuredHologram::Mirror => MeasuredRates::MIRROR,
            MeasuredHologram::Second => MeasuredRates::SECOND,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RatesSection {
    /// Derived from source, detectors and optics.
    Physics,
    Explicit {
        heralded_peak: f64,
        nonheralded_peak: f64,
        background: f64,
        #[serde(default)]
        heralded_noise: f64,
    },
    /// Measured per-pixel averages, used as peaks or matched as frame means.
    Measured {
        hologram: MeasuredHologram,
        #[serde(default)]
        match_averages: bool,
    },
    /// Peaks that give these beam-centre visibilities over the measured
    /// floors of `hologram`.
    Visibility {
        hologram: MeasuredHologram,
        heralded_visibility: f64,
        nonheralded_visibility: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskSection {
    /// Frequency pixels; `min(width, height) / 8` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<i64>,
    #[serde(default)]
    pub shape: MaskShape,
    #[serde(default)]
    pub reference_half_width: i64,
    #[serde(default)]
    pub method: PhaseMethod,
}

fn default_oversample() -> f64 {
    4.0
}

fn default_band_rows() -> usize {
    8
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSection {
    #[serde(default)]
    pub include_dark_dark: bool,
    /// Row for the long-dwell line scan; frame centre when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line_row: Option<usize>,
    /// Line dwell as a multiple of the frame dwell.
    #[serde(default = "default_oversample")]
    pub line_oversample: f64,
    /// Rows summed around the line row for frame visibility.
    #[serde(default = "default_band_rows")]
    pub band_rows: usize,
}

impl Default for MetricsSection {
    fn default() -> Self {
        Self {
            include_dark_dark: false,
            line_row: None,
            line_oversample: default_oversample(),
            band_rows: default_band_rows(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub width: usize,
    pub height: usize,
    #[serde(default = "default_pixel_size")]
    pub pixel_size: f64,
    pub integration_time: f64,
    pub coincidence_window_ns: f64,
    #[serde(default)]
    pub mode: AcquisitionMode,
    #[serde(default)]
    pub background_fluctuation: f64,
    #[serde(default = "default_half")]
    pub fbs_transmission: f64,
    #[serde(default = "default_one")]
    pub collection: f64,
}

fn default_pixel_size() -> f64 {
    30e-6
}

fn default_half() -> f64 {
    0.5
}

fn default_one() -> f64 {
    1.0
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

/// Whole pipeline configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    /// Output directory, relative to the working directory. Not part of the
    /// canonical form.
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
    pub source: SourceSection,
    #[serde(default, skip_serializing_if = "is_default")]
    pub detectors: DetectorSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classical: Option<ClassicalSection>,
    #[serde(default)]
    pub beam: BeamSection,
    #[serde(default)]
    pub tilt: TiltSection,
    pub object: ObjectSection,
    pub scan: ScanSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<RatesSection>,
    #[serde(default)]
    pub mask: MaskSection,
    #[serde(default)]
    pub metrics: MetricsSection,
    /// Directory of the file the config was read from, for relative paths.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn key_path(path: &serde_path_to_error::Path) -> String {
    let s = path.to_string();
    if s == "." {
        String::new()
    } else {
        s
    }
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| Error::config("", e.to_string()))?;
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let key = key_path(e.path());
            Error::config(key, e.into_inner().message().to_owned())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    /// Checks every section; errors name the key.
    pub fn validate(&self) -> Result<()> {
        self.source_config(0.0)?.validate()?;
        if !(self.source.monitor_duration.is_finite() && self.source.monitor_duration > 0.0) {
            return Err(Error::config("source.monitor_duration", "must be > 0"));
        }
        if !(self.source.monitor_bin.is_finite() && self.source.monitor_bin > 0.0) {
            return Err(Error::config("source.monitor_bin", "must be > 0"));
        }
        self.detectors.validate()?;
        if let Some(c) = self.classical_config() {
            c.validate()?;
        }
        self.scan_config().validate()?;
        self.beam_profile().validate()?;
        if !(self.beam.waist_frac.is_finite() && self.beam.waist_frac > 0.0) {
            return Err(Error::config("beam.waist_frac", "must be > 0"));
        }
        self.tilt_config().validate()?;
        match &self.object {
            ObjectSection::HalfCircles {
                radius_frac,
                gap_frac,
            } => {
                if !(*radius_frac > 0.0) {
                    return Err(Error::config("object.radius_frac", "must be > 0"));
                }
                if !(*gap_frac >= 0.0) {
                    return Err(Error::config("object.gap_frac", "must be >= 0"));
                }
            }
            ObjectSection::PhaseStep { step } if !step.is_finite() => {
                return Err(Error::config("object.step", "must be finite"));
            }
            _ => {}
        }
        match self.rates {
            Some(RatesSection::Explicit { .. }) => {
                self.explicit_rates().expect("explicit").validate()?;
            }
            Some(RatesSection::Visibility {
                hologram,
                heralded_visibility,
                nonheralded_visibility,
            }) => {
                RateCalibration::from_visibilities(
                    &hologram.rates(),
                    heralded_visibility,
                    nonheralded_visibility,
                )?;
            }
            _ => {}
        }
        if self.mask.reference_half_width < 0 {
            return Err(Error::config("mask.reference_half_width", "must be >= 0"));
        }
        if matches!(self.mask.radius, Some(r) if r < 0) {
            return Err(Error::config("mask.radius", "must be >= 0"));
        }
        if !(self.metrics.line_oversample.is_finite() && self.metrics.line_oversample > 0.0) {
            return Err(Error::config("metrics.line_oversample", "must be > 0"));
        }
        if self.metrics.band_rows == 0 || self.metrics.band_rows > self.scan.height {
            return Err(Error::config("metrics.band_rows", "must lie in 1..=scan.height"));
        }
        if matches!(self.metrics.line_row, Some(r) if r >= self.scan.height) {
            return Err(Error::config("metrics.line_row", "must be below scan.height"));
        }
        Ok(())
    }

    /// Canonical TOML: every default spelled out, output directory omitted.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Source with a seed derived from the master seed, for `duration` s.
    pub fn source_config(&self, duration: f64) -> Result<SourceConfig> {
        Ok(SourceConfig {
            pair_rate: self.source.pair_rate,
            multi_pair_prob: self.source.multi_pair_prob,
            duration: if duration > 0.0 {
                duration
            } else {
                self.source.monitor_duration
            },
            seed: seed::derive(self.seed, &[role::PAIRS]),
        })
    }

    pub fn classical_config(&self) -> Option<ClassicalSourceConfig> {
        self.classical.map(|c| ClassicalSourceConfig {
            mean_rate: c.mean_rate,
            bunching: c.bunching,
            duration: c.duration,
            seed: seed::derive(self.seed, &[role::CLASSICAL]),
        })
    }

    pub fn scan_config(&self) -> ScanConfig {
        let s = &self.scan;
        ScanConfig {
            width: s.width,
            height: s.height,
            pixel_size: s.pixel_size,
            integration_time: s.integration_time,
            coincidence_window_ns: s.coincidence_window_ns,
            mode: s.mode,
            seed: seed::derive(self.seed, &[role::PIXEL]),
            background_fluctuation: s.background_fluctuation,
            fbs_transmission: s.fbs_transmission,
            collection: s.collection,
        }
    }

    pub fn beam_profile(&self) -> BeamProfile {
        let s = &self.scan;
        let mut b = BeamProfile::centered(s.width, s.height, s.pixel_size, self.beam.waist_frac);
        if let Some(w) = self.beam.waist {
            b.waist = w;
        }
        if let Some(c) = self.beam.center {
            b.center = c;
        }
        b.amplitude = self.beam.amplitude;
        b
    }

    pub fn tilt_config(&self) -> TiltConfig {
        match (self.tilt.fx, self.tilt.fy) {
            (None, None) => TiltConfig::default_for(self.scan.pixel_size),
            (fx, fy) => TiltConfig {
                fx: fx.unwrap_or(0.0),
                fy: fy.unwrap_or(0.0),
            },
        }
    }

    pub fn object_map(&self) -> Result<ObjectMap> {
        let (w, h, p) = (self.scan.width, self.scan.height, self.scan.pixel_size);
        match &self.object {
            ObjectSection::Mirror => ObjectMap::mirror(w, h, p),
            ObjectSection::Blank => ObjectMap::blank(w, h, p),
            ObjectSection::HalfCircles {
                radius_frac,
                gap_frac,
            } => ObjectMap::half_circles(w, h, p, *radius_frac, *gap_frac),
            ObjectSection::PhaseStep { step } => ObjectMap::phase_step(w, h, p, *step),
            ObjectSection::File { path } => crate::io::read_object_map(&self.base_dir.join(path)),
        }
    }

    fn explicit_rates(&self) -> Option<RateCalibration> {
        match self.rates {
            Some(RatesSection::Explicit {
                heralded_peak,
                nonheralded_peak,
                background,
                heralded_noise,
            }) => Some(RateCalibration {
                heralded_peak,
                nonheralded_peak,
                background,
                heralded_noise,
            }),
            _ => None,
        }
    }

    /// Rate calibration for the fast mode; `None` means derive from physics.
    pub fn rate_calibration(&self, object: &ObjectMap) -> Result<Option<RateCalibration>> {
        Ok(match self.rates {
            None | Some(RatesSection::Physics) => None,
            Some(RatesSection::Explicit { .. }) => self.explicit_rates(),
            Some(RatesSection::Measured {
                hologram,
                match_averages,
            }) => {
                let m = hologram.rates();
                Some(if match_averages {
                    let i = intensity_map(object, &self.beam_profile(), &self.tilt_config())?;
                    RateCalibration::calibrated_to_averages(&i, &m)?
                } else {
                    RateCalibration::with_measured_noise(&m)
                })
            }
            Some(RatesSection::Visibility {
                hologram,
                heralded_visibility,
                nonheralded_visibility,
            }) => Some(RateCalibration::from_visibilities(
                &hologram.rates(),
                heralded_visibility,
                nonheralded_visibility,
            )?),
        })
    }

    pub fn reconstruct_options(&self) -> ReconstructOptions {
        ReconstructOptions {
            center: None,
            mask_radius: self.mask.radius,
            mask_shape: self.mask.shape,
            reference_half_width: self.mask.reference_half_width,
            method: self.mask.method,
        }
    }

    /// Row used for line scans.
    pub fn line_row(&self) -> usize {
        self.metrics.line_row.unwrap_or(self.scan.height / 2)
    }
}
