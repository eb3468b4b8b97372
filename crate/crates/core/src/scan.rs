//! Raster-scanned hologram acquisition.
//!
//! The fibre samples one pixel at a time, so spatial structure reduces to a
//! detection probability per dwell. Pixels are independent given their
//! derived seeds, and the scan order is row-major with every row read left to
//! right.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coincidence::{count_coincidences, count_triples};
use crate::error::{Error, Result};
use crate::forward::{intensity_map, normalized, BeamProfile, ObjectMap, RateCalibration, TiltConfig};
use crate::monitor::{DetectorSet, CH_HERALD, CH_IMAGING_A, CH_IMAGING_B, CH_MONITOR_A, CH_MONITOR_B};
use crate::seed::{self, role};
use crate::source::{apply_detector, generate_pairs, split_beam, thin, DetectorConfig, SourceConfig};
use crate::timetag::{seconds_to_ps, TimeTagStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcquisitionMode {
    /// Counts drawn directly from the expected rates.
    #[default]
    FastPoisson,
    /// Every photon simulated and counted with the coincidence logic.
    FullEvent,
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

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub width: usize,
    pub height: usize,
    /// Meters.
    #[serde(default = "default_pixel_size")]
    pub pixel_size: f64,
    /// Seconds per pixel.
    pub integration_time: f64,
    /// Full coincidence window in nanoseconds; tags match when
    /// `|dt| <= window / 2`.
    pub coincidence_window_ns: f64,
    #[serde(default)]
    pub mode: AcquisitionMode,
    #[serde(default)]
    pub seed: u64,
    /// Relative standard deviation of a per-pixel gamma-distributed
    /// multiplier on the imaging background, modelling slow drifts of stray
    /// light. Zero gives pure Poisson statistics.
    #[serde(default)]
    pub background_fluctuation: f64,
    /// Share of the signal sent to the interferometer; the rest feeds the
    /// monitor detectors.
    #[serde(default = "default_half")]
    pub fbs_transmission: f64,
    /// Fibre coupling at the brightest pixel.
    #[serde(default = "default_one")]
    pub collection: f64,
}

impl ScanConfig {
    /// Scan with the default optics and pure Poisson statistics.
    pub fn new(width: usize, height: usize, integration_time: f64, window_ns: f64) -> Self {
        Self {
            width,
            height,
            pixel_size: default_pixel_size(),
            integration_time,
            coincidence_window_ns: window_ns,
            mode: AcquisitionMode::FastPoisson,
            seed: 0,
            background_fluctuation: 0.0,
            fbs_transmission: 0.5,
            collection: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < 2 || self.height < 2 {
            return Err(Error::config("scan.width", "frame must be at least 2x2 pixels"));
        }
        if !(self.pixel_size.is_finite() && self.pixel_size > 0.0) {
            return Err(Error::config("scan.pixel_size", "must be > 0"));
        }
        if !(self.integration_time.is_finite() && self.integration_time > 0.0) {
            return Err(Error::config("scan.integration_time", "must be > 0"));
        }
        if !(self.coincidence_window_ns.is_finite() && self.coincidence_window_ns > 0.0) {
            return Err(Error::config("scan.coincidence_window_ns", "must be > 0"));
        }
        if !(self.background_fluctuation.is_finite() && self.background_fluctuation >= 0.0) {
            return Err(Error::config("scan.background_fluctuation", "must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.fbs_transmission) {
            return Err(Error::config("scan.fbs_transmission", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.collection) {
            return Err(Error::config("scan.collection", "must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn window_ps(&self) -> u64 {
        (self.coincidence_window_ns * 1e3).round() as u64
    }

    pub fn window_s(&self) -> f64 {
        self.coincidence_window_ns * 1e-9
    }

    /// Frame geometry check against an object map.
    pub fn check_object(&self, obj: &ObjectMap) -> Result<()> {
        if obj.width() != self.width || obj.height() != self.height {
            return Err(Error::config(
                "object",
                format!(
                    "object map is {}x{} but the scan is {}x{}",
                    obj.width(),
                    obj.height(),
                    self.width,
                    self.height
                ),
            ));
        }
        if (obj.pitch() - self.pixel_size).abs() > 1e-9 * self.pixel_size {
            return Err(Error::config(
                "object",
                format!(
                    "object pitch {} m differs from scan.pixel_size {} m",
                    obj.pitch(),
                    self.pixel_size
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameChannel {
    Heralded,
    Nonheralded,
    Triples,
}

impl FrameChannel {
    pub fn label(self) -> &'static str {
        match self {
            FrameChannel::Heralded => "heralded",
            FrameChannel::Nonheralded => "nonheralded",
            FrameChannel::Triples => "triples",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "heralded" => Some(FrameChannel::Heralded),
            "nonheralded" => Some(FrameChannel::Nonheralded),
            "triples" => Some(FrameChannel::Triples),
            _ => None,
        }
    }
}

/// Counts per pixel for one channel, indexed `[[row, column]]`. A line scan
/// is a frame of height 1.
#[derive(Debug, Clone, PartialEq)]
pub struct HologramFrame {
    pub counts: Array2<u64>,
    /// Meters.
    pub pixel_size: f64,
    /// Seconds per pixel.
    pub integration_time: f64,
    pub channel: FrameChannel,
}

impl HologramFrame {
    pub fn width(&self) -> usize {
        self.counts.ncols()
    }

    pub fn height(&self) -> usize {
        self.counts.nrows()
    }

    pub fn total(&self) -> u64 {
        self.counts.sum()
    }

    pub fn as_f64(&self) -> Array2<f64> {
        self.counts.mapv(|c| c as f64)
    }

    /// Row `j` as floating-point counts.
    pub fn row(&self, j: usize) -> Result<Vec<f64>> {
        if j >= self.height() {
            return Err(Error::Bounds(format!(
                "row {j} outside frame of height {}",
                self.height()
            )));
        }
        Ok(self.counts.row(j).iter().map(|&c| c as f64).collect())
    }
}

/// The three frames of one acquisition.
#[derive(Debug, Clone, PartialEq)]
pub struct Acquisition {
    pub heralded: HologramFrame,
    pub nonheralded: HologramFrame,
    pub triples: HologramFrame,
}

/// Everything the scanner needs besides the scan grid itself.
#[derive(Debug, Clone, Copy)]
pub struct Setup<'a> {
    pub object: &'a ObjectMap,
    pub beam: &'a BeamProfile,
    pub tilt: &'a TiltConfig,
    pub source: &'a SourceConfig,
    pub detectors: &'a DetectorSet,
    /// Rates for the fast mode; derived from the event model when absent.
    pub rates: Option<&'a RateCalibration>,
}

impl Setup<'_> {
    /// Rates the fast mode samples from for this scan.
    pub fn calibration(&self, scan: &ScanConfig) -> Result<RateCalibration> {
        match self.rates {
            Some(r) => {
                r.validate()?;
                Ok(*r)
            }
            None => RateCalibration::from_physics(
                self.source,
                self.detectors,
                scan.fbs_transmission,
                scan.collection,
                scan.window_s(),
            ),
        }
    }
}

/// Counts recorded at one pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PixelCounts {
    pub heralded: u64,
    pub nonheralded: u64,
    pub triples: u64,
}

/// Detection streams recorded while dwelling on one pixel, starting at zero.
#[derive(Debug, Clone)]
pub struct PixelStreams {
    pub herald: TimeTagStream,
    pub monitor_a: TimeTagStream,
    pub monitor_b: TimeTagStream,
    pub imaging_a: TimeTagStream,
    pub imaging_b: TimeTagStream,
}

/// Gamma multiplier with unit mean and relative spread `sigma`.
fn background_multiplier(pixel_seed: u64, sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return 1.0;
    }
    let mut rng = seed::rng(seed::derive(pixel_seed, &[role::BACKGROUND]));
    let shape = 1.0 / (sigma * sigma);
    Gamma::new(shape, 1.0 / shape)
        .expect("shape > 0")
        .sample(&mut rng)
}

fn poisson<R: Rng>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("mean > 0").sample(rng) as u64
}

fn binomial<R: Rng>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("0 < p < 1").sample(rng)
}

/// Counts at one pixel of normalized intensity `u` in the fast mode.
///
/// Signal singles `S` and background counts `D` are Poisson. Heralded events
/// are binomial subsets: true pairs of `S` with probability
/// `heralded_peak / nonheralded_peak`, accidentals of `D` with probability
/// `heralded_noise / background`. Triples follow the accidental model of a
/// heralded count on one imaging detector plus an uncorrelated count on the
/// other within the window, and herald accidentals with two uncorrelated
/// counts. Genuine multi-pair triples are neglected.
pub fn fast_pixel(
    u: f64,
    calib: &RateCalibration,
    herald_singles_rate: f64,
    scan: &ScanConfig,
    pixel_seed: u64,
) -> PixelCounts {
    let t = scan.integration_time;
    let w = scan.window_s();
    let m = background_multiplier(pixel_seed, scan.background_fluctuation);
    let mut rng = seed::rng(seed::derive(pixel_seed, &[role::COUNTS]));
    let signal = poisson(&mut rng, calib.nonheralded_peak * u * t);
    let dark = poisson(&mut rng, calib.background * m * t);
    let true_heralded = if calib.nonheralded_peak > 0.0 {
        binomial(&mut rng, signal, calib.heralded_peak / calib.nonheralded_peak)
    } else {
        0
    };
    let accidental = if calib.background > 0.0 {
        binomial(&mut rng, dark, calib.heralded_noise / calib.background)
    } else {
        0
    };
    let heralded = true_heralded + accidental;
    let singles_rate = calib.nonheralded_peak * u + calib.background * m;
    let triple_rate = 2.0 * calib.heralded_peak * u * singles_rate * w
        + herald_singles_rate * singles_rate * singles_rate * w * w;
    let triples = poisson(&mut rng, triple_rate * t).min(heralded);
    PixelCounts {
        heralded,
        nonheralded: signal + dark,
        triples,
    }
}

/// Full event simulation of one pixel dwell.
pub fn event_pixel(u: f64, setup: &Setup<'_>, scan: &ScanConfig, pixel_seed: u64) -> Result<PixelStreams> {
    let t = scan.integration_time;
    let dets = setup.detectors;
    let m = background_multiplier(pixel_seed, scan.background_fluctuation);
    let src = SourceConfig {
        duration: t,
        seed: pixel_seed,
        ..*setup.source
    };
    let (h_raw, s_raw) = generate_pairs(&src)?;
    let sub = |r: u64| seed::derive(pixel_seed, &[r]);
    let herald = apply_detector(&h_raw, &dets.herald, t, sub(role::HERALD_DET))?;
    let (to_holo, to_mon) = split_beam(&s_raw, scan.fbs_transmission, sub(role::FBS))?;
    let (ma, mb) = split_beam(&to_mon, 0.5, sub(role::MONITOR_SPLIT))?;
    let monitor_a = apply_detector(&ma, &dets.monitor_a, t, sub(role::MONITOR_A_DET))?;
    let monitor_b = apply_detector(&mb, &dets.monitor_b, t, sub(role::MONITOR_B_DET))?;
    let sampled = thin(&to_holo, scan.collection * u, sub(role::PIXEL_THIN))?;
    let (ia, ib) = split_beam(&sampled, 0.5, sub(role::IMAGING_SPLIT))?;
    let with_background = |d: &DetectorConfig| DetectorConfig {
        dark_rate: d.dark_rate * m,
        ..*d
    };
    let imaging_a = apply_detector(
        &ia,
        &with_background(&dets.imaging_a),
        t,
        sub(role::IMAGING_A_DET),
    )?;
    let imaging_b = apply_detector(
        &ib,
        &with_background(&dets.imaging_b),
        t,
        sub(role::IMAGING_B_DET),
    )?;
    Ok(PixelStreams {
        herald: herald.with_channel(CH_HERALD),
        monitor_a: monitor_a.with_channel(CH_MONITOR_A),
        monitor_b: monitor_b.with_channel(CH_MONITOR_B),
        imaging_a: imaging_a.with_channel(CH_IMAGING_A),
        imaging_b: imaging_b.with_channel(CH_IMAGING_B),
    })
}

/// Frame values from one pixel's streams: heralded is herald × imaging A
/// coincidences, non-heralded is imaging A singles, triples are herald ×
/// imaging A × imaging B.
pub fn count_pixel(s: &PixelStreams, window_ps: u64) -> Result<PixelCounts> {
    Ok(PixelCounts {
        heralded: count_coincidences(&s.herald, &s.imaging_a, window_ps, 0)?,
        nonheralded: s.imaging_a.len() as u64,
        triples: count_triples(&s.herald, &s.imaging_a, &s.imaging_b, window_ps, (0, 0))?,
    })
}

fn pixel_seed(master: u64, x: usize, y: usize) -> u64 {
    seed::derive(master, &[role::PIXEL, x as u64, y as u64])
}

fn line_pixel_seed(master: u64, row: usize, x: usize) -> u64 {
    seed::derive(master, &[role::LINE, row as u64, x as u64])
}

fn herald_singles_rate(setup: &Setup<'_>) -> f64 {
    setup.source.pair_rate * setup.detectors.herald.efficiency + setup.detectors.herald.dark_rate
}

fn normalized_intensity(setup: &Setup<'_>, scan: &ScanConfig) -> Result<Array2<f64>> {
    scan.validate()?;
    setup.detectors.validate()?;
    scan.check_object(setup.object)?;
    normalized(&intensity_map(setup.object, setup.beam, setup.tilt)?)
}

fn run_pixels<F>(coords: &[(usize, usize)], f: F) -> Result<Vec<PixelCounts>>
where
    F: Fn(usize, usize) -> Result<PixelCounts> + Sync,
{
    coords.par_iter().map(|&(x, y)| f(x, y)).collect()
}

fn frames_from(
    counts: Vec<PixelCounts>,
    height: usize,
    width: usize,
    scan: &ScanConfig,
    dwell: f64,
) -> Acquisition {
    let grid = |f: fn(&PixelCounts) -> u64| {
        Array2::from_shape_vec((height, width), counts.iter().map(f).collect()).expect("one count per pixel")
    };
    let frame = |counts, channel| HologramFrame {
        counts,
        pixel_size: scan.pixel_size,
        integration_time: dwell,
        channel,
    };
    Acquisition {
        heralded: frame(grid(|c| c.heralded), FrameChannel::Heralded),
        nonheralded: frame(grid(|c| c.nonheralded), FrameChannel::Nonheralded),
        triples: frame(grid(|c| c.triples), FrameChannel::Triples),
    }
}

/// Acquires the heralded, non-heralded and triples frames.
pub fn acquire(setup: &Setup<'_>, scan: &ScanConfig) -> Result<Acquisition> {
    let u = normalized_intensity(setup, scan)?;
    let coords: Vec<(usize, usize)> = (0..scan.height)
        .flat_map(|y| (0..scan.width).map(move |x| (x, y)))
        .collect();
    let counts = match scan.mode {
        AcquisitionMode::FastPoisson => {
            let calib = setup.calibration(scan)?;
            let rh = herald_singles_rate(setup);
            run_pixels(&coords, |x, y| {
                Ok(fast_pixel(
                    u[[y, x]],
                    &calib,
                    rh,
                    scan,
                    pixel_seed(scan.seed, x, y),
                ))
            })?
        }
        AcquisitionMode::FullEvent => {
            setup.source.validate()?;
            let w = scan.window_ps();
            run_pixels(&coords, |x, y| {
                let s = event_pixel(u[[y, x]], setup, scan, pixel_seed(scan.seed, x, y))?;
                count_pixel(&s, w)
            })?
        }
    };
    Ok(frames_from(
        counts,
        scan.height,
        scan.width,
        scan,
        scan.integration_time,
    ))
}

/// Acquires one row at `oversample` times the frame dwell. The result is an
/// [`Acquisition`] of height 1 with its own random streams.
pub fn acquire_line(
    setup: &Setup<'_>,
    scan: &ScanConfig,
    row: usize,
    oversample: f64,
) -> Result<Acquisition> {
    if row >= scan.height {
        return Err(Error::Bounds(format!(
            "row {row} outside scan of height {}",
            scan.height
        )));
    }
    if !(oversample.is_finite() && oversample > 0.0) {
        return Err(Error::config("oversample", "must be > 0"));
    }
    let u = normalized_intensity(setup, scan)?;
    let line_scan = ScanConfig {
        integration_time: scan.integration_time * oversample,
        ..*scan
    };
    let coords: Vec<(usize, usize)> = (0..scan.width).map(|x| (x, row)).collect();
    let counts = match scan.mode {
        AcquisitionMode::FastPoisson => {
            let calib = setup.calibration(&line_scan)?;
            let rh = herald_singles_rate(setup);
            run_pixels(&coords, |x, y| {
                Ok(fast_pixel(
                    u[[y, x]],
                    &calib,
                    rh,
                    &line_scan,
                    line_pixel_seed(scan.seed, y, x),
                ))
            })?
        }
        AcquisitionMode::FullEvent => {
            setup.source.validate()?;
            let w = scan.window_ps();
            run_pixels(&coords, |x, y| {
                let s = event_pixel(u[[y, x]], setup, &line_scan, line_pixel_seed(scan.seed, y, x))?;
                count_pixel(&s, w)
            })?
        }
    };
    Ok(frames_from(
        counts,
        1,
        scan.width,
        scan,
        line_scan.integration_time,
    ))
}

/// All five detector streams of a full-event scan on one time axis. Pixel
/// `k` in scan order occupies `[k·dwell, (k+1)·dwell)`.
#[derive(Debug, Clone)]
pub struct ScanTimeline {
    pub streams: [TimeTagStream; 5],
    /// Seconds.
    pub duration: f64,
}

/// Replays a full-event scan and concatenates its streams in scan order. The
/// streams are the ones [`acquire`] counts, pixel for pixel.
pub fn scan_timeline(setup: &Setup<'_>, scan: &ScanConfig) -> Result<ScanTimeline> {
    let u = normalized_intensity(setup, scan)?;
    setup.source.validate()?;
    let mut streams =
        [CH_HERALD, CH_MONITOR_A, CH_MONITOR_B, CH_IMAGING_A, CH_IMAGING_B].map(TimeTagStream::empty);
    let dwell_ps = seconds_to_ps(scan.integration_time);
    for y in 0..scan.height {
        let row: Vec<PixelStreams> = (0..scan.width)
            .into_par_iter()
            .map(|x| event_pixel(u[[y, x]], setup, scan, pixel_seed(scan.seed, x, y)))
            .collect::<Result<_>>()?;
        for (x, s) in row.into_iter().enumerate() {
            let shift = (y * scan.width + x) as u64 * dwell_ps;
            for (dst, src) in
                streams
                    .iter_mut()
                    .zip([&s.herald, &s.monitor_a, &s.monitor_b, &s.imaging_a, &s.imaging_b])
            {
                dst.extend_from(&src.shifted(shift))?;
            }
        }
    }
    Ok(ScanTimeline {
        streams,
        duration: scan.integration_time * (scan.width * scan.height) as f64,
    })
}
