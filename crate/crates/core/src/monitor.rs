//! Source characterisation runs: herald plus two heralded detectors behind a
//! 50/50 splitter, simulated in chunks so long runs never hold the whole event
//! record in memory.

use serde::{Deserialize, Serialize};

use crate::coincidence::{coincidence_report, CoincidenceReport, MonitorStreams, RollingG2};
use crate::error::{Error, Result};
use crate::seed::{self, role};
use crate::source::{
    apply_detector, generate_classical, generate_pairs, split_beam, ClassicalSourceConfig, DetectorConfig,
    SourceConfig,
};
use crate::timetag::seconds_to_ps;

/// Detector models for the five counting modules. Channel numbers follow the
/// setup: 1 herald, 2 and 3 monitors, 4 and 5 imaging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSet {
    #[serde(default)]
    pub herald: DetectorConfig,
    #[serde(default)]
    pub monitor_a: DetectorConfig,
    #[serde(default)]
    pub monitor_b: DetectorConfig,
    #[serde(default)]
    pub imaging_a: DetectorConfig,
    #[serde(default)]
    pub imaging_b: DetectorConfig,
}

impl Default for DetectorSet {
    fn default() -> Self {
        Self::uniform(DetectorConfig::default())
    }
}

impl DetectorSet {
    pub fn uniform(det: DetectorConfig) -> Self {
        Self {
            herald: det,
            monitor_a: det,
            monitor_b: det,
            imaging_a: det,
            imaging_b: det,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.herald.validate("detectors.herald")?;
        self.monitor_a.validate("detectors.monitor_a")?;
        self.monitor_b.validate("detectors.monitor_b")?;
        self.imaging_a.validate("detectors.imaging_a")?;
        self.imaging_b.validate("detectors.imaging_b")
    }
}

pub const CH_HERALD: u8 = 1;
pub const CH_MONITOR_A: u8 = 2;
pub const CH_MONITOR_B: u8 = 3;
pub const CH_IMAGING_A: u8 = 4;
pub const CH_IMAGING_B: u8 = 5;

/// Events of one heralded characterisation chunk starting at time zero.
/// All signal photons go to the monitor splitter.
pub fn heralded_monitor_streams(
    source: &SourceConfig,
    dets: &DetectorSet,
    seed: u64,
) -> Result<MonitorStreams> {
    let src = SourceConfig { seed, ..*source };
    let (h_raw, s_raw) = generate_pairs(&src)?;
    let dur = source.duration;
    let herald = apply_detector(&h_raw, &dets.herald, dur, seed::derive(seed, &[role::HERALD_DET]))?;
    let (ta, tb) = split_beam(&s_raw, 0.5, seed::derive(seed, &[role::MONITOR_SPLIT]))?;
    let a = apply_detector(
        &ta,
        &dets.monitor_a,
        dur,
        seed::derive(seed, &[role::MONITOR_A_DET]),
    )?;
    let b = apply_detector(
        &tb,
        &dets.monitor_b,
        dur,
        seed::derive(seed, &[role::MONITOR_B_DET]),
    )?;
    Ok(MonitorStreams {
        herald: herald.with_channel(CH_HERALD),
        a: a.with_channel(CH_MONITOR_A),
        b: b.with_channel(CH_MONITOR_B),
    })
}

/// Classical light split three ways: one third to the "herald" detector, the
/// rest 50/50 onto the two others. For any classical field the three channels
/// see the same intensity, so `g2(0) >= 1`.
pub fn classical_monitor_streams(cfg: &ClassicalSourceConfig, dets: &DetectorSet) -> Result<MonitorStreams> {
    let light = generate_classical(cfg)?;
    let split_seed = seed::derive(cfg.seed, &[role::CLASSICAL_SPLIT]);
    let (h_raw, rest) = split_beam(&light, 1.0 / 3.0, seed::derive(split_seed, &[0]))?;
    let (ta, tb) = split_beam(&rest, 0.5, seed::derive(split_seed, &[1]))?;
    let dur = cfg.duration;
    let herald = apply_detector(
        &h_raw,
        &dets.herald,
        dur,
        seed::derive(cfg.seed, &[role::HERALD_DET]),
    )?;
    let a = apply_detector(
        &ta,
        &dets.monitor_a,
        dur,
        seed::derive(cfg.seed, &[role::MONITOR_A_DET]),
    )?;
    let b = apply_detector(
        &tb,
        &dets.monitor_b,
        dur,
        seed::derive(cfg.seed, &[role::MONITOR_B_DET]),
    )?;
    Ok(MonitorStreams {
        herald: herald.with_channel(CH_HERALD),
        a: a.with_channel(CH_MONITOR_A),
        b: b.with_channel(CH_MONITOR_B),
    })
}

/// Which light feeds a chunked characterisation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MonitorLight {
    Heralded(SourceConfig),
    Classical(ClassicalSourceConfig),
}

impl MonitorLight {
    fn duration(&self) -> f64 {
        match self {
            MonitorLight::Heralded(s) => s.duration,
            MonitorLight::Classical(c) => c.duration,
        }
    }

    fn master_seed(&self) -> u64 {
        match self {
            MonitorLight::Heralded(s) => s.seed,
            MonitorLight::Classical(c) => c.seed,
        }
    }

    /// Streams for a chunk of length `len` with its own derived seed.
    fn chunk(&self, dets: &DetectorSet, index: u64, len: f64) -> Result<MonitorStreams> {
        let chunk_seed = seed::derive(self.master_seed(), &[role::CHUNK, index]);
        match self {
            MonitorLight::Heralded(s) => {
                let src = SourceConfig { duration: len, ..*s };
                heralded_monitor_streams(&src, dets, chunk_seed)
            }
            MonitorLight::Classical(c) => {
                let cfg = ClassicalSourceConfig {
                    duration: len,
                    seed: chunk_seed,
                    ..*c
                };
                classical_monitor_streams(&cfg, dets)
            }
        }
    }
}

/// Longest stretch of events simulated at once.
pub const MAX_CHUNK_S: f64 = 10.0;

/// Chunk index, start and length for every chunk, grouped by bin. Each bin
/// of `bin_duration` seconds is split into equal chunks of at most
/// [`MAX_CHUNK_S`].
fn chunk_plan(total: f64, bin_duration: f64) -> Result<Vec<Vec<(u64, f64, f64)>>> {
    if !(bin_duration.is_finite() && bin_duration > 0.0) {
        return Err(Error::config("bin_duration", "must be > 0"));
    }
    let nbins = (total / bin_duration - 1e-9).ceil().max(1.0) as u64;
    Ok((0..nbins)
        .map(|bin| {
            let start = bin as f64 * bin_duration;
            let len = bin_duration.min(total - start);
            let pieces = (len / MAX_CHUNK_S).ceil().max(1.0) as u64;
            let piece = len / pieces as f64;
            (0..pieces)
                .map(|p| (bin * 1_000_000 + p, start + p as f64 * piece, piece))
                .collect()
        })
        .collect())
}

/// Simulates a characterisation run bin by bin and reports `g2(0)` per bin.
///
/// Chunks are simulated independently and counted on the fly. Counts are
/// added across chunks, so coincidences straddling a chunk edge (a fraction
/// of order `window / chunk`) are not seen.
pub fn monitor_run(
    light: &MonitorLight,
    dets: &DetectorSet,
    window_ps: u64,
    bin_duration: f64,
) -> Result<RollingG2> {
    dets.validate()?;
    let mut bins = Vec::new();
    for chunks in chunk_plan(light.duration(), bin_duration)? {
        let mut parts = Vec::with_capacity(chunks.len());
        for (index, _, len) in chunks {
            let streams = light.chunk(dets, index, len)?;
            parts.push(coincidence_report(&streams, window_ps, (0, 0))?);
        }
        bins.push(CoincidenceReport::merged(&parts, window_ps));
    }
    let total = CoincidenceReport::merged(&bins, window_ps);
    Ok(RollingG2 { bins, total })
}

/// The same chunks as [`monitor_run`] with this `bin_duration`, concatenated
/// into whole-run streams for writing time-tag files.
pub fn monitor_run_streams(
    light: &MonitorLight,
    dets: &DetectorSet,
    bin_duration: f64,
) -> Result<MonitorStreams> {
    dets.validate()?;
    let mut out = MonitorStreams {
        herald: crate::timetag::TimeTagStream::empty(CH_HERALD),
        a: crate::timetag::TimeTagStream::empty(CH_MONITOR_A),
        b: crate::timetag::TimeTagStream::empty(CH_MONITOR_B),
    };
    for (index, start, len) in chunk_plan(light.duration(), bin_duration)?.into_iter().flatten() {
        let s = light.chunk(dets, index, len)?;
        let shift = seconds_to_ps(start);
        out.herald.extend_from(&s.herald.shifted(shift))?;
        out.a.extend_from(&s.a.shifted(shift))?;
        out.b.extend_from(&s.b.shifted(shift))?;
    }
    Ok(out)
}
