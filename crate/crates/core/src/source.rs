//! Monte Carlo generation of detection events.
//!
//! Photon-pair emission is a homogeneous Poisson process. Each pair puts one
//! tag at the same raw time on the herald and on the signal path; with a small
//! probability a second, independent pair in the same slot adds an extra signal
//! photon at that time. Detector imperfections (loss, dark counts, jitter and
//! dead time) and beam splitters are applied as separate stages so every
//! optical path can be assembled from the same pieces.

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, role};
use crate::timetag::{seconds_to_ps, TimeTagStream, PS_PER_S};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    /// Emitted pairs per second.
    pub pair_rate: f64,
    /// Probability that an emission slot carries a second pair.
    #[serde(default)]
    pub multi_pair_prob: f64,
    /// Seconds.
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SourceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.pair_rate.is_finite() && self.pair_rate > 0.0) {
            return Err(Error::config("source.pair_rate", "must be > 0"));
        }
        if !(0.0..1.0).contains(&self.multi_pair_prob) {
            return Err(Error::config("source.multi_pair_prob", "must lie in [0, 1)"));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::config("source.duration", "must be > 0"));
        }
        Ok(())
    }
}

/// Single-photon counting module model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    /// Detection probability per incident photon.
    pub efficiency: f64,
    /// Dark counts per second.
    pub dark_rate: f64,
    /// Seconds.
    pub dead_time: f64,
    /// Gaussian timing jitter standard deviation, seconds.
    pub jitter_sigma: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            efficiency: 0.5,
            dark_rate: 460.0,
            dead_time: 22e-9,
            jitter_sigma: 350e-12,
        }
    }
}

impl DetectorConfig {
    /// Lossless, noiseless, instantaneous detector.
    pub fn ideal() -> Self {
        Self {
            efficiency: 1.0,
            dark_rate: 0.0,
            dead_time: 0.0,
            jitter_sigma: 0.0,
        }
    }

    pub fn validate(&self, key: &str) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::config(format!("{key}.efficiency"), "must lie in [0, 1]"));
        }
        for (name, v) in [
            ("dark_rate", self.dark_rate),
            ("dead_time", self.dead_time),
            ("jitter_sigma", self.jitter_sigma),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(format!("{key}.{name}"), "must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Bunching {
    Poissonian,
    /// Chaotic light with exponentially decaying field correlation.
    Thermal {
        /// Seconds.
        coherence_time: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalSourceConfig {
    /// Mean photons per second.
    pub mean_rate: f64,
    pub bunching: Bunching,
    /// Seconds.
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
}

impl ClassicalSourceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mean_rate.is_finite() && self.mean_rate > 0.0) {
            return Err(Error::config("classical.mean_rate", "must be > 0"));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::config("classical.duration", "must be > 0"));
        }
        if let Bunching::Thermal { coherence_time } = self.bunching {
            if !(coherence_time.is_finite() && coherence_time > 0.0) {
                return Err(Error::config(
                    "classical.bunching.coherence_time",
                    "must be > 0 for thermal light",
                ));
            }
        }
        Ok(())
    }
}

/// Homogeneous Poisson arrival times on `[0, duration)` in picoseconds.
pub(crate) fn poisson_times<R: Rng>(rng: &mut R, rate: f64, duration: f64) -> Vec<u64> {
    if rate <= 0.0 {
        return Vec::new();
    }
    let gap = Exp::new(rate).expect("rate > 0");
    let mut out = Vec::with_capacity((rate * duration * 1.05 + 16.0) as usize);
    let mut t = gap.sample(rng);
    while t < duration {
        out.push((t * PS_PER_S) as u64);
        t += gap.sample(rng);
    }
    out
}

/// Emits photon pairs. Returns `(herald, signal)` raw streams on channels 1
/// and 0; channels are relabelled by the caller once the signal is routed.
pub fn generate_pairs(cfg: &SourceConfig) -> Result<(TimeTagStream, TimeTagStream)> {
    cfg.validate()?;
    let mut rng = seed::rng(seed::derive(cfg.seed, &[role::PAIRS]));
    let herald = poisson_times(&mut rng, cfg.pair_rate, cfg.duration);
    let signal = if cfg.multi_pair_prob > 0.0 {
        let mut s = Vec::with_capacity(herald.len() + herald.len() / 100);
        for &t in &herald {
            s.push(t);
            if rng.random::<f64>() < cfg.multi_pair_prob {
                s.push(t);
            }
        }
        s
    } else {
        herald.clone()
    };
    Ok((
        TimeTagStream::from_sorted(1, herald),
        TimeTagStream::from_sorted(0, signal),
    ))
}

/// Runs a stream through a detector model.
///
/// Each tag survives with probability `efficiency`, Poisson dark counts on
/// `[0, duration)` are merged in, Gaussian jitter is added and the result is
/// re-sorted; jittered tags stay inside `[0, duration)`. A final dead-time
/// pass drops any tag closer than `dead_time` to the previous kept tag; tags
/// at an identical picosecond always collapse to one, so the output is
/// strictly increasing.
pub fn apply_detector(
    input: &TimeTagStream,
    det: &DetectorConfig,
    duration: f64,
    seed: u64,
) -> Result<TimeTagStream> {
    det.validate("detector")?;
    let mut rng = seed::rng(seed);
    let mut tags: Vec<u64> = if det.efficiency >= 1.0 {
        input.tags().to_vec()
    } else if det.efficiency <= 0.0 {
        Vec::new()
    } else {
        input
            .tags()
            .iter()
            .copied()
            .filter(|_| rng.random::<f64>() < det.efficiency)
            .collect()
    };
    let darks = poisson_times(&mut rng, det.dark_rate, duration);
    let needs_sort = !darks.is_empty() || det.jitter_sigma > 0.0;
    tags.extend_from_slice(&darks);
    if det.jitter_sigma > 0.0 {
        let sigma_ps = det.jitter_sigma * PS_PER_S;
        let jitter = Normal::new(0.0, sigma_ps).expect("sigma >= 0");
        let max_ps = seconds_to_ps(duration).saturating_sub(1) as f64;
        for t in tags.iter_mut() {
            let shifted = (*t as f64 + jitter.sample(&mut rng)).round();
            *t = shifted.clamp(0.0, max_ps) as u64;
        }
    }
    if needs_sort {
        tags.sort_unstable();
    }
    let dead_ps = seconds_to_ps(det.dead_time);
    let mut out = Vec::with_capacity(tags.len());
    for t in tags {
        match out.last() {
            Some(&last) if t == last || t - last < dead_ps => {}
            _ => out.push(t),
        }
    }
    Ok(TimeTagStream::from_sorted(input.channel(), out))
}

/// Routes each tag independently to exactly one output port. Returns
/// `(transmitted, reflected)`.
pub fn split_beam(
    input: &TimeTagStream,
    transmission: f64,
    seed: u64,
) -> Result<(TimeTagStream, TimeTagStream)> {
    if !(0.0..=1.0).contains(&transmission) {
        return Err(Error::config("transmission", "must lie in [0, 1]"));
    }
    let mut rng = seed::rng(seed);
    let mut t_out = Vec::with_capacity((input.len() as f64 * transmission) as usize + 8);
    let mut r_out = Vec::with_capacity((input.len() as f64 * (1.0 - transmission)) as usize + 8);
    for &t in input.tags() {
        if rng.random::<f64>() < transmission {
            t_out.push(t);
        } else {
            r_out.push(t);
        }
    }
    Ok((
        TimeTagStream::from_sorted(input.channel(), t_out),
        TimeTagStream::from_sorted(input.channel(), r_out),
    ))
}

/// Keeps each tag with probability `p`. Used for spatial sampling by the
/// scanned fibre.
pub fn thin(input: &TimeTagStream, p: f64, seed: u64) -> Result<TimeTagStream> {
    Ok(split_beam(input, p.clamp(0.0, 1.0), seed)?.0)
}

/// Classical light on channel 0.
///
/// Poissonian light is a homogeneous Poisson process. Thermal light is a
/// doubly stochastic Poisson process whose intensity is `|E|^2` for a complex
/// Ornstein-Uhlenbeck field `E` with correlation time `coherence_time`; the
/// intensity is exponentially distributed with unit mean, so `g2(0) = 2` for
/// two detectors at zero delay.
pub fn generate_classical(cfg: &ClassicalSourceConfig) -> Result<TimeTagStream> {
    cfg.validate()?;
    let mut rng = seed::rng(seed::derive(cfg.seed, &[role::CLASSICAL]));
    let tags = match cfg.bunching {
        Bunching::Poissonian => poisson_times(&mut rng, cfg.mean_rate, cfg.duration),
        Bunching::Thermal { coherence_time } => {
            thermal_times(&mut rng, cfg.mean_rate, coherence_time, cfg.duration)
        }
    };
    Ok(TimeTagStream::from_sorted(0, tags))
}

fn thermal_times<R: Rng>(rng: &mut R, rate: f64, tau_c: f64, duration: f64) -> Vec<u64> {
    // Piecewise-constant intensity on slots much shorter than tau_c. Arrivals
    // come from a time change: unit exponentials are spent against the
    // integrated rate slot by slot.
    let slot = (tau_c / 16.0).min(duration);
    let a = (-slot / tau_c).exp();
    let kick = ((1.0 - a * a) / 2.0).sqrt();
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let mut re = unit.sample(rng) * half;
    let mut im = unit.sample(rng) * half;
    let exp1 = Exp::new(1.0).expect("unit exponential");

    let mut out = Vec::with_capacity((rate * duration * 1.05 + 16.0) as usize);
    let mut budget: f64 = exp1.sample(rng);
    let mut start = 0.0;
    while start < duration {
        let len = slot.min(duration - start);
        let lambda = rate * (re * re + im * im);
        let mass = lambda * len;
        let mut used = 0.0;
        while budget <= mass - used {
            used += budget;
            let t = start + used / lambda;
            out.push((t * PS_PER_S) as u64);
            budget = exp1.sample(rng);
        }
        budget -= mass - used;
        start += len;
        re = a * re + kick * unit.sample(rng);
        im = a * im + kick * unit.sample(rng);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(rate: f64, p: f64, dur: f64, seed: u64) -> SourceConfig {
        SourceConfig {
            pair_rate: rate,
            multi_pair_prob: p,
            duration: dur,
            seed,
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(matches!(
            generate_pairs(&cfg(0.0, 0.0, 1.0, 1)),
            Err(Error::Config { .. })
        ));
        assert!(matches!(
            generate_pairs(&cfg(1.0, 1.0, 1.0, 1)),
            Err(Error::Config { .. })
        ));
        assert!(matches!(
            generate_pairs(&cfg(1.0, 0.0, 0.0, 1)),
            Err(Error::Config { .. })
        ));
        let bad = ClassicalSourceConfig {
            mean_rate: 0.0,
            bunching: Bunching::Poissonian,
            duration: 1.0,
            seed: 0,
        };
        assert!(generate_classical(&bad).is_err());
        let bad = ClassicalSourceConfig {
            mean_rate: 10.0,
            bunching: Bunching::Thermal { coherence_time: 0.0 },
            duration: 1.0,
            seed: 0,
        };
        assert!(generate_classical(&bad).is_err());
    }

    #[test]
    fn lossless_pairs_are_identical() {
        let (h, s) = generate_pairs(&cfg(1000.0, 0.0, 1.0, 3)).unwrap();
        assert_eq!(h.tags(), s.tags());
        assert!(!h.is_empty());
    }

    #[test]
    fn pair_count_is_poisson() {
        let (h, _) = generate_pairs(&cfg(1e5, 0.0, 10.0, 11)).unwrap();
        let n = h.len() as f64;
        assert!((n - 1e6).abs() < 5.0 * 1e3, "n = {n}");
        assert!(h.tags().iter().all(|&t| t < seconds_to_ps(10.0)));
    }

    #[test]
    fn multi_pair_extras_match_bernoulli_count() {
        let c = cfg(1e5, 1e-3, 10.0, 12);
        let (h, s) = generate_pairs(&c).unwrap();
        let extra = s.len() - h.len();
        // Replay the same random stream to count the extra-photon draws.
        let mut rng = seed::rng(seed::derive(c.seed, &[role::PAIRS]));
        let replay = poisson_times(&mut rng, c.pair_rate, c.duration);
        assert_eq!(replay, h.tags());
        let draws = replay
            .iter()
            .filter(|_| rng.random::<f64>() < c.multi_pair_prob)
            .count();
        assert_eq!(extra, draws);
        let expected = 1e-3 * h.len() as f64;
        assert!((extra as f64 - expected).abs() < 5.0 * expected.sqrt());
    }

    #[test]
    fn ideal_detector_is_identity() {
        let s = TimeTagStream::new(3, vec![10, 500, 90_000]).unwrap();
        let out = apply_detector(&s, &DetectorConfig::ideal(), 1.0, 5).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn blind_detector_outputs_only_darks() {
        let (h, _) = generate_pairs(&cfg(1e4, 0.0, 10.0, 4)).unwrap();
        let det = DetectorConfig {
            efficiency: 0.0,
            dark_rate: 100.0,
            dead_time: 0.0,
            jitter_sigma: 0.0,
        };
        let out = apply_detector(&h, &det, 10.0, 9).unwrap();
        let n = out.len() as f64;
        assert!((n - 1000.0).abs() < 5.0 * 1000f64.sqrt(), "n = {n}");
        let mut rng = seed::rng(9);
        assert_eq!(poisson_times(&mut rng, 100.0, 10.0), out.tags());
    }

    #[test]
    fn dead_time_drops_second_tag() {
        let s = TimeTagStream::new(1, vec![1_000, 11_000]).unwrap();
        let det = DetectorConfig {
            dead_time: 50e-9,
            ..DetectorConfig::ideal()
        };
        let out = apply_detector(&s, &det, 1.0, 0).unwrap();
        assert_eq!(out.tags(), &[1_000]);
    }

    #[test]
    fn detector_output_strictly_sorted_and_in_range() {
        let c = cfg(2e5, 0.01, 1.0, 21);
        let (_, s) = generate_pairs(&c).unwrap();
        let out = apply_detector(&s, &DetectorConfig::default(), 1.0, 22).unwrap();
        assert!(out.is_strictly_increasing());
        assert!(out.tags().iter().all(|&t| t <= seconds_to_ps(1.0)));
    }

    #[test]
    fn efficiency_scales_counts() {
        // Chi-square style check at 5 sigma for a binomial thinning.
        let (h, _) = generate_pairs(&cfg(1e5, 0.0, 10.0, 31)).unwrap();
        for p in [0.1, 0.5, 0.9] {
            let det = DetectorConfig {
                efficiency: p,
                ..DetectorConfig::ideal()
            };
            let out = apply_detector(&h, &det, 10.0, 32).unwrap();
            let n = h.len() as f64;
            let sd = (n * p * (1.0 - p)).sqrt();
            assert!((out.len() as f64 - n * p).abs() < 5.0 * sd, "p = {p}");
        }
    }

    #[test]
    fn full_transmission_passes_everything() {
        let s = TimeTagStream::new(2, vec![1, 2, 3]).unwrap();
        let (t, r) = split_beam(&s, 1.0, 0).unwrap();
        assert_eq!(t, s);
        assert!(r.is_empty());
        assert!(split_beam(&s, 1.5, 0).is_err());
    }

    #[test]
    fn half_split_is_a_partition() {
        let (h, _) = generate_pairs(&cfg(1e5, 0.0, 10.0, 41)).unwrap();
        let (t, r) = split_beam(&h, 0.5, 42).unwrap();
        let n = h.len() as f64;
        assert!((t.len() as f64 - n / 2.0).abs() < 5.0 * (n / 4.0).sqrt());
        let mut union: Vec<u64> = t.tags().iter().chain(r.tags()).copied().collect();
        union.sort_unstable();
        assert_eq!(union, h.tags());
        // Disjoint as multisets: the sizes add up exactly.
        assert_eq!(t.len() + r.len(), h.len());
    }

    #[test]
    fn generation_is_deterministic() {
        let c = cfg(5e4, 0.01, 1.0, 77);
        assert_eq!(generate_pairs(&c).unwrap(), generate_pairs(&c).unwrap());
        let th = ClassicalSourceConfig {
            mean_rate: 1e5,
            bunching: Bunching::Thermal { coherence_time: 1e-5 },
            duration: 0.5,
            seed: 5,
        };
        assert_eq!(generate_classical(&th).unwrap(), generate_classical(&th).unwrap());
    }

    #[test]
    fn thermal_mean_rate_and_bunching() {
        let th = ClassicalSourceConfig {
            mean_rate: 1e5,
            bunching: Bunching::Thermal { coherence_time: 1e-4 },
            duration: 20.0,
            seed: 8,
        };
        let s = generate_classical(&th).unwrap();
        let n = s.len() as f64;
        // Mean rate holds to a few percent; the intensity fluctuates on 1e-4 s
        // so the count variance is super-Poissonian.
        assert!((n / 2e6 - 1.0).abs() < 0.03, "n = {n}");
        // Counts in 10 us bins: variance/mean - 1 approaches mean count * g2-1.
        let bin = seconds_to_ps(1e-5);
        let mut counts = vec![0u32; (20.0 / 1e-5) as usize];
        for &t in s.tags() {
            let i = (t / bin) as usize;
            if i < counts.len() {
                counts[i] += 1;
            }
        }
        let m = counts.iter().map(|&c| c as f64).sum::<f64>() / counts.len() as f64;
        let v = counts.iter().map(|&c| (c as f64 - m).powi(2)).sum::<f64>() / counts.len() as f64;
        let excess = (v - m) / (m * m);
        assert!(excess > 0.7 && excess < 1.1, "excess = {excess}");
    }
}
