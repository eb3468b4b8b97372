#![allow(dead_code)]

use qholo::forward::{BeamProfile, ObjectMap, RateCalibration, TiltConfig};
use qholo::monitor::DetectorSet;
use qholo::scan::{ScanConfig, Setup};
use qholo::source::{DetectorConfig, SourceConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const PITCH: f64 = 30e-6;

fn within(ta: u64, tb: u64, offset: i64, window: u64) -> bool {
    let d = tb as i128 + offset as i128 - ta as i128;
    2 * d.abs() <= window as i128
}

/// Pairs by exhaustive search: every `a` in order claims the first unused
/// `b` in the window.
pub fn brute_pairs(a: &[u64], b: &[u64], window: u64, offset: i64) -> u64 {
    let mut used = vec![false; b.len()];
    let mut n = 0;
    for &ta in a {
        if let Some(j) = (0..b.len()).find(|&j| !used[j] && within(ta, b[j], offset, window)) {
            used[j] = true;
            n += 1;
        }
    }
    n
}

/// Triples by exhaustive search over all `(a, b)` candidates of each herald,
/// first in lexicographic index order.
pub fn brute_triples(h: &[u64], a: &[u64], b: &[u64], window: u64, offsets: (i64, i64)) -> u64 {
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut n = 0;
    for &th in h {
        let mut hit = None;
        'search: for i in 0..a.len() {
            for j in 0..b.len() {
                if !used_a[i]
                    && !used_b[j]
                    && within(th, a[i], offsets.0, window)
                    && within(th, b[j], offsets.1, window)
                {
                    hit = Some((i, j));
                    break 'search;
                }
            }
        }
        if let Some((i, j)) = hit {
            used_a[i] = true;
            used_b[j] = true;
            n += 1;
        }
    }
    n
}

/// Sorted tags in `[0, span)`, possibly with repeats.
pub fn random_tags(rng: &mut ChaCha8Rng, len: usize, span: u64) -> Vec<u64> {
    let mut v: Vec<u64> = (0..len).map(|_| rng.random_range(0..span)).collect();
    v.sort_unstable();
    v
}

/// Three streams, a window and offsets for one oracle instance.
pub struct Instance {
    pub h: Vec<u64>,
    pub a: Vec<u64>,
    pub b: Vec<u64>,
    pub window: u64,
    pub offsets: (i64, i64),
}

pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(0..=1000usize);
    let span = rng.random_range(1..=20 * n as u64 + 10);
    let mut len = || rng.random_range(0..=n);
    let (lh, la, lb) = (len(), len(), len());
    Instance {
        h: random_tags(&mut rng, lh, span),
        a: random_tags(&mut rng, la, span),
        b: random_tags(&mut rng, lb, span),
        window: rng.random_range(1..=60),
        offsets: (rng.random_range(-20..=20), rng.random_range(-20..=20)),
    }
}

pub fn source(pair_rate: f64, multi_pair_prob: f64) -> SourceConfig {
    SourceConfig {
        pair_rate,
        multi_pair_prob,
        duration: 1.0,
        seed: 1,
    }
}

pub fn ideal_detectors() -> DetectorSet {
    DetectorSet::uniform(DetectorConfig::ideal())
}

/// Object, beam and tilt of an `n × n` scan with the default optics.
pub struct Scene {
    pub object: ObjectMap,
    pub beam: BeamProfile,
    pub tilt: TiltConfig,
    pub source: SourceConfig,
    pub detectors: DetectorSet,
    pub rates: Option<RateCalibration>,
}

impl Scene {
    pub fn new(object: ObjectMap, waist_frac: f64) -> Self {
        let (w, h) = (object.width(), object.height());
        Scene {
            beam: BeamProfile::centered(w, h, PITCH, waist_frac),
            tilt: TiltConfig::default_for(PITCH),
            object,
            source: source(1e5, 0.0),
            detectors: DetectorSet::default(),
            rates: None,
        }
    }

    pub fn setup(&self) -> Setup<'_> {
        Setup {
            object: &self.object,
            beam: &self.beam,
            tilt: &self.tilt,
            source: &self.source,
            detectors: &self.detectors,
            rates: self.rates.as_ref(),
        }
    }

    pub fn scan(&self, integration_time: f64, window_ns: f64, seed: u64) -> ScanConfig {
        ScanConfig {
            seed,
            ..ScanConfig::new(
                self.object.width(),
                self.object.height(),
                integration_time,
                window_ns,
            )
        }
    }
}
