mod common;

use common::*;
use qholo::coincidence::{coincidence_report, count_triples};
use qholo::forward::{intensity_map, normalized, rate_maps, BeamProfile, ObjectMap, RateCalibration};
use qholo::monitor::{classical_monitor_streams, DetectorSet};
use qholo::scan::{acquire, acquire_line, AcquisitionMode, ScanConfig};
use qholo::source::{Bunching, ClassicalSourceConfig, DetectorConfig};
use qholo::Error;

/// Detectors without dead time, so both modes share the same expected rates.
fn linear_detectors() -> DetectorSet {
    DetectorSet::uniform(DetectorConfig {
        dead_time: 0.0,
        ..DetectorConfig::default()
    })
}

#[test]
fn fast_and_full_event_modes_agree_per_pixel() {
    let mut scene = Scene::new(ObjectMap::half_circles(16, 16, PITCH, 0.3, 0.08).unwrap(), 0.5);
    scene.source = source(2e5, 0.0);
    scene.detectors = linear_detectors();
    let fast = scene.scan(0.2, 2.0, 5);
    let full = ScanConfig {
        mode: AcquisitionMode::FullEvent,
        ..fast
    };
    let calib =
        RateCalibration::from_physics(&scene.source, &scene.detectors, 0.5, 1.0, fast.window_s()).unwrap();
    let u = normalized(&intensity_map(&scene.object, &scene.beam, &scene.tilt).unwrap()).unwrap();
    let expected = rate_maps(&u, &calib).unwrap();
    let a = acquire(&scene.setup(), &fast).unwrap();
    let b = acquire(&scene.setup(), &full).unwrap();
    let t = fast.integration_time;
    for (frame_a, frame_b, rate) in [
        (&a.heralded, &b.heralded, &expected.heralded),
        (&a.nonheralded, &b.nonheralded, &expected.nonheralded),
    ] {
        let (mut sum_a, mut sum_b, mut sum_mu) = (0.0, 0.0, 0.0);
        for ((ca, cb), r) in frame_a.counts.iter().zip(frame_b.counts.iter()).zip(rate.iter()) {
            let mu = r * t;
            let bound = 5.0 * (2.0 * mu).sqrt().max(1.0);
            assert!(
                (*ca as f64 - *cb as f64).abs() <= bound,
                "{ca} vs {cb}, mean {mu}"
            );
            sum_a += *ca as f64;
            sum_b += *cb as f64;
            sum_mu += mu;
        }
        for s in [sum_a, sum_b] {
            assert!((s - sum_mu).abs() <= 5.0 * sum_mu.sqrt(), "{s} vs {sum_mu}");
        }
    }
}

/// Mean over pixels of the per-pixel variance-to-mean ratio across repeats.
fn mean_dispersion(frames: &[ndarray::Array2<u64>]) -> f64 {
    let n = frames.len() as f64;
    let shape = frames[0].dim();
    let mut total = 0.0;
    let mut pixels = 0;
    for j in 0..shape.0 {
        for i in 0..shape.1 {
            let v: Vec<f64> = frames.iter().map(|f| f[[j, i]] as f64).collect();
            let mean = v.iter().sum::<f64>() / n;
            if mean < 5.0 {
                continue;
            }
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            total += var / mean;
            pixels += 1;
        }
    }
    assert!(pixels > 0);
    total / pixels as f64
}

#[test]
fn frame_counts_are_poisson_over_repeats() {
    let mut scene = Scene::new(ObjectMap::mirror(8, 8, PITCH).unwrap(), 0.5);
    scene.source = source(1e5, 0.0);
    scene.detectors = linear_detectors();
    for (mode, dwell) in [
        (AcquisitionMode::FastPoisson, 1.0),
        (AcquisitionMode::FullEvent, 0.02),
    ] {
        let (mut h, mut nh) = (Vec::new(), Vec::new());
        for rep in 0..100 {
            let scan = ScanConfig {
                mode,
                ..scene.scan(dwell, 2.0, 1000 + rep)
            };
            let acq = acquire(&scene.setup(), &scan).unwrap();
            h.push(acq.heralded.counts);
            nh.push(acq.nonheralded.counts);
        }
        for d in [mean_dispersion(&h), mean_dispersion(&nh)] {
            assert!((0.8..=1.2).contains(&d), "{mode:?}: {d}");
        }
    }
}

#[test]
fn long_line_converges_to_the_rate_map() {
    let mut scene = Scene::new(ObjectMap::half_circles(32, 32, PITCH, 0.3, 0.08).unwrap(), 0.5);
    scene.detectors = linear_detectors();
    let scan = scene.scan(1.0, 2.0, 9);
    let row = 16;
    let line = acquire_line(&scene.setup(), &scan, row, 1e4).unwrap();
    let calib = scene.setup().calibration(&scan).unwrap();
    let u = normalized(&intensity_map(&scene.object, &scene.beam, &scene.tilt).unwrap()).unwrap();
    let expected = rate_maps(&u, &calib).unwrap();
    let t = line.heralded.integration_time;
    assert_eq!(t, 1e4);
    for (frame, rate) in [
        (&line.heralded, &expected.heralded),
        (&line.nonheralded, &expected.nonheralded),
    ] {
        // Relative to the row's peak: fringe minima carry almost no signal.
        let peak = rate.row(row).iter().cloned().fold(0.0, f64::max);
        for (i, c) in frame.counts.row(0).iter().enumerate() {
            let r = rate[[row, i]];
            assert!(
                (*c as f64 / t - r).abs() <= 0.01 * peak,
                "pixel {i}: {} vs {r}",
                *c as f64 / t
            );
        }
    }
    let again = acquire_line(&scene.setup(), &scan, row, 1e4).unwrap();
    assert_eq!(again.heralded, line.heralded);
    assert!(matches!(
        acquire_line(&scene.setup(), &scan, 32, 1.0),
        Err(Error::Bounds(_))
    ));
}

#[test]
fn zero_rate_line_is_all_zeros() {
    let mut scene = Scene::new(ObjectMap::blank(16, 16, PITCH).unwrap(), 0.5);
    scene.beam.amplitude = 0.0;
    scene.detectors = ideal_detectors();
    for mode in [AcquisitionMode::FastPoisson, AcquisitionMode::FullEvent] {
        let scan = ScanConfig {
            mode,
            ..scene.scan(1.0, 2.0, 3)
        };
        let line = acquire_line(&scene.setup(), &scan, 3, 20.0).unwrap();
        assert_eq!(
            line.heralded.total() + line.nonheralded.total() + line.triples.total(),
            0
        );
    }
}

#[test]
fn dark_pixels_count_only_background() {
    // No light at all: every pixel records the imaging dark rate.
    let mut scene = Scene::new(ObjectMap::blank(16, 16, PITCH).unwrap(), 0.5);
    scene.beam = BeamProfile {
        amplitude: 0.0,
        ..scene.beam
    };
    scene.detectors = linear_detectors();
    let dark = scene.detectors.imaging_a.dark_rate;
    for (mode, dwell) in [
        (AcquisitionMode::FastPoisson, 1.0),
        (AcquisitionMode::FullEvent, 1.0),
    ] {
        let scan = ScanConfig {
            mode,
            ..scene.scan(dwell, 2.0, 8)
        };
        let acq = acquire(&scene.setup(), &scan).unwrap();
        let n = acq.nonheralded.counts.len() as f64;
        let mean = acq.nonheralded.total() as f64 / n;
        let mu = dark * dwell;
        assert!(
            (mean - mu).abs() <= 5.0 * (mu / n).sqrt(),
            "{mode:?}: {mean} vs {mu}"
        );
    }
}

fn poissonian(rate: f64, duration: f64, seed: u64) -> qholo::coincidence::MonitorStreams {
    let cfg = ClassicalSourceConfig {
        mean_rate: rate,
        bunching: Bunching::Poissonian,
        duration,
        seed,
    };
    classical_monitor_streams(&cfg, &ideal_detectors()).unwrap()
}

#[test]
fn split_poissonian_light_has_unit_g2() {
    let s = poissonian(1e4, 100.0, 12);
    assert!(s.herald.len() + s.a.len() + s.b.len() >= 900_000);
    // A window wide enough for about a thousand accidental triples.
    let report = coincidence_report(&s, 20_000_000, (0, 0)).unwrap();
    let (g2, sigma) = report.g2_checked().unwrap();
    assert!(report.n123 > 500, "{report:?}");
    assert!((g2 - 1.0).abs() <= 0.05, "{g2} ± {sigma}");
}

#[test]
fn accidental_triples_match_the_rate_estimate() {
    let (duration, window) = (100.0, 2_000_000u64);
    let s = poissonian(1e4, duration, 13);
    let w = window as f64 * 1e-12;
    let rate = |n: usize| n as f64 / duration;
    let expected = s.herald.len() as f64 * (rate(s.a.len()) * w) * (rate(s.b.len()) * w);
    let n123 = count_triples(&s.herald, &s.a, &s.b, window, (0, 0)).unwrap() as f64;
    assert!(n123 > 0.0);
    assert!(
        (n123 - expected).abs() <= 5.0 * expected.sqrt(),
        "{n123} vs {expected}"
    );
}
