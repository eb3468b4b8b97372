//! Coincidence counting and the heralded second-order correlation `g2(0)`.
//!
//! Two tags coincide when `|t_b + offset - t_a| <= window / 2`. Matching is
//! one-to-one and greedy in time order: each tag of the first stream takes the
//! earliest still-unused partner inside its window. For equal-width windows
//! this yields a maximum matching, so the pair count does not depend on which
//! stream is treated as the first one. All counters are single forward sweeps.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timetag::{check_sorted, TimeTagStream, PS_PER_S};

#[inline]
fn within(ta: u64, tb: u64, offset: i64, window: u64) -> bool {
    let d = tb as i128 + offset as i128 - ta as i128;
    2 * d.unsigned_abs() <= window as u128
}

#[inline]
fn too_early(ta: u64, tb: u64, offset: i64, window: u64) -> bool {
    // partner lies before the window opened by `ta` (and every later tag)
    let d = ta as i128 - (tb as i128 + offset as i128);
    d > 0 && 2 * d as u128 > window as u128
}

fn validate_window(window: u64) -> Result<()> {
    if window == 0 {
        Err(Error::config("window", "coincidence window must be > 0 ps"))
    } else {
        Ok(())
    }
}

/// Calls `visit(i, j)` for every matched pair `(a[i], b[j])`.
pub fn for_each_pair(
    a: &[u64],
    b: &[u64],
    window: u64,
    offset: i64,
    mut visit: impl FnMut(usize, usize),
) -> Result<()> {
    validate_window(window)?;
    check_sorted(a)?;
    check_sorted(b)?;
    let mut j = 0;
    for (i, &ta) in a.iter().enumerate() {
        while j < b.len() && too_early(ta, b[j], offset, window) {
            j += 1;
        }
        if j < b.len() && within(ta, b[j], offset, window) {
            visit(i, j);
            j += 1;
        }
    }
    Ok(())
}

/// Number of matched pairs between `a` and `b` (with `offset` added to `b`).
pub fn count_coincidences(
    a: impl AsRef<[u64]>,
    b: impl AsRef<[u64]>,
    window: u64,
    offset: i64,
) -> Result<u64> {
    let mut n = 0;
    for_each_pair(a.as_ref(), b.as_ref(), window, offset, |_, _| n += 1)?;
    Ok(n)
}

/// Calls `visit(i)` for every herald tag `h[i]` that takes an unused partner
/// in both `a` and `b`. Partners are consumed only when both exist.
pub fn for_each_triple(
    h: &[u64],
    a: &[u64],
    b: &[u64],
    window: u64,
    offsets: (i64, i64),
    mut visit: impl FnMut(usize),
) -> Result<()> {
    validate_window(window)?;
    check_sorted(h)?;
    check_sorted(a)?;
    check_sorted(b)?;
    let (oa, ob) = offsets;
    let (mut ja, mut jb) = (0, 0);
    for (i, &th) in h.iter().enumerate() {
        while ja < a.len() && too_early(th, a[ja], oa, window) {
            ja += 1;
        }
        while jb < b.len() && too_early(th, b[jb], ob, window) {
            jb += 1;
        }
        if ja < a.len() && jb < b.len() && within(th, a[ja], oa, window) && within(th, b[jb], ob, window) {
            visit(i);
            ja += 1;
            jb += 1;
        }
    }
    Ok(())
}

pub fn count_triples(
    h: impl AsRef<[u64]>,
    a: impl AsRef<[u64]>,
    b: impl AsRef<[u64]>,
    window: u64,
    offsets: (i64, i64),
) -> Result<u64> {
    let mut n = 0;
    for_each_triple(h.as_ref(), a.as_ref(), b.as_ref(), window, offsets, |_| n += 1)?;
    Ok(n)
}

/// `g2(0) = N1 N123 / (N12 N13)` with first-order Gaussian error propagation
/// treating every count as an independent Poisson variable.
///
/// With no triples the estimate is 0 and the uncertainty is evaluated as if
/// one triple had been seen.
pub fn g2_zero(n1: u64, n12: u64, n13: u64, n123: u64) -> Result<(f64, f64)> {
    if n12 == 0 || n13 == 0 || n1 == 0 {
        return Err(Error::UndefinedStatistic(format!(
            "g2 needs N1, N12, N13 > 0 (got N1={n1}, N12={n12}, N13={n13})"
        )));
    }
    let (n1f, n12f, n13f) = (n1 as f64, n12 as f64, n13 as f64);
    let triples = n123.max(1) as f64;
    let g = n1f * triples / (n12f * n13f);
    let rel = (1.0 / n1f + 1.0 / triples + 1.0 / n12f + 1.0 / n13f).sqrt();
    let g2 = if n123 == 0 { 0.0 } else { g };
    Ok((g2, g * rel))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceReport {
    pub n1: u64,
    pub n12: u64,
    pub n13: u64,
    pub n123: u64,
    pub window_ns: f64,
    pub g2: Option<f64>,
    pub g2_sigma: Option<f64>,
}

impl CoincidenceReport {
    pub fn from_counts(n1: u64, n12: u64, n13: u64, n123: u64, window_ps: u64) -> Self {
        let (g2, g2_sigma) = match g2_zero(n1, n12, n13, n123) {
            Ok((g, s)) => (Some(g), Some(s)),
            Err(_) => (None, None),
        };
        Self {
            n1,
            n12,
            n13,
            n123,
            window_ns: window_ps as f64 / 1e3,
            g2,
            g2_sigma,
        }
    }

    /// Sums the counts of several reports taken with the same window.
    pub fn merged<'a>(reports: impl IntoIterator<Item = &'a CoincidenceReport>, window_ps: u64) -> Self {
        let (mut n1, mut n12, mut n13, mut n123) = (0, 0, 0, 0);
        for r in reports {
            n1 += r.n1;
            n12 += r.n12;
            n13 += r.n13;
            n123 += r.n123;
        }
        Self::from_counts(n1, n12, n13, n123, window_ps)
    }

    /// The statistic, or an undefined-statistic error when `N12 N13 = 0`.
    pub fn g2_checked(&self) -> Result<(f64, f64)> {
        g2_zero(self.n1, self.n12, self.n13, self.n123)
    }

    pub const CSV_HEADER: &'static str = "N1,N12,N13,N123,window_ns,g2,g2_sigma";

    pub fn to_csv_line(&self) -> String {
        self.to_string()
    }

    pub fn parse_csv_line(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 7 {
            return Err(Error::data(format!("expected 7 fields, got {}", f.len())));
        }
        let int = |s: &str| s.parse::<u64>().map_err(|e| Error::data(format!("`{s}`: {e}")));
        let float = |s: &str| s.parse::<f64>().map_err(|e| Error::data(format!("`{s}`: {e}")));
        let opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() || s.eq_ignore_ascii_case("nan") {
                Ok(None)
            } else {
                float(s).map(Some)
            }
        };
        Ok(Self {
            n1: int(f[0])?,
            n12: int(f[1])?,
            n13: int(f[2])?,
            n123: int(f[3])?,
            window_ns: float(f[4])?,
            g2: opt(f[5])?,
            g2_sigma: opt(f[6])?,
        })
    }
}

impl fmt::Display for CoincidenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), |x| format!("{x:e}"));
        write!(
            f,
            "{},{},{},{},{},{},{}",
            self.n1,
            self.n12,
            self.n13,
            self.n123,
            self.window_ns,
            opt(self.g2),
            opt(self.g2_sigma)
        )
    }
}

/// Herald and the two heralded channels used for `g2(0)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MonitorStreams {
    pub herald: TimeTagStream,
    pub a: TimeTagStream,
    pub b: TimeTagStream,
}

/// Per-bin reports plus the whole-run report (which equals the sum of bins).
#[derive(Debug, Clone, PartialEq)]
pub struct RollingG2 {
    pub bins: Vec<CoincidenceReport>,
    pub total: CoincidenceReport,
}

pub fn coincidence_report(s: &MonitorStreams, window: u64, offsets: (i64, i64)) -> Result<CoincidenceReport> {
    let n12 = count_coincidences(&s.herald, &s.a, window, offsets.0)?;
    let n13 = count_coincidences(&s.herald, &s.b, window, offsets.1)?;
    let n123 = count_triples(&s.herald, &s.a, &s.b, window, offsets)?;
    Ok(CoincidenceReport::from_counts(
        s.herald.len() as u64,
        n12,
        n13,
        n123,
        window,
    ))
}

/// One report per consecutive time bin of length `bin_duration` seconds.
///
/// Coincidences are found once over the full streams and attributed to the
/// bin of their herald tag, so per-bin counts add up exactly to the whole-run
/// counts. `span` (seconds) fixes the number of bins; by default it covers the
/// last tag of any stream.
pub fn rolling_g2(
    s: &MonitorStreams,
    window: u64,
    offsets: (i64, i64),
    bin_duration: f64,
    span: Option<f64>,
) -> Result<RollingG2> {
    if !(bin_duration.is_finite() && bin_duration > 0.0) {
        return Err(Error::config("bin_duration", "must be > 0"));
    }
    let bin_ps = (bin_duration * PS_PER_S).round().max(1.0) as u64;
    let last = [&s.herald, &s.a, &s.b]
        .iter()
        .filter_map(|st| st.tags().last().copied())
        .max()
        .unwrap_or(0);
    let nbins = match span {
        Some(sp) => ((sp * PS_PER_S / bin_ps as f64).ceil() as usize).max(1),
        None => (last / bin_ps + 1) as usize,
    };
    let h = s.herald.tags();
    let bin_of = |t: u64| ((t / bin_ps) as usize).min(nbins - 1);
    let mut counts = vec![[0u64; 4]; nbins];
    for &t in h {
        counts[bin_of(t)][0] += 1;
    }
    for_each_pair(h, s.a.tags(), window, offsets.0, |i, _| {
        counts[bin_of(h[i])][1] += 1
    })?;
    for_each_pair(h, s.b.tags(), window, offsets.1, |i, _| {
        counts[bin_of(h[i])][2] += 1
    })?;
    for_each_triple(h, s.a.tags(), s.b.tags(), window, offsets, |i| {
        counts[bin_of(h[i])][3] += 1
    })?;
    let bins: Vec<CoincidenceReport> = counts
        .iter()
        .map(|c| CoincidenceReport::from_counts(c[0], c[1], c[2], c[3], window))
        .collect();
    let total = CoincidenceReport::merged(&bins, window);
    Ok(RollingG2 { bins, total })
}

/// Result of a cross-correlation delay search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayEstimate {
    /// Offset to add to the second stream so it lines up with the first.
    pub offset_ps: i64,
    pub peak_counts: u64,
    /// Mean histogram height outside the peak bin.
    pub background: f64,
    /// Peak excess over background in units of its Poisson spread.
    pub significance: f64,
    pub significant: bool,
}

pub const DEFAULT_DELAY_RANGE_PS: u64 = 100_000;
pub const DEFAULT_DELAY_BIN_PS: u64 = 100;
const SIGNIFICANCE_THRESHOLD: f64 = 6.0;

/// Histograms `t_a - t_b` over `[-search_range, search_range]` and returns the
/// offset of the tallest bin (mean difference within that bin).
pub fn find_delay(
    a: impl AsRef<[u64]>,
    b: impl AsRef<[u64]>,
    search_range: u64,
    bin: u64,
) -> Result<DelayEstimate> {
    let (a, b) = (a.as_ref(), b.as_ref());
    if a.is_empty() || b.is_empty() {
        return Err(Error::data("delay search needs two non-empty streams"));
    }
    if bin == 0 || search_range == 0 {
        return Err(Error::config("find_delay", "range and bin must be > 0"));
    }
    check_sorted(a)?;
    check_sorted(b)?;
    let range = search_range as i128;
    let nbins = (2 * search_range).div_ceil(bin) as usize + 1;
    let mut hist = vec![0u64; nbins];
    let mut sums = vec![0i128; nbins];
    let mut lo = 0;
    for &tb in b {
        let tb = tb as i128;
        while lo < a.len() && (a[lo] as i128) < tb - range {
            lo += 1;
        }
        for &ta in &a[lo..] {
            let d = ta as i128 - tb;
            if d > range {
                break;
            }
            let k = ((d + range) / bin as i128) as usize;
            hist[k] += 1;
            sums[k] += d;
        }
    }
    let (k, &peak) = hist
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.cmp(y.1).then(y.0.cmp(&x.0)))
        .expect("non-empty histogram");
    if peak == 0 {
        return Ok(DelayEstimate {
            offset_ps: 0,
            peak_counts: 0,
            background: 0.0,
            significance: 0.0,
            significant: false,
        });
    }
    let offset = (sums[k] as f64 / peak as f64).round() as i64;
    let rest: u64 = hist.iter().sum::<u64>() - peak;
    let background = rest as f64 / (nbins - 1).max(1) as f64;
    let significance = (peak as f64 - background) / background.max(1.0).sqrt();
    Ok(DelayEstimate {
        offset_ps: offset,
        peak_counts: peak,
        background,
        significance,
        significant: significance >= SIGNIFICANCE_THRESHOLD,
    })
}

/// Antisymmetric table of channel-pair offsets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DelayCalibration {
    offsets: BTreeMap<(u8, u8), i64>,
}

impl DelayCalibration {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records that `offset` added to channel `b` aligns it with channel `a`.
    pub fn set(&mut self, a: u8, b: u8, offset: i64) {
        self.offsets.insert((a, b), offset);
        self.offsets.insert((b, a), -offset);
    }

    pub fn get(&self, a: u8, b: u8) -> i64 {
        if a == b {
            return 0;
        }
        self.offsets.get(&(a, b)).copied().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_pair() {
        assert_eq!(count_coincidences([100u64], [100u64], 2000, 0).unwrap(), 1);
    }

    #[test]
    fn outside_half_window() {
        assert_eq!(
            count_coincidences([0u64, 10_000], [3_000u64], 2_000, 0).unwrap(),
            0
        );
    }

    #[test]
    fn window_edge_is_inclusive() {
        assert_eq!(count_coincidences([0u64], [1_000u64], 2_000, 0).unwrap(), 1);
        assert_eq!(count_coincidences([0u64], [1_001u64], 2_000, 0).unwrap(), 0);
        assert_eq!(count_coincidences([1_000u64], [0u64], 2_000, 0).unwrap(), 1);
    }

    #[test]
    fn offset_aligns_streams() {
        assert_eq!(count_coincidences([0u64], [5_000u64], 100, 0).unwrap(), 0);
        assert_eq!(count_coincidences([0u64], [5_000u64], 100, -5_000).unwrap(), 1);
    }

    #[test]
    fn unsorted_is_data_error() {
        assert!(matches!(
            count_coincidences([5u64, 1], [1u64], 10, 0),
            Err(Error::Data(_))
        ));
        assert!(matches!(
            count_triples([1u64], [1u64], [5u64, 1], 10, (0, 0)),
            Err(Error::Data(_))
        ));
        assert!(count_coincidences([1u64], [1u64], 0, 0).is_err());
    }

    #[test]
    fn each_tag_used_once() {
        assert_eq!(count_coincidences([0u64, 1, 2], [1u64], 10, 0).unwrap(), 1);
        assert_eq!(count_coincidences([1u64], [0u64, 1, 2], 10, 0).unwrap(), 1);
    }

    #[test]
    fn triple_all_equal() {
        assert_eq!(count_triples([7u64], [7u64], [7u64], 1, (0, 0)).unwrap(), 1);
        assert_eq!(count_triples([7u64], [7u64], [], 1, (0, 0)).unwrap(), 0);
    }

    #[test]
    fn g2_arithmetic() {
        let (g, s) = g2_zero(1000, 100, 100, 10).unwrap();
        assert!((g - 1.0).abs() < 1e-15);
        let expected = (1.0f64 / 1000.0 + 1.0 / 10.0 + 2.0 / 100.0).sqrt();
        assert!((s - expected).abs() < 1e-15);
    }

    #[test]
    fn g2_no_triples() {
        let (g, s) = g2_zero(1000, 100, 100, 0).unwrap();
        assert_eq!(g, 0.0);
        // one-count convention: sigma of N1*1/(N12 N13)
        let g1 = 1000.0 / 1e4;
        let expected = g1 * (1.0f64 / 1000.0 + 1.0 + 2.0 / 100.0).sqrt();
        assert!((s - expected).abs() < 1e-15);
    }

    #[test]
    fn g2_undefined() {
        assert!(matches!(g2_zero(10, 0, 5, 0), Err(Error::UndefinedStatistic(_))));
        assert!(matches!(g2_zero(10, 5, 0, 0), Err(Error::UndefinedStatistic(_))));
        let r = CoincidenceReport::from_counts(10, 0, 5, 0, 2000);
        assert_eq!(r.g2, None);
        assert!(r.g2_checked().is_err());
    }

    #[test]
    fn report_csv_round_trip() {
        let r = CoincidenceReport::from_counts(123_456, 789, 801, 3, 2_000);
        let back = CoincidenceReport::parse_csv_line(&r.to_csv_line()).unwrap();
        assert_eq!(back, r);
        let u = CoincidenceReport::from_counts(5, 0, 0, 0, 3_000);
        assert_eq!(CoincidenceReport::parse_csv_line(&u.to_csv_line()).unwrap(), u);
    }

    fn periodic_streams(periods: u64, period: u64) -> MonitorStreams {
        let mut h = Vec::new();
        let mut a = Vec::new();
        let mut b = Vec::new();
        for p in 0..periods {
            let base = p * period;
            for k in 0..50u64 {
                let t = base + 1_000 + k * 1_000_000;
                h.push(t);
                if k % 2 == 0 {
                    a.push(t + 100);
                }
                if k % 3 == 0 {
                    b.push(t + 200);
                }
                if k % 10 == 0 {
                    // shared accidental making a triple
                    a.push(t + 300);
                }
            }
        }
        a.sort_unstable();
        MonitorStreams {
            herald: TimeTagStream::new(1, h).unwrap(),
            a: TimeTagStream::new(2, a).unwrap(),
            b: TimeTagStream::new(3, b).unwrap(),
        }
    }

    #[test]
    fn identical_bins_give_identical_reports() {
        let period = 1_000_000_000_000; // 1 s
        let s = periodic_streams(3, period);
        let r = rolling_g2(&s, 2_000, (0, 0), 1.0, Some(3.0)).unwrap();
        assert_eq!(r.bins.len(), 3);
        assert_eq!(r.bins[0], r.bins[1]);
        assert_eq!(r.bins[1], r.bins[2]);
        let whole = coincidence_report(&s, 2_000, (0, 0)).unwrap();
        assert_eq!(r.total, whole);
        assert!(r.bins[0].n123 > 0);
    }

    #[test]
    fn bad_bin_duration() {
        let s = periodic_streams(1, 1);
        assert!(rolling_g2(&s, 2_000, (0, 0), 0.0, None).is_err());
    }

    #[test]
    fn delay_of_shifted_copy() {
        let a: Vec<u64> = (0..2000u64).map(|i| i * 77_777 + (i * i) % 5_000).collect();
        let b: Vec<u64> = a.iter().map(|t| t + 5_000).collect();
        let est = find_delay(&a, &b, DEFAULT_DELAY_RANGE_PS, DEFAULT_DELAY_BIN_PS).unwrap();
        assert_eq!(est.offset_ps, -5_000);
        assert!(est.significant);
        let same = find_delay(&a, &a, DEFAULT_DELAY_RANGE_PS, DEFAULT_DELAY_BIN_PS).unwrap();
        assert_eq!(same.offset_ps, 0);
        assert!(find_delay(&a, Vec::<u64>::new(), 10, 1).is_err());
    }

    #[test]
    fn calibration_is_antisymmetric() {
        let mut c = DelayCalibration::new();
        c.set(1, 4, -1234);
        assert_eq!(c.get(1, 4), -1234);
        assert_eq!(c.get(4, 1), 1234);
        assert_eq!(c.get(2, 2), 0);
    }
}
