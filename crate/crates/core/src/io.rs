//! Frame, field and object-map files.
//!
//! Grids are CSV with one row per line and a leading `# key=value ...`
//! header. Integer frames carry `width height pixel_size_m integration_s
//! channel`; real grids carry whatever keys the writer supplies. Images are
//! plain-text PGM (P2).

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Display;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::forward::ObjectMap;
use crate::reconstruct::ComplexField;
use crate::scan::{FrameChannel, HologramFrame};

/// Parsed grid file: header keys plus the value rows.
struct Grid<T> {
    header: BTreeMap<String, String>,
    values: Array2<T>,
}

fn write_grid<T: Display>(path: &Path, header: &[(&str, String)], grid: &Array2<T>) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    let head: Vec<String> = header.iter().map(|(k, v)| format!("{k}={v}")).collect();
    writeln!(w, "# {}", head.join(" ")).map_err(io)?;
    for row in grid.rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

fn read_grid<T>(path: &Path) -> Result<Grid<T>>
where
    T: FromStr + Clone,
    T::Err: Display,
{
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut header = BTreeMap::new();
    let mut rows: Vec<Vec<T>> = Vec::new();
    let mut offset = 0u64;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let here = offset;
        offset += line.len() as u64 + 1;
        let bad = |msg: String| Error::Parse {
            path: path.to_owned(),
            offset: here,
            msg,
        };
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(h) = t.strip_prefix('#') {
            for item in h.split_whitespace() {
                let (k, v) = item
                    .split_once('=')
                    .ok_or_else(|| bad(format!("header item `{item}` is not key=value")))?;
                header.insert(k.to_owned(), v.to_owned());
            }
            continue;
        }
        let row = t
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<T>()
                    .map_err(|e| bad(format!("value `{}`: {e}", s.trim())))
            })
            .collect::<Result<Vec<T>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(bad(format!(
                    "row has {} values, expected {}",
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    let h = rows.len();
    let w = rows.first().map_or(0, |r| r.len());
    if h == 0 || w == 0 {
        return Err(Error::Parse {
            path: path.to_owned(),
            offset,
            msg: "no data rows".into(),
        });
    }
    let values =
        Array2::from_shape_vec((h, w), rows.into_iter().flatten().collect()).expect("rows have equal length");
    Ok(Grid { header, values })
}

fn header_value<T: FromStr>(path: &Path, header: &BTreeMap<String, String>, key: &str) -> Result<T> {
    let raw = header.get(key).ok_or_else(|| Error::Parse {
        path: path.to_owned(),
        offset: 0,
        msg: format!("header lacks `{key}`"),
    })?;
    raw.parse().map_err(|_| Error::Parse {
        path: path.to_owned(),
        offset: 0,
        msg: format!("header `{key}={raw}` is malformed"),
    })
}

pub fn write_frame_csv(path: &Path, frame: &HologramFrame) -> Result<()> {
    write_grid(
        path,
        &[
            ("width", frame.width().to_string()),
            ("height", frame.height().to_string()),
            ("pixel_size_m", frame.pixel_size.to_string()),
            ("integration_s", frame.integration_time.to_string()),
            ("channel", frame.channel.label().to_owned()),
        ],
        &frame.counts,
    )
}

pub fn read_frame_csv(path: &Path) -> Result<HologramFrame> {
    let g = read_grid::<u64>(path)?;
    let width: usize = header_value(path, &g.header, "width")?;
    let height: usize = header_value(path, &g.header, "height")?;
    if (height, width) != g.values.dim() {
        return Err(Error::Parse {
            path: path.to_owned(),
            offset: 0,
            msg: format!(
                "header says {width}x{height} but the data are {}x{}",
                g.values.ncols(),
                g.values.nrows()
            ),
        });
    }
    let label: String = header_value(path, &g.header, "channel")?;
    let channel = FrameChannel::from_label(&label).ok_or_else(|| Error::Parse {
        path: path.to_owned(),
        offset: 0,
        msg: format!("unknown channel `{label}`"),
    })?;
    Ok(HologramFrame {
        counts: g.values,
        pixel_size: header_value(path, &g.header, "pixel_size_m")?,
        integration_time: header_value(path, &g.header, "integration_s")?,
        channel,
    })
}

pub fn write_real_csv(path: &Path, header: &[(&str, String)], grid: &Array2<f64>) -> Result<()> {
    write_grid(path, header, grid)
}

/// Reads a real grid and its header keys.
pub fn read_real_csv(path: &Path) -> Result<(BTreeMap<String, String>, Array2<f64>)> {
    let g = read_grid::<f64>(path)?;
    Ok((g.header, g.values))
}

/// Writes a P2 image with the given maximum gray value.
pub fn write_pgm(path: &Path, gray: &Array2<u32>, maxval: u32) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "P2\n{} {}\n{}", gray.ncols(), gray.nrows(), maxval).map_err(io)?;
    for row in gray.rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(" ")).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Gray levels for a count frame: raw counts when they fit in 16 bits,
/// otherwise scaled to 0..=65535.
pub fn frame_gray(counts: &Array2<u64>) -> (Array2<u32>, u32) {
    let max = counts.iter().copied().max().unwrap_or(0);
    if max <= 65535 {
        (counts.mapv(|c| c as u32), max.max(1) as u32)
    } else {
        let s = 65535.0 / max as f64;
        (counts.mapv(|c| (c as f64 * s).round() as u32), 65535)
    }
}

/// Linear 0..=255 scale of a nonnegative map.
pub fn amplitude_gray(a: &Array2<f64>) -> Array2<u32> {
    let max = a.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return Array2::zeros(a.dim());
    }
    a.mapv(|v| (v.max(0.0) / max * 255.0).round() as u32)
}

/// Maps `(-π, π]` linearly onto 0..=255.
pub fn phase_gray(p: &Array2<f64>) -> Array2<u32> {
    p.mapv(|v| (((v + PI) / (2.0 * PI)).clamp(0.0, 1.0) * 255.0).round() as u32)
}

pub fn write_frame_pgm(path: &Path, frame: &HologramFrame) -> Result<()> {
    let (gray, maxval) = frame_gray(&frame.counts);
    write_pgm(path, &gray, maxval)
}

/// Writes `<dir>/<name>_amp.csv`, `_phase.csv`, `_amp.pgm` and `_phase.pgm`.
/// Returns the paths written.
pub fn write_field(dir: &Path, name: &str, field: &ComplexField) -> Result<Vec<PathBuf>> {
    let amp = field.amplitude();
    let phase = field.phase();
    let paths: Vec<PathBuf> = ["_amp.csv", "_phase.csv", "_amp.pgm", "_phase.pgm"]
        .iter()
        .map(|s| dir.join(format!("{name}{s}")))
        .collect();
    write_real_csv(&paths[0], &[("quantity", "amplitude".into())], &amp)?;
    write_real_csv(&paths[1], &[("quantity", "phase_rad".into())], &phase)?;
    write_pgm(&paths[2], &amplitude_gray(&amp), 255)?;
    write_pgm(&paths[3], &phase_gray(&phase), 255)?;
    Ok(paths)
}

fn object_paths(stem: &Path) -> (PathBuf, PathBuf) {
    let s = stem.as_os_str().to_string_lossy();
    (
        PathBuf::from(format!("{s}_amp.csv")),
        PathBuf::from(format!("{s}_phase.csv")),
    )
}

/// Writes `<stem>_amp.csv` and `<stem>_phase.csv`.
pub fn write_object_map(stem: &Path, obj: &ObjectMap) -> Result<()> {
    let (a, p) = object_paths(stem);
    let head = [("pitch_m", obj.pitch().to_string())];
    write_real_csv(&a, &head, &obj.amplitude())?;
    write_real_csv(&p, &head, &obj.phase())
}

pub fn read_object_map(stem: &Path) -> Result<ObjectMap> {
    let (a, p) = object_paths(stem);
    let (ha, amp) = read_real_csv(&a)?;
    let (_, phase) = read_real_csv(&p)?;
    let pitch: f64 = header_value(&a, &ha, "pitch_m")?;
    ObjectMap::from_polar(&amp, &phase, pitch)
}
