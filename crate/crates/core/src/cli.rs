//! Command-line driver.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 data,
//! parse or bounds error, 4 detection, statistic or fit error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use crate::coincidence::{rolling_g2, CoincidenceReport, MonitorStreams, RollingG2};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::io;
use crate::metrics::{column_profile, fit_fringe, fringe_snr, snr_total, visibility, SnrChannel, SnrInputs};
use crate::monitor::{
    monitor_run_streams, MonitorLight, CH_HERALD, CH_IMAGING_A, CH_IMAGING_B, CH_MONITOR_A, CH_MONITOR_B,
};
use crate::reconstruct::{fft2, reconstruct_hologram, PhaseMethod, ReconstructOptions};
use crate::scan::{
    acquire, acquire_line, scan_timeline, AcquisitionMode, FrameChannel, HologramFrame, Setup,
};
use crate::timetag::{self, TimeTagStream};

#[derive(Debug, Parser)]
#[command(
    name = "qholo",
    version,
    about = "Heralded single-photon hologram simulator and analyser"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate time tags and hologram frames from a config file.
    Simulate(RunArgs),
    /// Rolling and whole-run g2(0) from time-tag files.
    G2(G2Args),
    /// Reconstruct amplitude and phase from a hologram frame.
    Reconstruct(ReconstructArgs),
    /// Visibility, SNR and fringe fit of frames or lines.
    Metrics(MetricsArgs),
    /// Simulate, then run g2, reconstruction and metrics on the result.
    Pipeline(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the master seed of the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the output directory of the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct G2Args {
    /// Binary or CSV time-tag files; channels are merged across files.
    #[arg(required = true)]
    pub tags: Vec<PathBuf>,
    #[arg(long, default_value_t = 2.0)]
    pub window_ns: f64,
    /// Seconds per rolling bin.
    #[arg(long, default_value_t = 60.0)]
    pub bin_s: f64,
    #[arg(long, default_value_t = CH_HERALD)]
    pub herald: u8,
    #[arg(long, default_value_t = CH_MONITOR_A)]
    pub a: u8,
    #[arg(long, default_value_t = CH_MONITOR_B)]
    pub b: u8,
    /// Report file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Conjugate,
    Recenter,
    Calibration,
}

impl From<MethodArg> for PhaseMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Conjugate => PhaseMethod::ConjugateMultiply,
            MethodArg::Recenter => PhaseMethod::Recenter,
            MethodArg::Calibration => PhaseMethod::CalibrationFrame,
        }
    }
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Frame CSV.
    pub frame: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Conjugate)]
    pub method: MethodArg,
    /// Object-free frame for `--method calibration`.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    #[arg(long)]
    pub mask_radius: Option<i64>,
    #[arg(long, default_value_t = 0)]
    pub reference_half_width: i64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Frame or line CSV files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Report CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Herald singles per second, needed for the heralded total SNR.
    #[arg(long)]
    pub herald_rate: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub herald_dark_rate: f64,
    #[arg(long, default_value_t = 460.0)]
    pub dark_rate: f64,
    #[arg(long, default_value_t = 2.0)]
    pub window_ns: f64,
    #[arg(long)]
    pub include_dark_dark: bool,
    /// Rows summed around the frame centre for the fringe profile.
    #[arg(long, default_value_t = 8)]
    pub band_rows: usize,
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Errors are printed to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate(a) => {
            let (cfg, out) = load_run(&a)?;
            let files = simulate(&cfg, &out)?;
            write_manifest(&cfg, &out, &files)
        }
        Command::G2(a) => cmd_g2(&a),
        Command::Reconstruct(a) => cmd_reconstruct(&a),
        Command::Metrics(a) => cmd_metrics(&a),
        Command::Pipeline(a) => {
            let (cfg, out) = load_run(&a)?;
            let files = pipeline(&cfg, &out)?;
            write_manifest(&cfg, &out, &files)
        }
    }
}

fn load_run(a: &RunArgs) -> Result<(PipelineConfig, PathBuf)> {
    let mut cfg = PipelineConfig::load(&a.config)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let out = a
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    Ok((cfg, out))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn channel_label(ch: u8) -> &'static str {
    match ch {
        CH_HERALD => "herald",
        CH_MONITOR_A => "monitor_a",
        CH_MONITOR_B => "monitor_b",
        CH_IMAGING_A => "imaging_a",
        CH_IMAGING_B => "imaging_b",
        _ => "unknown",
    }
}

/// Writes `<stem>.bin` and the `<stem>.txt` sidecar with duration and
/// channel labels.
fn write_tags(out: &Path, stem: &str, streams: &[&TimeTagStream], duration: f64) -> Result<Vec<PathBuf>> {
    let bin = out.join(format!("{stem}.bin"));
    timetag::write_binary(&bin, streams)?;
    let mut side = format!("duration_s={duration}\n");
    for s in streams {
        let _ = writeln!(
            side,
            "channel.{}={} count={}",
            s.channel(),
            channel_label(s.channel()),
            s.len()
        );
    }
    let txt = out.join(format!("{stem}.txt"));
    write_text(&txt, &side)?;
    Ok(vec![bin, txt])
}

/// Duration recorded in a tag file's sidecar, if any.
fn sidecar_duration(tag_file: &Path) -> Option<f64> {
    let text = fs::read_to_string(tag_file.with_extension("txt")).ok()?;
    text.lines()
        .find_map(|l| l.strip_prefix("duration_s="))
        .and_then(|v| v.trim().parse().ok())
}

fn write_frame(out: &Path, frame: &HologramFrame, stem: &str) -> Result<Vec<PathBuf>> {
    let csv = out.join(format!("{stem}.csv"));
    let pgm = out.join(format!("{stem}.pgm"));
    io::write_frame_csv(&csv, frame)?;
    io::write_frame_pgm(&pgm, frame)?;
    Ok(vec![csv, pgm])
}

/// Runs the acquisition described by `cfg` and writes tags and frames.
pub fn simulate(cfg: &PipelineConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let object = cfg.object_map()?;
    let beam = cfg.beam_profile();
    let tilt = cfg.tilt_config();
    let source = cfg.source_config(0.0)?;
    let scan = cfg.scan_config();
    let rates = cfg.rate_calibration(&object)?;
    let setup = Setup {
        object: &object,
        beam: &beam,
        tilt: &tilt,
        source: &source,
        detectors: &cfg.detectors,
        rates: rates.as_ref(),
    };
    let acq = acquire(&setup, &scan)?;
    let mut files = Vec::new();
    for frame in [&acq.heralded, &acq.nonheralded, &acq.triples] {
        files.extend(write_frame(out, frame, frame.channel.label())?);
    }
    match scan.mode {
        AcquisitionMode::FullEvent => {
            let tl = scan_timeline(&setup, &scan)?;
            let refs: Vec<&TimeTagStream> = tl.streams.iter().collect();
            files.extend(write_tags(out, "tags", &refs, tl.duration)?);
        }
        AcquisitionMode::FastPoisson => {
            let light = MonitorLight::Heralded(source);
            let s = monitor_run_streams(&light, &cfg.detectors, cfg.source.monitor_bin)?;
            files.extend(write_tags(
                out,
                "tags",
                &[&s.herald, &s.a, &s.b],
                source.duration,
            )?);
        }
    }
    if let Some(c) = cfg.classical_config() {
        let s = monitor_run_streams(
            &MonitorLight::Classical(c),
            &cfg.detectors,
            cfg.source.monitor_bin,
        )?;
        files.extend(write_tags(
            out,
            "classical_tags",
            &[&s.herald, &s.a, &s.b],
            c.duration,
        )?);
    }
    Ok(files)
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

/// Writes `config.toml` (canonical form) and `manifest.txt` listing the seed,
/// the config hash and a hash of every artifact.
pub fn write_manifest(cfg: &PipelineConfig, out: &Path, files: &[PathBuf]) -> Result<()> {
    write_text(&out.join("config.toml"), &cfg.canonical())?;
    let mut m = String::new();
    let _ = writeln!(m, "seed={}", cfg.seed);
    let _ = writeln!(m, "config_sha256={}", cfg.hash());
    let _ = writeln!(m, "version={}", env!("CARGO_PKG_VERSION"));
    for f in files {
        let name = f.strip_prefix(out).unwrap_or(f).display().to_string();
        let _ = writeln!(m, "file {} {}", name, sha256_file(f)?);
    }
    write_text(&out.join("manifest.txt"), &m)
}

fn load_tag_files(paths: &[PathBuf]) -> Result<BTreeMap<u8, TimeTagStream>> {
    let mut all: BTreeMap<u8, TimeTagStream> = BTreeMap::new();
    for p in paths {
        for (ch, s) in timetag::read_any(p)? {
            if all.insert(ch, s).is_some() {
                return Err(Error::data(format!("channel {ch} appears in more than one file")));
            }
        }
    }
    Ok(all)
}

fn report_csv(run: &RollingG2, bin_s: f64) -> String {
    let mut out = format!("bin,start_s,{}\n", CoincidenceReport::CSV_HEADER);
    for (k, b) in run.bins.iter().enumerate() {
        let _ = writeln!(out, "{k},{},{}", k as f64 * bin_s, b.to_csv_line());
    }
    let _ = writeln!(out, "total,0,{}", run.total.to_csv_line());
    out
}

fn cmd_g2(a: &G2Args) -> Result<()> {
    if !(a.window_ns.is_finite() && a.window_ns > 0.0) {
        return Err(Error::config("window_ns", "must be > 0"));
    }
    let all = load_tag_files(&a.tags)?;
    let get = |ch: u8| all.get(&ch).cloned().unwrap_or_else(|| TimeTagStream::empty(ch));
    let streams = MonitorStreams {
        herald: get(a.herald),
        a: get(a.a),
        b: get(a.b),
    };
    let span = a
        .tags
        .iter()
        .filter_map(|p| sidecar_duration(p))
        .fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.max(d))));
    let window_ps = (a.window_ns * 1e3).round() as u64;
    let run = rolling_g2(&streams, window_ps, (0, 0), a.bin_s, span)?;
    let text = report_csv(&run, a.bin_s);
    match &a.out {
        Some(p) => write_text(p, &text)?,
        None => print!("{text}"),
    }
    run.total.g2_checked().map(|_| ())
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "frame".into(), |s| s.to_string_lossy().into_owned())
}

/// Reconstructs `frame` and writes raw and corrected fields plus the
/// spectrum magnitude under `<out>/<name>_*`.
pub fn reconstruct_frame(
    frame: &HologramFrame,
    calibration: Option<&HologramFrame>,
    opts: &ReconstructOptions,
    out: &Path,
    name: &str,
) -> Result<(crate::reconstruct::Reconstruction, Vec<PathBuf>)> {
    let cal = calibration.map(|c| c.as_f64());
    let data = frame.as_f64();
    let rec = reconstruct_hologram(&data, opts, cal.as_ref())?;
    let mut files = io::write_field(out, &format!("{name}_raw"), &rec.raw)?;
    files.extend(io::write_field(
        out,
        &format!("{name}_corrected"),
        &rec.corrected,
    )?);
    let mag = fft2(&data)?.centered_magnitude().mapv(|m| (1.0 + m).ln());
    let spec = out.join(format!("{name}_spectrum.pgm"));
    io::write_pgm(&spec, &io::amplitude_gray(&mag), 255)?;
    files.push(spec);
    Ok((rec, files))
}

fn cmd_reconstruct(a: &ReconstructArgs) -> Result<()> {
    let frame = io::read_frame_csv(&a.frame)?;
    let cal = a.calibration.as_deref().map(io::read_frame_csv).transpose()?;
    let opts = ReconstructOptions {
        mask_radius: a.mask_radius,
        reference_half_width: a.reference_half_width,
        method: a.method.into(),
        ..ReconstructOptions::default()
    };
    fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let (rec, files) = reconstruct_frame(&frame, cal.as_ref(), &opts, &a.out, &stem_of(&a.frame))?;
    println!(
        "first order at ({}, {}), mask radius {}, method {}",
        rec.order.0,
        rec.order.1,
        rec.mask.radius,
        opts.method.label()
    );
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

/// Options for a metrics row.
#[derive(Debug, Clone, Copy)]
pub struct MetricsOptions {
    pub herald_rate: Option<f64>,
    pub herald_dark_rate: f64,
    pub dark_rate: f64,
    pub window_s: f64,
    pub include_dark_dark: bool,
    pub band_rows: usize,
}

/// One line of the metrics report. Missing values print empty.
#[derive(Debug, Clone, Default)]
pub struct MetricsRow {
    pub source: String,
    pub channel: String,
    pub kind: &'static str,
    pub visibility: Option<f64>,
    pub snr_total: Option<f64>,
    pub snr_fringe: Option<f64>,
    pub fit: Option<crate::metrics::FitParams>,
    pub residual_rms: Option<f64>,
    pub flags: Vec<&'static str>,
}

pub const METRICS_HEADER: &str =
    "source,channel,kind,visibility,snr_total,snr_fringe,y0,amplitude,x0,width,modulation,omega,phi,residual_rms,flags";

impl MetricsRow {
    pub fn csv(&self) -> String {
        let f = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
        let p = self.fit;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.source,
            self.channel,
            self.kind,
            f(self.visibility),
            f(self.snr_total),
            f(self.snr_fringe),
            f(p.map(|p| p.y0)),
            f(p.map(|p| p.amplitude)),
            f(p.map(|p| p.x0)),
            f(p.map(|p| p.width)),
            f(p.map(|p| p.modulation)),
            f(p.map(|p| p.omega)),
            f(p.map(|p| p.phi)),
            f(self.residual_rms),
            self.flags.join(";")
        )
    }

    pub fn text(&self) -> String {
        let f = |v: Option<f64>| v.map_or_else(|| "n/a".into(), |x| format!("{x:.4}"));
        let mut s = format!(
            "{} [{} {}]: V={} SNR={} SNR_f={}",
            self.source,
            self.channel,
            self.kind,
            f(self.visibility),
            f(self.snr_total),
            f(self.snr_fringe)
        );
        if !self.flags.is_empty() {
            let _ = write!(s, " flags={}", self.flags.join(";"));
        }
        s
    }
}

/// Soft errors become flags; anything else propagates.
fn soft<T>(r: Result<T>, flags: &mut Vec<&'static str>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::InsufficientFringe(_)) => {
            flags.push("insufficient_fringe");
            Ok(None)
        }
        Err(Error::UndefinedStatistic(_)) => {
            flags.push("undefined_statistic");
            Ok(None)
        }
        Err(Error::Fit { .. }) => {
            flags.push("fit_not_converged");
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Visibility, total SNR and fringe fit for a frame (on a band of rows
/// around the centre) or a line (a frame of height 1).
pub fn metrics_row(source: &str, frame: &HologramFrame, opts: &MetricsOptions) -> Result<MetricsRow> {
    let mut row = MetricsRow {
        source: source.to_owned(),
        channel: frame.channel.label().to_owned(),
        kind: if frame.height() == 1 { "line" } else { "frame" },
        ..MetricsRow::default()
    };
    let profile = if frame.height() == 1 {
        frame.row(0)?
    } else {
        let band = opts.band_rows.clamp(1, frame.height());
        let start = (frame.height() - band) / 2;
        column_profile(frame, start..start + band)?
    };
    let mut flags = Vec::new();
    row.visibility = soft(visibility(&profile), &mut flags)?.map(|v| v.value);
    row.snr_total = match frame.channel {
        FrameChannel::Heralded => match opts.herald_rate {
            Some(rh) => {
                let inputs = SnrInputs::heralded_frame(
                    frame,
                    rh,
                    opts.herald_dark_rate,
                    opts.dark_rate,
                    opts.window_s,
                );
                soft(
                    snr_total(&inputs, SnrChannel::Heralded, opts.include_dark_dark),
                    &mut flags,
                )?
            }
            None => {
                flags.push("no_herald_rate");
                None
            }
        },
        FrameChannel::Nonheralded => soft(
            snr_total(
                &SnrInputs::nonheralded_frame(frame),
                SnrChannel::Nonheralded,
                false,
            ),
            &mut flags,
        )?,
        FrameChannel::Triples => None,
    };
    if let Some(fit) = soft(fit_fringe(&profile), &mut flags)? {
        row.fit = Some(fit.params);
        row.residual_rms = Some(fit.residual_rms);
        if fit.degenerate {
            flags.push("degenerate_fit");
        }
        if let Some(s) = soft(fringe_snr(&fit, profile.len()), &mut flags)? {
            row.snr_fringe = Some(s.snr);
            if s.capped {
                flags.push("snr_capped");
            }
        }
    }
    row.flags = flags;
    Ok(row)
}

fn cmd_metrics(a: &MetricsArgs) -> Result<()> {
    let opts = MetricsOptions {
        herald_rate: a.herald_rate,
        herald_dark_rate: a.herald_dark_rate,
        dark_rate: a.dark_rate,
        window_s: a.window_ns * 1e-9,
        include_dark_dark: a.include_dark_dark,
        band_rows: a.band_rows,
    };
    let mut csv = format!("{METRICS_HEADER}\n");
    let mut text = String::new();
    for p in &a.inputs {
        let frame = io::read_frame_csv(p)?;
        let row = metrics_row(&p.display().to_string(), &frame, &opts)?;
        let _ = writeln!(csv, "{}", row.csv());
        let _ = writeln!(text, "{}", row.text());
    }
    match &a.out {
        Some(p) => {
            write_text(p, &csv)?;
            print!("{text}");
        }
        None => print!("{csv}"),
    }
    Ok(())
}

/// Simulation followed by g2, reconstruction, line scans and metrics.
pub fn pipeline(cfg: &PipelineConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let mut files = simulate(cfg, out)?;
    let mut summary = String::new();
    let scan = cfg.scan_config();

    let tags = timetag::read_binary(&out.join("tags.bin"))?;
    let get = |ch: u8| tags.get(&ch).cloned().unwrap_or_else(|| TimeTagStream::empty(ch));
    let streams = MonitorStreams {
        herald: get(CH_HERALD),
        a: get(CH_MONITOR_A),
        b: get(CH_MONITOR_B),
    };
    let span = sidecar_duration(&out.join("tags.bin"));
    let run = rolling_g2(&streams, scan.window_ps(), (0, 0), cfg.source.monitor_bin, span)?;
    let g2_path = out.join("g2.csv");
    write_text(&g2_path, &report_csv(&run, cfg.source.monitor_bin))?;
    files.push(g2_path);
    let _ = writeln!(summary, "g2(0) whole run: {}", run.total);

    let heralded = io::read_frame_csv(&out.join("heralded.csv"))?;
    let nonheralded = io::read_frame_csv(&out.join("nonheralded.csv"))?;
    let opts = cfg.reconstruct_options();
    for frame in [&heralded, &nonheralded] {
        let name = frame.channel.label();
        match reconstruct_frame(frame, None, &opts, out, name) {
            Ok((rec, f)) => {
                files.extend(f);
                let _ = writeln!(
                    summary,
                    "{name}: first order at ({}, {}), mask radius {}",
                    rec.order.0, rec.order.1, rec.mask.radius
                );
            }
            Err(e @ (Error::Detection(_) | Error::Config { .. })) => {
                let _ = writeln!(summary, "{name}: reconstruction skipped: {e}");
            }
            Err(e) => return Err(e),
        }
    }

    let object = cfg.object_map()?;
    let beam = cfg.beam_profile();
    let tilt = cfg.tilt_config();
    let source = cfg.source_config(0.0)?;
    let rates = cfg.rate_calibration(&object)?;
    let setup = Setup {
        object: &object,
        beam: &beam,
        tilt: &tilt,
        source: &source,
        detectors: &cfg.detectors,
        rates: rates.as_ref(),
    };
    let line = acquire_line(&setup, &scan, cfg.line_row(), cfg.metrics.line_oversample)?;
    files.extend(write_frame(out, &line.heralded, "heralded_line")?);
    files.extend(write_frame(out, &line.nonheralded, "nonheralded_line")?);

    let mopts = MetricsOptions {
        herald_rate: Some(
            source.pair_rate * cfg.detectors.herald.efficiency + cfg.detectors.herald.dark_rate,
        ),
        herald_dark_rate: cfg.detectors.herald.dark_rate,
        dark_rate: cfg.detectors.imaging_a.dark_rate,
        window_s: scan.window_s(),
        include_dark_dark: cfg.metrics.include_dark_dark,
        band_rows: cfg.metrics.band_rows,
    };
    let mut csv = format!("{METRICS_HEADER}\n");
    for (name, frame) in [
        ("heralded", &heralded),
        ("nonheralded", &nonheralded),
        ("heralded_line", &line.heralded),
        ("nonheralded_line", &line.nonheralded),
    ] {
        let row = metrics_row(name, frame, &mopts)?;
        let _ = writeln!(csv, "{}", row.csv());
        let _ = writeln!(summary, "{}", row.text());
    }
    let mpath = out.join("metrics.csv");
    write_text(&mpath, &csv)?;
    files.push(mpath);
    let spath = out.join("summary.txt");
    write_text(&spath, &summary)?;
    files.push(spath);
    print!("{summary}");
    Ok(files)
}
