//! Command-line front end: `phantom`, `segment` and `eval`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::eval::{eval_csv, summarize_predictions, summary_line, Prediction};
use crate::filters::FilterParams;
use crate::geometry::ResampleParams;
use crate::image::{load_frame, load_mask, save_frame, Contour, Frame, Mask, Point};
use crate::phantom::{generate, save_phantom, Preset, PhantomSpec};
use crate::region_grow::{Seed, DEFAULT_MAX_FRACTION};
use crate::snake::SnakeParams;
use crate::tracker::{contour_csv, record_csv, trace_csv, track_video_with, TrackerParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ijvtrack", version, about = "Track a dark vessel lumen through an ultrasound video")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Track the lumen through a directory of PGM frames.
    Segment(SegmentArgs),
    /// Generate a synthetic video with ground truth.
    Phantom(PhantomArgs),
    /// Score a segmentation against ground truth.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// Directory of frames (`*.pgm`, processed in file-name order), or a
    /// phantom directory containing `frames/`.
    #[arg(long)]
    pub input: PathBuf,
    /// Seed pixel inside the lumen of the first frame.
    #[arg(long, value_name = "X,Y", value_parser = parse_seed)]
    pub seed: Seed,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write frames with the contour burned in at 255.
    #[arg(long)]
    pub overlays: bool,
    /// Also write per-iteration snake traces.
    #[arg(long)]
    pub trace: bool,
    #[command(flatten)]
    pub filter: FilterArgs,
    #[command(flatten)]
    pub snake: SnakeArgs,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long, default_value_t = FilterParams::default().median_window)]
    pub median_window: usize,
    #[arg(long, default_value_t = FilterParams::default().gaussian_sigma)]
    pub gaussian_sigma: f64,
    #[arg(long, default_value_t = FilterParams::default().gaussian_radius)]
    pub gaussian_radius: usize,
    /// Region-growing leak guard, as a fraction of the frame area.
    #[arg(long, default_value_t = DEFAULT_MAX_FRACTION)]
    pub max_fraction: f64,
}

#[derive(Debug, Args)]
pub struct SnakeArgs {
    #[arg(long, default_value_t = SnakeParams::default().alpha)]
    pub alpha: f64,
    #[arg(long, default_value_t = SnakeParams::default().beta)]
    pub beta: f64,
    #[arg(long, default_value_t = SnakeParams::default().gamma)]
    pub gamma: f64,
    #[arg(long, default_value_t = SnakeParams::default().kappa_base)]
    pub kappa_base: f64,
    #[arg(long, default_value_t = SnakeParams::default().kappa_cap)]
    pub kappa_cap: f64,
    #[arg(long, default_value_t = SnakeParams::default().lumen_reference)]
    pub lumen_reference: f64,
    #[arg(long, default_value_t = SnakeParams::default().w_scale)]
    pub w_scale: f64,
    #[arg(long, default_value_t = SnakeParams::default().max_iterations)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = SnakeParams::default().tol)]
    pub tol: f64,
    /// Contour points after resampling.
    #[arg(long, default_value_t = ResampleParams::default().n_points)]
    pub n_points: usize,
    #[arg(long, default_value_t = ResampleParams::default().dense_samples)]
    pub dense_samples: usize,
}

#[derive(Debug, Args)]
pub struct PhantomArgs {
    /// distended or collapsing.
    #[arg(long, default_value_t = PhantomSpec::default().preset)]
    pub preset: Preset,
    #[arg(long, default_value_t = PhantomSpec::default().n_frames)]
    pub frames: usize,
    #[arg(long, value_name = "WxH", default_value_t = default_size())]
    pub size: Size,
    #[arg(long, default_value_t = PhantomSpec::default().rng_seed)]
    pub rng_seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = PhantomSpec::default().fps)]
    pub fps: f64,
    #[arg(long, default_value_t = PhantomSpec::default().lumen_intensity)]
    pub lumen_intensity: f64,
    #[arg(long, default_value_t = PhantomSpec::default().background_intensity)]
    pub background_intensity: f64,
    #[arg(long, default_value_t = PhantomSpec::default().speckle_strength)]
    pub speckle_strength: f64,
    /// Ellipse center; defaults to the frame center.
    #[arg(long, value_name = "X,Y", value_parser = parse_point)]
    pub center: Option<Point>,
    #[arg(long, value_name = "A,B", default_value_t = default_semi_axes())]
    pub semi_axes: Pair,
    #[arg(long, default_value_t = PhantomSpec::default().pulse_amplitude)]
    pub pulse_amplitude: f64,
    #[arg(long, default_value_t = PhantomSpec::default().pulse_hz)]
    pub pulse_hz: f64,
    #[arg(long, default_value_t = PhantomSpec::default().collapse_depth)]
    pub collapse_depth: f64,
    #[arg(long, default_value_t = PhantomSpec::default().collapse_hz)]
    pub collapse_hz: f64,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Output directory of `segment`.
    #[arg(long)]
    pub pred: PathBuf,
    /// Phantom directory (or its `truth/` subdirectory).
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_pair<T: std::str::FromStr>(s: &str, sep: char) -> std::result::Result<(T, T), String> {
    let (a, b) = s
        .split_once(sep)
        .ok_or_else(|| format!("expected two values separated by '{sep}', got {s:?}"))?;
    let p = |v: &str| v.trim().parse::<T>().map_err(|_| format!("cannot parse {v:?} in {s:?}"));
    Ok((p(a)?, p(b)?))
}

/// `WxH` frame size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Size(pub usize, pub usize);

impl fmt::Display for Size {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.0, self.1)
    }
}

impl FromStr for Size {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        parse_pair(s, 'x').map(|(w, h)| Size(w, h))
    }
}

/// `A,B` pair of reals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pair(pub f64, pub f64);

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.0, self.1)
    }
}

impl FromStr for Pair {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let p = parse_point(s)?;
        Ok(Pair(p.x, p.y))
    }
}

fn default_size() -> Size {
    let d = PhantomSpec::default();
    Size(d.width, d.height)
}

fn default_semi_axes() -> Pair {
    let (a, b) = PhantomSpec::default().base_semi_axes;
    Pair(a, b)
}

pub fn parse_seed(s: &str) -> std::result::Result<Seed, String> {
    parse_pair::<i64>(s, ',').map(|(x, y)| Seed::new(x, y))
}

pub fn parse_point(s: &str) -> std::result::Result<Point, String> {
    let (x, y) = parse_pair::<f64>(s, ',')?;
    if !(x.is_finite() && y.is_finite()) {
        return Err(format!("non-finite coordinates in {s:?}"));
    }
    Ok(Point::new(x, y))
}

impl SegmentArgs {
    pub fn tracker_params(&self) -> TrackerParams {
        let (f, s) = (&self.filter, &self.snake);
        TrackerParams {
            filter: FilterParams {
                median_window: f.median_window,
                gaussian_sigma: f.gaussian_sigma,
                gaussian_radius: f.gaussian_radius,
            },
            snake: SnakeParams {
                alpha: s.alpha,
                beta: s.beta,
                gamma: s.gamma,
                kappa_base: s.kappa_base,
                kappa_cap: s.kappa_cap,
                lumen_reference: s.lumen_reference,
                w_scale: s.w_scale,
                max_iterations: s.max_iterations,
                tol: s.tol,
            },
            resample: ResampleParams {
                n_points: s.n_points,
                dense_samples: s.dense_samples,
            },
            max_fraction: f.max_fraction,
        }
    }
}

impl PhantomArgs {
    pub fn spec(&self) -> Result<PhantomSpec> {
        let Size(width, height) = self.size;
        Ok(PhantomSpec {
            preset: self.preset,
            n_frames: self.frames,
            width,
            height,
            fps: self.fps,
            rng_seed: self.rng_seed,
            lumen_intensity: self.lumen_intensity,
            background_intensity: self.background_intensity,
            speckle_strength: self.speckle_strength,
            center: self
                .center
                .unwrap_or(Point::new(width as f64 / 2.0, height as f64 / 2.0)),
            base_semi_axes: (self.semi_axes.0, self.semi_axes.1),
            pulse_amplitude: self.pulse_amplitude,
            pulse_hz: self.pulse_hz,
            collapse_depth: self.collapse_depth,
            collapse_hz: self.collapse_hz,
        })
    }
}

/// Parse `argv` (including the program name), run, and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match &cli.command {
        Command::Segment(args) => run_segment(args),
        Command::Phantom(args) => run_phantom(args),
        Command::Eval(args) => run_eval(args),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidParameter(_) => EXIT_USAGE,
                _ => EXIT_DATA,
            }
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Write {
        path: dir.to_path_buf(),
        source,
    })
}

fn write_text(path: PathBuf, text: &str) -> Result<()> {
    fs::write(&path, text).map_err(|source| Error::Write { path, source })
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })
}

/// `*.pgm` files of a directory in file-name order.
fn list_pgm(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|source| Error::Read {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry
            .map_err(|source| Error::Read {
                path: dir.to_path_buf(),
                source,
            })?
            .path();
        if path.is_file() && path.extension().is_some_and(|e| e == "pgm") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn frame_files(input: &Path) -> Result<Vec<PathBuf>> {
    let mut files = list_pgm(input)?;
    if files.is_empty() && input.join("frames").is_dir() {
        files = list_pgm(&input.join("frames"))?;
    }
    if files.is_empty() {
        return Err(Error::EmptyInput(format!("no .pgm frames in {}", input.display())));
    }
    Ok(files)
}

/// Burn the closed polygon into a copy of the frame at 255.
pub fn overlay(frame: &Frame, contour: &Contour) -> Frame {
    let (w, h) = (frame.width(), frame.height());
    let mut data = frame.data().to_vec();
    let pts = contour.points();
    for (i, p) in pts.iter().enumerate() {
        let q = pts[(i + 1) % pts.len()];
        let steps = (p.distance(q) * 2.0).ceil().max(1.0) as usize;
        for s in 0..=steps {
            let t = s as f64 / steps as f64;
            let x = (p.x + t * (q.x - p.x)).round();
            let y = (p.y + t * (q.y - p.y)).round();
            if x >= 0.0 && y >= 0.0 && (x as usize) < w && (y as usize) < h {
                data[y as usize * w + x as usize] = 255;
            }
        }
    }
    Frame::new(w, h, data).expect("same dimensions as the source frame")
}

fn run_segment(args: &SegmentArgs) -> Result<()> {
    let params = args.tracker_params();
    params.validate()?;
    let files = frame_files(&args.input)?;
    let record = track_video_with(files.len(), |k| load_frame(&files[k]), args.seed, &params)?;

    create_dir(&args.out)?;
    let contours = args.out.join("contours");
    create_dir(&contours)?;
    write_text(args.out.join("record.csv"), &record_csv(&record))?;
    for r in &record.results {
        if let Some(c) = &r.contour {
            write_text(contours.join(format!("contour_{:04}.csv", r.frame_index)), &contour_csv(c))?;
        }
    }
    if args.overlays {
        let dir = args.out.join("overlays");
        create_dir(&dir)?;
        for (r, file) in record.results.iter().zip(&files) {
            let frame = load_frame(file)?;
            let out = match &r.contour {
                Some(c) => overlay(&frame, c),
                None => frame,
            };
            save_frame(&out, dir.join(format!("overlay_{:04}.pgm", r.frame_index)))?;
        }
    }
    if args.trace {
        let dir = args.out.join("traces");
        create_dir(&dir)?;
        for r in &record.results {
            if let Some(d) = &r.diagnostics {
                write_text(dir.join(format!("trace_{:04}.csv", r.frame_index)), &trace_csv(d))?;
            }
        }
    }
    Ok(())
}

fn run_phantom(args: &PhantomArgs) -> Result<()> {
    let phantom = generate(&args.spec()?)?;
    save_phantom(&phantom, &args.out)
}

fn malformed(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::MalformedCsv {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

/// Data rows of a CSV with the expected header, split into fields.
fn csv_rows(path: &Path, header: &str) -> Result<Vec<(usize, Vec<String>)>> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        _ => return Err(malformed(path, 1, format!("expected header {header:?}"))),
    }
    let width = header.split(',').count();
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let fields: Vec<String> = l.split(',').map(|f| f.trim().to_string()).collect();
            if fields.len() != width {
                return Err(malformed(path, i + 1, format!("expected {width} fields")));
            }
            Ok((i + 1, fields))
        })
        .collect()
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: usize, field: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| malformed(path, line, format!("cannot parse {field:?}")))
}

pub fn load_contour(path: &Path) -> Result<Contour> {
    let rows = csv_rows(path, "n,x,y")?;
    let pts = rows
        .iter()
        .map(|(line, f)| Ok(Point::new(parse_field(path, *line, &f[1])?, parse_field(path, *line, &f[2])?)))
        .collect::<Result<Vec<Point>>>()?;
    Contour::new(pts)
}

/// Predictions from a `segment` output directory.
fn load_predictions(dir: &Path) -> Result<Vec<Prediction>> {
    let record = dir.join("record.csv");
    let rows = csv_rows(&record, "frame,seed_x,seed_y,csa_px2,iterations,status")?;
    rows.iter()
        .enumerate()
        .map(|(k, (line, f))| {
            let frame: usize = parse_field(&record, *line, &f[0])?;
            if frame != k {
                return Err(malformed(&record, *line, format!("expected frame {k}")));
            }
            let csa: f64 = parse_field(&record, *line, &f[3])?;
            let path = dir.join("contours").join(format!("contour_{k:04}.csv"));
            let contour = if path.is_file() { Some(load_contour(&path)?) } else { None };
            Ok((contour, csa))
        })
        .collect()
}

fn load_truth(dir: &Path) -> Result<(Vec<Mask>, Vec<f64>)> {
    let dir = if dir.join("truth").is_dir() {
        dir.join("truth")
    } else {
        dir.to_path_buf()
    };
    let csv = dir.join("csa.csv");
    let rows = csv_rows(&csv, "frame,csa_px2")?;
    let mut masks = Vec::with_capacity(rows.len());
    let mut csa = Vec::with_capacity(rows.len());
    for (k, (line, f)) in rows.iter().enumerate() {
        let frame: usize = parse_field(&csv, *line, &f[0])?;
        if frame != k {
            return Err(malformed(&csv, *line, format!("expected frame {k}")));
        }
        csa.push(parse_field(&csv, *line, &f[1])?);
        masks.push(load_mask(dir.join(crate::phantom::mask_file_name(k)))?);
    }
    Ok((masks, csa))
}

fn run_eval(args: &EvalArgs) -> Result<()> {
    let preds = load_predictions(&args.pred)?;
    let (masks, csa) = load_truth(&args.truth)?;
    let summary = summarize_predictions(&preds, &masks, &csa)?;
    create_dir(&args.out)?;
    write_text(args.out.join("eval.csv"), &eval_csv(&summary))?;
    write_text(args.out.join("summary.txt"), &summary_line(&summary))
}
