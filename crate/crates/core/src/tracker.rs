//! Per-frame pipeline and seed propagation across a video.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::filters::{preprocess, FilterParams};
use crate::geometry::{centroid, polygon_area, resample_closed_contour, trace_boundary, ResampleParams};
use crate::image::{Contour, Frame, Point};
use crate::region_grow::{compute_threshold, grow, Seed, DEFAULT_MAX_FRACTION};
use crate::snake::{run_snake, SnakeDiagnostics, SnakeParams, COLLAPSE_AREA};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Collapsed,
    Leaked,
    Failed,
}

impl Status {
    /// Whether the frame's contour can seed the next frame.
    pub fn is_usable(self) -> bool {
        matches!(self, Status::Ok | Status::Collapsed)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Ok => "ok",
            Status::Collapsed => "collapsed",
            Status::Leaked => "leaked",
            Status::Failed => "failed",
        })
    }
}

impl FromStr for Status {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ok" => Ok(Status::Ok),
            "collapsed" => Ok(Status::Collapsed),
            "leaked" => Ok(Status::Leaked),
            "failed" => Ok(Status::Failed),
            other => Err(Error::InvalidParameter(format!("unknown status {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerParams {
    pub filter: FilterParams,
    pub snake: SnakeParams,
    pub resample: ResampleParams,
    /// Region-growing leak guard as a fraction of the frame area.
    pub max_fraction: f64,
}

impl Default for TrackerParams {
    fn default() -> Self {
        Self {
            filter: FilterParams::default(),
            snake: SnakeParams::default(),
            resample: ResampleParams::default(),
            max_fraction: DEFAULT_MAX_FRACTION,
        }
    }
}

impl TrackerParams {
    pub fn validate(&self) -> Result<()> {
        self.filter.validate()?;
        self.snake.validate()?;
        self.resample.validate()?;
        if !(self.max_fraction > 0.0 && self.max_fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "max_fraction {} must lie in (0, 1]",
                self.max_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub frame_index: usize,
    pub seed: Seed,
    /// `None` only for leaked and failed frames.
    pub contour: Option<Contour>,
    pub csa: f64,
    pub iterations: usize,
    pub status: Status,
    pub diagnostics: Option<SnakeDiagnostics>,
}

impl FrameResult {
    fn without_contour(frame_index: usize, seed: Seed, status: Status) -> Self {
        Self {
            frame_index,
            seed,
            contour: None,
            csa: 0.0,
            iterations: 0,
            status,
            diagnostics: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingRecord {
    pub results: Vec<FrameResult>,
    pub params: TrackerParams,
}

/// A zero-area contour sitting on the given points (repeated to three).
fn degenerate_contour(points: &[Point]) -> Result<Contour> {
    let pts: Vec<Point> = points.iter().cycle().take(points.len().max(3)).copied().collect();
    Contour::new(pts)
}

/// Run the whole pipeline on one frame. Algorithmic dead ends become
/// statuses; only invalid inputs are errors.
pub fn segment_frame(frame: &Frame, seed: Seed, params: &TrackerParams, frame_index: usize) -> Result<FrameResult> {
    params.validate()?;
    let (w, h) = (frame.width(), frame.height());
    if !seed.in_bounds(w, h) {
        return Err(Error::SeedOutOfBounds {
            x: seed.x,
            y: seed.y,
            width: w,
            height: h,
        });
    }
    let filtered = preprocess(frame, &params.filter)?;
    let threshold = compute_threshold(&filtered);
    let grown = match grow(&filtered, seed, threshold, params.max_fraction) {
        Ok(g) => g,
        Err(Error::Leak { .. }) => return Ok(FrameResult::without_contour(frame_index, seed, Status::Leaked)),
        Err(e) => return Err(e),
    };
    // A bounded region brighter than the lumen level is what is left of a
    // closed vessel; the area constraint could only shrink it to nothing.
    if grown.mean_intensity > params.snake.lumen_reference {
        let seed_point = Point::new(seed.x as f64, seed.y as f64);
        return Ok(FrameResult {
            contour: Some(degenerate_contour(&[seed_point])?),
            ..FrameResult::without_contour(frame_index, seed, Status::Collapsed)
        });
    }
    let traced = match trace_boundary(&grown.mask) {
        Ok(c) => c,
        Err(Error::TooFewPoints { .. }) => {
            let pts: Vec<Point> = (0..h)
                .flat_map(|y| (0..w).map(move |x| (x, y)))
                .filter(|&(x, y)| grown.mask.get(x, y))
                .map(|(x, y)| Point::new(x as f64, y as f64))
                .collect();
            return Ok(FrameResult {
                contour: Some(degenerate_contour(&pts)?),
                ..FrameResult::without_contour(frame_index, seed, Status::Collapsed)
            });
        }
        Err(Error::MaskTouchesBorder | Error::EmptyMask) => {
            return Ok(FrameResult::without_contour(frame_index, seed, Status::Failed))
        }
        Err(e) => return Err(e),
    };
    if polygon_area(&traced) < COLLAPSE_AREA {
        return Ok(FrameResult {
            csa: polygon_area(&traced),
            contour: Some(traced),
            ..FrameResult::without_contour(frame_index, seed, Status::Collapsed)
        });
    }
    let initial = match resample_closed_contour(&traced, &params.resample) {
        Ok(c) => c,
        Err(Error::DegenerateContour(_) | Error::Singular { .. }) => {
            return Ok(FrameResult::without_contour(frame_index, seed, Status::Failed))
        }
        Err(e) => return Err(e),
    };
    let (contour, diag) = match run_snake(&initial, &filtered, &params.snake) {
        Ok(r) => r,
        Err(Error::Singular { .. } | Error::DegenerateContour(_)) => {
            return Ok(FrameResult::without_contour(frame_index, seed, Status::Failed))
        }
        Err(e) => return Err(e),
    };
    let status = if diag.collapsed { Status::Collapsed } else { Status::Ok };
    Ok(FrameResult {
        frame_index,
        seed,
        csa: polygon_area(&contour),
        contour: Some(contour),
        iterations: diag.iterations_run,
        status,
        diagnostics: Some(diag),
    })
}

/// Centroid of the previous contour, rounded half away from zero and clamped
/// into a `width` x `height` frame.
pub fn propagate_seed(previous: &FrameResult, width: usize, height: usize) -> Result<Seed> {
    match (&previous.contour, previous.status.is_usable()) {
        (Some(c), true) => Ok(seed_from_point(centroid(c), width, height)),
        _ => Err(Error::NoUsableSeed(previous.frame_index + 1)),
    }
}

pub fn seed_from_point(p: Point, width: usize, height: usize) -> Seed {
    let clamp = |v: f64, n: usize| {
        let r = v.round();
        if r.is_nan() {
            0
        } else {
            r.clamp(0.0, (n - 1) as f64) as i64
        }
    };
    Seed::new(clamp(p.x, width), clamp(p.y, height))
}

/// Track through `frames` in order. A frame that leaks or fails does not
/// propagate; the next frame reuses the most recent usable seed.
pub fn track_video(frames: &[Frame], initial_seed: Seed, params: &TrackerParams) -> Result<TrackingRecord> {
    track_video_with(frames.len(), |k| Ok(frames[k].clone()), initial_seed, params)
}

/// Like [`track_video`] but pulls frames on demand, so whole videos need not
/// be resident at once.
pub fn track_video_with(
    n_frames: usize,
    mut load: impl FnMut(usize) -> Result<Frame>,
    initial_seed: Seed,
    params: &TrackerParams,
) -> Result<TrackingRecord> {
    if n_frames == 0 {
        return Err(Error::EmptyInput("video has no frames".into()));
    }
    params.validate()?;
    let mut results: Vec<FrameResult> = Vec::with_capacity(n_frames);
    let mut seed = initial_seed;
    let mut dims: Option<(usize, usize)> = None;
    for k in 0..n_frames {
        let frame = load(k)?;
        let d = (frame.width(), frame.height());
        match dims {
            None => dims = Some(d),
            Some(first) if first != d => {
                return Err(Error::DimensionMismatch(format!(
                    "frame {k} is {}x{}, frame 0 is {}x{}",
                    d.0, d.1, first.0, first.1
                )))
            }
            _ => {}
        }
        let result = segment_frame(&frame, seed, params, k)?;
        if let Ok(next) = propagate_seed(&result, d.0, d.1) {
            seed = next;
        }
        results.push(result);
    }
    Ok(TrackingRecord {
        results,
        params: *params,
    })
}

/// `frame,seed_x,seed_y,csa_px2,iterations,status`
pub fn record_csv(record: &TrackingRecord) -> String {
    let mut out = String::from("frame,seed_x,seed_y,csa_px2,iterations,status\n");
    for r in &record.results {
        out.push_str(&format!(
            "{},{},{},{:.6},{},{}\n",
            r.frame_index, r.seed.x, r.seed.y, r.csa, r.iterations, r.status
        ));
    }
    out
}

/// `n,x,y` with six decimals.
pub fn contour_csv(contour: &Contour) -> String {
    let mut out = String::from("n,x,y\n");
    for (n, p) in contour.points().iter().enumerate() {
        out.push_str(&format!("{n},{:.6},{:.6}\n", p.x, p.y));
    }
    out
}

/// `t,energy,mean_displacement`; row 0 is the initial contour.
pub fn trace_csv(diag: &SnakeDiagnostics) -> String {
    let mut out = String::from("t,energy,mean_displacement\n");
    for (t, e) in diag.energy_trace.iter().enumerate() {
        let d = if t == 0 { 0.0 } else { diag.displacement_trace[t - 1] };
        out.push_str(&format!("{t},{e:.6},{d:.6}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disc_frame(cx: f64, cy: f64, r: f64) -> Frame {
        Frame::from_fn(64, 64, |x, y| {
            let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
            if d <= r {
                20
            } else {
                140
            }
        })
        .unwrap()
    }

    fn result_with(contour: Option<Contour>, status: Status) -> FrameResult {
        FrameResult {
            contour,
            ..FrameResult::without_contour(4, Seed::new(0, 0), status)
        }
    }

    fn triangle_at(c: Point) -> Contour {
        // centroid of these three points is exactly c
        Contour::new(vec![
            Point::new(c.x - 1.0, c.y - 1.0),
            Point::new(c.x + 2.0, c.y - 1.0),
            Point::new(c.x - 1.0, c.y + 2.0),
        ])
        .unwrap()
    }

    #[test]
    fn rounding_and_clamping() {
        let cases = [
            (Point::new(120.4, 88.7), Seed::new(120, 89)),
            (Point::new(120.5, 88.5), Seed::new(121, 89)),
            (Point::new(300.0, -4.0), Seed::new(255, 0)),
        ];
        for (c, want) in cases {
            let r = result_with(Some(triangle_at(c)), Status::Ok);
            assert_eq!(propagate_seed(&r, 256, 256).unwrap(), want);
        }
    }

    #[test]
    fn unusable_results_do_not_propagate() {
        for s in [Status::Leaked, Status::Failed] {
            assert!(propagate_seed(&result_with(None, s), 64, 64).is_err());
        }
        let collapsed = result_with(Some(triangle_at(Point::new(10.0, 12.0))), Status::Collapsed);
        assert_eq!(propagate_seed(&collapsed, 64, 64).unwrap(), Seed::new(10, 12));
    }

    #[test]
    fn clean_disc_is_found() {
        let frame = disc_frame(32.0, 30.0, 12.0);
        let r = segment_frame(&frame, Seed::new(32, 30), &TrackerParams::default(), 0).unwrap();
        assert_eq!(r.status, Status::Ok);
        let area = std::f64::consts::PI * 144.0;
        assert!((r.csa - area).abs() / area < 0.15, "csa {}", r.csa);
        let c = centroid(r.contour.as_ref().unwrap());
        assert!((c.x - 32.0).abs() < 1.0 && (c.y - 30.0).abs() < 1.0);
    }

    #[test]
    fn bright_seed_leaks() {
        let frame = disc_frame(32.0, 30.0, 12.0);
        let r = segment_frame(&frame, Seed::new(5, 5), &TrackerParams::default(), 3).unwrap();
        assert_eq!(r.status, Status::Leaked);
        assert_eq!(r.frame_index, 3);
    }

    #[test]
    fn enclosed_bright_region_reports_collapse() {
        // gray pocket inside a dark ring on a bright background
        let frame = Frame::from_fn(64, 64, |x, y| {
            let d = ((x as f64 - 30.0).powi(2) + (y as f64 - 34.0).powi(2)).sqrt();
            match d {
                d if d <= 6.0 => 120,
                d if d <= 10.0 => 10,
                _ => 220,
            }
        })
        .unwrap();
        let r = segment_frame(&frame, Seed::new(30, 34), &TrackerParams::default(), 0).unwrap();
        assert_eq!(r.status, Status::Collapsed);
        assert_eq!(r.csa, 0.0);
        assert_eq!(propagate_seed(&r, 64, 64).unwrap(), Seed::new(30, 34));
    }

    #[test]
    fn dark_background_leaks() {
        // everything dark: the region swallows the frame
        let frame = Frame::from_fn(64, 64, |x, _| if x < 2 { 200 } else { 10 }).unwrap();
        let r = segment_frame(&frame, Seed::new(32, 32), &TrackerParams::default(), 0).unwrap();
        assert_eq!(r.status, Status::Leaked);
        assert!(r.contour.is_none());
        assert_eq!(r.csa, 0.0);
    }

    #[test]
    fn leak_falls_back_to_last_usable_seed() {
        let good = disc_frame(32.0, 30.0, 12.0);
        let bad = Frame::from_fn(64, 64, |x, _| if x < 2 { 200 } else { 10 }).unwrap();
        let frames = vec![good.clone(), good.clone(), bad, good];
        let rec = track_video(&frames, Seed::new(31, 31), &TrackerParams::default()).unwrap();
        assert_eq!(rec.results.len(), 4);
        assert_eq!(rec.results[2].status, Status::Leaked);
        let from_1 = propagate_seed(&rec.results[1], 64, 64).unwrap();
        assert_eq!(rec.results[2].seed, from_1);
        assert_eq!(rec.results[3].seed, from_1);
        for (k, r) in rec.results.iter().enumerate() {
            assert_eq!(r.frame_index, k);
        }
    }

    #[test]
    fn single_frame_and_empty_video() {
        let frame = disc_frame(32.0, 30.0, 12.0);
        let rec = track_video(&[frame], Seed::new(32, 30), &TrackerParams::default()).unwrap();
        assert_eq!(rec.results.len(), 1);
        assert_eq!(rec.results[0].seed, Seed::new(32, 30));
        assert!(track_video(&[], Seed::new(0, 0), &TrackerParams::default()).is_err());
    }

    #[test]
    fn out_of_bounds_seed_is_an_error() {
        let frame = disc_frame(32.0, 30.0, 12.0);
        assert!(matches!(
            segment_frame(&frame, Seed::new(64, 3), &TrackerParams::default(), 0),
            Err(Error::SeedOutOfBounds { .. })
        ));
    }

    #[test]
    fn csv_layouts() {
        let frame = disc_frame(32.0, 30.0, 12.0);
        let rec = track_video(&[frame], Seed::new(32, 30), &TrackerParams::default()).unwrap();
        let csv = record_csv(&rec);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("frame,seed_x,seed_y,csa_px2,iterations,status"));
        assert!(lines.next().unwrap().starts_with("0,32,30,"));
        let r = &rec.results[0];
        let contour = contour_csv(r.contour.as_ref().unwrap());
        assert_eq!(contour.lines().count(), 33);
        let trace = trace_csv(r.diagnostics.as_ref().unwrap());
        assert_eq!(trace.lines().count(), r.iterations + 2);
        for s in [Status::Ok, Status::Collapsed, Status::Leaked, Status::Failed] {
            assert_eq!(s.to_string().parse::<Status>().unwrap(), s);
        }
    }
}
