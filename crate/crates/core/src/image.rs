//! Frames, masks and contours, plus the binary PGM container they are stored in.
//!
//! Pixel `(col, row)` has its center at the sub-pixel coordinate `(col, row)`.
//! Contours, force sampling and ground-truth masks all share that convention.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// One grayscale video frame, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidFrame(format!(
                "dimensions {width}x{height} must be positive"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidFrame(format!(
                "{} samples for a {width}x{height} frame",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    /// Sample with coordinates clamped into the frame (replicate padding).
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> u8 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.data[cy * self.width + cx]
    }

    pub fn min_max(&self) -> (u8, u8) {
        self.data
            .iter()
            .fold((u8::MAX, u8::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= 0.0 && y >= 0.0 && x <= (self.width - 1) as f64 && y <= (self.height - 1) as f64
    }
}

/// Binary pixel set over a frame grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidMask(format!(
                "dimensions {width}x{height} must be positive"
            )));
        }
        if bits.len() != width * height {
            return Err(Error::InvalidMask(format!(
                "{} bits for a {width}x{height} mask",
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    /// Out-of-grid coordinates read as unset.
    #[inline]
    pub fn get_signed(&self, x: isize, y: isize) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.bits[y as usize * self.width + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn same_dims(&self, other: &Mask) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Grayscale rendering with 255 for set pixels.
    pub fn to_frame(&self) -> Frame {
        Frame {
            width: self.width,
            height: self.height,
            data: self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect(),
        }
    }

    /// Values above 127 are read as inside.
    pub fn from_frame(frame: &Frame) -> Self {
        Self {
            width: frame.width,
            height: frame.height,
            bits: frame.data.iter().map(|&v| v > 127).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Ordered closed polygon; the last point connects back to the first.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    points: Vec<Point>,
}

impl Contour {
    pub const MIN_POINTS: usize = 3;

    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.len() < Self::MIN_POINTS {
            return Err(Error::TooFewPoints {
                needed: Self::MIN_POINTS,
                got: points.len(),
            });
        }
        if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::DegenerateContour("non-finite coordinate".into()));
        }
        Ok(Self { points })
    }

    pub fn from_xy(xs: &[f64], ys: &[f64]) -> Result<Self> {
        Self::new(xs.iter().zip(ys).map(|(&x, &y)| Point::new(x, y)).collect())
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.x).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.y).collect()
    }

    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        Self { points }
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self {
            points: self
                .points
                .iter()
                .map(|p| Point::new(p.x + dx, p.y + dy))
                .collect(),
        }
    }

    pub fn clamped(&self, width: usize, height: usize) -> Self {
        let (xmax, ymax) = ((width - 1) as f64, (height - 1) as f64);
        Self {
            points: self
                .points
                .iter()
                .map(|p| Point::new(p.x.clamp(0.0, xmax), p.y.clamp(0.0, ymax)))
                .collect(),
        }
    }
}

fn parse_header_token(bytes: &[u8], pos: &mut usize) -> Option<String> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
        *pos += 1;
    }
    (start < *pos).then(|| String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

/// Read an 8-bit binary PGM (P5, maxval 255).
pub fn load_frame(path: impl AsRef<Path>) -> Result<Frame> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        let magic = String::from_utf8_lossy(&bytes[..bytes.len().min(2)]).into_owned();
        return Err(Error::UnsupportedPgm {
            path: path.to_path_buf(),
            magic,
        });
    }
    let malformed = |reason: &str| Error::MalformedPgm {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for (field, name) in fields.iter_mut().zip(["width", "height", "maxval"]) {
        let token = parse_header_token(&bytes, &mut pos)
            .ok_or_else(|| malformed(&format!("missing {name}")))?;
        *field = token
            .parse()
            .map_err(|_| malformed(&format!("{name} {token:?} is not an integer")))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(Error::UnsupportedMaxval {
            path: path.to_path_buf(),
            maxval,
        });
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(malformed("missing separator before pixel data"));
    }
    pos += 1;
    let expected = width as usize * height as usize;
    let payload = &bytes[pos..];
    if payload.len() < expected {
        return Err(Error::TruncatedPgm {
            path: path.to_path_buf(),
            expected,
            found: payload.len(),
        });
    }
    Frame::new(width as usize, height as usize, payload[..expected].to_vec())
}

pub fn save_frame(frame: &Frame, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = format!("P5\n{} {}\n255\n", frame.width, frame.height).into_bytes();
    out.extend_from_slice(&frame.data);
    fs::write(path, out).map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_mask(path: impl AsRef<Path>) -> Result<Mask> {
    load_frame(path).map(|f| Mask::from_frame(&f))
}

pub fn save_mask(mask: &Mask, path: impl AsRef<Path>) -> Result<()> {
    save_frame(&mask.to_frame(), path)
}

/// Pixels whose centers fall inside the closed polygon under the even-odd rule.
///
/// Scanline crossings use the half-open convention, so a center lying exactly
/// on a left or top edge is inside and one on a right or bottom edge is not.
pub fn rasterize_contour(contour: &Contour, width: usize, height: usize) -> Result<Mask> {
    if contour.len() < Contour::MIN_POINTS {
        return Err(Error::TooFewPoints {
            needed: Contour::MIN_POINTS,
            got: contour.len(),
        });
    }
    let mut mask = Mask::empty(width, height);
    let pts = contour.points();
    let (ymin, ymax) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.y), hi.max(p.y))
        });
    let row_lo = ymin.ceil().max(0.0) as usize;
    let row_hi = (ymax.floor().min(height as f64 - 1.0)).max(-1.0);
    if row_hi < 0.0 {
        return Ok(mask);
    }
    let row_hi = row_hi as usize;
    let mut crossings = Vec::new();
    for row in row_lo..=row_hi {
        let py = row as f64;
        crossings.clear();
        for (i, a) in pts.iter().enumerate() {
            let b = pts[(i + 1) % pts.len()];
            if (a.y > py) != (b.y > py) {
                crossings.push(a.x + (py - a.y) * (b.x - a.x) / (b.y - a.y));
            }
        }
        crossings.sort_by(f64::total_cmp);
        for pair in crossings.chunks_exact(2) {
            // columns c with pair[0] <= c < pair[1]
            let start = pair[0].ceil().max(0.0);
            let end = pair[1].ceil().min(width as f64);
            if end <= start {
                continue;
            }
            for col in start as usize..end as usize {
                mask.set(col, row, true);
            }
        }
    }
    Ok(mask)
}
