//! Speckle suppression applied to every frame before segmentation: a median
//! filter followed by a Gaussian blur, both with replicate borders.

use crate::error::{Error, Result};
use crate::image::Frame;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    pub median_window: usize,
    pub gaussian_sigma: f64,
    pub gaussian_radius: usize,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            median_window: 7,
            gaussian_sigma: 1.5,
            gaussian_radius: 3,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<()> {
        if self.median_window < 3 || self.median_window.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "median window {} must be odd and at least 3",
                self.median_window
            )));
        }
        if !(self.gaussian_sigma > 0.0) || !self.gaussian_sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gaussian sigma {} must be positive",
                self.gaussian_sigma
            )));
        }
        if self.gaussian_radius < 1 {
            return Err(Error::InvalidParameter(
                "gaussian radius must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Median over a `window`×`window` neighborhood.
///
/// Uses a running histogram along each row, so the cost per pixel is linear
/// in the window side rather than its area.
pub fn median_filter(frame: &Frame, window: usize) -> Result<Frame> {
    if window.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "median window {window} must be odd"
        )));
    }
    let (w, h) = (frame.width(), frame.height());
    if window > w.min(h) {
        return Err(Error::InvalidParameter(format!(
            "median window {window} exceeds the {w}x{h} frame"
        )));
    }
    let r = (window / 2) as isize;
    let rank = window * window / 2;
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        let mut hist = [0u32; 256];
        for dy in -r..=r {
            for dx in -r..=r {
                hist[frame.get_clamped(dx, y + dy) as usize] += 1;
            }
        }
        out.push(histogram_rank(&hist, rank));
        for x in 1..w as isize {
            for dy in -r..=r {
                hist[frame.get_clamped(x - r - 1, y + dy) as usize] -= 1;
                hist[frame.get_clamped(x + r, y + dy) as usize] += 1;
            }
            out.push(histogram_rank(&hist, rank));
        }
    }
    Frame::new(w, h, out)
}

fn histogram_rank(hist: &[u32; 256], rank: usize) -> u8 {
    let mut seen = 0usize;
    for (value, &count) in hist.iter().enumerate() {
        seen += count as usize;
        if seen > rank {
            return value as u8;
        }
    }
    255
}

/// Sampled Gaussian taps for offsets `-radius..=radius`, normalized to sum 1.
pub fn gaussian_kernel(sigma: f64, radius: usize) -> Result<Vec<f64>> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "gaussian sigma {sigma} must be positive"
        )));
    }
    let r = radius as isize;
    let taps: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    Ok(taps.into_iter().map(|t| t / sum).collect())
}

/// Separable Gaussian blur; the intermediate pass is kept in floating point
/// and only the final result is rounded.
pub fn gaussian_filter(frame: &Frame, sigma: f64, radius: usize) -> Result<Frame> {
    let kernel = gaussian_kernel(sigma, radius)?;
    let (w, h) = (frame.width(), frame.height());
    let r = radius as isize;
    let mut horiz = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            horiz[y * w + x] = kernel
                .iter()
                .zip(-r..=r)
                .map(|(k, d)| k * frame.get_clamped(x as isize + d, y as isize) as f64)
                .sum();
        }
    }
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let v: f64 = kernel
                .iter()
                .zip(-r..=r)
                .map(|(k, d)| {
                    let yy = (y as isize + d).clamp(0, h as isize - 1) as usize;
                    k * horiz[yy * w + x]
                })
                .sum();
            out.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    Frame::new(w, h, out)
}

pub fn preprocess(frame: &Frame, params: &FilterParams) -> Result<Frame> {
    params.validate()?;
    let median = median_filter(frame, params.median_window)?;
    gaussian_filter(&median, params.gaussian_sigma, params.gaussian_radius)
}
