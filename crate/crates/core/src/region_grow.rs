//! Seeded region growing on intensity.
//!
//! Growth is breadth-first over 8-connected neighbors. A candidate joins the
//! region when its intensity differs from the running region mean by strictly
//! less than the threshold; each pixel is tested at most once.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::image::{Frame, Mask};

/// Fixed scan order: NW, N, NE, W, E, SW, S, SE.
const NEIGHBORS: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

pub const DEFAULT_MAX_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed {
    pub x: i64,
    pub y: i64,
}

impl Seed {
    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    pub fn in_bounds(&self, width: usize, height: usize) -> bool {
        self.x >= 0 && self.y >= 0 && (self.x as usize) < width && (self.y as usize) < height
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthResult {
    pub mask: Mask,
    pub mean_intensity: f64,
    pub pixel_count: usize,
    pub threshold_used: f64,
}

/// One accepted pixel together with the region mean it was compared against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Acceptance {
    pub x: usize,
    pub y: usize,
    pub intensity: u8,
    pub mean_before: f64,
}

/// `0.05 * (max - min)` over the frame.
pub fn compute_threshold(frame: &Frame) -> f64 {
    let (lo, hi) = frame.min_max();
    0.05 * (hi as f64 - lo as f64)
}

pub fn grow(frame: &Frame, seed: Seed, threshold: f64, max_fraction: f64) -> Result<GrowthResult> {
    grow_logged(frame, seed, threshold, max_fraction).map(|(result, _)| result)
}

/// Same as [`grow`], also returning every acceptance in insertion order
/// (the seed is not part of the log).
pub fn grow_logged(
    frame: &Frame,
    seed: Seed,
    threshold: f64,
    max_fraction: f64,
) -> Result<(GrowthResult, Vec<Acceptance>)> {
    let (w, h) = (frame.width(), frame.height());
    if !seed.in_bounds(w, h) {
        return Err(Error::SeedOutOfBounds {
            x: seed.x,
            y: seed.y,
            width: w,
            height: h,
        });
    }
    if !(threshold >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold {threshold} must be non-negative"
        )));
    }
    if !(max_fraction > 0.0 && max_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "max_fraction {max_fraction} must lie in (0, 1]"
        )));
    }
    let limit = (max_fraction * (w * h) as f64).floor() as usize;

    let mut mask = Mask::empty(w, h);
    let mut checked = vec![false; w * h];
    let mut queue = VecDeque::new();
    let mut log = Vec::new();

    let (sx, sy) = (seed.x as usize, seed.y as usize);
    checked[sy * w + sx] = true;
    mask.set(sx, sy, true);
    queue.push_back((sx, sy));
    let mut count = 1usize;
    let mut mean = frame.get(sx, sy) as f64;

    while let Some((x, y)) = queue.pop_front() {
        for (dx, dy) in NEIGHBORS {
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            if nx < 0 || ny < 0 || nx as usize >= w || ny as usize >= h {
                continue;
            }
            let (nx, ny) = (nx as usize, ny as usize);
            let idx = ny * w + nx;
            if checked[idx] {
                continue;
            }
            checked[idx] = true;
            let value = frame.get(nx, ny);
            if (value as f64 - mean).abs() < threshold {
                log.push(Acceptance {
                    x: nx,
                    y: ny,
                    intensity: value,
                    mean_before: mean,
                });
                count += 1;
                mean += (value as f64 - mean) / count as f64;
                mask.set(nx, ny, true);
                if count > limit {
                    return Err(Error::Leak {
                        pixels: count,
                        limit,
                    });
                }
                queue.push_back((nx, ny));
            }
        }
    }

    Ok((
        GrowthResult {
            mask,
            mean_intensity: mean,
            pixel_count: count,
            threshold_used: threshold,
        },
        log,
    ))
}
