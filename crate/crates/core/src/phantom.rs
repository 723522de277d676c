//! Synthetic ultrasound-like videos of a pulsating elliptical lumen with known
//! ground truth.
//!
//! Speckle is multiplicative and drawn from a counter-based hash of
//! `(rng_seed, frame, x, y)`, so any frame can be regenerated on its own and
//! frames may be produced in any order.

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::image::{save_frame, save_mask, Frame, Mask, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Steady cardiac pulsation only.
    Distended,
    /// Pulsation plus slow respiratory collapse of the minor axis.
    Collapsing,
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Distended => "distended",
            Preset::Collapsing => "collapsing",
        })
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "distended" => Ok(Preset::Distended),
            "collapsing" => Ok(Preset::Collapsing),
            other => Err(Error::InvalidParameter(format!(
                "unknown preset {other:?} (expected distended or collapsing)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhantomSpec {
    pub preset: Preset,
    pub n_frames: usize,
    pub width: usize,
    pub height: usize,
    pub fps: f64,
    pub rng_seed: u64,
    pub lumen_intensity: f64,
    pub background_intensity: f64,
    pub speckle_strength: f64,
    pub center: Point,
    /// Semi-axes `(a0, b0)` along x and y before modulation.
    pub base_semi_axes: (f64, f64),
    pub pulse_amplitude: f64,
    pub pulse_hz: f64,
    pub collapse_depth: f64,
    pub collapse_hz: f64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            preset: Preset::Distended,
            n_frames: 450,
            width: 256,
            height: 256,
            fps: 30.0,
            rng_seed: 1,
            lumen_intensity: 20.0,
            background_intensity: 140.0,
            speckle_strength: 0.3,
            center: Point::new(128.0, 128.0),
            base_semi_axes: (36.0, 20.0),
            pulse_amplitude: 0.15,
            pulse_hz: 1.2,
            collapse_depth: 0.95,
            collapse_hz: 0.25,
        }
    }
}

impl PhantomSpec {
    pub fn with_preset(preset: Preset) -> Self {
        Self {
            preset,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParameter(msg));
        let (a0, b0) = self.base_semi_axes;
        if !(a0 > 0.0 && b0 > 0.0) {
            return fail(format!("semi-axes ({a0}, {b0}) must be positive"));
        }
        if self.n_frames == 0 {
            return fail("n_frames must be at least 1".into());
        }
        if self.width < 16 || self.height < 16 {
            return fail(format!(
                "frame size {}x{} must be at least 16x16",
                self.width, self.height
            ));
        }
        if !(self.fps > 0.0) {
            return fail(format!("fps {} must be positive", self.fps));
        }
        let in_range = |v: f64| (0.0..=255.0).contains(&v);
        if !in_range(self.lumen_intensity) || !in_range(self.background_intensity) {
            return fail("intensities must lie in [0, 255]".into());
        }
        if !(self.lumen_intensity < self.background_intensity) {
            return fail("lumen must be darker than the background".into());
        }
        if !(0.0..=1.0).contains(&self.speckle_strength) {
            return fail(format!(
                "speckle strength {} must lie in [0, 1]",
                self.speckle_strength
            ));
        }
        if !(0.0..1.0).contains(&self.pulse_amplitude) {
            return fail(format!(
                "pulse amplitude {} must lie in [0, 1)",
                self.pulse_amplitude
            ));
        }
        if !(0.0..=1.0).contains(&self.collapse_depth) {
            return fail(format!(
                "collapse depth {} must lie in [0, 1]",
                self.collapse_depth
            ));
        }
        if !self.pulse_hz.is_finite() || !self.collapse_hz.is_finite() {
            return fail("frequencies must be finite".into());
        }
        let amax = a0 * (1.0 + self.pulse_amplitude);
        let bmax = b0 * (1.0 + self.pulse_amplitude);
        let c = self.center;
        if c.x - amax < 0.0
            || c.y - bmax < 0.0
            || c.x + amax > (self.width - 1) as f64
            || c.y + bmax > (self.height - 1) as f64
        {
            return Err(Error::EllipseOutOfBounds(format!(
                "center ({}, {}) with semi-axes up to ({amax}, {bmax}) in a {}x{} frame",
                c.x, c.y, self.width, self.height
            )));
        }
        Ok(())
    }

    fn pulse(&self, t: usize) -> f64 {
        1.0 + self.pulse_amplitude * (2.0 * PI * self.pulse_hz * t as f64 / self.fps).sin()
    }

    /// Multiplier on the minor axis from respiratory collapse (1 when distended).
    pub fn collapse_factor(&self, t: usize) -> f64 {
        match self.preset {
            Preset::Distended => 1.0,
            Preset::Collapsing => {
                let phase = (2.0 * PI * self.collapse_hz * t as f64 / self.fps).sin();
                1.0 - self.collapse_depth * phase.max(0.0)
            }
        }
    }

    /// Semi-axes `(a, b)` of frame `t`.
    pub fn semi_axes(&self, t: usize) -> (f64, f64) {
        let p = self.pulse(t);
        (
            self.base_semi_axes.0 * p,
            self.base_semi_axes.1 * p * self.collapse_factor(t),
        )
    }
}

pub fn true_csa(spec: &PhantomSpec, t: usize) -> Result<f64> {
    if t >= spec.n_frames {
        return Err(Error::FrameIndexOutOfRange {
            index: t,
            len: spec.n_frames,
        });
    }
    let (a, b) = spec.semi_axes(t);
    Ok(PI * a * b)
}

#[derive(Debug, Clone)]
pub struct Phantom {
    pub frames: Vec<Frame>,
    pub masks: Vec<Mask>,
    pub csa: Vec<f64>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform sample in `[0, 1)` addressed by `(seed, frame, x, y)`.
pub fn speckle_uniform(seed: u64, frame: usize, x: usize, y: usize) -> f64 {
    let mut h = splitmix64(seed);
    for v in [frame as u64, x as u64, y as u64] {
        h = splitmix64(h ^ v);
    }
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Approximate signed distance to the ellipse boundary (negative inside).
fn ellipse_distance(dx: f64, dy: f64, a: f64, b: f64) -> f64 {
    let q = ((dx / a).powi(2) + (dy / b).powi(2)).sqrt();
    if q < 1e-12 {
        return -a.min(b);
    }
    let grad = ((dx / (a * a)).powi(2) + (dy / (b * b)).powi(2)).sqrt() / q;
    (q - 1.0) / grad
}

/// Render frame `t` and its truth mask.
pub fn render(spec: &PhantomSpec, t: usize) -> Result<(Frame, Mask)> {
    if t >= spec.n_frames {
        return Err(Error::FrameIndexOutOfRange {
            index: t,
            len: spec.n_frames,
        });
    }
    let (a, b) = spec.semi_axes(t);
    let (w, h) = (spec.width, spec.height);
    let (lumen, bg) = (spec.lumen_intensity, spec.background_intensity);
    let mut mask = Mask::empty(w, h);
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (dx, dy) = (x as f64 - spec.center.x, y as f64 - spec.center.y);
            if (dx / a).powi(2) + (dy / b).powi(2) <= 1.0 {
                mask.set(x, y, true);
            }
            // 2 px linear ramp centered on the boundary
            let ramp = ((ellipse_distance(dx, dy, a, b) + 1.0) / 2.0).clamp(0.0, 1.0);
            let base = lumen + (bg - lumen) * ramp;
            let u = speckle_uniform(spec.rng_seed, t, x, y);
            let value = base * (1.0 + spec.speckle_strength * (u * u - 1.0 / 3.0));
            data.push(value.round().clamp(0.0, 255.0) as u8);
        }
    }
    Ok((Frame::new(w, h, data)?, mask))
}

pub fn generate(spec: &PhantomSpec) -> Result<Phantom> {
    spec.validate()?;
    let mut phantom = Phantom {
        frames: Vec::with_capacity(spec.n_frames),
        masks: Vec::with_capacity(spec.n_frames),
        csa: Vec::with_capacity(spec.n_frames),
    };
    for t in 0..spec.n_frames {
        let (frame, mask) = render(spec, t)?;
        phantom.frames.push(frame);
        phantom.masks.push(mask);
        phantom.csa.push(true_csa(spec, t)?);
    }
    Ok(phantom)
}

pub fn frame_file_name(t: usize) -> String {
    format!("frame_{t:04}.pgm")
}

pub fn mask_file_name(t: usize) -> String {
    format!("mask_{t:04}.pgm")
}

/// Write `frames/frame_%04d.pgm`, `truth/mask_%04d.pgm` and `truth/csa.csv`.
pub fn save_phantom(phantom: &Phantom, out_dir: &Path) -> Result<()> {
    let frames_dir = out_dir.join("frames");
    let truth_dir = out_dir.join("truth");
    for dir in [&frames_dir, &truth_dir] {
        fs::create_dir_all(dir).map_err(|source| Error::Write {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    for (t, (frame, mask)) in phantom.frames.iter().zip(&phantom.masks).enumerate() {
        save_frame(frame, frames_dir.join(frame_file_name(t)))?;
        save_mask(mask, truth_dir.join(mask_file_name(t)))?;
    }
    let mut csv = String::from("frame,csa_px2\n");
    for (t, csa) in phantom.csa.iter().enumerate() {
        csv.push_str(&format!("{t},{csa:.6}\n"));
    }
    let path = truth_dir.join("csa.csv");
    fs::write(&path, csv).map_err(|source| Error::Write { path, source })
}
