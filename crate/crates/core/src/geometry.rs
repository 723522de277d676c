//! Contour extraction and manipulation: boundary tracing, periodic spline
//! resampling, centroid, shoelace area and its gradient.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::image::{Contour, Mask, Point};
use crate::linalg::{cyclic_envelope, EnvelopeCholesky};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResampleParams {
    pub n_points: usize,
    pub dense_samples: usize,
}

impl Default for ResampleParams {
    fn default() -> Self {
        Self {
            n_points: 32,
            dense_samples: 4096,
        }
    }
}

impl ResampleParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_points < 8 {
            return Err(Error::InvalidParameter(format!(
                "n_points {} must be at least 8",
                self.n_points
            )));
        }
        if self.dense_samples < 16 * self.n_points {
            return Err(Error::InvalidParameter(format!(
                "dense_samples {} must be at least 16 * n_points",
                self.dense_samples
            )));
        }
        Ok(())
    }
}

/// Moore neighborhood in screen-clockwise order starting at west.
const MOORE: [(isize, isize); 8] = [
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
];

fn moore_index(from: (isize, isize), to: (isize, isize)) -> usize {
    let d = (to.0 - from.0, to.1 - from.1);
    MOORE
        .iter()
        .position(|&m| m == d)
        .expect("backtrack pixel is a Moore neighbor")
}

/// Trace the outer boundary of the region containing the topmost-then-leftmost
/// set pixel. Points are boundary pixel centers, oriented so that the signed
/// shoelace area is positive and starting at that topmost-leftmost pixel.
pub fn trace_boundary(mask: &Mask) -> Result<Contour> {
    let (w, h) = (mask.width(), mask.height());
    let start = mask
        .bits()
        .iter()
        .position(|&b| b)
        .map(|i| ((i % w) as isize, (i / w) as isize))
        .ok_or(Error::EmptyMask)?;
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) && (x == 0 || y == 0 || x == w - 1 || y == h - 1) {
                return Err(Error::MaskTouchesBorder);
            }
        }
    }

    let start_back = (start.0 - 1, start.1);
    let mut p = start;
    let mut back = start_back;
    let mut trace = vec![start];
    let mut seen = HashSet::new();
    let guard = 4 * mask.count() + 16;
    loop {
        let d = moore_index(p, back);
        let mut next = None;
        for k in 1..=8 {
            let dir = (d + k) % 8;
            let q = (p.0 + MOORE[dir].0, p.1 + MOORE[dir].1);
            if mask.get_signed(q.0, q.1) {
                let prev = (d + k - 1) % 8;
                next = Some((q, (p.0 + MOORE[prev].0, p.1 + MOORE[prev].1)));
                break;
            }
        }
        let Some((q, b)) = next else {
            // isolated pixel
            break;
        };
        p = q;
        back = b;
        // Jacob's criterion: back at the start, entered the same way
        if p == start && back == start_back {
            break;
        }
        if !seen.insert((p, back)) || trace.len() > guard {
            if trace.last() == Some(&start) {
                trace.pop();
            }
            break;
        }
        trace.push(p);
    }

    if trace.len() < Contour::MIN_POINTS {
        return Err(Error::DegenerateContour(format!(
            "region boundary has only {} pixel(s)",
            trace.len()
        )));
    }
    let mut points: Vec<Point> = trace
        .into_iter()
        .map(|(x, y)| Point::new(x as f64, y as f64))
        .collect();
    if signed_area_of(&points) < 0.0 {
        points[1..].reverse();
    }
    Contour::new(points)
}

/// Drop consecutive duplicates, including a closing point equal to the first.
fn dedup_closed(points: &[Point]) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(points.len());
    for &p in points {
        if out.last() != Some(&p) {
            out.push(p);
        }
    }
    while out.len() > 1 && out.last() == out.first() {
        out.pop();
    }
    out
}

/// Closed cubic spline through the knots, parameterized by cumulative chord length.
#[derive(Debug, Clone)]
pub struct PeriodicSpline {
    knots: Vec<Point>,
    params: Vec<f64>,
    total: f64,
    mx: Vec<f64>,
    my: Vec<f64>,
}

impl PeriodicSpline {
    pub fn fit(points: &[Point]) -> Result<Self> {
        let knots = dedup_closed(points);
        if knots.len() < 4 {
            return Err(if knots.len() <= 1 {
                Error::DegenerateContour("contour has zero length".into())
            } else {
                Error::TooFewPoints {
                    needed: 4,
                    got: knots.len(),
                }
            });
        }
        let n = knots.len();
        let seg: Vec<f64> = (0..n).map(|i| knots[i].distance(knots[(i + 1) % n])).collect();
        let mut params = Vec::with_capacity(n);
        let mut acc = 0.0;
        for s in &seg {
            params.push(acc);
            acc += s;
        }
        let total = acc;
        let prev = |i: usize| (i + n - 1) % n;
        // symmetric cyclic tridiagonal system for second derivatives
        let entry = |i: usize, j: usize| {
            if i == j {
                2.0 * (seg[prev(i)] + seg[i])
            } else if (i + 1) % n == j {
                seg[i]
            } else if (j + 1) % n == i {
                seg[j]
            } else {
                0.0
            }
        };
        let chol = EnvelopeCholesky::factor(cyclic_envelope(n, 1), entry)?;
        let rhs = |v: &dyn Fn(usize) -> f64| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    6.0 * ((v((i + 1) % n) - v(i)) / seg[i] - (v(i) - v(prev(i))) / seg[prev(i)])
                })
                .collect()
        };
        let mx = chol.solve(&rhs(&|i| knots[i].x));
        let my = chol.solve(&rhs(&|i| knots[i].y));
        Ok(Self {
            knots,
            params,
            total,
            mx,
            my,
        })
    }

    pub fn length_parameter(&self) -> f64 {
        self.total
    }

    /// Evaluate at chord-length parameter `s`, taken modulo the period.
    pub fn eval(&self, s: f64) -> Point {
        let n = self.knots.len();
        let s = s.rem_euclid(self.total);
        let i = match self.params.binary_search_by(|t| t.total_cmp(&s)) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let j = (i + 1) % n;
        let t0 = self.params[i];
        let h = if j == 0 { self.total - t0 } else { self.params[j] - t0 };
        let (a, b) = ((t0 + h - s) / h, (s - t0) / h);
        let coord = |p0: f64, p1: f64, m0: f64, m1: f64| {
            a * p0 + b * p1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0
        };
        Point::new(
            coord(self.knots[i].x, self.knots[j].x, self.mx[i], self.mx[j]),
            coord(self.knots[i].y, self.knots[j].y, self.my[i], self.my[j]),
        )
    }
}

/// Resample a closed contour to `n_points` points equally spaced in arc length
/// along a periodic cubic spline through the input, starting at its first point.
pub fn resample_closed_contour(contour: &Contour, params: &ResampleParams) -> Result<Contour> {
    params.validate()?;
    if contour.len() < 4 {
        return Err(Error::TooFewPoints {
            needed: 4,
            got: contour.len(),
        });
    }
    let spline = PeriodicSpline::fit(contour.points())?;
    let period = spline.length_parameter();
    let m = params.dense_samples;
    let dense: Vec<Point> = (0..=m)
        .map(|k| spline.eval(period * k as f64 / m as f64))
        .collect();
    let mut arc = Vec::with_capacity(m + 1);
    arc.push(0.0);
    for k in 1..=m {
        arc.push(arc[k - 1] + dense[k].distance(dense[k - 1]));
    }
    let length = arc[m];
    if !(length > 0.0) {
        return Err(Error::DegenerateContour("contour has zero length".into()));
    }
    let mut out = Vec::with_capacity(params.n_points);
    let mut k = 0;
    for j in 0..params.n_points {
        let target = length * j as f64 / params.n_points as f64;
        while k + 1 < m && arc[k + 1] < target {
            k += 1;
        }
        let span = arc[k + 1] - arc[k];
        let frac = if span > 0.0 { (target - arc[k]) / span } else { 0.0 };
        let s = period * (k as f64 + frac) / m as f64;
        out.push(spline.eval(s));
    }
    Contour::new(out)
}

pub fn centroid(contour: &Contour) -> Point {
    let n = contour.len() as f64;
    let (sx, sy) = contour
        .points()
        .iter()
        .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
    Point::new(sx / n, sy / n)
}

fn signed_area_of(points: &[Point]) -> f64 {
    let n = points.len();
    0.5 * (0..n)
        .map(|i| points[i].x * (points[(i + 1) % n].y - points[(i + n - 1) % n].y))
        .sum::<f64>()
}

/// Half the cyclic sum of `x[n] * (y[n+1] - y[n-1])`; positive when the
/// points run counterclockwise in x-right/y-up axes.
pub fn signed_area(contour: &Contour) -> f64 {
    signed_area_of(contour.points())
}

pub fn polygon_area(contour: &Contour) -> f64 {
    signed_area(contour).abs()
}

/// Gradient of `polygon_area` with respect to every point coordinate.
pub fn area_gradient(contour: &Contour) -> Result<Vec<(f64, f64)>> {
    let signed = signed_area(contour);
    let pts = contour.points();
    let scale = pts
        .iter()
        .fold(0.0f64, |m, p| m.max(p.x.abs()).max(p.y.abs()))
        .max(1.0);
    if signed.abs() <= 1e-12 * scale * scale {
        return Err(Error::DegenerateContour(
            "zero-area contour has no area gradient".into(),
        ));
    }
    let s = signed.signum();
    let n = pts.len();
    Ok((0..n)
        .map(|i| {
            let (prev, next) = (pts[(i + n - 1) % n], pts[(i + 1) % n]);
            (s * (next.y - prev.y) / 2.0, s * (prev.x - next.x) / 2.0)
        })
        .collect())
}
