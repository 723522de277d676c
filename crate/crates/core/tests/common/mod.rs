//! Random shape generators and brute-force oracles shared by the property
//! suite and the acceptance checks.
#![allow(dead_code)]

use std::f64::consts::PI;

use ijvtrack::{Contour, Mask, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Star-shaped (hence simple) polygon with sorted random angles.
pub fn random_star(r: &mut ChaCha8Rng, n: usize, cx: f64, cy: f64, rmax: f64) -> Contour {
    let mut angles: Vec<f64> = (0..n).map(|_| r.gen_range(0.0..2.0 * PI)).collect();
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    while angles.len() < 3 {
        angles.push(angles.last().unwrap() + 0.5);
    }
    Contour::new(
        angles
            .iter()
            .map(|t| {
                let rad = r.gen_range(0.4 * rmax..rmax);
                Point::new(cx + rad * t.cos(), cy + rad * t.sin())
            })
            .collect(),
    )
    .unwrap()
}

/// Points on a rotated ellipse at irregular (sorted) angles.
pub fn random_ellipse(r: &mut ChaCha8Rng, n: usize, max_ratio: f64) -> Contour {
    let a = r.gen_range(10.0..40.0);
    let b = a / r.gen_range(1.0..max_ratio);
    let rot = r.gen_range(0.0..PI);
    let (cx, cy) = (r.gen_range(60.0..120.0), r.gen_range(60.0..120.0));
    let mut ts: Vec<f64> = (0..n)
        .map(|k| (k as f64 + r.gen_range(-0.3..0.3)) * 2.0 * PI / n as f64)
        .collect();
    ts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    Contour::new(
        ts.iter()
            .map(|t| {
                let (x, y) = (a * t.cos(), b * t.sin());
                Point::new(cx + x * rot.cos() - y * rot.sin(), cy + x * rot.sin() + y * rot.cos())
            })
            .collect(),
    )
    .unwrap()
}

// Gaussian elimination with partial pivoting
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

pub fn fan_area(c: &Contour) -> f64 {
    let p = c.points();
    let o = p[0];
    let twice: f64 = (1..p.len() - 1)
        .map(|i| {
            let (u, v) = (p[i], p[i + 1]);
            (u.x - o.x) * (v.y - o.y) - (u.y - o.y) * (v.x - o.x)
        })
        .sum();
    twice.abs() / 2.0
}

pub fn random_mask(r: &mut ChaCha8Rng, w: usize, h: usize) -> Mask {
    let density = r.gen_range(0.0..1.0);
    Mask::new(w, h, (0..w * h).map(|_| r.gen_bool(density)).collect()).unwrap()
}

/// Convex hull (monotone chain) of random points in a disc, at least 5 vertices.
pub fn random_convex(r: &mut ChaCha8Rng) -> Contour {
    loop {
        let (cx, cy, rad) = (r.gen_range(60.0..140.0), r.gen_range(60.0..140.0), r.gen_range(5.0..50.0));
        let m = r.gen_range(8..80);
        let mut pts: Vec<(f64, f64)> = (0..m)
            .map(|_| {
                let (t, q): (f64, f64) = (r.gen_range(0.0..2.0 * PI), r.gen_range(0.0f64..1.0).sqrt());
                (cx + rad * q * t.cos(), cy + rad * q * t.sin())
            })
            .collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
        let mut hull: Vec<(f64, f64)> = Vec::new();
        for pass in 0..2 {
            let start = hull.len();
            let iter: Box<dyn Iterator<Item = &(f64, f64)>> =
                if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
            for &p in iter {
                while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                    hull.pop();
                }
                hull.push(p);
            }
            hull.pop();
        }
        if hull.len() >= 5 {
            return Contour::new(hull.into_iter().map(|(x, y)| Point::new(x, y)).collect()).unwrap();
        }
    }
}

