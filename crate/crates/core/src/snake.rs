//! Semi-implicit active contour.
//!
//! Each iteration solves, independently for the x and y coordinate vectors,
//!
//! ```text
//! (B + gamma I) x_t = gamma x_{t-1} - kappa_t f_x(C_{t-1}) - w_c dA/dx(C_{t-1})
//! ```
//!
//! where `B` is the cyclic pentadiagonal stiffness matrix of the membrane and
//! thin-plate terms, `f` is the gradient of the edge energy `-|grad I|^2`, and
//! `w_c` scales the area force by how far the interior intensity sits from the
//! lumen reference level.

use crate::error::{Error, Result};
use crate::geometry::{area_gradient, centroid, polygon_area};
use crate::image::{rasterize_contour, Contour, Frame, Point};
use crate::linalg::{CyclicPentadiagonal, ShiftedSolver};

/// Contours enclosing less than this many square pixels count as collapsed.
pub const COLLAPSE_AREA: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnakeParams {
    /// Membrane (first-derivative) weight.
    pub alpha: f64,
    /// Thin-plate (second-derivative) weight.
    pub beta: f64,
    /// Step damping.
    pub gamma: f64,
    /// `kappa_t = kappa_base^(-t)`, capped at `kappa_cap`.
    pub kappa_base: f64,
    pub kappa_cap: f64,
    /// Interior intensity at which the area force vanishes.
    pub lumen_reference: f64,
    pub w_scale: f64,
    pub max_iterations: usize,
    /// Convergence threshold on the mean per-point displacement, in pixels.
    pub tol: f64,
}

impl Default for SnakeParams {
    fn default() -> Self {
        Self {
            alpha: 2.0,
            beta: 2.0,
            gamma: 2000.0,
            kappa_base: 0.98,
            kappa_cap: 20.0,
            lumen_reference: 50.0,
            w_scale: 2.0,
            max_iterations: 300,
            tol: 0.05,
        }
    }
}

impl SnakeParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.gamma > 0.0) {
            return fail(format!("gamma {} must be positive", self.gamma));
        }
        if !(self.kappa_base > 0.0 && self.kappa_base < 1.0) {
            return fail(format!("kappa_base {} must lie in (0, 1)", self.kappa_base));
        }
        if !(self.kappa_cap > 0.0) {
            return fail(format!("kappa_cap {} must be positive", self.kappa_cap));
        }
        if !(self.alpha >= 0.0 && self.beta >= 0.0) {
            return fail(format!(
                "alpha {} and beta {} must be non-negative",
                self.alpha, self.beta
            ));
        }
        if self.max_iterations < 1 {
            return fail("max_iterations must be at least 1".into());
        }
        if !(self.tol > 0.0) {
            return fail(format!("tol {} must be positive", self.tol));
        }
        if !self.lumen_reference.is_finite() || !self.w_scale.is_finite() {
            return fail("lumen_reference and w_scale must be finite".into());
        }
        Ok(())
    }
}

/// Edge map `g = |grad I|^2` and the gradient `(fx, fy)` of the image energy `-g`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceField {
    width: usize,
    height: usize,
    pub fx: Vec<f64>,
    pub fy: Vec<f64>,
    pub edge: Vec<f64>,
}

impl ForceField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnakeDiagnostics {
    pub iterations_run: usize,
    pub final_mean_displacement: f64,
    /// Total energy of the initial contour followed by one entry per iteration.
    pub energy_trace: Vec<f64>,
    /// Mean per-point displacement of each iteration.
    pub displacement_trace: Vec<f64>,
    pub converged: bool,
    pub collapsed: bool,
}

fn central_diff(values: &[f64], w: usize, h: usize) -> (Vec<f64>, Vec<f64>) {
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h {
        let (yu, yd) = (y.saturating_sub(1), (y + 1).min(h - 1));
        for x in 0..w {
            let (xl, xr) = (x.saturating_sub(1), (x + 1).min(w - 1));
            gx[y * w + x] = (values[y * w + xr] - values[y * w + xl]) / 2.0;
            gy[y * w + x] = (values[yd * w + x] - values[yu * w + x]) / 2.0;
        }
    }
    (gx, gy)
}

/// Central differences with replicate borders, applied twice: once to the
/// image for the edge map, once to the negated edge map for the force.
pub fn external_force_field(frame: &Frame) -> ForceField {
    let (w, h) = (frame.width(), frame.height());
    let intensity: Vec<f64> = frame.data().iter().map(|&v| v as f64).collect();
    let (ix, iy) = central_diff(&intensity, w, h);
    let edge: Vec<f64> = ix.iter().zip(&iy).map(|(a, b)| a * a + b * b).collect();
    let neg: Vec<f64> = edge.iter().map(|g| -g).collect();
    let (fx, fy) = central_diff(&neg, w, h);
    ForceField {
        width: w,
        height: h,
        fx,
        fy,
        edge,
    }
}

fn bilinear(grid: &[f64], w: usize, h: usize, p: Point) -> Result<f64> {
    if !(p.x >= 0.0 && p.y >= 0.0 && p.x <= (w - 1) as f64 && p.y <= (h - 1) as f64) {
        return Err(Error::PointOutOfBounds { x: p.x, y: p.y });
    }
    let x0 = (p.x.floor() as usize).min(w.saturating_sub(2));
    let y0 = (p.y.floor() as usize).min(h.saturating_sub(2));
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (tx, ty) = (p.x - x0 as f64, p.y - y0 as f64);
    let top = grid[y0 * w + x0] * (1.0 - tx) + grid[y0 * w + x1] * tx;
    let bottom = grid[y1 * w + x0] * (1.0 - tx) + grid[y1 * w + x1] * tx;
    Ok(top * (1.0 - ty) + bottom * ty)
}

/// Bilinear interpolation of the force at a sub-pixel point.
pub fn sample_force(field: &ForceField, point: Point) -> Result<(f64, f64)> {
    Ok((
        bilinear(&field.fx, field.width, field.height, point)?,
        bilinear(&field.fy, field.width, field.height, point)?,
    ))
}

pub fn sample_edge(field: &ForceField, point: Point) -> Result<f64> {
    bilinear(&field.edge, field.width, field.height, point)
}

pub fn sample_intensity(frame: &Frame, point: Point) -> Result<f64> {
    let data: Vec<f64> = frame.data().iter().map(|&v| v as f64).collect();
    bilinear(&data, frame.width(), frame.height(), point)
}

/// Stiffness matrix of `alpha |C'|^2 + beta |C''|^2` on a closed contour of `n`
/// points: row stencil `[beta, -(alpha + 4 beta), 2 alpha + 6 beta, -(alpha + 4 beta), beta]`.
pub fn build_internal_matrix(n: usize, alpha: f64, beta: f64) -> Result<CyclicPentadiagonal> {
    if n < 5 {
        return Err(Error::InvalidParameter(format!(
            "internal matrix needs at least 5 points, got {n}"
        )));
    }
    CyclicPentadiagonal::new(n, 2.0 * alpha + 6.0 * beta, -(alpha + 4.0 * beta), beta)
}

/// Factor `B + gamma I` for reuse across iterations.
pub fn damped_solver(b: &CyclicPentadiagonal, gamma: f64) -> Result<ShiftedSolver> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma {gamma} must be positive"
        )));
    }
    b.factor_shifted(gamma)
}

/// Solve `(B + gamma I) v = rhs`.
pub fn solve_damped_system(b: &CyclicPentadiagonal, gamma: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "rhs has {} entries for a {}x{} system",
            rhs.len(),
            b.dim(),
            b.dim()
        )));
    }
    damped_solver(b, gamma)?.solve(rhs)
}

pub fn kappa(t: usize, params: &SnakeParams) -> f64 {
    params.kappa_base.powf(-(t as f64)).min(params.kappa_cap)
}

/// Mean frame intensity over the rasterized interior, if any pixel is inside.
pub fn interior_mean(frame: &Frame, contour: &Contour) -> Result<Option<f64>> {
    let mask = rasterize_contour(contour, frame.width(), frame.height())?;
    let (sum, count) = mask
        .bits()
        .iter()
        .zip(frame.data())
        .filter(|(b, _)| **b)
        .fold((0u64, 0u64), |(s, c), (_, &v)| (s + v as u64, c + 1));
    Ok((count > 0).then(|| sum as f64 / count as f64))
}

/// `w_scale * (interior mean - lumen_reference)`; negative for dark interiors.
pub fn constraint_weight(frame: &Frame, contour: &Contour, params: &SnakeParams) -> Result<f64> {
    let mean = interior_mean(frame, contour)?.ok_or(Error::EmptyInterior)?;
    Ok(weight_from_mean(mean, params))
}

fn weight_from_mean(mean: f64, params: &SnakeParams) -> f64 {
    params.w_scale * (mean - params.lumen_reference)
}

/// Constraint weight that falls back to the intensity at the centroid when the
/// contour is too thin to cover any pixel center.
fn constraint_weight_or_centroid(frame: &Frame, contour: &Contour, params: &SnakeParams) -> Result<f64> {
    let mean = match interior_mean(frame, contour)? {
        Some(m) => m,
        None => {
            let c = centroid(contour);
            let c = Point::new(
                c.x.clamp(0.0, (frame.width() - 1) as f64),
                c.y.clamp(0.0, (frame.height() - 1) as f64),
            );
            sample_intensity(frame, c)?
        }
    };
    Ok(weight_from_mean(mean, params))
}

/// One semi-implicit step with an explicit constraint weight.
pub fn snake_step_weighted(
    contour: &Contour,
    field: &ForceField,
    solver: &ShiftedSolver,
    t: usize,
    weight: f64,
    params: &SnakeParams,
) -> Result<Contour> {
    let n = contour.len();
    if solver.matrix().dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "solver built for {} points, contour has {n}",
            solver.matrix().dim()
        )));
    }
    let k = kappa(t, params);
    let grad = if weight != 0.0 {
        area_gradient(contour)?
    } else {
        vec![(0.0, 0.0); n]
    };
    let gamma = solver.shift();
    let mut rx = Vec::with_capacity(n);
    let mut ry = Vec::with_capacity(n);
    for (p, (ax, ay)) in contour.points().iter().zip(grad) {
        let (fx, fy) = sample_force(field, *p)?;
        rx.push(gamma * p.x - k * fx - weight * ax);
        ry.push(gamma * p.y - k * fy - weight * ay);
    }
    let xs = solver.solve(&rx)?;
    let ys = solver.solve(&ry)?;
    Ok(Contour::from_xy(&xs, &ys)?.clamped(field.width, field.height))
}

/// One full step: constraint weight from the current interior, then the
/// semi-implicit update, then clamping into the frame.
pub fn snake_step(
    contour: &Contour,
    field: &ForceField,
    frame: &Frame,
    solver: &ShiftedSolver,
    t: usize,
    params: &SnakeParams,
) -> Result<Contour> {
    let weight = constraint_weight_or_centroid(frame, contour, params)?;
    snake_step_weighted(contour, field, solver, t, weight, params)
}

/// Discrete energy: edge term summed at the points, membrane and thin-plate
/// finite differences, and the area constraint.
pub fn total_energy(contour: &Contour, field: &ForceField, frame: &Frame, params: &SnakeParams) -> Result<f64> {
    let image: f64 = contour
        .points()
        .iter()
        .map(|p| sample_edge(field, *p).map(|g| -g))
        .sum::<Result<f64>>()?;
    let internal = internal_energy(contour, params.alpha, params.beta);
    let constraint = constraint_weight_or_centroid(frame, contour, params)? * polygon_area(contour);
    Ok(image + internal + constraint)
}

pub fn internal_energy(contour: &Contour, alpha: f64, beta: f64) -> f64 {
    let p = contour.points();
    let n = p.len();
    (0..n)
        .map(|i| {
            let (prev, cur, next) = (p[(i + n - 1) % n], p[i], p[(i + 1) % n]);
            let d1 = (next.x - cur.x).powi(2) + (next.y - cur.y).powi(2);
            let d2 = (next.x - 2.0 * cur.x + prev.x).powi(2) + (next.y - 2.0 * cur.y + prev.y).powi(2);
            alpha * d1 + beta * d2
        })
        .sum()
}

fn mean_displacement(a: &Contour, b: &Contour) -> f64 {
    a.points()
        .iter()
        .zip(b.points())
        .map(|(p, q)| p.distance(*q))
        .sum::<f64>()
        / a.len() as f64
}

/// Iterate until the mean displacement drops below `tol`, the iteration cap is
/// hit, or the contour collapses below [`COLLAPSE_AREA`].
pub fn run_snake(initial: &Contour, frame: &Frame, params: &SnakeParams) -> Result<(Contour, SnakeDiagnostics)> {
    params.validate()?;
    let field = external_force_field(frame);
    run_snake_with_field(initial, frame, &field, params)
}

pub fn run_snake_with_field(
    initial: &Contour,
    frame: &Frame,
    field: &ForceField,
    params: &SnakeParams,
) -> Result<(Contour, SnakeDiagnostics)> {
    let b = build_internal_matrix(initial.len(), params.alpha, params.beta)?;
    let solver = damped_solver(&b, params.gamma)?;
    let mut contour = initial.clamped(frame.width(), frame.height());
    let mut diag = SnakeDiagnostics {
        iterations_run: 0,
        final_mean_displacement: 0.0,
        energy_trace: vec![total_energy(&contour, field, frame, params)?],
        displacement_trace: Vec::new(),
        converged: false,
        collapsed: polygon_area(&contour) < COLLAPSE_AREA,
    };
    if diag.collapsed {
        return Ok((contour, diag));
    }
    for t in 0..params.max_iterations {
        let next = match snake_step(&contour, field, frame, &solver, t, params) {
            Ok(c) => c,
            Err(Error::DegenerateContour(_)) => {
                diag.collapsed = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let moved = mean_displacement(&contour, &next);
        contour = next;
        diag.iterations_run += 1;
        diag.final_mean_displacement = moved;
        diag.displacement_trace.push(moved);
        diag.energy_trace.push(total_energy(&contour, field, frame, params)?);
        if polygon_area(&contour) < COLLAPSE_AREA {
            diag.collapsed = true;
            break;
        }
        if moved < params.tol {
            diag.converged = true;
            break;
        }
    }
    Ok((contour, diag))
}
