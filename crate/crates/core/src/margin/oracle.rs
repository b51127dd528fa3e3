//! Exact and brute-force margin oracles for low-dimensional inputs.

use crate::attacks::{bisect, Norm};
use crate::classifier::Classifier;
use crate::error::{Error, Result};
use crate::exec;
use crate::losses::LossKind;
use crate::numerics::tensor::{add, dot};

/// Distance from `x` to the hyperplane `w.x + b = 0` measured in `norm`:
/// `|w.x + b| / ||w||_*` with the dual norm.
pub fn linear_margin_analytic(w: &[f64], b: f64, x: &[f64], norm: Norm) -> Result<f64> {
    let dual = norm.dual_measure(w);
    if dual == 0.0 {
        return Err(Error::argument("linear margin needs a non-zero weight vector"));
    }
    Ok((dot(w, x) + b).abs() / dual)
}

pub const MAX_ORACLE_DIM: usize = 3;
pub const MIN_GRID: usize = 16;

/// Regular grid over `[-radius, radius]^d`, restricted to the norm ball.
#[derive(Debug, Clone)]
pub struct BallGrid {
    pub dim: usize,
    pub n: usize,
    pub radius: f64,
    pub norm: Norm,
}

impl BallGrid {
    pub fn new(dim: usize, n: usize, radius: f64, norm: Norm) -> Result<Self> {
        if dim == 0 || dim > MAX_ORACLE_DIM {
            return Err(Error::Unsupported(format!(
                "grid oracle supports input dimension 1..={MAX_ORACLE_DIM}, got {dim}"
            )));
        }
        if n < MIN_GRID {
            return Err(Error::argument(format!("grid_n must be at least {MIN_GRID}, got {n}")));
        }
        if !(radius > 0.0) {
            return Err(Error::argument("grid radius must be positive"));
        }
        Ok(Self { dim, n, radius, norm })
    }

    /// Distance between neighbouring grid coordinates.
    pub fn spacing(&self) -> f64 {
        2.0 * self.radius / (self.n - 1) as f64
    }

    fn coord(&self, k: usize) -> f64 {
        -self.radius + self.spacing() * k as f64
    }

    fn point(&self, flat: usize) -> Vec<f64> {
        let mut idx = flat;
        (0..self.dim)
            .map(|_| {
                let k = idx % self.n;
                idx /= self.n;
                self.coord(k)
            })
            .collect()
    }

    /// Visit every in-ball grid point; the closure returns a candidate
    /// score and the best (lowest) one is kept. Rows of the leading axis are
    /// processed in parallel and reduced in index order.
    fn scan<F>(&self, f: F) -> Option<(f64, Vec<f64>)>
    where
        F: Fn(&[f64]) -> Option<f64> + Sync + Send,
    {
        let per_row = self.n.pow(self.dim as u32 - 1);
        let rows = exec::map_indexed(self.n, |row| {
            let mut best: Option<(f64, Vec<f64>)> = None;
            for j in 0..per_row {
                let p = self.point(row + self.n * j);
                if self.norm.measure(&p) > self.radius {
                    continue;
                }
                if let Some(score) = f(&p) {
                    if best.as_ref().map_or(true, |(s, _)| score < *s) {
                        best = Some((score, p));
                    }
                }
            }
            best
        });
        rows.into_iter().flatten().fold(None, |acc, cand| match acc {
            Some((s, p)) if s <= cand.0 => Some((s, p)),
            _ => Some(cand),
        })
    }
}

/// Grid pass shared by the level-set oracles. Every in-ball grid point
/// reaching the level is a candidate; the candidates within two grid
/// spacings of the shortest one are each refined by bisection along their
/// own ray. Returns the shortest refined radius and its unit direction, or
/// `None` when no grid point reaches the level.
fn grid_frontier<C: Classifier + ?Sized>(
    model: &C,
    x: &[f64],
    y: usize,
    loss: LossKind,
    rho: f64,
    grid: &BallGrid,
) -> Option<(f64, Vec<f64>)> {
    let norm = grid.norm;
    let at = |d: &[f64]| model.loss(loss, &add(x, d), y);
    let per_row = grid.n.pow(grid.dim as u32 - 1);
    let hits: Vec<(f64, Vec<f64>)> = exec::map_indexed(grid.n, |row| {
        let mut out = Vec::new();
        for j in 0..per_row {
            let p = grid.point(row + grid.n * j);
            let len = norm.measure(&p);
            if len > grid.radius || len == 0.0 {
                continue;
            }
            if matches!(at(&p), Ok(v) if v >= rho) {
                out.push((len, p));
            }
        }
        out
    })
    .into_iter()
    .flatten()
    .collect();
    let best = hits.iter().map(|h| h.0).fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return None;
    }
    let band = best + 2.0 * grid.spacing();
    let cands: Vec<&(f64, Vec<f64>)> = hits.iter().filter(|h| h.0 <= band).collect();
    let refined = exec::map_indexed(cands.len(), |i| {
        let (len, p) = cands[i];
        let unit: Vec<f64> = p.iter().map(|v| v / len).collect();
        let ray = |eta: f64| {
            let d: Vec<f64> = unit.iter().map(|u| u * eta).collect();
            at(&d).map(|v| v - rho).unwrap_or(f64::NAN)
        };
        let r = match bisect(ray, 0.0, *len, 60) {
            Ok(c) if c.bracketed => c.hi,
            _ => *len,
        };
        (r, unit)
    });
    refined.into_iter().fold(None, |acc: Option<(f64, Vec<f64>)>, c| match acc {
        Some(a) if a.0 <= c.0 => Some(a),
        _ => Some(c),
    })
}

/// Smallest `||delta||` within `radius` with `loss(x + delta) >= rho`,
/// found on a grid and refined by bisection along the best grid directions.
/// Returns `f64::INFINITY` when no grid point reaches the level.
pub fn level_set_radius<C: Classifier + ?Sized>(
    model: &C,
    x: &[f64],
    y: usize,
    loss: LossKind,
    rho: f64,
    norm: Norm,
    radius: f64,
    grid_n: usize,
) -> Result<f64> {
    let grid = BallGrid::new(x.len(), grid_n, radius, norm)?;
    if model.loss(loss, x, y)? >= rho {
        return Ok(0.0);
    }
    Ok(grid_frontier(model, x, y, loss, rho, &grid).map_or(f64::INFINITY, |(r, _)| r))
}

/// Direction-polished variant of [`level_set_radius`]: after the grid
/// pass, the ray direction is refined by golden-section searches along each
/// coordinate axis. Used where the oracle must vary smoothly with the model
/// parameters (finite differences of the margin).
pub fn level_set_radius_polished<C: Classifier + ?Sized>(
    model: &C,
    x: &[f64],
    y: usize,
    loss: LossKind,
    rho: f64,
    norm: Norm,
    radius: f64,
    grid_n: usize,
    sweeps: usize,
) -> Result<f64> {
    let grid = BallGrid::new(x.len(), grid_n, radius, norm)?;
    if model.loss(loss, x, y)? >= rho {
        return Ok(0.0);
    }
    let Some((len, mut u)) = grid_frontier(model, x, y, loss, rho, &grid) else {
        return Ok(f64::INFINITY);
    };
    let hi = (2.0 * len).min(radius);
    let ray_radius = |v: &[f64]| -> f64 {
        let vn = norm.measure(v);
        let g = |eta: f64| {
            let d: Vec<f64> = v.iter().map(|e| e / vn * eta).collect();
            model.loss(loss, &add(x, &d), y).map(|l| l - rho).unwrap_or(f64::NAN)
        };
        match bisect(g, 0.0, hi, 60) {
            Ok(c) if c.bracketed => c.hi,
            _ => f64::INFINITY,
        }
    };
    let mut r = ray_radius(&u).min(len);
    let mut width = 2.0 * grid.spacing() / len.max(grid.spacing());
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..sweeps {
        for k in 0..x.len() {
            let probe = |t: f64| {
                let mut v = u.clone();
                v[k] += t;
                (ray_radius(&v), v)
            };
            let (mut a, mut b) = (-width, width);
            let mut c = b - phi * (b - a);
            let mut d = a + phi * (b - a);
            let (mut fc, mut fd) = (probe(c).0, probe(d).0);
            for _ in 0..40 {
                if fc < fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - phi * (b - a);
                    fc = probe(c).0;
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + phi * (b - a);
                    fd = probe(d).0;
                }
            }
            let (vr, v) = probe(0.5 * (a + b));
            if vr < r {
                r = vr;
                let vn = norm.measure(&v);
                u = v.iter().map(|e| e / vn).collect();
            }
        }
        width *= 0.5;
    }
    Ok(r)
}

/// Brute-force LM margin: the shortest grid perturbation that flips the
/// prediction, refined along its direction.
pub fn brute_force_margin<C: Classifier + ?Sized>(
    model: &C,
    x: &[f64],
    y: usize,
    norm: Norm,
    radius: f64,
    grid_n: usize,
) -> Result<f64> {
    level_set_radius(model, x, y, LossKind::Lm, 0.0, norm, radius, grid_n)
}

/// `min ||delta||` subject to `LM(x + delta) >= rho`, by brute force.
pub fn eps_star_of_rho<C: Classifier + ?Sized>(
    model: &C,
    x: &[f64],
    y: usize,
    rho: f64,
    norm: Norm,
    radius: f64,
    grid_n: usize,
) -> Result<f64> {
    level_set_radius(model, x, y, LossKind::Lm, rho, norm, radius, grid_n)
}

/// Maximum of `loss(x + delta)` over grid points of the `eps` ball, with
/// the maximizing perturbation.
pub fn grid_max_loss<C: Classifier + ?Sized>(
    model: &C,
    x: &[f64],
    y: usize,
    loss: LossKind,
    norm: Norm,
    eps: f64,
    grid_n: usize,
) -> Result<(f64, Vec<f64>)> {
    let grid = BallGrid::new(x.len(), grid_n, eps, norm)?;
    let best = grid.scan(|d| model.loss(loss, &add(x, d), y).ok().map(|v| -v));
    let (neg, d) = best.ok_or_else(|| Error::argument("empty grid"))?;
    Ok((-neg, d))
}
