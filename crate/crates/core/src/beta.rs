//! Jones beta numbers.
//!
//! `beta_p(x, t)^p = inf_L (1/t) sum_{|p - x| < t} w (dist(p, L) / t)^p` over
//! affine lines `L`. For `p = 2` the minimizer is the weighted total least
//! squares line: it passes through the weighted centroid of the ball along
//! the top eigenvector of the weighted covariance.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cubes::{Cube, CubeLattice};
use crate::error::{invalid, Error, Result};
use crate::exec::{self, Execution};
use crate::geom::{Line, Point2};
use crate::measure::DiscreteMeasure;
use crate::sum::{self, Neumaier};

/// Quadrature panels for the scale integral in [`beta_point_cube`].
pub const SCALE_PANELS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaValue {
    pub beta: f64,
    pub line: Line,
    pub x: Point2,
    pub t: f64,
    pub p: u32,
    /// Mass of the ball.
    pub mass: f64,
    /// The covariance had (numerically) equal eigenvalues; the direction was set to angle 0.
    pub tie: bool,
    /// Fewer than two distinct points in the ball.
    pub degenerate: bool,
}

/// `(1/t) sum w (dist/t)^p` for a fixed line over the ball `B(x, t)`.
pub fn line_cost(mu: &DiscreteMeasure, ids: &[usize], line: &Line, t: f64, p: u32) -> f64 {
    let terms = ids.iter().map(|&i| {
        let d = line.dist(mu.point(i)) / t;
        mu.weight(i) * if p == 1 { d } else { d * d }
    });
    sum::sum(terms) / t
}

pub fn beta2(mu: &DiscreteMeasure, x: Point2, t: f64) -> Result<BetaValue> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid(format!("scale must be positive, got {t}")));
    }
    let ids = mu.ball_indices(x, t);
    beta2_of(mu, &ids, x, t)
}

pub(crate) fn beta2_of(mu: &DiscreteMeasure, ids: &[usize], x: Point2, t: f64) -> Result<BetaValue> {
    if ids.is_empty() {
        return Err(Error::EmptyBall { x: x.x, y: x.y, r: t });
    }
    let (line, tie, mass) = tls_line(mu, ids, x);
    let first = mu.point(ids[0]);
    let degenerate = ids.iter().all(|&i| mu.point(i) == first);
    let beta = line_cost(mu, ids, &line, t, 2).sqrt();
    Ok(BetaValue {
        beta,
        line,
        x,
        t,
        p: 2,
        mass,
        tie,
        degenerate,
    })
}

/// Weighted total least squares line of `ids`; coordinates are taken relative to `origin`.
pub(crate) fn tls_line(mu: &DiscreteMeasure, ids: &[usize], origin: Point2) -> (Line, bool, f64) {
    let mass = mu.mass_of(ids);
    let c = sum::vec_sum(ids.iter().map(|&i| (mu.point(i) - origin) * mu.weight(i))) * (1.0 / mass);
    let (mut sxx, mut sxy, mut syy) = (Neumaier::new(), Neumaier::new(), Neumaier::new());
    for &i in ids {
        let q = mu.point(i) - origin - c;
        let w = mu.weight(i);
        sxx.add(w * q.x * q.x);
        sxy.add(w * q.x * q.y);
        syy.add(w * q.y * q.y);
    }
    let (sxx, sxy, syy) = (sxx.value(), sxy.value(), syy.value());
    let gap = (sxx - syy).hypot(2.0 * sxy);
    let tie = gap <= 1e-12 * (sxx + syy) || (sxx + syy) == 0.0;
    let angle = if tie { 0.0 } else { 0.5 * (2.0 * sxy).atan2(sxx - syy) };
    let dir = Point2::polar(1.0, angle);
    let line = Line::through(origin + c, dir).expect("unit direction");
    (line, tie, mass)
}

/// `beta_p` for `p` in `{1, 2}`.
pub fn beta_p(mu: &DiscreteMeasure, x: Point2, t: f64, p: u32) -> Result<BetaValue> {
    match p {
        2 => beta2(mu, x, t),
        1 => beta1(mu, x, t),
        _ => Err(invalid(format!("unsupported exponent p = {p}"))),
    }
}

const GRID_ANGLES: usize = 180;
const GRID_OFFSETS: usize = 64;

/// `p = 1`: coarse grid over (angle, offset) followed by Nelder-Mead.
fn beta1(mu: &DiscreteMeasure, x: Point2, t: f64) -> Result<BetaValue> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid(format!("scale must be positive, got {t}")));
    }
    let ids = mu.ball_indices(x, t);
    if ids.is_empty() {
        return Err(Error::EmptyBall { x: x.x, y: x.y, r: t });
    }
    let cost = |v: [f64; 2]| line_cost(mu, &ids, &Line::from_angle_offset(v[0], v[1]), t, 1);
    let mut best = ([0.0, 0.0], f64::INFINITY);
    for i in 0..GRID_ANGLES {
        let angle = PI * i as f64 / GRID_ANGLES as f64;
        let n = Point2::polar(1.0, angle).perp();
        let center = x.dot(n);
        for j in 0..GRID_OFFSETS {
            let off = center - t + 2.0 * t * j as f64 / (GRID_OFFSETS - 1) as f64;
            let c = cost([angle, off]);
            if c < best.1 {
                best = ([angle, off], c);
            }
        }
    }
    // the L1 cost is piecewise smooth; restarts help the simplex escape kinks
    let mut v = best.0;
    let mut scale = [PI / GRID_ANGLES as f64, 2.0 * t / GRID_OFFSETS as f64];
    let mut val = best.1;
    for _ in 0..4 {
        let (nv, nval) = nelder_mead(&cost, v, scale, 400, 1e-14 * (1.0 + val));
        if nval < val {
            v = nv;
            val = nval;
        }
        scale = [scale[0] * 0.25, scale[1] * 0.25];
    }
    let first = mu.point(ids[0]);
    Ok(BetaValue {
        beta: val,
        line: Line::from_angle_offset(v[0], v[1]),
        x,
        t,
        p: 1,
        mass: mu.mass_of(&ids),
        tie: false,
        degenerate: ids.iter().all(|&i| mu.point(i) == first),
    })
}

fn nelder_mead<F: Fn([f64; 2]) -> f64>(
    f: &F,
    start: [f64; 2],
    step: [f64; 2],
    max_iter: usize,
    tol: f64,
) -> ([f64; 2], f64) {
    let mut simplex = [
        start,
        [start[0] + step[0], start[1]],
        [start[0], start[1] + step[1]],
    ];
    let mut vals = simplex.map(f);
    let lerp = |a: [f64; 2], b: [f64; 2], s: f64| [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
    for _ in 0..max_iter {
        let mut order = [0, 1, 2];
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let (b, m, w) = (order[0], order[1], order[2]);
        if vals[w] - vals[b] <= tol {
            break;
        }
        let centroid = lerp(simplex[b], simplex[m], 0.5);
        let refl = lerp(centroid, simplex[w], -1.0);
        let fr = f(refl);
        if fr < vals[b] {
            let exp = lerp(centroid, simplex[w], -2.0);
            let fe = f(exp);
            if fe < fr {
                simplex[w] = exp;
                vals[w] = fe;
            } else {
                simplex[w] = refl;
                vals[w] = fr;
            }
        } else if fr < vals[m] {
            simplex[w] = refl;
            vals[w] = fr;
        } else {
            let con = lerp(centroid, simplex[w], 0.5);
            let fc = f(con);
            if fc < vals[w] {
                simplex[w] = con;
                vals[w] = fc;
            } else {
                for k in [m, w] {
                    simplex[k] = lerp(simplex[b], simplex[k], 0.5);
                    vals[k] = f(simplex[k]);
                }
            }
        }
    }
    let k = (0..3).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
    (simplex[k], vals[k])
}

/// `beta_2(B_Q)` with `B_Q = B(z_Q, 3 diam(Q))`.
pub fn beta_cube(mu: &DiscreteMeasure, cube: &Cube) -> Result<BetaValue> {
    if cube.diam <= 0.0 {
        return Err(Error::DegenerateCube(cube.id));
    }
    beta2(mu, cube.center, 3.0 * cube.diam)
}

/// `beta_cube` for every cube of the lattice, indexed by cube id.
pub fn beta_cubes(mu: &DiscreteMeasure, lattice: &CubeLattice, exec: Execution) -> Vec<Option<BetaValue>> {
    exec::map(exec, lattice.cubes(), |q| beta_cube(mu, q).ok())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BetaProfile {
    pub x0: Point2,
    pub scales: Vec<f64>,
    pub betas: Vec<f64>,
    pub cumsum: Vec<f64>,
}

impl BetaProfile {
    pub fn total(&self) -> f64 {
        self.cumsum.last().copied().unwrap_or(0.0)
    }

    /// `true` when the sum stays within `tau`.
    pub fn is_small(&self, tau: f64) -> bool {
        self.total() <= tau
    }

    pub fn sum_of_squares(&self) -> f64 {
        sum::sum(self.betas.iter().map(|b| b * b))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["scale", "beta", "cumsum"])?;
        for ((s, b), c) in self.scales.iter().zip(&self.betas).zip(&self.cumsum) {
            wtr.write_record([s.to_string(), b.to_string(), c.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// `beta_2(x0, 2^k ell)` for `k = 0..=n` and the running sum.
pub fn multiscale_sum(mu: &DiscreteMeasure, x0: Point2, ell: f64, n: u32) -> Result<BetaProfile> {
    let top = ell * 2f64.powi(n as i32);
    let diam = mu.diameter();
    if top > diam {
        return Err(Error::ScaleOutOfRange { scale: top, diam });
    }
    multiscale_unchecked(mu, x0, ell, n)
}

pub(crate) fn multiscale_unchecked(mu: &DiscreteMeasure, x0: Point2, ell: f64, n: u32) -> Result<BetaProfile> {
    if !(ell > 0.0) {
        return Err(invalid("ell must be positive"));
    }
    let scales: Vec<f64> = (0..=n).map(|k| ell * 2f64.powi(k as i32)).collect();
    let betas = scales
        .iter()
        .map(|&s| beta2(mu, x0, s).map(|b| b.beta))
        .collect::<Result<Vec<f64>>>()?;
    let mut acc = Neumaier::new();
    let cumsum = betas
        .iter()
        .map(|b| {
            acc.add(*b);
            acc.value()
        })
        .collect();
    Ok(BetaProfile {
        x0,
        scales,
        betas,
        cumsum,
    })
}

/// `beta(y, Q) = (int_{A ell}^{2 A ell} beta_2(y, r)^2 dr / r)^{1/2}`, midpoint rule on
/// [`SCALE_PANELS`] geometric panels.
pub fn beta_point_cube(mu: &DiscreteMeasure, y: Point2, cube: &Cube, a: f64) -> Result<f64> {
    beta_point_scale(mu, y, cube.side, a, SCALE_PANELS)
}

/// The same integral with an explicit side length and panel count.
pub fn beta_point_scale(mu: &DiscreteMeasure, y: Point2, side: f64, a: f64, panels: usize) -> Result<f64> {
    if !(a > 1.0) {
        return Err(invalid(format!("A must exceed 1, got {a}")));
    }
    if panels == 0 {
        return Err(invalid("need at least one panel"));
    }
    // dr / r = d(log r): uniform panels in log r
    let du = 2f64.ln() / panels as f64;
    let lo = (a * side).ln();
    let mut acc = Neumaier::new();
    for k in 0..panels {
        let r = (lo + (k as f64 + 0.5) * du).exp();
        let b = beta2(mu, y, r)?.beta;
        acc.add(b * b * du);
    }
    Ok(acc.value().sqrt())
}
