//! Symmetry functionals of an odd kernel and the linear/error split of the
//! smoothed functional around a pair of balanced points.
//!
//! Conventions used throughout: `K(0) = 0`, balls are open, and every cutoff
//! is evaluated at `s = |x - p|^2 / r^2`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cubes::{self, Cube};
use crate::cutoff::{CutoffKind, CutoffSpec};
use crate::error::{invalid, Error, Result};
use crate::exec::{self, Execution};
use crate::geom::{Line, Point2};
use crate::kernel::OmegaMap;
use crate::measure::{self, DiscreteMeasure};
use crate::sum::{self, VecSum};

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("radius must be positive, got {r}")))
    }
}

/// `C(x, r) = r^-2 sum_{|x - p| < r} w_p K(x - p)`.
pub fn c_omega(mu: &DiscreteMeasure, om: &OmegaMap, x: Point2, r: f64) -> Result<Point2> {
    check_radius(r)?;
    let mut acc = VecSum::new();
    for i in mu.ball_indices(x, r) {
        acc.add(om.k_or_zero(x - mu.point(i)) * mu.weight(i));
    }
    Ok(acc.value() * (1.0 / (r * r)))
}

/// The same sum weighted by the annulus cutoff `phi`, supported in `r/2 < |x - p| < 2r`.
pub fn c_omega_smooth(mu: &DiscreteMeasure, om: &OmegaMap, x: Point2, r: f64, cutoff: CutoffSpec) -> Result<Point2> {
    cutoff.require(CutoffKind::PhiAnnulus)?;
    check_radius(r)?;
    Ok(smooth_sum(mu, om, x, r, cutoff))
}

fn smooth_sum(mu: &DiscreteMeasure, om: &OmegaMap, x: Point2, r: f64, cutoff: CutoffSpec) -> Point2 {
    let r2 = r * r;
    let mut acc = VecSum::new();
    for i in mu.ball_indices(x, 2.0 * r) {
        let d = x - mu.point(i);
        let f = cutoff.eval(d.norm_sq() / r2);
        if f != 0.0 {
            acc.add(om.k_or_zero(d) * (mu.weight(i) * f));
        }
    }
    acc.value() * (1.0 / r2)
}

/// `sum w_p K(x - p) / |x - p|^2 * varphi(|x - p|^2 / r^2)`.
///
/// `outer` truncates sharply at `|x - p| < outer`; without it the whole
/// support contributes.
pub fn riesz_truncated(
    mu: &DiscreteMeasure,
    om: &OmegaMap,
    x: Point2,
    r: f64,
    cutoff: CutoffSpec,
    outer: Option<f64>,
) -> Result<Point2> {
    cutoff.require(CutoffKind::VarphiTail)?;
    check_radius(r)?;
    let r2 = r * r;
    let mut acc = VecSum::new();
    let mut add = |i: usize| {
        let d = x - mu.point(i);
        let n2 = d.norm_sq();
        let f = cutoff.eval(n2 / r2);
        if f != 0.0 {
            acc.add(om.k_or_zero(d) * (mu.weight(i) * f / n2));
        }
    };
    match outer {
        Some(big) => {
            check_radius(big)?;
            mu.ball_indices(x, big).into_iter().for_each(&mut add);
        }
        None => (0..mu.len()).for_each(&mut add),
    }
    Ok(acc.value())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PvProfile {
    pub epsilons: Vec<f64>,
    pub outer: f64,
    /// Truncated integral over `eps <= |x - p| < outer` for each `eps`.
    pub values: Vec<Point2>,
    /// Largest `|v_{k+1} - v_k|`; zero for a single truncation.
    pub max_step: f64,
}

/// Truncated principal values of `K(x - p) / |x - p|^2` over shrinking holes.
pub fn pv_profile(mu: &DiscreteMeasure, om: &OmegaMap, x: Point2, epsilons: &[f64], outer: f64) -> Result<PvProfile> {
    check_radius(outer)?;
    if epsilons.is_empty() {
        return Err(invalid("empty truncation list"));
    }
    for (k, &e) in epsilons.iter().enumerate() {
        check_radius(e)?;
        if e >= outer {
            return Err(invalid(format!("truncation {e} is not below the outer radius {outer}")));
        }
        if k > 0 && e >= epsilons[k - 1] {
            return Err(invalid("truncations must be strictly decreasing"));
        }
    }
    // Bucket each point by the first truncation that admits it, then
    // accumulate outside in so every entry is a partial sum of disjoint annuli.
    let mut shells = vec![VecSum::new(); epsilons.len()];
    for i in mu.ball_indices(x, outer) {
        let d = x - mu.point(i);
        let n = d.norm();
        if n < epsilons[epsilons.len() - 1] {
            continue;
        }
        let k = epsilons.partition_point(|&e| e > n);
        shells[k].add(om.k_or_zero(d) * (mu.weight(i) / (n * n)));
    }
    let mut values = Vec::with_capacity(epsilons.len());
    let mut total = Point2::ORIGIN;
    for s in &shells {
        total += s.value();
        values.push(total);
    }
    let max_step = values.windows(2).map(|w| w[1].dist(w[0])).fold(0.0, f64::max);
    Ok(PvProfile {
        epsilons: epsilons.to_vec(),
        outer,
        values,
        max_step,
    })
}

/// How `B_{1,2,1}` is normalized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum B121Convention {
    /// The exact first-order term of the cutoff, so that `T` is the derivative
    /// of `x -> C_phi(x0 + x, r)` at 0.
    #[default]
    Derivative,
    /// Half of it: the inner product `<K(-y), DK(-y) x>` without the factor 2.
    Display,
}

/// Geometry attached to a cube: balanced points, the line through them, the
/// unit vectors along and across it, the image normal and the scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeFrame {
    pub x0: Point2,
    pub x1: Point2,
    pub line: Line,
    /// `(x1 - x0) / |x1 - x0|`.
    pub e_l: Point2,
    /// Counter-clockwise normal of `L_Q`.
    pub e_z: Point2,
    /// `Omega(e_l)` rotated counter-clockwise: the normal of `K(L_Q)`.
    pub nu: Point2,
    pub side: f64,
    pub a: f64,
    pub r: f64,
    pub convention: B121Convention,
}

impl CubeFrame {
    pub fn new(om: &OmegaMap, x0: Point2, x1: Point2, side: f64, a: f64, r: f64) -> Result<Self> {
        check_radius(r)?;
        check_radius(side)?;
        if !(a > 1.0 && a.is_finite()) {
            return Err(invalid(format!("A must exceed 1, got {a}")));
        }
        let line = cubes::balanced_line(x0, x1)?;
        let e_l = (x1 - x0).normalized().ok_or(Error::DegeneratePair)?;
        let frame = Self {
            x0,
            x1,
            line,
            e_l,
            e_z: e_l.perp(),
            nu: om.omega_dir(e_l)?.perp(),
            side,
            a,
            r,
            convention: B121Convention::Derivative,
        };
        if !frame.in_window() {
            log::warn!("scale {r} lies outside [A l, 2 A l] = [{}, {}]", a * side, 2.0 * a * side);
        }
        Ok(frame)
    }

    /// Frame on the farthest pair of the cube with `r = A l(Q)`.
    pub fn from_cube(mu: &DiscreteMeasure, om: &OmegaMap, cube: &Cube, a: f64) -> Result<Self> {
        let pair = cubes::balanced_points(mu, cube)?;
        Self::new(om, pair.x0, pair.x1, cube.side, a, a * cube.side)
    }

    pub fn with_convention(mut self, convention: B121Convention) -> Self {
        self.convention = convention;
        self
    }

    pub fn in_window(&self) -> bool {
        let lo = self.a * self.side;
        self.r >= lo * (1.0 - 1e-12) && self.r <= 2.0 * lo * (1.0 + 1e-12)
    }

    /// `x1 - x0`.
    pub fn step(&self) -> Point2 {
        self.x1 - self.x0
    }
}

/// Support indices with `y = p - x0` in the open annulus where `phi` lives.
fn annulus(mu: &DiscreteMeasure, frame: &CubeFrame) -> Vec<(usize, Point2, f64)> {
    let r2 = frame.r * frame.r;
    mu.ball_indices(frame.x0, 2.0 * frame.r)
        .into_iter()
        .filter_map(|i| {
            let y = mu.point(i) - frame.x0;
            let s = y.norm_sq() / r2;
            (s > 0.25).then_some((i, y, s))
        })
        .collect()
}

/// `A_2(x) = r^-2 sum w DK(-y) x phi(|y|^2 / r^2)`.
pub fn a2_term(mu: &DiscreteMeasure, om: &OmegaMap, frame: &CubeFrame, x: Point2) -> Result<Point2> {
    let mut acc = VecSum::new();
    for (i, y, s) in annulus(mu, frame) {
        acc.add(om.dk_apply(-y, x)? * (mu.weight(i) * CutoffSpec::PHI.eval(s)));
    }
    Ok(acc.value() * (1.0 / (frame.r * frame.r)))
}

/// The cutoff part of the linear term, split into the radial piece `I` and the
/// spherical piece `II` of `DK(-y) x`. `B_{1,2,1} = I + II`.
pub fn b121_split(mu: &DiscreteMeasure, om: &OmegaMap, frame: &CubeFrame, x: Point2) -> Result<(Point2, Point2)> {
    let factor = match frame.convention {
        B121Convention::Derivative => 2.0,
        B121Convention::Display => 1.0,
    };
    let r2 = frame.r * frame.r;
    let (mut radial, mut spherical) = (VecSum::new(), VecSum::new());
    for (i, y, s) in annulus(mu, frame) {
        let dphi = CutoffSpec::PHI.derivative(s);
        if dphi == 0.0 {
            continue;
        }
        let k = om.k_or_zero(-y);
        let minus_hat = y * (-1.0 / y.norm());
        let rad = om.omega_dir(-y)? * minus_hat.dot(x);
        let sph = om.dk_apply(-y, x)? - rad;
        let c = mu.weight(i) * dphi * factor / (r2 * r2);
        radial.add(k * (c * k.dot(rad)));
        spherical.add(k * (c * k.dot(sph)));
    }
    Ok((radial.value(), spherical.value()))
}

pub fn b121_term(mu: &DiscreteMeasure, om: &OmegaMap, frame: &CubeFrame, x: Point2) -> Result<Point2> {
    let (i, ii) = b121_split(mu, om, frame, x)?;
    Ok(i + ii)
}

/// `T(x) = A_2(x) + B_{1,2,1}(x)`, linear in `x`.
pub fn linear_term_t(mu: &DiscreteMeasure, om: &OmegaMap, frame: &CubeFrame, x: Point2) -> Result<Point2> {
    Ok(a2_term(mu, om, frame, x)? + b121_term(mu, om, frame, x)?)
}

/// `E(x) = C_phi(x0 + x, r) - C_phi(x0, r) - T(x)`.
pub fn error_term_e(mu: &DiscreteMeasure, om: &OmegaMap, frame: &CubeFrame, x: Point2) -> Result<Point2> {
    if x == Point2::ORIGIN {
        return Ok(Point2::ORIGIN);
    }
    let c1 = smooth_sum(mu, om, frame.x0 + x, frame.r, CutoffSpec::PHI);
    let c0 = smooth_sum(mu, om, frame.x0, frame.r, CutoffSpec::PHI);
    Ok(c1 - c0 - linear_term_t(mu, om, frame, x)?)
}

/// `sum_{B(x0, radius)} w dist(p, L_Q)^power`.
pub fn dist_moment(mu: &DiscreteMeasure, frame: &CubeFrame, radius: f64, power: i32) -> f64 {
    sum::sum(
        mu.ball_indices(frame.x0, radius)
            .into_iter()
            .map(|i| mu.weight(i) * frame.line.dist(mu.point(i)).powi(power)),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EBound {
    /// `|<E(x1 - x0), nu>|`.
    pub lhs: f64,
    /// `|x1 - x0|^2 / r^4 * sum_{B(x0, r)} w dist(p, L_Q)`.
    pub rhs: f64,
    /// The same with the sum over `B(x0, 2r)`, the support of the cutoff.
    pub rhs_support: f64,
}

impl EBound {
    /// `lhs / rhs`, with `0 / 0 = 0`.
    pub fn ratio(&self) -> f64 {
        ratio(self.lhs, self.rhs)
    }

    pub fn ratio_support(&self) -> f64 {
        ratio(self.lhs, self.rhs_support)
    }
}

fn ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a / b
    }
}

pub fn e_bound(mu: &DiscreteMeasure, om: &OmegaMap, frame: &CubeFrame) -> Result<EBound> {
    let x = frame.step();
    let e = error_term_e(mu, om, frame, x)?;
    let scale = x.norm_sq() / frame.r.powi(4);
    Ok(EBound {
        lhs: e.dot(frame.nu).abs(),
        rhs: scale * dist_moment(mu, frame, frame.r, 1),
        rhs_support: scale * dist_moment(mu, frame, 2.0 * frame.r, 1),
    })
}

/// Pairings of `T(e_z)` that drive the lower bound, plus the size of the
/// cutoff part against the squared-distance moment that controls it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TPairings {
    /// `<T(e_z), nu>`.
    pub normal: f64,
    /// `<T(e_z), Omega(e_z)>`.
    pub omega: f64,
    /// `<B_{1,2,1}(e_z), nu>`.
    pub b121_normal: f64,
    /// `<II(e_z), nu>`.
    pub spherical_normal: f64,
    /// `r^-4 sum_{B(x0, 2r)} w dist(p, L_Q)^2`.
    pub dist2_moment: f64,
    pub r: f64,
}

impl TPairings {
    /// `r <T(e_z), nu>`: bounded below on near-flat measures.
    pub fn scaled_normal(&self) -> f64 {
        self.r * self.normal
    }

    pub fn scaled_omega(&self) -> f64 {
        self.r * self.omega
    }
}

pub fn t_pairings(mu: &DiscreteMeasure, om: &OmegaMap, frame: &CubeFrame) -> Result<TPairings> {
    let t = linear_term_t(mu, om, frame, frame.e_z)?;
    let (i, ii) = b121_split(mu, om, frame, frame.e_z)?;
    Ok(TPairings {
        normal: t.dot(frame.nu),
        omega: t.dot(om.omega_dir(frame.e_z)?),
        b121_normal: (i + ii).dot(frame.nu),
        spherical_normal: ii.dot(frame.nu),
        dist2_moment: dist_moment(mu, frame, 2.0 * frame.r, 2) / frame.r.powi(4),
        r: frame.r,
    })
}

/// Upper estimate of `|<A_3(x), nu>|`: the second-order Taylor term with the
/// intermediate point replaced by the worst of `samples` points on `[0, x]`.
pub fn a3_bound(mu: &DiscreteMeasure, om: &OmegaMap, frame: &CubeFrame, x: Point2, samples: usize) -> Result<f64> {
    let samples = samples.max(1);
    let mut acc = sum::Neumaier::new();
    for (i, y, s) in annulus(mu, frame) {
        let mut worst = 0.0f64;
        for k in 0..=samples {
            let xi = x * (k as f64 / samples as f64);
            worst = worst.max(om.d2k_quadform(xi - y, x)?.dot(frame.nu).abs());
        }
        acc.add(mu.weight(i) * CutoffSpec::PHI.eval(s) * worst);
    }
    Ok(acc.value() * 0.5 / (frame.r * frame.r))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    COmega,
    COmegaSmooth,
    Riesz,
}

impl Functional {
    pub fn name(self) -> &'static str {
        match self {
            Functional::COmega => "c_omega",
            Functional::COmegaSmooth => "c_omega_smooth",
            Functional::Riesz => "riesz",
        }
    }
}

impl std::str::FromStr for Functional {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "c_omega" => Ok(Functional::COmega),
            "c_omega_smooth" => Ok(Functional::COmegaSmooth),
            "riesz" => Ok(Functional::Riesz),
            _ => Err(invalid(format!("unknown functional {s}"))),
        }
    }
}

/// Sampling plan for [`defect_report`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefectConfig {
    pub n_centers: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub n_scales: usize,
    /// Centers are drawn only from support points inside this ball.
    pub center_region: Option<(Point2, f64)>,
    /// Outer truncation of the Riesz functional.
    pub riesz_outer: Option<f64>,
}

impl DefectConfig {
    pub fn new(n_centers: usize, r_min: f64, r_max: f64, n_scales: usize) -> Self {
        Self {
            n_centers,
            r_min,
            r_max,
            n_scales,
            center_region: None,
            riesz_outer: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToleranceContext {
    /// Discretization pitch of the input.
    pub h: f64,
    pub r_min: f64,
    pub r_max: f64,
    /// `h / r_min`, the natural unit of discretization error.
    pub h_over_r_min: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub functional: Functional,
    pub centers: Vec<Point2>,
    pub scales: Vec<f64>,
    /// `values[c][s]` is the functional at `centers[c]` and `scales[s]`.
    pub values: Vec<Vec<Point2>>,
    pub sup_norm: f64,
    pub tolerance_context: ToleranceContext,
}

impl SymmetryReport {
    /// Center and scale indices of the largest entry.
    pub fn argmax(&self) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for (c, row) in self.values.iter().enumerate() {
            for (s, v) in row.iter().enumerate() {
                if best.is_none_or(|b| v.norm() > b.2) {
                    best = Some((c, s, v.norm()));
                }
            }
        }
        best.map(|(c, s, _)| (c, s))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per entry: `center_x,center_y,r,value_x,value_y,norm`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["center_x", "center_y", "r", "value_x", "value_y", "norm"])?;
        for (c, row) in self.centers.iter().zip(&self.values) {
            for (r, v) in self.scales.iter().zip(row) {
                out.write_record(&[
                    c.x.to_string(),
                    c.y.to_string(),
                    r.to_string(),
                    v.x.to_string(),
                    v.y.to_string(),
                    v.norm().to_string(),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Support points used as centers: evenly strided over the (restricted) support.
pub fn sample_centers(mu: &DiscreteMeasure, n: usize, region: Option<(Point2, f64)>) -> Result<Vec<Point2>> {
    let pool: Vec<usize> = match region {
        Some((c, rad)) => mu.ball_indices(c, rad),
        None => (0..mu.len()).collect(),
    };
    if pool.is_empty() || n == 0 {
        return Err(invalid("no centers to sample"));
    }
    let len = pool.len();
    let mut picks: Vec<usize> = if n >= len {
        (0..len).collect()
    } else {
        (0..n).map(|k| k * len / n + len / (2 * n)).collect()
    };
    picks.dedup();
    Ok(picks.into_iter().map(|k| mu.point(pool[k])).collect())
}

/// Sup-norm of a symmetry functional over sampled support centers and
/// geometric scales.
pub fn defect_report(
    mu: &DiscreteMeasure,
    om: &OmegaMap,
    config: &DefectConfig,
    functional: Functional,
    exec: Execution,
) -> Result<SymmetryReport> {
    if !(config.r_min > 0.0 && config.r_max >= config.r_min && config.r_max.is_finite()) {
        return Err(invalid(format!("bad scale range [{}, {}]", config.r_min, config.r_max)));
    }
    if config.n_scales == 0 {
        return Err(invalid("need at least one scale"));
    }
    let scales = measure::geometric_scales(config.r_min, config.r_max, config.n_scales);
    let centers = sample_centers(mu, config.n_centers, config.center_region)?;
    let rows = exec::map(exec, &centers, |&x| {
        scales
            .iter()
            .map(|&r| match functional {
                Functional::COmega => c_omega(mu, om, x, r),
                Functional::COmegaSmooth => c_omega_smooth(mu, om, x, r, CutoffSpec::PHI),
                Functional::Riesz => riesz_truncated(mu, om, x, r, CutoffSpec::VARPHI, config.riesz_outer),
            })
            .collect::<Result<Vec<Point2>>>()
    });
    let values = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let sup_norm = values.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
    let h = mu.pitch();
    Ok(SymmetryReport {
        functional,
        centers,
        scales,
        values,
        sup_norm,
        tolerance_context: ToleranceContext {
            h,
            r_min: config.r_min,
            r_max: config.r_max,
            h_over_r_min: h / config.r_min,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use crate::kernel::Harmonic;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn kernels() -> Vec<OmegaMap> {
        vec![
            OmegaMap::identity(),
            OmegaMap::sine(0.01).unwrap(),
            OmegaMap::new(vec![Harmonic { k: 1, a: 0.005, b: -0.004 }, Harmonic { k: 3, a: 0.0, b: 0.003 }]).unwrap(),
        ]
    }

    /// Trapezoid rule on the unit circle for `f(t)`, `t` the arc parameter.
    fn circle_quad(f: impl Fn(f64) -> Point2) -> Point2 {
        let n = 400_000;
        let dt = 2.0 * PI / n as f64;
        let mut acc = VecSum::new();
        for k in 0..n {
            acc.add(f(k as f64 * dt) * dt);
        }
        acc.value()
    }

    #[test]
    fn circle_value() {
        let mu = synth::circle(Point2::ORIGIN, 1.0, 1e-3).unwrap();
        let c = c_omega(&mu, &OmegaMap::identity(), Point2::new(1.0, 0.0), 1.0).unwrap();
        let exact = 2.0 * PI / 3.0 - 3f64.sqrt();
        assert!((c.x - exact).abs() < 1e-3, "{c:?}");
        assert!(c.y.abs() < 1e-3);
    }

    #[test]
    fn line_cancels() {
        let mu = synth::line(Point2::ORIGIN, 0.4, 10.0, 1e-3).unwrap();
        for om in kernels() {
            for i in [4000, 5000, 6100] {
                let x = mu.point(i);
                for r in [0.1, 0.5, 1.3] {
                    // the sharp cutoff may split a symmetric pair at the boundary
                    assert!(c_omega(&mu, &om, x, r).unwrap().norm() < 2.0 * 1e-3 / r);
                    assert!(c_omega_smooth(&mu, &om, x, r, CutoffSpec::PHI).unwrap().norm() < 1e-10);
                    let rz = riesz_truncated(&mu, &om, x, r, CutoffSpec::VARPHI, Some(2.0)).unwrap();
                    assert!(rz.norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn grid_cancels() {
        let mu = synth::lebesgue_grid(2.0, 0.01).unwrap();
        let c = c_omega(&mu, &OmegaMap::identity(), mu.point(100 * 201 + 100), 0.5).unwrap();
        assert!(c.norm() < 1e-10);
    }

    #[test]
    fn smooth_matches_quadrature_on_circle() {
        let mu = synth::circle(Point2::ORIGIN, 1.0, 1e-3).unwrap();
        let x = Point2::new(1.0, 0.0);
        for om in kernels() {
            let got = c_omega_smooth(&mu, &om, x, 0.6, CutoffSpec::PHI).unwrap();
            let want = circle_quad(|t| {
                let d = x - Point2::polar(1.0, t);
                om.k_or_zero(d) * (crate::cutoff::phi(d.norm_sq() / 0.36) / 0.36)
            });
            assert!(got.norm() > 0.01);
            assert!(got.dist(want) < 1e-3, "{got:?} vs {want:?}");

            let got = riesz_truncated(&mu, &om, x, 0.5, CutoffSpec::VARPHI, None).unwrap();
            let want = circle_quad(|t| {
                let d = x - Point2::polar(1.0, t);
                let n2 = d.norm_sq();
                om.k_or_zero(d) * (crate::cutoff::varphi(n2 / 0.25) / n2.max(1e-300))
            });
            assert!(got.dist(want) < 1e-3, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn annulus_support_is_exact() {
        let pts = vec![
            Point2::new(0.49, 0.0),
            Point2::new(0.0, 2.0),
            Point2::new(-3.0, 0.0),
            Point2::new(1.0, 0.0),
        ];
        let mu = DiscreteMeasure::new(pts, vec![1.0; 4]).unwrap();
        let c = c_omega_smooth(&mu, &OmegaMap::identity(), Point2::ORIGIN, 1.0, CutoffSpec::PHI).unwrap();
        assert_eq!(c, Point2::new(-1.0, 0.0));
    }

    #[test]
    fn wrong_cutoffs_are_rejected() {
        let mu = synth::circle(Point2::ORIGIN, 1.0, 0.1).unwrap();
        let om = OmegaMap::identity();
        let x = Point2::ORIGIN;
        assert!(matches!(
            c_omega_smooth(&mu, &om, x, 1.0, CutoffSpec::SHARP),
            Err(Error::InvalidCutoff { .. })
        ));
        assert!(matches!(
            riesz_truncated(&mu, &om, x, 1.0, CutoffSpec::PHI, None),
            Err(Error::InvalidCutoff { .. })
        ));
        assert!(c_omega(&mu, &om, x, 0.0).is_err());
    }

    #[test]
    fn cross_riesz_vanishes_at_center() {
        let mu = synth::cross(Point2::ORIGIN, 4.0, 1e-3).unwrap();
        let r = riesz_truncated(&mu, &OmegaMap::identity(), Point2::ORIGIN, 0.3, CutoffSpec::VARPHI, None).unwrap();
        assert!(r.norm() < 1e-10);
    }

    #[test]
    fn pv_of_symmetric_atoms() {
        let mu = DiscreteMeasure::new(vec![Point2::new(0.3, 0.1), Point2::new(-0.3, -0.1)], vec![1.0, 2.0]).unwrap();
        let p = pv_profile(&mu, &OmegaMap::identity(), Point2::ORIGIN, &[1.0, 0.5, 0.1], 2.0).unwrap();
        assert_eq!(p.values[0], Point2::ORIGIN);
        assert_eq!(p.values[1], Point2::ORIGIN);
        assert!(p.values[2].norm() > 0.1);

        let mu = DiscreteMeasure::new(vec![Point2::new(0.3, 0.1), Point2::new(-0.3, -0.1)], vec![1.0; 2]).unwrap();
        let p = pv_profile(&mu, &OmegaMap::identity(), Point2::ORIGIN, &[0.1, 0.01], 2.0).unwrap();
        assert!(p.values.iter().all(|v| v.norm() < 1e-15));
        assert!(pv_profile(&mu, &OmegaMap::identity(), Point2::ORIGIN, &[0.1, 0.2], 2.0).is_err());
        assert!(pv_profile(&mu, &OmegaMap::identity(), Point2::ORIGIN, &[3.0], 2.0).is_err());
    }

    #[test]
    fn pv_on_graph_matches_direct_sums() {
        let mu = synth::lipschitz_graph(0.01, 1.0, 6.0, 1e-3).unwrap();
        let om = OmegaMap::identity();
        let x = mu.point(mu.len() / 2 + 700);
        let eps = [0.5, 0.25, 0.125, 0.0625, 0.03125];
        let p = pv_profile(&mu, &om, x, &eps, 2.0).unwrap();
        for (k, &e) in eps.iter().enumerate() {
            let direct = sum::vec_sum((0..mu.len()).filter_map(|i| {
                let d = x - mu.point(i);
                let n = d.norm();
                (n >= e && n < 2.0).then(|| d * (mu.weight(i) / (n * n)))
            }));
            assert!(p.values[k].dist(direct) < 1e-9);
        }
        let steps: Vec<f64> = p.values.windows(2).map(|w| w[1].dist(w[0])).collect();
        assert!(steps.windows(2).all(|s| s[1] <= s[0] * 1.01), "{steps:?}");
        assert!(p.max_step < 0.02);
    }

    fn line_frame(om: &OmegaMap) -> (DiscreteMeasure, CubeFrame) {
        let mu = synth::perturbed_line(8.0, 1e-3, 0.002, 7).unwrap();
        let x0 = mu.point(4000);
        let x1 = mu.point(4050);
        let frame = CubeFrame::new(om, x0, x1, 1.0 / 16.0, 16.0, 1.0).unwrap();
        (mu, frame)
    }

    #[test]
    fn t_is_linear() {
        for om in kernels() {
            let (mu, frame) = line_frame(&om);
            let u = Point2::new(0.3, -0.7);
            let v = Point2::new(-1.1, 0.2);
            let tu = linear_term_t(&mu, &om, &frame, u).unwrap();
            let tv = linear_term_t(&mu, &om, &frame, v).unwrap();
            let tw = linear_term_t(&mu, &om, &frame, u * 2.5 + v * -0.5).unwrap();
            assert!(tw.dist(tu * 2.5 + tv * -0.5) < 1e-10 * (1.0 + tw.norm()));
            assert_eq!(linear_term_t(&mu, &om, &frame, Point2::ORIGIN).unwrap(), Point2::ORIGIN);
            assert_eq!(error_term_e(&mu, &om, &frame, Point2::ORIGIN).unwrap(), Point2::ORIGIN);
        }
    }

    #[test]
    fn t_is_the_derivative() {
        for om in kernels() {
            let (mu, frame) = line_frame(&om);
            for v in [Point2::new(1.0, 0.0), Point2::new(0.0, 1.0), Point2::new(0.6, -0.8)] {
                let e = 1e-5;
                let plus = smooth_sum(&mu, &om, frame.x0 + v * e, frame.r, CutoffSpec::PHI);
                let minus = smooth_sum(&mu, &om, frame.x0 - v * e, frame.r, CutoffSpec::PHI);
                let fd = (plus - minus) * (0.5 / e);
                let t = linear_term_t(&mu, &om, &frame, v).unwrap();
                assert!(t.dist(fd) < 1e-5 * (1.0 + t.norm()), "{t:?} vs {fd:?}");
            }
            let half = frame.with_convention(B121Convention::Display);
            let full = b121_term(&mu, &om, &frame, frame.e_z).unwrap();
            let disp = b121_term(&mu, &om, &half, frame.e_z).unwrap();
            assert!(full.dist(disp * 2.0) < 1e-14);
        }
    }

    #[test]
    fn spherical_part_is_normal_blind() {
        for om in kernels() {
            let (mu, frame) = line_frame(&om);
            let p = t_pairings(&mu, &om, &frame).unwrap();
            assert!(p.spherical_normal.abs() < 1e-10);
            assert!(p.b121_normal.abs() <= 2.0 * p.dist2_moment + 1e-12);
            assert!(p.scaled_normal() > 0.5);
            assert!(p.scaled_omega() > 0.5);
        }
    }

    #[test]
    fn e_vanishes_on_a_line() {
        let mu = synth::line(Point2::ORIGIN, 0.0, 10.0, 1e-3).unwrap();
        let om = OmegaMap::identity();
        let frame = CubeFrame::new(&om, mu.point(5000), mu.point(5060), 1.0 / 16.0, 16.0, 1.0).unwrap();
        let e = error_term_e(&mu, &om, &frame, frame.step()).unwrap();
        assert!(e.norm() < 1e-9, "{e:?}");
        let b = e_bound(&mu, &om, &frame).unwrap();
        assert_eq!(b.rhs, 0.0);
        assert!(b.lhs < 1e-12);
    }

    #[test]
    fn e_is_second_order() {
        for om in kernels() {
            let (mu, frame) = line_frame(&om);
            let b = e_bound(&mu, &om, &frame).unwrap();
            assert!(b.rhs > 0.0);
            assert!(b.ratio() < 100.0, "{b:?}");
            let a3 = a3_bound(&mu, &om, &frame, frame.step(), 4).unwrap();
            assert!(a3.is_finite() && a3 >= 0.0);
            // halving the step divides the remainder by about four
            let e1 = error_term_e(&mu, &om, &frame, frame.e_z * 0.02).unwrap().norm();
            let e2 = error_term_e(&mu, &om, &frame, frame.e_z * 0.01).unwrap().norm();
            assert!(e2 < 0.3 * e1, "{e1} {e2}");
        }
    }

    #[test]
    fn frame_geometry() {
        let om = OmegaMap::identity();
        let f = CubeFrame::new(&om, Point2::new(1.0, 1.0), Point2::new(2.0, 1.0), 0.1, 16.0, 1.6).unwrap();
        assert_eq!(f.e_l, Point2::new(1.0, 0.0));
        assert_eq!(f.e_z, Point2::new(0.0, 1.0));
        assert!(f.nu.dist(Point2::new(0.0, 1.0)) < 1e-15);
        assert!(f.in_window());
        let g = CubeFrame::new(&om, Point2::new(1.0, 1.0), Point2::new(2.0, 1.0), 0.1, 16.0, 4.0).unwrap();
        assert!(!g.in_window());
        assert!(CubeFrame::new(&om, Point2::ORIGIN, Point2::ORIGIN, 0.1, 16.0, 1.6).is_err());
    }

    fn line_config() -> DefectConfig {
        DefectConfig {
            center_region: Some((Point2::ORIGIN, 2.0)),
            riesz_outer: Some(2.0),
            ..DefectConfig::new(20, 0.1, 1.0, 5)
        }
    }

    #[test]
    fn defect_of_flat_and_curved() {
        let om = OmegaMap::identity();
        let line = synth::line(Point2::ORIGIN, 0.0, 10.0, 1e-3).unwrap();
        for f in [Functional::COmega, Functional::COmegaSmooth, Functional::Riesz] {
            let rep = defect_report(&line, &om, &line_config(), f, Execution::Sequential).unwrap();
            assert!(rep.sup_norm <= 5.0 * rep.tolerance_context.h_over_r_min, "{f:?}");
            assert_eq!(rep.values.len(), 20);
        }
        let circle = synth::circle(Point2::ORIGIN, 1.0, 1e-3).unwrap();
        let cfg = DefectConfig::new(10, 1.0, 1.0, 1);
        let rep = defect_report(&circle, &om, &cfg, Functional::COmega, Execution::Parallel).unwrap();
        assert!(rep.sup_norm >= 0.3);
        assert!(rep.argmax().is_some());
        let json: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
        for key in ["functional", "centers", "scales", "values", "sup_norm", "tolerance_context"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 11);
    }

    #[test]
    fn modes_agree() {
        let om = OmegaMap::sine(0.01).unwrap();
        let mu = synth::lipschitz_graph(0.05, 2.0, 6.0, 1e-2).unwrap();
        let cfg = DefectConfig::new(15, 0.2, 1.0, 4);
        let a = defect_report(&mu, &om, &cfg, Functional::COmegaSmooth, Execution::Sequential).unwrap();
        let b = defect_report(&mu, &om, &cfg, Functional::COmegaSmooth, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn translation_equivariance() {
        let om = OmegaMap::sine(0.01).unwrap();
        let mu = synth::lipschitz_graph(0.05, 2.0, 6.0, 1e-2).unwrap();
        let v = Point2::new(3.25, -1.5);
        let moved = mu.transform(0.0, 1.0, v).unwrap();
        let cfg = DefectConfig::new(15, 0.2, 1.0, 4);
        let a = defect_report(&mu, &om, &cfg, Functional::COmega, Execution::Sequential).unwrap();
        let b = defect_report(&moved, &om, &cfg, Functional::COmega, Execution::Sequential).unwrap();
        assert!((a.sup_norm - b.sup_norm).abs() < 1e-12);
        assert!(a.centers.iter().zip(&b.centers).all(|(p, q)| (*p + v).dist(*q) < 1e-12));
    }

    #[test]
    fn smooth_functionals_vanish_where_sharp_one_does() {
        let om = OmegaMap::sine(0.01).unwrap();
        let mu = synth::equidistant_lines(3, 1.0, 12.0, 1e-3).unwrap();
        let x = mu.point(mu.len() / 2);
        let grid = measure::geometric_scales(0.05, 3.0, 40);
        assert!(grid.iter().all(|&r| c_omega(&mu, &om, x, r).unwrap().norm() < 1e-10));
        for w in grid.windows(2) {
            let r = (w[0] * w[1]).sqrt();
            assert!(c_omega_smooth(&mu, &om, x, r, CutoffSpec::PHI).unwrap().norm() < 1e-10);
            let rz = riesz_truncated(&mu, &om, x, r, CutoffSpec::VARPHI, Some(4.0)).unwrap();
            assert!(rz.norm() < 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn scale_invariance(s in 0.2..5.0f64, k in 0usize..100) {
            let mu = synth::circle(Point2::new(0.3, -0.2), 1.0, 0.01).unwrap();
            let om = OmegaMap::sine(0.01).unwrap();
            let x = mu.point(k * 6);
            let r = 0.7;
            let a = c_omega(&mu, &om, x, r).unwrap();
            let b = c_omega(&mu.rescale(x, s).unwrap(), &om, Point2::ORIGIN, r / s).unwrap();
            prop_assert!(a.dist(b) < 1e-10);
        }

        #[test]
        fn rotation_equivariance(angle in -PI..PI) {
            let mu = synth::circle(Point2::ORIGIN, 1.0, 0.01).unwrap();
            let om = OmegaMap::identity();
            let x = mu.point(17);
            let a = c_omega(&mu, &om, x, 0.9).unwrap();
            let b = c_omega(&mu.transform(angle, 1.0, Point2::ORIGIN).unwrap(), &om, x.rotate(angle), 0.9).unwrap();
            prop_assert!(a.rotate(angle).dist(b) < 1e-10);
        }
    }
}
