//! Discrete planar Radon measures.
//!
//! A measure is a finite weighted point cloud; every integral against it is a
//! finite weighted sum, taken over open balls `B(x, r) = {|x - y| < r}` and
//! accumulated with compensated summation in ascending point index.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::{self, Execution};
use crate::geom::Point2;
use crate::hull;
use crate::index::GridIndex;
use crate::sum;

#[derive(Clone, Debug)]
pub struct DiscreteMeasure {
    points: Vec<Point2>,
    weights: Vec<f64>,
    spacing: Option<f64>,
    index: GridIndex,
    diam: OnceLock<f64>,
}

impl DiscreteMeasure {
    pub fn new(points: Vec<Point2>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("measure needs at least one point"));
        }
        if points.len() != weights.len() {
            return Err(invalid(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(invalid(format!("point {i} is not finite")));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(invalid(format!("weight {i} = {} is not positive", weights[i])));
        }
        let index = GridIndex::build(&points);
        Ok(Self {
            points,
            weights,
            spacing: None,
            index,
            diam: OnceLock::new(),
        })
    }

    /// Records the discretization pitch used to build the measure.
    pub fn with_spacing(mut self, h: f64) -> Self {
        self.spacing = (h > 0.0 && h.is_finite()).then_some(h);
        self
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn spacing(&self) -> Option<f64> {
        self.spacing
    }

    pub fn point(&self, i: usize) -> Point2 {
        self.points[i]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn total_mass(&self) -> f64 {
        sum::sum(self.weights.iter().copied())
    }

    /// Diameter of the support.
    pub fn diameter(&self) -> f64 {
        *self.diam.get_or_init(|| {
            let ids: Vec<usize> = (0..self.points.len()).collect();
            hull::diameter(&self.points, &ids)
        })
    }

    /// Weighted centroid of the whole measure.
    pub fn centroid(&self) -> Point2 {
        let m = self.total_mass();
        sum::vec_sum(self.points.iter().zip(&self.weights).map(|(p, w)| *p * *w)) * (1.0 / m)
    }

    /// Indices of support points in the open ball `B(x, r)`, ascending.
    pub fn ball_indices(&self, x: Point2, r: f64) -> Vec<usize> {
        self.index.within(&self.points, x, r, false)
    }

    /// Indices with `|p - x| <= r`, ascending.
    pub fn closed_ball_indices(&self, x: Point2, r: f64) -> Vec<usize> {
        self.index.within(&self.points, x, r, true)
    }

    /// Same as [`ball_indices`](Self::ball_indices) without the index.
    pub fn ball_indices_brute(&self, x: Point2, r: f64) -> Vec<usize> {
        (0..self.points.len())
            .filter(|&i| self.points[i].dist(x) < r)
            .collect()
    }

    pub fn mass_of(&self, ids: &[usize]) -> f64 {
        sum::sum(ids.iter().map(|&i| self.weights[i]))
    }

    /// `mu(B(x, r))` for the open ball.
    pub fn ball_mass(&self, x: Point2, r: f64) -> Result<f64> {
        check_radius(r)?;
        Ok(self.mass_of(&self.ball_indices(x, r)))
    }

    /// Ratios `mu(B(x, r)) / r` for each requested scale.
    pub fn density_profile(&self, x: Point2, scales: &[f64]) -> Result<Vec<f64>> {
        if scales.is_empty() {
            return Err(invalid("empty scale list"));
        }
        scales
            .iter()
            .map(|&r| self.ball_mass(x, r).map(|m| m / r))
            .collect()
    }

    /// Blow-up `p -> (p - x) / r`, `w -> w / r`.
    pub fn rescale(&self, x: Point2, r: f64) -> Result<Self> {
        check_radius(r)?;
        let inv = 1.0 / r;
        let points = self.points.iter().map(|p| (*p - x) * inv).collect();
        let weights = self.weights.iter().map(|w| w * inv).collect();
        let mut out = Self::new(points, weights)?;
        out.spacing = self.spacing.map(|h| h * inv);
        Ok(out)
    }

    /// Restriction to the open ball `B(x, r)`.
    pub fn restrict(&self, x: Point2, r: f64) -> Result<Self> {
        check_radius(r)?;
        let ids = self.ball_indices(x, r);
        if ids.is_empty() {
            return Err(Error::EmptyBall { x: x.x, y: x.y, r });
        }
        let mut out = Self::new(
            ids.iter().map(|&i| self.points[i]).collect(),
            ids.iter().map(|&i| self.weights[i]).collect(),
        )?;
        out.spacing = self.spacing;
        Ok(out)
    }

    /// Image under `p -> rotation(p) * scale + shift`; weights scale with `scale`.
    pub fn transform(&self, rotation: f64, scale: f64, shift: Point2) -> Result<Self> {
        check_radius(scale)?;
        let points = self
            .points
            .iter()
            .map(|p| p.rotate(rotation) * scale + shift)
            .collect();
        let weights = self.weights.iter().map(|w| w * scale).collect();
        let mut out = Self::new(points, weights)?;
        out.spacing = self.spacing.map(|h| h * scale);
        Ok(out)
    }

    /// Union of two measures (points of `other` appended after `self`).
    pub fn union(&self, other: &Self) -> Result<Self> {
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points);
        let mut weights = self.weights.clone();
        weights.extend_from_slice(&other.weights);
        let mut out = Self::new(points, weights)?;
        out.spacing = match (self.spacing, other.spacing) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        Ok(out)
    }

    /// Evenly strided support indices, at most `n` of them.
    pub fn sample_indices(&self, n: usize) -> Vec<usize> {
        let len = self.points.len();
        if n >= len {
            return (0..len).collect();
        }
        let mut out: Vec<usize> = (0..n).map(|k| k * len / n + len / (2 * n)).collect();
        out.dedup();
        out
    }

    /// Discretization pitch: the recorded spacing, else the median nearest-neighbour
    /// distance over at most 1000 sampled points. Zero for a single atom.
    pub fn pitch(&self) -> f64 {
        if let Some(h) = self.spacing {
            return h;
        }
        let diam = self.diameter();
        if diam == 0.0 {
            return 0.0;
        }
        let mut r0 = diam / self.points.len() as f64;
        let mut nn: Vec<f64> = Vec::new();
        for i in self.sample_indices(1000) {
            let p = self.points[i];
            let mut r = r0;
            loop {
                let d = self
                    .index
                    .within(&self.points, p, r, false)
                    .into_iter()
                    .filter(|&j| j != i)
                    .map(|j| self.points[j].dist(p))
                    .fold(f64::INFINITY, f64::min);
                if d.is_finite() {
                    nn.push(d);
                    break;
                }
                r *= 2.0;
            }
            r0 = r0.max(r * 0.5);
        }
        nn.sort_by(f64::total_cmp);
        nn[nn.len() / 2]
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("radius must be positive, got {r}")))
    }
}

/// Empirical Ahlfors-regularity constants.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegularityReport {
    /// `max(1, sup mu(B(x, r)) / r)`.
    pub c0_upper: f64,
    /// `max(1, sup r / mu(B(x, r)))`.
    pub c0_lower: f64,
    pub scale_range: (f64, f64),
    pub samples: usize,
}

impl RegularityReport {
    /// The single constant `C0` with `C0^-1 r <= mu(B(x, r)) <= C0 r` on the samples.
    pub fn c0(&self) -> f64 {
        self.c0_upper.max(self.c0_lower)
    }
}

pub fn geometric_scales(r_min: f64, r_max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![r_min],
        _ => (0..n)
            .map(|i| r_min * (r_max / r_min).powf(i as f64 / (n - 1) as f64))
            .collect(),
    }
}

pub fn ahlfors_report(
    mu: &DiscreteMeasure,
    r_min: f64,
    r_max: f64,
    n_centers: usize,
    n_scales: usize,
    exec: Execution,
) -> Result<RegularityReport> {
    if !(r_min > 0.0) || r_min >= r_max {
        return Err(invalid(format!("need 0 < r_min < r_max, got [{r_min}, {r_max}]")));
    }
    let diam = mu.diameter();
    if r_max > diam {
        return Err(Error::ScaleOutOfRange { scale: r_max, diam });
    }
    if n_centers == 0 || n_scales < 2 {
        return Err(invalid("need at least one center and two scales"));
    }
    let centers: Vec<Point2> = mu.sample_indices(n_centers).iter().map(|&i| mu.point(i)).collect();
    let scales = geometric_scales(r_min, r_max, n_scales);
    ahlfors_report_at(mu, &centers, &scales, exec)
}

/// Regularity constants over an explicit set of centers and scales.
pub fn ahlfors_report_at(
    mu: &DiscreteMeasure,
    centers: &[Point2],
    scales: &[f64],
    exec: Execution,
) -> Result<RegularityReport> {
    if centers.is_empty() || scales.is_empty() {
        return Err(invalid("empty center or scale set"));
    }
    for &r in scales {
        check_radius(r)?;
    }
    let per_center = exec::map(exec, centers, |&x| {
        let mut up = 0.0_f64;
        let mut low = 0.0_f64;
        for &r in scales {
            let m = mu.mass_of(&mu.ball_indices(x, r));
            up = up.max(m / r);
            low = low.max(if m > 0.0 { r / m } else { f64::INFINITY });
        }
        (up, low)
    });
    let (up, low) = per_center
        .into_iter()
        .fold((0.0_f64, 0.0_f64), |(a, b), (u, l)| (a.max(u), b.max(l)));
    let lo = scales.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scales.iter().copied().fold(0.0, f64::max);
    Ok(RegularityReport {
        c0_upper: up.max(1.0),
        c0_lower: low.max(1.0),
        scale_range: (lo, hi),
        samples: centers.len() * scales.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn line(h: f64, extent: f64) -> DiscreteMeasure {
        synth::line(Point2::ORIGIN, 0.0, extent, h).unwrap()
    }

    #[test]
    fn ball_mass_on_line() {
        let h = 1e-3;
        let mu = line(h, 10.0);
        let m = mu.ball_mass(Point2::ORIGIN, 1.0).unwrap();
        assert!((m - 2.0).abs() <= 2.0 * h, "{m}");
        assert_eq!(mu.ball_mass(Point2::new(0.0, 1.0), 0.5).unwrap(), 0.0);
        assert!(mu.ball_mass(Point2::ORIGIN, 0.0).is_err());
        assert!(mu.ball_mass(Point2::ORIGIN, -1.0).is_err());
    }

    #[test]
    fn ball_mass_on_circle() {
        let h = 1e-3;
        let mu = synth::circle(Point2::ORIGIN, 1.0, h).unwrap();
        let m = mu.ball_mass(Point2::new(1.0, 0.0), 1.0).unwrap();
        // arc |theta| < pi/3
        let exact = 2.0 * std::f64::consts::PI / 3.0;
        assert!((m - exact).abs() <= 2.0 * h, "{m}");
    }

    #[test]
    fn open_ball_excludes_boundary() {
        let mu = DiscreteMeasure::new(
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)],
            vec![1.0, 1.0],
        )
        .unwrap();
        assert_eq!(mu.ball_mass(Point2::ORIGIN, 1.0).unwrap(), 1.0);
        assert_eq!(mu.closed_ball_indices(Point2::ORIGIN, 1.0), vec![0, 1]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(DiscreteMeasure::new(vec![], vec![]).is_err());
        assert!(DiscreteMeasure::new(vec![Point2::ORIGIN], vec![0.0]).is_err());
        assert!(DiscreteMeasure::new(vec![Point2::new(f64::NAN, 0.0)], vec![1.0]).is_err());
        assert!(DiscreteMeasure::new(vec![Point2::ORIGIN], vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn density_profiles() {
        let h = 1e-3;
        let mu = line(h, 10.0);
        for d in mu.density_profile(Point2::ORIGIN, &[1.0, 0.5, 0.1]).unwrap() {
            assert!((d - 2.0).abs() < 0.03, "{d}");
        }
        let cross = synth::cross(Point2::ORIGIN, 10.0, h).unwrap();
        for d in cross.density_profile(Point2::ORIGIN, &[1.0, 0.5, 0.1]).unwrap() {
            assert!((d - 4.0).abs() < 0.05, "{d}");
        }
        let circle = synth::circle(Point2::ORIGIN, 1.0, h).unwrap();
        let x = Point2::new(1.0, 0.0);
        for r in [1.0, 0.5, 0.1] {
            let d = circle.density_profile(x, &[r]).unwrap()[0];
            let exact = 4.0 * (r / 2.0_f64).asin() / r;
            assert!((d - exact).abs() <= 2.0 * h / r + 1e-12, "{r}: {d} vs {exact}");
        }
        assert!(mu.density_profile(Point2::ORIGIN, &[]).is_err());
    }

    #[test]
    fn ahlfors_line_and_parallel_lines() {
        let mu = line(1e-3, 10.0);
        let rep = ahlfors_report(&mu, 0.1, 1.0, 50, 8, Execution::Parallel).unwrap();
        assert!((rep.c0() - 2.0).abs() < 0.1, "{rep:?}");
        let two = synth::equidistant_lines(2, 1.0, 10.0, 1e-3).unwrap();
        let rep = ahlfors_report(&two, 0.05, 0.4, 50, 8, Execution::Parallel).unwrap();
        assert!((rep.c0() - 2.0).abs() < 0.1, "{rep:?}");
    }

    #[test]
    fn ahlfors_errors() {
        let mu = line(1e-3, 10.0);
        assert!(ahlfors_report(&mu, 0.0, 1.0, 5, 5, Execution::Sequential).is_err());
        assert!(ahlfors_report(&mu, 1.0, 0.5, 5, 5, Execution::Sequential).is_err());
        let single = DiscreteMeasure::new(vec![Point2::ORIGIN], vec![1.0]).unwrap();
        assert!(ahlfors_report(&single, 0.1, 1.0, 5, 5, Execution::Sequential).is_err());
    }

    #[test]
    fn ahlfors_monotone_in_samples() {
        let mu = synth::circle(Point2::ORIGIN, 1.0, 1e-3).unwrap();
        let centers: Vec<Point2> = mu.sample_indices(40).iter().map(|&i| mu.point(i)).collect();
        let scales = geometric_scales(0.05, 1.0, 6);
        let small = ahlfors_report_at(&mu, &centers[..10], &scales[..3], Execution::Sequential).unwrap();
        let big = ahlfors_report_at(&mu, &centers, &scales, Execution::Sequential).unwrap();
        assert!(big.c0_upper >= small.c0_upper);
        assert!(big.c0_lower >= small.c0_lower);
    }

    #[test]
    fn rescale_line_and_identity() {
        let h = 1e-3;
        let mu = line(h, 10.0);
        let x = mu.point(3000);
        let blown = mu.rescale(x, 0.25).unwrap();
        let m = blown.ball_mass(Point2::ORIGIN, 1.0).unwrap();
        assert!((m - 2.0).abs() < 4.0 * h / 0.25, "{m}");
        let same = mu.rescale(Point2::ORIGIN, 1.0).unwrap();
        assert_eq!(same.points(), mu.points());
        assert_eq!(same.weights(), mu.weights());
        assert!(mu.rescale(x, 0.0).is_err());
    }

    #[test]
    fn rescale_circle_is_nearly_flat() {
        let h = 1e-4;
        let mu = synth::circle(Point2::ORIGIN, 1.0, h).unwrap();
        let r = 0.01;
        let blown = mu.rescale(Point2::new(1.0, 0.0), r).unwrap();
        let m = blown.ball_mass(Point2::ORIGIN, 1.0).unwrap();
        assert!((m - 2.0).abs() < 0.02, "{m}");
        let local = blown.restrict(Point2::ORIGIN, 1.0).unwrap();
        // distance to the tangent (vertical) line through 0
        let dev = local.points().iter().map(|p| p.x.abs()).fold(0.0, f64::max);
        assert!(dev <= r / 2.0 + 1e-12, "{dev}");
    }

    #[test]
    fn index_matches_brute_force() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let pts: Vec<Point2> = (0..3000)
            .map(|_| Point2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let ws: Vec<f64> = (0..3000).map(|_| rng.gen_range(0.1..2.0)).collect();
        let mu = DiscreteMeasure::new(pts, ws).unwrap();
        for _ in 0..1000 {
            let x = Point2::new(rng.gen_range(-6.0..6.0), rng.gen_range(-2.0..2.0));
            let r = rng.gen_range(0.001..4.0);
            let fast = mu.ball_indices(x, r);
            let slow = mu.ball_indices_brute(x, r);
            assert_eq!(fast, slow);
            assert_eq!(mu.mass_of(&fast).to_bits(), mu.mass_of(&slow).to_bits());
        }
    }

    proptest! {
        #[test]
        fn rescale_composes(xx in -2.0..2.0f64, xy in -2.0..2.0f64, r in 0.1..4.0f64, s in 0.1..4.0f64) {
            let pts: Vec<Point2> = (0..50).map(|i| Point2::new((i as f64 * 0.37).sin() * 3.0, (i as f64 * 0.11).cos())).collect();
            let mu = DiscreteMeasure::new(pts, vec![0.3; 50]).unwrap();
            let x = Point2::new(xx, xy);
            let a = mu.rescale(x, r).unwrap().rescale(Point2::ORIGIN, s).unwrap();
            let b = mu.rescale(x, r * s).unwrap();
            for (p, q) in a.points().iter().zip(b.points()) {
                prop_assert!((*p - *q).norm() < 1e-12 * (1.0 + q.norm()));
            }
            for (v, w) in a.weights().iter().zip(b.weights()) {
                prop_assert!((v - w).abs() < 1e-12 * w);
            }
        }

        #[test]
        fn ball_mass_monotone(r1 in 0.01..3.0f64, dr in 0.0..3.0f64, cx in -1.0..1.0f64) {
            let mu = synth::circle(Point2::ORIGIN, 1.0, 1e-2).unwrap();
            let x = Point2::new(cx, 0.3);
            prop_assert!(mu.ball_mass(x, r1).unwrap() <= mu.ball_mass(x, r1 + dr).unwrap());
        }
    }
}
