//! Synthetic measures: discretizations of the standard examples.
//!
//! Each generator places points at pitch `h` along the target set and gives
//! every point the local density times `h` (times `h^2` for area measures).

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geom::Point2;
use crate::measure::DiscreteMeasure;

fn check(h: f64, extent: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid(format!("spacing must be positive, got {h}")));
    }
    if !(extent > 0.0 && extent.is_finite()) {
        return Err(invalid(format!("extent must be positive, got {extent}")));
    }
    if extent / h > 5.0e7 {
        return Err(invalid("too many points requested"));
    }
    Ok(())
}

/// Parameters `t_k = (k - n/2) h`, `k = 0..=n`, symmetric about 0.
fn symmetric_params(extent: f64, h: f64) -> Vec<f64> {
    let n = (extent / h).round() as i64;
    (0..=n).map(|k| (2 * k - n) as f64 * 0.5 * h).collect()
}

/// Unit-density segment of length `extent` centered at `center` with direction angle `angle`.
pub fn line(center: Point2, angle: f64, extent: f64, h: f64) -> Result<DiscreteMeasure> {
    check(h, extent)?;
    let d = Point2::polar(1.0, angle);
    let ts = symmetric_params(extent, h);
    let points = ts.iter().map(|&t| center + d * t).collect();
    DiscreteMeasure::new(points, vec![h; ts.len()]).map(|m| m.with_spacing(h))
}

/// Unit-density segment from `a` to `b`.
pub fn segment(a: Point2, b: Point2, h: f64) -> Result<DiscreteMeasure> {
    let len = a.dist(b);
    check(h, len)?;
    let n = (len / h).round().max(1.0) as usize;
    let points = (0..=n).map(|k| a + (b - a) * (k as f64 / n as f64)).collect();
    let w = len / n as f64;
    DiscreteMeasure::new(points, vec![w; n + 1]).map(|m| m.with_spacing(w))
}

/// `m` horizontal unit-density lines at mutual distance `gap`, centered on the origin.
pub fn equidistant_lines(m: usize, gap: f64, extent: f64, h: f64) -> Result<DiscreteMeasure> {
    check(h, extent)?;
    if m == 0 || !(gap > 0.0) {
        return Err(invalid("need m >= 1 lines and a positive gap"));
    }
    let ts = symmetric_params(extent, h);
    let mut points = Vec::with_capacity(m * ts.len());
    for j in 0..m {
        let y = (2 * j as i64 - (m as i64 - 1)) as f64 * 0.5 * gap;
        points.extend(ts.iter().map(|&t| Point2::new(t, y)));
    }
    let n = points.len();
    DiscreteMeasure::new(points, vec![h; n]).map(|mu| mu.with_spacing(h))
}

/// Arc-length measure on a circle.
pub fn circle(center: Point2, radius: f64, h: f64) -> Result<DiscreteMeasure> {
    check(h, radius)?;
    let n = (2.0 * PI * radius / h).round().max(3.0) as usize;
    let w = 2.0 * PI * radius / n as f64;
    let points = (0..n)
        .map(|k| center + Point2::polar(radius, 2.0 * PI * k as f64 / n as f64))
        .collect();
    DiscreteMeasure::new(points, vec![w; n]).map(|m| m.with_spacing(w))
}

/// Two perpendicular unit-density segments crossing at `center`.
pub fn cross(center: Point2, extent: f64, h: f64) -> Result<DiscreteMeasure> {
    line(center, 0.0, extent, h)?.union(&line(center, 0.5 * PI, extent, h)?)
}

/// Arc-length measure on the graph `y = amplitude * sin(frequency * x)`, `|x| <= extent / 2`.
pub fn lipschitz_graph(amplitude: f64, frequency: f64, extent: f64, h: f64) -> Result<DiscreteMeasure> {
    check(h, extent)?;
    let ts = symmetric_params(extent, h);
    let points = ts
        .iter()
        .map(|&t| Point2::new(t, amplitude * (frequency * t).sin()))
        .collect();
    let weights = ts
        .iter()
        .map(|&t| {
            let slope = amplitude * frequency * (frequency * t).cos();
            h * (1.0 + slope * slope).sqrt()
        })
        .collect();
    DiscreteMeasure::new(points, weights).map(|m| m.with_spacing(h))
}

/// Lebesgue measure on the square `[-side/2, side/2]^2`, grid pitch `h`.
pub fn lebesgue_grid(side: f64, h: f64) -> Result<DiscreteMeasure> {
    check(h, side)?;
    let ts = symmetric_params(side, h);
    if ts.len() * ts.len() > 20_000_000 {
        return Err(invalid("too many points requested"));
    }
    let mut points = Vec::with_capacity(ts.len() * ts.len());
    for &y in &ts {
        points.extend(ts.iter().map(|&x| Point2::new(x, y)));
    }
    let n = points.len();
    DiscreteMeasure::new(points, vec![h * h; n]).map(|m| m.with_spacing(h))
}

/// Horizontal unit-density line with i.i.d. Gaussian transverse noise of deviation `sigma`.
pub fn perturbed_line(extent: f64, h: f64, sigma: f64, seed: u64) -> Result<DiscreteMeasure> {
    check(h, extent)?;
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(invalid(format!("noise deviation must be non-negative, got {sigma}")));
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| invalid(e.to_string()))?;
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let ts = symmetric_params(extent, h);
    let points = ts
        .iter()
        .map(|&t| Point2::new(t, normal.sample(&mut rng)))
        .collect();
    DiscreteMeasure::new(points, vec![h; ts.len()]).map(|m| m.with_spacing(h))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Line,
    Segment,
    EquidistantLines,
    Circle,
    Cross,
    LipschitzGraph,
    LebesgueGrid,
    PerturbedLine,
}

/// Declarative description of a synthetic measure.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    /// Point spacing.
    pub h: f64,
    /// Length of lines and graphs, side of the grid, diameter of the circle.
    pub extent: f64,
    /// Number of lines for `equidistant_lines`.
    pub lines: usize,
    /// Distance between lines.
    pub gap: f64,
    /// Graph amplitude.
    pub amplitude: f64,
    /// Graph frequency.
    pub frequency: f64,
    /// Transverse noise for `perturbed_line`.
    pub sigma: f64,
    /// Direction angle for `line`.
    pub angle: f64,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind) -> Self {
        Self {
            kind,
            h: 1e-3,
            extent: 10.0,
            lines: 5,
            gap: 1.0,
            amplitude: 0.01,
            frequency: 1.0,
            sigma: 0.01,
            angle: 0.0,
            seed: 0,
        }
    }

    pub fn generate(&self) -> Result<DiscreteMeasure> {
        match self.kind {
            GeneratorKind::Line => line(Point2::ORIGIN, self.angle, self.extent, self.h),
            GeneratorKind::Segment => segment(Point2::ORIGIN, Point2::polar(self.extent, self.angle), self.h),
            GeneratorKind::EquidistantLines => {
                equidistant_lines(self.lines, self.gap, self.extent, self.h)
            }
            GeneratorKind::Circle => circle(Point2::ORIGIN, 0.5 * self.extent, self.h),
            GeneratorKind::Cross => cross(Point2::ORIGIN, self.extent, self.h),
            GeneratorKind::LipschitzGraph => {
                lipschitz_graph(self.amplitude, self.frequency, self.extent, self.h)
            }
            GeneratorKind::LebesgueGrid => lebesgue_grid(self.extent, self.h),
            GeneratorKind::PerturbedLine => perturbed_line(self.extent, self.h, self.sigma, self.seed),
        }
    }
}
