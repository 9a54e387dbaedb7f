//! Shared fixtures and independent oracles for the integration suites.
#![allow(dead_code)]

use std::f64::consts::PI;

use omegasym::kernel::Harmonic;
use omegasym::{synth, DiscreteMeasure, OmegaMap, Point2};
use rand::{Rng, SeedableRng};

/// Identity, the single sine harmonic, and three mixed kernels.
pub fn kernel_suite() -> Vec<OmegaMap> {
    let mut out = vec![OmegaMap::identity(), OmegaMap::sine(0.01).unwrap()];
    out.extend(random_kernels(3, 11));
    out
}

/// Random admissible kernels with up to four harmonics.
pub fn random_kernels(n: usize, seed: u64) -> Vec<OmegaMap> {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let terms = rng.gen_range(1..=4);
        let coeffs: Vec<Harmonic> = (0..terms)
            .map(|_| {
                let k = rng.gen_range(1..=4u32);
                let scale = 0.02 / (2.0 * k as f64 * terms as f64);
                Harmonic {
                    k,
                    a: rng.gen_range(-scale..scale),
                    b: rng.gen_range(-scale..scale),
                }
            })
            .collect();
        if let Ok(om) = OmegaMap::new(coeffs) {
            if om.is_admissible() {
                out.push(om);
            }
        }
    }
    out
}

/// `n` points uniform in the unit disc with weights in `[0.5, 1.5]`.
pub fn random_cloud(n: usize, seed: u64) -> DiscreteMeasure {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let stretch = rng.gen_range(0.1..1.0);
    let tilt = rng.gen_range(-PI..PI);
    let points = (0..n)
        .map(|_| {
            let r = rng.gen::<f64>().sqrt();
            let p = Point2::polar(r, rng.gen_range(-PI..PI));
            Point2::new(p.x, p.y * stretch).rotate(tilt) * 0.99
        })
        .collect();
    let weights = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    DiscreteMeasure::new(points, weights).unwrap()
}

/// Brute-force `beta_2` oracle over lines `<p, n(theta)> = c`.
pub struct BetaOracle<'a> {
    pub pts: Vec<(Point2, f64)>,
    pub t: f64,
    pub mu: &'a DiscreteMeasure,
}

impl<'a> BetaOracle<'a> {
    pub fn new(mu: &'a DiscreteMeasure, x: Point2, t: f64) -> Self {
        let pts = (0..mu.len())
            .filter(|&i| mu.point(i).dist(x) < t)
            .map(|i| (mu.point(i), mu.weight(i)))
            .collect();
        Self { pts, t, mu }
    }

    /// `beta_2` of the line with normal angle `theta` and offset `c`.
    pub fn cost(&self, theta: f64, c: f64) -> f64 {
        let n = Point2::polar(1.0, theta);
        let s: f64 = self.pts.iter().map(|(p, w)| w * (p.dot(n) - c).powi(2)).sum();
        (s / self.t.powi(3)).sqrt()
    }

    /// Every value on the 180 x 64 grid, angles in `[0, pi)`, offsets over `x +- t`.
    pub fn grid(&self, x: Point2) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(180 * 64);
        for i in 0..180 {
            let theta = PI * i as f64 / 180.0;
            let c0 = x.dot(Point2::polar(1.0, theta));
            for j in 0..64 {
                let c = c0 - self.t + 2.0 * self.t * j as f64 / 63.0;
                out.push((theta, c, self.cost(theta, c)));
            }
        }
        out
    }

    /// Grid search followed by compass search with shrinking steps.
    pub fn refined_min(&self, x: Point2) -> f64 {
        let (mut th, mut c, mut best) = self
            .grid(x)
            .into_iter()
            .min_by(|a, b| a.2.total_cmp(&b.2))
            .unwrap();
        let (mut dth, mut dc) = (PI / 180.0, 2.0 * self.t / 63.0);
        while dth > 1e-13 || dc > 1e-13 * self.t {
            let mut moved = false;
            for (a, b) in [(dth, 0.0), (-dth, 0.0), (0.0, dc), (0.0, -dc)] {
                let v = self.cost(th + a, c + b);
                if v < best {
                    best = v;
                    th += a;
                    c += b;
                    moved = true;
                }
            }
            if !moved {
                dth *= 0.5;
                dc *= 0.5;
            }
        }
        best
    }
}

/// Near-flat measures for the linear/error split: small-amplitude graphs,
/// a noisy line and two exact lines.
pub fn near_flat_suite(h: f64) -> Vec<(&'static str, DiscreteMeasure)> {
    vec![
        ("graph 0.01 sin x", synth::lipschitz_graph(0.01, 1.0, 10.0, h).unwrap()),
        ("graph 0.02 sin 3x", synth::lipschitz_graph(0.02, 3.0, 10.0, h).unwrap()),
        ("graph 0.005 sin 8x", synth::lipschitz_graph(0.005, 8.0, 10.0, h).unwrap()),
        ("noisy line", synth::perturbed_line(10.0, h, 0.002, 1).unwrap()),
        ("line", synth::line(Point2::ORIGIN, 0.0, 10.0, h).unwrap()),
        ("tilted line", synth::line(Point2::ORIGIN, 0.3, 10.0, h).unwrap()),
    ]
}

/// `true` when every member of the cube is at least one side length away
/// from the ends of a centered segment of half-length `half`.
pub fn away_from_ends(mu: &DiscreteMeasure, members: &[usize], side: f64, half: f64) -> bool {
    members.iter().all(|&i| mu.point(i).norm() <= half - side)
}
