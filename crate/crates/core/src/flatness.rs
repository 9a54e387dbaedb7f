//! Multiscale flatness certification.
//!
//! Per cube `Q` with balanced points `x0, x1` and `r = A l(Q)`, the regime is
//! decided by `sum_{k=0}^{N} beta_2(x0, 2^k l(Q))` against `tau`, where
//! `N = round(log2 A)`. Implicit constants are never baked in: every bound
//! returns its two sides so callers can fit and report ratios.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::beta::{self, BetaProfile};
use crate::cubes::{self, Cube, CubeLattice};
use crate::error::{invalid, Error, Result};
use crate::exec::{self, Execution};
use crate::geom::{Line, Point2};
use crate::kernel::OmegaMap;
use crate::measure::DiscreteMeasure;
use crate::sum::{self, Neumaier};
use crate::symmetry::{self, DefectConfig, Functional};

pub const DEFAULT_A: f64 = 16.0;
pub const DEFAULT_TAU: f64 = 0.1;
pub const DEFAULT_GAMMA: f64 = 0.5;
/// Sums below this are treated as exact zeros when forming ratios.
pub const ROUNDOFF_FLOOR: f64 = 1e-20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    SmallBeta,
    LargeBeta,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::SmallBeta => "small-beta",
            Regime::LargeBeta => "large-beta",
        }
    }
}

fn check_a(a: f64) -> Result<u32> {
    if !(a > 1.0 && a.is_finite()) {
        return Err(invalid(format!("A must exceed 1, got {a}")));
    }
    Ok(a.log2().round().max(1.0) as u32)
}

/// Ratio of two non-negative quantities with both sides floored at roundoff:
/// `0 / 0 = 1` and `x / 0 = inf`.
pub fn floored_ratio(num: f64, den: f64) -> f64 {
    match (num <= ROUNDOFF_FLOOR, den <= ROUNDOFF_FLOOR) {
        (true, true) => 1.0,
        (false, true) => f64::INFINITY,
        (true, false) => 0.0,
        (false, false) => num / den,
    }
}

/// Regime of the cube at its balanced point `x0`, with the profile that decided it.
pub fn regime_at(mu: &DiscreteMeasure, x0: Point2, side: f64, a: f64, tau: f64) -> Result<(Regime, BetaProfile)> {
    let n = check_a(a)?;
    if !(tau > 0.0) {
        return Err(invalid(format!("tau must be positive, got {tau}")));
    }
    let profile = beta::multiscale_unchecked(mu, x0, side, n)?;
    let regime = if profile.is_small(tau) {
        Regime::SmallBeta
    } else {
        Regime::LargeBeta
    };
    Ok((regime, profile))
}

fn check_in_3q(cube: &Cube, z: Point2) -> Result<()> {
    if z.dist(cube.center) > 3.0 * cube.side {
        return Err(invalid(format!(
            "point ({}, {}) is not within 3 l(Q) of the cube center",
            z.x, z.y
        )));
    }
    Ok(())
}

/// `((dist(z, L_Q) / r)^2, (l^2 / r^2) log(A) sum_k beta_2(x0, 2^k l)^2)`.
pub fn dist_bound_small_beta(mu: &DiscreteMeasure, cube: &Cube, z: Point2, a: f64, tau: f64) -> Result<(f64, f64)> {
    check_in_3q(cube, z)?;
    let pair = cubes::balanced_points(mu, cube)?;
    let (regime, profile) = regime_at(mu, pair.x0, cube.side, a, tau)?;
    if regime != Regime::SmallBeta {
        return Err(Error::WrongRegime { sum: profile.total(), tau });
    }
    let line = cubes::balanced_line(pair.x0, pair.x1)?;
    let r = a * cube.side;
    let lhs = (line.dist(z) / r).powi(2);
    let rhs = (cube.side / r).powi(2) * a.ln() * profile.sum_of_squares();
    Ok((lhs, rhs))
}

/// `(dist(z, L_Q), l^2 / r)`.
pub fn dist_bound_large_beta(mu: &DiscreteMeasure, cube: &Cube, z: Point2, a: f64, tau: f64) -> Result<(f64, f64)> {
    check_in_3q(cube, z)?;
    let pair = cubes::balanced_points(mu, cube)?;
    let (regime, profile) = regime_at(mu, pair.x0, cube.side, a, tau)?;
    if regime != Regime::LargeBeta {
        return Err(Error::WrongRegime { sum: profile.total(), tau });
    }
    let line = cubes::balanced_line(pair.x0, pair.x1)?;
    let r = a * cube.side;
    Ok((line.dist(z), cube.side * cube.side / r))
}

/// `beta_2(Q)`, with singleton cubes counted as flat.
fn cube_betas(mu: &DiscreteMeasure, lattice: &CubeLattice, ids: &[usize], exec: Execution) -> Result<Vec<f64>> {
    exec::map(exec, ids, |&id| match beta::beta_cube(mu, lattice.cube(id)) {
        Ok(b) => Ok(b.beta),
        Err(Error::DegenerateCube(_)) => Ok(0.0),
        Err(e) => Err(e),
    })
    .into_iter()
    .collect()
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("gamma must lie in (0, 1), got {gamma}")))
    }
}

/// `sum_{Q in S} beta_2(Q)^2 mu(Q) / l(Q)^(1 + gamma)` over every lattice cube below `S`.
pub fn carleson_sum(mu: &DiscreteMeasure, lattice: &CubeLattice, s: usize, gamma: f64, exec: Execution) -> Result<f64> {
    Ok(carleson_profile(mu, lattice, s, gamma, exec)?.last().copied().unwrap_or(0.0))
}

/// Partial Carleson sums: entry `k` covers the cubes below `S` down to
/// `k` levels under it, so the profile shows growth as levels are added.
pub fn carleson_profile(
    mu: &DiscreteMeasure,
    lattice: &CubeLattice,
    s: usize,
    gamma: f64,
    exec: Execution,
) -> Result<Vec<f64>> {
    check_gamma(gamma)?;
    let top = lattice.cube(s).level;
    let ids = lattice.descendants(s);
    let betas = cube_betas(mu, lattice, &ids, exec)?;
    let mut per_level = vec![Neumaier::new(); (lattice.j_max - top + 1) as usize];
    for (&id, b) in ids.iter().zip(&betas) {
        let q = lattice.cube(id);
        per_level[(q.level - top) as usize].add(b * b * q.mass / q.side.powf(1.0 + gamma));
    }
    let mut total = 0.0;
    Ok(per_level
        .iter()
        .map(|acc| {
            total += acc.value();
            total
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificationRow {
    pub cube_id: usize,
    pub level: i32,
    pub beta: f64,
    pub mass: f64,
    pub side: f64,
    /// `beta_2(Q)^2 mu(Q)`.
    pub lhs: f64,
    /// `(l^2 / r^2) log(A) sum_{Q <= P <= Q^} beta_2(P)^2 mu(Q)`.
    pub rhs: f64,
    pub ratio: f64,
    pub regime: Regime,
    /// `Q^` lies above the lattice, so the chain stops at the top level.
    pub chain_truncated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    pub rows: Vec<CertificationRow>,
    /// `sum beta^2 mu / l^(1 + gamma)` over cubes below `S`.
    pub carleson_lhs: f64,
    /// `(log A / A^2) sum_Q sum_{Q <= P <= Q^} beta(P)^2 mu(Q) / l(Q)^(1 + gamma)`.
    pub carleson_rhs: f64,
    /// Sup of `C_Omega` over sampled centers and scales inside `S`.
    pub symmetry_defect: f64,
    /// Threshold the defect was compared with.
    pub defect_tolerance: f64,
    /// Rows are claimed only when the symmetry hypothesis holds.
    pub claimed: bool,
}

impl Certification {
    /// Largest row ratio; rows with both sides at roundoff are skipped.
    pub fn max_ratio(&self) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.lhs > ROUNDOFF_FLOOR || r.rhs > ROUNDOFF_FLOOR)
            .map(|r| r.ratio)
            .fold(0.0, f64::max)
    }

    /// CSV `cube_id,level,beta,mass,lhs,rhs,ratio,regime`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["cube_id", "level", "beta", "mass", "lhs", "rhs", "ratio", "regime"])?;
        for r in &self.rows {
            out.write_record(&[
                r.cube_id.to_string(),
                r.level.to_string(),
                r.beta.to_string(),
                r.mass.to_string(),
                r.lhs.to_string(),
                r.rhs.to_string(),
                r.ratio.to_string(),
                r.regime.name().to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Per-cube certification rows below `S` and both sides of the Carleson
/// inequality. The symmetry hypothesis is checked with `C_Omega` at up to 20
/// support centers of `S` and 5 scales in `[l_min, l(S)]`, against `5 h / l_min`.
#[allow(clippy::too_many_arguments)]
pub fn certify(
    mu: &DiscreteMeasure,
    om: &OmegaMap,
    lattice: &CubeLattice,
    s: usize,
    a: f64,
    tau: f64,
    gamma: f64,
    exec: Execution,
) -> Result<Certification> {
    let n = check_a(a)? as i32;
    check_gamma(gamma)?;
    let top = lattice.cube(s);
    if lattice.j_max <= top.level {
        return Err(Error::ResolutionExhausted(format!(
            "no levels below cube {s} at level {}",
            top.level
        )));
    }
    let ids = lattice.descendants(s);
    let all: Vec<usize> = (0..lattice.len()).collect();
    let betas = cube_betas(mu, lattice, &all, exec)?;

    let rows = exec::map(exec, &ids, |&id| -> Result<CertificationRow> {
        let q = lattice.cube(id);
        let hat_level = (q.level - n).max(lattice.j_min);
        let mut chain = Neumaier::new();
        for level in (hat_level..=q.level).rev() {
            let p = lattice.ancestor(id, level).expect("ancestors exist at every level");
            chain.add(betas[p].powi(2));
        }
        let regime = match cubes::balanced_points(mu, q) {
            Ok(pair) => regime_at(mu, pair.x0, q.side, a, tau)?.0,
            Err(Error::DegenerateCube(_)) => Regime::SmallBeta,
            Err(e) => return Err(e),
        };
        let lhs = betas[id].powi(2) * q.mass;
        // l^2 / r^2 = 1 / A^2 for r = A l
        let rhs = a.ln() / (a * a) * chain.value() * q.mass;
        Ok(CertificationRow {
            cube_id: id,
            level: q.level,
            beta: betas[id],
            mass: q.mass,
            side: q.side,
            lhs,
            rhs,
            ratio: floored_ratio(lhs, rhs),
            regime,
            chain_truncated: q.level - n < lattice.j_min,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut lhs = Neumaier::new();
    let mut rhs = Neumaier::new();
    for row in &rows {
        let w = row.side.powf(1.0 + gamma);
        lhs.add(row.lhs / w);
        rhs.add(row.rhs / w);
    }

    let l_min = lattice.side(lattice.j_max);
    let mut config = DefectConfig::new(20, l_min, top.side, 5);
    config.center_region = Some((top.center, top.side));
    let h = mu.pitch();
    let defect = symmetry::defect_report(mu, om, &config, Functional::COmega, exec)?.sup_norm;
    let tolerance = 5.0 * h / l_min;
    Ok(Certification {
        rows,
        carleson_lhs: lhs.value(),
        carleson_rhs: rhs.value(),
        symmetry_defect: defect,
        defect_tolerance: tolerance,
        claimed: defect <= tolerance,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatVerdict {
    pub flat: bool,
    /// Total least squares line of the whole measure.
    pub line: Line,
    /// `max_p dist(p, line)`.
    pub max_dev: f64,
    /// `max_dev / diam(spt mu)`.
    pub normalized_dev: f64,
    /// Coefficient of variation of `mu(B(x, diam / 20))` over support points
    /// at least that far from the ends; only computed for flat verdicts.
    pub mass_cv: Option<f64>,
}

/// Flat iff every support point lies within `tol * diam` of the best line.
pub fn classify_flat(mu: &DiscreteMeasure, tol: f64) -> Result<FlatVerdict> {
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    let all: Vec<usize> = (0..mu.len()).collect();
    let (line, _, _) = beta::tls_line(mu, &all, mu.centroid());
    let max_dev = mu.points().iter().map(|&p| line.dist(p)).fold(0.0, f64::max);
    let diam = mu.diameter();
    let normalized_dev = if diam > 0.0 { max_dev / diam } else { 0.0 };
    let flat = normalized_dev <= tol;
    let mass_cv = if flat && diam > 0.0 { Some(mass_cv(mu, &line, diam / 20.0)) } else { None };
    Ok(FlatVerdict {
        flat,
        line,
        max_dev,
        normalized_dev,
        mass_cv,
    })
}

fn mass_cv(mu: &DiscreteMeasure, line: &Line, rho: f64) -> f64 {
    let d = line.direction();
    let ts: Vec<f64> = mu.points().iter().map(|p| p.dot(d)).collect();
    let lo = ts.iter().copied().fold(f64::INFINITY, f64::min) + rho;
    let hi = ts.iter().copied().fold(f64::NEG_INFINITY, f64::max) - rho;
    let pool: Vec<usize> = (0..mu.len()).filter(|&i| ts[i] >= lo && ts[i] <= hi).collect();
    if pool.len() < 2 {
        return 0.0;
    }
    let step = (pool.len() / 50).max(1);
    let masses: Vec<f64> = pool
        .iter()
        .step_by(step)
        .map(|&i| mu.mass_of(&mu.ball_indices(mu.point(i), rho)))
        .collect();
    let n = masses.len() as f64;
    let mean = sum::sum(masses.iter().copied()) / n;
    let var = sum::sum(masses.iter().map(|m| (m - mean).powi(2))) / n;
    var.sqrt() / mean
}
