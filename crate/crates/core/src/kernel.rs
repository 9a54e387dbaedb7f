//! Odd circle maps and the kernels `K(x) = |x| Omega(x / |x|)` they define.
//!
//! A map is stored through its lift `omega(t) = t + p(t)` with
//! `p(t) = sum_k a_k sin(2kt) + b_k (cos(2kt) - 1)`. Only even frequencies
//! appear, so `omega(t + pi) = omega(t) + pi` and the map is odd; the cosine
//! terms are shifted so that `omega(0) = 0`.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::{self, Execution};
use crate::geom::Point2;

/// Largest bi-Lipschitz defect accepted by the lemma checkers.
pub const ADMISSIBLE_DELTA: f64 = 1.0 / 20.0;

const DERIVATIVE_GRID: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub k: u32,
    pub a: f64,
    pub b: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct KernelFile {
    coeffs: Vec<Harmonic>,
}

#[derive(Clone, Debug)]
pub struct OmegaMap {
    coeffs: Vec<Harmonic>,
    min_deriv: f64,
    max_deriv: f64,
}

impl OmegaMap {
    pub fn identity() -> Self {
        Self {
            coeffs: Vec::new(),
            min_deriv: 1.0,
            max_deriv: 1.0,
        }
    }

    pub fn new(coeffs: Vec<Harmonic>) -> Result<Self> {
        for c in &coeffs {
            if c.k == 0 {
                return Err(invalid("harmonic frequency k must be >= 1"));
            }
            if !(c.a.is_finite() && c.b.is_finite()) {
                return Err(invalid("harmonic coefficients must be finite"));
            }
        }
        let mut om = Self {
            coeffs,
            min_deriv: 1.0,
            max_deriv: 1.0,
        };
        let (lo, hi) = om.derivative_range();
        if lo <= 1e-12 {
            return Err(Error::NotAHomeomorphism { min_derivative: lo });
        }
        om.min_deriv = lo;
        om.max_deriv = hi;
        Ok(om)
    }

    /// `p(t) = amplitude * sin(2t)`.
    pub fn sine(amplitude: f64) -> Result<Self> {
        Self::new(vec![Harmonic {
            k: 1,
            a: amplitude,
            b: 0.0,
        }])
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: KernelFile = serde_json::from_str(text)?;
        Self::new(file.coeffs)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&KernelFile {
            coeffs: self.coeffs.clone(),
        })
        .expect("kernel coefficients serialize")
    }

    pub fn coeffs(&self) -> &[Harmonic] {
        &self.coeffs
    }

    /// The lift `omega(t)`.
    pub fn omega(&self, t: f64) -> f64 {
        t + self
            .coeffs
            .iter()
            .map(|c| {
                let (s, co) = (2.0 * c.k as f64 * t).sin_cos();
                c.a * s + c.b * (co - 1.0)
            })
            .sum::<f64>()
    }

    pub fn omega_prime(&self, t: f64) -> f64 {
        1.0 + self
            .coeffs
            .iter()
            .map(|c| {
                let f = 2.0 * c.k as f64;
                let (s, co) = (f * t).sin_cos();
                f * (c.a * co - c.b * s)
            })
            .sum::<f64>()
    }

    pub fn omega_second(&self, t: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|c| {
                let f = 2.0 * c.k as f64;
                let (s, co) = (f * t).sin_cos();
                -f * f * (c.a * s + c.b * co)
            })
            .sum()
    }

    fn omega_third(&self, t: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|c| {
                let f = 2.0 * c.k as f64;
                let (s, co) = (f * t).sin_cos();
                f * f * f * (c.b * s - c.a * co)
            })
            .sum()
    }

    /// `(inf omega', sup omega')` from a dense grid refined by Newton steps on `omega''`.
    fn derivative_range(&self) -> (f64, f64) {
        if self.coeffs.is_empty() {
            return (1.0, 1.0);
        }
        let kmax = self.coeffs.iter().map(|c| c.k).max().unwrap_or(1) as usize;
        let n = DERIVATIVE_GRID.max(64 * kmax);
        // omega' has period pi
        let step = PI / n as f64;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut prev = self.omega_second(0.0);
        for i in 0..n {
            let t0 = i as f64 * step;
            let d = self.omega_prime(t0);
            lo = lo.min(d);
            hi = hi.max(d);
            let t1 = t0 + step;
            let next = self.omega_second(t1);
            if prev == 0.0 || prev.signum() != next.signum() {
                let t = self.refine_critical(t0, t1);
                let d = self.omega_prime(t);
                lo = lo.min(d);
                hi = hi.max(d);
            }
            prev = next;
        }
        (lo, hi)
    }

    /// Root of `omega''` in `[a, b]`: safeguarded Newton iteration.
    fn refine_critical(&self, mut a: f64, mut b: f64) -> f64 {
        let fa = self.omega_second(a);
        if fa == 0.0 {
            return a;
        }
        let mut t = 0.5 * (a + b);
        for _ in 0..60 {
            let f = self.omega_second(t);
            if f == 0.0 {
                break;
            }
            if f.signum() == fa.signum() {
                a = t;
            } else {
                b = t;
            }
            let df = self.omega_third(t);
            let newton = t - f / df;
            t = if df != 0.0 && newton > a && newton < b {
                newton
            } else {
                0.5 * (a + b)
            };
            if b - a < 1e-15 {
                break;
            }
        }
        t
    }

    pub fn min_derivative(&self) -> f64 {
        self.min_deriv
    }

    pub fn max_derivative(&self) -> f64 {
        self.max_deriv
    }

    /// Bi-Lipschitz defect: `max(sup omega', 1 / inf omega') - 1`.
    pub fn delta(&self) -> f64 {
        self.max_deriv.max(1.0 / self.min_deriv) - 1.0
    }

    pub fn is_admissible(&self) -> bool {
        self.delta() <= ADMISSIBLE_DELTA
    }

    pub fn require_admissible(&self) -> Result<()> {
        if self.is_admissible() {
            Ok(())
        } else {
            Err(Error::InadmissibleKernel {
                delta: self.delta(),
                threshold: ADMISSIBLE_DELTA,
            })
        }
    }

    /// `Omega` at the unit vector of angle `t`.
    #[inline]
    pub fn omega_at_angle(&self, t: f64) -> Point2 {
        Point2::polar(1.0, self.omega(t))
    }

    /// `Omega(u / |u|)`.
    pub fn omega_dir(&self, u: Point2) -> Result<Point2> {
        if u == Point2::ORIGIN {
            return Err(Error::UndefinedAtOrigin);
        }
        Ok(self.omega_at_angle(u.arg()))
    }

    /// `K(x) = |x| Omega(x / |x|)`.
    pub fn k(&self, x: Point2) -> Result<Point2> {
        if x == Point2::ORIGIN {
            return Err(Error::UndefinedAtOrigin);
        }
        Ok(self.k_or_zero(x))
    }

    /// `K` extended by `K(0) = 0`, as used inside the measure sums.
    #[inline]
    pub fn k_or_zero(&self, x: Point2) -> Point2 {
        if x == Point2::ORIGIN || self.coeffs.is_empty() {
            x
        } else {
            Point2::polar(x.norm(), self.omega(x.arg()))
        }
    }

    /// `DK(y) v = <y^, v> Omega(y^) + <v, y^_perp> omega'(arg y) Omega(y^)_perp`.
    pub fn dk_apply(&self, y: Point2, v: Point2) -> Result<Point2> {
        if y == Point2::ORIGIN {
            return Err(Error::UndefinedAtOrigin);
        }
        let theta = y.arg();
        let yh = y * (1.0 / y.norm());
        let w = self.omega_at_angle(theta);
        Ok(w * yh.dot(v) + w.perp() * (v.dot(yh.perp()) * self.omega_prime(theta)))
    }

    /// The vector `x^T D^2 K(y) x`.
    ///
    /// Product rule on `K = rho U(theta)` with `U = (cos omega, sin omega)`:
    /// `(x^T D^2 rho x) U + 2 <D rho, x> (DU x) + rho (M1 + M2 + M3)[x]`, where
    /// `M1 = -omega'^2 U (dtheta dtheta^T)`, `M2 = omega'' U_perp (dtheta dtheta^T)`
    /// and `M3 = omega' U_perp D^2 theta`.
    pub fn d2k_quadform(&self, y: Point2, x: Point2) -> Result<Point2> {
        if y == Point2::ORIGIN {
            return Err(Error::UndefinedAtOrigin);
        }
        let rho2 = y.norm_sq();
        let rho = rho2.sqrt();
        let theta = y.arg();
        let (w1, w2) = (self.omega_prime(theta), self.omega_second(theta));
        let u = self.omega_at_angle(theta);
        let up = u.perp();
        let yh = y * (1.0 / rho);

        // x^T D^2 rho x = <y^_perp, x>^2 / rho
        let d2rho = yh.perp().dot(x).powi(2) / rho;
        let drho = yh.dot(x);
        // <grad theta, x> with grad theta = (-y2, y1) / rho^2
        let dtheta = y.perp().dot(x) / rho2;
        let rho4 = rho2 * rho2;
        let h11 = 2.0 * y.x * y.y / rho4;
        let h12 = (y.y * y.y - y.x * y.x) / rho4;
        let d2theta = h11 * (x.x * x.x - x.y * x.y) + 2.0 * h12 * x.x * x.y;

        let m1 = u * (-w1 * w1 * dtheta * dtheta);
        let m2 = up * (w2 * dtheta * dtheta);
        let m3 = up * (w1 * d2theta);
        let cross = up * (2.0 * drho * w1 * dtheta);
        Ok(u * d2rho + cross + (m1 + m2 + m3) * rho)
    }
}

/// Geodesic distance between two points of the unit circle given by angle.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Outcome of the dot-product lemma sweep.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct LemmaReport {
    pub grid_size: usize,
    pub cases: u64,
    /// `<y, nu~> >= 1/10` cases and their violations of `<Omega(y), nu> >= 1/20`.
    pub normal_sign_cases: u64,
    pub normal_sign_violations: u64,
    pub normal_sign_min: f64,
    /// `<y, e_L> >= 1/10` cases and violations of `<Omega(y), Omega(e_L)> >= 1/20`.
    pub tangent_sign_cases: u64,
    pub tangent_sign_violations: u64,
    pub tangent_sign_min: f64,
    /// `|<y, nu~>| <= 1/10` cases and violations of `|<Omega(y), nu>| <= 1/5`.
    pub normal_abs_cases: u64,
    pub normal_abs_violations: u64,
    pub normal_abs_max: f64,
    /// `|<y, e_L>| <= 1/10` cases and violations of `|<Omega(y), Omega(e_L)>| <= 1/5`.
    pub tangent_abs_cases: u64,
    pub tangent_abs_violations: u64,
    pub tangent_abs_max: f64,
}

impl LemmaReport {
    pub fn violations(&self) -> u64 {
        self.normal_sign_violations
            + self.tangent_sign_violations
            + self.normal_abs_violations
            + self.tangent_abs_violations
    }

    fn merge(mut self, o: &LemmaReport) -> Self {
        self.cases += o.cases;
        self.normal_sign_cases += o.normal_sign_cases;
        self.normal_sign_violations += o.normal_sign_violations;
        self.normal_sign_min = self.normal_sign_min.min(o.normal_sign_min);
        self.tangent_sign_cases += o.tangent_sign_cases;
        self.tangent_sign_violations += o.tangent_sign_violations;
        self.tangent_sign_min = self.tangent_sign_min.min(o.tangent_sign_min);
        self.normal_abs_cases += o.normal_abs_cases;
        self.normal_abs_violations += o.normal_abs_violations;
        self.normal_abs_max = self.normal_abs_max.max(o.normal_abs_max);
        self.tangent_abs_cases += o.tangent_abs_cases;
        self.tangent_abs_violations += o.tangent_abs_violations;
        self.tangent_abs_max = self.tangent_abs_max.max(o.tangent_abs_max);
        self
    }

    fn empty(grid_size: usize) -> Self {
        Self {
            grid_size,
            normal_sign_min: f64::INFINITY,
            tangent_sign_min: f64::INFINITY,
            normal_abs_max: 0.0,
            tangent_abs_max: 0.0,
            ..Default::default()
        }
    }
}

/// Sweeps `grid_size` line angles against `grid_size` directions.
///
/// For a line `L` through the origin with direction `e_L` and normal
/// `nu~ = e_L^perp`, `K(L)` is the line spanned by `Omega(e_L)` with normal
/// `nu = Omega(e_L)^perp`.
pub fn check_dot_lemmas(om: &OmegaMap, grid_size: usize, exec: Execution) -> Result<LemmaReport> {
    om.require_admissible()?;
    if grid_size == 0 {
        return Err(invalid("grid size must be positive"));
    }
    let angles: Vec<f64> = (0..grid_size)
        .map(|i| 2.0 * PI * i as f64 / grid_size as f64)
        .collect();
    let dirs: Vec<Point2> = angles.iter().map(|&t| Point2::polar(1.0, t)).collect();
    let images: Vec<Point2> = angles.iter().map(|&t| om.omega_at_angle(t)).collect();
    let partial = exec::map_range(exec, grid_size, |j| {
        let e_l = dirs[j];
        let nu_t = e_l.perp();
        let w_l = images[j];
        let nu = w_l.perp();
        let mut rep = LemmaReport::empty(grid_size);
        for (y, wy) in dirs.iter().zip(&images) {
            rep.cases += 1;
            let s = y.dot(nu_t);
            let c = y.dot(e_l);
            let sn = wy.dot(nu);
            let st = wy.dot(w_l);
            if s >= 0.1 {
                rep.normal_sign_cases += 1;
                rep.normal_sign_min = rep.normal_sign_min.min(sn);
                if sn < 0.05 {
                    rep.normal_sign_violations += 1;
                }
            }
            if c >= 0.1 {
                rep.tangent_sign_cases += 1;
                rep.tangent_sign_min = rep.tangent_sign_min.min(st);
                if st < 0.05 {
                    rep.tangent_sign_violations += 1;
                }
            }
            if s.abs() <= 0.1 {
                rep.normal_abs_cases += 1;
                rep.normal_abs_max = rep.normal_abs_max.max(sn.abs());
                if sn.abs() > 0.2 {
                    rep.normal_abs_violations += 1;
                }
            }
            if c.abs() <= 0.1 {
                rep.tangent_abs_cases += 1;
                rep.tangent_abs_max = rep.tangent_abs_max.max(st.abs());
                if st.abs() > 0.2 {
                    rep.tangent_abs_violations += 1;
                }
            }
        }
        rep
    });
    Ok(partial
        .iter()
        .fold(LemmaReport::empty(grid_size), |acc, r| acc.merge(r)))
}

/// Minimum of `<Omega(y), nu>` over directions exactly on the boundary `<y, nu~> = 1/10`,
/// across `n_lines` line angles.
pub fn normal_sign_boundary_min(om: &OmegaMap, n_lines: usize) -> f64 {
    let alpha = 0.1_f64.asin();
    (0..n_lines)
        .flat_map(|j| {
            let tl = 2.0 * PI * j as f64 / n_lines as f64;
            let nu = om.omega_at_angle(tl).perp();
            [tl + alpha, tl + PI - alpha]
                .into_iter()
                .map(move |t| (t, nu))
        })
        .map(|(t, nu)| om.omega_at_angle(t).dot(nu))
        .fold(f64::INFINITY, f64::min)
}

/// Worst relative gaps between the analytic derivatives and central differences of `K`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeCheck {
    pub samples: usize,
    pub dk_residual: f64,
    /// Measured against `max(|D^2 K[v, v]|, |v|^2 / |y|)`, since `D^2 K` vanishes for the identity.
    pub d2k_residual: f64,
}

/// Compares `dk_apply` and `d2k_quadform` with central differences at `samples`
/// random pairs with `|y|` in `[0.5, 2]` and `|v|` in `[0.5, 1.5]`.
pub fn derivative_check(om: &OmegaMap, samples: usize, seed: u64) -> Result<DerivativeCheck> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let (mut dk, mut d2k) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let y = Point2::polar(rng.gen_range(0.5..2.0), rng.gen_range(-PI..PI));
        let v = Point2::polar(rng.gen_range(0.5..1.5), rng.gen_range(-PI..PI));
        let e = 1e-6;
        let fd = (om.k(y + v * e)? - om.k(y - v * e)?) * (0.5 / e);
        let an = om.dk_apply(y, v)?;
        dk = dk.max(fd.dist(an) / an.norm());
        let e = 1e-4;
        let fd2 = (om.k(y + v * e)? - om.k(y)? * 2.0 + om.k(y - v * e)?) * (1.0 / (e * e));
        let an2 = om.d2k_quadform(y, v)?;
        d2k = d2k.max(fd2.dist(an2) / an2.norm().max(v.norm_sq() / y.norm()));
    }
    Ok(DerivativeCheck {
        samples,
        dk_residual: dk,
        d2k_residual: d2k,
    })
}
