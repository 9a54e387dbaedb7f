//! Planar points and affine lines.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point (or vector) of the plane, identified with a complex number.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn polar(rho: f64, angle: f64) -> Self {
        Self::new(rho * angle.cos(), rho * angle.sin())
    }

    #[inline]
    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    /// Counter-clockwise rotation by 90 degrees.
    #[inline]
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    /// Angle in (-pi, pi].
    #[inline]
    pub fn arg(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0).then(|| self * (1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn rotate(self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl Add for Point2 {
    type Output = Point2;
    #[inline]
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Point2 {
    #[inline]
    fn add_assign(&mut self, o: Point2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Point2 {
    type Output = Point2;
    #[inline]
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    #[inline]
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    #[inline]
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Mul<Point2> for f64 {
    type Output = Point2;
    #[inline]
    fn mul(self, p: Point2) -> Point2 {
        p * self
    }
}

/// An affine line `{p : <p, n> = offset}` with `n` the counter-clockwise normal
/// of the direction `(cos angle, sin angle)`, `angle` in `[0, pi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Line {
    angle: f64,
    offset: f64,
}

impl Line {
    /// Builds the canonical representation from any angle and offset.
    pub fn from_angle_offset(angle: f64, offset: f64) -> Self {
        let mut a = angle.rem_euclid(2.0 * PI);
        let mut c = offset;
        if a >= PI {
            a -= PI;
            c = -c;
        }
        // rem_euclid can round up to exactly 2pi
        if !(0.0..PI).contains(&a) {
            a = 0.0;
        }
        Self { angle: a, offset: c }
    }

    pub fn through(point: Point2, direction: Point2) -> Result<Self> {
        let d = direction.normalized().ok_or(Error::DegeneratePair)?;
        let angle = d.arg();
        let normal = Point2::polar(1.0, angle).perp();
        Ok(Self::from_angle_offset(angle, point.dot(normal)))
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn direction(&self) -> Point2 {
        Point2::polar(1.0, self.angle)
    }

    pub fn normal(&self) -> Point2 {
        self.direction().perp()
    }

    /// Foot of the perpendicular from the origin.
    pub fn anchor(&self) -> Point2 {
        self.normal() * self.offset
    }

    #[inline]
    pub fn signed_dist(&self, p: Point2) -> f64 {
        p.dot(self.normal()) - self.offset
    }

    #[inline]
    pub fn dist(&self, p: Point2) -> f64 {
        self.signed_dist(p).abs()
    }

    pub fn project(&self, p: Point2) -> Point2 {
        p - self.normal() * self.signed_dist(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_angle() {
        let l = Line::through(Point2::new(0.0, 1.0), Point2::new(-1.0, 0.0)).unwrap();
        assert!(l.angle().abs() < 1e-15);
        assert!((l.offset() - 1.0).abs() < 1e-15);
        assert!((l.anchor() - Point2::new(0.0, 1.0)).norm() < 1e-15);
        assert!((l.direction().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distance_and_projection() {
        let l = Line::through(Point2::ORIGIN, Point2::new(1.0, 1.0)).unwrap();
        let p = Point2::new(1.0, -1.0);
        assert!((l.dist(p) - 2f64.sqrt()).abs() < 1e-14);
        assert!(l.dist(l.project(p)) < 1e-14);
    }

    #[test]
    fn zero_direction_rejected() {
        assert!(matches!(
            Line::through(Point2::ORIGIN, Point2::ORIGIN),
            Err(Error::DegeneratePair)
        ));
    }
}
