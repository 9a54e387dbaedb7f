//! Compensated summation in a fixed order.
//!
//! Every mass and integral in the crate goes through [`Neumaier`] so results
//! are bit-identical regardless of how the work was scheduled: parallel code
//! computes per-item terms and reduces them here in index order.

use crate::geom::Point2;

#[derive(Clone, Copy, Debug, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of a sequence, in iteration order.
pub fn sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut acc = Neumaier::new();
    for v in it {
        acc.add(v);
    }
    acc.value()
}

#[derive(Clone, Copy, Debug, Default)]
pub struct VecSum {
    x: Neumaier,
    y: Neumaier,
}

impl VecSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: Point2) {
        self.x.add(v.x);
        self.y.add(v.y);
    }

    pub fn value(&self) -> Point2 {
        Point2::new(self.x.value(), self.y.value())
    }
}

pub fn vec_sum<I: IntoIterator<Item = Point2>>(it: I) -> Point2 {
    let mut acc = VecSum::new();
    for v in it {
        acc.add(v);
    }
    acc.value()
}
