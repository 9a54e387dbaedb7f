//! Uniform-grid spatial hash for radius queries.

use std::collections::HashMap;

use crate::geom::Point2;

#[derive(Clone, Debug)]
pub struct GridIndex {
    cell: f64,
    origin: Point2,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl GridIndex {
    pub fn build(points: &[Point2]) -> Self {
        let (mut lo, mut hi) = (Point2::new(f64::MAX, f64::MAX), Point2::new(f64::MIN, f64::MIN));
        for p in points {
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let diag = if points.is_empty() { 0.0 } else { (hi - lo).norm() };
        let n = points.len().max(1) as f64;
        let cell = if diag > 0.0 { diag / n.sqrt() } else { 1.0 };
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        let origin = if points.is_empty() { Point2::ORIGIN } else { lo };
        let mut idx = Self {
            cell,
            origin,
            cells: HashMap::new(),
        };
        for (i, p) in points.iter().enumerate() {
            cells.entry(idx.key(*p)).or_default().push(i);
        }
        idx.cells = cells;
        idx
    }

    #[inline]
    fn key(&self, p: Point2) -> (i64, i64) {
        (
            ((p.x - self.origin.x) / self.cell).floor() as i64,
            ((p.y - self.origin.y) / self.cell).floor() as i64,
        )
    }

    /// Indices `i` with `|points[i] - x| < r` (or `<= r` when `closed`), ascending.
    pub fn within(&self, points: &[Point2], x: Point2, r: f64, closed: bool) -> Vec<usize> {
        let inside = |p: Point2| {
            let d = p.dist(x);
            if closed {
                d <= r
            } else {
                d < r
            }
        };
        let mut out = Vec::new();
        // one cell of slack absorbs rounding in the key computation
        let (kx0, ky0) = self.key(Point2::new(x.x - r, x.y - r));
        let (kx1, ky1) = self.key(Point2::new(x.x + r, x.y + r));
        let span = ((kx1 - kx0 + 3) as f64) * ((ky1 - ky0 + 3) as f64);
        if span > self.cells.len() as f64 {
            for members in self.cells.values() {
                out.extend(members.iter().copied().filter(|&i| inside(points[i])));
            }
        } else {
            for kx in (kx0 - 1)..=(kx1 + 1) {
                for ky in (ky0 - 1)..=(ky1 + 1) {
                    if let Some(members) = self.cells.get(&(kx, ky)) {
                        out.extend(members.iter().copied().filter(|&i| inside(points[i])));
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}
