//! Convex hulls and farthest pairs of indexed point subsets.

use crate::geom::Point2;

fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Indices of the strict hull vertices of `points[ids]` (monotone chain).
///
/// Among coincident points the smallest index is kept.
pub fn hull_indices(points: &[Point2], ids: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = ids.to_vec();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (points[a], points[b]);
        pa.x.total_cmp(&pb.x)
            .then(pa.y.total_cmp(&pb.y))
            .then(a.cmp(&b))
    });
    order.dedup_by(|b, a| points[*a] == points[*b]);
    if order.len() <= 2 {
        return order;
    }
    let mut lower: Vec<usize> = Vec::new();
    for &i in &order {
        while lower.len() >= 2
            && cross(points[lower[lower.len() - 2]], points[lower[lower.len() - 1]], points[i]) <= 0.0
        {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in order.iter().rev() {
        while upper.len() >= 2
            && cross(points[upper[upper.len() - 2]], points[upper[upper.len() - 1]], points[i]) <= 0.0
        {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// The farthest pair `(i, j, |p_i - p_j|)` with `i < j`, ties broken towards the
/// lexicographically smallest index pair. `None` for fewer than two distinct points.
pub fn farthest_pair(points: &[Point2], ids: &[usize]) -> Option<(usize, usize, f64)> {
    let hull = hull_indices(points, ids);
    if hull.len() < 2 {
        return None;
    }
    let mut best: Option<(usize, usize, f64)> = None;
    for (a, &i) in hull.iter().enumerate() {
        for &j in &hull[a + 1..] {
            let d2 = (points[i] - points[j]).norm_sq();
            let pair = (i.min(j), i.max(j));
            let better = match best {
                None => true,
                Some((bi, bj, bd2)) => d2 > bd2 || (d2 == bd2 && pair < (bi, bj)),
            };
            if better {
                best = Some((pair.0, pair.1, d2));
            }
        }
    }
    best.map(|(i, j, d2)| (i, j, d2.sqrt()))
}

pub fn diameter(points: &[Point2], ids: &[usize]) -> f64 {
    farthest_pair(points, ids).map_or(0.0, |(_, _, d)| d)
}
