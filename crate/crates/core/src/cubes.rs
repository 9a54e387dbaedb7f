//! Dyadic cube lattices on the support of a discrete measure.
//!
//! Level `j` has side `scale * 2^-j`. Each level starts from a greedy maximal
//! separated net of support points, nested across levels (the net of level
//! `j + 1` extends the net of level `j`). Cubes are built bottom-up: the finest
//! level is the nearest-net-point partition, and each finer cube is handed
//! wholly to the coarser net point whose nearest-point cell holds most of its
//! mass. Every level therefore partitions the support and the levels nest
//! exactly.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::beta;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::geom::{Line, Point2};
use crate::hull;
use crate::measure::DiscreteMeasure;
use crate::sum;

/// Finest side length allowed, in units of the discretization pitch.
pub const MIN_SIDE_PITCHES: f64 = 4.0;
/// Bound used to flag cubes whose mass ratio is out of range.
pub const DEFAULT_C0_BOUND: f64 = 10.0;
/// Maximum number of `c_star` doublings in [`good_balanced_points`].
pub const MAX_DOUBLINGS: u32 = 8;
/// Distances within this fraction of the side length count as equal.
const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Cube {
    pub id: usize,
    pub level: i32,
    /// Ascending support indices.
    pub members: Vec<usize>,
    pub center: Point2,
    /// Support index of the center.
    pub center_index: usize,
    pub side: f64,
    pub mass: f64,
    pub diam: f64,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// `mass / side` lies within `[1/C, C]` for the lattice's bound `C`.
    pub mass_ok: bool,
}

impl Cube {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CubeLattice {
    pub j_min: i32,
    pub j_max: i32,
    pub scale: f64,
    /// `max` over cubes of `diam / side`.
    pub c0_diam: f64,
    /// `max` over cubes of `max(mass / side, side / mass)`.
    pub c0_mass: f64,
    pub c0_bound: f64,
    cubes: Vec<Cube>,
    levels: Vec<Vec<usize>>,
    /// `owner[level][point]` is the id of the cube containing the point.
    owner: Vec<Vec<usize>>,
}

struct NetGrid {
    cell: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl NetGrid {
    fn new(cell: f64) -> Self {
        Self {
            cell,
            cells: HashMap::new(),
        }
    }

    fn key(&self, p: Point2) -> (i64, i64) {
        ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64)
    }

    fn insert(&mut self, p: Point2, slot: usize) {
        let k = self.key(p);
        self.cells.entry(k).or_default().push(slot);
    }

    /// Slots in the 3x3 block of cells around `p`.
    fn near(&self, p: Point2) -> impl Iterator<Item = usize> + '_ {
        let (kx, ky) = self.key(p);
        (kx - 1..=kx + 1)
            .flat_map(move |x| (ky - 1..=ky + 1).map(move |y| (x, y)))
            .filter_map(|k| self.cells.get(&k))
            .flatten()
            .copied()
    }
}

pub fn build_lattice(mu: &DiscreteMeasure, j_min: i32, j_max: i32) -> Result<CubeLattice> {
    build_lattice_scaled(mu, j_min, j_max, 1.0)
}

pub fn build_lattice_scaled(mu: &DiscreteMeasure, j_min: i32, j_max: i32, scale: f64) -> Result<CubeLattice> {
    if j_min > j_max {
        return Err(crate::error::invalid(format!("j_min = {j_min} exceeds j_max = {j_max}")));
    }
    if j_max - j_min > 60 {
        return Err(crate::error::invalid("too many levels"));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(crate::error::invalid(format!("scale must be positive, got {scale}")));
    }
    let side = |j: i32| scale * 2f64.powi(-j);
    let h = mu.pitch();
    if side(j_max) < MIN_SIDE_PITCHES * h {
        return Err(Error::ResolutionExhausted(format!(
            "side {} at level {j_max} is below {MIN_SIDE_PITCHES} x pitch {h}",
            side(j_max)
        )));
    }

    let n = mu.len();
    let pts = mu.points();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        mu.weight(b)
            .total_cmp(&mu.weight(a))
            .then(pts[a].x.total_cmp(&pts[b].x))
            .then(pts[a].y.total_cmp(&pts[b].y))
            .then(a.cmp(&b))
    });

    let n_levels = (j_max - j_min + 1) as usize;
    // nets[l] lists support indices; raw[l][i] is the slot of the nearest net point
    let mut nets: Vec<Vec<usize>> = Vec::with_capacity(n_levels);
    let mut raw: Vec<Vec<usize>> = Vec::with_capacity(n_levels);
    let mut net: Vec<usize> = Vec::new();
    for l in 0..n_levels {
        let ell = side(j_min + l as i32);
        // separation is enforced up to half a pitch, so that dyadic sides that
        // fall between sample points still split their parents evenly
        let tol = TIE_TOLERANCE * ell;
        let slack = tol + 0.5 * h;
        let mut grid = NetGrid::new(ell);
        for (slot, &i) in net.iter().enumerate() {
            grid.insert(pts[i], slot);
        }
        for &i in &order {
            let p = pts[i];
            if grid.near(p).all(|s| pts[net[s]].dist(p) >= ell - slack) {
                grid.insert(p, net.len());
                net.push(i);
            }
        }
        let assign: Vec<usize> = (0..n)
            .map(|i| {
                let p = pts[i];
                let mut best = (f64::INFINITY, usize::MAX);
                for s in grid.near(p) {
                    let d = pts[net[s]].dist(p);
                    if d < best.0 - tol || (d <= best.0 + tol && s < best.1) {
                        best = (d, s);
                    }
                }
                best.1
            })
            .collect();
        nets.push(net.clone());
        raw.push(assign);
    }

    // bottom-up: the finest level is the raw partition, coarser cubes collect
    // whole children
    let mut members: Vec<Vec<Vec<usize>>> = vec![Vec::new(); n_levels];
    let mut parent_slot: Vec<Vec<usize>> = vec![Vec::new(); n_levels];
    let last = n_levels - 1;
    members[last] = vec![Vec::new(); nets[last].len()];
    for i in 0..n {
        members[last][raw[last][i]].push(i);
    }
    for l in (0..last).rev() {
        let mut level_members = vec![Vec::new(); nets[l].len()];
        let mut parents = vec![usize::MAX; nets[l + 1].len()];
        for (slot, child) in members[l + 1].iter().enumerate() {
            if child.is_empty() {
                continue;
            }
            let p = majority_owner(mu, child, &raw[l]);
            parents[slot] = p;
            level_members[p].extend_from_slice(child);
        }
        for m in &mut level_members {
            m.sort_unstable();
        }
        members[l] = level_members;
        parent_slot[l + 1] = parents;
    }

    // ids top-down in net order, skipping net points that ended up without members
    let mut id_of: Vec<Vec<usize>> = Vec::with_capacity(n_levels);
    let mut next = 0;
    for m in &members {
        id_of.push(
            m.iter()
                .map(|v| {
                    if v.is_empty() {
                        usize::MAX
                    } else {
                        next += 1;
                        next - 1
                    }
                })
                .collect(),
        );
    }
    let mut cubes: Vec<Cube> = Vec::with_capacity(next);
    let mut levels = Vec::with_capacity(n_levels);
    for l in 0..n_levels {
        let j = j_min + l as i32;
        let ell = side(j);
        let mut ids = Vec::new();
        for (slot, m) in std::mem::take(&mut members[l]).into_iter().enumerate() {
            if m.is_empty() {
                continue;
            }
            let id = id_of[l][slot];
            let z = pts[nets[l][slot]];
            // the net point itself unless a reassignment moved it to a neighbour
            let c = *m
                .iter()
                .min_by(|&&a, &&b| pts[a].dist(z).total_cmp(&pts[b].dist(z)).then(a.cmp(&b)))
                .expect("non-empty");
            let mass = mu.mass_of(&m);
            let diam = hull::diameter(pts, &m);
            cubes.push(Cube {
                id,
                level: j,
                members: m,
                center: pts[c],
                center_index: c,
                side: ell,
                mass,
                diam,
                parent: (l > 0).then(|| id_of[l - 1][parent_slot[l][slot]]),
                children: Vec::new(),
                mass_ok: true,
            });
            ids.push(id);
        }
        levels.push(ids);
    }
    for id in 0..cubes.len() {
        if let Some(p) = cubes[id].parent {
            cubes[p].children.push(id);
        }
    }

    let mut owner = vec![vec![0usize; n]; n_levels];
    for (l, ids) in levels.iter().enumerate() {
        for &id in ids {
            for &i in &cubes[id].members {
                owner[l][i] = id;
            }
        }
    }

    let mut c0_diam = 0.0_f64;
    let mut c0_mass = 0.0_f64;
    for q in &mut cubes {
        c0_diam = c0_diam.max(q.diam / q.side);
        let ratio = q.mass / q.side;
        let m = ratio.max(1.0 / ratio);
        c0_mass = c0_mass.max(m);
        q.mass_ok = m <= DEFAULT_C0_BOUND;
    }

    Ok(CubeLattice {
        j_min,
        j_max,
        scale,
        c0_diam,
        c0_mass,
        c0_bound: DEFAULT_C0_BOUND,
        cubes,
        levels,
        owner,
    })
}

/// The raw cell holding the largest share of `child`'s mass (ties to the lower slot).
fn majority_owner(mu: &DiscreteMeasure, child: &[usize], raw: &[usize]) -> usize {
    let mut shares: Vec<(usize, f64)> = Vec::new();
    for &i in child {
        match shares.iter_mut().find(|(s, _)| *s == raw[i]) {
            Some((_, m)) => *m += mu.weight(i),
            None => shares.push((raw[i], mu.weight(i))),
        }
    }
    shares
        .into_iter()
        .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(s, _)| s)
        .expect("non-empty child")
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TreeNode {
    pub level: i32,
    pub id: usize,
    pub center: Point2,
    pub side: f64,
    pub mass: f64,
    pub children: Vec<TreeNode>,
}

impl CubeLattice {
    pub fn cubes(&self) -> &[Cube] {
        &self.cubes
    }

    pub fn cube(&self, id: usize) -> &Cube {
        &self.cubes[id]
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// `C0`: the larger of the diameter and mass constants.
    pub fn c0(&self) -> f64 {
        self.c0_diam.max(self.c0_mass)
    }

    pub fn side(&self, level: i32) -> f64 {
        self.scale * 2f64.powi(-level)
    }

    fn slot(&self, level: i32) -> Option<usize> {
        (self.j_min..=self.j_max)
            .contains(&level)
            .then(|| (level - self.j_min) as usize)
    }

    /// Cube ids at `level`, in net order.
    pub fn level(&self, level: i32) -> &[usize] {
        self.slot(level).map_or(&[], |l| &self.levels[l])
    }

    pub fn level_cubes(&self, level: i32) -> impl Iterator<Item = &Cube> {
        self.level(level).iter().map(|&id| &self.cubes[id])
    }

    /// The cube at `level` containing support point `i`.
    pub fn owner(&self, level: i32, i: usize) -> Option<usize> {
        self.slot(level).and_then(|l| self.owner[l].get(i).copied())
    }

    /// The ancestor of `id` at `level` (itself when `level` is its own level).
    pub fn ancestor(&self, id: usize, level: i32) -> Option<usize> {
        let q = &self.cubes[id];
        if level > q.level {
            return None;
        }
        self.owner(level, q.center_index)
    }

    /// `S` and all its descendants, ordered by id.
    pub fn descendants(&self, id: usize) -> Vec<usize> {
        let mut out = vec![id];
        let mut k = 0;
        while k < out.len() {
            out.extend_from_slice(&self.cubes[out[k]].children);
            k += 1;
        }
        out.sort_unstable();
        out
    }

    /// Every level covers each support point exactly once.
    pub fn check_partition(&self, n_points: usize) -> bool {
        self.levels.iter().all(|ids| {
            let mut seen = vec![false; n_points];
            for &id in ids {
                for &i in &self.cubes[id].members {
                    if i >= n_points || seen[i] {
                        return false;
                    }
                    seen[i] = true;
                }
            }
            seen.into_iter().all(|s| s)
        })
    }

    /// Children are subsets of their parent and the children of a cube cover it.
    pub fn check_nesting(&self) -> bool {
        self.cubes.iter().all(|q| {
            let subsets = q.children.iter().all(|&c| {
                let child = &self.cubes[c];
                child.level == q.level + 1 && child.members.iter().all(|&i| q.contains(i))
            });
            let covered = q.level == self.j_max
                || q.children.iter().map(|&c| self.cubes[c].len()).sum::<usize>() == q.len();
            subsets && covered
        })
    }

    /// Fraction of `mu(Q)` within `tau * side` of support points outside `Q`.
    pub fn boundary_fraction(&self, mu: &DiscreteMeasure, id: usize, tau: f64) -> f64 {
        let q = &self.cubes[id];
        let r = tau * q.side;
        let near = q.members.iter().filter(|&&i| {
            mu.closed_ball_indices(mu.point(i), r)
                .iter()
                .any(|&k| !q.contains(k))
        });
        sum::sum(near.map(|&i| mu.weight(i))) / q.mass
    }

    pub fn tree(&self) -> Vec<TreeNode> {
        fn node(l: &CubeLattice, id: usize) -> TreeNode {
            let q = &l.cubes[id];
            TreeNode {
                level: q.level,
                id,
                center: q.center,
                side: q.side,
                mass: q.mass,
                children: q.children.iter().map(|&c| node(l, c)).collect(),
            }
        }
        self.level(self.j_min).iter().map(|&id| node(self, id)).collect()
    }

    pub fn tree_json(&self) -> String {
        serde_json::to_string_pretty(&self.tree()).expect("tree serializes")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalancedPair {
    pub i0: usize,
    pub i1: usize,
    pub x0: Point2,
    pub x1: Point2,
    /// `|x1 - x0| / side`.
    pub eta: f64,
}

/// The farthest pair of member points.
pub fn balanced_points(mu: &DiscreteMeasure, cube: &Cube) -> Result<BalancedPair> {
    let (i0, i1, d) = hull::farthest_pair(mu.points(), &cube.members).ok_or(Error::DegenerateCube(cube.id))?;
    Ok(BalancedPair {
        i0,
        i1,
        x0: mu.point(i0),
        x1: mu.point(i1),
        eta: d / cube.side,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GoodPair {
    pub pair: BalancedPair,
    /// The `c_star` that produced at least two admissible points.
    pub c_star: f64,
    /// Admissible members.
    pub candidates: usize,
    /// The beta-2 minimizing line of `B_Q`.
    pub line: Line,
}

/// Farthest pair among members that are close to the best line of `B_Q` and whose
/// pointwise `beta(y, Q)^2` is at most `c_star` times its `mu`-average over `Q`.
pub fn good_balanced_points(
    mu: &DiscreteMeasure,
    cube: &Cube,
    a: f64,
    c_star: f64,
    exec: Execution,
) -> Result<GoodPair> {
    if cube.len() < 2 {
        return Err(Error::DegenerateCube(cube.id));
    }
    if !(a > 1.0) {
        return Err(crate::error::invalid(format!("A must exceed 1, got {a}")));
    }
    if !(c_star >= 0.0 && c_star.is_finite()) {
        return Err(crate::error::invalid(format!("c_star must be non-negative, got {c_star}")));
    }
    let bq = beta::beta_cube(mu, cube)?;
    let pointwise = exec::map(exec, &cube.members, |&i| {
        beta::beta_point_cube(mu, mu.point(i), cube, a).map(|b| b * b)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let avg = sum::sum(cube.members.iter().zip(&pointwise).map(|(&i, b)| mu.weight(i) * b)) / cube.mass;
    let dists: Vec<f64> = cube.members.iter().map(|&i| bq.line.dist(mu.point(i))).collect();

    let mut c = c_star;
    for _ in 0..=MAX_DOUBLINGS {
        let ok: Vec<usize> = cube
            .members
            .iter()
            .enumerate()
            .filter(|&(k, _)| dists[k] <= c * bq.beta * cube.side && pointwise[k] <= c * avg)
            .map(|(_, &i)| i)
            .collect();
        if let Some((i0, i1, d)) = hull::farthest_pair(mu.points(), &ok) {
            return Ok(GoodPair {
                pair: BalancedPair {
                    i0,
                    i1,
                    x0: mu.point(i0),
                    x1: mu.point(i1),
                    eta: d / cube.side,
                },
                c_star: c,
                candidates: ok.len(),
                line: bq.line,
            });
        }
        c *= 2.0;
    }
    Err(Error::NoGoodPoints(cube.id))
}

/// The line `L_Q` through two distinct points.
pub fn balanced_line(x0: Point2, x1: Point2) -> Result<Line> {
    Line::through(x0, x1 - x0)
}
