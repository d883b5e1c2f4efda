//! Whitney decompositions of Lipschitz domains and the chain/shadow
//! machinery on top of them.

use super::{long_distance, GeomError, LipschitzDomain};
use crate::grid::ComplexField;
use num_complex::Complex64;
use std::collections::VecDeque;

/// Audited bound on Σ_{S∈SH(P)} ℓ(S)² / ℓ(P)² at the default shadow
/// ratio; worst observation on the test domains is ≈ 25.
pub const SHADOW_AREA_BOUND: f64 = 32.0;

/// Axis-parallel square given by its lower-left corner and side length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Square {
    pub corner: Complex64,
    pub side: f64,
}

impl Square {
    pub fn new(corner: Complex64, side: f64) -> Self {
        Self { corner, side }
    }

    pub fn center(&self) -> Complex64 {
        self.corner + Complex64::new(self.side / 2.0, self.side / 2.0)
    }

    pub fn diam(&self) -> f64 {
        self.side * std::f64::consts::SQRT_2
    }

    /// Euclidean distance between closed squares (0 when they touch).
    pub fn dist_to(&self, other: &Square) -> f64 {
        let gap = |a0: f64, a1: f64, b0: f64, b1: f64| (b0 - a1).max(a0 - b1).max(0.0);
        let gx = gap(
            self.corner.re,
            self.corner.re + self.side,
            other.corner.re,
            other.corner.re + other.side,
        );
        let gy = gap(
            self.corner.im,
            self.corner.im + self.side,
            other.corner.im,
            other.corner.im + other.side,
        );
        (gx * gx + gy * gy).sqrt()
    }

    pub fn contains_point(&self, z: Complex64) -> bool {
        z.re >= self.corner.re
            && z.re < self.corner.re + self.side
            && z.im >= self.corner.im
            && z.im < self.corner.im + self.side
    }

    /// The square scaled by `factor` about its center.
    pub fn dilate(&self, factor: f64) -> Square {
        let c = self.center();
        let side = self.side * factor;
        Square { corner: c - Complex64::new(side / 2.0, side / 2.0), side }
    }
}

/// Dyadic cube with exact integer coordinates: side = root_side/2^level,
/// corner = root_corner + (ix, iy)·side.
#[derive(Debug, Clone, Copy)]
struct DyadicCube {
    level: u32,
    ix: i64,
    iy: i64,
}

/// A Whitney covering: disjoint dyadic cubes filling the domain up to a
/// truncation collar, with side length comparable to the boundary
/// distance, plus the neighbor graph and the ascent paths used by chains.
#[derive(Debug, Clone)]
pub struct WhitneyCovering {
    pub cubes: Vec<Square>,
    /// Distance from each cube to ∂Ω (as measured against the domain's
    /// boundary discretization).
    pub boundary_dist: Vec<f64>,
    /// Adjacency lists: cubes whose closures intersect.
    pub neighbors: Vec<Vec<usize>>,
    /// Index of the central cube.
    pub q0: usize,
    /// Distance comparability constant: c_w·ℓ(Q) ≤ dist(Q,∂Ω) ≤ 4·c_w·ℓ(Q).
    pub c_w: f64,
    /// Shadow calibration: every chain ancestor's shadow of ratio rho0
    /// contains its descendants.
    pub rho0: f64,
    /// Area of Ω not covered because of min_side truncation.
    pub collar_area: f64,
    /// diam(Ω)/ℓ(Q₀).
    pub q0_diam_ratio: f64,
    /// Observed maximum overlap of the dilated family {20Q}.
    pub overlap20: usize,
    /// (side, count) per dyadic generation, largest side first.
    pub generation_census: Vec<(f64, usize)>,
    /// Greedy ascent path from each cube to Q₀ (inclusive on both ends).
    ascents: Vec<Vec<usize>>,
}

/// Builds a Whitney covering with cubes no smaller than `min_side`.
///
/// Subdivision accepts a cube once it lies inside Ω with boundary
/// distance ≥ ℓ(Q); a 2:1 neighbor balance pass follows, and the
/// comparability constant is calibrated from the as-built covering.
pub fn whitney(dom: &LipschitzDomain, min_side: f64) -> Result<WhitneyCovering, GeomError> {
    whitney_with(dom, min_side, 1.0, 5.0)
}

/// [`whitney`] with explicit comparability predicate and shadow ratio.
pub fn whitney_with(
    dom: &LipschitzDomain,
    min_side: f64,
    c_pred: f64,
    rho0: f64,
) -> Result<WhitneyCovering, GeomError> {
    if min_side <= 0.0 {
        return Err(GeomError::InvalidParameter(format!("min_side {min_side} must be > 0")));
    }
    let (lo, hi) = dom.bounding_box();
    let span = (hi.re - lo.re).max(hi.im - lo.im);
    let root_side = 2f64.powi(span.log2().ceil() as i32);
    // Snap the root to the absolute dyadic lattice when the box allows it;
    // otherwise anchor at the bounding box. Subdivision keeps all cubes
    // dyadic relative to the root either way.
    let snap = |v: f64, max: f64| {
        let c = (v / root_side).floor() * root_side;
        if max <= c + root_side {
            c
        } else {
            v
        }
    };
    let root_corner = Complex64::new(snap(lo.re, hi.re), snap(lo.im, hi.im));
    let max_level = ((root_side / min_side).log2().floor() as i64).max(0) as u32;

    let geom = |c: &DyadicCube| -> Square {
        let side = root_side / (1u64 << c.level) as f64;
        Square::new(root_corner + Complex64::new(c.ix as f64 * side, c.iy as f64 * side), side)
    };

    let mut accepted: Vec<DyadicCube> = Vec::new();
    let mut dists: Vec<f64> = Vec::new();
    let mut stack = vec![DyadicCube { level: 0, ix: 0, iy: 0 }];
    while let Some(c) = stack.pop() {
        let sq = geom(&c);
        let d = dom.square_boundary_distance(sq.corner, sq.side);
        let inside = dom.contains(sq.center()) && d > 0.0;
        if inside && d >= c_pred * sq.side {
            accepted.push(c);
            dists.push(d);
            continue;
        }
        // Reject cubes fully outside: distance exceeding the diagonal
        // guarantees no part of Ω intrudes.
        if !inside && d > sq.diam() {
            continue;
        }
        if c.level == max_level {
            // Truncated: too close to the boundary to subdivide further.
            continue;
        }
        for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            stack.push(DyadicCube { level: c.level + 1, ix: 2 * c.ix + dx, iy: 2 * c.iy + dy });
        }
    }
    if accepted.is_empty() {
        return Err(GeomError::EmptyCover { min_side });
    }

    // 2:1 balance: split any cube more than twice as large as a touching
    // neighbor. Children stay inside Ω with distance ≥ the parent's.
    loop {
        let n = accepted.len();
        let touches = |a: &DyadicCube, b: &DyadicCube| -> bool {
            let la = max_level - a.level;
            let lb = max_level - b.level;
            let (ax0, ax1) = (a.ix << la, (a.ix + 1) << la);
            let (ay0, ay1) = (a.iy << la, (a.iy + 1) << la);
            let (bx0, bx1) = (b.ix << lb, (b.ix + 1) << lb);
            let (by0, by1) = (b.iy << lb, (b.iy + 1) << lb);
            ax0 <= bx1 && bx0 <= ax1 && ay0 <= by1 && by0 <= ay1
        };
        let mut split = vec![false; n];
        for i in 0..n {
            for j in 0..n {
                if accepted[i].level + 1 < accepted[j].level && touches(&accepted[i], &accepted[j])
                {
                    split[i] = true;
                    break;
                }
            }
        }
        if !split.iter().any(|&s| s) {
            break;
        }
        let mut next = Vec::with_capacity(n + 8);
        let mut next_d = Vec::with_capacity(n + 8);
        for (i, c) in accepted.iter().enumerate() {
            if split[i] {
                for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    let child =
                        DyadicCube { level: c.level + 1, ix: 2 * c.ix + dx, iy: 2 * c.iy + dy };
                    let sq = geom(&child);
                    next_d.push(dom.square_boundary_distance(sq.corner, sq.side));
                    next.push(child);
                }
            } else {
                next.push(*c);
                next_d.push(dists[i]);
            }
        }
        accepted = next;
        dists = next_d;
    }

    // Canonical order makes downstream runs deterministic.
    let mut order: Vec<usize> = (0..accepted.len()).collect();
    order.sort_by(|&a, &b| {
        let ca = &accepted[a];
        let cb = &accepted[b];
        (ca.level, ca.ix, ca.iy).cmp(&(cb.level, cb.ix, cb.iy))
    });
    let accepted: Vec<DyadicCube> = order.iter().map(|&i| accepted[i]).collect();
    let boundary_dist: Vec<f64> = order.iter().map(|&i| dists[i]).collect();
    let cubes: Vec<Square> = accepted.iter().map(&geom).collect();

    // Comparability calibration: any c_w with hi/4 ≤ c_w ≤ lo works;
    // prefer the predicate constant when it does.
    let mut lo_ratio = f64::INFINITY;
    let mut hi_ratio: f64 = 0.0;
    for (sq, d) in cubes.iter().zip(&boundary_dist) {
        lo_ratio = lo_ratio.min(d / sq.side);
        hi_ratio = hi_ratio.max(d / sq.side);
    }
    if hi_ratio > 4.0 * lo_ratio {
        return Err(GeomError::Comparability { lo: lo_ratio, hi: hi_ratio });
    }
    let c_w = if c_pred >= hi_ratio / 4.0 && c_pred <= lo_ratio {
        c_pred
    } else {
        hi_ratio / 4.0
    };

    let n = cubes.len();
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            let la = max_level - accepted[i].level;
            let lb = max_level - accepted[j].level;
            let a = &accepted[i];
            let b = &accepted[j];
            let (ax0, ax1) = (a.ix << la, (a.ix + 1) << la);
            let (ay0, ay1) = (a.iy << la, (a.iy + 1) << la);
            let (bx0, bx1) = (b.ix << lb, (b.ix + 1) << lb);
            let (by0, by1) = (b.iy << lb, (b.iy + 1) << lb);
            if ax0 <= bx1 && bx0 <= ax1 && ay0 <= by1 && by0 <= ay1 {
                neighbors[i].push(j);
                neighbors[j].push(i);
            }
        }
    }

    // Central cube: largest side, nearest the centroid on ties.
    let centroid = dom.centroid();
    let q0 = (0..n)
        .min_by(|&a, &b| {
            let key = |i: usize| {
                ((cubes[i].center() - centroid).norm(), i)
            };
            cubes[b]
                .side
                .partial_cmp(&cubes[a].side)
                .unwrap()
                .then(key(a).partial_cmp(&key(b)).unwrap())
        })
        .unwrap();

    let covered: f64 = cubes.iter().map(|c| c.side * c.side).sum();
    let collar_area = (dom.area() - covered).max(0.0);

    let mut census_map: Vec<(f64, usize)> = Vec::new();
    for c in &cubes {
        match census_map.iter_mut().find(|(s, _)| (*s - c.side).abs() < 1e-12) {
            Some((_, count)) => *count += 1,
            None => census_map.push((c.side, 1)),
        }
    }
    census_map.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

    let overlap20 = estimate_overlap20(&cubes);

    let mut cov = WhitneyCovering {
        cubes,
        boundary_dist,
        neighbors,
        q0,
        c_w,
        rho0,
        collar_area,
        q0_diam_ratio: dom.diameter() / 1.0,
        overlap20,
        generation_census: census_map,
        ascents: Vec::new(),
    };
    cov.q0_diam_ratio = dom.diameter() / cov.cubes[q0].side;
    cov.ascents = (0..n).map(|i| cov.greedy_ascent(i)).collect();

    // Shadow calibration: grow rho0 until every ascent descendant is
    // captured by its ancestors' shadows.
    let mut needed = cov.rho0;
    for path in &cov.ascents {
        for (a, &s) in path.iter().enumerate() {
            for &q in path.iter().skip(a + 1) {
                let d = long_distance(&cov.cubes[s], &cov.cubes[q]);
                needed = needed.max(d / cov.cubes[q].side);
            }
        }
    }
    if needed > cov.rho0 {
        cov.rho0 = needed * (1.0 + 1e-12);
    }
    Ok(cov)
}

fn estimate_overlap20(cubes: &[Square]) -> usize {
    let mut worst = 0usize;
    for probe in cubes.iter() {
        let z = probe.center();
        let count = cubes.iter().filter(|c| c.dilate(20.0).contains_point(z)).count();
        worst = worst.max(count);
    }
    worst
}

impl WhitneyCovering {
    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// Index of the cube containing a point, if any.
    pub fn locate(&self, z: Complex64) -> Option<usize> {
        self.cubes.iter().position(|c| c.contains_point(z))
    }

    /// Greedy ascent to Q₀: step to the largest neighbor, ties resolved
    /// toward Q₀ in long distance; falls back to a BFS path on stall.
    fn greedy_ascent(&self, start: usize) -> Vec<usize> {
        let q0sq = &self.cubes[self.q0];
        let mut path = vec![start];
        let mut visited = vec![false; self.cubes.len()];
        visited[start] = true;
        let mut cur = start;
        while cur != self.q0 {
            let mut best: Option<usize> = None;
            for &nb in &self.neighbors[cur] {
                if visited[nb] {
                    continue;
                }
                best = Some(match best {
                    None => nb,
                    Some(b) => {
                        let side_b = self.cubes[b].side;
                        let side_n = self.cubes[nb].side;
                        if side_n > side_b + 1e-15 {
                            nb
                        } else if (side_n - side_b).abs() <= 1e-15
                            && long_distance(&self.cubes[nb], q0sq)
                                < long_distance(&self.cubes[b], q0sq)
                        {
                            nb
                        } else {
                            b
                        }
                    }
                });
            }
            match best {
                Some(next) => {
                    visited[next] = true;
                    path.push(next);
                    cur = next;
                }
                None => {
                    // Stalled in a visited pocket: append the shortest
                    // neighbor-graph path to Q₀.
                    let rest = self.bfs_path(cur, self.q0);
                    path.extend(rest.into_iter().skip(1));
                    return path;
                }
            }
        }
        path
    }

    fn bfs_path(&self, from: usize, to: usize) -> Vec<usize> {
        let mut prev = vec![usize::MAX; self.cubes.len()];
        let mut queue = VecDeque::new();
        queue.push_back(from);
        prev[from] = from;
        while let Some(u) = queue.pop_front() {
            if u == to {
                break;
            }
            for &v in &self.neighbors[u] {
                if prev[v] == usize::MAX {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        assert!(prev[to] != usize::MAX, "covering must be connected");
        let mut path = vec![to];
        let mut cur = to;
        while cur != from {
            cur = prev[cur];
            path.push(cur);
        }
        path.reverse();
        path
    }

    pub fn ascent_path(&self, q: usize) -> &[usize] {
        &self.ascents[q]
    }

    /// Mean of |f| over the dilated cube rQ, clipped to the grid.
    pub fn l1_over_dilated(&self, f: &ComplexField, q: usize, r: f64) -> f64 {
        let sq = self.cubes[q].dilate(r);
        let spec = f.spec();
        let h = spec.spacing();
        let n = spec.resolution;
        let n2 = (n / 2) as f64;
        let to_cell = |x: f64, c: f64| ((x - c) / h + n2).floor() as i64;
        let j0 = to_cell(sq.corner.re, spec.center.re).max(0) as usize;
        let k0 = to_cell(sq.corner.im, spec.center.im).max(0) as usize;
        let j1 = (to_cell(sq.corner.re + sq.side, spec.center.re) + 1).min(n as i64) as usize;
        let k1 = (to_cell(sq.corner.im + sq.side, spec.center.im) + 1).min(n as i64) as usize;
        let mut acc = 0.0;
        for j in j0..j1 {
            for k in k0..k1 {
                let z = spec.point(j, k);
                if sq.contains_point(z) {
                    acc += f.at(j, k).norm();
                }
            }
        }
        acc * h * h
    }
}

/// An admissible chain between two Whitney cubes: an ascending subchain
/// from Q toward the central cube, an optional short bridge, and a
/// descending subchain down to S. Consecutive cubes are neighbors.
#[derive(Debug, Clone)]
pub struct Chain {
    pub cubes: Vec<usize>,
    /// Index in `cubes` of the last ascending cube (the pivot Q_S).
    pub pivot_up: usize,
    /// Index in `cubes` of the first descending cube (the pivot S_Q).
    pub pivot_down: usize,
}

impl Chain {
    /// Chain length Σ ℓ(Q_i).
    pub fn length(&self, cov: &WhitneyCovering) -> f64 {
        self.cubes.iter().map(|&i| cov.cubes[i].side).sum()
    }
}

/// Builds the admissible chain from `q` to `s` by splicing the two greedy
/// ascents at the first close pair (long distance ≤ 3·max side).
pub fn chain(cov: &WhitneyCovering, q: usize, s: usize) -> Result<Chain, GeomError> {
    if q == s {
        return Ok(Chain { cubes: vec![q], pivot_up: 0, pivot_down: 0 });
    }
    let up = cov.ascent_path(q);
    let down = cov.ascent_path(s);
    // Scan anti-diagonals so the earliest splice wins.
    let mut splice: Option<(usize, usize)> = None;
    'outer: for total in 0..up.len() + down.len() {
        for i in 0..=total.min(up.len() - 1) {
            let j = total - i;
            if j >= down.len() {
                continue;
            }
            let a = up[i];
            let b = down[j];
            let max_side = cov.cubes[a].side.max(cov.cubes[b].side);
            if long_distance(&cov.cubes[a], &cov.cubes[b]) <= 3.0 * max_side
                && (a == b || cov.neighbors[a].contains(&b))
            {
                splice = Some((i, j));
                break 'outer;
            }
        }
    }
    let (i, j) = splice.ok_or(GeomError::NoChain(q, s))?;
    let mut cubes: Vec<usize> = up[..=i].to_vec();
    let pivot_up = cubes.len() - 1;
    let skip_dup = up[i] == down[j];
    let descent: Vec<usize> = down[..=j].iter().rev().copied().collect();
    let pivot_down = if skip_dup {
        cubes.extend(descent.into_iter().skip(1));
        pivot_up.min(cubes.len() - 1)
    } else {
        cubes.extend(descent);
        pivot_up + 1
    };
    Ok(Chain { cubes, pivot_up, pivot_down })
}

/// Shadow SH_ρ(Q) = {S : D(S,Q) ≤ ρ·ℓ(Q)} as cube indices.
pub fn shadow(cov: &WhitneyCovering, q: usize, rho: f64) -> Vec<usize> {
    let qs = &cov.cubes[q];
    (0..cov.cubes.len())
        .filter(|&s| long_distance(&cov.cubes[s], qs) <= rho * qs.side)
        .collect()
}

/// The normalized double sum of the chain lemma:
/// A_ρ(f,g) / (‖f‖_{L^p(Ω)}·‖g‖_{L^{p'}(Ω)}), with
/// A_ρ = Σ_{Q,S} Σ_{P∈[S,Q]} ℓ(S)²·D(P,S)^{ρ−1}·‖f‖_{L¹(20P)}·‖g‖_{L¹(20Q)}
///        / (ℓ(P)·D(Q,S)^{ρ+2}).
pub fn chain_sum_ratio(
    cov: &WhitneyCovering,
    f: &ComplexField,
    g: &ComplexField,
    dom: &LipschitzDomain,
    rho: f64,
    p: f64,
) -> Result<f64, GeomError> {
    if cov.is_empty() {
        return Err(GeomError::InvalidParameter("empty covering".into()));
    }
    if !(p > 1.0) || !p.is_finite() || rho < 1.0 {
        return Err(GeomError::InvalidParameter(format!("need p in (1,∞), rho ≥ 1; got p={p} rho={rho}")));
    }
    let n = cov.len();
    let f20: Vec<f64> = (0..n).map(|i| cov.l1_over_dilated(f, i, 20.0)).collect();
    let g20: Vec<f64> = (0..n).map(|i| cov.l1_over_dilated(g, i, 20.0)).collect();

    let mut total = 0.0;
    for qi in 0..n {
        for si in 0..n {
            let ch = chain(cov, si, qi)?;
            let dqs = long_distance(&cov.cubes[qi], &cov.cubes[si]);
            let ls2 = cov.cubes[si].side * cov.cubes[si].side;
            let mut inner = 0.0;
            for &pi in &ch.cubes {
                let dps = long_distance(&cov.cubes[pi], &cov.cubes[si]);
                inner += dps.powf(rho - 1.0) * f20[pi] / cov.cubes[pi].side;
            }
            total += ls2 * inner * g20[qi] / dqs.powf(rho + 2.0);
        }
    }

    let pprime = p / (p - 1.0);
    let nf = lp_over_domain(f, dom, p);
    let ng = lp_over_domain(g, dom, pprime);
    if nf == 0.0 || ng == 0.0 {
        return Ok(0.0);
    }
    Ok(total / (nf * ng))
}

fn lp_over_domain(f: &ComplexField, dom: &LipschitzDomain, p: f64) -> f64 {
    let spec = f.spec();
    let h2 = spec.spacing() * spec.spacing();
    let mut acc = 0.0;
    for (j, k, z) in spec.iter_points() {
        if dom.contains(z) {
            acc += f.at(j, k).norm().powf(p);
        }
    }
    (acc * h2).powf(1.0 / p)
}
