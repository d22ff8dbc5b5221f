//! Puncture-avoiding polylines in `Ḡ` and line integrals of combinations of
//! `∇u` and `∇^⊥u = (−∂_y u, ∂_x u)` along them.
//!
//! Paths are used to transport phases: the lifting of a unit map whose
//! current is `F` is `ψ(x) = ∫_{γ_x} F · τ`.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::PI;

use crate::domain::Domain;
use crate::harmonic_solver::HarmonicField;
use crate::quadrature::GaussLegendre;
use crate::{Error, Result, Vec2};
#[allow(unused_imports)]
use num_traits::Float;

/// Vertices of the polygons that stand in for the boundary curves.
const POLYGON_VERTICES: usize = 1024;
/// Vertices of the loops used as homotopy witnesses.
pub const LOOP_VERTICES: usize = 48;
const GAUSS_POINTS: usize = 16;
const MAX_DEPTH: u32 = 40;

/// `weight_perp·∇^⊥u + weight_grad·∇u` for one field.
#[derive(Debug, Clone, Copy)]
pub struct FieldTerm<'a> {
    pub field: &'a HarmonicField,
    pub weight_perp: f64,
    pub weight_grad: f64,
}

impl<'a> FieldTerm<'a> {
    pub fn perp(field: &'a HarmonicField) -> Self {
        FieldTerm { field, weight_perp: 1.0, weight_grad: 0.0 }
    }

    pub fn grad(field: &'a HarmonicField, weight: f64) -> Self {
        FieldTerm { field, weight_perp: 0.0, weight_grad: weight }
    }
}

fn integrand(terms: &[FieldTerm<'_>], x: Vec2) -> Vec2 {
    let mut v = Vec2::ZERO;
    for t in terms {
        let g = t.field.eval_grad_close(x);
        v += g.perp() * t.weight_perp + g * t.weight_grad;
    }
    v
}

fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let d = b - a;
    let l2 = d.norm_sq();
    if l2 == 0.0 {
        return p.dist(a);
    }
    let s = ((p - a).dot(d) / l2).clamp(0.0, 1.0);
    p.dist(a + d * s)
}

fn segments_cross(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let o1 = (b - a).wedge(c - a);
    let o2 = (b - a).wedge(d - a);
    let o3 = (d - c).wedge(a - c);
    let o4 = (d - c).wedge(b - c);
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

fn segment_segment_distance(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> f64 {
    if segments_cross(a, b, c, d) {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

/// `∫_path (Σ w⊥ ∇^⊥u + w ∇u) · dℓ` by adaptive Gauss–Legendre quadrature
/// on every segment. Fails if the path passes within `clearance` of a
/// source of any field.
pub fn path_integral_perp(terms: &[FieldTerm<'_>], path: &[Vec2], clearance: f64) -> Result<f64> {
    for w in path.windows(2) {
        for t in terms {
            for &(a, _) in t.field.sources().items() {
                let d = point_segment_distance(a, w[0], w[1]);
                if d <= clearance {
                    return Err(Error::PathTooCloseToSingularity(alloc::format!(
                        "segment passes at distance {d:e} from the source at ({}, {})",
                        a.x,
                        a.y
                    )));
                }
            }
        }
    }
    let gl = GaussLegendre::new(GAUSS_POINTS);
    let mut total = 0.0;
    for w in path.windows(2) {
        total += integrate_segment(&gl, terms, w[0], w[1]);
    }
    Ok(total)
}

fn gauss_segment(gl: &GaussLegendre, terms: &[FieldTerm<'_>], p: Vec2, q: Vec2) -> f64 {
    let d = q - p;
    gl.integrate(0.0, 1.0, |s| integrand(terms, p + d * s).dot(d))
}

fn integrate_segment(gl: &GaussLegendre, terms: &[FieldTerm<'_>], p: Vec2, q: Vec2) -> f64 {
    let whole = gauss_segment(gl, terms, p, q);
    refine(gl, terms, p, q, whole, 0)
}

fn refine(gl: &GaussLegendre, terms: &[FieldTerm<'_>], p: Vec2, q: Vec2, whole: f64, depth: u32) -> f64 {
    let m = (p + q) * 0.5;
    let left = gauss_segment(gl, terms, p, m);
    let right = gauss_segment(gl, terms, m, q);
    let sum = left + right;
    if (sum - whole).abs() <= 1e-14 * (1.0 + sum.abs()) || depth >= MAX_DEPTH {
        return sum;
    }
    refine(gl, terms, p, m, left, depth + 1) + refine(gl, terms, m, q, right, depth + 1)
}

/// Where a path starts or ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Endpoint {
    Interior(Vec2),
    /// Boundary point `γ_c(t)`.
    Boundary { component: usize, t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct State {
    cost: f64,
    cell: usize,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, o: &Self) -> Ordering {
        o.cost.partial_cmp(&self.cost).unwrap_or(Ordering::Equal).then_with(|| o.cell.cmp(&self.cell))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Plans admissible polylines in a domain: they stay at least
/// `margin_boundary` from `∂G` (except for the short legs that attach
/// boundary endpoints) and at least `margin_puncture` from every puncture.
#[derive(Debug, Clone)]
pub struct PathPlanner<'a> {
    domain: &'a Domain,
    polygons: Vec<Vec<Vec2>>,
    punctures: Vec<Vec2>,
    margin_boundary: f64,
    margin_puncture: f64,
    lo: Vec2,
    hi: Vec2,
}

impl<'a> PathPlanner<'a> {
    pub fn new(domain: &'a Domain) -> Self {
        let polygons: Vec<Vec<Vec2>> = domain.curves().iter().map(|c| c.samples(POLYGON_VERTICES)).collect();
        let diam = domain.diameter();
        let mut gap = f64::INFINITY;
        for i in 0..polygons.len() {
            for j in i + 1..polygons.len() {
                for p in polygons[i].iter().step_by(4) {
                    gap = gap.min(domain.curve(j).closest(*p).0);
                }
            }
        }
        let punctures: Vec<Vec2> = domain.punctures().iter().map(|p| p.position).collect();
        let clearance = 2.0 * domain.rho_max();
        let margin_puncture = if punctures.is_empty() { 0.0 } else { domain.band().min(0.4 * clearance) };
        let margin_boundary = (0.02 * diam).min(0.25 * gap).min(0.25 * clearance);
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &polygons[0] {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        PathPlanner { domain, polygons, punctures, margin_boundary, margin_puncture, lo, hi }
    }

    pub fn margin_boundary(&self) -> f64 {
        self.margin_boundary
    }

    pub fn margin_puncture(&self) -> f64 {
        self.margin_puncture
    }

    /// Distance tolerated between a planned path and a puncture when
    /// integrating.
    pub fn clearance(&self) -> f64 {
        0.5 * self.margin_puncture
    }

    fn inside(&self, p: Vec2) -> bool {
        let crossing = |poly: &[Vec2]| {
            let mut inside = false;
            let m = poly.len();
            for i in 0..m {
                let a = poly[i];
                let b = poly[(i + 1) % m];
                if (a.y > p.y) != (b.y > p.y) && p.x < a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x) {
                    inside = !inside;
                }
            }
            inside
        };
        crossing(&self.polygons[0]) && !self.polygons[1..].iter().any(|h| crossing(h))
    }

    fn boundary_distance(&self, p: Vec2) -> f64 {
        let mut d = f64::INFINITY;
        for poly in &self.polygons {
            let m = poly.len();
            for i in 0..m {
                d = d.min(point_segment_distance(p, poly[i], poly[(i + 1) % m]));
            }
        }
        d
    }

    fn puncture_distance(&self, p: Vec2) -> f64 {
        self.punctures.iter().map(|a| a.dist(p)).fold(f64::INFINITY, f64::min)
    }

    fn point_ok(&self, p: Vec2, inflate: f64) -> bool {
        self.inside(p)
            && self.boundary_distance(p) >= self.margin_boundary + inflate
            && self.puncture_distance(p) >= self.margin_puncture + inflate
    }

    /// Whether the straight segment `pq` is admissible.
    pub fn segment_ok(&self, p: Vec2, q: Vec2) -> bool {
        if !self.point_ok(p, 0.0) || !self.point_ok(q, 0.0) {
            return false;
        }
        if self.punctures.iter().any(|a| point_segment_distance(*a, p, q) < self.margin_puncture) {
            return false;
        }
        for poly in &self.polygons {
            let m = poly.len();
            for i in 0..m {
                if segment_segment_distance(p, q, poly[i], poly[(i + 1) % m]) < self.margin_boundary {
                    return false;
                }
            }
        }
        true
    }

    /// Boundary point and the interior end of its attaching leg.
    fn leg(&self, component: usize, t: f64) -> (Vec2, Vec2) {
        let f = self.domain.frame(component, t);
        (f.point, f.point - f.normal * (2.0 * self.margin_boundary))
    }

    /// Parameter on component `c` whose attaching leg is admissible and
    /// lies as far as possible from the punctures.
    pub fn anchor(&self, c: usize) -> Result<f64> {
        let mut best: Option<(f64, f64)> = None;
        for k in 0..64 {
            let t = 2.0 * PI * k as f64 / 64.0;
            let (b, inner) = self.leg(c, t);
            if !self.point_ok(inner, 0.0) {
                continue;
            }
            let score = self.puncture_distance(b).min(self.puncture_distance(inner));
            if best.is_none_or(|(s, _)| score > s) {
                best = Some((score, t));
            }
        }
        best.map(|b| b.1).ok_or_else(|| {
            Error::PathTooCloseToSingularity(alloc::format!("no admissible anchor on component {c}"))
        })
    }

    fn resolve(&self, e: Endpoint) -> Result<(Option<Vec2>, Vec2)> {
        match e {
            Endpoint::Interior(x) => {
                if !self.point_ok(x, 0.0) {
                    return Err(Error::PathTooCloseToSingularity(alloc::format!(
                        "point ({}, {}) is too close to a puncture or to the boundary",
                        x.x,
                        x.y
                    )));
                }
                Ok((None, x))
            }
            Endpoint::Boundary { component, t } => {
                let (b, inner) = self.leg(component, t);
                if !self.point_ok(inner, 0.0) || self.punctures.iter().any(|a| point_segment_distance(*a, b, inner) < self.margin_puncture) {
                    return Err(Error::PathTooCloseToSingularity(alloc::format!(
                        "boundary point on component {component} at t = {t} cannot be attached"
                    )));
                }
                Ok((Some(b), inner))
            }
        }
    }

    /// Admissible polyline from `from` to `to`.
    pub fn route(&self, from: Endpoint, to: Endpoint) -> Result<Vec<Vec2>> {
        self.route_avoiding(from, to, &[])
    }

    /// Like [`route`](Self::route), but grid cells near `avoid` are
    /// penalized so that the route tends to pass elsewhere.
    pub fn route_avoiding(&self, from: Endpoint, to: Endpoint, avoid: &[Vec2]) -> Result<Vec<Vec2>> {
        let (b0, p) = self.resolve(from)?;
        let (b1, q) = self.resolve(to)?;
        let core = if avoid.is_empty() && self.segment_ok(p, q) {
            vec![p, q]
        } else {
            self.grid_route(p, q, avoid)?
        };
        let mut out = Vec::with_capacity(core.len() + 2);
        out.extend(b0);
        out.extend(core);
        out.extend(b1);
        Ok(out)
    }

    fn grid_route(&self, p: Vec2, q: Vec2, avoid: &[Vec2]) -> Result<Vec<Vec2>> {
        for res in [96usize, 192, 384] {
            if let Some(path) = self.dijkstra(p, q, res, avoid) {
                return Ok(self.pull(path));
            }
        }
        Err(Error::PathTooCloseToSingularity("no admissible route between the endpoints".into()))
    }

    fn dijkstra(&self, p: Vec2, q: Vec2, res: usize, avoid: &[Vec2]) -> Option<Vec<Vec2>> {
        let span = self.hi - self.lo;
        let (dx, dy) = (span.x / res as f64, span.y / res as f64);
        let half_diag = 0.5 * dx.hypot(dy);
        let center = |i: usize, j: usize| self.lo + Vec2::new((i as f64 + 0.5) * dx, (j as f64 + 0.5) * dy);
        let ok = self.admissible_cells(res, half_diag);
        let avoid_radius = 0.1 * self.domain.diameter();
        let penalty = |x: Vec2| {
            if avoid.iter().any(|a| a.dist(x) < avoid_radius) {
                20.0
            } else {
                1.0
            }
        };
        let cell_of = |x: Vec2| {
            let i = (((x.x - self.lo.x) / dx).floor() as isize).clamp(0, res as isize - 1) as usize;
            let j = (((x.y - self.lo.y) / dy).floor() as isize).clamp(0, res as isize - 1) as usize;
            j * res + i
        };
        // Entry and exit cells: the nearest admissible cells reachable by a
        // straight admissible segment.
        let attach = |x: Vec2| -> Option<usize> {
            let c0 = cell_of(x);
            let (i0, j0) = ((c0 % res) as isize, (c0 / res) as isize);
            let mut best: Option<(f64, usize)> = None;
            for r in 0..res as isize {
                for dj in -r..=r {
                    for di in -r..=r {
                        if di.abs() != r && dj.abs() != r {
                            continue;
                        }
                        let (i, j) = (i0 + di, j0 + dj);
                        if i < 0 || j < 0 || i >= res as isize || j >= res as isize {
                            continue;
                        }
                        let k = j as usize * res + i as usize;
                        if !ok[k] {
                            continue;
                        }
                        let c = center(i as usize, j as usize);
                        let d = c.dist(x);
                        if best.is_none_or(|b| d < b.0) && self.segment_ok(x, c) {
                            best = Some((d, k));
                        }
                    }
                }
                if best.is_some() {
                    return best.map(|b| b.1);
                }
            }
            None
        };
        let start = attach(p)?;
        let goal = attach(q)?;
        let mut dist = vec![f64::INFINITY; res * res];
        let mut prev = vec![usize::MAX; res * res];
        let mut heap = BinaryHeap::new();
        dist[start] = 0.0;
        heap.push(State { cost: 0.0, cell: start });
        while let Some(State { cost, cell }) = heap.pop() {
            if cell == goal {
                break;
            }
            if cost > dist[cell] {
                continue;
            }
            let (i, j) = ((cell % res) as isize, (cell / res) as isize);
            for (di, dj) in [(-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1)] {
                let (ni, nj) = (i + di, j + dj);
                if ni < 0 || nj < 0 || ni >= res as isize || nj >= res as isize {
                    continue;
                }
                let nk = nj as usize * res + ni as usize;
                if !ok[nk] {
                    continue;
                }
                let c = center(ni as usize, nj as usize);
                let step = (di as f64 * dx).hypot(dj as f64 * dy) * penalty(c);
                let nc = cost + step;
                if nc < dist[nk] {
                    dist[nk] = nc;
                    prev[nk] = cell;
                    heap.push(State { cost: nc, cell: nk });
                }
            }
        }
        if !dist[goal].is_finite() {
            return None;
        }
        let mut cells = vec![goal];
        while *cells.last().unwrap() != start {
            cells.push(prev[*cells.last().unwrap()]);
        }
        cells.reverse();
        let mut pts = Vec::with_capacity(cells.len() + 2);
        pts.push(p);
        pts.extend(cells.iter().map(|&k| center(k % res, k / res)));
        pts.push(q);
        Some(pts)
    }

    /// Cells of a `res × res` grid whose centers satisfy `point_ok` with the
    /// given inflation: even-odd scanlines for the interior, then the bands
    /// around every polygon edge and puncture are cleared.
    fn admissible_cells(&self, res: usize, inflate: f64) -> Vec<bool> {
        let span = self.hi - self.lo;
        let (dx, dy) = (span.x / res as f64, span.y / res as f64);
        let mut ok = vec![false; res * res];
        let mut xs = Vec::new();
        for j in 0..res {
            let y = self.lo.y + (j as f64 + 0.5) * dy;
            xs.clear();
            for poly in &self.polygons {
                let m = poly.len();
                for i in 0..m {
                    let (a, b) = (poly[i], poly[(i + 1) % m]);
                    if (a.y > y) != (b.y > y) {
                        xs.push(a.x + (y - a.y) / (b.y - a.y) * (b.x - a.x));
                    }
                }
            }
            xs.sort_by(f64::total_cmp);
            for pair in xs.chunks_exact(2) {
                let i0 = ((pair[0] - self.lo.x) / dx - 0.5).ceil().max(0.0) as usize;
                let i1 = ((pair[1] - self.lo.x) / dx - 0.5).floor();
                if i1 < 0.0 {
                    continue;
                }
                for i in i0..=(i1 as usize).min(res - 1) {
                    ok[j * res + i] = true;
                }
            }
        }
        let mut clear = |a: Vec2, b: Vec2, r: f64| {
            let lo = Vec2::new(a.x.min(b.x) - r, a.y.min(b.y) - r);
            let hi = Vec2::new(a.x.max(b.x) + r, a.y.max(b.y) + r);
            let i0 = ((lo.x - self.lo.x) / dx - 0.5).floor().max(0.0) as usize;
            let j0 = ((lo.y - self.lo.y) / dy - 0.5).floor().max(0.0) as usize;
            let i1 = (((hi.x - self.lo.x) / dx - 0.5).ceil().max(0.0) as usize).min(res - 1);
            let j1 = (((hi.y - self.lo.y) / dy - 0.5).ceil().max(0.0) as usize).min(res - 1);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    let c = self.lo + Vec2::new((i as f64 + 0.5) * dx, (j as f64 + 0.5) * dy);
                    if point_segment_distance(c, a, b) < r {
                        ok[j * res + i] = false;
                    }
                }
            }
        };
        for poly in &self.polygons {
            let m = poly.len();
            for i in 0..m {
                clear(poly[i], poly[(i + 1) % m], self.margin_boundary + inflate);
            }
        }
        for &a in &self.punctures {
            clear(a, a, self.margin_puncture + inflate);
        }
        ok
    }

    /// Greedy string pulling: jump to the farthest vertex reachable in a
    /// straight admissible segment.
    fn pull(&self, pts: Vec<Vec2>) -> Vec<Vec2> {
        let mut out = vec![pts[0]];
        let mut i = 0;
        while i + 1 < pts.len() {
            let mut j = i + 1;
            while j + 1 < pts.len() && self.segment_ok(pts[i], pts[j + 1]) {
                j += 1;
            }
            out.push(pts[j]);
            i = j;
        }
        out
    }

    /// Closed anticlockwise loop around puncture `i`, starting and ending at
    /// its first vertex.
    pub fn loop_around_puncture(&self, i: usize) -> Result<Vec<Vec2>> {
        let a = *self.punctures.get(i).ok_or(Error::NoSuchSource(i))?;
        let r = 1.5 * self.margin_puncture;
        let mut pts: Vec<Vec2> =
            (0..LOOP_VERTICES).map(|k| a + Vec2::from_polar(r, 2.0 * PI * k as f64 / LOOP_VERTICES as f64)).collect();
        pts.push(pts[0]);
        if pts.windows(2).any(|w| !self.segment_ok(w[0], w[1])) {
            return Err(Error::PathTooCloseToSingularity(alloc::format!("no admissible loop around puncture {i}")));
        }
        Ok(pts)
    }

    /// Closed loop hugging hole `l` from inside `G`, starting and ending at
    /// its first vertex; `None` if it is not admissible.
    pub fn loop_around_hole(&self, l: usize) -> Option<Vec<Vec2>> {
        if l == 0 || l >= self.domain.num_components() {
            return None;
        }
        for offset in [2.0, 4.0, 8.0] {
            let mut pts: Vec<Vec2> = (0..LOOP_VERTICES)
                .map(|k| {
                    let f = self.domain.frame(l, 2.0 * PI * k as f64 / LOOP_VERTICES as f64);
                    f.point - f.normal * (offset * self.margin_boundary)
                })
                .collect();
            pts.push(pts[0]);
            if pts.windows(2).all(|w| self.segment_ok(w[0], w[1])) {
                return Some(pts);
            }
        }
        None
    }
}

/// Winding number of the closed polyline `path` about `a`.
pub fn winding_number(path: &[Vec2], a: Vec2) -> f64 {
    let mut s = 0.0;
    for w in path.windows(2) {
        let (u, v) = (w[0] - a, w[1] - a);
        s += libm::atan2(u.wedge(v), u.dot(v));
    }
    s / (2.0 * PI)
}
