//! Multiply connected planar domains `G = G̃ \ ∪ ω̄_l` bounded by smooth
//! closed curves, and the puncture configuration inside them.
//!
//! Component `0` is always the outer curve, components `1..=n` are holes.
//! Every curve is parametrized anticlockwise over `[0, 2π)`. The frame
//! returned by [`curve_frame`] carries the outward normal of `G`, which on a
//! hole points into the hole.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;


use crate::quadrature::TrigSeries;
use crate::{Error, Result, Vec2};
#[allow(unused_imports)]
use num_traits::Float;

/// Samples used for the admissibility checks.
pub const VALIDATION_SAMPLES: usize = 256;
/// Relative distance tolerance of the admissibility checks.
pub const VALIDATION_TOL: f64 = 1e-10;
/// Smallest admissible perforation radius, relative to the domain diameter.
pub const MIN_RHO_FRACTION: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub enum Curve {
    Circle { center: Vec2, radius: f64 },
    /// `γ(t) = (x(t), y(t))`; the constant terms give the center.
    Fourier { x: TrigSeries, y: TrigSeries },
}

/// Whether a component bounds the domain from outside or is a hole.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Outer,
    Hole,
}

/// Point, unit tangent, outward unit normal of `G`, and speed `|γ'(t)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub point: Vec2,
    pub tangent: Vec2,
    pub normal: Vec2,
    pub speed: f64,
}

impl Curve {
    pub fn circle(center: Vec2, radius: f64) -> Self {
        Curve::Circle { center, radius }
    }

    /// `γ`, `γ'`, `γ''` at `t`.
    pub fn derivatives(&self, t: f64) -> [Vec2; 3] {
        match self {
            Curve::Circle { center, radius } => {
                let (s, c) = t.sin_cos();
                [
                    *center + Vec2::new(radius * c, radius * s),
                    Vec2::new(-radius * s, radius * c),
                    Vec2::new(-radius * c, -radius * s),
                ]
            }
            Curve::Fourier { x, y } => {
                let xs = x.eval3(t);
                let ys = y.eval3(t);
                [Vec2::new(xs[0], ys[0]), Vec2::new(xs[1], ys[1]), Vec2::new(xs[2], ys[2])]
            }
        }
    }

    pub fn point(&self, t: f64) -> Vec2 {
        self.derivatives(t)[0]
    }

    pub fn speed(&self, t: f64) -> f64 {
        self.derivatives(t)[1].norm()
    }

    pub fn samples(&self, m: usize) -> Vec<Vec2> {
        (0..m).map(|j| self.point(2.0 * PI * j as f64 / m as f64)).collect()
    }

    /// Signed enclosed area (positive for anticlockwise curves).
    pub fn signed_area(&self) -> f64 {
        // Trapezoid rule on ½∮ γ ∧ γ' is exact for trigonometric polynomials.
        let m = 4 * (self.max_mode() + 2).max(64);
        let s: f64 = (0..m)
            .map(|j| {
                let [p, d, _] = self.derivatives(2.0 * PI * j as f64 / m as f64);
                p.wedge(d)
            })
            .sum();
        0.5 * s * 2.0 * PI / m as f64
    }

    pub fn max_mode(&self) -> usize {
        match self {
            Curve::Circle { .. } => 1,
            Curve::Fourier { x, y } => x.max_mode().max(y.max_mode()),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Curve::Circle { center, radius } => center.is_finite() && radius.is_finite(),
            Curve::Fourier { x, y } => x.is_finite() && y.is_finite(),
        }
    }

    /// Diameter estimated from samples.
    pub fn diameter(&self) -> f64 {
        match self {
            Curve::Circle { radius, .. } => 2.0 * radius.abs(),
            Curve::Fourier { .. } => {
                let pts = self.samples(VALIDATION_SAMPLES);
                let mut d = 0.0f64;
                for (i, p) in pts.iter().enumerate() {
                    for q in &pts[i + 1..] {
                        d = d.max(p.dist(*q));
                    }
                }
                d
            }
        }
    }

    /// Crossing-number test against a fine polygon.
    pub fn encloses(&self, p: Vec2) -> bool {
        if let Curve::Circle { center, radius } = self {
            return p.dist(*center) < *radius;
        }
        let pts = self.samples(4 * VALIDATION_SAMPLES);
        polygon_contains(&pts, p)
    }

    /// Distance from `p` to the curve and the nearest parameter.
    pub fn closest(&self, p: Vec2) -> (f64, f64) {
        if let Curve::Circle { center, radius } = self {
            let v = p - *center;
            let t = crate::geometry::rem_two_pi(v.y.atan2(v.x));
            return ((v.norm() - radius).abs(), t);
        }
        let m = VALIDATION_SAMPLES;
        let h = 2.0 * PI / m as f64;
        let mut best = (f64::INFINITY, 0.0);
        for j in 0..m {
            let t = h * j as f64;
            let d = self.point(t).dist(p);
            if d < best.0 {
                best = (d, t);
            }
        }
        let t0 = best.1;
        let mut t = t0;
        for _ in 0..30 {
            let [g, d1, d2] = self.derivatives(t);
            let r = g - p;
            let f = r.dot(d1);
            let df = d1.norm_sq() + r.dot(d2);
            if df <= 0.0 {
                break;
            }
            let step = (f / df).clamp(-h, h);
            t -= step;
            if (t - t0).abs() > 2.0 * h {
                t = t0;
                break;
            }
            if step.abs() < 1e-15 {
                break;
            }
        }
        let d = self.point(t).dist(p);
        if d < best.0 {
            (d, crate::geometry::rem_two_pi(t))
        } else {
            best
        }
    }

    /// Image under the rigid motion `x ↦ R(angle)·x + shift`.
    pub fn rigid(&self, angle: f64, shift: Vec2) -> Curve {
        match self {
            Curve::Circle { center, radius } => {
                Curve::Circle { center: center.rotated(angle) + shift, radius: *radius }
            }
            Curve::Fourier { x, y } => {
                let (s, c) = angle.sin_cos();
                let combine = |a: &TrigSeries, b: &TrigSeries, ca: f64, cb: f64, off: f64| {
                    let m = a.max_mode().max(b.max_mode());
                    let get = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(0.0);
                    TrigSeries::new(
                        ca * a.constant + cb * b.constant + off,
                        (0..m).map(|k| ca * get(&a.cos, k) + cb * get(&b.cos, k)).collect(),
                        (0..m).map(|k| ca * get(&a.sin, k) + cb * get(&b.sin, k)).collect(),
                    )
                };
                Curve::Fourier { x: combine(x, y, c, -s, shift.x), y: combine(x, y, s, c, shift.y) }
            }
        }
    }
}

/// Position, tangent, outward normal of `G` and speed at parameter `t`.
pub fn curve_frame(curve: &Curve, role: Role, t: f64) -> Frame {
    let [point, d1, _] = curve.derivatives(t);
    let speed = d1.norm();
    let tangent = d1 * (1.0 / speed);
    let normal = match role {
        Role::Outer => -tangent.perp(),
        Role::Hole => tangent.perp(),
    };
    Frame { point, tangent, normal, speed }
}

fn polygon_contains(pts: &[Vec2], p: Vec2) -> bool {
    let mut inside = false;
    let m = pts.len();
    for i in 0..m {
        let a = pts[i];
        let b = pts[(i + 1) % m];
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn segments_cross(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let o1 = (b - a).wedge(c - a);
    let o2 = (b - a).wedge(d - a);
    let o3 = (d - c).wedge(a - c);
    let o4 = (d - c).wedge(b - c);
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

fn polygons_cross(p: &[Vec2], q: &[Vec2]) -> bool {
    let (m, k) = (p.len(), q.len());
    (0..m).any(|i| (0..k).any(|j| segments_cross(p[i], p[(i + 1) % m], q[j], q[(j + 1) % k])))
}

fn validate_curve(curve: &Curve, component: usize) -> Result<()> {
    let fail = |reason: String| Err(Error::DegenerateCurve { component, reason });
    if !curve.is_finite() {
        return fail("non-finite coefficients".into());
    }
    if let Curve::Circle { radius, .. } = curve {
        if *radius <= 0.0 {
            return fail(format!("radius {radius} is not positive"));
        }
    }
    let diam = curve.diameter();
    if !(diam > 0.0) {
        return fail("curve collapses to a point".into());
    }
    let tol = VALIDATION_TOL * diam;
    let m = VALIDATION_SAMPLES;
    let min_speed = (0..m)
        .map(|j| curve.speed(2.0 * PI * j as f64 / m as f64))
        .fold(f64::INFINITY, f64::min);
    if min_speed <= tol {
        return fail(format!("speed {min_speed:e} below tolerance"));
    }
    let pts = curve.samples(m);
    for i in 0..m {
        for j in i + 2..m {
            if i == 0 && j == m - 1 {
                continue;
            }
            if segments_cross(pts[i], pts[(i + 1) % m], pts[j], pts[(j + 1) % m]) {
                return fail("self-intersecting".into());
            }
            if (j - i).min(m + i - j) > m / 8 && pts[i].dist(pts[j]) <= tol {
                return fail("self-touching".into());
            }
        }
    }
    if curve.signed_area() <= 0.0 {
        return fail("orientation is not anticlockwise".into());
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Puncture {
    pub position: Vec2,
    pub degree: i64,
}

/// Singular points `a_i` with nonzero integer degrees `d_i`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PunctureSet {
    items: Vec<Puncture>,
}

impl PunctureSet {
    pub fn empty() -> Self {
        PunctureSet::default()
    }

    pub fn new(items: Vec<Puncture>) -> Result<Self> {
        for (i, p) in items.iter().enumerate() {
            if !p.position.is_finite() {
                return Err(Error::InvalidPunctures(format!("puncture {i} has a non-finite position")));
            }
            if p.degree == 0 {
                return Err(Error::InvalidPunctures(format!("puncture {i} has degree 0")));
            }
            for (j, q) in items[..i].iter().enumerate() {
                if p.position == q.position {
                    return Err(Error::InvalidPunctures(format!("punctures {j} and {i} coincide")));
                }
            }
        }
        Ok(PunctureSet { items })
    }

    pub fn from_pairs(pairs: &[(Vec2, i64)]) -> Result<Self> {
        PunctureSet::new(pairs.iter().map(|&(position, degree)| Puncture { position, degree }).collect())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Puncture> {
        self.items.iter()
    }

    pub fn get(&self, i: usize) -> Option<&Puncture> {
        self.items.get(i)
    }

    pub fn total_degree(&self) -> i64 {
        self.items.iter().map(|p| p.degree).sum()
    }

    pub fn sum_squared_degrees(&self) -> i64 {
        self.items.iter().map(|p| p.degree * p.degree).sum()
    }

    pub fn min_pairwise_distance(&self) -> f64 {
        let mut d = f64::INFINITY;
        for (i, p) in self.items.iter().enumerate() {
            for q in &self.items[i + 1..] {
                d = d.min(p.position.dist(q.position));
            }
        }
        d
    }
}

/// Discretization settings shared by every solve on a domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discretization {
    /// Nodes on each user-given curve (even).
    pub nodes: usize,
    /// Nodes on the small circles created by [`Domain::omega_rho`].
    pub small_circle_nodes: usize,
    /// Near-boundary band as a multiple of the largest node spacing.
    pub band_multiplier: f64,
}

impl Default for Discretization {
    fn default() -> Self {
        Discretization { nodes: 256, small_circle_nodes: 64, band_multiplier: 5.0 }
    }
}

/// A validated domain with punctures.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    curves: Vec<Curve>,
    nodes: Vec<usize>,
    punctures: PunctureSet,
    disc: Discretization,
    diameter: f64,
}

impl Domain {
    /// Validates curves, containment and puncture positions.
    pub fn new(outer: Curve, holes: Vec<Curve>, punctures: PunctureSet, disc: Discretization) -> Result<Self> {
        if disc.nodes < 8 || disc.nodes % 2 != 0 || disc.small_circle_nodes < 8 || disc.small_circle_nodes % 2 != 0 {
            return Err(Error::InvalidArgument("node counts must be even and at least 8".into()));
        }
        if !(disc.band_multiplier > 0.0) {
            return Err(Error::InvalidArgument("band multiplier must be positive".into()));
        }
        let mut curves = Vec::with_capacity(1 + holes.len());
        curves.push(outer);
        curves.extend(holes);
        for (c, curve) in curves.iter().enumerate() {
            validate_curve(curve, c)?;
        }
        let polys: Vec<Vec<Vec2>> = curves.iter().map(|c| c.samples(VALIDATION_SAMPLES)).collect();
        for l in 1..curves.len() {
            if polygons_cross(&polys[0], &polys[l]) || !polys[l].iter().all(|p| curves[0].encloses(*p)) {
                return Err(Error::OverlappingCurves(format!("hole {l} is not strictly inside the outer curve")));
            }
            for m in 1..l {
                if polygons_cross(&polys[m], &polys[l])
                    || curves[m].encloses(polys[l][0])
                    || curves[l].encloses(polys[m][0])
                {
                    return Err(Error::OverlappingCurves(format!("holes {m} and {l} overlap")));
                }
            }
        }
        let diameter = curves[0].diameter();
        let nodes = curves.iter().map(|_| disc.nodes).collect();
        let domain = Domain { curves, nodes, punctures: PunctureSet::empty(), disc, diameter };
        domain.with_punctures(punctures)
    }

    /// Same curves, new punctures (validated against the domain).
    pub fn with_punctures(&self, punctures: PunctureSet) -> Result<Self> {
        for (index, p) in punctures.iter().enumerate() {
            let a = p.position;
            if !self.contains(a) || self.distance_to_boundary(a) <= VALIDATION_TOL * self.diameter {
                return Err(Error::PunctureOutsideDomain { index, x: a.x, y: a.y });
            }
        }
        Ok(Domain { punctures, ..self.clone() })
    }

    /// Image of the whole configuration under `x ↦ R(angle)·x + shift`.
    pub fn rigid(&self, angle: f64, shift: Vec2) -> Result<Self> {
        let curves: Vec<Curve> = self.curves.iter().map(|c| c.rigid(angle, shift)).collect();
        let punctures = PunctureSet::new(
            self.punctures
                .iter()
                .map(|p| Puncture { position: p.position.rotated(angle) + shift, degree: p.degree })
                .collect(),
        )?;
        Ok(Domain { curves, punctures, ..self.clone() })
    }

    pub fn outer(&self) -> &Curve {
        &self.curves[0]
    }

    pub fn holes(&self) -> &[Curve] {
        &self.curves[1..]
    }

    pub fn curves(&self) -> &[Curve] {
        &self.curves
    }

    pub fn curve(&self, component: usize) -> &Curve {
        &self.curves[component]
    }

    pub fn num_components(&self) -> usize {
        self.curves.len()
    }

    pub fn num_holes(&self) -> usize {
        self.curves.len() - 1
    }

    pub fn role(&self, component: usize) -> Role {
        if component == 0 {
            Role::Outer
        } else {
            Role::Hole
        }
    }

    pub fn frame(&self, component: usize, t: f64) -> Frame {
        curve_frame(&self.curves[component], self.role(component), t)
    }

    pub fn punctures(&self) -> &PunctureSet {
        &self.punctures
    }

    pub fn discretization(&self) -> Discretization {
        self.disc
    }

    pub fn nodes(&self, component: usize) -> usize {
        self.nodes[component]
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Largest node spacing over all components.
    pub fn max_spacing(&self) -> f64 {
        let mut h = 0.0f64;
        for (curve, &n) in self.curves.iter().zip(&self.nodes) {
            for j in 0..n {
                h = h.max(curve.speed(2.0 * PI * j as f64 / n as f64) * 2.0 * PI / n as f64);
            }
        }
        h
    }

    /// Near-boundary band `h` within which direct evaluation is refused.
    pub fn band(&self) -> f64 {
        self.disc.band_multiplier * self.max_spacing()
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.curves[0].encloses(p) && !self.curves[1..].iter().any(|c| c.encloses(p))
    }

    pub fn distance_to_boundary(&self, p: Vec2) -> f64 {
        self.curves.iter().map(|c| c.closest(p).0).fold(f64::INFINITY, f64::min)
    }

    /// Nearest component, its distance and parameter.
    pub fn nearest_component(&self, p: Vec2) -> (usize, f64, f64) {
        let mut best = (0, f64::INFINITY, 0.0);
        for (c, curve) in self.curves.iter().enumerate() {
            let (d, t) = curve.closest(p);
            if d < best.1 {
                best = (c, d, t);
            }
        }
        best
    }

    /// `ρ_max = ½ min(pairwise puncture distance, puncture-to-boundary distance)`.
    pub fn rho_max(&self) -> f64 {
        let to_boundary = self
            .punctures
            .iter()
            .map(|p| self.distance_to_boundary(p.position))
            .fold(f64::INFINITY, f64::min);
        0.5 * to_boundary.min(self.punctures.min_pairwise_distance())
    }

    /// `Ω_ρ`: the domain with closed discs of radius `ρ` removed around each
    /// puncture. The new circles are appended after the existing holes in
    /// puncture order; the punctures are dropped.
    pub fn omega_rho(&self, rho: f64) -> Result<Self> {
        let rho_max = self.rho_max();
        if !(rho < rho_max) {
            return Err(Error::RhoTooLarge { rho, rho_max });
        }
        let min = MIN_RHO_FRACTION * self.diameter;
        if !(rho >= min) {
            return Err(Error::RhoTooSmall { rho, min });
        }
        let mut out = self.clone();
        for p in self.punctures.iter() {
            out.curves.push(Curve::circle(p.position, rho));
            out.nodes.push(self.disc.small_circle_nodes);
        }
        out.punctures = PunctureSet::empty();
        Ok(out)
    }
}
