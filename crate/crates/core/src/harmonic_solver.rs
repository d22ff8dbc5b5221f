//! Nyström boundary-integral solver for Laplace problems on a [`Domain`]
//! with explicit logarithmic point sources.
//!
//! A solved field is `u = Σ d_i log|x − a_i| + w` with `w` harmonic in `G`.
//! `w` is represented through Green's formula
//!
//! ```text
//! w(x) = ∮ [Φ_L(x, y) ∂_ν w(y) − ∂_{ν_y} Φ(x, y) w(y)] ds_y,
//! Φ(x, y) = −(1/2π) log|x − y|,   Φ_L = Φ + (1/2π) log L,
//! ```
//!
//! with `ν` the outward normal of `G` and `L` twice the domain diameter
//! (the shift is harmless because `∮ ∂_ν w = 0`, and it keeps the single
//! layer positive definite). Collocating the boundary limit at the
//! trapezoid nodes gives one equation per node; the unknowns are whichever
//! of `w` and `∂_ν w` the boundary condition leaves free. Weakly singular
//! self-interactions use Kress's logarithmic quadrature.
//!
//! A component carries one of three conditions:
//!
//! * `Dirichlet(f)`: `u = f`.
//! * `Neumann(g)`: `∂_ν u = g`.
//! * `Floating { flux }`: `u` equals an unknown constant and
//!   `∮ ∂_ν u = flux`.
//!
//! Without a Dirichlet component the solution is fixed by a normalization,
//! imposed through a bordered row with a Lagrange multiplier.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::domain::Domain;
use crate::linalg::{Lu, Matrix};
use crate::quadrature::{kress_log_weights, periodic_nodes, spectral_derivative, TrigInterpolant};
use crate::{Error, Result, Vec2};
#[allow(unused_imports)]
use num_traits::Float;

/// Tolerance of the Neumann solvability check, relative to the data scale.
pub const COMPATIBILITY_TOL: f64 = 1e-8;
/// Largest upsampling factor used for evaluation inside the band.
pub const MAX_UPSAMPLING: usize = 64;

/// Logarithmic point sources `Σ d_i log|x − a_i|`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sources {
    items: Vec<(Vec2, f64)>,
}

impl Sources {
    pub fn none() -> Self {
        Sources::default()
    }

    pub fn new(items: Vec<(Vec2, f64)>) -> Self {
        Sources { items }
    }

    pub fn from_punctures(p: &crate::domain::PunctureSet) -> Self {
        Sources { items: p.iter().map(|p| (p.position, p.degree as f64)).collect() }
    }

    pub fn items(&self) -> &[(Vec2, f64)] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn total_strength(&self) -> f64 {
        self.items.iter().map(|s| s.1).sum()
    }

    pub fn value(&self, x: Vec2) -> f64 {
        self.items.iter().map(|&(a, d)| d * libm::log((x - a).norm())).sum()
    }

    pub fn grad(&self, x: Vec2) -> Vec2 {
        let mut g = Vec2::ZERO;
        for &(a, d) in &self.items {
            let r = x - a;
            g += r * (d / r.norm_sq());
        }
        g
    }

    pub fn min_distance(&self, x: Vec2) -> f64 {
        self.items.iter().map(|s| s.0.dist(x)).fold(f64::INFINITY, f64::min)
    }
}

/// Boundary profile: a constant or values at the component's nodes.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Constant(f64),
    Nodal(Vec<f64>),
}

impl Profile {
    fn nodal(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            Profile::Constant(c) => Ok(vec![*c; n]),
            Profile::Nodal(v) if v.len() == n => Ok(v.clone()),
            Profile::Nodal(v) => {
                Err(Error::InvalidArgument(alloc::format!("profile has {} values, expected {n}", v.len())))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionKind {
    Dirichlet,
    Neumann,
    Floating,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryCondition {
    Dirichlet(Profile),
    Neumann(Profile),
    Floating { flux: f64 },
}

impl BoundaryCondition {
    pub fn kind(&self) -> ConditionKind {
        match self {
            BoundaryCondition::Dirichlet(_) => ConditionKind::Dirichlet,
            BoundaryCondition::Neumann(_) => ConditionKind::Neumann,
            BoundaryCondition::Floating { .. } => ConditionKind::Floating,
        }
    }
}

/// Additive normalization for problems without a Dirichlet component.
#[derive(Debug, Clone, PartialEq)]
pub enum Normalization {
    /// `Σ_{c ∈ list} ∮_{Γ_c} u = 0`.
    BoundaryMean(Vec<usize>),
    /// `∫_G u = 0`, reduced to boundary integrals with `Q = |x − x̄|²/4`.
    AreaMean,
}

impl Normalization {
    /// Zero mean over every component of `domain`.
    pub fn boundary_mean(domain: &Domain) -> Self {
        Normalization::BoundaryMean((0..domain.num_components()).collect())
    }
}

/// Trapezoid nodes of one component.
#[derive(Debug, Clone)]
pub struct ComponentNodes {
    pub params: Vec<f64>,
    pub points: Vec<Vec2>,
    pub normals: Vec<Vec2>,
    pub tangents: Vec<Vec2>,
    pub velocities: Vec<Vec2>,
    pub accelerations: Vec<Vec2>,
    pub speeds: Vec<f64>,
    /// `(2π/N)|γ'(t_j)|`.
    pub weights: Vec<f64>,
    /// `+1` on the outer curve, `−1` on holes (positive orientation of `∂G`).
    pub orientation: f64,
}

impl ComponentNodes {
    fn new(domain: &Domain, c: usize, n: usize) -> Self {
        let params = periodic_nodes(n);
        let curve = domain.curve(c);
        let mut out = ComponentNodes {
            params: params.clone(),
            points: Vec::with_capacity(n),
            normals: Vec::with_capacity(n),
            tangents: Vec::with_capacity(n),
            velocities: Vec::with_capacity(n),
            accelerations: Vec::with_capacity(n),
            speeds: Vec::with_capacity(n),
            weights: Vec::with_capacity(n),
            orientation: if c == 0 { 1.0 } else { -1.0 },
        };
        for &t in &params {
            let [_, d1, d2] = curve.derivatives(t);
            let f = domain.frame(c, t);
            out.points.push(f.point);
            out.normals.push(f.normal);
            out.tangents.push(f.tangent);
            out.velocities.push(d1);
            out.accelerations.push(d2);
            out.speeds.push(f.speed);
            out.weights.push(2.0 * PI / n as f64 * f.speed);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }
}

/// Boundary nodes of a domain, shared by every field solved on it.
#[derive(Debug, Clone)]
pub struct Discretized {
    domain: Domain,
    components: Vec<ComponentNodes>,
    offsets: Vec<usize>,
    total: usize,
    log_l: f64,
    band: f64,
    center: Vec2,
}

impl Discretized {
    pub fn new(domain: &Domain) -> Self {
        let components: Vec<ComponentNodes> =
            (0..domain.num_components()).map(|c| ComponentNodes::new(domain, c, domain.nodes(c))).collect();
        let mut offsets = Vec::with_capacity(components.len());
        let mut total = 0;
        for c in &components {
            offsets.push(total);
            total += c.len();
        }
        let outer = &components[0];
        let center = outer.points.iter().fold(Vec2::ZERO, |s, p| s + *p) * (1.0 / outer.len() as f64);
        Discretized {
            domain: domain.clone(),
            components,
            offsets,
            total,
            log_l: libm::log(2.0 * domain.diameter()),
            band: domain.band(),
            center,
        }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn component(&self, c: usize) -> &ComponentNodes {
        &self.components[c]
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn total_nodes(&self) -> usize {
        self.total
    }

    pub fn band(&self) -> f64 {
        self.band
    }

    /// Flux of the source part through component `c` (exact: sources lie in
    /// `G`, so only the outer curve sees them).
    fn source_flux(&self, sources: &Sources, c: usize) -> f64 {
        if c == 0 {
            2.0 * PI * sources.total_strength()
        } else {
            0.0
        }
    }

    /// Single-layer matrix `S_ij ≈ ∫ Φ_L(x_i, y) · ds_y` weights and the
    /// double-layer matrix including the `½` jump on the diagonal.
    fn layer_matrices(&self) -> (Matrix, Matrix) {
        let m = self.total;
        let mut single = Matrix::zeros(m, m);
        let mut double = Matrix::zeros(m, m);
        let shift = self.log_l / (2.0 * PI);
        let inv4pi = 1.0 / (4.0 * PI);
        for (ci, comp_i) in self.components.iter().enumerate() {
            let kress = kress_log_weights(comp_i.len());
            for (cj, comp_j) in self.components.iter().enumerate() {
                let nj = comp_j.len();
                let h = 2.0 * PI / nj as f64;
                for i in 0..comp_i.len() {
                    let row = self.offsets[ci] + i;
                    let x = comp_i.points[i];
                    for j in 0..nj {
                        let col = self.offsets[cj] + j;
                        let y = comp_j.points[j];
                        let wj = comp_j.weights[j];
                        if ci == cj && i == j {
                            let v = comp_j.velocities[j];
                            let kappa = comp_j.accelerations[j].dot(comp_j.normals[j]) / v.norm_sq();
                            double[(row, col)] = 0.5 + kappa * inv4pi * wj;
                            let k2 = -libm::log(comp_j.speeds[j]) / (2.0 * PI);
                            single[(row, col)] =
                                -inv4pi * kress[0] * comp_j.speeds[j] + h * comp_j.speeds[j] * (k2 + shift);
                            continue;
                        }
                        let r = y - x;
                        let r2 = r.norm_sq();
                        double[(row, col)] = -r.dot(comp_j.normals[j]) / (2.0 * PI * r2) * wj;
                        if ci == cj {
                            let dt = comp_i.params[i] - comp_j.params[j];
                            let s = libm::sin(0.5 * dt);
                            let k2 = -inv4pi * libm::log(r2 / (4.0 * s * s));
                            let off = (i + comp_i.len() - j) % comp_i.len();
                            single[(row, col)] =
                                -inv4pi * kress[off] * comp_j.speeds[j] + h * comp_j.speeds[j] * (k2 + shift);
                        } else {
                            single[(row, col)] = (-libm::log(r2) * inv4pi + shift) * wj;
                        }
                    }
                }
            }
        }
        (single, double)
    }
}

#[derive(Debug, Clone)]
struct Layout {
    q_off: Vec<Option<usize>>,
    w_off: Vec<Option<usize>>,
    constant: Vec<Option<usize>>,
    flux_row: Vec<Option<usize>>,
    lambda: Option<usize>,
    size: usize,
}

/// Assembled and factorized system for a fixed choice of condition kinds;
/// solves any number of right-hand sides (profiles, fluxes, sources).
#[derive(Debug, Clone)]
pub struct LayerSystem {
    disc: Arc<Discretized>,
    kinds: Vec<ConditionKind>,
    normalization: Option<Normalization>,
    single: Matrix,
    double: Matrix,
    layout: Layout,
    lu: Lu,
}

impl LayerSystem {
    pub fn new(domain: &Domain, kinds: &[ConditionKind], normalization: Option<Normalization>) -> Result<Self> {
        Self::with_nodes(Arc::new(Discretized::new(domain)), kinds, normalization)
    }

    pub fn with_nodes(
        disc: Arc<Discretized>,
        kinds: &[ConditionKind],
        normalization: Option<Normalization>,
    ) -> Result<Self> {
        let nc = disc.num_components();
        if kinds.len() != nc {
            return Err(Error::ComponentCountMismatch { expected: nc, got: kinds.len() });
        }
        let has_dirichlet = kinds.contains(&ConditionKind::Dirichlet);
        match (&normalization, has_dirichlet) {
            (None, false) => {
                return Err(Error::UnderDeterminedProblem(
                    "no Dirichlet component and no normalization: the solution is defined up to a constant".into(),
                ))
            }
            (Some(_), true) => {
                return Err(Error::OverDeterminedProblem(
                    "a normalization was given although a Dirichlet component fixes the constant".into(),
                ))
            }
            _ => {}
        }
        if let Some(Normalization::BoundaryMean(list)) = &normalization {
            if list.is_empty() {
                return Err(Error::InvalidArgument("boundary-mean normalization needs a component".into()));
            }
            if let Some(&c) = list.iter().find(|&&c| c >= nc) {
                return Err(Error::BadComponentIndex(c));
            }
        }

        let m = disc.total;
        let mut size = 0;
        let mut q_off = vec![None; nc];
        let mut w_off = vec![None; nc];
        let mut constant = vec![None; nc];
        for c in 0..nc {
            let n = disc.components[c].len();
            match kinds[c] {
                ConditionKind::Dirichlet => q_off[c] = Some(size),
                ConditionKind::Neumann => w_off[c] = Some(size),
                ConditionKind::Floating => q_off[c] = Some(size),
            }
            size += n;
        }
        let mut flux_row = vec![None; nc];
        for c in 0..nc {
            if kinds[c] == ConditionKind::Floating {
                constant[c] = Some(size);
                flux_row[c] = Some(size);
                size += 1;
            }
        }
        let lambda = normalization.as_ref().map(|_| {
            size += 1;
            size - 1
        });
        debug_assert_eq!(size, m + constant.iter().flatten().count() + lambda.iter().count());
        let layout = Layout { q_off, w_off, constant, flux_row, lambda, size };

        let (single, double) = disc.layer_matrices();
        let mut a = Matrix::zeros(size, size);
        for row in 0..m {
            for cj in 0..nc {
                let comp = &disc.components[cj];
                for j in 0..comp.len() {
                    let col = disc.offsets[cj] + j;
                    match kinds[cj] {
                        ConditionKind::Dirichlet => {
                            a[(row, layout.q_off[cj].unwrap() + j)] = -single[(row, col)];
                        }
                        ConditionKind::Neumann => {
                            a[(row, layout.w_off[cj].unwrap() + j)] = double[(row, col)];
                        }
                        ConditionKind::Floating => {
                            a[(row, layout.q_off[cj].unwrap() + j)] = -single[(row, col)];
                            a[(row, layout.constant[cj].unwrap())] += double[(row, col)];
                        }
                    }
                }
            }
            if let Some(l) = layout.lambda {
                a[(row, l)] = 1.0;
            }
        }
        for c in 0..nc {
            if let Some(r) = layout.flux_row[c] {
                let q0 = layout.q_off[c].unwrap();
                for (j, w) in disc.components[c].weights.iter().enumerate() {
                    a[(r, q0 + j)] = *w;
                }
            }
        }
        if let (Some(norm), Some(r)) = (&normalization, layout.lambda) {
            match norm {
                Normalization::BoundaryMean(list) => {
                    for &c in list {
                        let comp = &disc.components[c];
                        for (j, w) in comp.weights.iter().enumerate() {
                            match kinds[c] {
                                ConditionKind::Neumann => a[(r, layout.w_off[c].unwrap() + j)] += w,
                                ConditionKind::Floating => a[(r, layout.constant[c].unwrap())] += w,
                                ConditionKind::Dirichlet => unreachable!(),
                            }
                        }
                    }
                }
                Normalization::AreaMean => {
                    for c in 0..nc {
                        let comp = &disc.components[c];
                        for j in 0..comp.len() {
                            let (dq, qv) = area_weight(disc.center, comp.points[j], comp.normals[j]);
                            let w = comp.weights[j];
                            match kinds[c] {
                                ConditionKind::Neumann => a[(r, layout.w_off[c].unwrap() + j)] += w * dq,
                                ConditionKind::Floating => {
                                    a[(r, layout.constant[c].unwrap())] += w * dq;
                                    a[(r, layout.q_off[c].unwrap() + j)] -= w * qv;
                                }
                                ConditionKind::Dirichlet => unreachable!(),
                            }
                        }
                    }
                }
            }
        }
        let lu = Lu::factor(a)?;
        Ok(LayerSystem { disc, kinds: kinds.to_vec(), normalization, single, double, layout, lu })
    }

    pub fn nodes(&self) -> &Arc<Discretized> {
        &self.disc
    }

    pub fn kinds(&self) -> &[ConditionKind] {
        &self.kinds
    }

    pub fn solve(&self, conditions: &[BoundaryCondition], sources: &Sources) -> Result<HarmonicField> {
        let disc = &*self.disc;
        let nc = disc.num_components();
        if conditions.len() != nc {
            return Err(Error::ComponentCountMismatch { expected: nc, got: conditions.len() });
        }
        for (c, (cond, kind)) in conditions.iter().zip(&self.kinds).enumerate() {
            if cond.kind() != *kind {
                return Err(Error::InvalidArgument(alloc::format!(
                    "component {c}: condition {:?} does not match the assembled kind {kind:?}",
                    cond.kind()
                )));
            }
        }
        let m = disc.total;
        // Known regular-part data per component.
        let mut w_known: Vec<Vec<f64>> = Vec::with_capacity(nc);
        let mut q_known: Vec<Vec<f64>> = Vec::with_capacity(nc);
        let mut src_vals: Vec<Vec<f64>> = Vec::with_capacity(nc);
        let mut src_dn: Vec<Vec<f64>> = Vec::with_capacity(nc);
        for (c, cond) in conditions.iter().enumerate() {
            let comp = &disc.components[c];
            let n = comp.len();
            let sv: Vec<f64> = comp.points.iter().map(|p| sources.value(*p)).collect();
            let sd: Vec<f64> = comp.points.iter().zip(&comp.normals).map(|(p, nu)| sources.grad(*p).dot(*nu)).collect();
            match cond {
                BoundaryCondition::Dirichlet(p) => {
                    let f = p.nodal(n)?;
                    w_known.push(f.iter().zip(&sv).map(|(f, s)| f - s).collect());
                    q_known.push(Vec::new());
                }
                BoundaryCondition::Neumann(p) => {
                    let g = p.nodal(n)?;
                    q_known.push(g.iter().zip(&sd).map(|(g, s)| g - s).collect());
                    w_known.push(Vec::new());
                }
                BoundaryCondition::Floating { flux } => {
                    if !flux.is_finite() {
                        return Err(Error::InvalidArgument(alloc::format!("component {c}: non-finite flux")));
                    }
                    w_known.push(Vec::new());
                    q_known.push(Vec::new());
                }
            }
            src_vals.push(sv);
            src_dn.push(sd);
        }

        if !self.kinds.contains(&ConditionKind::Dirichlet) {
            let mut flux = 0.0;
            let mut scale = 0.0;
            for (c, cond) in conditions.iter().enumerate() {
                let part = match cond {
                    BoundaryCondition::Neumann(_) => disc.components[c]
                        .weights
                        .iter()
                        .zip(q_known[c].iter().zip(&src_dn[c]))
                        .map(|(w, (q, s))| w * (q + s))
                        .sum::<f64>(),
                    BoundaryCondition::Floating { flux } => *flux,
                    BoundaryCondition::Dirichlet(_) => unreachable!(),
                };
                flux += part;
                scale += part.abs();
            }
            let required = 2.0 * PI * sources.total_strength();
            if (flux - required).abs() > COMPATIBILITY_TOL * (1.0 + scale) {
                return Err(Error::IncompatibleNeumannData { flux, required });
            }
        }

        let mut rhs = vec![0.0; self.layout.size];
        for (row, r) in rhs.iter_mut().enumerate().take(m) {
            let mut acc = 0.0;
            for c in 0..nc {
                let off = disc.offsets[c];
                let n = disc.components[c].len();
                match self.kinds[c] {
                    ConditionKind::Dirichlet => {
                        for j in 0..n {
                            acc -= self.double[(row, off + j)] * w_known[c][j];
                        }
                    }
                    ConditionKind::Neumann => {
                        for j in 0..n {
                            acc += self.single[(row, off + j)] * q_known[c][j];
                        }
                    }
                    ConditionKind::Floating => {
                        for j in 0..n {
                            acc += self.double[(row, off + j)] * src_vals[c][j];
                        }
                    }
                }
            }
            *r = acc;
        }
        for (c, cond) in conditions.iter().enumerate() {
            if let (BoundaryCondition::Floating { flux }, Some(r)) = (cond, self.layout.flux_row[c]) {
                rhs[r] = flux - disc.source_flux(sources, c);
            }
        }
        if let (Some(norm), Some(r)) = (&self.normalization, self.layout.lambda) {
            let mut acc = 0.0;
            match norm {
                Normalization::BoundaryMean(list) => {
                    for &c in list {
                        if self.kinds[c] == ConditionKind::Neumann {
                            let comp = &disc.components[c];
                            acc -= comp.weights.iter().zip(&src_vals[c]).map(|(w, s)| w * s).sum::<f64>();
                        }
                    }
                }
                Normalization::AreaMean => {
                    for c in 0..nc {
                        let comp = &disc.components[c];
                        for j in 0..comp.len() {
                            let (dq, qv) = area_weight(disc.center, comp.points[j], comp.normals[j]);
                            let w = comp.weights[j];
                            match self.kinds[c] {
                                ConditionKind::Neumann => {
                                    acc -= w * dq * src_vals[c][j];
                                    acc += w * qv * (q_known[c][j] + src_dn[c][j]);
                                }
                                ConditionKind::Floating => acc += w * qv * src_dn[c][j],
                                ConditionKind::Dirichlet => unreachable!(),
                            }
                        }
                    }
                    for &(a, d) in sources.items() {
                        acc -= 2.0 * PI * d * 0.25 * (a - disc.center).norm_sq();
                    }
                }
            }
            rhs[r] = acc;
        }

        let sol = self.lu.solve(&rhs);
        let mut w = Vec::with_capacity(nc);
        let mut q = Vec::with_capacity(nc);
        let mut constants = vec![None; nc];
        for c in 0..nc {
            let n = disc.components[c].len();
            match self.kinds[c] {
                ConditionKind::Dirichlet => {
                    w.push(w_known[c].clone());
                    let o = self.layout.q_off[c].unwrap();
                    q.push(sol[o..o + n].to_vec());
                }
                ConditionKind::Neumann => {
                    let o = self.layout.w_off[c].unwrap();
                    w.push(sol[o..o + n].to_vec());
                    q.push(q_known[c].clone());
                }
                ConditionKind::Floating => {
                    let k = sol[self.layout.constant[c].unwrap()];
                    constants[c] = Some(k);
                    w.push(src_vals[c].iter().map(|s| k - s).collect());
                    let o = self.layout.q_off[c].unwrap();
                    q.push(sol[o..o + n].to_vec());
                }
            }
        }
        let multiplier = self.layout.lambda.map(|l| sol[l]).unwrap_or(0.0);
        Ok(HarmonicField::new(self.disc.clone(), sources.clone(), w, q, constants, multiplier))
    }
}

/// `(∂_ν Q, Q)` for `Q = |x − x̄|²/4`.
fn area_weight(center: Vec2, x: Vec2, normal: Vec2) -> (f64, f64) {
    let r = x - center;
    (0.5 * r.dot(normal), 0.25 * r.norm_sq())
}

/// A solved Laplace problem.
#[derive(Debug, Clone)]
pub struct HarmonicField {
    disc: Arc<Discretized>,
    sources: Sources,
    w: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
    w_interp: Vec<TrigInterpolant>,
    q_interp: Vec<TrigInterpolant>,
    dw: Vec<Vec<f64>>,
    constants: Vec<Option<f64>>,
    multiplier: f64,
    cauchy: Vec<(Complex64, Complex64, Complex64)>,
}

impl HarmonicField {
    fn new(
        disc: Arc<Discretized>,
        sources: Sources,
        w: Vec<Vec<f64>>,
        q: Vec<Vec<f64>>,
        constants: Vec<Option<f64>>,
        multiplier: f64,
    ) -> Self {
        let dw: Vec<Vec<f64>> = w.iter().map(|v| spectral_derivative(v)).collect();
        let w_interp = w.iter().map(|v| TrigInterpolant::new(v)).collect();
        let q_interp = q.iter().map(|v| TrigInterpolant::new(v)).collect();
        let mut cauchy = Vec::with_capacity(disc.total);
        for (c, comp) in disc.components.iter().enumerate() {
            let h = 2.0 * PI / comp.len() as f64;
            for j in 0..comp.len() {
                let grad = comp.normals[j] * q[c][j] + comp.tangents[j] * (dw[c][j] / comp.speeds[j]);
                let f = Complex64::new(grad.x, -grad.y);
                let v = comp.velocities[j];
                let dz = Complex64::new(v.x, v.y) * (comp.orientation * h);
                let z = Complex64::new(comp.points[j].x, comp.points[j].y);
                cauchy.push((f, dz, z));
            }
        }
        HarmonicField { disc, sources, w, q, w_interp, q_interp, dw, constants, multiplier, cauchy }
    }

    pub fn nodes(&self) -> &Arc<Discretized> {
        &self.disc
    }

    pub fn domain(&self) -> &Domain {
        &self.disc.domain
    }

    pub fn sources(&self) -> &Sources {
        &self.sources
    }

    /// Solved floating constant of component `c`, if it floats.
    pub fn constant(&self, c: usize) -> Option<f64> {
        self.constants.get(c).copied().flatten()
    }

    /// Normalization multiplier; zero for compatible data up to
    /// discretization error.
    pub fn multiplier(&self) -> f64 {
        self.multiplier
    }

    fn check_component(&self, c: usize) -> Result<()> {
        if c < self.disc.num_components() {
            Ok(())
        } else {
            Err(Error::BadComponentIndex(c))
        }
    }

    /// `u` at the nodes of component `c`.
    pub fn nodal_values(&self, c: usize) -> Result<Vec<f64>> {
        self.check_component(c)?;
        let comp = &self.disc.components[c];
        Ok(self.w[c].iter().zip(&comp.points).map(|(w, p)| w + self.sources.value(*p)).collect())
    }

    /// `∂_ν u` at the nodes of component `c`.
    pub fn nodal_normal_derivatives(&self, c: usize) -> Result<Vec<f64>> {
        self.check_component(c)?;
        let comp = &self.disc.components[c];
        Ok(self.q[c]
            .iter()
            .zip(comp.points.iter().zip(&comp.normals))
            .map(|(q, (p, n))| q + self.sources.grad(*p).dot(*n))
            .collect())
    }

    /// `∮_Γ u·f ds` for nodal `f` on component `c`.
    pub fn boundary_pairing(&self, c: usize, f: &[f64]) -> Result<f64> {
        let u = self.nodal_values(c)?;
        let comp = &self.disc.components[c];
        if f.len() != comp.len() {
            return Err(Error::InvalidArgument("pairing profile has the wrong length".into()));
        }
        Ok(comp.weights.iter().zip(u.iter().zip(f)).map(|(w, (u, f))| w * u * f).sum())
    }

    fn check_interior(&self, x: Vec2) -> Result<()> {
        let band = self.disc.band;
        if !x.is_finite() || !self.disc.domain.contains(x) || self.disc.domain.distance_to_boundary(x) <= band {
            return Err(Error::TooCloseToBoundary { x: x.x, y: x.y, band });
        }
        Ok(())
    }

    fn layer_value(&self, x: Vec2) -> f64 {
        let shift = self.disc.log_l / (2.0 * PI);
        let mut s = 0.0;
        for (c, comp) in self.disc.components.iter().enumerate() {
            for j in 0..comp.len() {
                let r = comp.points[j] - x;
                let r2 = r.norm_sq();
                let phi = -libm::log(r2) / (4.0 * PI) + shift;
                let k = -r.dot(comp.normals[j]) / (2.0 * PI * r2);
                s += comp.weights[j] * (phi * self.q[c][j] - k * self.w[c][j]);
            }
        }
        s
    }

    /// `u(x)` for `x` at distance more than the band from `∂G`.
    pub fn eval(&self, x: Vec2) -> Result<f64> {
        self.check_interior(x)?;
        Ok(self.layer_value(x) + self.sources.value(x))
    }

    /// `∇u(x)` by analytic differentiation of the kernels.
    pub fn eval_grad(&self, x: Vec2) -> Result<Vec2> {
        self.check_interior(x)?;
        let mut g = Vec2::ZERO;
        for (c, comp) in self.disc.components.iter().enumerate() {
            for j in 0..comp.len() {
                let r = comp.points[j] - x;
                let r2 = r.norm_sq();
                let nu = comp.normals[j];
                let grad_phi = r * (1.0 / (2.0 * PI * r2));
                let grad_k = (nu * (1.0 / r2) - r * (2.0 * r.dot(nu) / (r2 * r2))) * (1.0 / (2.0 * PI));
                g += (grad_phi * self.q[c][j] - grad_k * self.w[c][j]) * comp.weights[j];
            }
        }
        Ok(g + self.sources.grad(x))
    }

    /// `∇u(x)` for any `x` in `Ḡ` away from the sources, accurate up to the
    /// boundary (barycentric Cauchy formula applied to `w_x − i w_y`).
    pub fn eval_grad_close(&self, x: Vec2) -> Vec2 {
        let z = Complex64::new(x.x, x.y);
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = Complex64::new(0.0, 0.0);
        for &(f, dz, zj) in &self.cauchy {
            let diff = zj - z;
            if diff.norm_sqr() == 0.0 {
                return Vec2::new(f.re, -f.im) + self.sources.grad(x);
            }
            let k = dz / diff;
            num += f * k;
            den += k;
        }
        let f = num / den;
        Vec2::new(f.re, -f.im) + self.sources.grad(x)
    }

    /// `u(x)` inside the band, using trigonometric upsampling of the
    /// boundary data so that `x` is resolved.
    pub fn eval_near(&self, x: Vec2) -> Result<f64> {
        Ok(self.layer_value_near(x)? + self.sources.value(x))
    }

    fn layer_value_near(&self, x: Vec2) -> Result<f64> {
        let band = self.disc.band;
        if !x.is_finite() || !self.disc.domain.contains(x) {
            return Err(Error::TooCloseToBoundary { x: x.x, y: x.y, band });
        }
        let dist = self.disc.domain.distance_to_boundary(x);
        if dist > band {
            return Ok(self.layer_value(x));
        }
        let mut factor = 2;
        while band / factor as f64 >= dist {
            factor *= 2;
            if factor > MAX_UPSAMPLING {
                return Err(Error::TooCloseToBoundary { x: x.x, y: x.y, band: band / MAX_UPSAMPLING as f64 });
            }
        }
        let shift = self.disc.log_l / (2.0 * PI);
        let mut s = 0.0;
        for c in 0..self.disc.num_components() {
            let n = self.disc.components[c].len() * factor;
            for t in periodic_nodes(n) {
                let f = self.disc.domain.frame(c, t);
                let r = f.point - x;
                let r2 = r.norm_sq();
                let phi = -libm::log(r2) / (4.0 * PI) + shift;
                let k = -r.dot(f.normal) / (2.0 * PI * r2);
                let wq = self.q_interp[c].eval(t);
                let ww = self.w_interp[c].eval(t);
                s += 2.0 * PI / n as f64 * f.speed * (phi * wq - k * ww);
            }
        }
        Ok(s)
    }

    /// `∮_{Γ_c} ∂_ν u ds` with the outward normal of `G`.
    pub fn flux(&self, c: usize) -> Result<f64> {
        self.check_component(c)?;
        let comp = &self.disc.components[c];
        let layer: f64 = comp.weights.iter().zip(&self.q[c]).map(|(w, q)| w * q).sum();
        Ok(layer + self.disc.source_flux(&self.sources, c))
    }

    /// `∮_{Γ_c} ∂_τ u ds` with `τ` anticlockwise.
    pub fn tangential_integral(&self, c: usize) -> Result<f64> {
        self.check_component(c)?;
        let comp = &self.disc.components[c];
        let h = 2.0 * PI / comp.len() as f64;
        Ok((0..comp.len())
            .map(|j| {
                let ds = self.sources.grad(comp.points[j]).dot(comp.velocities[j]);
                h * (self.dw[c][j] + ds)
            })
            .sum())
    }

    /// One-sided boundary value of `u` on component `c` at parameter `t`.
    pub fn boundary_trace(&self, c: usize, t: f64) -> Result<f64> {
        self.check_component(c)?;
        if let Some(k) = self.constants[c] {
            return Ok(k);
        }
        let p = self.disc.domain.curve(c).point(t);
        Ok(self.w_interp[c].eval(t) + self.sources.value(p))
    }

    /// One-sided `∂_ν u` on component `c` at parameter `t`.
    pub fn boundary_normal_derivative(&self, c: usize, t: f64) -> Result<f64> {
        self.check_component(c)?;
        let f = self.disc.domain.frame(c, t);
        Ok(self.q_interp[c].eval(t) + self.sources.grad(f.point).dot(f.normal))
    }

    /// One-sided `∂_τ u` on component `c` at parameter `t`.
    pub fn boundary_tangential_derivative(&self, c: usize, t: f64) -> Result<f64> {
        self.check_component(c)?;
        let f = self.disc.domain.frame(c, t);
        Ok(self.w_interp[c].eval_derivative(t) / f.speed + self.sources.grad(f.point).dot(f.tangent))
    }

    /// `R(a_i)` where `R = u − Σ_j d_j log|x − a_j|` is the field with all
    /// its singularities removed.
    pub fn regular_part(&self, i: usize) -> Result<f64> {
        let &(a, _) = self.sources.items().get(i).ok_or(Error::NoSuchSource(i))?;
        self.layer_value_near(a)
    }
}

/// Dirichlet problem `u = f_c` on every component.
pub fn solve_dirichlet(domain: &Domain, sources: &Sources, values: Vec<Profile>) -> Result<HarmonicField> {
    let conds: Vec<BoundaryCondition> = values.into_iter().map(BoundaryCondition::Dirichlet).collect();
    solve_modified_dirichlet(domain, sources, conds, None)
}

/// Neumann problem `∂_ν u = g_c` (outward normal of `G`) with a
/// normalization.
pub fn solve_neumann(
    domain: &Domain,
    sources: &Sources,
    data: Vec<Profile>,
    normalization: Normalization,
) -> Result<HarmonicField> {
    let conds: Vec<BoundaryCondition> = data.into_iter().map(BoundaryCondition::Neumann).collect();
    solve_modified_dirichlet(domain, sources, conds, Some(normalization))
}

/// Mixed problem: each component carries its own condition.
pub fn solve_modified_dirichlet(
    domain: &Domain,
    sources: &Sources,
    conditions: Vec<BoundaryCondition>,
    normalization: Option<Normalization>,
) -> Result<HarmonicField> {
    let kinds: Vec<ConditionKind> = conditions.iter().map(|c| c.kind()).collect();
    LayerSystem::new(domain, &kinds, normalization)?.solve(&conditions, sources)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Curve, Discretization, PunctureSet};
    use crate::quadrature::TrigSeries;

    fn disk() -> Domain {
        Domain::new(Curve::circle(Vec2::ZERO, 1.0), vec![], PunctureSet::empty(), Discretization::default()).unwrap()
    }

    fn annulus(r: f64) -> Domain {
        Domain::new(
            Curve::circle(Vec2::ZERO, 1.0),
            vec![Curve::circle(Vec2::ZERO, r)],
            PunctureSet::empty(),
            Discretization::default(),
        )
        .unwrap()
    }

    fn at(r: f64, a: f64) -> Vec2 {
        Vec2::from_polar(r, a)
    }

    #[test]
    fn annulus_harmonic_measure() {
        let rbar = (-1.0f64).exp();
        let phi = solve_dirichlet(&annulus(rbar), &Sources::none(), vec![Profile::Constant(0.0), Profile::Constant(1.0)])
            .unwrap();
        for k in 0..10 {
            let x = at(0.5 + 0.03 * k as f64, 0.7 * k as f64);
            assert!((phi.eval(x).unwrap() + libm::log(x.norm())).abs() < 1e-11);
        }
        let g = phi.eval_grad(Vec2::new(0.5, 0.0)).unwrap();
        assert!(g.dist(Vec2::new(-2.0, 0.0)) < 1e-10);
        assert!((phi.flux(1).unwrap() - 2.0 * PI).abs() < 1e-10);
        assert!((phi.flux(0).unwrap() + 2.0 * PI).abs() < 1e-10);
        assert!((phi.boundary_trace(1, 0.3).unwrap() - 1.0).abs() < 1e-12);
        assert!(phi.tangential_integral(1).unwrap().abs() < 1e-12);
    }

    #[test]
    fn disk_dirichlet_green_function() {
        let s = Sources::new(vec![(Vec2::ZERO, 1.0)]);
        let g = solve_dirichlet(&disk(), &s, vec![Profile::Constant(0.0)]).unwrap();
        assert!((g.eval(Vec2::new(0.5, 0.0)).unwrap() - libm::log(0.5)).abs() < 1e-12);
        assert!(g.regular_part(0).unwrap().abs() < 1e-12);
        assert!((g.flux(0).unwrap() - 2.0 * PI).abs() < 1e-12);
        assert!(g.boundary_trace(0, 1.1).unwrap().abs() < 1e-12);
        assert!(matches!(g.regular_part(1), Err(Error::NoSuchSource(1))));
    }

    #[test]
    fn disk_green_function_off_center() {
        let a = Vec2::new(0.3, 0.0);
        let s = Sources::new(vec![(a, 1.0)]);
        let g = solve_dirichlet(&disk(), &s, vec![Profile::Constant(0.0)]).unwrap();
        assert!((g.regular_part(0).unwrap() + libm::log(1.0 - 0.09)).abs() < 1e-11);
        let x = Vec2::new(-0.2, 0.4);
        let image = a * (1.0 / a.norm_sq());
        let exact = libm::log(x.dist(a)) - libm::log(x.dist(image) * a.norm());
        assert!((g.eval(x).unwrap() - exact).abs() < 1e-11);
    }

    #[test]
    fn regular_part_removes_every_singularity() {
        let (a, b) = (Vec2::new(0.3, 0.1), Vec2::new(-0.2, -0.4));
        let s = Sources::new(vec![(a, 1.0), (b, -2.0)]);
        let g = solve_dirichlet(&disk(), &s, vec![Profile::Constant(0.0)]).unwrap();
        // Image term of the unit-disk Green function: −log|1 − conj(y)·x|.
        let image = |x: Vec2, y: Vec2| -libm::log((Complex64::new(1.0, 0.0) - Complex64::new(y.x, -y.y) * Complex64::new(x.x, x.y)).norm());
        let exact = image(a, a) - 2.0 * image(a, b);
        assert!((g.regular_part(0).unwrap() - exact).abs() < 1e-11);
    }

    #[test]
    fn constant_dirichlet_data_gives_constant_field() {
        let d = annulus(0.4);
        let f = solve_dirichlet(&d, &Sources::none(), vec![Profile::Constant(2.5), Profile::Constant(2.5)]).unwrap();
        assert!((f.eval(Vec2::new(0.0, 0.7)).unwrap() - 2.5).abs() < 1e-12);
        assert!(f.eval_grad(Vec2::new(0.0, 0.7)).unwrap().norm() < 1e-11);
        assert!(f.flux(0).unwrap().abs() < 1e-11 && f.flux(1).unwrap().abs() < 1e-11);
    }

    #[test]
    fn disk_neumann_with_source() {
        let s = Sources::new(vec![(Vec2::ZERO, 1.0)]);
        let d = disk();
        let f = solve_neumann(&d, &s, vec![Profile::Constant(1.0)], Normalization::boundary_mean(&d)).unwrap();
        for x in [Vec2::new(0.5, 0.0), Vec2::new(-0.1, 0.6)] {
            assert!((f.eval(x).unwrap() - libm::log(x.norm())).abs() < 1e-12);
        }
        assert!(f.multiplier().abs() < 1e-12);
        // ∫_disk log r dA = −π/2 over area π: the area-mean solution is log r + ½.
        let f = solve_neumann(&d, &s, vec![Profile::Constant(1.0)], Normalization::AreaMean).unwrap();
        let x = Vec2::new(0.5, 0.0);
        assert!((f.eval(x).unwrap() - libm::log(0.5) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_data_and_phase_neumann_data_give_zero_field() {
        let d = annulus(0.3);
        let f = solve_neumann(&d, &Sources::none(), vec![Profile::Constant(0.0); 2], Normalization::boundary_mean(&d))
            .unwrap();
        assert!(f.eval(Vec2::new(0.6, 0.1)).unwrap().abs() < 1e-14);
        // ∂_ν ψ_N = −x^⊥/|x|²·ν vanishes on the unit circle.
        let dd = disk();
        let nodes = Discretized::new(&dd);
        let data: Vec<f64> = nodes.component(0).points.iter().zip(&nodes.component(0).normals)
            .map(|(x, n)| -x.perp().dot(*n) / x.norm_sq())
            .collect();
        let f = solve_neumann(&dd, &Sources::none(), vec![Profile::Nodal(data)], Normalization::boundary_mean(&dd))
            .unwrap();
        assert!(f.eval(Vec2::new(0.2, 0.3)).unwrap().abs() < 1e-14);
    }

    #[test]
    fn floating_hole_reproduces_radial_solution() {
        let rho = 0.1;
        let d = annulus(rho);
        let conds = vec![BoundaryCondition::Neumann(Profile::Constant(1.0)), BoundaryCondition::Floating { flux: -2.0 * PI }];
        let f = solve_modified_dirichlet(&d, &Sources::none(), conds, Some(Normalization::BoundaryMean(vec![0])))
            .unwrap();
        assert!((f.constant(1).unwrap() - libm::log(rho)).abs() < 1e-11);
        assert!((f.eval(Vec2::new(0.0, 0.5)).unwrap() - libm::log(0.5)).abs() < 1e-11);

        let conds = vec![BoundaryCondition::Dirichlet(Profile::Constant(0.0)), BoundaryCondition::Floating { flux: -2.0 * PI }];
        let f = solve_modified_dirichlet(&d, &Sources::none(), conds, None).unwrap();
        assert!((f.constant(1).unwrap() - libm::log(rho)).abs() < 1e-11);
        assert_eq!(f.constant(0), None);

        let conds = vec![BoundaryCondition::Dirichlet(Profile::Constant(0.0)), BoundaryCondition::Floating { flux: 0.0 }];
        let f = solve_modified_dirichlet(&d, &Sources::none(), conds, None).unwrap();
        assert!(f.constant(1).unwrap().abs() < 1e-13);
        assert!(f.eval(Vec2::new(0.4, 0.4)).unwrap().abs() < 1e-13);
    }

    #[test]
    fn problem_classification_errors() {
        let d = annulus(0.3);
        let n = vec![ConditionKind::Neumann, ConditionKind::Floating];
        assert!(matches!(LayerSystem::new(&d, &n, None), Err(Error::UnderDeterminedProblem(_))));
        let dn = vec![ConditionKind::Dirichlet, ConditionKind::Neumann];
        assert!(matches!(
            LayerSystem::new(&d, &dn, Some(Normalization::AreaMean)),
            Err(Error::OverDeterminedProblem(_))
        ));
        let bad = solve_neumann(&d, &Sources::none(), vec![Profile::Constant(1.0), Profile::Constant(0.0)], Normalization::AreaMean);
        assert!(matches!(bad, Err(Error::IncompatibleNeumannData { .. })));
    }

    fn star() -> Curve {
        Curve::Fourier {
            x: TrigSeries::new(0.1, vec![1.0, 0.0, 0.0, 0.0, 0.12], vec![0.0, 0.05]),
            y: TrigSeries::new(-0.05, vec![0.0, 0.0, 0.08], vec![0.9]),
        }
    }

    fn star_domain() -> Domain {
        let holes = vec![Curve::circle(Vec2::new(0.35, 0.1), 0.15), Curve::circle(Vec2::new(-0.35, -0.2), 0.2)];
        Domain::new(star(), holes, PunctureSet::empty(), Discretization::default()).unwrap()
    }

    #[test]
    fn harmonic_polynomial_on_general_domain() {
        let d = star_domain();
        let u = |p: Vec2| p.x * p.x - p.y * p.y + 0.3 * p.x * p.y - p.y;
        let nodes = Discretized::new(&d);
        let data: Vec<Profile> =
            (0..3).map(|c| Profile::Nodal(nodes.component(c).points.iter().map(|p| u(*p)).collect())).collect();
        let f = solve_dirichlet(&d, &Sources::none(), data).unwrap();
        for x in [Vec2::new(0.0, 0.5), Vec2::new(0.0, -0.55), Vec2::new(0.6, -0.35)] {
            assert!((f.eval(x).unwrap() - u(x)).abs() < 1e-10, "{x:?}");
            let g = f.eval_grad(x).unwrap();
            let exact = Vec2::new(2.0 * x.x + 0.3 * x.y, -2.0 * x.y + 0.3 * x.x - 1.0);
            assert!(g.dist(exact) < 1e-9);
            assert!(f.eval_grad_close(x).dist(exact) < 1e-9);
        }
        // Close to the boundary, the Cauchy formula stays accurate.
        for c in 0..3 {
            for t in [0.3, 2.0, 4.4] {
                let fr = d.frame(c, t);
                for delta in [1e-2, 1e-3, 1e-5] {
                    let x = fr.point - fr.normal * delta;
                    let exact = Vec2::new(2.0 * x.x + 0.3 * x.y, -2.0 * x.y + 0.3 * x.x - 1.0);
                    assert!(f.eval_grad_close(x).dist(exact) < 1e-8, "c={c} t={t} delta={delta}");
                }
                let x = fr.point - fr.normal * 1e-2;
                assert!((f.eval_near(x).unwrap() - u(x)).abs() < 1e-8);
                assert!(matches!(f.eval(x), Err(Error::TooCloseToBoundary { .. })));
            }
        }
    }

    #[test]
    fn green_reciprocity_and_flux_balance() {
        let d = star_domain();
        let phi: Vec<HarmonicField> = (1..3)
            .map(|l| {
                let vals = (0..3).map(|c| Profile::Constant(if c == l { 1.0 } else { 0.0 })).collect();
                solve_dirichlet(&d, &Sources::none(), vals).unwrap()
            })
            .collect();
        let mut s = 0.0;
        for c in 0..3 {
            let du = phi[0].nodal_normal_derivatives(c).unwrap();
            let dv = phi[1].nodal_normal_derivatives(c).unwrap();
            s += phi[0].boundary_pairing(c, &dv).unwrap() - phi[1].boundary_pairing(c, &du).unwrap();
        }
        assert!(s.abs() < 1e-8);
        let src = Sources::new(vec![(Vec2::new(0.0, 0.4), 2.0), (Vec2::new(-0.1, -0.5), -1.0)]);
        let g = solve_dirichlet(&d, &src, vec![Profile::Constant(0.0); 3]).unwrap();
        let layer: f64 = (0..3)
            .map(|c| {
                let comp = g.nodes().component(c);
                g.nodal_normal_derivatives(c).unwrap().iter().zip(&comp.weights).map(|(q, w)| q * w).sum::<f64>()
            })
            .sum();
        assert!((layer - 2.0 * PI).abs() < 1e-8);
        for c in 0..3 {
            assert!(g.tangential_integral(c).unwrap().abs() < 1e-10);
        }
    }
}
