//! Finite-ρ energies on the perforated domain `Ω_ρ = G \ ∪ B̄_ρ(a_i)`.
//!
//! Both energies are reduced to boundary integrals of different boundary
//! value problems than the closed forms use:
//!
//! - Dirichlet: `W^ρ_g = ½∫|∇Φ_ρ|² + min_{α ∈ θ_ρ + 2πZⁿ} ½ αᵀP_ρα`, where
//!   `Φ_ρ` has Neumann data `±g ∧ ∂_τ g` on `∂G` and is constant on each
//!   `∂B_ρ(a_i)` with flux `2πd_i`, and `P_ρ` uses homogeneous Neumann data
//!   on the small circles.
//! - Neumann: `W^ρ_N = ½∫|∇Φ̂_ρ|²` with `Φ̂_ρ = 0` on `Γ₀` and constant on
//!   every other curve with fluxes `2πd̃_l` and `2πd_i`.
//!
//! `W^ρ − π Σ d_i² |log ρ|` is non-increasing in `ρ` and converges to the
//! renormalized energy.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::boundary_data::BoundaryData;
use crate::domain::Domain;
use crate::harmonic_solver::{
    BoundaryCondition, ConditionKind, Discretized, HarmonicField, LayerSystem, Normalization, Profile, Sources,
};
use crate::renorm::{NeumannMode, Problem};
use crate::topology::{harmonic_measures_first, lattice_minimize, theta_offsets};
use crate::{Error, Result, Vec2};
#[allow(unused_imports)]
use num_traits::Float;

/// Allowed decrease of the deflated value between consecutive radii.
pub const MONOTONE_SLACK: f64 = 1e-7;
/// Smallest fitted order accepted before extrapolating.
pub const MIN_ORDER: f64 = 0.7;

/// One finite-ρ evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoRecord {
    pub rho: f64,
    pub value: f64,
    /// `value − π Σ d_i² |log ρ|`.
    pub deflated: f64,
    /// Constants of the potential on the floating curves, in component
    /// order of `Ω_ρ`.
    pub constants: Vec<f64>,
    /// Dirichlet: lattice shifts. Neumann: empty.
    pub shifts: Vec<i64>,
    /// Dirichlet: `α_ρ`. Neumann: empty.
    pub alpha: Vec<f64>,
    /// Neumann: selected hole degrees. Dirichlet: empty.
    pub degrees: Vec<i64>,
    /// Runner-up minus best over the lattice or degree candidates.
    pub gap: f64,
}

fn deflation(domain: &Domain, rho: f64) -> f64 {
    PI * domain.punctures().sum_squared_degrees() as f64 * libm::log(rho).abs()
}

/// `Φ_ρ` on `Ω_ρ`.
pub fn solve_phi_rho(domain: &Domain, g: &BoundaryData, rho: f64) -> Result<(Domain, HarmonicField, Vec<Vec<f64>>)> {
    let g = BoundaryData::for_domain(domain, g.components().to_vec())?;
    let omega = domain.omega_rho(rho)?;
    let nodes = Discretized::new(&omega);
    let nb = domain.num_components();
    let mut data = Vec::with_capacity(nb);
    for c in 0..nb {
        let comp = nodes.component(c);
        let gc = g.component(c)?;
        data.push(
            comp.params.iter().zip(&comp.speeds).map(|(t, s)| comp.orientation * gc.lift_derivative(*t) / s).collect::<Vec<_>>(),
        );
    }
    let mut conds: Vec<BoundaryCondition> = data.iter().cloned().map(|d| BoundaryCondition::Neumann(Profile::Nodal(d))).collect();
    for p in domain.punctures().iter() {
        conds.push(BoundaryCondition::Floating { flux: -2.0 * PI * p.degree as f64 });
    }
    let kinds: Vec<ConditionKind> = conds.iter().map(|c| c.kind()).collect();
    let system = LayerSystem::new(&omega, &kinds, Some(Normalization::BoundaryMean((0..nb).collect())))?;
    let field = system.solve(&conds, &Sources::none())?;
    Ok((omega, field, data))
}

/// `W^ρ_g` for Dirichlet data `g`.
pub fn finite_rho_dirichlet(domain: &Domain, g: &BoundaryData, rho: f64, radius: usize) -> Result<RhoRecord> {
    let (omega, field, data) = solve_phi_rho(domain, g, rho)?;
    let nb = domain.num_components();
    let mut twice = 0.0;
    for (c, d) in data.iter().enumerate() {
        twice += field.boundary_pairing(c, d)?;
    }
    let mut constants = Vec::new();
    for (i, p) in domain.punctures().iter().enumerate() {
        let k = field.constant(nb + i).unwrap_or(0.0);
        constants.push(k);
        twice += k * (-2.0 * PI * p.degree as f64);
    }
    let mut value = 0.5 * twice;
    let n = domain.num_holes();
    let (mut shifts, mut alpha, mut gap) = (Vec::new(), Vec::new(), f64::INFINITY);
    if n > 0 {
        let pm = harmonic_measures_first(&omega, n)?;
        let g = BoundaryData::for_domain(domain, g.components().to_vec())?;
        let th = theta_offsets(&omega, &g, &field, n)?;
        let lat = lattice_minimize(&pm.period.matrix, &th.theta, radius)?;
        value += lat.value;
        gap = lat.second_value - lat.value;
        shifts = lat.shifts;
        alpha = lat.alpha;
    }
    Ok(RhoRecord { rho, value, deflated: value - deflation(domain, rho), constants, shifts, alpha, degrees: Vec::new(), gap })
}

/// `W^ρ_N`, minimized over `d̃` in optimal mode.
pub fn finite_rho_neumann(domain: &Domain, rho: f64, mode: &NeumannMode) -> Result<RhoRecord> {
    let omega = domain.omega_rho(rho)?;
    let n = domain.num_holes();
    let nc = omega.num_components();
    let mut kinds = vec![ConditionKind::Floating; nc];
    kinds[0] = ConditionKind::Dirichlet;
    let system = LayerSystem::new(&omega, &kinds, None)?;
    let candidates: Vec<Vec<i64>> = match mode {
        NeumannMode::Fixed(d) => {
            if d.len() != n {
                return Err(Error::ComponentCountMismatch { expected: n, got: d.len() });
            }
            vec![d.clone()]
        }
        NeumannMode::Optimal { radius } => degree_box(n, *radius as i64),
    };
    let mut best: Option<(f64, Vec<i64>, Vec<f64>)> = None;
    let mut second = f64::INFINITY;
    for d in candidates {
        let mut fluxes = vec![0.0; nc];
        for (l, dl) in d.iter().enumerate() {
            fluxes[l + 1] = -2.0 * PI * *dl as f64;
        }
        for (i, p) in domain.punctures().iter().enumerate() {
            fluxes[n + 1 + i] = -2.0 * PI * p.degree as f64;
        }
        let conds: Vec<BoundaryCondition> = (0..nc)
            .map(|c| if c == 0 { BoundaryCondition::Dirichlet(Profile::Constant(0.0)) } else { BoundaryCondition::Floating { flux: fluxes[c] } })
            .collect();
        let field = system.solve(&conds, &Sources::none())?;
        let constants: Vec<f64> = (1..nc).map(|c| field.constant(c).unwrap_or(0.0)).collect();
        let value = 0.5 * constants.iter().zip(&fluxes[1..]).map(|(k, f)| k * f).sum::<f64>();
        match &best {
            Some((b, _, _)) if value >= *b - 1e-12 => second = second.min(value),
            _ => {
                if let Some((b, _, _)) = &best {
                    second = second.min(*b);
                }
                best = Some((value, d, constants));
            }
        }
    }
    let (value, degrees, constants) = best.expect("at least one candidate");
    Ok(RhoRecord {
        rho,
        value,
        deflated: value - deflation(domain, rho),
        constants,
        shifts: Vec::new(),
        alpha: Vec::new(),
        degrees,
        gap: second - value,
    })
}

/// `{−r..r}ⁿ` in lexicographic order.
fn degree_box(n: usize, r: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out.into_iter().flat_map(|v| (-r..=r).map(move |k| {
            let mut w = v.clone();
            w.push(k);
            w
        })).collect();
    }
    out
}

/// Finite-ρ value for either problem.
pub fn finite_rho(domain: &Domain, problem: &Problem, rho: f64) -> Result<RhoRecord> {
    match problem {
        Problem::Dirichlet { g, radius } => finite_rho_dirichlet(domain, g, rho, *radius),
        Problem::Neumann { mode } => finite_rho_neumann(domain, rho, mode),
    }
}

/// Finite-ρ values on a geometric schedule with their limit.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoStudy {
    pub records: Vec<RhoRecord>,
    /// Richardson-extrapolated limit of the deflated values.
    pub extrapolated: f64,
    /// Fitted order `p` in `|deflated(ρ) − limit| ≈ C ρ^p`; `None` when the
    /// sequence is constant to rounding.
    pub order: Option<f64>,
    /// Fitted constant `C`.
    pub constant: f64,
    /// Largest decrease between consecutive deflated values (0 if monotone).
    pub max_decrease: f64,
}

impl RhoStudy {
    pub fn schedule(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.rho).collect()
    }
}

/// Deflated values on `ρ_j = ρ₀ 2^{−j}`, `j < steps`, checked for
/// monotonicity, with the convergence order fitted on consecutive
/// differences and a Richardson step at that order.
pub fn convergence_study(domain: &Domain, problem: &Problem, rho0: f64, steps: usize) -> Result<RhoStudy> {
    let schedule: Vec<f64> = (0..steps).map(|j| rho0 * libm::ldexp(1.0, -(j as i32))).collect();
    let records = schedule.iter().map(|&rho| finite_rho(domain, problem, rho)).collect::<Result<Vec<_>>>()?;
    analyze(records)
}

/// Monotonicity check, order fit and extrapolation of precomputed records
/// (radii halving at each step).
pub fn analyze(records: Vec<RhoRecord>) -> Result<RhoStudy> {
    if records.len() < 3 {
        return Err(Error::InvalidArgument(alloc::format!("a study needs at least 3 radii, got {}", records.len())));
    }
    let v: Vec<f64> = records.iter().map(|r| r.deflated).collect();
    let mut max_decrease = 0.0f64;
    for j in 1..v.len() {
        let drop = v[j - 1] - v[j];
        max_decrease = max_decrease.max(drop);
        if drop > MONOTONE_SLACK {
            return Err(Error::NonMonotoneSequence { step: j, prev: v[j - 1], next: v[j] });
        }
    }
    let scale = 1.0 + v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let noise = 1e-11 * scale;
    let pts: Vec<(f64, f64)> = (1..v.len())
        .filter(|&j| (v[j] - v[j - 1]).abs() > noise)
        .map(|j| (libm::log(records[j - 1].rho), libm::log((v[j] - v[j - 1]).abs())))
        .collect();
    let last = *v.last().unwrap();
    if pts.len() < 2 {
        return Ok(RhoStudy { records, extrapolated: last, order: None, constant: 0.0, max_decrease });
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    let p = sxy / sxx;
    if !(p >= MIN_ORDER) {
        return Err(Error::ConvergenceOrderMismatch { order: p, min: MIN_ORDER });
    }
    let k = libm::pow(2.0, p);
    let n = v.len();
    let extrapolated = (k * v[n - 1] - v[n - 2]) / (k - 1.0);
    let rl = records[n - 1].rho;
    let constant = (extrapolated - v[n - 1]) / libm::pow(rl, p);
    Ok(RhoStudy { records, extrapolated, order: Some(p), constant, max_decrease })
}

/// Which oscillation bound to test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OscillationBound {
    /// `∂_ν v = 0` on every curve outside the inclusions:
    /// `osc_Ω v ≤ Σ_i osc_{∂U_i} v`.
    NeumannOuter,
    /// `osc_Ω v ≤ Σ_i osc_{∂U_i} v + osc_{∂G} v`.
    General,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillationVerdict {
    pub interior: f64,
    pub bound: f64,
    pub samples: usize,
    pub holds: bool,
}

impl OscillationVerdict {
    pub fn margin(&self) -> f64 {
        self.bound - self.interior
    }
}

fn osc(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Samples the interior oscillation of a source-free `field` on a grid and
/// compares with the boundary oscillations at the quadrature nodes.
/// `inclusions` are the curves playing `∂U_i`; each must carry zero flux.
pub fn oscillation_check(field: &HarmonicField, inclusions: &[usize], bound: OscillationBound) -> Result<OscillationVerdict> {
    let domain = field.domain();
    if !field.sources().is_empty() {
        return Err(Error::InvalidArgument("field has point sources".into()));
    }
    let nc = domain.num_components();
    let mut scale = 1.0f64;
    for c in 0..nc {
        scale = scale.max(field.nodal_values(c)?.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    let tol = 1e-8 * scale;
    let mut b = 0.0;
    for &c in inclusions {
        if c >= nc {
            return Err(Error::BadComponentIndex(c));
        }
        let f = field.flux(c)?;
        if f.abs() > tol {
            return Err(Error::InvalidArgument(alloc::format!("flux {f:e} through curve {c} is not zero")));
        }
        let (lo, hi) = osc(field.nodal_values(c)?.into_iter());
        b += hi - lo;
    }
    let others: Vec<usize> = (0..nc).filter(|c| !inclusions.contains(c)).collect();
    match bound {
        OscillationBound::NeumannOuter => {
            for &c in &others {
                let worst = field.nodal_normal_derivatives(c)?.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if worst > tol {
                    return Err(Error::InvalidArgument(alloc::format!("normal derivative {worst:e} on curve {c} is not zero")));
                }
            }
        }
        OscillationBound::General => {
            let mut all = Vec::new();
            for &c in &others {
                all.extend(field.nodal_values(c)?);
            }
            let (lo, hi) = osc(all.into_iter());
            if hi >= lo {
                b += hi - lo;
            }
        }
    }
    let (lo, hi) = interior_range(field)?;
    let samples = lo.1;
    let interior = if samples > 0 { hi - lo.0 } else { 0.0 };
    Ok(OscillationVerdict { interior, bound: b, samples, holds: interior <= b + 1e-9 * scale })
}

const GRID: usize = 64;

fn interior_range(field: &HarmonicField) -> Result<((f64, usize), f64)> {
    let domain = field.domain();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let pts = domain.outer().samples(256);
    let (min, max) = pts.iter().fold(
        (Vec2::new(f64::INFINITY, f64::INFINITY), Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY)),
        |(a, b), p| (Vec2::new(a.x.min(p.x), a.y.min(p.y)), Vec2::new(b.x.max(p.x), b.y.max(p.y))),
    );
    let band = field.nodes().band();
    let mut count = 0;
    for i in 0..GRID {
        for j in 0..GRID {
            let x = Vec2::new(
                min.x + (max.x - min.x) * (i as f64 + 0.5) / GRID as f64,
                min.y + (max.y - min.y) * (j as f64 + 0.5) / GRID as f64,
            );
            if !domain.contains(x) || domain.distance_to_boundary(x) <= band {
                continue;
            }
            let v = field.eval(x)?;
            lo = lo.min(v);
            hi = hi.max(v);
            count += 1;
        }
    }
    Ok(((lo, count), hi))
}
