//! Closed-form renormalized energies and the canonical singular harmonic
//! maps.
//!
//! Dirichlet (`u = g` on `∂G`):
//!
//! ```text
//! W_g = −π Σ_{i≠j} d_i d_j log|a_i − a_j| + ½ Σ_c ∮_{Γ_c} Φ₀ ∂_ν Φ₀
//!       − π Σ_i d_i R₀(a_i) + Σ_l α_l ∮_{Γ_l} ∂_τ Φ₀ + ½ αᵀPα,
//! ```
//!
//! where `∂_ν Φ₀ = ±g ∧ ∂_τ g` (`+` on the outer curve, `−` on holes, with
//! the outward normal of `G`), `R₀ = Φ₀ − Σ d_i log|x − a_i|` and
//! `α ∈ θ + 2πZⁿ` minimizes the last term.
//!
//! Neumann (`û ∧ ∂_ν û = 0` on `∂G`), for hole degrees `d̃`:
//!
//! ```text
//! W_N = −π Σ_{i≠j} d_i d_j log|a_i − a_j| − π Σ_i d_i R̂₀(a_i)
//!       − π Σ_l β_l c_l + ½ βᵀPβ + ½ Σ_l β_l ∮_{Γ_l} ∂_ν R̂₀,
//! ```
//!
//! with `Ĝ₀` the Dirichlet Green function, `c_l = Σ_i d_i φ_l(a_i)` and
//! `Pβ = −2π(d̃ + c)`. In optimal mode `d̃` minimizes `W_N`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::boundary_data::BoundaryData;
use crate::domain::{Domain, PunctureSet};
use crate::harmonic_solver::{
    solve_dirichlet, solve_neumann, Discretized, HarmonicField, Normalization, Profile, Sources,
};
use crate::path::{path_integral_perp, Endpoint, FieldTerm, PathPlanner};
use crate::topology::{
    harmonic_measures, lattice_minimize, neumann_beta, optimal_degree_search, HarmonicMeasures, PhaseOffsets,
};
use crate::{Error, Result, Vec2};
#[allow(unused_imports)]
use num_traits::Float;

/// Neumann degree handling.
#[derive(Debug, Clone, PartialEq)]
pub enum NeumannMode {
    /// Minimize over `d̃ ∈ {−M..M}ⁿ`.
    Optimal { radius: usize },
    /// Degrees fixed in advance (semi-stiff problem).
    Fixed(Vec<i64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyKind {
    Dirichlet,
    Neumann,
}

/// Numerical side information of an energy evaluation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    /// Normalization multiplier of the `Φ₀` solve.
    pub multiplier: f64,
    /// `max |P_lm − P_ml|` before symmetrization.
    pub period_asymmetry: f64,
    /// Largest two-path residual of the phase offsets.
    pub witness_residual: f64,
    /// `second best − best` of the lattice or degree search.
    pub search_gap: f64,
    /// Residual of the `β` system.
    pub beta_residual: f64,
    /// `max_l |∮_{Γ_l} ∂_ν Ĝ₀ − 2π c_l|`.
    pub flux_identity_error: f64,
}

/// Renormalized energy with its term breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub kind: EnergyKind,
    pub total: f64,
    /// `−π Σ_{i≠j} d_i d_j log|a_i − a_j|`.
    pub pairwise: f64,
    /// Dirichlet: `½ ∮ Φ₀ ∂_ν Φ₀`. Neumann: `½ Σ β_l ∮_{Γ_l} ∂_ν R̂₀`.
    pub boundary: f64,
    /// `−π Σ d_i R(a_i)`.
    pub regular: f64,
    /// Dirichlet: `Σ α_l ∮_{Γ_l} ∂_τ Φ₀` (vanishes). Neumann: `−π Σ β_l c_l`.
    pub coupling: f64,
    /// Dirichlet: `½ αᵀPα`. Neumann: `½ βᵀPβ`.
    pub topological: f64,
    pub theta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub shifts: Vec<i64>,
    pub degrees: Vec<i64>,
    pub beta: Vec<f64>,
    /// Regular parts `R(a_i)`.
    pub regular_parts: Vec<f64>,
    pub diagnostics: Diagnostics,
}

impl EnergyReport {
    fn empty(kind: EnergyKind) -> Self {
        EnergyReport {
            kind,
            total: 0.0,
            pairwise: 0.0,
            boundary: 0.0,
            regular: 0.0,
            coupling: 0.0,
            topological: 0.0,
            theta: Vec::new(),
            alpha: Vec::new(),
            shifts: Vec::new(),
            degrees: Vec::new(),
            beta: Vec::new(),
            regular_parts: Vec::new(),
            diagnostics: Diagnostics::default(),
        }
    }

    fn finish(mut self) -> Self {
        self.total = self.pairwise + self.boundary + self.regular + self.coupling + self.topological;
        self
    }

    /// `|total − Σ terms|`.
    pub fn bookkeeping_error(&self) -> f64 {
        (self.total - (self.pairwise + self.boundary + self.regular + self.coupling + self.topological)).abs()
    }
}

/// `−π Σ_{i≠j} d_i d_j log|a_i − a_j|` over ordered pairs.
pub fn pairwise_term(p: &PunctureSet) -> f64 {
    let mut s = 0.0;
    for (i, a) in p.iter().enumerate() {
        for (j, b) in p.iter().enumerate() {
            if i != j {
                s += (a.degree * b.degree) as f64 * libm::log(a.position.dist(b.position));
            }
        }
    }
    -PI * s
}

/// Neumann data of `Φ₀` at the nodes: `+g ∧ ∂_τ g` on the outer curve and
/// `−g ∧ ∂_τ g` on holes (outward normal of `G`).
pub fn phi0_data(domain: &Domain, g: &BoundaryData) -> Result<Vec<Vec<f64>>> {
    let nodes = Discretized::new(domain);
    (0..domain.num_components())
        .map(|c| {
            let comp = nodes.component(c);
            let sign = comp.orientation;
            let data = g.component(c)?;
            Ok(comp.params.iter().zip(&comp.speeds).map(|(t, s)| sign * data.lift_derivative(*t) / s).collect())
        })
        .collect()
}

/// Solves `Φ₀`: `ΔΦ₀ = 2π Σ d_i δ_{a_i}`, `∂_ν Φ₀ = ±g ∧ ∂_τ g`, zero mean
/// on `∂G`.
pub fn solve_phi0(domain: &Domain, g: &BoundaryData, normalization: Normalization) -> Result<(HarmonicField, Vec<Vec<f64>>)> {
    let data = phi0_data(domain, g)?;
    let profiles = data.iter().cloned().map(Profile::Nodal).collect();
    let f = solve_neumann(domain, &Sources::from_punctures(domain.punctures()), profiles, normalization)?;
    Ok((f, data))
}

/// Everything computed for the Dirichlet energy; also evaluates `u₀`.
#[derive(Debug, Clone)]
pub struct DirichletSolution {
    pub report: EnergyReport,
    pub phi0: HarmonicField,
    pub measures: HarmonicMeasures,
    pub offsets: Option<PhaseOffsets>,
    pub anchor: f64,
    g: BoundaryData,
    domain: Domain,
}

pub fn dirichlet_solution(domain: &Domain, g: &BoundaryData, radius: usize) -> Result<DirichletSolution> {
    dirichlet_solution_with(domain, g, radius, Normalization::boundary_mean(domain))
}

/// As [`dirichlet_solution`] with a chosen normalization of `Φ₀` (the
/// energy does not depend on it).
pub fn dirichlet_solution_with(
    domain: &Domain,
    g: &BoundaryData,
    radius: usize,
    normalization: Normalization,
) -> Result<DirichletSolution> {
    let g = BoundaryData::for_domain(domain, g.components().to_vec())?;
    let verdict = g.check_compatibility(domain.punctures())?;
    if !verdict.holds {
        return Err(Error::IncompatibleDegrees {
            outer: verdict.degrees[0],
            sum_punctures: verdict.sum_punctures,
            sum_holes: verdict.sum_holes,
        });
    }
    let (phi0, data) = solve_phi0(domain, &g, normalization)?;
    let mut r = EnergyReport::empty(EnergyKind::Dirichlet);
    r.pairwise = pairwise_term(domain.punctures());
    r.boundary = 0.5
        * (0..domain.num_components())
            .map(|c| phi0.boundary_pairing(c, &data[c]))
            .sum::<Result<f64>>()?;
    r.regular_parts = (0..domain.punctures().len()).map(|i| phi0.regular_part(i)).collect::<Result<_>>()?;
    r.regular = -PI * domain.punctures().iter().zip(&r.regular_parts).map(|(p, v)| p.degree as f64 * v).sum::<f64>();
    r.diagnostics.multiplier = phi0.multiplier();

    let measures = harmonic_measures(domain)?;
    let planner = PathPlanner::new(domain);
    let anchor = planner.anchor(0)?;
    let mut offsets = None;
    let n = domain.num_holes();
    if n > 0 {
        let th = crate::topology::theta_offsets(domain, &g, &phi0, n)?;
        let lat = lattice_minimize(&measures.period.matrix, &th.theta, radius)?;
        r.coupling = (1..=n).map(|l| Ok(lat.alpha[l - 1] * phi0.tangential_integral(l)?)).sum::<Result<f64>>()?;
        r.topological = lat.value;
        r.theta = th.theta.clone();
        r.alpha = lat.alpha;
        r.shifts = lat.shifts;
        r.diagnostics.period_asymmetry = measures.period.asymmetry;
        r.diagnostics.witness_residual = th.max_witness_residual();
        r.diagnostics.search_gap = lat.second_value - lat.value;
        offsets = Some(th);
    }
    let anchor = offsets.as_ref().map(|o| o.anchors[0]).unwrap_or(anchor);
    Ok(DirichletSolution { report: r.finish(), phi0, measures, offsets, anchor, g, domain: domain.clone() })
}

pub fn dirichlet_renormalized_energy(domain: &Domain, g: &BoundaryData, radius: usize) -> Result<EnergyReport> {
    Ok(dirichlet_solution(domain, g, radius)?.report)
}

/// Sample of a canonical map.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalMapSample {
    pub point: Vec2,
    pub value: Complex64,
    pub path: Vec<Vec2>,
}

fn transport(
    domain: &Domain,
    terms: &[FieldTerm<'_>],
    anchor: f64,
    phase0: f64,
    at: Endpoint,
) -> Result<CanonicalMapSample> {
    let planner = PathPlanner::new(domain);
    let path = planner.route(Endpoint::Boundary { component: 0, t: anchor }, at)?;
    let phase = phase0 + path_integral_perp(terms, &path, planner.clearance())?;
    Ok(CanonicalMapSample { point: *path.last().unwrap(), value: Complex64::from_polar(1.0, phase), path })
}

impl DirichletSolution {
    /// `u₀` at `at`, transporting `∇^⊥Φ₀ + Σ α_l ∇φ_l` from the outer anchor
    /// where `u₀ = g`.
    pub fn canonical_map(&self, at: Endpoint) -> Result<CanonicalMapSample> {
        let mut terms = vec![FieldTerm::perp(&self.phi0)];
        for (f, a) in self.measures.fields.iter().zip(&self.report.alpha) {
            terms.push(FieldTerm::grad(f, *a));
        }
        transport(&self.domain, &terms, self.anchor, self.g.component(0)?.lift(self.anchor), at)
    }

    pub fn boundary_data(&self) -> &BoundaryData {
        &self.g
    }
}

/// Everything computed for the Neumann energy; also evaluates `û₀`.
#[derive(Debug, Clone)]
pub struct NeumannSolution {
    pub report: EnergyReport,
    pub green: HarmonicField,
    pub measures: HarmonicMeasures,
    /// `c_l = Σ_i d_i φ_l(a_i)`.
    pub coupling_vector: Vec<f64>,
    domain: Domain,
}

pub fn neumann_solution(domain: &Domain, mode: &NeumannMode) -> Result<NeumannSolution> {
    let n = domain.num_holes();
    let sources = Sources::from_punctures(domain.punctures());
    let green = solve_dirichlet(domain, &sources, vec![Profile::Constant(0.0); domain.num_components()])?;
    let measures = harmonic_measures(domain)?;
    let mut r = EnergyReport::empty(EnergyKind::Neumann);
    r.pairwise = pairwise_term(domain.punctures());
    r.regular_parts = (0..domain.punctures().len()).map(|i| green.regular_part(i)).collect::<Result<_>>()?;
    r.regular = -PI * domain.punctures().iter().zip(&r.regular_parts).map(|(p, v)| p.degree as f64 * v).sum::<f64>();
    let mut c = vec![0.0; n];
    for p in domain.punctures().iter() {
        for (cl, v) in c.iter_mut().zip(measures.values_at(p.position)?) {
            *cl += p.degree as f64 * v;
        }
    }
    let fluxes: Vec<f64> = (1..=n).map(|l| green.flux(l)).collect::<Result<_>>()?;
    r.diagnostics.flux_identity_error =
        fluxes.iter().zip(&c).fold(0.0f64, |m, (f, c)| m.max((f - 2.0 * PI * c).abs()));
    r.diagnostics.period_asymmetry = measures.period.asymmetry;
    let p = &measures.period.matrix;
    let degrees = match mode {
        NeumannMode::Fixed(d) => {
            if d.len() != n {
                return Err(Error::ComponentCountMismatch { expected: n, got: d.len() });
            }
            d.clone()
        }
        NeumannMode::Optimal { radius } => {
            let s = optimal_degree_search(p, &c, *radius)?;
            r.diagnostics.search_gap = s.second_value - s.value;
            s.degrees
        }
    };
    let beta = neumann_beta(p, &c, &degrees)?;
    r.coupling = -PI * beta.beta.iter().zip(&c).map(|(b, c)| b * c).sum::<f64>();
    r.topological = p.half_quadratic(&beta.beta);
    r.boundary = 0.5 * beta.beta.iter().zip(&fluxes).map(|(b, f)| b * f).sum::<f64>();
    r.diagnostics.beta_residual = beta.residual;
    r.degrees = degrees;
    r.beta = beta.beta;
    Ok(NeumannSolution { report: r.finish(), green, measures, coupling_vector: c, domain: domain.clone() })
}

pub fn neumann_renormalized_energy(domain: &Domain, mode: &NeumannMode) -> Result<EnergyReport> {
    Ok(neumann_solution(domain, mode)?.report)
}

impl NeumannSolution {
    fn terms(&self) -> Vec<FieldTerm<'_>> {
        let mut terms = vec![FieldTerm::perp(&self.green)];
        for (f, b) in self.measures.fields.iter().zip(&self.report.beta) {
            terms.push(FieldTerm { field: f, weight_perp: *b, weight_grad: 0.0 });
        }
        terms
    }

    /// `û₀` at `at`, with current `∇^⊥Φ̂₀`, `Φ̂₀ = Ĝ₀ + Σ β_l φ_l`, and
    /// `û₀ = 1` at the outer anchor.
    pub fn canonical_map(&self, at: Endpoint) -> Result<CanonicalMapSample> {
        let planner = PathPlanner::new(&self.domain);
        let anchor = planner.anchor(0)?;
        transport(&self.domain, &self.terms(), anchor, 0.0, at)
    }

    /// `j(û₀) · ν` at node `j` of component `c`.
    pub fn normal_current(&self, c: usize, j: usize) -> Result<f64> {
        let nodes = self.green.nodes();
        if c >= nodes.num_components() || j >= nodes.component(c).len() {
            return Err(Error::BadComponentIndex(c));
        }
        let comp = nodes.component(c);
        let x = comp.points[j];
        let mut current = Vec2::ZERO;
        for t in self.terms() {
            current += t.field.eval_grad_close(x).perp() * t.weight_perp;
        }
        Ok(current.dot(comp.normals[j]))
    }
}

/// What a landscape evaluates at each grid point.
#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Dirichlet { g: BoundaryData, radius: usize },
    Neumann { mode: NeumannMode },
}

impl Problem {
    pub fn energy(&self, domain: &Domain) -> Result<EnergyReport> {
        match self {
            Problem::Dirichlet { g, radius } => dirichlet_renormalized_energy(domain, g, *radius),
            Problem::Neumann { mode } => neumann_renormalized_energy(domain, mode),
        }
    }
}

/// One landscape row: the moved puncture position and either its energy or
/// the reason it is missing.
#[derive(Debug, Clone, PartialEq)]
pub struct LandscapePoint {
    pub position: Vec2,
    pub report: core::result::Result<EnergyReport, String>,
}

/// Energy with puncture `index` moved to `position`.
pub fn landscape_point(domain: &Domain, problem: &Problem, index: usize, position: Vec2) -> LandscapePoint {
    let run = || -> Result<EnergyReport> {
        let mut items: Vec<crate::domain::Puncture> = domain.punctures().iter().copied().collect();
        let p = items.get_mut(index).ok_or(Error::NoSuchSource(index))?;
        p.position = position;
        let moved = domain.with_punctures(PunctureSet::new(items)?)?;
        problem.energy(&moved)
    };
    LandscapePoint { position, report: run().map_err(|e| alloc::format!("{e}")) }
}

/// Energies over a list of puncture positions; failures become missing
/// values.
pub fn energy_landscape(domain: &Domain, problem: &Problem, index: usize, grid: &[Vec2]) -> Vec<LandscapePoint> {
    grid.iter().map(|&x| landscape_point(domain, problem, index, x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary_data::ComponentData;
    use crate::domain::{Curve, Discretization};

    fn disk(a: Vec2) -> Domain {
        Domain::new(
            Curve::circle(Vec2::ZERO, 1.0),
            vec![],
            PunctureSet::from_pairs(&[(a, 1)]).unwrap(),
            Discretization::default(),
        )
        .unwrap()
    }

    fn one() -> BoundaryData {
        BoundaryData::new(vec![ComponentData::winding(1)])
    }

    #[test]
    fn centered_disk_energies_vanish() {
        let d = disk(Vec2::ZERO);
        let r = dirichlet_renormalized_energy(&d, &one(), 3).unwrap();
        assert!(r.total.abs() < 1e-12, "{r:?}");
        assert!(r.boundary.abs() < 1e-12 && r.regular.abs() < 1e-12);
        let r = neumann_renormalized_energy(&d, &NeumannMode::Optimal { radius: 3 }).unwrap();
        assert!(r.total.abs() < 1e-12);
    }

    #[test]
    fn off_center_disk_matches_image_formula() {
        let a = Vec2::new(0.3, 0.0);
        let d = disk(a);
        let w = dirichlet_renormalized_energy(&d, &one(), 3).unwrap();
        assert!((w.total + PI * libm::log(0.91)).abs() < 1e-10, "{}", w.total);
        assert!(w.bookkeeping_error() < 1e-12);
        let n = neumann_renormalized_energy(&d, &NeumannMode::Optimal { radius: 3 }).unwrap();
        assert!((n.total - PI * libm::log(0.91)).abs() < 1e-10, "{}", n.total);
    }

    #[test]
    fn trivial_annulus() {
        let d = Domain::new(
            Curve::circle(Vec2::ZERO, 1.0),
            vec![Curve::circle(Vec2::ZERO, 0.4)],
            PunctureSet::empty(),
            Discretization::default(),
        )
        .unwrap();
        let g = BoundaryData::new(vec![ComponentData::winding(0), ComponentData::winding(0)]);
        let r = dirichlet_renormalized_energy(&d, &g, 3).unwrap();
        assert!(r.total.abs() < 1e-12);
        assert_eq!(r.alpha.len(), 1);
        assert!(r.alpha[0].abs() < 1e-12);
        let n = neumann_renormalized_energy(&d, &NeumannMode::Fixed(vec![2])).unwrap();
        let p11 = 2.0 * PI / libm::log(0.4).abs();
        assert!((n.total - 0.5 * (4.0 * PI).powi(2) / p11).abs() < 1e-9);
        let bad = BoundaryData::new(vec![ComponentData::winding(1), ComponentData::winding(0)]);
        assert!(matches!(dirichlet_renormalized_energy(&d, &bad, 3), Err(Error::IncompatibleDegrees { .. })));
    }

    #[test]
    fn canonical_map_of_centered_vortex() {
        let d = disk(Vec2::ZERO);
        let s = dirichlet_solution(&d, &one(), 3).unwrap();
        let u = s.canonical_map(Endpoint::Interior(Vec2::new(0.5, 0.0))).unwrap().value;
        assert!((u - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        let u = s.canonical_map(Endpoint::Interior(Vec2::new(0.0, 0.5))).unwrap().value;
        assert!((u - Complex64::new(0.0, 1.0)).norm() < 1e-10);
    }

    #[test]
    fn landscape_records_failures() {
        let d = disk(Vec2::ZERO);
        let prob = Problem::Dirichlet { g: one(), radius: 3 };
        let pts = energy_landscape(&d, &prob, 0, &[Vec2::new(0.2, 0.0), Vec2::new(2.0, 0.0)]);
        assert!(pts[0].report.is_ok());
        assert!(pts[1].report.is_err());
    }
}
