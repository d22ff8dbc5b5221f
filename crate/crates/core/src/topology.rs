//! Period matrix of the harmonic measures, phase offsets, the lattice
//! selection of the Dirichlet coefficients `α` and the Neumann system for
//! `β`.
//!
//! Orientation: `P_lm = ∮_{Γ_l} ∂_ν φ_m` with the outward normal of `G`, so
//! that `P` is the Gram matrix `∫_G ∇φ_l · ∇φ_m` (positive definite).
//! Hole degrees `d̃_l` are taken with `τ` anticlockwise on every curve.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::boundary_data::BoundaryData;
use crate::domain::Domain;
use crate::harmonic_solver::{BoundaryCondition, ConditionKind, HarmonicField, LayerSystem, Profile, Sources};
use crate::linalg::{self, symmetric_eigenvalues, Matrix};
use crate::path::{path_integral_perp, Endpoint, FieldTerm, PathPlanner};
use crate::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

/// Largest tolerated `|P_lm − P_ml|` before symmetrization.
pub const SYMMETRY_TOL: f64 = 1e-8;
/// Relative tolerance under which two lattice values count as tied.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct PeriodMatrix {
    /// Symmetrized matrix.
    pub matrix: Matrix,
    /// `max |P_lm − P_ml|` before symmetrization.
    pub asymmetry: f64,
}

impl PeriodMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        symmetric_eigenvalues(&self.matrix)
    }
}

/// Harmonic measures `φ_1 … φ_n` and their period matrix.
#[derive(Debug, Clone)]
pub struct HarmonicMeasures {
    pub fields: Vec<HarmonicField>,
    pub period: PeriodMatrix,
}

impl HarmonicMeasures {
    /// `φ_l(x)` for every `l` (`x` may lie in the near band).
    pub fn values_at(&self, x: crate::Vec2) -> Result<Vec<f64>> {
        self.fields.iter().map(|f| f.eval_near(x)).collect()
    }
}

/// `φ_l = 1` on `Γ_l`, `0` on the other curves, for the first `n` holes.
/// Components after `n` (the small circles of a perforated domain) carry a
/// homogeneous Neumann condition.
pub fn harmonic_measures_first(domain: &Domain, n: usize) -> Result<HarmonicMeasures> {
    let nc = domain.num_components();
    assert!(n < nc, "more holes requested than present");
    let kinds: Vec<ConditionKind> =
        (0..nc).map(|c| if c <= n { ConditionKind::Dirichlet } else { ConditionKind::Neumann }).collect();
    if n == 0 {
        return Ok(HarmonicMeasures { fields: Vec::new(), period: PeriodMatrix { matrix: Matrix::zeros(0, 0), asymmetry: 0.0 } });
    }
    let system = LayerSystem::new(domain, &kinds, None)?;
    let fields = (1..=n)
        .map(|l| {
            let conds: Vec<BoundaryCondition> = (0..nc)
                .map(|c| match kinds[c] {
                    ConditionKind::Dirichlet => BoundaryCondition::Dirichlet(Profile::Constant(if c == l { 1.0 } else { 0.0 })),
                    _ => BoundaryCondition::Neumann(Profile::Constant(0.0)),
                })
                .collect();
            system.solve(&conds, &Sources::none())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut p = Matrix::zeros(n, n);
    for l in 0..n {
        for m in 0..n {
            p[(l, m)] = fields[m].flux(l + 1)?;
        }
    }
    let asymmetry = p.max_asymmetry();
    if asymmetry > SYMMETRY_TOL * (1.0 + p.max_abs()) {
        return Err(Error::AsymmetricPeriodMatrix { asymmetry });
    }
    Ok(HarmonicMeasures { fields, period: PeriodMatrix { matrix: p.symmetrized(), asymmetry } })
}

/// Harmonic measures of every hole of `domain`.
pub fn harmonic_measures(domain: &Domain) -> Result<HarmonicMeasures> {
    harmonic_measures_first(domain, domain.num_holes())
}

pub fn period_matrix(domain: &Domain) -> Result<PeriodMatrix> {
    Ok(harmonic_measures(domain)?.period)
}

/// Phase offsets `θ_l` with their two-path consistency witnesses.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseOffsets {
    /// `θ_l ∈ [−π, π)`.
    pub theta: Vec<f64>,
    /// `(I₂ − I₁)/2π` rounded, for a second path inequivalent to the first.
    pub witness: Vec<Option<i64>>,
    /// Distance of `(I₂ − I₁)/2π` from the witness integer.
    pub witness_residual: Vec<f64>,
    /// Transported phase difference along the primary path, per hole.
    pub transported: Vec<f64>,
    /// Anchor parameters: outer curve, then one per hole.
    pub anchors: Vec<f64>,
}

impl PhaseOffsets {
    pub fn max_witness_residual(&self) -> f64 {
        self.witness_residual.iter().fold(0.0, |m, r| m.max(*r))
    }
}

/// Phase offsets of the map `v₀` with current `∇^⊥Φ₀` and `v₀ = g` on
/// `Γ₀`: `θ_l = arg g(x_l) − arg v₀(x_l)`, wrapped to `[−π, π)`, for the
/// first `n` holes of `domain` (pass `domain.num_holes()` for all).
pub fn theta_offsets(domain: &Domain, g: &BoundaryData, phi0: &HarmonicField, n: usize) -> Result<PhaseOffsets> {
    let planner = PathPlanner::new(domain);
    let t0 = planner.anchor(0)?;
    let lift0 = g.component(0)?.lift(t0);
    let start = Endpoint::Boundary { component: 0, t: t0 };
    let term = [FieldTerm::perp(phi0)];
    let clearance = planner.clearance();
    let mut out = PhaseOffsets {
        theta: Vec::with_capacity(n),
        witness: Vec::with_capacity(n),
        witness_residual: Vec::with_capacity(n),
        transported: Vec::with_capacity(n),
        anchors: vec![t0],
    };
    for l in 1..=n {
        let tl = planner.anchor(l)?;
        let end = Endpoint::Boundary { component: l, t: tl };
        let path = planner.route(start, end)?;
        let i1 = path_integral_perp(&term, &path, clearance)?;
        out.theta.push(crate::geometry::wrap_angle(g.component(l)?.lift(tl) - (lift0 + i1)));
        out.transported.push(i1);
        out.anchors.push(tl);
        let alt = second_path(&planner, domain, start, end, &path, l);
        match alt.and_then(|p| path_integral_perp(&term, &p, clearance)) {
            Ok(i2) => {
                let k = (i2 - i1) / (2.0 * PI);
                out.witness.push(Some(k.round() as i64));
                out.witness_residual.push((k - k.round()).abs());
            }
            Err(_) => {
                out.witness.push(None);
                out.witness_residual.push(0.0);
            }
        }
    }
    Ok(out)
}

/// A path between the same endpoints that differs from `first` by a loop
/// around a puncture (or, without punctures, around a hole).
fn second_path(
    planner: &PathPlanner<'_>,
    domain: &Domain,
    start: Endpoint,
    end: Endpoint,
    first: &[crate::Vec2],
    l: usize,
) -> Result<Vec<crate::Vec2>> {
    let lp = if !domain.punctures().is_empty() {
        Some(planner.loop_around_puncture(0)?)
    } else {
        (1..domain.num_components()).rev().filter(|&h| h != l || domain.num_holes() == 1).find_map(|h| planner.loop_around_hole(h))
    };
    match lp {
        Some(lp) => {
            let mut p = planner.route(start, Endpoint::Interior(lp[0]))?;
            p.extend_from_slice(&lp[1..]);
            let back = planner.route(Endpoint::Interior(lp[0]), end)?;
            p.extend_from_slice(&back[1..]);
            Ok(p)
        }
        None => planner.route_avoiding(start, end, &first[1..first.len() - 1]),
    }
}

/// Minimizer of `½ αᵀPα` over `α ∈ θ + 2πZⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSolution {
    pub alpha: Vec<f64>,
    pub shifts: Vec<i64>,
    pub value: f64,
    /// Value of the runner-up shift vector (infinite if there is none).
    pub second_value: f64,
}

fn for_each_box_point(n: usize, radius: i64, mut f: impl FnMut(&[i64])) {
    let mut m = vec![-radius; n];
    loop {
        f(&m);
        let mut k = n;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            if m[k] < radius {
                m[k] += 1;
                for v in &mut m[k + 1..] {
                    *v = -radius;
                }
                break;
            }
        }
    }
}

/// Enumerates shifts in `{−M..M}ⁿ` in lexicographic order; ties go to the
/// lexicographically smallest shift vector. The result is certified over
/// the whole lattice by `½ λ_min (2πM + π)² > value`.
pub fn lattice_minimize(p: &Matrix, theta: &[f64], radius: usize) -> Result<LatticeSolution> {
    let n = theta.len();
    if p.rows() != n || p.cols() != n {
        return Err(Error::InvalidArgument("period matrix and offsets have different sizes".into()));
    }
    if radius == 0 {
        return Err(Error::InvalidArgument("search radius must be at least 1".into()));
    }
    if theta.iter().any(|t| !(t.abs() <= PI)) {
        return Err(Error::InvalidArgument("offsets must lie in [-π, π]".into()));
    }
    if n == 0 {
        return Ok(LatticeSolution { alpha: Vec::new(), shifts: Vec::new(), value: 0.0, second_value: f64::INFINITY });
    }
    let mut best: Option<(f64, Vec<i64>)> = None;
    let mut second = f64::INFINITY;
    let mut alpha = vec![0.0; n];
    for_each_box_point(n, radius as i64, |m| {
        for l in 0..n {
            alpha[l] = theta[l] + 2.0 * PI * m[l] as f64;
        }
        let v = p.half_quadratic(&alpha);
        match &best {
            Some((b, _)) if v >= *b - TIE_TOL * (1.0 + b.abs()) => second = second.min(v),
            _ => {
                if let Some((b, _)) = &best {
                    second = second.min(*b);
                }
                best = Some((v, m.to_vec()));
            }
        }
    });
    let (value, shifts) = best.expect("box is nonempty");
    let lmin = symmetric_eigenvalues(p)[0];
    let r = 2.0 * PI * radius as f64 + PI;
    if !(0.5 * lmin * r * r > value) {
        return Err(Error::SearchRadiusInsufficient { radius });
    }
    let alpha = (0..n).map(|l| theta[l] + 2.0 * PI * shifts[l] as f64).collect();
    Ok(LatticeSolution { alpha, shifts, value, second_value: second })
}

/// Solution of `P β = −2π (d̃ + c)` with `c_l = Σ_i d_i φ_l(a_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeumannBeta {
    pub beta: Vec<f64>,
    /// `max_l |(Pβ)_l + 2π(d̃_l + c_l)|`.
    pub residual: f64,
}

pub fn neumann_beta(p: &Matrix, c: &[f64], degrees: &[i64]) -> Result<NeumannBeta> {
    let n = c.len();
    if degrees.len() != n || p.rows() != n {
        return Err(Error::InvalidArgument("β system sizes do not match".into()));
    }
    if n == 0 {
        return Ok(NeumannBeta { beta: Vec::new(), residual: 0.0 });
    }
    let rhs: Vec<f64> = (0..n).map(|l| -2.0 * PI * (degrees[l] as f64 + c[l])).collect();
    let beta = linalg::solve(p, &rhs)?;
    let pb = p.mul_vec(&beta);
    let residual = pb.iter().zip(&rhs).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(NeumannBeta { beta, residual })
}

/// Minimizer of `Q(d̃) = 2π² (d̃ + c)ᵀ P⁻¹ (d̃ + c)` over `d̃ ∈ {−M..M}ⁿ`,
/// certified over `Zⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeSearch {
    pub degrees: Vec<i64>,
    pub value: f64,
    /// Runner-up value; `second_value − value` is the decision gap.
    pub second_value: f64,
    pub second_degrees: Option<Vec<i64>>,
}

pub fn degree_quadratic(p_inv: &Matrix, c: &[f64], d: &[i64]) -> f64 {
    let v: Vec<f64> = d.iter().zip(c).map(|(d, c)| *d as f64 + c).collect();
    4.0 * PI * PI * p_inv.half_quadratic(&v)
}

pub fn optimal_degree_search(p: &Matrix, c: &[f64], radius: usize) -> Result<DegreeSearch> {
    let n = c.len();
    if p.rows() != n {
        return Err(Error::InvalidArgument("degree search sizes do not match".into()));
    }
    if radius == 0 {
        return Err(Error::InvalidArgument("search radius must be at least 1".into()));
    }
    if n == 0 {
        return Ok(DegreeSearch { degrees: Vec::new(), value: 0.0, second_value: f64::INFINITY, second_degrees: None });
    }
    let mut p_inv = Matrix::zeros(n, n);
    let lu = linalg::Lu::factor(p.clone())?;
    for m in 0..n {
        let mut e = vec![0.0; n];
        e[m] = 1.0;
        for (l, v) in lu.solve(&e).into_iter().enumerate() {
            p_inv[(l, m)] = v;
        }
    }
    let p_inv = p_inv.symmetrized();
    let mut best: Option<(f64, Vec<i64>)> = None;
    let mut second: Option<(f64, Vec<i64>)> = None;
    for_each_box_point(n, radius as i64, |d| {
        let v = degree_quadratic(&p_inv, c, d);
        match &best {
            Some((b, _)) if v >= *b - TIE_TOL * (1.0 + b.abs()) => {
                if second.as_ref().is_none_or(|s| v < s.0) {
                    second = Some((v, d.to_vec()));
                }
            }
            _ => {
                second = best.take();
                best = Some((v, d.to_vec()));
            }
        }
    });
    let (value, degrees) = best.expect("box is nonempty");
    let lmax = *symmetric_eigenvalues(p).last().unwrap();
    let cmax = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let r = (radius as f64 + 1.0 - cmax).max(0.0);
    if !(2.0 * PI * PI * r * r / lmax > value) {
        return Err(Error::SearchRadiusInsufficient { radius });
    }
    let (second_value, second_degrees) = match second {
        Some((v, d)) => (v, Some(d)),
        None => (f64::INFINITY, None),
    };
    Ok(DegreeSearch { degrees, value, second_value, second_degrees })
}
