//! Circle-valued boundary data `g = exp(i(w·t + ψ(t)))` on each component,
//! topological degrees and the current density `g ∧ ∂_τ g`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::domain::{Domain, PunctureSet};
use crate::quadrature::TrigSeries;
use crate::{Error, Result, Vec2};
#[allow(unused_imports)]
use num_traits::Float;

/// Largest admissible distance of the quadrature degree from an integer.
pub const DEGREE_RESIDUAL_TOL: f64 = 1e-6;

/// Data on one component: winding `w` and periodic phase perturbation `ψ`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComponentData {
    pub winding: i64,
    pub phase: TrigSeries,
}

impl ComponentData {
    pub fn new(winding: i64, phase: TrigSeries) -> Self {
        ComponentData { winding, phase }
    }

    pub fn winding(winding: i64) -> Self {
        ComponentData { winding, phase: TrigSeries::default() }
    }

    /// Lifted phase `w·t + ψ(t)`.
    pub fn lift(&self, t: f64) -> f64 {
        self.winding as f64 * t + self.phase.eval(t)
    }

    /// `d/dt (w·t + ψ(t))`.
    pub fn lift_derivative(&self, t: f64) -> f64 {
        self.winding as f64 + self.phase.derivative(t)
    }

    /// Data `t ↦ g(t − s)`, the same map after shifting the parameter.
    pub fn shifted(&self, s: f64) -> Self {
        let p = &self.phase;
        let (cos, sin) = (1..=p.max_mode())
            .map(|k| {
                let (sk, ck) = libm::sincos(k as f64 * s);
                let a = p.cos.get(k - 1).copied().unwrap_or(0.0);
                let b = p.sin.get(k - 1).copied().unwrap_or(0.0);
                (a * ck - b * sk, a * sk + b * ck)
            })
            .unzip();
        ComponentData { winding: self.winding, phase: TrigSeries::new(p.constant - self.winding as f64 * s, cos, sin) }
    }
}

/// One [`ComponentData`] per boundary component, outer first.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    components: Vec<ComponentData>,
}

/// Degree of one component together with the distance of the quadrature
/// value from the nearest integer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreeValue {
    pub degree: i64,
    pub residual: f64,
}

/// Outcome of the degree relation `Σ d_i + Σ_l deg(g, Γ_l) = deg(g, Γ_0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityVerdict {
    /// Degrees per component, outer first.
    pub degrees: Vec<i64>,
    pub sum_punctures: i64,
    pub sum_holes: i64,
    pub holds: bool,
    /// Without punctures: whether `H¹_g(G, S¹)` is nonempty. `None` when
    /// punctures are present.
    pub sobolev_space_nonempty: Option<bool>,
}

impl BoundaryData {
    pub fn new(components: Vec<ComponentData>) -> Self {
        BoundaryData { components }
    }

    /// Checks the component count against `domain`.
    pub fn for_domain(domain: &Domain, components: Vec<ComponentData>) -> Result<Self> {
        if components.len() != domain.num_components() {
            return Err(Error::ComponentCountMismatch { expected: domain.num_components(), got: components.len() });
        }
        Ok(BoundaryData { components })
    }

    pub fn components(&self) -> &[ComponentData] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn component(&self, c: usize) -> Result<&ComponentData> {
        self.components.get(c).ok_or(Error::BadComponentIndex(c))
    }

    /// Multiply every component by the same unit constant `e^{i·phase}`.
    pub fn rotated_phase(&self, phase: f64) -> Self {
        let components = self
            .components
            .iter()
            .map(|c| {
                let mut p = c.phase.clone();
                p.constant += phase;
                ComponentData { winding: c.winding, phase: p }
            })
            .collect();
        BoundaryData { components }
    }

    /// `g` on component `c` at parameter `t`.
    pub fn eval_g(&self, c: usize, t: f64) -> Result<Complex64> {
        Ok(Complex64::from_polar(1.0, self.component(c)?.lift(t)))
    }

    /// `(1/2π)∮ g ∧ g' dt` by the trapezoid rule on `n` points.
    pub fn degree_with_residual(&self, c: usize, n: usize) -> Result<DegreeValue> {
        let data = self.component(c)?;
        if n == 0 {
            return Err(Error::InvalidArgument("degree quadrature needs at least one node".into()));
        }
        let h = 2.0 * PI / n as f64;
        let mut s = 0.0;
        for j in 0..n {
            let t = h * j as f64;
            let phase = data.lift(t);
            let g = Vec2::from_polar(1.0, phase);
            let dg = g.perp() * data.lift_derivative(t);
            s += g.wedge(dg);
        }
        let value = s * h / (2.0 * PI);
        let degree = value.round();
        Ok(DegreeValue { degree: degree as i64, residual: value - degree })
    }

    /// Degree of component `c`; fails if the quadrature is not close to an
    /// integer.
    pub fn degree(&self, c: usize, n: usize) -> Result<i64> {
        let v = self.degree_with_residual(c, n)?;
        if v.residual.abs() > DEGREE_RESIDUAL_TOL {
            return Err(Error::NonIntegerDegree { component: c, residual: v.residual });
        }
        Ok(v.degree)
    }

    /// `g ∧ ∂_τ g = (w + ψ'(t)) / |γ'(t)|` with `τ` anticlockwise.
    pub fn current_density(&self, domain: &Domain, c: usize, t: f64) -> Result<f64> {
        let data = self.component(c)?;
        if c >= domain.num_components() {
            return Err(Error::BadComponentIndex(c));
        }
        Ok(data.lift_derivative(t) / domain.curve(c).speed(t))
    }

    /// Quadrature size that resolves every phase perturbation.
    pub fn default_quadrature(&self) -> usize {
        let modes = self.components.iter().map(|c| c.phase.max_mode()).max().unwrap_or(0);
        (4 * modes + 8).max(64)
    }

    pub fn check_compatibility(&self, punctures: &PunctureSet) -> Result<CompatibilityVerdict> {
        if self.components.is_empty() {
            return Err(Error::ComponentCountMismatch { expected: 1, got: 0 });
        }
        let n = self.default_quadrature();
        let degrees = (0..self.components.len()).map(|c| self.degree(c, n)).collect::<Result<Vec<_>>>()?;
        let sum_punctures = punctures.total_degree();
        let sum_holes: i64 = degrees[1..].iter().sum();
        let holds = sum_punctures + sum_holes == degrees[0];
        Ok(CompatibilityVerdict {
            degrees,
            sum_punctures,
            sum_holes,
            holds,
            sobolev_space_nonempty: if punctures.is_empty() { Some(holds) } else { None },
        })
    }
}
