//! Run configuration: a JSON document with nested maps and lists. Unknown
//! keys are rejected with the path of the offending key.

use serde::{Deserialize, Serialize};

use renorm_core::boundary_data::{BoundaryData, ComponentData};
use renorm_core::domain::{Curve, Discretization, Domain, Puncture, PunctureSet};
use renorm_core::quadrature::TrigSeries;
use renorm_core::renorm::{NeumannMode, Problem};
use renorm_core::Vec2;

use crate::CliError;

pub const MIN_NODES: usize = 64;
pub const MAX_NODES: usize = 8192;
pub const DEFAULT_RADIUS: usize = 3;
pub const DEFAULT_STEPS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSpec,
    #[serde(default)]
    pub punctures: Vec<PunctureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_data: Option<Vec<ComponentSpec>>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub dirichlet: DirichletSpec,
    #[serde(default)]
    pub neumann: NeumannSpec,
    #[serde(default)]
    pub verify: VerifySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub landscape: Option<LandscapeSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub outer: CurveSpec,
    #[serde(default)]
    pub holes: Vec<CurveSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveSpec {
    Circle { center: [f64; 2], radius: f64 },
    /// `x(t)`, `y(t)` as trigonometric polynomials.
    Fourier { x: SeriesSpec, y: SeriesSpec },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSpec {
    #[serde(default)]
    pub constant: f64,
    /// Coefficients of `cos(k t)`, `k = 1, 2, …`.
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PunctureSpec {
    pub position: [f64; 2],
    pub degree: i64,
}

/// `g = exp(i(w t + ψ(t)))` on one component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub winding: i64,
    #[serde(default)]
    pub phase: SeriesSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    /// Nodes per curve `N`.
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    #[serde(default = "default_small_nodes")]
    pub small_circle_nodes: usize,
    /// Near-boundary band `h` as a multiple of the node spacing.
    #[serde(default = "default_band")]
    pub band_multiplier: f64,
}

fn default_nodes() -> usize {
    Discretization::default().nodes
}

fn default_small_nodes() -> usize {
    Discretization::default().small_circle_nodes
}

fn default_band() -> f64 {
    Discretization::default().band_multiplier
}

fn default_radius() -> usize {
    DEFAULT_RADIUS
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec { nodes: default_nodes(), small_circle_nodes: default_small_nodes(), band_multiplier: default_band() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirichletSpec {
    /// Search radius `M` of the lattice minimization.
    #[serde(default = "default_radius")]
    pub lattice_radius: usize,
}

impl Default for DirichletSpec {
    fn default() -> Self {
        DirichletSpec { lattice_radius: DEFAULT_RADIUS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeMode {
    #[default]
    Optimal,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeumannSpec {
    #[serde(default)]
    pub mode: DegreeMode,
    /// Hole degrees `d̃` for the fixed mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degrees: Option<Vec<i64>>,
    /// Search radius `M` of the optimal mode.
    #[serde(default = "default_radius")]
    pub search_radius: usize,
}

impl Default for NeumannSpec {
    fn default() -> Self {
        NeumannSpec { mode: DegreeMode::Optimal, degrees: None, search_radius: DEFAULT_RADIUS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    #[default]
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    #[serde(default)]
    pub problem: ProblemKind,
    /// First radius; defaults to `min(ρ_max/2, diam/10)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho0: Option<f64>,
    #[serde(default = "default_steps")]
    pub steps: usize,
}

fn default_steps() -> usize {
    DEFAULT_STEPS
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec { problem: ProblemKind::Dirichlet, rho0: None, steps: DEFAULT_STEPS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandscapeSpec {
    #[serde(default)]
    pub problem: ProblemKind,
    /// Index of the puncture that is moved over the grid.
    #[serde(default)]
    pub puncture: usize,
    pub x: AxisSpec,
    pub y: AxisSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl AxisSpec {
    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![0.5 * (self.min + self.max)],
            n => (0..n).map(|k| self.min + (self.max - self.min) * k as f64 / (n - 1) as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Directory for reports; `--out` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Schema { path, message: e.into_inner().to_string() }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Schema { path: path.into(), message: message.into() }
}

fn check_finite(path: &str, values: &[f64]) -> Result<(), CliError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(schema(path, format!("value {i} is not finite"))),
        None => Ok(()),
    }
}

fn check_series(path: &str, s: &SeriesSpec) -> Result<(), CliError> {
    check_finite(&format!("{path}.constant"), &[s.constant])?;
    check_finite(&format!("{path}.cos"), &s.cos)?;
    check_finite(&format!("{path}.sin"), &s.sin)
}

fn check_curve(path: &str, c: &CurveSpec) -> Result<(), CliError> {
    match c {
        CurveSpec::Circle { center, radius } => {
            check_finite(&format!("{path}.circle.center"), center)?;
            check_finite(&format!("{path}.circle.radius"), &[*radius])
        }
        CurveSpec::Fourier { x, y } => {
            check_series(&format!("{path}.fourier.x"), x)?;
            check_series(&format!("{path}.fourier.y"), y)
        }
    }
}

impl RunConfig {
    fn validate(&self) -> Result<(), CliError> {
        let n = self.solver.nodes;
        if !n.is_power_of_two() || !(MIN_NODES..=MAX_NODES).contains(&n) {
            return Err(schema("solver.nodes", format!("{n} is not a power of two in [{MIN_NODES}, {MAX_NODES}]")));
        }
        let m = self.solver.small_circle_nodes;
        if m < 16 || m % 2 != 0 {
            return Err(schema("solver.small_circle_nodes", format!("{m} is not an even number of at least 16")));
        }
        let h = self.solver.band_multiplier;
        if !(h.is_finite() && h > 0.0) {
            return Err(schema("solver.band_multiplier", format!("{h} is not a positive number")));
        }
        check_curve("domain.outer", &self.domain.outer)?;
        for (i, c) in self.domain.holes.iter().enumerate() {
            check_curve(&format!("domain.holes[{i}]"), c)?;
        }
        for (i, p) in self.punctures.iter().enumerate() {
            check_finite(&format!("punctures[{i}].position"), &p.position)?;
        }
        if let Some(bd) = &self.boundary_data {
            for (i, c) in bd.iter().enumerate() {
                check_series(&format!("boundary_data[{i}].phase"), &c.phase)?;
            }
        }
        if let Some(r) = self.verify.rho0 {
            if !(r.is_finite() && r > 0.0) {
                return Err(schema("verify.rho0", format!("{r} is not a positive number")));
            }
        }
        if self.verify.steps < 3 {
            return Err(schema("verify.steps", format!("{} is below the minimum of 3", self.verify.steps)));
        }
        if self.neumann.mode == DegreeMode::Fixed && self.neumann.degrees.is_none() {
            return Err(schema("neumann.degrees", "required when mode is \"fixed\""));
        }
        if let Some(l) = &self.landscape {
            for (name, a) in [("x", &l.x), ("y", &l.y)] {
                check_finite(&format!("landscape.{name}"), &[a.min, a.max])?;
            }
        }
        Ok(())
    }

    pub fn discretization(&self) -> Discretization {
        Discretization {
            nodes: self.solver.nodes,
            small_circle_nodes: self.solver.small_circle_nodes,
            band_multiplier: self.solver.band_multiplier,
        }
    }

    /// The validated domain; geometric errors carry the config path.
    pub fn build_domain(&self) -> Result<Domain, CliError> {
        let punctures = PunctureSet::new(
            self.punctures.iter().map(|p| Puncture { position: vec2(p.position), degree: p.degree }).collect(),
        )
        .map_err(|e| schema("punctures", e.to_string()))?;
        Domain::new(
            curve(&self.domain.outer),
            self.domain.holes.iter().map(curve).collect(),
            punctures,
            self.discretization(),
        )
        .map_err(|e| {
            let path = match e {
                renorm_core::Error::PunctureOutsideDomain { index, .. } => format!("punctures[{index}]"),
                renorm_core::Error::InvalidPunctures(_) => "punctures".into(),
                renorm_core::Error::DegenerateCurve { component: 0, .. } => "domain.outer".into(),
                renorm_core::Error::DegenerateCurve { component, .. } => format!("domain.holes[{}]", component - 1),
                _ => "domain".into(),
            };
            schema(path, e.to_string())
        })
    }

    /// Boundary data, required for the Dirichlet problem and the degree
    /// check.
    pub fn build_boundary_data(&self, domain: &Domain) -> Result<BoundaryData, CliError> {
        let spec = self.boundary_data.as_ref().ok_or_else(|| schema("boundary_data", "missing"))?;
        BoundaryData::for_domain(
            domain,
            spec.iter().map(|c| ComponentData::new(c.winding, series(&c.phase))).collect(),
        )
        .map_err(|e| schema("boundary_data", e.to_string()))
    }

    pub fn neumann_mode(&self) -> NeumannMode {
        match self.neumann.mode {
            DegreeMode::Optimal => NeumannMode::Optimal { radius: self.neumann.search_radius },
            DegreeMode::Fixed => NeumannMode::Fixed(self.neumann.degrees.clone().unwrap_or_default()),
        }
    }

    pub fn problem(&self, kind: ProblemKind, domain: &Domain) -> Result<Problem, CliError> {
        Ok(match kind {
            ProblemKind::Dirichlet => {
                Problem::Dirichlet { g: self.build_boundary_data(domain)?, radius: self.dirichlet.lattice_radius }
            }
            ProblemKind::Neumann => Problem::Neumann { mode: self.neumann_mode() },
        })
    }

    /// The configuration with every default written out.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }
}

fn vec2(p: [f64; 2]) -> Vec2 {
    Vec2::new(p[0], p[1])
}

fn series(s: &SeriesSpec) -> TrigSeries {
    TrigSeries::new(s.constant, s.cos.clone(), s.sin.clone())
}

fn curve(c: &CurveSpec) -> Curve {
    match c {
        CurveSpec::Circle { center, radius } => Curve::circle(vec2(*center), *radius),
        CurveSpec::Fourier { x, y } => Curve::Fourier { x: series(x), y: series(y) },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DISK: &str = r#"{"domain": {"outer": {"circle": {"center": [0, 0], "radius": 1}}},
        "punctures": [{"position": [0, 0], "degree": 1}],
        "boundary_data": [{"winding": 1}]}"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(DISK).unwrap();
        assert_eq!(c.solver.nodes, 256);
        assert_eq!(c.dirichlet.lattice_radius, 3);
        assert_eq!(c.neumann.search_radius, 3);
        assert_eq!(c.verify.steps, 8);
        assert!(c.build_domain().is_ok());
    }

    #[test]
    fn unknown_key_is_named() {
        let text = DISK.replace("\"radius\"", "\"raddius\"");
        match parse_config(&text) {
            Err(CliError::Schema { path, message }) => {
                assert!(path.starts_with("domain.outer"), "{path}");
                assert!(message.contains("raddius"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn node_count_is_checked() {
        let text = DISK.replace("\"punctures\"", "\"solver\": {\"nodes\": 100}, \"punctures\"");
        assert!(matches!(parse_config(&text), Err(CliError::Schema { path, .. }) if path == "solver.nodes"));
    }

    #[test]
    fn round_trip_is_idempotent() {
        let once = parse_config(DISK).unwrap().to_json();
        let twice = parse_config(&once).unwrap().to_json();
        assert_eq!(once, twice);
    }

    #[test]
    fn overlapping_holes_report_their_path() {
        let text = r#"{"domain": {"outer": {"circle": {"center": [0, 0], "radius": 1}},
            "holes": [{"circle": {"center": [0.2, 0], "radius": 0.3}}, {"circle": {"center": [-0.2, 0], "radius": 0.3}}]}}"#;
        let c = parse_config(text).unwrap();
        match c.build_domain() {
            Err(CliError::Schema { path, .. }) => assert!(path.starts_with("domain")),
            other => panic!("{other:?}"),
        }
    }
}
