//! Command dispatch for the `renorm` tool: reads a run configuration,
//! evaluates renormalized energies or finite-ρ studies, and writes reports
//! into an output directory.

pub mod config;
pub mod report;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use renorm_core::domain::Domain;
use renorm_core::oracle::{analyze, finite_rho, RhoRecord};
use renorm_core::renorm::{dirichlet_renormalized_energy, landscape_point, neumann_renormalized_energy, Problem};
use renorm_core::Vec2;

use config::{ProblemKind, RunConfig};
use report::{
    float, landscape_csv, to_report, verdict_line, DegreeOut, EnergyOut, LandscapeFailure, LandscapeMin, LandscapeOut,
    VerifyOut,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error at {}: {message}", if path.is_empty() { "<root>" } else { path.as_str() })]
    Schema { path: String, message: String },
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Compute(String),
}

impl CliError {
    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema { .. } | CliError::Read { .. } => 2,
            CliError::Write { .. } | CliError::Compute(_) => 1,
        }
    }
}

fn compute(e: renorm_core::Error) -> CliError {
    CliError::Compute(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    DegreeCheck,
    DirichletEnergy,
    NeumannEnergy,
    Verify,
    Landscape,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::DegreeCheck => "degree-check",
            Command::DirichletEnergy => "dirichlet-energy",
            Command::NeumannEnergy => "neumann-energy",
            Command::Verify => "verify",
            Command::Landscape => "landscape",
        }
    }
}

pub struct Options {
    pub out: Option<PathBuf>,
    pub quiet: bool,
}

struct Ctx {
    dir: PathBuf,
    quiet: bool,
}

impl Ctx {
    fn progress(&self, msg: &str) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }

    fn write(&self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|source| CliError::Write { path: path.clone(), source })?;
        self.progress(&format!("wrote {}", path.display()));
        Ok(path)
    }
}

pub fn read_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read { path: path.into(), source })?;
    config::parse_config(&text)
}

/// Runs `command` and returns the one-line summary for standard output.
pub fn run(command: Command, cfg: &RunConfig, opts: &Options) -> Result<String, CliError> {
    let dir = opts.out.clone().or_else(|| cfg.output.dir.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|source| CliError::Write { path: dir.clone(), source })?;
    let ctx = Ctx { dir, quiet: opts.quiet };
    let domain = cfg.build_domain()?;
    ctx.progress(&format!(
        "{}: {} boundary curves, {} punctures, N = {}",
        command.name(),
        domain.num_components(),
        domain.punctures().len(),
        cfg.solver.nodes
    ));
    match command {
        Command::DegreeCheck => degree_check(cfg, &domain, &ctx),
        Command::DirichletEnergy => {
            let g = cfg.build_boundary_data(&domain)?;
            let r = dirichlet_renormalized_energy(&domain, &g, cfg.dirichlet.lattice_radius).map_err(compute)?;
            ctx.write("dirichlet-energy.json", &to_report(&EnergyOut::from(&r)))?;
            Ok(format!("W_g = {}", float(r.total)))
        }
        Command::NeumannEnergy => {
            let r = neumann_renormalized_energy(&domain, &cfg.neumann_mode()).map_err(compute)?;
            ctx.write("neumann-energy.json", &to_report(&EnergyOut::from(&r)))?;
            Ok(format!("W_N = {} with hole degrees {:?}", float(r.total), r.degrees))
        }
        Command::Verify => verify(cfg, &domain, &ctx),
        Command::Landscape => landscape(cfg, &domain, &ctx),
    }
}

fn degree_check(cfg: &RunConfig, domain: &Domain, ctx: &Ctx) -> Result<String, CliError> {
    let g = cfg.build_boundary_data(domain)?;
    let v = g.check_compatibility(domain.punctures()).map_err(compute)?;
    let residuals = (0..g.len())
        .map(|c| g.degree_with_residual(c, g.default_quadrature()).map(|d| d.residual))
        .collect::<Result<Vec<_>, _>>()
        .map_err(compute)?;
    let line = verdict_line(&v);
    let out = DegreeOut {
        degrees: v.degrees.clone(),
        residuals,
        sum_punctures: v.sum_punctures,
        sum_holes: v.sum_holes,
        holds: v.holds,
        verdict: line.clone(),
        sobolev_space_nonempty: v.sobolev_space_nonempty,
    };
    ctx.write("degree-check.json", &to_report(&out))?;
    Ok(line)
}

fn problem_name(kind: ProblemKind) -> &'static str {
    match kind {
        ProblemKind::Dirichlet => "dirichlet",
        ProblemKind::Neumann => "neumann",
    }
}

fn closed_form(problem: &Problem, domain: &Domain) -> Result<f64, CliError> {
    problem.energy(domain).map(|r| r.total).map_err(compute)
}

fn verify(cfg: &RunConfig, domain: &Domain, ctx: &Ctx) -> Result<String, CliError> {
    let spec = &cfg.verify;
    let problem = cfg.problem(spec.problem, domain)?;
    let rho0 = spec.rho0.unwrap_or_else(|| (0.5 * domain.rho_max()).min(0.1 * domain.diameter()));
    let schedule: Vec<f64> = (0..spec.steps).map(|j| rho0 * 0.5f64.powi(j as i32)).collect();
    ctx.progress(&format!("verify: {} radii from {}", schedule.len(), float(rho0)));
    let closed = closed_form(&problem, domain)?;
    let records: Vec<RhoRecord> = schedule
        .par_iter()
        .map(|&rho| finite_rho(domain, &problem, rho))
        .collect::<Result<_, _>>()
        .map_err(compute)?;
    let study = analyze(records.clone());
    let out = VerifyOut::new(problem_name(spec.problem), &records, study.as_ref().map_err(|e| e.to_string()), Some(closed));
    ctx.write("verify.json", &to_report(&out))?;
    let s = study.map_err(compute)?;
    let order = s.order.map(float).unwrap_or_else(|| "n/a".into());
    Ok(format!(
        "monotonicity {}, extrapolated {}, closed form {}, fitted order {order}",
        out.monotonicity,
        float(s.extrapolated),
        float(closed)
    ))
}

fn landscape(cfg: &RunConfig, domain: &Domain, ctx: &Ctx) -> Result<String, CliError> {
    let spec = cfg.landscape.as_ref().ok_or_else(|| CliError::Schema { path: "landscape".into(), message: "missing".into() })?;
    if spec.puncture >= domain.punctures().len() {
        return Err(CliError::Schema {
            path: "landscape.puncture".into(),
            message: format!("no puncture with index {}", spec.puncture),
        });
    }
    let problem = cfg.problem(spec.problem, domain)?;
    let grid: Vec<Vec2> = spec.y.values().into_iter().flat_map(|y| spec.x.values().into_iter().map(move |x| Vec2::new(x, y))).collect();
    ctx.progress(&format!("landscape: {} grid points", grid.len()));
    let points: Vec<_> = grid.par_iter().map(|&x| landscape_point(domain, &problem, spec.puncture, x)).collect();
    let csv = landscape_csv(&points).map_err(|e| CliError::Compute(e.to_string()))?;
    ctx.write("landscape.csv", &csv)?;
    let min = points
        .iter()
        .filter_map(|p| p.report.as_ref().ok().map(|r| (p.position, r.total)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(x, total)| LandscapeMin { x: x.x, y: x.y, total });
    let failures: Vec<LandscapeFailure> = points
        .iter()
        .filter_map(|p| p.report.as_ref().err().map(|e| LandscapeFailure { x: p.position.x, y: p.position.y, reason: e.clone() }))
        .collect();
    let out = LandscapeOut {
        problem: problem_name(spec.problem),
        puncture: spec.puncture,
        points: points.len(),
        failed: failures.len(),
        min,
        failures,
    };
    ctx.write("landscape.json", &to_report(&out))?;
    Ok(format!("{} grid points, {} without a value", out.points, out.failed))
}
