#![allow(dead_code)]

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use renorm_core::boundary_data::{BoundaryData, ComponentData};
use renorm_core::domain::{Curve, Discretization, Domain, PunctureSet};
use renorm_core::quadrature::TrigSeries;
use renorm_core::Vec2;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn v(x: f64, y: f64) -> Vec2 {
    Vec2::new(x, y)
}

pub fn punctures(p: &[(Vec2, i64)]) -> PunctureSet {
    PunctureSet::from_pairs(p).unwrap()
}

pub fn circles(holes: &[(Vec2, f64)], p: &[(Vec2, i64)]) -> Domain {
    Domain::new(
        Curve::circle(Vec2::ZERO, 1.0),
        holes.iter().map(|&(c, r)| Curve::circle(c, r)).collect(),
        punctures(p),
        Discretization::default(),
    )
    .unwrap()
}

pub fn disk(p: &[(Vec2, i64)]) -> Domain {
    circles(&[], p)
}

pub fn annulus(r: f64, p: &[(Vec2, i64)]) -> Domain {
    circles(&[(Vec2::ZERO, r)], p)
}

/// Star-shaped outer curve `r(t) = 1 + ε cos(k t)`.
pub fn star(eps: f64, k: usize) -> Curve {
    let mut xc = vec![0.0; k + 1];
    let xs = vec![0.0; k + 1];
    let yc = vec![0.0; k + 1];
    let mut ys = vec![0.0; k + 1];
    // (1 + ε cos kt)(cos t, sin t) expanded in modes k−1, 1, k+1.
    xc[0] += 1.0;
    ys[0] += 1.0;
    xc[k] += eps / 2.0;
    ys[k] += eps / 2.0;
    if k >= 2 {
        xc[k - 2] += eps / 2.0;
        ys[k - 2] -= eps / 2.0;
    }
    Curve::Fourier { x: TrigSeries::new(0.0, xc, xs), y: TrigSeries::new(0.0, yc, ys) }
}

pub fn winding(ws: &[i64]) -> BoundaryData {
    BoundaryData::new(ws.iter().map(|&w| ComponentData::winding(w)).collect())
}

pub fn random_series(rng: &mut impl Rng, modes: usize, amp: f64) -> TrigSeries {
    TrigSeries::new(
        rng.gen_range(-PI..PI),
        (0..modes).map(|k| amp * rng.gen_range(-1.0..1.0) / (k + 1) as f64).collect(),
        (0..modes).map(|k| amp * rng.gen_range(-1.0..1.0) / (k + 1) as f64).collect(),
    )
}

/// Random data with prescribed windings.
pub fn random_data(rng: &mut impl Rng, ws: &[i64]) -> BoundaryData {
    BoundaryData::new(ws.iter().map(|&w| ComponentData::new(w, random_series(rng, 3, 0.4))).collect())
}

/// `n` disjoint circular holes inside the unit disk.
pub fn random_holes(rng: &mut impl Rng, n: usize) -> Vec<(Vec2, f64)> {
    'outer: loop {
        let mut holes: Vec<(Vec2, f64)> = Vec::new();
        for _ in 0..n {
            let mut placed = false;
            for _ in 0..200 {
                let r = rng.gen_range(0.08..0.18);
                let c = v(rng.gen_range(-0.65..0.65), rng.gen_range(-0.65..0.65));
                if c.norm() + r > 0.82 {
                    continue;
                }
                if holes.iter().all(|(d, s)| c.dist(*d) > r + s + 0.12) {
                    holes.push((c, r));
                    placed = true;
                    break;
                }
            }
            if !placed {
                continue 'outer;
            }
        }
        return holes;
    }
}

/// Random puncture positions at least `clear` away from the boundary and
/// `2·clear` from each other.
pub fn random_positions(rng: &mut impl Rng, d: &Domain, k: usize, clear: f64) -> Vec<Vec2> {
    let mut out: Vec<Vec2> = Vec::new();
    while out.len() < k {
        let x = v(rng.gen_range(-0.9..0.9), rng.gen_range(-0.9..0.9));
        if d.contains(x) && d.distance_to_boundary(x) > clear && out.iter().all(|y| y.dist(x) > 2.0 * clear) {
            out.push(x);
        }
    }
    out
}

/// A domain with boundary data satisfying the degree relation.
pub struct DirichletCase {
    pub name: &'static str,
    pub domain: Domain,
    pub g: BoundaryData,
}

pub fn dirichlet_cases() -> Vec<DirichletCase> {
    let mut r = rng(7);
    let two_holes = [(v(-0.45, 0.0), 0.2), (v(0.45, 0.05), 0.18)];
    vec![
        DirichletCase { name: "annulus r=0.4, d=1, g=(e^it, 1)", domain: annulus(0.4, &[(v(0.65, 0.0), 1)]), g: winding(&[1, 0]) },
        DirichletCase {
            name: "annulus r=e^-1, d=1, g=(e^2it, e^it)",
            domain: annulus((-1.0f64).exp(), &[(v(0.45, 0.45), 1)]),
            g: winding(&[2, 1]),
        },
        DirichletCase {
            name: "eccentric annulus, d=-1, random phases",
            domain: circles(&[(v(0.2, -0.1), 0.3)], &[(v(-0.5, 0.3), -1)]),
            g: random_data(&mut r, &[0, 1]),
        },
        DirichletCase {
            name: "two holes, d=1, g=(e^it, 1, 1)",
            domain: circles(&two_holes, &[(v(0.0, 0.55), 1)]),
            g: winding(&[1, 0, 0]),
        },
        DirichletCase {
            name: "two holes, d=(1,-1), random phases",
            domain: circles(&two_holes, &[(v(0.0, 0.5), 1), (v(0.05, -0.55), -1)]),
            g: random_data(&mut r, &[1, 0, 1]),
        },
    ]
}

pub struct NeumannCase {
    pub name: &'static str,
    pub domain: Domain,
}

pub fn neumann_cases() -> Vec<NeumannCase> {
    let two_holes = [(v(-0.45, 0.0), 0.2), (v(0.45, 0.05), 0.18)];
    vec![
        NeumannCase { name: "annulus r=0.4, d=1 at 0.55", domain: annulus(0.4, &[(v(0.55, 0.0), 1)]) },
        NeumannCase { name: "annulus r=0.4, symmetric pair d=(1,1)", domain: annulus(0.4, &[(v(0.0, 0.7), 1), (v(0.0, -0.7), 1)]) },
        NeumannCase { name: "eccentric annulus, d=2", domain: circles(&[(v(0.2, -0.1), 0.3)], &[(v(-0.5, 0.3), 2)]) },
        NeumannCase { name: "two holes, d=(1,-1)", domain: circles(&two_holes, &[(v(0.0, 0.5), 1), (v(0.05, -0.55), -1)]) },
        NeumannCase { name: "two holes, d=1 near a hole", domain: circles(&two_holes, &[(v(-0.45, 0.32), 1)]) },
    ]
}

/// Initial radius of a convergence schedule.
pub fn rho0(d: &Domain) -> f64 {
    (0.5 * d.rho_max()).min(0.16)
}

/// The same data on a rigidly moved domain whose circles keep their
/// parametrization angle.
pub fn moved_data(d: &Domain, g: &BoundaryData, angle: f64) -> BoundaryData {
    BoundaryData::new(
        g.components()
            .iter()
            .enumerate()
            .map(|(c, data)| match d.curve(c) {
                Curve::Circle { .. } => data.shifted(angle),
                Curve::Fourier { .. } => data.clone(),
            })
            .collect(),
    )
}
