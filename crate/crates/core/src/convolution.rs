//! Boundary picture of `μ = μ₁ ⊠ μ₂`: density on a uniform grid, atoms, and
//! mass bookkeeping.
//!
//! Each grid angle `φ` is handled by solving the subordination system along
//! the ray `r·e^{−iφ}` and extrapolating `(1 − |η|²)/(2π|1 − η|²)` to
//! `r = 1`. Atoms come from the pair rule in [`crate::regularity`]; each is
//! reported with its pair-rule mass once the radial limit of `(1 − r)ψ_μ`
//! confirms it, and the radial value is kept in the diagnostics.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::herglotz::{
    atom_mass_from_psi_samples, density_from_samples, DensityEstimate, HerglotzError,
    PsiEvaluator, RadialSchedule,
};
use crate::measure::{is_point_mass, Atom, CircleMeasure, UnitAngle};
use crate::regularity::{predicted_atoms, RegularityError};
use crate::subordination::{solve_at, solve_schedule, SolverConfig, SubordinationError};

/// Radial and predicted atom masses must agree to this for confirmation.
pub const ATOM_CONFIRM_TOL: f64 = 1e-4;

/// Largest fraction of grid points allowed to fail before the whole run does.
pub const MAX_FAILURE_FRACTION: f64 = 0.01;

/// Target absolute error of the total quadrature mass; each cell gets a share
/// proportional to its width.
pub const QUADRATURE_TOL: f64 = 1e-6;

/// Number of ternary subdivisions a grid cell may undergo.
pub const MAX_REFINE_DEPTH: u32 = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConvolutionError {
    #[error("grid size {0} must be even and at least 16")]
    BadGrid(usize),
    #[error("{failed} of {total} grid points failed to solve")]
    TooManyFailures { failed: usize, total: usize },
    #[error(transparent)]
    Herglotz(#[from] HerglotzError),
    #[error(transparent)]
    Subordination(#[from] SubordinationError),
    #[error(transparent)]
    Regularity(#[from] RegularityError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionConfig {
    pub grid_size: usize,
    pub schedule: RadialSchedule,
    /// Deeper schedule retried at points where `schedule` did not settle.
    pub fallback_schedule: Option<RadialSchedule>,
    pub solver: SolverConfig,
}

/// Deepest dyadic radius `1 − 2^{−k}` of the default fallback schedule.
pub const FALLBACK_MAX_K: u32 = 40;

impl Default for ConvolutionConfig {
    fn default() -> Self {
        ConvolutionConfig {
            grid_size: 1024,
            schedule: RadialSchedule::default(),
            fallback_schedule: Some(
                RadialSchedule::dyadic(10, FALLBACK_MAX_K).expect("static schedule"),
            ),
            solver: SolverConfig::default(),
        }
    }
}

/// The pair `(μ₁, μ₂)` viewed as the ψ-transform of their convolution.
pub struct Convolution<'a> {
    pub m1: &'a CircleMeasure,
    pub m2: &'a CircleMeasure,
    pub solver: SolverConfig,
}

impl<'a> Convolution<'a> {
    pub fn new(m1: &'a CircleMeasure, m2: &'a CircleMeasure, solver: SolverConfig) -> Self {
        Convolution { m1, m2, solver }
    }
}

impl PsiEvaluator for Convolution<'_> {
    fn psi_at(&self, z: Complex64) -> Result<Complex64, HerglotzError> {
        solve_at(self.m1, self.m2, z, &self.solver)
            .map(|r| r.psi())
            .map_err(|e| HerglotzError::Evaluation(e.to_string()))
    }

    fn psi_along_ray(
        &self,
        direction: UnitAngle,
        radii: &[f64],
    ) -> Result<Vec<Complex64>, HerglotzError> {
        crate::subordination::solve_ray(self.m1, self.m2, direction, radii, &self.solver)
            .into_iter()
            .map(|r| {
                r.map(|r| r.psi())
                    .map_err(|e| HerglotzError::Evaluation(e.to_string()))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityFlag {
    /// Extrapolation settled.
    Converged,
    /// Finite estimate whose extrapolants did not settle; still integrated.
    Unresolved,
    /// Estimate still growing without settling: a candidate point of
    /// unboundedness. Excluded from quadrature.
    Unbounded,
    /// Pole-like or above-threshold growth. Excluded from quadrature.
    Divergent,
    /// The solver failed on this ray. Excluded from quadrature.
    Failed,
}

impl DensityFlag {
    pub fn is_singular(self) -> bool {
        matches!(self, DensityFlag::Unbounded | DensityFlag::Divergent)
    }

    pub fn counts_in_quadrature(self) -> bool {
        matches!(self, DensityFlag::Converged | DensityFlag::Unresolved)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub angle: UnitAngle,
    /// `None` when the point is flagged singular or failed.
    pub density: Option<f64>,
    pub flag: DensityFlag,
    /// Largest subordination residual along the ray.
    pub residual: f64,
    /// `|η|` at the last radius of the ray.
    pub eta_modulus: f64,
    /// `|1 − η|` at the last radius of the ray.
    pub eta_gap: f64,
}

/// A quadrature cell: the density is read as constant on
/// `[center − width/2, center + width/2]`. `None` marks an excluded cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureCell {
    pub center: f64,
    pub width: f64,
    pub density: Option<f64>,
}

impl QuadratureCell {
    fn mass(&self) -> f64 {
        self.density.unwrap_or(0.0) * self.width
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomCheck {
    pub angle: UnitAngle,
    pub predicted_mass: f64,
    /// Radial limit of `(1 − r)ψ_μ`, when it settled.
    pub radial_mass: Option<f64>,
    pub confirmed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub max_residual: f64,
    pub max_iterations: usize,
    pub failed_points: usize,
    pub unresolved_points: usize,
    pub max_eta_modulus: f64,
    /// Smallest `|1 − η|` over the grid; positive exactly when `η` stays
    /// away from `1`, i.e. when `ψ` is bounded.
    pub min_eta_gap: f64,
    /// Extra angles solved while refining quadrature cells.
    pub refinement_points: usize,
    /// Total width of cells excluded from quadrature.
    pub excluded_width: f64,
    pub ac_mass: f64,
    pub atom_mass: f64,
    pub atom_checks: Vec<AtomCheck>,
    /// The convolution was computed as a rotation of one factor.
    pub rotation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvolutionResult {
    pub grid: Vec<GridPoint>,
    /// Adaptively refined cells covering the circle, used for mass, moments
    /// and arc masses.
    pub cells: Vec<QuadratureCell>,
    pub atoms: Vec<Atom>,
    /// `1 − (quadrature mass) − (atom mass)`.
    pub mass_defect: f64,
    pub diagnostics: Diagnostics,
}

impl ConvolutionResult {
    pub fn step(&self) -> f64 {
        TAU / self.grid.len() as f64
    }

    pub fn divergent_indices(&self) -> Vec<usize> {
        self.grid
            .iter()
            .enumerate()
            .filter(|(_, p)| p.flag.is_singular())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn ac_mass(&self) -> f64 {
        self.cells.iter().map(QuadratureCell::mass).sum()
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// `m_n` of the result: exact integrals of `e^{inθ}` over the quadrature
    /// cells, plus the atoms.
    pub fn moment(&self, n: u32) -> Complex64 {
        let nf = n as f64;
        let ac: Complex64 = self
            .cells
            .iter()
            .filter_map(|c| {
                let weight = if n == 0 {
                    c.width
                } else {
                    2.0 * (nf * c.width / 2.0).sin() / nf
                };
                c.density
                    .map(|d| d * weight * Complex64::from_polar(1.0, nf * c.center))
            })
            .sum();
        let atoms: Complex64 = self
            .atoms
            .iter()
            .map(|a| a.mass * a.angle.point().powu(n))
            .sum();
        ac + atoms
    }

    /// Mass of the open arc from `start` counterclockwise to `end`. Cells
    /// count when their centre lies inside.
    pub fn arc_mass(&self, start: UnitAngle, end: UnitAngle) -> f64 {
        let length = (end.radians() - start.radians()).rem_euclid(TAU);
        let inside = |t: f64| {
            let off = (t - start.radians()).rem_euclid(TAU);
            off > 1e-12 && off < length - 1e-12
        };
        let ac: f64 = self
            .cells
            .iter()
            .filter(|c| inside(c.center))
            .map(QuadratureCell::mass)
            .sum();
        ac + self
            .atoms
            .iter()
            .filter(|a| inside(a.angle.radians()))
            .map(|a| a.mass)
            .sum::<f64>()
    }
}

fn grid_angles(n: usize) -> impl Iterator<Item = UnitAngle> {
    (0..n).map(move |k| UnitAngle::new(TAU * k as f64 / n as f64))
}

/// `δ_γ ⊠ ν` is `ν` rotated by `γ`.
fn rotation(gamma: UnitAngle, nu: &CircleMeasure, grid_size: usize) -> ConvolutionResult {
    let point = |angle: UnitAngle| GridPoint {
        angle,
        density: Some(nu.ac.density_at(angle.radians() - gamma.radians())),
        flag: DensityFlag::Converged,
        residual: 0.0,
        eta_modulus: 0.0,
        eta_gap: 1.0,
    };
    let grid: Vec<GridPoint> = grid_angles(grid_size).map(point).collect();
    let (cells, refinement_points) = refine(&grid, |t| point(UnitAngle::new(t)).density);
    let atoms: Vec<Atom> = nu
        .atoms
        .iter()
        .map(|a| Atom::new(a.angle.add(gamma), a.mass))
        .collect();
    finish(grid, cells, refinement_points, atoms, Vec::new(), 0, true)
}

/// Ternary refinement of the grid cells. A cell is split into three of a
/// third the width, the middle one reusing the parent's sample, until the
/// split changes the cell mass by no more than its share of
/// [`QUADRATURE_TOL`]. `density` returns `None` for points to exclude.
fn refine<F>(grid: &[GridPoint], density: F) -> (Vec<QuadratureCell>, usize)
where
    F: Fn(f64) -> Option<f64> + Sync,
{
    let width = TAU / grid.len() as f64;
    let mut active: Vec<QuadratureCell> = grid
        .iter()
        .map(|p| QuadratureCell {
            center: p.angle.radians(),
            width,
            density: if p.flag.counts_in_quadrature() {
                p.density
            } else {
                None
            },
        })
        .collect();
    let mut done = Vec::with_capacity(active.len());
    let mut solved = 0;
    for depth in 0..MAX_REFINE_DEPTH {
        if active.is_empty() {
            break;
        }
        let sides: Vec<(Option<f64>, Option<f64>)> = active
            .par_iter()
            .map(|c| {
                let third = c.width / 3.0;
                (density(c.center - third), density(c.center + third))
            })
            .collect();
        solved += 2 * active.len();
        let mut next = Vec::new();
        for (cell, (left, right)) in active.into_iter().zip(sides) {
            let third = cell.width / 3.0;
            let children = [
                QuadratureCell {
                    center: cell.center - third,
                    width: third,
                    density: left,
                },
                QuadratureCell {
                    width: third,
                    ..cell
                },
                QuadratureCell {
                    center: cell.center + third,
                    width: third,
                    density: right,
                },
            ];
            let fine: f64 = children.iter().map(QuadratureCell::mass).sum();
            let settled = (fine - cell.mass()).abs() <= QUADRATURE_TOL * cell.width / TAU;
            if settled || depth + 1 == MAX_REFINE_DEPTH {
                done.extend(children);
            } else {
                next.extend(children);
            }
        }
        active = next;
    }
    done.extend(active);
    done.sort_by(|a, b| a.center.total_cmp(&b.center));
    (done, solved)
}

fn finish(
    grid: Vec<GridPoint>,
    cells: Vec<QuadratureCell>,
    refinement_points: usize,
    mut atoms: Vec<Atom>,
    atom_checks: Vec<AtomCheck>,
    max_iterations: usize,
    rotation: bool,
) -> ConvolutionResult {
    atoms.sort_by(|a, b| a.angle.radians().total_cmp(&b.angle.radians()));
    let mut result = ConvolutionResult {
        diagnostics: Diagnostics {
            max_residual: grid.iter().map(|p| p.residual).fold(0.0, f64::max),
            max_iterations,
            failed_points: grid.iter().filter(|p| p.flag == DensityFlag::Failed).count(),
            unresolved_points: grid
                .iter()
                .filter(|p| p.flag == DensityFlag::Unresolved)
                .count(),
            max_eta_modulus: grid.iter().map(|p| p.eta_modulus).fold(0.0, f64::max),
            min_eta_gap: grid.iter().map(|p| p.eta_gap).fold(f64::INFINITY, f64::min),
            refinement_points,
            excluded_width: cells
                .iter()
                .filter(|c| c.density.is_none())
                .map(|c| c.width)
                .sum(),
            ac_mass: 0.0,
            atom_mass: 0.0,
            atom_checks,
            rotation,
        },
        grid,
        cells,
        atoms,
        mass_defect: 0.0,
    };
    result.diagnostics.ac_mass = result.ac_mass();
    result.diagnostics.atom_mass = result.atom_mass();
    result.mass_defect = 1.0 - result.diagnostics.ac_mass - result.diagnostics.atom_mass;
    result
}

struct RaySolution {
    point: GridPoint,
    iterations: usize,
}

fn solve_grid_point(
    m1: &CircleMeasure,
    m2: &CircleMeasure,
    angle: UnitAngle,
    config: &ConvolutionConfig,
) -> RaySolution {
    let first = solve_on_schedule(m1, m2, angle, &config.schedule, &config.solver);
    match (&config.fallback_schedule, first.point.flag) {
        (Some(deep), DensityFlag::Unbounded | DensityFlag::Unresolved)
            if deep.last() > config.schedule.last() =>
        {
            let second = solve_on_schedule(m1, m2, angle, deep, &config.solver);
            RaySolution {
                iterations: first.iterations.max(second.iterations),
                ..second
            }
        }
        _ => first,
    }
}

fn solve_on_schedule(
    m1: &CircleMeasure,
    m2: &CircleMeasure,
    angle: UnitAngle,
    schedule: &RadialSchedule,
    solver: &SolverConfig,
) -> RaySolution {
    let ray = solve_schedule(m1, m2, angle.conj(), schedule, solver);
    let mut residual: f64 = 0.0;
    let mut iterations = 0;
    let mut samples = Vec::with_capacity(ray.len());
    let mut failed = false;
    let mut eta_modulus = 0.0;
    let mut eta_gap = f64::NAN;
    for r in &ray {
        match r {
            Ok(res) => {
                residual = residual.max(res.residual);
                iterations = iterations.max(res.iterations);
                samples.push(res.poisson() / TAU);
                eta_modulus = res.eta.norm();
                eta_gap = (1.0 - res.eta).norm();
            }
            Err(SubordinationError::MaxIterations { best }) => {
                failed = true;
                residual = residual.max(best.residual);
                iterations = iterations.max(best.iterations);
                samples.push(best.poisson() / TAU);
                eta_modulus = best.eta.norm();
                eta_gap = (1.0 - best.eta).norm();
            }
            Err(_) => {
                failed = true;
                samples.push(f64::NAN);
            }
        }
    }
    let (density, flag) = if failed {
        (None, DensityFlag::Failed)
    } else {
        match density_from_samples(angle, schedule.radii(), &samples) {
            Ok(DensityEstimate {
                converged: true,
                value,
                ..
            }) => (Some(value), DensityFlag::Converged),
            Ok(DensityEstimate { tail, .. }) if tail.growing => (None, DensityFlag::Unbounded),
            Ok(DensityEstimate { value, .. }) => (Some(value), DensityFlag::Unresolved),
            Err(_) => (None, DensityFlag::Divergent),
        }
    };
    RaySolution {
        point: GridPoint {
            angle,
            density,
            flag,
            residual,
            eta_modulus,
            eta_gap,
        },
        iterations,
    }
}

/// Computes `μ₁ ⊠ μ₂` on a grid of `config.grid_size` angles.
pub fn convolve(
    m1: &CircleMeasure,
    m2: &CircleMeasure,
    config: &ConvolutionConfig,
) -> Result<ConvolutionResult, ConvolutionError> {
    let n = config.grid_size;
    if n < 16 || n % 2 != 0 {
        return Err(ConvolutionError::BadGrid(n));
    }
    if is_point_mass(m1) {
        return Ok(rotation(m1.atoms[0].angle, m2, n));
    }
    if is_point_mass(m2) {
        return Ok(rotation(m2.atoms[0].angle, m1, n));
    }

    let angles: Vec<UnitAngle> = grid_angles(n).collect();
    let solved: Vec<RaySolution> = angles
        .par_iter()
        .map(|&angle| solve_grid_point(m1, m2, angle, config))
        .collect();
    let max_iterations = solved.iter().map(|s| s.iterations).max().unwrap_or(0);
    let grid: Vec<GridPoint> = solved.into_iter().map(|s| s.point).collect();

    let failed = grid.iter().filter(|p| p.flag == DensityFlag::Failed).count();
    if failed as f64 > MAX_FAILURE_FRACTION * n as f64 {
        return Err(ConvolutionError::TooManyFailures { failed, total: n });
    }

    let checks = confirm_atoms(m1, m2, &config.schedule, &config.solver)?;
    let atoms = checks
        .iter()
        .filter(|c| c.confirmed)
        .map(|c| Atom::new(c.angle, c.predicted_mass))
        .collect();
    let (cells, refinement_points) = refine(&grid, |t| {
        let p = solve_grid_point(m1, m2, UnitAngle::new(t), config).point;
        p.density.filter(|_| p.flag.counts_in_quadrature())
    });
    Ok(finish(
        grid,
        cells,
        refinement_points,
        atoms,
        checks,
        max_iterations,
        false,
    ))
}

/// Checks every atom predicted by the pair rule against the radial limit of
/// `(1 − r)ψ_μ` along its direction.
pub fn confirm_atoms(
    m1: &CircleMeasure,
    m2: &CircleMeasure,
    schedule: &RadialSchedule,
    solver: &SolverConfig,
) -> Result<Vec<AtomCheck>, ConvolutionError> {
    let eval = Convolution::new(m1, m2, *solver);
    let mut checks = Vec::new();
    for predicted in predicted_atoms(m1, m2)? {
        let radial_mass = eval
            .psi_along_ray(predicted.angle.conj(), schedule.radii())
            .and_then(|psi| atom_mass_from_psi_samples(predicted.angle, schedule.radii(), &psi))
            .ok();
        let confirmed =
            radial_mass.is_some_and(|m| (m - predicted.mass).abs() <= ATOM_CONFIRM_TOL);
        checks.push(AtomCheck {
            angle: predicted.angle,
            predicted_mass: predicted.mass,
            radial_mass,
            confirmed,
        });
    }
    Ok(checks)
}

/// Density of `μ₁ ⊠ μ₂` at one angle.
pub fn density_at(
    m1: &CircleMeasure,
    m2: &CircleMeasure,
    theta: UnitAngle,
    schedule: &RadialSchedule,
    solver: &SolverConfig,
) -> Result<DensityEstimate, ConvolutionError> {
    let eval = Convolution::new(m1, m2, *solver);
    let psi = eval.psi_along_ray(theta.conj(), schedule.radii())?;
    Ok(crate::herglotz::density_from_psi_samples(
        theta,
        schedule.radii(),
        &psi,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{moment, AcPart};
    use std::f64::consts::PI;

    fn config(n: usize) -> ConvolutionConfig {
        ConvolutionConfig {
            grid_size: n,
            ..ConvolutionConfig::default()
        }
    }

    #[test]
    fn symmetric_bernoullis_give_haar() {
        let b5 = CircleMeasure::bernoulli(0.5).unwrap();
        let r = convolve(&b5, &b5, &config(256)).unwrap();
        assert!(r.atoms.is_empty());
        for p in &r.grid {
            assert!((p.density.unwrap() - 1.0 / TAU).abs() < 1e-12);
        }
        assert!(r.mass_defect.abs() < 1e-12);
    }

    #[test]
    fn point_mass_rotates() {
        let gamma = UnitAngle::from_pi_multiple(0.5);
        let nu = CircleMeasure::new(
            vec![Atom::new(UnitAngle::new(0.3), 0.4)],
            AcPart::UniformArc {
                start: UnitAngle::new(1.0),
                length: 2.0,
                mass: 0.6,
            },
        )
        .unwrap();
        let r = convolve(&CircleMeasure::point_mass(gamma), &nu, &config(64)).unwrap();
        assert!(r.diagnostics.rotation);
        assert_eq!(r.atoms.len(), 1);
        assert!((r.atoms[0].angle.radians() - (0.3 + PI / 2.0)).abs() < 1e-15);
        // arc [1, 3] moved to [1 + π/2, 3 + π/2]
        let inside = r.grid.iter().find(|p| (p.angle.radians() - 3.0).abs() < 0.1).unwrap();
        assert!((inside.density.unwrap() - 0.3).abs() < 1e-15);
        let outside = r.grid.iter().find(|p| (p.angle.radians() - 1.5).abs() < 0.1).unwrap();
        assert_eq!(outside.density, Some(0.0));
    }

    #[test]
    fn bernoulli_square_atom_and_mass() {
        let b7 = CircleMeasure::bernoulli(0.7).unwrap();
        let r = convolve(&b7, &b7, &config(2048)).unwrap();
        assert_eq!(r.atoms.len(), 1);
        assert_eq!(r.atoms[0].angle, UnitAngle::ZERO);
        assert!((r.atoms[0].mass - 0.4).abs() < 1e-5);
        assert_eq!(r.grid[0].flag, DensityFlag::Divergent);
        assert!((r.ac_mass() - 0.6).abs() < 1e-3);
        assert!((r.moment(1) - Complex64::new(0.16, 0.0)).norm() < 1e-5);
    }

    #[test]
    fn commutative() {
        let m1 = CircleMeasure::atomic(&[(0.1, 0.5), (0.8, 0.3), (1.5, 0.2)]).unwrap();
        let m2 = CircleMeasure::atomic(&[(0.0, 0.7), (1.1, 0.3)]).unwrap();
        let a = convolve(&m1, &m2, &config(128)).unwrap();
        let b = convolve(&m2, &m1, &config(128)).unwrap();
        for (p, q) in a.grid.iter().zip(&b.grid) {
            assert_eq!(p.flag, q.flag);
            if let (Some(x), Some(y)) = (p.density, q.density) {
                assert!((x - y).abs() < 1e-8);
            }
        }
        assert_eq!(a.atoms.len(), b.atoms.len());
    }

    #[test]
    fn density_at_examples() {
        let sched = RadialSchedule::default();
        let solver = SolverConfig::default();
        let haar = CircleMeasure::haar();
        let b7 = CircleMeasure::bernoulli(0.7).unwrap();
        let d = density_at(&haar, &b7, UnitAngle::new(2.0), &sched, &solver).unwrap();
        assert!((d.value - 1.0 / TAU).abs() < 1e-15);
        assert!(matches!(
            density_at(&b7, &b7, UnitAngle::ZERO, &sched, &solver),
            Err(ConvolutionError::Herglotz(HerglotzError::DivergentDensity { .. }))
        ));
        let d = density_at(&b7, &b7, UnitAngle::from_pi_multiple(0.5), &sched, &solver).unwrap();
        assert!(d.converged && d.value > 0.0);
    }

    #[test]
    fn solver_path_unit_element_matches_measure_density() {
        // Through the solver rather than the rotation shortcut.
        let nu = CircleMeasure::new(
            vec![],
            AcPart::UniformArc {
                start: UnitAngle::new(0.5),
                length: 4.0,
                mass: 1.0,
            },
        )
        .unwrap();
        let delta = CircleMeasure::point_mass(UnitAngle::ZERO);
        for theta in [1.0, 2.5, 5.0] {
            let d = density_at(&nu, &delta, UnitAngle::new(theta), &RadialSchedule::default(), &SolverConfig::default())
                .unwrap();
            assert!((d.value - nu.ac.density_at(theta)).abs() < 1e-8, "theta {theta}");
        }
    }

    #[test]
    fn rejects_bad_grid() {
        let b = CircleMeasure::bernoulli(0.3).unwrap();
        assert_eq!(convolve(&b, &b, &config(15)).unwrap_err(), ConvolutionError::BadGrid(15));
        assert_eq!(convolve(&b, &b, &config(8)).unwrap_err(), ConvolutionError::BadGrid(8));
    }

    #[test]
    fn first_moment_factorizes_with_ac_input() {
        let m1 = CircleMeasure::new(
            vec![Atom::new(UnitAngle::new(0.2), 0.5)],
            AcPart::UniformArc {
                start: UnitAngle::new(5.0),
                length: 1.0,
                mass: 0.5,
            },
        )
        .unwrap();
        let m2 = CircleMeasure::atomic(&[(0.0, 0.45), (0.25, 0.55)]).unwrap();
        let r = convolve(&m1, &m2, &config(1024)).unwrap();
        let expected = moment(&m1, 1) * moment(&m2, 1);
        assert!((r.moment(1) - expected).norm() < 1e-4, "{} vs {}", r.moment(1), expected);
    }
}
