//! Subordination functions of `μ = μ₁ ⊠ μ₂`.
//!
//! For `z` in the disk, `ω₁(z)` is the unique fixed point of the self-map
//! `w ↦ z·h₂(z·h₁(w))`, which sends the closed disk into the disk of
//! radius `|z|`. Then `ω₂ = z·h₁(ω₁)` and `η_μ(z) = ω₁ω₂/z`.
//!
//! The iteration starts from `0` (or from the previous point on a ray) and
//! takes Newton steps on `w − f(w)` whenever they stay in the disk of radius
//! `|z|` and reduce the residual; otherwise it falls back to the plain
//! fixed-point step. Near boundary points where `f` is almost neutral the
//! plain step alone needs on the order of `1/(1 − |z|)` iterations.

use num_complex::Complex64;
use thiserror::Error;

use crate::herglotz::{RadialSchedule, Transform};
use crate::measure::UnitAngle;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITERATIONS: usize = 1_000_000;

/// Number of trailing residuals kept on each result.
const HISTORY_LEN: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SubordinationError {
    #[error("point {0} is not inside the unit disk")]
    OutsideDisk(Complex64),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("no convergence at z = {} after {} iterations (best residual {:.3e})", .best.z, .best.iterations, .best.residual)]
    MaxIterations { best: Box<SubordinationResult> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iterations: usize,
    /// Allow Newton steps. With `false` only the plain fixed-point map is used.
    pub newton: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: DEFAULT_TOL,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            newton: true,
        }
    }
}

impl SolverConfig {
    pub fn with_tol(tol: f64) -> Self {
        SolverConfig {
            tol,
            ..SolverConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubordinationResult {
    pub z: Complex64,
    pub omega1: Complex64,
    pub omega2: Complex64,
    pub eta: Complex64,
    /// `|ω₁ − z·h₂(ω₂)|`; the second equation holds by construction.
    pub residual: f64,
    pub iterations: usize,
    /// Residuals of the last few iterates, oldest first.
    pub history: Vec<f64>,
}

impl SubordinationResult {
    pub fn psi(&self) -> Complex64 {
        self.eta / (1.0 - self.eta)
    }

    /// `(2 Re ψ + 1) = (1 − |η|²)/|1 − η|²`, the Poisson integral of `μ`.
    pub fn poisson(&self) -> f64 {
        (1.0 - self.eta.norm_sqr()) / (1.0 - self.eta).norm_sqr()
    }
}

struct MapValue {
    w: Complex64,
    omega2: Complex64,
    image: Complex64,
    derivative: Complex64,
    residual: f64,
}

fn evaluate<H1, H2>(h1: &H1, h2: &H2, z: Complex64, w: Complex64) -> MapValue
where
    H1: Transform + ?Sized,
    H2: Transform + ?Sized,
{
    let (h1w, dh1w) = h1.h_with_derivative(w);
    let omega2 = z * h1w;
    let (h2v, dh2v) = h2.h_with_derivative(omega2);
    let image = z * h2v;
    MapValue {
        w,
        omega2,
        image,
        derivative: z * z * dh2v * dh1w,
        residual: (w - image).norm(),
    }
}

/// Solves the subordination system at `z`, starting from `ω₁ = 0`.
pub fn solve_at<H1, H2>(
    h1: &H1,
    h2: &H2,
    z: Complex64,
    config: &SolverConfig,
) -> Result<SubordinationResult, SubordinationError>
where
    H1: Transform + ?Sized,
    H2: Transform + ?Sized,
{
    solve_from(h1, h2, z, Complex64::new(0.0, 0.0), config)
}

/// Solves the subordination system at `z` starting from the guess `start`.
pub fn solve_from<H1, H2>(
    h1: &H1,
    h2: &H2,
    z: Complex64,
    start: Complex64,
    config: &SolverConfig,
) -> Result<SubordinationResult, SubordinationError>
where
    H1: Transform + ?Sized,
    H2: Transform + ?Sized,
{
    if !(z.norm() < 1.0) {
        return Err(SubordinationError::OutsideDisk(z));
    }
    if !(config.tol > 0.0) {
        return Err(SubordinationError::BadTolerance(config.tol));
    }
    let radius = z.norm();
    let start = if start.norm() <= radius { start } else { start * (radius / start.norm()) };

    let mut current = evaluate(h1, h2, z, start);
    let mut history = Vec::with_capacity(HISTORY_LEN + 1);
    let mut iterations = 0;
    history.push(current.residual);

    while current.residual >= config.tol {
        if iterations >= config.max_iterations {
            return Err(SubordinationError::MaxIterations {
                best: Box::new(finish(z, current, iterations, history)),
            });
        }
        iterations += 1;

        let mut next = None;
        if config.newton {
            let slope = 1.0 - current.derivative;
            if slope.norm() > 0.0 {
                let candidate = current.w - (current.w - current.image) / slope;
                if candidate.is_finite() && candidate.norm() <= radius {
                    let value = evaluate(h1, h2, z, candidate);
                    if value.residual < current.residual {
                        next = Some(value);
                    }
                }
            }
        }
        current = match next {
            Some(v) => v,
            None => evaluate(h1, h2, z, current.image),
        };

        if history.len() == HISTORY_LEN {
            history.remove(0);
        }
        history.push(current.residual);
    }
    Ok(finish(z, current, iterations, history))
}

fn finish(z: Complex64, v: MapValue, iterations: usize, history: Vec<f64>) -> SubordinationResult {
    let eta = if z == Complex64::new(0.0, 0.0) {
        Complex64::new(0.0, 0.0)
    } else {
        v.w * v.omega2 / z
    };
    SubordinationResult {
        z,
        omega1: v.w,
        omega2: v.omega2,
        eta,
        residual: v.residual,
        iterations,
        history,
    }
}

/// Solves along `z = r·e^{iθ}` for each radius of the schedule, warm-starting
/// every point from the previous `ω₁`. Failures are reported per point and
/// the ray continues from the best iterate.
pub fn solve_ray<H1, H2>(
    h1: &H1,
    h2: &H2,
    direction: UnitAngle,
    radii: &[f64],
    config: &SolverConfig,
) -> Vec<Result<SubordinationResult, SubordinationError>>
where
    H1: Transform + ?Sized,
    H2: Transform + ?Sized,
{
    let mut start = Complex64::new(0.0, 0.0);
    radii
        .iter()
        .map(|&r| {
            let z = Complex64::from_polar(r, direction.radians());
            let out = solve_from(h1, h2, z, start, config);
            match &out {
                Ok(res) => start = res.omega1,
                Err(SubordinationError::MaxIterations { best }) => start = best.omega1,
                Err(_) => {}
            }
            out
        })
        .collect()
}

/// [`solve_ray`] over a [`RadialSchedule`].
pub fn solve_schedule<H1, H2>(
    h1: &H1,
    h2: &H2,
    direction: UnitAngle,
    schedule: &RadialSchedule,
    config: &SolverConfig,
) -> Vec<Result<SubordinationResult, SubordinationError>>
where
    H1: Transform + ?Sized,
    H2: Transform + ?Sized,
{
    solve_ray(h1, h2, direction, schedule.radii(), config)
}
