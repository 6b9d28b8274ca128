//! Moment generating function `ψ(z) = ∫ tz/(1−tz) dμ(t)` and its relatives
//! `η = ψ/(1+ψ)` and `h = η/z`, plus recovery of boundary data (density and
//! atom masses) from radial limits.
//!
//! Orientation: `ψ` blows up at `z = e^{−iθ}` when `μ` has an atom at
//! `e^{iθ}`, so the density at the boundary point `e^{iφ}` is read off from
//! `ψ` along the ray `r·e^{−iφ}`:
//!
//! ```text
//! density(φ) = lim_{r↑1} (2 Re ψ(r e^{−iφ}) + 1) / 2π
//! mass({e^{iφ}}) = lim_{r↑1} (1 − r) ψ(r e^{−iφ})
//! ```

use std::f64::consts::TAU;

use num_complex::Complex64;
use thiserror::Error;

use crate::measure::{moment, AcPart, CircleMeasure, DensityGrid, UnitAngle};

/// Below this modulus the AC contributions to `ψ(w)/w` and its derivative are
/// summed from moments instead of divided out.
const SMALL_W: f64 = 0.25;
const SMALL_W_TERMS: u32 = 48;

/// Density estimates above this, still growing along the tail, are divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6 / TAU;

/// Relative agreement required between consecutive extrapolants.
pub const EXTRAPOLATION_RTOL: f64 = 1e-8;

/// Consecutive atom-mass extrapolants further apart than this are rejected.
pub const ATOM_MASS_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HerglotzError {
    #[error("point {0} is not inside the unit disk")]
    EvaluationOutsideDisk(Complex64),
    #[error("radial schedule invalid: {0}")]
    BadSchedule(String),
    #[error("radial limit at angle {angle} does not settle (last two estimates {a} and {b})")]
    NonConvergent { angle: f64, a: f64, b: f64 },
    #[error("density diverges at angle {angle} (estimate {estimate:.3e})")]
    DivergentDensity { angle: f64, estimate: f64 },
    #[error("transform evaluation failed: {0}")]
    Evaluation(String),
}

/// A point of the open unit disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskPoint(Complex64);

impl DiskPoint {
    pub fn new(z: Complex64) -> Result<Self, HerglotzError> {
        if z.norm() < 1.0 && z.is_finite() {
            Ok(DiskPoint(z))
        } else {
            Err(HerglotzError::EvaluationOutsideDisk(z))
        }
    }

    pub fn polar(r: f64, direction: UnitAngle) -> Result<Self, HerglotzError> {
        DiskPoint::new(Complex64::from_polar(r, direction.radians()))
    }

    pub fn value(self) -> Complex64 {
        self.0
    }
}

/// Increasing radii in `(0, 1)` along which radial limits are estimated.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSchedule {
    radii: Vec<f64>,
}

impl RadialSchedule {
    pub fn new(radii: Vec<f64>) -> Result<Self, HerglotzError> {
        if radii.len() < 4 {
            return Err(HerglotzError::BadSchedule(
                "need at least four radii for tail extrapolation".into(),
            ));
        }
        if radii.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
            return Err(HerglotzError::BadSchedule("radii must lie in (0, 1)".into()));
        }
        if radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HerglotzError::BadSchedule(
                "radii must be strictly increasing".into(),
            ));
        }
        Ok(RadialSchedule { radii })
    }

    /// Radii `1 − 2^{−k}` for `k = k_min..=k_max`.
    pub fn dyadic(k_min: u32, k_max: u32) -> Result<Self, HerglotzError> {
        RadialSchedule::new((k_min..=k_max).map(|k| 1.0 - 0.5f64.powi(k as i32)).collect())
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn last(&self) -> f64 {
        *self.radii.last().expect("schedule is never empty")
    }
}

impl Default for RadialSchedule {
    fn default() -> Self {
        RadialSchedule::dyadic(10, 24).expect("static schedule")
    }
}

/// Evaluation of `φ(w) = ψ(w)/w = ∫ t/(1−tw) dμ(t)`, the building block of
/// every transform here. `φ(0) = m₁`, so `h = φ/(1+wφ)` needs no division
/// by `w`.
pub trait Transform {
    fn phi(&self, w: Complex64) -> Complex64;

    /// `(φ(w), φ'(w))`.
    fn phi_with_derivative(&self, w: Complex64) -> (Complex64, Complex64);

    fn psi_value(&self, w: Complex64) -> Complex64 {
        w * self.phi(w)
    }

    fn h_value(&self, w: Complex64) -> Complex64 {
        let phi = self.phi(w);
        phi / (1.0 + w * phi)
    }

    /// `(h(w), h'(w))` with `h' = (φ' − φ²)/(1 + wφ)²`.
    fn h_with_derivative(&self, w: Complex64) -> (Complex64, Complex64) {
        let (phi, dphi) = self.phi_with_derivative(w);
        let denom = 1.0 + w * phi;
        (phi / denom, (dphi - phi * phi) / (denom * denom))
    }
}

impl Transform for CircleMeasure {
    fn phi(&self, w: Complex64) -> Complex64 {
        let atoms: Complex64 = self
            .atoms
            .iter()
            .map(|a| {
                let t = a.angle.point();
                a.mass * t / (1.0 - t * w)
            })
            .sum();
        atoms + ac_phi(self, w)
    }

    fn phi_with_derivative(&self, w: Complex64) -> (Complex64, Complex64) {
        let mut phi = Complex64::new(0.0, 0.0);
        let mut dphi = Complex64::new(0.0, 0.0);
        for a in &self.atoms {
            let t = a.angle.point();
            let q = t / (1.0 - t * w);
            phi += a.mass * q;
            dphi += a.mass * q * q;
        }
        let (p, d) = ac_phi_with_derivative(self, w);
        (phi + p, dphi + d)
    }
}

fn ac_phi(m: &CircleMeasure, w: Complex64) -> Complex64 {
    match &m.ac {
        AcPart::None | AcPart::Haar => Complex64::new(0.0, 0.0),
        ac if w.norm() < SMALL_W => {
            (0..SMALL_W_TERMS).rev().fold(Complex64::new(0.0, 0.0), |acc, n| {
                acc * w + ac.moment(n + 1)
            })
        }
        ac => ac_psi(ac, w) / w,
    }
}

fn ac_phi_with_derivative(m: &CircleMeasure, w: Complex64) -> (Complex64, Complex64) {
    match &m.ac {
        AcPart::None | AcPart::Haar => (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
        ac if w.norm() < SMALL_W => {
            let mut phi = Complex64::new(0.0, 0.0);
            let mut dphi = Complex64::new(0.0, 0.0);
            for n in (0..SMALL_W_TERMS).rev() {
                let c = ac.moment(n + 1);
                phi = phi * w + c;
                if n >= 1 {
                    dphi = dphi * w + c * n as f64;
                }
            }
            (phi, dphi)
        }
        ac => {
            let phi = ac_psi(ac, w) / w;
            // ∫ t²/(1−tw)² ρ dθ = (1/(i w²)) [1/(1−u) + log(1−u)], u = e^{iθ}w
            let dphi = ac_bracket(ac, w, |u| 1.0 / (1.0 - u) + (1.0 - u).ln())
                / (Complex64::i() * w * w);
            (phi, dphi)
        }
    }
}

/// ψ of the AC part: `∫ e^{iθ}w/(1−e^{iθ}w) ρ(θ) dθ = i [ρ log(1 − e^{iθ}w)]`.
fn ac_psi(ac: &AcPart, w: Complex64) -> Complex64 {
    Complex64::i() * ac_bracket(ac, w, |u| (1.0 - u).ln())
}

/// `Σ_cells ρ · [F(e^{iθ}w)]_{cell}` for a piecewise-constant density.
/// `Re(1 − u) > 0` on the disk, so the principal logarithm is continuous
/// along every cell.
fn ac_bracket(ac: &AcPart, w: Complex64, f: impl Fn(Complex64) -> Complex64) -> Complex64 {
    let at = |theta: f64| f(Complex64::from_polar(1.0, theta) * w);
    match ac {
        AcPart::None | AcPart::Haar => Complex64::new(0.0, 0.0),
        AcPart::UniformArc {
            start,
            length,
            mass,
        } => {
            let a = start.radians();
            if *length >= TAU - 1e-15 {
                return Complex64::new(0.0, 0.0);
            }
            (at(a + length) - at(a)) * (mass / length)
        }
        AcPart::Grid(g) => grid_bracket(g, at),
    }
}

fn grid_bracket(g: &DensityGrid, at: impl Fn(f64) -> Complex64) -> Complex64 {
    // Summation by parts: cell k spans [e_{k−1}, e_k] with e_k = θ_k + Δ/2.
    let n = g.len();
    let half = g.step() / 2.0;
    (0..n)
        .map(|k| {
            let jump = g.values[k] - g.values[(k + 1) % n];
            if jump == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                jump * at(g.angle(k) + half)
            }
        })
        .sum()
}

/// `ψ_μ(z)`.
pub fn psi(m: &CircleMeasure, z: Complex64) -> Result<Complex64, HerglotzError> {
    let z = DiskPoint::new(z)?.value();
    Ok(m.psi_value(z))
}

/// `η_μ(z) = ψ/(1+ψ)`.
pub fn eta(m: &CircleMeasure, z: Complex64) -> Result<Complex64, HerglotzError> {
    let z = DiskPoint::new(z)?.value();
    let phi = m.phi(z);
    Ok(z * phi / (1.0 + z * phi))
}

/// `h_μ(z) = η_μ(z)/z`, with `h(0) = m₁(μ)`.
pub fn h(m: &CircleMeasure, z: Complex64) -> Result<Complex64, HerglotzError> {
    let z = DiskPoint::new(z)?.value();
    if z == Complex64::new(0.0, 0.0) {
        return Ok(moment(m, 1));
    }
    Ok(m.h_value(z))
}

/// Source of `ψ` values along rays into the disk.
pub trait PsiEvaluator {
    fn psi_at(&self, z: Complex64) -> Result<Complex64, HerglotzError>;

    /// `ψ(r·e^{iθ})` for each radius, in order.
    fn psi_along_ray(
        &self,
        direction: UnitAngle,
        radii: &[f64],
    ) -> Result<Vec<Complex64>, HerglotzError> {
        radii
            .iter()
            .map(|&r| self.psi_at(Complex64::from_polar(r, direction.radians())))
            .collect()
    }
}

impl PsiEvaluator for CircleMeasure {
    fn psi_at(&self, z: Complex64) -> Result<Complex64, HerglotzError> {
        psi(self, z)
    }
}

/// Result of a tail extrapolation over a radial schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    pub value: f64,
    /// Extrapolant from the schedule with its last radius dropped.
    pub previous: f64,
    /// Raw (unextrapolated) value at the last radius.
    pub last_sample: f64,
    pub converged: bool,
    /// Raw samples strictly increase over the last four radii.
    pub growing: bool,
}

/// Polynomial (Neville) extrapolation to `ε = 0` through three points.
fn neville3(eps: [f64; 3], vals: [f64; 3]) -> f64 {
    let [e0, e1, e2] = eps;
    let [v0, v1, v2] = vals;
    // Lagrange weights at ε = 0.
    let l0 = e1 * e2 / ((e0 - e1) * (e0 - e2));
    let l1 = e0 * e2 / ((e1 - e0) * (e1 - e2));
    let l2 = e0 * e1 / ((e2 - e0) * (e2 - e1));
    l0 * v0 + l1 * v1 + l2 * v2
}

/// Extrapolates samples `vals[k]` taken at radii `radii[k]` to `r = 1`,
/// assuming a smooth expansion in `ε = 1 − r`. Convergence compares the
/// extrapolants built on the last three and the three before them.
pub fn extrapolate_tail(radii: &[f64], vals: &[f64], scale: f64) -> TailEstimate {
    assert!(radii.len() == vals.len() && radii.len() >= 4);
    let n = radii.len();
    let eps = |k: usize| 1.0 - radii[k];
    let value = neville3(
        [eps(n - 3), eps(n - 2), eps(n - 1)],
        [vals[n - 3], vals[n - 2], vals[n - 1]],
    );
    let previous = neville3(
        [eps(n - 4), eps(n - 3), eps(n - 2)],
        [vals[n - 4], vals[n - 3], vals[n - 2]],
    );
    let converged = value.is_finite()
        && (value - previous).abs() <= EXTRAPOLATION_RTOL * value.abs().max(scale);
    let growing = vals[n - 4..].windows(2).all(|w| w[1] > w[0]);
    TailEstimate {
        value,
        previous,
        last_sample: vals[n - 1],
        converged,
        growing,
    }
}

/// Boundary density estimate at one angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityEstimate {
    /// Extrapolated density, clamped at zero.
    pub value: f64,
    pub converged: bool,
    pub tail: TailEstimate,
}

/// Density from `Re ψ` samples along the ray toward `e^{−iφ}`.
pub fn density_from_psi_samples(
    theta: UnitAngle,
    radii: &[f64],
    psi: &[Complex64],
) -> Result<DensityEstimate, HerglotzError> {
    let samples: Vec<f64> = psi.iter().map(|p| (2.0 * p.re + 1.0) / TAU).collect();
    density_from_samples(theta, radii, &samples)
}

/// Same as [`density_from_psi_samples`] with the samples
/// `(2 Re ψ + 1)/2π` already formed.
pub fn density_from_samples(
    theta: UnitAngle,
    radii: &[f64],
    samples: &[f64],
) -> Result<DensityEstimate, HerglotzError> {
    let tail = extrapolate_tail(radii, samples, 1.0 / TAU);
    if tail.growing && (tail.last_sample > DIVERGENCE_THRESHOLD || pole_like(radii, samples)) {
        return Err(HerglotzError::DivergentDensity {
            angle: theta.radians(),
            estimate: tail.last_sample,
        });
    }
    Ok(DensityEstimate {
        value: tail.value.max(0.0),
        converged: tail.converged,
        tail,
    })
}

/// Samples above `POLE_FLOOR` growing like `1/(1 − r)` over the last step.
/// An atom of mass `m` gives `≈ 2m/(2π(1 − r))`, which can stay below
/// [`DIVERGENCE_THRESHOLD`] on short schedules.
fn pole_like(radii: &[f64], samples: &[f64]) -> bool {
    let n = samples.len();
    let (a, b) = (samples[n - 2], samples[n - 1]);
    if b < POLE_FLOOR || a <= 0.0 {
        return false;
    }
    let order = (b / a).ln() / ((1.0 - radii[n - 2]) / (1.0 - radii[n - 1])).ln();
    order > POLE_ORDER
}

const POLE_FLOOR: f64 = 1e3 / TAU;
const POLE_ORDER: f64 = 0.9;

/// Atom mass from `(1 − r) ψ` samples along the ray toward `e^{−iα}`.
pub fn atom_mass_from_psi_samples(
    alpha: UnitAngle,
    radii: &[f64],
    psi: &[Complex64],
) -> Result<f64, HerglotzError> {
    let samples: Vec<f64> = radii
        .iter()
        .zip(psi)
        .map(|(r, p)| (1.0 - r) * p.re)
        .collect();
    let tail = extrapolate_tail(radii, &samples, 1.0);
    if !tail.value.is_finite() || (tail.value - tail.previous).abs() > ATOM_MASS_TOL {
        return Err(HerglotzError::NonConvergent {
            angle: alpha.radians(),
            a: tail.previous,
            b: tail.value,
        });
    }
    Ok(tail.value.clamp(0.0, 1.0))
}

/// `lim_{r↑1} (1 − r) ψ(r e^{−iα})`, the mass the measure behind `ψ` puts
/// on the point `e^{iα}`.
pub fn radial_atom_mass<E: PsiEvaluator + ?Sized>(
    eval: &E,
    alpha: UnitAngle,
    schedule: &RadialSchedule,
) -> Result<f64, HerglotzError> {
    let psi = eval.psi_along_ray(alpha.conj(), schedule.radii())?;
    atom_mass_from_psi_samples(alpha, schedule.radii(), &psi)
}

/// `lim_{r↑1} (2 Re ψ(r e^{−iφ}) + 1)/2π`, the density at `e^{iφ}` with
/// respect to `dθ`.
pub fn poisson_density<E: PsiEvaluator + ?Sized>(
    eval: &E,
    theta: UnitAngle,
    schedule: &RadialSchedule,
) -> Result<DensityEstimate, HerglotzError> {
    let psi = eval.psi_along_ray(theta.conj(), schedule.radii())?;
    density_from_psi_samples(theta, schedule.radii(), &psi)
}
