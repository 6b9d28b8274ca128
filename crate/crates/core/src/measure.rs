//! Probability measures on the unit circle: atoms plus an absolutely
//! continuous part, with exact or cell-exact moments.
//!
//! Angles are radians in `[0, 2π)`. Absolutely continuous densities are
//! stored against `dθ`, so Haar measure has density `1/(2π)`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Two atoms closer than this (in radians, circularly) are the same point.
pub const ANGLE_TOL: f64 = 1e-12;

/// Allowed deviation of the total mass from one.
pub const MASS_TOL: f64 = 1e-9;

/// Default number of cells for densities given on a grid.
pub const DEFAULT_GRID: usize = 256;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("total mass {total} differs from 1")]
    NonProbability { total: f64 },
    #[error("negative density value {value} at grid index {index}")]
    NegativeDensity { index: usize, value: f64 },
    #[error("duplicate atom at angle {angle}")]
    DuplicateAtom { angle: f64 },
    #[error("atom mass {0} must lie in (0, 1]")]
    BadAtomMass(f64),
    #[error("invalid absolutely continuous part: {0}")]
    BadAcPart(String),
}

/// A point `e^{iθ}` of the unit circle, stored by its angle in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitAngle(f64);

impl UnitAngle {
    pub const ZERO: UnitAngle = UnitAngle(0.0);

    /// Reduces `theta` modulo 2π.
    pub fn new(theta: f64) -> Self {
        let mut t = theta.rem_euclid(TAU);
        if t >= TAU {
            t = 0.0;
        }
        UnitAngle(t)
    }

    pub fn from_pi_multiple(x: f64) -> Self {
        // Reduce in units of π first so that e.g. 2.0 maps to exactly zero.
        UnitAngle::new(x.rem_euclid(2.0) * PI)
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// `e^{iθ}`, exact at multiples of π/2.
    pub fn point(self) -> Complex64 {
        match self.0 {
            t if t == 0.0 => Complex64::new(1.0, 0.0),
            t if t == FRAC_PI_2 => Complex64::new(0.0, 1.0),
            t if t == PI => Complex64::new(-1.0, 0.0),
            t if t == 1.5 * PI => Complex64::new(0.0, -1.0),
            t => Complex64::from_polar(1.0, t),
        }
    }

    /// Angle of the complex conjugate point `e^{-iθ}`.
    pub fn conj(self) -> Self {
        UnitAngle::new(-self.0)
    }

    pub fn add(self, other: UnitAngle) -> Self {
        UnitAngle::new(self.0 + other.0)
    }

    /// Circular distance in `[0, π]`.
    pub fn distance(self, other: UnitAngle) -> f64 {
        let d = (self.0 - other.0).abs();
        d.min(TAU - d)
    }

    pub fn approx_eq(self, other: UnitAngle) -> bool {
        self.distance(other) < ANGLE_TOL
    }
}

impl fmt::Display for UnitAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}π", self.0 / PI)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub angle: UnitAngle,
    pub mass: f64,
}

impl Atom {
    pub fn new(angle: UnitAngle, mass: f64) -> Self {
        Atom { angle, mass }
    }
}

/// Density sampled at the uniform angles `2πk/n`, `k = 0..n`.
///
/// Each value is the constant density on the cell of width `2π/n` centred
/// at its angle. With this reading the periodic trapezoid rule is exact for
/// the total mass, and the Cauchy-type integrals below are exact per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub values: Vec<f64>,
}

impl DensityGrid {
    pub fn new(values: Vec<f64>) -> Self {
        DensityGrid { values }
    }

    /// Samples `f` at `n` uniform angles.
    pub fn sample(n: usize, f: impl Fn(f64) -> f64) -> Self {
        let step = TAU / n as f64;
        DensityGrid {
            values: (0..n).map(|k| f(k as f64 * step)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn step(&self) -> f64 {
        TAU / self.values.len() as f64
    }

    pub fn angle(&self, k: usize) -> f64 {
        k as f64 * self.step()
    }

    pub fn mass(&self) -> f64 {
        self.step() * self.values.iter().sum::<f64>()
    }

    pub fn moment(&self, n: u32) -> Complex64 {
        let step = self.step();
        let nf = n as f64;
        // ∫ over a cell of e^{inθ} dθ = e^{inθ_k} · 2 sin(nΔ/2)/n
        let weight = 2.0 * (nf * step / 2.0).sin() / nf;
        let sum: Complex64 = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| v * Complex64::from_polar(1.0, nf * self.angle(k)))
            .sum();
        sum * weight
    }
}

/// Absolutely continuous part of a [`CircleMeasure`], density w.r.t. `dθ`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AcPart {
    #[default]
    None,
    /// Normalized arclength, density `1/(2π)`.
    Haar,
    /// Constant density `mass/length` on `[start, start + length]`.
    UniformArc {
        start: UnitAngle,
        length: f64,
        mass: f64,
    },
    Grid(DensityGrid),
}

impl AcPart {
    pub fn mass(&self) -> f64 {
        match self {
            AcPart::None => 0.0,
            AcPart::Haar => 1.0,
            AcPart::UniformArc { mass, .. } => *mass,
            AcPart::Grid(g) => g.mass(),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, AcPart::None)
    }

    pub fn moment(&self, n: u32) -> Complex64 {
        match self {
            AcPart::None | AcPart::Haar => Complex64::new(0.0, 0.0),
            AcPart::UniformArc {
                start,
                length,
                mass,
            } => {
                let nf = n as f64;
                let a = start.radians();
                // (mass/L) ∫_a^{a+L} e^{inθ} dθ
                let diff = Complex64::from_polar(1.0, nf * (a + length))
                    - Complex64::from_polar(1.0, nf * a);
                diff * (mass / length) / Complex64::new(0.0, nf)
            }
            AcPart::Grid(g) => g.moment(n),
        }
    }

    /// Density at angle `theta` (radians).
    pub fn density_at(&self, theta: f64) -> f64 {
        match self {
            AcPart::None => 0.0,
            AcPart::Haar => 1.0 / TAU,
            AcPart::UniformArc {
                start,
                length,
                mass,
            } => {
                let offset = (theta - start.radians()).rem_euclid(TAU);
                if offset <= *length {
                    mass / length
                } else {
                    0.0
                }
            }
            AcPart::Grid(g) => {
                let step = g.step();
                let k = ((theta.rem_euclid(TAU) / step).round() as usize) % g.len();
                g.values[k]
            }
        }
    }

    fn rotated(&self, by: UnitAngle) -> Result<AcPart, MeasureError> {
        Ok(match self {
            AcPart::None => AcPart::None,
            AcPart::Haar => AcPart::Haar,
            AcPart::UniformArc {
                start,
                length,
                mass,
            } => AcPart::UniformArc {
                start: start.add(by),
                length: *length,
                mass: *mass,
            },
            AcPart::Grid(g) => {
                let shift = by.radians() / g.step();
                let k = shift.round();
                if (shift - k).abs() > 1e-9 {
                    return Err(MeasureError::BadAcPart(
                        "grid densities rotate only by multiples of the grid step".into(),
                    ));
                }
                let n = g.len();
                let k = k as usize % n;
                let mut values = vec![0.0; n];
                for (j, v) in g.values.iter().enumerate() {
                    values[(j + k) % n] = *v;
                }
                AcPart::Grid(DensityGrid::new(values))
            }
        })
    }
}

/// A Borel probability measure on the circle made of atoms and an
/// absolutely continuous part. Construct through [`CircleMeasure::new`] or
/// [`validate`] to get a checked value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleMeasure {
    pub atoms: Vec<Atom>,
    #[serde(default)]
    pub ac: AcPart,
}

impl CircleMeasure {
    pub fn new(atoms: Vec<Atom>, ac: AcPart) -> Result<Self, MeasureError> {
        validate(CircleMeasure { atoms, ac })
    }

    pub fn point_mass(angle: UnitAngle) -> Self {
        CircleMeasure {
            atoms: vec![Atom::new(angle, 1.0)],
            ac: AcPart::None,
        }
    }

    pub fn haar() -> Self {
        CircleMeasure {
            atoms: Vec::new(),
            ac: AcPart::Haar,
        }
    }

    /// `p·δ_1 + (1−p)·δ_{−1}`.
    pub fn bernoulli(p: f64) -> Result<Self, MeasureError> {
        let mut atoms = Vec::new();
        if p > 0.0 {
            atoms.push(Atom::new(UnitAngle::ZERO, p));
        }
        if p < 1.0 {
            atoms.push(Atom::new(UnitAngle::new(PI), 1.0 - p));
        }
        CircleMeasure::new(atoms, AcPart::None)
    }

    /// Atoms given as `(angle / π, mass)` pairs.
    pub fn atomic(points: &[(f64, f64)]) -> Result<Self, MeasureError> {
        let atoms = points
            .iter()
            .map(|&(a, m)| Atom::new(UnitAngle::from_pi_multiple(a), m))
            .collect();
        CircleMeasure::new(atoms, AcPart::None)
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum::<f64>() + self.ac.mass()
    }

    /// Number of support points, `None` when the support is infinite.
    pub fn support_size(&self) -> Option<usize> {
        if self.ac.is_none() {
            Some(self.atoms.len())
        } else {
            None
        }
    }

    pub fn atom_mass_at(&self, angle: UnitAngle) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.angle.approx_eq(angle))
            .map(|a| a.mass)
            .sum()
    }

    pub fn first_moment(&self) -> Complex64 {
        moment(self, 1)
    }

    /// Image under `t ↦ e^{iγ}t`.
    pub fn rotated(&self, by: UnitAngle) -> Result<Self, MeasureError> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom::new(a.angle.add(by), a.mass))
            .collect();
        validate(CircleMeasure {
            atoms,
            ac: self.ac.rotated(by)?,
        })
    }
}

/// Checks every invariant and returns the measure with atoms sorted by angle.
pub fn validate(mut m: CircleMeasure) -> Result<CircleMeasure, MeasureError> {
    for atom in &m.atoms {
        if !(atom.mass > 0.0 && atom.mass <= 1.0 + MASS_TOL) {
            return Err(MeasureError::BadAtomMass(atom.mass));
        }
    }
    match &m.ac {
        AcPart::None | AcPart::Haar => {}
        AcPart::UniformArc { length, mass, .. } => {
            if !(*length > 0.0 && *length <= TAU + 1e-12) {
                return Err(MeasureError::BadAcPart(format!("arc length {length}")));
            }
            if !(*mass >= 0.0) {
                return Err(MeasureError::BadAcPart(format!("arc mass {mass}")));
            }
        }
        AcPart::Grid(g) => {
            if g.len() < 2 {
                return Err(MeasureError::BadAcPart("grid needs at least two cells".into()));
            }
            if let Some((index, &value)) = g
                .values
                .iter()
                .enumerate()
                .find(|(_, v)| !(**v >= 0.0) || !v.is_finite())
            {
                return Err(MeasureError::NegativeDensity { index, value });
            }
        }
    }
    m.atoms
        .sort_by(|a, b| a.angle.radians().total_cmp(&b.angle.radians()));
    for (i, a) in m.atoms.iter().enumerate() {
        if m.atoms[i + 1..].iter().any(|b| a.angle.approx_eq(b.angle)) {
            return Err(MeasureError::DuplicateAtom {
                angle: a.angle.radians(),
            });
        }
    }
    let total = m.total_mass();
    if (total - 1.0).abs() > MASS_TOL {
        return Err(MeasureError::NonProbability { total });
    }
    Ok(m)
}

/// `m_n(μ) = ∫ t^n dμ(t)` for `n ≥ 1`.
pub fn moment(m: &CircleMeasure, n: u32) -> Complex64 {
    let atoms: Complex64 = m
        .atoms
        .iter()
        .map(|a| a.mass * a.angle.point().powu(n))
        .sum();
    atoms + m.ac.moment(n)
}

/// True iff the measure is a single unit atom.
pub fn is_point_mass(m: &CircleMeasure) -> bool {
    m.ac.mass() <= MASS_TOL && m.atoms.len() == 1 && (m.atoms[0].mass - 1.0).abs() <= MASS_TOL
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn validate_examples() {
        assert!(CircleMeasure::new(vec![Atom::new(UnitAngle::ZERO, 1.0)], AcPart::None).is_ok());
        assert!(matches!(
            CircleMeasure::new(vec![Atom::new(UnitAngle::ZERO, 0.5)], AcPart::None),
            Err(MeasureError::NonProbability { .. })
        ));
        assert!(CircleMeasure::new(vec![], AcPart::Haar).is_ok());
    }

    #[test]
    fn validate_rejects_duplicates_and_negative_density() {
        let dup = CircleMeasure::new(
            vec![
                Atom::new(UnitAngle::new(1.0), 0.5),
                Atom::new(UnitAngle::new(1.0 + TAU), 0.5),
            ],
            AcPart::None,
        );
        assert!(matches!(dup, Err(MeasureError::DuplicateAtom { .. })));

        let mut values = vec![1.0 / TAU; 256];
        values[3] = -0.1;
        let neg = CircleMeasure::new(vec![], AcPart::Grid(DensityGrid::new(values)));
        assert!(matches!(
            neg,
            Err(MeasureError::NegativeDensity { index: 3, .. })
        ));
    }

    #[test]
    fn validate_sorts_atoms() {
        let m = CircleMeasure::atomic(&[(1.5, 0.2), (0.5, 0.3), (0.0, 0.5)]).unwrap();
        let angles: Vec<f64> = m.atoms.iter().map(|a| a.angle.radians()).collect();
        assert!(angles.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn moment_examples() {
        assert_abs_diff_eq!(moment(&CircleMeasure::haar(), 1).norm(), 0.0);
        let delta = CircleMeasure::point_mass(UnitAngle::ZERO);
        assert_abs_diff_eq!(moment(&delta, 7).re, 1.0);
        let b = CircleMeasure::bernoulli(0.5).unwrap();
        assert_abs_diff_eq!(moment(&b, 1).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(moment(&b, 2).re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn is_point_mass_examples() {
        assert!(is_point_mass(&CircleMeasure::point_mass(
            UnitAngle::from_pi_multiple(1.0 / 3.0)
        )));
        assert!(!is_point_mass(&CircleMeasure::bernoulli(0.5).unwrap()));
        assert!(!is_point_mass(&CircleMeasure::haar()));
    }

    #[test]
    fn full_arc_moments_vanish() {
        let arc = CircleMeasure::new(
            vec![],
            AcPart::UniformArc {
                start: UnitAngle::new(0.3),
                length: TAU,
                mass: 1.0,
            },
        )
        .unwrap();
        for n in 1..=10 {
            assert!(moment(&arc, n).norm() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn grid_moments_match_fine_quadrature() {
        let g = DensityGrid::sample(256, |t| (1.0 + 0.5 * t.cos()) / TAU);
        let m = CircleMeasure::new(vec![], AcPart::Grid(g)).unwrap();
        // exact: m_1 = 0.25 for the smooth density; cells add O(Δ²)
        assert_abs_diff_eq!(moment(&m, 1).re, 0.25, epsilon = 1e-4);
        assert_abs_diff_eq!(moment(&m, 1).im, 0.0, epsilon = 1e-12);
        assert!(moment(&m, 2).norm() < 1e-12);
    }

    #[test]
    fn angle_reduction() {
        assert_eq!(UnitAngle::from_pi_multiple(2.0).radians(), 0.0);
        assert_abs_diff_eq!(UnitAngle::new(-0.5).radians(), TAU - 0.5);
        assert_abs_diff_eq!(
            UnitAngle::new(0.1).distance(UnitAngle::new(TAU - 0.1)),
            0.2,
            epsilon = 1e-15
        );
    }
}
