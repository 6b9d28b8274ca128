//! Regularity of `μ₁ ⊠ μ₂` read off from the atoms of the factors.
//!
//! A pair of atoms `(α₁, α₂)` is critical when `μ₁({α₁}) + μ₂({α₂}) ≥ 1`.
//! Only products of critical pairs can carry atoms of the convolution or
//! points where its density is locally unbounded; an atom sits at the
//! product exactly when the sum exceeds one, with mass `sum − 1`. If the
//! largest pair sum is below one the density is bounded, at one the measure
//! is absolutely continuous, and in every case the singular part is atomic.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::convolution::{density_at, ConvolutionResult};
use crate::herglotz::RadialSchedule;
use crate::measure::{is_point_mass, Atom, CircleMeasure, UnitAngle};
use crate::subordination::{solve_schedule, SolverConfig, SubordinationError};

/// Pair sums within this of one count as equal to one.
pub const EQUALITY_TOL: f64 = 1e-9;

/// `|η − 1|` at the last radius below which a candidate is confirmed.
pub const SINGULAR_ETA_TOL: f64 = 1e-4;

/// Trailing radii over which `|η − 1|` must decrease.
const SINGULAR_MONOTONE_RADII: usize = 5;

/// Smallest arc mass accepted as strictly positive.
pub const POSITIVITY_FLOOR: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegularityError {
    #[error("input is a point mass; the convolution is a rotation of the other factor")]
    PointMassInput,
    #[error("hypothesis not met: {0}")]
    HypothesisNotMet(String),
    #[error("pair sum {0} is not an equality case")]
    NotEqualityPair(f64),
    #[error(transparent)]
    Solver(#[from] SubordinationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPair {
    pub alpha1: UnitAngle,
    pub alpha2: UnitAngle,
    pub mass_sum: f64,
    pub product_angle: UnitAngle,
}

impl CriticalPair {
    pub fn is_equality(&self) -> bool {
        (self.mass_sum - 1.0).abs() <= EQUALITY_TOL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    /// Largest pair sum below one: bounded density.
    BoundedDensity,
    /// Largest pair sum equal to one: no atoms, density possibly unbounded.
    AbsolutelyContinuous,
    /// Some pair sum above one.
    HasAtoms,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub critical_pairs: Vec<CriticalPair>,
    pub predicted_atoms: Vec<Atom>,
    pub singular_candidates: Vec<UnitAngle>,
    pub verdict: Verdict,
    pub max_pair_sum: f64,
    /// Always true: the singular part of the convolution is purely atomic.
    pub singular_continuous_part_zero: bool,
}

fn check_inputs(m1: &CircleMeasure, m2: &CircleMeasure) -> Result<(), RegularityError> {
    if is_point_mass(m1) || is_point_mass(m2) {
        Err(RegularityError::PointMassInput)
    } else {
        Ok(())
    }
}

/// All atom pairs with mass sum at least one, sorted by product angle.
pub fn critical_pairs(
    m1: &CircleMeasure,
    m2: &CircleMeasure,
) -> Result<Vec<CriticalPair>, RegularityError> {
    check_inputs(m1, m2)?;
    let mut pairs: Vec<CriticalPair> = m1
        .atoms
        .iter()
        .flat_map(|a1| {
            m2.atoms.iter().filter_map(move |a2| {
                let sum = a1.mass + a2.mass;
                (sum >= 1.0 - EQUALITY_TOL).then(|| CriticalPair {
                    alpha1: a1.angle,
                    alpha2: a2.angle,
                    mass_sum: sum,
                    product_angle: a1.angle.add(a2.angle),
                })
            })
        })
        .collect();
    pairs.sort_by(|a, b| {
        a.product_angle
            .radians()
            .total_cmp(&b.product_angle.radians())
            .then(a.alpha1.radians().total_cmp(&b.alpha1.radians()))
    });
    Ok(pairs)
}

/// Atoms of `μ₁ ⊠ μ₂`: one at each product of a pair with sum above one.
pub fn predicted_atoms(
    m1: &CircleMeasure,
    m2: &CircleMeasure,
) -> Result<Vec<Atom>, RegularityError> {
    let mut atoms: Vec<Atom> = Vec::new();
    for pair in critical_pairs(m1, m2)? {
        if pair.mass_sum <= 1.0 + EQUALITY_TOL {
            continue;
        }
        // Two such pairs at one angle would need more than unit mass in a factor.
        debug_assert!(!atoms.iter().any(|a| a.angle.approx_eq(pair.product_angle)));
        atoms.push(Atom::new(pair.product_angle, pair.mass_sum - 1.0));
    }
    Ok(atoms)
}

fn max_atom(m: &CircleMeasure) -> f64 {
    m.atoms.iter().map(|a| a.mass).fold(0.0, f64::max)
}

pub fn classify(
    m1: &CircleMeasure,
    m2: &CircleMeasure,
) -> Result<RegularityReport, RegularityError> {
    let critical_pairs = critical_pairs(m1, m2)?;
    let predicted_atoms = predicted_atoms(m1, m2)?;
    let max_pair_sum = max_atom(m1) + max_atom(m2);
    let verdict = if max_pair_sum > 1.0 + EQUALITY_TOL {
        Verdict::HasAtoms
    } else if max_pair_sum >= 1.0 - EQUALITY_TOL {
        Verdict::AbsolutelyContinuous
    } else {
        Verdict::BoundedDensity
    };
    let mut singular_candidates: Vec<UnitAngle> = Vec::new();
    for p in &critical_pairs {
        if !singular_candidates.iter().any(|a| a.approx_eq(p.product_angle)) {
            singular_candidates.push(p.product_angle);
        }
    }
    Ok(RegularityReport {
        critical_pairs,
        predicted_atoms,
        singular_candidates,
        verdict,
        max_pair_sum,
        singular_continuous_part_zero: true,
    })
}

/// Outcome of the radial test of one singular candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CandidateStatus {
    /// `η → 1` along the ray.
    Confirmed,
    /// `|η − 1|` still decreasing but above tolerance at the last radius.
    Inconclusive,
    /// `|η − 1|` does not decrease toward zero.
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateCheck {
    pub angle: UnitAngle,
    pub status: CandidateStatus,
    /// `|η − 1|` at each radius of the schedule.
    pub distances: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularSet {
    pub checks: Vec<CandidateCheck>,
}

impl SingularSet {
    pub fn confirmed(&self) -> Vec<UnitAngle> {
        self.with_status(CandidateStatus::Confirmed)
    }

    pub fn inconclusive(&self) -> Vec<UnitAngle> {
        self.with_status(CandidateStatus::Inconclusive)
    }

    fn with_status(&self, status: CandidateStatus) -> Vec<UnitAngle> {
        self.checks
            .iter()
            .filter(|c| c.status == status)
            .map(|c| c.angle)
            .collect()
    }
}

/// Schedule used for singular-set confirmation. Equality-case points approach
/// `η = 1` like `(1 − r)^{1/2}`, so the radii go much closer to one than the
/// density schedule.
pub fn singular_schedule() -> RadialSchedule {
    RadialSchedule::dyadic(10, 40).expect("static schedule")
}

/// Tests which singular candidates satisfy `η_μ → 1` along the ray toward
/// the conjugate point. The result is a subset of the candidate products.
pub fn singular_set(
    m1: &CircleMeasure,
    m2: &CircleMeasure,
    schedule: &RadialSchedule,
    solver: &SolverConfig,
) -> Result<SingularSet, RegularityError> {
    let report = classify(m1, m2)?;
    let mut checks = Vec::with_capacity(report.singular_candidates.len());
    for &angle in &report.singular_candidates {
        let ray = solve_schedule(m1, m2, angle.conj(), schedule, solver);
        let distances = ray
            .into_iter()
            .map(|r| match r {
                Ok(res) => Ok((res.eta - Complex64::new(1.0, 0.0)).norm()),
                Err(SubordinationError::MaxIterations { best }) => {
                    Ok((best.eta - Complex64::new(1.0, 0.0)).norm())
                }
                Err(e) => Err(e),
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let n = distances.len();
        let tail = &distances[n.saturating_sub(SINGULAR_MONOTONE_RADII)..];
        let decreasing = tail.windows(2).all(|w| w[1] < w[0]);
        let status = match (decreasing, distances[n - 1] < SINGULAR_ETA_TOL) {
            (true, true) => CandidateStatus::Confirmed,
            (true, false) => CandidateStatus::Inconclusive,
            _ => CandidateStatus::Rejected,
        };
        checks.push(CandidateCheck {
            angle,
            status,
            distances,
        });
    }
    Ok(SingularSet { checks })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArcMass {
    /// Open arc from `start` counterclockwise to `end`.
    pub start: UnitAngle,
    pub end: UnitAngle,
    pub mass: f64,
    pub positive: bool,
}

/// Mass of each open arc between consecutive singular points, from the
/// density grid and the detected atoms of `result`.
pub fn arc_positivity(
    m1: &CircleMeasure,
    m2: &CircleMeasure,
    result: &ConvolutionResult,
    singular_points: &[UnitAngle],
) -> Result<Vec<ArcMass>, RegularityError> {
    check_inputs(m1, m2)?;
    let wide = |m: &CircleMeasure| m.support_size().is_none_or(|n| n > 2);
    if !wide(m1) && !wide(m2) {
        return Err(RegularityError::HypothesisNotMet(
            "neither factor has more than two support points".into(),
        ));
    }
    let mut points: Vec<UnitAngle> = singular_points.to_vec();
    points.sort_by(|a, b| a.radians().total_cmp(&b.radians()));
    points.dedup_by(|a, b| a.approx_eq(*b));
    if points.len() < 2 {
        return Err(RegularityError::HypothesisNotMet(format!(
            "need two singular points, have {}",
            points.len()
        )));
    }
    let arcs = (0..points.len())
        .map(|i| {
            let start = points[i];
            let end = points[(i + 1) % points.len()];
            let mass = result.arc_mass(start, end);
            ArcMass {
                start,
                end,
                mass,
                positive: mass > POSITIVITY_FLOOR,
            }
        })
        .collect();
    Ok(arcs)
}

/// Density estimates approaching the product point of an equality pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub product_angle: UnitAngle,
    /// Angular offsets from the product point, decreasing.
    pub offsets: Vec<f64>,
    /// Density at `product + offset`; `None` where the estimate diverged.
    pub densities: Vec<Option<f64>>,
    pub monotone: bool,
    /// Whether the estimates passed 10/2π, 100/2π and 1000/2π.
    pub exceeded: [bool; 3],
}

/// Purely diagnostic look at the density near an equality-case product.
pub fn equality_case_probe(
    m1: &CircleMeasure,
    m2: &CircleMeasure,
    pair: &CriticalPair,
    schedule: &RadialSchedule,
    solver: &SolverConfig,
) -> Result<GrowthReport, RegularityError> {
    if !pair.is_equality() {
        return Err(RegularityError::NotEqualityPair(pair.mass_sum));
    }
    check_inputs(m1, m2)?;
    let offsets: Vec<f64> = (2..=14).map(|j| 0.5f64.powi(j)).collect();
    let densities: Vec<Option<f64>> = offsets
        .iter()
        .map(|&d| {
            let theta = UnitAngle::new(pair.product_angle.radians() + d);
            density_at(m1, m2, theta, schedule, solver).ok().map(|e| e.value)
        })
        .collect();
    let as_value = |d: &Option<f64>| d.unwrap_or(f64::INFINITY);
    let monotone = densities.windows(2).all(|w| as_value(&w[1]) >= as_value(&w[0]));
    let peak = densities.iter().map(as_value).fold(0.0, f64::max);
    let exceeded = [10.0, 100.0, 1000.0].map(|t| peak > t / TAU);
    Ok(GrowthReport {
        product_angle: pair.product_angle,
        offsets,
        densities,
        monotone,
        exceeded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tri() -> CircleMeasure {
        CircleMeasure::atomic(&[(0.0, 0.4), (0.5, 0.3), (1.0, 0.3)]).unwrap()
    }

    #[test]
    fn critical_pair_examples() {
        let b5 = CircleMeasure::bernoulli(0.5).unwrap();
        let pairs = critical_pairs(&b5, &b5).unwrap();
        assert_eq!(pairs.len(), 4);
        assert!(pairs.iter().all(|p| p.mass_sum == 1.0));
        let products: Vec<f64> = pairs.iter().map(|p| p.product_angle.radians()).collect();
        assert_eq!(products, vec![0.0, 0.0, PI, PI]);

        assert!(critical_pairs(&tri(), &tri()).unwrap().is_empty());

        let b7 = CircleMeasure::bernoulli(0.7).unwrap();
        let pairs = critical_pairs(&b7, &b7).unwrap();
        assert_eq!(pairs.len(), 3);
        assert_eq!(pairs[0].product_angle, UnitAngle::ZERO);
        assert!((pairs[0].mass_sum - 1.4).abs() < 1e-15);
        assert!(pairs[1..].iter().all(|p| p.product_angle.radians() == PI && p.is_equality()));
    }

    #[test]
    fn point_mass_inputs_are_rejected() {
        let d = CircleMeasure::point_mass(UnitAngle::ZERO);
        let b = CircleMeasure::bernoulli(0.3).unwrap();
        assert_eq!(critical_pairs(&d, &b), Err(RegularityError::PointMassInput));
        assert_eq!(classify(&b, &d).unwrap_err(), RegularityError::PointMassInput);
    }

    #[test]
    fn predicted_atom_examples() {
        let b7 = CircleMeasure::bernoulli(0.7).unwrap();
        let atoms = predicted_atoms(&b7, &b7).unwrap();
        assert_eq!(atoms.len(), 1);
        assert_eq!(atoms[0].angle, UnitAngle::ZERO);
        assert!((atoms[0].mass - 0.4).abs() < 1e-15);

        let b5 = CircleMeasure::bernoulli(0.5).unwrap();
        assert!(predicted_atoms(&b5, &b5).unwrap().is_empty());

        let m = CircleMeasure::atomic(&[(0.0, 0.6), (0.5, 0.4)]).unwrap();
        let atoms = predicted_atoms(&m, &m).unwrap();
        assert_eq!(atoms.len(), 1);
        assert_eq!(atoms[0].angle, UnitAngle::ZERO);
        assert!((atoms[0].mass - 0.2).abs() < 1e-15);
    }

    #[test]
    fn classify_examples() {
        let r = classify(&tri(), &tri()).unwrap();
        assert_eq!(r.verdict, Verdict::BoundedDensity);
        assert!((r.max_pair_sum - 0.8).abs() < 1e-15);

        let b5 = CircleMeasure::bernoulli(0.5).unwrap();
        assert_eq!(classify(&b5, &b5).unwrap().verdict, Verdict::AbsolutelyContinuous);

        let b7 = CircleMeasure::bernoulli(0.7).unwrap();
        let r = classify(&b7, &b7).unwrap();
        assert_eq!(r.verdict, Verdict::HasAtoms);
        assert_eq!(r.singular_candidates, vec![UnitAngle::ZERO, UnitAngle::new(PI)]);
        assert!(r.singular_continuous_part_zero);
    }

    #[test]
    fn singular_set_examples() {
        let sched = singular_schedule();
        let solver = SolverConfig::default();
        let b5 = CircleMeasure::bernoulli(0.5).unwrap();
        assert!(singular_set(&b5, &b5, &sched, &solver).unwrap().confirmed().is_empty());

        let b7 = CircleMeasure::bernoulli(0.7).unwrap();
        let s = singular_set(&b7, &b7, &sched, &solver).unwrap();
        assert!(s.confirmed().contains(&UnitAngle::ZERO));

        let haar = CircleMeasure::haar();
        assert!(singular_set(&haar, &b7, &sched, &solver).unwrap().checks.is_empty());

        let m1 = CircleMeasure::atomic(&[(0.0, 0.6), (0.5, 0.2), (1.0, 0.2)]).unwrap();
        let m2 = CircleMeasure::bernoulli(0.6).unwrap();
        let s = singular_set(&m1, &m2, &sched, &solver).unwrap();
        assert_eq!(s.confirmed(), vec![UnitAngle::ZERO, UnitAngle::new(PI)]);
    }

    #[test]
    fn equality_probe_requires_equality_pair() {
        let b7 = CircleMeasure::bernoulli(0.7).unwrap();
        let pairs = critical_pairs(&b7, &b7).unwrap();
        let err = equality_case_probe(
            &b7,
            &b7,
            &pairs[0],
            &RadialSchedule::default(),
            &SolverConfig::default(),
        );
        assert!(matches!(err, Err(RegularityError::NotEqualityPair(_))));
    }

    #[test]
    fn equality_probe_on_haar_reports_no_growth() {
        let b5 = CircleMeasure::bernoulli(0.5).unwrap();
        let pair = critical_pairs(&b5, &b5).unwrap()[0];
        let report = equality_case_probe(
            &b5,
            &b5,
            &pair,
            &RadialSchedule::default(),
            &SolverConfig::default(),
        )
        .unwrap();
        assert_eq!(report.exceeded, [false; 3]);
        for d in report.densities {
            assert!((d.unwrap() - 1.0 / TAU).abs() < 1e-12);
        }
    }
}
