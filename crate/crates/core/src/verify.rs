//! The acceptance suite: each criterion runs an end-to-end computation and
//! reports pass or fail with a one-line detail.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::convolution::{convolve, density_at, ConvolutionConfig, ConvolutionResult};
use crate::herglotz::RadialSchedule;
use crate::measure::{AcPart, Atom, CircleMeasure, UnitAngle};
use crate::regularity::{
    arc_positivity, classify, critical_pairs, singular_schedule, singular_set, Verdict,
};
use crate::series::{boxtimes_moments, compare_moments};
use crate::subordination::{solve_schedule, SolverConfig};

/// Seed of the randomized oracle-agreement pairs when none is given.
pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Criterion {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {} ({:.2} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.seconds
        )
    }
}

fn timed(name: &'static str, run: impl FnOnce() -> Result<(bool, String), String>) -> Criterion {
    let start = Instant::now();
    let (passed, detail) = run().unwrap_or_else(|e| (false, format!("error: {e}")));
    Criterion {
        name,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn config(grid_size: usize) -> ConvolutionConfig {
    ConvolutionConfig {
        grid_size,
        ..ConvolutionConfig::default()
    }
}

fn run(m1: &CircleMeasure, m2: &CircleMeasure, grid: usize) -> Result<ConvolutionResult, String> {
    convolve(m1, m2, &config(grid)).map_err(|e| e.to_string())
}

fn measure(points: &[(f64, f64)]) -> CircleMeasure {
    CircleMeasure::atomic(points).expect("static test measure")
}

/// `0.4 δ_1 + 0.3 δ_i + 0.3 δ_{−1}`.
pub fn three_point() -> CircleMeasure {
    measure(&[(0.0, 0.4), (0.5, 0.3), (1.0, 0.3)])
}

/// `½-Bernoulli ⊠ ½-Bernoulli` is Haar: density `1/(2π)` everywhere, no
/// atoms, within 5 s at grid 1024.
pub fn haar_degeneration() -> Criterion {
    timed("haar degeneration", || {
        let start = Instant::now();
        let b = CircleMeasure::bernoulli(0.5).map_err(|e| e.to_string())?;
        let r = run(&b, &b, 1024)?;
        let seconds = start.elapsed().as_secs_f64();
        let err = r
            .grid
            .iter()
            .map(|p| p.density.map_or(f64::INFINITY, |d| (d - 1.0 / TAU).abs()))
            .fold(0.0, f64::max);
        Ok((
            err <= 1e-6 && r.atoms.is_empty() && seconds < 5.0,
            format!(
                "max |density - 1/2pi| = {err:.2e}, {} atoms, {seconds:.2} s",
                r.atoms.len()
            ),
        ))
    })
}

/// `0.7-Bernoulli` squared has exactly one atom, at `0`, whose radial mass
/// is `0.4` as the pair rule predicts.
pub fn atom_rule() -> Criterion {
    timed("atom rule", || {
        let b = CircleMeasure::bernoulli(0.7).map_err(|e| e.to_string())?;
        let r = run(&b, &b, 1024)?;
        let checks = &r.diagnostics.atom_checks;
        let passed = r.atoms.len() == 1
            && checks.len() == 1
            && r.atoms[0].angle.distance(UnitAngle::ZERO) <= 1e-12
            && (checks[0].predicted_mass - 0.4).abs() <= 1e-12
            && checks[0]
                .radial_mass
                .is_some_and(|m| (m - 0.4).abs() <= 1e-5);
        let atoms: Vec<String> = checks
            .iter()
            .map(|c| {
                format!(
                    "{} predicted {:.6} radial {}",
                    c.angle,
                    c.predicted_mass,
                    c.radial_mass.map_or("none".into(), |m| format!("{m:.10}"))
                )
            })
            .collect();
        Ok((passed, format!("{} atoms: {}", r.atoms.len(), atoms.join(", "))))
    })
}

/// The three-point measure squared: bounded density, `η` bounded away from
/// the point `1` on the grid, unit total mass.
pub fn bounded_density() -> Criterion {
    timed("bounded density", || {
        let m = three_point();
        let verdict = classify(&m, &m).map_err(|e| e.to_string())?.verdict;
        let r = run(&m, &m, 1024)?;
        let sup = r
            .grid
            .iter()
            .map(|p| match p.density {
                Some(d) if p.flag.counts_in_quadrature() => d,
                _ => f64::INFINITY,
            })
            .fold(0.0, f64::max);
        let gap = r.diagnostics.min_eta_gap;
        let mass = r.ac_mass() + r.atom_mass();
        Ok((
            verdict == Verdict::BoundedDensity
                && gap >= 1e-4
                && sup.is_finite()
                && (mass - 1.0).abs() <= 1e-4,
            format!(
                "{verdict:?}, min |1 - eta| = {gap:.4}, max |eta| = {:.6}, sup density = {sup:.4}, mass = {mass:.8}",
                r.diagnostics.max_eta_modulus
            ),
        ))
    })
}

/// Atomic pairs whose critical products include atoms, equality points,
/// points off the grid, and none at all.
pub fn atomic_suite() -> Vec<(&'static str, CircleMeasure, CircleMeasure)> {
    let b7 = CircleMeasure::bernoulli(0.7).expect("static");
    vec![
        ("0.7-bernoulli squared", b7.clone(), b7.clone()),
        ("three-point squared", three_point(), three_point()),
        (
            "0.6/0.2/0.2 with 0.6/0.4",
            measure(&[(0.0, 0.6), (0.5, 0.2), (1.0, 0.2)]),
            measure(&[(0.0, 0.6), (1.0, 0.4)]),
        ),
        (
            "0.6/0.4 at 1, i squared",
            measure(&[(0.0, 0.6), (0.5, 0.4)]),
            measure(&[(0.0, 0.6), (0.5, 0.4)]),
        ),
        (
            "half-bernoulli squared",
            CircleMeasure::bernoulli(0.5).expect("static"),
            CircleMeasure::bernoulli(0.5).expect("static"),
        ),
        (
            "0.7-bernoulli with 0.3-bernoulli",
            b7.clone(),
            CircleMeasure::bernoulli(0.3).expect("static"),
        ),
        (
            "off-grid products",
            measure(&[(0.0, 0.55), (1.0 / 3.0, 0.45)]),
            measure(&[(0.0, 0.6), (2.0 / 3.0, 0.4)]),
        ),
        (
            "equality pairs at quarter turns",
            measure(&[(0.0, 0.5), (0.5, 0.5)]),
            measure(&[(0.0, 0.5), (1.0, 0.25), (1.5, 0.25)]),
        ),
    ]
}

/// Every grid point flagged as a singularity lies within `1e-6` rad of a
/// critical-pair product.
pub fn atomic_singular_part() -> Criterion {
    timed("purely atomic singular part", || {
        let mut flagged = 0;
        let mut worst: f64 = 0.0;
        let mut offenders = Vec::new();
        for (name, m1, m2) in atomic_suite() {
            let products: Vec<UnitAngle> = critical_pairs(&m1, &m2)
                .map_err(|e| e.to_string())?
                .iter()
                .map(|p| p.product_angle)
                .collect();
            let r = run(&m1, &m2, 1024)?;
            for i in r.divergent_indices() {
                flagged += 1;
                let angle = r.grid[i].angle;
                let d = products
                    .iter()
                    .map(|p| p.distance(angle))
                    .fold(f64::INFINITY, f64::min);
                worst = worst.max(d);
                if d > 1e-6 {
                    offenders.push(format!("{name} at {angle}"));
                }
            }
        }
        let detail = if offenders.is_empty() {
            format!("{flagged} flagged points, largest distance to a critical product {worst:.1e}")
        } else {
            format!("flags away from critical products: {}", offenders.join("; "))
        };
        Ok((offenders.is_empty(), detail))
    })
}

/// An atomic measure with 2 to 4 atoms at uniform angles, masses drawn
/// uniformly and normalized, and `|m₁| ≥ 0.1`.
pub fn random_atomic(rng: &mut impl Rng) -> CircleMeasure {
    loop {
        let k = rng.gen_range(2..=4);
        let weights: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = weights.iter().sum();
        let atoms = weights
            .iter()
            .map(|w| Atom::new(UnitAngle::new(rng.gen_range(0.0..TAU)), w / total))
            .collect();
        if let Ok(m) = CircleMeasure::new(atoms, AcPart::None) {
            if m.first_moment().norm() >= 0.1 {
                return m;
            }
        }
    }
}

/// Series-oracle moments against quadrature moments for 20 random pairs,
/// `N = 8`, grid 2048, deviation below `1e-3`, under two minutes.
pub fn oracle_agreement(seed: u64) -> Criterion {
    timed("oracle agreement", || {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let m1 = random_atomic(&mut rng);
            let m2 = random_atomic(&mut rng);
            let oracle = boxtimes_moments(&m1, &m2, 8).map_err(|e| e.to_string())?;
            let r = run(&m1, &m2, 2048)?;
            worst = worst.max(compare_moments(&r, &oracle));
        }
        let seconds = start.elapsed().as_secs_f64();
        Ok((
            worst < 1e-3 && seconds < 120.0,
            format!("seed {seed}, max deviation {worst:.2e} over 20 pairs, {seconds:.1} s"),
        ))
    })
}

/// Residuals below `1e-10` out to `r = 1 − 2^{−20}`, commutativity to `1e-8`
/// with identical atoms, and `δ_1` acting as the unit.
pub fn subordination_invariants() -> Criterion {
    timed("subordination residuals", || {
        let schedule = RadialSchedule::dyadic(10, 20).map_err(|e| e.to_string())?;
        let solver = SolverConfig::default();
        let mut worst: f64 = 0.0;
        let mut solved = 0;
        let mut failures = 0;
        for (_, m1, m2) in atomic_suite() {
            for k in 0..1024 {
                let angle = UnitAngle::new(TAU * k as f64 / 1024.0);
                for r in solve_schedule(&m1, &m2, angle.conj(), &schedule, &solver) {
                    match r {
                        Ok(r) => {
                            solved += 1;
                            worst = worst.max(r.residual);
                        }
                        Err(_) => failures += 1,
                    }
                }
            }
        }
        let residuals_ok = failures == 0 && worst < 1e-10;

        let m1 = measure(&[(0.1, 0.5), (0.8, 0.3), (1.5, 0.2)]);
        let m2 = measure(&[(0.0, 0.7), (1.1, 0.3)]);
        let a = run(&m1, &m2, 1024)?;
        let b = run(&m2, &m1, 1024)?;
        let mut commute: f64 = 0.0;
        let mut same_flags = true;
        for (p, q) in a.grid.iter().zip(&b.grid) {
            same_flags &= p.flag == q.flag;
            if let (Some(x), Some(y)) = (p.density, q.density) {
                commute = commute.max((x - y).abs());
            }
        }
        let same_atoms = a.atoms.len() == b.atoms.len()
            && a.atoms.iter().zip(&b.atoms).all(|(x, y)| {
                x.angle == y.angle && (x.mass - y.mass).abs() <= 1e-12
            });
        let commutes = same_flags && same_atoms && commute <= 1e-8;

        let nu = CircleMeasure::new(
            vec![Atom::new(UnitAngle::new(5.0), 0.3)],
            AcPart::UniformArc {
                start: UnitAngle::new(0.5),
                length: 4.0,
                mass: 0.7,
            },
        )
        .map_err(|e| e.to_string())?;
        let delta = CircleMeasure::point_mass(UnitAngle::ZERO);
        let unit = run(&delta, &nu, 1024)?;
        let mut unit_err: f64 = 0.0;
        for p in &unit.grid {
            let d = p.density.unwrap_or(f64::INFINITY);
            unit_err = unit_err.max((d - nu.ac.density_at(p.angle.radians())).abs());
        }
        // The same identity through the solver rather than the rotation path.
        for theta in [1.0, 2.0, PI, 4.0, 5.5] {
            let d = density_at(
                &nu,
                &delta,
                UnitAngle::new(theta),
                &RadialSchedule::default(),
                &solver,
            )
            .map_err(|e| e.to_string())?;
            unit_err = unit_err.max((d.value - nu.ac.density_at(theta)).abs());
        }
        let unit_ok = unit.atoms == nu.atoms && unit_err <= 1e-8;

        Ok((
            residuals_ok && commutes && unit_ok,
            format!(
                "{solved} solves, {failures} failures, max residual {worst:.1e}; \
                 commutativity {commute:.1e}, atoms identical {same_atoms}; unit element {unit_err:.1e}"
            ),
        ))
    })
}

/// `0.6/0.2/0.2 ⊠ 0.6/0.4`: the singular set is `{0, π}` and both arcs
/// between them carry mass above `1e-3`.
pub fn arc_positivity_criterion() -> Criterion {
    timed("arc positivity", || {
        let m1 = measure(&[(0.0, 0.6), (0.5, 0.2), (1.0, 0.2)]);
        let m2 = measure(&[(0.0, 0.6), (1.0, 0.4)]);
        let r = run(&m1, &m2, 1024)?;
        let points = singular_set(&m1, &m2, &singular_schedule(), &SolverConfig::default())
            .map_err(|e| e.to_string())?
            .confirmed();
        let expected = [UnitAngle::ZERO, UnitAngle::from_pi_multiple(1.0)];
        let found = expected
            .iter()
            .all(|e| points.iter().any(|p| p.distance(*e) <= 1e-9));
        let arcs = arc_positivity(&m1, &m2, &r, &points).map_err(|e| e.to_string())?;
        let masses: Vec<String> = arcs
            .iter()
            .map(|a| format!("({}, {}) {:.4}", a.start, a.end, a.mass))
            .collect();
        Ok((
            found && points.len() == 2 && arcs.len() == 2 && arcs.iter().all(|a| a.mass > 1e-3),
            format!("singular points {}, arcs {}", points.len(), masses.join(", ")),
        ))
    })
}

/// Every criterion, in a fixed order.
pub fn run_all(seed: u64) -> Vec<Criterion> {
    vec![
        haar_degeneration(),
        atom_rule(),
        bounded_density(),
        atomic_singular_part(),
        oracle_agreement(seed),
        subordination_invariants(),
        arc_positivity_criterion(),
    ]
}
