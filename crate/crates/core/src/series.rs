//! Moments of `μ₁ ⊠ μ₂` from truncated power series.
//!
//! With `η_μ = ψ_μ/(1 + ψ_μ)` and `χ_μ` its compositional inverse, the
//! S-transform `Σ_μ(u) = χ_μ(u)/u` is multiplicative under `⊠`. Everything
//! here happens on truncated series around `0`, which makes this an oracle
//! independent of the boundary solver.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::convolution::ConvolutionResult;
use crate::measure::{moment, CircleMeasure};

/// Below this `|m₁|` the reversion is refused.
pub const MIN_FIRST_MOMENT: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("truncation order must be at least 1")]
    ZeroOrder,
    #[error("factor {which} has first moment of modulus {modulus:e}; the series oracle needs it nonzero")]
    ZeroFirstMoment { which: usize, modulus: f64 },
    #[error("series has zero constant term and cannot be inverted")]
    NotInvertible,
    #[error("series must have zero constant term and nonzero linear term to be reverted")]
    NotRevertible,
    #[error("truncation orders differ: {0} vs {1}")]
    OrderMismatch(usize, usize),
}

/// A power series `c₀ + c₁z + … + c_N z^N` known modulo `z^{N+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FormalSeries {
    coeffs: Vec<Complex64>,
}

impl FormalSeries {
    /// Takes `c₀..c_N`; the truncation order is `coeffs.len() − 1`.
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self, SeriesError> {
        if coeffs.len() < 2 {
            return Err(SeriesError::ZeroOrder);
        }
        Ok(FormalSeries { coeffs })
    }

    pub fn zero(order: usize) -> Self {
        FormalSeries {
            coeffs: vec![Complex64::new(0.0, 0.0); order + 1],
        }
    }

    /// The series `z`.
    pub fn identity(order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[1] = Complex64::new(1.0, 0.0);
        s
    }

    pub fn constant(c: Complex64, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = c;
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn truncate(&self, order: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(order + 1, Complex64::default());
        FormalSeries { coeffs }
    }

    fn check(&self, other: &Self) -> Result<(), SeriesError> {
        if self.order() != other.order() {
            return Err(SeriesError::OrderMismatch(self.order(), other.order()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check(other)?;
        Ok(FormalSeries {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check(other)?;
        Ok(FormalSeries {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn scale(&self, c: Complex64) -> Self {
        FormalSeries {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check(other)?;
        let n = self.order();
        let mut out = vec![Complex64::default(); n + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == Complex64::default() {
                continue;
            }
            for (j, b) in other.coeffs[..=n - i].iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Ok(FormalSeries { coeffs: out })
    }

    /// `1/f`, requiring `c₀ ≠ 0`.
    pub fn reciprocal(&self) -> Result<Self, SeriesError> {
        let c0 = self.coeffs[0];
        if c0 == Complex64::default() {
            return Err(SeriesError::NotInvertible);
        }
        let n = self.order();
        let mut out = vec![Complex64::default(); n + 1];
        out[0] = c0.inv();
        for k in 1..=n {
            let s: Complex64 = (1..=k).map(|j| self.coeffs[j] * out[k - j]).sum();
            out[k] = -s / c0;
        }
        Ok(FormalSeries { coeffs: out })
    }

    pub fn derivative(&self) -> Self {
        let n = self.order();
        let mut coeffs: Vec<Complex64> = (1..=n).map(|k| self.coeffs[k] * k as f64).collect();
        coeffs.push(Complex64::default());
        FormalSeries { coeffs }
    }

    /// Multiplies by `z^{-1}`, dropping `c₀`; the order drops by one.
    pub fn shift_down(&self) -> Result<Self, SeriesError> {
        FormalSeries::new(self.coeffs[1..].to_vec())
    }

    /// `f ∘ g`, requiring `g(0) = 0`.
    pub fn compose(&self, g: &Self) -> Result<Self, SeriesError> {
        self.check(g)?;
        if g.coeffs[0] != Complex64::default() {
            return Err(SeriesError::NotRevertible);
        }
        let n = self.order();
        let mut acc = FormalSeries::constant(self.coeffs[n], n);
        for k in (0..n).rev() {
            acc = acc.mul(g)?;
            acc.coeffs[0] += self.coeffs[k];
        }
        Ok(acc)
    }

    /// The compositional inverse `g` with `f(g(z)) = z`, by Newton steps
    /// `g ← g − (f∘g − z)/(f'∘g)` that double the number of correct terms.
    pub fn revert(&self) -> Result<Self, SeriesError> {
        let c1 = self.coeffs[1];
        if self.coeffs[0] != Complex64::default() || c1 == Complex64::default() {
            return Err(SeriesError::NotRevertible);
        }
        let n = self.order();
        let df = self.derivative();
        let mut g = FormalSeries::identity(n).scale(c1.inv());
        let mut correct = 1;
        while correct < n {
            correct = (2 * correct).min(n);
            let prec = correct;
            let f = self.truncate(prec);
            let gp = g.truncate(prec);
            let residual = f.compose(&gp)?.sub(&FormalSeries::identity(prec))?;
            let slope = df.truncate(prec).compose(&gp)?.reciprocal()?;
            let step = residual.mul(&slope)?;
            g = gp.sub(&step)?.truncate(n);
        }
        Ok(g)
    }
}

/// `ψ_μ(z) = Σ_{k≥1} m_k z^k` to order `n`.
pub fn psi_series(m: &CircleMeasure, n: usize) -> FormalSeries {
    let mut s = FormalSeries::zero(n.max(1));
    for k in 1..=n {
        s.coeffs[k] = moment(m, k as u32);
    }
    s
}

/// `η = ψ/(1 + ψ)`.
pub fn eta_series(psi: &FormalSeries) -> Result<FormalSeries, SeriesError> {
    let one = FormalSeries::constant(Complex64::new(1.0, 0.0), psi.order());
    psi.mul(&one.add(psi)?.reciprocal()?)
}

/// `ψ = η/(1 − η)`.
pub fn psi_from_eta(eta: &FormalSeries) -> Result<FormalSeries, SeriesError> {
    let one = FormalSeries::constant(Complex64::new(1.0, 0.0), eta.order());
    eta.mul(&one.sub(eta)?.reciprocal()?)
}

/// `Σ_μ(u) = χ_μ(u)/u`, to order `n − 1`.
pub fn s_transform(m: &CircleMeasure, n: usize) -> Result<FormalSeries, SeriesError> {
    eta_series(&psi_series(m, n))?.revert()?.shift_down()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSeries {
    /// `m₁..m_N`.
    pub moments: Vec<Complex64>,
}

impl MomentSeries {
    pub fn zeros(n: usize) -> Self {
        MomentSeries {
            moments: vec![Complex64::default(); n],
        }
    }

    pub fn of_measure(m: &CircleMeasure, n: usize) -> Self {
        MomentSeries {
            moments: (1..=n as u32).map(|k| moment(m, k)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.moments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moments.is_empty()
    }

    /// `m_k`, 1-based.
    pub fn get(&self, k: usize) -> Complex64 {
        self.moments[k - 1]
    }

    /// Largest `|m_k|`; at most 1 for a probability measure.
    pub fn max_modulus(&self) -> f64 {
        self.moments.iter().map(|m| m.norm()).fold(0.0, f64::max)
    }
}

/// Moments `m₁..m_n` of `μ₁ ⊠ μ₂` through `Σ_{μ₁⊠μ₂} = Σ_{μ₁}Σ_{μ₂}`.
pub fn boxtimes_moments(
    m1: &CircleMeasure,
    m2: &CircleMeasure,
    n: usize,
) -> Result<MomentSeries, SeriesError> {
    if n == 0 {
        return Err(SeriesError::ZeroOrder);
    }
    for (which, m) in [(1, m1), (2, m2)] {
        let modulus = moment(m, 1).norm();
        if modulus < MIN_FIRST_MOMENT {
            return Err(SeriesError::ZeroFirstMoment { which, modulus });
        }
    }
    let s1 = s_transform(m1, n + 1)?;
    let s2 = s_transform(m2, n + 1)?;
    let sigma = s1.mul(&s2)?;
    let mut chi = FormalSeries::zero(n);
    chi.coeffs[1..].copy_from_slice(&sigma.coeffs[..n]);
    let psi = psi_from_eta(&chi.revert()?)?;
    Ok(MomentSeries {
        moments: psi.coeffs[1..].to_vec(),
    })
}

/// Largest `|m_k(result) − oracle_k|` over `k = 1..N`.
pub fn compare_moments(result: &ConvolutionResult, oracle: &MomentSeries) -> f64 {
    oracle
        .moments
        .iter()
        .enumerate()
        .map(|(i, m)| (result.moment(i as u32 + 1) - m).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convolution::{convolve, ConvolutionConfig};
    use crate::measure::{AcPart, Atom, DensityGrid, UnitAngle};
    use std::f64::consts::TAU;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn series(coeffs: &[Complex64]) -> FormalSeries {
        FormalSeries::new(coeffs.to_vec()).unwrap()
    }

    /// Lagrange inversion: `[z^n] f^{<-1>} = (1/n) [w^{n−1}] (w/f(w))^n`.
    fn lagrange_revert(f: &FormalSeries) -> Vec<Complex64> {
        let n = f.order();
        let quotient = f.shift_down().unwrap();
        let q = FormalSeries::new({
            let mut v = quotient.coeffs().to_vec();
            v.push(Complex64::default());
            v
        })
        .unwrap();
        let base = q.reciprocal().unwrap();
        let mut power = FormalSeries::constant(c(1.0, 0.0), n);
        let mut out = vec![Complex64::default(); n + 1];
        for k in 1..=n {
            power = power.mul(&base).unwrap();
            out[k] = power.coeff(k - 1) / k as f64;
        }
        out
    }

    #[test]
    fn reciprocal_of_one_minus_z_is_geometric() {
        let f = series(&[c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let g = f.reciprocal().unwrap();
        for k in 0..=4 {
            assert_eq!(g.coeff(k), c(1.0, 0.0));
        }
    }

    #[test]
    fn revert_matches_lagrange_inversion() {
        let f = series(&[
            c(0.0, 0.0),
            c(0.6, -0.3),
            c(0.2, 0.1),
            c(-0.4, 0.05),
            c(0.1, 0.3),
            c(0.0, -0.2),
            c(0.3, 0.0),
            c(-0.1, 0.1),
            c(0.05, 0.05),
        ]);
        let g = f.revert().unwrap();
        let oracle = lagrange_revert(&f);
        for k in 0..=8 {
            assert!((g.coeff(k) - oracle[k]).norm() < 1e-10, "k={k}");
        }
    }

    #[test]
    fn revert_of_z_over_one_minus_z() {
        // z/(1 − z) inverts to z/(1 + z).
        let n = 10;
        let mut coeffs = vec![c(1.0, 0.0); n + 1];
        coeffs[0] = c(0.0, 0.0);
        let g = series(&coeffs).revert().unwrap();
        for k in 1..=n {
            let expected = if k % 2 == 1 { 1.0 } else { -1.0 };
            assert!((g.coeff(k) - c(expected, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn revert_rejects_degenerate_input() {
        let f = series(&[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(f.revert().unwrap_err(), SeriesError::NotRevertible);
        let g = series(&[c(1.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(g.revert().unwrap_err(), SeriesError::NotRevertible);
    }

    #[test]
    fn psi_series_examples() {
        let delta = CircleMeasure::point_mass(UnitAngle::ZERO);
        let s = psi_series(&delta, 3);
        assert_eq!(&s.coeffs()[1..], &[c(1.0, 0.0); 3]);

        let haar = CircleMeasure::haar();
        let s = psi_series(&haar, 5);
        assert!(s.coeffs().iter().all(|x| x.norm() < 1e-15));

        let half = CircleMeasure::bernoulli(0.5).unwrap();
        let s = psi_series(&half, 4);
        let expected = [0.0, 1.0, 0.0, 1.0];
        for (k, e) in expected.iter().enumerate() {
            assert!((s.coeff(k + 1) - c(*e, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn first_moment_multiplies() {
        let b = CircleMeasure::bernoulli(0.7).unwrap();
        let out = boxtimes_moments(&b, &b, 6).unwrap();
        assert!((out.get(1) - c(0.16, 0.0)).norm() < 1e-15);
        assert!(out.max_modulus() <= 1.0 + 1e-12);
    }

    #[test]
    fn second_moment_matches_free_independence() {
        // For free a, b: φ(abab) = φ(a²)φ(b)² + φ(a)²φ(b²) − φ(a)²φ(b)².
        let m1 = CircleMeasure::atomic(&[(0.0, 0.5), (0.5, 0.2), (1.3, 0.3)]).unwrap();
        let m2 = CircleMeasure::atomic(&[(0.1, 0.6), (1.0, 0.4)]).unwrap();
        let (a1, a2) = (moment(&m1, 1), moment(&m1, 2));
        let (b1, b2) = (moment(&m2, 1), moment(&m2, 2));
        let expected = a2 * b1 * b1 + a1 * a1 * b2 - a1 * a1 * b1 * b1;
        let out = boxtimes_moments(&m1, &m2, 4).unwrap();
        assert!((out.get(2) - expected).norm() < 1e-13);
    }

    #[test]
    fn rotation_by_point_mass() {
        let gamma = UnitAngle::new(0.9);
        let delta = CircleMeasure::point_mass(gamma);
        let nu = CircleMeasure::atomic(&[(0.0, 0.3), (0.4, 0.5), (1.5, 0.2)]).unwrap();
        let out = boxtimes_moments(&delta, &nu, 8).unwrap();
        for k in 1..=8u32 {
            let expected = gamma.point().powu(k) * moment(&nu, k);
            assert!((out.get(k as usize) - expected).norm() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn commutes() {
        let m1 = CircleMeasure::atomic(&[(0.0, 0.5), (0.7, 0.5)]).unwrap();
        let m2 = CircleMeasure::atomic(&[(0.2, 0.8), (1.1, 0.2)]).unwrap();
        let a = boxtimes_moments(&m1, &m2, 8).unwrap();
        let b = boxtimes_moments(&m2, &m1, 8).unwrap();
        for k in 1..=8 {
            assert!((a.get(k) - b.get(k)).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_first_moment_is_rejected() {
        let half = CircleMeasure::bernoulli(0.5).unwrap();
        let b = CircleMeasure::bernoulli(0.7).unwrap();
        assert!(matches!(
            boxtimes_moments(&b, &half, 4),
            Err(SeriesError::ZeroFirstMoment { which: 2, .. })
        ));
        assert!(matches!(
            boxtimes_moments(&CircleMeasure::haar(), &b, 4),
            Err(SeriesError::ZeroFirstMoment { which: 1, .. })
        ));
    }

    #[test]
    fn haar_result_against_zero_series() {
        let half = CircleMeasure::bernoulli(0.5).unwrap();
        let r = convolve(&half, &half, &ConvolutionConfig::default()).unwrap();
        assert!(compare_moments(&r, &MomentSeries::zeros(8)) < 1e-6);
    }

    #[test]
    fn bernoulli_square_matches_solver() {
        let b = CircleMeasure::bernoulli(0.7).unwrap();
        let oracle = boxtimes_moments(&b, &b, 8).unwrap();
        let config = ConvolutionConfig {
            grid_size: 2048,
            ..ConvolutionConfig::default()
        };
        let r = convolve(&b, &b, &config).unwrap();
        let dev = compare_moments(&r, &oracle);
        assert!(dev < 1e-4, "deviation {dev}");
    }

    #[test]
    fn point_mass_factor_needs_no_solver() {
        let delta = CircleMeasure::point_mass(UnitAngle::ZERO);
        let nu = CircleMeasure::new(
            vec![Atom::new(UnitAngle::new(1.0), 0.3)],
            AcPart::Grid(DensityGrid::sample(1024, |t| 0.7 * (1.0 + 0.5 * t.cos()) / TAU)),
        )
        .unwrap();
        let r = convolve(&delta, &nu, &ConvolutionConfig::default()).unwrap();
        let oracle = MomentSeries::of_measure(&nu, 8);
        let dev = compare_moments(&r, &oracle);
        assert!(dev < 1e-8, "deviation {dev}");
    }

    fn arb_series(n: usize) -> impl Strategy<Value = FormalSeries> {
        (
            0.1f64..1.0,
            0.0f64..std::f64::consts::TAU,
            prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n - 1),
        )
            .prop_map(move |(r, t, rest)| {
                let mut coeffs = vec![c(0.0, 0.0), Complex64::from_polar(r, t)];
                coeffs.extend(rest.into_iter().map(|(a, b)| c(a, b)));
                FormalSeries::new(coeffs).unwrap()
            })
    }

    proptest! {
        #[test]
        fn revert_twice_is_identity(f in arb_series(8)) {
            let back = f.revert().unwrap().revert().unwrap();
            // Coefficients of the inverse grow like |c₁|^{-(2k−1)}.
            let scale = f.coeff(1).norm().powi(-15).max(1.0);
            for k in 0..=8 {
                prop_assert!((back.coeff(k) - f.coeff(k)).norm() / scale < 1e-10, "k={}", k);
            }
        }

        #[test]
        fn revert_agrees_with_lagrange(f in arb_series(7)) {
            let g = f.revert().unwrap();
            let oracle = lagrange_revert(&f);
            let scale = g.coeffs().iter().map(|x| x.norm()).fold(1.0, f64::max);
            for k in 0..=7 {
                prop_assert!((g.coeff(k) - oracle[k]).norm() / scale < 1e-10);
            }
        }
    }
}
