//! Free multiplicative convolution of probability measures on the unit circle.
//!
//! [`convolution::convolve`] computes the density, atoms and mass bookkeeping
//! of `μ₁ ⊠ μ₂` by solving the subordination system near the boundary.
//! [`regularity::classify`] predicts atoms and unbounded points from the
//! atoms of the factors alone, and [`series::boxtimes_moments`] gives the
//! moments of the result through the S-transform, independently of the
//! solver.
//!
//! ```
//! use freemul::convolution::{convolve, ConvolutionConfig};
//! use freemul::measure::CircleMeasure;
//!
//! let b = CircleMeasure::bernoulli(0.7).unwrap();
//! let r = convolve(&b, &b, &ConvolutionConfig::default()).unwrap();
//! assert_eq!(r.atoms.len(), 1);
//! assert!((r.atoms[0].mass - 0.4).abs() < 1e-12);
//! ```

pub mod cli;
pub mod convolution;
pub mod herglotz;
pub mod input;
pub mod measure;
pub mod output;
pub mod regularity;
pub mod series;
pub mod subordination;
pub mod verify;
