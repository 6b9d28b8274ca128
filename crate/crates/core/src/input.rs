//! Reading measures from the command line: JSON documents or shorthand.
//!
//! Shorthand forms:
//!
//! * `haar`
//! * `bernoulli:P` for `P δ_1 + (1 − P) δ_{−1}`
//! * `point:A` for `δ_A`
//! * `atoms:A@M,A@M,...`
//!
//! An angle `A` is radians unless it ends in `pi`, in which case the prefix
//! (a decimal or `p/q`, possibly empty) multiplies π: `pi`, `0.5pi`, `1/3pi`.
//! Anything else is read as a path to a JSON document of the form
//! `{"atoms": [{"angle_over_pi": 0.5, "mass": 0.3}], "ac": {"kind": "haar"}}`
//! where `angle_over_pi` may also be a string `"p/q"`.

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::measure::{AcPart, Atom, CircleMeasure, MeasureError, UnitAngle};

#[derive(Debug, Error)]
pub enum InputError {
    #[error("cannot parse number {0:?}")]
    Number(String),
    #[error("bad shorthand {0:?}: {1}")]
    Shorthand(String, String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("bad measure document: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// A real given as a decimal or as a ratio `p/q`.
fn parse_real(s: &str) -> Result<f64, InputError> {
    let s = s.trim();
    let bad = || InputError::Number(s.to_string());
    match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0.0 {
                return Err(bad());
            }
            Ok(p / q)
        }
        None => s.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(bad),
    }
}

pub fn parse_angle(s: &str) -> Result<UnitAngle, InputError> {
    let s = s.trim();
    match s.strip_suffix("pi").or_else(|| s.strip_suffix('π')) {
        Some(prefix) => {
            let prefix = prefix.trim().trim_end_matches('*');
            let factor = match prefix {
                "" => 1.0,
                "-" => -1.0,
                p => parse_real(p)?,
            };
            Ok(UnitAngle::from_pi_multiple(factor))
        }
        None => Ok(UnitAngle::new(parse_real(s)?)),
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum PiMultiple {
    Number(f64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomDoc {
    angle_over_pi: PiMultiple,
    mass: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureDoc {
    #[serde(default)]
    atoms: Vec<AtomDoc>,
    #[serde(default)]
    ac: AcPart,
}

/// Parses a JSON measure document.
pub fn measure_from_json(text: &str) -> Result<CircleMeasure, InputError> {
    let doc: MeasureDoc = serde_json::from_str(text)?;
    let atoms = doc
        .atoms
        .into_iter()
        .map(|a| {
            let factor = match a.angle_over_pi {
                PiMultiple::Number(x) => x,
                PiMultiple::Text(t) => parse_real(&t)?,
            };
            Ok(Atom::new(UnitAngle::from_pi_multiple(factor), a.mass))
        })
        .collect::<Result<Vec<_>, InputError>>()?;
    Ok(CircleMeasure::new(atoms, doc.ac)?)
}

fn shorthand_error(s: &str, why: impl Into<String>) -> InputError {
    InputError::Shorthand(s.to_string(), why.into())
}

/// Parses shorthand, returning `None` if `s` is not shorthand at all.
pub fn measure_from_shorthand(s: &str) -> Option<Result<CircleMeasure, InputError>> {
    let s = s.trim();
    if s == "haar" {
        return Some(Ok(CircleMeasure::haar()));
    }
    let (family, args) = s.split_once(':')?;
    let parsed = match family {
        "bernoulli" => parse_real(args)
            .and_then(|p| CircleMeasure::bernoulli(p).map_err(InputError::from)),
        "point" => parse_angle(args).map(CircleMeasure::point_mass),
        "atoms" => args
            .split(',')
            .map(|item| {
                let (angle, mass) = item
                    .split_once('@')
                    .ok_or_else(|| shorthand_error(s, format!("expected ANGLE@MASS, got {item:?}")))?;
                Ok(Atom::new(parse_angle(angle)?, parse_real(mass)?))
            })
            .collect::<Result<Vec<_>, InputError>>()
            .and_then(|atoms| Ok(CircleMeasure::new(atoms, AcPart::None)?)),
        _ => return None,
    };
    Some(parsed.map_err(|e| match e {
        InputError::Measure(_) | InputError::Shorthand(..) => e,
        other => shorthand_error(s, other.to_string()),
    }))
}

/// Shorthand if it parses as such, otherwise a JSON file path.
pub fn parse_measure(s: &str) -> Result<CircleMeasure, InputError> {
    if let Some(m) = measure_from_shorthand(s) {
        return m;
    }
    let path = Path::new(s);
    let text = std::fs::read_to_string(path).map_err(|source| InputError::Io {
        path: s.to_string(),
        source,
    })?;
    measure_from_json(&text)
}
