//! Serialized forms of results: JSON with fixed 17-digit floats, and CSV.

use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;

use crate::convolution::{ConvolutionResult, DensityFlag, Diagnostics};
use crate::measure::Atom;

/// Compact JSON whose floats always carry 17 significant digits, so equal
/// values give equal bytes regardless of how they were produced.
#[derive(Debug, Default, Clone, Copy)]
pub struct FixedDigits;

impl Formatter for FixedDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedDigits);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSettings {
    pub grid_size: usize,
    pub schedule_max_k: u32,
    pub tol: f64,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityDocument {
    pub angles: Vec<f64>,
    /// `null` where the point is flagged or failed.
    pub values: Vec<Option<f64>>,
    pub flags: Vec<DensityFlag>,
    pub divergent: Vec<usize>,
}

/// The JSON form of a [`ConvolutionResult`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultDocument<'a> {
    pub atoms: &'a [Atom],
    pub density: DensityDocument,
    pub mass_defect: f64,
    pub diagnostics: &'a Diagnostics,
    pub settings: RunSettings,
}

impl<'a> ResultDocument<'a> {
    pub fn new(result: &'a ConvolutionResult, settings: RunSettings) -> Self {
        ResultDocument {
            atoms: &result.atoms,
            density: DensityDocument {
                angles: result.grid.iter().map(|p| p.angle.radians()).collect(),
                values: result.grid.iter().map(|p| p.density).collect(),
                flags: result.grid.iter().map(|p| p.flag).collect(),
                divergent: result.divergent_indices(),
            },
            mass_defect: result.mass_defect,
            diagnostics: &result.diagnostics,
            settings,
        }
    }
}

fn flag_name(flag: DensityFlag) -> &'static str {
    match flag {
        DensityFlag::Converged => "converged",
        DensityFlag::Unresolved => "unresolved",
        DensityFlag::Unbounded => "unbounded",
        DensityFlag::Divergent => "divergent",
        DensityFlag::Failed => "failed",
    }
}

/// `theta,density,flag` rows; flagged points have an empty density field.
pub fn density_csv(result: &ConvolutionResult) -> String {
    let mut out = String::from("theta,density,flag\n");
    for p in &result.grid {
        let density = p.density.map(|d| format!("{d:.16e}")).unwrap_or_default();
        out.push_str(&format!(
            "{:.16e},{},{}\n",
            p.angle.radians(),
            density,
            flag_name(p.flag)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convolution::{convolve, ConvolutionConfig};
    use crate::measure::CircleMeasure;

    #[derive(Serialize)]
    struct Sample {
        x: f64,
        y: Vec<f64>,
        z: Option<f64>,
    }

    #[test]
    fn floats_have_seventeen_digits() {
        let s = to_json(&Sample {
            x: 0.1,
            y: vec![1.0, -2.5e-300],
            z: None,
        })
        .unwrap();
        assert_eq!(
            s,
            "{\"x\":1.0000000000000001e-1,\"y\":[1.0000000000000000e0,-2.5000000000000000e-300],\"z\":null}\n"
        );
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["x"].as_f64(), Some(0.1));
    }

    #[test]
    fn non_finite_becomes_null() {
        let s = to_json(&vec![f64::NAN, f64::INFINITY]).unwrap();
        assert_eq!(s, "[null,null]\n");
    }

    #[test]
    fn result_round_trip_shape() {
        let b = CircleMeasure::bernoulli(0.7).unwrap();
        let config = ConvolutionConfig {
            grid_size: 64,
            ..ConvolutionConfig::default()
        };
        let r = convolve(&b, &b, &config).unwrap();
        let settings = RunSettings {
            grid_size: 64,
            schedule_max_k: 24,
            tol: 1e-12,
            seed: None,
        };
        let text = to_json(&ResultDocument::new(&r, settings)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["density"]["angles"].as_array().unwrap().len(), 64);
        assert_eq!(v["density"]["values"].as_array().unwrap().len(), 64);
        assert_eq!(v["atoms"].as_array().unwrap().len(), 1);
        assert!((v["atoms"][0]["mass"].as_f64().unwrap() - 0.4).abs() < 1e-5);
        assert!(v["diagnostics"]["max_residual"].is_number());

        let csv = density_csv(&r);
        assert_eq!(csv.lines().count(), 65);
        assert!(csv.starts_with("theta,density,flag\n0.0000000000000000e0,"));
    }
}
