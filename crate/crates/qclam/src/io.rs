//! Small serialization helpers shared by the JSON schemas.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::C64;

/// A complex number in JSON: `[re, im]`, or a bare real number.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JsonComplex {
    Pair([f64; 2]),
    Real(f64),
}

impl From<JsonComplex> for C64 {
    fn from(c: JsonComplex) -> Self {
        match c {
            JsonComplex::Pair([re, im]) => C64::new(re, im),
            JsonComplex::Real(re) => C64::new(re, 0.0),
        }
    }
}

impl From<C64> for JsonComplex {
    fn from(c: C64) -> Self {
        JsonComplex::Pair([c.re, c.im])
    }
}

pub fn to_c64s(v: &[JsonComplex]) -> Vec<C64> {
    v.iter().map(|&c| c.into()).collect()
}

pub fn from_c64s(v: &[C64]) -> Vec<JsonComplex> {
    v.iter().map(|&c| c.into()).collect()
}

/// Min-max scaling of an 8-bit heatmap: byte `b` stands for
/// `min + b / 255 * (max - min)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PgmScaling {
    pub width: usize,
    pub height: usize,
    pub min: f64,
    pub max: f64,
}

/// Writes row-major `values` as a binary PGM (P5) with linear min-max
/// scaling. A constant image maps to zero bytes.
pub fn write_pgm<W: Write>(mut out: W, width: usize, height: usize, values: &[f64]) -> crate::Result<PgmScaling> {
    if width == 0 || height == 0 || values.len() != width * height {
        return Err(crate::Error::validation(format!("{} values do not fill a {width}x{height} image", values.len())));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(crate::Error::validation("heatmap values must be finite"));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    let bytes: Vec<u8> = values
        .iter()
        .map(|v| if span > 0.0 { ((v - min) / span * 255.0).round() as u8 } else { 0 })
        .collect();
    write!(out, "P5\n{width} {height}\n255\n")?;
    out.write_all(&bytes)?;
    Ok(PgmScaling { width, height, min, max })
}
