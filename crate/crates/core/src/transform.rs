//! Pattern transformation between classes: whiten with one class's operator,
//! color with another's. Also renders vectors as binary PGM images.

use std::path::Path;

use crate::error::{Error, Result};
use crate::pencil::{color_one, whiten_one, WhiteningOperator};

/// Map a pattern from one class to another: `L_to⁻¹ L_from (x - μ_from) + μ_to`.
pub fn transform_pattern(
    x: &[f64],
    from: &WhiteningOperator,
    to: &WhiteningOperator,
) -> Result<Vec<f64>> {
    if from.dim() != to.dim() {
        return Err(Error::DimensionMismatch(format!(
            "operators have dimensions {} and {}",
            from.dim(),
            to.dim()
        )));
    }
    let white = whiten_one(from, x)?;
    color_one(to, &white)
}

/// Generate a pattern of the target class from unit-variance white noise:
/// `L_to⁻¹ p + μ_to`.
pub fn generate_from_noise(p: &[f64], to: &WhiteningOperator) -> Result<Vec<f64>> {
    color_one(to, p)
}

/// Min-max normalize a vector to `[0, 255]` bytes. A constant vector maps
/// to all zeros.
pub fn normalized_bytes(v: &[f64]) -> Vec<u8> {
    let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    if range <= 0.0 {
        return vec![0; v.len()];
    }
    v.iter()
        .map(|x| ((x - min) / range * 255.0) as u8)
        .collect()
}

/// Render a vector as a binary PGM ("P5", maxval 255), min-max normalized.
pub fn pgm_bytes(v: &[f64], rows: usize, cols: usize) -> Result<Vec<u8>> {
    if rows * cols != v.len() {
        return Err(Error::DimensionMismatch(format!(
            "{rows}x{cols} image needs {} values, got {}",
            rows * cols,
            v.len()
        )));
    }
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    out.extend(normalized_bytes(v));
    Ok(out)
}

/// Write a vector to disk as a PGM image.
pub fn write_pgm(v: &[f64], rows: usize, cols: usize, path: &Path) -> Result<()> {
    let bytes = pgm_bytes(v, rows, cols)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
