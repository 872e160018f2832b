//! Machine-readable run reports.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{validation, Result};
use crate::spectral::SpectrumReport;

/// Tolerance ladder shared by the commands.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Spectral comparisons.
    pub spectrum: f64,
    /// Entrywise matrix comparisons.
    pub entrywise: f64,
    /// Eigenvalues below this count as zero.
    pub zero_threshold: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { spectrum: 1e-9, entrywise: 1e-12, zero_threshold: 1e-10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    pub tolerances: Tolerances,
    pub payload: Value,
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn new(command: impl Into<String>, seed: Option<u64>, tolerances: Tolerances, payload: Value) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            tolerances,
            payload,
            wall_time_s: 0.0,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// `[re, im]`.
pub fn complex_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

/// Rows of `[re, im]` pairs.
pub fn matrix_json(m: &Array2<Complex64>) -> Value {
    Value::Array(
        m.rows()
            .into_iter()
            .map(|row| Value::Array(row.iter().map(|&z| complex_json(z)).collect()))
            .collect(),
    )
}

pub fn matrix_from_json(v: &Value) -> Result<Array2<Complex64>> {
    let bad = || validation("matrix must be a list of rows of [re, im] pairs");
    let rows = v.as_array().ok_or_else(bad)?;
    let d = rows.len();
    let mut out = Array2::zeros((d, rows.first().and_then(Value::as_array).map_or(0, Vec::len)));
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_array().ok_or_else(bad)?;
        if row.len() != out.ncols() {
            return Err(validation("ragged matrix"));
        }
        for (j, z) in row.iter().enumerate() {
            let pair = z.as_array().filter(|p| p.len() == 2).ok_or_else(bad)?;
            let re = pair[0].as_f64().ok_or_else(bad)?;
            let im = pair[1].as_f64().ok_or_else(bad)?;
            out[[i, j]] = Complex64::new(re, im);
        }
    }
    Ok(out)
}

pub fn spectrum_json(s: &SpectrumReport) -> Value {
    serde_json::to_value(s).expect("spectrum serializes")
}
