//! Plain-text state files.
//!
//! ```text
//! # optional comments
//! n = 2
//! normalize = false
//! 00 0.5 0
//! 01 0.5 0
//! 10 0.5 0
//! 11 0.5 0
//! ```
//!
//! Each amplitude line is `<bitstring> <re> <im>` with mode 1 leftmost.
//! Missing bitstrings have amplitude zero. Without `normalize = true` the
//! squared norm must be 1 within `1e-9`.

use std::collections::HashSet;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{validation, Result};
use crate::fock::{FockVector, MultiIndex, MAX_MODES, ZERO};

/// Norm tolerance for files that do not ask to be normalized.
pub const FILE_NORM_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct StateFile {
    pub n: usize,
    pub normalize: bool,
    pub amplitudes: Vec<(MultiIndex, Complex64)>,
}

fn line_error(line: usize, msg: impl std::fmt::Display) -> crate::Error {
    validation(format!("line {line}: {msg}"))
}

fn parse_float(token: &str, line: usize) -> Result<f64> {
    let x: f64 = token.parse().map_err(|_| line_error(line, format!("not a number: {token:?}")))?;
    if !x.is_finite() {
        return Err(line_error(line, format!("non-finite value {token:?}")));
    }
    Ok(x)
}

impl StateFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut n: Option<usize> = None;
        let mut normalize = false;
        let mut amplitudes = Vec::new();
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some((key, value)) = content.split_once('=') {
                let (key, value) = (key.trim(), value.trim());
                match key {
                    "n" => {
                        if n.is_some() {
                            return Err(line_error(line, "mode count given twice"));
                        }
                        if !amplitudes.is_empty() {
                            return Err(line_error(line, "mode count must precede amplitudes"));
                        }
                        let v: usize = value.parse().map_err(|_| line_error(line, format!("invalid mode count {value:?}")))?;
                        if v == 0 || v > MAX_MODES {
                            return Err(line_error(line, format!("mode count {v} outside 1..={MAX_MODES}")));
                        }
                        n = Some(v);
                    }
                    "normalize" => {
                        normalize = match value {
                            "true" => true,
                            "false" => false,
                            _ => return Err(line_error(line, format!("normalize must be true or false, got {value:?}"))),
                        }
                    }
                    _ => return Err(line_error(line, format!("unknown key {key:?}"))),
                }
                continue;
            }
            let Some(n) = n else {
                return Err(line_error(line, "amplitude before `n = …` header"));
            };
            let tokens: Vec<&str> = content.split_whitespace().collect();
            if tokens.len() != 3 {
                return Err(line_error(line, format!("expected `<bits> <re> <im>`, got {} fields", tokens.len())));
            }
            if tokens[0].len() != n {
                return Err(line_error(line, format!("bitstring {:?} has length {}, expected {n}", tokens[0], tokens[0].len())));
            }
            let j: MultiIndex = tokens[0].parse().map_err(|e| line_error(line, e))?;
            if !seen.insert(j) {
                return Err(line_error(line, format!("duplicate bitstring {}", tokens[0])));
            }
            let amp = Complex64::new(parse_float(tokens[1], line)?, parse_float(tokens[2], line)?);
            amplitudes.push((j, amp));
        }
        let n = n.ok_or_else(|| validation("missing `n = …` header"))?;
        let file = Self { n, normalize, amplitudes };
        if !normalize {
            let norm: f64 = file.amplitudes.iter().map(|(_, a)| a.norm_sqr()).sum();
            if (norm - 1.0).abs() > FILE_NORM_TOL {
                return Err(validation(format!(
                    "squared norm {norm} differs from 1 by more than {FILE_NORM_TOL:e}; set `normalize = true` to rescale"
                )));
            }
        }
        Ok(file)
    }

    pub fn from_state(psi: &FockVector) -> Self {
        let amplitudes = MultiIndex::all(psi.n())
            .expect("valid mode count")
            .filter(|&j| psi.amplitude(j) != ZERO)
            .map(|j| (j, psi.amplitude(j)))
            .collect();
        Self { n: psi.n(), normalize: false, amplitudes }
    }

    /// The state, rescaled to unit norm (a no-op up to `1e-9` unless `normalize`).
    pub fn to_state(&self) -> Result<FockVector> {
        let mut amps = vec![ZERO; 1 << self.n];
        for &(j, a) in &self.amplitudes {
            amps[j.index()] = a;
        }
        FockVector::new(self.n, amps)?.normalized()
    }

    /// Serialized form; floats use the shortest representation that parses back exactly.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n = {}", self.n);
        if self.normalize {
            let _ = writeln!(out, "normalize = true");
        }
        for (j, a) in &self.amplitudes {
            let _ = writeln!(out, "{j} {:?} {:?}", a.re, a.im);
        }
        out
    }
}

pub fn read_state(text: &str) -> Result<FockVector> {
    StateFile::parse(text)?.to_state()
}

pub fn write_state(psi: &FockVector) -> String {
    StateFile::from_state(psi).render()
}
