//! Hermitian eigendecomposition by cyclic complex Jacobi, spectrum multisets
//! and von Neumann entropy.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{argument, validation, Error, Result};
use crate::fock::ZERO;

/// Eigenvalues closer than this are treated as one degenerate cluster.
pub const GAP_THRESHOLD: f64 = 1e-8;

/// Sorted eigenvalue multiset with provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Descending.
    pub values: Vec<f64>,
    /// Dimension of the source matrix.
    pub dim: usize,
    /// Threshold used when stripping, 0 if never stripped.
    pub zero_threshold: f64,
    pub dropped_zeros: usize,
    pub source_tag: String,
}

impl SpectrumReport {
    /// Builds a report from arbitrary values, sorting them descending.
    pub fn new(mut values: Vec<f64>, source_tag: impl Into<String>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(validation("spectrum contains non-finite values"));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(Self {
            dim: values.len(),
            values,
            zero_threshold: 0.0,
            dropped_zeros: 0,
            source_tag: source_tag.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Drops every value with `|λ| < zero_threshold`.
    pub fn stripped(&self, zero_threshold: f64) -> Self {
        let values: Vec<f64> =
            self.values.iter().copied().filter(|v| v.abs() >= zero_threshold).collect();
        Self {
            dropped_zeros: self.dropped_zeros + self.values.len() - values.len(),
            values,
            dim: self.dim,
            zero_threshold,
            source_tag: self.source_tag.clone(),
        }
    }

    /// Appends zeros up to `len` values, keeping the descending order.
    pub fn padded(&self, len: usize) -> Self {
        let mut values = self.values.clone();
        if values.len() < len {
            values.resize(len, 0.0);
            values.sort_by(|a, b| b.total_cmp(a));
        }
        Self { values, ..self.clone() }
    }

    /// Smallest gap between consecutive values, `∞` for fewer than two.
    pub fn min_gap(&self) -> f64 {
        self.values.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min)
    }

    pub fn is_simple(&self, gap_threshold: f64) -> bool {
        self.min_gap() > gap_threshold
    }
}

/// Stopping rule for the Jacobi sweeps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JacobiSettings {
    /// Converged once the off-diagonal Frobenius norm is below `rel_tol · ‖M‖_F`.
    pub rel_tol: f64,
    pub max_sweeps: usize,
    /// Diagonalize disconnected blocks of the sparsity pattern separately.
    pub split_blocks: bool,
}

impl Default for JacobiSettings {
    fn default() -> Self {
        Self { rel_tol: 1e-14, max_sweeps: 100, split_blocks: true }
    }
}

impl JacobiSettings {
    /// Settings used when a comparison lands between agreement and disagreement.
    pub fn tight() -> Self {
        Self { rel_tol: 1e-16, max_sweeps: 200, split_blocks: false }
    }
}

/// Eigendecomposition `M = V Λ V†` with eigenvectors in the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub spectrum: SpectrumReport,
    pub vectors: Array2<Complex64>,
    /// `max |M − M†| / 2` of the input before symmetrization.
    pub asymmetry: f64,
    pub sweeps: usize,
}

impl Eigen {
    pub fn values(&self) -> &[f64] {
        &self.spectrum.values
    }

    pub fn vector(&self, k: usize) -> Array1<Complex64> {
        self.vectors.column(k).to_owned()
    }

    /// `max |M − V Λ V†|`.
    pub fn reconstruction_residual(&self, m: &Array2<Complex64>) -> f64 {
        let d = self.vectors.nrows();
        let mut scaled = self.vectors.clone();
        for (k, mut col) in scaled.columns_mut().into_iter().enumerate() {
            col.mapv_inplace(|x| x * self.spectrum.values[k]);
        }
        let vh = self.vectors.t().mapv(|x| x.conj());
        let rebuilt = scaled.dot(&vh);
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                worst = worst.max((rebuilt[[i, j]] - m[[i, j]]).norm());
            }
        }
        worst
    }

    /// `max |V†V − I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let vh = self.vectors.t().mapv(|x| x.conj());
        let g = vh.dot(&self.vectors);
        let d = g.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[[i, j]] - target).norm());
            }
        }
        worst
    }
}

fn asymmetry(m: &Array2<Complex64>) -> f64 {
    let d = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in i..d {
            worst = worst.max((m[[i, j]] - m[[j, i]].conj()).norm() / 2.0);
        }
    }
    worst
}

/// Eigenvalues of a Hermitian matrix, descending.
pub fn eig_hermitian(m: &Array2<Complex64>, tol: f64) -> Result<SpectrumReport> {
    Ok(eigh(m, tol)?.spectrum)
}

/// Full eigendecomposition with default Jacobi settings.
pub fn eigh(m: &Array2<Complex64>, tol: f64) -> Result<Eigen> {
    eigh_with(m, tol, JacobiSettings::default())
}

/// Full eigendecomposition.
///
/// The input is symmetrized as `(M + M†)/2` after checking that it is
/// Hermitian within `tol`. Eigenvectors are phase-fixed so their
/// largest-magnitude coordinate is real and positive.
pub fn eigh_with(m: &Array2<Complex64>, tol: f64, settings: JacobiSettings) -> Result<Eigen> {
    let (rows, cols) = m.dim();
    if rows != cols {
        return Err(argument(format!("matrix is {rows}×{cols}, not square")));
    }
    if m.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(validation("matrix has non-finite entries"));
    }
    let asym = asymmetry(m);
    if asym > tol {
        return Err(validation(format!("matrix is not Hermitian: asymmetry {asym:.3e} > {tol:.1e}")));
    }
    let d = rows;
    let herm = Array2::from_shape_fn((d, d), |(i, j)| (m[[i, j]] + m[[j, i]].conj()) * 0.5);

    let blocks = if settings.split_blocks { components(&herm) } else { vec![(0..d).collect()] };
    let mut values = vec![0.0; d];
    let mut vectors = Array2::zeros((d, d));
    let mut sweeps = 0;
    for block in blocks {
        let k = block.len();
        let sub = Array2::from_shape_fn((k, k), |(i, j)| herm[[block[i], block[j]]]);
        let (vals, vecs, used) = jacobi(sub, settings)?;
        sweeps = sweeps.max(used);
        for (local, &global) in block.iter().enumerate() {
            values[global] = vals[local];
            for (r, &gr) in block.iter().enumerate() {
                vectors[[gr, global]] = vecs[[r, local]];
            }
        }
    }

    let mut cols: Vec<usize> = (0..d).collect();
    for c in 0..d {
        fix_phase(&mut vectors, c);
    }
    cols.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    order_clusters(&mut cols, &values, &vectors);

    let sorted_values: Vec<f64> = cols.iter().map(|&c| values[c]).collect();
    let sorted_vectors = Array2::from_shape_fn((d, d), |(r, k)| vectors[[r, cols[k]]]);
    Ok(Eigen {
        spectrum: SpectrumReport {
            values: sorted_values,
            dim: d,
            zero_threshold: 0.0,
            dropped_zeros: 0,
            source_tag: String::new(),
        },
        vectors: sorted_vectors,
        asymmetry: asym,
        sweeps,
    })
}

/// Connected components of the nonzero pattern, each sorted ascending.
fn components(m: &Array2<Complex64>) -> Vec<Vec<usize>> {
    let d = m.nrows();
    let mut seen = vec![false; d];
    let mut out = Vec::new();
    for start in 0..d {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut comp = vec![];
        while let Some(i) = stack.pop() {
            comp.push(i);
            for j in 0..d {
                if !seen[j] && m[[i, j]] != ZERO {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

fn off_norm(a: &Array2<Complex64>) -> f64 {
    let d = a.nrows();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                s += a[[i, j]].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn jacobi(mut a: Array2<Complex64>, settings: JacobiSettings) -> Result<(Vec<f64>, Array2<Complex64>, usize)> {
    let d = a.nrows();
    let mut v: Array2<Complex64> = Array2::eye(d);
    let fro = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let target = settings.rel_tol * fro;
    let mut sweeps = 0;
    loop {
        let off = off_norm(&a);
        if off <= target || fro == 0.0 {
            break;
        }
        if sweeps == settings.max_sweeps {
            return Err(Error::Numeric(format!(
                "Jacobi did not converge in {} sweeps: off-diagonal norm {off:.3e} (‖M‖_F = {fro:.3e})",
                settings.max_sweeps
            )));
        }
        sweeps += 1;
        for p in 0..d {
            for q in p + 1..d {
                let apq = a[[p, q]];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                let (app, aqq) = (a[[p, p]].re, a[[q, q]].re);
                if sweeps > 4 && app.abs() + 100.0 * mag == app.abs() && aqq.abs() + 100.0 * mag == aqq.abs() {
                    a[[p, q]] = ZERO;
                    a[[q, p]] = ZERO;
                    continue;
                }
                let phase = apq / mag; // e^{iφ}
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // G: column p = (c, −s e^{−iφ}), column q = (s, c e^{−iφ}) on rows (p, q)
                let gpp = Complex64::new(c, 0.0);
                let gqp = -phase.conj() * s;
                let gpq = Complex64::new(s, 0.0);
                let gqq = phase.conj() * c;
                // A ← A G
                for k in 0..d {
                    let (akp, akq) = (a[[k, p]], a[[k, q]]);
                    a[[k, p]] = akp * gpp + akq * gqp;
                    a[[k, q]] = akp * gpq + akq * gqq;
                }
                // A ← G† A
                for k in 0..d {
                    let (apk, aqk) = (a[[p, k]], a[[q, k]]);
                    a[[p, k]] = gpp.conj() * apk + gqp.conj() * aqk;
                    a[[q, k]] = gpq.conj() * apk + gqq.conj() * aqk;
                }
                a[[p, q]] = ZERO;
                a[[q, p]] = ZERO;
                a[[p, p]] = Complex64::new(a[[p, p]].re, 0.0);
                a[[q, q]] = Complex64::new(a[[q, q]].re, 0.0);
                for k in 0..d {
                    let (vkp, vkq) = (v[[k, p]], v[[k, q]]);
                    v[[k, p]] = vkp * gpp + vkq * gqp;
                    v[[k, q]] = vkp * gpq + vkq * gqq;
                }
            }
        }
    }
    Ok(((0..d).map(|i| a[[i, i]].re).collect(), v, sweeps))
}

/// Rotates column `c` so its largest-magnitude coordinate is real positive.
pub(crate) fn fix_phase(v: &mut Array2<Complex64>, c: usize) {
    let col = v.column(c);
    let mut best = 0;
    let mut best_mag = -1.0;
    for (i, x) in col.iter().enumerate() {
        // earlier coordinates win near-ties so the choice is stable
        if x.norm() > best_mag * (1.0 + 1e-10) {
            best = i;
            best_mag = x.norm();
        }
    }
    if best_mag <= 0.0 {
        return;
    }
    let phase = col[best].conj() / best_mag;
    v.column_mut(c).mapv_inplace(|x| x * phase);
}

/// Within clusters of near-equal eigenvalues, order eigenvectors by the
/// position of their dominant coordinate, then lexicographically by magnitude.
fn order_clusters(cols: &mut [usize], values: &[f64], vectors: &Array2<Complex64>) {
    let key = |c: usize| -> Vec<f64> { vectors.column(c).iter().map(|x| -x.norm()).collect() };
    let mut start = 0;
    while start < cols.len() {
        let mut end = start + 1;
        while end < cols.len() && values[cols[end - 1]] - values[cols[end]] <= GAP_THRESHOLD {
            end += 1;
        }
        if end - start > 1 {
            cols[start..end].sort_by(|&a, &b| {
                let (ka, kb) = (key(a), key(b));
                let lead = |k: &[f64]| k.iter().position(|&x| x < -1e-9).unwrap_or(k.len());
                lead(&ka).cmp(&lead(&kb)).then_with(|| {
                    ka.iter()
                        .zip(&kb)
                        .map(|(x, y)| if (x - y).abs() > 1e-9 { x.total_cmp(y) } else { std::cmp::Ordering::Equal })
                        .find(|o| o.is_ne())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
            });
        }
        start = end;
    }
}

/// Compares two spectra elementwise after sorting; returns `(equal, max_gap)`.
///
/// With `pad`, the shorter spectrum is extended by zeros first.
pub fn spectra_equal(a: &SpectrumReport, b: &SpectrumReport, tol: f64, pad: bool) -> Result<(bool, f64)> {
    let (a, b) = if pad {
        let len = a.len().max(b.len());
        (a.padded(len), b.padded(len))
    } else if a.len() != b.len() {
        return Err(argument(format!(
            "spectra of lengths {} and {} compared without padding",
            a.len(),
            b.len()
        )));
    } else {
        (a.clone(), b.clone())
    };
    let gap = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok((gap <= tol, gap))
}

/// `−Σ λ log₂ λ` in bits.
pub fn von_neumann_entropy(spectrum: &SpectrumReport) -> Result<f64> {
    if let Some(bad) = spectrum.values.iter().find(|&&v| !(-1e-10..=1.0 + 1e-10).contains(&v)) {
        return Err(validation(format!("eigenvalue {bad} outside [0, 1]")));
    }
    let sum = spectrum.sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(validation(format!("eigenvalues sum to {sum}, not 1")));
    }
    Ok(spectrum
        .values
        .iter()
        .map(|&v| v.max(0.0))
        .filter(|&v| v > 0.0)
        .map(|v| -v * v.log2())
        .sum::<f64>()
        .max(0.0))
}
