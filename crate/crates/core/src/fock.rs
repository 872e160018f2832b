//! Fock-space bookkeeping and the Jordan–Wigner realization of the CAR algebra.
//!
//! A basis state `|j_1 … j_n⟩` lives at the integer index `Σ_s j_s · 2^(n−s)`,
//! so mode 1 is the most significant bit. Mode numbers in the public API are
//! 1-based. The creation operator carries the string phase
//! `(−1)^(j_1 + … + j_(t−1))`, which makes every ladder operator a signed
//! partial permutation of the basis with entries in {−1, 0, +1}.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{argument, validation, Result};

/// Largest supported mode count (4096-dimensional dense matrices).
pub const MAX_MODES: usize = 12;

/// Tolerance on `Σ|λ_J|² − 1` for a state to count as normalized.
pub const NORM_TOL: f64 = 1e-12;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub(crate) fn check_modes(n: usize) -> Result<()> {
    if n == 0 || n > MAX_MODES {
        return Err(argument(format!(
            "mode count {n} outside 1..={MAX_MODES}"
        )));
    }
    Ok(())
}

pub(crate) fn check_mode(t: usize, n: usize) -> Result<()> {
    if t == 0 || t > n {
        return Err(argument(format!("mode index {t} outside 1..={n}")));
    }
    Ok(())
}

#[inline]
pub(crate) fn mode_bit(t: usize, n: usize) -> usize {
    1 << (n - t)
}

/// Action of `a_t†` (`dagger`) or `a_t` on the basis state at `index`.
///
/// Returns the image index and the Jordan–Wigner sign, or `None` when the
/// operator annihilates the state.
#[inline]
pub(crate) fn ladder_on_basis(index: usize, t: usize, n: usize, dagger: bool) -> Option<(usize, f64)> {
    let bit = mode_bit(t, n);
    let occupied = index & bit != 0;
    if occupied == dagger {
        return None;
    }
    // modes 1..t-1 sit in the bits above mode t
    let string = (index >> (n - t + 1)).count_ones();
    let sign = if string.is_multiple_of(2) { 1.0 } else { -1.0 };
    Some((index ^ bit, sign))
}

/// Occupation multiindex `J = (j_1, …, j_n)` labelling a Fock basis state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    index: usize,
    n: usize,
}

impl MultiIndex {
    pub fn new(n: usize, index: usize) -> Result<Self> {
        check_modes(n)?;
        if index >> n != 0 {
            return Err(argument(format!("basis index {index} does not fit {n} modes")));
        }
        Ok(Self { index, n })
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let n = bits.len();
        check_modes(n)?;
        let mut index = 0;
        for &b in bits {
            if b > 1 {
                return Err(argument(format!("occupation {b} is not 0 or 1")));
            }
            index = (index << 1) | b as usize;
        }
        Ok(Self { index, n })
    }

    /// All `2^n` multiindices in increasing index order.
    pub fn all(n: usize) -> Result<impl Iterator<Item = MultiIndex>> {
        check_modes(n)?;
        Ok((0..1usize << n).map(move |index| MultiIndex { index, n }))
    }

    pub fn index(self) -> usize {
        self.index
    }

    pub fn n(self) -> usize {
        self.n
    }

    /// Occupation `j_t` of mode `t` (1-based).
    pub fn occupation(self, t: usize) -> Result<u8> {
        check_mode(t, self.n)?;
        Ok(u8::from(self.index & mode_bit(t, self.n) != 0))
    }

    pub fn bits(self) -> Vec<u8> {
        (1..=self.n)
            .map(|t| u8::from(self.index & mode_bit(t, self.n) != 0))
            .collect()
    }

    /// Particle number `Σ_s j_s`.
    pub fn weight(self) -> u32 {
        self.index.count_ones()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl FromStr for MultiIndex {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0u8),
                '1' => Ok(1u8),
                other => Err(argument(format!("invalid occupation character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        MultiIndex::from_bits(&bits)
    }
}

/// One ladder operator factor: `a_mode†` when `dagger`, `a_mode` otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ladder {
    pub mode: usize,
    pub dagger: bool,
}

impl Ladder {
    pub fn create(mode: usize) -> Self {
        Self { mode, dagger: true }
    }

    pub fn annihilate(mode: usize) -> Self {
        Self { mode, dagger: false }
    }
}

impl fmt::Display for Ladder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dagger {
            write!(f, "a{}†", self.mode)
        } else {
            write!(f, "a{}", self.mode)
        }
    }
}

/// Formats a monomial the way it is written, leftmost factor first.
pub fn format_monomial(ops: &[Ladder]) -> String {
    if ops.is_empty() {
        return "I".to_string();
    }
    ops.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

/// Amplitude vector `Σ_J λ_J |J⟩` over the `2^n` Fock basis.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl FockVector {
    pub fn new(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_modes(n)?;
        if amps.len() != 1 << n {
            return Err(argument(format!(
                "{} amplitudes given for {n} modes (expected {})",
                amps.len(),
                1usize << n
            )));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(validation("amplitudes must be finite"));
        }
        Ok(Self { n, amps })
    }

    pub fn from_real(n: usize, amps: &[f64]) -> Result<Self> {
        Self::new(n, amps.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zeros(n: usize) -> Result<Self> {
        check_modes(n)?;
        Ok(Self { n, amps: vec![ZERO; 1 << n] })
    }

    pub fn basis(j: MultiIndex) -> Self {
        let mut amps = vec![ZERO; 1 << j.n()];
        amps[j.index()] = ONE;
        Self { n: j.n(), amps }
    }

    /// The Fock vacuum `|0…0⟩`.
    pub fn vacuum(n: usize) -> Result<Self> {
        Ok(Self::basis(MultiIndex::new(n, 0)?))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn amplitude(&self, j: MultiIndex) -> Complex64 {
        self.amps[j.index()]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    pub(crate) fn require_normalized(&self) -> Result<()> {
        let dev = (self.norm_sqr() - 1.0).abs();
        if dev > NORM_TOL {
            return Err(validation(format!(
                "state is not normalized: |Σ|λ|² − 1| = {dev:.3e}"
            )));
        }
        Ok(())
    }

    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm();
        if norm == 0.0 {
            return Err(validation("cannot normalize the zero vector"));
        }
        Ok(self.scaled(Complex64::new(1.0 / norm, 0.0)))
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self { n: self.n, amps: self.amps.iter().map(|a| a * c).collect() }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &FockVector) -> Complex64 {
        assert_eq!(self.n, other.n, "inner product across different mode counts");
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// Phase-insensitive overlap `|⟨self|other⟩|`.
    pub fn fidelity(&self, other: &FockVector) -> f64 {
        self.inner(other).norm()
    }

    pub fn max_abs_diff(&self, other: &FockVector) -> f64 {
        assert_eq!(self.n, other.n);
        self.amps.iter().zip(&other.amps).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    fn ladder_unchecked(&self, op: Ladder) -> Self {
        let mut out = vec![ZERO; self.amps.len()];
        for (index, &amp) in self.amps.iter().enumerate() {
            if amp == ZERO {
                continue;
            }
            if let Some((target, sign)) = ladder_on_basis(index, op.mode, self.n, op.dagger) {
                out[target] += amp * sign;
            }
        }
        Self { n: self.n, amps: out }
    }

    pub fn apply_ladder(&self, op: Ladder) -> Result<Self> {
        check_mode(op.mode, self.n)?;
        Ok(self.ladder_unchecked(op))
    }

    /// Applies `ops[0] ops[1] … ops[k−1]` to the state (rightmost factor first).
    pub fn apply_monomial(&self, ops: &[Ladder]) -> Result<Self> {
        for op in ops {
            check_mode(op.mode, self.n)?;
        }
        Ok(ops.iter().rev().fold(self.clone(), |v, &op| v.ladder_unchecked(op)))
    }

    /// `⟨ψ| ops |ψ⟩`.
    pub fn expectation(&self, ops: &[Ladder]) -> Result<Complex64> {
        Ok(self.inner(&self.apply_monomial(ops)?))
    }

    /// Indices whose amplitude magnitude exceeds `zero_threshold`.
    pub fn support(&self, zero_threshold: f64) -> impl Iterator<Item = MultiIndex> + '_ {
        let n = self.n;
        self.amps
            .iter()
            .enumerate()
            .filter(move |(_, a)| a.norm() > zero_threshold)
            .map(move |(index, _)| MultiIndex { index, n })
    }
}

/// Dense `2^n × 2^n` operator on the Fock space.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    n: usize,
    entries: Array2<Complex64>,
}

impl OperatorMatrix {
    pub fn from_array(n: usize, entries: Array2<Complex64>) -> Result<Self> {
        check_modes(n)?;
        let d = 1usize << n;
        if entries.dim() != (d, d) {
            return Err(argument(format!(
                "operator on {n} modes must be {d}×{d}, got {:?}",
                entries.dim()
            )));
        }
        if entries.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(validation("operator entries must be finite"));
        }
        Ok(Self { n, entries })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        check_modes(n)?;
        let d = 1usize << n;
        Ok(Self { n, entries: Array2::zeros((d, d)) })
    }

    pub fn identity(n: usize) -> Result<Self> {
        check_modes(n)?;
        Ok(Self { n, entries: Array2::eye(1 << n) })
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn projector(psi: &FockVector) -> Self {
        let a = psi.amplitudes();
        let d = a.len();
        let entries = Array2::from_shape_fn((d, d), |(i, j)| a[i] * a[j].conj());
        Self { n: psi.n(), entries }
    }

    pub(crate) fn from_parts(n: usize, entries: Array2<Complex64>) -> Self {
        debug_assert_eq!(entries.dim(), (1 << n, 1 << n));
        Self { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn entries(&self) -> &Array2<Complex64> {
        &self.entries
    }

    pub fn into_entries(self) -> Array2<Complex64> {
        self.entries
    }

    pub fn get(&self, row: MultiIndex, col: MultiIndex) -> Complex64 {
        self.entries[[row.index(), col.index()]]
    }

    pub fn adjoint(&self) -> Self {
        Self { n: self.n, entries: self.entries.t().mapv(|a| a.conj()) }
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self { n: self.n, entries: self.entries.mapv(|a| a * c) }
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.diag().sum()
    }

    pub fn apply(&self, v: &FockVector) -> FockVector {
        assert_eq!(self.n, v.n(), "operator and state mode counts differ");
        let x = ndarray::ArrayView1::from(v.amplitudes());
        FockVector { n: self.n, amps: self.entries.dot(&x).to_vec() }
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &OperatorMatrix) -> f64 {
        assert_eq!(self.n, other.n);
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entry of `|U†U − I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = self.adjoint() * self;
        prod.max_abs_diff(&OperatorMatrix::identity(self.n).expect("valid mode count"))
    }

    /// `self·other + other·self`.
    pub fn anticommutator(&self, other: &OperatorMatrix) -> Self {
        &(self * other) + &(other * self)
    }

    /// `self·other − other·self`.
    pub fn commutator(&self, other: &OperatorMatrix) -> Self {
        &(self * other) - &(other * self)
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;

    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.n, rhs.n, "operator mode counts differ");
        OperatorMatrix { n: self.n, entries: self.entries.dot(&rhs.entries) }
    }
}

impl Mul<&OperatorMatrix> for OperatorMatrix {
    type Output = OperatorMatrix;

    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        &self * rhs
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;

    fn add(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.n, rhs.n, "operator mode counts differ");
        OperatorMatrix { n: self.n, entries: &self.entries + &rhs.entries }
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;

    fn sub(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.n, rhs.n, "operator mode counts differ");
        OperatorMatrix { n: self.n, entries: &self.entries - &rhs.entries }
    }
}

fn ladder_matrix(t: usize, n: usize, dagger: bool) -> Result<OperatorMatrix> {
    check_modes(n)?;
    check_mode(t, n)?;
    let d = 1usize << n;
    let mut entries = Array2::zeros((d, d));
    for index in 0..d {
        if let Some((target, sign)) = ladder_on_basis(index, t, n, dagger) {
            entries[[target, index]] = Complex64::new(sign, 0.0);
        }
    }
    Ok(OperatorMatrix { n, entries })
}

/// Matrix of the creation operator `a_t†` on `n` modes.
pub fn creation_op(t: usize, n: usize) -> Result<OperatorMatrix> {
    ladder_matrix(t, n, true)
}

/// Matrix of the annihilation operator `a_t`, the adjoint of [`creation_op`].
pub fn annihilation_op(t: usize, n: usize) -> Result<OperatorMatrix> {
    ladder_matrix(t, n, false)
}

pub fn ladder_op(op: Ladder, n: usize) -> Result<OperatorMatrix> {
    ladder_matrix(op.mode, n, op.dagger)
}

/// A monomial in ladder operators viewed as a map on basis indices.
///
/// Every ladder operator sends a basis state to ± another basis state or to
/// zero, so products do too; this keeps products exact and cheap.
#[derive(Clone, Debug)]
pub(crate) struct MonomialAction {
    n: usize,
    images: Vec<Option<(usize, f64)>>,
}

impl MonomialAction {
    pub(crate) fn new(ops: &[Ladder], n: usize) -> Result<Self> {
        check_modes(n)?;
        for op in ops {
            check_mode(op.mode, n)?;
        }
        let images = (0..1usize << n)
            .map(|start| {
                ops.iter().rev().try_fold((start, 1.0), |(index, sign), op| {
                    ladder_on_basis(index, op.mode, n, op.dagger).map(|(next, s)| (next, sign * s))
                })
            })
            .collect();
        Ok(Self { n, images })
    }

    /// Nonzero entries as `(column, row, sign)`.
    pub(crate) fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.images
            .iter()
            .enumerate()
            .filter_map(|(col, img)| img.map(|(row, sign)| (col, row, sign)))
    }

    pub(crate) fn to_matrix(&self) -> OperatorMatrix {
        let d = 1usize << self.n;
        let mut entries = Array2::zeros((d, d));
        for (col, row, sign) in self.entries() {
            entries[[row, col]] = Complex64::new(sign, 0.0);
        }
        OperatorMatrix { n: self.n, entries }
    }
}

/// Exact matrix of the product `ops[0] ops[1] …` on `n` modes.
pub fn monomial_operator(ops: &[Ladder], n: usize) -> Result<OperatorMatrix> {
    Ok(MonomialAction::new(ops, n)?.to_matrix())
}

/// Applies `ops` to `state`; alias kept for symmetry with the operator form.
pub fn apply_monomial(state: &FockVector, ops: &[Ladder]) -> Result<FockVector> {
    state.apply_monomial(ops)
}

/// Outcome of the exhaustive CAR check on `n` modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarReport {
    pub n: usize,
    pub pairs_checked: usize,
    /// `max |a_s a_t† + a_t† a_s − δ_st I|`
    pub mixed_deviation: f64,
    /// `max |a_s a_t + a_t a_s|` and `max |a_s† a_t† + a_t† a_s†|`
    pub pure_deviation: f64,
    /// `max |(a_t†)²|`
    pub nilpotent_deviation: f64,
}

impl CarReport {
    pub fn max_deviation(&self) -> f64 {
        self.mixed_deviation.max(self.pure_deviation).max(self.nilpotent_deviation)
    }

    pub fn is_exact(&self) -> bool {
        self.max_deviation() == 0.0
    }
}

/// Evaluates every anticommutator of the ladder matrices on `n` modes.
pub fn verify_car(n: usize) -> Result<CarReport> {
    check_modes(n)?;
    let create: Vec<_> = (1..=n).map(|t| creation_op(t, n)).collect::<Result<_>>()?;
    let annihilate: Vec<_> = create.iter().map(OperatorMatrix::adjoint).collect();
    let identity = OperatorMatrix::identity(n)?;
    let zero = OperatorMatrix::zeros(n)?;

    let mut report = CarReport {
        n,
        pairs_checked: 0,
        mixed_deviation: 0.0,
        pure_deviation: 0.0,
        nilpotent_deviation: 0.0,
    };
    for s in 0..n {
        for t in 0..n {
            report.pairs_checked += 1;
            let target = if s == t { &identity } else { &zero };
            let mixed = annihilate[s].anticommutator(&create[t]);
            report.mixed_deviation = report.mixed_deviation.max(mixed.max_abs_diff(target));
            let aa = annihilate[s].anticommutator(&annihilate[t]);
            let cc = create[s].anticommutator(&create[t]);
            report.pure_deviation = report.pure_deviation.max(aa.max_abs()).max(cc.max_abs());
        }
        let square = &create[s] * &create[s];
        report.nilpotent_deviation = report.nilpotent_deviation.max(square.max_abs());
    }
    Ok(report)
}

/// Diagonal operator `(−1)^(Σ_{s∈subset} j_s)`; for `subset = {1…m}` this is `Γ`.
pub fn parity_operator(subset: &[usize], n: usize) -> Result<OperatorMatrix> {
    check_modes(n)?;
    let mut mask = 0usize;
    for &t in subset {
        check_mode(t, n)?;
        let bit = mode_bit(t, n);
        if mask & bit != 0 {
            return Err(argument(format!("mode {t} repeated in parity subset")));
        }
        mask |= bit;
    }
    let d = 1usize << n;
    let mut entries = Array2::zeros((d, d));
    for index in 0..d {
        let sign = if (index & mask).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
        entries[[index, index]] = Complex64::new(sign, 0.0);
    }
    Ok(OperatorMatrix { n, entries })
}

/// Fermionic swap of adjacent modes `s` and `s+1`.
///
/// Exchanges `j_s ↔ j_(s+1)` and flips the sign when both are occupied, so
/// that `F a_s F† = a_(s+1)` in the Jordan–Wigner representation.
pub fn mode_swap(state: &FockVector, s: usize) -> Result<FockVector> {
    let n = state.n();
    if s == 0 || s >= n {
        return Err(argument(format!("adjacent swap position {s} outside 1..{n}")));
    }
    let (hi, lo) = (mode_bit(s, n), mode_bit(s + 1, n));
    let mut out = vec![ZERO; state.dim()];
    for (index, &amp) in state.amplitudes().iter().enumerate() {
        let (a, b) = (index & hi != 0, index & lo != 0);
        let mut target = index & !(hi | lo);
        if a {
            target |= lo;
        }
        if b {
            target |= hi;
        }
        out[target] = if a && b { -amp } else { amp };
    }
    FockVector::new(n, out)
}

fn check_order(order: &[usize]) -> Result<()> {
    let n = order.len();
    check_modes(n)?;
    let mut seen = vec![false; n + 1];
    for &t in order {
        check_mode(t, n)?;
        if std::mem::replace(&mut seen[t], true) {
            return Err(argument(format!("mode {t} appears twice in relabeling")));
        }
    }
    Ok(())
}

/// Adjacent-swap positions realizing the relabeling in which new mode `k`
/// is old mode `order[k−1]`.
pub fn swap_network(order: &[usize]) -> Result<Vec<usize>> {
    check_order(order)?;
    let mut current: Vec<usize> = (1..=order.len()).collect();
    let mut swaps = Vec::new();
    for (k, &wanted) in order.iter().enumerate() {
        let mut pos = current.iter().position(|&m| m == wanted).expect("order is a permutation");
        while pos > k {
            swaps.push(pos); // swaps 1-based positions pos and pos+1
            current.swap(pos - 1, pos);
            pos -= 1;
        }
    }
    Ok(swaps)
}

/// State expressed in the relabeled modes: new mode `k` is old mode `order[k−1]`.
///
/// With `P` the swap-network unitary, the result is `P|ψ⟩` and
/// `P a_(order[k−1]) P† = a_k`.
pub fn relabel_modes(state: &FockVector, order: &[usize]) -> Result<FockVector> {
    if order.len() != state.n() {
        return Err(argument("relabeling length differs from mode count"));
    }
    swap_network(order)?.into_iter().try_fold(state.clone(), |v, s| mode_swap(&v, s))
}

/// Inverse of [`relabel_modes`] for the same `order`.
pub fn unrelabel_modes(state: &FockVector, order: &[usize]) -> Result<FockVector> {
    if order.len() != state.n() {
        return Err(argument("relabeling length differs from mode count"));
    }
    swap_network(order)?.into_iter().rev().try_fold(state.clone(), |v, s| mode_swap(&v, s))
}

/// Image of every basis index under the swap-network unitary `P` for `order`:
/// `P|x⟩ = sign · |image⟩`.
pub(crate) fn relabel_index_map(order: &[usize]) -> Result<Vec<(usize, f64)>> {
    check_order(order)?;
    let n = order.len();
    let swaps = swap_network(order)?;
    Ok((0..1usize << n)
        .map(|start| {
            swaps.iter().fold((start, 1.0), |(index, sign), &s| {
                let (hi, lo) = (mode_bit(s, n), mode_bit(s + 1, n));
                let (a, b) = (index & hi != 0, index & lo != 0);
                let mut target = index & !(hi | lo);
                if a {
                    target |= lo;
                }
                if b {
                    target |= hi;
                }
                (target, if a && b { -sign } else { sign })
            })
        })
        .collect())
}

/// Unitary `P` of the swap network for `order` (see [`relabel_modes`]).
pub fn permutation_unitary(order: &[usize]) -> Result<OperatorMatrix> {
    let map = relabel_index_map(order)?;
    let n = order.len();
    let d = 1usize << n;
    let mut entries = Array2::zeros((d, d));
    for (index, &(image, sign)) in map.iter().enumerate() {
        entries[[image, index]] = Complex64::new(sign, 0.0);
    }
    Ok(OperatorMatrix { n, entries })
}

/// `P† X P`: an operator written in relabeled modes, expressed in the original ones.
pub fn unrelabel_operator(op: &OperatorMatrix, order: &[usize]) -> Result<OperatorMatrix> {
    if order.len() != op.n() {
        return Err(argument("relabeling length differs from mode count"));
    }
    let map = relabel_index_map(order)?;
    let d = op.dim();
    let entries = Array2::from_shape_fn((d, d), |(i, j)| {
        let (pi, si) = map[i];
        let (pj, sj) = map[j];
        op.entries[[pi, pj]] * (si * sj)
    });
    Ok(OperatorMatrix { n: op.n(), entries })
}

/// `P X P†`: an operator in the original modes, expressed in relabeled ones.
pub fn relabel_operator(op: &OperatorMatrix, order: &[usize]) -> Result<OperatorMatrix> {
    if order.len() != op.n() {
        return Err(argument("relabeling length differs from mode count"));
    }
    let map = relabel_index_map(order)?;
    let d = op.dim();
    let mut entries = Array2::zeros((d, d));
    for (i, &(pi, si)) in map.iter().enumerate() {
        for (j, &(pj, sj)) in map.iter().enumerate() {
            entries[[pi, pj]] = op.entries[[i, j]] * (si * sj);
        }
    }
    Ok(OperatorMatrix { n: op.n(), entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn multiindex_uses_mode_one_as_msb() {
        let j: MultiIndex = "110".parse().unwrap();
        assert_eq!(j.index(), 6);
        assert_eq!(j.weight(), 2);
        assert_eq!(j.occupation(1).unwrap(), 1);
        assert_eq!(j.occupation(3).unwrap(), 0);
        assert_eq!(j.to_string(), "110");
        for index in 0..8 {
            let j = MultiIndex::new(3, index).unwrap();
            assert_eq!(MultiIndex::from_bits(&j.bits()).unwrap(), j);
        }
        assert!(MultiIndex::new(2, 4).is_err());
        assert!("012".parse::<MultiIndex>().is_err());
        assert!(MultiIndex::from_bits(&[0; 13]).is_err());
    }

    #[test]
    fn single_mode_creation() {
        let a = creation_op(1, 1).unwrap();
        let e = a.entries();
        assert_eq!(e[[1, 0]], ONE);
        assert_eq!(e[[0, 0]], ZERO);
        assert_eq!(e[[0, 1]], ZERO);
        assert_eq!(e[[1, 1]], ZERO);
    }

    #[test]
    fn second_mode_creation_carries_string_phase() {
        let a2 = creation_op(2, 2).unwrap();
        let idx = |s: &str| s.parse::<MultiIndex>().unwrap();
        assert_eq!(a2.get(idx("11"), idx("10")), c(-1.0));
        assert_eq!(a2.get(idx("01"), idx("00")), c(1.0));
        let nonzero = a2.entries().iter().filter(|x| **x != ZERO).count();
        assert_eq!(nonzero, 2);
    }

    #[test]
    fn creation_on_third_mode_after_two_particles() {
        let psi = FockVector::basis("110".parse().unwrap());
        let out = psi.apply_ladder(Ladder::create(3)).unwrap();
        assert_eq!(out, FockVector::basis("111".parse().unwrap()));
    }

    #[test]
    fn annihilation_examples() {
        for n in 1..=4 {
            for t in 1..=n {
                let a = annihilation_op(t, n).unwrap();
                assert_eq!(a, creation_op(t, n).unwrap().adjoint());
            }
        }
        let one = FockVector::basis("1".parse().unwrap());
        let zero = FockVector::vacuum(1).unwrap();
        assert_eq!(one.apply_ladder(Ladder::annihilate(1)).unwrap(), zero);
        assert_eq!(zero.apply_ladder(Ladder::annihilate(1)).unwrap().norm(), 0.0);
        let out = FockVector::basis("11".parse().unwrap()).apply_ladder(Ladder::annihilate(2)).unwrap();
        assert_eq!(out, FockVector::basis("10".parse().unwrap()).scaled(c(-1.0)));
    }

    #[test]
    fn out_of_range_modes_are_rejected() {
        assert!(creation_op(0, 2).is_err());
        assert!(creation_op(3, 2).is_err());
        assert!(annihilation_op(5, 4).is_err());
        assert!(creation_op(1, 13).is_err());
        let psi = FockVector::vacuum(2).unwrap();
        assert!(mode_swap(&psi, 2).is_err());
        assert!(mode_swap(&psi, 0).is_err());
        assert!(psi.apply_monomial(&[Ladder::create(3)]).is_err());
    }

    #[test]
    fn car_is_exact_up_to_six_modes() {
        for n in 1..=6 {
            let report = verify_car(n).unwrap();
            assert!(report.is_exact(), "n={n}: {report:?}");
            assert_eq!(report.pairs_checked, n * n);
        }
    }

    #[test]
    fn parity_operator_examples() {
        assert_eq!(parity_operator(&[], 3).unwrap(), OperatorMatrix::identity(3).unwrap());
        let g = parity_operator(&[1], 2).unwrap();
        let diag: Vec<f64> = g.entries().diag().iter().map(|x| x.re).collect();
        assert_eq!(diag, vec![1.0, 1.0, -1.0, -1.0]);
        let g = parity_operator(&[1, 3], 4).unwrap();
        assert_eq!(&g * &g, OperatorMatrix::identity(4).unwrap());
        assert!(parity_operator(&[1, 1], 2).is_err());
    }

    #[test]
    fn parity_commutes_with_number_and_anticommutes_with_ladders() {
        let n = 4;
        let subset = [2, 3];
        let g = parity_operator(&subset, n).unwrap();
        for t in 1..=n {
            let a = annihilation_op(t, n).unwrap();
            let ad = creation_op(t, n).unwrap();
            assert_eq!(g.commutator(&(&a * &ad)).max_abs(), 0.0);
            if subset.contains(&t) {
                assert_eq!(g.anticommutator(&a).max_abs(), 0.0);
            }
        }
    }

    #[test]
    fn mode_swap_examples() {
        let psi = FockVector::basis("10".parse().unwrap());
        assert_eq!(mode_swap(&psi, 1).unwrap(), FockVector::basis("01".parse().unwrap()));
        let psi = FockVector::basis("11".parse().unwrap());
        assert_eq!(mode_swap(&psi, 1).unwrap(), psi.scaled(c(-1.0)));
    }

    #[test]
    fn monomial_examples() {
        let psi = FockVector::basis("100".parse().unwrap());
        assert_eq!(psi.apply_monomial(&[]).unwrap(), psi);
        let number = [Ladder::create(1), Ladder::annihilate(1)];
        assert_eq!(psi.apply_monomial(&number).unwrap(), psi);
        let psi = FockVector::basis("11".parse().unwrap());
        let out = psi.apply_monomial(&[Ladder::annihilate(1), Ladder::annihilate(2)]).unwrap();
        assert_eq!(out, FockVector::vacuum(2).unwrap().scaled(c(-1.0)));
    }

    #[test]
    fn monomial_action_matches_dense_products() {
        let n = 3;
        let ops = [Ladder::create(2), Ladder::annihilate(3), Ladder::create(1), Ladder::annihilate(2)];
        let dense = ops
            .iter()
            .map(|&op| ladder_op(op, n).unwrap())
            .fold(OperatorMatrix::identity(n).unwrap(), |acc, m| acc * &m);
        assert_eq!(monomial_operator(&ops, n).unwrap(), dense);
    }

    #[test]
    fn swap_network_reaches_target_order() {
        let order = [3, 1, 4, 2];
        let swaps = swap_network(&order).unwrap();
        let mut labels = vec![1, 2, 3, 4];
        for s in swaps {
            labels.swap(s - 1, s);
        }
        assert_eq!(labels, order);
        assert!(swap_network(&[1, 1, 2]).is_err());
        assert!(swap_network(&[1, 4, 2]).is_err());
    }

    #[test]
    fn permutation_unitary_conjugates_ladders() {
        let order = [3, 1, 4, 2];
        let n = order.len();
        let p = permutation_unitary(&order).unwrap();
        assert_eq!(p.unitarity_defect(), 0.0);
        for (k, &old) in order.iter().enumerate() {
            let lhs = &(&p * &annihilation_op(old, n).unwrap()) * &p.adjoint();
            assert_eq!(lhs, annihilation_op(k + 1, n).unwrap());
        }
    }

    #[test]
    fn operator_relabeling_matches_dense_conjugation() {
        let order = [2, 3, 1];
        let p = permutation_unitary(&order).unwrap();
        let x = &creation_op(1, 3).unwrap() * &annihilation_op(3, 3).unwrap();
        let x = &x + &parity_operator(&[2], 3).unwrap();
        let forward = relabel_operator(&x, &order).unwrap();
        assert_eq!(forward, &(&p * &x) * &p.adjoint());
        assert_eq!(unrelabel_operator(&forward, &order).unwrap(), x);
    }

    #[test]
    fn permutation_unitary_matches_state_relabeling() {
        let order = [4, 2, 1, 3];
        let amps: Vec<f64> = (0..16).map(|i| i as f64 - 7.5).collect();
        let psi = FockVector::from_real(4, &amps).unwrap();
        let p = permutation_unitary(&order).unwrap();
        assert_eq!(p.apply(&psi), relabel_modes(&psi, &order).unwrap());
    }

    #[test]
    fn unrelabel_inverts_relabel() {
        let amps: Vec<f64> = (0..16).map(|i| (i as f64 + 1.0).sqrt()).collect();
        let psi = FockVector::from_real(4, &amps).unwrap();
        let order = [2, 4, 1, 3];
        let back = unrelabel_modes(&relabel_modes(&psi, &order).unwrap(), &order).unwrap();
        assert_eq!(back, psi);
    }
}
