//! Mode-reduced states of a bipartition and the parity-SSR purification.
//!
//! Marginals are always computed as expectations of the block's own matrix
//! units on the full Fock space, Jordan–Wigner strings included. The
//! coefficient-matrix picture of [`tensor_embed`] is only used for comparison
//! and for applying block operators efficiently.

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::density::{
    annihilators_on, parity_classify, DensityMatrix, DensityTag, Parity, ParityClass,
    PARITY_ZERO_THRESHOLD,
};
use crate::error::{argument, precondition, validation, Error, Result};
use crate::fock::{
    annihilation_op, check_modes, creation_op, relabel_modes, unrelabel_modes,
    unrelabel_operator, FockVector, MultiIndex, OperatorMatrix, ONE, ZERO,
};
use crate::sample::haar_unitary;
use crate::spectral::{
    eigh, spectra_equal, von_neumann_entropy, SpectrumReport, GAP_THRESHOLD,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Block {
    First,
    Second,
}

/// Split of the modes into two blocks.
///
/// After relabeling (new mode `k` is old mode `order[k−1]`), the first block
/// is modes `1…m` and the second is `m+1…n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bipartition {
    n: usize,
    m: usize,
    order: Vec<usize>,
}

impl Bipartition {
    pub fn contiguous(n: usize, m: usize) -> Result<Self> {
        Self::with_order(n, m, (1..=n).collect())
    }

    /// First block is `subset` (in ascending order), second block the rest.
    pub fn from_subset(n: usize, subset: &[usize]) -> Result<Self> {
        check_modes(n)?;
        let mut first = subset.to_vec();
        first.sort_unstable();
        if first.windows(2).any(|w| w[0] == w[1]) {
            return Err(argument("repeated mode in subset"));
        }
        if let Some(&bad) = first.iter().find(|&&t| t == 0 || t > n) {
            return Err(argument(format!("mode {bad} outside 1..={n}")));
        }
        let mut order = first.clone();
        order.extend((1..=n).filter(|t| !first.contains(t)));
        Self::with_order(n, first.len(), order)
    }

    pub fn with_order(n: usize, m: usize, order: Vec<usize>) -> Result<Self> {
        check_modes(n)?;
        if n < 2 {
            return Err(argument("a bipartition needs at least two modes"));
        }
        if m == 0 || m >= n {
            return Err(argument(format!("first block size {m} outside 1..={}", n - 1)));
        }
        if order.len() != n {
            return Err(argument("mode order has the wrong length"));
        }
        let mut seen = vec![false; n + 1];
        for &t in &order {
            if t == 0 || t > n || std::mem::replace(&mut seen[t], true) {
                return Err(argument("mode order is not a permutation of 1..=n"));
            }
        }
        Ok(Self { n, m, order })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn is_contiguous(&self) -> bool {
        self.order.iter().enumerate().all(|(k, &t)| t == k + 1)
    }

    /// Original labels of the first block's modes.
    pub fn first_modes(&self) -> &[usize] {
        &self.order[..self.m]
    }

    pub fn second_modes(&self) -> &[usize] {
        &self.order[self.m..]
    }

    pub fn block_size(&self, block: Block) -> usize {
        match block {
            Block::First => self.m,
            Block::Second => self.n - self.m,
        }
    }

    fn check_state(&self, psi: &FockVector) -> Result<()> {
        if psi.n() != self.n {
            return Err(argument(format!(
                "bipartition over {} modes applied to a {}-mode state",
                self.n,
                psi.n()
            )));
        }
        Ok(())
    }
}

/// Marginal on `modes` (mode labels of `psi`'s own frame):
/// entry `(J, K) = ⟨ψ| A_KJ |ψ⟩ = ⟨C_K ψ | C_J ψ⟩`.
pub(crate) fn block_marginal(psi: &FockVector, modes: &[usize]) -> Result<Array2<Complex64>> {
    let k = modes.len();
    let reduced: Vec<FockVector> = MultiIndex::all(k)?
        .map(|j| psi.apply_monomial(&annihilators_on(j, modes)))
        .collect::<Result<_>>()?;
    let d = 1usize << k;
    Ok(Array2::from_shape_fn((d, d), |(j, kk)| reduced[kk].inner(&reduced[j])))
}

fn frame_state(psi: &FockVector, part: &Bipartition) -> Result<FockVector> {
    if part.is_contiguous() {
        Ok(psi.clone())
    } else {
        relabel_modes(psi, part.order())
    }
}

/// Mode-reduced state of one block.
pub fn reduce_modes(psi: &FockVector, part: &Bipartition, block: Block) -> Result<DensityMatrix> {
    part.check_state(psi)?;
    psi.require_normalized()?;
    let framed = frame_state(psi, part)?;
    let modes: Vec<usize> = match block {
        Block::First => (1..=part.m).collect(),
        Block::Second => (part.m + 1..=part.n).collect(),
    };
    DensityMatrix::new(block_marginal(&framed, &modes)?, DensityTag::ModeReduced)
}

/// Both marginals and the comparison of their zero-padded spectra.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Equispectrality {
    pub equal: bool,
    pub max_gap: f64,
    pub first: SpectrumReport,
    pub second: SpectrumReport,
}

pub fn equispectral(psi: &FockVector, part: &Bipartition, tol: f64) -> Result<Equispectrality> {
    let mut first = reduce_modes(psi, part, Block::First)?.spectrum()?;
    let mut second = reduce_modes(psi, part, Block::Second)?.spectrum()?;
    first.source_tag = "mode-reduced first".into();
    second.source_tag = "mode-reduced second".into();
    let (equal, max_gap) = spectra_equal(&first, &second, tol, true)?;
    Ok(Equispectrality { equal, max_gap, first, second })
}

/// `Re(c₀₀ c₁₁ conj(c₀₁) conj(c₁₀))`, which vanishes exactly for two-mode
/// states with equispectral marginals. Order: `(c₀₀, c₀₁, c₁₀, c₁₁)`.
pub fn two_mode_criterion(c: &[Complex64; 4]) -> f64 {
    (c[0] * c[3] * c[1].conj() * c[2].conj()).re
}

/// Amplitudes arranged as a `2^m × 2^(n−m)` coefficient matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorEmbedding {
    pub m: usize,
    pub n: usize,
    pub coeffs: Array2<Complex64>,
}

impl TensorEmbedding {
    /// `Ω₁ = M M†`.
    pub fn omega1(&self) -> Array2<Complex64> {
        self.coeffs.dot(&self.coeffs.t().mapv(|x| x.conj()))
    }

    /// `Ω₂ = Mᵀ conj(M)`.
    pub fn omega2(&self) -> Array2<Complex64> {
        self.coeffs.t().dot(&self.coeffs.mapv(|x| x.conj()))
    }
}

pub fn tensor_embed(psi: &FockVector, m: usize) -> Result<TensorEmbedding> {
    let n = psi.n();
    if m == 0 || m >= n {
        return Err(argument(format!("block size {m} outside 1..={}", n.saturating_sub(1))));
    }
    Ok(TensorEmbedding { m, n, coeffs: coefficients(psi, n - m) })
}

fn coefficients(psi: &FockVector, b: usize) -> Array2<Complex64> {
    let a = psi.n() - b;
    let amps = psi.amplitudes();
    Array2::from_shape_fn((1 << a, 1 << b), |(x, y)| amps[(x << b) | y])
}

fn from_coefficients(n: usize, m: &Array2<Complex64>) -> Result<FockVector> {
    FockVector::new(n, m.iter().copied().collect())
}

/// Working frame of the purification: the larger block first.
#[derive(Clone, Debug)]
struct Frame {
    order: Vec<usize>,
    /// Size of the leading (larger or equal) block.
    a: usize,
    /// Size of the trailing block.
    b: usize,
    swapped: bool,
}

impl Frame {
    fn new(part: &Bipartition) -> Self {
        let (n, m) = (part.n, part.m);
        if m >= n - m {
            Frame { order: part.order.clone(), a: m, b: n - m, swapped: false }
        } else {
            let mut order = part.second_modes().to_vec();
            order.extend_from_slice(part.first_modes());
            Frame { order, a: n - m, b: m, swapped: true }
        }
    }

    fn n(&self) -> usize {
        self.a + self.b
    }

    fn is_identity(&self) -> bool {
        self.order.iter().enumerate().all(|(k, &t)| t == k + 1)
    }

    fn enter(&self, psi: &FockVector) -> Result<FockVector> {
        if self.is_identity() {
            Ok(psi.clone())
        } else {
            relabel_modes(psi, &self.order)
        }
    }

    fn leave(&self, psi: &FockVector) -> Result<FockVector> {
        if self.is_identity() {
            Ok(psi.clone())
        } else {
            unrelabel_modes(psi, &self.order)
        }
    }

    fn leave_operator(&self, op: &OperatorMatrix) -> Result<OperatorMatrix> {
        if self.is_identity() {
            Ok(op.clone())
        } else {
            unrelabel_operator(op, &self.order)
        }
    }

    fn leading_modes(&self) -> Vec<usize> {
        (1..=self.a).collect()
    }

    fn trailing_modes(&self) -> Vec<usize> {
        (self.a + 1..=self.n()).collect()
    }
}

fn check_spectrum(lambda: &[f64]) -> Result<()> {
    if lambda.iter().any(|x| !x.is_finite() || *x < -1e-12) {
        return Err(validation("spectrum entries must be finite and nonnegative"));
    }
    let total: f64 = lambda.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(validation(format!("spectrum sums to {total}, not 1")));
    }
    Ok(())
}

/// `Σ_t √λ_t |0…0 bin(t)⟩ ⊗ |bin(t)⟩` in the frame with the larger block first.
fn canonical_in_frame(lambda: &[f64], a: usize, b: usize) -> Result<FockVector> {
    if lambda.len() != 1 << b {
        return Err(validation(format!(
            "spectrum has {} entries, expected {} for the smaller block",
            lambda.len(),
            1usize << b
        )));
    }
    check_spectrum(lambda)?;
    let mut amps = vec![ZERO; 1 << (a + b)];
    for (t, &l) in lambda.iter().enumerate() {
        amps[(t << b) | t] = Complex64::new(l.max(0.0).sqrt(), 0.0);
    }
    FockVector::new(a + b, amps)
}

/// Even state whose two marginals both have spectrum `lambda` (zero-padded on
/// the larger block). `lambda` has `2^min(m, n−m)` entries; when the first
/// block is the smaller one the modes are relabeled so the larger comes first.
pub fn canonical_ssr_purification(lambda: &[f64], part: &Bipartition) -> Result<FockVector> {
    let frame = Frame::new(part);
    frame.leave(&canonical_in_frame(lambda, frame.a, frame.b)?)
}

/// `W ⊗ I` on the leading block: the image of `Σ W_XY A_XY` over the
/// leading block's matrix units.
fn embed_leading(w: &Array2<Complex64>, n: usize, b: usize) -> OperatorMatrix {
    let d = 1usize << n;
    let mask = (1usize << b) - 1;
    let entries = Array2::from_shape_fn((d, d), |(r, c)| {
        if r & mask == c & mask {
            w[[r >> b, c >> b]]
        } else {
            ZERO
        }
    });
    OperatorMatrix::from_parts(n, entries)
}

/// Image of `Σ V_YY' A_YY'` over the trailing block's matrix units.
///
/// The Jordan–Wigner strings of the trailing modes run through the leading
/// block, giving the sign `(−1)^(|x|(|Y|+|Y'|))` for leading occupation `x`.
fn embed_trailing(v: &Array2<Complex64>, n: usize, b: usize) -> OperatorMatrix {
    let d = 1usize << n;
    let mask = (1usize << b) - 1;
    let entries = Array2::from_shape_fn((d, d), |(r, c)| {
        if r >> b != c >> b {
            return ZERO;
        }
        let (y, y2) = (r & mask, c & mask);
        let x = r >> b;
        let odd = (x.count_ones() * (y.count_ones() + y2.count_ones())) % 2 == 1;
        if odd {
            -v[[y, y2]]
        } else {
            v[[y, y2]]
        }
    });
    OperatorMatrix::from_parts(n, entries)
}

fn apply_leading(w: &Array2<Complex64>, psi: &FockVector, b: usize) -> Result<FockVector> {
    from_coefficients(psi.n(), &w.dot(&coefficients(psi, b)))
}

fn apply_trailing(v: &Array2<Complex64>, psi: &FockVector, b: usize) -> Result<FockVector> {
    let m = coefficients(psi, b);
    let (da, db) = m.dim();
    let out = Array2::from_shape_fn((da, db), |(x, y)| {
        let px = x.count_ones();
        (0..db)
            .map(|y2| {
                let odd = (px * (y.count_ones() + y2.count_ones())) % 2 == 1;
                let term = v[[y, y2]] * m[[x, y2]];
                if odd {
                    -term
                } else {
                    term
                }
            })
            .sum()
    });
    from_coefficients(psi.n(), &out)
}

fn adjoint(u: &Array2<Complex64>) -> Array2<Complex64> {
    u.t().mapv(|x| x.conj())
}

/// Eigenpairs of `omega` restricted to one parity sector, descending,
/// with eigenvectors embedded back into the full block space.
fn sector_eigen(omega: &Array2<Complex64>, parity: Parity) -> Result<Vec<(f64, Vec<Complex64>)>> {
    let idx: Vec<usize> = (0..omega.nrows()).filter(|&i| Parity::of_index(i) == parity).collect();
    let k = idx.len();
    let sub = Array2::from_shape_fn((k, k), |(i, j)| omega[[idx[i], idx[j]]]);
    let e = eigh(&sub, 1e-9)?;
    Ok((0..k)
        .map(|c| {
            let mut v = vec![ZERO; omega.nrows()];
            for (r, &i) in idx.iter().enumerate() {
                v[i] = e.vectors[[r, c]];
            }
            (e.spectrum.values[c], v)
        })
        .collect())
}

fn full_eigen(omega: &Array2<Complex64>) -> Result<Vec<(f64, Vec<Complex64>)>> {
    let e = eigh(omega, 1e-9)?;
    Ok((0..omega.nrows())
        .map(|c| (e.spectrum.values[c], e.vectors.column(c).to_vec()))
        .collect())
}

fn max_entry_gap(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Output of [`reconstruct_locals`].
#[derive(Clone, Debug)]
pub struct PurificationResult {
    /// Even canonical state.
    pub phi: FockVector,
    /// Unitary in the first block's subalgebra.
    pub u1: OperatorMatrix,
    /// Unitary in the second block's subalgebra.
    pub u2: OperatorMatrix,
    /// Weights `λ_t` of `φ`, indexed by the smaller block's label `t`.
    pub weights: Vec<f64>,
    /// Parity of `U₁` and `U₂` when they are parity-homogeneous.
    pub u1_parity: Option<Parity>,
    pub u2_parity: Option<Parity>,
    /// Largest entrywise gap between the marginals of `U₂U₁φ` and of `ψ`.
    pub marginal_gap: f64,
    /// `|⟨ψ|U₁U₂φ⟩|`.
    pub fidelity: f64,
    /// Smallest gap in the smaller block's spectrum.
    pub min_spectral_gap: f64,
    pub simple_spectrum: bool,
    pub recovered: bool,
    pub parity: ParityClass,
}

impl PurificationResult {
    /// Largest deviation from graded locality.
    ///
    /// For `s` outside a unitary's block, an even unitary must commute with
    /// `a_s` and `a_s†` and an odd one must anticommute with them.
    pub fn locality_defect(&self, part: &Bipartition) -> Result<f64> {
        let n = part.n();
        let mut worst: f64 = 0.0;
        let checks = [
            (&self.u1, self.u1_parity, part.second_modes()),
            (&self.u2, self.u2_parity, part.first_modes()),
        ];
        for (u, parity, others) in checks {
            let Some(parity) = parity else {
                return Err(precondition("locality is defined for parity-homogeneous unitaries"));
            };
            for &s in others {
                for op in [creation_op(s, n)?, annihilation_op(s, n)?] {
                    let defect = match parity {
                        Parity::Even => u.commutator(&op),
                        Parity::Odd => u.anticommutator(&op),
                    };
                    worst = worst.max(defect.max_abs());
                }
            }
        }
        Ok(worst)
    }
}

/// Reconstructs `φ`, `U₁`, `U₂` with `ψ = U₁U₂φ` from an equispectral `ψ`.
///
/// Works in the frame with the larger block leading. For parity-definite
/// `ψ` the eigenbases are chosen sector by sector so that the trailing
/// unitary is even and the leading one carries the parity of `ψ`. Each
/// leading eigenvector is phase-aligned against `ψ`; state recovery is
/// claimed only when the smaller block's spectrum is simple.
pub fn reconstruct_locals(psi: &FockVector, part: &Bipartition, tol: f64) -> Result<PurificationResult> {
    part.check_state(psi)?;
    psi.require_normalized()?;
    let eq = equispectral(psi, part, tol)?;
    if !eq.equal {
        return Err(precondition(format!(
            "mode-reduced spectra differ by {:.3e}: {:?} vs {:?}",
            eq.max_gap, eq.first.values, eq.second.values
        )));
    }
    let frame = Frame::new(part);
    let (a, b, n) = (frame.a, frame.b, frame.n());
    let psi_f = frame.enter(psi)?;
    let parity = parity_classify(psi, PARITY_ZERO_THRESHOLD)?;
    let omega_lead = block_marginal(&psi_f, &frame.leading_modes())?;
    let omega_trail = block_marginal(&psi_f, &frame.trailing_modes())?;
    let db = 1usize << b;
    let da = 1usize << a;

    // trailing block: label t ↦ eigenvector g_t
    let mut labels: Vec<(f64, Vec<Complex64>)> = vec![(0.0, vec![]); db];
    match parity.parity() {
        Some(_) => {
            for sector in [Parity::Even, Parity::Odd] {
                let pairs = sector_eigen(&omega_trail, sector)?;
                let slots = (0..db).filter(|&t| Parity::of_index(t) == sector);
                for (slot, pair) in slots.zip(pairs) {
                    labels[slot] = pair;
                }
            }
        }
        None => {
            for (slot, pair) in full_eigen(&omega_trail)?.into_iter().enumerate() {
                labels[slot] = pair;
            }
        }
    }
    let mut u2 = Array2::zeros((db, db));
    for (t, (_, g)) in labels.iter().enumerate() {
        for (y, &gy) in g.iter().enumerate() {
            u2[[y, t]] = gy;
        }
    }
    let weights: Vec<f64> = labels.iter().map(|(l, _)| l.max(0.0)).collect();

    // ψ̃ = U₂†ψ and its leading marginal
    let tilde = apply_trailing(&adjoint(&u2), &psi_f, b)?;
    let omega_tilde = block_marginal(&tilde, &frame.leading_modes())?;
    let m_tilde = coefficients(&tilde, b);

    // leading block: column x ↦ eigenvector f_x, columns t < 2^b paired with labels
    let mut columns: Vec<Option<Vec<Complex64>>> = vec![None; da];
    match parity.parity() {
        Some(p) => {
            for sector in [Parity::Even, Parity::Odd] {
                let mut pairs = sector_eigen(&omega_tilde, sector)?.into_iter();
                // labels whose leading partner lives in this sector, heaviest first
                let mut wanted: Vec<usize> = (0..db)
                    .filter(|&t| sector_of(t, p) == sector)
                    .collect();
                wanted.sort_by(|&s, &t| weights[t].total_cmp(&weights[s]).then(s.cmp(&t)));
                for t in wanted {
                    columns[t] = pairs.next().map(|(_, f)| f);
                }
                for x in (db..da).filter(|&x| sector_of(x, p) == sector) {
                    columns[x] = pairs.next().map(|(_, f)| f);
                }
            }
        }
        None => {
            for (x, (_, f)) in full_eigen(&omega_tilde)?.into_iter().enumerate() {
                columns[x] = Some(f);
            }
        }
    }
    let mut u1 = Array2::zeros((da, da));
    for (x, col) in columns.into_iter().enumerate() {
        let mut f = col.ok_or_else(|| Error::Numeric("parity sectors could not be paired".into()))?;
        if x < db {
            let c: Complex64 = f.iter().enumerate().map(|(r, fr)| fr.conj() * m_tilde[[r, x]]).sum();
            if c.norm() > 1e-300 {
                let phase = c / c.norm();
                f.iter_mut().for_each(|v| *v *= phase);
            }
        }
        for (r, fr) in f.into_iter().enumerate() {
            u1[[r, x]] = fr;
        }
    }

    let phi_f = canonical_in_frame(&weights, a, b)?;
    let image = apply_trailing(&u2, &apply_leading(&u1, &phi_f, b)?, b)?;
    let marginal_gap = max_entry_gap(&block_marginal(&image, &frame.leading_modes())?, &omega_lead)
        .max(max_entry_gap(&block_marginal(&image, &frame.trailing_modes())?, &omega_trail));
    if marginal_gap > tol {
        return Err(Error::Numeric(format!(
            "constructed unitaries do not reproduce the marginals (gap {marginal_gap:.3e}); \
             the eigenbasis construction fails for this {parity:?} input"
        )));
    }
    let fidelity = psi_f.fidelity(&image);
    let mut small = weights.clone();
    small.sort_by(|x, y| y.total_cmp(x));
    let min_spectral_gap = small.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
    let simple_spectrum = min_spectral_gap > GAP_THRESHOLD;

    let block_parity = |u: &Array2<Complex64>| -> Option<Parity> {
        let mut seen = [false; 2];
        for ((r, c), v) in u.indexed_iter() {
            if v.norm() > 1e-12 {
                seen[((r ^ c).count_ones() % 2) as usize] = true;
            }
        }
        match seen {
            [true, false] => Some(Parity::Even),
            [false, true] => Some(Parity::Odd),
            _ => None,
        }
    };
    let (lead_parity, trail_parity) = (block_parity(&u1), block_parity(&u2));
    let lead = frame.leave_operator(&embed_leading(&u1, n, b))?;
    let trail = frame.leave_operator(&embed_trailing(&u2, n, b))?;
    let phi = frame.leave(&phi_f)?;
    let (u1, u2, u1_parity, u2_parity) = if frame.swapped {
        (trail, lead, trail_parity, lead_parity)
    } else {
        (lead, trail, lead_parity, trail_parity)
    };
    Ok(PurificationResult {
        phi,
        u1,
        u2,
        weights,
        u1_parity,
        u2_parity,
        marginal_gap,
        fidelity,
        min_spectral_gap,
        simple_spectrum,
        recovered: simple_spectrum && fidelity >= 1.0 - tol,
        parity,
    })
}

/// Sector of the leading-block partner of label `t` for a state of parity `p`.
fn sector_of(t: usize, p: Parity) -> Parity {
    match p {
        Parity::Even => Parity::of_index(t),
        Parity::Odd => Parity::of_index(t).flip(),
    }
}

/// Random unitary on a block of `k` modes that is block diagonal in parity,
/// times a parity flip of the block's last mode when `parity` is odd.
pub fn random_block_unitary<R: Rng + ?Sized>(k: usize, parity: Parity, rng: &mut R) -> Array2<Complex64> {
    let d = 1usize << k;
    let mut u = Array2::zeros((d, d));
    for sector in [Parity::Even, Parity::Odd] {
        let idx: Vec<usize> = (0..d).filter(|&i| Parity::of_index(i) == sector).collect();
        let h = haar_unitary(idx.len(), rng);
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                u[[i, j]] = h[[r, c]];
            }
        }
    }
    if parity == Parity::Odd {
        let flip = Array2::from_shape_fn((d, d), |(r, c)| if r == c ^ 1 { ONE } else { ZERO });
        u = u.dot(&flip);
    }
    u
}

/// Test instance `U₁U₂φ` for a contiguous bipartition: `φ` canonical with
/// weights `lambda`, `U₂` even and `U₁` of the requested parity.
pub fn forward_instance<R: Rng + ?Sized>(
    lambda: &[f64],
    part: &Bipartition,
    u1_parity: Parity,
    rng: &mut R,
) -> Result<FockVector> {
    let frame = Frame::new(part);
    let (a, b) = (frame.a, frame.b);
    let phi = canonical_in_frame(lambda, a, b)?;
    let w = random_block_unitary(a, if frame.swapped { Parity::Even } else { u1_parity }, rng);
    let v = random_block_unitary(b, if frame.swapped { u1_parity } else { Parity::Even }, rng);
    frame.leave(&apply_trailing(&v, &apply_leading(&w, &phi, b)?, b)?)
}

/// Von Neumann entropies of the two marginals, in bits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub s1: f64,
    pub s2: f64,
    /// `|S₁ − S₂|`; zero for pure states of a tensor-product system.
    pub violation: f64,
}

pub fn entropy_report(psi: &FockVector, part: &Bipartition) -> Result<EntropyReport> {
    let s1 = von_neumann_entropy(&reduce_modes(psi, part, Block::First)?.spectrum()?)?;
    let s2 = von_neumann_entropy(&reduce_modes(psi, part, Block::Second)?.spectrum()?)?;
    Ok(EntropyReport { s1, s2, violation: (s1 - s2).abs() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::block_matrix_unit;
    use crate::sample::{random_spectrum, rng_from_seed, sample_state, Ensemble};
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn uniform() -> FockVector {
        FockVector::from_real(2, &[0.5; 4]).unwrap()
    }

    fn bell() -> FockVector {
        let h = 1.0 / 2f64.sqrt();
        FockVector::from_real(2, &[h, 0.0, 0.0, h]).unwrap()
    }

    #[test]
    fn bipartition_validation() {
        assert!(Bipartition::contiguous(2, 0).is_err());
        assert!(Bipartition::contiguous(2, 2).is_err());
        assert!(Bipartition::contiguous(1, 1).is_err());
        assert!(Bipartition::from_subset(3, &[1, 1]).is_err());
        assert!(Bipartition::from_subset(3, &[4]).is_err());
        assert!(Bipartition::with_order(3, 1, vec![1, 2, 2]).is_err());
        let p = Bipartition::from_subset(4, &[3, 1]).unwrap();
        assert_eq!(p.order(), &[1, 3, 2, 4]);
        assert_eq!(p.first_modes(), &[1, 3]);
        assert!(!p.is_contiguous());
    }

    #[test]
    fn two_mode_marginals_match_expectations() {
        use crate::fock::Ladder;
        let psi = sample_state(2, Ensemble::General, 5).unwrap();
        let part = Bipartition::contiguous(2, 1).unwrap();
        for (block, t) in [(Block::First, 1), (Block::Second, 2)] {
            let w = reduce_modes(&psi, &part, block).unwrap();
            let ev = |ops: &[Ladder]| psi.expectation(ops).unwrap();
            let expected = ndarray::arr2(&[
                [ev(&[Ladder::annihilate(t), Ladder::create(t)]), ev(&[Ladder::create(t)])],
                [ev(&[Ladder::annihilate(t)]), ev(&[Ladder::create(t), Ladder::annihilate(t)])],
            ]);
            assert!(w.max_abs_diff(&expected) <= 1e-15);
        }
    }

    #[test]
    fn bell_marginals_are_maximally_mixed() {
        let part = Bipartition::contiguous(2, 1).unwrap();
        for block in [Block::First, Block::Second] {
            let w = reduce_modes(&bell(), &part, block).unwrap();
            let expected = ndarray::arr2(&[[c(0.5), c(0.0)], [c(0.0), c(0.5)]]);
            assert!(w.max_abs_diff(&expected) <= 1e-15);
        }
        let eq = equispectral(&bell(), &part, 1e-9).unwrap();
        assert!(eq.equal);
        assert!((eq.first.values[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn uniform_state_marginals() {
        let part = Bipartition::contiguous(2, 1).unwrap();
        let w1 = reduce_modes(&uniform(), &part, Block::First).unwrap();
        assert!(w1.max_abs_diff(&Array2::from_elem((2, 2), c(0.5))) <= 1e-15);
        let w2 = reduce_modes(&uniform(), &part, Block::Second).unwrap();
        assert!(w2.max_abs_diff(&ndarray::arr2(&[[c(0.5), c(0.0)], [c(0.0), c(0.5)]])) <= 1e-15);
        let eq = equispectral(&uniform(), &part, 1e-9).unwrap();
        assert!(!eq.equal);
        assert!((eq.max_gap - 0.5).abs() < 1e-12);
        let e = entropy_report(&uniform(), &part).unwrap();
        assert!(e.s1.abs() < 1e-9 && (e.s2 - 1.0).abs() < 1e-12 && (e.violation - 1.0).abs() < 1e-9);
    }

    #[test]
    fn basis_state_has_no_entropy() {
        let psi = FockVector::basis("1011".parse().unwrap());
        let e = entropy_report(&psi, &Bipartition::contiguous(4, 2).unwrap()).unwrap();
        assert_eq!((e.s1, e.s2), (0.0, 0.0));
    }

    #[test]
    fn criterion_examples() {
        let q = c(0.5);
        assert!((two_mode_criterion(&[q, q, q, q]) - 1.0 / 16.0).abs() < 1e-17);
        let odd = [ZERO, Complex64::new(0.6, 0.1), Complex64::new(0.3, -0.7), ZERO];
        assert_eq!(two_mode_criterion(&odd), 0.0);
        let th = 0.3f64;
        assert_eq!(two_mode_criterion(&[c(th.cos()), ZERO, ZERO, c(th.sin())]), 0.0);
    }

    #[test]
    fn subset_reduction_matches_direct_subalgebra() {
        let psi = sample_state(4, Ensemble::General, 11).unwrap();
        let part = Bipartition::from_subset(4, &[2, 4]).unwrap();
        let via_relabel = reduce_modes(&psi, &part, Block::First).unwrap();
        let direct = block_marginal(&psi, &[2, 4]).unwrap();
        assert!(via_relabel.max_abs_diff(&direct) <= 1e-14);
        let via_relabel = reduce_modes(&psi, &part, Block::Second).unwrap();
        let direct = block_marginal(&psi, &[1, 3]).unwrap();
        assert!(via_relabel.max_abs_diff(&direct) <= 1e-14);
    }

    #[test]
    fn block_embeddings_match_matrix_units() {
        let (n, b) = (3, 1);
        let mut rng = rng_from_seed(3);
        let w = haar_unitary(4, &mut rng);
        let v = haar_unitary(2, &mut rng);
        let mut lead = OperatorMatrix::zeros(n).unwrap();
        for x in 0..4 {
            for y in 0..4 {
                let unit = block_matrix_unit(MultiIndex::new(2, x).unwrap(), MultiIndex::new(2, y).unwrap(), &[1, 2], n).unwrap();
                lead = &lead + &unit.scaled(w[[x, y]]);
            }
        }
        assert!(lead.max_abs_diff(&embed_leading(&w, n, b)) <= 1e-15);
        let mut trail = OperatorMatrix::zeros(n).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                let unit = block_matrix_unit(MultiIndex::new(1, x).unwrap(), MultiIndex::new(1, y).unwrap(), &[3], n).unwrap();
                trail = &trail + &unit.scaled(v[[x, y]]);
            }
        }
        assert!(trail.max_abs_diff(&embed_trailing(&v, n, b)) <= 1e-15);
        let psi = sample_state(n, Ensemble::General, 4).unwrap();
        assert!(apply_trailing(&v, &psi, b).unwrap().max_abs_diff(&trail.apply(&psi)) <= 1e-14);
        assert!(apply_leading(&w, &psi, b).unwrap().max_abs_diff(&lead.apply(&psi)) <= 1e-14);
    }

    #[test]
    fn canonical_examples() {
        let part = Bipartition::contiguous(2, 1).unwrap();
        let phi = canonical_ssr_purification(&[0.5, 0.5], &part).unwrap();
        assert!(phi.max_abs_diff(&bell()) <= 1e-15);
        let part4 = Bipartition::contiguous(4, 2).unwrap();
        let vac = canonical_ssr_purification(&[1.0, 0.0, 0.0, 0.0], &part4).unwrap();
        assert_eq!(vac, FockVector::vacuum(4).unwrap());
        let phi = canonical_ssr_purification(&[0.25; 4], &part4).unwrap();
        assert_eq!(parity_classify(&phi, 1e-12).unwrap(), ParityClass::Even);
        assert_eq!(phi.support(1e-12).count(), 4);
        let eq = equispectral(&phi, &part4, 1e-12).unwrap();
        assert!(eq.first.values.iter().chain(&eq.second.values).all(|v| (v - 0.25).abs() < 1e-14));
        assert!(canonical_ssr_purification(&[0.5, 0.6], &part).is_err());
        assert!(canonical_ssr_purification(&[1.0], &part).is_err());
    }

    #[test]
    fn canonical_state_on_unequal_blocks() {
        for (n, m, lambda) in [(5, 1, vec![0.6, 0.4]), (5, 4, vec![0.7, 0.3]), (5, 2, vec![0.4, 0.3, 0.2, 0.1])] {
            let part = Bipartition::contiguous(n, m).unwrap();
            let phi = canonical_ssr_purification(&lambda, &part).unwrap();
            let eq = equispectral(&phi, &part, 1e-12).unwrap();
            assert!(eq.equal, "m={m}: {eq:?}");
            assert_eq!(parity_classify(&phi, 1e-12).unwrap(), ParityClass::Even);
        }
    }

    #[test]
    fn canonical_input_needs_no_rotation() {
        let part = Bipartition::contiguous(4, 2).unwrap();
        let phi = canonical_ssr_purification(&[0.4, 0.3, 0.2, 0.1], &part).unwrap();
        let r = reconstruct_locals(&phi, &part, 1e-9).unwrap();
        assert!(r.recovered);
        assert!((r.fidelity - 1.0).abs() < 1e-12);
        let id = OperatorMatrix::identity(4).unwrap();
        assert!(r.u1.max_abs_diff(&id) < 1e-12);
        assert!(r.u2.max_abs_diff(&id) < 1e-12);
        assert!(r.phi.max_abs_diff(&phi) < 1e-12);
    }

    #[test]
    fn non_equispectral_input_is_rejected() {
        let part = Bipartition::contiguous(2, 1).unwrap();
        assert!(matches!(reconstruct_locals(&uniform(), &part, 1e-9), Err(Error::Precondition(_))));
    }

    fn check_round_trip(n: usize, m: usize, odd: bool, seed: u64) {
        let part = Bipartition::contiguous(n, m).unwrap();
        let mut rng = rng_from_seed(seed);
        let lambda = random_spectrum(1 << m.min(n - m), &mut rng);
        let p = if odd { Parity::Odd } else { Parity::Even };
        let psi = forward_instance(&lambda, &part, p, &mut rng).unwrap();
        assert_eq!(parity_classify(&psi, 1e-12).unwrap().parity(), Some(p));
        let r = reconstruct_locals(&psi, &part, 1e-9).unwrap();
        assert!(r.marginal_gap <= 1e-9);
        assert!(r.fidelity >= 1.0 - 1e-9, "n={n} m={m} odd={odd}: fidelity {}", r.fidelity);
        assert!(r.recovered);
        assert_eq!(parity_classify(&r.phi, 1e-12).unwrap(), ParityClass::Even);
        assert!(r.u1.unitarity_defect() <= 1e-12 && r.u2.unitarity_defect() <= 1e-12);
        assert!(r.locality_defect(&part).unwrap() <= 1e-12);
        let rebuilt = r.u1.apply(&r.u2.apply(&r.phi));
        assert!((psi.fidelity(&rebuilt) - r.fidelity).abs() <= 1e-12);
    }

    #[test]
    fn forward_instances_are_recovered() {
        for (n, m) in [(2, 1), (3, 1), (3, 2), (4, 2), (5, 2), (5, 3), (6, 1)] {
            for odd in [false, true] {
                check_round_trip(n, m, odd, (n * 10 + m) as u64 + odd as u64);
            }
        }
    }

    #[test]
    fn degenerate_spectrum_is_not_claimed() {
        let part = Bipartition::contiguous(4, 2).unwrap();
        let mut rng = rng_from_seed(8);
        let psi = forward_instance(&[0.25; 4], &part, Parity::Even, &mut rng).unwrap();
        let r = reconstruct_locals(&psi, &part, 1e-9).unwrap();
        assert!(r.marginal_gap <= 1e-9);
        assert!(!r.simple_spectrum && !r.recovered);
    }

    #[test]
    fn non_contiguous_purification() {
        let part = Bipartition::from_subset(4, &[1, 3]).unwrap();
        let psi = sample_state(4, Ensemble::Ssr(Parity::Odd), 21).unwrap();
        let r = reconstruct_locals(&psi, &part, 1e-9).unwrap();
        assert!(r.recovered && r.fidelity >= 1.0 - 1e-9);
        assert!(r.locality_defect(&part).unwrap() <= 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn ssr_states_are_equispectral(n in 2usize..=6, m_seed in any::<usize>(), seed in any::<u64>(), odd in any::<bool>()) {
            let m = 1 + m_seed % (n - 1);
            let p = if odd { Parity::Odd } else { Parity::Even };
            let psi = sample_state(n, Ensemble::Ssr(p), seed).unwrap();
            let part = Bipartition::contiguous(n, m).unwrap();
            let eq = equispectral(&psi, &part, 1e-9).unwrap();
            prop_assert!(eq.equal, "gap {}", eq.max_gap);
            prop_assert!(entropy_report(&psi, &part).unwrap().violation <= 1e-9);
        }

        #[test]
        fn omega1_spectrum_matches_first_marginal(n in 2usize..=5, m_seed in any::<usize>(), seed in any::<u64>()) {
            let m = 1 + m_seed % (n - 1);
            let psi = sample_state(n, Ensemble::General, seed).unwrap();
            let part = Bipartition::contiguous(n, m).unwrap();
            let t = tensor_embed(&psi, m).unwrap();
            let w1 = reduce_modes(&psi, &part, Block::First).unwrap();
            let s_omega = crate::spectral::eig_hermitian(&t.omega1(), 1e-9).unwrap();
            let (eq, _) = spectra_equal(&w1.spectrum().unwrap(), &s_omega, 1e-12, false).unwrap();
            prop_assert!(eq);
        }

        #[test]
        fn second_marginal_matches_omega2_for_even_states(n in 2usize..=5, m_seed in any::<usize>(), seed in any::<u64>()) {
            let m = 1 + m_seed % (n - 1);
            let psi = sample_state(n, Ensemble::Ssr(Parity::Even), seed).unwrap();
            let part = Bipartition::contiguous(n, m).unwrap();
            let w2 = reduce_modes(&psi, &part, Block::Second).unwrap();
            prop_assert!(w2.max_abs_diff(&tensor_embed(&psi, m).unwrap().omega2()) <= 1e-15);
        }

        #[test]
        fn marginals_are_states(n in 2usize..=5, m_seed in any::<usize>(), seed in any::<u64>()) {
            let m = 1 + m_seed % (n - 1);
            let psi = sample_state(n, Ensemble::General, seed).unwrap();
            let part = Bipartition::contiguous(n, m).unwrap();
            for block in [Block::First, Block::Second] {
                prop_assert!(reduce_modes(&psi, &part, block).unwrap().validate().is_ok());
            }
        }

        #[test]
        fn two_mode_criterion_biconditional(seed in any::<u64>()) {
            let psi = sample_state(2, Ensemble::General, seed).unwrap();
            let a = psi.amplitudes();
            let crit = two_mode_criterion(&[a[0], a[1], a[2], a[3]]);
            let eq = equispectral(&psi, &Bipartition::contiguous(2, 1).unwrap(), 1e-8).unwrap();
            if crit.abs() <= 1e-10 {
                prop_assert!(eq.equal);
            } else if crit.abs() >= 1e-8 {
                prop_assert!(!eq.equal);
            }
        }
    }
}
