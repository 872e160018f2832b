//! Matrix units, the λ-matrix of a state and parity classification.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{argument, validation, Result};
use crate::fock::{
    check_modes, format_monomial, FockVector, Ladder, MonomialAction, MultiIndex,
    OperatorMatrix, ZERO,
};
use crate::spectral::{eig_hermitian, SpectrumReport};

/// Hermiticity tolerance for density matrices.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Smallest admissible eigenvalue.
pub const PSD_TOL: f64 = -1e-10;
/// Unit-trace tolerance for total and mode-reduced states.
pub const TRACE_TOL: f64 = 1e-12;
/// Default amplitude threshold for [`parity_classify`].
pub const PARITY_ZERO_THRESHOLD: f64 = 1e-12;

/// Where a density matrix came from; decides whether the trace is pinned to 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityTag {
    Total,
    ModeReduced,
    /// Unnormalized p-particle reduction.
    ParticleReduced,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    entries: Array2<Complex64>,
    tag: DensityTag,
}

impl DensityMatrix {
    /// Validates Hermiticity, positivity and (unless particle-reduced) the trace.
    pub fn new(entries: Array2<Complex64>, tag: DensityTag) -> Result<Self> {
        let rho = Self { entries, tag };
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_parts(entries: Array2<Complex64>, tag: DensityTag) -> Self {
        Self { entries, tag }
    }

    pub fn validate(&self) -> Result<()> {
        let (r, c) = self.entries.dim();
        if r != c || r == 0 {
            return Err(validation(format!("density matrix must be square and nonempty, got {r}×{c}")));
        }
        if self.entries.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
            return Err(validation("density matrix has non-finite entries"));
        }
        let herm = self.hermiticity_defect();
        if herm > HERMITIAN_TOL {
            return Err(validation(format!("Hermiticity violated by {herm:.3e}")));
        }
        let min = self.spectrum()?.values.last().copied().unwrap_or(0.0);
        if min < PSD_TOL {
            return Err(validation(format!("positivity violated: eigenvalue {min:.3e}")));
        }
        if self.tag != DensityTag::ParticleReduced {
            let tr = self.trace();
            if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
                return Err(validation(format!("unit trace violated: trace {tr}")));
            }
        }
        Ok(())
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.entries[[i, j]] - self.entries[[j, i]].conj()).norm());
            }
        }
        worst
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn tag(&self) -> DensityTag {
        self.tag
    }

    pub fn entries(&self) -> &Array2<Complex64> {
        &self.entries
    }

    pub fn into_entries(self) -> Array2<Complex64> {
        self.entries
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.diag().sum()
    }

    /// Eigenvalues, descending, tagged with the matrix provenance.
    pub fn spectrum(&self) -> Result<SpectrumReport> {
        let mut s = eig_hermitian(&self.entries, 1e-9)?;
        s.source_tag = format!("{:?}", self.tag);
        Ok(s)
    }

    pub fn max_abs_diff(&self, other: &Array2<Complex64>) -> f64 {
        assert_eq!(self.entries.dim(), other.dim());
        self.entries.iter().zip(other.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of_weight(w: u32) -> Self {
        if w.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn of_index(index: usize) -> Self {
        Self::of_weight(index.count_ones())
    }

    pub fn flip(self) -> Self {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParityClass {
    Even,
    Odd,
    Mixed,
}

impl ParityClass {
    pub fn parity(self) -> Option<Parity> {
        match self {
            ParityClass::Even => Some(Parity::Even),
            ParityClass::Odd => Some(Parity::Odd),
            ParityClass::Mixed => None,
        }
    }
}

/// Ladder factors of `A_JK = c†_{j_1}…c†_{j_n} c_{k_n}…c_{k_1}`, leftmost first.
///
/// `c_s` is `a_s` for an occupied index and `a_s a_s†` for an empty one.
pub fn matrix_unit_ops(j: MultiIndex, k: MultiIndex) -> Result<Vec<Ladder>> {
    if j.n() != k.n() {
        return Err(argument(format!("multiindices over {} and {} modes", j.n(), k.n())));
    }
    let mut ops = creator_string(j);
    ops.extend(annihilator_string(k));
    Ok(ops)
}

/// `c_{k_n} … c_{k_1}` over `modes`, which maps `|K⟩` on those modes to their
/// vacuum and kills every other occupation of them.
pub(crate) fn annihilators_on(k: MultiIndex, modes: &[usize]) -> Vec<Ladder> {
    let mut ops = Vec::with_capacity(2 * modes.len());
    for (&s, bit) in modes.iter().zip(k.bits()).rev() {
        if bit == 1 {
            ops.push(Ladder::annihilate(s));
        } else {
            ops.extend([Ladder::annihilate(s), Ladder::create(s)]);
        }
    }
    ops
}

/// `c†_{j_1} … c†_{j_n}` over `modes`.
pub(crate) fn creators_on(j: MultiIndex, modes: &[usize]) -> Vec<Ladder> {
    let mut ops = Vec::with_capacity(2 * modes.len());
    for (&s, bit) in modes.iter().zip(j.bits()) {
        if bit == 1 {
            ops.push(Ladder::create(s));
        } else {
            ops.extend([Ladder::annihilate(s), Ladder::create(s)]);
        }
    }
    ops
}

fn annihilator_string(k: MultiIndex) -> Vec<Ladder> {
    annihilators_on(k, &(1..=k.n()).collect::<Vec<_>>())
}

fn creator_string(j: MultiIndex) -> Vec<Ladder> {
    creators_on(j, &(1..=j.n()).collect::<Vec<_>>())
}

/// Matrix unit of the subalgebra generated by the ladder operators of `modes`,
/// as an operator on all `n` modes.
pub fn block_matrix_unit(j: MultiIndex, k: MultiIndex, modes: &[usize], n: usize) -> Result<OperatorMatrix> {
    if j.n() != modes.len() || k.n() != modes.len() {
        return Err(argument("multiindex length differs from block size"));
    }
    let mut ops = creators_on(j, modes);
    ops.extend(annihilators_on(k, modes));
    Ok(MonomialAction::new(&ops, n)?.to_matrix())
}

/// The matrix unit `A_JK`, evaluated as a product of ladder operators.
pub fn matrix_unit(j: MultiIndex, k: MultiIndex) -> Result<OperatorMatrix> {
    let ops = matrix_unit_ops(j, k)?;
    Ok(MonomialAction::new(&ops, j.n())?.to_matrix())
}

/// `ρ = Σ_{J,K} λ_JK A_JK`.
///
/// Each `A_JK` is the product of the creator string of `J` and the
/// annihilator string of `K`; both strings are evaluated once per index.
pub fn operator_from_lambda(lambda: &DensityMatrix) -> Result<OperatorMatrix> {
    let d = lambda.dim();
    if !d.is_power_of_two() {
        return Err(argument(format!("λ dimension {d} is not a power of two")));
    }
    let n = d.trailing_zeros() as usize;
    check_modes(n)?;
    lambda.validate()?;
    if lambda.tag() != DensityTag::Total {
        return Err(validation("λ must be a total density matrix"));
    }
    let annihilators: Vec<Vec<(usize, usize, f64)>> = MultiIndex::all(n)?
        .map(|k| MonomialAction::new(&annihilator_string(k), n).map(|a| a.entries().collect()))
        .collect::<Result<_>>()?;
    let creators: Vec<Vec<Option<(usize, f64)>>> = MultiIndex::all(n)?
        .map(|j| {
            MonomialAction::new(&creator_string(j), n).map(|a| {
                let mut images = vec![None; d];
                for (col, row, sign) in a.entries() {
                    images[col] = Some((row, sign));
                }
                images
            })
        })
        .collect::<Result<_>>()?;

    let mut out = Array2::zeros((d, d));
    for (jdx, creator) in creators.iter().enumerate() {
        for (kdx, annihilator) in annihilators.iter().enumerate() {
            let weight = lambda.entries()[[jdx, kdx]];
            if weight == ZERO {
                continue;
            }
            for &(col, mid, s1) in annihilator {
                if let Some((row, s2)) = creator[mid] {
                    out[[row, col]] += weight * (s1 * s2);
                }
            }
        }
    }
    OperatorMatrix::from_array(n, out)
}

/// λ-matrix of a pure state: `λ_JK = ⟨A_KJ⟩ = ψ_J · conj(ψ_K)`.
pub fn lambda_from_state(psi: &FockVector) -> Result<DensityMatrix> {
    psi.require_normalized()?;
    let a = psi.amplitudes();
    let d = a.len();
    let entries = Array2::from_shape_fn((d, d), |(j, k)| a[j] * a[k].conj());
    Ok(DensityMatrix::from_parts(entries, DensityTag::Total))
}

/// Same as [`lambda_from_state`], evaluating every `⟨A_KJ⟩` through ladder products.
pub fn lambda_from_state_via_monomials(psi: &FockVector) -> Result<DensityMatrix> {
    psi.require_normalized()?;
    let n = psi.n();
    // ⟨ψ|A_KJ|ψ⟩ = ⟨C_K ψ | C_J ψ⟩ with C_J the annihilator string of J
    let reduced: Vec<FockVector> = MultiIndex::all(n)?
        .map(|j| psi.apply_monomial(&annihilator_string(j)))
        .collect::<Result<_>>()?;
    let d = psi.dim();
    let entries = Array2::from_shape_fn((d, d), |(j, k)| reduced[k].inner(&reduced[j]));
    Ok(DensityMatrix::from_parts(entries, DensityTag::Total))
}

/// Parity of the support of `ψ`, ignoring amplitudes with `|λ_J| ≤ zero_threshold`.
pub fn parity_classify(psi: &FockVector, zero_threshold: f64) -> Result<ParityClass> {
    if zero_threshold.is_nan() || zero_threshold < 0.0 {
        return Err(argument("zero threshold must be nonnegative"));
    }
    let mut seen = [false; 2];
    for j in psi.support(zero_threshold) {
        seen[(j.weight() % 2) as usize] = true;
    }
    match seen {
        [false, false] => Err(validation("state has no amplitude above the zero threshold")),
        [true, false] => Ok(ParityClass::Even),
        [false, true] => Ok(ParityClass::Odd),
        [true, true] => Ok(ParityClass::Mixed),
    }
}

/// Result of checking all odd monomials on a state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvennessReport {
    pub even: bool,
    pub monomials_checked: usize,
    /// Monomial with the largest `|⟨M⟩|`, leftmost factor first.
    pub worst_monomial: Vec<Ladder>,
    pub worst_value: f64,
}

impl EvennessReport {
    pub fn worst_monomial_text(&self) -> String {
        format_monomial(&self.worst_monomial)
    }
}

/// Largest mode count accepted by [`is_even_state`].
pub const EVENNESS_MAX_MODES: usize = 6;

/// Odd-order normal-ordered monomials on distinct modes:
/// creators ascending, then annihilators descending.
pub fn odd_monomials(n: usize) -> Result<Vec<Vec<Ladder>>> {
    check_modes(n)?;
    let mut out = Vec::new();
    for subset in 1usize..1 << n {
        let modes: Vec<usize> = (1..=n).filter(|&t| subset & (1 << (t - 1)) != 0).collect();
        if modes.len().is_multiple_of(2) {
            continue;
        }
        for daggers in 0usize..1 << modes.len() {
            let mut creators: Vec<Ladder> = vec![];
            let mut annihilators: Vec<Ladder> = vec![];
            for (i, &t) in modes.iter().enumerate() {
                if daggers & (1 << i) != 0 {
                    creators.push(Ladder::create(t));
                } else {
                    annihilators.push(Ladder::annihilate(t));
                }
            }
            annihilators.reverse();
            creators.extend(annihilators);
            out.push(creators);
        }
    }
    Ok(out)
}

/// Checks that every odd monomial has expectation within `tol` of zero.
pub fn is_even_state(psi: &FockVector, tol: f64) -> Result<EvennessReport> {
    psi.require_normalized()?;
    if psi.n() > EVENNESS_MAX_MODES {
        return Err(argument(format!(
            "odd-monomial enumeration supports at most {EVENNESS_MAX_MODES} modes, got {}",
            psi.n()
        )));
    }
    let monomials = odd_monomials(psi.n())?;
    let mut worst_value = -1.0;
    let mut worst_monomial = vec![];
    for m in &monomials {
        let v = psi.expectation(m)?.norm();
        if v > worst_value {
            worst_value = v;
            worst_monomial = m.clone();
        }
    }
    Ok(EvennessReport {
        even: worst_value <= tol,
        monomials_checked: monomials.len(),
        worst_monomial,
        worst_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{annihilation_op, creation_op};
    use crate::sample::{sample_state, Ensemble};
    use proptest::prelude::*;

    fn idx(s: &str) -> MultiIndex {
        s.parse().unwrap()
    }

    fn half_uniform() -> FockVector {
        FockVector::from_real(2, &[0.5; 4]).unwrap()
    }

    /// `A_JK` from dense products of the ladder matrices.
    fn dense_unit(j: MultiIndex, k: MultiIndex) -> OperatorMatrix {
        let n = j.n();
        let mut acc = OperatorMatrix::identity(n).unwrap();
        for op in matrix_unit_ops(j, k).unwrap() {
            let m = if op.dagger { creation_op(op.mode, n) } else { annihilation_op(op.mode, n) };
            acc = acc * &m.unwrap();
        }
        acc
    }

    #[test]
    fn single_mode_unit_is_creation() {
        let a = matrix_unit(idx("1"), idx("0")).unwrap();
        assert_eq!(a, creation_op(1, 1).unwrap());
    }

    #[test]
    fn units_are_elementary_matrices() {
        for n in 1..=3 {
            for j in MultiIndex::all(n).unwrap() {
                for k in MultiIndex::all(n).unwrap() {
                    let unit = matrix_unit(j, k).unwrap();
                    assert_eq!(unit, dense_unit(j, k));
                    let elementary = OperatorMatrix::projector(&FockVector::basis(j)) * &OperatorMatrix::identity(n).unwrap();
                    let mut expected = OperatorMatrix::zeros(n).unwrap().into_entries();
                    expected[[j.index(), k.index()]] = Complex64::new(1.0, 0.0);
                    assert_eq!(unit.entries(), &expected);
                    if j == k {
                        assert_eq!(unit, elementary);
                    }
                }
            }
        }
        assert!(matrix_unit(idx("1"), idx("10")).is_err());
    }

    #[test]
    fn lambda_examples() {
        let vac = FockVector::vacuum(2).unwrap();
        let l = lambda_from_state(&vac).unwrap();
        let mut expected = Array2::zeros((4, 4));
        expected[[0, 0]] = Complex64::new(1.0, 0.0);
        assert_eq!(l.entries(), &expected);

        let l = lambda_from_state(&half_uniform()).unwrap();
        assert!(l.entries().iter().all(|&x| x == Complex64::new(0.25, 0.0)));
        assert!(lambda_from_state(&FockVector::from_real(1, &[1.0, 1.0]).unwrap()).is_err());
    }

    #[test]
    fn operator_from_lambda_examples() {
        let mut e = Array2::zeros((8, 8));
        e[[0, 0]] = Complex64::new(1.0, 0.0);
        let lambda = DensityMatrix::new(e, DensityTag::Total).unwrap();
        let vac = FockVector::vacuum(3).unwrap();
        assert_eq!(operator_from_lambda(&lambda).unwrap(), OperatorMatrix::projector(&vac));

        let bad = DensityMatrix::from_parts(Array2::eye(4), DensityTag::Total);
        let err = operator_from_lambda(&bad).unwrap_err();
        assert!(err.to_string().contains("trace"));
    }

    #[test]
    fn random_lambda_round_trips_exactly() {
        // a random mixed λ: normalized Gram matrix of random vectors
        for seed in 0..5 {
            let vs: Vec<FockVector> = (0..3)
                .map(|i| sample_state(3, Ensemble::General, seed * 10 + i).unwrap())
                .collect();
            let mut e = Array2::zeros((8, 8));
            for v in &vs {
                e = e + lambda_from_state(v).unwrap().entries() / 3.0;
            }
            let lambda = DensityMatrix::new(e.clone(), DensityTag::Total).unwrap();
            let rho = operator_from_lambda(&lambda).unwrap();
            let gap = rho.entries().iter().zip(e.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(gap <= 1e-14, "gap {gap}");
        }
    }

    #[test]
    fn density_validation_names_the_invariant() {
        let not_herm = ndarray::arr2(&[[Complex64::new(0.5, 0.0), Complex64::new(0.1, 0.0)], [ZERO, Complex64::new(0.5, 0.0)]]);
        assert!(DensityMatrix::new(not_herm, DensityTag::Total).unwrap_err().to_string().contains("Hermiticity"));
        let not_psd = ndarray::arr2(&[[Complex64::new(1.5, 0.0), ZERO], [ZERO, Complex64::new(-0.5, 0.0)]]);
        assert!(DensityMatrix::new(not_psd, DensityTag::Total).unwrap_err().to_string().contains("positivity"));
        let big = ndarray::arr2(&[[Complex64::new(1.5, 0.0), ZERO], [ZERO, Complex64::new(0.5, 0.0)]]);
        assert!(DensityMatrix::new(big.clone(), DensityTag::ParticleReduced).is_ok());
        assert!(DensityMatrix::new(big, DensityTag::ModeReduced).is_err());
    }

    #[test]
    fn parity_examples() {
        let bell = FockVector::from_real(2, &[1.0 / 2f64.sqrt(), 0.0, 0.0, 1.0 / 2f64.sqrt()]).unwrap();
        assert_eq!(parity_classify(&bell, 1e-12).unwrap(), ParityClass::Even);
        let mut odd = vec![0.0; 8];
        for s in ["100", "010", "001", "111"] {
            odd[idx(s).index()] = 0.5;
        }
        let odd = FockVector::from_real(3, &odd).unwrap();
        assert_eq!(parity_classify(&odd, 1e-12).unwrap(), ParityClass::Odd);
        assert_eq!(parity_classify(&half_uniform(), 1e-12).unwrap(), ParityClass::Mixed);
        assert!(parity_classify(&FockVector::zeros(2).unwrap(), 1e-12).is_err());
        let nearly = FockVector::from_real(1, &[1.0, 1e-13]).unwrap();
        assert_eq!(parity_classify(&nearly, 1e-12).unwrap(), ParityClass::Even);
    }

    #[test]
    fn odd_monomial_count() {
        for n in 1..=6 {
            let expected = (3i64.pow(n as u32) - (-1i64).pow(n as u32)) / 2;
            assert_eq!(odd_monomials(n).unwrap().len() as i64, expected);
        }
    }

    #[test]
    fn evenness_examples() {
        let vac = FockVector::vacuum(3).unwrap();
        assert!(is_even_state(&vac, 1e-12).unwrap().even);
        let r = is_even_state(&half_uniform(), 1e-10).unwrap();
        assert!(!r.even);
        assert!(r.worst_value >= 0.5 - 1e-12, "{r:?}");
        assert!(r.worst_monomial.len() % 2 == 1);
        assert!(is_even_state(&FockVector::vacuum(7).unwrap(), 1e-12).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn projector_round_trip(n in 1usize..=5, seed in any::<u64>()) {
            let psi = sample_state(n, Ensemble::General, seed).unwrap();
            let rho = operator_from_lambda(&lambda_from_state(&psi).unwrap()).unwrap();
            prop_assert!(rho.max_abs_diff(&OperatorMatrix::projector(&psi)) <= 1e-14);
        }

        #[test]
        fn fast_and_slow_lambda_agree(n in 1usize..=4, seed in any::<u64>()) {
            let psi = sample_state(n, Ensemble::General, seed).unwrap();
            let fast = lambda_from_state(&psi).unwrap();
            let slow = lambda_from_state_via_monomials(&psi).unwrap();
            prop_assert!(fast.max_abs_diff(slow.entries()) <= 1e-15);
            prop_assert!(fast.validate().is_ok());
        }

        #[test]
        fn parity_matches_evenness(n in 1usize..=5, seed in any::<u64>(), ssr in any::<bool>(), odd in any::<bool>()) {
            let ensemble = if ssr {
                Ensemble::Ssr(if odd { Parity::Odd } else { Parity::Even })
            } else {
                Ensemble::General
            };
            let psi = sample_state(n, ensemble, seed).unwrap();
            let class = parity_classify(&psi, PARITY_ZERO_THRESHOLD).unwrap();
            let report = is_even_state(&psi, 1e-10).unwrap();
            prop_assert_eq!(class != ParityClass::Mixed, report.even);
        }
    }
}
