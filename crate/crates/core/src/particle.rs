//! Particle-number reductions: p-RDMs, the particle-tracing map `Φ`,
//! natural occupations and the `ρ_p` versus `Φ^p(ρ)` spectral comparison.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::{parity_classify, Parity, ParityClass, PARITY_ZERO_THRESHOLD};
use crate::error::{argument, precondition, Error, Result};
use crate::fock::{ladder_on_basis, FockVector, Ladder, MonomialAction, OperatorMatrix, ZERO};
use crate::spectral::{eig_hermitian, eigh_with, spectra_equal, JacobiSettings, SpectrumReport};

/// Eigenvalues below this are dropped before comparing particle reductions.
pub const CONJECTURE_ZERO_THRESHOLD: f64 = 1e-10;
pub const AGREE_TOL: f64 = 1e-8;
pub const DISAGREE_FLOOR: f64 = 1e-4;

/// Ascending mode tuples `s₁ < … < s_p` of `{1…n}` in colexicographic order.
pub fn ordered_tuples(n: usize, p: usize) -> Vec<Vec<usize>> {
    // colex order on subsets is increasing order of Σ 2^(s−1)
    (0usize..1 << n)
        .filter(|mask| mask.count_ones() as usize == p)
        .map(|mask| (1..=n).filter(|&s| mask & (1 << (s - 1)) != 0).collect())
        .collect()
}

fn check_p(psi: &FockVector, p: usize) -> Result<()> {
    if p == 0 || p > psi.n() {
        return Err(argument(format!("particle count p = {p} outside 1..={}", psi.n())));
    }
    Ok(())
}

/// `a_{s_p} … a_{s_1}` (so `a_{s_1}` acts first).
fn lowering(tuple: &[usize]) -> Vec<Ladder> {
    tuple.iter().rev().map(|&s| Ladder::annihilate(s)).collect()
}

/// p-RDM with entries `⟨a_{s₁}†…a_{s_p}† a_{t_p}…a_{t₁}⟩` over colex-ordered tuples.
#[derive(Clone, Debug, PartialEq)]
pub struct PRdmMatrix {
    pub n: usize,
    pub p: usize,
    pub tuples: Vec<Vec<usize>>,
    pub entries: Array2<Complex64>,
}

impl PRdmMatrix {
    pub fn dim(&self) -> usize {
        self.tuples.len()
    }

    /// `⟨Σ_S n_{s₁}⋯n_{s_p}⟩`; not normalized.
    pub fn trace(&self) -> f64 {
        self.entries.diag().iter().map(|x| x.re).sum()
    }

    /// Copy divided by its trace, or `None` when the trace is below `zero_threshold`.
    pub fn normalized(&self, zero_threshold: f64) -> Option<Self> {
        let tr = self.trace();
        (tr > zero_threshold).then(|| Self { entries: self.entries.mapv(|x| x / tr), ..self.clone() })
    }

    pub fn spectrum(&self) -> Result<SpectrumReport> {
        let mut s = eig_hermitian(&self.entries, 1e-9)?;
        s.source_tag = format!("{}-RDM matrix", self.p);
        Ok(s)
    }
}

pub fn rdm_matrix(psi: &FockVector, p: usize) -> Result<PRdmMatrix> {
    check_p(psi, p)?;
    psi.require_normalized()?;
    let tuples = ordered_tuples(psi.n(), p);
    let lowered: Vec<FockVector> =
        tuples.iter().map(|t| psi.apply_monomial(&lowering(t))).collect::<Result<_>>()?;
    let d = tuples.len();
    let entries = Array2::from_shape_fn((d, d), |(s, t)| lowered[s].inner(&lowered[t]));
    Ok(PRdmMatrix { n: psi.n(), p, tuples, entries })
}

/// `ρ_p = Σ_{S,T} ⟨a_S† a_T⟩ a_{t₁}†…a_{t_p}† a_{s_p}…a_{s₁} Π_{s∉S∪T} a_s a_s†`,
/// a `2^n` operator supported on the p-particle sector.
pub fn rdm_operator(psi: &FockVector, p: usize) -> Result<OperatorMatrix> {
    let rdm = rdm_matrix(psi, p)?;
    let n = psi.n();
    let mut out = Array2::zeros((1 << n, 1 << n));
    for (si, s) in rdm.tuples.iter().enumerate() {
        for (ti, t) in rdm.tuples.iter().enumerate() {
            let weight = rdm.entries[[si, ti]];
            if weight == ZERO {
                continue;
            }
            let mut ops: Vec<Ladder> = t.iter().map(|&m| Ladder::create(m)).collect();
            ops.extend(lowering(s));
            for m in (1..=n).filter(|m| !s.contains(m) && !t.contains(m)) {
                ops.extend([Ladder::annihilate(m), Ladder::create(m)]);
            }
            for (col, row, sign) in MonomialAction::new(&ops, n)?.entries() {
                out[[row, col]] += weight * sign;
            }
        }
    }
    OperatorMatrix::from_array(n, out)
}

/// `Φ(ρ) = Σ_j a_j ρ a_j†`.
pub fn phi(rho: &OperatorMatrix) -> OperatorMatrix {
    let n = rho.n();
    let d = rho.dim();
    let src = rho.entries();
    let mut out = Array2::zeros((d, d));
    for j in 1..=n {
        // a_j|x⟩ = σ|x − e_j⟩, so (a_j ρ a_j†)[r, c] = σ_r σ_c ρ[r + e_j, c + e_j]
        let lifted: Vec<Option<(usize, f64)>> =
            (0..d).map(|r| ladder_on_basis(r, j, n, true)).collect();
        for r in 0..d {
            let Some((rr, sr)) = lifted[r] else { continue };
            for c in 0..d {
                let Some((cc, sc)) = lifted[c] else { continue };
                out[[r, c]] += src[[rr, cc]] * (sr * sc);
            }
        }
    }
    OperatorMatrix::from_parts(n, out)
}

/// `Φ` evaluated with dense ladder matrices; slow reference path.
pub fn phi_dense(rho: &OperatorMatrix) -> Result<OperatorMatrix> {
    let n = rho.n();
    let mut acc = OperatorMatrix::zeros(n)?;
    for j in 1..=n {
        let a = crate::fock::annihilation_op(j, n)?;
        acc = &acc + &(&(&a * rho) * &a.adjoint());
    }
    Ok(acc)
}

/// `p`-fold composition of [`phi`].
pub fn phi_pow(rho: &OperatorMatrix, p: usize) -> OperatorMatrix {
    if p > rho.n() {
        return OperatorMatrix::zeros(rho.n()).expect("valid mode count");
    }
    (0..p).fold(rho.clone(), |acc, _| phi(&acc))
}

/// Particle number `N` if every amplitude above the threshold has weight `N`.
pub fn fixed_particle_number(psi: &FockVector, zero_threshold: f64) -> Option<usize> {
    let mut weights = psi.support(zero_threshold).map(|j| j.weight() as usize);
    let first = weights.next()?;
    weights.all(|w| w == first).then_some(first)
}

/// Comparison of `Φ^(N−p)(|ψ⟩⟨ψ|)` with `ρ_p` for an `N`-particle state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedNReport {
    pub n: usize,
    pub particle_number: usize,
    pub p: usize,
    /// `max |Φ^(N−p)(ρ) − ρ_p|`.
    pub gap: f64,
    pub within_tol: bool,
    /// `(N−p)!`
    pub factorial: f64,
    /// `max |Φ^(N−p)(ρ)/(N−p)! − ρ_p|`.
    pub scaled_gap: f64,
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

pub fn check_fixed_n_reduction(psi: &FockVector, p: usize, tol: f64) -> Result<FixedNReport> {
    psi.require_normalized()?;
    let big_n = fixed_particle_number(psi, PARITY_ZERO_THRESHOLD)
        .ok_or_else(|| precondition("state does not have a fixed particle number"))?;
    if p == 0 || p > big_n {
        return Err(argument(format!("p = {p} outside 1..={big_n}")));
    }
    let lowered = phi_pow(&OperatorMatrix::projector(psi), big_n - p);
    let rho_p = rdm_operator(psi, p)?;
    let gap = lowered.max_abs_diff(&rho_p);
    let factorial = factorial(big_n - p);
    let scaled_gap = lowered.scaled(Complex64::new(1.0 / factorial, 0.0)).max_abs_diff(&rho_p);
    Ok(FixedNReport {
        n: psi.n(),
        particle_number: big_n,
        p,
        gap,
        within_tol: gap <= tol,
        factorial,
        scaled_gap,
    })
}

/// Eigenvalues of the 1-RDM, descending.
pub fn natural_occupations(psi: &FockVector) -> Result<SpectrumReport> {
    let mut s = rdm_matrix(psi, 1)?.spectrum()?;
    s.source_tag = "natural occupations".into();
    Ok(s)
}

/// Parity-induced constraints on the natural occupations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliReport {
    pub n: usize,
    pub parity: Parity,
    pub occupations: Vec<f64>,
    /// Human-readable constraint, `None` when no constraint is known.
    pub constraint: Option<String>,
    /// Largest violation of the constraint.
    pub residual: f64,
    /// `None` when no constraint applies.
    pub holds: Option<bool>,
}

pub fn pauli_constraint_check(psi: &FockVector, tol: f64) -> Result<PauliReport> {
    let parity = match parity_classify(psi, PARITY_ZERO_THRESHOLD)? {
        ParityClass::Mixed => return Err(precondition("state has mixed parity")),
        class => class.parity().expect("definite parity"),
    };
    let l = natural_occupations(psi)?.values;
    let (constraint, residual) = match (psi.n(), parity) {
        (2, Parity::Even) => (Some("λ1 = λ2"), (l[0] - l[1]).abs()),
        (2, Parity::Odd) => (Some("λ2 = 0"), l[1].abs()),
        (3, Parity::Odd) => (Some("λ1 = 1, λ2 = λ3"), (l[0] - 1.0).abs().max((l[1] - l[2]).abs())),
        _ => (None, 0.0),
    };
    Ok(PauliReport {
        n: psi.n(),
        parity,
        occupations: l,
        constraint: constraint.map(str::to_string),
        residual,
        holds: constraint.map(|_| residual <= tol),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Agree,
    Inconclusive,
    Disagree,
}

impl Verdict {
    pub fn classify(gap: f64, agree_tol: f64, disagree_floor: f64) -> Self {
        if gap <= agree_tol {
            Verdict::Agree
        } else if gap >= disagree_floor {
            Verdict::Disagree
        } else {
            Verdict::Inconclusive
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Agree => "agree",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Disagree => "disagree",
        })
    }
}

impl FromStr for Verdict {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "agree" => Ok(Verdict::Agree),
            "inconclusive" => Ok(Verdict::Inconclusive),
            "disagree" => Ok(Verdict::Disagree),
            _ => Err(argument(format!("unknown verdict {s:?}"))),
        }
    }
}

/// One comparison of the nonzero spectra of `ρ_p` and `Φ^p(|ψ⟩⟨ψ|)`.
#[derive(Clone, Debug)]
pub struct ConjectureTrial {
    pub psi: FockVector,
    pub p: usize,
    pub spectrum_rdm: SpectrumReport,
    pub spectrum_phi: SpectrumReport,
    pub max_gap: f64,
    pub verdict: Verdict,
    /// Set when an inconclusive gap was recomputed with tighter Jacobi settings.
    pub recomputed: bool,
    /// Gap after dividing `Φ^p(ρ)` by `p!`.
    pub scaled_gap: f64,
    /// Gap between the nonzero spectra of the p-RDM matrix and `ρ_p`.
    pub matrix_operator_gap: f64,
}

fn nonzero_spectrum(m: &Array2<Complex64>, settings: JacobiSettings, tag: &str) -> Result<SpectrumReport> {
    let mut s = eigh_with(m, 1e-9, settings)?.spectrum.stripped(CONJECTURE_ZERO_THRESHOLD);
    s.source_tag = tag.into();
    Ok(s)
}

fn padded_gap(a: &SpectrumReport, b: &SpectrumReport) -> Result<f64> {
    Ok(spectra_equal(a, b, 0.0, true)?.1)
}

pub fn conjecture_trial(psi: &FockVector, p: usize, agree_tol: f64, disagree_floor: f64) -> Result<ConjectureTrial> {
    check_p(psi, p)?;
    let rdm = rdm_matrix(psi, p)?;
    let rho_p = rdm_operator(psi, p)?;
    let lowered = phi_pow(&OperatorMatrix::projector(psi), p);

    let compute = |settings| -> Result<(SpectrumReport, SpectrumReport, f64)> {
        let a = nonzero_spectrum(rho_p.entries(), settings, "rho_p operator")?;
        let b = nonzero_spectrum(lowered.entries(), settings, "phi^p")?;
        let gap = padded_gap(&a, &b)?;
        Ok((a, b, gap))
    };
    let (mut spectrum_rdm, mut spectrum_phi, mut max_gap) = compute(JacobiSettings::default())?;
    let mut verdict = Verdict::classify(max_gap, agree_tol, disagree_floor);
    let mut recomputed = false;
    if verdict == Verdict::Inconclusive {
        (spectrum_rdm, spectrum_phi, max_gap) = compute(JacobiSettings::tight())?;
        verdict = Verdict::classify(max_gap, agree_tol, disagree_floor);
        recomputed = true;
    }

    let scale = 1.0 / factorial(p);
    let scaled = SpectrumReport {
        values: spectrum_phi.values.iter().map(|v| v * scale).collect(),
        ..spectrum_phi.clone()
    }
    .stripped(CONJECTURE_ZERO_THRESHOLD);
    let scaled_gap = padded_gap(&spectrum_rdm, &scaled)?;
    let matrix_spectrum = nonzero_spectrum(&rdm.entries, JacobiSettings::default(), "p-RDM matrix")?;
    let matrix_operator_gap = padded_gap(&matrix_spectrum, &spectrum_rdm)?;

    Ok(ConjectureTrial {
        psi: psi.clone(),
        p,
        spectrum_rdm,
        spectrum_phi,
        max_gap,
        verdict,
        recomputed,
        scaled_gap,
        matrix_operator_gap,
    })
}
