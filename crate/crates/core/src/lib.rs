//! Reduced density operators for fermionic states with a varying particle number.
//!
//! The crate realizes the CAR algebra on `n ≤ 12` modes as exact Jordan–Wigner
//! matrices and builds on it:
//!
//! * [`density`]: matrix units `A_JK`, the λ-matrix of a state, parity classes.
//! * [`mode`]: mode-reduced states of a bipartition, spectral equality of the
//!   two marginals, and the parity-SSR purification with local unitaries.
//! * [`particle`]: p-particle reduced density matrices, the particle-tracing
//!   map `Φ`, natural occupations and the `ρ_p` versus `Φ^p(ρ)` comparison.
//! * [`campaign`]: seeded, resumable fuzz campaigns over that comparison.
//!
//! Modes are numbered from 1 and mode 1 is the most significant bit of a
//! basis index.

pub mod campaign;
pub mod cli;
pub mod density;
pub mod error;
pub mod fock;
pub mod mode;
pub mod particle;
pub mod report;
pub mod sample;
pub mod spectral;
pub mod statefile;
pub mod verify;

pub use ndarray;
pub use num_complex;

pub use density::{
    is_even_state, lambda_from_state, lambda_from_state_via_monomials, matrix_unit,
    operator_from_lambda, parity_classify, DensityMatrix, DensityTag, EvennessReport,
    Parity, ParityClass,
};
pub use error::{Error, Result};
pub use fock::{
    annihilation_op, creation_op, mode_swap, parity_operator, permutation_unitary,
    relabel_modes, unrelabel_modes, verify_car, CarReport, FockVector, Ladder, MultiIndex,
    OperatorMatrix, MAX_MODES,
};
pub use mode::{
    canonical_ssr_purification, entropy_report, equispectral, reconstruct_locals, reduce_modes,
    tensor_embed, two_mode_criterion, Bipartition, Block, EntropyReport, Equispectrality,
    PurificationResult, TensorEmbedding,
};
pub use particle::{
    check_fixed_n_reduction, conjecture_trial, natural_occupations, pauli_constraint_check,
    phi, phi_pow, rdm_matrix, rdm_operator, ConjectureTrial, FixedNReport, PRdmMatrix,
    PauliReport, Verdict,
};
pub use sample::{sample_state, Ensemble};
pub use spectral::{eig_hermitian, spectra_equal, von_neumann_entropy, Eigen, SpectrumReport};
