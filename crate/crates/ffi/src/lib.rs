//! C ABI for `fermred`.
//!
//! States and matrices are opaque heap handles released with their `_free`
//! function. Every call returns a [`FermredStatus`]; on failure the message is
//! available from [`fermred_last_error_message`] on the same thread.
//!
//! Mode numbers are 1-based and mode 1 is the most significant bit of a basis
//! index, as in the Rust library.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fermred::mode::Block;
use fermred::ndarray::Array2;
use fermred::{Bipartition, Ensemble, Error, FockVector, Parity, Verdict};
use num_complex::Complex64;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FermredStatus {
    Ok = 0,
    NullPointer = 1,
    Argument = 2,
    Validation = 3,
    Precondition = 4,
    Numeric = 5,
    Io = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Random-state ensembles for [`fermred_state_sample`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FermredEnsemble {
    General = 0,
    SsrEven = 1,
    SsrOdd = 2,
    /// Uses the `particles` argument.
    FixedN = 3,
}

/// Outcome classes of a spectral comparison.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FermredVerdict {
    Agree = 0,
    Inconclusive = 1,
    Disagree = 2,
}

/// Normalized pure state on `n` modes.
pub struct FermredState(FockVector);

/// Dense complex matrix.
pub struct FermredMatrix(Array2<Complex64>);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(FermredStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Argument(_) => FermredStatus::Argument,
            Error::Validation(_) => FermredStatus::Validation,
            Error::Precondition(_) => FermredStatus::Precondition,
            Error::Numeric(_) => FermredStatus::Numeric,
            Error::Io(_) => FermredStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(FermredStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FermredStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FermredStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            FermredStatus::Panic
        }
    }
}

unsafe fn state_ref<'a>(state: *const FermredState) -> Result<&'a FockVector, Failure> {
    state.as_ref().map(|s| &s.0).ok_or_else(|| null("state"))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn write<T>(p: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

unsafe fn partition(n: usize, first_modes: *const usize, count: usize) -> Result<Bipartition, Failure> {
    Ok(Bipartition::from_subset(n, slice(first_modes, count, "first_modes")?)?)
}

fn too_small(needed: usize, got: usize) -> Failure {
    Failure(FermredStatus::BufferTooSmall, format!("buffer holds {got} values, {needed} needed"))
}

/// Message of the last failure on this thread, or null. Valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn fermred_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn fermred_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a state from `2^n` amplitudes split into real and imaginary parts.
/// The amplitudes must have unit norm within `1e-12`.
///
/// # Safety
/// `re` and `im` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fermred_state_new(
    n: usize,
    re: *const f64,
    im: *const f64,
    len: usize,
    out: *mut *mut FermredState,
) -> FermredStatus {
    guard(|| {
        let re = slice(re, len, "re")?;
        let im = slice(im, len, "im")?;
        let amps = re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect();
        let psi = FockVector::new(n, amps)?;
        if !psi.is_normalized(1e-12) {
            return Err(Failure(FermredStatus::Validation, format!("squared norm {} is not 1", psi.norm_sqr())));
        }
        write(out, Box::into_raw(Box::new(FermredState(psi))), "out")
    })
}

/// Parses the plain-text state-file format.
///
/// # Safety
/// `text` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fermred_state_from_text(text: *const c_char, out: *mut *mut FermredState) -> FermredStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| Failure(FermredStatus::Validation, "text is not UTF-8".into()))?;
        let psi = fermred::statefile::read_state(text)?;
        write(out, Box::into_raw(Box::new(FermredState(psi))), "out")
    })
}

/// Deterministic random state. `ensemble` is a [`FermredEnsemble`] value;
/// `particles` is read only for the fixed-N ensemble.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fermred_state_sample(
    n: usize,
    ensemble: i32,
    particles: usize,
    seed: u64,
    out: *mut *mut FermredState,
) -> FermredStatus {
    guard(|| {
        let ens = match ensemble {
            x if x == FermredEnsemble::General as i32 => Ensemble::General,
            x if x == FermredEnsemble::SsrEven as i32 => Ensemble::Ssr(Parity::Even),
            x if x == FermredEnsemble::SsrOdd as i32 => Ensemble::Ssr(Parity::Odd),
            x if x == FermredEnsemble::FixedN as i32 => Ensemble::FixedN(particles),
            other => return Err(Failure(FermredStatus::Argument, format!("unknown ensemble {other}"))),
        };
        let psi = fermred::sample_state(n, ens, seed)?;
        write(out, Box::into_raw(Box::new(FermredState(psi))), "out")
    })
}

/// # Safety
/// `state` must come from this library and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn fermred_state_free(state: *mut FermredState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Mode count, or 0 for a null handle.
///
/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fermred_state_modes(state: *const FermredState) -> usize {
    state.as_ref().map_or(0, |s| s.0.n())
}

/// Copies the `2^n` amplitudes into `re` and `im`, each of length `len`.
///
/// # Safety
/// `state` must be a live handle; `re` and `im` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fermred_state_amplitudes(
    state: *const FermredState,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> FermredStatus {
    guard(|| {
        let psi = state_ref(state)?;
        if len < psi.dim() {
            return Err(too_small(psi.dim(), len));
        }
        let re = slice_mut(re, len, "re")?;
        let im = slice_mut(im, len, "im")?;
        for (i, z) in psi.amplitudes().iter().enumerate() {
            re[i] = z.re;
            im[i] = z.im;
        }
        Ok(())
    })
}

/// Mode-reduced density matrix of one block. The first block consists of the
/// `count` modes in `first_modes`; `second_block` selects its complement.
///
/// # Safety
/// `state` must be a live handle, `first_modes` must hold `count` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fermred_reduce_modes(
    state: *const FermredState,
    first_modes: *const usize,
    count: usize,
    second_block: bool,
    out: *mut *mut FermredMatrix,
) -> FermredStatus {
    guard(|| {
        let psi = state_ref(state)?;
        let part = partition(psi.n(), first_modes, count)?;
        let block = if second_block { Block::Second } else { Block::First };
        let rho = fermred::reduce_modes(psi, &part, block)?;
        write(out, Box::into_raw(Box::new(FermredMatrix(rho.into_entries()))), "out")
    })
}

/// Unnormalized p-particle reduced density matrix in the colexicographic tuple basis.
///
/// # Safety
/// `state` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fermred_rdm(state: *const FermredState, p: usize, out: *mut *mut FermredMatrix) -> FermredStatus {
    guard(|| {
        let rdm = fermred::rdm_matrix(state_ref(state)?, p)?;
        write(out, Box::into_raw(Box::new(FermredMatrix(rdm.entries))), "out")
    })
}

/// # Safety
/// `matrix` must come from this library and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn fermred_matrix_free(matrix: *mut FermredMatrix) {
    if !matrix.is_null() {
        drop(Box::from_raw(matrix));
    }
}

/// Side length of a square matrix, or 0 for a null handle.
///
/// # Safety
/// `matrix` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fermred_matrix_dim(matrix: *const FermredMatrix) -> usize {
    matrix.as_ref().map_or(0, |m| m.0.nrows())
}

/// # Safety
/// `matrix` must be a live handle; `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fermred_matrix_get(
    matrix: *const FermredMatrix,
    row: usize,
    col: usize,
    re: *mut f64,
    im: *mut f64,
) -> FermredStatus {
    guard(|| {
        let m = &matrix.as_ref().ok_or_else(|| null("matrix"))?.0;
        let z = *m
            .get((row, col))
            .ok_or_else(|| Failure(FermredStatus::Argument, format!("index ({row}, {col}) outside {}×{}", m.nrows(), m.ncols())))?;
        write(re, z.re, "re")?;
        write(im, z.im, "im")
    })
}

/// Eigenvalues in descending order. `len` must be at least the dimension.
///
/// # Safety
/// `matrix` must be a live handle; `values` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fermred_matrix_spectrum(matrix: *const FermredMatrix, values: *mut f64, len: usize) -> FermredStatus {
    guard(|| {
        let m = &matrix.as_ref().ok_or_else(|| null("matrix"))?.0;
        if len < m.nrows() {
            return Err(too_small(m.nrows(), len));
        }
        let s = fermred::eig_hermitian(m, 1e-9)?;
        slice_mut(values, len, "values")?[..s.values.len()].copy_from_slice(&s.values);
        Ok(())
    })
}

/// Compares the zero-padded spectra of the two mode-reduced states.
///
/// # Safety
/// `state` must be a live handle, `first_modes` must hold `count` values, and the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn fermred_equispectral(
    state: *const FermredState,
    first_modes: *const usize,
    count: usize,
    tol: f64,
    equal: *mut bool,
    max_gap: *mut f64,
) -> FermredStatus {
    guard(|| {
        let psi = state_ref(state)?;
        let eq = fermred::equispectral(psi, &partition(psi.n(), first_modes, count)?, tol)?;
        write(equal, eq.equal, "equal")?;
        write(max_gap, eq.max_gap, "max_gap")
    })
}

/// Von Neumann entropies of both mode-reduced states, in bits.
///
/// # Safety
/// `state` must be a live handle, `first_modes` must hold `count` values, and the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn fermred_entropies(
    state: *const FermredState,
    first_modes: *const usize,
    count: usize,
    s1: *mut f64,
    s2: *mut f64,
) -> FermredStatus {
    guard(|| {
        let psi = state_ref(state)?;
        let r = fermred::entropy_report(psi, &partition(psi.n(), first_modes, count)?)?;
        write(s1, r.s1, "s1")?;
        write(s2, r.s2, "s2")
    })
}

/// The `n` natural occupation numbers, descending.
///
/// # Safety
/// `state` must be a live handle; `values` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fermred_natural_occupations(state: *const FermredState, values: *mut f64, len: usize) -> FermredStatus {
    guard(|| {
        let psi = state_ref(state)?;
        if len < psi.n() {
            return Err(too_small(psi.n(), len));
        }
        let s = fermred::natural_occupations(psi)?;
        slice_mut(values, len, "values")?[..s.values.len()].copy_from_slice(&s.values);
        Ok(())
    })
}

/// Compares the nonzero spectra of `ρ_p` and `Φ^p(|ψ⟩⟨ψ|)` with the default bands.
/// `scaled_gap` is the gap after dividing `Φ^p` by `p!`.
///
/// # Safety
/// `state` must be a live handle and the out pointers writable.
#[no_mangle]
pub unsafe extern "C" fn fermred_conjecture_trial(
    state: *const FermredState,
    p: usize,
    max_gap: *mut f64,
    verdict: *mut FermredVerdict,
    scaled_gap: *mut f64,
) -> FermredStatus {
    guard(|| {
        let t = fermred::conjecture_trial(
            state_ref(state)?,
            p,
            fermred::particle::AGREE_TOL,
            fermred::particle::DISAGREE_FLOOR,
        )?;
        let v = match t.verdict {
            Verdict::Agree => FermredVerdict::Agree,
            Verdict::Inconclusive => FermredVerdict::Inconclusive,
            Verdict::Disagree => FermredVerdict::Disagree,
        };
        write(max_gap, t.max_gap, "max_gap")?;
        write(verdict, v, "verdict")?;
        write(scaled_gap, t.scaled_gap, "scaled_gap")
    })
}

/// Two-mode criterion for amplitudes ordered `c00, c01, c10, c11`.
///
/// # Safety
/// `re` and `im` must each hold 4 doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fermred_two_mode_criterion(re: *const f64, im: *const f64, out: *mut f64) -> FermredStatus {
    guard(|| {
        let re = slice(re, 4, "re")?;
        let im = slice(im, 4, "im")?;
        let c = [0, 1, 2, 3].map(|i| Complex64::new(re[i], im[i]));
        write(out, fermred::two_mode_criterion(&c), "out")
    })
}
