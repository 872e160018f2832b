//! Seeded random states and unitaries.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::density::Parity;
use crate::error::{argument, Result};
use crate::fock::{check_modes, FockVector, ZERO};

/// Random-state ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ensemble {
    /// Uniform on the unit sphere of `ℂ^(2^n)`.
    General,
    /// Uniform on the unit sphere of one parity sector.
    Ssr(Parity),
    /// Uniform on the unit sphere of the `N`-particle sector.
    FixedN(usize),
}

impl Ensemble {
    pub fn admits(self, index: usize) -> bool {
        match self {
            Ensemble::General => true,
            Ensemble::Ssr(p) => Parity::of_index(index) == p,
            Ensemble::FixedN(count) => index.count_ones() as usize == count,
        }
    }
}

impl fmt::Display for Ensemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ensemble::General => write!(f, "general"),
            Ensemble::Ssr(Parity::Even) => write!(f, "ssr-even"),
            Ensemble::Ssr(Parity::Odd) => write!(f, "ssr-odd"),
            Ensemble::FixedN(count) => write!(f, "fixed-{count}"),
        }
    }
}

impl FromStr for Ensemble {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(Ensemble::General),
            "ssr-even" => Ok(Ensemble::Ssr(Parity::Even)),
            "ssr-odd" => Ok(Ensemble::Ssr(Parity::Odd)),
            _ => s
                .strip_prefix("fixed-")
                .and_then(|rest| rest.parse().ok())
                .map(Ensemble::FixedN)
                .ok_or_else(|| argument(format!("unknown ensemble {s:?}"))),
        }
    }
}

/// Per-trial seed derived from a campaign seed (splitmix64 finalizer).
pub fn trial_seed(campaign_seed: u64, index: u64) -> u64 {
    let mut z = campaign_seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub(crate) fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Draws a normalized state from `ensemble` with the given RNG.
pub fn sample_with<R: Rng + ?Sized>(n: usize, ensemble: Ensemble, rng: &mut R) -> Result<FockVector> {
    check_modes(n)?;
    if let Ensemble::FixedN(count) = ensemble {
        if count > n {
            return Err(argument(format!("particle number {count} exceeds {n} modes")));
        }
    }
    let amps: Vec<Complex64> = (0..1usize << n)
        .map(|index| if ensemble.admits(index) { gaussian(rng) } else { ZERO })
        .collect();
    FockVector::new(n, amps)?.normalized()
}

/// Deterministic draw for a seed.
pub fn sample_state(n: usize, ensemble: Ensemble, seed: u64) -> Result<FockVector> {
    sample_with(n, ensemble, &mut rng_from_seed(seed))
}

/// Haar-random `d × d` unitary (Gram–Schmidt on a complex Gaussian matrix).
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Array2<Complex64> {
    let mut u = Array2::from_shape_fn((d, d), |_| gaussian(rng));
    for k in 0..d {
        for _ in 0..2 {
            for j in 0..k {
                let proj: Complex64 = (0..d).map(|i| u[[i, j]].conj() * u[[i, k]]).sum();
                for i in 0..d {
                    let uij = u[[i, j]];
                    u[[i, k]] -= proj * uij;
                }
            }
        }
        let norm = (0..d).map(|i| u[[i, k]].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..d {
            u[[i, k]] /= norm;
        }
    }
    u
}

/// Random probability vector of length `d`, sorted descending.
pub fn random_spectrum<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    let mut v: Vec<f64> = (0..d).map(|_| gaussian(rng).norm_sqr()).collect();
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ssr_even_support() {
        let psi = sample_state(2, Ensemble::Ssr(Parity::Even), 7).unwrap();
        let a = psi.amplitudes();
        assert_eq!(a[1], ZERO);
        assert_eq!(a[2], ZERO);
        assert!(psi.is_normalized(1e-12));
    }

    #[test]
    fn fixed_n_support() {
        let psi = sample_state(3, Ensemble::FixedN(2), 3).unwrap();
        for (index, a) in psi.amplitudes().iter().enumerate() {
            assert_eq!(*a != ZERO, index.count_ones() == 2);
        }
        assert!(sample_state(3, Ensemble::FixedN(4), 3).is_err());
    }

    #[test]
    fn same_seed_same_state() {
        let a = sample_state(4, Ensemble::General, 99).unwrap();
        let b = sample_state(4, Ensemble::General, 99).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_state(4, Ensemble::General, 100).unwrap());
    }

    #[test]
    fn ensemble_names_round_trip() {
        for e in [Ensemble::General, Ensemble::Ssr(Parity::Even), Ensemble::Ssr(Parity::Odd), Ensemble::FixedN(3)] {
            assert_eq!(e.to_string().parse::<Ensemble>().unwrap(), e);
        }
        assert!("fixed-x".parse::<Ensemble>().is_err());
    }

    #[test]
    fn trial_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| trial_seed(42, i)).collect();
        assert_eq!(seeds.len(), 1000);
    }

    #[test]
    fn haar_is_unitary() {
        let mut rng = rng_from_seed(1);
        let u = haar_unitary(8, &mut rng);
        let g = u.t().mapv(|x| x.conj()).dot(&u);
        for i in 0..8 {
            for j in 0..8 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((g[[i, j]] - target).norm() < 1e-13);
            }
        }
    }
}
