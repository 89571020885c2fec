//! Seeded generators for test fixtures and scenarios.
//!
//! Uses SplitMix64 so a seed reproduces the same draws on every platform.

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::error::Result;
use crate::hilbert::{CMatrix, CVector, HermitianOperator, C64};

/// Portable seeded generator.
pub fn rng(seed: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(seed)
}

/// `n` energies drawn uniformly from `[lo, hi)`, sorted ascending.
pub fn spectrum<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
    v.sort_by(f64::total_cmp);
    v
}

fn complex<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Unit vector with independent uniform complex components.
pub fn unit_vector<R: Rng>(rng: &mut R, n: usize) -> CVector {
    loop {
        let v = CVector::from_fn(n, |_, _| complex(rng));
        let norm = v.norm();
        if norm > 1e-3 {
            return v.unscale(norm);
        }
    }
}

/// Unitary from modified Gram–Schmidt on random columns.
pub fn unitary<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    let mut u = CMatrix::zeros(n, n);
    let mut k = 0;
    while k < n {
        let mut v = CVector::from_fn(n, |_, _| complex(rng));
        for j in 0..k {
            let col = u.column(j).into_owned();
            let overlap = col.dotc(&v);
            v -= col * overlap;
        }
        let norm = v.norm();
        if norm < 1e-6 {
            continue;
        }
        u.set_column(k, &v.unscale(norm));
        k += 1;
    }
    u
}

/// `U diag(energies) U†` for a random unitary `U`.
pub fn hermitian_with_spectrum<R: Rng>(rng: &mut R, energies: &[f64]) -> Result<HermitianOperator> {
    let n = energies.len();
    let u = unitary(rng, n);
    let d = CMatrix::from_diagonal(&CVector::from_iterator(n, energies.iter().map(|&e| C64::new(e, 0.0))));
    HermitianOperator::new(&u * d * u.adjoint())
}

/// Hermitian matrix with entries of order one.
pub fn hermitian<R: Rng>(rng: &mut R, n: usize) -> Result<HermitianOperator> {
    let a = CMatrix::from_fn(n, n, |_, _| complex(rng));
    HermitianOperator::new((&a + a.adjoint()).unscale(2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::max_abs_diff;

    #[test]
    fn unitary_is_unitary() {
        let mut r = rng(7);
        let u = unitary(&mut r, 5);
        assert!(max_abs_diff(&(u.adjoint() * &u), &CMatrix::identity(5, 5)) < 1e-13);
    }

    #[test]
    fn seeds_reproduce() {
        let a = spectrum(&mut rng(3), 4, -1.0, 1.0);
        let b = spectrum(&mut rng(3), 4, -1.0, 1.0);
        assert_eq!(a, b);
        assert!(a.iter().all(|x| (-1.0..1.0).contains(x)));
    }
}
