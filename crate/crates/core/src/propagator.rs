//! Complex-time exponentials of Hermitian operators.
//!
//! All exponentials are evaluated through the eigendecomposition
//! `A = U diag(w) U†`, so `f(A) = U diag(f(w)) U†` holds to machine precision
//! for every scalar function used here.

use nalgebra::{linalg::SymmetricEigen, DVector};

use crate::error::{Error, Result};
use crate::hilbert::{
    kron, max_abs, max_abs_diff, total_hamiltonian, CMatrix, DensityMatrix, HermitianOperator, SpaceDims, C64,
};

/// Largest real exponent passed to `exp` before the overflow policy kicks in.
pub const MAX_EXPONENT: f64 = 700.0;

/// Relational complex time `Λ = γ/2 + iλ`.
///
/// `gamma` is the inverse temperature (k_B = 1) and `lambda` the real time
/// (ħ = 1). Negative `gamma` is allowed and describes negative temperature.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComplexTime {
    pub gamma: f64,
    pub lambda: f64,
}

impl ComplexTime {
    pub const ZERO: Self = Self {
        gamma: 0.0,
        lambda: 0.0,
    };

    pub fn new(gamma: f64, lambda: f64) -> Self {
        Self { gamma, lambda }
    }

    /// Pure inverse-temperature flow.
    pub fn thermal(gamma: f64) -> Self {
        Self { gamma, lambda: 0.0 }
    }

    /// Pure real-time flow.
    pub fn real_time(lambda: f64) -> Self {
        Self { gamma: 0.0, lambda }
    }

    /// Recovers `(γ, λ)` from `Λ`.
    pub fn from_value(value: C64) -> Self {
        Self {
            gamma: 2.0 * value.re,
            lambda: value.im,
        }
    }

    /// `Λ`.
    pub fn value(&self) -> C64 {
        C64::new(0.5 * self.gamma, self.lambda)
    }

    /// The environment-side partner `−Λ*`.
    pub fn relational_partner(&self) -> Self {
        Self {
            gamma: -self.gamma,
            lambda: self.lambda,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.gamma == 0.0 && self.lambda == 0.0
    }
}

/// Eigen-decomposition with ascending eigenvalues and unitary eigenvector columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `U diag(f(w)) U†`.
    pub fn map(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let mut scaled = self.eigenvectors.clone();
        for (j, &w) in self.eigenvalues.iter().enumerate() {
            let fw = f(w);
            for z in scaled.column_mut(j).iter_mut() {
                *z *= fw;
            }
        }
        scaled * self.eigenvectors.adjoint()
    }

    /// `‖U diag(w) U† − A‖_max`.
    pub fn reconstruction_residual(&self, a: &HermitianOperator) -> f64 {
        max_abs_diff(&self.map(|w| C64::new(w, 0.0)), a.matrix())
    }

    /// `‖U†U − 𝟙‖_max`.
    pub fn unitarity_residual(&self) -> f64 {
        let n = self.dim();
        max_abs_diff(
            &(self.eigenvectors.adjoint() * &self.eigenvectors),
            &CMatrix::identity(n, n),
        )
    }
}

/// Hermitian eigendecomposition, eigenvalues ascending.
pub fn eigh(a: &HermitianOperator) -> Result<Spectrum> {
    let n = a.dim();
    let eig = SymmetricEigen::try_new(a.matrix().clone(), f64::EPSILON, 100 * n.max(10))
        .ok_or(Error::DiagonalizationFailed)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if eigenvalues.iter().any(|w| !w.is_finite()) {
        return Err(Error::DiagonalizationFailed);
    }
    let eigenvectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

fn max_real_exponent(spec: &Spectrum, c: C64) -> f64 {
    spec.eigenvalues
        .iter()
        .map(|&w| c.re * w)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `e^{cA}`; fails with `ExponentOverflow` if `max Re(c)·w > 700`.
pub fn exp_map(a: &HermitianOperator, c: C64) -> Result<CMatrix> {
    if c == C64::new(0.0, 0.0) {
        return Ok(CMatrix::identity(a.dim(), a.dim()));
    }
    exp_map_spectrum(&eigh(a)?, c)
}

/// `e^{cA}` from a precomputed spectrum.
pub fn exp_map_spectrum(spec: &Spectrum, c: C64) -> Result<CMatrix> {
    let top = max_real_exponent(spec, c);
    if top > MAX_EXPONENT {
        return Err(Error::ExponentOverflow(top));
    }
    Ok(spec.map(|w| (c * w).exp()))
}

/// `e^{cA − s}` with `s = max Re(c)·w`, returned together with `s`.
///
/// The largest eigenvalue of the real part is scaled to one, so the result
/// never overflows; the true exponential is `e^{s}` times the returned matrix.
pub fn exp_map_shifted(spec: &Spectrum, c: C64) -> (CMatrix, f64) {
    let shift = max_real_exponent(spec, c);
    let shift = if shift.is_finite() { shift } else { 0.0 };
    (spec.map(|w| (c * w - shift).exp()), shift)
}

/// `e^{−ΛH} ρ e^{−Λ*H}` (unnormalized).
pub fn two_sided_evolve(rho: &DensityMatrix, h: &HermitianOperator, t: ComplexTime) -> Result<DensityMatrix> {
    let (out, log_scale) = two_sided_evolve_scaled(rho, h, t)?;
    if log_scale > MAX_EXPONENT {
        return Err(Error::ExponentOverflow(log_scale));
    }
    let scale = log_scale.exp();
    Ok(DensityMatrix::from_hermitian_unchecked(
        out.into_matrix() * C64::new(scale, 0.0),
        false,
    ))
}

/// Spectrally shifted form of [`two_sided_evolve`]: returns `(M, s)` with
/// `e^{−ΛH} ρ e^{−Λ*H} = e^{s}·M`.
pub fn two_sided_evolve_scaled(
    rho: &DensityMatrix,
    h: &HermitianOperator,
    t: ComplexTime,
) -> Result<(DensityMatrix, f64)> {
    if rho.dim() != h.dim() {
        return Err(Error::DimensionMismatch(format!(
            "density has dimension {}, Hamiltonian {}",
            rho.dim(),
            h.dim()
        )));
    }
    if t.is_zero() {
        return Ok((
            DensityMatrix::from_hermitian_unchecked(rho.matrix().clone(), false),
            0.0,
        ));
    }
    let spec = eigh(h)?;
    Ok(two_sided_with_spectrum(rho.matrix(), &spec, t))
}

pub(crate) fn two_sided_with_spectrum(rho: &CMatrix, spec: &Spectrum, t: ComplexTime) -> (DensityMatrix, f64) {
    let (m, half_shift) = exp_map_shifted(spec, -t.value());
    let out = &m * rho * m.adjoint();
    (DensityMatrix::from_hermitian_unchecked(out, false), 2.0 * half_shift)
}

/// Relative deviation between `e^{Λ(H_tot − E_tot)}` and `e^{ΛH} ⊗ e^{Λh_E}`
/// for the non-interacting total Hamiltonian, where `h_E = H_E − E_tot`.
///
/// The residual is `‖L − R‖_max / max(1, ‖L‖_max)`.
pub fn factorization_check(
    h_sys: &HermitianOperator,
    h_env: &HermitianOperator,
    dims: SpaceDims,
    t: ComplexTime,
    e_tot: f64,
) -> Result<f64> {
    if h_sys.dim() != dims.d_sys() || h_env.dim() != dims.d_env() {
        return Err(Error::DimensionMismatch(format!(
            "Hamiltonians {}x{} and {}x{} do not match dims ({}, {})",
            h_sys.dim(),
            h_sys.dim(),
            h_env.dim(),
            h_env.dim(),
            dims.d_sys(),
            dims.d_env()
        )));
    }
    let lam = t.value();
    let h_tot = total_hamiltonian(h_sys, h_env, None)?.shifted(-e_tot);
    let lhs = exp_map(&h_tot, lam)?;
    let rhs = kron(&exp_map(h_sys, lam)?, &exp_map(&h_env.shifted(-e_tot), lam)?)?;
    Ok(max_abs_diff(&lhs, &rhs) / max_abs(&lhs).max(1.0))
}

/// Eigenvalues of a Hermitian matrix as a vector (ascending).
pub fn eigenvalues(a: &HermitianOperator) -> Result<DVector<f64>> {
    Ok(DVector::from_vec(eigh(a)?.eigenvalues))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::CVector;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sigma_x() -> HermitianOperator {
        HermitianOperator::new(CMatrix::from_row_slice(
            2,
            2,
            &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)],
        ))
        .unwrap()
    }

    #[test]
    fn diagonal_spectrum_is_sorted_permutation() {
        let a = HermitianOperator::from_diagonal(&[3.0, 1.0, 2.0]).unwrap();
        let s = eigh(&a).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0, 2.0, 3.0]);
        for (col, row) in [(0, 1), (1, 2), (2, 0)] {
            assert!((s.eigenvectors[(row, col)].norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn pauli_x_spectrum() {
        let s = eigh(&sigma_x()).unwrap();
        assert!((s.eigenvalues[0] + 1.0).abs() < 1e-15);
        assert!((s.eigenvalues[1] - 1.0).abs() < 1e-15);
        assert!(s.reconstruction_residual(&sigma_x()) < 1e-15);
    }

    #[test]
    fn degenerate_spectrum_is_orthonormal() {
        let a = HermitianOperator::from_diagonal(&[1.0, 1.0, 1.0, 2.0]).unwrap();
        let s = eigh(&a).unwrap();
        assert!(s.unitarity_residual() < 1e-12);
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let m = exp_map(&sigma_x(), c(0.0, 0.0)).unwrap();
        assert_eq!(m, CMatrix::identity(2, 2));
    }

    #[test]
    fn exp_of_diagonal() {
        let a = HermitianOperator::from_diagonal(&[0.0, 1.0]).unwrap();
        let m = exp_map(&a, c(-1.0, 0.0)).unwrap();
        assert!((m[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((m[(1, 1)] - c((-1.0f64).exp(), 0.0)).norm() < 1e-15);
        assert!(m[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn exp_overflow_is_reported() {
        let a = HermitianOperator::from_diagonal(&[0.0, 1000.0]).unwrap();
        assert!(matches!(exp_map(&a, c(1.0, 0.0)), Err(Error::ExponentOverflow(_))));
        let s = eigh(&a).unwrap();
        let (m, shift) = exp_map_shifted(&s, c(1.0, 0.0));
        assert_eq!(shift, 1000.0);
        assert!((m[(1, 1)] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn two_sided_identity_at_zero_time() {
        let rho = DensityMatrix::new(CMatrix::from_row_slice(
            2,
            2,
            &[c(0.7, 0.), c(0.1, 0.2), c(0.1, -0.2), c(0.3, 0.)],
        ))
        .unwrap();
        let out = two_sided_evolve(&rho, &sigma_x(), ComplexTime::ZERO).unwrap();
        assert_eq!(out.matrix(), rho.matrix());
    }

    #[test]
    fn two_sided_scales_diagonal_entries() {
        let g0 = 0.35;
        let eps = [0.0, 0.5, 1.25];
        let h = HermitianOperator::from_diagonal(&eps).unwrap();
        let rho = DensityMatrix::new(CMatrix::from_diagonal(&CVector::from_vec(vec![
            c(0.5, 0.),
            c(0.3, 0.),
            c(0.2, 0.),
        ])))
        .unwrap();
        let out = two_sided_evolve(&rho, &h, ComplexTime::new(2.0 * g0, 0.4)).unwrap();
        for (i, &e) in eps.iter().enumerate() {
            let expected = rho.matrix()[(i, i)].re * (-2.0 * g0 * e).exp();
            assert!((out.matrix()[(i, i)].re - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn factorization_at_zero_is_exact() {
        let h = HermitianOperator::from_diagonal(&[0.0, 1.0]).unwrap();
        let he = sigma_x();
        let dims = SpaceDims::new(2, 2).unwrap();
        assert_eq!(factorization_check(&h, &he, dims, ComplexTime::ZERO, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn factorization_small_systems() {
        let h = HermitianOperator::new(CMatrix::from_row_slice(
            2,
            2,
            &[c(0.2, 0.), c(0.3, -0.1), c(0.3, 0.1), c(-0.4, 0.)],
        ))
        .unwrap();
        let he = HermitianOperator::new(CMatrix::from_row_slice(
            2,
            2,
            &[c(1.0, 0.), c(0.0, 0.5), c(0.0, -0.5), c(1.5, 0.)],
        ))
        .unwrap();
        let dims = SpaceDims::new(2, 2).unwrap();
        let r = factorization_check(&h, &he, dims, ComplexTime::from_value(c(0.3, 0.7)), 1.2).unwrap();
        assert!(r <= 1e-10, "{r}");
        let r = factorization_check(&h, &he, dims, ComplexTime::new(1.0, 0.0), 1.2).unwrap();
        assert!(r <= 1e-10, "{r}");
    }

    #[test]
    fn complex_time_value() {
        let t = ComplexTime::new(1.0, 2.0);
        assert_eq!(t.value(), c(0.5, 2.0));
        assert_eq!(ComplexTime::from_value(t.value()), t);
        assert_eq!(t.relational_partner().value(), -t.value().conj());
    }
}
