//! Composite Hilbert-space algebra for a system coupled to an environment.
//!
//! Every composite object uses one index convention, system-major:
//! the composite index of `|i⟩_sys ⊗ |j⟩_env` is `k = i * d_env + j`. This is
//! the ordering of `H ⊗ 𝟙_E + 𝟙 ⊗ H_E`, and it is the ordering produced by
//! [`nalgebra::Matrix::kronecker`] when the system factor is on the left.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Default upper bound on any composite dimension.
pub const DEFAULT_DIM_CAP: usize = 4096;

/// Environment variable overriding [`DEFAULT_DIM_CAP`].
pub const DIM_CAP_ENV: &str = "RELATIME_DIM_CAP";

const HERMITIAN_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const NORM_TOL: f64 = 1e-12;

/// Active dimension cap, honoring `RELATIME_DIM_CAP` when it parses.
pub fn dim_cap() -> usize {
    std::env::var(DIM_CAP_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&c| c > 0)
        .unwrap_or(DEFAULT_DIM_CAP)
}

pub(crate) fn check_cap(requested: usize) -> Result<()> {
    let cap = dim_cap();
    if requested > cap {
        return Err(Error::DimensionCap { requested, cap });
    }
    Ok(())
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Largest entry modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// `AB - BA`.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// `AB + BA`.
pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

/// Entrywise `max |A - A†|`.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

fn trace_re(m: &CMatrix) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

fn ensure_square(m: &CMatrix, what: &str) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::InvalidDimension(format!(
            "{what} must be a non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

/// Dimensions of the system and environment factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpaceDims {
    d_sys: usize,
    d_env: usize,
}

impl SpaceDims {
    pub fn new(d_sys: usize, d_env: usize) -> Result<Self> {
        if d_sys == 0 || d_env == 0 {
            return Err(Error::InvalidDimension(format!(
                "factor dimensions must be positive (d_sys = {d_sys}, d_env = {d_env})"
            )));
        }
        let total = d_sys.checked_mul(d_env).ok_or(Error::DimensionCap {
            requested: usize::MAX,
            cap: dim_cap(),
        })?;
        check_cap(total)?;
        Ok(Self { d_sys, d_env })
    }

    pub fn d_sys(&self) -> usize {
        self.d_sys
    }

    pub fn d_env(&self) -> usize {
        self.d_env
    }

    pub fn total(&self) -> usize {
        self.d_sys * self.d_env
    }

    /// Composite index of `|i⟩_sys ⊗ |j⟩_env`.
    #[inline]
    pub fn index(&self, i_sys: usize, j_env: usize) -> usize {
        i_sys * self.d_env + j_env
    }
}

/// Dense Hermitian operator.
///
/// Construction symmetrizes the input to `(A + A†)/2`; a warning is logged when
/// the discarded anti-Hermitian part exceeds `1e-12 · max(1, ‖A‖_max)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    m: CMatrix,
}

impl HermitianOperator {
    pub fn new(m: CMatrix) -> Result<Self> {
        let dim = ensure_square(&m, "operator")?;
        check_cap(dim)?;
        let defect = hermitian_defect(&m);
        if defect > HERMITIAN_TOL * max_abs(&m).max(1.0) {
            log::warn!("operator asymmetry {defect:e} exceeds tolerance; symmetrizing");
        }
        Ok(Self { m: hermitian_part(&m) })
    }

    /// Real symmetric input.
    pub fn from_real(m: &DMatrix<f64>) -> Result<Self> {
        Self::new(m.map(|x| C64::new(x, 0.0)))
    }

    pub fn from_diagonal(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidDimension("empty diagonal".into()));
        }
        let d = DVector::from_iterator(values.len(), values.iter().map(|&x| C64::new(x, 0.0)));
        Ok(Self {
            m: CMatrix::from_diagonal(&d),
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: CMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            m: CMatrix::zeros(dim, dim),
        }
    }

    /// Wraps a matrix that is Hermitian by construction.
    pub(crate) fn from_hermitian_unchecked(m: CMatrix) -> Self {
        Self { m: hermitian_part(&m) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn max_norm(&self) -> f64 {
        max_abs(&self.m)
    }

    /// `A + c·𝟙`.
    pub fn shifted(&self, c: f64) -> Self {
        let mut m = self.m.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += C64::new(c, 0.0);
        }
        Self { m }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "cannot add {}x{} and {}x{} operators",
                self.dim(),
                self.dim(),
                other.dim(),
                other.dim()
            )));
        }
        Ok(Self { m: &self.m + &other.m })
    }
}

/// Density matrix, normalized or tagged as unnormalized.
///
/// Invariants: Hermitian, eigenvalues `≥ -1e-10` (relative to the trace for
/// the unnormalized variant), and unit trace within `1e-10` when normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix,
    normalized: bool,
}

impl DensityMatrix {
    /// Validates a normalized density matrix.
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::validate(m, true)
    }

    /// Validates a Hermitian PSD matrix of arbitrary positive trace.
    pub fn unnormalized(m: CMatrix) -> Result<Self> {
        Self::validate(m, false)
    }

    fn validate(m: CMatrix, normalized: bool) -> Result<Self> {
        let dim = ensure_square(&m, "density matrix")?;
        check_cap(dim)?;
        let scale = max_abs(&m).max(1.0);
        let defect = hermitian_defect(&m);
        if defect > HERMITIAN_TOL * scale {
            return Err(Error::NotDensityMatrix(format!("not Hermitian (defect {defect:e})")));
        }
        let m = hermitian_part(&m);
        let tr = trace_re(&m);
        if normalized && (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::NotDensityMatrix(format!("trace {tr} != 1")));
        }
        if !normalized && tr <= 0.0 {
            return Err(Error::NotDensityMatrix(format!("non-positive trace {tr}")));
        }
        let min_eig = min_eigenvalue(&m);
        if min_eig < -PSD_TOL * tr.max(1.0) {
            return Err(Error::NotDensityMatrix(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(Self { m, normalized })
    }

    /// Symmetrizes a matrix that is Hermitian PSD by construction, skipping validation.
    pub(crate) fn from_hermitian_unchecked(m: CMatrix, normalized: bool) -> Self {
        Self {
            m: hermitian_part(&m),
            normalized,
        }
    }

    /// `|ψ⟩⟨ψ|` for a unit vector.
    pub fn from_pure(psi: &CVector) -> Result<Self> {
        let n = psi.norm();
        if (n - 1.0).abs() > NORM_TOL * 100.0 {
            return Err(Error::NotNormalized(n));
        }
        check_cap(psi.len())?;
        Ok(Self {
            m: psi * psi.adjoint(),
            normalized: true,
        })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            m: CMatrix::identity(dim, dim).scale(1.0 / dim as f64),
            normalized: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn trace(&self) -> f64 {
        trace_re(&self.m)
    }

    /// Returns the unit-trace version together with the original trace.
    pub fn normalize(&self) -> Result<(Self, f64)> {
        let tr = self.trace();
        if !(tr > 0.0) || !tr.is_finite() {
            return Err(Error::NotDensityMatrix(format!("cannot normalize trace {tr}")));
        }
        Ok((
            Self {
                m: self.m.unscale(tr),
                normalized: true,
            },
            tr,
        ))
    }

    pub fn purity(&self) -> f64 {
        (&self.m * &self.m).trace().re
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        sorted_eigenvalues(&self.m)
    }
}

pub(crate) fn sorted_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut w: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    w.sort_by(f64::total_cmp);
    w
}

fn min_eigenvalue(m: &CMatrix) -> f64 {
    sorted_eigenvalues(m).first().copied().unwrap_or(0.0)
}

/// Unit vector on the composite space, optionally an `H_tot` eigenstate.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalState {
    dims: SpaceDims,
    amplitudes: CVector,
    e_tot: Option<f64>,
}

impl GlobalState {
    /// Requires `‖amplitudes‖₂ = 1` within `1e-12`.
    pub fn new(dims: SpaceDims, amplitudes: CVector, e_tot: Option<f64>) -> Result<Self> {
        if amplitudes.len() != dims.total() {
            return Err(Error::DimensionMismatch(format!(
                "state has {} amplitudes, composite dimension is {}",
                amplitudes.len(),
                dims.total()
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self {
            dims,
            amplitudes,
            e_tot,
        })
    }

    /// Rescales the amplitudes to unit norm.
    pub fn normalized(dims: SpaceDims, amplitudes: CVector, e_tot: Option<f64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NotNormalized(norm));
        }
        Self::new(dims, amplitudes.unscale(norm), e_tot)
    }

    /// Builds the state from its `d_sys × d_env` coefficient matrix `C[i, j] = ⟨i, j|Ψ⟩`.
    pub fn from_coefficients(coeffs: &CMatrix, e_tot: Option<f64>) -> Result<Self> {
        let dims = SpaceDims::new(coeffs.nrows(), coeffs.ncols())?;
        let amps = CVector::from_fn(dims.total(), |k, _| coeffs[(k / dims.d_env(), k % dims.d_env())]);
        Self::normalized(dims, amps, e_tot)
    }

    pub fn dims(&self) -> SpaceDims {
        self.dims
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn amplitude(&self, i_sys: usize, j_env: usize) -> C64 {
        self.amplitudes[self.dims.index(i_sys, j_env)]
    }

    pub fn e_tot(&self) -> Option<f64> {
        self.e_tot
    }

    pub fn with_energy(mut self, e_tot: Option<f64>) -> Self {
        self.e_tot = e_tot;
        self
    }

    /// `d_sys × d_env` coefficient matrix.
    pub fn coefficients(&self) -> CMatrix {
        let d = self.dims;
        CMatrix::from_fn(d.d_sys(), d.d_env(), |i, j| self.amplitudes[d.index(i, j)])
    }

    /// `tr_E[(𝟙 ⊗ ρ_E) P_Ψ] = C ρ_Eᵀ C†`, unnormalized; equal to
    /// [`conditioned_trace`] on [`Self::projector`] without forming it.
    pub fn conditioned_reduced(&self, rho_env: &DensityMatrix) -> Result<DensityMatrix> {
        if rho_env.dim() != self.dims.d_env() {
            return Err(Error::DimensionMismatch(format!(
                "conditioning density has dimension {}, environment has {}",
                rho_env.dim(),
                self.dims.d_env()
            )));
        }
        let c = self.coefficients();
        let out = &c * rho_env.m.transpose() * c.adjoint();
        Ok(DensityMatrix::from_hermitian_unchecked(
            (&out + out.adjoint()) * C64::new(0.5, 0.0),
            false,
        ))
    }

    /// `tr_S P_Ψ = (C†C)ᵀ`.
    pub fn env_marginal(&self) -> DensityMatrix {
        let c = self.coefficients();
        DensityMatrix::from_hermitian_unchecked((c.adjoint() * c).transpose(), true)
    }

    /// `P_Ψ = |Ψ⟩⟨Ψ|`.
    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix {
            m: &self.amplitudes * self.amplitudes.adjoint(),
            normalized: true,
        }
    }
}

/// Kronecker product in the system-major convention, subject to the dimension cap.
pub fn kron(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let rows = a.nrows().checked_mul(b.nrows());
    let cols = a.ncols().checked_mul(b.ncols());
    match (rows, cols) {
        (Some(r), Some(c)) => {
            check_cap(r.max(c))?;
            Ok(a.kronecker(b))
        }
        _ => Err(Error::DimensionCap {
            requested: usize::MAX,
            cap: dim_cap(),
        }),
    }
}

/// `A ⊗ B` with `(A⊗B)[(i·d_b + j), (k·d_b + l)] = A[i,k]·B[j,l]`.
pub fn tensor_op(a: &HermitianOperator, b: &HermitianOperator) -> Result<HermitianOperator> {
    Ok(HermitianOperator { m: kron(&a.m, &b.m)? })
}

/// `H ⊗ 𝟙_E + 𝟙 ⊗ H_E + V`.
pub fn total_hamiltonian(
    h_sys: &HermitianOperator,
    h_env: &HermitianOperator,
    v: Option<&HermitianOperator>,
) -> Result<HermitianOperator> {
    let (ds, de) = (h_sys.dim(), h_env.dim());
    let total = ds.checked_mul(de).ok_or(Error::DimensionCap {
        requested: usize::MAX,
        cap: dim_cap(),
    })?;
    check_cap(total)?;
    if let Some(v) = v {
        if v.dim() != total {
            return Err(Error::DimensionMismatch(format!(
                "interaction has dimension {}, expected {ds}·{de} = {total}",
                v.dim()
            )));
        }
    }
    let mut m = kron(&h_sys.m, &CMatrix::identity(de, de))?;
    m += kron(&CMatrix::identity(ds, ds), &h_env.m)?;
    if let Some(v) = v {
        m += &v.m;
    }
    Ok(HermitianOperator { m })
}

fn check_global(dim: usize, dims: SpaceDims) -> Result<()> {
    if dim != dims.total() {
        return Err(Error::DimensionMismatch(format!(
            "global operator has dimension {dim}, expected {}·{} = {}",
            dims.d_sys(),
            dims.d_env(),
            dims.total()
        )));
    }
    Ok(())
}

/// Block `(𝟙 ⊗ ⟨a|) M (𝟙 ⊗ |b⟩)` of a composite matrix.
fn env_block(m: &CMatrix, dims: SpaceDims, a: usize, b: usize) -> CMatrix {
    let step = dims.d_env() - 1;
    let d = dims.d_sys();
    m.view_with_steps((a, b), (d, d), (step, step)).into_owned()
}

/// `tr_E ρ`, preserving the normalization tag.
pub fn partial_trace_env(rho_global: &DensityMatrix, dims: SpaceDims) -> Result<DensityMatrix> {
    check_global(rho_global.dim(), dims)?;
    let d = dims.d_sys();
    let reduced = (0..dims.d_env()).fold(CMatrix::zeros(d, d), |acc, j| {
        acc + env_block(&rho_global.m, dims, j, j)
    });
    Ok(DensityMatrix::from_hermitian_unchecked(reduced, rho_global.normalized))
}

/// `tr_E[(𝟙 ⊗ ρ_E) P_Ψ]`, unnormalized.
///
/// `p_psi` must be a global projector (unit trace, unit purity); `rho_env`
/// acts on the environment factor.
pub fn conditioned_trace(p_psi: &DensityMatrix, rho_env: &DensityMatrix, dims: SpaceDims) -> Result<DensityMatrix> {
    check_global(p_psi.dim(), dims)?;
    if rho_env.dim() != dims.d_env() {
        return Err(Error::DimensionMismatch(format!(
            "conditioning density has dimension {}, environment has {}",
            rho_env.dim(),
            dims.d_env()
        )));
    }
    let tr = p_psi.trace();
    let purity = p_psi.purity();
    if (tr - 1.0).abs() > 1e-10 || (purity - 1.0).abs() > 1e-9 {
        return Err(Error::NotDensityMatrix(format!(
            "expected a global projector (trace {tr}, purity {purity})"
        )));
    }
    let d = dims.d_sys();
    let mut out = CMatrix::zeros(d, d);
    for a in 0..dims.d_env() {
        for b in 0..dims.d_env() {
            let w = rho_env.m[(b, a)];
            if w != C64::new(0.0, 0.0) {
                out += env_block(&p_psi.m, dims, a, b) * w;
            }
        }
    }
    Ok(DensityMatrix::from_hermitian_unchecked(out, false))
}

/// `tr_S ρ`, preserving the normalization tag.
pub fn partial_trace_sys(rho_global: &DensityMatrix, dims: SpaceDims) -> Result<DensityMatrix> {
    check_global(rho_global.dim(), dims)?;
    let de = dims.d_env();
    let mut out = CMatrix::zeros(de, de);
    for i in 0..dims.d_sys() {
        let off = i * de;
        out += rho_global.m.view((off, off), (de, de));
    }
    Ok(DensityMatrix::from_hermitian_unchecked(out, rho_global.normalized))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_state_shortcuts_match_general_traces() {
        let dims = SpaceDims::new(2, 3).unwrap();
        let amps = CVector::from_fn(6, |k, _| C64::new(0.3 * k as f64 - 0.5, 0.1 * (k * k) as f64));
        let psi = GlobalState::normalized(dims, amps, None).unwrap();
        let rho_env = DensityMatrix::unnormalized(CMatrix::from_row_slice(
            3,
            3,
            &[
                C64::new(0.5, 0.0),
                C64::new(0.1, 0.2),
                C64::new(0.0, -0.1),
                C64::new(0.1, -0.2),
                C64::new(0.4, 0.0),
                C64::new(0.05, 0.0),
                C64::new(0.0, 0.1),
                C64::new(0.05, 0.0),
                C64::new(0.3, 0.0),
            ],
        ))
        .unwrap();
        let general = conditioned_trace(&psi.projector(), &rho_env, dims).unwrap();
        let fast = psi.conditioned_reduced(&rho_env).unwrap();
        assert!(max_abs_diff(general.matrix(), fast.matrix()) < 1e-15);
        let marginal = partial_trace_sys(&psi.projector(), dims).unwrap();
        assert!(max_abs_diff(marginal.matrix(), psi.env_marginal().matrix()) < 1e-15);
    }

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
    fn identity_tensor_identity() {
        let i2 = HermitianOperator::identity(2);
        let i4 = tensor_op(&i2, &i2).unwrap();
        assert_eq!(i4.matrix(), &CMatrix::identity(4, 4));
    }

    #[test]
    fn diagonal_embedding_follows_system_major_order() {
        let a = HermitianOperator::from_diagonal(&[0.0, 1.0]).unwrap();
        let out = tensor_op(&a, &HermitianOperator::identity(2)).unwrap();
        let expected = HermitianOperator::from_diagonal(&[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(out, expected);
    }

    #[test]
    fn sigma_x_tensor_sigma_x_flips_both() {
        let xx = tensor_op(&sigma_x(), &sigma_x()).unwrap();
        // explicit anti-diagonal 4x4
        let mut explicit = CMatrix::zeros(4, 4);
        for k in 0..4 {
            explicit[(k, 3 - k)] = c(1.0, 0.0);
        }
        assert_eq!(xx.matrix(), &explicit);
        let e0 = CVector::from_fn(4, |k, _| if k == 0 { c(1., 0.) } else { c(0., 0.) });
        let out = xx.matrix() * e0;
        assert_eq!(out[3], c(1.0, 0.0));
        assert_eq!(out.iter().filter(|z| z.norm() > 0.0).count(), 1);
    }

    #[test]
    fn tensor_respects_dimension_cap() {
        let big = HermitianOperator::identity(100);
        let err = tensor_op(&big, &big).unwrap_err();
        assert!(matches!(err, Error::DimensionCap { requested: 10000, .. }));
        assert!(err.to_string().contains("dimension cap exceeded"));
    }

    #[test]
    fn total_hamiltonian_diagonal_sum() {
        let h = HermitianOperator::from_diagonal(&[0.0, 1.0]).unwrap();
        let he = HermitianOperator::from_diagonal(&[2.0, 1.0]).unwrap();
        let tot = total_hamiltonian(&h, &he, None).unwrap();
        let expected = HermitianOperator::from_diagonal(&[2.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(tot, expected);
    }

    #[test]
    fn total_hamiltonian_zero() {
        let z = HermitianOperator::zeros(2);
        let v = HermitianOperator::zeros(6);
        let tot = total_hamiltonian(&z, &HermitianOperator::zeros(3), Some(&v)).unwrap();
        assert_eq!(tot.matrix(), &CMatrix::zeros(6, 6));
    }

    #[test]
    fn total_hamiltonian_rejects_bad_interaction() {
        let z = HermitianOperator::zeros(2);
        let v = HermitianOperator::zeros(5);
        let err = total_hamiltonian(&z, &z, Some(&v)).unwrap_err();
        assert!(err.to_string().starts_with("incompatible dimensions"));
    }

    #[test]
    fn bell_state_reduces_to_maximally_mixed() {
        let dims = SpaceDims::new(2, 2).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let amps = CVector::from_vec(vec![c(s, 0.), c(0., 0.), c(0., 0.), c(s, 0.)]);
        let psi = GlobalState::new(dims, amps, None).unwrap();
        let rho = partial_trace_env(&psi.projector(), dims).unwrap();
        assert!(max_abs_diff(rho.matrix(), &CMatrix::identity(2, 2).scale(0.5)) < 1e-15);
        assert!(rho.is_normalized());
    }

    #[test]
    fn product_state_reduces_to_factor() {
        let phi = CVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let chi = CVector::from_vec(vec![c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let dims = SpaceDims::new(2, 3).unwrap();
        let amps = kron(
            &CMatrix::from_column_slice(2, 1, phi.as_slice()),
            &CMatrix::from_column_slice(3, 1, chi.as_slice()),
        )
        .unwrap();
        let psi = GlobalState::new(dims, CVector::from_column_slice(amps.as_slice()), None).unwrap();
        let rho = partial_trace_env(&psi.projector(), dims).unwrap();
        assert!(max_abs_diff(rho.matrix(), &(&phi * phi.adjoint())) < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_wrong_dimension() {
        let dims = SpaceDims::new(2, 3).unwrap();
        let rho = DensityMatrix::maximally_mixed(4);
        assert!(matches!(
            partial_trace_env(&rho, dims),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn uniform_conditioning_is_scaled_plain_trace() {
        let dims = SpaceDims::new(2, 3).unwrap();
        let amps = CVector::from_fn(6, |k, _| c(1.0 + k as f64, 0.5 * k as f64));
        let psi = GlobalState::normalized(dims, amps, None).unwrap();
        let p = psi.projector();
        let cond = conditioned_trace(&p, &DensityMatrix::maximally_mixed(3), dims).unwrap();
        let plain = partial_trace_env(&p, dims).unwrap();
        assert!(max_abs_diff(cond.matrix(), &plain.matrix().unscale(3.0)) < 1e-13);
        assert!(!cond.is_normalized());
    }

    #[test]
    fn conditioned_trace_requires_projector() {
        let dims = SpaceDims::new(2, 2).unwrap();
        let mixed = DensityMatrix::maximally_mixed(4);
        let err = conditioned_trace(&mixed, &DensityMatrix::maximally_mixed(2), dims).unwrap_err();
        assert!(matches!(err, Error::NotDensityMatrix(_)));
    }

    #[test]
    fn density_validation() {
        let bad_trace = CMatrix::identity(2, 2);
        assert!(DensityMatrix::new(bad_trace.clone()).is_err());
        assert!(DensityMatrix::unnormalized(bad_trace).is_ok());
        let negative = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.5, 0.), c(-0.5, 0.)]));
        assert!(matches!(DensityMatrix::new(negative), Err(Error::NotDensityMatrix(_))));
        let non_herm = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.), c(0.1, 0.), c(0.0, 0.), c(0.5, 0.)]);
        assert!(DensityMatrix::new(non_herm).is_err());
    }

    #[test]
    fn operator_symmetrizes() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(1., 0.), c(0., 0.), c(2., 0.)]);
        let h = HermitianOperator::new(m).unwrap();
        assert_eq!(h.matrix()[(0, 1)], c(0.5, 0.0));
        assert_eq!(hermitian_defect(h.matrix()), 0.0);
    }

    #[test]
    fn global_state_norm_is_enforced() {
        let dims = SpaceDims::new(1, 2).unwrap();
        let amps = CVector::from_vec(vec![c(1., 0.), c(1., 0.)]);
        assert!(matches!(
            GlobalState::new(dims, amps.clone(), None),
            Err(Error::NotNormalized(_))
        ));
        let psi = GlobalState::normalized(dims, amps, Some(0.0)).unwrap();
        assert!((psi.amplitudes().norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn space_dims_rejects_zero() {
        assert!(SpaceDims::new(0, 2).is_err());
        assert!(SpaceDims::new(2, 0).is_err());
        let d = SpaceDims::new(3, 4).unwrap();
        assert_eq!(d.index(2, 1), 9);
    }

    #[test]
    fn system_trace_of_product() {
        let dims = SpaceDims::new(2, 2).unwrap();
        let amps = CVector::from_vec(vec![c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)]);
        let psi = GlobalState::new(dims, amps, None).unwrap();
        let env = partial_trace_sys(&psi.projector(), dims).unwrap();
        assert_eq!(env.matrix()[(1, 1)], c(1.0, 0.0));
        assert_eq!(env.matrix()[(0, 0)], c(0.0, 0.0));
    }
}
