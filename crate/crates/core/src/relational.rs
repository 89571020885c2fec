//! Global eigenstates of system + environment and the relational system density.
//!
//! A global eigenstate is written in Schmidt form `Ψ = Σ_J a_J |φ_J⟩ ⊗ |J⟩`,
//! where `|J⟩` are the eigenstates of `H_E` (the standard basis of the
//! environment factor) and `|φ_J⟩` are system eigenstates with energies
//! `ε_J`. Pairing `E_J = E_tot − ε_J` makes every branch an eigencomponent of
//! the non-interacting `H_tot` with the same eigenvalue `E_tot`.
//!
//! The relational density at complex time `Λ` is
//!
//! ```text
//! ρ(Λ) = Z(Λ)⁻¹ tr_E[ρ_E(−Λ*) P_Ψ],   ρ_E(Λ) = e^{−Λ h_E} ρ_E(0) e^{−Λ* h_E},
//! Z(Λ) = ⟨Ψ| 𝟙 ⊗ ρ_E(−Λ*) |Ψ⟩,       h_E = H_E − E_tot.
//! ```

use crate::error::{Error, Result};
use crate::hilbert::{
    commutator, max_abs, max_abs_diff, CMatrix, CVector, DensityMatrix, GlobalState, HermitianOperator, SpaceDims, C64,
};
use crate::propagator::{eigh, two_sided_evolve_scaled, ComplexTime, MAX_EXPONENT};

const UNITARY_TOL: f64 = 1e-11;
const SCHMIDT_NORM_TOL: f64 = 1e-12;
/// Relative eigenvalue threshold defining the support of a density.
pub const SUPPORT_TOL: f64 = 1e-10;

/// System eigenenergies `ε_J` and the orthonormal eigenbasis `|φ_J⟩` (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpectrumInput {
    energies: Vec<f64>,
    basis: CMatrix,
}

impl SystemSpectrumInput {
    pub fn new(energies: Vec<f64>, basis: CMatrix) -> Result<Self> {
        let d = energies.len();
        if d == 0 {
            return Err(Error::InvalidDimension("empty system spectrum".into()));
        }
        if basis.nrows() != d || basis.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "basis is {}x{}, spectrum has {d} energies",
                basis.nrows(),
                basis.ncols()
            )));
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidArgument("non-finite system energy".into()));
        }
        let defect = max_abs_diff(&(basis.adjoint() * &basis), &CMatrix::identity(d, d));
        if defect > UNITARY_TOL {
            return Err(Error::NotUnitary(defect));
        }
        Ok(Self { energies, basis })
    }

    /// Energies in the computational basis.
    pub fn diagonal(energies: Vec<f64>) -> Result<Self> {
        let d = energies.len();
        Self::new(energies, CMatrix::identity(d, d))
    }

    /// Spectrum and eigenbasis of a system Hamiltonian.
    pub fn from_hamiltonian(h: &HermitianOperator) -> Result<Self> {
        let spec = eigh(h)?;
        Self::new(spec.eigenvalues, spec.eigenvectors)
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    /// `|φ_J⟩`.
    pub fn branch(&self, j: usize) -> CVector {
        self.basis.column(j).into_owned()
    }

    /// `H = Σ_J ε_J |φ_J⟩⟨φ_J|`.
    pub fn hamiltonian(&self) -> HermitianOperator {
        let mut scaled = self.basis.clone();
        for (j, &e) in self.energies.iter().enumerate() {
            scaled.column_mut(j).scale_mut(e);
        }
        HermitianOperator::from_hermitian_unchecked(scaled * self.basis.adjoint())
    }
}

/// Diagonal environment Hamiltonian `H_E = Σ_J E_J |J⟩⟨J|` and the total energy.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentModel {
    energies: Vec<f64>,
    e_tot: f64,
}

impl EnvironmentModel {
    pub fn new(energies: Vec<f64>, e_tot: f64) -> Result<Self> {
        if energies.is_empty() {
            return Err(Error::InvalidDimension("empty environment spectrum".into()));
        }
        Ok(Self { energies, e_tot })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn e_tot(&self) -> f64 {
        self.e_tot
    }

    /// `E_J − E_tot`.
    pub fn shifted_energies(&self) -> Vec<f64> {
        self.energies.iter().map(|e| e - self.e_tot).collect()
    }

    /// `H_E`.
    pub fn hamiltonian(&self) -> HermitianOperator {
        HermitianOperator::from_diagonal(&self.energies).expect("non-empty spectrum")
    }

    /// `h_E = H_E − E_tot`.
    pub fn shifted_hamiltonian(&self) -> HermitianOperator {
        HermitianOperator::from_diagonal(&self.shifted_energies()).expect("non-empty spectrum")
    }
}

/// Default spacing of environment levels that carry no branch: `max|ε| + 1`.
pub fn default_spacer_gap(system_energies: &[f64]) -> f64 {
    system_energies.iter().fold(0.0f64, |m, e| m.max(e.abs())) + 1.0
}

/// Environment with `E_J = E_tot − ε_J` for the paired levels and spacer levels
/// stacked above the highest paired level in steps of `gap`.
pub(crate) fn paired_environment(paired_eps: &[f64], e_tot: f64, d_env: usize, gap: f64) -> Result<EnvironmentModel> {
    if !(gap > 0.0) || !gap.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "spacer gap must be positive, got {gap}"
        )));
    }
    let mut energies: Vec<f64> = paired_eps.iter().map(|e| e_tot - e).collect();
    warn_on_collisions(&energies);
    let top = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for k in 0..d_env.saturating_sub(paired_eps.len()) {
        energies.push(top + (k + 1) as f64 * gap);
    }
    EnvironmentModel::new(energies, e_tot)
}

fn warn_on_collisions(energies: &[f64]) {
    for (a, ea) in energies.iter().enumerate() {
        for eb in &energies[a + 1..] {
            if (ea - eb).abs() <= 1e-12 * ea.abs().max(1.0) {
                log::warn!("environment energy {ea} is shared by two branches (accidental degeneracy)");
                return;
            }
        }
    }
}

/// Schmidt coefficients `a_J ≥ 0` paired with the system eigenbasis and the
/// environment eigenbasis `|J⟩`, `J < D`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtDecomposition {
    coefficients: Vec<f64>,
    system: SystemSpectrumInput,
    d_env: usize,
}

impl SchmidtDecomposition {
    /// Coefficients are rescaled to `Σ a_J² = 1` (with a warning) when needed.
    pub fn new(coefficients: Vec<f64>, system: SystemSpectrumInput, d_env: usize) -> Result<Self> {
        let d = system.dim();
        if coefficients.len() != d {
            return Err(Error::InvalidSchmidt(format!(
                "{} coefficients for a {d}-dimensional system",
                coefficients.len()
            )));
        }
        if d_env < d {
            return Err(Error::EnvironmentTooSmall { d_sys: d, d_env });
        }
        if coefficients.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::InvalidSchmidt(
                "coefficients must be finite and nonnegative".into(),
            ));
        }
        let norm2: f64 = coefficients.iter().map(|a| a * a).sum();
        if !(norm2 > 0.0) {
            return Err(Error::InvalidSchmidt("all coefficients vanish".into()));
        }
        let coefficients = if (norm2 - 1.0).abs() > SCHMIDT_NORM_TOL {
            log::warn!("Schmidt coefficients have Σa² = {norm2}; normalizing");
            let n = norm2.sqrt();
            coefficients.into_iter().map(|a| a / n).collect()
        } else {
            coefficients
        };
        Ok(Self {
            coefficients,
            system,
            d_env,
        })
    }

    /// Equal weights `a_J = 1/√D` (the maximally entangled case).
    pub fn uniform(system: SystemSpectrumInput, d_env: usize) -> Result<Self> {
        let d = system.dim();
        Self::new(vec![(d as f64).recip().sqrt(); d], system, d_env)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn system(&self) -> &SystemSpectrumInput {
        &self.system
    }

    pub fn d_env(&self) -> usize {
        self.d_env
    }

    pub fn is_maximally_entangled(&self) -> bool {
        let a0 = self.coefficients[0];
        self.coefficients.iter().all(|a| (a - a0).abs() <= 1e-12)
    }
}

/// Maximally entangled eigenstate `(1/√D) Σ_J |φ_J⟩ ⊗ |J⟩` with `E_J = E_tot − ε_J`.
pub fn build_mes(spec: &SystemSpectrumInput, e_tot: f64, d_env: usize) -> Result<(GlobalState, EnvironmentModel)> {
    build_mes_with_gap(spec, e_tot, d_env, default_spacer_gap(spec.energies()))
}

pub fn build_mes_with_gap(
    spec: &SystemSpectrumInput,
    e_tot: f64,
    d_env: usize,
    spacer_gap: f64,
) -> Result<(GlobalState, EnvironmentModel)> {
    if d_env < spec.dim() {
        return Err(Error::EnvironmentTooSmall {
            d_sys: spec.dim(),
            d_env,
        });
    }
    let schmidt = SchmidtDecomposition::uniform(spec.clone(), d_env)?;
    build_schmidt_with_gap(&schmidt, e_tot, spacer_gap)
}

/// Schmidt-form eigenstate `Σ_J a_J |φ_J⟩ ⊗ |J⟩`.
pub fn build_schmidt(schmidt: &SchmidtDecomposition, e_tot: f64) -> Result<(GlobalState, EnvironmentModel)> {
    build_schmidt_with_gap(schmidt, e_tot, default_spacer_gap(schmidt.system.energies()))
}

pub fn build_schmidt_with_gap(
    schmidt: &SchmidtDecomposition,
    e_tot: f64,
    spacer_gap: f64,
) -> Result<(GlobalState, EnvironmentModel)> {
    let sys = &schmidt.system;
    let dims = SpaceDims::new(sys.dim(), schmidt.d_env)?;
    let env = paired_environment(sys.energies(), e_tot, schmidt.d_env, spacer_gap)?;
    let mut coeffs = CMatrix::zeros(dims.d_sys(), dims.d_env());
    for (j, &a) in schmidt.coefficients.iter().enumerate() {
        coeffs
            .column_mut(j)
            .copy_from(&(sys.basis.column(j) * C64::new(a, 0.0)));
    }
    let psi = GlobalState::from_coefficients(&coeffs, Some(e_tot))?;
    Ok((psi, env))
}

/// Environment-side weighting inserted into the partial trace.
///
/// Only relative weights matter; the overall scale is absorbed in `Z`.
#[derive(Debug, Clone, PartialEq)]
pub enum ConditioningDensity {
    /// `Σ_J p_J |J⟩⟨J|` in the `H_E` eigenbasis.
    Diagonal(Vec<f64>),
    /// General (possibly unnormalized) environment density.
    Full(DensityMatrix),
}

impl ConditioningDensity {
    /// `ρ_E(0) ∝ 𝟙_E`, the plain partial trace.
    pub fn uniform(d_env: usize) -> Self {
        Self::Diagonal(vec![1.0; d_env])
    }

    pub fn diagonal(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidConditioning("no weights".into()));
        }
        if weights.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidConditioning(
                "weights must be finite and nonnegative".into(),
            ));
        }
        if weights.iter().all(|p| *p == 0.0) {
            return Err(Error::InvalidConditioning("all weights are zero".into()));
        }
        Ok(Self::Diagonal(weights))
    }

    /// Full environment density; must be Hermitian PSD with positive trace.
    pub fn full(m: CMatrix) -> Result<Self> {
        DensityMatrix::unnormalized(m)
            .map(Self::Full)
            .map_err(|e| Error::InvalidConditioning(e.to_string()))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Diagonal(w) => w.len(),
            Self::Full(m) => m.dim(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        match self {
            Self::Diagonal(_) => true,
            Self::Full(m) => {
                let m = m.matrix();
                (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)].norm() == 0.0))
            }
        }
    }

    pub fn matrix(&self) -> CMatrix {
        match self {
            Self::Diagonal(w) => {
                CMatrix::from_diagonal(&CVector::from_iterator(w.len(), w.iter().map(|&p| C64::new(p, 0.0))))
            }
            Self::Full(m) => m.matrix().clone(),
        }
    }

    pub fn density(&self) -> DensityMatrix {
        match self {
            Self::Full(m) => m.clone(),
            Self::Diagonal(_) => DensityMatrix::from_hermitian_unchecked(self.matrix(), false),
        }
    }

    /// `ρ_E(t) = e^{−t h_E} ρ_E(0) e^{−t* h_E}` as a full density.
    pub fn evolved(&self, env: &EnvironmentModel, t: ComplexTime) -> Result<Self> {
        check_env_dim(self.dim(), env.dim())?;
        let (m, log_scale) = two_sided_evolve_scaled(&self.density(), &env.shifted_hamiltonian(), t)?;
        if log_scale > MAX_EXPONENT {
            return Err(Error::ExponentOverflow(log_scale));
        }
        Ok(Self::Full(DensityMatrix::from_hermitian_unchecked(
            m.into_matrix() * C64::new(log_scale.exp(), 0.0),
            false,
        )))
    }
}

fn check_env_dim(got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::DimensionMismatch(format!(
            "environment object has dimension {got}, environment has {expected}"
        )));
    }
    Ok(())
}

/// Partition value `Z(Λ)` with its logarithm; `z` may saturate, `log_z` does not.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionValue {
    pub z: f64,
    pub log_z: f64,
}

impl PartitionValue {
    pub fn from_log(log_z: f64) -> Self {
        Self { z: log_z.exp(), log_z }
    }
}

/// `‖e^{Λ(H_tot − E_tot)} |Ψ⟩ − |Ψ⟩‖₂`.
pub fn verify_invariance(psi: &GlobalState, h_tot: &HermitianOperator, t: ComplexTime) -> Result<f64> {
    let e_tot = psi.e_tot().ok_or(Error::MissingEnergy)?;
    if h_tot.dim() != psi.dims().total() {
        return Err(Error::DimensionMismatch(format!(
            "H_tot has dimension {}, state has {}",
            h_tot.dim(),
            psi.dims().total()
        )));
    }
    if t.is_zero() {
        return Ok(0.0);
    }
    let lam = t.value();
    let spec = eigh(&h_tot.shifted(-e_tot))?;
    let top = spec
        .eigenvalues
        .iter()
        .map(|w| lam.re * w)
        .fold(f64::NEG_INFINITY, f64::max);
    if top > MAX_EXPONENT {
        return Err(Error::ExponentOverflow(top));
    }
    let mut coeffs = spec.eigenvectors.adjoint() * psi.amplitudes();
    for (c, &w) in coeffs.iter_mut().zip(&spec.eigenvalues) {
        *c *= (lam * w).exp();
    }
    let evolved = &spec.eigenvectors * coeffs;
    Ok((evolved - psi.amplitudes()).norm())
}

/// Normalized relational system density `ρ(Λ)` and `Z(Λ)`.
pub fn relational_density(
    psi: &GlobalState,
    env: &EnvironmentModel,
    cond: &ConditioningDensity,
    t: ComplexTime,
) -> Result<(DensityMatrix, PartitionValue)> {
    let (unnorm, log_scale) = relational_unnormalized(psi, env, cond, t)?;
    let (rho, tr) = unnorm.normalize()?;
    Ok((rho, PartitionValue::from_log(tr.ln() + log_scale)))
}

/// `tr_E[ρ_E(−Λ*) P_Ψ] = e^{s}·M`, returned as `(M, s)`.
pub(crate) fn relational_unnormalized(
    psi: &GlobalState,
    env: &EnvironmentModel,
    cond: &ConditioningDensity,
    t: ComplexTime,
) -> Result<(DensityMatrix, f64)> {
    let dims = psi.dims();
    check_env_dim(env.dim(), dims.d_env())?;
    check_env_dim(cond.dim(), dims.d_env())?;
    let (rho_env, log_scale) =
        two_sided_evolve_scaled(&cond.density(), &env.shifted_hamiltonian(), t.relational_partner())?;
    let out = psi.conditioned_reduced(&rho_env)?;
    let tr = out.trace();
    if !(tr > 1e-300 * rho_env.trace().max(f64::MIN_POSITIVE)) || !tr.is_finite() {
        return Err(Error::UnsupportedByConditioning);
    }
    Ok((out, log_scale))
}

/// Projector onto the eigenvectors of `rho` with eigenvalue above
/// `SUPPORT_TOL · λ_max`.
pub fn support_projector(rho: &DensityMatrix) -> Result<CMatrix> {
    let spec = eigh(&HermitianOperator::from_hermitian_unchecked(rho.matrix().clone()))?;
    let top = spec.eigenvalues.last().copied().unwrap_or(0.0);
    let cut = SUPPORT_TOL * top.max(0.0);
    Ok(spec.map(|w| {
        if w > cut {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    }))
}

/// Canonical density `e^{−γH} Π₀ / tr(e^{−γH} Π₀)`, where `Π₀` is the support
/// projector of the infinite-temperature density (unit branch weights).
pub fn canonical_reference(rho0: &DensityMatrix, h_sys: &HermitianOperator, gamma: f64) -> Result<DensityMatrix> {
    let pi0 = DensityMatrix::from_hermitian_unchecked(support_projector(rho0)?, false);
    let (m, _) = two_sided_evolve_scaled(&pi0, h_sys, ComplexTime::thermal(gamma))?;
    Ok(m.normalize()?.0)
}

/// `‖ρ(Λ) − e^{−γH} Π₀ / tr(e^{−γH} Π₀)‖_max`.
pub fn canonical_residual(
    psi: &GlobalState,
    env: &EnvironmentModel,
    cond: &ConditioningDensity,
    t: ComplexTime,
    h_sys: &HermitianOperator,
) -> Result<f64> {
    if h_sys.dim() != psi.dims().d_sys() {
        return Err(Error::DimensionMismatch(format!(
            "system Hamiltonian has dimension {}, system has {}",
            h_sys.dim(),
            psi.dims().d_sys()
        )));
    }
    let (rho, _) = relational_density(psi, env, cond, t)?;
    let (rho0, _) = relational_density(psi, env, cond, ComplexTime::ZERO)?;
    let reference = canonical_reference(&rho0, h_sys, t.gamma)?;
    Ok(max_abs_diff(rho.matrix(), reference.matrix()))
}

/// Conditioning `p_J = a_J⁻²` on the Schmidt support, zero elsewhere.
pub fn canonical_conditioning(schmidt: &SchmidtDecomposition) -> ConditioningDensity {
    let mut weights = vec![0.0; schmidt.d_env];
    for (j, &a) in schmidt.coefficients.iter().enumerate() {
        if a > 0.0 {
            weights[j] = (a * a).recip();
        } else {
            log::warn!("zero Schmidt coefficient: branch {j} excluded");
        }
    }
    ConditioningDensity::Diagonal(weights)
}

/// `(‖[ρ_E(0), h_E]‖_max, ‖[ρ(0), H]‖_max)` with `ρ_E(0)` scaled to unit trace.
pub fn commutator_equivalence_check(
    psi: &GlobalState,
    env: &EnvironmentModel,
    cond: &ConditioningDensity,
    h_sys: &HermitianOperator,
) -> Result<(f64, f64)> {
    check_env_dim(cond.dim(), env.dim())?;
    let (cond_unit, _) = cond.density().normalize()?;
    let lhs = max_abs(&commutator(cond_unit.matrix(), env.shifted_hamiltonian().matrix()));
    let (rho, _) = relational_density(psi, env, cond, ComplexTime::ZERO)?;
    let rhs = max_abs(&commutator(rho.matrix(), h_sys.matrix()));
    Ok((lhs, rhs))
}
