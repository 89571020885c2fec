//! Interactions that commute with the environment Hamiltonian.
//!
//! For a nondegenerate diagonal `H_E`, `[H_E, V] = 0` forces
//! `V = Σ_J W_J ⊗ |J⟩⟨J|`, so interactions are parameterized by their blocks
//! `W_J = ⟨J|V|J⟩`. Each branch of a global eigenstate then solves the
//! effective system problem `(H + W_J − ε_J)|φ_J⟩ = 0`.

use crate::error::{Error, Result};
use crate::hilbert::{
    commutator, max_abs, max_abs_diff, CMatrix, CVector, GlobalState, HermitianOperator, SpaceDims, C64,
};
use crate::propagator::{eigh, ComplexTime};
use crate::relational::{
    default_spacer_gap, paired_environment, relational_density, ConditioningDensity, EnvironmentModel,
};

/// Blocks `W_J` of a commuting interaction, one per environment level.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutingInteraction {
    blocks: Vec<HermitianOperator>,
}

impl CommutingInteraction {
    pub fn new(blocks: Vec<HermitianOperator>) -> Result<Self> {
        let d = blocks
            .first()
            .map(HermitianOperator::dim)
            .ok_or_else(|| Error::InvalidArgument("interaction needs at least one block".into()))?;
        if let Some(b) = blocks.iter().find(|b| b.dim() != d) {
            return Err(Error::DimensionMismatch(format!(
                "block of dimension {} among {d}-blocks",
                b.dim()
            )));
        }
        Ok(Self { blocks })
    }

    pub fn zero(d_sys: usize, d_env: usize) -> Self {
        Self {
            blocks: vec![HermitianOperator::zeros(d_sys); d_env],
        }
    }

    /// `W_J = v_J 𝟙`.
    pub fn scalar(shifts: &[f64], d_sys: usize) -> Result<Self> {
        Self::new(
            shifts
                .iter()
                .map(|&v| HermitianOperator::identity(d_sys).shifted(v - 1.0))
                .collect(),
        )
    }

    pub fn blocks(&self) -> &[HermitianOperator] {
        &self.blocks
    }

    pub fn block(&self, j: usize) -> &HermitianOperator {
        &self.blocks[j]
    }

    pub fn d_sys(&self) -> usize {
        self.blocks[0].dim()
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

/// `V = Σ_J W_J ⊗ |J⟩⟨J|` in the system-major convention.
pub fn assemble_interaction(ci: &CommutingInteraction, dims: SpaceDims) -> Result<HermitianOperator> {
    if ci.len() != dims.d_env() || ci.d_sys() != dims.d_sys() {
        return Err(Error::DimensionMismatch(format!(
            "{} blocks of dimension {} for dims ({}, {})",
            ci.len(),
            ci.d_sys(),
            dims.d_sys(),
            dims.d_env()
        )));
    }
    let n = dims.total();
    let mut v = CMatrix::zeros(n, n);
    for (j, w) in ci.blocks.iter().enumerate() {
        let w = w.matrix();
        for i in 0..dims.d_sys() {
            for k in 0..dims.d_sys() {
                v[(dims.index(i, j), dims.index(k, j))] = w[(i, k)];
            }
        }
    }
    HermitianOperator::new(v)
}

/// `(‖[𝟙⊗H_E, V]‖_max, max_J ‖[V, 𝟙⊗|J⟩⟨J|]‖_max)`.
pub fn commutator_norms(v: &HermitianOperator, env: &EnvironmentModel, dims: SpaceDims) -> Result<(f64, f64)> {
    if v.dim() != dims.total() || env.dim() != dims.d_env() {
        return Err(Error::DimensionMismatch(
            "interaction and environment do not match dims".into(),
        ));
    }
    let embed = |env_op: &CMatrix| CMatrix::identity(dims.d_sys(), dims.d_sys()).kronecker(env_op);
    let h_env = embed(env.hamiltonian().matrix());
    let with_h = max_abs(&commutator(&h_env, v.matrix()));
    let mut with_proj = 0.0f64;
    for j in 0..dims.d_env() {
        let mut p = CMatrix::zeros(dims.d_env(), dims.d_env());
        p[(j, j)] = C64::new(1.0, 0.0);
        with_proj = with_proj.max(max_abs(&commutator(v.matrix(), &embed(&p))));
    }
    Ok((with_h, with_proj))
}

/// `H + W_J`.
pub fn effective_hamiltonian(
    h_sys: &HermitianOperator,
    ci: &CommutingInteraction,
    j: usize,
) -> Result<HermitianOperator> {
    let w = ci
        .blocks
        .get(j)
        .ok_or_else(|| Error::InvalidArgument(format!("branch {j} out of range ({} blocks)", ci.len())))?;
    h_sys.add(w)
}

/// Branch eigenpair `(ε_J, |φ_J⟩)` of `H + W_J`.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchPair {
    pub energy: f64,
    pub vector: CVector,
}

/// Interacting eigenstate with its environment and branch data.
#[derive(Debug, Clone)]
pub struct InteractingEigenstate {
    pub state: GlobalState,
    pub env: EnvironmentModel,
    pub branches: Vec<BranchPair>,
}

/// `Ψ = (1/√n) Σ_{J<n} |φ_J⟩ ⊗ |J⟩` where `|φ_J⟩` is eigenvector `k_J` of
/// `H + W_J`, with `E_J = E_tot − ε_J`.
pub fn build_interacting_eigenstate(
    h_sys: &HermitianOperator,
    ci: &CommutingInteraction,
    branch_choices: &[usize],
    e_tot: f64,
) -> Result<InteractingEigenstate> {
    let n = branch_choices.len();
    let d_env = ci.len();
    if n == 0 || n > d_env {
        return Err(Error::InvalidArgument(format!("need 1..={d_env} branches, got {n}")));
    }
    if ci.d_sys() != h_sys.dim() {
        return Err(Error::DimensionMismatch(format!(
            "blocks of dimension {}, system Hamiltonian {}",
            ci.d_sys(),
            h_sys.dim()
        )));
    }
    let dims = SpaceDims::new(h_sys.dim(), d_env)?;
    let mut branches = Vec::with_capacity(n);
    for (j, &k) in branch_choices.iter().enumerate() {
        let spec = eigh(&effective_hamiltonian(h_sys, ci, j)?)?;
        if k >= spec.dim() {
            return Err(Error::InvalidArgument(format!(
                "eigenpair index {k} out of range for branch {j}"
            )));
        }
        branches.push(BranchPair {
            energy: spec.eigenvalues[k],
            vector: spec.eigenvectors.column(k).into_owned(),
        });
    }
    let eps: Vec<f64> = branches.iter().map(|b| b.energy).collect();
    let env = paired_environment(&eps, e_tot, d_env, default_spacer_gap(&eps))?;
    let mut coeffs = CMatrix::zeros(dims.d_sys(), d_env);
    for (j, b) in branches.iter().enumerate() {
        coeffs.column_mut(j).copy_from(&b.vector);
    }
    let state = GlobalState::from_coefficients(&coeffs, Some(e_tot))?;
    Ok(InteractingEigenstate { state, env, branches })
}

/// Gram matrix `G[J, J'] = ⟨φ_J|φ_J'⟩` of the branch states.
pub fn gram_matrix(branches: &[BranchPair]) -> CMatrix {
    let n = branches.len();
    CMatrix::from_fn(n, n, |a, b| branches[a].vector.dotc(&branches[b].vector))
}

/// `‖ρ(Λ) − Z⁻¹ Σ_J e^{−γ ε_J} |φ_J⟩⟨φ_J|‖_max`.
pub fn interacting_canonical_residual(
    eig: &InteractingEigenstate,
    cond: &ConditioningDensity,
    t: ComplexTime,
) -> Result<f64> {
    let (rho, _) = relational_density(&eig.state, &eig.env, cond, t)?;
    let shift = eig
        .branches
        .iter()
        .map(|b| -t.gamma * b.energy)
        .fold(f64::NEG_INFINITY, f64::max);
    let d = eig.state.dims().d_sys();
    let mut reference = CMatrix::zeros(d, d);
    let mut z = 0.0;
    for b in &eig.branches {
        let w = (-t.gamma * b.energy - shift).exp();
        z += w * b.vector.norm_squared();
        reference += &b.vector * b.vector.adjoint() * C64::new(w, 0.0);
    }
    reference.unscale_mut(z);
    Ok(max_abs_diff(rho.matrix(), &reference))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::total_hamiltonian;
    use crate::relational::{build_mes, SystemSpectrumInput};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sigma_z() -> HermitianOperator {
        HermitianOperator::from_diagonal(&[1.0, -1.0]).unwrap()
    }

    #[test]
    fn zero_blocks_give_zero_operator() {
        let dims = SpaceDims::new(2, 3).unwrap();
        let v = assemble_interaction(&CommutingInteraction::zero(2, 3), dims).unwrap();
        assert_eq!(v.matrix(), &CMatrix::zeros(6, 6));
    }

    #[test]
    fn scalar_blocks_are_diagonal() {
        let dims = SpaceDims::new(2, 2).unwrap();
        let ci = CommutingInteraction::scalar(&[0.5, -0.25], 2).unwrap();
        let v = assemble_interaction(&ci, dims).unwrap();
        let expected = HermitianOperator::from_diagonal(&[0.5, -0.25, 0.5, -0.25]).unwrap();
        assert!(max_abs_diff(v.matrix(), expected.matrix()) < 1e-15);
        // spectrum of H_tot shifts per branch
        let h = HermitianOperator::from_diagonal(&[0.0, 1.0]).unwrap();
        let he = HermitianOperator::from_diagonal(&[2.0, 1.0]).unwrap();
        let tot = total_hamiltonian(&h, &he, Some(&v)).unwrap();
        let d: Vec<f64> = tot.matrix().diagonal().iter().map(|z| z.re).collect();
        assert_eq!(d, vec![2.5, 0.75, 3.5, 1.75]);
    }

    #[test]
    fn block_dimension_mismatch() {
        let r = CommutingInteraction::new(vec![HermitianOperator::zeros(2), HermitianOperator::zeros(3)]);
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
        let dims = SpaceDims::new(2, 3).unwrap();
        assert!(assemble_interaction(&CommutingInteraction::zero(2, 2), dims).is_err());
    }

    #[test]
    fn effective_hamiltonian_sum() {
        let h = HermitianOperator::from_diagonal(&[0.0, 1.0]).unwrap();
        let ci = CommutingInteraction::new(vec![HermitianOperator::from_diagonal(&[0.1, -0.1]).unwrap()]).unwrap();
        let heff = effective_hamiltonian(&h, &ci, 0).unwrap();
        let expected = HermitianOperator::from_diagonal(&[0.1, 0.9]).unwrap();
        assert!(max_abs_diff(heff.matrix(), expected.matrix()) < 1e-15);
        let zero = CommutingInteraction::zero(2, 1);
        assert_eq!(effective_hamiltonian(&h, &zero, 0).unwrap(), h);
        assert!(effective_hamiltonian(&h, &zero, 1).is_err());
    }

    #[test]
    fn zero_blocks_reproduce_mes() {
        let h = HermitianOperator::from_diagonal(&[-0.3, 0.4, 1.1]).unwrap();
        let ci = CommutingInteraction::zero(3, 4);
        let eig = build_interacting_eigenstate(&h, &ci, &[0, 1, 2], 1.5).unwrap();
        let spec = SystemSpectrumInput::diagonal(vec![-0.3, 0.4, 1.1]).unwrap();
        let (mes, env) = build_mes(&spec, 1.5, 4).unwrap();
        assert!((eig.state.amplitudes() - mes.amplitudes()).norm() <= 1e-12);
        assert_eq!(eig.env, env);
    }

    #[test]
    fn pauli_blocks_give_exact_eigenstate() {
        let h = HermitianOperator::new(CMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 0.), c(0.4, 0.2), c(0.4, -0.2), c(1.0, 0.)],
        ))
        .unwrap();
        let blocks: Vec<_> = [0.1, -0.2]
            .iter()
            .map(|&v| HermitianOperator::new(sigma_z().matrix() * c(v, 0.0)).unwrap())
            .collect();
        let ci = CommutingInteraction::new(blocks).unwrap();
        let eig = build_interacting_eigenstate(&h, &ci, &[0, 1], 2.0).unwrap();
        let dims = eig.state.dims();
        let v = assemble_interaction(&ci, dims).unwrap();
        let tot = total_hamiltonian(&h, &eig.env.hamiltonian(), Some(&v)).unwrap();
        let psi = eig.state.amplitudes();
        let r = (tot.matrix() * psi - psi * c(2.0, 0.0)).norm();
        assert!(r <= 1e-10, "{r}");
        let (a, b) = commutator_norms(&v, &eig.env, dims).unwrap();
        assert!(a <= 1e-12 && b <= 1e-12);
    }

    #[test]
    fn single_branch_is_product_state() {
        let h = HermitianOperator::from_diagonal(&[0.0, 1.0]).unwrap();
        let ci = CommutingInteraction::scalar(&[0.3, 0.0], 2).unwrap();
        let eig = build_interacting_eigenstate(&h, &ci, &[1], 0.0).unwrap();
        assert_eq!(eig.branches.len(), 1);
        assert!((eig.branches[0].energy - 1.3).abs() < 1e-15);
        assert!((eig.state.amplitude(1, 0).norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn scalar_blocks_shift_branch_energies() {
        let h = HermitianOperator::from_diagonal(&[0.0, 1.0]).unwrap();
        let ci = CommutingInteraction::scalar(&[0.25, -0.5], 2).unwrap();
        let eig = build_interacting_eigenstate(&h, &ci, &[0, 1], 1.0).unwrap();
        assert!((eig.branches[0].energy - 0.25).abs() < 1e-15);
        assert!((eig.branches[1].energy - 0.5).abs() < 1e-15);
        let uni = ConditioningDensity::uniform(2);
        for g in [0.0, 1.0, 4.0] {
            let r = interacting_canonical_residual(&eig, &uni, ComplexTime::new(g, 0.3)).unwrap();
            assert!(r <= 1e-10, "{r}");
        }
        let gram = gram_matrix(&eig.branches);
        assert!(max_abs_diff(&gram, &CMatrix::identity(2, 2)) < 1e-15);
    }
}
