//! Thermodynamic observables of the relational density.
//!
//! Entropies are in nats and `k_B = 1`. Quantities are indexed by the inverse
//! temperature `γ = 2·Re Λ`.
//!
//! The partition function reported in a [`ThermoPoint`] uses unit branch
//! weights: with `Π₀` the support projector of the infinite-temperature
//! density, `Z(γ) = tr(e^{−γH} Π₀)`, so that `ρ = e^{−γH} Π₀ / Z` and
//! `S = γ⟨H⟩ + ln Z` for canonical inputs. For a maximally entangled state
//! this is `Σ_J e^{−γ ε_J}`.

use crate::error::{Error, Result};
use crate::hilbert::{CMatrix, DensityMatrix, GlobalState, HermitianOperator, C64};
use crate::propagator::{eigh, two_sided_evolve_scaled, ComplexTime};
use crate::relational::{relational_density, support_projector, ConditioningDensity, EnvironmentModel};

/// Eigenvalues below this are treated as exact zeros in `w ln w`.
pub const ENTROPY_CLIP: f64 = 1e-14;
const NEGATIVE_EIGENVALUE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermoPoint {
    pub gamma: f64,
    pub entropy: f64,
    pub mean_energy: f64,
    pub env_mean_energy: f64,
    pub log_z: f64,
}

impl ThermoPoint {
    /// Evaluates every observable of the relational density at `t`.
    pub fn evaluate(
        psi: &GlobalState,
        env: &EnvironmentModel,
        cond: &ConditioningDensity,
        t: ComplexTime,
        h_sys: &HermitianOperator,
    ) -> Result<Self> {
        let (rho, z) = relational_density(psi, env, cond, t)?;
        let (rho0, z0) = relational_density(psi, env, cond, ComplexTime::ZERO)?;
        let top = rho0.eigenvalues().last().copied().unwrap_or(1.0);
        Ok(Self {
            gamma: t.gamma,
            entropy: von_neumann_entropy(&rho)?,
            mean_energy: mean_energy(&rho, h_sys)?,
            env_mean_energy: env_mean_energy(psi, env, cond, t)?,
            log_z: z.log_z - z0.log_z - top.ln(),
        })
    }
}

/// `S = −Σ w ln w` over the eigenvalues of a normalized density.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    if !rho.is_normalized() {
        return Err(Error::NotDensityMatrix("entropy requires a normalized density".into()));
    }
    let w = rho.eigenvalues();
    if let Some(&min) = w.first() {
        if min < -NEGATIVE_EIGENVALUE_TOL {
            return Err(Error::NotDensityMatrix(format!("eigenvalue {min:e}")));
        }
    }
    Ok(w.iter().filter(|&&x| x > ENTROPY_CLIP).map(|&x| -x * x.ln()).sum())
}

/// `Re tr(Hρ)`.
pub fn mean_energy(rho: &DensityMatrix, h: &HermitianOperator) -> Result<f64> {
    if rho.dim() != h.dim() {
        return Err(Error::DimensionMismatch(format!(
            "density has dimension {}, Hamiltonian {}",
            rho.dim(),
            h.dim()
        )));
    }
    let tr = trace_of_product(h.matrix(), rho.matrix());
    debug_assert!(tr.im.abs() <= 1e-12 * h.max_norm().max(1.0), "complex expectation {tr}");
    Ok(tr.re)
}

fn trace_of_product(a: &CMatrix, b: &CMatrix) -> C64 {
    // tr(AB) = Σ_ij A_ij B_ji
    a.iter()
        .zip(b.transpose().iter())
        .fold(C64::new(0.0, 0.0), |acc, (x, y)| acc + x * y)
}

/// Mean environment energy `tr(H_E ρ̃_E)`, where `ρ̃_E` is the relationally
/// evolved conditioning density `ρ_E(−Λ*)` restricted to the environment
/// support of `Ψ` and normalized.
pub fn env_mean_energy(
    psi: &GlobalState,
    env: &EnvironmentModel,
    cond: &ConditioningDensity,
    t: ComplexTime,
) -> Result<f64> {
    let marginal = psi.env_marginal();
    let pi = support_projector(&marginal)?;
    let (evolved, _) = two_sided_evolve_scaled(&cond.density(), &env.shifted_hamiltonian(), t.relational_partner())?;
    let restricted = &pi * evolved.matrix() * &pi;
    let tr: f64 = restricted.diagonal().iter().map(|z| z.re).sum();
    if !(tr > 0.0) {
        return Err(Error::UnsupportedByConditioning);
    }
    Ok(trace_of_product(env.hamiltonian().matrix(), &restricted).re / tr)
}

/// `|S − (γ⟨H⟩ + ln Z)|`.
pub fn entropy_partition_residual(point: &ThermoPoint) -> f64 {
    (point.entropy - (point.gamma * point.mean_energy + point.log_z)).abs()
}

/// Largest central-difference residual of `dS = γ d⟨H⟩` over interior points
/// of a uniform γ grid with spacing `gamma_step`.
pub fn thermodynamic_relation_residual(sweep: &[ThermoPoint], gamma_step: f64) -> Result<f64> {
    if sweep.len() < 3 {
        return Err(Error::InsufficientGrid(sweep.len()));
    }
    if !(gamma_step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "gamma step must be positive, got {gamma_step}"
        )));
    }
    let h2 = 2.0 * gamma_step;
    Ok(sweep
        .windows(3)
        .map(|w| {
            let ds = (w[2].entropy - w[0].entropy) / h2;
            let de = (w[2].mean_energy - w[0].mean_energy) / h2;
            (ds - w[1].gamma * de).abs()
        })
        .fold(0.0, f64::max))
}

/// `|E_tot − ⟨H⟩(Λ) − ⟨H_E⟩(Λ)|`.
pub fn energy_sum_residual(
    psi: &GlobalState,
    env: &EnvironmentModel,
    cond: &ConditioningDensity,
    t: ComplexTime,
    h_sys: &HermitianOperator,
) -> Result<f64> {
    let e_tot = psi.e_tot().ok_or(Error::MissingEnergy)?;
    let (rho, _) = relational_density(psi, env, cond, t)?;
    let sys = mean_energy(&rho, h_sys)?;
    let env_e = env_mean_energy(psi, env, cond, t)?;
    Ok((e_tot - sys - env_e).abs())
}

/// Evaluates a sweep of thermodynamic points at fixed `λ`.
pub fn thermo_sweep(
    psi: &GlobalState,
    env: &EnvironmentModel,
    cond: &ConditioningDensity,
    h_sys: &HermitianOperator,
    gammas: &[f64],
    lambda: f64,
) -> Result<Vec<ThermoPoint>> {
    gammas
        .iter()
        .map(|&g| ThermoPoint::evaluate(psi, env, cond, ComplexTime::new(g, lambda), h_sys))
        .collect()
}

/// Eigenvalue spread of a Hermitian operator (`max − min`).
pub fn spectral_width(h: &HermitianOperator) -> Result<f64> {
    let w = eigh(h)?.eigenvalues;
    Ok(w.last().copied().unwrap_or(0.0) - w.first().copied().unwrap_or(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::CVector;
    use crate::relational::{build_mes, build_schmidt, SchmidtDecomposition, SystemSpectrumInput};
    use std::f64::consts::LN_2;

    fn diag(values: &[f64]) -> DensityMatrix {
        DensityMatrix::new(CMatrix::from_diagonal(&CVector::from_iterator(
            values.len(),
            values.iter().map(|&x| C64::new(x, 0.0)),
        )))
        .unwrap()
    }

    fn qubit() -> (GlobalState, EnvironmentModel, HermitianOperator) {
        let spec = SystemSpectrumInput::diagonal(vec![0.0, 1.0]).unwrap();
        let (psi, env) = build_mes(&spec, 2.0, 2).unwrap();
        (psi, env, spec.hamiltonian())
    }

    #[test]
    fn entropy_values() {
        assert!(von_neumann_entropy(&diag(&[1.0, 0.0])).unwrap().abs() < 1e-15);
        assert!((von_neumann_entropy(&diag(&[0.5, 0.5])).unwrap() - LN_2).abs() < 1e-15);
        // ln 3 − (2/3) ln 2
        let s = von_neumann_entropy(&diag(&[2.0 / 3.0, 1.0 / 3.0])).unwrap();
        assert!((s - (3.0f64.ln() - 2.0 / 3.0 * LN_2)).abs() < 1e-15);
        assert!((s - 0.636514).abs() < 1e-6);
    }

    #[test]
    fn entropy_rejects_unnormalized() {
        let m = DensityMatrix::unnormalized(CMatrix::identity(2, 2)).unwrap();
        assert!(von_neumann_entropy(&m).is_err());
    }

    #[test]
    fn mean_energy_values() {
        let h = HermitianOperator::from_diagonal(&[0.0, 1.0]).unwrap();
        assert!((mean_energy(&diag(&[0.5, 0.5]), &h).unwrap() - 0.5).abs() < 1e-15);
        assert!((mean_energy(&diag(&[2.0 / 3.0, 1.0 / 3.0]), &h).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(mean_energy(&diag(&[0.0, 1.0]), &h).unwrap(), 1.0);
    }

    #[test]
    fn infinite_temperature_bookkeeping() {
        let (psi, env, h) = qubit();
        let p = ThermoPoint::evaluate(&psi, &env, &ConditioningDensity::uniform(2), ComplexTime::ZERO, &h).unwrap();
        assert!((p.entropy - LN_2).abs() < 1e-15);
        assert!((p.log_z - LN_2).abs() < 1e-15);
        assert!(entropy_partition_residual(&p) < 1e-15);
    }

    #[test]
    fn qubit_at_ln2() {
        let (psi, env, h) = qubit();
        let p = ThermoPoint::evaluate(
            &psi,
            &env,
            &ConditioningDensity::uniform(2),
            ComplexTime::thermal(LN_2),
            &h,
        )
        .unwrap();
        assert!((p.mean_energy - 1.0 / 3.0).abs() < 1e-14);
        assert!((p.log_z - 1.5f64.ln()).abs() < 1e-14);
        assert!((p.env_mean_energy - 5.0 / 3.0).abs() < 1e-14);
        assert!(entropy_partition_residual(&p) <= 1e-9);
    }

    #[test]
    fn energy_sum_rule_on_qubit() {
        let (psi, env, h) = qubit();
        let uni = ConditioningDensity::uniform(2);
        let p = ThermoPoint::evaluate(&psi, &env, &uni, ComplexTime::ZERO, &h).unwrap();
        assert!((p.mean_energy - 0.5).abs() < 1e-15 && (p.env_mean_energy - 1.5).abs() < 1e-15);
        assert!(energy_sum_residual(&psi, &env, &uni, ComplexTime::ZERO, &h).unwrap() < 1e-15);
        let base = energy_sum_residual(&psi, &env, &uni, ComplexTime::thermal(LN_2), &h).unwrap();
        assert!(base <= 1e-12);
        for lambda in [0.5, 3.0, -7.0] {
            let r = energy_sum_residual(&psi, &env, &uni, ComplexTime::new(LN_2, lambda), &h).unwrap();
            assert!((r - base).abs() <= 1e-12);
        }
    }

    #[test]
    fn energy_sum_rule_fails_for_unbalanced_schmidt() {
        let spec = SystemSpectrumInput::diagonal(vec![0.0, 1.0]).unwrap();
        let h = spec.hamiltonian();
        let s = SchmidtDecomposition::new(vec![0.9f64.sqrt(), 0.1f64.sqrt()], spec, 2).unwrap();
        let (psi, env) = build_schmidt(&s, 2.0).unwrap();
        let r = energy_sum_residual(
            &psi,
            &env,
            &ConditioningDensity::uniform(2),
            ComplexTime::thermal(1.0),
            &h,
        )
        .unwrap();
        // system weights ∝ (0.9, 0.1/e), environment weights ∝ (1, 1/e)
        let e = (-1.0f64).exp();
        let expected = e / (1.0 + e) - 0.1 * e / (0.9 + 0.1 * e);
        assert!((r - expected).abs() < 1e-12, "{r}");
        assert!(r > 1e-3);
    }

    #[test]
    fn insufficient_grid() {
        let p = ThermoPoint {
            gamma: 0.0,
            entropy: 0.0,
            mean_energy: 0.0,
            env_mean_energy: 0.0,
            log_z: 0.0,
        };
        assert!(matches!(
            thermodynamic_relation_residual(&[p, p], 0.1),
            Err(Error::InsufficientGrid(2))
        ));
    }

    #[test]
    fn fully_degenerate_spectrum_has_no_relation_residual() {
        let spec = SystemSpectrumInput::diagonal(vec![0.7, 0.7, 0.7]).unwrap();
        let (psi, env) = build_mes(&spec, 1.0, 3).unwrap();
        let gammas: Vec<f64> = (0..5).map(|k| 0.5 + 0.1 * k as f64).collect();
        let sweep = thermo_sweep(
            &psi,
            &env,
            &ConditioningDensity::uniform(3),
            &spec.hamiltonian(),
            &gammas,
            0.0,
        )
        .unwrap();
        assert!(thermodynamic_relation_residual(&sweep, 0.1).unwrap() < 1e-13);
    }

    #[test]
    fn spectral_width_of_diagonal() {
        let h = HermitianOperator::from_diagonal(&[-1.0, 0.5, 2.0]).unwrap();
        assert_eq!(spectral_width(&h).unwrap(), 3.0);
    }
}
