//! Scenario execution: build the global state, sweep the grid, run checks.

use rayon::prelude::*;
use relatime::dynamics::{closed_form_consistency, integrate, trace_distance, FlowKind};
use relatime::hilbert::total_hamiltonian;
use relatime::interaction::{
    assemble_interaction, build_interacting_eigenstate, commutator_norms, gram_matrix, interacting_canonical_residual,
    CommutingInteraction, InteractingEigenstate,
};
use relatime::random;
use relatime::relational::{
    build_mes, build_schmidt, canonical_conditioning, canonical_residual, relational_density, verify_invariance,
};
use relatime::thermo::{
    energy_sum_residual, entropy_partition_residual, thermodynamic_relation_residual, von_neumann_entropy, ThermoPoint,
};
use relatime::{
    CMatrix, CVector, ComplexTime, ConditioningDensity, EnvironmentModel, GlobalState, HermitianOperator,
    SchmidtDecomposition, SpaceDims, SystemSpectrumInput, C64,
};
use serde_json::{json, Map, Value};

use crate::config::{BasisKind, Conditioning, InteractionKind, ScenarioConfig, ScenarioName, StateKind};
use crate::output::{Check, ComplexMatrixJson, Row};
use crate::CliError;

/// Default tolerances by check name.
pub fn default_tolerance(name: &str) -> f64 {
    match name {
        "canonical_residual" => 1e-9,
        "interacting_canonical_residual" => 1e-10,
        "entropy_partition_residual" => 1e-8,
        "energy_sum_residual" => 1e-9,
        "thermodynamic_relation_residual" => 1e-3,
        "infinite_temperature_entropy" => 1e-10,
        "invariance_residual" => 1e-9,
        "commutator_residual" => 1e-12,
        "imaginary_flow_consistency" | "real_flow_consistency" => 1e-8,
        "relational_vs_imaginary_flow" | "relational_vs_real_flow" => 1e-8,
        _ => 1e-9,
    }
}

/// Complex times at which invariance is probed.
pub const INVARIANCE_TIMES: [(f64, f64); 4] = [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (-0.5, 2.0)];

pub struct ScenarioReport {
    pub rows: Vec<Row>,
    pub checks: Vec<Check>,
    pub diagnostics: Map<String, Value>,
    pub gram: Option<CMatrix>,
}

struct Instance {
    psi: GlobalState,
    env: EnvironmentModel,
    cond: ConditioningDensity,
    h_sys: HermitianOperator,
    h_tot: HermitianOperator,
    /// Present for interacting eigenstates, with the assembled coupling.
    interacting: Option<(InteractingEigenstate, HermitianOperator)>,
    /// Unweighted equal-amplitude state (affects the γ = 0 entropy check).
    maximally_entangled: bool,
}

fn system_input(cfg: &ScenarioConfig) -> Result<SystemSpectrumInput, CliError> {
    let d = cfg.system.dimension;
    let seed = cfg.system.random.as_ref().and_then(|r| r.seed).unwrap_or(cfg.seed);
    let mut rng = random::rng(seed);
    let energies = match (&cfg.system.energies, &cfg.system.random) {
        (Some(e), _) => e.clone(),
        (None, Some(r)) => random::spectrum(&mut rng, d, r.range[0], r.range[1]),
        (None, None) => return Err(CliError::Config("system needs energies".into())),
    };
    let basis = match cfg.system.basis {
        BasisKind::Diagonal => CMatrix::identity(d, d),
        BasisKind::Random => random::unitary(&mut rng, d),
    };
    Ok(SystemSpectrumInput::new(energies, basis)?)
}

fn schmidt_of(cfg: &ScenarioConfig, spec: &SystemSpectrumInput) -> Result<Option<SchmidtDecomposition>, CliError> {
    cfg.schmidt_weights
        .as_ref()
        .map(|w| {
            let coeffs = w.iter().map(|x| x.sqrt()).collect();
            Ok(SchmidtDecomposition::new(coeffs, spec.clone(), cfg.d_env())?)
        })
        .transpose()
}

fn conditioning_of(
    cfg: &ScenarioConfig,
    schmidt: Option<&SchmidtDecomposition>,
) -> Result<ConditioningDensity, CliError> {
    Ok(match &cfg.conditioning {
        Conditioning::Uniform => ConditioningDensity::uniform(cfg.d_env()),
        Conditioning::Weights(w) => ConditioningDensity::diagonal(w.clone())?,
        Conditioning::FromSchmidt => canonical_conditioning(
            schmidt.ok_or_else(|| CliError::Config("from-schmidt conditioning needs schmidt_weights".into()))?,
        ),
    })
}

fn interaction_blocks(cfg: &ScenarioConfig, d: usize) -> Result<CommutingInteraction, CliError> {
    let d_env = cfg.d_env();
    let mut rng = random::rng(cfg.seed ^ 0x1a7e_9ac7);
    Ok(match cfg.interaction.kind {
        InteractionKind::Zero => CommutingInteraction::zero(d, d_env),
        InteractionKind::Scalar => {
            let shifts = match &cfg.interaction.shifts {
                Some(s) => s.clone(),
                None => (0..d_env)
                    .map(|_| random::spectrum(&mut rng, 1, -1.0, 1.0)[0])
                    .collect(),
            };
            CommutingInteraction::scalar(&shifts, d)?
        }
        InteractionKind::Generic => {
            let blocks = (0..d_env)
                .map(|_| random::hermitian(&mut rng, d))
                .collect::<Result<Vec<_>, _>>()?;
            CommutingInteraction::new(blocks)?
        }
    })
}

/// `(|φ₀⟩⊗|0⟩ + |φ₀⟩⊗|1⟩)/√2` with environment levels one unit apart.
fn non_eigenstate(
    cfg: &ScenarioConfig,
    spec: &SystemSpectrumInput,
) -> Result<(GlobalState, EnvironmentModel), CliError> {
    let dims = SpaceDims::new(spec.dim(), cfg.d_env())?;
    let e_tot = cfg.environment.e_tot;
    let base = e_tot - spec.energies()[0];
    let env = EnvironmentModel::new((0..dims.d_env()).map(|k| base + k as f64).collect(), e_tot)?;
    let phi = spec.branch(0);
    let mut coeffs = CMatrix::zeros(dims.d_sys(), dims.d_env());
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    coeffs.column_mut(0).copy_from(&(&phi * s));
    coeffs.column_mut(1).copy_from(&(&phi * s));
    Ok((GlobalState::from_coefficients(&coeffs, Some(e_tot))?, env))
}

fn build_instance(cfg: &ScenarioConfig) -> Result<Instance, CliError> {
    let spec = system_input(cfg)?;
    let h_sys = spec.hamiltonian();
    let e_tot = cfg.environment.e_tot;
    let schmidt = schmidt_of(cfg, &spec)?;
    let cond = conditioning_of(cfg, schmidt.as_ref())?;

    if cfg.scenario == ScenarioName::Interaction {
        let ci = interaction_blocks(cfg, spec.dim())?;
        let n = spec.dim().min(cfg.d_env());
        let choices = cfg.interaction.branches.clone().unwrap_or_else(|| (0..n).collect());
        let eig = build_interacting_eigenstate(&h_sys, &ci, &choices, e_tot)?;
        let v = assemble_interaction(&ci, eig.state.dims())?;
        let h_tot = total_hamiltonian(&h_sys, &eig.env.hamiltonian(), Some(&v))?;
        return Ok(Instance {
            psi: eig.state.clone(),
            env: eig.env.clone(),
            cond,
            h_sys,
            h_tot,
            maximally_entangled: false,
            interacting: Some((eig, v)),
        });
    }

    let (psi, env, maximally_entangled) = if cfg.state == StateKind::NonEigenstate {
        let (psi, env) = non_eigenstate(cfg, &spec)?;
        (psi, env, false)
    } else if let Some(s) = &schmidt {
        let (psi, env) = build_schmidt(s, e_tot)?;
        (psi, env, s.is_maximally_entangled())
    } else {
        if cfg.scenario == ScenarioName::SchmidtConditioning {
            return Err(CliError::Config("schmidt-conditioning needs schmidt_weights".into()));
        }
        let (psi, env) = build_mes(&spec, e_tot, cfg.d_env())?;
        (psi, env, true)
    };
    let h_tot = total_hamiltonian(&h_sys, &env.hamiltonian(), None)?;
    Ok(Instance {
        psi,
        env,
        cond,
        h_sys,
        h_tot,
        interacting: None,
        maximally_entangled,
    })
}

fn evaluate_row(inst: &Instance, gamma: f64, lambda: f64) -> Result<Row, CliError> {
    let t = ComplexTime::new(gamma, lambda);
    let mut point = ThermoPoint::evaluate(&inst.psi, &inst.env, &inst.cond, t, &inst.h_sys)?;
    let (canonical, energy_sum) = match &inst.interacting {
        Some((eig, _)) => {
            // system energy of a branch is its eigenvalue of H + W_J
            point.mean_energy = branch_mean_energy(eig, &inst.cond, gamma);
            let e_tot = inst.psi.e_tot().unwrap_or_default();
            (
                interacting_canonical_residual(eig, &inst.cond, t)?,
                (e_tot - point.mean_energy - point.env_mean_energy).abs(),
            )
        }
        None => (
            canonical_residual(&inst.psi, &inst.env, &inst.cond, t, &inst.h_sys)?,
            energy_sum_residual(&inst.psi, &inst.env, &inst.cond, t, &inst.h_sys)?,
        ),
    };
    Ok(Row {
        gamma,
        lambda,
        entropy: point.entropy,
        mean_energy_sys: point.mean_energy,
        mean_energy_env: point.env_mean_energy,
        log_z: point.log_z,
        canonical_residual: canonical,
        energy_sum_residual: energy_sum,
        entropy_partition_residual: entropy_partition_residual(&point),
    })
}

/// `Σ_J w_J ε_J` with `w_J ∝ p_J e^{−γ ε_J} ‖φ_J‖²`.
fn branch_mean_energy(eig: &InteractingEigenstate, cond: &ConditioningDensity, gamma: f64) -> f64 {
    let p = cond.matrix();
    let shift = eig
        .branches
        .iter()
        .map(|b| -gamma * b.energy)
        .fold(f64::NEG_INFINITY, f64::max);
    let (mut num, mut den) = (0.0, 0.0);
    for (j, b) in eig.branches.iter().enumerate() {
        let w = p[(j, j)].re * (-gamma * b.energy - shift).exp() * b.vector.norm_squared();
        num += w * b.energy;
        den += w;
    }
    num / den
}

fn sweep(inst: &Instance, cfg: &ScenarioConfig) -> Result<Vec<Row>, CliError> {
    let gammas = cfg.gamma.values();
    let lambdas = cfg.lambda.values();
    let points: Vec<(f64, f64)> = lambdas
        .iter()
        .flat_map(|&l| gammas.iter().map(move |&g| (g, l)))
        .collect();
    points.par_iter().map(|&(g, l)| evaluate_row(inst, g, l)).collect()
}

fn tolerance(cfg: &ScenarioConfig, name: &str) -> f64 {
    cfg.tolerances
        .get(name)
        .copied()
        .unwrap_or_else(|| default_tolerance(name))
}

fn check(cfg: &ScenarioConfig, name: &str, residual: f64) -> Check {
    Check::at_most(name, residual, tolerance(cfg, name))
}

fn column_max(rows: &[Row], f: impl Fn(&Row) -> f64) -> f64 {
    rows.iter()
        .map(f)
        .fold(0.0, |a, b| if b.is_nan() { f64::NAN } else { a.max(b) })
}

fn invariance_max(inst: &Instance) -> Result<f64, CliError> {
    let mut worst = 0.0f64;
    for &(re, im) in &INVARIANCE_TIMES {
        let r = verify_invariance(&inst.psi, &inst.h_tot, ComplexTime::from_value(C64::new(re, im)))?;
        worst = worst.max(r);
    }
    Ok(worst)
}

fn steps_for(cfg: &ScenarioConfig, span: f64) -> usize {
    ((cfg.integrator_steps as f64 * span.abs()).ceil() as usize).max(2)
}

/// Equal-weight coherent conditioning on the environment support of `Ψ`.
fn coherent_conditioning(inst: &Instance) -> Result<ConditioningDensity, CliError> {
    let dims = inst.psi.dims();
    let mut u = CVector::zeros(dims.d_env());
    for j in 0..dims.d_env() {
        if (0..dims.d_sys()).any(|i| inst.psi.amplitude(i, j).norm() > 0.0) {
            u[j] = C64::new(1.0, 0.0);
        }
    }
    Ok(ConditioningDensity::full(&u * u.adjoint())?)
}

fn dynamics_checks(inst: &Instance, cfg: &ScenarioConfig, checks: &mut Vec<Check>) -> Result<(), CliError> {
    let g_end = cfg.gamma.stop;
    let l_end = cfg.lambda.stop;
    let (rho0, _) = relational_density(&inst.psi, &inst.env, &inst.cond, ComplexTime::ZERO)?;
    let imag = closed_form_consistency(&rho0, &inst.h_sys, ComplexTime::thermal(g_end), steps_for(cfg, g_end))?;
    checks.push(check(cfg, "imaginary_flow_consistency", imag));
    let rel_imag = if g_end == 0.0 {
        0.0
    } else {
        let traj = integrate(
            FlowKind::Imaginary,
            &rho0,
            &inst.h_sys,
            (0.0, g_end),
            steps_for(cfg, g_end),
        )?;
        let (target, _) = relational_density(&inst.psi, &inst.env, &inst.cond, ComplexTime::thermal(g_end))?;
        trace_distance(traj.last(), &target)?
    };
    checks.push(check(cfg, "relational_vs_imaginary_flow", rel_imag));

    let coherent = coherent_conditioning(inst)?;
    let (sigma0, _) = relational_density(&inst.psi, &inst.env, &coherent, ComplexTime::ZERO)?;
    let real = closed_form_consistency(
        &sigma0,
        &inst.h_sys,
        ComplexTime::real_time(l_end),
        steps_for(cfg, l_end),
    )?;
    checks.push(check(cfg, "real_flow_consistency", real));
    let rel_real = if l_end == 0.0 {
        0.0
    } else {
        let traj = integrate(
            FlowKind::Real,
            &sigma0,
            &inst.h_sys,
            (0.0, l_end),
            steps_for(cfg, l_end),
        )?;
        let mut worst = 0.0f64;
        for (&l, state) in traj
            .grid
            .iter()
            .zip(&traj.states)
            .step_by(traj.grid.len().div_ceil(50).max(1))
        {
            let (target, _) = relational_density(&inst.psi, &inst.env, &coherent, ComplexTime::real_time(l))?;
            worst = worst.max(trace_distance(state, &target)?);
        }
        worst
    };
    checks.push(check(cfg, "relational_vs_real_flow", rel_real));
    Ok(())
}

pub fn execute(cfg: &ScenarioConfig) -> Result<ScenarioReport, CliError> {
    cfg.validate()?;
    let inst = build_instance(cfg)?;
    let rows = sweep(&inst, cfg)?;
    let mut checks = Vec::new();
    let mut diagnostics = Map::new();
    let mut gram = None;

    let canonical = column_max(&rows, |r| r.canonical_residual);
    let partition = column_max(&rows, |r| r.entropy_partition_residual);
    let energy_sum = column_max(&rows, |r| r.energy_sum_residual);

    match cfg.scenario {
        ScenarioName::CanonicalEmergence => {
            checks.push(check(cfg, "canonical_residual", canonical));
            checks.push(check(cfg, "entropy_partition_residual", partition));
            if inst.maximally_entangled {
                let (rho, _) = relational_density(&inst.psi, &inst.env, &inst.cond, ComplexTime::ZERO)?;
                let s = von_neumann_entropy(&rho)?;
                let d = inst.psi.dims().d_sys() as f64;
                checks.push(check(cfg, "infinite_temperature_entropy", (s - d.ln()).abs()));
            }
            checks.push(check(cfg, "invariance_residual", invariance_max(&inst)?));
        }
        ScenarioName::ThermoSweep => {
            checks.push(check(cfg, "entropy_partition_residual", partition));
            checks.push(check(cfg, "energy_sum_residual", energy_sum));
            if let (Some(h), true) = (cfg.gamma.step(), cfg.gamma.points >= 3) {
                let mut worst = 0.0f64;
                for chunk in rows.chunks(cfg.gamma.points) {
                    let points: Vec<ThermoPoint> = chunk
                        .iter()
                        .map(|r| ThermoPoint {
                            gamma: r.gamma,
                            entropy: r.entropy,
                            mean_energy: r.mean_energy_sys,
                            env_mean_energy: r.mean_energy_env,
                            log_z: r.log_z,
                        })
                        .collect();
                    worst = worst.max(thermodynamic_relation_residual(&points, h.abs())?);
                }
                let name = "thermodynamic_relation_residual";
                // central differences err as h²; the default is pinned at h = 0.01
                let tol = cfg
                    .tolerances
                    .get(name)
                    .copied()
                    .unwrap_or_else(|| default_tolerance(name) * (h.abs() / 0.01).powi(2).max(1.0));
                checks.push(Check::at_most(name, worst, tol));
            }
            checks.push(check(cfg, "canonical_residual", canonical));
        }
        ScenarioName::Dynamics => {
            dynamics_checks(&inst, cfg, &mut checks)?;
            checks.push(check(cfg, "canonical_residual", canonical));
        }
        ScenarioName::SchmidtConditioning => {
            checks.push(check(cfg, "canonical_residual", canonical));
            checks.push(check(cfg, "entropy_partition_residual", partition));
            let uniform = ConditioningDensity::uniform(inst.env.dim());
            let mut worst_canonical = 0.0f64;
            let mut worst_sum = 0.0f64;
            for r in &rows {
                let t = ComplexTime::new(r.gamma, r.lambda);
                worst_canonical =
                    worst_canonical.max(canonical_residual(&inst.psi, &inst.env, &uniform, t, &inst.h_sys)?);
                worst_sum = worst_sum.max(energy_sum_residual(&inst.psi, &inst.env, &uniform, t, &inst.h_sys)?);
            }
            diagnostics.insert("uniform_conditioning_canonical_residual".into(), json!(worst_canonical));
            diagnostics.insert("uniform_conditioning_energy_sum_residual".into(), json!(worst_sum));
        }
        ScenarioName::Interaction => {
            let (eig, v) = inst
                .interacting
                .as_ref()
                .expect("interaction scenario builds an interacting state");
            checks.push(check(cfg, "interacting_canonical_residual", canonical));
            if cfg.interaction.kind == InteractionKind::Generic {
                // overlapping branch states: the entropy relation is not expected to hold
                diagnostics.insert("entropy_partition_residual".into(), json!(partition));
            } else {
                checks.push(check(cfg, "entropy_partition_residual", partition));
            }
            checks.push(check(cfg, "energy_sum_residual", energy_sum));
            checks.push(check(cfg, "invariance_residual", invariance_max(&inst)?));
            let (env_comm, proj_comm) = commutator_norms(v, &inst.env, inst.psi.dims())?;
            checks.push(check(cfg, "commutator_residual", env_comm.max(proj_comm)));
            let g = gram_matrix(&eig.branches);
            let n = g.nrows();
            let off = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| (g[(i, j)] - if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }).norm())
                .fold(0.0, f64::max);
            diagnostics.insert("gram_deviation_from_identity".into(), json!(off));
            gram = Some(g);
        }
        ScenarioName::InvarianceCheck => {
            checks.push(check(cfg, "invariance_residual", invariance_max(&inst)?));
        }
    }
    Ok(ScenarioReport {
        rows,
        checks,
        diagnostics,
        gram,
    })
}

impl ScenarioReport {
    pub fn gram_json(&self) -> Option<ComplexMatrixJson> {
        self.gram.as_ref().map(ComplexMatrixJson::from)
    }
}
