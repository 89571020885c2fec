//! Differential form of relational evolution.
//!
//! Along a pure inverse-temperature path `Λ = γ/2` the normalized density obeys
//! `dρ/dΛ = −{H − ⟨H⟩, ρ}`; along a pure real-time path `Λ = iλ` it obeys
//! `dρ/dλ = −i[H, ρ]`. Trajectories here are parameterized by `γ` (so the
//! imaginary flow carries a factor ½) or by `λ`, matching [`ComplexTime`].

use crate::error::{Error, Result};
use crate::hilbert::{anticommutator, commutator, CMatrix, DensityMatrix, HermitianOperator, C64};
use crate::propagator::{eigh, two_sided_with_spectrum, ComplexTime};
use crate::thermo::mean_energy;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowKind {
    /// Inverse-temperature flow in `γ`.
    Imaginary,
    /// Unitary flow in `λ`.
    Real,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub kind: FlowKind,
    pub grid: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// Largest trace correction applied after a step.
    pub max_trace_correction: f64,
}

impl Trajectory {
    pub fn last(&self) -> &DensityMatrix {
        self.states.last().expect("trajectory holds the initial state")
    }
}

fn check_dims(rho: &DensityMatrix, h: &HermitianOperator) -> Result<()> {
    if rho.dim() != h.dim() {
        return Err(Error::DimensionMismatch(format!(
            "density has dimension {}, Hamiltonian {}",
            rho.dim(),
            h.dim()
        )));
    }
    Ok(())
}

/// `−{H − ⟨H⟩𝟙, ρ}` with `⟨H⟩ = tr(Hρ)`.
pub fn imag_time_rhs(rho: &DensityMatrix, h: &HermitianOperator) -> Result<CMatrix> {
    check_dims(rho, h)?;
    let e = mean_energy(rho, h)?;
    Ok(imag_raw(rho.matrix(), h.matrix(), e))
}

/// `−i[H, ρ]`.
pub fn real_time_rhs(rho: &DensityMatrix, h: &HermitianOperator) -> Result<CMatrix> {
    check_dims(rho, h)?;
    Ok(real_raw(rho.matrix(), h.matrix()))
}

fn imag_raw(rho: &CMatrix, h: &CMatrix, mean: f64) -> CMatrix {
    let mut shifted = h.clone();
    for i in 0..shifted.nrows() {
        shifted[(i, i)] -= C64::new(mean, 0.0);
    }
    -anticommutator(&shifted, rho)
}

fn real_raw(rho: &CMatrix, h: &CMatrix) -> CMatrix {
    commutator(h, rho) * C64::new(0.0, -1.0)
}

fn trace_re(m: &CMatrix) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

fn flow(kind: FlowKind, rho: &CMatrix, h: &CMatrix) -> CMatrix {
    match kind {
        FlowKind::Imaginary => {
            // ⟨H⟩ = Re tr(Hρ); the half converts d/dΛ into d/dγ
            let mean = (h * rho).trace().re;
            imag_raw(rho, h, mean) * C64::new(0.5, 0.0)
        }
        FlowKind::Real => real_raw(rho, h),
    }
}

/// Fixed-step classical RK4 over `span = (start, end)` with `steps` steps.
///
/// After every step the state is re-symmetrized and rescaled to unit trace.
pub fn integrate(
    kind: FlowKind,
    rho0: &DensityMatrix,
    h: &HermitianOperator,
    span: (f64, f64),
    steps: usize,
) -> Result<Trajectory> {
    check_dims(rho0, h)?;
    if steps < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 steps, got {steps}")));
    }
    if !rho0.is_normalized() {
        return Err(Error::NotDensityMatrix("initial state must be normalized".into()));
    }
    let (t0, t1) = span;
    let dt = (t1 - t0) / steps as f64;
    let hm = h.matrix();
    let half = C64::new(0.5 * dt, 0.0);
    let full = C64::new(dt, 0.0);
    let sixth = C64::new(dt / 6.0, 0.0);
    let two = C64::new(2.0, 0.0);

    let mut grid = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    grid.push(t0);
    states.push(rho0.clone());
    let mut rho = rho0.matrix().clone();
    let mut max_correction = 0.0f64;

    for step in 1..=steps {
        let k1 = flow(kind, &rho, hm);
        let k2 = flow(kind, &(&rho + &k1 * half), hm);
        let k3 = flow(kind, &(&rho + &k2 * half), hm);
        let k4 = flow(kind, &(&rho + &k3 * full), hm);
        let mut next = &rho + (k1 + &k2 * two + &k3 * two + k4) * sixth;
        next = (&next + next.adjoint()) * C64::new(0.5, 0.0);
        let tr = trace_re(&next);
        if !tr.is_finite() || next.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) || tr <= 0.0 {
            return Err(Error::IntegrationDiverged(step));
        }
        let correction = (tr - 1.0).abs();
        if correction > 0.0 {
            log::trace!("step {step}: trace correction {correction:e}");
        }
        max_correction = max_correction.max(correction);
        next.unscale_mut(tr);
        rho = next;
        grid.push(t0 + dt * step as f64);
        states.push(DensityMatrix::from_hermitian_unchecked(rho.clone(), true));
    }
    log::debug!("{kind:?} flow: {steps} steps, max trace correction {max_correction:e}");
    Ok(Trajectory {
        kind,
        grid,
        states,
        max_trace_correction: max_correction,
    })
}

/// `½‖a − b‖₁`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", a.dim(), b.dim())));
    }
    let diff = HermitianOperator::from_hermitian_unchecked(a.matrix() - b.matrix());
    Ok(0.5 * eigh(&diff)?.eigenvalues.iter().map(|w| w.abs()).sum::<f64>())
}

/// Largest trace distance between the RK4 trajectory and the closed-form
/// two-sided propagation along a single-axis path from `0` to `t`.
pub fn closed_form_consistency(
    rho0: &DensityMatrix,
    h: &HermitianOperator,
    t: ComplexTime,
    steps: usize,
) -> Result<f64> {
    let (kind, end) = match (t.gamma != 0.0, t.lambda != 0.0) {
        (false, false) => return Ok(0.0),
        (true, false) => (FlowKind::Imaginary, t.gamma),
        (false, true) => (FlowKind::Real, t.lambda),
        (true, true) => return Err(Error::InvalidArgument("path must move along one axis at a time".into())),
    };
    let traj = integrate(kind, rho0, h, (0.0, end), steps)?;
    let spec = eigh(h)?;
    let mut worst = 0.0f64;
    for (&p, state) in traj.grid.iter().zip(&traj.states) {
        let at = match kind {
            FlowKind::Imaginary => ComplexTime::thermal(p),
            FlowKind::Real => ComplexTime::real_time(p),
        };
        let (closed, _) = two_sided_with_spectrum(rho0.matrix(), &spec, at);
        let (closed, _) = closed.normalize()?;
        worst = worst.max(trace_distance(state, &closed)?);
    }
    Ok(worst)
}
