//! Brute-force reference implementations for cross-checking.
//!
//! Nothing here touches [`crate::propagator`]: diagonalization uses a cyclic
//! complex Jacobi sweep written out with explicit loops, and all sums over
//! branches are scalar loops.

#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};
use crate::hilbert::{check_cap, CMatrix, CVector, DensityMatrix, GlobalState, HermitianOperator, SpaceDims, C64};
use crate::propagator::ComplexTime;
use crate::relational::EnvironmentModel;

const JACOBI_MAX_SWEEPS: usize = 100;

/// Hermitian eigenpairs by cyclic Jacobi rotations, eigenvalues ascending.
pub fn jacobi_eigh(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::InvalidDimension("Jacobi needs a square matrix".into()));
    }
    let mut a = m.clone();
    let mut v = CMatrix::identity(n, n);
    let scale: f64 = a
        .iter()
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-17 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                let phase = apq / r; // e^{iφ}
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // U restricted to (p, q) = diag(1, e^{−iφ}) · [[c, s], [−s, c]]
                let u_pp = C64::new(c, 0.0);
                let u_pq = C64::new(s, 0.0);
                let u_qp = phase.conj() * (-s);
                let u_qq = phase.conj() * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * u_pp + akq * u_qp;
                    a[(k, q)] = akp * u_pq + akq * u_qq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = u_pp.conj() * apk + u_qp.conj() * aqk;
                    a[(q, k)] = u_pq.conj() * apk + u_qq.conj() * aqk;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * u_pp + vkq * u_qp;
                    v[(k, q)] = vkp * u_pq + vkq * u_qq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    if values.iter().any(|w| !w.is_finite()) {
        return Err(Error::DiagonalizationFailed);
    }
    let vectors = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok((values, vectors))
}

fn outer_accumulate(acc: &mut CMatrix, v: &CVector, w: f64) {
    let n = v.len();
    for i in 0..n {
        for k in 0..n {
            acc[(i, k)] += v[i] * v[k].conj() * w;
        }
    }
}

/// `e^{−γH} / tr e^{−γH}` by explicit eigenvector summation.
pub fn gibbs_oracle(h: &HermitianOperator, gamma: f64) -> Result<DensityMatrix> {
    let (eps, vecs) = jacobi_eigh(h.matrix())?;
    let shift = eps.iter().map(|e| -gamma * e).fold(f64::NEG_INFINITY, f64::max);
    let n = eps.len();
    let mut out = CMatrix::zeros(n, n);
    let mut z = 0.0;
    for (i, &e) in eps.iter().enumerate() {
        let w = (-gamma * e - shift).exp();
        z += w;
        outer_accumulate(&mut out, &vecs.column(i).into_owned(), w);
    }
    for x in out.iter_mut() {
        *x /= z;
    }
    DensityMatrix::new((&out + out.adjoint()) * C64::new(0.5, 0.0))
}

/// `Σ_J e^{−γ ε_J} p_J |v_J⟩⟨v_J|`, normalized by its scalar trace, where
/// `v_J = ⟨J|Ψ⟩ = a_J |φ_J⟩` is read off the state column by column and
/// `ε_J = E_tot − E_J`.
pub fn reduced_density_oracle(
    psi: &GlobalState,
    env: &EnvironmentModel,
    weights: &[f64],
    gamma: f64,
) -> Result<DensityMatrix> {
    let dims = psi.dims();
    if weights.len() != dims.d_env() || env.dim() != dims.d_env() {
        return Err(Error::DimensionMismatch(
            "weights and environment must match d_env".into(),
        ));
    }
    let e_tot = psi.e_tot().ok_or(Error::MissingEnergy)?;
    let mut branches = Vec::new();
    for j in 0..dims.d_env() {
        let v = CVector::from_fn(dims.d_sys(), |i, _| psi.amplitude(i, j));
        let norm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if norm2 > 0.0 && weights[j] > 0.0 {
            branches.push((e_tot - env.energies()[j], weights[j], v, norm2));
        }
    }
    if branches.is_empty() {
        return Err(Error::UnsupportedByConditioning);
    }
    let shift = branches.iter().map(|b| -gamma * b.0).fold(f64::NEG_INFINITY, f64::max);
    let d = dims.d_sys();
    let mut out = CMatrix::zeros(d, d);
    let mut z = 0.0;
    for (eps, p, v, norm2) in &branches {
        let w = (-gamma * eps - shift).exp() * p;
        z += w * norm2;
        outer_accumulate(&mut out, v, w);
    }
    for x in out.iter_mut() {
        *x /= z;
    }
    DensityMatrix::new((&out + out.adjoint()) * C64::new(0.5, 0.0))
}

/// `e^{Λ(H_tot − E_tot)} |Ψ⟩` through a fresh Jacobi diagonalization of `H_tot`.
pub fn global_exponential_oracle(
    psi: &GlobalState,
    h_tot: &HermitianOperator,
    e_tot: f64,
    t: ComplexTime,
) -> Result<CVector> {
    let n = psi.dims().total();
    check_cap(n)?;
    if h_tot.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "H_tot has dimension {}, state {n}",
            h_tot.dim()
        )));
    }
    let (w, u) = jacobi_eigh(h_tot.matrix())?;
    let lam = C64::new(0.5 * t.gamma, t.lambda);
    let amps = psi.amplitudes();
    let mut out = CVector::zeros(n);
    for k in 0..n {
        let mut overlap = C64::new(0.0, 0.0);
        for i in 0..n {
            overlap += u[(i, k)].conj() * amps[i];
        }
        let f = (lam * (w[k] - e_tot)).exp();
        for i in 0..n {
            out[i] += u[(i, k)] * overlap * f;
        }
    }
    Ok(out)
}

/// `tr_E ρ` by the defining double loop.
pub fn partial_trace_oracle(rho: &CMatrix, dims: SpaceDims) -> CMatrix {
    let (ds, de) = (dims.d_sys(), dims.d_env());
    let mut out = CMatrix::zeros(ds, ds);
    for i in 0..ds {
        for k in 0..ds {
            for j in 0..de {
                out[(i, k)] += rho[(i * de + j, k * de + j)];
            }
        }
    }
    out
}

/// `A ⊗ B` by the defining index formula.
pub fn kron_oracle(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca, rb, cb) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    let mut out = CMatrix::zeros(ra * rb, ca * cb);
    for i in 0..ra {
        for k in 0..ca {
            for j in 0..rb {
                for l in 0..cb {
                    out[(i * rb + j, k * cb + l)] = a[(i, k)] * b[(j, l)];
                }
            }
        }
    }
    out
}
