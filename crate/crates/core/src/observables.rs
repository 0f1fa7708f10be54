//! Concurrence, protected-state fidelity, and geometric phases of the cyclic
//! evolution `R(t)|Ψ_r⟩` over one period `τ = π/Ω2`.

use std::f64::consts::PI;
use std::ops::{Add, Mul};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dfs::{psi_r, wrap_angle, DfsCoordinates};
use crate::error::{Error, Result};
use crate::hilbert::{
    eigh_matrix, pauli, schmidt_decompose, CMatrix, DensityOperator, HilbertSpace,
    StateVector, DEGENERACY_TOL, I,
};
use crate::lindblad::{eq6_spec, integrate, IntegrateOptions};
use crate::model::{frame_matrix, ion_frame_from, FrameGenerators, Ion, SystemParams};

/// Default Simpson panel count over one period.
pub const DEFAULT_PANELS: usize = 4096;

fn spin_flip() -> CMatrix {
    let y = pauli::sigma_y();
    y.kronecker(&y)
}

fn ensure_two_ion_space(space: &HilbertSpace) -> Result<()> {
    if space != &HilbertSpace::two_ions() {
        return Err(Error::DimensionMismatch(format!(
            "concurrence needs two qubits, got {:?}",
            space.factor_dims()
        )));
    }
    Ok(())
}

/// Wootters concurrence `max(0, λ1 − λ2 − λ3 − λ4)`, with `λ_i` the square
/// roots of the eigenvalues of `√ρ ρ̃ √ρ`, `ρ̃ = (σ_y⊗σ_y) ρ* (σ_y⊗σ_y)`.
pub fn concurrence(rho: &DensityOperator) -> Result<f64> {
    ensure_two_ion_space(rho.space())?;
    rho.validate(1e-9, 1e-9, 1e-9)?;
    let yy = spin_flip();
    let tilde = &yy * rho.matrix().conjugate() * &yy;
    // Restrict to the range of ρ: with W = V√P over eigenvalues above the
    // cutoff, W†ρ̃W has the nonzero spectrum of √ρ ρ̃ √ρ.
    let (vals, vecs) = eigh_matrix(rho.matrix())?;
    let kept: Vec<_> = vals
        .iter()
        .zip(&vecs)
        .filter(|(p, _)| **p > RANK_CUTOFF)
        .map(|(p, v)| v * C64::from(p.sqrt()))
        .collect();
    let w = CMatrix::from_columns(&kept);
    let m = w.adjoint() * tilde * &w;
    let m = (&m + m.adjoint()) * C64::from(0.5);
    let (ev, _) = eigh_matrix(&m)?;
    let mut l: Vec<f64> = ev
        .iter()
        .map(|v| if *v > RANK_CUTOFF { v.sqrt() } else { 0.0 })
        .collect();
    l.resize(4, 0.0);
    l.sort_by(|a, b| b.total_cmp(a));
    Ok((l[0] - l[1] - l[2] - l[3]).max(0.0))
}

/// Eigenvalues below this are treated as exact zeros in [`concurrence`].
const RANK_CUTOFF: f64 = 1e-15;

/// `|⟨ψ|σ_y⊗σ_y|ψ*⟩|` for a pure two-qubit state.
pub fn concurrence_pure(psi: &StateVector) -> Result<f64> {
    ensure_two_ion_space(psi.space())?;
    psi.ensure_normalized()?;
    let a = psi.amplitudes();
    let flipped = spin_flip() * a.conjugate();
    Ok(a.dotc(&flipped).norm())
}

/// `F = ⟨Ψ(t)| R(t) ρ′(t) R†(t) |Ψ(t)⟩`.
pub fn fidelity_trace(
    analytic: &StateVector,
    rho_prime: &DensityOperator,
    params: &SystemParams,
    t: f64,
) -> Result<f64> {
    let two = HilbertSpace::two_ions();
    if analytic.space() != &two || rho_prime.space() != &two {
        return Err(Error::DimensionMismatch("fidelity acts on two ions".into()));
    }
    let r = frame_matrix(params, t);
    let lab = &r * rho_prime.matrix() * r.adjoint();
    let psi = analytic.amplitudes();
    Ok(psi.dotc(&(lab * psi)).re)
}

#[derive(Clone, Debug, Serialize)]
pub struct FidelityCurve {
    pub times: Vec<f64>,
    pub t_over_period: Vec<f64>,
    pub fidelity: Vec<f64>,
}

/// Integrates the ion-only equation with ionic decay from `|ψ0⟩⟨ψ0|` over
/// `periods · π/Ω2`, comparing against `R(t)|ψ0⟩` at `samples + 1` points.
pub fn fidelity_curve(
    params: &SystemParams,
    psi0: &StateVector,
    periods: f64,
    opts: &IntegrateOptions,
) -> Result<FidelityCurve> {
    params.validate()?;
    if !(periods > 0.0) {
        return Err(Error::InvalidParams(format!("periods = {periods}")));
    }
    let tau = params.period();
    let spec = eq6_spec(params)?;
    let traj = integrate(&spec, &psi0.projector(), periods * tau, opts, None)?;
    let mut fidelity = Vec::with_capacity(traj.times.len());
    for (t, rho) in traj.times.iter().zip(&traj.states) {
        let r = frame_matrix(params, *t);
        let analytic = StateVector::new(HilbertSpace::two_ions(), &r * psi0.amplitudes())?;
        fidelity.push(fidelity_trace(&analytic, rho, params, *t)?);
    }
    Ok(FidelityCurve {
        t_over_period: traj.times.iter().map(|t| t / tau).collect(),
        times: traj.times,
        fidelity,
    })
}

/// Composite Simpson rule with `panels` (rounded up to even) subintervals.
pub fn simpson<T, F>(f: F, a: f64, b: f64, panels: usize) -> T
where
    F: Fn(f64) -> T,
    T: Add<Output = T> + Mul<f64, Output = T>,
{
    let n = (panels.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc = acc + f(a + k as f64 * h) * w;
    }
    acc * (h / 3.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMethod {
    ClosedForm,
    Quadrature,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeometricPhaseResult {
    /// Reported phase in `(−π, π]`.
    pub value: f64,
    /// Unwrapped value (the quadrature integral for the global phase).
    pub raw: f64,
    pub method: PhaseMethod,
    pub quadrature_points: usize,
    pub closed_form: f64,
}

/// Checks `Ω1 = NΩ2` and `|⟨Ψ(τ)|Ψ(0)⟩| = 1`.
pub fn check_cyclic(coords: &DfsCoordinates, params: &SystemParams) -> Result<u64> {
    let n = params.cycle_ratio().ok_or_else(|| {
        Error::NotCyclic(format!(
            "Omega1/Omega2 = {} is not an integer",
            params.omega1 / params.omega2
        ))
    })?;
    let psi0 = psi_r(coords, params);
    let r = frame_matrix(params, params.period());
    let overlap = psi0.amplitudes().dotc(&(r * psi0.amplitudes())).norm();
    if (overlap - 1.0).abs() > 1e-9 {
        return Err(Error::NotCyclic(format!("|<psi(tau)|psi(0)>| = {overlap}")));
    }
    Ok(n)
}

/// `β^G = i∫₀^τ ⟨Ψ|d/dt|Ψ⟩ dt` with `|Ψ(t)⟩ = R(t)|Ψ_r⟩`; closed form `2π(1 − r)`.
pub fn global_geometric_phase(
    coords: &DfsCoordinates,
    params: &SystemParams,
    panels: usize,
) -> Result<GeometricPhaseResult> {
    check_cyclic(coords, params)?;
    let psi = psi_r(coords, params);
    let v = psi.amplitudes();
    let gens = FrameGenerators::new(params);
    let integrand = |t: f64| {
        let (ra, rda) = ion_frame_from(&gens, Ion::A, t);
        let (rb, rdb) = ion_frame_from(&gens, Ion::B, t);
        let gen = (ra.adjoint() * rda).kronecker(&pauli::identity())
            + pauli::identity().kronecker(&(rb.adjoint() * rdb));
        (I * v.dotc(&(gen * v))).re
    };
    let raw = simpson(integrand, 0.0, params.period(), panels);
    Ok(GeometricPhaseResult {
        value: wrap_angle(raw),
        raw,
        method: PhaseMethod::Quadrature,
        quadrature_points: even_panels(panels) + 1,
        closed_form: 2.0 * PI * (1.0 - coords.r),
    })
}

fn even_panels(panels: usize) -> usize {
    (panels.max(2) + 1) & !1
}

/// `arg[cos x + i√(1−r²) sin x]`, `x = π√((1−r)/(1+r))`; zero at `r = 1`.
pub fn subsystem_phase_closed_form(r: f64) -> f64 {
    if r >= 1.0 - DEGENERACY_TOL {
        return 0.0;
    }
    let x = PI * ((1.0 - r) / (1.0 + r)).sqrt();
    wrap_angle(C64::new(x.cos(), (1.0 - r * r).sqrt() * x.sin()).arg())
}

/// Subsystem phase of ion `which` under the bilocal evolution `R^A ⊗ R^B`:
/// `arg Σ_k p_k ⟨μ_k|R^i(τ)|μ_k⟩ exp(−∫₀^τ ⟨μ_k|R^{i†}Ṙ^i|μ_k⟩ dt)` over the
/// Schmidt pairs of `|Ψ_r⟩`, or zero when the coefficients are degenerate.
pub fn subsystem_geometric_phase(
    coords: &DfsCoordinates,
    params: &SystemParams,
    which: Ion,
    method: PhaseMethod,
    panels: usize,
) -> Result<GeometricPhaseResult> {
    check_cyclic(coords, params)?;
    let closed_form = subsystem_phase_closed_form(coords.r);
    let psi = psi_r(coords, params);
    let schmidt = schmidt_decompose(&psi, 1)?;
    let degenerate = schmidt.degenerate || coords.r >= 1.0 - DEGENERACY_TOL;
    if method == PhaseMethod::ClosedForm || degenerate {
        return Ok(GeometricPhaseResult {
            value: closed_form,
            raw: closed_form,
            method,
            quadrature_points: 0,
            closed_form,
        });
    }
    let vectors = match which {
        Ion::A => &schmidt.left_vectors,
        Ion::B => &schmidt.right_vectors,
    };
    let gens = FrameGenerators::new(params);
    let tau = params.period();
    let (r_tau, _) = ion_frame_from(&gens, which, tau);
    let mut total = C64::new(0.0, 0.0);
    for (p, mu) in schmidt.coefficients.iter().zip(vectors) {
        let m = mu.amplitudes();
        let integral = simpson(
            |t| {
                let (r, rd) = ion_frame_from(&gens, which, t);
                m.dotc(&(r.adjoint() * rd * m))
            },
            0.0,
            tau,
            panels,
        );
        total += m.dotc(&(&r_tau * m)) * (-integral).exp() * *p;
    }
    let raw = total.arg();
    Ok(GeometricPhaseResult {
        value: wrap_angle(raw),
        raw,
        method,
        quadrature_points: even_panels(panels) + 1,
        closed_form,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseRow {
    pub r: f64,
    pub beta_global_raw: f64,
    pub beta_global_wrapped: f64,
    pub beta_sub_closed: f64,
    pub beta_sub_quadrature: f64,
}

/// Global and subsystem phases across `r_grid` at fixed `μ`.
pub fn phase_vs_entanglement_sweep(
    params: &SystemParams,
    r_grid: &[f64],
    mu: f64,
    panels: usize,
) -> Result<Vec<PhaseRow>> {
    r_grid
        .iter()
        .map(|&r| {
            let coords = DfsCoordinates::new(r, mu)?;
            let global = global_geometric_phase(&coords, params, panels)?;
            let sub = subsystem_geometric_phase(&coords, params, Ion::A, PhaseMethod::Quadrature, panels)?;
            Ok(PhaseRow {
                r,
                beta_global_raw: global.raw,
                beta_global_wrapped: global.value,
                beta_sub_closed: sub.closed_form,
                beta_sub_quadrature: sub.value,
            })
        })
        .collect()
}

/// Smallest circular distance between two angles.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}
