//! Decoherence-free subspace of the engineered jump `J = σ^A_{+-} + σ^B_{+-}`,
//! the protected family `|Ψ_r⟩ = √(1−r)|1⟩ + √r e^{iμ}|2⟩`, its analytic
//! trajectory `R(t)|Ψ_r⟩`, and the inverse problem: given a two-ion state,
//! find drive phases that make it a protected state.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{CVector, HilbertSpace, StateVector, I, ZERO};
use crate::model::{dressed_basis, Ion, SystemParams};

const TAU: f64 = 2.0 * PI;

/// Residual below which an inversion is accepted.
pub const ACCEPT_RESIDUAL: f64 = 1e-9;
/// Best residual above which the inverter reports no solution.
pub const NO_SOLUTION_RESIDUAL: f64 = 1e-6;

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}

/// Wraps a phase into `(0, 2π]`.
pub fn wrap_mu(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y == 0.0 {
        TAU
    } else {
        y
    }
}

/// Location `(r, μ)` of a protected state in the DFS.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DfsCoordinates {
    pub r: f64,
    pub mu: f64,
}

impl DfsCoordinates {
    /// Validates `r ∈ [0, 1]` and folds `μ` into `(0, 2π]`.
    pub fn new(r: f64, mu: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::InvalidParams(format!("r = {r} outside [0, 1]")));
        }
        if !mu.is_finite() {
            return Err(Error::InvalidParams(format!("mu = {mu}")));
        }
        Ok(Self { r, mu: wrap_mu(mu) })
    }
}

/// The four adjustable drive phases.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReservoirParameters {
    pub phi_a1: f64,
    pub phi_b1: f64,
    pub varphi_a: f64,
    pub varphi_b: f64,
}

impl ReservoirParameters {
    pub fn from_params(p: &SystemParams) -> Self {
        Self {
            phi_a1: p.phi_a1,
            phi_b1: p.phi_b1,
            varphi_a: p.varphi_a,
            varphi_b: p.varphi_b,
        }
    }

    /// Copy of `base` with these phases.
    pub fn apply_to(&self, base: &SystemParams) -> SystemParams {
        SystemParams {
            phi_a1: self.phi_a1,
            phi_b1: self.phi_b1,
            varphi_a: self.varphi_a,
            varphi_b: self.varphi_b,
            ..base.clone()
        }
    }

    /// Every angle folded into `(−π, π]`.
    pub fn wrapped(&self) -> Self {
        Self {
            phi_a1: wrap_angle(self.phi_a1),
            phi_b1: wrap_angle(self.phi_b1),
            varphi_a: wrap_angle(self.varphi_a),
            varphi_b: wrap_angle(self.varphi_b),
        }
    }

    #[cfg(test)]
    fn as_array(&self) -> [f64; 4] {
        [self.phi_a1, self.phi_b1, self.varphi_a, self.varphi_b]
    }

    fn from_array(x: [f64; 4]) -> Self {
        Self {
            phi_a1: x[0],
            phi_b1: x[1],
            varphi_a: x[2],
            varphi_b: x[3],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InversionBranch {
    BellTable,
    SuperpositionClosedForm,
    Numeric,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InversionResult {
    pub params: ReservoirParameters,
    pub coords: DfsCoordinates,
    pub residual: f64,
    pub branch: InversionBranch,
}

/// `|1⟩ = |++⟩`, `|2⟩ = (|−+⟩ − |+−⟩)/√2`, `|3⟩ = |−−⟩`, `|4⟩ = (|−+⟩ + |+−⟩)/√2`.
#[derive(Clone, Debug)]
pub struct DfsBasis {
    pub one: StateVector,
    pub two: StateVector,
    pub three: StateVector,
    pub four: StateVector,
}

impl DfsBasis {
    pub fn states(&self) -> [&StateVector; 4] {
        [&self.one, &self.two, &self.three, &self.four]
    }
}

pub fn dfs_basis(params: &SystemParams) -> DfsBasis {
    let d = dressed_basis(params);
    let (pa, ma) = (d.plus(Ion::A), d.minus(Ion::A));
    let (pb, mb) = (d.plus(Ion::B), d.minus(Ion::B));
    let mp = ma.tensor(pb);
    let pm = pa.tensor(mb);
    let s = C64::from(FRAC_1_SQRT_2);
    let two = StateVector::new(
        HilbertSpace::two_ions(),
        (mp.amplitudes() - pm.amplitudes()) * s,
    )
    .expect("4 amplitudes");
    let four = StateVector::new(
        HilbertSpace::two_ions(),
        (mp.amplitudes() + pm.amplitudes()) * s,
    )
    .expect("4 amplitudes");
    DfsBasis {
        one: pa.tensor(pb),
        two,
        three: ma.tensor(mb),
        four,
    }
}

/// `√(1−r)|1⟩ + √r e^{iμ}|2⟩` in the bare basis.
pub fn psi_r(coords: &DfsCoordinates, params: &SystemParams) -> StateVector {
    let b = dfs_basis(params);
    let a1 = C64::from((1.0 - coords.r).sqrt());
    let a2 = C64::from_polar(coords.r.sqrt(), coords.mu);
    StateVector::new(
        HilbertSpace::two_ions(),
        b.one.amplitudes() * a1 + b.two.amplitudes() * a2,
    )
    .expect("4 amplitudes")
}

/// Bare-basis amplitudes `(c_ee, c_eg, c_ge, c_gg)` of `R(t)|Ψ_r⟩`, written
/// out in closed form for `Ω^A_l = Ω^B_l`.
pub fn coefficients_at(coords: &DfsCoordinates, params: &SystemParams, t: f64) -> [C64; 4] {
    let (o1, o2) = (params.omega1, params.omega2);
    let (pa, pb) = (params.phi_a1, params.phi_b1);
    let (ca, sa) = ((params.varphi_a / 2.0 - o1 * t).cos(), (params.varphi_a / 2.0 - o1 * t).sin());
    let (cb, sb) = ((params.varphi_b / 2.0 - o1 * t).cos(), (params.varphi_b / 2.0 - o1 * t).sin());
    let e = C64::from_polar(coords.r.sqrt() * FRAC_1_SQRT_2, coords.mu);
    let q = (1.0 - coords.r).sqrt();
    let ph = |x: f64| C64::from_polar(1.0, x);
    let w = 2.0 * o2 * t;

    let c1 = -I * e * (ph(pb) * ca * sb - ph(pa) * sa * cb) + ph(-w) * q * ca * cb;
    let c2 = -e * (ca * cb + ph(pa - pb) * sa * sb) + I * ph(-(pb + w)) * q * ca * sb;
    let c3 = e * (ca * cb + ph(pb - pa) * sa * sb) + I * ph(-(pa + w)) * q * sa * cb;
    let c4 = -I * e * (ph(-pa) * sa * cb - ph(-pb) * ca * sb) - ph(-(pa + pb + w)) * q * sa * sb;
    [c1, c2, c3, c4]
}

/// `|Ψ(t)⟩ = Σ c_i(t)|i⟩` from the closed-form coefficients.
pub fn analytic_state_at(coords: &DfsCoordinates, params: &SystemParams, t: f64) -> StateVector {
    StateVector::from_slice(HilbertSpace::two_ions(), &coefficients_at(coords, params, t))
        .expect("4 amplitudes")
}

/// `|Ψ_E⟩ = |g⟩|g⟩/√2 + (|e⟩|g⟩ − |g⟩|e⟩)/2`.
pub fn psi_e_initial() -> StateVector {
    let h = C64::from(0.5);
    StateVector::from_slice(
        HilbertSpace::two_ions(),
        &[ZERO, h, -h, C64::from(FRAC_1_SQRT_2)],
    )
    .expect("4 amplitudes")
}

/// Drive phases under which `|Ψ_E⟩` evolves as [`psi_e_state_at`]:
/// `φ^A = φ^B = π`, `φ^A_1 = π`, `φ^B_1 = 0`.
pub fn psi_e_reservoir() -> ReservoirParameters {
    ReservoirParameters {
        phi_a1: PI,
        phi_b1: 0.0,
        varphi_a: PI,
        varphi_b: PI,
    }
}

/// Closed-form `R(t)|Ψ_E⟩` at the default rates `Ω1 = 100`, `Ω2 = 10`.
pub fn psi_e_state_at(t: f64) -> StateVector {
    let p = SystemParams::default();
    psi_e_state_with(p.omega1, p.omega2, t)
}

/// Closed-form `R(t)|Ψ_E⟩` for arbitrary `Ω1`, `Ω2` under [`psi_e_reservoir`].
pub fn psi_e_state_with(omega1: f64, omega2: f64, t: f64) -> StateVector {
    let s = FRAC_1_SQRT_2;
    let e = C64::from_polar(1.0, -2.0 * omega2 * t);
    let (s1, c1) = (omega1 * t).sin_cos();
    let (s2, c2) = (2.0 * omega1 * t).sin_cos();
    let a = e * (s * s1 * s1) - I * (s2 / 2.0);
    let b = C64::from(c2 / 2.0) + I * e * (s * s2 / 2.0);
    let d = e * (s * c1 * c1) + I * (s2 / 2.0);
    StateVector::from_slice(HilbertSpace::two_ions(), &[a, b, -b, d]).expect("4 amplitudes")
}

fn ensure_two_ion(psi: &StateVector) -> Result<()> {
    if psi.space() != &HilbertSpace::two_ions() {
        return Err(Error::DimensionMismatch(format!(
            "expected a two-ion state, got factors {:?}",
            psi.space().factor_dims()
        )));
    }
    psi.ensure_normalized()
}

/// Components of `psi` in span{|1⟩,|3⟩,|4⟩} and span{|2⟩}.
pub fn symmetric_antisymmetric_decompose(
    psi: &StateVector,
    params: &SystemParams,
) -> Result<(StateVector, StateVector)> {
    ensure_two_ion(psi)?;
    let b = dfs_basis(params);
    let project = |states: &[&StateVector]| {
        let mut v = CVector::zeros(4);
        for s in states {
            v += s.amplitudes() * s.inner(psi);
        }
        StateVector::new(HilbertSpace::two_ions(), v).expect("4 amplitudes")
    };
    Ok((project(&[&b.one, &b.three, &b.four]), project(&[&b.two])))
}

/// Projection of `psi` on the DFS basis built from `phases`.
#[derive(Clone, Copy, Debug)]
pub struct DfsProjection {
    pub amplitudes: [C64; 4],
    pub coords: DfsCoordinates,
    /// `1 − |⟨psi|Ψ_r⟩|² = |a3|² + |a4|²`.
    pub residual: f64,
}

pub fn project_onto_dfs(psi: &StateVector, phases: &ReservoirParameters) -> DfsProjection {
    let p = phases.apply_to(&SystemParams::default());
    let b = dfs_basis(&p);
    let a = b.states().map(|s| s.inner(psi));
    let w1 = a[0].norm_sqr();
    let w2 = a[1].norm_sqr();
    let inside = w1 + w2;
    let (r, mu) = if inside > 0.0 {
        let r = (w2 / inside).clamp(0.0, 1.0);
        if w2 == 0.0 {
            (0.0, TAU)
        } else {
            (r, a[1].arg() - if w1 > 0.0 { a[0].arg() } else { 0.0 })
        }
    } else {
        (0.0, TAU)
    };
    DfsProjection {
        amplitudes: a,
        coords: DfsCoordinates { r, mu: wrap_mu(mu) },
        residual: (a[2].norm_sqr() + a[3].norm_sqr()).max(0.0),
    }
}

/// `1 − |⟨psi|Ψ_r(coords, phases)⟩|²` (the frame is the identity at `t = 0`).
pub fn forward_residual(
    psi: &StateVector,
    phases: &ReservoirParameters,
    coords: &DfsCoordinates,
) -> f64 {
    let target = psi_r(coords, &phases.apply_to(&SystemParams::default()));
    (1.0 - psi.fidelity(&target)).max(0.0)
}

/// One Bell state with a representative drive-phase set and the protected
/// state it maps to.
#[derive(Clone, Debug)]
pub struct BellRow {
    pub label: &'static str,
    pub state: StateVector,
    pub phases: ReservoirParameters,
    pub coords: DfsCoordinates,
}

/// The four Bell states `Φ±`, `Ψ±` with their reference drive phases.
pub fn bell_table() -> Vec<BellRow> {
    let s = C64::from(FRAC_1_SQRT_2);
    let st = |a: [C64; 4]| StateVector::from_slice(HilbertSpace::two_ions(), &a).expect("4");
    let h = PI / 2.0;
    let ps = |a, b, c, d| ReservoirParameters {
        phi_a1: a,
        phi_b1: b,
        varphi_a: c,
        varphi_b: d,
    };
    let singlet = DfsCoordinates { r: 1.0, mu: TAU };
    vec![
        BellRow {
            label: "phi_plus",
            state: st([s, ZERO, ZERO, s]),
            phases: ps(h, h, 0.0, PI),
            coords: singlet,
        },
        BellRow {
            label: "phi_minus",
            state: st([s, ZERO, ZERO, -s]),
            phases: ps(0.0, 0.0, 0.0, PI),
            coords: singlet,
        },
        BellRow {
            label: "psi_plus",
            state: st([ZERO, s, s, ZERO]),
            phases: ps(-h, 0.0, PI, PI),
            coords: singlet,
        },
        BellRow {
            label: "psi_minus",
            state: st([ZERO, s, -s, ZERO]),
            phases: ps(-h, -h, PI, PI),
            coords: singlet,
        },
    ]
}

/// Closed-form phases for `m|ee⟩ + n e^{iθ}|gg⟩` with `m ≠ n`:
/// `φ^A_1 = φ^B_1 = (π − θ)/2`, `φ^{A,B} = π(1 + sgn(n − m))/2 ∓ arctan(2√(mn)/|m − n|)`.
pub fn superposition_phases(m: f64, n: f64, theta: f64) -> Result<ReservoirParameters> {
    if !(m >= 0.0 && n >= 0.0) || (m - n).abs() < 1e-12 {
        return Err(Error::InvalidParams(format!(
            "closed form needs m, n ≥ 0 and m ≠ n (m = {m}, n = {n})"
        )));
    }
    let phi1 = (PI - theta) / 2.0;
    let at = (2.0 * (m * n).sqrt() / (m - n).abs()).atan();
    let base = PI / 2.0 * (1.0 + (n - m).signum());
    Ok(ReservoirParameters {
        phi_a1: phi1,
        phi_b1: phi1,
        varphi_a: base - at,
        varphi_b: base + at,
    })
}

fn finish(psi: &StateVector, phases: ReservoirParameters, branch: InversionBranch) -> InversionResult {
    let params = phases.wrapped();
    let proj = project_onto_dfs(psi, &params);
    let mut coords = proj.coords;
    if coords.r < 1e-15 {
        coords = DfsCoordinates { r: 0.0, mu: TAU };
    }
    InversionResult {
        residual: forward_residual(psi, &params, &coords),
        params,
        coords,
        branch,
    }
}

const BELL_MATCH: f64 = 1e-12;
const SUPERPOSITION_LEAK: f64 = 1e-12;

/// Finds drive phases and `(r, μ)` such that `Ψ_r` equals `psi0` up to a
/// global phase. Tries the Bell table, then the `|ee⟩/|gg⟩` closed form, then
/// a multi-start Levenberg–Marquardt search over the four angles.
pub fn invert_parameters(psi0: &StateVector) -> Result<InversionResult> {
    ensure_two_ion(psi0)?;

    for row in bell_table() {
        if psi0.fidelity(&row.state) > 1.0 - BELL_MATCH {
            let res = finish(psi0, row.phases, InversionBranch::BellTable);
            if res.residual < ACCEPT_RESIDUAL {
                return Ok(res);
            }
        }
    }

    let c = psi0.amplitudes();
    if c[1].norm() < SUPERPOSITION_LEAK && c[2].norm() < SUPERPOSITION_LEAK {
        let (m, n) = (c[0].norm(), c[3].norm());
        let theta = if m > 0.0 && n > 0.0 { c[3].arg() - c[0].arg() } else { 0.0 };
        if let Ok(phases) = superposition_phases(m, n, theta) {
            let res = finish(psi0, phases, InversionBranch::SuperpositionClosedForm);
            if res.residual < ACCEPT_RESIDUAL {
                return Ok(res);
            }
        }
    }

    invert_numeric(psi0)
}

/// The multi-start search alone, without the Bell-table or closed-form branches.
pub fn invert_numeric(psi0: &StateVector) -> Result<InversionResult> {
    ensure_two_ion(psi0)?;
    let res = finish(psi0, numeric_search(psi0), InversionBranch::Numeric);
    if res.residual > NO_SOLUTION_RESIDUAL {
        return Err(Error::NoSolution(res.residual));
    }
    Ok(res)
}

/// Multi-start grid for the numeric branch.
pub const START_GRID: [f64; 3] = [-2.0 * PI / 3.0, 0.0, 2.0 * PI / 3.0];

fn residual_vector(psi: &StateVector, x: &[f64; 4]) -> Vector4<f64> {
    let a = project_onto_dfs(psi, &ReservoirParameters::from_array(*x)).amplitudes;
    Vector4::new(a[2].re, a[2].im, a[3].re, a[3].im)
}

fn numeric_search(psi: &StateVector) -> ReservoirParameters {
    let mut best = ([0.0; 4], f64::INFINITY);
    for &a in &START_GRID {
        for &b in &START_GRID {
            for &c in &START_GRID {
                for &d in &START_GRID {
                    let (x, cost) = levenberg_marquardt(psi, [a, b, c, d]);
                    if cost < best.1 {
                        best = (x, cost);
                    }
                    if best.1 < 1e-28 {
                        return ReservoirParameters::from_array(best.0);
                    }
                }
            }
        }
    }
    ReservoirParameters::from_array(best.0)
}

fn levenberg_marquardt(psi: &StateVector, x0: [f64; 4]) -> ([f64; 4], f64) {
    const FD_STEP: f64 = 1e-7;
    let mut x = x0;
    let mut f = residual_vector(psi, &x);
    let mut cost = f.norm_squared();
    let mut lambda = 1e-3;
    for _ in 0..200 {
        if cost < 1e-28 {
            break;
        }
        let mut jac = Matrix4::<f64>::zeros();
        for k in 0..4 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += FD_STEP;
            xm[k] -= FD_STEP;
            let col = (residual_vector(psi, &xp) - residual_vector(psi, &xm)) / (2.0 * FD_STEP);
            jac.set_column(k, &col);
        }
        let jtj = jac.transpose() * jac;
        let jtf = jac.transpose() * f;
        let mut improved = false;
        for _ in 0..20 {
            let mut a = jtj;
            for k in 0..4 {
                a[(k, k)] += lambda * (jtj[(k, k)] + 1e-12);
            }
            let Some(step) = a.lu().solve(&(-jtf)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [x[0] + step[0], x[1] + step[1], x[2] + step[2], x[3] + step[3]];
            let ft = residual_vector(psi, &trial);
            let ct = ft.norm_squared();
            if ct < cost {
                x = trial;
                f = ft;
                let gain = cost - ct;
                cost = ct;
                lambda = (lambda / 3.0).max(1e-12);
                improved = gain > 1e-32;
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            break;
        }
    }
    (x, cost)
}
