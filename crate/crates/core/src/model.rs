//! Two driven two-level ions coupled to a lossy cavity mode.
//!
//! Rates are in units of the ion–cavity coupling `g` (default `g = 1`). The
//! drive-1 field is resonant with the ions (`Δ^i_1 = 0`) and the drive-2 field
//! is detuned by `Δ^i_2 = −2Ω1`. The frame unitary is
//!
//! ```text
//! R^i(t) = exp(−i G1_i t) · exp(−i G2_i t)
//! G1_i   = Ω1 (e^{iφ^i_1} σ_eg + h.c.)
//! G2_i   = Ω2 [cos φ^i σ_z + i sin φ^i (e^{−iφ^i_1} σ_ge − e^{iφ^i_1} σ_eg)]
//! ```
//!
//! `Ω2` is the rate that appears in `G2`, i.e. the dressed-frame Rabi rate.
//! For the rotating-wave average of the interaction-picture Hamiltonian to
//! reproduce `G2` and the resonant cavity exchange, the bare drive-2 field
//! amplitude is `2Ω2` and the cavity detuning is `Δ = ω − ω0 = −2Ω2`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    expm_2x2_matrix, expm_hermitian, hermitian_deviation, max_abs, pauli, CMatrix, CVector,
    HilbertSpace, LinearOperator, StateVector, I, ONE, ZERO,
};

/// Which of the two ions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ion {
    A,
    B,
}

impl Ion {
    pub const BOTH: [Ion; 2] = [Ion::A, Ion::B];

    fn factor(self) -> usize {
        match self {
            Ion::A => 0,
            Ion::B => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub g: f64,
    pub kappa: f64,
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub phi_a1: f64,
    pub phi_b1: f64,
    pub varphi_a: f64,
    pub varphi_b: f64,
    pub n_max: usize,
}

impl Default for SystemParams {
    /// `Ω1 = 10Ω2 = 100g`, `g = 500γ`, `κ = 3g`, with the `|Ψ_E⟩` drive phases
    /// `φ^A = φ^B = π`, `φ^A_1 = π`, `φ^B_1 = 0`.
    fn default() -> Self {
        Self {
            g: 1.0,
            kappa: 3.0,
            gamma_a: 1.0 / 500.0,
            gamma_b: 1.0 / 500.0,
            omega1: 100.0,
            omega2: 10.0,
            phi_a1: PI,
            phi_b1: 0.0,
            varphi_a: PI,
            varphi_b: PI,
            n_max: 3,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("g", self.g),
            ("kappa", self.kappa),
            ("gamma_a", self.gamma_a),
            ("gamma_b", self.gamma_b),
            ("omega1", self.omega1),
            ("omega2", self.omega2),
            ("phi_a1", self.phi_a1),
            ("phi_b1", self.phi_b1),
            ("varphi_a", self.varphi_a),
            ("varphi_b", self.varphi_b),
        ];
        if let Some((name, v)) = named.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidParams(format!("{name} = {v} is not finite")));
        }
        for (name, v) in &named[..6] {
            if *v < 0.0 {
                return Err(Error::InvalidParams(format!("{name} = {v} must be >= 0")));
            }
        }
        if self.kappa == 0.0 {
            return Err(Error::InvalidParams("kappa must be > 0".into()));
        }
        if self.omega2 == 0.0 {
            return Err(Error::InvalidParams("omega2 must be > 0 (it sets the period)".into()));
        }
        if self.n_max < 1 {
            return Err(Error::InvalidParams("n_max must be >= 1".into()));
        }
        Ok(())
    }

    /// Cavity detuning `Δ = −2Ω2`.
    pub fn delta(&self) -> f64 {
        -2.0 * self.omega2
    }

    /// Engineered reservoir rate `Γ = g²/κ`.
    pub fn engineered_rate(&self) -> f64 {
        self.g * self.g / self.kappa
    }

    /// Period `π/Ω2` of the protected evolution.
    pub fn period(&self) -> f64 {
        PI / self.omega2
    }

    pub fn gamma(&self, ion: Ion) -> f64 {
        match ion {
            Ion::A => self.gamma_a,
            Ion::B => self.gamma_b,
        }
    }

    pub fn phi1(&self, ion: Ion) -> f64 {
        match ion {
            Ion::A => self.phi_a1,
            Ion::B => self.phi_b1,
        }
    }

    pub fn varphi(&self, ion: Ion) -> f64 {
        match ion {
            Ion::A => self.varphi_a,
            Ion::B => self.varphi_b,
        }
    }

    /// Drive-2 phase `φ^i_2 = φ^i_1 − φ^i`.
    pub fn phi2(&self, ion: Ion) -> f64 {
        self.phi1(ion) - self.varphi(ion)
    }

    /// `Ω1/Ω2` when it is an integer within `1e-9` relative tolerance.
    pub fn cycle_ratio(&self) -> Option<u64> {
        let ratio = self.omega1 / self.omega2;
        let n = ratio.round();
        ((ratio - n).abs() <= 1e-9 * ratio.max(1.0) && n >= 0.0).then_some(n as u64)
    }

    /// Largest rate used to size integrator steps.
    pub fn max_rate(&self) -> f64 {
        [
            self.omega1,
            self.omega2,
            self.g,
            self.kappa,
            self.engineered_rate(),
            self.gamma_a,
            self.gamma_b,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn hierarchy_report(&self) -> HierarchyReport {
        HierarchyReport::new(self)
    }
}

/// Ratio below which a "much greater than" condition is flagged.
pub const HIERARCHY_MIN_RATIO: f64 = 5.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HierarchyReport {
    pub omega1_over_omega2: f64,
    pub omega2_over_g: f64,
    pub engineered_over_gamma: f64,
    /// `φ^A_1 − φ^B_1` is not a multiple of π; the cavity-mediated coupling then
    /// carries a relative phase that `H2` does not contain.
    pub coupling_phase_mismatch: bool,
    pub warnings: Vec<String>,
}

impl HierarchyReport {
    fn new(p: &SystemParams) -> Self {
        let ratio = |a: f64, b: f64| if b == 0.0 { f64::INFINITY } else { a / b };
        let omega1_over_omega2 = ratio(p.omega1, p.omega2);
        let omega2_over_g = ratio(p.omega2, p.g);
        let engineered_over_gamma = ratio(p.engineered_rate(), p.gamma_a.max(p.gamma_b));
        let diff = (p.phi_a1 - p.phi_b1).rem_euclid(PI);
        let coupling_phase_mismatch = diff.min(PI - diff) > 1e-9;

        let mut warnings = Vec::new();
        if omega1_over_omega2 < HIERARCHY_MIN_RATIO {
            warnings.push(format!("Omega1/Omega2 = {omega1_over_omega2:.3} is not >> 1"));
        }
        if omega2_over_g < HIERARCHY_MIN_RATIO {
            warnings.push(format!("Omega2/g = {omega2_over_g:.3} is not >> 1"));
        }
        if engineered_over_gamma < HIERARCHY_MIN_RATIO {
            warnings.push(format!("Gamma/gamma = {engineered_over_gamma:.3} is not >> 1"));
        }
        if coupling_phase_mismatch {
            warnings.push("phi_a1 - phi_b1 is not a multiple of pi".into());
        }
        Self {
            omega1_over_omega2,
            omega2_over_g,
            engineered_over_gamma,
            coupling_phase_mismatch,
            warnings,
        }
    }

    pub fn is_clean(&self) -> bool {
        self.warnings.is_empty()
    }
}

/// Dressed single-ion states `|+⟩_i`, `|−⟩_i`.
#[derive(Clone, Debug)]
pub struct DressedBasis {
    pub plus_a: StateVector,
    pub minus_a: StateVector,
    pub plus_b: StateVector,
    pub minus_b: StateVector,
}

impl DressedBasis {
    pub fn new(params: &SystemParams) -> Self {
        let (plus_a, minus_a) = dressed_pair(params.phi_a1, params.varphi_a);
        let (plus_b, minus_b) = dressed_pair(params.phi_b1, params.varphi_b);
        Self {
            plus_a,
            minus_a,
            plus_b,
            minus_b,
        }
    }

    pub fn plus(&self, ion: Ion) -> &StateVector {
        match ion {
            Ion::A => &self.plus_a,
            Ion::B => &self.plus_b,
        }
    }

    pub fn minus(&self, ion: Ion) -> &StateVector {
        match ion {
            Ion::A => &self.minus_a,
            Ion::B => &self.minus_b,
        }
    }

    /// `|+⟩⟨−|` for one ion.
    pub fn raising(&self, ion: Ion) -> CMatrix {
        self.plus(ion).amplitudes() * self.minus(ion).amplitudes().adjoint()
    }
}

fn dressed_pair(phi1: f64, varphi: f64) -> (StateVector, StateVector) {
    let (c, s) = ((varphi / 2.0).cos(), (varphi / 2.0).sin());
    let plus = [C64::from(c), I * C64::from_polar(s, -phi1)];
    let minus = [I * C64::from_polar(s, phi1), C64::from(c)];
    (
        StateVector::from_slice(HilbertSpace::qubit(), &plus).expect("2 amplitudes"),
        StateVector::from_slice(HilbertSpace::qubit(), &minus).expect("2 amplitudes"),
    )
}

pub fn dressed_basis(params: &SystemParams) -> DressedBasis {
    DressedBasis::new(params)
}

#[derive(Clone, Debug)]
pub struct FrameGenerators {
    pub g1: [CMatrix; 2],
    pub g2: [CMatrix; 2],
}

impl FrameGenerators {
    pub fn new(params: &SystemParams) -> Self {
        let build = |ion: Ion| {
            let phi1 = params.phi1(ion);
            let vp = params.varphi(ion);
            let e = C64::from_polar(1.0, phi1);
            let raise = pauli::sigma_eg() * e;
            let g1 = (&raise + raise.adjoint()) * C64::from(params.omega1);
            let g2 = (pauli::sigma_z() * C64::from(vp.cos())
                + (pauli::sigma_ge() * e.conj() - pauli::sigma_eg() * e) * (I * vp.sin()))
                * C64::from(params.omega2);
            (g1, g2)
        };
        let (a1, a2) = build(Ion::A);
        let (b1, b2) = build(Ion::B);
        Self {
            g1: [a1, b1],
            g2: [a2, b2],
        }
    }
}

/// `R^i(t)` and `Ṙ^i(t)` for one ion.
pub(crate) fn ion_frame(params: &SystemParams, ion: Ion, t: f64) -> (CMatrix, CMatrix) {
    let gens = FrameGenerators::new(params);
    ion_frame_from(&gens, ion, t)
}

pub(crate) fn ion_frame_from(gens: &FrameGenerators, ion: Ion, t: f64) -> (CMatrix, CMatrix) {
    let k = ion.factor();
    let a = expm_2x2_matrix(&gens.g1[k], t);
    let b = expm_2x2_matrix(&gens.g2[k], t);
    let r = &a * &b;
    let rd = &gens.g1[k] * &r * (-I) + &a * &gens.g2[k] * &b * (-I);
    (r, rd)
}

/// Single-ion frame unitary `R^i(t)`.
pub fn ion_frame_unitary_at(params: &SystemParams, ion: Ion, t: f64) -> LinearOperator {
    LinearOperator::new(HilbertSpace::qubit(), ion_frame(params, ion, t).0).expect("2x2")
}

/// Single-ion derivative `Ṙ^i(t)`.
pub fn ion_frame_derivative_at(params: &SystemParams, ion: Ion, t: f64) -> LinearOperator {
    LinearOperator::new(HilbertSpace::qubit(), ion_frame(params, ion, t).1).expect("2x2")
}

/// `R(t) = R^A(t) ⊗ R^B(t)` on the two-ion space.
pub fn frame_unitary_at(params: &SystemParams, t: f64) -> LinearOperator {
    LinearOperator::new(HilbertSpace::two_ions(), frame_matrix(params, t)).expect("4x4")
}

pub(crate) fn frame_matrix(params: &SystemParams, t: f64) -> CMatrix {
    let gens = FrameGenerators::new(params);
    let (ra, _) = ion_frame_from(&gens, Ion::A, t);
    let (rb, _) = ion_frame_from(&gens, Ion::B, t);
    ra.kronecker(&rb)
}

/// `Ṙ(t) = Ṙ^A ⊗ R^B + R^A ⊗ Ṙ^B`.
pub fn frame_unitary_derivative_at(params: &SystemParams, t: f64) -> LinearOperator {
    let gens = FrameGenerators::new(params);
    let (ra, rda) = ion_frame_from(&gens, Ion::A, t);
    let (rb, rdb) = ion_frame_from(&gens, Ion::B, t);
    let m = rda.kronecker(&rb) + ra.kronecker(&rdb);
    LinearOperator::new(HilbertSpace::two_ions(), m).expect("4x4")
}

/// Embeds a single-ion operator on ion `ion` into the `[2, 2]` space.
pub(crate) fn on_ion(op: &CMatrix, ion: Ion) -> CMatrix {
    match ion {
        Ion::A => op.kronecker(&pauli::identity()),
        Ion::B => pauli::identity().kronecker(op),
    }
}

/// Cavity annihilation operator on `n_max + 1` Fock states.
pub fn annihilation(n_max: usize) -> CMatrix {
    let n = n_max + 1;
    CMatrix::from_fn(n, n, |i, j| {
        if j == i + 1 {
            C64::from((j as f64).sqrt())
        } else {
            ZERO
        }
    })
}

/// Interaction-picture Hamiltonian on `[2, 2, n_max+1]`:
///
/// ```text
/// H1(t) = Σ_i [Ω1 e^{iφ^i_1} σ^i_eg + 2Ω2 e^{i(φ^i_2 + 2Ω1 t)} σ^i_eg + h.c.]
///       + [g e^{−iΔt} a (σ^A_eg + σ^B_eg) + h.c.]
/// ```
pub fn build_h1(params: &SystemParams, t: f64) -> LinearOperator {
    let nc = params.n_max + 1;
    let ic = CMatrix::identity(nc, nc);
    let mut ions = CMatrix::zeros(4, 4);
    for ion in Ion::BOTH {
        let drive = pauli::sigma_eg()
            * (C64::from_polar(params.omega1, params.phi1(ion))
                + C64::from_polar(2.0 * params.omega2, params.phi2(ion) + 2.0 * params.omega1 * t));
        ions += on_ion(&(&drive + drive.adjoint()), ion);
    }
    let raise = on_ion(&pauli::sigma_eg(), Ion::A) + on_ion(&pauli::sigma_eg(), Ion::B);
    let coupling = raise.kronecker(&annihilation(params.n_max))
        * C64::from_polar(params.g, -params.delta() * t);
    let h = ions.kronecker(&ic) + &coupling + coupling.adjoint();
    LinearOperator::new(HilbertSpace::ions_and_cavity(params.n_max), h).expect("square")
}

/// Effective Hamiltonian `H2 = (g/2)[a†(σ^A_{+-} + σ^B_{+-}) + h.c.]`.
pub fn build_h2(params: &SystemParams) -> LinearOperator {
    let j = jump_matrix(params);
    let a = annihilation(params.n_max);
    let term = j.kronecker(&a.adjoint()) * C64::from(params.g / 2.0);
    LinearOperator::new(
        HilbertSpace::ions_and_cavity(params.n_max),
        &term + term.adjoint(),
    )
    .expect("square")
}

pub(crate) fn jump_matrix(params: &SystemParams) -> CMatrix {
    let basis = DressedBasis::new(params);
    on_ion(&basis.raising(Ion::A), Ion::A) + on_ion(&basis.raising(Ion::B), Ion::B)
}

/// Engineered jump operator `J = σ^A_{+-} + σ^B_{+-}` on `[2, 2]`.
pub fn jump_operator(params: &SystemParams) -> LinearOperator {
    LinearOperator::new(HilbertSpace::two_ions(), jump_matrix(params)).expect("4x4")
}

/// `σ′^i(t) = R(t)† σ^i_ge R(t)` for both ions, paired with `γ^i`.
pub fn transformed_decay_ops(params: &SystemParams, t: f64) -> Vec<(f64, LinearOperator)> {
    let gens = FrameGenerators::new(params);
    Ion::BOTH
        .iter()
        .map(|&ion| {
            let m = transformed_decay_matrix(&gens, ion, t);
            (
                params.gamma(ion),
                LinearOperator::new(HilbertSpace::two_ions(), m).expect("4x4"),
            )
        })
        .collect()
}

/// The other ion's frame factor cancels, so only `R^i` is needed.
pub(crate) fn transformed_decay_matrix(gens: &FrameGenerators, ion: Ion, t: f64) -> CMatrix {
    let (r, _) = ion_frame_from(gens, ion, t);
    on_ion(&(r.adjoint() * pauli::sigma_ge() * &r), ion)
}

/// `H̃(t) − H2` with `H̃ = R†H1R − iR†Ṙ`, on `[2, 2, n_max+1]`.
pub fn frame_residual(params: &SystemParams, t: f64) -> LinearOperator {
    let nc = params.n_max + 1;
    let ic = CMatrix::identity(nc, nc);
    let r = frame_matrix(params, t).kronecker(&ic);
    let rd = frame_unitary_derivative_at(params, t)
        .into_matrix()
        .kronecker(&ic);
    let h1 = build_h1(params, t).into_matrix();
    let h2 = build_h2(params).into_matrix();
    let tilde = r.adjoint() * h1 * &r - r.adjoint() * rd * I;
    LinearOperator::new(HilbertSpace::ions_and_cavity(params.n_max), tilde - h2).expect("square")
}

/// Max-abs entry of the residual averaged over one period with `samples`
/// uniformly spaced points (left Riemann sum, exact for trigonometric
/// polynomials whose frequencies are multiples of `2Ω2`).
pub fn frame_residual_average(params: &SystemParams, samples: usize) -> f64 {
    let tau = params.period();
    let dim = 4 * (params.n_max + 1);
    let mut acc = CMatrix::zeros(dim, dim);
    for k in 0..samples {
        let t = tau * k as f64 / samples as f64;
        acc += frame_residual(params, t).matrix();
    }
    max_abs(&acc.unscale(samples as f64))
}

/// One-period effective-Hamiltonian deviation `‖U(τ) − exp(−iH2τ)‖_max / τ`,
/// where `U` is the exact propagator of `H̃(t)` over `τ = π/Ω2` (computed as
/// `R(τ)† U_H1(τ)` with `U_H1` integrated by RK4 at `safety/max_rate` steps).
/// Its leading term is the time-averaged frame residual; higher Magnus orders
/// carry the `g²/Ω2` and `Ω2²/Ω1` corrections.
pub fn effective_hamiltonian_deviation(params: &SystemParams, safety: f64) -> Result<f64> {
    let tau = params.period();
    let rate = params.max_rate().max(1.0 / tau);
    let steps = (tau * rate / safety).ceil().max(1.0) as usize;
    let h = tau / steps as f64;
    let dim = 4 * (params.n_max + 1);
    let rhs = |t: f64, u: &CMatrix| build_h1(params, t).into_matrix() * u * (-I);
    let mut u = CMatrix::identity(dim, dim);
    for k in 0..steps {
        let t = k as f64 * h;
        let k1 = rhs(t, &u);
        let k2 = rhs(t + h / 2.0, &(&u + &k1 * C64::from(h / 2.0)));
        let k3 = rhs(t + h / 2.0, &(&u + &k2 * C64::from(h / 2.0)));
        let k4 = rhs(t + h, &(&u + &k3 * C64::from(h)));
        u += (k1 + k2 * C64::from(2.0) + k3 * C64::from(2.0) + k4) * C64::from(h / 6.0);
    }
    let nc = params.n_max + 1;
    let r_tau = frame_matrix(params, tau).kronecker(&CMatrix::identity(nc, nc));
    let u_frame = r_tau.adjoint() * u;
    let target = expm_hermitian(build_h2(params).matrix(), tau)?;
    Ok(max_abs(&(u_frame - target)) / tau)
}

/// Computational basis state of two ions from per-ion labels (`true` = excited).
pub fn ion_basis_state(a_excited: bool, b_excited: bool) -> StateVector {
    let d = |x: bool| if x { 0 } else { 1 };
    StateVector::basis(HilbertSpace::two_ions(), &[d(a_excited), d(b_excited)]).expect("valid")
}

/// Vacuum of the cavity mode.
pub fn cavity_vacuum(n_max: usize) -> StateVector {
    let mut v = CVector::zeros(n_max + 1);
    v[0] = ONE;
    StateVector::new(HilbertSpace::new(vec![n_max + 1]).expect("n_max >= 1"), v).expect("dims")
}

/// `‖A − A†‖_max`; re-exported for callers validating model operators.
pub fn hermiticity_defect(op: &LinearOperator) -> f64 {
    hermitian_deviation(op.matrix())
}
