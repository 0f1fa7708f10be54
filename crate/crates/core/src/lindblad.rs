//! Lindblad master equations and a fixed-step RK4 integrator.
//!
//! `ρ̇ = −i[H(t), ρ] + Σ_k γ_k D[L_k(t)]ρ`, `D[L]ρ = LρL† − ½{L†L, ρ}`.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{
    hermitian_deviation, CMatrix, DensityOperator, HilbertSpace, LinearOperator, StateVector, I,
};
use crate::model::{
    self, annihilation, build_h1, build_h2, jump_matrix, on_ion, transformed_decay_matrix,
    FrameGenerators, Ion, SystemParams,
};
use crate::hilbert::pauli;

/// Operator that may depend on time.
#[derive(Clone)]
pub enum TimeOperator {
    Constant(CMatrix),
    Timed(Arc<dyn Fn(f64) -> CMatrix + Send + Sync>),
}

impl TimeOperator {
    pub fn timed(f: impl Fn(f64) -> CMatrix + Send + Sync + 'static) -> Self {
        TimeOperator::Timed(Arc::new(f))
    }

    pub fn at(&self, t: f64) -> CMatrix {
        match self {
            TimeOperator::Constant(m) => m.clone(),
            TimeOperator::Timed(f) => f(t),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, TimeOperator::Constant(_))
    }
}

impl std::fmt::Debug for TimeOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TimeOperator::Constant(m) => write!(f, "Constant({}x{})", m.nrows(), m.ncols()),
            TimeOperator::Timed(_) => write!(f, "Timed(..)"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Channel {
    pub label: String,
    pub rate: f64,
    pub jump: TimeOperator,
}

/// A Hamiltonian of time plus dissipative channels.
#[derive(Clone, Debug)]
pub struct MasterEquationSpec {
    name: String,
    space: HilbertSpace,
    hamiltonian: Option<TimeOperator>,
    channels: Vec<Channel>,
    characteristic_rate: f64,
    params_digest: String,
}

const HERMITIAN_SAMPLE_TIMES: [f64; 4] = [0.0, 0.0371, 0.413, 1.29];

impl MasterEquationSpec {
    pub fn new(
        name: impl Into<String>,
        space: HilbertSpace,
        hamiltonian: Option<TimeOperator>,
        channels: Vec<Channel>,
        characteristic_rate: f64,
    ) -> Result<Self> {
        let n = space.dim();
        if let Some(c) = channels.iter().find(|c| !(c.rate >= 0.0 && c.rate.is_finite())) {
            return Err(Error::InvalidParams(format!(
                "channel {} has rate {}",
                c.label, c.rate
            )));
        }
        for &t in &HERMITIAN_SAMPLE_TIMES {
            if let Some(h) = &hamiltonian {
                let m = h.at(t);
                if m.nrows() != n || m.ncols() != n {
                    return Err(Error::DimensionMismatch("Hamiltonian size".into()));
                }
                let dev = hermitian_deviation(&m);
                if dev > 1e-10 {
                    return Err(Error::NotHermitian(dev));
                }
            }
            for c in &channels {
                let m = c.jump.at(t);
                if m.nrows() != n || m.ncols() != n {
                    return Err(Error::DimensionMismatch(format!("jump {} size", c.label)));
                }
            }
        }
        Ok(Self {
            name: name.into(),
            space,
            hamiltonian,
            channels,
            characteristic_rate,
            params_digest: String::new(),
        })
    }

    fn with_digest(mut self, params: &SystemParams) -> Self {
        self.params_digest = params_digest(params);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn hamiltonian(&self) -> Option<&TimeOperator> {
        self.hamiltonian.as_ref()
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn characteristic_rate(&self) -> f64 {
        self.characteristic_rate
    }

    pub fn params_digest(&self) -> &str {
        &self.params_digest
    }

    /// `dρ/dt` at time `t`.
    pub fn rhs(&self, t: f64, rho: &CMatrix) -> CMatrix {
        let n = rho.nrows();
        // H_eff = H − (i/2) Σ γ L†L, then ρ̇ = −i(H_eff ρ − ρ H_eff†) + Σ γ LρL†
        let mut heff = match &self.hamiltonian {
            Some(h) => h.at(t),
            None => CMatrix::zeros(n, n),
        };
        let mut out = CMatrix::zeros(n, n);
        for c in self.channels.iter().filter(|c| c.rate > 0.0) {
            let l = c.jump.at(t);
            let ld = l.adjoint();
            heff -= (&ld * &l) * C64::new(0.0, 0.5 * c.rate);
            out += (&l * rho * &ld) * C64::from(c.rate);
        }
        let a = &heff * rho;
        out += (a.adjoint() - &a) * I;
        // a.adjoint() = ρ H_eff†
        out
    }
}

/// FNV-1a over the JSON form of the parameters.
pub fn params_digest(params: &SystemParams) -> String {
    let json = serde_json::to_string(params).unwrap_or_default();
    let mut h: u64 = 0xcbf29ce484222325;
    for b in json.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

/// `D[A]ρ = AρA† − ½{A†A, ρ}`.
pub fn dissipator(jump: &LinearOperator, rho: &DensityOperator) -> Result<CMatrix> {
    if jump.space() != rho.space() {
        return Err(Error::DimensionMismatch("jump and state spaces differ".into()));
    }
    Ok(dissipator_matrix(jump.matrix(), rho.matrix()))
}

pub(crate) fn dissipator_matrix(a: &CMatrix, rho: &CMatrix) -> CMatrix {
    let ad = a.adjoint();
    let ada = &ad * a;
    a * rho * &ad - (&ada * rho + rho * &ada) * C64::from(0.5)
}

fn on_ions_with_cavity(op: &CMatrix, n_max: usize) -> CMatrix {
    op.kronecker(&CMatrix::identity(n_max + 1, n_max + 1))
}

/// Full interaction-picture equation with cavity decay `κ` and ionic decay `γ^i`.
pub fn eq3_spec(params: &SystemParams) -> Result<MasterEquationSpec> {
    let p = params.clone();
    let nm = p.n_max;
    let a = CMatrix::identity(4, 4).kronecker(&annihilation(nm));
    let mut channels = vec![Channel {
        label: "kappa a".into(),
        rate: p.kappa,
        jump: TimeOperator::Constant(a),
    }];
    for ion in Ion::BOTH {
        channels.push(Channel {
            label: format!("gamma_{ion:?} sigma_ge").to_lowercase(),
            rate: p.gamma(ion),
            jump: TimeOperator::Constant(on_ions_with_cavity(&on_ion(&pauli::sigma_ge(), ion), nm)),
        });
    }
    let hp = p.clone();
    let h = TimeOperator::timed(move |t| build_h1(&hp, t).into_matrix());
    Ok(MasterEquationSpec::new(
        "eq3",
        HilbertSpace::ions_and_cavity(nm),
        Some(h),
        channels,
        p.max_rate(),
    )?
    .with_digest(params))
}

fn transformed_channels(p: &SystemParams, n_max: Option<usize>) -> Vec<Channel> {
    let gens = Arc::new(FrameGenerators::new(p));
    Ion::BOTH
        .iter()
        .map(|&ion| {
            let gens = Arc::clone(&gens);
            Channel {
                label: format!("gamma_{ion:?} sigma'").to_lowercase(),
                rate: p.gamma(ion),
                jump: TimeOperator::timed(move |t| {
                    let m = transformed_decay_matrix(&gens, ion, t);
                    match n_max {
                        Some(nm) => on_ions_with_cavity(&m, nm),
                        None => m,
                    }
                }),
            }
        })
        .collect()
}

/// Rotated-frame equation: `H2`, cavity decay, and rotated ionic decay `σ′^i(t)`.
pub fn eq5_spec(params: &SystemParams) -> Result<MasterEquationSpec> {
    let p = params.clone();
    let nm = p.n_max;
    let a = CMatrix::identity(4, 4).kronecker(&annihilation(nm));
    let mut channels = vec![Channel {
        label: "kappa a".into(),
        rate: p.kappa,
        jump: TimeOperator::Constant(a),
    }];
    channels.extend(transformed_channels(&p, Some(nm)));
    Ok(MasterEquationSpec::new(
        "eq5",
        HilbertSpace::ions_and_cavity(nm),
        Some(TimeOperator::Constant(build_h2(&p).into_matrix())),
        channels,
        p.max_rate(),
    )?
    .with_digest(params))
}

/// Ion-only equation after eliminating the cavity: `Γ D[J] + Σ γ^i D[σ′^i(t)]`.
pub fn eq6_spec(params: &SystemParams) -> Result<MasterEquationSpec> {
    let p = params.clone();
    let mut channels = vec![Channel {
        label: "Gamma J".into(),
        rate: p.engineered_rate(),
        jump: TimeOperator::Constant(jump_matrix(&p)),
    }];
    channels.extend(transformed_channels(&p, None));
    Ok(MasterEquationSpec::new("eq6", HilbertSpace::two_ions(), None, channels, p.max_rate())?
        .with_digest(params))
}

/// Ideal engineered reservoir: `Γ D[J]` only.
pub fn eq7_spec(params: &SystemParams) -> Result<MasterEquationSpec> {
    let p = params.clone();
    let channels = vec![Channel {
        label: "Gamma J".into(),
        rate: p.engineered_rate(),
        jump: TimeOperator::Constant(jump_matrix(&p)),
    }];
    Ok(MasterEquationSpec::new("eq7", HilbertSpace::two_ions(), None, channels, p.max_rate())?
        .with_digest(params))
}

#[derive(Clone, Debug)]
pub struct IntegrateOptions {
    /// Step size is `safety / max(rate, 1/t_end)`.
    pub safety: f64,
    /// Number of equal output intervals over `[0, t_end]`.
    pub samples: usize,
    /// Eigenvalue check at every sample (costs one eigensolve per sample).
    pub check_positivity: bool,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            safety: 0.02,
            samples: 100,
            check_positivity: true,
        }
    }
}

pub const TRACE_DRIFT_LIMIT: f64 = 1e-6;
pub const NEGATIVITY_LIMIT: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub spec_name: String,
    pub params_digest: String,
    pub times: Vec<f64>,
    pub states: Vec<DensityOperator>,
    pub steps: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &DensityOperator {
        self.states.last().expect("trajectory has at least the initial state")
    }
}

/// Step count, as a multiple of `samples`, for a run of length `t_end`.
pub fn step_count(rate: f64, t_end: f64, opts: &IntegrateOptions) -> usize {
    let rate = rate.max(1.0 / t_end);
    let dt_max = opts.safety / rate;
    let samples = opts.samples.max(1);
    let per_sample = (t_end / dt_max / samples as f64).ceil().max(1.0) as usize;
    per_sample * samples
}

/// Classical RK4 on the density matrix with channel operators evaluated at
/// stage times. Samples are checked for trace drift and negativity.
pub fn integrate(
    spec: &MasterEquationSpec,
    rho0: &DensityOperator,
    t_end: f64,
    opts: &IntegrateOptions,
    mut observer: Option<&mut dyn FnMut(f64, &DensityOperator)>,
) -> Result<Trajectory> {
    if rho0.space() != spec.space() {
        return Err(Error::DimensionMismatch(format!(
            "initial state on {:?}, equation on {:?}",
            rho0.space().factor_dims(),
            spec.space().factor_dims()
        )));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParams(format!("t_end = {t_end}")));
    }
    rho0.validate(1e-9, 1e-9, 1e-9)?;

    let samples = opts.samples.max(1);
    let steps = step_count(spec.characteristic_rate(), t_end, opts);
    let stride = steps / samples;
    let h = t_end / steps as f64;
    let half = C64::from(h / 2.0);
    let full = C64::from(h);
    let sixth = C64::from(h / 6.0);
    let two = C64::from(2.0);

    let space = spec.space().clone();
    let mut rho = rho0.matrix().clone();
    let mut times = vec![0.0];
    let mut states = vec![rho0.clone()];
    if let Some(obs) = observer.as_mut() {
        obs(0.0, rho0);
    }

    for k in 0..steps {
        let t = k as f64 * h;
        let k1 = spec.rhs(t, &rho);
        let k2 = spec.rhs(t + h / 2.0, &(&rho + &k1 * half));
        let k3 = spec.rhs(t + h / 2.0, &(&rho + &k2 * half));
        let k4 = spec.rhs(t + h, &(&rho + &k3 * full));
        rho += (k1 + k2 * two + k3 * two + k4) * sixth;

        if (k + 1) % stride == 0 {
            let t_next = if k + 1 == steps {
                t_end
            } else {
                (k + 1) as f64 * h
            };
            let state = DensityOperator::new_unchecked(space.clone(), rho.clone());
            check_sample(&state, t_next, opts.check_positivity)?;
            if let Some(obs) = observer.as_mut() {
                obs(t_next, &state);
            }
            times.push(t_next);
            states.push(state);
        }
    }
    Ok(Trajectory {
        spec_name: spec.name().to_string(),
        params_digest: spec.params_digest().to_string(),
        times,
        states,
        steps,
    })
}

fn check_sample(state: &DensityOperator, time: f64, positivity: bool) -> Result<()> {
    let m = state.matrix();
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::IntegrationFailure {
            time,
            reason: "non-finite entries".into(),
        });
    }
    let drift = (state.trace() - 1.0).abs();
    if drift > TRACE_DRIFT_LIMIT {
        return Err(Error::IntegrationFailure {
            time,
            reason: format!("trace drift {drift:.3e}"),
        });
    }
    let herm = hermitian_deviation(m);
    if herm > TRACE_DRIFT_LIMIT {
        return Err(Error::IntegrationFailure {
            time,
            reason: format!("Hermiticity defect {herm:.3e}"),
        });
    }
    if positivity {
        let lo = state.min_eigenvalue()?;
        if lo < -NEGATIVITY_LIMIT {
            return Err(Error::IntegrationFailure {
                time,
                reason: format!("negative eigenvalue {lo:.3e}"),
            });
        }
    }
    Ok(())
}

/// `R(t)|ψ0⟩` with the closed-form frame unitary.
pub fn propagate_pure(params: &SystemParams, psi0: &StateVector, t: f64) -> Result<StateVector> {
    if psi0.space() != &HilbertSpace::two_ions() {
        return Err(Error::DimensionMismatch("pure propagation acts on two ions".into()));
    }
    psi0.ensure_normalized()?;
    model::frame_unitary_at(params, t).apply(psi0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dfs::{dfs_basis, DfsBasis};
    use crate::hilbert::{max_abs, partial_trace, CVector, ONE, ZERO};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_density(rng: &mut ChaCha8Rng, n: usize) -> DensityOperator {
        let a = CMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let m = &a * a.adjoint();
        let tr = m.trace();
        DensityOperator::new(HilbertSpace::new(vec![n]).unwrap(), m / tr).unwrap()
    }

    fn quick() -> IntegrateOptions {
        IntegrateOptions {
            samples: 10,
            ..Default::default()
        }
    }

    #[test]
    fn dissipator_traceless_and_known_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let rho = random_density(&mut rng, 4);
            let a = CMatrix::from_fn(4, 4, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let d = dissipator(&LinearOperator::new(rho.space().clone(), a).unwrap(), &rho).unwrap();
            assert!(d.trace().norm() < 1e-12);
            assert!(hermitian_deviation(&d) < 1e-12);
        }
        let e = StateVector::basis(HilbertSpace::qubit(), &[0]).unwrap().projector();
        let lower = LinearOperator::new(HilbertSpace::qubit(), pauli::sigma_ge()).unwrap();
        let d = dissipator(&lower, &e).unwrap();
        let expected = CMatrix::from_row_slice(2, 2, &[-ONE, ZERO, ZERO, ONE]);
        assert!(max_abs(&(d - expected)) < 1e-15);
        assert!(dissipator(&lower, &random_density(&mut rng, 4)).is_err());
    }

    #[test]
    fn dissipator_vanishes_on_antisymmetric_state() {
        let p = SystemParams::default();
        let DfsBasis { two, .. } = dfs_basis(&p);
        let d = dissipator(&model::jump_operator(&p), &two.projector()).unwrap();
        assert!(max_abs(&d) < 1e-14);
    }

    #[test]
    fn spec_structures() {
        let p = SystemParams::default();
        let s7 = eq7_spec(&p).unwrap();
        assert!(s7.hamiltonian().is_none());
        assert_eq!(s7.channels().len(), 1);

        let s6 = eq6_spec(&p).unwrap();
        let rates: Vec<f64> = s6.channels().iter().map(|c| c.rate).collect();
        assert_eq!(rates, vec![p.g * p.g / p.kappa, p.gamma_a, p.gamma_b]);
        assert!(s6.hamiltonian().is_none());
        assert!(!s6.channels()[1].jump.is_constant());

        let s3 = eq3_spec(&p).unwrap();
        let rates: Vec<f64> = s3.channels().iter().map(|c| c.rate).collect();
        assert_eq!(rates, vec![p.kappa, p.gamma_a, p.gamma_b]);
        let h = s3.hamiltonian().unwrap().at(0.21);
        assert!(max_abs(&(h - build_h1(&p, 0.21).into_matrix())) < 1e-15);
        assert_eq!(s3.space().dim(), 16);

        let s5 = eq5_spec(&p).unwrap();
        assert!(s5.hamiltonian().unwrap().is_constant());
        assert_eq!(s5.channels().len(), 3);
        assert_eq!(s5.params_digest(), params_digest(&p));
    }

    #[test]
    fn dfs_state_is_stationary_under_eq7() {
        let p = SystemParams::default();
        let basis = dfs_basis(&p);
        let rho0 = basis.two.projector();
        let t_end = 10.0 / p.engineered_rate();
        let traj = integrate(&eq7_spec(&p).unwrap(), &rho0, t_end, &quick(), None).unwrap();
        assert!(max_abs(&(traj.final_state().matrix() - rho0.matrix())) < 1e-8);
        assert_eq!(traj.times.len(), 11);
        assert_abs_diff_eq!(*traj.times.last().unwrap(), t_end);
    }

    #[test]
    fn symmetric_state_decays_to_plus_plus() {
        let p = SystemParams::default();
        let basis = dfs_basis(&p);
        let t_end = 10.0 / p.engineered_rate();
        let traj = integrate(&eq7_spec(&p).unwrap(), &basis.three.projector(), t_end, &quick(), None).unwrap();
        let f = traj.final_state().expectation_pure(&basis.one);
        assert!(f > 0.999, "{f}");
        // |3⟩ → |4⟩ → |1⟩ ladder at rate 2Γ: P1 = 1 − e^{−2Γt}(1 + 2Γt)
        assert_abs_diff_eq!(f, 1.0 - (-20.0f64).exp() * 21.0, epsilon = 1e-8);
    }

    #[test]
    fn eq6_without_spontaneous_emission_equals_eq7() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = SystemParams {
            gamma_a: 0.0,
            gamma_b: 0.0,
            phi_a1: rng.gen_range(-PI..PI),
            varphi_b: rng.gen_range(-PI..PI),
            ..Default::default()
        };
        let rho0 = random_density(&mut rng, 4);
        let rho0 = DensityOperator::new(HilbertSpace::two_ions(), rho0.into_matrix()).unwrap();
        let opts = quick();
        let a = integrate(&eq6_spec(&p).unwrap(), &rho0, 2.0, &opts, None).unwrap();
        let b = integrate(&eq7_spec(&p).unwrap(), &rho0, 2.0, &opts, None).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            assert!(max_abs(&(x.matrix() - y.matrix())) < 1e-9);
        }
    }

    #[test]
    fn step_halving_converges() {
        let p = SystemParams { gamma_a: 0.05, gamma_b: 0.03, ..Default::default() };
        let rho0 = crate::dfs::psi_e_state_at(0.0).projector();
        let spec = eq6_spec(&p).unwrap();
        let coarse = integrate(&spec, &rho0, 1.0, &quick(), None).unwrap();
        let fine_opts = IntegrateOptions { safety: 0.01, ..quick() };
        let fine = integrate(&spec, &rho0, 1.0, &fine_opts, None).unwrap();
        assert_eq!(fine.steps, 2 * coarse.steps);
        let delta = max_abs(&(coarse.final_state().matrix() - fine.final_state().matrix()));
        assert!(delta < 1e-8, "{delta}");
    }

    #[test]
    fn observer_sees_every_sample() {
        let p = SystemParams::default();
        let mut seen = Vec::new();
        let mut obs = |t: f64, _: &DensityOperator| seen.push(t);
        let rho0 = dfs_basis(&p).one.projector();
        integrate(&eq7_spec(&p).unwrap(), &rho0, 0.5, &quick(), Some(&mut obs)).unwrap();
        assert_eq!(seen.len(), 11);
    }

    #[test]
    fn integrate_rejects_bad_input() {
        let p = SystemParams::default();
        let spec = eq7_spec(&p).unwrap();
        let wrong = DensityOperator::maximally_mixed(HilbertSpace::qubit());
        assert!(integrate(&spec, &wrong, 1.0, &quick(), None).is_err());
        let ok = DensityOperator::maximally_mixed(HilbertSpace::two_ions());
        assert!(integrate(&spec, &ok, -1.0, &quick(), None).is_err());
    }

    #[test]
    fn unstable_step_is_reported() {
        let p = SystemParams::default();
        let spec = eq7_spec(&p).unwrap();
        let rho0 = dfs_basis(&p).three.projector();
        // a step far beyond the RK4 stability region for rate Γ blows up
        let opts = IntegrateOptions { safety: 1e5, samples: 1, check_positivity: true };
        let err = integrate(&spec, &rho0, 3000.0, &opts, None).unwrap_err();
        assert!(matches!(err, Error::IntegrationFailure { .. }), "{err}");
    }

    #[test]
    fn eq5_keeps_dark_state_dark() {
        let p = SystemParams { gamma_a: 0.0, gamma_b: 0.0, n_max: 2, ..Default::default() };
        let basis = dfs_basis(&p);
        let vac = model::cavity_vacuum(p.n_max);
        let rho0 = basis.two.tensor(&vac).projector();
        let traj = integrate(&eq5_spec(&p).unwrap(), &rho0, 3.0, &quick(), None).unwrap();
        let ions = partial_trace(traj.final_state(), &[0, 1]).unwrap();
        assert!(max_abs(&(ions.matrix() - basis.two.projector().matrix())) < 1e-10);
    }

    #[test]
    fn propagate_pure_basics() {
        let p = SystemParams::default();
        let psi = crate::dfs::psi_e_state_at(0.0);
        assert_eq!(propagate_pure(&p, &psi, 0.0).unwrap(), psi);
        let out = propagate_pure(&p, &psi, 0.77).unwrap();
        assert_abs_diff_eq!(out.norm(), 1.0, epsilon = 1e-12);
        let unnormalized = StateVector::new(
            HilbertSpace::two_ions(),
            CVector::from_column_slice(&[ONE, ONE, ZERO, ZERO]),
        )
        .unwrap();
        assert!(propagate_pure(&p, &unnormalized, 1.0).is_err());
    }
}
