//! Acceptance criteria 1–8. Runs without the libtest harness so every
//! criterion prints one PASS/FAIL line; exits non-zero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reservoir_dfs::cli::{
    check_adiabatic_trend, check_equivalence, check_frame_average, check_hierarchy_trend,
    check_step_halving, Check, Scenario,
};
use reservoir_dfs::dfs::{
    bell_table, coefficients_at, dfs_basis, forward_residual, invert_numeric, psi_e_initial,
    psi_e_reservoir, psi_e_state_with, psi_r, DfsCoordinates, ReservoirParameters,
};
use reservoir_dfs::hilbert::{hermitian_deviation, CMatrix, DensityOperator, HilbertSpace, StateVector};
use reservoir_dfs::lindblad::{
    dissipator, eq3_spec, eq5_spec, eq6_spec, eq7_spec, integrate, IntegrateOptions, MasterEquationSpec,
};
use reservoir_dfs::model::{cavity_vacuum, frame_unitary_at, jump_operator, Ion, SystemParams};
use reservoir_dfs::observables::{
    angle_distance, concurrence, concurrence_pure, fidelity_curve, global_geometric_phase,
    phase_vs_entanglement_sweep, subsystem_geometric_phase, subsystem_phase_closed_form, PhaseMethod,
    DEFAULT_PANELS,
};
use reservoir_dfs::Result;

const SAFETY: f64 = 0.02;
const SEED: u64 = 20_240_601;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

fn fig1_opts(safety: f64) -> IntegrateOptions {
    IntegrateOptions {
        safety,
        samples: 1000,
        check_positivity: true,
    }
}

fn criterion_1() -> Result<Outcome> {
    let start = Instant::now();
    let p = SystemParams::default();
    let c = fidelity_curve(&p, &psi_e_initial(), 100.0, &fig1_opts(SAFETY))?;
    let elapsed = start.elapsed().as_secs_f64();
    let f0 = c.fidelity[0];
    let fend = *c.fidelity.last().unwrap();
    let envelope: Vec<f64> = c
        .fidelity
        .chunks(10)
        .map(|w| w.iter().copied().fold(f64::MIN, f64::max))
        .collect();
    let decays = envelope.windows(2).all(|w| w[1] <= w[0]);
    let ok = (0.960..=0.975).contains(&fend) && (f0 - 1.0).abs() < 1e-12 && decays && elapsed < 300.0;
    outcome(
        ok,
        format!(
            "F(0) = {f0:.12}, F(100 periods) = {fend:.6} (window [0.960, 0.975]), \
             per-period envelope non-increasing: {decays}, runtime {elapsed:.1}s"
        ),
    )
}

fn criterion_2() -> Result<Outcome> {
    let p = SystemParams::default();
    let mut worst: f64 = 0.0;
    for r in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let g = global_geometric_phase(&DfsCoordinates::new(r, 2.0 * PI)?, &p, DEFAULT_PANELS)?;
        worst = worst.max((g.raw - 2.0 * PI * (1.0 - r)).abs());
    }
    outcome(worst < 1e-6, format!("max |quadrature - 2pi(1-r)| = {worst:.3e} (limit 1e-6)"))
}

fn criterion_3() -> Result<Outcome> {
    let p = Scenario::Fig2.default_params();
    let grid: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
    let rows = phase_vs_entanglement_sweep(&p, &grid, 2.0 * PI, DEFAULT_PANELS)?;
    let worst = rows[..100]
        .iter()
        .map(|row| angle_distance(row.beta_sub_quadrature, row.beta_sub_closed))
        .fold(0.0, f64::max);
    let at_one = rows[100].beta_sub_quadrature.abs() < 1e-12 && rows[100].beta_sub_closed == 0.0;
    let closed: Vec<f64> = rows.iter().map(|r| r.beta_sub_closed).collect();
    let quad: Vec<f64> = rows.iter().map(|r| r.beta_sub_quadrature).collect();
    let dec = |xs: &[f64]| xs.windows(2).all(|w| w[1] < w[0]);

    // Even N: the quadrature sits π away from the closed form.
    let even = SystemParams::default();
    let mut offset: f64 = 0.0;
    for &r in &[0.1, 0.4, 0.7] {
        let q = subsystem_geometric_phase(
            &DfsCoordinates::new(r, 2.0 * PI)?,
            &even,
            Ion::A,
            PhaseMethod::Quadrature,
            DEFAULT_PANELS,
        )?;
        offset = offset.max(angle_distance(q.value, subsystem_phase_closed_form(r) + PI));
    }
    let n = p.cycle_ratio().unwrap_or(0);
    outcome(
        worst < 1e-6 && at_one && dec(&closed) && dec(&quad),
        format!(
            "N = {n}: max |closed - quadrature| over r < 1 = {worst:.3e} (limit 1e-6), r = 1 branch zero: {at_one}, \
             strictly decreasing: closed {} quadrature {}; note N = 10 matches closed form + pi to {offset:.1e}",
            dec(&closed),
            dec(&quad)
        ),
    )
}

fn criterion_4() -> Result<Outcome> {
    let mut ok = true;
    let mut parts = Vec::new();
    for row in bell_table() {
        let fwd = forward_residual(&row.state, &row.phases, &row.coords);
        let inv = invert_numeric(&row.state)?;
        let back = forward_residual(&row.state, &inv.params, &inv.coords);
        ok &= fwd < 1e-9 && back < 1e-9;
        parts.push(format!("{} fwd {fwd:.1e} inv {back:.1e}", row.label));
    }
    outcome(ok, format!("{} (limit 1e-9)", parts.join(", ")))
}

fn random_phases(rng: &mut ChaCha8Rng) -> ReservoirParameters {
    let mut a = || rng.gen_range(-PI..PI);
    ReservoirParameters {
        phi_a1: a(),
        phi_b1: a(),
        varphi_a: a(),
        varphi_b: a(),
    }
}

fn criterion_5() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst_d: f64 = 0.0;
    for k in 0..100 {
        let p = if k == 0 {
            SystemParams::default()
        } else {
            random_phases(&mut rng).apply_to(&SystemParams::default())
        };
        let b = dfs_basis(&p);
        let v = CMatrix::from_columns(&[b.one.amplitudes().clone(), b.two.amplitudes().clone()]);
        let a = CMatrix::from_fn(2, 2, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let m = &a * a.adjoint();
        let m = &m / m.trace();
        let rho = DensityOperator::new(HilbertSpace::two_ions(), &v * m * v.adjoint())?;
        let d = dissipator(&jump_operator(&p), &rho)?;
        worst_d = worst_d.max(d.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }

    let p = SystemParams::default();
    let b = dfs_basis(&p);
    let t_end = 10.0 / p.engineered_rate();
    let opts = IntegrateOptions {
        safety: SAFETY,
        samples: 10,
        check_positivity: true,
    };
    let traj = integrate(&eq7_spec(&p)?, &b.three.projector(), t_end, &opts, None)?;
    let reach = traj.final_state().expectation_pure(&b.one);

    let mut worst_c: f64 = 0.0;
    for k in 0..=100 {
        let r = k as f64 / 100.0;
        let psi = psi_r(&DfsCoordinates::new(r, 1.3)?, &p);
        worst_c = worst_c
            .max((concurrence(&psi.projector())? - r).abs())
            .max((concurrence_pure(&psi)? - r).abs());
    }
    outcome(
        worst_d < 1e-12 && reach > 0.999 && worst_c < 1e-9,
        format!(
            "max |D[J]rho| = {worst_d:.1e} (limit 1e-12), <1|rho(10/Gamma)|1> = {reach:.9} (> 0.999), \
             max |C - r| = {worst_c:.1e} (limit 1e-9)"
        ),
    )
}

/// `max_k |a_k − e^{iα} b_k|` with `α = arg⟨b|a⟩`.
fn global_phase_distance(a: &StateVector, b: &StateVector) -> f64 {
    let z = b.inner(a);
    let phase = z / z.norm();
    (a.amplitudes() - b.amplitudes() * phase)
        .iter()
        .map(|x| x.norm())
        .fold(0.0, f64::max)
}

fn criterion_6() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut worst10: f64 = 0.0;
    for _ in 0..100 {
        let p = random_phases(&mut rng).apply_to(&SystemParams::default());
        let coords = DfsCoordinates::new(rng.gen_range(0.0..=1.0), rng.gen_range(0.0..2.0 * PI))?;
        let t = rng.gen_range(0.0..3.0 * p.period());
        let framed = frame_unitary_at(&p, t).apply(&psi_r(&coords, &p))?;
        let closed = coefficients_at(&coords, &p, t);
        for (x, y) in framed.amplitudes().iter().zip(closed) {
            worst10 = worst10.max((x - y).norm());
        }
    }

    let mut worst14: f64 = 0.0;
    for (o1, o2) in [(100.0, 10.0), (57.0, 3.5)] {
        let p = psi_e_reservoir().apply_to(&SystemParams {
            omega1: o1,
            omega2: o2,
            ..SystemParams::default()
        });
        for _ in 0..100 {
            let t = rng.gen_range(0.0..2.0 * p.period());
            let framed = frame_unitary_at(&p, t).apply(&psi_e_initial())?;
            let closed = psi_e_state_with(o1, o2, t);
            worst14 = worst14.max(
                (framed.amplitudes() - closed.amplitudes())
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0, f64::max),
            );
        }
    }

    let mut worst_period: f64 = 0.0;
    for n in [1.0, 2.0, 10.0, 11.0] {
        for _ in 0..10 {
            let p = random_phases(&mut rng).apply_to(&SystemParams {
                omega1: n * 10.0,
                ..SystemParams::default()
            });
            let coords = DfsCoordinates::new(rng.gen_range(0.0..=1.0), rng.gen_range(0.0..2.0 * PI))?;
            let psi0 = psi_r(&coords, &p);
            let psi_t = frame_unitary_at(&p, p.period()).apply(&psi0)?;
            worst_period = worst_period.max(global_phase_distance(&psi_t, &psi0));
        }
    }
    outcome(
        worst10 < 1e-10 && worst14 < 1e-10 && worst_period < 1e-9,
        format!(
            "closed coefficients vs frame {worst10:.1e} (limit 1e-10), |Psi_E(t)> vs frame {worst14:.1e} \
             (limit 1e-10), period return {worst_period:.1e} (limit 1e-9)"
        ),
    )
}

fn summarize(c: &Check) -> String {
    format!("{} {} {}", c.name, if c.passed { "ok" } else { "FAILED" }, c.measured)
}

fn criterion_7() -> Result<Outcome> {
    let p = SystemParams::default();
    let checks = [
        check_equivalence(&p, SEED, SAFETY)?,
        check_frame_average(&p),
        check_hierarchy_trend(SAFETY)?,
        check_adiabatic_trend(&p, SAFETY)?,
    ];
    outcome(
        checks.iter().all(|c| c.passed),
        checks.iter().map(summarize).collect::<Vec<_>>().join("; "),
    )
}

#[derive(Default)]
struct Invariants {
    trace: f64,
    hermiticity: f64,
    negativity: f64,
    samples: usize,
}

fn watch(spec: &MasterEquationSpec, rho0: &DensityOperator, t_end: f64, inv: &mut Invariants) -> Result<()> {
    let opts = IntegrateOptions {
        safety: SAFETY,
        samples: 100,
        check_positivity: true,
    };
    let mut failure = None;
    let mut observe = |_t: f64, rho: &DensityOperator| {
        inv.trace = inv.trace.max((rho.trace() - 1.0).abs());
        inv.hermiticity = inv.hermiticity.max(hermitian_deviation(rho.matrix()));
        match rho.min_eigenvalue() {
            Ok(m) => inv.negativity = inv.negativity.max(-m),
            Err(e) => failure = Some(e),
        }
        inv.samples += 1;
    };
    integrate(spec, rho0, t_end, &opts, Some(&mut observe))?;
    match failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn criterion_8() -> Result<Outcome> {
    let p = SystemParams::default();
    let halving = check_step_halving(&p, SEED, SAFETY)?;
    let coarse = fidelity_curve(&p, &psi_e_initial(), 100.0, &fig1_opts(SAFETY))?;
    let fine = fidelity_curve(&p, &psi_e_initial(), 100.0, &fig1_opts(SAFETY / 2.0))?;
    let fig1_delta = coarse
        .fidelity
        .iter()
        .zip(&fine.fidelity)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let mut inv = Invariants::default();
    let psi = psi_e_initial();
    watch(&eq6_spec(&p)?, &psi.projector(), 100.0 * p.period(), &mut inv)?;
    watch(&eq7_spec(&p)?, &dfs_basis(&p).three.projector(), 10.0 / p.engineered_rate(), &mut inv)?;
    let full0 = psi.tensor(&cavity_vacuum(p.n_max)).projector();
    watch(&eq5_spec(&p)?, &full0, 2.0 * p.period(), &mut inv)?;
    watch(&eq3_spec(&p)?, &full0, p.period(), &mut inv)?;
    let invariants_ok = inv.trace < 1e-6 && inv.hermiticity < 1e-6 && inv.negativity < 1e-6;

    let sub = Scenario::Fig2.default_params();
    let mut simpson: f64 = 0.0;
    for k in 0..=10 {
        let coords = DfsCoordinates::new(k as f64 / 10.0, 2.0 * PI)?;
        let g1 = global_geometric_phase(&coords, &p, DEFAULT_PANELS)?;
        let g2 = global_geometric_phase(&coords, &p, 2 * DEFAULT_PANELS)?;
        let s1 = subsystem_geometric_phase(&coords, &sub, Ion::A, PhaseMethod::Quadrature, DEFAULT_PANELS)?;
        let s2 = subsystem_geometric_phase(&coords, &sub, Ion::A, PhaseMethod::Quadrature, 2 * DEFAULT_PANELS)?;
        simpson = simpson
            .max((g1.raw - g2.raw).abs())
            .max(angle_distance(s1.value, s2.value));
    }
    outcome(
        halving.passed && fig1_delta < 1e-8 && invariants_ok && simpson < 1e-8,
        format!(
            "{}; fig1 curve change under dt/2 {fig1_delta:.1e} (limit 1e-8); over {} samples of eq3/eq5/eq6/eq7 \
             trace {:.1e}, hermiticity {:.1e}, negativity {:.1e} (limit 1e-6); Simpson doubling {simpson:.1e} (limit 1e-8)",
            summarize(&halving),
            inv.samples,
            inv.trace,
            inv.hermiticity,
            inv.negativity
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<Outcome>); 8] = [
        ("fidelity under spontaneous emission", criterion_1),
        ("global phase closure", criterion_2),
        ("subsystem phase closed form vs quadrature", criterion_3),
        ("Bell-state reservoir parameters", criterion_4),
        ("DFS properties", criterion_5),
        ("analytic trajectories", criterion_6),
        ("reduction chain", criterion_7),
        ("numerical hygiene", criterion_8),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (tag, detail) = match run() {
            Ok(o) => (if o.passed { "PASS" } else { "FAIL" }, o.detail),
            Err(e) => ("FAIL", format!("error: {e}")),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!(
            "criterion {} {tag} [{name}] {detail} ({:.1}s)",
            k + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
