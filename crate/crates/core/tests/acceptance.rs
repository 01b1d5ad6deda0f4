//! Acceptance checks, one line per criterion. Exits non-zero if any fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use dfsblock_core::device::{
    block_hamiltonian, effective_hamiltonian, frame_index, interblock_hamiltonian, standard_block, topology_search, LogicalFrame,
    INTERSECTION_STATES, STANDARD_JPRIME_EDGES,
};
use dfsblock_core::dynamics::{berry_phase_residual, EvolveOptions};
use dfsblock_core::gatecomp::{
    adiabatic_predictions, compile_cz_adiabatic, compile_cz_pulsed, compile_map_1_to_2, compile_map_2_to_1, compile_x_rotation,
    compile_z_power, compile_z_rotation, diagonal_fit_fidelity, fit_phase_coefficients, logical_unitary, makhlin_invariants,
    simulate_phase_table, synthesize_z_power, z_unit, DEFAULT_MIN_MARGIN, DEFAULT_REGIME_RATIO,
};
use dfsblock_core::noise::{ghz_fidelity_oracle, run_immunity_experiment, DephasingModel, FieldProcess, NoiseCoupling};
use dfsblock_core::operators::{basis_index, basis_state, collective_operator, commutator_norm, ket, Axis};
use dfsblock_core::scalar::circle_distance;
use dfsblock_core::subspace::{gamma_stabilizer, intersect, projector_of, simultaneous_eigenspace};
use dfsblock_core::{ChainSpec, EdgeKey, GeneratorConstraint, PulseSchedule, RampSpec, Result, StateVector, C64};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn max_dev(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn diag(entries: &[f64]) -> DMatrix<C64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(entries.len(), entries.iter().map(|&x| C64::new(x, 0.0))))
}

fn sz(sites: &[usize]) -> Result<dfsblock_core::MatrixOperator> {
    collective_operator(Axis::Z, sites)?.realize(4)
}

fn encoding() -> Result<Outcome> {
    let start = Instant::now();
    let dfs_c = GeneratorConstraint::new(sz(&[0, 1, 2, 3])?, 0.0)?;
    let dfs = simultaneous_eigenspace(&[dfs_c])?;
    let ifs = simultaneous_eigenspace(&[GeneratorConstraint::new(sz(&[0, 1])?, 0.0)?, GeneratorConstraint::new(sz(&[2, 3])?, 0.0)?])?;
    let meet = intersect(&projector_of(&dfs)?, &projector_of(&ifs)?)?;
    let expected: Vec<usize> = INTERSECTION_STATES.iter().map(|s| basis_index(s)).collect();
    let support = meet.computational_support(1e-12);
    let elapsed = start.elapsed().as_secs_f64();
    let pass = dfs.len() == 6 && meet.len() == 4 && support.as_deref() == Some(&expected[..]) && elapsed < 1.0;
    outcome(pass, format!("dfs={} intersection={} support={:?} time={elapsed:.3}s", dfs.len(), meet.len(), support))
}

fn effective_hamiltonians() -> Result<Outcome> {
    let mut worst = 0.0f64;
    let frame1 = [LogicalFrame::new(0)];
    let frame2 = [LogicalFrame::new(0), LogicalFrame::new(1)];
    for (j, jp) in [(1.0, 0.5), (1.3, 0.4), (0.7, -1.9), (1.0, 1.6)] {
        let block = standard_block(j, jp)?;
        let (mu, nu) = (0.37, -1.2);
        let idle = effective_hamiltonian(&block_hamiltonian(&block, &BTreeMap::new())?, &frame1)?;
        let base = diag(&[-2.0 * jp, -2.0 * jp, 2.0 * jp - 4.0 * j]);
        worst = worst.max(max_dev(&idle, &base));
        let mut x = base.clone();
        x[(0, 1)] = C64::new(2.0 * mu, 0.0);
        x[(1, 0)] = C64::new(2.0 * mu, 0.0);
        worst = worst.max(max_dev(&effective_hamiltonian(&block_hamiltonian(&block, &BTreeMap::from([((1, 2), mu)]))?, &frame1)?, &x));
        let mut z = base.clone();
        z[(1, 2)] = C64::new(2.0 * nu, 0.0);
        z[(2, 1)] = C64::new(2.0 * nu, 0.0);
        worst = worst.max(max_dev(&effective_hamiltonian(&block_hamiltonian(&block, &BTreeMap::from([((2, 3), nu)]))?, &frame1)?, &z));

        let chain = ChainSpec::uniform(2, j, jp)?;
        let inter = effective_hamiltonian(&interblock_hamiltonian(&chain, 0)?, &frame2)?;
        let mut expected = DMatrix::zeros(9, 9);
        expected[(8, 8)] = C64::new(-4.0 * j, 0.0);
        worst = worst.max(max_dev(&inter, &expected));

        let total = effective_hamiltonian(&chain.hamiltonian(&BTreeMap::new())?, &frame2)?;
        for (a, za) in [(1usize, 1.0f64), (2, -1.0)] {
            for (b, zb) in [(1usize, 1.0), (2, -1.0)] {
                let k = 3 * a + b;
                let want = -5.0 * j + (3.0 * j - 2.0 * jp) * (za + zb) - j * za * zb;
                worst = worst.max((total[(k, k)] - C64::new(want, 0.0)).norm());
            }
        }
    }
    let mut unique = true;
    for (j, jp) in [(1.0, 0.5), (1.0, 0.371), (0.7, -1.9)] {
        let hits: Vec<_> = topology_search(j, jp)?.into_iter().filter(|c| c.matches).collect();
        unique &= hits.len() == 1 && hits[0].jprime_edges == STANDARD_JPRIME_EDGES;
    }
    outcome(worst < 1e-12 && unique, format!("max entry deviation={worst:.2e} unique topology={unique}"))
}

fn compiled_schedules(j: f64, jp: f64) -> Result<Vec<(PulseSchedule, usize)>> {
    let ramp = RampSpec::Sin2 { peak: 0.2 };
    Ok(vec![
        (compile_x_rotation(0, 0.9, 1.0, jp)?, 1),
        (compile_z_power(0, j, jp, 1.0, 3)?, 1),
        (compile_z_rotation(0, 0.4, j, jp, 1.0, 1e-3)?.0, 1),
        (compile_map_1_to_2(0, j, jp, 1.0)?, 1),
        (compile_map_2_to_1(0, j, jp, 0.3)?, 1),
        (compile_cz_pulsed(0, j, jp, 30.0, 0.5, DEFAULT_REGIME_RATIO)?, 2),
        (compile_cz_adiabatic(0, j, jp, 1.0, ramp, 200.0, DEFAULT_MIN_MARGIN)?.0, 2),
    ])
}

fn invariance() -> Result<Outcome> {
    let (j, jp) = (1.0, 0.5);
    let chain = ChainSpec::uniform(2, j, jp)?;
    let grid = [-2.0, -0.5, 0.0, 0.3, 1.7];
    let projectors = [chain.dfs_projector(0)?, chain.dfs_projector(1)?];
    let mut worst = 0.0f64;
    for &mu in &grid {
        for &nu in &grid {
            for l in 0..2 {
                let k = BTreeMap::from([(EdgeKey::new(l, 1, 2), mu), (EdgeKey::new(l, 2, 3), nu)]);
                let h = chain.hamiltonian(&k)?;
                worst = worst.max(commutator_norm(projectors[l].operator(), &h)?);
            }
        }
    }
    let inter = interblock_hamiltonian(&chain, 0)?;
    for p in &projectors {
        worst = worst.max(commutator_norm(p.operator(), &inter)?);
    }
    let mut leak = 0.0f64;
    for (s, blocks) in compiled_schedules(j, jp)? {
        let ch = ChainSpec::uniform(blocks, j, jp)?;
        let (_, r) = logical_unitary(&ch, &s, &[0, 1, 2], EvolveOptions::default())?;
        leak = leak.max(r.leakage);
    }
    outcome(worst < 1e-12 && leak < 1e-8, format!("max commutator={worst:.2e} max leakage={leak:.2e}"))
}

fn z_timing() -> Result<Outcome> {
    let j = 1.0;
    let (mut phase_err, mut pop) = (0.0f64, 0.0f64);
    for ratio in [0.2, 0.5, 0.8, 1.3, 1.7] {
        for nu in [0.1, 0.5, 1.0, 2.0, 5.0] {
            let jp = ratio * j;
            let (theta, _) = z_unit(j, jp, nu)?;
            let sigma = 2.0 * (j - jp);
            let closed = PI * sigma / (sigma * sigma + 4.0 * nu * nu).sqrt();
            let s = compile_z_power(0, j, jp, nu, 1)?;
            let (u, _) = logical_unitary(&ChainSpec::uniform(1, j, jp)?, &s, &[0, 1, 2], EvolveOptions::default())?;
            let rel = (u[(1, 1)] / u[(0, 0)]).arg();
            phase_err = phase_err.max(circle_distance(rel, 2.0 * closed)).max((theta - closed).abs());
            pop = pop.max(u[(2, 0)].norm_sqr()).max(u[(2, 1)].norm_sqr()).max(1.0 - u[(2, 2)].norm_sqr());
        }
    }
    outcome(phase_err < 1e-9 && pop < 1e-10, format!("max phase error={phase_err:.2e} max |2> population defect={pop:.2e}"))
}

fn synthesis() -> Result<Outcome> {
    let theta = PI / 5f64.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut largest = 0u64;
    for _ in 0..20 {
        let lambda = rng.random_range(-PI..PI);
        let r = synthesize_z_power(lambda, theta, 1e-3)?;
        let direct = circle_distance(r.power as f64 * theta, lambda);
        worst = worst.max(direct);
        largest = largest.max(r.power);
    }
    let elapsed = start.elapsed().as_secs_f64();
    outcome(worst < 1e-3 && elapsed < 10.0, format!("max error={worst:.2e} largest n={largest} time={elapsed:.3}s"))
}

fn adiabatic_d(tf: f64, peak: f64) -> Result<(f64, f64)> {
    let ramp = RampSpec::Sin2 { peak };
    let pred = adiabatic_predictions(1.0, 0.5, &ramp, tf)?;
    let (table, _) = simulate_phase_table(1.0, 0.5, &ramp, tf, None)?;
    let fit = fit_phase_coefficients(&table)?;
    Ok((fit.d, pred.d))
}

fn adiabatic_cz() -> Result<Outcome> {
    let pred = adiabatic_predictions(1.0, 0.5, &RampSpec::Sin2 { peak: 0.2 }, 200.0)?;
    let identity = (pred.theta - (pred.kappa - pred.eta) / 4.0).abs();
    let (d200, q200) = adiabatic_d(200.0, 0.2)?;
    let (d800, q800) = adiabatic_d(800.0, 0.2 * (200.0f64 / 800.0).sqrt())?;
    let (e200, e800) = ((d200 - q200).abs() / q200.abs(), (d800 - q800).abs() / q800.abs());
    outcome(
        identity < 1e-12 && (q200 - 1.0).abs() < 1e-12 && e200 < 0.05 && e800 < 0.01,
        format!("quadrature d={q200:.12} identity gap={identity:.1e}; t_f=200 d={d200:.6} rel={e200:.4}; t_f=800 d={d800:.6} rel={e800:.4}"),
    )
}

fn berry() -> Result<Outcome> {
    let (_, r) = simulate_phase_table(1.0, 0.5, &RampSpec::Sin2 { peak: 0.2 }, 200.0, None)?;
    let mut worst = 0.0f64;
    for k in 0..r.final_states.len() {
        worst = worst.max(berry_phase_residual(&r, k)?.abs());
    }
    outcome(worst < 1e-3, format!("max |total - dynamical|={worst:.2e} rad over {} states", r.final_states.len()))
}

fn pulsed_cz() -> Result<Outcome> {
    let (j, jp, d) = (1.0, 0.5, 0.5);
    let chain = ChainSpec::uniform(2, j, jp)?;
    let mut fidelities = Vec::new();
    let mut zz = 0.0;
    let mut tau = 0.0;
    for ratio in [10.0, 30.0, 100.0] {
        let s = compile_cz_pulsed(0, j, jp, ratio * j, d, DEFAULT_REGIME_RATIO)?;
        let (u, _) = logical_unitary(&chain, &s, &[0, 1], EvolveOptions::default())?;
        fidelities.push(diagonal_fit_fidelity(&u).0);
        if ratio == 100.0 {
            zz = makhlin_invariants(&u)?.zz_coefficient();
            tau = s.metadata.predictions["tau"];
        }
    }
    let monotone = fidelities.windows(2).all(|w| w[1] > w[0]);
    let rel = (zz - j * tau).abs() / (j * tau);
    outcome(monotone && zz > 0.0 && rel < 0.02, format!("fidelities={fidelities:.6?} zz={zz:.6} J*tau={:.6} rel={rel:.4}", j * tau))
}

fn noise_immunity() -> Result<Outcome> {
    let chain = ChainSpec::uniform(2, 1.0, 0.5)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let product = |a: usize, b: usize| basis_state::<f64>(8, frame_index(&[a, b]));
    let bell: StateVector = (product(0, 1) + product(1, 0)) * C64::new(s, 0.0);
    let mut states = vec![product(0, 0), product(0, 1), product(1, 0), product(1, 1), bell.clone()];
    states.push((product(0, 0) * C64::new(0.6, 0.0)) + product(1, 1) * C64::new(0.0, 0.8));
    let mut worst = 0.0f64;
    for sigma in [0.1, 1.0, 10.0] {
        let model = DephasingModel::collective_static(sigma, 7);
        for st in &states {
            let r = run_immunity_experiment(&chain, &model, st, 1.0, 200)?;
            worst = r.fidelities.iter().fold(worst, |m, f| m.max((f - 1.0).abs()));
        }
    }
    let single = ChainSpec::uniform(1, 1.0, 0.5)?;
    let ghz = (ket::<f64>("0000") + ket::<f64>("1111")) * C64::new(s, 0.0);
    let (sigma, t) = (0.15, 1.0);
    let r = run_immunity_experiment(&single, &DephasingModel::collective_static(sigma, 11), &ghz, t, 200)?;
    let oracle = ghz_fidelity_oracle(sigma, t);
    let ghz_ok = (r.mean - oracle).abs() < 3.0 * r.standard_error();
    let control = DephasingModel { process: FieldProcess::Static, coupling: NoiseCoupling::PerQubit, sigma: 1.0, seed: 7 };
    let c = run_immunity_experiment(&chain, &control, &bell, 1.0, 200)?;
    outcome(
        worst < 1e-10 && ghz_ok && c.mean < 0.99,
        format!(
            "encoded max |F-1|={worst:.2e}; GHZ mean={:.4} oracle={oracle:.4} 3se={:.4}; per-qubit control mean={:.4}",
            r.mean,
            3.0 * r.standard_error(),
            c.mean
        ),
    )
}

fn stabilizer() -> Result<Outcome> {
    let c = GeneratorConstraint::new(sz(&[0, 1, 2, 3])?, 0.0)?;
    let p = projector_of(&simultaneous_eigenspace(std::slice::from_ref(&c))?)?;
    let mut pass = true;
    let mut parts = Vec::new();
    for gamma in [1.0, 2.0, 4.0, 8.0] {
        let dist = gamma_stabilizer(std::slice::from_ref(&c), gamma)?.sub(p.operator())?.spectral_norm();
        let bound = (-4.0 * gamma).exp();
        pass &= dist <= bound;
        parts.push(format!("G={gamma}: {dist:.3e}<={bound:.3e}"));
    }
    outcome(pass, parts.join(" "))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<Outcome>); 10] = [
        ("encoding", encoding),
        ("effective-hamiltonian", effective_hamiltonians),
        ("invariance", invariance),
        ("z-gate-timing", z_timing),
        ("synthesis", synthesis),
        ("adiabatic-cz-phases", adiabatic_cz),
        ("berry-residual", berry),
        ("pulsed-cz-regime", pulsed_cz),
        ("noise-immunity", noise_immunity),
        ("stabilizer-convergence", stabilizer),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failures += usize::from(!pass);
        println!("criterion {:>2} {:<24} {} ({:.2}s) {detail}", i + 1, name, if pass { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
