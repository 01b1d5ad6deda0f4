//! Unitary evolution of chains under pulse schedules.
//!
//! Every chain Hamiltonian is the diagonal Ising part plus flip-flop terms on
//! the switched-on edges, so it is block diagonal over the connected
//! components of the flip-flop graph. Evolution exponentiates each occupied
//! component separately: constant segments in a single exact step, ramped
//! segments with the midpoint exponential rule
//! `psi <- exp(-i H(t + dt/2) dt) psi`.
//!
//! Phases are tracked continuously. The dynamical phase accumulates
//! `-<psi|H_mid|psi> dt` per step (exact for the midpoint rule, where the
//! expectation is conserved within a step); the total phase follows
//! `arg <psi(0)|psi(t)>` step by step, resolving the `2 pi` branch of each
//! increment towards the dynamical increment of the same step.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;

use crate::device::{in_full_dfs, ChainSpec};
use crate::operators::{components_of, MatrixOperator, StateVector};
use crate::schedule::{EdgeKey, PulseSchedule, Ramp, Segment};
use crate::scalar::ComplexOps;
use crate::{Error, Real, Result};

/// Smallest accepted number of steps for a ramped segment.
pub const MIN_RAMP_STEPS: usize = 100;
/// Default resolution factor in `steps = ceil(factor * duration * ||H||_max)`.
pub const DEFAULT_STEP_FACTOR: f64 = 50.0;

/// Diagonal, time-dependent addition to the chain Hamiltonian (sampled noise fields).
pub trait Perturbation<T: Real>: Sync {
    /// Diagonal entries at absolute schedule time `t`, or `None` when zero.
    fn diagonal(&self, t: f64) -> Option<&[T]>;
    /// Times strictly inside `(t0, t1)` where the perturbation jumps.
    fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64>;
}

#[derive(Clone, Debug)]
pub enum Input<T: Real> {
    States(Vec<StateVector<T>>),
    /// Every computational basis state, giving the full propagator.
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveOptions {
    /// Steps per ramped segment; `None` uses `ceil(50 * duration * ||H||_max)`.
    pub steps: Option<usize>,
    /// Re-run ramped segments at twice the step count and report the difference.
    pub estimate_error: bool,
    /// Also run at four times the step count and fail unless refinement helps.
    pub check_convergence: bool,
    pub record_trajectory: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { steps: None, estimate_error: false, check_convergence: false, record_trajectory: false }
    }
}

impl EvolveOptions {
    pub fn with_steps(steps: usize) -> Self {
        Self { steps: Some(steps), ..Self::default() }
    }
}

/// States on the integration grid, kept when `record_trajectory` is set.
#[derive(Clone, Debug, Default)]
pub struct Trajectory<T: Real> {
    /// Grid times, including both endpoints of every step.
    pub times: Vec<f64>,
    /// `states[k][s]` is tracked state `s` at `times[k]`.
    pub states: Vec<Vec<StateVector<T>>>,
    /// Coupling values used for step `k` (evaluated at its midpoint).
    pub couplings: Vec<BTreeMap<EdgeKey, f64>>,
}

#[derive(Clone, Debug)]
pub struct EvolutionResult<T: Real> {
    pub initial_states: Vec<StateVector<T>>,
    pub final_states: Vec<StateVector<T>>,
    /// Unwrapped `arg <psi(0)|psi(t_f)>` per tracked state.
    pub total_phase: Vec<T>,
    /// `-int <psi|H|psi> dt` per tracked state.
    pub dynamical_phase: Vec<T>,
    /// Largest `||(I - P) psi||^2` seen, with `P` the product of block `S^z = 0` projectors.
    pub leakage: T,
    pub norm_defect: T,
    pub step_count: usize,
    /// Step-halving estimate for ramped segments (0 when not requested).
    pub max_step_error: T,
    pub duration: f64,
    /// Closed coupling path with every tracked state returned to itself up to a phase.
    pub cyclic: bool,
    pub trajectory: Option<Trajectory<T>>,
}

impl<T: Real> EvolutionResult<T> {
    /// `<basis index row | psi_col(t_f)>` for the given output indices.
    pub fn amplitudes(&self, rows: &[usize]) -> DMatrix<Complex<T>> {
        DMatrix::from_fn(rows.len(), self.final_states.len(), |r, c| self.final_states[c][rows[r]])
    }

    /// Full propagator when the input was [`Input::Identity`].
    pub fn unitary(&self) -> Result<MatrixOperator<T>> {
        let n = self.final_states.len();
        MatrixOperator::from_matrix(DMatrix::from_fn(n, n, |r, c| self.final_states[c][r]))
    }
}

/// Chain-specific data shared by every evolution on that chain.
pub struct Evolver<'a, T: Real> {
    chain: &'a ChainSpec<T>,
    idle_diag: Vec<T>,
    edge_pairs: BTreeMap<EdgeKey, Vec<(usize, usize)>>,
    dfs_mask: Vec<bool>,
    options: EvolveOptions,
}

struct SegmentOutcome<T: Real> {
    states: Vec<StateVector<T>>,
    dyn_phase: Vec<T>,
    tot_phase: Vec<T>,
    last_overlap: Vec<Complex<T>>,
    leakage: T,
    steps: usize,
}

impl<'a, T: Real> Evolver<'a, T> {
    pub fn new(chain: &'a ChainSpec<T>) -> Result<Self> {
        let idle = chain.idle_expr().realize_sparse(chain.qubits())?;
        debug_assert!(idle.off.is_empty());
        let idle_diag = idle.diag.iter().map(|z| z.re).collect();
        let blocks = chain.len();
        let dfs_mask = (0..chain.dim()).map(|i| in_full_dfs(i, blocks)).collect();
        Ok(Self { chain, idle_diag, edge_pairs: BTreeMap::new(), dfs_mask, options: EvolveOptions::default() })
    }

    pub fn with_options(mut self, options: EvolveOptions) -> Self {
        self.options = options;
        self
    }

    pub fn chain(&self) -> &ChainSpec<T> {
        self.chain
    }

    /// Flip-flop pairs `(i, j)`, `i < j`, of a unit-strength edge; the matrix element is 2.
    fn pairs(&self, edge: &EdgeKey) -> Result<Vec<(usize, usize)>> {
        if let Some(p) = self.edge_pairs.get(edge) {
            return Ok(p.clone());
        }
        let op = self.chain.edge_expr(edge)?.realize_sparse(self.chain.qubits())?;
        Ok(op.off.iter().filter(|(r, c, _)| r < c).map(|&(r, c, _)| (r, c)).collect())
    }

    /// Validates `schedule` against the chain and caches its edge data.
    pub fn prepare(&mut self, schedule: &PulseSchedule) -> Result<()> {
        schedule.validate()?;
        for seg in &schedule.segments {
            for edge in seg.couplings.keys() {
                self.chain.check_edge(edge)?;
            }
        }
        for seg in &schedule.segments {
            for edge in seg.couplings.keys() {
                if !self.edge_pairs.contains_key(edge) {
                    let p = self.pairs(edge)?;
                    self.edge_pairs.insert(*edge, p);
                }
            }
        }
        Ok(())
    }

    fn leak(&self, s: &StateVector<T>) -> T {
        s.iter().zip(&self.dfs_mask).filter(|(_, inside)| !**inside).fold(T::zero(), |a, (z, _)| a + z.norm_sqr())
    }

    /// Default step count for a ramped segment.
    pub fn default_steps(&self, seg: &Segment) -> usize {
        let diag_max = self.idle_diag.iter().fold(0.0f64, |m, d| m.max(d.as_f64().abs()));
        let samples = 64;
        let coupling_max = seg
            .couplings
            .values()
            .map(|c| (0..=samples).map(|k| c.value(seg.duration * k as f64 / samples as f64, seg.duration).abs()).fold(0.0, f64::max))
            .sum::<f64>();
        let norm = diag_max + 2.0 * coupling_max;
        ((DEFAULT_STEP_FACTOR * seg.duration * norm).ceil() as usize).max(MIN_RAMP_STEPS)
    }

    /// Evolves `input` through `schedule`, optionally with a diagonal perturbation.
    pub fn run(&mut self, schedule: &PulseSchedule, input: Input<T>, perturbation: Option<&dyn Perturbation<T>>) -> Result<EvolutionResult<T>> {
        self.prepare(schedule)?;
        self.run_prepared(schedule, input, perturbation)
    }

    /// [`Evolver::run`] for a schedule already passed to [`Evolver::prepare`].
    pub fn run_prepared(&self, schedule: &PulseSchedule, input: Input<T>, perturbation: Option<&dyn Perturbation<T>>) -> Result<EvolutionResult<T>> {
        if let Some(edge) = schedule.segments.iter().flat_map(|s| s.couplings.keys()).find(|k| !self.edge_pairs.contains_key(k)) {
            return Err(Error::InvalidParameter(format!("schedule not prepared: edge {edge}")));
        }
        let dim = self.chain.dim();
        let states0: Vec<StateVector<T>> = match input {
            Input::States(v) => {
                if let Some(s) = v.iter().find(|s| s.len() != dim) {
                    return Err(Error::DimensionMismatch { left: dim, right: s.len() });
                }
                v
            }
            Input::Identity => (0..dim).map(|i| crate::operators::basis_state(self.chain.qubits(), i)).collect(),
        };
        let n = states0.len();
        let mut states = states0.clone();
        let mut dyn_phase = vec![T::zero(); n];
        let mut tot_phase = vec![T::zero(); n];
        let mut overlap: Vec<Complex<T>> = states0.iter().map(|s| s.dotc(s)).collect();
        let mut leakage = states.iter().fold(T::zero(), |m, s| m.max(self.leak(s)));
        let mut steps = 0usize;
        let mut max_step_error = T::zero();
        let mut trajectory = self.options.record_trajectory.then(|| Trajectory { times: vec![0.0], states: vec![states.clone()], couplings: vec![] });
        let mut t0 = 0.0;
        for seg in &schedule.segments {
            let ramp_steps = if seg.has_ramp() {
                let s = self.options.steps.unwrap_or_else(|| self.default_steps(seg));
                if s < MIN_RAMP_STEPS {
                    return Err(Error::InvalidParameter(format!("ramped segments need at least {MIN_RAMP_STEPS} steps, got {s}")));
                }
                Some(s)
            } else {
                None
            };
            let out = self.run_segment(seg, t0, &states0, states.clone(), &overlap, ramp_steps, perturbation, trajectory.as_mut())?;
            if let Some(s) = ramp_steps.filter(|_| self.options.estimate_error || self.options.check_convergence) {
                let fine = self.run_segment(seg, t0, &states0, states.clone(), &overlap, Some(2 * s), perturbation, None)?;
                let e1 = max_state_distance(&out.states, &fine.states);
                if self.options.check_convergence {
                    let finer = self.run_segment(seg, t0, &states0, states.clone(), &overlap, Some(4 * s), perturbation, None)?;
                    let e2 = max_state_distance(&fine.states, &finer.states);
                    if e1 > T::tol(1e-13) && e2 * T::of(3.0) > e1 {
                        return Err(Error::Integration(format!("step halving reduced the error only from {:e} to {:e}", e1.as_f64(), e2.as_f64())));
                    }
                }
                max_step_error = max_step_error.max(e1);
            }
            for k in 0..n {
                dyn_phase[k] += out.dyn_phase[k];
                tot_phase[k] += out.tot_phase[k];
            }
            overlap = out.last_overlap;
            states = out.states;
            leakage = leakage.max(out.leakage);
            steps += out.steps;
            t0 += seg.duration;
        }
        let returned = states.iter().zip(&states0).all(|(s, s0)| (s0.dotc(s).norm() - s0.norm_squared()).abs() <= T::tol(1e-4));
        let norm_defect = states.iter().zip(&states0).fold(T::zero(), |m, (s, s0)| m.max((s.norm() - s0.norm()).abs()));
        Ok(EvolutionResult {
            initial_states: states0,
            final_states: states,
            total_phase: tot_phase,
            dynamical_phase: dyn_phase,
            leakage,
            norm_defect,
            step_count: steps,
            max_step_error,
            duration: t0,
            cyclic: schedule.is_cyclic() && returned,
            trajectory,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn run_segment(
        &self,
        seg: &Segment,
        t0: f64,
        refs: &[StateVector<T>],
        mut states: Vec<StateVector<T>>,
        overlap0: &[Complex<T>],
        ramp_steps: Option<usize>,
        perturbation: Option<&dyn Perturbation<T>>,
        mut trajectory: Option<&mut Trajectory<T>>,
    ) -> Result<SegmentOutcome<T>> {
        let n = states.len();
        let dim = self.chain.dim();
        let active: Vec<(&EdgeKey, &Vec<(usize, usize)>)> = seg.couplings.keys().map(|k| (k, &self.edge_pairs[k])).collect();
        let comps = components_of(dim, active.iter().flat_map(|(_, p)| p.iter().copied()));
        let occupied: Vec<&Vec<usize>> = comps.iter().filter(|c| c.iter().any(|&i| states.iter().any(|s| s[i] != Complex::default()))).collect();
        let mut slot = vec![usize::MAX; dim];
        for c in &occupied {
            for (k, &i) in c.iter().enumerate() {
                slot[i] = k;
            }
        }
        // flip-flop pairs of each occupied component in local coordinates, tagged with the edge
        let mut local: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); occupied.len()];
        let mut owner = vec![usize::MAX; dim];
        for (ci, c) in occupied.iter().enumerate() {
            for &i in c.iter() {
                owner[i] = ci;
            }
        }
        for (e, (_, pairs)) in active.iter().enumerate() {
            for &(i, j) in pairs.iter() {
                if owner[i] != usize::MAX {
                    local[owner[i]].push((e, slot[i], slot[j]));
                }
            }
        }
        let mut cuts = vec![t0];
        if let Some(p) = perturbation {
            cuts.extend(p.breakpoints(t0, t0 + seg.duration));
        }
        cuts.push(t0 + seg.duration);
        let mut dyn_phase = vec![T::zero(); n];
        let mut tot_phase = vec![T::zero(); n];
        let mut last_overlap = overlap0.to_vec();
        let mut leakage = T::zero();
        let mut steps = 0;
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let m = match ramp_steps {
                Some(s) => ((s as f64) * (b - a) / seg.duration).ceil().max(1.0) as usize,
                None => 1,
            };
            let dt = (b - a) / m as f64;
            for k in 0..m {
                let t_mid = a + (k as f64 + 0.5) * dt;
                let values = seg.values_at(t_mid - t0);
                let extra = perturbation.and_then(|p| p.diagonal(t_mid));
                let dtt = T::of(dt);
                let strengths: Vec<T> = active.iter().map(|(k, _)| T::of(2.0 * values[*k])).collect();
                let mut energy = vec![T::zero(); n];
                for (comp, pairs) in occupied.iter().zip(&local) {
                    self.step_component(comp, pairs, &strengths, extra, dtt, &mut states, &mut energy);
                }
                for (s_idx, s) in states.iter().enumerate() {
                    let dyn_inc = -energy[s_idx] * dtt;
                    dyn_phase[s_idx] += dyn_inc;
                    let ov = refs[s_idx].dotc(s);
                    let raw = (ov / last_overlap[s_idx]).arg();
                    let inc = if raw.is_finite() { dyn_inc + wrap(raw - dyn_inc) } else { dyn_inc };
                    tot_phase[s_idx] += inc;
                    last_overlap[s_idx] = ov;
                    leakage = leakage.max(self.leak(s));
                }
                steps += 1;
                if let Some(tr) = trajectory.as_deref_mut() {
                    tr.times.push(a + (k as f64 + 1.0) * dt);
                    tr.states.push(states.clone());
                    tr.couplings.push(values);
                }
            }
        }
        Ok(SegmentOutcome { states, dyn_phase, tot_phase, last_overlap, leakage, steps })
    }

    /// Applies `exp(-i H_c dt)` on component `comp` to every state, adding `<psi_c|H_c|psi_c>` to `energy`.
    #[allow(clippy::too_many_arguments)]
    fn step_component(
        &self,
        comp: &[usize],
        pairs: &[(usize, usize, usize)],
        strengths: &[T],
        extra: Option<&[T]>,
        dt: T,
        states: &mut [StateVector<T>],
        energy: &mut [T],
    ) {
        let diag = |i: usize| self.idle_diag[i] + extra.map_or(T::zero(), |e| e[i]);
        if comp.len() == 1 {
            let i = comp[0];
            let e = diag(i);
            let phase = Complex::new(T::zero(), -e * dt).exp();
            for (s, en) in states.iter_mut().zip(energy.iter_mut()) {
                *en += e * s[i].norm_sqr();
                s[i] *= phase;
            }
            return;
        }
        let k = comp.len();
        let mut h = DMatrix::<Complex<T>>::zeros(k, k);
        for (a, &i) in comp.iter().enumerate() {
            h[(a, a)] = Complex::new(diag(i), T::zero());
        }
        for &(e, a, b) in pairs {
            h[(a, b)] += Complex::new(strengths[e], T::zero());
            h[(b, a)] += Complex::new(strengths[e], T::zero());
        }
        let u = hermitian_step(&h, dt);
        for (s, en) in states.iter_mut().zip(energy.iter_mut()) {
            let psi = DVector::from_iterator(k, comp.iter().map(|&i| s[i]));
            if psi.iter().all(|z| *z == Complex::default()) {
                continue;
            }
            *en += psi.dotc(&(&h * &psi)).re;
            let out = &u * psi;
            for (a, &i) in comp.iter().enumerate() {
                s[i] = out[a];
            }
        }
    }
}

/// `exp(-i h dt)` for a small Hermitian matrix.
fn hermitian_step<T: Real>(h: &DMatrix<Complex<T>>, dt: T) -> DMatrix<Complex<T>> {
    if h.nrows() == 2 {
        let two = T::of(2.0);
        let mean = (h[(0, 0)].re + h[(1, 1)].re) / two;
        let half_split = (h[(0, 0)].re - h[(1, 1)].re) / two;
        let off = h[(0, 1)];
        let omega = (half_split * half_split + off.norm_sqr()).sqrt();
        let global = Complex::new(T::zero(), -mean * dt).exp();
        let (c, s_over) = if omega > T::zero() { ((omega * dt).cos(), (omega * dt).sin() / omega) } else { (T::one(), dt) };
        let mi = Complex::new(T::zero(), -s_over);
        return DMatrix::from_row_slice(
            2,
            2,
            &[
                global * (Complex::new(c, T::zero()) + mi * half_split),
                global * mi * off,
                global * mi * off.conj(),
                global * (Complex::new(c, T::zero()) - mi * half_split),
            ],
        );
    }
    let eig = SymmetricEigen::new(h.clone());
    let phases = eig.eigenvalues.map(|l| Complex::new(T::zero(), -l * dt).exp());
    &eig.eigenvectors * DMatrix::from_diagonal(&phases) * eig.eigenvectors.adjoint()
}

fn wrap<T: Real>(x: T) -> T {
    let tau = T::two_pi();
    let pi = T::pi();
    let mut y = x - tau * ((x + pi) / tau).floor();
    if y <= -pi {
        y += tau;
    }
    y
}

fn max_state_distance<T: Real>(a: &[StateVector<T>], b: &[StateVector<T>]) -> T {
    a.iter().zip(b).fold(T::zero(), |m, (x, y)| m.max((x - y).norm()))
}

/// Exact evolution through constant segments.
pub fn evolve_piecewise<T: Real>(chain: &ChainSpec<T>, schedule: &PulseSchedule, input: Input<T>) -> Result<EvolutionResult<T>> {
    if let Some(i) = schedule.segments.iter().position(Segment::has_ramp) {
        return Err(Error::RampInPiecewise(i));
    }
    Evolver::new(chain)?.run(schedule, input, None)
}

/// Evolution with `steps` midpoint steps per ramped segment and a step-halving error estimate.
pub fn evolve_ramped<T: Real>(chain: &ChainSpec<T>, schedule: &PulseSchedule, input: Input<T>, steps: usize) -> Result<EvolutionResult<T>> {
    if steps < MIN_RAMP_STEPS {
        return Err(Error::InvalidParameter(format!("at least {MIN_RAMP_STEPS} steps required, got {steps}")));
    }
    let options = EvolveOptions { steps: Some(steps), estimate_error: true, ..EvolveOptions::default() };
    Evolver::new(chain)?.with_options(options).run(schedule, input, None)
}

/// Midpoint quadrature of `-<psi|H|psi>` over a recorded grid.
///
/// `states[k]` is the state at the start of step `k` (so there is one more
/// state than Hamiltonians) and `hamiltonians[k]` is evaluated at the step
/// midpoint.
pub fn dynamical_phase<T: Real>(states: &[StateVector<T>], hamiltonians: &[MatrixOperator<T>], dt: T) -> Result<T> {
    if states.len() != hamiltonians.len() + 1 {
        return Err(Error::GridMismatch { states: states.len(), steps: hamiltonians.len() });
    }
    Ok(hamiltonians.iter().zip(states).fold(T::zero(), |acc, (h, s)| acc - h.element(s, s).re * dt))
}

/// Total minus dynamical phase of tracked state `index`, wrapped to `(-pi, pi]`.
pub fn berry_phase_residual<T: Real>(result: &EvolutionResult<T>, index: usize) -> Result<T> {
    if !result.cyclic {
        return Err(Error::NonCyclic);
    }
    let (Some(&total), Some(&dynamical)) = (result.total_phase.get(index), result.dynamical_phase.get(index)) else {
        return Err(Error::InvalidParameter(format!("no tracked state {index}")));
    };
    Ok(wrap(total - dynamical))
}

/// `min(|J - J'|^2, |2J - J'|^2) / ((1/8) max |d nu / dt|)`; infinite for a flat ramp.
pub fn adiabaticity_margin(j: f64, jp: f64, ramp: &dyn Ramp, duration: f64) -> Result<f64> {
    let (g1, g2) = ((j - jp).abs(), (2.0 * j - jp).abs());
    let scale = j.abs().max(jp.abs()).max(f64::MIN_POSITIVE);
    if g1 <= 1e-12 * scale || g2 <= 1e-12 * scale {
        return Err(Error::GapClosure(format!("|J - J'| = {g1:e}, |2J - J'| = {g2:e}")));
    }
    if !(duration > 0.0) {
        return Err(Error::InvalidParameter("ramp duration must be positive".into()));
    }
    let samples = 20_000;
    let h = duration / samples as f64;
    let mut max_rate = 0.0f64;
    for k in 0..=samples {
        let t = k as f64 * h;
        let (lo, hi) = ((t - h / 2.0).max(0.0), (t + h / 2.0).min(duration));
        let rate = (ramp.value(hi, duration) - ramp.value(lo, duration)) / (hi - lo);
        max_rate = max_rate.max(rate.abs());
    }
    if max_rate == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(g1.min(g2).powi(2) / (max_rate / 8.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{frame_index, LogicalFrame};
    use crate::operators::basis_state;
    use crate::schedule::RampSpec;
    use std::f64::consts::PI;

    type C = Complex<f64>;

    fn chain1() -> ChainSpec<f64> {
        ChainSpec::uniform(1, 1.0, 0.5).unwrap()
    }

    fn frame_state(level: usize) -> StateVector<f64> {
        basis_state(4, LogicalFrame::local_index(level))
    }

    #[test]
    fn empty_schedule_is_identity() {
        let r = evolve_piecewise(&chain1(), &PulseSchedule::new("none"), Input::Identity).unwrap();
        let u = r.unitary().unwrap();
        assert_eq!(u.matrix(), MatrixOperator::<f64>::identity(16).matrix());
    }

    #[test]
    fn x_pulse_restriction() {
        let (jp, mu, t) = (0.5, 0.7, 0.9);
        let mut s = PulseSchedule::new("x");
        s.push(Segment::constant(t, [(EdgeKey::new(0, 1, 2), mu)]));
        let r = evolve_piecewise(&chain1(), &s, Input::States(vec![frame_state(0), frame_state(1)])).unwrap();
        let rows = [LogicalFrame::local_index(0), LogicalFrame::local_index(1)];
        let u = r.amplitudes(&rows);
        let g = C::from_polar(1.0, 2.0 * jp * t);
        let (c, sn) = ((2.0 * mu * t).cos(), (2.0 * mu * t).sin());
        let expected = DMatrix::from_row_slice(2, 2, &[C::new(c, 0.0), C::new(0.0, -sn), C::new(0.0, -sn), C::new(c, 0.0)]) * g;
        assert!(crate::operators::max_abs_diff(&u, &expected) < 1e-12);
    }

    #[test]
    fn z_unit_restriction() {
        let (j, jp, nu) = (1.0f64, 0.5, 1.0);
        let sigma = 2.0 * (j - jp);
        let omega = (sigma * sigma + 4.0 * nu * nu).sqrt();
        let t = 2.0 * PI / omega;
        let theta = PI * sigma / omega;
        let mut s = PulseSchedule::new("z");
        s.push(Segment::constant(t, [(EdgeKey::new(0, 2, 3), nu)]));
        let r = evolve_piecewise(&chain1(), &s, Input::States(vec![frame_state(0), frame_state(1)])).unwrap();
        let a0 = r.final_states[0][LogicalFrame::local_index(0)];
        let a1 = r.final_states[1][LogicalFrame::local_index(1)];
        assert!((a0.norm() - 1.0).abs() < 1e-12 && (a1.norm() - 1.0).abs() < 1e-12);
        // exp(-i theta Z) up to a global phase: relative phase 2 theta
        assert!(crate::scalar::circle_distance((a1 / a0).arg(), 2.0 * theta) < 1e-12);
    }

    #[test]
    fn ramp_rejected_by_piecewise() {
        let mut s = PulseSchedule::new("r");
        s.push(Segment::ramped(1.0, EdgeKey::new(0, 2, 3), RampSpec::Sin2 { peak: 0.1 }));
        assert!(matches!(evolve_piecewise(&chain1(), &s, Input::Identity), Err(Error::RampInPiecewise(0))));
        let mut bad = PulseSchedule::new("bad");
        bad.push(Segment::constant(1.0, [(EdgeKey::new(0, 3, 4), 1.0)]));
        assert!(matches!(evolve_piecewise(&chain1(), &bad, Input::Identity), Err(Error::Model(_))));
    }

    #[test]
    fn constant_ramp_matches_piecewise() {
        let chain = ChainSpec::uniform(2, 1.0, 0.3).unwrap();
        let edge = EdgeKey::new(1, 2, 3);
        let mut a = PulseSchedule::new("const");
        a.push(Segment::constant(3.0, [(edge, 0.6)]));
        let mut b = PulseSchedule::new("ramp");
        b.push(Segment::ramped(3.0, edge, RampSpec::Constant { value: 0.6 }));
        let inputs: Vec<_> = [[0, 1], [2, 1], [1, 2]].iter().map(|l| basis_state(8, frame_index(l))).collect();
        let ra = evolve_piecewise(&chain, &a, Input::States(inputs.clone())).unwrap();
        let rb = evolve_ramped(&chain, &b, Input::States(inputs), 200).unwrap();
        assert!(max_state_distance(&ra.final_states, &rb.final_states) < 1e-8);
    }

    #[test]
    fn eigenstate_phase() {
        // idle block: |0_L> has energy -2J'
        let jp = 0.5;
        let mut s = PulseSchedule::new("idle");
        s.push(Segment::idle(7.0));
        let r = evolve_piecewise(&chain1(), &s, Input::States(vec![frame_state(0)])).unwrap();
        assert!((r.dynamical_phase[0] - 2.0 * jp * 7.0).abs() < 1e-12);
        assert!((r.total_phase[0] - 2.0 * jp * 7.0).abs() < 1e-12);
        assert!(berry_phase_residual(&r, 0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn recorded_trajectory_matches_quadrature() {
        let chain = chain1();
        let mut s = PulseSchedule::new("ramp");
        let edge = EdgeKey::new(0, 2, 3);
        s.push(Segment::ramped(20.0, edge, RampSpec::Sin2 { peak: 0.15 }));
        let opts = EvolveOptions { steps: Some(400), record_trajectory: true, ..Default::default() };
        let r = Evolver::new(&chain).unwrap().with_options(opts).run(&s, Input::States(vec![frame_state(1)]), None).unwrap();
        let tr = r.trajectory.as_ref().unwrap();
        let states: Vec<_> = tr.states.iter().map(|v| v[0].clone()).collect();
        let hams: Vec<_> = tr.couplings.iter().map(|k| chain.hamiltonian(k).unwrap()).collect();
        let dt = 20.0 / 400.0;
        let phi = dynamical_phase(&states, &hams, dt).unwrap();
        assert!((phi - r.dynamical_phase[0]).abs() < 1e-10);
        assert!(matches!(dynamical_phase(&states[1..], &hams, dt), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn slow_ramp_has_no_geometric_phase() {
        let chain = chain1();
        let mut s = PulseSchedule::new("ramp");
        s.push(Segment::ramped(150.0, EdgeKey::new(0, 2, 3), RampSpec::Sin2 { peak: 0.1 }));
        let r = evolve_ramped(&chain, &s, Input::States(vec![frame_state(1)]), 6000).unwrap();
        assert!(berry_phase_residual(&r, 0).unwrap().abs() < 1e-3);
        assert!(r.max_step_error < 1e-6);
    }

    #[test]
    fn non_cyclic_rejected() {
        let mut s = PulseSchedule::new("x");
        s.push(Segment::constant(1.0, [(EdgeKey::new(0, 1, 2), 0.4)]));
        let r = evolve_piecewise(&chain1(), &s, Input::States(vec![frame_state(0)])).unwrap();
        assert!(matches!(berry_phase_residual(&r, 0), Err(Error::NonCyclic)));
    }

    #[test]
    fn margin_examples() {
        let ramp = RampSpec::Sin2 { peak: 0.1 };
        let m = adiabaticity_margin(1.0, 0.5, &ramp, 100.0).unwrap();
        let expected = 0.25 / (0.1 * PI / 100.0 / 8.0);
        assert!((m - expected).abs() / expected < 1e-6, "{m} vs {expected}");
        assert!((m - 636.6).abs() < 0.5);
        assert_eq!(adiabaticity_margin(1.0, 0.5, &RampSpec::Constant { value: 0.3 }, 10.0).unwrap(), f64::INFINITY);
        assert!(matches!(adiabaticity_margin(1.0, 1.0, &ramp, 100.0), Err(Error::GapClosure(_))));
        assert!(matches!(adiabaticity_margin(1.0, 2.0, &ramp, 100.0), Err(Error::GapClosure(_))));
        let custom = |t: f64, d: f64| 0.1 * t / d;
        assert!((adiabaticity_margin(1.0, 0.5, &custom, 10.0).unwrap() - 0.25 / (0.01 / 8.0)).abs() < 1e-6);
    }

    #[test]
    fn wrap_range() {
        assert!((wrap(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap(-PI) - PI).abs() < 1e-12);
        assert!((wrap(0.25f64) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn two_by_two_step_matches_eigen() {
        let h = DMatrix::from_row_slice(2, 2, &[C::new(0.3, 0.0), C::new(0.2, -0.7), C::new(0.2, 0.7), C::new(-1.1, 0.0)]);
        let fast = hermitian_step(&h, 0.37);
        let eig = SymmetricEigen::new(h.clone());
        let slow = &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C::new(0.0, -l * 0.37).exp())) * eig.eigenvectors.adjoint();
        assert!(crate::operators::max_abs_diff(&fast, &slow) < 1e-14);
    }
}
