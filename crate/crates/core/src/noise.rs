//! Dephasing noise as classical random fields, and trajectory experiments.
//!
//! Each trajectory draws Gaussian fields `beta` and adds
//! `sum_L beta_L S^z_L` (collective, `S^z_L = sum of sigma^z` over block
//! `L`) or `sum_q beta_q sigma^z_q` (independent per-qubit fields, used as a
//! falsification control) to the chain Hamiltonian. Field statistics are a
//! modelling choice: static fields per trajectory, or fields redrawn every
//! `tau_c`.
//!
//! Random streams are counter based: trajectory `k` uses stream `k` of a
//! ChaCha8 generator seeded with the model seed, and field segment `s` starts
//! at a fixed word offset within it. Results therefore do not depend on how
//! trajectories are scheduled across threads.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::device::{frame_index, ChainSpec, BLOCK_QUBITS};
use crate::dynamics::{EvolveOptions, Evolver, Input, Perturbation};
use crate::operators::basis_state;
use crate::schedule::{PulseSchedule, Segment};
use crate::{Error, MatrixOperator, Result, StateVector, C64};

pub const DEFAULT_TRAJECTORIES: usize = 200;
/// Stream words reserved per field segment.
const WORDS_PER_SEGMENT: u128 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FieldProcess {
    Static,
    /// Fields redrawn at every multiple of `tau_c`.
    Piecewise { tau_c: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseCoupling {
    /// One field per block, seen identically by its four qubits.
    Collective,
    /// Independent field per qubit.
    PerQubit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DephasingModel {
    pub process: FieldProcess,
    pub coupling: NoiseCoupling,
    /// Field standard deviation.
    pub sigma: f64,
    pub seed: u64,
}

impl DephasingModel {
    pub fn collective_static(sigma: f64, seed: u64) -> Self {
        Self { process: FieldProcess::Static, coupling: NoiseCoupling::Collective, sigma, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidParameter(format!("field std must be finite and >= 0, got {}", self.sigma)));
        }
        if let FieldProcess::Piecewise { tau_c } = self.process {
            if !(tau_c > 0.0) || !tau_c.is_finite() {
                return Err(Error::InvalidParameter(format!("tau_c must be positive, got {tau_c}")));
            }
        }
        Ok(())
    }

    pub fn field_count(&self, blocks: usize) -> usize {
        match self.coupling {
            NoiseCoupling::Collective => blocks,
            NoiseCoupling::PerQubit => blocks * BLOCK_QUBITS,
        }
    }

    /// Field segment active at time `t`.
    pub fn segment_at(&self, t: f64) -> u64 {
        match self.process {
            FieldProcess::Static => 0,
            FieldProcess::Piecewise { tau_c } => (t / tau_c).floor().max(0.0) as u64,
        }
    }

    /// Fields of `trajectory` during field segment `segment`.
    pub fn fields(&self, blocks: usize, trajectory: u64, segment: u64) -> Vec<f64> {
        let count = self.field_count(blocks);
        if self.sigma == 0.0 {
            return vec![0.0; count];
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trajectory);
        rng.set_word_pos(segment as u128 * WORDS_PER_SEGMENT);
        (0..count)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                self.sigma * z
            })
            .collect()
    }

    /// Diagonal of the noise Hamiltonian for the given fields.
    pub fn diagonal(&self, chain: &ChainSpec<f64>, fields: &[f64]) -> Vec<f64> {
        let q = chain.qubits();
        (0..chain.dim())
            .map(|i| {
                let sz = |site: usize| if (i >> (q - 1 - site)) & 1 == 0 { 1.0 } else { -1.0 };
                match self.coupling {
                    NoiseCoupling::Collective => (0..chain.len()).map(|l| fields[l] * (0..BLOCK_QUBITS).map(|k| sz(BLOCK_QUBITS * l + k)).sum::<f64>()).sum(),
                    NoiseCoupling::PerQubit => (0..q).map(|site| fields[site] * sz(site)).sum(),
                }
            })
            .collect()
    }
}

/// `sum_L beta_L(t) S^z_L` (or the per-qubit analogue) for one trajectory.
pub fn sample_noise_hamiltonian(model: &DephasingModel, chain: &ChainSpec<f64>, t: f64, trajectory: u64) -> Result<MatrixOperator> {
    model.validate()?;
    let fields = model.fields(chain.len(), trajectory, model.segment_at(t));
    let diag: Vec<C64> = model.diagonal(chain, &fields).into_iter().map(|d| C64::new(d, 0.0)).collect();
    MatrixOperator::diagonal(&diag)
}

/// Sampled noise of one trajectory over `[0, duration]`, as a diagonal perturbation.
pub struct NoiseTrajectory {
    diagonals: Vec<Vec<f64>>,
    process: FieldProcess,
    silent: bool,
}

impl NoiseTrajectory {
    pub fn new(model: &DephasingModel, chain: &ChainSpec<f64>, trajectory: u64, duration: f64) -> Self {
        let segments = model.segment_at(duration) + 1;
        let diagonals = (0..segments).map(|s| model.diagonal(chain, &model.fields(chain.len(), trajectory, s))).collect();
        Self { diagonals, process: model.process, silent: model.sigma == 0.0 }
    }
}

impl Perturbation<f64> for NoiseTrajectory {
    fn diagonal(&self, t: f64) -> Option<&[f64]> {
        if self.silent {
            return None;
        }
        let idx = match self.process {
            FieldProcess::Static => 0,
            FieldProcess::Piecewise { tau_c } => ((t / tau_c).floor().max(0.0) as usize).min(self.diagonals.len() - 1),
        };
        Some(&self.diagonals[idx])
    }

    fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        match self.process {
            FieldProcess::Piecewise { tau_c } if !self.silent => {
                let first = (t0 / tau_c).floor() as u64 + 1;
                (first..).map(|k| k as f64 * tau_c).take_while(|&t| t < t1).filter(|&t| t > t0).collect()
            }
            _ => Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub experiment: String,
    pub seed: u64,
    pub sigma: f64,
    /// Model time of each trajectory.
    pub duration: f64,
    pub trajectories: usize,
    pub mean: f64,
    /// Sample standard deviation over trajectories.
    pub std: f64,
    pub min: f64,
    /// Largest leakage out of the product of block `S^z = 0` spaces seen in any trajectory.
    pub max_leakage: f64,
    pub fidelities: Vec<f64>,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    experiment: &'a str,
    seed: u64,
    sigma_b: f64,
    duration: f64,
    mean: f64,
    std: f64,
    max_leakage: f64,
}

impl FidelityReport {
    fn from_samples(experiment: &str, model: &DephasingModel, duration: f64, fidelities: Vec<f64>, max_leakage: f64) -> Self {
        let n = fidelities.len();
        let mean = fidelities.iter().sum::<f64>() / n as f64;
        let var = if n > 1 { fidelities.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        let min = fidelities.iter().copied().fold(f64::INFINITY, f64::min);
        Self { experiment: experiment.into(), seed: model.seed, sigma: model.sigma, duration, trajectories: n, mean, std: var.sqrt(), min, max_leakage, fidelities }
    }

    /// Standard error of the mean.
    pub fn standard_error(&self) -> f64 {
        self.std / (self.trajectories as f64).sqrt()
    }

    /// CSV with columns `experiment,seed,sigma_b,duration,mean,std,max_leakage`.
    pub fn write_csv<W: Write>(reports: &[FidelityReport], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in reports {
            w.serialize(CsvRow { experiment: &r.experiment, seed: r.seed, sigma_b: r.sigma, duration: r.duration, mean: r.mean, std: r.std, max_leakage: r.max_leakage })?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// `(1 + exp(-32 sigma^2 t^2)) / 2`: mean fidelity of `(|0000> + |1111>)/sqrt 2` under a static collective field.
pub fn ghz_fidelity_oracle(sigma: f64, t: f64) -> f64 {
    0.5 * (1.0 + (-32.0 * sigma * sigma * t * t).exp())
}

fn check_trajectories(trajectories: usize) -> Result<()> {
    if trajectories == 0 {
        return Err(Error::InvalidParameter("at least one trajectory required".into()));
    }
    Ok(())
}

/// Fidelity `|<ideal|noisy>|^2` of `state` after idling for `duration`, per trajectory.
pub fn run_immunity_experiment(chain: &ChainSpec<f64>, model: &DephasingModel, state: &StateVector, duration: f64, trajectories: usize) -> Result<FidelityReport> {
    model.validate()?;
    check_trajectories(trajectories)?;
    let norm = state.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Unnormalized(norm));
    }
    let mut schedule = PulseSchedule::new("idle");
    schedule.push(Segment::idle(duration));
    let mut evolver = Evolver::new(chain)?;
    evolver.prepare(&schedule)?;
    let ideal = evolver.run_prepared(&schedule, Input::States(vec![state.clone()]), None)?;
    let target = &ideal.final_states[0];
    let outcomes: Vec<(f64, f64)> = (0..trajectories as u64)
        .into_par_iter()
        .map(|k| {
            let noise = NoiseTrajectory::new(model, chain, k, duration);
            let r = evolver.run_prepared(&schedule, Input::States(vec![state.clone()]), Some(&noise))?;
            Ok((target.dotc(&r.final_states[0]).norm_sqr(), r.leakage))
        })
        .collect::<Result<_>>()?;
    let leak = outcomes.iter().map(|o| o.1).fold(0.0, f64::max);
    Ok(FidelityReport::from_samples("noise-immunity", model, duration, outcomes.into_iter().map(|o| o.0).collect(), leak))
}

/// Products of `|0_L>` and `|1_L>` over every block.
pub fn logical_basis(chain: &ChainSpec<f64>) -> Vec<StateVector> {
    let blocks = chain.len();
    (0..1usize << blocks)
        .map(|code| {
            let levels: Vec<usize> = (0..blocks).map(|l| (code >> (blocks - 1 - l)) & 1).collect();
            basis_state(chain.qubits(), frame_index(&levels))
        })
        .collect()
}

/// Process fidelity `|sum_k <ideal_k|noisy_k>|^2 / d^2` of `schedule` over the logical basis, per trajectory.
pub fn gate_under_noise(chain: &ChainSpec<f64>, model: &DephasingModel, schedule: &PulseSchedule, trajectories: usize, options: EvolveOptions) -> Result<FidelityReport> {
    model.validate()?;
    check_trajectories(trajectories)?;
    let inputs = logical_basis(chain);
    let d = inputs.len() as f64;
    let mut evolver = Evolver::new(chain)?.with_options(EvolveOptions { estimate_error: false, check_convergence: false, record_trajectory: false, ..options });
    evolver.prepare(schedule)?;
    let ideal = evolver.run_prepared(schedule, Input::States(inputs.clone()), None)?;
    let duration = schedule.total_duration();
    let outcomes: Vec<(f64, f64)> = (0..trajectories as u64)
        .into_par_iter()
        .map(|k| {
            let noise = NoiseTrajectory::new(model, chain, k, duration);
            let r = evolver.run_prepared(schedule, Input::States(inputs.clone()), Some(&noise))?;
            let overlap: C64 = ideal.final_states.iter().zip(&r.final_states).map(|(a, b)| a.dotc(b)).sum();
            Ok((overlap.norm_sqr() / (d * d), r.leakage))
        })
        .collect::<Result<_>>()?;
    let leak = outcomes.iter().map(|o| o.1).fold(0.0, f64::max);
    Ok(FidelityReport::from_samples(&format!("gate-under-noise:{}", schedule.metadata.gate), model, duration, outcomes.into_iter().map(|o| o.0).collect(), leak))
}
