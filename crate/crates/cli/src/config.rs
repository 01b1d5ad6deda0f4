//! Experiment configuration: a JSON file whose every field is optional, with
//! command-line flags applied on top.
//!
//! ```json
//! {
//!   "device": {"j": 1.0, "jp": 0.5, "blocks": 2},
//!   "gate": {"mu": 1.0, "nu": 1.0, "lambda": 1.5707963267948966,
//!            "epsilon": 0.001, "power": 1, "d": 0.7853981633974483,
//!            "tf": 200.0, "nu_max": 0.2, "ramp": "sin2", "map_nu": 1.0,
//!            "regime_ratio": 50.0, "min_margin": 10.0},
//!   "noise": {"sigma": 0.1, "trajectories": 200, "duration": 1.0,
//!             "process": "static", "tau_c": null, "coupling": "collective"},
//!   "integrator": {"steps": null, "leakage_tol": 1e-8, "tolerance": null},
//!   "stabilizer": {"gammas": [1.0, 2.0, 4.0, 8.0]},
//!   "seed": 0
//! }
//! ```
//!
//! `gate.nu` defaults to 100 for `cz-pulsed` and 1 elsewhere;
//! `integrator.tolerance` defaults per experiment (see [`crate::experiments`]).

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::path::Path;

use clap::ValueEnum;
use dfsblock_core::noise::{DephasingModel, FieldProcess, NoiseCoupling};
use dfsblock_core::RampSpec;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::Subcommand)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// DFS and intersection-space dimensions and invariance commutators
    VerifyEncoding,
    /// X rotation by lambda from a K12 = mu pulse
    GateX,
    /// Relative phase of power Z units with K23 = nu
    GateZ,
    /// Z-unit power reaching lambda within epsilon
    Synthesize,
    /// The |1> to |2> map and its recorded phases
    Map12,
    /// Pulsed controlled phase d, with a scan over nu
    CzPulsed,
    /// Adiabatic controlled phase from a K23 ramp on the neighbouring block
    CzAdiabatic,
    /// Fidelity of encoded states under random dephasing fields
    NoiseImmunity,
    /// Distance of the Gaussian stabilizer from the DFS projector
    StabilizerConvergence,
    /// Search over placements of the two J' edges
    TopologyRegression,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::VerifyEncoding => "verify-encoding",
            Experiment::GateX => "gate-x",
            Experiment::GateZ => "gate-z",
            Experiment::Synthesize => "synthesize",
            Experiment::Map12 => "map12",
            Experiment::CzPulsed => "cz-pulsed",
            Experiment::CzAdiabatic => "cz-adiabatic",
            Experiment::NoiseImmunity => "noise-immunity",
            Experiment::StabilizerConvergence => "stabilizer-convergence",
            Experiment::TopologyRegression => "topology-regression",
        }
    }

    /// Qubits the experiment simulates for the given config.
    pub fn qubits(self, config: &Config) -> usize {
        match self {
            Experiment::VerifyEncoding | Experiment::CzPulsed | Experiment::CzAdiabatic => 8,
            Experiment::NoiseImmunity => 4 * config.device.blocks,
            _ => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RampShape {
    /// `nu_max sin^2(pi t / t_f)`
    Sin2,
    /// Linear up to `nu_max` at `t_f / 2` and back down.
    Triangle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ProcessKind {
    Static,
    Piecewise,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingKind {
    Collective,
    PerQubit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceConfig {
    pub j: f64,
    pub jp: f64,
    pub blocks: usize,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        Self { j: 1.0, jp: 0.5, blocks: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateConfig {
    pub mu: f64,
    pub nu: Option<f64>,
    pub lambda: f64,
    pub epsilon: f64,
    pub power: u64,
    /// Target controlled-phase coefficient of the pulsed gate.
    pub d: f64,
    pub tf: f64,
    pub nu_max: f64,
    pub ramp: RampShape,
    pub map_nu: f64,
    pub regime_ratio: f64,
    pub min_margin: f64,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self {
            mu: 1.0,
            nu: None,
            lambda: FRAC_PI_2,
            epsilon: 1e-3,
            power: 1,
            d: FRAC_PI_4,
            tf: 200.0,
            nu_max: 0.2,
            ramp: RampShape::Sin2,
            map_nu: 1.0,
            regime_ratio: dfsblock_core::gatecomp::DEFAULT_REGIME_RATIO,
            min_margin: dfsblock_core::gatecomp::DEFAULT_MIN_MARGIN,
        }
    }
}

impl GateConfig {
    pub fn ramp_spec(&self) -> RampSpec {
        match self.ramp {
            RampShape::Sin2 => RampSpec::Sin2 { peak: self.nu_max },
            RampShape::Triangle => RampSpec::Table { values: vec![0.0, self.nu_max, 0.0] },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub sigma: f64,
    pub trajectories: usize,
    pub duration: f64,
    pub process: ProcessKind,
    pub tau_c: Option<f64>,
    pub coupling: CouplingKind,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            sigma: 0.1,
            trajectories: dfsblock_core::noise::DEFAULT_TRAJECTORIES,
            duration: 1.0,
            process: ProcessKind::Static,
            tau_c: None,
            coupling: CouplingKind::Collective,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub steps: Option<usize>,
    pub leakage_tol: f64,
    /// Overrides the experiment's headline tolerance.
    pub tolerance: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { steps: None, leakage_tol: 1e-8, tolerance: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilizerConfig {
    pub gammas: Vec<f64>,
}

impl Default for StabilizerConfig {
    fn default() -> Self {
        Self { gammas: vec![1.0, 2.0, 4.0, 8.0] }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub device: DeviceConfig,
    pub gate: GateConfig,
    pub noise: NoiseConfig,
    pub integrator: IntegratorConfig,
    pub stabilizer: StabilizerConfig,
    pub seed: u64,
}

/// Command-line values that replace file values when present.
#[derive(Clone, Debug, Default, PartialEq, clap::Args)]
pub struct Overrides {
    #[arg(long = "J", global = true, allow_negative_numbers = true)]
    pub j: Option<f64>,
    #[arg(long = "Jp", global = true, allow_negative_numbers = true)]
    pub jp: Option<f64>,
    #[arg(long, global = true)]
    pub blocks: Option<usize>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub nu: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    #[arg(long, global = true)]
    pub power: Option<u64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub d: Option<f64>,
    #[arg(long, global = true)]
    pub tf: Option<f64>,
    #[arg(long = "nu-max", global = true, allow_negative_numbers = true)]
    pub nu_max: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub ramp: Option<RampShape>,
    #[arg(long = "map-nu", global = true, allow_negative_numbers = true)]
    pub map_nu: Option<f64>,
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    #[arg(long, global = true)]
    pub trajectories: Option<usize>,
    #[arg(long, global = true)]
    pub duration: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub process: Option<ProcessKind>,
    #[arg(long = "tau-c", global = true)]
    pub tau_c: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub coupling: Option<CouplingKind>,
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

macro_rules! apply {
    ($($src:expr => $dst:expr),* $(,)?) => {
        $(if let Some(v) = $src.clone() { $dst = v.into(); })*
    };
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("invalid config {}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: &Overrides) {
        apply! {
            o.j => self.device.j,
            o.jp => self.device.jp,
            o.blocks => self.device.blocks,
            o.mu => self.gate.mu,
            o.nu => self.gate.nu,
            o.lambda => self.gate.lambda,
            o.epsilon => self.gate.epsilon,
            o.power => self.gate.power,
            o.d => self.gate.d,
            o.tf => self.gate.tf,
            o.nu_max => self.gate.nu_max,
            o.ramp => self.gate.ramp,
            o.map_nu => self.gate.map_nu,
            o.sigma => self.noise.sigma,
            o.trajectories => self.noise.trajectories,
            o.duration => self.noise.duration,
            o.process => self.noise.process,
            o.tau_c => self.noise.tau_c,
            o.coupling => self.noise.coupling,
            o.steps => self.integrator.steps,
            o.tolerance => self.integrator.tolerance,
            o.seed => self.seed,
        }
    }

    /// Fills experiment-dependent defaults so the report records what actually ran.
    pub fn resolve(&mut self, experiment: Experiment) {
        if self.gate.nu.is_none() {
            self.gate.nu = Some(if experiment == Experiment::CzPulsed { 100.0 } else { 1.0 });
        }
    }

    pub fn nu(&self) -> f64 {
        self.gate.nu.unwrap_or(1.0)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |what: &str, v: f64| CliError::Validation(format!("{what} must be finite, got {v}"));
        let g = &self.gate;
        let n = &self.noise;
        let reals = [
            ("J", self.device.j),
            ("J'", self.device.jp),
            ("mu", g.mu),
            ("nu", self.nu()),
            ("lambda", g.lambda),
            ("epsilon", g.epsilon),
            ("d", g.d),
            ("tf", g.tf),
            ("nu_max", g.nu_max),
            ("map_nu", g.map_nu),
            ("regime_ratio", g.regime_ratio),
            ("min_margin", g.min_margin),
            ("sigma", n.sigma),
            ("duration", n.duration),
            ("leakage_tol", self.integrator.leakage_tol),
        ];
        for (what, v) in reals {
            if !v.is_finite() {
                return Err(bad(what, v));
            }
        }
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(CliError::Validation(msg.into())) };
        check(self.device.j != 0.0, "J must be non-zero")?;
        check(self.device.blocks >= 1, "blocks must be at least 1")?;
        check(g.epsilon > 0.0, "epsilon must be positive")?;
        check(g.tf > 0.0, "tf must be positive")?;
        check(n.sigma >= 0.0, "sigma must be non-negative")?;
        check(n.duration > 0.0, "duration must be positive")?;
        check(n.trajectories >= 1, "trajectories must be at least 1")?;
        check(self.integrator.steps != Some(0), "steps must be positive")?;
        check(self.integrator.tolerance.is_none_or(|t| t > 0.0 && t.is_finite()), "tolerance must be positive")?;
        check(!self.stabilizer.gammas.is_empty() && self.stabilizer.gammas.iter().all(|g| g.is_finite() && *g > 0.0), "gammas must be positive")?;
        if n.process == ProcessKind::Piecewise {
            check(n.tau_c.is_some_and(|t| t.is_finite() && t > 0.0), "piecewise noise needs a positive tau_c")?;
        }
        Ok(())
    }

    pub fn dephasing_model(&self) -> DephasingModel {
        let process = match self.noise.process {
            ProcessKind::Static => FieldProcess::Static,
            ProcessKind::Piecewise => FieldProcess::Piecewise { tau_c: self.noise.tau_c.unwrap_or(f64::INFINITY) },
        };
        let coupling = match self.noise.coupling {
            CouplingKind::Collective => NoiseCoupling::Collective,
            CouplingKind::PerQubit => NoiseCoupling::PerQubit,
        };
        DephasingModel { process, coupling, sigma: self.noise.sigma, seed: self.seed }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c: Config = serde_json::from_str("{}").unwrap();
        assert_eq!(c, Config::default());
        assert!(c.validate().is_ok());
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(serde_json::from_str::<Config>(r#"{"device": {"k": 1}}"#).is_err());
    }

    #[test]
    fn flags_override_file() {
        let mut c: Config = serde_json::from_str(r#"{"device": {"j": 2.0, "jp": 0.3}, "seed": 5}"#).unwrap();
        c.apply(&Overrides { jp: Some(0.7), nu: Some(3.0), ..Default::default() });
        assert_eq!((c.device.j, c.device.jp, c.gate.nu, c.seed), (2.0, 0.7, Some(3.0), 5));
    }

    #[test]
    fn nu_default_depends_on_experiment() {
        let mut c = Config::default();
        c.resolve(Experiment::CzPulsed);
        assert_eq!(c.nu(), 100.0);
        let mut c = Config::default();
        c.resolve(Experiment::GateZ);
        assert_eq!(c.nu(), 1.0);
    }

    #[test]
    fn validation_failures() {
        let mut c = Config::default();
        c.device.j = f64::NAN;
        assert!(c.validate().is_err());
        let mut c = Config::default();
        c.noise.process = ProcessKind::Piecewise;
        assert!(c.validate().is_err());
        c.noise.tau_c = Some(0.5);
        assert!(c.validate().is_ok());
    }
}
