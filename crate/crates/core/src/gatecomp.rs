//! Compilation of logical gates into pulse schedules, and the phase and
//! invariant analysis used to check them.
//!
//! Within one block the computational frame is `{|0_L>, |1_L>, |2_L>}`. The
//! tunable edge `(1,2)` rotates `{|0>, |1>}` about X; the edge `(2,3)` drives
//! `{|1>, |2>}` around the axis `n = (2 nu, 0, s) / Omega` with
//! `s = 2(J - J')` and `Omega = sqrt(s^2 + 4 nu^2)`, while idling rotates
//! the same pair about z. Sign conventions: states pick up `exp(i phi)` with
//! `phi = -int E dt`, and `Z = +1` on the first label of every pair.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, Matrix2, Vector3};
use num_complex::Complex64 as C;
use num_traits::Num;
use serde::{Deserialize, Serialize};

use crate::device::{frame_index, ChainSpec};
use crate::dynamics::{EvolveOptions, Evolver, Input};
use crate::operators::basis_state;
use crate::scalar::{circle_distance, wrap_angle};
use crate::schedule::{EdgeKey, PulseSchedule, Ramp, RampSpec, Segment};
use crate::{Error, EvolutionResult, Result};

pub const DEFAULT_POWER_CAP: u64 = 1_000_000_000;
/// Default minimum `|nu| / max(|J|, |J'|)` for the pulsed controlled phase.
pub const DEFAULT_REGIME_RATIO: f64 = 50.0;
pub const DEFAULT_MIN_MARGIN: f64 = 10.0;
/// Simpson intervals for the adiabatic phase integrals.
pub const QUADRATURE_INTERVALS: usize = 4096;
pub const RATIONALITY_MAX_DENOMINATOR: i64 = 1000;
pub const RATIONALITY_TOL: f64 = 1e-12;

const FIXED_BITS: u32 = 60;
const EXHAUSTIVE_LIMIT: u64 = 10_000_000;

fn k12(block: usize) -> EdgeKey {
    EdgeKey::new(block, 1, 2)
}

fn k23(block: usize) -> EdgeKey {
    EdgeKey::new(block, 2, 3)
}

fn finite(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite, got {x}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GateKind {
    XRotation { angle: f64, mu: f64 },
    ZRotation { angle: f64, nu: f64, epsilon: f64 },
    ZUnitPower { power: u64, nu: f64 },
    MapOneToTwo { nu: f64 },
    /// Targets blocks `block` and `block + 1`.
    CzPulsed { nu: f64, d: f64 },
    /// Targets blocks `block` and `block + 1`; `map_nu` drives the 1 <-> 2 maps on `block`.
    CzAdiabatic { ramp: RampSpec, tf: f64, map_nu: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateSpec {
    pub kind: GateKind,
    pub block: usize,
    pub j: f64,
    pub jp: f64,
}

impl GateSpec {
    /// Angles are stored wrapped to `(-pi, pi]`.
    pub fn new(kind: GateKind, block: usize, j: f64, jp: f64) -> Result<Self> {
        finite("J", j)?;
        finite("J'", jp)?;
        let kind = match kind {
            GateKind::XRotation { angle, mu } => GateKind::XRotation { angle: wrap_angle(finite("angle", angle)?), mu },
            GateKind::ZRotation { angle, nu, epsilon } => GateKind::ZRotation { angle: wrap_angle(finite("angle", angle)?), nu, epsilon },
            GateKind::ZUnitPower { power: 0, .. } => return Err(Error::InvalidParameter("power must be at least 1".into())),
            GateKind::CzPulsed { nu, d } => GateKind::CzPulsed { nu, d: wrap_angle(finite("d", d)?) },
            other => other,
        };
        Ok(Self { kind, block, j, jp })
    }

    pub fn compile(&self) -> Result<PulseSchedule> {
        let (b, j, jp) = (self.block, self.j, self.jp);
        match &self.kind {
            GateKind::XRotation { angle, mu } => compile_x_rotation(b, *angle, *mu, jp),
            GateKind::ZRotation { angle, nu, epsilon } => compile_z_rotation(b, *angle, j, jp, *nu, *epsilon).map(|(s, _)| s),
            GateKind::ZUnitPower { power, nu } => compile_z_power(b, j, jp, *nu, *power),
            GateKind::MapOneToTwo { nu } => compile_map_1_to_2(b, j, jp, *nu),
            GateKind::CzPulsed { nu, d } => compile_cz_pulsed(b, j, jp, *nu, *d, DEFAULT_REGIME_RATIO),
            GateKind::CzAdiabatic { ramp, tf, map_nu } => compile_cz_adiabatic(b, j, jp, *map_nu, ramp.clone(), *tf, DEFAULT_MIN_MARGIN).map(|(s, _)| s),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisResult {
    pub power: u64,
    /// `power * theta` wrapped to `(-pi, pi]`.
    pub achieved_angle: f64,
    /// Circle distance between the achieved and requested angle.
    pub error: f64,
    pub evaluations: u64,
}

/// `exp(-i lambda X)` on `{|0_L>, |1_L>}` of `block` from a single `K12 = mu` pulse.
///
/// The duration is taken modulo the period `pi / |mu|`; the recorded global
/// phase `2 J' t` absorbs the sign flips this introduces.
pub fn compile_x_rotation(block: usize, lambda: f64, mu: f64, jp: f64) -> Result<PulseSchedule> {
    finite("lambda", lambda)?;
    if finite("mu", mu)? == 0.0 {
        return Err(Error::InvalidParameter("X rotation needs mu != 0".into()));
    }
    let period = PI / mu.abs();
    let mut t = (lambda / (2.0 * mu)).rem_euclid(period);
    if t >= period {
        t -= period;
    }
    let k = ((2.0 * mu * t - lambda) / PI).round();
    let mut s = PulseSchedule::new("x-rotation");
    s.push(Segment::constant(t, [(k12(block), mu)]).labeled("x"));
    s.metadata.global_phase = wrap_angle(2.0 * jp * t + k * PI);
    s.metadata.predictions.insert("angle".into(), lambda);
    Ok(s)
}

/// `(theta, t)` of one Z unit: a `K23 = nu` pulse lasting a full Rabi period of `{|1>, |2>}`.
pub fn z_unit(j: f64, jp: f64, nu: f64) -> Result<(f64, f64)> {
    let varsigma = 2.0 * (finite("J", j)? - finite("J'", jp)?);
    let omega = varsigma.hypot(2.0 * finite("nu", nu)?);
    if omega == 0.0 {
        return Err(Error::InvalidParameter("z unit needs J != J' or nu != 0".into()));
    }
    Ok((PI * varsigma / omega, TAU / omega))
}

/// `power` Z units on `block` as one constant segment; acts as `exp(-i power theta Z)` on `{|0>, |1>}`.
pub fn compile_z_power(block: usize, j: f64, jp: f64, nu: f64, power: u64) -> Result<PulseSchedule> {
    let (theta, t) = z_unit(j, jp, nu)?;
    let total = power as f64 * t;
    let mut s = PulseSchedule::new("z-unit-power");
    let seg = if nu == 0.0 { Segment::idle(total) } else { Segment::constant(total, [(k23(block), nu)]) };
    s.push(seg.labeled(format!("z^{power}")));
    s.metadata.global_phase = wrap_angle((j + jp) * total);
    s.metadata.predictions.insert("theta".into(), theta);
    s.metadata.predictions.insert("power".into(), power as f64);
    Ok(s)
}

/// `exp(-i lambda Z)` to within `epsilon` on the circle, from synthesized Z-unit powers.
pub fn compile_z_rotation(block: usize, lambda: f64, j: f64, jp: f64, nu: f64, epsilon: f64) -> Result<(PulseSchedule, SynthesisResult)> {
    let (theta, _) = z_unit(j, jp, nu)?;
    let syn = synthesize_z_power(lambda, theta, epsilon)?;
    let mut s = compile_z_power(block, j, jp, nu, syn.power)?;
    s.metadata.gate = "z-rotation".into();
    s.metadata.predictions.insert("angle".into(), lambda);
    s.metadata.predictions.insert("synthesis_error".into(), syn.error);
    Ok((s, syn))
}

/// Fails when `theta / pi` is within `1e-12` of `p/q` for some `q <= 1000`.
pub fn check_irrational(theta: f64) -> Result<()> {
    let x = finite("theta", theta)? / PI;
    for q in 1..=RATIONALITY_MAX_DENOMINATOR {
        let p = (x * q as f64).round();
        if (x - p / q as f64).abs() < RATIONALITY_TOL {
            return Err(Error::SynthesisDegeneracy { p: p as i64, q });
        }
    }
    Ok(())
}

pub fn synthesize_z_power(lambda: f64, theta: f64, epsilon: f64) -> Result<SynthesisResult> {
    synthesize_z_power_capped(lambda, theta, epsilon, DEFAULT_POWER_CAP)
}

/// Smallest `n >= 1` with `|n theta - lambda| < epsilon` on the circle.
///
/// Angles become fixed-point fractions of a turn (`2^-60` resolution), and
/// the first multiple of `theta` landing in the target window is found by a
/// Euclid-style descent over the continued-fraction structure of
/// `theta / 2 pi`. The candidate is then checked by direct multiplication;
/// if rounding defeats the check a bounded exhaustive scan takes over.
pub fn synthesize_z_power_capped(lambda: f64, theta: f64, epsilon: f64, cap: u64) -> Result<SynthesisResult> {
    finite("lambda", lambda)?;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    check_irrational(theta)?;
    let capacity = || Error::SynthesisCapacity { cap, epsilon };
    let mut evaluations = 0u64;
    let finish = |n: u64, evaluations: u64| {
        let achieved = wrap_angle(n as f64 * theta);
        SynthesisResult { power: n, achieved_angle: achieved, error: circle_distance(achieved, lambda), evaluations }
    };
    if epsilon > PI {
        return Ok(finish(1, 1));
    }
    let m: u128 = 1 << FIXED_BITS;
    let fixed = |turns: f64| ((turns.rem_euclid(1.0) * m as f64).round() as u128) % m;
    let a = fixed(theta / TAU);
    let y = fixed(lambda / TAU);
    let half = (((epsilon / TAU) * m as f64).ceil() as u128).saturating_sub(1);
    // a (x + 1) in [y - half, y + half]  <=>  a x in [lo, lo + 2 half]
    let lo = (y + 2 * m - half - a % m) % m;
    let hi = lo + 2 * half;
    let x = if hi < m {
        first_in_window(a, m, lo, hi, &mut evaluations)
    } else {
        let p = first_in_window(a, m, lo, m - 1, &mut evaluations);
        let q = first_in_window(a, m, 0, hi - m, &mut evaluations);
        match (p, q) {
            (Some(p), Some(q)) => Some(p.min(q)),
            (p, q) => p.or(q),
        }
    };
    if let Some(n) = x.map(|x| x + 1).filter(|&n| n <= cap as u128).map(|n| n as u64) {
        let r = finish(n, evaluations);
        if r.error < epsilon {
            return Ok(r);
        }
    }
    let limit = cap.min(EXHAUSTIVE_LIMIT);
    for n in 1..=limit {
        evaluations += 1;
        if circle_distance(n as f64 * theta, lambda) < epsilon {
            return Ok(finish(n, evaluations));
        }
    }
    Err(capacity())
}

/// Minimal `x >= 0` with `l <= (a x mod m) <= r`, for `l <= r < m`.
fn first_in_window(a: u128, m: u128, l: u128, r: u128, evaluations: &mut u64) -> Option<u128> {
    *evaluations += 1;
    if l == 0 {
        return Some(0);
    }
    let a = a % m;
    if a == 0 {
        return None;
    }
    let c = l.div_ceil(a);
    if a * c <= r {
        return Some(c);
    }
    let y = first_in_window(m % a, a, (a - r % a) % a, (a - l % a) % a, evaluations)?;
    Some((l + m * y).div_ceil(a))
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum BlochAxis {
    Z,
    /// The pulse axis `n`, possibly reversed.
    Pulse,
}

fn rotation(axis: Vector3<f64>, angle: f64) -> Matrix2<C> {
    let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    let i = C::new(0.0, 1.0);
    Matrix2::new(
        C::new(c, 0.0) - i * s * axis.z,
        -i * s * C::new(axis.x, -axis.y),
        -i * s * C::new(axis.x, axis.y),
        C::new(c, 0.0) + i * s * axis.z,
    )
}

fn bloch_of_first(u: &Matrix2<C>) -> Vector3<f64> {
    let (a, b) = (u[(0, 0)], u[(1, 0)]);
    let ab = a.conj() * b;
    Vector3::new(2.0 * ab.re, 2.0 * ab.im, a.norm_sqr() - b.norm_sqr())
}

/// Rotation sequence about `z` and the pulse axis taking `{|1>, |2>}` to `X` up to phase.
///
/// With `m` the sign of `n` whose tilt `a` from z is acute, stage `k` of
/// `N = ceil(pi / 2a)` moves the Bloch vector of `|1>` from polar angle
/// `(k-1) pi / N` to `k pi / N`: a z turn first sets its angle to `m` to
/// `rho = clamp(theta' - a, |theta - a|, theta + a)`, which puts the target
/// polar angle on the cone about `m`, then a rotation about `m` lands on it.
/// A last z turn fixes the relative phase.
fn map_rotations(varsigma: f64, nu: f64) -> (Vec<(BlochAxis, f64)>, f64, Matrix2<C>) {
    let omega = varsigma.hypot(2.0 * nu);
    let n = Vector3::new(2.0 * nu / omega, 0.0, varsigma / omega);
    let sign = if n.z >= 0.0 { 1.0 } else { -1.0 };
    let m = n * sign;
    let tilt = m.z.clamp(-1.0, 1.0).acos();
    let stages = ((PI / (2.0 * tilt)) - 1e-12).ceil().max(1.0) as usize;
    let z = Vector3::z();
    let m_azimuth = m.y.atan2(m.x);
    let mut ops = Vec::new();
    let mut u = Matrix2::<C>::identity();
    for k in 1..=stages {
        let target_polar = PI * k as f64 / stages as f64;
        let v = bloch_of_first(&u);
        let polar = v.z.clamp(-1.0, 1.0).acos();
        if polar.sin() > 1e-12 {
            let rho = (target_polar - tilt).clamp((polar - tilt).abs(), polar + tilt);
            let cos_dihedral = ((rho.cos() - polar.cos() * tilt.cos()) / (polar.sin() * tilt.sin())).clamp(-1.0, 1.0);
            let wanted = m_azimuth + cos_dihedral.acos();
            let turn = (wanted - v.y.atan2(v.x)).rem_euclid(TAU);
            ops.push((BlochAxis::Z, turn));
            u = rotation(z, turn) * u;
        }
        let v = bloch_of_first(&u);
        // z(phi) = c0 + p cos(phi) + q sin(phi) under rotation about m
        let c0 = m.z * m.dot(&v);
        let p = v.z - c0;
        let q = m.cross(&v).z;
        let amp = p.hypot(q);
        let delta = q.atan2(p);
        // the pole is the lowest point of the last cone, so take the extremum exactly
        let spread = if k == stages {
            PI
        } else if amp > 0.0 {
            ((target_polar.cos() - c0) / amp).clamp(-1.0, 1.0).acos()
        } else {
            0.0
        };
        let options = [(delta + spread).rem_euclid(TAU), (delta - spread).rem_euclid(TAU)];
        let phi = if options[0] <= options[1] { options[0] } else { options[1] };
        ops.push((BlochAxis::Pulse, phi));
        u = rotation(m, phi) * u;
    }
    let chi = (u[(0, 1)] / u[(1, 0)]).arg();
    ops.push((BlochAxis::Z, chi.rem_euclid(TAU)));
    u = rotation(z, chi) * u;
    (ops, sign, u)
}

/// Pulse and idle sequence swapping `|1_L>` and `|2_L>` of `block` up to phases.
///
/// `|0_L>` only picks up the phase recorded as the `level0_phase` by-product;
/// the phase of the `|1> -> |2>` amplitude is the schedule's global phase.
pub fn compile_map_1_to_2(block: usize, j: f64, jp: f64, nu: f64) -> Result<PulseSchedule> {
    compile_map(block, j, jp, nu, "map-1-to-2")
}

/// Inverse map; `X` is its own inverse, so the sequence is the same.
pub fn compile_map_2_to_1(block: usize, j: f64, jp: f64, nu: f64) -> Result<PulseSchedule> {
    compile_map(block, j, jp, nu, "map-2-to-1")
}

fn compile_map(block: usize, j: f64, jp: f64, nu: f64, gate: &str) -> Result<PulseSchedule> {
    let varsigma = 2.0 * (finite("J", j)? - finite("J'", jp)?);
    if finite("nu", nu)? == 0.0 || varsigma == 0.0 {
        return Err(Error::InvalidParameter("the 1 <-> 2 map needs nu != 0 and J != J' (otherwise the two axes coincide)".into()));
    }
    let omega = varsigma.hypot(2.0 * nu);
    let (ops, sign, _) = map_rotations(varsigma, nu);
    let mut s = PulseSchedule::new(gate);
    for (axis, angle) in ops {
        match axis {
            BlochAxis::Z => s.push(Segment::idle((angle / (2.0 * varsigma)).rem_euclid(PI / varsigma.abs())).labeled("z")),
            BlochAxis::Pulse => s.push(Segment::constant((sign * angle / (2.0 * omega)).rem_euclid(PI / omega), [(k23(block), nu)]).labeled("n")),
        }
    }
    // traceless part of the sector evolution, rebuilt from the emitted durations
    let n = Vector3::new(2.0 * nu / omega, 0.0, varsigma / omega);
    let u = s.segments.iter().fold(Matrix2::<C>::identity(), |u, seg| {
        let r = if seg.couplings.is_empty() { rotation(Vector3::z(), 2.0 * varsigma * seg.duration) } else { rotation(n, 2.0 * omega * seg.duration) };
        r * u
    });
    let x = Matrix2::new(C::new(0.0, 0.0), C::new(1.0, 0.0), C::new(1.0, 0.0), C::new(0.0, 0.0));
    let phase = u[(1, 0)] / u[(1, 0)].norm();
    let defect = (u - x * phase).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if defect > 1e-9 {
        return Err(Error::Model(format!("map sequence misses the swap by {defect:e}")));
    }
    let total = s.total_duration();
    s.metadata.global_phase = wrap_angle(2.0 * j * total + phase.arg());
    s.metadata.byproducts.insert("level0_phase".into(), wrap_angle(2.0 * jp * total));
    s.metadata.predictions.insert("tilt".into(), (2.0 * nu).atan2(varsigma));
    Ok(s)
}

/// Coefficients of `exp(i(a + b z_m + c z_n + d z_m z_n))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseCoefficients<N> {
    pub a: N,
    pub b: N,
    pub c: N,
    pub d: N,
}

/// Inverts `phi_mn = a + b z_m + c z_n + d z_m z_n` for `z = (+1, -1)` on
/// `(first, second)` labels of each pair. Exact in any field.
pub fn fit_phase_table<N: Num + Clone>(p00: N, p01: N, p10: N, p11: N) -> PhaseCoefficients<N> {
    let four = N::one() + N::one() + N::one() + N::one();
    PhaseCoefficients {
        a: (p00.clone() + p01.clone() + p10.clone() + p11.clone()) / four.clone(),
        b: (p00.clone() + p01.clone() - p10.clone() - p11.clone()) / four.clone(),
        c: (p00.clone() - p01.clone() + p10.clone() - p11.clone()) / four.clone(),
        d: (p00 - p01 - p10 + p11) / four,
    }
}

/// Fit for the adiabatic controlled phase: `m in {0, 2}` labels block `L`, `n in {0, 1}` block `L+1`.
pub fn fit_phase_coefficients<N: Num + Clone>(phases: &BTreeMap<(u8, u8), N>) -> Result<PhaseCoefficients<N>> {
    let get = |m: u8, n: u8| phases.get(&(m, n)).cloned().ok_or(Error::MissingPhase(m, n));
    Ok(fit_phase_table(get(0, 0)?, get(0, 1)?, get(2, 0)?, get(2, 1)?))
}

/// Ideal phases of the pulsed sequence in the limit of perfect flips.
pub fn pulsed_cz_phases(j: f64, jp: f64, nu: f64, tau: f64) -> BTreeMap<(u8, u8), f64> {
    let tf = PI / (4.0 * nu.abs());
    let single = |level: u8| match level {
        0 => 4.0 * jp * tf + 2.0 * jp * tau,
        _ => PI + 4.0 * j * tf + (4.0 * j - 2.0 * jp) * tau,
    };
    let mut out = BTreeMap::new();
    for m in 0..2u8 {
        for n in 0..2u8 {
            let coupling = if m == 1 && n == 1 { 4.0 * j * tau } else { 0.0 };
            out.insert((m, n), single(m) + single(n) + coupling);
        }
    }
    out
}

/// Flip both blocks to `{|0>, |2>}`, wait `tau = d / J`, flip back.
///
/// On `{|0>, |1>}` of each block the result approaches
/// `exp(i(a + b(Z_L + Z_L+1) + d Z_L Z_L+1))`, with `d = J tau` and the
/// by-products `a`, `b` recorded for compensation. Emits a regime warning
/// when `|nu| / max(|J|, |J'|)` is below `regime_ratio`.
pub fn compile_cz_pulsed(block: usize, j: f64, jp: f64, nu: f64, d: f64, regime_ratio: f64) -> Result<PulseSchedule> {
    finite("d", d)?;
    finite("J'", jp)?;
    if finite("J", j)? == 0.0 || finite("nu", nu)? == 0.0 {
        return Err(Error::InvalidParameter("pulsed controlled phase needs J != 0 and nu != 0".into()));
    }
    let t_flip = PI / (4.0 * nu.abs());
    let tau = (d / j).rem_euclid(PI / j.abs());
    let flip = Segment::constant(t_flip, [(k23(block), nu), (k23(block + 1), nu)]);
    let mut s = PulseSchedule::new("cz-pulsed");
    s.push(flip.clone().labeled("flip"));
    s.push(Segment::idle(tau).labeled("wait"));
    s.push(flip.labeled("unflip"));
    let ratio = nu.abs() / j.abs().max(jp.abs());
    if ratio < regime_ratio {
        s.metadata.warnings.push(format!("|nu|/max(|J|,|J'|) = {ratio:.3} is below {regime_ratio}; flips are imperfect"));
    }
    let phases = pulsed_cz_phases(j, jp, nu, tau);
    let fit = fit_phase_table(phases[&(0, 0)], phases[&(0, 1)], phases[&(1, 0)], phases[&(1, 1)]);
    s.metadata.byproducts.insert("a".into(), wrap_angle(fit.a));
    s.metadata.byproducts.insert("b".into(), wrap_angle(fit.b));
    s.metadata.byproducts.insert("c".into(), wrap_angle(fit.c));
    s.metadata.predictions.insert("d".into(), j * tau);
    s.metadata.predictions.insert("tau".into(), tau);
    s.metadata.predictions.insert("ratio".into(), ratio);
    Ok(s)
}

/// Quadrature predictions for the adiabatic controlled phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticPrediction {
    pub eta: f64,
    pub kappa: f64,
    /// `(kappa - eta) / 4`
    pub d: f64,
    /// `(1/4) int J nu^2 / ((J' - 2J)(J' - J)) dt`; equal to `d`.
    pub theta: f64,
    pub margin: f64,
}

/// Composite Simpson rule with `intervals` (rounded up to even) subintervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals.max(2).next_multiple_of(2);
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|k| f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(a) + f(b) + inner) * h / 3.0
}

pub fn adiabatic_predictions(j: f64, jp: f64, ramp: &dyn Ramp, tf: f64) -> Result<AdiabaticPrediction> {
    let margin = crate::dynamics::adiabaticity_margin(j, jp, ramp, tf)?;
    let (g1, g2) = (jp - j, jp - 2.0 * j);
    let nu2 = |t: f64| ramp.value(t, tf).powi(2);
    let eta = simpson(|t| nu2(t) / g1, 0.0, tf, QUADRATURE_INTERVALS);
    let kappa = simpson(|t| nu2(t) / g2, 0.0, tf, QUADRATURE_INTERVALS);
    let theta = 0.25 * simpson(|t| j * nu2(t) / (g2 * g1), 0.0, tf, QUADRATURE_INTERVALS);
    let d = (kappa - eta) / 4.0;
    if (d - theta).abs() > 1e-12 * d.abs().max(1.0) {
        return Err(Error::Integration(format!("quadrature identity broken: d = {d}, theta = {theta}")));
    }
    Ok(AdiabaticPrediction { eta, kappa, d, theta, margin })
}

/// Map `|1>` to `|2>` on `block`, ramp `K23` of `block + 1` over `tf`, map back.
pub fn compile_cz_adiabatic(block: usize, j: f64, jp: f64, map_nu: f64, ramp: RampSpec, tf: f64, min_margin: f64) -> Result<(PulseSchedule, AdiabaticPrediction)> {
    if !ramp.is_finite() || !(finite("t_f", tf)? > 0.0) {
        return Err(Error::InvalidParameter("ramp must be finite and t_f positive".into()));
    }
    if ramp.value(0.0, tf).abs() > 1e-12 || ramp.value(tf, tf).abs() > 1e-12 {
        return Err(Error::InvalidParameter("ramp must start and end at 0".into()));
    }
    let pred = adiabatic_predictions(j, jp, &ramp, tf)?;
    if pred.margin < min_margin {
        return Err(Error::Adiabaticity { margin: pred.margin, required: min_margin });
    }
    let map = compile_map_1_to_2(block, j, jp, map_nu)?;
    let unmap = compile_map_2_to_1(block, j, jp, map_nu)?;
    let mut s = PulseSchedule::new("cz-adiabatic");
    s.extend(&map);
    s.push(Segment::ramped(tf, k23(block + 1), ramp).labeled("ramp"));
    s.extend(&unmap);
    s.metadata.global_phase = wrap_angle(s.metadata.global_phase);
    for (k, v) in [("eta", pred.eta), ("kappa", pred.kappa), ("d", pred.d), ("theta", pred.theta), ("margin", pred.margin)] {
        s.metadata.predictions.insert(k.into(), v);
    }
    Ok((s, pred))
}

/// Total phases of `|m>_L |n>_L+1`, `m in {0, 2}`, `n in {0, 1}`, through the ramp stage alone.
pub fn simulate_phase_table(j: f64, jp: f64, ramp: &RampSpec, tf: f64, steps: Option<usize>) -> Result<(BTreeMap<(u8, u8), f64>, EvolutionResult)> {
    let chain = ChainSpec::uniform(2, j, jp)?;
    let mut s = PulseSchedule::new("ramp");
    s.push(Segment::ramped(tf, k23(1), ramp.clone()));
    let labels = [(0u8, 0u8), (0, 1), (2, 0), (2, 1)];
    let inputs = labels.iter().map(|&(m, n)| basis_state(8, frame_index(&[m as usize, n as usize]))).collect();
    let options = EvolveOptions { steps, estimate_error: true, ..EvolveOptions::default() };
    let r = Evolver::new(&chain)?.with_options(options).run(&s, Input::States(inputs), None)?;
    let table = labels.iter().zip(&r.total_phase).map(|(&k, &p)| (k, p)).collect();
    Ok((table, r))
}

/// `<out|U|in>` over all products of `levels` on every block of `chain`.
pub fn logical_unitary(chain: &ChainSpec<f64>, schedule: &PulseSchedule, levels: &[usize], options: EvolveOptions) -> Result<(DMatrix<C>, EvolutionResult)> {
    let blocks = chain.len();
    let count = levels.len().pow(blocks as u32);
    let index = |mut code: usize| {
        let mut ls = vec![0; blocks];
        for l in (0..blocks).rev() {
            ls[l] = levels[code % levels.len()];
            code /= levels.len();
        }
        frame_index(&ls)
    };
    let rows: Vec<usize> = (0..count).map(index).collect();
    let inputs = rows.iter().map(|&i| basis_state(chain.qubits(), i)).collect();
    let r = Evolver::new(chain)?.with_options(options).run(schedule, Input::States(inputs), None)?;
    Ok((r.amplitudes(&rows), r))
}

/// `|Tr(V^dag U)|^2 / dim^2` for the diagonal unitary `V` closest to `U`, with `V`'s phases.
pub fn diagonal_fit_fidelity(u: &DMatrix<C>) -> (f64, Vec<f64>) {
    let n = u.nrows() as f64;
    let phases = u.diagonal().iter().map(|z| z.arg()).collect();
    let overlap: f64 = u.diagonal().iter().map(|z| z.norm()).sum();
    ((overlap / n).powi(2), phases)
}

/// Local invariants of a two-qubit gate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MakhlinInvariants {
    pub g1_re: f64,
    pub g1_im: f64,
    pub g2: f64,
}

impl MakhlinInvariants {
    /// `d in [0, pi/4]` of the equivalent `exp(i d ZZ)`, assuming the gate is in that family.
    pub fn zz_coefficient(&self) -> f64 {
        0.5 * self.g1_re.hypot(self.g1_im).sqrt().min(1.0).acos()
    }
}

/// Invariants `G1 = tr^2(m) / (16 det U)` and `G2 = (tr^2 m - tr m^2) / (4 det U)`,
/// `m = U_B^T U_B` in the magic basis, of the unitary nearest to `u`.
pub fn makhlin_invariants(u: &DMatrix<C>) -> Result<MakhlinInvariants> {
    if u.shape() != (4, 4) {
        return Err(Error::DimensionMismatch { left: 4, right: u.nrows() });
    }
    let svd = u.clone().svd(true, true);
    let (Some(w), Some(vt)) = (svd.u, svd.v_t) else {
        return Err(Error::Model("SVD failed".into()));
    };
    let unitary = w * vt;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (o, one, i) = (C::new(0.0, 0.0), C::new(s, 0.0), C::new(0.0, s));
    let q = DMatrix::from_row_slice(4, 4, &[one, o, o, i, o, i, one, o, o, i, -one, o, one, o, o, -i]);
    let ub = q.adjoint() * &unitary * &q;
    let m = ub.transpose() * &ub;
    let det = unitary.determinant();
    let tr = m.trace();
    let g1 = tr * tr / (det * 16.0);
    let g2 = (tr * tr - (&m * &m).trace()) / (det * 4.0);
    Ok(MakhlinInvariants { g1_re: g1.re, g1_im: g1.im, g2: g2.re })
}

/// Appends Z units to `schedule` implementing `exp(-i angle Z)` on `block`.
pub fn append_z_compensation(schedule: &mut PulseSchedule, block: usize, angle: f64, j: f64, jp: f64, nu: f64, epsilon: f64) -> Result<SynthesisResult> {
    let (z, syn) = compile_z_rotation(block, angle, j, jp, nu, epsilon)?;
    schedule.extend(&z);
    schedule.metadata.global_phase = wrap_angle(schedule.metadata.global_phase);
    schedule.metadata.byproducts.insert(format!("compensated_b{block}"), angle);
    Ok(syn)
}
