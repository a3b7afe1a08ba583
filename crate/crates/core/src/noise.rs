//! Device noise layered onto the ideal pipeline: depolarizing gate errors,
//! T2 dephasing, ancilla readout confusion and syndrome-dependent shot loss.
//!
//! Register layout: qubit 0 = A, 1 = B (the code qubits), 2 and 3 are the
//! ancillas that flag damping on A and B.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channels::{amplitude_damping, depolarizing, phase_damping, DampingParam, LabeledChannel};
use crate::circuits::{cry_angle, Gate};
use crate::code::{encode, syndrome_branches_matrix, EncodingIsometry, Syndrome, SyndromeBranch};
use crate::error::{Error, Result};
use crate::qmat::{embed, gates, partial_trace, tol, CMatrix, DensityMatrix, PureState};
use crate::recovery::{generic_polar_recovery, scheme_ops, SchemeKind};

const IBMQ: &str = include_str!("../../../presets/ibmq.json");
const OPTICAL: &str = include_str!("../../../presets/optical.json");
const NMR: &str = include_str!("../../../presets/nmr.json");

pub const PRESET_NAMES: [&str; 3] = ["ibmq", "optical", "nmr"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateDurations {
    pub single: f64,
    pub cnot: f64,
    #[serde(default)]
    pub buffer: f64,
    /// Overrides the lumped circuit time when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total: Option<f64>,
}

impl Default for GateDurations {
    fn default() -> Self {
        Self { single: 100.0, cnot: 348.0, buffer: 20.0, total: None }
    }
}

impl GateDurations {
    pub fn slot(&self, two_qubit: bool) -> f64 {
        let g = if two_qubit { self.cnot } else { self.single };
        g + 2.0 * self.buffer
    }

    /// Encoder (CNOT + 2 single) plus recovery (CNOT + 5 single slots).
    pub fn lumped_total(&self) -> f64 {
        self.total
            .unwrap_or_else(|| 2.0 * self.slot(true) + 7.0 * self.slot(false))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Mechanisms {
    pub gate_noise: bool,
    pub dephasing: bool,
    pub readout: bool,
    pub shot_loss: bool,
    /// Realize the damping channel with the noisy controlled-rotation gadget.
    pub channel_gates: bool,
    /// Dephase after every gate instead of once over the whole schedule.
    pub interleaved_dephasing: bool,
}

impl Default for Mechanisms {
    fn default() -> Self {
        Self {
            gate_noise: true,
            dephasing: true,
            readout: true,
            shot_loss: true,
            channel_gates: false,
            interleaved_dephasing: false,
        }
    }
}

impl Mechanisms {
    pub fn none() -> Self {
        Self {
            gate_noise: false,
            dephasing: false,
            readout: false,
            shot_loss: false,
            channel_gates: false,
            interleaved_dephasing: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Per qubit: A, B, ancilla of A, ancilla of B.
    pub single_gate_error: Vec<f64>,
    /// Keyed by qubit pair, e.g. `"0-1"`. Missing pairs fall back to `"0-1"`.
    pub two_gate_error: BTreeMap<String, f64>,
    pub readout_error: Vec<f64>,
    pub t2_ns: Vec<f64>,
    #[serde(default)]
    pub gate_durations_ns: GateDurations,
    /// Per syndrome in the order (0,0), (0,1), (1,0), (1,1).
    pub shot_survival: Vec<f64>,
    #[serde(default)]
    pub enabled: Mechanisms,
}

impl NoiseModel {
    /// All rates zero and every mechanism off.
    pub fn ideal() -> Self {
        Self {
            name: "none".into(),
            description: None,
            single_gate_error: vec![0.0; 4],
            two_gate_error: BTreeMap::from([("0-1".to_string(), 0.0)]),
            readout_error: vec![0.0; 4],
            t2_ns: vec![f64::MAX; 4],
            gate_durations_ns: GateDurations::default(),
            shot_survival: vec![1.0; 4],
            enabled: Mechanisms::none(),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let model: NoiseModel =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("noise model: {e}")))?;
        model.validate()?;
        Ok(model)
    }

    /// Reads a model file; the name defaults to the file stem.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut model = Self::from_json_str(&text)?;
        if model.name.is_empty() {
            model.name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
        }
        Ok(model)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let text = match name {
            "ibmq" => IBMQ,
            "optical" => OPTICAL,
            "nmr" => NMR,
            _ => return Err(Error::Config(format!("unknown preset '{name}'"))),
        };
        let mut model = Self::from_json_str(text)?;
        model.name = name.to_string();
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let rate = |what: &str, x: f64| {
            if (0.0..=1.0).contains(&x) {
                Ok(())
            } else {
                Err(Error::Config(format!("{what} {x} not in [0, 1]")))
            }
        };
        let four = |what: &str, v: &[f64]| {
            if v.len() == 4 {
                Ok(())
            } else {
                Err(Error::Config(format!("{what} needs 4 entries, got {}", v.len())))
            }
        };
        four("single_gate_error", &self.single_gate_error)?;
        four("readout_error", &self.readout_error)?;
        four("t2_ns", &self.t2_ns)?;
        four("shot_survival", &self.shot_survival)?;
        for &x in &self.single_gate_error {
            rate("single_gate_error", x)?;
        }
        for &x in &self.readout_error {
            rate("readout_error", x)?;
        }
        if !self.two_gate_error.contains_key("0-1") {
            return Err(Error::Config("two_gate_error needs a \"0-1\" entry".into()));
        }
        for (k, &x) in &self.two_gate_error {
            parse_pair(k)?;
            rate("two_gate_error", x)?;
        }
        for &t in &self.t2_ns {
            if !(t > 0.0) {
                return Err(Error::Config(format!("t2_ns {t} must be positive")));
            }
        }
        for &s in &self.shot_survival {
            if !(s > 0.0 && s <= 1.0) {
                return Err(Error::Config(format!("shot_survival {s} not in (0, 1]")));
            }
        }
        let d = &self.gate_durations_ns;
        for x in [d.single, d.cnot, d.buffer, d.total.unwrap_or(0.0)] {
            if !(x >= 0.0) || !x.is_finite() {
                return Err(Error::Config(format!("gate duration {x} must be nonnegative")));
            }
        }
        Ok(())
    }

    pub fn p1(&self, q: usize) -> f64 {
        if self.enabled.gate_noise {
            self.single_gate_error[q]
        } else {
            0.0
        }
    }

    pub fn p2(&self, a: usize, b: usize) -> f64 {
        if !self.enabled.gate_noise {
            return 0.0;
        }
        let (lo, hi) = (a.min(b), a.max(b));
        self.two_gate_error
            .get(&format!("{lo}-{hi}"))
            .or_else(|| self.two_gate_error.get("0-1"))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn readout_eps(&self) -> [f64; 2] {
        if self.enabled.readout {
            [self.readout_error[2], self.readout_error[3]]
        } else {
            [0.0, 0.0]
        }
    }

    pub fn survival(&self) -> [f64; 4] {
        if self.enabled.shot_loss {
            [self.shot_survival[0], self.shot_survival[1], self.shot_survival[2], self.shot_survival[3]]
        } else {
            [1.0; 4]
        }
    }

    fn dephasing_factor(&self, q: usize, duration: f64) -> f64 {
        (-duration / self.t2_ns[q]).exp()
    }
}

fn parse_pair(key: &str) -> Result<(usize, usize)> {
    let bad = || Error::Config(format!("bad qubit pair key '{key}'"));
    let (a, b) = key.split_once('-').ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a == b || a > 3 || b > 3 {
        return Err(bad());
    }
    Ok((a, b))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecoherenceEstimate {
    pub duration: f64,
    pub t2: f64,
    pub p_sys: f64,
}

/// `P_sys = ½ − ½·exp(−2t/T2)`.
pub fn decoherence_estimate(duration: f64, t2: f64) -> Result<DecoherenceEstimate> {
    if !(t2 > 0.0) {
        return Err(Error::OutOfRange(format!("T2 must be positive, got {t2}")));
    }
    if !(duration >= 0.0) {
        return Err(Error::OutOfRange(format!("duration must be nonnegative, got {duration}")));
    }
    Ok(DecoherenceEstimate {
        duration,
        t2,
        p_sys: 0.5 - 0.5 * (-2.0 * duration / t2).exp(),
    })
}

/// T2 for which `decoherence_estimate(duration, T2)` equals `p_sys`.
pub fn t2_for_error(duration: f64, p_sys: f64) -> Result<f64> {
    if !(p_sys > 0.0 && p_sys < 0.5) || !(duration > 0.0) {
        return Err(Error::OutOfRange(format!("cannot invert p={p_sys} at t={duration}")));
    }
    Ok(-2.0 * duration / (1.0 - 2.0 * p_sys).ln())
}

fn check_distribution(p: &[f64]) -> Result<()> {
    if p.iter().any(|&x| !(x >= -1e-12)) {
        return Err(Error::Distribution("negative or NaN entry".into()));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::Distribution(format!("sums to {total}")));
    }
    Ok(())
}

/// Independent bit flips on the two ancilla readouts. Index = 2·i + j.
pub fn readout_confuse(probs: &[f64; 4], eps: [f64; 2]) -> Result<[f64; 4]> {
    check_distribution(probs)?;
    for e in eps {
        if !(0.0..=1.0).contains(&e) {
            return Err(Error::OutOfRange(format!("flip rate {e}")));
        }
    }
    let mut out = [0.0; 4];
    for (m, slot) in out.iter_mut().enumerate() {
        for (o, &p) in probs.iter().enumerate() {
            *slot += confusion(m, o, eps) * p;
        }
    }
    Ok(out)
}

/// `P(read m | true o)` for syndrome indices.
fn confusion(m: usize, o: usize, eps: [f64; 2]) -> f64 {
    let flip = |bit: usize, e: f64| if (m >> bit) & 1 != (o >> bit) & 1 { e } else { 1.0 - e };
    flip(1, eps[0]) * flip(0, eps[1])
}

/// Measured (∝ p·survival) and ideal (= p) syndrome distributions.
pub fn shot_loss_reweight(branches: &[SyndromeBranch], survival: &[f64; 4]) -> Result<(Vec<f64>, Vec<f64>)> {
    if survival.iter().any(|&s| !(0.0..=1.0).contains(&s)) {
        return Err(Error::OutOfRange("survival factors must lie in [0, 1]".into()));
    }
    let ideal: Vec<f64> = branches.iter().map(|b| b.prob).collect();
    let raw: Vec<f64> = branches
        .iter()
        .map(|b| b.prob * survival[b.syndrome.index()])
        .collect();
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return Err(Error::Distribution("no shots survive".into()));
    }
    Ok((raw.iter().map(|x| x / total).collect(), ideal))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Weighting {
    /// Syndrome probability times survival, as an experiment would record.
    #[default]
    Measured,
    /// Exact syndrome probability.
    Ideal,
}

/// One post-selected outcome of the noisy pipeline.
#[derive(Clone, Debug)]
pub struct PipelineBranch {
    /// `None` for the uncorrected channel, which has no syndrome.
    pub syndrome: Option<Syndrome>,
    /// Probability of reading this syndrome (after readout confusion).
    pub prob: f64,
    pub survival: f64,
    /// Decoded single-qubit output; `None` when `prob` is negligible.
    pub state: Option<DensityMatrix>,
    /// Weight lost outside the recovery isometry (generic scheme only).
    pub leaked: f64,
}

impl PipelineBranch {
    pub fn weight(&self, w: Weighting) -> f64 {
        match w {
            Weighting::Measured => self.prob * self.survival,
            Weighting::Ideal => self.prob,
        }
    }
}

/// Combines branches into the reconstructed single-qubit state.
pub fn combine(branches: &[PipelineBranch], weighting: Weighting) -> Result<DensityMatrix> {
    let mut out = CMatrix::zeros(2, 2);
    let mut total = 0.0;
    for b in branches {
        if let Some(s) = &b.state {
            let w = b.weight(weighting);
            out = &out + &s.matrix().scale_real(w);
            total += w;
        }
    }
    if total <= 0.0 {
        return Err(Error::ZeroProbability);
    }
    Ok(DensityMatrix::from_matrix_unchecked(out.scale_real(1.0 / total)))
}

// Mutable register state threaded through the noisy circuit.
struct Register<'a> {
    m: CMatrix,
    width: usize,
    model: &'a NoiseModel,
}

impl Register<'_> {
    fn gate(&mut self, g: Gate) {
        let u = g.embedded(self.width).expect("gate within register");
        self.m = u.sandwich(&self.m);
        let qs = g.qubits();
        if g.is_two_qubit() {
            let p = self.model.p2(qs[0], qs[1]);
            if p > 0.0 {
                self.channel(&depolarizing(p, 2).expect("rate validated"), &qs);
            }
        } else {
            let p = self.model.p1(qs[0]);
            if p > 0.0 {
                self.channel(&depolarizing(p, 1).expect("rate validated"), &qs);
            }
        }
        if self.model.enabled.dephasing && self.model.enabled.interleaved_dephasing {
            let d = self.model.gate_durations_ns.slot(g.is_two_qubit());
            let live: Vec<usize> = (0..self.width.min(2)).collect();
            for q in live {
                self.dephase(q, d);
            }
        }
    }

    fn local(&mut self, m: &CMatrix, q: usize) {
        if m.max_abs_diff(&gates::i2()) > 1e-14 {
            self.gate(Gate::U { matrix: m.clone(), qubit: q });
        }
    }

    fn channel(&mut self, ch: &LabeledChannel, targets: &[usize]) {
        let full = ch.embedded(self.width, targets).expect("channel within register");
        self.m = full.apply_matrix(&self.m).expect("matching dimension");
    }

    fn dephase(&mut self, q: usize, duration: f64) {
        let f = self.model.dephasing_factor(q, duration);
        if f < 1.0 {
            self.channel(&phase_damping(f), &[q]);
        }
    }
}

/// Raw (pre-readout) subnormalized two-qubit states per true syndrome.
fn damped_branches(reg: Register<'_>, gamma: DampingParam) -> Result<[CMatrix; 4]> {
    if !reg.model.enabled.channel_gates {
        let b = syndrome_branches_matrix(&reg.m, gamma)?;
        return Ok([0, 1, 2, 3].map(|k| b[k].state.matrix().clone()));
    }
    let model = reg.model;
    let theta = cry_angle(gamma);
    let mut big = Register {
        m: reg.m.kron(DensityMatrix::basis(2, 0).matrix()),
        width: 4,
        model,
    };
    big.gate(Gate::CRy { theta, control: 0, target: 2 });
    big.gate(Gate::Cnot { control: 2, target: 0 });
    big.gate(Gate::CRy { theta, control: 1, target: 3 });
    big.gate(Gate::Cnot { control: 3, target: 1 });
    let mut out: [CMatrix; 4] = std::array::from_fn(|_| CMatrix::zeros(4, 4));
    for (k, slot) in out.iter_mut().enumerate() {
        let proj = [gates::proj0(), gates::proj1()];
        let pa = embed(&proj[k >> 1], 4, &[2])?;
        let pb = embed(&proj[k & 1], 4, &[3])?;
        let m = (&pb * &pa).sandwich(&big.m);
        *slot = partial_trace(&m, &[0, 1])?;
    }
    Ok(out)
}

/// Per-syndrome outputs of the noisy pipeline for one input state.
pub fn pipeline_branches(
    scheme: SchemeKind,
    gamma: DampingParam,
    model: &NoiseModel,
    input: &PureState,
) -> Result<Vec<PipelineBranch>> {
    if input.nqubits() != 1 {
        return Err(Error::Dimension("pipeline input must be a single qubit".into()));
    }
    if scheme == SchemeKind::NoCorrection {
        return Ok(vec![uncorrected_branch(gamma, model, input)?]);
    }

    let mut reg = Register {
        m: input.projector().kron(DensityMatrix::basis(1, 0).matrix()),
        width: 2,
        model,
    };
    reg.gate(Gate::Cnot { control: 0, target: 1 });
    reg.gate(Gate::H(0));
    reg.gate(Gate::H(1));
    if model.enabled.dephasing && !model.enabled.interleaved_dephasing {
        let total = model.gate_durations_ns.lumped_total();
        reg.dephase(0, total);
        reg.dephase(1, total);
    }
    let raw = damped_branches(reg, gamma)?;

    let eps = model.readout_eps();
    let survival = model.survival();
    let polar = match scheme {
        SchemeKind::GenericPolar => Some(generic_polar_recovery(&EncodingIsometry::new(), gamma)?),
        _ => None,
    };

    let mut out = Vec::with_capacity(4);
    for syndrome in Syndrome::ALL {
        let m = syndrome.index();
        let mut read = CMatrix::zeros(4, 4);
        for (o, b) in raw.iter().enumerate() {
            let w = confusion(m, o, eps);
            if w > 0.0 {
                read = &read + &b.scale_real(w);
            }
        }
        let prob = read.trace().re.max(0.0);
        let mut branch = PipelineBranch {
            syndrome: Some(syndrome),
            prob,
            survival: survival[m],
            state: None,
            leaked: 0.0,
        };
        if prob > tol::BRANCH_PROB {
            let x = read.scale_real(1.0 / prob);
            match &polar {
                Some(set) => {
                    let (y, leaked) = set.apply(syndrome, &x);
                    branch.leaked = leaked;
                    let tr = y.trace().re;
                    if tr > tol::BRANCH_PROB {
                        branch.state = Some(DensityMatrix::from_matrix_unchecked(y.scale_real(1.0 / tr)));
                    }
                }
                None => branch.state = Some(noisy_recovery(scheme, syndrome, gamma, model, x)?),
            }
        }
        out.push(branch);
    }
    Ok(out)
}

fn noisy_recovery(
    scheme: SchemeKind,
    syndrome: Syndrome,
    gamma: DampingParam,
    model: &NoiseModel,
    x: CMatrix,
) -> Result<DensityMatrix> {
    let ops = scheme_ops(scheme, syndrome, gamma)?;
    let mut reg = Register { m: x, width: 2, model };
    reg.local(&ops.v1, 0);
    reg.local(&ops.v2, 1);
    reg.gate(Gate::Cnot { control: 1, target: 0 });
    reg.local(&ops.v3, 0);
    reg.local(&ops.v4, 1);
    let y0 = partial_trace(&embed(&gates::proj0(), 2, &[1])?.sandwich(&reg.m), &[0])?;
    let y1 = partial_trace(&embed(&gates::proj1(), 2, &[1])?.sandwich(&reg.m), &[0])?;
    let mut tail = Register { m: y1, width: 1, model };
    tail.local(&ops.p, 0);
    Ok(DensityMatrix::from_matrix_unchecked(&y0 + &tail.m))
}

fn uncorrected_branch(gamma: DampingParam, model: &NoiseModel, input: &PureState) -> Result<PipelineBranch> {
    let state = if model.enabled.channel_gates {
        let mut reg = Register {
            m: input.projector().kron(DensityMatrix::basis(1, 0).matrix()),
            width: 2,
            model,
        };
        let theta = cry_angle(gamma);
        reg.channel_pair_gadget(theta);
        DensityMatrix::from_matrix_unchecked(partial_trace(&reg.m, &[0])?)
    } else {
        amplitude_damping(gamma).apply(&input.density())?
    };
    Ok(PipelineBranch {
        syndrome: None,
        prob: 1.0,
        survival: 1.0,
        state: Some(state),
        leaked: 0.0,
    })
}

impl Register<'_> {
    // Gadget on data 0 with ancilla 1; the gate errors use the A/ancilla pair rate.
    fn channel_pair_gadget(&mut self, theta: f64) {
        let model = self.model;
        let p2 = model.p2(0, 2);
        let apply = |reg: &mut Self, g: Gate| {
            let u = g.embedded(2).expect("two-qubit gate");
            reg.m = u.sandwich(&reg.m);
            if p2 > 0.0 {
                reg.channel(&depolarizing(p2, 2).expect("rate validated"), &[0, 1]);
            }
        };
        apply(self, Gate::CRy { theta, control: 0, target: 1 });
        apply(self, Gate::Cnot { control: 1, target: 0 });
    }
}

/// Reconstructed output state of the noisy pipeline.
pub fn noisy_pipeline(
    scheme: SchemeKind,
    gamma: DampingParam,
    model: &NoiseModel,
    input: &PureState,
) -> Result<DensityMatrix> {
    noisy_pipeline_weighted(scheme, gamma, model, input, Weighting::Measured)
}

pub fn noisy_pipeline_weighted(
    scheme: SchemeKind,
    gamma: DampingParam,
    model: &NoiseModel,
    input: &PureState,
    weighting: Weighting,
) -> Result<DensityMatrix> {
    combine(&pipeline_branches(scheme, gamma, model, input)?, weighting)
}

/// Ideal-channel syndrome branches of an encoded pure state.
pub fn encoded_branches(input: &PureState, gamma: DampingParam) -> Result<Vec<SyndromeBranch>> {
    syndrome_branches_matrix(encode(input)?.matrix(), gamma)
}
