//! Tiny gate-level IR and density-matrix simulator for circuits of up to
//! four qubits. Qubit 0 is the leftmost tensor factor.

use std::fmt;

use crate::channels::DampingParam;
use crate::error::{Error, Result};
use crate::qmat::{
    check_qubits, embed, gates, partial_trace, tol, CMatrix, DensityMatrix, SubnormalizedState,
};

#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    H(usize),
    X(usize),
    Z(usize),
    Ry { theta: f64, qubit: usize },
    U { matrix: CMatrix, qubit: usize },
    Cnot { control: usize, target: usize },
    CRy { theta: f64, control: usize, target: usize },
    MeasureZ(usize),
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H(q) | Gate::X(q) | Gate::Z(q) | Gate::MeasureZ(q) => vec![q],
            Gate::Ry { qubit, .. } | Gate::U { qubit, .. } => vec![qubit],
            Gate::Cnot { control, target } | Gate::CRy { control, target, .. } => {
                vec![control, target]
            }
        }
    }

    pub fn is_measurement(&self) -> bool {
        matches!(self, Gate::MeasureZ(_))
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::Cnot { .. } | Gate::CRy { .. })
    }

    /// Local matrix on `self.qubits()` (in that order); `None` for measurements.
    pub fn matrix(&self) -> Option<CMatrix> {
        Some(match self {
            Gate::H(_) => gates::h(),
            Gate::X(_) => gates::x(),
            Gate::Z(_) => gates::z(),
            Gate::Ry { theta, .. } => gates::ry(*theta),
            Gate::U { matrix, .. } => matrix.clone(),
            Gate::Cnot { .. } => gates::cnot(),
            Gate::CRy { theta, .. } => {
                &gates::proj0().kron(&gates::i2()) + &gates::proj1().kron(&gates::ry(*theta))
            }
            Gate::MeasureZ(_) => return None,
        })
    }

    /// Full operator on a `width`-qubit register.
    pub fn embedded(&self, width: usize) -> Option<CMatrix> {
        let m = self.matrix()?;
        Some(embed(&m, width, &self.qubits()).expect("validated gate"))
    }

    fn label(&self) -> String {
        match self {
            Gate::H(_) => "H".into(),
            Gate::X(_) => "X".into(),
            Gate::Z(_) => "Z".into(),
            Gate::Ry { theta, .. } => format!("Ry({theta:.3})"),
            Gate::U { .. } => "U".into(),
            Gate::Cnot { .. } => "X".into(),
            Gate::CRy { theta, .. } => format!("Ry({theta:.3})"),
            Gate::MeasureZ(_) => "M".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    width: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(width: usize) -> Result<Self> {
        if !(1..=4).contains(&width) {
            return Err(Error::Circuit(format!("width {width} not in 1..=4")));
        }
        Ok(Self { width, gates: Vec::new() })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        check_qubits(self.width, &gate.qubits()).map_err(|e| Error::Circuit(e.to_string()))?;
        if let Gate::U { matrix, .. } = &gate {
            if matrix.rows() != 2 || !matrix.is_unitary(tol::UNITARY) {
                return Err(Error::Circuit("U must be a 2x2 unitary".into()));
            }
        }
        if self.gates.iter().any(Gate::is_measurement) {
            match &gate {
                Gate::MeasureZ(q) if !self.measured().contains(q) => {}
                Gate::MeasureZ(q) => {
                    return Err(Error::Circuit(format!("qubit {q} measured twice")));
                }
                _ => return Err(Error::Circuit("gates after measurement".into())),
            }
        }
        self.gates.push(gate);
        Ok(self)
    }

    pub fn with(mut self, gate: Gate) -> Result<Self> {
        self.push(gate)?;
        Ok(self)
    }

    pub fn measured(&self) -> Vec<usize> {
        self.gates
            .iter()
            .filter_map(|g| match g {
                Gate::MeasureZ(q) => Some(*q),
                _ => None,
            })
            .collect()
    }

    /// Product of the unitary gates, ignoring trailing measurements.
    pub fn unitary_part(&self) -> CMatrix {
        let mut u = CMatrix::identity(1 << self.width);
        for g in &self.gates {
            if let Some(m) = g.embedded(self.width) {
                u = &m * &u;
            }
        }
        u
    }
}

pub fn circuit_to_unitary(c: &Circuit) -> Result<CMatrix> {
    if !c.measured().is_empty() {
        return Err(Error::Circuit("circuit contains measurements".into()));
    }
    Ok(c.unitary_part())
}

/// CNOT(A→B) followed by H on both qubits: `|0⟩|0⟩ → |++⟩`, `|1⟩|0⟩ → |−−⟩`.
pub fn encoder_circuit() -> Circuit {
    Circuit::new(2)
        .and_then(|c| c.with(Gate::Cnot { control: 0, target: 1 }))
        .and_then(|c| c.with(Gate::H(0)))
        .and_then(|c| c.with(Gate::H(1)))
        .expect("static circuit")
}

/// Rotation angle of the controlled-Ry that realizes damping rate γ.
pub fn cry_angle(gamma: DampingParam) -> f64 {
    2.0 * gamma.value().sqrt().asin()
}

/// Data qubit 0, ancilla qubit 1. Ancilla outcome 0 selects `A0`, 1 selects `A1`.
pub fn detected_ad_circuit(gamma: DampingParam) -> Circuit {
    Circuit::new(2)
        .and_then(|c| {
            c.with(Gate::CRy {
                theta: cry_angle(gamma),
                control: 0,
                target: 1,
            })
        })
        .and_then(|c| c.with(Gate::Cnot { control: 1, target: 0 }))
        .and_then(|c| c.with(Gate::MeasureZ(1)))
        .expect("static circuit")
}

/// Encoder on qubits 0, 1 followed by a damping gadget per data qubit, with
/// ancillas 2 (for qubit 0) and 3 (for qubit 1) measured at the end.
pub fn encoded_channel_circuit(gamma: DampingParam) -> Circuit {
    let theta = cry_angle(gamma);
    let mut c = Circuit::new(4).expect("width 4");
    let steps = [
        Gate::Cnot { control: 0, target: 1 },
        Gate::H(0),
        Gate::H(1),
        Gate::CRy { theta, control: 0, target: 2 },
        Gate::Cnot { control: 2, target: 0 },
        Gate::CRy { theta, control: 1, target: 3 },
        Gate::Cnot { control: 3, target: 1 },
        Gate::MeasureZ(2),
        Gate::MeasureZ(3),
    ];
    for g in steps {
        c.push(g).expect("static circuit");
    }
    c
}

/// Runs `c` on `input` (which occupies the leading qubits; the rest start in
/// |0⟩), projects the measured qubits onto `outcomes` and traces them out.
pub fn simulate_with_ancilla_postselect(
    c: &Circuit,
    input: &DensityMatrix,
    outcomes: &[(usize, u8)],
) -> Result<(SubnormalizedState, f64)> {
    let measured = c.measured();
    for &(q, bit) in outcomes {
        if !measured.contains(&q) {
            return Err(Error::Circuit(format!("outcome given for unmeasured qubit {q}")));
        }
        if bit > 1 {
            return Err(Error::Circuit(format!("outcome {bit} is not a bit")));
        }
    }
    for q in &measured {
        if !outcomes.iter().any(|(o, _)| o == q) {
            return Err(Error::Circuit(format!("no outcome for measured qubit {q}")));
        }
    }
    let extra = c
        .width
        .checked_sub(input.nqubits())
        .ok_or_else(|| Error::Dimension("input wider than circuit".into()))?;
    let mut rho = input.matrix().clone();
    if extra > 0 {
        rho = rho.kron(DensityMatrix::basis(extra, 0).matrix());
    }
    let u = c.unitary_part();
    let mut out = u.sandwich(&rho);
    for &(q, bit) in outcomes {
        let proj = if bit == 0 { gates::proj0() } else { gates::proj1() };
        out = embed(&proj, c.width, &[q])?.sandwich(&out);
    }
    let keep: Vec<usize> = (0..c.width).filter(|q| !measured.contains(q)).collect();
    let reduced = partial_trace(&out, &keep)?;
    let state = SubnormalizedState::from_matrix_unchecked(reduced);
    let p = state.trace().max(0.0);
    Ok((state, p))
}

/// Kraus operator of the branch selected by `outcomes`, for a pure-unitary
/// circuit with measured ancillas starting in |0⟩ after the leading data qubits.
pub fn conditioned_branch_map(c: &Circuit, data_qubits: usize, outcomes: &[(usize, u8)]) -> Result<CMatrix> {
    let measured = c.measured();
    let keep: Vec<usize> = (0..c.width).filter(|q| !measured.contains(q)).collect();
    if keep.len() != data_qubits || keep.iter().any(|&q| q >= data_qubits) {
        return Err(Error::Circuit("measured qubits must be the trailing ancillas".into()));
    }
    let u = c.unitary_part();
    let dd = 1 << data_qubits;
    let da = 1 << (c.width - data_qubits);
    let mut anc_index = 0usize;
    for (pos, q) in (data_qubits..c.width).enumerate() {
        let bit = outcomes
            .iter()
            .find(|(o, _)| *o == q)
            .map(|(_, b)| *b as usize)
            .ok_or_else(|| Error::Circuit(format!("no outcome for qubit {q}")))?;
        anc_index |= bit << (c.width - data_qubits - 1 - pos);
    }
    let mut k = CMatrix::zeros(dd, dd);
    for out in 0..dd {
        for inp in 0..dd {
            k[(out, inp)] = u[(out * da + anc_index, inp * da)];
        }
    }
    Ok(k)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WaveplateOp {
    A0,
    A1,
}

/// Half-wave-plate angle in degrees: `sin²2θ = 1−γ` for `A0`, `sin²2θ = γ` for `A1`.
pub fn waveplate_angle(gamma: DampingParam, op: WaveplateOp) -> f64 {
    let target = match op {
        WaveplateOp::A0 => 1.0 - gamma.value(),
        WaveplateOp::A1 => gamma.value(),
    };
    (0.5 * target.sqrt().asin()).to_degrees()
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut lines: Vec<String> = (0..self.width).map(|q| format!("q{q}: ")).collect();
        for g in &self.gates {
            let mut cells = vec!["─".to_string(); self.width];
            match g {
                Gate::Cnot { control, target } | Gate::CRy { control, target, .. } => {
                    cells[*control] = "●".into();
                    cells[*target] = if matches!(g, Gate::Cnot { .. }) { "⊕".into() } else { g.label() };
                    let (lo, hi) = (*control.min(target), *control.max(target));
                    for cell in cells.iter_mut().take(hi).skip(lo + 1) {
                        *cell = "│".into();
                    }
                }
                _ => cells[g.qubits()[0]] = g.label(),
            }
            let w = cells.iter().map(|s| s.chars().count()).max().unwrap_or(1);
            for (line, cell) in lines.iter_mut().zip(cells) {
                let pad = w - cell.chars().count();
                let fill = if cell == "│" { " " } else { "─" };
                line.push('─');
                line.push_str(&cell);
                line.push_str(&fill.repeat(pad));
                line.push('─');
            }
        }
        for line in lines {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}
