//! Quantum channels in Kraus form whose branches carry classical labels.
//!
//! A label is a short tuple of small integers. For the detected amplitude
//! damping channel the label says which Kraus operator fired, and the
//! two-qubit product channel's label `(i, j)` is directly the syndrome.

use std::fmt;

use crate::error::{Error, Result};
use crate::qmat::{embed, gates, r, tol, CMatrix, DensityMatrix, SubnormalizedState};

/// Damping rate γ ∈ [0, 1].
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, serde::Serialize)]
pub struct DampingParam(f64);

impl DampingParam {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::OutOfRange(format!("damping rate {gamma} not in [0, 1]")));
        }
        Ok(Self(gamma))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for DampingParam {
    type Error = Error;
    fn try_from(gamma: f64) -> Result<Self> {
        Self::new(gamma)
    }
}

impl fmt::Display for DampingParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(pub Vec<u8>);

impl Label {
    pub fn single(i: u8) -> Self {
        Self(vec![i])
    }

    pub fn pair(i: u8, j: u8) -> Self {
        Self(vec![i, j])
    }

    fn concat(&self, other: &Label) -> Label {
        Label(self.0.iter().chain(&other.0).copied().collect())
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Debug)]
pub struct Branch {
    pub label: Label,
    pub kraus: CMatrix,
}

/// Trace-preserving channel with labeled Kraus branches.
#[derive(Clone, Debug)]
pub struct LabeledChannel {
    nqubits: usize,
    branches: Vec<Branch>,
}

impl LabeledChannel {
    pub fn new(branches: Vec<Branch>) -> Result<Self> {
        let first = branches
            .first()
            .ok_or_else(|| Error::Dimension("channel needs at least one branch".into()))?;
        let dim = first.kraus.rows();
        if !dim.is_power_of_two() || !(2..=tol::MAX_DIM).contains(&dim) {
            return Err(Error::Dimension(format!("channel dimension {dim}")));
        }
        for (k, b) in branches.iter().enumerate() {
            if b.kraus.rows() != dim || b.kraus.cols() != dim {
                return Err(Error::Dimension(format!("branch {} is not {dim}x{dim}", b.label)));
            }
            if branches[..k].iter().any(|o| o.label == b.label) {
                return Err(Error::Label(b.label.to_string()));
            }
        }
        let mut sum = CMatrix::zeros(dim, dim);
        for b in &branches {
            sum = &sum + &(&b.kraus.adjoint() * &b.kraus);
        }
        let dev = sum.max_abs_diff(&CMatrix::identity(dim));
        if dev > tol::UNITARY {
            return Err(Error::Incomplete(dev));
        }
        Ok(Self {
            nqubits: dim.trailing_zeros() as usize,
            branches,
        })
    }

    pub fn identity(nqubits: usize) -> Self {
        Self {
            nqubits,
            branches: vec![Branch {
                label: Label::single(0),
                kraus: CMatrix::identity(1 << nqubits),
            }],
        }
    }

    pub fn nqubits(&self) -> usize {
        self.nqubits
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn labels(&self) -> impl Iterator<Item = &Label> {
        self.branches.iter().map(|b| &b.label)
    }

    pub fn kraus(&self, label: &Label) -> Result<&CMatrix> {
        self.branches
            .iter()
            .find(|b| &b.label == label)
            .map(|b| &b.kraus)
            .ok_or_else(|| Error::Label(label.to_string()))
    }

    fn check_dim(&self, m: &CMatrix) -> Result<()> {
        if m.rows() != 1 << self.nqubits || !m.is_square() {
            return Err(Error::Dimension(format!(
                "{}-qubit channel on a {}x{} state",
                self.nqubits,
                m.rows(),
                m.cols()
            )));
        }
        Ok(())
    }

    /// `Σ K m K†` on an arbitrary (possibly subnormalized) matrix.
    pub fn apply_matrix(&self, m: &CMatrix) -> Result<CMatrix> {
        self.check_dim(m)?;
        let mut out = CMatrix::zeros(m.rows(), m.cols());
        for b in &self.branches {
            out = &out + &b.kraus.sandwich(m);
        }
        Ok(out)
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        Ok(DensityMatrix::from_matrix_unchecked(self.apply_matrix(rho.matrix())?))
    }

    /// Unnormalized output of one branch and its probability.
    pub fn apply_branch(&self, rho: &DensityMatrix, label: &Label) -> Result<(SubnormalizedState, f64)> {
        self.check_dim(rho.matrix())?;
        let k = self.kraus(label)?;
        let out = SubnormalizedState::from_matrix_unchecked(k.sandwich(rho.matrix()));
        let p = out.trace().max(0.0);
        Ok((out, p))
    }

    /// Product channel: all pairwise Kronecker products with concatenated labels.
    pub fn tensor(&self, other: &LabeledChannel) -> Result<LabeledChannel> {
        if self.nqubits + other.nqubits > 4 {
            return Err(Error::Dimension(format!(
                "{} + {} qubits exceeds four",
                self.nqubits, other.nqubits
            )));
        }
        let mut branches = Vec::with_capacity(self.branches.len() * other.branches.len());
        for a in &self.branches {
            for b in &other.branches {
                branches.push(Branch {
                    label: a.label.concat(&b.label),
                    kraus: a.kraus.kron(&b.kraus),
                });
            }
        }
        Ok(LabeledChannel {
            nqubits: self.nqubits + other.nqubits,
            branches,
        })
    }

    /// The same channel acting on `targets` of a `width`-qubit register.
    pub fn embedded(&self, width: usize, targets: &[usize]) -> Result<LabeledChannel> {
        if targets.len() != self.nqubits {
            return Err(Error::QubitIndex(format!(
                "{} targets for a {}-qubit channel",
                targets.len(),
                self.nqubits
            )));
        }
        let branches = self
            .branches
            .iter()
            .map(|b| {
                Ok(Branch {
                    label: b.label.clone(),
                    kraus: embed(&b.kraus, width, targets)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LabeledChannel { nqubits: width, branches })
    }
}

/// Detected amplitude damping: `A0 = diag(1, √(1−γ))`, `A1 = √γ |0⟩⟨1|`.
pub fn amplitude_damping(gamma: DampingParam) -> LabeledChannel {
    let g = gamma.value();
    LabeledChannel {
        nqubits: 1,
        branches: vec![
            Branch {
                label: Label::single(0),
                kraus: CMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, (1.0 - g).sqrt()]),
            },
            Branch {
                label: Label::single(1),
                kraus: CMatrix::from_real(2, 2, &[0.0, g.sqrt(), 0.0, 0.0]),
            },
        ],
    }
}

/// Single-qubit dephasing that scales off-diagonals by `exp(−duration/t2)`.
pub fn phase_damping_from_t2(duration: f64, t2: f64) -> Result<LabeledChannel> {
    if !(t2 > 0.0) {
        return Err(Error::OutOfRange(format!("T2 must be positive, got {t2}")));
    }
    if !(duration >= 0.0) {
        return Err(Error::OutOfRange(format!("duration must be nonnegative, got {duration}")));
    }
    Ok(phase_damping((-duration / t2).exp()))
}

/// Dephasing with off-diagonal factor `f ∈ [0, 1]`.
pub(crate) fn phase_damping(f: f64) -> LabeledChannel {
    LabeledChannel {
        nqubits: 1,
        branches: vec![
            Branch {
                label: Label::single(0),
                kraus: CMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, f]),
            },
            Branch {
                label: Label::single(1),
                kraus: CMatrix::from_real(2, 2, &[0.0, 0.0, 0.0, (1.0 - f * f).max(0.0).sqrt()]),
            },
        ],
    }
}

/// `ρ → (1−p)ρ + p·I/2ⁿ` on one or two qubits, as a Pauli-twirl Kraus set.
pub fn depolarizing(p: f64, nqubits: usize) -> Result<LabeledChannel> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange(format!("depolarizing rate {p} not in [0, 1]")));
    }
    let paulis = [gates::i2(), gates::x(), gates::y(), gates::z()];
    let words: Vec<CMatrix> = match nqubits {
        1 => paulis.to_vec(),
        2 => paulis
            .iter()
            .flat_map(|a| paulis.iter().map(move |b| a.kron(b)))
            .collect(),
        n => return Err(Error::Dimension(format!("depolarizing on {n} qubits"))),
    };
    let d2 = words.len() as f64;
    let branches = words
        .into_iter()
        .enumerate()
        .map(|(k, w)| {
            let weight = if k == 0 { 1.0 - p * (d2 - 1.0) / d2 } else { p / d2 };
            Branch {
                label: Label::single(k as u8),
                kraus: w.scale(r(weight.sqrt())),
            }
        })
        .collect();
    Ok(LabeledChannel { nqubits, branches })
}
