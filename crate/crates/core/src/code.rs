//! The two-qubit code `|0⟩ → |++⟩`, `|1⟩ → |−−⟩` and its syndrome branches
//! under independent detected amplitude damping on both qubits.

use std::fmt;

use crate::channels::{amplitude_damping, DampingParam, Label};
use crate::error::{Error, Result};
use crate::qmat::{embed, gates, partial_trace, CMatrix, DensityMatrix, PureState, SubnormalizedState};

#[derive(Clone, Debug, PartialEq)]
pub struct EncodingIsometry {
    matrix: CMatrix,
}

impl EncodingIsometry {
    pub fn new() -> Self {
        let matrix = CMatrix::from_real(4, 2, &[0.5, 0.5, 0.5, -0.5, 0.5, -0.5, 0.5, 0.5]);
        Self { matrix }
    }

    /// 4x2 matrix with columns |++⟩ and |−−⟩.
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

impl Default for EncodingIsometry {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Syndrome(pub u8, pub u8);

impl Syndrome {
    pub const ALL: [Syndrome; 4] = [Syndrome(0, 0), Syndrome(0, 1), Syndrome(1, 0), Syndrome(1, 1)];

    pub fn new(i: u8, j: u8) -> Result<Self> {
        if i > 1 || j > 1 {
            return Err(Error::OutOfRange(format!("syndrome ({i},{j})")));
        }
        Ok(Self(i, j))
    }

    pub fn index(self) -> usize {
        (self.0 as usize) * 2 + self.1 as usize
    }

    pub fn from_index(k: usize) -> Self {
        Self::ALL[k]
    }

    pub fn label(self) -> Label {
        Label::pair(self.0, self.1)
    }
}

impl serde::Serialize for Syndrome {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl fmt::Display for Syndrome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.0, self.1)
    }
}

#[derive(Clone, Debug)]
pub struct SyndromeBranch {
    pub syndrome: Syndrome,
    pub state: SubnormalizedState,
    pub prob: f64,
}

impl SyndromeBranch {
    /// Normalized branch state; `None` for branches below the probability floor.
    pub fn normalized(&self) -> Option<DensityMatrix> {
        self.state.normalized()
    }
}

pub fn encode(psi: &PureState) -> Result<DensityMatrix> {
    if psi.nqubits() != 1 {
        return Err(Error::Dimension("encode takes a single-qubit state".into()));
    }
    let e = EncodingIsometry::new();
    Ok(DensityMatrix::from_matrix_unchecked(e.matrix().sandwich(&psi.projector())))
}

pub fn encode_density(rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.nqubits() != 1 {
        return Err(Error::Dimension("encode takes a single-qubit state".into()));
    }
    let e = EncodingIsometry::new();
    Ok(DensityMatrix::from_matrix_unchecked(e.matrix().sandwich(rho.matrix())))
}

/// Branches of `A_i ⊗ A_j` acting on a two-qubit (possibly subnormalized) matrix.
pub fn syndrome_branches_matrix(m: &CMatrix, gamma: DampingParam) -> Result<Vec<SyndromeBranch>> {
    if m.rows() != 4 || !m.is_square() {
        return Err(Error::Dimension("syndrome extraction needs a two-qubit state".into()));
    }
    let ad = amplitude_damping(gamma);
    let pair = ad.tensor(&ad)?;
    Syndrome::ALL
        .iter()
        .map(|&s| {
            let k = pair.kraus(&s.label())?;
            let state = SubnormalizedState::from_matrix_unchecked(k.sandwich(m));
            let prob = state.trace().max(0.0);
            Ok(SyndromeBranch { syndrome: s, state, prob })
        })
        .collect()
}

pub fn syndrome_branches(encoded: &DensityMatrix, gamma: DampingParam) -> Result<Vec<SyndromeBranch>> {
    syndrome_branches_matrix(encoded.matrix(), gamma)
}

/// Measurement decoder Kraus pair: `H⟨0|_B` and `Z·H⟨1|_B`.
pub fn decoder_kraus() -> [CMatrix; 2] {
    let bra0 = CMatrix::from_real(1, 2, &[1.0, 0.0]);
    let bra1 = CMatrix::from_real(1, 2, &[0.0, 1.0]);
    [
        gates::h().kron(&bra0),
        (&gates::z() * &gates::h()).kron(&bra1),
    ]
}

/// Measure qubit B, apply H to A and Z when B read 1, averaged over outcomes.
pub fn decode(rho2: &DensityMatrix) -> Result<DensityMatrix> {
    if rho2.nqubits() != 2 {
        return Err(Error::Dimension("decode takes a two-qubit state".into()));
    }
    Ok(DensityMatrix::from_matrix_unchecked(decode_matrix(rho2.matrix())))
}

pub(crate) fn decode_matrix(m: &CMatrix) -> CMatrix {
    let [k0, k1] = decoder_kraus();
    &k0.sandwich(m) + &k1.sandwich(m)
}

/// The same decoder written out gate by gate: H on A, project B, conditional Z.
pub fn decode_by_measurement(rho2: &DensityMatrix) -> Result<DensityMatrix> {
    if rho2.nqubits() != 2 {
        return Err(Error::Dimension("decode takes a two-qubit state".into()));
    }
    let after_h = embed(&gates::h(), 2, &[0])?.sandwich(rho2.matrix());
    let mut out = CMatrix::zeros(2, 2);
    for (bit, proj) in [gates::proj0(), gates::proj1()].iter().enumerate() {
        let branch = embed(proj, 2, &[1])?.sandwich(&after_h);
        let mut reduced = partial_trace(&branch, &[0])?;
        if bit == 1 {
            reduced = gates::z().sandwich(&reduced);
        }
        out = &out + &reduced;
    }
    Ok(DensityMatrix::from_matrix_unchecked(out))
}

/// `E† ρ E`; trace preserving only on the code space.
pub fn decode_isometry(rho2: &DensityMatrix) -> Result<SubnormalizedState> {
    if rho2.nqubits() != 2 {
        return Err(Error::Dimension("decode takes a two-qubit state".into()));
    }
    let e = EncodingIsometry::new();
    Ok(SubnormalizedState::from_matrix_unchecked(e.matrix().adjoint().sandwich(rho2.matrix())))
}
