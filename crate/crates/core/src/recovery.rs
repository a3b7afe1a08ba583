//! Recovery schemes. Standard A/B and the closed-form optimal scheme are
//! gate recipes on the common recovery circuit
//!
//! ```text
//! A: ─V1─⊕─V3───────P─  (output)
//! B: ─V2─●─V4─M═════╝
//! ```
//!
//! where P is applied only when B reads 1. The generic scheme synthesizes the
//! optimal maps from polar decompositions of the branch operators instead.

use std::fmt;
use std::str::FromStr;

use crate::channels::{amplitude_damping, DampingParam};
use crate::circuits::{simulate_with_ancilla_postselect, Circuit, Gate};
use crate::code::{syndrome_branches, encode_density, EncodingIsometry, Syndrome, SyndromeBranch};
use crate::error::{Error, Result};
use crate::qmat::{embed, gates, polar_decompose, tol, CMatrix, DensityMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeKind {
    StandardA,
    StandardB,
    Optimal,
    GenericPolar,
    NoCorrection,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 5] = [
        SchemeKind::StandardA,
        SchemeKind::StandardB,
        SchemeKind::Optimal,
        SchemeKind::GenericPolar,
        SchemeKind::NoCorrection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::StandardA => "standard_a",
            SchemeKind::StandardB => "standard_b",
            SchemeKind::Optimal => "optimal",
            SchemeKind::GenericPolar => "generic_polar",
            SchemeKind::NoCorrection => "none",
        }
    }

    pub fn is_corrected(self) -> bool {
        self != SchemeKind::NoCorrection
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Ok(match key.as_str() {
            "standard_a" | "std_a" | "a" => SchemeKind::StandardA,
            "standard_b" | "std_b" | "b" => SchemeKind::StandardB,
            "optimal" | "opt" => SchemeKind::Optimal,
            "generic_polar" | "polar" => SchemeKind::GenericPolar,
            "none" | "no_correction" => SchemeKind::NoCorrection,
            _ => return Err(Error::Config(format!("unknown scheme '{s}'"))),
        })
    }
}

impl serde::Serialize for SchemeKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> serde::Deserialize<'de> for SchemeKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = <String as serde::Deserialize>::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The γ-dependent pieces of the optimal scheme.
#[derive(Clone, Debug)]
pub struct OptimalParams {
    pub gamma: f64,
    pub s: f64,
    pub t: f64,
    pub u1: CMatrix,
    pub u2: CMatrix,
}

pub fn optimal_params(gamma: DampingParam) -> OptimalParams {
    let g = gamma.value();
    let keep = 1.0 - g;
    let denom = (1.0 + keep * keep).sqrt();
    let s = 2f64.sqrt() / denom;
    let t = 2f64.sqrt() * keep / denom;
    let n = 1.0 / ((1.0 + t).powi(2) + (1.0 - s).powi(2)).sqrt();
    let u1 = CMatrix::from_real(2, 2, &[-t - 1.0, s - 1.0, 1.0 - s, -t - 1.0]).scale_real(n);
    let u2 = CMatrix::from_real(2, 2, &[1.0 - s, 1.0 + t, -1.0 - t, 1.0 - s]).scale_real(n);
    OptimalParams { gamma: g, s, t, u1, u2 }
}

impl OptimalParams {
    /// Test fixture: flips the signs of U1's off-diagonal entries. The result
    /// is still unitary but no longer the optimal rotation.
    pub fn with_u1_sign_fault(mut self) -> Self {
        self.u1[(0, 1)] = -self.u1[(0, 1)];
        self.u1[(1, 0)] = -self.u1[(1, 0)];
        self
    }
}

/// Local gates of the recovery circuit for one syndrome.
#[derive(Clone, Debug, PartialEq)]
pub struct SyndromeOps {
    pub v1: CMatrix,
    pub v2: CMatrix,
    pub v3: CMatrix,
    pub v4: CMatrix,
    pub p: CMatrix,
}

impl SyndromeOps {
    fn new(v1: CMatrix, v2: CMatrix, v3: CMatrix, v4: CMatrix, p: CMatrix) -> Result<Self> {
        for m in [&v1, &v2, &v3, &v4, &p] {
            if !m.is_unitary(tol::UNITARY) {
                return Err(Error::Circuit(format!("recovery gate is not unitary:\n{m}")));
            }
        }
        Ok(Self { v1, v2, v3, v4, p })
    }

    pub fn all(&self) -> [&CMatrix; 5] {
        [&self.v1, &self.v2, &self.v3, &self.v4, &self.p]
    }

    /// Kraus pair indexed by the B outcome: `P^o ⟨o|_B (V3⊗V4) CNOT_{B→A} (V1⊗V2)`.
    pub fn kraus(&self) -> [CMatrix; 2] {
        let cnot_ba = embed(&gates::cnot(), 2, &[1, 0]).expect("two-qubit embed");
        let core = &(&self.v3.kron(&self.v4) * &cnot_ba) * &self.v1.kron(&self.v2);
        let bra0 = gates::i2().kron(&CMatrix::from_real(1, 2, &[1.0, 0.0]));
        let bra1 = gates::i2().kron(&CMatrix::from_real(1, 2, &[0.0, 1.0]));
        [&bra0 * &core, &(&self.p * &bra1) * &core]
    }

    /// The unitary part as a circuit with B measured at the end.
    pub fn circuit(&self) -> Circuit {
        let mut c = Circuit::new(2).expect("width 2");
        let steps = [
            Gate::U { matrix: self.v1.clone(), qubit: 0 },
            Gate::U { matrix: self.v2.clone(), qubit: 1 },
            Gate::Cnot { control: 1, target: 0 },
            Gate::U { matrix: self.v3.clone(), qubit: 0 },
            Gate::U { matrix: self.v4.clone(), qubit: 1 },
            Gate::MeasureZ(1),
        ];
        for g in steps {
            c.push(g).expect("validated gates");
        }
        c
    }
}

pub fn scheme_ops(kind: SchemeKind, syndrome: Syndrome, gamma: DampingParam) -> Result<SyndromeOps> {
    scheme_ops_with(kind, syndrome, &optimal_params(gamma))
}

/// Like [`scheme_ops`] with caller-supplied optimal parameters.
pub fn scheme_ops_with(kind: SchemeKind, syndrome: Syndrome, params: &OptimalParams) -> Result<SyndromeOps> {
    use gates::{h, i2, x, z};
    match kind {
        SchemeKind::NoCorrection | SchemeKind::GenericPolar => {
            return Err(Error::NoSyndromeOps(kind.to_string()))
        }
        _ => {}
    }
    let hx = &h() * &x();
    match (kind, syndrome) {
        (SchemeKind::Optimal, Syndrome(0, 0)) => SyndromeOps::new(
            i2(),
            h(),
            &params.u1.adjoint() * &h(),
            &(&h() * &params.u2.adjoint()) * &x(),
            z(),
        ),
        (_, Syndrome(0, 0)) => SyndromeOps::new(i2(), i2(), h(), h(), i2()),
        (_, Syndrome(0, 1)) => SyndromeOps::new(i2(), i2(), hx, i2(), i2()),
        (_, Syndrome(1, 0)) => SyndromeOps::new(i2(), i2(), hx, h(), x()),
        (SchemeKind::StandardB, Syndrome(1, 1)) => SyndromeOps::new(i2(), i2(), h(), i2(), i2()),
        (_, Syndrome(1, 1)) => SyndromeOps::new(h(), i2(), i2(), i2(), i2()),
        (_, s) => Err(Error::OutOfRange(format!("syndrome {s}"))),
    }
}

/// Polar isometries `v_ij` of `t_ij = (A_i ⊗ A_j) E`, indexed by syndrome.
#[derive(Clone, Debug)]
pub struct RecoveryIsometrySet {
    v: [CMatrix; 4],
}

impl RecoveryIsometrySet {
    pub fn get(&self, s: Syndrome) -> &CMatrix {
        &self.v[s.index()]
    }

    /// `v† ρ v` and the weight it leaks outside the isometry's range.
    pub fn apply(&self, s: Syndrome, rho2: &CMatrix) -> (CMatrix, f64) {
        let v = self.get(s);
        let out = v.adjoint().sandwich(rho2);
        let leaked = (rho2.trace().re - out.trace().re).max(0.0);
        (out, leaked)
    }
}

pub fn generic_polar_recovery(e: &EncodingIsometry, gamma: DampingParam) -> Result<RecoveryIsometrySet> {
    let ad = amplitude_damping(gamma);
    let pair = ad.tensor(&ad)?;
    let mut v = Vec::with_capacity(4);
    for s in Syndrome::ALL {
        let t = pair.kraus(&s.label())? * e.matrix();
        v.push(polar_decompose(&t)?.v);
    }
    Ok(RecoveryIsometrySet {
        v: v.try_into().expect("four syndromes"),
    })
}

/// Decoded single-qubit output for one normalized syndrome branch.
pub fn apply_recovery(branch: &SyndromeBranch, kind: SchemeKind, gamma: DampingParam) -> Result<DensityMatrix> {
    let rho = branch.normalized().ok_or(Error::ZeroProbability)?;
    match kind {
        SchemeKind::GenericPolar => {
            let set = generic_polar_recovery(&EncodingIsometry::new(), gamma)?;
            let (out, _) = set.apply(branch.syndrome, rho.matrix());
            let tr = out.trace().re;
            if tr <= tol::BRANCH_PROB {
                return Err(Error::ZeroProbability);
            }
            Ok(DensityMatrix::from_matrix_unchecked(out.scale_real(1.0 / tr)))
        }
        _ => {
            let ops = scheme_ops(kind, branch.syndrome, gamma)?;
            Ok(DensityMatrix::from_matrix_unchecked(apply_ops(&ops, rho.matrix())))
        }
    }
}

pub(crate) fn apply_ops(ops: &SyndromeOps, rho2: &CMatrix) -> CMatrix {
    let [k0, k1] = ops.kraus();
    &k0.sandwich(rho2) + &k1.sandwich(rho2)
}

/// Gate-by-gate evaluation of the recovery circuit, used to cross-check the
/// Kraus form.
pub fn apply_ops_by_circuit(ops: &SyndromeOps, rho2: &DensityMatrix) -> Result<DensityMatrix> {
    let c = ops.circuit();
    let (b0, _) = simulate_with_ancilla_postselect(&c, rho2, &[(1, 0)])?;
    let (b1, _) = simulate_with_ancilla_postselect(&c, rho2, &[(1, 1)])?;
    let out = b0.matrix() + &ops.p.sandwich(b1.matrix());
    Ok(DensityMatrix::from_matrix_unchecked(out))
}

/// Plain amplitude damping on the bare qubit.
pub fn no_correction_channel(gamma: DampingParam, input: &DensityMatrix) -> Result<DensityMatrix> {
    amplitude_damping(gamma).apply(input)
}

/// Noise-free end-to-end output: encode, damp, recover each syndrome and
/// recombine with the branch probabilities.
pub fn recovered_state(kind: SchemeKind, gamma: DampingParam, input: &DensityMatrix) -> Result<DensityMatrix> {
    if kind == SchemeKind::NoCorrection {
        return no_correction_channel(gamma, input);
    }
    let branches = syndrome_branches(&encode_density(input)?, gamma)?;
    let mut out = CMatrix::zeros(2, 2);
    for b in branches.iter().filter(|b| b.prob > tol::BRANCH_PROB) {
        let rho = apply_recovery(b, kind, gamma)?;
        out = &out + &rho.matrix().scale_real(b.prob);
    }
    let tr = out.trace().re;
    Ok(DensityMatrix::from_matrix_unchecked(out.scale_real(1.0 / tr)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::encode;
    use crate::qmat::{phase_insensitive_diff, PureState};

    fn gamma(g: f64) -> DampingParam {
        DampingParam::new(g).unwrap()
    }

    #[test]
    fn params_at_endpoints() {
        let p = optimal_params(gamma(0.0));
        assert!((p.s - 1.0).abs() < 1e-12 && (p.t - 1.0).abs() < 1e-12);
        assert!(p.u1.max_abs_diff(&CMatrix::identity(2).scale_real(-1.0)) < 1e-12);
        assert!(p.u2.max_abs_diff(&CMatrix::from_real(2, 2, &[0.0, 1.0, -1.0, 0.0])) < 1e-12);
        let p = optimal_params(gamma(1.0));
        assert!((p.s - 2f64.sqrt()).abs() < 1e-12 && p.t.abs() < 1e-12);
        for g in [0.1, 0.5, 0.9] {
            let p = optimal_params(gamma(g));
            assert!(p.u1.is_unitary(1e-12) && p.u2.is_unitary(1e-12));
        }
    }

    #[test]
    fn fault_keeps_unitarity() {
        let p = optimal_params(gamma(0.5)).with_u1_sign_fault();
        assert!(p.u1.is_unitary(1e-12));
    }

    #[test]
    fn scheme_names_round_trip() {
        for k in SchemeKind::ALL {
            assert_eq!(k.name().parse::<SchemeKind>().unwrap(), k);
        }
        assert!("bogus".parse::<SchemeKind>().is_err());
    }

    #[test]
    fn table_rows() {
        let g = gamma(0.4);
        let ops = scheme_ops(SchemeKind::StandardA, Syndrome(0, 0), g).unwrap();
        assert_eq!(ops, SyndromeOps::new(gates::i2(), gates::i2(), gates::h(), gates::h(), gates::i2()).unwrap());
        let ops = scheme_ops(SchemeKind::StandardA, Syndrome(1, 0), g).unwrap();
        assert!(ops.v3.max_abs_diff(&(&gates::h() * &gates::x())) < 1e-15);
        assert_eq!(ops.v4, gates::h());
        assert_eq!(ops.p, gates::x());
        assert!(scheme_ops(SchemeKind::NoCorrection, Syndrome(0, 0), g).is_err());
        assert!(scheme_ops(SchemeKind::GenericPolar, Syndrome(0, 0), g).is_err());
        let opt0 = scheme_ops(SchemeKind::Optimal, Syndrome(0, 0), gamma(0.0)).unwrap();
        assert!(phase_insensitive_diff(&opt0.v3, &gates::h()) < 1e-12);
    }

    #[test]
    fn collapsed_branch_goes_to_plus() {
        let g = gamma(0.6);
        for kind in [SchemeKind::StandardA, SchemeKind::StandardB, SchemeKind::Optimal] {
            let plus = syndrome_branches(&encode(&PureState::plus()).unwrap(), g).unwrap();
            let out = apply_recovery(&plus[3], kind, g).unwrap();
            assert!((out.fidelity(&PureState::plus()) - 1.0).abs() < 1e-12);
        }
        let minus = syndrome_branches(&encode(&PureState::minus()).unwrap(), g).unwrap();
        assert!(matches!(
            apply_recovery(&minus[3], SchemeKind::StandardA, g),
            Err(Error::ZeroProbability)
        ));
    }

    #[test]
    fn kraus_and_circuit_routes_agree() {
        let g = gamma(0.35);
        let enc = encode(&PureState::plus_i()).unwrap();
        for kind in [SchemeKind::StandardA, SchemeKind::StandardB, SchemeKind::Optimal] {
            for b in syndrome_branches(&enc, g).unwrap() {
                let ops = scheme_ops(kind, b.syndrome, g).unwrap();
                let rho = b.normalized().unwrap();
                let a = apply_ops(&ops, rho.matrix());
                let c = apply_ops_by_circuit(&ops, &rho).unwrap();
                assert!(a.max_abs_diff(c.matrix()) < 1e-12);
            }
        }
    }

    #[test]
    fn recovery_kraus_complete() {
        let g = gamma(0.7);
        for kind in [SchemeKind::StandardA, SchemeKind::StandardB, SchemeKind::Optimal] {
            for s in Syndrome::ALL {
                let [k0, k1] = scheme_ops(kind, s, g).unwrap().kraus();
                let sum = &(&k0.adjoint() * &k0) + &(&k1.adjoint() * &k1);
                assert!(sum.max_abs_diff(&CMatrix::identity(4)) < 1e-12);
            }
        }
    }

    #[test]
    fn polar_matches_closed_form() {
        for g in [0.0, 0.2, 0.5, 0.9, 1.0] {
            for psi in crate::experiment::TestStateSet::six().states() {
                let a = recovered_state(SchemeKind::GenericPolar, gamma(g), &psi.density()).unwrap();
                let b = recovered_state(SchemeKind::Optimal, gamma(g), &psi.density()).unwrap();
                assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-10, "γ={g}");
            }
        }
    }

    #[test]
    fn polar_isometries() {
        let set = generic_polar_recovery(&EncodingIsometry::new(), gamma(0.5)).unwrap();
        for s in Syndrome::ALL {
            assert!(set.get(s).is_isometry(1e-10));
        }
    }

    #[test]
    fn ideal_reference_values() {
        let g = gamma(0.5);
        let avg = |k| crate::experiment::channel_fidelity(k, g, None).unwrap();
        assert!((avg(SchemeKind::Optimal) - 0.970856794989).abs() < 1e-9);
        assert!((avg(SchemeKind::StandardA) - 0.961294492161).abs() < 1e-9);
        assert!((avg(SchemeKind::NoCorrection) - 0.819035593729).abs() < 1e-9);
    }
}
