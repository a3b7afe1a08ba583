//! Worked examples checked against independent hand-rolled computations on
//! plain arrays rather than the library's own matrix routines.

use dampcode::channels::{amplitude_damping, depolarizing, phase_damping_from_t2, DampingParam};
use dampcode::circuits::{
    conditioned_branch_map, detected_ad_circuit, encoded_channel_circuit, simulate_with_ancilla_postselect,
    waveplate_angle, WaveplateOp,
};
use dampcode::code::{decode, encode, syndrome_branches, Syndrome, SyndromeBranch};
use dampcode::experiment::channel_fidelity;
use dampcode::noise::{decoherence_estimate, readout_confuse, shot_loss_reweight, t2_for_error, Mechanisms, NoiseModel};
use dampcode::qmat::{kron, matrix_sqrt_psd, partial_trace, CMatrix, DensityMatrix, PureState, SubnormalizedState};
use dampcode::recovery::{apply_recovery, no_correction_channel, SchemeKind};

fn gp(g: f64) -> DampingParam {
    DampingParam::new(g).unwrap()
}

fn ad_real(g: f64) -> [[[f64; 2]; 2]; 2] {
    [[[1.0, 0.0], [0.0, (1.0 - g).sqrt()]], [[0.0, g.sqrt()], [0.0, 0.0]]]
}

/// |++⟩ amplitude vector built from the product formula.
fn plus_plus() -> [f64; 4] {
    let p = [std::f64::consts::FRAC_1_SQRT_2; 2];
    [p[0] * p[0], p[0] * p[1], p[1] * p[0], p[1] * p[1]]
}

#[test]
fn kron_of_damping_operators_by_index_formula() {
    let [a0, a1] = ad_real(0.5);
    let mut oracle = [[0.0; 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    oracle[2 * i + k][2 * j + l] = a0[i][j] * a1[k][l];
                }
            }
        }
    }
    let m = kron(
        &CMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 0.5f64.sqrt()]),
        &CMatrix::from_real(2, 2, &[0.0, 0.5f64.sqrt(), 0.0, 0.0]),
    );
    let mut nonzero = Vec::new();
    for r in 0..4 {
        for c in 0..4 {
            assert!((m[(r, c)].re - oracle[r][c]).abs() < 1e-15 && m[(r, c)].im == 0.0);
            if oracle[r][c] != 0.0 {
                nonzero.push((r, c, oracle[r][c]));
            }
        }
    }
    assert_eq!(nonzero.len(), 2);
    assert_eq!((nonzero[0].0, nonzero[0].1), (0, 1));
    assert!((nonzero[0].2 - 0.5f64.sqrt()).abs() < 1e-15);
    assert_eq!((nonzero[1].0, nonzero[1].1), (2, 3));
    assert!((nonzero[1].2 - 0.5).abs() < 1e-15);
}

#[test]
fn partial_trace_of_branch_matches_index_contraction() {
    let enc = encode(&PureState::plus()).unwrap();
    let b = &syndrome_branches(&enc, gp(0.3)).unwrap()[0];
    let rho = b.state.matrix();
    let got = partial_trace(rho, &[0]).unwrap();
    for a in 0..2 {
        for a2 in 0..2 {
            let mut want = num_complex::Complex64::new(0.0, 0.0);
            for bq in 0..2 {
                want += rho[(a * 2 + bq, a2 * 2 + bq)];
            }
            assert!((got[(a, a2)] - want).norm() < 1e-15);
        }
    }
    let other = partial_trace(rho, &[1]).unwrap();
    for bq in 0..2 {
        for b2 in 0..2 {
            let want: num_complex::Complex64 = (0..2).map(|a| rho[(a * 2 + bq, a * 2 + b2)]).sum();
            assert!((other[(bq, b2)] - want).norm() < 1e-15);
        }
    }
}

#[test]
fn sqrt_of_branch_gram_round_trips() {
    let s = 0.5f64.sqrt();
    let h = 0.5;
    // (A0 ⊗ A0)E at γ=0.5, columns A0⊗A0|++⟩ and A0⊗A0|−−⟩.
    let t = CMatrix::from_real(4, 2, &[h, h, h * s, -h * s, h * s, -h * s, h * 0.5, h * 0.5]);
    let gram = &t.adjoint() * &t;
    let root = matrix_sqrt_psd(&gram).unwrap();
    assert!((&root * &root).max_abs_diff(&gram) < 1e-10);
}

#[test]
fn damping_half_on_excited_state() {
    let out = amplitude_damping(gp(0.5)).apply(&DensityMatrix::basis(1, 1)).unwrap();
    let want = CMatrix::from_real(2, 2, &[0.5, 0.0, 0.0, 0.5]);
    assert!(out.matrix().max_abs_diff(&want) < 1e-15);
}

#[test]
fn encoded_zero_branch_probabilities_by_hand() {
    let v = plus_plus();
    let ops = ad_real(0.5);
    let mut probs = [0.0; 4];
    for i in 0..2 {
        for j in 0..2 {
            let mut out = [0.0; 4];
            for r in 0..4 {
                for c in 0..4 {
                    out[r] += ops[i][r / 2][c / 2] * ops[j][r % 2][c % 2] * v[c];
                }
            }
            probs[2 * i + j] = out.iter().map(|x| x * x).sum();
        }
    }
    for (p, w) in probs.iter().zip([0.5625, 0.1875, 0.1875, 0.0625]) {
        assert!((p - w).abs() < 1e-15);
    }
    let lib = syndrome_branches(&encode(&PureState::zero()).unwrap(), gp(0.5)).unwrap();
    for (b, p) in lib.iter().zip(probs) {
        assert!((b.prob - p).abs() < 1e-12);
    }
}

#[test]
fn gadget_pipeline_probabilities_match_channel() {
    let c = encoded_channel_circuit(gp(0.5));
    let want = [0.5625, 0.1875, 0.1875, 0.0625];
    let mut total = 0.0;
    for s in Syndrome::ALL {
        let (_, p) = simulate_with_ancilla_postselect(&c, &DensityMatrix::basis(2, 0), &[(2, s.0), (3, s.1)]).unwrap();
        assert!((p - want[s.index()]).abs() < 1e-10);
        total += p;
    }
    assert!((total - 1.0).abs() < 1e-10);
}

#[test]
fn gadget_branch_at_point_three() {
    let k0 = conditioned_branch_map(&detected_ad_circuit(gp(0.3)), 1, &[(1, 0)]).unwrap();
    assert!((k0[(1, 1)].norm() - 0.7f64.sqrt()).abs() < 1e-10);
    assert!((k0[(0, 0)].norm() - 1.0).abs() < 1e-10);
}

#[test]
fn dephasing_example() {
    let x: f64 = 0.11091;
    let pd = phase_damping_from_t2(x, 1.0).unwrap();
    let pair = pd.tensor(&pd).unwrap();
    let pp = PureState::new(plus_plus().iter().map(|&a| num_complex::Complex64::new(a, 0.0)).collect()).unwrap();
    let out = pair.apply(&pp.density()).unwrap();
    let first = out.partial_trace(&[0]).unwrap();
    let infidelity = 1.0 - first.fidelity(&PureState::plus());
    assert!((infidelity - (0.5 - 0.5 * (-x).exp())).abs() < 1e-12);
    assert!((infidelity - 0.05249).abs() < 1e-5);

    let single = pd.apply(&PureState::plus().density()).unwrap();
    assert!((single.matrix()[(0, 1)].re - 0.5 * (-x).exp()).abs() < 1e-14);
}

#[test]
fn depolarizing_ten_percent_on_ground() {
    let out = depolarizing(0.1, 1).unwrap().apply(&DensityMatrix::basis(1, 0)).unwrap();
    assert!(out.matrix().max_abs_diff(&CMatrix::from_real(2, 2, &[0.95, 0.0, 0.0, 0.05])) < 1e-14);
}

#[test]
fn waveplate_at_half() {
    let want = (0.5 * 0.5f64.sqrt().asin()).to_degrees();
    assert!((waveplate_angle(gp(0.5), WaveplateOp::A0) - want).abs() < 1e-12);
    assert!((want - 22.5).abs() < 1e-12);
}

#[test]
fn decode_ground_pair_gives_plus() {
    let out = decode(&DensityMatrix::basis(2, 0)).unwrap();
    assert!((out.fidelity(&PureState::plus()) - 1.0).abs() < 1e-14);
}

#[test]
fn double_decay_branch_recovers_plus() {
    // Both code words decay to |00⟩, so the branch output is |+⟩ whatever the input.
    let enc = encode(&PureState::plus()).unwrap();
    let b = syndrome_branches(&enc, gp(0.6)).unwrap().remove(3);
    for kind in [SchemeKind::StandardA, SchemeKind::StandardB, SchemeKind::Optimal] {
        let out = apply_recovery(&b, kind, gp(0.6)).unwrap();
        assert!((out.fidelity(&PureState::plus()) - 1.0).abs() < 1e-10, "{kind}");
        assert!(out.fidelity(&PureState::minus()).abs() < 1e-10, "{kind}");
    }
    let enc = encode(&PureState::minus()).unwrap();
    assert!(syndrome_branches(&enc, gp(0.6)).unwrap()[3].prob < 1e-15);
}

#[test]
fn uncorrected_plus_at_half() {
    let out = no_correction_channel(gp(0.5), &PureState::plus().density()).unwrap();
    // ρ = [[1 − (1−γ)/2, √(1−γ)/2], [·, (1−γ)/2]] overlapped with |+⟩.
    let g: f64 = 0.5;
    let by_hand = 0.5 * ((1.0 - (1.0 - g) / 2.0) + (1.0 - g) / 2.0) + (1.0 - g).sqrt() / 2.0;
    let closed = (1.0 + 0.5f64.sqrt()).powi(2) / 4.0 + 0.125;
    assert!((out.fidelity(&PureState::plus()) - by_hand).abs() < 1e-14);
    assert!((by_hand - closed).abs() < 1e-14);
}

#[test]
fn readout_product_rule() {
    let (e0, e1) = (0.043, 0.0388);
    let out = readout_confuse(&[1.0, 0.0, 0.0, 0.0], [e0, e1]).unwrap();
    let want = [(1.0 - e0) * (1.0 - e1), (1.0 - e0) * e1, e0 * (1.0 - e1), e0 * e1];
    for (a, b) in out.iter().zip(want) {
        assert!((a - b).abs() < 1e-15);
    }
    let uniform = readout_confuse(&[0.7, 0.1, 0.1, 0.1], [0.5, 0.5]).unwrap();
    assert!(uniform.iter().all(|&p| (p - 0.25).abs() < 1e-15));
}

#[test]
fn shot_loss_renormalization() {
    let branches: Vec<SyndromeBranch> = Syndrome::ALL
        .iter()
        .map(|&s| SyndromeBranch { syndrome: s, state: SubnormalizedState::zero(4), prob: 0.25 })
        .collect();
    let (measured, ideal) = shot_loss_reweight(&branches, &[1.0, 0.5, 0.5, 1.0]).unwrap();
    let want = [1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0];
    for (m, w) in measured.iter().zip(want) {
        assert!((m - w).abs() < 1e-15);
    }
    assert_eq!(ideal, vec![0.25; 4]);
}

#[test]
fn decoherence_inversion_round_trip() {
    let t2 = t2_for_error(2680.0, 0.035).unwrap();
    let p = decoherence_estimate(2680.0, t2).unwrap().p_sys;
    assert!((p - 0.035).abs() < 1e-12);
    assert_eq!(decoherence_estimate(0.0, 550.0).unwrap().p_sys, 0.0);
}

#[test]
fn fully_depolarizing_cnots_give_half() {
    let mut m = NoiseModel::ideal();
    m.enabled = Mechanisms::none();
    m.enabled.gate_noise = true;
    for pair in ["0-1", "0-2", "1-3"] {
        m.two_gate_error.insert(pair.into(), 1.0);
    }
    for kind in [SchemeKind::StandardA, SchemeKind::Optimal] {
        for g in [0.0, 0.4, 1.0] {
            let f = channel_fidelity(kind, gp(g), Some(&m)).unwrap();
            assert!((f - 0.5).abs() < 1e-9, "{kind} γ={g}: {f}");
        }
    }
}
