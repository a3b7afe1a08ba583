//! Self-check suite behind `dampcode verify`: every structural property the
//! library promises, evaluated on randomized and gridded inputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channels::{amplitude_damping, depolarizing, phase_damping_from_t2, DampingParam, Label, LabeledChannel};
use crate::circuits::{circuit_to_unitary, conditioned_branch_map, detected_ad_circuit, Circuit, Gate};
use crate::code::{decode, encode, encode_density, syndrome_branches, syndrome_branches_matrix, EncodingIsometry, Syndrome};
use crate::experiment::{channel_fidelity, crossover, gamma_grid, haar_average_check, shot_experiment, TestStateSet};
use crate::noise::{decoherence_estimate, noisy_pipeline, readout_confuse, Mechanisms, NoiseModel, Weighting};
use crate::qmat::{
    c, gates, hermitian_eigen, matrix_sqrt_psd, partial_trace, polar_decompose, CMatrix, DensityMatrix, PureState, C64,
};
use crate::recovery::{
    apply_ops_by_circuit, generic_polar_recovery, optimal_params, recovered_state, scheme_ops, scheme_ops_with,
    OptimalParams, SchemeKind,
};

/// Deliberate defects for checking that the suite notices them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    U1Sign,
}

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Outcome = std::result::Result<String, String>;

fn ensure(cond: bool, fail: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(fail())
    }
}

fn gp(g: f64) -> DampingParam {
    DampingParam::new(g).expect("grid value in range")
}

fn grid21() -> Vec<f64> {
    gamma_grid(0.0, 1.0, 21).expect("static grid")
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    let data: Vec<C64> = (0..rows * cols)
        .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    CMatrix::from_vec(rows, cols, data).expect("finite entries")
}

fn random_density(rng: &mut ChaCha8Rng, dim: usize) -> DensityMatrix {
    let a = random_matrix(rng, dim, dim);
    let m = &a * &a.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(m.scale_real(1.0 / tr).hermitian_part()).expect("random state")
}

fn random_unitary(rng: &mut ChaCha8Rng) -> CMatrix {
    polar_decompose(&random_matrix(rng, 2, 2)).expect("square").v
}

fn params_for(g: f64, fault: Option<Fault>) -> OptimalParams {
    let p = optimal_params(gp(g));
    match fault {
        Some(Fault::U1Sign) => p.with_u1_sign_fault(),
        None => p,
    }
}

fn kron_associative(rng: &mut ChaCha8Rng) -> Outcome {
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (a, b, c) = (random_matrix(rng, 2, 2), random_matrix(rng, 2, 2), random_matrix(rng, 2, 2));
        worst = worst.max(a.kron(&b).kron(&c).max_abs_diff(&a.kron(&b.kron(&c))));
    }
    ensure(worst <= 1e-12, || format!("deviation {worst:.2e}"))?;
    Ok(format!("max deviation {worst:.1e}"))
}

fn partial_trace_total(rng: &mut ChaCha8Rng) -> Outcome {
    for dim in [2, 4, 8, 16] {
        let rho = random_density(rng, dim);
        let t = partial_trace(rho.matrix(), &[]).map_err(|e| e.to_string())?;
        ensure(t.rows() == 1 && (t[(0, 0)].re - 1.0).abs() <= 1e-12, || format!("dim {dim}: {}", t[(0, 0)]))?;
    }
    Ok("1x1 trace on 1-4 qubits".into())
}

fn polar_random(rng: &mut ChaCha8Rng) -> Outcome {
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let (rows, cols) = [(2, 2), (4, 2), (4, 4), (8, 2), (16, 4)][k % 5];
        let t = random_matrix(rng, rows, cols);
        let p = polar_decompose(&t).map_err(|e| e.to_string())?;
        let iso = (&p.v.adjoint() * &p.v).max_abs_diff(&CMatrix::identity(cols));
        let prod = (&p.v * &p.p).max_abs_diff(&t);
        worst = worst.max(iso).max(prod);
    }
    ensure(worst <= 1e-10, || format!("deviation {worst:.2e}"))?;
    Ok(format!("50 tall matrices, max deviation {worst:.1e}"))
}

fn sqrt_unique(rng: &mut ChaCha8Rng) -> Outcome {
    for dim in [2, 4, 8] {
        for _ in 0..10 {
            let a = random_matrix(rng, dim, dim);
            let m = &a * &a.adjoint();
            let r = matrix_sqrt_psd(&m).map_err(|e| e.to_string())?;
            let sq = (&r * &r).max_abs_diff(&m) / m.max_abs().max(1.0);
            let (vals, _) = hermitian_eigen(&r).map_err(|e| e.to_string())?;
            ensure(sq <= 1e-9, || format!("r·r deviates by {sq:.2e}"))?;
            ensure(vals[0] >= -1e-9, || format!("root has eigenvalue {}", vals[0]))?;
            ensure(r.is_hermitian(1e-10), || "root not Hermitian".into())?;
        }
    }
    Ok("30 random PSD inputs".into())
}

fn completeness(rng: &mut ChaCha8Rng) -> Outcome {
    for _ in 0..50 {
        let g: f64 = rng.random();
        let p: f64 = rng.random();
        let t: f64 = rng.random::<f64>() * 10.0;
        let ad = amplitude_damping(gp(g));
        let chans = [
            ad.clone(),
            ad.tensor(&ad).map_err(|e| e.to_string())?,
            depolarizing(p, 1).map_err(|e| e.to_string())?,
            depolarizing(p, 2).map_err(|e| e.to_string())?,
            phase_damping_from_t2(t, 3.0).map_err(|e| e.to_string())?,
        ];
        for ch in chans {
            LabeledChannel::new(ch.branches().to_vec()).map_err(|e| format!("γ={g} p={p}: {e}"))?;
        }
    }
    Ok("50 random parameter sets".into())
}

fn apply_is_branch_sum(rng: &mut ChaCha8Rng) -> Outcome {
    for _ in 0..50 {
        let g: f64 = rng.random();
        let ad = amplitude_damping(gp(g));
        let pair = ad.tensor(&ad).map_err(|e| e.to_string())?;
        for (ch, dim) in [(&ad, 2), (&pair, 4)] {
            let rho = random_density(rng, dim);
            let whole = ch.apply(&rho).map_err(|e| e.to_string())?;
            let mut sum = CMatrix::zeros(dim, dim);
            let mut ptot = 0.0;
            for label in ch.labels() {
                let (st, p) = ch.apply_branch(&rho, label).map_err(|e| e.to_string())?;
                sum = &sum + st.matrix();
                ptot += p;
            }
            let d = whole.matrix().max_abs_diff(&sum);
            ensure(d <= 1e-12, || format!("deviation {d:.2e}"))?;
            ensure((ptot - 1.0).abs() <= 1e-10, || format!("probabilities sum to {ptot}"))?;
        }
    }
    Ok("50 random states".into())
}

fn apply_keeps_states(rng: &mut ChaCha8Rng) -> Outcome {
    for _ in 0..50 {
        let ch = amplitude_damping(gp(rng.random()));
        let out = ch.apply(&random_density(rng, 2)).map_err(|e| e.to_string())?;
        DensityMatrix::new(out.matrix().clone()).map_err(|e| e.to_string())?;
        let ch = depolarizing(rng.random(), 2).map_err(|e| e.to_string())?;
        let out = ch.apply(&random_density(rng, 4)).map_err(|e| e.to_string())?;
        DensityMatrix::new(out.matrix().clone()).map_err(|e| e.to_string())?;
    }
    Ok("outputs Hermitian, PSD, unit trace".into())
}

fn ground_fixed_point() -> Outcome {
    let ground = PureState::zero().density();
    for g in grid21() {
        let out = amplitude_damping(gp(g)).apply(&ground).map_err(|e| e.to_string())?;
        ensure(out.matrix().max_abs_diff(ground.matrix()) <= 1e-15, || format!("γ={g}"))?;
    }
    Ok("|0⟩ invariant on 21-point grid".into())
}

fn gadget_matches_kraus() -> Outcome {
    let mut worst: f64 = 0.0;
    for g in grid21() {
        let c = detected_ad_circuit(gp(g));
        let ch = amplitude_damping(gp(g));
        for bit in 0..2u8 {
            let k = conditioned_branch_map(&c, 1, &[(1, bit)]).map_err(|e| e.to_string())?;
            let want = ch.kraus(&Label::single(bit)).map_err(|e| e.to_string())?;
            worst = worst.max(crate::qmat::phase_insensitive_diff(&k, want));
        }
    }
    ensure(worst < 1e-9, || format!("deviation {worst:.2e}"))?;
    Ok(format!("21 γ values, max deviation {worst:.1e}"))
}

fn random_circuits_unitary(rng: &mut ChaCha8Rng) -> Outcome {
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let width = rng.random_range(1..=4);
        let mut c = Circuit::new(width).map_err(|e| e.to_string())?;
        for _ in 0..rng.random_range(0..12) {
            let q = rng.random_range(0..width);
            let other = (q + rng.random_range(1..width.max(2))) % width;
            let theta = rng.random::<f64>() * 6.3;
            let g = match rng.random_range(0..7) {
                0 => Gate::H(q),
                1 => Gate::X(q),
                2 => Gate::Z(q),
                3 => Gate::Ry { theta, qubit: q },
                4 => Gate::U { matrix: random_unitary(rng), qubit: q },
                5 if width > 1 => Gate::Cnot { control: q, target: other },
                _ if width > 1 => Gate::CRy { theta, control: q, target: other },
                _ => Gate::H(q),
            };
            c.push(g).map_err(|e| e.to_string())?;
        }
        let u = circuit_to_unitary(&c).map_err(|e| e.to_string())?;
        worst = worst.max((&u.adjoint() * &u).max_abs_diff(&CMatrix::identity(1 << width)));
    }
    ensure(worst <= 1e-10, || format!("deviation {worst:.2e}"))?;
    Ok(format!("100 random circuits, max deviation {worst:.1e}"))
}

fn encode_decode_round_trip() -> Outcome {
    for psi in TestStateSet::six().states() {
        let f = decode(&encode(psi).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?
            .fidelity(psi);
        ensure(f >= 1.0 - 1e-10, || format!("fidelity {f}"))?;
    }
    Ok("six states".into())
}

fn syndrome_normalization(rng: &mut ChaCha8Rng) -> Outcome {
    for _ in 0..200 {
        let rho = random_density(rng, 2);
        let g: f64 = rng.random();
        let enc = encode_density(&rho).map_err(|e| e.to_string())?;
        let b = syndrome_branches(&enc, gp(g)).map_err(|e| e.to_string())?;
        let total: f64 = b.iter().map(|x| x.prob).sum();
        ensure((total - 1.0).abs() <= 1e-10, || format!("γ={g}: {total}"))?;
    }
    Ok("200 random inputs".into())
}

fn syndrome_linearity(rng: &mut ChaCha8Rng) -> Outcome {
    for _ in 0..50 {
        let g = gp(rng.random());
        let a = encode_density(&random_density(rng, 2)).map_err(|e| e.to_string())?;
        let b = encode_density(&random_density(rng, 2)).map_err(|e| e.to_string())?;
        let w: f64 = rng.random();
        let mix = &a.matrix().scale_real(w) + &b.matrix().scale_real(1.0 - w);
        let bm = syndrome_branches_matrix(&mix, g).map_err(|e| e.to_string())?;
        let ba = syndrome_branches(&a, g).map_err(|e| e.to_string())?;
        let bb = syndrome_branches(&b, g).map_err(|e| e.to_string())?;
        for k in 0..4 {
            let want = &ba[k].state.matrix().scale_real(w) + &bb[k].state.matrix().scale_real(1.0 - w);
            ensure(bm[k].state.matrix().max_abs_diff(&want) <= 1e-12, || "state mismatch".into())?;
            let pw = w * ba[k].prob + (1.0 - w) * bb[k].prob;
            ensure((bm[k].prob - pw).abs() <= 1e-12, || "probability mismatch".into())?;
        }
    }
    Ok("50 random mixtures".into())
}

fn code_space_stabilizer() -> Outcome {
    let xx = gates::x().kron(&gates::x());
    for psi in [PureState::zero(), PureState::one()] {
        let enc = encode(&psi).map_err(|e| e.to_string())?;
        let d = (&xx * enc.matrix()).max_abs_diff(enc.matrix());
        ensure(d <= 1e-12, || format!("deviation {d:.2e}"))?;
    }
    Ok("X⊗X = +1 on both code words".into())
}

fn ops_unitary() -> Outcome {
    for g in grid21() {
        for kind in [SchemeKind::StandardA, SchemeKind::StandardB, SchemeKind::Optimal] {
            for s in Syndrome::ALL {
                let ops = scheme_ops(kind, s, gp(g)).map_err(|e| e.to_string())?;
                ensure(ops.all().iter().all(|m| m.is_unitary(1e-10)), || format!("{kind} {s} γ={g}"))?;
            }
        }
    }
    Ok("3 schemes × 4 syndromes × 21 γ".into())
}

fn closed_form_matches_polar(fault: Option<Fault>) -> Outcome {
    let mut worst: f64 = 0.0;
    for g in grid21() {
        let params = params_for(g, fault);
        let set = generic_polar_recovery(&EncodingIsometry::new(), gp(g)).map_err(|e| e.to_string())?;
        for psi in TestStateSet::six().states() {
            let enc = encode(psi).map_err(|e| e.to_string())?;
            for b in syndrome_branches(&enc, gp(g)).map_err(|e| e.to_string())? {
                let Some(rho) = b.normalized() else { continue };
                let ops = scheme_ops_with(SchemeKind::Optimal, b.syndrome, &params).map_err(|e| e.to_string())?;
                let closed = apply_ops_by_circuit(&ops, &rho).map_err(|e| e.to_string())?;
                let (polar, _) = set.apply(b.syndrome, rho.matrix());
                let polar = polar.scale_real(1.0 / polar.trace().re);
                worst = worst.max(closed.matrix().max_abs_diff(&polar));
            }
        }
    }
    ensure(worst <= 1e-8, || format!("max deviation {worst:.2e}"))?;
    Ok(format!("21 γ × six inputs, max deviation {worst:.1e}"))
}

fn optimal_dominates() -> Outcome {
    for g in grid21() {
        let opt = channel_fidelity(SchemeKind::Optimal, gp(g), None).map_err(|e| e.to_string())?;
        for other in [SchemeKind::StandardA, SchemeKind::StandardB, SchemeKind::NoCorrection] {
            let f = channel_fidelity(other, gp(g), None).map_err(|e| e.to_string())?;
            ensure(opt - f >= -1e-9, || format!("γ={g}: optimal {opt} < {other} {f}"))?;
        }
    }
    Ok("21-point grid".into())
}

fn zero_damping_identity() -> Outcome {
    for kind in SchemeKind::ALL {
        for psi in TestStateSet::six().states() {
            let f = recovered_state(kind, gp(0.0), &psi.density())
                .map_err(|e| e.to_string())?
                .fidelity(psi);
            ensure((f - 1.0).abs() <= 1e-9, || format!("{kind}: {f}"))?;
        }
    }
    Ok("all schemes, six inputs".into())
}

fn standard_variants_equal() -> Outcome {
    for g in grid21() {
        for psi in TestStateSet::six().states() {
            let a = recovered_state(SchemeKind::StandardA, gp(g), &psi.density()).map_err(|e| e.to_string())?;
            let b = recovered_state(SchemeKind::StandardB, gp(g), &psi.density()).map_err(|e| e.to_string())?;
            ensure(a.matrix().max_abs_diff(b.matrix()) <= 1e-12, || format!("γ={g}"))?;
        }
    }
    Ok("density-level equality on 21-point grid".into())
}

fn decoherence_monotone() -> Outcome {
    let mut last = -1.0;
    for k in 0..50 {
        let p = decoherence_estimate(k as f64 * 10.0, 100.0).map_err(|e| e.to_string())?.p_sys;
        ensure(p > last && p < 0.5, || format!("not increasing at {k}"))?;
        last = p;
    }
    let mut last = 1.0;
    for k in 1..50 {
        let p = decoherence_estimate(100.0, k as f64 * 10.0).map_err(|e| e.to_string())?.p_sys;
        ensure(p < last, || format!("not decreasing in T2 at {k}"))?;
        last = p;
    }
    Ok("increasing in duration, decreasing in T2, below 1/2".into())
}

fn silent_noise_is_ideal() -> Outcome {
    let model = NoiseModel::ideal();
    for g in grid21() {
        for kind in SchemeKind::ALL {
            for psi in TestStateSet::six().states() {
                let a = noisy_pipeline(kind, gp(g), &model, psi).map_err(|e| e.to_string())?;
                let b = recovered_state(kind, gp(g), &psi.density()).map_err(|e| e.to_string())?;
                ensure(a.matrix().max_abs_diff(b.matrix()) <= 1e-12, || format!("{kind} γ={g}"))?;
            }
        }
    }
    Ok("all schemes on 21-point grid".into())
}

fn readout_stochastic(rng: &mut ChaCha8Rng) -> Outcome {
    for _ in 0..100 {
        let raw: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>());
        let total: f64 = raw.iter().sum();
        let p = raw.map(|x| x / total);
        let eps = [rng.random(), rng.random()];
        let out = readout_confuse(&p, eps).map_err(|e| e.to_string())?;
        let s: f64 = out.iter().sum();
        ensure((s - 1.0).abs() <= 1e-12 && out.iter().all(|&x| x >= 0.0), || format!("sum {s}"))?;
    }
    Ok("100 random distributions".into())
}

/// Model with only depolarizing two-qubit gate errors at rate `p2`.
pub fn cnot_only_model(p2: f64) -> NoiseModel {
    let mut m = NoiseModel::ideal();
    m.name = format!("cnot-{p2}");
    m.enabled = Mechanisms::none();
    m.enabled.gate_noise = true;
    for pair in ["0-1", "0-2", "1-3"] {
        m.two_gate_error.insert(pair.into(), p2);
    }
    m
}

fn crossover_monotone() -> Outcome {
    let grid = gamma_grid(0.0, 1.0, 41).map_err(|e| e.to_string())?;
    let mut last = 0.0;
    let mut found = Vec::new();
    for p2 in [0.02, 0.05, 0.1, 0.2, 0.4] {
        let m = cnot_only_model(p2);
        let gc = crate::experiment::find_crossover(SchemeKind::Optimal, Some(&m), &grid)
            .map_err(|e| e.to_string())?
            .ok_or_else(|| format!("no crossover at p2={p2}"))?;
        ensure(gc >= last, || format!("γ_c fell to {gc:.3} at p2={p2}"))?;
        last = gc;
        found.push(format!("{gc:.3}"));
    }
    Ok(format!("γ_c = {}", found.join(", ")))
}

fn sampled_matches_exact() -> Outcome {
    let mut exceed = 0;
    let mut trials = 0;
    for kind in SchemeKind::ALL {
        for g in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let exact = channel_fidelity(kind, gp(g), None).map_err(|e| e.to_string())?;
            let r = shot_experiment(kind, gp(g), None, 100_000, 1, Weighting::Measured).map_err(|e| e.to_string())?;
            trials += 1;
            if (r.fidelity - exact).abs() > 3.0 * r.stderr {
                exceed += 1;
            }
        }
    }
    let allowed = (trials as f64 * 0.01).ceil() as usize;
    ensure(exceed <= allowed, || format!("{exceed}/{trials} beyond 3σ"))?;
    Ok(format!("{exceed}/{trials} beyond 3σ (allowed {allowed})"))
}

fn six_state_is_haar() -> Outcome {
    for kind in SchemeKind::ALL {
        for g in [0.3, 0.7] {
            let exact = channel_fidelity(kind, gp(g), None).map_err(|e| e.to_string())?;
            let h = haar_average_check(kind, gp(g), None, 4000, 17).map_err(|e| e.to_string())?;
            ensure((h.mean - exact).abs() <= 3.0 * h.stderr.max(1e-12), || {
                format!("{kind} γ={g}: Haar {:.5} vs {exact:.5}", h.mean)
            })?;
        }
    }
    Ok("5 schemes × γ ∈ {0.3, 0.7}".into())
}

fn fidelities_bounded_and_repeatable() -> Outcome {
    for p in ["ibmq", "optical", "nmr"] {
        let m = NoiseModel::preset(p).map_err(|e| e.to_string())?;
        for g in [0.0, 0.5, 1.0] {
            for kind in SchemeKind::ALL {
                let a = channel_fidelity(kind, gp(g), Some(&m)).map_err(|e| e.to_string())?;
                let b = channel_fidelity(kind, gp(g), Some(&m)).map_err(|e| e.to_string())?;
                ensure((0.0..=1.0).contains(&a), || format!("{p} {kind}: {a}"))?;
                ensure(a.to_bits() == b.to_bits(), || format!("{p} {kind} not repeatable"))?;
            }
        }
    }
    Ok("presets × schemes × 3 γ".into())
}

fn crossover_ideal_absent() -> Outcome {
    let grid = grid21();
    let f = |k| -> std::result::Result<Vec<f64>, String> {
        grid.iter()
            .map(|&g| channel_fidelity(k, gp(g), None).map_err(|e| e.to_string()))
            .collect()
    };
    let gc = crossover(&grid, &f(SchemeKind::Optimal)?, &f(SchemeKind::NoCorrection)?).map_err(|e| e.to_string())?;
    ensure(gc.is_none(), || format!("unexpected crossover {gc:?}"))?;
    Ok("no crossover under ideal gates".into())
}

fn csv_round_trip() -> Outcome {
    let recs = crate::experiment::sweep(&[0.0, 0.5], &[SchemeKind::Optimal], None).map_err(|e| e.to_string())?;
    let text = crate::cli::records_to_csv(&recs).map_err(|e| e.to_string())?;
    ensure(text.starts_with(crate::cli::CSV_HEADER), || "header changed".into())?;
    let back = crate::cli::records_from_csv(&text).map_err(|e| e.to_string())?;
    ensure(back == recs, || "round trip changed rows".into())?;
    Ok("header and rows survive a round trip".into())
}

/// Runs every check; `fault` injects a known defect.
pub fn run_suite(fault: Option<Fault>) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut out = Vec::new();
    let mut add = |name: &'static str, r: Outcome| {
        let (passed, detail) = match r {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        out.push(Check { name, passed, detail });
    };
    add("kron associativity", kron_associative(&mut rng));
    add("partial trace over all qubits", partial_trace_total(&mut rng));
    add("polar decomposition on random tall matrices", polar_random(&mut rng));
    add("PSD square root uniqueness", sqrt_unique(&mut rng));
    add("channel completeness", completeness(&mut rng));
    add("apply equals sum of branches", apply_is_branch_sum(&mut rng));
    add("channel outputs are states", apply_keeps_states(&mut rng));
    add("ground state fixed under damping", ground_fixed_point());
    add("gadget branches equal Kraus operators", gadget_matches_kraus());
    add("random circuits are unitary", random_circuits_unitary(&mut rng));
    add("encode then decode", encode_decode_round_trip());
    add("syndrome probabilities sum to one", syndrome_normalization(&mut rng));
    add("syndrome extraction is linear", syndrome_linearity(&mut rng));
    add("code words stabilized by XX", code_space_stabilizer());
    add("recovery gates unitary", ops_unitary());
    add("closed-form optimal equals polar synthesis", closed_form_matches_polar(fault));
    add("optimal dominates under ideal gates", optimal_dominates());
    add("zero damping is lossless", zero_damping_identity());
    add("standard A equals standard B", standard_variants_equal());
    add("no crossover under ideal gates", crossover_ideal_absent());
    add("decoherence estimate monotone", decoherence_monotone());
    add("silent noise model equals ideal", silent_noise_is_ideal());
    add("readout confusion is stochastic", readout_stochastic(&mut rng));
    add("crossover grows with CNOT error", crossover_monotone());
    add("sampled fidelity matches exact", sampled_matches_exact());
    add("six-state average equals Haar average", six_state_is_haar());
    add("noisy fidelities bounded and repeatable", fidelities_bounded_and_repeatable());
    add("CSV schema round trip", csv_round_trip());
    out
}
