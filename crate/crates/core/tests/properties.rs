use dampcode::channels::{amplitude_damping, depolarizing, DampingParam};
use dampcode::code::{encode_density, syndrome_branches};
use dampcode::qmat::{c, hermitian_eigen, matrix_sqrt_psd, partial_trace, polar_decompose, CMatrix, DensityMatrix};
use dampcode::recovery::{recovered_state, SchemeKind};
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), rows * cols)
        .prop_map(move |v| CMatrix::from_vec(rows, cols, v.into_iter().map(|(a, b)| c(a, b)).collect()).unwrap())
}

fn density(dim: usize) -> impl Strategy<Value = DensityMatrix> {
    matrix(dim, dim).prop_filter_map("nonzero", |a| {
        let m = &a * &a.adjoint();
        let tr = m.trace().re;
        (tr > 1e-6).then(|| DensityMatrix::new(m.scale_real(1.0 / tr).hermitian_part()).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kron_is_associative(a in matrix(2, 2), b in matrix(2, 2), d in matrix(2, 2)) {
        prop_assert!(a.kron(&b).kron(&d).max_abs_diff(&a.kron(&b.kron(&d))) <= 1e-12);
    }

    #[test]
    fn polar_of_tall_matrix(t in matrix(4, 2)) {
        let p = polar_decompose(&t).unwrap();
        prop_assert!((&p.v.adjoint() * &p.v).max_abs_diff(&CMatrix::identity(2)) <= 1e-10);
        prop_assert!((&p.v * &p.p).max_abs_diff(&t) <= 1e-10);
    }

    #[test]
    fn psd_root_squares_back(a in matrix(4, 4)) {
        let m = &a * &a.adjoint();
        let r = matrix_sqrt_psd(&m).unwrap();
        prop_assert!((&r * &r).max_abs_diff(&m) <= 1e-9);
        let (vals, _) = hermitian_eigen(&r).unwrap();
        prop_assert!(vals.iter().all(|&x| x >= -1e-9));
    }

    #[test]
    fn full_partial_trace_is_trace(rho in density(8)) {
        let t = partial_trace(rho.matrix(), &[]).unwrap();
        prop_assert!((t[(0, 0)] - rho.matrix().trace()).norm() <= 1e-12);
    }

    #[test]
    fn damping_is_complete(g in 0.0f64..=1.0) {
        let ad = amplitude_damping(DampingParam::new(g).unwrap());
        let mut sum = CMatrix::zeros(2, 2);
        for b in ad.branches() {
            sum = &sum + &(&b.kraus.adjoint() * &b.kraus);
        }
        prop_assert!(sum.max_abs_diff(&CMatrix::identity(2)) <= 1e-10);
    }

    #[test]
    fn channel_equals_branch_sum(g in 0.0f64..=1.0, rho in density(4)) {
        let ad = amplitude_damping(DampingParam::new(g).unwrap());
        let pair = ad.tensor(&ad).unwrap();
        let whole = pair.apply(&rho).unwrap();
        let mut sum = CMatrix::zeros(4, 4);
        for label in pair.labels() {
            sum = &sum + pair.apply_branch(&rho, label).unwrap().0.matrix();
        }
        prop_assert!(whole.matrix().max_abs_diff(&sum) <= 1e-12);
    }

    #[test]
    fn depolarizing_output_is_state(p in 0.0f64..=1.0, rho in density(4)) {
        let out = depolarizing(p, 2).unwrap().apply(&rho).unwrap();
        prop_assert!(DensityMatrix::new(out.matrix().clone()).is_ok());
    }

    #[test]
    fn syndrome_probabilities_normalized(g in 0.0f64..=1.0, rho in density(2)) {
        let b = syndrome_branches(&encode_density(&rho).unwrap(), DampingParam::new(g).unwrap()).unwrap();
        prop_assert!((b.iter().map(|x| x.prob).sum::<f64>() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn recovery_is_linear(g in 0.0f64..=1.0, a in density(2), b in density(2), w in 0.0f64..=1.0) {
        let gamma = DampingParam::new(g).unwrap();
        let mix = DensityMatrix::new(&a.matrix().scale_real(w) + &b.matrix().scale_real(1.0 - w)).unwrap();
        for kind in [SchemeKind::StandardA, SchemeKind::Optimal, SchemeKind::NoCorrection] {
            let lhs = recovered_state(kind, gamma, &mix).unwrap();
            let ra = recovered_state(kind, gamma, &a).unwrap();
            let rb = recovered_state(kind, gamma, &b).unwrap();
            let rhs = &ra.matrix().scale_real(w) + &rb.matrix().scale_real(1.0 - w);
            prop_assert!(lhs.matrix().max_abs_diff(&rhs) <= 1e-10);
        }
    }

    #[test]
    fn optimal_never_worse_per_state(g in 0.0f64..=1.0, rho in density(2)) {
        let gamma = DampingParam::new(g).unwrap();
        let opt = recovered_state(SchemeKind::Optimal, gamma, &rho).unwrap();
        let polar = recovered_state(SchemeKind::GenericPolar, gamma, &rho).unwrap();
        prop_assert!(opt.matrix().max_abs_diff(polar.matrix()) <= 1e-8);
    }
}
