use std::sync::Arc;

use faer::Mat;
use proptest::prelude::*;

use hybridem::assembly::{project_broken_vector, Discretization, Material};
use hybridem::diagnostics::{eoc, Diagnostics};
use hybridem::solvers::{self, constrained_lsq, DEFAULT_RANK_TOL};
use hybridem::spaces::FieldCoefficients;
use hybridem::timedomain::{init_dhat, Mode, SourceSpec, Stepper, TimeState};

fn small_matrix(rows: usize, cols: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, rows * cols)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn constrained_minimizer_is_feasible_and_stationary(
        r in small_matrix(8, 8),
        c in small_matrix(3, 8),
        x0 in small_matrix(1, 8),
        q in small_matrix(1, 8),
    ) {
        let n = 8;
        let r = Mat::from_fn(n, n, |i, j| r[i * n + j]);
        let q_mat = r.transpose() * &r + Mat::<f64>::identity(n, n);
        let c = Mat::from_fn(3, n, |i, j| c[i * n + j]);
        let g: Vec<f64> = (0..3).map(|i| (0..n).map(|j| c[(i, j)] * x0[j]).sum()).collect();
        let x = constrained_lsq(q_mat.as_ref(), &q, c.as_ref(), &g, DEFAULT_RANK_TOL).unwrap();
        for i in 0..3 {
            let cx: f64 = (0..n).map(|j| c[(i, j)] * x[j]).sum();
            prop_assert!((cx - g[i]).abs() < 1e-9);
        }
        // the gradient Qx − q must lie in the row space of C
        let grad: Vec<f64> = (0..n).map(|i| (0..n).map(|j| q_mat[(i, j)] * x[j]).sum::<f64>() - q[i]).collect();
        let ct = Mat::from_fn(n, 3, |i, j| c[(j, i)]);
        let lam = constrained_lsq(
            (ct.transpose() * &ct).as_ref(),
            &(0..3).map(|i| (0..n).map(|j| c[(i, j)] * grad[j]).sum()).collect::<Vec<f64>>(),
            Mat::<f64>::zeros(0, 3).as_ref(),
            &[],
            DEFAULT_RANK_TOL,
        ).unwrap();
        let fitted: Vec<f64> = (0..n).map(|i| (0..3).map(|j| ct[(i, j)] * lam[j]).sum()).collect();
        for (a, b) in grad.iter().zip(&fitted) {
            prop_assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn rate_of_power_law_is_its_exponent(c in 0.1f64..10.0, p in 0.5f64..7.0) {
        prop_assert!((eoc(c, c * 0.5f64.powf(p)) - p).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn conforming_embedding_lies_in_kernel(n in 1usize..5, r in 2usize..6) {
        let d = Discretization::uniform(n, r, r + 1, Material::default()).unwrap();
        prop_assert!(solvers::max_abs(&solvers::matmul(&d.matrices.b, &d.matrices.p)) < 1e-12);
    }

    #[test]
    fn charge_constraint_holds_for_polynomial_sources(
        coeffs in small_matrix(1, 8),
        dt in 0.01f64..0.2,
    ) {
        let disc = Discretization::uniform(2, 2, 3, Material::default()).unwrap();
        let c = coeffs.clone();
        let e = move |x: [f64; 2]| [c[0] + c[1] * x[1] + c[2] * x[0] * x[0], c[3] * x[0] + c[4] * x[1] * x[1]];
        let c = coeffs.clone();
        let div_e = move |x: [f64; 2]| 2.0 * c[2] * x[0] + 2.0 * c[4] * x[1];
        let (c5, c6, c7) = (coeffs[5], coeffs[6], coeffs[7]);
        let sources = SourceSpec {
            j: Some(Arc::new(move |x, t| [c5 * x[0] * x[1] + t * c7, c6 * x[1] * x[1]])),
            rho: Some(Arc::new(move |x, t| div_e(x) - t * (c5 * x[1] + 2.0 * c6 * x[1]))),
        };
        let stepper = Stepper::new(&disc, Mode::Embedding, dt, sources.clone(), true, DEFAULT_RANK_TOL).unwrap();
        let diag = Diagnostics::new(&disc);
        let d0 = project_broken_vector(&disc.mesh, disc.k, &e);
        let dhat = init_dhat(&disc, &d0, &sources.rho_load(&disc, 0.0), DEFAULT_RANK_TOL).unwrap();
        let mut state = TimeState {
            d: FieldCoefficients::new(&disc.broken, d0).unwrap(),
            dhat: FieldCoefficients::new(&disc.div, dhat).unwrap(),
            ..TimeState::zero(&disc)
        };
        for _ in 0..16 {
            state = stepper.step(&state).unwrap();
            let rho = sources.rho_load(&disc, state.t);
            prop_assert!(diag.constraint_residual(&state.d.values, &state.dhat.values, &rho) < 1e-10);
        }
    }
}
