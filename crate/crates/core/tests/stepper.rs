use std::ops::ControlFlow;

use proptest::prelude::*;
use viscoflow::error::StepError;
use viscoflow::grid::{divergence, FaceBc, Grid};
use viscoflow::spd::{lambda_min, Mat3, SymTensor3};
use viscoflow::stepper::{
    b_source, elastic_stress, integrate_local, objective_source, regularize_initial_b, Forcing,
    SimState, Stepper,
};
use viscoflow::ModelParams;

fn slip_box(n: usize) -> Grid {
    let mut bc = [[FaceBc::NavierSlip; 2]; 3];
    bc[2] = [FaceBc::Periodic; 2];
    Grid::new([n, n, 1], [1.0; 3], bc).unwrap()
}

fn rest(stepper: &Stepper, params: ModelParams) -> SimState {
    let g = &stepper.grid;
    stepper
        .init_state(g.velocity(), g.tensor(SymTensor3::IDENTITY), params)
        .unwrap()
}

#[test]
fn rest_state_is_a_bitwise_fixed_point() {
    for eps in [0.0, 0.05] {
        let params = ModelParams {
            eps,
            ..ModelParams::giesekus()
        };
        let st = Stepper::new(slip_box(8), Forcing::none());
        let s0 = rest(&st, params);
        let out = st.run(s0.clone(), 0.05, 0.01, |_, r| {
            assert_eq!(r.poisson_iterations, 0);
            ControlFlow::Continue(())
        });
        assert!(out.error.is_none());
        assert_eq!(out.state.step, 5);
        assert!(out.state.same_fields(&s0), "eps = {eps}");
    }
}

#[test]
fn zero_length_run_returns_the_initial_state() {
    let st = Stepper::new(slip_box(8), Forcing::none());
    let s0 = rest(&st, ModelParams::oldroyd_b());
    let mut calls = 0;
    let out = st.run(s0.clone(), 0.0, 0.01, |_, _| {
        calls += 1;
        ControlFlow::Continue(())
    });
    assert_eq!(calls, 0);
    assert_eq!(out.state, s0);
}

#[test]
fn last_step_lands_on_the_end_time() {
    let st = Stepper::new(slip_box(8), Forcing::none());
    let s0 = rest(&st, ModelParams::oldroyd_b());
    let mut dts = Vec::new();
    let out = st.run(s0, 0.025, 0.01, |_, r| {
        dts.push(r.dt);
        ControlFlow::Continue(())
    });
    assert_eq!(out.state.t, 0.025);
    assert_eq!(dts.len(), 3);
    assert!((dts[2] - 0.005).abs() < 1e-15);
}

#[test]
fn cfl_violation_keeps_the_last_valid_state() {
    let g = Grid::periodic([8, 8, 1], [1.0; 3]).unwrap();
    let st = Stepper::new(g.clone(), Forcing::none());
    let v0 = g.velocity_from(|x| [(2.0 * std::f64::consts::PI * x[1]).sin() * 10.0, 0.0, 0.0]);
    let s0 = st
        .init_state(v0, g.tensor(SymTensor3::IDENTITY), ModelParams::oldroyd_b())
        .unwrap();
    let out = st.run(s0.clone(), 1.0, 0.1, |_, _| ControlFlow::Continue(()));
    let err = out.error.unwrap();
    assert_eq!(err.step, 1);
    assert!(matches!(err.source, StepError::CflViolation { .. }));
    assert_eq!(out.state, s0);
    assert!(matches!(
        st.step(&s0, -1.0),
        Err(StepError::InvalidTimeStep(_))
    ));
}

#[test]
fn init_rejects_indefinite_data_and_regularizes_with_eps() {
    let g = slip_box(8);
    let st = Stepper::new(g.clone(), Forcing::none());
    let mut b0 = g.tensor(SymTensor3::IDENTITY);
    b0.set(3, 5, 0, SymTensor3::diag(1.0, -0.2, 1.0));
    let err = st
        .init_state(g.velocity(), b0.clone(), ModelParams::oldroyd_b())
        .unwrap_err();
    match err {
        StepError::InadmissibleInitialData { cell, lambda_min } => {
            assert_eq!(cell, [3, 5, 0]);
            assert!((lambda_min + 0.2).abs() < 1e-12);
        }
        e => panic!("unexpected {e:?}"),
    }
    let params = ModelParams {
        eps: 0.1,
        ..ModelParams::oldroyd_b()
    };
    let s = st.init_state(g.velocity(), b0, params).unwrap();
    assert_eq!(s.b.at([3, 5, 0]), SymTensor3::IDENTITY);
}

#[test]
fn regularized_datum_examples() {
    let g = Grid::periodic([4, 4, 1], [1.0; 3]).unwrap();
    let mut b0 = g.tensor(SymTensor3::diag(2.0, 3.0, 0.5));
    b0.set(0, 0, 0, SymTensor3::diag(0.05, 1.0, 1.0));
    b0.set(1, 0, 0, SymTensor3::diag(0.1, 1.0, 1.0));
    let r = regularize_initial_b(&b0, 0.1);
    assert_eq!(r.at([0, 0, 0]), SymTensor3::IDENTITY);
    // Λ = eps sits on the replaced side
    assert_eq!(r.at([1, 0, 0]), SymTensor3::IDENTITY);
    assert_eq!(r.at([2, 0, 0]), SymTensor3::diag(2.0, 3.0, 0.5));
    assert_eq!(
        regularize_initial_b(&b0, 0.0).at([1, 0, 0]),
        b0.at([1, 0, 0])
    );
}

#[test]
fn initial_velocity_is_projected() {
    let g = slip_box(16);
    let st = Stepper::new(g.clone(), Forcing::none());
    let v0 = g.velocity_from(|x| [x[0] * (1.0 - x[0]) + x[1], x[1] * x[0], 0.0]);
    let s = st
        .init_state(v0, g.tensor(SymTensor3::IDENTITY), ModelParams::oldroyd_b())
        .unwrap();
    assert!(divergence(&s.v, &g).max_abs() < 1e-10);
}

#[test]
fn cutoff_silences_degraded_cells() {
    let p = ModelParams {
        eps: 0.2,
        ..ModelParams::giesekus()
    };
    let g = Mat3([[0.3, 1.0, 0.0], [-0.4, 0.1, 0.2], [0.0, 0.5, -0.4]]);
    for b in [
        SymTensor3::diag(0.15, 1.0, 2.0),
        SymTensor3::diag(0.2, 1.0, 1.0),
        SymTensor3::diag(-0.1, 1.0, 1.0),
    ] {
        assert_eq!(b_source(&b, &g, &p), SymTensor3::ZERO);
        assert_eq!(elastic_stress(&b, &p), SymTensor3::ZERO);
    }
    assert_ne!(
        b_source(&SymTensor3::diag(0.5, 1.0, 2.0), &g, &p),
        SymTensor3::ZERO
    );
}

#[test]
fn corotational_transport_preserves_the_spectrum() {
    let p = ModelParams {
        a: 0.0,
        delta1: 0.0,
        ..ModelParams::oldroyd_b()
    };
    let g = Mat3([[0.0, 2.0, 0.5], [-1.0, 0.0, 0.3], [0.4, -0.7, 0.0]]);
    let b0 = SymTensor3::new(2.0, 1.0, 0.5, 0.3, -0.1, 0.2);
    let b = integrate_local(b0, &g, &p, 2.0, 4000);
    assert!((b.norm() - b0.norm()).abs() < 1e-10);
    assert!((b.det() - b0.det()).abs() < 1e-10);
    assert!((b.trace() - b0.trace()).abs() < 1e-10);
}

#[test]
fn uniform_relaxation_matches_the_local_ode_at_first_order() {
    let g = Grid::periodic([6, 6, 1], [1.0; 3]).unwrap();
    let p = ModelParams::giesekus();
    let b0 = SymTensor3::new(2.0, 1.5, 1.0, 0.4, 0.0, 0.0);
    let exact = integrate_local(b0, &Mat3::ZERO, &p, 0.4, 4000);
    let err = |dt: f64| {
        let st = Stepper::new(g.clone(), Forcing::none());
        let s0 = st.init_state(g.velocity(), g.tensor(b0), p).unwrap();
        let out = st.run(s0, 0.4, dt, |_, _| ControlFlow::Continue(()));
        assert!(out.error.is_none());
        (out.state.b.at([2, 3, 0]) - exact).norm()
    };
    let (e1, e2) = (err(0.02), err(0.01));
    let ratio = e1 / e2;
    assert!((1.7..2.3).contains(&ratio), "{e1} {e2}");
}

#[test]
fn newtonian_shear_wave_decays_at_the_viscous_rate() {
    let n = 32;
    let g = Grid::periodic([n, n, 1], [1.0; 3]).unwrap();
    let st = Stepper::new(g.clone(), Forcing::none());
    let p = ModelParams {
        a: 0.0,
        nu: 0.05,
        ..ModelParams::oldroyd_b()
    };
    let k = 2.0 * std::f64::consts::PI;
    let v0 = g.velocity_from(|x| [(k * x[1]).sin(), 0.0, 0.0]);
    let s0 = st
        .init_state(v0, g.tensor(SymTensor3::IDENTITY), p)
        .unwrap();
    let mut worst_div: f64 = 0.0;
    let out = st.run(s0, 0.5, 0.005, |_, r| {
        worst_div = worst_div.max(r.max_divergence);
        ControlFlow::Continue(())
    });
    assert!(out.error.is_none());
    let amp = out.state.v.c[0].max_abs();
    let expect = (-p.nu * k * k * 0.5).exp();
    assert!((amp - expect).abs() / expect < 0.01, "{amp} vs {expect}");
    assert!(worst_div < 1e-10);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let g = slip_box(12);
    let v0 = g.velocity_from(|x| [(6.0 * x[1]).sin() * x[0] * (1.0 - x[0]), 0.3 * x[0], 0.0]);
    let b0 = g.tensor_from(|x| SymTensor3::new(1.0 + x[0], 1.5, 1.0, 0.2 * x[1], 0.0, 0.0));
    let go = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            let st = Stepper::new(g.clone(), Forcing::none());
            let s0 = st
                .init_state(v0.clone(), b0.clone(), ModelParams::giesekus())
                .unwrap();
            st.run(s0, 0.03, 0.01, |_, _| ControlFlow::Continue(()))
                .state
        })
    };
    assert!(go(1).same_fields(&go(3)));
}

fn sym() -> impl Strategy<Value = SymTensor3> {
    prop::array::uniform6(-2.0..2.0f64).prop_map(SymTensor3::from_array)
}

proptest! {
    #[test]
    fn objective_source_matches_the_assembled_form(
        b in sym(),
        g in prop::array::uniform9(-2.0..2.0f64),
        a in -1.5..1.5f64,
    ) {
        let g = Mat3([[g[0], g[1], g[2]], [g[3], g[4], g[5]], [g[6], g[7], g[8]]]);
        let d = SymTensor3::sym_part(&g);
        let w = g.antisym_part();
        let got = objective_source(&b, &d, &w, a);
        let bm = b.to_mat();
        let gt = g.transpose();
        let upper = g.mul(&bm).add(&bm.mul(&gt));
        let lower = gt.mul(&bm).add(&bm.mul(&g));
        let want = upper.scale(0.5 * (1.0 + a)).sub(&lower.scale(0.5 * (1.0 - a)));
        let diff = got.to_mat().sub(&want);
        prop_assert!(diff.norm_sq().sqrt() < 1e-12 * (1.0 + want.norm_sq().sqrt()));
    }

    #[test]
    fn upper_convected_flow_keeps_b_positive(
        g in prop::array::uniform9(-1.0..1.0f64),
    ) {
        let g = Mat3([[g[0], g[1], g[2]], [g[3], g[4], g[5]], [g[6], g[7], -g[0] - g[4]]]);
        let p = ModelParams::oldroyd_b();
        let b = integrate_local(SymTensor3::IDENTITY, &g, &p, 1.0, 400);
        prop_assert!(lambda_min(&b) > 0.0);
    }
}
