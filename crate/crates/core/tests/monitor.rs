use std::f64::consts::PI;
use std::ops::ControlFlow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use viscoflow::error::MonitorError;
use viscoflow::grid::{fill_cell_ghosts, grad_velocity, FaceBc, Grid};
use viscoflow::monitor::{
    budget_residual, compute_budget, gradient_identity_check, positivity_report, weak_residual,
    BudgetTracker, EnergyBudget, TestField,
};
use viscoflow::spd::SymTensor3;
use viscoflow::stepper::{Forcing, SimState, Stepper};
use viscoflow::ModelParams;

fn channel(nx: usize, ny: usize) -> Grid {
    let mut bc = [[FaceBc::Periodic; 2]; 3];
    bc[1] = [FaceBc::NavierSlip; 2];
    Grid::new([nx, ny, 1], [1.0, 1.0, 1.0], bc).unwrap()
}

fn shear_state(st: &Stepper, p: ModelParams) -> SimState {
    let g = &st.grid;
    let v0 = g.velocity_from(|x| [(PI * x[1]).cos() + 0.5, 0.0, 0.0]);
    let b0 = g.tensor_from(|x| {
        SymTensor3::new(
            1.0 + 0.3 * (PI * x[1]).sin(),
            1.0,
            1.0,
            0.1 * (2.0 * PI * x[1]).cos(),
            0.0,
            0.0,
        )
    });
    st.init_state(v0, b0, p).unwrap()
}

#[test]
fn rest_state_budget_vanishes() {
    let g = channel(8, 8);
    let st = Stepper::new(g.clone(), Forcing::none());
    let s = st
        .init_state(
            g.velocity(),
            g.tensor(SymTensor3::IDENTITY),
            ModelParams::giesekus(),
        )
        .unwrap();
    let b = compute_budget(&s, &Forcing::none()).unwrap();
    assert!(b.values().iter().all(|&x| x == 0.0), "{b:?}");
    let r = budget_residual(&[b, b, b], 0.1).unwrap();
    assert!(r.iter().all(|x| x.signed == 0.0));
    assert_eq!(
        budget_residual(&[b], 0.1).unwrap_err(),
        MonitorError::ShortHistory { needed: 2, got: 1 }
    );
}

#[test]
fn uniform_stretch_relaxation_by_hand() {
    let g = Grid::periodic([4, 4, 4], [1.0, 2.0, 0.5]).unwrap();
    let p = ModelParams {
        gamma: 0.0,
        classical: true,
        delta1: 1.0,
        delta2: 0.0,
        mu: 1.0,
        ..ModelParams::oldroyd_b()
    };
    let st = Stepper::new(g.clone(), Forcing::none());
    let s = st
        .init_state(g.velocity(), g.tensor(SymTensor3::diag(2.0, 1.0, 1.0)), p)
        .unwrap();
    let b = compute_budget(&s, &Forcing::none()).unwrap();
    // (√2 − 1/√2)² = 0.5 per unit volume
    assert!((b.relax_diss_1 - 0.5 * g.volume()).abs() < 1e-14);
    assert_eq!(b.diff_diss_gamma, 0.0);
    assert_eq!(b.diff_diss_inv, 0.0);
    assert_eq!(b.kinetic, 0.0);
    // ψ = −ln det B + tr B − 3 = −ln 2 + 1 per unit volume
    assert!((b.free_energy - (1.0 - 2f64.ln()) * g.volume()).abs() < 1e-13);
}

#[test]
fn linear_shear_dissipation_by_hand() {
    // u = y on a periodic-in-x channel with free-slip walls (σ = 0): every
    // edge carries ∂_y u = 1, walls at half weight with mirror ghosts (0)
    let g = channel(8, 8);
    let st = Stepper::new(g.clone(), Forcing::none());
    let p = ModelParams {
        a: 0.0,
        sigma: 0.0,
        nu: 1.0,
        ..ModelParams::oldroyd_b()
    };
    let mut s = st
        .init_state(g.velocity(), g.tensor(SymTensor3::IDENTITY), p)
        .unwrap();
    s.v = g.velocity_from(|x| [x[1], 0.0, 0.0]);
    let b = compute_budget(&s, &Forcing::none()).unwrap();
    // 7 interior edge rows of unit shear, 2 wall rows carrying zero
    let expect = 7.0 / 8.0;
    assert!(
        (b.viscous_diss - expect).abs() < 1e-12,
        "{}",
        b.viscous_diss
    );
    assert_eq!(b.slip_diss, 0.0);
    let sum_sq: f64 = (0..8)
        .map(|j| ((j as f64 + 0.5) / 8.0).powi(2))
        .sum::<f64>()
        / 8.0;
    assert!((b.kinetic - 0.5 * sum_sq).abs() < 1e-14);
}

#[test]
fn positivity_report_examples() {
    let g = Grid::periodic([4, 4, 1], [1.0; 3]).unwrap();
    let mut b = g.tensor(SymTensor3::IDENTITY);
    let r = positivity_report(&b, 0.0);
    assert_eq!((r.min_lambda, r.min_det, r.floor_ok), (1.0, 1.0, true));
    assert_eq!(r.histogram.iter().find(|x| x.0 == 0).unwrap().1, 16);
    b.set(2, 1, 0, SymTensor3::diag(0.01, 1.0, 1.0));
    let r = positivity_report(&b, 0.05);
    assert!((r.min_lambda - 0.01).abs() < 1e-15);
    assert_eq!(r.argmin, [2, 1, 0]);
    assert!(!r.floor_ok);
    assert_eq!(r.histogram.iter().find(|x| x.0 == -2).unwrap().1, 1);
}

#[test]
fn singular_state_is_rejected() {
    let g = Grid::periodic([4, 4, 1], [1.0; 3]).unwrap();
    let st = Stepper::new(g.clone(), Forcing::none());
    let mut s = st
        .init_state(
            g.velocity(),
            g.tensor(SymTensor3::IDENTITY),
            ModelParams::oldroyd_b(),
        )
        .unwrap();
    s.b.set(0, 0, 0, SymTensor3::diag(0.0, 1.0, 1.0));
    assert!(matches!(
        compute_budget(&s, &Forcing::none()),
        Err(MonitorError::Singular(_))
    ));
}

#[test]
fn gradient_identity_holds_cellwise() {
    let g = channel(12, 10);
    let b = g.tensor_from(|x| {
        SymTensor3::new(
            2.0 + (2.0 * PI * x[0]).sin(),
            1.5 + 0.5 * (PI * x[1]).cos(),
            1.0,
            0.3 * (2.0 * PI * x[0]).cos() * x[1],
            0.1,
            -0.2 * x[1],
        )
    });
    for gamma in [0.1, 0.5, 0.9] {
        let p = ModelParams {
            gamma,
            ..ModelParams::oldroyd_b()
        };
        assert!(gradient_identity_check(&b, &g, &p).unwrap() < 1e-10);
    }
}

#[test]
fn dissipation_terms_are_nonnegative_on_random_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let g = channel(8, 8);
    let st = Stepper::new(g.clone(), Forcing::none());
    for _ in 0..5 {
        let amp: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let v0 = g.velocity_from(|x| {
            [
                amp[0] * (3.0 * x[1]).sin(),
                amp[1] * x[0] * (1.0 - x[1]) * x[1],
                0.0,
            ]
        });
        let b0 = g.tensor_from(|x| {
            SymTensor3::new(1.5 + amp[2] * x[0], 1.0, 2.0, 0.3 * amp[3] * x[1], 0.0, 0.1)
        });
        let p = ModelParams {
            delta2: 0.7,
            ..ModelParams::oldroyd_b()
        };
        let s = st.init_state(v0, b0, p).unwrap();
        let b = compute_budget(&s, &Forcing::none()).unwrap();
        for (name, x) in EnergyBudget::FIELDS.iter().zip(b.values()) {
            if name.ends_with("diss") || name.contains("diss_") {
                assert!(x >= -1e-12, "{name} = {x}");
            }
        }
        assert!(b.kinetic > 0.0 && b.free_energy > 0.0);
    }
}

fn shear_decay_residual(dt: f64) -> (f64, f64) {
    let st = Stepper::new(channel(8, 16), Forcing::none());
    let s0 = shear_state(&st, ModelParams::oldroyd_b());
    let mut tracker = BudgetTracker::new();
    let mut b0 = compute_budget(&s0, &Forcing::none()).unwrap();
    tracker.record(&mut b0);
    let mut worst: f64 = 0.0;
    let mut rise: f64 = f64::NEG_INFINITY;
    let mut last = b0.energy();
    let out = st.run(s0, 0.2, dt, |s, _| {
        let mut b = compute_budget(s, &Forcing::none()).unwrap();
        let r = tracker.record(&mut b);
        worst = worst.max(r.signed.abs());
        rise = rise.max(b.energy() - last);
        last = b.energy();
        ControlFlow::Continue(())
    });
    assert!(out.error.is_none());
    (worst, rise)
}

#[test]
fn budget_residual_is_first_order_in_dt() {
    let (r1, up1) = shear_decay_residual(0.004);
    let (r2, up2) = shear_decay_residual(0.002);
    let ratio = r1 / r2;
    assert!((1.5..2.5).contains(&ratio), "{r1} {r2} {ratio}");
    assert!(up1 < 0.0 && up2 < 0.0, "{up1} {up2}");
}

#[test]
fn weak_residual_vanishes_at_rest_and_validates_tests() {
    let g = channel(8, 8);
    let st = Stepper::new(g.clone(), Forcing::none());
    let s0 = st
        .init_state(
            g.velocity(),
            g.tensor(SymTensor3::IDENTITY),
            ModelParams::oldroyd_b(),
        )
        .unwrap();
    let (s1, _) = st.step(&s0, 0.01).unwrap();
    let phi = g.velocity_from_potential(|x| {
        [
            0.0,
            0.0,
            (PI * x[1]).sin().powi(2) * (2.0 * PI * x[0]).cos(),
        ]
    });
    let a = g.tensor_from(|x| SymTensor3::new(x[0], 1.0, x[1], 0.2, 0.0, 0.0));
    let f = Forcing::none();
    assert_eq!(
        weak_residual(&s0, &s1, TestField::Velocity(&phi), &f).unwrap(),
        0.0
    );
    assert_eq!(
        weak_residual(&s0, &s1, TestField::Tensor(&a), &f).unwrap(),
        0.0
    );

    let bad = g.velocity_from(|x| [x[1] * x[1], 0.0, 0.0]);
    let ok = weak_residual(&s0, &s1, TestField::Velocity(&bad), &f);
    assert!(ok.is_ok(), "x-only field is solenoidal");
    let bad = g.velocity_from(|x| [x[0], 0.0, 0.0]);
    assert!(matches!(
        weak_residual(&s0, &s1, TestField::Velocity(&bad), &f),
        Err(MonitorError::InvalidTestField(_))
    ));
    let mut leaky = phi.clone();
    leaky.c[1].set(3, 0, 0, 0.1);
    assert!(matches!(
        weak_residual(&s0, &s1, TestField::Velocity(&leaky), &f),
        Err(MonitorError::InvalidTestField(_))
    ));
    assert!(matches!(
        weak_residual(&s1, &s0, TestField::Tensor(&a), &f),
        Err(MonitorError::NonIncreasingTime(_))
    ));
}

#[test]
fn identity_test_reduces_to_trace_balance() {
    // A = I, δ = 0: the weak residual is |d/dt ∫tr B + ∫tr((v·∇)B) − 2a∫tr(BD)|
    // (the diffusion integral vanishes for a constant test tensor)
    let g = Grid::periodic([12, 12, 1], [1.0; 3]).unwrap();
    let st = Stepper::new(g.clone(), Forcing::none());
    let p = ModelParams {
        delta1: 0.0,
        delta2: 0.0,
        ..ModelParams::oldroyd_b()
    };
    let v0 = g.velocity_from_potential(|x| {
        [
            0.0,
            0.0,
            0.1 * (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).sin(),
        ]
    });
    let b0 = g
        .tensor_from(|x| SymTensor3::new(1.0 + 0.5 * x[0] * (1.0 - x[0]), 1.2, 1.0, 0.1, 0.0, 0.0));
    let s0 = st.init_state(v0, b0, p).unwrap();
    let (s1, _) = st.step(&s0, 0.01).unwrap();
    let id = g.tensor(SymTensor3::IDENTITY);
    let got = weak_residual(&s0, &s1, TestField::Tensor(&id), &Forcing::none()).unwrap();

    let dv = g.cell_volume();
    let mut b = s1.b.clone();
    fill_cell_ghosts(&mut b, &g);
    let grad = grad_velocity(&s1.v, &g);
    let adv = viscoflow::grid::advect_tensor(&s1.v, &b, &g);
    let mut expect = 0.0;
    for q in g.tensor(SymTensor3::ZERO).interior() {
        let d = SymTensor3::sym_part(&grad.at(q));
        expect += (s1.b.at(q).trace() - s0.b.at(q).trace()) / 0.01 + adv.at(q).trace()
            - 2.0 * p.a * s1.b.at(q).matmul(&d).trace();
    }
    expect = (expect * dv).abs();
    assert!(
        (got - expect).abs() < 1e-12 * (1.0 + expect),
        "{got} vs {expect}"
    );
}
