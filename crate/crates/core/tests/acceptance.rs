//! The acceptance suite. Criteria run one after another in a single test so
//! the timed ones are not disturbed by concurrent tests; each prints one
//! PASS/FAIL line straight to stderr (bypassing output capture).

use std::io::Write;
use std::ops::ControlFlow;
use std::time::Instant;

use viscoflow::constitutive::cutoff_rho;
use viscoflow::identities::{check_identities, IdentityReport, SweepConfig};
use viscoflow::monitor::{compute_budget, BudgetTracker};
use viscoflow::sampling::SpdSampler;
use viscoflow::scenario::{Scenario, ScenarioKind, ScenarioSpec};
use viscoflow::spd::{lambda_min, SymTensor3};
use viscoflow::stepper::Stepper;
use viscoflow::study::{couette, sweep_eps, MmsSetup};
use viscoflow::ModelParams;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn single_threaded<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    threads(1, f)
}

fn threads<R: Send>(n: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .unwrap()
        .install(f)
}

fn scenario(kind: ScenarioKind, n: [usize; 3], perturbation: f64) -> Scenario {
    ScenarioSpec {
        kind,
        n,
        perturbation,
        ..Default::default()
    }
    .build()
    .unwrap()
}

/// Min Λ over all cells and steps of a run at CFL 0.3.
fn positivity_run(sc: &Scenario, params: ModelParams, steps: usize) -> Result<f64, String> {
    let dt = sc.auto_dt(0.3);
    let st = Stepper::new(sc.grid.clone(), sc.forcing.clone());
    let s0 = st
        .init_state(sc.v0.clone(), sc.b0.clone(), params)
        .map_err(|e| e.to_string())?;
    let mut min_lambda = viscoflow::stepper::scan_tensor(&s0.b).min_lambda;
    let out = st.run(s0, steps as f64 * dt, dt, |_, r| {
        min_lambda = min_lambda.min(r.min_lambda);
        ControlFlow::Continue(())
    });
    if let Some(e) = out.error {
        return Err(e.to_string());
    }
    if out.state.step as usize != steps {
        return Err(format!("took {} steps", out.state.step));
    }
    Ok(min_lambda)
}

fn identity_sweep() -> (IdentityReport, f64) {
    // tolerances are judged here, so the sweep only measures
    let cfg = SweepConfig {
        identity_tol: f64::INFINITY,
        entropy_floor: f64::NEG_INFINITY,
        convexity_slack: f64::NEG_INFINITY,
        hencky_min_ratio: 0.0,
        ..SweepConfig::default()
    };
    let start = Instant::now();
    let report = single_threaded(|| check_identities(&ModelParams::oldroyd_b(), &cfg)).unwrap();
    (report, start.elapsed().as_secs_f64())
}

fn c1(r: &IdentityReport, secs: f64) -> Verdict {
    let worst = r.max_identity_residual();
    verdict(
        r.samples == 100_000 && worst <= 1e-10 && secs <= 10.0,
        format!(
            "max relative residual {worst:.2e} over {} draws, sweep {secs:.1} s",
            r.samples
        ),
    )
}

fn c2(r: &IdentityReport, secs: f64) -> Verdict {
    verdict(
        r.min_entropy >= -1e-12 && secs <= 10.0,
        format!(
            "min entropy production {:.3e}, sweep {secs:.1} s",
            r.min_entropy
        ),
    )
}

fn c3(r: &IdentityReport) -> Verdict {
    let worst = r
        .min_slack_psi
        .min(r.min_slack_psi_quadratic)
        .min(r.min_slack_psi_log);
    verdict(
        worst >= -1e-12,
        format!(
            "min midpoint slack psi {:.2e}, psi1 {:.2e}, psi2 {:.2e}",
            r.min_slack_psi, r.min_slack_psi_quadratic, r.min_slack_psi_log
        ),
    )
}

fn c4(r: &IdentityReport) -> Verdict {
    let gammas: Vec<f64> = r.hencky.iter().map(|h| h.gamma).collect();
    let min_ratio = r
        .hencky
        .iter()
        .flat_map(|h| h.ratios.iter().copied())
        .fold(f64::INFINITY, f64::min);
    verdict(
        gammas == [0.1, 0.5, 0.9]
            && r.hencky.iter().all(|h| h.ratios.len() == 2)
            && min_ratio >= 500.0,
        format!("min decay ratio per decade {min_ratio:.1} for gamma {gammas:?}"),
    )
}

fn c5() -> Verdict {
    let ladder = [1e-1, 1e-2, 1e-3, 1e-4];
    let mut sampler = SpdSampler::new(5);
    let mut range_ok = true;
    let mut iff_ok = true;
    let mut monotone = true;
    let mut bound_ok = true;
    for _ in 0..10_000 {
        let a = sampler.symmetric(2.0);
        let lam = lambda_min(&a);
        for eps in ladder {
            let r = cutoff_rho(&a, eps);
            range_ok &= (0.0..=1.0).contains(&r);
            iff_ok &= (r == 0.0) == (lam <= eps);
        }
        let b = sampler.spd();
        let (lam, n3) = (lambda_min(&b), b.norm().powi(3));
        let defect: Vec<f64> = ladder.iter().map(|&e| 1.0 - cutoff_rho(&b, e)).collect();
        monotone &= defect
            .windows(2)
            .all(|w| w[1] < w[0] || (w[0] == 1.0 && w[1] == 1.0));
        // 1 − ρ_ε = ε(Λ|A|³ + 1) / (Λ(1 + ε|A|³)) ≤ ε(1/Λ + |A|³) → 0
        for (&e, &d) in ladder.iter().zip(&defect) {
            bound_ok &= d <= e * (1.0 / lam + n3) * (1.0 + 1e-12);
        }
    }
    // exact threshold cases
    for eps in ladder {
        iff_ok &= cutoff_rho(&SymTensor3::diag(eps, 1.0, 2.0), eps) == 0.0;
        iff_ok &= cutoff_rho(&SymTensor3::diag(eps * (1.0 + 1e-9), 1.0, 2.0), eps) > 0.0;
    }
    verdict(
        range_ok && iff_ok && monotone && bound_ok,
        format!(
            "range {range_ok}, zero iff lambda <= eps {iff_ok}, 1 - rho strictly decreasing along eps {monotone}, linear defect bound {bound_ok}"
        ),
    )
}

fn c6() -> Verdict {
    let params = ModelParams::oldroyd_b();
    let reg = ModelParams {
        eps: 0.05,
        ..params
    };
    let mut lines = Vec::new();
    let mut pass = true;
    for kind in [ScenarioKind::TaylorGreen, ScenarioKind::ShearDecay] {
        // a perturbed B₀ (Λ₀ ≈ 0.35 and 0.08) so the eps = 0.05 floor is meaningful
        let sc = scenario(kind, [32, 32, 1], 1.3);
        match (
            positivity_run(&sc, params, 1000),
            positivity_run(&sc, reg, 1000),
        ) {
            (Ok(m0), Ok(m1)) => {
                pass &= m0 > 0.0 && m1 >= 0.05 - 1e-10;
                lines.push(format!(
                    "{}: min lambda {m0:.4} (eps 0), {m1:.4} (eps 0.05)",
                    kind.name()
                ));
            }
            (a, b) => {
                pass = false;
                lines.push(format!("{}: {a:?} {b:?}", kind.name()));
            }
        }
    }
    verdict(pass, lines.join("; "))
}

/// Max per-step energy increase minus the allowance, and max |budget
/// residual|, for the unforced shear decay at time step `dt`.
fn energy_run(sc: &Scenario, dt: f64, t_end: f64, c: f64) -> Result<(f64, f64), String> {
    let st = Stepper::new(sc.grid.clone(), sc.forcing.clone());
    let s0 = st
        .init_state(sc.v0.clone(), sc.b0.clone(), ModelParams::oldroyd_b())
        .map_err(|e| e.to_string())?;
    let mut tracker = BudgetTracker::new();
    let mut b0 = compute_budget(&s0, &sc.forcing).map_err(|e| e.to_string())?;
    tracker.record(&mut b0);
    let mut e_prev = b0.energy();
    let mut worst_rise = f64::NEG_INFINITY;
    let mut max_res: f64 = 0.0;
    let mut err = None;
    let out = st.run(s0, t_end, dt, |s, r| match compute_budget(s, &sc.forcing) {
        Ok(mut b) => {
            let res = tracker.record(&mut b);
            max_res = max_res.max(res.signed.abs());
            let e = b.energy();
            worst_rise = worst_rise.max(e - e_prev - (1e-10 + c * r.dt * r.dt));
            e_prev = e;
            ControlFlow::Continue(())
        }
        Err(e) => {
            err = Some(e.to_string());
            ControlFlow::Break(())
        }
    });
    if let Some(e) = out.error {
        return Err(e.to_string());
    }
    if let Some(e) = err {
        return Err(e);
    }
    Ok((worst_rise, max_res))
}

fn c7() -> Verdict {
    let sc = scenario(ScenarioKind::ShearDecay, [32, 32, 1], 0.3);
    let dt = sc.auto_dt(0.3);
    match (
        energy_run(&sc, dt, 0.5, 1.0),
        energy_run(&sc, 0.5 * dt, 0.5, 1.0),
    ) {
        (Ok((rise1, res1)), Ok((rise2, res2))) => {
            let ratio = res1 / res2;
            verdict(
                rise1 <= 0.0 && rise2 <= 0.0 && (1.5..=2.5).contains(&ratio),
                format!(
                    "worst step rise beyond 1e-10 + dt^2: {rise1:.2e} / {rise2:.2e}; max residual {res1:.3e} -> {res2:.3e}, ratio {ratio:.2}"
                ),
            )
        }
        (a, b) => verdict(false, format!("{a:?} {b:?}")),
    }
}

fn c8() -> Verdict {
    let setup = MmsSetup::default();
    let spatial = match setup.spatial() {
        Ok(r) => r,
        Err(e) => return verdict(false, e.to_string()),
    };
    let temporal = match (MmsSetup {
        t_end: 0.5,
        ..setup
    })
    .temporal(64, 0.02, 3, 2.0 * std::f64::consts::PI)
    {
        Ok(r) => r,
        Err(e) => return verdict(false, e.to_string()),
    };
    let s_min = spatial[1..]
        .iter()
        .flat_map(|r| [r.order_v, r.order_b])
        .fold(f64::INFINITY, f64::min);
    let t = temporal.last().unwrap();
    let t_min = t.order_v.min(t.order_b);
    let monotone = spatial
        .windows(2)
        .all(|w| w[1].err_v < w[0].err_v && w[1].err_b < w[0].err_b);
    verdict(
        s_min >= 1.9 && t_min >= 0.9 && monotone,
        format!(
            "spatial orders (v, B) {:?}, temporal orders ({:.3}, {:.3}) at n = 64",
            spatial[1..]
                .iter()
                .map(|r| (format!("{:.3}", r.order_v), format!("{:.3}", r.order_b)))
                .collect::<Vec<_>>(),
            t.order_v,
            t.order_b
        ),
    )
}

fn c9() -> Verdict {
    let sc = scenario(ScenarioKind::RestState, [16, 16, 16], 0.0);
    let st = Stepper::new(sc.grid.clone(), sc.forcing.clone());
    let mut pass = true;
    let mut notes = Vec::new();
    for params in [ModelParams::oldroyd_b(), ModelParams::giesekus()] {
        let s0 = st.init_state(sc.v0.clone(), sc.b0.clone(), params).unwrap();
        let out = st.run(s0.clone(), 100.0 * 0.01, 0.01, |_, _| {
            ControlFlow::Continue(())
        });
        let same = out.error.is_none() && out.state.step == 100 && out.state.same_fields(&s0);
        pass &= same;
        notes.push(format!("delta2 = {}: bitwise {same}", params.delta2));
    }
    verdict(
        pass,
        format!("16^3 slip box, 100 steps; {}", notes.join(", ")),
    )
}

fn c10() -> Verdict {
    let slip = couette(64, 1.0, ModelParams::oldroyd_b(), 20.0, 0.05);
    let stiff = couette(
        64,
        1.0,
        ModelParams {
            sigma: 1e6,
            ..ModelParams::oldroyd_b()
        },
        20.0,
        0.05,
    );
    match (slip, stiff) {
        (Ok(a), Ok(b)) => {
            let rel = (a.slip_numeric - a.slip_exact).abs() / a.slip_exact;
            verdict(
                rel <= 0.02 && b.noslip_deviation <= 0.01,
                format!(
                    "slip {:.6} vs exact {:.6} (rel {rel:.1e}); sigma = 1e6 deviation from no-slip {:.1e}",
                    a.slip_numeric, a.slip_exact, b.noslip_deviation
                ),
            )
        }
        (a, b) => verdict(false, format!("{a:?} {b:?}")),
    }
}

fn c11() -> Verdict {
    let sc = scenario(ScenarioKind::ShearDecay, [32, 32, 1], 0.9);
    let case = sc.case(ModelParams::oldroyd_b(), sc.auto_dt(0.3), 1.0);
    match sweep_eps(&case, &[0.1, 0.05, 0.01]) {
        Ok(rows) => {
            let monotone = rows.len() == 3 && rows.windows(2).all(|w| w[1].dist < w[0].dist);
            verdict(
                monotone,
                format!(
                    "distances {:?}",
                    rows.iter()
                        .map(|r| format!("{}: {:.3e}", r.eps, r.dist))
                        .collect::<Vec<_>>()
                ),
            )
        }
        Err(e) => verdict(false, e.to_string()),
    }
}

fn timed_steps(sc: &Scenario, steps: usize) -> Result<(f64, f64), String> {
    let dt = sc.auto_dt(0.3);
    let st = Stepper::new(sc.grid.clone(), sc.forcing.clone());
    let s0 = st
        .init_state(sc.v0.clone(), sc.b0.clone(), ModelParams::oldroyd_b())
        .map_err(|e| e.to_string())?;
    let start = Instant::now();
    let mut kernels = 0.0;
    let out = st.run(s0, steps as f64 * dt, dt, |_, r| {
        kernels += r.wall_seconds;
        ControlFlow::Continue(())
    });
    if let Some(e) = out.error {
        return Err(e.to_string());
    }
    Ok((start.elapsed().as_secs_f64(), kernels))
}

fn c12() -> Verdict {
    let sc = scenario(ScenarioKind::TaylorGreen, [32, 32, 32], 0.0);
    let serial = single_threaded(|| timed_steps(&sc, 100));
    let quad = threads(4, || timed_steps(&sc, 20));
    let short_serial = single_threaded(|| timed_steps(&sc, 20));
    match (serial, quad, short_serial) {
        (Ok((total, _)), Ok((_, k4)), Ok((_, k1))) => {
            let speedup = k1 / k4;
            let cpus = std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1);
            verdict(
                total <= 60.0 && speedup >= 2.5,
                format!(
                    "32^3 taylor_green, 100 steps single-threaded {total:.1} s; 4-thread speedup {speedup:.2}x ({cpus} CPU available)"
                ),
            )
        }
        (a, b, c) => verdict(false, format!("{a:?} {b:?} {c:?}")),
    }
}

#[test]
fn acceptance() {
    let mut err = std::io::stderr();
    let mut failed = Vec::new();
    let mut report = |id: usize, name: &str, v: Verdict| {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        writeln!(err, "[{tag}] {id:>2} {name}: {}", v.detail).unwrap();
        if !v.pass {
            failed.push(id);
        }
    };
    let (sweep, secs) = identity_sweep();
    report(1, "identity suite", c1(&sweep, secs));
    report(2, "entropy production nonnegative", c2(&sweep, secs));
    report(3, "free-energy convexity", c3(&sweep));
    report(4, "Hencky expansion cubic decay", c4(&sweep));
    report(5, "cut-off behavior", c5());
    report(6, "positivity preservation", c6());
    report(7, "discrete energy inequality", c7());
    report(8, "manufactured-solution convergence", c8());
    report(9, "rest-state exactness", c9());
    report(10, "Navier slip Couette", c10());
    report(11, "eps-sweep consistency", c11());
    report(12, "performance floor", c12());
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
