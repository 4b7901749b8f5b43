//! Mode runners behind the `viscoflow` binary.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::time::Instant;

use viscoflow::error::{GridError, MonitorError, StepError};
use viscoflow::identities::{check_identities, IdentityViolation, SweepConfig};
use viscoflow::monitor::{compute_budget, BudgetTracker};
use viscoflow::stepper::{scan_tensor, SimState, StepReport, Stepper};
use viscoflow::study::{sweep_eps, sweep_gamma, MmsRow, MmsSetup, StudyError};

use crate::config::{ConfigError, Mode, SimConfig};
use crate::output::{write_raw, write_vtk, EnergyCsv, Manifest};

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("grid: {0}")]
    Grid(#[from] GridError),
    #[error("{0}")]
    Step(StepError),
    #[error("step {step}: {source}")]
    Run { step: u64, source: StepError },
    #[error("energy monitor: {0}")]
    Monitor(#[from] MonitorError),
    #[error("study: {0}")]
    Study(String),
    #[error("identity violation: {0}")]
    Identity(#[from] IdentityViolation),
    #[error("io: {0}")]
    Io(#[from] io::Error),
}

impl AppError {
    fn step_error(&self) -> Option<&StepError> {
        match self {
            AppError::Step(e) | AppError::Run { source: e, .. } => Some(e),
            _ => None,
        }
    }

    /// 0 ok, 1 io, 2 bad input (config, grid, inadmissible initial data),
    /// 3 numerical failure, 4 identity violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) | AppError::Grid(_) => 2,
            AppError::Identity(_) => 4,
            AppError::Io(_) => 1,
            _ => match self.step_error() {
                Some(StepError::InadmissibleInitialData { .. }) => 2,
                _ => 3,
            },
        }
    }

    /// Short machine-readable tag written to the manifest.
    pub fn kind(&self) -> &'static str {
        if let Some(e) = self.step_error() {
            return match e {
                StepError::PositivityLoss { .. } => "PositivityLoss",
                StepError::SolverDivergence(_) => "SolverDivergence",
                StepError::CflViolation { .. } => "CflViolation",
                StepError::InvalidTimeStep(_) => "InvalidTimeStep",
                StepError::InadmissibleInitialData { .. } => "InadmissibleInitialData",
                StepError::NonFinite { .. } => "NonFinite",
            };
        }
        match self {
            AppError::Config(_) => "ConfigError",
            AppError::Grid(_) => "GridError",
            AppError::Monitor(_) => "MonitorError",
            AppError::Study(_) => "StudyError",
            AppError::Identity(_) => "IdentityViolation",
            AppError::Io(_) => "IoError",
            _ => unreachable!(),
        }
    }
}

impl From<StudyError> for AppError {
    fn from(e: StudyError) -> Self {
        match e {
            StudyError::Grid(g) => AppError::Grid(g),
            StudyError::Step(s) => AppError::Step(s),
            StudyError::Run(r) => AppError::Run {
                step: r.step,
                source: r.source,
            },
            StudyError::Setup(s) => AppError::Study(s),
        }
    }
}

/// Runs one mode, writing everything under `out`. The manifest is written
/// whether or not the mode succeeds.
pub fn execute(cfg: &SimConfig, out: &Path, threads: usize) -> Result<(), AppError> {
    fs::create_dir_all(out)?;
    let start = Instant::now();
    let mut manifest = Manifest::new(cfg.emit());
    manifest.set("mode", cfg.mode.name());
    manifest.set("seed", cfg.seed);
    manifest.set("threads", threads);
    let result = match cfg.mode {
        Mode::Run => run_scenario(cfg, out, &mut manifest),
        Mode::VerifyMms => verify_mms(cfg, out),
        Mode::SweepEps => run_sweep_eps(cfg, out),
        Mode::SweepGamma => run_sweep_gamma(cfg, out),
        Mode::CheckIdentities => run_identities(cfg, out),
    };
    match &result {
        Ok(()) => manifest.set("status", "ok"),
        Err(e) => {
            manifest.set("status", "failed");
            manifest.set("error_kind", e.kind());
            manifest.set("error", e);
            manifest.set("exit_code", e.exit_code());
        }
    }
    manifest.set(
        "wall_seconds",
        format!("{:.3}", start.elapsed().as_secs_f64()),
    );
    manifest.write(&out.join("manifest.txt"))?;
    result
}

fn snapshot(cfg: &SimConfig, out: &Path, s: &SimState) -> io::Result<()> {
    let stem = format!("snapshot_{:06}", s.step);
    write_vtk(&out.join(format!("{stem}.vtk")), s)?;
    if cfg.output.raw {
        write_raw(&out.join(format!("{stem}.raw")), s)?;
    }
    Ok(())
}

fn initial_report(s: &SimState) -> StepReport {
    let scan = scan_tensor(&s.b);
    StepReport {
        step: 0,
        t: s.t,
        min_lambda: scan.min_lambda,
        min_lambda_cell: scan.argmin,
        min_det: scan.min_det,
        max_b_norm: scan.max_norm,
        ..Default::default()
    }
}

/// Time-steps the configured scenario, writing `energy.csv` and snapshots.
pub fn run_scenario(cfg: &SimConfig, out: &Path, manifest: &mut Manifest) -> Result<(), AppError> {
    let scenario = cfg.scenario.build()?;
    manifest.set("grid_hash", format!("{:016x}", scenario.grid.fingerprint()));
    let dt = cfg
        .time
        .dt
        .unwrap_or_else(|| scenario.auto_dt(cfg.time.cfl));
    manifest.set("dt", format!("{dt:e}"));
    let mut stepper = Stepper::new(scenario.grid.clone(), scenario.forcing.clone());
    stepper.cfl_limit = cfg.time.cfl_cap;
    let s0 = stepper
        .init_state(scenario.v0, scenario.b0, cfg.params)
        .map_err(AppError::Step)?;

    let mut csv = EnergyCsv::create(&out.join("energy.csv"))?;
    let mut tracker = BudgetTracker::new();
    let forcing = scenario.forcing;
    let mut b = compute_budget(&s0, &forcing)?;
    let r = tracker.record(&mut b);
    csv.row(0, &b, &initial_report(&s0), &r)?;
    snapshot(cfg, out, &s0)?;

    let every = cfg.output.energy_every;
    let snap = cfg.output.snapshot_every;
    let mut failure: Option<AppError> = None;
    let outcome = stepper.run(s0, cfg.time.t_end, dt, |s, rep| {
        let res = (|| -> Result<(), AppError> {
            let mut b = compute_budget(s, &forcing)?;
            let r = tracker.record(&mut b);
            if s.step.is_multiple_of(every) {
                csv.row(s.step, &b, rep, &r)?;
            }
            if snap > 0 && s.step.is_multiple_of(snap) {
                snapshot(cfg, out, s)?;
            }
            Ok(())
        })();
        match res {
            Ok(()) => ControlFlow::Continue(()),
            Err(e) => {
                failure = Some(e);
                ControlFlow::Break(())
            }
        }
    });
    csv.flush()?;
    let s = &outcome.state;
    manifest.set("steps", s.step);
    manifest.set("t", format!("{:e}", s.t));
    if snap == 0 || !s.step.is_multiple_of(snap) {
        // the last valid state, also after a failure
        snapshot(cfg, out, s)?;
    }
    if let Some(e) = failure {
        return Err(e);
    }
    if let Some(e) = outcome.error {
        return Err(AppError::Run {
            step: e.step,
            source: e.source,
        });
    }
    Ok(())
}

fn mms_table(rows: &[MmsRow]) -> String {
    let mut t = String::from("n,h,dt,err_v,err_b,order_v,order_b\r\n");
    for r in rows {
        let _ = write!(
            t,
            "{},{:e},{:e},{:e},{:e},{:e},{:e}\r\n",
            r.n, r.h, r.dt, r.err_v, r.err_b, r.order_v, r.order_b
        );
    }
    t
}

/// Spatial and temporal convergence ladders on manufactured solutions.
pub fn verify_mms(cfg: &SimConfig, out: &Path) -> Result<(), AppError> {
    let m = &cfg.mms;
    let setup = MmsSetup {
        base_n: m.base_n,
        levels: m.levels,
        lengths: [cfg.scenario.lengths[0], cfg.scenario.lengths[1]],
        velocity_amplitude: m.amplitude,
        beta: m.beta,
        cfl: m.cfl,
        t_end: m.t_end,
        params: cfg.params,
    };
    let spatial = setup.spatial()?;
    fs::write(out.join("mms_spatial.csv"), mms_table(&spatial))?;
    let temporal = MmsSetup {
        t_end: m.temporal_t_end,
        ..setup
    }
    .temporal(m.temporal_n, m.temporal_dt, m.temporal_levels, m.omega)?;
    fs::write(out.join("mms_temporal.csv"), mms_table(&temporal))?;
    Ok(())
}

fn scenario_case(cfg: &SimConfig) -> Result<viscoflow::study::Case, AppError> {
    let s = cfg.scenario.build()?;
    let dt = cfg.time.dt.unwrap_or_else(|| s.auto_dt(cfg.time.cfl));
    Ok(s.case(cfg.params, dt, cfg.time.t_end))
}

/// Distance of the cut-off runs from the uncut reference.
pub fn run_sweep_eps(cfg: &SimConfig, out: &Path) -> Result<(), AppError> {
    let rows = sweep_eps(&scenario_case(cfg)?, &cfg.sweep.eps)?;
    let mut t = String::from("eps,dist_v,dist_b,dist,initial_replacement,min_rho0,min_lambda\r\n");
    for r in rows {
        let _ = write!(
            t,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e}\r\n",
            r.eps, r.dist_v, r.dist_b, r.dist, r.initial_replacement, r.min_rho0, r.min_lambda
        );
    }
    fs::write(out.join("sweep_eps.csv"), t)?;
    Ok(())
}

/// Energy and budget residual across free-energy weights.
pub fn run_sweep_gamma(cfg: &SimConfig, out: &Path) -> Result<(), AppError> {
    let rows = sweep_gamma(&scenario_case(cfg)?, &cfg.sweep.gamma)?;
    let mut t = String::from("gamma,energy0,energy,free_energy,max_residual,min_lambda\r\n");
    for r in rows {
        let _ = write!(
            t,
            "{:e},{:e},{:e},{:e},{:e},{:e}\r\n",
            r.gamma, r.energy0, r.energy, r.free_energy, r.max_residual, r.min_lambda
        );
    }
    fs::write(out.join("sweep_gamma.csv"), t)?;
    Ok(())
}

/// Randomized sweep of the pointwise identities; any violation exits 4.
pub fn run_identities(cfg: &SimConfig, out: &Path) -> Result<(), AppError> {
    let sweep = SweepConfig {
        samples: cfg.identities.samples,
        convexity_samples: cfg.identities.convexity_samples,
        seed: cfg.seed,
        ..Default::default()
    };
    let report = check_identities(&cfg.params, &sweep)?;
    fs::write(out.join("identities.txt"), report.to_string())?;
    Ok(())
}

/// Output directory: the flag wins over the config key.
pub fn output_dir(cfg: &SimConfig, flag: Option<PathBuf>) -> PathBuf {
    flag.unwrap_or_else(|| PathBuf::from(&cfg.output.dir))
}
