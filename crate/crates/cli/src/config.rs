//! Plain-text run configuration: `[section]` headers, `key = value` lines,
//! `#` comments. Every key has a default, unknown keys are rejected, and
//! [`SimConfig::emit`] writes the canonical form that parses back to the
//! same values.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use viscoflow::grid::FaceBc;
use viscoflow::scenario::{ScenarioKind, ScenarioSpec};
use viscoflow::ModelParams;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("{key}: {constraint}")]
    Validation { key: String, constraint: String },
}

fn invalid(key: &str, constraint: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        key: key.to_string(),
        constraint: constraint.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Mode {
    Run,
    VerifyMms,
    SweepEps,
    SweepGamma,
    CheckIdentities,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::Run,
        Mode::VerifyMms,
        Mode::SweepEps,
        Mode::SweepGamma,
        Mode::CheckIdentities,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Run => "run",
            Mode::VerifyMms => "verify_mms",
            Mode::SweepEps => "sweep_eps",
            Mode::SweepGamma => "sweep_gamma",
            Mode::CheckIdentities => "check_identities",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeSettings {
    /// `None` picks the step from `cfl` and the initial velocity.
    pub dt: Option<f64>,
    pub t_end: f64,
    pub cfl: f64,
    /// Hard limit enforced by the stepper.
    pub cfl_cap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputSettings {
    pub dir: String,
    pub energy_every: u64,
    /// 0 writes only the initial and final snapshots.
    pub snapshot_every: u64,
    pub raw: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MmsSettings {
    pub base_n: usize,
    pub levels: usize,
    pub t_end: f64,
    pub amplitude: f64,
    pub beta: f64,
    pub cfl: f64,
    pub temporal_n: usize,
    pub temporal_dt: f64,
    pub temporal_levels: usize,
    pub temporal_t_end: f64,
    pub omega: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSettings {
    pub eps: Vec<f64>,
    pub gamma: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentitySettings {
    pub samples: usize,
    pub convexity_samples: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub mode: Mode,
    pub seed: u64,
    pub scenario: ScenarioSpec,
    pub params: ModelParams,
    pub time: TimeSettings,
    pub output: OutputSettings,
    pub mms: MmsSettings,
    pub sweep: SweepSettings,
    pub identities: IdentitySettings,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Run,
            seed: 42,
            scenario: ScenarioSpec::default(),
            params: ModelParams::oldroyd_b(),
            time: TimeSettings {
                dt: None,
                t_end: 1.0,
                cfl: 0.3,
                cfl_cap: 0.5,
            },
            output: OutputSettings {
                dir: "out".into(),
                energy_every: 1,
                snapshot_every: 0,
                raw: false,
            },
            mms: MmsSettings {
                base_n: 16,
                levels: 3,
                t_end: 1.0,
                amplitude: 0.25,
                beta: 0.25,
                cfl: 0.3,
                temporal_n: 64,
                temporal_dt: 0.02,
                temporal_levels: 3,
                temporal_t_end: 0.5,
                omega: 2.0 * std::f64::consts::PI,
            },
            sweep: SweepSettings {
                eps: vec![0.1, 0.05, 0.01, 0.0],
                gamma: vec![0.1, 0.5, 0.9],
            },
            identities: IdentitySettings {
                samples: 100_000,
                convexity_samples: 10_000,
            },
        }
    }
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("run", &["mode", "seed"]),
    ("grid", &["n", "lengths", "wall"]),
    (
        "model",
        &[
            "preset",
            "nu",
            "mu",
            "lambda",
            "sigma",
            "delta1",
            "delta2",
            "a",
            "gamma",
            "eps",
            "classical",
        ],
    ),
    (
        "scenario",
        &["name", "amplitude", "perturbation", "lid_force", "modes"],
    ),
    ("time", &["dt", "t_end", "cfl", "cfl_cap"]),
    ("output", &["dir", "energy_every", "snapshot_every", "raw"]),
    (
        "mms",
        &[
            "base_n",
            "levels",
            "t_end",
            "amplitude",
            "beta",
            "cfl",
            "temporal_n",
            "temporal_dt",
            "temporal_levels",
            "temporal_t_end",
            "omega",
        ],
    ),
    ("sweep", &["eps", "gamma"]),
    ("identities", &["samples", "convexity_samples"]),
];

fn known(section: &str, key: &str) -> bool {
    SECTIONS
        .iter()
        .any(|(s, keys)| *s == section && keys.contains(&key))
}

fn section_exists(section: &str) -> bool {
    SECTIONS.iter().any(|(s, _)| *s == section)
}

/// Raw `section.key → (value, line)` entries.
struct Table {
    entries: BTreeMap<String, (String, usize)>,
}

impl Table {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |reason: String| ConfigError::Parse { line, reason };
            let body = raw.split('#').next().unwrap().trim();
            if body.is_empty() {
                continue;
            }
            if let Some(rest) = body.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(format!("malformed section header `{body}`")))?
                    .trim();
                if !section_exists(name) {
                    return Err(err(format!("unknown section `{name}`")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{body}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let sec = section
                .as_deref()
                .ok_or_else(|| err(format!("key `{key}` appears before any section header")))?;
            if !known(sec, key) {
                return Err(err(format!("unknown key `{key}` in section [{sec}]")));
            }
            if value.is_empty() {
                return Err(err(format!("missing value for `{key}`")));
            }
            let full = format!("{sec}.{key}");
            if entries
                .insert(full.clone(), (value.to_string(), line))
                .is_some()
            {
                return Err(err(format!("duplicate key `{full}`")));
            }
        }
        Ok(Self { entries })
    }

    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.remove(key)
    }

    fn get<T>(
        &mut self,
        key: &str,
        default: T,
        conv: impl Fn(&str) -> Option<T>,
        what: &str,
    ) -> Result<T, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some((v, line)) => conv(&v).ok_or_else(|| ConfigError::Parse {
                line,
                reason: format!("`{key}` expects {what}, got `{v}`"),
            }),
        }
    }

    fn f64(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        self.get(key, default, |s| s.parse().ok(), "a number")
    }

    fn usize(&mut self, key: &str, default: usize) -> Result<usize, ConfigError> {
        self.get(key, default, |s| s.parse().ok(), "a nonnegative integer")
    }

    fn u64(&mut self, key: &str, default: u64) -> Result<u64, ConfigError> {
        self.get(key, default, |s| s.parse().ok(), "a nonnegative integer")
    }

    fn bool(&mut self, key: &str, default: bool) -> Result<bool, ConfigError> {
        self.get(key, default, |s| s.parse().ok(), "true or false")
    }

    fn list(&mut self, key: &str, default: Vec<f64>) -> Result<Vec<f64>, ConfigError> {
        self.get(
            key,
            default,
            |s| s.split(',').map(|x| x.trim().parse().ok()).collect(),
            "a comma-separated list of numbers",
        )
    }

    fn triple<T: std::str::FromStr + Copy>(
        &mut self,
        key: &str,
        default: [T; 3],
    ) -> Result<[T; 3], ConfigError> {
        self.get(
            key,
            default,
            |s| {
                let v: Option<Vec<T>> = s.split(',').map(|x| x.trim().parse().ok()).collect();
                v.and_then(|v| <[T; 3]>::try_from(v).ok())
            },
            "three comma-separated values",
        )
    }
}

fn parse_mode(s: &str) -> Option<Mode> {
    Mode::ALL.into_iter().find(|m| m.name() == s)
}

fn parse_preset(s: &str) -> Option<ModelParams> {
    match s {
        "oldroyd_b" => Some(ModelParams::oldroyd_b()),
        "giesekus" => Some(ModelParams::giesekus()),
        _ => None,
    }
}

impl SimConfig {
    /// Parses and validates a configuration; missing keys take defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut t = Table::parse(text)?;
        let d = SimConfig::default();
        let base = t.get(
            "model.preset",
            ModelParams::oldroyd_b(),
            parse_preset,
            "oldroyd_b or giesekus",
        )?;
        let params = ModelParams {
            nu: t.f64("model.nu", base.nu)?,
            mu: t.f64("model.mu", base.mu)?,
            lambda_diff: t.f64("model.lambda", base.lambda_diff)?,
            sigma: t.f64("model.sigma", base.sigma)?,
            delta1: t.f64("model.delta1", base.delta1)?,
            delta2: t.f64("model.delta2", base.delta2)?,
            a: t.f64("model.a", base.a)?,
            gamma: t.f64("model.gamma", base.gamma)?,
            eps: t.f64("model.eps", base.eps)?,
            classical: t.bool("model.classical", base.classical)?,
        };
        let ds = d.scenario;
        let scenario = ScenarioSpec {
            kind: t.get(
                "scenario.name",
                ds.kind,
                ScenarioKind::parse,
                "a scenario name",
            )?,
            n: t.triple("grid.n", ds.n)?,
            lengths: t.triple("grid.lengths", ds.lengths)?,
            wall: t.get(
                "grid.wall",
                ds.wall,
                FaceBc::parse,
                "navier_slip or no_slip",
            )?,
            amplitude: t.f64("scenario.amplitude", ds.amplitude)?,
            perturbation: t.f64("scenario.perturbation", ds.perturbation)?,
            lid_force: t.f64("scenario.lid_force", ds.lid_force)?,
            modes: t.usize("scenario.modes", ds.modes)?,
        };
        let cfg = SimConfig {
            mode: t.get("run.mode", d.mode, parse_mode, "a mode name")?,
            seed: t.u64("run.seed", d.seed)?,
            scenario,
            params,
            time: TimeSettings {
                dt: t.get(
                    "time.dt",
                    d.time.dt,
                    |s| {
                        if s == "auto" {
                            Some(None)
                        } else {
                            s.parse().ok().map(Some)
                        }
                    },
                    "`auto` or a number",
                )?,
                t_end: t.f64("time.t_end", d.time.t_end)?,
                cfl: t.f64("time.cfl", d.time.cfl)?,
                cfl_cap: t.f64("time.cfl_cap", d.time.cfl_cap)?,
            },
            output: OutputSettings {
                dir: t.get(
                    "output.dir",
                    d.output.dir.clone(),
                    |s| Some(s.to_string()),
                    "a path",
                )?,
                energy_every: t.u64("output.energy_every", d.output.energy_every)?,
                snapshot_every: t.u64("output.snapshot_every", d.output.snapshot_every)?,
                raw: t.bool("output.raw", d.output.raw)?,
            },
            mms: MmsSettings {
                base_n: t.usize("mms.base_n", d.mms.base_n)?,
                levels: t.usize("mms.levels", d.mms.levels)?,
                t_end: t.f64("mms.t_end", d.mms.t_end)?,
                amplitude: t.f64("mms.amplitude", d.mms.amplitude)?,
                beta: t.f64("mms.beta", d.mms.beta)?,
                cfl: t.f64("mms.cfl", d.mms.cfl)?,
                temporal_n: t.usize("mms.temporal_n", d.mms.temporal_n)?,
                temporal_dt: t.f64("mms.temporal_dt", d.mms.temporal_dt)?,
                temporal_levels: t.usize("mms.temporal_levels", d.mms.temporal_levels)?,
                temporal_t_end: t.f64("mms.temporal_t_end", d.mms.temporal_t_end)?,
                omega: t.f64("mms.omega", d.mms.omega)?,
            },
            sweep: SweepSettings {
                eps: t.list("sweep.eps", d.sweep.eps.clone())?,
                gamma: t.list("sweep.gamma", d.sweep.gamma.clone())?,
            },
            identities: IdentitySettings {
                samples: t.usize("identities.samples", d.identities.samples)?,
                convexity_samples: t.usize(
                    "identities.convexity_samples",
                    d.identities.convexity_samples,
                )?,
            },
        };
        debug_assert!(
            t.entries.is_empty(),
            "unconsumed keys {:?}",
            t.entries.keys()
        );
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params.validate().map_err(
            |viscoflow::error::ParamsError::Invalid { key, constraint }| {
                let constraint = constraint
                    .strip_prefix("gamma ")
                    .unwrap_or(&constraint)
                    .to_string();
                invalid(&format!("model.{key}"), constraint)
            },
        )?;
        let s = &self.scenario;
        for d in 0..3 {
            if !(s.n[d] == 1 || s.n[d] >= 4) {
                return Err(invalid(
                    "grid.n",
                    "each count must be 1 (unresolved) or at least 4",
                ));
            }
            if !(s.lengths[d].is_finite() && s.lengths[d] > 0.0) {
                return Err(invalid("grid.lengths", "must be positive and finite"));
            }
        }
        if s.wall == FaceBc::Periodic {
            return Err(invalid("grid.wall", "must be navier_slip or no_slip"));
        }
        let finite = |key: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(invalid(key, "must be finite"))
            }
        };
        finite("scenario.amplitude", s.amplitude)?;
        finite("scenario.lid_force", s.lid_force)?;
        if !(s.perturbation.is_finite() && s.perturbation >= 0.0) {
            return Err(invalid(
                "scenario.perturbation",
                "must be nonnegative and finite",
            ));
        }
        if s.modes == 0 {
            return Err(invalid("scenario.modes", "must be at least 1"));
        }
        let tm = &self.time;
        if let Some(dt) = tm.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(invalid(
                    "time.dt",
                    "must be positive and finite (or `auto`)",
                ));
            }
        }
        if !(tm.t_end.is_finite() && tm.t_end >= 0.0) {
            return Err(invalid("time.t_end", "must be nonnegative and finite"));
        }
        if !(tm.cfl_cap > 0.0 && tm.cfl_cap <= 0.5) {
            return Err(invalid("time.cfl_cap", "must lie in (0, 0.5]"));
        }
        if !(tm.cfl > 0.0 && tm.cfl <= tm.cfl_cap) {
            return Err(invalid("time.cfl", "must lie in (0, cfl_cap]"));
        }
        if self.output.energy_every == 0 {
            return Err(invalid("output.energy_every", "must be at least 1"));
        }
        if self.output.dir.is_empty() {
            return Err(invalid("output.dir", "must not be empty"));
        }
        let m = &self.mms;
        if m.base_n < 4 || m.temporal_n < 4 {
            return Err(invalid(
                "mms.base_n",
                "grids need at least 4 cells per side",
            ));
        }
        if m.levels < 2 {
            return Err(invalid("mms.levels", "a ladder needs at least 2 levels"));
        }
        if m.temporal_levels < 3 {
            return Err(invalid(
                "mms.temporal_levels",
                "difference-based orders need at least 3 levels",
            ));
        }
        for (key, v) in [
            ("mms.t_end", m.t_end),
            ("mms.amplitude", m.amplitude),
            ("mms.cfl", m.cfl),
            ("mms.temporal_dt", m.temporal_dt),
            ("mms.temporal_t_end", m.temporal_t_end),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(key, "must be positive and finite"));
            }
        }
        if !(m.beta >= 0.0 && m.beta <= 0.25) {
            return Err(invalid(
                "mms.beta",
                "must lie in [0, 0.25] to keep the exact B positive definite",
            ));
        }
        finite("mms.omega", m.omega)?;
        if self
            .sweep
            .eps
            .iter()
            .any(|e| !(e.is_finite() && (0.0..1.0).contains(e)))
        {
            return Err(invalid("sweep.eps", "entries must lie in [0,1)"));
        }
        if self.sweep.gamma.iter().any(|g| !(*g > 0.0 && *g < 1.0)) {
            return Err(invalid("sweep.gamma", "entries must lie in (0,1)"));
        }
        if self.identities.samples == 0 {
            return Err(invalid("identities.samples", "must be at least 1"));
        }
        Ok(())
    }

    /// Canonical text form, with one comment line per key.
    pub fn emit(&self) -> String {
        let mut o = String::new();
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        };
        let triple = |v: [String; 3]| v.join(", ");
        let kv = |o: &mut String, doc: &str, key: &str, value: String| {
            let _ = writeln!(o, "# {doc}\n{key} = {value}");
        };
        o.push_str("# viscoflow run configuration\n\n[run]\n");
        kv(
            &mut o,
            "run | verify_mms | sweep_eps | sweep_gamma | check_identities",
            "mode",
            self.mode.name().into(),
        );
        kv(
            &mut o,
            "seed of the random identity sweep",
            "seed",
            self.seed.to_string(),
        );

        let s = &self.scenario;
        o.push_str("\n[grid]\n");
        kv(
            &mut o,
            "cells per axis; 1 leaves an axis unresolved (periodic)",
            "n",
            triple(s.n.map(|x| x.to_string())),
        );
        kv(
            &mut o,
            "box lengths",
            "lengths",
            triple(s.lengths.map(|x| x.to_string())),
        );
        kv(
            &mut o,
            "tag of every walled face: navier_slip | no_slip",
            "wall",
            s.wall.name().into(),
        );

        let p = &self.params;
        o.push_str("\n[model]\n");
        kv(&mut o, "viscosity", "nu", p.nu.to_string());
        kv(&mut o, "elastic modulus", "mu", p.mu.to_string());
        kv(
            &mut o,
            "stress diffusion",
            "lambda",
            p.lambda_diff.to_string(),
        );
        kv(&mut o, "Navier slip friction", "sigma", p.sigma.to_string());
        kv(
            &mut o,
            "linear relaxation rate",
            "delta1",
            p.delta1.to_string(),
        );
        kv(
            &mut o,
            "quadratic relaxation rate",
            "delta2",
            p.delta2.to_string(),
        );
        kv(
            &mut o,
            "objective derivative parameter (1 upper convected)",
            "a",
            p.a.to_string(),
        );
        kv(
            &mut o,
            "free-energy weight, in (0,1)",
            "gamma",
            p.gamma.to_string(),
        );
        kv(
            &mut o,
            "cut-off level, 0 disables it",
            "eps",
            p.eps.to_string(),
        );
        kv(
            &mut o,
            "allow gamma = 0",
            "classical",
            p.classical.to_string(),
        );

        o.push_str("\n[scenario]\n");
        kv(
            &mut o,
            "rest_state | taylor_green | lid_slip_cavity | shear_decay",
            "name",
            s.kind.name().into(),
        );
        kv(
            &mut o,
            "initial velocity scale",
            "amplitude",
            s.amplitude.to_string(),
        );
        kv(
            &mut o,
            "size of the bump added to B0 = I",
            "perturbation",
            s.perturbation.to_string(),
        );
        kv(
            &mut o,
            "peak force under the cavity lid",
            "lid_force",
            s.lid_force.to_string(),
        );
        kv(
            &mut o,
            "wavenumber multiplier of the initial velocity",
            "modes",
            s.modes.to_string(),
        );

        let tm = &self.time;
        o.push_str("\n[time]\n");
        kv(
            &mut o,
            "time step, or auto from cfl",
            "dt",
            tm.dt.map_or("auto".into(), |x| x.to_string()),
        );
        kv(&mut o, "final time", "t_end", tm.t_end.to_string());
        kv(
            &mut o,
            "Courant number used by dt = auto",
            "cfl",
            tm.cfl.to_string(),
        );
        kv(
            &mut o,
            "Courant number that aborts a run",
            "cfl_cap",
            tm.cfl_cap.to_string(),
        );

        let out = &self.output;
        o.push_str("\n[output]\n");
        kv(
            &mut o,
            "output directory (the --out flag overrides it)",
            "dir",
            out.dir.clone(),
        );
        kv(
            &mut o,
            "energy.csv row every n steps",
            "energy_every",
            out.energy_every.to_string(),
        );
        kv(
            &mut o,
            "snapshot every n steps, 0 for first and last only",
            "snapshot_every",
            out.snapshot_every.to_string(),
        );
        kv(
            &mut o,
            "also write raw little-endian snapshots",
            "raw",
            out.raw.to_string(),
        );

        let m = &self.mms;
        o.push_str("\n[mms]\n");
        kv(
            &mut o,
            "coarsest grid of the spatial ladder",
            "base_n",
            m.base_n.to_string(),
        );
        kv(
            &mut o,
            "number of spatial levels",
            "levels",
            m.levels.to_string(),
        );
        kv(
            &mut o,
            "final time of the spatial ladder",
            "t_end",
            m.t_end.to_string(),
        );
        kv(
            &mut o,
            "velocity amplitude of the exact solution",
            "amplitude",
            m.amplitude.to_string(),
        );
        kv(
            &mut o,
            "tensor amplitude of the exact solution",
            "beta",
            m.beta.to_string(),
        );
        kv(
            &mut o,
            "Courant number of the spatial ladder",
            "cfl",
            m.cfl.to_string(),
        );
        kv(
            &mut o,
            "grid of the temporal ladder",
            "temporal_n",
            m.temporal_n.to_string(),
        );
        kv(
            &mut o,
            "largest step of the temporal ladder",
            "temporal_dt",
            m.temporal_dt.to_string(),
        );
        kv(
            &mut o,
            "number of temporal levels",
            "temporal_levels",
            m.temporal_levels.to_string(),
        );
        kv(
            &mut o,
            "final time of the temporal ladder",
            "temporal_t_end",
            m.temporal_t_end.to_string(),
        );
        kv(
            &mut o,
            "angular frequency of the time-dependent solution",
            "omega",
            m.omega.to_string(),
        );

        o.push_str("\n[sweep]\n");
        kv(
            &mut o,
            "cut-off levels; the 0 run is the reference",
            "eps",
            list(&self.sweep.eps),
        );
        kv(
            &mut o,
            "free-energy weights",
            "gamma",
            list(&self.sweep.gamma),
        );

        o.push_str("\n[identities]\n");
        kv(
            &mut o,
            "random SPD draws",
            "samples",
            self.identities.samples.to_string(),
        );
        kv(
            &mut o,
            "midpoint convexity draws",
            "convexity_samples",
            self.identities.convexity_samples.to_string(),
        );
        o
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let c = SimConfig::parse("").unwrap();
        assert_eq!(c, SimConfig::default());
        assert_eq!(c.scenario.kind, ScenarioKind::RestState);
        assert_eq!(c.scenario.n, [16, 16, 16]);
    }

    #[test]
    fn gamma_out_of_range_is_a_validation_error() {
        let e = SimConfig::parse("[model]\ngamma = 1.5\n").unwrap_err();
        assert_eq!(e, invalid("model.gamma", "must lie in (0,1), got 1.5"));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("[model]\nnu = 1\nfoo = 2\n", 3),
            ("nu = 1\n", 1),
            ("[nope]\n", 1),
            ("[model]\n\nnu 1\n", 3),
            ("[model]\nnu = abc\n", 2),
            ("[model]\nnu = 1\nnu = 2\n", 3),
            ("[grid]\nn = 4, 4\n", 2),
        ];
        for (text, want) in cases {
            match SimConfig::parse(text) {
                Err(ConfigError::Parse { line, .. }) => assert_eq!(line, want, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn preset_sets_the_base_and_keys_override_it() {
        let c = SimConfig::parse("[model]\nnu = 2\npreset = giesekus\n").unwrap();
        assert_eq!(c.params.delta2, 1.0);
        assert_eq!(c.params.delta1, 0.0);
        assert_eq!(c.params.nu, 2.0);
    }

    #[test]
    fn emission_round_trips() {
        let mut c = SimConfig::default();
        c.mode = Mode::SweepEps;
        c.params.sigma = 1e6;
        c.params.eps = 0.05;
        c.time.dt = Some(1.0 / 3.0);
        c.scenario.lengths = [0.1, 2.5, 1e-3];
        c.sweep.eps = vec![0.3, 1e-7];
        let text = c.emit();
        let back = SimConfig::parse(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.emit(), text);
    }
}
