//! Run configuration files.
//!
//! Plain text, one `key = value` per line. `[section]` headers prefix the
//! keys that follow, so `[solver]` then `cfl = 0.3` is the same as
//! `solver.cfl = 0.3`. `#` starts a comment.
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `case` | `manufactured` or `gresho` | required |
//! | `mesh.dim` | spatial dimension | case dimension |
//! | `mesh.cells` | cells per axis, one value or a comma list | 32 |
//! | `model.a`, `model.gamma`, `model.mu`, `model.lambda` | gas model | 1, 1.4, 0.01, 0.01 |
//! | `flux.epsilon` | artificial diffusion exponent | 0.6 |
//! | `solver.cfl` | CFL number | 0.3 |
//! | `solver.dt_cap` | upper bound on the time step | none |
//! | `solver.picard_tol`, `solver.picard_max_iter` | fixed-point stopping rule | 1e-10, 50 |
//! | `solver.linear_tol`, `solver.linear_max_iter` | Krylov stopping rule | 1e-12, 2000 |
//! | `solver.max_retries` | time-step halvings after a failed step | 3 |
//! | `time.final` | final time | case default |
//! | `output.dir` | output directory | `output` |
//! | `output.snapshot_stride` | steps between snapshots | 10% of the estimated step count |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::cases::{self, BenchmarkCase};
use crate::error::{Error, Result};
use crate::flux::FluxParams;
use crate::grid::Mesh;
use crate::model::GasModel;
use crate::solver::SolverConfig;

const KEYS: &[&str] = &[
    "case",
    "mesh.dim",
    "mesh.cells",
    "model.a",
    "model.gamma",
    "model.mu",
    "model.lambda",
    "flux.epsilon",
    "solver.cfl",
    "solver.dt_cap",
    "solver.picard_tol",
    "solver.picard_max_iter",
    "solver.linear_tol",
    "solver.linear_max_iter",
    "solver.max_retries",
    "time.final",
    "output.dir",
    "output.snapshot_stride",
];

/// Flat `key -> value` view of a configuration file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut errors = Vec::new();
        let mut section = String::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                match rest.strip_suffix(']') {
                    Some(name) if !name.trim().is_empty() => section = name.trim().to_string(),
                    _ => errors.push(format!("line {}: malformed section header `{line}`", n + 1)),
                }
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) if !k.trim().is_empty() => {
                    let k = k.trim();
                    let key = if section.is_empty() {
                        k.to_string()
                    } else {
                        format!("{section}.{k}")
                    };
                    entries.insert(key, v.trim().to_string());
                }
                _ => errors.push(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    n + 1
                )),
            }
        }
        if errors.is_empty() {
            Ok(Self { entries })
        } else {
            Err(Error::Config(errors))
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(vec![format!(
                "cannot read config `{}`: {e}",
                path.display()
            )])
        })?;
        Self::parse(&text)
    }

    /// Applies a `key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        match assignment.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => {
                self.entries
                    .insert(k.trim().to_string(), v.trim().to_string());
                Ok(())
            }
            _ => Err(Error::Config(vec![format!(
                "override `{assignment}` is not of the form key=value"
            )])),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }
}

/// Validated description of one simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub case: String,
    pub dim: usize,
    pub cells_per_axis: Vec<usize>,
    pub model: GasModel,
    pub epsilon: f64,
    pub solver: SolverConfig,
    pub final_time: f64,
    pub output_dir: PathBuf,
    pub snapshot_stride: Option<usize>,
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let mut errors = Vec::new();
        for key in raw.entries.keys() {
            if !KEYS.contains(&key.as_str()) {
                errors.push(format!("unknown key `{key}`"));
            }
        }

        let mut num = |key: &str, default: f64| -> f64 {
            match raw.get(key) {
                None => default,
                Some(s) => s.parse().unwrap_or_else(|_| {
                    errors.push(format!("{key} = `{s}` is not a number"));
                    f64::NAN
                }),
            }
        };
        let defaults = GasModel::default();
        let model = GasModel {
            a: num("model.a", defaults.a),
            gamma: num("model.gamma", defaults.gamma),
            mu: num("model.mu", defaults.mu),
            lambda: num("model.lambda", defaults.lambda),
        };
        let epsilon = num("flux.epsilon", 0.6);
        let sd = SolverConfig::default();
        let cfl = num("solver.cfl", sd.cfl);
        let picard_tol = num("solver.picard_tol", sd.picard_tol);
        let linear_tol = num("solver.linear_tol", sd.linear_tol);
        let dt_cap = raw
            .get("solver.dt_cap")
            .map(|_| num("solver.dt_cap", f64::NAN));
        let final_time = raw.get("time.final").map(|_| num("time.final", f64::NAN));

        let mut int = |key: &str, default: usize| -> usize {
            match raw.get(key) {
                None => default,
                Some(s) => s.parse().unwrap_or_else(|_| {
                    errors.push(format!("{key} = `{s}` is not a nonnegative integer"));
                    default
                }),
            }
        };
        let solver = SolverConfig {
            cfl,
            dt_cap,
            picard_tol,
            picard_max_iter: int("solver.picard_max_iter", sd.picard_max_iter),
            linear_tol,
            linear_max_iter: int("solver.linear_max_iter", sd.linear_max_iter),
            max_retries: int("solver.max_retries", sd.max_retries),
        };
        let snapshot_stride = raw
            .get("output.snapshot_stride")
            .map(|_| int("output.snapshot_stride", 0));

        let case_name = raw.get("case").unwrap_or("").to_string();
        let case = if case_name.is_empty() {
            errors.push("missing key `case`".into());
            None
        } else {
            match cases::by_name(&case_name, Some(model)) {
                Ok(c) => Some(c),
                Err(e) => {
                    errors.push(e.to_string());
                    None
                }
            }
        };
        let dim = match raw.get("mesh.dim") {
            Some(s) => s.parse().unwrap_or_else(|_| {
                errors.push(format!("mesh.dim = `{s}` is not an integer"));
                0
            }),
            None => case.as_ref().map_or(2, |c| c.dim),
        };
        let cells_per_axis = match raw.get("mesh.cells") {
            None => vec![32; dim.clamp(1, 3)],
            Some(s) => {
                let parsed: std::result::Result<Vec<usize>, _> =
                    s.split(',').map(|p| p.trim().parse::<usize>()).collect();
                match parsed {
                    Ok(v) if v.len() == 1 => vec![v[0]; dim.clamp(1, 3)],
                    Ok(v) => v,
                    Err(_) => {
                        errors.push(format!("mesh.cells = `{s}` is not a list of integers"));
                        vec![]
                    }
                }
            }
        };

        let mut h = f64::NAN;
        match Mesh::new(dim, &cells_per_axis) {
            Ok(m) => h = m.h(),
            Err(e) => errors.push(e.to_string()),
        }
        if let Some(c) = &case {
            if c.dim != dim {
                errors.push(format!(
                    "case `{}` is {}-dimensional but mesh.dim = {dim}",
                    c.name, c.dim
                ));
            }
        }
        errors.extend(model.violations());
        if h.is_finite() {
            errors.extend(FluxParams::violations(epsilon, h, model.gamma));
        }
        errors.extend(solver.violations());
        let final_time =
            final_time.unwrap_or_else(|| case.as_ref().map_or(f64::NAN, |c| c.final_time));
        if !final_time.is_nan() && !(final_time > 0.0 && final_time.is_finite()) {
            errors.push(format!("time.final = {final_time} must be > 0"));
        }
        if snapshot_stride == Some(0) {
            errors.push("output.snapshot_stride must be >= 1".into());
        }

        if !errors.is_empty() {
            return Err(Error::Config(errors));
        }
        Ok(Self {
            case: case_name,
            dim,
            cells_per_axis,
            model,
            epsilon,
            solver,
            final_time,
            output_dir: PathBuf::from(raw.get("output.dir").unwrap_or("output")),
            snapshot_stride,
        })
    }

    /// Loads `path` and applies `key=value` overrides in order.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let mut raw = RawConfig::load(path)?;
        for o in overrides {
            raw.set(o)?;
        }
        Self::from_raw(&raw)
    }

    pub fn mesh(&self) -> Result<Mesh> {
        Mesh::new(self.dim, &self.cells_per_axis)
    }

    /// The named benchmark with this configuration's gas model.
    pub fn benchmark(&self) -> Result<BenchmarkCase> {
        let mut case = cases::by_name(&self.case, Some(self.model))?;
        case.epsilon = self.epsilon;
        case.final_time = self.final_time;
        Ok(case)
    }
}
