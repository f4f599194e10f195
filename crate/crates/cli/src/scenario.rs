//! Scenario files: versioned JSON descriptions of runs and sweeps.

use fowler_core::fowler::spherical_profile;
use fowler_core::model::{CylState, Dimension, Direction};
use fowler_core::perturbed::PotentialSpec;
use serde::Deserialize;

use crate::CliError;

/// Required schema version; anything else is rejected up front.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub experiment: String,
    pub n: u32,
    #[serde(default)]
    pub rel_tol: Option<f64>,
    #[serde(default)]
    pub abs_tol: Option<f64>,
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub ic: Option<InitialCondition>,
    #[serde(default)]
    pub potential: Option<PotentialCoefficients>,
    #[serde(default)]
    pub fit: Option<FitParams>,
    #[serde(default)]
    pub kind: Option<String>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    /// Fowler phase point `V = eps Lambda`, `W = 0` at `t = 0`.
    Fowler { eps: f64, lambda: [f64; 2] },
    /// Spherical separatrix point `v = 1`, `w = 0` at `t = 0`.
    Bubble { lambda: [f64; 2] },
    /// Explicit state.
    State { t: f64, v: [f64; 2], w: [f64; 2] },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialCoefficients {
    pub c: [[f64; 2]; 2],
    #[serde(default)]
    pub d: Option<[[f64; 2]; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitParams {
    pub window_count: usize,
    pub window_length: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    #[serde(default)]
    pub spacing: Option<String>,
}

impl Scenario {
    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::MissingInput {
            message: format!("cannot read scenario {}: {e}", path.display()),
        })?;
        let scenario: Scenario = serde_json::from_str(&text).map_err(|e| CliError::Validation {
            code: "BAD_SCENARIO".into(),
            message: format!("scenario {} does not parse: {e}", path.display()),
        })?;
        if scenario.schema != SCHEMA_VERSION {
            return Err(CliError::Validation {
                code: "BAD_SCHEMA".into(),
                message: format!(
                    "scenario schema {} unsupported, expected {SCHEMA_VERSION}",
                    scenario.schema
                ),
            });
        }
        Ok(scenario)
    }

    pub fn dimension(&self) -> Result<Dimension, CliError> {
        Dimension::new(self.n).map_err(CliError::from_core)
    }

    pub fn potential_spec(&self) -> PotentialSpec {
        match &self.potential {
            None => PotentialSpec::zero(),
            Some(p) => PotentialSpec {
                c: p.c,
                d: p.d.unwrap_or([[0.0; 2]; 2]),
            },
        }
    }

    pub fn initial_state(&self, n: Dimension) -> Result<CylState, CliError> {
        let ic = self.ic.as_ref().ok_or_else(|| CliError::Validation {
            code: "MISSING_IC".into(),
            message: "scenario needs an \"ic\" block".into(),
        })?;
        match ic {
            InitialCondition::Fowler { eps, lambda } => {
                let lam = Direction::new(lambda[0], lambda[1])
                    .map_err(CliError::from_core)?
                    .lambda();
                Ok(CylState::new(0.0, [eps * lam[0], eps * lam[1]], [0.0, 0.0]))
            }
            InitialCondition::Bubble { lambda } => {
                let lam = Direction::new(lambda[0], lambda[1])
                    .map_err(CliError::from_core)?
                    .lambda();
                let y = spherical_profile(n)
                    .eval(0.0)
                    .map_err(CliError::from_core)?;
                Ok(CylState::new(
                    0.0,
                    [y[0] * lam[0], y[0] * lam[1]],
                    [y[1] * lam[0], y[1] * lam[1]],
                ))
            }
            InitialCondition::State { t, v, w } => Ok(CylState::new(*t, *v, *w)),
        }
    }
}

impl GridSpec {
    /// Materialize the grid points in ascending order.
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        if self.count == 0 {
            return Err(CliError::Validation {
                code: "EMPTY_GRID".into(),
                message: "grid count must be at least 1".into(),
            });
        }
        if !(self.start > 0.0) || !(self.stop >= self.start) {
            return Err(CliError::Validation {
                code: "BAD_GRID".into(),
                message: format!("grid [{}, {}] is not increasing and positive", self.start, self.stop),
            });
        }
        let log = match self.spacing.as_deref() {
            None | Some("linear") => false,
            Some("log") => true,
            Some(other) => {
                return Err(CliError::Validation {
                    code: "BAD_GRID".into(),
                    message: format!("unknown spacing {other:?}; use \"linear\" or \"log\""),
                })
            }
        };
        let m = self.count;
        let mut out = Vec::with_capacity(m);
        for i in 0..m {
            let f = if m == 1 { 0.0 } else { i as f64 / (m - 1) as f64 };
            let x = if log {
                (self.start.ln() + f * (self.stop.ln() - self.start.ln())).exp()
            } else {
                self.start + f * (self.stop - self.start)
            };
            out.push(x);
        }
        Ok(out)
    }
}
