//! JSON scenario schema.
//!
//! ```json
//! {
//!   "dimension": 1,
//!   "horizon": 10.0,
//!   "schedule": { "kind": "uniform", "eta": 1.0 },
//!   "A": { "kind": "constant", "data": [[1.0]] },
//!   "B": { "kind": "constant", "data": [[2.718281828459045]] },
//!   "f": { "kind": "constant", "data": [0.0] },
//!   "alphas": { "kind": "zero" },
//!   "x0": [1.0]
//! }
//! ```
//!
//! * `schedule`: `{"kind": "uniform", "eta": η}` or `{"kind": "explicit", "times": [...]}`.
//! * `A`: `constant` (`data`: n×n rows), `piecewise` (`data`: `{"breaks": [...],
//!   "values": [m0, m1, ...]}`, breaks must be impulse times) or `table`
//!   (`data`: `{"times": [...], "values": [...]}`, linear interpolation).
//! * `B`: `constant` (one n×n matrix) or `list` (one matrix per impulse time).
//! * `f` (optional, default zero): same kinds as `A` with n-vectors.
//! * `alphas` (optional, default zero): `zero`, `constant` (one n-vector),
//!   `list` (one per impulse) or `signs` (the scalar sign probe offsets).
//! * `x0` (optional, default zero vector).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CoefficientOperator, Forcing, ImpulseSchedule, ImpulsiveSystem, JumpSequence, Profile};
use crate::probe::sign_sequence;

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub dimension: usize,
    pub horizon: f64,
    pub schedule: ScheduleSpec,
    #[serde(rename = "A")]
    pub a: MatrixProfileSpec,
    #[serde(rename = "B")]
    pub b: JumpSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<VectorProfileSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<AlphaSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ScheduleSpec {
    Uniform { eta: f64 },
    Explicit { times: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "lowercase")]
pub enum MatrixProfileSpec {
    Constant(Rows),
    Piecewise { breaks: Vec<f64>, values: Vec<Rows> },
    Table { times: Vec<f64>, values: Vec<Rows> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "lowercase")]
pub enum VectorProfileSpec {
    Constant(Vec<f64>),
    Piecewise { breaks: Vec<f64>, values: Vec<Vec<f64>> },
    Table { times: Vec<f64>, values: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "lowercase")]
pub enum JumpSpec {
    Constant(Rows),
    List(Vec<Rows>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "lowercase")]
pub enum AlphaSpec {
    Zero,
    Constant(Vec<f64>),
    List(Vec<Vec<f64>>),
    Signs,
}

/// Validated problem instance built from a [`ScenarioConfig`].
#[derive(Debug, Clone)]
pub struct Scenario {
    pub system: ImpulsiveSystem,
    pub forcing: Forcing,
    pub x0: DVector<f64>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn build(&self) -> Result<Scenario> {
        self.build_with_horizon(None)
    }

    /// Builds the scenario, optionally on a different horizon. Per-impulse
    /// lists must match the configured schedule exactly; under an override
    /// they may be longer and are truncated.
    pub fn build_with_horizon(&self, horizon_override: Option<f64>) -> Result<Scenario> {
        let n = self.dimension;
        if n == 0 {
            return Err(cfg("dimension must be at least 1"));
        }
        let horizon = horizon_override.unwrap_or(self.horizon);
        let schedule = match &self.schedule {
            ScheduleSpec::Uniform { eta } => ImpulseSchedule::uniform(*eta, horizon)?,
            ScheduleSpec::Explicit { times } => {
                let kept = times.iter().copied().filter(|&t| t <= horizon).collect();
                if horizon_override.is_none() && times.iter().any(|&t| t > horizon) {
                    return Err(cfg("explicit impulse time beyond horizon"));
                }
                ImpulseSchedule::new(kept, horizon)?
            }
        };
        let count = schedule.len();
        let overridden = horizon_override.is_some();
        let fit = |len: usize, what: &str| -> Result<()> {
            if len < count || (len > count && !overridden) {
                return Err(cfg(format!("{what} has {len} entries for {count} impulse times")));
            }
            Ok(())
        };

        let a = CoefficientOperator::new(match &self.a {
            MatrixProfileSpec::Constant(m) => Profile::Constant(matrix(m, n, n, "A")?),
            MatrixProfileSpec::Piecewise { breaks, values } => Profile::piecewise(
                breaks.clone(),
                values.iter().map(|m| matrix(m, n, n, "A")).collect::<Result<_>>()?,
            )?,
            MatrixProfileSpec::Table { times, values } => Profile::table(
                times.clone(),
                values.iter().map(|m| matrix(m, n, n, "A")).collect::<Result<_>>()?,
            )?,
        })?;

        let jumps = match &self.b {
            JumpSpec::Constant(m) => JumpSequence::new(vec![matrix(m, n, n, "B")?; count], n)?,
            JumpSpec::List(ms) => {
                fit(ms.len(), "B list")?;
                JumpSequence::new(
                    ms[..count].iter().map(|m| matrix(m, n, n, "B")).collect::<Result<_>>()?,
                    n,
                )?
            }
        };
        let system = ImpulsiveSystem::new(a, jumps, schedule)?;

        let f = match &self.f {
            None => None,
            Some(VectorProfileSpec::Constant(v)) => Some(Profile::Constant(column(v, n, "f")?)),
            Some(VectorProfileSpec::Piecewise { breaks, values }) => Some(Profile::piecewise(
                breaks.clone(),
                values.iter().map(|v| column(v, n, "f")).collect::<Result<_>>()?,
            )?),
            Some(VectorProfileSpec::Table { times, values }) => Some(Profile::table(
                times.clone(),
                values.iter().map(|v| column(v, n, "f")).collect::<Result<_>>()?,
            )?),
        };

        let alphas = match self.alphas.as_ref().unwrap_or(&AlphaSpec::Zero) {
            AlphaSpec::Zero => vec![DVector::zeros(n); count],
            AlphaSpec::Constant(v) => vec![vector(v, n, "alpha")?; count],
            AlphaSpec::List(vs) => {
                fit(vs.len(), "alphas list")?;
                vs[..count].iter().map(|v| vector(v, n, "alpha")).collect::<Result<_>>()?
            }
            AlphaSpec::Signs => sign_sequence(&system)?
                .into_iter()
                .map(|s| DVector::from_element(1, s))
                .collect(),
        };
        let forcing = Forcing::new(n, f, alphas, horizon)?;

        let x0 = match &self.x0 {
            Some(v) => vector(v, n, "x0")?,
            None => DVector::zeros(n),
        };
        Ok(Scenario { system, forcing, x0 })
    }
}

fn cfg(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn matrix(rows: &Rows, r: usize, c: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != r || rows.iter().any(|row| row.len() != c) {
        return Err(cfg(format!("{what} must be {r}x{c}")));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(cfg(format!("{what} has nonfinite entries")));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn vector(v: &[f64], n: usize, what: &str) -> Result<DVector<f64>> {
    if v.len() != n {
        return Err(cfg(format!("{what} has length {}, expected {n}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(cfg(format!("{what} has nonfinite entries")));
    }
    Ok(DVector::from_column_slice(v))
}

fn column(v: &[f64], n: usize, what: &str) -> Result<DMatrix<f64>> {
    vector(v, n, what).map(|v| DMatrix::from_column_slice(n, 1, v.as_slice()))
}

/// The two reference systems used by the `examples` subcommand and the
/// acceptance tests.
pub mod reference {
    use super::*;

    /// `x' = 0`, `x(i) = 0.5 x(i - 0)`, `x(0) = 1`.
    pub fn halving(horizon: f64) -> ScenarioConfig {
        unit_gap(0.0, 0.5, horizon)
    }

    /// `x' + x = 0`, `x(i) = e x(i - 0)`, `x(0) = 1`.
    pub fn decay_with_e_jumps(horizon: f64) -> ScenarioConfig {
        unit_gap(1.0, std::f64::consts::E, horizon)
    }

    fn unit_gap(a: f64, b: f64, horizon: f64) -> ScenarioConfig {
        ScenarioConfig {
            dimension: 1,
            horizon,
            schedule: ScheduleSpec::Uniform { eta: 1.0 },
            a: MatrixProfileSpec::Constant(vec![vec![a]]),
            b: JumpSpec::Constant(vec![vec![b]]),
            f: None,
            alphas: Some(AlphaSpec::Zero),
            x0: Some(vec![1.0]),
        }
    }
}
