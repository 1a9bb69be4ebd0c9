//! Job files: the JSON description of a variety, query points and run
//! settings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parse::{parse_constant, parse_polynomial};
use crate::poly::{PolySystem, C64};
use crate::tracker::StartStrategy;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceSet {
    pub tol_newton: f64,
    pub tol_track: f64,
    pub tol_residual: f64,
    pub tol_dedup: f64,
    pub tol_torus: f64,
    pub tol_rank: f64,
    pub max_steps: usize,
    /// Newton iterations allowed per corrector step while tracking.
    pub max_newton_iters: usize,
    /// Newton iterations allowed when refining an endpoint.
    pub max_refine_iters: usize,
}

impl Default for ToleranceSet {
    fn default() -> Self {
        ToleranceSet {
            tol_newton: 1e-10,
            tol_track: 1e-7,
            tol_residual: 1e-8,
            tol_dedup: 1e-6,
            tol_torus: 1e-8,
            tol_rank: 1e-8,
            max_steps: 50_000,
            max_newton_iters: 3,
            max_refine_iters: 64,
        }
    }
}

impl ToleranceSet {
    pub fn validate(&self) -> Result<()> {
        let reals = [
            ("tol_newton", self.tol_newton),
            ("tol_track", self.tol_track),
            ("tol_residual", self.tol_residual),
            ("tol_dedup", self.tol_dedup),
            ("tol_torus", self.tol_torus),
            ("tol_rank", self.tol_rank),
        ];
        for (name, v) in reals {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Job(format!("tolerance {name} must be positive, got {v}")));
            }
        }
        if self.max_steps == 0 || self.max_newton_iters == 0 || self.max_refine_iters == 0 {
            return Err(Error::Job("iteration limits must be positive".into()));
        }
        if self.tol_newton >= self.tol_dedup {
            return Err(Error::Job(format!(
                "tol_newton ({}) must be smaller than tol_dedup ({})",
                self.tol_newton, self.tol_dedup
            )));
        }
        Ok(())
    }

    /// Threshold above which an endpoint counts as singular.
    pub fn max_condition(&self) -> f64 {
        1.0 / self.tol_rank
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Direct,
    #[serde(alias = "batch")]
    ParameterHomotopy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledPoint {
    pub label: String,
    pub coordinates: Vec<C64>,
}

#[derive(Clone, Debug)]
pub struct JobSpec {
    pub variables: Vec<String>,
    pub equations: Vec<String>,
    pub system: PolySystem,
    pub dimension_d: usize,
    pub points: Vec<LabeledPoint>,
    pub seed: u64,
    pub tolerances: ToleranceSet,
    pub mode: Mode,
    pub start_strategy: StartStrategy,
    pub repeat_checks: u32,
    pub verify_dimension: bool,
    pub max_paths: Option<u128>,
    /// Modulus of the generic base point used in parameter-homotopy mode.
    pub base_radius: f64,
}

impl JobSpec {
    pub fn ambient_dim(&self) -> usize {
        self.variables.len()
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawCoordinate {
    Pair([f64; 2]),
    Real(f64),
    Text(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPoint {
    label: String,
    coordinates: Vec<RawCoordinate>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJob {
    variables: Vec<String>,
    equations: Vec<String>,
    dimension: usize,
    #[serde(default)]
    points: Vec<RawPoint>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    mode: Option<Mode>,
    #[serde(default)]
    start_strategy: Option<StartStrategy>,
    #[serde(default)]
    tolerances: ToleranceSet,
    #[serde(default)]
    repeat_checks: u32,
    #[serde(default)]
    verify_dimension: bool,
    #[serde(default)]
    max_paths: Option<u128>,
    #[serde(default)]
    base_radius: Option<f64>,
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn coordinate(raw: &RawCoordinate, label: &str) -> Result<C64> {
    let z = match raw {
        RawCoordinate::Pair([re, im]) => C64::new(*re, *im),
        RawCoordinate::Real(re) => C64::new(*re, 0.0),
        RawCoordinate::Text(s) => parse_constant(s)
            .map_err(|e| Error::Job(format!("point `{label}`: coordinate `{s}`: {e}")))?,
    };
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Job(format!("point `{label}` has a non-finite coordinate")));
    }
    Ok(z)
}

pub fn parse_job(text: &str) -> Result<JobSpec> {
    let raw: RawJob =
        serde_json::from_str(text).map_err(|e| Error::Job(format!("schema violation: {e}")))?;

    if raw.variables.is_empty() {
        return Err(Error::Job("at least one variable is required".into()));
    }
    for (i, v) in raw.variables.iter().enumerate() {
        if !is_identifier(v) || v == "i" {
            return Err(Error::Job(format!("`{v}` is not a usable variable name")));
        }
        if raw.variables[..i].contains(v) {
            return Err(Error::Job(format!("variable `{v}` is listed twice")));
        }
    }
    let n = raw.variables.len();
    if raw.dimension >= n {
        return Err(Error::Job(format!(
            "dimension {} must be smaller than the number of variables {n}",
            raw.dimension
        )));
    }
    if raw.equations.is_empty() {
        return Err(Error::Job("at least one equation is required".into()));
    }
    let equations = raw
        .equations
        .iter()
        .map(|e| parse_polynomial(e, &raw.variables))
        .collect::<Result<Vec<_>>>()?;
    let system = PolySystem::new(n, equations)?;

    let tolerances = raw.tolerances;
    tolerances.validate()?;

    let mut points = Vec::with_capacity(raw.points.len());
    for p in &raw.points {
        if p.coordinates.len() != n {
            return Err(Error::Job(format!(
                "point `{}` has {} coordinates, expected {n}",
                p.label,
                p.coordinates.len()
            )));
        }
        let coords = p
            .coordinates
            .iter()
            .map(|c| coordinate(c, &p.label))
            .collect::<Result<Vec<_>>>()?;
        if coords.iter().any(|z| z.norm() <= tolerances.tol_torus) {
            return Err(Error::Job(format!("point `{}` not in torus", p.label)));
        }
        points.push(LabeledPoint {
            label: p.label.clone(),
            coordinates: coords,
        });
    }

    let base_radius = raw.base_radius.unwrap_or(1.0);
    if !(base_radius.is_finite() && base_radius > 0.0) {
        return Err(Error::Job("base_radius must be positive".into()));
    }

    Ok(JobSpec {
        variables: raw.variables,
        equations: raw.equations,
        system,
        dimension_d: raw.dimension,
        points,
        seed: raw.seed,
        tolerances,
        mode: raw.mode.unwrap_or(Mode::Direct),
        start_strategy: raw.start_strategy.unwrap_or(StartStrategy::TwoHomogeneous),
        repeat_checks: raw.repeat_checks,
        verify_dimension: raw.verify_dimension,
        max_paths: raw.max_paths,
        base_radius,
    })
}
