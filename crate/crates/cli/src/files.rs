//! JSON instance and solution files.

use std::fs;
use std::path::Path;

use nukc::metric::MetricSpace;
use nukc::model::{Ball, NukcInstance, NukcSolution, RadiusClass};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub points: PointsFile,
    pub classes: Vec<ClassFile>,
}

/// Exactly one of `coords` and `matrix`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointsFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassFile {
    pub k: usize,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionFile {
    pub balls: Vec<BallFile>,
    #[serde(default)]
    pub outliers: Vec<usize>,
    /// Largest `radius / r_t` over the balls.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dilation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_counts: Option<Vec<usize>>,
    /// Fractional lower bound on the optimal dilation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallFile {
    pub center: usize,
    pub class: usize,
    pub radius: f64,
}

/// Run information kept apart from the deterministic fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub algo: String,
    pub elapsed_ms: f64,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))
}

pub fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("file types serialize");
    s.push('\n');
    s
}

pub fn parse_instance(text: &str, origin: &str) -> Result<InstanceFile, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::usage(format!("{origin}: {e}")))
}

pub fn parse_solution(text: &str, origin: &str) -> Result<SolutionFile, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::usage(format!("{origin}: {e}")))
}

pub fn load_instance(path: &Path) -> Result<NukcInstance, CliError> {
    let origin = path.display().to_string();
    parse_instance(&read(path)?, &origin)?.to_instance(&origin)
}

pub fn load_solution(path: &Path) -> Result<SolutionFile, CliError> {
    parse_solution(&read(path)?, &path.display().to_string())
}

impl InstanceFile {
    pub fn from_instance(instance: &NukcInstance) -> Self {
        Self {
            points: PointsFile {
                coords: None,
                matrix: Some(instance.space().to_matrix()),
            },
            classes: instance
                .classes()
                .iter()
                .map(|c| ClassFile {
                    k: c.multiplicity,
                    r: c.radius,
                })
                .collect(),
        }
    }

    pub fn to_instance(&self, origin: &str) -> Result<NukcInstance, CliError> {
        let bad = |msg: String| CliError::usage(format!("{origin}: {msg}"));
        let space = match (&self.points.coords, &self.points.matrix) {
            (Some(_), Some(_)) => {
                return Err(bad(
                    "points: give either \"coords\" or \"matrix\", not both".into(),
                ))
            }
            (None, None) => return Err(bad("points: missing \"coords\" or \"matrix\"".into())),
            (Some(c), None) => MetricSpace::from_coords(c),
            (None, Some(m)) => MetricSpace::new(m.clone()),
        }
        .map_err(|e| bad(format!("points: {e}")))?;
        let classes = self
            .classes
            .iter()
            .map(|c| RadiusClass::new(c.k, c.r))
            .collect();
        NukcInstance::with_levels(space, classes).map_err(|e| bad(format!("classes: {e}")))
    }
}

impl SolutionFile {
    pub fn from_solution(solution: &NukcSolution, outliers: Vec<usize>) -> Self {
        Self {
            balls: solution
                .balls
                .iter()
                .map(|b| BallFile {
                    center: b.center,
                    class: b.class,
                    radius: b.radius,
                })
                .collect(),
            outliers,
            dilation: None,
            class_counts: None,
            lower_bound: None,
            meta: None,
        }
    }

    pub fn to_solution(&self) -> NukcSolution {
        NukcSolution::new(
            self.balls
                .iter()
                .map(|b| Ball {
                    center: b.center,
                    class: b.class,
                    radius: b.radius,
                })
                .collect(),
        )
    }
}
