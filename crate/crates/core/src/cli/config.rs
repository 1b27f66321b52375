//! TOML scenario files.
//!
//! ```toml
//! dt = 0.01
//! t_end = 600.0
//! seed = 0          # optional
//! decimate = 10     # optional, record every n-th step
//!
//! [initial]
//! t = 0.0           # optional
//! p_l = [-10.0, 5.0]
//! p_r = [10.0, 5.0]
//! p_t = [15.0, 25.0]
//!
//! [goal]
//! xi_star = 1.2
//! eta_star = 1.5707963267948966
//! c_star = 40.0
//!
//! [gains]
//! kappa_c = 0.1
//! kappa_eta = 1.0
//! kappa_xi = 1.0
//!
//! [trajectory]
//! kind = "stationary"   # or "circular" / "waypoints"
//! ```
//!
//! A circular trajectory takes `center`, `radius` and `speed`; a waypoint
//! trajectory takes `points` (a list of `[x, y]`, starting at `p_t`) and
//! `speed`. Unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::{FormationGoal, Gains};
use crate::sim::{Scenario, ScenarioError, SimState, TargetTrajectory};

pub const DEFAULT_DECIMATE: usize = 10;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Invalid {
        path: PathBuf,
        #[source]
        source: ScenarioError,
    },
}

fn default_decimate() -> usize {
    DEFAULT_DECIMATE
}

fn is_default_decimate(n: &usize) -> bool {
    *n == DEFAULT_DECIMATE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(
        default = "default_decimate",
        skip_serializing_if = "is_default_decimate"
    )]
    pub decimate: usize,
    pub initial: SimState,
    pub goal: FormationGoal,
    pub gains: Gains,
    pub trajectory: TargetTrajectory,
}

impl ScenarioFile {
    pub fn from_scenario(s: &Scenario, decimate: usize) -> Self {
        Self {
            dt: s.dt,
            t_end: s.t_end,
            seed: s.seed,
            decimate,
            initial: s.initial,
            goal: s.goal,
            gains: s.gains,
            trajectory: s.trajectory.clone(),
        }
    }

    pub fn scenario(&self) -> Scenario {
        Scenario {
            initial: self.initial,
            goal: self.goal,
            gains: self.gains,
            trajectory: self.trajectory.clone(),
            dt: self.dt,
            t_end: self.t_end,
            seed: self.seed,
        }
    }

    /// Parses and validates `text`; `path` only labels error messages.
    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| {
            let (line, column) = e
                .span()
                .map(|span| line_col(text, span.start))
                .unwrap_or((1, 1));
            ConfigError::Parse {
                path: path.to_path_buf(),
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        let invalid = |source| ConfigError::Invalid {
            path: path.to_path_buf(),
            source,
        };
        if file.decimate == 0 {
            return Err(invalid(ScenarioError::Invalid(
                "decimate must be at least 1".into(),
            )));
        }
        file.scenario().validate().map_err(invalid)?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario files always serialize")
    }
}

/// One-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}
