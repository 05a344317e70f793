//! File loading, embedded fixtures and error-to-exit-code mapping.

use std::fmt;
use std::path::Path;

use platoon_sort::format::{serialize_state, GoalFile};
use platoon_sort::{fixtures, CostParams, Error, SearchError};
use serde::Deserialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_TIMEOUT: i32 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }

    pub fn parse(message: impl Into<String>) -> Self {
        CliError::new(EXIT_PARSE, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse { .. }
            | Error::InvalidGrid(_)
            | Error::InvalidParams(_)
            | Error::InvariantViolation(_)
            | Error::IllegalMove(_)
            | Error::NonAdjacent { .. }
            | Error::NotAdjacentStates(_)
            | Error::NonpositiveCmin(_) => EXIT_PARSE,
            Error::InfeasibleTemplate(_)
            | Error::InfeasibleGoal(_)
            | Error::UnpairedGoal(_)
            | Error::EmptyGoalSet
            | Error::Search(SearchError::NoPath(_)) => EXIT_INFEASIBLE,
            Error::Search(SearchError::TimedOut(_)) | Error::AllRunsTimedOut(_) => EXIT_TIMEOUT,
            Error::CyclicPrecedence | Error::BoundTooSmall(_) => EXIT_FAILURE,
        };
        CliError::new(code, e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub const FIXTURE_PREFIX: &str = "fixture:";

/// Text of an embedded fixture: `table1`, `table1-goal`, `table1-path`,
/// `sample-<1..30>`, `goal-1`, `goal-2`.
pub fn fixture_text(name: &str) -> CliResult<String> {
    let goal = |g: platoon_sort::PlatoonState| serde_json::to_string_pretty(&GoalFile::from_goal(&g)).expect("goal serializes");
    match name {
        "table1" => Ok(fixtures::TABLE1_INSTANCE.to_owned()),
        "table1-goal" => Ok(fixtures::TABLE1_GOAL.to_owned()),
        "table1-path" => Ok(fixtures::TABLE1_PATH.to_owned()),
        "goal-1" => Ok(goal(fixtures::goal_1())),
        "goal-2" => Ok(goal(fixtures::goal_2())),
        other => {
            let id = other
                .strip_prefix("sample-")
                .and_then(|n| n.parse::<usize>().ok())
                .filter(|n| (1..=fixtures::SAMPLE_COUNT).contains(n))
                .ok_or_else(|| CliError::parse(format!("unknown fixture '{other}'")))?;
            Ok(serialize_state(&fixtures::sample(id)))
        }
    }
}

/// Reads a file, or an embedded fixture when the argument starts with `fixture:`.
pub fn load_text(arg: &str) -> CliResult<String> {
    match arg.strip_prefix(FIXTURE_PREFIX) {
        Some(name) => fixture_text(name),
        None => std::fs::read_to_string(arg).map_err(|e| CliError::parse(format!("cannot read {arg}: {e}"))),
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    cost: Option<CostParams>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct CostOverrides {
    pub beta_long: Option<f64>,
    pub beta_lc: Option<f64>,
    pub gamma: Option<f64>,
}

/// Defaults, then the `[cost]` table of the config file, then flags.
pub fn load_params(config: Option<&Path>, overrides: CostOverrides) -> CliResult<CostParams> {
    let mut params = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::parse(format!("cannot read {}: {e}", path.display())))?;
            let file: ConfigFile =
                toml::from_str(&text).map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
            file.cost.unwrap_or_default()
        }
        None => CostParams::default(),
    };
    if let Some(v) = overrides.beta_long {
        params.beta_long = v;
    }
    if let Some(v) = overrides.beta_lc {
        params.beta_lc = v;
    }
    if let Some(v) = overrides.gamma {
        params.gamma = v;
    }
    params.validate()?;
    Ok(params)
}

/// Writes to `out` if given, stdout otherwise.
pub fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::new(EXIT_FAILURE, format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}
