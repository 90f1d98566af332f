use std::fmt;
use std::path::Path;

use recoilimp::Error;

pub const CONFIG: i32 = 2;
pub const INPUT: i32 = 3;
pub const INTERNAL: i32 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: CONFIG,
            message: message.into(),
        }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: INPUT,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self {
            code: INTERNAL,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Exit code for a library error raised outside of config or input loading.
pub fn code_for(e: &Error) -> i32 {
    match e {
        Error::UnknownElement(_)
        | Error::UnknownMaterial(_)
        | Error::InvalidFormula { .. }
        | Error::InvalidParameter { .. }
        | Error::Json(_) => CONFIG,
        Error::Parse(_) | Error::Csv(_) | Error::Io(_) | Error::Coverage(_) | Error::NonFinite(_) => INPUT,
        _ => INTERNAL,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self {
            code: code_for(&e),
            message: e.to_string(),
        }
    }
}

pub fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::input(format!("{}: {e}", path.display()))
}

/// Failure while loading a config file. Semantic errors get the line of the
/// offending key when it can be found in the text.
pub fn config_error(path: &Path, text: &str, e: Error) -> CliError {
    let key = match &e {
        Error::InvalidParameter { name, .. } => name.rsplit('.').next().map(str::to_string),
        Error::UnknownMaterial(m) | Error::UnknownElement(m) => Some(m.clone()),
        Error::InvalidFormula { formula, .. } => Some(formula.clone()),
        _ => None,
    };
    let line = key.and_then(|k| {
        let quoted = format!("\"{k}\"");
        text.lines().position(|l| l.contains(&quoted)).map(|i| i + 1)
    });
    let message = match (&e, line) {
        (Error::Json(j), _) => format!("{}:{}:{}: {j}", path.display(), j.line(), j.column()),
        (_, Some(line)) => format!("{}:{line}: {e}", path.display()),
        _ => format!("{}: {e}", path.display()),
    };
    CliError::config(message)
}

/// Failure while reading a data file.
pub fn input_error(path: &Path, e: Error) -> CliError {
    let code = match e {
        Error::Json(_) | Error::Parse(_) | Error::Csv(_) | Error::Io(_) => INPUT,
        ref other => code_for(other),
    };
    CliError {
        code,
        message: format!("{}: {e}", path.display()),
    }
}
