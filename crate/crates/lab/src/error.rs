use std::fmt;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("{path}: parse error: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: field `{field}` is invalid: {message}")]
    FixtureInvalid {
        path: String,
        field: String,
        message: String,
    },
    #[error("`{field}` = {value} exceeds the budget {limit}")]
    BudgetExceeded {
        field: String,
        value: u64,
        limit: u64,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

impl LabError {
    pub(crate) fn invalid(
        path: &str,
        field: impl Into<String>,
        message: impl fmt::Display,
    ) -> Self {
        LabError::FixtureInvalid {
            path: path.to_string(),
            field: field.into(),
            message: message.to_string(),
        }
    }
}
