use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),
    #[error("degenerate metric at ({q1}, {q2})")]
    DegenerateMetric { q1: f64, q2: f64 },
    #[error("curvature undefined at sample {index}: speed vanishes")]
    UndefinedCurvature { index: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("integration blew up after t = {last_time}")]
    BlowUp { last_time: f64 },
    #[error("field not oscillating")]
    NotOscillating,
    #[error("no sign change of the Taimanov minimum in [{k_lo}, {k_hi}]")]
    Bracket { k_lo: f64, k_hi: f64 },
    #[error("translation ({p}, {q}) pairs to zero with winding ({a}, {b})")]
    InvalidDirection { p: i64, q: i64, a: i64, b: i64 },
    #[error("path left its minimax class: transgression {before} -> {after}")]
    ClassEscape { before: f64, after: f64 },
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::DegenerateMetric { .. } => "degenerate_metric",
            Error::UndefinedCurvature { .. } => "undefined_curvature",
            Error::InvalidInput(_) => "invalid_input",
            Error::BlowUp { .. } => "blow_up",
            Error::NotOscillating => "not_oscillating",
            Error::Bracket { .. } => "bracket",
            Error::InvalidDirection { .. } => "invalid_direction",
            Error::ClassEscape { .. } => "class_escape",
            Error::Numeric(_) => "numeric",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// Process exit code: 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) => 2,
            _ => 1,
        }
    }
}
