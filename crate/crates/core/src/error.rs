use thiserror::Error;

/// Errors produced while building, evaluating or simulating a barrier problem.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{context}: normal has near-zero norm {norm:e}")]
    ZeroNormal { context: String, norm: f64 },

    #[error("{context}: expected {expected} components, got {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("unsupported dimension {0} (expected 2 or 3)")]
    UnsupportedDimension(usize),

    #[error("region {region}: {reason}")]
    InvalidRegion { region: usize, reason: String },

    #[error("half-space {0} is not referenced by any region")]
    UnreferencedHalfSpace(usize),

    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error(
        "degenerate barrier gradient (|grad h| = {grad_norm:e}) with violated constraint a = {constraint:e}{}",
        location_suffix(.position, .time)
    )]
    DegenerateGradient {
        grad_norm: f64,
        constraint: f64,
        position: Option<Vec<f64>>,
        time: Option<f64>,
    },

    #[error("initial state is outside the safe set: h = {h:e} at {position:?}")]
    UnsafeStart { h: f64, position: Vec<f64> },

    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),

    #[error("scenario config: {0}")]
    Config(String),

    #[error("no feasible point on the search grid")]
    NoFeasibleGridPoint,

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn location_suffix(position: &Option<Vec<f64>>, time: &Option<f64>) -> String {
    match (position, time) {
        (Some(p), Some(t)) => format!(" at p = {p:?}, t = {t}"),
        (Some(p), None) => format!(" at p = {p:?}"),
        (None, Some(t)) => format!(" at t = {t}"),
        (None, None) => String::new(),
    }
}

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True for errors caused by malformed input rather than by a failure
    /// during evaluation or simulation.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::DegenerateGradient { .. } | Error::NoFeasibleGridPoint | Error::Io { .. }
        )
    }

    /// Short machine-readable tag for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ZeroNormal { .. } => "zero_normal",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::UnsupportedDimension(_) => "unsupported_dimension",
            Error::InvalidRegion { .. } => "invalid_region",
            Error::UnreferencedHalfSpace(_) => "unreferenced_half_space",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::Empty(_) => "empty",
            Error::DegenerateGradient { .. } => "degenerate_gradient",
            Error::UnsafeStart { .. } => "unsafe_start",
            Error::UnknownScenario(_) => "unknown_scenario",
            Error::Config(_) => "config",
            Error::NoFeasibleGridPoint => "no_feasible_grid_point",
            Error::Io { .. } => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
