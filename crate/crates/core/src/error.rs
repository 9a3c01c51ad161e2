use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the library. Resource-cap violations are kept
/// distinct from validation/numerical failures so callers can map them
/// to different exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid substitution `{name}`: {}", violations.join("; "))]
    InvalidSubstitution {
        name: String,
        violations: Vec<String>,
    },

    #[error("incompatible substitutions: {0}")]
    Incompatible(String),

    #[error("operation requires a binary alphabet, got {0} letters")]
    NonBinaryAlphabet(usize),

    #[error("letter {letter} out of range 1..={max}")]
    LetterOutOfRange { letter: u32, max: usize },

    #[error("mahler undefined for 0")]
    ZeroPolynomial,

    #[error("singular set too dense: {excluded} of {total} cells excluded")]
    SingularSetTooDense { excluded: usize, total: usize },

    #[error("singular Fourier matrix family: q-difference polynomial is identically zero")]
    SingularFourierFamily,

    #[error("cocycle degenerate: norm underflow at step {step}")]
    CocycleDegenerate { step: u64 },

    #[error("cell cap exceeded: need {required} cells, cap is {cap}")]
    CellCapExceeded { required: u128, cap: usize },

    #[error("grid cap exceeded: need {required} points, cap is {cap}")]
    GridCapExceeded { required: usize, cap: usize },

    #[error("correlation radius {radius} too large: window erosion needs extent > 4*radius, got {extent}")]
    WindowTooLarge { radius: i64, extent: usize },

    #[error("bad directive spec: {0}")]
    BadDirective(String),

    #[error("bad parameter: {0}")]
    BadParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("bad substitution file: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for resource-cap violations (CLI exit status 2).
    pub fn is_resource_cap(&self) -> bool {
        matches!(
            self,
            Error::CellCapExceeded { .. } | Error::GridCapExceeded { .. }
        )
    }

    /// Short machine-readable tag for error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidSubstitution { .. } => "invalid_substitution",
            Error::Incompatible(_) => "incompatible",
            Error::NonBinaryAlphabet(_) => "non_binary_alphabet",
            Error::LetterOutOfRange { .. } => "letter_out_of_range",
            Error::ZeroPolynomial => "zero_polynomial",
            Error::SingularSetTooDense { .. } => "singular_set_too_dense",
            Error::SingularFourierFamily => "singular_fourier_family",
            Error::CocycleDegenerate { .. } => "cocycle_degenerate",
            Error::CellCapExceeded { .. } => "cell_cap_exceeded",
            Error::GridCapExceeded { .. } => "grid_cap_exceeded",
            Error::WindowTooLarge { .. } => "window_too_large",
            Error::BadDirective(_) => "bad_directive",
            Error::BadParameter(_) => "bad_parameter",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
