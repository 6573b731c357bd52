use thiserror::Error;

/// A named inequality and the ratio it achieved.
#[derive(Clone, Debug, PartialEq)]
pub struct Margin {
    pub label: String,
    pub ratio: f64,
    pub required: f64,
}

impl Margin {
    pub fn new(label: impl Into<String>, ratio: f64, required: f64) -> Self {
        Self { label: label.into(), ratio, required }
    }

    pub fn passed(&self) -> bool {
        // relative slack so that uniformly rescaled inputs classify identically
        self.ratio >= self.required * (1.0 - 1e-9)
    }
}

impl std::fmt::Display for Margin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {:.4} (need {:.4})", self.label, self.ratio, self.required)
    }
}

pub(crate) fn format_margins(margins: &[Margin]) -> String {
    margins
        .iter()
        .map(|m| m.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {0}: modes need at least two levels")]
    InvalidDimension(usize),

    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("invalid factor index: {0}")]
    InvalidIndex(String),

    #[error("regime validity violated: {}", format_margins(.0))]
    RegimeValidity(Vec<Margin>),

    #[error("no amplification regime matches: {}", format_margins(.0))]
    Unclassifiable(Vec<Margin>),

    #[error("singular coupling: {0}")]
    SingularCoupling(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("ambiguous resonance: frequency sum {sum:e} is neither resonant nor resolvable by the averaging window (widen the window or reclassify the pair)")]
    AmbiguousResonance { sum: f64 },

    #[error("norm drift {drift:e} exceeds {bound:e}; try dt <= {suggested_dt:e}")]
    Accuracy { drift: f64, bound: f64, suggested_dt: f64 },

    #[error("numerical failure at t = {time}: {reason}")]
    Numerical { time: f64, reason: String },

    #[error("frame mismatch: {0}")]
    FrameMismatch(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("disjoint grids: {0}")]
    DisjointGrids(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Errors that `--force` may downgrade to warnings.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::RegimeValidity(_)
                | Error::Unclassifiable(_)
                | Error::Configuration(_)
                | Error::SingularCoupling(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
