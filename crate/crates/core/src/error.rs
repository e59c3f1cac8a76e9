use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite entry in {0}")]
    NonFinite(String),

    #[error("SVD did not converge for a {rows}x{cols} matrix")]
    SvdFailed { rows: usize, cols: usize },

    #[error("eigendecomposition did not converge for a {n}x{n} matrix")]
    EigenFailed { n: usize },

    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("degenerate Gram matrix: {0}")]
    DegenerateGram(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("ill-conditioned system: condition estimate {0:.3e} exceeds 1e12")]
    IllConditioned(f64),

    #[error("rank collapse: {0}")]
    RankCollapse(String),

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("source {index}: {source}")]
    Source {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-parsable category, used for CLI exit reporting.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::InvalidInput(_) => "input",
            Error::NonFinite(_) => "non-finite",
            Error::SvdFailed { .. } | Error::EigenFailed { .. } => "convergence",
            Error::NotHermitian(_) => "not-hermitian",
            Error::DegenerateGram(_) => "degenerate-gram",
            Error::Singular(_) | Error::IllConditioned(_) => "singular",
            Error::RankCollapse(_) => "rank-collapse",
            Error::Geometry(_) => "geometry",
            Error::Source { source, .. } => source.category(),
            Error::Format(_) => "format",
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn at_source(self, index: usize) -> Error {
        Error::Source {
            index,
            source: Box::new(self),
        }
    }
}
