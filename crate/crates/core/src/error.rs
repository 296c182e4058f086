use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-range configuration value.
    #[error("config error at line {line}, key `{key}`: {msg}")]
    Config { key: String, line: usize, msg: String },

    /// Malformed command-line flag value.
    #[error("bad value for flag `--{key}`: {msg}")]
    Flag { key: String, msg: String },

    #[error("invalid argument `{key}`: {msg}")]
    Invalid { key: String, msg: String },

    /// The highest oscillator orbital does not reach far enough past the wells.
    #[error(
        "basis coverage violated: turning point x_t = sqrt((2M-1)/omega) = {turning_point} \
         < coverage_factor*(d+R) = {required} (M = {m}, omega = {omega})"
    )]
    Coverage {
        m: usize,
        omega: f64,
        turning_point: f64,
        required: f64,
    },

    #[error("non-finite integrand value {value} at x = {x}")]
    NonFiniteIntegrand { x: f64, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("eigensolver failed on {dim}x{dim} matrix (max |entry| = {max_abs}, finite = {finite}): {msg}")]
    Eigen {
        dim: usize,
        max_abs: f64,
        finite: bool,
        msg: String,
    },

    #[error("grid of {n}x{n} points needs ~{needed_mb} MB, above the {cap_mb} MB cap; use a smaller N")]
    GridTooLarge { n: usize, needed_mb: usize, cap_mb: usize },

    #[error("iterative eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(key: &str, msg: impl Into<String>) -> Self {
        Error::Invalid {
            key: key.to_string(),
            msg: msg.into(),
        }
    }

    pub(crate) fn eigen(m: faer::MatRef<'_, f64>, msg: impl Into<String>) -> Self {
        let mut max_abs = 0.0f64;
        let mut finite = true;
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                finite &= v.is_finite();
                max_abs = max_abs.max(v.abs());
            }
        }
        Error::Eigen {
            dim: m.nrows(),
            max_abs,
            finite,
            msg: msg.into(),
        }
    }

    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Flag { .. } => 2,
            Error::Invalid { .. } | Error::Coverage { .. } | Error::GridTooLarge { .. } => 4,
            Error::NonFiniteIntegrand { .. }
            | Error::Dimension { .. }
            | Error::Eigen { .. }
            | Error::NoConvergence { .. }
            | Error::Io(_) => 3,
        }
    }
}
