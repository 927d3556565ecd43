use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bank: {0}")]
    InvalidBank(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("the zero polynomial has no finite root set")]
    ZeroPolynomial,

    #[error("determinant interpolation failed after {attempts} sample rotations")]
    Interpolation { attempts: usize },

    #[error("root extraction did not converge for a degree-{degree} polynomial")]
    RootFinding { degree: usize },

    #[error("no FIR inverse found within order budget (p_max = {p_max})")]
    OrderBudgetExceeded { p_max: usize },

    #[error("no exact solution at order (p1, p2) = ({p1}, {p2}): relative residual {residual:e}")]
    NotSolvableAtOrder { p1: usize, p2: usize, residual: f64 },

    #[error("analysis bank does not satisfy the Hermitian-symmetry condition")]
    NotHermitianSymmetric,

    #[error("kernel is not positive semi-definite (quadratic form = {value:e})")]
    KernelNotPsd { value: f64 },

    #[error("kernel quadratic form has a non-negligible imaginary part ({imag:e})")]
    KernelNotHermitian { imag: f64 },

    #[error("synthesis channel {channel} is degenerate (energy {energy:e})")]
    DegenerateChannel { channel: usize, energy: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
