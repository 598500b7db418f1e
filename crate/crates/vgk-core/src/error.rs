use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A model or numerics parameter violates its constraint.
    InvalidParam(&'static str),
    /// A function was evaluated outside its domain.
    Domain(&'static str),
    /// Initial data failed validation.
    InvalidInit(String),
    /// A state became non-finite during time stepping.
    Diverged { t: f64, b: f64, c: f64 },
    /// The per-step firing-rate fixed point did not converge.
    StepFailure { t: f64, trace: Vec<f64> },
    /// Transport step violates the CFL restriction.
    Cfl { courant: f64 },
    /// A tridiagonal system had a vanishing pivot.
    SingularSolve,
    /// Requested time lies past the stored history.
    OutOfRange { t: f64, t_max: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParam(msg) => f.write_str(msg),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::InvalidInit(msg) => write!(f, "invalid initial data: {msg}"),
            Error::Diverged { t, b, c } => {
                write!(
                    f,
                    "integration diverged at t = {t} (last valid b = {b}, c = {c})"
                )
            }
            Error::StepFailure { t, trace } => write!(
                f,
                "firing-rate fixed point failed at t = {t} after {} iterations",
                trace.len()
            ),
            Error::Cfl { courant } => write!(f, "CFL violated: courant number {courant} > 0.9"),
            Error::SingularSolve => f.write_str("tridiagonal solve hit a zero pivot"),
            Error::OutOfRange { t, t_max } => {
                write!(
                    f,
                    "time {t} lies beyond the stored series (t_max = {t_max})"
                )
            }
        }
    }
}

impl core::error::Error for Error {}
