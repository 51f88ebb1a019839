use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CopulaError {
    #[error("{name} = {value} is outside its domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("evaluation at boundary point ({u}, {v}); only the open unit square is allowed")]
    Boundary { u: f64, v: f64 },
    #[error("non-finite value in {what} at (u={u}, v={v}) for {model}")]
    Numeric {
        what: &'static str,
        u: f64,
        v: f64,
        model: String,
    },
    #[error("root finder did not converge for u={u}, t={t} ({model})")]
    RootNotFound { u: f64, t: f64, model: String },
    #[error("{0}")]
    Contract(String),
    #[error("no closed form available: {0}")]
    NoClosedForm(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("no start converged: {0}")]
    NotConverged(String),
}

pub type Result<T> = std::result::Result<T, CopulaError>;

pub(crate) fn check_range(name: &'static str, value: f64, lo: f64, hi: f64, domain: &'static str) -> Result<f64> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(value)
    } else {
        Err(CopulaError::Domain { name, value, domain })
    }
}
