use thiserror::Error;

/// Everything that can go wrong while building or evaluating a machine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("steady state is not unique ({closed_classes} closed classes in the transition graph)")]
    NonUniqueSteadyState { closed_classes: usize },

    #[error("closed-form steady state inapplicable: denominator {which} = {value:e}")]
    ClosedFormInapplicable { which: &'static str, value: f64 },

    #[error("time step {dt} violates stability guard: dt * max|M_ii| = {product} > 0.1")]
    StabilityGuard { dt: f64, product: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Short machine-readable code used in `#ERR:<code>` table cells.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid",
            Error::NonUniqueSteadyState { .. } => "nonunique",
            Error::ClosedFormInapplicable { .. } => "closed_form",
            Error::StabilityGuard { .. } => "stability",
            Error::Numerical(_) => "numerical",
            Error::Config(_) => "config",
        }
    }

    /// True for failures caused by bad input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::InvalidParameter { .. } | Error::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
