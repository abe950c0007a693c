use thiserror::Error;

/// Errors raised while validating hardware, usage or model inputs.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChargeError {
    /// A requested quantity exceeds what the node provides.
    #[error("capacity exceeded: {resource} requested {requested}, node provides {available}")]
    Capacity {
        resource: String,
        requested: f64,
        available: f64,
    },
    #[error("invalid input: {0}")]
    Validation(String),
    /// The model cannot be applied to the given hardware.
    #[error("model error: {0}")]
    Model(String),
}

impl ChargeError {
    pub(crate) fn capacity(resource: impl Into<String>, requested: f64, available: f64) -> Self {
        ChargeError::Capacity {
            resource: resource.into(),
            requested,
            available,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        ChargeError::Validation(msg.into())
    }

    pub(crate) fn model(msg: impl Into<String>) -> Self {
        ChargeError::Model(msg.into())
    }
}

pub type Result<T, E = ChargeError> = std::result::Result<T, E>;
