use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// The homodyned quadrature is noisier than vacuum, so no pure squeezed
    /// state reproduces it.
    #[error("p-quadrature variance {variance} exceeds the vacuum level 1/4")]
    AntiSqueezedQuadrature { variance: f64 },

    #[error("non-physical state: {0}")]
    NonPhysicalState(String),

    #[error("postselection window accepts no outcomes (P_s = 0)")]
    EmptyPostselection,

    #[error("config: {0}")]
    Config(String),

    #[error("fidelity is indeterminate (0/0) for a zero-width window; use the p_c -> 0 limit")]
    IndeterminateFidelity,
}

pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> Error {
    Error::InvalidParameter {
        name,
        value,
        reason,
    }
}
