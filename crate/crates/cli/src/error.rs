use dfsblock_core::Error as CoreError;

pub const EXIT_OK: u8 = 0;
pub const EXIT_IO: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_CONTRACT: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("numerical contract violated: {0}")]
    Contract(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Contract(_) => EXIT_CONTRACT,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        use CoreError::*;
        match e {
            // rejected inputs, including requests beyond the configured qubit cap
            SiteOutOfRange { .. } | RepeatedSite(_) | Capacity { .. } | EmptySiteSet | InvalidParameter(_) | Model(_) | GapClosure(_)
            | Adiabaticity { .. } | SynthesisDegeneracy { .. } | MissingPhase(..) | Unnormalized(_) | NonCyclic | RampInPiecewise(_) => {
                CliError::Validation(e.to_string())
            }
            DimensionMismatch { .. } | BadShape(_) | NonFinite | NotHermitian(_) | NotOrthonormal(_) | NotProjector(_) | NonCommuting(_)
            | Leakage(_) | Integration(_) | GridMismatch { .. } | SynthesisCapacity { .. } => CliError::Contract(e.to_string()),
            Json(_) | Csv(_) => CliError::Io(std::io::Error::other(e.to_string())),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::from(CoreError::Capacity { requested: 8, limit: 4 }).exit_code(), EXIT_VALIDATION);
        assert_eq!(CliError::from(CoreError::Leakage(1e-3)).exit_code(), EXIT_CONTRACT);
        assert_eq!(CliError::from(CoreError::SynthesisCapacity { cap: 10, epsilon: 1e-9 }).exit_code(), EXIT_CONTRACT);
        assert_eq!(CliError::Io(std::io::Error::other("x")).exit_code(), EXIT_IO);
    }
}
