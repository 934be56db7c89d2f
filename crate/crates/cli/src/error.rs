use asymlyap::consensus::ConsensusError;
use asymlyap::design::DesignError;
use asymlyap::lmi::LmiError;
use asymlyap::lyapunov::LyapunovError;
use asymlyap::matops::MatError;
use asymlyap::sdpsolve::SdpError;
use asymlyap::system::ModelError;
use asymlyap::verify::VerifyError;
use std::io;
use std::path::PathBuf;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_BOUND_VIOLATED: i32 = 3;
pub const EXIT_PARSE: i32 = 64;
pub const EXIT_INVALID: i32 = 65;
/// Output could not be written; not part of the scripting contract.
pub const EXIT_IO: i32 = 74;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: io::Error },
    #[error("parse error in {source_name}: {message}")]
    Parse { source_name: String, message: String },
    #[error("invalid problem: {0}")]
    Invalid(String),
    /// Infeasible LMIs, unstabilizable plants, non-Hurwitz closed loops.
    #[error("{0}")]
    Infeasible(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Read { .. } | CliError::Parse { .. } => EXIT_PARSE,
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
            CliError::Verification(_) => EXIT_BOUND_VIOLATED,
            CliError::Write { .. } => EXIT_IO,
        }
    }

    pub fn parse(source_name: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Parse {
            source_name: source_name.into(),
            message: message.into(),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<MatError> for CliError {
    fn from(e: MatError) -> Self {
        match e {
            MatError::Singular | MatError::IterationLimit => CliError::Infeasible(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<LmiError> for CliError {
    fn from(e: LmiError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<SdpError> for CliError {
    fn from(e: SdpError) -> Self {
        match e {
            SdpError::Matrix(m) => m.into(),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<DesignError> for CliError {
    fn from(e: DesignError) -> Self {
        match e {
            DesignError::InfeasibleLmi { .. }
            | DesignError::AsymmetricClosedLoop { .. }
            | DesignError::NotHurwitz { .. }
            | DesignError::PHatFailed(_) => CliError::Infeasible(e.to_string()),
            DesignError::Model(m) => m.into(),
            DesignError::Lmi(m) => m.into(),
            DesignError::Solver(m) => m.into(),
            DesignError::Matrix(m) => m.into(),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<LyapunovError> for CliError {
    fn from(e: LyapunovError) -> Self {
        match e {
            LyapunovError::NotHurwitz { .. }
            | LyapunovError::NoStabilizingSeed(_)
            | LyapunovError::IterationLimit { .. } => CliError::Infeasible(e.to_string()),
            LyapunovError::Matrix(m) => m.into(),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::NotHurwitz { .. } => CliError::Infeasible(e.to_string()),
            VerifyError::NonConvergent { .. } => CliError::Verification(e.to_string()),
            VerifyError::Lyapunov(l) => l.into(),
            VerifyError::Matrix(m) => m.into(),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<ConsensusError> for CliError {
    fn from(e: ConsensusError) -> Self {
        match e {
            ConsensusError::Design(d) => d.into(),
            ConsensusError::Verify(v) => v.into(),
            ConsensusError::Model(m) => m.into(),
            ConsensusError::Lmi(m) => m.into(),
            ConsensusError::StructureViolated(_) => CliError::Verification(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}
