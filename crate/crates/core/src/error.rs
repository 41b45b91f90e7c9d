use thiserror::Error;

use crate::ansatz::AnsatzError;
use crate::checkpoint::CheckpointError;
use crate::data::DataError;
use crate::diagram::DiagramError;
use crate::engine::EngineError;
use crate::grad::GradError;
use crate::train::TrainError;

/// Any error raised by this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error(transparent)]
    Ansatz(#[from] AnsatzError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Grad(#[from] GradError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
