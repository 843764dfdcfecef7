//! Coalition formation for multiuser networks: a partition-form game engine
//! with parameterized deviation models (q-merge, q-split, merge&split,
//! individual), exact deviation-complexity combinatorics, and a Monte Carlo
//! simulator of a MISO interference channel with zero-forcing beamforming.

pub mod campaign;
pub mod complexity;
pub mod deviation;
pub mod engine;
mod error;
pub mod miso;
pub mod partition;
pub mod preference;

pub use error::{Error, Result};

pub use campaign::{CampaignConfig, CampaignOutput, ModelStats, RealizationRow, RunStatistics};
pub use deviation::{Deviation, DeviationKind, DeviationModel, HistoryLedger, ModelKind};
pub use engine::{
    run_formation, CachedOracle, FnOracle, FormationOptions, FormationOutcome, GameState,
    TraceStep, UtilityOracle,
};
pub use miso::{Beamformer, ChannelRealization, Deployment, NetworkConfig, RateOracle};
pub use partition::{Coalition, CoalitionStructure, PlayerSet};
pub use preference::UtilityVector;
