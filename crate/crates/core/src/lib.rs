//! Performance analysis of channel-bonding opportunistic spectrum access MAC
//! protocols.
//!
//! * [`model`] and [`scenario`]: scenario description, derived parameters and
//!   the text format scenarios are stored in.
//! * [`analysis`]: exact Markov-chain engine for the flexible protocol.
//! * [`oracle`]: brute-force transition matrix used to check the analysis.
//! * [`sim`]: slot-level Monte Carlo simulator for every protocol variant.
//! * [`optimizer`]: per-interval bond-order selection.
//! * [`experiment`]: parameter sweeps, engine comparison and CSV output.

pub mod analysis;
pub mod error;
pub mod experiment;
pub mod matrix;
pub mod model;
pub mod optimizer;
pub mod oracle;
pub mod scenario;
pub mod sim;

pub use error::{ConfigError, Error, ParseError, Result};
pub use matrix::TransitionMatrix;
pub use model::ScenarioConfig;
