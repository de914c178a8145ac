//! Core engine for modeling one-day cricket innings as finite Markov processes.
//!
//! The crate is organized around a ball-by-ball view of an innings:
//!
//! - [`data`] ingests ball-by-ball match files into a validated [`data::Corpus`],
//!   with [`cricsheet`] adapting the Cricsheet export format.
//! - [`state`] defines the discrete innings state tuples, their integer
//!   encodings, and the conversion of a match into a state trajectory with
//!   Monte-Carlo regression targets.
//! - [`dls`] loads the Duckworth-Lewis-Stern resource table used as the
//!   comparison baseline.
//! - [`net`] is a small feed-forward value network trained by Monte-Carlo
//!   regression to estimate the fraction of scoring resources left.
//! - [`eval`] runs the interruption experiment: project final scores from a
//!   mid-innings state and cross-validate the network against the DLS table.
//! - [`irl`] recovers a linear reward function from winning-team play via an
//!   iteratively grown linear program, solved by [`simplex`].
//! - [`policy`] estimates empirical transition statistics and computes the
//!   optimal batting policy by finite-horizon dynamic programming.
//! - [`sim`] simulates innings and full matches, producing posterior
//!   final-score distributions.
//!
//! All randomness flows from explicit 64-bit seeds through [`seed`], so every
//! pipeline is reproducible bit-for-bit, including under the data-parallel
//! execution enabled by the `parallel` feature (on by default).

pub mod artifact;
pub mod cricsheet;
pub mod data;
pub mod dls;
pub mod eval;
pub mod irl;
pub mod net;
pub(crate) mod par;
pub mod policy;
pub mod seed;
pub mod sim;
pub mod simplex;
pub mod state;

pub use data::{Corpus, DeliveryRecord, MatchRecord, Winner};
pub use dls::DlsTable;
pub use eval::FoldReport;
pub use irl::RewardCoefficients;
pub use net::{NetworkConfig, TrainingReport, ValueNetwork};
pub use policy::{PolicyTable, QTable, TransitionModel};
pub use sim::{ScoreDistribution, SimulationConfig};
pub use state::{Action, FirstInningsState, GameState, SecondInningsState, Trajectory};
