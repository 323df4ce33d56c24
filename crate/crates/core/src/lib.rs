//! Episodic control over successor features.
//!
//! The crate is split into four parts:
//!
//! - [`env`]: the four-room object-collection gridworld and its task schedule.
//! - [`dnd`]: per-action episodic key/value stores with kernel-weighted
//!   nearest-neighbour lookup and LRU eviction.
//! - [`agents`]: SFNEC (with and without GPI), NEC and SFQL.
//! - [`harness`]: experiment specs, seeding, metrics, CSV and SVG output.
//!
//! Experiment cells run on a rayon pool when the `parallel` feature is on
//! (the default) and sequentially otherwise.

pub mod agents;
pub mod dnd;
pub mod env;
pub mod error;
pub mod harness;

pub use error::{Error, Result};
