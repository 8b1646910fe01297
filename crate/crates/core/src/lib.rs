//! Epoch-based interest disclosure simulator and attack harness.
//!
//! The library models a browser API that classifies visited domains into a
//! closed taxonomy of interest topics, keeps the top `T` topics per weekly
//! epoch, and discloses one topic per window epoch to embedded callers with
//! probability-`p` uniform noise. On top of the simulator sit two adversary
//! evaluations: flagging injected noise via topic-rarity priors, and
//! cross-site re-identification via minimal Hamming distance over the topic
//! sets observed by two colluding callers.
//!
//! Modules follow the pipeline order: [`taxonomy`] and [`classifier`] load
//! the assets, [`epoch`] turns browsing traces into weekly top profiles,
//! [`sim`] produces observation logs, [`adversary`] scores the attacks, and
//! [`datagen`] builds synthetic populations so every experiment runs at desk
//! scale.

pub mod adversary;
pub mod classifier;
pub mod datagen;
pub mod epoch;
pub mod error;
pub mod rng;
pub mod sim;
pub mod taxonomy;

pub use error::{Error, Result};
pub use taxonomy::{Taxonomy, Topic, TopicId, UtilityBucket};
