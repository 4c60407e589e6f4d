//! Artificial-life simulator of neuro-controlled cells whose development is
//! driven by a circular genome read through a bookmarker.

pub mod alphabet;
pub mod appendix;
pub mod config;
pub mod energetics;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod genome;
pub mod genomes;
pub mod mechanics;
pub mod metrics;
pub mod neurocell;
pub mod scene;
pub mod shell;
pub mod world;

pub use config::SimConfig;
pub use engine::{Rng, Simulation};
pub use error::{EnergyError, GenomeError, NetError, SimError, SnapshotError};
pub use genome::{ActionKind, Genome};
pub use world::World;
