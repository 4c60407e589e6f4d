//! Deterministic multi-field driver, random streams, snapshots and traces.

mod rng;
pub mod snapshot;
pub mod trace;

use std::sync::Arc;

use rayon::prelude::*;

pub use rng::{mix, stream, Rng};

use crate::config::SimConfig;
use crate::error::SimError;
use crate::genomes::{self, SeedGenome};
use crate::mechanics::Heightmap;
use crate::world::{migrate::migrate_mix, World};

/// All fields of one simulation plus the migration stream.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub(crate) config: Arc<SimConfig>,
    pub(crate) heightmap: Arc<Heightmap>,
    pub(crate) fields: Vec<World>,
    pub(crate) migration_rng: Rng,
    pub(crate) step: u64,
    /// Execution mode; not part of the simulated state.
    pub(crate) parallel: bool,
}

impl Simulation {
    /// Empty fields, one per configured rate pair.
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        config.validate().map_err(|e| SimError::Config(e.0))?;
        let heightmap = Arc::new(config.heightmap().map_err(|e| SimError::Config(e.0))?);
        let config = Arc::new(config);
        let fields = (0..config.fields.len())
            .map(|i| World::new(config.clone(), heightmap.clone(), i))
            .collect();
        Ok(Simulation {
            parallel: config.parallel,
            migration_rng: Rng::stream(config.seed, stream::MIGRATION),
            config,
            heightmap,
            fields,
            step: 0,
        })
    }

    /// Fields seeded with `population.count` copies of `population.genome` each.
    pub fn with_population(config: SimConfig) -> Result<Self, SimError> {
        let seed = genomes::load(&config.population.genome, &config).map_err(|e| SimError::Config(e.to_string()))?;
        let mut sim = Simulation::new(config)?;
        let (count, energy) = (sim.config.population.count, sim.config.population.energy);
        sim.seed_all(&seed, count, energy)?;
        Ok(sim)
    }

    /// Adds `count` cells of `seed` to every field, drawing positions from the
    /// setup stream in field order.
    pub fn seed_all(&mut self, seed: &SeedGenome, count: usize, energy: f64) -> Result<(), SimError> {
        let mut rng = Rng::stream(self.config.seed, stream::SETUP);
        for f in &mut self.fields {
            f.seed_population(&seed.genome, &seed.phenotype, count, energy, &mut rng)?;
        }
        Ok(())
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn heightmap(&self) -> &Heightmap {
        &self.heightmap
    }

    pub fn fields(&self) -> &[World] {
        &self.fields
    }

    pub fn fields_mut(&mut self) -> &mut [World] {
        &mut self.fields
    }

    /// Switches between stepping fields on worker threads and serially.
    /// Results are identical either way.
    pub fn set_parallel(&mut self, parallel: bool) {
        self.parallel = parallel;
    }

    pub fn is_parallel(&self) -> bool {
        self.parallel
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn migration_rng(&self) -> Rng {
        self.migration_rng
    }

    pub fn cell_count(&self) -> usize {
        self.fields.iter().map(|f| f.cells().len()).sum()
    }

    fn migration_enabled(&self) -> bool {
        self.config.epoch > 0 && self.fields.len() > 1
    }

    /// Advances every field by `steps`, migrating at each epoch boundary.
    /// Fields run on worker threads when `parallel` is set; results do not
    /// depend on it.
    pub fn run(&mut self, steps: u64) -> Result<(), SimError> {
        let end = self.step + steps;
        while self.step < end {
            let mut target = end;
            if self.migration_enabled() {
                let epoch = self.config.epoch;
                target = target.min((self.step / epoch + 1) * epoch);
            }
            let n = target - self.step;
            let results: Vec<Result<(), SimError>> = if self.parallel {
                self.fields.par_iter_mut().map(|f| f.run(n)).collect()
            } else {
                self.fields.iter_mut().map(|f| f.run(n)).collect()
            };
            self.step = target;
            results.into_iter().collect::<Result<Vec<()>, _>>()?;
            if self.migration_enabled() && self.step % self.config.epoch == 0 {
                migrate_mix(&mut self.fields, &mut self.migration_rng);
            }
        }
        Ok(())
    }
}
