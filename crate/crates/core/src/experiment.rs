//! Experiment harness: self-replication, two-genome competition and the
//! fixed-feed energy-transport probe. Every experiment runs one field.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{SimConfig, TerrainKind};
use crate::engine::{stream, Rng};
use crate::error::SimError;
use crate::genomes::{self, SeedGenome};
use crate::mechanics::distance;
use crate::world::World;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Replicate,
    Compete,
    FixedFeed,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Overrides {
    /// Holds the decay base at this value and disables adaptation.
    pub fixed_a: Option<f64>,
    pub delta_s: Option<f64>,
    /// Sun photon delivery.
    pub sun: Option<bool>,
    pub flat: Option<bool>,
    /// Fed-cell energy as a multiple of its own generation cost.
    pub feed_multiplier: Option<f64>,
}

fn default_interval() -> u64 {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    /// Built-in names or genome file paths.
    pub genomes: Vec<String>,
    pub steps: u64,
    /// Steps between samples of the time series.
    #[serde(default = "default_interval")]
    pub interval: u64,
    /// Seed cells per genome (replicate and compete); defaults to
    /// `population.count`.
    #[serde(default)]
    pub count: Option<usize>,
    #[serde(default)]
    pub overrides: Overrides,
    /// Time-series CSV output.
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub config: SimConfig,
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment: {0}")]
    Spec(String),
    #[error(transparent)]
    Load(#[from] genomes::LoadError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        let spec: ExperimentSpec = toml::from_str(text).map_err(|e| ExperimentError::Spec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::Io(path.display().to_string(), e))?;
        Self::from_toml(&text)
    }

    /// Checks that the overrides are consistent with the kind.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Spec(m.into()));
        let o = &self.overrides;
        let wanted = match self.kind {
            ExperimentKind::Compete => 2,
            _ => 1,
        };
        if self.genomes.len() != wanted {
            return Err(ExperimentError::Spec(format!(
                "{:?} takes {wanted} genome(s), got {}",
                self.kind,
                self.genomes.len()
            )));
        }
        if self.interval == 0 {
            return bad("interval must be > 0");
        }
        if let Some(a) = o.fixed_a {
            if !(a > 1.0) {
                return bad("fixed_a must be > 1");
            }
        }
        if let Some(m) = o.feed_multiplier {
            if self.kind != ExperimentKind::FixedFeed {
                return bad("feed_multiplier applies only to fixed-feed");
            }
            if !(m > 0.0 && m.is_finite()) {
                return bad("feed_multiplier must be positive");
            }
        }
        if self.kind == ExperimentKind::FixedFeed {
            if o.sun == Some(true) {
                return bad("fixed-feed requires the sun off");
            }
            if o.flat == Some(false) {
                return bad("fixed-feed requires a flat field");
            }
        }
        if self.kind == ExperimentKind::Compete && self.config.adaptive.enabled && o.fixed_a.is_none() {
            return bad("compete requires a fixed decay base (set overrides.fixed_a)");
        }
        self.effective_config().validate().map_err(|e| ExperimentError::Spec(e.0))
    }

    /// The base configuration with the kind's constraints and the overrides
    /// applied.
    pub fn effective_config(&self) -> SimConfig {
        let mut c = self.config.clone();
        let o = &self.overrides;
        let rates = c.fields.first().copied().unwrap_or(crate::config::FieldRates { alpha: 0.0, beta: 0.0 });
        c.fields = vec![rates];
        c.epoch = 0;
        if let Some(a) = o.fixed_a {
            c.energy.a = a;
            c.adaptive.enabled = false;
        }
        if let Some(ds) = o.delta_s {
            c.net.delta_s = ds;
        }
        if let Some(s) = o.sun {
            c.sun.deliver = s;
        }
        if o.flat == Some(true) {
            c.terrain.kind = TerrainKind::Flat;
        }
        if self.kind == ExperimentKind::FixedFeed {
            c.terrain.kind = TerrainKind::Flat;
            c.sun.deliver = false;
            c.sun.speed = 0.0;
            c.adaptive.enabled = false;
        }
        c
    }
}

/// One sample of an experiment's time series.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub step: u64,
    pub cells: usize,
    /// Replicate: connected components. Compete: cells of the first genome.
    /// Fixed-feed: cells connected to the fed cell.
    pub a: f64,
    /// Compete: cells of the second genome. Fixed-feed: network extent, the
    /// farthest connected cell's distance from the fed cell.
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub samples: Vec<Sample>,
    /// Component sizes at the end (replicate).
    pub final_components: Vec<usize>,
}

impl ExperimentReport {
    pub fn csv_header(&self) -> &'static str {
        match self.kind {
            ExperimentKind::Replicate => "step,cells,components,four_cell_components",
            ExperimentKind::Compete => "step,cells,genome0,genome1",
            ExperimentKind::FixedFeed => "step,cells,network,extent",
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(self.csv_header());
        s.push('\n');
        for x in &self.samples {
            let _ = writeln!(s, "{},{},{},{}", x.step, x.cells, x.a, x.b);
        }
        s
    }

    /// Mean of `(a, b)` over the samples in the second half of the run.
    pub fn equilibrium(&self) -> (f64, f64) {
        let Some(last) = self.samples.last() else {
            return (0.0, 0.0);
        };
        let half = last.step / 2;
        let tail: Vec<&Sample> = self.samples.iter().filter(|s| s.step >= half).collect();
        let n = tail.len() as f64;
        (tail.iter().map(|s| s.a).sum::<f64>() / n, tail.iter().map(|s| s.b).sum::<f64>() / n)
    }

    pub fn summary(&self) -> String {
        let last = self.samples.last();
        match self.kind {
            ExperimentKind::Replicate => format!(
                "components {:?}; four-cell components {}",
                self.final_components,
                self.final_components.iter().filter(|&&n| n == 4).count()
            ),
            ExperimentKind::Compete => {
                let (a, b) = last.map_or((0.0, 0.0), |s| (s.a, s.b));
                format!("final populations: genome0 {a}, genome1 {b}")
            }
            ExperimentKind::FixedFeed => {
                let (n, ext) = self.equilibrium();
                format!("equilibrium network size {n:.2}; extent {ext:.3}")
            }
        }
    }
}

/// Runs an experiment and writes its CSV when `output` is set.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport, ExperimentError> {
    spec.validate()?;
    let config = spec.effective_config();
    let seeds: Vec<SeedGenome> = spec
        .genomes
        .iter()
        .map(|g| genomes::load(g, &config))
        .collect::<Result<_, _>>()?;
    let heightmap = Arc::new(config.heightmap().map_err(|e| ExperimentError::Spec(e.0))?);
    let count = spec.count.unwrap_or(config.population.count);
    let energy = config.population.energy;
    let config = Arc::new(config);
    let mut world = World::new(config.clone(), heightmap, 0);
    let mut setup = Rng::stream(config.seed, stream::SETUP);

    let mut lineage_group: BTreeMap<u64, usize> = BTreeMap::new();
    let mut fed = 0;
    match spec.kind {
        ExperimentKind::Replicate | ExperimentKind::Compete => {
            for (g, seed) in seeds.iter().enumerate() {
                for id in world.seed_population(&seed.genome, &seed.phenotype, count, energy, &mut setup)? {
                    lineage_group.insert(id, g);
                }
            }
        }
        ExperimentKind::FixedFeed => {
            let seed = &seeds[0];
            let c = world.heightmap().extent() / 2.0;
            let pos = world.settle([c, c, 0.0], seed.phenotype.radius);
            let cost = world
                .generation_cost_at(&seed.phenotype, pos)
                .map_err(|e| ExperimentError::Spec(format!("fed cell cannot be priced: {e}")))?;
            let floor = spec.overrides.feed_multiplier.unwrap_or(2.0) * cost;
            fed = world.add_cell(seed.genome.clone(), &seed.phenotype, pos, floor)?;
            world.pin_cell(fed, Some(floor));
        }
    }

    let mut samples = vec![sample(&world, spec.kind, &lineage_group, fed)];
    let mut done = 0;
    while done < spec.steps {
        let n = spec.interval.min(spec.steps - done);
        world.run(n)?;
        world.drain_rows();
        done += n;
        samples.push(sample(&world, spec.kind, &lineage_group, fed));
    }
    let mut final_components: Vec<usize> = world.components().iter().map(Vec::len).collect();
    final_components.sort_unstable();
    let report = ExperimentReport {
        kind: spec.kind,
        samples,
        final_components,
    };
    if let Some(path) = &spec.output {
        std::fs::write(path, report.to_csv()).map_err(|e| ExperimentError::Io(path.clone(), e))?;
    }
    Ok(report)
}

fn sample(world: &World, kind: ExperimentKind, groups: &BTreeMap<u64, usize>, fed: u64) -> Sample {
    let step = world.step_count();
    let cells = world.cells().len();
    let (a, b) = match kind {
        ExperimentKind::Replicate => {
            let comps = world.components();
            (comps.len() as f64, comps.iter().filter(|c| c.len() == 4).count() as f64)
        }
        ExperimentKind::Compete => {
            let mut n = [0usize; 2];
            for c in world.cells() {
                if let Some(&g) = groups.get(&c.lineage) {
                    n[g] += 1;
                }
            }
            (n[0] as f64, n[1] as f64)
        }
        ExperimentKind::FixedFeed => match world.cell(fed) {
            Some(center) => {
                let comp = world.components().into_iter().find(|c| c.contains(&fed)).unwrap_or_default();
                let extent = comp
                    .iter()
                    .filter_map(|&id| world.cell(id))
                    .map(|c| distance(c.pos, center.pos))
                    .fold(0.0, f64::max);
                (comp.len() as f64, extent)
            }
            None => (0.0, 0.0),
        },
    };
    Sample { step, cells, a, b }
}
