//! Simulation configuration. Every key has a default; unknown keys are
//! rejected. Files are TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::energetics::EnergyParams;
use crate::genome::PayloadLayout;
use crate::mechanics::{Heightmap, MechParams};
use crate::neurocell::NetShape;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub seed: u64,
    /// Seconds per step.
    pub dt: f64,
    pub energy: EnergyParams,
    pub mechanics: MechParams,
    pub net: NetConfig,
    pub genome: GenomeConfig,
    pub sun: SunConfig,
    pub light: LightConfig,
    pub terrain: TerrainConfig,
    pub adaptive: AdaptiveConfig,
    /// One entry per field.
    pub fields: Vec<FieldRates>,
    /// Steps between migrations (0 disables migration).
    pub epoch: u64,
    /// Step fields on worker threads.
    pub parallel: bool,
    pub population: PopulationConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetConfig {
    pub slots: usize,
    pub hidden: usize,
    /// Hebbian rate `Δs`.
    pub delta_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenomeConfig {
    pub advance_width: usize,
    pub max_bookmarker: usize,
    pub max_book: usize,
    pub mass_range: [f64; 2],
    pub radius_range: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SunConfig {
    /// Whether the sun delivers photons. The sun's geometry is still used to
    /// price new cells when delivery is off.
    pub deliver: bool,
    pub height: f64,
    /// Fixed cross-axis coordinate of the sun's path.
    pub y: f64,
    /// Starting position along the x axis.
    pub x: f64,
    /// Travel speed along x (units per second).
    pub speed: f64,
    /// Emission constant `D`.
    pub emission: f64,
    pub radius: f64,
    pub intensity: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LightConfig {
    /// Emission constant of a glowing cell at luminosity 1.
    pub emission: f64,
    /// Cells farther than this from an emitter never receive its photons.
    pub range: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TerrainKind {
    Flat,
    Undulating,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TerrainConfig {
    pub kind: TerrainKind,
    pub size: usize,
    pub amplitude: f64,
    pub wavelength: f64,
    pub path: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdaptiveConfig {
    pub enabled: bool,
    pub target: usize,
    /// Steps between updates.
    pub interval: u64,
    /// Exponent on `target / N`.
    pub gain: f64,
    /// Exponent on `N_prev / N`, damping the loop.
    pub damping: f64,
    pub a_min: f64,
    pub a_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldRates {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PopulationConfig {
    /// Built-in genome name or path to a `.asm` or genome text file.
    pub genome: String,
    /// Seed cells per field.
    pub count: usize,
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Steps per metrics row.
    pub metrics_interval: u64,
    /// Steps between snapshots (0 = final snapshot only).
    pub snapshot_interval: u64,
    /// Steps between scene frames (0 = none).
    pub scene_interval: u64,
    pub trace: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 1,
            dt: 0.05,
            energy: EnergyParams::default(),
            mechanics: MechParams::default(),
            net: NetConfig::default(),
            genome: GenomeConfig::default(),
            sun: SunConfig::default(),
            light: LightConfig::default(),
            terrain: TerrainConfig::default(),
            adaptive: AdaptiveConfig::default(),
            fields: default_fields(),
            epoch: 1_000_000,
            parallel: true,
            population: PopulationConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

pub fn default_fields() -> Vec<FieldRates> {
    let mut v = Vec::new();
    for alpha in [1e-6, 1e-5] {
        for beta in [1e-3, 1e-2] {
            v.push(FieldRates { alpha, beta });
        }
    }
    v
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            slots: 6,
            hidden: 8,
            delta_s: 0.1,
        }
    }
}

impl Default for GenomeConfig {
    fn default() -> Self {
        GenomeConfig {
            advance_width: 1,
            max_bookmarker: 8,
            max_book: 4096,
            mass_range: [PayloadLayout::DEFAULT_MASS.0, PayloadLayout::DEFAULT_MASS.1],
            radius_range: [PayloadLayout::DEFAULT_RADIUS.0, PayloadLayout::DEFAULT_RADIUS.1],
        }
    }
}

impl Default for SunConfig {
    fn default() -> Self {
        SunConfig {
            deliver: true,
            height: 20.0,
            y: 16.0,
            x: 16.0,
            speed: 0.05,
            emission: 4000.0,
            radius: 1.0,
            intensity: [1.0, 1.0, 1.0],
        }
    }
}

impl Default for LightConfig {
    fn default() -> Self {
        LightConfig {
            emission: 100.0,
            range: 2.0,
        }
    }
}

impl Default for TerrainConfig {
    fn default() -> Self {
        TerrainConfig {
            kind: TerrainKind::Undulating,
            size: Heightmap::DEFAULT_SIZE,
            amplitude: 0.5,
            wavelength: 8.0,
            path: None,
        }
    }
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        AdaptiveConfig {
            enabled: true,
            target: 4000,
            interval: 100,
            gain: 0.02,
            damping: 0.5,
            a_min: 1.0001,
            a_max: 2.5,
        }
    }
}

impl Default for PopulationConfig {
    fn default() -> Self {
        PopulationConfig {
            genome: "fecund".into(),
            count: 20,
            energy: 5.0,
        }
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            metrics_interval: 100,
            snapshot_interval: 0,
            scene_interval: 0,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError(msg()))
    }
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    pub fn shape(&self) -> NetShape {
        NetShape::new(self.net.slots, self.net.hidden)
    }

    pub fn layout(&self) -> PayloadLayout {
        PayloadLayout {
            shape: self.shape(),
            mass_range: (self.genome.mass_range[0], self.genome.mass_range[1]),
            radius_range: (self.genome.radius_range[0], self.genome.radius_range[1]),
            max_bookmarker: self.genome.max_bookmarker,
        }
    }

    pub fn heightmap(&self) -> Result<Heightmap, ConfigError> {
        let t = &self.terrain;
        match t.kind {
            TerrainKind::Flat => Ok(Heightmap::flat(t.size)),
            TerrainKind::Undulating => Ok(Heightmap::undulating(t.size, t.amplitude, t.wavelength)),
            TerrainKind::File => {
                let path = t
                    .path
                    .as_deref()
                    .ok_or_else(|| ConfigError("terrain.path is required when terrain.kind = \"file\"".into()))?;
                let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("terrain.path {path}: {e}")))?;
                Heightmap::parse(&text).map_err(|e| ConfigError(format!("terrain.path {path}: {e}")))
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        check(self.dt > 0.0 && self.dt.is_finite(), || format!("dt must be > 0 (got {})", self.dt))?;
        self.energy.validate().map_err(ConfigError)?;
        self.mechanics.validate().map_err(ConfigError)?;
        check(self.energy.n_max == self.net.slots, || {
            format!(
                "energy.n_max ({}) must equal net.slots ({})",
                self.energy.n_max, self.net.slots
            )
        })?;
        check(self.net.slots >= 1 && self.net.hidden >= 1, || "net.slots and net.hidden must be at least 1".into())?;
        check(self.net.delta_s.is_finite(), || "net.delta_s must be finite".into())?;
        let g = &self.genome;
        check(g.advance_width >= 1, || "genome.advance_width must be at least 1".into())?;
        check(g.max_bookmarker <= 63, || "genome.max_bookmarker must be at most 63".into())?;
        check(g.max_book >= 1, || "genome.max_book must be at least 1".into())?;
        check(g.mass_range[0] > 0.0 && g.mass_range[1] >= g.mass_range[0], || {
            "genome.mass_range must satisfy 0 < min <= max".into()
        })?;
        check(
            g.radius_range[0] > 0.0 && g.radius_range[1] >= g.radius_range[0] && g.radius_range[1] <= 0.16 + 1e-12,
            || "genome.radius_range must satisfy 0 < min <= max <= 0.16".into(),
        )?;
        let s = &self.sun;
        check(
            s.height.is_finite() && s.speed >= 0.0 && s.emission >= 0.0 && s.radius >= 0.0,
            || "sun.height must be finite; sun.speed, sun.emission, sun.radius non-negative".into(),
        )?;
        check(s.intensity.iter().all(|v| *v >= 0.0), || "sun.intensity must be non-negative".into())?;
        check(self.light.emission >= 0.0 && self.light.range >= 0.0, || {
            "light.emission and light.range must be non-negative".into()
        })?;
        let t = &self.terrain;
        check(t.size >= 2, || "terrain.size must be at least 2".into())?;
        check(t.wavelength > 0.0 && t.amplitude.is_finite(), || {
            "terrain.wavelength must be > 0 and terrain.amplitude finite".into()
        })?;
        let a = &self.adaptive;
        check(a.a_min > 1.0 && a.a_max >= a.a_min, || "adaptive.a_min must be > 1 and <= a_max".into())?;
        check(a.interval >= 1 && a.target >= 1, || "adaptive.interval and adaptive.target must be >= 1".into())?;
        check(a.gain >= 0.0 && a.damping >= 0.0, || "adaptive.gain and adaptive.damping must be >= 0".into())?;
        check(!self.fields.is_empty(), || "at least one [[fields]] entry is required".into())?;
        for (i, f) in self.fields.iter().enumerate() {
            check((0.0..=1.0).contains(&f.alpha) && (0.0..=1.0).contains(&f.beta), || {
                format!("fields[{i}]: alpha and beta must lie in [0, 1]")
            })?;
        }
        check(self.population.energy >= 0.0, || "population.energy must be non-negative".into())?;
        check(self.output.metrics_interval >= 1, || "output.metrics_interval must be at least 1".into())?;
        Ok(())
    }
}
