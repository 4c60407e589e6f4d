//! Energy bookkeeping: metabolic decay, photon absorption, predation,
//! transport between bonded cells, and the generation cost of new cells.

use serde::{Deserialize, Serialize};

use crate::error::EnergyError;
use crate::genome::ExpansionPayload;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyParams {
    /// Decay coefficient `C` (per unit time).
    pub c: f64,
    /// Decay base `A` (> 1).
    pub a: f64,
    pub n_max: usize,
    /// Conversion efficiency of red, green and blue light.
    pub c_rgb: [f64; 3],
    /// Share of the predicted sun-fed equilibrium energy handed to a new cell.
    pub gen_factor: f64,
    pub e_death: f64,
    pub k_transfer: f64,
    pub k_emit: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        EnergyParams {
            c: 1.0,
            a: 2.0,
            n_max: 6,
            c_rgb: [0.8, 0.2, 0.8],
            gen_factor: 0.5,
            e_death: 1e-3,
            k_transfer: 1.0,
            k_emit: 0.01,
        }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.c > 0.0) {
            return Err(format!("energy.c must be > 0 (got {})", self.c));
        }
        if !(self.a > 1.0) {
            return Err(format!("energy.a must be > 1 (got {})", self.a));
        }
        if !(self.gen_factor > 0.0 && self.gen_factor <= 1.0) {
            return Err(format!("energy.gen_factor must lie in (0, 1] (got {})", self.gen_factor));
        }
        if self.c_rgb.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err("energy.c_rgb components must lie in [0, 1]".into());
        }
        if !(self.e_death >= 0.0) || !(self.k_transfer >= 0.0) || !(self.k_emit >= 0.0) {
            return Err("energy.e_death, k_transfer and k_emit must be non-negative".into());
        }
        Ok(())
    }
}

/// Incident light of one photon event.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LightSample {
    pub intensity: [f64; 3],
}

/// Geometry between a light source and a receiving cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonChannel {
    /// Source emission constant `D`.
    pub emission: f64,
    /// Source radius `R`.
    pub source_radius: f64,
    /// Source–cell distance `h`.
    pub distance: f64,
    /// Receiving cross-section `ΔS`.
    pub cross_section: f64,
}

/// `U = C · A^n / A^N_max`.
pub fn decay_rate(params: &EnergyParams, n_connected: usize) -> Result<f64, EnergyError> {
    if n_connected > params.n_max {
        return Err(EnergyError::Capacity {
            n: n_connected,
            max: params.n_max,
        });
    }
    Ok(params.c * params.a.powi(n_connected as i32 - params.n_max as i32))
}

/// One explicit decay step, `E (1 - U dt)`.
pub fn step_decay(energy: f64, u: f64, dt: f64) -> Result<f64, EnergyError> {
    let k = u * dt;
    if k >= 1.0 {
        return Err(EnergyError::TimestepTooLarge(k));
    }
    Ok(energy * (1.0 - k))
}

/// `ΔE_L = Σ c_k I_k a_k`.
pub fn absorb_light(sample: &LightSample, absorption: [f64; 3], c_rgb: [f64; 3]) -> f64 {
    (0..3).map(|k| c_rgb[k] * sample.intensity[k] * absorption[k]).sum()
}

/// Fraction of the prey's energy taken in one bite. Zero unless the eater has
/// strictly more connections than the prey.
pub fn eat_fraction(d: f64, n_eater: usize, n_prey: usize, n_max: usize) -> f64 {
    if n_eater <= n_prey || n_max == 0 {
        return 0.0;
    }
    d.max(0.0) * (n_eater - n_prey) as f64 / n_max as f64
}

/// Energy moved from prey to eater by one bite.
pub fn eat_gain(d: f64, n_eater: usize, n_prey: usize, n_max: usize, prey_energy: f64) -> f64 {
    eat_fraction(d, n_eater, n_prey, n_max).min(1.0) * prey_energy.max(0.0)
}

/// Light received per unit area and time, `P = D R² / (4π h²)`.
pub fn photon_flux(channel: &PhotonChannel) -> Result<f64, EnergyError> {
    if !(channel.distance > 0.0) {
        return Err(EnergyError::Singularity(channel.distance));
    }
    let h = channel.distance;
    Ok(channel.emission * channel.source_radius * channel.source_radius
        / (4.0 * std::f64::consts::PI * h * h))
}

/// Probability of one photon hit within `dt`, clamped to `[0, 1]`.
pub fn hit_probability(flux: f64, cross_section: f64, dt: f64) -> f64 {
    (flux * cross_section * dt).clamp(0.0, 1.0)
}

/// Equilibrium energy of a cell fed by one source:
/// `E∞ = ΔE_L / (1 - exp(-U / (P ΔS)))`.
pub fn e_infinity(de_light: f64, u: f64, flux: f64, cross_section: f64) -> Result<f64, EnergyError> {
    if !(u > 0.0) {
        return Err(EnergyError::NonPositiveDecay(u));
    }
    let rate = flux * cross_section;
    if !(rate > 0.0) {
        return Err(EnergyError::NoLight);
    }
    Ok(de_light / -(-u / rate).exp_m1())
}

pub fn cross_section(radius: f64) -> f64 {
    std::f64::consts::PI * radius * radius
}

/// Energy a parent hands to a child: `gen_factor · E∞` of the child as if fed
/// by the sun alone. The child's decay rate is evaluated at `n_connected`
/// (one, its bond to the parent, at birth).
pub fn generation_cost(
    child: &ExpansionPayload,
    sun: &PhotonChannel,
    sun_light: &LightSample,
    params: &EnergyParams,
    n_connected: usize,
) -> Result<f64, EnergyError> {
    let de = absorb_light(sun_light, child.absorption, params.c_rgb);
    let u = decay_rate(params, n_connected.min(params.n_max))?;
    let flux = photon_flux(sun)?;
    let e_inf = e_infinity(de, u, flux, cross_section(child.radius))?;
    Ok(params.gen_factor * e_inf)
}

/// Energy sent along one bond in one step: `E · max(e_out, 0) · k · dt`,
/// never more than the sender holds.
pub fn transport_energy(sender_energy: f64, e_out: f64, k_transfer: f64, dt: f64) -> f64 {
    if e_out <= 0.0 || sender_energy <= 0.0 {
        return 0.0;
    }
    (sender_energy * e_out * k_transfer * dt).min(sender_energy)
}
