use std::sync::Arc;

use crate::genome::{ExpansionPayload, Genome};
use crate::neurocell::NeuralNet;

/// One occupied connection slot: the bonded partner and this cell's coupling
/// strength `S′` toward it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slot {
    pub partner: u64,
    pub s_prime: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub id: u64,
    /// Id of the seed ancestor; copied to every descendant.
    pub lineage: u64,
    pub pos: [f64; 3],
    pub vel: [f64; 3],
    pub mass: f64,
    pub radius: f64,
    pub absorption: [f64; 3],
    pub luminosity: f64,
    pub energy: f64,
    pub genome: Genome,
    pub net: Arc<NeuralNet>,
    pub slots: Vec<Option<Slot>>,
    /// Network outputs of the previous step (zeros for a newborn).
    pub outputs: Vec<f64>,
    /// Light received this step, per color.
    pub light: [f64; 3],
    pub wait_connect: bool,
    pub wait_disconnect: bool,
    pub pinned: bool,
    /// When set, energy is reset to this value after decay every step.
    pub energy_floor: Option<f64>,
}

impl Cell {
    pub fn from_payload(
        id: u64,
        lineage: u64,
        payload: &ExpansionPayload,
        net: Arc<NeuralNet>,
        genome: Genome,
        pos: [f64; 3],
        energy: f64,
    ) -> Self {
        let shape = net.shape();
        Cell {
            id,
            lineage,
            pos,
            vel: [0.0; 3],
            mass: payload.mass,
            radius: payload.radius,
            absorption: payload.absorption,
            luminosity: payload.luminosity,
            energy,
            genome,
            slots: vec![None; shape.n_slots],
            outputs: vec![0.0; shape.n_out()],
            net,
            light: [0.0; 3],
            wait_connect: false,
            wait_disconnect: false,
            pinned: false,
            energy_floor: None,
        }
    }

    pub fn connections(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }

    pub fn free_slot(&self) -> Option<usize> {
        self.slots.iter().position(Option::is_none)
    }

    pub fn slot_of(&self, partner: u64) -> Option<usize> {
        self.slots.iter().position(|s| matches!(s, Some(s) if s.partner == partner))
    }

    /// Display color: the light the cell does not absorb.
    pub fn color(&self) -> [f64; 3] {
        self.absorption.map(|a| 1.0 - a)
    }
}
