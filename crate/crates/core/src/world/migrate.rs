//! Pooling and redistribution of organisms (bond-connected components)
//! across fields at epoch boundaries.

use std::collections::BTreeMap;

use super::{bond_key, Bond, Cell, World};
use crate::engine::Rng;

/// A bond-connected group of cells lifted out of a field. Ids are those of
/// the source field until the organism is inserted elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct Organism {
    pub cells: Vec<Cell>,
    pub bonds: Vec<((u64, u64), Bond)>,
}

impl World {
    /// Removes every cell and bond, returning the organisms ordered by their
    /// smallest id. Pending light emissions are dropped.
    pub fn take_organisms(&mut self) -> Vec<Organism> {
        let comps = self.components();
        let mut by_id: BTreeMap<u64, Cell> = self.cells.drain(..).map(|c| (c.id, c)).collect();
        let mut bonds = std::mem::take(&mut self.bonds);
        self.emitters.clear();
        comps
            .into_iter()
            .map(|ids| {
                let cells: Vec<Cell> = ids.iter().map(|id| by_id.remove(id).expect("component member")).collect();
                let mut own = Vec::new();
                for c in &cells {
                    for s in c.slots.iter().flatten() {
                        if c.id < s.partner {
                            let key = bond_key(c.id, s.partner);
                            if let Some(b) = bonds.remove(&key) {
                                own.push((key, b));
                            }
                        }
                    }
                }
                own.sort_by_key(|e| e.0);
                Organism { cells, bonds: own }
            })
            .collect()
    }

    /// Places an organism at a random spot, resting on the terrain, under
    /// fresh ids. Shape, bonds and all per-cell state are kept; velocities are
    /// zeroed.
    pub fn insert_organism(&mut self, org: Organism, rng: &mut Rng) -> Vec<u64> {
        if org.cells.is_empty() {
            return Vec::new();
        }
        let mut remap = BTreeMap::new();
        for c in &org.cells {
            remap.insert(c.id, self.next_id);
            self.next_id += 1;
        }
        let n = org.cells.len() as f64;
        let cx = org.cells.iter().map(|c| c.pos[0]).sum::<f64>() / n;
        let cy = org.cells.iter().map(|c| c.pos[1]).sum::<f64>() / n;
        let reach = org
            .cells
            .iter()
            .map(|c| ((c.pos[0] - cx).powi(2) + (c.pos[1] - cy).powi(2)).sqrt() + c.radius)
            .fold(0.0f64, f64::max);
        let extent = self.heightmap.extent();
        let margin = reach.min(extent / 2.0);
        let tx = margin + rng.uniform() * (extent - 2.0 * margin);
        let ty = margin + rng.uniform() * (extent - 2.0 * margin);
        let (dx, dy) = (tx - cx, ty - cy);
        let lift = org
            .cells
            .iter()
            .map(|c| {
                let (x, y) = (c.pos[0] + dx, c.pos[1] + dy);
                self.heightmap.height_at(x, y) + c.radius - c.pos[2]
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let mut ids = Vec::with_capacity(org.cells.len());
        for mut c in org.cells {
            c.id = remap[&c.id];
            c.pos = [c.pos[0] + dx, c.pos[1] + dy, c.pos[2] + lift];
            c.vel = [0.0; 3];
            for s in c.slots.iter_mut().flatten() {
                s.partner = remap[&s.partner];
            }
            ids.push(c.id);
            self.cells.push(c);
        }
        for ((a, b), bond) in org.bonds {
            self.bonds.insert(bond_key(remap[&a], remap[&b]), bond);
        }
        ids
    }
}

/// Pools the organisms of all fields, shuffles them with `rng` and deals them
/// round-robin back to the fields.
pub fn migrate_mix(fields: &mut [World], rng: &mut Rng) {
    if fields.is_empty() {
        return;
    }
    let mut pool = Vec::new();
    for f in fields.iter_mut() {
        pool.extend(f.take_organisms());
    }
    rng.shuffle(&mut pool);
    let k = fields.len();
    for (i, org) in pool.into_iter().enumerate() {
        fields[i % k].insert_organism(org, rng);
    }
}
