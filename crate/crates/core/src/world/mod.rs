//! One field: cells, bonds, the sun, and the fixed per-step phase order.
//!
//! Each step runs, in this order:
//!
//! 1. sun motion
//! 2. photon delivery (sun, then emitters registered last step)
//! 3. contact detection, input gathering and forward passes of all nets
//! 4. network effects: EAT, FUSION, LIGHT, transport, muscles, Hebbian updates
//! 5. genome reads for cells whose READ output is positive
//! 6. resolution of connection and disconnection waits
//! 7. kinematics and bond breaking
//! 8. energy decay and deaths
//! 9. per-step mutations
//! 10. decay-base control
//! 11. metrics
//!
//! Cells are kept sorted by id and every loop runs in ascending id order.

mod cell;
pub mod migrate;
pub mod mutation;
pub mod sun;

use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

pub use cell::{Cell, Slot};
pub use sun::{sun_step, Sun};

use crate::config::{FieldRates, SimConfig};
use crate::energetics::{
    absorb_light, cross_section, decay_rate, eat_gain, generation_cost, hit_probability, photon_flux,
    step_decay, transport_energy, LightSample, PhotonChannel,
};
use crate::engine::trace::{EventKind, TraceEvent};
use crate::engine::Rng;
use crate::error::{EnergyError, SimError};
use crate::genome::{read_step, ActionKind, ExpansionPayload, Genome, PayloadLayout};
use crate::mechanics::{
    adjust_natural_length, birth_length, check_break, distance, integrate_step, try_connect, Body, Heightmap,
    MechScratch, Spring, SpatialGrid,
};
use crate::metrics::{MetricsRow, WindowCounts};
use crate::neurocell::{gather_inputs_into, hebb_update, port, NeuralNet, SlotSignal};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bond {
    pub natural_length: f64,
}

/// A glowing cell as seen by next step's photon delivery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Emitter {
    pub id: u64,
    pub pos: [f64; 3],
    pub radius: f64,
    /// Emission constant `D` of this source.
    pub emission: f64,
    pub color: [f64; 3],
}

#[derive(Debug, Default, Clone)]
struct Scratch {
    /// Per `(cell, slot)`: partner index and the partner's slot facing back.
    links: Vec<Option<(usize, usize)>>,
    touch_start: Vec<usize>,
    touch: Vec<usize>,
    pairs: Vec<(usize, usize)>,
    signals: Vec<Option<SlotSignal>>,
    inputs: Vec<f64>,
    hidden: Vec<f64>,
    outputs: Vec<f64>,
    positions: Vec<[f64; 3]>,
    grid: SpatialGrid,
    bodies: Vec<Body>,
    springs: Vec<Spring>,
    mech: MechScratch,
}

pub fn bond_key(a: u64, b: u64) -> (u64, u64) {
    (a.min(b), a.max(b))
}

#[derive(Debug, Clone)]
pub struct World {
    pub(crate) config: Arc<SimConfig>,
    pub(crate) layout: PayloadLayout,
    pub(crate) heightmap: Arc<Heightmap>,
    pub(crate) index: usize,
    pub(crate) rates: FieldRates,
    pub(crate) step: u64,
    pub(crate) a: f64,
    pub(crate) prev_count: usize,
    pub(crate) cells: Vec<Cell>,
    pub(crate) bonds: BTreeMap<(u64, u64), Bond>,
    pub(crate) sun: Sun,
    pub(crate) rng: Rng,
    pub(crate) next_id: u64,
    pub(crate) emitters: Vec<Emitter>,
    pub(crate) window: WindowCounts,
    pub(crate) rows: Vec<MetricsRow>,
    pub(crate) trace: Option<Vec<TraceEvent>>,
    scratch: Scratch,
}

impl World {
    /// An empty field with the configuration's rates for field `index`.
    pub fn new(config: Arc<SimConfig>, heightmap: Arc<Heightmap>, index: usize) -> Self {
        let rates = config.fields.get(index).copied().unwrap_or(FieldRates { alpha: 0.0, beta: 0.0 });
        World {
            layout: config.layout(),
            index,
            rates,
            step: 0,
            a: config.energy.a,
            prev_count: 0,
            cells: Vec::new(),
            bonds: BTreeMap::new(),
            sun: Sun::new(config.sun.x, heightmap.extent()),
            rng: Rng::stream(config.seed, crate::engine::stream::field(index)),
            next_id: 1,
            emitters: Vec::new(),
            window: WindowCounts::default(),
            rows: Vec::new(),
            trace: config.output.trace.then(Vec::new),
            scratch: Scratch::default(),
            heightmap,
            config,
        }
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn layout(&self) -> &PayloadLayout {
        &self.layout
    }

    pub fn heightmap(&self) -> &Heightmap {
        &self.heightmap
    }

    pub fn field_index(&self) -> usize {
        self.index
    }

    pub fn rates(&self) -> FieldRates {
        self.rates
    }

    pub fn set_rates(&mut self, rates: FieldRates) {
        self.rates = rates;
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Current decay base `A`.
    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn set_a(&mut self, a: f64) {
        self.a = a;
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, id: u64) -> Option<&Cell> {
        self.index_of(id).map(|i| &self.cells[i])
    }

    pub fn cell_mut(&mut self, id: u64) -> Option<&mut Cell> {
        self.index_of(id).map(move |i| &mut self.cells[i])
    }

    pub fn bonds(&self) -> &BTreeMap<(u64, u64), Bond> {
        &self.bonds
    }

    pub fn sun(&self) -> Sun {
        self.sun
    }

    pub fn sun_position(&self) -> [f64; 3] {
        [self.sun.x, self.config.sun.y, self.config.sun.height]
    }

    pub fn emitters(&self) -> &[Emitter] {
        &self.emitters
    }

    pub fn rng(&self) -> Rng {
        self.rng
    }

    pub fn total_energy(&self) -> f64 {
        self.cells.iter().map(|c| c.energy).sum()
    }

    /// Metrics rows completed since the last call.
    pub fn drain_rows(&mut self) -> Vec<MetricsRow> {
        std::mem::take(&mut self.rows)
    }

    pub fn enable_trace(&mut self) {
        if self.trace.is_none() {
            self.trace = Some(Vec::new());
        }
    }

    /// Trace events recorded since the last call (empty when tracing is off).
    pub fn drain_trace(&mut self) -> Vec<TraceEvent> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    fn index_of(&self, id: u64) -> Option<usize> {
        self.cells.binary_search_by_key(&id, |c| c.id).ok()
    }

    fn log(&mut self, kind: EventKind) {
        if let Some(t) = self.trace.as_mut() {
            t.push(TraceEvent { step: self.step, kind });
        }
    }

    fn extent(&self) -> f64 {
        self.heightmap.extent()
    }

    /// Clamps `pos` into the field and lifts it onto the terrain.
    pub fn settle(&self, mut pos: [f64; 3], radius: f64) -> [f64; 3] {
        let extent = self.extent();
        for p in pos.iter_mut().take(2) {
            *p = p.clamp(radius.min(extent / 2.0), (extent - radius).max(extent / 2.0));
        }
        pos[2] = pos[2].max(self.heightmap.height_at(pos[0], pos[1]) + radius);
        pos
    }

    /// A uniformly random resting position for a cell of `radius`.
    pub fn random_position(&self, radius: f64, rng: &mut Rng) -> [f64; 3] {
        let extent = self.extent();
        let x = radius + rng.uniform() * (extent - 2.0 * radius);
        let y = radius + rng.uniform() * (extent - 2.0 * radius);
        self.settle([x, y, 0.0], radius)
    }

    /// Adds a seed cell with phenotype `payload`; it starts its own lineage.
    pub fn add_cell(
        &mut self,
        genome: Genome,
        payload: &ExpansionPayload,
        pos: [f64; 3],
        energy: f64,
    ) -> Result<u64, SimError> {
        let net = NeuralNet::new(self.layout.shape, payload.weights.clone())?;
        let id = self.next_id;
        self.next_id += 1;
        let pos = self.settle(pos, payload.radius);
        self.cells.push(Cell::from_payload(id, id, payload, Arc::new(net), genome, pos, energy));
        Ok(id)
    }

    /// Adds `count` seed cells at random positions drawn from `rng`.
    pub fn seed_population(
        &mut self,
        genome: &Genome,
        payload: &ExpansionPayload,
        count: usize,
        energy: f64,
        rng: &mut Rng,
    ) -> Result<Vec<u64>, SimError> {
        (0..count)
            .map(|_| {
                let pos = self.random_position(payload.radius, rng);
                self.add_cell(genome.clone(), payload, pos, energy)
            })
            .collect()
    }

    /// Fixes a cell in place; with `energy_floor` its energy is also reset
    /// after decay every step.
    pub fn pin_cell(&mut self, id: u64, energy_floor: Option<f64>) -> bool {
        match self.cell_mut(id) {
            Some(c) => {
                c.pinned = true;
                c.vel = [0.0; 3];
                c.energy_floor = energy_floor;
                if let Some(e) = energy_floor {
                    c.energy = e;
                }
                true
            }
            None => false,
        }
    }

    /// Energy a parent at `pos` pays for a child with phenotype `payload`,
    /// priced against the sun at the current decay base.
    pub fn generation_cost_at(&self, payload: &ExpansionPayload, pos: [f64; 3]) -> Result<f64, EnergyError> {
        let sun = &self.config.sun;
        let channel = PhotonChannel {
            emission: sun.emission,
            source_radius: sun.radius,
            distance: distance(pos, self.sun_position()),
            cross_section: cross_section(payload.radius),
        };
        let mut params = self.config.energy;
        params.a = self.a;
        generation_cost(payload, &channel, &LightSample { intensity: sun.intensity }, &params, 1)
    }

    /// Bonds two live cells through their lowest free slots.
    pub fn connect(&mut self, a: u64, b: u64, natural_length: f64) -> bool {
        let (Some(ia), Some(ib)) = (self.index_of(a), self.index_of(b)) else {
            return false;
        };
        if a == b || self.bonds.contains_key(&bond_key(a, b)) {
            return false;
        }
        let (Some(sa), Some(sb)) = (self.cells[ia].free_slot(), self.cells[ib].free_slot()) else {
            return false;
        };
        self.cells[ia].slots[sa] = Some(Slot { partner: b, s_prime: 1.0 });
        self.cells[ib].slots[sb] = Some(Slot { partner: a, s_prime: 1.0 });
        self.bonds.insert(bond_key(a, b), Bond { natural_length });
        self.log(EventKind::BondFormed { a: a.min(b), b: a.max(b) });
        true
    }

    fn remove_bond(&mut self, key: (u64, u64)) {
        if self.bonds.remove(&key).is_none() {
            return;
        }
        for (me, other) in [(key.0, key.1), (key.1, key.0)] {
            if let Some(i) = self.index_of(me) {
                if let Some(k) = self.cells[i].slot_of(other) {
                    self.cells[i].slots[k] = None;
                }
            }
        }
    }

    /// Bond-connected components as sorted id lists, ordered by smallest id.
    pub fn components(&self) -> Vec<Vec<u64>> {
        let n = self.cells.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            queue.push_back(start);
            let mut comp = Vec::new();
            while let Some(i) = queue.pop_front() {
                comp.push(self.cells[i].id);
                for s in self.cells[i].slots.iter().flatten() {
                    if let Some(j) = self.index_of(s.partner) {
                        if !seen[j] {
                            seen[j] = true;
                            queue.push_back(j);
                        }
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Checks the structural invariants: ids strictly ascending, slots and
    /// bonds mutually consistent, every bond between live cells, `A > 1`.
    pub fn check_invariants(&self) -> Result<(), String> {
        if !self.cells.windows(2).all(|w| w[0].id < w[1].id) {
            return Err("cell ids not strictly ascending".into());
        }
        if self.cells.last().is_some_and(|c| c.id >= self.next_id) {
            return Err("cell id not below next_id".into());
        }
        let mut slot_count = 0;
        for c in &self.cells {
            for s in c.slots.iter().flatten() {
                slot_count += 1;
                if !self.bonds.contains_key(&bond_key(c.id, s.partner)) {
                    return Err(format!("cell {} slot to {} has no bond", c.id, s.partner));
                }
            }
        }
        for &(a, b) in self.bonds.keys() {
            let (Some(ca), Some(cb)) = (self.cell(a), self.cell(b)) else {
                return Err(format!("bond {a}-{b} references a dead cell"));
            };
            if ca.slot_of(b).is_none() || cb.slot_of(a).is_none() {
                return Err(format!("bond {a}-{b} missing from slots"));
            }
        }
        if slot_count != 2 * self.bonds.len() {
            return Err("slot and bond counts disagree".into());
        }
        if !(self.a > 1.0) {
            return Err(format!("decay base {} is not above 1", self.a));
        }
        Ok(())
    }

    pub fn run(&mut self, steps: u64) -> Result<(), SimError> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(())
    }

    pub fn step(&mut self) -> Result<(), SimError> {
        self.step += 1;
        let cfg = self.config.clone();
        self.sun = sun_step(self.sun, cfg.sun.speed, cfg.dt, self.extent());
        self.deliver_photons(&cfg);
        self.think()?;
        self.apply_nn_effects(&cfg);
        self.execute_reads(&cfg)?;
        self.resolve_waits(&cfg);
        self.integrate(&cfg)?;
        self.decay_and_deaths(&cfg)?;
        self.mutate_step(&cfg);
        self.adjust_a(&cfg);
        self.record_metrics(&cfg);
        Ok(())
    }

    fn deliver_photons(&mut self, cfg: &SimConfig) {
        let dt = cfg.dt;
        let sun_pos = self.sun_position();
        let emitters = std::mem::take(&mut self.emitters);
        let range = cfg.light.range;
        let use_emitters = !emitters.is_empty() && range > 0.0;
        let mut grid = std::mem::take(&mut self.scratch.grid);
        let mut epos = std::mem::take(&mut self.scratch.positions);
        epos.clear();
        epos.extend(emitters.iter().map(|e| e.pos));
        if use_emitters {
            grid.build(epos.iter().copied(), self.extent(), range);
        }
        let sun = &cfg.sun;
        let sun_light = LightSample { intensity: sun.intensity };
        let c_rgb = cfg.energy.c_rgb;
        let rng = &mut self.rng;
        for cell in &mut self.cells {
            cell.light = [0.0; 3];
            let ds = cross_section(cell.radius);
            if sun.deliver {
                let channel = PhotonChannel {
                    emission: sun.emission,
                    source_radius: sun.radius,
                    distance: distance(cell.pos, sun_pos),
                    cross_section: ds,
                };
                let p = photon_flux(&channel).map_or(0.0, |f| hit_probability(f, ds, dt));
                if rng.bernoulli(p) {
                    for k in 0..3 {
                        cell.light[k] += sun_light.intensity[k];
                    }
                    cell.energy += absorb_light(&sun_light, cell.absorption, c_rgb);
                }
            }
            if use_emitters {
                grid.for_each_near(&epos, cell.pos, range, |j, d| {
                    let e = &emitters[j];
                    if e.id == cell.id {
                        return;
                    }
                    let channel = PhotonChannel {
                        emission: e.emission,
                        source_radius: e.radius,
                        distance: d,
                        cross_section: ds,
                    };
                    let p = photon_flux(&channel).map_or(0.0, |f| hit_probability(f, ds, dt));
                    if rng.bernoulli(p) {
                        let sample = LightSample { intensity: e.color };
                        for k in 0..3 {
                            cell.light[k] += e.color[k];
                        }
                        cell.energy += absorb_light(&sample, cell.absorption, c_rgb);
                    }
                });
            }
        }
        self.scratch.grid = grid;
        self.scratch.positions = epos;
    }

    /// Slot links, contact lists and forward passes for all cells.
    fn think(&mut self) -> Result<(), SimError> {
        let n = self.cells.len();
        let shape = self.layout.shape;
        let ns = shape.n_slots;
        let n_out = shape.n_out();
        let sc = &mut self.scratch;

        sc.links.clear();
        sc.links.resize(n * ns, None);
        for i in 0..n {
            for k in 0..ns {
                let Some(slot) = self.cells[i].slots.get(k).copied().flatten() else {
                    continue;
                };
                let j = self
                    .cells
                    .binary_search_by_key(&slot.partner, |c| c.id)
                    .expect("bond partner is alive");
                let back = self.cells[j].slot_of(self.cells[i].id).expect("bond is symmetric");
                sc.links[i * ns + k] = Some((j, back));
            }
        }

        sc.positions.clear();
        sc.positions.extend(self.cells.iter().map(|c| c.pos));
        let r_max = self.cells.iter().fold(0.0f64, |m, c| m.max(c.radius));
        sc.grid.build(sc.positions.iter().copied(), self.heightmap.extent(), 2.0 * r_max);
        sc.pairs.clear();
        let cells = &self.cells;
        let pairs = &mut sc.pairs;
        sc.grid.for_each_pair(
            &sc.positions,
            |i, j| cells[i].radius + cells[j].radius,
            |i, j, _| pairs.push((i, j)),
        );
        sc.touch_start.clear();
        sc.touch_start.resize(n + 1, 0);
        for &(i, j) in sc.pairs.iter() {
            sc.touch_start[i + 1] += 1;
            sc.touch_start[j + 1] += 1;
        }
        for i in 0..n {
            sc.touch_start[i + 1] += sc.touch_start[i];
        }
        sc.touch.clear();
        sc.touch.resize(sc.touch_start[n], 0);
        let mut fill = sc.touch_start.clone();
        for &(i, j) in sc.pairs.iter() {
            sc.touch[fill[i]] = j;
            fill[i] += 1;
            sc.touch[fill[j]] = i;
            fill[j] += 1;
        }
        for i in 0..n {
            sc.touch[sc.touch_start[i]..sc.touch_start[i + 1]].sort_unstable();
        }

        sc.inputs.resize(shape.n_in(), 0.0);
        sc.hidden.resize(shape.n_hidden, 0.0);
        sc.outputs.clear();
        sc.outputs.resize(n * n_out, 0.0);
        sc.signals.clear();
        sc.signals.resize(ns, None);
        for i in 0..n {
            let cell = &self.cells[i];
            for k in 0..ns {
                sc.signals[k] = sc.links[i * ns + k].map(|(j, back)| {
                    let o = &self.cells[j].outputs;
                    SlotSignal {
                        s_out: o[port::slot_s(back)],
                        l_out: o[port::slot_l(back)],
                        e_out: o[port::slot_e(back)],
                        s_prime: cell.slots[k].map_or(0.0, |s| s.s_prime),
                    }
                });
            }
            let touched = sc.touch_start[i + 1] > sc.touch_start[i];
            gather_inputs_into(shape, &sc.signals, cell.light, touched, &mut sc.inputs)?;
            cell.net
                .forward_into(&sc.inputs, &mut sc.hidden, &mut sc.outputs[i * n_out..(i + 1) * n_out])?;
        }
        for (i, cell) in self.cells.iter_mut().enumerate() {
            cell.outputs.copy_from_slice(&sc.outputs[i * n_out..(i + 1) * n_out]);
        }
        Ok(())
    }

    fn apply_nn_effects(&mut self, cfg: &SimConfig) {
        let n = self.cells.len();
        let ns = self.layout.shape.n_slots;
        let e = &cfg.energy;
        let dt = cfg.dt;
        let links = std::mem::take(&mut self.scratch.links);
        let touch = std::mem::take(&mut self.scratch.touch);
        let touch_start = std::mem::take(&mut self.scratch.touch_start);
        for i in 0..n {
            let eat = self.cells[i].outputs[port::eat(ns)];
            let fusion = self.cells[i].outputs[port::fusion(ns)];
            let light = self.cells[i].outputs[port::light(ns)];
            let touched = &touch[touch_start[i]..touch_start[i + 1]];

            if eat > 0.0 {
                for &j in touched {
                    let gain = eat_gain(
                        eat,
                        self.cells[i].connections(),
                        self.cells[j].connections(),
                        e.n_max,
                        self.cells[j].energy,
                    );
                    if gain > 0.0 {
                        self.cells[j].energy -= gain;
                        self.cells[i].energy += gain;
                        let (eater, prey) = (self.cells[i].id, self.cells[j].id);
                        self.log(EventKind::Eat { eater, prey, amount: gain });
                    }
                }
            }

            if fusion > 0.0 {
                if let Some(&j) = touched.first() {
                    let other = self.cells[j].genome.book.clone();
                    let book = &mut self.cells[i].genome.book;
                    book.extend_from_slice(&other);
                    book.truncate(cfg.genome.max_book);
                }
            }

            if light > 0.0 {
                let c = &mut self.cells[i];
                c.energy -= e.k_emit * c.radius * c.radius * dt;
                let emitter = Emitter {
                    id: c.id,
                    pos: c.pos,
                    radius: c.radius,
                    emission: cfg.light.emission * c.luminosity,
                    color: c.color(),
                };
                self.emitters.push(emitter);
            }

            for k in 0..ns {
                let Some((j, back)) = links[i * ns + k] else {
                    continue;
                };
                let out = &self.cells[i].outputs;
                let (s_out, l_out, e_out) = (out[port::slot_s(k)], out[port::slot_l(k)], out[port::slot_e(k)]);

                let amount = transport_energy(self.cells[i].energy, e_out, e.k_transfer, dt);
                if amount > 0.0 {
                    self.cells[i].energy -= amount;
                    self.cells[j].energy += amount;
                    self.window.transport_events += 1;
                }

                let r = self.cells[i].radius.min(self.cells[j].radius);
                let key = bond_key(self.cells[i].id, self.cells[j].id);
                if let Some(bond) = self.bonds.get_mut(&key) {
                    bond.natural_length = adjust_natural_length(bond.natural_length, l_out, r, dt, &cfg.mechanics);
                }

                if let Some(slot) = self.cells[j].slots[back].as_mut() {
                    slot.s_prime = hebb_update(slot.s_prime, s_out, cfg.net.delta_s);
                }
            }
        }
        self.scratch.links = links;
        self.scratch.touch = touch;
        self.scratch.touch_start = touch_start;
    }

    fn execute_reads(&mut self, cfg: &SimConfig) -> Result<(), SimError> {
        let n0 = self.cells.len();
        let read_port = port::read(self.layout.shape.n_slots);
        for i in 0..n0 {
            if !(self.cells[i].outputs[read_port] > 0.0) {
                continue;
            }
            let Some(outcome) = read_step(&self.cells[i].genome, &self.layout)? else {
                continue;
            };
            let cell = self.cells[i].id;
            self.log(EventKind::Read {
                cell,
                action: outcome.action,
                position: outcome.position,
            });
            match outcome.action {
                ActionKind::Expansion => {
                    if let Some(p) = outcome.payload.as_ref() {
                        self.expand(i, p, cfg)?;
                    }
                }
                ActionKind::Connection => self.cells[i].wait_connect = true,
                ActionKind::Disconnection => self.cells[i].wait_disconnect = true,
                ActionKind::Transition => {}
            }
            self.cells[i].genome.apply(&outcome);
        }
        Ok(())
    }

    /// Division of cell `i`. Aborts silently when the parent has no free slot,
    /// the child cannot be priced, or the parent cannot afford it.
    fn expand(&mut self, i: usize, payload: &ExpansionPayload, cfg: &SimConfig) -> Result<(), SimError> {
        let Some(parent_slot) = self.cells[i].free_slot() else {
            return Ok(());
        };
        let cost = match self.generation_cost_at(payload, self.cells[i].pos) {
            Ok(c) if c.is_finite() && c >= 0.0 => c,
            _ => return Ok(()),
        };
        if self.cells[i].energy - cost < cfg.energy.e_death {
            return Ok(());
        }
        let dir = self.rng.unit_vector();
        let parent = &self.cells[i];
        let reach = parent.radius + payload.radius;
        let raw = [
            parent.pos[0] + dir[0] * reach,
            parent.pos[1] + dir[1] * reach,
            parent.pos[2] + dir[2] * reach,
        ];
        let pos = self.settle(raw, payload.radius);
        let dist = distance(parent.pos, pos);

        let book = &parent.genome.book;
        let mut child_book = Vec::new();
        if !book.is_empty() {
            let len = book.len();
            let (s, e) = (payload.copy_start % len, payload.copy_end % len);
            if s <= e {
                child_book.extend_from_slice(&book[s..=e]);
            } else {
                child_book.extend_from_slice(&book[s..]);
                child_book.extend_from_slice(&book[..=e]);
            }
        }
        if mutation::mutate_division(&mut child_book, self.rates.beta, &mut self.rng, cfg.genome.max_book) {
            self.window.mutations += 1;
        }
        let genome = Genome {
            book: child_book,
            bookmarker: payload.child_bookmarker.clone(),
            advance: vec![b'A'; cfg.genome.advance_width],
        };
        let net = NeuralNet::new(self.layout.shape, payload.weights.clone())?;
        let parent = &self.cells[i];
        let (parent_id, lineage, rp) = (parent.id, parent.lineage, parent.radius);
        let id = self.next_id;
        self.next_id += 1;
        let mut child = Cell::from_payload(id, lineage, payload, Arc::new(net), genome, pos, cost);
        child.slots[0] = Some(Slot { partner: parent_id, s_prime: 1.0 });
        let parent = &mut self.cells[i];
        parent.slots[parent_slot] = Some(Slot { partner: id, s_prime: 1.0 });
        parent.energy -= cost;
        self.cells.push(child);
        let natural_length = birth_length(dist, rp, payload.radius, &cfg.mechanics);
        self.bonds.insert(bond_key(parent_id, id), Bond { natural_length });
        self.window.births += 1;
        self.log(EventKind::Birth { parent: parent_id, child: id });
        self.log(EventKind::BondFormed { a: parent_id, b: id });
        Ok(())
    }

    fn resolve_waits(&mut self, cfg: &SimConfig) {
        let mech = &cfg.mechanics;
        let waiting: Vec<usize> = (0..self.cells.len())
            .filter(|&i| self.cells[i].wait_connect && self.cells[i].free_slot().is_some())
            .collect();
        if waiting.len() >= 2 {
            let margin = 1.0 + 1e-9;
            let r_max = waiting.iter().fold(0.0f64, |m, &i| m.max(self.cells[i].radius));
            let positions: Vec<[f64; 3]> = waiting.iter().map(|&i| self.cells[i].pos).collect();
            let mut grid = std::mem::take(&mut self.scratch.grid);
            grid.build(positions.iter().copied(), self.extent(), mech.connect_factor * r_max * margin);
            let mut candidates: Vec<(f64, u64, u64, f64)> = Vec::new();
            let cells = &self.cells;
            let bonds = &self.bonds;
            grid.for_each_pair(
                &positions,
                |a, b| mech.connect_factor * cells[waiting[a]].radius.min(cells[waiting[b]].radius) * margin,
                |a, b, d| {
                    let (ci, cj) = (&cells[waiting[a]], &cells[waiting[b]]);
                    if bonds.contains_key(&bond_key(ci.id, cj.id)) {
                        return;
                    }
                    if let Some(len) = try_connect(d, ci.radius, cj.radius, mech) {
                        candidates.push((d, ci.id, cj.id, len));
                    }
                },
            );
            self.scratch.grid = grid;
            candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
            let mut used: Vec<u64> = Vec::new();
            for (_, a, b, len) in candidates {
                if used.contains(&a) || used.contains(&b) {
                    continue;
                }
                if self.connect(a, b, len) {
                    used.push(a);
                    used.push(b);
                    for id in [a, b] {
                        if let Some(c) = self.cell_mut(id) {
                            c.wait_connect = false;
                        }
                    }
                }
            }
        }

        let waiting_dis = |w: &World, id: u64| w.cell(id).is_some_and(|c| c.wait_disconnect);
        let doomed: Vec<(u64, u64)> = self
            .bonds
            .keys()
            .filter(|&&(a, b)| waiting_dis(self, a) && waiting_dis(self, b))
            .copied()
            .collect();
        for &(a, b) in &doomed {
            self.remove_bond((a, b));
            self.log(EventKind::BondBroken { a, b });
        }
        for &(a, b) in &doomed {
            for id in [a, b] {
                if let Some(c) = self.cell_mut(id) {
                    c.wait_disconnect = false;
                }
            }
        }
    }

    fn integrate(&mut self, cfg: &SimConfig) -> Result<(), SimError> {
        let mut bodies = std::mem::take(&mut self.scratch.bodies);
        let mut springs = std::mem::take(&mut self.scratch.springs);
        bodies.clear();
        bodies.extend(self.cells.iter().map(|c| Body {
            pos: c.pos,
            vel: c.vel,
            mass: c.mass,
            radius: c.radius,
            pinned: c.pinned,
        }));
        springs.clear();
        for (&(a, b), bond) in &self.bonds {
            let (Some(ia), Some(ib)) = (self.index_of(a), self.index_of(b)) else {
                continue;
            };
            springs.push(Spring {
                a: ia,
                b: ib,
                natural_length: bond.natural_length,
            });
        }
        let result = integrate_step(
            &mut bodies,
            &springs,
            &self.heightmap,
            &cfg.mechanics,
            cfg.dt,
            &mut self.scratch.mech,
        );
        if let Err(k) = result {
            return Err(SimError::NumericBlowup {
                step: self.step,
                cell: self.cells[k].id,
            });
        }
        for (c, b) in self.cells.iter_mut().zip(&bodies) {
            c.pos = b.pos;
            c.vel = b.vel;
        }
        let broken: Vec<(u64, u64)> = springs
            .iter()
            .filter(|s| check_break(distance(bodies[s.a].pos, bodies[s.b].pos), s.natural_length, &cfg.mechanics))
            .map(|s| bond_key(self.cells[s.a].id, self.cells[s.b].id))
            .collect();
        for key in broken {
            self.remove_bond(key);
            self.log(EventKind::BondBroken { a: key.0, b: key.1 });
        }
        self.scratch.bodies = bodies;
        self.scratch.springs = springs;
        Ok(())
    }

    fn decay_and_deaths(&mut self, cfg: &SimConfig) -> Result<(), SimError> {
        let mut params = cfg.energy;
        params.a = self.a;
        let u: Vec<f64> = (0..=params.n_max)
            .map(|n| decay_rate(&params, n))
            .collect::<Result<_, _>>()?;
        let mut dead = Vec::new();
        for c in &mut self.cells {
            c.energy = step_decay(c.energy, u[c.connections().min(params.n_max)], cfg.dt)?;
            if let Some(floor) = c.energy_floor {
                c.energy = floor;
            }
            if !c.energy.is_finite() {
                return Err(SimError::NumericBlowup {
                    step: self.step,
                    cell: c.id,
                });
            }
            if c.energy < params.e_death {
                dead.push(c.id);
            }
        }
        if dead.is_empty() {
            return Ok(());
        }
        for &id in &dead {
            let partners: Vec<u64> = self.cell(id).map_or(Vec::new(), |c| c.slots.iter().flatten().map(|s| s.partner).collect());
            for p in partners {
                self.remove_bond(bond_key(id, p));
                self.log(EventKind::BondBroken { a: id.min(p), b: id.max(p) });
            }
            self.log(EventKind::Death { cell: id });
        }
        self.window.deaths += dead.len() as u64;
        self.cells.retain(|c| dead.binary_search(&c.id).is_err());
        Ok(())
    }

    fn mutate_step(&mut self, cfg: &SimConfig) {
        let alpha = self.rates.alpha;
        if !(alpha > 0.0) {
            return;
        }
        let rng = &mut self.rng;
        for c in &mut self.cells {
            if rng.bernoulli(alpha) {
                self.window.mutations += 1;
                if rng.below(2) == 0 {
                    mutation::edit(&mut c.genome.book, rng, cfg.genome.max_book);
                } else {
                    mutation::substitute(&mut c.genome.bookmarker, rng);
                }
            }
        }
    }

    fn adjust_a(&mut self, cfg: &SimConfig) {
        let ad = &cfg.adaptive;
        if !ad.enabled || self.step % ad.interval != 0 || self.cells.is_empty() {
            return;
        }
        let n = self.cells.len();
        let prev = if self.prev_count == 0 { n } else { self.prev_count };
        self.a = adjust_decay_base(self.a, n, prev, ad);
        self.prev_count = n;
    }

    fn record_metrics(&mut self, cfg: &SimConfig) {
        if self.step % cfg.output.metrics_interval != 0 {
            return;
        }
        let w = std::mem::take(&mut self.window);
        self.rows.push(MetricsRow {
            step: self.step,
            cells: self.cells.len(),
            connections: self.bonds.len(),
            transport_events: w.transport_events,
            births: w.births,
            deaths: w.deaths,
            mutations: w.mutations,
            a: self.a,
        });
    }
}

/// One controller update of the decay base. With fewer than `N_max` bonds a
/// larger `A` means slower decay, so the base moves down when the population
/// is above target and up when below:
/// `A · (target/N)^gain · (N_prev/N)^damping`, clamped to `[a_min, a_max]`.
pub fn adjust_decay_base(a: f64, n: usize, n_prev: usize, params: &crate::config::AdaptiveConfig) -> f64 {
    if n == 0 {
        return a;
    }
    let n = n as f64;
    let ratio = (params.target as f64 / n).powf(params.gain);
    let trend = (n_prev.max(1) as f64 / n).powf(params.damping);
    (a * ratio * trend).clamp(params.a_min, params.a_max)
}

#[cfg(test)]
mod tests;
