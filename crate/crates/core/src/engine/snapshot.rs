//! Binary snapshot of a whole simulation.
//!
//! Layout (all scalars little-endian, `f64` stored as its IEEE-754 bits):
//!
//! ```text
//! magic    8 bytes  "BKCLSNAP"
//! version  u32      1
//! records  repeated: tag u8, length u32, payload[length]
//! trailer  u32      CRC-32 (IEEE) of every preceding byte
//! ```
//!
//! Records, in file order:
//!
//! | tag | name    | payload |
//! |-----|---------|---------|
//! | 1   | META    | step u64, field count u32, config CRC-32 u32, migration rng key u64, counter u64 |
//! | 2   | CONFIG  | configuration TOML (UTF-8) |
//! | 3   | TERRAIN | size u32, size² heights f64 (row-major, row = y) |
//! | 4   | FIELD   | see `write_field` |
//! | 5   | CELL    | field u32, then the cell (see `write_cell`) |
//! | 6   | BOND    | field u32, a u64, b u64, natural length f64 |
//!
//! Strings and byte strings are a u32 length followed by the bytes; vectors
//! of `f64` are a u32 count followed by the values.

use std::sync::Arc;

use crate::config::{FieldRates, SimConfig};
use crate::error::SnapshotError;
use crate::genome::Genome;
use crate::mechanics::Heightmap;
use crate::metrics::{MetricsRow, WindowCounts};
use crate::neurocell::NeuralNet;
use crate::world::{Bond, Cell, Emitter, Slot, Sun, World};

use super::{Rng, Simulation};

pub const MAGIC: &[u8; 8] = b"BKCLSNAP";
pub const VERSION: u32 = 1;

const META: u8 = 1;
const CONFIG: u8 = 2;
const TERRAIN: u8 = 3;
const FIELD: u8 = 4;
const CELL: u8 = 5;
const BOND: u8 = 6;

#[derive(Default)]
struct Out(Vec<u8>);

impl Out {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }
    fn len(&mut self, n: usize) {
        self.u32(u32::try_from(n).expect("snapshot item count fits in u32"));
    }
    fn bytes(&mut self, b: &[u8]) {
        self.len(b.len());
        self.0.extend_from_slice(b);
    }
    fn f64s(&mut self, v: &[f64]) {
        self.len(v.len());
        for &x in v {
            self.f64(x);
        }
    }
    fn vec3(&mut self, v: [f64; 3]) {
        for x in v {
            self.f64(x);
        }
    }
    fn record(&mut self, tag: u8, body: Out) {
        self.u8(tag);
        self.len(body.0.len());
        self.0.extend_from_slice(&body.0);
    }
}

struct In<'a> {
    data: &'a [u8],
    pos: usize,
    /// Offset of `data[0]` in the file, for error messages.
    base: usize,
}

impl<'a> In<'a> {
    fn corrupt(&self, message: impl Into<String>) -> SnapshotError {
        SnapshotError::Corrupt {
            offset: self.base + self.pos,
            message: message.into(),
        }
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8], SnapshotError> {
        if self.data.len() - self.pos < n {
            return Err(self.corrupt(format!("need {n} bytes, {} left", self.data.len() - self.pos)));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, SnapshotError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, SnapshotError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64, SnapshotError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64(&mut self) -> Result<f64, SnapshotError> {
        Ok(f64::from_bits(self.u64()?))
    }
    fn count(&mut self) -> Result<usize, SnapshotError> {
        let n = self.u32()? as usize;
        if n > self.data.len() - self.pos {
            return Err(self.corrupt(format!("count {n} exceeds remaining record bytes")));
        }
        Ok(n)
    }
    fn bytes(&mut self) -> Result<Vec<u8>, SnapshotError> {
        let n = self.count()?;
        Ok(self.take(n)?.to_vec())
    }
    fn f64s(&mut self) -> Result<Vec<f64>, SnapshotError> {
        let n = self.count()?;
        (0..n).map(|_| self.f64()).collect()
    }
    fn vec3(&mut self) -> Result<[f64; 3], SnapshotError> {
        Ok([self.f64()?, self.f64()?, self.f64()?])
    }
    fn done(&self) -> Result<(), SnapshotError> {
        if self.pos != self.data.len() {
            return Err(self.corrupt(format!("{} trailing bytes in record", self.data.len() - self.pos)));
        }
        Ok(())
    }
}

fn write_rng(o: &mut Out, r: Rng) {
    o.u64(r.key());
    o.u64(r.counter());
}

fn read_rng(i: &mut In) -> Result<Rng, SnapshotError> {
    Ok(Rng::from_parts(i.u64()?, i.u64()?))
}

/// FIELD payload: index u32, alpha f64, beta f64, step u64, A f64,
/// previous count u64, sun x f64, sun direction f64, rng, next id u64,
/// window counts 4×u64, trace flag u8, emitters (u32 count; id u64, pos 3×f64,
/// radius f64, emission f64, color 3×f64), pending metrics rows (u32 count;
/// step u64, cells u64, connections u64, 4 counts u64, A f64).
fn write_field(w: &World) -> Out {
    let mut o = Out::default();
    o.len(w.index);
    o.f64(w.rates.alpha);
    o.f64(w.rates.beta);
    o.u64(w.step);
    o.f64(w.a);
    o.u64(w.prev_count as u64);
    o.f64(w.sun.x);
    o.f64(w.sun.direction);
    write_rng(&mut o, w.rng);
    o.u64(w.next_id);
    for v in [w.window.transport_events, w.window.births, w.window.deaths, w.window.mutations] {
        o.u64(v);
    }
    o.u8(w.trace.is_some() as u8);
    o.len(w.emitters.len());
    for e in &w.emitters {
        o.u64(e.id);
        o.vec3(e.pos);
        o.f64(e.radius);
        o.f64(e.emission);
        o.vec3(e.color);
    }
    o.len(w.rows.len());
    for r in &w.rows {
        o.u64(r.step);
        o.u64(r.cells as u64);
        o.u64(r.connections as u64);
        for v in [r.transport_events, r.births, r.deaths, r.mutations] {
            o.u64(v);
        }
        o.f64(r.a);
    }
    o
}

/// CELL payload after the field index: id u64, lineage u64, pos, vel,
/// mass, radius, absorption, luminosity, energy, book, bookmarker, advance,
/// weights, slots (u32 count; per slot u8 present, partner u64, S′ f64),
/// outputs, light 3×f64, flags u8 (1 wait-connect, 2 wait-disconnect,
/// 4 pinned, 8 energy floor present), energy floor f64.
fn write_cell(o: &mut Out, c: &Cell) {
    o.u64(c.id);
    o.u64(c.lineage);
    o.vec3(c.pos);
    o.vec3(c.vel);
    o.f64(c.mass);
    o.f64(c.radius);
    o.vec3(c.absorption);
    o.f64(c.luminosity);
    o.f64(c.energy);
    o.bytes(&c.genome.book);
    o.bytes(&c.genome.bookmarker);
    o.bytes(&c.genome.advance);
    o.f64s(c.net.weights());
    o.len(c.slots.len());
    for s in &c.slots {
        match s {
            Some(s) => {
                o.u8(1);
                o.u64(s.partner);
                o.f64(s.s_prime);
            }
            None => {
                o.u8(0);
                o.u64(0);
                o.f64(0.0);
            }
        }
    }
    o.f64s(&c.outputs);
    o.vec3(c.light);
    let flags = c.wait_connect as u8
        | (c.wait_disconnect as u8) << 1
        | (c.pinned as u8) << 2
        | (c.energy_floor.is_some() as u8) << 3;
    o.u8(flags);
    o.f64(c.energy_floor.unwrap_or(0.0));
}

pub fn config_hash(config: &SimConfig) -> u32 {
    crc32fast::hash(config.to_toml().as_bytes())
}

/// Serializes the full state. Call between steps.
pub fn snapshot(sim: &Simulation) -> Vec<u8> {
    let mut o = Out::default();
    o.0.extend_from_slice(MAGIC);
    o.u32(VERSION);

    let mut meta = Out::default();
    meta.u64(sim.step);
    meta.len(sim.fields.len());
    meta.u32(config_hash(&sim.config));
    write_rng(&mut meta, sim.migration_rng);
    o.record(META, meta);

    let mut cfg = Out::default();
    cfg.0.extend_from_slice(sim.config.to_toml().as_bytes());
    o.record(CONFIG, cfg);

    let mut terrain = Out::default();
    terrain.len(sim.heightmap.size());
    for &h in sim.heightmap.heights() {
        terrain.f64(h);
    }
    o.record(TERRAIN, terrain);

    for (fi, w) in sim.fields.iter().enumerate() {
        o.record(FIELD, write_field(w));
        for c in &w.cells {
            let mut rec = Out::default();
            rec.len(fi);
            write_cell(&mut rec, c);
            o.record(CELL, rec);
        }
        for (&(a, b), bond) in &w.bonds {
            let mut rec = Out::default();
            rec.len(fi);
            rec.u64(a);
            rec.u64(b);
            rec.f64(bond.natural_length);
            o.record(BOND, rec);
        }
    }
    let crc = crc32fast::hash(&o.0);
    o.u32(crc);
    o.0
}

fn read_field(i: &mut In, config: &Arc<SimConfig>, heightmap: &Arc<Heightmap>) -> Result<World, SnapshotError> {
    let index = i.u32()? as usize;
    let mut w = World::new(config.clone(), heightmap.clone(), index);
    w.rates = FieldRates {
        alpha: i.f64()?,
        beta: i.f64()?,
    };
    w.step = i.u64()?;
    w.a = i.f64()?;
    w.prev_count = i.u64()? as usize;
    w.sun = Sun {
        x: i.f64()?,
        direction: i.f64()?,
    };
    w.rng = read_rng(i)?;
    w.next_id = i.u64()?;
    w.window = WindowCounts {
        transport_events: i.u64()?,
        births: i.u64()?,
        deaths: i.u64()?,
        mutations: i.u64()?,
    };
    w.trace = (i.u8()? != 0).then(Vec::new);
    let n = i.count()?;
    for _ in 0..n {
        w.emitters.push(Emitter {
            id: i.u64()?,
            pos: i.vec3()?,
            radius: i.f64()?,
            emission: i.f64()?,
            color: i.vec3()?,
        });
    }
    let n = i.count()?;
    for _ in 0..n {
        w.rows.push(MetricsRow {
            step: i.u64()?,
            cells: i.u64()? as usize,
            connections: i.u64()? as usize,
            transport_events: i.u64()?,
            births: i.u64()?,
            deaths: i.u64()?,
            mutations: i.u64()?,
            a: i.f64()?,
        });
    }
    i.done()?;
    Ok(w)
}

fn read_cell(i: &mut In, config: &SimConfig) -> Result<Cell, SnapshotError> {
    let shape = config.shape();
    let id = i.u64()?;
    let lineage = i.u64()?;
    let pos = i.vec3()?;
    let vel = i.vec3()?;
    let mass = i.f64()?;
    let radius = i.f64()?;
    let absorption = i.vec3()?;
    let luminosity = i.f64()?;
    let energy = i.f64()?;
    let genome = Genome {
        book: i.bytes()?,
        bookmarker: i.bytes()?,
        advance: i.bytes()?,
    };
    if let Err(e) = genome.validate() {
        return Err(i.corrupt(format!("cell {id}: {e}")));
    }
    let weights = i.f64s()?;
    let net = NeuralNet::new(shape, weights).map_err(|e| i.corrupt(format!("cell {id}: {e}")))?;
    let n = i.count()?;
    if n != shape.n_slots {
        return Err(i.corrupt(format!("cell {id}: {n} slots, configuration has {}", shape.n_slots)));
    }
    let mut slots = Vec::with_capacity(n);
    for _ in 0..n {
        let present = i.u8()?;
        let partner = i.u64()?;
        let s_prime = i.f64()?;
        slots.push((present != 0).then_some(Slot { partner, s_prime }));
    }
    let outputs = i.f64s()?;
    if outputs.len() != shape.n_out() {
        return Err(i.corrupt(format!("cell {id}: {} outputs, expected {}", outputs.len(), shape.n_out())));
    }
    let light = i.vec3()?;
    let flags = i.u8()?;
    let floor = i.f64()?;
    i.done()?;
    Ok(Cell {
        id,
        lineage,
        pos,
        vel,
        mass,
        radius,
        absorption,
        luminosity,
        energy,
        genome,
        net: Arc::new(net),
        slots,
        outputs,
        light,
        wait_connect: flags & 1 != 0,
        wait_disconnect: flags & 2 != 0,
        pinned: flags & 4 != 0,
        energy_floor: (flags & 8 != 0).then_some(floor),
    })
}

/// Rebuilds a simulation from snapshot bytes.
pub fn restore(data: &[u8]) -> Result<Simulation, SnapshotError> {
    if data.len() < MAGIC.len() || &data[..MAGIC.len()] != MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    if data.len() < MAGIC.len() + 8 {
        return Err(SnapshotError::Corrupt {
            offset: data.len(),
            message: "file too short".into(),
        });
    }
    let version = u32::from_le_bytes(data[8..12].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(SnapshotError::Version {
            found: version,
            expected: VERSION,
        });
    }
    let body_end = data.len() - 4;
    let stored = u32::from_le_bytes(data[body_end..].try_into().expect("4 bytes"));
    let computed = crc32fast::hash(&data[..body_end]);
    if stored != computed {
        return Err(SnapshotError::Checksum { stored, computed });
    }

    let mut top = In {
        data: &data[..body_end],
        pos: 12,
        base: 0,
    };
    let mut records = Vec::new();
    while top.pos < top.data.len() {
        let at = top.pos;
        let tag = top.u8()?;
        let len = top.u32()? as usize;
        if len > top.data.len() - top.pos {
            return Err(SnapshotError::Corrupt {
                offset: at,
                message: format!("record length {len} runs past end of file"),
            });
        }
        let start = top.pos;
        top.pos += len;
        records.push((at, tag, In {
            data: &data[start..start + len],
            pos: 0,
            base: start,
        }));
    }
    let mut it = records.into_iter();
    let mut expect = |want: u8, name: &str| -> Result<In, SnapshotError> {
        match it.next() {
            Some((_, tag, r)) if tag == want => Ok(r),
            Some((at, tag, _)) => Err(SnapshotError::Corrupt {
                offset: at,
                message: format!("expected {name} record, found tag {tag}"),
            }),
            None => Err(SnapshotError::Corrupt {
                offset: body_end,
                message: format!("missing {name} record"),
            }),
        }
    };

    let mut meta = expect(META, "META")?;
    let step = meta.u64()?;
    let n_fields = meta.u32()? as usize;
    let hash = meta.u32()?;
    let migration_rng = read_rng(&mut meta)?;
    meta.done()?;

    let cfg_rec = expect(CONFIG, "CONFIG")?;
    let text = std::str::from_utf8(cfg_rec.data).map_err(|e| cfg_rec.corrupt(format!("configuration is not UTF-8: {e}")))?;
    let config = SimConfig::from_toml(text).map_err(|e| SnapshotError::Config(e.0))?;
    if config_hash(&config) != hash {
        return Err(cfg_rec.corrupt("configuration does not match its recorded hash"));
    }
    let config = Arc::new(config);

    let mut terr = expect(TERRAIN, "TERRAIN")?;
    let size = terr.u32()? as usize;
    let heights = (0..size.saturating_mul(size)).map(|_| terr.f64()).collect::<Result<Vec<_>, _>>()?;
    terr.done()?;
    let heightmap = Arc::new(Heightmap::from_heights(size, heights).map_err(|e| terr.corrupt(e))?);

    let mut fields: Vec<World> = Vec::with_capacity(n_fields);
    let mut rest: Vec<(usize, u8, In)> = it.collect();
    let mut k = 0;
    while k < rest.len() {
        let (at, tag, _) = &rest[k];
        let (at, tag) = (*at, *tag);
        let r = &mut rest[k].2;
        match tag {
            FIELD => {
                let w = read_field(r, &config, &heightmap)?;
                if w.index != fields.len() {
                    return Err(SnapshotError::Corrupt {
                        offset: at,
                        message: format!("field {} out of order", w.index),
                    });
                }
                fields.push(w);
            }
            CELL | BOND => {
                let fi = r.u32()? as usize;
                let n_seen = fields.len();
                let Some(w) = fields.last_mut().filter(|_| fi + 1 == n_seen) else {
                    return Err(SnapshotError::Corrupt {
                        offset: at,
                        message: format!("record for field {fi} outside its field section"),
                    });
                };
                if tag == CELL {
                    let c = read_cell(r, &config)?;
                    if w.cells.last().is_some_and(|p| p.id >= c.id) {
                        return Err(SnapshotError::Corrupt {
                            offset: at,
                            message: format!("cell {} out of order", c.id),
                        });
                    }
                    w.cells.push(c);
                } else {
                    let (a, b, len) = (r.u64()?, r.u64()?, r.f64()?);
                    r.done()?;
                    w.bonds.insert((a, b), Bond { natural_length: len });
                }
            }
            other => {
                return Err(SnapshotError::Corrupt {
                    offset: at,
                    message: format!("unknown record tag {other}"),
                })
            }
        }
        k += 1;
    }
    if fields.len() != n_fields {
        return Err(SnapshotError::Corrupt {
            offset: body_end,
            message: format!("expected {n_fields} fields, found {}", fields.len()),
        });
    }
    for w in &fields {
        w.check_invariants().map_err(|m| SnapshotError::Corrupt {
            offset: body_end,
            message: format!("field {}: {m}", w.index),
        })?;
    }
    Ok(Simulation {
        parallel: config.parallel,
        config,
        heightmap,
        fields,
        migration_rng,
        step,
    })
}

pub fn save(sim: &Simulation, path: &std::path::Path) -> Result<(), SnapshotError> {
    std::fs::write(path, snapshot(sim))?;
    Ok(())
}

pub fn load(path: &std::path::Path) -> Result<Simulation, SnapshotError> {
    restore(&std::fs::read(path)?)
}
