use std::collections::BTreeSet;
use std::sync::Arc;

use super::*;
use super::migrate::migrate_mix;
use crate::config::{AdaptiveConfig, FieldRates, SimConfig};
use crate::mechanics::MechParams;
use crate::genomes::{from_asm, SeedGenome};

fn quiet_config() -> SimConfig {
    let mut c = SimConfig::default();
    c.fields = vec![FieldRates { alpha: 0.0, beta: 0.0 }];
    c.adaptive.enabled = false;
    c.sun.deliver = false;
    c.sun.speed = 0.0;
    c.output.metrics_interval = 1;
    c
}

fn world(c: SimConfig) -> World {
    let hm = Arc::new(c.heightmap().unwrap());
    World::new(Arc::new(c), hm, 0)
}

fn seed(src: &str, c: &SimConfig) -> SeedGenome {
    from_asm(src, c).unwrap()
}

const IDLE: &str = "cell c\n  absorb 1 1 1\n  radius 0.1\nend\nseed c\nstart s\ns: transition next=s\n";

fn with_net(net: &str, body: &str) -> String {
    format!("net n\n{net}\nend\ncell c\n  absorb 1 1 1\n  mass 0.3\n  radius 0.1\n  net n\nend\nseed c\n{body}")
}

fn add(w: &mut World, s: &SeedGenome, pos: [f64; 3], energy: f64) -> u64 {
    w.add_cell(s.genome.clone(), &s.phenotype, pos, energy).unwrap()
}

fn mid(w: &World) -> f64 {
    w.extent() / 2.0
}

#[test]
fn sun_hit_rate_matches_flux_oracle() {
    let mut c = quiet_config();
    c.sun.deliver = true;
    c.energy.c = 1e-3;
    let mut w = world(c.clone());
    let s = seed(IDLE, &c);
    let m = mid(&w);
    let id = add(&mut w, &s, [m + 3.0, m, 0.0], 1.0);
    w.pin_cell(id, None);
    let pos = w.cell(id).unwrap().pos;
    let sun = w.sun_position();
    let h2: f64 = (0..3).map(|k| (pos[k] - sun[k]).powi(2)).sum();
    let flux = c.sun.emission * c.sun.radius.powi(2) / (4.0 * std::f64::consts::PI * h2);
    let p = flux * std::f64::consts::PI * 0.01 * c.dt;
    let n = 40_000;
    let mut hits = 0;
    for _ in 0..n {
        w.step().unwrap();
        if w.cell(id).unwrap().light != [0.0; 3] {
            hits += 1;
        }
    }
    let rate = hits as f64 / n as f64;
    let sd = (p * (1.0 - p) / n as f64).sqrt();
    assert!((rate - p).abs() < 5.0 * sd, "rate {rate} vs {p}");
}

#[test]
fn eating_is_zero_sum() {
    let c = quiet_config();
    let mut w = world(c.clone());
    w.enable_trace();
    let eater = seed(&with_net("  eat bias 1", "start s\ns: transition next=s\n"), &c);
    let mut prey = eater.clone();
    prey.phenotype.weights.iter_mut().for_each(|x| *x = 0.0);
    let m = mid(&w);
    let e = add(&mut w, &eater, [m, m, 0.0], 2.0);
    let p = add(&mut w, &prey, [m + 0.15, m, 0.0], 3.0);
    let extra = add(&mut w, &prey, [m - 3.0, m, 0.0], 1.0);
    // The eater needs more bonds than its prey.
    assert!(w.connect(e, extra, 3.0));
    let before = w.cell(e).unwrap().energy + w.cell(p).unwrap().energy;
    w.step().unwrap();
    let log = w.drain_trace();
    let amount: f64 = log
        .iter()
        .filter_map(|t| match t.kind {
            EventKind::Eat { eater, prey, amount } if eater == e && prey == p => Some(amount),
            _ => None,
        })
        .sum();
    assert!(amount > 0.0);
    let mut params = c.energy;
    params.a = w.a();
    let (ce, cp) = (w.cell(e).unwrap(), w.cell(p).unwrap());
    let ue = decay_rate(&params, ce.connections()).unwrap();
    let up = decay_rate(&params, cp.connections()).unwrap();
    let pre_e = ce.energy / (1.0 - ue * c.dt);
    let pre_p = cp.energy / (1.0 - up * c.dt);
    assert!(((pre_e + pre_p) - before).abs() < 1e-12);
    assert!((pre_e - 2.0 - amount).abs() < 1e-12);
}

#[test]
fn hebb_rate_zero_keeps_coupling() {
    for ds in [0.0, 0.1] {
        let mut c = quiet_config();
        c.net.delta_s = ds;
        let mut w = world(c.clone());
        let s = seed(&with_net("  s* bias 1", "start s\ns: transition next=s\n"), &c);
        let m = mid(&w);
        let a = add(&mut w, &s, [m, m, 0.0], 5.0);
        let b = add(&mut w, &s, [m + 0.2, m, 0.0], 5.0);
        assert!(w.connect(a, b, 0.2));
        w.step().unwrap();
        let s_out = w.cell(a).unwrap().outputs[port::slot_s(0)];
        let got = w.cell(b).unwrap().slots[0].unwrap().s_prime;
        assert_eq!(got, hebb_update(1.0, s_out, ds));
        w.run(20).unwrap();
        let got = w.cell(b).unwrap().slots[0].unwrap().s_prime;
        if ds == 0.0 {
            assert_eq!(got, 1.0);
        } else {
            assert!(got > 1.0);
        }
    }
}

fn mutation_world(alpha: f64, cells: usize) -> World {
    let mut c = quiet_config();
    c.energy.c = 1e-6;
    c.fields = vec![FieldRates { alpha, beta: 0.0 }];
    let mut w = world(c.clone());
    let s = seed(IDLE, &c);
    let mut rng = Rng::from_key(9);
    w.seed_population(&s.genome, &s.phenotype, cells, 5.0, &mut rng).unwrap();
    w
}

#[test]
fn zero_mutation_rate_keeps_genomes() {
    let mut w = mutation_world(0.0, 10);
    let before: Vec<Genome> = w.cells().iter().map(|c| c.genome.clone()).collect();
    w.run(200).unwrap();
    let after: Vec<Genome> = w.cells().iter().map(|c| c.genome.clone()).collect();
    assert_eq!(before, after);
    assert!(w.drain_rows().iter().all(|r| r.mutations == 0));
}

#[test]
fn unit_mutation_rate_mutates_every_cell_every_step() {
    let mut w = mutation_world(1.0, 12);
    w.run(50).unwrap();
    assert!(w.drain_rows().iter().all(|r| r.mutations == 12));
}

#[test]
fn mutation_frequency_matches_rate() {
    let alpha = 0.1;
    let mut w = mutation_world(alpha, 50);
    let steps = 2000;
    w.run(steps).unwrap();
    let total: u64 = w.drain_rows().iter().map(|r| r.mutations).sum();
    let expected = alpha * 50.0 * steps as f64;
    assert!((total as f64 - expected).abs() / expected < 0.02, "{total} vs {expected}");
}

const EXPANDER: &str = "start bud\nbud: expand c copy=all next=rest\nrest: transition next=rest\n";

#[test]
fn expansion_pays_exact_cost_and_bonds() {
    let c = quiet_config();
    let mut w = world(c.clone());
    let s = seed(&with_net("  read bias 1", EXPANDER), &c);
    let m = mid(&w);
    let id = add(&mut w, &s, [m, m, 0.0], 100.0);
    let cost = w.generation_cost_at(&s.phenotype, w.cell(id).unwrap().pos).unwrap();
    let before = w.total_energy();
    // Decay runs after the birth, so undo it per cell.
    w.step().unwrap();
    assert_eq!(w.cells().len(), 2);
    let mut params = c.energy;
    params.a = w.a();
    let u1 = decay_rate(&params, 1).unwrap();
    let parent = w.cell(id).unwrap().energy / (1.0 - u1 * c.dt);
    let child = w.cells()[1].energy / (1.0 - u1 * c.dt);
    assert!((child - cost).abs() < 1e-9 * cost);
    assert!((parent + child - before).abs() < 1e-9 * before);
    assert_eq!(w.bonds().len(), 1);
    assert_eq!(w.cells()[1].lineage, id);
    w.check_invariants().unwrap();
}

#[test]
fn expansion_with_full_slots_aborts() {
    let c = quiet_config();
    let mut w = world(c.clone());
    let s = seed(&with_net("  read bias 1", EXPANDER), &c);
    let idle = seed(IDLE, &c);
    let m = mid(&w);
    let id = add(&mut w, &s, [m, m, 0.0], 100.0);
    for k in 0..c.net.slots {
        let other = add(&mut w, &idle, [m + 2.0, m - 6.0 + 2.0 * k as f64, 0.0], 100.0);
        assert!(w.connect(id, other, 2.0));
    }
    let marker = w.cell(id).unwrap().genome.bookmarker.clone();
    w.step().unwrap();
    assert_eq!(w.cells().len(), 1 + c.net.slots);
    assert_ne!(w.cell(id).unwrap().genome.bookmarker, marker, "bookmarker still advances");
}

#[test]
fn unaffordable_expansion_aborts_and_advances() {
    let c = quiet_config();
    let mut w = world(c.clone());
    let s = seed(&with_net("  read bias 1", EXPANDER), &c);
    let m = mid(&w);
    let id = add(&mut w, &s, [m, m, 0.0], 0.01);
    let marker = w.cell(id).unwrap().genome.bookmarker.clone();
    w.step().unwrap();
    assert_eq!(w.cells().len(), 1);
    assert_ne!(w.cell(id).unwrap().genome.bookmarker, marker);
}

#[test]
fn reads_need_a_positive_read_output() {
    let c = quiet_config();
    let mut w = world(c.clone());
    let s = seed(&with_net("  read bias -1", EXPANDER), &c);
    let m = mid(&w);
    let id = add(&mut w, &s, [m, m, 0.0], 100.0);
    let g = w.cell(id).unwrap().genome.clone();
    w.run(20).unwrap();
    assert_eq!(w.cell(id).unwrap().genome, g);
    assert_eq!(w.cells().len(), 1);
}

#[test]
fn unfed_cells_die_and_drop_bonds() {
    let c = quiet_config();
    let mut w = world(c.clone());
    let s = seed(IDLE, &c);
    let m = mid(&w);
    let a = add(&mut w, &s, [m, m, 0.0], 2.0 * c.energy.e_death);
    let b = add(&mut w, &s, [m + 0.2, m, 0.0], 1e6);
    assert!(w.connect(a, b, 0.2));
    let u = c.energy.c * c.energy.a.powi(1 - c.energy.n_max as i32);
    let steps = ((2.0f64).ln() / (u * c.dt)).ceil() as u64 + 2;
    w.run(steps).unwrap();
    assert!(w.cell(a).is_none());
    assert!(w.cell(b).is_some());
    assert!(w.bonds().is_empty());
    assert_eq!(w.drain_rows().iter().map(|r| r.deaths).sum::<u64>(), 1);
    w.check_invariants().unwrap();
}

#[test]
fn glowing_costs_exactly_emission_energy() {
    let c = quiet_config();
    let mut w = world(c.clone());
    let s = seed(&with_net("  light bias 1", "start s\ns: transition next=s\n"), &c);
    let m = mid(&w);
    let id = add(&mut w, &s, [m, m, 0.0], 3.0);
    w.step().unwrap();
    let mut params = c.energy;
    params.a = w.a();
    let u0 = decay_rate(&params, 0).unwrap();
    let expected = step_decay(3.0 - c.energy.k_emit * 0.01 * c.dt, u0, c.dt).unwrap();
    assert!((w.cell(id).unwrap().energy - expected).abs() < 1e-15);
    assert_eq!(w.emitters().len(), 1);
}

#[test]
fn glowing_cell_feeds_a_neighbour() {
    let mut c = quiet_config();
    c.light.emission = 1e5;
    let mut w = world(c.clone());
    let src = with_net("  light bias 1", "start s\ns: transition next=s\n").replace("  net n\n", "  luminosity 1\n  net n\n").replace("absorb 1 1 1", "absorb 0.2 0.2 0.2");
    let s = seed(&src, &c);
    let idle = seed(IDLE, &c);
    let m = mid(&w);
    add(&mut w, &s, [m, m, 0.0], 100.0);
    let far = add(&mut w, &idle, [m + 2.0 * c.light.range, m, 0.0], 1.0);
    let near = add(&mut w, &idle, [m + 0.5, m, 0.0], 1.0);
    w.run(200).unwrap();
    let e_near = w.cell(near).unwrap().energy;
    let e_far = w.cell(far).unwrap().energy;
    assert!(e_near > e_far, "{e_near} vs {e_far}");
}

/// All waiting pairs by brute force, then greedy by (distance, ids).
fn oracle_bonds(w: &World, mech: &MechParams) -> BTreeSet<(u64, u64)> {
    let cells: Vec<&Cell> = w.cells().iter().filter(|c| c.wait_connect && c.free_slot().is_some()).collect();
    let mut cand = Vec::new();
    for i in 0..cells.len() {
        for j in i + 1..cells.len() {
            let d = distance(cells[i].pos, cells[j].pos);
            if w.bonds().contains_key(&bond_key(cells[i].id, cells[j].id)) {
                continue;
            }
            if try_connect(d, cells[i].radius, cells[j].radius, mech).is_some() {
                cand.push((d, cells[i].id, cells[j].id));
            }
        }
    }
    cand.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used = BTreeSet::new();
    let mut out = BTreeSet::new();
    for (_, a, b) in cand {
        if used.contains(&a) || used.contains(&b) {
            continue;
        }
        used.insert(a);
        used.insert(b);
        out.insert((a, b));
    }
    out
}

#[test]
fn connection_pairing_matches_exhaustive_oracle() {
    let c = quiet_config();
    let s = seed(IDLE, &c);
    let mut rng = Rng::from_key(77);
    for _ in 0..300 {
        let mut w = world(c.clone());
        let m = mid(&w);
        let n = 2 + rng.below(4);
        for _ in 0..n {
            let p = [m + rng.uniform() * 0.4, m + rng.uniform() * 0.4, 0.1 + rng.uniform() * 0.1];
            let id = add(&mut w, &s, p, 1.0);
            w.cell_mut(id).unwrap().wait_connect = rng.bernoulli(0.8);
        }
        let expected = oracle_bonds(&w, &c.mechanics);
        w.resolve_waits(&c);
        let got: BTreeSet<(u64, u64)> = w.bonds().keys().copied().collect();
        assert_eq!(got, expected);
        for &(a, b) in &got {
            assert!(!w.cell(a).unwrap().wait_connect && !w.cell(b).unwrap().wait_connect);
        }
        w.check_invariants().unwrap();
    }
}

#[test]
fn disconnection_needs_both_sides() {
    let c = quiet_config();
    let mut w = world(c.clone());
    let s = seed(IDLE, &c);
    let m = mid(&w);
    let a = add(&mut w, &s, [m, m, 0.0], 1.0);
    let b = add(&mut w, &s, [m + 0.2, m, 0.0], 1.0);
    assert!(w.connect(a, b, 0.2));
    w.cell_mut(a).unwrap().wait_disconnect = true;
    w.resolve_waits(&c);
    assert_eq!(w.bonds().len(), 1);
    assert!(w.cell(a).unwrap().wait_disconnect);
    w.cell_mut(b).unwrap().wait_disconnect = true;
    w.resolve_waits(&c);
    assert!(w.bonds().is_empty());
    assert!(!w.cell(a).unwrap().wait_disconnect && !w.cell(b).unwrap().wait_disconnect);
}

#[test]
fn decay_base_controller() {
    let p = AdaptiveConfig::default();
    assert_eq!(adjust_decay_base(1.7, p.target, p.target, &p), 1.7);
    assert!(adjust_decay_base(1.7, 2 * p.target, 2 * p.target, &p) < 1.7);
    assert!(adjust_decay_base(1.7, p.target / 2, p.target / 2, &p) > 1.7);
    assert_eq!(adjust_decay_base(p.a_max, 1, 1, &p), p.a_max);
    assert_eq!(adjust_decay_base(p.a_min, 1_000_000, 1_000_000, &p), p.a_min);
    assert_eq!(adjust_decay_base(1.7, 0, 10, &p), 1.7);
}

#[test]
fn fixed_decay_base_never_moves() {
    let mut w = mutation_world(0.0, 5);
    let a = w.a();
    w.run(500).unwrap();
    assert_eq!(w.a(), a);
}

fn component_shapes(w: &World) -> Vec<(usize, usize)> {
    let mut v: Vec<(usize, usize)> = w
        .components()
        .iter()
        .map(|comp| {
            let bonds = w.bonds().keys().filter(|(a, _)| comp.binary_search(a).is_ok()).count();
            (comp.len(), bonds)
        })
        .collect();
    v.sort_unstable();
    v
}

#[test]
fn migration_conserves_cells_energy_and_organisms() {
    let mut c = quiet_config();
    c.sun.deliver = true;
    c.fields = vec![FieldRates { alpha: 0.0, beta: 0.0 }; 3];
    let hm = Arc::new(c.heightmap().unwrap());
    let cfg = Arc::new(c.clone());
    let s = seed(IDLE, &c);
    let mut fields: Vec<World> = (0..3).map(|i| World::new(cfg.clone(), hm.clone(), i)).collect();
    let mut rng = Rng::from_key(5);
    for (i, f) in fields.iter_mut().enumerate() {
        let ids = f.seed_population(&s.genome, &s.phenotype, 4 + 2 * i, 1.0 + i as f64, &mut rng).unwrap();
        for pair in ids.chunks(2) {
            let ln = distance(f.cell(pair[0]).unwrap().pos, f.cell(pair[1]).unwrap().pos);
            assert!(f.connect(pair[0], pair[1], ln));
        }
    }
    let count: usize = fields.iter().map(|f| f.cells().len()).sum();
    let energy: f64 = fields.iter().map(World::total_energy).sum();
    let mut shapes: Vec<(usize, usize)> = fields.iter().flat_map(component_shapes).collect();
    shapes.sort_unstable();
    migrate_mix(&mut fields, &mut rng);
    assert_eq!(fields.iter().map(|f| f.cells().len()).sum::<usize>(), count);
    let after: f64 = fields.iter().map(World::total_energy).sum();
    assert!((after - energy).abs() < 1e-9);
    let mut after_shapes: Vec<(usize, usize)> = fields.iter().flat_map(component_shapes).collect();
    after_shapes.sort_unstable();
    assert_eq!(after_shapes, shapes);
    for f in &fields {
        f.check_invariants().unwrap();
    }
}

#[test]
fn fecund_population_keeps_invariants() {
    let mut c = quiet_config();
    c.sun.deliver = true;
    c.sun.speed = 0.05;
    c.energy.a = 1.5;
    let mut w = world(c.clone());
    let s = crate::genomes::load("fecund", &c).unwrap();
    let mut rng = Rng::from_key(3);
    w.seed_population(&s.genome, &s.phenotype, 10, 5.0, &mut rng).unwrap();
    for _ in 0..20 {
        w.run(100).unwrap();
        w.check_invariants().unwrap();
    }
    let births: u64 = w.drain_rows().iter().map(|r| r.births).sum();
    assert!(births > 0);
}

#[test]
fn pinned_cell_holds_position_and_energy() {
    let c = quiet_config();
    let mut w = world(c.clone());
    let s = seed(IDLE, &c);
    let m = mid(&w);
    let id = add(&mut w, &s, [m, m, 0.5], 1.0);
    w.pin_cell(id, Some(7.0));
    let pos = w.cell(id).unwrap().pos;
    w.run(50).unwrap();
    assert_eq!(w.cell(id).unwrap().pos, pos);
    assert_eq!(w.cell(id).unwrap().energy, 7.0);
}
