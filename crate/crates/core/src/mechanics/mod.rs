//! Spring-mass kinematics on the heightmap, contact detection and the
//! geometric bond rules (connect within 1.95 r, natural length capped at
//! 1.10 r, break beyond 2.00 ℓ).

mod heightmap;
mod spatial;

pub use heightmap::Heightmap;
pub use spatial::SpatialGrid;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MechParams {
    /// Spring stiffness `k_s`.
    pub stiffness: f64,
    /// Spring dashpot coefficient `c_d`.
    pub damping: f64,
    pub gravity: f64,
    /// Overlap repulsion stiffness.
    pub repulsion: f64,
    /// Linear velocity drag (force per unit velocity).
    pub drag: f64,
    /// Integration substeps per world step.
    pub substeps: usize,
    pub connect_factor: f64,
    pub length_cap_factor: f64,
    pub break_factor: f64,
    /// Muscle rate `δL` (length per second).
    pub muscle_rate: f64,
    pub min_length_factor: f64,
    /// `θ_L`: |L_out| above this moves the natural length.
    pub length_threshold: f64,
}

impl Default for MechParams {
    fn default() -> Self {
        MechParams {
            stiffness: 50.0,
            damping: 2.0,
            gravity: 9.8,
            repulsion: 50.0,
            drag: 0.5,
            substeps: 2,
            connect_factor: 1.95,
            length_cap_factor: 1.10,
            break_factor: 2.0,
            muscle_rate: 0.02,
            min_length_factor: 0.1,
            length_threshold: 0.5,
        }
    }
}

impl MechParams {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("mechanics.connect_factor", self.connect_factor),
            ("mechanics.length_cap_factor", self.length_cap_factor),
            ("mechanics.break_factor", self.break_factor),
            ("mechanics.min_length_factor", self.min_length_factor),
        ];
        for (k, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(format!("{k} must be a positive number (got {v})"));
            }
        }
        let non_negative = [
            ("mechanics.stiffness", self.stiffness),
            ("mechanics.damping", self.damping),
            ("mechanics.gravity", self.gravity),
            ("mechanics.repulsion", self.repulsion),
            ("mechanics.drag", self.drag),
            ("mechanics.muscle_rate", self.muscle_rate),
            ("mechanics.length_threshold", self.length_threshold),
        ];
        for (k, v) in non_negative {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(format!("{k} must be a non-negative number (got {v})"));
            }
        }
        if self.substeps == 0 {
            return Err("mechanics.substeps must be at least 1".into());
        }
        if self.min_length_factor > self.length_cap_factor {
            return Err("mechanics.min_length_factor exceeds length_cap_factor".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Body {
    pub pos: [f64; 3],
    pub vel: [f64; 3],
    pub mass: f64,
    pub radius: f64,
    pub pinned: bool,
}

/// A bond as seen by the integrator: body indices and natural length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spring {
    pub a: usize,
    pub b: usize,
    pub natural_length: f64,
}

/// Reusable buffers for `integrate_step`.
#[derive(Debug, Default, Clone)]
pub struct MechScratch {
    grid: SpatialGrid,
    positions: Vec<[f64; 3]>,
    forces: Vec<[f64; 3]>,
}

#[inline]
pub fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2) + (b[2] - a[2]).powi(2)).sqrt()
}

/// Advances all bodies by `dt` with semi-implicit Euler substeps: springs with
/// dashpots, gravity, linear drag, overlap repulsion, then projection onto the
/// terrain and the reflective field walls. Pinned bodies do not move.
///
/// Returns the index of the first body whose state became non-finite.
pub fn integrate_step(
    bodies: &mut [Body],
    springs: &[Spring],
    field: &Heightmap,
    params: &MechParams,
    dt: f64,
    scratch: &mut MechScratch,
) -> Result<(), usize> {
    let n = bodies.len();
    let h = dt / params.substeps as f64;
    let extent = field.extent();
    let r_max = bodies.iter().fold(0.0f64, |m, b| m.max(b.radius));
    for _ in 0..params.substeps {
        scratch.forces.clear();
        scratch.forces.resize(n, [0.0; 3]);
        let forces = &mut scratch.forces;
        for (f, b) in forces.iter_mut().zip(bodies.iter()) {
            f[2] -= params.gravity * b.mass;
            for k in 0..3 {
                f[k] -= params.drag * b.vel[k];
            }
        }
        for s in springs {
            let (pa, pb) = (bodies[s.a].pos, bodies[s.b].pos);
            let d = [pb[0] - pa[0], pb[1] - pa[1], pb[2] - pa[2]];
            let dist = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            if dist <= 1e-12 {
                continue;
            }
            let u = [d[0] / dist, d[1] / dist, d[2] / dist];
            let (va, vb) = (bodies[s.a].vel, bodies[s.b].vel);
            let rel = (vb[0] - va[0]) * u[0] + (vb[1] - va[1]) * u[1] + (vb[2] - va[2]) * u[2];
            let mag = params.stiffness * (dist - s.natural_length) + params.damping * rel;
            for k in 0..3 {
                forces[s.a][k] += mag * u[k];
                forces[s.b][k] -= mag * u[k];
            }
        }
        if params.repulsion > 0.0 && n > 1 {
            scratch.positions.clear();
            scratch.positions.extend(bodies.iter().map(|b| b.pos));
            scratch.grid.build(scratch.positions.iter().copied(), extent, 2.0 * r_max);
            let positions = &scratch.positions;
            scratch.grid.for_each_pair(
                positions,
                |i, j| bodies[i].radius + bodies[j].radius,
                |i, j, dist| {
                    if dist <= 1e-12 {
                        return;
                    }
                    let (pa, pb) = (positions[i], positions[j]);
                    let u = [(pb[0] - pa[0]) / dist, (pb[1] - pa[1]) / dist, (pb[2] - pa[2]) / dist];
                    let pen = bodies[i].radius + bodies[j].radius - dist;
                    let mag = params.repulsion * pen;
                    for k in 0..3 {
                        forces[i][k] -= mag * u[k];
                        forces[j][k] += mag * u[k];
                    }
                },
            );
        }
        for (b, f) in bodies.iter_mut().zip(forces.iter()) {
            if b.pinned {
                b.vel = [0.0; 3];
                continue;
            }
            for k in 0..3 {
                b.vel[k] += f[k] / b.mass * h;
                b.pos[k] += b.vel[k] * h;
            }
            for k in 0..2 {
                if b.pos[k] < b.radius {
                    b.pos[k] = b.radius;
                    b.vel[k] = b.vel[k].abs();
                } else if b.pos[k] > extent - b.radius {
                    b.pos[k] = extent - b.radius;
                    b.vel[k] = -b.vel[k].abs();
                }
            }
            let floor = field.height_at(b.pos[0], b.pos[1]) + b.radius;
            if b.pos[2] < floor {
                b.pos[2] = floor;
                b.vel[2] = 0.0;
            }
        }
    }
    for (i, b) in bodies.iter().enumerate() {
        if !b.pos.iter().chain(b.vel.iter()).all(|v| v.is_finite()) {
            return Err(i);
        }
    }
    Ok(())
}

/// Natural length of a new bond between cells at `dist` with radii `ra`, `rb`,
/// or `None` when they are farther apart than `connect_factor · min(r)`.
pub fn try_connect(dist: f64, ra: f64, rb: f64, params: &MechParams) -> Option<f64> {
    let r = ra.min(rb);
    if dist <= params.connect_factor * r {
        Some(dist.min(params.length_cap_factor * r).max(params.min_length_factor * r))
    } else {
        None
    }
}

/// Natural length for a bond created by division, where the child is placed at
/// contact distance regardless of the connection radius.
pub fn birth_length(dist: f64, ra: f64, rb: f64, params: &MechParams) -> f64 {
    let r = ra.min(rb);
    dist.min(params.length_cap_factor * r).max(params.min_length_factor * r)
}

pub fn check_break(dist: f64, natural_length: f64, params: &MechParams) -> bool {
    dist > params.break_factor * natural_length
}

/// Moves the natural length by `±δL·dt` when `|l_out| > θ_L`, clamped to
/// `[min_length_factor·r, length_cap_factor·r]` with `r` the smaller radius.
pub fn adjust_natural_length(length: f64, l_out: f64, r: f64, dt: f64, params: &MechParams) -> f64 {
    let mut l = length;
    if l_out > params.length_threshold {
        l += params.muscle_rate * dt;
    } else if l_out < -params.length_threshold {
        l -= params.muscle_rate * dt;
    }
    l.clamp(params.min_length_factor * r, params.length_cap_factor * r)
}

/// Pairs `(i, j)`, `i < j`, whose centers are closer than `r_i + r_j`,
/// sorted ascending.
pub fn contact_query(bodies: &[Body], extent: f64, grid: &mut SpatialGrid) -> Vec<(usize, usize)> {
    let r_max = bodies.iter().fold(0.0f64, |m, b| m.max(b.radius));
    let positions: Vec<[f64; 3]> = bodies.iter().map(|b| b.pos).collect();
    grid.build(positions.iter().copied(), extent, 2.0 * r_max);
    let mut out = Vec::new();
    grid.for_each_pair(
        &positions,
        |i, j| bodies[i].radius + bodies[j].radius,
        |i, j, _| out.push((i, j)),
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn body(pos: [f64; 3], r: f64) -> Body {
        Body {
            pos,
            vel: [0.0; 3],
            mass: 0.1,
            radius: r,
            pinned: false,
        }
    }

    fn no_gravity() -> MechParams {
        MechParams {
            gravity: 0.0,
            drag: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn resting_body_does_not_move() {
        let field = Heightmap::flat(32);
        let mut bodies = vec![body([5.0, 5.0, 3.0], 0.1)];
        integrate_step(&mut bodies, &[], &field, &no_gravity(), 0.05, &mut MechScratch::default()).unwrap();
        assert_eq!(bodies[0].pos, [5.0, 5.0, 3.0]);
    }

    #[test]
    fn spring_at_natural_length_is_in_equilibrium() {
        let field = Heightmap::flat(32);
        let mut bodies = vec![body([5.0, 5.0, 3.0], 0.1), body([5.5, 5.0, 3.0], 0.1)];
        let s = [Spring {
            a: 0,
            b: 1,
            natural_length: 0.5,
        }];
        integrate_step(&mut bodies, &s, &field, &no_gravity(), 0.05, &mut MechScratch::default()).unwrap();
        assert_eq!(bodies[0].pos, [5.0, 5.0, 3.0]);
        assert_eq!(bodies[1].pos, [5.5, 5.0, 3.0]);
    }

    fn oscillator_energy(b: &Body, anchor: [f64; 3], l: f64, k: f64) -> f64 {
        let v2: f64 = b.vel.iter().map(|v| v * v).sum();
        0.5 * b.mass * v2 + 0.5 * k * (distance(anchor, b.pos) - l).powi(2)
    }

    /// Damped oscillator: a free mass on a spring to a pinned anchor, integrated
    /// with a timestep 100× finer than the world step. Mechanical energy sampled
    /// once per world step falls every time, and the displacement follows the
    /// analytic underdamped solution.
    #[test]
    fn damped_oscillator_energy_decays() {
        let field = Heightmap::flat(32);
        let params = MechParams {
            repulsion: 0.0,
            substeps: 1,
            ..no_gravity()
        };
        let anchor = [10.0, 10.0, 5.0];
        let l = 0.3;
        let x0 = 0.1;
        let mut bodies = vec![
            Body {
                pinned: true,
                ..body(anchor, 0.05)
            },
            body([10.0 + l + x0, 10.0, 5.0], 0.05),
        ];
        let springs = [Spring {
            a: 0,
            b: 1,
            natural_length: l,
        }];
        let dt = 0.05 / 100.0;
        let mut scratch = MechScratch::default();
        let mut last = oscillator_energy(&bodies[1], anchor, l, params.stiffness);
        let (m, k, c) = (bodies[1].mass, params.stiffness, params.damping);
        let gamma = c / (2.0 * m);
        let wd = (k / m - gamma * gamma).sqrt();
        for step in 1..=4000 {
            integrate_step(&mut bodies, &springs, &field, &params, dt, &mut scratch).unwrap();
            if step % 100 == 0 {
                let e = oscillator_energy(&bodies[1], anchor, l, params.stiffness);
                assert!(e < last, "energy rose by step {step}");
                last = e;
            }
            let t = step as f64 * dt;
            let exact = x0 * (-gamma * t).exp() * ((wd * t).cos() + gamma / wd * (wd * t).sin());
            let x = bodies[1].pos[0] - anchor[0] - l;
            assert!((x - exact).abs() < 2e-3, "t={t}: {x} vs {exact}");
        }
        assert!(last < 1e-3 * 0.5 * k * x0 * x0);
    }

    #[test]
    fn bodies_stay_above_terrain_and_inside_walls() {
        let field = Heightmap::undulating(32, 0.4, 6.0);
        let mut bodies: Vec<Body> = (0..30)
            .map(|i| {
                let mut b = body([0.5 + i as f64, 31.8 - i as f64, 0.0], 0.1);
                b.vel = [(i as f64 - 15.0) * 3.0, 2.0, -5.0];
                b
            })
            .collect();
        let mut scratch = MechScratch::default();
        for _ in 0..200 {
            integrate_step(&mut bodies, &[], &field, &MechParams::default(), 0.05, &mut scratch).unwrap();
            for b in &bodies {
                assert!(b.pos[2] >= field.height_at(b.pos[0], b.pos[1]) + b.radius - 1e-12);
                assert!(b.pos[0] >= b.radius && b.pos[0] <= 32.0 - b.radius);
                assert!(b.pos[1] >= b.radius && b.pos[1] <= 32.0 - b.radius);
            }
        }
    }

    #[test]
    fn blowup_is_reported() {
        let field = Heightmap::flat(32);
        let mut bodies = vec![body([5.0, 5.0, 3.0], 0.1)];
        bodies[0].vel[0] = f64::NAN;
        assert_eq!(
            integrate_step(&mut bodies, &[], &field, &no_gravity(), 0.05, &mut MechScratch::default()),
            Err(0)
        );
    }

    #[test]
    fn connect_thresholds() {
        let p = MechParams::default();
        let r = 0.1;
        assert!(try_connect(1.95 * r, r, r, &p).is_some());
        assert!(try_connect(1.96 * r, r, r, &p).is_none());
        assert_eq!(try_connect(1.5 * r, r, 0.2, &p), Some(1.10 * r));
        assert_eq!(try_connect(0.5 * r, r, r, &p), Some(0.5 * r));
    }

    #[test]
    fn break_threshold() {
        let p = MechParams::default();
        assert!(!check_break(2.0 * 0.3, 0.3, &p));
        assert!(check_break(2.01 * 0.3, 0.3, &p));
    }

    #[test]
    fn natural_length_drive_and_clamps() {
        let p = MechParams::default();
        let r = 0.1;
        assert_eq!(adjust_natural_length(0.08, 0.3, r, 0.05, &p), 0.08);
        let mut l = 0.08;
        for _ in 0..10_000 {
            l = adjust_natural_length(l, -0.9, r, 0.05, &p);
            assert!(l >= p.min_length_factor * r);
        }
        assert_eq!(l, p.min_length_factor * r);
        for _ in 0..10_000 {
            l = adjust_natural_length(l, 0.9, r, 0.05, &p);
        }
        assert_eq!(l, p.length_cap_factor * r);
    }

    /// The shrink-to-break sequence: a contact-held pair whose natural length is
    /// driven down eventually exceeds the break distance.
    #[test]
    fn shrinking_bond_breaks_under_contact() {
        let field = Heightmap::flat(32);
        let p = MechParams::default();
        let r = 0.1;
        let mut bodies = vec![body([10.0, 10.0, r], r), body([10.0 + 1.5 * r, 10.0, r], r)];
        let mut length = birth_length(1.5 * r, r, r, &p);
        let mut scratch = MechScratch::default();
        let mut broke_at = None;
        for step in 0..20_000 {
            length = adjust_natural_length(length, -1.0, r, 0.05, &p);
            let s = [Spring {
                a: 0,
                b: 1,
                natural_length: length,
            }];
            integrate_step(&mut bodies, &s, &field, &p, 0.05, &mut scratch).unwrap();
            if check_break(distance(bodies[0].pos, bodies[1].pos), length, &p) {
                broke_at = Some(step);
                break;
            }
        }
        assert!(broke_at.is_some());
    }

    fn brute_force(bodies: &[Body]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..bodies.len() {
            for j in i + 1..bodies.len() {
                if distance(bodies[i].pos, bodies[j].pos) < bodies[i].radius + bodies[j].radius {
                    out.push((i, j));
                }
            }
        }
        out
    }

    #[test]
    fn contact_examples() {
        let mut grid = SpatialGrid::new();
        let eps = 1e-9;
        let apart = [body([1.0, 1.0, 0.1], 0.1), body([1.2 + eps, 1.0, 0.1], 0.1)];
        assert!(contact_query(&apart, 32.0, &mut grid).is_empty());
        let touching = [body([1.0, 1.0, 0.1], 0.1), body([1.15, 1.0, 0.1], 0.1)];
        assert_eq!(contact_query(&touching, 32.0, &mut grid), vec![(0, 1)]);
    }

    #[test]
    fn contact_matches_brute_force() {
        let mut rng = crate::engine::Rng::stream(11, 0);
        let mut grid = SpatialGrid::new();
        for _ in 0..20 {
            let bodies: Vec<Body> = (0..100)
                .map(|_| {
                    body(
                        [3.0 * rng.uniform(), 3.0 * rng.uniform(), 0.3 * rng.uniform()],
                        0.02 + 0.14 * rng.uniform(),
                    )
                })
                .collect();
            assert_eq!(contact_query(&bodies, 32.0, &mut grid), brute_force(&bodies));
        }
    }
}
