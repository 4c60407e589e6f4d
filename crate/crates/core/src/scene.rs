//! Line-oriented scene export for external plotting.
//!
//! ```text
//! # bookcell scene v1
//! # cell <field> <id> <x> <y> <z> <radius> <r> <g> <b> <energy>
//! # bond <field> <a> <b> <natural_length>
//! # frame <step>
//! cell 0 1 16.0 16.0 0.1 0.1 0 0 0 4.5
//! bond 0 1 2 0.2
//! ```
//!
//! Lines starting with `#` are comments; each frame opens with a
//! `# frame <step>` comment. Colors are the light a cell does not absorb.

use std::fmt::Write as _;

use crate::engine::Simulation;
use crate::world::World;

pub const SCENE_HEADER: &str = "# bookcell scene v1\n\
# cell <field> <id> <x> <y> <z> <radius> <r> <g> <b> <energy>\n\
# bond <field> <a> <b> <natural_length>\n";

#[derive(Debug, Clone, PartialEq)]
pub struct SceneCell {
    pub field: usize,
    pub id: u64,
    pub pos: [f64; 3],
    pub radius: f64,
    pub color: [f64; 3],
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneBond {
    pub field: usize,
    pub a: u64,
    pub b: u64,
    pub natural_length: f64,
}

/// Every cell and bond of one step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SceneFrame {
    pub step: u64,
    pub cells: Vec<SceneCell>,
    pub bonds: Vec<SceneBond>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("scene line {line}: {message}")]
pub struct SceneParseError {
    pub line: usize,
    pub message: String,
}

impl SceneFrame {
    pub fn from_world(field: usize, world: &World) -> Self {
        let mut f = SceneFrame {
            step: world.step_count(),
            ..Default::default()
        };
        f.add_world(field, world);
        f
    }

    pub fn from_simulation(sim: &Simulation) -> Self {
        let mut f = SceneFrame {
            step: sim.step_count(),
            ..Default::default()
        };
        for (i, w) in sim.fields().iter().enumerate() {
            f.add_world(i, w);
        }
        f
    }

    fn add_world(&mut self, field: usize, world: &World) {
        self.cells.extend(world.cells().iter().map(|c| SceneCell {
            field,
            id: c.id,
            pos: c.pos,
            radius: c.radius,
            color: c.color(),
            energy: c.energy,
        }));
        self.bonds.extend(world.bonds().iter().map(|(&(a, b), bond)| SceneBond {
            field,
            a,
            b,
            natural_length: bond.natural_length,
        }));
    }

    /// The frame's lines, starting with its `# frame` marker.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# frame {}", self.step);
        for c in &self.cells {
            let _ = writeln!(
                s,
                "cell {} {} {} {} {} {} {} {} {} {}",
                c.field, c.id, c.pos[0], c.pos[1], c.pos[2], c.radius, c.color[0], c.color[1], c.color[2], c.energy
            );
        }
        for b in &self.bonds {
            let _ = writeln!(s, "bond {} {} {} {}", b.field, b.a, b.b, b.natural_length);
        }
        s
    }
}

/// Parses scene text back into frames. Records before the first frame
/// marker belong to a frame at step 0.
pub fn parse(text: &str) -> Result<Vec<SceneFrame>, SceneParseError> {
    let mut frames: Vec<SceneFrame> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let err = |m: &str| SceneParseError {
            line: n + 1,
            message: m.into(),
        };
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("# frame ") {
            let step = rest.trim().parse().map_err(|_| err("bad frame step"))?;
            frames.push(SceneFrame {
                step,
                ..Default::default()
            });
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let num = |i: usize| -> Result<f64, SceneParseError> {
            parts.get(i).and_then(|s| s.parse().ok()).ok_or_else(|| err("bad number"))
        };
        let int = |i: usize| -> Result<u64, SceneParseError> {
            parts.get(i).and_then(|s| s.parse().ok()).ok_or_else(|| err("bad integer"))
        };
        if frames.is_empty() {
            frames.push(SceneFrame::default());
        }
        let frame = frames.last_mut().expect("frame exists");
        match parts[0] {
            "cell" if parts.len() == 11 => frame.cells.push(SceneCell {
                field: int(1)? as usize,
                id: int(2)?,
                pos: [num(3)?, num(4)?, num(5)?],
                radius: num(6)?,
                color: [num(7)?, num(8)?, num(9)?],
                energy: num(10)?,
            }),
            "bond" if parts.len() == 5 => frame.bonds.push(SceneBond {
                field: int(1)? as usize,
                a: int(2)?,
                b: int(3)?,
                natural_length: num(4)?,
            }),
            _ => return Err(err("unknown record")),
        }
    }
    Ok(frames)
}
