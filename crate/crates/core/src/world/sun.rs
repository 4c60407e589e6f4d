//! The sun travels back and forth along the x axis at a fixed height.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sun {
    pub x: f64,
    /// +1 or -1.
    pub direction: f64,
}

impl Sun {
    pub fn new(x: f64, span: f64) -> Self {
        Sun {
            x: x.clamp(0.0, span),
            direction: 1.0,
        }
    }
}

/// Triangle-wave update: moves `speed·dt` and reflects at `0` and `span`.
pub fn sun_step(sun: Sun, speed: f64, dt: f64, span: f64) -> Sun {
    if span <= 0.0 {
        return Sun { x: 0.0, ..sun };
    }
    if speed * dt == 0.0 {
        return sun;
    }
    let period = 2.0 * span;
    let phase = if sun.direction > 0.0 { sun.x } else { period - sun.x };
    let phase = (phase + speed * dt).rem_euclid(period);
    if phase <= span {
        Sun { x: phase, direction: 1.0 }
    } else {
        Sun {
            x: period - phase,
            direction: -1.0,
        }
    }
}
