//! Numerical checks of the energy model: the decay law, the fixed point of
//! periodic feeding, geometric photon waiting times and the stochastic
//! equilibrium energy.

use std::fmt;

use crate::energetics::step_decay;
use crate::engine::Rng;
use crate::error::EnergyError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative error of iterated decay against `E₀e^{−Ut}`.
    pub decay: f64,
    /// Absolute error of the fixed-point recurrence.
    pub fixed_point: f64,
    /// Relative error of the mean waiting time against `1/p`.
    pub waiting: f64,
    /// Relative error of the Monte-Carlo mean energy against `E∞`.
    pub e_infinity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            decay: 1e-4,
            fixed_point: 1e-9,
            waiting: 0.01,
            e_infinity: 0.02,
        }
    }
}

impl Tolerances {
    pub fn uniform(tol: f64) -> Self {
        Tolerances {
            decay: tol,
            fixed_point: tol,
            waiting: tol,
            e_infinity: tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppendixParams {
    pub e0: f64,
    pub decay_u: f64,
    pub decay_t: f64,
    pub decay_steps: u64,
    pub fixed_u: f64,
    pub fixed_period: f64,
    pub fixed_de: f64,
    pub fixed_iterations: u64,
    /// Per-step photon probability.
    pub p: f64,
    pub arrivals: u64,
    /// Decay rate of the Monte-Carlo cell, per step.
    pub mc_u: f64,
    pub mc_de: f64,
    pub seed: u64,
}

impl Default for AppendixParams {
    fn default() -> Self {
        AppendixParams {
            e0: 100.0,
            decay_u: 0.25,
            decay_t: 10.0,
            decay_steps: 1_000_000,
            fixed_u: 0.5,
            fixed_period: 1.0,
            fixed_de: 1.0,
            fixed_iterations: 1000,
            p: 0.2,
            arrivals: 100_000,
            mc_u: 0.002,
            mc_de: 1.0,
            seed: 1,
        }
    }
}

impl AppendixParams {
    /// Overrides every decay rate.
    pub fn with_u(mut self, u: f64) -> Self {
        self.decay_u = u;
        self.fixed_u = u;
        self.mc_u = u;
        self
    }

    pub fn validate(&self) -> Result<(), EnergyError> {
        for u in [self.decay_u, self.fixed_u, self.mc_u] {
            if !(u > 0.0) {
                return Err(EnergyError::NonPositiveDecay(u));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub expected: f64,
    pub error: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.error <= self.tolerance
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<12} measured {:.10} expected {:.10} error {:.3e} tolerance {:.1e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.expected,
            self.error,
            self.tolerance
        )
    }
}

fn relative(measured: f64, expected: f64) -> f64 {
    (measured - expected).abs() / expected.abs()
}

/// Iterates `E ← E(1 − U dt)` for `steps` steps of `dt = t / steps`.
pub fn iterate_decay(e0: f64, u: f64, t: f64, steps: u64) -> Result<f64, EnergyError> {
    let dt = t / steps as f64;
    (0..steps).try_fold(e0, |e, _| step_decay(e, u, dt))
}

/// `f_{n+1} = e^{−UT} f_n + ΔE_L` from `f_0 = 0`.
pub fn fixed_point_iterate(u: f64, period: f64, de: f64, iterations: u64) -> f64 {
    let r = (-u * period).exp();
    (0..iterations).fold(0.0, |f, _| r * f + de)
}

/// `ΔE_L / (1 − e^{−UT})`.
pub fn fixed_point_limit(u: f64, period: f64, de: f64) -> f64 {
    de / -(-u * period).exp_m1()
}

/// Mean number of steps per photon over `arrivals` arrivals.
pub fn mean_waiting_time(p: f64, arrivals: u64, rng: &mut Rng) -> f64 {
    let mut steps = 0u64;
    for _ in 0..arrivals {
        loop {
            steps += 1;
            if rng.bernoulli(p) {
                break;
            }
        }
    }
    steps as f64 / arrivals as f64
}

/// Mean post-arrival energy of a cell decaying as `e^{−U}` per step and
/// gaining `de` per photon, after a burn-in of a tenth of the arrivals.
pub fn stochastic_energy(p: f64, u: f64, de: f64, arrivals: u64, rng: &mut Rng) -> f64 {
    let keep = (-u).exp();
    let burn = arrivals / 10;
    let (mut e, mut sum, mut n) = (0.0, 0.0, 0u64);
    for k in 0..arrivals + burn {
        loop {
            e *= keep;
            if rng.bernoulli(p) {
                break;
            }
        }
        e += de;
        if k >= burn {
            sum += e;
            n += 1;
        }
    }
    sum / n as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed()).collect()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Runs all four checks.
pub fn validate(params: &AppendixParams, tol: &Tolerances) -> Result<Report, EnergyError> {
    params.validate()?;
    let p = params;
    let decayed = iterate_decay(p.e0, p.decay_u, p.decay_t, p.decay_steps)?;
    let exact = p.e0 * (-p.decay_u * p.decay_t).exp();
    let f = fixed_point_iterate(p.fixed_u, p.fixed_period, p.fixed_de, p.fixed_iterations);
    let limit = fixed_point_limit(p.fixed_u, p.fixed_period, p.fixed_de);
    let mut rng = Rng::from_key(p.seed);
    let wait = mean_waiting_time(p.p, p.arrivals, &mut rng);
    let mean_e = stochastic_energy(p.p, p.mc_u, p.mc_de, p.arrivals, &mut rng);
    let e_inf = fixed_point_limit(p.mc_u, 1.0 / p.p, p.mc_de);
    Ok(Report {
        checks: vec![
            Check {
                name: "decay",
                measured: decayed,
                expected: exact,
                error: relative(decayed, exact),
                tolerance: tol.decay,
            },
            Check {
                name: "fixed-point",
                measured: f,
                expected: limit,
                error: (f - limit).abs(),
                tolerance: tol.fixed_point,
            },
            Check {
                name: "waiting-time",
                measured: wait,
                expected: 1.0 / p.p,
                error: relative(wait, 1.0 / p.p),
                tolerance: tol.waiting,
            },
            Check {
                name: "e-infinity",
                measured: mean_e,
                expected: e_inf,
                error: relative(mean_e, e_inf),
                tolerance: tol.e_infinity,
            },
        ],
    })
}
