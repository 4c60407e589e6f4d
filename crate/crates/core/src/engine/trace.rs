//! Ordered log of structural events in a field.

use std::fmt;

use crate::genome::ActionKind;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    Birth { parent: u64, child: u64 },
    Death { cell: u64 },
    BondFormed { a: u64, b: u64 },
    BondBroken { a: u64, b: u64 },
    Read { cell: u64, action: ActionKind, position: usize },
    Eat { eater: u64, prey: u64, amount: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEvent {
    pub step: u64,
    pub kind: EventKind,
}

impl TraceEvent {
    /// Ids of all cells the event refers to.
    pub fn cells(&self) -> [Option<u64>; 2] {
        match self.kind {
            EventKind::Birth { parent, child } => [Some(parent), Some(child)],
            EventKind::Death { cell } | EventKind::Read { cell, .. } => [Some(cell), None],
            EventKind::BondFormed { a, b } | EventKind::BondBroken { a, b } => [Some(a), Some(b)],
            EventKind::Eat { eater, prey, .. } => [Some(eater), Some(prey)],
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            EventKind::Birth { .. } => "birth",
            EventKind::Death { .. } => "death",
            EventKind::BondFormed { .. } => "bond",
            EventKind::BondBroken { .. } => "unbond",
            EventKind::Read { .. } => "read",
            EventKind::Eat { .. } => "eat",
        }
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.step, self.name())?;
        match self.kind {
            EventKind::Birth { parent, child } => write!(f, " {parent} {child}"),
            EventKind::Death { cell } => write!(f, " {cell}"),
            EventKind::BondFormed { a, b } | EventKind::BondBroken { a, b } => write!(f, " {a} {b}"),
            EventKind::Read { cell, action, position } => write!(f, " {cell} {} {position}", action.name()),
            EventKind::Eat { eater, prey, amount } => write!(f, " {eater} {prey} {amount}"),
        }
    }
}

/// Selects events from a log.
#[derive(Debug, Clone, Default)]
pub struct TraceFilter {
    /// Keep only events touching this cell.
    pub cell: Option<u64>,
    /// Keep only these event names (`birth`, `death`, `bond`, `unbond`, `read`, `eat`).
    pub kinds: Option<Vec<String>>,
    pub from_step: Option<u64>,
    pub to_step: Option<u64>,
}

pub fn trace_events(log: &[TraceEvent], filter: &TraceFilter) -> Vec<TraceEvent> {
    log.iter()
        .filter(|e| filter.cell.map_or(true, |c| e.cells().contains(&Some(c))))
        .filter(|e| filter.kinds.as_ref().map_or(true, |k| k.iter().any(|k| k == e.name())))
        .filter(|e| filter.from_step.map_or(true, |s| e.step >= s))
        .filter(|e| filter.to_step.map_or(true, |s| e.step <= s))
        .copied()
        .collect()
}
