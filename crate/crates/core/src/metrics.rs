//! Per-window metrics rows and their CSV form.

use std::fmt::Write;

pub const CSV_HEADER: &str = "step,cells,connections,transport_events,births,deaths,mutations,A";

/// Event counts accumulated since the last emitted row.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WindowCounts {
    pub transport_events: u64,
    pub births: u64,
    pub deaths: u64,
    pub mutations: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub step: u64,
    pub cells: usize,
    pub connections: usize,
    pub transport_events: u64,
    pub births: u64,
    pub deaths: u64,
    pub mutations: u64,
    pub a: f64,
}

impl MetricsRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.step,
            self.cells,
            self.connections,
            self.transport_events,
            self.births,
            self.deaths,
            self.mutations,
            self.a
        )
    }
}

pub fn to_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", r.csv_line());
    }
    out
}
