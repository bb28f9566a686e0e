use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::events::EventRecord;
use crate::error::{invalid, Error, Result};
use crate::model::CouponInstance;
use crate::montecarlo::BatchStats;

/// Half-open acceptance window `[start_ps, end_ps)` inside a bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start_ps: u32,
    pub end_ps: u32,
}

impl TimeWindow {
    pub fn new(start_ps: u32, end_ps: u32, bin_ps: u32) -> Result<Self> {
        if start_ps >= end_ps || end_ps > bin_ps {
            return Err(invalid(
                "window",
                format!("need 0 <= start < end <= {bin_ps}, got [{start_ps}, {end_ps})"),
            ));
        }
        Ok(Self { start_ps, end_ps })
    }

    pub fn full(bin_ps: u32) -> Self {
        Self { start_ps: 0, end_ps: bin_ps }
    }

    pub fn width(&self) -> u32 {
        self.end_ps - self.start_ps
    }

    pub fn contains(&self, offset_ps: u32) -> bool {
        (self.start_ps..self.end_ps).contains(&offset_ps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowedStats {
    pub window: TimeWindow,
    /// Events that fall inside the window.
    pub detection_events: u64,
    pub stats: BatchStats,
}

/// Drops events outside `window`, rebuilds per-period click sets and decodes
/// them (accept iff exactly m bins clicked). `records` must be sorted by
/// period, as [`ingest`](super::ingest) returns them.
pub fn apply_window(
    records: &[EventRecord],
    window: TimeWindow,
    instance: &CouponInstance,
    periods: u64,
    intensity: f64,
) -> Result<WindowedStats> {
    if let Some(r) = records.iter().find(|r| r.period_id >= periods) {
        return Err(invalid("periods", format!("event in period {} but only {periods} periods", r.period_id)));
    }
    let m = instance.m();
    let mut detection_events = 0u64;
    let (mut accepted, mut correct) = (0u64, 0u64);
    let mut bins: Vec<u32> = Vec::new();
    for group in records.chunk_by(|a, b| a.period_id == b.period_id) {
        bins.clear();
        for r in group.iter().filter(|r| window.contains(r.offset_ps)) {
            detection_events += 1;
            bins.push(r.bin_index);
        }
        bins.sort_unstable();
        bins.dedup();
        if bins.len() == m {
            accepted += 1;
            if bins.iter().all(|&b| !instance.contains(b as usize)) {
                correct += 1;
            }
        }
    }
    let stats = BatchStats::from_counts(instance.n() as u64, intensity, periods, accepted, correct)?;
    Ok(WindowedStats { window, detection_events, stats })
}

/// Per-bin click tallies through a window: bins of S̄ (lit by the `−α`
/// pulses) and bins of S (lit only by false clicks), each bin-period counted
/// once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClickRates {
    pub minus_clicks: u64,
    pub minus_trials: u64,
    pub plus_clicks: u64,
    pub plus_trials: u64,
}

pub fn click_rates(records: &[EventRecord], window: TimeWindow, instance: &CouponInstance, periods: u64) -> ClickRates {
    let mut r = ClickRates {
        minus_trials: periods * instance.m() as u64,
        plus_trials: periods * instance.k() as u64,
        ..Default::default()
    };
    let mut bins: Vec<u32> = Vec::new();
    for group in records.chunk_by(|a, b| a.period_id == b.period_id) {
        bins.clear();
        bins.extend(group.iter().filter(|e| window.contains(e.offset_ps)).map(|e| e.bin_index));
        bins.sort_unstable();
        bins.dedup();
        for &b in &bins {
            if instance.contains(b as usize) {
                r.plus_clicks += 1;
            } else {
                r.minus_clicks += 1;
            }
        }
    }
    r
}

/// Every window with both edges on the `step` grid (the bin end is always a
/// valid edge).
pub fn window_grid(bin_ps: u32, step: u32) -> Result<Vec<TimeWindow>> {
    if step == 0 || step > bin_ps {
        return Err(invalid("grid_step", format!("{step} must be in 1..={bin_ps}")));
    }
    let mut edges: Vec<u32> = (0..bin_ps).step_by(step as usize).collect();
    edges.push(bin_ps);
    let mut out = Vec::new();
    for (i, &s) in edges.iter().enumerate() {
        for &e in &edges[i + 1..] {
            out.push(TimeWindow { start_ps: s, end_ps: e });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowChoice {
    pub windowed: WindowedStats,
    /// `n·I / success_hat` for the chosen window.
    pub quantum_samples: f64,
}

/// Exhaustive window traversal: the window with the smallest estimated
/// `R = n·I / success_hat` among those with `correct_hat ≥ constraint`.
/// Ties go to the wider window, then the earlier start.
pub fn window_search(
    records: &[EventRecord],
    instance: &CouponInstance,
    periods: u64,
    intensity: f64,
    constraint: f64,
    bin_ps: u32,
    step: u32,
) -> Result<WindowChoice> {
    if records.is_empty() {
        return Err(invalid("events", "no events to search"));
    }
    let windows = window_grid(bin_ps, step)?;
    let evaluated: Vec<WindowedStats> = windows
        .par_iter()
        .map(|&w| apply_window(records, w, instance, periods, intensity))
        .collect::<Result<_>>()?;

    let mut best: Option<WindowChoice> = None;
    for ws in evaluated {
        let (Some(c), Some(r)) = (ws.stats.correct_hat, ws.stats.quantum_samples_hat) else {
            continue;
        };
        if c < constraint {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => {
                r < b.quantum_samples
                    || (r == b.quantum_samples && ws.window.width() > b.windowed.window.width())
            }
        };
        if better {
            best = Some(WindowChoice { windowed: ws, quantum_samples: r });
        }
    }
    best.ok_or(Error::Infeasible { constraint })
}
