//! Intensity sweeps, constrained cost minimisation and the classical/quantum
//! crossover.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{classical_limit, ProtocolStats};
use crate::error::{invalid, Error, Result};
use crate::model::ChannelParams;

/// Default search grid: 400 log-spaced intensities over [1e-3, 1e2].
pub const GRID_POINTS: usize = 400;
pub const GRID_MIN: f64 = 1e-3;
pub const GRID_MAX: f64 = 1e2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub intensity: f64,
    pub efficiency: f64,
    pub correct_prob: f64,
    pub success_prob: f64,
    pub quantum_samples: f64,
}

impl SweepPoint {
    pub fn at(params: &ChannelParams, n: u64, m: u64, intensity: f64) -> Result<Self> {
        if m >= n {
            return Err(invalid("m", format!("must be < n = {n}")));
        }
        let s = ProtocolStats::compute(params, intensity, m, n - m)?;
        Ok(Self {
            intensity,
            efficiency: s.efficiency,
            correct_prob: s.correct_prob,
            success_prob: s.success_prob,
            quantum_samples: s.quantum_samples,
        })
    }
}

/// Evaluates the protocol on `steps` uniformly spaced intensities.
pub fn sweep_intensity(
    params: &ChannelParams,
    n: u64,
    m: u64,
    i_min: f64,
    i_max: f64,
    steps: usize,
) -> Result<Vec<SweepPoint>> {
    if !(i_min > 0.0 && i_min < i_max && i_max.is_finite()) {
        return Err(invalid("range", format!("need 0 < i_min < i_max, got [{i_min}, {i_max}]")));
    }
    if steps < 2 {
        return Err(invalid("steps", "must be >= 2"));
    }
    let h = (i_max - i_min) / (steps - 1) as f64;
    (0..steps)
        .map(|j| {
            let i = if j + 1 == steps { i_max } else { i_min + h * j as f64 };
            SweepPoint::at(params, n, m, i)
        })
        .collect()
}

/// `count` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|j| {
            if j == 0 {
                lo
            } else if j + 1 == count {
                hi
            } else {
                (a + (b - a) * j as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

/// Minimises `f` on `[lo, hi]` by golden-section search. Ties resolve
/// toward the lower end.
pub fn golden_section_min<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, rel_tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > rel_tol * lo.abs().max(f64::MIN_POSITIVE) {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    let candidates = [lo, mid, hi];
    let mut best = lo;
    let mut best_val = f(lo);
    for &x in &candidates[1..] {
        let v = f(x);
        if v < best_val {
            best = x;
            best_val = v;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub point: SweepPoint,
    /// Grid index of the best feasible grid point before refinement.
    pub grid_index: usize,
}

/// Search options for [`optimal_intensity_with`].
#[derive(Debug, Clone)]
pub struct SearchGrid {
    pub intensities: Vec<f64>,
}

impl Default for SearchGrid {
    fn default() -> Self {
        Self { intensities: log_grid(GRID_MIN, GRID_MAX, GRID_POINTS) }
    }
}

/// Minimises `R = n·I / P_suc` subject to `P(m, n−m) ≥ constraint` on the
/// default grid.
pub fn optimal_intensity(params: &ChannelParams, n: u64, m: u64, constraint: f64) -> Result<Optimum> {
    optimal_intensity_with(params, n, m, constraint, &SearchGrid::default())
}

pub fn optimal_intensity_with(
    params: &ChannelParams,
    n: u64,
    m: u64,
    constraint: f64,
    grid: &SearchGrid,
) -> Result<Optimum> {
    if !(0.0..1.0).contains(&constraint) {
        return Err(invalid("constraint", format!("{constraint} is outside [0, 1)")));
    }
    let points: Vec<SweepPoint> = grid
        .intensities
        .iter()
        .map(|&i| SweepPoint::at(params, n, m, i))
        .collect::<Result<_>>()?;
    let feasible = |p: &SweepPoint| p.correct_prob >= constraint && p.quantum_samples.is_finite();

    let mut best: Option<usize> = None;
    for (j, p) in points.iter().enumerate() {
        if feasible(p) && best.is_none_or(|b| p.quantum_samples < points[b].quantum_samples) {
            best = Some(j);
        }
    }
    let j = best.ok_or(Error::Infeasible { constraint })?;

    // Refine inside the neighbouring grid cells, clipped to the feasible
    // part when a neighbour violates the constraint.
    let last = points.len() - 1;
    let mut lo = points[j.saturating_sub(1)].intensity;
    let mut hi = points[(j + 1).min(last)].intensity;
    if j > 0 && !feasible(&points[j - 1]) {
        lo = feasibility_edge(params, n, m, constraint, points[j - 1].intensity, points[j].intensity)?;
    }
    if j < last && !feasible(&points[j + 1]) {
        hi = feasibility_edge(params, n, m, constraint, points[j + 1].intensity, points[j].intensity)?;
    }
    let cost = |i: f64| match SweepPoint::at(params, n, m, i) {
        Ok(p) if feasible(&p) => p.quantum_samples,
        _ => f64::INFINITY,
    };
    let refined = if hi > lo { golden_section_min(cost, lo, hi, 1e-10) } else { points[j].intensity };
    let candidate = SweepPoint::at(params, n, m, refined)?;
    let point = if feasible(&candidate) && candidate.quantum_samples <= points[j].quantum_samples {
        candidate
    } else {
        points[j]
    };
    Ok(Optimum { point, grid_index: j })
}

/// Bisects between an infeasible and a feasible intensity and returns the
/// feasible side of the boundary.
fn feasibility_edge(
    params: &ChannelParams,
    n: u64,
    m: u64,
    constraint: f64,
    mut bad: f64,
    mut good: f64,
) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (bad + good);
        if mid == bad || mid == good {
            break;
        }
        if SweepPoint::at(params, n, m, mid)?.correct_prob >= constraint {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(good)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossoverPoint {
    pub n: u64,
    /// Constrained optimum; `None` when the constraint is infeasible at n.
    pub optimum: Option<SweepPoint>,
    pub classical_cost: f64,
}

impl CrossoverPoint {
    pub fn quantum_cost(&self) -> Option<f64> {
        self.optimum.map(|p| p.quantum_samples)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossoverReport {
    pub points: Vec<CrossoverPoint>,
    /// Largest n with quantum cost below the classical cost.
    pub crossover_n: Option<u64>,
    /// Largest n with quantum cost below half the classical cost.
    pub half_cost_n: Option<u64>,
}

/// Compares the constrained quantum optimum against `k·ln k` with
/// `k = n − m` at each grid size.
pub fn crossover(params: &ChannelParams, m: u64, constraint: f64, n_grid: &[u64]) -> Result<CrossoverReport> {
    if n_grid.is_empty() {
        return Err(invalid("n_grid", "must not be empty"));
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("n_grid", "must be strictly increasing"));
    }
    if n_grid[0] <= m {
        return Err(invalid("n_grid", format!("every n must exceed m = {m}")));
    }
    if !(0.0..1.0).contains(&constraint) {
        return Err(invalid("constraint", format!("{constraint} is outside [0, 1)")));
    }
    let grid = SearchGrid::default();
    let points: Vec<CrossoverPoint> = n_grid
        .par_iter()
        .map(|&n| {
            let optimum = match optimal_intensity_with(params, n, m, constraint, &grid) {
                Ok(o) => Some(o.point),
                Err(Error::Infeasible { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(CrossoverPoint { n, optimum, classical_cost: classical_limit(n - m) })
        })
        .collect::<Result<_>>()?;
    let largest_below = |factor: f64| {
        points
            .iter()
            .filter(|p| p.quantum_cost().is_some_and(|q| q < factor * p.classical_cost))
            .map(|p| p.n)
            .max()
    };
    Ok(CrossoverReport { crossover_n: largest_below(1.0), half_cost_n: largest_below(0.5), points })
}

/// Inclusive arithmetic grid `start:stop:step`.
pub fn arithmetic_grid(start: u64, stop: u64, step: u64) -> Result<Vec<u64>> {
    if step == 0 || start > stop {
        return Err(invalid("grid", format!("bad range {start}:{stop}:{step}")));
    }
    Ok((start..=stop).step_by(step as usize).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1b() -> ChannelParams {
        ChannelParams::reference()
    }

    #[test]
    fn sweep_validates_range() {
        assert!(sweep_intensity(&fig1b(), 10, 1, 0.0, 1.0, 5).is_err());
        assert!(sweep_intensity(&fig1b(), 10, 1, 2.0, 1.0, 5).is_err());
        assert!(sweep_intensity(&fig1b(), 10, 1, 0.5, 1.0, 1).is_err());
        let pts = sweep_intensity(&fig1b(), 10, 1, 0.5, 1.0, 6).unwrap();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[5].intensity, 1.0);
        assert!((pts[1].intensity - 0.6).abs() < 1e-15);
    }

    #[test]
    fn fig1b_shapes() {
        let pts = sweep_intensity(&fig1b(), 4000, 1, 0.1, 10.0, 200).unwrap();
        assert!(pts.windows(2).all(|w| w[1].correct_prob >= w[0].correct_prob));
        let (jmax, _) = pts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.success_prob.total_cmp(&b.1.success_prob))
            .unwrap();
        assert!(jmax > 0 && jmax < pts.len() - 1, "interior maximum expected");
        assert!(pts[..=jmax].windows(2).all(|w| w[1].success_prob >= w[0].success_prob));
        assert!(pts[jmax..].windows(2).all(|w| w[1].success_prob <= w[0].success_prob));
        // efficiency also rises then falls
        let (emax, _) = pts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.efficiency.total_cmp(&b.1.efficiency))
            .unwrap();
        assert!(emax > 0 && emax < pts.len() - 1);
    }

    #[test]
    fn perfect_visibility_success_monotone() {
        let p = ChannelParams::new(0.68, 0.0, 1.0).unwrap();
        let pts = sweep_intensity(&p, 4000, 1, 0.1, 10.0, 200).unwrap();
        assert!(pts.windows(2).all(|w| w[1].success_prob >= w[0].success_prob));
    }

    #[test]
    fn golden_section_quadratic() {
        let x = golden_section_min(|x| (x - 1.7).powi(2), 0.0, 5.0, 1e-12);
        assert!((x - 1.7).abs() < 1e-6);
        // monotone increasing: lower edge
        let x = golden_section_min(|x| x, 2.0, 3.0, 1e-12);
        assert_eq!(x, 2.0);
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-3, 1e2, 400);
        assert_eq!(g.len(), 400);
        assert_eq!(g[0], 1e-3);
        assert_eq!(g[399], 1e2);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn optimum_beats_classical_at_4000() {
        let opt = optimal_intensity(&fig1b(), 4000, 1, 0.9).unwrap();
        assert!(opt.point.correct_prob >= 0.9);
        assert!(opt.point.quantum_samples < classical_limit(3999));
        assert!((classical_limit(3999) - 3.32e4).abs() < 50.0);
    }

    #[test]
    fn optimum_is_locally_optimal_among_feasible_neighbours() {
        let grid = SearchGrid::default();
        for (n, c) in [(4000u64, 0.9), (12_000, 0.9), (20_000, 0.9), (4000, 0.0), (8000, 0.5)] {
            let opt = optimal_intensity_with(&fig1b(), n, 1, c, &grid).unwrap();
            assert!(opt.point.correct_prob >= c);
            let j = opt.grid_index;
            for nb in [j.checked_sub(1), Some(j + 1)].into_iter().flatten() {
                if let Some(&i) = grid.intensities.get(nb) {
                    let p = SweepPoint::at(&fig1b(), n, 1, i).unwrap();
                    if p.correct_prob >= c {
                        assert!(opt.point.quantum_samples <= p.quantum_samples);
                    }
                }
            }
        }
    }

    #[test]
    fn unconstrained_optimum_sits_at_lower_edge() {
        // R = nI/P_suc grows with I on this grid, so the smallest intensity wins
        let opt = optimal_intensity(&fig1b(), 4000, 1, 0.0).unwrap();
        assert_eq!(opt.grid_index, 0);
    }

    #[test]
    fn poor_visibility_is_infeasible() {
        let p = ChannelParams::new(0.68, 1e-8, 0.9).unwrap();
        // brute-force scan confirms the constraint is unreachable
        let best = log_grid(1e-3, 1e2, 2000)
            .into_iter()
            .map(|i| SweepPoint::at(&p, 100_000, 1, i).unwrap().correct_prob)
            .fold(0.0, f64::max);
        assert!(best < 0.9);
        assert!(matches!(
            optimal_intensity(&p, 100_000, 1, 0.9),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn constraint_range_checked() {
        assert!(optimal_intensity(&fig1b(), 100, 1, 1.0).is_err());
        assert!(optimal_intensity(&fig1b(), 100, 1, -0.1).is_err());
    }

    #[test]
    fn crossover_validation() {
        assert!(crossover(&fig1b(), 1, 0.9, &[]).is_err());
        assert!(crossover(&fig1b(), 1, 0.9, &[10, 5]).is_err());
        assert!(crossover(&fig1b(), 3, 0.9, &[3, 10]).is_err());
        assert!(arithmetic_grid(10, 5, 1).is_err());
        assert_eq!(arithmetic_grid(1000, 3000, 1000).unwrap(), vec![1000, 2000, 3000]);
    }

    #[test]
    fn ideal_hardware_never_crosses() {
        // from n = 5 up; at n = 3 the classical 2·ln 2 is below the n/2 floor
        let grid = arithmetic_grid(5, 40_005, 2000).unwrap();
        let r = crossover(&ChannelParams::ideal(), 1, 0.9, &grid).unwrap();
        for p in &r.points {
            assert!(p.quantum_cost().unwrap() < p.classical_cost, "n={}", p.n);
        }
        assert_eq!(r.crossover_n, grid.last().copied());
    }

    #[test]
    fn infeasible_points_are_marked_not_fatal() {
        let p = ChannelParams::new(0.68, 1e-8, 0.9).unwrap();
        let r = crossover(&p, 1, 0.9, &[10, 100_000]).unwrap();
        assert!(r.points[0].optimum.is_some());
        assert!(r.points[1].optimum.is_none());
    }
}
