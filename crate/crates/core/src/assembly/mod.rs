//! Order-by-order summation with a convergence controller, force
//! evaluation and channel assembly.
//!
//! The controller adds reflection orders `r = 2, 4, …` (even channel) and
//! `r = 3, 5, …` (odd channel) until the successive relative difference of
//! the partial sums drops below the tolerance. Partial sums carry an `O(1/r)`
//! truncation error, so the reported values are tail-corrected: the even
//! channel by its closed-form lattice sum, the odd channel by a least-squares
//! fit `E_r ≈ E_∞ + C/r + D/r²` over the late orders.

pub mod sweep;

use serde::{Deserialize, Serialize};

use crate::channels::{pfa_energy, pfa_force, EnergyBreakdown, ForceBreakdown};
use crate::error::{Error, Result};
use crate::even::{self, EvenSettings};
use crate::geometry::Geometry;
use crate::numerics::{least_squares, linear_fit, NeumaierSum};
use crate::odd::{self, OddSettings};

pub use sweep::{sweep_a, sweep_h, Extremum, HSweep, Normalization, SweepRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    Even,
    Odd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Tolerance,
    Cap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub channel: Channel,
    pub orders_evaluated: Vec<u64>,
    pub partial_values: Vec<f64>,
    /// `(E_{next} − E_r)/E_r` between consecutive evaluated orders.
    pub successive_rel_diffs: Vec<f64>,
    /// Log-log slope of `|successive_rel_diffs|` against `r` over the upper
    /// half of the evaluated orders; needs at least four points.
    pub fitted_slope: Option<f64>,
    pub terminated_by: Termination,
    /// Tail-corrected value reported for the channel.
    pub value: f64,
}

impl ConvergenceReport {
    fn new(channel: Channel, orders: Vec<u64>, partials: Vec<f64>, terminated_by: Termination, value: f64) -> Self {
        let successive_rel_diffs: Vec<f64> =
            partials.windows(2).map(|w| (w[1] - w[0]) / w[0]).collect();
        let fitted_slope = slope_upper_half(&orders, &successive_rel_diffs);
        ConvergenceReport {
            channel,
            orders_evaluated: orders,
            partial_values: partials,
            successive_rel_diffs,
            fitted_slope,
            terminated_by,
            value,
        }
    }

    pub fn final_order(&self) -> u64 {
        self.orders_evaluated.last().copied().unwrap_or(0)
    }

    pub fn converged(&self) -> bool {
        self.terminated_by == Termination::Tolerance
    }

    /// Log-log slope over `lo ≤ r ≤ hi`.
    pub fn slope_between(&self, lo: u64, hi: u64) -> Option<f64> {
        let idx: Vec<usize> = (0..self.successive_rel_diffs.len())
            .filter(|&i| (lo..=hi).contains(&self.orders_evaluated[i]))
            .collect();
        slope_of(&self.orders_evaluated, &self.successive_rel_diffs, &idx)
    }
}

fn slope_of(orders: &[u64], diffs: &[f64], idx: &[usize]) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = idx
        .iter()
        .filter(|&&i| diffs[i] != 0.0 && diffs[i].is_finite())
        .map(|&i| ((orders[i] as f64).ln(), diffs[i].abs().ln()))
        .unzip();
    if x.len() < 4 {
        return None;
    }
    linear_fit(&x, &y).map(|f| f.slope)
}

fn slope_upper_half(orders: &[u64], diffs: &[f64]) -> Option<f64> {
    let last = *orders.last()?;
    let idx: Vec<usize> = (0..diffs.len()).filter(|&i| 2 * orders[i] >= last).collect();
    slope_of(orders, diffs, &idx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssemblySettings {
    /// Relative tolerance on successive partial sums.
    pub tolerance: f64,
    /// Highest reflection order the controller may reach.
    pub max_order: u64,
    /// Orders below this are always evaluated.
    pub min_order: u64,
    /// Central-difference step for the odd force, as a fraction of `a`.
    /// `None` matches the step to the tolerance: `√tol`.
    pub relative_step: Option<f64>,
    pub even: EvenSettings,
    pub odd: OddSettings,
}

impl Default for AssemblySettings {
    fn default() -> Self {
        AssemblySettings {
            tolerance: 1e-4,
            max_order: 401,
            min_order: 21,
            relative_step: None,
            even: EvenSettings::default(),
            odd: OddSettings::default(),
        }
    }
}

impl AssemblySettings {
    pub fn with_tolerance(tolerance: f64) -> Self {
        AssemblySettings { tolerance, ..Default::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be in (0, 1), got {}", self.tolerance)));
        }
        if self.max_order < 3 {
            return Err(Error::InvalidArgument(format!("max order must be >= 3, got {}", self.max_order)));
        }
        Ok(())
    }

    pub fn step(&self, a: f64) -> f64 {
        a * self.relative_step.unwrap_or(self.tolerance.sqrt()).min(0.25)
    }

    fn odd_cap(&self) -> u64 {
        if self.max_order % 2 == 1 {
            self.max_order
        } else {
            self.max_order - 1
        }
    }
}

/// Fraction of the parallel-plate scale below which a channel counts as
/// zero when forming relative differences.
const FLOOR_FRACTION: f64 = 1e-2;

/// Successive differences that must pass in a row before stopping, so a
/// partial sum turning through an extremum does not stop the controller.
pub const CONSECUTIVE_PASSES: usize = 3;

fn small_enough(prev: f64, cur: f64, tolerance: f64, floor: f64) -> bool {
    (cur - prev).abs() <= tolerance * cur.abs().max(floor)
}

/// Tracks the run of passing differences.
#[derive(Default)]
struct Streak(usize);

impl Streak {
    fn update(&mut self, pass: bool) -> bool {
        self.0 = if pass { self.0 + 1 } else { 0 };
        self.0 >= CONSECUTIVE_PASSES
    }
}

/// `E_∞` from a least-squares fit of `E_r = E_∞ + C/r + D/r²` to the last
/// half of the partial sums (at most 24, at least 3 points).
pub fn extrapolate(orders: &[u64], partials: &[f64]) -> f64 {
    let n = partials.len();
    if n < 3 {
        return partials.last().copied().unwrap_or(0.0);
    }
    let k = (n / 2).clamp(3, 24);
    let rows: Vec<Vec<f64>> = orders[n - k..]
        .iter()
        .map(|&r| {
            let x = 1.0 / r as f64;
            vec![1.0, x, x * x]
        })
        .collect();
    match least_squares(&rows, &partials[n - k..]) {
        Some(c) if c[0].is_finite() => c[0],
        _ => partials[n - 1],
    }
}

/// Runs the odd-order controller on a sequence built by `step(r)`, which
/// returns the order-`r` increment.
fn run_odd<F>(settings: &AssemblySettings, floor: f64, mut step: F) -> Result<ConvergenceReport>
where
    F: FnMut(u64) -> Result<f64>,
{
    let mut orders = Vec::new();
    let mut partials = Vec::new();
    let mut acc = NeumaierSum::new();
    let mut terminated_by = Termination::Cap;
    let cap = settings.odd_cap();
    let mut streak = Streak::default();
    let mut r = 3;
    while r <= cap {
        acc.add(step(r)?);
        let cur = acc.value();
        let pass = partials.last().is_some_and(|&prev| small_enough(prev, cur, settings.tolerance, floor));
        let done = streak.update(pass) && r >= settings.min_order;
        orders.push(r);
        partials.push(cur);
        if done {
            terminated_by = Termination::Tolerance;
            break;
        }
        r += 2;
    }
    let value = extrapolate(&orders, &partials);
    Ok(ConvergenceReport::new(Channel::Odd, orders, partials, terminated_by, value))
}

/// Even-channel order report: partial sums of the closed-form terms
/// (parallel-plate series included) until the controller stops.
fn run_even(
    settings: &AssemblySettings,
    floor: f64,
    by_order: impl Fn(u64) -> Vec<(u64, f64, f64)>,
    value: f64,
) -> ConvergenceReport {
    let cap = settings.max_order - settings.max_order % 2;
    let all = by_order(cap);
    let mut orders = Vec::new();
    let mut partials: Vec<f64> = Vec::new();
    let mut terminated_by = Termination::Cap;
    let mut streak = Streak::default();
    for (r, paths, pfa) in all {
        let cur = paths + pfa;
        let pass = partials.last().is_some_and(|&prev| small_enough(prev, cur, settings.tolerance, floor));
        let done = streak.update(pass) && r >= settings.min_order;
        orders.push(r);
        partials.push(cur);
        if done {
            terminated_by = Termination::Tolerance;
            break;
        }
    }
    ConvergenceReport::new(Channel::Even, orders, partials, terminated_by, value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyResult {
    pub energies: EnergyBreakdown,
    pub even: ConvergenceReport,
    pub odd: ConvergenceReport,
}

impl EnergyResult {
    pub fn converged(&self) -> bool {
        self.even.converged() && self.odd.converged()
    }
}

/// All channels of the energy at one geometry.
pub fn energy_breakdown(g: &Geometry, settings: &AssemblySettings) -> Result<EnergyResult> {
    g.validate()?;
    settings.validate()?;
    let floor = FLOOR_FRACTION * pfa_energy(g).abs();
    let even_paths = even::even_energy(g, &settings.even)?.value;
    let pfa = pfa_energy(g);
    let even = run_even(settings, floor, |r| even::even_energy_by_order(g, r), even_paths + pfa);
    let odd = run_odd(settings, floor, |r| Ok(odd::odd_order_energy(g, r, &settings.odd)?.0))?;
    let energies = EnergyBreakdown::from_channels(even_paths, pfa, odd.value);
    Ok(EnergyResult { energies, even, odd })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceResult {
    pub forces: ForceBreakdown,
    pub even: ConvergenceReport,
    pub odd: ConvergenceReport,
    /// Central-difference step used for the odd channel.
    pub step: f64,
}

impl ForceResult {
    pub fn converged(&self) -> bool {
        self.even.converged() && self.odd.converged()
    }
}

/// Odd-channel force `−dE/da` by central differences of the order-`r`
/// energies at `a ± δ`; both sides share orders and fit weights.
pub fn odd_force(g: &Geometry, settings: &AssemblySettings) -> Result<(ConvergenceReport, f64)> {
    let delta = settings.step(g.a);
    let (gm, gp) = (g.with_a(g.a - delta), g.with_a(g.a + delta));
    let floor = FLOOR_FRACTION * pfa_force(g).abs();
    let report = run_odd(settings, floor, |r| {
        let em = odd::odd_order_energy(&gm, r, &settings.odd)?.0;
        let ep = odd::odd_order_energy(&gp, r, &settings.odd)?.0;
        crate::channels::force_from_energies(em, ep, delta)
    })?;
    Ok((report, delta))
}

/// All channels of the force at one geometry.
pub fn force_breakdown(g: &Geometry, settings: &AssemblySettings) -> Result<ForceResult> {
    g.validate()?;
    settings.validate()?;
    let floor = FLOOR_FRACTION * pfa_force(g).abs();
    let even_paths = even::even_paths_force(g, &settings.even)?.value;
    let pfa = pfa_force(g);
    let even = run_even(settings, floor, |r| even::even_force_by_order(g, r), even_paths + pfa);
    let (odd, step) = odd_force(g, settings)?;
    let forces = ForceBreakdown::from_channels(g, even_paths, pfa, odd.value);
    Ok(ForceResult { forces, even, odd, step })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub geometry: Geometry,
    pub even: ConvergenceReport,
    pub odd: ConvergenceReport,
}

/// Partial energies of both channels at every order up to `max_order`,
/// without early termination.
pub fn convergence_study(g: &Geometry, max_order: u64, settings: &AssemblySettings) -> Result<ConvergenceStudy> {
    let s = AssemblySettings { tolerance: f64::MIN_POSITIVE, max_order, ..*settings };
    s.validate()?;
    let e = energy_breakdown(g, &s)?;
    Ok(ConvergenceStudy { geometry: *g, even: e.even, odd: e.odd })
}

/// Smallest order at which `|partial − limit| ≤ target` and stays so for all
/// later evaluated orders, linearly interpolated in `r`.
pub fn order_for_error(orders: &[u64], partials: &[f64], limit: f64, target: f64) -> Option<f64> {
    let err: Vec<f64> = partials.iter().map(|p| (p - limit).abs()).collect();
    let last_bad = err.iter().rposition(|&e| e > target);
    match last_bad {
        None => orders.first().map(|&r| r as f64),
        Some(i) if i + 1 < err.len() => {
            let (r0, r1) = (orders[i] as f64, orders[i + 1] as f64);
            let (e0, e1) = (err[i], err[i + 1]);
            Some(r0 + (r1 - r0) * (e0 - target) / (e0 - e1))
        }
        Some(_) => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::piston;
    use std::f64::consts::PI;

    fn g(a: f64, s: f64, h: f64) -> Geometry {
        Geometry::new(a, s, h).unwrap()
    }

    #[test]
    fn extrapolation_recovers_model() {
        let orders: Vec<u64> = (3..=101).step_by(2).collect();
        let partials: Vec<f64> = orders.iter().map(|&r| -0.13 + 0.3 / r as f64 - 0.2 / (r * r) as f64).collect();
        assert!((extrapolate(&orders, &partials) + 0.13).abs() < 1e-12);
        assert_eq!(extrapolate(&[3], &[1.5]), 1.5);
    }

    #[test]
    fn order_for_error_interpolates() {
        let orders = [2, 4, 6, 8];
        let partials = [1.0, 0.5, 0.25, 0.2];
        let r = order_for_error(&orders, &partials, 0.0, 0.3).unwrap();
        assert!((r - (4.0 + 2.0 * 0.2 / 0.25)).abs() < 1e-12);
        assert!(order_for_error(&orders, &partials, 0.0, 0.1).is_none());
    }

    #[test]
    fn piston_energy_channels() {
        let geo = g(1.0, 1.0, 0.0);
        let r = energy_breakdown(&geo, &AssemblySettings::default()).unwrap();
        let even = piston::piston_even_energy(1.0, 1.0).unwrap() + pfa_energy(&geo);
        assert!((r.energies.even_total() / even - 1.0).abs() < 1e-9);
        assert!((r.energies.odd_paths / (-PI / 24.0) - 1.0).abs() < 5e-3, "{}", r.energies.odd_paths);
        assert!(r.converged());
        assert_eq!(r.energies.total, 2.0 * r.energies.even_total());
        assert_eq!(r.odd.successive_rel_diffs.len() + 1, r.odd.orders_evaluated.len());
    }

    #[test]
    fn piston_force_channels() {
        let geo = g(1.0, 1.0, 0.0);
        let r = force_breakdown(&geo, &AssemblySettings::default()).unwrap();
        let even = piston::piston_even_force(1.0, 1.0).unwrap() + pfa_force(&geo);
        assert!((r.forces.total / (2.0 * even) - 1.0).abs() < 1e-9);
        let odd = piston::piston_odd_force(1.0, 1.0).unwrap();
        assert!((r.forces.odd_paths / odd - 1.0).abs() < 5e-3, "{} {odd}", r.forces.odd_paths);
    }

    #[test]
    fn cap_is_reported() {
        let s = AssemblySettings { tolerance: 1e-9, max_order: 15, min_order: 3, ..Default::default() };
        let r = energy_breakdown(&g(1.0, 1.0, 0.2), &s).unwrap();
        assert_eq!(r.odd.terminated_by, Termination::Cap);
        assert_eq!(r.odd.final_order(), 15);
        assert!(!r.converged());
    }

    #[test]
    fn rejects_bad_settings() {
        let s = AssemblySettings { tolerance: 0.0, ..Default::default() };
        assert!(energy_breakdown(&g(1.0, 1.0, 0.2), &s).is_err());
    }
}
