//! Parameter sweeps over `h` and `a`.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{force_breakdown, AssemblySettings};
use crate::channels::{pfa_force, ForceBreakdown};
use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::piston;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    /// Divide by `F_PFA(a)` (the total by `2·F_PFA`).
    Pfa,
    /// Divide the total by the `h = 0` total force at the same `a`.
    PistonAtSameA,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub geometry: Geometry,
    /// `None` when the point failed; see `error`.
    pub forces: Option<ForceBreakdown>,
    pub f_pfa: f64,
    pub normalization: Normalization,
    /// Force the total is divided by under `normalization`.
    pub reference_total: f64,
    pub total_over_reference: f64,
    pub converged: bool,
    pub even_order: u64,
    pub odd_order: u64,
    pub error: Option<String>,
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl SweepRecord {
    pub fn total(&self) -> Option<f64> {
        self.forces.map(|f| f.total)
    }
}

fn reference_total(g: &Geometry, normalization: Normalization) -> Result<f64> {
    match normalization {
        Normalization::Pfa => Ok(2.0 * pfa_force(g)),
        Normalization::PistonAtSameA => Ok(2.0 * (piston::piston_even_force(g.a, g.s)? + pfa_force(g))),
    }
}

fn record(g: Geometry, settings: &AssemblySettings, normalization: Normalization) -> SweepRecord {
    let start = Instant::now();
    let f_pfa = pfa_force(&g);
    let outcome = reference_total(&g, normalization).and_then(|rt| Ok((rt, force_breakdown(&g, settings)?)));
    let mut rec = SweepRecord {
        geometry: g,
        forces: None,
        f_pfa,
        normalization,
        reference_total: f64::NAN,
        total_over_reference: f64::NAN,
        converged: false,
        even_order: 0,
        odd_order: 0,
        error: None,
        wall_time_s: 0.0,
    };
    match outcome {
        Ok((rt, r)) => {
            rec.reference_total = rt;
            rec.total_over_reference = r.forces.total / rt;
            rec.converged = r.converged();
            rec.even_order = r.even.final_order();
            rec.odd_order = r.odd.final_order();
            rec.forces = Some(r.forces);
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec.wall_time_s = start.elapsed().as_secs_f64();
    rec
}

/// Interior minimum of `|F_total|`, refined by a parabola through the grid
/// minimum and its two neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub grid_index: usize,
    pub grid_h: f64,
    pub h: f64,
    pub abs_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HSweep {
    pub records: Vec<SweepRecord>,
    pub extremum: Option<Extremum>,
}

/// Vertex of the parabola through three points.
pub fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> Option<(f64, f64)> {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let c = (d2 - d1) / (x[2] - x[0]);
    if !(c > 0.0) {
        return None;
    }
    let b = d1 - c * (x[0] + x[1]);
    let xv = -b / (2.0 * c);
    let yv = y[1] + (xv - x[1]) * (d1 + c * (xv - x[0]));
    Some((xv, yv))
}

/// Global minimum among the interior local minima of `|values|`.
pub fn interior_minimum(xs: &[f64], values: &[Option<f64>]) -> Option<Extremum> {
    let mut best: Option<Extremum> = None;
    for i in 1..xs.len().saturating_sub(1) {
        let (Some(a), Some(b), Some(c)) = (values[i - 1], values[i], values[i + 1]) else { continue };
        let (a, b, c) = (a.abs(), b.abs(), c.abs());
        if !(b < a && b <= c) {
            continue;
        }
        let (h, v) = parabola_vertex([xs[i - 1], xs[i], xs[i + 1]], [a, b, c]).unwrap_or((xs[i], b));
        if best.is_none_or(|e| v < e.abs_total) {
            best = Some(Extremum { grid_index: i, grid_h: xs[i], h, abs_total: v });
        }
    }
    best
}

/// Forces over sidewall gaps `h`. Points run in parallel; a failed point is
/// kept as a record with its error.
pub fn sweep_h(a: f64, s: f64, h_values: &[f64], settings: &AssemblySettings) -> Result<HSweep> {
    if h_values.is_empty() {
        return Err(Error::InvalidArgument("h grid is empty".into()));
    }
    if h_values.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::InvalidArgument("h grid must be nondecreasing".into()));
    }
    let geos: Vec<Geometry> = h_values.iter().map(|&h| Geometry::new(a, s, h)).collect::<Result<_>>()?;
    let records: Vec<SweepRecord> = geos.into_par_iter().map(|g| record(g, settings, Normalization::Pfa)).collect();
    let totals: Vec<Option<f64>> = records.iter().map(|r| r.total()).collect();
    let extremum = interior_minimum(h_values, &totals);
    Ok(HSweep { records, extremum })
}

/// Forces over square separations `a`.
pub fn sweep_a(
    a_values: &[f64],
    s: f64,
    h: f64,
    settings: &AssemblySettings,
    normalization: Normalization,
) -> Result<Vec<SweepRecord>> {
    if a_values.is_empty() {
        return Err(Error::InvalidArgument("a grid is empty".into()));
    }
    let geos: Vec<Geometry> = a_values.iter().map(|&a| Geometry::new(a, s, h)).collect::<Result<_>>()?;
    Ok(geos.into_par_iter().map(|g| record(g, settings, normalization)).collect())
}
