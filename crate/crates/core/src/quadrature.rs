//! Adaptive rectangle cubature for integrands with jump discontinuities.
//!
//! The domain starts as a uniform seed grid. Each cell is estimated by its
//! 2×2 composite midpoint rule. The error is the difference from the single
//! midpoint, except for cells whose samples (including the corners) mix zero
//! and nonzero values: those straddle an edge of the support and get the
//! bound `area · max|f|`. The cell with the largest error is split across its
//! longer side until the total error meets the tolerance or a cap is hit.
//!
//! The zero test suits integrands of the form `[allowed] · g` with straight
//! support edges: any line through a cell separates two of its corners.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::NeumaierSum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    fn split(&self) -> (Rect, Rect) {
        if self.x1 - self.x0 >= self.y1 - self.y0 {
            let xm = 0.5 * (self.x0 + self.x1);
            (Rect { x1: xm, ..*self }, Rect { x0: xm, ..*self })
        } else {
            let ym = 0.5 * (self.y0 + self.y1);
            (Rect { y1: ym, ..*self }, Rect { y0: ym, ..*self })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubatureSettings {
    pub rel_tolerance: f64,
    pub abs_tolerance: f64,
    /// Maximum number of bisections applied to any one cell.
    pub max_depth: u32,
    /// Cap on integrand evaluations.
    pub max_evaluations: usize,
    /// Cells whose sides are both below this fraction of the domain sides are not split.
    pub min_cell_fraction: f64,
    /// Cells per side of the initial uniform grid.
    pub seed_grid: u32,
}

impl Default for CubatureSettings {
    fn default() -> Self {
        CubatureSettings {
            rel_tolerance: 2e-4,
            abs_tolerance: 1e-15,
            max_depth: 40,
            max_evaluations: 40_000_000,
            min_cell_fraction: 1e-7,
            seed_grid: 16,
        }
    }
}

impl CubatureSettings {
    fn validate(&self) -> Result<()> {
        if !(self.rel_tolerance > 0.0 && self.abs_tolerance > 0.0) {
            return Err(Error::InvalidArgument("cubature tolerances must be > 0".into()));
        }
        if self.max_depth == 0 || self.max_depth > 60 {
            return Err(Error::InvalidArgument(format!("max_depth {} outside 1..=60", self.max_depth)));
        }
        if self.seed_grid == 0 || self.seed_grid > 1024 {
            return Err(Error::InvalidArgument(format!("seed_grid {} outside 1..=1024", self.seed_grid)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubatureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    pub rect: Rect,
    pub depth: u32,
    pub value: f64,
    pub error: f64,
}

struct Entry {
    error: f64,
    id: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error).then_with(|| other.id.cmp(&self.id))
    }
}

/// Samples per cell.
const RULE_POINTS: usize = 9;

/// Inset of the corner samples, keeping them off the domain edges and off
/// dyadic grid lines.
const CORNER: f64 = 0.0137;

fn rule<F: FnMut(f64, f64) -> f64>(f: &mut F, r: &Rect) -> (f64, f64) {
    let (dx, dy) = (r.x1 - r.x0, r.y1 - r.y0);
    let at = |fx: f64, fy: f64| (r.x0 + fx * dx, r.y0 + fy * dy);
    let mut samples = [0.0; RULE_POINTS];
    let points = [
        (0.5, 0.5),
        (0.25, 0.25),
        (0.75, 0.25),
        (0.25, 0.75),
        (0.75, 0.75),
        (CORNER, CORNER),
        (1.0 - CORNER, CORNER),
        (CORNER, 1.0 - CORNER),
        (1.0 - CORNER, 1.0 - CORNER),
    ];
    for (v, (fx, fy)) in samples.iter_mut().zip(points) {
        let (x, y) = at(fx, fy);
        *v = f(x, y);
    }
    let area = dx * dy;
    let coarse = area * samples[0];
    let fine = 0.25 * area * (samples[1] + samples[2] + samples[3] + samples[4]);
    let zeros = samples.iter().filter(|v| **v == 0.0).count();
    let err = if zeros > 0 && zeros < RULE_POINTS {
        area * samples.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    } else {
        (fine - coarse).abs()
    };
    (fine, err)
}

/// Integrates `f` over `domain`, returning the final cells as well.
pub fn integrate_2d_traced<F>(domain: Rect, mut f: F, settings: &CubatureSettings) -> Result<(CubatureResult, Vec<Leaf>)>
where
    F: FnMut(f64, f64) -> f64,
{
    settings.validate()?;
    if !(domain.x1 > domain.x0 && domain.y1 > domain.y0) {
        return Err(Error::InvalidArgument(format!("empty cubature domain {domain:?}")));
    }
    let min_w = settings.min_cell_fraction * (domain.x1 - domain.x0);
    let min_h = settings.min_cell_fraction * (domain.y1 - domain.y0);
    let mut cells: Vec<Leaf> = Vec::new();
    let mut live: Vec<bool> = Vec::new();
    let mut heap = BinaryHeap::new();

    let mut evaluations = 0;
    let mut total = 0.0;
    let mut total_err = 0.0;
    let k = settings.seed_grid as usize;
    let (sw, sh) = ((domain.x1 - domain.x0) / k as f64, (domain.y1 - domain.y0) / k as f64);
    for i in 0..k {
        for j in 0..k {
            let rect = Rect {
                x0: domain.x0 + i as f64 * sw,
                x1: if i + 1 == k { domain.x1 } else { domain.x0 + (i + 1) as f64 * sw },
                y0: domain.y0 + j as f64 * sh,
                y1: if j + 1 == k { domain.y1 } else { domain.y0 + (j + 1) as f64 * sh },
            };
            let (v, e) = rule(&mut f, &rect);
            if !v.is_finite() {
                return Err(Error::NonFinite("cubature integrand"));
            }
            heap.push(Entry { error: e, id: cells.len() });
            cells.push(Leaf { rect, depth: 0, value: v, error: e });
            live.push(true);
            evaluations += RULE_POINTS;
            total += v;
            total_err += e;
        }
    }
    let target = |v: f64| settings.abs_tolerance.max(settings.rel_tolerance * v.abs());

    while total_err > target(total) && evaluations + 2 * RULE_POINTS <= settings.max_evaluations {
        let Some(top) = heap.pop() else { break };
        let leaf = cells[top.id];
        let r = leaf.rect;
        if leaf.depth >= settings.max_depth || ((r.x1 - r.x0) < min_w && (r.y1 - r.y0) < min_h) {
            // Frozen: keep its error in the total but stop refining it.
            continue;
        }
        live[top.id] = false;
        let (ra, rb) = r.split();
        let (va, ea) = rule(&mut f, &ra);
        let (vb, eb) = rule(&mut f, &rb);
        if !(va.is_finite() && vb.is_finite()) {
            return Err(Error::NonFinite("cubature integrand"));
        }
        evaluations += 2 * RULE_POINTS;
        total += va + vb - leaf.value;
        total_err += ea + eb - leaf.error;
        for (rect, v, e) in [(ra, va, ea), (rb, vb, eb)] {
            heap.push(Entry { error: e, id: cells.len() });
            cells.push(Leaf { rect, depth: leaf.depth + 1, value: v, error: e });
            live.push(true);
        }
    }

    let leaves: Vec<Leaf> = cells.into_iter().zip(live).filter(|(_, l)| *l).map(|(c, _)| c).collect();
    let value: NeumaierSum = leaves.iter().map(|l| l.value).collect();
    let error: NeumaierSum = leaves.iter().map(|l| l.error).collect();
    let (value, error_estimate) = (value.value(), error.value());
    Ok((
        CubatureResult { value, error_estimate, evaluations, converged: error_estimate <= target(value) },
        leaves,
    ))
}

/// Integrates `f` over `domain`. A result that misses the tolerance is
/// returned with `converged = false`.
pub fn integrate_2d<F>(domain: Rect, f: F, settings: &CubatureSettings) -> Result<CubatureResult>
where
    F: FnMut(f64, f64) -> f64,
{
    integrate_2d_traced(domain, f, settings).map(|(r, _)| r)
}
