//! Channel bookkeeping: path classes, polarization mapping, energies and forces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Geometry;

/// Apéry's constant ζ(3).
pub const ZETA3: f64 = 1.202_056_903_159_594_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(k: i64) -> Self {
        if k.rem_euclid(2) == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PathClass {
    Even,
    Odd,
    /// Both reflection counts odd; such loops always leave through a gap.
    Forbidden,
}

impl PathClass {
    /// Sign weight `η^r` of a loop in this class, with `η = 1` (Neumann) or `-1` (Dirichlet).
    pub fn weight(self, eta: f64) -> f64 {
        match self {
            PathClass::Even => 1.0,
            PathClass::Odd => eta,
            PathClass::Forbidden => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Polarizations {
    pub neumann: f64,
    pub dirichlet: f64,
    pub total: f64,
}

/// Neumann = even + odd, Dirichlet = even − odd, total = 2·even.
pub fn to_polarizations(even_total: f64, odd: f64) -> Polarizations {
    let neumann = even_total + odd;
    let dirichlet = even_total - odd;
    Polarizations { neumann, dirichlet, total: 2.0 * even_total }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// Even loops with both offsets nonzero.
    pub even_paths: f64,
    /// The `(n, 0)` parallel-plate series.
    pub pfa: f64,
    pub odd_paths: f64,
    pub neumann: f64,
    pub dirichlet: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn from_channels(even_paths: f64, pfa: f64, odd_paths: f64) -> Self {
        let p = to_polarizations(even_paths + pfa, odd_paths);
        EnergyBreakdown {
            even_paths,
            pfa,
            odd_paths,
            neumann: p.neumann,
            dirichlet: p.dirichlet,
            total: p.total,
        }
    }

    pub fn even_total(&self) -> f64 {
        self.even_paths + self.pfa
    }
}

/// Forces divided by the parallel-plate reference. `total` is divided by
/// `2·F_PFA` because it carries both polarizations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedForces {
    pub even: f64,
    pub odd: f64,
    pub neumann: f64,
    pub dirichlet: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceBreakdown {
    pub even_paths: f64,
    pub pfa: f64,
    pub odd_paths: f64,
    pub neumann: f64,
    pub dirichlet: f64,
    pub total: f64,
    pub normalized_by_pfa: NormalizedForces,
}

impl ForceBreakdown {
    pub fn from_channels(geometry: &Geometry, even_paths: f64, pfa: f64, odd_paths: f64) -> Self {
        let even = even_paths + pfa;
        let p = to_polarizations(even, odd_paths);
        let f = pfa_force(geometry);
        ForceBreakdown {
            even_paths,
            pfa,
            odd_paths,
            neumann: p.neumann,
            dirichlet: p.dirichlet,
            total: p.total,
            normalized_by_pfa: NormalizedForces {
                even: even / f,
                odd: odd_paths / f,
                neumann: p.neumann / f,
                dirichlet: p.dirichlet / f,
                total: p.total / (2.0 * f),
            },
        }
    }

    pub fn even_total(&self) -> f64 {
        self.even_paths + self.pfa
    }
}

/// Parallel-plate energy of the two faces, `−s ζ(3) / (16π a²)`.
pub fn pfa_energy(g: &Geometry) -> f64 {
    -g.s * ZETA3 / (16.0 * std::f64::consts::PI * g.a * g.a)
}

/// `F_PFA = −ζ(3) s / (8π a³)`.
pub fn pfa_force(g: &Geometry) -> f64 {
    -ZETA3 * g.s / (8.0 * std::f64::consts::PI * g.a.powi(3))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceEstimate {
    pub value: f64,
    pub truncation_error: f64,
}

/// `−dE/da` from energies at `a − δ` and `a + δ`.
pub fn force_from_energies(e_minus: f64, e_plus: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("stencil step must be > 0, got {delta}")));
    }
    if !e_minus.is_finite() || !e_plus.is_finite() {
        return Err(Error::NonFinite("stencil energy"));
    }
    Ok(-(e_plus - e_minus) / (2.0 * delta))
}

/// Default central-difference step `max(a, 1)·ε^{1/3}`.
pub fn default_step(a: f64) -> f64 {
    a.max(1.0) * f64::EPSILON.cbrt()
}

/// Central-difference force of `energy` at `a`. The truncation error is
/// estimated by comparing against the step `2δ`.
pub fn central_difference<F>(energy: F, a: f64, delta: f64) -> Result<ForceEstimate>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(delta > 0.0) || delta >= a {
        return Err(Error::InvalidArgument(format!("step {delta} must lie in (0, a = {a})")));
    }
    let d1 = force_from_energies(energy(a - delta)?, energy(a + delta)?, delta)?;
    let estimate = if 2.0 * delta < a {
        let d2 = force_from_energies(energy(a - 2.0 * delta)?, energy(a + 2.0 * delta)?, 2.0 * delta)?;
        (d1 - d2).abs() / 3.0
    } else {
        f64::NAN
    };
    Ok(ForceEstimate { value: d1, truncation_error: estimate })
}
