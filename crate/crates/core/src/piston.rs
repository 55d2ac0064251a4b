//! Closed forms for `h = 0`, where every loop stays between the squares.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::NeumaierSum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsteinParams {
    pub a: f64,
    pub b: f64,
    /// Only `p = 3` is supported.
    pub p: f64,
}

impl EpsteinParams {
    pub fn new(a: f64, b: f64) -> Self {
        EpsteinParams { a, b, p: 3.0 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.b > 0.0 && self.a.is_finite() && self.b.is_finite()) {
            return Err(Error::InvalidArgument(format!("Epstein scales must be > 0: {self:?}")));
        }
        if self.p != 3.0 {
            return Err(Error::InvalidArgument(format!("only p = 3 is implemented, got {}", self.p)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsteinValue {
    pub value: f64,
    /// Guaranteed bracket from integral comparison of the tail.
    pub lower: f64,
    pub upper: f64,
    /// Side of the directly summed square.
    pub cutoff: u64,
}

/// Largest direct square side tried before giving up.
pub const EPSTEIN_MAX_CUTOFF: u64 = 8192;

/// `∫_{u0}^∞ ∫_{v0}^∞ (u² + v²)^{−3/2} dv du`.
fn corner_z(u0: f64, v0: f64) -> f64 {
    2.0 / (u0 + v0 + u0.hypot(v0))
}

/// `∫_{u0}^∞ ∫_{v0}^∞ u² (u² + v²)^{−5/2} dv du`, for `u0 > 0`.
fn corner_w(u0: f64, v0: f64) -> f64 {
    let rho = u0.hypot(v0);
    (2.0 - v0 / (u0 + rho) - v0 / rho) / (3.0 * u0)
}

/// Sum over the quadrant minus `[1, N]²` of a function of `(na, mb)`,
/// approximated by the integral over the union of unit cells around each
/// lattice point with lower-left corner offset `o`.
fn tail<F: Fn(f64, f64) -> f64>(corner: F, a: f64, b: f64, n: f64, o: f64) -> f64 {
    let lo = 1.0 - o;
    let hi = n + 1.0 - o;
    (corner(a * hi, b * lo) + corner(a * lo, b * hi) - corner(a * hi, b * hi)) / (a * b)
}

fn z2_direct(a: f64, b: f64, n: u64) -> f64 {
    let mut s = NeumaierSum::new();
    for i in 1..=n {
        let u2 = (i as f64 * a).powi(2);
        let mut row = 0.0;
        for j in (1..=n).rev() {
            let r2 = u2 + (j as f64 * b).powi(2);
            row += 1.0 / (r2 * r2.sqrt());
        }
        s.add(row);
    }
    s.value()
}

fn z2_at(a: f64, b: f64, n: u64) -> EpsteinValue {
    let direct = z2_direct(a, b, n);
    let nf = n as f64;
    EpsteinValue {
        value: direct + tail(corner_z, a, b, nf, 0.5),
        lower: direct + tail(corner_z, a, b, nf, 0.0),
        upper: direct + tail(corner_z, a, b, nf, 1.0),
        cutoff: n,
    }
}

/// `Z₂(a, b; 3) = Σ_{n,m>0} ((na)² + (mb)²)^{−3/2}`.
///
/// The square `[1, N]²` is summed directly and the rest replaced by its
/// midpoint integral; `N` doubles until two successive estimates agree to
/// `tolerance` (relative). The bracket `[lower, upper]` always holds.
pub fn epstein_z2(params: EpsteinParams, tolerance: f64) -> Result<EpsteinValue> {
    params.validate()?;
    if !(tolerance > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be > 0, got {tolerance}")));
    }
    let (a, b) = (params.a, params.b);
    let mut n = 32;
    let mut prev = z2_at(a, b, n);
    loop {
        n *= 2;
        let cur = z2_at(a, b, n);
        let diff = (cur.value - prev.value).abs();
        if diff <= tolerance * cur.value.abs() {
            return Ok(cur);
        }
        if n >= EPSTEIN_MAX_CUTOFF {
            return Err(Error::NotConverged {
                what: "Epstein sum".into(),
                partial: cur.value,
                achieved: diff / cur.value.abs(),
            });
        }
        prev = cur;
    }
}

fn w_at(a: f64, b: f64, n: u64) -> f64 {
    let mut s = NeumaierSum::new();
    for i in 1..=n {
        let u2 = (i as f64 * a).powi(2);
        let mut row = 0.0;
        for j in (1..=n).rev() {
            let r2 = u2 + (j as f64 * b).powi(2);
            row += 1.0 / (r2 * r2 * r2.sqrt());
        }
        s.add(row * (i * i) as f64);
    }
    s.value() + tail(corner_w, a, b, n as f64, 0.5) / (a * a)
}

/// `Σ_{n,m>0} n² ((na)² + (mb)²)^{−5/2}`, the a-derivative companion of `Z₂`.
fn epstein_w(a: f64, b: f64, tolerance: f64) -> Result<f64> {
    let mut n = 32;
    let mut prev = w_at(a, b, n);
    loop {
        n *= 2;
        let cur = w_at(a, b, n);
        let diff = (cur - prev).abs();
        if diff <= tolerance * cur.abs() {
            return Ok(cur);
        }
        if n >= EPSTEIN_MAX_CUTOFF {
            return Err(Error::NotConverged {
                what: "Epstein force sum".into(),
                partial: cur,
                achieved: diff / cur.abs(),
            });
        }
        prev = cur;
    }
}

/// Tolerance used by the piston closed forms.
pub const PISTON_TOLERANCE: f64 = 1e-10;

fn check(a: f64, s: f64) -> Result<()> {
    if !(a > 0.0 && s > 0.0 && a.is_finite() && s.is_finite()) {
        return Err(Error::InvalidArgument(format!("piston lengths must be > 0: a={a}, s={s}")));
    }
    Ok(())
}

/// Even loops with both offsets nonzero: `−a s Z₂(a, s; 3) / 8π`.
pub fn piston_even_energy(a: f64, s: f64) -> Result<f64> {
    check(a, s)?;
    let z = epstein_z2(EpsteinParams::new(a, s), PISTON_TOLERANCE)?;
    Ok(-a * s * z.value / (8.0 * PI))
}

/// `−d/da` of [`piston_even_energy`].
pub fn piston_even_force(a: f64, s: f64) -> Result<f64> {
    check(a, s)?;
    let z = epstein_z2(EpsteinParams::new(a, s), PISTON_TOLERANCE)?.value;
    let w = epstein_w(a, s, PISTON_TOLERANCE)?;
    Ok(s * (z - 3.0 * a * a * w) / (8.0 * PI))
}

/// `−(π/48)(1/s + 1/a)`.
pub fn piston_odd_energy(a: f64, s: f64) -> Result<f64> {
    check(a, s)?;
    Ok(-(PI / 48.0) * (1.0 / s + 1.0 / a))
}

/// `−π/(48 a²)`.
pub fn piston_odd_force(a: f64, s: f64) -> Result<f64> {
    check(a, s)?;
    Ok(-PI / (48.0 * a * a))
}
