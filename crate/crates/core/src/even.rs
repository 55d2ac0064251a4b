//! Even loops: closed-form terms, the parallel-plate series, and their sums.
//!
//! The `(n, m)` term with `n, m ≥ 1` (its `(−n, −m)` partner included) is
//! `−(1/4π)·occ·4ñ a/ℓ³`, where `occ = max(L/ñ − 2h, 0)`, `ñ = n/gcd(n, m)`
//! and `ℓ = 2√((na)² + (mL)²)`. Equivalently
//! `−(1/8π)(L − 2hñ)₊ · a / ((na)² + (mL)²)^{3/2}`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use crate::channels::{pfa_energy, pfa_force, ZETA3};
use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::lattice::{path_length_even, LatticeIndex};
use crate::numerics::NeumaierSum;
use crate::piston;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvenTerm {
    pub index: LatticeIndex,
    pub occupancy: f64,
    pub length: f64,
    pub value: f64,
}

/// Width `max(L/ñ − 2h, 0)` of the band of start ordinates that keeps the
/// loop between the squares, per copy of the reduced direction.
pub fn occupancy(g: &Geometry, n_reduced: i64) -> f64 {
    let nt = n_reduced.unsigned_abs() as f64;
    let w = g.period() / nt - 2.0 * g.h;
    if w > 0.0 {
        w
    } else {
        0.0
    }
}

pub fn even_term(g: &Geometry, n: i64, m: i64) -> EvenTerm {
    let index = LatticeIndex::new(n, m);
    let occupancy = occupancy(g, index.n_reduced);
    let length = path_length_even(g, n, m);
    let nt = index.n_reduced.unsigned_abs() as f64;
    let value = -occupancy * 4.0 * nt * g.a / (4.0 * PI * length.powi(3));
    EvenTerm { index, occupancy, length, value }
}

pub fn even_term_value(g: &Geometry, n: i64, m: i64) -> f64 {
    even_term(g, n, m).value
}

/// `−d/da` of [`even_term_value`]; the occupancy does not depend on `a`.
pub fn even_term_force(g: &Geometry, n: i64, m: i64) -> f64 {
    let index = LatticeIndex::new(n, m);
    let nt = index.n_reduced.unsigned_abs() as f64;
    let w = (g.period() - 2.0 * g.h * nt).max(0.0);
    let u2 = (n as f64 * g.a).powi(2);
    let v2 = (m as f64 * g.period()).powi(2);
    let r2 = u2 + v2;
    w * (v2 - 2.0 * u2) / (8.0 * PI * r2 * r2 * r2.sqrt())
}

/// Sum of the first `n_max` parallel-plate terms, `−(s a/16π) Σ 1/(na)³`.
pub fn pfa_partial(g: &Geometry, n_max: u64) -> f64 {
    let s: NeumaierSum = (1..=n_max).rev().map(|n| 1.0 / (n as f64 * g.a).powi(3)).collect();
    -g.s * g.a * s.value() / (16.0 * PI)
}

/// Quadrant sum over `1 ≤ n, m ≤ cutoff`, accumulated by `max(n, m)` shells.
pub fn even_energy_truncated(g: &Geometry, cutoff: u64) -> f64 {
    shell_sum(cutoff, |n, m| even_term_value(g, n, m))
}

/// Force counterpart of [`even_energy_truncated`].
pub fn even_force_truncated(g: &Geometry, cutoff: u64) -> f64 {
    shell_sum(cutoff, |n, m| even_term_force(g, n, m))
}

fn shell_sum<F: Fn(i64, i64) -> f64>(cutoff: u64, term: F) -> f64 {
    let mut total = NeumaierSum::new();
    for k in 1..=cutoff as i64 {
        let mut shell = NeumaierSum::new();
        for j in 1..k {
            shell.add(term(k, j));
            shell.add(term(j, k));
        }
        shell.add(term(k, k));
        total.add(shell.value());
    }
    total.value()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvenSettings {
    /// Relative tolerance of the lattice sum.
    pub tolerance: f64,
    /// Cap on directly evaluated terms.
    pub max_terms: u64,
}

impl Default for EvenSettings {
    fn default() -> Self {
        EvenSettings { tolerance: 1e-10, max_terms: 100_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvenMethod {
    /// Sum over reduced directions with a Möbius sieve and 1D tails.
    Regrouped,
    /// `h` below the piston guard: Epstein closed form.
    Piston,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvenSum {
    pub value: f64,
    pub error_estimate: f64,
    pub terms: u64,
    pub method: EvenMethod,
}

/// `f(u) = (c² + u²)^{−3/2}` and the corresponding `−∂/∂a` summand.
#[derive(Clone, Copy)]
enum Summand {
    Energy,
    Force,
}

/// `Σ_{k≥1} f(b k)` for the summand with parameter `c`: `k < M` directly,
/// the rest by the midpoint Euler–Maclaurin formula
/// `Σ_{k≥M} f(k) ≈ ∫_{M−½}^∞ f + f′(M − ½)/24`.
fn line_sum(kind: Summand, c: f64, b: f64, direct_ratio: f64) -> (f64, u64) {
    let c2 = c * c;
    let mcut = if c / b >= direct_ratio { 1 } else { direct_ratio as u64 };
    let mut s = 0.0;
    for k in (1..mcut).rev() {
        let u = b * k as f64;
        let r2 = c2 + u * u;
        s += match kind {
            Summand::Energy => 1.0 / (r2 * r2.sqrt()),
            Summand::Force => (u * u - 2.0 * c2) / (r2 * r2 * r2.sqrt()),
        };
    }
    let u0 = b * (mcut as f64 - 0.5);
    let rho = (c2 + u0 * u0).sqrt();
    let rho2 = rho * rho;
    let (integral, deriv) = match kind {
        Summand::Energy => (1.0 / (rho * (rho + u0)), -3.0 * u0 / (rho2 * rho2 * rho)),
        Summand::Force => (
            u0 / (rho2 * rho) - 1.0 / (rho * (rho + u0)),
            u0 * (12.0 * c2 - 3.0 * u0 * u0) / (rho2 * rho2 * rho2 * rho),
        ),
    };
    (s + integral / b + b * deriv / 24.0, mcut.saturating_sub(1) + 1)
}

fn mobius_sieve(k: usize) -> Vec<i8> {
    let mut mu = vec![1i8; k + 1];
    let mut composite = vec![false; k + 1];
    if k >= 1 {
        mu[0] = 0;
    }
    for p in 2..=k {
        if composite[p] {
            continue;
        }
        let mut j = p;
        while j <= k {
            if j > p {
                composite[j] = true;
            }
            mu[j] = -mu[j];
            j += p;
        }
        let p2 = p.saturating_mul(p);
        let mut j = p2;
        while j <= k {
            mu[j] = 0;
            j += p2;
        }
    }
    mu
}

/// `Σ_{ñ: L−2hñ>0} (L − 2hñ) Σ_{d|ñ} μ(d) Σ_k f(ña, d k L)`, i.e. the
/// quadrant sum with the common factor of `(n, m)` pulled out as `ζ(3)`.
fn regrouped(g: &Geometry, kind: Summand, direct_ratio: f64, max_terms: u64) -> Result<(f64, u64)> {
    let l = g.period();
    let kmax_f = (l / (2.0 * g.h)).ceil();
    if kmax_f > 4e9 {
        return Err(Error::InvalidArgument(format!("h = {} too small for the direct lattice sum", g.h)));
    }
    let mut kmax = kmax_f as usize;
    while kmax > 0 && l - 2.0 * g.h * kmax as f64 <= 0.0 {
        kmax -= 1;
    }
    let mu = mobius_sieve(kmax);
    let mut cols = vec![0.0; kmax + 1];
    let mut terms = 0u64;
    for d in 1..=kmax {
        let sign = mu[d];
        if sign == 0 {
            continue;
        }
        let b = d as f64 * l;
        let mut j = d;
        while j <= kmax {
            let (v, t) = line_sum(kind, j as f64 * g.a, b, direct_ratio);
            cols[j] += sign as f64 * v;
            terms += t;
            j += d;
        }
        if terms > max_terms {
            return Err(Error::NotConverged {
                what: "even lattice sum (term cap)".into(),
                partial: f64::NAN,
                achieved: f64::INFINITY,
            });
        }
    }
    let mut total = NeumaierSum::new();
    for nt in (1..=kmax).rev() {
        total.add((l - 2.0 * g.h * nt as f64) * cols[nt]);
    }
    Ok((total.value(), terms))
}

fn adaptive_regrouped(g: &Geometry, kind: Summand, settings: &EvenSettings, scale: f64) -> Result<EvenSum> {
    if !(settings.tolerance > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be > 0, got {}", settings.tolerance)));
    }
    let mut ratio = 16.0;
    let (mut prev, mut terms) = regrouped(g, kind, ratio, settings.max_terms)?;
    loop {
        ratio *= 2.0;
        let (cur, t) = regrouped(g, kind, ratio, settings.max_terms)?;
        terms += t;
        let err = (cur - prev).abs();
        if err <= settings.tolerance * cur.abs() || cur == 0.0 {
            return Ok(EvenSum { value: scale * cur, error_estimate: (scale * err).abs(), terms, method: EvenMethod::Regrouped });
        }
        if ratio >= 1024.0 || terms > settings.max_terms {
            return Err(Error::NotConverged {
                what: "even lattice sum".into(),
                partial: scale * cur,
                achieved: err / cur.abs(),
            });
        }
        prev = cur;
    }
}

/// Sum of all even `n, m ≥ 1` terms (parallel-plate series excluded).
pub fn even_energy(g: &Geometry, settings: &EvenSettings) -> Result<EvenSum> {
    g.validate()?;
    if g.is_piston_like() {
        let l = g.period();
        let z = piston::epstein_z2(piston::EpsteinParams::new(g.a, l), settings.tolerance.max(1e-13))?;
        return Ok(EvenSum {
            value: -g.a * l * z.value / (8.0 * PI),
            error_estimate: g.a * l * (z.upper - z.lower) / (8.0 * PI),
            terms: z.cutoff * z.cutoff,
            method: EvenMethod::Piston,
        });
    }
    adaptive_regrouped(g, Summand::Energy, settings, -g.a * ZETA3 / (8.0 * PI))
}

/// `−d/da` of [`even_energy`], term by term.
pub fn even_paths_force(g: &Geometry, settings: &EvenSettings) -> Result<EvenSum> {
    g.validate()?;
    if g.is_piston_like() {
        return Ok(EvenSum {
            value: piston::piston_even_force(g.a, g.period())?,
            error_estimate: 0.0,
            terms: 0,
            method: EvenMethod::Piston,
        });
    }
    adaptive_regrouped(g, Summand::Force, settings, ZETA3 / (8.0 * PI))
}

/// `−d/da` of the even energy including the parallel-plate series.
pub fn even_force(g: &Geometry, settings: &EvenSettings) -> Result<f64> {
    Ok(even_paths_force(g, settings)?.value + pfa_force(g))
}

/// Even-class partial sums by reflection order `r = 2, 4, …, max_order`.
/// Each entry is `(r, paths, pfa)`: the cumulative sums of the `n, m ≥ 1`
/// terms with `2(n + m) ≤ r` and of the parallel-plate terms with `2n ≤ r`.
pub fn even_partials_by_order<F>(max_order: u64, term: F, pfa_term: impl Fn(u64) -> f64) -> Vec<(u64, f64, f64)>
where
    F: Fn(i64, i64) -> f64,
{
    let mut out = Vec::new();
    let mut paths = NeumaierSum::new();
    let mut pfa = NeumaierSum::new();
    let mut r = 2;
    while r <= max_order {
        let half = (r / 2) as i64;
        let mut diag = NeumaierSum::new();
        for n in 1..half {
            diag.add(term(n, half - n));
        }
        paths.add(diag.value());
        pfa.add(pfa_term(r / 2));
        out.push((r, paths.value(), pfa.value()));
        r += 2;
    }
    out
}

/// Energy partial sums by order for a geometry.
pub fn even_energy_by_order(g: &Geometry, max_order: u64) -> Vec<(u64, f64, f64)> {
    even_partials_by_order(max_order, |n, m| even_term_value(g, n, m), |n| {
        -g.s * g.a / (16.0 * PI * (n as f64 * g.a).powi(3))
    })
}

/// Force partial sums by order for a geometry.
pub fn even_force_by_order(g: &Geometry, max_order: u64) -> Vec<(u64, f64, f64)> {
    even_partials_by_order(max_order, |n, m| even_term_force(g, n, m), |n| {
        -g.s / (8.0 * PI * (n as f64).powi(3) * g.a.powi(3))
    })
}
