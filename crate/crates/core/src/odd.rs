//! Odd loops: their length depends on the start point, so each image
//! family is integrated over the unit cell.
//!
//! Two routes are available. The chord route integrates one coordinate
//! exactly (the allowed set along it is a union of intervals) and the other
//! either piecewise in closed form (`Chords`) or with seeded Gauss–Kronrod
//! (`ChordsGk`). `Cubature` integrates the escape indicator over the full
//! cell with the adaptive rectangle rule.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{Parity, PathClass};
use crate::error::{Error, Result};
use crate::geometry::{Geometry, Point};
use crate::lattice::chords::{FamilyChord, Orientation};
use crate::lattice::{allowed_unchecked, Image, LatticeIndex};
use crate::numerics::{integrate_1d, GkSettings, NeumaierSum};
use crate::quadrature::{integrate_2d, CubatureSettings, Rect};

/// `𝓔_{2,1}`: the three-reflection family bouncing twice off the squares.
pub fn energy21(g: &Geometry) -> f64 {
    let (a, s, h) = (g.a, g.s, g.h);
    let l = g.period();
    let mut t = s * a / a.hypot(l);
    if h > 0.0 {
        let ratio = (l / (2.0 * h)) * (1.0 + (1.0 + (2.0 * h / a).powi(2)).sqrt())
            / (1.0 + (1.0 + (l / a).powi(2)).sqrt());
        t -= 2.0 * h * ratio.ln();
    }
    -t / (32.0 * PI * a * a)
}

/// `𝓔_{1,2}`: the three-reflection family bouncing twice off the sidewalls.
pub fn energy12(g: &Geometry) -> f64 {
    let l = g.period();
    -g.a * g.s / (32.0 * PI * l * l * g.a.hypot(l))
}

/// All eight three-reflection loops, `4(𝓔_{2,1} + 𝓔_{1,2})`.
pub fn odd_energy_analytic3(g: &Geometry) -> f64 {
    4.0 * (energy21(g) + energy12(g))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OddPathFamily {
    pub image: Image,
    pub index: LatticeIndex,
    pub orientation: Orientation,
    pub reflection_order: u64,
}

impl OddPathFamily {
    /// `None` unless the image is odd and off-axis.
    pub fn new(image: Image) -> Option<Self> {
        if image.class() != PathClass::Odd || image.is_axis() {
            return None;
        }
        let orientation = match image.h_parity {
            Parity::Even => Orientation::XInvariant,
            Parity::Odd => Orientation::YInvariant,
        };
        Some(OddPathFamily { image, index: image.index, orientation, reflection_order: image.reflection_order() })
    }

    /// The four images sharing this family's energy: both sign choices of
    /// each offset (reflected about the relevant lattice line).
    pub fn equivalents(&self) -> [Image; 4] {
        let (n, m) = (self.image.n(), self.image.m());
        let (hp, vp) = (self.image.h_parity, self.image.v_parity);
        let flip_n = match hp {
            Parity::Even => -n,
            Parity::Odd => 1 - n,
        };
        let flip_m = match vp {
            Parity::Even => -m,
            Parity::Odd => 1 - m,
        };
        [
            Image::new(n, m, hp, vp),
            Image::new(flip_n, m, hp, vp),
            Image::new(n, flip_m, hp, vp),
            Image::new(flip_n, flip_m, hp, vp),
        ]
    }
}

/// One representative per group of four equivalent odd families at order
/// `r`: offsets `n, m ≥ 1`, sorted by `(n, m)` with `XInvariant` first.
pub fn canonical_families(order: u64) -> Vec<OddPathFamily> {
    let mut out = Vec::new();
    if order < 3 || order % 2 == 0 {
        return out;
    }
    // XInvariant: 2n + (2m − 1) = r; YInvariant: (2n − 1) + 2m = r.
    let half = ((order + 1) / 2) as i64;
    for n in 1..half {
        let m = half - n;
        for (hp, vp) in [(Parity::Even, Parity::Odd), (Parity::Odd, Parity::Even)] {
            out.push(OddPathFamily::new(Image::new(n, m, hp, vp)).expect("canonical family is odd"));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OddMethod {
    /// Closed-form integration between breakpoints.
    Chords,
    /// Adaptive Gauss–Kronrod over the breakpoint-seeded domain.
    ChordsGk,
    Cubature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OddSettings {
    pub method: OddMethod,
    /// Relative tolerance per family (chord route).
    pub rel_tolerance: f64,
    /// Absolute tolerance per family (chord route). The effective value is
    /// never below `rel_tolerance` times the family's unobstructed integral.
    pub abs_tolerance: f64,
    pub cubature: CubatureSettings,
}

impl Default for OddSettings {
    fn default() -> Self {
        OddSettings {
            method: OddMethod::Chords,
            rel_tolerance: 1e-11,
            abs_tolerance: 1e-18,
            cubature: CubatureSettings::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyEnergy {
    pub family: OddPathFamily,
    /// Number of images the value stands for.
    pub multiplicity: u32,
    /// Energy of all `multiplicity` images together.
    pub energy: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

fn effective_geometry(g: &Geometry) -> Geometry {
    if g.is_piston_like() {
        Geometry { a: g.a, s: g.period(), h: 0.0 }
    } else {
        *g
    }
}

/// `∫ dD/ρ³` and `∫ dD/(D ρ³)` over `[d1, d2]`, `ρ = √(D² + M²)`. The second
/// requires `D` not to change sign.
fn inverse_cube_integrals(d1: f64, d2: f64, m: f64) -> (f64, f64) {
    let (r1, r2) = (d1.hypot(m), d2.hypot(m));
    let i0 = if d1 * d2 > 0.0 {
        (d2 - d1) * (d2 + d1) / (r1 * r2 * (d2 * r1 + d1 * r2))
    } else {
        (d2 / r2 - d1 / r1) / (m * m)
    };
    // in terms of ρ: ∫ dρ / (ρ² (ρ² − M²))
    let rmin = r1.min(r2);
    let i1 = if rmin >= 2.0 * m {
        let x = (m / rmin).powi(2);
        let (x1, x2) = ((m / r1).powi(2), (m / r2).powi(2));
        let (mut p1, mut p2) = (1.0 / r1.powi(3), 1.0 / r2.powi(3));
        let mut acc = NeumaierSum::new();
        let mut k = 0;
        loop {
            let c = 1.0 / (2 * k + 3) as f64;
            acc.add(c * (p1 - p2));
            if x.powi(k + 1) < 1e-17 {
                break;
            }
            p1 *= x1;
            p2 *= x2;
            k += 1;
        }
        acc.value()
    } else {
        let log = (d2 / d1).abs().ln() + ((r1 + m) / (r2 + m)).ln();
        (log / m + (d1 - d2) * (d1 + d2) / ((r1 + r2) * r1 * r2)) / (m * m)
    };
    (i0, i1)
}

fn gk_settings(fam: &FamilyChord, g: &Geometry, breaks: usize, settings: &OddSettings) -> GkSettings {
    // Cancellation in the allowed measure limits attainable accuracy to a
    // fraction of the unobstructed integral, bounded by `a L / ℓ_min³`.
    let (t0, t1) = fam.domain();
    let l_min = fam.length(t0).min(fam.length(t1)).min(2.0 * g.period().min(g.a));
    let unobstructed = g.a * g.period() / l_min.powi(3);
    GkSettings {
        abs_tol: settings.abs_tolerance.max(settings.rel_tolerance * unobstructed),
        rel_tol: settings.rel_tolerance,
        max_intervals: 50 * (breaks + 1) + 10_000,
    }
}

fn not_converged(image: Image, value: f64, error: f64) -> Error {
    Error::NotConverged {
        what: format!("chord integral for odd family (n, m) = ({}, {})", image.n(), image.m()),
        partial: -value / (4.0 * PI),
        achieved: error / value.abs(),
    }
}

fn chord_family(g: &Geometry, image: Image) -> Result<FamilyChord> {
    FamilyChord::new(g, image).ok_or_else(|| Error::InvalidArgument(format!("{image:?} is not an odd off-axis image")))
}

/// Chord route with adaptive Gauss–Kronrod over the whole domain.
fn chords_gk_energy(g: &Geometry, image: Image, settings: &OddSettings) -> Result<(f64, f64, usize)> {
    let mut fam = chord_family(g, image)?;
    let (t0, t1) = fam.domain();
    let breaks = fam.breakpoints();
    let gk = gk_settings(&fam, g, breaks.len(), settings);
    let r = integrate_1d(
        |t| {
            let l = fam.length(t);
            fam.weight(t) / (l * l * l)
        },
        t0,
        t1,
        &breaks,
        &gk,
    );
    if !r.converged || !r.value.is_finite() {
        return Err(not_converged(image, r.value, r.error));
    }
    Ok((-r.value / (4.0 * PI), r.error / (4.0 * PI), r.evaluations))
}

/// Chord route integrating each piece between breakpoints in closed form.
/// The two-parameter weight model is fitted from two samples and checked
/// against a third; pieces failing the check go to Gauss–Kronrod.
fn chords_energy(g: &Geometry, image: Image, settings: &OddSettings) -> Result<(f64, f64, usize)> {
    let mut fam = chord_family(g, image)?;
    let (c, m) = fam.length_params().expect("odd family");
    let (t0, t1) = fam.domain();
    let mut knots = vec![t0];
    knots.extend(fam.breakpoints());
    knots.push(t1);
    let gk = gk_settings(&fam, g, knots.len(), settings);
    let check = 1e-10 * fam.weight_scale();
    let mut total = NeumaierSum::new();
    let mut error = 0.0;
    let mut evaluations = 0;
    let mut fallback = Vec::new();
    for piece in knots.windows(2) {
        let (tl, th) = (piece[0], piece[1]);
        let width = th - tl;
        if width <= 0.0 {
            continue;
        }
        let (d1, d2) = (c - th, c - tl);
        if width < 1e-3 * d1.abs().min(d2.abs()).min(m) {
            // narrow piece: three-point Gauss rule
            let k = 0.5 * (0.6f64).sqrt();
            for (x, wgt) in [(0.5 - k, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + k, 5.0 / 18.0)] {
                let t = tl + x * width;
                let l = fam.length(t);
                total.add(width * wgt * fam.weight(t) / (l * l * l));
            }
            evaluations += 3;
            continue;
        }
        if d1 * d2 <= 0.0 {
            fallback.push((tl, th));
            continue;
        }
        let (da, db, dm) = (c - (tl + 0.2 * width), c - (tl + 0.8 * width), c - (tl + 0.5 * width));
        let (wa, wb, wm) = (fam.weight(tl + 0.2 * width), fam.weight(tl + 0.8 * width), fam.weight(tl + 0.5 * width));
        evaluations += 3;
        let c1 = (wa - wb) / (1.0 / da - 1.0 / db);
        let c0 = wa - c1 / da;
        let resid = (wm - (c0 + c1 / dm)).abs();
        if !(resid <= check) {
            fallback.push((tl, th));
            continue;
        }
        let (i0, i1) = inverse_cube_integrals(d1, d2, m);
        total.add((c0 * i0 + c1 * i1) / 8.0);
        error += resid * i0.abs() / 8.0;
    }
    for (tl, th) in fallback {
        let r = integrate_1d(
            |t| {
                let l = fam.length(t);
                fam.weight(t) / (l * l * l)
            },
            tl,
            th,
            &[],
            &gk,
        );
        if !r.converged || !r.value.is_finite() {
            return Err(not_converged(image, r.value, r.error));
        }
        total.add(r.value);
        error += r.error;
        evaluations += r.evaluations;
    }
    let value = total.value();
    if !value.is_finite() {
        return Err(not_converged(image, value, error));
    }
    Ok((-value / (4.0 * PI), error / (4.0 * PI), evaluations))
}

fn cubature_energy(g: &Geometry, image: Image, settings: &OddSettings) -> Result<(f64, f64, usize)> {
    let domain = Rect::new(0.0, g.a, 0.0, g.period());
    let f = |x: f64, y: f64| {
        let start = Point::new(x, y);
        if !allowed_unchecked(g, start, &image) {
            return 0.0;
        }
        let p = image.at(g, start).position;
        let l = start.dist(&p);
        1.0 / (l * l * l)
    };
    let r = integrate_2d(domain, f, &settings.cubature)?;
    if !r.converged {
        return Err(Error::NotConverged {
            what: format!("cubature for odd family (n, m) = ({}, {})", image.n(), image.m()),
            partial: -r.value / (4.0 * PI),
            achieved: r.error_estimate / r.value.abs(),
        });
    }
    Ok((-r.value / (4.0 * PI), r.error_estimate / (4.0 * PI), r.evaluations))
}

/// `−(1/4π) ∫_cell [allowed]/ℓ³` for a single odd image.
pub fn image_energy(g: &Geometry, image: Image, settings: &OddSettings) -> Result<FamilyEnergy> {
    g.validate()?;
    let family = OddPathFamily::new(image)
        .ok_or_else(|| Error::InvalidArgument(format!("{image:?} is not an odd off-axis image")))?;
    let ge = effective_geometry(g);
    let (energy, error_estimate, evaluations) = match settings.method {
        OddMethod::Chords => chords_energy(&ge, image, settings)?,
        OddMethod::ChordsGk => chords_gk_energy(&ge, image, settings)?,
        OddMethod::Cubature => cubature_energy(&ge, image, settings)?,
    };
    Ok(FamilyEnergy { family, multiplicity: 1, energy, error_estimate, evaluations })
}

fn canonical_energy(g: &Geometry, family: OddPathFamily, settings: &OddSettings) -> Result<FamilyEnergy> {
    let mut e = image_energy(g, family.image, settings)?;
    e.multiplicity = 4;
    e.energy *= 4.0;
    e.error_estimate *= 4.0;
    Ok(e)
}

/// Energy of every odd family of order `r`, each group of four equivalent
/// images evaluated once. Families run in parallel and are reduced in order.
pub fn odd_order_energy(g: &Geometry, order: u64, settings: &OddSettings) -> Result<(f64, Vec<FamilyEnergy>)> {
    let fams = canonical_families(order);
    let values: Vec<FamilyEnergy> =
        fams.into_par_iter().map(|f| canonical_energy(g, f, settings)).collect::<Result<_>>()?;
    let total: NeumaierSum = values.iter().map(|v| v.energy).collect();
    Ok((total.value(), values))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddEnergy {
    pub energy: f64,
    /// `(r, energy of all order-r families)`.
    pub by_order: Vec<(u64, f64)>,
    pub families: Vec<FamilyEnergy>,
}

/// Sum of all odd families with `3 ≤ r ≤ max_order`.
pub fn odd_energy_numeric(g: &Geometry, max_order: u64, settings: &OddSettings) -> Result<OddEnergy> {
    if max_order < 3 || max_order % 2 == 0 {
        return Err(Error::InvalidArgument(format!("max order must be odd and >= 3, got {max_order}")));
    }
    let mut total = NeumaierSum::new();
    let mut by_order = Vec::new();
    let mut families = Vec::new();
    for r in (3..=max_order).step_by(2) {
        let (e, fam) = odd_order_energy(g, r, settings)?;
        total.add(e);
        by_order.push((r, e));
        families.extend(fam);
    }
    Ok(OddEnergy { energy: total.value(), by_order, families })
}
