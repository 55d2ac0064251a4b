//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --release -p raycasimir --test acceptance`. Pass
//! criterion ids (`C1`, `C4`, ...) after `--` to run a subset. The process
//! exits 0 regardless of the outcome unless `ACCEPTANCE_STRICT=1` is set.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use raycasimir::assembly::{
    convergence_study, energy_breakdown, force_breakdown, odd_force, order_for_error, sweep_a, sweep_h, AssemblySettings,
    Normalization,
};
use raycasimir::channels::{pfa_energy, pfa_force, PathClass, ZETA3};
use raycasimir::even::{even_energy, occupancy, EvenSettings};
use raycasimir::lattice::{is_allowed, Image};
use raycasimir::numerics::linear_fit;
use raycasimir::odd::{odd_energy_analytic3, odd_order_energy, OddMethod, OddSettings};
use raycasimir::piston::{epstein_z2, piston_odd_energy, EpsteinParams};
use raycasimir::quadrature::{integrate_2d, CubatureSettings, Rect};
use raycasimir::{Geometry, Parity, Point};

// Tolerances and runtime budgets.
const C1_REL: f64 = 5e-3;
const C1_SECONDS: f64 = 60.0;
const C2_REL: f64 = 1e-4;
const C2_Z2_ABS: f64 = 1e-6;
const C2_SECONDS: f64 = 10.0;
const C3_REL: f64 = 1e-4;
const C3_SECONDS: f64 = 300.0;
const C4_WINDOW: (f64, f64) = (0.2, 0.4);
const C4_SECONDS: f64 = 1800.0;
const C5_FRACTION: f64 = 0.05;
const C6_SLOPE: f64 = -2.0;
const C6_SLOPE_TOL: f64 = 0.2;
const C6_MAX_ORDER: u64 = 201;
const C6_RATIO: (f64, f64) = (1.5, 3.0);
/// Common absolute error for the order ratio, as a fraction of `|E_pfa|`;
/// raw partial sums err as O(1/r), so this must be reachable below r = 201.
const C6_ERR_FRACTION: f64 = 0.1;
const C7_R2: f64 = 0.99;
const C7_ORDER: u64 = 101;
/// Central-difference step for C7, as a fraction of `a`.
const C7_STEP: f64 = 1e-4;
const C8_POWER: (f64, f64) = (-2.3, -1.8);
const C8_FLAT: f64 = 0.10;
const C9_TRIALS: usize = 10_000;

/// `ζ(3/2) β(3/2) − ζ(3)`, evaluated to 30 digits with arbitrary precision.
const Z2_UNIT: f64 = 1.056_348_517_615_643_3;

struct Outcome {
    pass: bool,
    summary: String,
}

fn outcome(pass: bool, summary: impl Into<String>) -> Outcome {
    Outcome { pass, summary: summary.into() }
}

fn geo(a: f64, s: f64, h: f64) -> Geometry {
    Geometry::new(a, s, h).expect("valid geometry")
}

fn rel(x: f64, want: f64) -> f64 {
    (x / want - 1.0).abs()
}

/// `K₁(x) = ∫₀^∞ e^{−x cosh t} cosh t dt` by the trapezoid rule, which
/// converges geometrically for this doubly exponential integrand.
fn bessel_k1(x: f64) -> f64 {
    let step: f64 = 0.02;
    let mut sum = 0.5 * (-x).exp();
    let mut t = step;
    loop {
        let term = (-x * t.cosh()).exp() * t.cosh();
        sum += term;
        if term <= 1e-30 * sum {
            break;
        }
        t += step;
    }
    sum * step
}

/// Quadrant Epstein sum from the Chowla–Selberg expansion (Poisson
/// resummation in `m`), independent of the direct-sum-plus-tail route.
fn z2_bessel(a: f64, b: f64) -> f64 {
    let zeta2 = PI * PI / 6.0;
    let mut s = zeta2 / (b * a * a) - ZETA3 / (2.0 * a * a * a);
    for n in 1..60 {
        for k in 1..60 {
            let w = 2.0 * PI * k as f64 / b;
            let x = n as f64 * a * w;
            if x > 600.0 {
                break;
            }
            s += 2.0 / b * (w / (n as f64 * a)) * bessel_k1(x);
        }
    }
    s
}

fn c1() -> Outcome {
    let t = Instant::now();
    let g = geo(1.0, 1.0, 0.0);
    let r = match energy_breakdown(&g, &AssemblySettings::default()) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("error: {e}")),
    };
    let want = -PI / 24.0;
    let got = r.odd.value;
    let secs = t.elapsed().as_secs_f64();
    let e = rel(got, want);
    outcome(
        r.odd.converged() && e < C1_REL && secs < C1_SECONDS,
        format!(
            "odd piston energy {got:.7} vs -pi/24 = {want:.7}, rel {e:.2e} (tol {C1_REL:.0e}); converged={} at r={}; raw partial {:.7}; {secs:.1}s",
            r.odd.converged(),
            r.odd.final_order(),
            r.odd.partial_values.last().unwrap()
        ),
    )
}

fn c2() -> Outcome {
    let t = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for (a, s) in [(1.0, 1.0), (1.0, 2.0), (2.0, 1.0)] {
        let got = match even_energy(&geo(a, s, 0.0), &EvenSettings::default()) {
            Ok(v) => v.value,
            Err(e) => return outcome(false, format!("error: {e}")),
        };
        let want = -a * s * z2_bessel(a, s) / (8.0 * PI);
        let e = rel(got, want);
        pass &= e < C2_REL;
        parts.push(format!("({a},{s}) {got:.10} rel {e:.1e}"));
    }
    let z = epstein_z2(EpsteinParams::new(1.0, 1.0), 1e-10).map(|z| z.value).unwrap_or(f64::NAN);
    let dz = (z - Z2_UNIT).abs();
    pass &= dz < C2_Z2_ABS;
    let secs = t.elapsed().as_secs_f64();
    pass &= secs < C2_SECONDS;
    outcome(
        pass,
        format!(
            "even piston energy vs Bessel-series Z2: {} (tol {C2_REL:.0e}); Z2(1,1;3) = {z:.12} vs zeta(3/2)beta(3/2)-zeta(3), |diff| {dz:.1e}; {secs:.1}s",
            parts.join(", ")
        ),
    )
}

fn c3() -> Outcome {
    let t = Instant::now();
    let mut worst = [0.0f64; 2];
    let mut failures = Vec::new();
    let routes = [
        ("chords", OddSettings::default()),
        ("cubature", OddSettings { method: OddMethod::Cubature, ..Default::default() }),
    ];
    for a in [0.5, 1.0, 2.0] {
        for s in [0.5, 1.0, 2.0] {
            for h in [0.0, 0.1, 0.25, 1.0] {
                let g = geo(a, s, h);
                let want = odd_energy_analytic3(&g);
                for (i, (name, settings)) in routes.iter().enumerate() {
                    let e = match odd_order_energy(&g, 3, settings) {
                        Ok((v, _)) => rel(v, want),
                        Err(_) => f64::INFINITY,
                    };
                    worst[i] = worst[i].max(e);
                    if !(e < C3_REL) {
                        failures.push(format!("{name} ({a},{s},{h}) rel {e:.1e}"));
                    }
                }
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        failures.is_empty() && secs < C3_SECONDS,
        format!(
            "r=3 numeric vs closed forms on 36 geometries: worst rel chords {:.1e}, cubature {:.1e} (tol {C3_REL:.0e}){}; {secs:.1}s",
            worst[0],
            worst[1],
            if failures.is_empty() { String::new() } else { format!("; failing: {}", failures.join(", ")) }
        ),
    )
}

fn c4() -> Outcome {
    let t = Instant::now();
    let hs: Vec<f64> = (0..=40).map(|i| i as f64 * 0.025).collect();
    let sweep = match sweep_h(1.0, 1.0, &hs, &AssemblySettings::default()) {
        Ok(s) => s,
        Err(e) => return outcome(false, format!("error: {e}")),
    };
    let totals: Vec<f64> = sweep.records.iter().map(|r| r.total().unwrap_or(f64::NAN)).collect();
    for (r, f) in sweep.records.iter().zip(&totals) {
        println!("  C4 h={:.3} F_total/(2F_pfa)={:.6} F_odd={:+.6e} converged={}", r.geometry.h, f / (2.0 * r.f_pfa), r.forces.map_or(f64::NAN, |f| f.odd_paths), r.converged);
    }
    let (f0, f1) = (totals[0].abs(), totals[totals.len() - 1].abs());
    let secs = t.elapsed().as_secs_f64();
    let ends = f0 > f1;
    let (inside, where_) = match sweep.extremum {
        Some(e) => (e.h >= C4_WINDOW.0 && e.h <= C4_WINDOW.1, format!("interior minimum of |F_total| at h={:.3} (grid {:.3})", e.h, e.grid_h)),
        None => (false, "no interior minimum of |F_total|".to_string()),
    };
    outcome(
        inside && ends && secs < C4_SECONDS && sweep.records.iter().all(|r| r.converged),
        format!(
            "{where_}, window [{}, {}]; |F(0)|={f0:.6} > |F(1)|={f1:.6}: {ends}; all converged: {}; {secs:.0}s",
            C4_WINDOW.0,
            C4_WINDOW.1,
            sweep.records.iter().all(|r| r.converged)
        ),
    )
}

fn c5() -> Outcome {
    let g = geo(1.0, 1.0, 5.0);
    let (rep, _) = match odd_force(&g, &AssemblySettings::default()) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("error: {e}")),
    };
    let ratio = (rep.value / pfa_force(&g)).abs();
    outcome(
        ratio < C5_FRACTION,
        format!("|F_odd(h=5)|/|F_pfa| = {ratio:.3e} (limit {C5_FRACTION}); converged={}", rep.converged()),
    )
}

fn c6() -> Outcome {
    let t = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    let settings = AssemblySettings::default();
    let mut piston = None;
    for h in [0.0, 0.01, 0.1] {
        let g = geo(1.0, 1.0, h);
        let study = match convergence_study(&g, C6_MAX_ORDER, &settings) {
            Ok(s) => s,
            Err(e) => return outcome(false, format!("error: {e}")),
        };
        for rep in [&study.even, &study.odd] {
            let slope = rep.fitted_slope.unwrap_or(f64::NAN);
            let ok = (slope - C6_SLOPE).abs() <= C6_SLOPE_TOL;
            pass &= ok;
            parts.push(format!("{:?}@h={h}: {slope:.2}{}", rep.channel, if ok { "" } else { " (out)" }));
        }
        if h == 0.0 {
            piston = Some((g, study));
        }
    }
    let (g, study) = piston.expect("h = 0 study");
    let even_limit = match even_energy(&g, &EvenSettings::default()) {
        Ok(v) => v.value + pfa_energy(&g),
        Err(e) => return outcome(false, format!("error: {e}")),
    };
    let odd_limit = piston_odd_energy(g.a, g.s).expect("valid piston");
    let target = C6_ERR_FRACTION * pfa_energy(&g).abs();
    let re = order_for_error(&study.even.orders_evaluated, &study.even.partial_values, even_limit, target);
    let ro = order_for_error(&study.odd.orders_evaluated, &study.odd.partial_values, odd_limit, target);
    let ratio = match (re, ro) {
        (Some(e), Some(o)) => o / e,
        _ => f64::NAN,
    };
    let ratio_ok = ratio >= C6_RATIO.0 && ratio <= C6_RATIO.1;
    pass &= ratio_ok;
    outcome(
        pass,
        format!(
            "slopes (upper half of r <= {C6_MAX_ORDER}, want {C6_SLOPE} +- {C6_SLOPE_TOL}): {}; odd/even order for |err| <= {target:.2e} at h=0: {:.1}/{:.1} = {ratio:.2} (accept {:?}); {:.0}s",
            parts.join(", "),
            ro.unwrap_or(f64::NAN),
            re.unwrap_or(f64::NAN),
            C6_RATIO,
            t.elapsed().as_secs_f64()
        ),
    )
}

fn c7() -> Outcome {
    let t = Instant::now();
    // Same truncation order at every h so the tail is common to all points.
    let settings = AssemblySettings {
        tolerance: f64::MIN_POSITIVE,
        max_order: C7_ORDER,
        relative_step: Some(C7_STEP),
        ..Default::default()
    };
    let hs: Vec<f64> = (0..=10).map(|i| 1e-4 * 10f64.powf(i as f64 * 0.2)).collect();
    let mut forces = Vec::new();
    for &h in &hs {
        match odd_force(&geo(1.0, 1.0, h), &settings) {
            Ok((rep, _)) => forces.push(rep.value.abs()),
            Err(e) => return outcome(false, format!("error at h={h}: {e}")),
        }
    }
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for i in 0..hs.len() - 1 {
        x.push((hs[i] * hs[i + 1]).sqrt().ln());
        y.push((forces[i + 1] - forces[i]) / (hs[i + 1] - hs[i]));
    }
    let fit = match linear_fit(&x, &y) {
        Some(f) => f,
        None => return outcome(false, "degenerate fit"),
    };
    outcome(
        // the magnitude of the derivative must grow toward small h
        fit.r_squared > C7_R2 && y[0].abs() > y[y.len() - 1].abs(),
        format!(
            "d|F_odd|/dh vs log h on [1e-4, 1e-2] at r <= {C7_ORDER}: slope {:.4}, R^2 {:.5} (want > {C7_R2}); derivative {:.4} .. {:.4}; {:.0}s",
            fit.slope,
            fit.r_squared,
            y[0],
            y[y.len() - 1],
            t.elapsed().as_secs_f64()
        ),
    )
}

fn c8() -> Outcome {
    let t = Instant::now();
    let a_values = [1.0, 2.0, 4.0, 8.0, 16.0];
    let recs = match sweep_a(&a_values, 1.0, 0.25, &AssemblySettings::default(), Normalization::PistonAtSameA) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("error: {e}")),
    };
    let totals: Vec<f64> = recs.iter().map(|r| r.total().unwrap_or(f64::NAN)).collect();
    for (r, f) in recs.iter().zip(&totals) {
        println!("  C8 a={:>4} F_total={:+.6e} ratio_to_piston={:.6} converged={}", r.geometry.a, f, r.total_over_reference, r.converged);
    }
    let x: Vec<f64> = a_values.iter().map(|a| a.ln()).collect();
    let y: Vec<f64> = totals.iter().map(|f| f.abs().ln()).collect();
    let power = linear_fit(&x, &y).map_or(f64::NAN, |f| f.slope);
    let (r8, r16) = (recs[3].total_over_reference, recs[4].total_over_reference);
    let change = (r16 / r8 - 1.0).abs();
    let pass = power >= C8_POWER.0 && power <= C8_POWER.1 && change < C8_FLAT;
    outcome(
        pass,
        format!(
            "power of |F_total| vs a on [1,16]: {power:.3} (want {:?}); ratio to piston a=8: {r8:.4}, a=16: {r16:.4}, change {change:.3} (want < {C8_FLAT}); {:.0}s",
            C8_POWER,
            t.elapsed().as_secs_f64()
        ),
    )
}

fn c9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut failures = Vec::new();

    // channel identities
    let g = geo(1.0, 1.0, 0.3);
    let fast = AssemblySettings { tolerance: 1e-3, ..Default::default() };
    match force_breakdown(&g, &fast) {
        Ok(r) => {
            let f = r.forces;
            let even = f.even_paths + f.pfa;
            let ok = (f.neumann - (even + f.odd_paths)).abs() < 1e-15
                && (f.dirichlet - (even - f.odd_paths)).abs() < 1e-15
                && (f.total - 2.0 * even).abs() < 1e-15;
            if !ok {
                failures.push("channel identities".to_string());
            }
        }
        Err(e) => failures.push(format!("channel identities: {e}")),
    }

    // λ-scaling of order-limited sums
    for lambda in [0.5, 2.0, 10.0] {
        let base = geo(0.8, 1.3, 0.2);
        let scaled = base.scaled(lambda);
        let odd = |g: &Geometry| odd_order_energy(g, 9, &OddSettings::default()).map(|v| v.0).unwrap_or(f64::NAN);
        let even = |g: &Geometry| even_energy(g, &EvenSettings::default()).map(|v| v.value).unwrap_or(f64::NAN);
        let checks = [
            ("odd", odd(&scaled), odd(&base)),
            ("even", even(&scaled), even(&base)),
            ("pfa", pfa_energy(&scaled), pfa_energy(&base)),
        ];
        for (name, s, b) in checks {
            if !(rel(s * lambda, b) < 1e-8) {
                failures.push(format!("scaling {name} at {lambda}"));
            }
        }
    }

    // forbidden loops always escape
    let mut counter = 0;
    for _ in 0..C9_TRIALS {
        let g = geo(rng.gen_range(0.2..3.0), rng.gen_range(0.2..3.0), rng.gen_range(1e-3..1.0));
        let img = Image::new(rng.gen_range(-6..=6), rng.gen_range(-6..=6), Parity::Odd, Parity::Odd);
        debug_assert_eq!(img.class(), PathClass::Forbidden);
        let p = Point::new(rng.gen_range(0.0..g.a), rng.gen_range(0.0..g.period()));
        if p.x <= 0.0 || is_allowed(&g, p, &img).unwrap_or(false) {
            counter += 1;
        }
    }
    if counter > 0 {
        failures.push(format!("{counter} forbidden counterexamples"));
    }

    // Monte Carlo allowed measure vs band occupancy
    let g = geo(1.0, 1.0, 0.07);
    let mut worst_z = 0.0f64;
    for (n, m) in [(1, 1), (2, 1), (1, 3), (3, 2), (2, 4)] {
        let img = Image::new(n, m, Parity::Even, Parity::Even);
        let nt = img.index.n_reduced;
        let p = nt as f64 * occupancy(&g, nt) / g.period();
        let mut hits = 0usize;
        for _ in 0..C9_TRIALS {
            let pt = Point::new(rng.gen_range(0.0..g.a), rng.gen_range(0.0..g.period()));
            if pt.x > 0.0 && is_allowed(&g, pt, &img).unwrap_or(false) {
                hits += 1;
            }
        }
        let phat = hits as f64 / C9_TRIALS as f64;
        let sigma = (p * (1.0 - p) / C9_TRIALS as f64).sqrt().max(1e-12);
        let z = (phat - p).abs() / sigma;
        worst_z = worst_z.max(z);
        if z > 3.0 {
            failures.push(format!("Monte Carlo ({n},{m}) z={z:.2}"));
        }
    }

    // cubature oracles
    let cs = CubatureSettings::default();
    let rect = Rect::new(0.0, 1.5, 0.0, 0.8);
    let one = integrate_2d(rect, |_, _| 1.0, &cs).map(|r| r.value).unwrap_or(f64::NAN);
    let half = integrate_2d(rect, |x, _| if x < 0.6 { 1.0 } else { 0.0 }, &cs).map(|r| r.value).unwrap_or(f64::NAN);
    if !(rel(one, 1.2) < 1e-12) || !(rel(half, 0.48) < 1e-5) {
        failures.push(format!("cubature indicators {one} {half}"));
    }
    let cub = OddSettings { method: OddMethod::Cubature, ..Default::default() };
    for g in [geo(1.0, 1.0, 0.0), geo(1.0, 1.0, 0.25)] {
        let got = odd_order_energy(&g, 3, &cub).map(|v| v.0).unwrap_or(f64::NAN);
        if !(rel(got, odd_energy_analytic3(&g)) < 1e-4) {
            failures.push(format!("cubature r=3 at h={}", g.h));
        }
    }

    outcome(
        failures.is_empty(),
        format!(
            "identities, scaling, {C9_TRIALS} forbidden trials, Monte Carlo occupancy (worst z {worst_z:.2}), cubature oracles{}",
            if failures.is_empty() { ": all green".to_string() } else { format!(": {}", failures.join("; ")) }
        ),
    )
}

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| a.starts_with('C')).collect();
    let criteria: [(&str, &str, fn() -> Outcome); 9] = [
        ("C1", "piston odd energy", c1),
        ("C2", "piston even energy", c2),
        ("C3", "three-reflection closed forms", c3),
        ("C4", "non-monotonic total force", c4),
        ("C5", "odd force vanishes at large h", c5),
        ("C6", "convergence scaling", c6),
        ("C7", "logarithmic singularity", c7),
        ("C8", "large-a scaling", c8),
        ("C9", "property suites", c9),
    ];
    let mut failed = Vec::new();
    let mut ran = 0;
    for (id, name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f == id) {
            continue;
        }
        ran += 1;
        let o = run();
        println!("{} {id} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.summary);
        if !o.pass {
            failed.push(id);
        }
    }
    println!("acceptance: {} of {ran} criteria passed{}", ran - failed.len(), if failed.is_empty() { String::new() } else { format!("; failed: {}", failed.join(", ")) });
    if std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") && !failed.is_empty() {
        std::process::exit(1);
    }
}
