//! Allowed measure along one coordinate for a whole image family.
//!
//! For a fixed image and a fixed value of one start coordinate, the crossing
//! ordinates are `α_k + u`, where `u` runs linearly with the other start
//! coordinate. The loop escapes when some `α_k + u` falls within `h` of a
//! sidewall line (mod `L`), so the forbidden set in `u` is a union of arcs of
//! half-width `h` centred on `−α_k` (mod `L`). The allowed measure is the
//! complement of that union inside the sampled `u` range.

use crate::channels::Parity;
use crate::geometry::Geometry;

use super::Image;

/// Union of arcs of equal half-width on a circle of circumference `period`.
#[derive(Debug, Clone, Default)]
pub struct ArcCover {
    period: f64,
    /// Disjoint merged arcs as `[lo, hi]`, with `lo` in `[−w, period)`.
    merged: Vec<(f64, f64)>,
    per_period: f64,
    full: bool,
    scratch: Vec<f64>,
}

impl ArcCover {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds the cover for arcs `[c − w, c + w]` around each centre.
    pub fn rebuild<I: IntoIterator<Item = f64>>(&mut self, centers: I, half_width: f64, period: f64) {
        self.period = period;
        self.merged.clear();
        self.scratch.clear();
        self.scratch.extend(centers.into_iter().map(|c| c.rem_euclid(period)));
        self.full = false;
        self.per_period = 0.0;
        if self.scratch.is_empty() || half_width <= 0.0 {
            return;
        }
        if 2.0 * half_width >= period {
            self.full = true;
            self.per_period = period;
            return;
        }
        self.scratch.sort_unstable_by(f64::total_cmp);
        for &c in &self.scratch {
            let (lo, hi) = (c - half_width, c + half_width);
            match self.merged.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => self.merged.push((lo, hi)),
            }
        }
        if self.merged.len() > 1 {
            let last = *self.merged.last().unwrap();
            if last.1 - period >= self.merged[0].0 {
                self.merged[0].0 = last.0 - period;
                self.merged.pop();
            }
        }
        if self.merged[0].1 - self.merged[0].0 >= period {
            self.full = true;
            self.per_period = period;
            return;
        }
        self.per_period = self.merged.iter().map(|(lo, hi)| hi - lo).sum();
    }

    /// Covered measure within `[0, u]` for `u ∈ [0, period)`.
    fn covered_head(&self, u: f64) -> f64 {
        let p = self.period;
        let mut f = 0.0;
        for &(lo, hi) in &self.merged {
            for shift in [-p, 0.0, p] {
                let a = (lo + shift).max(0.0);
                let b = (hi + shift).min(u);
                if b > a {
                    f += b - a;
                }
            }
        }
        f
    }

    /// Signed covered measure of `[0, u]`.
    fn cumulative(&self, u: f64) -> f64 {
        let q = (u / self.period).floor();
        let rem = (u - q * self.period).clamp(0.0, self.period);
        q * self.per_period + self.covered_head(rem)
    }

    /// Covered measure of `[lo, hi]`.
    pub fn covered_in(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        if self.full {
            return hi - lo;
        }
        if self.merged.is_empty() {
            return 0.0;
        }
        (self.cumulative(hi) - self.cumulative(lo)).clamp(0.0, hi - lo)
    }

    /// Covered measure of one full period.
    pub fn covered_per_period(&self) -> f64 {
        self.per_period
    }
}

/// Which start coordinate the loop length is independent of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Orientation {
    /// Horizontally even, vertically odd: the length depends on `y0` only.
    XInvariant,
    /// Horizontally odd, vertically even: the length depends on `x0` only.
    YInvariant,
    /// Even loops: the length depends on neither coordinate.
    Both,
}

/// Chord-measure evaluator for one non-axis, non-forbidden image family.
///
/// The integration variable `t` is `x0 ∈ (0, a)` for `YInvariant` and even
/// families and `y0 ∈ (0, L)` for `XInvariant` ones. `weight(t)` returns the
/// measure of the other coordinate for which the loop is allowed, and
/// `length(t)` the loop length.
#[derive(Debug, Clone)]
pub struct FamilyChord {
    pub image: Image,
    pub orientation: Orientation,
    a: f64,
    period: f64,
    h: f64,
    n: f64,
    m: f64,
    ks: Vec<f64>,
    cover: ArcCover,
}

impl FamilyChord {
    /// Returns `None` for forbidden or axis images.
    pub fn new(g: &Geometry, image: Image) -> Option<Self> {
        if image.is_axis() {
            return None;
        }
        let orientation = match (image.h_parity, image.v_parity) {
            (Parity::Even, Parity::Odd) => Orientation::XInvariant,
            (Parity::Odd, Parity::Even) => Orientation::YInvariant,
            (Parity::Even, Parity::Even) => Orientation::Both,
            (Parity::Odd, Parity::Odd) => return None,
        };
        Some(FamilyChord {
            image,
            orientation,
            a: g.a,
            period: g.period(),
            h: g.h,
            n: image.n() as f64,
            m: image.m() as f64,
            ks: image.crossing_range().map(|k| k as f64).collect(),
            cover: ArcCover::new(),
        })
    }

    /// Range of the integration variable.
    pub fn domain(&self) -> (f64, f64) {
        match self.orientation {
            Orientation::XInvariant => (0.0, self.period),
            _ => (0.0, self.a),
        }
    }

    pub fn length(&self, t: f64) -> f64 {
        let (a, l, n, m) = (self.a, self.period, self.n, self.m);
        match self.orientation {
            Orientation::XInvariant => 2.0 * (n * a).hypot(m * l - t),
            Orientation::YInvariant => 2.0 * (n * a - t).hypot(m * l),
            Orientation::Both => 2.0 * (n * a).hypot(m * l),
        }
    }

    /// `(c, M)` with `ℓ(t) = 2√(D² + M²)`, `D = c − t`. Between breakpoints
    /// the weight has the form `C0 + C1/D`. `None` for even families.
    pub fn length_params(&self) -> Option<(f64, f64)> {
        let (a, l, n, m) = (self.a, self.period, self.n, self.m);
        match self.orientation {
            Orientation::XInvariant => Some((m * l, n * a)),
            Orientation::YInvariant => Some((n * a, m * l)),
            Orientation::Both => None,
        }
    }

    /// Extent of the complementary coordinate (upper bound of the weight).
    pub fn weight_scale(&self) -> f64 {
        match self.orientation {
            Orientation::XInvariant => self.a,
            _ => self.period,
        }
    }

    /// Allowed measure of the complementary start coordinate at `t`.
    pub fn weight(&mut self, t: f64) -> f64 {
        let (a, l, h, n, m) = (self.a, self.period, self.h, self.n, self.m);
        match self.orientation {
            Orientation::YInvariant | Orientation::Both => {
                if h <= 0.0 {
                    return l;
                }
                // y_k = y0 + α_k with α_k = q (k a − x0)
                let q = match self.orientation {
                    Orientation::YInvariant => m * l / (n * a - t),
                    _ => m * l / (n * a),
                };
                self.cover.rebuild(self.ks.iter().map(|k| -q * (k * a - t)), h, l);
                l - self.cover.covered_per_period()
            }
            Orientation::XInvariant => {
                // y_k = α_k + u, α_k = y0 + k v / n, u = β x0, β = −v/(n a)
                let v = m * l - t;
                let beta = -v / (n * a);
                if beta == 0.0 {
                    let ok = self.ks.iter().all(|k| {
                        let y = super::fold(t + k * v / n, l);
                        y > h && y < l - h
                    });
                    return if ok { a } else { 0.0 };
                }
                if h <= 0.0 {
                    return a;
                }
                self.cover.rebuild(self.ks.iter().map(|k| -(t + k * v / n)), h, l);
                let (lo, hi) = if beta < 0.0 { (beta * a, 0.0) } else { (0.0, beta * a) };
                ((hi - lo) - self.cover.covered_in(lo, hi)) / beta.abs()
            }
        }
    }

    /// Points in the domain where the weight may fail to be smooth: arcs
    /// touching each other and, for `XInvariant` families, arcs touching the
    /// ends of the sampled range.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        if self.h <= 0.0 || 2.0 * self.h >= self.period {
            return out;
        }
        let (a, l, h, n, m) = (self.a, self.period, self.h, self.n, self.m);
        let kcount = self.ks.len();
        let offsets = [0.0, 2.0 * h, -2.0 * h];
        let (t0, t1) = self.domain();
        match self.orientation {
            Orientation::Both => {}
            Orientation::YInvariant => {
                // (i − j) a m / D ≡ δ/L (mod 1), D = n a − x0.
                let (d_lo, d_hi) = (n * a - t1, n * a - t0);
                if d_lo <= 0.0 && d_hi >= 0.0 {
                    return out;
                }
                for d in 1..kcount {
                    let c = d as f64 * a * m;
                    let (ta, tb) = (c / d_lo, c / d_hi);
                    let (tmin, tmax) = (ta.min(tb), ta.max(tb));
                    for off in offsets {
                        let shift = off / l;
                        let p0 = (tmin - shift).ceil() as i64;
                        let p1 = (tmax - shift).floor() as i64;
                        for p in p0..=p1 {
                            let tt = p as f64 + shift;
                            if tt != 0.0 {
                                out.push(n * a - c / tt);
                            }
                        }
                    }
                }
            }
            Orientation::XInvariant => {
                // Pairwise: (i − j) v / n ≡ δ (mod L), v = m L − y0.
                let (v_lo, v_hi) = (m * l - t1, m * l - t0);
                for d in 1..kcount {
                    let df = d as f64;
                    let (ea, eb) = (df * v_lo / n, df * v_hi / n);
                    let (emin, emax) = (ea.min(eb), ea.max(eb));
                    for off in offsets {
                        let p0 = ((emin - off) / l).ceil() as i64;
                        let p1 = ((emax - off) / l).floor() as i64;
                        for p in p0..=p1 {
                            let v = n * (p as f64 * l + off) / df;
                            out.push(m * l - v);
                        }
                    }
                }
                // Range ends: α_j ≡ ±h for j ∈ [k_min − 1, k_max].
                let kmin = *self.ks.first().unwrap() as i64;
                let kmax = *self.ks.last().unwrap() as i64;
                for j in (kmin - 1)..=kmax {
                    let jf = j as f64;
                    let slope = 1.0 - jf / n;
                    if slope == 0.0 {
                        continue;
                    }
                    let base = jf * m * l / n;
                    let (ea, eb) = (base + slope * t0, base + slope * t1);
                    let (emin, emax) = (ea.min(eb), ea.max(eb));
                    for sigma in [h, -h] {
                        let q0 = ((emin - sigma) / l).ceil() as i64;
                        let q1 = ((emax - sigma) / l).floor() as i64;
                        for q in q0..=q1 {
                            out.push((q as f64 * l + sigma - base) / slope);
                        }
                    }
                }
            }
        }
        out.retain(|t| t.is_finite() && *t > t0 && *t < t1);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}
