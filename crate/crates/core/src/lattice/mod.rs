//! The unfolded mirror lattice.
//!
//! A loop from `(x0, y0)` back to itself after reflections is a straight
//! segment from the start to one of its mirror images. Images sit at
//! `X = x0 + 2na` (horizontally even) or `X = 2na − x0` (odd), and
//! `Y = y0 + 2mL` (vertically even) or `Y = 2mL − y0` (odd), `L = s + 2h`.
//! Vertical lines `x = ka` only reflect where the folded ordinate lies on a
//! square face; horizontal lines `y = kL` always reflect.

pub mod chords;

use serde::{Deserialize, Serialize};

use crate::channels::{Parity, PathClass};
use crate::error::{Error, Result};
use crate::geometry::{Geometry, Point};

pub fn gcd(a: u64, b: u64) -> u64 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeIndex {
    pub n: i64,
    pub m: i64,
    pub n_reduced: i64,
    pub m_reduced: i64,
}

impl LatticeIndex {
    pub fn new(n: i64, m: i64) -> Self {
        let g = gcd(n.unsigned_abs(), m.unsigned_abs()) as i64;
        if g == 0 {
            LatticeIndex { n, m, n_reduced: 0, m_reduced: 0 }
        } else {
            LatticeIndex { n, m, n_reduced: n / g, m_reduced: m / g }
        }
    }
}

pub fn classify(h_parity: Parity, v_parity: Parity) -> PathClass {
    match (h_parity, v_parity) {
        (Parity::Even, Parity::Even) => PathClass::Even,
        (Parity::Odd, Parity::Odd) => PathClass::Forbidden,
        _ => PathClass::Odd,
    }
}

/// Triangle wave of period `2L` with values in `[0, L]`: the ordinate inside
/// the unit cell reached by reflecting `y` in the lines `y = kL`.
pub fn fold(y: f64, period: f64) -> f64 {
    let t = y.rem_euclid(2.0 * period);
    if t <= period {
        t
    } else {
        2.0 * period - t
    }
}

/// A mirror image of the start point, independent of where the start is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Image {
    pub index: LatticeIndex,
    pub h_parity: Parity,
    pub v_parity: Parity,
}

/// An image placed for a given start point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImagePoint {
    pub image: Image,
    pub position: Point,
}

impl Image {
    pub fn new(n: i64, m: i64, h_parity: Parity, v_parity: Parity) -> Self {
        Image { index: LatticeIndex::new(n, m), h_parity, v_parity }
    }

    pub fn n(&self) -> i64 {
        self.index.n
    }

    pub fn m(&self) -> i64 {
        self.index.m
    }

    pub fn class(&self) -> PathClass {
        classify(self.h_parity, self.v_parity)
    }

    /// Number of vertical lines `x = ka` the loop crosses.
    pub fn horizontal_crossings(&self) -> u64 {
        let n = self.n();
        match self.h_parity {
            Parity::Even => 2 * n.unsigned_abs(),
            Parity::Odd => (2 * n - 1).unsigned_abs(),
        }
    }

    /// Number of horizontal lines `y = kL` the loop crosses.
    pub fn vertical_crossings(&self) -> u64 {
        let m = self.m();
        match self.v_parity {
            Parity::Even => 2 * m.unsigned_abs(),
            Parity::Odd => (2 * m - 1).unsigned_abs(),
        }
    }

    pub fn reflection_order(&self) -> u64 {
        self.horizontal_crossings() + self.vertical_crossings()
    }

    /// Loops that never leave one axis contribute only to the self-energy.
    pub fn is_axis(&self) -> bool {
        self.horizontal_crossings() == 0 || self.vertical_crossings() == 0
    }

    /// Indices `k` of the lines `x = ka` strictly between start and image,
    /// for any start with `x0 ∈ (0, a)`.
    pub fn crossing_range(&self) -> std::ops::RangeInclusive<i64> {
        let n = self.n();
        match self.h_parity {
            Parity::Even if n > 0 => 1..=2 * n,
            Parity::Even if n < 0 => 2 * n + 1..=0,
            Parity::Even => 1..=0,
            Parity::Odd if n >= 1 => 1..=2 * n - 1,
            Parity::Odd => 2 * n..=0,
        }
    }

    pub fn at(&self, g: &Geometry, start: Point) -> ImagePoint {
        let l = g.period();
        let (n, m) = (self.n() as f64, self.m() as f64);
        let x = match self.h_parity {
            Parity::Even => start.x + 2.0 * n * g.a,
            Parity::Odd => 2.0 * n * g.a - start.x,
        };
        let y = match self.v_parity {
            Parity::Even => start.y + 2.0 * m * l,
            Parity::Odd => 2.0 * m * l - start.y,
        };
        ImagePoint { image: *self, position: Point::new(x, y) }
    }

    /// The image that plays the same role for the start point reflected
    /// through the cell centre.
    pub fn point_reflected(&self) -> Image {
        let n = match self.h_parity {
            Parity::Even => -self.n(),
            Parity::Odd => 1 - self.n(),
        };
        let m = match self.v_parity {
            Parity::Even => -self.m(),
            Parity::Odd => 1 - self.m(),
        };
        Image::new(n, m, self.h_parity, self.v_parity)
    }
}

/// `ℓ_{n,m} = √((2na)² + (2mL)²)`, the start-independent even loop length.
pub fn path_length_even(g: &Geometry, n: i64, m: i64) -> f64 {
    (2.0 * n as f64 * g.a).hypot(2.0 * m as f64 * g.period())
}

/// Length of the loop from `start` to the placed image.
pub fn path_length_odd(g: &Geometry, image: &Image, start: Point) -> f64 {
    start.dist(&image.at(g, start).position)
}

fn check_start(g: &Geometry, start: Point) -> Result<()> {
    if !(start.x > 0.0 && start.x < g.a) || !start.y.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "start ({}, {}) must satisfy 0 < x < a = {}",
            start.x, start.y, g.a
        )));
    }
    Ok(())
}

/// Whether the loop from `start` to `image` stays between the squares.
/// Touching a face edge counts as escaping.
pub fn is_allowed(g: &Geometry, start: Point, image: &Image) -> Result<bool> {
    check_start(g, start)?;
    Ok(allowed_unchecked(g, start, image))
}

pub(crate) fn allowed_unchecked(g: &Geometry, start: Point, image: &Image) -> bool {
    let l = g.period();
    let target = image.at(g, start).position;
    let dx = target.x - start.x;
    let dy = target.y - start.y;
    let (lo, hi) = (g.h, g.h + g.s);
    for k in image.crossing_range() {
        let t = (k as f64 * g.a - start.x) / dx;
        let y = fold(start.y + t * dy, l);
        if !(y > lo && y < hi) {
            return false;
        }
    }
    true
}

fn horizontal_options(c: u64, parity: Parity) -> Vec<i64> {
    let c = c as i64;
    match parity {
        Parity::Even if c == 0 => vec![0],
        Parity::Even if c % 2 == 0 => vec![-c / 2, c / 2],
        Parity::Odd if c % 2 == 1 => vec![(1 - c) / 2, (1 + c) / 2],
        _ => vec![],
    }
}

/// All images of a given reflection order, sorted by `(n, m, h_parity, v_parity)`.
pub fn images_of_order(r: u64) -> Vec<Image> {
    let mut out = Vec::new();
    for hc in 0..=r {
        let vc = r - hc;
        for hp in [Parity::Even, Parity::Odd] {
            for vp in [Parity::Even, Parity::Odd] {
                for &n in &horizontal_options(hc, hp) {
                    for &m in &horizontal_options(vc, vp) {
                        out.push(Image::new(n, m, hp, vp));
                    }
                }
            }
        }
    }
    out.sort_by_key(|i| (i.n(), i.m(), i.h_parity, i.v_parity));
    out.dedup();
    out
}

/// Streams every image with `1 ≤ r ≤ max_order`, by increasing order then
/// lexicographically. Forbidden and axis images are included.
pub fn enumerate_images(max_order: u64) -> impl Iterator<Item = Image> {
    (1..=max_order).flat_map(images_of_order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(a: f64, s: f64, h: f64) -> Geometry {
        Geometry::new(a, s, h).unwrap()
    }

    #[test]
    fn reduction() {
        let i = LatticeIndex::new(4, 2);
        assert_eq!((i.n_reduced, i.m_reduced), (2, 1));
        let j = LatticeIndex::new(3, 0);
        assert_eq!((j.n_reduced, j.m_reduced), (1, 0));
        let k = LatticeIndex::new(-6, 9);
        assert_eq!((k.n_reduced, k.m_reduced), (-2, 3));
    }

    #[test]
    fn classes() {
        assert_eq!(classify(Parity::Even, Parity::Even), PathClass::Even);
        assert_eq!(classify(Parity::Even, Parity::Odd), PathClass::Odd);
        assert_eq!(classify(Parity::Odd, Parity::Even), PathClass::Odd);
        assert_eq!(classify(Parity::Odd, Parity::Odd), PathClass::Forbidden);
    }

    #[test]
    fn even_lengths() {
        assert_eq!(path_length_even(&g(1.0, 1.0, 0.0), 1, 0), 2.0);
        assert!((path_length_even(&g(1.0, 1.0, 0.0), 1, 1) - 8f64.sqrt()).abs() < 1e-15);
        let geo = g(1.0, 1.0, 0.25);
        let l = path_length_even(&geo, 1, 2);
        assert!((l - 40f64.sqrt()).abs() < 1e-14);
        let start = Point::new(0.3, 0.7);
        let img = Image::new(1, 2, Parity::Even, Parity::Even);
        assert!((path_length_odd(&geo, &img, start) - l).abs() < 1e-14);
    }

    #[test]
    fn odd_lengths_three_reflections() {
        let geo = g(1.0, 1.0, 0.0);
        let start = Point::new(0.4, 0.35);
        let i21 = Image::new(1, 1, Parity::Even, Parity::Odd);
        let want = 2.0 * (1.0 + (1.0 - start.y).powi(2)).sqrt();
        assert!((path_length_odd(&geo, &i21, start) - want).abs() < 1e-14);
        let i12 = Image::new(1, 1, Parity::Odd, Parity::Even);
        let want = 2.0 * ((1.0 - start.x).powi(2) + 1.0).sqrt();
        assert!((path_length_odd(&geo, &i12, start) - want).abs() < 1e-14);
        assert_eq!(i21.reflection_order(), 3);
        assert_eq!(i12.reflection_order(), 3);
    }

    #[test]
    fn fold_properties() {
        let l = 1.5;
        for &y in &[0.0, 0.2, 1.4, 1.5, 2.9, -0.7, 17.3] {
            let f = fold(y, l);
            assert!((0.0..=l).contains(&f));
            assert!((fold(-y, l) - f).abs() < 1e-12);
            assert!((fold(y + 2.0 * l, l) - f).abs() < 1e-12);
        }
        assert_eq!(fold(0.3, l), 0.3);
        assert!((fold(1.7, l) - 1.3).abs() < 1e-15);
    }

    #[test]
    fn piston_allows_every_unforbidden_image() {
        // Forbidden loops hit a lattice corner at h = 0, a tangency.
        let geo = g(1.0, 1.0, 0.0);
        let start = Point::new(0.37, 0.61);
        for img in enumerate_images(9).filter(|i| i.class() != PathClass::Forbidden) {
            assert!(is_allowed(&geo, start, &img).unwrap(), "{img:?}");
        }
    }

    #[test]
    fn invalid_start() {
        let geo = g(1.0, 1.0, 0.1);
        let img = Image::new(1, 1, Parity::Even, Parity::Even);
        assert!(is_allowed(&geo, Point::new(0.0, 0.5), &img).is_err());
        assert!(is_allowed(&geo, Point::new(1.2, 0.5), &img).is_err());
    }

    #[test]
    fn enumeration_counts() {
        let odd_nonaxis = |r: u64| {
            images_of_order(r)
                .into_iter()
                .filter(|i| i.class() == PathClass::Odd && !i.is_axis())
                .count()
        };
        assert_eq!(odd_nonaxis(1), 0);
        assert_eq!(odd_nonaxis(3), 8);
        assert_eq!(odd_nonaxis(5), 16);
        assert_eq!(odd_nonaxis(7), 24);
        let mut even2: Vec<(i64, i64)> = images_of_order(2)
            .into_iter()
            .filter(|i| i.class() == PathClass::Even)
            .map(|i| (i.n(), i.m()))
            .collect();
        even2.sort();
        assert_eq!(even2, vec![(-1, 0), (0, -1), (0, 1), (1, 0)]);
        let all: Vec<Image> = enumerate_images(6).collect();
        for w in all.windows(2) {
            assert!(w[0].reflection_order() <= w[1].reflection_order());
        }
        for (k, i) in all.iter().enumerate() {
            assert!(!all[k + 1..].contains(i));
        }
    }

    #[test]
    fn crossing_ranges_match_counts() {
        for r in 1..8 {
            for img in images_of_order(r) {
                let c = img.crossing_range().count() as u64;
                assert_eq!(c, img.horizontal_crossings(), "{img:?}");
            }
        }
    }
}
