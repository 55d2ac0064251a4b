//! Globally adaptive 7/15-point Gauss–Kronrod quadrature on an interval,
//! optionally seeded with known breakpoints of the integrand.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::sum::NeumaierSum;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights at XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GkSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Cap on the number of subintervals (seeded pieces included).
    pub max_intervals: usize,
}

impl Default for GkSettings {
    fn default() -> Self {
        GkSettings { abs_tol: 1e-14, rel_tol: 1e-10, max_intervals: 200_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GkResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Clone, Copy)]
struct Piece {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> (f64, f64) {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
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

/// Integrates `f` over `[lo, hi]`. Points in `breaks` that fall strictly
/// inside the interval become initial subdivision points; they need not be
/// sorted or unique.
pub fn integrate_1d<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    settings: &GkSettings,
) -> GkResult {
    if !(hi > lo) {
        return GkResult { value: 0.0, error: 0.0, evaluations: 0, converged: true };
    }
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&b| b > lo && b < hi).collect();
    cuts.sort_by(f64::total_cmp);
    let min_width = (hi - lo) * 1e-14;
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(lo);
    for c in cuts {
        if c - edges.last().unwrap() > min_width && hi - c > min_width {
            edges.push(c);
        }
    }
    edges.push(hi);

    let mut pieces: Vec<Piece> = Vec::with_capacity(edges.len() * 2);
    let mut live: Vec<bool> = Vec::with_capacity(edges.len() * 2);
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    let mut total_err = 0.0;
    let mut total_val = 0.0;
    for w in edges.windows(2) {
        let (v, e) = kronrod(&mut f, w[0], w[1]);
        evaluations += 15;
        heap.push(Entry { error: e, id: pieces.len() });
        pieces.push(Piece { lo: w[0], hi: w[1], value: v, error: e });
        live.push(true);
        total_err += e;
        total_val += v;
    }

    let target = |v: f64| settings.abs_tol.max(settings.rel_tol * v.abs());
    let mut converged = total_err <= target(total_val);
    while !converged && heap.len() < settings.max_intervals {
        let Some(top) = heap.pop() else { break };
        let p = pieces[top.id];
        let mid = 0.5 * (p.lo + p.hi);
        if mid <= p.lo || mid >= p.hi {
            // Interval exhausted at machine resolution.
            heap.push(Entry { error: 0.0, id: top.id });
            total_err -= p.error;
            pieces[top.id].error = 0.0;
            continue;
        }
        live[top.id] = false;
        let (v1, e1) = kronrod(&mut f, p.lo, mid);
        let (v2, e2) = kronrod(&mut f, mid, p.hi);
        evaluations += 30;
        total_val += v1 + v2 - p.value;
        total_err += e1 + e2 - p.error;
        for (lo, hi, v, e) in [(p.lo, mid, v1, e1), (mid, p.hi, v2, e2)] {
            heap.push(Entry { error: e, id: pieces.len() });
            pieces.push(Piece { lo, hi, value: v, error: e });
            live.push(true);
        }
        converged = total_err <= target(total_val);
    }

    let mut value = NeumaierSum::new();
    let mut error = NeumaierSum::new();
    for (p, alive) in pieces.iter().zip(&live) {
        if *alive {
            value.add(p.value);
            error.add(p.error);
        }
    }
    let value = value.value();
    let error = error.value();
    GkResult { value, error, evaluations, converged: converged || error <= target(value) }
}
