//! `lo:hi:step` grids.

use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Grid {
    /// `lo, lo + step, …` up to `hi` inclusive; `hi` itself is kept when it
    /// lies within a millionth of a step of the last point.
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step + 1e-6).floor() as usize;
        (0..=n).map(|i| self.lo + i as f64 * self.step).collect()
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, String> {
        let parts: Vec<&str> = text.split(':').collect();
        let [lo, hi, step] = parts.as_slice() else {
            return Err(format!("grid `{text}` is not of the form lo:hi:step"));
        };
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("grid `{text}`: `{s}`: {e}"));
        let g = Grid { lo: num(lo)?, hi: num(hi)?, step: num(step)? };
        if !(g.lo.is_finite() && g.hi.is_finite() && g.step.is_finite()) {
            return Err(format!("grid `{text}` must be finite"));
        }
        if !(g.step > 0.0) {
            return Err(format!("grid `{text}`: step must be > 0"));
        }
        if g.hi < g.lo {
            return Err(format!("grid `{text}`: hi < lo"));
        }
        if (g.hi - g.lo) / g.step > 1e6 {
            return Err(format!("grid `{text}` has more than a million points"));
        }
        Ok(g)
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.step)
    }
}
