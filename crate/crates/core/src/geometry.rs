//! The squares-between-sidewalls configuration.
//!
//! Unit cell: `x ∈ [0, a]`, `y ∈ [0, L]` with `L = s + 2h`. The square faces
//! sit at `x = 0` and `x = a` for `y ∈ [h, h + s]`; the sidewalls are the
//! horizontal lines `y = kL`. All lengths share one unit and `ħc = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    /// Gap between the two squares.
    pub a: f64,
    /// Side of each square.
    pub s: f64,
    /// Gap between a square and the adjacent sidewall.
    pub h: f64,
}

impl Geometry {
    pub fn new(a: f64, s: f64, h: f64) -> Result<Self> {
        let g = Geometry { a, s, h };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.s.is_finite() && self.h.is_finite()) {
            return Err(Error::InvalidGeometry(format!("non-finite length in {self:?}")));
        }
        if self.a <= 0.0 {
            return Err(Error::InvalidGeometry(format!("a must be > 0, got {}", self.a)));
        }
        if self.s <= 0.0 {
            return Err(Error::InvalidGeometry(format!("s must be > 0, got {}", self.s)));
        }
        if self.h < 0.0 {
            return Err(Error::InvalidGeometry(format!("h must be >= 0, got {}", self.h)));
        }
        Ok(())
    }

    /// Vertical period of the mirror lattice, `s + 2h`.
    pub fn period(&self) -> f64 {
        self.s + 2.0 * self.h
    }

    pub fn with_a(&self, a: f64) -> Self {
        Geometry { a, ..*self }
    }

    pub fn with_h(&self, h: f64) -> Self {
        Geometry { h, ..*self }
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Geometry { a: lambda * self.a, s: lambda * self.s, h: lambda * self.h }
    }

    /// True when `h` is small enough that the piston (`h = 0`) domain is used.
    pub fn is_piston_like(&self) -> bool {
        self.h < PISTON_H_GUARD * self.s
    }
}

/// Below `h = PISTON_H_GUARD · s` every path is treated as allowed.
pub const PISTON_H_GUARD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}
