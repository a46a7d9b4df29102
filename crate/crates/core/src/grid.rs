//! Scene grid geometry shared by surface fields and rendered images.
//!
//! Conventions used throughout the crate: `x` is the azimuth (platform
//! flight) direction and maps to array columns, `y` is the ground-range
//! direction and maps to array rows. A grid value at index `(iy, ix)` sits
//! at world coordinates `(origin_x + ix*dx, origin_y + iy*dy)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regular facet grid describing a rectangular patch of sea surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Facet count in azimuth (x).
    pub nx: usize,
    /// Facet count in ground range (y).
    pub ny: usize,
    /// Facet size in azimuth, m.
    pub dx: f64,
    /// Facet size in ground range, m.
    pub dy: f64,
    /// World coordinate of facet (0, 0), m.
    pub origin: (f64, f64),
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64) -> Result<Self> {
        let grid = Self {
            nx,
            ny,
            dx,
            dy,
            origin: (0.0, 0.0),
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn with_origin(mut self, origin: (f64, f64)) -> Self {
        self.origin = origin;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 8 || self.ny < 8 {
            return Err(Error::Config(format!(
                "grid must be at least 8x8 facets, got {}x{}",
                self.nx, self.ny
            )));
        }
        if self.dx <= 0.0 || self.dy <= 0.0 {
            return Err(Error::Config(format!(
                "facet sizes must be positive, got dx={} dy={}",
                self.dx, self.dy
            )));
        }
        Ok(())
    }

    /// World x coordinate of column `ix`.
    #[inline]
    pub fn x(&self, ix: usize) -> f64 {
        self.origin.0 + ix as f64 * self.dx
    }

    /// World y coordinate of row `iy`.
    #[inline]
    pub fn y(&self, iy: usize) -> f64 {
        self.origin.1 + iy as f64 * self.dy
    }

    /// Scene centre in world coordinates.
    pub fn center(&self) -> (f64, f64) {
        (
            self.origin.0 + 0.5 * (self.nx - 1) as f64 * self.dx,
            self.origin.1 + 0.5 * (self.ny - 1) as f64 * self.dy,
        )
    }

    /// Largest wavenumber representable on the grid, `pi / max(dx, dy)`.
    pub fn nyquist_wavenumber(&self) -> f64 {
        std::f64::consts::PI / self.dx.max(self.dy)
    }

    /// Smallest non-zero wavenumber resolved by the grid extent,
    /// `2*pi / (n * d)` along the longer side.
    pub fn fundamental_wavenumber(&self) -> f64 {
        let lx = self.nx as f64 * self.dx;
        let ly = self.ny as f64 * self.dy;
        2.0 * std::f64::consts::PI / lx.max(ly)
    }

    pub fn same_shape(&self, other: &GridSpec) -> bool {
        self.nx == other.nx && self.ny == other.ny
    }

    /// Error unless both grids have identical facet counts.
    pub fn require_same_shape(&self, other: &GridSpec) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                expected_nx: self.nx,
                expected_ny: self.ny,
                got_nx: other.nx,
                got_ny: other.ny,
            })
        }
    }
}
