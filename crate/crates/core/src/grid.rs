//! Uniform value grid. All values and item prices are stored as integer
//! multiples ("ticks") of the grid step so that sums and comparisons are exact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when snapping a money amount onto the grid.
const SNAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueGrid {
    pub step: f64,
    pub max_value: f64,
}

impl ValueGrid {
    pub fn new(step: f64, max_value: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::InvalidInput(format!("grid step must be positive, got {step}")));
        }
        let grid = ValueGrid { step, max_value };
        grid.ticks(max_value)?;
        Ok(grid)
    }

    /// Grid with the default resolution of one thousandth of `max_value`.
    pub fn with_default_step(max_value: f64) -> Result<Self> {
        Self::new(max_value / 1000.0, max_value)
    }

    pub fn max_ticks(&self) -> i64 {
        (self.max_value / self.step).round() as i64
    }

    /// Converts a money amount to ticks, failing when it is not on the grid.
    pub fn ticks(&self, value: f64) -> Result<i64> {
        let coord = self.coord(value);
        if value < 0.0 || !value.is_finite() || coord.fract() != 0.0 {
            return Err(Error::OffGridValue { value, step: self.step });
        }
        Ok(coord as i64)
    }

    /// Position of `value` in tick units, snapped to the nearest integer when
    /// it is within rounding noise of one.
    pub fn coord(&self, value: f64) -> f64 {
        let raw = value / self.step;
        let nearest = raw.round();
        if (raw - nearest).abs() <= SNAP_TOL * nearest.abs().max(1.0) {
            nearest
        } else {
            raw
        }
    }

    pub fn money(&self, ticks: i64) -> f64 {
        ticks as f64 * self.step
    }
}
