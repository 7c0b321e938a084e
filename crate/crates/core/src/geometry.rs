use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Horizontally periodic slab `2 pi L1 T x [2 pi L2 T x] (0, h)`.
///
/// Without `l2` the slab is two-dimensional in `(x1, x3)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainGeometry {
    pub l1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l2: Option<f64>,
    pub h: f64,
}

impl DomainGeometry {
    pub fn new_2d(l1: f64, h: f64) -> Result<Self> {
        let g = DomainGeometry { l1, l2: None, h };
        g.validate()?;
        Ok(g)
    }

    pub fn new_3d(l1: f64, l2: f64, h: f64) -> Result<Self> {
        let g = DomainGeometry {
            l1,
            l2: Some(l2),
            h,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.l1) {
            return Err(Error::Geometry(format!("L1 must be positive, got {}", self.l1)));
        }
        if let Some(l2) = self.l2 {
            if !ok(l2) {
                return Err(Error::Geometry(format!("L2 must be positive, got {l2}")));
            }
        }
        if !ok(self.h) {
            return Err(Error::Geometry(format!("h must be positive, got {}", self.h)));
        }
        Ok(())
    }

    pub fn is_3d(&self) -> bool {
        self.l2.is_some()
    }

    /// Largest horizontal period parameter.
    pub fn l_max(&self) -> f64 {
        match self.l2 {
            Some(l2) => self.l1.max(l2),
            None => self.l1,
        }
    }

    /// Horizontal periods `2 pi L_i`.
    pub fn period_x(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.l1
    }

    pub fn period_y(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.l2.unwrap_or(0.0)
    }

    /// Measure of the horizontal cell (a length in 2D, an area in 3D).
    pub fn horizontal_measure(&self) -> f64 {
        match self.l2 {
            Some(_) => self.period_x() * self.period_y(),
            None => self.period_x(),
        }
    }

    pub fn volume(&self) -> f64 {
        self.horizontal_measure() * self.h
    }
}
