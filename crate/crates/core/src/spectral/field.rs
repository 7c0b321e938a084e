use serde::{Deserialize, Serialize};

use super::Grid;

/// Wall behaviour a field is expected to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WallParity {
    /// vanishes on both walls (`v3`, `rho` perturbations)
    OddAtWalls,
    /// zero normal derivative on both walls (`v1`, `v2`)
    EvenAtWalls,
    Inhomogeneous,
}

/// Differentiation direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
    X3,
}

/// A physical-space scalar field with its wall tag.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub values: Vec<f64>,
    pub parity: WallParity,
}

impl Field {
    pub fn new(values: Vec<f64>, parity: WallParity) -> Self {
        Field { values, parity }
    }

    pub fn zeros(grid: &Grid, parity: WallParity) -> Self {
        Field::new(vec![0.0; grid.len()], parity)
    }

    /// Largest absolute value on the two wall planes.
    pub fn wall_max(&self, grid: &Grid) -> f64 {
        wall_max(grid, &self.values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Largest absolute value of a physical field on `x3 = 0` and `x3 = h`.
pub fn wall_max(grid: &Grid, f: &[f64]) -> f64 {
    let nh = grid.nh();
    let top = (grid.nz - 1) * nh;
    f[..nh]
        .iter()
        .chain(&f[top..top + nh])
        .fold(0.0, |m, v| m.max(v.abs()))
}

/// Spectral derivative of a field; parity flips for odd vertical orders.
pub fn diff(grid: &Grid, field: &Field, axis: Axis, order: usize) -> Field {
    assert!((1..=4).contains(&order), "derivative order must be 1..=4");
    let values = match axis {
        Axis::X1 | Axis::X2 => {
            let a = if axis == Axis::X1 { 1 } else { 2 };
            grid.inverse(&grid.dh(&grid.forward(&field.values), a, order))
        }
        Axis::X3 => grid.dz(&field.values, order),
    };
    let parity = match (axis, field.parity, order % 2) {
        (Axis::X3, WallParity::OddAtWalls, 1) => WallParity::EvenAtWalls,
        (Axis::X3, WallParity::EvenAtWalls, 1) => WallParity::OddAtWalls,
        (Axis::X3, _, 0) => WallParity::Inhomogeneous,
        (_, p, _) => p,
    };
    Field::new(values, parity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainGeometry;

    #[test]
    fn trig_and_polynomial_derivatives() {
        let g = Grid::new(DomainGeometry::new_2d(1.0, 1.0).unwrap(), 16, 1, 13, true).unwrap();
        let f = Field::new(g.sample(|x, _, _| x.sin()), WallParity::Inhomogeneous);
        let d = diff(&g, &f, Axis::X1, 1);
        for (v, c) in d.values.iter().zip(g.sample(|x, _, _| x.cos())) {
            assert!((v - c).abs() < 1e-12);
        }
        let p = Field::new(g.sample(|_, _, z| z.powi(3)), WallParity::Inhomogeneous);
        let d2 = diff(&g, &p, Axis::X3, 2);
        for (v, c) in d2.values.iter().zip(g.sample(|_, _, z| 6.0 * z)) {
            assert!((v - c).abs() < 1e-10);
        }
    }
}
