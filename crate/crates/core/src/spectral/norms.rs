//! Discrete Sobolev norms through the Parseval identity in the horizontal
//! directions and Clenshaw–Curtis quadrature in the vertical one.
//!
//! `||f||_i` sums every mixed derivative of total order `<= i`;
//! `||f||_{j,i} = sum_{|alpha| = j} ||d_h^alpha f||_i` takes `j`
//! horizontal derivatives first.

use num_complex::Complex64;

use super::Grid;

/// `sum_{a + b <= s} kx^{2a} ky^{2b}` (just `kx` powers in 2D).
fn horizontal_weight(grid: &Grid, kx: f64, ky: f64, s: usize) -> f64 {
    let (x2, y2) = (kx * kx, ky * ky);
    let mut total = 0.0;
    let mut px = 1.0;
    for a in 0..=s {
        if grid.is_3d() {
            let mut py = 1.0;
            for _ in 0..=(s - a) {
                total += px * py;
                py *= y2;
            }
        } else {
            total += px;
        }
        px *= x2;
    }
    total
}

/// `||f||_i^2` of a spectral field after multiplying mode `k` by `mult(k)`.
fn sobolev_sq(grid: &Grid, s: &[Complex64], i: usize, mult: &dyn Fn(f64, f64) -> f64) -> f64 {
    let measure = grid.geometry.horizontal_measure();
    let mut total = 0.0;
    for r in 0..=i {
        let d = grid.dz(s, r);
        for iz in 0..grid.nz {
            let w = grid.weights[iz];
            for iy in 0..grid.ny {
                for ix in 0..grid.nx {
                    let (kx, ky) = (grid.kx[ix], grid.ky[iy]);
                    let m = mult(kx, ky);
                    if m == 0.0 {
                        continue;
                    }
                    let c = d[grid.idx(iz, iy, ix)];
                    total += w * m * horizontal_weight(grid, kx, ky, i - r) * c.norm_sqr();
                }
            }
        }
    }
    total * measure
}

/// `||f||_{j,i}` for a spectral field; `j = 0` gives the plain `H^i` norm.
pub fn sobolev_norm_spectral(grid: &Grid, s: &[Complex64], i: usize, j: usize) -> f64 {
    assert!(i + j <= 4, "norm order i + j = {} exceeds 4", i + j);
    if j == 0 {
        return sobolev_sq(grid, s, i, &|_, _| 1.0).sqrt();
    }
    let alphas: Vec<(usize, usize)> = if grid.is_3d() {
        (0..=j).map(|a| (a, j - a)).collect()
    } else {
        vec![(j, 0)]
    };
    alphas
        .iter()
        .map(|&(a, b)| {
            let ai = a as i32;
            let bi = b as i32;
            sobolev_sq(grid, s, i, &|kx, ky| kx.powi(2 * ai) * ky.powi(2 * bi)).sqrt()
        })
        .sum()
}

/// `||f||_{j,i}` of a physical field.
pub fn sobolev_norm(grid: &Grid, f: &[f64], i: usize, j: usize) -> f64 {
    sobolev_norm_spectral(grid, &grid.forward(f), i, j)
}

/// `sqrt(sum_n ||f_n||_{j,i}^2)` for several components.
pub fn sobolev_norm_vec(grid: &Grid, comps: &[&[Complex64]], i: usize, j: usize) -> f64 {
    comps
        .iter()
        .map(|c| sobolev_norm_spectral(grid, c, i, j).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainGeometry;
    use std::f64::consts::PI;

    #[test]
    fn h1_norm_of_sine() {
        let g = Grid::new(DomainGeometry::new_2d(1.0, 1.0).unwrap(), 16, 1, 17, true).unwrap();
        let f = g.sample(|x, _, _| x.sin());
        let n = sobolev_norm(&g, &f, 1, 0);
        assert!((n - (2.0 * PI).sqrt()).abs() < 1e-12, "{n}");
    }

    #[test]
    fn constant_has_only_l2_part() {
        let g = Grid::new(DomainGeometry::new_3d(1.0, 1.0, 2.0).unwrap(), 8, 8, 9, true).unwrap();
        let f = vec![3.0; g.len()];
        let n = sobolev_norm(&g, &f, 4, 0);
        assert!((n - 3.0 * g.geometry.volume().sqrt()).abs() < 1e-11);
    }

    #[test]
    fn mixed_derivatives_counted_once() {
        // f = sin x cos y z on a 3D cell: ||f||_1^2 = ||f||^2 + ||f_x||^2 + ||f_y||^2 + ||f_z||^2
        let g = Grid::new(DomainGeometry::new_3d(1.0, 1.0, 1.0).unwrap(), 8, 8, 9, true).unwrap();
        let f = g.sample(|x, y, z| x.sin() * y.cos() * z);
        let a = 4.0 * PI * PI / 4.0; // int sin^2 cos^2 over the torus
        let exact = a * (1.0 / 3.0) * 3.0 + a * 1.0;
        let n = sobolev_norm(&g, &f, 1, 0);
        assert!((n * n - exact).abs() < 1e-11, "{} vs {exact}", n * n);
    }
}
