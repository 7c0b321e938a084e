//! Divergence-free projection with the impermeable wall condition `w3 = 0`.
//!
//! For a weight `r(x3) > 0` the projection solves `r w + grad p = G`,
//! `div w = 0`, `w3 = 0` on the walls, mode by mode. Eliminating the
//! horizontal components leaves one second-order problem for `w3`,
//! `(k^2 r - D r D) w3 = k^2 G3 + D (i xi . G_h)`; the horizontal part is
//! then rebuilt from `D w3` and the vertical vorticity, which makes the
//! discrete divergence vanish identically.

use std::collections::HashMap;

use nalgebra::{DMatrix, LU};
use num_complex::Complex64;

use super::{Grid, Mode};

pub(crate) type Lu = LU<f64, nalgebra::Dyn, nalgebra::Dyn>;

/// Dense real matrix times a complex column.
pub(crate) fn matvec(m: &DMatrix<f64>, v: &[Complex64]) -> Vec<Complex64> {
    let n = v.len();
    let mut out = vec![Complex64::new(0.0, 0.0); m.nrows()];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n {
            acc += v[j] * m[(i, j)];
        }
        *o = acc;
    }
    out
}

/// Solve a real system for a complex right-hand side.
pub(crate) fn solve_complex(lu: &Lu, rhs: &[Complex64]) -> Option<Vec<Complex64>> {
    let n = rhs.len();
    let mut b = DMatrix::<f64>::zeros(n, 2);
    for (i, c) in rhs.iter().enumerate() {
        b[(i, 0)] = c.re;
        b[(i, 1)] = c.im;
    }
    let x = lu.solve(&b)?;
    Some((0..n).map(|i| Complex64::new(x[(i, 0)], x[(i, 1)])).collect())
}

/// Key for caching per-wavenumber operators.
pub(crate) fn k2_key(k2: f64) -> u64 {
    k2.to_bits()
}

/// Weighted projector with factorizations cached per `|xi|^2`.
#[derive(Debug, Clone)]
pub struct Projector {
    weight: Vec<f64>,
    d1: DMatrix<f64>,
    cumulative: DMatrix<f64>,
    lus: HashMap<u64, Lu>,
}

impl Projector {
    /// `weight` is the vertical profile `r(x3)` on the grid nodes.
    pub fn new(grid: &Grid, weight: &[f64]) -> Self {
        assert_eq!(weight.len(), grid.nz);
        let d1 = grid.dz_matrix(1);
        let n = grid.nz;
        let r = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(weight));
        let drd = &d1 * &r * &d1;
        let mut lus = HashMap::new();
        for m in grid.modes(false) {
            if m.is_mean() {
                continue;
            }
            lus.entry(k2_key(m.k2)).or_insert_with(|| {
                let mut a = &r * m.k2 - &drd;
                for row in [0, n - 1] {
                    for j in 0..n {
                        a[(row, j)] = 0.0;
                    }
                    a[(row, row)] = 1.0;
                }
                a.lu()
            });
        }
        Projector {
            weight: weight.to_vec(),
            d1,
            cumulative: crate::chebyshev::cumulative_integration_matrix(n, grid.geometry.h),
            lus,
        }
    }

    pub fn weight(&self) -> &[f64] {
        &self.weight
    }

    /// Project one mode: returns `(w1, w2, w3, p)` columns.
    pub fn project_mode(
        &self,
        grid: &Grid,
        mode: &Mode,
        g: [&[Complex64]; 3],
    ) -> [Vec<Complex64>; 4] {
        let n = grid.nz;
        let zero = vec![Complex64::new(0.0, 0.0); n];
        let i = Complex64::new(0.0, 1.0);
        if mode.is_mean() {
            let w1: Vec<_> = g[0].iter().zip(&self.weight).map(|(c, r)| c / r).collect();
            let w2: Vec<_> = if grid.is_3d() {
                g[1].iter().zip(&self.weight).map(|(c, r)| c / r).collect()
            } else {
                zero.clone()
            };
            let p = self.mean_zero_antiderivative(grid, g[2]);
            return [w1, w2, zero, p];
        }
        let (kx, ky, k2) = (mode.kx, mode.ky, mode.k2);
        let div_h: Vec<Complex64> = (0..n).map(|j| i * kx * g[0][j] + i * ky * g[1][j]).collect();
        let d_div = matvec(&self.d1, &div_h);
        let mut rhs: Vec<Complex64> = (0..n).map(|j| g[2][j] * k2 + d_div[j]).collect();
        rhs[0] = Complex64::new(0.0, 0.0);
        rhs[n - 1] = Complex64::new(0.0, 0.0);
        let lu = &self.lus[&k2_key(k2)];
        let w3 = solve_complex(lu, &rhs).expect("projection operator is nonsingular");
        let dw3 = matvec(&self.d1, &w3);
        let p: Vec<Complex64> = (0..n)
            .map(|j| (-dw3[j] * self.weight[j] - div_h[j]) / k2)
            .collect();
        let (w1, w2) = if grid.is_3d() {
            let omega: Vec<Complex64> = (0..n)
                .map(|j| (i * kx * g[1][j] - i * ky * g[0][j]) / self.weight[j])
                .collect();
            (
                (0..n).map(|j| (i * kx * dw3[j] + i * ky * omega[j]) / k2).collect(),
                (0..n).map(|j| (i * ky * dw3[j] - i * kx * omega[j]) / k2).collect(),
            )
        } else {
            ((0..n).map(|j| i * kx * dw3[j] / k2).collect(), zero)
        };
        [w1, w2, w3, p]
    }

    fn mean_zero_antiderivative(&self, grid: &Grid, f: &[Complex64]) -> Vec<Complex64> {
        let mut p = matvec(&self.cumulative, f);
        let mean: Complex64 = p
            .iter()
            .zip(&grid.weights)
            .map(|(c, w)| c * w)
            .sum::<Complex64>()
            / grid.geometry.h;
        p.iter_mut().for_each(|c| *c -= mean);
        p
    }

    /// Project spectral components `G`; returns spectral `(w, p)` with `p`
    /// of zero mean. Nyquist modes are set to zero.
    pub fn apply(&self, grid: &Grid, g: &[Vec<Complex64>; 3]) -> ([Vec<Complex64>; 3], Vec<Complex64>) {
        let len = grid.len();
        let mut w = [
            vec![Complex64::new(0.0, 0.0); len],
            vec![Complex64::new(0.0, 0.0); len],
            vec![Complex64::new(0.0, 0.0); len],
        ];
        let mut p = vec![Complex64::new(0.0, 0.0); len];
        for mode in grid.modes(false) {
            let cols = [
                grid.column(&g[0], mode.ix, mode.iy),
                grid.column(&g[1], mode.ix, mode.iy),
                grid.column(&g[2], mode.ix, mode.iy),
            ];
            let out = self.project_mode(grid, &mode, [&cols[0], &cols[1], &cols[2]]);
            for c in 0..3 {
                grid.set_column(&mut w[c], mode.ix, mode.iy, &out[c]);
            }
            grid.set_column(&mut p, mode.ix, mode.iy, &out[3]);
        }
        (w, p)
    }
}

/// Leray projection of a physical velocity `(v1, v2, v3)` (v2 ignored in 2D).
pub fn project_divfree(grid: &Grid, vel: &[Vec<f64>; 3]) -> [Vec<f64>; 3] {
    let proj = Projector::new(grid, &vec![1.0; grid.nz]);
    let g = [grid.forward(&vel[0]), grid.forward(&vel[1]), grid.forward(&vel[2])];
    let (w, _) = proj.apply(grid, &g);
    [grid.inverse(&w[0]), grid.inverse(&w[1]), grid.inverse(&w[2])]
}

/// Spectral divergence `d1 v1 + d2 v2 + d3 v3`, returned in physical space.
pub fn divergence(grid: &Grid, vel: &[Vec<f64>; 3]) -> Vec<f64> {
    let s1 = grid.dh(&grid.forward(&vel[0]), 1, 1);
    let mut d = grid.inverse(&s1);
    if grid.is_3d() {
        let s2 = grid.dh(&grid.forward(&vel[1]), 2, 1);
        for (a, b) in d.iter_mut().zip(grid.inverse(&s2)) {
            *a += b;
        }
    }
    for (a, b) in d.iter_mut().zip(grid.dz(&vel[2], 1)) {
        *a += b;
    }
    d
}
