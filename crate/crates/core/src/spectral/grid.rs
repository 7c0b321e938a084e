use std::f64::consts::PI;
use std::fmt;
use std::ops::{AddAssign, Mul};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::chebyshev;
use crate::error::{Error, Result};
use crate::geometry::DomainGeometry;

/// Fourier (horizontal) × Chebyshev (vertical) collocation grid.
///
/// Physical and spectral arrays share the z-major layout `[iz][iy][ix]`;
/// spectral arrays hold Fourier coefficients normalised so that
/// `f(x) = sum_k f_k exp(i k . x)`.
#[derive(Clone)]
pub struct Grid {
    pub geometry: DomainGeometry,
    pub nx: usize,
    /// 1 in two-dimensional runs.
    pub ny: usize,
    pub nz: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    /// Clenshaw–Curtis weights on `z`.
    pub weights: Vec<f64>,
    /// Wavenumber `k_x` per horizontal index (0 at the Nyquist index).
    pub kx: Vec<f64>,
    pub ky: Vec<f64>,
    /// Apply the 2/3 rule to horizontal products.
    pub dealias: bool,
    dz: [Vec<f64>; 4],
    fft_x: Arc<dyn Fft<f64>>,
    ifft_x: Arc<dyn Fft<f64>>,
    fft_y: Arc<dyn Fft<f64>>,
    ifft_y: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("geometry", &self.geometry)
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .field("nz", &self.nz)
            .field("dealias", &self.dealias)
            .finish()
    }
}

/// One horizontal Fourier mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub ix: usize,
    pub iy: usize,
    pub kx: f64,
    pub ky: f64,
    pub k2: f64,
}

impl Mode {
    pub fn is_mean(&self) -> bool {
        self.k2 == 0.0
    }
}

/// Grid summary written to manifests and snapshot sidecars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub nx: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
    pub nz: usize,
    pub dealias: bool,
}

fn signed_freq(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl Grid {
    /// Build a grid; `ny` is ignored (and forced to 1) for 2D geometries.
    pub fn new(geometry: DomainGeometry, nx: usize, ny: usize, nz: usize, dealias: bool) -> Result<Self> {
        geometry.validate()?;
        let ny = if geometry.is_3d() { ny } else { 1 };
        if nx < 2 || (geometry.is_3d() && ny < 2) {
            return Err(Error::Resolution(format!("horizontal resolution too small: Nx={nx}, Ny={ny}")));
        }
        if nz < 6 {
            return Err(Error::Resolution(format!("Nz = {nz} too small for fourth derivatives")));
        }
        let h = geometry.h;
        let z = chebyshev::nodes(nz, h);
        let weights = chebyshev::cc_weights(nz, h);
        let d1 = chebyshev::diff_matrix(nz, h);
        let d2 = &d1 * &d1;
        let d3 = &d2 * &d1;
        let d4 = &d3 * &d1;
        let flat = |m: &DMatrix<f64>| {
            let mut v = vec![0.0; nz * nz];
            for i in 0..nz {
                for j in 0..nz {
                    v[i * nz + j] = m[(i, j)];
                }
            }
            v
        };
        let wavenumbers = |n: usize, l: f64| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    if n.is_multiple_of(2) && i == n / 2 {
                        0.0
                    } else {
                        signed_freq(i, n) as f64 / l
                    }
                })
                .collect()
        };
        let l2 = geometry.l2.unwrap_or(1.0);
        let mut planner = FftPlanner::new();
        Ok(Grid {
            geometry,
            nx,
            ny,
            nz,
            x: (0..nx).map(|i| geometry.period_x() * i as f64 / nx as f64).collect(),
            y: (0..ny).map(|i| 2.0 * PI * l2 * i as f64 / ny as f64).collect(),
            z,
            weights,
            kx: wavenumbers(nx, geometry.l1),
            ky: if ny > 1 { wavenumbers(ny, l2) } else { vec![0.0] },
            dealias,
            dz: [flat(&d1), flat(&d2), flat(&d3), flat(&d4)],
            fft_x: planner.plan_fft_forward(nx),
            ifft_x: planner.plan_fft_inverse(nx),
            fft_y: planner.plan_fft_forward(ny),
            ifft_y: planner.plan_fft_inverse(ny),
        })
    }

    pub fn is_3d(&self) -> bool {
        self.geometry.is_3d()
    }

    /// Points per horizontal plane.
    pub fn nh(&self) -> usize {
        self.nx * self.ny
    }

    pub fn len(&self) -> usize {
        self.nh() * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn idx(&self, iz: usize, iy: usize, ix: usize) -> usize {
        (iz * self.ny + iy) * self.nx + ix
    }

    pub fn summary(&self) -> GridSummary {
        GridSummary {
            nx: self.nx,
            ny: if self.is_3d() { Some(self.ny) } else { None },
            nz: self.nz,
            dealias: self.dealias,
        }
    }

    /// Dense `d^order/dz^order` collocation matrix.
    pub fn dz_matrix(&self, order: usize) -> DMatrix<f64> {
        assert!((1..=4).contains(&order));
        DMatrix::from_row_slice(self.nz, self.nz, &self.dz[order - 1])
    }

    fn is_nyquist(&self, ix: usize, iy: usize) -> bool {
        (self.nx.is_multiple_of(2) && ix == self.nx / 2) || (self.ny > 1 && self.ny.is_multiple_of(2) && iy == self.ny / 2)
    }

    /// True when mode `(ix, iy)` survives the 2/3 truncation.
    pub fn retained(&self, ix: usize, iy: usize) -> bool {
        if self.is_nyquist(ix, iy) {
            return false;
        }
        if !self.dealias {
            return true;
        }
        let fx = signed_freq(ix, self.nx).unsigned_abs() as usize;
        let fy = signed_freq(iy, self.ny).unsigned_abs() as usize;
        fx <= self.nx / 3 && (self.ny == 1 || fy <= self.ny / 3)
    }

    /// Horizontal modes, skipping Nyquist; with `retained_only` the 2/3 rule applies.
    pub fn modes(&self, retained_only: bool) -> Vec<Mode> {
        let mut out = Vec::new();
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                let keep = if retained_only {
                    self.retained(ix, iy)
                } else {
                    !self.is_nyquist(ix, iy)
                };
                if keep {
                    let (kx, ky) = (self.kx[ix], self.ky[iy]);
                    out.push(Mode {
                        ix,
                        iy,
                        kx,
                        ky,
                        k2: kx * kx + ky * ky,
                    });
                }
            }
        }
        out
    }

    /// Largest retained integer frequency along x.
    pub fn max_mode_x(&self) -> usize {
        if self.dealias {
            self.nx / 3
        } else {
            (self.nx - 1) / 2
        }
    }

    pub fn max_mode_y(&self) -> usize {
        if self.ny == 1 {
            0
        } else if self.dealias {
            self.ny / 3
        } else {
            (self.ny - 1) / 2
        }
    }

    /// Horizontal FFT of a physical field, normalised by `1/(nx ny)`.
    pub fn forward(&self, f: &[f64]) -> Vec<Complex64> {
        assert_eq!(f.len(), self.len());
        let mut s: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut s, true);
        let norm = 1.0 / self.nh() as f64;
        s.iter_mut().for_each(|c| *c *= norm);
        s
    }

    /// Inverse of [`Grid::forward`]; the imaginary residue is discarded.
    pub fn inverse(&self, s: &[Complex64]) -> Vec<f64> {
        assert_eq!(s.len(), self.len());
        let mut w = s.to_vec();
        self.transform(&mut w, false);
        w.iter().map(|c| c.re).collect()
    }

    fn transform(&self, s: &mut [Complex64], forward: bool) {
        let (fx, fy) = if forward {
            (&self.fft_x, &self.fft_y)
        } else {
            (&self.ifft_x, &self.ifft_y)
        };
        let nx = self.nx;
        let ny = self.ny;
        let mut scratch = vec![Complex64::new(0.0, 0.0); fx.get_inplace_scratch_len().max(fy.get_inplace_scratch_len())];
        for plane in s.chunks_mut(nx * ny) {
            for row in plane.chunks_mut(nx) {
                fx.process_with_scratch(row, &mut scratch);
            }
            if ny > 1 {
                let mut col = vec![Complex64::new(0.0, 0.0); ny];
                for ix in 0..nx {
                    for iy in 0..ny {
                        col[iy] = plane[iy * nx + ix];
                    }
                    fy.process_with_scratch(&mut col, &mut scratch);
                    for iy in 0..ny {
                        plane[iy * nx + ix] = col[iy];
                    }
                }
            }
        }
    }

    /// Zero every mode removed by the 2/3 rule (and the Nyquist modes).
    pub fn truncate(&self, s: &mut [Complex64]) {
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                if !self.retained(ix, iy) {
                    for iz in 0..self.nz {
                        let i = self.idx(iz, iy, ix);
                        s[i] = Complex64::new(0.0, 0.0);
                    }
                }
            }
        }
    }

    /// Apply `d^order/dz^order` column by column.
    pub fn dz<T>(&self, s: &[T], order: usize) -> Vec<T>
    where
        T: Copy + Default + AddAssign + Mul<f64, Output = T>,
    {
        if order == 0 {
            return s.to_vec();
        }
        assert!(order <= 4, "vertical derivative order {order} > 4");
        let nz = self.nz;
        let nh = self.nh();
        let d = &self.dz[order - 1];
        let mut out = vec![T::default(); s.len()];
        for i in 0..nz {
            let orow = &mut out[i * nh..(i + 1) * nh];
            for j in 0..nz {
                let c = d[i * nz + j];
                if c == 0.0 {
                    continue;
                }
                let srow = &s[j * nh..(j + 1) * nh];
                for (o, &v) in orow.iter_mut().zip(srow) {
                    *o += v * c;
                }
            }
        }
        out
    }

    /// Spectral horizontal derivative `(i k_axis)^order`, axis 1 or 2.
    pub fn dh(&self, s: &[Complex64], axis: usize, order: usize) -> Vec<Complex64> {
        let mut out = s.to_vec();
        if order == 0 {
            return out;
        }
        for iz in 0..self.nz {
            for iy in 0..self.ny {
                for ix in 0..self.nx {
                    let k = match axis {
                        1 => self.kx[ix],
                        2 => self.ky[iy],
                        _ => panic!("horizontal axis must be 1 or 2"),
                    };
                    let m = Complex64::new(0.0, k).powu(order as u32);
                    let i = self.idx(iz, iy, ix);
                    out[i] *= m;
                }
            }
        }
        out
    }

    /// Vertical column of mode `(ix, iy)`.
    pub fn column(&self, s: &[Complex64], ix: usize, iy: usize) -> Vec<Complex64> {
        (0..self.nz).map(|iz| s[self.idx(iz, iy, ix)]).collect()
    }

    pub fn set_column(&self, s: &mut [Complex64], ix: usize, iy: usize, col: &[Complex64]) {
        for (iz, &c) in col.iter().enumerate() {
            let i = self.idx(iz, iy, ix);
            s[i] = c;
        }
    }

    /// `int f dx` over the periodic cell.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        let nh = self.nh();
        let cell = self.geometry.horizontal_measure() / nh as f64;
        let mut total = 0.0;
        for (iz, w) in self.weights.iter().enumerate() {
            let s: f64 = f[iz * nh..(iz + 1) * nh].iter().sum();
            total += w * s;
        }
        total * cell
    }

    /// `int w(x3) f g dx` with a vertical weight sampled on `z`.
    pub fn inner_weighted(&self, weight: &[f64], f: &[f64], g: &[f64]) -> f64 {
        let nh = self.nh();
        let cell = self.geometry.horizontal_measure() / nh as f64;
        let mut total = 0.0;
        for iz in 0..self.nz {
            let s: f64 = (iz * nh..(iz + 1) * nh).map(|i| f[i] * g[i]).sum();
            total += self.weights[iz] * weight[iz] * s;
        }
        total * cell
    }

    /// Horizontal mean of a physical field at each height.
    pub fn horizontal_mean(&self, f: &[f64]) -> Vec<f64> {
        let nh = self.nh();
        (0..self.nz)
            .map(|iz| f[iz * nh..(iz + 1) * nh].iter().sum::<f64>() / nh as f64)
            .collect()
    }

    /// Physical field from a function of `(x1, x2, x3)`.
    pub fn sample(&self, f: impl Fn(f64, f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for &z in &self.z {
            for &y in &self.y {
                for &x in &self.x {
                    out.push(f(x, y, z));
                }
            }
        }
        out
    }

    /// Multiply each horizontal plane by a vertical profile.
    pub fn scale_by_profile<T>(&self, s: &[T], p: &[f64]) -> Vec<T>
    where
        T: Copy + Mul<f64, Output = T>,
    {
        let nh = self.nh();
        s.iter().enumerate().map(|(i, &v)| v * p[i / nh]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid2d(nx: usize, nz: usize) -> Grid {
        Grid::new(DomainGeometry::new_2d(1.0, 1.0).unwrap(), nx, 1, nz, true).unwrap()
    }

    #[test]
    fn forward_inverse_roundtrip() {
        let g = Grid::new(DomainGeometry::new_3d(1.0, 0.5, 1.0).unwrap(), 8, 6, 9, true).unwrap();
        let f = g.sample(|x, y, z| (x).sin() * (2.0 * y).cos() + z * z);
        let back = g.inverse(&g.forward(&f));
        for (a, b) in f.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn single_mode_coefficient() {
        let g = grid2d(16, 9);
        let f = g.sample(|x, _, _| 3.0 * x.cos());
        let s = g.forward(&f);
        assert!((s[g.idx(0, 0, 1)].re - 1.5).abs() < 1e-14);
        assert!((s[g.idx(0, 0, 15)].re - 1.5).abs() < 1e-14);
    }

    #[test]
    fn retention_follows_two_thirds_rule() {
        let g = grid2d(32, 9);
        assert!(g.retained(10, 0));
        assert!(!g.retained(11, 0));
        assert!(g.retained(22, 0)); // frequency -10
        assert!(!g.retained(16, 0));
        assert_eq!(g.modes(true).len(), 21);
        assert_eq!(g.modes(false).len(), 31);
    }

    #[test]
    fn integrate_constant_gives_volume() {
        let g = Grid::new(DomainGeometry::new_3d(1.0, 2.0, 0.5).unwrap(), 4, 4, 9, true).unwrap();
        let one = vec![1.0; g.len()];
        assert!((g.integrate(&one) - g.geometry.volume()).abs() < 1e-12);
    }
}
