//! Chebyshev–Gauss–Lobatto machinery on a vertical interval `[0, h]`.
//!
//! Nodes are ordered by increasing height: `z_j = h (1 - cos(j pi / N)) / 2`,
//! so index `0` is the bottom wall and index `N` the top wall. The reference
//! coordinate is `x = cos(j pi / N) = 1 - 2 z / h`.

use nalgebra::DMatrix;
use std::f64::consts::PI;

/// Collocation nodes on `[0, h]`, `n` points, both walls included.
pub fn nodes(n: usize, h: f64) -> Vec<f64> {
    assert!(n >= 2, "need at least two Chebyshev points");
    let m = (n - 1) as f64;
    (0..n)
        .map(|j| {
            let z = 0.5 * h * (1.0 - (j as f64 * PI / m).cos());
            // pin the walls exactly
            if j == 0 {
                0.0
            } else if j == n - 1 {
                h
            } else {
                z
            }
        })
        .collect()
}

/// First-derivative matrix `d/dz` on the `n` nodes of [`nodes`].
pub fn diff_matrix(n: usize, h: f64) -> DMatrix<f64> {
    let big_n = n - 1;
    let c = |i: usize| if i == 0 || i == big_n { 2.0 } else { 1.0 };
    let mut d = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                // x_i - x_j via the product formula keeps cancellation down
                let dx = -2.0
                    * (((i + j) as f64) * PI / (2.0 * big_n as f64)).sin()
                    * (((i as f64) - (j as f64)) * PI / (2.0 * big_n as f64)).sin();
                d[(i, j)] = c(i) / c(j) * sign / dx;
            }
        }
    }
    for i in 0..n {
        let s: f64 = (0..n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -s;
    }
    // d/dz = (dx/dz) d/dx with dx/dz = -2/h
    d * (-2.0 / h)
}

/// Clenshaw–Curtis weights for the `n` nodes on `[0, h]`.
pub fn cc_weights(n: usize, h: f64) -> Vec<f64> {
    let big_n = n - 1;
    let nf = big_n as f64;
    let mut w = vec![0.0; n];
    if big_n == 1 {
        return vec![0.5 * h, 0.5 * h];
    }
    let theta: Vec<f64> = (0..n).map(|k| k as f64 * PI / nf).collect();
    let mut v = vec![1.0; big_n - 1];
    if big_n.is_multiple_of(2) {
        w[0] = 1.0 / (nf * nf - 1.0);
        w[big_n] = w[0];
        for k in 1..big_n / 2 {
            let kf = k as f64;
            for (i, vi) in v.iter_mut().enumerate() {
                *vi -= 2.0 * (2.0 * kf * theta[i + 1]).cos() / (4.0 * kf * kf - 1.0);
            }
        }
        for (i, vi) in v.iter_mut().enumerate() {
            *vi -= (nf * theta[i + 1]).cos() / (nf * nf - 1.0);
        }
    } else {
        w[0] = 1.0 / (nf * nf);
        w[big_n] = w[0];
        for k in 1..=(big_n - 1) / 2 {
            let kf = k as f64;
            for (i, vi) in v.iter_mut().enumerate() {
                *vi -= 2.0 * (2.0 * kf * theta[i + 1]).cos() / (4.0 * kf * kf - 1.0);
            }
        }
    }
    for (i, vi) in v.iter().enumerate() {
        w[i + 1] = 2.0 * vi / nf;
    }
    w.iter().map(|wi| wi * 0.5 * h).collect()
}

/// Chebyshev coefficients `a_k` with `f(x) = sum_k a_k T_k(x)` from node values.
pub fn coefficients(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let big_n = n - 1;
    let nf = big_n as f64;
    let mut a = vec![0.0; n];
    for (k, ak) in a.iter_mut().enumerate() {
        let mut s = 0.0;
        for (j, &f) in values.iter().enumerate() {
            let half = if j == 0 || j == big_n { 0.5 } else { 1.0 };
            // reduce the angle index to keep cos accurate
            let idx = (k * j) % (2 * big_n);
            s += half * f * (idx as f64 * PI / nf).cos();
        }
        *ak = 2.0 * s / nf;
    }
    a[0] *= 0.5;
    a[big_n] *= 0.5;
    a
}

/// Evaluate `sum_k a_k T_k(x)` by Clenshaw's recurrence.
pub fn eval_series(a: &[f64], x: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &ak in a.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + ak;
        b2 = b1;
        b1 = b0;
    }
    x * b1 - b2 + a.first().copied().unwrap_or(0.0)
}

/// Coefficients of `d/dx` of a Chebyshev series.
pub fn derivative_coefficients(a: &[f64]) -> Vec<f64> {
    let n = a.len();
    if n <= 1 {
        return vec![0.0; n.max(1)];
    }
    let mut b = vec![0.0; n + 1];
    for k in (0..n - 1).rev() {
        b[k] = b[k + 2] + 2.0 * (k + 1) as f64 * a[k + 1];
    }
    b[0] *= 0.5;
    b.truncate(n);
    b
}

/// Matrix `Q` with `(Q f)_j = int_0^{z_j} f dz` for the interpolant of `f`.
pub fn cumulative_integration_matrix(n: usize, h: f64) -> DMatrix<f64> {
    let big_n = n - 1;
    let nf = big_n as f64;
    let mut q = DMatrix::<f64>::zeros(n, n);
    let mut e = vec![0.0; n];
    for col in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[col] = 1.0;
        let a = coefficients(&e);
        let at = |k: usize| if k < n { a[k] } else { 0.0 };
        // antiderivative coefficients b_1..b_{N+1}
        let mut b = vec![0.0; n + 1];
        for k in 1..=n {
            let prev = if k == 1 { 2.0 * at(0) } else { at(k - 1) };
            b[k] = (prev - at(k + 1)) / (2.0 * k as f64);
        }
        let g1: f64 = b.iter().sum();
        for j in 0..n {
            let mut g = 0.0;
            for (k, bk) in b.iter().enumerate().skip(1) {
                let idx = (k * j) % (2 * big_n);
                g += bk * (idx as f64 * PI / nf).cos();
            }
            q[(j, col)] = 0.5 * h * (g1 - g);
        }
    }
    q
}

/// Barycentric interpolation of node values to an arbitrary height `z`.
pub fn interpolate(values: &[f64], z: f64, h: f64) -> f64 {
    let n = values.len();
    let big_n = n - 1;
    let x = 1.0 - 2.0 * z / h;
    let mut num = 0.0;
    let mut den = 0.0;
    for (j, &f) in values.iter().enumerate() {
        let xj = (j as f64 * PI / big_n as f64).cos();
        let diff = x - xj;
        if diff.abs() < 1e-15 {
            return f;
        }
        let mut wj = if j % 2 == 0 { 1.0 } else { -1.0 };
        if j == 0 || j == big_n {
            wj *= 0.5;
        }
        num += wj / diff * f;
        den += wj / diff;
    }
    num / den
}

/// Matrix mapping values on the `n` nodes to the interpolant at `targets`.
pub fn interpolation_matrix(n: usize, targets: &[f64], h: f64) -> DMatrix<f64> {
    let big_n = n - 1;
    let xs: Vec<f64> = (0..n).map(|j| (j as f64 * PI / big_n as f64).cos()).collect();
    let mut m = DMatrix::<f64>::zeros(targets.len(), n);
    for (r, &z) in targets.iter().enumerate() {
        let x = 1.0 - 2.0 * z / h;
        if let Some(j) = xs.iter().position(|xj| (x - xj).abs() < 1e-15) {
            m[(r, j)] = 1.0;
            continue;
        }
        let mut den = 0.0;
        for (j, xj) in xs.iter().enumerate() {
            let mut wj = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == big_n {
                wj *= 0.5;
            }
            let c = wj / (x - xj);
            m[(r, j)] = c;
            den += c;
        }
        for j in 0..n {
            m[(r, j)] /= den;
        }
    }
    m
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = nf * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}
