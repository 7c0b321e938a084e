//! Truncated Taylor arithmetic used to get exact derivatives of the
//! analytic profile families without hand-expanding them.

use std::ops::{Add, Mul, Neg, Sub};

/// Number of carried Taylor coefficients: value plus four derivatives.
pub const ORDER: usize = 5;

/// Taylor coefficients `c[k] = f^(k)(z0) / k!` of a function around a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet(pub [f64; ORDER]);

impl Jet {
    pub fn constant(c: f64) -> Self {
        let mut a = [0.0; ORDER];
        a[0] = c;
        Jet(a)
    }

    /// The independent variable evaluated at `z`.
    pub fn variable(z: f64) -> Self {
        let mut a = [0.0; ORDER];
        a[0] = z;
        a[1] = 1.0;
        Jet(a)
    }

    pub fn zero() -> Self {
        Jet([0.0; ORDER])
    }

    pub fn value(&self) -> f64 {
        self.0[0]
    }

    /// Derivatives `f, f', f'', f''', f''''`.
    pub fn derivatives(&self) -> [f64; ORDER] {
        let mut out = [0.0; ORDER];
        let mut fact = 1.0;
        for (k, o) in out.iter_mut().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            *o = self.0[k] * fact;
        }
        out
    }

    pub fn scale(self, s: f64) -> Self {
        let mut a = self.0;
        a.iter_mut().for_each(|c| *c *= s);
        Jet(a)
    }

    pub fn exp(self) -> Self {
        let f = self.0;
        let mut g = [0.0; ORDER];
        g[0] = f[0].exp();
        for k in 1..ORDER {
            let mut s = 0.0;
            for j in 1..=k {
                s += j as f64 * f[j] * g[k - j];
            }
            g[k] = s / k as f64;
        }
        Jet(g)
    }

    pub fn recip(self) -> Self {
        let f = self.0;
        let mut g = [0.0; ORDER];
        g[0] = 1.0 / f[0];
        for k in 1..ORDER {
            let mut s = 0.0;
            for j in 1..=k {
                s += f[j] * g[k - j];
            }
            g[k] = -s / f[0];
        }
        Jet(g)
    }

    pub fn tanh(self) -> Self {
        // tanh f = 1 - 2 / (exp(2f) + 1), evaluated on the sign-safe branch.
        if self.0[0] >= 0.0 {
            let e = (self.scale(-2.0)).exp();
            (Jet::constant(1.0) - e) * (Jet::constant(1.0) + e).recip()
        } else {
            -((-self).tanh())
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let mut a = self.0;
        for (x, y) in a.iter_mut().zip(rhs.0) {
            *x += y;
        }
        Jet(a)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self + (-rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let mut c = [0.0; ORDER];
        for (i, &a) in self.0.iter().enumerate() {
            for (j, &b) in rhs.0.iter().enumerate().take(ORDER - i) {
                c[i + j] += a * b;
            }
        }
        Jet(c)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        let mut a = self.0;
        a[0] += rhs;
        Jet(a)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

/// `exp(-1/t)` for `t > 0`, identically zero (with all derivatives) otherwise.
fn flat_exp(t: Jet) -> Jet {
    // Below this the value and every carried derivative underflow anyway.
    if t.value() <= 1e-3 {
        Jet::zero()
    } else {
        (-t.recip()).exp()
    }
}

/// C-infinity step: 0 for `t <= 0`, 1 for `t >= 1`.
pub fn smooth_step(t: Jet) -> Jet {
    let a = flat_exp(t);
    let b = flat_exp(-t + 1.0);
    if a == Jet::zero() {
        return Jet::zero();
    }
    if b == Jet::zero() {
        return Jet::constant(1.0);
    }
    a * (a + b).recip()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: impl Fn(f64) -> f64, z: f64, h: f64) -> f64 {
        (f(z + h) - f(z - h)) / (2.0 * h)
    }

    #[test]
    fn polynomial_derivatives_are_exact() {
        let z = Jet::variable(0.7);
        let p = z * z * z + z * 2.0 + 1.0;
        let d = p.derivatives();
        assert!((d[0] - (0.343 + 1.4 + 1.0)).abs() < 1e-14);
        assert!((d[1] - (3.0 * 0.49 + 2.0)).abs() < 1e-14);
        assert!((d[2] - 6.0 * 0.7).abs() < 1e-14);
        assert!((d[3] - 6.0).abs() < 1e-14);
        assert_eq!(d[4], 0.0);
    }

    #[test]
    fn exp_and_tanh_match_closed_forms() {
        for &z in &[-1.3, 0.0, 0.4, 2.0] {
            let e = Jet::variable(z).scale(0.5).exp().derivatives();
            for (k, v) in e.iter().enumerate() {
                let exact = 0.5f64.powi(k as i32) * (0.5 * z).exp();
                assert!((v - exact).abs() < 1e-13 * exact.max(1.0));
            }
            let t = Jet::variable(z).tanh().derivatives();
            let th = z.tanh();
            let s2 = 1.0 - th * th;
            assert!((t[0] - th).abs() < 1e-15);
            assert!((t[1] - s2).abs() < 1e-14);
            assert!((t[2] + 2.0 * th * s2).abs() < 1e-13);
        }
    }

    #[test]
    fn smooth_step_derivative_matches_finite_difference() {
        let f = |z: f64| smooth_step(Jet::variable(z)).value();
        for &z in &[0.1, 0.3, 0.5, 0.77, 0.95] {
            let d = smooth_step(Jet::variable(z)).derivatives();
            assert!((d[1] - fd(f, z, 1e-5)).abs() < 1e-7, "z={z}");
            let f1 = |z: f64| smooth_step(Jet::variable(z)).derivatives()[1];
            assert!((d[2] - fd(f1, z, 1e-5)).abs() < 1e-5, "z={z}");
        }
        assert_eq!(smooth_step(Jet::variable(-0.2)), Jet::zero());
        assert_eq!(smooth_step(Jet::variable(1.5)), Jet::constant(1.0));
    }
}
