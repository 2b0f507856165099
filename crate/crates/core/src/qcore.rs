//! q-shifted factorials and Gaussian binomial coefficients.
//!
//! Everything here is a pure function of its inputs. The base `q` is wrapped
//! in [`QBase`], which guarantees `0 < |q| < 1` and a finite value.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Complex = Complex64;

/// Default relative closeness to zero at which a divisor factor counts as a pole.
pub const DEFAULT_POLE_EPS: f64 = 1e-8;

/// Returns `z` if it is finite, otherwise a [`Error::NonFinite`] naming `what`.
pub fn finite(z: Complex, what: &str) -> Result<Complex> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(Error::NonFinite(format!("{what} = {z}")))
    }
}

/// A base `q` with `0 < |q| < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QBase(Complex);

impl QBase {
    pub fn new(q: Complex) -> Result<Self> {
        let q = finite(q, "q")?;
        let r = q.norm();
        if r > 0.0 && r < 1.0 {
            Ok(QBase(q))
        } else {
            Err(Error::InvalidParameter(format!(
                "base q must satisfy 0 < |q| < 1, got |q| = {r}"
            )))
        }
    }

    pub fn real(q: f64) -> Result<Self> {
        Self::new(Complex::new(q, 0.0))
    }

    #[inline]
    pub fn value(self) -> Complex {
        self.0
    }

    #[inline]
    pub fn modulus(self) -> f64 {
        self.0.norm()
    }

    /// `q^e` for any integer exponent.
    #[inline]
    pub fn pow(self, e: i64) -> Complex {
        self.0.powi(e as i32)
    }
}

/// `m(m-1)/2`, the exponent convention used for quadratic powers of `q`.
#[inline]
pub fn binom2(m: i64) -> i64 {
    m * (m - 1) / 2
}

/// `(x; q)_n` for any integer `n`.
///
/// For `n < 0` this is `1 / prod_{k=1}^{|n|} (1 - x q^{-k})`, the finite form of
/// the infinite-product quotient `(x; q)_inf / (x q^n; q)_inf`.
pub fn qpoch_finite(x: Complex, q: QBase, n: i64) -> Result<Complex> {
    qpoch_finite_eps(x, q, n, DEFAULT_POLE_EPS)
}

/// [`qpoch_finite`] with an explicit pole tolerance for the `n < 0` divisor.
pub fn qpoch_finite_eps(x: Complex, q: QBase, n: i64, pole_eps: f64) -> Result<Complex> {
    let one = Complex::new(1.0, 0.0);
    if n >= 0 {
        let mut acc = one;
        let mut xq = x;
        for _ in 0..n {
            acc *= one - xq;
            xq *= q.value();
        }
        return finite(acc, "(x;q)_n");
    }
    let qinv = q.value().inv();
    let mut den = one;
    let mut xq = x;
    for k in 1..=(-n) {
        xq *= qinv;
        let factor = one - xq;
        if factor.norm() < pole_eps * xq.norm().max(1.0) {
            return Err(Error::DegenerateDenominator(format!(
                "factor 1 - x q^-{k} vanishes for x = {x}"
            )));
        }
        den *= factor;
    }
    finite(den.inv(), "(x;q)_n")
}

/// `(x; q)_inf`, truncated at the first `K` with `|x| |q|^K / (1 - |q|) < tol`.
pub fn qpoch_inf(x: Complex, q: QBase, tol: f64) -> Complex {
    let one = Complex::new(1.0, 0.0);
    let r = q.modulus();
    let mut acc = one;
    let mut xq = x;
    while xq.norm() / (1.0 - r) >= tol {
        acc *= one - xq;
        xq *= q.value();
    }
    acc
}

/// Gaussian binomial coefficient `[n k]_q`, exactly zero outside `0 <= k <= n`.
pub fn qbinom(n: u32, k: i64, q: QBase) -> Complex {
    let n = i64::from(n);
    if k < 0 || k > n {
        return Complex::new(0.0, 0.0);
    }
    let k = k.min(n - k);
    let one = Complex::new(1.0, 0.0);
    let mut num = one;
    let mut den = one;
    for i in 1..=k {
        num *= one - q.pow(n - k + i);
        den *= one - q.pow(i);
    }
    num / den
}
