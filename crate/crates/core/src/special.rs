//! Complex gamma-family functions and a log-scaled complex number.

use num_complex::Complex64;
use std::f64::consts::PI;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

// B_{2k} / (2k (2k-1)), k = 1..8
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

// B_{2k} / (2k), k = 1..8
const DIGAMMA: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32_760.0,
    1.0 / 12.0,
    -3617.0 / 8160.0,
];

const SHIFT_TO: f64 = 15.0;

fn shift_count(z: Complex64) -> usize {
    if z.re >= SHIFT_TO {
        0
    } else {
        (SHIFT_TO - z.re).ceil() as usize
    }
}

/// A branch of `ln Gamma(z)`; the imaginary part may differ from the
/// principal value by a multiple of `2 pi`, which is irrelevant once
/// exponentiated. Poles return an infinite real part.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    let n = shift_count(z);
    let mut corr = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let w = z + j as f64;
        if w.norm() == 0.0 {
            return Complex64::new(f64::INFINITY, 0.0);
        }
        corr += w.ln();
    }
    let w = z + n as f64;
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut p = inv;
    for c in STIRLING {
        series += p * c;
        p *= inv2;
    }
    (w - 0.5) * w.ln() - w + LN_SQRT_2PI + series - corr
}

pub fn digamma(z: Complex64) -> Complex64 {
    let n = shift_count(z);
    let mut corr = Complex64::new(0.0, 0.0);
    for j in 0..n {
        corr += (z + j as f64).inv();
    }
    let w = z + n as f64;
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut p = inv2;
    for c in DIGAMMA {
        series += p * c;
        p *= inv2;
    }
    w.ln() - inv * 0.5 - series - corr
}

/// `ln sin(z)` without overflow for large `|Im z|`.
pub fn ln_sin(z: Complex64) -> Complex64 {
    let i = Complex64::i();
    if z.im > 20.0 {
        // sin z = (i/2) e^{-iz} (1 - e^{2iz})
        Complex64::new(0.5, 0.0).ln() + i * (PI / 2.0) - i * z + (1.0 - (2.0 * i * z).exp()).ln()
    } else if z.im < -20.0 {
        // sin z = (-i/2) e^{iz} (1 - e^{-2iz})
        Complex64::new(0.5, 0.0).ln() - i * (PI / 2.0) + i * z + (1.0 - (-2.0 * i * z).exp()).ln()
    } else {
        z.sin().ln()
    }
}

/// `cot(z)` without overflow for large `|Im z|`.
pub fn cot(z: Complex64) -> Complex64 {
    let i = Complex64::i();
    if z.im > 0.0 {
        let e = (2.0 * i * z).exp();
        i * (e + 1.0) / (e - 1.0)
    } else if z.im < 0.0 {
        let e = (-2.0 * i * z).exp();
        i * (1.0 + e) / (1.0 - e)
    } else {
        Complex64::new(1.0 / z.re.tan(), 0.0)
    }
}

/// `mant * exp(exp)`; keeps very large or very small magnitudes representable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    pub mant: Complex64,
    pub exp: f64,
}

impl Scaled {
    pub const ZERO: Scaled = Scaled {
        mant: Complex64::new(0.0, 0.0),
        exp: 0.0,
    };

    pub fn new(mant: Complex64, exp: f64) -> Self {
        Self { mant, exp }.normalized()
    }

    pub fn from_complex(z: Complex64) -> Self {
        Self::new(z, 0.0)
    }

    pub fn from_real(x: f64) -> Self {
        Self::new(Complex64::new(x, 0.0), 0.0)
    }

    /// `exp(l)` for a complex logarithm `l`.
    pub fn from_ln(l: Complex64) -> Self {
        if l.re == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        Self {
            mant: Complex64::from_polar(1.0, l.im),
            exp: l.re,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mant.re == 0.0 && self.mant.im == 0.0
    }

    fn normalized(self) -> Self {
        let a = self.mant.norm();
        if a == 0.0 || !a.is_finite() {
            return if a == 0.0 { Self::ZERO } else { self };
        }
        let l = a.ln();
        Self {
            mant: self.mant / a,
            exp: self.exp + l,
        }
    }

    pub fn ln_abs(&self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.mant.norm().ln() + self.exp
        }
    }

    /// Unscaled value; overflows to infinity or underflows to zero as needed.
    pub fn value(&self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        if self.exp > 709.0 {
            let e = self.exp.exp();
            return Complex64::new(self.mant.re * e, self.mant.im * e);
        }
        self.mant * self.exp.exp()
    }

    pub fn mul(self, o: Scaled) -> Scaled {
        Scaled::new(self.mant * o.mant, self.exp + o.exp)
    }

    pub fn scale(self, c: Complex64) -> Scaled {
        Scaled::new(self.mant * c, self.exp)
    }

    pub fn div(self, o: Scaled) -> Scaled {
        Scaled::new(self.mant / o.mant, self.exp - o.exp)
    }

    pub fn neg(self) -> Scaled {
        Scaled {
            mant: -self.mant,
            exp: self.exp,
        }
    }

    pub fn add(self, o: Scaled) -> Scaled {
        if self.is_zero() {
            return o;
        }
        if o.is_zero() {
            return self;
        }
        let e = self.exp.max(o.exp);
        let m = self.mant * (self.exp - e).exp() + o.mant * (o.exp - e).exp();
        Scaled::new(m, e)
    }

    /// Sum of many terms aligned to their largest exponent, with the sum of
    /// magnitudes in the same scale (for cancellation estimates).
    pub fn sum(terms: &[Scaled]) -> (Scaled, f64) {
        let e = terms
            .iter()
            .filter(|t| !t.is_zero())
            .map(|t| t.exp)
            .fold(f64::NEG_INFINITY, f64::max);
        if e == f64::NEG_INFINITY {
            return (Scaled::ZERO, f64::NEG_INFINITY);
        }
        let mut m = Complex64::new(0.0, 0.0);
        let mut mag = 0.0;
        for t in terms.iter().filter(|t| !t.is_zero()) {
            let w = t.mant * (t.exp - e).exp();
            mag += w.norm();
            m += w;
        }
        (Scaled::new(m, e), mag.ln() + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn ln_gamma_real_values() {
        assert!(ln_gamma(c(1.0, 0.0)).norm() < 1e-14);
        assert!(ln_gamma(c(2.0, 0.0)).norm() < 1e-14);
        assert!((ln_gamma(c(0.5, 0.0)).re - 0.5 * PI.ln()).abs() < 1e-14);
        assert!((ln_gamma(c(10.0, 0.0)).re - 362_880f64.ln()).abs() < 1e-13);
        // Gamma(-0.5) = -2 sqrt(pi)
        let g = ln_gamma(c(-0.5, 0.0)).exp();
        assert!((g.re + 2.0 * PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn ln_gamma_complex_values() {
        // |Gamma(1/2 + i y)|^2 = pi / cosh(pi y)
        for &y in &[0.3, 2.0, 10.0, 60.0] {
            let l = ln_gamma(c(0.5, y)).re * 2.0;
            let exact = PI.ln() - (PI * y).cosh().ln();
            assert!((l - exact).abs() < 1e-12 * exact.abs().max(1.0), "y={y}");
        }
        // Gamma(1 + i) from mpmath
        let g = ln_gamma(c(1.0, 1.0)).exp();
        assert!((g - c(0.498_015_668_118_356_04, -0.154_949_828_301_810_68)).norm() < 1e-14);
    }

    #[test]
    fn ln_gamma_recurrence() {
        for &z in &[c(0.3, 0.7), c(-2.3, 1.1), c(5.0, -40.0)] {
            let d = ln_gamma(z + 1.0) - ln_gamma(z) - z.ln();
            let k = (d.im / (2.0 * PI)).round();
            assert!((d - c(0.0, 2.0 * PI * k)).norm() < 1e-12);
        }
    }

    #[test]
    fn digamma_values() {
        let euler = 0.577_215_664_901_532_9;
        assert!((digamma(c(1.0, 0.0)).re + euler).abs() < 1e-14);
        assert!((digamma(c(0.5, 0.0)).re + euler + 2.0 * 2f64.ln()).abs() < 1e-14);
        // Im psi(1/2 + i y) = (pi/2) tanh(pi y)
        for &y in &[0.5, 3.0, 50.0] {
            let d = digamma(c(0.5, y));
            assert!((d.im - PI / 2.0 * (PI * y).tanh()).abs() < 1e-13);
        }
        let z = c(-1.3, 0.4);
        assert!((digamma(z + 1.0) - digamma(z) - z.inv()).norm() < 1e-12);
    }

    #[test]
    fn stable_sin_and_cot() {
        for &z in &[c(0.3, 0.1), c(-1.2, 25.0), c(0.7, -30.0), c(-1.5, 300.0)] {
            let l = ln_sin(z);
            if z.im.abs() < 200.0 {
                let s = z.sin();
                assert!((l.exp() - s).norm() < 1e-12 * s.norm());
                let ct = z.cos() / s;
                assert!((cot(z) - ct).norm() < 1e-12 * ct.norm().max(1.0));
            } else {
                assert!((l.re - (z.im.abs() - 2f64.ln())).abs() < 1e-12);
                assert!((cot(z) - c(0.0, -1.0)).norm() < 1e-12);
            }
        }
        assert!((cot(c(0.4, 0.0)).re - 1.0 / 0.4f64.tan()).abs() < 1e-15);
    }

    #[test]
    fn scaled_arithmetic() {
        let a = Scaled::from_ln(c(800.0, 0.3));
        let b = Scaled::from_ln(c(-800.0, -0.3));
        let p = a.mul(b);
        assert!((p.value() - c(1.0, 0.0)).norm() < 1e-12);
        let s = a.add(a.neg());
        assert!(s.value().norm() == 0.0);
        let x = Scaled::from_real(3.0).add(Scaled::from_real(4.0));
        assert!((x.value().re - 7.0).abs() < 1e-14);
        let (t, mag) = Scaled::sum(&[Scaled::from_real(1.0), Scaled::from_real(-1.0 + 1e-10)]);
        assert!((t.value().re - 1e-10).abs() < 1e-16);
        assert!((mag - 2f64.ln()).abs() < 1e-9);
        assert!((a.ln_abs() - 800.0).abs() < 1e-12);
        assert_eq!(Scaled::ZERO.ln_abs(), f64::NEG_INFINITY);
    }
}
