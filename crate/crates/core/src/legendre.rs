//! Legendre polynomials and Ferrers functions `P_nu`, `Q_nu` of complex
//! degree on the open interval `(-1, 1)`.
//!
//! Values of non-integer degree are produced in log-scaled form
//! ([`Scaled`]) because conical functions `P_{-1/2 + i mu}` grow like
//! `exp(mu * theta)` and overflow a double long before the physics stops
//! being interesting.

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::error::{domain, Error, Result};
use crate::model::DerivedScales;
use crate::special::{cot, digamma, ln_gamma, ln_sin, Scaled};

/// Default relative tolerance for Legendre evaluations.
pub const DEFAULT_TOL: f64 = 1e-11;
/// Series are abandoned after this many terms.
pub const MAX_TERMS: usize = 4_000_000;
/// Default endpoint clamp: callers keep `|u| <= 1 - EDGE_EPS`.
pub const EDGE_EPS: f64 = 1e-6;

const EPS: f64 = f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DegreeOrigin {
    Integer(i64),
    FromOmega(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Degree {
    #[serde(serialize_with = "ser_complex")]
    pub nu: Complex64,
    pub origin: DegreeOrigin,
}

pub(crate) fn ser_complex<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&z.re)?;
    t.serialize_element(&z.im)?;
    t.end()
}

impl Degree {
    pub fn integer(n: i64) -> Self {
        Self {
            nu: Complex64::new(n as f64, 0.0),
            origin: DegreeOrigin::Integer(n),
        }
    }

    /// Arbitrary complex degree; integral values are recognized as such.
    pub fn complex(nu: Complex64) -> Self {
        let origin = match as_integer(nu) {
            Some(n) => DegreeOrigin::Integer(n),
            None => DegreeOrigin::FromOmega(f64::NAN),
        };
        Self { nu, origin }
    }

    pub fn as_integer(&self) -> Option<i64> {
        as_integer(self.nu)
    }

    /// Degree of the form `-1/2 + i mu`.
    pub fn is_conical(&self) -> bool {
        self.nu.re == -0.5 && self.nu.im != 0.0
    }
}

fn as_integer(nu: Complex64) -> Option<i64> {
    if nu.im == 0.0 && nu.re.fract() == 0.0 && nu.re.abs() < 1e15 {
        Some(nu.re as i64)
    } else {
        None
    }
}

/// `nu = -1/2 + sqrt(1/4 - alpha^2 omega^2)`, principal branch.
pub fn nu_from_omega(omega: f64, d: &DerivedScales) -> Degree {
    nu_from_alpha_omega(d.alpha * omega, omega)
}

pub(crate) fn nu_from_alpha_omega(aw: f64, omega: f64) -> Degree {
    let disc = 0.25 - aw * aw;
    let nu = if disc >= 0.0 {
        Complex64::new(-0.5 + disc.sqrt(), 0.0)
    } else {
        Complex64::new(-0.5, (-disc).sqrt())
    };
    Degree {
        nu,
        origin: DegreeOrigin::FromOmega(omega),
    }
}

/// Legendre polynomial by the three-term recurrence.
pub fn p_poly(n: u64, u: f64) -> Result<f64> {
    if !(u.abs() <= 1.0) {
        return Err(domain("u", format!("|u| must be <= 1, got {u}")));
    }
    Ok(p_poly_unchecked(n, u))
}

fn p_poly_unchecked(n: u64, u: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let (mut p0, mut p1) = (1.0, u);
    for k in 1..n {
        let k = k as f64;
        let p2 = ((2.0 * k + 1.0) * u * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Fills `out[n] = P_n(u)` for `n = 0..out.len()`.
pub fn p_poly_table(u: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = u;
    }
    for k in 1..out.len().saturating_sub(1) {
        let kf = k as f64;
        out[k + 1] = ((2.0 * kf + 1.0) * u * out[k] - kf * out[k - 1]) / (kf + 1.0);
    }
}

/// Which phase the large-`n` form uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
pub enum AsymptoticVariant {
    /// `cos((n + 1/2) theta - pi/4)`, the classical form.
    HalfShift,
    /// `cos(n theta - pi/4)`.
    Plain,
}

impl AsymptoticVariant {
    pub fn shift(&self) -> f64 {
        match self {
            AsymptoticVariant::HalfShift => 0.5,
            AsymptoticVariant::Plain => 0.0,
        }
    }
}

/// `sqrt(2 / (pi n sin theta)) cos((n + h) theta - pi/4)`.
pub fn p_poly_asymptotic(n: u64, theta: f64, variant: AsymptoticVariant) -> Result<f64> {
    if n == 0 {
        return Err(domain("n", "asymptotic form needs n >= 1"));
    }
    if !(theta > 0.0 && theta < PI) {
        return Err(domain("theta", format!("must lie in (0, pi), got {theta}")));
    }
    let nf = n as f64;
    let amp = (2.0 / (PI * nf * theta.sin())).sqrt();
    Ok(amp * ((nf + variant.shift()) * theta - FRAC_PI_4).cos())
}

/// Outcome of a Legendre function evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledEval {
    pub value: Scaled,
    /// Estimated relative error (series tail plus rounding amplified by
    /// cancellation).
    pub rel_error: f64,
    pub terms: usize,
}

struct SeriesOut {
    sum: Scaled,
    tail_rel: f64,
    /// `sum |t_k| / |sum t_k|`.
    loss: f64,
    terms: usize,
}

/// Gauss series `2F1(a, b; c; z)` for real `0 <= z < 1`, accumulated in
/// scaled form.
fn hyp2f1(a: Complex64, b: Complex64, c: Complex64, z: f64, tol: f64) -> Result<SeriesOut> {
    let one = Complex64::new(1.0, 0.0);
    if z == 0.0 {
        return Ok(SeriesOut {
            sum: Scaled::from_complex(one),
            tail_rel: 0.0,
            loss: 1.0,
            terms: 1,
        });
    }
    let mut t = one;
    let mut s = one;
    let mut mag = 1.0;
    let mut exp = 0.0;
    let mut k = 0usize;
    loop {
        let kf = k as f64;
        let r = (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * z;
        t *= r;
        k += 1;
        if t.norm() == 0.0 {
            return Ok(SeriesOut {
                sum: Scaled::new(s, exp),
                tail_rel: 0.0,
                loss: mag / s.norm(),
                terms: k,
            });
        }
        s += t;
        mag += t.norm();
        let big = mag.max(t.norm());
        if big > 1e150 {
            t /= big;
            s /= big;
            mag /= big;
            exp += big.ln();
        }
        let kf = k as f64;
        let rn = ((a + kf) * (b + kf) / ((c + kf) * (kf + 1.0))).norm() * z;
        let rho = rn.max(z);
        if rho < 1.0 {
            let tail = t.norm() * rn / (1.0 - rho);
            let sn = s.norm();
            if tail <= tol * sn || (sn == 0.0 && tail == 0.0) {
                return Ok(SeriesOut {
                    sum: Scaled::new(s, exp),
                    tail_rel: if sn > 0.0 { tail / sn } else { 0.0 },
                    loss: if sn > 0.0 { mag / sn } else { f64::INFINITY },
                    terms: k + 1,
                });
            }
        }
        if k >= MAX_TERMS {
            let sn = s.norm();
            return Err(Error::Accuracy {
                achieved: t.norm() / sn.max(f64::MIN_POSITIVE),
                requested: tol,
                context: format!("hypergeometric series at z={z} did not converge in {MAX_TERMS} terms"),
            });
        }
    }
}

fn series_tol(tol: f64) -> f64 {
    (tol * 0.01).min(1e-15)
}

fn rounding(loss: f64, terms: usize) -> f64 {
    EPS * loss * (1.0 + (terms as f64).sqrt())
}

fn check_u(u: f64) -> Result<()> {
    if !(u > -1.0 && u < 1.0) {
        return Err(domain("u", format!("must lie in (-1, 1), got {u}")));
    }
    Ok(())
}

/// `P_nu(u)` in scaled form.
pub fn legendre_p_scaled(nu: Complex64, u: f64, tol: f64) -> Result<ScaledEval> {
    check_u(u)?;
    if !(tol > 0.0) {
        return Err(domain("tol", "must be > 0"));
    }
    if let Some(n) = as_integer(nu) {
        let deg = if n >= 0 { n } else { -n - 1 } as u64;
        return Ok(ScaledEval {
            value: Scaled::from_real(p_poly_unchecked(deg, u)),
            rel_error: EPS * (1.0 + deg as f64),
            terms: deg as usize + 1,
        });
    }
    let out = if u >= 0.0 {
        p_direct(nu, u, tol)?
    } else {
        let theta_c = PI - u.acos();
        if u < -0.99 && nu.im.abs() * theta_c < 3.0 {
            p_log_connection(nu, u, tol)?
        } else {
            p_even_odd(nu, u, tol)?
        }
    };
    if out.rel_error > tol {
        return Err(Error::Accuracy {
            achieved: out.rel_error,
            requested: tol,
            context: format!("P_nu(u) at nu={nu}, u={u}"),
        });
    }
    Ok(out)
}

fn p_direct(nu: Complex64, u: f64, tol: f64) -> Result<ScaledEval> {
    let s = hyp2f1(-nu, nu + 1.0, Complex64::new(1.0, 0.0), (1.0 - u) / 2.0, series_tol(tol))?;
    Ok(ScaledEval {
        value: s.sum,
        rel_error: s.tail_rel + rounding(s.loss, s.terms),
        terms: s.terms,
    })
}

fn p_even_odd(nu: Complex64, u: f64, tol: f64) -> Result<ScaledEval> {
    let half = 0.5;
    let z = u * u;
    let ye = hyp2f1(-nu * half, (nu + 1.0) * half, Complex64::new(0.5, 0.0), z, series_tol(tol))?;
    let yo = hyp2f1((1.0 - nu) * half, (nu + 2.0) * half, Complex64::new(1.5, 0.0), z, series_tol(tol))?;
    let ln_sqrt_pi = 0.5 * PI.ln();
    let p0 = Scaled::from_ln(ln_sqrt_pi - ln_gamma(nu * half + 1.0) - ln_gamma(0.5 - nu * half));
    let p0d = Scaled::from_ln((2.0f64).ln() + ln_sqrt_pi - ln_gamma(nu * half + 0.5) - ln_gamma(-nu * half)).neg();
    let a = p0.mul(ye.sum);
    let b = p0d.mul(yo.sum).scale(Complex64::new(u, 0.0));
    let (sum, mag) = Scaled::sum(&[a, b]);
    let cancel = (mag - sum.ln_abs()).exp();
    let tail = ye.tail_rel.max(yo.tail_rel);
    let loss = ye.loss.max(yo.loss);
    Ok(ScaledEval {
        value: sum,
        rel_error: cancel * (tail + rounding(loss, ye.terms.max(yo.terms))) + 8.0 * EPS * cancel,
        terms: ye.terms + yo.terms,
    })
}

/// Expansion about `u = -1` for `c = a + b`, which carries a logarithm.
fn p_log_connection(nu: Complex64, u: f64, tol: f64) -> Result<ScaledEval> {
    let a = -nu;
    let b = nu + 1.0;
    let w = (1.0 + u) / 2.0;
    let lnw = w.ln();
    let one = Complex64::new(1.0, 0.0);
    let mut psi1 = digamma(one);
    let mut psia = digamma(a);
    let mut psib = digamma(b);
    let mut coef = one;
    let mut exp = 0.0;
    let mut s = coef * (2.0 * psi1 - psia - psib - lnw);
    let mut mag = s.norm();
    let mut k = 0usize;
    loop {
        let kf = k as f64;
        coef *= (a + kf) * (b + kf) / ((kf + 1.0) * (kf + 1.0)) * w;
        psi1 += 1.0 / (kf + 1.0);
        psia += (a + kf).inv();
        psib += (b + kf).inv();
        k += 1;
        let t = coef * (2.0 * psi1 - psia - psib - lnw);
        s += t;
        mag += t.norm();
        let big = mag.max(coef.norm());
        if big > 1e150 {
            coef /= big;
            s /= big;
            mag /= big;
            exp += big.ln();
        }
        let kf = k as f64;
        let rn = ((a + kf) * (b + kf)).norm() / ((kf + 1.0) * (kf + 1.0)) * w;
        if rn < 0.5 && k > 2 {
            // The bracket grows at most logarithmically; 2 |t| rn bounds the tail.
            let tail = 2.0 * t.norm() * rn / (1.0 - rn.max(w));
            if tail <= series_tol(tol) * mag {
                let sum = Scaled::new(s, exp);
                let pref = Scaled::from_ln(ln_sin(nu * PI) - PI.ln()).neg();
                let value = pref.mul(sum);
                let cancel = (mag.ln() + exp - sum.ln_abs()).exp();
                return Ok(ScaledEval {
                    value,
                    rel_error: cancel * (tail / mag + rounding(1.0, k) * 4.0),
                    terms: k + 1,
                });
            }
        }
        if k >= MAX_TERMS {
            return Err(Error::Accuracy {
                achieved: f64::INFINITY,
                requested: tol,
                context: format!("log-connection series at u={u} did not converge"),
            });
        }
    }
}

/// `Q_n(u)` for integer `n >= 0` by upward recurrence.
pub fn q_integer(n: u64, u: f64) -> Result<f64> {
    check_u(u)?;
    let q0 = u.atanh();
    if n == 0 {
        return Ok(q0);
    }
    let (mut a, mut b) = (q0, u * q0 - 1.0);
    for k in 1..n {
        let k = k as f64;
        let c = ((2.0 * k + 1.0) * u * b - k * a) / (k + 1.0);
        a = b;
        b = c;
    }
    Ok(b)
}

/// `Q_nu(u)` in scaled form, together with `P_nu(u)`.
pub fn legendre_pq_scaled(nu: Complex64, u: f64, tol: f64) -> Result<(ScaledEval, ScaledEval)> {
    let p = legendre_p_scaled(nu, u, tol)?;
    if let Some(n) = as_integer(nu) {
        if n < 0 {
            return Err(domain("nu", format!("Q is not defined for negative integer degree {n}")));
        }
        let q = q_integer(n as u64, u)?;
        let q = ScaledEval {
            value: Scaled::from_real(q),
            rel_error: EPS * (4.0 + n as f64),
            terms: n as usize + 1,
        };
        return Ok((p, q));
    }
    let pm = legendre_p_scaled(nu, -u, tol)?;
    let z = nu * PI;
    let half_pi = Complex64::new(FRAC_PI_2, 0.0);
    let t1 = p.value.scale(cot(z) * half_pi);
    let t2 = pm.value.div(Scaled::from_ln(ln_sin(z))).scale(-half_pi);
    let (sum, mag) = Scaled::sum(&[t1, t2]);
    let cancel = if sum.is_zero() { f64::INFINITY } else { (mag - sum.ln_abs()).exp() };
    let rel_error = cancel * (p.rel_error.max(pm.rel_error) + 4.0 * EPS * (1.0 + z.norm()));
    if rel_error > tol {
        return Err(Error::Accuracy {
            achieved: rel_error,
            requested: tol,
            context: format!("Q_nu(u) at nu={nu}, u={u}"),
        });
    }
    let q = ScaledEval {
        value: sum,
        rel_error,
        terms: p.terms + pm.terms,
    };
    Ok((p, q))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LegendrePair {
    #[serde(serialize_with = "ser_complex")]
    pub p: Complex64,
    #[serde(serialize_with = "ser_complex")]
    pub q: Complex64,
    pub u: f64,
    pub nu: Degree,
    /// Total number of series terms used.
    pub terms: usize,
    /// Relative error bound, the larger of the two members.
    pub rel_error: f64,
}

/// `P_nu(u)` and `Q_nu(u)`; values overflow to infinity for very large
/// conical index, use [`legendre_pq_scaled`] there.
pub fn legendre_pair(nu: Degree, u: f64, tol: f64) -> Result<LegendrePair> {
    let (p, q) = legendre_pq_scaled(nu.nu, u, tol)?;
    Ok(LegendrePair {
        p: p.value.value(),
        q: q.value.value(),
        u,
        nu,
        terms: p.terms + q.terms,
        rel_error: p.rel_error.max(q.rel_error),
    })
}

/// Wronskian self-test result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WronskianResidual {
    /// `|(P Q' - P' Q) - 1/(1-u^2)|`.
    pub absolute: f64,
    /// Absolute residual over `max(|P Q'| + |P' Q|, 1/(1-u^2))`.
    pub normalized: f64,
}

/// Checks `P Q' - P' Q = 1/(1-u^2)` with fourth-order central differences
/// of step `h` (default `1e-5 (1-u^2)` when `None`).
pub fn wronskian_check(nu: Degree, u: f64, h: Option<f64>, tol: f64) -> Result<WronskianResidual> {
    let h = h.unwrap_or(1e-5 * (1.0 - u * u));
    if !(u - 2.0 * h > -1.0 && u + 2.0 * h < 1.0 && h > 0.0) {
        return Err(domain("h", format!("u +- 2h must stay inside (-1, 1), u={u} h={h}")));
    }
    let at = |x: f64| legendre_pq_scaled(nu.nu, x, tol);
    let (p, q) = at(u)?;
    // Work relative to the scale of P and Q at u so that huge conical
    // values do not overflow.
    let ep = p.value.exp;
    let eq = q.value.exp;
    let rel = |s: Scaled, e: f64| s.mant * (s.exp - e).exp();
    let mut pd = Complex64::new(0.0, 0.0);
    let mut qd = Complex64::new(0.0, 0.0);
    for (k, w) in [(1.0, 8.0), (-1.0, -8.0), (2.0, -1.0), (-2.0, 1.0)] {
        let (pk, qk) = at(u + k * h)?;
        pd += rel(pk.value, ep) * w;
        qd += rel(qk.value, eq) * w;
    }
    pd /= 12.0 * h;
    qd /= 12.0 * h;
    let (p0, q0) = (rel(p.value, ep), rel(q.value, eq));
    let w = p0 * qd - pd * q0;
    let scale_ln = ep + eq;
    let target = 1.0 / (1.0 - u * u);
    let diff = Scaled::new(w, scale_ln).add(Scaled::from_real(-target));
    let absolute = diff.value().norm();
    let mag = Scaled::new(Complex64::new((p0 * qd).norm() + (pd * q0).norm(), 0.0), scale_ln);
    let denom = mag.ln_abs().max(target.ln());
    Ok(WronskianResidual {
        absolute,
        normalized: (diff.ln_abs() - denom).exp(),
    })
}

/// Residual of `(1-u^2) y'' - 2u y' + nu(nu+1) y = 0` for `P_nu` by central
/// differences, relative to `|nu(nu+1) y| + |2u y'| + |(1-u^2) y''|`.
pub fn ode_residual_p(nu: Complex64, u: f64, h: f64, tol: f64) -> Result<f64> {
    let ev = |x: f64| legendre_p_scaled(nu, x, tol);
    let c = ev(u)?;
    let e = c.value.exp;
    let rel = |s: Scaled| s.mant * (s.exp - e).exp();
    let y = rel(c.value);
    let yp = rel(ev(u + h)?.value);
    let ym = rel(ev(u - h)?.value);
    let d1 = (yp - ym) / (2.0 * h);
    let d2 = (yp - 2.0 * y + ym) / (h * h);
    let lam = nu * (nu + 1.0);
    let r = (1.0 - u * u) * d2 - 2.0 * u * d1 + lam * y;
    let scale = ((1.0 - u * u) * d2).norm() + (2.0 * u * d1).norm() + (lam * y).norm();
    Ok(r.norm() / scale)
}
