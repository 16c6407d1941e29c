//! Physical parameters, derived scales, the Thomas–Fermi profile and the
//! low-lying excitation spectrum of the trapped gas.
//!
//! All quantities stay in the caller's unit system; `hbar` is carried
//! explicitly and the Boltzmann constant is 1, so `beta` is the inverse
//! temperature itself.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Model inputs. `lambda` is the renormalized chemical potential and is
/// taken as given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub hbar: f64,
    pub m: f64,
    pub g: f64,
    /// Trap frequency.
    pub omega: f64,
    pub lambda: f64,
    pub beta: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            m: 1.0,
            g: 1.0,
            omega: 1.0,
            lambda: 1.0,
            beta: 1.0,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("hbar", self.hbar),
            ("m", self.m),
            ("g", self.g),
            ("omega", self.omega),
            ("lambda", self.lambda),
            ("beta", self.beta),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(domain(name, format!("must be finite and > 0, got {value}")));
            }
        }
        Ok(())
    }

    /// Parameters with `hbar = v = R_c = 1` and the requested `beta / alpha`,
    /// keeping `g` and `m = lambda = 1`.
    pub fn unit_trap(beta_over_alpha: f64, g: f64) -> Self {
        // v = 1 needs lambda = m; R_c = 1 needs omega = sqrt(2 lambda / m).
        Self {
            hbar: 1.0,
            m: 1.0,
            g,
            omega: std::f64::consts::SQRT_2,
            lambda: 1.0,
            beta: beta_over_alpha,
        }
    }
}

/// Scales derived from [`PhysicalParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedScales {
    /// Sound velocity at the trap center.
    pub v: f64,
    /// Condensate radius.
    pub r_c: f64,
    /// `R_c / (hbar v)`.
    pub alpha: f64,
    /// Thermal length `hbar beta v`.
    pub lambda_t: f64,
    /// `beta / alpha`.
    pub regime_ratio: f64,
}

pub fn derive_scales(p: &PhysicalParams) -> Result<DerivedScales> {
    p.validate()?;
    let v = (p.lambda / p.m).sqrt();
    let r_c = (2.0 * p.lambda / (p.m * p.omega * p.omega)).sqrt();
    let alpha = r_c / (p.hbar * v);
    Ok(DerivedScales {
        v,
        r_c,
        alpha,
        lambda_t: p.hbar * p.beta * v,
        regime_ratio: p.beta / alpha,
    })
}

/// Parameters bundled with their derived scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub params: PhysicalParams,
    pub scales: DerivedScales,
}

impl Model {
    pub fn new(params: PhysicalParams) -> Result<Self> {
        Ok(Self {
            scales: derive_scales(&params)?,
            params,
        })
    }

    /// `hbar v`, the velocity scale that converts imaginary time to length.
    pub fn hbar_v(&self) -> f64 {
        self.params.hbar * self.scales.v
    }

    /// Density at the trap center, `lambda / g`.
    pub fn rho_center(&self) -> f64 {
        self.params.lambda / self.params.g
    }

    pub fn rho_tf(&self, x: f64) -> f64 {
        rho_tf(x, &self.params, &self.scales)
    }

    /// Homogeneous critical exponent `2 pi hbar rho / (m v)` with `rho = lambda / g`.
    pub fn theta_hom(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.params.hbar * self.rho_center()
            / (self.params.m * self.scales.v)
    }

    /// Position-dependent critical exponent at half-sum `s`.
    pub fn theta_s(&self, s: f64) -> f64 {
        2.0 * std::f64::consts::PI * self.params.hbar * self.rho_tf(s)
            / (self.params.m * self.scales.v)
    }

    /// Correlation length `2 hbar^2 beta rho_TF(s) / m`.
    pub fn xi_s(&self, s: f64) -> f64 {
        self.scales.lambda_t / std::f64::consts::PI * self.theta_s(s)
    }
}

/// Thomas–Fermi density: an inverted parabola on `|x| <= R_c`, zero outside.
pub fn rho_tf(x: f64, p: &PhysicalParams, d: &DerivedScales) -> f64 {
    let q = 1.0 - (x / d.r_c).powi(2);
    if q > 0.0 {
        p.lambda / p.g * q
    } else {
        0.0
    }
}

/// `E_n = hbar Omega sqrt(n(n+1)/2)`, which equals `sqrt(n(n+1)) / alpha`.
pub fn energy_level(n: i64, p: &PhysicalParams) -> Result<f64> {
    if n < 0 {
        return Err(domain("n", format!("mode index must be >= 0, got {n}")));
    }
    let n = n as f64;
    Ok(p.hbar * p.omega * (n * (n + 1.0) / 2.0).sqrt())
}

/// Exact level spacing next to its large-`n` expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpacingEstimate {
    pub exact: f64,
    pub expansion: f64,
}

impl SpacingEstimate {
    pub fn difference(&self) -> f64 {
        self.exact - self.expansion
    }
}

/// `E_{n+1} - E_n` against `(1/alpha)[1 + 1/(8n^2) - 1/(4n^3)]`, both in
/// units of `hbar / alpha` (i.e. frequency units).
pub fn level_spacing_expansion(n: u64, d: &DerivedScales) -> Result<SpacingEstimate> {
    if n <= 1 {
        return Err(domain("n", format!("expansion needs n > 1, got {n}")));
    }
    let nf = n as f64;
    let e = |k: f64| (k * (k + 1.0)).sqrt() / d.alpha;
    let exact = e(nf + 1.0) - e(nf);
    let expansion = (1.0 + 1.0 / (8.0 * nf * nf) - 1.0 / (4.0 * nf * nf * nf)) / d.alpha;
    Ok(SpacingEstimate { exact, expansion })
}

/// Two spacetime points `(x1, tau1)` and `(x2, tau2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointPair {
    pub x1: f64,
    pub tau1: f64,
    pub x2: f64,
    pub tau2: f64,
}

impl PointPair {
    pub fn new(x1: f64, tau1: f64, x2: f64, tau2: f64) -> Self {
        Self { x1, tau1, x2, tau2 }
    }

    pub fn equal_time(x1: f64, x2: f64) -> Self {
        Self::new(x1, 0.0, x2, 0.0)
    }

    pub fn dx(&self) -> f64 {
        self.x1 - self.x2
    }

    pub fn dtau(&self) -> f64 {
        self.tau1 - self.tau2
    }

    /// Half-sum of the spatial arguments.
    pub fn s(&self) -> f64 {
        0.5 * (self.x1 + self.x2)
    }

    pub fn swapped(&self) -> Self {
        Self::new(self.x2, self.tau2, self.x1, self.tau1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    HighT,
    LowT,
    Intermediate,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::HighT => "high-t",
            Regime::LowT => "low-t",
            Regime::Intermediate => "intermediate",
        }
    }
}

/// Thresholds on `beta / alpha` that give "much less" and "much greater"
/// a numeric meaning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeThresholds {
    pub r_lo: f64,
    pub r_hi: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        Self { r_lo: 0.1, r_hi: 10.0 }
    }
}

pub fn classify_regime(d: &DerivedScales, t: RegimeThresholds) -> Result<Regime> {
    if !(t.r_lo > 0.0 && t.r_lo < t.r_hi) {
        return Err(Error::Config(format!(
            "regime thresholds need 0 < r_lo < r_hi, got r_lo={} r_hi={}",
            t.r_lo, t.r_hi
        )));
    }
    Ok(if d.regime_ratio < t.r_lo {
        Regime::HighT
    } else if d.regime_ratio > t.r_hi {
        Regime::LowT
    } else {
        Regime::Intermediate
    })
}
