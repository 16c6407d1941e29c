//! Two-point correlator from Green values, the closed-form correlators,
//! critical exponents, and exponent extraction by regression.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::green_homogeneous::ln_abs_2sinh;
use crate::green_trapped::{
    low_t_gate, low_t_legendre_series, matsubara_assemble, quasi_hom_window, u_star, LowTControl, WindowControl,
};
use crate::model::{classify_regime, Model, PointPair, Regime, RegimeThresholds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelatorMethod {
    Series,
    Spectral,
    AsymptoticAuto,
    ClosedForm,
}

impl CorrelatorMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            CorrelatorMethod::Series => "series",
            CorrelatorMethod::Spectral => "spectral",
            CorrelatorMethod::AsymptoticAuto => "asymptotic-auto",
            CorrelatorMethod::ClosedForm => "closed-form",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelatorQuery {
    pub pair: PointPair,
    pub method: CorrelatorMethod,
}

impl CorrelatorQuery {
    pub fn new(pair: PointPair, method: CorrelatorMethod) -> Self {
        Self { pair, method }
    }

    pub fn s(&self) -> f64 {
        self.pair.s()
    }
}

/// Correlator value with the imaginary part left over after symmetrizing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaValue {
    pub gamma: f64,
    pub imag_residual: f64,
}

/// `sqrt(rho_TF(x1) rho_TF(x2)) exp(-(G12 + G21)/2)`; the imaginary part of
/// the symmetrized Green value must stay below `tol`.
pub fn gamma_from_green(pair: &PointPair, g12: Complex64, g21: Complex64, model: &Model, tol: f64) -> Result<GammaValue> {
    let sym = 0.5 * (g12 + g21);
    let residual = sym.im.abs();
    if !(residual <= tol) {
        return Err(Error::Consistency(format!(
            "symmetrized Green value has imaginary part {residual:e} above {tol:e}"
        )));
    }
    let pre = (model.rho_tf(pair.x1) * model.rho_tf(pair.x2)).sqrt();
    Ok(GammaValue {
        gamma: pre * (-sym.re).exp(),
        imag_residual: residual,
    })
}

fn density_prefactor(x1: f64, x2: f64, model: &Model) -> Result<f64> {
    let pre = (model.rho_tf(x1) * model.rho_tf(x2)).sqrt();
    if !(pre > 0.0) {
        return Err(domain("x", format!("points {x1}, {x2} not both inside the condensate")));
    }
    Ok(pre)
}

/// Equal-time correlator including the density gradient term.
pub fn gamma_d1_exact(x1: f64, x2: f64, model: &Model) -> Result<f64> {
    let pre = density_prefactor(x1, x2, model)?;
    let r = model.scales.r_c;
    let hv = model.hbar_v();
    let d = (x1 - x2).abs() / r;
    let c = x1 * x2 / (r * r);
    let (num, den) = (1.0 + d - c, 1.0 - d - c);
    if !(num > 0.0 && den > 0.0) {
        return Err(domain("x", format!("bracket not positive for x1={x1}, x2={x2}")));
    }
    let expo = -model.params.g * r / (4.0 * model.params.beta * hv * hv);
    Ok(pre * (num / den).powf(expo))
}

/// `Lambda / (2 beta (hbar v)^2 rho_TF(S))`, the inverse correlation length.
fn inverse_xi(model: &Model, s: f64) -> Result<f64> {
    let rho = model.rho_tf(s);
    if !(rho > 0.0) {
        return Err(domain("S", format!("half-sum {s} outside the condensate")));
    }
    let hv = model.hbar_v();
    Ok(model.params.lambda / (2.0 * model.params.beta * hv * hv * rho))
}

/// Equal-time correlator in the quasi-homogeneous window
/// `|x1 - x2| <= f R_c` and `|x1 - x2| <= f |S|`.
pub fn gamma_d1_quasihom(x1: f64, x2: f64, model: &Model, w: &WindowControl) -> Result<f64> {
    let dx = (x1 - x2).abs();
    let s = 0.5 * (x1 + x2);
    let mut violated = Vec::new();
    if dx > w.factor * model.scales.r_c {
        violated.push(format!("|x1 - x2| / R_c = {} > {}", dx / model.scales.r_c, w.factor));
    }
    if dx > w.factor * s.abs() {
        violated.push(format!("|x1 - x2| / |S| = {} > {}", dx / s.abs(), w.factor));
    }
    if !violated.is_empty() {
        return Err(Error::Regime { violated });
    }
    let pre = density_prefactor(x1, x2, model)?;
    Ok(pre * (-inverse_xi(model, s)? * dx).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HomogForm {
    /// `|sinh(pi/lambda_T (dx + i hbar v dtau))|^{-1/theta}`.
    HighT,
    /// `|sinh(i pi/(2 R_c) (dx + i hbar v dtau))|^{-1/theta}`.
    LowT,
    /// `|dx + i hbar v dtau|^{-1/theta}`.
    PowerLaw,
}

/// Correlator of the homogeneous gas with density `Lambda / g`.
pub fn gamma_homog(pair: &PointPair, model: &Model, form: HomogForm) -> Result<f64> {
    let rho = model.rho_center();
    let inv_theta = 1.0 / model.theta_hom();
    let hv = model.hbar_v();
    let dx = pair.dx().abs();
    let dt = hv * pair.dtau();
    let ln_base = match form {
        HomogForm::HighT => {
            let k = PI / model.scales.lambda_t;
            sinh_ln(k * dx, k * dt)?
        }
        HomogForm::LowT => {
            let k = PI / (2.0 * model.scales.r_c);
            sinh_ln((k * dt).abs(), k * dx)?
        }
        HomogForm::PowerLaw => power_ln(dx, dt)?,
    };
    Ok(rho * (-inv_theta * ln_base).exp())
}

/// `ln |sinh(a + i b)|`.
fn sinh_ln(a: f64, b: f64) -> Result<f64> {
    if a == 0.0 && b.sin() == 0.0 {
        return Err(Error::Divergent);
    }
    Ok(ln_abs_2sinh(a, b) - 2f64.ln())
}

fn power_ln(dx: f64, dt: f64) -> Result<f64> {
    let m = dx.hypot(dt);
    if m == 0.0 {
        return Err(Error::Divergent);
    }
    Ok(m.ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrappedForm {
    /// `|sinh(pi/lambda_T (dx + i hbar v dtau))|^{-1/theta(S)}`.
    SinhPower,
    /// `exp(-|dx + i hbar v dtau| / xi(S))`.
    Exponential,
    /// `|dx + i hbar v dtau|^{-1/theta(S)}`; shared by both temperature regimes.
    PowerLaw,
}

impl TrappedForm {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrappedForm::SinhPower => "sinh-power",
            TrappedForm::Exponential => "exponential",
            TrappedForm::PowerLaw => "power-law",
        }
    }
}

/// Trapped correlator in one of its asymptotic forms, without window checks.
pub fn gamma_trapped_form(pair: &PointPair, model: &Model, form: TrappedForm) -> Result<f64> {
    let pre = density_prefactor(pair.x1, pair.x2, model)?;
    let s = pair.s();
    let hv = model.hbar_v();
    let dx = pair.dx().abs();
    let dt = hv * pair.dtau();
    match form {
        TrappedForm::SinhPower => {
            let k = PI / model.scales.lambda_t;
            Ok(pre * (-sinh_ln(k * dx, k * dt)? / model.theta_s(s)).exp())
        }
        TrappedForm::Exponential => Ok(pre * (-dx.hypot(dt) * inverse_xi(model, s)?).exp()),
        TrappedForm::PowerLaw => power_law(pre, dx, dt, model.theta_s(s)),
    }
}

fn power_law(pre: f64, dx: f64, dt: f64, theta: f64) -> Result<f64> {
    Ok(pre * (-power_ln(dx, dt)? / theta).exp())
}

/// Violated inequalities of the exponential window
/// `1 << |dx| / lambda_T << R_c / lambda_T` (plus `|S| <= f R_c`).
pub fn exponential_window(pair: &PointPair, model: &Model, w: &WindowControl) -> (Vec<String>, f64) {
    let rep = quasi_hom_window(pair, model, w);
    let mut v = rep.violated;
    let lt = model.scales.lambda_t;
    let dx = pair.dx().abs();
    let r1 = lt / dx;
    if !(r1 <= w.factor) {
        v.push(format!("lambda_T / |x1 - x2| = {r1} > {}", w.factor));
    }
    (v, rep.slack.min(w.factor - r1))
}

/// Violated inequalities of the power-law window
/// `|dx| / lambda_T, |dtau| / beta << 1 << R_c / lambda_T` (plus `|S| <= f R_c`).
pub fn power_law_window(pair: &PointPair, model: &Model, w: &WindowControl) -> (Vec<String>, f64) {
    let rep = quasi_hom_window(pair, model, w);
    let mut v = rep.violated;
    let lt = model.scales.lambda_t;
    let ratios = [
        ("|x1 - x2| / lambda_T", pair.dx().abs() / lt),
        ("|tau1 - tau2| / beta", pair.dtau().abs() / model.params.beta),
        ("lambda_T / R_c", lt / model.scales.r_c),
    ];
    let mut slack = rep.slack;
    for (name, r) in ratios {
        if !(r <= w.factor) {
            v.push(format!("{name} = {r} > {}", w.factor));
        }
        slack = slack.min(w.factor - r);
    }
    (v, slack)
}

/// Options shared by the correlator routes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorOptions {
    pub thresholds: RegimeThresholds,
    pub window: WindowControl,
    pub low_t: LowTControl,
    pub l_max: u64,
    pub tol: f64,
}

impl Default for CorrelatorOptions {
    fn default() -> Self {
        Self {
            thresholds: RegimeThresholds::default(),
            window: WindowControl::default(),
            low_t: LowTControl::default(),
            l_max: 64,
            tol: 1e-10,
        }
    }
}

/// A correlator with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelatorValue {
    pub gamma: f64,
    /// Route actually taken, e.g. `asymptotic-auto:power-law` or `spectral`.
    pub method: String,
    pub window_slack: Option<f64>,
    pub notice: Option<String>,
    pub imag_residual: f64,
}

/// Evaluates a correlator query.
/// Coincident points give `rho_TF(x1)` for every method.
pub fn correlator(q: &CorrelatorQuery, model: &Model, opt: &CorrelatorOptions) -> Result<CorrelatorValue> {
    let beta = model.params.beta;
    if q.pair.x1 == q.pair.x2 && (q.pair.dtau() / beta).fract() == 0.0 {
        return Ok(CorrelatorValue {
            gamma: density_prefactor(q.pair.x1, q.pair.x2, model)?,
            method: "coincident".into(),
            window_slack: None,
            notice: None,
            imag_residual: 0.0,
        });
    }
    match q.method {
        CorrelatorMethod::Spectral => spectral_gamma(&q.pair, model, opt, None),
        CorrelatorMethod::Series => {
            let g12 = low_t_legendre_series(&q.pair, model, &opt.low_t)?;
            let g21 = low_t_legendre_series(&q.pair.swapped(), model, &opt.low_t)?;
            let v = gamma_from_green(
                &q.pair,
                Complex64::new(g12.value, 0.0),
                Complex64::new(g21.value, 0.0),
                model,
                opt.tol,
            )?;
            Ok(CorrelatorValue {
                gamma: v.gamma,
                method: "series".into(),
                window_slack: None,
                notice: Some(format!("n0 drift {:.3e}", g12.n0_drift.max(g21.n0_drift))),
                imag_residual: v.imag_residual,
            })
        }
        CorrelatorMethod::ClosedForm => {
            if q.pair.dtau() != 0.0 {
                return Err(Error::Usage("closed-form correlator needs equal times".into()));
            }
            Ok(CorrelatorValue {
                gamma: gamma_d1_exact(q.pair.x1, q.pair.x2, model)?,
                method: "closed-form".into(),
                window_slack: None,
                notice: None,
                imag_residual: 0.0,
            })
        }
        CorrelatorMethod::AsymptoticAuto => asymptotic_auto(&q.pair, model, opt),
    }
}

fn spectral_gamma(pair: &PointPair, model: &Model, opt: &CorrelatorOptions, notice: Option<String>) -> Result<CorrelatorValue> {
    let a = matsubara_assemble(pair, model, opt.l_max, opt.tol)?;
    let b = matsubara_assemble(&pair.swapped(), model, opt.l_max, opt.tol)?;
    let v = gamma_from_green(
        pair,
        Complex64::new(a.re, a.im_residual),
        Complex64::new(b.re, b.im_residual),
        model,
        opt.tol,
    )?;
    Ok(CorrelatorValue {
        gamma: v.gamma,
        method: "spectral".into(),
        window_slack: None,
        notice,
        imag_residual: v.imag_residual,
    })
}

/// Picks the asymptotic form whose window holds; falls back to the
/// spectral route with a notice otherwise.
pub fn asymptotic_auto(pair: &PointPair, model: &Model, opt: &CorrelatorOptions) -> Result<CorrelatorValue> {
    let regime = classify_regime(&model.scales, opt.thresholds)?;
    let pick = |form: TrappedForm, slack: f64| -> Result<CorrelatorValue> {
        Ok(CorrelatorValue {
            gamma: gamma_trapped_form(pair, model, form)?,
            method: format!("asymptotic-auto:{}", form.as_str()),
            window_slack: Some(slack),
            notice: None,
            imag_residual: 0.0,
        })
    };
    let mut failed: Vec<String> = Vec::new();
    match regime {
        Regime::HighT => {
            let (v, slack) = exponential_window(pair, model, &opt.window);
            if v.is_empty() {
                return pick(TrappedForm::Exponential, slack);
            }
            failed.extend(v);
            let (v, slack) = power_law_window(pair, model, &opt.window);
            if v.is_empty() {
                return pick(TrappedForm::PowerLaw, slack);
            }
            failed.extend(v);
            let rep = quasi_hom_window(pair, model, &opt.window);
            if rep.violated.is_empty() {
                return pick(TrappedForm::SinhPower, rep.slack);
            }
            failed.extend(rep.violated);
        }
        Regime::LowT => {
            let rep = quasi_hom_window(pair, model, &opt.window);
            let us = u_star(pair, model);
            let gate = low_t_gate(opt.low_t.n0, us);
            if gate.is_empty() && rep.violated.is_empty() {
                let slack = rep.slack.min(1.0 - opt.low_t.n0 as f64 * us);
                return pick(TrappedForm::PowerLaw, slack);
            }
            failed.extend(gate);
            failed.extend(rep.violated);
        }
        Regime::Intermediate => {
            failed.push(format!("regime is intermediate (beta/alpha = {})", model.scales.regime_ratio));
        }
    }
    let notice = format!("no asymptotic window holds ({}); spectral result returned", failed.join("; "));
    spectral_gamma(pair, model, opt, Some(notice))
}

/// Phase correlator without the density-gradient term, for `d = 1, 2, 3`.
pub fn phase_correlator(dx: &[f64], s: &[f64], model: &Model) -> Result<f64> {
    let (r, c) = multidim_setup(dx, s, model)?;
    let lt = model.scales.lambda_t;
    Ok(match dx.len() {
        3 => -c / (4.0 * PI * r),
        2 => c / (2.0 * PI) * (r / lt).ln(),
        _ => 0.5 * c * r,
    })
}

/// First-order coherence `Gamma^(1)`: exponential of an inverse distance in
/// `d = 3`, power law in `d = 2`, exponential decay in `d = 1`.
pub fn coherence_multidim(dx: &[f64], s: &[f64], model: &Model) -> Result<f64> {
    let (r, c) = multidim_setup(dx, s, model)?;
    let lt = model.scales.lambda_t;
    Ok(match dx.len() {
        3 => (c / (4.0 * PI * r)).exp(),
        2 => (lt / r).powf(c / (2.0 * PI)),
        _ => (-0.5 * c * r).exp(),
    })
}

/// Returns `|dx|` and `Lambda / (beta (hbar v)^2 rho_TF(|S|))`.
fn multidim_setup(dx: &[f64], s: &[f64], model: &Model) -> Result<(f64, f64)> {
    if !(1..=3).contains(&dx.len()) || dx.len() != s.len() {
        return Err(domain("dim", format!("need matching vectors of length 1..3, got {} and {}", dx.len(), s.len())));
    }
    let r = dx.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r == 0.0 {
        return Err(Error::Divergent);
    }
    let sr = s.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok((r, 2.0 * inverse_xi(model, sr)?))
}

/// Critical exponents and correlation length at half-sum `S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentReport {
    pub theta_hom: f64,
    pub theta_s: f64,
    pub xi_s: f64,
    pub fit: Option<ExponentFit>,
}

pub fn exponent_report(model: &Model, s: f64) -> ExponentReport {
    ExponentReport {
        theta_hom: model.theta_hom(),
        theta_s: model.theta_s(s),
        xi_s: model.xi_s(s),
        fit: None,
    }
}

/// Least-squares power-law fit of `Gamma / sqrt(rho rho')` against separation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentFit {
    /// Estimate of `1/theta`, the negated log-log slope.
    pub inv_theta: f64,
    pub stderr: f64,
    pub samples: usize,
    pub min_sep: f64,
    pub max_sep: f64,
}

/// Fits `ln(Gamma) = a - (1/theta) ln(sep)` to `(separation, normalized Gamma)`
/// samples.
pub fn extract_exponent(samples: &[(f64, f64)]) -> Result<ExponentFit> {
    if samples.len() < 8 {
        return Err(Error::Data(format!("need at least 8 samples, got {}", samples.len())));
    }
    if let Some((sep, g)) = samples.iter().find(|(sep, g)| !(*sep > 0.0 && *g > 0.0)) {
        return Err(Error::Data(format!("non-positive sample: separation {sep}, gamma {g}")));
    }
    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|(s, _)| s.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|(_, g)| g.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Data("all separations equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum();
    let stderr = (rss / (n - 2.0) / sxx).sqrt();
    let seps = samples.iter().map(|(s, _)| *s);
    Ok(ExponentFit {
        inv_theta: -slope,
        stderr,
        samples: samples.len(),
        min_sep: seps.clone().fold(f64::INFINITY, f64::min),
        max_sep: seps.fold(0.0, f64::max),
    })
}

/// `n` log-spaced values from `a` to `b` inclusive.
pub fn log_spaced(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..n).map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::green_trapped::closed_form_zero_mode;
    use crate::model::PhysicalParams;
    use proptest::prelude::*;

    fn trap(ratio: f64) -> Model {
        Model::new(PhysicalParams::unit_trap(ratio, 1.0)).unwrap()
    }

    #[test]
    fn exact_matches_zero_mode_green() {
        let m = trap(2.0);
        for &(a, b) in &[(0.2, 0.1), (-0.4, 0.3), (0.7, 0.65)] {
            let z = Complex64::new(closed_form_zero_mode(a, b, &m).unwrap(), 0.0);
            let zr = Complex64::new(closed_form_zero_mode(b, a, &m).unwrap(), 0.0);
            let via = gamma_from_green(&PointPair::equal_time(a, b), z, zr, &m, 1e-12).unwrap();
            let exact = gamma_d1_exact(a, b, &m).unwrap();
            assert!((via.gamma / exact - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn coincident_points_give_density() {
        let m = trap(1.0);
        let g = gamma_d1_exact(0.3, 0.3, &m).unwrap();
        assert!((g - m.rho_tf(0.3)).abs() < 1e-15);
        let q = gamma_d1_quasihom(0.3, 0.3, &m, &WindowControl::default()).unwrap();
        assert!((q - m.rho_tf(0.3)).abs() < 1e-15);
    }

    #[test]
    fn quasihom_tracks_exact_in_window() {
        let m = trap(0.2);
        let w = WindowControl::default();
        for &(s, dx) in &[(0.5, 0.02), (0.3, 0.01), (-0.6, 0.05)] {
            let (a, b) = (s + 0.5 * dx, s - 0.5 * dx);
            let e = gamma_d1_exact(a, b, &m).unwrap();
            let q = gamma_d1_quasihom(a, b, &m, &w).unwrap();
            assert!((q / e - 1.0).abs() < 0.03, "s={s} dx={dx}: {q} vs {e}");
        }
        assert!(matches!(gamma_d1_quasihom(0.5, 0.1, &m, &w), Err(Error::Regime { .. })));
    }

    #[test]
    fn coincident_query_returns_density() {
        let m = trap(1.0);
        for method in [CorrelatorMethod::Series, CorrelatorMethod::Spectral, CorrelatorMethod::AsymptoticAuto] {
            let q = CorrelatorQuery::new(PointPair::new(0.4, 0.3, 0.4, 0.3), method);
            let v = correlator(&q, &m, &CorrelatorOptions::default()).unwrap();
            assert_eq!(v.gamma, m.rho_tf(0.4));
        }
    }

    #[test]
    fn theta_at_half_radius() {
        let m = trap(1.0);
        assert!((m.theta_s(0.5) - 4.712389).abs() < 1e-6);
    }

    #[test]
    fn power_law_forms_agree_bitwise() {
        let m = trap(0.05);
        let pair = PointPair::new(0.51, 0.001, 0.5, 0.0);
        let a = gamma_trapped_form(&pair, &m, TrappedForm::PowerLaw).unwrap();
        let pre = (m.rho_tf(pair.x1) * m.rho_tf(pair.x2)).sqrt();
        let b = power_law(pre, pair.dx().abs(), m.hbar_v() * pair.dtau(), m.theta_s(pair.s())).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn homog_high_t_reduces_to_power_law() {
        let m = trap(10.0);
        let seps = log_spaced(1e-4, 1e-2, 12);
        let prof = |form| -> Vec<(f64, f64)> {
            seps.iter()
                .map(|&d| (d, gamma_homog(&PointPair::equal_time(d, 0.0), &m, form).unwrap() / m.rho_center()))
                .collect()
        };
        let fs = extract_exponent(&prof(HomogForm::HighT)).unwrap();
        let fp = extract_exponent(&prof(HomogForm::PowerLaw)).unwrap();
        assert!((fs.inv_theta / fp.inv_theta - 1.0).abs() < 0.01);
        assert!((fp.inv_theta * m.theta_hom() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn synthetic_power_law_fit() {
        let s: Vec<(f64, f64)> = log_spaced(0.1, 10.0, 16).into_iter().map(|x| (x, 3.0 * x.powf(-0.25))).collect();
        let f = extract_exponent(&s).unwrap();
        assert!((f.inv_theta - 0.25).abs() < 1e-6);
        assert!(f.stderr < 1e-10);
    }

    #[test]
    fn fit_rejects_bad_data() {
        let few: Vec<(f64, f64)> = (1..5).map(|i| (i as f64, 1.0)).collect();
        assert!(matches!(extract_exponent(&few), Err(Error::Data(_))));
        let mut neg: Vec<(f64, f64)> = (1..12).map(|i| (i as f64, 1.0)).collect();
        neg[3].1 = -1.0;
        assert!(matches!(extract_exponent(&neg), Err(Error::Data(_))));
    }

    #[test]
    fn multidim_limits() {
        let m = trap(1.0);
        let s = [0.1, 0.0, 0.0];
        let big = [50.0, 0.0, 0.0];
        let c = 2.0 * inverse_xi(&m, 0.1).unwrap();
        let g3 = coherence_multidim(&big, &s, &m).unwrap();
        assert!((g3 - (1.0 + c / (4.0 * PI * 50.0))).abs() < 1e-4);
        let dx2 = [0.3, 0.4];
        let m2 = trap(2.0);
        let e1 = coherence_multidim(&dx2, &s[..2], &m).unwrap().ln() / (m.scales.lambda_t / 0.5).ln();
        let e2 = coherence_multidim(&dx2, &s[..2], &m2).unwrap().ln() / (m2.scales.lambda_t / 0.5).ln();
        assert!((e1 / e2 - 2.0).abs() < 1e-12);
        let p1 = phase_correlator(&[0.2], &[0.0], &m).unwrap();
        let p2 = phase_correlator(&[0.4], &[0.0], &m).unwrap();
        assert!((p2 / p1 - 2.0).abs() < 1e-14);
        assert!(matches!(coherence_multidim(&[0.0, 0.0], &[0.0, 0.0], &m), Err(Error::Divergent)));
    }

    #[test]
    fn auto_falls_back_with_notice() {
        let m = trap(1.0);
        let opt = CorrelatorOptions { l_max: 8, tol: 1e-8, ..Default::default() };
        let v = asymptotic_auto(&PointPair::equal_time(0.2, -0.1), &m, &opt).unwrap();
        assert_eq!(v.method, "spectral");
        assert!(v.notice.unwrap().contains("intermediate"));
    }

    #[test]
    fn auto_picks_power_law_at_high_t() {
        let m = trap(0.05);
        let v = asymptotic_auto(&PointPair::new(0.02, 0.0, 0.0204, 0.0), &m, &CorrelatorOptions::default()).unwrap();
        assert_eq!(v.method, "asymptotic-auto:power-law");
        assert!(v.window_slack.unwrap() >= 0.0);
    }

    proptest! {
        #[test]
        fn exact_symmetric_and_positive(a in -0.9f64..0.9, b in -0.9f64..0.9) {
            let m = trap(1.0);
            let g = gamma_d1_exact(a, b, &m).unwrap();
            let h = gamma_d1_exact(b, a, &m).unwrap();
            prop_assert!(g > 0.0);
            prop_assert!((g - h).abs() <= 1e-14 * g.max(1e-300));
            prop_assert!(g <= (m.rho_tf(a) * m.rho_tf(b)).sqrt() * (1.0 + 1e-14));
        }

        #[test]
        fn trapped_forms_symmetric(a in -0.5f64..0.5, d in 1e-4f64..0.05, t in 0.0f64..0.01) {
            let m = trap(0.05);
            let p = PointPair::new(a + d, t, a, 0.0);
            for f in [TrappedForm::SinhPower, TrappedForm::Exponential, TrappedForm::PowerLaw] {
                let g = gamma_trapped_form(&p, &m, f).unwrap();
                let h = gamma_trapped_form(&p.swapped(), &m, f).unwrap();
                prop_assert!(g > 0.0);
                prop_assert!((g - h).abs() <= 1e-13 * g);
            }
        }
    }
}
