//! Acceptance checks shared by the test suite and the `validate` command.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

use crate::correlator::{
    correlator, extract_exponent, gamma_homog, gamma_trapped_form, log_spaced, CorrelatorMethod, CorrelatorOptions,
    CorrelatorQuery, HomogForm, TrappedForm,
};
use crate::error::Result;
use crate::green_homogeneous::{green_difference, homog_sample, GreenMethod, HomogSeriesControl};
use crate::green_trapped::{
    asympt_green_high_t, asympt_green_low_t, closed_form_zero_mode, low_t_legendre_series, matsubara_assemble,
    spectral_density, LowTControl, WindowControl,
};
use crate::legendre::{legendre_pair, wronskian_check, Degree};
use crate::model::{Model, PhysicalParams, PointPair, RegimeThresholds};
use crate::oracle::{brute_frequency_sum, fdm_eigensolve, fdm_spectral_solve, frequency_sum_closed, FdmGrid};

/// Outcome of one acceptance check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub id: u32,
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Side conditions of the check other than `measured < tolerance`.
    pub conditions_ok: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(id: u32, name: &str, measured: f64, tolerance: f64, detail: String) -> Self {
        Self {
            id,
            name: name.to_string(),
            measured,
            tolerance,
            passed: measured < tolerance,
            conditions_ok: true,
            detail,
        }
    }

    /// Kebab-case key, e.g. `oracle-equivalence`.
    pub fn key(&self) -> String {
        self.name.to_lowercase().replace(' ', "-")
    }

    /// Re-judges the check against a different tolerance.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.passed = self.conditions_ok && self.measured < tolerance;
        self
    }

    /// Marks the check failed regardless of the measured value.
    fn fail_if(mut self, cond: bool, why: &str) -> Self {
        if cond {
            self.passed = false;
            self.conditions_ok = false;
            self.detail = format!("{}; {why}", self.detail);
        }
        self
    }

    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {:<28} measured {:.4e} < {:.1e}  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.measured,
            self.tolerance,
            self.detail
        )
    }
}

pub const SEED: u64 = 0x5eed_2024;

fn trap(ratio: f64) -> Model {
    Model::new(PhysicalParams::unit_trap(ratio, 1.0)).expect("unit trap is valid")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Zero-frequency spectral density over `beta` against the closed form.
pub fn zero_mode_identity(pairs: usize, seed: u64) -> Result<CheckResult> {
    let m = trap(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let (x, y): (f64, f64) = (rng.gen_range(-0.95..0.95), rng.gen_range(-0.95..0.95));
        let d = spectral_density(0.0, x, y, &m, 1e-13)?.re_part / m.params.beta;
        let c = closed_form_zero_mode(x, y, &m)?;
        worst = worst.max(rel(d, c));
    }
    Ok(CheckResult::new(1, "zero-mode identity", worst, 1e-10, format!("{pairs} random pairs")))
}

/// Discrete Legendre spectrum against `n(n+1)` after Richardson extrapolation.
pub fn eigenvalue_law() -> Result<CheckResult> {
    let m = trap(1.0);
    let grid = FdmGrid::new(2001, 0.0, &m)?;
    let est = fdm_eigensolve(&grid, 21)?;
    let r2 = m.scales.r_c.powi(2);
    let worst = (1..=20)
        .map(|n| rel(est.extrapolated[n] * r2, (n * (n + 1)) as f64))
        .fold(0.0, f64::max);
    let detail = format!("n = 1..20, grids {} and {}, lowest {:.1e}", grid.n, grid.refined().n, est.extrapolated[0]);
    Ok(CheckResult::new(4, "eigenvalue law", worst, 1e-4, detail))
}

/// Direct frequency sum against `pi^2 (theta^2 - theta + 1/6)`.
pub fn frequency_sum_identity() -> CheckResult {
    let worst = [0.0, 0.1, 0.5]
        .iter()
        .map(|&t| (brute_frequency_sum(t, 1_000_000) - frequency_sum_closed(t)).abs())
        .fold(0.0, f64::max);
    CheckResult::new(5, "frequency-sum identity", worst, 1e-6, "l_max = 1e6, theta in {0, 0.1, 0.5}".into())
}

/// Wronskian residuals over a `u` grid and reality of conical functions.
pub fn wronskian_and_conical() -> Result<CheckResult> {
    let degrees = [
        Degree::integer(0),
        Degree::integer(1),
        Degree::integer(3),
        Degree::complex(Complex64::new(-0.5, 0.8)),
        Degree::complex(Complex64::new(-0.5, 5.0)),
    ];
    let us: Vec<f64> = (0..=38).map(|i| -0.95 + 0.05 * i as f64).filter(|u| u.abs() < 0.95 + 1e-12).collect();
    let mut wr = 0.0f64;
    let mut imag = 0.0f64;
    for d in degrees {
        for &u in &us {
            let u = u.clamp(-0.949_999, 0.949_999);
            wr = wr.max(wronskian_check(d, u, None, 1e-13)?.normalized);
            if d.is_conical() {
                imag = imag.max(legendre_pair(d, u, 1e-13)?.p.im.abs());
            }
        }
    }
    let detail = format!("max |Im P| on the conical line {imag:.1e} (limit 1e-8)");
    Ok(CheckResult::new(11, "wronskian and conical", wr, 1e-6, detail).fail_if(!(imag < 1e-8), "conical imaginary part too large"))
}

/// Finite-difference residual of the spectral equation away from the source,
/// and the derivative jump across it.
pub fn ode_residual_and_jump() -> Result<CheckResult> {
    let m = trap(1.0);
    let x2 = 0.2;
    let tol = 1e-14;
    let hv = m.hbar_v();
    let r2 = m.scales.r_c.powi(2);
    let c = m.params.g / (hv * hv);
    let mut worst = 0.0f64;
    let mut jump_err = Vec::new();
    for omega in [0.0, 2.0 * PI / m.params.beta] {
        let g = |x: f64| -> Result<f64> { Ok(spectral_density(omega, x, x2, &m, tol)?.re_part) };
        let k2 = (omega / hv).powi(2);
        let xs: Vec<f64> = (0..=32).map(|i| -0.8 + 0.05 * i as f64).filter(|x| (x - x2).abs() > 0.05).collect();
        let mut norm = 0.0f64;
        let mut res = 0.0f64;
        let h = 3e-3;
        for &x in &xs {
            let f: Vec<f64> = [-2.0, -1.0, 0.0, 1.0, 2.0].iter().map(|k| g(x + k * h)).collect::<Result<_>>()?;
            let d1 = (f[0] - 8.0 * f[1] + 8.0 * f[3] - f[4]) / (12.0 * h);
            let d2 = (-f[0] + 16.0 * f[1] - 30.0 * f[2] + 16.0 * f[3] - f[4]) / (12.0 * h * h);
            let a = 1.0 - x * x / r2;
            res = res.max((a * d2 - 2.0 * x / r2 * d1 - k2 * f[2]).abs());
            norm = norm.max(f[2].abs());
        }
        worst = worst.max(res / norm);
        let a = 1.0 - x2 * x2 / r2;
        let g0 = g(x2)?;
        let jump = |h: f64| -> Result<f64> {
            let (gp, gm) = (g(x2 + h)?, g(x2 - h)?);
            Ok(rel((gp - g0) / h - (g0 - gm) / h, c / a))
        };
        jump_err.push((jump(1e-4)?, jump(5e-5)?));
    }
    let small = jump_err.iter().map(|e| e.1).fold(0.0, f64::max);
    let first_order = jump_err.iter().all(|(a, b)| a / b > 1.5);
    let detail = format!(
        "jump error {small:.1e} at h = 5e-5, halving ratios {}",
        jump_err.iter().map(|(a, b)| format!("{:.2}", a / b)).collect::<Vec<_>>().join(", ")
    );
    Ok(CheckResult::new(2, "ODE residual and jump", worst, 1e-6, detail)
        .fail_if(!(small < 1e-3) || !first_order, "jump not converging at least at first order"))
}

/// Finite-difference oracle against the Legendre spectral density, in
/// difference mode on interior nodes.
pub fn oracle_equivalence(n: usize) -> Result<CheckResult> {
    let m = trap(1.0);
    let grid = FdmGrid::new(n, 1e-6, &m)?;
    let w1 = 2.0 * PI / m.params.beta;
    let mut worst = 0.0f64;
    for omega in [0.0, w1, -w1, 5.0 * w1, -5.0 * w1] {
        let sol = fdm_spectral_solve(omega, 0.2, &m, &grid)?;
        let xs = sol.nodes[sol.source_node];
        let idx: Vec<usize> = (0..=36).map(|i| grid.snap(-0.9 + 0.05 * i as f64).0).collect();
        let r = idx[8];
        let sample = |i: usize, method: GreenMethod, value: f64| crate::green_homogeneous::GreenSample {
            pair: PointPair::equal_time(sol.nodes[i], xs),
            method,
            value,
        };
        let sp = |i: usize| -> Result<f64> { Ok(spectral_density(omega, sol.nodes[i], xs, &m, 1e-13)?.re_part) };
        let (f_ref, s_ref) = (sample(r, GreenMethod::Oracle, sol.values[r]), sample(r, GreenMethod::TrappedSpectral, sp(r)?));
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for &i in &idx {
            let df = green_difference(&sample(i, GreenMethod::Oracle, sol.values[i]), &f_ref)?;
            let ds = green_difference(&sample(i, GreenMethod::TrappedSpectral, sp(i)?), &s_ref)?;
            num = num.max((df - ds).abs());
            den = den.max(ds.abs());
        }
        worst = worst.max(num / den);
    }
    Ok(CheckResult::new(3, "oracle equivalence", worst, 1e-3, format!("N = {n}, omega in {{0, +-2pi/beta, +-10pi/beta}}")))
}

/// Homogeneous double series against its high-temperature closed form.
pub fn homogeneous_match() -> Result<CheckResult> {
    // hbar = v = g = beta = 1 with R_c = 20, so beta hbar v / R_c = 0.05.
    let m = Model::new(PhysicalParams { omega: 2f64.sqrt() / 20.0, ..Default::default() })?;
    let ctl = HomogSeriesControl::default();
    let base = PointPair::new(1.0, 0.0, 0.0, 0.0);
    let s0 = homog_sample(&base, &m, GreenMethod::HomogSeries, &ctl)?;
    let c0 = homog_sample(&base, &m, GreenMethod::HomogHighT, &ctl)?;
    let mut worst = 0.0f64;
    for (dx, dtau) in [(2.0, 0.0), (3.0, 0.2), (5.0, 0.5), (8.0, 0.1), (1.5, 0.3), (4.0, 0.0)] {
        let pair = PointPair::new(dx, dtau, 0.0, 0.0);
        let ds = green_difference(&homog_sample(&pair, &m, GreenMethod::HomogSeries, &ctl)?, &s0)?;
        let dc = green_difference(&homog_sample(&pair, &m, GreenMethod::HomogHighT, &ctl)?, &c0)?;
        worst = worst.max(rel(ds, dc));
    }
    let detail = format!("R_c = 20, l_max = {}, n_max = {}", ctl.l_max, ctl.n_max);
    Ok(CheckResult::new(6, "homogeneous regime match", worst, 0.02, detail))
}

/// Matsubara sum against the high-temperature log form at `beta / alpha = 0.05`.
pub fn trapped_high_t_match() -> Result<CheckResult> {
    let m = trap(0.05);
    let th = RegimeThresholds::default();
    let w = WindowControl::default();
    let l_max = 40;
    let base = PointPair::new(0.01, 0.0, -0.01, 0.0);
    let a0 = matsubara_assemble(&base, &m, l_max, 1e-10)?.re;
    let (c0, _) = asympt_green_high_t(&base, &m, th, &w)?;
    let mut worst = 0.0f64;
    for (x1, t1, x2) in [(0.03, 0.0, -0.03), (0.05, 0.0, -0.03), (0.05, 0.01, 0.0), (0.08, 0.02, 0.02), (0.04, 0.025, 0.0)] {
        let p = PointPair::new(x1, t1, x2, 0.0);
        let da = matsubara_assemble(&p, &m, l_max, 1e-10)?.re - a0;
        let dc = asympt_green_high_t(&p, &m, th, &w)?.0 - c0;
        worst = worst.max(rel(da, dc));
    }
    Ok(CheckResult::new(7, "trapped high-T match", worst, 0.05, format!("beta/alpha = 0.05, l_max = {l_max}")))
}

/// Low-temperature Legendre series against the leading-log form at
/// `beta / alpha = 100`, plus robustness under doubling `n0`.
pub fn trapped_low_t_match() -> Result<CheckResult> {
    let m = trap(100.0);
    let th = RegimeThresholds::default();
    // The default min_dtau (1e-3) forces u_* >= 0.1 here, which the gate
    // n0 u_* < 1 rejects for n0 = 20.
    let ctl = LowTControl { min_dtau: 1e-4, ..Default::default() };
    let base = PointPair::new(0.005, 0.01, -0.005, 0.0);
    let sb = low_t_legendre_series(&base, &m, &ctl)?;
    let cb = asympt_green_low_t(&base, &m, th, &ctl)?;
    let mut worst = 0.0f64;
    let mut drift = sb.n0_drift;
    for (x1, t1, x2) in [(0.02, 0.01, 0.0), (0.03, 0.01, -0.01), (0.01, 0.03, 0.0), (0.04, 0.015, 0.0)] {
        let p = PointPair::new(x1, t1, x2, 0.0);
        let s = low_t_legendre_series(&p, &m, &ctl)?;
        let c = asympt_green_low_t(&p, &m, th, &ctl)?;
        worst = worst.max(rel(s.value - sb.value, c - cb));
        drift = drift.max(s.n0_drift);
    }
    let detail = format!("beta/alpha = 100, n0 = {}, min_dtau = {}, n0 drift {drift:.1e} (limit 2e-2)", ctl.n0, ctl.min_dtau);
    Ok(CheckResult::new(8, "trapped low-T match", worst, 0.10, detail).fail_if(!(drift < 0.02), "n0 drift too large"))
}

/// Half-sum used for the trapped-series exponent fit.
pub const FIT_HALF_SUM: f64 = 0.1;

/// Power-law fits on generated correlators, and bit-identity of the shared
/// power-law form across temperature regimes.
pub fn exponent_extraction(s_fit: f64) -> Result<CheckResult> {
    // Homogeneous sinh form deep inside |dx| << lambda_T.
    let m = trap(0.05);
    let seps = log_spaced(1e-5, 1e-3, 16);
    let prof: Vec<(f64, f64)> = seps
        .iter()
        .map(|&d| Ok((d, gamma_homog(&PointPair::equal_time(d, 0.0), &m, HomogForm::HighT)? / m.rho_center())))
        .collect::<Result<_>>()?;
    let e_hom = rel(extract_exponent(&prof)?.inv_theta, 1.0 / m.theta_hom());

    // Low-temperature series along imaginary time at fixed position.
    let m = trap(100.0);
    let opt = CorrelatorOptions { low_t: LowTControl { min_dtau: 1e-4, ..Default::default() }, ..Default::default() };
    let rho = m.rho_tf(s_fit);
    let prof: Vec<(f64, f64)> = log_spaced(0.012, 0.045, 12)
        .iter()
        .map(|&t| {
            let q = CorrelatorQuery::new(PointPair::new(s_fit, t, s_fit, 0.0), CorrelatorMethod::Series);
            Ok((m.hbar_v() * t, correlator(&q, &m, &opt)?.gamma / rho))
        })
        .collect::<Result<_>>()?;
    let e_trap = rel(extract_exponent(&prof)?.inv_theta, 1.0 / m.theta_s(s_fit));

    // Same pair and theta(S) through both regimes of the dispatcher.
    let pair = PointPair::new(0.02, 1e-3, 0.0204, 0.0);
    let hi = correlator(&CorrelatorQuery::new(pair, CorrelatorMethod::AsymptoticAuto), &trap(0.05), &CorrelatorOptions::default())?;
    let lo = correlator(&CorrelatorQuery::new(pair, CorrelatorMethod::AsymptoticAuto), &trap(100.0), &CorrelatorOptions::default())?;
    let same = hi.method == lo.method && hi.method.ends_with("power-law") && hi.gamma.to_bits() == lo.gamma.to_bits();

    let worst = e_hom.max(e_trap);
    let detail = format!("homogeneous {e_hom:.1e}, trapped series at S = {s_fit} {e_trap:.1e}, power-law dispatch identical: {same}");
    Ok(CheckResult::new(9, "exponent extraction", worst, 0.05, detail).fail_if(!same, "dispatch forms differ"))
}

/// Symmetry, positivity and reality over randomized parameter draws, plus
/// parity and support of the Thomas-Fermi profile.
pub fn symmetry_positivity(draws: usize, seed: u64) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut asym = 0.0f64;
    let mut residual = 0.0f64;
    let mut bad = Vec::new();
    for k in 0..draws {
        let mut p = PhysicalParams {
            hbar: rng.gen_range(0.5..2.0),
            m: rng.gen_range(0.5..2.0),
            g: rng.gen_range(0.2..2.0),
            omega: rng.gen_range(0.5..2.0),
            lambda: rng.gen_range(0.5..2.0),
            beta: 1.0,
        };
        let ratio = [0.05, 1.0, 100.0][k % 3];
        let probe = Model::new(p)?;
        p.beta = ratio * probe.scales.alpha;
        let m = Model::new(p)?;
        let r = m.scales.r_c;
        let (x1, x2) = (rng.gen_range(-0.9..0.9) * r, rng.gen_range(-0.9..0.9) * r);
        let t1 = rng.gen_range(0.0..p.beta);
        let mut check = |name: &str, a: f64, b: f64| {
            if !(a > 0.0 && b > 0.0) {
                bad.push(format!("{name} not positive"));
            }
            asym = asym.max((a - b).abs() / a.abs().max(b.abs()));
        };
        let pair = PointPair::new(x1, t1, x2, 0.0);
        check("exact", crate::correlator::gamma_d1_exact(x1, x2, &m)?, crate::correlator::gamma_d1_exact(x2, x1, &m)?);
        let near = PointPair::new(x1, t1 * 1e-3, x1 + 1e-3 * r, 0.0);
        for f in [TrappedForm::SinhPower, TrappedForm::Exponential, TrappedForm::PowerLaw] {
            check(f.as_str(), gamma_trapped_form(&near, &m, f)?, gamma_trapped_form(&near.swapped(), &m, f)?);
        }
        if k < 24 {
            let opt = CorrelatorOptions { l_max: 8, tol: 1e-9, ..Default::default() };
            let a = correlator(&CorrelatorQuery::new(pair, CorrelatorMethod::Spectral), &m, &opt)?;
            let b = correlator(&CorrelatorQuery::new(pair.swapped(), CorrelatorMethod::Spectral), &m, &opt)?;
            residual = residual.max(a.imag_residual).max(b.imag_residual);
            check("spectral", a.gamma, b.gamma);
        }
        if m.rho_tf(x1) != m.rho_tf(-x1) || !(m.rho_tf(x1) > 0.0) || m.rho_tf(1.0001 * r) != 0.0 || m.rho_tf(-2.0 * r) != 0.0 {
            bad.push("Thomas-Fermi parity or support".into());
        }
    }
    let detail = format!("{draws} draws, reality residual {residual:.1e} (limit 1e-9)");
    bad.dedup();
    let why = bad.join(", ");
    Ok(CheckResult::new(10, "symmetry and positivity", asym, 1e-12, detail)
        .fail_if(!bad.is_empty(), &why)
        .fail_if(!(residual < 1e-9), "reality residual too large"))
}

/// Keys of all checks in order.
pub const CHECK_KEYS: [&str; 11] = [
    "zero-mode-identity",
    "ode-residual-and-jump",
    "oracle-equivalence",
    "eigenvalue-law",
    "frequency-sum-identity",
    "homogeneous-regime-match",
    "trapped-high-t-match",
    "trapped-low-t-match",
    "exponent-extraction",
    "symmetry-and-positivity",
    "wronskian-and-conical",
];

/// Runs every check in order. `oracle_n` sets the finite-difference grid size.
pub fn run_all(oracle_n: usize) -> Vec<(u32, Result<CheckResult>)> {
    vec![
        (1, zero_mode_identity(200, SEED)),
        (2, ode_residual_and_jump()),
        (3, oracle_equivalence(oracle_n)),
        (4, eigenvalue_law()),
        (5, Ok(frequency_sum_identity())),
        (6, homogeneous_match()),
        (7, trapped_high_t_match()),
        (8, trapped_low_t_match()),
        (9, exponent_extraction(FIT_HALF_SUM)),
        (10, symmetry_positivity(60, SEED)),
        (11, wronskian_and_conical()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_match_names() {
        let checks = [frequency_sum_identity(), wronskian_and_conical().unwrap(), eigenvalue_law().unwrap()];
        for c in checks {
            assert_eq!(CHECK_KEYS[c.id as usize - 1], c.key());
        }
    }

    #[test]
    fn tightened_tolerance_fails() {
        let c = frequency_sum_identity();
        assert!(c.passed);
        let t = c.with_tolerance(1e-15);
        assert!(!t.passed);
        assert!(t.line().starts_with("[FAIL]"));
    }

    #[test]
    fn side_condition_survives_retolerance() {
        let c = frequency_sum_identity().fail_if(true, "forced");
        assert!(!c.with_tolerance(1.0).passed);
    }
}
