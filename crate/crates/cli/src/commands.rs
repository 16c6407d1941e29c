use rayon::prelude::*;

use trapcorr::correlator::{correlator, extract_exponent, CorrelatorMethod, CorrelatorQuery};
use trapcorr::green_homogeneous::{homog_asymptotic_high_t, homog_asymptotic_low_t, homog_series};
use trapcorr::green_trapped::{
    asympt_green_high_t, asympt_green_low_t, low_t_legendre_series, matsubara_assemble, quasi_hom_window,
    spectral_density,
};
use trapcorr::model::{classify_regime, energy_level, level_spacing_expansion};
use trapcorr::oracle::{fdm_spectral_solve, FdmGrid};
use trapcorr::validation::run_all;
use trapcorr::{Error, Model, PointPair, Regime, Result};

use crate::config::RunConfig;
use crate::output::{Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GreenMode {
    HomogSeries,
    HomogAsympt,
    TrappedSpectral,
    TrappedSeries,
    TrappedAsympt,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CorrMode {
    Series,
    Spectral,
    AsymptoticAuto,
    ClosedForm,
}

impl From<CorrMode> for CorrelatorMethod {
    fn from(m: CorrMode) -> Self {
        match m {
            CorrMode::Series => CorrelatorMethod::Series,
            CorrMode::Spectral => CorrelatorMethod::Spectral,
            CorrMode::AsymptoticAuto => CorrelatorMethod::AsymptoticAuto,
            CorrMode::ClosedForm => CorrelatorMethod::ClosedForm,
        }
    }
}

/// A finished table plus whether any row hit a numerical-accuracy failure.
pub struct Outcome {
    pub table: Table,
    pub accuracy_failure: bool,
    pub validation_failure: bool,
}

impl Outcome {
    fn ok(table: Table) -> Self {
        Self { table, accuracy_failure: false, validation_failure: false }
    }
}

fn status_of(e: &Error) -> String {
    match e {
        Error::Divergent => "divergent".into(),
        Error::Regime { violated } => format!("regime: {}", violated.join("; ")),
        Error::Domain { field, reason } => format!("domain: {field}: {reason}"),
        Error::Accuracy { .. } => format!("accuracy: {e}"),
        other => format!("error: {other}"),
    }
}

pub fn density(cfg: &RunConfig) -> Result<Outcome> {
    let m = cfg.model()?;
    let mut t = Table::new("density", &["x", "rho_tf"]);
    for x in cfg.grid.x.points("grid.x")? {
        t.rows.push(vec![x.into(), m.rho_tf(x).into()]);
    }
    Ok(Outcome::ok(t))
}

pub fn spectrum(cfg: &RunConfig, n_max: Option<u64>) -> Result<Outcome> {
    let m = cfg.model()?;
    let n_max = n_max.unwrap_or(cfg.grid.n_max);
    let mut t = Table::new("spectrum", &["n", "E_n", "dE", "dE_expansion"]);
    if n_max == 0 {
        return Ok(Outcome::ok(t));
    }
    for n in 0..=n_max {
        let e = energy_level(n as i64, &m.params)?;
        let de = energy_level(n as i64 + 1, &m.params)? - e;
        let exp = level_spacing_expansion(n, &m.scales).ok().map(|s| s.expansion);
        t.rows.push(vec![Cell::Int(n as i64), e.into(), de.into(), Cell::opt(exp)]);
    }
    Ok(Outcome::ok(t))
}

struct GreenRow {
    re: f64,
    im: f64,
    method: &'static str,
    trunc_err: Option<f64>,
    window_slack: Option<f64>,
    const_free: bool,
}

const GREEN_COLUMNS: [&str; 13] = [
    "x1", "tau1", "x2", "tau2", "omega", "G_re", "G_im", "method", "trunc_err", "regime", "window_slack", "const_free",
    "status",
];

pub fn green(cfg: &RunConfig, mode: GreenMode) -> Result<Outcome> {
    let m = cfg.model()?;
    let regime = classify_regime(&m.scales, cfg.thresholds())?;
    let pairs = cfg.pairs()?;
    let omegas: Vec<Option<f64>> = match mode {
        GreenMode::TrappedSpectral if !cfg.grid.omega.is_empty() => cfg.grid.omega.iter().map(|&w| Some(w)).collect(),
        GreenMode::Oracle if cfg.grid.omega.is_empty() => vec![Some(0.0)],
        GreenMode::Oracle => cfg.grid.omega.iter().map(|&w| Some(w)).collect(),
        _ => vec![None],
    };
    let jobs: Vec<(Option<f64>, PointPair)> =
        omegas.iter().flat_map(|&w| pairs.iter().map(move |&p| (w, p))).collect();
    let results: Vec<Result<GreenRow>> =
        jobs.par_iter().map(|&(w, p)| green_row(cfg, &m, regime, mode, w, &p)).collect();
    let mut t = Table::new(&format!("green --mode {}", green_mode_name(mode)), &GREEN_COLUMNS);
    let mut accuracy = false;
    for ((w, p), r) in jobs.iter().zip(results) {
        let head = vec![p.x1.into(), p.tau1.into(), p.x2.into(), p.tau2.into(), Cell::opt(*w)];
        let row = match r {
            Ok(g) => {
                let mut row = head;
                row.extend([
                    g.re.into(),
                    g.im.into(),
                    g.method.into(),
                    Cell::opt(g.trunc_err),
                    regime.as_str().into(),
                    Cell::opt(g.window_slack),
                    Cell::Bool(g.const_free),
                    "ok".into(),
                ]);
                row
            }
            Err(e) => {
                accuracy |= matches!(e, Error::Accuracy { .. });
                let mut row = head;
                row.extend([
                    Cell::Empty,
                    Cell::Empty,
                    green_mode_name(mode).into(),
                    Cell::Empty,
                    regime.as_str().into(),
                    Cell::Empty,
                    Cell::Bool(constant_free(mode, *w)),
                    status_of(&e).into(),
                ]);
                row
            }
        };
        t.rows.push(row);
    }
    Ok(Outcome { table: t, accuracy_failure: accuracy, validation_failure: false })
}

fn green_mode_name(mode: GreenMode) -> &'static str {
    match mode {
        GreenMode::HomogSeries => "homog-series",
        GreenMode::HomogAsympt => "homog-asympt",
        GreenMode::TrappedSpectral => "trapped-spectral",
        GreenMode::TrappedSeries => "trapped-series",
        GreenMode::TrappedAsympt => "trapped-asympt",
        GreenMode::Oracle => "oracle",
    }
}

fn constant_free(mode: GreenMode, omega: Option<f64>) -> bool {
    match mode {
        GreenMode::HomogAsympt | GreenMode::TrappedAsympt => true,
        GreenMode::Oracle => omega == Some(0.0),
        _ => false,
    }
}

fn green_row(cfg: &RunConfig, m: &Model, regime: Regime, mode: GreenMode, w: Option<f64>, p: &PointPair) -> Result<GreenRow> {
    let tol = cfg.truncation.tol;
    let row = |re: f64, im: f64, method: &'static str, trunc_err: Option<f64>, window_slack: Option<f64>| GreenRow {
        re,
        im,
        method,
        trunc_err,
        window_slack,
        const_free: constant_free(mode, w),
    };
    match (mode, w) {
        (GreenMode::HomogSeries, _) => {
            let v = homog_series(p, m, &cfg.homog())?;
            if v.divergent {
                return Err(Error::Divergent);
            }
            Ok(row(v.re, v.im, "homog-series", Some(v.trunc_err), None))
        }
        (GreenMode::HomogAsympt, _) => match regime {
            Regime::HighT => Ok(row(homog_asymptotic_high_t(p, m)?, 0.0, "homog-high-t", None, None)),
            Regime::LowT => Ok(row(homog_asymptotic_low_t(p, m)?, 0.0, "homog-low-t", None, None)),
            Regime::Intermediate => Err(intermediate(m)),
        },
        (GreenMode::TrappedSpectral, Some(w)) => {
            let d = spectral_density(w, p.x1, p.x2, m, tol)?;
            Ok(row(d.re_part, d.im_part, "spectral-density", Some(d.rel_error * d.re_part.abs()), None))
        }
        (GreenMode::TrappedSpectral, None) => {
            if p.x1 == p.x2 && (p.dtau() / m.params.beta).fract() == 0.0 {
                return Err(Error::Divergent);
            }
            let a = matsubara_assemble(p, m, cfg.truncation.l_max, tol)?;
            Ok(row(a.re, a.im_residual, "trapped-spectral", Some(a.trunc_err), None))
        }
        (GreenMode::TrappedSeries, _) => {
            let v = low_t_legendre_series(p, m, &cfg.low_t())?;
            let slack = 1.0 - cfg.truncation.n0 as f64 * v.u_star;
            Ok(row(v.value, 0.0, "trapped-series", Some(v.n0_drift * v.value.abs()), Some(slack)))
        }
        (GreenMode::TrappedAsympt, _) => match regime {
            Regime::HighT => {
                let (g, rep) = asympt_green_high_t(p, m, cfg.thresholds(), &cfg.window())?;
                Ok(row(g, 0.0, "trapped-high-t", None, Some(rep.slack)))
            }
            Regime::LowT => {
                let g = asympt_green_low_t(p, m, cfg.thresholds(), &cfg.low_t())?;
                let slack = quasi_hom_window(p, m, &cfg.window()).slack;
                Ok(row(g, 0.0, "trapped-low-t", None, Some(slack)))
            }
            Regime::Intermediate => Err(intermediate(m)),
        },
        (GreenMode::Oracle, w) => {
            let w = w.unwrap_or(0.0);
            let grid = FdmGrid::new(cfg.truncation.fdm_n, cfg.truncation.fdm_clamp, m)?;
            let sol = fdm_spectral_solve(w, p.x2, m, &grid)?;
            let v = interpolate(&sol.nodes, &sol.values, p.x1)?;
            Ok(row(v, 0.0, "oracle-fdm", Some(sol.error_estimate), None))
        }
    }
}

fn intermediate(m: &Model) -> Error {
    Error::Regime { violated: vec![format!("regime is intermediate (beta/alpha = {})", m.scales.regime_ratio)] }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> Result<f64> {
    let n = xs.len();
    if !(x >= xs[0] && x <= xs[n - 1]) {
        return Err(Error::Domain { field: "x1", reason: format!("{x} outside the finite-difference grid") });
    }
    let h = xs[1] - xs[0];
    let i = (((x - xs[0]) / h).floor() as usize).min(n - 2);
    let f = (x - xs[i]) / h;
    Ok(ys[i] * (1.0 - f) + ys[i + 1] * f)
}

const CORR_COLUMNS: [&str; 12] =
    ["x1", "tau1", "x2", "tau2", "S", "gamma", "theta_S", "xi_S", "method", "window_slack", "status", "notice"];

pub fn correlators(cfg: &RunConfig, mode: CorrMode) -> Result<Outcome> {
    let m = cfg.model()?;
    let opt = cfg.correlator_options();
    let pairs = cfg.pairs()?;
    let method: CorrelatorMethod = mode.into();
    let results: Vec<_> = pairs.par_iter().map(|p| correlator(&CorrelatorQuery::new(*p, method), &m, &opt)).collect();
    let mut t = Table::new(&format!("correlator --mode {}", method.as_str()), &CORR_COLUMNS);
    let mut accuracy = false;
    for (p, r) in pairs.iter().zip(results) {
        let s = p.s();
        let mut row = vec![p.x1.into(), p.tau1.into(), p.x2.into(), p.tau2.into(), s.into()];
        match r {
            Ok(v) => row.extend([
                v.gamma.into(),
                m.theta_s(s).into(),
                m.xi_s(s).into(),
                v.method.into(),
                Cell::opt(v.window_slack),
                "ok".into(),
                v.notice.map_or(Cell::Empty, Cell::Text),
            ]),
            Err(e) => {
                accuracy |= matches!(e, Error::Accuracy { .. });
                row.extend([
                    Cell::Empty,
                    m.theta_s(s).into(),
                    m.xi_s(s).into(),
                    method.as_str().into(),
                    Cell::Empty,
                    status_of(&e).into(),
                    Cell::Empty,
                ]);
            }
        }
        t.rows.push(row);
    }
    Ok(Outcome { table: t, accuracy_failure: accuracy, validation_failure: false })
}

pub fn exponent(cfg: &RunConfig, mode: CorrMode) -> Result<Outcome> {
    let m = cfg.model()?;
    let opt = cfg.correlator_options();
    let pairs = cfg.pairs()?;
    let method: CorrelatorMethod = mode.into();
    let hv = m.hbar_v();
    let samples: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|p| {
            let v = correlator(&CorrelatorQuery::new(*p, method), &m, &opt)?;
            let sep = p.dx().hypot(hv * p.dtau());
            Ok((sep, v.gamma / (m.rho_tf(p.x1) * m.rho_tf(p.x2)).sqrt()))
        })
        .collect::<Result<_>>()?;
    let fit = extract_exponent(&samples)?;
    let s = pairs.first().map_or(0.0, |p| p.s());
    let inv = 1.0 / m.theta_s(s);
    let mut t = Table::new(
        &format!("exponent --mode {}", method.as_str()),
        &["S", "samples", "min_sep", "max_sep", "inv_theta_fit", "stderr", "inv_theta_S", "rel_diff", "theta_hom", "xi_S"],
    );
    t.rows.push(vec![
        s.into(),
        Cell::Int(fit.samples as i64),
        fit.min_sep.into(),
        fit.max_sep.into(),
        fit.inv_theta.into(),
        fit.stderr.into(),
        inv.into(),
        ((fit.inv_theta - inv) / inv).into(),
        m.theta_hom().into(),
        m.xi_s(s).into(),
    ]);
    Ok(Outcome::ok(t))
}

pub fn validate(cfg: &RunConfig) -> Result<Outcome> {
    let mut t = Table::new("validate", &["id", "check", "measured", "tolerance", "passed", "detail"]);
    let mut failed = false;
    for (id, r) in run_all(cfg.validate.oracle_n) {
        let key = trapcorr::validation::CHECK_KEYS[id as usize - 1];
        match r {
            Ok(mut c) => {
                if let Some(&tol) = cfg.validate.tolerance.get(key) {
                    c = c.with_tolerance(tol);
                }
                failed |= !c.passed;
                t.rows.push(vec![
                    Cell::Int(id as i64),
                    key.into(),
                    c.measured.into(),
                    c.tolerance.into(),
                    Cell::Bool(c.passed),
                    c.detail.into(),
                ]);
            }
            Err(e) => {
                failed = true;
                t.rows.push(vec![
                    Cell::Int(id as i64),
                    key.into(),
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Bool(false),
                    status_of(&e).into(),
                ]);
            }
        }
    }
    Ok(Outcome { table: t, accuracy_failure: false, validation_failure: failed })
}
