use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

use trapcorr::correlator::CorrelatorOptions;
use trapcorr::green_homogeneous::{HomogSeriesControl, TailMode};
use trapcorr::green_trapped::{LowTControl, WindowControl};
use trapcorr::legendre::AsymptoticVariant;
use trapcorr::{Error, Model, PhysicalParams, PointPair, RegimeThresholds, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub params: Params,
    pub regime: Regime,
    pub truncation: Truncation,
    pub grid: Grid,
    pub validate: Validate,
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub hbar: f64,
    pub m: f64,
    pub g: f64,
    pub omega: f64,
    pub lambda: f64,
    pub beta: f64,
}

impl Default for Params {
    fn default() -> Self {
        let p = PhysicalParams::default();
        Self { hbar: p.hbar, m: p.m, g: p.g, omega: p.omega, lambda: p.lambda, beta: p.beta }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Regime {
    pub r_lo: f64,
    pub r_hi: f64,
}

impl Default for Regime {
    fn default() -> Self {
        let t = RegimeThresholds::default();
        Self { r_lo: t.r_lo, r_hi: t.r_hi }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    HalfShift,
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Truncation {
    /// Matsubara cutoff of the trapped spectral sum.
    pub l_max: u64,
    pub homog_l_max: u64,
    pub homog_n_max: u64,
    pub n0: u64,
    pub low_t_n_max: u64,
    pub min_dtau: f64,
    pub tol: f64,
    pub window_factor: f64,
    pub asymptotic_variant: Variant,
    pub fdm_n: usize,
    pub fdm_clamp: f64,
}

impl Default for Truncation {
    fn default() -> Self {
        let c = CorrelatorOptions::default();
        let h = HomogSeriesControl::default();
        Self {
            l_max: c.l_max,
            homog_l_max: h.l_max,
            homog_n_max: h.n_max,
            n0: c.low_t.n0,
            low_t_n_max: c.low_t.n_max,
            min_dtau: c.low_t.min_dtau,
            tol: c.tol,
            window_factor: c.window.factor,
            asymptotic_variant: Variant::HalfShift,
            fdm_n: 10_001,
            fdm_clamp: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Linear,
    Log,
}

/// Either explicit `values` or `count` points from `start` to `stop`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Axis {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl Default for Axis {
    fn default() -> Self {
        Self { values: None, start: 0.0, stop: 0.0, count: 0, spacing: Spacing::Linear }
    }
}

impl Axis {
    pub fn values(v: &[f64]) -> Self {
        Self { values: Some(v.to_vec()), ..Default::default() }
    }

    pub fn range(start: f64, stop: f64, count: usize) -> Self {
        Self { values: None, start, stop, count, spacing: Spacing::Linear }
    }

    pub fn points(&self, key: &str) -> Result<Vec<f64>> {
        if let Some(v) = &self.values {
            return Ok(v.clone());
        }
        let n = self.count;
        match (self.spacing, n) {
            (_, 0) => Ok(Vec::new()),
            (_, 1) => Ok(vec![self.start]),
            (Spacing::Linear, _) => {
                let step = (self.stop - self.start) / (n - 1) as f64;
                Ok((0..n).map(|i| if i == n - 1 { self.stop } else { self.start + step * i as f64 }).collect())
            }
            (Spacing::Log, _) => {
                if !(self.start > 0.0 && self.stop > 0.0) {
                    return Err(Error::Config(format!("{key}: log spacing needs positive start and stop")));
                }
                Ok(trapcorr::correlator::log_spaced(self.start, self.stop, n))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SepAxis {
    X,
    Tau,
}

/// Pairs `(S + d/2, tau, S - d/2, 0)` along `x`, or `(S, d, S, 0)` along `tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Separation {
    pub center: f64,
    pub axis: SepAxis,
    pub tau: f64,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl Default for Separation {
    fn default() -> Self {
        Self { center: 0.0, axis: SepAxis::X, tau: 0.0, start: 1e-3, stop: 1e-1, count: 16, spacing: Spacing::Log }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub x: Axis,
    pub x1: Axis,
    pub tau1: Axis,
    pub x2: Axis,
    pub tau2: Axis,
    /// Frequencies for per-frequency spectral blocks.
    pub omega: Vec<f64>,
    pub n_max: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub separation: Option<Separation>,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            x: Axis::range(-1.0, 1.0, 21),
            x1: Axis::values(&[0.1]),
            tau1: Axis::values(&[0.0]),
            x2: Axis::values(&[0.0]),
            tau2: Axis::values(&[0.0]),
            omega: Vec::new(),
            n_max: 20,
            separation: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Validate {
    pub oracle_n: usize,
    /// Per-check tolerance overrides keyed by check name.
    pub tolerance: BTreeMap<String, f64>,
}

impl Default for Validate {
    fn default() -> Self {
        Self { oracle_n: 10_001, tolerance: BTreeMap::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Output {
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for key in cfg.validate.tolerance.keys() {
            if !trapcorr::validation::CHECK_KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!("unknown check `{key}` in [validate.tolerance]")));
            }
        }
        Ok(cfg)
    }

    pub fn model(&self) -> Result<Model> {
        let p = &self.params;
        Model::new(PhysicalParams { hbar: p.hbar, m: p.m, g: p.g, omega: p.omega, lambda: p.lambda, beta: p.beta })
    }

    pub fn thresholds(&self) -> RegimeThresholds {
        RegimeThresholds { r_lo: self.regime.r_lo, r_hi: self.regime.r_hi }
    }

    pub fn low_t(&self) -> LowTControl {
        let t = &self.truncation;
        LowTControl {
            n0: t.n0,
            n_max: t.low_t_n_max,
            min_dtau: t.min_dtau,
            variant: match t.asymptotic_variant {
                Variant::HalfShift => AsymptoticVariant::HalfShift,
                Variant::Plain => AsymptoticVariant::Plain,
            },
        }
    }

    pub fn window(&self) -> WindowControl {
        WindowControl { factor: self.truncation.window_factor }
    }

    pub fn homog(&self) -> HomogSeriesControl {
        HomogSeriesControl {
            l_max: self.truncation.homog_l_max,
            n_max: self.truncation.homog_n_max,
            tail_mode: TailMode::Bernoulli,
        }
    }

    pub fn correlator_options(&self) -> CorrelatorOptions {
        CorrelatorOptions {
            thresholds: self.thresholds(),
            window: self.window(),
            low_t: self.low_t(),
            l_max: self.truncation.l_max,
            tol: self.truncation.tol,
        }
    }

    /// Point pairs from the separation grid if present, else the Cartesian
    /// product `x1 x tau1 x x2 x tau2`.
    pub fn pairs(&self) -> Result<Vec<PointPair>> {
        let g = &self.grid;
        if let Some(s) = &g.separation {
            let axis = Axis { values: None, start: s.start, stop: s.stop, count: s.count, spacing: s.spacing };
            return Ok(axis
                .points("grid.separation")?
                .into_iter()
                .map(|d| match s.axis {
                    SepAxis::X => PointPair::new(s.center + 0.5 * d, s.tau, s.center - 0.5 * d, 0.0),
                    SepAxis::Tau => PointPair::new(s.center, d, s.center, 0.0),
                })
                .collect());
        }
        let (x1, t1) = (g.x1.points("grid.x1")?, g.tau1.points("grid.tau1")?);
        let (x2, t2) = (g.x2.points("grid.x2")?, g.tau2.points("grid.tau2")?);
        let mut out = Vec::with_capacity(x1.len() * t1.len() * x2.len() * t2.len());
        for &a in &x1 {
            for &ta in &t1 {
                for &b in &x2 {
                    for &tb in &t2 {
                        out.push(PointPair::new(a, ta, b, tb));
                    }
                }
            }
        }
        Ok(out)
    }

    /// The resolved configuration as TOML.
    pub fn echo(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        let back = RunConfig::parse(&c.echo()).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn unknown_key_is_named() {
        let e = RunConfig::parse("[params]\nbetta = 2.0\n").unwrap_err().to_string();
        assert!(e.contains("betta"), "{e}");
        let e = RunConfig::parse("[validate.tolerance]\nnope = 1.0\n").unwrap_err().to_string();
        assert!(e.contains("nope"));
    }

    #[test]
    fn readme_grammar_parses_to_defaults() {
        let readme = include_str!("../../../README.md");
        let block = readme.split("```toml\n").nth(1).unwrap().split("```").next().unwrap();
        let mut c = RunConfig::parse(block).unwrap();
        // The documented block spells out the optional separation grid.
        assert_eq!(c.grid.separation.take(), Some(Separation::default()));
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn axis_forms() {
        assert_eq!(Axis::range(0.0, 1.0, 3).points("x").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(Axis::range(0.0, 1.0, 0).points("x").unwrap().is_empty());
        let log = Axis { spacing: Spacing::Log, ..Axis::range(1e-3, 1e-1, 3) };
        let p = log.points("x").unwrap();
        assert!((p[1] - 1e-2).abs() < 1e-15);
        assert!(Axis { spacing: Spacing::Log, ..Axis::range(0.0, 1.0, 3) }.points("x").is_err());
    }

    #[test]
    fn separation_pairs() {
        let c = RunConfig::parse("[grid.separation]\ncenter = 0.2\nstart = 0.01\nstop = 0.1\ncount = 2\n").unwrap();
        let p = c.pairs().unwrap();
        assert_eq!(p.len(), 2);
        assert!((p[1].s() - 0.2).abs() < 1e-15);
        assert!((p[1].dx() - 0.1).abs() < 1e-15);
    }
}
