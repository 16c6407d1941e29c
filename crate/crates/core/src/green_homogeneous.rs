//! Green function of the homogeneous gas on the periodic box
//! `[-R_c, R_c] x [0, beta]`: truncated double Fourier series and the two
//! closed forms valid at high and low temperature.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::model::{Model, PointPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailMode {
    None,
    /// The `k = 0` line is summed in closed form (Bernoulli polynomial).
    Bernoulli,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomogSeriesControl {
    pub l_max: u64,
    pub n_max: u64,
    pub tail_mode: TailMode,
}

impl Default for HomogSeriesControl {
    fn default() -> Self {
        Self {
            l_max: 20,
            n_max: 4000,
            tail_mode: TailMode::Bernoulli,
        }
    }
}

impl HomogSeriesControl {
    pub fn validate(&self) -> Result<()> {
        if self.l_max < 1 {
            return Err(domain("l_max", "must be >= 1"));
        }
        if self.n_max < 1 {
            return Err(domain("n_max", "must be >= 1"));
        }
        Ok(())
    }
}

/// A Green value with its bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    pub re: f64,
    pub im: f64,
    /// Estimated truncation error of `re`.
    pub trunc_err: f64,
    /// Set at coincident arguments, where the untruncated sum diverges.
    pub divergent: bool,
}

/// `sum_{l >= 1} cos(2 pi l theta) / l^2` for `theta` in `[0, 1]`.
pub fn bernoulli_cos_sum(theta: f64) -> f64 {
    PI * PI * (theta * theta - theta + 1.0 / 6.0)
}

fn wrap_unit(t: f64) -> f64 {
    let f = t - t.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Partial sum of the double Fourier series with the `(0, 0)` term omitted.
///
/// Order: increasing `l`, then increasing `n`, with `+-l` and `+-n` folded
/// into cosines. The result is real.
pub fn homog_series(pair: &PointPair, model: &Model, ctl: &HomogSeriesControl) -> Result<SeriesValue> {
    ctl.validate()?;
    let p = &model.params;
    let r = model.scales.r_c;
    let hv = model.hbar_v();
    let dx = pair.dx();
    let dtau = pair.dtau();
    let pre = -p.g / (2.0 * p.beta * r);
    let w1 = 2.0 * PI / p.beta;
    let k1 = PI / r;

    let nn = ctl.n_max as usize;
    let mut cos_k = Vec::with_capacity(nn + 1);
    let mut ek2 = Vec::with_capacity(nn + 1);
    for n in 0..=nn {
        let k = k1 * n as f64;
        cos_k.push((k * dx).cos());
        ek2.push((hv * k).powi(2));
    }

    let mut sum = 0.0;
    for l in 0..=ctl.l_max {
        let w = w1 * l as f64;
        let (cw, lw) = if l == 0 { (1.0, 1.0) } else { ((w * dtau).cos(), 2.0) };
        let w2 = w * w;
        let mut line = 0.0;
        for n in 1..=nn {
            line += 2.0 * cos_k[n] / (w2 + ek2[n]);
        }
        if l > 0 && ctl.tail_mode == TailMode::None {
            line += 1.0 / w2;
        }
        sum += lw * cw * line;
    }
    if ctl.tail_mode == TailMode::Bernoulli {
        let theta = wrap_unit(dtau / p.beta);
        sum += 2.0 * (p.beta / (2.0 * PI)).powi(2) * bernoulli_cos_sum(theta);
    }

    let divergent = dx == 0.0 && wrap_unit(dtau / p.beta) == 0.0;
    // Tail bounds: frequency tail over all retained k-lines, and k-tail over
    // all retained frequency lines (non-oscillating, hence conservative).
    let lf = ctl.l_max as f64;
    let nf = ctl.n_max as f64;
    let freq_flat = (2.0 * nf + 1.0) * 2.0 * (p.beta / (2.0 * PI)).powi(2) / lf;
    let period = 2.0 * r;
    let d = dx.abs() % period;
    let d = d.min(period - d);
    let freq_tail = if d > 0.0 {
        let a = w1 * d / hv;
        let lead = 2.0 * r / hv * (-a * (lf + 1.0)).exp() / (w1 * (lf + 1.0)) / (1.0 - (-a).exp());
        lead.min(freq_flat)
    } else {
        freq_flat
    };
    let k_tail = (2.0 * lf + 1.0) * 2.0 * r * r / (PI * PI * hv * hv * nf);
    Ok(SeriesValue {
        re: pre * sum,
        im: 0.0,
        trunc_err: pre.abs() * (freq_tail + k_tail),
        divergent,
    })
}

/// `ln |2 sinh z|` for `Re z >= 0`, stable at large `Re z`.
pub(crate) fn ln_abs_2sinh(re: f64, im: f64) -> f64 {
    if re > 20.0 {
        // 2 sinh z = e^z (1 - e^{-2z})
        let e = (-2.0 * re).exp();
        let (s, c) = (2.0 * im).sin_cos();
        re + 0.5 * ((1.0 - e * c).powi(2) + (e * s).powi(2)).ln()
    } else {
        // |sinh(a + ib)|^2 = sinh^2 a + sin^2 b
        0.5 * (4.0 * (re.sinh().powi(2) + im.sin().powi(2))).ln()
    }
}

fn check_window(pair: &PointPair, model: &Model) -> Result<()> {
    let mut violated = Vec::new();
    if pair.dx().abs() > 2.0 * model.scales.r_c {
        violated.push(format!("|x1 - x2| = {} > 2 R_c", pair.dx().abs()));
    }
    if pair.dtau().abs() > model.params.beta {
        violated.push(format!("|tau1 - tau2| = {} > beta", pair.dtau().abs()));
    }
    if violated.is_empty() {
        Ok(())
    } else {
        Err(Error::Regime { violated })
    }
}

/// High-temperature closed form, without its undetermined additive constant.
pub fn homog_asymptotic_high_t(pair: &PointPair, model: &Model) -> Result<f64> {
    check_window(pair, model)?;
    let p = &model.params;
    let hv = model.hbar_v();
    let lt = model.scales.lambda_t;
    let dx = pair.dx().abs();
    let (re, im) = (PI / lt * dx, PI / lt * hv * pair.dtau());
    if re == 0.0 && im.sin() == 0.0 {
        return Err(Error::Divergent);
    }
    let log = p.g / (2.0 * PI * hv) * ln_abs_2sinh(re, im);
    Ok(log - p.g / (4.0 * p.beta * model.scales.r_c) * dx * dx / (hv * hv))
}

/// Low-temperature closed form, without its undetermined additive constant.
pub fn homog_asymptotic_low_t(pair: &PointPair, model: &Model) -> Result<f64> {
    check_window(pair, model)?;
    let p = &model.params;
    let hv = model.hbar_v();
    let r = model.scales.r_c;
    let dx = pair.dx().abs();
    let dtau = pair.dtau();
    // sinh(i pi/(2R) (dx + i hv dtau)) = sinh(-pi hv dtau/(2R) + i pi dx/(2R));
    // |sinh| is even in the real part.
    let (re, im) = ((PI * hv * dtau / (2.0 * r)).abs(), PI * dx / (2.0 * r));
    if re == 0.0 && im.sin() == 0.0 {
        return Err(Error::Divergent);
    }
    let log = p.g / (2.0 * PI * hv) * ln_abs_2sinh(re, im);
    Ok(log - p.g / (4.0 * p.beta * r) * dtau * dtau)
}

/// Evaluation route for a Green value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GreenMethod {
    HomogSeries,
    HomogHighT,
    HomogLowT,
    TrappedSpectral,
    TrappedSeries,
    TrappedHighT,
    TrappedLowT,
    ZeroMode,
    Oracle,
}

impl GreenMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            GreenMethod::HomogSeries => "homog-series",
            GreenMethod::HomogHighT => "homog-high-t",
            GreenMethod::HomogLowT => "homog-low-t",
            GreenMethod::TrappedSpectral => "trapped-spectral",
            GreenMethod::TrappedSeries => "trapped-series",
            GreenMethod::TrappedHighT => "trapped-high-t",
            GreenMethod::TrappedLowT => "trapped-low-t",
            GreenMethod::ZeroMode => "zero-mode",
            GreenMethod::Oracle => "oracle",
        }
    }

    /// Whether values carry an undetermined additive constant.
    pub fn constant_free(&self) -> bool {
        matches!(
            self,
            GreenMethod::HomogHighT | GreenMethod::HomogLowT | GreenMethod::TrappedHighT | GreenMethod::TrappedLowT
        )
    }
}

/// A real Green value tagged with the route that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreenSample {
    pub pair: PointPair,
    pub method: GreenMethod,
    pub value: f64,
}

/// `G(a) - G(b)`; any additive constant of the method cancels.
pub fn green_difference(a: &GreenSample, b: &GreenSample) -> Result<f64> {
    if a.method != b.method {
        return Err(Error::Usage(format!(
            "cannot difference {} against {}",
            a.method.as_str(),
            b.method.as_str()
        )));
    }
    if a.pair == b.pair {
        return Ok(0.0);
    }
    Ok(a.value - b.value)
}

/// Evaluates one of the homogeneous routes as a [`GreenSample`].
pub fn homog_sample(pair: &PointPair, model: &Model, method: GreenMethod, ctl: &HomogSeriesControl) -> Result<GreenSample> {
    let value = match method {
        GreenMethod::HomogSeries => homog_series(pair, model, ctl)?.re,
        GreenMethod::HomogHighT => homog_asymptotic_high_t(pair, model)?,
        GreenMethod::HomogLowT => homog_asymptotic_low_t(pair, model)?,
        other => {
            return Err(Error::Usage(format!("{} is not a homogeneous method", other.as_str())));
        }
    };
    Ok(GreenSample {
        pair: *pair,
        method,
        value,
    })
}
