//! Brute-force validators: finite differences for the spectral equation and
//! the Legendre operator, and direct summations.

use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::legendre::p_poly_table;
use crate::model::Model;

/// Uniform vertex grid on `[-(1 - clamp) R_c, (1 - clamp) R_c]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FdmGrid {
    pub n: usize,
    pub clamp: f64,
    pub r_c: f64,
}

impl FdmGrid {
    pub fn new(n: usize, clamp: f64, model: &Model) -> Result<Self> {
        if n < 100 {
            return Err(domain("n", format!("need at least 100 nodes, got {n}")));
        }
        if !(0.0..0.5).contains(&clamp) {
            return Err(domain("clamp", format!("{clamp} outside [0, 0.5)")));
        }
        Ok(Self { n, clamp, r_c: model.scales.r_c })
    }

    pub fn half_width(&self) -> f64 {
        (1.0 - self.clamp) * self.r_c
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_width() / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        -self.half_width() + i as f64 * self.step()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Nearest node to `x` and its offset `node - x`.
    pub fn snap(&self, x: f64) -> (usize, f64) {
        let i = ((x + self.half_width()) / self.step()).round().clamp(0.0, (self.n - 1) as f64) as usize;
        (i, self.node(i) - x)
    }

    /// Grid with the step halved; shares every node of `self`.
    pub fn refined(&self) -> Self {
        Self { n: 2 * self.n - 1, ..self.clone() }
    }

    /// `1 - x^2/R_c^2` at the midpoint between nodes `i` and `i + 1`.
    fn coef_mid(&self, i: usize) -> f64 {
        let x = self.node(i) + 0.5 * self.step();
        1.0 - (x / self.r_c).powi(2)
    }
}

/// Finite-difference solution of the spectral equation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FdmSolution {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    pub source_node: usize,
    pub snap_offset: f64,
    /// Max difference against the refined grid on shared nodes.
    pub error_estimate: f64,
    /// Gauge fixing applied to the zero-frequency solve.
    pub gauge: Option<String>,
}

/// Solves `-(omega/hbar v)^2 G + (a G')' = (g/(hbar v)^2) delta(x - x')` with
/// `a = 1 - x^2/R_c^2` by finite volumes. Zero flux at the ends for
/// `omega != 0`; at `omega = 0` the source flux leaves symmetrically through
/// both ends and the solution is shifted to zero mean.
pub fn fdm_spectral_solve(omega: f64, x2: f64, model: &Model, grid: &FdmGrid) -> Result<FdmSolution> {
    if !(x2.abs() < grid.half_width()) {
        return Err(domain("x2", format!("{x2} outside the grid")));
    }
    let (j, off) = grid.snap(x2);
    let coarse = solve_on(omega, j, model, grid)?;
    let fine_grid = grid.refined();
    let fine = solve_on(omega, 2 * j, model, &fine_grid)?;
    // The constant gauge differs between grids; compare after aligning at the source.
    let shift = if omega == 0.0 { coarse[j] - fine[2 * j] } else { 0.0 };
    let err = coarse
        .iter()
        .enumerate()
        .map(|(i, c)| (c - fine[2 * i] - shift).abs())
        .fold(0.0, f64::max);
    Ok(FdmSolution {
        nodes: grid.nodes(),
        values: coarse,
        source_node: j,
        snap_offset: off,
        error_estimate: err,
        gauge: (omega == 0.0).then(|| "outflux g/(2 (hbar v)^2) at each end, zero mean".to_string()),
    })
}

fn solve_on(omega: f64, j: usize, model: &Model, grid: &FdmGrid) -> Result<Vec<f64>> {
    let n = grid.n;
    let h = grid.step();
    let hv = model.hbar_v();
    let k2 = (omega / hv).powi(2);
    let c = model.params.g / (hv * hv);
    let mut lo = vec![0.0; n];
    let mut di = vec![0.0; n];
    let mut up = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        let w = if i == 0 || i == n - 1 { 0.5 * h } else { h };
        if i > 0 {
            let a = grid.coef_mid(i - 1) / h;
            lo[i] = a;
            di[i] -= a;
        }
        if i + 1 < n {
            let a = grid.coef_mid(i) / h;
            up[i] = a;
            di[i] -= a;
        }
        di[i] -= k2 * w;
    }
    rhs[j] = c;
    let zero_mode = omega == 0.0;
    if zero_mode {
        // Boundary fluxes: -F_L at the left node, +F_R at the right node.
        rhs[0] -= 0.5 * c;
        rhs[n - 1] -= 0.5 * c;
        let pin = j;
        lo[pin] = 0.0;
        up[pin] = 0.0;
        di[pin] = 1.0;
        rhs[pin] = 0.0;
    }
    let mut g = thomas(&lo, &di, &up, &rhs)?;
    if zero_mode {
        let mean = trapezoid_mean(&g);
        g.iter_mut().for_each(|v| *v -= mean);
    }
    Ok(g)
}

fn trapezoid_mean(v: &[f64]) -> f64 {
    let n = v.len();
    let inner: f64 = v[1..n - 1].iter().sum();
    (inner + 0.5 * (v[0] + v[n - 1])) / (n - 1) as f64
}

/// Tridiagonal solve; `lo[0]` and `up[n-1]` are ignored.
fn thomas(lo: &[f64], di: &[f64], up: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = di.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut piv = di[0];
    for i in 0..n {
        if i > 0 {
            piv = di[i] - lo[i] * c[i - 1];
        }
        if piv == 0.0 || !piv.is_finite() {
            return Err(Error::Consistency(format!("singular tridiagonal system at row {i}")));
        }
        c[i] = if i + 1 < n { up[i] / piv } else { 0.0 };
        d[i] = (rhs[i] - if i > 0 { lo[i] * d[i - 1] } else { 0.0 }) / piv;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

/// Lowest eigenvalues of the discretized `-(a G')'` with zero end flux.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenEstimate {
    pub coarse: Vec<f64>,
    pub fine: Vec<f64>,
    /// Richardson extrapolation of the two grids, assuming second order.
    pub extrapolated: Vec<f64>,
}

/// Eigenvalues on `grid` and its refinement, with Richardson extrapolation.
pub fn fdm_eigensolve(grid: &FdmGrid, n_levels: usize) -> Result<EigenEstimate> {
    if n_levels > grid.n / 10 {
        return Err(domain("n_levels", format!("{n_levels} exceeds n/10 = {}", grid.n / 10)));
    }
    let coarse = eigen_on(grid, n_levels)?;
    let fine = eigen_on(&grid.refined(), n_levels)?;
    let extrapolated = coarse.iter().zip(&fine).map(|(c, f)| (4.0 * f - c) / 3.0).collect();
    Ok(EigenEstimate { coarse, fine, extrapolated })
}

fn eigen_on(grid: &FdmGrid, n_levels: usize) -> Result<Vec<f64>> {
    let n = grid.n;
    let h = grid.step();
    // Stiffness K and lumped mass M; symmetrize as M^{-1/2} K M^{-1/2}.
    let mass: Vec<f64> = (0..n).map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h }).collect();
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n - 1];
    for i in 0..n - 1 {
        let a = grid.coef_mid(i) / h;
        diag[i] += a;
        diag[i + 1] += a;
        off[i] = -a / (mass[i] * mass[i + 1]).sqrt();
    }
    for (d, m) in diag.iter_mut().zip(&mass) {
        *d /= m;
    }
    let bound = diag
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let l = if i > 0 { off[i - 1].abs() } else { 0.0 };
            let r = if i + 1 < n { off[i].abs() } else { 0.0 };
            d + l + r
        })
        .fold(0.0, f64::max);
    let mut out = Vec::with_capacity(n_levels);
    for k in 0..n_levels {
        let (mut lo, mut hi) = (out.last().copied().unwrap_or(0.0f64) - 1.0, bound);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if sturm_count(&diag, &off, mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-15 * hi.abs().max(1e-300) {
                break;
            }
        }
        if !hi.is_finite() {
            return Err(Error::Consistency("bisection failed".into()));
        }
        out.push(0.5 * (lo + hi));
    }
    Ok(out)
}

/// Number of eigenvalues of the symmetric tridiagonal matrix below `x`.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        let e2 = if i > 0 { off[i - 1] * off[i - 1] } else { 0.0 };
        q = diag[i] - x - if i > 0 { e2 / q } else { 0.0 };
        if q == 0.0 {
            q = -1e-300;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// `sum_{l=1}^{l_max} cos(2 pi theta l) / l^2`, summed from the smallest term.
pub fn brute_frequency_sum(theta: f64, l_max: u64) -> f64 {
    (1..=l_max).rev().map(|l| (2.0 * PI * theta * l as f64).cos() / (l as f64).powi(2)).sum()
}

/// `pi^2 (theta^2 - theta + 1/6)`, the closed form of the frequency sum on `[0, 1]`.
pub fn frequency_sum_closed(theta: f64) -> f64 {
    PI * PI * (theta * theta - theta + 1.0 / 6.0)
}

/// `sum_{n=1}^{n_max} (n + 1/2)/sqrt(n(n+1)) P_n(u) P_n(u') e^{-sqrt(n(n+1)) dtau/alpha}`
/// from tabulated polynomials, summed from the top.
pub fn brute_legendre_tail(x: f64, x2: f64, dtau: f64, model: &Model, n_max: usize) -> Result<f64> {
    if !(dtau > 0.0) {
        return Err(domain("dtau", format!("{dtau} must be positive")));
    }
    let r = model.scales.r_c;
    let (u, u2) = (x / r, x2 / r);
    if !(u.abs() <= 1.0 && u2.abs() <= 1.0) {
        return Err(domain("x", "points outside the condensate".to_string()));
    }
    let mut pa = vec![0.0; n_max + 1];
    let mut pb = vec![0.0; n_max + 1];
    p_poly_table(u, &mut pa);
    p_poly_table(u2, &mut pb);
    let s = dtau / model.scales.alpha;
    Ok((1..=n_max)
        .rev()
        .map(|n| {
            let nf = n as f64;
            let root = (nf * (nf + 1.0)).sqrt();
            (nf + 0.5) / root * pa[n] * pb[n] * (-root * s).exp()
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::green_trapped::{closed_form_zero_mode, legendre_heat_sum, spectral_density};
    use crate::model::PhysicalParams;

    fn trap(ratio: f64) -> Model {
        Model::new(PhysicalParams::unit_trap(ratio, 1.0)).unwrap()
    }

    #[test]
    fn frequency_sum_values() {
        assert!((frequency_sum_closed(0.0) - PI * PI / 6.0).abs() < 1e-15);
        assert!((frequency_sum_closed(0.5) + PI * PI / 12.0).abs() < 1e-15);
        for th in [0.0, 0.13, 0.5, 0.77, 1.0] {
            let d = brute_frequency_sum(th, 1_000_000) - frequency_sum_closed(th);
            assert!(d.abs() < 1e-6, "theta {th}: {d}");
        }
    }

    #[test]
    fn derivative_jump_at_source() {
        let m = trap(1.0);
        let grid = FdmGrid::new(2001, 1e-6, &m).unwrap();
        let sol = fdm_spectral_solve(2.0 * PI, 0.3, &m, &grid).unwrap();
        let (j, h) = (sol.source_node, grid.step());
        let v = &sol.values;
        let jump = (v[j + 1] - v[j]) / h * grid.coef_mid(j) - (v[j] - v[j - 1]) / h * grid.coef_mid(j - 1);
        let c = m.params.g / m.hbar_v().powi(2);
        // Minus the reaction term over one cell.
        let k2 = (2.0 * PI / m.hbar_v()).powi(2);
        assert!((jump - k2 * h * v[j] - c).abs() < 1e-10);
    }

    #[test]
    fn zero_mode_matches_closed_form_differences() {
        let m = trap(1.0);
        let grid = FdmGrid::new(2001, 1e-6, &m).unwrap();
        let sol = fdm_spectral_solve(0.0, 0.2, &m, &grid).unwrap();
        let xs = sol.nodes[sol.source_node];
        let beta = m.params.beta;
        let r = |i: usize| beta * closed_form_zero_mode(sol.nodes[i], xs, &m).unwrap();
        let (a, b) = (grid.snap(-0.5).0, grid.snap(0.7).0);
        let exact = r(b) - r(a);
        let fdm = sol.values[b] - sol.values[a];
        assert!((fdm / exact - 1.0).abs() < 1e-3, "{fdm} vs {exact}");
        assert!(sol.gauge.is_some());
    }

    #[test]
    fn finite_frequency_matches_legendre() {
        let m = trap(1.0);
        let grid = FdmGrid::new(2001, 1e-6, &m).unwrap();
        let w = 2.0 * PI / m.params.beta;
        let sol = fdm_spectral_solve(w, -0.1, &m, &grid).unwrap();
        let xs = sol.nodes[sol.source_node];
        for x in [-0.6, 0.0, 0.4] {
            let i = grid.snap(x).0;
            let d = spectral_density(w, sol.nodes[i], xs, &m, 1e-12).unwrap().re_part;
            assert!((sol.values[i] / d - 1.0).abs() < 1e-3, "x {x}: {} vs {d}", sol.values[i]);
        }
    }

    #[test]
    fn grid_error_shrinks_second_order() {
        let m = trap(1.0);
        let g1 = FdmGrid::new(501, 1e-6, &m).unwrap();
        let w = 2.0 * PI;
        let e1 = fdm_spectral_solve(w, 0.1, &m, &g1).unwrap().error_estimate;
        let e2 = fdm_spectral_solve(w, 0.1, &m, &g1.refined()).unwrap().error_estimate;
        let ratio = e1 / e2;
        assert!(ratio > 3.0 && ratio < 5.0, "ratio {ratio}");
    }

    #[test]
    fn eigenvalues_approach_legendre_spectrum() {
        let m = trap(1.0);
        let grid = FdmGrid::new(2001, 0.0, &m).unwrap();
        let est = fdm_eigensolve(&grid, 21).unwrap();
        assert!(est.extrapolated[0].abs() < 1e-9);
        for n in 1..=20 {
            let want = (n * (n + 1)) as f64;
            let got = est.extrapolated[n];
            assert!((got / want - 1.0).abs() < 1e-4, "n {n}: {got}");
        }
        assert!(fdm_eigensolve(&grid, 500).is_err());
    }

    #[test]
    fn legendre_tail_matches_recurrence_sum() {
        let m = trap(100.0);
        let a = brute_legendre_tail(0.3, -0.2, 0.5, &m, 2000).unwrap();
        let b = legendre_heat_sum(0.3, -0.2, 0.5, 2000);
        assert!((a - b).abs() < 1e-12 * b.abs().max(1.0));
        let far = brute_legendre_tail(0.3, -0.2, 40.0, &m, 1000).unwrap();
        let lead = 1.5 / 2f64.sqrt() * 0.3 * -0.2 * (-2f64.sqrt() * 40.0).exp();
        assert!((far / lead - 1.0).abs() < 1e-6);
    }

    #[test]
    fn legendre_tail_parity_at_center() {
        let m = trap(100.0);
        let full = brute_legendre_tail(0.0, 0.0, 0.3, &m, 1500).unwrap();
        let mut t = vec![0.0; 1501];
        p_poly_table(0.0, &mut t);
        let even: f64 = (1..=750)
            .map(|k| {
                let n = (2 * k) as f64;
                let root = (n * (n + 1.0)).sqrt();
                (n + 0.5) / root * t[2 * k] * t[2 * k] * (-root * 0.3).exp()
            })
            .sum();
        assert!((full - even).abs() < 1e-12);
    }
}
