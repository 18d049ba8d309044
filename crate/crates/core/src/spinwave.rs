//! Spin-wave dispersion about the Néel pair states and the Gaussian
//! free energy it induces.
//!
//! Everything depends on the relative angle φ* only through the effective
//! coupling `g = γ cos φ*`. Momenta are `(k1, k2)` with `k1` along x.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::model::{self, CouplingParams, LatticeTorus, ReferenceFrame};
use crate::sum::{pairwise_sum, Neumaier};

/// Inputs to the free-energy integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinWaveSpec {
    /// Relative angle between the sublattices, radians.
    pub phi_star: f64,
    pub gamma: f64,
    /// Mass added to the dispersion; 0 is massless.
    pub lambda: f64,
    /// Side of the first quadrature grid over the zone.
    pub quad_n: usize,
    /// Absolute tolerance on F.
    pub tol: f64,
    /// Grid doublings allowed before giving up.
    pub max_doublings: u32,
}

impl SpinWaveSpec {
    pub fn new(phi_star: f64, gamma: f64) -> Self {
        Self {
            phi_star,
            gamma,
            lambda: 0.0,
            quad_n: 16,
            tol: 1e-9,
            max_doublings: 10,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// γ cos φ*.
    pub fn effective_coupling(&self) -> f64 {
        self.gamma * self.phi_star.cos()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma < 2.0) {
            return Err(Error::invalid(format!("gamma must lie in [0, 2), got {}", self.gamma)));
        }
        if !self.phi_star.is_finite() {
            return Err(Error::invalid("phi_star must be finite"));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::invalid(format!("lambda must be non-negative, got {}", self.lambda)));
        }
        if self.quad_n == 0 || self.quad_n % 2 != 0 {
            return Err(Error::invalid(format!("quad_n must be a positive even integer, got {}", self.quad_n)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyResult {
    pub value: f64,
    pub error_estimate: f64,
    pub quad_n_used: usize,
}

fn check_coupling(g: f64) -> Result<()> {
    if g.abs() < 2.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("effective coupling |g| must be below 2, got {g}")))
    }
}

/// `(2−g)(1−cos k1)(1+cos k2) + (2+g)(1+cos k1)(1−cos k2)`, with the
/// half-angle forms so that values near the zeros keep full relative precision.
#[inline]
fn dispersion_unchecked(k1: f64, k2: f64, g: f64) -> f64 {
    let (s1, c1) = (0.5 * k1).sin_cos();
    let (s2, c2) = (0.5 * k2).sin_cos();
    let (a1, b1) = (2.0 * s1 * s1, 2.0 * c1 * c1);
    let (a2, b2) = (2.0 * s2 * s2, 2.0 * c2 * c2);
    (2.0 - g) * a1 * b2 + (2.0 + g) * b1 * a2
}

/// D_k for effective coupling `g`. Vanishes only at (0,0) and (π,π).
pub fn dispersion(k1: f64, k2: f64, g: f64) -> Result<f64> {
    check_coupling(g)?;
    Ok(dispersion_unchecked(k1, k2, g))
}

/// The same D_k written as a sum of bond terms,
/// `|1−e^{i(k1+k2)}|² + |1−e^{i(k1−k2)}|² + g(|1−e^{ik2}|² − |1−e^{ik1}|²)`.
pub fn dispersion_bond_form(k1: f64, k2: f64, g: f64) -> f64 {
    let m = |u: f64| (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, u)).norm_sqr();
    m(k1 + k2) + m(k1 - k2) + g * (m(k2) - m(k1))
}

/// Midpoint rule for the zone average of `½ log(λ + D_k)` on an `n × n`
/// grid, folded onto the quarter `[0, π]²` by `k → −k` symmetry.
fn midpoint_average(n: usize, g: f64, lambda: f64) -> f64 {
    let m = n / 2;
    let h = PI / m as f64;
    let (a, b): (Vec<f64>, Vec<f64>) = (0..m)
        .map(|i| {
            let (s, c) = (0.5 * (i as f64 + 0.5) * h).sin_cos();
            (2.0 * s * s, 2.0 * c * c)
        })
        .unzip();
    let rows: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|i| {
            let (ai, bi) = (a[i], b[i]);
            let mut acc = Neumaier::default();
            for j in 0..m {
                acc.add((lambda + (2.0 - g) * ai * b[j] + (2.0 + g) * bi * a[j]).ln());
            }
            acc.sum()
        })
        .collect();
    0.5 * pairwise_sum(&rows) / (m * m) as f64
}

/// Doubles the grid until two successive Richardson-extrapolated values
/// agree to `tol`. The midpoint error on this integrand is `C h² + O(h⁴)`,
/// so `(4F_{2n} − F_n)/3` cancels the leading term.
fn integrate(spec: &SpinWaveSpec) -> Result<FreeEnergyResult> {
    spec.validate()?;
    let g = spec.effective_coupling();
    check_coupling(g)?;
    let mut n = spec.quad_n;
    let mut plain = midpoint_average(n, g, spec.lambda);
    let mut extrapolated: Option<f64> = None;
    for doubling in 1..=spec.max_doublings {
        n *= 2;
        let next = midpoint_average(n, g, spec.lambda);
        let richardson = (4.0 * next - plain) / 3.0;
        if let Some(previous) = extrapolated {
            let diff = (richardson - previous).abs();
            if diff < spec.tol {
                return Ok(FreeEnergyResult {
                    value: richardson,
                    error_estimate: diff,
                    quad_n_used: n,
                });
            }
            if doubling == spec.max_doublings {
                return Err(Error::NonConvergence {
                    doublings: doubling,
                    quad_n: n,
                    last: richardson,
                    previous,
                });
            }
        }
        plain = next;
        extrapolated = Some(richardson);
    }
    Err(Error::NonConvergence {
        doublings: spec.max_doublings,
        quad_n: n,
        last: extrapolated.unwrap_or(plain),
        previous: plain,
    })
}

/// `F = ½ (2π)⁻² ∫∫ log(λ + D_k) dk` over the Brillouin zone, using the
/// mass carried by `spec` (0 for the massless integral).
pub fn free_energy(spec: &SpinWaveSpec) -> Result<FreeEnergyResult> {
    integrate(spec)
}

/// The massive integral with `λ > 0` overriding `spec.lambda`.
pub fn massive_free_energy(spec: &SpinWaveSpec, lambda: f64) -> Result<FreeEnergyResult> {
    if !(lambda > 0.0) {
        return Err(Error::invalid(format!("lambda must be positive, got {lambda}")));
    }
    integrate(&spec.with_lambda(lambda))
}

/// `(1/L²) Σ_k ½ log(λ + D_k)` over the reciprocal torus `k = 2π n / L`.
pub fn lattice_free_energy(side: usize, spec: &SpinWaveSpec, lambda: f64) -> Result<f64> {
    LatticeTorus::new(side)?;
    if !(lambda > 0.0) {
        return Err(Error::invalid(format!("lambda must be positive, got {lambda}")));
    }
    let g = spec.effective_coupling();
    check_coupling(g)?;
    let k = |n: usize| 2.0 * PI * n as f64 / side as f64;
    let rows: Vec<f64> = (0..side)
        .map(|n2| (0..side).map(|n1| 0.5 * (lambda + dispersion_unchecked(k(n1), k(n2), g)).ln()).collect::<Neumaier>().sum())
        .collect();
    Ok(pairwise_sum(&rows) / (side * side) as f64)
}

/// One Fourier mode of the Hessian comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeComparison {
    pub n1: usize,
    pub n2: usize,
    pub finite_difference: f64,
    pub analytic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HessianReport {
    pub side: usize,
    pub step: f64,
    /// Largest `|fd − J D_k| / (J D_k)` over modes with `D_k ≠ 0`.
    pub max_relative_discrepancy: f64,
    /// Largest `|fd|` over the zero modes (0,0) and (π,π).
    pub max_zero_mode_abs: f64,
    /// Largest off-diagonal element of the Hessian in the Fourier basis.
    pub max_off_diagonal: f64,
    pub modes: Vec<ModeComparison>,
}

impl HessianReport {
    /// Zero modes are judged absolutely against `step²`.
    pub fn agrees(&self, rel_tol: f64) -> bool {
        self.max_relative_discrepancy < rel_tol && self.max_zero_mode_abs <= self.step * self.step
    }
}

/// Builds the Hessian of the torus energy at the Néel state `(0, φ*)` by
/// central differences of the analytic gradient, transforms it to the
/// Fourier basis, and compares the diagonal against `J D_k(γ cos φ*)`.
/// Energies are in units of J.
pub fn hessian_check(side: usize, phi_star: f64, gamma: f64) -> Result<HessianReport> {
    const STEP: f64 = 1e-4;
    let torus = LatticeTorus::new(side)?;
    if side > 16 {
        return Err(Error::invalid(format!("hessian_check builds a dense matrix; L = {side} exceeds 16")));
    }
    let params = CouplingParams::new(1.0, gamma, 1.0)?;
    params.require_spin_wave_range()?;
    let neel = model::neel_state(torus, ReferenceFrame::new(0.0, phi_star))?;
    let n = torus.sites();
    let row_major = |x: usize, y: usize| y * side + x;

    // hessian[r][c], both indices row-major
    let mut hessian = vec![Complex64::default(); n * n];
    for (cx, cy) in torus.row_major() {
        let theta = neel.angle(cx, cy);
        let mut plus = neel.clone();
        plus.set(cx, cy, theta + STEP);
        let mut minus = neel.clone();
        minus.set(cx, cy, theta - STEP);
        let gp = model::gradient(&plus, &params);
        let gm = model::gradient(&minus, &params);
        let c = row_major(cx, cy);
        for (rx, ry) in torus.row_major() {
            let i = torus.index(rx, ry);
            hessian[row_major(rx, ry) * n + c] = Complex64::new((gp[i] - gm[i]) / (2.0 * STEP), 0.0);
        }
    }

    // Ĥ[k][k'] = (1/L²) Σ_{r,r'} e^{−ik·r} H[r][r'] e^{ik'·r'}
    let fft = Fft2::new(side);
    let mut column = vec![Complex64::default(); n];
    let mut half = vec![Complex64::default(); n * n]; // half[k][r']
    for c in 0..n {
        for r in 0..n {
            column[r] = hessian[r * n + c];
        }
        fft.forward(&mut column);
        for k in 0..n {
            half[k * n + c] = column[k];
        }
    }
    let g = gamma * phi_star.cos();
    let k_of = |i: usize| 2.0 * PI * i as f64 / side as f64;
    let mut report = HessianReport {
        side,
        step: STEP,
        max_relative_discrepancy: 0.0,
        max_zero_mode_abs: 0.0,
        max_off_diagonal: 0.0,
        modes: Vec::with_capacity(n),
    };
    for k in 0..n {
        let row = &mut half[k * n..(k + 1) * n];
        fft.inverse(row);
        for (kp, value) in row.iter().enumerate() {
            let value = value / n as f64;
            if kp != k {
                report.max_off_diagonal = report.max_off_diagonal.max(value.norm());
                continue;
            }
            let (n1, n2) = (k % side, k / side);
            let analytic = dispersion_unchecked(k_of(n1), k_of(n2), g);
            let fd = value.re;
            let zero_mode = (n1 == 0 && n2 == 0) || (2 * n1 == side && 2 * n2 == side);
            if zero_mode {
                report.max_zero_mode_abs = report.max_zero_mode_abs.max(fd.abs());
            } else {
                report.max_relative_discrepancy = report.max_relative_discrepancy.max((fd - analytic).abs() / analytic);
            }
            report.modes.push(ModeComparison {
                n1,
                n2,
                finite_difference: fd,
                analytic,
            });
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanPoint {
    pub phi_deg: f64,
    pub free_energy: FreeEnergyResult,
    pub is_argmin: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimaScan {
    pub gamma: f64,
    pub lambda: f64,
    pub tol: f64,
    pub points: Vec<ScanPoint>,
}

impl MinimaScan {
    pub fn argmin_deg(&self) -> Vec<f64> {
        self.points.iter().filter(|p| p.is_argmin).map(|p| p.phi_deg).collect()
    }

    /// Whether the argmin set lies in {0°, 180°}; `None` when the grid
    /// misses either angle.
    pub fn selects_colinear(&self) -> Option<bool> {
        let on_grid = |a: f64| self.points.iter().any(|p| (p.phi_deg - a).abs() < 1e-9);
        if !(on_grid(0.0) && on_grid(180.0)) {
            return None;
        }
        Some(self.argmin_deg().iter().all(|&a| a.abs() < 1e-9 || (a - 180.0).abs() < 1e-9))
    }

    pub fn value_at(&self, phi_deg: f64) -> Option<f64> {
        self.points.iter().find(|p| (p.phi_deg - phi_deg).abs() < 1e-9).map(|p| p.free_energy.value)
    }

    /// CSV with columns `phi_deg,gamma,lambda,F,err_est,quad_n`, plus an
    /// `argmin` flag column when `flag_argmin` is set.
    pub fn to_csv(&self, flag_argmin: bool) -> String {
        let mut out = String::from("phi_deg,gamma,lambda,F,err_est,quad_n");
        if flag_argmin {
            out.push_str(",argmin");
        }
        out.push('\n');
        for p in &self.points {
            let f = &p.free_energy;
            let _ = write!(out, "{},{},{},{:.17e},{:e},{}", p.phi_deg, self.gamma, self.lambda, f.value, f.error_estimate, f.quad_n_used);
            if flag_argmin {
                out.push_str(if p.is_argmin { ",1" } else { ",0" });
            }
            out.push('\n');
        }
        out
    }
}

/// Evaluates F on the grid `φ* = 0, step, 2·step, … < 360°` and flags every
/// point within `tol` of the minimum.
pub fn scan_minima(gamma: f64, step_deg: f64, tol: f64, lambda: f64) -> Result<MinimaScan> {
    if !(gamma > 0.0 && gamma < 2.0) {
        return Err(Error::invalid(format!("gamma must lie in (0, 2), got {gamma}")));
    }
    if !(step_deg > 0.0 && step_deg <= 360.0) {
        return Err(Error::invalid(format!("grid step must lie in (0°, 360°], got {step_deg}")));
    }
    let count = ((360.0 / step_deg) - 1e-9).ceil() as usize;
    let mut points = Vec::with_capacity(count);
    for i in 0..count {
        let phi_deg = i as f64 * step_deg;
        let spec = SpinWaveSpec::new(phi_deg.to_radians(), gamma).with_lambda(lambda).with_tol(tol);
        points.push(ScanPoint {
            phi_deg,
            free_energy: free_energy(&spec)?,
            is_argmin: false,
        });
    }
    let min = points.iter().map(|p| p.free_energy.value).fold(f64::INFINITY, f64::min);
    for p in &mut points {
        p.is_argmin = p.free_energy.value <= min + tol;
    }
    Ok(MinimaScan { gamma, lambda, tol, points })
}
