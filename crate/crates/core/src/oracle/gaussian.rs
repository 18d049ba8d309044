//! Massive Gaussian spin-wave field: exact Fourier sampling and the box
//! probabilities built on it.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::fft::Fft2;
use crate::model::LatticeTorus;
use crate::spinwave::{dispersion, lattice_free_energy, SpinWaveSpec};
use crate::sum::Neumaier;
use crate::{Error, Result};

/// Sampler for the field with mode variances `1 / (βJ (λ + D_k))`.
pub struct MassiveField {
    side: usize,
    /// Mode standard deviations, indexed `n2 * L + n1`.
    sigma: Vec<f64>,
    fft: Fft2,
}

impl MassiveField {
    /// Uses `spec.lambda` as the mass.
    pub fn new(side: usize, spec: &SpinWaveSpec, beta_j: f64) -> Result<Self> {
        LatticeTorus::new(side)?;
        spec.validate()?;
        if !(spec.lambda > 0.0) {
            return Err(Error::invalid(format!("the Gaussian field needs lambda > 0, got {}", spec.lambda)));
        }
        if !(beta_j > 0.0) || !beta_j.is_finite() {
            return Err(Error::invalid(format!("betaJ must be positive, got {beta_j}")));
        }
        let g = spec.effective_coupling();
        let k = |n: usize| std::f64::consts::TAU * n as f64 / side as f64;
        let mut sigma = Vec::with_capacity(side * side);
        for n2 in 0..side {
            for n1 in 0..side {
                sigma.push(1.0 / (beta_j * (spec.lambda + dispersion(k(n1), k(n2), g)?)).sqrt());
            }
        }
        Ok(MassiveField {
            side,
            sigma,
            fft: Fft2::new(side),
        })
    }

    /// Variance of mode `(n1, n2)`.
    pub fn mode_variance(&self, n1: usize, n2: usize) -> f64 {
        self.sigma[n2 * self.side + n1].powi(2)
    }

    /// One field realization, row-major, drawn from stream `replica` of `seed`.
    /// White noise is filtered in Fourier space, which keeps the conjugate
    /// symmetry of a real field.
    pub fn sample(&self, seed: u64, replica: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(replica);
        let mut buf: Vec<Complex64> = (0..self.side * self.side)
            .map(|_| Complex64::new(StandardNormal.sample(&mut rng), 0.0))
            .collect();
        self.fft.forward(&mut buf);
        for (z, s) in buf.iter_mut().zip(&self.sigma) {
            *z *= s;
        }
        self.fft.inverse(&mut buf);
        let norm = (self.side * self.side) as f64;
        buf.into_iter().map(|z| z.re / norm).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianBoxReport {
    pub side: usize,
    pub spec: SpinWaveSpec,
    pub beta_j: f64,
    pub delta: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// `1 / (βJ Δ² λ)`.
    pub chebyshev_bound: f64,
    /// `(1/L²) log Q_L(φ*, λ) = −F_lattice(φ*, λ)`.
    pub log_q_lambda: f64,
    /// `−F_lattice + log(1 − 1/(βJΔ²λ))`.
    pub lower_bracket: f64,
    /// `−F_lattice + βJλΔ²/2`.
    pub upper_bracket: f64,
    /// Probability that every `|ϑ_r| < Δ`.
    pub box_probability: f64,
    pub box_probability_stderr: f64,
    /// Per-site `P(|ϑ_0| ≥ Δ)`.
    pub tail: f64,
    pub tail_stderr: f64,
    /// `(1 − tail)^{L²}`.
    pub product_bound: f64,
    pub product_bound_stderr: f64,
    /// Reweighted estimate of `(1/L²) log Q_{L,Δ}`.
    pub log_q_delta: f64,
    pub log_q_delta_stderr: f64,
}

impl GaussianBoxReport {
    pub fn bracket_midpoint(&self) -> f64 {
        0.5 * (self.lower_bracket + self.upper_bracket)
    }

    pub fn within_bracket(&self) -> bool {
        self.lower_bracket <= self.log_q_delta && self.log_q_delta <= self.upper_bracket
    }
}

struct Replica {
    inside: bool,
    exceed_fraction: f64,
    sum_sq: f64,
}

fn mean_and_stderr(xs: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = xs.clone().collect::<Neumaier>().sum() / n as f64;
    let var = xs.map(|x| (x - mean).powi(2)).collect::<Neumaier>().sum() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Samples the massive field `n_samples` times and estimates the box
/// probabilities and the box-restricted massless integral.
pub fn gaussian_box_mass(
    side: usize,
    spec: &SpinWaveSpec,
    delta: f64,
    beta_j: f64,
    n_samples: usize,
    seed: u64,
) -> Result<GaussianBoxReport> {
    let field = MassiveField::new(side, spec, beta_j)?;
    if !(delta > 0.0) {
        return Err(Error::invalid(format!("Delta must be positive, got {delta}")));
    }
    let lambda = spec.lambda;
    let chebyshev_bound = 1.0 / (beta_j * delta * delta * lambda);
    if !(chebyshev_bound < 1.0) {
        return Err(Error::invalid(format!(
            "need betaJ·Delta²·lambda > 1, got {}",
            beta_j * delta * delta * lambda
        )));
    }
    if n_samples < 2 {
        return Err(Error::invalid("need at least two samples"));
    }
    let sites = side * side;
    let replicas: Vec<Replica> = (0..n_samples as u64)
        .into_par_iter()
        .map(|r| {
            let theta = field.sample(seed, r);
            let exceed = theta.iter().filter(|t| t.abs() >= delta).count();
            Replica {
                inside: exceed == 0,
                exceed_fraction: exceed as f64 / sites as f64,
                sum_sq: theta.iter().map(|t| t * t).collect::<Neumaier>().sum(),
            }
        })
        .collect();

    let log_q_lambda = -lattice_free_energy(side, spec, lambda)?;
    let (box_probability, box_probability_stderr) =
        mean_and_stderr(replicas.iter().map(|r| f64::from(u8::from(r.inside))), n_samples);
    let (tail, tail_stderr) = mean_and_stderr(replicas.iter().map(|r| r.exceed_fraction), n_samples);
    let product_bound = (1.0 - tail).powi(sites as i32);
    let product_bound_stderr = sites as f64 * (1.0 - tail).powi(sites as i32 - 1) * tail_stderr;

    // E_λ[χ e^{(βJλ/2) Σϑ²}] with weights scaled by their maximum
    let log_w: Vec<f64> = replicas
        .iter()
        .filter(|r| r.inside)
        .map(|r| 0.5 * beta_j * lambda * r.sum_sq)
        .collect();
    let (log_q_delta, log_q_delta_stderr) = if log_w.is_empty() {
        (f64::NEG_INFINITY, f64::INFINITY)
    } else {
        let top = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let scaled = replicas.iter().map(|r| {
            if r.inside {
                (0.5 * beta_j * lambda * r.sum_sq - top).exp()
            } else {
                0.0
            }
        });
        let (mean, se) = mean_and_stderr(scaled, n_samples);
        let log_mean = top + mean.ln();
        (log_q_lambda + log_mean / sites as f64, se / mean / sites as f64)
    };

    Ok(GaussianBoxReport {
        side,
        spec: *spec,
        beta_j,
        delta,
        n_samples,
        seed,
        chebyshev_bound,
        log_q_lambda,
        lower_bracket: log_q_lambda + (1.0 - chebyshev_bound).ln(),
        upper_bracket: log_q_lambda + 0.5 * beta_j * lambda * delta * delta,
        box_probability,
        box_probability_stderr,
        tail,
        tail_stderr,
        product_bound,
        product_bound_stderr,
        log_q_delta,
        log_q_delta_stderr,
    })
}

/// Empirical against exact variance of one Fourier mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeVariance {
    pub n1: usize,
    pub n2: usize,
    pub expected: f64,
    pub empirical: f64,
    pub stderr: f64,
}

impl ModeVariance {
    pub fn z_score(&self) -> f64 {
        (self.empirical - self.expected) / self.stderr
    }
}

/// `|ϑ̂_k|² / L²` averaged over samples, for every mode.
pub fn mode_variances(
    side: usize,
    spec: &SpinWaveSpec,
    beta_j: f64,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<ModeVariance>> {
    let field = MassiveField::new(side, spec, beta_j)?;
    if n_samples < 2 {
        return Err(Error::invalid("need at least two samples"));
    }
    let sites = side * side;
    let powers: Vec<Vec<f64>> = (0..n_samples as u64)
        .into_par_iter()
        .map(|r| {
            let mut buf: Vec<Complex64> = field.sample(seed, r).into_iter().map(|t| Complex64::new(t, 0.0)).collect();
            field.fft.forward(&mut buf);
            buf.iter().map(|z| z.norm_sqr() / sites as f64).collect()
        })
        .collect();
    Ok((0..sites)
        .map(|m| {
            let (empirical, stderr) = mean_and_stderr(powers.iter().map(|p| p[m]), n_samples);
            let (n1, n2) = (m % side, m / side);
            ModeVariance {
                n1,
                n2,
                expected: field.mode_variance(n1, n2),
                empirical,
                stderr,
            }
        })
        .collect())
}
