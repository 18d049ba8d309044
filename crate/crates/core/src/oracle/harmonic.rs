//! Size of the cubic remainder when the Hamiltonian near a Néel state is
//! replaced by its quadratic form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::model::{self, CouplingParams, LatticeTorus, Parity, ReferenceFrame, SpinConfiguration};
use crate::sum::Neumaier;
use crate::{Error, Result};

/// `(8/3)(1 + γ)`: each bond contributes at most `|x|³/6` with `|x| ≤ 2Δ`.
pub fn harmonic_constant(gamma: f64) -> f64 {
    8.0 / 3.0 * (1.0 + gamma.abs())
}

/// Quadratic form `½ Σ_bonds w_b (−cos Δoffset_b) (ϑ_r − ϑ_r')²` of the
/// energy at the Néel state `frame`, deviations row-major.
pub fn quadratic_form(torus: LatticeTorus, frame: ReferenceFrame, params: &CouplingParams, theta: &[f64]) -> f64 {
    let side = torus.side() as isize;
    let mut acc = Neumaier::default();
    for (x, y) in torus.row_major() {
        let (xi, yi) = (x as isize, y as isize);
        let here = torus.index(x, y);
        let offset = frame.offset(Parity::of(x, y));
        let bonds = [(1, 1, params.j), (1, -1, params.j), (1, 0, params.j * params.gamma), (0, 1, params.j * params.gamma)];
        for (dx, dy, w) in bonds {
            let (xn, yn) = ((xi + dx).rem_euclid(side) as usize, (yi + dy).rem_euclid(side) as usize);
            let there = torus.index(xn, yn);
            let d_offset = offset - frame.offset(Parity::of(xn, yn));
            let d = theta[here] - theta[there];
            acc.add(-0.5 * w * d_offset.cos() * d * d);
        }
    }
    acc.sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicReport {
    pub side: usize,
    pub delta: f64,
    pub params: CouplingParams,
    pub n_samples: usize,
    pub seed: u64,
    /// Largest `|βH − I|`.
    pub sup_abs: f64,
    /// Largest `|βH − I| / (βJΔ³L²)`.
    pub sup_normalized: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Draws `n_samples` uniform Néel frames with i.i.d. deviations in
/// `[−Δ, Δ)`, sample `s` from stream `s` of `seed`, and records the largest
/// gap between the energy and its quadratic form.
pub fn harmonic_error_scan(
    side: usize,
    delta: f64,
    params: &CouplingParams,
    n_samples: usize,
    seed: u64,
) -> Result<HarmonicReport> {
    let torus = LatticeTorus::new(side)?;
    if !(delta > 0.0 && delta < std::f64::consts::FRAC_PI_2) {
        return Err(Error::invalid(format!("Delta must lie in (0, π/2), got {delta}")));
    }
    if n_samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let gaps: Vec<f64> = (0..n_samples as u64)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s);
            let pi = std::f64::consts::PI;
            let frame = ReferenceFrame::new(rng.random_range(-pi..pi), rng.random_range(-pi..pi));
            let theta: Vec<f64> = (0..torus.sites())
                .map(|_| delta * (2.0 * rng.random::<f64>() - 1.0))
                .collect();
            let config = SpinConfiguration::from_fn(torus, |x, y| {
                theta[torus.index(x, y)] + frame.offset(Parity::of(x, y))
            });
            (model::energy(&config, params) - quadratic_form(torus, frame, params, &theta)).abs()
        })
        .collect();
    let sup = gaps.iter().copied().fold(0.0, f64::max);
    let scale = params.j * delta.powi(3) * (side * side) as f64;
    let sup_normalized = sup / scale;
    let bound = harmonic_constant(params.gamma);
    Ok(HarmonicReport {
        side,
        delta,
        params: *params,
        n_samples,
        seed,
        sup_abs: params.beta * sup,
        sup_normalized,
        bound,
        holds: sup_normalized <= bound,
    })
}
