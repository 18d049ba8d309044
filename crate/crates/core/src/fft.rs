//! Two-dimensional FFTs on row-major `L × L` buffers.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Cached forward and inverse plans for one grid side. Transforms are
/// unnormalized: forward uses `e^{−i k·r}`, inverse `e^{+i k·r}`.
pub struct Fft2 {
    side: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(side: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            side,
            forward: planner.plan_fft_forward(side),
            inverse: planner.plan_fft_inverse(side),
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.forward);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
    }

    fn run(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let l = self.side;
        assert_eq!(data.len(), l * l, "buffer is not {l}×{l}");
        // rows
        plan.process(data);
        // columns
        let mut column = vec![Complex64::default(); l];
        for x in 0..l {
            for y in 0..l {
                column[y] = data[y * l + x];
            }
            plan.process(&mut column);
            for y in 0..l {
                data[y * l + x] = column[y];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn matches_direct_dft() {
        let l = 6;
        let input: Vec<Complex64> = (0..l * l).map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64).cos())).collect();
        let mut fast = input.clone();
        Fft2::new(l).forward(&mut fast);
        for k2 in 0..l {
            for k1 in 0..l {
                let mut acc = Complex64::default();
                for y in 0..l {
                    for x in 0..l {
                        let phase = -TAU * ((k1 * x + k2 * y) as f64) / l as f64;
                        acc += input[y * l + x] * Complex64::from_polar(1.0, phase);
                    }
                }
                assert!((acc - fast[k2 * l + k1]).norm() < 1e-10);
            }
        }
        let mut back = fast;
        Fft2::new(l).inverse(&mut back);
        for (a, b) in back.iter().zip(&input) {
            assert!((a / (l * l) as f64 - b).norm() < 1e-12);
        }
    }
}
