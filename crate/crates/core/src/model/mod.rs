//! Lattice geometry, the torus Hamiltonian, Néel ground states, the
//! deviation-frame transform and the basic observables.
//!
//! The energy carries the additive constant `2J` per site in the diagonal
//! term, so every Néel pair state has energy exactly zero. The raw dot-product
//! Hamiltonian differs from [`energy`] by `2 J L²`.

mod io;

pub use io::{read_csv, read_snapshot, snapshot_from_bytes, snapshot_to_bytes, write_csv, write_snapshot};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::angle::wrap;
use crate::error::{Error, Result};
use crate::sum::Neumaier;

/// Parity class of a site, `(x mod 2, y mod 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    EvenEven,
    OddEven,
    OddOdd,
    EvenOdd,
}

impl Parity {
    pub fn of(x: usize, y: usize) -> Self {
        match (x & 1, y & 1) {
            (0, 0) => Parity::EvenEven,
            (1, 0) => Parity::OddEven,
            (1, 1) => Parity::OddOdd,
            _ => Parity::EvenOdd,
        }
    }

    /// Sites with `x + y` even couple to each other through the diagonal bonds.
    pub fn on_even_sublattice(self) -> bool {
        matches!(self, Parity::EvenEven | Parity::OddOdd)
    }

    /// Whether the Néel offset of this class includes the extra π.
    pub fn flipped(self) -> bool {
        matches!(self, Parity::OddOdd | Parity::EvenOdd)
    }

    fn slot(self) -> usize {
        match self {
            Parity::EvenEven => 0,
            Parity::OddEven => 1,
            Parity::EvenOdd => 2,
            Parity::OddOdd => 3,
        }
    }
}

/// An `L × L` periodic square lattice.
///
/// Sites are stored parity-interleaved: the four parity classes occupy
/// contiguous quarters of every site array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LatticeTorus {
    side: usize,
}

impl LatticeTorus {
    /// A torus whose side is a positive multiple of four.
    pub fn new(side: usize) -> Result<Self> {
        if side == 0 || side % 4 != 0 {
            return Err(Error::invalid(format!("lattice side must be a positive multiple of 4, got {side}")));
        }
        Ok(Self { side })
    }

    /// A torus with any even side. Only intended for tiny exactly-solvable
    /// chains; the Néel states need `L % 4 == 0` to be consistent.
    pub fn with_even_side(side: usize) -> Result<Self> {
        if side < 2 || side % 2 != 0 {
            return Err(Error::invalid(format!("lattice side must be even and at least 2, got {side}")));
        }
        Ok(Self { side })
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    pub fn sites(&self) -> usize {
        self.side * self.side
    }

    /// Storage index of site `(x, y)`, both in `0..L`.
    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.side && y < self.side);
        let half = self.side / 2;
        let quarter = half * half;
        Parity::of(x, y).slot() * quarter + (y >> 1) * half + (x >> 1)
    }

    /// Storage index of the site at arbitrary integer coordinates.
    #[inline]
    pub fn index_wrapped(&self, x: isize, y: isize) -> usize {
        let l = self.side as isize;
        self.index(x.rem_euclid(l) as usize, y.rem_euclid(l) as usize)
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        let half = self.side / 2;
        let quarter = half * half;
        let (slot, rest) = (index / quarter, index % quarter);
        let (hy, hx) = (rest / half, rest % half);
        let (px, py) = match slot {
            0 => (0, 0),
            1 => (1, 0),
            2 => (0, 1),
            _ => (1, 1),
        };
        (2 * hx + px, 2 * hy + py)
    }

    /// Sites in row-major order (y outer, x inner).
    pub fn row_major(&self) -> impl Iterator<Item = (usize, usize)> {
        let l = self.side;
        (0..l).flat_map(move |y| (0..l).map(move |x| (x, y)))
    }
}

/// Coupling constants and temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    /// Overall coupling, positive.
    pub j: f64,
    /// Nearest- over next-nearest-neighbour coupling ratio.
    pub gamma: f64,
    /// Inverse temperature.
    pub beta: f64,
}

impl CouplingParams {
    pub fn new(j: f64, gamma: f64, beta: f64) -> Result<Self> {
        if !(j > 0.0) || !j.is_finite() {
            return Err(Error::invalid(format!("J must be positive and finite, got {j}")));
        }
        if !gamma.is_finite() {
            return Err(Error::invalid("gamma must be finite"));
        }
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::invalid(format!("beta must be non-negative and finite, got {beta}")));
        }
        Ok(Self { j, gamma, beta })
    }

    /// Checks the coupling ratio is in the open spin-wave range (0, 2).
    pub fn require_spin_wave_range(&self) -> Result<()> {
        if self.gamma > 0.0 && self.gamma < 2.0 {
            Ok(())
        } else {
            Err(Error::invalid(format!("gamma must lie in (0, 2), got {}", self.gamma)))
        }
    }

    pub fn beta_j(&self) -> f64 {
        self.beta * self.j
    }
}

/// Angles θ_r on the torus, each in (−π, π].
#[derive(Debug, Clone, PartialEq)]
pub struct SpinConfiguration {
    torus: LatticeTorus,
    angles: Vec<f64>,
}

impl SpinConfiguration {
    pub fn uniform(torus: LatticeTorus, angle: f64) -> Self {
        Self {
            torus,
            angles: vec![wrap(angle); torus.sites()],
        }
    }

    pub fn from_fn(torus: LatticeTorus, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut angles = vec![0.0; torus.sites()];
        for (x, y) in torus.row_major() {
            angles[torus.index(x, y)] = wrap(f(x, y));
        }
        Self { torus, angles }
    }

    /// Builds a configuration from angles listed row-major.
    pub fn from_row_major(torus: LatticeTorus, row_major: &[f64]) -> Result<Self> {
        if row_major.len() != torus.sites() {
            return Err(Error::invalid(format!(
                "expected {} angles for L = {}, got {}",
                torus.sites(),
                torus.side(),
                row_major.len()
            )));
        }
        let l = torus.side();
        Ok(Self::from_fn(torus, |x, y| row_major[y * l + x]))
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        self.torus.row_major().map(|(x, y)| self.angle(x, y)).collect()
    }

    #[inline]
    pub fn torus(&self) -> LatticeTorus {
        self.torus
    }

    #[inline]
    pub fn angle(&self, x: usize, y: usize) -> f64 {
        self.angles[self.torus.index(x, y)]
    }

    #[inline]
    pub fn angle_wrapped(&self, x: isize, y: isize) -> f64 {
        self.angles[self.torus.index_wrapped(x, y)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, angle: f64) {
        let i = self.torus.index(x, y);
        self.angles[i] = wrap(angle);
    }

    /// Raw storage, parity-interleaved.
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub(crate) fn angles_mut(&mut self) -> &mut [f64] {
        &mut self.angles
    }

    /// Rotates every spin by `alpha`.
    pub fn rotated(&self, alpha: f64) -> Self {
        Self {
            torus: self.torus,
            angles: self.angles.iter().map(|&a| wrap(a + alpha)).collect(),
        }
    }

    /// Rotates the lattice by 90°: the spin at `(x, y)` moves to `(−y, x)`.
    /// Spins themselves are not rotated.
    pub fn lattice_rotated(&self) -> Self {
        let l = self.torus.side() as isize;
        Self::from_fn(self.torus, |x, y| {
            // new(x, y) = old(R⁻¹(x, y)) with R⁻¹(x, y) = (y, −x)
            self.angle_wrapped(y as isize, (l - x as isize) % l)
        })
    }
}

/// Global and relative Néel angles (θ*, φ*).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFrame {
    pub theta_star: f64,
    pub phi_star: f64,
}

impl ReferenceFrame {
    pub fn new(theta_star: f64, phi_star: f64) -> Self {
        Self {
            theta_star: wrap(theta_star),
            phi_star: wrap(phi_star),
        }
    }

    pub fn from_degrees(theta_star: f64, phi_star: f64) -> Self {
        Self::new(theta_star.to_radians(), phi_star.to_radians())
    }

    /// Ground-state angle at a site of the given parity.
    #[inline]
    pub fn offset(&self, parity: Parity) -> f64 {
        match parity {
            Parity::EvenEven => self.theta_star,
            Parity::OddEven => self.theta_star + self.phi_star,
            Parity::OddOdd => self.theta_star + PI,
            Parity::EvenOdd => self.theta_star + self.phi_star + PI,
        }
    }
}

/// Deviations ϑ_r from a Néel pair state.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationField {
    pub deviations: SpinConfiguration,
    pub frame: ReferenceFrame,
}

impl DeviationField {
    /// Reassembles the angles θ_r = ϑ_r + offset(r).
    pub fn to_configuration(&self) -> SpinConfiguration {
        let dev = &self.deviations;
        SpinConfiguration::from_fn(dev.torus(), |x, y| dev.angle(x, y) + self.frame.offset(Parity::of(x, y)))
    }

    pub fn max_abs(&self) -> f64 {
        self.deviations.angles().iter().fold(0.0, |m, a| m.max(a.abs()))
    }
}

/// Per-configuration measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservableRecord {
    pub energy_per_site: f64,
    pub nn_x: f64,
    pub nn_y: f64,
    pub nnn: f64,
    pub order_param_mean: f64,
    pub theta_star_est: f64,
    pub phi_star_est: f64,
}

/// Bond-averaged spin products.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCorrelations {
    pub nn_x: f64,
    pub nn_y: f64,
    /// Both diagonals averaged together.
    pub nnn: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderParameterField {
    /// n_r, row-major.
    pub values: Vec<f64>,
    pub mean: f64,
}

/// All eight bonds incident on a site.
pub(crate) const INCIDENT_BONDS: [(isize, isize, Bond); 8] = [
    (1, 1, Bond::Diagonal),
    (1, -1, Bond::Diagonal),
    (-1, 1, Bond::Diagonal),
    (-1, -1, Bond::Diagonal),
    (1, 0, Bond::X),
    (-1, 0, Bond::X),
    (0, 1, Bond::Y),
    (0, -1, Bond::Y),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Bond {
    Diagonal,
    X,
    Y,
}

impl Bond {
    #[inline]
    pub(crate) fn weight(self, params: &CouplingParams) -> f64 {
        match self {
            Bond::Diagonal => params.j,
            Bond::X | Bond::Y => params.j * params.gamma,
        }
    }
}

/// The torus Hamiltonian
/// `H = J Σ_r {2 + cos(θ_r − θ_{r+x+y}) + cos(θ_r − θ_{r+x−y})} + Jγ Σ_r {cos(θ_r − θ_{r+x}) + cos(θ_r − θ_{r+y})}`,
/// summed row-major with compensation.
pub fn energy(config: &SpinConfiguration, params: &CouplingParams) -> f64 {
    let mut acc = Neumaier::default();
    for (x, y) in config.torus().row_major() {
        let t = config.angle(x, y);
        let (xi, yi) = (x as isize, y as isize);
        let diag = 2.0 + (t - config.angle_wrapped(xi + 1, yi + 1)).cos() + (t - config.angle_wrapped(xi + 1, yi - 1)).cos();
        let nn = (t - config.angle_wrapped(xi + 1, yi)).cos() + (t - config.angle_wrapped(xi, yi + 1)).cos();
        acc.add(params.j * diag + params.j * params.gamma * nn);
    }
    acc.sum()
}

/// Energy change from setting the spin at `(x, y)` to `new_angle`, from the
/// eight incident bonds only.
pub fn energy_delta(config: &SpinConfiguration, x: usize, y: usize, new_angle: f64, params: &CouplingParams) -> f64 {
    let old = config.angle(x, y);
    // cos(a) − cos(b) = −2 sin((a+b)/2) sin((a−b)/2)
    let mid = 0.5 * (new_angle + old);
    let half = 0.5 * (new_angle - old);
    let (xi, yi) = (x as isize, y as isize);
    let mut s = 0.0;
    for &(dx, dy, bond) in &INCIDENT_BONDS {
        s += bond.weight(params) * (mid - config.angle_wrapped(xi + dx, yi + dy)).sin();
    }
    -2.0 * half.sin() * s
}

/// ∂H/∂θ_r for every site, indexed like the configuration's storage.
pub fn gradient(config: &SpinConfiguration, params: &CouplingParams) -> Vec<f64> {
    let torus = config.torus();
    let mut grad = vec![0.0; torus.sites()];
    for (x, y) in torus.row_major() {
        let t = config.angle(x, y);
        let (xi, yi) = (x as isize, y as isize);
        let g: f64 = INCIDENT_BONDS
            .iter()
            .map(|&(dx, dy, bond)| -bond.weight(params) * (t - config.angle_wrapped(xi + dx, yi + dy)).sin())
            .sum();
        grad[torus.index(x, y)] = g;
    }
    grad
}

/// The Néel pair state labelled by `frame`.
pub fn neel_state(torus: LatticeTorus, frame: ReferenceFrame) -> Result<SpinConfiguration> {
    if torus.side() % 4 != 0 {
        return Err(Error::invalid("Néel states need a side that is a multiple of 4"));
    }
    Ok(SpinConfiguration::from_fn(torus, |x, y| frame.offset(Parity::of(x, y))))
}

/// Deviations from the Néel state labelled by `frame`, reduced to (−π, π].
pub fn deviations(config: &SpinConfiguration, frame: ReferenceFrame) -> DeviationField {
    let deviations = SpinConfiguration::from_fn(config.torus(), |x, y| config.angle(x, y) - frame.offset(Parity::of(x, y)));
    DeviationField { deviations, frame }
}

/// n_r = (S_{r+x} − S_{r+y})·S_r at every site, positive in the x-aligned state.
pub fn order_parameter_field(config: &SpinConfiguration) -> OrderParameterField {
    let torus = config.torus();
    let mut acc = Neumaier::default();
    let values: Vec<f64> = torus
        .row_major()
        .map(|(x, y)| {
            let t = config.angle(x, y);
            let (xi, yi) = (x as isize, y as isize);
            let n = (config.angle_wrapped(xi + 1, yi) - t).cos() - (config.angle_wrapped(xi, yi + 1) - t).cos();
            acc.add(n);
            n
        })
        .collect();
    let mean = acc.sum() / torus.sites() as f64;
    OrderParameterField { values, mean }
}

pub fn pair_correlations(config: &SpinConfiguration) -> PairCorrelations {
    let torus = config.torus();
    let (mut nx, mut ny, mut nnn) = (Neumaier::default(), Neumaier::default(), Neumaier::default());
    for (x, y) in torus.row_major() {
        let t = config.angle(x, y);
        let (xi, yi) = (x as isize, y as isize);
        nx.add((t - config.angle_wrapped(xi + 1, yi)).cos());
        ny.add((t - config.angle_wrapped(xi, yi + 1)).cos());
        nnn.add((t - config.angle_wrapped(xi + 1, yi + 1)).cos());
        nnn.add((t - config.angle_wrapped(xi + 1, yi - 1)).cos());
    }
    let n = torus.sites() as f64;
    PairCorrelations {
        nn_x: nx.sum() / n,
        nn_y: ny.sum() / n,
        nnn: nnn.sum() / (2.0 * n),
    }
}
