//! Good and bad blocks.
//!
//! A block is the `(B+1) × (B+1)` square of sites with corner `(B t1, B t2)`.
//! It is good when one Néel frame `(θ*, φ*)` with φ* within κ of 0 or π
//! puts every spin of the block within Δ of its Néel angle. The frame is
//! existential, so the decision is made on arc sets: each spin of the
//! `x + y` even sublattice confines θ* to an open arc, each spin of the odd
//! sublattice confines ψ* = θ* + φ*, and the block is good iff the
//! difference set `A_odd − A_even` meets the κ-window around 0 or π.

mod arcs;

pub use arcs::ArcSet;

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::angle::{circular_distance, wrap};
use crate::error::{Error, Result};
use crate::model::{Parity, SpinConfiguration};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockCriteria {
    /// Block scale; blocks are `(B+1)²` sites and translate by `B`.
    #[serde(rename = "B")]
    pub b: usize,
    #[serde(rename = "Delta")]
    pub delta: f64,
    pub kappa: f64,
    /// Number of reference relative angles `φ_i = 2π(i−1)/s`.
    pub s: usize,
}

/// Calibration choice for the goodness window.
pub const DEFAULT_KAPPA: f64 = 0.2;

impl BlockCriteria {
    pub fn new(b: usize, delta: f64, kappa: f64, s: usize) -> Result<Self> {
        let c = Self { b, delta, kappa, s };
        c.validate()?;
        Ok(c)
    }

    /// Criteria with the smallest admissible `s`.
    pub fn with_min_s(b: usize, delta: f64, kappa: f64) -> Result<Self> {
        Self::new(b, delta, kappa, min_reference_angles(delta))
    }

    pub fn validate(&self) -> Result<()> {
        if self.b < 2 || self.b % 2 != 0 {
            return Err(Error::invalid(format!("block scale B must be even and at least 2, got {}", self.b)));
        }
        if !(self.delta > 0.0 && self.delta < PI / 2.0) {
            return Err(Error::invalid(format!("Delta must lie in (0, π/2), got {}", self.delta)));
        }
        if !(self.kappa > 0.0 && self.kappa < PI / 2.0) {
            return Err(Error::invalid(format!("kappa must lie in (0, π/2), got {}", self.kappa)));
        }
        if !(self.s as f64 * self.delta > 2.0 * TAU) {
            return Err(Error::invalid(format!(
                "s·Delta must exceed 4π for the reference angles to cover; s = {}, Delta = {}",
                self.s, self.delta
            )));
        }
        Ok(())
    }

    /// Threshold of the energy-violation test, `Δ / (2B)`.
    pub fn energy_threshold(&self) -> f64 {
        self.delta / (2.0 * self.b as f64)
    }

    /// `φ_i` for `i = 1..=s`.
    pub fn reference_angle(&self, i: usize) -> f64 {
        wrap(TAU * (i - 1) as f64 / self.s as f64)
    }

    pub fn check_torus(&self, side: usize) -> Result<()> {
        if side % (2 * self.b) != 0 {
            return Err(Error::invalid(format!("L = {side} is not an even multiple of B = {}", self.b)));
        }
        Ok(())
    }
}

/// Smallest `s` with `s Δ > 4π`.
pub fn min_reference_angles(delta: f64) -> usize {
    (2.0 * TAU / delta).floor() as usize + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Phase {
    Zero,
    Pi,
}

impl Phase {
    pub fn angle(self) -> f64 {
        match self {
            Phase::Zero => 0.0,
            Phase::Pi => PI,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum BlockLabel {
    /// `G0` or `G180`: the feasible θ* arcs for that phase and one feasible φ*.
    Good { phase: Phase, theta_star: ArcSet, phi_star: f64 },
    /// A diagonal pair whose angle difference is at least `Δ/(2B)` from π.
    BadEnergy { site: (usize, usize), partner: (usize, usize), gap: f64 },
    /// Indices `i` (1-based) whose `φ_i` admits a feasible θ*.
    BadSpinWave { feasible: Vec<usize> },
}

impl BlockLabel {
    pub fn name(&self) -> &'static str {
        match self {
            BlockLabel::Good { phase: Phase::Zero, .. } => "G0",
            BlockLabel::Good { phase: Phase::Pi, .. } => "G180",
            BlockLabel::BadEnergy { .. } => "BadEnergy",
            BlockLabel::BadSpinWave { .. } => "BadSW",
        }
    }

    pub fn phase(&self) -> Option<Phase> {
        match self {
            BlockLabel::Good { phase, .. } => Some(*phase),
            _ => None,
        }
    }

    pub fn is_good(&self) -> bool {
        self.phase().is_some()
    }
}

/// Sites of the block at translate `(t1, t2)`, wrapped onto the torus.
pub fn block_sites(side: usize, b: usize, t: (usize, usize)) -> impl Iterator<Item = (usize, usize)> {
    let (x0, y0) = (b * t.0, b * t.1);
    (0..=b).flat_map(move |j| (0..=b).map(move |i| ((x0 + i) % side, (y0 + j) % side)))
}

/// The arc sets behind a block's classification.
#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    /// θ* values within Δ of every even-sublattice spin.
    pub even: ArcSet,
    /// ψ* = θ* + φ* values within Δ of every odd-sublattice spin.
    pub odd: ArcSet,
    /// Feasible relative angles `odd − even`.
    pub relative: ArcSet,
}

impl Feasibility {
    fn window(phase: Phase, kappa: f64) -> ArcSet {
        ArcSet::around(phase.angle(), kappa)
    }

    pub fn admits(&self, phase: Phase, kappa: f64) -> bool {
        !self.relative.intersect(&Self::window(phase, kappa)).is_empty()
    }

    /// Feasible θ* given that φ* lies in `allowed`.
    pub fn theta_star_given(&self, allowed: &ArcSet) -> ArcSet {
        self.even.intersect(&self.odd.minkowski_difference(allowed))
    }
}

fn check_origin(config: &SpinConfiguration, criteria: &BlockCriteria, t: (usize, usize)) -> Result<()> {
    criteria.validate()?;
    let side = config.torus().side();
    if side < criteria.b || t.0 * criteria.b >= side || t.1 * criteria.b >= side {
        return Err(Error::invalid(format!("block translate {t:?} lies outside the L = {side} torus")));
    }
    Ok(())
}

pub fn feasibility(config: &SpinConfiguration, criteria: &BlockCriteria, t: (usize, usize)) -> Result<Feasibility> {
    check_origin(config, criteria, t)?;
    Ok(feasibility_unchecked(config, criteria, t))
}

fn feasibility_unchecked(config: &SpinConfiguration, criteria: &BlockCriteria, t: (usize, usize)) -> Feasibility {
    let side = config.torus().side();
    let sites = block_sites(side, criteria.b, t).map(|(x, y)| (Parity::of(x, y), config.angle(x, y)));
    feasibility_of_sites(sites, criteria.delta)
}

/// Feasible frames for an arbitrary set of spins, each given with the
/// parity class of its site.
pub fn feasibility_of_sites(sites: impl IntoIterator<Item = (Parity, f64)>, delta: f64) -> Feasibility {
    let mut even = ArcSet::full();
    let mut odd = ArcSet::full();
    for (parity, angle) in sites {
        // offsets relative to θ* (even sublattice) or ψ* (odd sublattice)
        let offset = if parity.flipped() { PI } else { 0.0 };
        let arc = ArcSet::around(angle - offset, delta);
        if parity.on_even_sublattice() {
            even = even.intersect(&arc);
        } else {
            odd = odd.intersect(&arc);
        }
    }
    let relative = if even.is_empty() || odd.is_empty() {
        ArcSet::empty()
    } else {
        odd.minkowski_difference(&even)
    };
    Feasibility { even, odd, relative }
}

/// First diagonal pair of the block, row-major, whose difference is at least
/// `Δ/(2B)` away from π.
fn energy_violation(config: &SpinConfiguration, criteria: &BlockCriteria, t: (usize, usize)) -> Option<BlockLabel> {
    let side = config.torus().side();
    let b = criteria.b;
    let threshold = criteria.energy_threshold();
    let at = |i: usize, j: usize| ((b * t.0 + i) % side, (b * t.1 + j) % side);
    for j in 0..b {
        for i in 0..b {
            for (r, rp) in [(at(i, j), at(i + 1, j + 1)), (at(i + 1, j), at(i, j + 1))] {
                let gap = circular_distance(config.angle(r.0, r.1) - config.angle(rp.0, rp.1), PI);
                if gap >= threshold {
                    return Some(BlockLabel::BadEnergy { site: r, partner: rp, gap });
                }
            }
        }
    }
    None
}

pub fn classify_block(config: &SpinConfiguration, t: (usize, usize), criteria: &BlockCriteria) -> Result<BlockLabel> {
    check_origin(config, criteria, t)?;
    Ok(classify_unchecked(config, t, criteria))
}

fn classify_unchecked(config: &SpinConfiguration, t: (usize, usize), criteria: &BlockCriteria) -> BlockLabel {
    let f = feasibility_unchecked(config, criteria, t);
    for phase in [Phase::Zero, Phase::Pi] {
        let window = Feasibility::window(phase, criteria.kappa);
        let phis = f.relative.intersect(&window);
        if let Some(phi_star) = phis.representative() {
            return BlockLabel::Good {
                phase,
                theta_star: f.theta_star_given(&window),
                phi_star,
            };
        }
    }
    if let Some(label) = energy_violation(config, criteria, t) {
        return label;
    }
    let feasible = (1..=criteria.s).filter(|&i| f.relative.contains(criteria.reference_angle(i))).collect();
    BlockLabel::BadSpinWave { feasible }
}

/// A `G0` block next to a `G180` block, `first` to the left of or below `second`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PhaseBoundary {
    pub first: (usize, usize),
    pub second: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockField {
    pub side: usize,
    pub criteria: BlockCriteria,
    /// Number of translates per direction, `L / B`.
    pub blocks_per_side: usize,
    /// Labels indexed `t2 * blocks_per_side + t1`.
    pub labels: Vec<BlockLabel>,
    /// Adjacent blocks of opposite good phase.
    pub boundaries: Vec<PhaseBoundary>,
}

/// Pairs of edge-adjacent translates (torus-wrapped) carrying opposite
/// good phases, for labels indexed `t2 * n + t1`.
pub fn phase_boundaries(labels: &[BlockLabel], n: usize) -> Vec<PhaseBoundary> {
    let mut boundaries = Vec::new();
    for t2 in 0..n {
        for t1 in 0..n {
            let here = labels[t2 * n + t1].phase();
            for other in [((t1 + 1) % n, t2), (t1, (t2 + 1) % n)] {
                let there = labels[other.1 * n + other.0].phase();
                if let (Some(a), Some(b)) = (here, there) {
                    if a != b {
                        boundaries.push(PhaseBoundary {
                            first: (t1, t2),
                            second: other,
                        });
                    }
                }
            }
        }
    }
    boundaries
}

pub fn block_field(config: &SpinConfiguration, criteria: &BlockCriteria) -> Result<BlockField> {
    criteria.validate()?;
    let side = config.torus().side();
    criteria.check_torus(side)?;
    let n = side / criteria.b;
    let labels: Vec<BlockLabel> = (0..n * n)
        .into_par_iter()
        .map(|k| classify_unchecked(config, (k % n, k / n), criteria))
        .collect();
    let boundaries = phase_boundaries(&labels, n);
    Ok(BlockField {
        side,
        criteria: *criteria,
        blocks_per_side: n,
        labels,
        boundaries,
    })
}

impl BlockField {
    pub fn label(&self, t1: usize, t2: usize) -> &BlockLabel {
        &self.labels[t2 * self.blocks_per_side + t1]
    }

    pub fn good_fraction(&self) -> f64 {
        self.labels.iter().filter(|l| l.is_good()).count() as f64 / self.labels.len() as f64
    }

    /// Columns `t1,t2,label,phi_witness_deg,n_feasible_i`. The witness is
    /// empty for bad blocks; the count is zero for all but `BadSW`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t1,t2,label,phi_witness_deg,n_feasible_i\n");
        let n = self.blocks_per_side;
        for (k, label) in self.labels.iter().enumerate() {
            let (witness, count) = match label {
                BlockLabel::Good { phi_star, .. } => (format!("{}", phi_star.to_degrees()), 0),
                BlockLabel::BadEnergy { .. } => (String::new(), 0),
                BlockLabel::BadSpinWave { feasible } => (String::new(), feasible.len()),
            };
            let _ = writeln!(out, "{},{},{},{},{}", k % n, k / n, label.name(), witness, count);
        }
        out
    }

    /// Criteria, lattice size and label counts.
    pub fn sidecar_json(&self) -> serde_json::Value {
        let count = |name: &str| self.labels.iter().filter(|l| l.name() == name).count();
        serde_json::json!({
            "L": self.side,
            "criteria": self.criteria,
            "blocks_per_side": self.blocks_per_side,
            "counts": {
                "G0": count("G0"),
                "G180": count("G180"),
                "BadEnergy": count("BadEnergy"),
                "BadSW": count("BadSW"),
            },
            "phase_boundaries": self.boundaries.len(),
        })
    }
}

/// Block parameters as functions of βJ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Schedule {
    pub beta_j: f64,
    /// `(βJ)^(−5/12)`.
    pub delta: f64,
    /// `max(2, nearest even integer to log βJ)`.
    pub b: usize,
    /// `⌈4π/Δ⌉ + 1`.
    pub s: usize,
    pub beta_j_delta_cubed: f64,
    pub beta_j_delta_squared: f64,
}

impl Schedule {
    pub fn criteria(&self, kappa: f64) -> Result<BlockCriteria> {
        BlockCriteria::new(self.b, self.delta, kappa, self.s)
    }
}

pub fn default_schedule(beta_j: f64) -> Result<Schedule> {
    if !(beta_j > 1.0) || !beta_j.is_finite() {
        return Err(Error::invalid(format!("the block schedule needs βJ > 1, got {beta_j}")));
    }
    let delta = beta_j.powf(-5.0 / 12.0);
    let b = (2.0 * (beta_j.ln() / 2.0).round()).max(2.0) as usize;
    let s = (2.0 * TAU / delta).ceil() as usize + 1;
    Ok(Schedule {
        beta_j,
        delta,
        b,
        s,
        beta_j_delta_cubed: beta_j * delta.powi(3),
        beta_j_delta_squared: beta_j * delta * delta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Frequency {
    pub count: usize,
    pub fraction: f64,
    /// Binomial standard error `√(p(1−p)/n)`.
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencyTable {
    pub blocks: usize,
    pub g0: Frequency,
    pub g180: Frequency,
    pub bad_energy: Frequency,
    pub bad_spin_wave: Frequency,
}

pub fn event_frequencies(snapshots: &[SpinConfiguration], criteria: &BlockCriteria) -> Result<FrequencyTable> {
    if snapshots.is_empty() {
        return Err(Error::invalid("no snapshots to classify"));
    }
    let mut counts = [0usize; 4];
    let mut blocks = 0;
    for config in snapshots {
        let field = block_field(config, criteria)?;
        for label in &field.labels {
            let slot = match label.name() {
                "G0" => 0,
                "G180" => 1,
                "BadEnergy" => 2,
                _ => 3,
            };
            counts[slot] += 1;
        }
        blocks += field.labels.len();
    }
    let freq = |count: usize| {
        let p = count as f64 / blocks as f64;
        Frequency {
            count,
            fraction: p,
            stderr: (p * (1.0 - p) / blocks as f64).sqrt(),
        }
    };
    Ok(FrequencyTable {
        blocks,
        g0: freq(counts[0]),
        g180: freq(counts[1]),
        bad_energy: freq(counts[2]),
        bad_spin_wave: freq(counts[3]),
    })
}
