//! Single-site Metropolis sampling of the torus Gibbs measure.
//!
//! Randomness is keyed by `(seed, sweep, site)`: every sweep owns a ChaCha8
//! stream selected by its index, and the site at row-major position `i`
//! consumes words `4i..4i+4` of it (one proposal draw, one acceptance draw),
//! whether or not the move is accepted.

mod plan;
mod series;

pub use plan::{Init, RunPlan};
pub use series::{batch_means, MeanEstimate, SeriesEntry, TimeSeries};

use std::f64::consts::{PI, TAU};
use std::path::PathBuf;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::angle::{self, wrap};
use crate::error::{Error, Result};
use crate::model::{
    self, CouplingParams, ObservableRecord, Parity, ReferenceFrame, SpinConfiguration,
};
use crate::sum::Neumaier;

/// Single-site proposal kernels. Both are symmetric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Proposal {
    /// θ → θ + U(−width, width).
    Continuous { width: f64 },
    /// θ → θ + 2πm/q with m uniform in 1..q; keeps a q-clock state on the clock.
    Clock { q: u32 },
}

/// Per-sweep random streams derived from one seed.
#[derive(Debug, Clone)]
pub struct SweepStreams {
    base: ChaCha8Rng,
}

/// Stream index reserved for drawing random initial states.
const INIT_STREAM: u64 = u64::MAX;

impl SweepStreams {
    pub fn new(seed: u64) -> Self {
        Self {
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Stream for global sweep `sweep`, positioned at its first word.
    pub fn for_sweep(&self, sweep: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(sweep);
        rng.set_word_pos(0);
        rng
    }
}

/// Uniform in [0, 1) from the top 53 bits.
#[inline]
fn unit(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOutcome {
    pub accepted: usize,
    /// Sum of the energy changes of accepted moves.
    pub energy_change: f64,
}

/// A configuration with the per-site data a sweep needs: neighbour
/// indices, bond weights and cached `cos θ`, `sin θ`.
pub struct Chain {
    config: SpinConfiguration,
    params: CouplingParams,
    cos: Vec<f64>,
    sin: Vec<f64>,
    /// Storage indices of the eight neighbours, by storage index.
    neighbours: Vec<[u32; 8]>,
    weights: [f64; 8],
    /// Storage indices in row-major visiting order.
    order: Vec<u32>,
}

impl Chain {
    pub fn new(config: SpinConfiguration, params: CouplingParams) -> Self {
        let torus = config.torus();
        let mut neighbours = vec![[0u32; 8]; torus.sites()];
        let mut order = Vec::with_capacity(torus.sites());
        for (x, y) in torus.row_major() {
            let i = torus.index(x, y);
            order.push(i as u32);
            for (slot, &(dx, dy, _)) in model::INCIDENT_BONDS.iter().enumerate() {
                neighbours[i][slot] = torus.index_wrapped(x as isize + dx, y as isize + dy) as u32;
            }
        }
        let weights = model::INCIDENT_BONDS.map(|(_, _, bond)| bond.weight(&params));
        let (sin, cos) = config.angles().iter().map(|a| a.sin_cos()).unzip();
        Self {
            config,
            params,
            cos,
            sin,
            neighbours,
            weights,
            order,
        }
    }

    pub fn config(&self) -> &SpinConfiguration {
        &self.config
    }

    pub fn into_config(self) -> SpinConfiguration {
        self.config
    }

    /// One Metropolis pass over the sites in row-major order.
    pub fn sweep(&mut self, proposal: Proposal, rng: &mut impl RngCore) -> SweepOutcome {
        let beta = self.params.beta;
        let mut accepted = 0;
        let mut change = Neumaier::default();
        for &i in &self.order {
            let i = i as usize;
            let old = self.config.angles()[i];
            let u_prop = unit(rng);
            let u_acc = unit(rng);
            let new = match proposal {
                Proposal::Continuous { width } => wrap(old + width * (2.0 * u_prop - 1.0)),
                Proposal::Clock { q } => {
                    let m = 1 + (u_prop * (q - 1) as f64) as u32;
                    wrap(old + TAU * m as f64 / q as f64)
                }
            };
            // Σ_n w_n sin(mid − θ_n) = sin(mid) Σ w cos θ_n − cos(mid) Σ w sin θ_n
            let (mut c, mut s) = (0.0, 0.0);
            for (slot, &n) in self.neighbours[i].iter().enumerate() {
                c += self.weights[slot] * self.cos[n as usize];
                s += self.weights[slot] * self.sin[n as usize];
            }
            let (sin_mid, cos_mid) = (0.5 * (new + old)).sin_cos();
            let delta = -2.0 * (0.5 * (new - old)).sin() * (sin_mid * c - cos_mid * s);
            if delta <= 0.0 || u_acc < (-beta * delta).exp() {
                self.config.angles_mut()[i] = new;
                (self.sin[i], self.cos[i]) = new.sin_cos();
                accepted += 1;
                change.add(delta);
            }
        }
        SweepOutcome {
            accepted,
            energy_change: change.sum(),
        }
    }
}

/// One Metropolis pass over the sites in row-major order. Each proposal is
/// accepted with probability `min(1, e^{−βΔH})`.
pub fn sweep(config: &mut SpinConfiguration, params: &CouplingParams, proposal: Proposal, rng: &mut impl RngCore) -> SweepOutcome {
    let mut chain = Chain::new(std::mem::replace(config, SpinConfiguration::uniform(config.torus(), 0.0)), *params);
    let out = chain.sweep(proposal, rng);
    *config = chain.into_config();
    out
}

/// Frame estimate with the mean resultant lengths of the two parity
/// classes it was read from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameEstimate {
    pub frame: ReferenceFrame,
    pub resultant_even: f64,
    pub resultant_odd: f64,
}

/// θ*: circular mean over the `(even, even)` sites; φ*: circular mean over
/// the `(odd, even)` sites minus θ*.
pub fn estimate_frame(config: &SpinConfiguration) -> Result<FrameEstimate> {
    let torus = config.torus();
    let class = |p: Parity| {
        torus
            .row_major()
            .filter(move |&(x, y)| Parity::of(x, y) == p)
            .map(move |(x, y)| config.angle(x, y))
    };
    let (theta, r_even) = angle::circular_mean(class(Parity::EvenEven)).ok_or(Error::DegenerateMean)?;
    let (psi, r_odd) = angle::circular_mean(class(Parity::OddEven)).ok_or(Error::DegenerateMean)?;
    Ok(FrameEstimate {
        frame: ReferenceFrame::new(theta, psi - theta),
        resultant_even: r_even,
        resultant_odd: r_odd,
    })
}

/// All observables of one configuration. Frame estimates are NaN when a
/// circular mean is undefined.
pub fn observe(config: &SpinConfiguration, params: &CouplingParams) -> ObservableRecord {
    let corr = model::pair_correlations(config);
    let order = model::order_parameter_field(config);
    let (theta_star_est, phi_star_est) = match estimate_frame(config) {
        Ok(est) => (est.frame.theta_star, est.frame.phi_star),
        Err(_) => (f64::NAN, f64::NAN),
    };
    ObservableRecord {
        energy_per_site: model::energy(config, params) / config.torus().sites() as f64,
        nn_x: corr.nn_x,
        nn_y: corr.nn_y,
        nnn: corr.nnn,
        order_param_mean: order.mean,
        theta_star_est,
        phi_star_est,
    }
}

/// Builds the plan's starting configuration.
pub fn initial_configuration(plan: &RunPlan) -> Result<SpinConfiguration> {
    let torus = plan.torus()?;
    match &plan.init {
        Init::Random => {
            let mut rng = SweepStreams::new(plan.seed).for_sweep(INIT_STREAM);
            Ok(SpinConfiguration::from_fn(torus, |_, _| PI - TAU * unit(&mut rng)))
        }
        Init::Neel {
            theta_star_deg,
            phi_star_deg,
        } => model::neel_state(torus, ReferenceFrame::from_degrees(*theta_star_deg, *phi_star_deg)),
        Init::Snapshot(path) => {
            let config = model::read_snapshot(path)?;
            if config.torus() != torus {
                return Err(Error::invalid(format!(
                    "snapshot {} has L = {}, plan has L = {}",
                    path.display(),
                    config.torus().side(),
                    plan.side
                )));
            }
            Ok(config)
        }
    }
}

pub struct RunOutput {
    pub series: TimeSeries,
    pub final_config: SpinConfiguration,
    pub snapshots: Vec<PathBuf>,
}

const ADAPT_WINDOW: u64 = 50;
const DRIFT_CHECK_EVERY: u64 = 1000;

pub fn run(plan: &RunPlan) -> Result<RunOutput> {
    plan.validate()?;
    let config = initial_configuration(plan)?;
    run_from(plan, config)
}

/// Runs `plan` from an explicit starting configuration, ignoring `plan.init`.
pub fn run_from(plan: &RunPlan, config: SpinConfiguration) -> Result<RunOutput> {
    plan.validate()?;
    if config.torus() != plan.torus()? {
        return Err(Error::invalid("starting configuration does not match the plan's lattice"));
    }
    let params = plan.params()?;
    let streams = SweepStreams::new(plan.seed);
    let sites = config.torus().sites() as f64;

    let mut width = plan.proposal_width;
    let mut running = Neumaier::default();
    running.add(model::energy(&config, &params));
    let mut max_drift: f64 = 0.0;
    let mut chain = Chain::new(config, params);
    let mut drift_check = |config: &SpinConfiguration, running: &mut Neumaier| {
        let exact = model::energy(config, &params);
        max_drift = max_drift.max((running.sum() - exact).abs());
        *running = Neumaier::default();
        running.add(exact);
    };

    let mut burnin_accepted = 0usize;
    let mut window_accepted = 0usize;
    for s in 1..=plan.sweeps_burnin {
        let out = chain.sweep(Proposal::Continuous { width }, &mut streams.for_sweep(s));
        running.add(out.energy_change);
        burnin_accepted += out.accepted;
        window_accepted += out.accepted;
        if plan.adapt && s % ADAPT_WINDOW == 0 {
            let rate = window_accepted as f64 / (ADAPT_WINDOW as f64 * sites);
            if rate > 0.6 {
                width = (width * 1.1).min(PI);
            } else if rate < 0.4 {
                width *= 0.9;
            }
            window_accepted = 0;
        }
        if s % DRIFT_CHECK_EVERY == 0 {
            drift_check(chain.config(), &mut running);
        }
    }

    let mut entries = Vec::with_capacity((plan.sweeps_measure / plan.measure_every) as usize);
    let mut snapshots = Vec::new();
    let mut measured_accepted = 0usize;
    let mut since_entry = 0usize;
    for m in 1..=plan.sweeps_measure {
        let s = plan.sweeps_burnin + m;
        let out = chain.sweep(Proposal::Continuous { width }, &mut streams.for_sweep(s));
        running.add(out.energy_change);
        measured_accepted += out.accepted;
        since_entry += out.accepted;
        if s % DRIFT_CHECK_EVERY == 0 {
            drift_check(chain.config(), &mut running);
        }
        if m % plan.measure_every == 0 {
            entries.push(SeriesEntry {
                sweep: s,
                record: observe(chain.config(), &params),
                acceptance_rate: since_entry as f64 / (plan.measure_every as f64 * sites),
            });
            since_entry = 0;
        }
        if let Some(every) = plan.snapshot_every {
            if m % every == 0 {
                let path = plan.snapshot_path(s).expect("validated: out_prefix present");
                model::write_snapshot(chain.config(), &path)?;
                snapshots.push(path);
            }
        }
    }
    drift_check(chain.config(), &mut running);

    let rate = |accepted: usize, sweeps: u64| if sweeps == 0 { 0.0 } else { accepted as f64 / (sweeps as f64 * sites) };
    Ok(RunOutput {
        series: TimeSeries {
            plan: plan.clone(),
            entries,
            acceptance_rate: rate(measured_accepted, plan.sweeps_measure),
            burnin_acceptance_rate: rate(burnin_accepted, plan.sweeps_burnin),
            final_width: width,
            max_energy_drift: max_drift,
        },
        final_config: chain.into_config(),
        snapshots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LatticeTorus;

    #[test]
    fn streams_are_keyed_by_sweep() {
        let s = SweepStreams::new(9);
        let a: Vec<u64> = (0..4).map(|_| s.for_sweep(3).next_u64()).collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
        assert_ne!(s.for_sweep(3).next_u64(), s.for_sweep(4).next_u64());
        assert_ne!(SweepStreams::new(10).for_sweep(3).next_u64(), s.for_sweep(3).next_u64());
    }

    #[test]
    fn each_site_uses_two_draws() {
        let torus = LatticeTorus::new(4).unwrap();
        let params = CouplingParams::new(1.0, 1.0, 3.0).unwrap();
        let streams = SweepStreams::new(1);
        for mut config in [SpinConfiguration::uniform(torus, 0.0), SpinConfiguration::from_fn(torus, |x, y| (x * 7 + y) as f64)] {
            for proposal in [Proposal::Continuous { width: 1.0 }, Proposal::Clock { q: 3 }] {
                let mut rng = streams.for_sweep(0);
                sweep(&mut config, &params, proposal, &mut rng);
                assert_eq!(rng.get_word_pos(), 4 * torus.sites() as u128);
            }
        }
    }

    #[test]
    fn unit_draws_lie_in_half_open_interval() {
        let mut rng = SweepStreams::new(0).for_sweep(0);
        for _ in 0..10_000 {
            let u = unit(&mut rng);
            assert!((0.0..1.0).contains(&u));
        }
    }
}
