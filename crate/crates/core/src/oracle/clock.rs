//! Exhaustive enumeration of the clock-restricted model on small tori.
//!
//! Every configuration is visited once along a reflected q-ary Gray code and
//! tallied into an integer histogram keyed by the per-direction sums of bond
//! classes and by which events hold on which block translates. For q ≤ 4 the
//! bond energy `1 − cos(2πd/q)` is proportional to the class `min(d, q − d)`,
//! so the class sums fix the energy exactly. All partition functions are then
//! finite sums over histogram bins, independent of β, γ and of the order in
//! which workers finish.

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::events::{block_states, decode, EventSpec, TruthTable};
use crate::model::{CouplingParams, LatticeTorus};
use crate::sum::Neumaier;
use crate::{Error, Result};

/// Largest state space enumerated without an explicit budget.
pub const DEFAULT_BUDGET: f64 = 4.3e9;

/// Distance between incremental and recomputed bond sums checks, in visits.
const CHECK_EVERY: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClockSetup {
    #[serde(rename = "L")]
    pub side: usize,
    pub q: u32,
    pub params: CouplingParams,
    #[serde(rename = "B")]
    pub b: usize,
    pub budget: f64,
}

impl ClockSetup {
    pub fn new(side: usize, q: u32, params: CouplingParams, b: usize) -> Self {
        ClockSetup {
            side,
            q,
            params,
            b,
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn with_budget(mut self, budget: f64) -> Self {
        self.budget = budget;
        self
    }

    /// `q^(L²)`.
    pub fn states(&self) -> f64 {
        (self.q as f64).powi((self.side * self.side) as i32)
    }

    /// Block translates per direction, `L / B`.
    pub fn blocks_per_side(&self) -> usize {
        self.side / self.b
    }

    pub fn translates(&self) -> usize {
        self.blocks_per_side().pow(2)
    }

    /// `(B / L)²`.
    pub fn exponent(&self) -> f64 {
        1.0 / self.translates() as f64
    }

    pub fn validate(&self) -> Result<()> {
        LatticeTorus::new(self.side)?;
        if !(2..=4).contains(&self.q) {
            return Err(Error::invalid(format!("clock enumeration needs 2 ≤ q ≤ 4, got {}", self.q)));
        }
        if self.b < 1 || self.side % self.b != 0 || (self.side / self.b) % 2 != 0 {
            return Err(Error::invalid(format!(
                "block scale B = {} must divide L = {} with L/B even",
                self.b, self.side
            )));
        }
        CouplingParams::new(self.params.j, self.params.gamma, self.params.beta)?;
        let states = self.states();
        if !(states <= self.budget) {
            return Err(Error::BudgetExceeded {
                states,
                budget: self.budget,
            });
        }
        block_states(self.q, self.b)?;
        Ok(())
    }

    /// Multiplier `u` with `1 − cos(2πd/q) = u · min(d, q − d)`.
    fn class_unit(&self) -> f64 {
        match self.q {
            2 => 2.0,
            3 => 1.5,
            _ => 1.0,
        }
    }
}

/// Bond class sums `(S_diag, S_x, S_y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ClassSums {
    pub diag: u32,
    pub x: u32,
    pub y: u32,
}

/// A block event at a block translate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub translate: (usize, usize),
    pub event: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyLevel {
    pub energy: f64,
    pub count: u64,
}

/// Exact Gibbs quantities of the clock model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClockSummary {
    pub setup: ClockSetup,
    pub z: f64,
    pub log_z: f64,
    pub energy_per_site: f64,
    pub order_param_mean: f64,
    pub nn_x: f64,
    pub nn_y: f64,
    pub nnn: f64,
    /// Distinct energies with their multiplicities, ascending.
    pub histogram: Vec<EnergyLevel>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlacedEvent {
    pub translate: (usize, usize),
    pub event: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChessboardReport {
    pub setup: ClockSetup,
    pub placements: Vec<PlacedEvent>,
    /// Probability that every placed event holds.
    pub lhs: f64,
    /// `Π_j (Z(A_j)/Z)^((B/L)²)`.
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubadditivityReport {
    pub setup: ClockSetup,
    pub event: String,
    pub cover: Vec<String>,
    /// `(Z(A)/Z)^((B/L)²)`.
    pub lhs: f64,
    /// `Σ_k (Z(A_k)/Z)^((B/L)²)`.
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
}

/// Slack on the inequality checks.
pub const INEQUALITY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Bin {
    signature: u128,
    /// Index into the distinct class-sum triples.
    level: u32,
    count: u64,
}

/// The tallied state space of one clock setup and event list.
#[derive(Debug, Clone)]
pub struct Enumeration {
    setup: ClockSetup,
    events: Vec<EventSpec>,
    tables: Vec<TruthTable>,
    /// Distinct class-sum triples, ascending.
    levels: Vec<ClassSums>,
    bins: Vec<Bin>,
    pub states_visited: u64,
    /// Times the incrementally maintained sums were compared against a
    /// full recomputation.
    pub consistency_checks: u64,
    pub consistency_failures: u64,
}

struct Geometry {
    n: usize,
    q: u32,
    translates: usize,
    /// `(neighbour, direction)` for the eight bonds at each site; direction
    /// 0 diagonal, 1 x, 2 y.
    bonds: Vec<[(usize, usize); 8]>,
    /// `(translate, place value)` for every block containing each site.
    memberships: Vec<Vec<(usize, usize)>>,
    class: Vec<u32>,
}

impl Geometry {
    fn new(setup: &ClockSetup) -> Result<Self> {
        let side = setup.side;
        let torus = LatticeTorus::new(side)?;
        let n = side * side;
        let bonds = (0..n)
            .map(|k| {
                let (x, y) = torus.coords(k);
                let (x, y) = (x as isize, y as isize);
                let at = |dx: isize, dy: isize| torus.index_wrapped(x + dx, y + dy);
                [
                    (at(1, 1), 0),
                    (at(1, -1), 0),
                    (at(-1, 1), 0),
                    (at(-1, -1), 0),
                    (at(1, 0), 1),
                    (at(-1, 0), 1),
                    (at(0, 1), 2),
                    (at(0, -1), 2),
                ]
            })
            .collect();
        let per = setup.blocks_per_side();
        let b = setup.b;
        let mut memberships = vec![Vec::new(); n];
        for t2 in 0..per {
            for t1 in 0..per {
                let mut place = 1usize;
                for j in 0..=b {
                    for i in 0..=b {
                        let k = torus.index((b * t1 + i) % side, (b * t2 + j) % side);
                        memberships[k].push((t2 * per + t1, place));
                        place *= setup.q as usize;
                    }
                }
            }
        }
        let q = setup.q;
        let class = (0..q).map(|d| d.min(q - d)).collect();
        Ok(Geometry {
            n,
            q,
            translates: per * per,
            bonds,
            memberships,
            class,
        })
    }

    #[inline]
    fn class_of(&self, a: u32, b: u32) -> u32 {
        self.class[((a + self.q - b) % self.q) as usize]
    }

    fn sums(&self, digits: &[u32]) -> [u32; 3] {
        let mut s = [0u32; 3];
        for k in 0..self.n {
            // forward bonds only: (1,1), (1,−1), (1,0), (0,1)
            for &idx in &[0usize, 1, 4, 6] {
                let (p, dir) = self.bonds[k][idx];
                s[dir] += self.class_of(digits[k], digits[p]);
            }
        }
        s
    }

    fn block_states(&self, digits: &[u32]) -> Vec<usize> {
        let mut states = vec![0usize; self.translates];
        for (k, members) in self.memberships.iter().enumerate() {
            for &(t, place) in members {
                states[t] += digits[k] as usize * place;
            }
        }
        states
    }
}

/// Event bits per block state: bit `e` set when event `e` holds.
fn event_masks(tables: &[TruthTable], len: usize) -> Vec<u32> {
    (0..len)
        .map(|s| {
            tables
                .iter()
                .enumerate()
                .fold(0u32, |m, (e, t)| m | (u32::from(t.get(s)) << e))
        })
        .collect()
}

/// Signature layout: translate `t` owns bits `t·E .. (t+1)·E`.
fn signature(masks: &[u32], events: usize, states: &[usize]) -> u128 {
    states
        .iter()
        .enumerate()
        .fold(0u128, |sig, (t, &s)| sig | (u128::from(masks[s]) << (t * events)))
}

#[derive(Default)]
struct Tally {
    bins: FxHashMap<(u128, ClassSums), u64>,
    visited: u64,
    checks: u64,
    failures: u64,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        if self.bins.len() < other.bins.len() {
            return other.merge(self);
        }
        for (k, v) in other.bins {
            *self.bins.entry(k).or_insert(0) += v;
        }
        self.visited += other.visited;
        self.checks += other.checks;
        self.failures += other.failures;
        self
    }
}

/// Walks all configurations whose top digits encode `shard`, varying the
/// `low` lowest digits along a reflected Gray code.
fn run_shard(geo: &Geometry, masks: &[u32], events: usize, shard: usize, low: usize, tally: &mut Tally) {
    let q = geo.q;
    let mut digits = vec![0u32; geo.n];
    decode(shard, q, &mut digits[low..]);
    let mut sums = geo.sums(&digits);
    let mut blocks = geo.block_states(&digits);
    let mut sig = signature(masks, events, &blocks);
    let field = if events == 0 { 0 } else { u128::MAX >> (128 - events) };

    let mut focus: Vec<usize> = (0..=low).collect();
    let mut dir = vec![1i32; low];
    loop {
        let key = ClassSums {
            diag: sums[0],
            x: sums[1],
            y: sums[2],
        };
        *tally.bins.entry((sig, key)).or_insert(0) += 1;
        tally.visited += 1;
        if tally.visited % CHECK_EVERY == 0 {
            tally.checks += 1;
            if geo.sums(&digits) != sums || geo.block_states(&digits) != blocks {
                tally.failures += 1;
            }
        }

        let j = focus[0];
        focus[0] = 0;
        if j == low {
            break;
        }
        let old = digits[j];
        let new = (old as i32 + dir[j]) as u32;
        for &(p, d) in &geo.bonds[j] {
            let other = digits[p];
            sums[d] = sums[d] + geo.class_of(new, other) - geo.class_of(old, other);
        }
        digits[j] = new;
        for &(t, place) in &geo.memberships[j] {
            blocks[t] = if dir[j] > 0 { blocks[t] + place } else { blocks[t] - place };
            let shift = t * events;
            sig = (sig & !(field << shift)) | (u128::from(masks[blocks[t]]) << shift);
        }
        if new == 0 || new == q - 1 {
            dir[j] = -dir[j];
            focus[j] = focus[j + 1];
            focus[j + 1] = j + 1;
        }
    }
}

impl Enumeration {
    /// Enumerates every clock configuration of `setup`, tracking `events` on
    /// every block translate. At most 128 (event, translate) pairs.
    pub fn run(setup: &ClockSetup, events: &[EventSpec]) -> Result<Self> {
        setup.validate()?;
        let geo = Geometry::new(setup)?;
        if events.len() > 32 || events.len() * geo.translates > 128 {
            return Err(Error::invalid(format!(
                "{} events on {} translates exceed the tracked limit (32 events, 128 pairs)",
                events.len(),
                geo.translates
            )));
        }
        let tables = events
            .iter()
            .map(|e| TruthTable::build(e, setup.q, setup.b))
            .collect::<Result<Vec<_>>>()?;
        let masks = event_masks(&tables, block_states(setup.q, setup.b)?);

        let mut high = 0;
        while high < geo.n && (setup.q as usize).pow(high as u32) < 256 {
            high += 1;
        }
        let low = geo.n - high;
        let shards = (setup.q as usize).pow(high as u32);
        let tally = (0..shards)
            .into_par_iter()
            .fold(Tally::default, |mut acc, s| {
                run_shard(&geo, &masks, events.len(), s, low, &mut acc);
                acc
            })
            .reduce(Tally::default, Tally::merge);

        let mut levels: Vec<ClassSums> = tally.bins.keys().map(|&(_, sums)| sums).collect();
        levels.sort_unstable();
        levels.dedup();
        let mut bins: Vec<Bin> = tally
            .bins
            .into_iter()
            .map(|((signature, sums), count)| Bin {
                signature,
                level: levels.binary_search(&sums).expect("level recorded") as u32,
                count,
            })
            .collect();
        bins.sort_unstable();
        Ok(Enumeration {
            setup: *setup,
            events: events.to_vec(),
            tables,
            levels,
            bins,
            states_visited: tally.visited,
            consistency_checks: tally.checks,
            consistency_failures: tally.failures,
        })
    }

    pub fn setup(&self) -> &ClockSetup {
        &self.setup
    }

    pub fn events(&self) -> &[EventSpec] {
        &self.events
    }

    /// Number of distinct histogram bins.
    pub fn bins(&self) -> usize {
        self.bins.len()
    }

    fn energy(&self, sums: ClassSums, params: &CouplingParams) -> f64 {
        let n = (self.setup.side * self.setup.side) as f64;
        let u = self.setup.class_unit();
        let diag = 4.0 * n - u * sums.diag as f64;
        let nn = 2.0 * n - u * (sums.x + sums.y) as f64;
        params.j * diag + params.j * params.gamma * nn
    }

    /// Integer multiplicities per class-sum triple over bins accepted by `keep`.
    fn counts(&self, keep: impl Fn(u128) -> bool) -> Vec<(ClassSums, u64)> {
        let mut by_level = vec![0u64; self.levels.len()];
        for bin in self.bins.iter().filter(|b| keep(b.signature)) {
            by_level[bin.level as usize] += bin.count;
        }
        self.levels.iter().copied().zip(by_level).filter(|&(_, c)| c > 0).collect()
    }

    /// `Σ count · e^{−β(H − E₀)}` with `E₀` the lowest energy of the whole
    /// space; returns `(scaled sum, E₀)`.
    fn scaled_partition(&self, counts: &[(ClassSums, u64)], params: &CouplingParams) -> (f64, f64) {
        let e0 = self.ground_energy(params);
        let mut acc = Neumaier::default();
        for &(sums, count) in counts {
            acc.add(count as f64 * (-params.beta * (self.energy(sums, params) - e0)).exp());
        }
        (acc.sum(), e0)
    }

    fn ground_energy(&self, params: &CouplingParams) -> f64 {
        self.levels
            .iter()
            .map(|&sums| self.energy(sums, params))
            .fold(f64::INFINITY, f64::min)
    }

    fn bit(&self, p: &Placement) -> Result<u128> {
        let per = self.setup.blocks_per_side();
        if p.translate.0 >= per || p.translate.1 >= per {
            return Err(Error::invalid(format!(
                "translate {:?} outside the {per}×{per} block lattice",
                p.translate
            )));
        }
        if p.event >= self.events.len() {
            return Err(Error::invalid(format!("event index {} out of range", p.event)));
        }
        let t = p.translate.1 * per + p.translate.0;
        Ok(1u128 << (t * self.events.len() + p.event))
    }

    /// Partition function restricted to configurations where every placed
    /// event holds.
    pub fn restricted_partition(&self, placements: &[Placement], params: &CouplingParams) -> Result<f64> {
        let (scaled, e0) = self.restricted_scaled(placements, params)?;
        Ok(scaled * (-params.beta * e0).exp())
    }

    fn restricted_scaled(&self, placements: &[Placement], params: &CouplingParams) -> Result<(f64, f64)> {
        let mut mask = 0u128;
        for p in placements {
            mask |= self.bit(p)?;
        }
        Ok(self.scaled_partition(&self.counts(|s| s & mask == mask), params))
    }

    /// Probability that every placed event holds.
    pub fn probability(&self, placements: &[Placement], params: &CouplingParams) -> Result<f64> {
        let (num, _) = self.restricted_scaled(placements, params)?;
        let (den, _) = self.restricted_scaled(&[], params)?;
        Ok(num / den)
    }

    fn all_translates(&self, event: usize) -> Vec<Placement> {
        let per = self.setup.blocks_per_side();
        (0..per * per)
            .map(|t| Placement {
                translate: (t % per, t / per),
                event,
            })
            .collect()
    }

    fn require_symmetric(&self, event: usize) -> Result<()> {
        match self.events.get(event) {
            None => Err(Error::invalid(format!("event index {event} out of range"))),
            Some(e) if !e.symmetrize => Err(Error::invalid(format!("event '{}' is not symmetrized", e.name))),
            Some(_) => Ok(()),
        }
    }

    /// `Z(A)`: the event holds on every block translate.
    pub fn constrained_partition(&self, event: usize, params: &CouplingParams) -> Result<f64> {
        self.require_symmetric(event)?;
        self.restricted_partition(&self.all_translates(event), params)
    }

    /// `Z(A)/Z`.
    pub fn constrained_fraction(&self, event: usize, params: &CouplingParams) -> Result<f64> {
        self.require_symmetric(event)?;
        self.probability(&self.all_translates(event), params)
    }

    pub fn summary(&self, params: &CouplingParams) -> ClockSummary {
        let counts = self.counts(|_| true);
        let (scaled, e0) = self.scaled_partition(&counts, params);
        let n = (self.setup.side * self.setup.side) as f64;
        let u = self.setup.class_unit();
        let mut energy = Neumaier::default();
        let mut order = Neumaier::default();
        let (mut nx, mut ny, mut nnn) = (Neumaier::default(), Neumaier::default(), Neumaier::default());
        let mut levels: std::collections::BTreeMap<u64, (f64, u64)> = Default::default();
        for &(sums, count) in &counts {
            let h = self.energy(sums, params);
            let w = count as f64 * (-params.beta * (h - e0)).exp() / scaled;
            energy.add(w * h / n);
            order.add(w * u * (sums.y as f64 - sums.x as f64) / n);
            nx.add(w * (1.0 - u * sums.x as f64 / n));
            ny.add(w * (1.0 - u * sums.y as f64 / n));
            nnn.add(w * (1.0 - u * sums.diag as f64 / (2.0 * n)));
            levels.entry(h.to_bits()).or_insert((h, 0)).1 += count;
        }
        let mut histogram: Vec<EnergyLevel> =
            levels.into_values().map(|(energy, count)| EnergyLevel { energy, count }).collect();
        histogram.sort_by(|a, b| a.energy.total_cmp(&b.energy));
        let log_z = scaled.ln() - params.beta * e0;
        ClockSummary {
            setup: ClockSetup { params: *params, ..self.setup },
            z: scaled * (-params.beta * e0).exp(),
            log_z,
            energy_per_site: energy.sum(),
            order_param_mean: order.sum(),
            nn_x: nx.sum(),
            nn_y: ny.sum(),
            nnn: nnn.sum(),
            histogram,
        }
    }

    /// Probability of the placed events against the product of their
    /// disseminated fractions.
    pub fn chessboard(&self, placements: &[Placement], params: &CouplingParams) -> Result<ChessboardReport> {
        for (i, p) in placements.iter().enumerate() {
            self.require_symmetric(p.event)?;
            self.bit(p)?;
            if placements[..i].iter().any(|o| o.translate == p.translate) {
                return Err(Error::invalid(format!("translate {:?} placed twice", p.translate)));
            }
        }
        let lhs = self.probability(placements, params)?;
        let exponent = self.setup.exponent();
        let mut rhs = 1.0;
        for p in placements {
            rhs *= self.constrained_fraction(p.event, params)?.powf(exponent);
        }
        let margin = rhs - lhs;
        Ok(ChessboardReport {
            setup: ClockSetup { params: *params, ..self.setup },
            placements: placements
                .iter()
                .map(|p| PlacedEvent {
                    translate: p.translate,
                    event: self.events[p.event].name.clone(),
                })
                .collect(),
            lhs,
            rhs,
            margin,
            holds: margin >= -INEQUALITY_SLACK,
        })
    }

    /// Checks that every block state in event `a` lies in some cover event.
    pub fn check_cover(&self, a: usize, cover: &[usize]) -> Result<()> {
        for &k in std::iter::once(&a).chain(cover) {
            self.require_symmetric(k)?;
        }
        let table = &self.tables[a];
        for s in 0..table.len() {
            if table.get(s) && !cover.iter().any(|&k| self.tables[k].get(s)) {
                let mut digits = vec![0u32; (self.setup.b + 1).pow(2)];
                decode(s, self.setup.q, &mut digits);
                return Err(Error::CoverViolation {
                    witness: digits.into_iter().map(|d| d as u8).collect(),
                });
            }
        }
        Ok(())
    }

    /// `(Z(A)/Z)^((B/L)²)` against `Σ_k (Z(A_k)/Z)^((B/L)²)`.
    pub fn subadditivity(&self, a: usize, cover: &[usize], params: &CouplingParams) -> Result<SubadditivityReport> {
        self.check_cover(a, cover)?;
        let exponent = self.setup.exponent();
        let lhs = self.constrained_fraction(a, params)?.powf(exponent);
        let mut rhs = Neumaier::default();
        for &k in cover {
            rhs.add(self.constrained_fraction(k, params)?.powf(exponent));
        }
        let rhs = rhs.sum();
        let margin = rhs - lhs;
        Ok(SubadditivityReport {
            setup: ClockSetup { params: *params, ..self.setup },
            event: self.events[a].name.clone(),
            cover: cover.iter().map(|&k| self.events[k].name.clone()).collect(),
            lhs,
            rhs,
            margin,
            holds: margin >= -INEQUALITY_SLACK,
        })
    }
}

/// Exact Gibbs summary at `setup.params`.
pub fn enumerate_clock(setup: &ClockSetup) -> Result<ClockSummary> {
    Ok(Enumeration::run(setup, &[])?.summary(&setup.params))
}

/// `Z(A)` at `setup.params`.
pub fn constrained_partition(setup: &ClockSetup, event: &EventSpec) -> Result<f64> {
    Enumeration::run(setup, std::slice::from_ref(event))?.constrained_partition(0, &setup.params)
}

pub fn chessboard_check(setup: &ClockSetup, placements: &[((usize, usize), EventSpec)]) -> Result<ChessboardReport> {
    let events: Vec<EventSpec> = placements.iter().map(|(_, e)| e.clone()).collect();
    let enumeration = Enumeration::run(setup, &events)?;
    let placed: Vec<Placement> = placements
        .iter()
        .enumerate()
        .map(|(event, (translate, _))| Placement {
            translate: *translate,
            event,
        })
        .collect();
    enumeration.chessboard(&placed, &setup.params)
}

pub fn subadditivity_check(setup: &ClockSetup, a: &EventSpec, cover: &[EventSpec]) -> Result<SubadditivityReport> {
    let mut events = vec![a.clone()];
    events.extend_from_slice(cover);
    let enumeration = Enumeration::run(setup, &events)?;
    let indices: Vec<usize> = (1..events.len()).collect();
    enumeration.subadditivity(0, &indices, &setup.params)
}
