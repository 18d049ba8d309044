//! Block events as small expression trees over the (B+1)×(B+1) block angles.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::angle::{circular_distance, deg};
use crate::blocks::{feasibility_of_sites, ArcSet};
use crate::model::Parity;
use crate::{Error, Result};

/// Slack for closed comparisons on exact clock angles.
const EPS: f64 = 1e-9;

/// Predicate over the angles of one block, local sites `(i, j)` with
/// `0 ≤ i, j ≤ B`. Angles in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EventExpr {
    True,
    False,
    /// The spin at `site` lies within `halfwidth_deg` of `center_deg` (closed).
    SiteWindow {
        site: (usize, usize),
        center_deg: f64,
        halfwidth_deg: f64,
    },
    /// The difference `θ_a − θ_b` lies within `halfwidth_deg` of `center_deg` (closed).
    BondWindow {
        a: (usize, usize),
        b: (usize, usize),
        center_deg: f64,
        halfwidth_deg: f64,
    },
    /// Some frame with relative angle within `phi_halfwidth_deg` of
    /// `phi_center_deg` keeps every deviation strictly below `delta_deg`.
    /// A zero half-width pins the relative angle exactly.
    NearNeel {
        delta_deg: f64,
        phi_center_deg: f64,
        phi_halfwidth_deg: f64,
    },
    /// Some diagonal pair of the block is at least `threshold_deg` away from
    /// antiparallel.
    EnergyViolation { threshold_deg: f64 },
    Not(Box<EventExpr>),
    And(Vec<EventExpr>),
    Or(Vec<EventExpr>),
}

impl EventExpr {
    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        EventExpr::Not(Box::new(self))
    }

    pub fn site_window(site: (usize, usize), center_deg: f64, halfwidth_deg: f64) -> Self {
        EventExpr::SiteWindow {
            site,
            center_deg,
            halfwidth_deg,
        }
    }

    pub fn near_neel(delta_deg: f64, phi_center_deg: f64, phi_halfwidth_deg: f64) -> Self {
        EventExpr::NearNeel {
            delta_deg,
            phi_center_deg,
            phi_halfwidth_deg,
        }
    }

    fn validate(&self, b: usize) -> Result<()> {
        let in_block = |s: (usize, usize)| {
            if s.0 > b || s.1 > b {
                Err(Error::invalid(format!("event site {s:?} lies outside a B = {b} block")))
            } else {
                Ok(())
            }
        };
        match self {
            EventExpr::True | EventExpr::False => Ok(()),
            EventExpr::SiteWindow { site, .. } => in_block(*site),
            EventExpr::BondWindow { a, b: other, .. } => {
                in_block(*a)?;
                in_block(*other)
            }
            EventExpr::NearNeel {
                delta_deg,
                phi_halfwidth_deg,
                ..
            } => {
                if !(*delta_deg > 0.0 && *delta_deg < 90.0) || !(*phi_halfwidth_deg >= 0.0) {
                    return Err(Error::invalid(format!(
                        "near_neel needs 0 < delta_deg < 90 and phi_halfwidth_deg ≥ 0, got {delta_deg}, {phi_halfwidth_deg}"
                    )));
                }
                Ok(())
            }
            EventExpr::EnergyViolation { threshold_deg } => {
                if !threshold_deg.is_finite() {
                    return Err(Error::invalid("energy_violation threshold must be finite"));
                }
                Ok(())
            }
            EventExpr::Not(inner) => inner.validate(b),
            EventExpr::And(xs) | EventExpr::Or(xs) => xs.iter().try_for_each(|x| x.validate(b)),
        }
    }

    /// Evaluates on block angles stored row-major, `angles[j * (b + 1) + i]`.
    pub fn eval(&self, b: usize, angles: &[f64]) -> bool {
        let at = |s: (usize, usize)| angles[s.1 * (b + 1) + s.0];
        match self {
            EventExpr::True => true,
            EventExpr::False => false,
            EventExpr::SiteWindow {
                site,
                center_deg,
                halfwidth_deg,
            } => circular_distance(at(*site), deg(*center_deg)) <= deg(*halfwidth_deg) + EPS,
            EventExpr::BondWindow {
                a,
                b: other,
                center_deg,
                halfwidth_deg,
            } => circular_distance(at(*a) - at(*other), deg(*center_deg)) <= deg(*halfwidth_deg) + EPS,
            EventExpr::NearNeel {
                delta_deg,
                phi_center_deg,
                phi_halfwidth_deg,
            } => {
                let sites = (0..=b).flat_map(|j| (0..=b).map(move |i| (i, j)));
                let f = feasibility_of_sites(sites.map(|(i, j)| (Parity::of(i, j), at((i, j)))), deg(*delta_deg));
                if *phi_halfwidth_deg == 0.0 {
                    f.relative.contains(deg(*phi_center_deg))
                } else {
                    let window = ArcSet::around(deg(*phi_center_deg), deg(*phi_halfwidth_deg));
                    !f.relative.intersect(&window).is_empty()
                }
            }
            EventExpr::EnergyViolation { threshold_deg } => {
                let threshold = deg(*threshold_deg) - EPS;
                (0..b).any(|j| {
                    (0..b).any(|i| {
                        circular_distance(at((i, j)) - at((i + 1, j + 1)), PI) >= threshold
                            || circular_distance(at((i + 1, j)) - at((i, j + 1)), PI) >= threshold
                    })
                })
            }
            EventExpr::Not(inner) => !inner.eval(b, angles),
            EventExpr::And(xs) => xs.iter().all(|x| x.eval(b, angles)),
            EventExpr::Or(xs) => xs.iter().any(|x| x.eval(b, angles)),
        }
    }
}

/// A named block event. With `symmetrize` set the predicate is replaced by
/// its conjunction over the orbit of the two axis reflections through the
/// block center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    pub name: String,
    pub expr: EventExpr,
    pub symmetrize: bool,
}

impl EventSpec {
    /// A symmetrized event.
    pub fn new(name: impl Into<String>, expr: EventExpr) -> Self {
        EventSpec {
            name: name.into(),
            expr,
            symmetrize: true,
        }
    }

    pub fn always() -> Self {
        EventSpec::new("true", EventExpr::True)
    }

    pub fn never() -> Self {
        EventSpec::new("false", EventExpr::False)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("event JSON: {e}")))
    }

    pub fn validate(&self, b: usize) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::invalid("event name is empty"));
        }
        self.expr.validate(b)
    }

    pub fn eval(&self, b: usize, angles: &[f64]) -> bool {
        if !self.symmetrize {
            return self.expr.eval(b, angles);
        }
        let side = b + 1;
        let mut image = vec![0.0; angles.len()];
        [(false, false), (true, false), (false, true), (true, true)]
            .into_iter()
            .all(|(rx, ry)| {
                for j in 0..side {
                    for i in 0..side {
                        let si = if rx { b - i } else { i };
                        let sj = if ry { b - j } else { j };
                        image[j * side + i] = angles[sj * side + si];
                    }
                }
                self.expr.eval(b, &image)
            })
    }
}

/// Truth table of an event over all `q^((B+1)²)` clock block states. Local
/// site `j * (B + 1) + i` is the base-`q` digit of that place value.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthTable {
    bits: Vec<u64>,
    len: usize,
}

impl TruthTable {
    pub fn build(event: &EventSpec, q: u32, b: usize) -> Result<Self> {
        event.validate(b)?;
        let cells = (b + 1) * (b + 1);
        let len = block_states(q, b)?;
        let mut bits = vec![0u64; len.div_ceil(64)];
        let mut digits = vec![0u32; cells];
        let mut angles = vec![0.0; cells];
        for s in 0..len {
            decode(s, q, &mut digits);
            for (a, &d) in angles.iter_mut().zip(&digits) {
                *a = clock_angle(d, q);
            }
            if event.eval(b, &angles) {
                bits[s / 64] |= 1 << (s % 64);
            }
        }
        Ok(TruthTable { bits, len })
    }

    #[inline]
    pub fn get(&self, state: usize) -> bool {
        (self.bits[state / 64] >> (state % 64)) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of block states satisfying the event.
    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// Largest block state space tabulated.
const MAX_BLOCK_STATES: usize = 1 << 22;

pub(crate) fn block_states(q: u32, b: usize) -> Result<usize> {
    let cells = ((b + 1) * (b + 1)) as u32;
    match (q as usize).checked_pow(cells) {
        Some(n) if n <= MAX_BLOCK_STATES => Ok(n),
        _ => Err(Error::invalid(format!(
            "block state space q^(B+1)² with q = {q}, B = {b} is too large to tabulate"
        ))),
    }
}

pub(crate) fn clock_angle(digit: u32, q: u32) -> f64 {
    crate::angle::wrap(2.0 * PI * digit as f64 / q as f64)
}

pub(crate) fn decode(mut state: usize, q: u32, digits: &mut [u32]) {
    for d in digits.iter_mut() {
        *d = (state % q as usize) as u32;
        state /= q as usize;
    }
}
