//! Clock-model event suites for the chessboard and subadditivity checks.

use std::path::Path;

use odo_core::oracle::{EventExpr, EventSpec};
use odo_core::{Error, Result};
use serde::{Deserialize, Serialize};

/// A cover to test: `event` must be contained in the union of `cover`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverFamily {
    pub event: String,
    pub cover: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSuite {
    pub events: Vec<EventSpec>,
    /// Events placed singly and in pairs; all events when empty.
    #[serde(default)]
    pub placed: Vec<String>,
    #[serde(default)]
    pub covers: Vec<CoverFamily>,
}

impl EventSuite {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            context: "reading event suite",
            path: path.to_path_buf(),
            source: e,
        })?;
        let suite: EventSuite = serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        suite.check_names()?;
        Ok(suite)
    }

    pub fn index(&self, name: &str) -> Result<usize> {
        self.events
            .iter()
            .position(|e| e.name == name)
            .ok_or_else(|| Error::InvalidInput(format!("unknown event {name:?}")))
    }

    /// Indices of the events placed on the torus.
    pub fn placed_indices(&self) -> Result<Vec<usize>> {
        if self.placed.is_empty() {
            return Ok((0..self.events.len()).collect());
        }
        self.placed.iter().map(|n| self.index(n)).collect()
    }

    fn check_names(&self) -> Result<()> {
        for (i, e) in self.events.iter().enumerate() {
            if self.events[..i].iter().any(|o| o.name == e.name) {
                return Err(Error::InvalidInput(format!("event name {:?} is repeated", e.name)));
            }
        }
        self.placed_indices()?;
        for f in &self.covers {
            self.index(&f.event)?;
            for c in &f.cover {
                self.index(c)?;
            }
        }
        Ok(())
    }
}

/// Reference relative angles spaced closer than `delta_deg`.
pub fn reference_angles(delta_deg: f64) -> Vec<f64> {
    let s = (360.0 / delta_deg).floor() as usize + 1;
    (1..=s).map(|i| 360.0 * i as f64 / s as f64).collect()
}

/// Block events mirroring the good/bad block definitions on a `q`-state
/// clock block with `B = 2`: near-Néel windows of tolerance `delta_deg`,
/// centre-spin windows at every clock angle, bond windows and the
/// spin-wave-bad family.
pub fn default_suite(q: u32, delta_deg: f64) -> EventSuite {
    let near = |phi: f64| EventExpr::near_neel(delta_deg, phi, 20.0);
    let bad = || EventExpr::And(vec![near(0.0).not(), near(180.0).not()]);
    let center = |deg: f64| EventExpr::site_window((1, 1), deg, 1.0);
    let clock: Vec<f64> = (0..q).map(|k| 360.0 * k as f64 / q as f64).collect();

    let mut events = vec![
        EventSpec::always(),
        EventSpec::new("g0", near(0.0)),
        EventSpec::new("g180", near(180.0)),
        EventSpec::new("corners_0", EventExpr::site_window((0, 0), 0.0, 1.0)),
        EventSpec::new(
            "diagonal_antiparallel",
            EventExpr::BondWindow {
                a: (0, 0),
                b: (1, 1),
                center_deg: 180.0,
                halfwidth_deg: delta_deg,
            },
        ),
        EventSpec::new(
            "edge_parallel",
            EventExpr::BondWindow {
                a: (0, 0),
                b: (1, 0),
                center_deg: 0.0,
                halfwidth_deg: 1.0,
            },
        ),
        EventSpec::new("bad", bad()),
        EventSpec::new("energy_violation", EventExpr::EnergyViolation { threshold_deg: delta_deg / 4.0 }),
    ];
    let center_name = |deg: f64| format!("center_{}", deg.round());
    for &deg in &clock {
        events.push(EventSpec::new(center_name(deg), center(deg)));
    }
    events.push(EventSpec::new(
        "center_not_0",
        EventExpr::Or(clock[1..].iter().map(|&d| center(d)).collect()),
    ));
    let angles = reference_angles(delta_deg);
    for (i, &phi) in angles.iter().enumerate() {
        events.push(EventSpec::new(
            format!("spin_wave_{}", i + 1),
            EventExpr::And(vec![EventExpr::near_neel(delta_deg, phi, 0.0), bad()]),
        ));
    }

    let placed = [
        "true",
        "g0",
        "g180",
        "center_0",
        "corners_0",
        "diagonal_antiparallel",
        "edge_parallel",
        "bad",
        "energy_violation",
    ]
    .map(String::from)
    .to_vec();

    let mut spin_wave_cover = vec!["energy_violation".to_string()];
    spin_wave_cover.extend((1..=angles.len()).map(|i| format!("spin_wave_{i}")));
    let covers = vec![
        CoverFamily {
            event: "g0".into(),
            cover: vec!["g0".into()],
        },
        CoverFamily {
            event: "center_not_0".into(),
            cover: clock[1..].iter().map(|&d| center_name(d)).collect(),
        },
        CoverFamily {
            event: "true".into(),
            cover: clock.iter().map(|&d| center_name(d)).collect(),
        },
        CoverFamily {
            event: "bad".into(),
            cover: spin_wave_cover,
        },
    ];
    EventSuite { events, placed, covers }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_is_consistent() {
        for q in [2, 3, 4] {
            let s = default_suite(q, 70.0);
            s.check_names().unwrap();
            assert_eq!(s.placed.len(), 9);
            assert_eq!(s.covers.len(), 4);
            assert!(s.events.iter().all(|e| e.symmetrize && e.validate(2).is_ok()));
        }
    }

    #[test]
    fn reference_angles_are_dense_enough() {
        let a = reference_angles(70.0);
        assert_eq!(a.len(), 6);
        assert!(a.len() as f64 * 70.0 > 360.0);
        assert_eq!(*a.last().unwrap(), 360.0);
    }

    #[test]
    fn suite_round_trips_through_json() {
        let s = default_suite(3, 70.0);
        let back: EventSuite = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<EventSuite>(r#"{"events":[],"extra":1}"#).is_err());
    }
}
