use std::f64::consts::{PI, TAU};

use odo_core::angle::{circular_distance, deg};
use odo_core::blocks::{
    block_field, block_sites, classify_block, default_schedule, event_frequencies, feasibility, phase_boundaries, ArcSet,
    BlockCriteria, BlockLabel, Phase,
};
use odo_core::model::{self, LatticeTorus, Parity, ReferenceFrame, SpinConfiguration};
use odo_core::sampler::{run, Init, RunPlan};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn neel(side: usize, theta_deg: f64, phi_deg: f64) -> SpinConfiguration {
    model::neel_state(LatticeTorus::new(side).unwrap(), ReferenceFrame::from_degrees(theta_deg, phi_deg)).unwrap()
}

/// Néel state in `frame` with independent uniform deviations in (−noise, noise).
fn noisy_neel(side: usize, frame: ReferenceFrame, noise: f64, rng: &mut ChaCha8Rng) -> SpinConfiguration {
    SpinConfiguration::from_fn(LatticeTorus::new(side).unwrap(), |x, y| {
        frame.offset(Parity::of(x, y)) + rng.random_range(-noise..noise)
    })
}

fn criteria(b: usize, delta: f64, kappa: f64) -> BlockCriteria {
    BlockCriteria::with_min_s(b, delta, kappa).unwrap()
}

#[test]
fn colinear_neel_block_is_g0() {
    let c = criteria(4, 0.1, 0.2);
    let label = classify_block(&neel(16, 25.0, 0.0), (1, 2), &c).unwrap();
    match label {
        BlockLabel::Good { phase, theta_star, phi_star } => {
            assert_eq!(phase, Phase::Zero);
            // every θ* within Δ of the true frame works
            assert!(theta_star.approx_eq(&ArcSet::around(deg(25.0), 0.1), 1e-12));
            assert!(phi_star.abs() <= 0.2);
        }
        other => panic!("expected G0, got {other:?}"),
    }
    let label = classify_block(&neel(16, -60.0, 180.0), (0, 0), &c).unwrap();
    assert_eq!(label.name(), "G180");
}

#[test]
fn perpendicular_neel_block_is_spin_wave_bad() {
    let c = criteria(4, 0.1, 0.2);
    let label = classify_block(&neel(16, 0.0, 90.0), (0, 0), &c).unwrap();
    let BlockLabel::BadSpinWave { feasible } = label else {
        panic!("expected BadSW, got {label:?}");
    };
    let nearest = (1..=c.s)
        .min_by(|&a, &b| {
            circular_distance(c.reference_angle(a), PI / 2.0).total_cmp(&circular_distance(c.reference_angle(b), PI / 2.0))
        })
        .unwrap();
    assert!(feasible.contains(&nearest));
    for i in feasible {
        assert!(circular_distance(c.reference_angle(i), PI / 2.0) < 2.0 * c.delta);
    }
}

#[test]
fn single_rotated_spin_is_an_energy_violation() {
    let c = criteria(4, 0.1, 0.2);
    let mut config = neel(16, 0.0, 0.0);
    let (x, y) = (2, 2);
    config.set(x, y, config.angle(x, y) + 2.0 * c.delta);
    match classify_block(&config, (0, 0), &c).unwrap() {
        BlockLabel::BadEnergy { site, partner, gap } => {
            assert!(site == (x, y) || partner == (x, y));
            assert_eq!((site.0 as i64 - partner.0 as i64).abs(), 1);
            assert_eq!((site.1 as i64 - partner.1 as i64).abs(), 1);
            assert!((gap - 2.0 * c.delta).abs() < 1e-12);
            assert!(gap >= c.energy_threshold());
        }
        other => panic!("expected BadEnergy, got {other:?}"),
    }
}

#[test]
fn classification_rejects_bad_inputs() {
    let config = neel(16, 0.0, 0.0);
    let mut c = criteria(4, 0.1, 0.2);
    assert!(classify_block(&config, (4, 0), &c).is_err());
    c.s = 10;
    assert!(classify_block(&config, (0, 0), &c).is_err());
    // 12 is not an even multiple of 4
    assert!(block_field(&neel(12, 0.0, 0.0), &criteria(4, 0.1, 0.2)).is_err());
}

#[test]
fn ground_state_field_is_uniformly_g0() {
    let field = block_field(&neel(32, 10.0, 0.0), &criteria(4, 0.1, 0.2)).unwrap();
    assert_eq!(field.labels.len(), 64);
    assert!(field.labels.iter().all(|l| l.name() == "G0"));
    assert!(field.boundaries.is_empty());
    assert_eq!(field.good_fraction(), 1.0);
}

#[test]
fn boundary_report_finds_opposite_neighbours() {
    let good = |phase| BlockLabel::Good {
        phase,
        theta_star: ArcSet::full(),
        phi_star: 0.0,
    };
    let bad = BlockLabel::BadSpinWave { feasible: vec![1] };
    // 2×2 torus of translates: G0 G180 / bad G0
    let labels = vec![good(Phase::Zero), good(Phase::Pi), bad, good(Phase::Zero)];
    let b = phase_boundaries(&labels, 2);
    // (0,0)-(1,0) twice (direct and wrapped) and (1,0)-(1,1) twice
    assert_eq!(b.len(), 4);
    assert!(b.iter().all(|p| p.first == (0, 0) || p.first == (1, 0) || p.first == (1, 1)));
    assert!(phase_boundaries(&labels[..1], 1).is_empty());
}

#[test]
fn covering_lemma_holds_on_synthetic_blocks() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut bad_sw = 0;
    for trial in 0..10_000 {
        let b = if trial % 2 == 0 { 2 } else { 4 };
        let delta = rng.random_range(0.05..0.4);
        let c = criteria(b, delta, 0.2);
        let frame = ReferenceFrame::new(rng.random_range(-PI..PI), rng.random_range(-PI..PI));
        let noise = delta * rng.random_range(0.01..0.6) / b as f64;
        let config = noisy_neel(8, frame, noise, &mut rng);
        match classify_block(&config, (0, 0), &c).unwrap() {
            BlockLabel::BadSpinWave { feasible } => {
                assert!(!feasible.is_empty(), "trial {trial}");
                bad_sw += 1;
            }
            BlockLabel::BadEnergy { .. } | BlockLabel::Good { .. } => {}
        }
    }
    assert!(bad_sw > 1000, "only {bad_sw} spin-wave-bad blocks exercised");
}

#[test]
fn phases_are_exclusive_at_small_kappa() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..5000 {
        let delta = rng.random_range(0.02..0.5);
        let kappa = rng.random_range(0.01..(PI / 2.0 - 2.0 * delta));
        let c = criteria(2, delta, kappa);
        let frame = ReferenceFrame::new(rng.random_range(-PI..PI), rng.random_range(-PI..PI));
        let config = noisy_neel(8, frame, rng.random_range(0.0..1.5 * delta), &mut rng);
        let f = feasibility(&config, &c, (0, 0)).unwrap();
        assert!(!(f.admits(Phase::Zero, kappa) && f.admits(Phase::Pi, kappa)));
    }
}

#[test]
fn classification_is_rotation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let c = criteria(4, 0.2, 0.2);
    for _ in 0..500 {
        let frame = ReferenceFrame::new(rng.random_range(-PI..PI), rng.random_range(-0.4..0.4));
        let config = noisy_neel(16, frame, rng.random_range(0.0..0.25), &mut rng);
        let alpha = rng.random_range(-PI..PI);
        let field = block_field(&config, &c).unwrap();
        let rotated = block_field(&config.rotated(alpha), &c).unwrap();
        for (a, b) in field.labels.iter().zip(&rotated.labels) {
            assert_eq!(a.name(), b.name());
        }
    }
}

/// Dense search over θ* and φ* on a `step` grid.
fn grid_good(config: &SpinConfiguration, sites: &[(usize, usize)], delta: f64, kappa: f64, step: f64) -> bool {
    let n = (TAU / step).round() as usize;
    let phis: Vec<f64> = (0..n)
        .map(|k| k as f64 * step)
        .filter(|&p| circular_distance(p, 0.0) <= kappa || circular_distance(p, PI) <= kappa)
        .collect();
    (0..n).any(|k| {
        let theta = k as f64 * step;
        let even_ok = sites.iter().filter(|&&(x, y)| Parity::of(x, y).on_even_sublattice()).all(|&(x, y)| {
            let o = if Parity::of(x, y).flipped() { PI } else { 0.0 };
            circular_distance(config.angle(x, y), theta + o) < delta
        });
        even_ok
            && phis.iter().any(|&phi| {
                let frame = ReferenceFrame::new(theta, phi);
                sites.iter().all(|&(x, y)| circular_distance(config.angle(x, y), frame.offset(Parity::of(x, y))) < delta)
            })
    })
}

#[test]
fn arc_decision_agrees_with_grid_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let (delta, kappa) = (0.3, 0.2);
    let c = criteria(2, delta, kappa);
    let sites: Vec<(usize, usize)> = block_sites(8, 2, (0, 0)).collect();
    let step = deg(0.5);
    let tol = deg(1.0);
    let (mut good, mut total) = (0, 0);
    for _ in 0..1000 {
        let phi = if rng.random_bool(0.5) { rng.random_range(-0.6..0.6) } else { rng.random_range(-PI..PI) };
        let frame = ReferenceFrame::new(rng.random_range(-PI..PI), phi);
        let config = noisy_neel(8, frame, rng.random_range(0.05..0.45), &mut rng);
        let exact = classify_block(&config, (0, 0), &c).unwrap().is_good();
        if grid_good(&config, &sites, delta, kappa, step) {
            assert!(exact, "grid found a frame the arc decision missed");
        }
        if exact {
            assert!(grid_good(&config, &sites, delta + tol, kappa + tol, step), "arc decision good but no grid frame within 1°");
            good += 1;
        }
        total += 1;
    }
    assert!(good > 100 && good < total - 100, "good {good} of {total}: sample not mixed");
}

#[test]
fn schedule_covers_on_random_temperatures() {
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    for _ in 0..100 {
        let beta_j = 10f64.powf(rng.random_range(0.01..6.0));
        let s = default_schedule(beta_j).unwrap();
        assert!(s.s as f64 * s.delta > 4.0 * PI);
        assert!(s.b >= 2 && s.b % 2 == 0);
        assert!(s.criteria(0.2).is_ok());
    }
}

#[test]
fn frequencies_of_ground_states() {
    let c = criteria(4, 0.1, 0.2);
    let t = event_frequencies(&[neel(16, 0.0, 0.0), neel(16, 90.0, 0.0)], &c).unwrap();
    assert_eq!(t.g0.fraction, 1.0);
    assert_eq!(t.g0.stderr, 0.0);
    let t = event_frequencies(&[neel(16, 0.0, 0.0), neel(16, 0.0, 180.0), neel(16, 30.0, 0.0), neel(16, 30.0, 180.0)], &c).unwrap();
    assert_eq!(t.g0.fraction, 0.5);
    assert_eq!(t.g180.fraction, 0.5);
    assert_eq!(t.blocks, 64);
    assert!((t.g0.stderr - (0.25f64 / 64.0).sqrt()).abs() < 1e-15);
    assert!(event_frequencies(&[], &c).is_err());
}

#[test]
fn csv_and_sidecar() {
    let c = criteria(4, 0.1, 0.2);
    let mut config = neel(16, 0.0, 0.0);
    config.set(5, 5, 1.0);
    let field = block_field(&config, &c).unwrap();
    let csv = field.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t1,t2,label,phi_witness_deg,n_feasible_i");
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 16);
    assert_eq!(rows[0][2], "G0");
    assert_eq!(rows[5][2], "BadEnergy");
    assert_eq!(rows[5][3], "");
    let side = field.sidecar_json();
    assert_eq!(side["criteria"]["B"], 4);
    assert_eq!(side["counts"]["BadEnergy"], 1);
    assert_eq!(side["counts"]["G0"], 15);
}

fn snapshots(beta_j: f64, seed: u64, count: usize) -> Vec<SpinConfiguration> {
    let mut plan = RunPlan::new(32, 1.0, 1.0, beta_j, Init::Neel { theta_star_deg: 0.0, phi_star_deg: 0.0 }, seed);
    plan.sweeps_burnin = 2000;
    plan.adapt = true;
    plan.measure_every = 500;
    let mut out = Vec::new();
    let mut current = run(&plan).unwrap().final_config;
    plan.sweeps_burnin = 0;
    plan.sweeps_measure = 500;
    for k in 0..count {
        plan.seed = seed + 1 + k as u64;
        current = odo_core::sampler::run_from(&plan, current).unwrap().final_config;
        out.push(current.clone());
    }
    out
}

#[test]
fn low_temperature_snapshots_are_mostly_good() {
    let c = criteria(4, 0.6, 0.2);
    for config in snapshots(10.0, 100, 4) {
        let field = block_field(&config, &c).unwrap();
        assert!(field.good_fraction() >= 0.9, "{}", field.good_fraction());
        assert!(field.boundaries.is_empty());
    }
    let hot = event_frequencies(&snapshots(0.1, 200, 2), &c).unwrap();
    assert!(hot.g0.fraction + hot.g180.fraction < 0.5);
}

#[test]
fn energy_violations_thin_out_with_cooling() {
    let c = criteria(4, 0.6, 0.2);
    let freq: Vec<f64> = [0.1, 1.0, 10.0]
        .iter()
        .map(|&b| event_frequencies(&snapshots(b, 300, 3), &c).unwrap().bad_energy.fraction)
        .collect();
    assert!(freq[0] >= freq[1] && freq[1] >= freq[2], "{freq:?}");
    assert!(freq[2] < freq[0], "{freq:?}");
}
