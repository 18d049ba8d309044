use std::f64::consts::{PI, TAU};

use odo_core::angle::{circular_distance, circular_mean};
use odo_core::model::{self, CouplingParams, LatticeTorus, ReferenceFrame, SpinConfiguration};
use odo_core::sampler::{
    batch_means, estimate_frame, run, run_from, sweep, Init, Proposal, RunPlan, SweepStreams,
};
use odo_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn neel_init(theta: f64, phi: f64) -> Init {
    Init::Neel {
        theta_star_deg: theta,
        phi_star_deg: phi,
    }
}

#[test]
fn infinite_temperature_accepts_everything() {
    let torus = LatticeTorus::new(8).unwrap();
    let params = CouplingParams::new(1.0, 1.0, 0.0).unwrap();
    let mut config = SpinConfiguration::uniform(torus, 0.3);
    let streams = SweepStreams::new(5);
    for s in 0..20 {
        let out = sweep(&mut config, &params, Proposal::Continuous { width: PI }, &mut streams.for_sweep(s));
        assert_eq!(out.accepted, 64);
    }
}

#[test]
fn accepted_energy_changes_add_up() {
    let torus = LatticeTorus::new(8).unwrap();
    let params = CouplingParams::new(1.3, 0.7, 0.8).unwrap();
    let mut config = SpinConfiguration::from_fn(torus, |x, y| (x as f64 * 1.1 + y as f64 * 0.3).sin() * 3.0);
    let streams = SweepStreams::new(2);
    for s in 0..50 {
        let before = model::energy(&config, &params);
        let out = sweep(&mut config, &params, Proposal::Continuous { width: 1.5 }, &mut streams.for_sweep(s));
        let after = model::energy(&config, &params);
        assert!((after - before - out.energy_change).abs() < 1e-10);
    }
}

#[test]
fn cold_chain_stays_near_ground_state() {
    let mut plan = RunPlan::new(8, 1.0, 1.0, 1e4, neel_init(0.0, 0.0), 3);
    plan.sweeps_measure = 2000;
    plan.measure_every = 10;
    plan.proposal_width = 0.02;
    let out = run(&plan).unwrap();
    // ΔH of any single proposal is at most 8 J (1+γ)/2 · width² to second order
    for e in &out.series.entries {
        assert!(e.record.energy_per_site >= -1e-12);
        assert!(e.record.energy_per_site < 0.01);
    }
    let dev = model::deviations(&out.final_config, ReferenceFrame::from_degrees(0.0, 0.0));
    // the chain can drift by a global rotation; measure relative to the estimated frame
    let est = estimate_frame(&out.final_config).unwrap();
    let rel = model::deviations(&out.final_config, est.frame);
    assert!(rel.max_abs() < 0.1, "{}", rel.max_abs());
    assert!(dev.max_abs() < PI);
}

#[test]
fn fixed_seed_is_bit_exact() {
    let mut plan = RunPlan::new(8, 1.0, 1.0, 2.0, Init::Random, 77);
    plan.sweeps_burnin = 200;
    plan.sweeps_measure = 300;
    plan.measure_every = 3;
    plan.adapt = true;
    let a = run(&plan).unwrap();
    let b = run(&plan).unwrap();
    assert_eq!(a.series.to_csv(), b.series.to_csv());
    assert_eq!(a.final_config, b.final_config);
    plan.seed = 78;
    assert_ne!(run(&plan).unwrap().series.to_csv(), a.series.to_csv());
}

#[test]
fn empty_measurement_phase() {
    let mut plan = RunPlan::new(4, 1.0, 1.0, 1.0, Init::Random, 1);
    plan.sweeps_burnin = 10;
    let out = run(&plan).unwrap();
    assert!(out.series.entries.is_empty());
    assert_eq!(out.series.acceptance_rate, 0.0);
    assert!((0.0..=1.0).contains(&out.series.burnin_acceptance_rate));
    assert_eq!(out.series.to_csv().lines().count(), 1);
}

#[test]
fn series_is_well_formed() {
    let mut plan = RunPlan::new(8, 1.0, 1.0, 3.0, neel_init(10.0, 0.0), 4);
    plan.sweeps_burnin = 500;
    plan.sweeps_measure = 100;
    plan.measure_every = 7;
    plan.adapt = true;
    let out = run(&plan).unwrap();
    let s = &out.series;
    assert_eq!(s.entries.len(), 14);
    assert!(s.entries.windows(2).all(|w| w[0].sweep < w[1].sweep));
    assert_eq!(s.entries[0].sweep, 507);
    assert!(s.entries.iter().all(|e| (0.0..=1.0).contains(&e.acceptance_rate)));
    assert!((0.0..=1.0).contains(&s.acceptance_rate));
    assert!(s.final_width > 0.0 && s.final_width <= PI);
    let header = s.to_csv().lines().next().unwrap().to_string();
    assert_eq!(header, "sweep,energy_per_site,nn_x,nn_y,nnn,order_param,theta_star_est,phi_star_est,acc_rate");
}

#[test]
fn adaptation_moves_width_toward_target() {
    let mut plan = RunPlan::new(8, 1.0, 1.0, 10.0, neel_init(0.0, 0.0), 4);
    plan.sweeps_burnin = 2000;
    plan.sweeps_measure = 500;
    plan.proposal_width = PI;
    plan.adapt = true;
    let out = run(&plan).unwrap();
    assert!(out.series.final_width < 1.0);
    assert!((0.3..0.7).contains(&out.series.acceptance_rate), "{}", out.series.acceptance_rate);

    plan.adapt = false;
    let frozen = run(&plan).unwrap();
    assert_eq!(frozen.series.final_width, PI);
}

#[test]
fn energy_drift_guard() {
    let mut plan = RunPlan::new(16, 1.0, 1.0, 1.0, Init::Random, 8);
    plan.sweeps_burnin = 1000;
    plan.sweeps_measure = 2000;
    plan.measure_every = 100;
    let out = run(&plan).unwrap();
    assert!(out.series.max_energy_drift < 1e-8, "{}", out.series.max_energy_drift);
}

#[test]
fn rotated_start_gives_same_energies() {
    let mut plan = RunPlan::new(8, 1.0, 1.0, 2.0, Init::Random, 21);
    plan.sweeps_measure = 400;
    plan.measure_every = 4;
    let base = run(&plan).unwrap();
    let start = odo_core::sampler::initial_configuration(&plan).unwrap();
    for alpha in [0.7, -2.1, PI] {
        let rotated = run_from(&plan, start.rotated(alpha)).unwrap();
        for (a, b) in base.series.entries.iter().zip(&rotated.series.entries) {
            assert!((a.record.energy_per_site - b.record.energy_per_site).abs() < 1e-8);
        }
    }
}

#[test]
fn frame_estimate_inverts_neel_construction() {
    let neel = model::neel_state(LatticeTorus::new(8).unwrap(), ReferenceFrame::from_degrees(30.0, 80.0)).unwrap();
    let est = estimate_frame(&neel).unwrap();
    assert!(circular_distance(est.frame.theta_star, 30f64.to_radians()) < 1e-12);
    assert!(circular_distance(est.frame.phi_star, 80f64.to_radians()) < 1e-12);
    assert!((est.resultant_even - 1.0).abs() < 1e-12);
}

#[test]
fn frame_estimate_tolerates_bounded_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let truth = ReferenceFrame::from_degrees(-140.0, 37.0);
    let torus = LatticeTorus::new(16).unwrap();
    for _ in 0..50 {
        let noisy = SpinConfiguration::from_fn(torus, |x, y| truth.offset(model::Parity::of(x, y)) + rng.random_range(-0.1..0.1));
        let est = estimate_frame(&noisy).unwrap();
        assert!(circular_distance(est.frame.theta_star, truth.theta_star) < 0.1);
        assert!(circular_distance(est.frame.phi_star, truth.phi_star) < 0.2);
        assert!(circular_distance(est.frame.theta_star + est.frame.phi_star, truth.theta_star + truth.phi_star) < 0.1);
    }
}

#[test]
fn frame_estimate_flags_disorder() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let torus = LatticeTorus::new(32).unwrap();
    for _ in 0..20 {
        let random = SpinConfiguration::from_fn(torus, |_, _| rng.random_range(-PI..PI));
        match estimate_frame(&random) {
            Ok(est) => assert!(est.resultant_even < 0.2),
            Err(e) => assert!(matches!(e, Error::DegenerateMean)),
        }
    }
    // exactly cancelling angles
    let cancel = SpinConfiguration::from_fn(torus, |x, _| if (x / 2) % 2 == 0 { 0.0 } else { PI });
    assert!(matches!(estimate_frame(&cancel), Err(Error::DegenerateMean)));
}

#[test]
fn plan_json_round_trip_and_keys() {
    let json = r#"{
        "L": 16, "J": 1.0, "gamma": 1.0, "betaJ": 10.0,
        "init": {"neel": {"theta_star_deg": 0.0, "phi_star_deg": 180.0}},
        "sweeps_burnin": 100, "sweeps_measure": 200, "measure_every": 10,
        "proposal_width": 0.5, "adapt": true, "seed": 42,
        "snapshot_every": null, "out_prefix": "run"
    }"#;
    let plan = RunPlan::from_json(json).unwrap();
    assert_eq!(plan.side, 16);
    assert_eq!(plan.init, neel_init(0.0, 180.0));
    assert_eq!(RunPlan::from_json(&plan.to_json()).unwrap(), plan);
    let value: serde_json::Value = serde_json::from_str(&plan.to_json()).unwrap();
    let mut keys: Vec<&str> = value.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort();
    let mut expected = vec![
        "L", "J", "gamma", "betaJ", "init", "sweeps_burnin", "sweeps_measure", "measure_every", "proposal_width", "adapt",
        "seed", "snapshot_every", "out_prefix",
    ];
    expected.sort();
    assert_eq!(keys, expected);

    let random = json.replace(r#"{"neel": {"theta_star_deg": 0.0, "phi_star_deg": 180.0}}"#, r#""random""#);
    assert_eq!(RunPlan::from_json(&random).unwrap().init, Init::Random);
    let snap = json.replace(r#"{"neel": {"theta_star_deg": 0.0, "phi_star_deg": 180.0}}"#, r#"{"snapshot": "a.odo"}"#);
    assert_eq!(RunPlan::from_json(&snap).unwrap().init, Init::Snapshot("a.odo".into()));
}

#[test]
fn plan_validation() {
    let base = RunPlan::new(16, 1.0, 1.0, 1.0, Init::Random, 1);
    let unknown = base.to_json().replace("\"seed\"", "\"sed\"");
    assert!(RunPlan::from_json(&unknown).is_err());
    for bad in [
        RunPlan { side: 10, ..base.clone() },
        RunPlan { proposal_width: 0.0, ..base.clone() },
        RunPlan { proposal_width: 3.2, ..base.clone() },
        RunPlan { measure_every: 0, ..base.clone() },
        RunPlan { beta_j: -1.0, ..base.clone() },
        RunPlan { j: 0.0, ..base.clone() },
        RunPlan { snapshot_every: Some(5), ..base.clone() },
    ] {
        assert!(matches!(bad.validate(), Err(Error::InvalidInput(_))), "{bad:?}");
    }
}

#[test]
fn snapshots_are_written_and_reloadable() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("chain").to_string_lossy().into_owned();
    let mut plan = RunPlan::new(8, 1.0, 1.0, 5.0, neel_init(0.0, 0.0), 9);
    plan.sweeps_measure = 30;
    plan.snapshot_every = Some(10);
    plan.out_prefix = Some(prefix);
    let out = run(&plan).unwrap();
    assert_eq!(out.snapshots.len(), 3);
    let last = model::read_snapshot(out.snapshots.last().unwrap()).unwrap();
    assert_eq!(last, out.final_config);

    let resumed = RunPlan {
        init: Init::Snapshot(out.snapshots[0].clone()),
        snapshot_every: None,
        ..plan.clone()
    };
    assert!(run(&resumed).is_ok());
    let wrong_size = RunPlan {
        side: 16,
        ..resumed.clone()
    };
    assert!(run(&wrong_size).is_err());
}

#[test]
fn unwritable_snapshot_path_reports_context() {
    let mut plan = RunPlan::new(4, 1.0, 1.0, 1.0, Init::Random, 1);
    plan.sweeps_measure = 1;
    plan.snapshot_every = Some(1);
    plan.out_prefix = Some("/nonexistent-dir/for/sure/x".into());
    match run(&plan) {
        Err(Error::Io { context, path, .. }) => {
            assert_eq!(context, "writing snapshot");
            assert!(path.to_string_lossy().starts_with("/nonexistent-dir"));
        }
        other => panic!("expected an I/O error, got {:?}", other.map(|_| ())),
    }
}

#[test]
fn batch_means_recovers_known_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let values: Vec<f64> = (0..64_000).map(|_| rng.random_range(-1.0..1.0)).collect();
    let m = batch_means(&values, 32);
    let exact = (1.0f64 / 3.0 / 64_000.0).sqrt();
    assert!((m.stderr / exact - 1.0).abs() < 0.5);
    assert!(m.mean.abs() < 5.0 * exact);
    assert!(batch_means(&[1.0], 32).stderr.is_nan());
}

/// Clock states of the 2×2 torus, digits row-major.
fn clock_states(q: u32) -> Vec<Vec<u32>> {
    (0..q.pow(4)).map(|mut s| (0..4).map(|_| { let d = s % q; s /= q; d }).collect()).collect()
}

fn clock_config(digits: &[u32], q: u32) -> SpinConfiguration {
    let torus = LatticeTorus::with_even_side(2).unwrap();
    SpinConfiguration::from_fn(torus, |x, y| TAU * digits[y * 2 + x] as f64 / q as f64)
}

fn clock_index(config: &SpinConfiguration, q: u32) -> usize {
    let mut idx = 0;
    for (k, a) in config.to_row_major().into_iter().enumerate() {
        let d = ((a / (TAU / q as f64)).round() as i64).rem_euclid(q as i64) as usize;
        idx += d * (q as usize).pow(k as u32);
    }
    idx
}

/// Exact one-sweep transition matrix of the clock-restricted chain.
fn exact_sweep_matrix(q: u32, params: &CouplingParams) -> Vec<Vec<f64>> {
    let states = clock_states(q);
    let n = states.len();
    let energies: Vec<f64> = states.iter().map(|s| model::energy(&clock_config(s, q), params)).collect();
    let mut t = vec![vec![0.0; n]; n];
    for s in 0..n {
        t[s][s] = 1.0;
    }
    for site in 0..4 {
        let mut k = vec![vec![0.0; n]; n];
        for (a, digits) in states.iter().enumerate() {
            let mut stay = 1.0;
            for m in 1..q {
                let mut d = digits.clone();
                d[site] = (d[site] + m) % q;
                let b = d.iter().rev().fold(0, |acc, &x| acc * q as usize + x as usize);
                let p = (1.0 / (q - 1) as f64) * (-(params.beta) * (energies[b] - energies[a])).exp().min(1.0);
                k[a][b] += p;
                stay -= p;
            }
            k[a][a] += stay;
        }
        let mut next = vec![vec![0.0; n]; n];
        for i in 0..n {
            for (j, kj) in k.iter().enumerate() {
                if t[i][j] != 0.0 {
                    for l in 0..n {
                        next[i][l] += t[i][j] * kj[l];
                    }
                }
            }
        }
        t = next;
    }
    t
}

#[test]
fn clock_chain_satisfies_detailed_balance() {
    let q = 3;
    let params = CouplingParams::new(1.0, 0.8, 0.9).unwrap();
    let states = clock_states(q);
    let n = states.len();
    let weights: Vec<f64> = states.iter().map(|s| (-params.beta * model::energy(&clock_config(s, q), &params)).exp()).collect();
    let z: f64 = weights.iter().sum();
    let pi: Vec<f64> = weights.iter().map(|w| w / z).collect();

    let t = exact_sweep_matrix(q, &params);
    for l in 0..n {
        let flow: f64 = (0..n).map(|i| pi[i] * t[i][l]).sum();
        assert!((flow - pi[l]).abs() < 1e-14);
    }

    // the sampler's one-sweep transitions, from every start state, against the exact rows
    let samples = 3000;
    let streams = SweepStreams::new(2024);
    let chi: Vec<(f64, usize)> = (0..n)
        .into_par_iter()
        .map(|a| {
            let mut counts = vec![0usize; n];
            for r in 0..samples {
                let mut config = clock_config(&states[a], q);
                sweep(&mut config, &params, Proposal::Clock { q }, &mut streams.for_sweep((a * samples + r) as u64));
                counts[clock_index(&config, q)] += 1;
            }
            let mut chi2 = 0.0;
            let mut cells = 0;
            for b in 0..n {
                let expected = t[a][b] * samples as f64;
                if expected > 0.0 {
                    chi2 += (counts[b] as f64 - expected).powi(2) / expected;
                    cells += 1;
                } else {
                    assert_eq!(counts[b], 0, "impossible transition {a} -> {b}");
                }
            }
            (chi2, cells - 1)
        })
        .collect();
    let chi2: f64 = chi.iter().map(|c| c.0).sum();
    let dof: usize = chi.iter().map(|c| c.1).sum();
    let z_score = (chi2 - dof as f64) / (2.0 * dof as f64).sqrt();
    assert!(z_score.abs() < 4.5, "chi2 {chi2} on {dof} dof");
}

#[test]
fn no_spontaneous_global_orientation() {
    let seeds = 0..32u64;
    let final_frame = |side: usize, sweeps: u64, seed: u64| {
        let mut plan = RunPlan::new(side, 1.0, 1.0, 2.0, neel_init(0.0, 0.0), seed);
        plan.sweeps_measure = sweeps;
        plan.measure_every = sweeps;
        estimate_frame(&run(&plan).unwrap().final_config).unwrap()
    };
    let spread = |sweeps: u64| {
        let thetas: Vec<f64> = seeds.clone().into_par_iter().map(|s| final_frame(16, sweeps, s).frame.theta_star).collect();
        1.0 - circular_mean(thetas).unwrap().1
    };
    let (short, long) = (spread(100), spread(2000));
    assert!(long > short + 0.05, "circular variance {short} -> {long}");

    let magnetization = |side: usize| {
        let r: Vec<f64> = seeds.clone().into_par_iter().map(|s| final_frame(side, 1000, s).resultant_even).collect();
        r.iter().sum::<f64>() / r.len() as f64
    };
    let m: Vec<f64> = [8, 16, 32].into_iter().map(magnetization).collect();
    assert!(m[0] > m[1] && m[1] > m[2], "sublattice magnetization {m:?}");
}
