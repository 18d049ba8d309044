use std::f64::consts::{FRAC_PI_2, PI};

use odo_core::model::{self, CouplingParams, LatticeTorus, ReferenceFrame};
use odo_core::spinwave::{
    dispersion, dispersion_bond_form, free_energy, hessian_check, lattice_free_energy, massive_free_energy, scan_minima,
    SpinWaveSpec,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Catalan's constant from its alternating series, summed in pairs from the tail.
fn catalan() -> f64 {
    let terms = 2_000_000u64;
    let mut s = 0.0;
    for n in (0..terms).rev() {
        let t = 1.0 / ((2 * n + 1) as f64).powi(2);
        s += if n % 2 == 0 { t } else { -t };
    }
    s
}

fn spec(phi_deg: f64, gamma: f64) -> SpinWaveSpec {
    SpinWaveSpec::new(phi_deg.to_radians(), gamma)
}

#[test]
fn perpendicular_state_gives_catalan_value() {
    let expected = 2.0 * catalan() / PI;
    assert!((expected - 0.5831218080616376).abs() < 1e-12);
    for gamma in [0.25, 1.0, 1.9] {
        let f = free_energy(&SpinWaveSpec::new(FRAC_PI_2, gamma)).unwrap();
        assert!((f.value - expected).abs() < 1e-5, "gamma {gamma}: {}", f.value);
        assert!((f.value - expected).abs() < 1e-9);
    }
}

#[test]
fn colinear_states_are_degenerate() {
    for gamma in [0.1, 0.5, 1.0, 1.5, 1.95] {
        let a = free_energy(&spec(0.0, gamma)).unwrap().value;
        let b = free_energy(&spec(180.0, gamma)).unwrap().value;
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn colinear_states_beat_every_tilted_state() {
    let base = free_energy(&spec(0.0, 1.0)).unwrap().value;
    for phi in [30.0, 60.0, 90.0, 120.0, 150.0] {
        assert!(free_energy(&spec(phi, 1.0)).unwrap().value - base > 0.0, "phi {phi}");
    }
}

#[test]
fn strict_selection_on_five_degree_grid() {
    for gamma in [0.5, 1.0, 1.5] {
        let scan = scan_minima(gamma, 5.0, 1e-7, 0.0).unwrap();
        let f0 = scan.value_at(0.0).unwrap();
        for p in &scan.points {
            let d = p.phi_deg.min(360.0 - p.phi_deg);
            if (d - 0.0).abs() >= 5.0 && (d - 180.0).abs() >= 5.0 {
                assert!(p.free_energy.value - f0 > 0.0, "gamma {gamma}, phi {}", p.phi_deg);
            }
        }
    }
}

#[test]
fn scan_argmin_is_the_colinear_pair() {
    let scan = scan_minima(1.0, 5.0, 1e-7, 0.0).unwrap();
    assert_eq!(scan.argmin_deg(), vec![0.0, 180.0]);
    assert_eq!(scan.selects_colinear(), Some(true));
    for gamma in [0.25, 1.75] {
        let scan = scan_minima(gamma, 15.0, 1e-7, 0.0).unwrap();
        assert_eq!(scan.argmin_deg(), vec![0.0, 180.0], "gamma {gamma}");
    }
}

#[test]
fn scan_values_respect_reflections() {
    let scan = scan_minima(1.0, 15.0, 1e-8, 0.0).unwrap();
    for p in &scan.points {
        let mirror = scan.value_at((360.0 - p.phi_deg) % 360.0).unwrap();
        let supplement = scan.value_at((180.0 - p.phi_deg).rem_euclid(360.0)).unwrap();
        assert!((p.free_energy.value - mirror).abs() < 1e-9);
        assert!((p.free_energy.value - supplement).abs() < 1e-9);
    }
}

#[test]
fn scan_grid_missing_colinear_angles_reports_none() {
    let scan = scan_minima(1.0, 7.0, 1e-7, 0.0).unwrap();
    assert_eq!(scan.selects_colinear(), None);
}

#[test]
fn scan_csv_layout() {
    let scan = scan_minima(1.0, 90.0, 1e-7, 0.0).unwrap();
    let csv = scan.to_csv(true);
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "phi_deg,gamma,lambda,F,err_est,quad_n,argmin");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0][6], "1");
    assert_eq!(rows[1][6], "0");
    assert_eq!(rows[2][6], "1");
    assert!(scan.to_csv(false).starts_with("phi_deg,gamma,lambda,F,err_est,quad_n\n"));
}

#[test]
fn scan_rejects_out_of_range_gamma() {
    assert!(scan_minima(0.0, 5.0, 1e-7, 0.0).is_err());
    assert!(scan_minima(2.0, 5.0, 1e-7, 0.0).is_err());
}

#[test]
fn massive_limit_approaches_half_log_mass() {
    for lambda in [1e3, 1e4] {
        let f = massive_free_energy(&spec(40.0, 1.0), lambda).unwrap().value;
        let excess = f - 0.5 * f64::ln(lambda);
        // ½ log(1 + D/λ) averages to about ⟨D⟩/(2λ) = 2/λ
        assert!(excess > 0.0 && excess <= 2.5 / lambda, "lambda {lambda}: {excess}");
    }
}

#[test]
fn mass_raises_free_energy() {
    for i in 0..24 {
        let s = spec(15.0 * i as f64, 1.0);
        let massless = free_energy(&s).unwrap().value;
        let mut prev = massless;
        for lambda in [1e-3, 1e-2, 0.1] {
            let f = massive_free_energy(&s, lambda).unwrap().value;
            assert!(f >= massless);
            assert!(f >= prev);
            prev = f;
        }
    }
}

#[test]
fn massive_value_matches_stored_reference() {
    // recorded from a run at tol 1e-10, confirmed unchanged at twice the resolution
    let f = massive_free_energy(&spec(0.0, 1.0).with_tol(1e-10), 0.01).unwrap();
    assert!((f.value - 0.5425418630488368).abs() < 1e-9);
}

#[test]
fn massive_rejects_zero_mass() {
    assert!(massive_free_energy(&spec(0.0, 1.0), 0.0).is_err());
}

#[test]
fn sixteen_site_lattice_sum_by_hand() {
    // cos k ∈ {1, 0, −1, 0}: D = 4 − 4 c1 c2 takes 0 twice, 8 twice, 4 twelve times
    let expected = (f64::ln(9.0) + 6.0 * f64::ln(5.0)) / 16.0;
    let got = lattice_free_energy(4, &SpinWaveSpec::new(FRAC_PI_2, 0.0), 1.0).unwrap();
    assert!((got - expected).abs() < 1e-14);
}

#[test]
fn lattice_sum_converges_to_integral() {
    let s = spec(0.0, 1.0).with_tol(1e-10);
    let integral = massive_free_energy(&s, 0.1).unwrap().value;
    let mut prev = f64::INFINITY;
    for l in [8, 16, 32, 256] {
        let diff = (lattice_free_energy(l, &s, 0.1).unwrap() - integral).abs();
        assert!(diff <= prev);
        prev = diff;
    }
    assert!(prev <= 1e-4);
}

#[test]
fn lattice_sum_is_even_in_phi() {
    let a = lattice_free_energy(16, &spec(37.0, 1.3), 0.2).unwrap();
    let b = lattice_free_energy(16, &spec(-37.0, 1.3), 0.2).unwrap();
    assert_eq!(a, b);
}

#[test]
fn lattice_sum_rejects_bad_inputs() {
    assert!(lattice_free_energy(16, &spec(0.0, 1.0), 0.0).is_err());
    assert!(lattice_free_energy(6, &spec(0.0, 1.0), 0.1).is_err());
}

#[test]
fn hessian_matches_dispersion() {
    for (phi, gamma) in [(0.0, 1.0), (90.0, 1.0), (30.0, 0.5), (180.0, 1.7)] {
        let r = hessian_check(8, f64::to_radians(phi), gamma).unwrap();
        assert!(r.agrees(1e-5), "phi {phi} gamma {gamma}: {r:?}");
        assert!(r.max_off_diagonal < 1e-8);
        assert_eq!(r.modes.len(), 64);
    }
}

#[test]
fn perpendicular_hessian_is_gamma_independent() {
    let r = hessian_check(8, FRAC_PI_2, 1.0).unwrap();
    for m in &r.modes {
        let (k1, k2) = (2.0 * PI * m.n1 as f64 / 8.0, 2.0 * PI * m.n2 as f64 / 8.0);
        let surface = 4.0 - 4.0 * k1.cos() * k2.cos();
        assert!((m.finite_difference - surface).abs() < 1e-6);
    }
}

#[test]
fn hessian_check_preconditions() {
    assert!(hessian_check(6, 0.0, 1.0).is_err());
    assert!(hessian_check(20, 0.0, 1.0).is_err());
    assert!(hessian_check(8, 0.0, 0.0).is_err());
    assert!(hessian_check(8, 0.0, 2.0).is_err());
}

#[test]
fn neel_states_are_critical_points() {
    let params = CouplingParams::new(1.0, 1.0, 1.0).unwrap();
    for phi in [0.0, 45.0, 90.0, 180.0] {
        let neel = model::neel_state(LatticeTorus::new(8).unwrap(), ReferenceFrame::from_degrees(13.0, phi)).unwrap();
        let g = model::gradient(&neel, &params);
        assert!(g.iter().all(|v| v.abs() < 1e-8));
    }
}

#[test]
fn dispersion_is_nonnegative() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1_000_000 {
        let k1 = rng.random_range(-PI..PI);
        let k2 = rng.random_range(-PI..PI);
        let g = rng.random_range(-1.999_999..1.999_999);
        let d = dispersion(k1, k2, g).unwrap();
        assert!(d > 0.0, "D({k1}, {k2}; {g}) = {d}");
    }
}

proptest! {
    #[test]
    fn affine_in_cos_phi(k1 in -PI..PI, k2 in -PI..PI, phi in -PI..PI, gamma in 0.0..1.999) {
        let a = 0.5 * (1.0 + phi.cos());
        let d0 = dispersion(k1, k2, gamma).unwrap();
        let d180 = dispersion(k1, k2, -gamma).unwrap();
        let d = dispersion(k1, k2, gamma * phi.cos()).unwrap();
        prop_assert!((d - (a * d0 + (1.0 - a) * d180)).abs() < 1e-12);
    }

    #[test]
    fn factored_form_matches_bond_form(k1 in -PI..PI, k2 in -PI..PI, g in -1.999..1.999f64) {
        prop_assert!((dispersion(k1, k2, g).unwrap() - dispersion_bond_form(k1, k2, g)).abs() < 1e-12);
    }

    #[test]
    fn swapping_momenta_flips_coupling(k1 in -PI..PI, k2 in -PI..PI, g in -1.999..1.999f64) {
        prop_assert!((dispersion(k1, k2, g).unwrap() - dispersion(k2, k1, -g).unwrap()).abs() < 1e-12);
    }
}
