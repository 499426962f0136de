use reeb_core::models::{
    HenonHeiles, IsotropicOscillator, LocalModel, LocalModelParams, PlaneRotation,
};
use reeb_core::orbits::{
    count_orbits_up_to_period, energy_continuation, find_lyapunov_triple, find_periodic_orbit,
    lyapunov_guess, OrbitClass, OrbitOptions,
};

const E: f64 = 1.0 / 6.0 + 1e-3;

#[test]
fn oscillator_orbit_is_degenerate_with_period_two_pi() {
    let osc = IsotropicOscillator::new(0.5);
    let orbit = find_periodic_orbit(&osc, &[1.0, 0.0, 0.0, 0.0], 6.2, &OrbitOptions::default()).unwrap();
    assert!((orbit.period - 2.0 * std::f64::consts::PI).abs() < 1e-9);
    assert!(orbit.floquet.degenerate);
    assert_eq!(orbit.class, OrbitClass::Parabolic);
}

#[test]
fn local_model_origin_orbit_has_closed_form_multipliers() {
    let params = LocalModelParams::constant(2.0, 0.4, 1.0);
    let model = LocalModel::<f64>::new(&params).unwrap();
    let orbit = find_periodic_orbit(&model, &[0.0, 1e-3, -2e-3], 1.9, &OrbitOptions::default()).unwrap();
    assert!((orbit.period - 2.0).abs() < 1e-10);
    let mu = (0.4f64 * 2.0).exp();
    assert!((orbit.floquet.multipliers[1].0 - mu).abs() < 1e-8);
    assert!((orbit.floquet.multipliers[0].0 - 1.0 / mu).abs() < 1e-8);
    assert_eq!(orbit.class, OrbitClass::Hyperbolic);
    assert!((orbit.floquet.determinant - 1.0).abs() < 1e-6);
}

#[test]
fn henon_heiles_lyapunov_triple() {
    let model = HenonHeiles::new(E).unwrap();
    let triple = find_lyapunov_triple(&model, &OrbitOptions::default()).unwrap();
    assert_eq!(triple.orbits.len(), 3);
    assert!(triple.period_spread < 1e-9, "period spread {:e}", triple.period_spread);
    assert!(triple.action_spread < 1e-9);
    assert!(triple.symmetry_error < 1e-6, "symmetry error {:e}", triple.symmetry_error);
    for o in &triple.orbits {
        assert!(o.is_hyperbolic());
        let prod = o.floquet.multipliers[0].0 * o.floquet.multipliers[1].0;
        assert!((prod - 1.0).abs() < 1e-6, "multiplier product {prod}");
        assert!(o.closure_residual < 1e-10);
    }
}

#[test]
fn perturbed_guess_converges_to_the_same_orbit() {
    let model = HenonHeiles::new(E).unwrap();
    let opts = OrbitOptions::default();
    let (guess, period) = lyapunov_guess(E, 0);
    let a = find_periodic_orbit(&model, &guess, period, &opts).unwrap();
    let mut g2 = guess.clone();
    g2[0] *= 1.05;
    g2[3] += 1e-3;
    let b = find_periodic_orbit(&model, &g2, period * 1.01, &opts).unwrap();
    assert!((a.period - b.period).abs() < 10.0 * opts.tol_closure);
}

#[test]
fn amplitude_shrinks_as_energy_approaches_critical_value() {
    let energies = [1.0 / 6.0 + 4e-3, 1.0 / 6.0 + 2e-3, 1.0 / 6.0 + 1e-3, 1.0 / 6.0 + 5e-4];
    let ladder = energy_continuation(&energies, &OrbitOptions::default()).unwrap();
    for w in ladder.windows(2) {
        assert!(w[1].2 < w[0].2, "amplitudes {} -> {}", w[0].2, w[1].2);
    }
}

#[test]
fn rotation_has_bounded_periodic_points() {
    let rot = PlaneRotation::new(2f64.sqrt());
    let table = count_orbits_up_to_period(&rot, 12).unwrap();
    assert!(table.rate.abs() < 1e-12);
    assert!(table.rows.iter().all(|r| r.count == 1));
}
