use reeb_core::indices::{
    asymptotic_spectrum, cz_index, cz_index_refined, fourier_differentiation, linking_number,
    linking_number_checked, self_linking, self_linking_of_orbit, winding_structure_ok, LinkMethod,
    SelfLinkOptions, SpectrumOptions, SphereChart, P3,
};
use reeb_core::models::{
    HenonHeiles, IsotropicOscillator, LinearKind, LinearReebModel, LocalModel, LocalModelParams,
};
use reeb_core::orbits::{find_lyapunov_triple, find_periodic_orbit, OrbitOptions, PeriodicOrbit};

fn linear_orbit(kind: LinearKind, period: f64) -> (LinearReebModel<f64>, PeriodicOrbit) {
    let model = LinearReebModel::new(kind, period);
    let orbit = find_periodic_orbit(&model, &[0.0, 0.0, 0.0], period, &OrbitOptions::default()).unwrap();
    (model, orbit)
}

#[test]
fn fourier_matrix_differentiates_trigonometric_polynomials() {
    let m = 33;
    let period = 3.0;
    let d = fourier_differentiation(m, period);
    let w = std::f64::consts::TAU / period;
    for i in 0..m {
        let mut acc = 0.0;
        for j in 0..m {
            let t = period * j as f64 / m as f64;
            acc += d[(i, j)] * (3.0 * w * t).sin();
        }
        let t = period * i as f64 / m as f64;
        assert!((acc - 3.0 * w * (3.0 * w * t).cos()).abs() < 1e-10);
        for j in 0..m {
            assert_eq!(d[(i, j)], -d[(j, i)]);
        }
    }
}

#[test]
fn elliptic_spectrum_is_shifted_integer_lattice() {
    let period = 1.7;
    let theta = 0.3;
    let (model, orbit) = linear_orbit(LinearKind::Elliptic { theta }, period);
    let spec = asymptotic_spectrum(&orbit, &model, 65, &SpectrumOptions::default()).unwrap();
    // Analytic diagonalization: eigenvalue 2π(k - θ)/T with winding k, multiplicity two.
    for e in &spec.eigenpairs {
        let k = e.winding.unwrap();
        let expected = std::f64::consts::TAU * (k as f64 - theta) / period;
        assert!((e.value - expected).abs() < 1e-8, "{} vs {expected}", e.value);
    }
    assert!(winding_structure_ok(&spec));
    let cz = cz_index(&spec, 1e-6).unwrap();
    assert_eq!((cz.wind_negative, cz.wind_nonnegative, cz.index), (0, 1, 1));
}

#[test]
fn elliptic_index_formula() {
    for &(theta, expected) in &[(0.3, 1), (1.3, 3), (0.9, 1), (1.7, 3), (2.5, 5)] {
        let (model, orbit) = linear_orbit(LinearKind::Elliptic { theta }, 1.0);
        let r = cz_index_refined(&orbit, &model, 64, &SpectrumOptions::default()).unwrap();
        assert_eq!(r.fine.index, expected, "theta {theta}");
    }
}

#[test]
fn hyperbolic_index_is_twice_the_turns() {
    for k in 0..3u32 {
        let (model, orbit) = linear_orbit(LinearKind::Hyperbolic { turns: k, rate: 0.8 }, 1.3);
        let spec = asymptotic_spectrum(&orbit, &model, 129, &SpectrumOptions::default()).unwrap();
        assert!(spec.eigenpairs.iter().all(|e| e.value.abs() > 1e-3));
        let cz = cz_index(&spec, 1e-6).unwrap();
        assert_eq!(cz.wind_negative, k as i64);
        assert_eq!(cz.wind_nonnegative, k as i64);
        assert_eq!(cz.index, 2 * k as i64);
        assert!(winding_structure_ok(&spec));
    }
}

#[test]
fn index_does_not_depend_on_the_complex_structure() {
    let (model, orbit) = linear_orbit(LinearKind::Hyperbolic { turns: 1, rate: 0.5 }, 1.0);
    let base = cz_index(&asymptotic_spectrum(&orbit, &model, 65, &SpectrumOptions::default()).unwrap(), 1e-6)
        .unwrap();
    let opts = SpectrumOptions {
        conjugation: [[2.0, 0.7], [0.0, 0.5]],
        ..SpectrumOptions::default()
    };
    let other = cz_index(&asymptotic_spectrum(&orbit, &model, 65, &opts).unwrap(), 1e-6).unwrap();
    assert_eq!(base.index, other.index);
}

#[test]
fn local_model_has_index_zero() {
    let model = LocalModel::<f64>::new(&LocalModelParams::constant(1.0, 0.6, 1.0)).unwrap();
    let orbit = find_periodic_orbit(&model, &[0.0, 0.0, 0.0], 1.0, &OrbitOptions::default()).unwrap();
    let cz = cz_index(&asymptotic_spectrum(&orbit, &model, 65, &SpectrumOptions::default()).unwrap(), 1e-6)
        .unwrap();
    assert_eq!((cz.wind_negative, cz.wind_nonnegative), (0, 0));
}

#[test]
fn oscillator_orbit_index_is_three() {
    let osc = IsotropicOscillator::new(0.5);
    let orbit = find_periodic_orbit(&osc, &[1.0, 0.0, 0.0, 0.0], 6.28, &OrbitOptions::default()).unwrap();
    let cz = cz_index(&asymptotic_spectrum(&orbit, &osc, 65, &SpectrumOptions::default()).unwrap(), 1e-6)
        .unwrap();
    assert_eq!(cz.index, 3);
    assert!(cz.degenerate);
}

#[test]
fn lyapunov_orbits_have_index_two() {
    let model = HenonHeiles::new(1.0 / 6.0 + 1e-3).unwrap();
    let triple = find_lyapunov_triple(&model, &OrbitOptions::default()).unwrap();
    for o in &triple.orbits {
        let r = cz_index_refined(o, &model, 128, &SpectrumOptions::default()).unwrap();
        assert_eq!(r.fine.index, 2);
        assert!(r.eigenvalue_shift < 1e-6, "shift {:e}", r.eigenvalue_shift);
    }
    let sl = self_linking_of_orbit(&model, &triple.orbits[0], &SelfLinkOptions::default()).unwrap();
    assert_eq!(sl.self_linking, -1, "{}", sl.chart);
}

fn circle(center: P3, radius: f64, axis: usize, n: usize) -> Vec<P3> {
    (0..n)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / n as f64;
            let (s, c) = t.sin_cos();
            let mut p = center;
            let (a, b) = match axis {
                0 => (1, 2),
                1 => (2, 0),
                _ => (0, 1),
            };
            p[a] += radius * c;
            p[b] += radius * s;
            p
        })
        .collect()
}

/// Midpoint-rule Gauss double integral, independent of the segment formula.
fn gauss_quadrature(a: &[P3], b: &[P3]) -> f64 {
    let mut total = 0.0;
    for i in 0..a.len() {
        let (p, q) = (a[i], a[(i + 1) % a.len()]);
        let ma = [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0, (p[2] + q[2]) / 2.0];
        let da = [q[0] - p[0], q[1] - p[1], q[2] - p[2]];
        for j in 0..b.len() {
            let (r, s) = (b[j], b[(j + 1) % b.len()]);
            let mb = [(r[0] + s[0]) / 2.0, (r[1] + s[1]) / 2.0, (r[2] + s[2]) / 2.0];
            let db = [s[0] - r[0], s[1] - r[1], s[2] - r[2]];
            let d = [ma[0] - mb[0], ma[1] - mb[1], ma[2] - mb[2]];
            let c = [
                da[1] * db[2] - da[2] * db[1],
                da[2] * db[0] - da[0] * db[2],
                da[0] * db[1] - da[1] * db[0],
            ];
            let r3 = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).powf(1.5);
            total += (d[0] * c[0] + d[1] * c[1] + d[2] * c[2]) / r3;
        }
    }
    total / (4.0 * std::f64::consts::PI)
}

#[test]
fn unlinked_circles_have_zero_linking() {
    let a = circle([0.0, 0.0, 0.0], 1.0, 2, 64);
    let b = circle([5.0, 0.0, 0.0], 1.0, 0, 64);
    assert_eq!(linking_number_checked(&a, &b, 1e-9).unwrap().linking, 0);
    let c: Vec<P3> = a.iter().map(|p| [p[0] + 100.0, p[1], p[2]]).collect();
    assert_eq!(linking_number_checked(&a, &c, 1e-9).unwrap().linking, 0);
}

#[test]
fn hopf_link_matches_quadrature_and_crossings() {
    let a = circle([0.0, 0.0, 0.0], 1.0, 2, 96);
    let b = circle([1.0, 0.0, 0.0], 1.0, 1, 96);
    let g = linking_number(&a, &b, LinkMethod::Gauss, 1e-9).unwrap();
    let c = linking_number(&a, &b, LinkMethod::Crossings, 1e-9).unwrap();
    assert_eq!(g.linking.abs(), 1);
    assert_eq!(g.linking, c.linking);
    assert!((gauss_quadrature(&a, &b) - g.raw).abs() < 0.05);
    // Symmetric, invariant under reversing both, odd under reversing one.
    let ra: Vec<P3> = a.iter().rev().cloned().collect();
    let rb: Vec<P3> = b.iter().rev().cloned().collect();
    assert_eq!(linking_number_checked(&b, &a, 1e-9).unwrap().linking, g.linking);
    assert_eq!(linking_number_checked(&ra, &rb, 1e-9).unwrap().linking, g.linking);
    assert_eq!(linking_number_checked(&ra, &b, 1e-9).unwrap().linking, -g.linking);
}

#[test]
fn touching_loops_are_rejected() {
    let a = circle([0.0, 0.0, 0.0], 1.0, 2, 32);
    let b = circle([2.0, 0.0, 0.0], 1.0, 2, 32);
    assert!(linking_number(&a, &b, LinkMethod::Gauss, 1e-3).is_err());
}

fn hopf_fiber(z0: [f64; 4], n: usize) -> Vec<[f64; 4]> {
    (0..n)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / n as f64;
            let (s, c) = t.sin_cos();
            [
                z0[0] * c + z0[2] * s,
                z0[1] * c + z0[3] * s,
                z0[2] * c - z0[0] * s,
                z0[3] * c - z0[1] * s,
            ]
        })
        .collect()
}

#[test]
fn hopf_fibers_link_once_and_self_link_minus_one() {
    let chart = SphereChart::new([0.5, 0.5, 0.5, 0.5]);
    let a: Vec<P3> = hopf_fiber([1.0, 0.0, 0.0, 0.0], 128).iter().map(|z| chart.map(z)).collect();
    let b: Vec<P3> = hopf_fiber([0.0, 1.0, 0.0, 0.0], 128).iter().map(|z| chart.map(z)).collect();
    let rec = linking_number_checked(&a, &b, 1e-9).unwrap();
    assert_eq!(rec.linking.abs(), 1);

    let osc = IsotropicOscillator::new(0.5);
    let orbit = find_periodic_orbit(&osc, &[1.0, 0.0, 0.0, 0.0], 6.28, &OrbitOptions::default()).unwrap();
    let sl = self_linking_of_orbit(&osc, &orbit, &SelfLinkOptions::default()).unwrap();
    assert_eq!(sl.self_linking, -1);
}

#[test]
fn planar_unknot_with_vertical_pushoff_has_zero_self_linking() {
    let a = circle([0.0, 0.0, 0.0], 1.0, 2, 64);
    let up = vec![[0.0, 0.0, 1.0]; a.len()];
    let rec = self_linking(&a, &up, None, "R3", &SelfLinkOptions::default()).unwrap();
    assert_eq!(rec.self_linking, 0);
}
