use reeb_core::flowcore::{HitOptions, IntegratorOptions};
use reeb_core::models::{HenonHeiles, LocalModel, LocalModelParams};
use reeb_core::orbits::{find_lyapunov_triple, find_periodic_orbit, OrbitOptions};
use reeb_core::transition::*;

const E: f64 = 1.0 / 6.0 + 1e-3;

fn hit_opts() -> HitOptions {
    HitOptions {
        integrator: IntegratorOptions::with_tol(1e-12),
        ..HitOptions::default()
    }
}

#[test]
fn normal_form_round_trip_on_local_model() {
    let params = LocalModelParams {
        u_series: vec![0.7, 0.3, -0.2],
        ..LocalModelParams::constant(1.0, 0.7, 1.0)
    };
    let model = LocalModel::<f64>::new(&params).unwrap();
    let orbit = find_periodic_orbit(&model, &[0.0, 1e-4, -1e-4], 1.0, &OrbitOptions::default()).unwrap();
    let opts = NormalFormOptions {
        order: 5,
        ..NormalFormOptions::default()
    };
    let chart = fit_normal_form(&model, &orbit, 0.3, &opts).unwrap();
    for (fit, exact) in chart.u_series.iter().zip(&params.u_series) {
        assert!((fit - exact).abs() < 1e-8, "u coefficient {fit} vs {exact}");
    }
    let linear = orbit.unstable_multiplier().ln() / orbit.period;
    assert!((chart.u_series[0] - linear).abs() < 1e-8);
}

#[test]
fn henon_heiles_chart_conserves_xy_along_transits() {
    let model = HenonHeiles::new(E).unwrap();
    let triple = find_lyapunov_triple(&model, &OrbitOptions::default()).unwrap();
    let orbit = &triple.orbits[0];
    let chart = fit_normal_form(&model, orbit, 0.01, &NormalFormOptions::default()).unwrap();
    let linear = orbit.unstable_multiplier().ln() / orbit.period;
    assert!((chart.u_series[0] - linear).abs() < 1e-8, "{} vs {linear}", chart.u_series[0]);
    let report = transit_drift(&model, &chart, 100, &hit_opts()).unwrap();
    println!("residual {:e} drift {:e} returns {}", chart.residual, report.max_drift, report.mean_returns);
    assert!(report.max_drift < 1e-6, "drift {:e}", report.max_drift);
    assert!(report.mean_returns >= 1.0);
}

fn unit_local(delta: f64) -> LocalLift {
    LocalLift::new(vec![1.0], 1.0, delta).unwrap()
}

fn synthetic_chain() -> Vec<TransitionLift> {
    let global = GlobalLift::trigonometric(0.3, 0.05, 0.5, 1.0, 0.3, 0.5).unwrap();
    vec![TransitionLift::LocalExterior(unit_local(1.0)), TransitionLift::Global(global)]
}

#[test]
fn local_lift_closed_form_values() {
    let l = unit_local(0.5);
    assert!((l.delta_t(0.125) - 2f64.ln()).abs() < 1e-15);
    assert_eq!(l.delta_t(0.25), 0.0);
    let ladder: Vec<f64> = (1..=20).map(|m| l.delta_t(0.5 / 2f64.powi(m))).collect();
    assert!(ladder.windows(2).all(|w| w[1] > w[0]));
    assert!(ladder[19] > 12.0);
    assert!(l.h(0.0) > 0.0);
    // g - h ln r reproduces the passage time.
    let r = 1e-3;
    assert!((l.g(r) - l.h(r) * r.ln() - l.delta_t(r)).abs() < 1e-14);
}

#[test]
fn local_lift_from_fitted_chart() {
    let params = LocalModelParams::constant(2.0, 0.5, 1.0);
    let model = LocalModel::<f64>::new(&params).unwrap();
    let orbit = find_periodic_orbit(&model, &[0.0, 1e-4, 1e-4], 2.0, &OrbitOptions::default()).unwrap();
    let chart = fit_normal_form(&model, &orbit, 0.3, &NormalFormOptions::default()).unwrap();
    let lift = local_exterior_lift(&chart, 0.1).unwrap();
    assert_eq!(lift.eval(0.3, 0.01).1, 0.01);
    let TransitionLift::LocalExterior(l) = &lift else { panic!() };
    // Normalized time: ln(δ / 2r) / (T u).
    assert!((l.delta_t(0.01) - (5.0f64).ln() / (2.0 * 0.5)).abs() < 1e-8);
    assert!(local_exterior_lift(&chart, 0.5).is_err());
}

#[test]
fn transit_times_match_closed_form() {
    let params = LocalModelParams {
        u_series: vec![1.0, 0.5],
        ..LocalModelParams::constant(1.0, 1.0, 1.0)
    };
    let model = LocalModel::<f64>::new(&params).unwrap();
    let lift = LocalLift::new(params.u_series.clone(), 1.0, 0.5).unwrap();
    let radii: Vec<f64> = (1..=15).map(|m| 0.5 / 2f64.powi(m)).collect();
    let samples = transit_time_check(&model, &lift, &radii, &hit_opts()).unwrap();
    for s in &samples {
        assert!(s.error < 1e-6, "r = {:e}: {} vs {}", s.r, s.integrated, s.closed_form);
    }
}

#[test]
fn spiral_images_are_monotone_graphs() {
    let lift = unit_local(1.0);
    for n in 1..=3 {
        for &a in &[0.5, 1.0, 2.0] {
            let s_max = (0.4 / a as f64).powf(1.0 / n as f64);
            let rep = spiral_image(&lift, PowerCurve { t0: 0.0, a, n }, 1e-9, s_max, 400).unwrap();
            assert!(rep.monotone, "n = {n}, a = {a}");
            assert!(rep.slope_ratio < 1e-3, "n = {n}, a = {a}: ratio {:e}", rep.slope_ratio);
        }
    }
}

#[test]
fn global_lift_of_fixed_time_push() {
    let model = LocalModel::<f64>::new(&LocalModelParams::constant(1.0, 1.0, 1.0)).unwrap();
    let tau = 0.4;
    let passage = |t: f64, r: f64| {
        let traj = reeb_core::flowcore::integrate(&model, &[t, 0.5, r], 0.0, tau, &IntegratorOptions::with_tol(1e-12))?;
        let z = traj.end_state();
        Ok((z[0], z[2]))
    };
    let opts = GlobalFitOptions {
        r_max: 0.1,
        ..GlobalFitOptions::default()
    };
    let g = global_lift(passage, &opts).unwrap();
    for i in 0..10 {
        let t = i as f64 / 10.0;
        assert!((g.h_value(t) - (t + tau)).abs() < 1e-9);
        assert!((g.y_tilde_value(t, 0.0) - tau.exp()).abs() < 1e-9);
    }
}

#[test]
fn global_lift_of_synthetic_passage_flow() {
    use reeb_core::flowcore::{first_hit, CrossingDirection, Section};
    use reeb_core::models::SyntheticPassage;
    let model = SyntheticPassage {
        alpha: 0.2,
        beta: 0.5,
        kappa: 0.3,
    };
    let section = Section::coordinate(3, 2, 1.0, CrossingDirection::Positive);
    let passage = |t: f64, r: f64| {
        let (hit, status) = first_hit(&model, &[t, r, 0.0], &section, &hit_opts());
        status?;
        let (_, z) = hit.unwrap();
        Ok((z[0], z[1]))
    };
    let g = global_lift(passage, &GlobalFitOptions::default()).unwrap();
    for i in 0..10 {
        let t = i as f64 / 10.0;
        assert!((g.h_value(t) - (t + 0.2)).abs() < 1e-6);
        let (tt, rr) = model.passage(t, 0.03);
        let (x, y) = g.eval(t, 0.03);
        assert!((x - tt).abs() < 1e-6 && (y - rr).abs() < 1e-6);
    }
    let lift = compose_lifts(vec![TransitionLift::Global(g)], &CertificateOptions::default()).unwrap();
    let cert = lift.certificate().unwrap();
    // Without a local factor the twist constant only reflects the bounded shift.
    assert!(cert.c < 0.2 / 1e-12f64.ln().abs());
    assert!(cert.a < 0.3f64.exp() && cert.b > 0.3f64.exp());
}

#[test]
fn global_fit_rejects_sign_changing_radial_part() {
    let passage = |t: f64, r: f64| Ok((t, -r));
    assert!(global_lift(passage, &GlobalFitOptions::default()).is_err());
}

#[test]
fn single_local_certificate_sits_below_h0() {
    let l = unit_local(1.0);
    let h0 = l.h(0.0);
    let lift = compose_lifts(vec![TransitionLift::LocalExterior(l)], &CertificateOptions::default()).unwrap();
    let c = lift.certificate().unwrap();
    assert!(c.c > 0.0 && c.c < h0);
    assert!((c.a - 0.9).abs() < 1e-12 && (c.b - 1.1).abs() < 1e-12);
}

#[test]
fn empty_chain_is_the_identity() {
    let lift = compose_lifts(Vec::new(), &CertificateOptions::default()).unwrap();
    assert_eq!(lift.eval(0.3, 0.2), (0.3, 0.2));
    let c = lift.certificate().unwrap();
    assert!(c.trivial && c.a == 1.0 && c.b == 1.0);
}

#[test]
fn composed_certificate_is_stable_under_refinement() {
    let coarse = compose_lifts(synthetic_chain(), &CertificateOptions::default()).unwrap();
    let fine_opts = CertificateOptions {
        t_samples: 200,
        r_samples: 200,
        ..CertificateOptions::default()
    };
    let fine = compose_lifts(synthetic_chain(), &fine_opts).unwrap();
    let (a, b) = (coarse.certificate().unwrap(), fine.certificate().unwrap());
    assert_eq!(a.r0, b.r0);
    for (x, y) in [(a.c, b.c), (a.a, b.a), (a.b, b.b)] {
        assert!((x - y).abs() / x.abs() < 0.05, "{x} vs {y}");
    }
    // Every grid sample satisfies the inequalities.
    for i in 0..100 {
        for j in 0..100 {
            let t = i as f64 / 100.0;
            let r = (a.r_min.ln() + (a.r0.ln() - a.r_min.ln()) * j as f64 / 99.0).exp();
            let (tt, rr) = coarse.eval(t, r);
            assert!(tt - t > -a.c * r.ln());
            assert!(a.a * r < rr && rr < a.b * r);
        }
    }
}

#[test]
fn extending_by_a_local_lift_shifts_only_c() {
    let base = compose_lifts(synthetic_chain(), &CertificateOptions::default()).unwrap();
    let extra = unit_local(1.0);
    let h0 = extra.h(0.0);
    let mut chain = synthetic_chain();
    chain.push(TransitionLift::LocalExterior(extra));
    let ext = compose_lifts(chain, &CertificateOptions::default()).unwrap();
    let (a, b) = (base.certificate().unwrap(), ext.certificate().unwrap());
    if a.r0 == b.r0 {
        assert!((a.a - b.a).abs() < 1e-12 && (a.b - b.b).abs() < 1e-12);
    }
    assert!(b.c >= a.c);
    assert!(b.c - a.c <= h0 + 0.1);
}

#[test]
fn twist_fixed_points_on_synthetic_model() {
    let lift = compose_lifts(synthetic_chain(), &CertificateOptions::default()).unwrap();
    let levels = find_twist_periodic_points(&lift, 5..=12, &TwistSearchOptions::default()).unwrap();
    let mut radii = Vec::new();
    for lv in &levels {
        assert!(lv.bracketed && !lv.degenerate, "k = {}", lv.k);
        assert_eq!(lv.points.len(), 2, "k = {}", lv.k);
        for p in &lv.points {
            assert!(p.residual < 1e-8, "k = {} residual {:e}", lv.k, p.residual);
            // Fixed points sit where Ỹ = 1, i.e. the image angle is 1/4 or 3/4.
            let t_img = (p.t + TransitionLift::LocalExterior(unit_local(1.0)).eval(0.0, p.r).0).rem_euclid(1.0);
            assert!((t_img - 0.25).abs() < 1e-6 || (t_img - 0.75).abs() < 1e-6);
            radii.push(p.r);
        }
    }
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert!(radii.windows(2).all(|w| w[1] > w[0] * (1.0 + 1e-9)));
}

#[test]
fn twist_levels_below_range_are_not_bracketed() {
    let lift = compose_lifts(synthetic_chain(), &CertificateOptions::default()).unwrap();
    let levels = find_twist_periodic_points(&lift, [-3, 0], &TwistSearchOptions::default()).unwrap();
    assert!(levels.iter().all(|l| !l.bracketed && l.note.as_deref().unwrap().starts_with("not bracketed")));
}

#[test]
fn pure_local_lift_has_degenerate_levels() {
    let lift = TransitionLift::LocalExterior(unit_local(2.0));
    let levels = find_twist_periodic_points(&lift, 1..=6, &TwistSearchOptions::default()).unwrap();
    for lv in &levels {
        assert!(lv.degenerate);
        let r = lv.points[0].r;
        assert!((r - (-(lv.k as f64)).exp()).abs() < 1e-12 * r.max(1e-300) + 1e-15, "k = {}", lv.k);
    }
}

fn unit_circle() -> Circle {
    Circle {
        center: [0.0, 0.0],
        radius: 1.0,
    }
}

#[test]
fn identity_branch_is_coincident() {
    let c = unit_circle();
    let rep = classify_branch(&c, &c, |p| p, 720, 1e-5).unwrap();
    assert_eq!(rep.class, BranchClass::Coincident);
}

#[test]
fn outward_push_touching_once_is_scenario_b() {
    let c = unit_circle();
    let push = |p: [f64; 2]| {
        let th = p[1].atan2(p[0]);
        let s = 1.0 + 1e-3 * (1.0 - th.cos());
        [p[0] * s, p[1] * s]
    };
    let rep = classify_branch(&c, &c, push, 720, 1e-5).unwrap();
    assert_eq!(rep.class, BranchClass::ScenarioB);
    assert_eq!(rep.tangencies, 1);
    assert_eq!(rep.crossings, 0);
}

#[test]
fn shear_crosses_the_circle_an_even_number_of_times() {
    let c = unit_circle();
    let rep = classify_branch(&c, &c, |p| [p[0] + 0.5 * p[1], p[1]], 721, 1e-5).unwrap();
    assert_eq!(rep.class, BranchClass::ScenarioC);
    // The sheared ellipse meets the circle where y² (a² + 2a xy/y² ...) = 0: four points.
    assert_eq!(rep.crossings, 4);
}

#[test]
fn ambiguous_distance_is_undetermined() {
    let c = unit_circle();
    let rep = classify_branch(&c, &c, |p| [p[0] * (1.0 + 5e-5), p[1] * (1.0 + 5e-5)], 360, 1e-5).unwrap();
    assert_eq!(rep.class, BranchClass::Undetermined);
}

fn schema(available: f64, ks: usize) -> FoliationSchema {
    FoliationSchema {
        families: (0..ks)
            .map(|k| DiskFamily {
                j: 0,
                k,
                disk_area: 1.0,
                available_area: available,
            })
            .collect(),
        equal_area: true,
        tol_area: 1e-9,
        classification: Default::default(),
    }
}

#[test]
fn forwarding_that_meets_a_circle_immediately() {
    let s = schema(3.5, 1);
    let mut oracle = TableOracle {
        disk_area: 1.0,
        ..Default::default()
    };
    oracle.entries.insert((0, 0), (0, 0));
    let tr = iterate_disk_forwarding(&s, &oracle, (0, 0)).unwrap();
    assert!(tr.disks.is_empty());
    assert_eq!(tr.image, (0, 0));
}

#[test]
fn forwarding_respects_the_area_bound() {
    let s = schema(3.5, 1);
    for steps in 0..=3 {
        let mut oracle = TableOracle {
            disk_area: 1.0,
            ..Default::default()
        };
        oracle.entries.insert((0, 0), (steps, 0));
        let tr = iterate_disk_forwarding(&s, &oracle, (0, 0)).unwrap();
        assert_eq!(tr.bound, 3);
        assert_eq!(tr.disks.len(), steps);
    }
    let mut oracle = TableOracle {
        disk_area: 1.0,
        ..Default::default()
    };
    oracle.entries.insert((0, 0), (4, 0));
    assert!(iterate_disk_forwarding(&s, &oracle, (0, 0)).is_err());
}

#[test]
fn cyclic_schema_forwards_as_a_rotation() {
    let n = 5;
    let s = schema(3.5, n);
    let mut oracle = TableOracle {
        disk_area: 1.0,
        ..Default::default()
    };
    for k in 0..n {
        oracle.entries.insert((0, k), (2, (k + 1) % n));
    }
    let traces: Vec<_> = forwarding_map(&s, &oracle).into_iter().map(Result::unwrap).collect();
    for (k, tr) in traces.iter().enumerate() {
        assert_eq!(tr.image, (0, (k + 1) % n));
        assert_eq!(tr.disks.len(), 2);
    }
}

#[test]
fn unequal_areas_are_rejected() {
    let mut s = schema(3.5, 2);
    s.families[1].disk_area = 1.1;
    assert!(s.validate().is_err());
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn local_lift_commutes_with_translation(t in -5.0..5.0f64, c in -3.0..3.0f64, r in 1e-9..0.49f64) {
            let lift = TransitionLift::LocalExterior(LocalLift::new(vec![0.8, 0.2], 1.5, 1.0).unwrap());
            let (a, b) = lift.eval(t + c, r);
            let (x, y) = lift.eval(t, r);
            prop_assert!((a - x - c).abs() < 1e-12);
            prop_assert_eq!(b, y);
            prop_assert_eq!(y, r);
        }

        #[test]
        fn composed_lift_is_equivariant_under_integer_shift(t in 0.0..1.0f64, r in 1e-8..0.2f64) {
            let lift = compose_lifts(synthetic_chain(), &CertificateOptions { t_samples: 10, r_samples: 10, ..Default::default() }).unwrap();
            let (a, b) = lift.eval(t + 1.0, r);
            let (x, y) = lift.eval(t, r);
            prop_assert!((a - x - 1.0).abs() < 1e-9);
            prop_assert!((b - y).abs() < 1e-15 * y.max(1.0));
        }

        #[test]
        fn classification_is_rotation_invariant(angle in 0.0..6.28f64, shear in 0.2..0.8f64) {
            let rot = |p: [f64; 2], a: f64| {
                let (s, c) = a.sin_cos();
                [c * p[0] - s * p[1], s * p[0] + c * p[1]]
            };
            let c0 = unit_circle();
            let psi = |p: [f64; 2]| [p[0] + shear * p[1], p[1]];
            let base = classify_branch(&c0, &c0, psi, 721, 1e-5).unwrap();
            let turned = classify_branch(&c0, &c0, |p| rot(psi(rot(p, -angle)), angle), 721, 1e-5).unwrap();
            prop_assert_eq!(base.class, turned.class);
            prop_assert_eq!(base.crossings, turned.crossings);
        }
    }
}
