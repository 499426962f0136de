use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reeb_core::horseshoe::*;
use reeb_core::models::{AffineHorseshoe, Mat2, PlanarMap, PlaneRotation, Point2};
use reeb_core::orbits::count_orbits_up_to_period;
use reeb_core::transition::LocalLift;

fn all_words(symbols: usize, len: usize) -> Vec<Vec<usize>> {
    (0..symbols.pow(len as u32))
        .map(|mut k| {
            let mut w = vec![0; len];
            for slot in w.iter_mut().rev() {
                *slot = k % symbols;
                k /= symbols;
            }
            w
        })
        .collect()
}

fn affine(n: usize) -> AffineHorseshoe {
    AffineHorseshoe::new(n as f64 + 1.0, n).unwrap()
}

/// The affine horseshoe seen with the roles of the two axes exchanged.
struct Swapped(AffineHorseshoe);

impl PlanarMap for Swapped {
    fn name(&self) -> &str {
        "swapped"
    }
    fn apply(&self, p: Point2) -> Option<Point2> {
        self.0.apply([p[1], p[0]]).map(|q| [q[1], q[0]])
    }
    fn apply_inverse(&self, q: Point2) -> Option<Point2> {
        self.0.apply_inverse([q[1], q[0]]).map(|p| [p[1], p[0]])
    }
    fn jacobian(&self, p: Point2) -> Mat2 {
        let j = self.0.jacobian([p[1], p[0]]);
        [[j[1][1], j[1][0]], [j[0][1], j[0][0]]]
    }
}

// Affine branches (x, y) -> (a + x/λ, λ (y - a)) composed along a word.
fn affine_periodic_oracle(m: &AffineHorseshoe, word: &[usize]) -> Point2 {
    let lam = m.expansion();
    // Contracting coordinate: x ↦ a + x/λ composed; fixed point of the affine composite.
    let (mut cx, mut dx) = (1.0, 0.0);
    let (mut cy, mut dy) = (1.0, 0.0);
    for &w in word {
        let a = m.strip_offset(w);
        cx /= lam;
        dx = a + dx / lam;
        cy *= lam;
        dy = lam * (dy - a);
    }
    [dx / (1.0 - cx), dy / (1.0 - cy)]
}

#[test]
fn affine_strips_match_the_construction() {
    for n in [2, 3, 5] {
        let m = if n == 2 { AffineHorseshoe::new(3.0, 2).unwrap() } else { affine(n) };
        let s = detect_strips(&m, &StripOptions::default()).unwrap();
        assert_eq!(s.horizontal.len(), n);
        assert_eq!(s.vertical.len(), n);
        assert!(!s.truncated);
        for i in 0..n {
            let a = m.strip_offset(i);
            for st in [&s.horizontal[i], &s.vertical[i]] {
                for k in 0..st.lines.len() {
                    assert!((st.lower[k] - a).abs() < 1e-12);
                    assert!((st.upper[k] - a - m.strip_width()).abs() < 1e-12);
                }
            }
        }
        if n == 2 {
            assert!((s.horizontal[0].max_width() - 1.0 / 3.0).abs() < 1e-12);
        }
        assert!((s.min_gap - m.gap()).abs() < 1e-12);
    }
}

#[test]
fn affine_horseshoes_satisfy_moser_and_cones() {
    for n in [2, 3, 5] {
        let m = affine(n);
        let c = certify_horseshoe(&m, &StripOptions::default(), &MoserOptions::default(), 0.4, 16).unwrap();
        assert!(c.moser.n1 && c.moser.n2, "N = {n}: {:?}", c.moser.witnesses);
        assert!(c.cones.passed);
        assert!((c.cones.min_unstable_expansion - m.expansion()).abs() < 1e-12);
        assert!((c.cones.min_stable_expansion - m.expansion()).abs() < 1e-12);
        assert!(c.passed);
        assert!((c.entropy_lower_bound - (n as f64).ln()).abs() < 1e-15);
    }
}

#[test]
fn expansion_three_gives_cone_expansion_three() {
    let m = AffineHorseshoe::new(3.0, 2).unwrap();
    let s = detect_strips(&m, &StripOptions::default()).unwrap();
    let c = cone_certificate(&m, &s.sample_points(10), &[[0.7, 0.5], [0.2, 0.2]], 0.4).unwrap();
    assert!(c.passed);
    assert_eq!(c.min_unstable_expansion, 3.0);
    assert!(c.min_unstable_expansion > 2.5);
    // |du'| / (μ |dv'|) = (μ/3) / (3 μ)
    assert!((c.max_aperture - 1.0 / 9.0).abs() < 1e-12);
}

#[test]
fn overlapping_strips_leave_an_overlap_witness() {
    let m = AffineHorseshoe::overlapping(2.0 - 1e-3, 2);
    assert!(detect_strips(&m, &StripOptions::default()).is_err());
    let s = StripSystem::affine(&m, 17);
    let r = verify_moser_conditions(&m, &s, &MoserOptions::default());
    assert!(!r.passed);
    let w = r
        .witnesses
        .iter()
        .find_map(|w| match w {
            MoserWitness::Overlap { point, preimages } => Some((*point, *preimages)),
            _ => None,
        })
        .expect("overlap witness");
    assert_eq!(w.1, 2);
    assert_eq!(m.preimages(w.0).len(), 2);
}

#[test]
fn swapped_square_has_no_monotone_strips() {
    let m = Swapped(AffineHorseshoe::new(3.0, 2).unwrap());
    assert!(detect_strips(&m, &StripOptions::default()).is_err());
}

#[test]
fn rotation_fails_the_cone_test() {
    let rot = PlaneRotation {
        angle: 1.0,
        center: [0.5, 0.5],
    };
    let grid: Vec<Point2> = (0..10).flat_map(|i| (0..10).map(move |j| [0.05 + 0.1 * i as f64, 0.05 + 0.1 * j as f64])).collect();
    let c = cone_certificate(&rot, &grid, &grid, 0.4).unwrap();
    assert!(!c.passed);
    assert!(c.violation.is_some());
    assert!(cone_certificate(&rot, &grid, &grid, 0.5).is_err());
}

#[test]
fn period_two_word_hits_the_affine_fixed_point() {
    let m = AffineHorseshoe::new(3.0, 2).unwrap();
    let s = detect_strips(&m, &StripOptions::default()).unwrap();
    let oracle = affine_periodic_oracle(&m, &[0, 1]);
    let p = periodic_point(&m, &s, &[0, 1], 1e-10).unwrap();
    assert!(p.residual < 1e-10);
    assert!((p.point[0] - oracle[0]).abs() < 1e-12 && (p.point[1] - oracle[1]).abs() < 1e-12);
    // The length-10 cylinder of (0 1)^5 contains it.
    let word: Vec<usize> = [0, 1].into_iter().cycle().take(10).collect();
    let r = realize_word(&m, &s, &word).unwrap();
    assert_eq!(r.itinerary, word);
    assert!((r.point[1] - oracle[1]).abs() < 3f64.powi(-9));
    // Constant word: the branch fixed point.
    let q = periodic_point(&m, &s, &[0], 1e-10).unwrap();
    let a = m.strip_offset(0);
    assert!((q.point[0] - a / (1.0 - 1.0 / 3.0)).abs() < 1e-12);
    assert!((q.point[1] - 3.0 * a / 2.0).abs() < 1e-12);
}

#[test]
fn periodic_points_match_word_composition_oracle() {
    let m = affine(3);
    let s = detect_strips(&m, &StripOptions::default()).unwrap();
    for word in all_words(3, 4) {
        let p = periodic_point(&m, &s, &word, 1e-10).unwrap();
        let o = affine_periodic_oracle(&m, &word);
        assert!((p.point[0] - o[0]).abs() < 1e-11 && (p.point[1] - o[1]).abs() < 1e-11, "{word:?}");
    }
}

#[test]
fn all_binary_words_of_length_eight_are_realized_and_distinct() {
    let m = AffineHorseshoe::new(3.0, 2).unwrap();
    let s = detect_strips(&m, &StripOptions::default()).unwrap();
    let words = all_words(2, 8);
    let r = semiconjugacy_check(&m, &s, &words);
    assert_eq!(r.realized, 256);
    assert_eq!(r.itineraries_match, 256);
    assert_eq!(r.shift_equivariant, 256);
    assert!(r.passed);
    // Neighbouring cylinders of length 8 are separated by at least gap/λ^7.
    assert!(r.min_separation >= m.gap() / 3f64.powi(7) * 0.999);
}

#[test]
fn growth_counts_are_powers_of_the_symbol_count() {
    for n in [2, 3] {
        let m = affine(n);
        let s = detect_strips(&m, &StripOptions::default()).unwrap();
        let orbits = HorseshoeOrbits::new(&m, &s);
        let top = if n == 2 { 12 } else { 6 };
        let table = count_orbits_up_to_period(&orbits, top).unwrap();
        for row in &table.rows {
            assert_eq!(row.count, n.pow(row.iterate as u32));
        }
        assert!((table.rate - (n as f64).ln()).abs() < 0.1 * (n as f64).ln());
    }
}

#[test]
fn word_enumeration_respects_the_cap() {
    let m = affine(5);
    let s = detect_strips(&m, &StripOptions::default()).unwrap();
    let orbits = HorseshoeOrbits::new(&m, &s);
    assert_eq!(orbits.max_iterate(), 6);
    use reeb_core::orbits::PeriodicPointSource;
    assert!(orbits.fixed_points(7).is_err());
}

#[test]
fn entropy_of_affine_horseshoes_is_log_n() {
    for n in [2, 3] {
        let m = if n == 2 { AffineHorseshoe::new(3.0, 2).unwrap() } else { affine(3) };
        let e = entropy_separated_sets(
            &m,
            &EntropyOptions {
                epsilon_base: m.gap(),
                ..Default::default()
            },
        )
        .unwrap();
        let ln = (n as f64).ln();
        assert!(e.estimate >= 0.9 * ln && e.estimate <= 1.1 * ln, "N = {n}: {}", e.estimate);
        assert!(ln <= e.estimate + 0.1 * ln);
        assert!(e.monotone_in_epsilon);
    }
}

#[test]
fn rotation_has_no_entropy() {
    let rot = PlaneRotation {
        angle: 1.0,
        center: [0.5, 0.5],
    };
    let e = entropy_separated_sets(&rot, &EntropyOptions::default()).unwrap();
    assert!(e.estimate.abs() < 0.05);
}

#[test]
fn saturated_grids_are_reported() {
    let m = affine(5);
    let opts = EntropyOptions {
        samples: 2000,
        max_iterate: 6,
        epsilon_base: m.gap(),
        ..Default::default()
    };
    assert!(entropy_separated_sets(&m, &opts).is_err());
}

// Strip of the spiral map containing image height 1/2 at u = 1/2, from
// (t_c, r) ↦ (t_c + r/2, -t_c + r/2) and Δt(r) = ln(1/(2r)).
fn predicted_spiral_center(n: i64) -> f64 {
    let sigma = 0.1;
    let f = |v: f64| sigma * (0.5 - v) + (1.0 / (2.0 * sigma * v)).ln() - n as f64 - (0.5 * sigma * v - 0.5 * sigma);
    let (mut lo, mut hi) = (1e-12, 1.0);
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if f(m) > 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn spiral_map_has_six_accumulating_strips() {
    let map = SpiralHorseshoe::standard();
    let opts = StripOptions {
        n_max: 6,
        ..Default::default()
    };
    let c = certify_horseshoe(&map, &opts, &MoserOptions::default(), 0.4, 16).unwrap();
    let s = &c.strips;
    assert_eq!(s.horizontal.len(), 6);
    assert_eq!(s.vertical.len(), 6);
    assert!(s.truncated && s.accumulates);
    assert!(s.min_gap > 0.0);
    for w in s.horizontal.windows(2) {
        assert!(w[1].position() < w[0].position());
    }
    for w in s.vertical.windows(2) {
        assert!(w[1].position() < w[0].position());
    }
    for (i, h) in s.horizontal.iter().enumerate() {
        let n = i as i64 + 2;
        let (a, b) = h.bounds_at(0.5);
        let predicted = predicted_spiral_center(n);
        assert!((0.5 * (a + b) - predicted).abs() < 0.05 * (b - a), "strip {n}");
        assert_eq!(map.branch([0.5, predicted]), Some(n));
    }
    // Neighbouring strips sit one unit of twist apart, up to the linear
    // terms σ(u - v) and the height of the target point: along
    // t_c = (σ/2)(v - 1) the twist steps by 1 + (3σ/2)(v_{n+1} - v_n).
    let lift = LocalLift::new(vec![1.0], 1.0, 1.0).unwrap();
    for w in s.horizontal.windows(2) {
        let (v0, v1) = (w[0].center_at(0.5), w[1].center_at(0.5));
        let step = lift.delta_t(0.1 * v1) - lift.delta_t(0.1 * v0);
        let expected = 1.0 + 0.15 * (v1 - v0);
        assert!((step - expected).abs() < 0.01, "{step} vs {expected}");
    }
    assert!(c.moser.passed, "{:?}", c.moser.witnesses);
    assert!(c.cones.passed);
    assert!(c.entropy_lower_bound >= 6f64.ln() - 1e-15);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let words: Vec<Vec<usize>> = (0..50).map(|_| (0..6).map(|_| rng.random_range(0..6)).collect()).collect();
    let r = semiconjugacy_check(&map, s, &words);
    assert!(r.passed, "{:?}", r.failures);
}

#[test]
fn spiral_strips_at_four_pass_moser() {
    let map = SpiralHorseshoe::standard();
    let opts = StripOptions {
        n_max: 4,
        ..Default::default()
    };
    let s = detect_strips(&map, &opts).unwrap();
    assert_eq!(s.symbols, 4);
    assert!(verify_moser_conditions(&map, &s, &MoserOptions::default()).passed);
}

#[test]
fn spiral_cone_expansion_grows_toward_the_orbit() {
    // The dominant entry of dP is 1.5 + 10/v, so expansion grows like 1/r.
    let map = SpiralHorseshoe::standard();
    let s = detect_strips(&map, &StripOptions { n_max: 6, ..Default::default() }).unwrap();
    let mut last = 0.0;
    for h in &s.horizontal {
        let p = [0.5, h.center_at(0.5)];
        let c = cone_certificate(&map, &[p], &[map.apply(p).unwrap()], 0.4).unwrap();
        assert!(c.passed);
        let trace = 1.5 + 10.0 / p[1];
        assert!((c.min_unstable_expansion - (trace - 0.4)).abs() < 1e-9 * trace);
        assert!(c.min_unstable_expansion > last);
        last = c.min_unstable_expansion;
    }
}

#[test]
fn horizontal_arc_meets_vertical_arc_on_a_geometric_ladder() {
    let lift = LocalLift::new(vec![1.0], 1.0, 1.0).unwrap();
    let t0 = 0.3;
    let gamma = GraphArc::constant(t0, 0.5);
    let beta = GraphArc::constant(0.0, 0.5);
    let r = detect_transverse_homoclinic(&lift, &gamma, &beta, 10, 0.5, 1e-9).unwrap();
    assert_eq!(r.transverse.len(), 10);
    assert!(r.tangential.is_empty());
    for (k, hit) in r.transverse.iter().enumerate() {
        let m = k as f64 + 1.0;
        // t0 + ln(1/(2r)) = m
        let expected = 0.5 * (t0 - m).exp();
        assert!((hit.r - expected).abs() < 1e-8);
        assert!(hit.margin > 0.0);
        assert!((hit.c1 - 1.0).abs() < 1e-12);
    }
}

#[test]
fn second_order_tangency_still_crosses_transversally() {
    let lift = LocalLift::new(vec![1.0], 1.0, 1.0).unwrap();
    let gamma = GraphArc::constant(0.3, 0.5);
    let beta = GraphArc {
        offset: 0.0,
        coeff: 1.0,
        power: 2.0,
        r_min: 0.0,
        r_max: 0.5,
    };
    let lambda = 0.5;
    let r = detect_transverse_homoclinic(&lift, &gamma, &beta, 8, lambda, 1e-9).unwrap();
    assert_eq!(r.transverse.len(), 8);
    for hit in &r.transverse {
        // Independent Newton solve of 0.3 + ln(1/(2r)) - r² = m.
        let mut x = hit.r * 1.1;
        for _ in 0..50 {
            let f = 0.3 + (1.0 / (2.0 * x)).ln() - x * x - hit.turn as f64;
            x -= f / (-1.0 / x - 2.0 * x);
        }
        assert!((hit.r - x).abs() < 1e-12);
        assert!((hit.margin - (2.0 * hit.r + 1.0 / hit.r)).abs() < 1e-9 / hit.r);
        assert!(hit.c1 / hit.r > hit.c2 / hit.r.powf(1.0 - lambda));
    }
}

#[test]
fn arcs_away_from_the_orbit_give_nothing() {
    let lift = LocalLift::new(vec![1.0], 1.0, 1.0).unwrap();
    let gamma = GraphArc {
        r_min: 0.01,
        ..GraphArc::constant(0.3, 0.5)
    };
    let r = detect_transverse_homoclinic(&lift, &gamma, &GraphArc::constant(0.0, 0.5), 10, 0.5, 1e-9).unwrap();
    assert!(r.transverse.is_empty() && r.tangential.is_empty());
}

#[test]
fn certificate_round_trips_through_json() {
    let m = AffineHorseshoe::new(3.0, 2).unwrap();
    let c = certify_horseshoe(&m, &StripOptions::default(), &MoserOptions::default(), 0.4, 8).unwrap();
    let text = serde_json::to_string(&c).unwrap();
    let back: HorseshoeCertificate = serde_json::from_str(&text).unwrap();
    assert_eq!(back, c);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn realized_words_follow_their_itinerary(word in prop::collection::vec(0usize..3, 1..9)) {
        let m = affine(3);
        let s = StripSystem::affine(&m, 65);
        let r = realize_word(&m, &s, &word).unwrap();
        prop_assert_eq!(&r.itinerary, &word);
        // Forward iteration from the first point agrees on the affine map.
        prop_assert_eq!(s.itinerary(&m, r.point, word.len()).unwrap(), word);
    }

    #[test]
    fn unstable_cones_are_invariant_inside_the_strips(i in 0usize..2, u in 0.0f64..1.0, f in 0.0f64..1.0) {
        let m = AffineHorseshoe::new(3.0, 2).unwrap();
        let p = [u, m.strip_offset(i) + f * m.strip_width()];
        let c = cone_certificate(&m, &[p], &[m.apply(p).unwrap()], 0.4).unwrap();
        prop_assert!(c.passed);
    }
}
