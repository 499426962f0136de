use proptest::prelude::*;
use reeb_core::horseshoe::SpiralHorseshoe;
use reeb_core::models::{
    AffineHorseshoe, Flow, HenonHeiles, LinearKind, LinearReebModel, ModelDocument, ModelKind, PlanarMap,
};

fn hh() -> HenonHeiles<f64> {
    HenonHeiles::new(1.0 / 6.0 + 1e-3).unwrap()
}

// Newton on ∇V = (x + 2xy, y + x² - y²) = 0 from the symmetric guesses.
fn equilibrium(guess: [f64; 2]) -> [f64; 2] {
    let [mut x, mut y] = guess;
    for _ in 0..50 {
        let g = [x + 2.0 * x * y, y + x * x - y * y];
        let h = [[1.0 + 2.0 * y, 2.0 * x], [2.0 * x, 1.0 - 2.0 * y]];
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        x -= (h[1][1] * g[0] - h[0][1] * g[1]) / det;
        y -= (-h[1][0] * g[0] + h[0][0] * g[1]) / det;
    }
    [x, y]
}

#[test]
fn saddle_centers_sit_at_the_critical_energy() {
    let model = hh();
    let guesses = [[0.1, 0.9], [-0.8, -0.4], [0.8, -0.4]];
    for (g, known) in guesses.iter().zip(HenonHeiles::<f64>::saddle_centers()) {
        let q = equilibrium(*g);
        assert!((q[0] - known[0]).abs() < 1e-14 && (q[1] - known[1]).abs() < 1e-14);
        let h = model.hamiltonian(&[q[0], q[1], 0.0, 0.0]);
        assert!((h - 1.0 / 6.0).abs() < 1e-15, "{h}");
        assert!(model.field_vec(&[q[0], q[1], 0.0, 0.0]).iter().all(|f| f.abs() < 1e-14));
    }
}

#[test]
fn critical_energy_is_rejected() {
    assert!(HenonHeiles::new(1.0 / 6.0).is_err());
    assert!(HenonHeiles::new(0.16).is_err());
}

#[test]
fn linear_models_have_the_declared_monodromy() {
    let m = LinearReebModel::new(LinearKind::Elliptic { theta: 0.3 }, 1.0);
    let mono = m.monodromy();
    assert!((mono[0][0] + mono[1][1] - 2.0 * (0.6 * std::f64::consts::PI).cos()).abs() < 1e-12);
    let h = LinearReebModel::new(LinearKind::Hyperbolic { turns: 0, rate: 0.7 }, 2.0);
    let mono = h.monodromy();
    assert!((mono[0][0] - (-1.4f64).exp()).abs() < 1e-12);
    assert!((mono[1][1] - 1.4f64.exp()).abs() < 1e-12);
    assert!(mono[0][1].abs() < 1e-12 && mono[1][0].abs() < 1e-12);
}

/// Fixed points of the `n`-th iterate by solving the affine composite of
/// every binary word and keeping the solutions that follow their word.
fn affine_fixed_points(m: &AffineHorseshoe, n: usize) -> usize {
    let lam = m.expansion();
    let mut found = 0;
    for code in 0..(1usize << n) {
        let word: Vec<usize> = (0..n).map(|i| (code >> (n - 1 - i)) & 1).collect();
        let (mut cx, mut dx, mut cy, mut dy) = (1.0, 0.0, 1.0, 0.0);
        for &w in &word {
            let a = m.strip_offset(w);
            cx /= lam;
            dx = a + dx / lam;
            cy *= lam;
            dy = lam * (dy - a);
        }
        let p = [dx / (1.0 - cx), dy / (1.0 - cy)];
        let mut q = p;
        let follows = word.iter().all(|&w| {
            let ok = m.branch_of(q) == Some(w);
            q = m.branch(w, q);
            ok
        });
        let closes = (q[0] - p[0]).abs() < 1e-9 && (q[1] - p[1]).abs() < 1e-9;
        found += (follows && closes) as usize;
    }
    found
}

#[test]
fn two_branch_map_has_two_to_the_n_fixed_points() {
    let m = AffineHorseshoe::new(3.0, 2).unwrap();
    for n in 1..=10 {
        assert_eq!(affine_fixed_points(&m, n), 1 << n);
    }
}

#[test]
fn model_documents_build_their_systems() {
    let kind = ModelKind::HenonHeiles {
        energy: 1.0 / 6.0 + 1e-3,
        energy_cap: 0.01,
    };
    let doc = ModelDocument::new("hh", kind).unwrap();
    let flow = doc.build_flow().unwrap();
    assert_eq!(flow.dim(), 4);
    assert!(doc.build_map().is_err());
    let affine = |expansion| ModelKind::AffineHorseshoe {
        expansion,
        n_branches: 2,
    };
    let doc = ModelDocument::new("h2", affine(3.0)).unwrap();
    assert!(doc.is_map());
    assert_eq!(doc.build_map().unwrap().name(), "affine-horseshoe");
    assert!(ModelDocument::new("bad", affine(2.0)).unwrap().build_map().is_err());
    let spiral = ModelDocument::new("spiral", ModelKind::SpiralHorseshoe(SpiralHorseshoe::standard())).unwrap();
    let text = serde_json::to_string(&spiral).unwrap();
    let back: ModelDocument = serde_json::from_str(&text).unwrap();
    assert_eq!(back.build_map().unwrap().name(), "spiral-horseshoe");
}

proptest! {
    #[test]
    fn henon_heiles_field_commutes_with_rotation(
        q1 in -0.5f64..0.5, q2 in -0.5f64..0.5, p1 in -0.3f64..0.3, p2 in -0.3f64..0.3, k in 1i32..3
    ) {
        let model = hh();
        let z = [q1, q2, p1, p2];
        let rotated = HenonHeiles::<f64>::rotate_state(&z, k);
        let lhs = model.field_vec(&rotated);
        let rhs = HenonHeiles::<f64>::rotate_state(&model.field_vec(&z), k);
        for (a, b) in lhs.iter().zip(&rhs) {
            prop_assert!((a - b).abs() < 1e-13);
        }
        let e = model.hamiltonian(&z);
        prop_assert!((model.hamiltonian(&rotated) - e).abs() < 1e-14);
    }

    #[test]
    fn planar_maps_preserve_area(u in 0.0f64..1.0, v in 0.001f64..1.0) {
        let affine = AffineHorseshoe::new(4.0, 3).unwrap();
        let spiral = SpiralHorseshoe::standard();
        let maps: [&dyn PlanarMap; 2] = [&affine, &spiral];
        for m in maps {
            let j = m.jacobian([u, v]);
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            prop_assert!((det * m.area_density([u, v]) - 1.0).abs() < 1e-12);
        }
    }
}
