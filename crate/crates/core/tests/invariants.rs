use std::path::PathBuf;
use std::sync::LazyLock;

use fundom::domains::dirichlet_membership;
use fundom::quotient::{quotient_distance, rho};
use fundom::scene::Scene;
use fundom::{ActionSystem, Point};
use proptest::prelude::*;

fn load(name: &str) -> ActionSystem {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(format!("{name}.scene.json"));
    Scene::parse(&std::fs::read_to_string(path).unwrap()).unwrap().action().unwrap()
}

// Shared so the word-search cache survives across cases.
static KLEIN: LazyLock<ActionSystem> = LazyLock::new(|| load("klein"));
static SCHOTTKY: LazyLock<ActionSystem> = LazyLock::new(|| load("schottky"));

fn word(max: usize) -> impl Strategy<Value = Vec<i32>> {
    prop::collection::vec(prop_oneof![Just(1), Just(-1), Just(2), Just(-2)], 0..=max)
}

fn disk_point() -> impl Strategy<Value = Point> {
    (0.0..0.7f64, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| Point::disk(r * t.cos(), r * t.sin()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dirichlet_tiles_are_equivariant(x in -2.0..2.0f64, y in -2.0..2.0f64, u in -2.0..2.0f64, v in -2.0..2.0f64, w in word(4)) {
        let a = &*KLEIN;
        let g = a.element(&w).unwrap();
        let (c, p) = (Point::plane(x, y), Point::plane(u, v));
        let m = dirichlet_membership(a, &c, &p).unwrap().margin;
        let moved = dirichlet_membership(a, &g.act(&c), &g.act(&p)).unwrap().margin;
        prop_assert!((m - moved).abs() <= 1e-9 || (m.is_infinite() && moved.is_infinite()));
    }

    #[test]
    fn margin_is_constant_on_orbits(x in -2.0..2.0f64, y in -2.0..2.0f64, w in word(4)) {
        let a = &*KLEIN;
        let g = a.element(&w).unwrap();
        let p = Point::plane(x, y);
        let r = rho(a, &p).unwrap().value;
        prop_assert!((r - rho(a, &g.act(&p)).unwrap().value).abs() <= 1e-9);
    }

    #[test]
    fn quotient_distance_is_invariant_and_symmetric(p in disk_point(), q in disk_point(), w in word(2)) {
        let a = &*SCHOTTKY;
        let g = a.element(&w).unwrap();
        let d = quotient_distance(a, &p, &q).unwrap().value;
        let back = quotient_distance(a, &q, &p).unwrap().value;
        let moved = quotient_distance(a, &p, &g.act(&q)).unwrap().value;
        prop_assert!((d - back).abs() <= 1e-9);
        prop_assert!((d - moved).abs() <= 1e-9);
        prop_assert!(d <= a.space().dist(&p, &q) + 1e-12);
    }
}
