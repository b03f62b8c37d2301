//! The margin function ρ and the quotient pseudo-metric d_G.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::action::{ActionSystem, GroupElement};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::TOL;

/// Number of radius doublings before ρ gives up.
const DOUBLINGS: usize = 12;

/// `ρ(x) = inf{d(gx, x) : g ≠ 1}` with an attaining element.
///
/// The trivial group has no competitors; its margin is `+∞` and serializes as `null`.
#[derive(Clone, Debug, Serialize)]
pub struct MarginValue {
    pub value: f64,
    pub element: Option<GroupElement>,
    pub complete: bool,
}

pub fn rho(action: &ActionSystem, x: &Point) -> Result<MarginValue> {
    action.space().validate(x)?;
    smallest_displacement(action, x, |_, _| true)
}

/// Smallest displacement over non-identity elements passing `keep(g, d(gx, x))`.
pub(crate) fn smallest_displacement(
    action: &ActionSystem,
    x: &Point,
    keep: impl Fn(&GroupElement, f64) -> bool,
) -> Result<MarginValue> {
    if action.is_trivial() {
        return Ok(MarginValue {
            value: f64::INFINITY,
            element: None,
            complete: true,
        });
    }
    let space = action.space();
    let start = action.max_displacement(x);
    let mut radius = if start > TOL { start } else { 1.0 };
    for _ in 0..=DOUBLINGS {
        let (elements, complete) = action.moving(x, radius);
        let best = elements
            .into_iter()
            .filter(|g| !g.is_identity())
            .map(|g| (space.dist(&g.act(x), x), g))
            .filter(|(d, g)| keep(g, *d))
            .min_by(|a, b| a.0.total_cmp(&b.0));
        if let Some((value, g)) = best {
            return Ok(MarginValue {
                value,
                element: Some(g),
                complete,
            });
        }
        if !action.is_isometric() {
            break;
        }
        radius *= 2.0;
    }
    Err(Error::InconclusiveMargin { radius })
}

#[derive(Clone, Debug, Serialize)]
pub struct QuotientDistance {
    pub value: f64,
    /// Element `g` attaining `d(x, g y)`.
    pub element: GroupElement,
    pub complete: bool,
}

/// `d_G([x], [y]) = min_g d(x, g y)`.
///
/// A minimiser satisfies `d(x, g y) <= d(x, y)`, hence `d(g y, y) <= 2 d(x, y)`,
/// so it is among the elements moving `y` by at most that much.
pub fn quotient_distance(action: &ActionSystem, x: &Point, y: &Point) -> Result<QuotientDistance> {
    let space = action.space();
    space.validate(x)?;
    space.validate(y)?;
    let direct = space.dist(x, y);
    if direct <= TOL {
        return Ok(QuotientDistance {
            value: direct,
            element: action.identity(),
            complete: true,
        });
    }
    let (elements, complete) = action.moving(y, 2.0 * direct);
    let mut best = (direct, action.identity());
    for g in elements {
        let d = space.dist(x, &g.act(y));
        if d < best.0 {
            best = (d, g);
        }
    }
    Ok(QuotientDistance {
        value: best.0,
        element: best.1,
        complete,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalIsometryReport {
    pub center: Point,
    pub radius: f64,
    pub trials: usize,
    pub max_deviation: f64,
    pub pass: bool,
    pub complete: bool,
}

/// Samples pairs in `B(x, ρ(x)/8)` and compares `d_G` with `d`.
pub fn verify_local_isometry(action: &ActionSystem, x: &Point, trials: usize, seed: u64) -> Result<LocalIsometryReport> {
    let margin = rho(action, x)?;
    if margin.value <= TOL {
        return Err(Error::Precondition(format!(
            "{x:?} has a non-trivial stabilizer"
        )));
    }
    // The trivial group imposes no scale; any ball is isometric to its image.
    let radius = if margin.value.is_finite() { margin.value / 8.0 } else { 1.0 };
    let mut report = LocalIsometryReport {
        center: *x,
        radius,
        trials,
        max_deviation: 0.0,
        pass: true,
        complete: margin.complete,
    };
    if trials == 0 {
        return Ok(report);
    }
    let space = action.space();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = space.sample_ball_with(x, radius, 2 * trials, &mut rng).points;
    for pair in pts.chunks(2) {
        let q = quotient_distance(action, &pair[0], &pair[1])?;
        report.complete &= q.complete;
        let dev = (q.value - space.dist(&pair[0], &pair[1])).abs();
        report.max_deviation = report.max_deviation.max(dev);
    }
    report.pass = report.max_deviation <= TOL;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::{Affine, GraphMap, Guarantee, Isometry};
    use crate::geometry::{Edge, MetricGraph, SpaceModel};

    fn torus() -> ActionSystem {
        ActionSystem::new(
            SpaceModel::plane(),
            vec![
                Isometry::Affine(Affine::translation(1.0, 0.0)),
                Isometry::Affine(Affine::translation(0.0, 1.0)),
            ],
            Point::plane(0.0, 0.0),
            Guarantee::Exact,
        )
        .unwrap()
    }

    fn cross() -> ActionSystem {
        let edges = (1..=4).map(|v| Edge { a: 0, b: v, length: 10.0 }).collect();
        let space = SpaceModel::MetricGraph(MetricGraph::new(5, edges).unwrap());
        let flip = GraphMap::from_vertex_permutation(&space, vec![0, 3, 4, 1, 2]).unwrap();
        ActionSystem::new(space, vec![Isometry::Graph(flip)], Point::graph(0, 1.0), Guarantee::Exact).unwrap()
    }

    #[test]
    fn torus_margin_is_one() {
        let m = rho(&torus(), &Point::plane(0.37, -2.1)).unwrap();
        assert!((m.value - 1.0).abs() < 1e-12);
        assert!(m.complete);
    }

    #[test]
    fn cross_margins() {
        let a = cross();
        assert_eq!(rho(&a, &Point::graph(0, 0.0)).unwrap().value, 0.0);
        assert!((rho(&a, &Point::graph(0, 0.25)).unwrap().value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn torus_quotient_distance() {
        let q = quotient_distance(&torus(), &Point::plane(0.9, 0.2), &Point::plane(0.1, 0.1)).unwrap();
        assert!((q.value - 0.05f64.sqrt()).abs() < 1e-12);
        assert_eq!(q.element.word, vec![1]);
    }

    #[test]
    fn cross_quotient_distance() {
        let q = quotient_distance(&cross(), &Point::graph(0, 1.0), &Point::graph(2, 0.5)).unwrap();
        assert!((q.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn same_orbit_has_zero_distance() {
        let q = quotient_distance(&torus(), &Point::plane(0.3, 0.3), &Point::plane(-2.7, 4.3)).unwrap();
        assert!(q.value < 1e-9);
    }

    #[test]
    fn local_isometry_on_torus() {
        let r = verify_local_isometry(&torus(), &Point::plane(0.5, 0.5), 1000, 3).unwrap();
        assert!(r.pass);
        assert_eq!(r.radius, 0.125);
        let empty = verify_local_isometry(&torus(), &Point::plane(0.5, 0.5), 0, 3).unwrap();
        assert!(empty.pass && empty.max_deviation == 0.0);
    }

    #[test]
    fn local_isometry_needs_freeness() {
        assert!(matches!(
            verify_local_isometry(&cross(), &Point::graph(0, 0.0), 10, 1),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn trivial_group_margin_is_infinite() {
        let a = ActionSystem::new(SpaceModel::plane(), vec![], Point::plane(0.0, 0.0), Guarantee::Exact).unwrap();
        assert!(rho(&a, &Point::plane(1.0, 1.0)).unwrap().value.is_infinite());
    }
}
