//! Construction of metrically proper nets: greedy maximal nets, seeded
//! perturbation with a boundary-thinness audit, and G-invariant nets.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::action::{ActionSystem, GroupElement};
use crate::error::{Error, Result};
use crate::geometry::{Point, Region, SpaceModel, Window};
use crate::index::SpatialIndex;
use crate::quotient::rho;
use crate::voronoi::{Net, Tessellation};
use crate::TOL;

/// Relative slack allowed when validating coverage on a fresh stream.
pub const COVERAGE_SLACK: f64 = 0.05;
/// Stream points per unit of area (or length on graphs).
pub const STREAM_DENSITY: f64 = 1e4;
/// Band half-width used by the boundary-thinness audit.
pub const AUDIT_BAND: f64 = 1e-4;
/// Largest admissible fraction of audit samples inside a boundary band.
pub const AUDIT_LIMIT: f64 = 0.01;
/// Perturbation attempts before giving up.
pub const AUDIT_ATTEMPTS: usize = 5;
/// Smallest admissible value of φ.
pub const PHI_FLOOR: f64 = 1e-6;

const VALIDATION_SALT: u64 = 0x9e37_79b9_7f4a_7c15;
const PERTURB_SALT: u64 = 0xc2b2_ae3d_27d4_eb4f;

pub fn default_stream(space: &SpaceModel, region: &Region) -> usize {
    ((STREAM_DENSITY * region.measure(space)).ceil() as usize).clamp(1_000, 400_000)
}

#[derive(Clone, Debug)]
pub struct MaximalNet {
    pub net: Net,
    /// φ at each net point.
    pub phi: Vec<f64>,
    pub stream: usize,
    /// Largest distance from a validation point to the net.
    pub coverage: f64,
    /// Largest `d(z, E) / φ(z)` over validation points.
    pub coverage_ratio: f64,
}

fn check_phi(p: &Point, v: f64) -> Result<f64> {
    if !(v.is_finite() && v >= PHI_FLOOR) {
        return Err(Error::Precondition(format!("φ({p:?}) = {v} is below {PHI_FLOOR}")));
    }
    Ok(v)
}

/// Greedy pass over a seeded stream: `y` joins when `d(x, y) >= ½ min(φ(x), φ(y))` for
/// every admitted `x`. Coverage at `φ(z)(1 + 0.05)` is then checked on a fresh stream.
pub fn maximal_net(
    space: &SpaceModel,
    region: &Region,
    phi: &dyn Fn(&Point) -> f64,
    stream: usize,
    seed: u64,
) -> Result<MaximalNet> {
    region.validate(space)?;
    if stream == 0 {
        return Err(Error::EmptySample);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let candidates = region.sample(space, stream, &mut rng);
    let mut index = SpatialIndex::new(space, 0.25);
    let mut values: Vec<f64> = Vec::new();
    for y in candidates {
        let fy = check_phi(&y, phi(&y))?;
        let blocked = index
            .within(space, &y, fy / 2.0)
            .into_iter()
            .any(|i| space.dist(&index.points()[i], &y) < 0.5 * values[i].min(fy));
        if !blocked {
            index.insert(y);
            values.push(fy);
        }
    }
    let net = Net::new(space, index.points().to_vec())?;
    let mut vrng = ChaCha8Rng::seed_from_u64(seed ^ VALIDATION_SALT);
    let mut coverage: f64 = 0.0;
    let mut ratio: f64 = 0.0;
    for z in region.sample(space, stream, &mut vrng) {
        let fz = phi(&z);
        let ((_, d), _) = net.nearest_two(space, &z);
        if d > fz * (1.0 + COVERAGE_SLACK) {
            return Err(Error::StreamTooSmall { point: z, radius: fz });
        }
        coverage = coverage.max(d);
        ratio = ratio.max(d / fz);
    }
    Ok(MaximalNet {
        net,
        phi: values,
        stream,
        coverage,
        coverage_ratio: ratio,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Audit {
    /// Fraction of samples whose two nearest net points are within [`AUDIT_BAND`].
    pub boundary_fraction: f64,
    pub pass: bool,
    pub attempts: usize,
    /// Set on graphs, where bisectors may have interior and failure is tolerated.
    pub flagged: bool,
}

fn boundary_fraction(space: &SpaceModel, net: &Net, region: &Region, samples: usize, rng: &mut ChaCha8Rng) -> f64 {
    let tess = Tessellation::new(space, net);
    let pts = region.sample(space, samples, rng);
    let hits = pts.iter().filter(|y| tess.owner(y).1 <= AUDIT_BAND).count();
    hits as f64 / pts.len().max(1) as f64
}

/// Perturbation radii `ε_x = 10⁻² · min(φ(x), gap_x) / 2 · 2^{-shell(x)}` with
/// `shell(x) = ⌊log₂(1 + d(o, x))⌋`, so radii decay along any enumeration leaving
/// every ball and the balls `B(x, ε_x)` stay disjoint.
pub fn perturbation_radii(space: &SpaceModel, points: &[Point], phi: &[f64], origin: &Point) -> Vec<f64> {
    let index = SpatialIndex::with_points(space, 0.25, points);
    points
        .iter()
        .zip(phi)
        .map(|(x, f)| {
            let gap = match index.nearest_two(space, x) {
                Some((_, Some((_, d)))) => d,
                _ => f64::INFINITY,
            };
            let shell = (1.0 + space.dist(origin, x)).log2().floor();
            1e-2 * f.min(gap) / 2.0 * 0.5f64.powf(shell)
        })
        .collect()
}

fn jitter(space: &SpaceModel, points: &[Point], eps: &[f64], rng: &mut ChaCha8Rng) -> Vec<Point> {
    points
        .iter()
        .zip(eps)
        .map(|(x, e)| space.sample_ball_with(x, *e, 1, rng).points[0])
        .collect()
}

#[derive(Clone, Debug)]
pub struct PerturbedNet {
    pub net: Net,
    pub phi: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub audit: Audit,
}

/// Moves each point within `B(x, ε_x)` and audits boundary thinness, re-seeding on failure.
pub fn perturb_net(space: &SpaceModel, built: &MaximalNet, region: &Region, seed: u64) -> Result<PerturbedNet> {
    let origin = region.center();
    let eps = perturbation_radii(space, built.net.points(), &built.phi, &origin);
    let samples = 10_000;
    let mut last = 0.0;
    for attempt in 1..=AUDIT_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ PERTURB_SALT.wrapping_mul(attempt as u64));
        let moved = jitter(space, built.net.points(), &eps, &mut rng);
        let net = Net::new(space, moved)?;
        last = boundary_fraction(space, &net, region, samples, &mut rng);
        let graph = matches!(space, SpaceModel::MetricGraph(_));
        if last < AUDIT_LIMIT || (graph && attempt == AUDIT_ATTEMPTS) {
            return Ok(PerturbedNet {
                net,
                phi: built.phi.clone(),
                epsilon: eps,
                audit: Audit {
                    boundary_fraction: last,
                    pass: last < AUDIT_LIMIT,
                    attempts: attempt,
                    flagged: last >= AUDIT_LIMIT,
                },
            });
        }
    }
    Err(Error::ThinBoundaryUnachieved {
        fraction: last,
        attempts: AUDIT_ATTEMPTS,
    })
}

#[derive(Clone, Debug)]
pub struct NetOptions {
    /// Stream size; defaults to [`default_stream`] over the window.
    pub stream: Option<usize>,
    /// Upper bound on φ. Required in effect for the trivial group, where ρ is infinite;
    /// defaults to an eighth of the window radius there.
    pub phi_cap: Option<f64>,
    /// The net is lifted to the window grown by this multiple of the largest φ.
    pub margin_factor: f64,
    pub audit_samples: usize,
}

impl Default for NetOptions {
    fn default() -> Self {
        NetOptions {
            stream: None,
            phi_cap: None,
            margin_factor: 6.0,
            audit_samples: 10_000,
        }
    }
}

/// A G-invariant net `E = G·C′` restricted to an enlarged window.
#[derive(Clone, Debug)]
pub struct InvariantNet {
    pub net: Net,
    /// `reps[i]` indexes the representative of orbit `i` in `net`.
    pub reps: Vec<usize>,
    /// Orbit label of each net point.
    pub labels: Vec<usize>,
    /// `net[k] = transports[k] · net[reps[labels[k]]]`.
    pub transports: Vec<GroupElement>,
    /// φ on each orbit.
    pub phi: Vec<f64>,
    pub window: Window,
    /// Radius about the window center inside which `net` contains every orbit point.
    pub extent: f64,
    pub audit: Audit,
    pub complete: bool,
}

impl InvariantNet {
    pub fn phi_max(&self) -> f64 {
        self.phi.iter().copied().fold(0.0, f64::max)
    }

    /// Net points no farther than `r` from the window center.
    pub fn within_center(&self, space: &SpaceModel, r: f64) -> Vec<usize> {
        self.net.within(space, &self.window.center, r)
    }

    /// The net point at `p`, if any.
    pub fn lookup(&self, space: &SpaceModel, p: &Point) -> Option<usize> {
        let ((i, d), _) = self.net.nearest_two(space, p);
        (d <= 1e-7).then_some(i)
    }
}

/// Builds `E` from a quotient maximal net for `φ = min(ρ/16, cap)`, perturbed and lifted.
pub fn invariant_net(action: &ActionSystem, window: &Window, options: &NetOptions, seed: u64) -> Result<InvariantNet> {
    let space = action.space();
    space.validate(&window.center)?;
    let region = Region::Ball(*window);
    let cap = options.phi_cap.unwrap_or(if action.is_trivial() {
        window.radius / 8.0
    } else {
        f64::INFINITY
    });
    let phi_of = |y: &Point| -> Result<f64> {
        let r = rho(action, y)?;
        if r.value <= PHI_FLOOR {
            return Err(Error::NotFree {
                point: *y,
                element: r.element.map_or_else(|| "?".into(), |g| g.word_string()),
            });
        }
        check_phi(y, (r.value / 16.0).min(cap))
    };
    let mut complete = action.is_exact();

    // Greedy quotient net: admission compares against every lift of admitted points.
    let stream = options.stream.unwrap_or_else(|| default_stream(space, &region));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lifted = SpatialIndex::new(space, 0.25);
    let mut owner: Vec<usize> = Vec::new();
    let mut reps: Vec<Point> = Vec::new();
    let mut phi: Vec<f64> = Vec::new();
    let mut phi_max: f64 = 0.0;
    for y in region.sample(space, stream, &mut rng) {
        let near = lifted.within(space, &y, phi_max / 2.0);
        // φ is 1/8-Lipschitz, so a lift this close blocks y without evaluating φ(y).
        if near
            .iter()
            .any(|&i| space.dist(&lifted.points()[i], &y) < 15.0 / 32.0 * phi[owner[i]])
        {
            continue;
        }
        let fy = phi_of(&y)?;
        if near
            .iter()
            .any(|&i| space.dist(&lifted.points()[i], &y) < 0.5 * phi[owner[i]].min(fy))
        {
            continue;
        }
        let label = reps.len();
        reps.push(y);
        phi.push(fy);
        phi_max = phi_max.max(fy);
        let (lifts, c) = orbit_near(action, &y, window, fy / 2.0);
        complete &= c;
        for (_, p) in lifts {
            lifted.insert(p);
            owner.push(label);
        }
    }
    if reps.is_empty() {
        return Err(Error::EmptyNet);
    }

    let margin = options.margin_factor * phi_max;
    let extent = window.radius + margin;
    let outer = Window::new(window.center, extent)?;
    if let Some((g, p)) = action.fixed_point(&action.moving(&window.center, 2.0 * extent).0, &outer) {
        return Err(Error::NotFree {
            point: p,
            element: g.word_string(),
        });
    }

    // Perturb representatives, then lift them to the enlarged window.
    let eps = perturbation_radii(space, &reps, &phi, &window.center);
    let mut last = 0.0;
    for attempt in 1..=AUDIT_ATTEMPTS {
        let mut prng = ChaCha8Rng::seed_from_u64(seed ^ PERTURB_SALT.wrapping_mul(attempt as u64));
        let moved = jitter(space, &reps, &eps, &mut prng);
        let mut points = Vec::new();
        let mut labels = Vec::new();
        let mut transports = Vec::new();
        let mut rep_index = Vec::with_capacity(moved.len());
        for (label, r) in moved.iter().enumerate() {
            let (lifts, c) = orbit_near(action, r, window, margin);
            complete &= c;
            for (g, p) in lifts {
                if g.is_identity() {
                    rep_index.push(points.len());
                }
                points.push(p);
                labels.push(label);
                transports.push(g);
            }
        }
        let net = Net::new(space, points)?;
        last = boundary_fraction(space, &net, &region, options.audit_samples.max(1), &mut prng);
        let graph = matches!(space, SpaceModel::MetricGraph(_));
        if last < AUDIT_LIMIT || (graph && attempt == AUDIT_ATTEMPTS) {
            return Ok(InvariantNet {
                net,
                reps: rep_index,
                labels,
                transports,
                phi,
                window: *window,
                extent,
                audit: Audit {
                    boundary_fraction: last,
                    pass: last < AUDIT_LIMIT,
                    attempts: attempt,
                    flagged: last >= AUDIT_LIMIT,
                },
                complete,
            });
        }
    }
    Err(Error::ThinBoundaryUnachieved {
        fraction: last,
        attempts: AUDIT_ATTEMPTS,
    })
}

/// Orbit points `g·x` inside `window` grown by `margin`, identity first.
fn orbit_near(action: &ActionSystem, x: &Point, window: &Window, margin: f64) -> (Vec<(GroupElement, Point)>, bool) {
    let space = action.space();
    let reach = window.radius + margin;
    let (elements, complete) = action.moving(x, space.dist(x, &window.center) + reach);
    let mut out: Vec<(GroupElement, Point)> = elements
        .into_iter()
        .map(|g| {
            let p = g.act(x);
            (g, p)
        })
        .filter(|(_, p)| space.dist(p, &window.center) <= reach + TOL)
        .collect();
    out.sort_by_key(|(g, _)| !g.is_identity());
    (out, complete)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::{Affine, Guarantee, Isometry};
    use crate::geometry::{Edge, MetricGraph};

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

    #[test]
    fn unit_square_net() {
        let space = SpaceModel::plane();
        let region = Region::Rect { min: [0.0, 0.0], max: [1.0, 1.0] };
        let built = maximal_net(&space, &region, &|_| 0.3, 10_000, 1).unwrap();
        assert!(built.net.gap() >= 0.15);
        assert!(built.coverage <= 0.315);
        let pts = built.net.points();
        for i in 0..pts.len() {
            for j in 0..i {
                assert!(space.dist(&pts[i], &pts[j]) >= 0.5 * built.phi[i].min(built.phi[j]));
            }
        }
    }

    #[test]
    fn huge_phi_gives_one_point() {
        let space = SpaceModel::plane();
        let region = Region::Rect { min: [0.0, 0.0], max: [1.0, 1.0] };
        let built = maximal_net(&space, &region, &|_| 2.0 * 2f64.sqrt() * 2.0, 1_000, 2).unwrap();
        assert_eq!(built.net.len(), 1);
    }

    #[test]
    fn cross_rays_are_covered() {
        let edges = (1..=4).map(|v| Edge { a: 0, b: v, length: 10.0 }).collect();
        let space = SpaceModel::MetricGraph(MetricGraph::new(5, edges).unwrap());
        let region = Region::Ball(Window::new(Point::graph(0, 0.0), 3.0).unwrap());
        let built = maximal_net(&space, &region, &|_| 0.5, 5_000, 3).unwrap();
        for ray in 0..4 {
            for k in 0..3 {
                let on_segment = built.net.points().iter().any(|p| {
                    matches!(p, Point::Graph { edge, offset } if *edge == ray && *offset >= k as f64 && *offset <= k as f64 + 1.0)
                });
                assert!(on_segment, "ray {ray} segment {k}");
            }
        }
    }

    #[test]
    fn perturbation_stays_small_and_thin() {
        let space = SpaceModel::plane();
        let pts = (0..4)
            .flat_map(|i| (0..4).map(move |j| Point::plane(i as f64 * 0.25, j as f64 * 0.25)))
            .collect();
        let net = Net::new(&space, pts).unwrap();
        let built = MaximalNet {
            phi: vec![0.3; net.len()],
            net,
            stream: 0,
            coverage: 0.0,
            coverage_ratio: 0.0,
        };
        let region = Region::Rect { min: [0.0, 0.0], max: [0.75, 0.75] };
        let p = perturb_net(&space, &built, &region, 4).unwrap();
        assert!(p.audit.pass);
        for ((a, b), e) in built.net.points().iter().zip(p.net.points()).zip(&p.epsilon) {
            assert!(space.dist(a, b) <= *e);
        }
        let single = MaximalNet {
            net: Net::new(&space, vec![Point::plane(0.0, 0.0)]).unwrap(),
            phi: vec![0.3],
            stream: 0,
            coverage: 0.0,
            coverage_ratio: 0.0,
        };
        assert!(perturb_net(&space, &single, &region, 1).unwrap().audit.pass);
    }

    #[test]
    fn torus_net_is_periodic() {
        let a = torus();
        let w = Window::new(Point::plane(0.0, 0.0), 3.0).unwrap();
        let options = NetOptions {
            stream: Some(20_000),
            ..NetOptions::default()
        };
        let inv = invariant_net(&a, &w, &options, 1).unwrap();
        assert!(inv.complete);
        assert!(inv.phi.iter().all(|f| (f - 1.0 / 16.0).abs() < 1e-12));
        let space = a.space();
        for g in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
            let t = Affine::translation(g[0], g[1]);
            for p in inv.within_center(space, 3.0) {
                let [x, y] = t.apply(inv.net.points()[p].coords().unwrap());
                let q = Point::plane(x, y);
                if space.dist(&q, &w.center) <= inv.extent - 1e-6 {
                    assert!(inv.lookup(space, &q).is_some());
                }
            }
        }
        for (k, p) in inv.net.points().iter().enumerate() {
            let r = inv.net.points()[inv.reps[inv.labels[k]]];
            assert!(space.dist(&inv.transports[k].act(&r), p) < 1e-12);
        }
    }
}
