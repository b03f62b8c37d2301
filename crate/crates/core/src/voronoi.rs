//! Voronoi tessellations of metrically proper nets: tri-state tile membership and
//! sample-based verifiers for the tile lemmas.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ModelKind, Point, RawPoint, Region, SpaceModel};
use crate::index::{NearestTwo, SpatialIndex};
use crate::TOL;

/// Default half-width of the boundary band.
pub const BAND: f64 = 1e-9;
/// Geodesic sample count used by the starlikeness check.
pub const RAY_POINTS: usize = 50;
/// Geodesic sample count used by the quasiconvexity check.
pub const QUASI_POINTS: usize = 20;
/// Radius within which a closed-tile point must see an interior point.
pub const CLOSURE_REACH: f64 = 1e-3;

/// A finite point set `E` with its separation certificate.
#[derive(Clone, Debug)]
pub struct Net {
    points: Vec<Point>,
    gap: f64,
    index: SpatialIndex,
}

/// Serialized form of a [`Net`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetFile {
    pub model: ModelKind,
    pub points: Vec<RawPoint>,
    pub gap: f64,
    pub proper: bool,
}

impl Net {
    pub fn new(space: &SpaceModel, points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyNet);
        }
        for p in &points {
            space.validate(p)?;
        }
        let index = SpatialIndex::with_points(space, cell_size(space, &points), &points);
        let mut gap = f64::INFINITY;
        for p in &points {
            if let Some((_, Some((_, d)))) = index.nearest_two(space, p) {
                gap = gap.min(d);
            }
        }
        if gap <= TOL {
            return Err(Error::Precondition("net contains coincident points".into()));
        }
        Ok(Net { points, gap, index })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Smallest pairwise distance (`+∞` for a single point).
    pub fn gap(&self) -> f64 {
        self.gap
    }

    /// Finite sets with positive gap are metrically proper.
    pub fn is_proper(&self) -> bool {
        self.gap > 0.0
    }

    pub fn nearest_two(&self, space: &SpaceModel, y: &Point) -> NearestTwo {
        self.index.nearest_two(space, y).expect("nets are nonempty")
    }

    pub fn within(&self, space: &SpaceModel, y: &Point, r: f64) -> Vec<usize> {
        self.index.within(space, y, r)
    }

    pub fn to_file(&self, space: &SpaceModel) -> NetFile {
        NetFile {
            model: space.kind(),
            points: self.points.iter().map(Point::raw).collect(),
            gap: self.gap,
            proper: self.is_proper(),
        }
    }

    pub fn to_json(&self, space: &SpaceModel) -> String {
        serde_json::to_string_pretty(&self.to_file(space)).expect("nets serialize")
    }

    /// Parses and re-certifies a serialized net.
    pub fn from_json(space: &SpaceModel, text: &str) -> Result<Self> {
        let file: NetFile = serde_json::from_str(text)?;
        if file.model != space.kind() {
            return Err(Error::ModelMismatch {
                expected: space.kind().name(),
            });
        }
        let points = file.points.into_iter().map(|r| space.point(r)).collect::<Result<Vec<_>>>()?;
        let net = Net::new(space, points)?;
        if file.gap > net.gap + TOL || file.proper != net.is_proper() {
            return Err(Error::Precondition(format!(
                "declared gap {} exceeds the observed gap {}",
                file.gap, net.gap
            )));
        }
        Ok(net)
    }
}

fn cell_size(space: &SpaceModel, points: &[Point]) -> f64 {
    let coords: Vec<[f64; 2]> = points.iter().filter_map(Point::coords).collect();
    if coords.len() < 2 || matches!(space, SpaceModel::MetricGraph(_)) {
        return 1.0;
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for c in &coords {
        for k in 0..2 {
            lo[k] = lo[k].min(c[k]);
            hi[k] = hi[k].max(c[k]);
        }
    }
    let area = ((hi[0] - lo[0]) * (hi[1] - lo[1])).max(1e-12);
    (area / coords.len() as f64).sqrt().max(1e-6)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Interior,
    BoundaryBand,
    Outside,
}

impl Verdict {
    pub fn from_margin(margin: f64, band: f64) -> Self {
        if margin > band {
            Verdict::Interior
        } else if margin < -band {
            Verdict::Outside
        } else {
            Verdict::BoundaryBand
        }
    }

    /// Membership in the closed tile.
    pub fn in_closed(self) -> bool {
        self != Verdict::Outside
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TileMembership {
    pub verdict: Verdict,
    /// `min_{x' ≠ x} d(y, x') − d(y, x)`; `+∞` for a one-point net.
    pub margin: f64,
}

/// Tile oracles for a net in a space.
#[derive(Clone, Copy, Debug)]
pub struct Tessellation<'a> {
    pub space: &'a SpaceModel,
    pub net: &'a Net,
    pub band: f64,
}

impl<'a> Tessellation<'a> {
    pub fn new(space: &'a SpaceModel, net: &'a Net) -> Self {
        Tessellation { space, net, band: BAND }
    }

    pub fn with_band(self, band: f64) -> Self {
        Tessellation { band, ..self }
    }

    pub fn membership(&self, x: usize, y: &Point) -> TileMembership {
        let ((a, da), second) = self.net.nearest_two(self.space, y);
        let dx = self.space.dist(&self.net.points[x], y);
        let margin = if a != x {
            da - dx
        } else {
            second.map_or(f64::INFINITY, |(_, db)| db - dx)
        };
        TileMembership {
            verdict: Verdict::from_margin(margin, self.band),
            margin,
        }
    }

    /// Nearest center and the margin to the runner-up.
    pub fn owner(&self, y: &Point) -> (usize, f64) {
        let ((a, da), second) = self.net.nearest_two(self.space, y);
        (a, second.map_or(f64::INFINITY, |(_, db)| db - da))
    }

    /// Centers whose closed tile contains `y`.
    pub fn closed_owners(&self, y: &Point) -> Vec<usize> {
        let ((a, da), second) = self.net.nearest_two(self.space, y);
        match second {
            Some((_, db)) if db - da <= self.band => self.net.within(self.space, y, da + self.band),
            _ => vec![a],
        }
    }
}

pub fn tile_membership(space: &SpaceModel, net: &Net, x: usize, y: &Point) -> Result<TileMembership> {
    if x >= net.len() {
        return Err(Error::Precondition(format!("net has no point {x}")));
    }
    space.validate(y)?;
    Ok(Tessellation::new(space, net).membership(x, y))
}

#[derive(Clone, Debug, Serialize)]
pub struct StarlikeReport {
    pub center: usize,
    pub trials: usize,
    pub points_per_ray: usize,
    pub violations: usize,
    pub witness: Option<Point>,
}

/// Samples closed-tile points `z` within `reach` of the center and checks the geodesic
/// from the center to `z` never leaves the closed tile.
pub fn verify_starlike(tess: &Tessellation, x: usize, reach: f64, trials: usize, seed: u64) -> StarlikeReport {
    let space = tess.space;
    let c = tess.net.points[x];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = StarlikeReport {
        center: x,
        trials: 0,
        points_per_ray: RAY_POINTS,
        violations: 0,
        witness: None,
    };
    let mut attempts = 0;
    while report.trials < trials && attempts < 200 * trials.max(1) {
        attempts += 1;
        let z = space.sample_ball_with(&c, reach, 1, &mut rng).points[0];
        if !tess.membership(x, &z).verdict.in_closed() {
            continue;
        }
        report.trials += 1;
        let Ok(g) = space.geodesic(&c, &z) else { continue };
        for p in g.samples(RAY_POINTS) {
            if !tess.membership(x, &p).verdict.in_closed() {
                report.violations += 1;
                report.witness.get_or_insert(p);
            }
        }
    }
    report
}

#[derive(Clone, Debug, Serialize)]
pub struct CoveringReport {
    pub samples: usize,
    /// A sample `z` with no net point within `φ(z)`, when the precondition fails.
    pub uncovered: Option<Point>,
    pub tile_samples: usize,
    pub violations: usize,
    /// Largest `d(x, y) / φ(x)` over closed-tile samples `y` of tile `x`.
    pub max_ratio: f64,
    pub pass: bool,
}

/// Checks `V̂_x ⊂ B(x, 2φ(x))` on samples of `region`, after checking the net covers
/// at scale `φ`. `φ` should be at most `1/2`-Lipschitz.
pub fn verify_covering_radius(
    tess: &Tessellation,
    phi: &dyn Fn(&Point) -> f64,
    region: &Region,
    samples: usize,
    seed: u64,
) -> CoveringReport {
    let space = tess.space;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = region.sample(space, samples, &mut rng);
    let mut report = CoveringReport {
        samples,
        uncovered: None,
        tile_samples: 0,
        violations: 0,
        max_ratio: 0.0,
        pass: false,
    };
    for z in &pts {
        let ((_, d), _) = tess.net.nearest_two(space, z);
        if d > phi(z) + TOL {
            report.uncovered = Some(*z);
            return report;
        }
    }
    for y in &pts {
        for x in tess.closed_owners(y) {
            let c = tess.net.points[x];
            let (d, f) = (space.dist(&c, y), phi(&c));
            report.tile_samples += 1;
            report.max_ratio = report.max_ratio.max(d / f);
            if d > 2.0 * f + TOL {
                report.violations += 1;
            }
        }
    }
    report.pass = report.violations == 0;
    report
}

pub type Membership<'a> = Box<dyn Fn(&Point) -> bool + 'a>;

/// A set given by sample points and an optional exact membership test.
pub struct TargetSet<'a> {
    pub samples: Vec<Point>,
    pub contains: Option<Membership<'a>>,
}

impl<'a> TargetSet<'a> {
    /// Samples of the bisector `{z : d(z,a) = d(z,b)}` in `region`, found by root
    /// bisection along geodesics from random points towards the nearer of `a`, `b`.
    pub fn bisector(space: &'a SpaceModel, a: Point, b: Point, region: &Region, n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = move |z: &Point| space.dist(z, &a) - space.dist(z, &b);
        let mut samples = Vec::with_capacity(n);
        let mut attempts = 0;
        while samples.len() < n && attempts < 100 * n.max(1) {
            attempts += 1;
            let q = region.sample(space, 1, &mut rng)[0];
            let fq = f(&q);
            let toward = if fq > 0.0 { a } else { b };
            let Ok(g) = space.geodesic(&q, &toward) else { continue };
            let (mut lo, mut hi) = (0.0, g.length());
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if f(&g.eval(mid)).signum() == fq.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let z = g.eval(0.5 * (lo + hi));
            if region.contains(space, &z) && f(&z).abs() <= 1e-9 {
                samples.push(z);
            }
        }
        TargetSet {
            samples,
            contains: Some(Box::new(move |z| f(z).abs() <= 1e-9)),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct QuasiconvexityReport {
    pub pairs: usize,
    pub points_per_geodesic: usize,
    pub lambda: f64,
    /// Largest distance beyond `λ` from a geodesic point to the set.
    pub max_excess: f64,
    pub pass: bool,
    pub inconclusive: bool,
}

/// Checks that geodesics between sampled set points stay within `λ` of the set.
pub fn verify_quasiconvexity(
    space: &SpaceModel,
    set: &TargetSet,
    lambda: f64,
    trials: usize,
    seed: u64,
) -> QuasiconvexityReport {
    let mut report = QuasiconvexityReport {
        pairs: 0,
        points_per_geodesic: QUASI_POINTS,
        lambda,
        max_excess: 0.0,
        pass: false,
        inconclusive: set.samples.len() < 2,
    };
    if report.inconclusive {
        return report;
    }
    let index = SpatialIndex::with_points(space, cell_size(space, &set.samples), &set.samples);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = set.samples.len();
    for _ in 0..trials {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        let Ok(g) = space.geodesic(&set.samples[i], &set.samples[j]) else { continue };
        report.pairs += 1;
        for p in g.samples(QUASI_POINTS) {
            if set.contains.as_ref().is_some_and(|c| c(&p)) {
                continue;
            }
            let ((_, d), _) = index.nearest_two(space, &p).expect("nonempty");
            report.max_excess = report.max_excess.max(d - lambda);
        }
    }
    report.pass = report.max_excess <= 1e-6;
    report
}

#[derive(Clone, Debug, Serialize)]
pub struct ClosureReport {
    pub center: usize,
    pub closed_samples: usize,
    /// Closed-tile samples with no open-tile point within [`CLOSURE_REACH`].
    pub unexplained: usize,
    pub witness: Option<Point>,
    pub pass: bool,
}

/// Checks that the closed tile is the closure of the open tile, on samples of `region`.
pub fn verify_closure(tess: &Tessellation, x: usize, region: &Region, samples: usize, seed: u64) -> ClosureReport {
    let space = tess.space;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ClosureReport {
        center: x,
        closed_samples: 0,
        unexplained: 0,
        witness: None,
        pass: true,
    };
    for y in region.sample(space, samples, &mut rng) {
        let m = tess.membership(x, &y);
        if !m.verdict.in_closed() {
            continue;
        }
        report.closed_samples += 1;
        if m.verdict == Verdict::Interior || interior_nearby(tess, x, &y, &mut rng) {
            continue;
        }
        report.unexplained += 1;
        report.witness.get_or_insert(y);
    }
    report.pass = report.unexplained == 0;
    report
}

/// Whether an interior point of tile `x` lies within [`CLOSURE_REACH`] of `y`.
pub(crate) fn interior_nearby(tess: &Tessellation, x: usize, y: &Point, rng: &mut ChaCha8Rng) -> bool {
    let space = tess.space;
    let c = tess.net.points[x];
    let along = [0.1, 0.5, 1.0].map(|s| space.towards(y, &c, s * CLOSURE_REACH));
    let around = space.sample_ball_with(y, CLOSURE_REACH, 24, rng).points;
    along
        .iter()
        .chain(&around)
        .any(|p| tess.membership(x, p).verdict == Verdict::Interior)
}

/// Distinct tiles whose closures contain a sample of `B(center, radius)`.
pub fn tiles_meeting(tess: &Tessellation, center: &Point, radius: f64, samples: usize, seed: u64) -> BTreeSet<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    tess.space
        .sample_ball_with(center, radius, samples, &mut rng)
        .points
        .iter()
        .flat_map(|y| tess.closed_owners(y))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Edge, MetricGraph, Window};

    fn lattice_net(k: i32) -> (SpaceModel, Net) {
        let space = SpaceModel::plane();
        let pts = (-k..=k)
            .flat_map(|i| (-k..=k).map(move |j| Point::plane(i as f64, j as f64)))
            .collect();
        let net = Net::new(&space, pts).unwrap();
        (space, net)
    }

    fn origin_index(net: &Net) -> usize {
        net.points().iter().position(|p| *p == Point::plane(0.0, 0.0)).unwrap()
    }

    fn cross() -> SpaceModel {
        let edges = (1..=4).map(|v| Edge { a: 0, b: v, length: 10.0 }).collect();
        SpaceModel::MetricGraph(MetricGraph::new(5, edges).unwrap())
    }

    #[test]
    fn lattice_membership() {
        let (space, net) = lattice_net(3);
        let o = origin_index(&net);
        let m = tile_membership(&space, &net, o, &Point::plane(0.49, 0.0)).unwrap();
        assert_eq!(m.verdict, Verdict::Interior);
        assert!((m.margin - 0.02).abs() < 1e-12);
        let m = tile_membership(&space, &net, o, &Point::plane(0.5, 0.3)).unwrap();
        assert_eq!(m.verdict, Verdict::BoundaryBand);
    }

    #[test]
    fn cross_bisector_ray() {
        let space = cross();
        let net = Net::new(&space, vec![Point::graph(0, 1.0), Point::graph(2, 1.0)]).unwrap();
        let m = tile_membership(&space, &net, 0, &Point::graph(1, 2.0)).unwrap();
        assert_eq!(m.verdict, Verdict::BoundaryBand);
    }

    #[test]
    fn lattice_tiles_are_starlike() {
        let (space, net) = lattice_net(3);
        let t = Tessellation::new(&space, &net);
        let r = verify_starlike(&t, origin_index(&net), 1.0, 100, 5);
        assert_eq!(r.trials, 100);
        assert_eq!(r.violations, 0);
    }

    #[test]
    fn cross_tile_is_starlike() {
        let space = cross();
        let net = Net::new(&space, vec![Point::graph(0, 1.0), Point::graph(2, 1.0)]).unwrap();
        let t = Tessellation::new(&space, &net);
        let r = verify_starlike(&t, 0, 8.0, 100, 5);
        assert_eq!(r.violations, 0);
        let g = space.geodesic(&Point::graph(0, 1.0), &Point::graph(1, 2.0)).unwrap();
        assert!(g.samples(RAY_POINTS).iter().all(|p| t.membership(0, p).verdict.in_closed()));
    }

    #[test]
    fn lattice_covering_radius() {
        let (space, net) = lattice_net(4);
        let t = Tessellation::new(&space, &net);
        let region = Region::Ball(Window::new(Point::plane(0.0, 0.0), 2.0).unwrap());
        let r = verify_covering_radius(&t, &|_| 0.75, &region, 2000, 3);
        assert!(r.uncovered.is_none());
        assert!(r.pass);
        assert!(r.max_ratio <= std::f64::consts::FRAC_1_SQRT_2 / 0.75 + 1e-9);
    }

    #[test]
    fn single_point_covers_everything() {
        let space = SpaceModel::plane();
        let net = Net::new(&space, vec![Point::plane(0.0, 0.0)]).unwrap();
        let t = Tessellation::new(&space, &net);
        let region = Region::Ball(Window::new(Point::plane(0.0, 0.0), 3.0).unwrap());
        assert!(verify_covering_radius(&t, &|_| 100.0, &region, 500, 1).pass);
        assert_eq!(t.membership(0, &Point::plane(2.0, 1.0)).verdict, Verdict::Interior);
    }

    #[test]
    fn bisectors_are_quasiconvex() {
        let plane = SpaceModel::plane();
        let region = Region::Ball(Window::new(Point::plane(0.5, 0.0), 3.0).unwrap());
        let set = TargetSet::bisector(&plane, Point::plane(0.0, 0.0), Point::plane(1.0, 0.0), &region, 200, 2);
        let r = verify_quasiconvexity(&plane, &set, 0.0, 200, 3);
        assert!(r.pass && !r.inconclusive, "{r:?}");

        let disk = SpaceModel::PoincareDisk;
        let region = Region::Ball(Window::new(Point::disk(0.0, 0.0), 2.0).unwrap());
        let set = TargetSet::bisector(&disk, Point::disk(-0.3, 0.1), Point::disk(0.2, 0.4), &region, 200, 2);
        let r = verify_quasiconvexity(&disk, &set, 0.0, 200, 3);
        assert!(r.pass, "{r:?}");

        let graph = cross();
        let region = Region::Ball(Window::new(Point::graph(0, 0.0), 6.0).unwrap());
        let set = TargetSet::bisector(&graph, Point::graph(0, 1.0), Point::graph(2, 1.0), &region, 200, 2);
        let r = verify_quasiconvexity(&graph, &set, 0.0, 200, 3);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn under_sampled_set_is_inconclusive() {
        let plane = SpaceModel::plane();
        let set = TargetSet {
            samples: vec![Point::plane(0.0, 0.0)],
            contains: None,
        };
        assert!(verify_quasiconvexity(&plane, &set, 0.0, 10, 1).inconclusive);
    }

    #[test]
    fn closure_holds_in_plane_and_fails_on_cross() {
        let (space, net) = lattice_net(3);
        let t = Tessellation::new(&space, &net);
        let region = Region::Rect { min: [-0.6, -0.6], max: [0.6, 0.6] };
        assert!(verify_closure(&t, origin_index(&net), &region, 2000, 4).pass);

        let space = cross();
        let net = Net::new(&space, vec![Point::graph(0, 1.0), Point::graph(2, 1.0)]).unwrap();
        let t = Tessellation::new(&space, &net);
        let region = Region::Ball(Window::new(Point::graph(0, 0.0), 8.0).unwrap());
        let r = verify_closure(&t, 0, &region, 2000, 4);
        assert!(!r.pass);
        assert!(r.unexplained > 0);
    }

    #[test]
    fn net_json_round_trip() {
        let (space, net) = lattice_net(1);
        let text = net.to_json(&space);
        let back = Net::from_json(&space, &text).unwrap();
        assert_eq!(back.points(), net.points());
        assert!(Net::from_json(&SpaceModel::PoincareDisk, &text).is_err());
        let forged = text.replace("\"gap\": 1.0", "\"gap\": 2.0");
        assert!(Net::from_json(&space, &forged).is_err());
    }

    #[test]
    fn tile_partition_on_samples() {
        let (space, net) = lattice_net(3);
        let t = Tessellation::new(&space, &net);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for y in space.sample_ball_with(&Point::plane(0.0, 0.0), 2.5, 2000, &mut rng).points {
            let owners = t.closed_owners(&y);
            assert!(!owners.is_empty());
            let interior = (0..net.len())
                .filter(|&x| t.membership(x, &y).verdict == Verdict::Interior)
                .count();
            assert!(interior <= 1);
        }
    }

    #[test]
    fn local_finiteness_bound() {
        let (space, net) = lattice_net(4);
        let t = Tessellation::new(&space, &net);
        let phi_max = 0.75;
        let c = Point::plane(0.3, -0.2);
        let tiles = tiles_meeting(&t, &c, 1.0, 2000, 8);
        assert!(tiles.len() <= net.within(&space, &c, 1.0 + 2.0 * phi_max).len());
    }
}
