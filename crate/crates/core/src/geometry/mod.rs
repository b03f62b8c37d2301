//! Proper geodesic metric spaces: the Euclidean plane (optionally punctured),
//! the Poincaré disk and finite metric graphs.

pub mod disk;
pub mod graph;

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize, Serializer};

pub use graph::{Edge, MetricGraph, Piece};

use crate::error::{Error, Result};
use crate::TOL;

/// Largest admissible Euclidean norm of a disk point.
pub const DISK_LIMIT: f64 = 1.0 - 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Point {
    Plane { x: f64, y: f64 },
    Disk { u: f64, v: f64 },
    Graph { edge: usize, offset: f64 },
}

/// Model-free encoding used in scene files and reports.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawPoint {
    Coords([f64; 2]),
    Graph { edge: usize, offset: f64 },
}

impl Point {
    pub fn plane(x: f64, y: f64) -> Self {
        Point::Plane { x, y }
    }

    pub fn disk(u: f64, v: f64) -> Self {
        Point::Disk { u, v }
    }

    pub fn graph(edge: usize, offset: f64) -> Self {
        Point::Graph { edge, offset }
    }

    pub fn raw(&self) -> RawPoint {
        match *self {
            Point::Plane { x, y } => RawPoint::Coords([x, y]),
            Point::Disk { u, v } => RawPoint::Coords([u, v]),
            Point::Graph { edge, offset } => RawPoint::Graph { edge, offset },
        }
    }

    /// Planar coordinates for the plane and disk models.
    pub fn coords(&self) -> Option<[f64; 2]> {
        match *self {
            Point::Plane { x, y } => Some([x, y]),
            Point::Disk { u, v } => Some([u, v]),
            Point::Graph { .. } => None,
        }
    }

    pub(crate) fn complex(&self) -> Complex64 {
        match *self {
            Point::Disk { u, v } | Point::Plane { x: u, y: v } => Complex64::new(u, v),
            Point::Graph { .. } => panic!("graph point has no complex coordinate"),
        }
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.raw().serialize(serializer)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    EuclideanPlane,
    PuncturedPlane,
    PoincareDisk,
    MetricGraph,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::EuclideanPlane => "euclidean-plane",
            ModelKind::PuncturedPlane => "punctured-plane",
            ModelKind::PoincareDisk => "poincare-disk",
            ModelKind::MetricGraph => "metric-graph",
        }
    }
}

#[derive(Clone, Debug)]
pub enum SpaceModel {
    /// The Euclidean plane; `punctured` removes the origin.
    EuclideanPlane { punctured: bool },
    PoincareDisk,
    MetricGraph(MetricGraph),
}

impl SpaceModel {
    pub fn plane() -> Self {
        SpaceModel::EuclideanPlane { punctured: false }
    }

    pub fn punctured_plane() -> Self {
        SpaceModel::EuclideanPlane { punctured: true }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            SpaceModel::EuclideanPlane { punctured: false } => ModelKind::EuclideanPlane,
            SpaceModel::EuclideanPlane { punctured: true } => ModelKind::PuncturedPlane,
            SpaceModel::PoincareDisk => ModelKind::PoincareDisk,
            SpaceModel::MetricGraph(_) => ModelKind::MetricGraph,
        }
    }

    pub fn graph(&self) -> Option<&MetricGraph> {
        match self {
            SpaceModel::MetricGraph(g) => Some(g),
            _ => None,
        }
    }

    fn mismatch(&self) -> Error {
        Error::ModelMismatch {
            expected: self.kind().name(),
        }
    }

    pub fn validate(&self, p: &Point) -> Result<()> {
        match (self, p) {
            (SpaceModel::EuclideanPlane { punctured }, Point::Plane { x, y }) => {
                if !(x.is_finite() && y.is_finite()) {
                    return Err(Error::InvalidPoint("non-finite coordinate".into()));
                }
                if *punctured && x.hypot(*y) <= TOL {
                    return Err(Error::InvalidPoint("the puncture is not a point of the space".into()));
                }
                Ok(())
            }
            (SpaceModel::PoincareDisk, Point::Disk { u, v }) => {
                if !(u.is_finite() && v.is_finite()) || u.hypot(*v) >= DISK_LIMIT {
                    return Err(Error::InvalidPoint(format!("({u}, {v}) is not inside the unit disk")));
                }
                Ok(())
            }
            (SpaceModel::MetricGraph(g), Point::Graph { edge, offset }) => g.check_point(*edge, *offset),
            _ => Err(self.mismatch()),
        }
    }

    pub fn point(&self, raw: RawPoint) -> Result<Point> {
        let p = match (self, raw) {
            (SpaceModel::EuclideanPlane { .. }, RawPoint::Coords([x, y])) => Point::plane(x, y),
            (SpaceModel::PoincareDisk, RawPoint::Coords([u, v])) => Point::disk(u, v),
            (SpaceModel::MetricGraph(_), RawPoint::Graph { edge, offset }) => Point::graph(edge, offset),
            _ => return Err(self.mismatch()),
        };
        self.validate(&p)?;
        Ok(p)
    }

    /// Checked distance.
    pub fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        self.same_model(p)?;
        self.same_model(q)?;
        Ok(self.dist(p, q))
    }

    fn same_model(&self, p: &Point) -> Result<()> {
        match (self, p) {
            (SpaceModel::EuclideanPlane { .. }, Point::Plane { .. })
            | (SpaceModel::PoincareDisk, Point::Disk { .. })
            | (SpaceModel::MetricGraph(_), Point::Graph { .. }) => Ok(()),
            _ => Err(self.mismatch()),
        }
    }

    /// Distance on points already known to belong to this model.
    ///
    /// Panics on a model mismatch.
    pub fn dist(&self, p: &Point, q: &Point) -> f64 {
        match (self, p, q) {
            (SpaceModel::EuclideanPlane { .. }, Point::Plane { x: a, y: b }, Point::Plane { x: c, y: d }) => {
                (a - c).hypot(b - d)
            }
            (SpaceModel::PoincareDisk, Point::Disk { .. }, Point::Disk { .. }) => {
                disk::distance(p.complex(), q.complex())
            }
            (
                SpaceModel::MetricGraph(g),
                Point::Graph { edge: e1, offset: o1 },
                Point::Graph { edge: e2, offset: o2 },
            ) => g.distance((*e1, *o1), (*e2, *o2)),
            _ => panic!("distance between points of different models"),
        }
    }

    pub fn same_point(&self, p: &Point, q: &Point) -> bool {
        self.dist(p, q) <= TOL
    }

    pub fn geodesic(&self, p: &Point, q: &Point) -> Result<Geodesic> {
        let length = self.distance(p, q)?;
        if length <= TOL {
            return Err(Error::DegenerateGeodesic);
        }
        let route = match self {
            SpaceModel::EuclideanPlane { .. } => Route::Straight,
            SpaceModel::PoincareDisk => Route::Hyperbolic,
            SpaceModel::MetricGraph(g) => {
                let (Point::Graph { edge: e1, offset: o1 }, Point::Graph { edge: e2, offset: o2 }) = (p, q)
                else {
                    unreachable!()
                };
                Route::Graph(g.shortest_path((*e1, *o1), (*e2, *o2)))
            }
        };
        Ok(Geodesic {
            start: *p,
            end: *q,
            length,
            route,
        })
    }

    /// Point at distance `t` from `p` on the canonical geodesic to `q`;
    /// `p` itself when the points coincide.
    pub fn towards(&self, p: &Point, q: &Point, t: f64) -> Point {
        match self.geodesic(p, q) {
            Ok(g) => g.eval(t.min(g.length())),
            Err(_) => *p,
        }
    }

    pub fn sample_ball(&self, center: &Point, radius: f64, n: usize, seed: u64) -> Result<BallSample> {
        self.validate(center)?;
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::NonPositiveRadius(radius));
        }
        if n == 0 {
            return Err(Error::EmptySample);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(self.sample_ball_with(center, radius, n, &mut rng))
    }

    pub(crate) fn sample_ball_with(&self, center: &Point, radius: f64, n: usize, rng: &mut ChaCha8Rng) -> BallSample {
        let mut points = Vec::with_capacity(n);
        let mut clipped = false;
        match self {
            SpaceModel::EuclideanPlane { punctured } => {
                let [cx, cy] = center.coords().expect("plane point");
                while points.len() < n {
                    let r = radius * rng.gen::<f64>().sqrt();
                    let a = rng.gen::<f64>() * TAU;
                    let p = Point::plane(cx + r * a.cos(), cy + r * a.sin());
                    if *punctured && self.validate(&p).is_err() {
                        continue;
                    }
                    points.push(p);
                }
            }
            SpaceModel::PoincareDisk => {
                let c = center.complex();
                let top = radius.cosh() - 1.0;
                while points.len() < n {
                    let s = (rng.gen::<f64>() * top).ln_1p_acosh();
                    let a = rng.gen::<f64>() * TAU;
                    let z = disk::polar(c, s, a);
                    let p = Point::disk(z.re, z.im);
                    if self.validate(&p).is_ok() {
                        points.push(p);
                    }
                }
            }
            SpaceModel::MetricGraph(g) => {
                let Point::Graph { edge, offset } = *center else {
                    panic!("graph point expected")
                };
                clipped = g.ball_clipped((edge, offset), radius);
                let mut pieces = Vec::new();
                let mut total = 0.0;
                for e in 0..g.edges().len() {
                    for (lo, hi) in g.ball_intervals((edge, offset), radius, e) {
                        if hi > lo {
                            total += hi - lo;
                            pieces.push((e, lo, hi, total));
                        }
                    }
                }
                if pieces.is_empty() {
                    points.resize(n, *center);
                } else {
                    for _ in 0..n {
                        let target = rng.gen::<f64>() * total;
                        let idx = pieces.partition_point(|piece| piece.3 < target).min(pieces.len() - 1);
                        let (e, lo, hi, cum) = pieces[idx];
                        let off = (hi - (cum - target)).clamp(lo, hi);
                        points.push(Point::graph(e, off));
                    }
                }
            }
        }
        BallSample { points, clipped }
    }
}

trait LnAcosh {
    fn ln_1p_acosh(self) -> f64;
}

impl LnAcosh for f64 {
    /// `acosh(1 + self)` without cancellation for small arguments.
    fn ln_1p_acosh(self) -> f64 {
        (self + (self * (self + 2.0)).sqrt()).ln_1p()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BallSample {
    pub points: Vec<Point>,
    /// The ball extends past the end of the graph.
    pub clipped: bool,
}

#[derive(Clone, Debug)]
enum Route {
    Straight,
    Hyperbolic,
    Graph(Vec<Piece>),
}

#[derive(Clone, Debug)]
pub struct Geodesic {
    start: Point,
    end: Point,
    length: f64,
    route: Route,
}

impl Geodesic {
    pub fn start(&self) -> Point {
        self.start
    }

    pub fn end(&self) -> Point {
        self.end
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Point at arclength `t`, clamped to `[0, length]`.
    pub fn eval(&self, t: f64) -> Point {
        let t = t.clamp(0.0, self.length);
        match &self.route {
            Route::Straight => {
                let ([x0, y0], [x1, y1]) = (self.start.coords().unwrap(), self.end.coords().unwrap());
                let s = t / self.length;
                Point::plane(x0 + s * (x1 - x0), y0 + s * (y1 - y0))
            }
            Route::Hyperbolic => {
                if t == 0.0 {
                    return self.start;
                }
                if t == self.length {
                    return self.end;
                }
                let z = disk::along(self.start.complex(), self.end.complex(), t);
                Point::disk(z.re, z.im)
            }
            Route::Graph(pieces) => {
                let mut left = t;
                for piece in pieces {
                    let len = piece.length();
                    if left <= len {
                        let off = if piece.to >= piece.from {
                            piece.from + left
                        } else {
                            piece.from - left
                        };
                        return Point::graph(piece.edge, off);
                    }
                    left -= len;
                }
                self.end
            }
        }
    }

    /// `k >= 2` evenly spaced points including both endpoints.
    pub fn samples(&self, k: usize) -> Vec<Point> {
        let k = k.max(2);
        (0..k)
            .map(|i| self.eval(self.length * i as f64 / (k - 1) as f64))
            .collect()
    }

    /// Graph pieces, when the geodesic lives on a metric graph.
    pub fn pieces(&self) -> Option<&[Piece]> {
        match &self.route {
            Route::Graph(p) => Some(p),
            _ => None,
        }
    }
}

/// A closed metric ball standing in for a compact set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Window {
    pub center: Point,
    pub radius: f64,
}

impl Window {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::NonPositiveRadius(radius));
        }
        Ok(Self { center, radius })
    }

    pub fn contains(&self, space: &SpaceModel, p: &Point) -> bool {
        space.dist(&self.center, p) <= self.radius + TOL
    }

    pub fn grow(&self, by: f64) -> Self {
        Self {
            center: self.center,
            radius: self.radius + by,
        }
    }
}

/// A sampling domain: a metric ball, or an axis-aligned box of the plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    Ball(Window),
    Rect { min: [f64; 2], max: [f64; 2] },
}

impl Region {
    pub fn contains(&self, space: &SpaceModel, p: &Point) -> bool {
        match self {
            Region::Ball(w) => w.contains(space, p),
            Region::Rect { min, max } => match p.coords() {
                Some([x, y]) => (min[0]..=max[0]).contains(&x) && (min[1]..=max[1]).contains(&y),
                None => false,
            },
        }
    }

    /// Area (plane and disk) or total length (graphs) of the region.
    pub fn measure(&self, space: &SpaceModel) -> f64 {
        match (self, space) {
            (Region::Rect { min, max }, _) => (max[0] - min[0]) * (max[1] - min[1]),
            (Region::Ball(w), SpaceModel::EuclideanPlane { .. }) => std::f64::consts::PI * w.radius * w.radius,
            (Region::Ball(w), SpaceModel::PoincareDisk) => TAU * (w.radius.cosh() - 1.0),
            (Region::Ball(w), SpaceModel::MetricGraph(g)) => {
                let Point::Graph { edge, offset } = w.center else {
                    return 0.0;
                };
                (0..g.edges().len())
                    .flat_map(|e| g.ball_intervals((edge, offset), w.radius, e))
                    .map(|(lo, hi)| hi - lo)
                    .sum()
            }
        }
    }

    /// A center used for distance bookkeeping.
    pub fn center(&self) -> Point {
        match self {
            Region::Ball(w) => w.center,
            Region::Rect { min, max } => Point::plane(0.5 * (min[0] + max[0]), 0.5 * (min[1] + max[1])),
        }
    }

    /// Radius of a ball about [`Region::center`] containing the region.
    pub fn outer_radius(&self) -> f64 {
        match self {
            Region::Ball(w) => w.radius,
            Region::Rect { min, max } => 0.5 * (max[0] - min[0]).hypot(max[1] - min[1]),
        }
    }

    pub fn validate(&self, space: &SpaceModel) -> Result<()> {
        match self {
            Region::Ball(w) => {
                space.validate(&w.center)?;
                Window::new(w.center, w.radius).map(|_| ())
            }
            Region::Rect { min, max } => {
                if !matches!(space, SpaceModel::EuclideanPlane { .. }) {
                    return Err(Error::InvalidSpace("rectangular regions need the plane model".into()));
                }
                if !(min[0] < max[0] && min[1] < max[1]) || min.iter().chain(max).any(|v| !v.is_finite()) {
                    return Err(Error::InvalidSpace("degenerate rectangle".into()));
                }
                Ok(())
            }
        }
    }

    pub fn sample(&self, space: &SpaceModel, n: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
        match self {
            Region::Ball(w) => space.sample_ball_with(&w.center, w.radius, n, rng).points,
            Region::Rect { min, max } => {
                let mut out = Vec::with_capacity(n);
                while out.len() < n {
                    let p = Point::plane(rng.gen_range(min[0]..=max[0]), rng.gen_range(min[1]..=max[1]));
                    if space.validate(&p).is_ok() {
                        out.push(p);
                    }
                }
                out
            }
        }
    }
}
