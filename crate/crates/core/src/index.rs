//! Incremental spatial index for radius and nearest-neighbour queries.

use std::collections::HashMap;

use crate::geometry::{Point, SpaceModel};

/// The nearest point and the runner-up, as `(index, distance)`.
pub type NearestTwo = ((usize, f64), Option<(usize, f64)>);

/// Uniform grid over planar coordinates (plane and disk); linear scan on graphs.
///
/// Disk queries use the Euclidean extent of the hyperbolic ball: `B(z, r)` lies
/// within Euclidean distance `t(1 − |z|²)/(1 − |z|t)` of `z`, where `t = tanh(r/2)`.
#[derive(Clone, Debug)]
pub struct SpatialIndex {
    cell: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
    points: Vec<Point>,
    planar: bool,
    disk: bool,
}

impl SpatialIndex {
    pub fn new(space: &SpaceModel, cell: f64) -> Self {
        let (planar, disk) = match space {
            SpaceModel::EuclideanPlane { .. } => (true, false),
            SpaceModel::PoincareDisk => (true, true),
            SpaceModel::MetricGraph(_) => (false, false),
        };
        SpatialIndex {
            cell: cell.max(1e-9),
            cells: HashMap::new(),
            points: Vec::new(),
            planar,
            disk,
        }
    }

    pub fn with_points(space: &SpaceModel, cell: f64, points: &[Point]) -> Self {
        let mut index = Self::new(space, cell);
        for p in points {
            index.insert(*p);
        }
        index
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    fn key(&self, p: &Point) -> (i64, i64) {
        let [x, y] = p.coords().expect("planar point");
        ((x / self.cell).floor() as i64, (y / self.cell).floor() as i64)
    }

    pub fn insert(&mut self, p: Point) -> usize {
        let i = self.points.len();
        if self.planar {
            let k = self.key(&p);
            self.cells.entry(k).or_default().push(i);
        }
        self.points.push(p);
        i
    }

    /// Indices of points within distance `r` of `y`, in insertion order.
    pub fn within(&self, space: &SpaceModel, y: &Point, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.visit_candidates(y, r, |i| {
            if space.dist(&self.points[i], y) <= r {
                out.push(i);
            }
        });
        out.sort_unstable();
        out
    }

    /// Whether some point lies strictly closer than `r` to `y`.
    pub fn any_closer(&self, space: &SpaceModel, y: &Point, r: f64) -> bool {
        let mut found = false;
        self.visit_candidates(y, r, |i| {
            if !found && space.dist(&self.points[i], y) < r {
                found = true;
            }
        });
        found
    }

    fn visit_candidates(&self, y: &Point, r: f64, mut f: impl FnMut(usize)) {
        if !self.planar {
            (0..self.points.len()).for_each(f);
            return;
        }
        let [x0, y0] = y.coords().expect("planar point");
        let e = if self.disk {
            let t = (r / 2.0).tanh();
            let s = x0.hypot(y0);
            // Slightly inflated against rounding.
            t * (1.0 - s * s) / (1.0 - s * t) * (1.0 + 1e-9) + 1e-12
        } else {
            r
        };
        let side = (e / self.cell).ceil() + 1.0;
        if !side.is_finite() || side * side > (4 * self.cells.len() + 16) as f64 {
            (0..self.points.len()).for_each(f);
            return;
        }
        let lo = (((x0 - e) / self.cell).floor() as i64, ((y0 - e) / self.cell).floor() as i64);
        let hi = (((x0 + e) / self.cell).floor() as i64, ((y0 + e) / self.cell).floor() as i64);
        for cx in lo.0..=hi.0 {
            for cy in lo.1..=hi.1 {
                if let Some(list) = self.cells.get(&(cx, cy)) {
                    list.iter().copied().for_each(&mut f);
                }
            }
        }
    }

    /// The two nearest points to `y` as `(index, distance)`, nearest first.
    /// Ties are broken by index.
    pub fn nearest_two(&self, space: &SpaceModel, y: &Point) -> Option<NearestTwo> {
        if self.points.is_empty() {
            return None;
        }
        let want = self.points.len().min(2);
        let mut r = self.cell;
        loop {
            let mut found: Vec<(usize, f64)> = Vec::new();
            self.visit_candidates(y, r, |i| {
                let d = space.dist(&self.points[i], y);
                if d <= r {
                    found.push((i, d));
                }
            });
            if found.len() >= want || !r.is_finite() {
                found.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
                return Some((found[0], found.get(1).copied()));
            }
            r = if r > 1e12 { f64::INFINITY } else { 2.0 * r };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn nearest_two_matches_scan(
            pts in prop::collection::vec((-0.9f64..0.9, -0.9f64..0.9), 2..60),
            q in (-0.9f64..0.9, -0.9f64..0.9),
            disk in any::<bool>(),
        ) {
            let space = if disk { SpaceModel::PoincareDisk } else { SpaceModel::plane() };
            let mk = |(x, y): (f64, f64)| {
                let (x, y) = (x * 0.75, y * 0.75);
                if disk { Point::disk(x, y) } else { Point::plane(x, y) }
            };
            let points: Vec<Point> = pts.into_iter().map(mk).collect();
            let index = SpatialIndex::with_points(&space, 0.05, &points);
            let y = mk(q);
            let mut brute: Vec<(usize, f64)> = points.iter().enumerate().map(|(i, p)| (i, space.dist(p, &y))).collect();
            brute.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            let (a, b) = index.nearest_two(&space, &y).unwrap();
            prop_assert_eq!(a.1, brute[0].1);
            prop_assert_eq!(b.unwrap().1, brute[1].1);
            let r = 0.3;
            let within = index.within(&space, &y, r);
            let mut expect: Vec<usize> = brute.iter().filter(|(_, d)| *d <= r).map(|(i, _)| *i).collect();
            expect.sort_unstable();
            prop_assert_eq!(within, expect);
        }
    }
}
