use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{disk, Point, SpaceModel, Window};
use crate::TOL;

/// Affine map `x ↦ M x + t` of the plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Affine {
    pub matrix: [[f64; 2]; 2],
    pub translation: [f64; 2],
}

impl Affine {
    pub const IDENTITY: Affine = Affine {
        matrix: [[1.0, 0.0], [0.0, 1.0]],
        translation: [0.0, 0.0],
    };

    pub fn translation(tx: f64, ty: f64) -> Self {
        Affine {
            matrix: Self::IDENTITY.matrix,
            translation: [tx, ty],
        }
    }

    pub fn apply(&self, [x, y]: [f64; 2]) -> [f64; 2] {
        let m = &self.matrix;
        [
            m[0][0] * x + m[0][1] * y + self.translation[0],
            m[1][0] * x + m[1][1] * y + self.translation[1],
        ]
    }

    pub fn linear(&self, [x, y]: [f64; 2]) -> [f64; 2] {
        let m = &self.matrix;
        [m[0][0] * x + m[0][1] * y, m[1][0] * x + m[1][1] * y]
    }

    pub fn det(&self) -> f64 {
        let m = &self.matrix;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Affine) -> Affine {
        let (a, b) = (&self.matrix, &other.matrix);
        let mut matrix = [[0.0; 2]; 2];
        for (i, row) in matrix.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Affine {
            matrix,
            translation: self.apply(other.translation),
        }
    }

    pub fn inverse(&self) -> Affine {
        let m = &self.matrix;
        let det = self.det();
        let inv = [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]];
        let t = self.translation;
        let it = [
            -(inv[0][0] * t[0] + inv[0][1] * t[1]),
            -(inv[1][0] * t[0] + inv[1][1] * t[1]),
        ];
        Affine {
            matrix: inv,
            translation: it,
        }
    }

    pub fn is_orthogonal(&self) -> bool {
        let m = &self.matrix;
        let c0 = m[0][0] * m[0][0] + m[1][0] * m[1][0];
        let c1 = m[0][1] * m[0][1] + m[1][1] * m[1][1];
        let dot = m[0][0] * m[0][1] + m[1][0] * m[1][1];
        (c0 - 1.0).abs() < 1e-12 && (c1 - 1.0).abs() < 1e-12 && dot.abs() < 1e-12
    }

    pub fn has_identity_linear_part(&self) -> bool {
        let m = &self.matrix;
        (m[0][0] - 1.0).abs() < 1e-12 && m[0][1].abs() < 1e-12 && m[1][0].abs() < 1e-12 && (m[1][1] - 1.0).abs() < 1e-12
    }

    /// A fixed point closest to `near`, if the fixed set is nonempty.
    fn fixed_point_near(&self, near: [f64; 2]) -> Option<[f64; 2]> {
        let m = &self.matrix;
        let a = [[m[0][0] - 1.0, m[0][1]], [m[1][0], m[1][1] - 1.0]];
        let t = self.translation;
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let scale = 1.0 + m.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
        if det.abs() > 1e-12 * scale * scale {
            let x = (-t[0] * a[1][1] + t[1] * a[0][1]) / det;
            let y = (-t[1] * a[0][0] + t[0] * a[1][0]) / det;
            return Some([x, y]);
        }
        let row = if a[0][0].hypot(a[0][1]) >= a[1][0].hypot(a[1][1]) { 0 } else { 1 };
        let r = a[row];
        let rn = r[0] * r[0] + r[1] * r[1];
        let candidate = if rn < 1e-24 {
            near
        } else {
            let x0 = [-t[row] * r[0] / rn, -t[row] * r[1] / rn];
            let k = [-r[1], r[0]];
            let s = (k[0] * (near[0] - x0[0]) + k[1] * (near[1] - x0[1])) / rn;
            [x0[0] + s * k[0], x0[1] + s * k[1]]
        };
        let img = self.apply(candidate);
        ((img[0] - candidate[0]).hypot(img[1] - candidate[1]) <= TOL).then_some(candidate)
    }
}

/// Disk map `z ↦ (a w + b) / (c w + d)` with `w = z̄` when `conjugate` is set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Mobius {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
    pub conjugate: bool,
}

impl Mobius {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64, conjugate: bool) -> Result<Self> {
        let det = a * d - b * c;
        if det.norm() < 1e-14 || !det.is_finite() {
            return Err(Error::InvalidIsometry("Möbius coefficients are singular".into()));
        }
        let s = det.sqrt();
        Ok(Mobius {
            a: a / s,
            b: b / s,
            c: c / s,
            d: d / s,
            conjugate,
        })
    }

    /// Hyperbolic translation of length `length` along the diameter at angle `angle`.
    pub fn translation(length: f64, angle: f64) -> Self {
        let (ch, sh) = ((length / 2.0).cosh(), (length / 2.0).sinh());
        let dir = Complex64::from_polar(1.0, angle);
        Mobius {
            a: Complex64::new(ch, 0.0),
            b: dir * sh,
            c: dir.conj() * sh,
            d: Complex64::new(ch, 0.0),
            conjugate: false,
        }
    }

    pub fn rotation(angle: f64) -> Self {
        let h = Complex64::from_polar(1.0, angle / 2.0);
        Mobius {
            a: h,
            b: Complex64::new(0.0, 0.0),
            c: Complex64::new(0.0, 0.0),
            d: h.conj(),
            conjugate: false,
        }
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        let w = if self.conjugate { z.conj() } else { z };
        (self.a * w + self.b) / (self.c * w + self.d)
    }

    fn conj_coeffs(&self) -> (Complex64, Complex64, Complex64, Complex64) {
        (self.a.conj(), self.b.conj(), self.c.conj(), self.d.conj())
    }

    pub fn compose(&self, other: &Mobius) -> Mobius {
        let (a2, b2, c2, d2) = if self.conjugate {
            other.conj_coeffs()
        } else {
            (other.a, other.b, other.c, other.d)
        };
        Mobius {
            a: self.a * a2 + self.b * c2,
            b: self.a * b2 + self.b * d2,
            c: self.c * a2 + self.d * c2,
            d: self.c * b2 + self.d * d2,
            conjugate: self.conjugate != other.conjugate,
        }
    }

    pub fn inverse(&self) -> Mobius {
        let (a, b, c, d) = (self.d, -self.b, -self.c, self.a);
        if self.conjugate {
            Mobius {
                a: a.conj(),
                b: b.conj(),
                c: c.conj(),
                d: d.conj(),
                conjugate: true,
            }
        } else {
            Mobius {
                a,
                b,
                c,
                d,
                conjugate: false,
            }
        }
    }

    fn fixed_point_near(&self, near: Complex64) -> Option<Complex64> {
        if self.conjugate {
            let sq = self.compose(self);
            let gn = self.apply(near);
            if (gn - near).norm() <= TOL {
                return Some(near);
            }
            if sq.is_identity() {
                // Reflection: the geodesic midpoint of `near` and its image lies on the mirror.
                let d = disk::distance(near, gn);
                return Some(disk::along(near, gn, d / 2.0));
            }
            return sq
                .fixed_point_near(near)
                .filter(|&z| (self.apply(z) - z).norm() <= 1e-7);
        }
        let (a, b, c, d) = (self.a, self.b, self.c, self.d);
        let roots: Vec<Complex64> = if c.norm() < 1e-14 {
            if (d - a).norm() < 1e-14 {
                return if b.norm() < 1e-14 { Some(near) } else { None };
            }
            vec![b / (d - a)]
        } else {
            let p = d - a;
            let disc = (p * p + 4.0 * b * c).sqrt();
            vec![(-p + disc) / (2.0 * c), (-p - disc) / (2.0 * c)]
        };
        roots
            .into_iter()
            .filter(|z| z.norm() < 1.0 - 1e-9)
            .min_by(|x, y| disk::distance(*x, near).total_cmp(&disk::distance(*y, near)))
    }

    fn is_identity(&self) -> bool {
        if self.conjugate {
            return false;
        }
        let scale = self.a.norm().max(self.d.norm());
        self.b.norm() < 1e-10 * scale && self.c.norm() < 1e-10 * scale && (self.a - self.d).norm() < 1e-10 * scale
    }
}

/// Graph automorphism: vertex permutation plus the induced edge map.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GraphMap {
    pub vertices: Vec<usize>,
    /// `edges[i] = (j, flipped)`: edge `i` goes to edge `j`, reversed when `flipped`.
    pub edges: Vec<(usize, bool)>,
    #[serde(skip)]
    lengths: Vec<f64>,
}

impl GraphMap {
    pub fn from_vertex_permutation(space: &SpaceModel, vertices: Vec<usize>) -> Result<Self> {
        let SpaceModel::MetricGraph(g) = space else {
            return Err(Error::InvalidIsometry("vertex permutations need a metric graph".into()));
        };
        let n = g.vertex_count();
        if vertices.len() != n {
            return Err(Error::InvalidIsometry(format!(
                "permutation has {} entries for {n} vertices",
                vertices.len()
            )));
        }
        let mut seen = vec![false; n];
        for &v in &vertices {
            if v >= n || std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidIsometry("vertex map is not a permutation".into()));
            }
        }
        let mut used = vec![false; g.edges().len()];
        let mut edges = Vec::with_capacity(g.edges().len());
        for (i, e) in g.edges().iter().enumerate() {
            let (sa, sb) = (vertices[e.a], vertices[e.b]);
            let found = g.edges().iter().enumerate().find(|(j, f)| {
                !used[*j] && f.length == e.length && ((f.a == sa && f.b == sb) || (f.a == sb && f.b == sa))
            });
            let Some((j, f)) = found else {
                return Err(Error::InvalidIsometry(format!(
                    "edge {i} has no image preserving adjacency and length"
                )));
            };
            used[j] = true;
            edges.push((j, f.a != sa));
        }
        let lengths = g.edges().iter().map(|e| e.length).collect();
        Ok(GraphMap { vertices, edges, lengths })
    }

    pub fn identity(graph: &crate::geometry::MetricGraph) -> Self {
        GraphMap {
            vertices: (0..graph.vertex_count()).collect(),
            edges: (0..graph.edges().len()).map(|e| (e, false)).collect(),
            lengths: graph.edges().iter().map(|e| e.length).collect(),
        }
    }

    pub fn apply(&self, edge: usize, offset: f64) -> (usize, f64) {
        let (e, flip) = self.edges[edge];
        (e, if flip { self.lengths[e] - offset } else { offset })
    }

    pub fn compose(&self, other: &GraphMap) -> GraphMap {
        GraphMap {
            vertices: other.vertices.iter().map(|&v| self.vertices[v]).collect(),
            edges: other
                .edges
                .iter()
                .map(|&(e, f)| {
                    let (e2, f2) = self.edges[e];
                    (e2, f != f2)
                })
                .collect(),
            lengths: self.lengths.clone(),
        }
    }

    pub fn inverse(&self) -> GraphMap {
        let mut vertices = vec![0; self.vertices.len()];
        for (v, &w) in self.vertices.iter().enumerate() {
            vertices[w] = v;
        }
        let mut edges = vec![(0, false); self.edges.len()];
        for (e, &(f, flip)) in self.edges.iter().enumerate() {
            edges[f] = (e, flip);
        }
        GraphMap {
            vertices,
            edges,
            lengths: self.lengths.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Isometry {
    /// Plane map. Non-orthogonal linear parts are allowed for non-isometric fixtures.
    Affine(Affine),
    Mobius(Mobius),
    Graph(GraphMap),
}

impl Isometry {
    pub fn identity_for(space: &SpaceModel) -> Isometry {
        match space {
            SpaceModel::EuclideanPlane { .. } => Isometry::Affine(Affine::IDENTITY),
            SpaceModel::PoincareDisk => Isometry::Mobius(Mobius::rotation(0.0)),
            SpaceModel::MetricGraph(g) => Isometry::Graph(GraphMap::identity(g)),
        }
    }

    /// Panics when the point belongs to another model.
    pub fn apply(&self, p: &Point) -> Point {
        match (self, p) {
            (Isometry::Affine(m), Point::Plane { x, y }) => {
                let [x, y] = m.apply([*x, *y]);
                Point::plane(x, y)
            }
            (Isometry::Mobius(m), Point::Disk { .. }) => {
                let z = m.apply(p.complex());
                Point::disk(z.re, z.im)
            }
            (Isometry::Graph(m), Point::Graph { edge, offset }) => {
                let (e, o) = m.apply(*edge, *offset);
                Point::graph(e, o)
            }
            _ => panic!("isometry applied to a point of another model"),
        }
    }

    pub fn compose(&self, other: &Isometry) -> Isometry {
        match (self, other) {
            (Isometry::Affine(a), Isometry::Affine(b)) => Isometry::Affine(a.compose(b)),
            (Isometry::Mobius(a), Isometry::Mobius(b)) => Isometry::Mobius(a.compose(b)),
            (Isometry::Graph(a), Isometry::Graph(b)) => Isometry::Graph(a.compose(b)),
            _ => panic!("composition of maps of different models"),
        }
    }

    pub fn inverse(&self) -> Isometry {
        match self {
            Isometry::Affine(a) => Isometry::Affine(a.inverse()),
            Isometry::Mobius(m) => Isometry::Mobius(m.inverse()),
            Isometry::Graph(g) => Isometry::Graph(g.inverse()),
        }
    }

    pub fn fits(&self, space: &SpaceModel) -> bool {
        matches!(
            (self, space),
            (Isometry::Affine(_), SpaceModel::EuclideanPlane { .. })
                | (Isometry::Mobius(_), SpaceModel::PoincareDisk)
                | (Isometry::Graph(_), SpaceModel::MetricGraph(_))
        )
    }

    /// Whether the map preserves distances (graph and disk maps always do once validated).
    pub fn is_isometric(&self) -> bool {
        match self {
            Isometry::Affine(a) => a.is_orthogonal(),
            _ => true,
        }
    }

    /// Validate against `space`: model, invertibility, and distance preservation
    /// on 100 random pairs. Non-isometric plane maps pass only when `allow_affine`.
    pub fn check(&self, space: &SpaceModel, allow_affine: bool, seed: u64) -> Result<()> {
        if !self.fits(space) {
            return Err(Error::InvalidIsometry(format!("map does not act on the {} model", space.kind().name())));
        }
        match self {
            Isometry::Affine(a) => {
                if a.det().abs() < 1e-12 || a.matrix.iter().flatten().chain(&a.translation).any(|v| !v.is_finite()) {
                    return Err(Error::InvalidIsometry("affine map is singular".into()));
                }
                if let SpaceModel::EuclideanPlane { punctured: true } = space {
                    if a.translation[0].hypot(a.translation[1]) > TOL {
                        return Err(Error::InvalidIsometry("maps of the punctured plane must fix the puncture".into()));
                    }
                }
                if !a.is_orthogonal() && !allow_affine {
                    return Err(Error::InvalidIsometry("linear part is not orthogonal".into()));
                }
                if !a.is_orthogonal() {
                    return Ok(());
                }
            }
            Isometry::Mobius(m) => {
                let z = m.apply(Complex64::new(0.0, 0.0));
                if z.norm().is_nan() || z.norm() >= 1.0 {
                    return Err(Error::InvalidIsometry("Möbius map does not preserve the disk".into()));
                }
            }
            // Graph automorphisms are exact by construction.
            Isometry::Graph(_) => return Ok(()),
        }
        let probe = match space {
            SpaceModel::PoincareDisk => Point::disk(0.0, 0.0),
            _ => Point::plane(0.5, 0.5),
        };
        let pts = space
            .sample_ball(&probe, 2.0, 200, seed)
            .expect("valid probe ball")
            .points;
        for pair in pts.chunks(2) {
            let (p, q) = (&pair[0], &pair[1]);
            let (gp, gq) = (self.apply(p), self.apply(q));
            if space.validate(&gp).is_err() {
                return Err(Error::InvalidIsometry("map leaves the space".into()));
            }
            let err = (space.dist(&gp, &gq) - space.dist(p, q)).abs();
            if err > TOL {
                return Err(Error::InvalidIsometry(format!("distance changes by {err:e}")));
            }
        }
        Ok(())
    }

    /// A point of `window` fixed by this map, if any.
    pub fn fixed_point_in(&self, space: &SpaceModel, window: &Window) -> Option<Point> {
        let found = match (self, space) {
            (Isometry::Affine(a), _) => {
                let near = window.center.coords()?;
                a.fixed_point_near(near).map(|[x, y]| Point::plane(x, y))
            }
            (Isometry::Mobius(m), _) => m
                .fixed_point_near(window.center.complex())
                .map(|z| Point::disk(z.re, z.im)),
            (Isometry::Graph(m), SpaceModel::MetricGraph(g)) => {
                let mut candidates = Vec::new();
                for (v, &w) in m.vertices.iter().enumerate() {
                    if v == w && g.degree(v) > 0 {
                        let (e, o) = g.vertex_point(v);
                        candidates.push(Point::graph(e, o));
                    }
                }
                for (e, &(f, flip)) in m.edges.iter().enumerate() {
                    if e == f {
                        let half = g.edge(e).length / 2.0;
                        if flip {
                            candidates.push(Point::graph(e, half));
                        } else {
                            // The whole edge is fixed; take the point nearest the window center.
                            let pts = [0.0, half, g.edge(e).length].map(|o| Point::graph(e, o));
                            candidates.extend(pts);
                        }
                    }
                }
                candidates
                    .into_iter()
                    .min_by(|p, q| space.dist(p, &window.center).total_cmp(&space.dist(q, &window.center)))
            }
            _ => None,
        };
        found.filter(|p| space.validate(p).is_ok() && window.contains(space, p))
    }
}

/// Seeded check used by constructors that take many generators.
pub(crate) fn check_all(space: &SpaceModel, maps: &[Isometry], allow_affine: bool, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for m in maps {
        m.check(space, allow_affine, rand::Rng::gen(&mut rng))?;
    }
    Ok(())
}
