//! Ball enumeration backends: crystallographic plane groups, finite graph
//! groups, and breadth-first word search.

use std::collections::HashMap;

use serde::Serialize;

use super::{reduce, ActionSystem, GroupElement, Isometry, Word};
use crate::error::{Error, Result};
use crate::geometry::{disk, Point, SpaceModel};
use crate::TOL;

/// Largest finite group accepted for exact graph enumeration.
const FINITE_CAP: usize = 100_000;
/// Largest number of distinct elements a word search keeps.
const SEARCH_CAP: usize = 1_000_000;

/// A plane group presented as `⋃ cᵢ L` for a translation lattice `L` and
/// finitely many coset representatives `cᵢ` (the identity coset is implicit).
#[derive(Clone, Debug, Serialize)]
pub struct Lattice {
    basis: Vec<GroupElement>,
    vectors: Vec<[f64; 2]>,
    cosets: Vec<GroupElement>,
}

impl Lattice {
    pub(crate) fn new(action: &ActionSystem, basis: Vec<Word>, cosets: Vec<Word>) -> Result<Self> {
        if !matches!(action.space(), SpaceModel::EuclideanPlane { .. }) {
            return Err(Error::Precondition("lattice structures live on the plane".into()));
        }
        if basis.is_empty() || basis.len() > 2 {
            return Err(Error::Precondition("a lattice needs one or two basis translations".into()));
        }
        let basis: Vec<GroupElement> = basis.iter().map(|w| action.element(w)).collect::<Result<_>>()?;
        let mut vectors = Vec::new();
        for b in &basis {
            match &b.map {
                Isometry::Affine(a) if a.has_identity_linear_part() => vectors.push(a.translation),
                _ => {
                    return Err(Error::Precondition(format!(
                        "basis word {:?} is not a translation",
                        b.word
                    )))
                }
            }
        }
        if let [v, w] = vectors[..] {
            if (v[0] * w[1] - v[1] * w[0]).abs() < 1e-9 {
                return Err(Error::Precondition("lattice basis is degenerate".into()));
            }
        } else if vectors[0][0].hypot(vectors[0][1]) < 1e-9 {
            return Err(Error::Precondition("lattice basis is degenerate".into()));
        }
        let mut all = vec![action.identity()];
        for w in &cosets {
            let c = action.element(w)?;
            if !c.map.is_isometric() {
                return Err(Error::Precondition("coset representatives must be isometries".into()));
            }
            all.push(c);
        }
        let lattice = Lattice {
            basis,
            vectors,
            cosets: all,
        };
        lattice.validate(action)?;
        Ok(lattice)
    }

    /// The lattice spanned by the generators themselves, when they are all translations.
    pub(crate) fn from_translations(action: &ActionSystem) -> Result<Self> {
        let n = action.generators().len();
        let all_translations = action
            .generators()
            .iter()
            .all(|g| matches!(g, Isometry::Affine(a) if a.has_identity_linear_part()));
        if !all_translations || n > 2 {
            return Err(Error::Precondition(
                "exact enumeration of this plane group needs an explicit lattice structure".into(),
            ));
        }
        let basis = (1..=n as i32).map(|l| vec![l]).collect();
        Self::new(action, basis, Vec::new())
    }

    fn affine(g: &GroupElement) -> &super::Affine {
        match &g.map {
            Isometry::Affine(a) => a,
            _ => unreachable!("lattice elements are affine"),
        }
    }

    /// Integer coordinates of `v` in the basis, when `v` lies in the lattice.
    fn coordinates(&self, v: [f64; 2]) -> Option<Vec<i64>> {
        let m = self.real_coordinates(v);
        let rounded: Vec<i64> = m.iter().map(|c| c.round() as i64).collect();
        let back = self.vector(&rounded);
        let scale = 1.0 + v[0].abs().max(v[1].abs());
        ((back[0] - v[0]).hypot(back[1] - v[1]) <= 1e-7 * scale).then_some(rounded)
    }

    fn real_coordinates(&self, v: [f64; 2]) -> Vec<f64> {
        match self.vectors[..] {
            [a] => vec![(v[0] * a[0] + v[1] * a[1]) / (a[0] * a[0] + a[1] * a[1])],
            [a, b] => {
                let det = a[0] * b[1] - a[1] * b[0];
                vec![(v[0] * b[1] - v[1] * b[0]) / det, (a[0] * v[1] - a[1] * v[0]) / det]
            }
            _ => unreachable!(),
        }
    }

    fn vector(&self, m: &[i64]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (k, v) in m.iter().zip(&self.vectors) {
            out[0] += *k as f64 * v[0];
            out[1] += *k as f64 * v[1];
        }
        out
    }

    /// Coset index `j` and lattice coordinates `m` with `g = c_j ∘ t_m`.
    fn decompose(&self, g: &super::Affine) -> Option<(usize, Vec<i64>)> {
        self.cosets.iter().enumerate().find_map(|(j, c)| {
            let rest = Self::affine(c).inverse().compose(g);
            if !rest.has_identity_linear_part() {
                return None;
            }
            self.coordinates(rest.translation).map(|m| (j, m))
        })
    }

    fn validate(&self, action: &ActionSystem) -> Result<()> {
        for c in &self.cosets {
            let a = Self::affine(c);
            for v in &self.vectors {
                if self.coordinates(a.linear(*v)).is_none() {
                    return Err(Error::Precondition(format!(
                        "coset {:?} does not preserve the lattice",
                        c.word
                    )));
                }
            }
        }
        for (i, ci) in self.cosets.iter().enumerate() {
            for cj in &self.cosets[i + 1..] {
                let rest = Self::affine(ci).inverse().compose(Self::affine(cj));
                if rest.has_identity_linear_part() && self.coordinates(rest.translation).is_some() {
                    return Err(Error::Precondition(format!(
                        "cosets {:?} and {:?} coincide",
                        ci.word, cj.word
                    )));
                }
            }
        }
        for (s, gen) in action.generators().iter().enumerate() {
            let Isometry::Affine(sa) = gen else { unreachable!() };
            let mut hit = vec![false; self.cosets.len()];
            for c in &self.cosets {
                let Some((j, _)) = self.decompose(&sa.compose(Self::affine(c))) else {
                    return Err(Error::Precondition(format!(
                        "generator {} times coset {:?} leaves the described group",
                        s + 1,
                        c.word
                    )));
                };
                if std::mem::replace(&mut hit[j], true) {
                    return Err(Error::Precondition(format!(
                        "generator {} does not permute the cosets",
                        s + 1
                    )));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn element(&self, coset: usize, m: &[i64]) -> GroupElement {
        let mut t = self.cosets[coset].clone();
        for (k, b) in m.iter().zip(&self.basis) {
            let step = if *k >= 0 { b.clone() } else { b.inverse() };
            for _ in 0..k.unsigned_abs() {
                t = t.compose(&step);
            }
        }
        // Rebuild the map from the exact lattice vector to avoid drift over long words.
        let c = Self::affine(&self.cosets[coset]);
        let v = self.vector(m);
        t.map = Isometry::Affine(c.compose(&super::Affine::translation(v[0], v[1])));
        t.word = reduce(t.word);
        t
    }

    /// All elements `g` with `d(g x, x) <= r`.
    pub(crate) fn moving(&self, x: &Point, r: f64) -> Vec<GroupElement> {
        let [px, py] = x.coords().expect("plane point");
        let mut out = Vec::new();
        for (i, c) in self.cosets.iter().enumerate() {
            let [yx, yy] = Self::affine(c).inverse().apply([px, py]);
            let q = [yx - px, yy - py];
            for m in self.points_near(q, r + TOL) {
                let g = self.element(i, &m);
                let [gx, gy] = Self::affine(&g).apply([px, py]);
                if (gx - px).hypot(gy - py) <= r + TOL {
                    out.push(g);
                }
            }
        }
        out
    }

    /// Lattice coordinates of all points within `r` of `q`.
    fn points_near(&self, q: [f64; 2], r: f64) -> Vec<Vec<i64>> {
        let m = self.real_coordinates(q);
        let mut out = Vec::new();
        match self.vectors[..] {
            [a] => {
                let span = r / a[0].hypot(a[1]);
                for k in (m[0] - span).floor() as i64..=(m[0] + span).ceil() as i64 {
                    let w = self.vector(&[k]);
                    if (w[0] - q[0]).hypot(w[1] - q[1]) <= r {
                        out.push(vec![k]);
                    }
                }
            }
            [a, b] => {
                let det = (a[0] * b[1] - a[1] * b[0]).abs();
                let s1 = r * b[0].hypot(b[1]) / det;
                let s2 = r * a[0].hypot(a[1]) / det;
                for k1 in (m[0] - s1).floor() as i64..=(m[0] + s1).ceil() as i64 {
                    for k2 in (m[1] - s2).floor() as i64..=(m[1] + s2).ceil() as i64 {
                        let w = self.vector(&[k1, k2]);
                        if (w[0] - q[0]).hypot(w[1] - q[1]) <= r {
                            out.push(vec![k1, k2]);
                        }
                    }
                }
            }
            _ => unreachable!(),
        }
        out
    }
}

/// Closure of the generators of a finite graph automorphism group.
pub(crate) fn finite_closure(action: &ActionSystem) -> Result<Vec<GroupElement>> {
    let mut elements = vec![action.identity()];
    let mut seen: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
    seen.insert(graph_key(&elements[0]), vec![0]);
    let mut head = 0;
    while head < elements.len() {
        let g = elements[head].clone();
        head += 1;
        for l in letters(action.generators().len()) {
            let h = action.element(&[l]).expect("valid letter").compose(&g);
            let key = graph_key(&h);
            let bucket = seen.entry(key).or_default();
            if bucket.iter().any(|&i| elements[i].map == h.map) {
                continue;
            }
            bucket.push(elements.len());
            elements.push(h);
            if elements.len() > FINITE_CAP {
                return Err(Error::Precondition(format!(
                    "graph group exceeds {FINITE_CAP} elements"
                )));
            }
        }
    }
    Ok(elements)
}

fn graph_key(g: &GroupElement) -> Vec<usize> {
    match &g.map {
        Isometry::Graph(m) => m.vertices.clone(),
        _ => unreachable!("graph element expected"),
    }
}

fn letters(n: usize) -> impl Iterator<Item = i32> {
    (1..=n as i32).flat_map(|l| [l, -l])
}

/// Result of a breadth-first word search around a center point.
#[derive(Clone, Debug)]
pub(crate) struct WordSearch {
    /// Radius about the center below which every searched element is listed.
    pub radius: f64,
    /// `(d(g c, c), g)`, sorted by displacement then discovery order.
    pub elements: Vec<(f64, GroupElement)>,
    /// The search hit its element cap.
    pub truncated: bool,
}

/// Breadth-first search over freely reduced words of length at most `depth`.
///
/// With `prune`, a word `w` is abandoned once `d(w c, c) > radius + D (depth - |w|)`,
/// `D` the largest generator displacement at `c`; this is sound for isometric actions.
/// Elements are identified by their action on three probe points.
pub(crate) fn word_search(action: &ActionSystem, center: &Point, radius: f64, depth: usize, prune: bool) -> WordSearch {
    let space = action.space();
    let probes = probe_points(space, center);
    let reach = action.max_displacement(center);
    let mut index = ProbeIndex::new(space.clone());
    let identity = action.identity();
    index.insert(&probes, &identity);
    let mut found = vec![(0.0, identity.clone())];
    let mut frontier = vec![identity];
    let mut truncated = false;
    for len in 1..=depth {
        let mut next = Vec::new();
        for w in &frontier {
            for l in letters(action.generators().len()) {
                if w.word.last() == Some(&-l) {
                    continue;
                }
                let mut word = w.word.clone();
                word.push(l);
                let g = GroupElement {
                    word,
                    map: w.map.compose(action.letter(l)),
                };
                let moved = space.dist(&g.act(center), center);
                if prune && moved > radius + reach * (depth - len) as f64 + TOL {
                    continue;
                }
                if !index.insert(&probes, &g) {
                    continue;
                }
                if moved <= radius + TOL {
                    found.push((moved, g.clone()));
                }
                next.push(g);
                if index.len() >= SEARCH_CAP {
                    truncated = true;
                    break;
                }
            }
            if truncated {
                break;
            }
        }
        frontier = next;
        if truncated || frontier.is_empty() {
            break;
        }
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    WordSearch {
        radius,
        elements: found,
        truncated,
    }
}

fn probe_points(space: &SpaceModel, c: &Point) -> Vec<Point> {
    match space {
        SpaceModel::EuclideanPlane { .. } => {
            let [x, y] = c.coords().expect("plane point");
            vec![*c, Point::plane(x + 0.1, y), Point::plane(x, y + 0.1)]
        }
        SpaceModel::PoincareDisk => {
            let z = c.complex();
            let a = disk::polar(z, 0.1, 0.0);
            let b = disk::polar(z, 0.1, std::f64::consts::FRAC_PI_2);
            vec![*c, Point::disk(a.re, a.im), Point::disk(b.re, b.im)]
        }
        SpaceModel::MetricGraph(_) => vec![*c],
    }
}

/// Deduplication of group elements by their images of the probe points.
struct ProbeIndex {
    space: SpaceModel,
    cells: HashMap<(i64, i64), Vec<Vec<Point>>>,
    graphs: HashMap<Vec<usize>, Vec<GroupElement>>,
    count: usize,
}

const CELL: f64 = 1e-6;
const SAME: f64 = 1e-6;

impl ProbeIndex {
    fn new(space: SpaceModel) -> Self {
        ProbeIndex {
            space,
            cells: HashMap::new(),
            graphs: HashMap::new(),
            count: 0,
        }
    }

    fn len(&self) -> usize {
        self.count
    }

    /// Records `g`; returns false when an equal element is already present.
    fn insert(&mut self, probes: &[Point], g: &GroupElement) -> bool {
        if let Isometry::Graph(m) = &g.map {
            let bucket = self.graphs.entry(m.vertices.clone()).or_default();
            if bucket.iter().any(|h| h.map == g.map) {
                return false;
            }
            bucket.push(g.clone());
            self.count += 1;
            return true;
        }
        let images: Vec<Point> = probes.iter().map(|p| g.act(p)).collect();
        let [x, y] = images[0].coords().expect("planar coordinates");
        let (cx, cy) = ((x / CELL).floor() as i64, (y / CELL).floor() as i64);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = self.cells.get(&(cx + dx, cy + dy)) {
                    let dup = list
                        .iter()
                        .any(|other| other.iter().zip(&images).all(|(a, b)| self.space.dist(a, b) <= SAME));
                    if dup {
                        return false;
                    }
                }
            }
        }
        self.cells.entry((cx, cy)).or_default().push(images);
        self.count += 1;
        true
    }
}
