//! Incidence graphs of Voronoi tessellations, detected by probing bisectors.

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::tree::{EdgeOrbit, Half, Lifting, QuotientGraph};
use crate::action::{ActionSystem, GroupElement};
use crate::error::{Error, Result};
use crate::geometry::{Point, SpaceModel};
use crate::netting::InvariantNet;
use crate::voronoi::Tessellation;

/// Largest distance gap at a probe that still counts as a shared boundary point.
pub const ADJACENCY_GAP: f64 = 1e-3;
/// Default probes per candidate pair.
pub const DEFAULT_PROBES: usize = 24;
/// Samples per tile used to pick candidate neighbours.
const CANDIDATE_SAMPLES: usize = 300;

/// Vertices are net indices; `labels` are orbit labels (all distinct without a group).
#[derive(Clone, Debug, Serialize)]
pub struct IncidenceGraph {
    pub vertices: Vec<usize>,
    pub labels: Vec<usize>,
    /// Pairs of net indices, smaller first.
    pub edges: Vec<(usize, usize)>,
}

impl IncidenceGraph {
    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|(a, b)| *a == v || *b == v).count()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    /// Connectivity of the subgraph induced on `subset`.
    pub fn induced_connected(&self, subset: &[usize]) -> bool {
        connected(subset, &self.edges)
    }
}

pub(crate) fn connected(subset: &[usize], edges: &[(usize, usize)]) -> bool {
    let set: BTreeSet<usize> = subset.iter().copied().collect();
    let Some(&start) = set.iter().next() else {
        return true;
    };
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(a, b) in edges {
        if set.contains(&a) && set.contains(&b) {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
    }
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        for &w in adj.get(&v).into_iter().flatten() {
            if seen.insert(w) {
                stack.push(w);
            }
        }
    }
    seen.len() == set.len()
}

/// Projects `q` onto the bisector of `x` and `y` along a geodesic from whichever
/// center lies on the other side.
fn bisector_point(space: &SpaceModel, x: &Point, y: &Point, q: &Point) -> Point {
    let f = |p: &Point| space.dist(p, x) - space.dist(p, y);
    let from = if f(q) > 0.0 { x } else { y };
    let (mut lo, mut hi) = (0.0, 1.0);
    let sign = f(from).signum();
    for _ in 0..48 {
        let mid = 0.5 * (lo + hi);
        if f(&space.towards(from, q, mid * space.dist(from, q))).signum() == sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    space.towards(from, q, hi * space.dist(from, q))
}

/// Whether the closed tiles of `x` and `y` share a probe point: one whose two nearest
/// centers are exactly `x` and `y`, at distances within [`ADJACENCY_GAP`].
pub fn tiles_adjacent(tess: &Tessellation, x: usize, y: usize, probes: usize, rng: &mut ChaCha8Rng) -> bool {
    let space = tess.space;
    let (px, py) = (tess.net.points()[x], tess.net.points()[y]);
    if midpoint_shared(tess, x, y) {
        return true;
    }
    let mid = space.towards(&px, &py, 0.5 * space.dist(&px, &py));
    let check = |p: &Point| shared_at(tess, x, y, p);
    let radius = 0.5 * space.dist(&px, &py);
    space
        .sample_ball_with(&mid, radius, probes, rng)
        .points
        .iter()
        .any(|q| check(&bisector_point(space, &px, &py, q)))
}

fn shared_at(tess: &Tessellation, x: usize, y: usize, p: &Point) -> bool {
    let ((a, da), second) = tess.net.nearest_two(tess.space, p);
    let Some((b, db)) = second else { return false };
    let pair = (a.min(b), a.max(b)) == (x.min(y), x.max(y));
    // The third center must be strictly farther.
    let third = tess.net.within(tess.space, p, db + 1e-12).len() == 2;
    pair && third && db - da <= ADJACENCY_GAP
}

/// The geodesic midpoint of `x` and `y` is a shared boundary point.
fn midpoint_shared(tess: &Tessellation, x: usize, y: usize) -> bool {
    let (px, py) = (tess.net.points()[x], tess.net.points()[y]);
    let mid = tess.space.towards(&px, &py, 0.5 * tess.space.dist(&px, &py));
    shared_at(tess, x, y, &mid)
}

/// Incidence graph of a plain net: pairs within `reach` are probed.
pub fn net_incidence(tess: &Tessellation, reach: f64, probes: usize, seed: u64) -> IncidenceGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = tess.net.len();
    let mut edges = Vec::new();
    for x in 0..n {
        for y in tess.net.within(tess.space, &tess.net.points()[x], reach) {
            if y > x && tiles_adjacent(tess, x, y, probes, &mut rng) {
                edges.push((x, y));
            }
        }
    }
    IncidenceGraph {
        vertices: (0..n).collect(),
        labels: (0..n).collect(),
        edges,
    }
}

/// The incidence structure of a G-invariant net, detected at representatives and
/// transported, so it is G-equivariant by construction.
#[derive(Clone, Debug)]
pub struct Incidence {
    /// Window graph on net points within the core radius.
    pub graph: IncidenceGraph,
    /// `neighbors[i]`: net indices of tiles adjacent to the representative of orbit `i`.
    pub neighbors: Vec<Vec<usize>>,
    pub quotient: QuotientGraph,
    /// Representative of edge orbit `k`: joins `rep[tail]` to net point `edge_ends[k]`.
    pub edge_ends: Vec<usize>,
}

pub fn incidence_graph(action: &ActionSystem, inv: &InvariantNet, core: f64, probes: usize, seed: u64) -> Result<Incidence> {
    let space = action.space();
    let tess = Tessellation::new(space, &inv.net);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi_max = inv.phi_max();
    let n = inv.reps.len();
    let mut neighbors: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (i, &r) in inv.reps.iter().enumerate() {
        // Closed tiles have radius at most 2φ (with the coverage slack).
        let reach = 2.2 * (inv.phi[i] + phi_max);
        let center = inv.net.points()[r];
        // Probing every pair in reach is costly; runner-up centers of samples taken
        // in the tile pick out the pairs worth probing.
        let mut seen = BTreeSet::new();
        for y in space.sample_ball_with(&center, 2.2 * inv.phi[i], CANDIDATE_SAMPLES, &mut rng).points {
            if let ((a, _), Some((b, _))) = inv.net.nearest_two(space, &y) {
                if a == r {
                    seen.insert(b);
                } else if b == r {
                    seen.insert(a);
                }
            }
        }
        for e in inv.net.within(space, &center, reach) {
            if e != r && (midpoint_shared(&tess, r, e) || (seen.contains(&e) && tiles_adjacent(&tess, r, e, probes, &mut rng))) {
                neighbors[i].insert(e);
            }
        }
    }
    // Symmetrize: (i -> h·r_j) implies (j -> h⁻¹·r_i).
    let mut keys: BTreeSet<((usize, usize), (usize, usize))> = BTreeSet::new();
    for i in 0..n {
        for &e in &neighbors[i].clone() {
            let j = inv.labels[e];
            let back = inv.transports[e].inverse().act(&inv.net.points()[inv.reps[i]]);
            let e2 = inv.lookup(space, &back).ok_or_else(|| {
                Error::Precondition("net does not extend far enough around a representative".into())
            })?;
            neighbors[j].insert(e2);
            let (a, b) = ((i, e), (j, e2));
            keys.insert((a.min(b), a.max(b)));
        }
    }
    let mut edge_orbits = Vec::new();
    let mut edge_ends = Vec::new();
    for ((i, e), other) in keys {
        edge_orbits.push(EdgeOrbit {
            tail: i,
            head: inv.labels[e],
            invertible: (i, e) == other,
        });
        edge_ends.push(e);
    }
    let neighbors: Vec<Vec<usize>> = neighbors.into_iter().map(|s| s.into_iter().collect()).collect();

    let vertices = inv.within_center(space, core);
    let inside: BTreeSet<usize> = vertices.iter().copied().collect();
    let mut edges = BTreeSet::new();
    for &v in &vertices {
        let g = &inv.transports[v];
        for &e in &neighbors[inv.labels[v]] {
            if let Some(w) = inv.lookup(space, &g.act(&inv.net.points()[e])) {
                if inside.contains(&w) {
                    edges.insert((v.min(w), v.max(w)));
                }
            }
        }
    }
    Ok(Incidence {
        graph: IncidenceGraph {
            labels: vertices.iter().map(|&v| inv.labels[v]).collect(),
            vertices,
            edges: edges.into_iter().collect(),
        },
        neighbors,
        quotient: QuotientGraph {
            vertex_orbits: n,
            edge_orbits,
        },
        edge_ends,
    })
}

/// Lifts over an invariant net: a vertex `(i, g)` is `g·rep_i` and an edge `(k, g)` is
/// the `g`-translate of the representative edge of orbit `k`.
pub struct NetLifting<'a> {
    pub inv: &'a InvariantNet,
    pub incidence: &'a Incidence,
    pub identity: GroupElement,
}

impl Lifting for NetLifting<'_> {
    type Vertex = (usize, GroupElement);
    type Edge = GroupElement;

    fn root(&self, orbit: usize) -> Self::Vertex {
        (orbit, self.identity.clone())
    }

    fn edge_at(&self, v: &Self::Vertex, k: usize, half: Half) -> Option<Self::Edge> {
        let o = self.incidence.quotient.edge_orbits[k];
        let h = &self.inv.transports[self.incidence.edge_ends[k]];
        match half {
            Half::Tail if v.0 == o.tail => Some(v.1.clone()),
            Half::Head if v.0 == o.head => Some(v.1.compose(&h.inverse())),
            _ => None,
        }
    }

    fn endpoint(&self, e: &Self::Edge, k: usize, half: Half) -> Self::Vertex {
        let o = self.incidence.quotient.edge_orbits[k];
        match half {
            Half::Tail => (o.tail, e.clone()),
            Half::Head => (o.head, e.compose(&self.inv.transports[self.incidence.edge_ends[k]])),
        }
    }
}
