//! Spanning trees of the quotient of a barycentric subdivision, lifted back
//! into the subdivision so that every orbit is met exactly once.

use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};

/// Which end of an oriented edge orbit a half-edge attaches to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Half {
    Tail,
    Head,
}

/// An orbit of edges, oriented by a chosen representative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct EdgeOrbit {
    pub tail: usize,
    pub head: usize,
    /// Some element reverses the representative; its two half-edges form one orbit.
    pub invertible: bool,
}

/// The quotient `Γ/G`, read as `Γ′/G`: vertex orbits are nodes `0..n`, edge orbit
/// `k` is node `n + k`, and half-edge orbits are the edges.
#[derive(Clone, Debug, Serialize)]
pub struct QuotientGraph {
    pub vertex_orbits: usize,
    pub edge_orbits: Vec<EdgeOrbit>,
}

/// One edge of the spanning tree of `Γ′/G`, directed away from the root.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TreeEdge {
    pub vertex: usize,
    pub edge: usize,
    pub half: Half,
    /// The vertex orbit is the parent.
    pub downward: bool,
}

impl QuotientGraph {
    pub fn node_count(&self) -> usize {
        self.vertex_orbits + self.edge_orbits.len()
    }

    /// Half-edge orbits as `(vertex orbit, edge orbit, half)`.
    pub fn half_edges(&self) -> Vec<(usize, usize, Half)> {
        let mut out = Vec::new();
        for (k, e) in self.edge_orbits.iter().enumerate() {
            out.push((e.tail, k, Half::Tail));
            if !e.invertible {
                out.push((e.head, k, Half::Head));
            }
        }
        out
    }

    /// Breadth-first spanning tree of `Γ′/G` from vertex orbit `root`.
    pub fn spanning_tree(&self, root: usize) -> Result<Vec<TreeEdge>> {
        let n = self.vertex_orbits;
        if root >= n {
            return Err(Error::Precondition(format!("no vertex orbit {root}")));
        }
        let mut at_vertex: Vec<Vec<(usize, Half)>> = vec![Vec::new(); n];
        let mut at_edge: Vec<Vec<(usize, Half)>> = vec![Vec::new(); self.edge_orbits.len()];
        for (v, k, h) in self.half_edges() {
            at_vertex[v].push((k, h));
            at_edge[k].push((v, h));
        }
        let mut seen = vec![false; self.node_count()];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        let mut tree = Vec::new();
        while let Some(node) = queue.pop_front() {
            if node < n {
                for &(k, half) in &at_vertex[node] {
                    if !seen[n + k] {
                        seen[n + k] = true;
                        tree.push(TreeEdge { vertex: node, edge: k, half, downward: true });
                        queue.push_back(n + k);
                    }
                }
            } else {
                for &(v, half) in &at_edge[node - n] {
                    if !seen[v] {
                        seen[v] = true;
                        tree.push(TreeEdge { vertex: v, edge: node - n, half, downward: false });
                        queue.push_back(v);
                    }
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Disconnected("quotient incidence graph".into()));
        }
        Ok(tree)
    }
}

/// Concrete vertices and edges of `Γ` with the maps needed to lift tree edges.
pub trait Lifting {
    type Vertex: Clone;
    type Edge: Clone;

    /// A vertex in orbit `orbit`.
    fn root(&self, orbit: usize) -> Self::Vertex;
    /// The edge of orbit `k` whose `half` end is `v`, if `v` lies in the matching orbit.
    fn edge_at(&self, v: &Self::Vertex, k: usize, half: Half) -> Option<Self::Edge>;
    /// The `half` end of edge `e` of orbit `k`.
    fn endpoint(&self, e: &Self::Edge, k: usize, half: Half) -> Self::Vertex;
}

/// A lift `Φ ⊂ Γ′` of a spanning tree `T ⊂ Γ′/G`.
#[derive(Clone, Debug)]
pub struct TreeLift<V, E> {
    pub root: usize,
    pub tree: Vec<TreeEdge>,
    /// Lift of each vertex orbit; these vertices form `S`.
    pub vertices: Vec<V>,
    /// Lift of each edge orbit (a midpoint of `Γ′`).
    pub edges: Vec<E>,
}

/// Lifts a spanning tree ball by ball: each tree edge leaving an already lifted node
/// is lifted to the adjacent edge of `Γ′` in the right half-edge orbit.
pub fn spanning_tree_lift<L: Lifting>(q: &QuotientGraph, root: usize, lifting: &L) -> Result<TreeLift<L::Vertex, L::Edge>> {
    let tree = q.spanning_tree(root)?;
    let mut vertices: Vec<Option<L::Vertex>> = vec![None; q.vertex_orbits];
    let mut edges: Vec<Option<L::Edge>> = vec![None; q.edge_orbits.len()];
    vertices[root] = Some(lifting.root(root));
    for t in &tree {
        if t.downward {
            let v = vertices[t.vertex].as_ref().expect("breadth-first order");
            let e = lifting.edge_at(v, t.edge, t.half).ok_or_else(|| {
                Error::Precondition(format!("edge orbit {} has no lift at vertex orbit {}", t.edge, t.vertex))
            })?;
            edges[t.edge] = Some(e);
        } else {
            let e = edges[t.edge].as_ref().expect("breadth-first order");
            vertices[t.vertex] = Some(lifting.endpoint(e, t.edge, t.half));
        }
    }
    Ok(TreeLift {
        root,
        tree,
        vertices: vertices.into_iter().map(|v| v.expect("spanning")).collect(),
        edges: edges.into_iter().map(|e| e.expect("spanning")).collect(),
    })
}

/// A finite graph with a group acting by vertex permutations.
#[derive(Clone, Debug)]
pub struct FiniteGGraph {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
    /// Every group element, as a vertex permutation.
    pub group: Vec<Vec<usize>>,
    edge_lookup: BTreeMap<(usize, usize), usize>,
    vertex_orbit: Vec<usize>,
    edge_orbit: Vec<usize>,
    /// Tail vertex of each edge under its orbit's orientation.
    edge_tail: Vec<usize>,
    quotient: QuotientGraph,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl FiniteGGraph {
    /// `group` must list all elements (closed under composition) and preserve the edge set.
    pub fn new(vertices: usize, edges: Vec<(usize, usize)>, group: Vec<Vec<usize>>) -> Result<Self> {
        let mut edge_lookup = BTreeMap::new();
        for (i, &(a, b)) in edges.iter().enumerate() {
            if a >= vertices || b >= vertices || a == b || edge_lookup.insert(key(a, b), i).is_some() {
                return Err(Error::InvalidSpace(format!("bad edge {a}-{b}")));
            }
        }
        for g in &group {
            let mut image = g.clone();
            image.sort_unstable();
            if g.len() != vertices || image != (0..vertices).collect::<Vec<_>>() {
                return Err(Error::InvalidIsometry("not a vertex permutation".into()));
            }
            if edges.iter().any(|&(a, b)| !edge_lookup.contains_key(&key(g[a], g[b]))) {
                return Err(Error::InvalidIsometry("permutation does not preserve edges".into()));
            }
        }
        let mut vertex_orbit = vec![usize::MAX; vertices];
        let mut n = 0;
        for v in 0..vertices {
            if vertex_orbit[v] == usize::MAX {
                for g in &group {
                    vertex_orbit[g[v]] = n;
                }
                vertex_orbit[v] = n;
                n += 1;
            }
        }
        let mut edge_orbit = vec![usize::MAX; edges.len()];
        let mut edge_tail = vec![0; edges.len()];
        let mut orbits = Vec::new();
        for (i, &(t, h)) in edges.iter().enumerate() {
            if edge_orbit[i] != usize::MAX {
                continue;
            }
            let k = orbits.len();
            let mut invertible = false;
            edge_orbit[i] = k;
            edge_tail[i] = t;
            for g in &group {
                let j = edge_lookup[&key(g[t], g[h])];
                if j == i && g[t] == h {
                    invertible = true;
                }
                if edge_orbit[j] == usize::MAX {
                    edge_orbit[j] = k;
                    edge_tail[j] = g[t];
                }
            }
            orbits.push(EdgeOrbit {
                tail: vertex_orbit[t],
                head: vertex_orbit[h],
                invertible,
            });
        }
        Ok(FiniteGGraph {
            vertices,
            edges,
            group,
            edge_lookup,
            vertex_orbit,
            edge_orbit,
            edge_tail,
            quotient: QuotientGraph {
                vertex_orbits: n,
                edge_orbits: orbits,
            },
        })
    }

    /// The cycle on `n` vertices with the rotation group generated by `v ↦ v + step`.
    pub fn cycle(n: usize, step: usize) -> Result<Self> {
        let edges = (0..n).map(|v| (v, (v + 1) % n)).collect();
        let mut group = Vec::new();
        let mut shift = 0;
        loop {
            group.push((0..n).map(|v| (v + shift) % n).collect());
            shift = (shift + step) % n;
            if shift == 0 {
                break;
            }
        }
        Self::new(n, edges, group)
    }

    pub fn quotient(&self) -> &QuotientGraph {
        &self.quotient
    }

    pub fn vertex_orbit(&self, v: usize) -> usize {
        self.vertex_orbit[v]
    }

    pub fn edge_orbit(&self, e: usize) -> usize {
        self.edge_orbit[e]
    }

    /// Checks a lift: `Φ` is a tree of `Γ′` meeting every vertex and edge orbit once.
    pub fn check_lift(&self, lift: &TreeLift<usize, usize>) -> bool {
        let mut vo = vec![0; self.quotient.vertex_orbits];
        for &v in &lift.vertices {
            vo[self.vertex_orbit[v]] += 1;
        }
        let mut eo = vec![0; self.quotient.edge_orbits.len()];
        for &e in &lift.edges {
            eo[self.edge_orbit[e]] += 1;
        }
        if vo.iter().chain(&eo).any(|&c| c != 1) {
            return false;
        }
        // Nodes of Γ′: vertex v, or midpoint vertices + e. A tree on m nodes has m - 1
        // edges and no cycle.
        let total = self.vertices + self.edges.len();
        let mut parent: Vec<usize> = (0..total).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        for t in &lift.tree {
            let v = lift.vertices[t.vertex];
            let e = lift.edges[t.edge];
            let (a, b) = self.edges[e];
            if v != a && v != b {
                return false;
            }
            let (x, y) = (find(&mut parent, v), find(&mut parent, self.vertices + e));
            if x == y {
                return false;
            }
            parent[x] = y;
        }
        lift.tree.len() + 1 == lift.vertices.len() + lift.edges.len()
    }
}

impl Lifting for FiniteGGraph {
    type Vertex = usize;
    type Edge = usize;

    fn root(&self, orbit: usize) -> usize {
        (0..self.vertices).find(|&v| self.vertex_orbit[v] == orbit).expect("orbit exists")
    }

    fn edge_at(&self, v: &usize, k: usize, half: Half) -> Option<usize> {
        self.edges.iter().enumerate().find_map(|(i, &(a, b))| {
            if self.edge_orbit[i] != k || (a != *v && b != *v) {
                return None;
            }
            let tail = self.edge_tail[i];
            let ok = self.quotient.edge_orbits[k].invertible || (half == Half::Tail) == (tail == *v);
            ok.then_some(i)
        })
    }

    fn endpoint(&self, e: &usize, _k: usize, half: Half) -> usize {
        let (a, b) = self.edges[*e];
        let tail = self.edge_tail[*e];
        let head = if tail == a { b } else { a };
        match half {
            Half::Tail => tail,
            Half::Head => head,
        }
    }
}

impl FiniteGGraph {
    /// Index of the edge joining `a` and `b`.
    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_lookup.get(&key(a, b)).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_cycle_with_half_turn() {
        let g = FiniteGGraph::cycle(4, 2).unwrap();
        let q = g.quotient();
        assert_eq!(q.vertex_orbits, 2);
        assert_eq!(q.edge_orbits.len(), 2);
        // Γ′/G is a 4-cycle, so T is a path with three edges.
        assert_eq!(q.half_edges().len(), 4);
        let lift = spanning_tree_lift(q, 0, &g).unwrap();
        assert_eq!(lift.tree.len(), 3);
        assert!(g.check_lift(&lift));
        let mut s = lift.vertices.clone();
        s.sort_unstable();
        assert_eq!(s.len(), 2);
        assert_ne!(g.vertex_orbit(s[0]), g.vertex_orbit(s[1]));
    }

    #[test]
    fn inversions_are_detected() {
        // The half-turn of a 2-vertex path swaps the ends of its only edge.
        let g = FiniteGGraph::new(2, vec![(0, 1)], vec![vec![0, 1], vec![1, 0]]).unwrap();
        assert!(g.quotient().edge_orbits[0].invertible);
        let lift = spanning_tree_lift(g.quotient(), 0, &g).unwrap();
        assert!(g.check_lift(&lift));
    }

    #[test]
    fn trivial_group_lifts_a_spanning_tree() {
        let g = FiniteGGraph::new(4, vec![(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)], vec![vec![0, 1, 2, 3]]).unwrap();
        let lift = spanning_tree_lift(g.quotient(), 0, &g).unwrap();
        assert!(g.check_lift(&lift));
        assert_eq!(lift.vertices.len(), 4);
    }

    #[test]
    fn rejects_non_automorphisms() {
        assert!(FiniteGGraph::new(3, vec![(0, 1), (1, 2)], vec![vec![1, 2, 0]]).is_err());
    }

    #[test]
    fn lifts_cycles_of_many_sizes() {
        for n in 3..40 {
            for step in 1..n {
                if n % step == 0 {
                    let g = FiniteGGraph::cycle(n, step).unwrap();
                    let lift = spanning_tree_lift(g.quotient(), 0, &g).unwrap();
                    assert!(g.check_lift(&lift), "n={n} step={step}");
                }
            }
        }
    }
}
