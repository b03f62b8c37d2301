//! Finite metric graphs with points addressed as `(edge, offset)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::TOL;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
}

/// A piece of a graph geodesic: travel along `edge` from offset `from` to offset `to`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Piece {
    pub edge: usize,
    pub from: f64,
    pub to: f64,
}

impl Piece {
    pub fn length(&self) -> f64 {
        (self.to - self.from).abs()
    }
}

#[derive(Clone, Debug)]
pub struct MetricGraph {
    vertex_count: usize,
    edges: Vec<Edge>,
    incident: Vec<Vec<usize>>,
    // Row-major all-pairs vertex distances.
    dist: Vec<f64>,
}

impl MetricGraph {
    pub fn new(vertex_count: usize, edges: Vec<Edge>) -> Result<Self> {
        if vertex_count == 0 {
            return Err(Error::InvalidSpace("graph has no vertices".into()));
        }
        let mut incident = vec![Vec::new(); vertex_count];
        for (i, e) in edges.iter().enumerate() {
            if e.a >= vertex_count || e.b >= vertex_count {
                return Err(Error::InvalidSpace(format!("edge {i} references a missing vertex")));
            }
            if e.a == e.b {
                return Err(Error::InvalidSpace(format!("edge {i} is a loop")));
            }
            if !(e.length.is_finite() && e.length > 0.0) {
                return Err(Error::InvalidSpace(format!("edge {i} has non-positive length")));
            }
            incident[e.a].push(i);
            incident[e.b].push(i);
        }
        let n = vertex_count;
        let mut dist = vec![f64::INFINITY; n * n];
        for v in 0..n {
            dist[v * n + v] = 0.0;
        }
        for e in &edges {
            let (a, b) = (e.a, e.b);
            if e.length < dist[a * n + b] {
                dist[a * n + b] = e.length;
                dist[b * n + a] = e.length;
            }
        }
        for k in 0..n {
            for i in 0..n {
                let dik = dist[i * n + k];
                if !dik.is_finite() {
                    continue;
                }
                for j in 0..n {
                    let cand = dik + dist[k * n + j];
                    if cand < dist[i * n + j] {
                        dist[i * n + j] = cand;
                    }
                }
            }
        }
        if dist.iter().any(|d| !d.is_finite()) {
            return Err(Error::InvalidSpace("graph is not connected".into()));
        }
        Ok(Self {
            vertex_count,
            edges,
            incident,
            dist,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> &Edge {
        &self.edges[i]
    }

    pub fn incident(&self, v: usize) -> &[usize] {
        &self.incident[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.incident[v].len()
    }

    pub fn vertex_distance(&self, u: usize, v: usize) -> f64 {
        self.dist[u * self.vertex_count + v]
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    pub fn check_point(&self, edge: usize, offset: f64) -> Result<()> {
        let e = self
            .edges
            .get(edge)
            .ok_or_else(|| Error::InvalidPoint(format!("edge {edge} does not exist")))?;
        if !(offset.is_finite() && (-TOL..=e.length + TOL).contains(&offset)) {
            return Err(Error::InvalidPoint(format!(
                "offset {offset} outside [0, {}] on edge {edge}",
                e.length
            )));
        }
        Ok(())
    }

    /// The vertex a point sits on, if any.
    pub fn vertex_at(&self, edge: usize, offset: f64) -> Option<usize> {
        let e = &self.edges[edge];
        if offset <= TOL {
            Some(e.a)
        } else if offset >= e.length - TOL {
            Some(e.b)
        } else {
            None
        }
    }

    /// The lowest-id `(edge, offset)` representation of vertex `v`.
    pub fn vertex_point(&self, v: usize) -> (usize, f64) {
        let &e = self.incident[v]
            .iter()
            .min()
            .expect("connected graph with more than one vertex");
        let edge = &self.edges[e];
        if edge.a == v {
            (e, 0.0)
        } else {
            (e, edge.length)
        }
    }

    fn endpoints(&self, edge: usize, offset: f64) -> [(usize, f64); 2] {
        let e = &self.edges[edge];
        [(e.a, offset), (e.b, e.length - offset)]
    }

    pub fn distance(&self, p: (usize, f64), q: (usize, f64)) -> f64 {
        let mut best = f64::INFINITY;
        if p.0 == q.0 {
            best = (p.1 - q.1).abs();
        }
        for (u, du) in self.endpoints(p.0, p.1) {
            for (v, dv) in self.endpoints(q.0, q.1) {
                let cand = du + self.vertex_distance(u, v) + dv;
                if cand < best {
                    best = cand;
                }
            }
        }
        best
    }

    /// Canonical shortest path between two points, lowest edge id first on ties.
    pub fn shortest_path(&self, p: (usize, f64), q: (usize, f64)) -> Vec<Piece> {
        let mut best = f64::INFINITY;
        let mut choice = None;
        if p.0 == q.0 {
            best = (p.1 - q.1).abs();
        }
        for (i, (u, du)) in self.endpoints(p.0, p.1).into_iter().enumerate() {
            for (j, (v, dv)) in self.endpoints(q.0, q.1).into_iter().enumerate() {
                let cand = du + self.vertex_distance(u, v) + dv;
                if cand < best {
                    best = cand;
                    choice = Some((i, u, j, v));
                }
            }
        }
        let mut pieces = Vec::new();
        let Some((i, u, j, v)) = choice else {
            pieces.push(Piece {
                edge: p.0,
                from: p.1,
                to: q.1,
            });
            return pieces;
        };
        let e1 = &self.edges[p.0];
        pieces.push(Piece {
            edge: p.0,
            from: p.1,
            to: if i == 0 { 0.0 } else { e1.length },
        });
        let mut at = u;
        while at != v {
            let remaining = self.vertex_distance(at, v);
            let next = self.incident[at]
                .iter()
                .copied()
                .filter(|&e| {
                    let edge = &self.edges[e];
                    let other = if edge.a == at { edge.b } else { edge.a };
                    (edge.length + self.vertex_distance(other, v) - remaining).abs() <= TOL
                })
                .min()
                .expect("shortest-path successor exists");
            let edge = &self.edges[next];
            let (from, to, other) = if edge.a == at {
                (0.0, edge.length, edge.b)
            } else {
                (edge.length, 0.0, edge.a)
            };
            pieces.push(Piece { edge: next, from, to });
            at = other;
        }
        let e2 = &self.edges[q.0];
        pieces.push(Piece {
            edge: q.0,
            from: if j == 0 { 0.0 } else { e2.length },
            to: q.1,
        });
        pieces.retain(|piece| piece.length() > 0.0);
        pieces
    }

    /// Sub-intervals of `edge` lying in the closed ball `B(center, radius)`.
    pub fn ball_intervals(&self, center: (usize, f64), radius: f64, edge: usize) -> Vec<(f64, f64)> {
        let e = &self.edges[edge];
        let [(ca, da), (cb, db)] = self.endpoints(center.0, center.1);
        let to_a = (da + self.vertex_distance(ca, e.a)).min(db + self.vertex_distance(cb, e.a));
        let to_b = (da + self.vertex_distance(ca, e.b)).min(db + self.vertex_distance(cb, e.b));
        let mut raw = Vec::with_capacity(3);
        if radius >= to_a {
            raw.push((0.0, (radius - to_a).min(e.length)));
        }
        if radius >= to_b {
            raw.push(((e.length - (radius - to_b)).max(0.0), e.length));
        }
        if center.0 == edge {
            raw.push(((center.1 - radius).max(0.0), (center.1 + radius).min(e.length)));
        }
        raw.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (lo, hi) in raw {
            match merged.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        merged
    }

    /// Whether the ball reaches a leaf with radius to spare, i.e. the graph truncates it.
    pub fn ball_clipped(&self, center: (usize, f64), radius: f64) -> bool {
        (0..self.vertex_count).any(|v| {
            self.degree(v) == 1 && {
                let (e, o) = self.vertex_point(v);
                self.distance(center, (e, o)) < radius - TOL
            }
        })
    }
}
