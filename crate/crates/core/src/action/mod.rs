//! Group actions by isometries: group elements with generator words, and
//! orbit / transporter enumeration over metric balls.

mod enumerate;
pub mod isometry;

use std::sync::{Arc, Mutex};

use serde::Serialize;

use enumerate::WordSearch;
pub use enumerate::Lattice;
pub use isometry::{Affine, GraphMap, Isometry, Mobius};

use crate::error::{Error, Result};
use crate::geometry::{Point, SpaceModel, Window};
use crate::TOL;

/// A word in the generators. Letter `k > 0` is generator `k - 1`, `-k` its inverse.
/// The word `[a, b]` denotes `a ∘ b`.
pub type Word = Vec<i32>;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupElement {
    pub word: Word,
    #[serde(skip)]
    pub map: Isometry,
}

impl GroupElement {
    pub fn identity(space: &SpaceModel) -> Self {
        GroupElement {
            word: Vec::new(),
            map: Isometry::identity_for(space),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.word.is_empty()
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        let mut word = self.word.clone();
        word.extend_from_slice(&other.word);
        GroupElement {
            word: reduce(word),
            map: self.map.compose(&other.map),
        }
    }

    pub fn inverse(&self) -> GroupElement {
        GroupElement {
            word: invert_word(&self.word),
            map: self.map.inverse(),
        }
    }

    /// Unchecked application; see [`ActionSystem::apply`] for the checked form.
    pub fn act(&self, p: &Point) -> Point {
        self.map.apply(p)
    }

    pub fn word_string(&self) -> String {
        if self.word.is_empty() {
            return "1".into();
        }
        self.word
            .iter()
            .map(|&l| if l > 0 { format!("g{}", l) } else { format!("g{}^-1", -l) })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

pub fn invert_word(word: &[i32]) -> Word {
    word.iter().rev().map(|l| -l).collect()
}

/// Free reduction: cancel adjacent `s s⁻¹` pairs.
pub fn reduce(word: Word) -> Word {
    let mut out: Word = Vec::with_capacity(word.len());
    for l in word {
        if out.last() == Some(&-l) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Guarantee {
    /// Ball enumerations are provably complete.
    Exact,
    /// Words up to the given length are searched; results may miss elements.
    HeuristicDepth { depth: usize },
}

impl Guarantee {
    pub const DEFAULT_DEPTH: usize = 12;
}

#[derive(Debug)]
pub struct ActionSystem {
    space: SpaceModel,
    generators: Vec<Isometry>,
    inverses: Vec<Isometry>,
    base: Point,
    guarantee: Guarantee,
    lattice: Option<Lattice>,
    finite: Option<Arc<Vec<GroupElement>>>,
    isometric: bool,
    search: Mutex<Option<Arc<WordSearch>>>,
}

impl Clone for ActionSystem {
    fn clone(&self) -> Self {
        ActionSystem {
            space: self.space.clone(),
            generators: self.generators.clone(),
            inverses: self.inverses.clone(),
            base: self.base,
            guarantee: self.guarantee,
            lattice: self.lattice.clone(),
            finite: self.finite.clone(),
            isometric: self.isometric,
            search: Mutex::new(self.search.lock().expect("search cache").clone()),
        }
    }
}

/// Orbit points `g·x` within a ball, with the element producing each.
#[derive(Clone, Debug, Serialize)]
pub struct OrbitBall {
    pub entries: Vec<(GroupElement, Point)>,
    pub complete: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Transporter {
    pub elements: Vec<GroupElement>,
    pub complete: bool,
}

impl ActionSystem {
    /// Builds an action with isometric generators.
    pub fn new(space: SpaceModel, generators: Vec<Isometry>, base: Point, guarantee: Guarantee) -> Result<Self> {
        Self::build(space, generators, base, guarantee, None, false)
    }

    /// Like [`ActionSystem::new`] but accepts non-isometric affine plane maps.
    /// Such actions only support heuristic enumeration.
    pub fn new_affine(space: SpaceModel, generators: Vec<Isometry>, base: Point, depth: usize) -> Result<Self> {
        Self::build(space, generators, base, Guarantee::HeuristicDepth { depth }, None, true)
    }

    /// A plane action with an explicit crystallographic structure, enabling exact enumeration.
    pub fn crystallographic(
        space: SpaceModel,
        generators: Vec<Isometry>,
        base: Point,
        basis: Vec<Word>,
        cosets: Vec<Word>,
    ) -> Result<Self> {
        let mut action = Self::build(space, generators, base, Guarantee::HeuristicDepth { depth: 0 }, None, false)?;
        let lattice = Lattice::new(&action, basis, cosets)?;
        action.lattice = Some(lattice);
        action.guarantee = Guarantee::Exact;
        Ok(action)
    }

    fn build(
        space: SpaceModel,
        generators: Vec<Isometry>,
        base: Point,
        guarantee: Guarantee,
        lattice: Option<Lattice>,
        allow_affine: bool,
    ) -> Result<Self> {
        space.validate(&base)?;
        isometry::check_all(&space, &generators, allow_affine, 0x5eed)?;
        let inverses = generators.iter().map(Isometry::inverse).collect();
        let isometric = generators.iter().all(Isometry::is_isometric);
        let mut action = ActionSystem {
            space,
            generators,
            inverses,
            base,
            guarantee,
            lattice,
            finite: None,
            isometric,
            search: Mutex::new(None),
        };
        if action.guarantee == Guarantee::Exact && action.lattice.is_none() {
            match &action.space {
                _ if action.generators.is_empty() => {}
                SpaceModel::MetricGraph(_) => {
                    action.finite = Some(Arc::new(enumerate::finite_closure(&action)?));
                }
                SpaceModel::EuclideanPlane { .. } => {
                    action.lattice = Some(Lattice::from_translations(&action)?);
                }
                SpaceModel::PoincareDisk => {
                    return Err(Error::Precondition(
                        "exact enumeration is only available for lattices, graph actions and the trivial group".into(),
                    ))
                }
            }
        }
        Ok(action)
    }

    pub fn space(&self) -> &SpaceModel {
        &self.space
    }

    pub fn generators(&self) -> &[Isometry] {
        &self.generators
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn guarantee(&self) -> Guarantee {
        self.guarantee
    }

    pub fn is_exact(&self) -> bool {
        self.guarantee == Guarantee::Exact
    }

    pub fn is_isometric(&self) -> bool {
        self.isometric
    }

    /// Whether the whole group is enumerated (finite graph actions and the trivial group).
    pub fn is_finite(&self) -> bool {
        self.generators.is_empty() || self.finite.is_some()
    }

    pub fn is_trivial(&self) -> bool {
        self.generators.is_empty()
    }

    pub(crate) fn letter(&self, l: i32) -> &Isometry {
        let i = l.unsigned_abs() as usize - 1;
        if l > 0 {
            &self.generators[i]
        } else {
            &self.inverses[i]
        }
    }

    /// Element for a word, checking the letters.
    pub fn element(&self, word: &[i32]) -> Result<GroupElement> {
        let mut map = Isometry::identity_for(&self.space);
        for &l in word {
            if l == 0 || l.unsigned_abs() as usize > self.generators.len() {
                return Err(Error::InvalidIsometry(format!("word letter {l} names no generator")));
            }
            map = map.compose(self.letter(l));
        }
        Ok(GroupElement {
            word: word.to_vec(),
            map,
        })
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement::identity(&self.space)
    }

    pub fn apply(&self, g: &GroupElement, p: &Point) -> Result<Point> {
        self.space.validate(p)?;
        if !g.map.fits(&self.space) {
            return Err(Error::ModelMismatch {
                expected: self.space.kind().name(),
            });
        }
        Ok(g.act(p))
    }

    /// Largest generator displacement at `x`.
    pub fn max_displacement(&self, x: &Point) -> f64 {
        self.generators
            .iter()
            .chain(&self.inverses)
            .map(|g| self.space.dist(&g.apply(x), x))
            .fold(0.0, f64::max)
    }

    /// Word length searched by heuristic enumeration.
    pub fn depth(&self) -> usize {
        match self.guarantee {
            Guarantee::Exact => 0,
            Guarantee::HeuristicDepth { depth } => depth,
        }
    }

    /// Enumerated elements `g` with `d(g x, x) <= r`, and whether the list is provably complete.
    pub fn moving(&self, x: &Point, r: f64) -> (Vec<GroupElement>, bool) {
        let within = |g: &GroupElement| self.space.dist(&g.act(x), x) <= r + TOL;
        if self.generators.is_empty() {
            return (vec![self.identity()], true);
        }
        if let Some(lattice) = &self.lattice {
            return (lattice.moving(x, r), true);
        }
        if let Some(all) = &self.finite {
            return (all.iter().filter(|g| within(g)).cloned().collect(), true);
        }
        let bound = r + 2.0 * self.space.dist(&self.base, x);
        let search = self.search_covering(bound);
        let elements = if self.isometric {
            let end = search.elements.partition_point(|(d, _)| *d <= bound + TOL);
            search.elements[..end].iter().map(|(_, g)| g).filter(|g| within(g)).cloned().collect()
        } else {
            search.elements.iter().map(|(_, g)| g).filter(|g| within(g)).cloned().collect()
        };
        (elements, false)
    }

    /// Every enumerated element (finite groups, or the heuristic word search).
    ///
    /// Panics for lattice groups, which are infinite.
    pub fn all_elements(&self) -> Vec<GroupElement> {
        if self.generators.is_empty() {
            return vec![self.identity()];
        }
        if let Some(all) = &self.finite {
            return all.as_ref().clone();
        }
        assert!(self.lattice.is_none(), "lattice groups are infinite");
        self.search_covering(f64::INFINITY)
            .elements
            .iter()
            .map(|(_, g)| g.clone())
            .collect()
    }

    /// Distinct elements given by freely reduced words of length at most `depth`.
    pub fn words_up_to(&self, depth: usize) -> Vec<GroupElement> {
        enumerate::word_search(self, &self.base, f64::INFINITY, depth, false)
            .elements
            .into_iter()
            .map(|(_, g)| g)
            .collect()
    }

    /// Whether the heuristic word search hit its element cap.
    pub fn search_truncated(&self) -> bool {
        self.search
            .lock()
            .expect("search cache")
            .as_ref()
            .is_some_and(|s| s.truncated)
    }

    fn search_covering(&self, bound: f64) -> Arc<WordSearch> {
        let mut cache = self.search.lock().expect("search cache");
        if let Some(s) = cache.as_ref() {
            if s.radius >= bound {
                return s.clone();
            }
        }
        let radius = if !self.isometric || !bound.is_finite() {
            f64::INFINITY
        } else {
            cache.as_ref().map_or(bound, |s| bound.max(2.0 * s.radius))
        };
        let search = Arc::new(enumerate::word_search(
            self,
            &self.base,
            radius,
            self.depth(),
            self.isometric && radius.is_finite(),
        ));
        *cache = Some(search.clone());
        search
    }

    pub fn orbit_in_ball(&self, x: &Point, radius: f64) -> Result<OrbitBall> {
        self.space.validate(x)?;
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::NonPositiveRadius(radius));
        }
        let (elements, complete) = self.moving(x, radius);
        let entries = elements
            .into_iter()
            .map(|g| {
                let p = g.act(x);
                (g, p)
            })
            .collect();
        Ok(OrbitBall { entries, complete })
    }

    /// Elements `g` whose image of window `a` meets window `b`.
    pub fn transporter(&self, a: &Window, b: &Window) -> Result<Transporter> {
        self.space.validate(&a.center)?;
        self.space.validate(&b.center)?;
        if !self.isometric {
            let elements = self
                .all_elements()
                .into_iter()
                .filter(|g| self.closest_approach(g, &a.center, a.radius, &b.center).1 <= b.radius + TOL)
                .collect();
            return Ok(Transporter {
                elements,
                complete: false,
            });
        }
        let reach = self.space.dist(&a.center, &b.center) + a.radius + b.radius + TOL;
        let (candidates, complete) = self.moving(&a.center, reach);
        let elements = candidates
            .into_iter()
            .filter(|g| self.space.dist(&g.act(&a.center), &b.center) <= a.radius + b.radius + TOL)
            .collect();
        Ok(Transporter { elements, complete })
    }

    pub fn stabilizer(&self, x: &Point, search_radius: f64) -> Result<Vec<GroupElement>> {
        self.space.validate(x)?;
        if !(search_radius.is_finite() && search_radius > 0.0) {
            return Err(Error::NonPositiveRadius(search_radius));
        }
        let (elements, _) = self.moving(x, search_radius);
        Ok(elements
            .into_iter()
            .filter(|g| self.space.dist(&g.act(x), x) <= TOL)
            .collect())
    }

    /// Minimise `d(g p, target)` over `p` in the closed ball `B(center, radius)`.
    /// Returns the minimiser and the minimum.
    pub fn closest_approach(&self, g: &GroupElement, center: &Point, radius: f64, target: &Point) -> (Point, f64) {
        match &g.map {
            Isometry::Affine(a) if !a.is_orthogonal() => affine_closest(a, center, radius, target),
            _ => {
                let pre = g.inverse().act(target);
                let d = self.space.dist(center, &pre);
                if d <= radius {
                    (pre, 0.0)
                } else {
                    let p = self.space.towards(center, &pre, radius);
                    let reach = self.space.dist(&g.act(&p), target);
                    (p, reach)
                }
            }
        }
    }

    /// A point of `window` fixed by some non-identity element of `elements`.
    pub fn fixed_point(&self, elements: &[GroupElement], window: &Window) -> Option<(GroupElement, Point)> {
        elements
            .iter()
            .filter(|g| !g.is_identity())
            .find_map(|g| g.map.fixed_point_in(&self.space, window).map(|p| (g.clone(), p)))
    }
}

/// Trust-region solve of `min |M u - b|` over `|u| <= r` for a 2x2 affine map.
fn affine_closest(a: &Affine, center: &Point, radius: f64, target: &Point) -> (Point, f64) {
    let c = center.coords().expect("plane point");
    let t = target.coords().expect("plane point");
    let gc = a.apply(c);
    let b = [t[0] - gc[0], t[1] - gc[1]];
    let m = a.matrix;
    let solve = |lambda: f64| -> [f64; 2] {
        // (MᵀM + λI) u = Mᵀ b
        let mtm = [
            [m[0][0] * m[0][0] + m[1][0] * m[1][0] + lambda, m[0][0] * m[0][1] + m[1][0] * m[1][1]],
            [m[0][1] * m[0][0] + m[1][1] * m[1][0], m[0][1] * m[0][1] + m[1][1] * m[1][1] + lambda],
        ];
        let rhs = [m[0][0] * b[0] + m[1][0] * b[1], m[0][1] * b[0] + m[1][1] * b[1]];
        let det = mtm[0][0] * mtm[1][1] - mtm[0][1] * mtm[1][0];
        [
            (rhs[0] * mtm[1][1] - rhs[1] * mtm[0][1]) / det,
            (rhs[1] * mtm[0][0] - rhs[0] * mtm[1][0]) / det,
        ]
    };
    let norm = |u: [f64; 2]| u[0].hypot(u[1]);
    let mut u = solve(0.0);
    if norm(u) > radius {
        let mut hi = 1.0;
        while norm(solve(hi)) > radius {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if norm(solve(mid)) > radius {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        u = solve(hi);
    }
    let p = Point::plane(c[0] + u[0], c[1] + u[1]);
    let mu = a.linear(u);
    (p, (mu[0] - b[0]).hypot(mu[1] - b[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
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

    fn cross_z2() -> ActionSystem {
        let edges = (1..=4).map(|v| Edge { a: 0, b: v, length: 10.0 }).collect();
        let space = SpaceModel::MetricGraph(MetricGraph::new(5, edges).unwrap());
        let flip = GraphMap::from_vertex_permutation(&space, vec![0, 3, 4, 1, 2]).unwrap();
        ActionSystem::new(space, vec![Isometry::Graph(flip)], Point::graph(0, 1.0), Guarantee::Exact).unwrap()
    }

    #[test]
    fn translation_applies() {
        let a = torus();
        let g = a.element(&[1]).unwrap();
        assert_eq!(a.apply(&g, &Point::plane(0.3, 0.4)).unwrap(), Point::plane(1.3, 0.4));
        let e = a.identity();
        assert_eq!(a.apply(&e, &Point::plane(0.3, 0.4)).unwrap(), Point::plane(0.3, 0.4));
    }

    #[test]
    fn antipode_swaps_rays() {
        let a = cross_z2();
        let g = a.element(&[1]).unwrap();
        let img = a.apply(&g, &Point::graph(0, 1.0)).unwrap();
        assert!(a.space().same_point(&img, &Point::graph(2, 1.0)));
    }

    #[test]
    fn inverse_word_undoes() {
        let a = torus();
        let g = a.element(&[1, 2, 2, -1, 1]).unwrap();
        let p = Point::plane(0.25, -0.5);
        let back = g.inverse().act(&g.act(&p));
        assert!(a.space().dist(&back, &p) < 1e-12);
    }

    #[test]
    fn lattice_ball_has_nine_elements() {
        let a = torus();
        let ball = a.orbit_in_ball(&Point::plane(0.0, 0.0), 1.5).unwrap();
        assert!(ball.complete);
        assert_eq!(ball.entries.len(), 9);
    }

    #[test]
    fn cross_orbit_ball() {
        let a = cross_z2();
        let ball = a.orbit_in_ball(&Point::graph(0, 1.0), 3.0).unwrap();
        assert!(ball.complete);
        let mut d: Vec<f64> = ball.entries.iter().map(|(_, p)| a.space().dist(p, &Point::graph(0, 1.0))).collect();
        d.sort_by(f64::total_cmp);
        assert_eq!(d, vec![0.0, 2.0]);
    }

    #[test]
    fn transporter_of_unit_square_disk() {
        let a = torus();
        // The disk circumscribing the unit square meets its 8 neighbours' translates.
        let w = Window::new(Point::plane(0.5, 0.5), std::f64::consts::FRAC_1_SQRT_2).unwrap();
        let t = a.transporter(&w, &w).unwrap();
        assert!(t.complete);
        assert_eq!(t.elements.len(), 9);
        // The inscribed disk only touches its 4 axis neighbours.
        let w = Window::new(Point::plane(0.5, 0.5), 0.5).unwrap();
        assert_eq!(a.transporter(&w, &w).unwrap().elements.len(), 5);
        let far = Window::new(Point::plane(10.25, 0.5), 0.1).unwrap();
        let small = Window::new(Point::plane(0.5, 0.5), 0.1).unwrap();
        assert!(a.transporter(&small, &far).unwrap().elements.is_empty());
    }

    #[test]
    fn stabilizers() {
        let a = cross_z2();
        assert_eq!(a.stabilizer(&Point::graph(0, 0.0), 1.0).unwrap().len(), 2);
        assert_eq!(a.stabilizer(&Point::graph(0, 1.0), 5.0).unwrap().len(), 1);
        let t = torus();
        assert_eq!(t.stabilizer(&Point::plane(0.1, 0.7), 3.0).unwrap().len(), 1);
    }

    #[test]
    fn nonpositive_radius_rejected() {
        assert!(matches!(
            torus().orbit_in_ball(&Point::plane(0.0, 0.0), 0.0),
            Err(Error::NonPositiveRadius(_))
        ));
    }

    #[test]
    fn fixed_point_of_antipode_is_origin() {
        let a = cross_z2();
        let g = a.element(&[1]).unwrap();
        let w = Window::new(Point::graph(0, 1.0), 3.0).unwrap();
        let (_, p) = a.fixed_point(&[g], &w).unwrap();
        assert!(a.space().same_point(&p, &Point::graph(0, 0.0)));
        let t = torus();
        let w = Window::new(Point::plane(0.0, 0.0), 5.0).unwrap();
        assert!(t.fixed_point(&[t.element(&[1, 2]).unwrap()], &w).is_none());
    }

    #[test]
    fn affine_closest_approach_matches_grid_search() {
        let space = SpaceModel::punctured_plane();
        let g = Isometry::Affine(Affine {
            matrix: [[2.0, 0.0], [0.0, 0.5]],
            translation: [0.0, 0.0],
        });
        let a = ActionSystem::new_affine(space, vec![g], Point::plane(1.0, 0.0), 4).unwrap();
        let h = a.element(&[-1, -1]).unwrap();
        let center = Point::plane(1.0, 0.0);
        let target = Point::plane(0.0, 1.0);
        let (p, d) = a.closest_approach(&h, &center, 0.25, &target);
        assert!(a.space().dist(&p, &center) <= 0.25 + 1e-12);
        let mut best = f64::INFINITY;
        for i in 0..=400 {
            for j in 0..=400 {
                let q = Point::plane(0.75 + 0.5 * i as f64 / 400.0, -0.25 + 0.5 * j as f64 / 400.0);
                if a.space().dist(&q, &center) <= 0.25 {
                    best = best.min(a.space().dist(&h.act(&q), &target));
                }
            }
        }
        assert!(d <= best + 1e-12 && best - d < 1e-2, "{d} vs {best}");
    }
}
