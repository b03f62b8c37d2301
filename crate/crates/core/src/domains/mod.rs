//! Dirichlet domains, fundamental-set verification, and the fundamental region and
//! domain assembled from a G-invariant net and a lifted spanning tree.

pub mod incidence;
pub mod tree;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::action::{ActionSystem, GroupElement};
use crate::error::Result;
use crate::geometry::{Point, Region, SpaceModel, Window};
use crate::index::SpatialIndex;
use crate::netting::{invariant_net, InvariantNet, NetOptions};
use crate::voronoi::{interior_nearby, tiles_meeting, Tessellation, Verdict, BAND};

pub use incidence::{incidence_graph, net_incidence, tiles_adjacent, Incidence, IncidenceGraph, NetLifting};
pub use tree::{spanning_tree_lift, FiniteGGraph, Half, QuotientGraph, TreeLift};

/// Required fraction of closed-domain samples with an interior point nearby.
pub const CLOSURE_DENSITY: f64 = 0.99;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DirichletMembership {
    pub verdict: Verdict,
    /// `min_g d(y, g·x) − d(y, x)` over competitors `g·x ≠ x`.
    pub margin: f64,
    pub complete: bool,
}

/// Membership of `y` in the Dirichlet tile of `x`, the Voronoi tile of the orbit `G·x`.
pub fn dirichlet_membership(action: &ActionSystem, x: &Point, y: &Point) -> Result<DirichletMembership> {
    let space = action.space();
    space.validate(x)?;
    space.validate(y)?;
    let dxy = space.dist(x, y);
    // Only g with d(x, g·x) <= 2 d(x, y) can be closer to y than x is.
    let (elements, complete) = action.moving(x, 2.0 * dxy + 1e-6);
    let margin = elements
        .iter()
        .map(|g| g.act(x))
        .filter(|p| !space.same_point(p, x))
        .map(|p| space.dist(y, &p) - dxy)
        .fold(f64::INFINITY, f64::min);
    Ok(DirichletMembership {
        verdict: Verdict::from_margin(margin, BAND),
        margin,
        complete,
    })
}

/// A closed set given by a membership oracle.
pub trait ClosedSet {
    fn contains(&self, y: &Point) -> bool;
    /// A reference point `a` of the set.
    fn anchor(&self) -> Point;
    /// A radius `r` such that `g⁻¹y` in the set implies `d(g·a, a) <= r`.
    fn reach(&self, y: &Point) -> f64;
    /// The elements `g` among `elements` with `g⁻¹y` in the set.
    fn translates_containing(&self, y: &Point, elements: Vec<GroupElement>) -> Vec<GroupElement> {
        elements.into_iter().filter(|g| self.contains(&g.inverse().act(y))).collect()
    }
}

/// The closed Dirichlet tile `D̂_x`.
pub struct DirichletTile<'a> {
    pub action: &'a ActionSystem,
    pub center: Point,
}

impl ClosedSet for DirichletTile<'_> {
    fn contains(&self, y: &Point) -> bool {
        dirichlet_membership(self.action, &self.center, y).is_ok_and(|m| m.verdict.in_closed())
    }

    fn anchor(&self) -> Point {
        self.center
    }

    fn reach(&self, y: &Point) -> f64 {
        // g⁻¹y ∈ D̂_x means d(y, g·x) <= d(y, x).
        2.0 * self.action.space().dist(y, &self.center) + 1e-6
    }

    fn translates_containing(&self, y: &Point, elements: Vec<GroupElement>) -> Vec<GroupElement> {
        // g⁻¹y ∈ D̂_x forces g·x to be a nearest orbit point to y, so only near-minimal
        // translates need the full test.
        let space = self.action.space();
        let d: Vec<f64> = elements.iter().map(|g| space.dist(y, &g.act(&self.center))).collect();
        let best = d.iter().copied().fold(f64::INFINITY, f64::min);
        elements
            .into_iter()
            .zip(d)
            .filter(|(g, dg)| *dg <= best + 4.0 * BAND && self.contains(&g.inverse().act(y)))
            .map(|(g, _)| g)
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FundamentalSetReport {
    pub samples: usize,
    pub covered: usize,
    pub coverage: f64,
    pub missed: Option<Point>,
    /// Largest number of translates `g·F` meeting one probe ball.
    pub max_translates: usize,
    pub translate_counts: Vec<usize>,
    pub complete: bool,
    pub pass: bool,
}

/// Checks that translates of `set` cover sampled window points and that probe balls
/// meet finitely many translates.
pub fn verify_fundamental_set(
    action: &ActionSystem,
    set: &dyn ClosedSet,
    window: &Window,
    samples: usize,
    probe_radius: f64,
    seed: u64,
) -> Result<FundamentalSetReport> {
    let space = action.space();
    let anchor = set.anchor();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = Region::Ball(*window).sample(space, samples, &mut rng);
    let mut complete = action.is_exact();
    let translates = |y: &Point| -> (Vec<GroupElement>, bool) {
        let r = set.reach(y);
        if !r.is_finite() && !action.is_finite() {
            return (Vec::new(), false);
        }
        let (gs, c) = action.moving(&anchor, r);
        (set.translates_containing(y, gs), c)
    };
    let mut covered = 0;
    let mut missed = None;
    for y in &points {
        let (found, c) = translates(y);
        complete &= c;
        if found.is_empty() {
            missed.get_or_insert(*y);
        } else {
            covered += 1;
        }
    }
    let mut counts = Vec::new();
    for center in points.iter().take(8) {
        let ball = space.sample_ball_with(center, probe_radius, 200, &mut rng).points;
        let mut images: Vec<Point> = Vec::new();
        for y in &ball {
            for g in translates(y).0 {
                let p = g.act(&anchor);
                if !images.iter().any(|q| space.same_point(q, &p)) {
                    images.push(p);
                }
            }
        }
        counts.push(images.len());
    }
    let n = points.len();
    Ok(FundamentalSetReport {
        samples: n,
        covered,
        coverage: covered as f64 / n.max(1) as f64,
        missed,
        max_translates: counts.iter().copied().max().unwrap_or(0),
        translate_counts: counts,
        complete,
        pass: covered == n,
    })
}

#[derive(Clone, Debug)]
pub struct DomainOptions {
    pub net: NetOptions,
    /// Window samples used by the audits.
    pub samples: usize,
    pub probes: usize,
    pub probe_radius: f64,
}

impl Default for DomainOptions {
    fn default() -> Self {
        DomainOptions {
            net: NetOptions::default(),
            samples: 10_000,
            probes: incidence::DEFAULT_PROBES,
            probe_radius: 1.0,
        }
    }
}

/// An element `s = g·rep` of the strict fundamental set `S`.
#[derive(Clone, Debug)]
pub struct Selected {
    pub label: usize,
    pub element: GroupElement,
    pub point: Point,
}

#[derive(Clone, Debug, Serialize)]
pub struct DomainReport {
    pub samples: usize,
    pub orbits: usize,
    pub net_points: usize,
    pub incidence_vertices: usize,
    pub incidence_edges: usize,
    /// Every orbit of net points meets `S` exactly once.
    pub strict: bool,
    /// The subgraph of the incidence graph induced on `S` is connected.
    pub connected: bool,
    /// Samples `y` with `y` and `g⁻¹y` both in `R` for some `g ≠ 1`.
    pub disjointness_violations: usize,
    /// Samples in two closed tiles whose centers share an orbit.
    pub orbit_collisions: usize,
    /// Fraction of samples with a certified `g` such that `g⁻¹y ∈ F`.
    pub coverage: f64,
    pub coverage_misses: usize,
    /// Samples in `R` but not in `F`.
    pub region_outside_domain: usize,
    /// Fraction of sampled points of `F` with an interior point of `R` nearby.
    pub closure_density: f64,
    /// Translates of `F` meeting each probe ball.
    pub translate_counts: Vec<usize>,
    pub boundary_fraction: f64,
    pub complete: bool,
    pub caveats: Vec<String>,
    pub pass: bool,
}

/// The open fundamental region `R = ⋃ V_s` and closed domain `F = ⋃ V̂_s`, `s ∈ S`.
#[derive(Clone, Debug)]
pub struct FundamentalDomain {
    pub space: SpaceModel,
    pub net: InvariantNet,
    pub incidence: Incidence,
    pub tree: TreeLift<(usize, GroupElement), GroupElement>,
    pub selected: Vec<Selected>,
    s_index: SpatialIndex,
    reach: f64,
    pub report: DomainReport,
}

impl FundamentalDomain {
    /// `S` elements whose closed tiles may hold `y`: tiles have radius at most 2.2φ.
    fn candidates(&self, y: &Point) -> Vec<usize> {
        let mut out = self.s_index.within(&self.space, y, self.reach);
        out.retain(|&k| {
            let s = &self.selected[k];
            self.space.dist(y, &s.point) <= 2.2 * self.net.phi[s.label] + 1e-6
        });
        out
    }

    /// Membership of `y` in the tile of `S` element `k`, evaluated at the representative.
    pub fn tile_membership(&self, k: usize, y: &Point, band: f64) -> Verdict {
        let s = &self.selected[k];
        let z = s.element.inverse().act(y);
        Tessellation::new(&self.space, &self.net.net)
            .with_band(band)
            .membership(self.net.reps[s.label], &z)
            .verdict
    }

    /// The `S` element whose tile holds `y`, with the best verdict.
    pub fn membership(&self, y: &Point) -> (Verdict, Option<usize>) {
        self.membership_with_band(y, BAND)
    }

    pub fn membership_with_band(&self, y: &Point, band: f64) -> (Verdict, Option<usize>) {
        let mut best = (Verdict::Outside, None);
        for k in self.candidates(y) {
            match self.tile_membership(k, y, band) {
                Verdict::Interior => return (Verdict::Interior, Some(k)),
                Verdict::BoundaryBand => best = (Verdict::BoundaryBand, Some(k)),
                Verdict::Outside => {}
            }
        }
        best
    }

    pub fn region_contains(&self, y: &Point) -> bool {
        self.membership(y).0 == Verdict::Interior
    }

    pub fn domain_contains(&self, y: &Point) -> bool {
        self.membership(y).0.in_closed()
    }

    fn selected_for(&self, label: usize) -> &Selected {
        // `S` is indexed by orbit label.
        &self.selected[label]
    }
}

impl ClosedSet for FundamentalDomain {
    fn contains(&self, y: &Point) -> bool {
        self.domain_contains(y)
    }

    fn anchor(&self) -> Point {
        self.net.window.center
    }

    fn reach(&self, y: &Point) -> f64 {
        let c = self.net.window.center;
        let r = self
            .selected
            .iter()
            .map(|s| self.space.dist(&c, &s.point))
            .fold(0.0, f64::max);
        self.space.dist(y, &c) + r + self.reach
    }
}

/// Builds `S` by lifting a spanning tree of the subdivided quotient incidence graph,
/// then audits `R` and `F` on window samples.
pub fn build_fundamental_domain(
    action: &ActionSystem,
    window: &Window,
    options: &DomainOptions,
    seed: u64,
) -> Result<FundamentalDomain> {
    let space = action.space().clone();
    let inv = invariant_net(action, window, &options.net, seed)?;
    let phi_max = inv.phi_max();
    let core = window.radius + 2.2 * phi_max;
    let incidence = incidence_graph(action, &inv, core, options.probes, seed)?;
    let root = (0..inv.reps.len())
        .min_by(|&a, &b| {
            let d = |i: usize| space.dist(&inv.net.points()[inv.reps[i]], &window.center);
            d(a).total_cmp(&d(b))
        })
        .expect("nonempty net");
    let lifting = NetLifting {
        inv: &inv,
        incidence: &incidence,
        identity: action.identity(),
    };
    let tree = spanning_tree_lift(&incidence.quotient, root, &lifting)?;
    let selected: Vec<Selected> = tree
        .vertices
        .iter()
        .map(|(label, g)| Selected {
            label: *label,
            element: g.clone(),
            point: g.act(&inv.net.points()[inv.reps[*label]]),
        })
        .collect();
    let points: Vec<Point> = selected.iter().map(|s| s.point).collect();
    let s_index = SpatialIndex::with_points(&space, (phi_max * 2.0).max(1e-3), &points);
    let mut domain = FundamentalDomain {
        space,
        net: inv,
        incidence,
        tree,
        selected,
        s_index,
        reach: 2.2 * phi_max + 1e-6,
        report: DomainReport {
            samples: 0,
            orbits: 0,
            net_points: 0,
            incidence_vertices: 0,
            incidence_edges: 0,
            strict: false,
            connected: false,
            disjointness_violations: 0,
            orbit_collisions: 0,
            coverage: 0.0,
            coverage_misses: 0,
            region_outside_domain: 0,
            closure_density: 0.0,
            translate_counts: Vec::new(),
            boundary_fraction: 0.0,
            complete: false,
            caveats: Vec::new(),
            pass: false,
        },
    };
    domain.report = audit(action, &domain, options, seed)?;
    Ok(domain)
}

fn audit(action: &ActionSystem, d: &FundamentalDomain, options: &DomainOptions, seed: u64) -> Result<DomainReport> {
    let space = &d.space;
    let inv = &d.net;
    let tess = Tessellation::new(space, &inv.net);
    let n = inv.reps.len();

    let mut per_label = vec![0usize; n];
    for s in &d.selected {
        per_label[s.label] += 1;
    }
    let strict = per_label.iter().all(|&c| c == 1) && d.selected.iter().enumerate().all(|(k, s)| s.label == k);

    // S-induced adjacency, decided at representatives.
    let mut s_edges = Vec::new();
    for (a, sa) in d.selected.iter().enumerate() {
        let back = sa.element.inverse();
        for (b, sb) in d.selected.iter().enumerate().skip(a + 1) {
            let p = back.act(&sb.point);
            if let Some(e) = inv.lookup(space, &p) {
                if d.incidence.neighbors[sa.label].binary_search(&e).is_ok() {
                    s_edges.push((a, b));
                }
            }
        }
    }
    let all: Vec<usize> = (0..d.selected.len()).collect();
    let connected = incidence::connected(&all, &s_edges);

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5151);
    let samples = Region::Ball(inv.window).sample(space, options.samples, &mut rng);
    let reach = d.reach;
    let mut disjoint = 0;
    let mut collisions = 0;
    let mut covered = 0;
    let mut outside = 0;
    let (mut in_f, mut dense) = (0usize, 0usize);
    for y in &samples {
        let owners = tess.closed_owners(y);
        let mut labels: Vec<usize> = owners.iter().map(|&e| inv.labels[e]).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            collisions += 1;
        }
        // Coverage certificate: y ∈ V̂_e with e = h·rep_j, so g = h·g_j⁻¹ sends s_j to e.
        let certified = owners.iter().any(|&e| {
            let s = d.selected_for(inv.labels[e]);
            let g = inv.transports[e].compose(&s.element.inverse());
            d.domain_contains(&g.inverse().act(y))
        });
        covered += usize::from(certified);

        let (verdict, owner) = d.membership(y);
        if verdict == Verdict::Interior {
            for e in inv.net.within(space, y, reach) {
                if space.dist(y, &inv.net.points()[e]) > 2.2 * inv.phi[inv.labels[e]] + 1e-6 {
                    continue;
                }
                let s = d.selected_for(inv.labels[e]);
                if space.same_point(&inv.net.points()[e], &s.point) {
                    continue;
                }
                let g = inv.transports[e].compose(&s.element.inverse());
                if d.region_contains(&g.inverse().act(y)) {
                    disjoint += 1;
                    break;
                }
            }
        }
        if verdict == Verdict::Interior && !d.domain_contains(y) {
            outside += 1;
        }
        if verdict.in_closed() {
            in_f += 1;
            let k = owner.expect("closed membership names a tile");
            let s = &d.selected[k];
            let z = s.element.inverse().act(y);
            if verdict == Verdict::Interior || interior_nearby(&tess, inv.reps[s.label], &z, &mut rng) {
                dense += 1;
            }
        }
    }

    let mut counts = Vec::new();
    for (i, center) in samples.iter().take(8).enumerate() {
        let tiles = tiles_meeting(&tess, center, options.probe_radius, 200, seed.wrapping_add(i as u64));
        let mut images: Vec<Point> = Vec::new();
        for e in tiles {
            let s = d.selected_for(inv.labels[e]);
            let g = inv.transports[e].compose(&s.element.inverse());
            let p = g.act(&inv.window.center);
            if !images.iter().any(|q| space.same_point(q, &p)) {
                images.push(p);
            }
        }
        counts.push(images.len());
    }

    let m = samples.len();
    let coverage = covered as f64 / m.max(1) as f64;
    let closure_density = if in_f == 0 { 1.0 } else { dense as f64 / in_f as f64 };
    let graph = matches!(space, SpaceModel::MetricGraph(_));
    let mut caveats = Vec::new();
    if !action.is_exact() {
        caveats.push(format!("group enumeration is heuristic (word depth {})", action.depth()));
    }
    if !inv.complete {
        caveats.push("orbit enumeration may be incomplete".into());
    }
    if inv.audit.flagged {
        caveats.push(format!(
            "boundary band holds {:.2}% of samples",
            100.0 * inv.audit.boundary_fraction
        ));
    }
    let pass = strict
        && connected
        && disjoint == 0
        && collisions == 0
        && covered == m
        && outside == 0
        && (graph || closure_density >= CLOSURE_DENSITY);
    Ok(DomainReport {
        samples: m,
        orbits: n,
        net_points: inv.net.len(),
        incidence_vertices: d.incidence.graph.vertices.len(),
        incidence_edges: d.incidence.graph.edges.len(),
        strict,
        connected,
        disjointness_violations: disjoint,
        orbit_collisions: collisions,
        coverage,
        coverage_misses: m - covered,
        region_outside_domain: outside,
        closure_density,
        translate_counts: counts,
        boundary_fraction: inv.audit.boundary_fraction,
        complete: inv.complete,
        caveats,
        pass,
    })
}
