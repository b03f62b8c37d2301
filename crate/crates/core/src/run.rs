//! Command execution over scenes: JSON reports, SVG figures and exit statuses.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::action::{ActionSystem, Guarantee};
use crate::domains::{
    build_fundamental_domain, dirichlet_membership, verify_fundamental_set, DirichletTile, DomainOptions, DomainReport,
    FundamentalSetReport, CLOSURE_DENSITY,
};
use crate::domains::tree::TreeEdge;
use crate::error::Result;
use crate::geometry::{Point, Region, SpaceModel, Window};
use crate::netting::{default_stream, maximal_net, perturb_net, Audit, NetOptions};
use crate::properness::{
    check_transporter_finiteness, find_dynamical_relation, wandering_radius, DynamicalWitness, GrowthVerdict,
    TransporterGrowth, WanderingRadius,
};
use crate::quotient::{quotient_distance, rho, verify_local_isometry, LocalIsometryReport, MarginValue, QuotientDistance};
use crate::scene::{self, Scene};
use crate::svg::{render, tile_color, Frame, DEFAULT_PIXELS};
use crate::voronoi::{
    verify_closure, verify_covering_radius, verify_starlike, CoveringReport, Net, NetFile, Tessellation, Verdict, BAND,
    CLOSURE_REACH,
};

/// Default depth of the dynamical relation search.
pub const WITNESS_DEPTH: usize = 20;
const TILES_AUDITED: usize = 20;
/// Euclidean radius beyond which disk pixels are not classified in figures.
const RIM: f64 = 0.98;
const UNRESOLVED: &str = "#dddddd";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 2,
            Status::Inconclusive => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    CheckProperness,
    QuotientDist,
    Voronoi,
    Dirichlet,
    FundamentalDomain,
}

impl Command {
    pub const ALL: [Command; 5] = [
        Command::CheckProperness,
        Command::QuotientDist,
        Command::Voronoi,
        Command::Dirichlet,
        Command::FundamentalDomain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::CheckProperness => "check-properness",
            Command::QuotientDist => "quotient-dist",
            Command::Voronoi => "voronoi",
            Command::Dirichlet => "dirichlet",
            Command::FundamentalDomain => "fundamental-domain",
        }
    }
}

/// The result of a command: a JSON report and an optional figure.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub status: Status,
    pub report: String,
    pub svg: Option<String>,
}

#[derive(Serialize)]
struct Header {
    command: &'static str,
    scene: String,
    seed: u64,
    model: &'static str,
    enumeration: Guarantee,
    version: &'static str,
}

#[derive(Serialize)]
struct Report<B: Serialize> {
    #[serde(flatten)]
    header: Header,
    #[serde(flatten)]
    body: B,
    caveats: Vec<String>,
    status: Status,
}

#[derive(Serialize)]
struct Failure {
    error: String,
}

/// Runs `command` on `scene`. Input errors are returned; any other error becomes a
/// failed or inconclusive report.
pub fn run(command: Command, scene: &Scene, svg: bool) -> Result<Outcome> {
    let action = scene.action()?;
    let space = action.space().clone();
    let window = scene.window(&space)?;
    let header = || Header {
        command: command.name(),
        scene: scene.name.clone(),
        seed: scene.seed,
        model: space.kind().name(),
        enumeration: action.guarantee(),
        version: env!("CARGO_PKG_VERSION"),
    };
    let ctx = Context {
        scene,
        action: &action,
        space: &space,
        window,
        svg,
    };
    let result = match command {
        Command::CheckProperness => ctx.check_properness().map(|o| o.finish(header())),
        Command::QuotientDist => ctx.quotient_dist().map(|o| o.finish(header())),
        Command::Voronoi => ctx.voronoi().map(|o| o.finish(header())),
        Command::Dirichlet => ctx.dirichlet().map(|o| o.finish(header())),
        Command::FundamentalDomain => ctx.fundamental_domain().map(|o| o.finish(header())),
    };
    match result {
        Ok(outcome) => Ok(outcome),
        Err(e) if e.is_input() => Err(e),
        Err(e) => {
            let status = if e.is_inconclusive() {
                Status::Inconclusive
            } else {
                Status::Fail
            };
            Ok(Partial {
                body: Failure { error: e.to_string() },
                caveats: Vec::new(),
                status,
                svg: None,
            }
            .finish(header()))
        }
    }
}

struct Partial<B: Serialize> {
    body: B,
    caveats: Vec<String>,
    status: Status,
    svg: Option<String>,
}

impl<B: Serialize> Partial<B> {
    fn finish(self, header: Header) -> Outcome {
        let report = Report {
            header,
            body: self.body,
            caveats: self.caveats,
            status: self.status,
        };
        let mut text = serde_json::to_string_pretty(&report).expect("reports serialize");
        text.push('\n');
        Outcome {
            status: self.status,
            report: text,
            svg: self.svg,
        }
    }
}

struct Context<'a> {
    scene: &'a Scene,
    action: &'a ActionSystem,
    space: &'a SpaceModel,
    window: Window,
    svg: bool,
}

fn heuristic_caveat(action: &ActionSystem) -> Option<String> {
    (!action.is_exact()).then(|| format!("group enumeration is heuristic (word depth {})", action.depth()))
}

#[derive(Serialize)]
struct PropernessBody {
    verdict: &'static str,
    transporter: TransporterGrowth,
    witness: Option<DynamicalWitness>,
    wandering: Option<WanderingRadius>,
}

#[derive(Serialize)]
struct PairRow {
    x: Point,
    y: Point,
    ambient: f64,
    quotient: QuotientDistance,
}

#[derive(Serialize)]
struct QuotientBody {
    rho: MarginValue,
    pairs: Vec<PairRow>,
    local_isometry: LocalIsometryReport,
}

#[derive(Serialize)]
struct NetBuild {
    phi: f64,
    stream: usize,
    coverage: f64,
    coverage_ratio: f64,
    audit: Audit,
}

#[derive(Serialize)]
struct TileAudit {
    tiles: Vec<usize>,
    trials: usize,
    violations: usize,
    witness: Option<Point>,
}

#[derive(Serialize)]
struct VoronoiBody {
    net: NetFile,
    build: Option<NetBuild>,
    starlike: TileAudit,
    covering: Option<CoveringReport>,
    closure: TileAudit,
}

#[derive(Serialize, Default)]
struct Counts {
    interior: usize,
    boundary_band: usize,
    outside: usize,
}

impl Counts {
    fn add(&mut self, v: Verdict) {
        match v {
            Verdict::Interior => self.interior += 1,
            Verdict::BoundaryBand => self.boundary_band += 1,
            Verdict::Outside => self.outside += 1,
        }
    }
}

#[derive(Serialize)]
struct EdgeProfile {
    edge: usize,
    #[serde(flatten)]
    counts: Counts,
}

#[derive(Serialize)]
struct ClosureSummary {
    closed_samples: usize,
    interior_nearby: usize,
    fraction: f64,
    pass: bool,
}

#[derive(Serialize)]
struct DirichletBody {
    center: Point,
    counts: Counts,
    edges: Option<Vec<EdgeProfile>>,
    fundamental_set: FundamentalSetReport,
    closure: ClosureSummary,
}

#[derive(Serialize)]
struct SelectedRow {
    label: usize,
    element: String,
    point: Point,
}

#[derive(Serialize)]
struct EdgeOrbitRow {
    tail: usize,
    head: usize,
    invertible: bool,
    /// Element carrying the head representative to the edge's head.
    element: String,
}

#[derive(Serialize)]
struct DomainBody {
    report: DomainReport,
    selected: Vec<SelectedRow>,
    quotient_incidence: Vec<EdgeOrbitRow>,
    tree: Vec<TreeEdge>,
}

impl Context<'_> {
    fn samples(&self, default: usize) -> usize {
        self.scene.params.samples.unwrap_or(default)
    }

    fn band(&self) -> f64 {
        self.scene.params.band_width.unwrap_or(BAND)
    }

    fn point(&self, raw: Option<crate::geometry::RawPoint>) -> Result<Point> {
        match raw {
            Some(r) => self.space.point(r),
            None => Ok(*self.action.base()),
        }
    }

    fn frame(&self) -> Option<Frame> {
        let pixels = self.scene.params.pixels.unwrap_or(DEFAULT_PIXELS);
        match self.space {
            SpaceModel::PoincareDisk => Some(Frame::disk(pixels)),
            SpaceModel::EuclideanPlane { .. } => {
                let [x, y] = self.window.center.coords()?;
                let r = self.window.radius;
                Some(Frame {
                    min: [x - r, y - r],
                    max: [x + r, y + r],
                    width: pixels,
                    height: pixels,
                })
            }
            SpaceModel::MetricGraph(_) => None,
        }
    }

    fn check_properness(&self) -> Result<Partial<PropernessBody>> {
        let windows = match &self.scene.params.windows {
            Some(list) => list
                .iter()
                .map(|w| scene::window(self.space, w))
                .collect::<Result<Vec<_>>>()?,
            None => [0.25, 0.5, 1.0]
                .iter()
                .map(|f| Window::new(self.window.center, f * self.window.radius))
                .collect::<Result<Vec<_>>>()?,
        };
        let transporter = check_transporter_finiteness(self.action, &windows)?;
        let (x, y) = match &self.scene.params.witness {
            Some(p) => (self.space.point(p.x)?, self.space.point(p.y)?),
            None => (*self.action.base(), *self.action.base()),
        };
        let depth = self.scene.params.depth.unwrap_or(WITNESS_DEPTH);
        let witness = find_dynamical_relation(self.action, &x, &y, depth)?;
        // Notes on the growth table stay with the table; only gaps in the evidence are caveats.
        let mut caveats: Vec<String> = heuristic_caveat(self.action).into_iter().collect();
        let wandering = match wandering_radius(self.action, self.action.base()) {
            Ok(w) => Some(w),
            Err(e) => {
                caveats.push(format!("wandering radius at the base point: {e}"));
                None
            }
        };
        let not_proper = witness.is_some() || transporter.verdict == GrowthVerdict::GrowthObserved;
        if witness.is_some() && !self.action.is_exact() {
            caveats.push("witness elements are distinct words; leaving every finite set is not certified".into());
        }
        if witness.is_none() && !self.action.is_exact() {
            caveats.push(format!("no witness found at depth {depth}; this does not prove properness"));
        }
        let status = if not_proper {
            Status::Fail
        } else if caveats.is_empty() && transporter.complete {
            Status::Pass
        } else {
            Status::Inconclusive
        };
        Ok(Partial {
            body: PropernessBody {
                verdict: if not_proper { "not-proper" } else { "no-obstruction-found" },
                transporter,
                witness,
                wandering,
            },
            caveats,
            status,
            svg: None,
        })
    }

    fn quotient_dist(&self) -> Result<Partial<QuotientBody>> {
        let base = *self.action.base();
        let margin = rho(self.action, &base)?;
        let pairs = match &self.scene.params.pairs {
            Some(list) => list
                .iter()
                .map(|p| Ok((self.space.point(p.x)?, self.space.point(p.y)?)))
                .collect::<Result<Vec<_>>>()?,
            None => vec![(base, self.window.center)],
        };
        let mut rows = Vec::new();
        let mut complete = margin.complete;
        for (x, y) in pairs {
            let q = quotient_distance(self.action, &x, &y)?;
            complete &= q.complete;
            rows.push(PairRow {
                x,
                y,
                ambient: self.space.dist(&x, &y),
                quotient: q,
            });
        }
        let local = verify_local_isometry(self.action, &base, self.samples(1000), self.scene.seed)?;
        complete &= local.complete;
        let mut caveats: Vec<String> = heuristic_caveat(self.action).into_iter().collect();
        if !complete && caveats.is_empty() {
            caveats.push("enumeration may be incomplete".into());
        }
        let status = match (local.pass, caveats.is_empty()) {
            (false, _) => Status::Fail,
            (true, true) => Status::Pass,
            (true, false) => Status::Inconclusive,
        };
        Ok(Partial {
            body: QuotientBody {
                rho: margin,
                pairs: rows,
                local_isometry: local,
            },
            caveats,
            status,
            svg: None,
        })
    }

    fn voronoi(&self) -> Result<Partial<VoronoiBody>> {
        let space = self.space;
        let seed = self.scene.seed;
        let region = Region::Ball(self.window);
        let (net, build) = match &self.scene.params.net {
            Some(points) => {
                let pts = points.iter().map(|p| space.point(*p)).collect::<Result<Vec<_>>>()?;
                (Net::new(space, pts)?, None)
            }
            None => {
                let phi = self.scene.params.phi.unwrap_or(self.window.radius / 4.0);
                let stream = self.scene.params.stream.unwrap_or_else(|| default_stream(space, &region));
                let built = maximal_net(space, &region, &|_| phi, stream, seed)?;
                let perturbed = perturb_net(space, &built, &region, seed)?;
                let info = NetBuild {
                    phi,
                    stream,
                    coverage: built.coverage,
                    coverage_ratio: built.coverage_ratio,
                    audit: perturbed.audit,
                };
                (perturbed.net, Some(info))
            }
        };
        let tess = Tessellation::new(space, &net).with_band(self.band());
        let mut order: Vec<usize> = (0..net.len()).collect();
        order.sort_by(|&a, &b| {
            let d = |i: usize| space.dist(&net.points()[i], &self.window.center);
            d(a).total_cmp(&d(b)).then(a.cmp(&b))
        });
        order.truncate(TILES_AUDITED);
        let samples = self.samples(2000);
        let per_tile = (samples / order.len().max(1)).max(1);
        let reach = build.as_ref().map_or(self.window.radius, |b| 2.2 * b.phi);
        let mut starlike = TileAudit {
            tiles: order.clone(),
            trials: 0,
            violations: 0,
            witness: None,
        };
        let mut closure = TileAudit {
            tiles: order.clone(),
            trials: 0,
            violations: 0,
            witness: None,
        };
        for (k, &x) in order.iter().enumerate() {
            let s = verify_starlike(&tess, x, reach, per_tile, seed.wrapping_add(k as u64));
            starlike.trials += s.trials;
            starlike.violations += s.violations;
            starlike.witness = starlike.witness.or(s.witness);
            let tile_region = Region::Ball(Window::new(net.points()[x], reach)?);
            let c = verify_closure(&tess, x, &tile_region, per_tile, seed.wrapping_add(k as u64));
            closure.trials += c.closed_samples;
            closure.violations += c.unexplained;
            closure.witness = closure.witness.or(c.witness);
        }
        let covering = build
            .as_ref()
            .map(|b| verify_covering_radius(&tess, &|_| b.phi, &region, samples, seed));
        let mut caveats = Vec::new();
        if let Some(b) = &build {
            if b.audit.flagged {
                caveats.push(format!(
                    "boundary band holds {:.2}% of samples",
                    100.0 * b.audit.boundary_fraction
                ));
            }
        }
        let pass = starlike.violations == 0 && closure.violations == 0 && covering.as_ref().is_none_or(|c| c.pass);
        let svg = self.svg.then(|| self.frame()).flatten().map(|frame| {
            render(space, &frame, |p, px| {
                let (owner, margin) = tess.owner(p);
                Some(if margin <= px.max(tess.band) {
                    "black".to_string()
                } else {
                    tile_color(owner)
                })
            })
        });
        Ok(Partial {
            body: VoronoiBody {
                net: net.to_file(space),
                build,
                starlike,
                covering,
                closure,
            },
            status: if !pass {
                Status::Fail
            } else if caveats.is_empty() {
                Status::Pass
            } else {
                Status::Inconclusive
            },
            caveats,
            svg,
        })
    }

    fn dirichlet(&self) -> Result<Partial<DirichletBody>> {
        let space = self.space;
        let action = self.action;
        let seed = self.scene.seed;
        let band = self.band();
        let center = self.point(self.scene.params.center)?;
        let classify = |y: &Point| -> Result<Verdict> {
            let m = dirichlet_membership(action, &center, y)?;
            Ok(Verdict::from_margin(m.margin, band))
        };
        let samples = self.samples(2000);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Region::Ball(self.window).sample(space, samples, &mut rng);
        let mut counts = Counts::default();
        let mut edges = None;
        if let Some(graph) = space.graph() {
            let mut rows = Vec::new();
            for (e, edge) in graph.edges().iter().enumerate() {
                let mut c = Counts::default();
                for k in 0..200 {
                    let p = Point::graph(e, (k as f64 + 0.5) / 200.0 * edge.length);
                    c.add(classify(&p)?);
                    points.push(p);
                }
                rows.push(EdgeProfile { edge: e, counts: c });
            }
            edges = Some(rows);
        }
        let (mut closed, mut nearby) = (0, 0);
        for y in &points {
            let v = classify(y)?;
            counts.add(v);
            if !v.in_closed() {
                continue;
            }
            closed += 1;
            if v == Verdict::Interior {
                nearby += 1;
                continue;
            }
            let along = [0.1, 0.5, 1.0].map(|s| space.towards(y, &center, s * CLOSURE_REACH));
            let around = space.sample_ball_with(y, CLOSURE_REACH, 24, &mut rng).points;
            let mut found = false;
            for p in along.iter().chain(&around) {
                if classify(p)? == Verdict::Interior {
                    found = true;
                    break;
                }
            }
            nearby += usize::from(found);
        }
        let fraction = if closed == 0 { 1.0 } else { nearby as f64 / closed as f64 };
        let closure = ClosureSummary {
            closed_samples: closed,
            interior_nearby: nearby,
            fraction,
            pass: fraction >= CLOSURE_DENSITY,
        };
        let tile = DirichletTile { action, center };
        let fundamental_set = verify_fundamental_set(action, &tile, &self.window, samples.min(1000), 1.0, seed)?;
        let mut caveats: Vec<String> = heuristic_caveat(action).into_iter().collect();
        if !fundamental_set.complete && caveats.is_empty() {
            caveats.push("enumeration may be incomplete".into());
        }
        let status = if !(fundamental_set.pass && closure.pass) {
            Status::Fail
        } else if caveats.is_empty() {
            Status::Pass
        } else {
            Status::Inconclusive
        };
        let svg = self.svg.then(|| self.frame()).flatten().and_then(|frame| {
            // One orbit enumeration, reaching twice the farthest resolved pixel, serves every
            // pixel. Disk pixels past RIM are hyperbolically huge and drawn as unresolved.
            let resolved = |p: &Point| !matches!(p, Point::Disk { u, v } if u.hypot(*v) > RIM);
            let extent = frame_points(space, &frame)
                .filter(resolved)
                .map(|p| space.dist(&center, &p))
                .fold(0.0, f64::max);
            let mut orbit = vec![center];
            for g in action.moving(&center, 2.0 * extent + 1e-6).0 {
                let q = g.act(&center);
                if !orbit.iter().any(|o| space.same_point(o, &q)) {
                    orbit.push(q);
                }
            }
            let orbit = Net::new(space, orbit).ok()?;
            Some(render(space, &frame, |p, px| {
                if !resolved(p) {
                    return Some(UNRESOLVED.into());
                }
                let d = space.dist(p, &center);
                let margin = match orbit.nearest_two(space, p) {
                    ((0, _), second) => second.map_or(f64::INFINITY, |(_, d2)| d2 - d),
                    ((_, d1), _) => d1 - d,
                };
                match Verdict::from_margin(margin, px.max(band)) {
                    Verdict::Interior => Some(tile_color(0)),
                    Verdict::BoundaryBand => Some("black".into()),
                    Verdict::Outside => None,
                }
            }))
        });
        Ok(Partial {
            body: DirichletBody {
                center,
                counts,
                edges,
                fundamental_set,
                closure,
            },
            caveats,
            status,
            svg,
        })
    }

    fn fundamental_domain(&self) -> Result<Partial<DomainBody>> {
        let options = DomainOptions {
            net: NetOptions {
                stream: self.scene.params.stream,
                phi_cap: self.scene.params.phi_cap,
                ..NetOptions::default()
            },
            samples: self.samples(10_000),
            probes: self.scene.params.probes.unwrap_or(crate::domains::incidence::DEFAULT_PROBES),
            ..DomainOptions::default()
        };
        let domain = build_fundamental_domain(self.action, &self.window, &options, self.scene.seed)?;
        let report = domain.report.clone();
        let status = if !report.pass {
            Status::Fail
        } else if report.caveats.is_empty() {
            Status::Pass
        } else {
            Status::Inconclusive
        };
        let band = self.band();
        let svg = self.svg.then(|| self.frame()).flatten().map(|frame| {
            render(self.space, &frame, |p, px| match domain.membership_with_band(p, px.max(band)) {
                (Verdict::Interior, Some(k)) => Some(tile_color(domain.selected[k].label)),
                (Verdict::BoundaryBand, _) => Some("black".into()),
                _ => None,
            })
        });
        let selected = domain
            .selected
            .iter()
            .map(|s| SelectedRow {
                label: s.label,
                element: s.element.word_string(),
                point: s.point,
            })
            .collect();
        let quotient_incidence = domain
            .incidence
            .quotient
            .edge_orbits
            .iter()
            .zip(&domain.incidence.edge_ends)
            .map(|(o, &e)| EdgeOrbitRow {
                tail: o.tail,
                head: o.head,
                invertible: o.invertible,
                element: domain.net.transports[e].word_string(),
            })
            .collect();
        Ok(Partial {
            caveats: report.caveats.clone(),
            body: DomainBody {
                report,
                selected,
                quotient_incidence,
                tree: domain.tree.tree.clone(),
            },
            status,
            svg,
        })
    }
}

/// Pixel centers of `frame` that lie in the space.
fn frame_points<'a>(space: &'a SpaceModel, frame: &'a Frame) -> impl Iterator<Item = Point> + 'a {
    let sx = (frame.max[0] - frame.min[0]) / frame.width as f64;
    let sy = (frame.max[1] - frame.min[1]) / frame.height as f64;
    (0..frame.height).flat_map(move |row| {
        (0..frame.width).filter_map(move |col| {
            let (x, y) = (frame.min[0] + (col as f64 + 0.5) * sx, frame.min[1] + (row as f64 + 0.5) * sy);
            let p = match space {
                SpaceModel::PoincareDisk if x.hypot(y) >= 1.0 - 1e-9 => return None,
                SpaceModel::PoincareDisk => Point::disk(x, y),
                _ => Point::plane(x, y),
            };
            space.validate(&p).is_ok().then_some(p)
        })
    })
}

/// Parses a scene file's text and runs `command` on it.
pub fn run_text(command: Command, text: &str, overrides: &scene::Overrides, svg: bool) -> Result<Outcome> {
    let mut scene = Scene::parse(text)?;
    scene.apply(overrides);
    run(command, &scene, svg)
}
