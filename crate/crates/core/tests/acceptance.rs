//! Acceptance suite: each criterion prints one line and the run fails if any does.

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::Instant;

use fundom::action::ActionSystem;
use fundom::domains::tree::{spanning_tree_lift, FiniteGGraph};
use fundom::domains::{build_fundamental_domain, dirichlet_membership, DomainOptions, FundamentalDomain};
use fundom::geometry::Region;
use fundom::netting::{default_stream, invariant_net, maximal_net, NetOptions};
use fundom::properness::{check_transporter_finiteness, find_dynamical_relation};
use fundom::quotient::{quotient_distance, rho, verify_local_isometry};
use fundom::run::{run, Command, Status};
use fundom::scene::Scene;
use fundom::voronoi::{verify_covering_radius, verify_starlike, Net, Tessellation, RAY_POINTS};
use fundom::{Point, SpaceModel, Window};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

fn fixture_text(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(format!("{name}.scene.json"));
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn scene(name: &str) -> Scene {
    Scene::parse(&fixture_text(name)).unwrap()
}

fn action(name: &str) -> ActionSystem {
    scene(name).action().unwrap()
}

fn window(name: &str) -> Window {
    let s = scene(name);
    s.window(&s.space().unwrap()).unwrap()
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Domains shared by the tree-lift and end-to-end criteria.
fn domain(name: &'static str) -> &'static (ActionSystem, FundamentalDomain) {
    static TORUS: OnceLock<(ActionSystem, FundamentalDomain)> = OnceLock::new();
    static KLEIN: OnceLock<(ActionSystem, FundamentalDomain)> = OnceLock::new();
    static SCHOTTKY: OnceLock<(ActionSystem, FundamentalDomain)> = OnceLock::new();
    let cell = match name {
        "torus" => &TORUS,
        "klein" => &KLEIN,
        "schottky" => &SCHOTTKY,
        _ => unreachable!(),
    };
    cell.get_or_init(|| {
        let a = action(name);
        let d = build_fundamental_domain(&a, &window(name), &DomainOptions::default(), scene(name).seed).unwrap();
        (a, d)
    })
}

fn dirichlet_baseline() -> Outcome {
    // The lattice acting on the plane, with the origin as Dirichlet center.
    let text = fixture_text("torus").replace("\"base\": [0.5, 0.5]", "\"base\": [0, 0]");
    let a = Scene::parse(&text).unwrap().action().unwrap();
    let origin = Point::plane(0.0, 0.0);
    let (mut checked, mut skipped, mut wrong) = (0, 0, 0);
    for i in 0..200 {
        for j in 0..200 {
            let (x, y) = (-1.0 + 2.0 * i as f64 / 199.0, -1.0 + 2.0 * j as f64 / 199.0);
            let square = x.abs().max(y.abs());
            if (square - 0.5).abs() <= 1e-6 {
                skipped += 1;
                continue;
            }
            // Oracle: no lattice point is strictly nearer than the origin.
            let own = x.hypot(y);
            let nearest = (-3..=3)
                .flat_map(|m| (-3..=3).map(move |n| (x - m as f64).hypot(y - n as f64)))
                .fold(f64::INFINITY, f64::min);
            let oracle = own <= nearest;
            assert_eq!(oracle, square <= 0.5, "oracle and square disagree at ({x}, {y})");
            let got = dirichlet_membership(&a, &origin, &Point::plane(x, y)).unwrap().verdict.in_closed();
            checked += 1;
            wrong += usize::from(got != oracle);
        }
    }
    ensure(wrong == 0, format!("{wrong} disagreements over {checked} grid points ({skipped} on the band)"))
}

fn quotient_metric_oracle() -> Outcome {
    let a = action("torus");
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (x, y) = (
            [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)],
            [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)],
        );
        let q = quotient_distance(&a, &Point::plane(x[0], x[1]), &Point::plane(y[0], y[1])).unwrap();
        // The 25 translates of y nearest to x.
        let (cx, cy) = ((x[0] - y[0]).round(), (x[1] - y[1]).round());
        let oracle = (-2..=2)
            .flat_map(|i| (-2..=2).map(move |j| (i as f64, j as f64)))
            .map(|(i, j)| (x[0] - y[0] - cx - i).hypot(x[1] - y[1] - cy - j))
            .fold(f64::INFINITY, f64::min);
        worst = worst.max((q.value - oracle).abs());
    }
    ensure(worst <= 1e-9, format!("max |d_G - oracle| = {worst:.2e} over 1000 pairs"))
}

fn margin_lipschitz() -> Outcome {
    let mut details = Vec::new();
    let mut violations = 0;
    for (name, pairs) in [("klein", 10_000), ("schottky", 10_000)] {
        let a = action(name);
        let space = a.space();
        let w = window(name);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let xs = Region::Ball(w).sample(space, pairs, &mut rng);
        let mut v = 0;
        for x in &xs {
            let y = space.sample_ball(x, 0.5, 1, rng.gen()).unwrap().points[0];
            let (rx, ry) = (rho(&a, x).unwrap().value, rho(&a, &y).unwrap().value);
            let d = quotient_distance(&a, x, &y).unwrap().value;
            v += usize::from((rx - ry).abs() > 2.0 * d + 1e-9);
        }
        violations += v;
        details.push(format!("{name}: {v}/{pairs}"));
    }
    ensure(violations == 0, format!("violations {}", details.join(", ")))
}

fn local_isometry() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for name in ["torus", "schottky"] {
        let a = action(name);
        let r = verify_local_isometry(&a, a.base(), 1000, 17).unwrap();
        ok &= r.max_deviation <= 1e-9 && r.trials == 1000;
        details.push(format!("{name}: max deviation {:.1e} at radius {:.4}", r.max_deviation, r.radius));
    }
    ensure(ok, details.join(", "))
}

fn covering_lemma() -> Outcome {
    let space = SpaceModel::plane();
    let square = Region::Rect { min: [0.0, 0.0], max: [1.0, 1.0] };
    let phi = 0.3;
    let built = maximal_net(&space, &square, &|_| phi, default_stream(&space, &square), 19).unwrap();
    let net = Net::new(&space, built.net.points().to_vec()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let radius = square
        .sample(&space, 10_000, &mut rng)
        .iter()
        .map(|p| net.nearest_two(&space, p).0 .1)
        .fold(0.0, f64::max);
    let tess = Tessellation::new(&space, &net);
    let report = verify_covering_radius(&tess, &|_| phi, &square, 10_000, 29);
    ensure(
        radius <= 0.315 && report.violations == 0 && report.pass && report.max_ratio <= 2.0,
        format!(
            "{} centers, coverage radius {radius:.4}, {} tile violations over {} samples, max d/φ {:.3}",
            net.len(),
            report.violations,
            report.samples,
            report.max_ratio
        ),
    )
}

fn injectivity() -> Outcome {
    let mut details = Vec::new();
    let mut total = 0;
    for name in ["torus", "schottky"] {
        let a = action(name);
        let w = window(name);
        let inv = invariant_net(&a, &w, &NetOptions::default(), 31).unwrap();
        let space = a.space();
        let tess = Tessellation::new(space, &inv.net);
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let mut v = 0;
        for p in Region::Ball(w).sample(space, 10_000, &mut rng) {
            let owners = tess.closed_owners(&p);
            let mut labels: Vec<usize> = owners.iter().map(|&o| inv.labels[o]).collect();
            labels.sort_unstable();
            v += usize::from(labels.windows(2).any(|w| w[0] == w[1]));
        }
        total += v;
        details.push(format!("{name}: {v} of 10000 ({} orbits)", inv.reps.len()));
    }
    ensure(total == 0, format!("samples in two same-orbit tiles: {}", details.join(", ")))
}

fn starlikeness() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for name in ["torus", "klein", "schottky", "trivial"] {
        let a = action(name);
        let w = window(name);
        let inv = invariant_net(&a, &w, &NetOptions::default(), 41).unwrap();
        let space = a.space();
        let tess = Tessellation::new(space, &inv.net);
        let mut order = inv.within_center(space, f64::INFINITY);
        order.sort_by(|&x, &y| {
            let d = |i: usize| space.dist(&inv.net.points()[i], &w.center);
            d(x).total_cmp(&d(y))
        });
        order.truncate(100);
        let (mut rays, mut violations) = (0, 0);
        for (k, &x) in order.iter().enumerate() {
            let r = verify_starlike(&tess, x, 2.2 * inv.phi_max(), 100, 43 + k as u64);
            rays += r.trials;
            violations += r.violations;
        }
        ok &= violations == 0 && rays == 100 * order.len();
        details.push(format!("{name}: {} tiles, {rays} rays, {violations} outside", order.len()));
    }
    ensure(ok, format!("{} points per ray; {}", RAY_POINTS, details.join(", ")))
}

fn grid_with_shifts(n: usize, a: usize, b: usize) -> FiniteGGraph {
    let v = |x: usize, y: usize| (x % n) + n * (y % n);
    let mut edges = Vec::new();
    for x in 0..n {
        for y in 0..n {
            edges.push((v(x, y), v(x + 1, y)));
            edges.push((v(x, y), v(x, y + 1)));
        }
    }
    let mut group = Vec::new();
    for i in (0..n).step_by(a) {
        for j in (0..n).step_by(b) {
            group.push((0..n * n).map(|p| v(p % n + i, p / n + j)).collect());
        }
    }
    FiniteGGraph::new(n * n, edges, group).unwrap()
}

fn tree_lift_exactness() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for (label, g) in [
        ("8-cycle / Z2", FiniteGGraph::cycle(8, 4).unwrap()),
        ("1000-cycle / Z10", FiniteGGraph::cycle(1000, 100).unwrap()),
        ("30x30 grid / Z6 x Z5", grid_with_shifts(30, 5, 6)),
    ] {
        let q = g.quotient();
        let lift = spanning_tree_lift(q, 0, &g).unwrap();
        let mut hits = vec![0; q.vertex_orbits];
        for &v in &lift.vertices {
            hits[g.vertex_orbit(v)] += 1;
        }
        ok &= hits.iter().all(|&h| h == 1) && g.check_lift(&lift);
        details.push(format!("{label}: {} orbits", q.vertex_orbits));
    }
    for name in ["torus", "klein", "schottky"] {
        let (a, d) = domain(name);
        let space = a.space();
        let inv = &d.net;
        // Recover each S point's orbit from the net's own transports.
        let mut hits = vec![0; inv.reps.len()];
        let mut mismatched = 0;
        for s in &d.selected {
            let Some(k) = inv.lookup(space, &s.point) else {
                mismatched += 1;
                continue;
            };
            let back = inv.transports[k].inverse().act(&s.point);
            let rep = inv.net.points()[inv.reps[inv.labels[k]]];
            mismatched += usize::from(inv.labels[k] != s.label || !space.same_point(&back, &rep));
            hits[inv.labels[k]] += 1;
        }
        ok &= mismatched == 0 && hits.iter().all(|&h| h == 1);
        details.push(format!(
            "{name}: {} orbits over a {}-vertex window graph",
            hits.len(),
            d.incidence.graph.vertices.len()
        ));
    }
    ensure(ok, format!("|S ∩ orbit| = 1 for {}", details.join(", ")))
}

fn domain_end_to_end() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for name in ["torus", "klein", "schottky"] {
        let r = &domain(name).1.report;
        let heuristic = r.caveats.iter().any(|c| c.contains("heuristic"));
        ok &= r.samples == 10_000
            && r.disjointness_violations == 0
            && r.coverage == 1.0
            && r.coverage_misses == 0
            && r.connected
            && heuristic == (name == "schottky");
        details.push(format!(
            "{name}: disjointness {}, coverage {:.4}, connected {}, caveats {}",
            r.disjointness_violations,
            r.coverage,
            r.connected,
            r.caveats.len()
        ));
    }
    ensure(ok, details.join("; "))
}

fn non_properness() -> Outcome {
    let s = scene("ex1");
    let a = s.action().unwrap();
    let space = a.space();
    let (x, y) = (Point::plane(1.0, 0.0), Point::plane(0.0, 1.0));
    let witness = find_dynamical_relation(&a, &x, &y, 20).unwrap();
    let windows: Vec<Window> = s
        .params
        .windows
        .as_ref()
        .unwrap()
        .iter()
        .map(|w| fundom::scene::window(space, w).unwrap())
        .collect();
    let growth = check_transporter_finiteness(&a, &windows).unwrap();
    let counts: Vec<usize> = growth.rows.iter().map(|r| r.count).collect();
    let increasing = counts.windows(3).any(|w| w[0] < w[1] && w[1] < w[2]);
    let cli = run(Command::CheckProperness, &s, false).unwrap();
    let residual = witness.as_ref().map_or(f64::INFINITY, |w| w.residual);
    ensure(
        residual <= 1e-4 && increasing && cli.status == Status::Fail,
        format!(
            "witness residual {residual:.1e} after {} steps, transporter counts {counts:?}, exit {}",
            witness.as_ref().map_or(0, |w| w.steps.len()),
            cli.status.exit_code()
        ),
    )
}

fn cross_graph() -> Outcome {
    let s = scene("cross");
    let out = run(Command::Dirichlet, &s, false).unwrap();
    let report: serde_json::Value = serde_json::from_str(&out.report).unwrap();
    let edges = report["edges"].as_array().unwrap();
    let closed = |e: &serde_json::Value| e["interior"].as_u64().unwrap() + e["boundary_band"].as_u64().unwrap();
    let open = |e: &serde_json::Value| e["interior"].as_u64().unwrap();
    let closed_rays = edges.iter().filter(|e| closed(e) == 200).count();
    let open_rays = edges.iter().filter(|e| open(e) == 200).count();
    let empty = edges.iter().filter(|e| closed(e) == 0).count();
    let closure_fails = report["closure"]["pass"] == false;
    ensure(
        closed_rays == 3 && open_rays == 1 && empty == 1 && closure_fails && report.get("error").is_none() && out.status == Status::Fail,
        format!(
            "closed tile on {closed_rays} rays, open tile on {open_rays}, closure check pass = {}, exit {}",
            report["closure"]["pass"],
            out.status.exit_code()
        ),
    )
}

fn determinism() -> Outcome {
    let mut runs = 0;
    let mut differing = Vec::new();
    for name in ["torus", "klein", "schottky", "ex1", "cross", "trivial", "cycle4"] {
        let s = scene(name);
        for command in Command::ALL {
            let a = run(command, &s, false).unwrap();
            let b = run(command, &s, false).unwrap();
            runs += 1;
            if a.report != b.report {
                differing.push(format!("{name} {}", command.name()));
            }
        }
    }
    ensure(differing.is_empty(), format!("{runs} fixture/command pairs, differing: {differing:?}"))
}

fn main() {
    let criteria: [(&str, Check); 12] = [
        ("dirichlet baseline", dirichlet_baseline),
        ("quotient metric oracle", quotient_metric_oracle),
        ("margin is 2-Lipschitz", margin_lipschitz),
        ("local isometry", local_isometry),
        ("covering lemma", covering_lemma),
        ("injectivity", injectivity),
        ("starlike tiles", starlikeness),
        ("tree lift exactness", tree_lift_exactness),
        ("region end to end", domain_end_to_end),
        ("non-properness", non_properness),
        ("cross graph", cross_graph),
        ("determinism", determinism),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !only.is_empty() && !only.iter().any(|o| name.contains(o.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS  {name:<24} {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name:<24} {detail} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
