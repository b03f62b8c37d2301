//! Searches for failures of properness: transporter growth on shrinking
//! schedules, dynamical relations, and wandering (slice) radii.

use serde::Serialize;

use crate::action::{ActionSystem, GroupElement};
use crate::error::{Error, Result};
use crate::geometry::{Point, Window};
use crate::quotient::smallest_displacement;
use crate::TOL;

/// Consecutive successful levels needed before a relation is reported.
pub const WITNESS_STREAK: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthVerdict {
    BoundedObserved,
    GrowthObserved,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthRow {
    pub radius: f64,
    pub count: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct TransporterGrowth {
    pub rows: Vec<GrowthRow>,
    pub verdict: GrowthVerdict,
    pub complete: bool,
    pub caveats: Vec<String>,
}

/// Counts `|(K|K)_G|` over nested windows.
///
/// Growth is only certified when the last three counts strictly increase while the
/// radius increments shrink: the windows then accumulate inside one compact set whose
/// transporter is therefore infinite. Counts on schedules that keep expanding grow for
/// every action and are reported without a growth verdict.
pub fn check_transporter_finiteness(action: &ActionSystem, windows: &[Window]) -> Result<TransporterGrowth> {
    let space = action.space();
    for pair in windows.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if b.radius <= a.radius || space.dist(&a.center, &b.center) + a.radius > b.radius + TOL {
            return Err(Error::Precondition("windows must be nested with increasing radii".into()));
        }
    }
    let mut rows = Vec::with_capacity(windows.len());
    let mut complete = true;
    for w in windows {
        let t = action.transporter(w, w)?;
        complete &= t.complete;
        rows.push(GrowthRow {
            radius: w.radius,
            count: t.elements.len(),
        });
    }
    let n = rows.len();
    let growing = n >= 3 && rows[n - 3].count < rows[n - 2].count && rows[n - 2].count < rows[n - 1].count;
    let shrinking = n >= 3 && rows[n - 1].radius - rows[n - 2].radius < rows[n - 2].radius - rows[n - 3].radius;
    let mut caveats = Vec::new();
    if !complete {
        caveats.push(format!(
            "transporter counts come from a heuristic search over words of length at most {}",
            action.depth()
        ));
    }
    if growing && !shrinking {
        caveats.push("counts grow on an expanding schedule; this does not indicate non-properness".into());
    }
    Ok(TransporterGrowth {
        rows,
        verdict: if growing && shrinking {
            GrowthVerdict::GrowthObserved
        } else {
            GrowthVerdict::BoundedObserved
        },
        complete,
        caveats,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessStep {
    pub level: usize,
    pub element: GroupElement,
    pub point: Point,
    pub image: Point,
    pub residual: f64,
}

/// Evidence that `x` and `y` are dynamically related.
#[derive(Clone, Debug, Serialize)]
pub struct DynamicalWitness {
    pub x: Point,
    pub y: Point,
    pub scale: f64,
    pub steps: Vec<WitnessStep>,
    /// Residual of the last step.
    pub residual: f64,
}

/// Searches for `gₙ` pairwise distinct and `xₙ → x` with `gₙ xₙ → y`.
///
/// Level `n` uses source radius `2⁻ⁿ` and target tolerance `2⁻ⁿ⁺¹`; the shortest unused word
/// meeting both, with residual below the previous step's, extends the current streak.
/// A witness is reported when the streak ending at `depth` spans [`WITNESS_STREAK`] levels.
pub fn find_dynamical_relation(
    action: &ActionSystem,
    x: &Point,
    y: &Point,
    depth: usize,
) -> Result<Option<DynamicalWitness>> {
    let space = action.space();
    space.validate(x)?;
    space.validate(y)?;
    if depth == 0 {
        return Err(Error::Precondition("depth must be at least 1".into()));
    }
    let scale = 1.0;
    let gap = space.dist(x, y);
    let mut pool = if action.is_isometric() {
        action.moving(x, gap + 2.0 * scale).0
    } else {
        action.words_up_to(depth.max(action.depth()))
    };
    pool.sort_by(|a, b| a.word.len().cmp(&b.word.len()).then_with(|| a.word.cmp(&b.word)));

    let mut streak: Vec<WitnessStep> = Vec::new();
    for level in 1..=depth {
        let radius = scale * 0.5f64.powi(level as i32);
        let mut bound = 2.0 * radius;
        if let Some(last) = streak.last() {
            bound = bound.min(last.residual);
        }
        let step = pool
            .iter()
            .filter(|g| !streak.iter().any(|s| s.element.word == g.word))
            .find_map(|g| {
                let (p, reach) = action.closest_approach(g, x, radius, y);
                let residual = reach.max(space.dist(&p, x));
                let better = streak.last().map_or(residual <= bound + TOL, |_| residual < bound);
                better.then(|| WitnessStep {
                    level,
                    element: g.clone(),
                    point: p,
                    image: g.act(&p),
                    residual,
                })
            });
        match step {
            Some(s) => streak.push(s),
            None => streak.clear(),
        }
    }
    if streak.len() < WITNESS_STREAK {
        return Ok(None);
    }
    let residual = streak.last().map_or(f64::INFINITY, |s| s.residual);
    Ok(Some(DynamicalWitness {
        x: *x,
        y: *y,
        scale,
        steps: streak,
        residual,
    }))
}

#[derive(Clone, Debug, Serialize)]
pub struct WanderingRadius {
    pub radius: f64,
    /// Smallest displacement over enumerated elements not fixing `x`.
    pub rho_free: f64,
    pub element: Option<GroupElement>,
    pub complete: bool,
}

/// Radius `r = ρ_free(x)/2` of a ball whose self-transporter lies in the stabilizer of `x`.
///
/// For isometric actions this follows from the triangle inequality; it is re-checked with
/// a transporter call on a ball shrunk by a relative `10⁻⁶`, since the guarantee concerns
/// the open ball.
pub fn wandering_radius(action: &ActionSystem, x: &Point) -> Result<WanderingRadius> {
    action.space().validate(x)?;
    let free = match smallest_displacement(action, x, |_, d| d > TOL) {
        Ok(m) => m,
        // Every enumerated element fixes x.
        Err(Error::InconclusiveMargin { .. }) => {
            return Ok(WanderingRadius {
                radius: f64::INFINITY,
                rho_free: f64::INFINITY,
                element: None,
                complete: action.is_exact(),
            })
        }
        Err(e) => return Err(e),
    };
    if !free.value.is_finite() {
        return Ok(WanderingRadius {
            radius: f64::INFINITY,
            rho_free: f64::INFINITY,
            element: None,
            complete: free.complete,
        });
    }
    let radius = free.value / 2.0;
    let ball = Window::new(*x, radius * (1.0 - 1e-6)).map_err(|_| Error::NotWandering {
        point: *x,
        displacement: free.value,
    })?;
    let space = action.space();
    let t = action.transporter(&ball, &ball)?;
    if let Some(g) = t.elements.iter().find(|g| space.dist(&g.act(x), x) > TOL) {
        return Err(Error::Precondition(format!(
            "{} moves the slice ball into itself",
            g.word_string()
        )));
    }
    Ok(WanderingRadius {
        radius,
        rho_free: free.value,
        element: free.element,
        complete: free.complete && t.complete,
    })
}
