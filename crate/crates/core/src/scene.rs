//! Scene files: a JSON description of a space, a group action, a window and
//! command parameters.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::action::{Affine, ActionSystem, GraphMap, Guarantee, Isometry, Mobius, Word};
use crate::error::{Error, Result};
use crate::geometry::{Edge, MetricGraph, Point, RawPoint, SpaceModel, Window};

/// Scene format version understood by this build.
pub const SCENE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub version: u32,
    pub name: String,
    pub space: SpaceSpec,
    #[serde(default)]
    pub generators: Vec<GeneratorSpec>,
    pub base: RawPoint,
    pub window: WindowSpec,
    pub enumeration: EnumerationSpec,
    pub seed: u64,
    #[serde(default)]
    pub params: Params,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpaceSpec {
    Plane {
        #[serde(default)]
        punctured: bool,
    },
    Disk,
    Graph {
        vertices: usize,
        edges: Vec<Edge>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GeneratorSpec {
    /// `p ↦ M p + t` on the plane.
    Affine { matrix: [[f64; 2]; 2], translation: [f64; 2] },
    /// `z ↦ (a w + b)/(c w + d)` on the disk with `w = z̄` when `conjugate`; complex
    /// numbers are `[re, im]`.
    Mobius {
        a: [f64; 2],
        b: [f64; 2],
        c: [f64; 2],
        d: [f64; 2],
        #[serde(default)]
        conjugate: bool,
    },
    /// Hyperbolic translation along the diameter at `angle`.
    HyperbolicTranslation { length: f64, angle: f64 },
    /// Rotation of the disk about its center.
    Rotation { angle: f64 },
    /// Graph automorphism given by its vertex permutation.
    Permutation { vertices: Vec<usize> },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub center: RawPoint,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EnumerationSpec {
    /// Lattices of translations, finite graph actions and the trivial group.
    Exact,
    /// Crystallographic groups: translation lattice `basis` and coset representatives.
    Lattice { basis: Vec<Word>, cosets: Vec<Word> },
    /// Word search up to `depth`.
    HeuristicDepth { depth: usize },
    /// Word search for affine maps of the plane that need not be isometries.
    Affine { depth: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointPair {
    pub x: RawPoint,
    pub y: RawPoint,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Verification sample count.
    pub samples: Option<usize>,
    /// Witness search depth, or word depth for heuristic enumeration.
    pub depth: Option<usize>,
    pub band_width: Option<f64>,
    /// Windows for the transporter growth table.
    pub windows: Option<Vec<WindowSpec>>,
    /// Endpoints for the dynamical relation search.
    pub witness: Option<PointPair>,
    /// Pairs for quotient distance queries.
    pub pairs: Option<Vec<PointPair>>,
    /// Explicit net for the Voronoi command.
    pub net: Option<Vec<RawPoint>>,
    /// Constant φ for nets built by the Voronoi command.
    pub phi: Option<f64>,
    /// Upper bound on φ for invariant nets.
    pub phi_cap: Option<f64>,
    /// Center of the Dirichlet tile.
    pub center: Option<RawPoint>,
    pub probes: Option<usize>,
    pub stream: Option<usize>,
    /// Raster size of SVG output.
    pub pixels: Option<usize>,
}

/// Command-line overrides applied on top of a scene.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub depth: Option<usize>,
    pub window_radius: Option<f64>,
    pub band_width: Option<f64>,
}

impl Scene {
    /// Parses a scene, reporting the line, column and field path of schema violations.
    pub fn parse(text: &str) -> Result<Self> {
        let mut de = serde_json::Deserializer::from_str(text);
        let scene: Scene = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let text = inner.to_string();
            let message = text.rsplit_once(" at line ").map_or(text.as_str(), |(m, _)| m);
            Error::Scene(format!(
                "line {} column {}: at `{}`: {}",
                inner.line(),
                inner.column(),
                path,
                message
            ))
        })?;
        de.end().map_err(|e| Error::Scene(format!("line {} column {}: {e}", e.line(), e.column())))?;
        if scene.version != SCENE_VERSION {
            return Err(Error::Scene(format!(
                "at `version`: unsupported scene version {} (expected {SCENE_VERSION})",
                scene.version
            )));
        }
        Ok(scene)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(n) = o.samples {
            self.params.samples = Some(n);
        }
        if let Some(d) = o.depth {
            self.params.depth = Some(d);
            if let EnumerationSpec::HeuristicDepth { depth } | EnumerationSpec::Affine { depth } = &mut self.enumeration {
                *depth = d;
            }
        }
        if let Some(r) = o.window_radius {
            self.window.radius = r;
        }
        if let Some(b) = o.band_width {
            self.params.band_width = Some(b);
        }
    }

    pub fn space(&self) -> Result<SpaceModel> {
        match &self.space {
            SpaceSpec::Plane { punctured: false } => Ok(SpaceModel::plane()),
            SpaceSpec::Plane { punctured: true } => Ok(SpaceModel::punctured_plane()),
            SpaceSpec::Disk => Ok(SpaceModel::PoincareDisk),
            SpaceSpec::Graph { vertices, edges } => Ok(SpaceModel::MetricGraph(MetricGraph::new(*vertices, edges.clone())?)),
        }
    }

    pub fn point(&self, space: &SpaceModel, raw: RawPoint) -> Result<Point> {
        space.point(raw)
    }

    pub fn window(&self, space: &SpaceModel) -> Result<Window> {
        window(space, &self.window)
    }

    /// Builds the action described by the scene.
    pub fn action(&self) -> Result<ActionSystem> {
        let space = self.space()?;
        let generators = self
            .generators
            .iter()
            .map(|g| generator(&space, g))
            .collect::<Result<Vec<_>>>()?;
        let base = space.point(self.base)?;
        match &self.enumeration {
            EnumerationSpec::Exact => ActionSystem::new(space, generators, base, Guarantee::Exact),
            EnumerationSpec::Lattice { basis, cosets } => {
                ActionSystem::crystallographic(space, generators, base, basis.clone(), cosets.clone())
            }
            EnumerationSpec::HeuristicDepth { depth } => {
                ActionSystem::new(space, generators, base, Guarantee::HeuristicDepth { depth: *depth })
            }
            EnumerationSpec::Affine { depth } => ActionSystem::new_affine(space, generators, base, *depth),
        }
    }
}

pub fn window(space: &SpaceModel, spec: &WindowSpec) -> Result<Window> {
    let center = space.point(spec.center)?;
    Window::new(center, spec.radius)
}

fn complex(z: [f64; 2]) -> Complex64 {
    Complex64::new(z[0], z[1])
}

fn generator(space: &SpaceModel, spec: &GeneratorSpec) -> Result<Isometry> {
    let plane = matches!(space, SpaceModel::EuclideanPlane { .. });
    let disk = matches!(space, SpaceModel::PoincareDisk);
    let wrong = |what: &str| Error::InvalidIsometry(format!("{what} generators do not act on a {} space", space.kind().name()));
    match spec {
        GeneratorSpec::Affine { matrix, translation } if plane => Ok(Isometry::Affine(Affine {
            matrix: *matrix,
            translation: *translation,
        })),
        GeneratorSpec::Mobius { a, b, c, d, conjugate } if disk => Ok(Isometry::Mobius(Mobius::new(
            complex(*a),
            complex(*b),
            complex(*c),
            complex(*d),
            *conjugate,
        )?)),
        GeneratorSpec::HyperbolicTranslation { length, angle } if disk => Ok(Isometry::Mobius(Mobius::translation(*length, *angle))),
        GeneratorSpec::Rotation { angle } if disk => Ok(Isometry::Mobius(Mobius::rotation(*angle))),
        GeneratorSpec::Permutation { vertices } if space.graph().is_some() => {
            Ok(Isometry::Graph(GraphMap::from_vertex_permutation(space, vertices.clone())?))
        }
        GeneratorSpec::Affine { .. } => Err(wrong("affine")),
        GeneratorSpec::Permutation { .. } => Err(wrong("permutation")),
        _ => Err(wrong("disk")),
    }
}
