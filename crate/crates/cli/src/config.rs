//! Run configuration read from a TOML file.
//!
//! Only `mode` is mandatory. Omitted sections fall back to the default
//! unit-square experiment; an explicit `[[regions]]` list replaces the default
//! regions entirely.

use std::path::{Path, PathBuf};

use asymfmo::material::DesignPoint;
use asymfmo::optimizer::OptimizerConfig;
use asymfmo::presets;
use asymfmo::{BoundaryKind, MaterialParams, Mesh, Region, RegionSpec, Side};
use serde::Deserialize;
use toml::Spanned;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Forward,
    TempMin,
    Switching,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Forward => "forward",
            Mode::TempMin => "temp-min",
            Mode::Switching => "switching",
        }
    }

    fn required_regions(self) -> &'static [Region] {
        match self {
            Mode::Forward => &[Region::Heat],
            Mode::TempMin => &[Region::Heat, Region::Protected],
            Mode::Switching => &[Region::Heat, Region::Protected, Region::ProtectedPrime],
        }
    }

    fn default_regions(self) -> Vec<RegionSpec> {
        match self {
            Mode::Forward | Mode::TempMin => presets::temp_min_regions(),
            Mode::Switching => presets::switching_regions(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshSpec {
    pub nx: usize,
    pub ny: usize,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySpec {
    pub side: Side,
    pub from: f64,
    pub to: f64,
    pub kind: BoundaryKind,
}

/// Fixed design values for forward analyses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardDesign {
    pub point: DesignPoint,
    /// When present, a second state with this Hall field is solved too.
    pub a_prime: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub mesh: MeshSpec,
    pub regions: Vec<RegionSpec>,
    pub boundaries: Vec<BoundarySpec>,
    pub material: MaterialParams,
    pub optimizer: OptimizerConfig,
    pub design: Option<ForwardDesign>,
    pub q: f64,
    pub output: PathBuf,
    pub solver_tol: f64,
    origin: Origin,
}

/// Where each entry came from, for error messages.
#[derive(Debug, Clone, PartialEq, Default)]
struct Origin {
    file: String,
    mode_line: usize,
    region_lines: Vec<Option<usize>>,
    boundary_lines: Vec<Option<usize>>,
}

impl Origin {
    fn at(&self, line: Option<usize>, message: impl std::fmt::Display) -> CliError {
        match line {
            Some(line) => CliError::Config(format!("{}:{line}: {message}", self.file)),
            None => CliError::Config(format!("{}: {message}", self.file)),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mode: Spanned<Mode>,
    output: Option<PathBuf>,
    solver_tol: Option<Spanned<f64>>,
    mesh: Option<Spanned<RawMesh>>,
    regions: Option<Vec<Spanned<RawRegion>>>,
    boundary: Option<Vec<Spanned<RawBoundary>>>,
    material: Option<Spanned<RawMaterial>>,
    source: Option<Spanned<RawSource>>,
    optimizer: Option<Spanned<RawOptimizer>>,
    design: Option<Spanned<RawDesign>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMesh {
    nx: usize,
    ny: usize,
    #[serde(default = "one")]
    width: f64,
    #[serde(default = "one")]
    height: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RegionKind {
    Bulk,
    Heat,
    Protected,
    ProtectedPrime,
}

impl From<RegionKind> for Region {
    fn from(k: RegionKind) -> Self {
        match k {
            RegionKind::Bulk => Region::Bulk,
            RegionKind::Heat => Region::Heat,
            RegionKind::Protected => Region::Protected,
            RegionKind::ProtectedPrime => Region::ProtectedPrime,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegion {
    kind: RegionKind,
    xmin: Option<f64>,
    ymin: Option<f64>,
    xmax: Option<f64>,
    ymax: Option<f64>,
    center: Option<[f64; 2]>,
    side: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawSide {
    Bottom,
    Right,
    Top,
    Left,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawBoundaryKind {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBoundary {
    side: RawSide,
    kind: RawBoundaryKind,
    from: Option<f64>,
    to: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMaterial {
    k: f64,
    c: f64,
    b: f64,
    eps: f64,
    eps_prime: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSource {
    q: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptimizer {
    beta1: Option<f64>,
    beta2: Option<f64>,
    eps: Option<f64>,
    dt: Option<f64>,
    radius: Option<f64>,
    max_iters: Option<usize>,
    tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDesign {
    xi: f64,
    eta: f64,
    s: f64,
    a: f64,
    a_prime: Option<f64>,
}

struct Lines<'a>(&'a str);

impl Lines<'_> {
    fn of<T>(&self, value: &Spanned<T>) -> usize {
        let start = value.span().start.min(self.0.len());
        self.0[..start].matches('\n').count() + 1
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses and validates; `file` only labels error messages.
    pub fn parse(text: &str, file: &str) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            let message = e.message().trim_end().to_string();
            Origin {
                file: file.to_string(),
                ..Origin::default()
            }
            .at(line, message)
        })?;
        let lines = Lines(text);
        let mode = *raw.mode.get_ref();
        let mut origin = Origin {
            file: file.to_string(),
            mode_line: lines.of(&raw.mode),
            ..Origin::default()
        };

        let mesh = match &raw.mesh {
            Some(m) => {
                let r = m.get_ref();
                let spec = MeshSpec {
                    nx: r.nx,
                    ny: r.ny,
                    width: r.width,
                    height: r.height,
                };
                if spec.nx == 0 || spec.ny == 0 || !(spec.width > 0.0) || !(spec.height > 0.0) {
                    return Err(origin.at(
                        Some(lines.of(m)),
                        "mesh needs nx, ny >= 1 and positive width and height",
                    ));
                }
                spec
            }
            None => MeshSpec {
                nx: 32,
                ny: 32,
                width: 1.0,
                height: 1.0,
            },
        };

        let regions = match &raw.regions {
            Some(list) => {
                let mut specs = Vec::with_capacity(list.len());
                for entry in list {
                    let line = lines.of(entry);
                    specs.push(region_spec(entry.get_ref()).map_err(|m| origin.at(Some(line), m))?);
                    origin.region_lines.push(Some(line));
                }
                specs
            }
            None => {
                let specs = mode.default_regions();
                origin.region_lines = vec![None; specs.len()];
                specs
            }
        };
        for &required in mode.required_regions() {
            if !regions.iter().any(|r| r.region == required) {
                return Err(origin.at(
                    Some(origin.mode_line),
                    format!(
                        "mode `{}` needs a `{required}` region, but none is defined",
                        mode.name()
                    ),
                ));
            }
        }

        let boundaries = match &raw.boundary {
            Some(list) => {
                let mut specs = Vec::with_capacity(list.len());
                for entry in list {
                    let r = entry.get_ref();
                    let side = match r.side {
                        RawSide::Bottom => Side::Bottom,
                        RawSide::Right => Side::Right,
                        RawSide::Top => Side::Top,
                        RawSide::Left => Side::Left,
                    };
                    let length = match side {
                        Side::Bottom | Side::Top => mesh.width,
                        Side::Right | Side::Left => mesh.height,
                    };
                    let kind = match r.kind {
                        RawBoundaryKind::Dirichlet => BoundaryKind::Dirichlet,
                        RawBoundaryKind::Neumann => BoundaryKind::Neumann,
                    };
                    specs.push(BoundarySpec {
                        side,
                        from: r.from.unwrap_or(0.0),
                        to: r.to.unwrap_or(length),
                        kind,
                    });
                    origin.boundary_lines.push(Some(lines.of(entry)));
                }
                specs
            }
            None => {
                origin.boundary_lines.push(None);
                vec![BoundarySpec {
                    side: Side::Bottom,
                    from: 0.0,
                    to: mesh.width,
                    kind: BoundaryKind::Dirichlet,
                }]
            }
        };
        if !boundaries.iter().any(|b| b.kind == BoundaryKind::Dirichlet) {
            return Err(origin.at(
                Some(origin.mode_line),
                "no `dirichlet` boundary entry; the temperature would not be unique",
            ));
        }

        let material = match &raw.material {
            Some(m) => {
                let r = m.get_ref();
                MaterialParams::new(r.k, r.c, r.b, r.eps, r.eps_prime)
                    .map_err(|e| origin.at(Some(lines.of(m)), e))?
            }
            None => presets::TempMinCase::AnisoHall.params(),
        };

        let solver_tol = match &raw.solver_tol {
            Some(t) => {
                let v = *t.get_ref();
                if !(v > 0.0 && v < 1.0) {
                    return Err(origin.at(Some(lines.of(t)), "solver_tol must lie in (0, 1)"));
                }
                v
            }
            None => asymfmo::fem::DEFAULT_SOLVER_TOL,
        };

        let mut optimizer = OptimizerConfig {
            solver_tol,
            ..OptimizerConfig::default()
        };
        if let Some(o) = &raw.optimizer {
            let r = o.get_ref();
            optimizer.beta1 = r.beta1.unwrap_or(optimizer.beta1);
            optimizer.beta2 = r.beta2.unwrap_or(optimizer.beta2);
            optimizer.eps = r.eps.unwrap_or(optimizer.eps);
            optimizer.dt = r.dt.unwrap_or(optimizer.dt);
            optimizer.radius = r.radius.or(optimizer.radius);
            optimizer.max_iters = r.max_iters.unwrap_or(optimizer.max_iters);
            optimizer.tol = r.tol.unwrap_or(optimizer.tol);
            optimizer
                .validate()
                .map_err(|e| origin.at(Some(lines.of(o)), e))?;
        }

        let design = match (&raw.design, mode) {
            (Some(d), _) => {
                let r = d.get_ref();
                let point = DesignPoint::new(r.xi, r.eta, r.s, r.a);
                let line = Some(lines.of(d));
                point.check().map_err(|e| origin.at(line, e))?;
                if let Some(ap) = r.a_prime {
                    if !(-1.0..=1.0).contains(&ap) {
                        return Err(origin.at(
                            line,
                            format!("design value {ap} of `a_prime` lies outside [-1, 1]"),
                        ));
                    }
                }
                if mode != Mode::Forward {
                    return Err(origin.at(
                        line,
                        "[design] is only used in forward mode; optimizations start from zero",
                    ));
                }
                Some(ForwardDesign {
                    point,
                    a_prime: r.a_prime,
                })
            }
            (None, Mode::Forward) => {
                return Err(origin.at(
                    Some(origin.mode_line),
                    "mode `forward` needs a [design] section",
                ));
            }
            (None, _) => None,
        };

        let q = match &raw.source {
            Some(s) => {
                let v = s.get_ref().q;
                if !v.is_finite() {
                    return Err(origin.at(Some(lines.of(s)), "source magnitude must be finite"));
                }
                v
            }
            None => presets::SOURCE_MAGNITUDE,
        };

        let config = RunConfig {
            mode,
            mesh,
            regions,
            boundaries,
            material,
            optimizer,
            design,
            q,
            output: raw.output.unwrap_or_else(|| PathBuf::from("output")),
            solver_tol,
            origin,
        };
        config.build_mesh()?;
        Ok(config)
    }

    /// The tagged mesh. Tagging failures are reported at the offending entry.
    pub fn build_mesh(&self) -> Result<Mesh, CliError> {
        let m = &self.mesh;
        let mut mesh = Mesh::structured(m.nx, m.ny, m.width, m.height)
            .map_err(|e| self.origin.at(Some(self.origin.mode_line), e))?;
        for (b, line) in self.boundaries.iter().zip(&self.origin.boundary_lines) {
            mesh.tag_boundary(b.side, b.from, b.to, b.kind)
                .map_err(|e| self.origin.at(*line, e))?;
        }
        for (r, line) in self.regions.iter().zip(&self.origin.region_lines) {
            mesh.tag_region(r).map_err(|e| self.origin.at(*line, e))?;
        }
        for &required in self.mode.required_regions() {
            if !mesh.has_region(required) {
                return Err(self.origin.at(
                    Some(self.origin.mode_line),
                    format!("region `{required}` is fully overwritten by later region entries"),
                ));
            }
        }
        Ok(mesh)
    }
}

fn region_spec(r: &RawRegion) -> Result<RegionSpec, String> {
    let region = Region::from(r.kind);
    match (r.xmin, r.ymin, r.xmax, r.ymax, r.center, r.side) {
        (Some(xmin), Some(ymin), Some(xmax), Some(ymax), None, None) => {
            if xmin < xmax && ymin < ymax {
                Ok(RegionSpec::new(xmin, ymin, xmax, ymax, region))
            } else {
                Err(format!(
                    "region `{region}` needs xmin < xmax and ymin < ymax"
                ))
            }
        }
        (None, None, None, None, Some([cx, cy]), Some(side)) => {
            if side > 0.0 {
                Ok(RegionSpec::centered(cx, cy, side, region))
            } else {
                Err(format!("region `{region}` needs a positive side"))
            }
        }
        _ => Err(format!(
            "region `{region}` must give either xmin, ymin, xmax, ymax or center and side"
        )),
    }
}
