//! Scenario ingestion: the input data model of a verification run.
//!
//! A scenario is a conformal-factor field on a cap of S^n minus a list of
//! holes, described in a TOML file with sections `geometry`, `factor`,
//! `solver`, `output` and an optional `transform`. Angles accept either
//! numbers or expression strings such as `"pi/3"`. Unknown keys are
//! rejected.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Background, RadialField, RadialGrid, Regularity};
use crate::moebius::{boost_along, random_sphere_point, rotation_between, MoebiusMap};
use crate::sphere::{HyperSphere, SpherePoint};

/// A positive radial profile: the conformal factor as a function of the
/// geodesic angle from the scenario's domain pole.
pub trait RadialFactor: Send + Sync {
    fn eval(&self, theta: f64) -> Result<f64>;
}

pub struct ConstantFactor(pub f64);

impl RadialFactor for ConstantFactor {
    fn eval(&self, _theta: f64) -> Result<f64> {
        Ok(self.0)
    }
}

/// 1 + amplitude sin(mode pi (theta - lo)/(hi - lo)): equals 1 at both ends
/// of the span, so the boundary stays round while the interior bends.
pub struct PerturbedFactor {
    pub amplitude: f64,
    pub mode: u32,
    pub span: (f64, f64),
}

impl RadialFactor for PerturbedFactor {
    fn eval(&self, theta: f64) -> Result<f64> {
        let (lo, hi) = self.span;
        let x = (theta - lo) / (hi - lo);
        Ok(1.0 + self.amplitude * (self.mode as f64 * std::f64::consts::PI * x).sin())
    }
}

/// Arbitrary expression in `theta` (meval grammar, `pi` and `e` bound).
pub struct ExpressionFactor {
    expr: meval::Expr,
    pub text: String,
}

impl ExpressionFactor {
    pub fn parse(text: &str) -> Result<Self> {
        let expr: meval::Expr = text
            .parse()
            .map_err(|e| Error::Expression(format!("{e} in `{text}`")))?;
        // probe once so malformed variables surface at load time
        let probe = ExpressionFactor { expr: expr.clone(), text: text.to_string() };
        probe.eval(0.1)?;
        Ok(probe)
    }
}

impl RadialFactor for ExpressionFactor {
    fn eval(&self, theta: f64) -> Result<f64> {
        let mut ctx = meval::Context::new();
        ctx.var("theta", theta).var("t", theta).var("x", theta);
        self.expr
            .eval_with_context(&ctx)
            .map_err(|e| Error::Expression(format!("{e} in `{}`", self.text)))
    }
}

/// Tabulated factor, interpolated cubically.
pub struct GridFactor {
    pub field: RadialField,
}

impl RadialFactor for GridFactor {
    fn eval(&self, theta: f64) -> Result<f64> {
        self.field.interpolate(theta)
    }
}

/// The pullback of another radial factor under a Möbius map:
/// (u . map)(x) lambda^{(n-2)/2}, evaluated on the latitude representative
/// about the outer pole. Only axis-compatible maps keep this radial; the
/// scenario transform machinery constructs exactly those.
pub struct PulledBackFactor {
    pub inner: Arc<dyn RadialFactor>,
    pub inner_pole: SpherePoint,
    pub outer_pole: SpherePoint,
    pub map: MoebiusMap,
    pub n: usize,
}

impl RadialFactor for PulledBackFactor {
    fn eval(&self, theta: f64) -> Result<f64> {
        let x = self.outer_pole.latitude_representative(theta);
        let (y, lambda) = self.map.apply_sphere(&x)?;
        let inner_theta = self.inner_pole.angle_to(&y);
        Ok(self.inner.eval(inner_theta)? * lambda.powf((self.n as f64 - 2.0) / 2.0))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
    Both,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryGate {
    /// Boundary must be isometric to the standard cap boundary.
    Isometry,
    /// Alternative gate: constant boundary scalar curvature at the value of
    /// the standard cap boundary. Numerically the same radius test in the
    /// radial setting; the report records that accepting it rests on the
    /// closed-round-sphere rigidity of the boundary.
    ConstantScalar,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverSettings {
    pub grid_size: usize,
    pub tol_change: f64,
    pub tol_residual: f64,
    pub max_iterations: usize,
    pub gap_tolerance: f64,
    pub hopf_tolerance: f64,
    pub bidirectional: bool,
    pub force: bool,
    pub relax_hemisphere_mean_curvature: bool,
    pub boundary_gate: BoundaryGate,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            grid_size: 4096,
            tol_change: crate::tol::SOLVER_TOL_CHANGE,
            tol_residual: crate::tol::SOLVER_TOL_RESIDUAL,
            max_iterations: 200,
            gap_tolerance: crate::tol::GAP_TOL,
            hopf_tolerance: crate::tol::HOPF_TOL,
            bidirectional: false,
            force: false,
            relax_hemisphere_mean_curvature: false,
            boundary_gate: BoundaryGate::Isometry,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputSettings {
    pub format: OutputFormat,
    pub directory: Option<PathBuf>,
}

impl Default for OutputSettings {
    fn default() -> Self {
        OutputSettings { format: OutputFormat::Json, directory: None }
    }
}

/// A validated verification scenario.
pub struct Scenario {
    pub n: usize,
    /// Cap class parameter in (0, pi/2].
    pub rho: f64,
    /// The cap carrying the data (defaults to the cap of radius rho about
    /// the south pole; transforms move it).
    pub domain: HyperSphere,
    pub holes: Vec<HyperSphere>,
    pub factor: Arc<dyn RadialFactor>,
    pub factor_kind: String,
    pub transformed: bool,
    pub solver: SolverSettings,
    pub output: OutputSettings,
}

impl Scenario {
    /// The inner data boundary: the radius of a hole centered at the domain
    /// pole, if present.
    pub fn inner_start(&self) -> f64 {
        for hole in &self.holes {
            if self.domain.center().angle_to(hole.center()) < 1e-9 {
                return hole.radius();
            }
        }
        0.0
    }

    /// Sample the factor on a fresh radial grid over the data span.
    pub fn sample_factor(&self, cells: usize) -> Result<RadialField> {
        let grid = Arc::new(RadialGrid::uniform_sphere(
            self.n,
            self.domain.center().clone(),
            self.inner_start(),
            self.domain.radius(),
            cells,
        )?);
        let values: std::result::Result<Vec<f64>, Error> =
            grid.nodes().iter().map(|&t| self.factor.eval(t)).collect();
        RadialField::new(grid, values?, Regularity::Smooth)
    }

    /// Pull the whole scenario back by (boost along the domain axis) then a
    /// rotation: domain, holes and factor move together, so the transformed
    /// scenario describes the same geometry in a different chart. This is
    /// the subgroup of Möbius transformations that keeps radial data
    /// radial.
    pub fn moebius_pullback(&self, rotation: Option<MoebiusMap>, boost: f64) -> Result<Scenario> {
        let pole = self.domain.center().clone();
        let mut map = boost_along(&pole, boost)?;
        if let Some(rot) = rotation {
            map = map.compose(&rot)?;
        }
        let inv = map.inverse();
        let domain = inv.transform_sphere(&self.domain)?;
        let holes: Result<Vec<HyperSphere>> =
            self.holes.iter().map(|h| inv.transform_sphere(h)).collect();
        let factor = Arc::new(PulledBackFactor {
            inner: self.factor.clone(),
            inner_pole: pole,
            outer_pole: domain.center().clone(),
            map,
            n: self.n,
        });
        Ok(Scenario {
            n: self.n,
            rho: self.rho,
            domain,
            holes: holes?,
            factor,
            factor_kind: self.factor_kind.clone(),
            transformed: true,
            solver: self.solver.clone(),
            output: self.output.clone(),
        })
    }

    /// Seeded random pullback: a rotation moving the axis to a random
    /// position plus a random axis boost.
    pub fn random_pullback(&self, seed: u64) -> Result<Scenario> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let target = random_sphere_point(self.n, &mut rng);
        let rotation = rotation_between(self.domain.center(), &target)?;
        let boost = rng.gen_range(-0.5..0.5);
        self.moebius_pullback(Some(rotation), boost)
    }
}

// ---------------------------------------------------------------------------
// configuration file model

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    geometry: GeometrySection,
    factor: FactorSection,
    #[serde(default)]
    solver: Option<SolverSection>,
    #[serde(default)]
    output: Option<OutputSection>,
    #[serde(default)]
    transform: Option<TransformSection>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Angle {
    Number(f64),
    Expression(String),
}

impl Angle {
    fn value(&self, path: &str) -> Result<f64> {
        match self {
            Angle::Number(x) => Ok(*x),
            Angle::Expression(s) => meval::eval_str(s)
                .map_err(|e| Error::config(path, format!("cannot evaluate `{s}`: {e}"))),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometrySection {
    dimension: usize,
    rho: Angle,
    #[serde(default)]
    domain_center: Option<Vec<f64>>,
    #[serde(default)]
    domain_radius: Option<Angle>,
    #[serde(default)]
    holes: Vec<HoleSection>,
    #[serde(default)]
    limit_points: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HoleSection {
    center: Vec<f64>,
    radius: Angle,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FactorSection {
    kind: String,
    #[serde(default)]
    scale: Option<f64>,
    #[serde(default)]
    amplitude: Option<f64>,
    #[serde(default)]
    mode: Option<u32>,
    #[serde(default)]
    expr: Option<String>,
    #[serde(default)]
    path: Option<PathBuf>,
    #[serde(default)]
    boost: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverSection {
    #[serde(default)]
    grid_size: Option<usize>,
    #[serde(default)]
    tol_change: Option<f64>,
    #[serde(default)]
    tol_residual: Option<f64>,
    #[serde(default)]
    max_iterations: Option<usize>,
    #[serde(default)]
    gap_tolerance: Option<f64>,
    #[serde(default)]
    hopf_tolerance: Option<f64>,
    #[serde(default)]
    bidirectional: Option<bool>,
    #[serde(default)]
    force: Option<bool>,
    #[serde(default)]
    relax_hemisphere_mean_curvature: Option<bool>,
    #[serde(default)]
    boundary_gate: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    #[serde(default)]
    format: Option<String>,
    #[serde(default)]
    directory: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransformSection {
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    boost: Option<f64>,
}

/// Read, parse and validate a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    let config: ConfigFile = toml::from_str(&text)
        .map_err(|e| Error::config(&path.display().to_string(), e.to_string()))?;
    scenario_from_config(config, path.parent().unwrap_or(Path::new(".")))
}

pub fn load_scenario_str(text: &str, base: &Path) -> Result<Scenario> {
    let config: ConfigFile =
        toml::from_str(text).map_err(|e| Error::config("<inline>", e.to_string()))?;
    scenario_from_config(config, base)
}

fn scenario_from_config(config: ConfigFile, base: &Path) -> Result<Scenario> {
    let n = config.geometry.dimension;
    if n < 3 {
        return Err(Error::config(
            "geometry.dimension",
            format!("the pipeline needs n >= 3, got {n}"),
        ));
    }
    let rho = config.geometry.rho.value("geometry.rho")?;
    if !(rho > 0.0) || rho > std::f64::consts::FRAC_PI_2 + 1e-12 {
        return Err(Error::config(
            "geometry.rho",
            format!(
                "rho = {rho} violates the cap bound 0 < rho <= pi/2; caps beyond the \
                 hemisphere are indistinguishable from smaller-sphere data"
            ),
        ));
    }
    if !config.geometry.limit_points.is_empty() {
        return Err(Error::config(
            "geometry.limit_points",
            "nonempty limit sets are not supported; the pipeline requires a finite \
             fundamental group (empty limit set)",
        ));
    }

    let center = match &config.geometry.domain_center {
        Some(c) => SpherePoint::from_slice(c)
            .map_err(|e| Error::config("geometry.domain_center", e.to_string()))?,
        None => SpherePoint::south(n),
    };
    if center.n() != n {
        return Err(Error::config(
            "geometry.domain_center",
            format!("expected {} coordinates, got {}", n + 1, center.n() + 1),
        ));
    }
    let domain_radius = match &config.geometry.domain_radius {
        Some(a) => a.value("geometry.domain_radius")?,
        None => rho,
    };
    let domain = HyperSphere::new(center, domain_radius)
        .map_err(|e| Error::config("geometry.domain_radius", e.to_string()))?;

    let mut holes = Vec::new();
    for (i, hole) in config.geometry.holes.iter().enumerate() {
        let path = format!("geometry.holes[{i}]");
        let c = SpherePoint::from_slice(&hole.center)
            .map_err(|e| Error::config(&path, e.to_string()))?;
        if c.n() != n {
            return Err(Error::config(&path, "hole center has the wrong dimension"));
        }
        let r = hole.radius.value(&path)?;
        holes.push(HyperSphere::new(c, r).map_err(|e| Error::config(&path, e.to_string()))?);
    }
    validate_hole_geometry(&domain, &holes)?;

    let mut solver = SolverSettings::default();
    if let Some(s) = &config.solver {
        if let Some(v) = s.grid_size {
            solver.grid_size = v;
        }
        if let Some(v) = s.tol_change {
            solver.tol_change = v;
        }
        if let Some(v) = s.tol_residual {
            solver.tol_residual = v;
        }
        if let Some(v) = s.max_iterations {
            solver.max_iterations = v;
        }
        if let Some(v) = s.gap_tolerance {
            solver.gap_tolerance = v;
        }
        if let Some(v) = s.hopf_tolerance {
            solver.hopf_tolerance = v;
        }
        if let Some(v) = s.bidirectional {
            solver.bidirectional = v;
        }
        if let Some(v) = s.force {
            solver.force = v;
        }
        if let Some(v) = s.relax_hemisphere_mean_curvature {
            solver.relax_hemisphere_mean_curvature = v;
        }
        if let Some(v) = &s.boundary_gate {
            solver.boundary_gate = match v.as_str() {
                "isometry" => BoundaryGate::Isometry,
                "constant_scalar" => BoundaryGate::ConstantScalar,
                other => {
                    return Err(Error::config(
                        "solver.boundary_gate",
                        format!("unknown gate `{other}` (isometry | constant_scalar)"),
                    ))
                }
            };
        }
    }

    let mut output = OutputSettings::default();
    if let Some(o) = &config.output {
        if let Some(f) = &o.format {
            output.format = match f.as_str() {
                "json" => OutputFormat::Json,
                "csv" => OutputFormat::Csv,
                "both" => OutputFormat::Both,
                other => {
                    return Err(Error::config(
                        "output.format",
                        format!("unknown format `{other}` (json | csv | both)"),
                    ))
                }
            };
        }
        output.directory.clone_from(&o.directory);
    }

    let span = (0.0, domain.radius());
    let (factor, factor_kind, bubble_boost): (Arc<dyn RadialFactor>, String, Option<f64>) =
        match config.factor.kind.as_str() {
            "round" => (Arc::new(ConstantFactor(1.0)), "round".into(), None),
            "scaled" => {
                let scale = config.factor.scale.ok_or_else(|| {
                    Error::config("factor.scale", "scaled factor needs `scale`")
                })?;
                if scale <= 0.0 {
                    return Err(Error::config("factor.scale", "scale must be positive"));
                }
                (Arc::new(ConstantFactor(scale)), format!("scaled({scale})"), None)
            }
            "perturbed" => {
                let amplitude = config.factor.amplitude.ok_or_else(|| {
                    Error::config("factor.amplitude", "perturbed factor needs `amplitude`")
                })?;
                let mode = config.factor.mode.unwrap_or(1);
                (
                    Arc::new(PerturbedFactor { amplitude, mode, span }),
                    format!("perturbed({amplitude}, {mode})"),
                    None,
                )
            }
            "expression" => {
                let text = config.factor.expr.as_ref().ok_or_else(|| {
                    Error::config("factor.expr", "expression factor needs `expr`")
                })?;
                (
                    Arc::new(ExpressionFactor::parse(text)?),
                    format!("expression({text})"),
                    None,
                )
            }
            "grid" => {
                let rel = config.factor.path.as_ref().ok_or_else(|| {
                    Error::config("factor.path", "grid factor needs `path`")
                })?;
                let full = if rel.is_absolute() { rel.clone() } else { base.join(rel) };
                let (coords, values) = read_factor_csv(&full)?;
                let grid = Arc::new(RadialGrid::from_nodes(
                    n,
                    Background::SpherePolar { pole: domain.center().clone() },
                    coords,
                )?);
                let field = RadialField::new(grid, values, Regularity::Smooth)?;
                (
                    Arc::new(GridFactor { field }),
                    format!("grid({})", rel.display()),
                    None,
                )
            }
            "bubble" => {
                let boost = config.factor.boost.unwrap_or(0.4);
                (Arc::new(ConstantFactor(1.0)), format!("bubble({boost})"), Some(boost))
            }
            other => {
                return Err(Error::config(
                    "factor.kind",
                    format!(
                        "unknown factor kind `{other}` \
                         (round | scaled | perturbed | expression | grid | bubble)"
                    ),
                ))
            }
        };

    let mut scenario = Scenario {
        n,
        rho,
        domain,
        holes,
        factor,
        factor_kind,
        transformed: false,
        solver,
        output,
    };

    if let Some(boost) = bubble_boost {
        scenario = scenario.moebius_pullback(None, boost)?;
    }
    if let Some(t) = &config.transform {
        if let Some(b) = t.boost {
            scenario = scenario.moebius_pullback(None, b)?;
        }
        if let Some(seed) = t.seed {
            scenario = scenario.random_pullback(seed)?;
        }
    }

    // factor must be positive over the data span
    let probe = scenario.sample_factor(64.max(crate::grid::MIN_CELLS))?;
    drop(probe);

    Ok(scenario)
}

fn validate_hole_geometry(domain: &HyperSphere, holes: &[HyperSphere]) -> Result<()> {
    let margin = 1e-9;
    for (i, a) in holes.iter().enumerate() {
        let dist = domain.center().angle_to(a.center());
        if dist + a.radius() >= domain.radius() - margin {
            return Err(Error::config(
                &format!("geometry.holes[{i}]"),
                format!(
                    "hole closure leaves the data cap: center distance {dist:.6} + radius \
                     {:.6} >= domain radius {:.6}",
                    a.radius(),
                    domain.radius()
                ),
            ));
        }
        for (j, b) in holes.iter().enumerate().skip(i + 1) {
            if !a.disjoint_closures(b, margin) {
                return Err(Error::config(
                    &format!("geometry.holes[{i}],[{j}]"),
                    "hole closures are not pairwise disjoint",
                ));
            }
        }
    }
    Ok(())
}

/// CSV profile: header `coordinate,value`, one pair per line.
pub fn read_factor_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path)?;
    let mut coords = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if lineno == 0 && line.starts_with("coordinate") {
            continue;
        }
        let mut parts = line.split(',');
        let (c, v) = (parts.next(), parts.next());
        match (c, v) {
            (Some(c), Some(v)) => {
                let c: f64 = c.trim().parse().map_err(|_| {
                    Error::config(&path.display().to_string(), format!("bad number at line {}", lineno + 1))
                })?;
                let v: f64 = v.trim().parse().map_err(|_| {
                    Error::config(&path.display().to_string(), format!("bad number at line {}", lineno + 1))
                })?;
                coords.push(c);
                values.push(v);
            }
            _ => {
                return Err(Error::config(
                    &path.display().to_string(),
                    format!("expected `coordinate,value` at line {}", lineno + 1),
                ))
            }
        }
    }
    Ok((coords, values))
}

pub fn write_profile_csv(path: &Path, header: &str, columns: &[&[f64]]) -> Result<()> {
    use std::io::Write;
    let mut out = String::new();
    out.push_str(header);
    out.push('\n');
    let rows = columns.first().map(|c| c.len()).unwrap_or(0);
    for i in 0..rows {
        let mut first = true;
        for col in columns {
            if !first {
                out.push(',');
            }
            out.push_str(&format!("{}", col[i]));
            first = false;
        }
        out.push('\n');
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}
