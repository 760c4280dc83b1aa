//! Subcommand configurations. Every file carries `"version": 1` and is
//! checked twice: structurally while deserialising (unknown keys and wrong
//! types are rejected with their path), then value by value.

use std::path::Path;

use nonscatter::fields::{FieldSpec, HelmholtzField};
use nonscatter::flow::{FlowDirection, OrbitOptions};
use nonscatter::geometry::{Point, Rect};
use nonscatter::media::{ExplicitParams, MediumSpec, Region};
use nonscatter::nodal::TraceOptions;
use nonscatter::scatter::{point_source_incident, Incident, SolverConfig};
use nonscatter::spectra::{BoundaryCondition, CavityDomain, CavityProblem, SampleOptions};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::{CliError, SCHEMA_PATH};

pub const CONFIG_VERSION: u32 = 1;

/// Read and structurally validate a configuration; `def` names its schema
/// definition.
pub fn load<T: DeserializeOwned + Validate>(path: &Path, def: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(def, "", format!("cannot read {}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let cfg: T = serde_path_to_error::deserialize(de).map_err(|e| {
        let p = e.path().to_string();
        invalid(def, if p == "." { "" } else { &p }, e.into_inner().to_string())
    })?;
    cfg.validate(&Checker { def })?;
    Ok(cfg)
}

fn invalid(def: &str, path: &str, message: String) -> CliError {
    CliError::ConfigInvalid { path: path.to_string(), schema: format!("{SCHEMA_PATH}#/$defs/{def}"), message }
}

/// Value checks with the schema definition in scope.
pub struct Checker<'a> {
    def: &'a str,
}

impl Checker<'_> {
    pub fn fail(&self, path: &str, message: impl Into<String>) -> CliError {
        invalid(self.def, path, message.into())
    }

    pub fn version(&self, v: u32) -> Result<(), CliError> {
        if v == CONFIG_VERSION {
            Ok(())
        } else {
            Err(self.fail("version", format!("unsupported version {v}, expected {CONFIG_VERSION}")))
        }
    }

    pub fn positive(&self, path: &str, x: f64) -> Result<(), CliError> {
        if x > 0.0 && x.is_finite() {
            Ok(())
        } else {
            Err(self.fail(path, format!("must be positive and finite, got {x}")))
        }
    }

    pub fn window(&self, path: &str, r: &Rect) -> Result<(), CliError> {
        if r.is_valid() {
            Ok(())
        } else {
            Err(self.fail(path, "window needs finite xmin < xmax and ymin < ymax"))
        }
    }

    pub fn count(&self, path: &str, n: usize, min: usize, max: usize) -> Result<(), CliError> {
        if (min..=max).contains(&n) {
            Ok(())
        } else {
            Err(self.fail(path, format!("must lie in [{min}, {max}], got {n}")))
        }
    }

    pub fn field(&self, path: &str, spec: &FieldSpec) -> Result<HelmholtzField, CliError> {
        self.wavenumbers(path, spec)?;
        let f = HelmholtzField::from_spec(spec).map_err(|e| self.fail(path, e.to_string()))?;
        self.positive(&format!("{path}.k"), f.k())?;
        Ok(f)
    }

    /// Explicit wavenumbers anywhere in the field description, so the error names the key.
    fn wavenumbers(&self, path: &str, spec: &FieldSpec) -> Result<(), CliError> {
        match spec {
            FieldSpec::PlaneWaves { k, .. } | FieldSpec::Trig { k, .. } => self.positive(&format!("{path}.k"), *k),
            FieldSpec::BesselSum { k: Some(k), .. } | FieldSpec::RotatedBesselSum { k: Some(k), .. } => self.positive(&format!("{path}.k"), *k),
            FieldSpec::BesselSum { .. } | FieldSpec::RotatedBesselSum { .. } => Ok(()),
            FieldSpec::Pullback { inner, .. } => self.wavenumbers(&format!("{path}.inner"), inner),
            FieldSpec::Sum { parts } => {
                parts.iter().enumerate().try_for_each(|(i, p)| self.wavenumbers(&format!("{path}.parts[{i}].field"), &p.field))
            }
        }
    }

    pub fn medium(&self, path: &str, m: &MediumSpec) -> Result<(), CliError> {
        m.validate().map_err(|e| self.fail(path, e.to_string()))
    }
}

pub trait Validate {
    fn validate(&self, c: &Checker) -> Result<(), CliError>;
}

fn pt(p: [f64; 2]) -> Point {
    Point::new(p[0], p[1])
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldEval {
    pub version: u32,
    pub field: FieldSpec,
    pub points: Vec<[f64; 2]>,
}

impl Validate for FieldEval {
    fn validate(&self, c: &Checker) -> Result<(), CliError> {
        c.version(self.version)?;
        c.field("field", &self.field)?;
        c.count("points", self.points.len(), 1, 1_000_000)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldGrid {
    pub version: u32,
    pub field: FieldSpec,
    pub window: Rect,
    /// Samples per side.
    pub n: usize,
}

impl Validate for FieldGrid {
    fn validate(&self, c: &Checker) -> Result<(), CliError> {
        c.version(self.version)?;
        c.field("field", &self.field)?;
        c.window("window", &self.window)?;
        c.count("n", self.n, 2, 4000)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodalCertify {
    pub version: u32,
    pub field: FieldSpec,
    pub window: Rect,
    pub h: f64,
}

impl Validate for NodalCertify {
    fn validate(&self, c: &Checker) -> Result<(), CliError> {
        c.version(self.version)?;
        c.field("field", &self.field)?;
        c.window("window", &self.window)?;
        c.positive("h", self.h)
    }
}

/// Seed search along a segment: the first sign change among `samples` points.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSegment {
    pub from: [f64; 2],
    pub to: [f64; 2],
    pub samples: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodalTrace {
    pub version: u32,
    pub field: FieldSpec,
    #[serde(default)]
    pub seed: Option<[f64; 2]>,
    #[serde(default)]
    pub seed_segment: Option<SeedSegment>,
    #[serde(default)]
    pub options: Option<TraceOptions>,
}

impl Validate for NodalTrace {
    fn validate(&self, c: &Checker) -> Result<(), CliError> {
        c.version(self.version)?;
        c.field("field", &self.field)?;
        match (&self.seed, &self.seed_segment) {
            (Some(_), None) => {}
            (None, Some(s)) => c.count("seed_segment.samples", s.samples, 2, 1_000_000)?,
            _ => return Err(c.fail("", "exactly one of `seed` and `seed_segment` is required")),
        }
        if let Some(o) = &self.options {
            c.window("options.window", &o.window)?;
            c.positive("options.step", o.step)?;
            c.positive("options.min_step", o.min_step)?;
        }
        Ok(())
    }
}

impl NodalTrace {
    pub fn trace_options(&self) -> TraceOptions {
        self.options.clone().unwrap_or_default()
    }

    pub fn segment(&self) -> Option<(Point, Point, usize)> {
        self.seed_segment.map(|s| (pt(s.from), pt(s.to), s.samples))
    }

    pub fn seed_point(&self) -> Option<Point> {
        self.seed.map(pt)
    }
}

/// Shared by `nodal critical` and `flow stationary`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldWindow {
    pub version: u32,
    pub field: FieldSpec,
    pub window: Rect,
}

impl Validate for FieldWindow {
    fn validate(&self, c: &Checker) -> Result<(), CliError> {
        c.version(self.version)?;
        c.field("field", &self.field)?;
        c.window("window", &self.window)
    }
}

fn check_orbit_options(c: &Checker, o: &Option<OrbitOptions>) -> Result<(), CliError> {
    if let Some(o) = o {
        c.window("options.window", &o.window)?;
        c.positive("options.ds", o.ds)?;
        c.positive("options.rtol", o.rtol)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowTrace {
    pub version: u32,
    pub field: FieldSpec,
    pub start: [f64; 2],
    /// One direction only; both when absent.
    #[serde(default)]
    pub direction: Option<FlowDirection>,
    #[serde(default)]
    pub options: Option<OrbitOptions>,
}

impl Validate for FlowTrace {
    fn validate(&self, c: &Checker) -> Result<(), CliError> {
        c.version(self.version)?;
        c.field("field", &self.field)?;
        check_orbit_options(c, &self.options)
    }
}

impl FlowTrace {
    pub fn start_point(&self) -> Point {
        pt(self.start)
    }
}

fn default_join_tol() -> f64 {
    1e-9
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowDomain {
    pub version: u32,
    pub field: FieldSpec,
    /// One start point per boundary orbit.
    pub starts: Vec<[f64; 2]>,
    #[serde(default)]
    pub options: Option<OrbitOptions>,
    #[serde(default = "default_join_tol")]
    pub join_tol: f64,
}

impl Validate for FlowDomain {
    fn validate(&self, c: &Checker) -> Result<(), CliError> {
        c.version(self.version)?;
        c.field("field", &self.field)?;
        c.count("starts", self.starts.len(), 1, 64)?;
        c.positive("join_tol", self.join_tol)?;
        check_orbit_options(c, &self.options)
    }
}

impl FlowDomain {
    pub fn start_points(&self) -> Vec<Point> {
        self.starts.iter().copied().map(pt).collect()
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectraCavity {
    pub version: u32,
    pub problem: CavityProblem,
    pub field: FieldSpec,
    #[serde(default)]
    pub samples: SampleOptions,
}

impl Validate for SpectraCavity {
    fn validate(&self, c: &Checker) -> Result<(), CliError> {
        c.version(self.version)?;
        c.positive("problem.k", self.problem.k)?;
        c.field("field", &self.field)?;
        c.count("samples.interior", self.samples.interior, 1, 10_000_000)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectraItep {
    pub version: u32,
    pub medium: MediumSpec,
    pub domain: CavityDomain,
    pub k: f64,
    pub u: FieldSpec,
    pub v: FieldSpec,
    #[serde(default)]
    pub samples: SampleOptions,
}

impl Validate for SpectraItep {
    fn validate(&self, c: &Checker) -> Result<(), CliError> {
        c.version(self.version)?;
        c.medium("medium", &self.medium)?;
        c.positive("k", self.k)?;
        c.field("u", &self.u)?;
        c.field("v", &self.v)?;
        c.count("samples.interior", self.samples.interior, 1, 10_000_000)
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectraSector {
    pub version: u32,
    pub alpha: f64,
    #[serde(default = "one")]
    pub radius: f64,
    pub bc: BoundaryCondition,
    pub count: usize,
}

impl Validate for SpectraSector {
    fn validate(&self, c: &Checker) -> Result<(), CliError> {
        c.version(self.version)?;
        c.positive("alpha", self.alpha)?;
        if self.alpha >= 2.0 * std::f64::consts::PI {
            return Err(c.fail("alpha", "sector angle must be below 2 pi"));
        }
        c.positive("radius", self.radius)?;
        c.count("count", self.count, 1, 500)
    }
}

fn first() -> u32 {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediaBuild {
    pub version: u32,
    pub example: ExplicitParams,
    /// Eigen index (`kappa` or the mode number).
    #[serde(default = "first")]
    pub j: u32,
    /// Wavenumber, required by the rank-deficient family only.
    #[serde(default)]
    pub k: Option<f64>,
    #[serde(default)]
    pub samples: SampleOptions,
}

impl Validate for MediaBuild {
    fn validate(&self, c: &Checker) -> Result<(), CliError> {
        c.version(self.version)?;
        if self.j == 0 {
            return Err(c.fail("j", "eigen index starts at 1"));
        }
        if let Some(k) = self.k {
            c.positive("k", k)?;
        }
        if matches!(self.example, ExplicitParams::RankDeficient { .. }) && self.k.is_none() {
            return Err(c.fail("k", "the rank-deficient family needs k"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediaCheck {
    pub version: u32,
    pub medium: MediumSpec,
    /// Field to pull back through a transformation medium.
    #[serde(default)]
    pub field: Option<FieldSpec>,
    /// Samples per side of the coefficient table.
    #[serde(default = "default_table")]
    pub table: usize,
}

fn default_table() -> usize {
    41
}

impl Validate for MediaCheck {
    fn validate(&self, c: &Checker) -> Result<(), CliError> {
        c.version(self.version)?;
        c.medium("medium", &self.medium)?;
        if let Some(f) = &self.field {
            c.field("field", f)?;
        }
        c.count("table", self.table, 1, 2000)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IncidentSpec {
    Field { field: FieldSpec },
    /// Outgoing point source, used only on `neighborhood`.
    PointSource { location: [f64; 2], neighborhood: Region },
}

impl IncidentSpec {
    fn build(&self, c: &Checker, k: f64) -> Result<Incident, CliError> {
        match self {
            IncidentSpec::Field { field } => Ok(Incident::Field(c.field("incident.field", field)?)),
            IncidentSpec::PointSource { location, neighborhood } => point_source_incident(pt(*location), k, neighborhood.clone())
                .map(Incident::PointSource)
                .map_err(|e| c.fail("incident", e.to_string())),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterSolve {
    pub version: u32,
    pub medium: MediumSpec,
    pub incident: IncidentSpec,
    pub k: f64,
    #[serde(default)]
    pub solver: SolverConfig,
}

fn check_solver(c: &Checker, s: &SolverConfig) -> Result<(), CliError> {
    c.positive("solver.h", s.h)?;
    c.positive("solver.tol", s.tol)?;
    c.positive("solver.layer_wavelengths", s.layer_wavelengths)?;
    if !(s.growth >= 1.0) {
        return Err(c.fail("solver.growth", "growth factor must be at least 1"));
    }
    Ok(())
}

impl Validate for ScatterSolve {
    fn validate(&self, c: &Checker) -> Result<(), CliError> {
        c.version(self.version)?;
        c.positive("k", self.k)?;
        c.medium("medium", &self.medium)?;
        self.incident.build(c, self.k)?;
        check_solver(c, &self.solver)
    }
}

impl ScatterSolve {
    pub fn incident(&self) -> Result<Incident, CliError> {
        self.incident.build(&Checker { def: "scatterSolve" }, self.k)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterStudy {
    pub version: u32,
    pub medium: MediumSpec,
    pub incident: IncidentSpec,
    pub k: f64,
    /// Grid spacings, each half the previous.
    pub hs: Vec<f64>,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl Validate for ScatterStudy {
    fn validate(&self, c: &Checker) -> Result<(), CliError> {
        c.version(self.version)?;
        c.positive("k", self.k)?;
        c.medium("medium", &self.medium)?;
        self.incident.build(c, self.k)?;
        check_solver(c, &self.solver)?;
        c.count("hs", self.hs.len(), 3, 8)?;
        for (i, &h) in self.hs.iter().enumerate() {
            c.positive(&format!("hs[{i}]"), h)?;
        }
        Ok(())
    }
}

impl ScatterStudy {
    pub fn incident(&self) -> Result<Incident, CliError> {
        self.incident.build(&Checker { def: "scatterStudy" }, self.k)
    }
}
