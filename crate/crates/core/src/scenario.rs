//! Scenario files: one TOML document describing the model, the domain, the
//! coefficient profiles and the solver knobs of a run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::{solve_jacobi_positive, CurvatureProfile, ModelManifold, RadialFunction, Table, WarpingFunction};
use crate::mesh::{PotentialProfile, RadialMesh};
use crate::solver::{Ladder, Nonlinearity, Window};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "schema_default")]
    pub schema: u32,
    #[serde(default)]
    pub seed: u64,
    pub model: ModelSpec,
    pub domain: Option<DomainSpec>,
    #[serde(default)]
    pub ladder: LadderSpec,
    /// Named coefficient profiles (`a`, `b`, `V`, `s`, `s_tilde`, ...).
    #[serde(default)]
    pub coefficients: BTreeMap<String, ProfileSpec>,
    pub nonlinearity: Option<NonlinearitySpec>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub table: TableSpec,
    #[serde(default)]
    pub capacity: CapacitySpec,
    #[serde(default)]
    pub output: OutputSpec,
    /// Directory relative paths inside the file are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn schema_default() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Flat,
    Hyperbolic,
    /// Warping function from a tabulated radial curvature `G(r)`.
    Curvature,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub m: usize,
    #[serde(default = "two")]
    pub p: f64,
    pub kappa: Option<f64>,
    /// CSV with columns `r,G`.
    pub curvature_table: Option<PathBuf>,
    pub step: Option<f64>,
    pub drift: Option<DriftSpec>,
}

fn two() -> f64 {
    2.0
}

/// `f(r) = coefficient * r^exponent`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftSpec {
    pub coefficient: f64,
    #[serde(default = "two")]
    pub exponent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Ball,
    Annulus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Uniform,
    Geometric,
    /// Dyadic refinement towards the origin (balls only).
    Graded,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub inner: Option<f64>,
    pub outer: f64,
    #[serde(default = "elements_default")]
    pub elements: usize,
    #[serde(default)]
    pub spacing: Spacing,
    #[serde(default = "levels_default")]
    pub levels: usize,
}

fn elements_default() -> usize {
    400
}

fn levels_default() -> usize {
    8
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderSpec {
    #[serde(default = "factor_default")]
    pub factor: f64,
    #[serde(default = "rungs_default")]
    pub rungs: usize,
}

fn factor_default() -> f64 {
    1.5
}

fn rungs_default() -> usize {
    5
}

impl Default for LadderSpec {
    fn default() -> Self {
        LadderSpec { factor: factor_default(), rungs: rungs_default() }
    }
}

/// A radial profile; composite kinds nest.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Constant {
        value: f64,
    },
    /// `scale * chi` of the scenario's model.
    Hardy {
        scale: f64,
    },
    /// `height (1 - ((r - center)/width)^2)^3` on the bump's support.
    Bump {
        center: f64,
        width: f64,
        height: f64,
    },
    /// `coefficient (1 + r)^exponent`.
    Power {
        coefficient: f64,
        exponent: f64,
    },
    /// CSV with columns `r,value`.
    Table {
        path: PathBuf,
    },
    Sum {
        terms: Vec<ProfileSpec>,
    },
    Scaled {
        factor: f64,
        of: Box<ProfileSpec>,
    },
    Restricted {
        lo: f64,
        hi: f64,
        of: Box<ProfileSpec>,
    },
    PositivePart {
        of: Box<ProfileSpec>,
    },
    NegativePart {
        of: Box<ProfileSpec>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinearitySpec {
    /// `t^exponent`.
    Power { exponent: f64 },
    /// `sum_i c_i t^{sigma_i}` from `[c_i, sigma_i]` pairs.
    PowerSum { terms: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    #[default]
    Single,
    Sequence,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "one")]
    pub epsilon: f64,
    pub window: Option<[f64; 2]>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub mode: SolveMode,
    #[serde(default = "count_default")]
    pub count: usize,
    #[serde(default = "floor_default")]
    pub floor: f64,
    #[serde(default)]
    pub track_ladder: bool,
}

fn one() -> f64 {
    1.0
}

fn count_default() -> usize {
    3
}

fn floor_default() -> f64 {
    1e-12
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            epsilon: 1.0,
            window: None,
            tol: None,
            max_iter: None,
            mode: SolveMode::Single,
            count: count_default(),
            floor: floor_default(),
            track_ladder: false,
        }
    }
}

/// Log-spaced radii for `hardy-table` and `green`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSpec {
    #[serde(default = "r_min_default")]
    pub r_min: f64,
    #[serde(default = "r_max_default")]
    pub r_max: f64,
    #[serde(default = "points_default")]
    pub points: usize,
}

fn r_min_default() -> f64 {
    1e-3
}

fn r_max_default() -> f64 {
    20.0
}

fn points_default() -> usize {
    200
}

impl Default for TableSpec {
    fn default() -> Self {
        TableSpec { r_min: r_min_default(), r_max: r_max_default(), points: points_default() }
    }
}

/// `K = B_inner`, rungs `B_{inner factor^j}`, `g` constant.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacitySpec {
    #[serde(default = "one")]
    pub g: f64,
    #[serde(default = "one")]
    pub inner: f64,
    #[serde(default = "cap_factor_default")]
    pub factor: f64,
    #[serde(default = "cap_rungs_default")]
    pub rungs: usize,
    #[serde(default = "per_factor_default")]
    pub elements_per_factor: usize,
}

fn cap_factor_default() -> f64 {
    2.0
}

fn cap_rungs_default() -> usize {
    8
}

fn per_factor_default() -> usize {
    100
}

impl Default for CapacitySpec {
    fn default() -> Self {
        CapacitySpec {
            g: 1.0,
            inner: 1.0,
            factor: cap_factor_default(),
            rungs: cap_rungs_default(),
            elements_per_factor: per_factor_default(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
}

fn bad(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(field, format!("must be positive and finite, got {v}")))
    }
}

impl Scenario {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut s = Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        s.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(s)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(bad("schema", format!("unsupported version {}", self.schema)));
        }
        let md = &self.model;
        if md.m < 1 {
            return Err(bad("model.m", "must be at least 1"));
        }
        if !(md.p > 1.0) || !md.p.is_finite() {
            return Err(bad("model.p", format!("must exceed 1, got {}", md.p)));
        }
        match md.kind {
            ModelKind::Hyperbolic => {
                positive("model.kappa", md.kappa.ok_or_else(|| bad("model.kappa", "required for hyperbolic models"))?)?
            }
            ModelKind::Curvature => {
                if md.curvature_table.is_none() {
                    return Err(bad("model.curvature_table", "required for curvature models"));
                }
            }
            ModelKind::Flat => {}
        }
        if let Some(h) = md.step {
            positive("model.step", h)?;
        }
        if let Some(d) = &self.domain {
            positive("domain.outer", d.outer)?;
            if d.elements == 0 {
                return Err(bad("domain.elements", "must be positive"));
            }
            match d.kind {
                DomainKind::Annulus => {
                    let a = d.inner.ok_or_else(|| bad("domain.inner", "required for annuli"))?;
                    positive("domain.inner", a)?;
                    if a >= d.outer {
                        return Err(bad("domain.inner", format!("must be below domain.outer = {}", d.outer)));
                    }
                }
                DomainKind::Ball => {
                    if d.inner.is_some() {
                        return Err(bad("domain.inner", "not allowed for balls"));
                    }
                }
            }
        }
        if !(self.ladder.factor > 1.0) {
            return Err(bad("ladder.factor", format!("must exceed 1, got {}", self.ladder.factor)));
        }
        for (name, p) in &self.coefficients {
            p.validate(&format!("coefficients.{name}"))?;
        }
        positive("solver.epsilon", self.solver.epsilon)?;
        if let Some([lo, hi]) = self.solver.window {
            if !(lo >= 0.0 && hi > lo) {
                return Err(bad("solver.window", format!("need 0 <= lo < hi, got [{lo}, {hi}]")));
            }
        }
        if let Some(t) = self.solver.tol {
            positive("solver.tol", t)?;
        }
        positive("table.r_min", self.table.r_min)?;
        if !(self.table.r_max > self.table.r_min) || self.table.points < 2 {
            return Err(bad("table", "need r_max > r_min and at least 2 points"));
        }
        positive("capacity.g", self.capacity.g)?;
        positive("capacity.inner", self.capacity.inner)?;
        if !(self.capacity.factor > 1.0) {
            return Err(bad("capacity.factor", format!("must exceed 1, got {}", self.capacity.factor)));
        }
        if self.capacity.rungs == 0 || self.capacity.elements_per_factor == 0 {
            return Err(bad("capacity", "rungs and elements_per_factor must be positive"));
        }
        if let Some(NonlinearitySpec::PowerSum { terms }) = &self.nonlinearity {
            if terms.is_empty() || terms.iter().any(|[c, s]| !(*c > 0.0) || !s.is_finite()) {
                return Err(bad("nonlinearity.terms", "need at least one [c, sigma] pair with c > 0"));
            }
        }
        Ok(())
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn model(&self) -> Result<ModelManifold> {
        let md = &self.model;
        let mut mm = match md.kind {
            ModelKind::Flat => ModelManifold::flat(md.m, md.p)?,
            ModelKind::Hyperbolic => ModelManifold::hyperbolic(md.m, md.p, md.kappa.unwrap_or(1.0))?,
            ModelKind::Curvature => {
                let path = self.resolve(md.curvature_table.as_deref().unwrap_or(Path::new("")));
                let table = Table::from_csv(&path)?;
                let r_max = table.r_max();
                let warp: WarpingFunction =
                    solve_jacobi_positive(&CurvatureProfile::Tabulated(table), r_max, md.step.unwrap_or(1e-3))?;
                ModelManifold::new(md.m, md.p, warp)?
            }
        };
        if let Some(d) = md.drift {
            mm = mm.with_drift(RadialFunction::new(move |r| d.coefficient * r.powf(d.exponent)));
        }
        Ok(mm)
    }

    pub fn mesh(&self, mm: &ModelManifold) -> Result<RadialMesh> {
        let d = self.domain.as_ref().ok_or_else(|| bad("domain", "this subcommand needs a [domain] section"))?;
        match (d.kind, d.spacing) {
            (DomainKind::Ball, Spacing::Graded) => RadialMesh::ball_graded(mm, d.outer, d.elements, d.levels),
            (DomainKind::Ball, Spacing::Uniform) => RadialMesh::ball(mm, d.outer, d.elements),
            (DomainKind::Ball, Spacing::Geometric) => Err(bad("domain.spacing", "geometric spacing needs an annulus")),
            (DomainKind::Annulus, Spacing::Geometric) => {
                RadialMesh::annulus_geometric(mm, d.inner.unwrap_or(1.0), d.outer, d.elements)
            }
            (DomainKind::Annulus, Spacing::Uniform) => {
                RadialMesh::annulus(mm, d.inner.unwrap_or(1.0), d.outer, d.elements)
            }
            (DomainKind::Annulus, Spacing::Graded) => Err(bad("domain.spacing", "graded spacing needs a ball")),
        }
    }

    pub fn ladder(&self) -> Ladder {
        Ladder { factor: self.ladder.factor, rungs: self.ladder.rungs }
    }

    pub fn window(&self, mesh: &RadialMesh) -> Result<Window> {
        match self.solver.window {
            Some([lo, hi]) => Window::new(lo, hi),
            None => Window::new(mesh.inner_radius(), 0.5 * (mesh.inner_radius() + mesh.outer_radius())),
        }
    }

    /// The named coefficient, or `None` when absent.
    pub fn profile(&self, name: &str, mm: &ModelManifold) -> Result<Option<PotentialProfile>> {
        self.coefficients.get(name).map(|p| p.build(mm, &self.base_dir)).transpose()
    }

    /// The named coefficient, defaulting to zero.
    pub fn profile_or_zero(&self, name: &str, mm: &ModelManifold) -> Result<PotentialProfile> {
        Ok(self.profile(name, mm)?.unwrap_or_else(PotentialProfile::zero))
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity> {
        match self
            .nonlinearity
            .as_ref()
            .ok_or_else(|| bad("nonlinearity", "this subcommand needs a [nonlinearity] section"))?
        {
            NonlinearitySpec::Power { exponent } => Ok(Nonlinearity::power(*exponent)),
            NonlinearitySpec::PowerSum { terms } => {
                let t1 = terms.clone();
                let t2 = terms.clone();
                let t3 = terms.clone();
                Ok(Nonlinearity::new("power_sum", move |t| t1.iter().map(|[c, s]| c * t.powf(*s)).sum())
                    .with_derivative(move |t| t2.iter().map(|[c, s]| c * s * t.powf(s - 1.0)).sum())
                    .with_primitive(move |t| t3.iter().map(|[c, s]| c * t.powf(s + 1.0) / (s + 1.0)).sum()))
            }
        }
    }
}

impl ProfileSpec {
    fn validate(&self, field: &str) -> Result<()> {
        match self {
            ProfileSpec::Bump { width, .. } => positive(&format!("{field}.width"), *width),
            ProfileSpec::Restricted { lo, hi, of } => {
                if !(hi > lo) {
                    return Err(bad(field, format!("need lo < hi, got [{lo}, {hi}]")));
                }
                of.validate(&format!("{field}.of"))
            }
            ProfileSpec::Sum { terms } => {
                terms.iter().enumerate().try_for_each(|(i, t)| t.validate(&format!("{field}.terms[{i}]")))
            }
            ProfileSpec::Scaled { of, .. } | ProfileSpec::PositivePart { of } | ProfileSpec::NegativePart { of } => {
                of.validate(&format!("{field}.of"))
            }
            _ => Ok(()),
        }
    }

    pub fn build(&self, mm: &ModelManifold, base: &Path) -> Result<PotentialProfile> {
        Ok(match self {
            ProfileSpec::Constant { value } => PotentialProfile::Constant(*value),
            ProfileSpec::Hardy { scale } => PotentialProfile::hardy(mm, *scale),
            ProfileSpec::Bump { center, width, height } => {
                PotentialProfile::Bump { center: *center, width: *width, height: *height }
            }
            ProfileSpec::Power { coefficient, exponent } => {
                let (c, e) = (*coefficient, *exponent);
                PotentialProfile::function(move |r| c * (1.0 + r).powf(e))
            }
            ProfileSpec::Table { path } => {
                let p = if path.is_absolute() { path.clone() } else { base.join(path) };
                PotentialProfile::Tabulated(Table::from_csv(&p)?)
            }
            ProfileSpec::Sum { terms } => {
                PotentialProfile::Sum(terms.iter().map(|t| t.build(mm, base)).collect::<Result<_>>()?)
            }
            ProfileSpec::Scaled { factor, of } => of.build(mm, base)?.scaled(*factor),
            ProfileSpec::Restricted { lo, hi, of } => of.build(mm, base)?.restricted(*lo, *hi),
            ProfileSpec::PositivePart { of } => of.build(mm, base)?.positive_part(),
            ProfileSpec::NegativePart { of } => of.build(mm, base)?.negative_part(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
[model]
kind = "hyperbolic"
m = 3
kappa = 1.0

[domain]
kind = "ball"
outer = 4.0
elements = 100

[coefficients.a]
kind = "hardy"
scale = 0.5

[coefficients.b]
kind = "sum"
terms = [{ kind = "constant", value = 1.0 }, { kind = "bump", center = 1.0, width = 0.5, height = -1.0 }]

[nonlinearity]
kind = "power"
exponent = 3.0
"#;

    #[test]
    fn parses_nested_profiles() {
        let s = Scenario::parse(BASIC).unwrap();
        let mm = s.model().unwrap();
        let b = s.profile("b", &mm).unwrap().unwrap();
        assert!((b.eval(1.0).unwrap()).abs() < 1e-15);
        assert_eq!(b.eval(3.0).unwrap(), 1.0);
        assert_eq!(s.mesh(&mm).unwrap().n_elements(), 100);
    }

    #[test]
    fn negative_radius_names_the_field() {
        let err = Scenario::parse(&BASIC.replace("outer = 4.0", "outer = -4.0")).unwrap_err();
        assert!(err.to_string().contains("domain.outer"), "{err}");
    }

    #[test]
    fn unknown_field_reports_line() {
        let err = Scenario::parse(&BASIC.replace("elements = 100", "elemnts = 100")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line") && msg.contains("elemnts"), "{msg}");
    }
}
