//! Declarative scenario files.
//!
//! A scenario is a JSON object with a fixed envelope (`id`, `kind`, `seed`,
//! `params`, `expect`). `params` is decoded against the parameter type of
//! the kind, so unknown or misspelled fields are rejected rather than
//! silently ignored.

use anyhow::{bail, Context, Result};
use mhsets::fields::{Grid, Shape};
use mhsets::flow::FlowOptions;
use mhsets::predicate::{Ambient, ProbeFamily};
use mhsets::varifold::{Region, Schedule};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    MhCheck,
    Barrier,
    Tube,
    VarifoldAudit,
    Blowup,
    Flow,
    DistanceSet,
    Counterexample,
}

impl Kind {
    pub const ALL: [Kind; 8] = [
        Kind::MhCheck,
        Kind::Barrier,
        Kind::Tube,
        Kind::VarifoldAudit,
        Kind::Blowup,
        Kind::Flow,
        Kind::DistanceSet,
        Kind::Counterexample,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::MhCheck => "mh-check",
            Kind::Barrier => "barrier",
            Kind::Tube => "tube",
            Kind::VarifoldAudit => "varifold-audit",
            Kind::Blowup => "blowup",
            Kind::Flow => "flow",
            Kind::DistanceSet => "distance-set",
            Kind::Counterexample => "counterexample",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Pass,
    Violation,
}

/// One numeric or structural assertion on the report, addressed by a JSON
/// pointer into the `result` object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Check {
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equals: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    #[serde(default)]
    pub outcome: Option<Outcome>,
    #[serde(default)]
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub params: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expect>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).context("scenario does not match the schema")?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("loading {}", path.display()))
    }

    /// Envelope checks plus a full decode of `params` for the kind.
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() || !self.id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            bail!("scenario id must be nonempty and use only [A-Za-z0-9_-], got {:?}", self.id);
        }
        if let Some(e) = &self.expect {
            for c in &e.checks {
                if !c.path.starts_with('/') {
                    bail!("check path {:?} must be a JSON pointer starting with '/'", c.path);
                }
                let numeric = c.target.is_some() || c.min.is_some() || c.max.is_some();
                if c.equals.is_none() && !numeric {
                    bail!("check on {} asserts nothing", c.path);
                }
                if c.target.is_some() && c.rel.is_none() && c.abs.is_none() {
                    bail!("check on {} has a target but no rel or abs tolerance", c.path);
                }
            }
        }
        self.task().map(|_| ())
    }

    pub fn task(&self) -> Result<Task> {
        fn de<T: for<'a> Deserialize<'a>>(v: &Value) -> Result<T> {
            T::deserialize(v).context("invalid params")
        }
        let p = &self.params;
        Ok(match self.kind {
            Kind::MhCheck => Task::MhCheck(de(p)?),
            Kind::Barrier => Task::Barrier(de(p)?),
            Kind::Tube => Task::Tube(de(p)?),
            Kind::VarifoldAudit => Task::VarifoldAudit(de(p)?),
            Kind::Blowup => Task::Blowup(de(p)?),
            Kind::Flow => Task::Flow(de(p)?),
            Kind::DistanceSet => Task::DistanceSet(de(p)?),
            Kind::Counterexample => Task::Counterexample(de(p)?),
        })
    }
}

#[derive(Debug, Clone)]
pub enum Task {
    MhCheck(MhCheck),
    Barrier(Barrier),
    Tube(Tube),
    VarifoldAudit(VarifoldAudit),
    Blowup(Blowup),
    Flow(Flow),
    DistanceSet(DistanceSet),
    Counterexample(Counterexample),
}

/// Closed sets from the fixture registry, or inline samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "fixture", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SetSpec {
    Singleton { dim: usize, resolution: f64 },
    Sphere { dim: usize, radius: f64, count: usize },
    Plane { half: f64, resolution: f64 },
    HalfPlane { half: f64, resolution: f64 },
    Segment { half: f64, resolution: f64 },
    /// Lateral surface of the cylinder about the `x₃` axis.
    Cylinder { radius: f64, half_length: f64, resolution: f64 },
    /// Lattice points of `{|x₃| ≤ half_width}`.
    Slab { half: f64, half_width: f64, resolution: f64 },
    Points { points: Vec<Vec<f64>>, resolution: f64 },
}

/// Uniform grids, either a cube about the origin or an explicit box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GridDesc {
    Cube {
        dim: usize,
        half: f64,
        #[serde(default)]
        count: Option<usize>,
        #[serde(default)]
        spacing: Option<f64>,
    },
    Box { lower: Vec<f64>, upper: Vec<f64>, counts: Vec<usize> },
}

impl GridDesc {
    pub fn build(&self) -> Result<Grid> {
        Ok(match self {
            GridDesc::Cube { dim, half, count: Some(c), spacing: None } => Grid::cube(*dim, *half, *c)?,
            GridDesc::Cube { dim, half, count: None, spacing: Some(dx) } => Grid::cube_with_spacing(*dim, *half, *dx)?,
            GridDesc::Cube { .. } => bail!("cube grid needs exactly one of count and spacing"),
            GridDesc::Box { lower, upper, counts } => Grid::new(lower.clone(), upper.clone(), counts.clone())?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProbeSpec {
    /// `k + b·(x − c) + ½(x − c)ᵀA(x − c)` with `A` given by rows.
    Quadratic {
        center: Vec<f64>,
        linear: Vec<f64>,
        matrix: Vec<Vec<f64>>,
        #[serde(default)]
        constant: f64,
    },
    /// `s·|x − c|²`.
    Radial { center: Vec<f64>, s: f64 },
    /// `e^{αu}` with `u` the signed distance of an analytic shape.
    ExpBarrier { shape: Shape, alpha: f64 },
}

/// Bisection of the critical `h` between `lo` (violating) and `hi` (passing).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bisect {
    pub lo: f64,
    pub hi: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MhCheck {
    pub set: SetSpec,
    pub m: usize,
    pub h: f64,
    /// A single explicit probe; otherwise the seeded probe search runs.
    #[serde(default)]
    pub probe: Option<ProbeSpec>,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default)]
    pub families: Option<Vec<ProbeFamily>>,
    #[serde(default)]
    pub bisect: Option<Bisect>,
}

fn default_budget() -> usize {
    200
}

/// Region whose boundary is probed: the analytic shape, or its signed
/// distance sampled on `grid`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Barrier {
    pub set: SetSpec,
    pub region: Shape,
    #[serde(default)]
    pub grid: Option<GridDesc>,
    pub m: usize,
    pub h: f64,
    /// Contact distance; defaults to the grid spacing or the set resolution.
    #[serde(default)]
    pub cell: Option<f64>,
}

/// Initial second fundamental form, either diagonal or by rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum FormSpec {
    Diag(Vec<f64>),
    Rows(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tube {
    /// Ambient dimension; the form has size `n − 1`.
    pub n: usize,
    #[serde(rename = "K")]
    pub k: f64,
    pub form: FormSpec,
    pub s: f64,
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "fixture", rename_all = "kebab-case", deny_unknown_fields)]
pub enum VarifoldSpec {
    UnitSquare { theta: f64 },
    Plane { half: f64, k: usize },
    Disk { radius: f64, k: usize },
    Octasphere { radius: f64, level: u32 },
    Counterexample { n: usize, resolution: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldSpec {
    /// `x/|x|`.
    RadialUnit,
    /// `X(x) = x`.
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityAt {
    pub point: Vec<f64>,
    pub radii: Vec<f64>,
}

/// Function whose gradient field feeds the divergence audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AuditFunction {
    Cubic { center: Vec<f64>, scale: f64 },
    Probe { probe: ProbeSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarifoldAudit {
    pub varifold: VarifoldSpec,
    #[serde(default)]
    pub masses: Vec<Region>,
    #[serde(default)]
    pub boundary_masses: Vec<Region>,
    #[serde(default)]
    pub first_variation: Vec<FieldSpec>,
    #[serde(default)]
    pub density: Vec<DensityAt>,
    #[serde(default)]
    pub divergence: Option<AuditFunction>,
    #[serde(default)]
    pub gap_alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "fixture", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilySpec {
    MultiplicityPlane { count: usize, half: f64, k: usize },
    BoundedDisk { count: usize, k: usize },
    HalfPlane { count: usize, half: f64, k: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Blowup {
    pub family: FamilySpec,
    pub grid: GridDesc,
    pub r: f64,
    #[serde(default)]
    pub schedule: Schedule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Flow {
    pub region: Shape,
    pub grid: GridDesc,
    pub h: f64,
    /// Obstacle that must stay inside the flowing region.
    #[serde(default)]
    pub z: Option<SetSpec>,
    #[serde(default)]
    pub options: FlowOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceSet {
    pub set: SetSpec,
    pub s: f64,
    pub m: usize,
    pub h: f64,
    #[serde(default = "flat")]
    pub ambient: Ambient,
    #[serde(default = "default_budget")]
    pub budget: usize,
}

fn flat() -> Ambient {
    Ambient::Flat
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Counterexample {
    /// Sequence indices to build.
    pub n: Vec<usize>,
    pub resolution: f64,
    /// Points `x` (on the axis or the graph) where the density is compared
    /// with the declared profile.
    #[serde(default)]
    pub density: Vec<DensityAt>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_are_rejected() {
        let ok = r#"{"id":"a","kind":"mh-check","params":{"set":{"fixture":"segment","half":1,"resolution":0.1},"m":1,"h":0}}"#;
        assert!(Scenario::parse(ok).is_ok());
        let typo = ok.replace("\"m\":1", "\"mm\":1");
        assert!(Scenario::parse(&typo).is_err());
        let kind = ok.replace("mh-check", "mh-chek");
        assert!(Scenario::parse(&kind).is_err());
        let top = ok.replace("\"kind\"", "\"extra\":1,\"kind\"");
        assert!(Scenario::parse(&top).is_err());
    }

    #[test]
    fn ids_and_checks_are_validated() {
        let base = |id: &str, expect: &str| {
            format!(r#"{{"id":"{id}","kind":"tube","params":{{"n":3,"K":0,"form":{{"diag":[1,1]}},"s":0.1,"m":1}}{expect}}}"#)
        };
        assert!(Scenario::parse(&base("ok-1", "")).is_ok());
        assert!(Scenario::parse(&base("bad id", "")).is_err());
        assert!(Scenario::parse(&base("x", r#","expect":{"checks":[{"path":"/a"}]}"#)).is_err());
        assert!(Scenario::parse(&base("x", r#","expect":{"checks":[{"path":"/a","target":1}]}"#)).is_err());
        assert!(Scenario::parse(&base("x", r#","expect":{"checks":[{"path":"a","min":1}]}"#)).is_err());
    }

    #[test]
    fn grid_descriptions() {
        let g: GridDesc = serde_json::from_str(r#"{"type":"cube","dim":2,"half":1,"count":21}"#).unwrap();
        assert_eq!(g.build().unwrap().counts(), &[21, 21]);
        let both: GridDesc = serde_json::from_str(r#"{"type":"cube","dim":2,"half":1,"count":21,"spacing":0.1}"#).unwrap();
        assert!(both.build().is_err());
    }
}
