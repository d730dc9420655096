//! Material structures on a chart: the per-group data schemas, pointwise
//! admissibility and 0-deformability.

mod deform;
mod scene;

pub use deform::{deformability, sym2_deformability, DeformabilityReport, OrbitLabel, EIGEN_TOL};
pub use scene::{DEFAULT_TOL, Scene, SceneBox, SceneDatum, SceneError, SceneOptions, SceneStructure};

use crate::field_engine::{
    eval33, ChartBox, Density, EvalError, FieldError, FieldExpr, OneForm, SymTensor, Tensor11, TwoForm,
    VectorField,
};
use crate::gconnection::FrameField;
use crate::lie_catalog::{entry, f_model, BCase, CatalogError, GroupId, Variant};
use crate::tensor_core::{canonical_case, sym2_orbit_mat, Mat3};
use nalgebra::{DMatrix, Vector3};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StructureError {
    #[error("schema violation for {group}: '{constraint}' fails at ({}, {}, {}) (residual {residual:e})", point[0], point[1], point[2])]
    SchemaViolation { group: String, constraint: String, point: [f64; 3], residual: f64 },
    #[error("group {group} needs datum '{name}' ({kind})")]
    MissingDatum { group: String, name: String, kind: &'static str },
    #[error("group {group} has no datum named '{name}'")]
    UnexpectedDatum { group: String, name: String },
    #[error("datum '{name}' must be given as {expected}")]
    WrongKind { name: String, expected: &'static str },
    #[error("no data schema for group {0}")]
    NoSchema(String),
    #[error("invalid chart box")]
    BadBox,
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

impl From<EvalError> for StructureError {
    fn from(e: EvalError) -> Self {
        StructureError::Field(FieldError::Domain(e))
    }
}

/// Kinds of geometric data a schema can ask for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataKind {
    /// one-dimensional distribution, given by a spanning vector field
    Line,
    /// two-dimensional distribution, given by two spanning fields
    Plane,
    Vector,
    OneForm,
    TwoForm,
    Volume,
    Metric,
    Tensor11,
    /// adapted frame presenting the tensors of the group model
    Frame,
}

impl DataKind {
    pub fn name(self) -> &'static str {
        match self {
            DataKind::Line => "line",
            DataKind::Plane => "plane",
            DataKind::Vector => "vector",
            DataKind::OneForm => "one-form",
            DataKind::TwoForm => "two-form",
            DataKind::Volume => "volume",
            DataKind::Metric => "metric",
            DataKind::Tensor11 => "tensor11",
            DataKind::Frame => "frame",
        }
    }

    /// Scene key carrying this kind.
    pub fn scene_key(self) -> &'static str {
        match self {
            DataKind::Line | DataKind::Vector => "vector",
            DataKind::Plane => "span",
            DataKind::OneForm => "form",
            DataKind::TwoForm => "two_form",
            DataKind::Volume => "density",
            DataKind::Metric => "metric",
            DataKind::Tensor11 => "tensor11",
            DataKind::Frame => "frame",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Presence {
    Required,
    Optional,
    /// one of several alternative presentations; all fields sharing the
    /// number must be given together
    Alternative(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldSpec {
    pub name: &'static str,
    pub kind: DataKind,
    pub presence: Presence,
}

/// Pointwise constraints between the data of a schema.
#[derive(Debug, Clone, Copy)]
pub enum Constraint {
    /// a line or vector lies in a plane
    Contains { sub: &'static str, plane: &'static str },
    /// a line or vector is transverse to a plane
    Transverse { sub: &'static str, plane: &'static str },
    /// the form vanishes on a line, vector or plane
    Annihilates { form: &'static str, of: &'static str },
    /// the form does not vanish identically on a plane
    NonzeroOn { form: &'static str, plane: &'static str },
    /// lines/vectors pointwise linearly independent
    Independent(&'static [&'static str]),
    /// two planes spanning the tangent space
    PlanesTransverse(&'static str, &'static str),
    /// a^b != 0 for one-forms or a two-form and a one-form
    WedgeNonzero(&'static str, &'static str),
    /// (positive, negative) counts of the metric
    Signature { metric: &'static str, p: usize, m: usize },
    /// g(v, v) = value (value 0 is tested relative to |g||v|^2)
    Norm { metric: &'static str, v: &'static str, value: f64 },
    /// the volume density equals sqrt|det g|
    VolumeOf { volume: &'static str, metric: &'static str },
    /// pointwise in the orbit of the given model endomorphism
    Orbit { h: &'static str, model: fn() -> Mat3, label: &'static str },
    /// 0-deformable with the given canonical tag
    Deformable { h: &'static str, tag: char },
}

impl Constraint {
    pub fn name(&self) -> String {
        match *self {
            Constraint::Contains { sub, plane } => format!("{sub} in {plane}"),
            Constraint::Transverse { sub, plane } => format!("{sub} transverse to {plane}"),
            Constraint::Annihilates { form, of } => format!("{form}({of}) = 0"),
            Constraint::NonzeroOn { form, plane } => format!("{form} nonzero on {plane}"),
            Constraint::Independent(names) => format!("{} independent", names.join(", ")),
            Constraint::PlanesTransverse(a, b) => format!("{a} + {b} = TM"),
            Constraint::WedgeNonzero(a, b) => format!("{a}^{b} != 0"),
            Constraint::Signature { metric, p, m } => format!("{metric} signature ({p},{m})"),
            Constraint::Norm { metric, v, value } => format!("{metric}({v},{v}) = {value}"),
            Constraint::VolumeOf { volume, metric } => format!("{volume} is the volume of {metric}"),
            Constraint::Orbit { h, label, .. } => format!("{h} in the orbit of {label}"),
            Constraint::Deformable { h, tag } => format!("{h} 0-deformable of case ({tag})"),
        }
    }

    fn names(&self) -> Vec<&'static str> {
        match *self {
            Constraint::Contains { sub, plane } | Constraint::Transverse { sub, plane } => vec![sub, plane],
            Constraint::Annihilates { form, of } => vec![form, of],
            Constraint::NonzeroOn { form, plane } => vec![form, plane],
            Constraint::Independent(names) => names.to_vec(),
            Constraint::PlanesTransverse(a, b) | Constraint::WedgeNonzero(a, b) => vec![a, b],
            Constraint::Signature { metric, .. } => vec![metric],
            Constraint::Norm { metric, v, .. } => vec![metric, v],
            Constraint::VolumeOf { volume, metric } => vec![volume, metric],
            Constraint::Orbit { h, .. } | Constraint::Deformable { h, .. } => vec![h],
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Schema {
    pub key: &'static str,
    pub fields: &'static [FieldSpec],
    pub constraints: &'static [Constraint],
    /// how the data (and alternative presentations) are read
    pub note: &'static str,
}

const fn req(name: &'static str, kind: DataKind) -> FieldSpec {
    FieldSpec { name, kind, presence: Presence::Required }
}

const fn opt(name: &'static str, kind: DataKind) -> FieldSpec {
    FieldSpec { name, kind, presence: Presence::Optional }
}

const fn alt(name: &'static str, kind: DataKind, k: u8) -> FieldSpec {
    FieldSpec { name, kind, presence: Presence::Alternative(k) }
}

use DataKind as K;

const VOL: FieldSpec = req("Omega", K::Volume);
const FRAME: &[FieldSpec] = &[req("Y", K::Frame), VOL];
const FRAME_NOTE: &str = "the model tensors of the group are the ones with constant components in the frame Y";

fn nilpotent_model() -> Mat3 {
    Mat3::new(0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0)
}

fn projector_model() -> Mat3 {
    Mat3::from_diagonal(&Vector3::new(0.0, 0.0, 1.0))
}

macro_rules! schema {
    ($key:expr, $fields:expr, $cons:expr) => {
        Schema { key: $key, fields: $fields, constraints: $cons, note: "" }
    };
    ($key:expr, $fields:expr, $cons:expr, $note:expr) => {
        Schema { key: $key, fields: $fields, constraints: $cons, note: $note }
    };
}

static SCHEMAS: &[Schema] = &[
    schema!("1A", &[req("L", K::Line), req("D", K::Plane), VOL], &[Constraint::Contains { sub: "L", plane: "D" }]),
    schema!("1B/tensor", FRAME, &[], FRAME_NOTE),
    schema!(
        "1B/alpha=0",
        &[req("omega", K::OneForm), req("L", K::Line), VOL],
        &[Constraint::Annihilates { form: "omega", of: "L" }]
    ),
    schema!(
        "1B/beta=0",
        &[req("D", K::Plane), req("omega", K::OneForm), VOL],
        &[Constraint::NonzeroOn { form: "omega", plane: "D" }],
        "the tangent covector is omega restricted to D"
    ),
    schema!("1B/gamma=0", &[req("D", K::Plane), req("X", K::Vector), VOL], &[Constraint::Contains { sub: "X", plane: "D" }]),
    schema!("1C", &[req("X", K::Vector), req("omega", K::OneForm), VOL], &[Constraint::Annihilates { form: "omega", of: "X" }]),
    schema!("2A", &[req("L1", K::Line), req("L2", K::Line), VOL], &[Constraint::Independent(&["L1", "L2"])]),
    schema!("2B/generic", FRAME, &[], "L1 = <Y2>, L2 = <Y3>; the tangent tensors live on <Y2, Y3>"),
    schema!(
        "2B/alpha=0",
        &[req("L1", K::Line), req("L2", K::Line), req("omega", K::OneForm), VOL],
        &[
            Constraint::Independent(&["L1", "L2"]),
            Constraint::Annihilates { form: "omega", of: "L1" },
            Constraint::Annihilates { form: "omega", of: "L2" },
        ]
    ),
    schema!("2B/beta=0", &[req("X", K::Vector), req("L", K::Line), VOL], &[Constraint::Independent(&["X", "L"])]),
    schema!(
        "2C",
        &[req("X1", K::Vector), req("X2", K::Vector), alt("Omega", K::Volume, 1), alt("omega", K::OneForm, 2)],
        &[
            Constraint::Independent(&["X1", "X2"]),
            Constraint::Annihilates { form: "omega", of: "X1" },
            Constraint::Annihilates { form: "omega", of: "X2" },
        ],
        "omega(Z) = Omega(X1, X2, Z); either one determines the other"
    ),
    schema!("3A", &[req("D1", K::Plane), req("D2", K::Plane), VOL], &[Constraint::PlanesTransverse("D1", "D2")]),
    schema!("3B", FRAME, &[], "L = <Y1>; the transverse tensors live on the quotient by L"),
    schema!(
        "3C",
        &[req("omega1", K::OneForm), req("omega2", K::OneForm), VOL],
        &[Constraint::WedgeNonzero("omega1", "omega2")]
    ),
    schema!(
        "4A",
        &[req("D", K::Plane), req("L1", K::Line), req("L2", K::Line), VOL],
        &[Constraint::Contains { sub: "L1", plane: "D" }, Constraint::Transverse { sub: "L2", plane: "D" }]
    ),
    schema!("4B", FRAME, &[], "the 2B data of the frame together with D' = <Y1, Y2>"),
    schema!(
        "4C",
        &[req("X1", K::Vector), req("X2", K::Vector), req("omega", K::OneForm), req("Dp", K::Plane)],
        &[
            Constraint::Independent(&["X1", "X2"]),
            Constraint::Annihilates { form: "omega", of: "X1" },
            Constraint::Annihilates { form: "omega", of: "X2" },
            Constraint::Contains { sub: "X1", plane: "Dp" },
            Constraint::Transverse { sub: "X2", plane: "Dp" },
        ]
    ),
    schema!(
        "5A",
        &[alt("L1", K::Line, 1), alt("L2", K::Line, 1), alt("L3", K::Line, 1), alt("h", K::Tensor11, 2), VOL],
        &[Constraint::Independent(&["L1", "L2", "L3"]), Constraint::Deformable { h: "h", tag: 'b' }],
        "h is read through its eigenlines (only when h is constant)"
    ),
    schema!("5B", FRAME, &[], "L_i = <Y_i>"),
    schema!(
        "5C",
        &[req("X1", K::Vector), req("X2", K::Vector), req("X3", K::Vector)],
        &[Constraint::Independent(&["X1", "X2", "X3"])]
    ),
    schema!("6A", FRAME, &[], "L = <Y3>; the transverse conformal class makes Y1, Y2 orthonormal"),
    schema!("6B", FRAME, &[], "L = <Y3>; the transverse metric makes Y1, Y2 orthonormal"),
    schema!("7A", FRAME, &[], "D = <Y1, Y2> with the conformal class making Y1, Y2 orthonormal"),
    schema!("7B", FRAME, &[], "D = <Y1, Y2> with the metric making Y1, Y2 orthonormal"),
    schema!(
        "8A",
        &[req("h", K::Tensor11), VOL],
        &[Constraint::Orbit { h: "h", model: f_model, label: "the f-structure model" }]
    ),
    schema!(
        "8B",
        &[req("g", K::Metric), req("X", K::Vector), opt("Omega", K::Volume)],
        &[
            Constraint::Signature { metric: "g", p: 3, m: 0 },
            Constraint::Norm { metric: "g", v: "X", value: 1.0 },
            Constraint::VolumeOf { volume: "Omega", metric: "g" },
        ]
    ),
    schema!("9", &[VOL], &[]),
    schema!("10", &[req("D", K::Plane), VOL], &[]),
    schema!("11", &[req("L", K::Line), VOL], &[]),
    schema!("12", &[req("omega", K::OneForm), VOL], &[]),
    schema!("13", &[req("X", K::Vector), VOL], &[]),
    schema!(
        "14",
        &[alt("D", K::Plane, 1), alt("L", K::Line, 1), alt("h", K::Tensor11, 2), VOL],
        &[
            Constraint::Transverse { sub: "L", plane: "D" },
            Constraint::Orbit { h: "h", model: projector_model, label: "the projector diag(0,0,1)" },
        ],
        "(D, L) is read as the projector h onto L along D"
    ),
    schema!(
        "15",
        &[req("eta", K::TwoForm), req("omega", K::OneForm)],
        &[Constraint::WedgeNonzero("eta", "omega")]
    ),
    schema!(
        "16",
        &[req("g", K::Metric), opt("Omega", K::Volume)],
        &[Constraint::Signature { metric: "g", p: 3, m: 0 }, Constraint::VolumeOf { volume: "Omega", metric: "g" }]
    ),
    schema!(
        "19",
        &[req("g", K::Metric), opt("Omega", K::Volume)],
        &[Constraint::Signature { metric: "g", p: 1, m: 2 }, Constraint::VolumeOf { volume: "Omega", metric: "g" }]
    ),
    schema!("20", FRAME, &[], FRAME_NOTE),
    schema!(
        "23",
        &[req("g", K::Metric), req("L", K::Line), opt("Omega", K::Volume)],
        &[
            Constraint::Signature { metric: "g", p: 1, m: 2 },
            Constraint::Norm { metric: "g", v: "L", value: 0.0 },
            Constraint::VolumeOf { volume: "Omega", metric: "g" },
        ]
    ),
    schema!(
        "24",
        &[req("h", K::Tensor11), VOL],
        &[Constraint::Orbit { h: "h", model: nilpotent_model, label: "the nilpotent shift u" }]
    ),
    schema!(
        "26",
        &[req("g", K::Metric), req("X", K::Vector), opt("Omega", K::Volume)],
        &[
            Constraint::Signature { metric: "g", p: 1, m: 2 },
            Constraint::Norm { metric: "g", v: "X", value: 0.0 },
            Constraint::VolumeOf { volume: "Omega", metric: "g" },
        ]
    ),
];

pub fn schemas() -> &'static [Schema] {
    SCHEMAS
}

/// Key of the schema used by a group id.
pub fn schema_key(id: &GroupId) -> Result<String, StructureError> {
    let no = || StructureError::NoSchema(id.to_string());
    if !id.is_algebraic() {
        return Err(no());
    }
    let f = id.family;
    Ok(match (f, id.variant) {
        (1, Variant::B) => match id.b_case().ok_or_else(no)? {
            BCase::AlphaGamma | BCase::BetaGamma | BCase::AlphaBeta => "1B/tensor".into(),
            BCase::AlphaZero => "1B/alpha=0".into(),
            BCase::BetaZero => "1B/beta=0".into(),
            BCase::GammaZero => "1B/gamma=0".into(),
            BCase::Generic => return Err(no()),
        },
        (2, Variant::B) => match id.b_case().ok_or_else(no)? {
            BCase::Generic => "2B/generic".into(),
            BCase::AlphaZero => "2B/alpha=0".into(),
            BCase::BetaZero => "2B/beta=0".into(),
            _ => return Err(no()),
        },
        (_, Variant::Plain) => format!("{f}"),
        (_, v) => format!("{f}{}", match v {
            Variant::A => "A",
            Variant::B => "B",
            Variant::C => "C",
            Variant::Plain => unreachable!(),
        }),
    })
}

pub fn schema(id: &GroupId) -> Result<&'static Schema, StructureError> {
    let key = schema_key(id)?;
    SCHEMAS.iter().find(|s| s.key == key).ok_or_else(|| StructureError::NoSchema(id.to_string()))
}

/// One named datum.
#[derive(Debug, Clone, PartialEq)]
pub enum Datum {
    Vector(VectorField),
    Span(Vec<VectorField>),
    Form(OneForm),
    TwoForm(TwoForm),
    Density(Density),
    Metric(SymTensor),
    Tensor11(Tensor11),
    Frame(Vec<VectorField>),
}

impl Datum {
    pub fn scene_key(&self) -> &'static str {
        match self {
            Datum::Vector(_) => "vector",
            Datum::Span(_) => "span",
            Datum::Form(_) => "form",
            Datum::TwoForm(_) => "two_form",
            Datum::Density(_) => "density",
            Datum::Metric(_) => "metric",
            Datum::Tensor11(_) => "tensor11",
            Datum::Frame(_) => "frame",
        }
    }

    fn fits(&self, kind: DataKind) -> bool {
        match (self, kind) {
            (Datum::Vector(_), K::Line | K::Vector) => true,
            (Datum::Span(v), K::Plane) => v.len() == 2,
            (Datum::Form(_), K::OneForm) => true,
            (Datum::TwoForm(_), K::TwoForm) => true,
            (Datum::Density(_), K::Volume) => true,
            (Datum::Metric(_), K::Metric) => true,
            (Datum::Tensor11(_), K::Tensor11) => true,
            (Datum::Frame(v), K::Frame) => v.len() == 3,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialStructure {
    pub id: GroupId,
    pub data: BTreeMap<String, Datum>,
    pub bx: ChartBox,
}

macro_rules! getter {
    ($fn:ident, $var:ident, $ty:ty, $what:expr) => {
        pub fn $fn(&self, name: &str) -> Result<&$ty, StructureError> {
            match self.data.get(name) {
                Some(Datum::$var(x)) => Ok(x),
                Some(_) => Err(StructureError::WrongKind { name: name.into(), expected: $what }),
                None => Err(self.missing(name, $what)),
            }
        }
    };
}

impl MaterialStructure {
    pub fn new(id: GroupId, bx: ChartBox) -> Self {
        MaterialStructure { id, data: BTreeMap::new(), bx }
    }

    pub fn with(mut self, name: &str, d: Datum) -> Self {
        self.data.insert(name.to_string(), d);
        self
    }

    pub fn has(&self, name: &str) -> bool {
        self.data.contains_key(name)
    }

    fn missing(&self, name: &str, kind: &'static str) -> StructureError {
        StructureError::MissingDatum { group: self.id.to_string(), name: name.into(), kind }
    }

    getter!(vector, Vector, VectorField, "vector");
    getter!(form, Form, OneForm, "form");
    getter!(two_form, TwoForm, TwoForm, "two_form");
    getter!(density, Density, Density, "density");
    getter!(metric, Metric, SymTensor, "metric");
    getter!(tensor11, Tensor11, Tensor11, "tensor11");

    pub fn span(&self, name: &str) -> Result<&[VectorField], StructureError> {
        match self.data.get(name) {
            Some(Datum::Span(x)) => Ok(x),
            Some(_) => Err(StructureError::WrongKind { name: name.into(), expected: "span" }),
            None => Err(self.missing(name, "span")),
        }
    }

    pub fn frame(&self, name: &str) -> Result<FrameField, StructureError> {
        match self.data.get(name) {
            Some(Datum::Frame(x)) => Ok(FrameField { fields: x.clone() }),
            Some(_) => Err(StructureError::WrongKind { name: name.into(), expected: "frame" }),
            None => Err(self.missing(name, "frame")),
        }
    }

    /// The volume density: Omega when given, otherwise derived (metric
    /// volume, or from omega for 2C).
    pub fn volume(&self) -> Result<Density, StructureError> {
        if let Ok(d) = self.density("Omega") {
            return Ok(d.clone());
        }
        if let Ok(g) = self.metric("g") {
            return Ok(Density(metric_volume(g)));
        }
        if self.has("X1") && self.has("X2") && self.has("omega") {
            // omega = b (X1 x X2)
            let c = cross(self.vector("X1")?, self.vector("X2")?);
            let w = self.form("omega")?;
            return Ok(Density(dot(&w.0, &c.0) / dot(&c.0, &c.0)));
        }
        Err(self.missing("Omega", "density"))
    }

    /// omega(Z) = Omega(X1, X2, Z), the 2C/4C one-form (given or derived).
    pub fn omega_from_volume(&self) -> Result<OneForm, StructureError> {
        if let Ok(w) = self.form("omega") {
            return Ok(w.clone());
        }
        let b = self.volume()?;
        let c = cross(self.vector("X1")?, self.vector("X2")?);
        Ok(OneForm(std::array::from_fn(|i| &b.0 * &c.0[i])))
    }

    /// The 14 projector h onto L along D, given directly or built from
    /// (D, L) as l (x) theta with theta(D) = 0 and theta(l) = 1.
    pub fn projector(&self) -> Result<Tensor11, StructureError> {
        if let Ok(h) = self.tensor11("h") {
            return Ok(h.clone());
        }
        let d = self.span("D")?;
        let l = self.vector("L")?;
        let n = cross(&d[0], &d[1]);
        let nl = dot(&n.0, &l.0);
        Ok(Tensor11(std::array::from_fn(|i| std::array::from_fn(|j| &l.0[i] * &n.0[j] / &nl))))
    }
}

pub fn cross(a: &VectorField, b: &VectorField) -> VectorField {
    let (a, b) = (&a.0, &b.0);
    VectorField([&a[1] * &b[2] - &a[2] * &b[1], &a[2] * &b[0] - &a[0] * &b[2], &a[0] * &b[1] - &a[1] * &b[0]])
}

pub fn dot(a: &[FieldExpr; 3], b: &[FieldExpr; 3]) -> FieldExpr {
    &a[0] * &b[0] + &a[1] * &b[1] + &a[2] * &b[2]
}

/// sqrt|det g| as an expression.
pub fn metric_volume(g: &SymTensor) -> FieldExpr {
    let m = |i: usize, j: usize| &g.0[i][j];
    let det = m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
        + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
    // |det| = sqrt(det^2)
    (&det * &det).sqrt().sqrt()
}

// pointwise helpers ---------------------------------------------------------

fn vectors_at(ms: &MaterialStructure, name: &str, p: &[f64; 3]) -> Result<Vec<Vector3<f64>>, StructureError> {
    Ok(match ms.data.get(name) {
        Some(Datum::Vector(v)) => vec![v.eval(p)?],
        Some(Datum::Span(s)) | Some(Datum::Frame(s)) => s.iter().map(|v| v.eval(p)).collect::<Result<_, _>>()?,
        Some(Datum::Form(w)) => vec![crate::field_engine::eval3(&w.0, p)?],
        _ => return Err(StructureError::WrongKind { name: name.into(), expected: "vector, span or form" }),
    })
}

fn smallest_singular(vs: &[Vector3<f64>]) -> f64 {
    let m = DMatrix::from_fn(3, vs.len(), |r, c| vs[c][r] / vs[c].norm().max(f64::MIN_POSITIVE));
    m.svd(false, false).singular_values.min()
}

fn normal(vs: &[Vector3<f64>]) -> Vector3<f64> {
    vs[0].cross(&vs[1])
}

fn rel(x: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        x / scale
    } else {
        f64::INFINITY
    }
}

/// (ok, residual) of a constraint at p.
fn check_at(ms: &MaterialStructure, c: &Constraint, p: &[f64; 3], tol: f64) -> Result<(bool, f64), StructureError> {
    Ok(match *c {
        Constraint::Contains { sub, plane } | Constraint::Transverse { sub, plane } => {
            let v = vectors_at(ms, sub, p)?[0];
            let n = normal(&vectors_at(ms, plane, p)?);
            let r = rel(v.dot(&n).abs(), v.norm() * n.norm());
            if matches!(c, Constraint::Contains { .. }) {
                (r <= tol, r)
            } else {
                (r > tol, r)
            }
        }
        Constraint::Annihilates { form, of } => {
            let w = vectors_at(ms, form, p)?[0];
            let r = vectors_at(ms, of, p)?
                .iter()
                .map(|v| rel(w.dot(v).abs(), w.norm() * v.norm()))
                .fold(0.0, f64::max);
            (r <= tol, r)
        }
        Constraint::NonzeroOn { form, plane } => {
            let w = vectors_at(ms, form, p)?[0];
            let r = vectors_at(ms, plane, p)?
                .iter()
                .map(|v| rel(w.dot(v).abs(), w.norm() * v.norm()))
                .fold(0.0, f64::max);
            (r > tol, r)
        }
        Constraint::Independent(names) => {
            let mut vs = Vec::new();
            for n in names {
                vs.extend(vectors_at(ms, n, p)?);
            }
            let r = smallest_singular(&vs);
            (r > tol, r)
        }
        Constraint::PlanesTransverse(a, b) => {
            let n1 = normal(&vectors_at(ms, a, p)?);
            let n2 = normal(&vectors_at(ms, b, p)?);
            let r = rel(n1.cross(&n2).norm(), n1.norm() * n2.norm());
            (r > tol, r)
        }
        Constraint::WedgeNonzero(a, b) => {
            let wb = vectors_at(ms, b, p)?[0];
            let r = match ms.data.get(a) {
                Some(Datum::TwoForm(eta)) => {
                    let e = eval33(&eta.0, p)?;
                    // eta as the vector (c23, -c13, c12)
                    let ev = Vector3::new(e[(1, 2)], -e[(0, 2)], e[(0, 1)]);
                    rel(ev.dot(&wb).abs(), ev.norm() * wb.norm())
                }
                _ => {
                    let wa = vectors_at(ms, a, p)?[0];
                    rel(wa.cross(&wb).norm(), wa.norm() * wb.norm())
                }
            };
            (r > tol, r)
        }
        Constraint::Signature { metric, p: np, m: nm } => {
            let g = ms.metric(metric)?.eval(p)?;
            match sym2_orbit_mat(&g, 1e-9) {
                Ok(o) => {
                    let ev = crate::tensor_core::symmetric_eigenvalues(&((g + g.transpose()) * 0.5));
                    let smallest = ev.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
                    (o.p == np && o.m == nm && o.rank == 3, smallest)
                }
                Err(_) => (false, (g - g.transpose()).norm()),
            }
        }
        Constraint::Norm { metric, v, value } => {
            let g = ms.metric(metric)?.eval(p)?;
            let x = vectors_at(ms, v, p)?[0];
            let q = x.dot(&(g * x));
            let r = if value == 0.0 { rel(q.abs(), g.norm() * x.norm_squared()) } else { (q - value).abs() };
            (r <= tol, r)
        }
        Constraint::VolumeOf { volume, metric } => {
            if !ms.has(volume) {
                return Ok((true, 0.0));
            }
            let b = ms.density(volume)?.0.eval(p)?;
            let g = ms.metric(metric)?.eval(p)?;
            let r = (b - g.determinant().abs().sqrt()).abs();
            (r <= tol * (1.0 + b.abs()), r)
        }
        Constraint::Orbit { h, model, .. } => {
            let m = ms.tensor11(h)?.eval(p)?;
            let target = canonical_case(&model(), tol).expect("model classifies");
            match canonical_case(&m, tol) {
                Ok(cc) if cc.tag() == target.tag() => {
                    let r = cc.eigen_data().iter().zip(target.eigen_data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    (r <= EIGEN_TOL, r)
                }
                _ => (false, 1.0),
            }
        }
        Constraint::Deformable { h, tag } => {
            // the pointwise part; constancy is checked over the whole grid
            let m = ms.tensor11(h)?.eval(p)?;
            match canonical_case(&m, tol) {
                Ok(cc) => (cc.tag() == tag, if cc.tag() == tag { 0.0 } else { 1.0 }),
                Err(_) => (false, 1.0),
            }
        }
    })
}

fn nonvanishing_at(d: &Datum, p: &[f64; 3]) -> Result<f64, StructureError> {
    Ok(match d {
        Datum::Vector(v) => v.eval(p)?.norm(),
        Datum::Form(w) => crate::field_engine::eval3(&w.0, p)?.norm(),
        Datum::TwoForm(e) => eval33(&e.0, p)?.norm(),
        Datum::Density(b) => b.0.eval(p)?.abs(),
        Datum::Span(s) | Datum::Frame(s) => {
            let vs: Vec<Vector3<f64>> = s.iter().map(|v| v.eval(p)).collect::<Result<_, _>>()?;
            if vs.iter().any(|v| v.norm() == 0.0) {
                0.0
            } else {
                smallest_singular(&vs)
            }
        }
        Datum::Metric(_) | Datum::Tensor11(_) => f64::INFINITY,
    })
}

/// First grid point (in grid order) where `f` reports a failure.
fn first_failure<F>(bx: &ChartBox, f: F) -> Result<Option<([f64; 3], f64)>, StructureError>
where
    F: Fn(&[f64; 3]) -> Result<(bool, f64), StructureError> + Sync,
{
    let pts = bx.points();
    let res: Vec<Result<(bool, f64), StructureError>> = pts.par_iter().map(&f).collect();
    for (p, r) in pts.iter().zip(res) {
        let (ok, resid) = r?;
        if !ok {
            return Ok(Some((*p, resid)));
        }
    }
    Ok(None)
}

/// Check the data against the group's schema on the grid. Reports the
/// first violated constraint with its point and residual.
pub fn validate(ms: &MaterialStructure, tol: f64) -> Result<(), StructureError> {
    entry(&ms.id)?;
    if !ms.bx.is_valid() {
        return Err(StructureError::BadBox);
    }
    let sc = schema(&ms.id)?;
    let group = ms.id.to_string();
    // presence and kinds
    for name in ms.data.keys() {
        if !sc.fields.iter().any(|f| f.name == name) {
            return Err(StructureError::UnexpectedDatum { group, name: name.clone() });
        }
    }
    for f in sc.fields {
        if let Some(d) = ms.data.get(f.name) {
            if !d.fits(f.kind) {
                return Err(StructureError::WrongKind { name: f.name.into(), expected: f.kind.scene_key() });
            }
        }
    }
    for f in sc.fields.iter().filter(|f| f.presence == Presence::Required) {
        if !ms.has(f.name) {
            return Err(ms.missing(f.name, f.kind.scene_key()));
        }
    }
    let alts: Vec<u8> = sc
        .fields
        .iter()
        .filter_map(|f| if let Presence::Alternative(k) = f.presence { Some(k) } else { None })
        .collect();
    if !alts.is_empty() {
        let complete = |k: u8| {
            sc.fields.iter().filter(|f| f.presence == Presence::Alternative(k)).all(|f| ms.has(f.name))
        };
        if !alts.iter().any(|&k| complete(k)) {
            let f = sc.fields.iter().find(|f| matches!(f.presence, Presence::Alternative(_)) && !ms.has(f.name)).unwrap();
            return Err(ms.missing(f.name, f.kind.scene_key()));
        }
    }
    let violation = |constraint: String, (point, residual): ([f64; 3], f64)| StructureError::SchemaViolation {
        group: group.clone(),
        constraint,
        point,
        residual,
    };
    // every datum nonvanishing / nondegenerate
    for f in sc.fields {
        if let Some(d) = ms.data.get(f.name) {
            let what = match f.kind {
                K::Plane | K::Frame => format!("{} nondegenerate", f.name),
                _ => format!("{} nonvanishing", f.name),
            };
            if let Some(w) = first_failure(&ms.bx, |p| {
                let r = nonvanishing_at(d, p)?;
                Ok((r > tol, r))
            })? {
                return Err(violation(what, w));
            }
        }
    }
    for c in sc.constraints {
        if !c.names().iter().all(|n| ms.has(n) || (*n == "Omega" && matches!(c, Constraint::VolumeOf { .. }))) {
            continue;
        }
        if let Some(w) = first_failure(&ms.bx, |p| check_at(ms, c, p, tol))? {
            return Err(violation(c.name(), w));
        }
        if let Constraint::Deformable { h, .. } = c {
            let rep = deformability(ms.tensor11(h)?, &ms.bx, tol)?;
            if !rep.constant {
                let (_, q) = rep.witness.unwrap();
                return Err(violation(c.name(), (q, 1.0)));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_schema_is_reachable() {
        for id in crate::lie_catalog::representative_ids() {
            if entry(&id).is_ok() {
                assert!(schema(&id).is_ok(), "{id}");
            }
        }
    }

    #[test]
    fn constraint_names_refer_to_fields() {
        for s in schemas() {
            for c in s.constraints {
                for n in c.names() {
                    assert!(s.fields.iter().any(|f| f.name == n), "{} {}", s.key, n);
                }
            }
        }
    }
}
