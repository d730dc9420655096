//! The `.scene` text format (TOML). See docs/scene-format.md.

use super::{Datum, MaterialStructure};
use crate::field_engine::{parse, ChartBox, Density, FieldExpr, OneForm, SymTensor, Tensor11, TwoForm, VectorField, E3, E33};
use crate::lie_catalog::GroupId;
use serde::{Deserialize, Deserializer, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("scene syntax: {0}")]
    Syntax(String),
    #[error("{at}: {message}")]
    At { at: String, message: String },
}

fn at(at: impl Into<String>, message: impl ToString) -> SceneError {
    SceneError::At { at: at.into(), message: message.to_string() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneStructure {
    pub group: String,
}

/// One `[data.NAME]` table; exactly one key is set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDatum {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vector: Option<[String; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub span: Option<Vec<[String; 3]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub form: Option<[String; 3]>,
    /// coefficients of dx1^dx2, dx1^dx3, dx2^dx3
    #[serde(skip_serializing_if = "Option::is_none")]
    pub two_form: Option<[String; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric: Option<[[String; 3]; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tensor11: Option<[[String; 3]; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frame: Option<Vec<[String; 3]>>,
}

fn num3<'de, D: Deserializer<'de>>(d: D) -> Result<[f64; 3], D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Num {
        I(i64),
        F(f64),
    }
    let v = <[Num; 3]>::deserialize(d)?;
    Ok(v.map(|x| match x {
        Num::I(i) => i as f64,
        Num::F(f) => f,
    }))
}

fn num<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Num {
        I(i64),
        F(f64),
    }
    Ok(Option::<Num>::deserialize(d)?.map(|x| match x {
        Num::I(i) => i as f64,
        Num::F(f) => f,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneBox {
    #[serde(deserialize_with = "num3")]
    pub lo: [f64; 3],
    #[serde(deserialize_with = "num3")]
    pub hi: [f64; 3],
    #[serde(default = "default_grid")]
    pub grid: usize,
}

fn default_grid() -> usize {
    5
}

impl Default for SceneBox {
    fn default() -> Self {
        SceneBox { lo: [0.0; 3], hi: [1.0; 3], grid: 5 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneOptions {
    #[serde(default, deserialize_with = "num", skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub structure: SceneStructure,
    #[serde(default)]
    pub data: BTreeMap<String, SceneDatum>,
    #[serde(rename = "box", default)]
    pub bx: SceneBox,
    #[serde(default, skip_serializing_if = "is_default_options")]
    pub options: SceneOptions,
}

fn is_default_options(o: &SceneOptions) -> bool {
    *o == SceneOptions::default()
}

pub const DEFAULT_TOL: f64 = 1e-7;

fn expr(src: &str, loc: &str) -> Result<FieldExpr, SceneError> {
    parse(src).map_err(|e| at(loc, e))
}

fn e3(src: &[String; 3], loc: &str) -> Result<E3, SceneError> {
    Ok([expr(&src[0], &format!("{loc}[0]"))?, expr(&src[1], &format!("{loc}[1]"))?, expr(&src[2], &format!("{loc}[2]"))?])
}

fn e33(src: &[[String; 3]; 3], loc: &str) -> Result<E33, SceneError> {
    Ok([e3(&src[0], &format!("{loc}[0]"))?, e3(&src[1], &format!("{loc}[1]"))?, e3(&src[2], &format!("{loc}[2]"))?])
}

fn fields(src: &[[String; 3]], loc: &str) -> Result<Vec<VectorField>, SceneError> {
    src.iter().enumerate().map(|(i, v)| Ok(VectorField(e3(v, &format!("{loc}[{i}]"))?))).collect()
}

fn s3(e: &E3) -> [String; 3] {
    std::array::from_fn(|i| e[i].to_string())
}

fn s33(e: &E33) -> [[String; 3]; 3] {
    std::array::from_fn(|i| s3(&e[i]))
}

impl SceneDatum {
    fn to_datum(&self, name: &str) -> Result<Datum, SceneError> {
        let loc = |k: &str| format!("data.{name}.{k}");
        let set = [
            self.vector.is_some(),
            self.span.is_some(),
            self.form.is_some(),
            self.two_form.is_some(),
            self.density.is_some(),
            self.metric.is_some(),
            self.tensor11.is_some(),
            self.frame.is_some(),
        ]
        .iter()
        .filter(|b| **b)
        .count();
        if set != 1 {
            return Err(at(format!("data.{name}"), format!("expected exactly one value key, found {set}")));
        }
        if let Some(v) = &self.vector {
            return Ok(Datum::Vector(VectorField(e3(v, &loc("vector"))?)));
        }
        if let Some(s) = &self.span {
            if s.len() != 2 {
                return Err(at(loc("span"), format!("a plane needs 2 spanning fields, got {}", s.len())));
            }
            return Ok(Datum::Span(fields(s, &loc("span"))?));
        }
        if let Some(w) = &self.form {
            return Ok(Datum::Form(OneForm(e3(w, &loc("form"))?)));
        }
        if let Some(c) = &self.two_form {
            let [a, b, d] = e3(c, &loc("two_form"))?;
            return Ok(Datum::TwoForm(TwoForm::from_coeffs(a, b, d)));
        }
        if let Some(b) = &self.density {
            return Ok(Datum::Density(Density(expr(b, &loc("density"))?)));
        }
        if let Some(g) = &self.metric {
            return Ok(Datum::Metric(SymTensor(e33(g, &loc("metric"))?)));
        }
        if let Some(h) = &self.tensor11 {
            return Ok(Datum::Tensor11(Tensor11(e33(h, &loc("tensor11"))?)));
        }
        let f = self.frame.as_ref().unwrap();
        if f.len() != 3 {
            return Err(at(loc("frame"), format!("a frame needs 3 fields, got {}", f.len())));
        }
        Ok(Datum::Frame(fields(f, &loc("frame"))?))
    }

    fn from_datum(d: &Datum) -> SceneDatum {
        let mut s = SceneDatum::default();
        match d {
            Datum::Vector(v) => s.vector = Some(s3(&v.0)),
            Datum::Span(vs) => s.span = Some(vs.iter().map(|v| s3(&v.0)).collect()),
            Datum::Form(w) => s.form = Some(s3(&w.0)),
            Datum::TwoForm(e) => {
                let [a, b, c] = e.coeffs();
                s.two_form = Some([a.to_string(), b.to_string(), c.to_string()]);
            }
            Datum::Density(b) => s.density = Some(b.0.to_string()),
            Datum::Metric(g) => s.metric = Some(s33(&g.0)),
            Datum::Tensor11(h) => s.tensor11 = Some(s33(&h.0)),
            Datum::Frame(vs) => s.frame = Some(vs.iter().map(|v| s3(&v.0)).collect()),
        }
        s
    }
}

impl Scene {
    pub fn from_toml(text: &str) -> Result<Scene, SceneError> {
        toml::from_str(text).map_err(|e| SceneError::Syntax(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scene serializes")
    }

    pub fn tol(&self) -> f64 {
        self.options.tol.unwrap_or(DEFAULT_TOL)
    }

    /// Grid size: [options] grid overrides [box] grid.
    pub fn grid(&self) -> usize {
        self.options.grid.unwrap_or(self.bx.grid)
    }

    pub fn build(&self) -> Result<MaterialStructure, SceneError> {
        let id: GroupId = self.structure.group.parse().map_err(|e| at("structure.group", e))?;
        let bx = ChartBox::new(self.bx.lo, self.bx.hi, self.grid());
        if !bx.is_valid() {
            return Err(at("box", "need lo < hi on every axis and grid >= 2"));
        }
        let mut ms = MaterialStructure::new(id, bx);
        for (name, d) in &self.data {
            ms.data.insert(name.clone(), d.to_datum(name)?);
        }
        Ok(ms)
    }

    pub fn from_structure(ms: &MaterialStructure, options: SceneOptions) -> Scene {
        Scene {
            structure: SceneStructure { group: ms.id.to_string() },
            data: ms.data.iter().map(|(k, d)| (k.clone(), SceneDatum::from_datum(d))).collect(),
            bx: SceneBox { lo: ms.bx.lo, hi: ms.bx.hi, grid: ms.bx.n },
            options,
        }
    }
}
