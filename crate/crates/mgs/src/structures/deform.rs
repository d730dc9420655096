use crate::field_engine::{ChartBox, FieldError, SymTensor, Tensor11};
use crate::tensor_core::{canonical_case, sym2_orbit_mat, CanonicalCase, Sym2Orbit};
use rayon::prelude::*;
use serde::Serialize;

/// Absolute tolerance on eigen-data when comparing orbits across points.
pub const EIGEN_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OrbitLabel {
    Case { case: CanonicalCase },
    Sym2 { orbit: Sym2Orbit },
    /// classification failed at this point (e.g. ambiguous at tol)
    Undetermined { reason: String },
}

impl OrbitLabel {
    pub fn same(&self, other: &OrbitLabel) -> bool {
        match (self, other) {
            (OrbitLabel::Case { case: a }, OrbitLabel::Case { case: b }) => a.same_orbit(b, EIGEN_TOL),
            (OrbitLabel::Sym2 { orbit: a }, OrbitLabel::Sym2 { orbit: b }) => a == b,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeformabilityReport {
    pub labels: Vec<([f64; 3], OrbitLabel)>,
    pub constant: bool,
    /// first grid point and the first point whose label differs
    pub witness: Option<([f64; 3], [f64; 3])>,
}

fn report(labels: Vec<([f64; 3], OrbitLabel)>) -> DeformabilityReport {
    let (p0, l0) = labels[0].clone();
    // an undetermined first label mismatches itself
    let witness = labels.iter().find(|(_, l)| !l.same(&l0)).map(|(q, _)| (p0, *q));
    DeformabilityReport { constant: witness.is_none(), labels, witness }
}

/// Canonical case of h at every grid point.
pub fn deformability(h: &Tensor11, bx: &ChartBox, tol: f64) -> Result<DeformabilityReport, FieldError> {
    let pts = bx.points();
    let labels: Vec<Result<([f64; 3], OrbitLabel), FieldError>> = pts
        .par_iter()
        .map(|p| {
            let m = h.eval(p)?;
            let l = match canonical_case(&m, tol) {
                Ok(case) => OrbitLabel::Case { case },
                Err(e) => OrbitLabel::Undetermined { reason: e.to_string() },
            };
            Ok((*p, l))
        })
        .collect();
    Ok(report(labels.into_iter().collect::<Result<_, _>>()?))
}

/// Rank and signature of q at every grid point.
pub fn sym2_deformability(q: &SymTensor, bx: &ChartBox, tol: f64) -> Result<DeformabilityReport, FieldError> {
    let pts = bx.points();
    let labels: Vec<Result<([f64; 3], OrbitLabel), FieldError>> = pts
        .par_iter()
        .map(|p| {
            let m = q.eval(p)?;
            let l = match sym2_orbit_mat(&m, tol) {
                Ok(orbit) => OrbitLabel::Sym2 { orbit },
                Err(e) => OrbitLabel::Undetermined { reason: e.to_string() },
            };
            Ok((*p, l))
        })
        .collect();
    Ok(report(labels.into_iter().collect::<Result<_, _>>()?))
}
