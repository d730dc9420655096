//! The verdict engine: per-group integrability conditions evaluated on the
//! chart grid.

mod checks;

pub use checks::Check;

use crate::field_engine::{
    lie_bracket, lie_derivative_volume, ChartBox, Density, EvalError, FieldError, FieldExpr, OneForm, VectorField,
};
use crate::gconnection::{curvature_exprs, structure_functions, torsionless_candidate_in, FrameField, GConnError};
use crate::lie_catalog::{algebra_basis, entry, f_model, AlgebraEntry, BCase, Invariant, Rule, RuleKind};
use crate::structures::{cross, dot, schema_key, validate, MaterialStructure, StructureError};
use crate::tensor_core::{Mat3, TensorValue};
use checks::*;
use nalgebra::{DMatrix, Vector3};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Integrable,
    NotIntegrable,
    Inconclusive,
}

impl Status {
    /// CLI exit code.
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Integrable => 0,
            Status::NotIntegrable => 10,
            Status::Inconclusive => 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition {
    pub name: String,
    /// the catalog rule the condition belongs to
    #[serde(rename = "ref")]
    pub reference: String,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
    /// grid point of the largest residual
    pub witness: [f64; 3],
    /// every grid point with its residual (only on request)
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<([f64; 3], f64)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub group: String,
    pub status: Status,
    pub conditions: Vec<Condition>,
    pub notes: Vec<String>,
}

impl Verdict {
    pub fn condition(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }

    pub fn failed(&self) -> impl Iterator<Item = &Condition> {
        self.conditions.iter().filter(|c| !c.pass)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerdictError {
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("chart is not adapted: '{datum}' differs from its model at ({}, {}, {}) (residual {residual:e})", point[0], point[1], point[2])]
    NotInAdaptedChart { datum: String, point: [f64; 3], residual: f64 },
    #[error(transparent)]
    Connection(#[from] GConnError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

impl From<EvalError> for VerdictError {
    fn from(e: EvalError) -> Self {
        VerdictError::Field(FieldError::Domain(e))
    }
}

impl VerdictError {
    /// Bad input (exit 1) as opposed to a failure while evaluating (exit 2).
    pub fn is_input_error(&self) -> bool {
        match self {
            VerdictError::Structure(StructureError::Field(_)) => false,
            VerdictError::Structure(_) | VerdictError::NotInAdaptedChart { .. } => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecideOptions {
    pub tol: f64,
    /// keep per-point residuals in every condition
    pub report_obstructions: bool,
}

impl Default for DecideOptions {
    fn default() -> Self {
        DecideOptions { tol: crate::structures::DEFAULT_TOL, report_obstructions: false }
    }
}

/// Largest value of a pointwise residual over the grid (NaN counts as
/// failure); the first evaluation error in grid order wins.
pub fn scan(check: &Check, bx: &ChartBox, keep: bool) -> Result<(f64, [f64; 3], Option<Vec<([f64; 3], f64)>>), FieldError> {
    let pts = bx.points();
    let vals: Vec<Result<f64, FieldError>> = pts.par_iter().map(|p| (check.f)(p)).collect();
    let mut best = (f64::NEG_INFINITY, pts[0]);
    let mut all = Vec::with_capacity(if keep { pts.len() } else { 0 });
    for (p, v) in pts.iter().zip(vals) {
        let v = v?;
        let key = if v.is_nan() { f64::INFINITY } else { v };
        if key > best.0 {
            best = (key, *p);
        }
        if keep {
            all.push((*p, v));
        }
    }
    Ok((best.0.max(0.0), best.1, keep.then_some(all)))
}

struct Run<'a> {
    ms: &'a MaterialStructure,
    opts: DecideOptions,
    rule: Rule,
    conditions: Vec<Condition>,
    notes: Vec<String>,
    /// false when an iff rule could not be evaluated in full
    complete: bool,
}

impl Run<'_> {
    fn run(&mut self, c: Check) -> Result<bool, VerdictError> {
        let (residual, witness, points) = scan(&c, &self.ms.bx, self.opts.report_obstructions)?;
        let pass = residual <= self.opts.tol;
        self.conditions.push(Condition {
            name: c.name,
            reference: self.rule.id.to_string(),
            residual,
            tol: self.opts.tol,
            pass,
            witness,
            points,
        });
        Ok(pass)
    }

    fn all(&mut self, cs: Vec<Check>) -> Result<bool, VerdictError> {
        let mut ok = true;
        for c in cs {
            ok &= self.run(c)?;
        }
        Ok(ok)
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    fn vol(&self) -> Result<Density, VerdictError> {
        Ok(self.ms.volume()?)
    }

    fn bx(&self) -> ChartBox {
        self.ms.bx
    }
}

/// Decide with the default options at the given tolerance.
pub fn decide(ms: &MaterialStructure, tol: f64) -> Result<Verdict, VerdictError> {
    decide_with(ms, &DecideOptions { tol, ..DecideOptions::default() })
}

pub fn decide_with(ms: &MaterialStructure, opts: &DecideOptions) -> Result<Verdict, VerdictError> {
    validate(ms, opts.tol)?;
    let ent = entry(&ms.id).map_err(StructureError::from)?;
    let mut r = Run { ms, opts: *opts, rule: ent.rule, conditions: Vec::new(), notes: Vec::new(), complete: true };
    dispatch(&mut r, &ent)?;
    let status = if r.conditions.iter().any(|c| !c.pass) {
        Status::NotIntegrable
    } else {
        match ent.rule.kind {
            RuleKind::Iff | RuleKind::Always if r.complete => Status::Integrable,
            _ => Status::Inconclusive,
        }
    };
    let cap = match ent.rule.kind {
        RuleKind::Necessary => Some("only necessary conditions are known for this group; passing them does not decide integrability"),
        RuleKind::OverlineOnly => Some("the criterion covers the structure without its volume form; passing it does not decide integrability"),
        RuleKind::NoCriterion => Some("no integrability criterion is known for this group"),
        _ => None,
    };
    if let Some(c) = cap {
        r.notes.insert(0, c.to_string());
    }
    Ok(Verdict { group: ms.id.to_string(), status, conditions: r.conditions, notes: r.notes })
}

fn dispatch(r: &mut Run, ent: &AlgebraEntry) -> Result<(), VerdictError> {
    let ms = r.ms;
    let key = schema_key(&ms.id)?;
    let span = |name: &str| -> Result<Vec<VectorField>, VerdictError> { Ok(ms.span(name)?.to_vec()) };
    let vec = |name: &str| -> Result<VectorField, VerdictError> { Ok(ms.vector(name)?.clone()) };
    match key.as_str() {
        "1A" | "10" => {
            r.run(involutive("involutive", span("D")?))?;
        }
        "1B/tensor" => {
            frame_1b(r, ent)?;
        }
        "1B/alpha=0" | "12" => {
            r.run(closed("closed", ms.form("omega")?))?;
        }
        "1B/beta=0" => {
            let d = span("D")?;
            r.run(involutive("involutive", d.clone()))?;
            r.run(closed_on("closed-on-D", ms.form("omega")?, &d[0], &d[1]))?;
        }
        "1B/gamma=0" => {
            r.run(involutive("involutive", span("D")?))?;
            r.run(divergence_free("divergence-free", &vec("X")?, &r.vol()?))?;
        }
        "1C" => {
            r.run(closed("closed", ms.form("omega")?))?;
            r.run(divergence_free("divergence-free", &vec("X")?, &r.vol()?))?;
        }
        "2A" => {
            two_a(r, &vec("L1")?, &vec("L2")?)?;
        }
        "2B/generic" => {
            let y = ms.frame("Y")?;
            two_b_generic(r, ent, &y)?;
        }
        "2B/alpha=0" => {
            two_a(r, &vec("L1")?, &vec("L2")?)?;
            r.run(closed("closed", ms.form("omega")?))?;
            r.note("tau is evaluated in the Omega-normalized adapted frame of L1, L2");
        }
        "2B/beta=0" => {
            let l = vec("L")?;
            r.run(bracket_preserves("line-preserved", vec("X")?, vec![l]))?;
            r.run(divergence_free("divergence-free", &vec("X")?, &r.vol()?))?;
        }
        "2C" => {
            let (x1, x2) = (vec("X1")?, vec("X2")?);
            r.run(bracket_zero("bracket-zero", &x1, &x2))?;
            if ms.has("Omega") {
                let b = r.vol()?;
                r.run(divergence_free("divergence-free(X1)", &x1, &b))?;
                r.run(divergence_free("divergence-free(X2)", &x2, &b))?;
            } else {
                r.run(closed("closed", ms.form("omega")?))?;
            }
        }
        "3A" => {
            r.run(involutive("involutive(D1)", span("D1")?))?;
            r.run(involutive("involutive(D2)", span("D2")?))?;
        }
        "3B" => {
            let y = ms.frame("Y")?;
            let gamma = structure_functions(&y, &r.bx())?;
            let mut cs = Vec::new();
            for (k, (line, comp, value)) in transverse_invariants(ent).into_iter().enumerate() {
                cs.push(projectable(indexed("projectable", k, ent), &gamma, line, comp, value, false));
            }
            r.all(cs)?;
            chart_volume(r, ent, &y, &[0, 1, 2])?;
        }
        "3C" => {
            r.run(closed("closed(omega1)", ms.form("omega1")?))?;
            r.run(closed("closed(omega2)", ms.form("omega2")?))?;
        }
        "4A" => {
            r.run(involutive("involutive", span("D")?))?;
            two_a(r, &vec("L1")?, &vec("L2")?)?;
        }
        "4B" => {
            let y = ms.frame("Y")?;
            four_b(r, ent, &y)?;
        }
        "4C" => {
            let (x1, x2) = (vec("X1")?, vec("X2")?);
            let dp = span("Dp")?;
            r.run(bracket_zero("bracket-zero", &x1, &x2))?;
            r.run(closed("closed", ms.form("omega")?))?;
            r.run(involutive("involutive(Dp)", dp.clone()))?;
            r.run(bracket_preserves("plane-preserved", x2, dp))?;
        }
        "5A" => five_a(r)?,
        "5B" => five_b(r, ent)?,
        "5C" => {
            let x: Vec<VectorField> = ["X1", "X2", "X3"].iter().map(|n| vec(n)).collect::<Result<_, _>>()?;
            r.run(bracket_zero("bracket-zero(X1,X2)", &x[0], &x[1]))?;
            r.run(bracket_zero("bracket-zero(X1,X3)", &x[0], &x[2]))?;
            r.run(bracket_zero("bracket-zero(X2,X3)", &x[1], &x[2]))?;
        }
        "6A" | "6B" => {
            let y = ms.frame("Y")?;
            let gamma = structure_functions(&y, &r.bx())?;
            let q = TensorValue::new(2, 0, 2, vec![1.0, 0.0, 0.0, 1.0]).expect("2x2 metric");
            r.run(projectable("projectable", &gamma, 2, [0, 1], q, key == "6A"))?;
        }
        "7A" => {
            let y = ms.frame("Y")?;
            r.run(involutive("involutive", y.fields[..2].to_vec()))?;
        }
        "7B" => {
            let y = ms.frame("Y")?;
            let d = y.fields[..2].to_vec();
            if r.run(involutive("involutive", d.clone()))? {
                let j = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
                leaf_flat(r, d, vec![j])?;
            } else {
                r.note("leaf curvature not evaluated: D is not involutive");
            }
            chart_volume(r, ent, &y, &[0, 1])?;
        }
        "8A" => {
            let h = ms.tensor11("h")?.clone();
            if r.run(nijenhuis_zero("nijenhuis-zero", &h))? {
                require_model(r, &f_model())?;
                let b = r.vol()?.0;
                let lb = (&b * &b).ln() * 0.5;
                r.run(vanishes("log-density-13", vec![lb.diff(0).diff(2)]))?;
                r.run(vanishes("log-density-23", vec![lb.diff(1).diff(2)]))?;
                r.run(vanishes("log-density-laplace", vec![lb.diff(0).diff(0) + lb.diff(1).diff(1)]))?;
            } else {
                r.note("volume conditions not evaluated: N_h does not vanish");
            }
        }
        "8B" | "26" => {
            let g = ms.metric("g")?.clone();
            r.run(ricci_zero("ricci-zero", &g))?;
            r.run(parallel("parallel(X)", &g, vec("X")?))?;
        }
        "9" | "11" => {}
        "13" => {
            r.run(divergence_free("divergence-free", &vec("X")?, &r.vol()?))?;
        }
        "14" => {
            let h = ms.projector()?;
            r.run(nijenhuis_zero("nijenhuis-zero", &h))?;
        }
        "15" => {
            r.run(closed2("closed(eta)", ms.two_form("eta")?))?;
            r.run(closed("closed(omega)", ms.form("omega")?))?;
        }
        "16" | "19" => {
            r.run(ricci_zero("ricci-zero", ms.metric("g")?))?;
        }
        "20" => {}
        "23" => {
            let g = ms.metric("g")?.clone();
            r.run(ricci_zero("ricci-zero", &g))?;
            r.run(parallel_line("parallel-line(L)", &g, vec("L")?))?;
        }
        "24" => {
            let h = ms.tensor11("h")?.clone();
            if r.run(nijenhuis_zero("nijenhuis-zero", &h))? {
                require_model(r, &Mat3::new(0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0))?;
                let b = r.vol()?.0;
                r.run(vanishes("volume-x1", vec![b.diff(0)]))?;
                r.run(vanishes("volume-x2", vec![b.diff(1)]))?;
            } else {
                r.note("volume conditions not evaluated: N_h does not vanish");
            }
        }
        other => return Err(StructureError::NoSchema(other.to_string()).into()),
    }
    Ok(())
}

fn indexed(base: &str, k: usize, ent: &AlgebraEntry) -> String {
    let n = ent.invariants.iter().filter(|i| matches!(i, Invariant::Transverse { .. })).count();
    if n > 1 {
        format!("{base}(t{})", k + 1)
    } else {
        base.to_string()
    }
}

fn axis(v: &Vector3<f64>) -> usize {
    v.iamax()
}

/// (line, complement, value) of each transverse invariant, as frame indices.
fn transverse_invariants(ent: &AlgebraEntry) -> Vec<(usize, [usize; 2], TensorValue)> {
    ent.invariants
        .iter()
        .filter_map(|inv| match inv {
            Invariant::Transverse { line, complement, value, .. } => {
                Some((axis(line), [axis(&complement[0]), axis(&complement[1])], value.clone()))
            }
            _ => None,
        })
        .collect()
}

/// tau for an adapted frame Y1, Y2 (Y3 only enters through the
/// normalization Omega(Y1, Y2, Y3) = 1, on which tau does not depend):
/// [Y1, Y2] = alpha Y1 + beta Y2, L_{Y1} Omega = h Omega,
/// tau = Y1(alpha) + Y2(h) + alpha h - alpha beta.
pub fn tau_obstruction_2a(
    y1: &VectorField,
    y2: &VectorField,
    y3: &VectorField,
    omega: &Density,
    bx: &ChartBox,
) -> Result<FieldExpr, VerdictError> {
    FrameField::new(vec![y1.clone(), y2.clone(), y3.clone()])?.check(bx)?;
    let plane = FrameField::new(vec![y1.clone(), y2.clone()])?;
    let c = plane.decompose(&lie_bracket(y1, y2));
    let (alpha, beta) = (&c[0], &c[1]);
    let h = lie_derivative_volume(y1, omega).0 / &omega.0;
    Ok(y1.apply(alpha) + y2.apply(&h) + alpha * &h - alpha * beta)
}

fn two_a(r: &mut Run, y1: &VectorField, y2: &VectorField) -> Result<(), VerdictError> {
    if r.run(involutive("involutive(L1+L2)", vec![y1.clone(), y2.clone()]))? {
        let y3 = cross(y1, y2);
        let tau = tau_obstruction_2a(y1, y2, &y3, &r.vol()?, &r.bx())?;
        r.run(vanishes("tau-zero", vec![tau]))?;
    } else {
        r.note("tau not evaluated: L1 + L2 is not involutive");
    }
    Ok(())
}

/// Worst defect over the grid of the frame matrix against the isotropy of
/// the non-volume invariants: zero iff the coordinate frame is adapted.
fn adapted_defect(y: &FrameField, ent: &AlgebraEntry, bx: &ChartBox) -> Result<(f64, [f64; 3]), VerdictError> {
    let invs: Vec<&Invariant> = ent.invariants.iter().filter(|i| i.name() != "w").collect();
    let c = Check {
        name: String::new(),
        f: {
            let y = y.clone();
            let invs: Vec<Invariant> = invs.into_iter().cloned().collect();
            Box::new(move |p| {
                let m = y.matrix_at(p)?;
                let a = Mat3::from_fn(|i, j| m[(i, j)]);
                let mut worst: f64 = 0.0;
                for inv in &invs {
                    worst = worst.max(inv.group_defect(&a).unwrap_or(f64::INFINITY));
                }
                Ok(worst)
            })
        },
    };
    let (d, w, _) = scan(&c, bx, false)?;
    Ok((d, w))
}

/// Necessary volume conditions L_{d_i} Omega = 0 of the capped rules; only
/// meaningful in a chart adapted to the structure without volume.
fn chart_volume(r: &mut Run, ent: &AlgebraEntry, y: &FrameField, axes: &[usize]) -> Result<(), VerdictError> {
    let (d, w) = adapted_defect(y, ent, &r.bx())?;
    if d > r.opts.tol {
        r.note(format!(
            "volume conditions skipped: the chart is not adapted (frame defect {d:.3e} at ({}, {}, {}))",
            w[0], w[1], w[2]
        ));
        return Ok(());
    }
    let b = r.vol()?.0;
    for &i in axes {
        r.run(vanishes(format!("volume-x{}", i + 1), vec![b.diff(i)]))?;
    }
    Ok(())
}

/// h must equal its constant model on the whole grid.
fn require_model(r: &mut Run, model: &Mat3) -> Result<(), VerdictError> {
    let h = r.ms.tensor11("h")?.clone();
    let m = *model;
    let c = Check { name: String::new(), f: Box::new(move |p| Ok((h.eval(p)? - m).norm())) };
    let (d, w, _) = scan(&c, &r.bx(), false)?;
    if d > r.opts.tol {
        return Err(VerdictError::NotInAdaptedChart { datum: "h".into(), point: w, residual: d });
    }
    Ok(())
}

/// Torsion-free connection on the leaves (frame of a plane) in the given
/// 2x2 algebra, and its curvature.
fn leaf_flat(r: &mut Run, fields: Vec<VectorField>, basis: Vec<DMatrix<f64>>) -> Result<(), VerdictError> {
    let frame = FrameField::new(fields)?;
    let bx = r.bx();
    let (tau, defect) = torsionless_candidate_in(&frame, &basis, &bx)?;
    if defect.max > r.opts.tol {
        r.note(format!("leaf connection has torsion defect {:.3e}", defect.max));
    }
    let gamma = structure_functions(&frame, &bx)?;
    let exprs = curvature_exprs(&frame, &gamma, &tau).into_iter().flatten().flatten().collect();
    r.run(vanishes("leaf-flat", exprs))?;
    Ok(())
}

fn frame_1b(r: &mut Run, ent: &AlgebraEntry) -> Result<(), VerdictError> {
    let y = r.ms.frame("Y")?;
    match r.ms.id.b_case() {
        Some(BCase::AlphaBeta) => {
            let gamma = structure_functions(&y, &r.bx())?;
            let cs = transverse_invariants(ent)
                .into_iter()
                .map(|(line, comp, value)| projectable("projectable", &gamma, line, comp, value, false))
                .collect();
            r.all(cs)?;
        }
        _ => {
            r.run(involutive("involutive", y.fields[1..].to_vec()))?;
        }
    }
    chart_volume(r, ent, &y, &[1, 2])
}

fn two_b_generic(r: &mut Run, ent: &AlgebraEntry, y: &FrameField) -> Result<(), VerdictError> {
    let p = r.ms.id.params.expect("B-type id");
    let d = y.fields[1..].to_vec();
    if r.run(involutive("involutive", d.clone()))? {
        let h = DMatrix::from_row_slice(2, 2, &[p[1] as f64, 0.0, 0.0, p[2] as f64]);
        leaf_flat(r, d, vec![h])?;
    } else {
        r.note("leaf curvature not evaluated: D is not involutive");
    }
    chart_volume(r, ent, y, &[1, 2])
}

fn four_b(r: &mut Run, ent: &AlgebraEntry, y: &FrameField) -> Result<(), VerdictError> {
    let f = &y.fields;
    match r.ms.id.b_case() {
        Some(BCase::Generic) => two_b_generic(r, ent, y)?,
        Some(BCase::AlphaZero) => {
            two_a(r, &f[1], &f[2])?;
            let theta = y.coframe();
            let w = OneForm([theta[0][0].clone(), theta[0][1].clone(), theta[0][2].clone()]);
            r.run(closed("closed", &w))?;
        }
        _ => {
            r.run(bracket_preserves("line-preserved", f[1].clone(), vec![f[2].clone()]))?;
            r.run(divergence_free("divergence-free", &f[1], &r.vol()?))?;
        }
    }
    r.run(involutive("involutive(Dp)", f[..2].to_vec()))?;
    Ok(())
}

/// Omega(Y) as an expression.
fn volume_of(y: &FrameField, b: &Density) -> FieldExpr {
    let f = &y.fields;
    &b.0 * dot(&f[0].0, &cross(&f[1], &f[2]).0)
}

/// Frame rescaled so that Omega(Y) = 1, dividing field k.
fn normalized(y: &FrameField, b: &Density, k: usize) -> FrameField {
    let v = volume_of(y, b);
    let mut fields = y.fields.clone();
    fields[k] = VectorField(std::array::from_fn(|i| &fields[k].0[i] / &v));
    FrameField { fields }
}

/// Involutivity of the three planes, a torsion-free connection in the
/// (traceless) diagonal algebra and its curvature.
fn lines_connection(r: &mut Run, y: &FrameField, basis: &[Mat3], extra: Vec<Check>) -> Result<(), VerdictError> {
    let f = &y.fields;
    let mut ok = true;
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        ok &= r.run(involutive(format!("involutive(L{}+L{})", i + 1, j + 1), vec![f[i].clone(), f[j].clone()]))?;
    }
    ok &= r.all(extra)?;
    if !ok {
        r.note("connection not evaluated: the structure equations fail");
        return Ok(());
    }
    let bx = r.bx();
    let b: Vec<DMatrix<f64>> = basis.iter().map(|m| DMatrix::from_fn(3, 3, |i, j| m[(i, j)])).collect();
    let (tau, defect) = torsionless_candidate_in(y, &b, &bx)?;
    let pass = defect.max <= r.opts.tol;
    r.conditions.push(Condition {
        name: "torsion-free".into(),
        reference: r.rule.id.into(),
        residual: defect.max,
        tol: r.opts.tol,
        pass,
        witness: defect.witness,
        points: None,
    });
    if pass {
        let gamma = structure_functions(y, &bx)?;
        let exprs = curvature_exprs(y, &gamma, &tau).into_iter().flatten().flatten().collect();
        r.run(vanishes("flat", exprs))?;
    }
    Ok(())
}

fn five_a(r: &mut Run) -> Result<(), VerdictError> {
    let ms = r.ms;
    let b = r.vol()?;
    let lines: Vec<VectorField> = if ms.has("h") {
        let h = ms.tensor11("h")?.clone();
        r.run(nijenhuis_zero("nijenhuis-zero", &h))?;
        match constant_eigenlines(&h, &ms.bx, r.opts.tol)? {
            Some(ls) => ls,
            None => {
                r.complete = false;
                r.note("h is not constant: its eigenlines are not available, so the curvature condition is not evaluated");
                return Ok(());
            }
        }
    } else {
        ["L1", "L2", "L3"].iter().map(|n| ms.vector(n).cloned()).collect::<Result<_, _>>()?
    };
    let y = normalized(&FrameField::new(lines)?, &b, 2);
    let basis = algebra_basis(&ms.id).map_err(StructureError::from)?;
    lines_connection(r, &y, &basis, Vec::new())
}

fn constant_eigenlines(
    h: &crate::field_engine::Tensor11,
    bx: &ChartBox,
    tol: f64,
) -> Result<Option<Vec<VectorField>>, VerdictError> {
    let pts = bx.points();
    let m0 = h.eval(&pts[0])?;
    for p in &pts {
        if (h.eval(p)? - m0).norm() > tol * (1.0 + m0.norm()) {
            return Ok(None);
        }
    }
    let mut ev: Vec<f64> = m0.complex_eigenvalues().iter().map(|z| z.re).collect();
    ev.sort_by(f64::total_cmp);
    let lines = ev
        .iter()
        .map(|&l| {
            let a = m0 - Mat3::identity() * l;
            let svd = a.svd(false, true);
            let vt = svd.v_t.unwrap();
            let k = svd.singular_values.imin();
            VectorField::constant([vt[(k, 0)], vt[(k, 1)], vt[(k, 2)]])
        })
        .collect();
    Ok(Some(lines))
}

fn five_b(r: &mut Run, ent: &AlgebraEntry) -> Result<(), VerdictError> {
    let ms = r.ms;
    let p = ms.id.params.expect("B-type id");
    let y0 = ms.frame("Y")?;
    // rescale a frame field the model tensor does not see
    let t = ent.invariants.iter().find(|i| i.name() == "t").expect("5B tensor");
    let k = (0..3)
        .find(|&k| {
            let mut s = Mat3::identity();
            s[(k, k)] = 2.0;
            t.group_defect(&s).map(|d| d < 1e-12).unwrap_or(false)
        })
        .expect("a free frame direction");
    let y = normalized(&y0, &r.vol()?, k);
    let g = structure_functions(&y, &ms.bx)?;
    let (a, b, c) = (p[0] as f64, p[1] as f64, p[2] as f64);
    let star1 = vanishes("structure-eq-1", vec![g[0][1][2].clone(), g[0][2][1].clone(), g[1][2][0].clone()]);
    let star2 = vanishes(
        "structure-eq-2",
        vec![
            &g[0][1][0] * c + &g[1][2][2] * a,
            &g[0][1][1] * c - &g[0][2][2] * b,
            &g[0][2][0] * b - &g[1][2][1] * a,
        ],
    );
    lines_connection(r, &y, &ent.basis, vec![star1, star2])
}
