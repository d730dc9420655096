//! Frames, structure functions, connection coefficients relative to a
//! frame, and the torsion / curvature / transport computations on them.
//!
//! Matrix convention: (D_i)_{kj} is the X_k component of nabla_{X_i} X_j.

use crate::field_engine::{
    grid_max, lie_bracket, ChartBox, EvalError, FieldError, FieldExpr, GridResidual, VectorField,
};
use crate::lie_catalog::{distance_to_span, entry_contains, AlgebraEntry};
use crate::spencer::HomSpace;
use crate::tensor_core::Mat3;
use nalgebra::{DMatrix, DVector, Vector3};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GConnError {
    #[error("frame is degenerate at ({}, {}, {}) (smallest singular value {smin:e})", point[0], point[1], point[2])]
    DegenerateFrame { point: [f64; 3], smin: f64 },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("curve leaves the chart box at s = {s} (point ({}, {}, {}))", point[0], point[1], point[2])]
    CurveOutOfBox { s: f64, point: [f64; 3] },
    #[error("transport left the group at s = {s} (defect {defect:e})")]
    TransportLeftGroup { s: f64, defect: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
}

impl From<EvalError> for GConnError {
    fn from(e: EvalError) -> Self {
        GConnError::Field(FieldError::Domain(e))
    }
}

/// Square matrix of expressions.
pub type MatExpr = Vec<Vec<FieldExpr>>;

pub fn mat_zero(k: usize) -> MatExpr {
    vec![vec![FieldExpr::zero(); k]; k]
}

pub fn mat_const(m: &DMatrix<f64>) -> MatExpr {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| FieldExpr::constant(m[(i, j)])).collect()).collect()
}

pub fn mat3_const(m: &Mat3) -> MatExpr {
    (0..3).map(|i| (0..3).map(|j| FieldExpr::constant(m[(i, j)])).collect()).collect()
}

pub fn mat_eval(m: &MatExpr, p: &[f64; 3]) -> Result<DMatrix<f64>, EvalError> {
    let k = m.len();
    let mut out = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            out[(i, j)] = m[i][j].eval(p)?;
        }
    }
    Ok(out)
}

pub fn mat_mul(a: &MatExpr, b: &MatExpr) -> MatExpr {
    let k = a.len();
    (0..k)
        .map(|i| {
            (0..k)
                .map(|j| (0..k).fold(FieldExpr::zero(), |acc, l| acc + &a[i][l] * &b[l][j]))
                .collect()
        })
        .collect()
}

pub fn mat_add(a: &MatExpr, b: &MatExpr) -> MatExpr {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect()).collect()
}

pub fn mat_sub(a: &MatExpr, b: &MatExpr) -> MatExpr {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x - y).collect()).collect()
}

pub fn mat_scale(a: &MatExpr, f: &FieldExpr) -> MatExpr {
    a.iter().map(|r| r.iter().map(|x| f * x).collect()).collect()
}

/// Entrywise derivative along X.
pub fn mat_along(x: &VectorField, a: &MatExpr) -> MatExpr {
    a.iter().map(|r| r.iter().map(|e| x.apply(e)).collect()).collect()
}

/// k pointwise independent vector fields (k = 2 for a frame of a plane
/// field, 3 for a full frame).
#[derive(Debug, Clone, PartialEq)]
pub struct FrameField {
    pub fields: Vec<VectorField>,
}

impl FrameField {
    pub fn new(fields: Vec<VectorField>) -> Result<Self, GConnError> {
        if fields.len() != 2 && fields.len() != 3 {
            return Err(GConnError::Shape(format!("frame of {} fields", fields.len())));
        }
        Ok(FrameField { fields })
    }

    pub fn coordinate() -> Self {
        FrameField { fields: (0..3).map(VectorField::coordinate).collect() }
    }

    pub fn k(&self) -> usize {
        self.fields.len()
    }

    /// 3 x k matrix whose columns are the frame vectors at p.
    pub fn matrix_at(&self, p: &[f64; 3]) -> Result<DMatrix<f64>, EvalError> {
        let mut m = DMatrix::zeros(3, self.k());
        for (c, f) in self.fields.iter().enumerate() {
            let v = f.eval(p)?;
            for r in 0..3 {
                m[(r, c)] = v[r];
            }
        }
        Ok(m)
    }

    /// Fails with the first grid point where the frame degenerates.
    pub fn check(&self, bx: &ChartBox) -> Result<(), GConnError> {
        for p in bx.points() {
            let m = self.matrix_at(&p)?;
            let sv = m.clone().svd(false, false).singular_values;
            let smin = sv.min();
            if smin <= 1e-8 * m.norm().max(1.0) {
                return Err(GConnError::DegenerateFrame { point: p, smin });
            }
        }
        Ok(())
    }

    /// Frame components of a coordinate vector v at p (least squares for
    /// k = 2).
    pub fn components_at(&self, v: &Vector3<f64>, p: &[f64; 3]) -> Result<DVector<f64>, EvalError> {
        let m = self.matrix_at(p)?;
        let rhs = DVector::from_column_slice(v.as_slice());
        let svd = m.svd(true, true);
        Ok(svd.solve(&rhs, 1e-14).unwrap())
    }

    /// Symbolic left inverse: k x 3 matrix L with L M = I. For a full frame
    /// the rows are the dual coframe.
    pub fn coframe(&self) -> Vec<Vec<FieldExpr>> {
        let f = &self.fields;
        if self.k() == 3 {
            let m = |r: usize, c: usize| &f[c].0[r];
            let cof = |r: usize, c: usize| {
                let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
                let (c1, c2) = ((c + 1) % 3, (c + 2) % 3);
                m(r1, c1) * m(r2, c2) - m(r1, c2) * m(r2, c1)
            };
            let det = (0..3).fold(FieldExpr::zero(), |acc, c| acc + m(0, c) * cof(0, c));
            (0..3).map(|i| (0..3).map(|r| cof(r, i) / &det).collect()).collect()
        } else {
            // (M^T M)^-1 M^T
            let dot = |a: &VectorField, b: &VectorField| {
                (0..3).fold(FieldExpr::zero(), |acc, r| acc + &a.0[r] * &b.0[r])
            };
            let g11 = dot(&f[0], &f[0]);
            let g12 = dot(&f[0], &f[1]);
            let g22 = dot(&f[1], &f[1]);
            let det = &g11 * &g22 - &g12 * &g12;
            let inv = [[&g22 / &det, -(&g12 / &det)], [-(&g12 / &det), &g11 / &det]];
            (0..2)
                .map(|i| (0..3).map(|r| &inv[i][0] * &f[0].0[r] + &inv[i][1] * &f[1].0[r]).collect())
                .collect()
        }
    }

    /// Symbolic frame components of a vector field (assumed tangent to the
    /// frame span when k = 2).
    pub fn decompose(&self, v: &VectorField) -> Vec<FieldExpr> {
        let l = self.coframe();
        l.iter().map(|row| (0..3).fold(FieldExpr::zero(), |acc, r| acc + &row[r] * &v.0[r])).collect()
    }
}

/// gamma[i][j][k] with [X_i, X_j] = gamma_ij^k X_k. Antisymmetric by
/// construction (gamma_ji is the negation of gamma_ij).
pub fn structure_functions(frame: &FrameField, bx: &ChartBox) -> Result<Vec<Vec<Vec<FieldExpr>>>, GConnError> {
    frame.check(bx)?;
    let k = frame.k();
    let mut g = vec![vec![vec![FieldExpr::zero(); k]; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let br = lie_bracket(&frame.fields[i], &frame.fields[j]);
            let c = frame.decompose(&br);
            for l in 0..k {
                g[j][i][l] = -&c[l];
                g[i][j][l] = c[l].clone();
            }
        }
    }
    Ok(g)
}

/// Connection coefficient matrices D_1..D_k relative to a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    pub slots: Vec<MatExpr>,
}

impl Connection {
    pub fn zero(k: usize) -> Self {
        Connection { slots: vec![mat_zero(k); k] }
    }

    pub fn constant(ms: &[DMatrix<f64>]) -> Self {
        Connection { slots: ms.iter().map(mat_const).collect() }
    }

    pub fn constant3(ms: &[Mat3]) -> Self {
        Connection { slots: ms.iter().map(mat3_const).collect() }
    }

    pub fn k(&self) -> usize {
        self.slots.len()
    }

    pub fn eval(&self, p: &[f64; 3]) -> Result<Vec<DMatrix<f64>>, EvalError> {
        self.slots.iter().map(|m| mat_eval(m, p)).collect()
    }

    /// Max over the grid of the distance of each slot to the algebra span.
    pub fn algebra_residual(&self, basis: &[Mat3], bx: &ChartBox) -> Result<GridResidual, GConnError> {
        Ok(grid_max(bx, |p| {
            let mut worst: f64 = 0.0;
            for m in self.eval(p)? {
                let m3 = Mat3::from_fn(|i, j| m[(i, j)]);
                worst = worst.max(distance_to_span(basis, &m3));
            }
            Ok(worst)
        })?)
    }
}

fn pairs(k: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            v.push((i, j));
        }
    }
    v
}

/// Symbolic (tau_i e_j - tau_j e_i) - gamma_ij for i < j, concatenated.
pub fn torsion_exprs(gamma: &[Vec<Vec<FieldExpr>>], tau: &Connection) -> Vec<FieldExpr> {
    let k = tau.k();
    let mut out = Vec::new();
    for (i, j) in pairs(k) {
        for l in 0..k {
            out.push(&tau.slots[i][l][j] - &tau.slots[j][l][i] - &gamma[i][j][l]);
        }
    }
    out
}

/// Grid residual of the torsion of nabla~ + tau; zero iff torsionless.
pub fn torsion_defect(frame: &FrameField, tau: &Connection, bx: &ChartBox) -> Result<GridResidual, GConnError> {
    let gamma = structure_functions(frame, bx)?;
    let exprs = torsion_exprs(&gamma, tau);
    Ok(crate::field_engine::grid_norm(&exprs, bx)?)
}

/// R_ij = X_i(D_j) - X_j(D_i) + [D_i, D_j] - gamma_ij^l D_l for i < j.
pub fn curvature_exprs(frame: &FrameField, gamma: &[Vec<Vec<FieldExpr>>], delta: &Connection) -> Vec<MatExpr> {
    let k = frame.k();
    pairs(k)
        .into_iter()
        .map(|(i, j)| {
            let d = &delta.slots;
            let mut r = mat_sub(&mat_along(&frame.fields[i], &d[j]), &mat_along(&frame.fields[j], &d[i]));
            r = mat_add(&r, &mat_sub(&mat_mul(&d[i], &d[j]), &mat_mul(&d[j], &d[i])));
            for (l, dl) in d.iter().enumerate() {
                r = mat_sub(&r, &mat_scale(dl, &gamma[i][j][l]));
            }
            r
        })
        .collect()
}

pub fn curvature_residual(frame: &FrameField, delta: &Connection, bx: &ChartBox) -> Result<GridResidual, GConnError> {
    if delta.k() != frame.k() {
        return Err(GConnError::Shape(format!("{} slots for a frame of {}", delta.k(), frame.k())));
    }
    let gamma = structure_functions(frame, bx)?;
    let rs = curvature_exprs(frame, &gamma, delta);
    let flat: Vec<FieldExpr> = rs.into_iter().flatten().flatten().collect();
    Ok(crate::field_engine::grid_norm(&flat, bx)?)
}

/// The torsionless candidate tau = pinv(d) gamma with values in the span of
/// `basis` (exact when d is injective and gamma lies in its image), and
/// the torsion defect left over.
pub fn torsionless_candidate(
    frame: &FrameField,
    basis: &[Mat3],
    bx: &ChartBox,
) -> Result<(Connection, GridResidual), GConnError> {
    if frame.k() != 3 {
        return Err(GConnError::Shape("candidate needs a full frame".into()));
    }
    let b: Vec<DMatrix<f64>> = basis.iter().map(|m| DMatrix::from_fn(3, 3, |i, j| m[(i, j)])).collect();
    torsionless_candidate_in(frame, &b, bx)
}

/// Same, for a frame of k = 2 or 3 fields and a k x k algebra basis (a
/// plane frame gives the leafwise connection).
pub fn torsionless_candidate_in(
    frame: &FrameField,
    basis: &[DMatrix<f64>],
    bx: &ChartBox,
) -> Result<(Connection, GridResidual), GConnError> {
    let k = frame.k();
    if basis.iter().any(|m| m.nrows() != k || m.ncols() != k) {
        return Err(GConnError::Shape(format!("algebra basis does not act on R^{k}")));
    }
    let gamma = structure_functions(frame, bx)?;
    let d = basis.len();
    let tau = if d == 0 {
        Connection::zero(k)
    } else {
        let space = HomSpace::new(k, basis.to_vec()).map_err(|e| GConnError::Shape(e.to_string()))?;
        let pinv = space.operator_matrix().pseudo_inverse(1e-12).map_err(|e| GConnError::Shape(e.to_string()))?;
        let rhs: Vec<FieldExpr> = pairs(k)
            .into_iter()
            .flat_map(|(i, j)| (0..k).map(move |l| (i, j, l)))
            .map(|(i, j, l)| gamma[i][j][l].clone())
            .collect();
        let coeff: Vec<FieldExpr> = (0..k * d)
            .map(|c| {
                rhs.iter().enumerate().fold(FieldExpr::zero(), |acc, (r, g)| {
                    let w = pinv[(c, r)];
                    if w.abs() < 1e-15 {
                        acc
                    } else {
                        acc + g * w
                    }
                })
            })
            .collect();
        let slots = (0..k)
            .map(|i| (0..d).fold(mat_zero(k), |acc, a| mat_add(&acc, &mat_scale(&mat_const(&basis[a]), &coeff[i * d + a]))))
            .collect();
        Connection { slots }
    };
    let defect = crate::field_engine::grid_norm(&torsion_exprs(&gamma, &tau), bx)?;
    Ok((tau, defect))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transport {
    /// (s, A(s)) at every step, starting with (0, I)
    pub samples: Vec<(f64, Mat3)>,
}

impl Transport {
    pub fn end(&self) -> Mat3 {
        self.samples.last().unwrap().1
    }
}

/// Integrate dA/ds = -(sum_l c^l(s) D_l(c(s))) A, A(0) = I, by fixed-step RK4,
/// where c^l are the frame components of the velocity of the curve. The
/// curve components are expressions in the parameter s, written x1.
pub fn parallel_transport(
    frame: &FrameField,
    delta: &Connection,
    curve: &[FieldExpr; 3],
    s_end: f64,
    steps: usize,
    bx: &ChartBox,
    group: Option<(&AlgebraEntry, f64)>,
) -> Result<Transport, GConnError> {
    if frame.k() != 3 || delta.k() != 3 {
        return Err(GConnError::Shape("transport needs a full frame".into()));
    }
    let vel: [FieldExpr; 3] = std::array::from_fn(|i| curve[i].diff(0));
    let generator = |s: f64| -> Result<Mat3, GConnError> {
        let arg = [s, 0.0, 0.0];
        let p = [curve[0].eval(&arg)?, curve[1].eval(&arg)?, curve[2].eval(&arg)?];
        if !bx.contains(&p, 1e-12) {
            return Err(GConnError::CurveOutOfBox { s, point: p });
        }
        let v = Vector3::new(vel[0].eval(&arg)?, vel[1].eval(&arg)?, vel[2].eval(&arg)?);
        let c = frame.components_at(&v, &p)?;
        let ds = delta.eval(&p)?;
        let mut m = Mat3::zeros();
        for (l, dl) in ds.iter().enumerate() {
            m += Mat3::from_fn(|i, j| dl[(i, j)]) * c[l];
        }
        Ok(-m)
    };
    let h = s_end / steps as f64;
    let mut a = Mat3::identity();
    let mut samples = vec![(0.0, a)];
    for n in 0..steps {
        let s = n as f64 * h;
        let k1 = generator(s)? * a;
        let k2 = generator(s + h / 2.0)? * (a + k1 * (h / 2.0));
        let k3 = generator(s + h / 2.0)? * (a + k2 * (h / 2.0));
        let k4 = generator(s + h)? * (a + k3 * h);
        a += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        let s1 = s + h;
        if let Some((ent, tol)) = group {
            if !entry_contains(ent, &a, tol) {
                let defect = (a.determinant() - 1.0).abs()
                    + ent.invariants.iter().map(|inv| inv.group_defect(&a).unwrap_or(f64::INFINITY)).sum::<f64>();
                return Err(GConnError::TransportLeftGroup { s: s1, defect });
            }
        }
        samples.push((s1, a));
    }
    Ok(Transport { samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_engine::parse;

    fn vf(s: [&str; 3]) -> VectorField {
        VectorField::parse(&s).unwrap()
    }

    #[test]
    fn coordinate_frame_has_no_structure_functions() {
        let g = structure_functions(&FrameField::coordinate(), &ChartBox::default()).unwrap();
        assert!(g.iter().flatten().flatten().all(|e| e.is_zero()));
    }

    #[test]
    fn exponential_frame() {
        let f = FrameField::new(vec![vf(["1", "0", "0"]), vf(["0", "exp(x1)", "0"]), vf(["0", "0", "1"])]).unwrap();
        let g = structure_functions(&f, &ChartBox::default()).unwrap();
        let p = [0.3, 0.2, 0.7];
        assert!((g[0][1][1].eval(&p).unwrap() - 1.0).abs() < 1e-14);
        assert!((g[1][0][1].eval(&p).unwrap() + 1.0).abs() < 1e-14);
        assert!(g[0][2][1].eval(&p).unwrap().abs() < 1e-14);
    }

    #[test]
    fn degenerate_frame_is_reported() {
        let f = FrameField::new(vec![vf(["1", "0", "0"]), vf(["x1", "0", "0"]), vf(["0", "0", "1"])]).unwrap();
        assert!(matches!(structure_functions(&f, &ChartBox::default()), Err(GConnError::DegenerateFrame { .. })));
    }

    #[test]
    fn zero_transport_is_identity() {
        let curve = [parse("x1").unwrap(), parse("0.5").unwrap(), parse("0.5").unwrap()];
        let t = parallel_transport(&FrameField::coordinate(), &Connection::zero(3), &curve, 1.0, 16, &ChartBox::default(), None)
            .unwrap();
        assert_eq!(t.end(), Mat3::identity());
        let far = [parse("2*x1").unwrap(), parse("0").unwrap(), parse("0").unwrap()];
        assert!(matches!(
            parallel_transport(&FrameField::coordinate(), &Connection::zero(3), &far, 1.0, 16, &ChartBox::default(), None),
            Err(GConnError::CurveOutOfBox { .. })
        ));
    }
}
