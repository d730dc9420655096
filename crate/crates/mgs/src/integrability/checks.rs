//! Pointwise residuals for the primitive conditions. Each check is a
//! closure evaluated at every grid point; the verdict keeps the maximum.

use crate::field_engine::{
    covariant_derivative_at, exterior_d, exterior_d2, lie_bracket, lie_derivative_volume, nijenhuis, Density,
    Distribution, FieldError, FieldExpr, MetricJets, OneForm, SymTensor, Tensor11, TwoForm, VectorField,
};
use crate::tensor_core::{act_inf_n, TensorValue};
use nalgebra::{DMatrix, Vector3};

pub type Pointwise = Box<dyn Fn(&[f64; 3]) -> Result<f64, FieldError> + Send + Sync>;

pub struct Check {
    pub name: String,
    pub f: Pointwise,
}

fn check(name: impl Into<String>, f: impl Fn(&[f64; 3]) -> Result<f64, FieldError> + Send + Sync + 'static) -> Check {
    Check { name: name.into(), f: Box::new(f) }
}

/// Euclidean norm of a list of expressions.
pub fn vanishes(name: impl Into<String>, exprs: Vec<FieldExpr>) -> Check {
    check(name, move |p| {
        let mut s = 0.0;
        for e in &exprs {
            let v = e.eval(p)?;
            s += v * v;
        }
        Ok(s.sqrt())
    })
}

/// Frobenius test: brackets of spanning fields leave the span by at most
/// the residual (normalized by 1 + field norms).
pub fn involutive(name: impl Into<String>, span: Vec<VectorField>) -> Check {
    let mut pairs = Vec::new();
    for a in 0..span.len() {
        for b in a + 1..span.len() {
            pairs.push((a, b, lie_bracket(&span[a], &span[b])));
        }
    }
    let d = Distribution::new(span.len(), span);
    check(name, move |p| {
        let mut worst: f64 = 0.0;
        for (a, b, br) in &pairs {
            let v = br.eval(p)?;
            let scale = 1.0 + d.span[*a].eval(p)?.norm() + d.span[*b].eval(p)?.norm();
            worst = worst.max(d.outside(&v, p)? / scale);
        }
        Ok(worst)
    })
}

/// [X, V] stays in span(V...) for every spanning V.
pub fn bracket_preserves(name: impl Into<String>, x: VectorField, span: Vec<VectorField>) -> Check {
    let brs: Vec<VectorField> = span.iter().map(|v| lie_bracket(&x, v)).collect();
    let d = Distribution::new(span.len(), span);
    check(name, move |p| {
        let xn = x.eval(p)?.norm();
        let mut worst: f64 = 0.0;
        for (v, br) in d.span.iter().zip(&brs) {
            let scale = 1.0 + xn + v.eval(p)?.norm();
            worst = worst.max(d.outside(&br.eval(p)?, p)? / scale);
        }
        Ok(worst)
    })
}

pub fn bracket_zero(name: impl Into<String>, a: &VectorField, b: &VectorField) -> Check {
    vanishes(name, lie_bracket(a, b).0.to_vec())
}

pub fn closed(name: impl Into<String>, w: &OneForm) -> Check {
    let dw = exterior_d(w);
    vanishes(name, dw.coeffs().to_vec())
}

pub fn closed2(name: impl Into<String>, eta: &TwoForm) -> Check {
    vanishes(name, vec![exterior_d2(eta)])
}

/// d(omega)(V1, V2) for a plane spanned by V1, V2.
pub fn closed_on(name: impl Into<String>, w: &OneForm, v1: &VectorField, v2: &VectorField) -> Check {
    vanishes(name, vec![exterior_d(w).on(v1, v2)])
}

pub fn divergence_free(name: impl Into<String>, x: &VectorField, omega: &Density) -> Check {
    vanishes(name, vec![lie_derivative_volume(x, omega).0])
}

pub fn nijenhuis_zero(name: impl Into<String>, h: &Tensor11) -> Check {
    let n = nijenhuis(h);
    let exprs = [(0, 1), (0, 2), (1, 2)].iter().flat_map(|&(i, j)| n[i][j].0.clone()).collect();
    vanishes(name, exprs)
}

pub fn ricci_zero(name: impl Into<String>, g: &SymTensor) -> Check {
    let jets = MetricJets::new(g);
    check(name, move |p| Ok(jets.curvature_at(p)?.ricci.norm()))
}

/// |nabla X| for the Levi-Civita connection of g.
pub fn parallel(name: impl Into<String>, g: &SymTensor, x: VectorField) -> Check {
    let jets = MetricJets::new(g);
    check(name, move |p| Ok(covariant_derivative_at(&jets, &x, p)?.norm()))
}

/// nabla_i l stays in span(l): component orthogonal to l, relative to |l|.
pub fn parallel_line(name: impl Into<String>, g: &SymTensor, l: VectorField) -> Check {
    let jets = MetricJets::new(g);
    check(name, move |p| {
        let nl = covariant_derivative_at(&jets, &l, p)?;
        let lv = l.eval(p)?;
        let u = lv / lv.norm();
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            let c: Vector3<f64> = nl.column(i).into();
            worst = worst.max((c - u * u.dot(&c)).norm() / lv.norm());
        }
        Ok(worst)
    })
}

/// Lie derivative along the line field Y_l of a transverse tensor with
/// constant components in the quotient frame (Y_a, Y_b): the induced
/// endomorphism M_ba = gamma_la^b acting on the model value.
pub fn projectable(
    name: impl Into<String>,
    gamma: &[Vec<Vec<FieldExpr>>],
    line: usize,
    comp: [usize; 2],
    value: TensorValue,
    projective: bool,
) -> Check {
    let m: Vec<Vec<FieldExpr>> =
        (0..2).map(|b| (0..2).map(|a| gamma[line][comp[a]][comp[b]].clone()).collect()).collect();
    check(name, move |p| {
        let mut mv = DMatrix::zeros(2, 2);
        for b in 0..2 {
            for a in 0..2 {
                mv[(b, a)] = m[b][a].eval(p)?;
            }
        }
        let r = act_inf_n(&mv, &value);
        if projective {
            let vv: f64 = value.entries.iter().map(|x| x * x).sum();
            let rv: f64 = r.entries.iter().zip(&value.entries).map(|(x, y)| x * y).sum();
            Ok(r.sub(&value.scaled(rv / vv)).norm())
        } else {
            Ok(r.norm())
        }
    })
}
