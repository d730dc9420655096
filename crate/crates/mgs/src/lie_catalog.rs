//! Catalog of the connected subgroups of Sl(3,R) up to conjugation: basis
//! of each Lie algebra, the invariant data whose isotropy group realizes it,
//! and the integrability rule used for the corresponding structures.

use crate::tensor_core::{act, act_inf_n, act_n, Mat3, TensorError, TensorValue};
use nalgebra::{DMatrix, Vector3};
use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatalogError {
    #[error("unknown group '{0}'")]
    UnknownGroup(String),
    #[error("group {0} is not algebraic; only its Lie algebra is catalogued")]
    NonAlgebraicParameters(String),
    #[error("unsupported parameters for {0}: {1}")]
    UnsupportedParameters(String, String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Variant {
    A,
    B,
    C,
    Plain,
}

/// Catalog key. B-type parameters of families 1-5 are stored normalized
/// (divided by their gcd, at most one negative entry; for families 2 and 4
/// a zero gamma is moved to beta).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GroupId {
    pub family: u8,
    pub variant: Variant,
    pub params: Option<[i64; 3]>,
}

/// Which parameter sub-case a B-type id falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BCase {
    /// alpha, gamma > 0
    AlphaGamma,
    /// beta, gamma > 0
    BetaGamma,
    /// alpha, beta > 0
    AlphaBeta,
    AlphaZero,
    BetaZero,
    GammaZero,
    /// no zero entry (families 2-5)
    Generic,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl GroupId {
    pub fn plain(family: u8) -> Self {
        GroupId { family, variant: Variant::Plain, params: None }
    }

    pub fn a(family: u8) -> Self {
        GroupId { family, variant: Variant::A, params: None }
    }

    pub fn c(family: u8) -> Self {
        GroupId { family, variant: Variant::C, params: None }
    }

    /// B-type id; for families 6-8 only the algebraic case (alpha = 0) exists
    /// and `params` must be None.
    pub fn b(family: u8, params: Option<[i64; 3]>) -> Result<Self, CatalogError> {
        let id = GroupId { family, variant: Variant::B, params };
        match (family, params) {
            (1..=5, Some(p)) => {
                if p.iter().sum::<i64>() != 0 || p == [0, 0, 0] {
                    return Err(CatalogError::UnknownGroup(format!(
                        "{family}B({},{},{}): parameters must be nonzero with zero sum",
                        p[0], p[1], p[2]
                    )));
                }
                let g = gcd(gcd(p[0], p[1]), p[2]);
                let mut q = p.map(|x| x / g);
                if q.iter().filter(|&&x| x < 0).count() >= 2 {
                    q = q.map(|x| -x);
                }
                if (family == 2 || family == 4) && q[2] == 0 && q[1] != 0 {
                    q.swap(1, 2);
                }
                Ok(GroupId { params: Some(q), ..id })
            }
            (6..=8, None) => Ok(id),
            _ => Err(CatalogError::UnknownGroup(id.to_string())),
        }
    }

    pub fn b_case(&self) -> Option<BCase> {
        let p = self.params?;
        let [a, b, g] = p;
        let case = if a == 0 {
            BCase::AlphaZero
        } else if b == 0 {
            BCase::BetaZero
        } else if g == 0 {
            BCase::GammaZero
        } else if self.family != 1 {
            BCase::Generic
        } else if b < 0 {
            BCase::AlphaGamma
        } else if a < 0 {
            BCase::BetaGamma
        } else {
            BCase::AlphaBeta
        };
        Some(case)
    }

    pub fn is_algebraic(&self) -> bool {
        !matches!(self.family, 17 | 18 | 21 | 22 | 25)
    }
}

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.family)?;
        match self.variant {
            Variant::A => write!(f, "A")?,
            Variant::B => write!(f, "B")?,
            Variant::C => write!(f, "C")?,
            Variant::Plain => {}
        }
        if let Some(p) = self.params {
            write!(f, "({},{},{})", p[0], p[1], p[2])?;
        }
        Ok(())
    }
}

impl Serialize for GroupId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl FromStr for GroupId {
    type Err = CatalogError;

    fn from_str(src: &str) -> Result<Self, Self::Err> {
        let s: String = src.chars().filter(|c| !c.is_whitespace()).collect();
        let unknown = || CatalogError::UnknownGroup(src.trim().to_string());
        let digits: String = s.chars().take_while(|c| c.is_ascii_digit()).collect();
        let family: u8 = digits.parse().map_err(|_| unknown())?;
        let rest = &s[digits.len()..];
        let (letter, params) = match rest.find('(') {
            Some(i) => {
                if !rest.ends_with(')') {
                    return Err(unknown());
                }
                let inner = &rest[i + 1..rest.len() - 1];
                let vals: Result<Vec<i64>, _> = inner.split(',').map(|t| t.parse::<i64>()).collect();
                (&rest[..i], Some(vals.map_err(|_| unknown())?))
            }
            None => (rest, None),
        };
        let variant = match letter {
            "" => Variant::Plain,
            "A" | "a" => Variant::A,
            "B" | "b" => Variant::B,
            "C" | "c" => Variant::C,
            _ => return Err(unknown()),
        };
        match (family, variant, params) {
            (1..=5, Variant::A, None) => Ok(GroupId::a(family)),
            (1..=5, Variant::C, None) => Ok(GroupId::c(family)),
            (1..=5, Variant::B, Some(v)) if v.len() == 3 => GroupId::b(family, Some([v[0], v[1], v[2]])),
            (6..=8, Variant::A, None) => Ok(GroupId::a(family)),
            (6..=8, Variant::B, None) => GroupId::b(family, None),
            (6..=8, Variant::B, Some(v)) if v.len() == 2 => {
                if v == [0, 0] {
                    GroupId::b(family, None)
                } else if 2 * v[0] + v[1] != 0 {
                    Err(unknown())
                } else {
                    Err(CatalogError::NonAlgebraicParameters(format!("{family}B({},{})", v[0], v[1])))
                }
            }
            (9..=26, Variant::Plain, None) => Ok(GroupId::plain(family)),
            _ => Err(unknown()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaterialClass {
    IsotropicSolid,
    TransverselyIsotropicSolid,
    CrystallineSolid,
    IsotropicFluid,
    FluidCrystal1st,
    FluidCrystal2nd,
    OtherFluidCrystal,
}

/// How the integrability criterion relates to the structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    /// necessary and sufficient
    Iff,
    /// only necessary conditions are known
    Necessary,
    /// the criterion covers the enlarged structure without the volume form
    OverlineOnly,
    Always,
    /// no criterion, verdict is always inconclusive
    NoCriterion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Rule {
    pub id: &'static str,
    pub kind: RuleKind,
}

const fn rule(id: &'static str, kind: RuleKind) -> Rule {
    Rule { id, kind }
}

/// An invariant object whose isotropy (together with the others of an
/// entry) cuts out the group.
#[derive(Debug, Clone, PartialEq)]
pub enum Invariant {
    Tensor { name: &'static str, value: TensorValue },
    /// fixed up to a nonzero factor
    Projective { name: &'static str, value: TensorValue },
    Subspace { name: &'static str, basis: Vec<Vector3<f64>> },
    /// tensor over R^2 living on the subspace spanned by `basis`
    Tangent { name: &'static str, basis: [Vector3<f64>; 2], value: TensorValue },
    /// tensor over R^2 living on the quotient by `line`; `complement`
    /// gives the quotient basis
    Transverse { name: &'static str, line: Vector3<f64>, complement: [Vector3<f64>; 2], value: TensorValue },
}

fn cols(vs: &[Vector3<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(3, vs.len(), |r, c| vs[c][r])
}

fn mat3_d(a: &Mat3) -> DMatrix<f64> {
    DMatrix::from_fn(3, 3, |i, j| a[(i, j)])
}

/// |(I - P) A B| where P projects orthogonally onto span(B).
fn subspace_defect(a: &Mat3, basis: &[Vector3<f64>]) -> f64 {
    let b = cols(basis);
    let svd = b.clone().svd(true, false);
    let u = svd.u.unwrap();
    let q = u.columns(0, basis.len()).into_owned();
    let ab = mat3_d(a) * &b;
    let proj = &q * (q.transpose() * &ab);
    (ab - proj).norm()
}

fn projective_defect(v: &TensorValue, t: &TensorValue) -> f64 {
    let tt: f64 = t.entries.iter().map(|x| x * x).sum();
    let vt: f64 = v.entries.iter().zip(&t.entries).map(|(x, y)| x * y).sum();
    v.sub(&t.scaled(vt / tt)).norm()
}

/// Induced map on span(B) (B^+ A B).
fn tangent_block(a: &Mat3, basis: &[Vector3<f64>; 2]) -> DMatrix<f64> {
    let b = cols(basis);
    let pinv = (b.transpose() * &b).try_inverse().unwrap() * b.transpose();
    pinv * mat3_d(a) * b
}

/// Induced map on the quotient by `line` in the basis given by `complement`.
fn quotient_block(a: &Mat3, line: &Vector3<f64>, complement: &[Vector3<f64>; 2]) -> DMatrix<f64> {
    let m = cols(&[complement[0], complement[1], *line]);
    let minv = m.clone().try_inverse().unwrap();
    let conj = minv * mat3_d(a) * m;
    conj.view((0, 0), (2, 2)).into_owned()
}

impl Invariant {
    pub fn name(&self) -> &'static str {
        match self {
            Invariant::Tensor { name, .. }
            | Invariant::Projective { name, .. }
            | Invariant::Subspace { name, .. }
            | Invariant::Tangent { name, .. }
            | Invariant::Transverse { name, .. } => name,
        }
    }

    /// Size of the infinitesimal change of the invariant under H (zero iff
    /// H lies in its isotropy algebra).
    pub fn infinitesimal_defect(&self, h: &Mat3) -> f64 {
        match self {
            Invariant::Tensor { value, .. } => act_inf_n(&mat3_d(h), value).norm(),
            Invariant::Projective { value, .. } => projective_defect(&act_inf_n(&mat3_d(h), value), value),
            Invariant::Subspace { basis, .. } => subspace_defect(h, basis),
            Invariant::Tangent { basis, value, .. } => {
                subspace_defect(h, basis) + act_inf_n(&tangent_block(h, basis), value).norm()
            }
            Invariant::Transverse { line, complement, value, .. } => {
                subspace_defect(h, &[*line]) + act_inf_n(&quotient_block(h, line, complement), value).norm()
            }
        }
    }

    /// Size of the change of the invariant under the group element a.
    pub fn group_defect(&self, a: &Mat3) -> Result<f64, TensorError> {
        Ok(match self {
            Invariant::Tensor { value, .. } => act(a, value)?.sub(value).norm(),
            Invariant::Projective { value, .. } => {
                let v = act(a, value)?;
                let d = projective_defect(&v, value);
                if v.norm() <= 1e-12 * value.norm() {
                    d + 1.0
                } else {
                    d
                }
            }
            Invariant::Subspace { basis, .. } => subspace_defect(a, basis),
            Invariant::Tangent { basis, value, .. } => {
                let s = subspace_defect(a, basis);
                let blk = tangent_block(a, basis);
                s + act_n(&blk, value)?.sub(value).norm()
            }
            Invariant::Transverse { line, complement, value, .. } => {
                let s = subspace_defect(a, &[*line]);
                let blk = quotient_block(a, line, complement);
                s + act_n(&blk, value)?.sub(value).norm()
            }
        })
    }
}

impl Serialize for Invariant {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v3 = |v: &Vector3<f64>| [v[0], v[1], v[2]];
        match self {
            Invariant::Tensor { name, value } => {
                let mut st = s.serialize_struct("Invariant", 3)?;
                st.serialize_field("kind", "tensor")?;
                st.serialize_field("name", name)?;
                st.serialize_field("value", value)?;
                st.end()
            }
            Invariant::Projective { name, value } => {
                let mut st = s.serialize_struct("Invariant", 3)?;
                st.serialize_field("kind", "projective")?;
                st.serialize_field("name", name)?;
                st.serialize_field("value", value)?;
                st.end()
            }
            Invariant::Subspace { name, basis } => {
                let mut st = s.serialize_struct("Invariant", 3)?;
                st.serialize_field("kind", "subspace")?;
                st.serialize_field("name", name)?;
                st.serialize_field("basis", &basis.iter().map(v3).collect::<Vec<_>>())?;
                st.end()
            }
            Invariant::Tangent { name, basis, value } => {
                let mut st = s.serialize_struct("Invariant", 4)?;
                st.serialize_field("kind", "tangent")?;
                st.serialize_field("name", name)?;
                st.serialize_field("basis", &basis.iter().map(v3).collect::<Vec<_>>())?;
                st.serialize_field("value", value)?;
                st.end()
            }
            Invariant::Transverse { name, line, complement, value } => {
                let mut st = s.serialize_struct("Invariant", 5)?;
                st.serialize_field("kind", "transverse")?;
                st.serialize_field("name", name)?;
                st.serialize_field("line", &v3(line))?;
                st.serialize_field("complement", &complement.iter().map(v3).collect::<Vec<_>>())?;
                st.serialize_field("value", value)?;
                st.end()
            }
        }
    }
}

/// One catalog record.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraEntry {
    pub id: GroupId,
    pub dim: usize,
    pub basis: Vec<Mat3>,
    pub invariants: Vec<Invariant>,
    pub material_class: MaterialClass,
    pub rule: Rule,
    pub description: &'static str,
    /// Enlarged algebra (inside gl(3)) used for the volume-compatibility
    /// analysis, when the criterion goes through one.
    pub enlarged: Option<Vec<Mat3>>,
    /// Change of basis P relating the stored model to the form used in the
    /// geometric discussion (Lorentz form for 19/23/26, the nilpotent u for 24).
    pub conjugation: Option<Mat3>,
}

fn mat_row(m: &Mat3) -> [f64; 9] {
    std::array::from_fn(|k| m[(k / 3, k % 3)])
}

impl Serialize for AlgebraEntry {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("AlgebraEntry", 9)?;
        st.serialize_field("id", &self.id)?;
        st.serialize_field("dim", &self.dim)?;
        st.serialize_field("basis", &self.basis.iter().map(mat_row).collect::<Vec<_>>())?;
        st.serialize_field("material_class", &self.material_class)?;
        st.serialize_field("invariants", &self.invariants)?;
        st.serialize_field("rule", &self.rule)?;
        st.serialize_field("description", &self.description)?;
        st.serialize_field("enlarged", &self.enlarged.as_ref().map(|b| b.iter().map(mat_row).collect::<Vec<_>>()))?;
        st.serialize_field("conjugation", &self.conjugation.as_ref().map(mat_row))?;
        st.end()
    }
}

/// Unit matrix E_ij (0-based).
pub fn unit(i: usize, j: usize) -> Mat3 {
    let mut m = Mat3::zeros();
    m[(i, j)] = 1.0;
    m
}

fn diag(a: f64, b: f64, c: f64) -> Mat3 {
    Mat3::from_diagonal(&Vector3::new(a, b, c))
}

fn e(i: usize) -> Vector3<f64> {
    let mut v = Vector3::zeros();
    v[i] = 1.0;
    v
}

fn vec3(i: usize) -> TensorValue {
    TensorValue::basis_vector(3, i)
}

fn cov3(i: usize) -> TensorValue {
    TensorValue::basis_covector(3, i)
}

fn w() -> Invariant {
    Invariant::Tensor { name: "w", value: TensorValue::volume() }
}

fn sub(name: &'static str, idx: &[usize]) -> Invariant {
    Invariant::Subspace { name, basis: idx.iter().map(|&i| e(i)).collect() }
}

/// The Lorentz-type form s = e2(x)e3 + e3(x)e2 - e1(x)e1.
pub fn s_form() -> Mat3 {
    Mat3::new(-1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0)
}

/// Nilpotent invariant of group 24 in catalog coordinates (E12 + E31).
pub fn nilpotent_24() -> Mat3 {
    unit(0, 1) + unit(2, 0)
}

/// f-structure model f = e^2(x)e_1 - e^1(x)e_2.
pub fn f_model() -> Mat3 {
    Mat3::new(0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0)
}

/// Weight-zero tensor built from two eigenlines of a diagonal direction:
/// for weights dn < 0 < dp on vectors vn, vp, the product vn^dp (x) vp^-dn
/// (symmetrized when `sym`).
fn weight_zero_pair(n: usize, vn: usize, vp: usize, dn: i64, dp: i64, sym: bool) -> TensorValue {
    let a = TensorValue::basis_vector(n, vn).power(dp as usize);
    let b = TensorValue::basis_vector(n, vp).power((-dn) as usize);
    let t = a.tensor(&b);
    if sym {
        t.symmetrized_contravariant()
    } else {
        t
    }
}

/// Invariant 2D tensors for the diagonal direction (b, g) on a plane
/// (coordinates u1, u2), both entries nonzero.
fn plane_tensors(b: i64, g: i64) -> Vec<TensorValue> {
    if b > 0 && g > 0 {
        let t1 = TensorValue::basis_vector(2, 1).power(b as usize).tensor(&TensorValue::basis_covector(2, 0).power(g as usize));
        let t2 = TensorValue::basis_vector(2, 0).power(g as usize).tensor(&TensorValue::basis_covector(2, 1).power(b as usize));
        vec![t1, t2]
    } else if b < 0 && g < 0 {
        plane_tensors(-b, -g)
    } else if b < 0 {
        vec![weight_zero_pair(2, 0, 1, b, g, true)]
    } else {
        vec![weight_zero_pair(2, 1, 0, g, b, true)]
    }
}

fn tensor_order_ok(id: &GroupId, order: i64) -> Result<(), CatalogError> {
    if order > 4 {
        Err(CatalogError::UnsupportedParameters(id.to_string(), format!("invariant tensor of order {order} exceeds 4")))
    } else {
        Ok(())
    }
}

fn shift_diag(p: [i64; 3]) -> Mat3 {
    let k = (1..=3).find(|k| p.iter().all(|x| x + k != 0)).unwrap_or(4) as f64;
    diag(p[0] as f64 + k, p[1] as f64 + k, p[2] as f64 + k)
}

/// Basis of the Lie algebra of any catalog row (including the
/// non-algebraic ones).
pub fn algebra_basis(id: &GroupId) -> Result<Vec<Mat3>, CatalogError> {
    let d1 = diag(1.0, -1.0, 0.0);
    let d2 = diag(0.0, 1.0, -1.0);
    let rot = unit(0, 1) - unit(1, 0);
    let dir = |p: [i64; 3]| diag(p[0] as f64, p[1] as f64, p[2] as f64);
    let v = id.variant;
    let basis = match (id.family, v) {
        (1, Variant::A) => vec![unit(1, 0), unit(2, 0), unit(2, 1), d1, d2],
        (1, Variant::B) => vec![unit(1, 0), unit(2, 0), unit(2, 1), dir(id.params.unwrap())],
        (1, Variant::C) => vec![unit(1, 0), unit(2, 0), unit(2, 1)],
        (2, Variant::A) => vec![unit(1, 0), unit(2, 0), d1, d2],
        (2, Variant::B) => vec![unit(1, 0), unit(2, 0), dir(id.params.unwrap())],
        (2, Variant::C) => vec![unit(1, 0), unit(2, 0)],
        (3, Variant::A) => vec![unit(0, 1), unit(0, 2), d1, d2],
        (3, Variant::B) => vec![unit(0, 1), unit(0, 2), dir(id.params.unwrap())],
        (3, Variant::C) => vec![unit(0, 1), unit(0, 2)],
        (4, Variant::A) => vec![unit(1, 0), d1, d2],
        (4, Variant::B) => vec![unit(1, 0), dir(id.params.unwrap())],
        (4, Variant::C) => vec![unit(1, 0)],
        (5, Variant::A) => vec![d1, d2],
        (5, Variant::B) => vec![dir(id.params.unwrap())],
        (5, Variant::C) => vec![],
        (6, Variant::A) => vec![rot, diag(1.0, 1.0, -2.0), unit(2, 0), unit(2, 1)],
        (6, Variant::B) => vec![rot, unit(2, 0), unit(2, 1)],
        (7, Variant::A) => vec![rot, diag(1.0, 1.0, -2.0), unit(0, 2), unit(1, 2)],
        (7, Variant::B) => vec![rot, unit(0, 2), unit(1, 2)],
        (8, Variant::A) => vec![rot, diag(1.0, 1.0, -2.0)],
        (8, Variant::B) => vec![rot],
        (9, _) => vec![unit(0, 1), unit(0, 2), unit(1, 0), unit(1, 2), unit(2, 0), unit(2, 1), d1, d2],
        (10, _) => vec![unit(0, 1), unit(0, 2), unit(1, 0), unit(1, 2), d1, d2],
        (11, _) => vec![unit(0, 1), unit(1, 0), unit(2, 0), unit(2, 1), d1, d2],
        (12, _) => vec![unit(0, 1), unit(0, 2), unit(1, 0), unit(1, 2), d1],
        (13, _) => vec![unit(0, 1), unit(1, 0), unit(2, 0), unit(2, 1), d1],
        (14, _) => vec![unit(0, 1), unit(1, 0), d1, d2],
        (15, _) => vec![unit(0, 1), unit(1, 0), d1],
        (16, _) => vec![unit(1, 0) - unit(0, 1), unit(2, 0) - unit(0, 2), unit(2, 1) - unit(1, 2)],
        (17, _) => vec![diag(1.0, -2.0, 1.0) + unit(2, 0), unit(1, 0), unit(1, 2)],
        (18, _) => vec![diag(1.0, -2.0, 1.0) + unit(2, 0), unit(0, 1), unit(2, 1)],
        (19, _) => vec![unit(0, 1) + unit(2, 0), unit(0, 2) + unit(1, 0), unit(1, 1) - unit(2, 2)],
        (20, _) => vec![unit(0, 2) + unit(1, 0), unit(1, 1) - unit(2, 2), unit(1, 2)],
        (21, _) => vec![diag(1.0, -2.0, 1.0) + unit(2, 0), unit(1, 0)],
        (22, _) => vec![diag(1.0, -2.0, 1.0) + unit(2, 0), unit(2, 1)],
        (23, _) => vec![unit(0, 2) + unit(1, 0), unit(1, 1) - unit(2, 2)],
        (24, _) => vec![nilpotent_24(), unit(2, 1)],
        (25, _) => vec![diag(1.0, -2.0, 1.0) + unit(2, 0)],
        (26, _) => vec![nilpotent_24()],
        _ => return Err(CatalogError::UnknownGroup(id.to_string())),
    };
    Ok(basis)
}

/// Immutable catalog record for an algebraic group.
pub fn entry(id: &GroupId) -> Result<AlgebraEntry, CatalogError> {
    use MaterialClass::*;
    use RuleKind::*;
    if !id.is_algebraic() {
        return Err(CatalogError::NonAlgebraicParameters(id.to_string()));
    }
    let basis = algebra_basis(id)?;
    let mut class = OtherFluidCrystal;
    let mut enlarged = None;
    let mut conjugation = None;
    let unsupported = |why: &str| CatalogError::UnsupportedParameters(id.to_string(), why.to_string());
    let (invariants, rule, description): (Vec<Invariant>, Rule, &'static str) = match (id.family, id.variant) {
        (1, Variant::A) => (
            vec![sub("L", &[2]), sub("D", &[1, 2]), w()],
            rule("involutive-plane", Iff),
            "isotropy of the flag <e3> in <e2,e3> and w",
        ),
        (1, Variant::B) => {
            let p = id.params.unwrap();
            let [a, b, g] = p;
            enlarged = Some(vec![unit(1, 0), unit(2, 0), unit(2, 1), shift_diag(p)]);
            match id.b_case().unwrap() {
                BCase::AlphaGamma => {
                    tensor_order_ok(id, a + g)?;
                    let t = vec3(2).power(a as usize).tensor(&cov3(0).power(g as usize));
                    (vec![Invariant::Tensor { name: "t", value: t }, w()], rule("tangent-tensor-volume", Necessary), "isotropy of e3^a (x) e^1^g and w")
                }
                BCase::BetaGamma => {
                    tensor_order_ok(id, b + g)?;
                    let t = TensorValue::basis_vector(2, 1)
                        .power(b as usize)
                        .tensor(&TensorValue::basis_covector(2, 0).power(g as usize));
                    (
                        vec![Invariant::Tangent { name: "t", basis: [e(1), e(2)], value: t }, w()],
                        rule("tangent-tensor-volume", Necessary),
                        "isotropy of a tangent tensor on <e2,e3> and w",
                    )
                }
                BCase::AlphaBeta => {
                    tensor_order_ok(id, a + b)?;
                    let t = TensorValue::basis_vector(2, 1)
                        .power(a as usize)
                        .tensor(&TensorValue::basis_covector(2, 0).power(b as usize));
                    (
                        vec![Invariant::Transverse { name: "t", line: e(2), complement: [e(0), e(1)], value: t }, w()],
                        rule("transverse-tensor-volume", Necessary),
                        "isotropy of <e3>, a transverse tensor and w",
                    )
                }
                BCase::AlphaZero => (
                    vec![Invariant::Tensor { name: "omega", value: cov3(0) }, sub("L", &[2]), w()],
                    rule("closed-form", Iff),
                    "isotropy of e^1, <e3> and w",
                ),
                BCase::BetaZero => (
                    vec![
                        Invariant::Tangent { name: "omega", basis: [e(1), e(2)], value: TensorValue::basis_covector(2, 0) },
                        w(),
                    ],
                    rule("involutive-tangent-closed", Iff),
                    "isotropy of <e2,e3>, a tangent covector and w",
                ),
                BCase::GammaZero => (
                    vec![Invariant::Tensor { name: "X", value: vec3(2) }, sub("D", &[1, 2]), w()],
                    rule("involutive-plane-divergence-free", Iff),
                    "isotropy of e3, <e2,e3> and w",
                ),
                BCase::Generic => unreachable!(),
            }
        }
        (1, Variant::C) => (
            vec![Invariant::Tensor { name: "X", value: vec3(2) }, Invariant::Tensor { name: "omega", value: cov3(0) }, w()],
            rule("closed-form-divergence-free", Iff),
            "isotropy of e3, e^1 and w",
        ),
        (2, Variant::A) => (vec![sub("L1", &[1]), sub("L2", &[2]), w()], rule("tau-obstruction", Iff), "isotropy of <e2>, <e3> and w"),
        (2, Variant::B) | (4, Variant::B) => {
            let p = id.params.unwrap();
            let four = id.family == 4;
            let mut inv = match id.b_case().unwrap() {
                BCase::Generic => {
                    tensor_order_ok(id, p[1].abs() + p[2].abs())?;
                    enlarged = (!four).then(|| {
                        let mut m = shift_diag(p);
                        m[(0, 0)] = p[0] as f64 + (m[(1, 1)] - p[1] as f64);
                        vec![unit(1, 0), unit(2, 0), m]
                    });
                    plane_tensors(p[1], p[2])
                        .into_iter()
                        .map(|t| Invariant::Tangent { name: "t", basis: [e(1), e(2)], value: t })
                        .collect::<Vec<_>>()
                }
                BCase::AlphaZero => vec![Invariant::Tensor { name: "omega", value: cov3(0) }, sub("L1", &[1]), sub("L2", &[2])],
                BCase::BetaZero => vec![Invariant::Tensor { name: "X", value: vec3(1) }, sub("L", &[2])],
                _ => return Err(unsupported("no such sub-case")),
            };
            if four {
                inv.push(sub("Dp", &[0, 1]));
            }
            inv.push(w());
            let r = match (four, id.b_case().unwrap()) {
                (true, _) => rule("4B-necessary", Necessary),
                (false, BCase::Generic) => rule("leafwise-flat-volume", Necessary),
                (false, BCase::AlphaZero) => rule("tau-obstruction-closed", Iff),
                _ => rule("line-preserving-divergence-free", Iff),
            };
            (inv, r, if four { "subgroup of 2B preserving <e1,e2>" } else { "intersection of 2A with the isotropy of tangent data on <e2,e3>" })
        }
        (2, Variant::C) => (
            vec![Invariant::Tensor { name: "X1", value: vec3(1) }, Invariant::Tensor { name: "X2", value: vec3(2) }, w()],
            rule("commuting-divergence-free", Iff),
            "isotropy of e2, e3 and w",
        ),
        (3, Variant::A) => (vec![sub("D1", &[0, 1]), sub("D2", &[0, 2]), w()], rule("two-planes-involutive", Iff), "isotropy of <e1,e2>, <e1,e3> and w"),
        (3, Variant::B) => {
            let p = id.params.unwrap();
            if p.contains(&0) {
                return Err(unsupported("3B with a zero parameter has no criterion"));
            }
            tensor_order_ok(id, p[1].abs() + p[2].abs())?;
            enlarged = Some(vec![unit(0, 1), unit(0, 2), shift_diag(p)]);
            let mut inv: Vec<Invariant> = plane_tensors(p[1], p[2])
                .into_iter()
                .map(|t| Invariant::Transverse { name: "t", line: e(0), complement: [e(1), e(2)], value: t })
                .collect();
            inv.push(w());
            (inv, rule("projectable-volume", Necessary), "isotropy of <e1>, transverse tensors and w")
        }
        (3, Variant::C) => (
            vec![Invariant::Tensor { name: "omega1", value: cov3(1) }, Invariant::Tensor { name: "omega2", value: cov3(2) }, w()],
            rule("two-closed-forms", Iff),
            "isotropy of e^2, e^3 and w",
        ),
        (4, Variant::A) => (
            vec![sub("D", &[0, 1]), sub("L1", &[1]), sub("L2", &[2]), w()],
            rule("4A-necessary", Necessary),
            "isotropy of <e1,e2>, <e2>, <e3> and w",
        ),
        (4, Variant::C) => (
            vec![
                Invariant::Tensor { name: "X1", value: vec3(1) },
                Invariant::Tensor { name: "X2", value: vec3(2) },
                sub("Dp", &[0, 1]),
                w(),
            ],
            rule("commuting-closed-plane", Iff),
            "subgroup of 2C preserving <e1,e2>",
        ),
        (5, Variant::A) => (vec![sub("L1", &[0]), sub("L2", &[1]), sub("L3", &[2]), w()], rule("torsionless-flat", Iff), "isotropy of the three coordinate lines and w"),
        (5, Variant::B) => {
            let p = id.params.unwrap();
            let mut inv = vec![sub("L1", &[0]), sub("L2", &[1]), sub("L3", &[2])];
            if let Some(k) = p.iter().position(|&x| x == 0) {
                inv.push(Invariant::Tensor { name: "t", value: vec3(k) });
            } else {
                let mut best: Option<(i64, usize, usize)> = None;
                for n in 0..3 {
                    for q in 0..3 {
                        if p[n] < 0 && p[q] > 0 {
                            let ord = p[q] - p[n];
                            if best.is_none_or(|b| ord < b.0) {
                                best = Some((ord, n, q));
                            }
                        }
                    }
                }
                let (ord, n, q) = best.unwrap();
                tensor_order_ok(id, ord)?;
                inv.push(Invariant::Tensor { name: "t", value: weight_zero_pair(3, n, q, p[n], p[q], false) });
            }
            inv.push(w());
            (inv, rule("structure-equations-flat", Iff), "isotropy of the coordinate lines, a weight-zero tensor and w")
        }
        (5, Variant::C) => {
            class = CrystallineSolid;
            (
                vec![
                    Invariant::Tensor { name: "X1", value: vec3(0) },
                    Invariant::Tensor { name: "X2", value: vec3(1) },
                    Invariant::Tensor { name: "X3", value: vec3(2) },
                ],
                rule("parallelism", Iff),
                "trivial group",
            )
        }
        (6, Variant::A) => (
            vec![Invariant::Projective { name: "q", value: TensorValue::covariant2(&diag(1.0, 1.0, 0.0)) }, w()],
            rule("projectable-conformal", OverlineOnly),
            "isotropy of the line spanned by e^1e^1 + e^2e^2, and w",
        ),
        (6, Variant::B) => (
            vec![Invariant::Tensor { name: "q", value: TensorValue::covariant2(&diag(1.0, 1.0, 0.0)) }, w()],
            rule("projectable-metric", OverlineOnly),
            "isotropy of e^1e^1 + e^2e^2 and w",
        ),
        (7, Variant::A) => (
            vec![Invariant::Projective { name: "Q", value: TensorValue::contravariant2(&diag(1.0, 1.0, 0.0)) }, w()],
            rule("involutive-image", OverlineOnly),
            "isotropy of the line spanned by e1e1 + e2e2, and w",
        ),
        (7, Variant::B) => {
            enlarged = Some(vec![unit(0, 1) - unit(1, 0), unit(0, 2), unit(1, 2), unit(2, 2)]);
            (
                vec![Invariant::Tensor { name: "Q", value: TensorValue::contravariant2(&diag(1.0, 1.0, 0.0)) }, w()],
                rule("leaf-flat-volume", Necessary),
                "isotropy of e1e1 + e2e2 and w",
            )
        }
        (8, Variant::A) => {
            enlarged = Some(vec![unit(0, 1) - unit(1, 0), diag(1.0, 1.0, 0.0), unit(2, 2)]);
            (
                vec![Invariant::Tensor { name: "h", value: TensorValue::endomorphism(&f_model()) }, w()],
                rule("nijenhuis-compatible", Iff),
                "isotropy of the f-structure model and w",
            )
        }
        (8, Variant::B) => {
            class = TransverselyIsotropicSolid;
            (
                vec![
                    Invariant::Tensor { name: "g", value: TensorValue::covariant2(&Mat3::identity()) },
                    Invariant::Tensor { name: "X", value: vec3(2) },
                    w(),
                ],
                rule("ricci-parallel", Iff),
                "rotations about e3",
            )
        }
        (9, _) => {
            class = IsotropicFluid;
            (vec![w()], rule("always-integrable", Always), "Sl(3,R)")
        }
        (10, _) => {
            class = FluidCrystal2nd;
            (vec![sub("D", &[0, 1]), w()], rule("involutive", Iff), "isotropy of <e1,e2> and w")
        }
        (11, _) => {
            class = FluidCrystal1st;
            (vec![sub("L", &[2]), w()], rule("always-integrable", Always), "isotropy of <e3> and w")
        }
        (12, _) => (vec![Invariant::Tensor { name: "omega", value: cov3(2) }, w()], rule("closed", Iff), "isotropy of e^3 and w"),
        (13, _) => (vec![Invariant::Tensor { name: "X", value: vec3(2) }, w()], rule("divergence-free", Iff), "isotropy of e3 and w"),
        (14, _) => (
            vec![Invariant::Tensor { name: "h", value: TensorValue::endomorphism(&diag(0.0, 0.0, 1.0)) }, w()],
            rule("nijenhuis", OverlineOnly),
            "isotropy of <e1,e2>, <e3> and w",
        ),
        (15, _) => (
            vec![Invariant::Tensor { name: "eta", value: TensorValue::two_form(0, 1) }, Invariant::Tensor { name: "omega", value: cov3(2) }],
            rule("cosymplectic", Iff),
            "isotropy of e^1^e^2 and e^3",
        ),
        (16, _) => {
            class = IsotropicSolid;
            (
                vec![Invariant::Tensor { name: "g", value: TensorValue::covariant2(&Mat3::identity()) }, w()],
                rule("ricci-flat", Iff),
                "SO(3)",
            )
        }
        (19, _) => {
            conjugation = Some(lorentz_conjugation());
            (
                vec![Invariant::Tensor { name: "g", value: TensorValue::covariant2(&s_form()) }, w()],
                rule("ricci-flat", Iff),
                "isotropy of s and w (conjugate to SO(2,1))",
            )
        }
        (20, _) => {
            let s = TensorValue::covariant2(&s_form());
            let e33 = cov3(2).tensor(&cov3(2));
            let t = s.tensor(&e33).sub(&e33.tensor(&s));
            (vec![Invariant::Projective { name: "T", value: t }, w()], rule("no-criterion", NoCriterion), "isotropy of the line through t and w")
        }
        (23, _) => {
            conjugation = Some(lorentz_conjugation());
            (
                vec![Invariant::Tensor { name: "g", value: TensorValue::covariant2(&s_form()) }, sub("L", &[1]), w()],
                rule("ricci-null-line", Iff),
                "subgroup of 19 preserving the null line <e2>",
            )
        }
        (24, _) => {
            let a = nilpotent_24();
            enlarged = Some(vec![Mat3::identity(), a, a * a]);
            conjugation = Some(Mat3::new(0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0));
            (
                vec![Invariant::Tensor { name: "h", value: TensorValue::endomorphism(&a) }, w()],
                rule("nijenhuis-volume", Iff),
                "isotropy of a nilpotent endomorphism with cube zero, and w",
            )
        }
        (26, _) => {
            conjugation = Some(lorentz_conjugation());
            (
                vec![Invariant::Tensor { name: "g", value: TensorValue::covariant2(&s_form()) }, Invariant::Tensor { name: "X", value: vec3(2) }, w()],
                rule("ricci-null-parallel", Iff),
                "subgroup of 19 fixing the null vector e3",
            )
        }
        _ => return Err(CatalogError::UnknownGroup(id.to_string())),
    };
    Ok(AlgebraEntry {
        id: *id,
        dim: basis.len(),
        basis,
        invariants,
        material_class: class,
        rule,
        description,
        enlarged,
        conjugation,
    })
}

/// P with P^T s P = diag(-1,-1,1).
pub fn lorentz_conjugation() -> Mat3 {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    Mat3::new(1.0, 0.0, 0.0, 0.0, r, r, 0.0, -r, r)
}

/// Representative ids of every constructible catalog case.
pub fn representative_ids() -> Vec<GroupId> {
    let mut ids = Vec::new();
    let b = |f: u8, p: [i64; 3]| GroupId::b(f, Some(p)).unwrap();
    ids.push(GroupId::a(1));
    for p in [[1, -2, 1], [-2, 1, 1], [1, 1, -2], [0, 1, -1], [1, 0, -1], [1, -1, 0]] {
        ids.push(b(1, p));
    }
    ids.push(GroupId::c(1));
    ids.push(GroupId::a(2));
    for p in [[-2, 1, 1], [1, -2, 1], [0, 1, -1], [1, 0, -1]] {
        ids.push(b(2, p));
    }
    ids.push(GroupId::c(2));
    ids.push(GroupId::a(3));
    for p in [[-2, 1, 1], [1, -2, 1]] {
        ids.push(b(3, p));
    }
    ids.push(GroupId::c(3));
    ids.push(GroupId::a(4));
    for p in [[-2, 1, 1], [0, 1, -1], [1, 0, -1]] {
        ids.push(b(4, p));
    }
    ids.push(GroupId::c(4));
    ids.push(GroupId::a(5));
    for p in [[1, -2, 1], [1, -1, 0]] {
        ids.push(b(5, p));
    }
    ids.push(GroupId::c(5));
    for f in 6..=8 {
        ids.push(GroupId::a(f));
        ids.push(GroupId::b(f, None).unwrap());
    }
    for f in [9, 10, 11, 12, 13, 14, 15, 16, 19, 20, 23, 24, 26] {
        ids.push(GroupId::plain(f));
    }
    ids
}

fn algebra_matrix(basis: &[Mat3]) -> DMatrix<f64> {
    DMatrix::from_fn(9, basis.len(), |r, c| basis[c][(r / 3, r % 3)])
}

/// Least-squares distance from H to the span of `basis`.
pub fn distance_to_span(basis: &[Mat3], h: &Mat3) -> f64 {
    if basis.is_empty() {
        return h.norm();
    }
    let m = algebra_matrix(basis);
    let rhs = DMatrix::from_fn(9, 1, |r, _| h[(r / 3, r % 3)]);
    let svd = m.clone().svd(true, true);
    let x = svd.solve(&rhs, 1e-12).unwrap();
    (m * x - rhs).norm()
}

pub fn in_algebra(id: &GroupId, h: &Mat3, tol: f64) -> Result<bool, CatalogError> {
    let basis = algebra_basis(id)?;
    Ok(distance_to_span(&basis, h) <= tol * (1.0 + h.norm()))
}

/// Membership in the natural algebraic group: det = 1 and every catalog
/// invariant preserved.
pub fn in_group(id: &GroupId, a: &Mat3, tol: f64) -> Result<bool, CatalogError> {
    let ent = entry(id)?;
    Ok(entry_contains(&ent, a, tol))
}

pub fn entry_contains(ent: &AlgebraEntry, a: &Mat3, tol: f64) -> bool {
    let det = a.determinant();
    if (det - 1.0).abs() > tol {
        return false;
    }
    let scale = 1.0 + a.norm().powi(4);
    ent.invariants.iter().all(|inv| matches!(inv.group_defect(a), Ok(d) if d <= tol * scale))
}
