//! Dense tensors over R^3 (and R^2), the natural GL action, real canonical
//! forms of 3x3 matrices and orbit labels for (0,2) tensors.

use nalgebra::{DMatrix, Matrix3};
use serde::Serialize;
use std::fmt;
use thiserror::Error;

pub type Mat3 = Matrix3<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("singular matrix (|det| = {det:e})")]
    SingularMatrix { det: f64 },
    #[error("ambiguous canonical case: both ({first}) and ({second}) pass at this tolerance")]
    AmbiguousCase { first: char, second: char },
    #[error("tensor is not symmetric (residual {residual:e})")]
    NotSymmetric { residual: f64 },
    #[error("bad tensor shape: {0}")]
    Shape(String),
}

/// Dense tensor of type (r,s) over R^n, n in {2,3}. Contravariant indices
/// come first, row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorValue {
    pub n: usize,
    pub r: usize,
    pub s: usize,
    pub entries: Vec<f64>,
}

impl TensorValue {
    pub fn new(n: usize, r: usize, s: usize, entries: Vec<f64>) -> Result<Self, TensorError> {
        if !(n == 2 || n == 3) {
            return Err(TensorError::Shape(format!("dimension {n} not supported")));
        }
        if r + s > 4 {
            return Err(TensorError::Shape(format!("order {} exceeds 4", r + s)));
        }
        if entries.len() != n.pow((r + s) as u32) {
            return Err(TensorError::Shape(format!(
                "expected {} entries, got {}",
                n.pow((r + s) as u32),
                entries.len()
            )));
        }
        Ok(TensorValue { n, r, s, entries })
    }

    pub fn zeros(n: usize, r: usize, s: usize) -> Self {
        TensorValue { n, r, s, entries: vec![0.0; n.pow((r + s) as u32)] }
    }

    pub fn scalar(c: f64) -> Self {
        TensorValue { n: 3, r: 0, s: 0, entries: vec![c] }
    }

    pub fn vector(v: &[f64]) -> Self {
        TensorValue { n: v.len(), r: 1, s: 0, entries: v.to_vec() }
    }

    pub fn covector(v: &[f64]) -> Self {
        TensorValue { n: v.len(), r: 0, s: 1, entries: v.to_vec() }
    }

    /// Basis vector e_i (0-based).
    pub fn basis_vector(n: usize, i: usize) -> Self {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        Self::vector(&e)
    }

    /// Dual basis covector e^i (0-based).
    pub fn basis_covector(n: usize, i: usize) -> Self {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        Self::covector(&e)
    }

    /// (1,1) tensor with T^i_j = m[(i,j)], i.e. the endomorphism m.
    pub fn endomorphism(m: &Mat3) -> Self {
        let mut t = Self::zeros(3, 1, 1);
        for i in 0..3 {
            for j in 0..3 {
                t.entries[3 * i + j] = m[(i, j)];
            }
        }
        t
    }

    /// (0,2) tensor with entries q_ij = m[(i,j)].
    pub fn covariant2(m: &Mat3) -> Self {
        let mut t = Self::endomorphism(m);
        t.r = 0;
        t.s = 2;
        t
    }

    /// (2,0) tensor with entries Q^ij = m[(i,j)].
    pub fn contravariant2(m: &Mat3) -> Self {
        let mut t = Self::endomorphism(m);
        t.r = 2;
        t.s = 0;
        t
    }

    /// w = e^1 ^ e^2 ^ e^3 as a (0,3) tensor (Levi-Civita symbol).
    pub fn volume() -> Self {
        let mut t = Self::zeros(3, 0, 3);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    t.entries[9 * i + 3 * j + k] = levi_civita(i, j, k);
                }
            }
        }
        t
    }

    /// e^i ^ e^j = e^i (x) e^j - e^j (x) e^i (0-based indices).
    pub fn two_form(i: usize, j: usize) -> Self {
        let mut t = Self::zeros(3, 0, 2);
        t.entries[3 * i + j] += 1.0;
        t.entries[3 * j + i] -= 1.0;
        t
    }

    pub fn order(&self) -> usize {
        self.r + self.s
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.entries[self.flat(idx)]
    }

    fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut t = self.clone();
        t.entries.iter_mut().for_each(|x| *x *= c);
        t
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.n, self.r, self.s), (other.n, other.r, other.s));
        let mut t = self.clone();
        for (a, b) in t.entries.iter_mut().zip(&other.entries) {
            *a += b;
        }
        t
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(-1.0))
    }

    /// Tensor product; contravariant slots of self, then of other, then the
    /// covariant slots in the same order.
    pub fn tensor(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let (r, s) = (self.r + other.r, self.s + other.s);
        let mut out = Self::zeros(n, r, s);
        let total = r + s;
        let mut idx = vec![0usize; total];
        for flat in 0..out.entries.len() {
            let mut f = flat;
            for k in (0..total).rev() {
                idx[k] = f % n;
                f /= n;
            }
            let mut a = Vec::with_capacity(self.order());
            let mut b = Vec::with_capacity(other.order());
            a.extend_from_slice(&idx[..self.r]);
            b.extend_from_slice(&idx[self.r..r]);
            a.extend_from_slice(&idx[r..r + self.s]);
            b.extend_from_slice(&idx[r + self.s..]);
            out.entries[flat] = self.get(&a) * other.get(&b);
        }
        out
    }

    /// Tensor power t (x) ... (x) t (k >= 1 copies); k = 0 gives the scalar 1.
    pub fn power(&self, k: usize) -> Self {
        let mut acc = TensorValue { n: self.n, r: 0, s: 0, entries: vec![1.0] };
        for _ in 0..k {
            acc = acc.tensor(self);
        }
        acc
    }

    /// Symmetrization over all slots of the same kind (used for products of
    /// vectors only).
    pub fn symmetrized_contravariant(&self) -> Self {
        assert_eq!(self.s, 0);
        let n = self.n;
        let r = self.r;
        let perms = permutations(r);
        let mut out = Self::zeros(n, r, 0);
        let mut idx = vec![0usize; r];
        for flat in 0..out.entries.len() {
            let mut f = flat;
            for k in (0..r).rev() {
                idx[k] = f % n;
                f /= n;
            }
            let mut acc = 0.0;
            for p in &perms {
                let permuted: Vec<usize> = p.iter().map(|&k| idx[k]).collect();
                acc += self.get(&permuted);
            }
            out.entries[flat] = acc / perms.len() as f64;
        }
        out
    }

    /// Apply the n x n matrix `m` to a single slot.
    fn transform_slot(&self, slot: usize, m: &DMatrix<f64>) -> Self {
        let n = self.n;
        let order = self.order();
        let stride = n.pow((order - 1 - slot) as u32);
        let mut out = Self::zeros(n, self.r, self.s);
        for flat in 0..self.entries.len() {
            let i = (flat / stride) % n;
            let base = flat - i * stride;
            let mut acc = 0.0;
            for p in 0..n {
                acc += m[(i, p)] * self.entries[base + p * stride];
            }
            out.entries[flat] = acc;
        }
        out
    }

    pub fn as_mat3(&self) -> Option<Mat3> {
        if self.n != 3 || self.order() != 2 {
            return None;
        }
        Some(Mat3::from_row_slice(&self.entries))
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

fn to_dmatrix(a: &Mat3) -> DMatrix<f64> {
    DMatrix::from_fn(3, 3, |i, j| a[(i, j)])
}

/// Natural GL(3) action: contravariant slots by `a`, covariant slots by
/// the inverse transpose.
pub fn act(a: &Mat3, t: &TensorValue) -> Result<TensorValue, TensorError> {
    act_n(&to_dmatrix(a), t)
}

/// Same as [`act`] for an n x n matrix acting on tensors over R^n.
pub fn act_n(a: &DMatrix<f64>, t: &TensorValue) -> Result<TensorValue, TensorError> {
    let det = a.determinant();
    if det.abs() <= 1e-12 {
        return Err(TensorError::SingularMatrix { det });
    }
    if a.nrows() != t.n {
        return Err(TensorError::Shape("matrix size does not match tensor dimension".into()));
    }
    let inv = a.clone().try_inverse().ok_or(TensorError::SingularMatrix { det })?;
    let inv_t = inv.transpose();
    let mut out = t.clone();
    for slot in 0..t.order() {
        let m = if slot < t.r { a } else { &inv_t };
        out = out.transform_slot(slot, m);
    }
    Ok(out)
}

/// Infinitesimal action of a Lie algebra element H: H on contravariant
/// slots, -H^T on covariant ones.
pub fn act_inf(h: &Mat3, t: &TensorValue) -> TensorValue {
    act_inf_n(&to_dmatrix(h), t)
}

pub fn act_inf_n(h: &DMatrix<f64>, t: &TensorValue) -> TensorValue {
    let neg_t = -h.transpose();
    let mut out = TensorValue::zeros(t.n, t.r, t.s);
    for slot in 0..t.order() {
        let m = if slot < t.r { h } else { &neg_t };
        out = out.add(&t.transform_slot(slot, m));
    }
    out
}

/// Real canonical form of a 3x3 matrix, with its eigen-data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "case")]
pub enum CanonicalCase {
    /// real eigenvalue lambda and a complex pair alpha +- i beta, beta > 0
    A { lambda: f64, alpha: f64, beta: f64 },
    /// three distinct real eigenvalues, lambda > mu > nu
    B { lambda: f64, mu: f64, nu: f64 },
    /// lambda double with a 2x2 Jordan block, mu simple
    C { lambda: f64, mu: f64 },
    /// lambda double (diagonalizable), mu simple
    D { lambda: f64, mu: f64 },
    /// lambda triple, one 3x3 Jordan block
    E { lambda: f64 },
    /// lambda triple, Jordan blocks 2+1
    F { lambda: f64 },
    /// homothety lambda I
    G { lambda: f64 },
}

impl CanonicalCase {
    pub fn tag(&self) -> char {
        match self {
            CanonicalCase::A { .. } => 'a',
            CanonicalCase::B { .. } => 'b',
            CanonicalCase::C { .. } => 'c',
            CanonicalCase::D { .. } => 'd',
            CanonicalCase::E { .. } => 'e',
            CanonicalCase::F { .. } => 'f',
            CanonicalCase::G { .. } => 'g',
        }
    }

    /// Eigen-data in a fixed per-tag order.
    pub fn eigen_data(&self) -> Vec<f64> {
        match *self {
            CanonicalCase::A { lambda, alpha, beta } => vec![lambda, alpha, beta],
            CanonicalCase::B { lambda, mu, nu } => vec![lambda, mu, nu],
            CanonicalCase::C { lambda, mu } | CanonicalCase::D { lambda, mu } => vec![lambda, mu],
            CanonicalCase::E { lambda } | CanonicalCase::F { lambda } | CanonicalCase::G { lambda } => {
                vec![lambda]
            }
        }
    }

    /// Same orbit: equal tag and eigen-data within `tol` (absolute).
    pub fn same_orbit(&self, other: &CanonicalCase, tol: f64) -> bool {
        self.tag() == other.tag()
            && self
                .eigen_data()
                .iter()
                .zip(other.eigen_data())
                .all(|(a, b)| (a - b).abs() <= tol)
    }

    /// A representative matrix of the orbit.
    pub fn representative(&self) -> Mat3 {
        match *self {
            CanonicalCase::A { lambda, alpha, beta } => {
                Mat3::new(alpha, beta, 0.0, -beta, alpha, 0.0, 0.0, 0.0, lambda)
            }
            CanonicalCase::B { lambda, mu, nu } => Mat3::from_diagonal(&[lambda, mu, nu].into()),
            CanonicalCase::C { lambda, mu } => Mat3::new(lambda, 1.0, 0.0, 0.0, lambda, 0.0, 0.0, 0.0, mu),
            CanonicalCase::D { lambda, mu } => Mat3::from_diagonal(&[lambda, lambda, mu].into()),
            CanonicalCase::E { lambda } => Mat3::new(lambda, 1.0, 0.0, 0.0, lambda, 1.0, 0.0, 0.0, lambda),
            CanonicalCase::F { lambda } => Mat3::new(lambda, 1.0, 0.0, 0.0, lambda, 0.0, 0.0, 0.0, lambda),
            CanonicalCase::G { lambda } => Mat3::identity() * lambda,
        }
    }
}

/// Compact number formatting for reports: rounds to 9 decimals.
pub fn fmt_num(x: f64) -> String {
    let r = (x * 1e9).round() / 1e9;
    let r = if r == 0.0 { 0.0 } else { r };
    format!("{r}")
}

impl fmt::Display for CanonicalCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "case ({})", self.tag())?;
        match *self {
            CanonicalCase::A { lambda, alpha, beta } => {
                write!(f, ", λ={}, α={}, β={}", fmt_num(lambda), fmt_num(alpha), fmt_num(beta))
            }
            CanonicalCase::B { lambda, mu, nu } => {
                write!(f, ", λ={}, μ={}, ν={}", fmt_num(lambda), fmt_num(mu), fmt_num(nu))
            }
            CanonicalCase::C { lambda, mu } | CanonicalCase::D { lambda, mu } => {
                write!(f, ", λ={}, μ={}", fmt_num(lambda), fmt_num(mu))
            }
            CanonicalCase::E { lambda } | CanonicalCase::F { lambda } | CanonicalCase::G { lambda } => {
                write!(f, ", λ={}", fmt_num(lambda))
            }
        }
    }
}

/// Depressed characteristic polynomial data of m: shift s = tr/3 and the
/// coefficients of x^3 + p x + q for n = m - sI.
fn depressed(m: &Mat3) -> (f64, Mat3, f64, f64) {
    let s = m.trace() / 3.0;
    let n = m - Mat3::identity() * s;
    let p = n[(0, 0)] * n[(1, 1)] - n[(0, 1)] * n[(1, 0)] + n[(0, 0)] * n[(2, 2)]
        - n[(0, 2)] * n[(2, 0)]
        + n[(1, 1)] * n[(2, 2)]
        - n[(1, 2)] * n[(2, 1)];
    let q = -n.determinant();
    (s, n, p, q)
}

/// Three real roots of x^3 + p x + q when 4p^3 + 27q^2 <= 0, descending.
fn trig_roots(p: f64, q: f64) -> [f64; 3] {
    if p >= 0.0 {
        return [0.0; 3];
    }
    let m = 2.0 * (-p / 3.0).sqrt();
    let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
    let theta = arg.acos() / 3.0;
    let mut r = [
        m * theta.cos(),
        m * (theta - 2.0 * std::f64::consts::PI / 3.0).cos(),
        m * (theta - 4.0 * std::f64::consts::PI / 3.0).cos(),
    ];
    r.sort_by(|a, b| b.partial_cmp(a).unwrap());
    r
}

/// Real root of x^3 + p x + q when the discriminant admits a complex pair.
fn cardano_real_root(p: f64, q: f64) -> f64 {
    let d = (q * q / 4.0 + p * p * p / 27.0).max(0.0).sqrt();
    (-q / 2.0 + d).cbrt() + (-q / 2.0 - d).cbrt()
}

/// Classify m into the seven real canonical cases by testing the
/// minimal-polynomial identities in order of increasing degree.
pub fn canonical_case(m: &Mat3, tol: f64) -> Result<CanonicalCase, TensorError> {
    let thr = tol * (1.0 + m.norm().powi(3));
    let id = Mat3::identity();
    let (s, n, p, q) = depressed(m);

    if n.norm() <= thr {
        return Ok(CanonicalCase::G { lambda: s });
    }

    // Double-root data from the depressed cubic: roots r, r, -2r. When the
    // two values agree the root is triple and (c)/(d) do not apply; near a
    // triple root -3q/2p is round-off over round-off.
    let double = if p != 0.0 {
        let r = -3.0 * q / (2.0 * p);
        (3.0 * r.abs() > 1e-6 * (1.0 + m.norm())).then_some((s + r, s - 2.0 * r))
    } else {
        None
    };

    let f_ok = (n * n).norm() <= thr;
    let d_case = double.and_then(|(lam, mu)| {
        let res = ((m - id * lam) * (m - id * mu)).norm();
        (res <= thr).then_some(CanonicalCase::D { lambda: lam, mu })
    });
    match (f_ok, d_case) {
        (true, Some(_)) => return Err(TensorError::AmbiguousCase { first: 'd', second: 'f' }),
        (true, None) => return Ok(CanonicalCase::F { lambda: s }),
        (false, Some(c)) => return Ok(c),
        (false, None) => {}
    }

    let e_ok = (n * n * n).norm() <= thr;
    let c_case = double.and_then(|(lam, mu)| {
        let a = m - id * lam;
        let res = (a * a * (m - id * mu)).norm();
        (res <= thr).then_some(CanonicalCase::C { lambda: lam, mu })
    });
    match (e_ok, c_case) {
        (true, Some(_)) => return Err(TensorError::AmbiguousCase { first: 'c', second: 'e' }),
        (true, None) => return Ok(CanonicalCase::E { lambda: s }),
        (false, Some(c)) => return Ok(c),
        (false, None) => {}
    }

    let disc = 4.0 * p * p * p + 27.0 * q * q;
    if disc < 0.0 {
        let r = trig_roots(p, q);
        Ok(CanonicalCase::B { lambda: s + r[0], mu: s + r[1], nu: s + r[2] })
    } else {
        let t = cardano_real_root(p, q);
        let beta = (0.75 * t * t + p).max(0.0).sqrt();
        Ok(CanonicalCase::A { lambda: s + t, alpha: s - t / 2.0, beta })
    }
}

/// Eigenvalues of a symmetric 3x3 matrix, descending.
/// Ascending. The closed-form cubic loses half the digits at repeated roots, so use the iterative solver.
pub fn symmetric_eigenvalues(m: &Mat3) -> [f64; 3] {
    let mut ev: [f64; 3] = m.symmetric_eigenvalues().into();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Rank and signature of a symmetric bilinear form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Sym2Orbit {
    pub rank: usize,
    pub p: usize,
    pub m: usize,
}

impl fmt::Display for Sym2Orbit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rank {}, signature ({},{})", self.rank, self.p, self.m)
    }
}

pub fn sym2_orbit_mat(q: &Mat3, tol: f64) -> Result<Sym2Orbit, TensorError> {
    let asym = (q - q.transpose()).norm();
    if asym > tol * (1.0 + q.norm()) {
        return Err(TensorError::NotSymmetric { residual: asym });
    }
    let sym = (q + q.transpose()) * 0.5;
    let scale = sym.norm();
    let ev = symmetric_eigenvalues(&sym);
    let (mut p, mut m) = (0, 0);
    for l in ev {
        if l.abs() > tol * scale {
            if l > 0.0 {
                p += 1;
            } else {
                m += 1;
            }
        }
    }
    Ok(Sym2Orbit { rank: p + m, p, m })
}

pub fn sym2_orbit(q: &TensorValue, tol: f64) -> Result<Sym2Orbit, TensorError> {
    if q.n != 3 || q.r != 0 || q.s != 2 {
        return Err(TensorError::Shape("expected a (0,2) tensor over R^3".into()));
    }
    sym2_orbit_mat(&q.as_mat3().unwrap(), tol)
}

/// Rank of an antisymmetric (0,2) tensor on R^3: 0 or 2.
pub fn twoform_rank(eta: &TensorValue, tol: f64) -> usize {
    if eta.norm() > tol {
        2
    } else {
        0
    }
}

/// Matrix exponential by scaling and squaring with a Taylor kernel.
pub fn expm(a: &Mat3) -> Mat3 {
    let norm = a.norm();
    let mut k = 0;
    while norm / 2f64.powi(k) > 0.25 {
        k += 1;
    }
    let b = a / 2f64.powi(k);
    let mut term = Mat3::identity();
    let mut sum = Mat3::identity();
    for i in 1..20 {
        term = term * b / i as f64;
        sum += term;
    }
    for _ in 0..k {
        sum = sum * sum;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn volume_scales_by_inverse_det() {
        let a = Mat3::new(2.0, 1.0, 0.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0);
        let w = TensorValue::volume();
        let aw = act(&a, &w).unwrap();
        let expected = w.scaled(1.0 / a.determinant());
        assert!(aw.sub(&expected).norm() < 1e-12);
    }

    #[test]
    fn diag_action_on_vector_and_covector() {
        let a = Mat3::from_diagonal(&[2.0, 1.0, 1.0].into());
        let v = act(&a, &TensorValue::basis_vector(3, 0)).unwrap();
        let c = act(&a, &TensorValue::basis_covector(3, 0)).unwrap();
        assert_eq!(v.entries, vec![2.0, 0.0, 0.0]);
        assert_eq!(c.entries, vec![0.5, 0.0, 0.0]);
    }

    #[test]
    fn brute_force_action_on_11_tensor() {
        // act on a (1,1) tensor equals a T a^{-1}
        let a = Mat3::new(1.0, 2.0, 0.0, 0.5, 1.0, 1.0, 0.0, 3.0, 1.0);
        let m = Mat3::new(1.0, -1.0, 2.0, 0.0, 3.0, 1.0, 4.0, 0.0, 2.0);
        let t = act(&a, &TensorValue::endomorphism(&m)).unwrap();
        let expected = a * m * a.try_inverse().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((t.get(&[i, j]) - expected[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn singular_is_rejected() {
        let a = Mat3::zeros();
        assert!(matches!(act(&a, &TensorValue::volume()), Err(TensorError::SingularMatrix { .. })));
    }

    #[test]
    fn canonical_examples() {
        let e = Mat3::new(0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0);
        let c = canonical_case(&e, 1e-7).unwrap();
        assert_eq!(c.to_string(), "case (e), λ=0");
        let b = canonical_case(&Mat3::from_diagonal(&[0.0, 1.0, -1.0].into()), 1e-7).unwrap();
        assert!(b.same_orbit(&CanonicalCase::B { lambda: 1.0, mu: 0.0, nu: -1.0 }, 1e-12));
        let g = canonical_case(&(Mat3::identity() * 3.5), 1e-7).unwrap();
        assert_eq!(g, CanonicalCase::G { lambda: 3.5 });
        let a = Mat3::new(0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let ca = canonical_case(&a, 1e-7).unwrap();
        assert!(ca.same_orbit(&CanonicalCase::A { lambda: 0.0, alpha: 0.0, beta: 1.0 }, 1e-12));
    }

    #[test]
    fn large_tolerance_is_ambiguous() {
        let m = Mat3::new(0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1e-3);
        assert!(matches!(canonical_case(&m, 1e-2), Err(TensorError::AmbiguousCase { .. })));
    }

    #[test]
    fn sym2_examples() {
        let q = Mat3::new(-1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0);
        assert_eq!(sym2_orbit_mat(&q, 1e-9).unwrap(), Sym2Orbit { rank: 3, p: 1, m: 2 });
        let l = Mat3::from_diagonal(&[1.0, 1.0, -1.0].into());
        assert_eq!(sym2_orbit_mat(&l, 1e-9).unwrap(), Sym2Orbit { rank: 3, p: 2, m: 1 });
        let bad = Mat3::new(0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert!(sym2_orbit_mat(&bad, 1e-9).is_err());
    }

    #[test]
    fn twoform_examples() {
        let e12 = TensorValue::two_form(0, 1);
        assert_eq!(twoform_rank(&e12, 1e-9), 2);
        assert_eq!(twoform_rank(&TensorValue::zeros(3, 0, 2), 1e-9), 0);
        assert_eq!(twoform_rank(&e12.add(&TensorValue::two_form(1, 2).scaled(5.0)), 1e-9), 2);
    }

    #[test]
    fn expm_of_rotation_generator() {
        let h = Mat3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let r = expm(&(h * 0.3));
        assert!((r[(0, 0)] - 0.3f64.cos()).abs() < 1e-14);
        assert!((r[(1, 0)] - 0.3f64.sin()).abs() < 1e-14);
    }
}
