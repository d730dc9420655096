//! The operator d(tau)(e_i ^ e_j) = tau_i e_j - tau_j e_i on Hom(R^n, g), its
//! kernel (first prolongation) and image.

use crate::tensor_core::Mat3;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpencerError {
    #[error("algebra basis is degenerate: rank {rank} < {dim}")]
    DegenerateBasis { rank: usize, dim: usize },
    #[error("unsupported dimension n = {0} (expected 2 or 3)")]
    BadDimension(usize),
    #[error("basis matrix {index} is not {n}x{n}")]
    BadShape { index: usize, n: usize },
    #[error("coefficient array has length {got}, expected {expected}")]
    BadCoefficients { got: usize, expected: usize },
}

const RANK_TOL: f64 = 1e-10;

/// Hom(R^n, g) for g spanned by `basis`. An element is a coefficient array
/// c of length n*d with tau_i = sum_k c[i*d + k] basis_k.
#[derive(Debug, Clone, PartialEq)]
pub struct HomSpace {
    pub n: usize,
    pub basis: Vec<DMatrix<f64>>,
}

fn rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * smax).count()
}

impl HomSpace {
    pub fn new(n: usize, basis: Vec<DMatrix<f64>>) -> Result<Self, SpencerError> {
        if n != 2 && n != 3 {
            return Err(SpencerError::BadDimension(n));
        }
        for (index, b) in basis.iter().enumerate() {
            if b.nrows() != n || b.ncols() != n {
                return Err(SpencerError::BadShape { index, n });
            }
        }
        let d = basis.len();
        let flat = DMatrix::from_fn(n * n, d, |r, c| basis[c][(r / n, r % n)]);
        let r = rank(&flat);
        if r < d {
            return Err(SpencerError::DegenerateBasis { rank: r, dim: d });
        }
        Ok(HomSpace { n, basis })
    }

    pub fn from_mat3(basis: &[Mat3]) -> Result<Self, SpencerError> {
        let b = basis.iter().map(|m| DMatrix::from_fn(3, 3, |i, j| m[(i, j)])).collect();
        HomSpace::new(3, b)
    }

    pub fn dim_algebra(&self) -> usize {
        self.basis.len()
    }

    pub fn dim_domain(&self) -> usize {
        self.n * self.basis.len()
    }

    /// Dimension of Hom(L^2 R^n, R^n).
    pub fn dim_codomain(&self) -> usize {
        self.n * self.n * (self.n - 1) / 2
    }

    /// The matrices tau_1..tau_n of a coefficient array.
    pub fn maps(&self, c: &[f64]) -> Result<Vec<DMatrix<f64>>, SpencerError> {
        let d = self.basis.len();
        if c.len() != self.n * d {
            return Err(SpencerError::BadCoefficients { got: c.len(), expected: self.n * d });
        }
        Ok((0..self.n)
            .map(|i| {
                (0..d).fold(DMatrix::zeros(self.n, self.n), |acc, k| acc + &self.basis[k] * c[i * d + k])
            })
            .collect())
    }

    /// Matrix of the operator: columns indexed like coefficient arrays, rows
    /// by (pair i<j in lexicographic order, component).
    pub fn operator_matrix(&self) -> DMatrix<f64> {
        let n = self.n;
        let d = self.basis.len();
        let pairs = pairs(n);
        let mut m = DMatrix::zeros(pairs.len() * n, n * d);
        for i in 0..n {
            for k in 0..d {
                let col = i * d + k;
                for (p, &(a, b)) in pairs.iter().enumerate() {
                    for r in 0..n {
                        let mut v = 0.0;
                        if a == i {
                            v += self.basis[k][(r, b)];
                        }
                        if b == i {
                            v -= self.basis[k][(r, a)];
                        }
                        m[(p * n + r, col)] = v;
                    }
                }
            }
        }
        m
    }
}

pub fn pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            out.push((i, j));
        }
    }
    out
}

/// (d tau)(e_i ^ e_j) for i < j, in the order of `pairs`.
pub fn apply_maps(taus: &[DMatrix<f64>]) -> Vec<DVector<f64>> {
    let n = taus.len();
    pairs(n)
        .into_iter()
        .map(|(i, j)| taus[i].column(j) - taus[j].column(i))
        .collect()
}

pub fn apply(space: &HomSpace, c: &[f64]) -> Result<Vec<DVector<f64>>, SpencerError> {
    Ok(apply_maps(&space.maps(c)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpencerReport {
    pub n: usize,
    pub dim_algebra: usize,
    pub dim_domain: usize,
    pub dim_codomain: usize,
    pub dim_kernel: usize,
    pub dim_image: usize,
    pub injective: bool,
    pub surjective: bool,
    pub bijective: bool,
    /// coefficient arrays in reduced echelon form
    pub kernel_basis: Vec<Vec<f64>>,
}

/// Reduced row echelon form of the given rows (partial pivoting); rows that
/// vanish are dropped.
pub fn rref(rows: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    if rows.is_empty() {
        return vec![];
    }
    let ncols = rows[0].len();
    let mut m: Vec<Vec<f64>> = rows.to_vec();
    let mut r = 0;
    for c in 0..ncols {
        if r == m.len() {
            break;
        }
        let (piv, val) = (r..m.len())
            .map(|i| (i, m[i][c].abs()))
            .fold((r, -1.0), |best, x| if x.1 > best.1 { x } else { best });
        if val <= tol {
            continue;
        }
        m.swap(r, piv);
        let p = m[r][c];
        m[r].iter_mut().for_each(|x| *x /= p);
        for i in 0..m.len() {
            if i != r {
                let f = m[i][c];
                if f != 0.0 {
                    let row = m[r].clone();
                    m[i].iter_mut().zip(&row).for_each(|(x, y)| *x -= f * y);
                }
            }
        }
        r += 1;
    }
    m.truncate(r);
    for row in &mut m {
        for x in row.iter_mut() {
            if x.abs() < tol {
                *x = 0.0;
            }
        }
    }
    m
}

pub fn analyze(space: &HomSpace) -> SpencerReport {
    let m = space.operator_matrix();
    let ncols = m.ncols();
    // pad so the SVD returns a full right factor
    let rows = m.nrows().max(ncols);
    let mut padded = DMatrix::zeros(rows, ncols);
    padded.view_mut((0, 0), (m.nrows(), ncols)).copy_from(&m);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.unwrap();
    let smax = svd.singular_values.max();
    let kernel: Vec<Vec<f64>> = (0..ncols)
        .filter(|&i| smax == 0.0 || svd.singular_values[i] <= RANK_TOL * smax)
        .map(|i| vt.row(i).iter().copied().collect())
        .collect();
    let dim_kernel = kernel.len();
    let dim_image = ncols - dim_kernel;
    let kernel_basis = rref(&kernel, 1e-12);
    let dim_codomain = space.dim_codomain();
    SpencerReport {
        n: space.n,
        dim_algebra: space.dim_algebra(),
        dim_domain: ncols,
        dim_codomain,
        dim_kernel,
        dim_image,
        injective: dim_kernel == 0,
        surjective: dim_image == dim_codomain,
        bijective: dim_kernel == 0 && dim_image == dim_codomain,
        kernel_basis,
    }
}

/// Kernel elements written in Hom(R^n, gl(n)) coordinates: concatenated
/// row-major tau_1, ..., tau_n.
pub fn kernel_in_gl(space: &HomSpace, report: &SpencerReport) -> Vec<Vec<f64>> {
    report
        .kernel_basis
        .iter()
        .map(|c| {
            space
                .maps(c)
                .unwrap()
                .iter()
                .flat_map(|t| t.transpose().iter().copied().collect::<Vec<_>>())
                .collect()
        })
        .collect()
}

/// For each slot i, whether tr(tau_i) vanishes on the whole kernel.
pub fn trace_profile(space: &HomSpace, report: &SpencerReport) -> Vec<bool> {
    let mut forced = vec![true; space.n];
    for c in &report.kernel_basis {
        for (i, t) in space.maps(c).unwrap().iter().enumerate() {
            if t.trace().abs() > 1e-10 {
                forced[i] = false;
            }
        }
    }
    forced
}

fn orthonormal(vs: &[Vec<f64>]) -> DMatrix<f64> {
    if vs.is_empty() {
        return DMatrix::zeros(0, 0);
    }
    let m = DMatrix::from_fn(vs[0].len(), vs.len(), |r, c| vs[c][r]);
    let svd = m.svd(true, false);
    let u = svd.u.unwrap();
    let smax = svd.singular_values.max();
    let k = svd.singular_values.iter().filter(|&&s| s > RANK_TOL * smax).count();
    u.columns(0, k).into_owned()
}

/// max over a in `a` of the distance from a/|a| to span(b).
pub fn projection_residual(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let q = orthonormal(b);
    a.iter()
        .map(|v| {
            let x = DVector::from_column_slice(v);
            let x = &x / x.norm().max(f64::MIN_POSITIVE);
            if q.ncols() == 0 {
                return x.norm();
            }
            (&x - &q * (q.transpose() * &x)).norm()
        })
        .fold(0.0, f64::max)
}

/// Mutual projection residual; zero iff the spans coincide (for
/// independent inputs of equal dimension).
pub fn subspace_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    projection_residual(a, b).max(projection_residual(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m2(a: [[f64; 2]; 2]) -> DMatrix<f64> {
        DMatrix::from_fn(2, 2, |i, j| a[i][j])
    }

    #[test]
    fn diagonal_plane_algebra_is_bijective() {
        let s = HomSpace::new(2, vec![m2([[1.0, 0.0], [0.0, 2.0]])]).unwrap();
        let r = analyze(&s);
        assert!(r.bijective);
        assert_eq!(r.dim_codomain, 2);
    }

    #[test]
    fn degenerate_basis() {
        let a = m2([[1.0, 0.0], [0.0, 2.0]]);
        assert!(matches!(HomSpace::new(2, vec![a.clone(), a * 2.0]), Err(SpencerError::DegenerateBasis { .. })));
        assert!(matches!(HomSpace::new(4, vec![]), Err(SpencerError::BadDimension(4))));
    }

    #[test]
    fn rref_canonical() {
        let r = rref(&[vec![2.0, 4.0], vec![1.0, 3.0]], 1e-12);
        assert_eq!(r, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(rref(&[vec![1.0, 1.0], vec![2.0, 2.0]], 1e-12).len(), 1);
    }

    #[test]
    fn rank_nullity() {
        let gl: Vec<Mat3> = (0..9)
            .map(|k| {
                let mut m = Mat3::zeros();
                m[(k / 3, k % 3)] = 1.0;
                m
            })
            .collect();
        let s = HomSpace::from_mat3(&gl).unwrap();
        let r = analyze(&s);
        assert_eq!(r.dim_kernel + r.dim_image, 27);
        // symmetric Christoffel-type arrays: 3 * 6
        assert_eq!(r.dim_kernel, 18);
        assert!(r.surjective);
        assert_eq!(trace_profile(&s, &r), vec![false; 3]);
    }
}
