use mgs::lie_catalog::{algebra_basis, entry, representative_ids, GroupId};
use mgs::spencer::*;
use mgs::tensor_core::Mat3;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn m2(a: [[f64; 2]; 2]) -> DMatrix<f64> {
    DMatrix::from_fn(2, 2, |i, j| a[i][j])
}

fn id(s: &str) -> GroupId {
    s.parse().unwrap()
}

fn gl_vec(taus: &[Mat3]) -> Vec<f64> {
    taus.iter().flat_map(|t| (0..9).map(move |k| t[(k / 3, k % 3)])).collect()
}

// tau_ij^k - tau_ji^k with (tau_i)_{kj} = tau_ij^k, looped directly
fn brute_force(taus: &[DMatrix<f64>]) -> Vec<f64> {
    let n = taus.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in 0..n {
                out.push(taus[i][(k, j)] - taus[j][(k, i)]);
            }
        }
    }
    out
}

#[test]
fn plane_algebra_with_nilpotent_part() {
    let alpha = 1.0;
    let s = HomSpace::new(2, vec![m2([[alpha, 0.0], [0.0, 2.0]]), m2([[0.0, 1.0], [0.0, 0.0]])]).unwrap();
    let r = analyze(&s);
    assert_eq!(r.dim_kernel, 2);
    assert!(r.surjective);
    // S1 = b1 B, S2 = (b1/alpha) A + b2 B
    let expected = vec![vec![0.0, 1.0, 1.0 / alpha, 0.0], vec![0.0, 0.0, 0.0, 1.0]];
    assert!(subspace_distance(&r.kernel_basis, &expected) < 1e-9);
}

#[test]
fn diagonal_plane_algebra() {
    for (a, b) in [(1.0, 2.0), (-1.0, 3.0), (2.0, 2.0)] {
        let s = HomSpace::new(2, vec![m2([[a, 0.0], [0.0, b]])]).unwrap();
        assert!(analyze(&s).bijective);
    }
}

#[test]
fn traceless_diagonal_has_no_prolongation() {
    let s = HomSpace::from_mat3(&algebra_basis(&id("5A")).unwrap()).unwrap();
    let r = analyze(&s);
    assert_eq!(r.dim_kernel, 0);
    assert!(r.injective);
}

#[test]
fn f_structure_commutant_kernel() {
    let ent = entry(&id("8A")).unwrap();
    let s = HomSpace::from_mat3(ent.enlarged.as_ref().unwrap()).unwrap();
    let r = analyze(&s);
    assert_eq!(r.dim_kernel, 3);
    let rot = |a1: f64, a2: f64| Mat3::new(a1, a2, 0.0, -a2, a1, 0.0, 0.0, 0.0, 0.0);
    let z = Mat3::zeros();
    let b3 = Mat3::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0);
    // tau_2 for (a1, a2) is [[a2, -a1], [a1, a2]]
    let t2 = |a1: f64, a2: f64| Mat3::new(a2, -a1, 0.0, a1, a2, 0.0, 0.0, 0.0, 0.0);
    let expected = vec![
        gl_vec(&[rot(1.0, 0.0), t2(1.0, 0.0), z]),
        gl_vec(&[rot(0.0, 1.0), t2(0.0, 1.0), z]),
        gl_vec(&[z, z, b3]),
    ];
    assert!(subspace_distance(&kernel_in_gl(&s, &r), &expected) < 1e-9);
}

#[test]
fn nilpotent_commutant_kernel() {
    // work in the coordinates where h is the shift u
    let i = Mat3::identity();
    let u = Mat3::new(0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0);
    let s = HomSpace::from_mat3(&[i, u, u * u]).unwrap();
    let r = analyze(&s);
    assert_eq!(r.dim_kernel, 3);
    let up = |a: f64, b: f64, c: f64| i * a + u * b + u * u * c;
    let expected = vec![
        gl_vec(&[up(0.0, 0.0, 1.0), up(0.0, 1.0, 0.0), up(1.0, 0.0, 0.0)]),
        gl_vec(&[Mat3::zeros(), up(0.0, 0.0, 1.0), up(0.0, 1.0, 0.0)]),
        gl_vec(&[Mat3::zeros(), Mat3::zeros(), up(0.0, 0.0, 1.0)]),
    ];
    assert!(subspace_distance(&kernel_in_gl(&s, &r), &expected) < 1e-9);

    // the catalog algebra, conjugated, gives the same kernel
    let ent = entry(&id("24")).unwrap();
    let p = ent.conjugation.unwrap();
    let pinv = p.try_inverse().unwrap();
    let conj: Vec<Mat3> = ent.enlarged.unwrap().iter().map(|m| pinv * m * p).collect();
    let s2 = HomSpace::from_mat3(&conj).unwrap();
    let r2 = analyze(&s2);
    assert!(subspace_distance(&kernel_in_gl(&s2, &r2), &expected) < 1e-9);
}

#[test]
fn forced_traces() {
    for g in ["1B(1,-2,1)", "1B(-2,1,1)", "1B(1,1,-2)"] {
        let ent = entry(&id(g)).unwrap();
        let s = HomSpace::from_mat3(ent.enlarged.as_ref().unwrap()).unwrap();
        let r = analyze(&s);
        assert_eq!(trace_profile(&s, &r), vec![false, true, true], "{g}");
    }
    for g in ["3B(-2,1,1)", "3B(1,-2,1)"] {
        let ent = entry(&id(g)).unwrap();
        let s = HomSpace::from_mat3(ent.enlarged.as_ref().unwrap()).unwrap();
        assert_eq!(trace_profile(&s, &analyze(&s)), vec![true, true, true], "{g}");
    }
    let ent = entry(&id("7B")).unwrap();
    let s = HomSpace::from_mat3(ent.enlarged.as_ref().unwrap()).unwrap();
    assert_eq!(trace_profile(&s, &analyze(&s)), vec![true, true, false]);
}

#[test]
fn lower_triangular_table_first_row() {
    // basis order E21, E31, E32, diagonal; coefficient a_i on the diagonal
    let ent = entry(&id("1B(1,-2,1)")).unwrap();
    let basis = ent.enlarged.unwrap();
    let alpha = basis[3][(0, 0)];
    let s = HomSpace::from_mat3(&basis).unwrap();
    let c: Vec<f64> = (0..12).map(|k| 0.3 + 0.1 * k as f64).collect();
    let out = apply(&s, &c).unwrap();
    let a = |i: usize| c[i * 4 + 3];
    assert!((out[0][0] - (-alpha * a(1))).abs() < 1e-14);
    assert!((out[1][0] - (-alpha * a(2))).abs() < 1e-14);
    assert!(out[2][0].abs() < 1e-14);
}

#[test]
fn gl3_unit_example() {
    let mut t1 = DMatrix::zeros(3, 3);
    t1[(1, 0)] = 1.0;
    let taus = vec![t1, DMatrix::zeros(3, 3), DMatrix::zeros(3, 3)];
    let out: Vec<f64> = apply_maps(&taus).iter().flat_map(|v| v.iter().copied().collect::<Vec<_>>()).collect();
    assert_eq!(out, brute_force(&taus));
    assert!(out.iter().all(|x| *x == 0.0));
}

#[test]
fn catalog_rank_nullity_and_monotonicity() {
    let gl: Vec<Mat3> = (0..9).map(|k| Mat3::from_fn(|i, j| if 3 * i + j == k { 1.0 } else { 0.0 })).collect();
    let sg = HomSpace::from_mat3(&gl).unwrap();
    let kgl = kernel_in_gl(&sg, &analyze(&sg));
    for g in representative_ids() {
        let basis = algebra_basis(&g).unwrap();
        if basis.is_empty() {
            continue;
        }
        let s = HomSpace::from_mat3(&basis).unwrap();
        let r = analyze(&s);
        assert_eq!(r.dim_kernel + r.dim_image, r.dim_domain, "{g}");
        let k = kernel_in_gl(&s, &r);
        if !k.is_empty() {
            assert!(projection_residual(&k, &kgl) < 1e-9, "{g}");
        }
    }
    // sl(3) inside gl(3)
    let s9 = HomSpace::from_mat3(&algebra_basis(&id("9")).unwrap()).unwrap();
    let k9 = kernel_in_gl(&s9, &analyze(&s9));
    let s10 = HomSpace::from_mat3(&algebra_basis(&id("10")).unwrap()).unwrap();
    let k10 = kernel_in_gl(&s10, &analyze(&s10));
    assert!(projection_residual(&k10, &k9) < 1e-9);
}

proptest! {
    #[test]
    fn apply_is_linear_and_matches_loop(c in prop::collection::vec(-2.0f64..2.0, 12), e in prop::collection::vec(-2.0f64..2.0, 12), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let s = HomSpace::from_mat3(&algebra_basis(&id("2A")).unwrap()).unwrap();
        let mix: Vec<f64> = c.iter().zip(&e).map(|(x, y)| a * x + b * y).collect();
        let lhs = apply(&s, &mix).unwrap();
        let l = apply(&s, &c).unwrap();
        let r = apply(&s, &e).unwrap();
        for p in 0..3 {
            let d = &lhs[p] - (&l[p] * a + &r[p] * b);
            prop_assert!(d.norm() <= 1e-12 * (1.0 + lhs[p].norm()));
        }
        let flat: Vec<f64> = l.iter().flat_map(|v| v.iter().copied().collect::<Vec<_>>()).collect();
        let bf = brute_force(&s.maps(&c).unwrap());
        for (x, y) in flat.iter().zip(&bf) {
            prop_assert!((x - y).abs() < 1e-13);
        }
    }
}
