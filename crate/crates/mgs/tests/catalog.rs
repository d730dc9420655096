use mgs::lie_catalog::*;
use mgs::tensor_core::{act, act_inf_n, expm, Mat3, TensorValue};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn appendix_dim(id: &GroupId) -> usize {
    let f = id.family as usize;
    let v = match id.variant {
        Variant::A => 0,
        Variant::B => 1,
        Variant::C => 2,
        Variant::Plain => 0,
    };
    let rows: [&[usize]; 26] = [
        &[5, 4, 3],
        &[4, 3, 2],
        &[4, 3, 2],
        &[3, 2, 1],
        &[2, 1, 0],
        &[4, 3],
        &[4, 3],
        &[2, 1],
        &[8],
        &[6],
        &[6],
        &[5],
        &[5],
        &[4],
        &[3],
        &[3],
        &[3],
        &[3],
        &[3],
        &[3],
        &[2],
        &[2],
        &[2],
        &[2],
        &[1],
        &[1],
    ];
    rows[f - 1][v]
}

fn to_d(m: &Mat3) -> DMatrix<f64> {
    DMatrix::from_fn(3, 3, |i, j| m[(i, j)])
}

// Linear residual of H acting on one invariant, written out directly.
fn linear_defect(inv: &Invariant, h: &Mat3) -> Vec<f64> {
    let outside = |basis: &[nalgebra::Vector3<f64>], v: nalgebra::Vector3<f64>| -> Vec<f64> {
        let b = DMatrix::from_fn(3, basis.len(), |r, c| basis[c][r]);
        let proj = &b * (b.transpose() * &b).try_inverse().unwrap() * b.transpose();
        let vd = DVector::from_column_slice(v.as_slice());
        (&vd - proj * &vd).iter().copied().collect()
    };
    match inv {
        Invariant::Tensor { value, .. } => act_inf_n(&to_d(h), value).entries,
        Invariant::Projective { value, .. } => {
            let v = act_inf_n(&to_d(h), value);
            let tt: f64 = value.entries.iter().map(|x| x * x).sum();
            let c: f64 = v.entries.iter().zip(&value.entries).map(|(a, b)| a * b).sum::<f64>() / tt;
            v.sub(&value.scaled(c)).entries
        }
        Invariant::Subspace { basis, .. } => basis.iter().flat_map(|b| outside(basis, h * b)).collect(),
        Invariant::Tangent { basis, value, .. } => {
            let mut out: Vec<f64> = basis.iter().flat_map(|b| outside(basis, h * b)).collect();
            // coordinates of H b_j in the basis
            let bm = DMatrix::from_fn(3, 2, |r, c| basis[c][r]);
            let blk = (bm.transpose() * &bm).try_inverse().unwrap() * bm.transpose() * to_d(h) * &bm;
            out.extend(act_inf_n(&blk, value).entries);
            out
        }
        Invariant::Transverse { line, complement, value, .. } => {
            let mut out = outside(&[*line], h * line);
            let m = DMatrix::from_fn(3, 3, |r, c| [complement[0], complement[1], *line][c][r]);
            let conj = m.clone().try_inverse().unwrap() * to_d(h) * m;
            out.extend(act_inf_n(&conj.view((0, 0), (2, 2)).into_owned(), value).entries);
            out
        }
    }
}

fn unit(i: usize, j: usize) -> Mat3 {
    let mut m = Mat3::zeros();
    m[(i, j)] = 1.0;
    m
}

fn span_residual(basis: &[Mat3], m: &Mat3) -> f64 {
    distance_to_span(basis, m)
}

#[test]
fn dimensions_match_appendix_and_traces_vanish() {
    for id in representative_ids() {
        let basis = algebra_basis(&id).unwrap();
        assert_eq!(basis.len(), appendix_dim(&id), "{id}");
        assert_eq!(entry(&id).unwrap().dim, basis.len());
        for b in &basis {
            assert!(b.trace().abs() < 1e-12, "{id}");
        }
    }
    for f in [17u8, 18, 21, 22, 25] {
        let id = GroupId::plain(f);
        let basis = algebra_basis(&id).unwrap();
        assert_eq!(basis.len(), appendix_dim(&id));
        assert!(basis.iter().all(|b| b.trace().abs() < 1e-12));
    }
}

#[test]
fn isotropy_algebra_of_invariants_is_the_basis_span() {
    for id in representative_ids() {
        let ent = entry(&id).unwrap();
        // linear map gl(3) -> residuals
        let cols: Vec<Vec<f64>> = (0..9)
            .map(|k| ent.invariants.iter().flat_map(|inv| linear_defect(inv, &unit(k / 3, k % 3))).collect())
            .collect();
        let rows = cols[0].len();
        let m = DMatrix::from_fn(rows, 9, |r, c| cols[c][r]);
        let svd = m.svd(false, true);
        let vt = svd.v_t.unwrap();
        let smax = svd.singular_values.max();
        let null: Vec<Mat3> = (0..vt.nrows())
            .filter(|&i| svd.singular_values[i] <= 1e-10 * smax.max(1.0))
            .map(|i| Mat3::from_fn(|r, c| vt[(i, 3 * r + c)]))
            .collect();
        // rank deficient svd: v_t has min(rows, 9) rows; add the trailing directions
        let extra = 9usize.saturating_sub(vt.nrows());
        assert_eq!(null.len() + extra, ent.dim, "{id}: isotropy dimension");
        for n in &null {
            assert!(span_residual(&ent.basis, n) < 1e-9, "{id}");
        }
        for b in &ent.basis {
            for inv in &ent.invariants {
                let d: f64 = linear_defect(inv, b).iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!(d < 1e-12, "{id} {} {d}", inv.name());
            }
        }
    }
}

fn random_element(basis: &[Mat3], rng: &mut ChaCha8Rng, scale: f64) -> Mat3 {
    basis.iter().fold(Mat3::zeros(), |acc, b| acc + b * rng.gen_range(-scale..scale))
}

#[test]
fn exponentials_fix_the_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for id in representative_ids() {
        let ent = entry(&id).unwrap();
        for _ in 0..100 {
            let g = expm(&random_element(&ent.basis, &mut rng, 0.7));
            assert!(in_group(&id, &g, 1e-8).unwrap(), "{id}");
            for inv in &ent.invariants {
                match inv {
                    Invariant::Tensor { value, .. } => {
                        assert!(act(&g, value).unwrap().sub(value).norm() < 1e-8 * (1.0 + value.norm()), "{id}");
                    }
                    Invariant::Projective { value, .. } => {
                        let v = act(&g, value).unwrap();
                        let lam = v.entries.iter().zip(&value.entries).map(|(a, b)| a * b).sum::<f64>()
                            / value.entries.iter().map(|x| x * x).sum::<f64>();
                        assert!(lam.abs() > 1e-6);
                        assert!(v.sub(&value.scaled(lam)).norm() < 1e-8, "{id}");
                    }
                    other => assert!(other.group_defect(&g).unwrap() < 1e-8, "{id}"),
                }
            }
        }
    }
}

#[test]
fn algebras_are_closed_under_brackets() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut ids = representative_ids();
    ids.extend([17u8, 18, 21, 22, 25].map(GroupId::plain));
    for id in ids {
        let basis = algebra_basis(&id).unwrap();
        for _ in 0..200 {
            let a = random_element(&basis, &mut rng, 1.0);
            let b = random_element(&basis, &mut rng, 1.0);
            assert!(in_algebra(&id, &(a * b - b * a), 1e-10).unwrap(), "{id}");
        }
    }
}

#[test]
fn elements_outside_are_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for id in representative_ids() {
        let ent = entry(&id).unwrap();
        if ent.dim == 8 {
            continue;
        }
        let h = Mat3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let h = h - Mat3::identity() * (h.trace() / 3.0);
        assert!(!in_algebra(&id, &h, 1e-9).unwrap(), "{id}");
        let g = expm(&(h * 0.5));
        assert!(!in_group(&id, &g, 1e-9).unwrap(), "{id}");
    }
    // det != 1
    assert!(!in_group(&GroupId::plain(9), &(Mat3::identity() * 2.0), 1e-9).unwrap());
}

#[test]
fn twenty_invariant_has_order_four() {
    let ent = entry(&GroupId::plain(20)).unwrap();
    match &ent.invariants[0] {
        Invariant::Projective { value, .. } => assert_eq!(value.order(), 4),
        _ => panic!("expected projective"),
    }
    let _ = TensorValue::volume();
}

#[test]
fn json_dump_has_stable_fields() {
    let ent = entry(&GroupId::plain(9)).unwrap();
    let v = serde_json::to_value(&ent).unwrap();
    assert_eq!(v["id"], "9");
    assert_eq!(v["dim"], 8);
    assert_eq!(v["basis"].as_array().unwrap().len(), 8);
    assert_eq!(v["basis"][0].as_array().unwrap().len(), 9);
    assert_eq!(v["material_class"], "isotropic-fluid");
}
