use mgs::tensor_core::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Poly = fn(&Mat3) -> Mat3;

// Normalized representatives: lambda=0, mu=1, nu=-1, alpha=0, beta=1.
fn representatives() -> Vec<(char, Mat3)> {
    vec![
        ('a', Mat3::new(0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0)),
        ('b', Mat3::from_diagonal(&[0.0, 1.0, -1.0].into())),
        ('c', Mat3::new(0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0)),
        ('d', Mat3::from_diagonal(&[0.0, 0.0, 1.0].into())),
        ('e', Mat3::new(0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0)),
        ('f', Mat3::new(0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)),
        ('g', Mat3::identity() * 2.0),
    ]
}

fn well_conditioned(rng: &mut ChaCha8Rng) -> Mat3 {
    loop {
        let g = Mat3::from_fn(|_, _| rng.gen_range(-1.0..1.0)) + Mat3::identity() * 1.5;
        let sv = g.singular_values();
        if sv.max() / sv.min() < 10.0 {
            return g;
        }
    }
}

#[test]
fn representatives_survive_conjugation() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for (tag, m) in representatives() {
        let base = canonical_case(&m, 1e-9).unwrap();
        assert_eq!(base.tag(), tag);
        for _ in 0..100 {
            let g = well_conditioned(&mut rng);
            let c = canonical_case(&(g * m * g.try_inverse().unwrap()), 1e-9).unwrap();
            assert_eq!(c.tag(), tag);
            assert!(c.same_orbit(&base, 1e-6), "{c:?} vs {base:?}");
        }
    }
}

#[test]
fn minimal_polynomial_identities() {
    let i = Mat3::identity();
    let id: [(char, Poly); 6] = [
        ('a', |u| u * u * u + u),
        ('b', |u| u * u * u - u),
        ('c', |u| u * u * u - u * u),
        ('d', |u| u * u - u),
        ('e', |u| u * u * u),
        ('f', |u| u * u),
    ];
    for (tag, m) in representatives().into_iter().filter(|(t, _)| *t != 'g') {
        let (_, f) = id.iter().find(|(t, _)| *t == tag).unwrap();
        assert!(f(&m).norm() <= 1e-12, "{tag}");
        // and the representative is not a homothety
        assert!((m - i * (m.trace() / 3.0)).norm() > 0.1);
    }
}

#[test]
fn random_conjugation_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let m = Mat3::from_fn(|_, _| rng.gen_range(-2.0..2.0));
        let g = well_conditioned(&mut rng);
        let a = canonical_case(&m, 1e-7).unwrap();
        let b = canonical_case(&(g * m * g.try_inverse().unwrap()), 1e-7).unwrap();
        assert!(a.same_orbit(&b, 1e-6), "{a:?} {b:?}");
    }
}

#[test]
fn fuzzed_representatives_get_one_tag() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for (tag, m) in representatives() {
        for _ in 0..50 {
            let g = well_conditioned(&mut rng);
            let s = rng.gen_range(-1.0..1.0);
            let shifted = m + Mat3::identity() * s;
            let r = canonical_case(&(g * shifted * g.try_inverse().unwrap()), 1e-9);
            assert_eq!(r.map(|c| c.tag()), Ok(tag));
        }
    }
}

fn random_tensor(rng: &mut ChaCha8Rng, r: usize, s: usize) -> TensorValue {
    let len = 3usize.pow((r + s) as u32);
    TensorValue::new(3, r, s, (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

proptest! {
    #[test]
    fn action_is_functorial(seed in 0u64..10_000, r in 0usize..=3, s in 0usize..=3) {
        prop_assume!(r + s <= 3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = well_conditioned(&mut rng);
        let b = well_conditioned(&mut rng);
        let t = random_tensor(&mut rng, r, s);
        let lhs = act(&(a * b), &t).unwrap();
        let rhs = act(&a, &act(&b, &t).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).norm() <= 1e-10 * (1.0 + lhs.norm()));
    }

    #[test]
    fn signature_is_a_congruence_invariant(seed in 0u64..10_000, p in 0usize..=3, m in 0usize..=3) {
        prop_assume!(p + m <= 3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d: Vec<f64> = (0..3).map(|k| if k < p { 1.0 } else if k < p + m { -1.0 } else { 0.0 }).collect();
        let q = Mat3::from_diagonal(&nalgebra::Vector3::from_vec(d));
        let a = well_conditioned(&mut rng);
        let o = sym2_orbit_mat(&(a.transpose() * q * a), 1e-9).unwrap();
        prop_assert_eq!(o, Sym2Orbit { rank: p + m, p, m });
    }
}
