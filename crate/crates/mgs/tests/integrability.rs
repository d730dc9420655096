use mgs::field_engine::*;
use mgs::integrability::*;
use mgs::lie_catalog::{f_model, GroupId};
use mgs::structures::*;
use mgs::tensor_core::Mat3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-7;

fn ms(g: &str) -> MaterialStructure {
    MaterialStructure::new(g.parse::<GroupId>().unwrap(), ChartBox::default())
}

fn vf(src: [&str; 3]) -> VectorField {
    VectorField::parse(&src).unwrap()
}

fn v(src: [&str; 3]) -> Datum {
    Datum::Vector(vf(src))
}

fn span(a: [&str; 3], b: [&str; 3]) -> Datum {
    Datum::Span(vec![vf(a), vf(b)])
}

fn frame(a: [&str; 3], b: [&str; 3], c: [&str; 3]) -> Datum {
    Datum::Frame(vec![vf(a), vf(b), vf(c)])
}

fn form(src: [&str; 3]) -> Datum {
    Datum::Form(OneForm::parse(&src).unwrap())
}

fn dens(src: &str) -> Datum {
    Datum::Density(Density(parse(src).unwrap()))
}

fn constant11(m: Mat3) -> Datum {
    Datum::Tensor11(Tensor11::constant(&m))
}

fn conformal(src: &str) -> Datum {
    let c = parse(src).unwrap();
    let z = FieldExpr::zero;
    Datum::Metric(SymTensor([[c.clone(), z(), z()], [z(), c.clone(), z()], [z(), z(), c]]))
}

const E1: [&str; 3] = ["1", "0", "0"];
const E2: [&str; 3] = ["0", "1", "0"];
const E3: [&str; 3] = ["0", "0", "1"];

fn verdict(m: &MaterialStructure) -> Verdict {
    decide(m, TOL).unwrap()
}

fn failed_names(v: &Verdict) -> Vec<&str> {
    v.failed().map(|c| c.name.as_str()).collect()
}

#[test]
fn contact_distribution_is_not_involutive() {
    let m = ms("10").with("D", span(E2, ["1", "0", "x2"])).with("Omega", dens("1"));
    let v = verdict(&m);
    assert_eq!(v.status, Status::NotIntegrable);
    assert_eq!(failed_names(&v), ["involutive"]);
    // the bracket is d3, entirely outside D; residual is normalized by 1 + |V1| + |V2|
    let c = v.condition("involutive").unwrap();
    assert!(c.residual > 0.1);
    assert_eq!(c.reference, "involutive");
}

#[test]
fn exponential_density_is_not_preserved() {
    let m = ms("13").with("X", v(E1)).with("Omega", dens("exp(x1)"));
    let r = verdict(&m);
    assert_eq!(r.status, Status::NotIntegrable);
    // L_X Omega = exp(x1) dx1^dx2^dx3, largest at x1 = 1
    let c = r.condition("divergence-free").unwrap();
    assert!((c.residual - 1f64.exp()).abs() < 1e-12);
    assert_eq!(c.witness[0], 1.0);
    let flat = ms("13").with("X", v(E1)).with("Omega", dens("exp(x2)"));
    assert_eq!(verdict(&flat).status, Status::Integrable);
}

#[test]
fn every_volume_form_is_integrable() {
    for b in ["1", "exp(x1*x2) + 2", "1 + x3^2"] {
        let v = verdict(&ms("9").with("Omega", dens(b)));
        assert_eq!(v.status, Status::Integrable);
        assert!(v.conditions.is_empty());
    }
}

#[test]
fn tau_of_the_exponential_example_is_one() {
    let (y1, y2, y3) = (vf(E1), vf(E2), vf(E3));
    let omega = Density(parse("exp(x1*x2)").unwrap());
    let tau = tau_obstruction_2a(&y1, &y2, &y3, &omega, &ChartBox::default()).unwrap();
    for p in ChartBox::default().points() {
        assert!((tau.eval(&p).unwrap() - 1.0).abs() < 1e-12);
    }
    let m = ms("2A").with("L1", v(E1)).with("L2", v(E2)).with("Omega", dens("exp(x1*x2)"));
    let v = verdict(&m);
    assert_eq!(v.status, Status::NotIntegrable);
    assert_eq!(failed_names(&v), ["tau-zero"]);
    assert!((v.condition("tau-zero").unwrap().residual - 1.0).abs() < 1e-12);

    let std = tau_obstruction_2a(&y1, &y2, &y3, &Density(FieldExpr::one()), &ChartBox::default()).unwrap();
    assert!(grid_norm(&[std], &ChartBox::default()).unwrap().max < 1e-14);
}

fn positive(rng: &mut ChaCha8Rng) -> FieldExpr {
    let c = |v: f64| FieldExpr::constant(v);
    let x = FieldExpr::var;
    let mut e = c(rng.gen_range(-0.5..0.5));
    for i in 0..3 {
        e = e + c(rng.gen_range(-0.5..0.5)) * x(i) + c(rng.gen_range(-0.3..0.3)) * (x(i) * x((i + 1) % 3)).sin();
    }
    e.exp()
}

#[test]
fn tau_rescales_by_the_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let bx = ChartBox::default();
    // an adapted frame with tau far from zero
    let y1 = vf(E1);
    let y2 = vf(["x1", "1", "0"]);
    let y3 = vf(E3);
    for _ in 0..20 {
        let omega = Density(positive(&mut rng) + FieldExpr::var(0) * FieldExpr::var(1));
        let tau = tau_obstruction_2a(&y1, &y2, &y3, &omega, &bx).unwrap();
        let (f1, f2) = (positive(&mut rng), positive(&mut rng));
        let y3s = VectorField(std::array::from_fn(|i| &y3.0[i] / &(&f1 * &f2)));
        let tau2 = tau_obstruction_2a(&y1.scale(&f1), &y2.scale(&f2), &y3s, &omega, &bx).unwrap();
        for p in bx.points() {
            let expect = f1.eval(&p).unwrap() * f2.eval(&p).unwrap() * tau.eval(&p).unwrap();
            let got = tau2.eval(&p).unwrap();
            assert!((got - expect).abs() <= 1e-8 * (1.0 + expect.abs()), "{p:?}: {got} vs {expect}");
        }
        // the decision agrees as well
        let base = ms("2A").with("L1", Datum::Vector(y1.clone())).with("L2", Datum::Vector(y2.clone()));
        let omega_d = Datum::Density(omega.clone());
        let a = verdict(&base.clone().with("Omega", omega_d.clone())).status;
        let b = verdict(
            &base.with("L1", Datum::Vector(y1.scale(&f1))).with("L2", Datum::Vector(y2.scale(&f2))).with("Omega", omega_d),
        )
        .status;
        assert_eq!(a, b);
    }
}

fn remark_4a() -> MaterialStructure {
    ms("4A")
        .with("D", span(E1, ["x2", "1", "1"]))
        .with("L1", v(E1))
        .with("L2", v(E2))
        .with("Omega", dens("1"))
}

#[test]
fn remark_example_is_inconclusive() {
    let v = verdict(&remark_4a());
    assert_eq!(v.status, Status::Inconclusive);
    let names: Vec<&str> = v.conditions.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(names, ["involutive", "involutive(L1+L2)", "tau-zero"]);
    assert!(v.conditions.iter().all(|c| c.pass));
    assert!(v.notes[0].contains("only necessary"));
}

#[test]
fn flat_and_round_metrics() {
    let flat = verdict(&ms("16").with("g", conformal("1")));
    assert_eq!(flat.status, Status::Integrable);
    let sphere = verdict(&ms("16").with("g", conformal("4/(1 + x1^2 + x2^2 + x3^2)^2")));
    assert_eq!(sphere.status, Status::NotIntegrable);
    assert_eq!(failed_names(&sphere), ["ricci-zero"]);
    // Ric = 2 g, so |Ric| = 2 sqrt(3) c at the witness; largest at the origin
    let c = sphere.condition("ricci-zero").unwrap();
    assert_eq!(c.witness, [0.0; 3]);
    assert!((c.residual - 2.0 * 3f64.sqrt() * 4.0).abs() < 1e-6);
}

fn f_structure(b: &str) -> MaterialStructure {
    ms("8A").with("h", constant11(f_model())).with("Omega", dens(b))
}

#[test]
fn f_structure_log_density_conditions() {
    let v = verdict(&f_structure("exp(x3)"));
    assert_eq!(v.status, Status::Integrable);
    for name in ["log-density-13", "log-density-23", "log-density-laplace"] {
        assert!(v.condition(name).unwrap().residual < 1e-12, "{name}");
    }
    let v = verdict(&f_structure("exp(x1*x3)"));
    assert_eq!(v.status, Status::NotIntegrable);
    assert!((v.condition("log-density-13").unwrap().residual - 1.0).abs() < 1e-12);
    assert!(v.condition("log-density-23").unwrap().pass);
}

#[test]
fn f_structure_outside_the_adapted_chart() {
    let p = Mat3::new(1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
    let h = p * f_model() * p.try_inverse().unwrap();
    let m = ms("8A").with("h", constant11(h)).with("Omega", dens("1"));
    match decide(&m, TOL) {
        Err(VerdictError::NotInAdaptedChart { datum, residual, .. }) => {
            assert_eq!(datum, "h");
            assert!(residual > 0.5);
        }
        other => panic!("{other:?}"),
    }
    assert!(decide(&m, TOL).unwrap_err().is_input_error());
}

#[test]
fn nilpotent_shift_volume_conditions() {
    let u = Mat3::new(0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0);
    let ok = ms("24").with("h", constant11(u)).with("Omega", dens("exp(x3^2)"));
    assert_eq!(verdict(&ok).status, Status::Integrable);
    let bad = ok.with("Omega", dens("exp(x1) + x3"));
    let v = verdict(&bad);
    assert_eq!(v.status, Status::NotIntegrable);
    assert_eq!(failed_names(&v), ["volume-x1"]);
}

#[test]
fn duality_of_the_two_presentations() {
    // omega(Z) = Omega(X1, X2, Z) = b (X1 x X2).Z
    let cases = [
        (E2, "exp(x3)", true),
        (["0", "1", "x1"], "1", false),
        (E2, "exp(x1)", false),
        (["x3", "1", "0"], "2", true),
    ];
    for (x2, b, integrable) in cases {
        let base = ms("2C").with("X1", v(E1)).with("X2", v(x2));
        let vol = base.clone().with("Omega", dens(b));
        let x1v = vf(E1);
        let x2v = vf(x2);
        let n = cross(&x1v, &x2v);
        let be = parse(b).unwrap();
        let w = OneForm(std::array::from_fn(|i| &be * &n.0[i]));
        let dual = base.with("omega", Datum::Form(w));
        let (a, d) = (verdict(&vol).status, verdict(&dual).status);
        assert_eq!(a, d, "{x2:?} {b}");
        assert_eq!(a == Status::Integrable, integrable, "{x2:?} {b}");
    }
}

#[test]
fn five_b_first_equations_match_involutivity() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut both = [0usize; 2];
    for k in 0..12 {
        let s = |r: &mut ChaCha8Rng| format!("{:.3}", r.gen_range(-0.4..0.4));
        let y3 = if k % 2 == 0 {
            [format!("{}*x2", s(&mut rng)), "0".to_string(), "1".to_string()]
        } else {
            ["0".to_string(), "0".to_string(), format!("1 + {}*x1^2", s(&mut rng))]
        };
        let m = ms("5B(1,-2,1)")
            .with("Y", frame(E1, ["0", "1", "0"], [&y3[0], &y3[1], &y3[2]]))
            .with("Omega", dens("1"));
        let v = verdict(&m);
        let star1 = v.condition("structure-eq-1").unwrap().pass;
        let invol = ["involutive(L1+L2)", "involutive(L1+L3)", "involutive(L2+L3)"]
            .iter()
            .all(|n| v.condition(n).unwrap().pass);
        assert_eq!(star1, invol, "{y3:?}");
        both[star1 as usize] += 1;
    }
    assert!(both[0] > 0 && both[1] > 0);
}

#[test]
fn five_b_coordinate_frame_is_flat() {
    let m = ms("5B(1,-2,1)").with("Y", frame(E1, E2, E3)).with("Omega", dens("1"));
    let v = verdict(&m);
    assert_eq!(v.status, Status::Integrable, "{v:?}");
}

#[test]
fn report_obstructions_keeps_every_point() {
    let m = ms("10").with("D", span(E2, ["1", "0", "x2"])).with("Omega", dens("1"));
    let v = decide_with(&m, &DecideOptions { tol: TOL, report_obstructions: true }).unwrap();
    let pts = v.conditions[0].points.as_ref().unwrap();
    assert_eq!(pts.len(), 125);
    assert!(pts.iter().all(|(_, r)| *r > TOL));
    let json = serde_json::to_value(verdict(&m)).unwrap();
    assert_eq!(json["status"], "NotIntegrable");
    assert_eq!(json["conditions"][0]["ref"], "involutive");
    assert!(json["conditions"][0].get("points").is_none());
}

#[test]
fn domain_errors_propagate() {
    let m = ms("13").with("X", v(E1)).with("Omega", dens("1/(x1 - 0.5)"));
    let e = decide(&m, TOL).unwrap_err();
    assert!(!e.is_input_error(), "{e:?}");
}

#[test]
fn closed_forms() {
    let contact = ms("12").with("omega", form(["x2", "0", "1"])).with("Omega", dens("1"));
    let v = verdict(&contact);
    assert_eq!(v.status, Status::NotIntegrable);
    assert_eq!(failed_names(&v), ["closed"]);
    let exact = ms("12").with("omega", form(["x2", "x1", "1"])).with("Omega", dens("1"));
    assert_eq!(verdict(&exact).status, Status::Integrable);
}
