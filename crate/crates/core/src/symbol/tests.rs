use super::*;
use proptest::prelude::*;
use std::f64::consts::PI;

fn local_space(ny: usize) -> Arc<SymbolSpace> {
    Arc::new(SymbolSpace::new(Layout::Local, 1, 1, 1, 1, ny, 1.0, 2.0 * PI).unwrap())
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `(a0 + a1 sin y + a2 cos 2y) eta` on the local grid.
fn linear(space: &Arc<SymbolSpace>, a: [f64; 3]) -> ClassicalSymbol {
    let f = Field::from_fn(space, c(1.0), |iy, w| {
        let y = space.transverse_coords(iy)[0];
        vec![c((a[0] + a[1] * y.sin() + a[2] * (2.0 * y).cos()) * w[0])]
    });
    ClassicalSymbol::polynomial(Arc::clone(space), 1, vec![f]).unwrap().with_depth(3)
}

fn close(a: &ClassicalSymbol, b: &ClassicalSymbol, pts: &[(f64, f64)], tol: f64) -> bool {
    pts.iter().all(|(y, e)| {
        let u = a.evaluate(&[], &[], &[*y], &[*e]).unwrap();
        let v = b.evaluate(&[], &[], &[*y], &[*e]).unwrap();
        u.iter().zip(&v).all(|(p, q)| (p - q).norm() <= tol * (1.0 + p.norm()))
    })
}

const PTS: [(f64, f64); 5] = [(0.3, 2.0), (1.7, -3.5), (4.0, 7.25), (5.5, 1.5), (2.2, -11.0)];

#[test]
fn ladder_is_enforced() {
    let sp = local_space(5);
    let f = Field::zeros(&sp, c(-1.0));
    let g = Field::zeros(&sp, c(-1.0));
    let err = make_classical_symbol(c(-1.0), vec![f, g], sp);
    assert!(matches!(err, Err(CalcError::DegreeLadder { index: 1, .. })));
}

#[test]
fn leibniz_product_of_first_order_symbols() {
    let sp = local_space(9);
    let a = linear(&sp, [1.0, 0.5, 0.0]);
    let b = linear(&sp, [2.0, 0.0, 0.25]);
    let ab = compose(&a, &b).unwrap();
    for (y, e) in PTS {
        let av = 1.0 + 0.5 * y.sin();
        let bv = 2.0 + 0.25 * (2.0 * y).cos();
        let db = -0.5 * (2.0 * y).sin();
        // a b eta^2 + (d_eta a)(-i d_y b) eta
        let expect = C64::new(av * bv * e * e, -av * db * e);
        let got = ab.evaluate(&[], &[], &[y], &[e]).unwrap()[0];
        assert!((got - expect).norm() < 1e-10, "{got} vs {expect}");
    }
}

#[test]
fn constant_coefficient_symbols_commute() {
    let sp = local_space(7);
    let a = linear(&sp, [1.5, 0.0, 0.0]);
    let b = linear(&sp, [-0.5, 0.0, 0.0]);
    assert!(commutator(&a, &b).unwrap().max_abs() < 1e-14);
}

#[test]
fn serialization_round_trip_is_exact() {
    let sp = local_space(7);
    let a = compose(&linear(&sp, [1.0, 0.3, 0.2]), &linear(&sp, [0.5, -0.1, 0.7])).unwrap();
    let js = symbol_to_json(&a).unwrap();
    let back = symbol_from_json(&js).unwrap();
    assert_eq!(a, back);
    let mut broken: serde_json::Value = serde_json::from_str(&js).unwrap();
    broken["components"][0]["degree"] = serde_json::json!("x");
    let err = symbol_from_json(&broken.to_string()).unwrap_err().to_string();
    assert!(err.contains("components"), "{err}");
}

#[test]
fn identity_is_neutral() {
    let sp = local_space(7);
    let a = linear(&sp, [1.0, 0.4, -0.3]);
    let id = ClassicalSymbol::identity(&sp, 3);
    assert!(close(&compose(&id, &a).unwrap(), &a, &PTS, 1e-12));
    assert!(close(&compose(&a, &id).unwrap(), &a, &PTS, 1e-12));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn composition_is_associative(a in prop::array::uniform3(-1.0f64..1.0),
                                  b in prop::array::uniform3(-1.0f64..1.0),
                                  d in prop::array::uniform3(-1.0f64..1.0)) {
        let sp = local_space(9);
        let (a, b, d) = (linear(&sp, a), linear(&sp, b), linear(&sp, d));
        let left = compose(&compose(&a, &b).unwrap(), &d).unwrap();
        let right = compose(&a, &compose(&b, &d).unwrap()).unwrap();
        prop_assert!(close(&left, &right, &PTS, 1e-9));
    }

    #[test]
    fn adjoint_is_an_involution(a in prop::array::uniform3(-1.0f64..1.0)) {
        let sp = local_space(9);
        let s = linear(&sp, a).scaled(C64::new(0.6, 0.8));
        let back = adjoint(&adjoint(&s).unwrap()).unwrap();
        prop_assert!(close(&back, &s, &PTS, 1e-10));
    }

    #[test]
    fn adjoint_reverses_products(a in prop::array::uniform3(-1.0f64..1.0),
                                 b in prop::array::uniform3(-1.0f64..1.0)) {
        let sp = local_space(9);
        let (a, b) = (linear(&sp, a), linear(&sp, b));
        let lhs = adjoint(&compose(&a, &b).unwrap()).unwrap();
        let rhs = compose(&adjoint(&b).unwrap(), &adjoint(&a).unwrap()).unwrap();
        prop_assert!(close(&lhs, &rhs, &PTS, 1e-9));
    }

    #[test]
    fn json_round_trip(a in prop::array::uniform3(-1.0f64..1.0)) {
        let sp = local_space(5);
        let s = linear(&sp, a);
        prop_assert_eq!(symbol_from_json(&symbol_to_json(&s).unwrap()).unwrap(), s);
    }
}
