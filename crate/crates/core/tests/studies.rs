use std::f64::consts::PI;
use transversal_psido::model::{
    build_model, commutator_norm_study, singular_value_study, BoundednessVerdict, KroneckerKernel, ModelSpec, OperatorKind,
    TangentialKernel,
};
use transversal_psido::symbol::{Layout, SymbolSpace};
use std::sync::Arc;

fn product(q: usize) -> transversal_psido::model::ModelFoliation {
    build_model(&ModelSpec::Product { p: 1, q, leaf_circumference: 1.0, transverse_circumference: 2.0 * PI }).unwrap()
}

fn kernel_space(q: usize) -> Arc<SymbolSpace> {
    Arc::new(SymbolSpace::new(Layout::Kernel, 1, q, 1, 3, 3, 1.0, 2.0 * PI).unwrap())
}

#[test]
fn dirac_commutators_stay_bounded() {
    let model = product(1);
    for seed in 0..5 {
        let k = TangentialKernel::random_product(kernel_space(1), seed, true).unwrap();
        let st = commutator_norm_study(&model, &OperatorKind::FirstOrderDirac, &k, &[64, 128, 256, 512], 1).unwrap();
        println!("seed {seed}: {:?} drift {} verdict {:?}", st.rows.iter().map(|r| r.norm).collect::<Vec<_>>(), st.drift, st.verdict);
        assert_eq!(st.verdict, BoundednessVerdict::Bounded);
        assert!(st.drift < 0.05);
    }
}

#[test]
fn leafwise_operator_is_rejected() {
    let model = product(1);
    let k = TangentialKernel::random_product(kernel_space(1), 3, true).unwrap();
    let st = commutator_norm_study(&model, &OperatorKind::LeafwiseDirac, &k, &[64, 128, 256], 1).unwrap();
    println!("{st:?}");
    assert!(!st.verdict.passed());
}

#[test]
fn singular_value_exponents() {
    let k = TangentialKernel::random_product(kernel_space(1), 5, false).unwrap();
    let st = singular_value_study(&product(1), &OperatorKind::FirstOrderDirac, &k, 256, 1).unwrap();
    println!("q=1 {st:?}");
    assert!((st.exponent.unwrap() + 1.0).abs() < 0.1);
    let k = TangentialKernel::random_product(kernel_space(2), 5, false).unwrap();
    let st = singular_value_study(&product(2), &OperatorKind::FirstOrderDirac, &k, 24, 1).unwrap();
    println!("q=2 {st:?}");
    assert!((st.exponent.unwrap() + 0.5).abs() < 0.05);
}

#[test]
fn kronecker_commutators() {
    let model = build_model(&ModelSpec::Kronecker { slope: (5f64.sqrt() - 1.0) / 2.0, circumference: 2.0 * PI }).unwrap();
    let k = TangentialKernel::Kronecker(KroneckerKernel::random(4, 2, 1));
    let st = commutator_norm_study(&model, &OperatorKind::FirstOrderDirac, &k, &[8, 12, 16, 20], 0).unwrap();
    println!("{st:?}");
    assert_eq!(st.verdict, BoundednessVerdict::Bounded);
}

#[test]
fn mellin_relation_links_heat_and_zeta() {
    use transversal_psido::cutoff::CutoffSpec;
    use transversal_psido::model::model_operator;
    use transversal_psido::numerics::gamma;
    use transversal_psido::symbol::{ClassicalSymbol, Field};
    use transversal_psido::traces::{heat_coefficients, zeta_pole_table, HeatSettings, ZetaSettings};
    use transversal_psido::C64;
    let model = product(1);
    let modes = model.modes(0, 512);
    let p = model_operator(&model, &OperatorKind::TransverseLaplacian, &modes).unwrap();
    let cut = CutoffSpec::new(0.5, 0.9).unwrap();
    let ks = Arc::new(SymbolSpace::with_sphere(Layout::Kernel, 1, 1, 1, 1, 1, 1.0, 2.0 * PI, 256, cut.clone()).unwrap());
    let ls = Arc::new(SymbolSpace::with_sphere(Layout::Local, 1, 1, 1, 1, 1, 1.0, 2.0 * PI, 256, cut).unwrap());
    let k = TangentialKernel::leaf_projection(Arc::clone(&ks), |_| 1.0).unwrap();
    let h = heat_coefficients(&model, &p, &k, &modes, &HeatSettings::default()).unwrap();
    let a2 = Field::from_fn(&ls, C64::new(2.0, 0.0), |_, w| vec![C64::new(w[0] * w[0], 0.0)]);
    let a = ClassicalSymbol::polynomial(ls, 2, vec![a2]).unwrap();
    let q = k.symbol().unwrap().clone();
    let rep = zeta_pole_table(&q, &a, (0.2, 0.8), &ZetaSettings::default()).unwrap();
    let top = rep.poles.iter().find(|p| p.detected).unwrap();
    // Tr(Q e^{-tA}) ~ a0 t^{-1/2}  <=>  res_{1/2} Tr(Q A^{-z}) = a0 / Gamma(1/2)
    let predicted = h.a0_fit() / gamma(0.5);
    assert!((top.residue_re - predicted).abs() < 2e-2 * predicted, "{} vs {predicted}", top.residue_re);
}
