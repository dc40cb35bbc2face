use super::*;
use crate::cutoff::{CutoffSpec, Profile};
use crate::error::CalcError;
use crate::homogeneous::DEFAULT_CIRCLE_NODES;
use crate::model::{build_model, model_operator, riemann_zeta, ModelSpec, OperatorKind, TangentialKernel};
use crate::numerics::C64;
use crate::symbol::{commutator, quantize, ClassicalSymbol, Field, Layout, SymbolSpace, Term};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn space(layout: Layout, nx: usize, ny: usize, ly: f64, cutoff: CutoffSpec) -> Arc<SymbolSpace> {
    Arc::new(SymbolSpace::with_sphere(layout, 1, 1, 1, nx, ny, 1.0, ly, DEFAULT_CIRCLE_NODES, cutoff).unwrap())
}

fn zeta_spaces() -> (Arc<SymbolSpace>, Arc<SymbolSpace>) {
    let cut = CutoffSpec::new(0.5, 0.9).unwrap();
    (space(Layout::Kernel, 1, 1, 2.0 * PI, cut.clone()), space(Layout::Local, 1, 1, 2.0 * PI, cut))
}

fn laplacian(sp: &Arc<SymbolSpace>) -> ClassicalSymbol {
    let a2 = Field::from_fn(sp, c(2.0), |_, w| vec![c(w[0] * w[0])]);
    ClassicalSymbol::polynomial(Arc::clone(sp), 2, vec![a2]).unwrap()
}

fn leaf_projection(sp: &Arc<SymbolSpace>) -> ClassicalSymbol {
    match TangentialKernel::leaf_projection(Arc::clone(sp), |_| 1.0).unwrap() {
        TangentialKernel::Product(s) => s,
        _ => unreachable!(),
    }
}

/// `f(x) g(x') h(y, omega) theta |eta|^order` as a one-term kernel symbol.
fn separable<F>(sp: &Arc<SymbolSpace>, order: C64, f: F) -> ClassicalSymbol
where
    F: Fn(f64, f64, f64, f64) -> C64,
{
    let nl = sp.leaf_points();
    let ty = sp.transverse_points();
    let field = Field::from_fn(sp, order, |pt, w| {
        let iy = pt % ty;
        let ix2 = (pt / ty) % nl;
        let ix = pt / ty / nl;
        vec![f(sp.leaf_coords(ix)[0], sp.leaf_coords(ix2)[0], sp.transverse_coords(iy)[0], w[0])]
    });
    ClassicalSymbol::from_terms(Arc::clone(sp), order, 0, vec![Term { level: 0, profile: Profile::Theta, field }]).unwrap()
}

/// `int_0^inf theta(r) r^{s-1} dr` by composite Simpson on `[r0, R]` plus the exact tail.
fn theta_moment_oracle(cut: &CutoffSpec, s: f64) -> f64 {
    let big = 50.0;
    let n = 200_000;
    let h = (big - cut.r0) / n as f64;
    let f = |r: f64| cut.theta(r) * r.powf(s - 1.0);
    let mut acc = f(cut.r0) + f(big);
    for i in 1..n {
        let r = cut.r0 + i as f64 * h;
        acc += f(r) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0 - big.powf(s) / s
}

#[test]
fn canonical_trace_of_separable_symbol() {
    let cut = CutoffSpec::default();
    let sp = space(Layout::Kernel, 5, 5, 2.0 * PI, cut.clone());
    let ly = sp.ly;
    // (int phi psi) = int (1 + cos 2 pi x)(2 + sin 2 pi x) = 2; int chi = 3 ly
    let s = separable(&sp, c(-2.5), |x, x2, y, _| {
        c((1.0 + (2.0 * PI * x).cos()) * (2.0 + (2.0 * PI * x2).sin()) * (3.0 + (y * 2.0 * PI / ly).cos()))
    });
    let tr = canonical_trace(&s).unwrap();
    let expect = 2.0 * 3.0 * ly * 2.0 * theta_moment_oracle(&cut, -1.5) / (2.0 * PI);
    assert!((tr - c(expect)).norm() < 1e-8 * expect, "{tr} vs {expect}");
    assert!(matches!(
        canonical_trace(&separable(&sp, c(-1.0), |_, _, _, _| c(1.0))),
        Err(CalcError::LogObstruction { .. })
    ));
    // odd density at the critical degree has no obstruction
    assert!(canonical_trace(&separable(&sp, c(-1.0), |_, _, _, w| c(w))).is_ok());
    let local = laplacian(&space(Layout::Local, 1, 1, 2.0 * PI, CutoffSpec::default()));
    assert!(matches!(canonical_trace(&local), Err(CalcError::Precondition(_))));
}

#[test]
fn residue_trace_closed_form() {
    let sp = space(Layout::Kernel, 5, 5, 2.0 * PI, CutoffSpec::default());
    let s = separable(&sp, c(-1.0), |x, _, y, _| c((2.0 + (2.0 * PI * x).sin()) * (1.5 + y.sin())));
    let r = residue_trace(&s).unwrap();
    let expect = 2.0 * 2.0 * 1.5 * 2.0 * PI;
    assert!((r.tau() - c(expect)).norm() < 1e-10 * expect, "{}", r.tau());
    assert_eq!(r.form.len(), 25);
    let low = separable(&sp, c(-2.5), |_, _, _, _| c(1.0));
    assert_eq!(residue_trace(&low).unwrap().tau(), c(0.0));
    let zero = ClassicalSymbol::zero(Arc::clone(&sp), c(0.3), 2);
    assert_eq!(canonical_trace(&zero).unwrap(), c(0.0));
    assert_eq!(residue_trace(&zero).unwrap().tau(), c(0.0));
}

#[test]
fn canonical_trace_matches_grid_trace() {
    let ly = 16.0 * PI;
    let sp = space(Layout::Kernel, 3, 3, ly, CutoffSpec::default());
    let s = separable(&sp, c(-3.5), |x, x2, y, w| {
        c((1.2 + (2.0 * PI * (x - x2)).cos()) * (2.0 + (2.0 * PI * y / ly).sin()) * (1.0 + 0.3 * w))
    });
    let model = build_model(&ModelSpec::Product { p: 1, q: 1, leaf_circumference: 1.0, transverse_circumference: ly }).unwrap();
    let modes = model.modes(1, 512);
    let grid = quantize(&s, &model, &modes).unwrap().trace();
    let tr = canonical_trace(&s).unwrap();
    let rel = (grid - tr).norm() / tr.norm();
    assert!(rel < 1e-3, "TR {tr} grid {grid} rel {rel:e}");
}

fn random_symbol(sp: &Arc<SymbolSpace>, order: f64, rng: &mut ChaCha8Rng) -> ClassicalSymbol {
    let (lx, ly) = (sp.lx, sp.ly);
    let mut terms = Vec::new();
    for level in 0..2 {
        let coeffs: Vec<(i64, i64, i64, f64, C64)> = (0..4)
            .map(|_| {
                (
                    rng.gen_range(-1..=1),
                    rng.gen_range(-1..=1),
                    rng.gen_range(-1..=1),
                    rng.gen_range(-1.0..1.0),
                    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                )
            })
            .collect();
        let sym = separable(sp, c(order - level as f64), |x, x2, y, w| {
            coeffs
                .iter()
                .map(|(a, b, cc, tilt, v)| {
                    let ph = 2.0 * PI * (*a as f64 * x / lx + *b as f64 * x2 / lx + *cc as f64 * y / ly);
                    v * C64::from_polar(1.0, ph) * (1.0 + tilt * w)
                })
                .sum()
        });
        let mut t = sym.terms.into_iter().next().unwrap();
        t.level = level;
        terms.push(t);
    }
    ClassicalSymbol::from_terms(Arc::clone(sp), c(order), 1, terms).unwrap()
}

#[test]
fn trace_vanishes_on_commutators() {
    let sp = space(Layout::Kernel, 7, 7, 2.0 * PI, CutoffSpec::default());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let oa = rng.gen_range(-1.9..0.4);
        let ob = rng.gen_range(-1.9..0.4);
        let a = random_symbol(&sp, oa, &mut rng);
        let b = random_symbol(&sp, ob, &mut rng);
        let com = commutator(&a, &b).unwrap();
        let tr = canonical_trace(&com).unwrap();
        let scale = a.max_abs() * b.max_abs();
        assert!(tr.norm() < 1e-8 * scale, "orders {oa} {ob}: {tr}");
    }
}

#[test]
fn family_residue_matches_residue_trace() {
    let sp = space(Layout::Kernel, 3, 3, 2.0 * PI, CutoffSpec::default());
    let base = separable(&sp, c(0.0), |x, x2, y, w| c((1.0 + (2.0 * PI * (x - x2)).cos()) * (2.0 + y.cos()) * (1.0 + 0.4 * w)));
    let family = |z: C64| -> crate::error::Result<ClassicalSymbol> {
        let mut s = base.clone();
        for t in &mut s.terms {
            t.field.degree = -z;
        }
        s.order = -z;
        Ok(s)
    };
    let chk = family_residue_check(family, c(1.0), &FitSettings::default()).unwrap();
    assert!(chk.defect < 1e-5, "{chk:?}");
    assert!(C64::new(chk.residue_re, chk.residue_im).norm() > 1.0);
    // orders avoiding -1 - N on the circle: no pole
    let shifted = |z: C64| family(z + 0.5);
    let chk = family_residue_check(shifted, c(1.0), &FitSettings::default()).unwrap();
    assert!(C64::new(chk.residue_re, chk.residue_im).norm() < 1e-9);
}

#[test]
fn zeta_pole_of_transverse_laplacian() {
    let (ks, ls) = zeta_spaces();
    let q = leaf_projection(&ks);
    let a = laplacian(&ls);
    let rep = zeta_pole_table(&q, &a, (-1.1, 1.2), &ZetaSettings::default()).unwrap();
    let ks: Vec<i64> = rep.poles.iter().map(|p| p.k).collect();
    assert_eq!(ks, vec![2, 1, 0, -1, -2]);
    let top = &rep.poles[1];
    assert!(top.detected && top.simple && top.admissible);
    assert!((top.z() - c(0.5)).norm() < 5e-3, "{:?}", top);
    assert!((top.residue() - c(1.0)).norm() < 2e-2, "{:?}", top);
    assert!((top.tau() - c(4.0 * PI)).norm() < 1e-9);
    for p in rep.poles.iter().filter(|p| p.k != 1) {
        assert!(!p.detected, "{p:?}");
    }
    assert!(!rep.poles[0].admissible);
    assert!(rep.two_path_defect.unwrap() < 2e-2);
    assert!((rep.constant.unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-3);
}

#[test]
fn negative_order_weight_lowers_top_pole() {
    let (ks, ls) = zeta_spaces();
    let a = laplacian(&ls);
    let q = separable(&ks, c(-2.0), |_, _, _, _| c(1.0));
    let rep = zeta_pole_table(&q, &a, (-1.1, 0.6), &ZetaSettings::default()).unwrap();
    let detected: Vec<i64> = rep.poles.iter().filter(|p| p.detected).map(|p| p.k).collect();
    assert_eq!(detected, vec![-1]);
}

#[test]
fn symbolic_zeta_matches_riemann() {
    let (ks, ls) = zeta_spaces();
    let q = leaf_projection(&ks);
    let a = laplacian(&ls);
    let model = build_model(&ModelSpec::Product { p: 1, q: 1, leaf_circumference: 1.0, transverse_circumference: 2.0 * PI }).unwrap();
    let modes = model.modes(0, 512);
    for z in [c(1.0), C64::new(1.7, 0.6), c(3.0)] {
        let v = symbolic_zeta(&q, &a, z, &model, &modes, &ZetaSettings::default()).unwrap();
        let exact = riemann_zeta(z * 2.0).unwrap() * 2.0;
        assert!((v - exact).norm() < 1e-3 * exact.norm(), "z={z}: {v} vs {exact}");
    }
}

#[test]
fn multi_zeta_degenerates_to_single() {
    let (ks, ls) = zeta_spaces();
    let q = leaf_projection(&ks);
    let a = laplacian(&ls);
    let id = ClassicalSymbol::identity(&ls, 0);
    let slice = ZetaSlice { base: vec![c(0.0), c(0.0)], direction: vec![c(1.0), c(0.0)] };
    let rep = multi_zeta(&[q.clone(), id], &a, &slice, (0.2, 0.8), &ZetaSettings::default()).unwrap();
    assert_eq!(rep.poles.len(), 1);
    let p = &rep.poles[0];
    assert!((p.residue() - c(1.0)).norm() < 2e-2, "{p:?}");
    let par = ZetaSlice { base: vec![c(0.0), c(0.0)], direction: vec![c(1.0), c(-1.0)] };
    assert!(multi_zeta(&[q.clone(), q], &a, &par, (0.0, 1.0), &ZetaSettings::default()).is_err());
}

#[test]
fn heat_leading_coefficient_and_fit() {
    let model = build_model(&ModelSpec::Product { p: 1, q: 1, leaf_circumference: 1.0, transverse_circumference: 2.0 * PI }).unwrap();
    let modes = model.modes(0, 512);
    let p = model_operator(&model, &OperatorKind::TransverseLaplacian, &modes).unwrap();
    let ks = space(Layout::Kernel, 1, 1, 2.0 * PI, CutoffSpec::default());
    let k = TangentialKernel::leaf_projection(ks, |_| 1.0).unwrap();
    let h = heat_coefficients(&model, &p, &k, &modes, &HeatSettings::default()).unwrap();
    assert!((h.a0_formula - PI.sqrt()).abs() < 1e-10, "{}", h.a0_formula);
    assert!((h.a0_fit() / h.a0_formula - 1.0).abs() < 1e-2, "{h:?}");
    assert_eq!(h.exponents, vec![-0.5, 0.0, 0.5, 1.0]);
    let narrow = HeatSettings { t_max: 2e-4, ..HeatSettings::default() };
    assert!(matches!(heat_coefficients(&model, &p, &k, &modes, &narrow), Err(CalcError::Fit(_))));
}

#[test]
fn dimension_spectrum_of_circle() {
    let (ks, ls) = zeta_spaces();
    let a = laplacian(&ls);
    let b = leaf_projection(&ks);
    let bs = derived_algebra(&b, &a, 1, &ZetaSettings::default()).unwrap();
    let ds = dimension_spectrum(&a, &bs, (-0.5, 1.5), &ZetaSettings::default()).unwrap();
    assert_eq!(ds.spectrum, vec![1]);
    assert!(ds.all_simple && ds.contained);
    let top = ds.reports[0].poles.iter().find(|p| p.detected).unwrap();
    assert!((top.residue() - c(2.0)).norm() < 4e-2);
    let low = separable(&ks, c(-1.0), |_, _, _, _| c(1.0));
    let ds = dimension_spectrum(&a, &[low], (-0.5, 1.5), &ZetaSettings::default()).unwrap();
    assert!(ds.spectrum.iter().all(|v| *v < 1), "{:?}", ds.spectrum);
}

#[test]
fn report_serialization() {
    let (ks, ls) = zeta_spaces();
    let rep = zeta_pole_table(&leaf_projection(&ks), &laplacian(&ls), (0.4, 0.6), &ZetaSettings::default()).unwrap();
    let tr = TraceReport::new(rep.poles.clone(), None, vec![1]);
    let json = tr.to_json().unwrap();
    let back: TraceReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, tr);
    for key in ["z_re", "z_im", "residue_re", "residue_im", "uncertainty", "simple", "spectrum", "heat"] {
        assert!(json.contains(key), "{key}");
    }
    let csv = tr.to_csv();
    assert_eq!(csv.lines().count(), 3);
    assert!(poles_csv(&rep.poles).starts_with("k,admissible"));
}
