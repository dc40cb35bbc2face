//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;
use transversal_psido::cutoff::{CutoffSpec, Profile};
use transversal_psido::homogeneous::{extend_homogeneous, HomogeneousComponent, SphereGrid, TestFunction, DEFAULT_CIRCLE_NODES};
use transversal_psido::model::{
    build_model, commutator_norm_study, eigen_oracle, model_operator, riemann_zeta, singular_value_study, tangential_operator,
    BoundednessVerdict, ModelFoliation, ModelSpec, OperatorKind, OracleTask, SpectralFunction, TangentialKernel,
};
use transversal_psido::resolvent::{power_components, seeley_components, ContourSpec};
use transversal_psido::scenario::{emit_reports, parse_scenario, run_scenario};
use transversal_psido::symbol::{commutator, compose, quantize, ClassicalSymbol, Field, Layout, SymbolSpace, Term};
use transversal_psido::traces::{
    canonical_trace, derived_algebra, dimension_spectrum, family_residue_check, heat_coefficients, symbolic_zeta, zeta_pole_table,
    FitSettings, HeatSettings, ZetaSettings,
};
use transversal_psido::C64;

type Outcome = Result<String, String>;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn product(q: usize, ly: f64) -> ModelFoliation {
    build_model(&ModelSpec::Product { p: 1, q, leaf_circumference: 1.0, transverse_circumference: ly }).unwrap()
}

fn space(layout: Layout, q: usize, nx: usize, ny: usize, ly: f64, cutoff: CutoffSpec) -> Arc<SymbolSpace> {
    Arc::new(SymbolSpace::with_sphere(layout, 1, q, 1, nx, ny, 1.0, ly, DEFAULT_CIRCLE_NODES, cutoff).unwrap())
}

fn zeta_spaces() -> (Arc<SymbolSpace>, Arc<SymbolSpace>) {
    let cut = CutoffSpec::new(0.5, 0.9).unwrap();
    (space(Layout::Kernel, 1, 1, 1, 2.0 * PI, cut.clone()), space(Layout::Local, 1, 1, 1, 2.0 * PI, cut))
}

/// `|eta|^2 + amp cos(y_1)`.
fn laplacian(sp: &Arc<SymbolSpace>, amp: f64) -> ClassicalSymbol {
    let a2 = Field::from_fn(sp, c(2.0), |_, w| vec![c(w.iter().map(|v| v * v).sum())]);
    if amp == 0.0 {
        return ClassicalSymbol::polynomial(Arc::clone(sp), 2, vec![a2]).unwrap();
    }
    let a1 = Field::zeros(sp, c(1.0));
    let a0 = Field::from_fn(sp, c(0.0), |iy, _| vec![c(amp * sp.transverse_coords(iy)[0].cos())]);
    ClassicalSymbol::polynomial(Arc::clone(sp), 2, vec![a2, a1, a0]).unwrap()
}

fn leaf_projection(sp: &Arc<SymbolSpace>) -> ClassicalSymbol {
    match TangentialKernel::leaf_projection(Arc::clone(sp), |_| 1.0).unwrap() {
        TangentialKernel::Product(s) => s,
        _ => unreachable!(),
    }
}

/// `f(x, x', y, omega) theta |eta|^order` on a kernel-layout space (q = 1).
fn separable<F: Fn(f64, f64, f64, f64) -> C64>(sp: &Arc<SymbolSpace>, order: C64, f: F) -> ClassicalSymbol {
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

fn heat() -> Outcome {
    let start = Instant::now();
    let model = product(1, 2.0 * PI);
    let modes = model.modes(0, 512);
    let p = model_operator(&model, &OperatorKind::TransverseLaplacian, &modes).map_err(|e| e.to_string())?;
    let k = TangentialKernel::leaf_projection(space(Layout::Kernel, 1, 1, 1, 2.0 * PI, CutoffSpec::default()), |_| 1.0).unwrap();
    let r = tangential_operator(&model, &k, &modes).unwrap();
    let t = 0.01;
    let oracle = eigen_oracle(&p.matrix, OracleTask::PairedTrace { kernel: &r, function: SpectralFunction::Heat(t) }).unwrap().re;
    let expect = (PI / t).sqrt();
    let oracle_err = (oracle / expect - 1.0).abs();
    let h = heat_coefficients(&model, &p, &k, &modes, &HeatSettings::default()).map_err(|e| e.to_string())?;
    let fit_err = (h.a0_fit() / h.a0_formula - 1.0).abs();
    let secs = start.elapsed().as_secs_f64();
    check(
        oracle_err < 1e-3 && fit_err < 1e-2 && secs < 30.0,
        format!(
            "oracle(t=0.01) {oracle:.8} vs sqrt(pi/t) {expect:.8} (rel {oracle_err:.1e}); a0 fit {:.8} vs formula {:.8} (rel {fit_err:.1e}); normalization {}; {secs:.2}s",
            h.a0_fit(),
            h.a0_formula,
            h.normalization
        ),
    )
}

fn zeta() -> Outcome {
    let start = Instant::now();
    let (ks, ls) = zeta_spaces();
    let q = leaf_projection(&ks);
    let a = laplacian(&ls, 0.0);
    let model = product(1, 2.0 * PI);
    let modes = model.modes(0, 512);
    let settings = ZetaSettings::default();
    let mut worst: f64 = 0.0;
    for z in [c(1.0), c(1.5), C64::new(1.7, 0.6), c(2.0), C64::new(2.4, -1.3), c(3.0)] {
        let v = symbolic_zeta(&q, &a, z, &model, &modes, &settings).map_err(|e| e.to_string())?;
        let exact = riemann_zeta(z * 2.0).unwrap() * 2.0;
        worst = worst.max((v - exact).norm() / exact.norm());
    }
    let rep = zeta_pole_table(&q, &a, (0.2, 0.8), &settings).map_err(|e| e.to_string())?;
    let top = rep.poles.iter().find(|p| p.detected).ok_or("no pole detected")?;
    let loc = (top.z() - c(0.5)).norm();
    let res = (top.residue() - c(1.0)).norm();
    let defect = rep.two_path_defect.unwrap_or(f64::INFINITY);
    let secs = start.elapsed().as_secs_f64();
    check(
        worst < 1e-3 && loc < 5e-3 && res < 2e-2 && top.simple && defect < 2e-2 && secs < 120.0,
        format!(
            "max rel gap to 2 zeta_R(2z) {worst:.1e}; pole {:.6}{:+.1e}i; residue {:.6} (err {res:.1e}); two-path defect {defect:.1e}; constant {:.8} (1/(4 pi) = {:.8}); {secs:.2}s",
            top.z_re,
            top.z_im,
            top.residue_re,
            rep.constant.unwrap_or(f64::NAN),
            1.0 / (4.0 * PI)
        ),
    )
}

/// Two-level random kernel symbol of the given non-integer order.
fn random_symbol(sp: &Arc<SymbolSpace>, order: f64, rng: &mut ChaCha8Rng) -> ClassicalSymbol {
    let (lx, ly) = (sp.lx, sp.ly);
    let mut terms = Vec::new();
    for level in 0..2 {
        let coeffs: Vec<(f64, f64, f64, f64, C64)> = (0..4)
            .map(|_| {
                (
                    rng.gen_range(-1..=1) as f64,
                    rng.gen_range(-1..=1) as f64,
                    rng.gen_range(-1..=1) as f64,
                    rng.gen_range(-1.0..1.0),
                    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                )
            })
            .collect();
        let sym = separable(sp, c(order - level as f64), |x, x2, y, w| {
            coeffs
                .iter()
                .map(|(a, b, cc, tilt, v)| v * C64::from_polar(1.0, 2.0 * PI * (a * x / lx + b * x2 / lx + cc * y / ly)) * (1.0 + tilt * w))
                .sum()
        });
        let mut t = sym.terms.into_iter().next().unwrap();
        t.level = level;
        terms.push(t);
    }
    ClassicalSymbol::from_terms(Arc::clone(sp), c(order), 1, terms).unwrap()
}

fn canonical() -> Outcome {
    // grid trace
    let ly = 16.0 * PI;
    let sp = space(Layout::Kernel, 1, 3, 3, ly, CutoffSpec::default());
    let s = separable(&sp, c(-3.5), |x, x2, y, w| {
        c((1.2 + (2.0 * PI * (x - x2)).cos()) * (2.0 + (2.0 * PI * y / ly).sin()) * (1.0 + 0.3 * w))
    });
    let model = product(1, ly);
    let grid = quantize(&s, &model, &model.modes(1, 512)).unwrap().trace();
    let tr = canonical_trace(&s).map_err(|e| e.to_string())?;
    let rel = (grid - tr).norm() / tr.norm();
    // commutators
    let sp = space(Layout::Kernel, 1, 7, 7, 2.0 * PI, CutoffSpec::default());
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (oa, ob) = (rng.gen_range(-1.9..0.4), rng.gen_range(-1.9..0.4));
        let a = random_symbol(&sp, oa, &mut rng);
        let b = random_symbol(&sp, ob, &mut rng);
        let t = canonical_trace(&commutator(&a, &b).unwrap()).map_err(|e| e.to_string())?;
        worst = worst.max(t.norm() / (a.max_abs() * b.max_abs()));
    }
    // family residue
    let sp = space(Layout::Kernel, 1, 3, 3, 2.0 * PI, CutoffSpec::default());
    let base = separable(&sp, c(0.0), |x, x2, y, w| c((1.0 + (2.0 * PI * (x - x2)).cos()) * (2.0 + y.cos()) * (1.0 + 0.4 * w)));
    let family = |z: C64| {
        let mut s = base.clone();
        for t in &mut s.terms {
            t.field.degree = -z;
        }
        s.order = -z;
        Ok(s)
    };
    let chk = family_residue_check(family, c(1.0), &FitSettings::default()).map_err(|e| e.to_string())?;
    check(
        rel < 1e-3 && worst < 1e-8 && chk.defect < 1e-5,
        format!("TR vs grid trace rel {rel:.1e}; max |TR[A,B]|/(|A||B|) over 20 pairs {worst:.1e}; family residue defect {:.1e}", chk.defect),
    )
}

fn scaling() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let s1 = Arc::new(SphereGrid::new(1, 0).unwrap());
    let circle = Arc::new(SphereGrid::new(2, 128).unwrap());
    let mut comps: Vec<(HomogeneousComponent, &str)> = vec![
        (HomogeneousComponent::scalar(c(-1.0), s1.clone(), |w| c(w[0])), "odd"),
        (HomogeneousComponent::scalar(c(-1.0), s1.clone(), |_| c(1.0)), "even"),
    ];
    while comps.len() < 10 {
        let q = rng.gen_range(1..=2usize);
        let k = rng.gen_range(0..=2usize);
        let (a, b, d) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.5..2.0));
        let grid = if q == 1 { s1.clone() } else { circle.clone() };
        let deg = c(-(q as f64) - k as f64);
        let h = HomogeneousComponent::scalar(deg, grid, move |w| {
            let t = if w.len() == 1 { w[0] } else { w[1].atan2(w[0]) };
            if w.len() == 1 {
                C64::new(d + a * t, b * t)
            } else {
                C64::new(d + a * t.cos() + b * (2.0 * t).sin(), a * (3.0 * t).cos())
            }
        });
        comps.push((h, "random"));
    }
    let mut worst: f64 = 0.0;
    let mut obstructions = Vec::new();
    for (h, kind) in &comps {
        let q = h.q();
        let center: Vec<f64> = (0..q).map(|i| 0.2 - 0.15 * i as f64).collect();
        let phi = TestFunction::gaussian(&center, 1.3, 20);
        let base = extend_homogeneous(h, &phi).map_err(|e| e.to_string())?;
        let k = (-h.degree.re - q as f64).round() as i32;
        let log_term: C64 = base
            .log_coefficients
            .iter()
            .map(|(alpha, s)| s * phi.derivative_at_zero(alpha).unwrap())
            .sum();
        if *kind != "random" {
            obstructions.push(format!("{kind} {:.2e}", base.log_coefficients.iter().map(|(_, s)| s.norm()).sum::<f64>()));
        }
        for lam in [2.0, 0.5, 10.0] {
            let scaled = extend_homogeneous(h, &phi.dilated(lam)).map_err(|e| e.to_string())?;
            let rhs = scaled.pairing * lam.powi(-(q as i32) - k) + log_term * lam.ln();
            worst = worst.max((base.pairing - rhs).norm() / base.pairing.norm().max(1.0));
        }
    }
    check(worst < 1e-8, format!("max scaling defect over 10 components and lambda in {{2, 1/2, 10}}: {worst:.1e}; obstructions: {}", obstructions.join(", ")))
}

fn seeley() -> Outcome {
    let sp = Arc::new(SymbolSpace::new(Layout::Local, 1, 1, 1, 1, 9, 1.0, 2.0 * PI).unwrap());
    let fam = seeley_components(&laplacian(&sp, 0.0), 4, 0.3).map_err(|e| e.to_string())?;
    let lam = C64::new(-1.5, 2.0);
    let mut exact_p0: f64 = 0.0;
    let mut higher: f64 = 0.0;
    for (y, e) in [(0.4, 1.3), (2.0, -3.0), (5.0, 0.7)] {
        exact_p0 = exact_p0.max((fam.eval(0, &[y], &[e], lam).unwrap()[0] - (c(e * e) - lam).inv()).norm());
        for l in 1..=4 {
            higher = higher.max(fam.eval(l, &[y], &[e], lam).unwrap()[0].norm());
        }
    }
    // Neumann oracle: order -4 coefficient of (|t eta|^2 + c - t^2 lam)^{-1} in t, by Richardson extrapolation
    let amp = 0.7;
    let fam = seeley_components(&laplacian(&sp, amp), 4, 0.3).map_err(|e| e.to_string())?;
    let lam = C64::new(0.5, -3.0);
    let mut neumann: f64 = 0.0;
    for (y, e) in [(0.4f64, 1.3f64), (2.0, -3.0), (5.1, 0.6)] {
        let cy = amp * y.cos();
        let p2 = (c(e * e) - lam).inv();
        let g = |t: f64| {
            let full = (c(t * t * e * e + cy) - lam * (t * t)).inv();
            (full - p2 / (t * t)) * t.powi(4)
        };
        let (t1, t2) = (400.0, 800.0);
        let oracle = (g(t2) * 4.0 - g(t1)) / 3.0;
        let p4 = fam.eval(2, &[y], &[e], lam).unwrap()[0];
        neumann = neumann.max((p4 - oracle).norm());
    }
    // group law and quasi-homogeneity
    let sp15 = Arc::new(SymbolSpace::new(Layout::Local, 1, 1, 1, 1, 15, 1.0, 2.0 * PI).unwrap());
    let a = laplacian(&sp15, 0.6);
    let spec = ContourSpec::default();
    let (z1, z2) = (C64::new(-0.3, 0.4), C64::new(-0.45, -0.1));
    let p1 = power_components(&a, z1, 3, &spec).unwrap();
    let p2 = power_components(&a, z2, 3, &spec).unwrap();
    let p12 = power_components(&a, z1 + z2, 3, &spec).unwrap();
    let prod = compose(&p1, &p2).unwrap();
    let group = (0..=3)
        .map(|l| {
            let mut d = prod.component(l);
            d.add_assign(&p12.component(l), c(-1.0));
            d.max_abs()
        })
        .fold(0.0, f64::max);
    let mut quasi: f64 = 0.0;
    for q in 1..=2 {
        let sp = Arc::new(SymbolSpace::new(Layout::Local, 1, q, 1, 1, 7, 1.0, 2.0 * PI).unwrap());
        let fam = seeley_components(&laplacian(&sp, 0.4), 3, 0.3).unwrap();
        let eta: Vec<f64> = (0..q).map(|i| 0.7 + 0.4 * i as f64).collect();
        let eta2: Vec<f64> = eta.iter().map(|v| 2.0 * v).collect();
        let y: Vec<f64> = (0..q).map(|i| 1.1 + i as f64).collect();
        let lam = C64::new(-0.8, 1.9);
        for l in 0..=3 {
            let u = fam.eval(l, &y, &eta, lam).unwrap()[0];
            let v = fam.eval(l, &y, &eta2, lam * 4.0).unwrap()[0];
            if u.norm() > 1e-14 {
                quasi = quasi.max((v - u * 2f64.powi(-2 - l as i32)).norm() / u.norm());
            }
        }
    }
    check(
        exact_p0 < 1e-12 && higher < 1e-12 && neumann < 1e-6 && group < 1e-6 && quasi < 1e-10,
        format!("exact case p_-2 err {exact_p0:.1e}, higher {higher:.1e}; p_-4 vs Neumann {neumann:.1e}; group law {group:.1e}; quasi-homogeneity {quasi:.1e}"),
    )
}

fn triples() -> Outcome {
    let model = product(1, 2.0 * PI);
    let ks1 = space(Layout::Kernel, 1, 3, 3, 2.0 * PI, CutoffSpec::default());
    let mut drifts = Vec::new();
    let mut bounded = true;
    for seed in 0..5 {
        let k = TangentialKernel::random_product(Arc::clone(&ks1), seed, true).unwrap();
        let st = commutator_norm_study(&model, &OperatorKind::FirstOrderDirac, &k, &[64, 128, 256, 512], 1).map_err(|e| e.to_string())?;
        bounded &= st.verdict == BoundednessVerdict::Bounded;
        drifts.push(st.drift);
    }
    let max_drift = drifts.iter().copied().fold(0.0, f64::max);
    let k = TangentialKernel::random_product(Arc::clone(&ks1), 5, false).unwrap();
    let sv1 = singular_value_study(&model, &OperatorKind::FirstOrderDirac, &k, 256, 1).map_err(|e| e.to_string())?;
    let ks2 = space(Layout::Kernel, 2, 3, 3, 2.0 * PI, CutoffSpec::default());
    let k = TangentialKernel::random_product(ks2, 5, false).unwrap();
    let sv2 = singular_value_study(&product(2, 2.0 * PI), &OperatorKind::FirstOrderDirac, &k, 24, 1).map_err(|e| e.to_string())?;
    let (e1, e2) = (sv1.exponent.unwrap_or(f64::NAN), sv2.exponent.unwrap_or(f64::NAN));
    let k = TangentialKernel::random_product(ks1, 3, true).unwrap();
    let leaf = commutator_norm_study(&model, &OperatorKind::LeafwiseDirac, &k, &[64, 128, 256], 1).map_err(|e| e.to_string())?;
    check(
        bounded && max_drift < 0.05 && (e1 + 1.0).abs() < 0.1 && (e2 + 0.5).abs() < 0.05 && !leaf.verdict.passed(),
        format!(
            "max commutator drift 64->512 over 5 kernels {max_drift:.1e}; SV exponent q=1 {e1:.4}, q=2 {e2:.4}; leafwise verdict {:?}",
            leaf.verdict
        ),
    )
}

fn spectrum() -> Outcome {
    let (ks, ls) = zeta_spaces();
    let a = laplacian(&ls, 0.0);
    let settings = ZetaSettings::default();
    let bs = derived_algebra(&leaf_projection(&ks), &a, 1, &settings).map_err(|e| e.to_string())?;
    let ds = dimension_spectrum(&a, &bs, (-0.5, 1.5), &settings).map_err(|e| e.to_string())?;
    let low = separable(&ks, c(-1.0), |_, _, _, _| c(1.0));
    let shifted = dimension_spectrum(&a, &[low], (-0.5, 1.5), &settings).map_err(|e| e.to_string())?;
    let top = shifted.reports[0].poles.iter().filter(|p| p.detected).map(|p| p.z_re).fold(f64::NEG_INFINITY, f64::max);
    check(
        ds.spectrum == vec![1] && ds.all_simple && top < 1.0 - 1e-2,
        format!("Sd = {:?}, all simple {}; negative-order b: top pole {top:.4}", ds.spectrum, ds.all_simple),
    )
}

const SCENARIO: &str = r#"{
  "schema_version": 1,
  "seed": 31,
  "model": { "kind": "product", "p": 1, "q": 1 },
  "operator": { "named": { "name": "transverse_laplacian" } },
  "tasks": [
    { "task": "zeta_table", "window": [-0.6, 1.2] },
    { "task": "heat" },
    { "task": "dimension_spectrum" },
    { "task": "tr", "symbol": { "weight": { "kernel": { "kind": "random", "seed": 3, "y_dependent": true }, "order": -2.5 } } },
    { "task": "commutator_study", "operator": { "name": "first_order_dirac" }, "kernel": { "kind": "random", "seed": 1, "y_dependent": true }, "truncations": [32, 64] },
    { "task": "schatten_study", "operator": { "name": "first_order_dirac" }, "kernel": { "kind": "random", "seed": 2 }, "truncation": 128 }
  ]
}"#;

fn snapshot(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let s = parse_scenario(SCENARIO).map_err(|e| e.to_string())?;
    s.validate().map_err(|e| e.to_string())?;
    let mut snaps = Vec::new();
    for threads in [1, 3] {
        let dir = tempfile::tempdir().unwrap();
        let res = run_scenario(&s, dir.path(), threads).map_err(|e| e.to_string())?;
        let index = emit_reports(dir.path(), &s, &res).map_err(|e| e.to_string())?;
        if index.failures() > 0 {
            return Err(format!("{} task(s) failed", index.failures()));
        }
        snaps.push(snapshot(dir.path()));
    }
    let files = snaps[0].len();
    let bytes: usize = snaps[0].iter().map(|(_, b)| b.len()).sum();
    check(snaps[0] == snaps[1], format!("{files} report files, {bytes} bytes, compared across runs with 1 and 3 workers"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("heat leading coefficient", heat),
        ("zeta pole and residue", zeta),
        ("canonical trace", canonical),
        ("homogeneous scaling law", scaling),
        ("resolvent and powers", seeley),
        ("commutators and Schatten class", triples),
        ("dimension spectrum", spectrum),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let r = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match r {
            Ok(d) => println!("PASS {} {name}: {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {} {name}: {d}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
