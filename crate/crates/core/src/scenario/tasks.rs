//! Task dispatch.

use super::emit::{TaskArtifact, TaskOutput};
use super::spec::{KernelSpec, OperatorSpec, OracleFunction, Scenario, SymbolSource, Task, WeightSpec};
use crate::cutoff::{CutoffSpec, Profile};
use crate::error::{CalcError, Result};
use crate::model::{
    build_model, commutator_norm_study, eigen_oracle, model_operator, operator_seminorm, singular_value_study, tangential_operator,
    trace_class_check, KroneckerKernel, ModelFoliation, ModelKind, ModelOperator, OperatorKind, OracleTask, SpectralFunction,
    TangentialKernel,
};
use crate::numerics::C64;
use crate::resolvent::{parametrix, power_components};
use crate::symbol::{
    compose, quantize, symbol_from_json, symbol_to_json, transversal_symbol, ClassicalSymbol, Field, Layout, SymbolSpace, Term,
};
use crate::traces::{
    canonical_trace, derived_algebra, dimension_spectrum, heat_coefficients, poles_csv, residue_trace, zeta_pole_table, zeta_trace,
    TraceReport, ZetaSettings,
};
use serde_json::{json, Value};
use std::fmt::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// Shared read-only state for every task of a scenario.
pub struct Context {
    pub scenario: Scenario,
    pub base_dir: PathBuf,
    pub model: ModelFoliation,
    /// kernel-layout space for tangential weights (product models only)
    pub kernel_space: Option<Arc<SymbolSpace>>,
    /// the operator symbol `a`
    pub operator: ClassicalSymbol,
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

impl Context {
    pub fn new(scenario: &Scenario, base_dir: &Path) -> Result<Self> {
        let model = build_model(&scenario.model)?;
        let g = &scenario.settings.grid;
        let cutoff = CutoffSpec::new(g.cutoff[0], g.cutoff[1])?;
        let (lx, ly) = match model.kind {
            ModelKind::Product { lx, ly } => (lx, ly),
            ModelKind::Kronecker { length, .. } => (length, length),
        };
        let kernel_space = match model.kind {
            ModelKind::Product { .. } => Some(Arc::new(SymbolSpace::with_sphere(
                Layout::Kernel,
                model.p,
                model.q,
                1,
                g.nx,
                g.ny,
                lx,
                ly,
                g.circle_nodes,
                cutoff.clone(),
            )?)),
            ModelKind::Kronecker { .. } => None,
        };
        let operator = match &scenario.operator {
            OperatorSpec::Named(kind) => {
                let full = model_operator(&model, kind, &model.modes(0, 1))?.symbol;
                if full.order.fract() != 0.0 || full.order < 0.0 {
                    return Err(CalcError::Precondition(format!("operator order {} is not a nonnegative integer", full.order)));
                }
                let sp = SymbolSpace::with_sphere(Layout::Local, model.p, model.q, full.rank, 1, g.ny, lx, ly, g.circle_nodes, cutoff)?;
                let ts = transversal_symbol(&full, &sp, None)?;
                ClassicalSymbol::polynomial(ts.space, full.order as usize, vec![ts.field])?
            }
            OperatorSpec::Symbol(v) => symbol_from_json(&v.to_string())?,
            OperatorSpec::SymbolFile(p) => symbol_from_json(&std::fs::read_to_string(base_dir.join(p))?)?,
        };
        if operator.space.q != model.q {
            return Err(CalcError::DimensionMismatch(format!("operator has q = {}, model has q = {}", operator.space.q, model.q)));
        }
        Ok(Context { scenario: scenario.clone(), base_dir: base_dir.to_path_buf(), model, kernel_space, operator })
    }

    fn zeta_settings(&self) -> ZetaSettings {
        let s = &self.scenario.settings;
        ZetaSettings { fit: s.fit.clone(), contour: s.contour.clone(), depth: s.depth }
    }

    fn seed(&self, offset: u64) -> u64 {
        self.scenario.seed.wrapping_add(offset)
    }

    fn named_operator(&self, over: &Option<OperatorKind>) -> Result<OperatorKind> {
        match (over, &self.scenario.operator) {
            (Some(k), _) => Ok(k.clone()),
            (None, OperatorSpec::Named(k)) => Ok(k.clone()),
            _ => Err(CalcError::Precondition("task needs a named model operator".into())),
        }
    }

    fn model_operator(&self, kind: &OperatorKind) -> Result<ModelOperator> {
        let s = &self.scenario.settings;
        model_operator(&self.model, kind, &self.model.modes(s.leaf_truncation, s.truncation))
    }

    fn product_space(&self) -> Result<&Arc<SymbolSpace>> {
        self.kernel_space
            .as_ref()
            .ok_or_else(|| CalcError::Precondition("symbol-valued kernels need a product model".into()))
    }

    pub fn kernel(&self, spec: &KernelSpec) -> Result<TangentialKernel> {
        match spec {
            KernelSpec::LeafProjection { weight } => {
                let w = *weight;
                TangentialKernel::leaf_projection(Arc::clone(self.product_space()?), move |_| w)
            }
            KernelSpec::Random { seed, y_dependent } => {
                TangentialKernel::random_product(Arc::clone(self.product_space()?), self.seed(*seed), *y_dependent)
            }
            KernelSpec::Unit { width } => TangentialKernel::unit_approximation(Arc::clone(self.product_space()?), *width),
            KernelSpec::KroneckerRandom { seed, count, max_shift } => {
                if !matches!(self.model.kind, ModelKind::Kronecker { .. }) {
                    return Err(CalcError::Precondition("kronecker_random kernel needs a Kronecker model".into()));
                }
                Ok(TangentialKernel::Kronecker(KroneckerKernel::random(self.seed(*seed), *count, *max_shift)))
            }
        }
    }

    /// The kernel symbol composed with `theta |eta|^order`.
    pub fn weight(&self, spec: &WeightSpec) -> Result<ClassicalSymbol> {
        let k = match self.kernel(&spec.kernel)? {
            TangentialKernel::Product(s) => s,
            TangentialKernel::Kronecker(_) => return Err(CalcError::Precondition("weight needs a symbol-valued kernel".into())),
        };
        if spec.order == 0.0 {
            return Ok(k);
        }
        let local = Arc::new(k.space.with_layout(Layout::Local));
        let field = Field::from_fn(&local, c(spec.order), |_, _| vec![c(1.0)]);
        let theta = ClassicalSymbol::from_terms(local, c(spec.order), 0, vec![Term { level: 0, profile: Profile::Theta, field }])?;
        compose(&k, &theta)
    }

    pub fn symbol(&self, src: &SymbolSource) -> Result<ClassicalSymbol> {
        match src {
            SymbolSource::Operator => Ok(self.operator.clone()),
            SymbolSource::Weight(w) => self.weight(w),
            SymbolSource::Inline(v) => symbol_from_json(&v.to_string()),
            SymbolSource::File(p) => symbol_from_json(&std::fs::read_to_string(self.base_dir.join(p))?),
        }
    }
}

fn symbol_value(s: &ClassicalSymbol) -> Result<Value> {
    serde_json::from_str(&symbol_to_json(s)?).map_err(|e| CalcError::Serialization(e.to_string()))
}

fn to_value<T: serde::Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| CalcError::Serialization(e.to_string()))
}

fn cplx(z: C64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

/// Tabulates `TR(q A^{-z})` on the real window, skipping points near pole candidates.
fn zeta_samples(ctx: &Context, q: &ClassicalSymbol, window: (f64, f64), settings: &ZetaSettings) -> String {
    let mut s = String::from("z,tr_re,tr_im\n");
    let m = ctx.operator.order.re;
    let depth = settings.depth.unwrap_or_else(|| (q.order.re + q.space.q as f64 - window.0 * m).ceil().max(0.0) as usize);
    let n = 40;
    for i in 0..=n {
        let z = window.0 + (window.1 - window.0) * i as f64 / n as f64;
        // candidates sit at (ord + q - k) / m
        let x = (q.order.re + q.space.q as f64 - z * m).rem_euclid(1.0);
        if x.min(1.0 - x) < 0.05 * m {
            continue;
        }
        if let Ok(v) = zeta_trace(q, &ctx.operator, c(z), depth, &settings.contour) {
            let _ = writeln!(s, "{z},{},{}", v.re, v.im);
        }
    }
    s
}

fn out(report: &str, json: Value, artifacts: Vec<TaskArtifact>) -> TaskOutput {
    TaskOutput { report: report.to_string(), json, artifacts }
}

fn csv(name: &str, contents: String) -> TaskArtifact {
    TaskArtifact { name: name.to_string(), contents }
}

pub fn run_task(ctx: &Context, task: &Task) -> Result<TaskOutput> {
    let settings = &ctx.scenario.settings;
    match task {
        Task::Compose { left, right } => {
            let s = compose(&ctx.symbol(left)?, &ctx.symbol(right)?)?;
            Ok(out("symbol.json", json!({ "order": cplx(s.order), "depth": s.depth, "symbol": symbol_value(&s)? }), vec![]))
        }
        Task::Parametrix { depth } => {
            let p = parametrix(&ctx.operator, *depth)?;
            let v = json!({
                "symbol_defect": p.symbol_defect,
                "remainder_order": p.remainder_order,
                "symbol": symbol_value(&p.symbol)?,
            });
            Ok(out("parametrix.json", v, vec![]))
        }
        Task::Power { z, depth } => {
            let zc = C64::new(z[0], z[1]);
            let s = power_components(&ctx.operator, zc, *depth, &settings.contour)?;
            let sizes: Vec<f64> = (0..=s.depth).map(|l| s.component(l).max_abs()).collect();
            let v = json!({ "z": cplx(zc), "order": cplx(s.order), "component_sizes": sizes, "symbol": symbol_value(&s)? });
            Ok(out("power.json", v, vec![]))
        }
        Task::Tr { symbol } => {
            let s = ctx.symbol(symbol)?;
            let tr = canonical_trace(&s)?;
            Ok(out("tr.json", json!({ "order": cplx(s.order), "tr": cplx(tr) }), vec![]))
        }
        Task::Residue { symbol } => {
            let r = residue_trace(&ctx.symbol(symbol)?)?;
            let mut form = String::from("x,y,re,im\n");
            for d in &r.form {
                let _ = writeln!(form, "{},{},{},{}", d.x[0], d.y.first().copied().unwrap_or(0.0), d.re, d.im);
            }
            Ok(out("residue.json", to_value(&r)?, vec![csv("residue_form.csv", form)]))
        }
        Task::ZetaTable { weight, window } => {
            let q = ctx.weight(weight)?;
            let zs = ctx.zeta_settings();
            let rep = zeta_pole_table(&q, &ctx.operator, (window[0], window[1]), &zs)?;
            let samples = zeta_samples(ctx, &q, (window[0], window[1]), &zs);
            Ok(out("poles.json", to_value(&rep)?, vec![csv("poles.csv", poles_csv(&rep.poles)), csv("zeta_samples.csv", samples)]))
        }
        Task::Heat { kernel } => {
            let kind = ctx.named_operator(&None)?;
            let p = ctx.model_operator(&kind)?;
            let k = ctx.kernel(kernel)?;
            let modes = ctx.model.modes(settings.leaf_truncation, settings.truncation);
            let h = heat_coefficients(&ctx.model, &p, &k, &modes, &settings.heat)?;
            let mut s = String::from("t,trace,fit\n");
            for smp in &h.samples {
                let fit: f64 = h.exponents.iter().zip(&h.coefficients).map(|(e, a)| a * smp.t.powf(*e)).sum();
                let _ = writeln!(s, "{},{},{fit}", smp.t, smp.trace);
            }
            let mut v = to_value(&h)?;
            v["a0_fit"] = json!(h.a0_fit());
            Ok(out("heat.json", v, vec![csv("heat_samples.csv", s)]))
        }
        Task::DimensionSpectrum { weights, iterates, window } => {
            let zs = ctx.zeta_settings();
            let defaults = [WeightSpec::default()];
            let ws: &[WeightSpec] = if weights.is_empty() { &defaults } else { weights };
            let mut bs = Vec::new();
            for w in ws {
                bs.extend(derived_algebra(&ctx.weight(w)?, &ctx.operator, *iterates, &zs)?);
            }
            let q = ctx.model.q as f64;
            let win = window.map(|w| (w[0], w[1])).unwrap_or((-0.5, q + 0.5));
            let ds = dimension_spectrum(&ctx.operator, &bs, win, &zs)?;
            let poles: Vec<_> = ds.reports.iter().flat_map(|r| r.poles.iter().filter(|p| p.detected).cloned()).collect();
            let report = TraceReport::new(poles, None, ds.spectrum.clone());
            Ok(out("spectrum.json", to_value(&ds)?, vec![csv("spectrum.csv", report.to_csv())]))
        }
        Task::Sobolev { weight, s, k } => {
            let modes = ctx.model.modes(settings.leaf_truncation, settings.truncation);
            let t = quantize(&ctx.weight(weight)?, &ctx.model, &modes)?;
            Ok(out("sobolev.json", to_value(&trace_class_check(&t, *s, *k)?)?, vec![]))
        }
        Task::Seminorm { weight, s, t, l } => {
            let modes = ctx.model.modes(settings.leaf_truncation, settings.truncation);
            let a = quantize(&ctx.weight(weight)?, &ctx.model, &modes)?;
            let v = operator_seminorm(&a, *s, *t, *l)?;
            Ok(out("seminorm.json", json!({ "s": s, "t": t, "l": l, "seminorm": v }), vec![]))
        }
        Task::CommutatorStudy { operator, kernel, truncations } => {
            let kind = ctx.named_operator(operator)?;
            let st = commutator_norm_study(&ctx.model, &kind, &ctx.kernel(kernel)?, truncations, settings.leaf_truncation)?;
            let mut s = String::from("truncation,modes,norm\n");
            for r in &st.rows {
                let _ = writeln!(s, "{},{},{}", r.truncation, r.modes, r.norm);
            }
            Ok(out("commutator.json", to_value(&st)?, vec![csv("commutator_norms.csv", s)]))
        }
        Task::SchattenStudy { operator, kernel, truncation } => {
            let kind = ctx.named_operator(operator)?;
            let st = singular_value_study(&ctx.model, &kind, &ctx.kernel(kernel)?, *truncation, settings.leaf_truncation)?;
            Ok(out("schatten.json", to_value(&st)?, vec![]))
        }
        Task::Oracle { function, kernel } => {
            let kind = ctx.named_operator(&None)?;
            let p = ctx.model_operator(&kind)?;
            let (f, arg) = match function {
                OracleFunction::Heat { t } => (SpectralFunction::Heat(*t), json!({ "heat": t })),
                OracleFunction::Zeta { z } => (SpectralFunction::Zeta(C64::new(z[0], z[1])), json!({ "zeta": z })),
            };
            let v = match kernel {
                Some(k) => {
                    let modes = ctx.model.modes(settings.leaf_truncation, settings.truncation);
                    let r = tangential_operator(&ctx.model, &ctx.kernel(k)?, &modes)?;
                    eigen_oracle(&p.matrix, OracleTask::PairedTrace { kernel: &r, function: f })?
                }
                None => match f {
                    SpectralFunction::Heat(t) => eigen_oracle(&p.matrix, OracleTask::Heat(t))?,
                    SpectralFunction::Zeta(z) => eigen_oracle(&p.matrix, OracleTask::Zeta(z))?,
                },
            };
            Ok(out("oracle.json", json!({ "function": arg, "modes": p.matrix.dim(), "value": cplx(v) }), vec![]))
        }
    }
}
