//! Heat coefficients of the paired trace `tr R(k) e^{-tP}`.

use crate::error::{CalcError, Result};
use crate::model::{eigen_oracle, tangential_operator, ModelFoliation, ModelOperator, ModeSet, OracleTask, SpectralFunction, TangentialKernel};
use crate::numerics::{integrate_to_infinity, unit_rule, TanhSinh, C64, ZERO};
use crate::symbol::PhasePoint;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatSettings {
    /// ladder terms beyond the leading one (`L + 2` exponents are fitted)
    pub extra_terms: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
    pub ridge: f64,
}

impl Default for HeatSettings {
    fn default() -> Self {
        HeatSettings { extra_terms: 2, t_min: 1e-4, t_max: 1e-1, samples: 24, ridge: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatSample {
    pub t: f64,
    pub trace: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatExpansion {
    pub exponents: Vec<f64>,
    pub coefficients: Vec<f64>,
    /// largest relative residual of the fit over the t grid
    pub fit_error: f64,
    pub condition: f64,
    /// leading coefficient from the conormal integral
    pub a0_formula: f64,
    pub normalization: String,
    pub samples: Vec<HeatSample>,
}

impl HeatExpansion {
    pub fn a0_fit(&self) -> f64 {
        self.coefficients[0]
    }
}

/// `Tr e^{-s}` for a Hermitian positive `rank x rank` sample.
fn trace_exp_neg(sample: &[C64], rank: usize, weight: &[C64]) -> Result<C64> {
    let m = DMatrix::from_fn(rank, rank, |i, j| sample[i * rank + j]);
    let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    if (&m - &h).norm() > 1e-10 * m.norm().max(1.0) {
        return Err(CalcError::NotHermitian((&m - &h).norm()));
    }
    let eig = h.symmetric_eigen();
    if eig.eigenvalues.min() <= 0.0 {
        return Err(CalcError::NotElliptic(format!("principal symbol has eigenvalue {} on the conormal sphere", eig.eigenvalues.min())));
    }
    let d = DMatrix::from_diagonal(&DVector::from_iterator(rank, eig.eigenvalues.iter().map(|l| C64::new((-l).exp(), 0.0))));
    let e = &eig.eigenvectors * d * eig.eigenvectors.adjoint();
    let w = DMatrix::from_fn(rank, rank, |i, j| weight[i * rank + j]);
    Ok((w * e).trace())
}

/// `int_{M} (2 pi)^{-q} int Tr k(x, x, y) e^{-sigma_P(x, y, 0, eta)} d eta dx dy`
/// for a kernel sampled on a product grid.
pub fn heat_leading_coefficient(p: &ModelOperator, kernel: &TangentialKernel) -> Result<f64> {
    let sym = kernel.symbol().ok_or_else(|| CalcError::InvalidModel("the leading heat coefficient needs a sampled product kernel".into()))?;
    let sp = &sym.space;
    let fs = &p.symbol;
    if fs.q != sp.q || fs.p != sp.p || fs.rank != sp.rank {
        return Err(CalcError::DimensionMismatch("operator and kernel dimensions differ".into()));
    }
    let m = fs.order;
    if !(m > 0.0) {
        return Err(CalcError::Precondition("heat expansion needs a positive order".into()));
    }
    let q = sp.q;
    let r = sp.rank;
    let grid = &sp.sphere;
    let inner = TanhSinh::new(0.0, 1.0, 1.0 / 48.0);
    let outer = unit_rule();
    let cell = sp.leaf_weight() * sp.transverse_weight();
    let kfield = sym.component(0);
    let mut total = ZERO;
    for pt in sym.diagonal_points() {
        let ty = sp.transverse_points();
        let x = sp.leaf_coords(pt / ty / sp.leaf_points());
        let y = sp.transverse_coords(pt % ty);
        let o = sp.offset(pt, 0);
        let k = &kfield.data[o..o + sp.r2()];
        if k.iter().all(|v| *v == ZERO) {
            continue;
        }
        for i in 0..grid.len() {
            let w = grid.node(i).to_vec();
            let radial = |rad: f64| -> Result<C64> {
                let eta: Vec<f64> = w.iter().map(|c| c * rad).collect();
                let s = fs.principal(&PhasePoint { x: x.clone(), y: y.clone(), xi: vec![0.0; sp.p], eta });
                Ok(trace_exp_neg(&s, r, k)? * rad.powi(q as i32 - 1))
            };
            let mut err = None;
            let mut guard = |rad: f64| match radial(rad) {
                Ok(v) => v,
                Err(e) => {
                    err.get_or_insert(e);
                    ZERO
                }
            };
            let v = inner.integrate(|t, _, _| guard(t)) + integrate_to_infinity(1.0, &outer, &mut guard);
            if let Some(e) = err {
                return Err(e);
            }
            total += v * grid.weights()[i];
        }
    }
    Ok((total * cell * (2.0 * PI).powi(-(q as i32))).re)
}

fn ridge_fit(ts: &[f64], ys: &[f64], exps: &[f64], ridge: f64) -> Result<(Vec<f64>, f64, f64)> {
    let n = ts.len();
    let k = exps.len();
    if n < 2 * k {
        return Err(CalcError::Fit(format!("{n} samples cannot fit {k} ladder terms")));
    }
    // relative residuals, columns normalized to unit length
    let mut v = DMatrix::<f64>::zeros(n, k);
    for i in 0..n {
        for j in 0..k {
            v[(i, j)] = ts[i].powf(exps[j]) / ys[i].abs().max(1e-300);
        }
    }
    let scales: Vec<f64> = (0..k).map(|j| v.column(j).norm()).collect();
    for j in 0..k {
        let s = scales[j];
        v.column_mut(j).scale_mut(1.0 / s);
    }
    let rhs = DVector::from_iterator(n, ys.iter().map(|y| y.signum()));
    let sv = v.clone().svd(false, false).singular_values;
    let cond = sv.max() / sv.min().max(1e-300);
    let g = v.transpose() * &v + DMatrix::<f64>::identity(k, k) * ridge;
    let b = v.transpose() * &rhs;
    let c = g.lu().solve(&b).ok_or_else(|| CalcError::Fit("singular normal equations".into()))?;
    let coeffs: Vec<f64> = (0..k).map(|j| c[j] / scales[j]).collect();
    let mut err: f64 = 0.0;
    for i in 0..n {
        let model: f64 = (0..k).map(|j| coeffs[j] * ts[i].powf(exps[j])).sum();
        err = err.max(((model - ys[i]) / ys[i]).abs());
    }
    Ok((coeffs, err, cond))
}

/// Leading coefficient from the conormal integral and the ladder
/// `t^{(-q + l)/m}`, `l = 0..L+1`, fitted to the oracle paired trace.
pub fn heat_coefficients(
    model: &ModelFoliation,
    p: &ModelOperator,
    kernel: &TangentialKernel,
    modes: &Arc<ModeSet>,
    settings: &HeatSettings,
) -> Result<HeatExpansion> {
    if !(settings.t_min > 0.0 && settings.t_max > settings.t_min * 10.0) {
        return Err(CalcError::Fit(format!(
            "fit window [{}, {}] spans less than a decade",
            settings.t_min, settings.t_max
        )));
    }
    let q = p.symbol.q as f64;
    let m = p.symbol.order;
    let a0 = heat_leading_coefficient(p, kernel)?;
    let r = tangential_operator(model, kernel, modes)?;
    let n = settings.samples.max(2);
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let f = i as f64 / (n - 1) as f64;
        let t = settings.t_min * (settings.t_max / settings.t_min).powf(f);
        let v = eigen_oracle(&p.matrix, OracleTask::PairedTrace { kernel: &r, function: SpectralFunction::Heat(t) })?;
        samples.push(HeatSample { t, trace: v.re });
    }
    let exponents: Vec<f64> = (0..settings.extra_terms + 2).map(|l| (-q + l as f64) / m).collect();
    let ts: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.trace).collect();
    let (coefficients, fit_error, condition) = ridge_fit(&ts, &ys, &exponents, settings.ridge)?;
    if condition > 1e12 {
        return Err(CalcError::Fit(format!("fit window too narrow: condition number {condition:e}")));
    }
    Ok(HeatExpansion {
        exponents,
        coefficients,
        fit_error,
        condition,
        a0_formula: a0,
        normalization: "d nu = (2 pi)^-q d eta on the conormal fibre".into(),
        samples,
    })
}
