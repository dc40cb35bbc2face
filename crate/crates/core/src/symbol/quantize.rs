//! Quantization of symbols on the product torus mode basis.
//!
//! For `u = e^{i(xi_m x + eta_n y)}` the operator with kernel symbol `k`
//! gives `e^{i eta_n y} int k(x, x', y, eta_n) e^{i xi_m x'} dx'`, so the
//! matrix element between normalized modes is `Lx^p * khat[m', -m, n' - n]`
//! with `khat` the normalized spatial DFT evaluated at `eta_n`.

use super::full::{FullSymbol, PhasePoint};
use super::space::{Layout, SymbolSpace};
use super::ClassicalSymbol;
use crate::cutoff::Profile;
use crate::error::{CalcError, Result};
use crate::model::{GridOperator, ModeSet, ModelFoliation, ModelKind};
use crate::numerics::{freq_of_bin, C64, ZERO};
use rustfft::FftPlanner;
use std::collections::HashMap;
use std::sync::Arc;

/// In-place normalized forward DFT over every spatial axis of a field laid
/// out as `[axis_0]..[axis_k][block]`.
pub(crate) fn forward_dft_axes(data: &mut [C64], dims: &[usize], block: usize) {
    let mut planner = FftPlanner::<f64>::new();
    let total: usize = dims.iter().product();
    for (a, n) in dims.iter().enumerate() {
        if *n == 1 {
            continue;
        }
        let fft = planner.plan_fft_forward(*n);
        let stride: usize = dims[a + 1..].iter().product::<usize>() * block;
        let outer: usize = dims[..a].iter().product();
        let mut line = vec![ZERO; *n];
        for o in 0..outer {
            for inner in 0..stride {
                let base = o * n * stride + inner;
                for j in 0..*n {
                    line[j] = data[base + j * stride];
                }
                fft.process(&mut line);
                for j in 0..*n {
                    data[base + j * stride] = line[j];
                }
            }
        }
    }
    let s = 1.0 / total as f64;
    data.iter_mut().for_each(|v| *v *= s);
}

enum Angular {
    /// values at the two points of `S^0`, indexed `[node][support][e]`
    Nodes(Vec<Vec<C64>>),
    /// angular Fourier harmonics `(l, [support][e])`
    Harmonics(Vec<(i64, Vec<C64>)>),
}

struct TermSpectrum {
    profile: Profile,
    degree: C64,
    /// spatial frequencies `(x freq, x' freq, y freq)` of the support
    support: Vec<(Vec<i64>, Vec<i64>, Vec<i64>)>,
    angular: Angular,
}

fn spatial_dims(space: &SymbolSpace) -> Vec<usize> {
    let mut dims = Vec::new();
    if space.layout == Layout::Kernel {
        dims.extend(vec![space.nx; 2 * space.p]);
    }
    dims.extend(vec![space.ny; space.q]);
    dims
}

fn spectra(sym: &ClassicalSymbol) -> Vec<TermSpectrum> {
    let sp = &sym.space;
    let dims = spatial_dims(sp);
    let nodes = sp.nodes();
    let r2 = sp.r2();
    let npts = sp.points();
    let mut out = Vec::new();
    for t in &sym.terms {
        let mut data = t.field.data.clone();
        forward_dft_axes(&mut data, &dims, nodes * r2);
        // angular transform for the circle
        if sp.q == 2 {
            let mut planner = FftPlanner::<f64>::new();
            let fft = planner.plan_fft_forward(nodes);
            let mut line = vec![ZERO; nodes];
            for pt in 0..npts {
                for e in 0..r2 {
                    for n in 0..nodes {
                        line[n] = data[(pt * nodes + n) * r2 + e];
                    }
                    fft.process(&mut line);
                    for n in 0..nodes {
                        data[(pt * nodes + n) * r2 + e] = line[n] / nodes as f64;
                    }
                }
            }
        }
        let max = crate::numerics::max_abs(&data);
        if max == 0.0 {
            continue;
        }
        let thresh = 1e-14 * max;
        let support_pts: Vec<usize> = (0..npts)
            .filter(|pt| data[pt * nodes * r2..(pt + 1) * nodes * r2].iter().any(|v| v.norm() > thresh))
            .collect();
        let support = support_pts
            .iter()
            .map(|pt| {
                let mut freqs: Vec<i64> = Vec::with_capacity(dims.len());
                let mut rem = *pt;
                let mut ds = vec![0usize; dims.len()];
                for (a, n) in dims.iter().enumerate().rev() {
                    ds[a] = rem % n;
                    rem /= n;
                }
                for (a, n) in dims.iter().enumerate() {
                    freqs.push(freq_of_bin(ds[a], *n));
                }
                match sp.layout {
                    Layout::Kernel => (freqs[..sp.p].to_vec(), freqs[sp.p..2 * sp.p].to_vec(), freqs[2 * sp.p..].to_vec()),
                    Layout::Local => (Vec::new(), Vec::new(), freqs),
                }
            })
            .collect();
        let gather = |n: usize| -> Vec<C64> {
            let mut v = Vec::with_capacity(support_pts.len() * r2);
            for pt in &support_pts {
                let o = (pt * nodes + n) * r2;
                v.extend_from_slice(&data[o..o + r2]);
            }
            v
        };
        let angular = if sp.q == 1 {
            Angular::Nodes((0..nodes).map(gather).collect())
        } else {
            let mut h = Vec::new();
            for n in 0..nodes {
                let v = gather(n);
                if v.iter().any(|c| c.norm() > thresh) {
                    h.push((freq_of_bin(n, nodes), v));
                }
            }
            Angular::Harmonics(h)
        };
        out.push(TermSpectrum { profile: t.profile.clone(), degree: t.field.degree, support, angular });
    }
    out
}

/// Radial-angular factor of a term spectrum at `eta`, returned as the
/// combined `[support][e]` coefficients (or `None` if it vanishes).
fn evaluate_at(sp: &SymbolSpace, ts: &TermSpectrum, eta: &[f64]) -> Result<Option<Vec<C64>>> {
    let norm = eta.iter().map(|e| e * e).sum::<f64>().sqrt();
    let radial = if norm == 0.0 {
        match (&ts.profile, ts.degree.norm() < 1e-14) {
            (Profile::One, true) => C64::new(1.0, 0.0),
            (Profile::One, false) if ts.degree.re > 0.0 => return Ok(None),
            (Profile::One, false) => {
                return Err(CalcError::Precondition("constant-profile term of nonpositive degree is singular at eta = 0".into()))
            }
            _ => return Ok(None),
        }
    } else {
        let p = sp.cutoff.profile_value(&ts.profile, norm);
        if p == 0.0 {
            return Ok(None);
        }
        C64::new(norm, 0.0).powc(ts.degree) * p
    };
    let combined = match &ts.angular {
        Angular::Nodes(v) => {
            let idx = if norm == 0.0 { None } else if eta[0] >= 0.0 { Some(0) } else { Some(1) };
            match idx {
                Some(i) => v[i].iter().map(|c| c * radial).collect(),
                None => v[0].iter().zip(&v[1]).map(|(a, b)| (a + b) * 0.5 * radial).collect(),
            }
        }
        Angular::Harmonics(h) => {
            let phi = if norm == 0.0 { 0.0 } else { eta[1].atan2(eta[0]) };
            let mut acc = vec![ZERO; h.first().map(|x| x.1.len()).unwrap_or(0)];
            for (l, v) in h {
                if norm == 0.0 && *l != 0 {
                    continue;
                }
                let w = C64::from_polar(1.0, *l as f64 * phi) * radial;
                for (a, c) in acc.iter_mut().zip(v) {
                    *a += c * w;
                }
            }
            acc
        }
    };
    Ok(Some(combined))
}

fn check_model(sp: &SymbolSpace, model: &ModelFoliation) -> Result<(f64, f64)> {
    match model.kind {
        ModelKind::Product { lx, ly } => {
            if model.p != sp.p || model.q != sp.q {
                return Err(CalcError::DimensionMismatch("symbol and model dimensions differ".into()));
            }
            if (lx - sp.lx).abs() > 1e-12 * lx || (ly - sp.ly).abs() > 1e-12 * ly {
                return Err(CalcError::DimensionMismatch(format!(
                    "symbol grid circumferences ({}, {}) differ from the model ({lx}, {ly})",
                    sp.lx, sp.ly
                )));
            }
            Ok((lx, ly))
        }
        ModelKind::Kronecker { .. } => Err(CalcError::InvalidModel(
            "classical symbols with spatial dependence quantize on product models only".into(),
        )),
    }
}

/// Matrix of the quantized symbol on the given product-model modes.
pub fn quantize(sym: &ClassicalSymbol, model: &ModelFoliation, modes: &Arc<ModeSet>) -> Result<GridOperator> {
    let sp = &sym.space;
    let r = sp.rank;
    // spatially constant local symbols are mode-diagonal on every model
    let local_constant = sp.layout == Layout::Local && sym.terms.iter().all(|t| t.field.is_y_independent(sp, 0.0));
    if local_constant && !model.is_product() {
        let spec = spectra(sym);
        let mut entries = Vec::new();
        for (ci, mode) in modes.modes.iter().enumerate() {
            let mut acc = vec![ZERO; r * r];
            for ts in &spec {
                if let Some(v) = evaluate_at(sp, ts, &mode.eta)? {
                    for (a, c) in acc.iter_mut().zip(&v) {
                        *a += c;
                    }
                }
            }
            for e in 0..r * r {
                if acc[e] != ZERO {
                    entries.push((ci * r + e / r, ci * r + e % r, acc[e]));
                }
            }
        }
        return Ok(GridOperator::from_triplets(Arc::clone(modes), r, &entries, "quantized symbol"));
    }
    let (lx, _) = check_model(sp, model)?;
    let half_x = ((sp.nx - 1) / 2) as i64;
    let spec = spectra(sym);
    let leaf_factor = C64::new(lx.powi(sp.p as i32), 0.0);
    let p = sp.p;
    // group support entries by the source leaf frequency
    let mut entries = Vec::new();
    let mut cache: HashMap<Vec<i64>, Vec<Option<Vec<C64>>>> = HashMap::new();
    for (ci, mode) in modes.modes.iter().enumerate() {
        let m = &mode.label[..p];
        let n = &mode.label[p..];
        if sp.layout == Layout::Kernel && m.iter().any(|v| v.abs() > half_x) {
            continue;
        }
        let combined = match cache.get(n) {
            Some(c) => c.clone(),
            None => {
                let c: Result<Vec<_>> = spec.iter().map(|ts| evaluate_at(sp, ts, &mode.eta)).collect();
                let c = c?;
                cache.insert(n.to_vec(), c.clone());
                c
            }
        };
        for (ts, vals) in spec.iter().zip(&combined) {
            let Some(vals) = vals else { continue };
            for (si, (fx, fx2, fy)) in ts.support.iter().enumerate() {
                let mut row_label: Vec<i64>;
                let factor;
                match sp.layout {
                    Layout::Kernel => {
                        if fx2.iter().zip(m).any(|(a, b)| *a != -*b) {
                            continue;
                        }
                        row_label = fx.clone();
                        factor = leaf_factor;
                    }
                    Layout::Local => {
                        row_label = m.to_vec();
                        factor = C64::new(1.0, 0.0);
                    }
                }
                row_label.extend(n.iter().zip(fy).map(|(a, b)| a + b));
                let Some(ri) = modes.index(&row_label) else { continue };
                for e in 0..r * r {
                    let v = vals[si * r * r + e] * factor;
                    if v != ZERO {
                        entries.push((ri * r + e / r, ci * r + e % r, v));
                    }
                }
            }
        }
    }
    Ok(GridOperator::from_triplets(Arc::clone(modes), r, &entries, "quantized symbol"))
}

/// Quantizes a full symbol `p(x, y, xi, eta)` sampled on an `nx^p x ny^q`
/// spatial grid of the model (mode-diagonal when it has no spatial
/// dependence).
pub fn quantize_full(full: &FullSymbol, model: &ModelFoliation, modes: &Arc<ModeSet>, nx: usize, ny: usize) -> Result<GridOperator> {
    let r = full.rank;
    let (lx, ly) = match model.kind {
        ModelKind::Product { lx, ly } => (lx, ly),
        ModelKind::Kronecker { .. } => {
            // spatially constant symbols only: evaluate at the origin
            let mut entries = Vec::new();
            for (ci, mode) in modes.modes.iter().enumerate() {
                let pt = PhasePoint { x: vec![0.0; full.p], y: vec![0.0; full.q], xi: mode.xi.clone(), eta: mode.eta.clone() };
                let v = full.eval(&pt);
                for e in 0..r * r {
                    if v[e] != ZERO {
                        entries.push((ci * r + e / r, ci * r + e % r, v[e]));
                    }
                }
            }
            return Ok(GridOperator::from_triplets(Arc::clone(modes), r, &entries, "quantized full symbol"));
        }
    };
    if nx % 2 == 0 || ny % 2 == 0 {
        return Err(CalcError::Precondition("sampling grids must be odd".into()));
    }
    let (p, q) = (full.p, full.q);
    let mut dims = vec![nx; p];
    dims.extend(vec![ny; q]);
    let npts: usize = dims.iter().product();
    let mut entries = Vec::new();
    for (ci, mode) in modes.modes.iter().enumerate() {
        let mut data = vec![ZERO; npts * r * r];
        for pt in 0..npts {
            let ds = digits_mixed(pt, &dims);
            let x: Vec<f64> = ds[..p].iter().map(|d| *d as f64 * lx / nx as f64).collect();
            let y: Vec<f64> = ds[p..].iter().map(|d| *d as f64 * ly / ny as f64).collect();
            let v = full.eval(&PhasePoint { x, y, xi: mode.xi.clone(), eta: mode.eta.clone() });
            data[pt * r * r..(pt + 1) * r * r].copy_from_slice(&v);
        }
        forward_dft_axes(&mut data, &dims, r * r);
        for pt in 0..npts {
            let ds = digits_mixed(pt, &dims);
            let shift: Vec<i64> = ds.iter().zip(&dims).map(|(d, n)| freq_of_bin(*d, *n)).collect();
            let row_label: Vec<i64> = mode.label.iter().zip(&shift).map(|(a, b)| a + b).collect();
            let Some(ri) = modes.index(&row_label) else { continue };
            for e in 0..r * r {
                let v = data[pt * r * r + e];
                if v.norm() > 1e-14 {
                    entries.push((ri * r + e / r, ci * r + e % r, v));
                }
            }
        }
    }
    Ok(GridOperator::from_triplets(Arc::clone(modes), r, &entries, "quantized full symbol"))
}

fn digits_mixed(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for a in (0..dims.len()).rev() {
        out[a] = index % dims[a];
        index /= dims[a];
    }
    out
}
