//! Anisotropic Sobolev norms `||u||_{s,k}` on the mode basis and weighted
//! operator norms.

use super::grid::{largest_singular_value, GridOperator, Mode, ModeSet};
use crate::error::{CalcError, Result};
use crate::numerics::C64;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevWeight {
    pub s: f64,
    pub k: f64,
}

impl SobolevWeight {
    pub fn new(s: f64, k: f64) -> Self {
        SobolevWeight { s, k }
    }

    /// `(1 + |xi|^2 + |eta|^2)^{s/2} (1 + |xi|^2)^{k/2}`
    pub fn weight(&self, mode: &Mode) -> f64 {
        let x2: f64 = mode.xi.iter().map(|v| v * v).sum();
        let e2: f64 = mode.eta.iter().map(|v| v * v).sum();
        (1.0 + x2 + e2).powf(self.s / 2.0) * (1.0 + x2).powf(self.k / 2.0)
    }
}

/// `||u||_{s,k}` for a coefficient vector indexed `mode * rank + e`.
pub fn sobolev_norm(u: &[C64], modes: &ModeSet, rank: usize, s: f64, k: f64) -> Result<f64> {
    if u.len() != modes.len() * rank {
        return Err(CalcError::DimensionMismatch(format!("vector has {} entries, basis has {}", u.len(), modes.len() * rank)));
    }
    let w = SobolevWeight::new(s, k);
    let sum: f64 = u
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let wi = w.weight(&modes.modes[i / rank]);
            wi * wi * c.norm_sqr()
        })
        .sum();
    Ok(sum.sqrt())
}

fn weighted_block(a: &GridOperator, b: &super::grid::Block, from: SobolevWeight, to: SobolevWeight) -> DMatrix<C64> {
    let n = b.indices.len();
    DMatrix::from_fn(n, n, |i, j| {
        let wi = to.weight(&a.modes.modes[b.indices[i] / a.rank]);
        let wj = from.weight(&a.modes.modes[b.indices[j] / a.rank]);
        b.matrix[(i, j)] * (wi / wj)
    })
}

/// Norm of `A : H^{from} -> H^{to}` by power iteration (tolerance `1e-8`,
/// at most `10^4` iterations per block).
pub fn mapping_norm(a: &GridOperator, from: SobolevWeight, to: SobolevWeight) -> Result<f64> {
    let mut best: f64 = 0.0;
    for b in &a.blocks {
        let m = weighted_block(a, b, from, to);
        let (v, _) = largest_singular_value(&m, 1e-8, 400)?;
        best = best.max(v);
    }
    Ok(best)
}

/// `||A||_{s,t,t-l}`: the norm of `A : H^{s,t} -> H^{s,t-l}`.
pub fn operator_seminorm(a: &GridOperator, s: f64, t: f64, l: f64) -> Result<f64> {
    mapping_norm(a, SobolevWeight::new(s, t), SobolevWeight::new(s, t - l))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceClassReport {
    pub trace_norm: f64,
    /// `||T : L^2 -> H^{s,k}||`
    pub mapping_norm: f64,
    /// `trace_norm / mapping_norm`
    pub constant: f64,
    /// mass of `W T` on the outermost modes relative to its largest column
    pub boundary_ratio: f64,
    pub trace_class: bool,
}

/// Trace norm of `T` and its `L^2 -> H^{s,k}` norm (`s > q`, `k > p`).
pub fn trace_class_check(t: &GridOperator, s: f64, k: f64) -> Result<TraceClassReport> {
    let Some(first) = t.modes.modes.first() else {
        return Err(CalcError::Precondition("empty mode basis".into()));
    };
    let (p, q) = (first.xi.len(), first.eta.len());
    if !(s > q as f64 && k > p as f64) {
        return Err(CalcError::Precondition(format!("trace-class estimate needs s > q = {q} and k > p = {p}, got s = {s}, k = {k}")));
    }
    let trace_norm: f64 = t.singular_values().iter().sum();
    let to = SobolevWeight::new(s, k);
    let mapping = mapping_norm(t, SobolevWeight::new(0.0, 0.0), to)?;
    // column norms of W T on boundary modes versus all modes
    let bound = t.modes.modes.iter().flat_map(|m| m.label.iter().map(|v| v.abs())).max().unwrap_or(0);
    let mut col_max: f64 = 0.0;
    let mut boundary_max: f64 = 0.0;
    for b in &t.blocks {
        let m = weighted_block(t, b, SobolevWeight::new(0.0, 0.0), to);
        for (j, idx) in b.indices.iter().enumerate() {
            let c = DVector::from_iterator(m.nrows(), m.column(j).iter().copied()).norm();
            col_max = col_max.max(c);
            if t.modes.modes[idx / t.rank].label.iter().any(|v| v.abs() == bound) {
                boundary_max = boundary_max.max(c);
            }
        }
    }
    let boundary_ratio = if col_max > 0.0 { boundary_max / col_max } else { 0.0 };
    Ok(TraceClassReport {
        trace_norm,
        mapping_norm: mapping,
        constant: if mapping > 0.0 { trace_norm / mapping } else { 0.0 },
        boundary_ratio,
        trace_class: boundary_ratio < 1e-3,
    })
}
