//! Refinement studies: commutator norms `||[D, R(k)]||` across truncations
//! and singular-value decay of `R(k) (D - i)^{-1}`.

use super::grid::GridOperator;
use super::kernels::{tangential_operator, TangentialKernel};
use super::operators::{model_operator, OperatorKind};
use super::ModelFoliation;
use crate::error::{CalcError, Result};
use crate::numerics::C64;
use crate::symbol::{holonomy_invariance_check, FullSymbol, PhasePoint, PointSymbol};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundednessVerdict {
    Bounded,
    Unbounded,
    /// `D` is not transversally elliptic or its transversal symbol is not
    /// holonomy invariant
    Inapplicable,
}

impl BoundednessVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, BoundednessVerdict::Bounded)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub truncation: usize,
    pub modes: usize,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutatorStudy {
    pub operator: OperatorKind,
    pub rows: Vec<StudyRow>,
    /// `(max - min) / max` over the three finest truncations
    pub drift: f64,
    /// finest norm over coarsest norm
    pub growth: f64,
    pub elliptic: bool,
    pub invariance_defect: f64,
    pub verdict: BoundednessVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularValueStudy {
    pub truncation: usize,
    pub count: usize,
    pub largest: f64,
    /// fitted `a` in `s_j ~ C j^a`; absent when every value vanishes
    pub exponent: Option<f64>,
    pub fit_window: (usize, usize),
    /// `-1/q`
    pub expected: f64,
    pub schatten_consistent: bool,
}

fn unit_directions(q: usize) -> Vec<Vec<f64>> {
    if q == 1 {
        vec![vec![1.0], vec![-1.0]]
    } else {
        (0..12).map(|k| {
            let a = 2.0 * PI * k as f64 / 12.0 + 0.1;
            vec![a.cos(), a.sin()]
        })
        .collect()
    }
}

fn point_symbol(sym: &FullSymbol) -> PointSymbol {
    let s = sym.clone();
    Arc::new(move |point: &[f64], eta: &[f64]| {
        let (x, y) = point.split_at(s.p.min(point.len()));
        s.principal(&PhasePoint { x: x.to_vec(), y: y.to_vec(), xi: vec![0.0; s.p], eta: eta.to_vec() })
    })
}

/// Smallest singular value of the conormal principal symbol over sampled
/// points and unit directions.
pub fn conormal_ellipticity(sym: &FullSymbol, points: &[Vec<f64>]) -> f64 {
    let sigma = point_symbol(sym);
    let r = sym.rank;
    let mut min = f64::INFINITY;
    for pt in points {
        for eta in unit_directions(sym.q) {
            let v = sigma(pt, &eta);
            let m = DMatrix::from_fn(r, r, |i, j| v[i * r + j]);
            min = min.min(m.singular_values().min());
        }
    }
    min
}

/// Scalar kernels act diagonally on the bundle.
fn lift(r: GridOperator, rank: usize) -> Result<GridOperator> {
    if r.rank == 1 && rank > 1 {
        r.tensor_identity(rank)
    } else {
        Ok(r)
    }
}

fn sample_points(model: &ModelFoliation) -> Vec<Vec<f64>> {
    model.groupoid_samples(6, 1.0, 11).into_iter().map(|g| g.range).collect()
}

/// Norms of `[D, R(k)]` for transverse truncations `|n| <= N` with leaf
/// modes `|m| <= leaf_max`.
pub fn commutator_norm_study(
    model: &ModelFoliation,
    operator: &OperatorKind,
    k: &TangentialKernel,
    truncations: &[usize],
    leaf_max: usize,
) -> Result<CommutatorStudy> {
    if truncations.is_empty() {
        return Err(CalcError::Precondition("commutator study needs at least one truncation".into()));
    }
    let mut rows = Vec::new();
    let mut symbol = None;
    for &n in truncations {
        let modes = model.modes(leaf_max, n);
        let d = model_operator(model, operator, &modes)?;
        let r = lift(tangential_operator(model, k, &modes)?, d.matrix.rank)?;
        if d.matrix.rank != r.rank {
            return Err(CalcError::DimensionMismatch(format!("operator rank {} and kernel rank {} differ", d.matrix.rank, r.rank)));
        }
        let c = d.matrix.commutator(&r)?;
        rows.push(StudyRow { truncation: n, modes: modes.len(), norm: c.norm()? });
        symbol = Some(d.symbol);
    }
    let symbol = symbol.expect("at least one truncation");
    let points = sample_points(model);
    let elliptic = conormal_ellipticity(&symbol, &points) > 1e-8;
    let elements = model.groupoid_samples(16, 2.0, 23);
    let action = model.holonomy(&elements, symbol.rank);
    let check = holonomy_invariance_check(&point_symbol(&symbol), &action, &unit_directions(model.q), 1e-10)?;
    let tail = &rows[rows.len().saturating_sub(3)..];
    let max = tail.iter().map(|r| r.norm).fold(0.0, f64::max);
    let min = tail.iter().map(|r| r.norm).fold(f64::INFINITY, f64::min);
    let drift = if max > 0.0 { (max - min) / max } else { 0.0 };
    let first = rows[0].norm;
    let last = rows[rows.len() - 1].norm;
    let growth = if first > 0.0 { last / first } else if last > 0.0 { f64::INFINITY } else { 1.0 };
    let verdict = if !elliptic || !check.passed {
        BoundednessVerdict::Inapplicable
    } else if drift < 0.05 {
        BoundednessVerdict::Bounded
    } else {
        BoundednessVerdict::Unbounded
    };
    Ok(CommutatorStudy {
        operator: operator.clone(),
        rows,
        drift,
        growth,
        elliptic,
        invariance_defect: check.max_defect,
        verdict,
    })
}

/// Least-squares slope of `log s_j` against `log j` over the window.
fn loglog_slope(values: &[f64], lo: usize, hi: usize) -> f64 {
    let pts: Vec<(f64, f64)> = (lo..hi).map(|j| (((j + 1) as f64).ln(), values[j].ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Singular values of `R(k) (D - i)^{-1}` with a log-log fit over the
/// middle of the nonzero spectrum (from 5% to 40% of it).
pub fn singular_value_study(
    model: &ModelFoliation,
    operator: &OperatorKind,
    k: &TangentialKernel,
    truncation: usize,
    leaf_max: usize,
) -> Result<SingularValueStudy> {
    let modes = model.modes(leaf_max, truncation);
    let d = model_operator(model, operator, &modes)?;
    let resolvent = d.matrix.spectral_function(|l| C64::new(1.0, 0.0) / C64::new(l, -1.0), "(D - i)^-1")?;
    let r = lift(tangential_operator(model, k, &modes)?, d.matrix.rank)?;
    let t: GridOperator = r.mul(&resolvent)?;
    let values = t.singular_values();
    let largest = values.first().copied().unwrap_or(0.0);
    let expected = -1.0 / model.q as f64;
    let nonzero: Vec<f64> = values.iter().copied().filter(|v| *v > 1e-12 * largest.max(1e-300)).collect();
    if largest == 0.0 || nonzero.is_empty() {
        return Ok(SingularValueStudy {
            truncation,
            count: values.len(),
            largest,
            exponent: None,
            fit_window: (0, 0),
            expected,
            schatten_consistent: true,
        });
    }
    let lo = nonzero.len() / 20;
    let hi = (2 * nonzero.len()) / 5;
    if hi < lo + 8 {
        return Err(CalcError::Fit(format!("fit window [{lo}, {hi}) has fewer than 8 singular values")));
    }
    let a = loglog_slope(&nonzero, lo, hi);
    Ok(SingularValueStudy {
        truncation,
        count: values.len(),
        largest,
        exponent: Some(a),
        fit_window: (lo, hi),
        expected,
        schatten_consistent: a <= expected * 0.9,
    })
}
