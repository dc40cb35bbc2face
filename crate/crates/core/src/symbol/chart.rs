//! Foliated chart changes on the torus models: `x1 = s_x x + c_x + h(y)`,
//! `y1 = s_y y + c_y`, with `eta1 = eta / s_y`.
//!
//! Leading components transform by the pullback rule. The leafwise drift
//! `h(y)` contributes one subleading correction `i dh/dy_j d_{eta_j} d_{x'} k`.
//! Compactly supported profile terms are dropped (they are smoothing).

use super::algebra::eta_derivative_pieces;
use super::space::{digits, Field, Layout, SymbolSpace};
use super::{ClassicalSymbol, Term};
use crate::cutoff::Profile;
use crate::error::{CalcError, Result};
use crate::numerics::{apply_fourier_multiplier, C64, I, ZERO};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartChange {
    pub leaf_scale: f64,
    pub leaf_shift: Vec<f64>,
    /// samples of the leafwise drift `h(y)` on the transverse grid (p = 1)
    #[serde(default)]
    pub leaf_drift: Option<Vec<f64>>,
    pub transverse_scale: f64,
    pub transverse_shift: Vec<f64>,
}

impl ChartChange {
    pub fn identity(p: usize, q: usize) -> Self {
        ChartChange { leaf_scale: 1.0, leaf_shift: vec![0.0; p], leaf_drift: None, transverse_scale: 1.0, transverse_shift: vec![0.0; q] }
    }

    pub fn transverse_scaling(p: usize, q: usize, s: f64) -> Self {
        ChartChange { transverse_scale: s, ..ChartChange::identity(p, q) }
    }

    /// Action of `(d psi^*)^{-1}` on a covector.
    pub fn covector(&self, eta: &[f64]) -> Vec<f64> {
        eta.iter().map(|e| e / self.transverse_scale).collect()
    }

    /// `other` after `self` (drift-free changes only).
    pub fn then(&self, other: &ChartChange) -> Result<ChartChange> {
        if self.leaf_drift.is_some() || other.leaf_drift.is_some() {
            return Err(CalcError::InvalidChart("composition of drifting charts is not supported".into()));
        }
        Ok(ChartChange {
            leaf_scale: self.leaf_scale * other.leaf_scale,
            leaf_shift: self.leaf_shift.iter().zip(&other.leaf_shift).map(|(a, b)| other.leaf_scale * a + b).collect(),
            leaf_drift: None,
            transverse_scale: self.transverse_scale * other.transverse_scale,
            transverse_shift: self
                .transverse_shift
                .iter()
                .zip(&other.transverse_shift)
                .map(|(a, b)| other.transverse_scale * a + b)
                .collect(),
        })
    }

    fn validate(&self, space: &SymbolSpace) -> Result<()> {
        let finite_pos = |s: f64| s.is_finite() && s > 0.0;
        if !finite_pos(self.leaf_scale) || !finite_pos(self.transverse_scale) {
            return Err(CalcError::InvalidChart(format!(
                "scales must be positive and finite (orientation-reversing or singular maps are not invertible on the chart): {} {}",
                self.leaf_scale, self.transverse_scale
            )));
        }
        if self.leaf_shift.len() != space.p || self.transverse_shift.len() != space.q {
            return Err(CalcError::InvalidChart("shift dimensions do not match the chart".into()));
        }
        if let Some(h) = &self.leaf_drift {
            if space.p != 1 || space.layout != Layout::Kernel {
                return Err(CalcError::InvalidChart("leafwise drift needs p = 1 and a kernel symbol".into()));
            }
            if h.len() != space.transverse_points() || h.iter().any(|v| !v.is_finite()) {
                return Err(CalcError::InvalidChart("drift samples must cover the transverse grid".into()));
            }
        }
        Ok(())
    }
}

/// Translates the field by `-shift(y)` in every leaf slot (`x` and `x'`)
/// and by `-c` in `y`, spectrally.
fn translate(space: &SymbolSpace, f: &Field, leaf: &dyn Fn(usize) -> Vec<f64>, transverse: &[f64]) -> Field {
    let mut out = f.clone();
    let block = space.nodes() * space.r2();
    let ty = space.transverse_points();
    if space.layout == Layout::Kernel {
        let nl = space.leaf_points();
        let kx = 2.0 * PI / space.lx;
        let mut line = vec![ZERO; nl * nl];
        for iy in 0..ty {
            let shift = leaf(iy);
            if shift.iter().all(|s| *s == 0.0) {
                continue;
            }
            for e in 0..block {
                for a in 0..nl {
                    for b in 0..nl {
                        line[a * nl + b] = out.data[space.kernel_point(a, b, iy) * block + e];
                    }
                }
                // shift both leaf slots by applying the multiplier axis by axis
                for slot in 0..2 {
                    for axis in 0..space.p {
                        let stride_in_slot = space.nx.pow((space.p - 1 - axis) as u32);
                        let (stride, bases): (usize, Vec<usize>) = if slot == 0 {
                            let stride = stride_in_slot * nl;
                            let bases = (0..nl * nl).filter(|i| digits(i / nl, space.nx, space.p)[axis] == 0).collect();
                            (stride, bases)
                        } else {
                            let bases = (0..nl * nl).filter(|i| digits(i % nl, space.nx, space.p)[axis] == 0).collect();
                            (stride_in_slot, bases)
                        };
                        let h = shift[axis];
                        apply_fourier_multiplier(&mut line, space.nx, stride, bases, |k| C64::from_polar(1.0, -kx * k as f64 * h));
                    }
                }
                for a in 0..nl {
                    for b in 0..nl {
                        out.data[space.kernel_point(a, b, iy) * block + e] = line[a * nl + b];
                    }
                }
            }
        }
    }
    let ky = 2.0 * PI / space.ly;
    for (axis, c) in transverse.iter().enumerate() {
        if *c == 0.0 {
            continue;
        }
        let (stride, bases) = space.transverse_lines(axis);
        apply_fourier_multiplier(&mut out.data, space.ny, stride, bases, |k| C64::from_polar(1.0, -ky * k as f64 * c));
    }
    out
}

/// `d/dx'` (second leaf slot, p = 1) of a kernel field.
fn leaf_source_derivative(space: &SymbolSpace, f: &Field) -> Field {
    let mut out = f.clone();
    let nl = space.leaf_points();
    let ty = space.transverse_points();
    let block = space.nodes() * space.r2();
    let stride = ty * block;
    let bases: Vec<usize> = (0..nl).flat_map(|ix| (0..stride).map(move |r| ix * nl * stride + r)).collect();
    let kx = 2.0 * PI / space.lx;
    apply_fourier_multiplier(&mut out.data, space.nx, stride, bases, |k| I * (kx * k as f64));
    out
}

/// Transverse derivative `dh/dy_j` of grid samples.
fn drift_gradient(space: &SymbolSpace, h: &[f64], axis: usize) -> Vec<f64> {
    let mut data: Vec<C64> = h.iter().map(|v| C64::new(*v, 0.0)).collect();
    let stride = space.ny.pow((space.q - 1 - axis) as u32);
    let bases: Vec<usize> = (0..h.len()).filter(|i| digits(*i, space.ny, space.q)[axis] == 0).collect();
    let ky = 2.0 * PI / space.ly;
    apply_fourier_multiplier(&mut data, space.ny, stride, bases, |k| I * (ky * k as f64));
    data.iter().map(|v| v.re).collect()
}

/// Transforms a symbol under a foliated chart change.
pub fn change_chart(a: &ClassicalSymbol, c: &ChartChange) -> Result<ClassicalSymbol> {
    let sp = &a.space;
    c.validate(sp)?;
    let mut new_space = (**sp).clone();
    new_space.lx = sp.lx * c.leaf_scale;
    new_space.ly = sp.ly * c.transverse_scale;
    let new_space = Arc::new(new_space);
    let jacobian = match sp.layout {
        Layout::Kernel => c.leaf_scale.powi(-(sp.p as i32)),
        Layout::Local => 1.0,
    };
    let zero_drift = vec![0.0; sp.p];
    let drift = |iy: usize| -> Vec<f64> {
        let mut s: Vec<f64> = c.leaf_shift.iter().map(|v| v / c.leaf_scale).collect();
        if let Some(h) = &c.leaf_drift {
            s[0] += h[iy] / c.leaf_scale;
        }
        if s.is_empty() {
            zero_drift.clone()
        } else {
            s
        }
    };
    let shift_y: Vec<f64> = c.transverse_shift.iter().map(|v| v / c.transverse_scale).collect();
    let mut terms = Vec::new();
    for t in a.terms.iter().filter(|t| !matches!(t.profile, Profile::Compact(_))) {
        let factor = C64::new(c.transverse_scale, 0.0).powc(t.field.degree) * jacobian;
        let moved = translate(sp, &t.field, &drift, &shift_y).scaled(factor);
        terms.push(Term { level: t.level, profile: t.profile.clone(), field: moved });
        if let Some(h) = &c.leaf_drift {
            if t.level + 1 > a.depth {
                continue;
            }
            let dx = leaf_source_derivative(sp, &t.field);
            for axis in 0..sp.q {
                let grad = drift_gradient(sp, h, axis);
                if grad.iter().all(|g| g.abs() < 1e-15) {
                    continue;
                }
                for (profile, piece) in eta_derivative_pieces(sp, &t.profile, &dx, axis) {
                    if matches!(profile, Profile::Compact(_)) {
                        continue;
                    }
                    let mut corr = piece;
                    let block = sp.nodes() * sp.r2();
                    let ty = sp.transverse_points();
                    for (pt, chunk) in corr.data.chunks_mut(block).enumerate() {
                        let g = I * grad[pt % ty];
                        chunk.iter_mut().for_each(|v| *v *= g);
                    }
                    let factor = C64::new(c.transverse_scale, 0.0).powc(corr.degree) * jacobian;
                    let corr = translate(sp, &corr, &drift, &shift_y).scaled(factor);
                    terms.push(Term { level: t.level + 1, profile, field: corr });
                }
            }
        }
    }
    let mut out = ClassicalSymbol { space: new_space, order: a.order, depth: a.depth, terms };
    out.merge();
    Ok(out)
}
