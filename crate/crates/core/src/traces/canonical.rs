//! Canonical trace and residue trace of kernel-layout symbols.

use crate::cutoff::Profile;
use crate::error::{CalcError, Result};
use crate::homogeneous::critical_index;
use crate::numerics::{mat_trace, C64, ZERO};
use crate::symbol::{ClassicalSymbol, Layout, Term};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

fn require_kernel(sym: &ClassicalSymbol) -> Result<()> {
    if sym.layout() != Layout::Kernel {
        return Err(CalcError::Precondition(
            "traces need a leafwise kernel; compose local symbols with a tangential kernel first".into(),
        ));
    }
    Ok(())
}

/// `S(Tr f(x, x, y, .))` at every diagonal point, in `diagonal_points` order.
fn diagonal_densities(sym: &ClassicalSymbol, term: &Term) -> Vec<C64> {
    let sp = &sym.space;
    let w = sp.sphere.weights();
    sym.diagonal_points()
        .into_iter()
        .map(|pt| {
            let mut acc = ZERO;
            for (n, wn) in w.iter().enumerate() {
                let o = sp.offset(pt, n);
                acc += mat_trace(&term.field.data[o..o + sp.r2()], sp.rank) * *wn;
            }
            acc
        })
        .collect()
}

/// `int int S(Tr f(x, x, y, .)) dx dy` for one term.
fn diagonal_integral(sym: &ClassicalSymbol, term: &Term) -> C64 {
    let sp = &sym.space;
    let cell = sp.leaf_weight() * sp.transverse_weight();
    diagonal_densities(sym, term).into_iter().sum::<C64>() * cell
}

fn is_critical(term: &Term, q: usize) -> bool {
    !matches!(term.profile, Profile::Compact(_)) && critical_index(term.field.degree, q) == Some(0)
}

/// `TR(A) = int int (2 pi)^{-q} -int Tr k(x, x, y, eta) d eta dx dy`.
///
/// Each term integrates to its diagonal sphere integral times the radial
/// moment of its profile; degree `-q` terms must integrate to zero.
pub fn canonical_trace(sym: &ClassicalSymbol) -> Result<C64> {
    require_kernel(sym)?;
    let q = sym.space.q;
    let mut total = ZERO;
    let mut obstruction = ZERO;
    let mut scale: f64 = 0.0;
    let mut critical_degree = None;
    for t in &sym.terms {
        let s = diagonal_integral(sym, t);
        scale = scale.max(s.norm());
        if is_critical(t, q) {
            obstruction += s;
            critical_degree = Some(t.field.degree);
            continue;
        }
        let moment = sym.space.cutoff.radial_moment(&t.profile, t.field.degree + q as f64)?;
        total += s * moment;
    }
    if let Some(d) = critical_degree {
        if obstruction.norm() > 1e-10 * scale.max(1.0) {
            return Err(CalcError::LogObstruction { degree: format!("{d}"), value: obstruction.norm() });
        }
    }
    Ok(total * (2.0 * PI).powi(-(q as i32)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidueDensity {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidueTrace {
    pub tau_re: f64,
    pub tau_im: f64,
    /// samples of the residue form on the diagonal grid
    pub form: Vec<ResidueDensity>,
}

impl ResidueTrace {
    pub fn tau(&self) -> C64 {
        C64::new(self.tau_re, self.tau_im)
    }
}

/// `tau(A) = int int int_{|eta| = 1} Tr k_{-q}(x, x, y, eta)`.
pub fn residue_trace(sym: &ClassicalSymbol) -> Result<ResidueTrace> {
    require_kernel(sym)?;
    let sp = &sym.space;
    let q = sp.q;
    let pts = sym.diagonal_points();
    let mut density = vec![ZERO; pts.len()];
    for t in sym.terms.iter().filter(|t| is_critical(t, q)) {
        for (d, v) in density.iter_mut().zip(diagonal_densities(sym, t)) {
            *d += v;
        }
    }
    let cell = sp.leaf_weight() * sp.transverse_weight();
    let tau: C64 = density.iter().sum::<C64>() * cell;
    let ty = sp.transverse_points();
    let form = density
        .iter()
        .enumerate()
        .map(|(i, v)| ResidueDensity {
            x: sp.leaf_coords(i / ty),
            y: sp.transverse_coords(i % ty),
            re: v.re,
            im: v.im,
        })
        .collect();
    Ok(ResidueTrace { tau_re: tau.re, tau_im: tau.im, form })
}
