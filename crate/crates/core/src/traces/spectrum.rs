//! Dimension spectrum from the zeta functions `tr(b |D|^{-z})`.

use super::zeta::{zeta_pole_table, MeromorphicReport, ZetaSettings};
use crate::error::{CalcError, Result};
use crate::numerics::C64;
use crate::resolvent::power_components;
use crate::symbol::{commutator, ClassicalSymbol, Profile};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionSpectrum {
    /// one report per element of `B`, in the variable `z` of `|D|^{-z}`
    pub reports: Vec<MeromorphicReport>,
    /// integer pole locations carrying a detected residue
    pub spectrum: Vec<i64>,
    pub all_simple: bool,
    /// whether every detected pole lies in `{0, 1, ..., q}`
    pub contained: bool,
}

/// `b`, `delta(b)`, ..., `delta^depth(b)` with `delta = [|D|, .]` and
/// `|D| = A^{1/m}`.
pub fn derived_algebra(b: &ClassicalSymbol, a: &ClassicalSymbol, iterates: usize, settings: &ZetaSettings) -> Result<Vec<ClassicalSymbol>> {
    let m = a.order.re;
    let depth = settings.depth.unwrap_or(b.depth.max(2));
    let abs_d = power_components(a, C64::new(1.0 / m, 0.0), depth, &settings.contour)?;
    let mut out = vec![b.clone().with_depth(depth)];
    for _ in 0..iterates {
        let last = out.last().expect("nonempty");
        let mut next = commutator(&abs_d, last)?;
        // principal parts commute: drop the vanishing top level
        let scale = next.max_abs().max(1e-300);
        if next.depth > 0 && next.component(0).max_abs() <= 1e-10 * scale {
            next.terms.retain(|t| t.level > 0 || matches!(t.profile, Profile::Compact(_)));
            for t in &mut next.terms {
                t.level = t.level.saturating_sub(1);
            }
            next.order -= 1.0;
            next.depth -= 1;
        }
        out.push(next);
    }
    Ok(out)
}

/// Poles of `tr(b A^{-z/m})` for each `b` on the window `[lo, hi]` of `z`.
pub fn dimension_spectrum(a: &ClassicalSymbol, bs: &[ClassicalSymbol], window: (f64, f64), settings: &ZetaSettings) -> Result<DimensionSpectrum> {
    let m = a.order.re;
    if !(m > 0.0) || a.order.im.abs() > 1e-12 {
        return Err(CalcError::Precondition(format!("|D| power needs a positive real order, got {}", a.order)));
    }
    let mut reports = Vec::with_capacity(bs.len());
    let mut spectrum = Vec::new();
    let mut all_simple = true;
    let mut contained = true;
    for b in bs {
        let q = b.space.q as i64;
        let mut rep = zeta_pole_table(b, a, (window.0 / m, window.1 / m), settings)?;
        // z = m w rescales locations and residues
        for p in &mut rep.poles {
            p.z_re *= m;
            p.z_im *= m;
            p.residue_re *= m;
            p.residue_im *= m;
            p.uncertainty *= m;
            if p.detected {
                let v = p.z_re.round() as i64;
                if !spectrum.contains(&v) {
                    spectrum.push(v);
                }
                all_simple &= p.simple;
                contained &= (0..=q).contains(&v) && (p.z_re - v as f64).abs() < 1e-2 && p.z_im.abs() < 1e-2;
            }
        }
        rep.expected_constant *= m;
        rep.constant = rep.constant.map(|c| c * m);
        reports.push(rep);
    }
    spectrum.sort_unstable();
    Ok(DimensionSpectrum { reports, spectrum, all_simple, contained })
}
