//! Classical transversal symbols `k(x, x', y, eta)` and their algebra.
//!
//! A symbol is a finite list of terms. Each term sits at a ladder level `j`
//! (nominal degree `order - j`) and is a radial profile times a field that is
//! homogeneous in `eta`. Classical terms carry the excision cutoff; the
//! symbols of differential operators carry the constant profile; compactly
//! supported profiles appear when `eta`-derivatives hit the cutoff.

mod algebra;
mod chart;
mod full;
mod quantize;
mod serial;
mod space;

pub use algebra::{adjoint, commutator, compose};
pub use chart::{change_chart, ChartChange};
pub use full::{
    holonomy_invariance_check, transversal_symbol, FullSymbol, HolonomyAction, HolonomyCheck, HolonomySample,
    PhasePoint, PointSymbol, TransversalSymbol,
};
pub use quantize::{quantize, quantize_full};
pub use serial::{symbol_from_json, symbol_to_json};
pub use space::{field_product, Field, Layout, SymbolSpace};

pub use crate::cutoff::{CutoffSpec, Profile};

use crate::error::{CalcError, Result};
use crate::numerics::{identity, C64, ZERO};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub level: usize,
    pub profile: Profile,
    pub field: Field,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalSymbol {
    pub space: Arc<SymbolSpace>,
    pub order: C64,
    /// truncation depth `N`: levels `0..=N` are retained
    pub depth: usize,
    pub terms: Vec<Term>,
}

fn degree_close(a: C64, b: C64) -> bool {
    (a - b).norm() < 1e-12
}

/// Validates a classical symbol `sum_j theta k_{z-j}`; component `j` must
/// have degree `order - j`.
pub fn make_classical_symbol(order: C64, components: Vec<Field>, space: Arc<SymbolSpace>) -> Result<ClassicalSymbol> {
    if components.is_empty() {
        return Err(CalcError::Precondition("a classical symbol needs at least one component".into()));
    }
    let depth = components.len() - 1;
    let mut terms = Vec::with_capacity(components.len());
    for (j, field) in components.into_iter().enumerate() {
        let expected = order - j as f64;
        if !degree_close(field.degree, expected) {
            return Err(CalcError::DegreeLadder { index: j, found: format!("{}", field.degree), expected: format!("{}", expected) });
        }
        if field.data.len() != space.field_len() {
            return Err(CalcError::DimensionMismatch(format!(
                "component {j} has {} samples, grid needs {}",
                field.data.len(),
                space.field_len()
            )));
        }
        terms.push(Term { level: j, profile: Profile::Theta, field });
    }
    Ok(ClassicalSymbol { space, order, depth, terms })
}

impl ClassicalSymbol {
    /// Symbol built from explicit terms (levels and profiles as given).
    pub fn from_terms(space: Arc<SymbolSpace>, order: C64, depth: usize, terms: Vec<Term>) -> Result<Self> {
        for t in &terms {
            if t.field.data.len() != space.field_len() {
                return Err(CalcError::DimensionMismatch("term sample count does not match the grid".into()));
            }
            if !matches!(t.profile, Profile::Compact(_)) && !degree_close(t.field.degree, order - t.level as f64) {
                return Err(CalcError::DegreeLadder {
                    index: t.level,
                    found: format!("{}", t.field.degree),
                    expected: format!("{}", order - t.level as f64),
                });
            }
        }
        let mut s = ClassicalSymbol { space, order, depth, terms };
        s.truncate(depth);
        s.merge();
        Ok(s)
    }

    /// Polynomial symbol of a differential operator (constant profile).
    pub fn polynomial(space: Arc<SymbolSpace>, order: usize, components: Vec<Field>) -> Result<Self> {
        let depth = components.len().saturating_sub(1);
        let terms = components
            .into_iter()
            .enumerate()
            .map(|(j, field)| Term { level: j, profile: Profile::One, field })
            .collect();
        ClassicalSymbol::from_terms(space, C64::new(order as f64, 0.0), depth, terms)
    }

    /// The identity operator (local layout, constant profile).
    pub fn identity(space: &SymbolSpace, depth: usize) -> Self {
        let space = Arc::new(space.with_layout(Layout::Local));
        let id = identity(space.rank);
        let field = Field::from_fn(&space, ZERO, |_, _| id.clone());
        ClassicalSymbol { space, order: ZERO, depth, terms: vec![Term { level: 0, profile: Profile::One, field }] }
    }

    /// Same symbol retained to a different truncation depth.
    pub fn with_depth(mut self, depth: usize) -> Self {
        self.depth = depth;
        self.truncate(depth);
        self
    }

    pub fn zero(space: Arc<SymbolSpace>, order: C64, depth: usize) -> Self {
        ClassicalSymbol { space, order, depth, terms: Vec::new() }
    }

    pub fn layout(&self) -> Layout {
        self.space.layout
    }

    pub fn rank(&self) -> usize {
        self.space.rank
    }

    pub fn truncate(&mut self, depth: usize) {
        self.terms.retain(|t| t.level <= depth);
        self.depth = self.depth.min(depth);
    }

    /// Adds together terms with equal level, profile and degree.
    pub fn merge(&mut self) {
        let mut merged: Vec<Term> = Vec::new();
        for t in self.terms.drain(..) {
            if let Some(m) = merged
                .iter_mut()
                .find(|m| m.level == t.level && m.profile == t.profile && degree_close(m.field.degree, t.field.degree))
            {
                m.field.add_assign(&t.field, C64::new(1.0, 0.0));
            } else {
                merged.push(t);
            }
        }
        merged.retain(|t| t.field.max_abs() > 0.0);
        merged.sort_by(|a, b| a.level.cmp(&b.level).then(profile_rank(&a.profile).cmp(&profile_rank(&b.profile))));
        self.terms = merged;
    }

    /// The homogeneous component of level `j` (sum of its non-compact terms).
    pub fn component(&self, j: usize) -> Field {
        let mut f = Field::zeros(&self.space, self.order - j as f64);
        for t in self.terms.iter().filter(|t| t.level == j && !matches!(t.profile, Profile::Compact(_))) {
            f.add_assign(&t.field, C64::new(1.0, 0.0));
        }
        f
    }

    pub fn principal(&self) -> Field {
        self.component(0)
    }

    pub fn scaled(&self, s: C64) -> ClassicalSymbol {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.field = t.field.scaled(s);
        }
        out
    }

    /// Sum of two symbols of equal order and layout.
    pub fn add(&self, other: &ClassicalSymbol) -> Result<ClassicalSymbol> {
        self.space.check_compatible(&other.space)?;
        if self.layout() != other.layout() {
            return Err(CalcError::DimensionMismatch("cannot add symbols with different layouts".into()));
        }
        if !degree_close(self.order, other.order) {
            return Err(CalcError::DegreeLadder { index: 0, found: format!("{}", other.order), expected: format!("{}", self.order) });
        }
        let mut out = self.clone();
        out.terms.extend(other.terms.iter().cloned());
        out.truncate(self.depth.min(other.depth));
        out.merge();
        Ok(out)
    }

    pub fn sub(&self, other: &ClassicalSymbol) -> Result<ClassicalSymbol> {
        self.add(&other.scaled(C64::new(-1.0, 0.0)))
    }

    /// Largest sample modulus over all terms.
    pub fn max_abs(&self) -> f64 {
        self.terms.iter().map(|t| t.field.max_abs()).fold(0.0, f64::max)
    }

    /// `sum_terms profile(|eta|) |eta|^d f(x, x', y, eta/|eta|)` with spectral
    /// interpolation in space; `x`, `x2` are ignored for the local layout.
    pub fn evaluate(&self, x: &[f64], x2: &[f64], y: &[f64], eta: &[f64]) -> Result<Vec<C64>> {
        let sp = &self.space;
        if eta.len() != sp.q || y.len() != sp.q || (sp.layout == Layout::Kernel && (x.len() != sp.p || x2.len() != sp.p)) {
            return Err(CalcError::DimensionMismatch("evaluation point has wrong dimensions".into()));
        }
        let r2 = sp.r2();
        let mut out = vec![ZERO; r2];
        let norm = eta.iter().map(|e| e * e).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(out);
        }
        let dir: Vec<f64> = eta.iter().map(|e| e / norm).collect();
        let spatial = sp.point_weights(Some((x, x2)), y);
        let angular = sp.sphere.interpolation(&dir);
        let mut radial_cache: Vec<(Profile, f64)> = Vec::new();
        for t in &self.terms {
            let prof = match radial_cache.iter().find(|(p, _)| *p == t.profile) {
                Some((_, v)) => *v,
                None => {
                    let v = sp.cutoff.profile_value(&t.profile, norm);
                    radial_cache.push((t.profile.clone(), v));
                    v
                }
            };
            if prof == 0.0 {
                continue;
            }
            let scale = C64::new(norm, 0.0).powc(t.field.degree) * prof;
            for (pt, ws) in &spatial {
                for (n, wa) in &angular {
                    let o = sp.offset(*pt, *n);
                    let w = ws * *wa * scale;
                    for e in 0..r2 {
                        out[e] += t.field.data[o + e] * w;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Diagonal restriction `k(x, x, y, .)` of each term as (point list over
    /// leaf x and y, flattened) used by the trace functionals. For the local
    /// layout the leaf delta is replaced by the leaf volume factor handled by
    /// the caller.
    pub fn diagonal_points(&self) -> Vec<usize> {
        let sp = &self.space;
        match sp.layout {
            Layout::Local => (0..sp.transverse_points()).collect(),
            Layout::Kernel => {
                let mut v = Vec::with_capacity(sp.leaf_points() * sp.transverse_points());
                for ix in 0..sp.leaf_points() {
                    for iy in 0..sp.transverse_points() {
                        v.push(sp.kernel_point(ix, ix, iy));
                    }
                }
                v
            }
        }
    }
}

fn profile_rank(p: &Profile) -> u8 {
    match p {
        Profile::One => 0,
        Profile::Theta => 1,
        Profile::Compact(_) => 2,
    }
}

#[cfg(test)]
mod tests;
