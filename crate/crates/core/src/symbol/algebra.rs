use super::space::{field_product, Field, Layout, SymbolSpace};
use super::{ClassicalSymbol, Term};
use crate::cutoff::Profile;
use crate::error::{CalcError, Result};
use crate::homogeneous::{multi_factorial, multi_indices};
use crate::numerics::{mat_conj_transpose, C64};
use std::collections::HashMap;
use std::sync::Arc;

type Piece = (Profile, Field);

/// `d/d eta_axis` of `profile(|eta|) * f`: the homogeneous part is
/// differentiated exactly and the profile derivative contributes
/// `profile'(|eta|) (eta_axis/|eta|) f`.
fn differentiate(space: &SymbolSpace, pieces: &[Piece], axis: usize) -> Vec<Piece> {
    let mut out = Vec::new();
    for (profile, f) in pieces {
        out.push((profile.clone(), f.eta_derivative(space, axis)));
        for (c, dp) in profile.radial_derivative() {
            out.push((dp, f.times_direction(space, axis).scaled(C64::new(c, 0.0))));
        }
    }
    out
}

/// Pieces of `d/d eta_axis (profile * field)`.
pub(crate) fn eta_derivative_pieces(space: &SymbolSpace, profile: &Profile, field: &Field, axis: usize) -> Vec<(Profile, Field)> {
    differentiate(space, &[(profile.clone(), field.clone())], axis)
}

struct DerivativeCache<'a> {
    space: &'a SymbolSpace,
    map: HashMap<Vec<usize>, Vec<Piece>>,
}

impl<'a> DerivativeCache<'a> {
    fn new(space: &'a SymbolSpace, profile: &Profile, field: &Field) -> Self {
        let mut map = HashMap::new();
        map.insert(vec![0; space.q], vec![(profile.clone(), field.clone())]);
        DerivativeCache { space, map }
    }

    fn get(&mut self, alpha: &[usize]) -> Vec<Piece> {
        if let Some(v) = self.map.get(alpha) {
            return v.clone();
        }
        let axis = alpha.iter().position(|a| *a > 0).expect("nonzero multi-index");
        let mut prev = alpha.to_vec();
        prev[axis] -= 1;
        let base = self.get(&prev);
        let d = differentiate(self.space, &base, axis);
        self.map.insert(alpha.to_vec(), d.clone());
        d
    }
}

fn push_product(terms: &mut Vec<Term>, level: usize, pa: &Profile, pb: &Profile, field: Field) {
    for (c, profile) in pa.product(pb) {
        terms.push(Term { level, profile, field: field.scaled(C64::new(c, 0.0)) });
    }
}

/// Leibniz composition: `sum_alpha d_eta^alpha k_A # D_y^alpha k_B / alpha!`
/// where `#` is the crossed-product product in the leaf variables; truncated
/// at level `min(N_A, N_B)`.
pub fn compose(a: &ClassicalSymbol, b: &ClassicalSymbol) -> Result<ClassicalSymbol> {
    a.space.check_compatible(&b.space)?;
    let depth = a.depth.min(b.depth);
    let q = a.space.q;
    let out_layout = if a.layout() == Layout::Local && b.layout() == Layout::Local { Layout::Local } else { Layout::Kernel };
    let out_space = if out_layout == a.layout() { a.space.clone() } else { b.space.clone() };
    let mut terms = Vec::new();
    let mut b_derivs: Vec<HashMap<Vec<usize>, Option<Field>>> = vec![HashMap::new(); b.terms.len()];
    for ta in &a.terms {
        let mut cache = DerivativeCache::new(&a.space, &ta.profile, &ta.field);
        for (ib, tb) in b.terms.iter().enumerate() {
            let base = ta.level + tb.level;
            if base > depth {
                continue;
            }
            let scale_b = tb.field.max_abs();
            for k in 0..=depth - base {
                for alpha in multi_indices(q, k) {
                    let db = b_derivs[ib]
                        .entry(alpha.clone())
                        .or_insert_with(|| {
                            let d = tb.field.y_multi_derivative(&b.space, &alpha);
                            if k > 0 && d.max_abs() <= 1e-13 * scale_b {
                                None
                            } else {
                                Some(d)
                            }
                        })
                        .clone();
                    let Some(db) = db else { continue };
                    let inv = C64::new(1.0 / multi_factorial(&alpha), 0.0);
                    for (pa, fa) in cache.get(&alpha) {
                        let (_, prod) = field_product(&a.space, &fa, &b.space, &db);
                        push_product(&mut terms, base + k, &pa, &tb.profile, prod.scaled(inv));
                    }
                }
            }
        }
    }
    let order = a.order + b.order;
    let mut out = ClassicalSymbol { space: out_space, order, depth, terms };
    out.merge();
    Ok(out)
}

/// `[A, B] = A B - B A` at the common truncation depth.
pub fn commutator(a: &ClassicalSymbol, b: &ClassicalSymbol) -> Result<ClassicalSymbol> {
    let ab = compose(a, b)?;
    let ba = compose(b, a)?;
    if ab.layout() != ba.layout() {
        return Err(CalcError::DimensionMismatch("commutator layouts differ".into()));
    }
    ab.sub(&ba)
}

fn conjugate_swapped(space: &SymbolSpace, f: &Field) -> Field {
    let r = space.rank;
    let r2 = space.r2();
    let mut out = Field { degree: f.degree.conj(), data: f.data.clone() };
    for pt in 0..space.points() {
        let src = match space.layout {
            Layout::Local => pt,
            Layout::Kernel => {
                let ty = space.transverse_points();
                let nl = space.leaf_points();
                let iy = pt % ty;
                let ix2 = (pt / ty) % nl;
                let ix = pt / ty / nl;
                space.kernel_point(ix2, ix, iy)
            }
        };
        for n in 0..space.nodes() {
            let o_src = space.offset(src, n);
            let o = space.offset(pt, n);
            let t = mat_conj_transpose(&f.data[o_src..o_src + r2], r);
            out.data[o..o + r2].copy_from_slice(&t);
        }
    }
    out
}

/// Symbol of the adjoint: `sum_alpha d_eta^alpha D_y^alpha k^*(x', x) / alpha!`.
pub fn adjoint(a: &ClassicalSymbol) -> Result<ClassicalSymbol> {
    let space = &a.space;
    let q = space.q;
    let mut terms = Vec::new();
    for t in &a.terms {
        let star = conjugate_swapped(space, &t.field);
        for k in 0..=a.depth.saturating_sub(t.level) {
            for alpha in multi_indices(q, k) {
                let dy = star.y_multi_derivative(space, &alpha);
                if k > 0 && dy.max_abs() <= 1e-13 * star.max_abs() {
                    continue;
                }
                let mut cache = DerivativeCache::new(space, &t.profile, &dy);
                let inv = C64::new(1.0 / multi_factorial(&alpha), 0.0);
                for (p, f) in cache.get(&alpha) {
                    terms.push(Term { level: t.level + k, profile: p, field: f.scaled(inv) });
                }
            }
        }
    }
    let mut out = ClassicalSymbol { space: Arc::clone(&a.space), order: a.order.conj(), depth: a.depth, terms };
    out.merge();
    Ok(out)
}
