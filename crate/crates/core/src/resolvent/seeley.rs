//! The Seeley recursion for the parameter-dependent resolvent symbol.
//!
//! With a scalar positive principal symbol `a_m`, every component has the
//! form `p_{-m-l} = sum_k (a_m - lambda)^{-k} c_{l,k}(y, eta)` where `c_{l,k}`
//! is homogeneous of degree `m (k - 1) - l`; the recursion acts on these
//! coefficient fields.

use crate::error::{CalcError, Result};
use crate::homogeneous::{multi_factorial, multi_indices};
use crate::numerics::{C64, ONE, ZERO};
use crate::symbol::{field_product, ClassicalSymbol, Field, Layout, SymbolSpace};
use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

/// `sum_k (a_m - lambda)^{-k} c_k`, keyed by `k >= 1`.
pub type ResolventComponent = BTreeMap<usize, Field>;

#[derive(Debug, Clone)]
pub struct ResolventSymbolFamily {
    pub space: Arc<SymbolSpace>,
    pub order: f64,
    pub depth: usize,
    /// excluded sector half-angle around the positive axis
    pub delta: f64,
    pub principal: Field,
    pub components: Vec<ResolventComponent>,
}

const PRUNE: f64 = 1e-13;

/// Checks that `a_m` is `s I` with `s > 0` and returns `s` per sample.
pub(crate) fn scalar_principal(a: &ClassicalSymbol) -> Result<(f64, Field)> {
    let sp = &a.space;
    if sp.layout != Layout::Local {
        return Err(CalcError::Precondition("resolvent construction needs a local (transversal) symbol".into()));
    }
    if a.order.im.abs() > 1e-14 || a.order.re <= 0.0 {
        return Err(CalcError::Precondition(format!("resolvent construction needs a real positive order, got {}", a.order)));
    }
    let am = a.principal();
    let r = sp.rank;
    let scale = am.max_abs();
    if scale == 0.0 {
        return Err(CalcError::NotElliptic("principal symbol vanishes".into()));
    }
    for (b, blk) in am.data.chunks(r * r).enumerate() {
        let s = blk[0];
        for i in 0..r {
            for j in 0..r {
                let expect = if i == j { s } else { ZERO };
                if (blk[i * r + j] - expect).norm() > 1e-12 * scale {
                    return Err(CalcError::Precondition("principal symbol must be a scalar multiple of the identity".into()));
                }
            }
        }
        if s.im.abs() > 1e-12 * scale || s.re <= 1e-12 * scale {
            return Err(CalcError::NotElliptic(format!(
                "principal symbol is not positive on the transverse cone (value {s} at sample {b})"
            )));
        }
    }
    Ok((a.order.re, am))
}

struct Calculus<'a> {
    sp: &'a SymbolSpace,
    eta_am: Vec<Field>,
}

fn push(out: &mut ResolventComponent, k: usize, f: Field, source_scale: f64) {
    if f.max_abs() <= PRUNE * source_scale {
        return;
    }
    match out.get_mut(&k) {
        Some(g) => g.add_assign(&f, ONE),
        None => {
            out.insert(k, f);
        }
    }
}

impl<'a> Calculus<'a> {
    fn d_eta(&self, p: &ResolventComponent, axis: usize) -> ResolventComponent {
        let mut out = BTreeMap::new();
        for (k, c) in p {
            let s = c.max_abs();
            push(&mut out, *k, c.eta_derivative(self.sp, axis), s);
            let (_, t) = field_product(self.sp, &self.eta_am[axis], self.sp, c);
            push(&mut out, k + 1, t.scaled(C64::new(-(*k as f64), 0.0)), s);
        }
        out
    }
}

/// Components `p_{-m-l}`, `l = 0..=depth`, from the recursion
/// `(a_m - lambda) p_{-m-l} + sum d_eta^alpha p_{-m-j} D_y^alpha a_{m-k} / alpha! = 0`
/// over `j < l`, `j + k + |alpha| = l`.
pub fn seeley_components(a: &ClassicalSymbol, depth: usize, delta: f64) -> Result<ResolventSymbolFamily> {
    if !(delta > 0.0 && delta < std::f64::consts::PI) {
        return Err(CalcError::Precondition(format!("sector angle must lie in (0, pi), got {delta}")));
    }
    let (m, am) = scalar_principal(a)?;
    let sp = &*a.space;
    let q = sp.q;
    let calc = Calculus {
        sp,
        eta_am: (0..q).map(|i| am.eta_derivative(sp, i)).collect(),
    };
    let comps_a: Vec<Field> = (0..=depth).map(|k| a.component(k)).collect();
    let mut dy_a: HashMap<(usize, Vec<usize>), Field> = HashMap::new();
    let mut p: Vec<ResolventComponent> = Vec::new();
    let id = ClassicalSymbol::identity(sp, 0).principal();
    p.push(BTreeMap::from([(1usize, Field { degree: ZERO, data: id.data })]));
    // eta-derivatives of computed components, keyed by (j, alpha)
    let mut deta: HashMap<(usize, Vec<usize>), ResolventComponent> = HashMap::new();
    for l in 1..=depth {
        let mut acc: ResolventComponent = BTreeMap::new();
        for j in 0..l {
            for k in 0..=(l - j) {
                let na = l - j - k;
                if comps_a[k].max_abs() == 0.0 {
                    continue;
                }
                for alpha in multi_indices(q, na) {
                    let da = dy_a
                        .entry((k, alpha.clone()))
                        .or_insert_with(|| comps_a[k].y_multi_derivative(sp, &alpha))
                        .clone();
                    if na > 0 && da.max_abs() <= PRUNE * comps_a[k].max_abs() {
                        continue;
                    }
                    let dp = eta_derivative_of(&calc, &p, &mut deta, j, &alpha);
                    let inv = C64::new(1.0 / multi_factorial(&alpha), 0.0);
                    for (kk, c) in &dp {
                        let (_, t) = field_product(sp, c, sp, &da);
                        push(&mut acc, *kk, t.scaled(inv), c.max_abs() * da.max_abs());
                    }
                }
            }
        }
        // p_{-m-l} = -(a_m - lambda)^{-1} acc
        let next: ResolventComponent = acc.into_iter().map(|(k, c)| (k + 1, c.scaled(C64::new(-1.0, 0.0)))).collect();
        p.push(next);
    }
    // fix the nominal degrees m (k - 1) - l
    for (l, comp) in p.iter_mut().enumerate() {
        for (k, c) in comp.iter_mut() {
            c.degree = C64::new(m * (*k as f64 - 1.0) - l as f64, 0.0);
        }
    }
    Ok(ResolventSymbolFamily { space: Arc::clone(&a.space), order: m, depth, delta, principal: am, components: p })
}

fn eta_derivative_of(
    calc: &Calculus,
    p: &[ResolventComponent],
    cache: &mut HashMap<(usize, Vec<usize>), ResolventComponent>,
    j: usize,
    alpha: &[usize],
) -> ResolventComponent {
    if alpha.iter().all(|a| *a == 0) {
        return p[j].clone();
    }
    if let Some(v) = cache.get(&(j, alpha.to_vec())) {
        return v.clone();
    }
    let axis = alpha.iter().position(|a| *a > 0).unwrap();
    let mut lower = alpha.to_vec();
    lower[axis] -= 1;
    let base = eta_derivative_of(calc, p, cache, j, &lower);
    let out = calc.d_eta(&base, axis);
    cache.insert((j, alpha.to_vec()), out.clone());
    out
}

impl ResolventSymbolFamily {
    pub fn rank(&self) -> usize {
        self.space.rank
    }

    /// `a_m(y, eta)`.
    pub fn principal_value(&self, y: &[f64], eta: &[f64]) -> f64 {
        self.principal.evaluate(&self.space, None, y, eta)[0].re
    }

    /// `p_{-m-l}(y, eta, lambda)` as a row-major `rank x rank` matrix.
    pub fn eval(&self, l: usize, y: &[f64], eta: &[f64], lambda: C64) -> Result<Vec<C64>> {
        if l > self.depth {
            return Err(CalcError::TruncationTooSmall { depth: self.depth, required: l as f64 });
        }
        if lambda != ZERO && lambda.arg().abs() <= self.delta {
            return Err(CalcError::Contour(format!("lambda = {lambda} lies in the excluded sector |arg| <= {}", self.delta)));
        }
        let g = C64::new(self.principal_value(y, eta), 0.0) - lambda;
        if g.norm() < 1e-14 {
            return Err(CalcError::Contour(format!("lambda = {lambda} meets the principal symbol")));
        }
        let r2 = self.space.r2();
        let mut out = vec![ZERO; r2];
        for (k, c) in &self.components[l] {
            let w = g.powi(-(*k as i32));
            for (o, v) in out.iter_mut().zip(c.evaluate(&self.space, None, y, eta)) {
                *o += v * w;
            }
        }
        Ok(out)
    }

    /// Largest coefficient modulus of component `l` (zero when it vanishes).
    pub fn component_size(&self, l: usize) -> f64 {
        self.components.get(l).map(|c| c.values().map(|f| f.max_abs()).fold(0.0, f64::max)).unwrap_or(0.0)
    }
}
