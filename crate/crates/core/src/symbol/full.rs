//! Full symbols `p(x, y, xi, eta)` of operators on the whole manifold,
//! their transversal restriction to `xi = 0`, and holonomy invariance.

use super::space::{Field, Layout, SymbolSpace};
use crate::error::{CalcError, Result};
use crate::numerics::{mat_mul_into, C64, ZERO};
use nalgebra::DMatrix;
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
}

pub type SymbolFn = Arc<dyn Fn(&PhasePoint) -> Vec<C64> + Send + Sync>;

/// A classical symbol in the joint covariable `(xi, eta)`; component `j`
/// is homogeneous of degree `order - j`.
#[derive(Clone)]
pub struct FullSymbol {
    pub order: f64,
    pub p: usize,
    pub q: usize,
    pub rank: usize,
    pub components: Vec<SymbolFn>,
    /// true when every component is a polynomial in `(xi, eta)`
    pub differential: bool,
}

impl fmt::Debug for FullSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FullSymbol")
            .field("order", &self.order)
            .field("p", &self.p)
            .field("q", &self.q)
            .field("rank", &self.rank)
            .field("components", &self.components.len())
            .finish()
    }
}

impl FullSymbol {
    pub fn principal(&self, pt: &PhasePoint) -> Vec<C64> {
        (self.components[0])(pt)
    }

    /// Sum of all components.
    pub fn eval(&self, pt: &PhasePoint) -> Vec<C64> {
        let mut out = vec![ZERO; self.rank * self.rank];
        for c in &self.components {
            for (o, v) in out.iter_mut().zip(c(pt)) {
                *o += v;
            }
        }
        out
    }
}

/// `sigma_P(y, eta)` sampled on a local-layout grid.
#[derive(Debug, Clone)]
pub struct TransversalSymbol {
    pub space: Arc<SymbolSpace>,
    pub field: Field,
}

impl TransversalSymbol {
    /// Homogeneous extension `|eta|^m sigma(y, eta/|eta|)` at grid or
    /// off-grid points.
    pub fn eval(&self, y: &[f64], eta: &[f64]) -> Vec<C64> {
        let sp = &self.space;
        let r2 = sp.r2();
        let mut out = vec![ZERO; r2];
        let norm = eta.iter().map(|e| e * e).sum::<f64>().sqrt();
        if norm == 0.0 {
            return out;
        }
        let dir: Vec<f64> = eta.iter().map(|e| e / norm).collect();
        let scale = C64::new(norm, 0.0).powc(self.field.degree);
        for (pt, ws) in sp.point_weights(None, y) {
            for (n, wa) in sp.sphere.interpolation(&dir) {
                let o = sp.offset(pt, n);
                for e in 0..r2 {
                    out[e] += self.field.data[o + e] * ws * wa * scale;
                }
            }
        }
        out
    }

    pub fn as_point_symbol(&self) -> PointSymbol {
        let me = self.clone();
        let q = self.space.q;
        Arc::new(move |point: &[f64], eta: &[f64]| me.eval(&point[point.len() - q..], eta))
    }
}

/// Restriction of the principal symbol to the conormal directions `xi = 0`.
///
/// With `x_samples` given, the restriction is also evaluated at those leaf
/// points and an error is returned if it changes by more than `tol`.
pub fn transversal_symbol(
    p: &FullSymbol,
    space: &SymbolSpace,
    x_samples: Option<(&[Vec<f64>], f64)>,
) -> Result<TransversalSymbol> {
    if p.components.is_empty() {
        return Err(CalcError::Precondition("full symbol has no principal component".into()));
    }
    if p.q != space.q || p.rank != space.rank {
        return Err(CalcError::DimensionMismatch("full symbol and grid disagree on q or rank".into()));
    }
    let local = Arc::new(space.with_layout(Layout::Local));
    let x0 = vec![0.0; p.p];
    let sample = |x: &[f64]| {
        Field::from_fn(&local, C64::new(p.order, 0.0), |iy, w| {
            let pt = PhasePoint { x: x.to_vec(), y: local.transverse_coords(iy), xi: vec![0.0; p.p], eta: w.to_vec() };
            p.principal(&pt)
        })
    };
    let field = sample(&x0);
    if let Some((xs, tol)) = x_samples {
        for x in xs {
            let other = sample(x);
            let defect = field.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            if defect > tol {
                return Err(CalcError::Precondition(format!(
                    "transversal symbol depends on the leaf variable (defect {defect:e} at x = {x:?})"
                )));
            }
        }
    }
    Ok(TransversalSymbol { space: local, field })
}

/// `sigma(point, eta)` with `point` in the ambient coordinates of the model.
pub type PointSymbol = Arc<dyn Fn(&[f64], &[f64]) -> Vec<C64> + Send + Sync>;

/// One sampled groupoid element `gamma`: source and range points, the
/// bundle map `T(gamma)` and the codifferential `dh^*` acting on `eta`.
#[derive(Debug, Clone)]
pub struct HolonomySample {
    pub source: Vec<f64>,
    pub range: Vec<f64>,
    pub transport: DMatrix<C64>,
    pub codifferential: DMatrix<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct HolonomyAction {
    pub samples: Vec<HolonomySample>,
}

impl HolonomyAction {
    pub fn is_isometric(&self, tol: f64) -> bool {
        self.samples.iter().all(|s| {
            let t = &s.transport;
            let d = t.adjoint() * t - DMatrix::<C64>::identity(t.nrows(), t.ncols());
            d.iter().all(|v| v.norm() < tol)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolonomyCheck {
    pub passed: bool,
    pub max_defect: f64,
}

/// `max || T sigma_source(dh^* eta) T^{-1} - sigma_range(eta) ||` over the
/// samples and the supplied directions.
pub fn holonomy_invariance_check(
    sigma: &PointSymbol,
    action: &HolonomyAction,
    directions: &[Vec<f64>],
    tol: f64,
) -> Result<HolonomyCheck> {
    let mut max_defect: f64 = 0.0;
    for s in &action.samples {
        let r = s.transport.nrows();
        let t_inv = s
            .transport
            .clone()
            .try_inverse()
            .ok_or_else(|| CalcError::Precondition("holonomy transport is singular".into()))?;
        let t_flat: Vec<C64> = (0..r * r).map(|i| s.transport[(i / r, i % r)]).collect();
        let ti_flat: Vec<C64> = (0..r * r).map(|i| t_inv[(i / r, i % r)]).collect();
        for eta in directions {
            let e = nalgebra::DVector::from_column_slice(eta);
            let moved = &s.codifferential * e;
            let src = sigma(&s.source, moved.as_slice());
            if src.len() != r * r {
                return Err(CalcError::DimensionMismatch("transport rank differs from symbol rank".into()));
            }
            let mut tmp = vec![ZERO; r * r];
            let mut conj = vec![ZERO; r * r];
            mat_mul_into(&t_flat, &src, r, &mut tmp);
            mat_mul_into(&tmp, &ti_flat, r, &mut conj);
            let rng = sigma(&s.range, eta);
            for (a, b) in conj.iter().zip(&rng) {
                max_defect = max_defect.max((a - b).norm());
            }
        }
    }
    Ok(HolonomyCheck { passed: max_defect <= tol, max_defect })
}
