//! Complex powers `A^z` and parametrices at the symbol level.

use super::seeley::{scalar_principal, seeley_components, ResolventSymbolFamily};
use crate::cutoff::Profile;
use crate::error::{CalcError, Result};
use crate::numerics::{binomial, integrate_to_infinity, TanhSinh, C64};
use crate::symbol::{compose, ClassicalSymbol, Field, Term};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

/// Contour `Gamma`: the ray `arg = alpha` in from infinity, the arc
/// `|lambda| = rho` clockwise through the positive axis, the ray
/// `arg = -alpha` out to infinity. Both rays and the arc use tanh-sinh rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub alpha: f64,
    /// arc radius; half the smallest principal value when absent
    #[serde(default)]
    pub rho: Option<f64>,
    /// tanh-sinh step on the rays (after `r = rho / u`)
    #[serde(default = "default_step")]
    pub ray_step: f64,
    #[serde(default = "default_step")]
    pub arc_step: f64,
}

fn default_step() -> f64 {
    1.0 / 64.0
}

impl Default for ContourSpec {
    fn default() -> Self {
        ContourSpec { alpha: 0.75 * PI, rho: None, ray_step: default_step(), arc_step: default_step() }
    }
}

impl ContourSpec {
    pub fn validate(&self, spectrum_min: f64) -> Result<f64> {
        if !(self.alpha > 0.0 && self.alpha < PI) {
            return Err(CalcError::Contour(format!("ray angle {} must lie in (0, pi)", self.alpha)));
        }
        let rho = self.rho.unwrap_or(0.5 * spectrum_min);
        if !(rho > 0.0) || rho >= spectrum_min {
            return Err(CalcError::Contour(format!("arc radius {rho} must be positive and below the spectrum bound {spectrum_min}")));
        }
        if !(self.ray_step > 0.0 && self.arc_step > 0.0) {
            return Err(CalcError::Contour("quadrature steps must be positive".into()));
        }
        Ok(rho)
    }
}

/// `lambda^z` with the branch positive on the positive axis.
fn lambda_pow(r: f64, theta: f64, z: C64) -> C64 {
    (z * C64::new(r.ln(), theta)).exp()
}

/// `(i / 2 pi) int_Gamma lambda^z (a - lambda)^{-k} d lambda` by quadrature.
pub fn contour_weight(a: f64, k: usize, z: C64, alpha: f64, rho: f64, rays: &TanhSinh, arc: &TanhSinh) -> C64 {
    let f = |r: f64, theta: f64| -> C64 {
        let lam = C64::from_polar(r, theta);
        lambda_pow(r, theta, z) * (C64::new(a, 0.0) - lam).powi(-(k as i32))
    };
    let eu = C64::from_polar(1.0, alpha);
    let el = C64::from_polar(1.0, -alpha);
    let upper = integrate_to_infinity(rho, rays, |r| f(r, alpha)) * eu;
    let lower = integrate_to_infinity(rho, rays, |r| f(r, -alpha)) * el;
    let circle = arc.integrate(|theta, _, _| f(rho, theta) * C64::from_polar(rho, theta) * C64::new(0.0, 1.0));
    let total = lower - upper - circle;
    total * C64::new(0.0, 1.0 / (2.0 * PI))
}

/// Closed form of the contour weight: `(-1)^{k-1} binom(z, k-1) a^{z-k+1}`.
pub fn contour_weight_exact(a: f64, k: usize, z: C64) -> C64 {
    let sign = if (k - 1) % 2 == 0 { 1.0 } else { -1.0 };
    binomial(z, k - 1) * C64::new(a, 0.0).powc(z - (k as f64 - 1.0)) * sign
}

/// Combines resolvent coefficient fields with per-sample weights
/// `w(a_m, k)` into homogeneous fields of degree `m z - l`.
fn integrate_family<W: FnMut(f64, usize) -> C64>(fam: &ResolventSymbolFamily, z: C64, mut weight: W) -> Vec<Field> {
    let sp = &fam.space;
    let r2 = sp.r2();
    let m = fam.order;
    let samples = sp.points() * sp.nodes();
    fam.components
        .iter()
        .enumerate()
        .map(|(l, comp)| {
            let mut out = Field::zeros(sp, z * m - l as f64);
            for (k, c) in comp {
                for s in 0..samples {
                    let a = fam.principal.data[s * r2].re;
                    let w = weight(a, *k);
                    for e in 0..r2 {
                        out.data[s * r2 + e] += c.data[s * r2 + e] * w;
                    }
                }
            }
            out
        })
        .collect()
}

fn classical_from_fields(fam: &ResolventSymbolFamily, order: C64, fields: Vec<Field>) -> Result<ClassicalSymbol> {
    let depth = fields.len() - 1;
    let terms = fields
        .into_iter()
        .enumerate()
        .map(|(l, field)| Term { level: l, profile: Profile::Theta, field })
        .collect();
    ClassicalSymbol::from_terms(Arc::clone(&fam.space), order, depth, terms)
}

/// Symbol of `A^z` to depth `N`: contour integration of the Seeley
/// components for `Re z < -1/4`, and `A^{z - n} a^n` with
/// `n = floor(Re z + 3/4) + 1` otherwise (the contour weights lose accuracy
/// as `Re z -> 0`).
pub fn power_components(a: &ClassicalSymbol, z: C64, depth: usize, contour: &ContourSpec) -> Result<ClassicalSymbol> {
    if z.re >= -0.25 {
        let n = (z.re + 0.75).floor() as usize + 1;
        let base = power_components(a, z - n as f64, depth, contour)?;
        let ad = a.clone().with_depth(depth);
        let mut out = base;
        for _ in 0..n {
            out = compose(&out, &ad)?;
        }
        out.truncate(depth);
        return Ok(out);
    }
    let fam = seeley_components(a, depth, 0.5 * (PI - contour.alpha).min(contour.alpha))?;
    let amin = fam.principal.data.iter().step_by(fam.space.r2()).map(|v| v.re).fold(f64::INFINITY, f64::min);
    let rho = contour.validate(amin)?;
    let rays = TanhSinh::new(0.0, 1.0, contour.ray_step);
    let arc = TanhSinh::new(-contour.alpha, contour.alpha, contour.arc_step);
    let mut cache: HashMap<(u64, usize), C64> = HashMap::new();
    let fields = integrate_family(&fam, z, |av, k| {
        *cache.entry((av.to_bits(), k)).or_insert_with(|| contour_weight(av, k, z, contour.alpha, rho, &rays, &arc))
    });
    classical_from_fields(&fam, z * fam.order, fields)
}

/// Same symbol computed with the closed-form weights (any `z`).
pub fn power_components_exact(a: &ClassicalSymbol, z: C64, depth: usize) -> Result<ClassicalSymbol> {
    let fam = seeley_components(a, depth, 0.5)?;
    let fields = integrate_family(&fam, z, |av, k| contour_weight_exact(av, k, z));
    classical_from_fields(&fam, z * fam.order, fields)
}

#[derive(Debug, Clone)]
pub struct Parametrix {
    pub symbol: ClassicalSymbol,
    /// largest non-compact sample of `Q # a - 1` on levels `0..=N`
    pub symbol_defect: f64,
    /// order of the first omitted level, `-(N + 1)`
    pub remainder_order: f64,
}

/// Left parametrix `Q` of order `-m`: the Seeley components at
/// `lambda = 0`.
pub fn parametrix(a: &ClassicalSymbol, depth: usize) -> Result<Parametrix> {
    let (m, _) = scalar_principal(a)?;
    let fam = seeley_components(a, depth, 0.5)?;
    let fields = integrate_family(&fam, C64::new(-1.0, 0.0), |av, k| C64::new(av.powi(-(k as i32)), 0.0));
    let symbol = classical_from_fields(&fam, C64::new(-m, 0.0), fields)?;
    let qa = compose(&symbol, &a.clone().with_depth(depth))?;
    let id = ClassicalSymbol::identity(&a.space, depth).principal();
    let mut defect: f64 = 0.0;
    for l in 0..=depth {
        let mut c = qa.component(l);
        if l == 0 {
            c.add_assign(&id, C64::new(-1.0, 0.0));
        }
        defect = defect.max(c.max_abs());
    }
    Ok(Parametrix { symbol, symbol_defect: defect, remainder_order: -((depth + 1) as f64) })
}
