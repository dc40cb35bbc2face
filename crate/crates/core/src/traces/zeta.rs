//! Residues of canonical traces along holomorphic families, zeta pole
//! tables and multi-zeta slices.

use super::canonical::{canonical_trace, residue_trace};
use crate::error::{CalcError, Result};
use crate::model::{ModelFoliation, ModeSet};
use crate::numerics::{laurent_fit, LaurentFit, C64, ZERO};
use crate::resolvent::{power_components, ContourSpec};
use crate::symbol::{compose, quantize, ClassicalSymbol, Profile};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSettings {
    pub radius: f64,
    pub samples: usize,
}

impl Default for FitSettings {
    fn default() -> Self {
        FitSettings { radius: 0.05, samples: 32 }
    }
}

/// Laurent fit of `f` on the circle about `center`, rejecting circles that
/// enclose or graze another singularity.
pub fn fit_pole<F: FnMut(C64) -> Result<C64>>(center: C64, settings: &FitSettings, mut f: F) -> Result<LaurentFit> {
    if !(settings.radius > 0.0) || settings.samples < 8 || settings.samples % 2 != 0 {
        return Err(CalcError::Fit("fit circle needs a positive radius and an even sample count >= 8".into()));
    }
    let mut err = None;
    let fit = laurent_fit(center, settings.radius, settings.samples, |z| match f(z) {
        Ok(v) => v,
        Err(e) => {
            err.get_or_insert(e);
            ZERO
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let r = settings.radius;
    let scale = fit.coeffs.iter().map(|(n, c)| c.norm() * r.powi(*n as i32)).fold(0.0, f64::max);
    let inner = fit
        .coeffs
        .iter()
        .filter(|(n, _)| *n <= -3)
        .map(|(n, c)| c.norm() * r.powi(*n as i32))
        .fold(0.0, f64::max);
    if inner > 1e-6 * scale.max(1e-300) || fit.uncertainty > 1e-3 * scale.max(1e-300) {
        return Err(CalcError::Fit(format!(
            "fit circle of radius {r} about {center} touches another singularity (tail {inner:e}, aliasing {:e})",
            fit.uncertainty
        )));
    }
    Ok(fit)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyResidueCheck {
    pub z_re: f64,
    pub z_im: f64,
    pub residue_re: f64,
    pub residue_im: f64,
    pub tau_re: f64,
    pub tau_im: f64,
    /// `d order / dz` of the family
    pub order_slope: f64,
    /// `|fit - (-tau / (slope (2 pi)^q))|`
    pub defect: f64,
    pub uncertainty: f64,
}

/// Compares the Laurent-fit residue of `z -> TR(A(z))` at `z_k` with the
/// residue trace of `A(z_k)`.
pub fn family_residue_check<F>(family: F, z_k: C64, settings: &FitSettings) -> Result<FamilyResidueCheck>
where
    F: Fn(C64) -> Result<ClassicalSymbol>,
{
    let at = family(z_k)?;
    let q = at.space.q;
    let h = 0.5;
    let slope = (family(z_k + h)?.order - family(z_k - h)?.order) / (2.0 * h);
    if slope.norm() < 1e-12 {
        return Err(CalcError::Precondition("family order does not depend on z".into()));
    }
    let fit = fit_pole(z_k, settings, |z| canonical_trace(&family(z)?))?;
    let tau = residue_trace(&at)?.tau();
    let predicted = -tau / (slope * (2.0 * PI).powi(q as i32));
    let res = fit.residue();
    Ok(FamilyResidueCheck {
        z_re: z_k.re,
        z_im: z_k.im,
        residue_re: res.re,
        residue_im: res.im,
        tau_re: tau.re,
        tau_im: tau.im,
        order_slope: slope.re,
        defect: (res - predicted).norm(),
        uncertainty: fit.uncertainty,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleRecord {
    pub z_re: f64,
    pub z_im: f64,
    pub residue_re: f64,
    pub residue_im: f64,
    pub uncertainty: f64,
    pub simple: bool,
    /// ladder index of the candidate
    pub k: i64,
    /// whether the candidate is allowed by the order bound
    pub admissible: bool,
    pub detected: bool,
    /// residue trace at the candidate
    pub tau_re: f64,
    pub tau_im: f64,
}

impl PoleRecord {
    pub fn z(&self) -> C64 {
        C64::new(self.z_re, self.z_im)
    }

    pub fn residue(&self) -> C64 {
        C64::new(self.residue_re, self.residue_im)
    }

    pub fn tau(&self) -> C64 {
        C64::new(self.tau_re, self.tau_im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeromorphicReport {
    pub poles: Vec<PoleRecord>,
    /// mean of residue / tau over detected poles with nonzero tau
    pub constant: Option<f64>,
    /// `-1 / (d order / dz (2 pi)^q)`
    pub expected_constant: f64,
    /// largest relative gap between residue and `expected_constant * tau`
    pub two_path_defect: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZetaSettings {
    #[serde(default)]
    pub fit: FitSettings,
    #[serde(default)]
    pub contour: ContourSpec,
    /// symbol depth; by default just enough for every candidate in the window
    #[serde(default)]
    pub depth: Option<usize>,
}

impl Default for ZetaSettings {
    fn default() -> Self {
        ZetaSettings { fit: FitSettings::default(), contour: ContourSpec::default(), depth: None }
    }
}

fn record(k: i64, admissible: bool, center: C64, fit: &LaurentFit, tau: C64) -> PoleRecord {
    let res = fit.residue();
    let unc = fit.uncertainty;
    let detected = res.norm() > (10.0 * unc).max(1e-9);
    let z = if detected { fit.pole_location() } else { center };
    let quad = fit.coefficient(-2).norm();
    PoleRecord {
        z_re: z.re,
        z_im: z.im,
        residue_re: res.re,
        residue_im: res.im,
        uncertainty: unc,
        simple: quad <= (10.0 * unc).max(1e-6 * res.norm()),
        k,
        admissible,
        detected,
        tau_re: tau.re,
        tau_im: tau.im,
    }
}

fn summarize(poles: Vec<PoleRecord>, expected: f64) -> MeromorphicReport {
    let ratios: Vec<(C64, C64)> = poles
        .iter()
        .filter(|p| p.detected && p.tau().norm() > 1e-12)
        .map(|p| (p.residue(), p.tau()))
        .collect();
    let constant = if ratios.is_empty() {
        None
    } else {
        Some(ratios.iter().map(|(r, t)| (r / t).re).sum::<f64>() / ratios.len() as f64)
    };
    let two_path = if ratios.is_empty() {
        None
    } else {
        Some(ratios.iter().map(|(r, t)| (r - t * expected).norm() / r.norm()).fold(0.0, f64::max))
    };
    MeromorphicReport { poles, constant, expected_constant: expected, two_path_defect: two_path }
}

fn real_order(s: &ClassicalSymbol) -> Result<f64> {
    if s.order.im.abs() > 1e-12 {
        return Err(CalcError::Precondition(format!("weight symbol needs a real order, got {}", s.order)));
    }
    Ok(s.order.re)
}

/// `z -> TR(Q A^{-z})`.
pub fn zeta_trace(q_sym: &ClassicalSymbol, a: &ClassicalSymbol, z: C64, depth: usize, contour: &ContourSpec) -> Result<C64> {
    let pw = power_components(a, -z, depth, contour)?;
    canonical_trace(&compose(&q_sym.clone().with_depth(depth), &pw)?)
}

/// Poles of `z -> TR(Q A^{-z})` at the ladder `k / m` inside `[lo, hi]`.
///
/// Every ladder point in the window is fitted; those with `k > l + q` are
/// marked inadmissible and should come out regular.
pub fn zeta_pole_table(q_sym: &ClassicalSymbol, a: &ClassicalSymbol, window: (f64, f64), settings: &ZetaSettings) -> Result<MeromorphicReport> {
    let l = real_order(q_sym)?;
    let m = real_order(a)?;
    if m <= 0.0 {
        return Err(CalcError::Precondition("operator order must be positive".into()));
    }
    let qd = q_sym.space.q as f64;
    let expected = 1.0 / (m * (2.0 * PI).powi(q_sym.space.q as i32));
    if q_sym.terms.is_empty() {
        return Ok(summarize(Vec::new(), expected));
    }
    let kmin = (window.0 * m).ceil() as i64;
    let kmax = (window.1 * m).floor() as i64;
    if kmin > kmax {
        return Ok(summarize(Vec::new(), expected));
    }
    if 2.0 * settings.fit.radius >= 1.0 / m {
        return Err(CalcError::Fit(format!("fit radius {} overlaps neighbouring ladder points 1/{m} apart", settings.fit.radius)));
    }
    let top = l + qd;
    let need = (top - kmin as f64).ceil().max(0.0) as usize;
    let depth = settings.depth.unwrap_or(need);
    let mut poles = Vec::new();
    for k in (kmin..=kmax).rev() {
        let center = C64::new(k as f64 / m, 0.0);
        let fit = fit_pole(center, &settings.fit, |z| zeta_trace(q_sym, a, z, depth, &settings.contour))?;
        let at = compose(&q_sym.clone().with_depth(depth), &power_components(a, -center, depth, &settings.contour)?)?;
        let tau = residue_trace(&at)?.tau();
        poles.push(record(k, (k as f64) <= top + 1e-9, center, &fit, tau));
    }
    Ok(summarize(poles, expected))
}

/// `sum_n Tr(Q A^{-z})` over the mode truncation `|n| <= N` plus the
/// midpoint integral of the homogeneous terms beyond it (`q = 1`).
pub fn symbolic_zeta(
    q_sym: &ClassicalSymbol,
    a: &ClassicalSymbol,
    z: C64,
    model: &ModelFoliation,
    modes: &Arc<ModeSet>,
    settings: &ZetaSettings,
) -> Result<C64> {
    let sp = &q_sym.space;
    if sp.q != 1 {
        return Err(CalcError::Precondition("the lattice tail correction is implemented for q = 1".into()));
    }
    let depth = settings.depth.unwrap_or(2);
    let pw = power_components(a, -z, depth, &settings.contour)?;
    let sym = compose(&q_sym.clone().with_depth(depth), &pw)?;
    let trace = quantize(&sym, model, modes)?.trace();
    let nmax = modes.modes.iter().map(|md| md.label[md.label.len() - 1].abs()).max().unwrap_or(0) as f64;
    let step = 2.0 * PI / sp.ly;
    let edge = (nmax + 0.5) * step;
    if edge <= sp.cutoff.r1 {
        return Err(CalcError::TruncationTooSmall { depth: nmax as usize, required: sp.cutoff.r1 / step });
    }
    // lattice sum over |n| > N of ly^{-1} int int Tr k(x, x, y, eta_n)
    let cell = sp.leaf_weight() * sp.transverse_weight();
    let mut tail = ZERO;
    for t in sym.terms.iter().filter(|t| !matches!(t.profile, Profile::Compact(_))) {
        let d = t.field.degree;
        if d.re >= -1.0 {
            return Err(CalcError::Precondition(format!("mode sum diverges at order {}", sym.order)));
        }
        let mut sphere = ZERO;
        for pt in sym.diagonal_points() {
            for n in 0..sp.nodes() {
                let o = sp.offset(pt, n);
                sphere += crate::numerics::mat_trace(&t.field.data[o..o + sp.r2()], sp.rank) * cell;
            }
        }
        // sum_{n > N} (n step)^d ~ step^d int_{N + 1/2}^inf u^d du
        let radial = C64::new(step, 0.0).powc(d) * C64::new(nmax + 0.5, 0.0).powc(d + 1.0) / (-(d + 1.0));
        tail += sphere * radial / sp.ly;
    }
    Ok(trace + tail)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZetaSlice {
    pub base: Vec<C64>,
    pub direction: Vec<C64>,
}

/// `t -> TR(Q_1 A^{-z_1(t)} ... Q_N A^{-z_N(t)})` along `z(t) = base + t dir`,
/// fitted at the hyperplane crossings with real part of `t` in `window`.
pub fn multi_zeta(
    qs: &[ClassicalSymbol],
    a: &ClassicalSymbol,
    slice: &ZetaSlice,
    window: (f64, f64),
    settings: &ZetaSettings,
) -> Result<MeromorphicReport> {
    let n = qs.len();
    if n == 0 || n > 3 {
        return Err(CalcError::Precondition(format!("multi-zeta supports 1 to 3 weights, got {n}")));
    }
    if slice.base.len() != n || slice.direction.len() != n {
        return Err(CalcError::DimensionMismatch("slice base and direction need one entry per weight".into()));
    }
    let m = real_order(a)?;
    let dsum: C64 = slice.direction.iter().sum();
    if dsum.norm() < 1e-12 {
        return Err(CalcError::Precondition("slice is parallel to the pole hyperplanes".into()));
    }
    if dsum.im.abs() > 1e-12 {
        return Err(CalcError::Precondition("slice direction must have a real coordinate sum".into()));
    }
    let dsum = dsum.re;
    let lsum: f64 = qs.iter().map(real_order).sum::<Result<f64>>()?;
    let bsum: C64 = slice.base.iter().sum();
    let q = qs[0].space.q;
    let top = lsum + q as f64;
    let expected = 1.0 / (m * dsum * (2.0 * PI).powi(q as i32));
    // crossings: lsum - m (bsum + t dsum) = -q + j  ->  t = (top - j - m bsum) / (m dsum)
    let crossing = |j: usize| (C64::new(top - j as f64, 0.0) - bsum * m) / (dsum * m);
    let spacing = 1.0 / (m * dsum).abs();
    if 2.0 * settings.fit.radius >= spacing {
        return Err(CalcError::Fit(format!("fit radius {} overlaps neighbouring crossings {spacing} apart", settings.fit.radius)));
    }
    let mut js = Vec::new();
    for j in 0..64usize {
        let t = crossing(j);
        if t.re >= window.0 - 1e-12 && t.re <= window.1 + 1e-12 {
            js.push(j);
        }
    }
    let depth = settings.depth.unwrap_or(js.iter().copied().max().unwrap_or(0));
    let eval = |t: C64| -> Result<ClassicalSymbol> {
        let mut acc: Option<ClassicalSymbol> = None;
        for (i, qi) in qs.iter().enumerate() {
            let z = slice.base[i] + slice.direction[i] * t;
            let pw = power_components(a, -z, depth, &settings.contour)?;
            let piece = compose(&qi.clone().with_depth(depth), &pw)?;
            acc = Some(match acc {
                None => piece,
                Some(prev) => compose(&prev, &piece)?,
            });
        }
        Ok(acc.expect("at least one weight"))
    };
    let mut poles = Vec::new();
    for j in js {
        let t = crossing(j);
        let fit = fit_pole(t, &settings.fit, |s| canonical_trace(&eval(s)?))?;
        let tau = residue_trace(&eval(t)?)?.tau();
        poles.push(record(top.round() as i64 - j as i64, true, t, &fit, tau));
    }
    Ok(summarize(poles, expected))
}
