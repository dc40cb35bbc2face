//! Excision cutoff `theta(|eta|)` and radial profiles built from it.
//!
//! A symbol term carries a radial profile multiplying a homogeneous field:
//! the plain cutoff (the classical part), the constant `1` (polynomial
//! symbols of differential operators) or a compactly supported polynomial in
//! the cutoff and its derivatives (generated when `eta`-derivatives hit the
//! cutoff). Radial moments of each profile are evaluated analytically where
//! homogeneity allows and by quadrature on the transition shell otherwise.

use crate::error::{CalcError, Result};
use crate::numerics::{Jet, TanhSinh, C64, ZERO};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::OnceLock;

/// Highest cutoff derivative tabulated on the transition shell.
pub const MAX_CUTOFF_DERIVATIVE: usize = 12;

#[derive(Debug, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub r0: f64,
    pub r1: f64,
    #[serde(skip)]
    table: OnceLock<CutoffTable>,
}

impl Clone for CutoffSpec {
    fn clone(&self) -> Self {
        CutoffSpec::new(self.r0, self.r1).expect("validated on construction")
    }
}

impl PartialEq for CutoffSpec {
    fn eq(&self, other: &Self) -> bool {
        self.r0 == other.r0 && self.r1 == other.r1
    }
}

impl Default for CutoffSpec {
    fn default() -> Self {
        CutoffSpec::new(1.0, 2.0).unwrap()
    }
}

#[derive(Debug)]
struct CutoffTable {
    radii: Vec<f64>,
    weights: Vec<f64>,
    derivs: Vec<Vec<f64>>,
}

impl CutoffSpec {
    pub fn new(r0: f64, r1: f64) -> Result<Self> {
        if !(r0 > 0.0 && r1 > r0) {
            return Err(CalcError::Precondition(format!("cutoff radii must satisfy 0 < r0 < r1, got {r0}, {r1}")));
        }
        Ok(CutoffSpec { r0, r1, table: OnceLock::new() })
    }

    /// `theta`, `theta'`, ..., `theta^(order)` at radius `r`.
    pub fn derivatives(&self, r: f64, order: usize) -> Vec<f64> {
        let mut out = vec![0.0; order + 1];
        let w = self.r1 - self.r0;
        let t = (r - self.r0) / w;
        if t <= 1e-12 {
            return out;
        }
        if t >= 1.0 - 1e-12 {
            out[0] = 1.0;
            return out;
        }
        let tj = Jet { coeffs: { let mut c = vec![0.0; order + 1]; c[0] = t; if order > 0 { c[1] = 1.0 / w; } c } };
        let f = |x: &Jet| x.recip().scale(-1.0).exp();
        let left = f(&tj);
        let right = f(&tj.scale(-1.0).shift(1.0));
        let g = left.mul(&left.add(&right).recip());
        for (k, o) in out.iter_mut().enumerate() {
            *o = g.derivative(k);
        }
        out
    }

    pub fn theta(&self, r: f64) -> f64 {
        self.derivatives(r, 0)[0]
    }

    fn table(&self) -> &CutoffTable {
        self.table.get_or_init(|| {
            let rule = TanhSinh::new(self.r0, self.r1, 1.0 / 40.0);
            let mut radii = Vec::new();
            let mut weights = Vec::new();
            let mut derivs = Vec::new();
            for ((x, _, _), w) in rule.nodes.iter().zip(&rule.weights) {
                radii.push(*x);
                weights.push(*w);
                derivs.push(self.derivatives(*x, MAX_CUTOFF_DERIVATIVE));
            }
            CutoffTable { radii, weights, derivs }
        })
    }

    /// Analytic continuation of `int_0^inf P(r) r^{s-1} dr` for the profile.
    ///
    /// `s = degree + q`. Plain cutoff: `-r0^s/s + int_{r0}^{r1} (theta-1) r^{s-1}`,
    /// with a pole at `s = 0`. Constant profile: zero (homogeneous integrand)
    /// except at `s = 0`. Compact profiles: entire in `s`.
    pub fn radial_moment(&self, profile: &Profile, s: C64) -> Result<C64> {
        let critical = s.norm() < 1e-12;
        match profile {
            Profile::One => {
                if critical {
                    Err(CalcError::LogObstruction { degree: format!("{}", s), value: f64::NAN })
                } else {
                    Ok(ZERO)
                }
            }
            Profile::Theta => {
                if critical {
                    return Err(CalcError::LogObstruction { degree: format!("{}", s), value: f64::NAN });
                }
                let t = self.table();
                let mut acc = -C64::new(self.r0, 0.0).powc(s) / s;
                for ((r, w), d) in t.radii.iter().zip(&t.weights).zip(&t.derivs) {
                    acc += (d[0] - 1.0) * C64::new(*r, 0.0).powc(s - 1.0) * *w;
                }
                Ok(acc)
            }
            Profile::Compact(poly) => {
                let t = self.table();
                let mut acc = ZERO;
                for ((r, w), d) in t.radii.iter().zip(&t.weights).zip(&t.derivs) {
                    acc += poly.eval_with(d) * C64::new(*r, 0.0).powc(s - 1.0) * *w;
                }
                Ok(acc)
            }
        }
    }

    pub fn profile_value(&self, profile: &Profile, r: f64) -> f64 {
        match profile {
            Profile::One => 1.0,
            Profile::Theta => self.theta(r),
            Profile::Compact(poly) => {
                let d = self.derivatives(r, poly.max_derivative());
                poly.eval_with(&d)
            }
        }
    }
}

/// Polynomial in the cutoff derivatives: monomials are sorted lists of
/// derivative orders (`0` is the cutoff itself).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProfilePoly {
    pub monomials: BTreeMap<Vec<u8>, f64>,
}

impl ProfilePoly {
    pub fn monomial(factors: Vec<u8>, coeff: f64) -> Self {
        let mut p = ProfilePoly::default();
        p.add_monomial(factors, coeff);
        p
    }

    pub fn add_monomial(&mut self, mut factors: Vec<u8>, coeff: f64) {
        factors.sort_unstable();
        let e = self.monomials.entry(factors.clone()).or_insert(0.0);
        *e += coeff;
        if e.abs() < 1e-15 {
            self.monomials.remove(&factors);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn mul(&self, other: &ProfilePoly) -> ProfilePoly {
        let mut out = ProfilePoly::default();
        for (fa, ca) in &self.monomials {
            for (fb, cb) in &other.monomials {
                let mut f = fa.clone();
                f.extend_from_slice(fb);
                out.add_monomial(f, ca * cb);
            }
        }
        out
    }

    /// Radial derivative by the product rule.
    pub fn derivative(&self) -> ProfilePoly {
        let mut out = ProfilePoly::default();
        for (f, c) in &self.monomials {
            for i in 0..f.len() {
                let mut g = f.clone();
                g[i] += 1;
                out.add_monomial(g, *c);
            }
        }
        out
    }

    pub fn max_derivative(&self) -> usize {
        self.monomials.keys().flat_map(|f| f.iter()).map(|d| *d as usize).max().unwrap_or(0)
    }

    pub fn eval_with(&self, derivs: &[f64]) -> f64 {
        self.monomials
            .iter()
            .map(|(f, c)| c * f.iter().map(|d| derivs[*d as usize]).product::<f64>())
            .sum()
    }
}

/// Radial profile attached to a homogeneous field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Profile {
    One,
    Theta,
    Compact(ProfilePoly),
}

impl Profile {
    fn as_poly(&self) -> ProfilePoly {
        match self {
            Profile::One => ProfilePoly::monomial(vec![], 1.0),
            Profile::Theta => ProfilePoly::monomial(vec![0], 1.0),
            Profile::Compact(p) => p.clone(),
        }
    }

    /// Splits a general polynomial into `c1 * 1 + c_theta * theta + compact`.
    pub fn split(poly: &ProfilePoly) -> Vec<(f64, Profile)> {
        let mut c_one = 0.0;
        let mut c_theta = 0.0;
        let mut compact = ProfilePoly::default();
        for (f, c) in &poly.monomials {
            if f.is_empty() {
                c_one += c;
            } else if f.iter().all(|d| *d == 0) {
                c_theta += c;
                if f.len() > 1 {
                    compact.add_monomial(f.clone(), *c);
                    compact.add_monomial(vec![0], -*c);
                }
            } else {
                compact.add_monomial(f.clone(), *c);
            }
        }
        let mut out = Vec::new();
        if c_one != 0.0 {
            out.push((c_one, Profile::One));
        }
        if c_theta != 0.0 {
            out.push((c_theta, Profile::Theta));
        }
        if !compact.is_zero() {
            out.push((1.0, Profile::Compact(compact)));
        }
        out
    }

    pub fn product(&self, other: &Profile) -> Vec<(f64, Profile)> {
        Profile::split(&self.as_poly().mul(&other.as_poly()))
    }

    /// `d/dr` of the profile, split into canonical pieces.
    pub fn radial_derivative(&self) -> Vec<(f64, Profile)> {
        Profile::split(&self.as_poly().derivative())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_support_and_monotone() {
        let c = CutoffSpec::default();
        assert_eq!(c.theta(0.5), 0.0);
        assert_eq!(c.theta(1.0), 0.0);
        assert_eq!(c.theta(2.0), 1.0);
        assert_eq!(c.theta(3.0), 1.0);
        let mut prev = 0.0;
        for k in 0..=100 {
            let r = 1.0 + k as f64 / 100.0;
            let t = c.theta(r);
            assert!(t >= prev - 1e-15);
            prev = t;
        }
        assert!((c.theta(1.5) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn cutoff_derivative_matches_finite_difference() {
        let c = CutoffSpec::default();
        let h = 1e-5;
        let r = 1.3;
        let d = c.derivatives(r, 2);
        let fd = (c.theta(r + h) - c.theta(r - h)) / (2.0 * h);
        assert!((d[1] - fd).abs() < 1e-7);
    }

    #[test]
    fn moment_integration_by_parts() {
        // int theta' r^s dr = -s int theta r^{s-1} dr (continued)
        let c = CutoffSpec::default();
        let s = C64::new(-0.7, 0.3);
        let lhs = c.radial_moment(&Profile::Compact(ProfilePoly::monomial(vec![1], 1.0)), s + 1.0).unwrap();
        let rhs = -s * c.radial_moment(&Profile::Theta, s).unwrap();
        assert!((lhs - rhs).norm() < 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn theta_squared_splits() {
        let parts = Profile::Theta.product(&Profile::Theta);
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].1, Profile::Theta);
        let c = CutoffSpec::default();
        if let (_, Profile::Compact(p)) = &parts[1] {
            assert_eq!(c.profile_value(&Profile::Compact(p.clone()), 5.0), 0.0);
            let r = 1.4;
            let t = c.theta(r);
            assert!((c.profile_value(&Profile::Compact(p.clone()), r) - (t * t - t)).abs() < 1e-15);
        } else {
            panic!("expected compact remainder");
        }
    }
}
