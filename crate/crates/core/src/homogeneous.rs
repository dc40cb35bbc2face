//! Homogeneous matrix-valued functions on `R^q \ {0}` (q = 1, 2), their
//! sphere integrals, homogeneous distribution extensions, and the
//! regularized fiber integral on classical symbols of non-integer order.

use crate::cutoff::{CutoffSpec, Profile};
use crate::error::{CalcError, Result};
use crate::numerics::{
    apply_fourier_multiplier, factorial, integrate_to_infinity, mat_trace, trig_interp_weights, unit_rule, Jet,
    TanhSinh, C64, I, ONE, ZERO,
};
use std::f64::consts::PI;
use std::sync::Arc;

pub const DEFAULT_CIRCLE_NODES: usize = 256;

/// Quadrature on the unit sphere `S^{q-1}`: the two-point set for `q = 1`,
/// the trapezoid rule for `q = 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid {
    q: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl SphereGrid {
    pub fn new(q: usize, circle_nodes: usize) -> Result<Self> {
        match q {
            1 => Ok(SphereGrid { q, nodes: vec![1.0, -1.0], weights: vec![1.0, 1.0] }),
            2 => {
                if circle_nodes < 3 {
                    return Err(CalcError::Precondition("circle quadrature needs at least 3 nodes".into()));
                }
                let n = circle_nodes;
                let mut nodes = Vec::with_capacity(2 * n);
                for k in 0..n {
                    let t = 2.0 * PI * k as f64 / n as f64;
                    nodes.push(t.cos());
                    nodes.push(t.sin());
                }
                Ok(SphereGrid { q, nodes, weights: vec![2.0 * PI / n as f64; n] })
            }
            _ => Err(CalcError::Precondition(format!("codimension {q} unsupported (1 or 2)"))),
        }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.q..(i + 1) * self.q]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Interpolation weights over the nodes for an arbitrary unit direction.
    pub fn interpolation(&self, direction: &[f64]) -> Vec<(usize, f64)> {
        if self.q == 1 {
            return vec![(if direction[0] >= 0.0 { 0 } else { 1 }, 1.0)];
        }
        let angle = direction[1].atan2(direction[0]).rem_euclid(2.0 * PI);
        trig_interp_weights(angle, self.len(), 2.0 * PI)
            .into_iter()
            .enumerate()
            .map(|(i, w)| (i, w.re))
            .collect()
    }

    /// Angular derivative `d/dphi` of node samples stored with the given
    /// stride (the circle case only).
    pub fn angular_derivative(&self, data: &mut [C64], stride: usize, bases: impl IntoIterator<Item = usize>) {
        debug_assert_eq!(self.q, 2);
        apply_fourier_multiplier(data, self.len(), stride, bases, |k| I * k as f64);
    }
}

/// Homogeneous function of degree `degree`, stored as samples on the sphere.
#[derive(Debug, Clone)]
pub struct HomogeneousComponent {
    pub degree: C64,
    pub rank: usize,
    pub grid: Arc<SphereGrid>,
    /// `values[node * r * r + i * r + j]`
    pub values: Vec<C64>,
}

impl HomogeneousComponent {
    pub fn new(degree: C64, rank: usize, grid: Arc<SphereGrid>, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() * rank * rank {
            return Err(CalcError::DimensionMismatch(format!(
                "expected {} samples, got {}",
                grid.len() * rank * rank,
                values.len()
            )));
        }
        Ok(HomogeneousComponent { degree, rank, grid, values })
    }

    pub fn from_fn<F: Fn(&[f64]) -> Vec<C64>>(degree: C64, rank: usize, grid: Arc<SphereGrid>, f: F) -> Self {
        let mut values = Vec::with_capacity(grid.len() * rank * rank);
        for i in 0..grid.len() {
            values.extend(f(grid.node(i)));
        }
        HomogeneousComponent { degree, rank, grid, values }
    }

    pub fn scalar<F: Fn(&[f64]) -> C64>(degree: C64, grid: Arc<SphereGrid>, f: F) -> Self {
        Self::from_fn(degree, 1, grid, |w| vec![f(w)])
    }

    pub fn q(&self) -> usize {
        self.grid.q()
    }

    /// Matrix value at `eta != 0`.
    pub fn eval(&self, eta: &[f64]) -> Vec<C64> {
        let r = self.rank;
        let norm = eta.iter().map(|e| e * e).sum::<f64>().sqrt();
        let dir: Vec<f64> = eta.iter().map(|e| e / norm).collect();
        let scale = C64::new(norm, 0.0).powc(self.degree);
        let mut out = vec![ZERO; r * r];
        for (i, w) in self.grid.interpolation(&dir) {
            for (o, v) in out.iter_mut().zip(&self.values[i * r * r..(i + 1) * r * r]) {
                *o += v * w;
            }
        }
        out.iter_mut().for_each(|o| *o *= scale);
        out
    }

    pub fn node_trace(&self, i: usize) -> C64 {
        let r = self.rank;
        mat_trace(&self.values[i * r * r..(i + 1) * r * r], r)
    }

    /// `eta^alpha * sigma`, homogeneous of degree `d + |alpha|`.
    pub fn times_monomial(&self, alpha: &[usize]) -> Self {
        let r2 = self.rank * self.rank;
        let mut out = self.clone();
        for i in 0..self.grid.len() {
            let w = self.grid.node(i);
            let m: f64 = alpha.iter().zip(w).map(|(a, x)| x.powi(*a as i32)).product();
            out.values[i * r2..(i + 1) * r2].iter_mut().for_each(|v| *v *= m);
        }
        out.degree += alpha.iter().sum::<usize>() as f64;
        out
    }

    pub fn sphere_integral(&self) -> C64 {
        (0..self.grid.len()).map(|i| self.node_trace(i) * self.grid.weights()[i]).sum()
    }
}

/// `int_{|eta|=1} Tr sigma(eta) d eta`.
pub fn sphere_integral(h: &HomogeneousComponent, grid: &SphereGrid) -> Result<C64> {
    if h.q() != grid.q() || h.grid.len() != grid.len() {
        return Err(CalcError::DimensionMismatch(format!(
            "component sampled on q={} ({} nodes), grid q={} ({} nodes)",
            h.q(),
            h.grid.len(),
            grid.q(),
            grid.len()
        )));
    }
    Ok(h.sphere_integral())
}

/// Multi-indices of total order `k` in `q` variables.
pub fn multi_indices(q: usize, k: usize) -> Vec<Vec<usize>> {
    if q == 1 {
        return vec![vec![k]];
    }
    (0..=k).rev().map(|a| vec![a, k - a]).collect()
}

pub fn multi_factorial(alpha: &[usize]) -> f64 {
    alpha.iter().map(|a| factorial(*a)).product()
}

/// Smooth rapidly decaying test function together with its Taylor jet at 0.
#[derive(Clone)]
pub struct TestFunction {
    pub q: usize,
    value: Arc<dyn Fn(&[f64]) -> C64 + Send + Sync>,
    /// `(alpha, d^alpha phi(0))` for all `|alpha| <= jet_order`
    jet: Vec<(Vec<usize>, C64)>,
    pub jet_order: usize,
    /// length scale over which the Taylor series at 0 is accurate
    pub scale: f64,
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunction").field("q", &self.q).field("jet_order", &self.jet_order).finish()
    }
}

impl TestFunction {
    pub fn new(
        q: usize,
        value: Arc<dyn Fn(&[f64]) -> C64 + Send + Sync>,
        jet: Vec<(Vec<usize>, C64)>,
        scale: f64,
    ) -> Self {
        let jet_order = jet.iter().map(|(a, _)| a.iter().sum::<usize>()).max().unwrap_or(0);
        TestFunction { q, value, jet, jet_order, scale }
    }

    /// `prod_i exp(-(eta_i - c_i)^2 / (2 w^2))` with its jet to `order`.
    pub fn gaussian(center: &[f64], width: f64, order: usize) -> Self {
        let q = center.len();
        let c = center.to_vec();
        let one_d: Vec<Jet> = c
            .iter()
            .map(|ci| {
                let u = Jet::variable(0.0, order).shift(-ci).scale(1.0 / width);
                u.mul(&u).scale(-0.5).exp()
            })
            .collect();
        let mut jet = Vec::new();
        for k in 0..=order {
            for alpha in multi_indices(q, k) {
                let v: f64 = alpha.iter().zip(&one_d).map(|(a, j)| j.derivative(*a)).product();
                jet.push((alpha, C64::new(v, 0.0)));
            }
        }
        let value = Arc::new(move |eta: &[f64]| {
            let s: f64 = eta.iter().zip(&c).map(|(e, ci)| (e - ci) * (e - ci)).sum();
            C64::new((-0.5 * s / (width * width)).exp(), 0.0)
        });
        TestFunction::new(q, value, jet, width)
    }

    pub fn eval(&self, eta: &[f64]) -> C64 {
        (self.value)(eta)
    }

    pub fn derivative_at_zero(&self, alpha: &[usize]) -> Option<C64> {
        self.jet.iter().find(|(a, _)| a.as_slice() == alpha).map(|(_, v)| *v)
    }

    /// `phi_lambda(eta) = lambda^q phi(lambda eta)`.
    pub fn dilated(&self, lambda: f64) -> Self {
        let inner = self.value.clone();
        let q = self.q;
        let value = Arc::new(move |eta: &[f64]| {
            let s: Vec<f64> = eta.iter().map(|e| e * lambda).collect();
            inner(&s) * lambda.powi(q as i32)
        });
        let jet = self
            .jet
            .iter()
            .map(|(a, v)| (a.clone(), v * lambda.powi((q + a.iter().sum::<usize>()) as i32)))
            .collect();
        TestFunction::new(q, value, jet, self.scale / lambda)
    }
}

#[derive(Debug, Clone)]
pub struct ExtensionResult {
    pub pairing: C64,
    /// `(alpha, S(eta^alpha sigma) / alpha!)` for `|alpha| = k` at degree `-q-k`
    pub log_coefficients: Vec<(Vec<usize>, C64)>,
    pub is_canonical: bool,
}

/// Integer `k >= 0` with `degree = -q - k`, if the degree is critical.
pub fn critical_index(degree: C64, q: usize) -> Option<usize> {
    let k = -degree.re - q as f64;
    if degree.im.abs() < 1e-12 && k > -1e-12 && (k - k.round()).abs() < 1e-12 {
        Some(k.round() as usize)
    } else {
        None
    }
}

/// Pairs the homogeneous extension of `h` with `phi`.
///
/// Convention at every degree: the Taylor jet of `phi` of the minimal order
/// making the remainder integrable is subtracted inside the unit ball and
/// its moments are added back through their analytically continued radial
/// integrals; at a critical degree `-q-k` the divergent order-`k` moments
/// are dropped (finite part), which leaves the logarithmic scaling defect.
pub fn extend_homogeneous(h: &HomogeneousComponent, phi: &TestFunction) -> Result<ExtensionResult> {
    let q = h.q();
    if phi.q != q {
        return Err(CalcError::DimensionMismatch(format!("test function in R^{} vs component in R^{q}", phi.q)));
    }
    let d = h.degree;
    let crit = critical_index(d, q);
    let mut jet_k = 0usize;
    while d.re + q as f64 + jet_k as f64 + 1.0 <= 1e-12 {
        jet_k += 1;
    }
    if phi.jet_order < jet_k {
        return Err(CalcError::MissingJet { needed: jet_k, available: phi.jet_order });
    }
    let s = d + q as f64;
    let grid = &h.grid;
    let traces: Vec<C64> = (0..grid.len()).map(|i| h.node_trace(i) * grid.weights()[i]).collect();

    // S(h w^alpha) for all jets
    let moment = |alpha: &[usize]| h.times_monomial(alpha).sphere_integral();

    let taylor = |eta: &[f64], max: usize| -> C64 {
        let mut acc = ZERO;
        for k in 0..=max {
            for alpha in multi_indices(q, k) {
                let c = phi.derivative_at_zero(&alpha).unwrap_or(ZERO);
                let m: f64 = alpha.iter().zip(eta).map(|(a, e)| e.powi(*a as i32)).product();
                acc += c * m / multi_factorial(&alpha);
            }
        }
        acc
    };
    let angular = |r: f64, subtract: bool| -> C64 {
        let mut acc = ZERO;
        for i in 0..grid.len() {
            let eta: Vec<f64> = grid.node(i).iter().map(|w| w * r).collect();
            let mut v = phi.eval(&eta);
            if subtract {
                v -= taylor(&eta, jet_k);
            }
            acc += traces[i] * v;
        }
        acc
    };

    // near the origin the subtracted remainder is replaced by its series
    let extra = phi.jet_order.saturating_sub(jet_k);
    let eps = if extra >= 8 { (0.05 * phi.scale).min(0.05) } else { 0.0 };
    let rule = TanhSinh::new(eps, 1.0, 1.0 / 40.0);
    let mut pairing = rule.integrate(|r, _, _| C64::new(r, 0.0).powc(s - 1.0) * angular(r, true));
    if eps > 0.0 {
        for k in jet_k + 1..=phi.jet_order {
            for alpha in multi_indices(q, k) {
                let c = phi.derivative_at_zero(&alpha).unwrap_or(ZERO) / multi_factorial(&alpha);
                let e = s + k as f64;
                pairing += c * moment(&alpha) * C64::new(eps, 0.0).powc(e) / e;
            }
        }
    }
    for k in 0..=jet_k {
        if crit == Some(k) {
            continue;
        }
        for alpha in multi_indices(q, k) {
            let c = phi.derivative_at_zero(&alpha).unwrap_or(ZERO) / multi_factorial(&alpha);
            pairing += c * moment(&alpha) / (s + k as f64);
        }
    }
    let urule = unit_rule();
    pairing += integrate_to_infinity(1.0, &urule, |r| C64::new(r, 0.0).powc(s - 1.0) * angular(r, false));

    let log_coefficients = match crit {
        Some(k) => multi_indices(q, k)
            .into_iter()
            .map(|alpha| {
                let v = moment(&alpha) / multi_factorial(&alpha);
                (alpha, v)
            })
            .collect(),
        None => Vec::new(),
    };
    Ok(ExtensionResult { pairing, log_coefficients, is_canonical: crit.is_none() })
}

pub type EtaFunction = Arc<dyn Fn(&[f64]) -> Vec<C64> + Send + Sync>;

/// A classical symbol in the fiber variable only: an expansion
/// `sum_j theta * sigma_{z-j}` plus, optionally, the exact function whose
/// expansion it is (the difference is then integrated numerically).
#[derive(Clone)]
pub struct EtaSymbol {
    pub order: C64,
    pub components: Vec<HomogeneousComponent>,
    pub cutoff: CutoffSpec,
    pub exact: Option<EtaFunction>,
}

impl std::fmt::Debug for EtaSymbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EtaSymbol")
            .field("order", &self.order)
            .field("components", &self.components.len())
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl EtaSymbol {
    pub fn new(order: C64, components: Vec<HomogeneousComponent>, cutoff: CutoffSpec, exact: Option<EtaFunction>) -> Result<Self> {
        let first = components.first().ok_or_else(|| CalcError::Precondition("empty expansion".into()))?;
        for (j, c) in components.iter().enumerate() {
            let expected = order - j as f64;
            if (c.degree - expected).norm() > 1e-12 {
                return Err(CalcError::DegreeLadder { index: j, found: format!("{}", c.degree), expected: format!("{expected}") });
            }
            if c.rank != first.rank || c.grid != first.grid {
                return Err(CalcError::DimensionMismatch("components must share rank and sphere grid".into()));
            }
        }
        Ok(EtaSymbol { order, components, cutoff, exact })
    }

    pub fn q(&self) -> usize {
        self.components[0].q()
    }

    pub fn rank(&self) -> usize {
        self.components[0].rank
    }

    /// Truncated classical sum at `eta` using components `0..=depth`.
    pub fn expansion(&self, eta: &[f64], depth: usize) -> Vec<C64> {
        let r = self.rank();
        let norm = eta.iter().map(|e| e * e).sum::<f64>().sqrt();
        let th = self.cutoff.theta(norm);
        let mut out = vec![ZERO; r * r];
        if th == 0.0 {
            return out;
        }
        for c in self.components.iter().take(depth + 1) {
            for (o, v) in out.iter_mut().zip(c.eval(eta)) {
                *o += v * th;
            }
        }
        out
    }

    /// Residue density `S(sigma_{-q})` (zero if no component has degree `-q`).
    pub fn residue(&self) -> C64 {
        self.components
            .iter()
            .filter(|c| critical_index(c.degree, self.q()) == Some(0))
            .map(|c| c.sphere_integral())
            .sum()
    }
}

/// Regularized integral `(2 pi)^{-q} int Tr sigma d eta`, holomorphically
/// continued in the order through the homogeneous components.
pub fn regularized_integral(s: &EtaSymbol, depth: usize) -> Result<C64> {
    let q = s.q();
    if depth >= s.components.len() {
        return Err(CalcError::TruncationTooSmall { depth: s.components.len().saturating_sub(1), required: depth as f64 });
    }
    if s.exact.is_some() && (depth as f64) < s.order.re + q as f64 {
        return Err(CalcError::TruncationTooSmall { depth, required: s.order.re + q as f64 });
    }
    let mut total = ZERO;
    for c in s.components.iter().take(depth + 1) {
        let sint = c.sphere_integral();
        let moment = match s.cutoff.radial_moment(&Profile::Theta, c.degree + q as f64) {
            Ok(m) => m,
            Err(_) => {
                if sint.norm() > 1e-12 {
                    return Err(CalcError::LogObstruction { degree: format!("{}", c.degree), value: sint.norm() });
                }
                continue;
            }
        };
        total += sint * moment;
    }
    if let Some(exact) = &s.exact {
        let grid = s.components[0].grid.clone();
        let r = s.rank();
        let radial = |rad: f64| -> C64 {
            let mut acc = ZERO;
            for i in 0..grid.len() {
                let eta: Vec<f64> = grid.node(i).iter().map(|w| w * rad).collect();
                let full = exact(&eta);
                let approx = s.expansion(&eta, depth);
                let diff: Vec<C64> = full.iter().zip(&approx).map(|(a, b)| a - b).collect();
                acc += mat_trace(&diff, r) * grid.weights()[i];
            }
            acc * rad.powi(q as i32 - 1)
        };
        let (r0, r1) = (s.cutoff.r0, s.cutoff.r1);
        total += TanhSinh::new(0.0, r0, 1.0 / 40.0).integrate(|x, _, _| radial(x));
        total += TanhSinh::new(r0, r1, 1.0 / 40.0).integrate(|x, _, _| radial(x));
        total += integrate_to_infinity(r1, &unit_rule(), radial);
    }
    Ok(total * (2.0 * PI).powi(-(q as i32)))
}

/// Plain integral `(2 pi)^{-q} int Tr sigma` of an absolutely integrable
/// function, by polar quadrature on the given sphere grid.
pub fn plain_integral(f: &EtaFunction, grid: &SphereGrid, rank: usize) -> C64 {
    let q = grid.q();
    let radial = |rad: f64| -> C64 {
        let mut acc = ZERO;
        for i in 0..grid.len() {
            let eta: Vec<f64> = grid.node(i).iter().map(|w| w * rad).collect();
            acc += mat_trace(&f(&eta), rank) * grid.weights()[i];
        }
        acc * rad.powi(q as i32 - 1)
    };
    let v = TanhSinh::new(0.0, 1.0, 1.0 / 40.0).integrate(|x, _, _| radial(x)) + integrate_to_infinity(1.0, &unit_rule(), radial);
    v * (2.0 * PI).powi(-(q as i32))
}

/// `(1 + |eta|^2)^{z/2}` with its classical expansion
/// `sum_k binom(z/2, k) |eta|^{z - 2k}` to `depth`.
pub fn japanese_bracket_power(z: C64, q: usize, depth: usize, grid: Arc<SphereGrid>, cutoff: CutoffSpec) -> Result<EtaSymbol> {
    let comps = (0..=depth)
        .map(|j| {
            let c = if j % 2 == 0 { crate::numerics::binomial(z / 2.0, j / 2) } else { ZERO };
            HomogeneousComponent::scalar(z - j as f64, grid.clone(), move |_| c)
        })
        .collect();
    let exact: EtaFunction = Arc::new(move |eta: &[f64]| {
        let s: f64 = eta.iter().map(|e| e * e).sum();
        vec![C64::new(1.0 + s, 0.0).powc(z / 2.0)]
    });
    let _ = q;
    EtaSymbol::new(z, comps, cutoff, Some(exact))
}

/// Cauchy-Riemann defect of `f` at `z` with step `h`:
/// `|(f(z+h) - f(z-h)) - (f(z+ih) - f(z-ih)) / i| / (2h)`.
pub fn cauchy_riemann_defect<F: Fn(C64) -> Result<C64>>(f: F, z: C64, h: f64) -> Result<f64> {
    let dx = f(z + h)? - f(z - h)?;
    let dy = (f(z + I * h)? - f(z - I * h)?) / I;
    Ok((dx - dy).norm() / (2.0 * h))
}

pub fn unit_component(q: usize, degree: C64, grid: Arc<SphereGrid>) -> HomogeneousComponent {
    let _ = q;
    HomogeneousComponent::scalar(degree, grid, |_| ONE)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s1() -> Arc<SphereGrid> {
        Arc::new(SphereGrid::new(1, 0).unwrap())
    }

    fn circle(n: usize) -> Arc<SphereGrid> {
        Arc::new(SphereGrid::new(2, n).unwrap())
    }

    #[test]
    fn sphere_weights_sum() {
        let g = SphereGrid::new(1, 0).unwrap();
        assert_eq!(g.weights().iter().sum::<f64>(), 2.0);
        let g = SphereGrid::new(2, 256).unwrap();
        let s: f64 = g.weights().iter().sum();
        assert!(((s - 2.0 * PI) / (2.0 * PI)).abs() < 1e-12);
        for i in 0..g.len() {
            let w = g.node(i);
            assert!(((w[0] * w[0] + w[1] * w[1]).sqrt() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn sphere_integral_examples() {
        let g = circle(256);
        let id = HomogeneousComponent::scalar(C64::new(-0.3, 0.0), g.clone(), |_| ONE);
        assert!((sphere_integral(&id, &g).unwrap() - 2.0 * PI).norm() < 1e-12);
        let odd = HomogeneousComponent::scalar(ZERO, g.clone(), |w| C64::new(w[0], 0.0));
        assert!(sphere_integral(&odd, &g).unwrap().norm() < 1e-13);
        let s = s1();
        let two = HomogeneousComponent::scalar(ZERO, s.clone(), |w| C64::new(if w[0] > 0.0 { 3.0 } else { 5.0 }, 0.0));
        assert_eq!(sphere_integral(&two, &s).unwrap(), C64::new(8.0, 0.0));
        assert!(matches!(sphere_integral(&two, &g), Err(CalcError::DimensionMismatch(_))));
    }

    #[test]
    fn homogeneity_is_exact() {
        let g = circle(64);
        let h = HomogeneousComponent::scalar(C64::new(-1.5, 0.2), g, |w| C64::new(1.0 + w[0] * w[1], 0.0));
        let eta = [0.3, -1.1];
        let t = 3.7;
        let a = h.eval(&[eta[0] * t, eta[1] * t])[0];
        let b = h.eval(&eta)[0] * C64::new(t, 0.0).powc(h.degree);
        assert!((a - b).norm() < 1e-13 * b.norm());
    }

    #[test]
    fn odd_inverse_has_zero_obstruction() {
        let h = HomogeneousComponent::scalar(C64::new(-1.0, 0.0), s1(), |w| C64::new(w[0], 0.0));
        let phi = TestFunction::gaussian(&[0.3], 1.0, 20);
        let e = extend_homogeneous(&h, &phi).unwrap();
        assert!(!e.is_canonical);
        assert_eq!(e.log_coefficients.len(), 1);
        assert!(e.log_coefficients[0].1.norm() < 1e-15);
    }

    #[test]
    fn even_inverse_obstruction_is_two() {
        let h = HomogeneousComponent::scalar(C64::new(-1.0, 0.0), s1(), |_| ONE);
        let phi = TestFunction::gaussian(&[0.0], 1.0, 20);
        let e = extend_homogeneous(&h, &phi).unwrap();
        assert!((e.log_coefficients[0].1 - 2.0).norm() < 1e-15);
    }

    #[test]
    fn canonical_degree_pairing_matches_radial_formula() {
        // |eta|^{-1/2} against exp(-eta^2/2): 2 int_0^inf r^{-1/2} e^{-r^2/2} dr = 2^{1/4} Gamma(1/4)
        let h = HomogeneousComponent::scalar(C64::new(-0.5, 0.0), s1(), |_| ONE);
        let phi = TestFunction::gaussian(&[0.0], 1.0, 20);
        let e = extend_homogeneous(&h, &phi).unwrap();
        assert!(e.is_canonical && e.log_coefficients.is_empty());
        let exact = 2f64.powf(0.25) * crate::numerics::gamma(0.25);
        assert!((e.pairing.re - exact).abs() < 1e-10, "{} vs {exact}", e.pairing);
    }

    #[test]
    fn missing_jet_is_reported() {
        let h = HomogeneousComponent::scalar(C64::new(-3.0, 0.0), s1(), |_| ONE);
        let phi = TestFunction::gaussian(&[0.0], 1.0, 1);
        assert!(matches!(extend_homogeneous(&h, &phi), Err(CalcError::MissingJet { needed: 2, .. })));
    }

    #[test]
    fn regularized_integral_of_integrable_symbol() {
        let g = s1();
        let cutoff = CutoffSpec::default();
        let s = japanese_bracket_power(C64::new(-3.0, 0.0), 1, 2, g, cutoff).unwrap();
        let v = regularized_integral(&s, 2).unwrap();
        assert!((v.re - 1.0 / PI).abs() < 1e-12, "{v}");
    }

    #[test]
    fn regularized_integral_rejects_even_critical_component() {
        let s = japanese_bracket_power(C64::new(-1.0, 0.0), 1, 2, s1(), CutoffSpec::default()).unwrap();
        assert!(matches!(regularized_integral(&s, 2), Err(CalcError::LogObstruction { .. })));
    }

    #[test]
    fn regularized_integral_truncation_check() {
        let s = japanese_bracket_power(C64::new(0.5, 0.0), 1, 1, s1(), CutoffSpec::default()).unwrap();
        assert!(matches!(regularized_integral(&s, 1), Err(CalcError::TruncationTooSmall { .. })));
    }
}
