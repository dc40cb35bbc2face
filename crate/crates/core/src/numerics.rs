//! Shared numeric kernels: truncated Taylor jets, double-exponential
//! quadrature, small dense complex matrices stored in flat slices,
//! periodic spectral differentiation and Laurent coefficient extraction.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

pub type C64 = Complex64;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Truncated Taylor expansion `sum c_k h^k` about a fixed point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub coeffs: Vec<f64>,
}

impl Jet {
    pub fn constant(value: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = value;
        Jet { coeffs }
    }

    /// The identity variable expanded at `at`.
    pub fn variable(at: f64, order: usize) -> Self {
        let mut j = Jet::constant(at, order);
        if order > 0 {
            j.coeffs[1] = 1.0;
        }
        j
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// k-th derivative at the expansion point.
    pub fn derivative(&self, k: usize) -> f64 {
        if k >= self.coeffs.len() {
            return 0.0;
        }
        let mut fact = 1.0;
        for i in 2..=k {
            fact *= i as f64;
        }
        self.coeffs[k] * fact
    }

    pub fn add(&self, other: &Jet) -> Jet {
        Jet {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet { coeffs: self.coeffs.iter().map(|a| a * s).collect() }
    }

    pub fn shift(&self, s: f64) -> Jet {
        let mut j = self.clone();
        j.coeffs[0] += s;
        j
    }

    pub fn mul(&self, other: &Jet) -> Jet {
        let n = self.coeffs.len();
        let mut out = vec![0.0; n];
        for i in 0..n {
            for j in 0..n - i {
                out[i + j] += self.coeffs[i] * other.coeffs[j];
            }
        }
        Jet { coeffs: out }
    }

    pub fn recip(&self) -> Jet {
        let n = self.coeffs.len();
        let a0 = self.coeffs[0];
        let mut out = vec![0.0; n];
        out[0] = 1.0 / a0;
        for k in 1..n {
            let mut s = 0.0;
            for j in 1..=k {
                s += self.coeffs[j] * out[k - j];
            }
            out[k] = -s / a0;
        }
        Jet { coeffs: out }
    }

    pub fn exp(&self) -> Jet {
        let n = self.coeffs.len();
        let mut out = vec![0.0; n];
        out[0] = self.coeffs[0].exp();
        for k in 1..n {
            let mut s = 0.0;
            for j in 1..=k {
                s += j as f64 * self.coeffs[j] * out[k - j];
            }
            out[k] = s / k as f64;
        }
        Jet { coeffs: out }
    }
}

/// Nodes and weights of the tanh-sinh rule on `[a, b]`.
///
/// Each node is returned together with its distances to both endpoints,
/// computed without cancellation, so integrands with algebraic endpoint
/// singularities can be evaluated accurately.
#[derive(Debug, Clone)]
pub struct TanhSinh {
    pub nodes: Vec<(f64, f64, f64)>,
    pub weights: Vec<f64>,
}

impl TanhSinh {
    pub fn new(a: f64, b: f64, step: f64) -> Self {
        let half = 0.5 * (b - a);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let tmax = 4.5;
        let n = (tmax / step).ceil() as i64;
        for k in -n..=n {
            let t = k as f64 * step;
            let u = 0.5 * PI * t.sinh();
            let ch = u.cosh();
            let w = 0.5 * PI * t.cosh() / (ch * ch) * step * half;
            if w < 1e-300 || !w.is_finite() {
                continue;
            }
            // 1 + x and 1 - x for x = tanh(u)
            let one_plus = 2.0 / (1.0 + (-2.0 * u).exp());
            let one_minus = 2.0 / (1.0 + (2.0 * u).exp());
            let dl = half * one_plus;
            let dr = half * one_minus;
            if dl <= 0.0 || dr <= 0.0 {
                continue;
            }
            let x = if dl < dr { a + dl } else { b - dr };
            nodes.push((x, dl, dr));
            weights.push(w);
        }
        TanhSinh { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64, f64, f64) -> C64>(&self, mut f: F) -> C64 {
        let mut acc = ZERO;
        for ((x, dl, dr), w) in self.nodes.iter().zip(&self.weights) {
            acc += f(*x, *dl, *dr) * *w;
        }
        acc
    }
}

/// Integral over `[a, inf)` of a function decaying at least like `r^{-1-eps}`,
/// computed through `r = a / u` with a tanh-sinh rule in `u`.
pub fn integrate_to_infinity<F: FnMut(f64) -> C64>(a: f64, rule: &TanhSinh, mut f: F) -> C64 {
    rule.integrate(|_, du, _| {
        let r = a / du;
        f(r) * (a / (du * du))
    })
}

/// Unit-interval rule shared by integrate_to_infinity callers.
pub fn unit_rule() -> TanhSinh {
    TanhSinh::new(0.0, 1.0, 1.0 / 48.0)
}

// ---------------------------------------------------------------------------
// flat r x r complex matrices

pub fn mat_mul_into(a: &[C64], b: &[C64], r: usize, out: &mut [C64]) {
    for i in 0..r {
        for j in 0..r {
            let mut s = ZERO;
            for k in 0..r {
                s += a[i * r + k] * b[k * r + j];
            }
            out[i * r + j] = s;
        }
    }
}

pub fn mat_mul_acc(a: &[C64], b: &[C64], r: usize, scale: C64, out: &mut [C64]) {
    for i in 0..r {
        for j in 0..r {
            let mut s = ZERO;
            for k in 0..r {
                s += a[i * r + k] * b[k * r + j];
            }
            out[i * r + j] += s * scale;
        }
    }
}

pub fn mat_trace(a: &[C64], r: usize) -> C64 {
    (0..r).map(|i| a[i * r + i]).sum()
}

pub fn mat_conj_transpose(a: &[C64], r: usize) -> Vec<C64> {
    let mut out = vec![ZERO; r * r];
    for i in 0..r {
        for j in 0..r {
            out[j * r + i] = a[i * r + j].conj();
        }
    }
    out
}

pub fn identity(r: usize) -> Vec<C64> {
    let mut out = vec![ZERO; r * r];
    for i in 0..r {
        out[i * r + i] = ONE;
    }
    out
}

pub fn max_abs(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Kahan-compensated complex sum in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = C64>>(it: I) -> C64 {
    let mut sum = ZERO;
    let mut c = ZERO;
    for x in it {
        let y = x - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

// ---------------------------------------------------------------------------
// periodic grids

/// Signed frequency of DFT bin `k` on an `n`-point grid.
pub fn freq_of_bin(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Applies a per-frequency multiplier along one axis of a strided array.
///
/// `data` holds `count` independent lines; line `l` occupies positions
/// `base(l) + j * stride` for `j < n`.
pub fn apply_fourier_multiplier<F, B>(data: &mut [C64], n: usize, stride: usize, bases: B, mult: F)
where
    F: Fn(i64) -> C64,
    B: IntoIterator<Item = usize>,
{
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let factors: Vec<C64> = (0..n)
        .map(|k| {
            let f = freq_of_bin(k, n);
            if n % 2 == 0 && k == n / 2 {
                ZERO
            } else {
                mult(f)
            }
        })
        .collect();
    let mut line = vec![ZERO; n];
    for base in bases {
        for j in 0..n {
            line[j] = data[base + j * stride];
        }
        fwd.process(&mut line);
        for (v, f) in line.iter_mut().zip(&factors) {
            *v *= *f / n as f64;
        }
        inv.process(&mut line);
        for j in 0..n {
            data[base + j * stride] = line[j];
        }
    }
}

/// Weights `w_j(x)` of trigonometric interpolation on `n` equispaced points
/// of a circle with circumference `length`.
pub fn trig_interp_weights(x: f64, n: usize, length: f64) -> Vec<C64> {
    let h = length / n as f64;
    let half = (n as i64 - 1) / 2;
    let even = n % 2 == 0;
    (0..n)
        .map(|j| {
            let d = 2.0 * PI * (x - j as f64 * h) / length;
            let mut s = ZERO;
            for k in -half..=half {
                s += C64::from_polar(1.0, k as f64 * d);
            }
            if even {
                s += C64::new((n as f64 / 2.0 * d).cos(), 0.0);
            }
            s / n as f64
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Laurent coefficients on a circle

/// Laurent coefficients of `f` about `center`, sampled at `samples`
/// equispaced points on the circle of radius `radius`.
///
/// On an equispaced circle the least-squares fit of a Laurent polynomial
/// with `samples` terms reduces to the discrete Fourier transform of the
/// samples; coefficient `n` (of `(z - center)^n`) is returned for
/// `n = -samples/2 .. samples/2`.
#[derive(Debug, Clone)]
pub struct LaurentFit {
    pub center: C64,
    pub radius: f64,
    pub coeffs: Vec<(i64, C64)>,
    pub uncertainty: f64,
}

impl LaurentFit {
    pub fn coefficient(&self, n: i64) -> C64 {
        self.coeffs.iter().find(|(k, _)| *k == n).map(|(_, c)| *c).unwrap_or(ZERO)
    }

    pub fn residue(&self) -> C64 {
        self.coefficient(-1)
    }

    /// Pole location estimate `center + c_{-2}/c_{-1}`, exact for a simple
    /// pole displaced from the center by less than the radius.
    pub fn pole_location(&self) -> C64 {
        let r = self.residue();
        if r.norm() == 0.0 {
            return self.center;
        }
        self.center + self.coefficient(-2) / r
    }
}

pub fn laurent_fit<F: FnMut(C64) -> C64>(center: C64, radius: f64, samples: usize, mut f: F) -> LaurentFit {
    let vals: Vec<C64> = (0..samples)
        .map(|k| {
            let phi = 2.0 * PI * k as f64 / samples as f64;
            f(center + C64::from_polar(radius, phi))
        })
        .collect();
    let half = samples as i64 / 2;
    let mut coeffs = Vec::new();
    for n in -half..half {
        let mut s = ZERO;
        for (k, v) in vals.iter().enumerate() {
            let phi = 2.0 * PI * k as f64 / samples as f64;
            s += v * C64::from_polar(1.0, -(n as f64) * phi);
        }
        s /= samples as f64;
        coeffs.push((n, s * radius.powi(-(n as i32))));
    }
    // aliasing estimate from the tail of the normalized coefficients
    let fmax = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let tail = coeffs
        .iter()
        .filter(|(n, _)| n.abs() >= half - 3)
        .map(|(n, c)| c.norm() * radius.powi(*n as i32))
        .fold(0.0, f64::max);
    let uncertainty = (tail + 1e-14 * fmax) * radius;
    LaurentFit { center, radius, coeffs, uncertainty }
}

// ---------------------------------------------------------------------------
// special functions used by reports

/// Gamma function for real arguments (Lanczos, g = 7).
pub fn gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut a = G[0];
    let t = x + 7.5;
    for (i, g) in G.iter().enumerate().skip(1) {
        a += g / (x + i as f64);
    }
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

pub fn binomial(z: C64, k: usize) -> C64 {
    let mut out = ONE;
    for j in 0..k {
        out *= (z - j as f64) / (j as f64 + 1.0);
    }
    out
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jet_exp_of_reciprocal_matches_closed_form() {
        // f(t) = exp(-1/t) at t = 0.5: f' = f / t^2
        let t = Jet::variable(0.5, 3);
        let f = t.recip().scale(-1.0).exp();
        let v = (-2.0f64).exp();
        assert!((f.derivative(1) - v * 4.0).abs() < 1e-12);
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularity() {
        let rule = TanhSinh::new(0.0, 1.0, 1.0 / 40.0);
        let v = rule.integrate(|_, dl, _| C64::new(dl.powf(-0.5), 0.0));
        assert!((v.re - 2.0).abs() < 1e-12, "{}", v.re);
    }

    #[test]
    fn infinite_interval_power_law() {
        let rule = unit_rule();
        let v = integrate_to_infinity(2.0, &rule, |r| C64::new(r.powf(-2.5), 0.0));
        let exact = 2.0f64.powf(-1.5) / 1.5;
        assert!((v.re - exact).abs() < 1e-12);
    }

    #[test]
    fn laurent_fit_recovers_simple_pole() {
        let fit = laurent_fit(C64::new(0.5, 0.0), 0.05, 32, |z| 3.0 / (z - 0.501) + z * z);
        assert!((fit.residue() - 3.0).norm() < 1e-10);
        assert!((fit.pole_location().re - 0.501).abs() < 1e-4);
    }

    #[test]
    fn gamma_half_is_sqrt_pi() {
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-13);
        assert!((gamma(5.0) - 24.0).abs() < 1e-10);
    }

    #[test]
    fn trig_interp_reproduces_band_limited() {
        let n = 9;
        let l = 2.0;
        let f = |x: f64| (2.0 * PI * 3.0 * x / l).cos();
        let w = trig_interp_weights(0.37, n, l);
        let v: C64 = (0..n).map(|j| w[j] * f(j as f64 * l / n as f64)).sum();
        assert!((v.re - f(0.37)).abs() < 1e-12);
    }
}
