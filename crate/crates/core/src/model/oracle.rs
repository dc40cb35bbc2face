//! Brute-force spectral oracles on truncated mode bases, and the Riemann
//! zeta function for comparison values.

use super::grid::GridOperator;
use crate::error::{CalcError, Result};
use crate::numerics::{C64, ONE, ZERO};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralFunction {
    /// `e^{-t P}`
    Heat(f64),
    /// `P^{-z}` on the nonzero spectrum, `0` on the kernel
    Zeta(C64),
}

#[derive(Debug, Clone, Copy)]
pub enum OracleTask<'a> {
    Heat(f64),
    Zeta(C64),
    /// `tr R(k) f(P)` for the quantized kernel `R(k)`
    PairedTrace { kernel: &'a GridOperator, function: SpectralFunction },
}

fn apply(f: SpectralFunction, scale: f64) -> impl Fn(f64) -> C64 {
    let cut = 1e-12 * scale.max(1.0);
    move |l| match f {
        SpectralFunction::Heat(t) => C64::new((-t * l).exp(), 0.0),
        SpectralFunction::Zeta(z) => {
            if l.abs() <= cut {
                ZERO
            } else {
                C64::new(l, 0.0).powc(-z)
            }
        }
    }
}

/// Exact trace of `f(P)` (or `R(k) f(P)`) on the truncation, by
/// diagonalizing each block of the Hermitian positive `P`.
pub fn eigen_oracle(p: &GridOperator, task: OracleTask) -> Result<C64> {
    let (function, kernel) = match task {
        OracleTask::Heat(t) => (SpectralFunction::Heat(t), None),
        OracleTask::Zeta(z) => (SpectralFunction::Zeta(z), None),
        OracleTask::PairedTrace { kernel, function } => (function, Some(kernel)),
    };
    let eig = p.hermitian_eigen()?;
    let scale = eig.iter().flat_map(|(_, v, _)| v.iter().map(|x| x.abs())).fold(0.0, f64::max);
    let min = eig.iter().flat_map(|(_, v, _)| v.iter().copied()).fold(f64::INFINITY, f64::min);
    if min < -1e-10 * scale.max(1.0) {
        return Err(CalcError::Precondition(format!("operator is not positive (eigenvalue {min:e})")));
    }
    let f = apply(function, scale);
    let fp = p.spectral_function(f, "f(P)")?;
    match kernel {
        None => Ok(fp.trace()),
        Some(k) => Ok(k.mul(&fp)?.trace()),
    }
}

const BERNOULLI: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// `zeta_R(s)` by Euler-Maclaurin summation (`s != 1`, `Re s > -15`).
pub fn riemann_zeta(s: C64) -> Result<C64> {
    if (s - ONE).norm() < 1e-14 {
        return Err(CalcError::Precondition("zeta has a pole at s = 1".into()));
    }
    if s.re <= -15.0 {
        return Err(CalcError::Precondition(format!("zeta evaluation needs Re s > -15, got {s}")));
    }
    let n = 40usize;
    let nf = C64::new(n as f64, 0.0);
    let mut sum = ZERO;
    for k in 1..n {
        sum += C64::new(k as f64, 0.0).powc(-s);
    }
    sum += nf.powc(ONE - s) / (s - ONE) + nf.powc(-s) * 0.5;
    // rising factorial s (s+1) ... (s+2k-2) / (2k)!
    let mut rising = s;
    let mut fact = 2.0;
    for (k, b) in BERNOULLI.iter().enumerate() {
        let kk = k + 1;
        if kk > 1 {
            let a = (2 * kk - 3) as f64;
            rising *= (s + a) * (s + a + 1.0);
            fact *= (2 * kk - 1) as f64 * (2 * kk) as f64;
        }
        sum += rising * (*b / fact) * nf.powc(-s - (2 * kk - 1) as f64);
    }
    Ok(sum)
}
