//! Transversal ellipticity, Seeley resolvent parametrices with a spectral
//! parameter, parametrices and complex powers of transversal symbols.

mod power;
mod seeley;

pub use power::{
    contour_weight, contour_weight_exact, parametrix, power_components, power_components_exact, ContourSpec, Parametrix,
};
pub use seeley::{seeley_components, ResolventComponent, ResolventSymbolFamily};

use crate::numerics::C64;
use crate::symbol::{FullSymbol, PhasePoint};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticityWitness {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub quotient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticityReport {
    pub elliptic: bool,
    /// cone opening `|xi| <= epsilon |eta|` where the bound holds
    pub epsilon: Option<f64>,
    /// sampled `min |(p_m v, v)| / (|xi| + |eta|)^m` on that cone
    pub c: f64,
    /// sampled smallest singular value of `p_m` on the conormal directions
    pub conormal_singular_min: f64,
    /// sample attaining the minimum quotient on the last cone tried
    pub witness: Option<EllipticityWitness>,
}

fn unit_vectors(q: usize, count: usize) -> Vec<Vec<f64>> {
    match q {
        1 => vec![vec![1.0], vec![-1.0]],
        _ => (0..count)
            .map(|k| {
                let a = 2.0 * PI * (k as f64 + 0.25) / count as f64;
                let mut v = vec![0.0; q];
                v[0] = a.cos();
                v[1] = a.sin();
                v
            })
            .collect(),
    }
}

fn quadratic_lower_bound(m: &DMatrix<C64>, probes: &[DVector<C64>]) -> f64 {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let anti = (m - m.adjoint()).norm();
    if anti < 1e-13 * m.norm().max(1e-300) {
        // Hermitian: the numerical range is [min eig, max eig]
        let e = h.symmetric_eigen().eigenvalues;
        let (lo, hi) = (e.min(), e.max());
        return if lo > 0.0 { lo } else if hi < 0.0 { -hi } else { 0.0 };
    }
    probes
        .iter()
        .map(|v| (v.adjoint() * m * v)[(0, 0)].norm() / v.norm_squared())
        .fold(f64::INFINITY, f64::min)
}

/// Searches `epsilon = 1, 1/2, 1/4, ...` (down to `2^-10`) for a sampled
/// bound `|(p_m v, v)| >= c (|xi| + |eta|)^m |v|^2` on the cone
/// `|xi| <= epsilon |eta|`.
pub fn check_transversal_ellipticity(p: &FullSymbol) -> EllipticityReport {
    let r = p.rank;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let probes: Vec<DVector<C64>> = (0..24)
        .map(|_| DVector::from_fn(r, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
        .collect();
    let points: Vec<(Vec<f64>, Vec<f64>)> = (0..5)
        .map(|_| {
            let x = (0..p.p).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
            let y = (0..p.q).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
            (x, y)
        })
        .collect();
    let etas = unit_vectors(p.q, 16);
    let xis = if p.p == 1 { vec![vec![1.0], vec![-1.0]] } else { unit_vectors(p.p, 8) };
    let eval = |x: &[f64], y: &[f64], xi: &[f64], eta: &[f64]| -> DMatrix<C64> {
        let v = p.principal(&PhasePoint { x: x.to_vec(), y: y.to_vec(), xi: xi.to_vec(), eta: eta.to_vec() });
        DMatrix::from_fn(r, r, |i, j| v[i * r + j])
    };
    let mut conormal: f64 = f64::INFINITY;
    for (x, y) in &points {
        for eta in &etas {
            let m = eval(x, y, &vec![0.0; p.p], eta);
            conormal = conormal.min(m.singular_values().min());
        }
    }
    let mut eps = 1.0;
    let mut last_witness = None;
    let mut last_c = 0.0;
    for _ in 0..=10 {
        let mut min = f64::INFINITY;
        let mut witness = None;
        for (x, y) in &points {
            for eta in &etas {
                for frac in [0.0, 0.25, 0.5, 0.75, 1.0] {
                    for dir in &xis {
                        let xi: Vec<f64> = dir.iter().map(|d| d * frac * eps).collect();
                        let xn: f64 = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
                        let m = eval(x, y, &xi, eta);
                        let qt = quadratic_lower_bound(&m, &probes) / (xn + 1.0).powf(p.order);
                        if qt < min {
                            min = qt;
                            witness = Some(EllipticityWitness { x: x.clone(), y: y.clone(), xi, eta: eta.clone(), quotient: qt });
                        }
                    }
                }
            }
        }
        if min > 1e-8 {
            return EllipticityReport {
                elliptic: true,
                epsilon: Some(eps),
                c: min,
                conormal_singular_min: conormal,
                witness,
            };
        }
        last_witness = witness;
        last_c = min;
        eps *= 0.5;
    }
    EllipticityReport { elliptic: false, epsilon: None, c: last_c, conormal_singular_min: conormal, witness: last_witness }
}
