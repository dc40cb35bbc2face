//! Explicit foliated tori, their mode bases, tangential operators, model
//! transverse operators and brute-force spectral computations.

mod grid;
mod kernels;
mod operators;
mod oracle;
mod sobolev;
mod studies;

pub use grid::{Block, GridOperator, Mode, ModeSet};
pub use kernels::{tangential_operator, KroneckerKernel, KroneckerTerm, TangentialKernel};
pub use operators::{model_operator, ModelOperator, OperatorKind};
pub use oracle::{eigen_oracle, riemann_zeta, OracleTask, SpectralFunction};
pub use sobolev::{operator_seminorm, sobolev_norm, trace_class_check, SobolevWeight, TraceClassReport};
pub use studies::{
    conormal_ellipticity,
    commutator_norm_study, singular_value_study, BoundednessVerdict, CommutatorStudy, SingularValueStudy, StudyRow,
};

use crate::error::{CalcError, Result};
use crate::numerics::{C64, ONE, ZERO};
use crate::symbol::{HolonomyAction, HolonomySample};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

fn default_leaf_circumference() -> f64 {
    1.0
}

fn default_circumference() -> f64 {
    2.0 * PI
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Product {
        p: usize,
        q: usize,
        #[serde(default = "default_leaf_circumference")]
        leaf_circumference: f64,
        #[serde(default = "default_circumference")]
        transverse_circumference: f64,
    },
    Kronecker {
        slope: f64,
        #[serde(default = "default_circumference")]
        circumference: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Product { lx: f64, ly: f64 },
    /// `T^2` of circumference `length` foliated by lines along `leaf_dir`.
    Kronecker { slope: f64, length: f64, leaf_dir: [f64; 2], transverse_dir: [f64; 2] },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFoliation {
    pub spec: ModelSpec,
    pub p: usize,
    pub q: usize,
    pub kind: ModelKind,
}

/// One sampled element of the holonomy groupoid.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupoidElement {
    pub range: Vec<f64>,
    pub source: Vec<f64>,
}

/// Best rational approximation with denominator at most `max_den` when it
/// matches `x` to `tol`.
pub fn rational_approximation(x: f64, max_den: u64, tol: f64) -> Option<(i64, u64)> {
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > max_den as i128 {
            return None;
        }
        if (x - h2 as f64 / k2 as f64).abs() <= tol * x.abs().max(1.0) {
            return Some((h2 as i64, k2 as u64));
        }
        let frac = r - a;
        if frac.abs() < 1e-300 {
            return None;
        }
        r = 1.0 / frac;
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
    }
    None
}

pub fn build_model(spec: &ModelSpec) -> Result<ModelFoliation> {
    match spec {
        ModelSpec::Product { p, q, leaf_circumference, transverse_circumference } => {
            if *p == 0 || !(1..=2).contains(q) {
                return Err(CalcError::InvalidModel(format!("product model needs p >= 1 and q in {{1, 2}}, got p={p}, q={q}")));
            }
            if !(*leaf_circumference > 0.0 && *transverse_circumference > 0.0) {
                return Err(CalcError::InvalidModel("circumferences must be positive".into()));
            }
            Ok(ModelFoliation {
                spec: spec.clone(),
                p: *p,
                q: *q,
                kind: ModelKind::Product { lx: *leaf_circumference, ly: *transverse_circumference },
            })
        }
        ModelSpec::Kronecker { slope, circumference } => {
            if !slope.is_finite() {
                return Err(CalcError::InvalidModel("kronecker slope must be finite".into()));
            }
            if let Some((h, k)) = rational_approximation(*slope, 10_000, 1e-13) {
                return Err(CalcError::InvalidModel(format!("kronecker slope {slope} is rational ({h}/{k})")));
            }
            if *circumference <= 0.0 {
                return Err(CalcError::InvalidModel("circumference must be positive".into()));
            }
            let n = (1.0 + slope * slope).sqrt();
            Ok(ModelFoliation {
                spec: spec.clone(),
                p: 1,
                q: 1,
                kind: ModelKind::Kronecker {
                    slope: *slope,
                    length: *circumference,
                    leaf_dir: [1.0 / n, slope / n],
                    transverse_dir: [-slope / n, 1.0 / n],
                },
            })
        }
    }
}

fn box_labels(bounds: &[i64]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for b in bounds {
        let mut next = Vec::with_capacity(out.len() * (2 * *b as usize + 1));
        for l in &out {
            for k in -b..=*b {
                let mut v = l.clone();
                v.push(k);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

impl ModelFoliation {
    pub fn dimension(&self) -> usize {
        self.p + self.q
    }

    pub fn is_product(&self) -> bool {
        matches!(self.kind, ModelKind::Product { .. })
    }

    /// Mode basis: product models take `|m_i| <= leaf_max`, `|n_j| <=
    /// transverse_max`; Kronecker models take the box `|k_i| <= max` of both.
    pub fn modes(&self, leaf_max: usize, transverse_max: usize) -> Arc<ModeSet> {
        match &self.kind {
            ModelKind::Product { lx, ly } => {
                let mut bounds = vec![leaf_max as i64; self.p];
                bounds.extend(vec![transverse_max as i64; self.q]);
                let modes = box_labels(&bounds)
                    .into_iter()
                    .map(|label| {
                        let xi = label[..self.p].iter().map(|m| 2.0 * PI * *m as f64 / lx).collect();
                        let eta = label[self.p..].iter().map(|n| 2.0 * PI * *n as f64 / ly).collect();
                        Mode { label, xi, eta }
                    })
                    .collect();
                Arc::new(ModeSet::new(modes, self.p))
            }
            ModelKind::Kronecker { length, leaf_dir, transverse_dir, .. } => {
                let b = leaf_max.max(transverse_max) as i64;
                let modes = box_labels(&[b, b])
                    .into_iter()
                    .map(|label| {
                        let k = [2.0 * PI * label[0] as f64 / length, 2.0 * PI * label[1] as f64 / length];
                        let xi = vec![k[0] * leaf_dir[0] + k[1] * leaf_dir[1]];
                        let eta = vec![k[0] * transverse_dir[0] + k[1] * transverse_dir[1]];
                        Mode { label, xi, eta }
                    })
                    .collect();
                Arc::new(ModeSet::new(modes, 0))
            }
        }
    }

    /// Transverse coordinate(s) of an ambient point.
    pub fn transverse_coordinate(&self, point: &[f64]) -> Vec<f64> {
        match &self.kind {
            ModelKind::Product { .. } => point[self.p..].to_vec(),
            ModelKind::Kronecker { transverse_dir, .. } => vec![point[0] * transverse_dir[0] + point[1] * transverse_dir[1]],
        }
    }

    /// Random groupoid elements: `(x, x', y)` triples for products, `(z, t)`
    /// pairs with `|t| <= max_time` for Kronecker models.
    pub fn groupoid_samples(&self, count: usize, max_time: f64, seed: u64) -> Vec<GroupoidElement> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| match &self.kind {
                ModelKind::Product { lx, ly } => {
                    let x: Vec<f64> = (0..self.p).map(|_| rng.gen::<f64>() * lx).collect();
                    let x2: Vec<f64> = (0..self.p).map(|_| rng.gen::<f64>() * lx).collect();
                    let y: Vec<f64> = (0..self.q).map(|_| rng.gen::<f64>() * ly).collect();
                    let mut range = x;
                    range.extend(&y);
                    let mut source = x2;
                    source.extend(&y);
                    GroupoidElement { range, source }
                }
                ModelKind::Kronecker { length, leaf_dir, .. } => {
                    let z = [rng.gen::<f64>() * length, rng.gen::<f64>() * length];
                    let t = (2.0 * rng.gen::<f64>() - 1.0) * max_time;
                    let source = vec![(z[0] + t * leaf_dir[0]).rem_euclid(*length), (z[1] + t * leaf_dir[1]).rem_euclid(*length)];
                    GroupoidElement { range: z.to_vec(), source }
                }
            })
            .collect()
    }

    /// The (trivial) holonomy of the model on a bundle of the given rank.
    pub fn holonomy(&self, elements: &[GroupoidElement], rank: usize) -> HolonomyAction {
        HolonomyAction {
            samples: elements
                .iter()
                .map(|g| HolonomySample {
                    source: g.source.clone(),
                    range: g.range.clone(),
                    transport: DMatrix::<C64>::from_fn(rank, rank, |i, j| if i == j { ONE } else { ZERO }),
                    codifferential: DMatrix::<f64>::identity(self.q, self.q),
                })
                .collect(),
        }
    }
}
