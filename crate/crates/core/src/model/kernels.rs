//! Tangential kernels `k` on the model groupoids and the operators `R_E(k)`.
//!
//! On product models a kernel is a function `k(x, x', y)`, stored as an
//! `eta`-independent symbol of order 0 (constant profile). On Kronecker models
//! it is `k(z, t) = sum_j e^{i j.z} c_j(t)` with modulated Gaussians `c_j` in
//! the leaf time `t`, acting by `(R(k) u)(z) = int k(z, t) u(z + t v) dt`.

use super::grid::{GridOperator, ModeSet};
use super::{ModelFoliation, ModelKind};
use crate::error::{CalcError, Result};
use crate::numerics::{C64, ZERO};
use crate::symbol::{adjoint, compose, quantize, ClassicalSymbol, CutoffSpec, Field, Layout, Profile, SymbolSpace, Term};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// `amplitude * exp(-(t - center)^2 / (2 width^2) + i modulation t)` times
/// the character `e^{i (2 pi / L) shift . z}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KroneckerTerm {
    pub shift: [i64; 2],
    pub amplitude: C64,
    pub center: f64,
    pub width: f64,
    #[serde(default)]
    pub modulation: f64,
}

impl KroneckerTerm {
    /// `int c(t) e^{i s t} dt`.
    pub fn leaf_transform(&self, s: f64) -> C64 {
        let u = s + self.modulation;
        self.amplitude * self.width * (2.0 * PI).sqrt() * C64::from_polar((-0.5 * self.width * self.width * u * u).exp(), self.center * u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KroneckerKernel {
    pub terms: Vec<KroneckerTerm>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TangentialKernel {
    Product(ClassicalSymbol),
    Kronecker(KroneckerKernel),
}

fn kernel_space(model: &ModelFoliation, nx: usize, ny: usize, rank: usize, circle_nodes: usize) -> Result<Arc<SymbolSpace>> {
    match model.kind {
        ModelKind::Product { lx, ly } => Ok(Arc::new(SymbolSpace::with_sphere(
            Layout::Kernel,
            model.p,
            model.q,
            rank,
            nx,
            ny,
            lx,
            ly,
            circle_nodes,
            CutoffSpec::default(),
        )?)),
        ModelKind::Kronecker { .. } => Err(CalcError::InvalidModel("sampled kernels need a product model".into())),
    }
}

impl TangentialKernel {
    /// Samples `k(x, x', y)` (row-major `rank x rank`) on the product grid.
    pub fn product_from_fn<F: Fn(&[f64], &[f64], &[f64]) -> Vec<C64>>(
        model: &ModelFoliation,
        nx: usize,
        ny: usize,
        rank: usize,
        f: F,
    ) -> Result<Self> {
        Self::product_on_space(kernel_space(model, nx, ny, rank, 4)?, f)
    }

    pub fn product_on_space<F: Fn(&[f64], &[f64], &[f64]) -> Vec<C64>>(space: Arc<SymbolSpace>, f: F) -> Result<Self> {
        if space.layout != Layout::Kernel {
            return Err(CalcError::Precondition("tangential kernels use the kernel layout".into()));
        }
        let nl = space.leaf_points();
        let ty = space.transverse_points();
        let field = Field::from_fn(&space, ZERO, |pt, _| {
            let iy = pt % ty;
            let ix2 = (pt / ty) % nl;
            let ix = pt / ty / nl;
            f(&space.leaf_coords(ix), &space.leaf_coords(ix2), &space.transverse_coords(iy))
        });
        let sym = ClassicalSymbol { space, order: ZERO, depth: 0, terms: vec![Term { level: 0, profile: Profile::One, field }] };
        Ok(TangentialKernel::Product(sym))
    }

    /// Random band-limited scalar kernel of leafwise convolution type
    /// `k(x - x', y)`: a few leaf and transverse Fourier modes within the grid
    /// bandwidth, seeded.
    pub fn random_product(space: Arc<SymbolSpace>, seed: u64, y_dependent: bool) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hx = ((space.nx - 1) / 2).min(2) as i64;
        let hy = if y_dependent { ((space.ny - 1) / 2).min(2) as i64 } else { 0 };
        let (p, q) = (space.p, space.q);
        let mut coeffs = Vec::new();
        for _ in 0..6 {
            let a: Vec<i64> = (0..p).map(|_| rng.gen_range(-hx..=hx)).collect();
            let b: Vec<i64> = a.iter().map(|v| -v).collect();
            let c: Vec<i64> = (0..q).map(|_| rng.gen_range(-hy..=hy)).collect();
            let v = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            coeffs.push((a, b, c, v));
        }
        let (lx, ly) = (space.lx, space.ly);
        Self::product_on_space(space, move |x, x2, y| {
            let mut s = ZERO;
            for (a, b, c, v) in &coeffs {
                let mut ph = 0.0;
                for i in 0..x.len() {
                    ph += 2.0 * PI * (a[i] as f64 * x[i] + b[i] as f64 * x2[i]) / lx;
                }
                for i in 0..y.len() {
                    ph += 2.0 * PI * c[i] as f64 * y[i] / ly;
                }
                s += v * C64::from_polar(1.0, ph);
            }
            vec![s]
        })
    }

    /// Leafwise projection onto constant leaf functions times `w(y)`:
    /// `k(x, x', y) = w(y) / Lx^p` (times the identity of the bundle).
    pub fn leaf_projection<W: Fn(&[f64]) -> f64>(space: Arc<SymbolSpace>, w: W) -> Result<Self> {
        let vol = space.lx.powi(space.p as i32);
        let r = space.rank;
        Self::product_on_space(space, move |_, _, y| {
            let mut v = vec![ZERO; r * r];
            for e in 0..r {
                v[e * r + e] = C64::new(w(y) / vol, 0.0);
            }
            v
        })
    }

    /// Smooth approximation of the groupoid unit: the periodic heat kernel
    /// of width `width` along the leaves, band-limited to the grid.
    pub fn unit_approximation(space: Arc<SymbolSpace>, width: f64) -> Result<Self> {
        let lx = space.lx;
        let half = ((space.nx - 1) / 2) as i64;
        Self::product_on_space(space, move |x, x2, _| {
            let mut v = C64::new(1.0, 0.0);
            for i in 0..x.len() {
                let mut s = 0.0;
                for m in -half..=half {
                    let k = 2.0 * PI * m as f64 / lx;
                    s += (-0.5 * width * width * k * k).exp() * (k * (x[i] - x2[i])).cos();
                }
                v *= s / lx;
            }
            vec![v]
        })
    }

    /// `k*(gamma) = k(gamma^{-1})^*`.
    pub fn star(&self) -> Result<Self> {
        match self {
            TangentialKernel::Product(s) => Ok(TangentialKernel::Product(adjoint(s)?)),
            TangentialKernel::Kronecker(k) => Err(CalcError::Precondition(format!(
                "use KroneckerKernel::star with the model leaf direction ({} terms)",
                k.terms.len()
            ))),
        }
    }

    /// Leafwise convolution `k1 * k2`.
    pub fn convolve(&self, other: &TangentialKernel) -> Result<Self> {
        match (self, other) {
            (TangentialKernel::Product(a), TangentialKernel::Product(b)) => {
                let mut c = compose(a, b)?;
                c.truncate(0);
                Ok(TangentialKernel::Product(c))
            }
            _ => Err(CalcError::Precondition("use KroneckerKernel::convolve for Kronecker kernels".into())),
        }
    }

    pub fn symbol(&self) -> Option<&ClassicalSymbol> {
        match self {
            TangentialKernel::Product(s) => Some(s),
            TangentialKernel::Kronecker(_) => None,
        }
    }
}

impl KroneckerKernel {
    pub fn random(seed: u64, count: usize, max_shift: i64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        KroneckerKernel {
            terms: (0..count)
                .map(|_| KroneckerTerm {
                    shift: [rng.gen_range(-max_shift..=max_shift), rng.gen_range(-max_shift..=max_shift)],
                    amplitude: C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    center: rng.gen_range(-0.5..0.5),
                    width: rng.gen_range(0.3..0.8),
                    modulation: 0.0,
                })
                .collect(),
        }
    }

    fn leaf_dir(model: &ModelFoliation) -> Result<([f64; 2], f64)> {
        match model.kind {
            ModelKind::Kronecker { leaf_dir, length, .. } => Ok((leaf_dir, length)),
            _ => Err(CalcError::InvalidModel("Kronecker kernel on a product model".into())),
        }
    }

    /// `k*(z, t) = conj k(z + t v, -t)`.
    pub fn star(&self, model: &ModelFoliation) -> Result<Self> {
        let (v, l) = Self::leaf_dir(model)?;
        Ok(KroneckerKernel {
            terms: self
                .terms
                .iter()
                .map(|t| {
                    let jv = 2.0 * PI / l * (t.shift[0] as f64 * v[0] + t.shift[1] as f64 * v[1]);
                    KroneckerTerm {
                        shift: [-t.shift[0], -t.shift[1]],
                        amplitude: t.amplitude.conj(),
                        center: -t.center,
                        width: t.width,
                        modulation: t.modulation - jv,
                    }
                })
                .collect(),
        })
    }

    /// `(k1 * k2)(z, t) = int k1(z, s) k2(z + s v, t - s) ds`, closed form.
    pub fn convolve(&self, other: &KroneckerKernel, model: &ModelFoliation) -> Result<Self> {
        let (v, l) = Self::leaf_dir(model)?;
        let mut terms = Vec::new();
        for a in &self.terms {
            for b in &other.terms {
                let jv = 2.0 * PI / l * (b.shift[0] as f64 * v[0] + b.shift[1] as f64 * v[1]);
                // first factor gains the modulation of the second character
                let (w1, w2) = (a.width, b.width);
                let (n1, n2) = (a.modulation + jv, b.modulation);
                let w2s = w1 * w1 + w2 * w2;
                let nbar = (w1 * w1 * n1 + w2 * w2 * n2) / w2s;
                let konst = -0.5 * (w1 * w1 * n1 * n1 + w2 * w2 * n2 * n2 - w2s * nbar * nbar);
                let phase = a.center * (n1 - nbar) + b.center * (n2 - nbar);
                let w = w2s.sqrt();
                let amp = a.amplitude * b.amplitude * (w1 * w2 * (2.0 * PI).sqrt() / w) * C64::from_polar(konst.exp(), phase);
                terms.push(KroneckerTerm {
                    shift: [a.shift[0] + b.shift[0], a.shift[1] + b.shift[1]],
                    amplitude: amp,
                    center: a.center + b.center,
                    width: w,
                    modulation: nbar,
                });
            }
        }
        Ok(KroneckerKernel { terms })
    }
}

/// `R_E(k)` on the mode basis.
pub fn tangential_operator(model: &ModelFoliation, k: &TangentialKernel, modes: &Arc<ModeSet>) -> Result<GridOperator> {
    match k {
        TangentialKernel::Product(sym) => {
            let mut op = quantize(sym, model, modes)?;
            op.label = "R(k)".into();
            Ok(op)
        }
        TangentialKernel::Kronecker(kk) => {
            KroneckerKernel::leaf_dir(model)?;
            let mut entries = Vec::new();
            for (ci, mode) in modes.modes.iter().enumerate() {
                for t in &kk.terms {
                    let row = [mode.label[0] + t.shift[0], mode.label[1] + t.shift[1]];
                    if let Some(ri) = modes.index(&row) {
                        entries.push((ri, ci, t.leaf_transform(mode.xi[0])));
                    }
                }
            }
            Ok(GridOperator::from_triplets(Arc::clone(modes), 1, &entries, "R(k)"))
        }
    }
}
