//! Spatial/fiber sampling shared by all terms of a symbol, and the
//! elementary field operations (fiber derivatives, spectral transverse
//! derivatives, pointwise and crossed-product multiplication).

use crate::cutoff::CutoffSpec;
use crate::error::{CalcError, Result};
use crate::homogeneous::{SphereGrid, DEFAULT_CIRCLE_NODES};
use crate::numerics::{apply_fourier_multiplier, mat_mul_acc, trig_interp_weights, C64, ONE, ZERO};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// How the spatial samples of a symbol are laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    /// `k(x, x', y, eta)`: leafwise integral kernel times transverse symbol.
    Kernel,
    /// `a(y, eta)` acting as the identity along leaves (differential and
    /// other local operators in `y`).
    Local,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSpace {
    pub layout: Layout,
    pub p: usize,
    pub q: usize,
    pub rank: usize,
    /// grid points per leaf axis (odd)
    pub nx: usize,
    /// grid points per transverse axis (odd)
    pub ny: usize,
    /// leaf circumference
    pub lx: f64,
    /// transverse circumference
    pub ly: f64,
    pub sphere: Arc<SphereGrid>,
    pub cutoff: CutoffSpec,
}

impl SymbolSpace {
    #[allow(clippy::too_many_arguments)]
    pub fn new(layout: Layout, p: usize, q: usize, rank: usize, nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        Self::with_sphere(layout, p, q, rank, nx, ny, lx, ly, DEFAULT_CIRCLE_NODES, CutoffSpec::default())
    }

    #[allow(clippy::too_many_arguments)]
    pub fn with_sphere(
        layout: Layout,
        p: usize,
        q: usize,
        rank: usize,
        nx: usize,
        ny: usize,
        lx: f64,
        ly: f64,
        circle_nodes: usize,
        cutoff: CutoffSpec,
    ) -> Result<Self> {
        if p == 0 || rank == 0 {
            return Err(CalcError::Precondition("leaf dimension and rank must be positive".into()));
        }
        if nx % 2 == 0 || ny % 2 == 0 {
            return Err(CalcError::Precondition(format!("grid sizes must be odd, got nx={nx}, ny={ny}")));
        }
        if !(lx > 0.0 && ly > 0.0) {
            return Err(CalcError::Precondition("circumferences must be positive".into()));
        }
        let sphere = Arc::new(SphereGrid::new(q, circle_nodes)?);
        Ok(SymbolSpace { layout, p, q, rank, nx, ny, lx, ly, sphere, cutoff })
    }

    pub fn with_layout(&self, layout: Layout) -> SymbolSpace {
        SymbolSpace { layout, ..self.clone() }
    }

    pub fn leaf_points(&self) -> usize {
        self.nx.pow(self.p as u32)
    }

    pub fn transverse_points(&self) -> usize {
        self.ny.pow(self.q as u32)
    }

    pub fn points(&self) -> usize {
        match self.layout {
            Layout::Kernel => self.leaf_points() * self.leaf_points() * self.transverse_points(),
            Layout::Local => self.transverse_points(),
        }
    }

    pub fn nodes(&self) -> usize {
        self.sphere.len()
    }

    pub fn r2(&self) -> usize {
        self.rank * self.rank
    }

    pub fn field_len(&self) -> usize {
        self.points() * self.nodes() * self.r2()
    }

    pub fn kernel_point(&self, ix: usize, ix2: usize, iy: usize) -> usize {
        (ix * self.leaf_points() + ix2) * self.transverse_points() + iy
    }

    pub fn offset(&self, point: usize, node: usize) -> usize {
        (point * self.nodes() + node) * self.r2()
    }

    /// Coordinates of a flat leaf index.
    pub fn leaf_coords(&self, ix: usize) -> Vec<f64> {
        digits(ix, self.nx, self.p).into_iter().map(|d| d as f64 * self.lx / self.nx as f64).collect()
    }

    pub fn transverse_coords(&self, iy: usize) -> Vec<f64> {
        digits(iy, self.ny, self.q).into_iter().map(|d| d as f64 * self.ly / self.ny as f64).collect()
    }

    pub fn leaf_weight(&self) -> f64 {
        (self.lx / self.nx as f64).powi(self.p as i32)
    }

    pub fn transverse_weight(&self) -> f64 {
        (self.ly / self.ny as f64).powi(self.q as i32)
    }

    /// Stride (in field entries) of transverse axis `axis`, and the base
    /// offsets of all lines along it.
    pub(crate) fn transverse_lines(&self, axis: usize) -> (usize, Vec<usize>) {
        let inner = self.ny.pow((self.q - 1 - axis) as u32) * self.nodes() * self.r2();
        let ty = self.transverse_points();
        let outer_blocks = self.points() / ty;
        let mut bases = Vec::new();
        let before = self.ny.pow(axis as u32);
        for b in 0..outer_blocks {
            for hi in 0..before {
                for lo in 0..inner {
                    bases.push((b * ty + hi * self.ny.pow((self.q - axis) as u32)) * self.nodes() * self.r2() + lo);
                }
            }
        }
        (inner, bases)
    }

    /// Spatial trigonometric interpolation weights for a continuous point.
    pub fn point_weights(&self, x: Option<(&[f64], &[f64])>, y: &[f64]) -> Vec<(usize, C64)> {
        let axis_w = |coords: &[f64], n: usize, l: f64| -> Vec<Vec<C64>> {
            coords.iter().map(|c| trig_interp_weights(*c, n, l)).collect()
        };
        let tensor = |ws: &[Vec<C64>], n: usize| -> Vec<C64> {
            let mut out = vec![ONE];
            for w in ws {
                let mut next = Vec::with_capacity(out.len() * n);
                for a in &out {
                    for b in w {
                        next.push(a * b);
                    }
                }
                out = next;
            }
            out
        };
        let wy = tensor(&axis_w(y, self.ny, self.ly), self.ny);
        match (self.layout, x) {
            (Layout::Local, _) => wy.into_iter().enumerate().filter(|(_, w)| w.norm() > 1e-15).collect(),
            (Layout::Kernel, Some((x1, x2))) => {
                let w1 = tensor(&axis_w(x1, self.nx, self.lx), self.nx);
                let w2 = tensor(&axis_w(x2, self.nx, self.lx), self.nx);
                let mut out = Vec::new();
                for (i1, a) in w1.iter().enumerate() {
                    if a.norm() < 1e-15 {
                        continue;
                    }
                    for (i2, b) in w2.iter().enumerate() {
                        if b.norm() < 1e-15 {
                            continue;
                        }
                        for (iy, c) in wy.iter().enumerate() {
                            if c.norm() < 1e-15 {
                                continue;
                            }
                            out.push((self.kernel_point(i1, i2, iy), a * b * c));
                        }
                    }
                }
                out
            }
            (Layout::Kernel, None) => Vec::new(),
        }
    }

    pub fn check_compatible(&self, other: &SymbolSpace) -> Result<()> {
        if self.p != other.p
            || self.q != other.q
            || self.rank != other.rank
            || self.nx != other.nx
            || self.ny != other.ny
            || self.lx != other.lx
            || self.ly != other.ly
            || self.sphere != other.sphere
            || self.cutoff != other.cutoff
        {
            return Err(CalcError::DimensionMismatch("symbols live on different grids".into()));
        }
        Ok(())
    }
}

pub(crate) fn digits(mut index: usize, n: usize, dims: usize) -> Vec<usize> {
    let mut out = vec![0; dims];
    for d in (0..dims).rev() {
        out[d] = index % n;
        index /= n;
    }
    out
}

/// One homogeneous field over the spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub degree: C64,
    pub data: Vec<C64>,
}

impl Field {
    pub fn zeros(space: &SymbolSpace, degree: C64) -> Self {
        Field { degree, data: vec![ZERO; space.field_len()] }
    }

    /// Samples `f(point index, node) -> r x r matrix`.
    pub fn from_fn<F: Fn(usize, &[f64]) -> Vec<C64>>(space: &SymbolSpace, degree: C64, f: F) -> Self {
        let mut data = Vec::with_capacity(space.field_len());
        for pt in 0..space.points() {
            for n in 0..space.nodes() {
                data.extend(f(pt, space.sphere.node(n)));
            }
        }
        Field { degree, data }
    }

    pub fn scaled(&self, s: C64) -> Field {
        Field { degree: self.degree, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn add_assign(&mut self, other: &Field, s: C64) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn max_abs(&self) -> f64 {
        crate::numerics::max_abs(&self.data)
    }

    /// `|eta|^d f(x, x', y, eta/|eta|)` by spectral interpolation (`eta != 0`).
    pub fn evaluate(&self, space: &SymbolSpace, x: Option<(&[f64], &[f64])>, y: &[f64], eta: &[f64]) -> Vec<C64> {
        let r2 = space.r2();
        let mut out = vec![ZERO; r2];
        let norm = eta.iter().map(|e| e * e).sum::<f64>().sqrt();
        if norm == 0.0 {
            return out;
        }
        let dir: Vec<f64> = eta.iter().map(|e| e / norm).collect();
        let scale = C64::new(norm, 0.0).powc(self.degree);
        let angular = space.sphere.interpolation(&dir);
        for (pt, ws) in space.point_weights(x, y) {
            for (n, wa) in &angular {
                let o = space.offset(pt, *n);
                let w = ws * *wa * scale;
                for e in 0..r2 {
                    out[e] += self.data[o + e] * w;
                }
            }
        }
        out
    }

    /// Fiber derivative `d/d eta_axis`; the result has degree `d - 1`.
    pub fn eta_derivative(&self, space: &SymbolSpace, axis: usize) -> Field {
        let d = self.degree;
        let r2 = space.r2();
        let nodes = space.nodes();
        let mut out = Field { degree: d - 1.0, data: vec![ZERO; self.data.len()] };
        if space.q == 1 {
            for pt in 0..space.points() {
                for n in 0..nodes {
                    let s = space.sphere.node(n)[0];
                    let o = space.offset(pt, n);
                    for e in 0..r2 {
                        out.data[o + e] = self.data[o + e] * d * s;
                    }
                }
            }
            return out;
        }
        let mut ang = self.data.clone();
        let bases: Vec<usize> = (0..space.points()).flat_map(|pt| (0..r2).map(move |e| pt * nodes * r2 + e)).collect();
        space.sphere.angular_derivative(&mut ang, r2, bases);
        for pt in 0..space.points() {
            for n in 0..nodes {
                let w = space.sphere.node(n);
                let (c, s) = (w[0], w[1]);
                let o = space.offset(pt, n);
                for e in 0..r2 {
                    let f = self.data[o + e];
                    let fp = ang[o + e];
                    out.data[o + e] = if axis == 0 { d * c * f - s * fp } else { d * s * f + c * fp };
                }
            }
        }
        out
    }

    /// Multiplication by `eta_axis / |eta|` (degree unchanged).
    pub fn times_direction(&self, space: &SymbolSpace, axis: usize) -> Field {
        let mut out = self.clone();
        let r2 = space.r2();
        for pt in 0..space.points() {
            for n in 0..space.nodes() {
                let w = space.sphere.node(n)[axis];
                let o = space.offset(pt, n);
                out.data[o..o + r2].iter_mut().for_each(|v| *v *= w);
            }
        }
        out
    }

    /// `D_y^order` along one transverse axis, `D = -i d/dy`, spectrally.
    pub fn y_derivative(&self, space: &SymbolSpace, axis: usize, order: usize) -> Field {
        if order == 0 {
            return self.clone();
        }
        let mut out = self.clone();
        let (stride, bases) = space.transverse_lines(axis);
        let kappa = 2.0 * PI / space.ly;
        apply_fourier_multiplier(&mut out.data, space.ny, stride, bases, |k| {
            C64::new((kappa * k as f64).powi(order as i32), 0.0)
        });
        out
    }

    /// Mixed transverse derivative `D_y^alpha`.
    pub fn y_multi_derivative(&self, space: &SymbolSpace, alpha: &[usize]) -> Field {
        let mut out = self.clone();
        for (axis, a) in alpha.iter().enumerate() {
            out = out.y_derivative(space, axis, *a);
        }
        out
    }

    pub fn is_y_independent(&self, space: &SymbolSpace, tol: f64) -> bool {
        let ty = space.transverse_points();
        let block = space.nodes() * space.r2();
        let outer = space.points() / ty;
        for b in 0..outer {
            let first = &self.data[b * ty * block..b * ty * block + block];
            for iy in 1..ty {
                let o = (b * ty + iy) * block;
                if self.data[o..o + block].iter().zip(first).any(|(a, c)| (a - c).norm() > tol) {
                    return false;
                }
            }
        }
        true
    }
}

/// Spatial product of two fields (degrees add): crossed-product integration
/// over the intermediate leaf point for kernel-kernel pairs, pointwise
/// multiplication otherwise.
pub fn field_product(space_a: &SymbolSpace, a: &Field, space_b: &SymbolSpace, b: &Field) -> (Layout, Field) {
    let r = space_a.rank;
    let r2 = space_a.r2();
    let nodes = space_a.nodes();
    let ty = space_a.transverse_points();
    let nxl = space_a.leaf_points();
    let degree = a.degree + b.degree;
    match (space_a.layout, space_b.layout) {
        (Layout::Local, Layout::Local) => {
            let mut out = vec![ZERO; a.data.len()];
            for blk in 0..ty * nodes {
                let o = blk * r2;
                mat_mul_acc(&a.data[o..o + r2], &b.data[o..o + r2], r, ONE, &mut out[o..o + r2]);
            }
            (Layout::Local, Field { degree, data: out })
        }
        (Layout::Kernel, Layout::Local) => {
            let mut out = vec![ZERO; a.data.len()];
            for pt in 0..space_a.points() {
                let iy = pt % ty;
                for n in 0..nodes {
                    let oa = space_a.offset(pt, n);
                    let ob = space_b.offset(iy, n);
                    mat_mul_acc(&a.data[oa..oa + r2], &b.data[ob..ob + r2], r, ONE, &mut out[oa..oa + r2]);
                }
            }
            (Layout::Kernel, Field { degree, data: out })
        }
        (Layout::Local, Layout::Kernel) => {
            let mut out = vec![ZERO; b.data.len()];
            for pt in 0..space_b.points() {
                let iy = pt % ty;
                for n in 0..nodes {
                    let oa = space_a.offset(iy, n);
                    let ob = space_b.offset(pt, n);
                    mat_mul_acc(&a.data[oa..oa + r2], &b.data[ob..ob + r2], r, ONE, &mut out[ob..ob + r2]);
                }
            }
            (Layout::Kernel, Field { degree, data: out })
        }
        (Layout::Kernel, Layout::Kernel) => {
            let w = C64::new(space_a.leaf_weight(), 0.0);
            let mut out = vec![ZERO; a.data.len()];
            for ix in 0..nxl {
                for ix2 in 0..nxl {
                    for mid in 0..nxl {
                        for iy in 0..ty {
                            let pa = space_a.kernel_point(ix, mid, iy);
                            let pb = space_a.kernel_point(mid, ix2, iy);
                            let pc = space_a.kernel_point(ix, ix2, iy);
                            for n in 0..nodes {
                                let oa = space_a.offset(pa, n);
                                let ob = space_a.offset(pb, n);
                                let oc = space_a.offset(pc, n);
                                mat_mul_acc(&a.data[oa..oa + r2], &b.data[ob..ob + r2], r, w, &mut out[oc..oc + r2]);
                            }
                        }
                    }
                }
            }
            (Layout::Kernel, Field { degree, data: out })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn y_derivative_of_fourier_mode() {
        let space = SymbolSpace::new(Layout::Local, 1, 1, 1, 3, 9, 1.0, 2.0 * PI).unwrap();
        let f = Field::from_fn(&space, ZERO, |iy, _| {
            let y = space.transverse_coords(iy)[0];
            vec![C64::new((2.0 * y).sin(), 0.0)]
        });
        let d = f.y_derivative(&space, 0, 1);
        for iy in 0..9 {
            let y = space.transverse_coords(iy)[0];
            let o = space.offset(iy, 0);
            // -i d/dy sin(2y) = -2i cos(2y)
            assert!((d.data[o] - C64::new(0.0, -2.0 * (2.0 * y).cos())).norm() < 1e-12);
        }
    }

    #[test]
    fn eta_derivative_circle_matches_cartesian() {
        let space = SymbolSpace::with_sphere(Layout::Local, 1, 2, 1, 1, 1, 1.0, 1.0, 32, CutoffSpec::default()).unwrap();
        // sigma = eta_1 eta_2^2 / |eta|^4, degree -1
        let f = Field::from_fn(&space, C64::new(-1.0, 0.0), |_, w| vec![C64::new(w[0] * w[1] * w[1], 0.0)]);
        let d = f.eta_derivative(&space, 1);
        // d/deta2 at unit w: 2 w1 w2 - 4 w1 w2^3
        for n in 0..space.nodes() {
            let w = space.sphere.node(n);
            let exact = 2.0 * w[0] * w[1] - 4.0 * w[0] * w[1].powi(3);
            assert!((d.data[n].re - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn transverse_lines_cover_two_axes() {
        let space = SymbolSpace::with_sphere(Layout::Kernel, 1, 2, 1, 3, 5, 1.0, 1.0, 4, CutoffSpec::default()).unwrap();
        for axis in 0..2 {
            let (stride, bases) = space.transverse_lines(axis);
            let mut seen = vec![false; space.field_len()];
            for b in &bases {
                for j in 0..space.ny {
                    assert!(!seen[b + j * stride]);
                    seen[b + j * stride] = true;
                }
            }
            assert!(seen.iter().all(|s| *s));
        }
    }
}
