//! Uniform-grid scalar fields and the interpolation primitives the
//! functionals are built on.
//!
//! A field is a pair (u, χ) sampled at the nodes of an isotropic grid,
//! together with a Lipschitz bound C_V. u is nonnegative; χ lives in
//! [0, 1] nodally (solver companions are genuinely fractional in the
//! transition layer, analytic indicators are 0/1).

mod quad;
pub mod io;

pub use quad::{ball_integral, ball_integral_at, laplacian_mass, sphere_integral, Quadrature};

use crate::error::{Error, Result};
use crate::geom::{self, Point, Vector};

/// Isotropic uniform grid over an axis-aligned box.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    dim: usize,
    origin: Point,
    extent: Vector,
    cells: [usize; 3],
    h: f64,
}

impl GridSpec {
    pub fn new(dim: usize, origin: Point, extent: Vector, cells: [usize; 3]) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Parameter(format!("dim must be 2 or 3, got {dim}")));
        }
        let h = extent[0] / cells[0] as f64;
        for d in 0..dim {
            if cells[d] < 8 {
                return Err(Error::Parameter(format!(
                    "cells_per_axis must be >= 8 on every axis, got {}",
                    cells[d]
                )));
            }
            if !(extent[d] > 0.0) {
                return Err(Error::Parameter("extent must be positive".into()));
            }
            let hd = extent[d] / cells[d] as f64;
            if ((hd - h) / h).abs() > 1e-9 {
                return Err(Error::Parameter(format!(
                    "grid must be isotropic: spacing {hd} on axis {d} differs from {h}"
                )));
            }
        }
        let mut origin = origin;
        let mut extent = extent;
        let mut cells = cells;
        for d in dim..3 {
            origin[d] = 0.0;
            extent[d] = 0.0;
            cells[d] = 0;
        }
        Ok(GridSpec {
            dim,
            origin,
            extent,
            cells,
            h,
        })
    }

    /// Grid over the centered box [-half, half]^dim with `cells` cells per axis.
    pub fn centered_box(dim: usize, half: f64, cells: usize) -> Result<Self> {
        let mut origin = [0.0; 3];
        let mut extent = [0.0; 3];
        let mut c = [0usize; 3];
        for d in 0..dim {
            origin[d] = -half;
            extent[d] = 2.0 * half;
            c[d] = cells;
        }
        GridSpec::new(dim, origin, extent, c)
    }

    /// The default [-1, 1]^dim box.
    pub fn unit_box(dim: usize, cells: usize) -> Result<Self> {
        GridSpec::centered_box(dim, 1.0, cells)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }
    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }
    #[inline]
    pub fn origin(&self) -> Point {
        self.origin
    }
    #[inline]
    pub fn extent(&self) -> Vector {
        self.extent
    }
    #[inline]
    pub fn cells(&self, axis: usize) -> usize {
        self.cells[axis]
    }
    #[inline]
    pub fn nodes(&self, axis: usize) -> usize {
        self.cells[axis] + 1
    }

    pub fn node_count(&self) -> usize {
        let mut n = 1;
        for d in 0..self.dim {
            n *= self.nodes(d);
        }
        n
    }

    pub fn cell_count(&self) -> usize {
        let mut n = 1;
        for d in 0..self.dim {
            n *= self.cells[d];
        }
        n
    }

    /// Row-major node index (last axis fastest).
    #[inline]
    pub fn node_index(&self, i: [usize; 3]) -> usize {
        if self.dim == 2 {
            i[0] * self.nodes(1) + i[1]
        } else {
            (i[0] * self.nodes(1) + i[1]) * self.nodes(2) + i[2]
        }
    }

    #[inline]
    pub fn node_pos(&self, i: [usize; 3]) -> Point {
        let mut p = [0.0; 3];
        for d in 0..self.dim {
            p[d] = self.origin[d] + i[d] as f64 * self.h;
        }
        p
    }

    #[inline]
    pub fn upper(&self) -> Point {
        let mut p = [0.0; 3];
        for d in 0..self.dim {
            p[d] = self.origin[d] + self.extent[d];
        }
        p
    }

    pub fn contains(&self, p: &Point) -> bool {
        let up = self.upper();
        (0..self.dim).all(|d| p[d] >= self.origin[d] && p[d] <= up[d])
    }

    /// Distance from `p` to the boundary of the box (negative outside).
    pub fn dist_to_boundary(&self, p: &Point) -> f64 {
        let up = self.upper();
        let mut m = f64::INFINITY;
        for d in 0..self.dim {
            m = m.min(p[d] - self.origin[d]).min(up[d] - p[d]);
        }
        m
    }

    /// Cell containing `p`, clamped so points on the upper face still resolve.
    #[inline]
    pub fn locate(&self, p: &Point) -> ([usize; 3], [f64; 3]) {
        let mut idx = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for d in 0..self.dim {
            let t = (p[d] - self.origin[d]) / self.h;
            let mut i = t.floor() as isize;
            if i < 0 {
                i = 0;
            }
            if i as usize >= self.cells[d] {
                i = self.cells[d] as isize - 1;
            }
            idx[d] = i as usize;
            frac[d] = t - i as f64;
        }
        (idx, frac)
    }

    /// Iterate over all node multi-indices in row-major order.
    pub fn node_iter(&self) -> NodeIter {
        NodeIter {
            dim: self.dim,
            sizes: [
                self.nodes(0),
                self.nodes(1),
                if self.dim == 3 { self.nodes(2) } else { 1 },
            ],
            next: Some([0, 0, 0]),
        }
    }
}

pub struct NodeIter {
    dim: usize,
    sizes: [usize; 3],
    next: Option<[usize; 3]>,
}

impl Iterator for NodeIter {
    type Item = [usize; 3];
    fn next(&mut self) -> Option<[usize; 3]> {
        let cur = self.next?;
        let mut nxt = cur;
        let last = self.dim - 1;
        let mut d = last;
        loop {
            nxt[d] += 1;
            if nxt[d] < self.sizes[d] {
                break;
            }
            nxt[d] = 0;
            if d == 0 {
                self.next = None;
                return Some(cur);
            }
            d -= 1;
        }
        self.next = Some(nxt);
        Some(cur)
    }
}

/// A ball together with its relation to a grid box.
#[derive(Debug, Clone, Copy)]
pub struct BallRegion {
    pub center: Point,
    pub radius: f64,
    pub interior: bool,
}

impl BallRegion {
    /// Interior iff dist(center, box boundary) > r + 2h.
    pub fn new(spec: &GridSpec, center: Point, radius: f64) -> Self {
        let interior =
            radius > 0.0 && spec.dist_to_boundary(&center) > radius + 2.0 * spec.h();
        BallRegion {
            center,
            radius,
            interior,
        }
    }

    pub fn require_interior(&self) -> Result<()> {
        if self.interior {
            Ok(())
        } else {
            Err(Error::OutOfDomain(
                self.center[0],
                self.center[1],
                self.center[2],
                "ball is not interior to the grid box",
            ))
        }
    }
}

/// Read-only view of a field good enough for quadrature: pointwise value,
/// an energy-accurate gradient, and the companion indicator.
///
/// Gridded fields answer with the multilinear interpolant and its in-cell
/// derivative; analytic solutions answer exactly. `quad_spec` supplies the
/// cell decomposition used for ball integrals.
pub trait FieldView: Sync {
    fn dim(&self) -> usize;
    fn quad_spec(&self) -> &GridSpec;
    fn lipschitz(&self) -> f64;
    fn value(&self, p: &Point) -> f64;
    fn grad(&self, p: &Point) -> Vector;
    fn chi(&self, p: &Point) -> f64;

    /// Cell pitch for ball quadrature at radius `r`. Gridded fields are
    /// pinned to their nodal pitch; exact fields may refine below it so
    /// small balls stay resolved.
    fn quad_pitch(&self, r: f64) -> f64 {
        let _ = r;
        self.quad_spec().h()
    }
}

/// Nodal samples of u >= 0 and χ in [0, 1] with a Lipschitz bound.
#[derive(Debug, Clone)]
pub struct ScalarField {
    spec: GridSpec,
    u: Vec<f64>,
    chi: Vec<f64>,
    lipschitz: f64,
}

/// Slack allowed on the discrete gradient against the declared bound.
pub const TOL_GRAD: f64 = 1e-6;

impl ScalarField {
    pub fn new(spec: GridSpec, u: Vec<f64>, chi: Vec<f64>, lipschitz: f64) -> Result<Self> {
        let n = spec.node_count();
        if u.len() != n || chi.len() != n {
            return Err(Error::Parameter(format!(
                "nodal arrays must have {n} entries (got u: {}, chi: {})",
                u.len(),
                chi.len()
            )));
        }
        if lipschitz < 0.0 {
            return Err(Error::Parameter("lipschitz bound must be nonnegative".into()));
        }
        for (k, &v) in u.iter().enumerate() {
            if !(v >= 0.0) {
                return Err(Error::Parameter(format!(
                    "u must be nonnegative everywhere, node {k} has {v}"
                )));
            }
        }
        for (k, &c) in chi.iter().enumerate() {
            if !(-1e-12..=1.0 + 1e-12).contains(&c) {
                return Err(Error::Parameter(format!(
                    "chi must lie in [0,1] nodally, node {k} has {c}"
                )));
            }
        }
        let f = ScalarField {
            spec,
            u,
            chi,
            lipschitz,
        };
        let measured = f.measured_lipschitz();
        if measured > lipschitz * (1.0 + TOL_GRAD) + 1e-12 {
            return Err(Error::Parameter(format!(
                "discrete gradient {measured} exceeds declared Lipschitz bound {lipschitz}"
            )));
        }
        Ok(f)
    }

    /// Sample closures on the grid. The Lipschitz bound is measured from the
    /// discrete gradients.
    pub fn from_fn(
        spec: GridSpec,
        fu: impl Fn(&Point) -> f64,
        fchi: impl Fn(&Point) -> f64,
    ) -> Result<Self> {
        let n = spec.node_count();
        let mut u = vec![0.0; n];
        let mut chi = vec![0.0; n];
        for idx in spec.node_iter() {
            let p = spec.node_pos(idx);
            let k = spec.node_index(idx);
            u[k] = fu(&p);
            chi[k] = fchi(&p).clamp(0.0, 1.0);
        }
        let mut f = ScalarField {
            spec,
            u,
            chi,
            lipschitz: 0.0,
        };
        f.lipschitz = f.measured_lipschitz();
        // re-run validation for sign constraints
        ScalarField::new(f.spec.clone(), f.u, f.chi, f.lipschitz)
    }

    #[inline]
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }
    #[inline]
    pub fn u(&self) -> &[f64] {
        &self.u
    }
    #[inline]
    pub fn chi_values(&self) -> &[f64] {
        &self.chi
    }
    #[inline]
    pub fn lipschitz_bound(&self) -> f64 {
        self.lipschitz
    }

    #[inline]
    pub fn node_u(&self, i: [usize; 3]) -> f64 {
        self.u[self.spec.node_index(i)]
    }

    pub fn max_u(&self) -> f64 {
        self.u.iter().cloned().fold(0.0, f64::max)
    }

    /// Max central-difference gradient magnitude over interior nodes.
    pub fn measured_lipschitz(&self) -> f64 {
        let s = &self.spec;
        let inv2h = 1.0 / (2.0 * s.h());
        let mut worst: f64 = 0.0;
        for idx in s.node_iter() {
            let mut g = [0.0; 3];
            let mut interior = true;
            for d in 0..s.dim {
                if idx[d] == 0 || idx[d] == s.nodes(d) - 1 {
                    interior = false;
                    break;
                }
                let mut lo = idx;
                lo[d] -= 1;
                let mut hi = idx;
                hi[d] += 1;
                g[d] = (self.u[s.node_index(hi)] - self.u[s.node_index(lo)]) * inv2h;
            }
            if interior {
                worst = worst.max(geom::norm(&g, s.dim));
            }
        }
        worst
    }

    /// Discrete check that χ = 1 wherever u > threshold (the nodal form of
    /// χ_{u>0} ≤ χ). Solver companions are exempt inside the ε-layer, so the
    /// threshold is a caller choice.
    pub fn check_chi_support(&self, u_threshold: f64) -> Result<()> {
        for k in 0..self.u.len() {
            if self.u[k] > u_threshold && self.chi[k] < 1.0 - 1e-9 {
                return Err(Error::Parameter(format!(
                    "chi must equal 1 where u > {u_threshold}: node {k} has u={}, chi={}",
                    self.u[k], self.chi[k]
                )));
            }
        }
        Ok(())
    }

    /// Multilinear interpolation. Exact on multilinear functions.
    pub fn interpolate(&self, p: &Point) -> Result<f64> {
        if !self.spec.contains(p) {
            return Err(Error::OutOfDomain(p[0], p[1], p[2], "outside the grid box"));
        }
        Ok(self.interp_unchecked(&self.u, p))
    }

    /// Interpolated companion indicator, clamped to [0, 1].
    pub fn chi_at(&self, p: &Point) -> Result<f64> {
        if !self.spec.contains(p) {
            return Err(Error::OutOfDomain(p[0], p[1], p[2], "outside the grid box"));
        }
        Ok(self.interp_unchecked(&self.chi, p).clamp(0.0, 1.0))
    }

    fn interp_unchecked(&self, vals: &[f64], p: &Point) -> f64 {
        let s = &self.spec;
        let (i, t) = s.locate(p);
        if s.dim == 2 {
            let v00 = vals[s.node_index([i[0], i[1], 0])];
            let v10 = vals[s.node_index([i[0] + 1, i[1], 0])];
            let v01 = vals[s.node_index([i[0], i[1] + 1, 0])];
            let v11 = vals[s.node_index([i[0] + 1, i[1] + 1, 0])];
            let a = v00 + (v10 - v00) * t[0];
            let b = v01 + (v11 - v01) * t[0];
            a + (b - a) * t[1]
        } else {
            // collapse x, then z, then y
            let mut c = [0.0f64; 4];
            for (m, slot) in c.iter_mut().enumerate() {
                let dy = m & 1;
                let dz = (m >> 1) & 1;
                let v0 = vals[s.node_index([i[0], i[1] + dy, i[2] + dz])];
                let v1 = vals[s.node_index([i[0] + 1, i[1] + dy, i[2] + dz])];
                *slot = v0 + (v1 - v0) * t[0];
            }
            let e0 = c[0] + (c[2] - c[0]) * t[2];
            let e1 = c[1] + (c[3] - c[1]) * t[2];
            e0 + (e1 - e0) * t[1]
        }
    }

    /// Central-difference gradient of the interpolant with stencil width h.
    /// Second-order accurate on smooth fields.
    pub fn gradient(&self, p: &Point) -> Result<Vector> {
        let s = &self.spec;
        if s.dist_to_boundary(p) <= s.h() {
            return Err(Error::OutOfDomain(
                p[0],
                p[1],
                p[2],
                "gradient stencil must stay a distance h from the box boundary",
            ));
        }
        let mut g = [0.0; 3];
        for d in 0..s.dim {
            let mut hi = *p;
            hi[d] += s.h();
            let mut lo = *p;
            lo[d] -= s.h();
            g[d] = (self.interp_unchecked(&self.u, &hi) - self.interp_unchecked(&self.u, &lo))
                / (2.0 * s.h());
        }
        Ok(g)
    }

    /// Gradient of the multilinear interpolant inside the cell containing `p`.
    /// Exact for cell-aligned piecewise-linear profiles; second order at cell
    /// centers on smooth fields.
    pub fn cell_gradient(&self, p: &Point) -> Vector {
        let s = &self.spec;
        let (i, t) = s.locate(p);
        let inv_h = 1.0 / s.h();
        if s.dim == 2 {
            let v00 = self.u[s.node_index([i[0], i[1], 0])];
            let v10 = self.u[s.node_index([i[0] + 1, i[1], 0])];
            let v01 = self.u[s.node_index([i[0], i[1] + 1, 0])];
            let v11 = self.u[s.node_index([i[0] + 1, i[1] + 1, 0])];
            let gx = ((v10 - v00) * (1.0 - t[1]) + (v11 - v01) * t[1]) * inv_h;
            let gy = ((v01 - v00) * (1.0 - t[0]) + (v11 - v10) * t[0]) * inv_h;
            [gx, gy, 0.0]
        } else {
            let mut v = [0.0f64; 8];
            for (m, slot) in v.iter_mut().enumerate() {
                let dx = m & 1;
                let dy = (m >> 1) & 1;
                let dz = (m >> 2) & 1;
                *slot = self.u[s.node_index([i[0] + dx, i[1] + dy, i[2] + dz])];
            }
            let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
            let gx = {
                let d00 = v[1] - v[0];
                let d10 = v[3] - v[2];
                let d01 = v[5] - v[4];
                let d11 = v[7] - v[6];
                lerp(lerp(d00, d10, t[1]), lerp(d01, d11, t[1]), t[2]) * inv_h
            };
            let gy = {
                let d00 = v[2] - v[0];
                let d10 = v[3] - v[1];
                let d01 = v[6] - v[4];
                let d11 = v[7] - v[5];
                lerp(lerp(d00, d10, t[0]), lerp(d01, d11, t[0]), t[2]) * inv_h
            };
            let gz = {
                let d00 = v[4] - v[0];
                let d10 = v[5] - v[1];
                let d01 = v[6] - v[2];
                let d11 = v[7] - v[3];
                lerp(lerp(d00, d10, t[0]), lerp(d01, d11, t[0]), t[1]) * inv_h
            };
            [gx, gy, gz]
        }
    }
}

impl FieldView for ScalarField {
    fn dim(&self) -> usize {
        self.spec.dim()
    }
    fn quad_spec(&self) -> &GridSpec {
        &self.spec
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
    fn value(&self, p: &Point) -> f64 {
        self.interp_unchecked(&self.u, p)
    }
    fn grad(&self, p: &Point) -> Vector {
        self.cell_gradient(p)
    }
    fn chi(&self, p: &Point) -> f64 {
        self.interp_unchecked(&self.chi, p).clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid2(cells: usize) -> GridSpec {
        GridSpec::unit_box(2, cells).unwrap()
    }

    #[test]
    fn spec_rejects_anisotropy_and_small_grids() {
        assert!(GridSpec::new(2, [0.0; 3], [1.0, 2.0, 0.0], [16, 16, 0]).is_err());
        assert!(GridSpec::new(2, [0.0; 3], [1.0, 1.0, 0.0], [4, 4, 0]).is_err());
        assert!(GridSpec::new(4, [0.0; 3], [1.0; 3], [16; 3]).is_err());
    }

    #[test]
    fn interpolation_reproduces_linear_field() {
        let f = ScalarField::from_fn(grid2(16), |p| p[0] + 1.0, |_| 1.0).unwrap();
        assert_relative_eq!(f.interpolate(&[0.3, 0.7, 0.0]).unwrap(), 1.3, epsilon = 1e-14);
    }

    #[test]
    fn interpolation_of_zero_field_is_zero() {
        let f = ScalarField::from_fn(grid2(16), |_| 0.0, |_| 0.0).unwrap();
        assert_eq!(f.interpolate(&[0.123, -0.456, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn interpolation_reproduces_bilinear_product() {
        // f(x) = x1·x2 is multilinear, so it is reproduced exactly; the
        // direct evaluation is the oracle.
        let spec = GridSpec::new(2, [0.0; 3], [1.0, 1.0, 0.0], [8, 8, 0]).unwrap();
        let f = ScalarField::from_fn(spec, |p| p[0] * p[1], |_| 1.0).unwrap();
        assert_relative_eq!(f.interpolate(&[0.5, 0.5, 0.0]).unwrap(), 0.25, epsilon = 1e-14);
    }

    #[test]
    fn interpolation_rejects_outside_points() {
        let f = ScalarField::from_fn(grid2(16), |_| 0.0, |_| 0.0).unwrap();
        assert!(f.interpolate(&[1.5, 0.0, 0.0]).is_err());
    }

    #[test]
    fn gradient_linear_field_exact() {
        let f = ScalarField::from_fn(grid2(32), |p| 2.0 * p[0] + 3.0, |_| 1.0).unwrap();
        let g = f.gradient(&[0.21, -0.37, 0.0]).unwrap();
        assert_relative_eq!(g[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(g[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn gradient_wedge_one_sided_slope() {
        // q|x_n| away from the crease: exact one-sided slope
        let q = 0.3;
        let f = ScalarField::from_fn(grid2(32), |p| q * p[1].abs(), |_| 1.0).unwrap();
        let g = f.gradient(&[0.1, 0.5, 0.0]).unwrap();
        assert_relative_eq!(g[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(g[1], q, epsilon = 1e-12);
    }

    #[test]
    fn gradient_quadratic_within_h_squared() {
        // |x|²/2: quadratics are differenced exactly by the width-h stencil
        let p = [0.217, -0.331, 0.0];
        let f = ScalarField::from_fn(grid2(32), |q| 0.5 * (q[0] * q[0] + q[1] * q[1]) + 1.0, |_| 1.0)
            .unwrap();
        let g = f.gradient(&p).unwrap();
        let e = ((g[0] - p[0]).powi(2) + (g[1] - p[1]).powi(2)).sqrt();
        let h = f.spec().h();
        assert!(e <= h * h, "error {e} exceeds h² = {}", h * h);
    }

    #[test]
    fn gradient_second_order_on_smooth_field() {
        // slope of the error on a 3-step refinement ladder must be >= 1.9
        let p = [0.217, -0.331, 0.0];
        let func = |q: &Point| (0.3 * q[0]).exp() * (2.0 + (2.0 * q[1]).sin());
        let grad = |q: &Point| {
            [
                0.3 * (0.3 * q[0]).exp() * (2.0 + (2.0 * q[1]).sin()),
                (0.3 * q[0]).exp() * 2.0 * (2.0 * q[1]).cos(),
            ]
        };
        let mut errs = Vec::new();
        for cells in [32, 64, 128] {
            let f = ScalarField::from_fn(grid2(cells), func, |_| 1.0).unwrap();
            let g = f.gradient(&p).unwrap();
            let ga = grad(&p);
            let e = ((g[0] - ga[0]).powi(2) + (g[1] - ga[1]).powi(2)).sqrt();
            errs.push(e.max(1e-16));
        }
        // log-log slope over the whole ladder (h halves twice)
        let slope = (errs[0] / errs[2]).log2() / 2.0;
        assert!(slope >= 1.9, "ladder slope {slope} too low ({errs:?})");
    }

    #[test]
    fn gradient_rejects_near_boundary_points() {
        let f = ScalarField::from_fn(grid2(16), |_| 0.0, |_| 0.0).unwrap();
        assert!(f.gradient(&[0.99, 0.0, 0.0]).is_err());
    }

    #[test]
    fn constructor_rejects_negative_u_and_bad_chi() {
        let spec = grid2(8);
        let n = spec.node_count();
        assert!(ScalarField::new(spec.clone(), vec![-1.0; n], vec![0.0; n], 1.0).is_err());
        assert!(ScalarField::new(spec.clone(), vec![0.0; n], vec![2.0; n], 1.0).is_err());
        assert!(ScalarField::new(spec, vec![0.0; n], vec![0.0; n], 1.0).is_ok());
    }

    #[test]
    fn lipschitz_validation() {
        let spec = grid2(16);
        let n = spec.node_count();
        let mut u = vec![0.0; n];
        for idx in spec.node_iter() {
            u[spec.node_index(idx)] = spec.node_pos(idx)[0] + 1.0;
        }
        assert!(ScalarField::new(spec.clone(), u.clone(), vec![1.0; n], 0.5).is_err());
        assert!(ScalarField::new(spec, u, vec![1.0; n], 1.0).is_ok());
    }

    #[test]
    fn chi_support_check() {
        let f = ScalarField::from_fn(grid2(8), |p| p[0].abs(), |p| if p[0] > 0.0 { 1.0 } else { 0.0 })
            .unwrap();
        // chi = 0 on x<0 where u>0: violates the support inclusion
        assert!(f.check_chi_support(1e-9).is_err());
        let g = ScalarField::from_fn(grid2(8), |p| p[0].abs(), |_| 1.0).unwrap();
        assert!(g.check_chi_support(1e-9).is_ok());
    }

    proptest! {
        #[test]
        fn interpolation_exact_on_random_multilinear(
            a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, d in 0.0f64..2.0,
            px in -0.95f64..0.95, py in -0.95f64..0.95,
        ) {
            // multilinear g = d+3 + a x + b y + c x y stays positive for bounded coeffs
            let g = move |p: &Point| 7.0 + d + a * p[0] + b * p[1] + c * p[0] * p[1];
            let f = ScalarField::from_fn(grid2(16), g, |_| 1.0).unwrap();
            let p = [px, py, 0.0];
            prop_assert!((f.interpolate(&p).unwrap() - g(&p)).abs() < 1e-12);
        }
    }
}
