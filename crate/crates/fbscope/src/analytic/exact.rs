//! Closed-form functionals and Laplacian masses for the catalogue.
//!
//! The quantities follow the local-energy conventions: D is the
//! r^{-n}-normalized bulk energy ∫(|∇u|² + χ), H the r^{-(n+1)}-normalized
//! boundary integral of u², M = D - H, N = (D - |B_1|)/H, and V the
//! r^{-n}-normalized mass of {χ = 0} divided by H. For polynomial profiles
//! the integrals run through the machine-exact polynomial quadrature; for
//! wedges and half-planes they are elementary cap and segment formulas.

use super::polyquad::{ball_poly, sphere_poly};
use super::{AnalyticSolution, SolutionKind};
use crate::error::{Error, Result};
use crate::geom::{self, Point};
use std::f64::consts::PI;

/// Exact (D, H, M, N, V) at a center and radius.
#[derive(Debug, Clone, Copy)]
pub struct ExactSample {
    pub d: f64,
    pub h: f64,
    pub m: f64,
    /// -∞ when H = 0
    pub n: f64,
    /// +∞ when H = 0 but {χ = 0} has mass
    pub v: f64,
}

fn assemble(d: f64, h: f64, chi_deficit: f64, dim: usize) -> ExactSample {
    let b = geom::unit_ball_volume(dim);
    let m = d - h;
    if h > 1e-300 {
        ExactSample {
            d,
            h,
            m,
            n: (d - b) / h,
            v: chi_deficit / h,
        }
    } else {
        ExactSample {
            d,
            h,
            m,
            n: f64::NEG_INFINITY,
            v: if chi_deficit > 0.0 { f64::INFINITY } else { 0.0 },
        }
    }
}

/// Volume of B_r ∩ {y·ν > -c}, c the signed distance of the center to the
/// zero hyperplane.
fn cap_volume(dim: usize, c: f64, r: f64) -> f64 {
    let t = (c / r).clamp(-1.0, 1.0);
    if dim == 2 {
        r * r * ((-t).acos() + t * (1.0 - t * t).max(0.0).sqrt())
    } else {
        let hcap = (r + c).clamp(0.0, 2.0 * r);
        PI * hcap * hcap * (3.0 * r - hcap) / 3.0
    }
}

/// ∫_{∂B_r} ((c + y·ν)⁺)² dH^{n-1}.
fn sphere_plus_sq(dim: usize, c: f64, r: f64) -> f64 {
    let t = c / r;
    if t <= -1.0 {
        return 0.0;
    }
    if dim == 2 {
        if t >= 1.0 {
            return r * (2.0 * PI * c * c + PI * r * r);
        }
        // integrate (c + r sinθ)² over {sinθ > -t} = (φ, π - φ), φ = asin(-t)
        let phi = (-t).asin();
        let anti = |th: f64| c * c * th - 2.0 * c * r * th.cos() + r * r * (th / 2.0 - (2.0 * th).sin() / 4.0);
        r * (anti(PI - phi) - anti(phi))
    } else {
        let m0 = (-t).max(-1.0);
        let a = c + r; // value at m = 1
        let b = c + r * m0;
        2.0 * PI * r / 3.0 * (a * a * a - b * b * b)
    }
}

impl AnalyticSolution {
    /// Exact D, H, M, N, V at center `x` and radius `r`. Supported for the
    /// whole catalogue except the cusp (no closed form exists there).
    pub fn exact_functionals(&self, x: &Point, r: f64) -> Result<ExactSample> {
        if !(r > 0.0) {
            return Err(Error::Parameter("radius must be positive".into()));
        }
        let dim = self.dim;
        let b = geom::unit_ball_volume(dim);
        match &self.kind {
            SolutionKind::Zero => Ok(assemble(0.0, 0.0, b, dim)),
            SolutionKind::Wedge { slope, normal }
            | SolutionKind::WedgeWithChiOne { slope, normal } => {
                let q = *slope;
                let c = geom::dot(x, normal, dim);
                let d = (q * q + 1.0) * b;
                let h = q * q * b * (1.0 + dim as f64 * c * c / (r * r));
                Ok(assemble(d, h, 0.0, dim))
            }
            SolutionKind::HalfPlane { slope, normal } => {
                let a = *slope;
                let c = geom::dot(x, normal, dim);
                let cap = cap_volume(dim, c, r);
                let d = (a * a + 1.0) * cap / r.powi(dim as i32);
                let h = a * a * sphere_plus_sq(dim, c, r) / r.powi(dim as i32 + 1);
                let chi_deficit = b - cap / r.powi(dim as i32);
                Ok(assemble(d, h, chi_deficit, dim))
            }
            SolutionKind::AbsHarmonic { poly } => {
                let gsq = |p: &Point| {
                    let g = poly.grad(p);
                    geom::dot(&g, &g, dim)
                };
                let vsq = |p: &Point| {
                    let v = poly.eval(p);
                    v * v
                };
                let d = (ball_poly(dim, x, r, &gsq) + b * r.powi(dim as i32)) / r.powi(dim as i32);
                let h = sphere_poly(dim, x, r, &vsq) / r.powi(dim as i32 + 1);
                Ok(assemble(d, h, 0.0, dim))
            }
            SolutionKind::HomogeneousAbs { k } => {
                let k = *k;
                let gsq = |p: &Point| {
                    let rho2 = p[0] * p[0] + p[1] * p[1];
                    (k as f64) * (k as f64) * rho2.powi(k as i32 - 1)
                };
                let vsq = |p: &Point| {
                    let v = super::re_z_pow(p, k);
                    v * v
                };
                let d = (ball_poly(2, x, r, &gsq) + b * r * r) / (r * r);
                let h = sphere_poly(2, x, r, &vsq) / r.powi(3);
                Ok(assemble(d, h, 0.0, 2))
            }
            SolutionKind::Cusp => Err(Error::NotAvailable(
                "no closed-form functionals for the cusp example",
            )),
        }
    }

    /// Exact Δu(B_r(x)) from the closed-form surface measure.
    pub fn exact_laplacian_mass(&self, x: &Point, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::Parameter("radius must be positive".into()));
        }
        let dim = self.dim;
        // H^{n-1} measure of the hyperplane at signed offset c through B_r
        let section = |c: f64| -> f64 {
            let s2 = (r * r - c * c).max(0.0);
            if dim == 2 {
                2.0 * s2.sqrt()
            } else {
                PI * s2
            }
        };
        match &self.kind {
            SolutionKind::Zero => Ok(0.0),
            SolutionKind::Wedge { slope, normal }
            | SolutionKind::WedgeWithChiOne { slope, normal } => {
                let c = geom::dot(x, normal, dim);
                Ok(2.0 * slope * section(c))
            }
            SolutionKind::HalfPlane { slope, normal } => {
                let c = geom::dot(x, normal, dim);
                Ok(slope * section(c))
            }
            SolutionKind::AbsHarmonic { poly } => {
                if dim != 2 {
                    return Err(Error::NotAvailable(
                        "closed-form Laplacian mass for |harmonic| is two-dimensional",
                    ));
                }
                let (angles, g, k) = poly.nodal_lines_2d();
                Ok(nodal_line_mass(x, r, &angles, g, k))
            }
            SolutionKind::HomogeneousAbs { k } => {
                let k = *k;
                // Re z^k vanishes on k lines through the origin
                let mut angles = Vec::with_capacity(k as usize);
                for j in 0..k {
                    angles.push((PI / 2.0 + j as f64 * PI) / k as f64);
                }
                Ok(nodal_line_mass(x, r, &angles, k as f64, k))
            }
            SolutionKind::Cusp => Err(Error::NotAvailable(
                "no closed-form Laplacian mass for the cusp example",
            )),
        }
    }
}

/// Mass 2 ∫ |∇v| dH¹ over lines through the origin intersected with
/// B_r(x), where |∇v| = g |s|^{k-1} at arclength s from the origin.
fn nodal_line_mass(x: &Point, r: f64, angles: &[f64], g: f64, k: u32) -> f64 {
    let mut total = 0.0;
    for &th in angles {
        let e = [th.cos(), th.sin(), 0.0];
        let p = geom::dot(x, &e, 2);
        let d2 = geom::dot(x, x, 2) - p * p;
        let span2 = r * r - d2;
        if span2 <= 0.0 {
            continue;
        }
        let ell = span2.sqrt();
        let (a, bb) = (p - ell, p + ell);
        let prim = |s: f64| s.signum() * s.abs().powi(k as i32) / k as f64;
        total += 2.0 * g * (prim(bb) - prim(a));
    }
    total
}

#[cfg(test)]
mod tests {
    use super::super::HarmonicPoly;
    use super::*;
    use crate::geom::axis;
    use approx::assert_relative_eq;

    #[test]
    fn wedge_at_crease_all_dims() {
        // D = (q²+1)|B_1|, H = q²|B_1|, M = |B_1|, N = 1, V = 0
        for dim in [2usize, 3] {
            let b = geom::unit_ball_volume(dim);
            let q = 0.7;
            let w = AnalyticSolution::wedge(q, axis(dim - 1), dim).unwrap();
            for r in [0.1, 0.5, 2.0] {
                let s = w.exact_functionals(&[0.0; 3], r).unwrap();
                assert_relative_eq!(s.d, (q * q + 1.0) * b, max_relative = 1e-14);
                assert_relative_eq!(s.h, q * q * b, max_relative = 1e-14);
                assert_relative_eq!(s.m, b, max_relative = 1e-14);
                assert_relative_eq!(s.n, 1.0, max_relative = 1e-14);
                assert_eq!(s.v, 0.0);
            }
        }
    }

    #[test]
    fn wedge_off_crease_frequency_drops() {
        // H picks up the n c²/r² term, so N = 1/(1 + n c²/r²)
        let q = 0.4;
        let w = AnalyticSolution::wedge(q, axis(1), 2).unwrap();
        let x = [0.3, 0.1, 0.0];
        let r = 0.2;
        let s = w.exact_functionals(&x, r).unwrap();
        let pred = 1.0 / (1.0 + 2.0 * 0.1f64.powi(2) / (r * r));
        assert_relative_eq!(s.n, pred, max_relative = 1e-13);
    }

    #[test]
    fn halfplane_on_boundary_density_half() {
        // M = |B_1|/2 = π/2 in the plane; the Almgren ratio N + V is 1
        let hp = AnalyticSolution::half_plane(1.0, axis(1), 2).unwrap();
        let s = hp.exact_functionals(&[0.0; 3], 0.25).unwrap();
        assert_relative_eq!(s.m, PI / 2.0, max_relative = 1e-13);
        assert_relative_eq!(s.d, PI, max_relative = 1e-13);
        assert_relative_eq!(s.h, PI / 2.0, max_relative = 1e-13);
        assert_relative_eq!(s.n, 0.0, epsilon = 1e-13);
        assert_relative_eq!(s.v, 1.0, max_relative = 1e-13);
        assert_relative_eq!(s.n + s.v, 1.0, max_relative = 1e-13);
        // 3D: M = |B_1|/2 as well
        let hp3 = AnalyticSolution::half_plane(1.0, axis(2), 3).unwrap();
        let s3 = hp3.exact_functionals(&[0.0; 3], 0.25).unwrap();
        assert_relative_eq!(s3.m, geom::unit_ball_volume(3) / 2.0, max_relative = 1e-13);
    }

    #[test]
    fn halfplane_deep_zero_side() {
        let hp = AnalyticSolution::half_plane(1.0, axis(1), 2).unwrap();
        let s = hp.exact_functionals(&[0.0, -0.5, 0.0], 0.2).unwrap();
        assert_eq!(s.d, 0.0);
        assert_eq!(s.h, 0.0);
        assert_eq!(s.n, f64::NEG_INFINITY);
        assert_eq!(s.v, f64::INFINITY);
    }

    #[test]
    fn homabs_k2_frequency_two() {
        // u = |Re z²|: D = π + 2πr², H = πr², N ≡ 2, M = π + πr², V = 0
        let h = AnalyticSolution::homogeneous_abs(2).unwrap();
        for r in [0.1, 0.3, 0.7] {
            let s = h.exact_functionals(&[0.0; 3], r).unwrap();
            assert_relative_eq!(s.d, PI + 2.0 * PI * r * r, max_relative = 1e-12);
            assert_relative_eq!(s.h, PI * r * r, max_relative = 1e-12);
            assert_relative_eq!(s.n, 2.0, max_relative = 1e-12);
            assert_eq!(s.v, 0.0);
        }
        // H_x(0+) = 0: the origin is degenerate
        let s = h.exact_functionals(&[0.0; 3], 1e-3).unwrap();
        assert!(s.h < 1e-5);
    }

    #[test]
    fn absharm_saddle_matches_homabs_k2() {
        let a = AnalyticSolution::abs_harmonic(HarmonicPoly::SaddleXY, 2).unwrap();
        let h = AnalyticSolution::homogeneous_abs(2).unwrap();
        let x = [0.12, -0.05, 0.0];
        let sa = a.exact_functionals(&x, 0.3).unwrap();
        let sh = h.exact_functionals(&x, 0.3).unwrap();
        assert_relative_eq!(sa.d, sh.d, max_relative = 1e-12);
        assert_relative_eq!(sa.h, sh.h, max_relative = 1e-12);
        assert_relative_eq!(sa.n, sh.n, max_relative = 1e-11);
    }

    #[test]
    fn zero_solution_sample() {
        let z = AnalyticSolution::zero(2);
        let s = z.exact_functionals(&[0.1, 0.2, 0.0], 0.4).unwrap();
        assert_eq!(s.d, 0.0);
        assert_eq!(s.m, 0.0);
        assert_eq!(s.n, f64::NEG_INFINITY);
        assert_eq!(z.exact_laplacian_mass(&[0.0; 3], 1.0).unwrap(), 0.0);
    }

    #[test]
    fn laplacian_masses() {
        // wedge: 2q · 2r in the plane
        let w = AnalyticSolution::wedge(0.3, axis(1), 2).unwrap();
        assert_relative_eq!(
            w.exact_laplacian_mass(&[0.0; 3], 0.5).unwrap(),
            4.0 * 0.3 * 0.5,
            max_relative = 1e-14
        );
        // half-plane a=1: 1 · 2r
        let hp = AnalyticSolution::half_plane(1.0, axis(1), 2).unwrap();
        assert_relative_eq!(
            hp.exact_laplacian_mass(&[0.0; 3], 0.5).unwrap(),
            2.0 * 0.5,
            max_relative = 1e-14
        );
        // |x²-y²| over B_r(0): 8r²
        let a = AnalyticSolution::abs_harmonic(HarmonicPoly::SaddleXY, 2).unwrap();
        assert_relative_eq!(
            a.exact_laplacian_mass(&[0.0; 3], 0.5).unwrap(),
            8.0 * 0.25,
            max_relative = 1e-14
        );
        // 3D wedge: 2q · π(r² - c²)
        let w3 = AnalyticSolution::wedge(0.5, axis(2), 3).unwrap();
        assert_relative_eq!(
            w3.exact_laplacian_mass(&[0.0, 0.0, 0.1], 0.5).unwrap(),
            2.0 * 0.5 * PI * (0.25 - 0.01),
            max_relative = 1e-14
        );
    }

    #[test]
    fn monotone_in_r_exactly() {
        // M_x(r₁) <= M_x(r₂) on the variational members of the catalogue
        // (wedges balance for every q; half-planes only at slope 1)
        let sols = [
            AnalyticSolution::wedge(0.6, axis(1), 2).unwrap(),
            AnalyticSolution::half_plane(1.0, axis(1), 2).unwrap(),
            AnalyticSolution::homogeneous_abs(3).unwrap(),
            AnalyticSolution::abs_harmonic(HarmonicPoly::SaddleXY, 2).unwrap(),
        ];
        for sol in &sols {
            let x = [0.05, 0.02, 0.0];
            let mut prev = f64::NEG_INFINITY;
            for i in 0..12 {
                let r = 0.05 * 1.3f64.powi(i);
                let m = sol.exact_functionals(&x, r).unwrap().m;
                assert!(
                    m >= prev - 1e-11,
                    "{:?}: M({r}) = {m} < previous {prev}",
                    sol.kind
                );
                prev = m;
            }
        }
    }

    #[test]
    fn off_slope_halfplane_breaks_monotonicity() {
        // slope != 1 violates the free boundary balance, and M detects it
        let hp = AnalyticSolution::half_plane(0.8, axis(1), 2).unwrap();
        let x = [0.05, 0.02, 0.0];
        let mut drops = false;
        let mut prev = f64::NEG_INFINITY;
        for i in 0..12 {
            let r = 0.05 * 1.3f64.powi(i);
            let m = hp.exact_functionals(&x, r).unwrap().m;
            if m < prev - 1e-11 {
                drops = true;
            }
            prev = m;
        }
        assert!(drops, "expected a monotonicity violation for slope 0.8");
    }

    #[test]
    fn wedge_density_identity() {
        // 2 α(n) √(H_x(0+)) = 2q at crease points, and α(n)√H0 = q <= 1
        for dim in [2usize, 3] {
            let q = 0.35;
            let w = AnalyticSolution::wedge(q, axis(dim - 1), dim).unwrap();
            let s = w.exact_functionals(&[0.0; 3], 0.3).unwrap();
            let alpha = 1.0 / geom::unit_ball_volume(dim).sqrt();
            assert_relative_eq!(2.0 * alpha * s.h.sqrt(), 2.0 * q, max_relative = 1e-13);
            assert!(alpha * s.h.sqrt() <= 1.0);
        }
    }

    #[test]
    fn cusp_has_no_closed_form() {
        let c = AnalyticSolution::new(SolutionKind::Cusp, 2).unwrap();
        assert!(matches!(
            c.exact_functionals(&[0.0; 3], 0.1),
            Err(Error::NotAvailable(_))
        ));
    }
}
