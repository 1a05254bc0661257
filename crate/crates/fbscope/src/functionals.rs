//! The local energy functionals.
//!
//! For a field pair (u, χ) and a ball B_r(x):
//!
//!   D = r^{-n} ∫_{B_r} (|∇u|² + χ)
//!   H = r^{-(n+1)} ∫_{∂B_r} u²
//!   M = D - H                     (nondecreasing in r)
//!   N = (D - |B_1|)/H             (-∞ when H = 0)
//!   V = r^{-n} ∫_{B_r} (1 - χ) / H
//!
//! With these normalizations N + V = r ∫_{B_r}|∇u|² / ∫_{∂B_r}u², the
//! Almgren ratio of a harmonic function. N is meaningful (>= 1, monotone)
//! only once M >= |B_1| has been certified at some smaller radius; samples
//! carry that certificate as a flag rather than refusing to evaluate.

use crate::error::{Error, Result};
use crate::field::{ball_integral_at, sphere_integral, BallRegion, FieldView};
use crate::geom::{self, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// α(n) = (∫_{∂B_1} x_n² dH^{n-1})^{-1/2}, the dimensional constant that
/// gives the wedge profile α(n)|x_n| unit H.
pub fn alpha_n(dim: usize) -> f64 {
    1.0 / geom::sphere_coordinate_moment(dim).sqrt()
}

/// The functional tuple at one center and radius.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FunctionalSample {
    pub x: Point,
    pub r: f64,
    pub d: f64,
    pub h: f64,
    pub m: f64,
    /// -∞ sentinel when H = 0 (below quadrature noise)
    pub n: f64,
    pub v: f64,
    pub quad_err: f64,
    /// H > 0 and M >= |B_1| certified at some t <= r
    pub n_defined: bool,
}

impl FunctionalSample {
    pub fn h_positive(&self) -> bool {
        self.n > f64::NEG_INFINITY
    }
}

fn sphere_nodes(spec_h: f64, r: f64, dim: usize) -> usize {
    let wanted = (2.0 * std::f64::consts::PI * r / spec_h).ceil() as usize;
    let cap = if dim == 2 { 2048 } else { 256 };
    wanted.clamp(64, cap)
}

/// Evaluate (D, H, M, N, V) by quadrature.
pub fn sample(field: &dyn FieldView, x: &Point, r: f64) -> Result<FunctionalSample> {
    let spec = field.quad_spec();
    let dim = field.dim();
    let b_n = geom::unit_ball_volume(dim);
    let region = BallRegion::new(spec, *x, r);
    let pitch = field.quad_pitch(r);
    let qd = ball_integral_at(spec, &region, pitch, |p| {
        let g = field.grad(p);
        geom::dot(&g, &g, dim) + field.chi(p)
    })?;
    let qh = sphere_integral(spec, &region, sphere_nodes(spec.h(), r, dim), |p| {
        let u = field.value(p);
        u * u
    })?;
    let rn = r.powi(dim as i32);
    let d = qd.value / rn;
    let h = qh.value / (rn * r);
    let err_d = qd.err / rn;
    let err_h = qh.err / (rn * r);
    let quad_err = err_d + err_h;
    let m = d - h;
    let h_positive = h > 10.0 * err_h + 1e-300;
    let (n, v) = if h_positive {
        let qv = ball_integral_at(spec, &region, pitch, |p| 1.0 - field.chi(p))?;
        ((d - b_n) / h, (qv.value / rn).max(0.0) / h)
    } else {
        (f64::NEG_INFINITY, 0.0)
    };
    let n_defined = h_positive && m >= b_n - 2.0 * quad_err;
    Ok(FunctionalSample {
        x: *x,
        r,
        d,
        h,
        m,
        n,
        v,
        quad_err,
        n_defined,
    })
}

/// Residuals of a derivative identity, with the propagated quadrature
/// tolerance of the comparison.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DerivativeCheck {
    pub r: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub tolerance: f64,
}

impl DerivativeCheck {
    /// Residual relative to the larger side, floored by the tolerance.
    pub fn relative_residual(&self) -> f64 {
        let scale = self.lhs.abs().max(self.rhs.abs()).max(self.tolerance);
        if scale == 0.0 {
            0.0
        } else {
            self.residual / scale
        }
    }
}

fn fd_step(spec_h: f64, r: f64) -> f64 {
    (0.02 * r).max(1.5 * spec_h)
}

/// Check dM/dr = (2/r^{n+2}) ∫_{∂B_r} (u - (y-x)·∇u)² against a centered
/// difference of M.
pub fn m_derivative_check(field: &dyn FieldView, x: &Point, r: f64) -> Result<DerivativeCheck> {
    let spec = field.quad_spec();
    let dim = field.dim();
    let dr = fd_step(spec.h(), r);
    let lo = sample(field, x, r - dr)?;
    let hi = sample(field, x, r + dr)?;
    let lhs = (hi.m - lo.m) / (2.0 * dr);
    let region = BallRegion::new(spec, *x, r);
    let q = sphere_integral(spec, &region, sphere_nodes(spec.h(), r, dim), |p| {
        let u = field.value(p);
        let g = field.grad(p);
        let y = geom::sub(p, x);
        let t = u - geom::dot(&y, &g, dim);
        t * t
    })?;
    let scale = 2.0 / r.powi(dim as i32 + 2);
    let rhs = scale * q.value;
    let tolerance = (hi.quad_err + lo.quad_err) / (2.0 * dr) + scale * q.err;
    Ok(DerivativeCheck {
        r,
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
        tolerance,
    })
}

/// Check dN/dr against both closed forms (the V²-form and the
/// rewritten N-form); the worse residual is returned.
pub fn n_derivative_check(field: &dyn FieldView, x: &Point, r: f64) -> Result<DerivativeCheck> {
    let spec = field.quad_spec();
    let dim = field.dim();
    let dr = fd_step(spec.h(), r);
    let lo = sample(field, x, r - dr)?;
    let hi = sample(field, x, r + dr)?;
    let mid = sample(field, x, r)?;
    if !mid.h_positive() || !lo.h_positive() || !hi.h_positive() {
        return Err(Error::Precondition(
            "frequency derivative needs H > 0 on the stencil".into(),
        ));
    }
    let lhs = (hi.n - lo.n) / (2.0 * dr);
    let region = BallRegion::new(spec, *x, r);
    let nodes = sphere_nodes(spec.h(), r, dim);
    let scale = 2.0 / (mid.h * r.powi(dim as i32 + 2));
    let sq_term = |coef: f64| -> Result<(f64, f64)> {
        let q = sphere_integral(spec, &region, nodes, |p| {
            let u = field.value(p);
            let g = field.grad(p);
            let y = geom::sub(p, x);
            let t = geom::dot(&g, &y, dim) - coef * u;
            t * t
        })?;
        Ok((scale * q.value, scale * q.err))
    };
    let (t1, e1) = sq_term(mid.n + mid.v)?;
    let rhs1 = t1 + (2.0 / r) * (mid.v * mid.v + mid.v * (mid.n - 1.0));
    let (t2, e2) = sq_term(mid.n)?;
    let rhs2 = t2 + (2.0 / r) * (mid.v * (mid.n - 1.0));
    let res1 = (lhs - rhs1).abs();
    let res2 = (lhs - rhs2).abs();
    let (rhs, residual, err_rhs) = if res1 >= res2 {
        (rhs1, res1, e1)
    } else {
        (rhs2, res2, e2)
    };
    let err_lhs = (hi.quad_err / hi.h + lo.quad_err / lo.h) / (2.0 * dr);
    Ok(DerivativeCheck {
        r,
        lhs,
        rhs,
        residual,
        tolerance: err_lhs + err_rhs,
    })
}

/// Per-interval derivative diagnostics attached to a profile.
#[derive(Debug, Clone, Serialize)]
pub struct DerivativeDiagnostics {
    pub m_checks: Vec<DerivativeCheck>,
    pub n_checks: Vec<DerivativeCheck>,
}

/// Samples along a geometric radius ladder, with monotonicity flags.
#[derive(Debug, Clone, Serialize)]
pub struct RadialProfile {
    pub x: Point,
    pub u_center: f64,
    pub samples: Vec<FunctionalSample>,
    pub m_nondecreasing: bool,
    /// nondecreasing over the certified rungs
    pub n_nondecreasing: bool,
    /// index of the smallest certified rung, if any
    pub certified_from: Option<usize>,
    pub diagnostics: Option<DerivativeDiagnostics>,
}

pub fn profile(
    field: &dyn FieldView,
    x: &Point,
    r_min: f64,
    r_max: f64,
    n_radii: usize,
) -> Result<RadialProfile> {
    profile_with(field, x, r_min, r_max, n_radii, false)
}

pub fn profile_with(
    field: &dyn FieldView,
    x: &Point,
    r_min: f64,
    r_max: f64,
    n_radii: usize,
    derivative_checks: bool,
) -> Result<RadialProfile> {
    if n_radii < 8 {
        return Err(Error::Parameter("profiles need at least 8 radii".into()));
    }
    if !(0.0 < r_min && r_min < r_max) {
        return Err(Error::Parameter("need 0 < r_min < r_max".into()));
    }
    let ratio = (r_max / r_min).powf(1.0 / (n_radii - 1) as f64);
    let mut samples = Vec::with_capacity(n_radii);
    for i in 0..n_radii {
        let r = r_min * ratio.powi(i as i32);
        samples.push(sample(field, x, r)?);
    }
    // certification sweeps up from the smallest rung
    let b_n = geom::unit_ball_volume(field.dim());
    let mut certified_from = None;
    for (i, s) in samples.iter().enumerate() {
        if s.h_positive() && s.m >= b_n - 2.0 * s.quad_err {
            certified_from = Some(i);
            break;
        }
    }
    if let Some(i0) = certified_from {
        for i in i0..samples.len() {
            samples[i].n_defined = samples[i].h_positive();
        }
    }
    // machine-noise floor so exactly-constant ladders do not trip the flag
    let floor = |scale: f64| 1e-10 * (1.0 + scale.abs());
    let m_nondecreasing = samples.windows(2).all(|w| {
        w[1].m >= w[0].m - 2.0 * (w[0].quad_err + w[1].quad_err) - floor(w[0].m)
    });
    let n_nondecreasing = match certified_from {
        Some(i0) => samples[i0..].windows(2).all(|w| {
            !(w[0].h_positive() && w[1].h_positive())
                || w[1].n
                    >= w[0].n
                        - 2.0 * (w[0].quad_err / w[0].h + w[1].quad_err / w[1].h)
                        - floor(w[0].n)
        }),
        None => true,
    };
    let diagnostics = if derivative_checks {
        let mut m_checks = Vec::new();
        let mut n_checks = Vec::new();
        for s in samples.iter().take(samples.len() - 1).skip(1) {
            if let Ok(c) = m_derivative_check(field, x, s.r) {
                m_checks.push(c);
            }
            if s.n_defined {
                if let Ok(c) = n_derivative_check(field, x, s.r) {
                    n_checks.push(c);
                }
            }
        }
        Some(DerivativeDiagnostics { m_checks, n_checks })
    } else {
        None
    };
    Ok(RadialProfile {
        x: *x,
        u_center: field.value(x),
        samples,
        m_nondecreasing,
        n_nondecreasing,
        certified_from,
        diagnostics,
    })
}

/// Limit estimates at r -> 0+ from a profile ladder.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LimitEstimate {
    /// -∞ sentinel at interior positivity points
    pub m0: f64,
    pub n0: Option<f64>,
    pub h0: f64,
    /// ladder stabilized (relative change over the last two rungs <= 5%)
    pub stable: bool,
}

/// Aitken-style step for a monotone ladder sampled at a geometric radius
/// sequence: v(r) ≈ v0 + c r^p.
fn richardson(v1: f64, v2: f64, v3: f64) -> f64 {
    let d1 = v2 - v1;
    let d2 = v3 - v2;
    if d1.abs() > 1e-14 && d2.abs() > d1.abs() * (1.0 + 1e-9) {
        v1 - d1 * d1 / (d2 - d1)
    } else {
        v1
    }
}

pub fn limit_extrapolate(profile: &RadialProfile) -> LimitEstimate {
    let s = &profile.samples;
    let dim_guess = 2 + usize::from(s[0].x[2] != 0.0);
    let b_n = geom::unit_ball_volume(if s[0].x[2] == 0.0 { dim_guess.min(2).max(2) } else { 3 });
    let bottom = &s[0];
    // interior positivity: H blows up like u(x)²/r², so M plunges
    if bottom.m < -b_n {
        return LimitEstimate {
            m0: f64::NEG_INFINITY,
            n0: None,
            h0: bottom.h,
            stable: true,
        };
    }
    let m0 = if s.len() >= 3 {
        richardson(s[0].m, s[1].m, s[2].m)
    } else {
        bottom.m
    };
    // H is nondecreasing on the certified set; the bottom rung is the
    // monotone estimate (no model fitting)
    let h0 = bottom.h;
    let n0 = match profile.certified_from {
        Some(i0) if s.len() >= i0 + 3 => Some(richardson(s[i0].n, s[i0 + 1].n, s[i0 + 2].n)),
        Some(i0) => Some(s[i0].n),
        None => None,
    };
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(0.05 * b_n);
    let mut stable = rel(s[0].m, s[1].m) <= 0.05;
    if let Some(i0) = profile.certified_from {
        if i0 + 1 < s.len() {
            stable = stable && rel(s[i0].n, s[i0 + 1].n) <= 0.05;
        }
    }
    LimitEstimate {
        m0,
        n0,
        h0,
        stable,
    }
}

/// Result of the domain-variation residual sweep.
#[derive(Debug, Clone, Serialize)]
pub struct VariationalResidual {
    /// max over the test family of |∫(|∇u|²+χ)divξ - 2∇u·Dξ∇u| / (∫|ξ| + ∫|Dξ|)
    pub residual: f64,
    /// refinement-difference estimate of the numeric error of that max
    pub tolerance: f64,
    pub per_field: Vec<f64>,
}

struct BumpField {
    center: Point,
    scale: f64,
    dir: [f64; 3],
}

impl BumpField {
    fn bump(t: f64) -> f64 {
        if t.abs() >= 1.0 {
            0.0
        } else {
            let s = 1.0 - t * t;
            s * s * s
        }
    }
    fn bump_d(t: f64) -> f64 {
        if t.abs() >= 1.0 {
            0.0
        } else {
            let s = 1.0 - t * t;
            -6.0 * t * s * s
        }
    }
    /// (bump product, its gradient)
    fn shape(&self, p: &Point, dim: usize) -> (f64, [f64; 3]) {
        let mut vals = [1.0f64; 3];
        let mut prod = 1.0;
        let mut ts = [0.0f64; 3];
        for d in 0..dim {
            let t = (p[d] - self.center[d]) / self.scale;
            ts[d] = t;
            vals[d] = Self::bump(t);
            prod *= vals[d];
        }
        let mut grad = [0.0f64; 3];
        if prod != 0.0 {
            for d in 0..dim {
                let mut g = Self::bump_d(ts[d]) / self.scale;
                for e in 0..dim {
                    if e != d {
                        g *= vals[e];
                    }
                }
                grad[d] = g;
            }
        }
        (prod, grad)
    }
}

/// Max normalized residual of the domain-variation identity over a fixed
/// seeded family of tensor-product bump vector fields. This is the
/// acceptance gate for calling a gridded field variational.
pub fn variational_residual(
    field: &dyn FieldView,
    n_testfields: usize,
    seed: u64,
) -> VariationalResidual {
    let spec = field.quad_spec();
    let dim = field.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let org = spec.origin();
    let ext = spec.extent();
    let min_ext = (0..dim).map(|d| ext[d]).fold(f64::INFINITY, f64::min);
    let mut worst = 0.0f64;
    let mut worst_tol = 0.0f64;
    let mut per_field = Vec::with_capacity(n_testfields);
    for _ in 0..n_testfields {
        let scale = min_ext * (0.08 + 0.17 * rng.gen::<f64>());
        let mut center = [0.0; 3];
        for d in 0..dim {
            let lo = org[d] + scale + 2.0 * spec.h();
            let hi = org[d] + ext[d] - scale - 2.0 * spec.h();
            center[d] = lo + (hi - lo) * rng.gen::<f64>();
        }
        let mut dir = [0.0; 3];
        for v in dir.iter_mut().take(dim) {
            *v = rng.gen::<f64>() * 2.0 - 1.0;
        }
        geom::normalize(&mut dir, dim);
        let bump = BumpField {
            center,
            scale,
            dir,
        };
        let evaluate = |pitch: f64| -> (f64, f64) {
            let mut i0 = [0isize; 3];
            let mut i1 = [0isize; 3];
            for d in 0..dim {
                i0[d] = ((center[d] - scale - org[d]) / pitch).floor() as isize;
                i1[d] = ((center[d] + scale - org[d]) / pitch).ceil() as isize;
            }
            let cell = pitch.powi(dim as i32);
            let half = 0.5 * pitch;
            let kz = if dim == 3 { (i0[2], i1[2]) } else { (0, 1) };
            let mut num = 0.0;
            let mut den = 0.0;
            for ix in i0[0]..i1[0] {
                let xm = org[0] + ix as f64 * pitch + half;
                for iy in i0[1]..i1[1] {
                    let ym = org[1] + iy as f64 * pitch + half;
                    for iz in kz.0..kz.1 {
                        let zm = if dim == 3 {
                            org[2] + iz as f64 * pitch + half
                        } else {
                            0.0
                        };
                        let p = [xm, ym, zm];
                        let (b, q) = bump.shape(&p, dim);
                        if b == 0.0 && q.iter().all(|&t| t == 0.0) {
                            continue;
                        }
                        let g = field.grad(&p);
                        let chi = field.chi(&p);
                        let gg = geom::dot(&g, &g, dim);
                        let a_dot_g = geom::dot(&bump.dir, &g, dim);
                        let q_dot_g = geom::dot(&q, &g, dim);
                        let a_dot_q = geom::dot(&bump.dir, &q, dim);
                        num += cell * ((gg + chi) * a_dot_q - 2.0 * a_dot_g * q_dot_g);
                        // |ξ| = |a| b = b; |Dξ|_F = |a||q| = |q|
                        den += cell * (b.abs() + geom::norm(&q, dim));
                    }
                }
            }
            (num, den)
        };
        let (num_c, _den_c) = evaluate(spec.h());
        let (num_f, den_f) = evaluate(spec.h() * 0.5);
        let resid = num_f.abs() / den_f;
        let tol = (num_f - num_c).abs() / den_f;
        per_field.push(resid);
        if resid > worst {
            worst = resid;
            worst_tol = tol;
        }
        worst_tol = worst_tol.max(tol);
    }
    VariationalResidual {
        residual: worst,
        tolerance: worst_tol,
        per_field,
    }
}

/// CSV rows for functional samples: 17 significant digits throughout.
pub fn samples_to_csv(samples: &[FunctionalSample], dim: usize, header_comment: &str) -> String {
    let mut out = String::new();
    if !header_comment.is_empty() {
        out.push_str(&format!("# {header_comment}\n"));
    }
    out.push_str(if dim == 2 {
        "x,y,r,D,H,M,N,V,quad_err,n_defined\n"
    } else {
        "x,y,z,r,D,H,M,N,V,quad_err,n_defined\n"
    });
    for s in samples {
        let coords = if dim == 2 {
            format!("{:.16e},{:.16e}", s.x[0], s.x[1])
        } else {
            format!("{:.16e},{:.16e},{:.16e}", s.x[0], s.x[1], s.x[2])
        };
        out.push_str(&format!(
            "{coords},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
            s.r, s.d, s.h, s.m, s.n, s.v, s.quad_err, s.n_defined
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{AnalyticSolution, HarmonicPoly};
    use crate::field::{GridSpec, ScalarField};
    use crate::geom::axis;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn alpha_values() {
        assert_relative_eq!(alpha_n(2), 1.0 / PI.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(alpha_n(2), 0.5641895835477563, max_relative = 1e-12);
        assert_relative_eq!(alpha_n(3), (3.0 / (4.0 * PI)).sqrt(), max_relative = 1e-15);
        assert_relative_eq!(alpha_n(3), 0.4886025119029199, max_relative = 1e-12);
        for dim in [2, 3] {
            let id = alpha_n(dim) * alpha_n(dim) * geom::unit_ball_volume(dim);
            assert!((id - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn alpha_matches_numeric_sphere_moment() {
        // quadrature cross-check of the defining integral
        for dim in [2usize, 3] {
            let spec = GridSpec::centered_box(dim, 1.5, 32).unwrap();
            let b = BallRegion::new(&spec, [0.0; 3], 1.0);
            let q = sphere_integral(&spec, &b, 256, |p| {
                let t = p[dim - 1];
                t * t
            })
            .unwrap();
            assert!((alpha_n(dim) - 1.0 / q.value.sqrt()).abs() < 1e-4);
        }
    }

    #[test]
    fn wedge_sample_matches_exact() {
        let w = AnalyticSolution::wedge(0.5, axis(1), 2).unwrap();
        let field = w.with_grid(GridSpec::unit_box(2, 128).unwrap()).unwrap();
        let s = sample(&field, &[0.0; 3], 0.25).unwrap();
        let e = w.exact_functionals(&[0.0; 3], 0.25).unwrap();
        assert_relative_eq!(s.d, e.d, max_relative = 1e-10);
        assert_relative_eq!(s.h, e.h, max_relative = 1e-10);
        assert!((s.n - 1.0).abs() < 1e-2);
        assert!(s.v.abs() < 1e-10);
        assert!(s.n_defined);
    }

    #[test]
    fn gridded_wedge_matches_exact_to_percent() {
        let w = AnalyticSolution::wedge(0.7, axis(1), 2).unwrap();
        let f = w.sample_on(GridSpec::unit_box(2, 128).unwrap()).unwrap();
        let s = sample(&f, &[0.0; 3], 0.25).unwrap();
        let e = w.exact_functionals(&[0.0; 3], 0.25).unwrap();
        assert!((s.d - e.d).abs() / e.d < 1e-2, "D {} vs {}", s.d, e.d);
        assert!((s.h - e.h).abs() / e.h < 1e-2);
        assert!((s.m - e.m).abs() / e.m < 1e-2);
        assert!((s.n - 1.0).abs() < 1e-2);
    }

    #[test]
    fn halfplane_sample_values() {
        let hp = AnalyticSolution::half_plane(1.0, axis(1), 2).unwrap();
        let field = hp.with_grid(GridSpec::unit_box(2, 128).unwrap()).unwrap();
        let s = sample(&field, &[0.0; 3], 0.25).unwrap();
        assert!((s.m - PI / 2.0).abs() < 1e-2);
        assert!((s.v - 1.0).abs() < 1e-2);
        // Almgren ratio N + V = 1 for the one-homogeneous half-plane profile
        assert!((s.n + s.v - 1.0).abs() < 1e-2);
        assert!(!s.n_defined); // M = |B_1|/2 < |B_1|
    }

    #[test]
    fn zero_field_sentinel() {
        let spec = GridSpec::unit_box(2, 32).unwrap();
        let f = ScalarField::from_fn(spec, |_| 0.0, |_| 0.0).unwrap();
        let s = sample(&f, &[0.0; 3], 0.25).unwrap();
        assert_eq!(s.d, 0.0);
        assert_eq!(s.m, 0.0);
        assert_eq!(s.n, f64::NEG_INFINITY);
        assert!(!s.n_defined);
    }

    #[test]
    fn freq_plus_vol_is_almgren_ratio() {
        // N + V = r ∫|∇u|² / ∫_{∂B_r} u² on fields with H > 0
        let sols = [
            AnalyticSolution::wedge(0.6, axis(1), 2).unwrap(),
            AnalyticSolution::half_plane(1.0, axis(1), 2).unwrap(),
            AnalyticSolution::abs_harmonic(HarmonicPoly::SaddleXY, 2).unwrap(),
        ];
        let spec = GridSpec::unit_box(2, 96).unwrap();
        for sol in &sols {
            let field = sol.with_grid(spec.clone()).unwrap();
            let x = [0.1, 0.05, 0.0];
            let r = 0.3;
            let s = sample(&field, &x, r).unwrap();
            if !s.h_positive() {
                continue;
            }
            // same quadrature rules as sample(): the check isolates the
            // algebraic identity, not a second quadrature's error
            let region = BallRegion::new(&spec, x, r);
            let grad2 = ball_integral_at(&spec, &region, field.quad_pitch(r), |p| {
                let g = field.grad(p);
                geom::dot(&g, &g, 2)
            })
            .unwrap();
            let usq = sphere_integral(&spec, &region, sphere_nodes(spec.h(), r, 2), |p| {
                let u = field.value(p);
                u * u
            })
            .unwrap();
            let almgren = r * grad2.value / usq.value;
            assert!(
                (s.n + s.v - almgren).abs() <= 2.0 * s.quad_err + 1e-9,
                "{:?}: N+V = {} vs almgren {}",
                sol.kind,
                s.n + s.v,
                almgren
            );
        }
    }

    #[test]
    fn profile_wedge_constant() {
        let w = AnalyticSolution::wedge(0.4, axis(1), 2).unwrap();
        let field = w.with_grid(GridSpec::unit_box(2, 96).unwrap()).unwrap();
        let prof = profile(&field, &[0.0; 3], 0.05, 0.4, 8).unwrap();
        assert!(prof.m_nondecreasing);
        assert!(prof.n_nondecreasing);
        assert_eq!(prof.certified_from, Some(0));
        for s in &prof.samples {
            assert!((s.m - PI).abs() < 1e-6);
            assert!((s.n - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn profile_homabs_frequency_two() {
        let hsol = AnalyticSolution::homogeneous_abs(2).unwrap();
        let field = hsol.with_grid(GridSpec::unit_box(2, 96).unwrap()).unwrap();
        let prof = profile(&field, &[0.0; 3], 0.05, 0.4, 8).unwrap();
        for s in &prof.samples {
            assert!((s.n - 2.0).abs() < 1e-3, "N = {}", s.n);
        }
    }

    #[test]
    fn m_derivative_wedge_both_sides_vanish() {
        let w = AnalyticSolution::wedge(0.5, axis(1), 2).unwrap();
        let field = w.with_grid(GridSpec::unit_box(2, 96).unwrap()).unwrap();
        let c = m_derivative_check(&field, &[0.0; 3], 0.3).unwrap();
        assert!(c.lhs.abs() < 1e-8, "lhs {}", c.lhs);
        assert!(c.rhs.abs() < 1e-12, "rhs {}", c.rhs);
    }

    #[test]
    fn m_derivative_one_homogeneous_trivial() {
        // any 1-homogeneous profile has u - y·∇u ≡ 0, so both sides vanish
        let hp = AnalyticSolution::half_plane(1.0, axis(1), 2).unwrap();
        let field = hp.with_grid(GridSpec::unit_box(2, 96).unwrap()).unwrap();
        let c = m_derivative_check(&field, &[0.0; 3], 0.3).unwrap();
        assert!(c.lhs.abs() < 1e-4 && c.rhs.abs() < 1e-7, "{c:?}");
    }

    #[test]
    fn m_derivative_homabs_nontrivial_match() {
        // degree-2 homogeneity: u - y·∇u = -u, RHS = 2πs in the plane
        let hsol = AnalyticSolution::homogeneous_abs(2).unwrap();
        let field = hsol.with_grid(GridSpec::unit_box(2, 128).unwrap()).unwrap();
        let r = 0.3;
        let c = m_derivative_check(&field, &[0.0; 3], r).unwrap();
        assert_relative_eq!(c.rhs, 2.0 * PI * r, max_relative = 1e-6);
        assert!(c.relative_residual() < 0.05, "{c:?}");
    }

    #[test]
    fn n_derivative_wedge_and_homabs_vanish() {
        // homogeneous profiles: ∇u·y = k u on spheres and V = 0, so both
        // sides are zero up to quadrature noise
        for sol in [
            AnalyticSolution::wedge(0.5, axis(1), 2).unwrap(),
            AnalyticSolution::homogeneous_abs(2).unwrap(),
        ] {
            let field = sol.with_grid(GridSpec::unit_box(2, 192).unwrap()).unwrap();
            let c = n_derivative_check(&field, &[0.0; 3], 0.3).unwrap();
            assert!(c.lhs.abs() < 5e-3, "{:?} lhs {}", sol.kind, c.lhs);
            assert!(c.rhs.abs() < 5e-4, "{:?} rhs {}", sol.kind, c.rhs);
            assert!(c.residual <= c.tolerance.max(5e-3), "{:?}: {c:?}", sol.kind);
        }
    }

    #[test]
    fn limit_extrapolation_wedge() {
        let q = 0.6;
        let w = AnalyticSolution::wedge(q, axis(1), 2).unwrap();
        let field = w.with_grid(GridSpec::unit_box(2, 96).unwrap()).unwrap();
        let prof = profile(&field, &[0.0; 3], 0.04, 0.4, 10).unwrap();
        let lim = limit_extrapolate(&prof);
        assert!((lim.m0 - PI).abs() < 1e-6);
        assert!((lim.n0.unwrap() - 1.0).abs() < 1e-6);
        assert!((lim.h0 - q * q * PI).abs() < 1e-6);
        assert!(lim.stable);
    }

    #[test]
    fn limit_extrapolation_interior_point_sentinel() {
        let spec = GridSpec::unit_box(2, 96).unwrap();
        let f = ScalarField::from_fn(spec, |p| p[0] + 2.0, |_| 1.0).unwrap();
        let prof = profile(&f, &[0.0; 3], 0.05, 0.3, 8).unwrap();
        let lim = limit_extrapolate(&prof);
        assert_eq!(lim.m0, f64::NEG_INFINITY);
    }

    #[test]
    fn variational_gate_discriminates() {
        let spec = GridSpec::unit_box(2, 128).unwrap();
        // wedge: variational
        let w = AnalyticSolution::wedge(0.5, axis(1), 2).unwrap();
        let wf = w.sample_on(spec.clone()).unwrap();
        let rw = variational_residual(&wf, 16, 0);
        // viscosity-but-not-variational: x_n⁺ + 0.5 x_n⁻ with χ ≡ 1 a.e.
        let vf = ScalarField::from_fn(
            spec,
            |p| {
                if p[1] > 0.0 {
                    p[1]
                } else {
                    -0.5 * p[1]
                }
            },
            |_| 1.0,
        )
        .unwrap();
        let rv = variational_residual(&vf, 16, 0);
        assert!(rw.residual < 5e-3, "wedge residual {}", rw.residual);
        assert!(
            rv.residual > 10.0 * rw.residual.max(1e-3),
            "viscosity profile residual {} vs wedge {}",
            rv.residual,
            rw.residual
        );
    }

    #[test]
    fn variational_gate_harmonic_positive() {
        let spec = GridSpec::unit_box(2, 96).unwrap();
        let f = ScalarField::from_fn(spec, |p| 2.0 + p[0] - 0.3 * p[1], |_| 1.0).unwrap();
        let r = variational_residual(&f, 16, 3);
        assert!(r.residual < 1e-3, "{}", r.residual);
    }

    #[test]
    fn csv_emission_shape() {
        let w = AnalyticSolution::wedge(0.5, axis(1), 2).unwrap();
        let field = w.with_grid(GridSpec::unit_box(2, 64).unwrap()).unwrap();
        let s = sample(&field, &[0.0; 3], 0.25).unwrap();
        let csv = samples_to_csv(&[s], 2, "cfg=deadbeef v0.1.0");
        assert!(csv.starts_with("# cfg=deadbeef"));
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(2).unwrap().split(',').count() == 10);
    }
}
