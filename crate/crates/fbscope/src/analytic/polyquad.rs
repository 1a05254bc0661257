//! Machine-exact ball and sphere integrals for polynomial integrands.
//!
//! Gauss–Legendre in the radial variable (and in the latitude cosine in
//! 3D) paired with the trapezoidal rule in the angle, which is exact for
//! trigonometric polynomials. Good for integrands of polynomial degree
//! up to ~40, far beyond the catalogue's needs.

use crate::geom::Point;
use std::f64::consts::PI;
use std::sync::OnceLock;

const GL_N: usize = 24;
const N_ANGLE: usize = 96;

/// Gauss–Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre recurrence.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-like initial guess
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // evaluate P_n and P_n'
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0f64, x);
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn gl_cached() -> &'static (Vec<f64>, Vec<f64>) {
    static GL: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    GL.get_or_init(|| gauss_legendre(GL_N))
}

/// ∫_{∂B_r(c)} f dH^{n-1}, exact for polynomial f of moderate degree.
pub fn sphere_poly<F: Fn(&Point) -> f64>(dim: usize, c: &Point, r: f64, f: &F) -> f64 {
    if dim == 2 {
        let dth = 2.0 * PI / N_ANGLE as f64;
        let mut s = 0.0;
        for j in 0..N_ANGLE {
            let th = j as f64 * dth;
            s += f(&[c[0] + r * th.cos(), c[1] + r * th.sin(), 0.0]);
        }
        s * r * dth
    } else {
        let (nodes, weights) = gl_cached();
        let dph = 2.0 * PI / N_ANGLE as f64;
        let mut s = 0.0;
        for (m, wm) in nodes.iter().zip(weights.iter()) {
            let sth = (1.0 - m * m).max(0.0).sqrt();
            let mut ring = 0.0;
            for j in 0..N_ANGLE {
                let ph = j as f64 * dph;
                ring += f(&[
                    c[0] + r * sth * ph.cos(),
                    c[1] + r * sth * ph.sin(),
                    c[2] + r * m,
                ]);
            }
            s += wm * ring;
        }
        s * r * r * dph
    }
}

/// ∫_{B_r(c)} f dx, exact for polynomial f of moderate degree.
pub fn ball_poly<F: Fn(&Point) -> f64>(dim: usize, c: &Point, r: f64, f: &F) -> f64 {
    let (nodes, weights) = gl_cached();
    let mut s = 0.0;
    // map [-1,1] -> [0,r]
    for (t, wt) in nodes.iter().zip(weights.iter()) {
        let rho = 0.5 * r * (t + 1.0);
        let shell = sphere_poly(dim, c, rho, f);
        // sphere_poly already carries the rho^{n-1} surface factor
        s += wt * shell;
    }
    s * 0.5 * r
}
