//! One-dimensional shooting oracle for u'' = β_ε(u).
//!
//! Classic RK4 with step ε/64 on the first-order system, cubic Hermite
//! dense output, and the conserved first integral (u')²/2 - B_ε(u) as the
//! built-in accuracy check.

use super::BetaSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Profile1d {
    pub xs: Vec<f64>,
    pub us: Vec<f64>,
    pub dus: Vec<f64>,
    /// max drift of (u')²/2 - B_ε(u) along the trajectory
    pub first_integral_drift: f64,
}

impl Profile1d {
    /// Cubic Hermite interpolation between RK nodes.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.us[0];
        }
        if x >= self.xs[n - 1] {
            return self.us[n - 1];
        }
        let mut lo = 0;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.xs[mid] <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let hstep = self.xs[hi] - self.xs[lo];
        let t = (x - self.xs[lo]) / hstep;
        let (u0, u1) = (self.us[lo], self.us[hi]);
        let (m0, m1) = (self.dus[lo] * hstep, self.dus[hi] * hstep);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * u0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * u1
            + (t3 - t2) * m1
    }

    pub fn endpoint(&self) -> (f64, f64) {
        let n = self.xs.len() - 1;
        (self.us[n], self.dus[n])
    }
}

/// Integrate the IVP u(x0) = u0, u'(x0) = du0 forward to x1.
pub fn shoot_ivp(beta: &BetaSpec, x0: f64, u0: f64, du0: f64, x1: f64) -> Result<Profile1d> {
    if !(x1 > x0) {
        return Err(Error::Parameter("shooting needs x1 > x0".into()));
    }
    let eps = beta.epsilon();
    let step = eps / 64.0;
    let n_steps = ((x1 - x0) / step).ceil() as usize;
    let step = (x1 - x0) / n_steps as f64;
    let f = |u: f64| beta.beta_eps(u);
    let mut xs = Vec::with_capacity(n_steps + 1);
    let mut us = Vec::with_capacity(n_steps + 1);
    let mut dus = Vec::with_capacity(n_steps + 1);
    let (mut u, mut du) = (u0, du0);
    let e0 = 0.5 * du * du - beta.b_eps(u);
    let mut drift: f64 = 0.0;
    xs.push(x0);
    us.push(u);
    dus.push(du);
    for i in 0..n_steps {
        // RK4 on (u, u')' = (u', β_ε(u))
        let (k1u, k1v) = (du, f(u));
        let (k2u, k2v) = (du + 0.5 * step * k1v, f(u + 0.5 * step * k1u));
        let (k3u, k3v) = (du + 0.5 * step * k2v, f(u + 0.5 * step * k2u));
        let (k4u, k4v) = (du + step * k3v, f(u + step * k3u));
        u += step / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        du += step / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        if !u.is_finite() || u.abs() > 1e6 {
            return Err(Error::Parameter(format!(
                "trajectory blow-up at x = {}",
                x0 + (i + 1) as f64 * step
            )));
        }
        xs.push(x0 + (i + 1) as f64 * step);
        us.push(u);
        dus.push(du);
        drift = drift.max((0.5 * du * du - beta.b_eps(u) - e0).abs());
    }
    Ok(Profile1d {
        xs,
        us,
        dus,
        first_integral_drift: drift,
    })
}

/// Two-point boundary value problem u(a) = ua, u(b) = ub by bisection on
/// the initial slope (the shooting map is monotone in the slope).
pub fn solve_bvp(beta: &BetaSpec, a: f64, ua: f64, b: f64, ub: f64) -> Result<Profile1d> {
    if !(ua >= 0.0 && ub >= 0.0) {
        return Err(Error::Parameter("boundary values must be nonnegative".into()));
    }
    let slope0 = (ub - ua) / (b - a);
    let spread = 2.0 + slope0.abs();
    let mut lo = slope0 - spread;
    let mut hi = slope0 + spread;
    let end_val = |s: f64| -> Result<f64> {
        Ok(shoot_ivp(beta, a, ua, s, b)?.endpoint().0)
    };
    let mut flo = end_val(lo)? - ub;
    let mut fhi = end_val(hi)? - ub;
    let mut guard = 0;
    while flo > 0.0 && guard < 8 {
        lo -= spread;
        flo = end_val(lo)? - ub;
        guard += 1;
    }
    guard = 0;
    while fhi < 0.0 && guard < 8 {
        hi += spread;
        fhi = end_val(hi)? - ub;
        guard += 1;
    }
    if flo > 0.0 || fhi < 0.0 {
        return Err(Error::Parameter(
            "could not bracket the shooting slope".into(),
        ));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let fm = end_val(mid)? - ub;
        if fm.abs() < 1e-14 {
            lo = mid;
            hi = mid;
            break;
        }
        if fm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    shoot_ivp(beta, a, ua, 0.5 * (lo + hi), b)
}
