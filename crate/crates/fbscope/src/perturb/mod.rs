//! Singular perturbation solver: Δu_ε = β_ε(u_ε) with Dirichlet data.
//!
//! β is a Lipschitz bump supported on (0, 1) normalized to ∫β = 1/2, and
//! β_ε(s) = β(s/ε)/ε. The solver runs damped Newton on the 5-point
//! (7-point in 3D) discretization with a clipped Jacobian so the inner
//! systems stay symmetric positive definite; the inner solves are
//! preconditioned conjugate gradients (SSOR) at relative tolerance 1e-10,
//! with a Picard line-search fallback whenever a Newton step fails to
//! reduce the residual. The companion indicator is χ_ε = 2B_ε(u_ε).

pub mod shoot;

pub use shoot::{shoot_ivp, solve_bvp, Profile1d};

use crate::error::{Error, Result};
use crate::field::{GridSpec, ScalarField};
use crate::geom::Point;
use serde::Serialize;

/// β profile shapes on [0, 1]; the constant c enforces ∫₀¹ β = 1/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BetaProfile {
    /// c · s(1-s) with c = 3
    Parabolic,
    /// c · s²(1-s)² with c = 15
    Quartic,
}

impl BetaProfile {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "parabolic" => Ok(BetaProfile::Parabolic),
            "quartic" => Ok(BetaProfile::Quartic),
            _ => Err(Error::Parameter(format!("unknown beta profile '{s}'"))),
        }
    }
}

/// A normalized β together with its scale ε.
#[derive(Debug, Clone, Copy)]
pub struct BetaSpec {
    profile: BetaProfile,
    c: f64,
    epsilon: f64,
}

impl BetaSpec {
    pub fn new(profile: BetaProfile, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::Parameter("epsilon must be positive".into()));
        }
        let c = match profile {
            BetaProfile::Parabolic => 3.0,
            BetaProfile::Quartic => 15.0,
        };
        let spec = BetaSpec {
            profile,
            c,
            epsilon,
        };
        // the normalization is closed-form; verify it numerically anyway
        let n = 4096;
        let mut simpson = 0.0;
        for i in 0..=n {
            let s = i as f64 / n as f64;
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            simpson += w * spec.beta_raw(s);
        }
        simpson /= 3.0 * n as f64;
        if (simpson - 0.5).abs() > 1e-10 {
            return Err(Error::Parameter(format!(
                "beta normalization failed: ∫β = {simpson}"
            )));
        }
        Ok(spec)
    }

    /// The default profile β(s) = 3s(1-s).
    pub fn default_beta(epsilon: f64) -> Result<Self> {
        BetaSpec::new(BetaProfile::Parabolic, epsilon)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn profile(&self) -> BetaProfile {
        self.profile
    }

    /// β on [0, 1] (zero outside).
    pub fn beta_raw(&self, s: f64) -> f64 {
        if !(0.0..=1.0).contains(&s) {
            return 0.0;
        }
        match self.profile {
            BetaProfile::Parabolic => self.c * s * (1.0 - s),
            BetaProfile::Quartic => self.c * s * s * (1.0 - s) * (1.0 - s),
        }
    }

    fn beta_raw_prime(&self, s: f64) -> f64 {
        if !(0.0..=1.0).contains(&s) {
            return 0.0;
        }
        match self.profile {
            BetaProfile::Parabolic => self.c * (1.0 - 2.0 * s),
            BetaProfile::Quartic => self.c * 2.0 * s * (1.0 - s) * (1.0 - 2.0 * s),
        }
    }

    /// B(s) = ∫₀ˢ β, closed form, clamped to 1/2 for s >= 1.
    pub fn b_raw(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        if s >= 1.0 {
            return 0.5;
        }
        match self.profile {
            BetaProfile::Parabolic => s * s * (3.0 - 2.0 * s) / 2.0,
            BetaProfile::Quartic => 5.0 * s * s * s - 7.5 * s.powi(4) + 3.0 * s.powi(5),
        }
    }

    pub fn beta_eps(&self, z: f64) -> f64 {
        self.beta_raw(z / self.epsilon) / self.epsilon
    }

    pub fn beta_eps_prime(&self, z: f64) -> f64 {
        self.beta_raw_prime(z / self.epsilon) / (self.epsilon * self.epsilon)
    }

    /// B_ε(z) = ∫₀ᶻ β_ε = B(z/ε).
    pub fn b_eps(&self, z: f64) -> f64 {
        self.b_raw(z / self.epsilon)
    }

    /// χ_ε = 2 B_ε(u); always in [0, 1].
    pub fn chi_eps(&self, z: f64) -> f64 {
        2.0 * self.b_eps(z)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    /// sup-norm residual target for the nonlinear iteration
    pub tol: f64,
    pub max_iter: usize,
    /// Newton damping floor 2^-10
    pub damping_floor: f64,
    pub cg_rel_tol: f64,
    pub cg_max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-10,
            max_iter: 200,
            damping_floor: 2f64.powi(-10),
            cg_rel_tol: 1e-10,
            cg_max_iter: 20000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveStats {
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub under_resolved: bool,
    pub picard_fallbacks: usize,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub field: ScalarField,
    pub stats: SolveStats,
}

struct Stencil<'a> {
    spec: &'a GridSpec,
    inv_h2: f64,
}

impl<'a> Stencil<'a> {
    fn new(spec: &'a GridSpec) -> Self {
        Stencil {
            spec,
            inv_h2: 1.0 / (spec.h() * spec.h()),
        }
    }

    fn is_boundary(&self, idx: [usize; 3]) -> bool {
        (0..self.spec.dim()).any(|d| idx[d] == 0 || idx[d] == self.spec.nodes(d) - 1)
    }

    /// -Δ_h u at an interior node, reading the full vector.
    fn neg_lap(&self, u: &[f64], idx: [usize; 3]) -> f64 {
        let s = self.spec;
        let mut acc = 2.0 * s.dim() as f64 * u[s.node_index(idx)];
        for d in 0..s.dim() {
            let mut lo = idx;
            lo[d] -= 1;
            let mut hi = idx;
            hi[d] += 1;
            acc -= u[s.node_index(lo)] + u[s.node_index(hi)];
        }
        acc * self.inv_h2
    }

    fn interior_iter(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        let s = self.spec;
        s.node_iter().filter(move |&idx| !self.is_boundary(idx))
    }
}

/// PCG with an SSOR preconditioner for (-Δ_h + diag(c)) x = b with
/// homogeneous Dirichlet conditions; x, b, c live on the full grid but
/// only interior entries participate.
fn pcg_solve(
    spec: &GridSpec,
    c: &[f64],
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> usize {
    let st = Stencil::new(spec);
    let omega = 1.5;
    let n = spec.node_count();
    let diag: Vec<f64> = (0..n)
        .map(|k| 2.0 * spec.dim() as f64 * st.inv_h2 + c[k])
        .collect();
    let apply = |v: &[f64], out: &mut [f64]| {
        out.iter_mut().for_each(|o| *o = 0.0);
        for idx in st.interior_iter() {
            let k = spec.node_index(idx);
            out[k] = st.neg_lap(v, idx) + c[k] * v[k];
        }
    };
    // SSOR: forward solve, diagonal scale, backward solve
    let precond = |r: &[f64], z: &mut [f64], tmp: &mut [f64]| {
        let scale = (2.0 - omega) / omega;
        tmp.iter_mut().for_each(|t| *t = 0.0);
        let fwd_nodes: Vec<[usize; 3]> = st.interior_iter().collect();
        for &idx in &fwd_nodes {
            let k = spec.node_index(idx);
            let mut acc = scale * r[k];
            for d in 0..spec.dim() {
                let mut lo = idx;
                lo[d] -= 1;
                if !st.is_boundary(lo) {
                    acc += st.inv_h2 * tmp[spec.node_index(lo)];
                }
            }
            tmp[k] = acc * omega / diag[k];
        }
        z.iter_mut().for_each(|t| *t = 0.0);
        for &idx in fwd_nodes.iter().rev() {
            let k = spec.node_index(idx);
            let mut acc = diag[k] * tmp[k];
            for d in 0..spec.dim() {
                let mut hi = idx;
                hi[d] += 1;
                if !st.is_boundary(hi) {
                    acc += st.inv_h2 * z[spec.node_index(hi)];
                }
            }
            z[k] = acc * omega / diag[k];
        }
    };
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut ap = vec![0.0; n];
    apply(x, &mut r);
    for k in 0..n {
        r[k] = b[k] - r[k];
    }
    precond(&r, &mut z, &mut tmp);
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(z.iter()).map(|(a, b)| a * b).sum();
    let b_norm: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    for it in 0..max_iter {
        let r_norm: f64 = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r_norm <= rel_tol * b_norm {
            return it;
        }
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(ap.iter()).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return it;
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        precond(&r, &mut z, &mut tmp);
        let rz_new: f64 = r.iter().zip(z.iter()).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    max_iter
}

fn residual(st: &Stencil, beta: &BetaSpec, u: &[f64], out: &mut [f64]) -> f64 {
    out.iter_mut().for_each(|o| *o = 0.0);
    let mut norm: f64 = 0.0;
    for idx in st.interior_iter() {
        let k = st.spec.node_index(idx);
        let f = st.neg_lap(u, idx) + beta.beta_eps(u[k]);
        out[k] = f;
        norm = norm.max(f.abs());
    }
    norm
}

/// Solve Δu = β_ε(u) on the grid with Dirichlet data `g` (must be >= 0 on
/// the boundary). Non-convergence is reported in the stats, not as an Err.
pub fn solve(
    spec: &GridSpec,
    beta: &BetaSpec,
    g: &dyn Fn(&Point) -> f64,
    config: &SolverConfig,
) -> Result<SolveResult> {
    solve_from(spec, beta, g, config, None)
}

/// Same as `solve`, optionally warm-started from a previous nodal vector.
pub fn solve_from(
    spec: &GridSpec,
    beta: &BetaSpec,
    g: &dyn Fn(&Point) -> f64,
    config: &SolverConfig,
    warm: Option<&[f64]>,
) -> Result<SolveResult> {
    let st = Stencil::new(spec);
    let n = spec.node_count();
    let mut u = vec![0.0; n];
    // boundary data
    for idx in spec.node_iter() {
        if st.is_boundary(idx) {
            let p = spec.node_pos(idx);
            let val = g(&p);
            if val < -1e-12 {
                return Err(Error::Parameter(format!(
                    "dirichlet data must be nonnegative, got {val} at ({}, {}, {})",
                    p[0], p[1], p[2]
                )));
            }
            u[spec.node_index(idx)] = val.max(0.0);
        }
    }
    match warm {
        Some(w) if w.len() == n => {
            for idx in st.interior_iter() {
                let k = spec.node_index(idx);
                u[k] = w[k];
            }
        }
        _ => {
            // harmonic extension of the boundary data as initial guess
            let zeros = vec![0.0; n];
            let mut rhs = vec![0.0; n];
            for idx in st.interior_iter() {
                let k = spec.node_index(idx);
                rhs[k] = -st.neg_lap(&u, idx);
            }
            let mut w0 = vec![0.0; n];
            pcg_solve(spec, &zeros, &rhs, &mut w0, config.cg_rel_tol, config.cg_max_iter);
            for idx in st.interior_iter() {
                let k = spec.node_index(idx);
                u[k] += w0[k];
            }
        }
    }

    let mut f = vec![0.0; n];
    let mut fnorm = residual(&st, beta, &u, &mut f);
    let mut iterations = 0;
    let mut picard_fallbacks = 0;
    let mut converged = fnorm <= config.tol;
    while !converged && iterations < config.max_iter {
        iterations += 1;
        // clipped Jacobian keeps the inner system SPD
        let c: Vec<f64> = u.iter().map(|&v| beta.beta_eps_prime(v).max(0.0)).collect();
        let mut rhs = vec![0.0; n];
        for idx in st.interior_iter() {
            let k = spec.node_index(idx);
            rhs[k] = -f[k];
        }
        let mut delta = vec![0.0; n];
        pcg_solve(spec, &c, &rhs, &mut delta, config.cg_rel_tol, config.cg_max_iter);
        // damped line search
        let mut alpha = 1.0;
        let mut accepted = false;
        let mut trial = vec![0.0; n];
        while alpha >= config.damping_floor {
            for k in 0..n {
                trial[k] = u[k] + alpha * delta[k];
            }
            let tnorm = residual(&st, beta, &trial, &mut f);
            if tnorm < (1.0 - 1e-4 * alpha) * fnorm {
                u.copy_from_slice(&trial);
                fnorm = tnorm;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            // Picard fallback: solve -Δ_h w = -β_ε(u) with the boundary data
            picard_fallbacks += 1;
            let zeros = vec![0.0; n];
            let mut w = u.clone();
            let mut rhs = vec![0.0; n];
            for idx in st.interior_iter() {
                let k = spec.node_index(idx);
                // full residual of the linear problem at w = u
                rhs[k] = -(st.neg_lap(&u, idx) + beta.beta_eps(u[k]));
            }
            let mut corr = vec![0.0; n];
            pcg_solve(spec, &zeros, &rhs, &mut corr, config.cg_rel_tol, config.cg_max_iter);
            for k in 0..n {
                w[k] += corr[k];
            }
            let mut best_norm = fnorm;
            let mut best_alpha = 0.0;
            let mut a = 1.0;
            while a >= config.damping_floor {
                for k in 0..n {
                    trial[k] = u[k] + a * (w[k] - u[k]);
                }
                let tnorm = residual(&st, beta, &trial, &mut f);
                if tnorm < best_norm {
                    best_norm = tnorm;
                    best_alpha = a;
                    break;
                }
                a *= 0.5;
            }
            if best_alpha > 0.0 {
                for k in 0..n {
                    u[k] += best_alpha * (w[k] - u[k]);
                }
                fnorm = residual(&st, beta, &u, &mut f);
            } else {
                break; // no progress available
            }
        }
        converged = fnorm <= config.tol;
    }
    // recompute the residual into f for the final report
    fnorm = residual(&st, beta, &u, &mut f);
    converged = fnorm <= config.tol;

    let under_resolved = beta.epsilon() < 2.0 * spec.h();
    for v in u.iter_mut() {
        *v = v.max(0.0);
    }
    let chi: Vec<f64> = u.iter().map(|&v| beta.chi_eps(v)).collect();
    let mut field = ScalarField::new(spec.clone(), u, chi, f64::INFINITY)?;
    let lip = field.measured_lipschitz();
    field = ScalarField::new(spec.clone(), field.u().to_vec(), field.chi_values().to_vec(), lip)?;
    Ok(SolveResult {
        field,
        stats: SolveStats {
            residual_norm: fnorm,
            iterations,
            converged,
            under_resolved,
            picard_fallbacks,
        },
    })
}

/// One rung of an ε-continuation ladder.
#[derive(Debug, Clone)]
pub struct LadderRung {
    pub epsilon: f64,
    pub result: SolveResult,
    /// sup |u_k - u_{k-1}| against the previous rung
    pub sup_diff: Option<f64>,
    /// L¹ distance of the χ_ε companions
    pub chi_l1_diff: Option<f64>,
}

/// Warm-started solves along a decreasing ε ladder.
pub fn continuation(
    spec: &GridSpec,
    profile: BetaProfile,
    g: &dyn Fn(&Point) -> f64,
    eps_ladder: &[f64],
    config: &SolverConfig,
) -> Result<Vec<LadderRung>> {
    if eps_ladder.is_empty() {
        return Err(Error::Parameter("empty epsilon ladder".into()));
    }
    if eps_ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Parameter("epsilon ladder must decrease".into()));
    }
    let cell = spec.h().powi(spec.dim() as i32);
    let mut rungs: Vec<LadderRung> = Vec::with_capacity(eps_ladder.len());
    let mut prev: Option<Vec<f64>> = None;
    for &eps in eps_ladder {
        let beta = BetaSpec::new(profile, eps)?;
        let res = solve_from(spec, &beta, g, config, prev.as_deref())?;
        let (sup_diff, chi_l1_diff) = match rungs.last() {
            Some(last) => {
                let pu = last.result.field.u();
                let pc = last.result.field.chi_values();
                let cu = res.field.u();
                let cc = res.field.chi_values();
                let sup = pu
                    .iter()
                    .zip(cu.iter())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                let l1: f64 = pc
                    .iter()
                    .zip(cc.iter())
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>()
                    * cell;
                (Some(sup), Some(l1))
            }
            None => (None, None),
        };
        prev = Some(res.field.u().to_vec());
        rungs.push(LadderRung {
            epsilon: eps,
            result: res,
            sup_diff,
            chi_l1_diff,
        });
    }
    Ok(rungs)
}
