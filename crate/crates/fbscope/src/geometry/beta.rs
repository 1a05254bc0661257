//! Jones β-numbers for discrete measures.
//!
//! β²_μ(x, r) = inf_L ∫_{B_r(x)} d²(y, L)/r² dμ(y)/r^{n-1} over affine
//! hyperplanes L. The minimizing plane passes through the μ-centroid with
//! normal the bottom eigenvector of the second-moment matrix, so
//! β² = λ_min / r^{n+1}. The brute-force route below is the independent
//! oracle: sampled normals with a golden-section search on the offset.

use super::{bottom_eigenpair, DiscreteMeasure};
use crate::error::{Error, Result};
use crate::geom::{self, Point, Vector};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy)]
pub struct HyperplaneFit {
    pub centroid: Point,
    pub normal: Vector,
}

#[derive(Debug, Clone, Copy)]
pub struct BetaNumber {
    pub beta2: f64,
    pub fit: HyperplaneFit,
}

/// Eigen route: exact minimizer over hyperplanes.
pub fn beta_number(mu: &DiscreteMeasure, x: &Point, r: f64, dim: usize) -> Result<BetaNumber> {
    let idx = mu.in_ball(x, r, dim);
    if idx.is_empty() {
        return Err(Error::EmptyBall);
    }
    let mut mass = 0.0;
    let mut centroid = [0.0; 3];
    for &i in &idx {
        let w = mu.weights()[i];
        mass += w;
        for d in 0..dim {
            centroid[d] += w * mu.points()[i][d];
        }
    }
    for c in centroid.iter_mut() {
        *c /= mass;
    }
    let mut moment = [[0.0; 3]; 3];
    for &i in &idx {
        let w = mu.weights()[i];
        let dvec = geom::sub(&mu.points()[i], &centroid);
        for a in 0..dim {
            for b in 0..dim {
                moment[a][b] += w * dvec[a] * dvec[b];
            }
        }
    }
    let (lam_min, normal) = bottom_eigenpair(&moment, dim);
    let lam_max = super::top_eigenpair(&moment, dim).0.max(0.0);
    // rank detection: hyperplane-supported measures give exactly zero
    let lam = if lam_min <= 64.0 * f64::EPSILON * lam_max {
        0.0
    } else {
        lam_min.max(0.0)
    };
    Ok(BetaNumber {
        beta2: lam / r.powi(dim as i32 + 1),
        fit: HyperplaneFit {
            centroid,
            normal,
        },
    })
}

fn directions(dim: usize, n: usize, around: Option<(Vector, f64)>) -> Vec<Vector> {
    let mut out = Vec::with_capacity(n);
    match (dim, around) {
        (2, None) => {
            for j in 0..n {
                let th = PI * j as f64 / n as f64;
                out.push([th.cos(), th.sin(), 0.0]);
            }
        }
        (2, Some((center, cap))) => {
            let base = center[1].atan2(center[0]);
            for j in 0..n {
                let th = base - cap + 2.0 * cap * j as f64 / (n - 1).max(1) as f64;
                out.push([th.cos(), th.sin(), 0.0]);
            }
        }
        (3, None) => {
            // Fibonacci hemisphere
            let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
            for j in 0..n {
                let z = (j as f64 + 0.5) / n as f64; // upper hemisphere suffices
                let rho = (1.0 - z * z).max(0.0).sqrt();
                let th = 2.0 * PI * (j as f64 / golden).fract();
                out.push([rho * th.cos(), rho * th.sin(), z]);
            }
        }
        (3, Some((center, cap))) => {
            let t1 = geom::orthogonal(&center, 3);
            let t2 = geom::cross(&center, &t1);
            let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
            for j in 0..n {
                let rad = cap * ((j as f64 + 0.5) / n as f64).sqrt();
                let th = 2.0 * PI * (j as f64 / golden).fract();
                let mut v = [0.0; 3];
                for d in 0..3 {
                    v[d] = center[d] * rad.cos()
                        + (t1[d] * th.cos() + t2[d] * th.sin()) * rad.sin();
                }
                geom::normalize(&mut v, 3);
                out.push(v);
            }
        }
        _ => unreachable!(),
    }
    out
}

/// Independent oracle: minimize over sampled unit normals, golden-section
/// on the 1D offset (whose optimum is the weighted-mean projection), with
/// cap-refinement passes around the best direction.
pub fn beta_number_bruteforce(
    mu: &DiscreteMeasure,
    x: &Point,
    r: f64,
    n_dirs: usize,
    dim: usize,
) -> Result<f64> {
    let idx = mu.in_ball(x, r, dim);
    if idx.is_empty() {
        return Err(Error::EmptyBall);
    }
    let score = |nu: &Vector| -> f64 {
        // golden-section search for the offset minimizing Σ w (y·ν - c)²
        let projs: Vec<(f64, f64)> = idx
            .iter()
            .map(|&i| (geom::dot(&mu.points()[i], nu, dim), mu.weights()[i]))
            .collect();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &(p, _) in &projs {
            lo = lo.min(p);
            hi = hi.max(p);
        }
        if hi - lo < 1e-300 {
            return 0.0;
        }
        let obj = |c: f64| -> f64 {
            projs
                .iter()
                .map(|&(p, w)| w * (p - c) * (p - c))
                .sum::<f64>()
        };
        let phi = (5.0f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (lo, hi);
        let mut c1 = b - phi * (b - a);
        let mut c2 = a + phi * (b - a);
        let (mut f1, mut f2) = (obj(c1), obj(c2));
        for _ in 0..90 {
            if f1 <= f2 {
                b = c2;
                c2 = c1;
                f2 = f1;
                c1 = b - phi * (b - a);
                f1 = obj(c1);
            } else {
                a = c1;
                c1 = c2;
                f1 = f2;
                c2 = a + phi * (b - a);
                f2 = obj(c2);
            }
        }
        f1.min(f2)
    };
    let mut best = f64::INFINITY;
    let mut best_dir = [0.0; 3];
    for nu in directions(dim, n_dirs, None) {
        let s = score(&nu);
        if s < best {
            best = s;
            best_dir = nu;
        }
    }
    // refinement passes shrink the angular cap around the best direction
    let mut cap = if dim == 2 {
        PI / n_dirs as f64
    } else {
        (4.0 * PI / n_dirs as f64).sqrt()
    };
    for _ in 0..4 {
        let n_ref = n_dirs.min(512).max(64);
        for nu in directions(dim, n_ref, Some((best_dir, cap))) {
            let s = score(&nu);
            if s < best {
                best = s;
                best_dir = nu;
            }
        }
        cap *= 0.1;
    }
    Ok(best / r.powi(dim as i32 + 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hyperplane_supported_exactly_zero() {
        // collinear in 2D
        let pts: Vec<Point> = (0..7).map(|i| [i as f64 * 0.1, 0.3, 0.0]).collect();
        let mu = DiscreteMeasure::uniform(pts).unwrap();
        let b = beta_number(&mu, &[0.3, 0.3, 0.0], 1.0, 2).unwrap();
        assert_eq!(b.beta2, 0.0);
        // coplanar in 3D
        let pts3: Vec<Point> = (0..9)
            .map(|i| [(i % 3) as f64 * 0.1, (i / 3) as f64 * 0.1, 0.2])
            .collect();
        let mu3 = DiscreteMeasure::uniform(pts3).unwrap();
        let b3 = beta_number(&mu3, &[0.1, 0.1, 0.2], 1.0, 3).unwrap();
        assert_eq!(b3.beta2, 0.0);
    }

    #[test]
    fn single_point_and_pair_zero() {
        let mu = DiscreteMeasure::uniform(vec![[0.1, 0.2, 0.0]]).unwrap();
        assert_eq!(beta_number(&mu, &[0.0; 3], 1.0, 2).unwrap().beta2, 0.0);
        let mu2 =
            DiscreteMeasure::uniform(vec![[0.1, 0.2, 0.0], [-0.3, 0.4, 0.0]]).unwrap();
        assert_eq!(beta_number(&mu2, &[0.0; 3], 1.0, 2).unwrap().beta2, 0.0);
    }

    #[test]
    fn empty_ball_errors() {
        let mu = DiscreteMeasure::uniform(vec![[5.0, 5.0, 0.0]]).unwrap();
        assert!(matches!(
            beta_number(&mu, &[0.0; 3], 1.0, 2),
            Err(Error::EmptyBall)
        ));
    }

    #[test]
    fn square_corners_frozen_value() {
        // four unit masses at the corners of a side-s square centered at x:
        // the moment matrix is s²·I, so β² = s²/r^{n+1}
        let s = 0.4;
        let pts = vec![
            [s / 2.0, s / 2.0, 0.0],
            [-s / 2.0, s / 2.0, 0.0],
            [-s / 2.0, -s / 2.0, 0.0],
            [s / 2.0, -s / 2.0, 0.0],
        ];
        let mu = DiscreteMeasure::uniform(pts).unwrap();
        let r = 1.0;
        let b = beta_number(&mu, &[0.0; 3], r, 2).unwrap();
        assert_relative_eq!(b.beta2, s * s / r.powi(3), max_relative = 1e-12);
        let bf = beta_number_bruteforce(&mu, &[0.0; 3], r, 256, 2).unwrap();
        assert!((b.beta2 - bf).abs() <= 1e-6 * b.beta2.max(1e-12), "{} vs {bf}", b.beta2);
    }

    #[test]
    fn bruteforce_matches_eigen_on_random_clouds() {
        for dim in [2usize, 3] {
            let mut rng = ChaCha8Rng::seed_from_u64(7 + dim as u64);
            for _case in 0..20 {
                let n = 10;
                let pts: Vec<Point> = (0..n)
                    .map(|_| {
                        let mut p = [0.0; 3];
                        for d in p.iter_mut().take(dim) {
                            *d = rng.gen::<f64>() * 1.4 - 0.7;
                        }
                        p
                    })
                    .collect();
                let ws: Vec<f64> = (0..n).map(|_| 0.2 + rng.gen::<f64>()).collect();
                let mu = DiscreteMeasure::new(pts, ws).unwrap();
                let e = beta_number(&mu, &[0.0; 3], 1.0, dim).unwrap().beta2;
                let b = beta_number_bruteforce(&mu, &[0.0; 3], 1.0, 2000, dim).unwrap();
                let rel = (e - b).abs() / e.abs().max(1e-12);
                assert!(rel < 1e-4, "dim {dim}: eigen {e} vs brute {b} (rel {rel})");
            }
        }
    }

    #[test]
    fn beta_linear_in_mass_and_rescale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<Point> = (0..8)
            .map(|_| [rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5, 0.0])
            .collect();
        let ws: Vec<f64> = (0..8).map(|_| 0.5 + rng.gen::<f64>()).collect();
        let mu = DiscreteMeasure::new(pts.clone(), ws.clone()).unwrap();
        let b = beta_number(&mu, &[0.0; 3], 1.0, 2).unwrap().beta2;
        // β²_{cμ} = c β²_μ
        let c = 3.7;
        let mu_c = DiscreteMeasure::new(pts.clone(), ws.iter().map(|w| c * w).collect()).unwrap();
        let bc = beta_number(&mu_c, &[0.0; 3], 1.0, 2).unwrap().beta2;
        assert_relative_eq!(bc, c * b, max_relative = 1e-12);
        // unit check: points and r scaled by s, weights by s^{n-1}
        let s = 2.5;
        let pts_s: Vec<Point> = pts.iter().map(|p| [s * p[0], s * p[1], 0.0]).collect();
        let ws_s: Vec<f64> = ws.iter().map(|w| w * s.powi(1)).collect();
        let mu_s = DiscreteMeasure::new(pts_s, ws_s).unwrap();
        let bs = beta_number(&mu_s, &[0.0; 3], s, 2).unwrap().beta2;
        assert_relative_eq!(bs, b, max_relative = 1e-12);
    }
}
