//! Discrete measures, Jones β-numbers, frequency-drop probes and the
//! terminal-ball covering machinery.

mod beta;
mod covering;

pub use beta::{beta_number, beta_number_bruteforce, BetaNumber, HyperplaneFit};
pub use covering::{
    covering_tree, dichotomy_probe, subspace_inequality_probe, AnalyticOracle, CoveringNode,
    CoveringParams, CoveringReport, DichotomyProbe, DropLabel, FrequencyOracle, GridOracle,
    NodeStatus, Provenance, SubspaceProbe, SyntheticOracle,
};

use crate::error::{Error, Result};
use crate::geom::{self, Point, Vector};

/// Weighted point cloud with positive weights.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    points: Vec<Point>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::Parameter(
                "points and weights must have equal length".into(),
            ));
        }
        let mass: f64 = weights.iter().sum();
        if !mass.is_finite() {
            return Err(Error::Parameter("total mass must be finite".into()));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Parameter("all weights must be positive".into()));
        }
        Ok(DiscreteMeasure { points, weights })
    }

    pub fn uniform(points: Vec<Point>) -> Result<Self> {
        let w = vec![1.0; points.len()];
        DiscreteMeasure::new(points, w)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn len(&self) -> usize {
        self.points.len()
    }
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Indices of the support inside the closed ball.
    pub fn in_ball(&self, x: &Point, r: f64, dim: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| geom::dist(&self.points[i], x, dim) <= r)
            .collect()
    }
}

/// Cyclic Jacobi for small symmetric matrices; returns eigenvalues in
/// ascending order with matching orthonormal eigenvectors.
pub fn eig_sym(m: &[[f64; 3]; 3], dim: usize) -> ([f64; 3], [[f64; 3]; 3]) {
    let mut a = *m;
    // embed 2x2 into the top-left block
    if dim == 2 {
        a[2] = [0.0, 0.0, 1.0];
        a[0][2] = 0.0;
        a[1][2] = 0.0;
        a[2][0] = 0.0;
        a[2][1] = 0.0;
    }
    let mut v = [[0.0; 3]; 3];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..64 {
        let mut off = 0.0;
        for p in 0..3 {
            for q in (p + 1)..3 {
                off += a[p][q] * a[p][q];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..3 {
            for q in (p + 1)..3 {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..3 {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..3 {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut pairs: Vec<(f64, [f64; 3])> = (0..3)
        .map(|i| (a[i][i], [v[0][i], v[1][i], v[2][i]]))
        .collect();
    if dim == 2 {
        // drop the artificial third axis
        pairs.retain(|(_, vec)| vec[2].abs() < 0.5);
        pairs.push((f64::INFINITY, [0.0, 0.0, 1.0]));
    }
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let mut vals = [0.0; 3];
    let mut vecs = [[0.0; 3]; 3];
    for (i, (lam, vec)) in pairs.into_iter().enumerate() {
        vals[i] = lam;
        vecs[i] = vec;
    }
    (vals, vecs)
}

/// Largest eigenvalue and its eigenvector.
pub fn top_eigenpair(m: &[[f64; 3]; 3], dim: usize) -> (f64, Vector) {
    let (vals, vecs) = eig_sym(m, dim);
    (vals[dim - 1], vecs[dim - 1])
}

/// Smallest eigenvalue and its eigenvector.
pub fn bottom_eigenpair(m: &[[f64; 3]; 3], dim: usize) -> (f64, Vector) {
    let (vals, vecs) = eig_sym(m, dim);
    (vals[0], vecs[0])
}

/// Minkowski volume estimate: counts pitch-cells within distance `s` of
/// the point set, restricted to the window ball, times cell volume.
pub fn minkowski_estimate(
    points: &[Point],
    s: f64,
    window_center: &Point,
    window_radius: f64,
    dim: usize,
) -> f64 {
    if points.is_empty() || !(s > 0.0) {
        return 0.0;
    }
    let pitch = s / 16.0;
    let reach = window_radius + s;
    let n = (2.0 * reach / pitch).ceil() as i64;
    let lo = [
        window_center[0] - reach,
        window_center[1] - reach,
        window_center[2] - reach,
    ];
    let mut count = 0u64;
    let kz = if dim == 3 { n } else { 1 };
    for i in 0..n {
        let x = lo[0] + (i as f64 + 0.5) * pitch;
        for j in 0..n {
            let y = lo[1] + (j as f64 + 0.5) * pitch;
            for k in 0..kz {
                let z = if dim == 3 {
                    lo[2] + (k as f64 + 0.5) * pitch
                } else {
                    0.0
                };
                let p = [x, y, z];
                if geom::dist(&p, window_center, dim) > window_radius {
                    continue;
                }
                let near = points
                    .iter()
                    .any(|q| geom::dist(&p, q, dim) <= s);
                if near {
                    count += 1;
                }
            }
        }
    }
    count as f64 * pitch.powi(dim as i32)
}

/// Greedy count of disjoint s-balls centered at set points inside the
/// window (centers pairwise at least 2s apart), deterministic in index
/// order.
pub fn disjoint_packing_count(
    points: &[Point],
    s: f64,
    window_center: &Point,
    window_radius: f64,
    dim: usize,
) -> usize {
    let mut chosen: Vec<&Point> = Vec::new();
    for p in points {
        if geom::dist(p, window_center, dim) > window_radius {
            continue;
        }
        if chosen.iter().all(|q| geom::dist(p, q, dim) >= 2.0 * s) {
            chosen.push(p);
        }
    }
    chosen.len()
}
