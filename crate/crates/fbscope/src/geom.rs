//! Small fixed-dimension vector helpers and unit-ball constants.
//!
//! Points live in `[f64; 3]`; in two dimensions the third component is
//! zero and ignored. Every routine takes the active dimension explicitly.

use std::f64::consts::PI;

pub type Point = [f64; 3];
pub type Vector = [f64; 3];

pub const ZERO: Point = [0.0, 0.0, 0.0];

#[inline]
pub fn dot(a: &Vector, b: &Vector, dim: usize) -> f64 {
    let mut s = 0.0;
    for d in 0..dim {
        s += a[d] * b[d];
    }
    s
}

#[inline]
pub fn norm(a: &Vector, dim: usize) -> f64 {
    dot(a, a, dim).sqrt()
}

#[inline]
pub fn sub(a: &Point, b: &Point) -> Vector {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: &Point, b: &Vector) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: &Vector, c: f64) -> Vector {
    [a[0] * c, a[1] * c, a[2] * c]
}

#[inline]
pub fn dist(a: &Point, b: &Point, dim: usize) -> f64 {
    let d = sub(a, b);
    norm(&d, dim)
}

/// Normalize in place; returns the original norm. Zero vectors are left alone.
pub fn normalize(a: &mut Vector, dim: usize) -> f64 {
    let n = norm(a, dim);
    if n > 0.0 {
        for d in 0..dim {
            a[d] /= n;
        }
    }
    n
}

/// Volume of the unit ball, |B_1|, in dimension 2 or 3.
#[inline]
pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// Surface measure of the unit sphere, |∂B_1| = n·|B_1|.
#[inline]
pub fn unit_sphere_area(dim: usize) -> f64 {
    dim as f64 * unit_ball_volume(dim)
}

/// Second moment of the unit sphere in one coordinate, ∫_{∂B_1} x_n² dH^{n-1}.
///
/// Evaluated from the one-dimensional reductions (∫ sin²θ dθ over the circle,
/// 2π ∫ m² dm over latitudes); the divergence theorem makes this equal |B_1|.
#[inline]
pub fn sphere_coordinate_moment(dim: usize) -> f64 {
    match dim {
        2 => PI,
        3 => 2.0 * PI * (2.0 / 3.0),
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// Volume of the unit ball one dimension down, ω_{n-1} (length 2 in 2D, area π in 3D).
#[inline]
pub fn unit_ball_volume_lower(dim: usize) -> f64 {
    match dim {
        2 => 2.0,
        3 => PI,
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// The canonical axis unit vector e_k (0-indexed).
#[inline]
pub fn axis(k: usize) -> Vector {
    let mut v = [0.0; 3];
    v[k] = 1.0;
    v
}

/// Any unit vector orthogonal to `v` (dim 2 or 3).
pub fn orthogonal(v: &Vector, dim: usize) -> Vector {
    if dim == 2 {
        [-v[1], v[0], 0.0]
    } else {
        // cross with the least-aligned axis
        let k = if v[0].abs() <= v[1].abs() && v[0].abs() <= v[2].abs() {
            0
        } else if v[1].abs() <= v[2].abs() {
            1
        } else {
            2
        };
        let e = axis(k);
        let mut w = cross(v, &e);
        normalize(&mut w, 3);
        w
    }
}

#[inline]
pub fn cross(a: &Vector, b: &Vector) -> Vector {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}
