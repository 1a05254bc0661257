//! Closed-form variational solutions used as exact oracles.
//!
//! The catalogue: the zero solution, half-plane slopes a(x·ν)⁺, wedges
//! q|x·ν|, absolute values of sign-changing harmonic polynomials, the
//! homogeneous profiles |Re z^k| in the plane, and the two-pole cusp
//! example. Wedges and |harmonic| profiles carry χ ≡ 1 (their zero sets
//! are Lebesgue-null); half-planes carry χ = χ_{u>0}.

mod exact;
mod polyquad;

pub use exact::ExactSample;

use crate::error::{Error, Result};
use crate::field::{FieldView, GridSpec, ScalarField};
use crate::geom::{self, Point, Vector};

/// The sign-changing harmonic polynomials the catalogue knows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HarmonicPoly {
    /// x² - y²  (= Re z² in the plane; harmonic in 3D as well)
    SaddleXY,
    /// xy
    ProductXY,
    /// x³ - 3xy²  (= Re z³)
    ReZ3,
}

impl HarmonicPoly {
    pub fn eval(&self, p: &Point) -> f64 {
        match self {
            HarmonicPoly::SaddleXY => p[0] * p[0] - p[1] * p[1],
            HarmonicPoly::ProductXY => p[0] * p[1],
            HarmonicPoly::ReZ3 => p[0] * p[0] * p[0] - 3.0 * p[0] * p[1] * p[1],
        }
    }

    pub fn grad(&self, p: &Point) -> Vector {
        match self {
            HarmonicPoly::SaddleXY => [2.0 * p[0], -2.0 * p[1], 0.0],
            HarmonicPoly::ProductXY => [p[1], p[0], 0.0],
            HarmonicPoly::ReZ3 => [
                3.0 * (p[0] * p[0] - p[1] * p[1]),
                -6.0 * p[0] * p[1],
                0.0,
            ],
        }
    }

    pub fn token(&self) -> &'static str {
        match self {
            HarmonicPoly::SaddleXY => "x2-y2",
            HarmonicPoly::ProductXY => "xy",
            HarmonicPoly::ReZ3 => "x3-3xy2",
        }
    }

    /// Nodal-line data in the plane: directions and the factor g in
    /// |∇v| = g·|s|^{k-1} along each line through the origin.
    pub(crate) fn nodal_lines_2d(&self) -> (Vec<f64>, f64, u32) {
        match self {
            // Re z² = 0 on θ = π/4, 3π/4; |∇| = 2|z|
            HarmonicPoly::SaddleXY => (vec![std::f64::consts::FRAC_PI_4, 3.0 * std::f64::consts::FRAC_PI_4], 2.0, 2),
            // xy = 0 on the axes; |∇(xy)| = |z|
            HarmonicPoly::ProductXY => (vec![0.0, std::f64::consts::FRAC_PI_2], 1.0, 2),
            // Re z³ = 0 on θ = π/6 + jπ/3; |∇| = 3|z|²
            HarmonicPoly::ReZ3 => {
                let base = std::f64::consts::PI / 6.0;
                (
                    vec![base, base + std::f64::consts::PI / 3.0, base + 2.0 * std::f64::consts::PI / 3.0],
                    3.0,
                    3,
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolutionKind {
    Zero,
    /// a (x·ν)⁺ with χ = χ_{u>0}
    HalfPlane { slope: f64, normal: Vector },
    /// q |x·ν| with χ ≡ 1
    Wedge { slope: f64, normal: Vector },
    /// same profile, χ forced to 1 including on the crease
    WedgeWithChiOne { slope: f64, normal: Vector },
    /// |v| for a sign-changing harmonic polynomial v, χ ≡ 1
    AbsHarmonic { poly: HarmonicPoly },
    /// |Re z^k| in the plane, k >= 2, χ ≡ 1
    HomogeneousAbs { k: u32 },
    /// two-pole cusp example; eval/grad only, no closed-form functionals
    Cusp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticSolution {
    pub kind: SolutionKind,
    pub dim: usize,
}

fn unit_normal(normal: Vector, dim: usize) -> Result<Vector> {
    let mut nu = normal;
    let n = geom::normalize(&mut nu, dim);
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::Parameter(format!(
            "normal must be a unit vector (norm {n})"
        )));
    }
    Ok(nu)
}

impl AnalyticSolution {
    pub fn new(kind: SolutionKind, dim: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Parameter(format!("dim must be 2 or 3, got {dim}")));
        }
        match &kind {
            SolutionKind::HalfPlane { slope, normal } => {
                if !(*slope > 0.0) {
                    return Err(Error::Parameter("half-plane slope must be positive".into()));
                }
                unit_normal(*normal, dim)?;
            }
            SolutionKind::Wedge { slope, normal }
            | SolutionKind::WedgeWithChiOne { slope, normal } => {
                if !(*slope > 0.0) {
                    return Err(Error::Parameter("wedge slope must be positive".into()));
                }
                unit_normal(*normal, dim)?;
            }
            SolutionKind::HomogeneousAbs { k } => {
                if dim != 2 {
                    return Err(Error::Parameter(
                        "|Re z^k| profiles are two-dimensional".into(),
                    ));
                }
                if *k < 2 {
                    return Err(Error::Parameter(
                        "homogeneous |Re z^k| needs k >= 2 (k = 1 is the wedge)".into(),
                    ));
                }
            }
            SolutionKind::Cusp => {
                if dim != 2 {
                    return Err(Error::Parameter("the cusp example is two-dimensional".into()));
                }
            }
            _ => {}
        }
        Ok(AnalyticSolution { kind, dim })
    }

    pub fn zero(dim: usize) -> Self {
        AnalyticSolution::new(SolutionKind::Zero, dim).unwrap()
    }

    pub fn wedge(q: f64, normal: Vector, dim: usize) -> Result<Self> {
        AnalyticSolution::new(
            SolutionKind::Wedge {
                slope: q,
                normal,
            },
            dim,
        )
    }

    pub fn half_plane(a: f64, normal: Vector, dim: usize) -> Result<Self> {
        AnalyticSolution::new(
            SolutionKind::HalfPlane {
                slope: a,
                normal,
            },
            dim,
        )
    }

    pub fn abs_harmonic(poly: HarmonicPoly, dim: usize) -> Result<Self> {
        AnalyticSolution::new(SolutionKind::AbsHarmonic { poly }, dim)
    }

    pub fn homogeneous_abs(k: u32) -> Result<Self> {
        AnalyticSolution::new(SolutionKind::HomogeneousAbs { k }, 2)
    }

    /// Exact value of u.
    pub fn eval(&self, p: &Point) -> f64 {
        match &self.kind {
            SolutionKind::Zero => 0.0,
            SolutionKind::HalfPlane { slope, normal } => {
                let t = geom::dot(p, normal, self.dim);
                if t > 0.0 {
                    slope * t
                } else {
                    0.0
                }
            }
            SolutionKind::Wedge { slope, normal }
            | SolutionKind::WedgeWithChiOne { slope, normal } => {
                slope * geom::dot(p, normal, self.dim).abs()
            }
            SolutionKind::AbsHarmonic { poly } => poly.eval(p).abs(),
            SolutionKind::HomogeneousAbs { k } => re_z_pow(p, *k).abs(),
            SolutionKind::Cusp => cusp_eval(p),
        }
    }

    /// Exact gradient. At non-differentiability points the one-sided limit
    /// along the positive normal (or positive sign of the harmonic factor)
    /// is returned.
    pub fn grad(&self, p: &Point) -> Vector {
        match &self.kind {
            SolutionKind::Zero => [0.0; 3],
            SolutionKind::HalfPlane { slope, normal } => {
                let t = geom::dot(p, normal, self.dim);
                if t >= 0.0 {
                    geom::scale(normal, *slope)
                } else {
                    [0.0; 3]
                }
            }
            SolutionKind::Wedge { slope, normal }
            | SolutionKind::WedgeWithChiOne { slope, normal } => {
                let t = geom::dot(p, normal, self.dim);
                let s = if t >= 0.0 { 1.0 } else { -1.0 };
                geom::scale(normal, slope * s)
            }
            SolutionKind::AbsHarmonic { poly } => {
                let s = if poly.eval(p) >= 0.0 { 1.0 } else { -1.0 };
                geom::scale(&poly.grad(p), s)
            }
            SolutionKind::HomogeneousAbs { k } => {
                let s = if re_z_pow(p, *k) >= 0.0 { 1.0 } else { -1.0 };
                geom::scale(&re_z_pow_grad(p, *k), s)
            }
            SolutionKind::Cusp => cusp_grad(p),
        }
    }

    /// The companion indicator χ.
    pub fn chi(&self, p: &Point) -> f64 {
        match &self.kind {
            SolutionKind::Zero => 0.0,
            SolutionKind::HalfPlane { normal, .. } => {
                if geom::dot(p, normal, self.dim) > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            SolutionKind::Wedge { .. }
            | SolutionKind::WedgeWithChiOne { .. }
            | SolutionKind::AbsHarmonic { .. }
            | SolutionKind::HomogeneousAbs { .. } => 1.0,
            SolutionKind::Cusp => {
                if cusp_eval(p) > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Supremum of |∇u| over the ball of radius `radius` around the origin.
    pub fn lipschitz_within(&self, radius: f64) -> f64 {
        match &self.kind {
            SolutionKind::Zero => 0.0,
            SolutionKind::HalfPlane { slope, .. } => *slope,
            SolutionKind::Wedge { slope, .. } | SolutionKind::WedgeWithChiOne { slope, .. } => {
                *slope
            }
            SolutionKind::AbsHarmonic { poly } => match poly {
                HarmonicPoly::SaddleXY => 2.0 * radius,
                HarmonicPoly::ProductXY => radius,
                HarmonicPoly::ReZ3 => 3.0 * radius * radius,
            },
            SolutionKind::HomogeneousAbs { k } => {
                *k as f64 * radius.powi(*k as i32 - 1)
            }
            // both poles at distance >= 1/2 inside the admissible domain
            SolutionKind::Cusp => 4.0,
        }
    }

    /// Sample u and χ on a grid. The caller must keep cusp grids inside the
    /// admissible domain (away from B_{1/2}(±e_1)).
    pub fn sample_on(&self, spec: GridSpec) -> Result<ScalarField> {
        ScalarField::from_fn(spec, |p| self.eval(p), |p| self.chi(p))
    }

    /// Wrap with a quadrature grid to use in functional evaluation.
    pub fn with_grid(&self, spec: GridSpec) -> Result<AnalyticField> {
        if spec.dim() != self.dim {
            return Err(Error::Parameter(format!(
                "grid dim {} does not match solution dim {}",
                spec.dim(),
                self.dim
            )));
        }
        let bound = {
            let up = spec.upper();
            let org = spec.origin();
            let r = (0..self.dim)
                .map(|d| up[d].abs().max(org[d].abs()))
                .fold(0.0f64, |a, b| a + b * b)
                .sqrt();
            self.lipschitz_within(r)
        };
        Ok(AnalyticField {
            sol: self.clone(),
            spec,
            lipschitz: bound,
        })
    }

    /// Parse the CLI grammar, e.g. `wedge:q=0.5,nu=en`, `halfplane:a=1`,
    /// `absharm:v=x2-y2`, `homabs:k=2`, `cusp`, `zero`.
    pub fn parse(text: &str, dim: usize) -> Result<Self> {
        let (head, rest) = match text.split_once(':') {
            Some((h, r)) => (h.trim(), r.trim()),
            None => (text.trim(), ""),
        };
        let mut q: Option<f64> = None;
        let mut a: Option<f64> = None;
        let mut k: Option<u32> = None;
        let mut nu: Vector = geom::axis(dim - 1);
        let mut poly: Option<HarmonicPoly> = None;
        for part in rest.split(',').filter(|s| !s.trim().is_empty()) {
            let (key, val) = part
                .split_once('=')
                .ok_or_else(|| Error::Parameter(format!("expected key=value, got '{part}'")))?;
            let key = key.trim();
            let val = val.trim();
            match key {
                "q" => q = Some(parse_f64(val)?),
                "a" => a = Some(parse_f64(val)?),
                "k" => {
                    k = Some(val.parse::<u32>().map_err(|_| {
                        Error::Parameter(format!("bad integer '{val}' for k"))
                    })?)
                }
                "nu" => {
                    nu = match val {
                        "e1" => geom::axis(0),
                        "e2" => geom::axis(1),
                        "e3" => geom::axis(2),
                        "en" => geom::axis(dim - 1),
                        _ => {
                            return Err(Error::Parameter(format!(
                                "unknown normal token '{val}' (use e1|e2|e3|en)"
                            )))
                        }
                    }
                }
                "v" => {
                    poly = Some(match val {
                        "x2-y2" => HarmonicPoly::SaddleXY,
                        "xy" => HarmonicPoly::ProductXY,
                        "x3-3xy2" => HarmonicPoly::ReZ3,
                        _ => {
                            return Err(Error::Parameter(format!(
                                "unknown harmonic polynomial '{val}'"
                            )))
                        }
                    })
                }
                _ => return Err(Error::Parameter(format!("unknown key '{key}'"))),
            }
        }
        match head {
            "zero" => Ok(AnalyticSolution::zero(dim)),
            "wedge" => AnalyticSolution::new(
                SolutionKind::Wedge {
                    slope: q.ok_or_else(|| Error::Parameter("wedge needs q=".into()))?,
                    normal: nu,
                },
                dim,
            ),
            "wedgechi1" => AnalyticSolution::new(
                SolutionKind::WedgeWithChiOne {
                    slope: q.ok_or_else(|| Error::Parameter("wedgechi1 needs q=".into()))?,
                    normal: nu,
                },
                dim,
            ),
            "halfplane" => AnalyticSolution::new(
                SolutionKind::HalfPlane {
                    slope: a.ok_or_else(|| Error::Parameter("halfplane needs a=".into()))?,
                    normal: nu,
                },
                dim,
            ),
            "absharm" => AnalyticSolution::new(
                SolutionKind::AbsHarmonic {
                    poly: poly.ok_or_else(|| Error::Parameter("absharm needs v=".into()))?,
                },
                dim,
            ),
            "homabs" => AnalyticSolution::new(
                SolutionKind::HomogeneousAbs {
                    k: k.ok_or_else(|| Error::Parameter("homabs needs k=".into()))?,
                },
                dim,
            ),
            "cusp" => AnalyticSolution::new(SolutionKind::Cusp, dim),
            _ => Err(Error::Parameter(format!("unknown solution kind '{head}'"))),
        }
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::Parameter(format!("bad float '{s}'")))
}

/// Re((x + iy)^k) by real power iteration.
fn re_z_pow(p: &Point, k: u32) -> f64 {
    let (mut re, mut im) = (1.0f64, 0.0f64);
    for _ in 0..k {
        let nre = re * p[0] - im * p[1];
        let nim = re * p[1] + im * p[0];
        re = nre;
        im = nim;
    }
    re
}

/// ∇ Re z^k = (Re k z^{k-1}, -Im k z^{k-1}).
fn re_z_pow_grad(p: &Point, k: u32) -> Vector {
    let (mut re, mut im) = (1.0f64, 0.0f64);
    for _ in 0..k.saturating_sub(1) {
        let nre = re * p[0] - im * p[1];
        let nim = re * p[1] + im * p[0];
        re = nre;
        im = nim;
    }
    [k as f64 * re, -(k as f64) * im, 0.0]
}

fn cusp_eval(p: &Point) -> f64 {
    let d1 = ((p[0] - 1.0) * (p[0] - 1.0) + p[1] * p[1]).sqrt();
    let d2 = ((p[0] + 1.0) * (p[0] + 1.0) + p[1] * p[1]).sqrt();
    (-d1.ln()).max(0.0) + (-d2.ln()).max(0.0)
}

fn cusp_grad(p: &Point) -> Vector {
    let mut g = [0.0; 3];
    for pole in [1.0f64, -1.0] {
        let dx = p[0] - pole;
        let dy = p[1];
        let r2 = dx * dx + dy * dy;
        if r2 < 1.0 && r2 > 0.0 {
            g[0] -= dx / r2;
            g[1] -= dy / r2;
        }
    }
    g
}

/// An analytic solution paired with the grid used for numeric quadrature.
/// Point values, gradients and χ are exact; only ball decompositions come
/// from the grid.
#[derive(Debug, Clone)]
pub struct AnalyticField {
    sol: AnalyticSolution,
    spec: GridSpec,
    lipschitz: f64,
}

impl AnalyticField {
    pub fn solution(&self) -> &AnalyticSolution {
        &self.sol
    }
}

impl FieldView for AnalyticField {
    fn dim(&self) -> usize {
        self.sol.dim
    }
    fn quad_spec(&self) -> &GridSpec {
        &self.spec
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
    fn value(&self, p: &Point) -> f64 {
        self.sol.eval(p)
    }
    fn grad(&self, p: &Point) -> Vector {
        self.sol.grad(p)
    }
    fn chi(&self, p: &Point) -> f64 {
        self.sol.chi(p)
    }
    fn quad_pitch(&self, r: f64) -> f64 {
        // exact point values: small balls may be resolved below the grid.
        // Dyadic refinement keeps cell faces on the nodal planes, where the
        // catalogue's jumps live.
        let mut pitch = self.spec.h();
        while pitch > r / 16.0 && pitch > 1e-9 {
            pitch *= 0.5;
        }
        pitch
    }
}
