//! Free boundary extraction and pointwise classification.
//!
//! Boundary points come from grid edges where u crosses the support
//! threshold. Each point gets density/frequency limits (M₀, N₀, H₀) from a
//! radius ladder and a three-way label: regular (density |B₁|/2 band),
//! sigmaH (highest density |B₁|), or degenerate (sigmaH with vanishing H₀);
//! anything between the bands or with an unstable ladder stays unresolved
//! rather than being guessed. The measured Δu(B_r) is compared against the
//! surface-measure prediction 1·H^{n-1} on regular points plus
//! 2α(n)√H₀·H^{n-1} on sigmaH points.

use crate::error::{Error, Result};
use crate::field::{laplacian_mass, BallRegion, FieldView, GridSpec, ScalarField};
use crate::functionals::{alpha_n, limit_extrapolate, profile, sample};
use crate::geom::{self, Point, Vector};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PointClass {
    Regular,
    SigmaH,
    Degenerate,
    Unresolved,
}

impl PointClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointClass::Regular => "regular",
            PointClass::SigmaH => "sigmaH",
            PointClass::Degenerate => "degenerate",
            PointClass::Unresolved => "unresolved",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryPoint {
    pub pos: Point,
    pub m0: f64,
    pub n0: Option<f64>,
    pub h0: f64,
    pub class: PointClass,
    pub normal: Option<Vector>,
    pub ladder_stable: bool,
}

/// A piece of the extracted boundary polyline (2D) or facet set (3D).
#[derive(Debug, Clone, Serialize)]
pub struct BoundaryFacet {
    /// segment endpoints in 2D; polygon vertices in 3D
    pub vertices: Vec<Point>,
    /// length in 2D, area in 3D
    pub measure: f64,
    pub midpoint: Point,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryPointSet {
    pub points: Vec<BoundaryPoint>,
    pub facets: Vec<BoundaryFacet>,
    pub u_threshold: f64,
    /// the u ≡ 0 alternative
    pub identically_zero: bool,
}

fn edge_crossing(spec: &GridSpec, a: [usize; 3], b: [usize; 3], ua: f64, ub: f64, thresh: f64) -> Option<Point> {
    let (hi, lo, phi, plo) = if ua > thresh && ub <= thresh {
        (ua, ub, spec.node_pos(a), spec.node_pos(b))
    } else if ub > thresh && ua <= thresh {
        (ub, ua, spec.node_pos(b), spec.node_pos(a))
    } else {
        return None;
    };
    let t = if hi - lo > 0.0 {
        ((hi - thresh) / (hi - lo)).clamp(0.0, 1.0)
    } else {
        0.5
    };
    Some([
        phi[0] + t * (plo[0] - phi[0]),
        phi[1] + t * (plo[1] - phi[1]),
        phi[2] + t * (plo[2] - phi[2]),
    ])
}

/// Marching-edges boundary extraction: a point on every edge joining a
/// node with u above the support threshold (1e-8·max u) to one at or
/// below it; duplicates within h/2 merged.
pub fn extract_boundary(field: &ScalarField) -> BoundaryPointSet {
    let spec = field.spec();
    let dim = spec.dim();
    let max_u = field.max_u();
    if max_u == 0.0 {
        return BoundaryPointSet {
            points: Vec::new(),
            facets: Vec::new(),
            u_threshold: 0.0,
            identically_zero: true,
        };
    }
    let thresh = 1e-8 * max_u;
    let mut raw: Vec<Point> = Vec::new();
    for idx in spec.node_iter() {
        let ua = field.node_u(idx);
        for d in 0..dim {
            if idx[d] + 1 < spec.nodes(d) {
                let mut nb = idx;
                nb[d] += 1;
                let ub = field.node_u(nb);
                if let Some(p) = edge_crossing(spec, idx, nb, ua, ub, thresh) {
                    raw.push(p);
                }
            }
        }
    }
    // greedy dedupe within h/2, first occurrence wins (deterministic)
    let merge_r = spec.h() / 2.0;
    let cell = merge_r.max(1e-12);
    let key = |p: &Point| -> (i64, i64, i64) {
        (
            (p[0] / cell).floor() as i64,
            (p[1] / cell).floor() as i64,
            (p[2] / cell).floor() as i64,
        )
    };
    let mut buckets: std::collections::HashMap<(i64, i64, i64), Vec<usize>> =
        std::collections::HashMap::new();
    let mut kept: Vec<Point> = Vec::new();
    'outer: for p in raw {
        let (kx, ky, kz) = key(&p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(list) = buckets.get(&(kx + dx, ky + dy, kz + dz)) {
                        for &j in list {
                            if geom::dist(&kept[j], &p, dim) < merge_r {
                                continue 'outer;
                            }
                        }
                    }
                }
            }
        }
        buckets.entry((kx, ky, kz)).or_default().push(kept.len());
        kept.push(p);
    }
    let facets = if dim == 2 {
        extract_segments_2d(field, thresh)
    } else {
        extract_facets_3d(field, thresh)
    };
    BoundaryPointSet {
        points: kept
            .into_iter()
            .map(|pos| BoundaryPoint {
                pos,
                m0: f64::NAN,
                n0: None,
                h0: f64::NAN,
                class: PointClass::Unresolved,
                normal: None,
                ladder_stable: false,
            })
            .collect(),
        facets,
        u_threshold: thresh,
        identically_zero: false,
    }
}

fn facet_from_vertices(vertices: Vec<Point>, measure: f64, dim: usize) -> BoundaryFacet {
    let mut mid = [0.0; 3];
    for v in &vertices {
        for d in 0..3 {
            mid[d] += v[d];
        }
    }
    for m in mid.iter_mut() {
        *m /= vertices.len() as f64;
    }
    let _ = dim;
    BoundaryFacet {
        vertices,
        measure,
        midpoint: mid,
    }
}

/// Per-cell crossing pairing: the marching-squares polyline.
fn extract_segments_2d(field: &ScalarField, thresh: f64) -> Vec<BoundaryFacet> {
    let spec = field.spec();
    let mut out = Vec::new();
    for ix in 0..spec.cells(0) {
        for iy in 0..spec.cells(1) {
            let corners = [
                [ix, iy, 0],
                [ix + 1, iy, 0],
                [ix + 1, iy + 1, 0],
                [ix, iy + 1, 0],
            ];
            let mut crossings: Vec<Point> = Vec::new();
            for e in 0..4 {
                let a = corners[e];
                let b = corners[(e + 1) % 4];
                if let Some(p) =
                    edge_crossing(spec, a, b, field.node_u(a), field.node_u(b), thresh)
                {
                    crossings.push(p);
                }
            }
            match crossings.len() {
                2 => {
                    let len = geom::dist(&crossings[0], &crossings[1], 2);
                    out.push(facet_from_vertices(crossings, len, 2));
                }
                4 => {
                    // saddle cell: take the pairing with smaller total length
                    let d = |a: &Point, b: &Point| geom::dist(a, b, 2);
                    let l1 = d(&crossings[0], &crossings[1]) + d(&crossings[2], &crossings[3]);
                    let l2 = d(&crossings[0], &crossings[3]) + d(&crossings[1], &crossings[2]);
                    let pairs: [(usize, usize); 2] =
                        if l1 <= l2 { [(0, 1), (2, 3)] } else { [(0, 3), (1, 2)] };
                    for (i, j) in pairs {
                        let len = d(&crossings[i], &crossings[j]);
                        out.push(facet_from_vertices(vec![crossings[i], crossings[j]], len, 2));
                    }
                }
                _ => {}
            }
        }
    }
    out
}

/// Per-cell crossing polygon: order the edge crossings around their
/// centroid in the plane orthogonal to the local gradient.
fn extract_facets_3d(field: &ScalarField, thresh: f64) -> Vec<BoundaryFacet> {
    let spec = field.spec();
    let edges: [([usize; 3], [usize; 3]); 12] = [
        ([0, 0, 0], [1, 0, 0]),
        ([0, 1, 0], [1, 1, 0]),
        ([0, 0, 1], [1, 0, 1]),
        ([0, 1, 1], [1, 1, 1]),
        ([0, 0, 0], [0, 1, 0]),
        ([1, 0, 0], [1, 1, 0]),
        ([0, 0, 1], [0, 1, 1]),
        ([1, 0, 1], [1, 1, 1]),
        ([0, 0, 0], [0, 0, 1]),
        ([1, 0, 0], [1, 0, 1]),
        ([0, 1, 0], [0, 1, 1]),
        ([1, 1, 0], [1, 1, 1]),
    ];
    let mut out = Vec::new();
    for ix in 0..spec.cells(0) {
        for iy in 0..spec.cells(1) {
            for iz in 0..spec.cells(2) {
                let mut crossings: Vec<Point> = Vec::new();
                for (ea, eb) in edges.iter() {
                    let a = [ix + ea[0], iy + ea[1], iz + ea[2]];
                    let b = [ix + eb[0], iy + eb[1], iz + eb[2]];
                    if let Some(p) =
                        edge_crossing(spec, a, b, field.node_u(a), field.node_u(b), thresh)
                    {
                        crossings.push(p);
                    }
                }
                if crossings.len() < 3 {
                    continue;
                }
                let mut centroid = [0.0; 3];
                for p in &crossings {
                    for d in 0..3 {
                        centroid[d] += p[d];
                    }
                }
                for c in centroid.iter_mut() {
                    *c /= crossings.len() as f64;
                }
                let mut normal = field.cell_gradient(&centroid);
                if geom::normalize(&mut normal, 3) == 0.0 {
                    continue;
                }
                let t1 = geom::orthogonal(&normal, 3);
                let t2 = geom::cross(&normal, &t1);
                let mut angled: Vec<(f64, Point)> = crossings
                    .iter()
                    .map(|p| {
                        let d = geom::sub(p, &centroid);
                        (geom::dot(&d, &t2, 3).atan2(geom::dot(&d, &t1, 3)), *p)
                    })
                    .collect();
                angled.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                let poly: Vec<Point> = angled.into_iter().map(|(_, p)| p).collect();
                // fan triangulation area
                let mut area = 0.0;
                for k in 1..poly.len() - 1 {
                    let u = geom::sub(&poly[k], &poly[0]);
                    let v = geom::sub(&poly[k + 1], &poly[0]);
                    area += 0.5 * geom::norm(&geom::cross(&u, &v), 3);
                }
                out.push(facet_from_vertices(poly, area, 3));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct ClassifyConfig {
    /// top of the radius ladder (clipped per point by the box)
    pub r_max: f64,
    pub n_radii: usize,
    /// sigmaH band: M₀ >= |B₁|(1 - tol_class)
    pub tol_class_factor: f64,
    /// regular band: M₀ <= |B₁|(1 - gap)
    pub gap_factor: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            r_max: 0.25,
            n_radii: 10,
            tol_class_factor: 0.05,
            gap_factor: 0.15,
        }
    }
}

/// Fill labels, limits and crease normals for every extracted point.
pub fn classify(
    field: &ScalarField,
    pts: &mut BoundaryPointSet,
    config: &ClassifyConfig,
) -> Result<()> {
    let spec = field.spec();
    let dim = spec.dim();
    let h = spec.h();
    let b_n = geom::unit_ball_volume(dim);
    let tol_class = config.tol_class_factor * b_n;
    let gap = config.gap_factor * b_n;
    let tol_h0 = (4.0 * h) * (4.0 * h);
    let r_min = 4.0 * h;
    let results: Vec<BoundaryPoint> = pts
        .points
        .par_iter()
        .map(|pt| {
            let mut out = pt.clone();
            let r_cap = (spec.dist_to_boundary(&pt.pos) - 3.0 * h).min(config.r_max);
            if r_cap <= 1.5 * r_min {
                out.class = PointClass::Unresolved;
                return out;
            }
            let prof = match profile(field, &pt.pos, r_min, r_cap, config.n_radii) {
                Ok(p) => p,
                Err(_) => {
                    out.class = PointClass::Unresolved;
                    return out;
                }
            };
            let lim = limit_extrapolate(&prof);
            out.m0 = lim.m0;
            out.n0 = lim.n0;
            out.h0 = lim.h0;
            out.ladder_stable = lim.stable;
            if !lim.stable {
                out.class = PointClass::Unresolved;
                return out;
            }
            out.class = if lim.m0 >= b_n - tol_class {
                if lim.h0 <= tol_h0 {
                    PointClass::Degenerate
                } else {
                    PointClass::SigmaH
                }
            } else if lim.m0 <= b_n - gap {
                PointClass::Regular
            } else {
                PointClass::Unresolved
            };
            if matches!(out.class, PointClass::SigmaH | PointClass::Degenerate) {
                out.normal = crease_normal(field, &pt.pos, pts.u_threshold);
            }
            out
        })
        .collect();
    pts.points = results;
    Ok(())
}

/// Crease normal from the second moments of ∇u over B_{8h}(x) ∩ {u > 0}:
/// the two-sided gradient ±q·ν makes the moment matrix rank-1 dominant
/// along ν, so the top eigenvector is the normal.
fn crease_normal(field: &ScalarField, x: &Point, thresh: f64) -> Option<Vector> {
    let spec = field.spec();
    let dim = spec.dim();
    let h = spec.h();
    let rad = 8.0 * h;
    let mut moment = [[0.0f64; 3]; 3];
    let mut count = 0usize;
    let steps = 17;
    let kz = if dim == 3 { steps } else { 1 };
    for i in 0..steps {
        for j in 0..steps {
            for k in 0..kz {
                let p = [
                    x[0] + rad * (2.0 * (i as f64 + 0.5) / steps as f64 - 1.0),
                    x[1] + rad * (2.0 * (j as f64 + 0.5) / steps as f64 - 1.0),
                    if dim == 3 {
                        x[2] + rad * (2.0 * (k as f64 + 0.5) / steps as f64 - 1.0)
                    } else {
                        0.0
                    },
                ];
                if geom::dist(&p, x, dim) > rad || !spec.contains(&p) {
                    continue;
                }
                if field.value(&p) <= thresh {
                    continue;
                }
                let g = field.cell_gradient(&p);
                for a in 0..dim {
                    for b in 0..dim {
                        moment[a][b] += g[a] * g[b];
                    }
                }
                count += 1;
            }
        }
    }
    if count == 0 {
        return None;
    }
    let (_, v) = crate::geometry::top_eigenpair(&moment, dim);
    let mut v = v;
    // deterministic sign: largest-magnitude component positive
    let mut kmax = 0;
    for d in 1..dim {
        if v[d].abs() > v[kmax].abs() {
            kmax = d;
        }
    }
    if v[kmax] < 0.0 {
        for t in v.iter_mut() {
            *t = -*t;
        }
    }
    Some(v)
}

/// One-homogeneous blow-up u_{x,r}(y) = u(x + ry)/r resampled on the unit
/// box. Needs the enclosing cube of B_{√n·r}(x) inside the source grid.
pub fn blowup(field: &ScalarField, x: &Point, r: f64, cells: usize) -> Result<ScalarField> {
    resample(field, x, r, cells, 1.0 / r)
}

/// Renormalized blow-up u(x + ry)/(r √H_x(r)); errors when H_x(r) = 0.
pub fn renormalize(field: &ScalarField, x: &Point, r: f64, cells: usize) -> Result<ScalarField> {
    let s = sample(field, x, r)?;
    if !s.h_positive() {
        return Err(Error::Precondition(
            "renormalize needs H_x(r) > 0".into(),
        ));
    }
    resample(field, x, r, cells, 1.0 / (r * s.h.sqrt()))
}

fn resample(
    field: &ScalarField,
    x: &Point,
    r: f64,
    cells: usize,
    scale: f64,
) -> Result<ScalarField> {
    let spec = field.spec();
    let dim = spec.dim();
    let reach = r * (dim as f64).sqrt() + 2.0 * spec.h();
    if spec.dist_to_boundary(x) <= reach {
        return Err(Error::OutOfDomain(
            x[0],
            x[1],
            x[2],
            "blow-up cube exceeds the source grid",
        ));
    }
    let target = GridSpec::unit_box(dim, cells)?;
    ScalarField::from_fn(
        target,
        |y| {
            let p = geom::add(x, &geom::scale(y, r));
            field.value(&p) * scale
        },
        |y| {
            let p = geom::add(x, &geom::scale(y, r));
            field.chi(&p)
        },
    )
}

/// Measured vs predicted Δu(B_r(x)) along a radius ladder.
#[derive(Debug, Clone, Serialize)]
pub struct MeasureProfile {
    pub x: Point,
    pub radii: Vec<f64>,
    pub measured: Vec<f64>,
    pub predicted: Vec<f64>,
    pub relative_mismatch: Vec<f64>,
    /// unresolved points inside the largest ball
    pub contaminated: bool,
}

/// Clip a segment to the ball and return the inside length.
fn segment_length_in_ball(a: &Point, b: &Point, x: &Point, r: f64, dim: usize) -> f64 {
    let d = geom::sub(b, a);
    let f = geom::sub(a, x);
    let aa = geom::dot(&d, &d, dim);
    if aa == 0.0 {
        return 0.0;
    }
    let bb = 2.0 * geom::dot(&f, &d, dim);
    let cc = geom::dot(&f, &f, dim) - r * r;
    let disc = bb * bb - 4.0 * aa * cc;
    if disc <= 0.0 {
        return 0.0;
    }
    let sq = disc.sqrt();
    let t0 = ((-bb - sq) / (2.0 * aa)).clamp(0.0, 1.0);
    let t1 = ((-bb + sq) / (2.0 * aa)).clamp(0.0, 1.0);
    (t1 - t0).max(0.0) * aa.sqrt()
}

/// Evaluate the distributional identity: measured Δu(B_r) against the
/// label-weighted surface measure of the extracted boundary.
pub fn measure_profile(
    field: &ScalarField,
    x: &Point,
    pts: &BoundaryPointSet,
    radii: &[f64],
) -> Result<MeasureProfile> {
    let spec = field.spec();
    let dim = spec.dim();
    let alpha = alpha_n(dim);
    let h = spec.h();
    let mut measured = Vec::with_capacity(radii.len());
    let mut predicted = Vec::with_capacity(radii.len());
    let mut mismatch = Vec::with_capacity(radii.len());
    let r_top = radii.iter().cloned().fold(0.0, f64::max);
    let contaminated = pts
        .points
        .iter()
        .any(|p| p.class == PointClass::Unresolved && geom::dist(&p.pos, x, dim) <= r_top);
    for &r in radii {
        // centered transition window cancels the O(σ) smearing bias
        let sigma = (2.0 * h).max(0.02 * r);
        let region = BallRegion::new(spec, *x, r - sigma / 2.0);
        let q = laplacian_mass(spec, &region, sigma, |p| field.cell_gradient(p))?;
        measured.push(q.value);
        let mut pred = 0.0;
        for f in &pts.facets {
            let inside = if dim == 2 {
                segment_length_in_ball(&f.vertices[0], &f.vertices[1], x, r, dim)
            } else if geom::dist(&f.midpoint, x, dim) <= r {
                f.measure
            } else {
                0.0
            };
            if inside == 0.0 {
                continue;
            }
            // weight from the nearest classified point
            let mut best = f64::INFINITY;
            let mut weight = 0.0;
            for p in &pts.points {
                let d = geom::dist(&p.pos, &f.midpoint, dim);
                if d < best {
                    best = d;
                    weight = match p.class {
                        PointClass::Regular => 1.0,
                        PointClass::SigmaH | PointClass::Degenerate => {
                            2.0 * alpha * p.h0.max(0.0).sqrt()
                        }
                        PointClass::Unresolved => 0.0,
                    };
                }
            }
            pred += inside * weight;
        }
        predicted.push(pred);
        mismatch.push((measured.last().unwrap() - pred).abs() / pred.abs().max(1e-12));
    }
    Ok(MeasureProfile {
        x: *x,
        radii: radii.to_vec(),
        measured,
        predicted,
        relative_mismatch: mismatch,
        contaminated,
    })
}

/// The two deviation ratios of the sigmaH limit description: the energy
/// ratio r∫(|∇u|²+χ-1)/∫_{∂B_r}u² (→ 1 at sigmaH points) and the gradient
/// deviation from the renormalized wedge α(n)√H_x(r)|(y-x)·ν| (→ 0).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DeviationSample {
    pub r: f64,
    pub energy_dev: f64,
    pub profile_dev: f64,
}

pub fn deviation_functionals(
    field: &dyn FieldView,
    x: &Point,
    r: f64,
    normal: &Vector,
) -> Result<DeviationSample> {
    let spec = field.quad_spec();
    let dim = field.dim();
    let region = BallRegion::new(spec, *x, r);
    let s = sample(field, x, r)?;
    if !s.h_positive() {
        return Err(Error::Precondition("deviation ratios need H_x(r) > 0".into()));
    }
    let usq_total = s.h * r.powi(dim as i32 + 1);
    let pitch = field.quad_pitch(r);
    let energy = crate::field::ball_integral_at(spec, &region, pitch, |p| {
        let g = field.grad(p);
        geom::dot(&g, &g, dim) + field.chi(p) - 1.0
    })?;
    let slope = alpha_n(dim) * s.h.sqrt();
    let prof = crate::field::ball_integral_at(spec, &region, pitch, |p| {
        let g = field.grad(p);
        let t = geom::dot(&geom::sub(p, x), normal, dim);
        let sign = if t >= 0.0 { 1.0 } else { -1.0 };
        let mut diff = [0.0; 3];
        for d in 0..dim {
            diff[d] = g[d] - slope * sign * normal[d];
        }
        geom::dot(&diff, &diff, dim)
    })?;
    Ok(DeviationSample {
        r,
        energy_dev: r * energy.value / usq_total,
        profile_dev: r * prof.value / usq_total,
    })
}

/// CSV rows: coordinates, M0, N0, H0, label, normal.
pub fn boundary_to_csv(pts: &BoundaryPointSet, dim: usize, header_comment: &str) -> String {
    let mut out = String::new();
    if !header_comment.is_empty() {
        out.push_str(&format!("# {header_comment}\n"));
    }
    out.push_str(if dim == 2 {
        "x,y,M0,N0,H0,label,nu_x,nu_y\n"
    } else {
        "x,y,z,M0,N0,H0,label,nu_x,nu_y,nu_z\n"
    });
    for p in &pts.points {
        let coords = if dim == 2 {
            format!("{:.16e},{:.16e}", p.pos[0], p.pos[1])
        } else {
            format!("{:.16e},{:.16e},{:.16e}", p.pos[0], p.pos[1], p.pos[2])
        };
        let n0 = p.n0.map(|v| format!("{v:.16e}")).unwrap_or_else(|| "nan".into());
        let nu = p.normal.unwrap_or([f64::NAN; 3]);
        let nu_str = if dim == 2 {
            format!("{:.16e},{:.16e}", nu[0], nu[1])
        } else {
            format!("{:.16e},{:.16e},{:.16e}", nu[0], nu[1], nu[2])
        };
        out.push_str(&format!(
            "{coords},{:.16e},{n0},{:.16e},{},{nu_str}\n",
            p.m0,
            p.h0,
            p.class.as_str()
        ));
    }
    out
}
