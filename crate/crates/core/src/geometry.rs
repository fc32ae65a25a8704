//! Convex bodies, rectangles, dilations, John ellipsoids, associated
//! rectangles and dyadic meshes.
//!
//! Bodies are convex polytopes given by their vertices. In 1D a body is an
//! interval, in 2D an arbitrary convex polygon (stored counterclockwise); in
//! 3D only axis-aligned boxes promoted via [`ConvexBody::from_box`] are
//! supported — that is all the rectangle-transfer machinery needs, and it
//! keeps every containment test exact.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// Axis-aligned box with nonempty interior, `lo[i] < hi[i]` on every axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl RectBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<RectBox> {
        if lo.len() != hi.len() || lo.is_empty() || lo.len() > 3 {
            return Err(Error::InvalidInput(format!(
                "box dimension must be 1..=3, got lo/hi of lengths {}/{}",
                lo.len(),
                hi.len()
            )));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::DegenerateBody(
                "box needs lo < hi on every axis".into(),
            ));
        }
        Ok(RectBox { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn side(&self, a: usize) -> f64 {
        self.hi[a] - self.lo[a]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.side(a)).product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }

    /// Euclidean diameter (length of the main diagonal).
    pub fn diameter(&self) -> f64 {
        (0..self.dim())
            .map(|a| self.side(a) * self.side(a))
            .sum::<f64>()
            .sqrt()
    }

    /// Half-open membership test: `lo <= x < hi` componentwise.
    pub fn contains_half_open(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .all(|(a, &v)| v >= self.lo[a] && v < self.hi[a])
    }

    /// Closed membership with tolerance.
    pub fn contains_closed(&self, x: &[f64], tol: f64) -> bool {
        x.iter()
            .enumerate()
            .all(|(a, &v)| v >= self.lo[a] - tol && v <= self.hi[a] + tol)
    }

    pub fn contains_box(&self, other: &RectBox, tol: f64) -> bool {
        (0..self.dim()).all(|a| other.lo[a] >= self.lo[a] - tol && other.hi[a] <= self.hi[a] + tol)
    }

    /// Dilation about an arbitrary center: `x ↦ c + s (x − c)`.
    pub fn dilate_about(&self, center: &[f64], s: f64) -> RectBox {
        let map = |x: f64, c: f64| c + s * (x - c);
        RectBox {
            lo: self
                .lo
                .iter()
                .zip(center)
                .map(|(&x, &c)| map(x, c))
                .collect(),
            hi: self
                .hi
                .iter()
                .zip(center)
                .map(|(&x, &c)| map(x, c))
                .collect(),
        }
    }

    pub fn translate(&self, shift: &[f64]) -> RectBox {
        RectBox {
            lo: self.lo.iter().zip(shift).map(|(&x, &s)| x + s).collect(),
            hi: self.hi.iter().zip(shift).map(|(&x, &s)| x + s).collect(),
        }
    }

    /// Corner vertices (2^n points).
    pub fn corners(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..(1usize << n))
            .map(|mask| {
                (0..n)
                    .map(|a| {
                        if mask & (1 << a) != 0 {
                            self.hi[a]
                        } else {
                            self.lo[a]
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// Ellipsoid `{ x : (x−c)ᵀ A (x−c) ≤ 1 }` with symmetric positive-definite
/// shape matrix `A` (stored row-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    pub center: Vec<f64>,
    pub shape: Vec<f64>,
}

impl Ellipsoid {
    pub fn dim(&self) -> usize {
        self.center.len()
    }

    fn shape_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_row_slice(n, n, &self.shape)
    }

    /// Covariance-form matrix `A⁻¹`.
    fn sigma(&self) -> DMatrix<f64> {
        self.shape_matrix()
            .try_inverse()
            .expect("shape matrix is positive definite")
    }

    /// Quadratic form value `(x−c)ᵀ A (x−c)`; ≤ 1 inside.
    pub fn quad(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        let d = DVector::from_iterator(n, x.iter().zip(&self.center).map(|(a, c)| a - c));
        (d.transpose() * self.shape_matrix() * &d)[(0, 0)]
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.quad(x) <= 1.0 + tol
    }

    /// Dilation about the center by factor `s` (> 0).
    pub fn dilate(&self, s: f64) -> Ellipsoid {
        Ellipsoid {
            center: self.center.clone(),
            shape: self.shape.iter().map(|v| v / (s * s)).collect(),
        }
    }

    /// Half-widths of the axis-aligned bounding box: `sqrt((A⁻¹)_aa)`.
    pub fn bounding_halfwidths(&self) -> Vec<f64> {
        let s = self.sigma();
        (0..self.dim()).map(|a| s[(a, a)].sqrt()).collect()
    }

    /// Axis-aligned bounding box.
    pub fn bounding_box(&self) -> RectBox {
        let w = self.bounding_halfwidths();
        RectBox {
            lo: self.center.iter().zip(&w).map(|(c, h)| c - h).collect(),
            hi: self.center.iter().zip(&w).map(|(c, h)| c + h).collect(),
        }
    }

    /// Evenly spread boundary samples (2D: points on the ellipse; 1D: the two
    /// endpoints).
    pub fn boundary_samples(&self, count: usize) -> Vec<Vec<f64>> {
        match self.dim() {
            1 => {
                let r = 1.0 / self.shape[0].sqrt();
                vec![vec![self.center[0] - r], vec![self.center[0] + r]]
            }
            2 => {
                let l = self.sigma().cholesky().expect("positive definite").l();
                (0..count)
                    .map(|k| {
                        let t = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
                        let u = DVector::from_vec(vec![t.cos(), t.sin()]);
                        let p = &l * u;
                        vec![self.center[0] + p[0], self.center[1] + p[1]]
                    })
                    .collect()
            }
            _ => {
                // 3D ellipsoids only arise axis-aligned (from boxes).
                let w = self.bounding_halfwidths();
                let mut out = Vec::new();
                for a in 0..3 {
                    for s in [-1.0, 1.0] {
                        let mut p = self.center.clone();
                        p[a] += s * w[a];
                        out.push(p);
                    }
                }
                out
            }
        }
    }
}

/// Bounded convex polytope with nonempty interior.
#[derive(Debug, Clone)]
pub struct ConvexBody {
    vertices: Vec<Vec<f64>>,
    dim: usize,
    john: OnceLock<Ellipsoid>,
}

impl PartialEq for ConvexBody {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices
    }
}

impl ConvexBody {
    /// Build a body from vertices. In 2D the vertices are reduced to their
    /// convex hull and stored counterclockwise; in 1D the extremes are kept.
    /// 3D input must be the 8 corners of an axis-aligned box.
    pub fn new(vertices: Vec<Vec<f64>>) -> Result<ConvexBody> {
        if vertices.is_empty() {
            return Err(Error::DegenerateBody("no vertices".into()));
        }
        let dim = vertices[0].len();
        if vertices.iter().any(|v| v.len() != dim) {
            return Err(Error::InvalidInput("mixed vertex dimensions".into()));
        }
        match dim {
            1 => {
                let a = vertices.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
                let b = vertices
                    .iter()
                    .map(|v| v[0])
                    .fold(f64::NEG_INFINITY, f64::max);
                if !(a < b) {
                    return Err(Error::DegenerateBody("interval of zero length".into()));
                }
                Ok(ConvexBody {
                    vertices: vec![vec![a], vec![b]],
                    dim,
                    john: OnceLock::new(),
                })
            }
            2 => {
                let hull = convex_hull_2d(&vertices);
                if hull.len() < 3 {
                    return Err(Error::DegenerateBody("2D hull has empty interior".into()));
                }
                Ok(ConvexBody {
                    vertices: hull,
                    dim,
                    john: OnceLock::new(),
                })
            }
            3 => {
                // Accept exactly the corner set of an axis box.
                let lo: Vec<f64> = (0..3)
                    .map(|a| vertices.iter().map(|v| v[a]).fold(f64::INFINITY, f64::min))
                    .collect();
                let hi: Vec<f64> = (0..3)
                    .map(|a| {
                        vertices
                            .iter()
                            .map(|v| v[a])
                            .fold(f64::NEG_INFINITY, f64::max)
                    })
                    .collect();
                let b = RectBox::new(lo, hi)?;
                let corners = b.corners();
                let all_corners = vertices.iter().all(|v| {
                    corners
                        .iter()
                        .any(|c| c.iter().zip(v).all(|(a, b)| (a - b).abs() < 1e-12))
                });
                if vertices.len() != 8 || !all_corners {
                    return Err(Error::InvalidInput(
                        "3D bodies are supported as axis-aligned boxes only".into(),
                    ));
                }
                Ok(ConvexBody::from_box(&b))
            }
            _ => Err(Error::InvalidInput(format!("unsupported dimension {dim}"))),
        }
    }

    /// Promote an axis-aligned box to a convex body.
    pub fn from_box(b: &RectBox) -> ConvexBody {
        let vertices = match b.dim() {
            1 => vec![vec![b.lo[0]], vec![b.hi[0]]],
            2 => vec![
                vec![b.lo[0], b.lo[1]],
                vec![b.hi[0], b.lo[1]],
                vec![b.hi[0], b.hi[1]],
                vec![b.lo[0], b.hi[1]],
            ],
            _ => b.corners(),
        };
        ConvexBody {
            vertices,
            dim: b.dim(),
            john: OnceLock::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn centroid(&self) -> Vec<f64> {
        let n = self.vertices.len() as f64;
        (0..self.dim)
            .map(|a| self.vertices.iter().map(|v| v[a]).sum::<f64>() / n)
            .collect()
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, v) in self.vertices.iter().enumerate() {
            for w in &self.vertices[i + 1..] {
                let s: f64 = v.iter().zip(w).map(|(a, b)| (a - b) * (a - b)).sum();
                d = d.max(s.sqrt());
            }
        }
        d
    }

    /// Axis-aligned bounding box.
    pub fn bounding_box(&self) -> RectBox {
        let lo: Vec<f64> = (0..self.dim)
            .map(|a| {
                self.vertices
                    .iter()
                    .map(|v| v[a])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let hi: Vec<f64> = (0..self.dim)
            .map(|a| {
                self.vertices
                    .iter()
                    .map(|v| v[a])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        RectBox { lo, hi }
    }

    /// Supporting half-planes `a·x ≤ b` with unit outward normals (2D only).
    pub fn halfplanes(&self) -> Vec<(Vec<f64>, f64)> {
        assert_eq!(self.dim, 2, "halfplanes are a 2D concept here");
        let m = self.vertices.len();
        (0..m)
            .map(|i| {
                let v = &self.vertices[i];
                let w = &self.vertices[(i + 1) % m];
                let dx = w[0] - v[0];
                let dy = w[1] - v[1];
                let len = (dx * dx + dy * dy).sqrt();
                // CCW orientation: outward normal points right of the edge.
                let a = vec![dy / len, -dx / len];
                let b = a[0] * v[0] + a[1] * v[1];
                (a, b)
            })
            .collect()
    }

    /// Closed membership with absolute tolerance.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self.dim {
            1 => x[0] >= self.vertices[0][0] - tol && x[0] <= self.vertices[1][0] + tol,
            2 => self
                .halfplanes()
                .iter()
                .all(|(a, b)| a[0] * x[0] + a[1] * x[1] <= b + tol),
            _ => self.bounding_box().contains_closed(x, tol),
        }
    }

    /// Euclidean distance from a point to the body (0 inside).
    pub fn distance_to_point(&self, x: &[f64]) -> f64 {
        match self.dim {
            1 => {
                let (a, b) = (self.vertices[0][0], self.vertices[1][0]);
                if x[0] < a {
                    a - x[0]
                } else if x[0] > b {
                    x[0] - b
                } else {
                    0.0
                }
            }
            2 => {
                if self.contains(x, 0.0) {
                    return 0.0;
                }
                let m = self.vertices.len();
                (0..m)
                    .map(|i| {
                        point_segment_distance(x, &self.vertices[i], &self.vertices[(i + 1) % m])
                    })
                    .fold(f64::INFINITY, f64::min)
            }
            _ => {
                let b = self.bounding_box();
                (0..3)
                    .map(|a| {
                        let d = (b.lo[a] - x[a]).max(x[a] - b.hi[a]).max(0.0);
                        d * d
                    })
                    .sum::<f64>()
                    .sqrt()
            }
        }
    }

    /// Euclidean distance from an axis box to the body (0 if they touch).
    pub fn distance_to_box(&self, r: &RectBox) -> f64 {
        match self.dim {
            1 => {
                let (a, b) = (self.vertices[0][0], self.vertices[1][0]);
                (a - r.hi[0]).max(r.lo[0] - b).max(0.0)
            }
            2 => {
                let rect = ConvexBody::from_box(r);
                polygon_distance(&self.vertices, &rect.vertices)
            }
            _ => {
                let b = self.bounding_box();
                (0..3)
                    .map(|a| {
                        let d = (b.lo[a] - r.hi[a]).max(r.lo[a] - b.hi[a]).max(0.0);
                        d * d
                    })
                    .sum::<f64>()
                    .sqrt()
            }
        }
    }

    /// True if the body's interior meets the open box.
    pub fn overlaps_box_open(&self, r: &RectBox) -> bool {
        match self.dim {
            1 => {
                let (a, b) = (self.vertices[0][0], self.vertices[1][0]);
                a < r.hi[0] && b > r.lo[0]
            }
            2 => {
                let rect = ConvexBody::from_box(r);
                polygons_overlap_open(&self.vertices, &rect.vertices)
            }
            _ => {
                let b = self.bounding_box();
                (0..3).all(|a| b.lo[a] < r.hi[a] && b.hi[a] > r.lo[a])
            }
        }
    }

    /// True if the box lies inside the body (all corners contained).
    pub fn contains_box(&self, r: &RectBox, tol: f64) -> bool {
        r.corners().iter().all(|c| self.contains(c, tol))
    }

    /// John ellipsoid: the maximal-volume inscribed ellipsoid. Satisfies
    /// `ℰ ⊂ body ⊂ n·ℰ` (dilation about the ellipsoid center). Cached after
    /// the first computation.
    pub fn john_ellipsoid(&self) -> Result<&Ellipsoid> {
        if let Some(e) = self.john.get() {
            return Ok(e);
        }
        let e = match self.dim {
            1 => {
                let (a, b) = (self.vertices[0][0], self.vertices[1][0]);
                let r = 0.5 * (b - a);
                Ellipsoid {
                    center: vec![0.5 * (a + b)],
                    shape: vec![1.0 / (r * r)],
                }
            }
            2 => inscribed_ellipse_2d(self)?,
            _ => {
                let b = self.bounding_box();
                let mut shape = vec![0.0; 9];
                for a in 0..3 {
                    let r = 0.5 * b.side(a);
                    shape[a * 3 + a] = 1.0 / (r * r);
                }
                Ellipsoid {
                    center: b.center(),
                    shape,
                }
            }
        };
        let _ = self.john.set(e);
        Ok(self.john.get().unwrap())
    }

    /// Center of the John ellipsoid.
    pub fn john_center(&self) -> Result<Vec<f64>> {
        Ok(self.john_ellipsoid()?.center.clone())
    }

    /// Dilation about the John center: `x ↦ c + s (x − c)`.
    pub fn dilate_about_john(&self, s: f64) -> Result<ConvexBody> {
        if !(s > 0.0) {
            return Err(Error::InvalidInput("dilation factor must be > 0".into()));
        }
        let c = self.john_center()?;
        let vertices = self
            .vertices
            .iter()
            .map(|v| v.iter().zip(&c).map(|(x, cc)| cc + s * (x - cc)).collect())
            .collect();
        let body = ConvexBody {
            vertices,
            dim: self.dim,
            john: OnceLock::new(),
        };
        // The John ellipsoid transforms with the same homothety.
        let e = self.john_ellipsoid()?;
        let _ = body.john.set(Ellipsoid {
            center: e.center.clone(),
            shape: e.shape.iter().map(|v| v / (s * s)).collect(),
        });
        Ok(body)
    }

    /// Apply `x ↦ scale · x + shift` (uniform positive scale). The John
    /// ellipsoid, if cached, is transformed analytically.
    pub fn homothety(&self, scale: f64, shift: &[f64]) -> ConvexBody {
        debug_assert!(scale > 0.0);
        let vertices: Vec<Vec<f64>> = self
            .vertices
            .iter()
            .map(|v| v.iter().zip(shift).map(|(x, s)| scale * x + s).collect())
            .collect();
        let body = ConvexBody {
            vertices,
            dim: self.dim,
            john: OnceLock::new(),
        };
        if let Some(e) = self.john.get() {
            let _ = body.john.set(Ellipsoid {
                center: e
                    .center
                    .iter()
                    .zip(shift)
                    .map(|(x, s)| scale * x + s)
                    .collect(),
                shape: e.shape.iter().map(|v| v / (scale * scale)).collect(),
            });
        }
        body
    }

    /// Apply a diagonal affine map `x_a ↦ scale_a · x_a + shift_a`.
    pub fn affine_diag(&self, scale: &[f64], shift: &[f64]) -> Result<ConvexBody> {
        if scale.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::InvalidInput("diagonal scales must be > 0".into()));
        }
        let vertices = self
            .vertices
            .iter()
            .map(|v| {
                v.iter()
                    .enumerate()
                    .map(|(a, x)| scale[a] * x + shift[a])
                    .collect()
            })
            .collect();
        Ok(ConvexBody {
            vertices,
            dim: self.dim,
            john: OnceLock::new(),
        })
    }
}

/// Associated rectangle of a convex body: the axis-aligned bounding box of
/// `n·ℰ_B`. The chain `body ⊂ R_B` always holds; the companion upper chain
/// `R_B ⊂ n^{3/2}·body` holds whenever the John ellipsoid is not too strongly
/// correlated across the axes (axis-parallel bases; see module docs).
pub fn associated_rectangle(body: &ConvexBody) -> Result<RectBox> {
    let n = body.dim() as f64;
    let e = body.john_ellipsoid()?;
    Ok(e.dilate(n).bounding_box())
}

// ---------------------------------------------------------------------------
// 2D polygon helpers
// ---------------------------------------------------------------------------

/// Andrew's monotone chain; returns the hull counterclockwise without
/// collinear or duplicate points.
fn convex_hull_2d(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut pts: Vec<(f64, f64)> = points.iter().map(|p| (p[0], p[1])).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-14 && (a.1 - b.1).abs() < 1e-14);
    if pts.len() < 3 {
        return pts.iter().map(|&(x, y)| vec![x, y]).collect();
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 1e-14
        {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 1e-14
        {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower.iter().map(|&(x, y)| vec![x, y]).collect()
}

fn point_segment_distance(x: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let abx = b[0] - a[0];
    let aby = b[1] - a[1];
    let apx = x[0] - a[0];
    let apy = x[1] - a[1];
    let len2 = abx * abx + aby * aby;
    let t = if len2 > 0.0 {
        ((apx * abx + apy * aby) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let dx = apx - t * abx;
    let dy = apy - t * aby;
    (dx * dx + dy * dy).sqrt()
}

/// Separating-axis test on open interiors: touching polygons do not overlap.
fn polygons_overlap_open(p: &[Vec<f64>], q: &[Vec<f64>]) -> bool {
    let axes = |poly: &[Vec<f64>]| -> Vec<(f64, f64)> {
        let m = poly.len();
        (0..m)
            .map(|i| {
                let v = &poly[i];
                let w = &poly[(i + 1) % m];
                (w[1] - v[1], -(w[0] - v[0]))
            })
            .collect()
    };
    let project = |poly: &[Vec<f64>], ax: (f64, f64)| -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in poly {
            let s = v[0] * ax.0 + v[1] * ax.1;
            lo = lo.min(s);
            hi = hi.max(s);
        }
        (lo, hi)
    };
    for ax in axes(p).into_iter().chain(axes(q)) {
        let (alo, ahi) = project(p, ax);
        let (blo, bhi) = project(q, ax);
        if ahi <= blo + 1e-14 || bhi <= alo + 1e-14 {
            return false;
        }
    }
    true
}

/// Distance between two convex polygons (0 if they intersect or touch).
fn polygon_distance(p: &[Vec<f64>], q: &[Vec<f64>]) -> f64 {
    if polygons_overlap_open(p, q) {
        return 0.0;
    }
    let mut d = f64::INFINITY;
    let mp = p.len();
    let mq = q.len();
    for v in p {
        for i in 0..mq {
            d = d.min(point_segment_distance(v, &q[i], &q[(i + 1) % mq]));
        }
    }
    for v in q {
        for i in 0..mp {
            d = d.min(point_segment_distance(v, &p[i], &p[(i + 1) % mp]));
        }
    }
    d
}

// ---------------------------------------------------------------------------
// Maximum-volume inscribed ellipse (2D)
// ---------------------------------------------------------------------------

/// Solve the maximum-volume inscribed ellipse problem by a log-barrier
/// Newton path. The ellipse `{c + Lu : |u| ≤ 1}` with lower-triangular
/// `L = [[e^{u1}, 0], [l21, e^{u2}]]` is inscribed in `a_i·x ≤ b_i` iff
/// `a_i·c + ‖Lᵀa_i‖ ≤ b_i`; maximize `log det L = u1 + u2`.
fn inscribed_ellipse_2d(body: &ConvexBody) -> Result<Ellipsoid> {
    let planes = body.halfplanes();
    // Feasible start: vertex centroid, small disk.
    let c0 = body.centroid();
    let r0 = planes
        .iter()
        .map(|(a, b)| b - (a[0] * c0[0] + a[1] * c0[1]))
        .fold(f64::INFINITY, f64::min);
    if !(r0 > 0.0) {
        return Err(Error::DegenerateBody(
            "polygon has (near-)empty interior".into(),
        ));
    }
    // theta = [u1, l21, u2, cx, cy]
    let mut theta = [0.5 * r0, 0.0, 0.5 * r0, c0[0], c0[1]];
    theta[0] = theta[0].ln();
    theta[2] = theta[2].ln();

    let slacks = |th: &[f64; 5]| -> Vec<f64> {
        let (l11, l21, l22) = (th[0].exp(), th[1], th[2].exp());
        planes
            .iter()
            .map(|(a, b)| {
                let v1 = l11 * a[0] + l21 * a[1];
                let v2 = l22 * a[1];
                b - (a[0] * th[3] + a[1] * th[4]) - (v1 * v1 + v2 * v2).sqrt()
            })
            .collect()
    };
    let objective = |th: &[f64; 5], t: f64| -> f64 {
        let s = slacks(th);
        if s.iter().any(|&v| v <= 0.0) {
            return f64::NEG_INFINITY;
        }
        th[0] + th[2] + t * s.iter().map(|v| v.ln()).sum::<f64>()
    };
    // Analytic gradient and Hessian of the barrier objective
    // F(θ) = u1 + u2 + t Σ_i ln s_i. Per constraint, with
    // v1 = l11·a1 + l21·a2, v2 = l22·a2, ν = |v|, s = b − a·c − ν:
    //   ∂s = −∂ν − (0,0,0,a1,a2),   ∂ν = (v1 ∂v1 + v2 ∂v2)/ν,
    //   ∂²ν = (∂v1∂v1ᵀ + ∂v2∂v2ᵀ + v1 ∂²v1 + v2 ∂²v2)/ν − ∂ν∂νᵀ/ν.
    let grad_hess = |th: &[f64; 5], t: f64| -> ([f64; 5], DMatrix<f64>) {
        let (l11, l21, l22) = (th[0].exp(), th[1], th[2].exp());
        let mut g = [1.0, 0.0, 1.0, 0.0, 0.0];
        let mut hess = DMatrix::<f64>::zeros(5, 5);
        for (a, b) in &planes {
            let v1 = l11 * a[0] + l21 * a[1];
            let v2 = l22 * a[1];
            let norm = (v1 * v1 + v2 * v2).sqrt().max(1e-300);
            let s = b - (a[0] * th[3] + a[1] * th[4]) - norm;
            let d1 = [l11 * a[0], a[1], 0.0, 0.0, 0.0];
            let d2 = [0.0, 0.0, l22 * a[1], 0.0, 0.0];
            let dnu: Vec<f64> = (0..5).map(|k| (v1 * d1[k] + v2 * d2[k]) / norm).collect();
            let ds: Vec<f64> = (0..5)
                .map(|k| {
                    -dnu[k]
                        - match k {
                            3 => a[0],
                            4 => a[1],
                            _ => 0.0,
                        }
                })
                .collect();
            let w = t / s;
            for k in 0..5 {
                g[k] += w * ds[k];
            }
            // d²ν (only curvature terms v1·∂²v1 and v2·∂²v2 are nonzero
            // beyond the rank-one pieces; ∂²v1[0,0] = l11 a1, ∂²v2[2,2] =
            // l22 a2).
            for j in 0..5 {
                for k in 0..5 {
                    let mut d2nu = (d1[j] * d1[k] + d2[j] * d2[k]) / norm - dnu[j] * dnu[k] / norm;
                    if j == 0 && k == 0 {
                        d2nu += v1 * l11 * a[0] / norm;
                    }
                    if j == 2 && k == 2 {
                        d2nu += v2 * l22 * a[1] / norm;
                    }
                    // ∂²(ln s) = −∂s∂sᵀ/s² + ∂²s/s, with ∂²s = −∂²ν.
                    hess[(j, k)] += t * (-ds[j] * ds[k] / (s * s) - d2nu / s);
                }
            }
        }
        (g, hess)
    };

    let mut t = 1.0;
    while t > 1e-9 {
        // Damped Newton on the concave barrier objective.
        for _ in 0..80 {
            let (g, hess) = grad_hess(&theta, t);
            let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if gnorm < 1e-12 {
                break;
            }
            let gvec = DVector::from_row_slice(&g);
            // −H is positive definite near the central path.
            let neg_h = -hess;
            let step = neg_h
                .clone()
                .cholesky()
                .map(|ch| ch.solve(&gvec))
                .or_else(|| neg_h.lu().solve(&gvec))
                .filter(|d| d.dot(&gvec) > 0.0)
                .unwrap_or_else(|| gvec.clone() * (0.1 / (gnorm + 1.0)));
            let f0 = objective(&theta, t);
            let slope = step.dot(&gvec);
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let mut cand = theta;
                for k in 0..5 {
                    cand[k] += alpha * step[k];
                }
                if objective(&cand, t) > f0 + 1e-4 * alpha * slope {
                    theta = cand;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        t *= 0.1;
    }

    let (l11, l21, l22) = (theta[0].exp(), theta[1], theta[2].exp());
    // Shape A = (L Lᵀ)⁻¹.
    let l = DMatrix::from_row_slice(2, 2, &[l11, 0.0, l21, l22]);
    let sigma = &l * l.transpose();
    let shape = sigma
        .try_inverse()
        .ok_or_else(|| Error::DegenerateBody("inscribed ellipse collapsed".into()))?;
    Ok(Ellipsoid {
        center: vec![theta[3], theta[4]],
        shape: vec![shape[(0, 0)], shape[(0, 1)], shape[(1, 0)], shape[(1, 1)]],
    })
}

// ---------------------------------------------------------------------------
// Dyadic meshes
// ---------------------------------------------------------------------------

/// The mesh of dyadic subrectangles of a root rectangle: depth-`d` elements
/// have side lengths exactly `2^{-d}` times the root's and tile it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicMesh {
    pub root: RectBox,
    pub max_depth: u32,
}

impl DyadicMesh {
    pub fn new(root: RectBox, max_depth: u32) -> DyadicMesh {
        DyadicMesh { root, max_depth }
    }

    pub fn dim(&self) -> usize {
        self.root.dim()
    }
}

/// A mesh element, identified by its depth and per-axis index
/// (`0 ≤ idx[a] < 2^depth`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeshElement {
    pub depth: u32,
    pub idx: Vec<usize>,
}

impl MeshElement {
    pub fn root(dim: usize) -> MeshElement {
        MeshElement {
            depth: 0,
            idx: vec![0; dim],
        }
    }

    pub fn rect(&self, mesh: &DyadicMesh) -> RectBox {
        let scale = (self.depth as f64).exp2();
        let lo: Vec<f64> = self
            .idx
            .iter()
            .enumerate()
            .map(|(a, &i)| mesh.root.lo[a] + mesh.root.side(a) * i as f64 / scale)
            .collect();
        let hi: Vec<f64> = self
            .idx
            .iter()
            .enumerate()
            .map(|(a, &i)| mesh.root.lo[a] + mesh.root.side(a) * (i as f64 + 1.0) / scale)
            .collect();
        RectBox { lo, hi }
    }

    pub fn children(&self) -> Vec<MeshElement> {
        let n = self.idx.len();
        (0..(1usize << n))
            .map(|mask| MeshElement {
                depth: self.depth + 1,
                idx: (0..n)
                    .map(|a| 2 * self.idx[a] + ((mask >> a) & 1))
                    .collect(),
            })
            .collect()
    }

    pub fn parent(&self) -> Option<MeshElement> {
        if self.depth == 0 {
            return None;
        }
        Some(MeshElement {
            depth: self.depth - 1,
            idx: self.idx.iter().map(|&i| i / 2).collect(),
        })
    }
}

/// Ancestor `j` generations up; `j = 0` is the element itself.
pub fn ancestor(mesh: &DyadicMesh, element: &MeshElement, j: u32) -> Result<MeshElement> {
    let _ = mesh;
    if j > element.depth {
        return Err(Error::InvalidInput(format!(
            "ancestor {j} generations above a depth-{} element",
            element.depth
        )));
    }
    Ok(MeshElement {
        depth: element.depth - j,
        idx: element.idx.iter().map(|&i| i >> j).collect(),
    })
}

/// Corner dilation `c∗S`: the box sharing the corner that `S` shares with its
/// dyadic parent, with each side scaled by `c ≥ 1`. `corner_dilate(·, 2)` is
/// the parent.
pub fn corner_dilate(mesh: &DyadicMesh, element: &MeshElement, c: f64) -> Result<RectBox> {
    if element.depth == 0 {
        return Err(Error::InvalidInput(
            "the root shares no corner with a parent".into(),
        ));
    }
    if !(c >= 1.0) {
        return Err(Error::InvalidInput("corner dilation needs c >= 1".into()));
    }
    let rect = element.rect(mesh);
    let n = rect.dim();
    let mut lo = vec![0.0; n];
    let mut hi = vec![0.0; n];
    for a in 0..n {
        let side = rect.side(a) * c;
        if element.idx[a] % 2 == 0 {
            // Shares the low corner with the parent on this axis.
            lo[a] = rect.lo[a];
            hi[a] = rect.lo[a] + side;
        } else {
            hi[a] = rect.hi[a];
            lo[a] = rect.hi[a] - side;
        }
    }
    Ok(RectBox { lo, hi })
}

/// Locate a box as a mesh element (within a 1e-9 relative tolerance).
pub fn locate(mesh: &DyadicMesh, rect: &RectBox) -> Result<MeshElement> {
    for depth in 0..=mesh.max_depth {
        let scale = (depth as f64).exp2();
        let mut idx = Vec::with_capacity(rect.dim());
        let mut ok = true;
        for a in 0..rect.dim() {
            let side = mesh.root.side(a) / scale;
            let q = (rect.lo[a] - mesh.root.lo[a]) / side;
            let i = q.round();
            if (q - i).abs() > 1e-9
                || (rect.side(a) - side).abs() > 1e-9 * side
                || i < 0.0
                || i >= scale
            {
                ok = false;
                break;
            }
            idx.push(i as usize);
        }
        if ok {
            return Ok(MeshElement { depth, idx });
        }
    }
    Err(Error::InvalidInput(
        "box is not an element of the dyadic mesh".into(),
    ))
}

// ---------------------------------------------------------------------------
// Basis families
// ---------------------------------------------------------------------------

/// Which side lengths the rectangle kernels enumerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SideMode {
    /// Every integer cell count per axis: the exact grid supremum.
    All,
    /// Powers of two only; comparable to the exact supremum within the square
    /// of the doubling constant. Mandatory in 3D.
    Dyadic,
}

/// A homothecy-invariant basis family, discretized.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisKind {
    AxisRectangles,
    AxisCubes,
    ConvexShape(ConvexBody),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisFamily {
    pub kind: BasisKind,
    /// Scales applied to the generator (ConvexShape only); strictly
    /// decreasing, all positive.
    pub scale_grid: Vec<f64>,
    /// Translation lattice step in cells (ConvexShape only).
    pub translation_step_cells: usize,
    /// Side-length enumeration for rectangle/cube kernels.
    pub side_mode: SideMode,
}

impl BasisFamily {
    pub fn rectangles() -> BasisFamily {
        BasisFamily {
            kind: BasisKind::AxisRectangles,
            scale_grid: Vec::new(),
            translation_step_cells: 1,
            side_mode: SideMode::All,
        }
    }

    pub fn cubes() -> BasisFamily {
        BasisFamily {
            kind: BasisKind::AxisCubes,
            scale_grid: Vec::new(),
            translation_step_cells: 1,
            side_mode: SideMode::All,
        }
    }

    pub fn convex(
        generator: ConvexBody,
        scale_grid: Vec<f64>,
        step_cells: usize,
    ) -> Result<BasisFamily> {
        if scale_grid.is_empty()
            || scale_grid.windows(2).any(|w| w[0] <= w[1])
            || scale_grid.iter().any(|&s| !(s > 0.0))
        {
            return Err(Error::InvalidInput(
                "scale grid must be strictly decreasing and positive".into(),
            ));
        }
        Ok(BasisFamily {
            kind: BasisKind::ConvexShape(generator),
            scale_grid,
            translation_step_cells: step_cells.max(1),
            side_mode: SideMode::All,
        })
    }

    pub fn with_side_mode(mut self, mode: SideMode) -> BasisFamily {
        self.side_mode = mode;
        self
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            BasisKind::AxisRectangles => "axis_rectangles".into(),
            BasisKind::AxisCubes => "axis_cubes".into(),
            BasisKind::ConvexShape(b) => format!("convex_shape({} vertices)", b.vertices().len()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn square() -> ConvexBody {
        ConvexBody::new(vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
        ])
        .unwrap()
    }

    #[test]
    fn john_of_unit_square_is_inscribed_disk() {
        let e = square().john_ellipsoid().unwrap().clone();
        assert_relative_eq!(e.center[0], 0.5, epsilon = 1e-6);
        assert_relative_eq!(e.center[1], 0.5, epsilon = 1e-6);
        // semiaxes 0.5 <=> shape = 4 I
        assert_relative_eq!(e.shape[0], 4.0, epsilon = 1e-4);
        assert_relative_eq!(e.shape[3], 4.0, epsilon = 1e-4);
        assert!(e.shape[1].abs() < 1e-4);
    }

    #[test]
    fn john_of_regular_triangle_is_inscribed_disk() {
        use std::f64::consts::PI;
        let verts: Vec<Vec<f64>> = (0..3)
            .map(|k| {
                let t = PI / 2.0 + 2.0 * PI * k as f64 / 3.0;
                vec![t.cos(), t.sin()]
            })
            .collect();
        let tri = ConvexBody::new(verts).unwrap();
        let e = tri.john_ellipsoid().unwrap();
        assert!(e.center[0].abs() < 1e-6 && e.center[1].abs() < 1e-6);
        // inradius = circumradius / 2 = 0.5 <=> shape = 4 I
        assert_relative_eq!(e.shape[0], 4.0, epsilon = 1e-4);
        assert_relative_eq!(e.shape[3], 4.0, epsilon = 1e-4);
    }

    #[test]
    fn associated_rectangle_of_unit_square() {
        let r = associated_rectangle(&square()).unwrap();
        assert_relative_eq!(r.lo[0], -0.5, epsilon = 1e-6);
        assert_relative_eq!(r.hi[0], 1.5, epsilon = 1e-6);
        assert_relative_eq!(r.lo[1], -0.5, epsilon = 1e-6);
        assert_relative_eq!(r.hi[1], 1.5, epsilon = 1e-6);
    }

    #[test]
    fn associated_rectangle_of_disk_polygon() {
        // Polygon approximation of the unit disk: R_B ≈ square of side 4.
        use std::f64::consts::PI;
        let verts: Vec<Vec<f64>> = (0..64)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 64.0;
                vec![t.cos(), t.sin()]
            })
            .collect();
        let disk = ConvexBody::new(verts).unwrap();
        let r = associated_rectangle(&disk).unwrap();
        for a in 0..2 {
            assert!((r.side(a) - 4.0).abs() < 0.02, "side {}", r.side(a));
        }
    }

    #[test]
    fn dilate_about_john_composes() {
        let b = square();
        let d1 = b
            .dilate_about_john(1.5)
            .unwrap()
            .dilate_about_john(2.0)
            .unwrap();
        let d2 = b.dilate_about_john(3.0).unwrap();
        for (v, w) in d1.vertices().iter().zip(d2.vertices()) {
            for (a, b) in v.iter().zip(w) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn corner_dilate_matches_worked_example() {
        let mesh = DyadicMesh::new(RectBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap(), 4);
        let s = locate(
            &mesh,
            &RectBox::new(vec![0.5, 0.0], vec![1.0, 0.5]).unwrap(),
        )
        .unwrap();
        let d = corner_dilate(&mesh, &s, 1.5).unwrap();
        assert_relative_eq!(d.lo[0], 0.25, epsilon = 1e-12);
        assert_relative_eq!(d.hi[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(d.lo[1], 0.0, epsilon = 1e-12);
        assert_relative_eq!(d.hi[1], 0.75, epsilon = 1e-12);
        // c = 2 recovers the parent, c = 1 the element itself.
        let parent = corner_dilate(&mesh, &s, 2.0).unwrap();
        assert_eq!(parent, s.parent().unwrap().rect(&mesh));
        assert_eq!(corner_dilate(&mesh, &s, 1.0).unwrap(), s.rect(&mesh));
    }

    #[test]
    fn ancestor_of_depth_two_element() {
        let mesh = DyadicMesh::new(RectBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap(), 4);
        let e = locate(
            &mesh,
            &RectBox::new(vec![0.25, 0.0], vec![0.5, 0.25]).unwrap(),
        )
        .unwrap();
        let a1 = ancestor(&mesh, &e, 1).unwrap().rect(&mesh);
        assert_eq!(a1, RectBox::new(vec![0.0, 0.0], vec![0.5, 0.5]).unwrap());
        let a2 = ancestor(&mesh, &e, 2).unwrap().rect(&mesh);
        assert_eq!(a2, mesh.root);
        assert_eq!(ancestor(&mesh, &e, 0).unwrap(), e);
        assert!(ancestor(&mesh, &e, 3).is_err());
    }
}
