//! Transfinite lift of Dirichlet data from the boundary into the triangle.
//!
//! Through each interior point run three chords parallel to the edges. The
//! linear interpolants of the boundary data along them, `q_A`, `q_B` and
//! `q_C`, average to the data on the boundary up to an affine term, which is
//! subtracted.

use std::fmt;

use crate::basis::TrianglePoint;
use crate::error::{Error, Result};

/// Distance below which a point is treated as lying on a vertex or an edge.
pub const EDGE_EPS: f64 = 1e-10;

/// Largest disagreement tolerated between two edges meeting at a vertex.
pub const VERTEX_TOL: f64 = 1e-12;

type EdgeFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// Boundary data as three edge functions of the fraction `s ∈ [0, 1]`.
///
/// Edges run anticlockwise: bottom `(s, 0)`, hypotenuse `(1-s, s)`, left
/// `(0, 1-s)`.
pub struct BoundaryTrace {
    bottom: EdgeFn,
    hypotenuse: EdgeFn,
    left: EdgeFn,
    pub v00: f64,
    pub v10: f64,
    pub v01: f64,
}

impl fmt::Debug for BoundaryTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryTrace")
            .field("v00", &self.v00)
            .field("v10", &self.v10)
            .field("v01", &self.v01)
            .finish_non_exhaustive()
    }
}

fn check_vertex(vertex: &'static str, a: f64, b: f64) -> Result<()> {
    if (a - b).abs() > VERTEX_TOL || !a.is_finite() || !b.is_finite() {
        return Err(Error::TraceMismatch { vertex, a, b });
    }
    Ok(())
}

impl BoundaryTrace {
    pub fn from_edges(
        bottom: impl Fn(f64) -> f64 + Send + Sync + 'static,
        hypotenuse: impl Fn(f64) -> f64 + Send + Sync + 'static,
        left: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let (b0, b1) = (bottom(0.0), bottom(1.0));
        let (h0, h1) = (hypotenuse(0.0), hypotenuse(1.0));
        let (l0, l1) = (left(0.0), left(1.0));
        check_vertex("(0,0)", b0, l1)?;
        check_vertex("(1,0)", b1, h0)?;
        check_vertex("(0,1)", h1, l0)?;
        Ok(Self {
            bottom: Box::new(bottom),
            hypotenuse: Box::new(hypotenuse),
            left: Box::new(left),
            v00: b0,
            v10: b1,
            v01: h1,
        })
    }

    /// Restrict a function defined on the closed triangle to its boundary.
    pub fn from_ambient(
        f: impl Fn(f64, f64) -> f64 + Send + Sync + Clone + 'static,
    ) -> Result<Self> {
        let (f1, f2, f3) = (f.clone(), f.clone(), f);
        Self::from_edges(
            move |s| f1(s, 0.0),
            move |s| f2(1.0 - s, s),
            move |s| f3(0.0, 1.0 - s),
        )
    }

    /// `μ(x, 0)`.
    pub fn on_bottom(&self, x: f64) -> f64 {
        (self.bottom)(x)
    }

    /// `μ(1 - y, y)`.
    pub fn on_hypotenuse(&self, y: f64) -> f64 {
        (self.hypotenuse)(y)
    }

    /// `μ(0, y)`.
    pub fn on_left(&self, y: f64) -> f64 {
        (self.left)(1.0 - y)
    }

    /// Trace value at the boundary point nearest to `pt`.
    pub fn at(&self, pt: TrianglePoint) -> f64 {
        nearest_boundary_value(self, pt)
    }
}

/// The three chord interpolants at an interior point.
pub fn edge_interpolants(tr: &BoundaryTrace, pt: TrianglePoint) -> Result<(f64, f64, f64)> {
    if !pt.is_interior() {
        return Err(Error::Domain(format!(
            "chord interpolants need an interior point, got ({}, {})",
            pt.x, pt.y
        )));
    }
    let (x, y, z) = (pt.x, pt.y, pt.z());
    let (sx, sy, sxy) = (1.0 - x, 1.0 - y, x + y);
    let qa = z / sy * tr.on_left(y) + x / sy * tr.on_hypotenuse(y);
    let qb = z / sx * tr.on_bottom(x) + y / sx * tr.on_hypotenuse(sx);
    let qc = x / sxy * tr.on_bottom(sxy) + y / sxy * tr.on_left(sxy);
    Ok((qa, qb, qc))
}

fn nearest_boundary_value(tr: &BoundaryTrace, pt: TrianglePoint) -> f64 {
    let (x, y, z) = (pt.x, pt.y, pt.z());
    let dh = z / std::f64::consts::SQRT_2;
    if x.hypot(y) <= EDGE_EPS {
        return tr.v00;
    }
    if (1.0 - x).hypot(y) <= EDGE_EPS {
        return tr.v10;
    }
    if x.hypot(1.0 - y) <= EDGE_EPS {
        return tr.v01;
    }
    if y <= x.min(dh) {
        tr.on_bottom(x.clamp(0.0, 1.0))
    } else if x <= dh {
        tr.on_left(y.clamp(0.0, 1.0))
    } else {
        tr.on_hypotenuse((0.5 * (1.0 - x + y)).clamp(0.0, 1.0))
    }
}

/// The lifted value `μ(x, y)`; equals the trace on the boundary.
pub fn lift_mu(tr: &BoundaryTrace, x: f64, y: f64) -> Result<f64> {
    let pt = TrianglePoint::new(x, y)?;
    let dist = pt.x.min(pt.y).min(pt.z() / std::f64::consts::SQRT_2);
    if dist <= EDGE_EPS {
        return Ok(nearest_boundary_value(tr, pt));
    }
    let (qa, qb, qc) = edge_interpolants(tr, pt)?;
    let linear = pt.z() * tr.v00 + pt.x * tr.v10 + pt.y * tr.v01;
    Ok(0.5 * (qa + qb + qc - linear))
}

/// `f - μ`, which vanishes on the boundary when `f` has trace `tr`.
///
/// Points outside the triangle evaluate to NaN.
pub fn zero_bc_reduction<'a>(
    f: impl Fn(f64, f64) -> f64 + 'a,
    tr: &'a BoundaryTrace,
) -> impl Fn(f64, f64) -> f64 + 'a {
    move |x, y| match lift_mu(tr, x, y) {
        Ok(m) => f(x, y) - m,
        Err(_) => f64::NAN,
    }
}
