//! Reference triangle, weight, Koornwinder polynomials and W-functions.
//!
//! Basis members are ordered level-major: `(n, k)` sits at `n(n+1)/2 + k`.

use crate::error::{Error, Result};
use crate::special_fn::{jacobi_all, jacobi_deriv, jacobi_eval, shifted_norm, JacobiParams};

/// Distance within which points are snapped onto the triangle boundary.
pub const SNAP_TOL: f64 = 1e-12;

/// Weight exponents `(α, β, γ)` of `w = x^α y^β (1-x-y)^γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamTriple {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl ParamTriple {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !(ok(alpha) && ok(beta) && ok(gamma)) {
            return Err(Error::InvalidParams(format!(
                "alpha, beta, gamma must all be positive, got ({alpha}, {beta}, {gamma})"
            )));
        }
        Ok(Self { alpha, beta, gamma })
    }

    /// `β + γ`, which appears in nearly every radial exponent.
    #[inline]
    pub fn bg(&self) -> f64 {
        self.beta + self.gamma
    }

    /// Jacobi parameters of the radial factor at angular index `k`.
    #[inline]
    pub fn radial(&self, k: usize) -> JacobiParams {
        JacobiParams::raw(self.bg() + 2.0 * k as f64 + 1.0, self.alpha)
    }

    /// Jacobi parameters of the angular factor.
    #[inline]
    pub fn angular(&self) -> JacobiParams {
        JacobiParams::raw(self.gamma, self.beta)
    }
}

/// Basis label `(n, k)` with `0 ≤ k ≤ n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LevelIndex {
    pub n: usize,
    pub k: usize,
}

impl LevelIndex {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if k > n {
            return Err(Error::Domain(format!(
                "level index requires k <= n, got ({n}, {k})"
            )));
        }
        Ok(Self { n, k })
    }

    #[inline]
    pub fn linear(&self) -> usize {
        self.n * (self.n + 1) / 2 + self.k
    }

    pub fn from_linear(i: usize) -> Self {
        // largest n with n(n+1)/2 <= i
        let mut n = ((((8 * i + 1) as f64).sqrt() - 1.0) / 2.0) as usize;
        while n * (n + 1) / 2 > i {
            n -= 1;
        }
        while (n + 1) * (n + 2) / 2 <= i {
            n += 1;
        }
        Self {
            n,
            k: i - n * (n + 1) / 2,
        }
    }

    /// Iterate over every index of levels `0..=m` in linear order.
    pub fn all(m: usize) -> impl Iterator<Item = LevelIndex> {
        (0..=m).flat_map(|n| (0..=n).map(move |k| LevelIndex { n, k }))
    }
}

/// Number of basis members in levels `0..=m`.
#[inline]
pub fn dim(m: usize) -> usize {
    (m + 1) * (m + 2) / 2
}

/// A point of the reference triangle, snapped onto the boundary when within
/// [`SNAP_TOL`] of it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrianglePoint {
    pub x: f64,
    pub y: f64,
}

impl TrianglePoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::Domain(format!("non-finite point ({x}, {y})")));
        }
        let (mut x, mut y) = (x, y);
        if (-SNAP_TOL..0.0).contains(&x) {
            x = 0.0;
        }
        if (-SNAP_TOL..0.0).contains(&y) {
            y = 0.0;
        }
        let z = (1.0 - x) - y;
        if (-SNAP_TOL..0.0).contains(&z) {
            y = (1.0 - x).max(0.0);
            if y == 0.0 {
                x = 1.0;
            }
        }
        let pt = Self { x, y };
        if !pt.contains() {
            return Err(Error::Domain(format!(
                "point ({x}, {y}) lies outside the triangle"
            )));
        }
        Ok(pt)
    }

    /// Third barycentric coordinate `1 - x - y`.
    #[inline]
    pub fn z(&self) -> f64 {
        (1.0 - self.x) - self.y
    }

    pub fn contains(&self) -> bool {
        self.x >= 0.0 && self.y >= 0.0 && self.z() >= 0.0
    }

    pub fn is_interior(&self) -> bool {
        self.x > 0.0 && self.y > 0.0 && self.z() > 0.0
    }
}

/// A non-degenerate planar triangle with vertices mapped to `(0,0)`, `(1,0)`, `(0,1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralTriangle {
    pub v0: [f64; 2],
    pub v1: [f64; 2],
    pub v2: [f64; 2],
    det: f64,
}

impl GeneralTriangle {
    pub fn new(v0: [f64; 2], v1: [f64; 2], v2: [f64; 2]) -> Result<Self> {
        let e1 = [v1[0] - v0[0], v1[1] - v0[1]];
        let e2 = [v2[0] - v0[0], v2[1] - v0[1]];
        let det = e1[0] * e2[1] - e1[1] * e2[0];
        let scale = (e1[0].hypot(e1[1]) * e2[0].hypot(e2[1])).max(f64::MIN_POSITIVE);
        if !(det.abs() > 1e-14 * scale) {
            return Err(Error::Domain("triangle vertices are collinear".into()));
        }
        Ok(Self { v0, v1, v2, det })
    }

    /// Reference coordinates of a planar point (not restricted to the triangle).
    pub fn to_reference_coords(&self, q: [f64; 2]) -> (f64, f64) {
        let e1 = [self.v1[0] - self.v0[0], self.v1[1] - self.v0[1]];
        let e2 = [self.v2[0] - self.v0[0], self.v2[1] - self.v0[1]];
        let d = [q[0] - self.v0[0], q[1] - self.v0[1]];
        let x = (d[0] * e2[1] - d[1] * e2[0]) / self.det;
        let y = (e1[0] * d[1] - e1[1] * d[0]) / self.det;
        (x, y)
    }

    pub fn from_reference(&self, pt: TrianglePoint) -> [f64; 2] {
        let (x, y) = (pt.x, pt.y);
        [
            self.v0[0] + x * (self.v1[0] - self.v0[0]) + y * (self.v2[0] - self.v0[0]),
            self.v0[1] + x * (self.v1[1] - self.v0[1]) + y * (self.v2[1] - self.v0[1]),
        ]
    }
}

/// Affine image of `q` in the reference triangle.
pub fn affine_to_reference(tri: &GeneralTriangle, q: [f64; 2]) -> Result<TrianglePoint> {
    let (x, y) = tri.to_reference_coords(q);
    TrianglePoint::new(x, y)
}

/// Inverse of [`affine_to_reference`].
pub fn affine_from_reference(tri: &GeneralTriangle, pt: TrianglePoint) -> [f64; 2] {
    tri.from_reference(pt)
}

/// `w(x, y) = x^α y^β (1-x-y)^γ`.
pub fn weight(p: &ParamTriple, pt: TrianglePoint) -> f64 {
    pt.x.powf(p.alpha) * pt.y.powf(p.beta) * pt.z().powf(p.gamma)
}

/// Normalising constant making `p_{n,k}` orthonormal under `w` on the triangle.
pub fn r_norm(idx: LevelIndex, p: &ParamTriple) -> f64 {
    let hr = shifted_norm(idx.n - idx.k, p.radial(idx.k));
    let ha = shifted_norm(idx.k, p.angular());
    1.0 / (hr * ha).sqrt()
}

/// Orthonormal Koornwinder polynomial `p_{n,k}(x, y)`.
pub fn koornwinder_eval(idx: LevelIndex, p: &ParamTriple, pt: TrianglePoint) -> f64 {
    let (n, k) = (idx.n, idx.k);
    let r = r_norm(idx, p);
    let radial = jacobi_eval(n - k, p.radial(k), 2.0 * pt.x - 1.0);
    let s = 1.0 - pt.x;
    if s <= 0.0 {
        // vertex (1,0): the homogenised angular factor vanishes unless k = 0
        return if k == 0 { r * radial } else { 0.0 };
    }
    let t = pt.y / s;
    r * radial * s.powi(k as i32) * jacobi_eval(k, p.angular(), 2.0 * t - 1.0)
}

/// W-function `φ_{n,k} = √w · p_{n,k}`; exactly zero on the boundary.
pub fn wfun_eval(idx: LevelIndex, p: &ParamTriple, pt: TrianglePoint) -> f64 {
    if !pt.is_interior() {
        return 0.0;
    }
    weight(p, pt).sqrt() * koornwinder_eval(idx, p, pt)
}

/// Precomputed normalisation constants for all levels `0..=m`.
#[derive(Debug, Clone)]
pub struct BasisTable {
    pub params: ParamTriple,
    pub m: usize,
    pub r: Vec<f64>,
}

impl BasisTable {
    pub fn new(m: usize, params: ParamTriple) -> Self {
        let r = LevelIndex::all(m).map(|i| r_norm(i, &params)).collect();
        Self { params, m, r }
    }

    pub fn dim(&self) -> usize {
        dim(self.m)
    }

    /// All `p_{n,k}(pt)` for levels `0..=m`, in linear order.
    pub fn koornwinder_all(&self, pt: TrianglePoint, out: &mut [f64]) {
        let m = self.m;
        let p = &self.params;
        assert_eq!(out.len(), dim(m));
        let s = 1.0 - pt.x;
        let u = 2.0 * pt.x - 1.0;
        let mut ang = vec![0.0; m + 1];
        if s > 0.0 {
            jacobi_all(p.angular(), 2.0 * (pt.y / s) - 1.0, &mut ang);
        }
        let mut rad = vec![0.0; m + 1];
        let mut sk = 1.0;
        for k in 0..=m {
            let hom = if s > 0.0 {
                sk * ang[k]
            } else if k == 0 {
                1.0
            } else {
                0.0
            };
            jacobi_all(p.radial(k), u, &mut rad[..=m - k]);
            for n in k..=m {
                let i = n * (n + 1) / 2 + k;
                out[i] = self.r[i] * rad[n - k] * hom;
            }
            sk *= s;
        }
    }

    /// All `φ_{n,k}(pt)` for levels `0..=m`, in linear order.
    pub fn wfun_all(&self, pt: TrianglePoint, out: &mut [f64]) {
        if !pt.is_interior() {
            out.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        self.koornwinder_all(pt, out);
        let sw = weight(&self.params, pt).sqrt();
        out.iter_mut().for_each(|v| *v *= sw);
    }
}

/// Gradient of `p_{n,k}` at an interior point.
pub fn koornwinder_grad(idx: LevelIndex, p: &ParamTriple, pt: TrianglePoint) -> (f64, f64) {
    let (n, k) = (idx.n, idx.k);
    let r = r_norm(idx, p);
    let s = 1.0 - pt.x;
    let t = pt.y / s;
    let u = 2.0 * pt.x - 1.0;
    let v = 2.0 * t - 1.0;
    let a = jacobi_eval(n - k, p.radial(k), u);
    let da = 2.0 * jacobi_deriv(n - k, p.radial(k), u);
    let b = jacobi_eval(k, p.angular(), v);
    let db = 2.0 * jacobi_deriv(k, p.angular(), v);
    let kf = k as f64;
    let sk = s.powi(k as i32);
    let skm1 = if k == 0 { 0.0 } else { s.powi(k as i32 - 1) };
    // ∂t/∂x = t/s, ∂t/∂y = 1/s
    let dx = -kf * skm1 * a * b + sk * da * b + sk * a * db * t / s;
    let dy = sk * a * db / s;
    (r * dx, r * dy)
}

/// Gradient of `φ_{n,k}` at an interior point.
pub fn wfun_grad(idx: LevelIndex, p: &ParamTriple, pt: TrianglePoint) -> (f64, f64) {
    let sw = weight(p, pt).sqrt();
    let val = koornwinder_eval(idx, p, pt);
    let (gx, gy) = koornwinder_grad(idx, p, pt);
    let z = pt.z();
    let lx = 0.5 * (p.alpha / pt.x - p.gamma / z);
    let ly = 0.5 * (p.beta / pt.y - p.gamma / z);
    (sw * (gx + val * lx), sw * (gy + val * ly))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special_fn::{gauss_jacobi_unit, gauss_legendre_unit};

    fn pt(x: f64, y: f64) -> TrianglePoint {
        TrianglePoint::new(x, y).unwrap()
    }

    #[test]
    fn param_validation() {
        assert!(ParamTriple::new(1.0, 1.0, 1.0).is_ok());
        assert!(ParamTriple::new(0.0, 1.0, 1.0).is_err());
        assert!(ParamTriple::new(1.0, -0.5, 1.0).is_err());
    }

    #[test]
    fn linear_index_roundtrip() {
        let mut expect = 0;
        for n in 0..=50 {
            for k in 0..=n {
                let i = LevelIndex::new(n, k).unwrap();
                assert_eq!(i.linear(), expect);
                assert_eq!(LevelIndex::from_linear(expect), i);
                expect += 1;
            }
        }
        assert_eq!(expect, dim(50));
        assert!(LevelIndex::new(2, 3).is_err());
    }

    #[test]
    fn weight_examples() {
        let p2 = ParamTriple::new(2.0, 2.0, 2.0).unwrap();
        let c = pt(1.0 / 3.0, 1.0 / 3.0);
        assert!((weight(&p2, c) - 3f64.powi(-6)).abs() < 1e-17);
        assert_eq!(weight(&p2, pt(0.0, 0.4)), 0.0);
        let p1 = ParamTriple::new(1.0, 1.0, 1.0).unwrap();
        assert!((weight(&p1, pt(0.25, 0.25)) - 1.0 / 32.0).abs() < 1e-17);
        assert!(TrianglePoint::new(0.7, 0.5).is_err());
    }

    #[test]
    fn snapping() {
        let q = TrianglePoint::new(-1e-13, 0.5).unwrap();
        assert_eq!(q.x, 0.0);
        let q = TrianglePoint::new(0.6, 0.4 + 5e-13).unwrap();
        assert_eq!(q.z(), 0.0);
        assert!(!q.is_interior());
        assert!(TrianglePoint::new(-1e-9, 0.5).is_err());
    }

    #[test]
    fn r_norm_composition() {
        let p = ParamTriple::new(1.0, 1.0, 1.0).unwrap();
        let r = r_norm(LevelIndex::new(0, 0).unwrap(), &p);
        let want = 1.0
            / (shifted_norm(0, JacobiParams::raw(3.0, 1.0))
                * shifted_norm(0, JacobiParams::raw(1.0, 1.0)))
            .sqrt();
        assert!((r - want).abs() < 1e-15 * want);
        let r55 = r_norm(
            LevelIndex::new(5, 5).unwrap(),
            &ParamTriple::new(1.0, 2.0, 3.0).unwrap(),
        );
        assert!(r55.is_finite() && r55 > 0.0);
    }

    /// Gram matrix of `p_{n,k}` under `w`, via a Duffy product rule with
    /// the weight absorbed into Gauss–Jacobi factors.
    fn weighted_gram(m: usize, p: &ParamTriple) -> Vec<Vec<f64>> {
        let nq = m + 4;
        // x: (1-x)^{β+γ+1} x^α ; t: (1-t)^γ t^β
        let rx = gauss_jacobi_unit(nq, p.bg() + 1.0, p.alpha);
        let rt = gauss_jacobi_unit(nq, p.gamma, p.beta);
        let bt = BasisTable::new(m, *p);
        let d = dim(m);
        let mut g = vec![vec![0.0; d]; d];
        let mut v = vec![0.0; d];
        for (&x, &wx) in rx.nodes.iter().zip(&rx.weights) {
            for (&t, &wt) in rt.nodes.iter().zip(&rt.weights) {
                bt.koornwinder_all(pt(x, (1.0 - x) * t), &mut v);
                for i in 0..d {
                    for j in 0..d {
                        g[i][j] += wx * wt * v[i] * v[j];
                    }
                }
            }
        }
        g
    }

    #[test]
    fn koornwinder_orthonormal() {
        for p in [
            ParamTriple::new(1.0, 1.0, 1.0).unwrap(),
            ParamTriple::new(2.0, 2.0, 2.0).unwrap(),
            ParamTriple::new(0.5, 1.5, 2.5).unwrap(),
        ] {
            let g = weighted_gram(4, &p);
            for (i, row) in g.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((v - want).abs() < 1e-10, "{i} {j} {v}");
                }
            }
        }
    }

    #[test]
    fn wfun_orthonormal_plain_l2() {
        // plain tensor Gauss–Legendre on the Duffy square; the √w edge
        // singularity limits accuracy, so integer exponents keep it exact
        let p = ParamTriple::new(2.0, 2.0, 2.0).unwrap();
        let m = 5;
        let gl = gauss_legendre_unit(24);
        let bt = BasisTable::new(m, p);
        let d = dim(m);
        let mut g = vec![vec![0.0; d]; d];
        let mut v = vec![0.0; d];
        for (&x, &wx) in gl.nodes.iter().zip(&gl.weights) {
            for (&t, &wt) in gl.nodes.iter().zip(&gl.weights) {
                bt.wfun_all(pt(x, (1.0 - x) * t), &mut v);
                let w = wx * wt * (1.0 - x);
                for i in 0..d {
                    for j in 0..d {
                        g[i][j] += w * v[i] * v[j];
                    }
                }
            }
        }
        for i in 0..d {
            for j in 0..d {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g[i][j] - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn eval_examples() {
        let p2 = ParamTriple::new(2.0, 2.0, 2.0).unwrap();
        let i00 = LevelIndex::new(0, 0).unwrap();
        let r00 = r_norm(i00, &p2);
        assert!((koornwinder_eval(i00, &p2, pt(0.3, 0.1)) - r00).abs() < 1e-15 * r00);
        let c = pt(1.0 / 3.0, 1.0 / 3.0);
        assert!((wfun_eval(i00, &p2, c) - r00 / 27.0).abs() < 1e-15 * r00);

        let i11 = LevelIndex::new(1, 1).unwrap();
        let u: f64 = 2.0 * 0.375 - 1.0;
        let p1 = (2.0 + 2.0 + 2.0) * u / 2.0;
        let want = r_norm(i11, &p2) * 0.8 * p1;
        let got = koornwinder_eval(i11, &p2, pt(0.2, 0.3));
        assert!((got - want).abs() < 1e-14 * want.abs());

        for idx in LevelIndex::all(4) {
            for q in [pt(0.0, 0.3), pt(0.4, 0.0), pt(0.5, 0.5), pt(1.0, 0.0)] {
                assert_eq!(wfun_eval(idx, &p2, q), 0.0);
            }
        }
    }

    #[test]
    fn vertex_limit() {
        let p = ParamTriple::new(1.0, 2.0, 1.5).unwrap();
        let v = pt(1.0, 0.0);
        for idx in LevelIndex::all(5) {
            let near = pt(1.0 - 1e-9, 0.0);
            let a = koornwinder_eval(idx, &p, v);
            let b = koornwinder_eval(idx, &p, near);
            let scale = r_norm(idx, &p) * jacobi_eval(idx.n - idx.k, p.radial(idx.k), 1.0).abs();
            assert!((a - b).abs() <= 1e-6 * scale, "{idx:?} {a} {b}");
        }
    }

    #[test]
    fn batch_matches_single() {
        let p = ParamTriple::new(1.0, 2.0, 3.0).unwrap();
        let bt = BasisTable::new(6, p);
        let q = pt(0.21, 0.47);
        let mut v = vec![0.0; bt.dim()];
        bt.koornwinder_all(q, &mut v);
        for idx in LevelIndex::all(6) {
            let s = koornwinder_eval(idx, &p, q);
            assert!((v[idx.linear()] - s).abs() <= 1e-13 * s.abs().max(1.0));
        }
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let p = ParamTriple::new(1.5, 2.0, 2.5).unwrap();
        let h = 1e-6;
        for idx in LevelIndex::all(4) {
            let (x, y) = (0.27, 0.33);
            let (gx, gy) = wfun_grad(idx, &p, pt(x, y));
            let fx =
                (wfun_eval(idx, &p, pt(x + h, y)) - wfun_eval(idx, &p, pt(x - h, y))) / (2.0 * h);
            let fy =
                (wfun_eval(idx, &p, pt(x, y + h)) - wfun_eval(idx, &p, pt(x, y - h))) / (2.0 * h);
            assert!(
                (gx - fx).abs() < 1e-6 * fx.abs().max(1.0),
                "{idx:?} {gx} {fx}"
            );
            assert!(
                (gy - fy).abs() < 1e-6 * fy.abs().max(1.0),
                "{idx:?} {gy} {fy}"
            );
        }
    }

    #[test]
    fn affine_maps() {
        let refr = GeneralTriangle::new([0.0, 0.0], [1.0, 0.0], [0.0, 1.0]).unwrap();
        let q = affine_to_reference(&refr, [0.3, 0.5]).unwrap();
        assert_eq!((q.x, q.y), (0.3, 0.5));
        let tri = GeneralTriangle::new([1.0, 1.0], [3.0, 1.0], [1.0, 4.0]).unwrap();
        let v1 = affine_to_reference(&tri, [3.0, 1.0]).unwrap();
        assert!((v1.x - 1.0).abs() < 1e-15 && v1.y.abs() < 1e-15);
        let c = affine_to_reference(&tri, [5.0 / 3.0, 2.0]).unwrap();
        assert!((c.x - 1.0 / 3.0).abs() < 1e-15 && (c.y - 1.0 / 3.0).abs() < 1e-15);
        assert!(GeneralTriangle::new([0.0, 0.0], [1.0, 1.0], [2.0, 2.0]).is_err());
    }
}
