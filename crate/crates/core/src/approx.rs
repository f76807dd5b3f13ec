//! Triangle quadrature, projection onto the W-system and error diagnostics.

use std::fmt::Debug;
use std::io::Write;

use crate::basis::{dim, weight, BasisTable, ParamTriple, TrianglePoint};
use crate::error::{Error, Result};
use crate::fast_apply::CoeffVector;
use crate::special_fn::gauss_legendre_unit;

/// Product rule on the triangle obtained from the Duffy map `y = (1-x) t`.
#[derive(Debug, Clone)]
pub struct TriangleQuadrature {
    pub nodes: Vec<TrianglePoint>,
    pub weights: Vec<f64>,
    /// Total degree integrated exactly.
    pub order: usize,
}

impl TriangleQuadrature {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(TrianglePoint) -> f64) -> f64 {
        let terms: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&pt, &w)| w * f(pt))
            .collect();
        pairwise_sum(&terms)
    }
}

/// Tensor Gauss–Legendre rule with `n1` nodes in `x` and `n2` in `t`.
pub fn duffy_quadrature(n1: usize, n2: usize) -> Result<TriangleQuadrature> {
    if n1 == 0 || n2 == 0 {
        return Err(Error::InvalidParams(format!(
            "quadrature needs at least one node, got {n1}x{n2}"
        )));
    }
    let gx = gauss_legendre_unit(n1);
    let gt = gauss_legendre_unit(n2);
    let mut nodes = Vec::with_capacity(n1 * n2);
    let mut weights = Vec::with_capacity(n1 * n2);
    for (&x, &wx) in gx.nodes.iter().zip(&gx.weights) {
        let s = 1.0 - x;
        for (&t, &wt) in gt.nodes.iter().zip(&gt.weights) {
            nodes.push(TrianglePoint { x, y: s * t });
            weights.push(wx * wt * s);
        }
    }
    let order = (2 * n1 - 2).min(2 * n2 - 1);
    Ok(TriangleQuadrature {
        nodes,
        weights,
        order,
    })
}

/// Sum with `O(log n)` error growth and a fixed association order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// A family the expansion is carried out in.
///
/// `values` gives the series functions; the projection integrand is
/// `f · values · projection_weight`.
pub trait ExpansionBasis: Debug + Sync {
    fn name(&self) -> &'static str;
    fn values(&self, table: &BasisTable, pt: TrianglePoint, out: &mut [f64]);
    fn projection_weight(&self, p: &ParamTriple, pt: TrianglePoint) -> f64;
}

/// `φ_{n,k} = √w p_{n,k}`, orthonormal in plain `L²`.
#[derive(Debug, Clone, Copy)]
pub struct WSystem;

/// Orthonormal polynomials `p_{n,k}` under the weight `w`.
#[derive(Debug, Clone, Copy)]
pub struct Koornwinder;

impl ExpansionBasis for WSystem {
    fn name(&self) -> &'static str {
        "wsystem"
    }
    fn values(&self, table: &BasisTable, pt: TrianglePoint, out: &mut [f64]) {
        table.wfun_all(pt, out)
    }
    fn projection_weight(&self, _: &ParamTriple, _: TrianglePoint) -> f64 {
        1.0
    }
}

impl ExpansionBasis for Koornwinder {
    fn name(&self) -> &'static str {
        "koornwinder"
    }
    fn values(&self, table: &BasisTable, pt: TrianglePoint, out: &mut [f64]) {
        table.koornwinder_all(pt, out)
    }
    fn projection_weight(&self, p: &ParamTriple, pt: TrianglePoint) -> f64 {
        weight(p, pt)
    }
}

static EXPANSION_BASES: [&dyn ExpansionBasis; 2] = [&WSystem, &Koornwinder];

/// Look up an expansion family by name.
pub fn expansion_basis(name: &str) -> Option<&'static dyn ExpansionBasis> {
    EXPANSION_BASES.iter().copied().find(|b| b.name() == name)
}

pub fn expansion_basis_names() -> Vec<&'static str> {
    EXPANSION_BASES.iter().map(|b| b.name()).collect()
}

#[derive(Debug, Clone)]
pub struct ExpansionResult {
    pub coeffs: CoeffVector,
    pub params: ParamTriple,
    pub nmax: usize,
    pub basis: &'static dyn ExpansionBasis,
}

impl ExpansionResult {
    /// Keep the first `n` coefficients in level-major order, zero the rest.
    pub fn truncated(&self, n: usize) -> Self {
        let mut out = self.clone();
        out.coeffs.data.iter_mut().skip(n).for_each(|c| *c = 0.0);
        out
    }
}

/// Project `f` onto the W-system up to level `nmax`.
pub fn expand(
    f: impl Fn(f64, f64) -> f64,
    nmax: usize,
    p: &ParamTriple,
    quad: &TriangleQuadrature,
) -> Result<ExpansionResult> {
    expand_in(&WSystem, f, nmax, p, quad)
}

/// Project `f` onto the plain Koornwinder polynomials up to level `nmax`.
pub fn expand_polynomial(
    f: impl Fn(f64, f64) -> f64,
    nmax: usize,
    p: &ParamTriple,
    quad: &TriangleQuadrature,
) -> Result<ExpansionResult> {
    expand_in(&Koornwinder, f, nmax, p, quad)
}

pub fn expand_in(
    basis: &'static dyn ExpansionBasis,
    f: impl Fn(f64, f64) -> f64,
    nmax: usize,
    p: &ParamTriple,
    quad: &TriangleQuadrature,
) -> Result<ExpansionResult> {
    let d = dim(nmax);
    let q = quad.len();
    let table = BasisTable::new(nmax, *p);
    // products laid out coefficient-major so each row sums contiguously
    let mut prod = vec![0.0; d * q];
    let mut vals = vec![0.0; d];
    for (j, (&pt, &w)) in quad.nodes.iter().zip(&quad.weights).enumerate() {
        let fv = f(pt.x, pt.y);
        if !fv.is_finite() {
            return Err(Error::NonFinite {
                x: pt.x,
                y: pt.y,
                value: fv,
            });
        }
        basis.values(&table, pt, &mut vals);
        let s = w * fv * basis.projection_weight(p, pt);
        for (i, v) in vals.iter().enumerate() {
            prod[i * q + j] = s * v;
        }
    }
    let data = prod.chunks(q.max(1)).take(d).map(pairwise_sum).collect();
    Ok(ExpansionResult {
        coeffs: CoeffVector { m: nmax, data },
        params: *p,
        nmax,
        basis,
    })
}

/// Value of the partial sum at `(x, y)`.
pub fn evaluate_series(res: &ExpansionResult, x: f64, y: f64) -> Result<f64> {
    let pt = TrianglePoint::new(x, y)?;
    let table = BasisTable::new(res.nmax, res.params);
    let mut vals = vec![0.0; table.dim()];
    res.basis.values(&table, pt, &mut vals);
    Ok(vals.iter().zip(&res.coeffs.data).map(|(a, b)| a * b).sum())
}

/// The cosine grid `x_i = ½(1 - cos iπ/M)`, `y_j` likewise, `j ≤ M - i`.
pub fn cosine_grid(m_grid: usize) -> Result<Vec<TrianglePoint>> {
    if m_grid == 0 {
        return Err(Error::InvalidParams(
            "grid parameter must be at least 1".into(),
        ));
    }
    let c = |i: usize| 0.5 * (1.0 - (i as f64 * std::f64::consts::PI / m_grid as f64).cos());
    let mut pts = Vec::new();
    for i in 0..=m_grid {
        for j in 0..=m_grid - i {
            pts.push(TrianglePoint::new(c(i), c(j))?);
        }
    }
    Ok(pts)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointError {
    pub x: f64,
    pub y: f64,
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub e_inf: f64,
    pub e_2: f64,
    pub m_grid: usize,
    pub points: Vec<PointError>,
}

/// Discrete max and unweighted `ℓ²` errors of the series on the cosine grid.
pub fn error_report(
    f: impl Fn(f64, f64) -> f64,
    res: &ExpansionResult,
    m_grid: usize,
) -> Result<ErrorReport> {
    let table = BasisTable::new(res.nmax, res.params);
    let mut vals = vec![0.0; table.dim()];
    let mut points = Vec::new();
    for pt in cosine_grid(m_grid)? {
        res.basis.values(&table, pt, &mut vals);
        let g: f64 = vals.iter().zip(&res.coeffs.data).map(|(a, b)| a * b).sum();
        points.push(PointError {
            x: pt.x,
            y: pt.y,
            error: f(pt.x, pt.y) - g,
        });
    }
    let e_inf = points.iter().map(|p| p.error.abs()).fold(0.0, f64::max);
    let e_2 = points.iter().map(|p| p.error * p.error).sum::<f64>().sqrt();
    Ok(ErrorReport {
        e_inf,
        e_2,
        m_grid,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    /// Number of retained coefficients, 1-based.
    pub n: usize,
    pub coef_abs: f64,
    pub e_inf: f64,
    pub e_2: f64,
}

/// Grid errors of every prefix truncation `N = 1..=D` of `res`.
pub fn convergence_table(
    f: impl Fn(f64, f64) -> f64,
    res: &ExpansionResult,
    m_grid: usize,
) -> Result<Vec<ConvergenceRow>> {
    let grid = cosine_grid(m_grid)?;
    let table = BasisTable::new(res.nmax, res.params);
    let d = table.dim();
    let mut basis_vals = vec![0.0; d * grid.len()];
    let mut resid = Vec::with_capacity(grid.len());
    for (g, &pt) in grid.iter().enumerate() {
        res.basis
            .values(&table, pt, &mut basis_vals[g * d..(g + 1) * d]);
        resid.push(f(pt.x, pt.y));
    }
    let mut rows = Vec::with_capacity(d);
    for (i, &c) in res.coeffs.data.iter().enumerate() {
        for (g, r) in resid.iter_mut().enumerate() {
            *r -= c * basis_vals[g * d + i];
        }
        rows.push(ConvergenceRow {
            n: i + 1,
            coef_abs: c.abs(),
            e_inf: resid.iter().map(|r| r.abs()).fold(0.0, f64::max),
            e_2: resid.iter().map(|r| r * r).sum::<f64>().sqrt(),
        });
    }
    Ok(rows)
}

pub const CONVERGENCE_HEADER: &str = "N,coef_abs,e_inf,e_2";

pub fn write_convergence_csv<W: Write>(rows: &[ConvergenceRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{CONVERGENCE_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{:.16e},{:.16e},{:.16e}",
            r.n, r.coef_abs, r.e_inf, r.e_2
        )?;
    }
    Ok(())
}

/// Window used by [`decay_rate`].
pub const DECAY_WINDOW: usize = 15;

/// Threshold on [`decay_rate`] at or above which decay is not spectral.
pub const NON_SPECTRAL_RATE: f64 = 0.9;

/// Geometric decay rate `ρ` of `|f_N| ≈ C ρ^N`, fitted by least squares to
/// `ln |f_N|` over the last `window` nonzero coefficients.
pub fn decay_rate(coeffs: &[f64], window: usize) -> f64 {
    let pts: Vec<(f64, f64)> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(i, c)| ((i + 1) as f64, c.abs().ln()))
        .collect();
    let pts = &pts[pts.len().saturating_sub(window)..];
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxy / sxx).exp()
}

/// `|f_N| · N^power` for `N = 1..`.
pub fn scaled_coefficients(coeffs: &[f64], power: i32) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| c.abs() * ((i + 1) as f64).powi(power))
        .collect()
}
