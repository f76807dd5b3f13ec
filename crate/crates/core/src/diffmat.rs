//! Truncated differentiation matrices `X` (for `∂/∂x`) and `Y` (for `∂/∂y`).
//!
//! Entry `((m,ℓ),(n,k))` is `⟨∂φ_{n,k}, φ_{m,ℓ}⟩`. Only blocks with `m > n`
//! are computed; the diagonal blocks are zero and the upper part is the
//! negated mirror, so the assembled matrices are exactly skew-symmetric.

use std::io::Write;

use nalgebra::DMatrix;

use crate::basis::{
    dim, koornwinder_eval, koornwinder_grad, r_norm, LevelIndex, ParamTriple, TrianglePoint,
};
use crate::coupling::{build_itilde, recurrence_ladders, ItildeTable, SCache};
use crate::error::{Error, Result};
use crate::fast_apply::{apply_x, apply_y, CoeffVector, FEFactors, OpCounter, YFactors};
use crate::special_fn::{gauss_jacobi_unit, shifted_norm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Which {
    X,
    Y,
}

impl Which {
    pub fn name(&self) -> &'static str {
        match self {
            Which::X => "X",
            Which::Y => "Y",
        }
    }
}

/// Structured form used by the fast matvec.
#[derive(Debug, Clone)]
pub enum Structured {
    X(FEFactors),
    Y(YFactors),
}

/// A truncated differentiation matrix held dense and in factored form.
#[derive(Debug, Clone)]
pub struct DiffOperator {
    pub which: Which,
    pub m: usize,
    pub params: ParamTriple,
    pub dense: DMatrix<f64>,
    pub structured: Structured,
}

impl DiffOperator {
    pub fn dim(&self) -> usize {
        dim(self.m)
    }

    /// Fast product through the factored form.
    pub fn apply(&self, v: &CoeffVector, ctr: &mut OpCounter) -> Result<CoeffVector> {
        match &self.structured {
            Structured::X(f) => apply_x(f, v, ctr),
            Structured::Y(f) => apply_y(f, v, ctr),
        }
    }

    /// Plain dense product.
    pub fn apply_dense(&self, v: &CoeffVector) -> Result<CoeffVector> {
        dense_matvec(&self.dense, v)
    }

    /// `max |A + Aᵀ|`.
    pub fn skew_residual(&self) -> f64 {
        skew_residual(&self.dense)
    }
}

pub fn dense_matvec(a: &DMatrix<f64>, v: &CoeffVector) -> Result<CoeffVector> {
    if a.ncols() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            got: v.len(),
        });
    }
    let mut out = vec![0.0; a.nrows()];
    for (j, &vj) in v.data.iter().enumerate() {
        if vj == 0.0 {
            continue;
        }
        for (o, &aij) in out.iter_mut().zip(a.column(j).iter()) {
            *o += aij * vj;
        }
    }
    CoeffVector::from_vec(v.m, out)
}

pub fn skew_residual(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut r: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            r = r.max((a[(i, j)] + a[(j, i)]).abs());
        }
    }
    r
}

/// Coupling tables shared by both operators.
#[derive(Debug, Clone)]
pub struct Tables {
    pub itilde: ItildeTable,
    pub cache: SCache,
}

impl Tables {
    pub fn new(m: usize, p: &ParamTriple) -> Self {
        Self {
            itilde: build_itilde(m, p),
            cache: recurrence_ladders(m, p),
        }
    }

    /// Reuse a prebuilt `Ĩ` table (for example one loaded from disk).
    pub fn with_itilde(itilde: ItildeTable) -> Self {
        let cache = recurrence_ladders(itilde.m, &itilde.params);
        Self { itilde, cache }
    }
}

fn assemble_dense(which: Which, tables: &Tables) -> DMatrix<f64> {
    let t = &tables.itilde;
    let c = &tables.cache;
    let p = t.params;
    let m_max = t.m;
    let d = dim(m_max);
    let r: Vec<f64> = LevelIndex::all(m_max).map(|i| r_norm(i, &p)).collect();
    let hk: Vec<f64> = (0..=m_max).map(|k| shifted_norm(k, p.angular())).collect();
    let mut a = DMatrix::<f64>::zeros(d, d);
    for m in 1..=m_max {
        for l in 0..=m {
            let row = m * (m + 1) / 2 + l;
            for n in 0..m {
                // Ĩ vanishes for ℓ < k below the block diagonal
                for k in 0..=n.min(l) {
                    let col = n * (n + 1) / 2 + k;
                    let it = t.get(m, l, n, k);
                    let inner = match which {
                        Which::X => {
                            let f = if l == k {
                                p.alpha * hk[k] * c.i_diag(m, n, k)
                            } else {
                                0.0
                            };
                            f - p.gamma * c.s(l, k) * it
                        }
                        Which::Y => (p.beta * c.s_tilde(l, k) - p.gamma * c.s(l, k)) * it,
                    };
                    let v = 0.5 * r[row] * r[col] * inner;
                    a[(row, col)] = v;
                    a[(col, row)] = -v;
                }
            }
        }
    }
    a
}

/// Assemble one operator from prebuilt tables.
pub fn assemble_with(which: Which, tables: &Tables) -> DiffOperator {
    let p = tables.itilde.params;
    let m = tables.itilde.m;
    let dense = assemble_dense(which, tables);
    let structured = match which {
        Which::X => Structured::X(FEFactors::new(m, &p)),
        Which::Y => Structured::Y(YFactors::new(m, &p)),
    };
    DiffOperator {
        which,
        m,
        params: p,
        dense,
        structured,
    }
}

pub fn assemble_x(m: usize, p: &ParamTriple) -> DiffOperator {
    assemble_with(Which::X, &Tables::new(m, p))
}

pub fn assemble_y(m: usize, p: &ParamTriple) -> DiffOperator {
    assemble_with(Which::Y, &Tables::new(m, p))
}

/// Quadrature-assembled operator together with an error estimate.
#[derive(Debug, Clone)]
pub struct OracleMatrix {
    pub matrix: DMatrix<f64>,
    pub error: f64,
}

/// Duffy product rules with the singular endpoint powers absorbed.
struct OracleRules {
    /// rule for the half-weight-derivative term
    half: (crate::special_fn::GaussRule, crate::special_fn::GaussRule),
    /// rule for the `w ∂p · p` term
    full: (crate::special_fn::GaussRule, crate::special_fn::GaussRule),
}

fn oracle_rules(which: Which, p: &ParamTriple, nq: usize) -> OracleRules {
    let (a, b, g) = (p.alpha, p.beta, p.gamma);
    let bg = p.bg();
    let half = match which {
        // x^{α-1}(1-x)^{β+γ}, t^β (1-t)^{γ-1}
        Which::X => (
            gauss_jacobi_unit(nq, bg, a - 1.0),
            gauss_jacobi_unit(nq, g - 1.0, b),
        ),
        // x^α (1-x)^{β+γ}, t^{β-1} (1-t)^{γ-1}
        Which::Y => (
            gauss_jacobi_unit(nq, bg, a),
            gauss_jacobi_unit(nq, g - 1.0, b - 1.0),
        ),
    };
    // w·(1-x) in Duffy variables: x^α (1-x)^{β+γ+1}, t^β (1-t)^γ
    let full = (
        gauss_jacobi_unit(nq, bg + 1.0, a),
        gauss_jacobi_unit(nq, g, b),
    );
    OracleRules { half, full }
}

fn oracle_pass(which: Which, m_max: usize, p: &ParamTriple, nq: usize) -> DMatrix<f64> {
    let d = dim(m_max);
    let rules = oracle_rules(which, p, nq);
    let idx: Vec<LevelIndex> = LevelIndex::all(m_max).collect();
    let mut a = DMatrix::<f64>::zeros(d, d);
    let mut vals = vec![0.0; d];
    let mut der = vec![0.0; d];

    // ½ ∫ ∂w p_{n,k} p_{m,ℓ}
    let (rx, rt) = &rules.half;
    for (&x, &wx) in rx.nodes.iter().zip(&rx.weights) {
        for (&t, &wt) in rt.nodes.iter().zip(&rt.weights) {
            let pt = TrianglePoint {
                x,
                y: (1.0 - x) * t,
            };
            let poly = match which {
                Which::X => p.alpha * (1.0 - x) * (1.0 - t) - p.gamma * x,
                Which::Y => p.beta * (1.0 - t) - p.gamma * t,
            };
            let w = 0.5 * wx * wt * poly;
            for (v, i) in vals.iter_mut().zip(&idx) {
                *v = koornwinder_eval(*i, p, pt);
            }
            for i in 0..d {
                for j in 0..d {
                    a[(i, j)] += w * vals[i] * vals[j];
                }
            }
        }
    }
    // ∫ w ∂p_{n,k} p_{m,ℓ}
    let (rx, rt) = &rules.full;
    for (&x, &wx) in rx.nodes.iter().zip(&rx.weights) {
        for (&t, &wt) in rt.nodes.iter().zip(&rt.weights) {
            let pt = TrianglePoint {
                x,
                y: (1.0 - x) * t,
            };
            let w = wx * wt;
            for (n, i) in idx.iter().enumerate() {
                vals[n] = koornwinder_eval(*i, p, pt);
                let (gx, gy) = koornwinder_grad(*i, p, pt);
                der[n] = if which == Which::X { gx } else { gy };
            }
            for i in 0..d {
                for j in 0..d {
                    a[(i, j)] += w * vals[i] * der[j];
                }
            }
        }
    }
    a
}

/// Assemble `X` or `Y` directly by triangle quadrature of
/// `⟨∂φ_{n,k}, φ_{m,ℓ}⟩ = ½∫ ∂w p_{n,k} p_{m,ℓ} + ∫ w ∂p_{n,k} p_{m,ℓ}`,
/// for every entry, without using skewness.
pub fn oracle_assemble(which: Which, m_max: usize, p: &ParamTriple) -> Result<OracleMatrix> {
    let nq = m_max + 4;
    let a1 = oracle_pass(which, m_max, p, nq);
    let a2 = oracle_pass(which, m_max, p, nq + 4);
    let error = (&a1 - &a2).amax();
    let scale = a2.amax().max(1.0);
    if error > 1e-10 * scale {
        return Err(Error::Quadrature { achieved: error });
    }
    Ok(OracleMatrix { matrix: a2, error })
}

/// Largest entrywise deviation of `a` from `oracle`, relative to the oracle
/// entry where the oracle resolves it.
pub fn max_rel_deviation(a: &DMatrix<f64>, oracle: &OracleMatrix) -> f64 {
    // Entries below the oracle's own resolution are structural zeros in noise;
    // those are measured against the largest entry instead.
    let resolve = 100.0 * oracle.error.max(f64::EPSILON * oracle.matrix.amax());
    let amax = oracle.matrix.amax().max(resolve).max(f64::MIN_POSITIVE);
    a.iter()
        .zip(oracle.matrix.iter())
        .map(|(x, y)| {
            let d = (x - y).abs();
            if y.abs() <= resolve {
                d / amax
            } else {
                d / y.abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Write nonzero entries as `row col value` lines, 0-based, 17 significant digits.
pub fn write_coords<W: Write>(a: &DMatrix<f64>, mut w: W) -> std::io::Result<()> {
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let v = a[(i, j)];
            if v != 0.0 {
                writeln!(w, "{i} {j} {v:.16e}")?;
            }
        }
    }
    Ok(())
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn vec_strategy(m: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-1.0f64..1.0, dim(m))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn fast_apply_linear_and_skew(
            a in 0.5f64..4.0, b in 0.5f64..4.0, g in 0.5f64..4.0,
            u in vec_strategy(9), v in vec_strategy(9), s in -3.0f64..3.0,
        ) {
            let p = ParamTriple::new(a, b, g).unwrap();
            let t = Tables::new(9, &p);
            for which in [Which::X, Which::Y] {
                let op = assemble_with(which, &t);
                let mut c = OpCounter::default();
                let u = CoeffVector::from_vec(9, u.clone()).unwrap();
                let v = CoeffVector::from_vec(9, v.clone()).unwrap();
                let mut w = u.clone();
                w.axpy(s, &v);
                let (au, av, aw) = (op.apply(&u, &mut c).unwrap(), op.apply(&v, &mut c).unwrap(), op.apply(&w, &mut c).unwrap());
                let scale = op.dense.amax() * (1.0 + s.abs()) * dim(9) as f64;
                for i in 0..dim(9) {
                    prop_assert!((aw.data[i] - au.data[i] - s * av.data[i]).abs() <= 1e-13 * scale);
                }
                // uᵀ A v = -vᵀ A u
                prop_assert!((u.dot(&av) + v.dot(&au)).abs() <= 1e-12 * scale);
            }
        }
    }
}
