//! Structured matrix–vector products with `X = F - E` and `Y`.
//!
//! `F` couples only equal angular indices and factors as `a_{m,k} b_{n,k}`
//! below the block diagonal, so two running sums per column give `F v`.
//! `E` and `Y` are diagonal scalings of the strictly lower part of `Ĩ`,
//! applied by sweeping the `(m, ℓ)` recursion level by level; their upper
//! parts are the transposes, applied by the adjoint sweep.
//!
//! Operation counts are tallied separately for multiplies, adds and fused
//! multiply–adds.

use crate::basis::{dim, LevelIndex, ParamTriple};
use crate::coupling::{itilde_diag_closed, recursion_coeffs};
use crate::error::{Error, Result};
use crate::special_fn::{gamma_ratio, shifted_norm};

/// Expansion coefficients over levels `0..=M`, block `m` holding `m + 1` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVector {
    pub m: usize,
    pub data: Vec<f64>,
}

impl CoeffVector {
    pub fn zeros(m: usize) -> Self {
        Self {
            m,
            data: vec![0.0; dim(m)],
        }
    }

    pub fn from_vec(m: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim(m) {
            return Err(Error::DimensionMismatch {
                expected: dim(m),
                got: data.len(),
            });
        }
        Ok(Self { m, data })
    }

    /// Unit vector at `idx`.
    pub fn unit(m: usize, idx: LevelIndex) -> Self {
        let mut v = Self::zeros(m);
        v.data[idx.linear()] = 1.0;
        v
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn block(&self, m: usize) -> &[f64] {
        let s = m * (m + 1) / 2;
        &self.data[s..s + m + 1]
    }

    pub fn block_mut(&mut self, m: usize) -> &mut [f64] {
        let s = m * (m + 1) / 2;
        &mut self.data[s..s + m + 1]
    }

    pub fn norm2(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Self) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }
}

/// Tally of arithmetic performed by one or more applies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounter {
    pub mul: u64,
    pub add: u64,
    pub fma: u64,
}

impl OpCounter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Operations with a fused multiply–add counted once.
    pub fn ops(&self) -> u64 {
        self.mul + self.add + self.fma
    }

    /// Classic flops, a fused multiply–add counted as two.
    pub fn flops(&self) -> u64 {
        self.mul + self.add + 2 * self.fma
    }

    pub fn reset(&mut self) {
        *self = Self::default();
    }
}

/// Diagonal scalings `R`, `C` of `Ĩ` folded into the coefficients of the
/// level recursion, so that the sweep computes `diag(R) Ĩ_low diag(C) v`.
#[derive(Debug, Clone)]
pub struct LowerSweep {
    m: usize,
    qc: Vec<f64>,
    d1c: Vec<f64>,
    d2c: Vec<f64>,
    a0: Vec<f64>,
    b0: Vec<f64>,
    delta: Vec<f64>,
}

impl LowerSweep {
    /// `r_scale` and `c_scale` are indexed linearly over levels `0..=m`.
    pub fn new(m: usize, p: &ParamTriple, r_scale: &[f64], c_scale: &[f64]) -> Self {
        let d = dim(m);
        let bg = p.bg();
        let lin = |n: usize, k: usize| n * (n + 1) / 2 + k;
        let mut qc = vec![0.0; d];
        let mut d1c = vec![0.0; d];
        let mut d2c = vec![0.0; d];
        let mut delta = vec![0.0; d];
        let mut a0 = vec![0.0; m + 1];
        let mut b0 = vec![0.0; m + 1];
        for n in 0..=m {
            let nf = n as f64;
            // Ĩ_{(m,0),(n,0)} = b̃(n) ã(m), m > n
            b0[n] = gamma_ratio(bg + nf + 2.0, nf + 1.0) / (bg + 1.0) * c_scale[lin(n, 0)];
            a0[n] = gamma_ratio(p.alpha + nf + 1.0, p.alpha + bg + nf + 2.0) * r_scale[lin(n, 0)];
            for l in 0..=n {
                let i = lin(n, l);
                delta[i] = r_scale[i] * itilde_diag_closed(n, l, p) * c_scale[i];
                if l >= 1 {
                    let (q, d1, d2) = recursion_coeffs(n, l, p);
                    if l < n {
                        qc[i] = q * r_scale[i] / r_scale[lin(n - 1, l)];
                    }
                    d1c[i] = d1 * r_scale[i] / r_scale[lin(n - 1, l - 1)];
                    d2c[i] = d2 * r_scale[i] / r_scale[lin(n, l - 1)];
                }
            }
        }
        Self {
            m,
            qc,
            d1c,
            d2c,
            a0,
            b0,
            delta,
        }
    }

    /// Diagonal of `diag(R) Ĩ diag(C)` on the block diagonal.
    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    /// Forward sweep. Writes the strictly lower product into `lower` and, when
    /// `with_diag` is set, adds the block-diagonal contribution.
    fn forward(&self, v: &[f64], out: &mut [f64], with_diag: bool, ctr: &mut OpCounter) {
        let m_max = self.m;
        out[0] = 0.0;
        let mut run = 0.0;
        let mut pbuf = vec![0.0; m_max + 1];
        let (mut nmul, mut nfma) = (0u64, 0u64);
        for m in 1..=m_max {
            let prev = (m - 1) * m / 2;
            let cur = m * (m + 1) / 2;
            // lower + diagonal sum at level m-1
            for l in 0..m {
                pbuf[l] = self.delta[prev + l].mul_add(v[prev + l], out[prev + l]);
            }
            nfma += m as u64;
            if with_diag {
                out[prev..cur].copy_from_slice(&pbuf[..m]);
            }
            run = self.b0[m - 1].mul_add(v[prev], run);
            out[cur] = self.a0[m] * run;
            nfma += 1;
            nmul += 1;
            for l in 1..m {
                let i = cur + l;
                let t = self.qc[i] * pbuf[l];
                let t = self.d1c[i].mul_add(pbuf[l - 1], t);
                out[i] = (-self.d2c[i]).mul_add(out[i - 1], t);
            }
            let i = cur + m;
            let t = self.d1c[i] * pbuf[m - 1];
            out[i] = (-self.d2c[i]).mul_add(out[i - 1], t);
            nmul += m as u64;
            nfma += (2 * (m - 1) + 1) as u64;
        }
        if with_diag {
            let top = m_max * (m_max + 1) / 2;
            for l in 0..=m_max {
                out[top + l] = self.delta[top + l].mul_add(v[top + l], out[top + l]);
            }
            nfma += (m_max + 1) as u64;
        }
        ctr.mul += nmul;
        ctr.fma += nfma;
    }

    /// Adjoint of the strictly lower sweep: `out = (diag(R) Ĩ_low diag(C))ᵀ v`.
    fn transpose(&self, v: &[f64], out: &mut [f64], ctr: &mut OpCounter) {
        let m_max = self.m;
        let mut xbar = v.to_vec();
        let mut pbar = vec![0.0; m_max + 1];
        let mut runbar = 0.0;
        out.iter_mut().for_each(|o| *o = 0.0);
        let (mut nmul, mut nadd, mut nfma) = (0u64, 0u64, 0u64);
        for m in (1..=m_max).rev() {
            let prev = (m - 1) * m / 2;
            let cur = m * (m + 1) / 2;
            // ℓ = m: only the d1 and d2 terms are live
            let i = cur + m;
            pbar[m - 1] = self.d1c[i] * xbar[i];
            xbar[i - 1] = (-self.d2c[i]).mul_add(xbar[i], xbar[i - 1]);
            for l in (1..m).rev() {
                let i = cur + l;
                pbar[l] = self.qc[i].mul_add(xbar[i], pbar[l]);
                pbar[l - 1] = self.d1c[i] * xbar[i];
                xbar[i - 1] = (-self.d2c[i]).mul_add(xbar[i], xbar[i - 1]);
            }
            nmul += m as u64;
            nfma += (1 + 2 * (m - 1)) as u64;
            runbar = self.a0[m].mul_add(xbar[cur], runbar);
            out[prev] = self.b0[m - 1] * runbar;
            nfma += 1;
            nmul += 1;
            for l in 0..m {
                xbar[prev + l] += pbar[l];
                out[prev + l] = self.delta[prev + l].mul_add(pbar[l], out[prev + l]);
            }
            nadd += m as u64;
            nfma += m as u64;
        }
        ctr.mul += nmul;
        ctr.add += nadd;
        ctr.fma += nfma;
    }

    /// `(L - Lᵀ) v`, plus the block diagonal of `L` when `with_diag` is set.
    fn apply_skew(&self, v: &[f64], out: &mut [f64], with_diag: bool, ctr: &mut OpCounter) {
        let mut up = vec![0.0; v.len()];
        self.forward(v, out, with_diag, ctr);
        self.transpose(v, &mut up, ctr);
        for (o, u) in out.iter_mut().zip(&up) {
            *o -= u;
        }
        ctr.add += v.len() as u64;
    }
}

/// Factors for the structured application of `X = F - E`.
#[derive(Debug, Clone)]
pub struct FEFactors {
    pub m: usize,
    pub params: ParamTriple,
    /// `a_{m,k}`, linear index.
    pub fa: Vec<f64>,
    /// `b_{n,k}`, linear index.
    pub fb: Vec<f64>,
    pub e: LowerSweep,
}

impl FEFactors {
    pub fn new(m: usize, p: &ParamTriple) -> Self {
        let d = dim(m);
        let bg = p.bg();
        let al = p.alpha;
        let mut fa = vec![0.0; d];
        let mut fb = vec![0.0; d];
        let mut re = vec![0.0; d];
        let mut ce = vec![0.0; d];
        for idx in LevelIndex::all(m) {
            let (n, k) = (idx.n, idx.k);
            let i = idx.linear();
            let r = crate::basis::r_norm(idx, p);
            let sg = if n % 2 == 0 { 1.0 } else { -1.0 };
            let (nf, kf) = (n as f64, k as f64);
            let hk = shifted_norm(k, p.angular());
            fa[i] = r * sg * gamma_ratio(bg + nf + kf + 2.0, al + bg + nf + kf + 2.0) * hk / 2.0;
            fb[i] = r * sg * gamma_ratio(al + nf - kf + 1.0, nf - kf + 1.0);
            // S_{ℓ,k} = s1(k) s2(ℓ) for ℓ ≥ k
            let s1 = gamma_ratio(p.gamma + kf + 1.0, kf + 1.0) / p.gamma;
            let s2 = gamma_ratio(p.beta + kf + 1.0, bg + kf + 1.0);
            re[i] = r * s2;
            ce[i] = 0.5 * p.gamma * r * s1;
        }
        let e = LowerSweep::new(m, p, &re, &ce);
        Self {
            m,
            params: *p,
            fa,
            fb,
            e,
        }
    }
}

/// Factors for the structured application of `Y`.
#[derive(Debug, Clone)]
pub struct YFactors {
    pub m: usize,
    pub params: ParamTriple,
    pub t: LowerSweep,
    pub s: LowerSweep,
}

impl YFactors {
    pub fn new(m: usize, p: &ParamTriple) -> Self {
        let d = dim(m);
        let bg = p.bg();
        let (mut rt, mut ct, mut rs, mut cs) =
            (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
        for idx in LevelIndex::all(m) {
            let k = idx.k;
            let i = idx.linear();
            let r = crate::basis::r_norm(idx, p);
            let kf = k as f64;
            let sg = if k % 2 == 0 { 1.0 } else { -1.0 };
            // β S̃_{ℓ,k} = [(-1)^ℓ Γ(γ+ℓ+1)/Γ(B+ℓ+1)] [(-1)^k Γ(β+k+1)/k!]
            rt[i] = r * sg * gamma_ratio(p.gamma + kf + 1.0, bg + kf + 1.0);
            ct[i] = 0.5 * r * sg * gamma_ratio(p.beta + kf + 1.0, kf + 1.0);
            rs[i] = r * gamma_ratio(p.beta + kf + 1.0, bg + kf + 1.0);
            cs[i] = 0.5 * r * gamma_ratio(p.gamma + kf + 1.0, kf + 1.0);
        }
        Self {
            m,
            params: *p,
            t: LowerSweep::new(m, p, &rt, &ct),
            s: LowerSweep::new(m, p, &rs, &cs),
        }
    }
}

fn check_dim(m: usize, v: &CoeffVector) -> Result<()> {
    if v.m != m || v.data.len() != dim(m) {
        return Err(Error::DimensionMismatch {
            expected: dim(m),
            got: v.data.len(),
        });
    }
    Ok(())
}

fn f_inner(fac: &FEFactors, v: &[f64], with_diag: bool, out: &mut [f64], ctr: &mut OpCounter) {
    let m_max = fac.m;
    let (fa, fb) = (&fac.fa, &fac.fb);
    // ρ_{m,k} = Σ_{n>m} a_{n,k} v_{n,k}, built downwards
    let mut rho = vec![0.0; dim(m_max)];
    let mut acc = vec![0.0; m_max + 1];
    for m in (0..m_max).rev() {
        let up = (m + 1) * (m + 2) / 2;
        let cur = m * (m + 1) / 2;
        for k in 0..=m {
            acc[k] = fa[up + k].mul_add(v[up + k], acc[k]);
            rho[cur + k] = acc[k];
        }
        ctr.fma += (m + 1) as u64;
    }
    // σ_{m,k} = Σ_{k≤n≤m} b_{n,k} v_{n,k}, built upwards
    let mut sigma = vec![0.0; m_max + 1];
    for m in 0..=m_max {
        let cur = m * (m + 1) / 2;
        for k in 0..=m {
            let i = cur + k;
            if with_diag {
                sigma[k] = fb[i].mul_add(v[i], sigma[k]);
                out[i] = (-fb[i]).mul_add(rho[i], fa[i] * sigma[k]);
            } else {
                out[i] = (-fb[i]).mul_add(rho[i], fa[i] * sigma[k]);
                sigma[k] = fb[i].mul_add(v[i], sigma[k]);
            }
        }
        ctr.fma += 2 * (m + 1) as u64;
        ctr.mul += (m + 1) as u64;
    }
}

/// `F v`, including the block diagonal shared with `E`.
pub fn apply_f(fac: &FEFactors, v: &CoeffVector, ctr: &mut OpCounter) -> Result<CoeffVector> {
    check_dim(fac.m, v)?;
    let mut out = CoeffVector::zeros(fac.m);
    f_inner(fac, &v.data, true, &mut out.data, ctr);
    Ok(out)
}

/// `E v`, including the block diagonal shared with `F`.
pub fn apply_e(fac: &FEFactors, v: &CoeffVector, ctr: &mut OpCounter) -> Result<CoeffVector> {
    check_dim(fac.m, v)?;
    let mut out = CoeffVector::zeros(fac.m);
    fac.e.apply_skew(&v.data, &mut out.data, true, ctr);
    Ok(out)
}

/// `X v = F v - E v`; the shared block diagonal is omitted from both terms.
pub fn apply_x(fac: &FEFactors, v: &CoeffVector, ctr: &mut OpCounter) -> Result<CoeffVector> {
    check_dim(fac.m, v)?;
    let mut out = CoeffVector::zeros(fac.m);
    let mut e = vec![0.0; out.len()];
    f_inner(fac, &v.data, false, &mut out.data, ctr);
    fac.e.apply_skew(&v.data, &mut e, false, ctr);
    for (o, ev) in out.data.iter_mut().zip(&e) {
        *o -= ev;
    }
    ctr.add += e.len() as u64;
    Ok(out)
}

/// `Y v`.
pub fn apply_y(fac: &YFactors, v: &CoeffVector, ctr: &mut OpCounter) -> Result<CoeffVector> {
    check_dim(fac.m, v)?;
    let mut out = CoeffVector::zeros(fac.m);
    let mut s = vec![0.0; out.len()];
    fac.t.apply_skew(&v.data, &mut out.data, false, ctr);
    fac.s.apply_skew(&v.data, &mut s, false, ctr);
    for (o, sv) in out.data.iter_mut().zip(&s) {
        *o -= sv;
    }
    ctr.add += s.len() as u64;
    Ok(out)
}
