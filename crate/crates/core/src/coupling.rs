//! One-dimensional coupling integrals `S`, `S̃`, `I` and `Ĩ`.
//!
//! With `B = β + γ`:
//!
//! * `S_{ℓ,k}  = ∫ (1-y)^{γ-1} y^β     P_ℓ^{(γ,β)} P_k^{(γ,β)} dy`
//! * `S̃_{ℓ,k}  = ∫ (1-y)^γ     y^{β-1} P_ℓ^{(γ,β)} P_k^{(γ,β)} dy`
//! * `I_{(m-ℓ,ℓ),(n-k,k)} = ∫ (1-x)^{k+ℓ+B+1} x^{α-1} P_{m-ℓ}^{(B+2ℓ+1,α)} P_{n-k}^{(B+2k+1,α)} dx`
//! * `Ĩ_{(m-ℓ,ℓ),(n-k,k)} = ∫ (1-x)^{k+ℓ+B}   x^α     P_{m-ℓ}^{(B+2ℓ+1,α)} P_{n-k}^{(B+2k+1,α)} dx`
//!
//! all over `[0, 1]` with Jacobi arguments `2y-1`, `2x-1`. `S`, `S̃` and the
//! `ℓ = k` slice of `I` have closed forms. `Ĩ` is filled by a three-term
//! recursion in `(m, ℓ)` for each fixed column `(n, k)`.

use std::io::{Read, Write};
use std::path::Path;

use crate::basis::{LevelIndex, ParamTriple};
use crate::error::{Error, Result};
use crate::special_fn::{
    beta_unchecked, gamma_ratio, gauss_jacobi_unit, jacobi_eval, shift_coeffs, shifted_norm,
    JacobiParams,
};

/// Version byte of the binary table format.
pub const TABLE_VERSION: u8 = 1;

fn check_pos(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {v}")))
    }
}

#[inline]
fn sign(e: usize) -> f64 {
    if e.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `S^{γ,β}_{ℓ,k}`.
pub fn s_value(l: usize, k: usize, gamma: f64, beta: f64) -> Result<f64> {
    check_pos("gamma", gamma)?;
    check_pos("beta", beta)?;
    Ok(s_raw(l, k, gamma, beta))
}

fn s_raw(l: usize, k: usize, gamma: f64, beta: f64) -> f64 {
    let (l, k) = if l >= k { (l, k) } else { (k, l) };
    let (lf, kf) = (l as f64, k as f64);
    gamma_ratio(gamma + kf + 1.0, kf + 1.0) / gamma
        * gamma_ratio(beta + lf + 1.0, beta + gamma + lf + 1.0)
}

/// `S̃^{γ,β}_{ℓ,k} = (-1)^{ℓ+k} S^{β,γ}_{ℓ,k}`.
pub fn s_tilde_value(l: usize, k: usize, gamma: f64, beta: f64) -> Result<f64> {
    check_pos("gamma", gamma)?;
    check_pos("beta", beta)?;
    Ok(s_tilde_raw(l, k, gamma, beta))
}

fn s_tilde_raw(l: usize, k: usize, gamma: f64, beta: f64) -> f64 {
    sign(l + k) * s_raw(l, k, beta, gamma)
}

/// `I_{(m-k,k),(n-k,k)}`, the only slice of `I` the operators need.
pub fn i_diag_value(m: usize, n: usize, k: usize, p: &ParamTriple) -> Result<f64> {
    if k > m.min(n) {
        return Err(Error::Domain(format!(
            "i_diag_value needs k <= min(m, n), got ({m}, {n}, {k})"
        )));
    }
    Ok(i_diag_raw(m, n, k, p))
}

fn i_diag_raw(m: usize, n: usize, k: usize, p: &ParamTriple) -> f64 {
    let (m, n) = if m >= n { (m, n) } else { (n, m) };
    let a = p.alpha;
    let b = p.bg();
    let nk = (n - k) as f64;
    let mk = (m + k) as f64;
    sign(n + m) * gamma_ratio(a + nk + 1.0, nk + 1.0) / a
        * gamma_ratio(b + mk + 2.0, a + b + mk + 2.0)
}

/// Diagonal of `Ĩ` in closed form, from the cancellation `α ĥ_k I = γ S_{k,k} Ĩ`.
pub fn itilde_diag_closed(m: usize, k: usize, p: &ParamTriple) -> f64 {
    p.alpha * shifted_norm(k, p.angular()) * i_diag_raw(m, m, k, p)
        / (p.gamma * s_raw(k, k, p.gamma, p.beta))
}

/// `Ĩ_{(m,0),(n,0)}` for `m ≥ n`.
fn itilde_row0_seed(m: usize, n: usize, p: &ParamTriple) -> f64 {
    let b = p.bg();
    let (mf, nf) = (m as f64, n as f64);
    gamma_ratio(b + nf + 2.0, nf + 1.0) / (b + 1.0)
        * gamma_ratio(p.alpha + mf + 1.0, p.alpha + b + mf + 2.0)
}

/// `Ĩ_{(0,0),(n-k,k)}`.
pub fn itilde_first_row(n: usize, k: usize, p: &ParamTriple) -> f64 {
    let b = p.bg();
    let (nf, kf) = (n as f64, k as f64);
    let nk = nf - kf;
    // n! Γ(B+k+1) Γ(α+n-k+1) / ((n-k)! k! Γ(α+B+n+2))
    gamma_ratio(nf + 1.0, nk + 1.0)
        * gamma_ratio(b + kf + 1.0, kf + 1.0)
        * gamma_ratio(p.alpha + nk + 1.0, p.alpha + b + nf + 2.0)
}

/// Coefficients `(q, d1, d2)` of the `(m, ℓ)` recursion
/// `Ĩ(m,ℓ) = q Ĩ(m-1,ℓ) + d1 Ĩ(m-1,ℓ-1) - d2 Ĩ(m,ℓ-1)`, valid for `ℓ ≥ 1`.
#[inline]
pub fn recursion_coeffs(m: usize, l: usize, p: &ParamTriple) -> (f64, f64, f64) {
    debug_assert!(l >= 1 && l <= m);
    let a = p.bg() + 2.0 * l as f64 - 1.0;
    let c = shift_coeffs(m - l, JacobiParams::raw(a, p.alpha));
    (c.c_nab, 0.5 * c.d_nab * c.a_nab, 0.5 * c.d_nab * c.b_nab)
}

/// Tables of `S`, `S̃` and the `ℓ = k` slice of `I`, filled by ladders
/// from their Beta-function seeds.
#[derive(Debug, Clone)]
pub struct SCache {
    pub params: ParamTriple,
    pub m: usize,
    s: Vec<f64>,
    st: Vec<f64>,
    /// `i[m][n][k]` for `m ≥ n ≥ k`, flattened.
    i: Vec<f64>,
}

#[inline]
fn tri3(m: usize, n: usize, k: usize) -> usize {
    // offset of (m, n, k) with m >= n >= k
    let off_m = m * (m + 1) * (m + 2) / 6;
    off_m + n * (n + 1) / 2 + k
}

impl SCache {
    #[inline]
    pub fn s(&self, l: usize, k: usize) -> f64 {
        self.s[l * (self.m + 1) + k]
    }

    #[inline]
    pub fn s_tilde(&self, l: usize, k: usize) -> f64 {
        self.st[l * (self.m + 1) + k]
    }

    /// `I_{(m-k,k),(n-k,k)}`, symmetric in `m, n`.
    #[inline]
    pub fn i_diag(&self, m: usize, n: usize, k: usize) -> f64 {
        let (m, n) = if m >= n { (m, n) } else { (n, m) };
        self.i[tri3(m, n, k)]
    }
}

/// Fill an [`SCache`] up to level `m` using only the ladder recurrences.
pub fn recurrence_ladders(m: usize, p: &ParamTriple) -> SCache {
    let (a, b, g) = (p.alpha, p.beta, p.gamma);
    let bg = b + g;
    let w = m + 1;
    let mut s = vec![0.0; w * w];
    let mut st = vec![0.0; w * w];

    s[0] = beta_unchecked(b + 1.0, g);
    st[0] = beta_unchecked(b, g + 1.0);
    for l in 1..=m {
        let lf = l as f64;
        s[l * w] = (b + lf) / (bg + lf) * s[(l - 1) * w];
        st[l * w] = -(g + lf) / (bg + lf) * st[(l - 1) * w];
    }
    for l in 0..=m {
        for k in 1..=l {
            let kf = k as f64;
            s[l * w + k] = (g + kf) / kf * s[l * w + k - 1];
            st[l * w + k] = -(b + kf) / kf * st[l * w + k - 1];
        }
        for k in 0..l {
            s[k * w + l] = s[l * w + k];
            st[k * w + l] = st[l * w + k];
        }
    }

    let mut i = vec![0.0; tri3(m + 1, 0, 0)];
    i[0] = beta_unchecked(a, bg + 2.0);
    for mm in 1..=m {
        let mf = mm as f64;
        i[tri3(mm, 0, 0)] = -(bg + mf + 1.0) / (a + bg + mf + 1.0) * i[tri3(mm - 1, 0, 0)];
    }
    for mm in 0..=m {
        for n in 1..=mm {
            let nf = n as f64;
            i[tri3(mm, n, 0)] = -(a + nf) / nf * i[tri3(mm, n - 1, 0)];
        }
        for n in 0..=mm {
            for k in 1..=n {
                let nk = (n - k) as f64;
                let mk = (mm + k) as f64;
                let f = (nk + 1.0) * (bg + mk + 1.0) / ((a + nk + 1.0) * (a + bg + mk + 1.0));
                i[tri3(mm, n, k)] = f * i[tri3(mm, n, k - 1)];
            }
        }
    }
    SCache {
        params: *p,
        m,
        s,
        st,
        i,
    }
}

/// `Ĩ` for all index pairs up to level `M`.
///
/// Stored as one panel per column `(n, k)`, holding rows `m = n..=M` with
/// `ℓ = 0..=m`. Entries with `m < n` are read through symmetry.
#[derive(Debug, Clone)]
pub struct ItildeTable {
    pub params: ParamTriple,
    pub m: usize,
    pool: Vec<f64>,
    offsets: Vec<usize>,
}

impl ItildeTable {
    fn layout(m: usize) -> (Vec<usize>, usize) {
        let mut offsets = Vec::with_capacity((m + 1) * (m + 2) / 2);
        let mut off = 0;
        for n in 0..=m {
            // rows n..=M, row j has j+1 entries
            let size = (m + 1) * (m + 2) / 2 - n * (n + 1) / 2;
            for _ in 0..=n {
                offsets.push(off);
                off += size;
            }
        }
        (offsets, off)
    }

    #[inline]
    fn slot(&self, m: usize, l: usize, n: usize, k: usize) -> usize {
        // row m of panel (n,k) starts after rows n..m-1
        self.offsets[n * (n + 1) / 2 + k] + m * (m + 1) / 2 - n * (n + 1) / 2 + l
    }

    /// `Ĩ_{(m-ℓ,ℓ),(n-k,k)}`; zero when `ℓ > m` or `k > n`.
    #[inline]
    pub fn get(&self, m: usize, l: usize, n: usize, k: usize) -> f64 {
        if l > m || k > n {
            return 0.0;
        }
        if m >= n {
            self.pool[self.slot(m, l, n, k)]
        } else {
            self.pool[self.slot(n, k, m, l)]
        }
    }

    pub fn len(&self) -> usize {
        self.pool.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pool.is_empty()
    }

    /// Write the table in the binary cache format.
    pub fn dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&(self.m as f64).to_le_bytes())?;
        for v in [self.params.alpha, self.params.beta, self.params.gamma] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&[TABLE_VERSION])?;
        for v in &self.pool {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Read a table written by [`ItildeTable::dump`].
    pub fn load<R: Read>(mut r: R) -> Result<Self> {
        let mut hdr = [0u8; 33];
        r.read_exact(&mut hdr)
            .map_err(|e| Error::Format(format!("short header: {e}")))?;
        let f = |i: usize| f64::from_le_bytes(hdr[8 * i..8 * i + 8].try_into().unwrap());
        let m = f(0);
        if hdr[32] != TABLE_VERSION {
            return Err(Error::Format(format!("unsupported version {}", hdr[32])));
        }
        if !(m >= 0.0 && m == m.round() && m <= 1e4) {
            return Err(Error::Format(format!("bad level {m}")));
        }
        let m = m as usize;
        let params =
            ParamTriple::new(f(1), f(2), f(3)).map_err(|e| Error::Format(e.to_string()))?;
        let (offsets, total) = Self::layout(m);
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)
            .map_err(|e| Error::Format(e.to_string()))?;
        if bytes.len() != total * 8 {
            return Err(Error::Format(format!(
                "expected {} payload bytes, found {}",
                total * 8,
                bytes.len()
            )));
        }
        let pool = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self {
            params,
            m,
            pool,
            offsets,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let io = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = std::fs::File::create(path).map_err(io)?;
        let mut w = std::io::BufWriter::new(file);
        self.dump(&mut w).map_err(io)?;
        w.flush().map_err(io)
    }

    pub fn open(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::load(std::io::BufReader::new(file))
    }
}

/// Build the `Ĩ` table up to level `M` by the `(m, ℓ)` recursion.
///
/// Each column `(n, k)` is seeded by its `ℓ = 0` entries. Row `m = n` is zero
/// off the diagonal; its diagonal entry comes from the recursion, reading the
/// row `m = n-1` values through symmetry from the previous level's panels.
pub fn build_itilde(m_max: usize, p: &ParamTriple) -> ItildeTable {
    let (offsets, total) = ItildeTable::layout(m_max);
    let mut t = ItildeTable {
        params: *p,
        m: m_max,
        pool: vec![0.0; total],
        offsets,
    };

    // recursion coefficients depend only on (m, ℓ)
    let coeffs: Vec<Vec<(f64, f64, f64)>> = (0..=m_max)
        .map(|m| {
            (0..=m)
                .map(|l| {
                    if l == 0 {
                        (0.0, 0.0, 0.0)
                    } else {
                        recursion_coeffs(m, l, p)
                    }
                })
                .collect()
        })
        .collect();

    for n in 0..=m_max {
        for k in 0..=n {
            // diagonal row m = n
            let diag = if k == 0 {
                itilde_row0_seed(n, n, p)
            } else {
                let (q, d1, _) = coeffs[n][k];
                // Ĩ(n,k-1) vanishes on this row
                q * t.get(n - 1, k, n, k) + d1 * t.get(n - 1, k - 1, n, k)
            };
            let s = t.slot(n, k, n, k);
            t.pool[s] = diag;

            for m in n + 1..=m_max {
                let row = t.slot(m, 0, n, k);
                let prev = t.slot(m - 1, 0, n, k);
                t.pool[row] = if k == 0 {
                    itilde_row0_seed(m, n, p)
                } else {
                    0.0
                };
                for l in 1..=m {
                    let (q, d1, d2) = coeffs[m][l];
                    let up = if l < m { t.pool[prev + l] } else { 0.0 };
                    let up_left = t.pool[prev + l - 1];
                    let left = t.pool[row + l - 1];
                    t.pool[row + l] = q * up + d1 * up_left - d2 * left;
                }
            }
        }
    }
    t
}

/// Which coupling integral an oracle query refers to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleQuery {
    S { l: usize, k: usize },
    STilde { l: usize, k: usize },
    I { ml: LevelIndex, nk: LevelIndex },
    ITilde { ml: LevelIndex, nk: LevelIndex },
}

/// Quadrature value together with its error estimate.
#[derive(Debug, Clone, Copy)]
pub struct OracleValue {
    pub value: f64,
    pub error: f64,
}

/// Evaluate a coupling integral by Gauss–Jacobi quadrature with the endpoint
/// powers absorbed into the rule, so the remaining integrand is polynomial.
pub fn oracle_integral(q: OracleQuery, p: &ParamTriple) -> Result<OracleValue> {
    let (g, b, bg, al) = (p.gamma, p.beta, p.bg(), p.alpha);
    let ang = p.angular();
    // (weight exponents on 1-x and x, polynomial degree, integrand)
    let (ea, eb, deg, f): (f64, f64, usize, Box<dyn Fn(f64) -> f64>) = match q {
        OracleQuery::S { l, k } => (
            g - 1.0,
            b,
            l + k,
            Box::new(move |y| {
                jacobi_eval(l, ang, 2.0 * y - 1.0) * jacobi_eval(k, ang, 2.0 * y - 1.0)
            }),
        ),
        OracleQuery::STilde { l, k } => (
            g,
            b - 1.0,
            l + k,
            Box::new(move |y| {
                jacobi_eval(l, ang, 2.0 * y - 1.0) * jacobi_eval(k, ang, 2.0 * y - 1.0)
            }),
        ),
        OracleQuery::I { ml, nk } | OracleQuery::ITilde { ml, nk } => {
            let (pl, pk) = (p.radial(ml.k), p.radial(nk.k));
            let (d1, d2) = (ml.n - ml.k, nk.n - nk.k);
            let base = (ml.k + nk.k) as f64 + bg;
            let (ea, eb) = if matches!(q, OracleQuery::I { .. }) {
                (base + 1.0, al - 1.0)
            } else {
                (base, al)
            };
            (
                ea,
                eb,
                d1 + d2,
                Box::new(move |x| {
                    jacobi_eval(d1, pl, 2.0 * x - 1.0) * jacobi_eval(d2, pk, 2.0 * x - 1.0)
                }),
            )
        }
    };
    let n0 = deg / 2 + 4;
    let v1 = gauss_jacobi_unit(n0, ea, eb).integrate(&f);
    let v2 = gauss_jacobi_unit(n0 + 4, ea, eb).integrate(&f);
    let error = (v1 - v2).abs();
    let scale = v2.abs().max(1.0);
    if error > 1e-11 * scale {
        return Err(Error::Quadrature { achieved: error });
    }
    Ok(OracleValue { value: v2, error })
}
