//! Gamma-family functions, Jacobi polynomials and Gauss–Jacobi rules.
//!
//! Jacobi polynomials follow the standard normalisation on `[-1, 1]` with
//! weight `(1-u)^a (1+u)^b`. Most of the triangle machinery works on `[0, 1]`
//! through `u = 2x - 1`; [`shifted_norm`] and [`gauss_jacobi_unit`] are the
//! unit-interval counterparts.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Largest integer gap for which [`gamma_ratio`] multiplies directly.
const DIRECT_PRODUCT_LIMIT: f64 = 64.0;

/// `ln Γ(x)` for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("log_gamma requires x > 0, got {x}")));
    }
    Ok(ln_gamma(x))
}

/// Unchecked `ln Γ(x)`; callers guarantee `x > 0`.
#[inline]
pub(crate) fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Beta function `B(x, y)`.
pub fn beta(x: f64, y: f64) -> Result<f64> {
    if !(x > 0.0 && y > 0.0) {
        return Err(Error::Domain(format!(
            "beta requires positive arguments, got ({x}, {y})"
        )));
    }
    Ok(beta_unchecked(x, y))
}

#[inline]
pub(crate) fn beta_unchecked(x: f64, y: f64) -> f64 {
    (ln_gamma(x) + ln_gamma(y) - ln_gamma(x + y)).exp()
}

/// `Γ(a) / Γ(b)` for `a, b > 0`.
///
/// When `a - b` is a small integer the ratio is a finite product and is
/// evaluated exactly that way; otherwise it is formed in log space.
pub fn gamma_ratio(a: f64, b: f64) -> f64 {
    let d = a - b;
    if d == d.round() && d.abs() <= DIRECT_PRODUCT_LIMIT {
        let steps = d.abs() as usize;
        let lo = a.min(b);
        let mut prod = 1.0;
        for j in 0..steps {
            prod *= lo + j as f64;
        }
        return if d >= 0.0 { prod } else { 1.0 / prod };
    }
    (ln_gamma(a) - ln_gamma(b)).exp()
}

/// Pochhammer symbol `(x)_n = Γ(x+n)/Γ(x)`.
pub fn pochhammer(x: f64, n: usize) -> f64 {
    if n as f64 <= DIRECT_PRODUCT_LIMIT {
        (0..n).fold(1.0, |acc, j| acc * (x + j as f64))
    } else {
        gamma_ratio(x + n as f64, x)
    }
}

/// `n!` as a float.
pub fn factorial(n: usize) -> f64 {
    pochhammer(1.0, n)
}

/// Jacobi exponents `(a, b)`, both greater than `-1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiParams {
    pub a: f64,
    pub b: f64,
}

impl JacobiParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > -1.0 && b > -1.0) {
            return Err(Error::InvalidParams(format!(
                "Jacobi parameters must exceed -1, got ({a}, {b})"
            )));
        }
        Ok(Self { a, b })
    }

    /// Construct without validation; for internal use with known-good values.
    #[inline]
    pub(crate) const fn raw(a: f64, b: f64) -> Self {
        Self { a, b }
    }
}

/// `P_n^{(a,b)}(u)` by the ascending three-term recurrence.
pub fn jacobi_eval(n: usize, p: JacobiParams, u: f64) -> f64 {
    let (a, b) = (p.a, p.b);
    if n == 0 {
        return 1.0;
    }
    let mut p0 = 1.0;
    let mut p1 = 0.5 * (a + b + 2.0) * u + 0.5 * (a - b);
    for j in 1..n {
        let p2 = jacobi_step(j, a, b, u, p1, p0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Fill `out[j] = P_j^{(a,b)}(u)` for `j = 0..out.len()`.
pub fn jacobi_all(p: JacobiParams, u: f64, out: &mut [f64]) {
    let (a, b) = (p.a, p.b);
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() == 1 {
        return;
    }
    out[1] = 0.5 * (a + b + 2.0) * u + 0.5 * (a - b);
    for j in 1..out.len() - 1 {
        out[j + 1] = jacobi_step(j, a, b, u, out[j], out[j - 1]);
    }
}

/// One step of the recurrence: returns `P_{j+1}` from `P_j` and `P_{j-1}`.
#[inline]
fn jacobi_step(j: usize, a: f64, b: f64, u: f64, pj: f64, pjm1: f64) -> f64 {
    let n = j as f64;
    let s = 2.0 * n + a + b;
    let c1 = 2.0 * (n + 1.0) * (n + a + b + 1.0) * s;
    let c2 = (s + 1.0) * (a * a - b * b);
    let c3 = s * (s + 1.0) * (s + 2.0);
    let c4 = 2.0 * (n + a) * (n + b) * (s + 2.0);
    ((c2 + c3 * u) * pj - c4 * pjm1) / c1
}

/// `d/du P_n^{(a,b)}(u)`.
pub fn jacobi_deriv(n: usize, p: JacobiParams, u: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let scale = 0.5 * (n as f64 + p.a + p.b + 1.0);
    scale * jacobi_eval(n - 1, JacobiParams::raw(p.a + 1.0, p.b + 1.0), u)
}

/// `h_m = ∫_{-1}^{1} (1-u)^a (1+u)^b [P_m^{(a,b)}(u)]^2 du`.
pub fn jacobi_norm_h(m: usize, p: JacobiParams) -> f64 {
    ((p.a + p.b + 1.0) * std::f64::consts::LN_2).exp() * shifted_norm(m, p)
}

/// `∫_0^1 (1-x)^a x^b [P_m^{(a,b)}(2x-1)]^2 dx`, i.e. `h_m / 2^{a+b+1}`.
pub fn shifted_norm(m: usize, p: JacobiParams) -> f64 {
    let (a, b) = (p.a, p.b);
    let mf = m as f64;
    let ln = ln_gamma(1.0 + a + mf) + ln_gamma(1.0 + b + mf)
        - ln_gamma(mf + 1.0)
        - ln_gamma(1.0 + a + b + mf);
    ln.exp() / (1.0 + a + b + 2.0 * mf)
}

/// Coefficients of the two parameter-shift identities
///
/// `(1-u) P_n^{(a+1,b)} = a_n P_n^{(a,b)} - b_n P_{n+1}^{(a,b)}` and
/// `P_n^{(a+2,b)} = c_n P_{n-1}^{(a+2,b)} + d_n P_n^{(a+1,b)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecurrenceCoeffs {
    pub a_nab: f64,
    pub b_nab: f64,
    pub c_nab: f64,
    pub d_nab: f64,
}

pub fn shift_coeffs(n: usize, p: JacobiParams) -> RecurrenceCoeffs {
    let n = n as f64;
    let (a, b) = (p.a, p.b);
    let s = 2.0 * n + a + b + 2.0;
    RecurrenceCoeffs {
        a_nab: 2.0 * (n + a + 1.0) / s,
        b_nab: 2.0 * (n + 1.0) / s,
        c_nab: (n + b) / (n + a + b + 2.0),
        d_nab: s / (n + a + b + 2.0),
    }
}

/// Nodes and weights of a one-dimensional quadrature rule.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Gauss–Jacobi rule with `n` nodes for the weight `(1-u)^a (1+u)^b` on `[-1, 1]`.
///
/// Nodes come from the Golub–Welsch eigenproblem and are polished by Newton
/// iteration; weights use the closed form in terms of `P_n'`.
pub fn gauss_jacobi(n: usize, p: JacobiParams) -> GaussRule {
    if n == 0 {
        return GaussRule {
            nodes: vec![],
            weights: vec![],
        };
    }
    let (a, b) = (p.a, p.b);
    let mut jm = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let jf = j as f64;
        let s = 2.0 * jf + a + b;
        jm[(j, j)] = if j == 0 {
            (b - a) / (a + b + 2.0)
        } else {
            (b * b - a * a) / (s * (s + 2.0))
        };
        if j + 1 < n {
            let k = jf + 1.0;
            let s = 2.0 * k + a + b;
            let num = 4.0 * k * (k + a) * (k + b) * (k + a + b);
            let den = s * s * (s + 1.0) * (s - 1.0);
            let off = (num / den).sqrt();
            jm[(j, j + 1)] = off;
            jm[(j + 1, j)] = off;
        }
    }
    let eig = SymmetricEigen::new(jm);
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_by(|x, y| x.partial_cmp(y).unwrap());

    for u in nodes.iter_mut() {
        for _ in 0..3 {
            let f = jacobi_eval(n, p, *u);
            let df = jacobi_deriv(n, p, *u);
            if df == 0.0 {
                break;
            }
            let step = f / df;
            *u -= step;
            if step.abs() <= 1e-16 * u.abs().max(1.0) {
                break;
            }
        }
    }

    let nf = n as f64;
    let c = (a + b + 1.0).exp2()
        * gamma_ratio(nf + a + 1.0, nf + a + b + 1.0)
        * gamma_ratio(nf + b + 1.0, nf + 1.0);
    let weights = nodes
        .iter()
        .map(|&u| {
            let d = jacobi_deriv(n, p, u);
            c / ((1.0 - u) * (1.0 + u) * d * d)
        })
        .collect();
    GaussRule { nodes, weights }
}

/// Gauss–Jacobi rule on `[0, 1]` for the weight `(1-x)^a x^b`.
pub fn gauss_jacobi_unit(n: usize, a: f64, b: f64) -> GaussRule {
    let rule = gauss_jacobi(n, JacobiParams::raw(a, b));
    let scale = (-(a + b + 1.0) * std::f64::consts::LN_2).exp();
    GaussRule {
        nodes: rule.nodes.iter().map(|&u| 0.5 * (1.0 + u)).collect(),
        weights: rule.weights.iter().map(|&w| w * scale).collect(),
    }
}

/// Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> GaussRule {
    gauss_jacobi(n, JacobiParams::raw(0.0, 0.0))
}

/// Gauss–Legendre rule on `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> GaussRule {
    gauss_jacobi_unit(n, 0.0, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn log_gamma_known_values() {
        assert_eq!(log_gamma(1.0).unwrap(), 0.0);
        assert!((log_gamma(5.0).unwrap() - 24f64.ln()).abs() < 1e-14);
        let half = std::f64::consts::PI.sqrt().ln();
        assert!(rel(log_gamma(0.5).unwrap(), half) < 1e-14);
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-1.5).is_err());
    }

    #[test]
    fn log_gamma_matches_factorials() {
        let mut fact = 1.0f64;
        for n in 1..=150usize {
            fact *= n as f64;
            let v = log_gamma(n as f64 + 1.0).unwrap();
            assert!(rel(v, fact.ln()) < 1e-14, "n={n}");
        }
    }

    #[test]
    fn log_gamma_duplication_formula() {
        // Γ(x)Γ(x+1/2) = 2^{1-2x} √π Γ(2x)
        for &x in &[1e-3, 0.1, 0.77, 3.3, 41.5, 900.25, 5000.0] {
            let lhs = ln_gamma(x) + ln_gamma(x + 0.5);
            let rhs = (1.0 - 2.0 * x) * std::f64::consts::LN_2
                + 0.5 * std::f64::consts::PI.ln()
                + ln_gamma(2.0 * x);
            assert!((lhs - rhs).abs() <= 1e-14 * lhs.abs().max(1.0), "x={x}");
        }
    }

    #[test]
    fn beta_values() {
        assert!((beta(1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(rel(beta(3.0, 2.0).unwrap(), 1.0 / 12.0) < 1e-15);
        assert!(beta(0.0, 1.0).is_err());
        // oracle: ∫ t^{1.5}(1-t)^{0.5} dt by Gauss–Jacobi with the weight absorbed
        let rule = gauss_jacobi_unit(4, 0.5, 1.5);
        let q = rule.integrate(|_| 1.0);
        assert!(rel(beta(2.5, 1.5).unwrap(), q) < 1e-14);
        // independent oracle: composite Gauss–Legendre after t = s^2 smoothing
        let gl = gauss_legendre_unit(80);
        let mut acc = 0.0;
        let panels = 64;
        for i in 0..panels {
            let (lo, hi) = (i as f64 / panels as f64, (i + 1) as f64 / panels as f64);
            for (&s, &w) in gl.nodes.iter().zip(&gl.weights) {
                let v = lo + (hi - lo) * s;
                // substitute t = 1 - v^2 to regularise the (1-t)^{1/2} endpoint
                let t: f64 = 1.0 - v * v;
                acc += w * (hi - lo) * t.powf(1.5) * v * 2.0 * v;
            }
        }
        assert!(rel(beta(2.5, 1.5).unwrap(), acc) < 1e-12);
    }

    #[test]
    fn gamma_ratio_integer_and_general() {
        assert!(rel(gamma_ratio(7.5, 4.5), 4.5 * 5.5 * 6.5) < 1e-15);
        assert!(rel(gamma_ratio(4.5, 7.5), 1.0 / (4.5 * 5.5 * 6.5)) < 1e-15);
        let g = (ln_gamma(3.7) - ln_gamma(1.2)).exp();
        assert!(rel(gamma_ratio(3.7, 1.2), g) < 1e-14);
    }

    #[test]
    fn pochhammer_small_and_large() {
        assert_eq!(pochhammer(3.0, 3), 60.0);
        assert_eq!(pochhammer(2.5, 0), 1.0);
        let big = pochhammer(0.5, 100);
        let lg = (ln_gamma(100.5) - ln_gamma(0.5)).exp();
        assert!(rel(big, lg) < 1e-12);
    }

    #[test]
    fn jacobi_low_degree() {
        let p = JacobiParams::new(1.3, 0.4).unwrap();
        for &u in &[-1.0, -0.3, 0.0, 0.8, 1.0] {
            assert_eq!(jacobi_eval(0, p, u), 1.0);
            let p1 = (p.a + p.b + 2.0) * u / 2.0 + (p.a - p.b) / 2.0;
            assert!((jacobi_eval(1, p, u) - p1).abs() < 1e-15);
        }
        assert!((jacobi_eval(3, JacobiParams::new(2.0, 2.0).unwrap(), 1.0) - 10.0).abs() < 1e-13);
    }

    #[test]
    fn jacobi_endpoint_identity() {
        for &a in &[0.5, 1.0, 2.0] {
            for &b in &[0.5, 1.0, 2.0] {
                let p = JacobiParams::new(a, b).unwrap();
                for n in 0..=20 {
                    let want = pochhammer(a + 1.0, n) / factorial(n);
                    assert!(
                        rel(jacobi_eval(n, p, 1.0), want) < 1e-12,
                        "a={a} b={b} n={n}"
                    );
                    // reflection: P_n^{(a,b)}(-1) = (-1)^n (b+1)_n / n!
                    let want_m =
                        if n % 2 == 0 { 1.0 } else { -1.0 } * pochhammer(b + 1.0, n) / factorial(n);
                    assert!(rel(jacobi_eval(n, p, -1.0), want_m) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn jacobi_all_matches_single() {
        let p = JacobiParams::new(2.5, 0.7).unwrap();
        let mut buf = vec![0.0; 12];
        jacobi_all(p, 0.37, &mut buf);
        for (n, v) in buf.iter().enumerate() {
            assert_eq!(*v, jacobi_eval(n, p, 0.37));
        }
    }

    #[test]
    fn jacobi_deriv_matches_finite_difference() {
        let p = JacobiParams::new(1.5, 2.0).unwrap();
        let h = 1e-6;
        for n in 0..10 {
            for &u in &[-0.7, 0.1, 0.55] {
                let fd = (jacobi_eval(n, p, u + h) - jacobi_eval(n, p, u - h)) / (2.0 * h);
                assert!((jacobi_deriv(n, p, u) - fd).abs() < 1e-6 * fd.abs().max(1.0));
            }
        }
    }

    #[test]
    fn norm_closed_form() {
        let p00 = JacobiParams::new(0.0, 0.0).unwrap();
        assert!((jacobi_norm_h(0, p00) - 2.0).abs() < 1e-15);
        assert!((jacobi_norm_h(1, p00) - 2.0 / 3.0).abs() < 1e-15);
        // oracle: plain Gauss–Legendre on [-1,1]
        let p = JacobiParams::new(2.0, 1.0).unwrap();
        let gl = gauss_legendre(12);
        let q = gl.integrate(|x| (1.0 - x).powi(2) * (1.0 + x) * jacobi_eval(2, p, x).powi(2));
        assert!(rel(jacobi_norm_h(2, p), q) < 1e-13);
    }

    #[test]
    fn shifted_norm_is_unit_interval_integral() {
        let p = JacobiParams::new(3.0, 1.5).unwrap();
        let rule = gauss_jacobi_unit(12, 3.0, 1.5);
        for m in 0..6 {
            let q = rule.integrate(|x| jacobi_eval(m, p, 2.0 * x - 1.0).powi(2));
            assert!(rel(shifted_norm(m, p), q) < 1e-13);
        }
    }

    #[test]
    fn orthogonality_under_gauss_jacobi() {
        for &(a, b) in &[(0.5, 1.0), (2.0, 0.5), (1.0, 1.0)] {
            let p = JacobiParams::new(a, b).unwrap();
            let rule = gauss_jacobi(20, p);
            for m in 0..=12 {
                for n in 0..m {
                    let ip = rule.integrate(|u| jacobi_eval(m, p, u) * jacobi_eval(n, p, u));
                    let scale = (jacobi_norm_h(m, p) * jacobi_norm_h(n, p)).sqrt();
                    assert!(ip.abs() <= 1e-10 * scale, "m={m} n={n} ip={ip}");
                }
            }
        }
    }

    #[test]
    fn shift_coeff_values() {
        let c = shift_coeffs(0, JacobiParams::new(0.0, 0.0).unwrap());
        assert_eq!((c.a_nab, c.b_nab, c.c_nab, c.d_nab), (1.0, 1.0, 0.0, 1.0));
        let c = shift_coeffs(3, JacobiParams::new(5.0, 2.0).unwrap());
        assert!((c.a_nab - 1.2).abs() < 1e-15);
        assert!(c.b_nab > 0.0 && c.d_nab > 0.0);
    }

    #[test]
    fn shift_identity_residual() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for &(a, b) in &[(0.5, 1.0), (3.0, 2.0), (6.0, 0.5)] {
            let p = JacobiParams::new(a, b).unwrap();
            let p2 = JacobiParams::new(a + 2.0, b).unwrap();
            for n in 0..=15usize {
                let c = shift_coeffs(n, p);
                for _ in 0..20 {
                    let u: f64 = rng.gen_range(-1.0..1.0);
                    let prev = if n == 0 {
                        0.0
                    } else {
                        jacobi_eval(n - 1, p2, u)
                    };
                    let lhs = (1.0 - u) * jacobi_eval(n, p2, u);
                    let rhs = c.c_nab * (1.0 - u) * prev + c.d_nab * c.a_nab * jacobi_eval(n, p, u)
                        - c.d_nab * c.b_nab * jacobi_eval(n + 1, p, u);
                    assert!(
                        (lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0),
                        "n={n} a={a}"
                    );
                }
            }
        }
    }

    #[test]
    fn gauss_jacobi_exactness() {
        let rule = gauss_jacobi_unit(6, 1.5, 0.5);
        // ∫ (1-x)^{1.5} x^{0.5} x^j dx = B(1.5 + j, 2.5), exact for j ≤ 11
        for j in 0..=11 {
            let q = rule.integrate(|x| x.powi(j));
            let want = beta(1.5 + j as f64, 2.5).unwrap();
            assert!(rel(q, want) < 1e-13, "j={j}");
        }
        let gl = gauss_legendre(64);
        assert!((gl.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }
}
