//! Classical Runge–Kutta integration of `a' = X a`.

use crate::diffmat::DiffOperator;
use crate::error::{Error, Result};
use crate::fast_apply::{CoeffVector, OpCounter};
use crate::registry::MatvecStrategy;

/// One RK4 step of size `dt`.
pub fn rk4_step(
    op: &DiffOperator,
    mv: &dyn MatvecStrategy,
    a: &CoeffVector,
    dt: f64,
    ctr: &mut OpCounter,
) -> Result<CoeffVector> {
    let k1 = mv.apply(op, a, ctr)?;
    let mut s = a.clone();
    s.axpy(0.5 * dt, &k1);
    let k2 = mv.apply(op, &s, ctr)?;
    s.clone_from(a);
    s.axpy(0.5 * dt, &k2);
    let k3 = mv.apply(op, &s, ctr)?;
    s.clone_from(a);
    s.axpy(dt, &k3);
    let k4 = mv.apply(op, &s, ctr)?;
    let mut out = a.clone();
    out.axpy(dt / 6.0, &k1);
    out.axpy(dt / 3.0, &k2);
    out.axpy(dt / 3.0, &k3);
    out.axpy(dt / 6.0, &k4);
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// `(t, ‖a(t)‖₂)` after every step, starting at `t = 0`.
    pub norms: Vec<(f64, f64)>,
    pub last: CoeffVector,
}

impl Trajectory {
    /// `‖a(T)‖ - ‖a(0)‖`.
    pub fn drift(&self) -> f64 {
        self.norms.last().unwrap().1 - self.norms[0].1
    }

    pub fn relative_drift(&self) -> f64 {
        self.drift() / self.norms[0].1
    }
}

/// Integrate from `0` to `t_final`; the last step is shortened to land on it.
pub fn evolve(
    op: &DiffOperator,
    mv: &dyn MatvecStrategy,
    a0: &CoeffVector,
    dt: f64,
    t_final: f64,
) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "time step must be positive, got {dt}"
        )));
    }
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "final time must be nonnegative, got {t_final}"
        )));
    }
    let mut ctr = OpCounter::default();
    let mut a = a0.clone();
    let mut norms = vec![(0.0, a.norm2())];
    let n_full = (t_final / dt * (1.0 + 1e-12)).floor() as usize;
    for i in 1..=n_full {
        a = rk4_step(op, mv, &a, dt, &mut ctr)?;
        norms.push((i as f64 * dt, a.norm2()));
    }
    let rest = t_final - n_full as f64 * dt;
    if rest > 1e-12 * dt {
        a = rk4_step(op, mv, &a, rest, &mut ctr)?;
        norms.push((t_final, a.norm2()));
    }
    Ok(Trajectory { norms, last: a })
}
