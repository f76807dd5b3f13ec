//! Named test functions and matrix–vector strategies.

use std::f64::consts::PI;

use crate::diffmat::DiffOperator;
use crate::error::Result;
use crate::fast_apply::{CoeffVector, OpCounter};

/// A scalar field on the reference triangle.
pub trait TestFunction: Sync {
    fn name(&self) -> &'static str;
    fn formula(&self) -> &'static str;
    fn eval(&self, x: f64, y: f64) -> f64;
}

/// `e^{x-2y} √(x y (1-x-y))`, weakly singular along the boundary.
pub struct SqrtExp;

/// `x (1 - e^y) sin(π(1-x-y))`, analytic and zero on the boundary.
pub struct SineProduct;

/// `x y (1-x-y) e^x cos 2y`, a cubic bubble times an entire function.
pub struct Bubble;

impl TestFunction for SqrtExp {
    fn name(&self) -> &'static str {
        "ex1_sqrt"
    }
    fn formula(&self) -> &'static str {
        "exp(x-2y)*sqrt(x*y*(1-x-y))"
    }
    fn eval(&self, x: f64, y: f64) -> f64 {
        (x - 2.0 * y).exp() * (x * y * (1.0 - x - y)).max(0.0).sqrt()
    }
}

impl TestFunction for SineProduct {
    fn name(&self) -> &'static str {
        "ex3_sine"
    }
    fn formula(&self) -> &'static str {
        "x*(1-exp(y))*sin(pi*(1-x-y))"
    }
    fn eval(&self, x: f64, y: f64) -> f64 {
        x * (1.0 - y.exp()) * (PI * (1.0 - x - y)).sin()
    }
}

impl TestFunction for Bubble {
    fn name(&self) -> &'static str {
        "custom"
    }
    fn formula(&self) -> &'static str {
        "x*y*(1-x-y)*exp(x)*cos(2y)"
    }
    fn eval(&self, x: f64, y: f64) -> f64 {
        x * y * (1.0 - x - y) * x.exp() * (2.0 * y).cos()
    }
}

/// `1`, boundary data for lift checks.
pub struct Constant;

/// `1 + 2x - 3y`.
pub struct Affine;

/// `e^x cos 2y`.
pub struct ExpCos;

impl TestFunction for Constant {
    fn name(&self) -> &'static str {
        "constant"
    }
    fn formula(&self) -> &'static str {
        "1"
    }
    fn eval(&self, _: f64, _: f64) -> f64 {
        1.0
    }
}

impl TestFunction for Affine {
    fn name(&self) -> &'static str {
        "affine"
    }
    fn formula(&self) -> &'static str {
        "1+2x-3y"
    }
    fn eval(&self, x: f64, y: f64) -> f64 {
        1.0 + 2.0 * x - 3.0 * y
    }
}

impl TestFunction for ExpCos {
    fn name(&self) -> &'static str {
        "exp_cos"
    }
    fn formula(&self) -> &'static str {
        "exp(x)*cos(2y)"
    }
    fn eval(&self, x: f64, y: f64) -> f64 {
        x.exp() * (2.0 * y).cos()
    }
}

static TEST_FUNCTIONS: [&dyn TestFunction; 6] =
    [&SqrtExp, &SineProduct, &Bubble, &Constant, &Affine, &ExpCos];

pub fn test_function(name: &str) -> Option<&'static dyn TestFunction> {
    TEST_FUNCTIONS.iter().copied().find(|f| f.name() == name)
}

pub fn test_function_names() -> Vec<&'static str> {
    TEST_FUNCTIONS.iter().map(|f| f.name()).collect()
}

/// A way of computing `A v` for an assembled operator.
pub trait MatvecStrategy: Sync {
    fn name(&self) -> &'static str;
    fn apply(&self, op: &DiffOperator, v: &CoeffVector, ctr: &mut OpCounter)
        -> Result<CoeffVector>;
}

/// Plain dense product; the counter records `D²` multiply–adds.
pub struct Dense;

/// Linear-cost product through the structured factors.
pub struct Fast;

impl MatvecStrategy for Dense {
    fn name(&self) -> &'static str {
        "dense"
    }
    fn apply(
        &self,
        op: &DiffOperator,
        v: &CoeffVector,
        ctr: &mut OpCounter,
    ) -> Result<CoeffVector> {
        let out = op.apply_dense(v)?;
        ctr.fma += (op.dim() * op.dim()) as u64;
        Ok(out)
    }
}

impl MatvecStrategy for Fast {
    fn name(&self) -> &'static str {
        "fast"
    }
    fn apply(
        &self,
        op: &DiffOperator,
        v: &CoeffVector,
        ctr: &mut OpCounter,
    ) -> Result<CoeffVector> {
        op.apply(v, ctr)
    }
}

static MATVEC_STRATEGIES: [&dyn MatvecStrategy; 2] = [&Dense, &Fast];

pub fn matvec_strategy(name: &str) -> Option<&'static dyn MatvecStrategy> {
    MATVEC_STRATEGIES.iter().copied().find(|s| s.name() == name)
}
